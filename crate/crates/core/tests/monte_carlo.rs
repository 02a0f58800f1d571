use metahmm::{
    div, generate_bank, mc_predict, oracle_run, sample_sequence, EnvironmentConfig, McSamples, OracleState, TaskSet,
};

fn config48(smoothing: f64) -> EnvironmentConfig {
    EnvironmentConfig {
        hidden_states: 4,
        symbols: 6,
        base_cycles: 2,
        base_step_sizes: 1,
        base_directions: 2,
        families: 1,
        groups_per_family: 2,
        family_directions: 1,
        family_step_sizes: 1,
        emission_groups: 1,
        emissions_per_group: 3,
        shifts: 2,
        emission_smoothing: smoothing,
        seed: 0,
    }
}

#[test]
fn single_sample_mean_is_unbiased() {
    let bank = generate_bank(&config48(0.3)).unwrap();
    let tasks = TaskSet::all(&bank).unwrap();
    let symbols = sample_sequence(&bank.hmm_at(21).unwrap(), 3, 5).symbols;
    let mut state = OracleState::new(&tasks, None).unwrap();
    for &x in &symbols {
        state.advance(x).unwrap();
    }
    let oracle = state.predictive().unwrap();

    let draws = 10_000;
    let v = oracle.len();
    let mut sum = vec![0.0; v];
    let mut sum_sq = vec![0.0; v];
    for seed in 0..draws {
        let p = mc_predict(&state, McSamples::Count(1), seed).unwrap();
        for i in 0..v {
            sum[i] += p[i];
            sum_sq[i] += p[i] * p[i];
        }
    }
    let n = draws as f64;
    for i in 0..v {
        let mean = sum[i] / n;
        let var = (sum_sq[i] / n - mean * mean) * n / (n - 1.0);
        let se = (var.max(0.0) / n).sqrt();
        assert!(
            (mean - oracle[i]).abs() <= (3.0 * se).max(1e-12),
            "symbol {i}: mc mean {mean}, oracle {}, se {se}",
            oracle[i]
        );
    }
}

#[test]
fn divergence_shrinks_with_sample_count() {
    let bank = generate_bank(&config48(0.1)).unwrap();
    let tasks = TaskSet::all(&bank).unwrap();
    let symbols = sample_sequence(&bank.hmm_at(9).unwrap(), 2, 1).symbols;
    let mut state = OracleState::new(&tasks, None).unwrap();
    for &x in &symbols {
        state.advance(x).unwrap();
    }
    let oracle = state.predictive().unwrap();
    let mean_div = |s: usize| {
        (0..100u64)
            .map(|seed| div(&mc_predict(&state, McSamples::Count(s), seed).unwrap(), &oracle).unwrap())
            .sum::<f64>()
            / 100.0
    };
    let (d10, d100, d1000) = (mean_div(10), mean_div(100), mean_div(1000));
    assert!(d10 > d100 && d100 > d1000, "{d10} {d100} {d1000}");
    assert!(d1000 > 0.0);
}

#[test]
fn mc_is_seeded() {
    let bank = generate_bank(&config48(0.1)).unwrap();
    let tasks = TaskSet::all(&bank).unwrap();
    let state = OracleState::new(&tasks, None).unwrap();
    let a = mc_predict(&state, McSamples::Count(7), 3).unwrap();
    assert_eq!(a, mc_predict(&state, McSamples::Count(7), 3).unwrap());
    assert_ne!(a, mc_predict(&state, McSamples::Count(7), 4).unwrap());
    assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn posterior_concentrates_on_true_task() {
    let bank = generate_bank(&EnvironmentConfig::standard(0)).unwrap();
    let tasks = TaskSet::all(&bank).unwrap();
    for s in 0..50u64 {
        let task = (s * 241) % bank.size();
        let symbols = sample_sequence(&bank.hmm_at(task).unwrap(), 200, s).symbols;
        let snaps = oracle_run(&tasks, None, &symbols).unwrap();
        let last = snaps.last().unwrap();
        assert!(
            last.task_posterior[task as usize] > 0.99,
            "sequence {s}: posterior on true task {task} is {}",
            last.task_posterior[task as usize]
        );
        assert!(snaps.iter().all(|x| x.entropy_nats.is_finite()));
    }
}
