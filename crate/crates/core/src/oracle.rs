//! Exact Bayesian filtering over a set of tasks.
//!
//! For every task the state keeps the log forward message
//! `log_alpha[s] = log p(x_{<t}, s_t = s | task)` and its normalizer
//! `log_evidence = log p(x_{<t} | task)`. The task posterior is
//! `softmax(log_prior + log_evidence)`; the posterior predictive mixes each
//! task's next-symbol distribution with those weights.
//!
//! Tasks whose evidence drops to zero are removed from the support; if the
//! whole support vanishes the state is poisoned and every later call fails
//! with [`Error::ImpossibleEvidence`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bank::EnvironmentBank;
use crate::code::LatentCode;
use crate::error::{Error, Result};
use crate::hmm::SparseHmm;
use crate::logspace::{entropy_nats, log_sum_exp, log_sum_exp_iter};
use crate::rng::KeyedRng;

/// Compiled sparse models for a subset of an environment's tasks.
#[derive(Debug, Clone)]
pub struct TaskSet {
    indices: Vec<u64>,
    models: Vec<SparseHmm>,
    symbols: usize,
    states: usize,
}

impl TaskSet {
    pub fn new(bank: &EnvironmentBank, subset: &[u64]) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::Argument("task subset is empty".into()));
        }
        let size = bank.size();
        if let Some(&bad) = subset.iter().find(|&&i| i >= size) {
            return Err(Error::Range { what: "task index", value: bad, bound: size });
        }
        let models = subset
            .par_iter()
            .map(|&i| bank.hmm_at(i).map(|h| SparseHmm::from_dense(&h)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { indices: subset.to_vec(), models, symbols: bank.config.symbols, states: bank.config.hidden_states })
    }

    pub fn all(bank: &EnvironmentBank) -> Result<Self> {
        let subset: Vec<u64> = (0..bank.size()).collect();
        Self::new(bank, &subset)
    }

    pub fn from_models(indices: Vec<u64>, models: Vec<SparseHmm>) -> Result<Self> {
        let first = models.first().ok_or_else(|| Error::Argument("task subset is empty".into()))?;
        let (states, symbols) = (first.states(), first.symbols());
        if indices.len() != models.len() || models.iter().any(|m| m.states() != states || m.symbols() != symbols) {
            return Err(Error::Argument("task models disagree in shape".into()));
        }
        Ok(Self { indices, models, symbols, states })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn states(&self) -> usize {
        self.states
    }
}

/// Task posterior, predictive and posterior entropy at one position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSnapshot {
    pub task_posterior: Vec<f64>,
    pub predictive: Vec<f64>,
    pub entropy_nats: f64,
}

/// Predictive and entropy only; what the streaming pipeline keeps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub predictive: Vec<f64>,
    pub entropy_nats: f64,
}

#[derive(Debug, Clone)]
pub struct OracleState<'a> {
    tasks: &'a TaskSet,
    log_prior: Vec<f64>,
    log_alpha: Vec<f64>,
    log_evidence: Vec<f64>,
    alive: Vec<usize>,
    position: usize,
    poisoned: bool,
}

/// Number of Monte Carlo samples, or the exact posterior-weighted sum over
/// every task in the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McSamples {
    Count(usize),
    Exact,
}

impl<'a> OracleState<'a> {
    /// Starts filtering with a uniform prior, or `prior` if given.
    pub fn new(tasks: &'a TaskSet, prior: Option<&[f64]>) -> Result<Self> {
        let k = tasks.len();
        if k == 0 {
            return Err(Error::Argument("task subset is empty".into()));
        }
        let log_prior: Vec<f64> = match prior {
            None => vec![-(k as f64).ln(); k],
            Some(p) => {
                if p.len() != k {
                    return Err(Error::Argument(format!("prior has {} entries for {k} tasks", p.len())));
                }
                if p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                    return Err(Error::Argument("prior has negative or non-finite entries".into()));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Argument(format!("prior sums to {sum}, not 1")));
                }
                p.iter().map(|x| x.ln()).collect()
            }
        };
        let n = tasks.states();
        let mut log_alpha = Vec::with_capacity(k * n);
        for model in &tasks.models {
            log_alpha.extend_from_slice(&model.log_initial);
        }
        let alive = (0..k).filter(|&i| log_prior[i] > f64::NEG_INFINITY).collect();
        Ok(Self { tasks, log_prior, log_alpha, log_evidence: vec![0.0; k], alive, position: 0, poisoned: false })
    }

    pub fn tasks(&self) -> &TaskSet {
        self.tasks
    }

    /// Number of symbols conditioned on so far.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn log_alpha(&self, task: usize) -> &[f64] {
        let n = self.tasks.states();
        &self.log_alpha[task * n..(task + 1) * n]
    }

    pub fn log_evidence(&self) -> &[f64] {
        &self.log_evidence
    }

    /// Positions into the task set that still carry posterior mass.
    pub fn support(&self) -> &[usize] {
        &self.alive
    }

    fn ensure_live(&self, symbol: usize) -> Result<()> {
        if self.poisoned {
            return Err(Error::ImpossibleEvidence { position: self.position, symbol, snapshot: None });
        }
        Ok(())
    }

    /// Posterior weights of the live tasks, in `support()` order.
    fn live_weights(&self) -> Vec<f64> {
        let log_w: Vec<f64> = self.alive.iter().map(|&i| self.log_prior[i] + self.log_evidence[i]).collect();
        let norm = log_sum_exp(&log_w);
        log_w.into_iter().map(|w| (w - norm).exp()).collect()
    }

    pub fn posterior(&self) -> Result<Vec<f64>> {
        self.ensure_live(0)?;
        let mut out = vec![0.0; self.tasks.len()];
        for (&i, w) in self.alive.iter().zip(self.live_weights()) {
            out[i] = w;
        }
        Ok(out)
    }

    /// Adds `weight * p(x_t = . | x_{<t}, task)` into `out`.
    fn accumulate_conditional(&self, task: usize, weight: f64, out: &mut [f64]) {
        let model = &self.tasks.models[task];
        let ev = self.log_evidence[task];
        for (s, &la) in self.log_alpha(task).iter().enumerate() {
            let a = (la - ev).exp();
            if a == 0.0 {
                continue;
            }
            for (v, p) in model.emissions(s) {
                out[v] += weight * a * p;
            }
        }
    }

    /// Next-symbol distribution of a single task in the set.
    pub fn conditional(&self, task: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.tasks.symbols()];
        self.accumulate_conditional(task, 1.0, &mut out);
        out
    }

    fn predictive_and_entropy(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let weights = self.live_weights();
        let mut predictive = vec![0.0; self.tasks.symbols()];
        for (&i, &w) in self.alive.iter().zip(&weights) {
            self.accumulate_conditional(i, w, &mut predictive);
        }
        let entropy = entropy_nats(&weights);
        (weights, predictive, entropy)
    }

    /// `p(x_t | x_{<t})` under the current posterior.
    pub fn predictive(&self) -> Result<Vec<f64>> {
        self.ensure_live(0)?;
        Ok(self.predictive_and_entropy().1)
    }

    pub fn entropy_nats(&self) -> Result<f64> {
        self.ensure_live(0)?;
        Ok(entropy_nats(&self.live_weights()))
    }

    /// Reports the snapshot for the current position, then conditions on
    /// `symbol` and moves to the next position.
    pub fn step(&mut self, symbol: usize) -> Result<PosteriorSnapshot> {
        self.ensure_live(symbol)?;
        self.check_symbol(symbol)?;
        let (weights, predictive, entropy_nats) = self.predictive_and_entropy();
        let mut task_posterior = vec![0.0; self.tasks.len()];
        for (&i, w) in self.alive.iter().zip(weights) {
            task_posterior[i] = w;
        }
        let snapshot = PosteriorSnapshot { task_posterior, predictive, entropy_nats };
        match self.condition(symbol) {
            Ok(()) => Ok(snapshot),
            Err(Error::ImpossibleEvidence { position, symbol, .. }) => {
                Err(Error::ImpossibleEvidence { position, symbol, snapshot: Some(Box::new(snapshot)) })
            }
            Err(e) => Err(e),
        }
    }

    /// Like [`OracleState::step`] without materializing the full posterior.
    pub fn advance(&mut self, symbol: usize) -> Result<StepOutput> {
        self.ensure_live(symbol)?;
        self.check_symbol(symbol)?;
        let (_, predictive, entropy_nats) = self.predictive_and_entropy();
        self.condition(symbol)?;
        Ok(StepOutput { predictive, entropy_nats })
    }

    fn check_symbol(&self, symbol: usize) -> Result<()> {
        if symbol >= self.tasks.symbols() {
            return Err(Error::Range { what: "symbol", value: symbol as u64, bound: self.tasks.symbols() as u64 });
        }
        Ok(())
    }

    fn condition(&mut self, symbol: usize) -> Result<()> {
        let n = self.tasks.states();
        let mut post = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut survivors = Vec::with_capacity(self.alive.len());
        for &i in &self.alive {
            let model = &self.tasks.models[i];
            let alpha = &mut self.log_alpha[i * n..(i + 1) * n];
            for (s, slot) in post.iter_mut().enumerate() {
                *slot = if alpha[s] == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    alpha[s] + model.log_emission(s, symbol)
                };
            }
            let joint = log_sum_exp_iter(post.iter().copied());
            if joint == f64::NEG_INFINITY {
                self.log_evidence[i] = f64::NEG_INFINITY;
                continue;
            }
            // log p(x_t | x_{<t}, task) is a log-probability; never positive.
            let increment = (joint - self.log_evidence[i]).min(0.0);
            self.log_evidence[i] += increment;
            model.propagate(&post, &mut next);
            alpha.copy_from_slice(&next);
            survivors.push(i);
        }
        self.alive = survivors;
        let position = self.position;
        self.position += 1;
        if self.alive.is_empty() {
            self.poisoned = true;
            return Err(Error::ImpossibleEvidence { position, symbol, snapshot: None });
        }
        Ok(())
    }
}

/// Runs the oracle over `symbols`, one snapshot per position.
pub fn oracle_run(tasks: &TaskSet, prior: Option<&[f64]>, symbols: &[usize]) -> Result<Vec<PosteriorSnapshot>> {
    let mut state = OracleState::new(tasks, prior)?;
    symbols.iter().map(|&x| state.step(x)).collect()
}

/// Single-task predictive `p(x_t | prefix, task)` for the next position.
pub fn conditional_predictive(bank: &EnvironmentBank, code: &LatentCode, prefix: &[usize]) -> Result<Vec<f64>> {
    let index = bank.code_space().code_to_index(code)?;
    let tasks = TaskSet::new(bank, &[index])?;
    let mut state = OracleState::new(&tasks, None)?;
    for (position, &symbol) in prefix.iter().enumerate() {
        match state.advance(symbol) {
            Ok(_) => {}
            Err(Error::ImpossibleEvidence { .. }) => {
                return Err(Error::ImpossiblePrefix { task: index, position, symbol })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(state.conditional(0))
}

/// Monte Carlo posterior predictive: the average next-symbol distribution of
/// tasks drawn i.i.d. from the current exact posterior. Deterministic in
/// `rng_seed` and the state's position.
pub fn mc_predict(state: &OracleState<'_>, samples: McSamples, rng_seed: u64) -> Result<Vec<f64>> {
    state.ensure_live(0)?;
    let weights = state.live_weights();
    let v = state.tasks.symbols();
    match samples {
        McSamples::Exact => {
            let mut out = vec![0.0; v];
            for (&i, &w) in state.alive.iter().zip(&weights) {
                let cond = state.conditional(i);
                out.iter_mut().zip(cond).for_each(|(o, c)| *o += w * c);
            }
            Ok(out)
        }
        McSamples::Count(0) => Err(Error::Argument("sample count must be at least 1".into())),
        McSamples::Count(s) => {
            let cumulative: Vec<f64> = weights
                .iter()
                .scan(0.0, |acc, &w| {
                    *acc += w;
                    Some(*acc)
                })
                .collect();
            let mut rng = KeyedRng::new(rng_seed, "mc", &[state.position() as u64]);
            let mut counts = vec![0usize; weights.len()];
            for _ in 0..s {
                counts[rng.categorical(&cumulative)] += 1;
            }
            let mut out = vec![0.0; v];
            for (slot, &c) in counts.iter().enumerate() {
                if c > 0 {
                    state.accumulate_conditional(state.alive[slot], c as f64 / s as f64, &mut out);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::config::EnvironmentConfig;
    use crate::hmm::{Hmm, Matrix};

    fn config48() -> EnvironmentConfig {
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
            emission_smoothing: 0.0,
            seed: 0,
        }
    }

    fn cycle_task(n: usize) -> TaskSet {
        let mut transition = Matrix::zeros(n, n);
        let mut emission = Matrix::zeros(n, n);
        for i in 0..n {
            transition.set(i, (i + 1) % n, 1.0);
            emission.set(i, i, 1.0);
        }
        let hmm = Hmm { transition, emission, initial: vec![1.0 / n as f64; n] };
        TaskSet::from_models(vec![0], vec![SparseHmm::from_dense(&hmm)]).unwrap()
    }

    #[test]
    fn initial_posterior_is_prior() {
        let bank = EnvironmentBank::generate(&config48()).unwrap();
        let tasks = TaskSet::all(&bank).unwrap();
        let state = OracleState::new(&tasks, None).unwrap();
        let post = state.posterior().unwrap();
        assert!(post.iter().all(|&p| (p - 1.0 / 48.0).abs() < 1e-15));
        assert!((state.entropy_nats().unwrap() - 48f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_prior_is_absorbing() {
        let bank = EnvironmentBank::generate(&config48()).unwrap();
        let tasks = TaskSet::all(&bank).unwrap();
        let mut prior = vec![0.0; 48];
        prior[0] = 0.5;
        prior[1] = 0.5;
        let mut state = OracleState::new(&tasks, Some(&prior)).unwrap();
        let traj = crate::hmm::sample_sequence(&bank.hmm_at(1).unwrap(), 12, 4);
        for &x in &traj.symbols {
            let snap = state.step(x).unwrap();
            assert!(snap.task_posterior[2..].iter().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn rejects_bad_priors_and_empty_subsets() {
        let bank = EnvironmentBank::generate(&config48()).unwrap();
        assert!(TaskSet::new(&bank, &[]).is_err());
        assert!(TaskSet::new(&bank, &[48]).is_err());
        let tasks = TaskSet::new(&bank, &[0, 1]).unwrap();
        assert!(OracleState::new(&tasks, Some(&[0.5, 0.4])).is_err());
        assert!(OracleState::new(&tasks, Some(&[1.0])).is_err());
    }

    #[test]
    fn cycle_predicts_next_symbol() {
        let tasks = cycle_task(5);
        let mut state = OracleState::new(&tasks, None).unwrap();
        let first = state.step(2).unwrap();
        assert!(first.predictive.iter().all(|&p| (p - 0.2).abs() < 1e-15));
        let second = state.step(3).unwrap();
        assert_eq!(second.predictive, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn impossible_evidence_is_reported_with_snapshot() {
        let tasks = cycle_task(3);
        let mut state = OracleState::new(&tasks, None).unwrap();
        state.step(0).unwrap();
        match state.step(0) {
            Err(Error::ImpossibleEvidence { position: 1, symbol: 0, snapshot: Some(snap) }) => {
                assert_eq!(snap.predictive, vec![0.0, 1.0, 0.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(state.step(1), Err(Error::ImpossibleEvidence { snapshot: None, .. })));
        assert!(mc_predict(&state, McSamples::Count(3), 0).is_err());
    }

    #[test]
    fn uniform_emissions_give_uniform_predictive() {
        let config = EnvironmentConfig { emission_smoothing: 1.0, ..config48() };
        let bank = EnvironmentBank::generate(&config).unwrap();
        let tasks = TaskSet::all(&bank).unwrap();
        let symbols = [0, 5, 3, 3, 1, 2, 4];
        for snap in oracle_run(&tasks, None, &symbols).unwrap() {
            assert!(snap.predictive.iter().all(|&p| (p - 1.0 / 6.0).abs() < 1e-12));
        }
    }

    #[test]
    fn out_of_range_symbol() {
        let tasks = cycle_task(3);
        let mut state = OracleState::new(&tasks, None).unwrap();
        assert!(matches!(state.step(3), Err(Error::Range { .. })));
    }

    #[test]
    fn empty_input_empty_output() {
        let tasks = cycle_task(3);
        assert!(oracle_run(&tasks, None, &[]).unwrap().is_empty());
    }

    #[test]
    fn point_mass_mc_equals_conditional() {
        let bank = EnvironmentBank::generate(&config48()).unwrap();
        let tasks = TaskSet::all(&bank).unwrap();
        let mut prior = vec![0.0; 48];
        prior[17] = 1.0;
        let mut state = OracleState::new(&tasks, Some(&prior)).unwrap();
        let traj = crate::hmm::sample_sequence(&bank.hmm_at(17).unwrap(), 5, 1);
        for &x in &traj.symbols {
            for s in [1, 7, 50] {
                assert_eq!(mc_predict(&state, McSamples::Count(s), 9).unwrap(), state.conditional(17));
            }
            state.advance(x).unwrap();
        }
    }

    #[test]
    fn exact_mode_matches_oracle() {
        let bank = EnvironmentBank::generate(&EnvironmentConfig { emission_smoothing: 0.2, ..config48() }).unwrap();
        let tasks = TaskSet::all(&bank).unwrap();
        let mut state = OracleState::new(&tasks, None).unwrap();
        let traj = crate::hmm::sample_sequence(&bank.hmm_at(30).unwrap(), 20, 2);
        for &x in &traj.symbols {
            let exact = mc_predict(&state, McSamples::Exact, 0).unwrap();
            let oracle = state.predictive().unwrap();
            for (a, b) in exact.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12);
            }
            state.advance(x).unwrap();
        }
    }

    #[test]
    fn zero_samples_rejected() {
        let tasks = cycle_task(3);
        let state = OracleState::new(&tasks, None).unwrap();
        assert!(mc_predict(&state, McSamples::Count(0), 0).is_err());
    }

    #[test]
    fn conditional_predictive_single_task() {
        let config = config48();
        let bank = EnvironmentBank::generate(&config).unwrap();
        let code = bank.code_space().index_to_code(11).unwrap();
        let traj = crate::hmm::sample_sequence(&bank.hmm_at(11).unwrap(), 6, 8);
        let tasks = TaskSet::new(&bank, &[11]).unwrap();
        let snaps = oracle_run(&tasks, None, &traj.symbols).unwrap();
        for t in 0..traj.symbols.len() {
            let p = conditional_predictive(&bank, &code, &traj.symbols[..t]).unwrap();
            assert_eq!(p, snaps[t].predictive);
        }
    }

    #[test]
    fn conditional_predictive_impossible_prefix() {
        let bank = EnvironmentBank::generate(&config48()).unwrap();
        let hmm = bank.hmm_at(0).unwrap();
        // a symbol no state of task 0 emits
        let unused = (0..6).find(|&v| (0..4).all(|s| hmm.emission.get(s, v) == 0.0)).unwrap();
        let code = bank.code_space().index_to_code(0).unwrap();
        assert!(matches!(
            conditional_predictive(&bank, &code, &[unused]),
            Err(Error::ImpossiblePrefix { task: 0, position: 0, .. })
        ));
    }

    #[test]
    fn uniform_task_conditional_is_uniform() {
        let config = EnvironmentConfig { emission_smoothing: 1.0, ..config48() };
        let bank = EnvironmentBank::generate(&config).unwrap();
        let code = bank.code_space().index_to_code(3).unwrap();
        let p = conditional_predictive(&bank, &code, &[1, 2, 3]).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 6.0).abs() < 1e-12));
    }
}
