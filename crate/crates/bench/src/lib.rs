//! Shared fixtures for the benchmarks in `benches/`.

use metahmm::{
    generate_bank, generate_dataset, DatasetPlan, EnvironmentBank, EnvironmentConfig, LengthMode, SequenceRecord,
};

/// The standard environment and `count` sequences of length `len` drawn
/// from uniformly chosen tasks.
pub fn standard_fixture(count: usize, len: usize) -> (EnvironmentBank, Vec<SequenceRecord>) {
    let bank = generate_bank(&EnvironmentConfig::standard(0)).expect("standard environment generates");
    let tasks: Vec<u64> = (0..bank.size()).collect();
    let seqs = generate_dataset(&bank, &tasks, DatasetPlan::Total(count), LengthMode::Fixed(len), 0)
        .expect("dataset generates");
    (bank, seqs)
}
