//! Batch drivers: run a predictor over many sequences in parallel.
//!
//! Work is split by sequence only; every per-sequence computation is
//! sequential and results are collected in input order, so outputs are
//! bit-identical for any worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::Curve;
use crate::io::{PredictionRecord, SequenceRecord};
use crate::oracle::{mc_predict, McSamples, OracleState, TaskSet};
use crate::rng::KeyedRng;

/// Oracle outputs for one sequence, one entry per position.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTrace {
    pub sequence_id: u64,
    pub predictive: Vec<Vec<f64>>,
    pub entropy_nats: Vec<f64>,
}

impl SequenceTrace {
    pub fn records(&self) -> impl Iterator<Item = PredictionRecord> + '_ {
        self.predictive.iter().enumerate().map(|(t, p)| PredictionRecord::from_f64(self.sequence_id, t as u32, p))
    }
}

fn with_sequence(err: Error, id: u64) -> Error {
    match err {
        Error::ImpossibleEvidence { position, symbol, .. } => Error::Numerical(format!(
            "sequence {id}: symbol {symbol} at position {position} is impossible under every task in the subset"
        )),
        other => other,
    }
}

pub fn oracle_traces(
    tasks: &TaskSet,
    prior: Option<&[f64]>,
    sequences: &[SequenceRecord],
) -> Result<Vec<SequenceTrace>> {
    sequences
        .par_iter()
        .map(|seq| {
            let mut state = OracleState::new(tasks, prior)?;
            let mut trace = SequenceTrace {
                sequence_id: seq.id,
                predictive: Vec::with_capacity(seq.symbols.len()),
                entropy_nats: Vec::with_capacity(seq.symbols.len()),
            };
            for &x in &seq.symbols {
                let out = state.advance(x).map_err(|e| with_sequence(e, seq.id))?;
                trace.predictive.push(out.predictive);
                trace.entropy_nats.push(out.entropy_nats);
            }
            Ok(trace)
        })
        .collect()
}

/// Per-sequence seed of the Monte Carlo stream.
pub fn mc_sequence_seed(seed: u64, sequence_id: u64) -> u64 {
    KeyedRng::new(seed, "mc-sequence", &[sequence_id]).next_u64()
}

/// Monte Carlo predictions for every position of every sequence.
pub fn mc_traces(
    tasks: &TaskSet,
    prior: Option<&[f64]>,
    sequences: &[SequenceRecord],
    samples: McSamples,
    seed: u64,
) -> Result<Vec<SequenceTrace>> {
    sequences
        .par_iter()
        .map(|seq| {
            let rng_seed = mc_sequence_seed(seed, seq.id);
            let mut state = OracleState::new(tasks, prior)?;
            let mut trace = SequenceTrace {
                sequence_id: seq.id,
                predictive: Vec::with_capacity(seq.symbols.len()),
                entropy_nats: Vec::with_capacity(seq.symbols.len()),
            };
            for &x in &seq.symbols {
                trace.predictive.push(mc_predict(&state, samples, rng_seed)?);
                let out = state.advance(x).map_err(|e| with_sequence(e, seq.id))?;
                trace.entropy_nats.push(out.entropy_nats);
            }
            Ok(trace)
        })
        .collect()
}

/// Mean posterior entropy per position across traces.
pub fn entropy_curve(traces: &[SequenceTrace]) -> Curve {
    let mut samples: BTreeMap<u32, Vec<(u64, f64)>> = BTreeMap::new();
    for trace in traces {
        for (t, &h) in trace.entropy_nats.iter().enumerate() {
            samples.entry(t as u32).or_default().push((trace.sequence_id, h));
        }
    }
    Curve::from_samples(samples)
}

pub fn trace_records(traces: &[SequenceTrace]) -> impl Iterator<Item = PredictionRecord> + '_ {
    traces.iter().flat_map(SequenceTrace::records)
}

/// Position-independent unigram model: the marginal symbol frequencies of
/// a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Unigram {
    pub probs: Vec<f64>,
}

impl Unigram {
    pub fn fit(sequences: &[SequenceRecord], symbols: usize) -> Result<Self> {
        let mut counts = vec![0u64; symbols];
        for seq in sequences {
            for &x in &seq.symbols {
                let slot =
                    counts.get_mut(x).ok_or(Error::Range { what: "symbol", value: x as u64, bound: symbols as u64 })?;
                *slot += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Argument("cannot fit a unigram model to an empty dataset".into()));
        }
        Ok(Self { probs: counts.iter().map(|&c| c as f64 / total as f64).collect() })
    }

    pub fn records<'a>(&'a self, sequences: &'a [SequenceRecord]) -> impl Iterator<Item = PredictionRecord> + 'a {
        sequences.iter().flat_map(move |seq| {
            (0..seq.symbols.len()).map(move |t| PredictionRecord::from_f64(seq.id, t as u32, &self.probs))
        })
    }
}
