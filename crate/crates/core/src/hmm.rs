//! Dense HMM parameters, sampling, and the sparse log-space form used for
//! filtering.

use crate::error::{Error, Result};
use crate::rng::KeyedRng;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hmm {
    pub transition: Matrix,
    pub emission: Matrix,
    pub initial: Vec<f64>,
}

impl Hmm {
    pub fn states(&self) -> usize {
        self.initial.len()
    }

    pub fn symbols(&self) -> usize {
        self.emission.cols()
    }

    /// Checks non-negativity and normalization of every row within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.states();
        if self.transition.rows() != n || self.transition.cols() != n || self.emission.rows() != n {
            return Err(Error::Validation("HMM matrix shapes disagree".into()));
        }
        let check = |name: &str, i: usize, row: &[f64]| -> Result<()> {
            if row.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                return Err(Error::Validation(format!("{name} row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::Validation(format!("{name} row {i} sums to {sum}")));
            }
            Ok(())
        };
        check("initial", 0, &self.initial)?;
        for i in 0..n {
            check("transition", i, self.transition.row(i))?;
            check("emission", i, self.emission.row(i))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub symbols: Vec<usize>,
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    row.iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Draws a length-`len` trajectory. Deterministic in `rng_seed`.
pub fn sample_sequence(hmm: &Hmm, len: usize, rng_seed: u64) -> Trajectory {
    let mut rng = KeyedRng::new(rng_seed, "trajectory", &[]);
    sample_with(hmm, len, &mut rng)
}

pub(crate) fn sample_with(hmm: &Hmm, len: usize, rng: &mut KeyedRng) -> Trajectory {
    let n = hmm.states();
    let init = cumulative(&hmm.initial);
    let trans: Vec<Vec<f64>> = (0..n).map(|i| cumulative(hmm.transition.row(i))).collect();
    let emit: Vec<Vec<f64>> = (0..n).map(|i| cumulative(hmm.emission.row(i))).collect();

    let mut states = Vec::with_capacity(len);
    let mut symbols = Vec::with_capacity(len);
    let mut state = rng.categorical(&init);
    for t in 0..len {
        if t > 0 {
            state = rng.categorical(&trans[state]);
        }
        states.push(state);
        symbols.push(rng.categorical(&emit[state]));
    }
    Trajectory { states, symbols }
}

/// Sparse log-space view of an [`Hmm`] for forward filtering.
///
/// Transitions are stored by destination (predecessor lists) so that each
/// forward message entry is a single log-sum-exp over its incoming edges.
#[derive(Debug, Clone)]
pub struct SparseHmm {
    states: usize,
    symbols: usize,
    pub(crate) log_initial: Vec<f64>,
    pred_offsets: Vec<u32>,
    pred_source: Vec<u16>,
    pred_log_weight: Vec<f64>,
    emit_offsets: Vec<u32>,
    emit_symbol: Vec<u16>,
    emit_prob: Vec<f64>,
}

impl SparseHmm {
    pub fn from_dense(hmm: &Hmm) -> Self {
        let n = hmm.states();
        assert!(n <= u16::MAX as usize && hmm.symbols() <= u16::MAX as usize);
        let mut pred_offsets = Vec::with_capacity(n + 1);
        let mut pred_source = Vec::new();
        let mut pred_log_weight = Vec::new();
        pred_offsets.push(0);
        for j in 0..n {
            for i in 0..n {
                let p = hmm.transition.get(i, j);
                if p > 0.0 {
                    pred_source.push(i as u16);
                    pred_log_weight.push(p.ln());
                }
            }
            pred_offsets.push(pred_source.len() as u32);
        }
        let mut emit_offsets = Vec::with_capacity(n + 1);
        let mut emit_symbol = Vec::new();
        let mut emit_prob = Vec::new();
        emit_offsets.push(0);
        for i in 0..n {
            for (v, &p) in hmm.emission.row(i).iter().enumerate() {
                if p > 0.0 {
                    emit_symbol.push(v as u16);
                    emit_prob.push(p);
                }
            }
            emit_offsets.push(emit_symbol.len() as u32);
        }
        Self {
            states: n,
            symbols: hmm.symbols(),
            log_initial: hmm.initial.iter().map(|p| p.ln()).collect(),
            pred_offsets,
            pred_source,
            pred_log_weight,
            emit_offsets,
            emit_symbol,
            emit_prob,
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    /// Nonzero emission entries of `state` as `(symbol, probability)`.
    pub fn emissions(&self, state: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.emit_offsets[state] as usize..self.emit_offsets[state + 1] as usize;
        self.emit_symbol[range.clone()].iter().zip(&self.emit_prob[range]).map(|(&v, &p)| (v as usize, p))
    }

    pub fn log_emission(&self, state: usize, symbol: usize) -> f64 {
        self.emissions(state).find(|&(v, _)| v == symbol).map_or(f64::NEG_INFINITY, |(_, p)| p.ln())
    }

    /// `out[j] = logsumexp_i(input[i] + log A[i, j])`.
    pub fn propagate(&self, input: &[f64], out: &mut [f64]) {
        for (j, slot) in out.iter_mut().enumerate() {
            let range = self.pred_offsets[j] as usize..self.pred_offsets[j + 1] as usize;
            let terms = self.pred_source[range.clone()]
                .iter()
                .zip(&self.pred_log_weight[range])
                .map(|(&i, &w)| input[i as usize] + w);
            *slot = crate::logspace::log_sum_exp_iter(terms);
        }
    }
}
