//! Divergence between a predictor and the oracle, aggregated per position.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::PredictionRecord;

/// Probability floor applied to both arguments of [`div`] before
/// renormalization.
pub const PROB_FLOOR: f64 = 1e-10;
/// Allowed deviation of an input distribution's total mass from 1.
pub const NORM_TOL: f64 = 1e-6;

pub const DIV_COLUMN: &str = "mean_div_nats";
pub const ENTROPY_COLUMN: &str = "mean_entropy_nats";

fn floored(p: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = p.iter().map(|&x| x.max(PROB_FLOOR)).collect();
    let total: f64 = clipped.iter().sum();
    clipped.into_iter().map(|x| x / total).collect()
}

pub fn check_distribution(p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::Validation(format!("probability {x} is negative or non-finite")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(Error::Validation(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

/// Symmetrized KL divergence in nats,
/// `0.5 KL(p || q) + 0.5 KL(q || p) = 0.5 sum_i (p_i - q_i)(ln p_i - ln q_i)`,
/// evaluated on floored, renormalized inputs. Every summand is
/// non-negative, so the result is too, and swapping arguments gives the
/// same bits.
pub fn div(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Validation(format!("length mismatch: {} vs {}", p.len(), q.len())));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let (p, q) = (floored(p), floored(q));
    let total: f64 = p.iter().zip(&q).map(|(&a, &b)| (a - b) * (a.ln() - b.ln())).sum();
    Ok(0.5 * total)
}

/// Mean, standard error and sample count of some quantity at one position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionStats {
    pub t: u32,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

/// Per-position statistics; positions without samples are absent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curve {
    pub points: Vec<PositionStats>,
}

pub type DivCurve = Curve;

impl Curve {
    /// Aggregates `(sequence_id, value)` samples per position. Samples are
    /// summed in sequence-id order so the result does not depend on input
    /// order. Standard errors use the unbiased sample variance (0 for a
    /// single sample).
    pub fn from_samples(samples: BTreeMap<u32, Vec<(u64, f64)>>) -> Self {
        let points = samples
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(t, mut values)| {
                values.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                let n = values.len() as f64;
                let mean = values.iter().map(|v| v.1).sum::<f64>() / n;
                let stderr = if values.len() > 1 {
                    let var = values.iter().map(|v| (v.1 - mean).powi(2)).sum::<f64>() / (n - 1.0);
                    (var / n).sqrt()
                } else {
                    0.0
                };
                PositionStats { t, mean, stderr, count: values.len() as u64 }
            })
            .collect();
        Self { points }
    }

    pub fn get(&self, t: u32) -> Option<&PositionStats> {
        self.points.binary_search_by_key(&t, |p| p.t).ok().map(|i| &self.points[i])
    }

    pub fn to_csv(&self, value_column: &str) -> String {
        let mut out = format!("t,{value_column},stderr,count\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.t, p.mean, p.stderr, p.count));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, value_column: &str) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_csv(value_column).as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads any `t,<value>,stderr,count` table; returns the value column
    /// name with the curve.
    pub fn read_csv(path: &Path) -> Result<(String, Self)> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        let headers = reader.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
        if headers.len() != 4 || &headers[0] != "t" || &headers[2] != "stderr" || &headers[3] != "count" {
            return Err(Error::format(path, "expected header t,<value>,stderr,count"));
        }
        let column = headers[1].to_string();
        let mut points = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::format(path, e.to_string()))?;
            let parse_err = |what: &str| Error::format(path, format!("row {}: bad {what}", line + 2));
            points.push(PositionStats {
                t: record[0].parse().map_err(|_| parse_err("t"))?,
                mean: record[1].parse().map_err(|_| parse_err("value"))?,
                stderr: record[2].parse().map_err(|_| parse_err("stderr"))?,
                count: record[3].parse().map_err(|_| parse_err("count"))?,
            });
        }
        Ok((column, Self { points }))
    }
}

/// Joins predictions with reference records on `(sequence_id, t)` and
/// averages [`div`] per position.
///
/// Streams may interleave freely; records are buffered only until their
/// partner arrives. Unmatched or duplicated keys are alignment errors
/// naming the smallest offending key.
pub fn evaluate<P, R>(predictions: P, reference: R) -> Result<DivCurve>
where
    P: IntoIterator<Item = Result<PredictionRecord>>,
    R: IntoIterator<Item = Result<PredictionRecord>>,
{
    type Key = (u64, u32);
    let mut pending: [HashMap<Key, Vec<f32>>; 2] = [HashMap::new(), HashMap::new()];
    let mut done: HashSet<Key> = HashSet::new();
    let mut samples: BTreeMap<u32, Vec<(u64, f64)>> = BTreeMap::new();
    let mut width: Option<usize> = None;

    let mut preds = predictions.into_iter();
    let mut refs = reference.into_iter();
    loop {
        let a = preds.next().transpose()?;
        let b = refs.next().transpose()?;
        if a.is_none() && b.is_none() {
            break;
        }
        for (side, record) in [(0usize, a), (1usize, b)] {
            let Some(record) = record else { continue };
            let key = (record.sequence_id, record.t);
            match width {
                None => width = Some(record.probs.len()),
                Some(w) if w != record.probs.len() => {
                    return Err(Error::Alignment {
                        sequence_id: key.0,
                        t: key.1,
                        reason: format!("vector length {} differs from {w}", record.probs.len()),
                    })
                }
                _ => {}
            }
            if done.contains(&key) || pending[side].contains_key(&key) {
                return Err(Error::Alignment { sequence_id: key.0, t: key.1, reason: "duplicate record".into() });
            }
            match pending[1 - side].remove(&key) {
                Some(other) => {
                    let (p, q) = if side == 0 { (record.probs, other) } else { (other, record.probs) };
                    let p: Vec<f64> = p.iter().map(|&x| x as f64).collect();
                    let q: Vec<f64> = q.iter().map(|&x| x as f64).collect();
                    let d = div(&p, &q).map_err(|e| Error::Alignment {
                        sequence_id: key.0,
                        t: key.1,
                        reason: e.to_string(),
                    })?;
                    samples.entry(key.1).or_default().push((key.0, d));
                    done.insert(key);
                }
                None => {
                    pending[side].insert(key, record.probs);
                }
            }
        }
    }
    for (side, name) in [(0, "reference"), (1, "predictions")] {
        if let Some(&(sequence_id, t)) = pending[side].keys().min() {
            return Err(Error::Alignment { sequence_id, t, reason: format!("missing from {name}") });
        }
    }
    Ok(Curve::from_samples(samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub peak: f64,
    pub peak_t: u32,
    pub positions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<String>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Mean over positions, peak value and its position (smallest `t` on
/// ties), restricted to `window` when given.
pub fn summarize(curve: &Curve, window: Option<Range<u32>>) -> Result<Summary> {
    let points: Vec<&PositionStats> =
        curve.points.iter().filter(|p| window.as_ref().is_none_or(|w| w.contains(&p.t))).collect();
    let first = points.first().ok_or_else(|| Error::Argument("cannot summarize an empty curve".into()))?;
    let mean = points.iter().map(|p| p.mean).sum::<f64>() / points.len() as f64;
    let mut peak = (first.mean, first.t);
    for p in &points[1..] {
        if p.mean > peak.0 {
            peak = (p.mean, p.t);
        }
    }
    Ok(Summary { mean, peak: peak.0, peak_t: peak.1, positions: points.len(), subset: None })
}
