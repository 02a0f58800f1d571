//! Train/validation task splits and sequence dataset generation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bank::EnvironmentBank;
use crate::config::hex_digest;
use crate::error::{Error, Result};
use crate::hmm::{sample_with, Hmm};
use crate::io::{SequenceRecord, FORMAT_VERSION};
use crate::rng::KeyedRng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub environment_size: u64,
    pub seed: u64,
    pub train: Vec<u64>,
    pub validation: Vec<u64>,
}

impl Split {
    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let split: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if split.train.len() + split.validation.len() != split.environment_size as usize {
            return Err(Error::format(path, "split does not cover the environment"));
        }
        Ok(split)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("split serializes");
        s.push('\n');
        s
    }
}

/// Holds out a uniformly random set of `holdout` tasks for validation; the
/// rest are training tasks. Both lists are sorted.
pub fn make_split(env_size: u64, holdout: u64, seed: u64) -> Result<Split> {
    if holdout >= env_size {
        return Err(Error::Argument(format!(
            "holdout ({holdout}) must be smaller than the environment size ({env_size})"
        )));
    }
    let mut order: Vec<u64> = (0..env_size).collect();
    KeyedRng::new(seed, "split", &[]).shuffle(&mut order);
    let mut validation = order[..holdout as usize].to_vec();
    let mut train = order[holdout as usize..].to_vec();
    validation.sort_unstable();
    train.sort_unstable();
    Ok(Split { environment_size: env_size, seed, train, validation })
}

/// Which tasks a command operates on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskSubset {
    All,
    Train,
    Validation,
    List(Vec<u64>),
}

impl TaskSubset {
    pub fn resolve(&self, env_size: u64, split: Option<&Split>) -> Result<Vec<u64>> {
        let need_split = || split.ok_or_else(|| Error::Argument(format!("subset '{self}' requires a split file")));
        let tasks = match self {
            TaskSubset::All => (0..env_size).collect(),
            TaskSubset::Train => need_split()?.train.clone(),
            TaskSubset::Validation => need_split()?.validation.clone(),
            TaskSubset::List(list) => list.clone(),
        };
        if let Some(split) = split {
            if matches!(self, TaskSubset::Train | TaskSubset::Validation) && split.environment_size != env_size {
                return Err(Error::Argument(format!(
                    "split covers {} tasks but the environment has {env_size}",
                    split.environment_size
                )));
            }
        }
        if tasks.is_empty() {
            return Err(Error::Argument(format!("subset '{self}' is empty")));
        }
        if let Some(&bad) = tasks.iter().find(|&&t| t >= env_size) {
            return Err(Error::Range { what: "task index", value: bad, bound: env_size });
        }
        Ok(tasks)
    }
}

impl fmt::Display for TaskSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskSubset::All => f.write_str("all"),
            TaskSubset::Train => f.write_str("train"),
            TaskSubset::Validation => f.write_str("validation"),
            TaskSubset::List(list) => {
                let items: Vec<String> = list.iter().map(u64::to_string).collect();
                f.write_str(&items.join(","))
            }
        }
    }
}

impl FromStr for TaskSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(TaskSubset::All),
            "train" => Ok(TaskSubset::Train),
            "validation" => Ok(TaskSubset::Validation),
            list => list
                .split(',')
                .map(|item| item.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map(TaskSubset::List)
                .map_err(|_| {
                    Error::Argument(format!(
                        "subset must be all, train, validation or a comma-separated index list, got '{s}'"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetPlan {
    /// This many sequences from every task in order.
    PerTask(usize),
    /// This many sequences, each from a uniformly drawn task.
    Total(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMode {
    Fixed(usize),
    /// Each length uniform in `[1, max]`.
    Uniform(usize),
}

impl LengthMode {
    pub fn max_len(&self) -> usize {
        match *self {
            LengthMode::Fixed(t) | LengthMode::Uniform(t) => t,
        }
    }
}

/// Generates sequences from `tasks`. Sequence `i` draws its task (for
/// [`DatasetPlan::Total`]), length and symbols from streams keyed on
/// `(seed, i)`, so the output does not depend on thread scheduling.
pub fn generate_dataset(
    bank: &EnvironmentBank,
    tasks: &[u64],
    plan: DatasetPlan,
    lengths: LengthMode,
    seed: u64,
) -> Result<Vec<SequenceRecord>> {
    if tasks.is_empty() {
        return Err(Error::Argument("task subset is empty".into()));
    }
    if lengths.max_len() == 0 {
        return Err(Error::Argument("sequence length must be at least 1".into()));
    }
    let assignments: Vec<u64> = match plan {
        DatasetPlan::PerTask(n) => tasks.iter().flat_map(|&t| std::iter::repeat_n(t, n)).collect(),
        DatasetPlan::Total(n) => {
            (0..n as u64).map(|i| tasks[KeyedRng::new(seed, "task", &[i]).below_usize(tasks.len())]).collect()
        }
    };

    let mut unique: Vec<u64> = assignments.clone();
    unique.sort_unstable();
    unique.dedup();
    let hmms: Vec<Hmm> = unique.par_iter().map(|&t| bank.hmm_at(t)).collect::<Result<_>>()?;

    Ok(assignments
        .par_iter()
        .enumerate()
        .map(|(i, &task)| {
            let id = i as u64;
            let len = match lengths {
                LengthMode::Fixed(t) => t,
                LengthMode::Uniform(max) => 1 + KeyedRng::new(seed, "length", &[id]).below_usize(max),
            };
            let hmm = &hmms[unique.binary_search(&task).expect("task present")];
            let mut rng = KeyedRng::new(seed, "sequence", &[id]);
            SequenceRecord { id, task, symbols: sample_with(hmm, len, &mut rng).symbols }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub config_hash: String,
    pub environment_seed: u64,
    pub sample_seed: u64,
    pub environment_size: u64,
    pub train_tasks: u64,
    pub validation_tasks: u64,
    pub subset: String,
    pub subset_tasks: u64,
    pub plan: DatasetPlan,
    pub lengths: LengthMode,
    pub sequences: u64,
    /// Hash over every generation input.
    pub inputs_hash: String,
}

impl DatasetManifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        bank: &EnvironmentBank,
        split: Option<&Split>,
        subset: &TaskSubset,
        tasks: &[u64],
        plan: DatasetPlan,
        lengths: LengthMode,
        sample_seed: u64,
        sequences: u64,
    ) -> Self {
        let config_hash = bank.config.hash_hex();
        let inputs = serde_json::json!({
            "config": &bank.config,
            "sample_seed": sample_seed,
            "tasks": tasks,
            "plan": plan,
            "lengths": lengths,
            "format_version": FORMAT_VERSION,
        });
        Self {
            format_version: FORMAT_VERSION,
            config_hash,
            environment_seed: bank.config.seed,
            sample_seed,
            environment_size: bank.size(),
            train_tasks: split.map_or(0, |s| s.train.len() as u64),
            validation_tasks: split.map_or(0, |s| s.validation.len() as u64),
            subset: subset.to_string(),
            subset_tasks: tasks.len() as u64,
            plan,
            lengths,
            sequences,
            inputs_hash: hex_digest(inputs.to_string().as_bytes()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
