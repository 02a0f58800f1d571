//! Latent codes and their canonical mixed-radix indexing.

use serde::{Deserialize, Serialize};

use crate::config::EnvironmentConfig;
use crate::error::{Error, Result};

/// One coordinate per discrete choice, in slot order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatentCode(pub Vec<u64>);

impl LatentCode {
    pub fn coordinates(&self) -> &[u64] {
        &self.0
    }
}

/// The set of all latent codes of an environment, indexed most-significant
/// slot first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpace {
    radices: Vec<u64>,
    size: u64,
}

impl CodeSpace {
    pub fn new(radices: Vec<u64>) -> Result<Self> {
        if radices.contains(&0) {
            return Err(Error::Argument("code slot with zero cardinality".into()));
        }
        let size = radices
            .iter()
            .try_fold(1u64, |acc, &r| acc.checked_mul(r))
            .ok_or_else(|| Error::Argument("code space size overflows u64".into()))?;
        Ok(Self { radices, size })
    }

    pub fn for_config(config: &EnvironmentConfig) -> Result<Self> {
        config.validate()?;
        Self::new(config.radices())
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn radices(&self) -> &[u64] {
        &self.radices
    }

    pub fn index_to_code(&self, index: u64) -> Result<LatentCode> {
        if index >= self.size {
            return Err(Error::Range { what: "task index", value: index, bound: self.size });
        }
        let mut coords = vec![0; self.radices.len()];
        let mut rest = index;
        for (slot, &radix) in self.radices.iter().enumerate().rev() {
            coords[slot] = rest % radix;
            rest /= radix;
        }
        Ok(LatentCode(coords))
    }

    pub fn code_to_index(&self, code: &LatentCode) -> Result<u64> {
        self.check(code)?;
        Ok(code.0.iter().zip(&self.radices).fold(0, |acc, (&c, &r)| acc * r + c))
    }

    pub fn check(&self, code: &LatentCode) -> Result<()> {
        if code.0.len() != self.radices.len() {
            return Err(Error::Argument(format!(
                "latent code has {} coordinates, expected {}",
                code.0.len(),
                self.radices.len()
            )));
        }
        for (slot, (&c, &r)) in code.0.iter().zip(&self.radices).enumerate() {
            if c >= r {
                return Err(Error::Argument(format!("coordinate {slot} = {c} exceeds slot cardinality {r}")));
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = LatentCode> + '_ {
        (0..self.size).map(move |i| self.index_to_code(i).expect("index in range"))
    }
}

/// A latent code split into named choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choices {
    pub base_cycle: usize,
    /// Step-size, 1-based.
    pub base_step: usize,
    pub base_reversed: bool,
    pub family_groups: Vec<usize>,
    pub family_step: usize,
    pub family_reversed: bool,
    pub mappings: Vec<usize>,
    pub shift: usize,
}

impl Choices {
    pub(crate) fn from_code(config: &EnvironmentConfig, code: &LatentCode) -> Self {
        let c: Vec<usize> = code.0.iter().map(|&x| x as usize).collect();
        let nf = config.families;
        let ge = config.emission_groups;
        let fam = 3;
        let emi = fam + nf + 2;
        Self {
            base_cycle: c[0],
            base_step: c[1] + 1,
            base_reversed: c[2] == 1,
            family_groups: c[fam..fam + nf].to_vec(),
            family_reversed: c[fam + nf] == 1,
            family_step: c[fam + nf + 1] + 1,
            mappings: c[emi..emi + ge].to_vec(),
            shift: c[emi + ge],
        }
    }
}
