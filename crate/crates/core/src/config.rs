//! Environment hyperparameters.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// All knobs of a MetaHMM environment. Field names are the on-disk names in
/// JSON and TOML config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub hidden_states: usize,
    pub symbols: usize,
    pub base_cycles: usize,
    pub base_step_sizes: usize,
    pub base_directions: usize,
    pub families: usize,
    pub groups_per_family: usize,
    pub family_directions: usize,
    pub family_step_sizes: usize,
    pub emission_groups: usize,
    pub emissions_per_group: usize,
    pub shifts: usize,
    /// Mixing weight of uniform-over-block noise in each emission row.
    #[serde(default)]
    pub emission_smoothing: f64,
    pub seed: u64,
}

impl EnvironmentConfig {
    /// The standard benchmark environment: 20 hidden states, 50 symbols,
    /// 12,288 tasks.
    pub fn standard(seed: u64) -> Self {
        Self {
            hidden_states: 20,
            symbols: 50,
            base_cycles: 4,
            base_step_sizes: 2,
            base_directions: 2,
            families: 3,
            groups_per_family: 2,
            family_directions: 2,
            family_step_sizes: 2,
            emission_groups: 3,
            emissions_per_group: 2,
            shifts: 3,
            emission_smoothing: 0.0,
            seed,
        }
    }

    /// Reads a config from `.json` or `.toml`, chosen by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?,
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?,
            _ => return Err(Error::format(path, "config must have a .json or .toml extension")),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("hidden_states", self.hidden_states),
            ("symbols", self.symbols),
            ("base_cycles", self.base_cycles),
            ("base_step_sizes", self.base_step_sizes),
            ("base_directions", self.base_directions),
            ("families", self.families),
            ("groups_per_family", self.groups_per_family),
            ("family_directions", self.family_directions),
            ("family_step_sizes", self.family_step_sizes),
            ("emission_groups", self.emission_groups),
            ("emissions_per_group", self.emissions_per_group),
            ("shifts", self.shifts),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        for (name, value) in [("base_directions", self.base_directions), ("family_directions", self.family_directions)]
        {
            if value > 2 {
                return Err(Error::Config(format!("{name} must be 1 or 2, got {value}")));
            }
        }
        if self.emission_groups > self.hidden_states {
            return Err(Error::Config(format!(
                "emission_groups ({}) exceeds hidden_states ({})",
                self.emission_groups, self.hidden_states
            )));
        }
        let block = self.symbol_block_size();
        let largest_group = self.hidden_states.div_ceil(self.emission_groups);
        if block < largest_group {
            return Err(Error::Config(format!(
                "symbol block of {block} symbols per emission group cannot hold {largest_group} states injectively \
                 (need symbols >= {})",
                largest_group * self.emission_groups
            )));
        }
        if self.shifts > block {
            return Err(Error::Config(format!("shifts ({}) exceeds the symbol block size ({block})", self.shifts)));
        }
        if !(0.0..=1.0).contains(&self.emission_smoothing) {
            return Err(Error::Config(format!(
                "emission_smoothing must lie in [0, 1], got {}",
                self.emission_smoothing
            )));
        }
        self.checked_size()?;
        Ok(())
    }

    /// Symbols owned by each emission group.
    pub fn symbol_block_size(&self) -> usize {
        self.symbols / self.emission_groups
    }

    /// Cardinality of every latent-code slot, most significant first:
    /// base cycle, base step-size, base direction, one group choice per
    /// family, family direction, family step-size, one mapping choice per
    /// emission group, shift.
    pub fn radices(&self) -> Vec<u64> {
        let mut radices = vec![self.base_cycles as u64, self.base_step_sizes as u64, self.base_directions as u64];
        radices.extend(std::iter::repeat_n(self.groups_per_family as u64, self.families));
        radices.push(self.family_directions as u64);
        radices.push(self.family_step_sizes as u64);
        radices.extend(std::iter::repeat_n(self.emissions_per_group as u64, self.emission_groups));
        radices.push(self.shifts as u64);
        radices
    }

    fn checked_size(&self) -> Result<u64> {
        self.radices()
            .into_iter()
            .try_fold(1u64, |acc, r| acc.checked_mul(r))
            .ok_or_else(|| Error::Config("environment size overflows u64".into()))
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn hash_hex(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&bytes)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Number of distinct HMMs in the environment:
/// `(n_b s_b d_b) * (g_f^n_f d_f s_f) * (alpha_e^g_e beta_e)`.
pub fn environment_size(config: &EnvironmentConfig) -> Result<u64> {
    config.validate()?;
    let base = config.base_cycles * config.base_step_sizes * config.base_directions;
    let families = (config.groups_per_family as u64)
        .checked_pow(config.families as u32)
        .and_then(|g| g.checked_mul((config.family_directions * config.family_step_sizes) as u64));
    let emissions = (config.emissions_per_group as u64)
        .checked_pow(config.emission_groups as u32)
        .and_then(|a| a.checked_mul(config.shifts as u64));
    families
        .zip(emissions)
        .and_then(|(f, e)| (base as u64).checked_mul(f)?.checked_mul(e))
        .ok_or_else(|| Error::Config("environment size overflows u64".into()))
}
