use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupLaw {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "defaults::total_txs")]
    pub total_txs: usize,
    #[serde(default = "defaults::nodes")]
    pub nodes: usize,
    /// `None` means calibrate against the default target first.
    #[serde(default)]
    pub difficulty_bits: Option<u32>,
    #[serde(default = "defaults::max_block_txs")]
    pub max_block_txs: usize,
    /// Defaults to `1..=max_block_txs`.
    #[serde(default)]
    pub group_size_law: Option<GroupLaw>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub submit_delay_ms: u64,
    #[serde(default = "defaults::timeout_s")]
    pub timeout_s: u64,
}

mod defaults {
    pub fn total_txs() -> usize {
        1000
    }
    pub fn nodes() -> usize {
        4
    }
    pub fn max_block_txs() -> usize {
        cadchain_core::genesis::DEFAULT_MAX_BLOCK_TXS
    }
    pub fn timeout_s() -> u64 {
        30 * 60
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading bench config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing bench config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bench config: {0}")]
    Invalid(String),
}

impl Default for BenchConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let cfg: BenchConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn group_law(&self) -> GroupLaw {
        self.group_size_law.unwrap_or(GroupLaw {
            min: 1,
            max: self.max_block_txs,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.total_txs == 0 {
            return bad("total_txs must be at least 1");
        }
        if self.nodes == 0 {
            return bad("nodes must be at least 1");
        }
        if self.max_block_txs == 0 {
            return bad("max_block_txs must be at least 1");
        }
        let law = self.group_law();
        if law.min == 0 || law.min > law.max {
            return bad("group_size_law needs 1 <= min <= max");
        }
        Ok(())
    }
}
