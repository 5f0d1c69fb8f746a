use std::path::{Path, PathBuf};

use cadchain_core::Address;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub node_name: String,
    pub listen_endpoint: String,
    #[serde(default)]
    pub peers: Vec<String>,
    pub genesis_path: PathBuf,
    #[serde(default)]
    pub miner_enabled: bool,
    pub miner_address: Address,
    #[serde(default = "default_max_block_txs")]
    pub max_block_txs: usize,
    #[serde(default)]
    pub confirmations: u64,
    pub data_dir: PathBuf,
}

fn default_max_block_txs() -> usize {
    cadchain_core::genesis::DEFAULT_MAX_BLOCK_TXS
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config field `{0}`: {1}")]
    Invalid(&'static str, String),
}

impl NodeConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: NodeConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_block_txs == 0 {
            return Err(ConfigError::Invalid("max_block_txs", "must be at least 1".into()));
        }
        if self.peers.iter().any(|p| p == &self.listen_endpoint) {
            return Err(ConfigError::Invalid("peers", "must not include the node's own endpoint".into()));
        }
        if self.node_name.trim().is_empty() {
            return Err(ConfigError::Invalid("node_name", "must be non-empty".into()));
        }
        Ok(())
    }
}
