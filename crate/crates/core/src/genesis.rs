use serde::{Deserialize, Serialize};

use crate::address::Address;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsortiumMember {
    pub name: String,
    pub address: Address,
}

/// The network's genesis document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Genesis {
    pub network_id: String,
    pub difficulty_bits: u32,
    pub max_block_txs: usize,
    pub owner_address: Address,
    pub consortium: Vec<ConsortiumMember>,
    pub genesis_timestamp: u64,
}

pub const DEFAULT_MAX_BLOCK_TXS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenesisError {
    #[error("genesis field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("genesis parse error: {0}")]
    Parse(String),
}

impl Genesis {
    pub fn from_json(text: &str) -> Result<Self, GenesisError> {
        let g: Genesis = serde_json::from_str(text).map_err(|e| GenesisError::Parse(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GenesisError> {
        let field = |f: &str, m: &str| GenesisError::Field {
            field: f.to_string(),
            message: m.to_string(),
        };
        if self.network_id.trim().is_empty() {
            return Err(field("network_id", "must be non-empty"));
        }
        if self.difficulty_bits > 256 {
            return Err(field("difficulty_bits", "must be at most 256"));
        }
        if self.max_block_txs == 0 {
            return Err(field("max_block_txs", "must be at least 1"));
        }
        if let Some(i) = self.consortium.iter().position(|m| m.name.trim().is_empty()) {
            return Err(field(&format!("consortium[{i}].name"), "must be non-empty"));
        }
        Ok(())
    }

    pub fn params(&self) -> ChainParams {
        ChainParams {
            difficulty_bits: self.difficulty_bits,
            max_block_txs: self.max_block_txs,
        }
    }
}

/// Consensus parameters fixed for the lifetime of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainParams {
    pub difficulty_bits: u32,
    pub max_block_txs: usize,
}
