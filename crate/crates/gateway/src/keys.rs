//! Public keys for request authentication: an operator-supplied key
//! directory, topped up from keys seen on chain transactions.

use std::collections::HashMap;
use std::path::Path;
use std::sync::RwLock;

use cadchain_core::hash::hex_bytes;
use cadchain_core::{Address, Block};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyEntry {
    pub address: Address,
    #[serde(with = "hex_bytes")]
    pub public_key: Vec<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum KeyDirError {
    #[error("reading key directory: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing key directory: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("key directory entry {0} does not match its public key")]
    Mismatch(Address),
}

#[derive(Debug, Default)]
pub struct KeyDirectory {
    keys: RwLock<HashMap<Address, Vec<u8>>>,
}

impl KeyDirectory {
    pub fn new(entries: Vec<KeyEntry>) -> Result<Self, KeyDirError> {
        let mut keys = HashMap::new();
        for e in entries {
            if Address::from_public_key(&e.public_key) != e.address {
                return Err(KeyDirError::Mismatch(e.address));
            }
            keys.insert(e.address, e.public_key);
        }
        Ok(KeyDirectory { keys: RwLock::new(keys) })
    }

    pub fn load(path: &Path) -> Result<Self, KeyDirError> {
        let text = std::fs::read_to_string(path)?;
        Self::new(serde_json::from_str(&text)?)
    }

    pub fn insert(&self, address: Address, public_key: Vec<u8>) {
        self.keys.write().unwrap().insert(address, public_key);
    }

    /// Looks `addr` up, falling back to the first chain transaction it sent.
    pub fn lookup(&self, addr: &Address, chain: &[std::sync::Arc<Block>]) -> Option<Vec<u8>> {
        if let Some(k) = self.keys.read().unwrap().get(addr) {
            return Some(k.clone());
        }
        let found = chain
            .iter()
            .flat_map(|b| b.transactions.iter())
            .find(|tx| tx.sender == *addr && tx.verify_signature())
            .map(|tx| tx.public_key.clone())?;
        self.insert(*addr, found.clone());
        Some(found)
    }
}
