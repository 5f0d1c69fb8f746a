use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::block::Block;
use crate::genesis::{ChainParams, Genesis};
use crate::hash::Hash32;
use crate::pow::meets_difficulty;
use crate::tx::Transaction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    BadPow,
    BadLink,
    BadMerkle,
    BadSig,
    BadIndex,
    BadTime,
    TooManyTxs,
    /// A transaction id already present earlier on the same chain.
    DuplicateTx,
    /// The first block is not this network's genesis block.
    BadGenesis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub detail: String,
}

impl Violation {
    fn new(code: ViolationCode, detail: impl Into<String>) -> Self {
        Violation {
            code,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("block {index} ({hash}) invalid: {violations:?}")]
pub struct InvalidBlock {
    pub index: u64,
    pub hash: Hash32,
    pub violations: Vec<Violation>,
}

#[cfg(feature = "parallel")]
pub fn invalid_signatures(txs: &[Transaction]) -> Vec<usize> {
    use rayon::prelude::*;
    txs.par_iter()
        .enumerate()
        .filter(|(_, tx)| !tx.verify_signature())
        .map(|(i, _)| i)
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn invalid_signatures(txs: &[Transaction]) -> Vec<usize> {
    sequential_invalid_signatures(txs)
}

pub fn sequential_invalid_signatures(txs: &[Transaction]) -> Vec<usize> {
    txs.iter()
        .enumerate()
        .filter(|(_, tx)| !tx.verify_signature())
        .map(|(i, _)| i)
        .collect()
}

/// Structural validation of `block` as a child of `parent`. Collects every
/// violation rather than stopping at the first.
pub fn validate_block(block: &Block, parent: &Block, params: &ChainParams) -> Result<(), Vec<Violation>> {
    use ViolationCode::*;

    let mut out = Vec::new();
    let h = &block.header;
    let p = &parent.header;

    if h.index != p.index + 1 {
        out.push(Violation::new(BadIndex, format!("index {} after parent {}", h.index, p.index)));
    }
    let parent_hash = p.hash();
    if h.parent_hash != parent_hash {
        out.push(Violation::new(BadLink, format!("parent_hash {} != {}", h.parent_hash, parent_hash)));
    }
    if h.difficulty != params.difficulty_bits {
        out.push(Violation::new(
            BadPow,
            format!("difficulty {} != network {}", h.difficulty, params.difficulty_bits),
        ));
    }
    if !meets_difficulty(&h.hash(), h.difficulty) {
        out.push(Violation::new(BadPow, format!("hash misses {} bits", h.difficulty)));
    }
    let root = block.computed_merkle_root();
    if h.merkle_root != root {
        out.push(Violation::new(BadMerkle, format!("merkle_root {} != {}", h.merkle_root, root)));
    }
    for i in invalid_signatures(&block.transactions) {
        out.push(Violation::new(BadSig, format!("transaction {i}")));
    }
    if h.timestamp < p.timestamp {
        out.push(Violation::new(BadTime, format!("timestamp {} < parent {}", h.timestamp, p.timestamp)));
    }
    if block.transactions.len() > params.max_block_txs {
        out.push(Violation::new(
            TooManyTxs,
            format!("{} > {}", block.transactions.len(), params.max_block_txs),
        ));
    }
    let mut seen = HashSet::new();
    for id in block.tx_ids() {
        if !seen.insert(id) {
            out.push(Violation::new(DuplicateTx, format!("{id} repeated in block")));
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Validates a full chain from genesis: the first block must equal the
/// network genesis block and every later block must validate against its
/// predecessor. Transaction ids must be unique across the chain.
pub fn validate_chain(blocks: &[Block], genesis: &Genesis) -> Result<(), InvalidBlock> {
    let expected = Block::genesis(genesis);
    let Some(first) = blocks.first() else {
        return Err(InvalidBlock {
            index: 0,
            hash: Hash32::ZERO,
            violations: vec![Violation::new(ViolationCode::BadGenesis, "empty chain")],
        });
    };
    if *first != expected {
        return Err(InvalidBlock {
            index: 0,
            hash: first.hash(),
            violations: vec![Violation::new(ViolationCode::BadGenesis, "genesis mismatch")],
        });
    }
    let params = genesis.params();
    let mut seen: HashSet<Hash32> = HashSet::new();
    for pair in blocks.windows(2) {
        let (parent, block) = (&pair[0], &pair[1]);
        let mut violations = validate_block(block, parent, &params).err().unwrap_or_default();
        for id in block.tx_ids() {
            if !seen.insert(id) && !violations.iter().any(|v| v.code == ViolationCode::DuplicateTx) {
                violations.push(Violation::new(ViolationCode::DuplicateTx, format!("{id} already on chain")));
            }
        }
        if !violations.is_empty() {
            return Err(InvalidBlock {
                index: block.index(),
                hash: block.hash(),
                violations,
            });
        }
    }
    Ok(())
}
