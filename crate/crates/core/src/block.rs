use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::encoding::canonical_encode;
use crate::genesis::{ChainParams, Genesis};
use crate::hash::{sha256, Hash32};
use crate::merkle::merkle_root;
use crate::tx::Transaction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub index: u64,
    pub parent_hash: Hash32,
    pub merkle_root: Hash32,
    pub difficulty: u32,
    pub pow_nonce: u64,
    pub timestamp: u64,
    pub miner: Address,
}

impl BlockHeader {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_encode(self)
    }

    pub fn hash(&self) -> Hash32 {
        sha256(&self.canonical_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn hash(&self) -> Hash32 {
        self.header.hash()
    }

    pub fn index(&self) -> u64 {
        self.header.index
    }

    pub fn tx_ids(&self) -> Vec<Hash32> {
        tx_ids(&self.transactions)
    }

    pub fn computed_merkle_root(&self) -> Hash32 {
        merkle_root(&self.tx_ids())
    }

    /// Unsealed header for a block extending `parent` with `transactions`.
    pub fn template(
        parent: &BlockHeader,
        transactions: &[Transaction],
        difficulty: u32,
        timestamp: u64,
        miner: Address,
    ) -> BlockHeader {
        BlockHeader {
            index: parent.index + 1,
            parent_hash: parent.hash(),
            merkle_root: merkle_root(&tx_ids(transactions)),
            difficulty,
            pow_nonce: 0,
            timestamp: timestamp.max(parent.timestamp),
            miner,
        }
    }

    /// Builds and mines a child of `parent` at the network difficulty.
    pub fn seal(
        parent: &Block,
        transactions: Vec<Transaction>,
        params: &ChainParams,
        timestamp: u64,
        miner: Address,
    ) -> Block {
        let template = Block::template(&parent.header, &transactions, params.difficulty_bits, timestamp, miner);
        let header = crate::pow::mine(&template, None).expect("unbounded search");
        Block { header, transactions }
    }

    /// The deterministic genesis block of a network.
    ///
    /// Its `parent_hash` commits to the canonical genesis document, so two
    /// networks with different genesis files never share a block hash.
    pub fn genesis(genesis: &Genesis) -> Block {
        Block {
            header: BlockHeader {
                index: 0,
                parent_hash: sha256(&canonical_encode(genesis)),
                merkle_root: merkle_root(&[]),
                difficulty: 0,
                pow_nonce: 0,
                timestamp: genesis.genesis_timestamp,
                miner: genesis.owner_address,
            },
            transactions: Vec::new(),
        }
    }
}

#[cfg(feature = "parallel")]
pub fn tx_ids(txs: &[Transaction]) -> Vec<Hash32> {
    use rayon::prelude::*;
    txs.par_iter().map(Transaction::tx_id).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn tx_ids(txs: &[Transaction]) -> Vec<Hash32> {
    txs.iter().map(Transaction::tx_id).collect()
}
