use serde::{Deserialize, Serialize};

use crate::block::Block;
use crate::contract::state::{ApplyContext, ContractState, RejectCode};
use crate::genesis::Genesis;
use crate::hash::Hash32;

/// One line of the rejection log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub tx_id: Hash32,
    pub block_index: u64,
    pub code: RejectCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub state: ContractState,
    pub rejections: Vec<RejectionRecord>,
}

impl Replay {
    pub fn new(genesis: &Genesis) -> Self {
        Replay {
            state: ContractState::from_genesis(genesis),
            rejections: Vec::new(),
        }
    }

    /// Folds one block's transactions into the state; contract-level
    /// rejections are logged and skipped.
    pub fn apply_block(&mut self, block: &Block) {
        let ctx = ApplyContext {
            block_index: block.index(),
        };
        for tx in &block.transactions {
            if let Err(code) = self.state.apply_in_place(tx, ctx) {
                self.rejections.push(RejectionRecord {
                    tx_id: tx.tx_id(),
                    block_index: ctx.block_index,
                    code,
                });
            }
        }
    }

    pub fn rejection_log_jsonl(&self) -> String {
        self.rejections
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// Replays an already validated chain (genesis block first) from the
/// genesis state.
pub fn replay(blocks: &[Block], genesis: &Genesis) -> Replay {
    let mut r = Replay::new(genesis);
    for block in blocks {
        r.apply_block(block);
    }
    r
}
