//! All known blocks, the canonical branch, and the orphan buffer.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use cadchain_core::validate::{Violation, ViolationCode};
use cadchain_core::{validate_block, Block, BranchKey, ChainParams, ChainWork, Genesis, Hash32};

pub const ORPHAN_CAPACITY: usize = 64;

#[derive(Debug, Clone)]
struct Entry {
    block: Arc<Block>,
    work: ChainWork,
    tx_ids: Vec<Hash32>,
}

#[derive(Debug)]
pub enum Insert {
    /// New tip directly on top of the previous tip.
    Extended,
    /// New tip on another branch. `removed` and `added` are in height order.
    Reorged {
        removed: Vec<Arc<Block>>,
        added: Vec<Arc<Block>>,
    },
    /// Valid but not heavier than the current tip.
    SideBranch,
    /// Parent unknown; held in the orphan buffer.
    Orphaned { missing_parent: Hash32 },
    Known,
    Rejected(Vec<Violation>),
}

impl Insert {
    pub fn tip_changed(&self) -> bool {
        matches!(self, Insert::Extended | Insert::Reorged { .. })
    }

    pub fn accepted(&self) -> bool {
        matches!(self, Insert::Extended | Insert::Reorged { .. } | Insert::SideBranch)
    }
}

#[derive(Debug)]
pub struct ChainTree {
    params: ChainParams,
    genesis_hash: Hash32,
    entries: HashMap<Hash32, Entry>,
    canonical: Vec<Hash32>,
    orphans: VecDeque<Arc<Block>>,
}

impl ChainTree {
    pub fn new(genesis: &Genesis) -> Self {
        let block = Arc::new(Block::genesis(genesis));
        let hash = block.hash();
        let mut entries = HashMap::new();
        entries.insert(
            hash,
            Entry {
                work: ChainWork::of_difficulty(block.header.difficulty),
                block,
                tx_ids: Vec::new(),
            },
        );
        ChainTree {
            params: genesis.params(),
            genesis_hash: hash,
            entries,
            canonical: vec![hash],
            orphans: VecDeque::new(),
        }
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn genesis_hash(&self) -> Hash32 {
        self.genesis_hash
    }

    pub fn tip_hash(&self) -> Hash32 {
        *self.canonical.last().expect("genesis always present")
    }

    pub fn tip(&self) -> &Arc<Block> {
        &self.entries[&self.tip_hash()].block
    }

    pub fn height(&self) -> u64 {
        self.canonical.len() as u64 - 1
    }

    pub fn tip_key(&self) -> BranchKey {
        let tip = self.tip_hash();
        BranchKey {
            work: self.entries[&tip].work,
            tip,
        }
    }

    pub fn contains(&self, hash: &Hash32) -> bool {
        self.entries.contains_key(hash)
    }

    pub fn get(&self, hash: &Hash32) -> Option<&Arc<Block>> {
        self.entries.get(hash).map(|e| &e.block)
    }

    pub fn get_any(&self, hash: &Hash32) -> Option<Arc<Block>> {
        self.get(hash)
            .cloned()
            .or_else(|| self.orphans.iter().find(|b| b.hash() == *hash).cloned())
    }

    pub fn block_count(&self) -> usize {
        self.entries.len()
    }

    pub fn orphan_count(&self) -> usize {
        self.orphans.len()
    }

    pub fn canonical_blocks(&self) -> Vec<Arc<Block>> {
        self.canonical.iter().map(|h| self.entries[h].block.clone()).collect()
    }

    pub fn canonical_hash_at(&self, height: u64) -> Option<Hash32> {
        self.canonical.get(height as usize).copied()
    }

    pub fn is_canonical(&self, hash: &Hash32) -> bool {
        self.entries
            .get(hash)
            .is_some_and(|e| self.canonical.get(e.block.index() as usize) == Some(hash))
    }

    /// Up to `count` headers walking back from `from` (inclusive).
    pub fn headers_back(&self, from: &Hash32, count: usize) -> Vec<cadchain_core::BlockHeader> {
        let mut out = Vec::new();
        let mut cur = self.entries.get(from);
        while let Some(e) = cur {
            if out.len() >= count {
                break;
            }
            out.push(e.block.header.clone());
            if e.block.index() == 0 {
                break;
            }
            cur = self.entries.get(&e.block.header.parent_hash);
        }
        out
    }

    fn ancestor_tx_ids(&self, from: &Hash32) -> HashSet<Hash32> {
        let mut ids = HashSet::new();
        let mut cur = self.entries.get(from);
        while let Some(e) = cur {
            ids.extend(e.tx_ids.iter().copied());
            if e.block.index() == 0 {
                break;
            }
            cur = self.entries.get(&e.block.header.parent_hash);
        }
        ids
    }

    pub fn insert(&mut self, block: Block) -> Insert {
        let hash = block.hash();
        if self.entries.contains_key(&hash) {
            return Insert::Known;
        }
        let parent_hash = block.header.parent_hash;
        let Some(parent) = self.entries.get(&parent_hash) else {
            if !self.orphans.iter().any(|b| b.hash() == hash) {
                if self.orphans.len() >= ORPHAN_CAPACITY {
                    self.orphans.pop_front();
                }
                self.orphans.push_back(Arc::new(block));
            }
            return Insert::Orphaned {
                missing_parent: parent_hash,
            };
        };

        let mut violations = validate_block(&block, &parent.block, &self.params).err().unwrap_or_default();
        let tx_ids = block.tx_ids();
        if !tx_ids.is_empty() {
            let prior = self.ancestor_tx_ids(&parent_hash);
            if let Some(dup) = tx_ids.iter().find(|id| prior.contains(id)) {
                violations.push(Violation {
                    code: ViolationCode::DuplicateTx,
                    detail: format!("{dup} already on branch"),
                });
            }
        }
        if !violations.is_empty() {
            return Insert::Rejected(violations);
        }

        let mut work = parent.work;
        work += ChainWork::of_difficulty(block.header.difficulty);
        let key = BranchKey { work, tip: hash };
        let old_key = self.tip_key();
        self.entries.insert(
            hash,
            Entry {
                block: Arc::new(block),
                work,
                tx_ids,
            },
        );

        if key <= old_key {
            return Insert::SideBranch;
        }
        if parent_hash == old_key.tip {
            self.canonical.push(hash);
            return Insert::Extended;
        }
        self.switch_to(hash)
    }

    fn switch_to(&mut self, new_tip: Hash32) -> Insert {
        let mut branch = Vec::new();
        let mut cur = new_tip;
        while !self.is_canonical(&cur) {
            branch.push(cur);
            cur = self.entries[&cur].block.header.parent_hash;
        }
        let fork_height = self.entries[&cur].block.index() as usize;
        let removed: Vec<Arc<Block>> = self.canonical[fork_height + 1..]
            .iter()
            .map(|h| self.entries[h].block.clone())
            .collect();
        self.canonical.truncate(fork_height + 1);
        branch.reverse();
        let added: Vec<Arc<Block>> = branch.iter().map(|h| self.entries[h].block.clone()).collect();
        self.canonical.extend(branch);
        Insert::Reorged { removed, added }
    }

    /// Removes and returns buffered orphans whose parent is `parent`.
    pub fn take_orphans_of(&mut self, parent: &Hash32) -> Vec<Block> {
        let (ready, keep): (Vec<_>, Vec<_>) = self
            .orphans
            .drain(..)
            .partition(|b| b.header.parent_hash == *parent);
        self.orphans = keep.into();
        ready.into_iter().map(|b| Arc::unwrap_or_clone(b)).collect()
    }
}
