use std::cmp::Ordering;
use std::ops::AddAssign;

use crate::block::Block;
use crate::hash::Hash32;

/// Cumulative proof of work, a 320-bit unsigned sum of `2^difficulty` terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ChainWork([u64; 5]);

impl ChainWork {
    pub fn of_difficulty(bits: u32) -> Self {
        let bits = bits.min(256) as usize;
        let mut limbs = [0u64; 5];
        limbs[bits / 64] = 1u64 << (bits % 64);
        ChainWork(limbs)
    }

    pub fn of_chain(blocks: &[Block]) -> Self {
        let mut w = ChainWork::default();
        for b in blocks {
            w += ChainWork::of_difficulty(b.header.difficulty);
        }
        w
    }

    /// Saturating view for display and tests.
    pub fn as_u128(&self) -> u128 {
        if self.0[2..].iter().any(|l| *l != 0) {
            return u128::MAX;
        }
        (self.0[1] as u128) << 64 | self.0[0] as u128
    }
}

impl AddAssign for ChainWork {
    fn add_assign(&mut self, rhs: Self) {
        let mut carry = 0u128;
        for i in 0..5 {
            let s = self.0[i] as u128 + rhs.0[i] as u128 + carry;
            self.0[i] = s as u64;
            carry = s >> 64;
        }
    }
}

impl Ord for ChainWork {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.iter().rev().cmp(other.0.iter().rev())
    }
}

impl PartialOrd for ChainWork {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Ranking key for a branch tip. `Greater` is preferred: more work first,
/// then the lexicographically smaller tip hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchKey {
    pub work: ChainWork,
    pub tip: Hash32,
}

impl Ord for BranchKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.work.cmp(&other.work).then_with(|| other.tip.cmp(&self.tip))
    }
}

impl PartialOrd for BranchKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ForkError {
    #[error("fork choice over an empty set of branches")]
    EmptyForkSet,
}

/// Picks the branch with the most cumulative work; ties go to the smallest
/// tip hash. Returns the index of the winner.
pub fn fork_choice<B: AsRef<[Block]>>(branches: &[B]) -> Result<usize, ForkError> {
    branches
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            let blocks = b.as_ref();
            blocks.last().map(|tip| {
                (
                    i,
                    BranchKey {
                        work: ChainWork::of_chain(blocks),
                        tip: tip.hash(),
                    },
                )
            })
        })
        .max_by(|a, b| a.1.cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or(ForkError::EmptyForkSet)
}
