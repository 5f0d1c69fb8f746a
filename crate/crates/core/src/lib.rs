//! Consortium chain primitives and the RBAC contract state machine.
//!
//! Everything here is pure and value-typed. With the default `parallel`
//! feature, nonce search, transaction hashing and signature checks run on
//! the rayon pool; without it they fall back to sequential loops with
//! identical results.

pub mod address;
pub mod block;
pub mod contract;
pub mod crypto;
pub mod encoding;
pub mod fork;
pub mod genesis;
pub mod hash;
pub mod merkle;
pub mod pow;
pub mod tx;
pub mod validate;

pub use address::Address;
pub use block::{Block, BlockHeader};
pub use crypto::Keypair;
pub use fork::{fork_choice, BranchKey, ChainWork, ForkError};
pub use genesis::{ChainParams, ConsortiumMember, Genesis};
pub use hash::{sha256, Hash32};
pub use merkle::merkle_root;
pub use pow::{meets_difficulty, mine, Exhausted};
pub use tx::Transaction;
pub use validate::{validate_block, validate_chain, InvalidBlock, Violation, ViolationCode};
