//! Consortium node: mempool admission, flood gossip over TCP, the mining
//! loop, fork resolution and peer sync.

pub mod cluster;
pub mod config;
pub mod mempool;
pub mod node;
pub mod store;
pub mod tree;
pub mod wire;

pub use cluster::{Cluster, ClusterSpec};
pub use config::NodeConfig;
pub use mempool::{Mempool, TxRejectCode};
pub use node::{now_ms, BlockOutcome, Node, NodeError, Snapshot, SyncOutcome};
