//! In-process multi-node networks on loopback, used by the benchmark
//! harness and integration tests.

use std::path::Path;
use std::time::{Duration, Instant};

use cadchain_core::{Genesis, Hash32, Keypair};

use crate::config::NodeConfig;
use crate::node::{Node, NodeError};

#[derive(Debug, Clone)]
pub struct ClusterSpec {
    pub size: usize,
    /// Indexes of the nodes that mine.
    pub miners: Vec<usize>,
    pub max_block_txs: usize,
    pub confirmations: u64,
}

impl ClusterSpec {
    pub fn new(size: usize, miners: Vec<usize>) -> Self {
        ClusterSpec {
            size,
            miners,
            max_block_txs: cadchain_core::genesis::DEFAULT_MAX_BLOCK_TXS,
            confirmations: 0,
        }
    }
}

pub struct Cluster {
    pub nodes: Vec<Node>,
}

/// Miner reward address for the `i`th node of a cluster.
pub fn miner_key(i: usize) -> Keypair {
    Keypair::from_seed([0xC0 ^ i as u8; 32])
}

pub fn node_config(name: &str, data_dir: &Path, miner: bool, index: usize) -> NodeConfig {
    NodeConfig {
        node_name: name.to_string(),
        listen_endpoint: "127.0.0.1:0".into(),
        peers: Vec::new(),
        genesis_path: data_dir.join("genesis.json"),
        miner_enabled: miner,
        miner_address: miner_key(index).address(),
        max_block_txs: cadchain_core::genesis::DEFAULT_MAX_BLOCK_TXS,
        confirmations: 0,
        data_dir: data_dir.to_path_buf(),
    }
}

impl Cluster {
    /// Starts `spec.size` unconnected nodes under `base_dir/node<i>`.
    pub async fn start_unconnected(genesis: &Genesis, spec: &ClusterSpec, base_dir: &Path) -> Result<Cluster, NodeError> {
        let mut nodes = Vec::with_capacity(spec.size);
        for i in 0..spec.size {
            let dir = base_dir.join(format!("node{i}"));
            let mut config = node_config(&format!("node{i}"), &dir, spec.miners.contains(&i), i);
            config.max_block_txs = spec.max_block_txs;
            config.confirmations = spec.confirmations;
            nodes.push(Node::start(config, genesis.clone()).await?);
        }
        Ok(Cluster { nodes })
    }

    /// Starts a fully meshed cluster and waits until every link is up.
    pub async fn start(genesis: &Genesis, spec: &ClusterSpec, base_dir: &Path) -> Result<Cluster, NodeError> {
        let cluster = Self::start_unconnected(genesis, spec, base_dir).await?;
        let all: Vec<usize> = (0..spec.size).collect();
        cluster.mesh(&all);
        if !cluster.wait_links(&all, Duration::from_secs(10)).await {
            tracing::warn!("cluster links did not all come up");
        }
        Ok(cluster)
    }

    pub fn connect(&self, a: usize, b: usize) {
        let addr = self.nodes[b].local_addr().expect("listening node");
        self.nodes[a].add_peer(&addr.to_string());
    }

    /// Connects every pair within `group`.
    pub fn mesh(&self, group: &[usize]) {
        for (k, &a) in group.iter().enumerate() {
            for &b in &group[..k] {
                self.connect(a, b);
            }
        }
    }

    /// Waits until each node of `group` has at least `group.len() - 1` peers.
    pub async fn wait_links(&self, group: &[usize], timeout: Duration) -> bool {
        let want = group.len().saturating_sub(1);
        wait_until(timeout, || group.iter().all(|&i| self.nodes[i].peer_count() >= want)).await
    }

    /// Waits until all nodes report the same tip at `height` or above.
    pub async fn wait_converged(&self, min_height: u64, timeout: Duration) -> Option<Hash32> {
        let mut tip = None;
        let ok = wait_until(timeout, || {
            let first = self.nodes[0].snapshot();
            let same = self.nodes.iter().all(|n| n.tip() == first.tip);
            if same && first.height >= min_height {
                tip = Some(first.tip);
                true
            } else {
                false
            }
        })
        .await;
        if ok {
            tip
        } else {
            None
        }
    }

    pub async fn shutdown(&self) {
        for n in &self.nodes {
            n.shutdown().await;
        }
    }
}

/// Polls `cond` every 10 ms until it holds or `timeout` passes.
pub async fn wait_until(timeout: Duration, mut cond: impl FnMut() -> bool) -> bool {
    let deadline = Instant::now() + timeout;
    loop {
        if cond() {
            return true;
        }
        if Instant::now() >= deadline {
            return false;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}
