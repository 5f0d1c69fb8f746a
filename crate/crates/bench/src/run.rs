//! Closed-loop driver: each transaction group is submitted to the miner in
//! one batch, and the next group follows once the previous one is accepted
//! by every node (plus `submit_delay_ms`).

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use cadchain_core::contract::{replay, Payload};
use cadchain_core::{Block, ConsortiumMember, Genesis, Hash32};
use cadchain_node::{Cluster, ClusterSpec};
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;
use tracing::info;

use crate::config::BenchConfig;
use crate::workload;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub block_index: u64,
    pub tx_count: usize,
    pub mine_ms: f64,
    pub e2e_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub block_count: usize,
    pub total_txs: usize,
    pub min_e2e_ms: f64,
    pub median_e2e_ms: f64,
    pub max_e2e_ms: f64,
    pub difficulty_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    pub confirmed_once: bool,
    pub contiguous_indices: bool,
    pub assignments_match: bool,
    pub converged: bool,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.confirmed_once && self.contiguous_indices && self.assignments_match && self.converged
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub summary: Summary,
    pub groups: Vec<usize>,
    pub completed: bool,
    pub audit: Audit,
    pub wall_time: Duration,
}

fn ms(d: Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1e3
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

pub fn summarize(records: &[BenchRecord], difficulty_bits: u32) -> Summary {
    let e2e: Vec<f64> = records.iter().map(|r| r.e2e_ms).collect();
    Summary {
        block_count: records.len(),
        total_txs: records.iter().map(|r| r.tx_count).sum(),
        min_e2e_ms: e2e.iter().copied().reduce(f64::min).unwrap_or(0.0),
        median_e2e_ms: median(&e2e),
        max_e2e_ms: e2e.iter().copied().reduce(f64::max).unwrap_or(0.0),
        difficulty_bits,
    }
}

pub fn bench_genesis(cfg: &BenchConfig, difficulty_bits: u32) -> Genesis {
    Genesis {
        network_id: "cad-bench".into(),
        difficulty_bits,
        max_block_txs: cfg.max_block_txs,
        owner_address: workload::owner_key().address(),
        consortium: (0..cfg.nodes)
            .map(|i| ConsortiumMember {
                name: format!("institution-{i}"),
                address: cadchain_node::cluster::miner_key(i).address(),
            })
            .collect(),
        genesis_timestamp: 1_600_000_000_000,
    }
}

struct Acceptance {
    counts: HashMap<Hash32, HashSet<usize>>,
}

/// Boots `cfg.nodes` nodes under `base_dir` (node 0 mines), drives the
/// workload and returns one record per block.
pub async fn run_benchmark(cfg: &BenchConfig, difficulty_bits: u32, base_dir: &Path) -> anyhow::Result<BenchReport> {
    cfg.validate()?;
    let started = Instant::now();
    let deadline = tokio::time::Instant::now() + Duration::from_secs(cfg.timeout_s);
    let genesis = bench_genesis(cfg, difficulty_bits);
    let mut spec = ClusterSpec::new(cfg.nodes, vec![0]);
    spec.max_block_txs = cfg.max_block_txs;
    let cluster = Cluster::start(&genesis, &spec, base_dir).await?;
    let n = cluster.nodes.len();

    let (events_tx, mut events) = mpsc::unbounded_channel::<(usize, Hash32, Instant)>();
    let mut forwarders = Vec::new();
    for (i, node) in cluster.nodes.iter().enumerate() {
        let mut rx = node.subscribe_accepted();
        let tx = events_tx.clone();
        forwarders.push(tokio::spawn(async move {
            while let Ok(h) = rx.recv().await {
                if tx.send((i, h, Instant::now())).is_err() {
                    break;
                }
            }
        }));
    }

    let txs = workload::transactions(cfg.total_txs, cfg.rng_seed, cadchain_node::now_ms());
    let groups = workload::partition(cfg.total_txs, cfg.group_law(), cfg.rng_seed);
    let miner = &cluster.nodes[0];
    let mut acceptance = Acceptance { counts: HashMap::new() };
    let mut submitted_at: HashMap<Hash32, Instant> = HashMap::new();
    let mut records = Vec::new();
    let mut completed = true;
    let mut offset = 0;

    'groups: for (g, &size) in groups.iter().enumerate() {
        let group: Vec<_> = txs[offset..offset + size].to_vec();
        offset += size;
        let mut pending: HashSet<Hash32> = group.iter().map(|t| t.tx_id()).collect();
        let t0 = Instant::now();
        for id in &pending {
            submitted_at.insert(*id, t0);
        }
        for r in miner.submit_batch(group) {
            r.map_err(|code| anyhow::anyhow!("workload tx rejected at submission: {code:?}"))?;
        }
        while !pending.is_empty() {
            let Ok(Some((node, hash, at))) = tokio::time::timeout_at(deadline, events.recv()).await else {
                completed = false;
                break 'groups;
            };
            let seen = acceptance.counts.entry(hash).or_default();
            seen.insert(node);
            if seen.len() < n {
                continue;
            }
            let block: Block = (*miner.block(&hash).expect("miner holds every accepted block")).clone();
            let ids = block.tx_ids();
            let first = ids.iter().filter_map(|id| submitted_at.get(id)).min().copied().unwrap_or(t0);
            for id in &ids {
                pending.remove(id);
            }
            records.push(BenchRecord {
                block_index: block.index(),
                tx_count: ids.len(),
                mine_ms: miner.mine_time(&hash).map(ms).unwrap_or(0.0),
                e2e_ms: ms(at.saturating_duration_since(first)),
            });
        }
        if g % 10 == 0 {
            info!(group = g, groups = groups.len(), blocks = records.len(), "progress");
        }
        if cfg.submit_delay_ms > 0 {
            tokio::time::sleep(Duration::from_millis(cfg.submit_delay_ms)).await;
        }
    }
    records.sort_by_key(|r| r.block_index);

    let final_snap = miner.snapshot();
    let converged = cluster.wait_converged(final_snap.height, Duration::from_secs(10)).await.is_some();
    let chain: Vec<Block> = final_snap.chain.iter().map(|b| (**b).clone()).collect();
    let chain_ids: Vec<Hash32> = chain.iter().flat_map(|b| b.tx_ids()).collect();
    let generated: HashSet<Hash32> = txs.iter().map(|t| t.tx_id()).collect();
    let unique: HashSet<&Hash32> = chain_ids.iter().collect();
    let confirmed_once = completed && chain_ids.len() == generated.len() && unique.len() == chain_ids.len()
        && chain_ids.iter().all(|id| generated.contains(id));
    let contiguous_indices = records.iter().enumerate().all(|(i, r)| r.block_index == i as u64 + 1);
    let assigns = chain
        .iter()
        .flat_map(|b| &b.transactions)
        .filter(|t| matches!(t.payload, Payload::AssignRole { .. }))
        .count();
    let replayed = replay(&chain, &genesis);
    let assignments_match = replayed.rejections.is_empty() && replayed.state.assignment_count() == assigns;

    for f in forwarders {
        f.abort();
    }
    cluster.shutdown().await;
    Ok(BenchReport {
        summary: summarize(&records, difficulty_bits),
        records,
        groups,
        completed,
        audit: Audit {
            confirmed_once,
            contiguous_indices,
            assignments_match,
            converged,
        },
        wall_time: started.elapsed(),
    })
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(["block_index", "tx_count", "mine_ms", "e2e_ms"])?;
    }
    w.flush()?;
    Ok(())
}
