use cadchain_bench::{run_benchmark, BenchConfig, GroupLaw};

fn small(seed: u64) -> BenchConfig {
    BenchConfig {
        total_txs: 200,
        rng_seed: seed,
        ..BenchConfig::default()
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn difficulty_zero_run_conserves_transactions() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&small(1), 0, dir.path()).await.unwrap();
    assert!(report.completed);
    assert!(report.audit.passed(), "{:?}", report.audit);
    assert_eq!(report.summary.total_txs, 200);
    assert_eq!(report.records.iter().map(|r| r.tx_count).sum::<usize>(), 200);
    assert!(report.records.iter().all(|r| r.tx_count >= 1 && r.e2e_ms >= 0.0 && r.mine_ms >= 0.0));
    // One group per block in the closed loop.
    let counts: Vec<usize> = report.records.iter().map(|r| r.tx_count).collect();
    assert_eq!(counts, report.groups);
    assert_eq!(report.summary.block_count, report.groups.len());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn same_seed_gives_the_same_block_sequence() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = small(77);
    cfg.nodes = 2;
    cfg.group_size_law = Some(GroupLaw { min: 2, max: 9 });
    let r1 = run_benchmark(&cfg, 0, a.path()).await.unwrap();
    let r2 = run_benchmark(&cfg, 0, b.path()).await.unwrap();
    assert_eq!(r1.groups, r2.groups);
    let seq = |r: &cadchain_bench::BenchReport| r.records.iter().map(|x| (x.block_index, x.tx_count)).collect::<Vec<_>>();
    assert_eq!(seq(&r1), seq(&r2));
    let (last, rest) = r1.groups.split_last().unwrap();
    assert!(rest.iter().all(|g| (2..=9).contains(g)));
    assert!(*last <= 9);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn low_difficulty_run_records_mining_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(5);
    cfg.total_txs = 40;
    let report = run_benchmark(&cfg, 10, dir.path()).await.unwrap();
    assert!(report.audit.passed());
    assert!(report.records.iter().all(|r| r.e2e_ms >= r.mine_ms));
    assert!(report.records.iter().any(|r| r.mine_ms > 0.0));
}
