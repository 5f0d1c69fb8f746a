//! The node runtime.
//!
//! Chain mutation goes through one mutex-guarded [`Core`], so there is a
//! single logical writer. Readers take [`Snapshot`]s from a watch channel;
//! a snapshot is immutable and stays coherent while held. Each peer
//! connection has its own reader task and writer queue, and the miner runs
//! on a dedicated OS thread that re-checks the tip between nonce slices.

use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use cadchain_core::contract::{replay, ContractState, RejectionRecord, Replay};
use cadchain_core::validate::Violation;
use cadchain_core::{pow, Block, BlockHeader, Genesis, Hash32, Transaction};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc, oneshot, watch, Notify};
use tokio::task::JoinHandle;
use tracing::{debug, info, warn};

use crate::config::NodeConfig;
use crate::mempool::{Mempool, TxRejectCode};
use crate::store::{BlockStore, StoreError};
use crate::tree::{ChainTree, Insert};
use crate::wire::{read_message, write_message, Message};

pub const HEADERS_PAGE: u32 = 64;
pub const FAULT_THRESHOLD: u32 = 10;
pub const NONCE_SLICE: u64 = 1 << 16;
pub const BACKOFF_CAP: Duration = Duration::from_secs(30);

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("stored block {index} ({hash}) failed validation: {reason}")]
    InvalidStoredBlock { index: u64, hash: Hash32, reason: String },
    #[error("binding {endpoint}: {source}")]
    Bind {
        endpoint: String,
        #[source]
        source: std::io::Error,
    },
    #[error("peer {0} unreachable")]
    PeerUnreachable(String),
    #[error("sync with {0} did not finish in time")]
    SyncTimeout(String),
}

/// Immutable view of the canonical chain and its replayed state.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub tip: Hash32,
    pub height: u64,
    pub chain: Arc<Vec<Arc<Block>>>,
    pub state: Arc<ContractState>,
    pub rejections: Arc<Vec<RejectionRecord>>,
}

impl Snapshot {
    /// Contract state as of canonical `height` (clamped to the tip).
    pub fn state_at(&self, genesis: &Genesis, height: u64) -> Arc<ContractState> {
        if height >= self.height {
            return self.state.clone();
        }
        let prefix: Vec<Block> = self.chain[..=height as usize].iter().map(|b| (**b).clone()).collect();
        Arc::new(replay(&prefix, genesis).state)
    }

    pub fn contains_tx(&self, id: &Hash32) -> bool {
        self.chain.iter().any(|b| b.tx_ids().contains(id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockOutcome {
    Extended,
    Reorged { removed: usize, added: usize },
    SideBranch,
    Parked,
    Rejected(Vec<Violation>),
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncOutcome {
    InSync,
    Updated { blocks: usize },
}

/// Exponential reconnect delay, doubling from `base` and capped at 30 s.
#[derive(Debug, Clone)]
pub struct Backoff {
    next: Duration,
}

impl Backoff {
    pub fn new(base: Duration) -> Self {
        Backoff { next: base }
    }

    pub fn next_delay(&mut self) -> Duration {
        let d = self.next;
        self.next = (self.next * 2).min(BACKOFF_CAP);
        d
    }
}

struct Core {
    tree: ChainTree,
    replay: Replay,
    mempool: Mempool,
    store: Option<BlockStore>,
    seen_txs: HashSet<Hash32>,
    seen_blocks: HashSet<Hash32>,
    mine_times: HashMap<Hash32, Duration>,
}

struct Peer {
    addr: String,
    outbox: mpsc::UnboundedSender<Message>,
    faults: u32,
    kick: Arc<Notify>,
}

struct Inner {
    config: NodeConfig,
    genesis: Genesis,
    core: Mutex<Core>,
    snapshot: watch::Sender<Arc<Snapshot>>,
    accepted: broadcast::Sender<Hash32>,
    peers: Mutex<HashMap<u64, Peer>>,
    next_peer: AtomicU64,
    forwards: AtomicU64,
    shutdown: AtomicBool,
    shutdown_signal: watch::Sender<bool>,
    tasks: Mutex<Vec<JoinHandle<()>>>,
    tx_signal: (Mutex<u64>, Condvar),
    miner_thread: Mutex<Option<std::thread::JoinHandle<()>>>,
    local_addr: Option<SocketAddr>,
}

/// Handle to a running node. Cheap to clone.
#[derive(Clone)]
pub struct Node {
    inner: Arc<Inner>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl Node {
    /// Loads and re-validates the block store, binds the listener, dials
    /// configured peers and starts the miner if enabled.
    pub async fn start(config: NodeConfig, genesis: Genesis) -> Result<Node, NodeError> {
        let (store, stored) = BlockStore::open(&config.data_dir, &genesis)?;
        let mut tree = ChainTree::new(&genesis);
        for block in stored {
            let (index, hash) = (block.index(), block.hash());
            match tree.insert(block) {
                Insert::Extended | Insert::Reorged { .. } | Insert::SideBranch => {}
                other => {
                    return Err(NodeError::InvalidStoredBlock {
                        index,
                        hash,
                        reason: format!("{other:?}"),
                    })
                }
            }
        }
        let canonical: Vec<Block> = tree.canonical_blocks().iter().map(|b| (**b).clone()).collect();
        let replayed = replay(&canonical, &genesis);
        let mut seen_txs = HashSet::new();
        for b in &canonical {
            seen_txs.extend(b.tx_ids());
        }
        let core = Core {
            tree,
            replay: replayed,
            mempool: Mempool::new(),
            store: Some(store),
            seen_txs,
            seen_blocks: HashSet::new(),
            mine_times: HashMap::new(),
        };
        let snap = Arc::new(build_snapshot(&core));

        let listener = if config.listen_endpoint.is_empty() {
            None
        } else {
            Some(TcpListener::bind(&config.listen_endpoint).await.map_err(|source| NodeError::Bind {
                endpoint: config.listen_endpoint.clone(),
                source,
            })?)
        };
        let local_addr = listener.as_ref().and_then(|l| l.local_addr().ok());

        let (snapshot, _) = watch::channel(snap);
        let (accepted, _) = broadcast::channel(8192);
        let (shutdown_signal, _) = watch::channel(false);
        let inner = Arc::new(Inner {
            config,
            genesis,
            core: Mutex::new(core),
            snapshot,
            accepted,
            peers: Mutex::new(HashMap::new()),
            next_peer: AtomicU64::new(1),
            forwards: AtomicU64::new(0),
            shutdown: AtomicBool::new(false),
            shutdown_signal,
            tasks: Mutex::new(Vec::new()),
            tx_signal: (Mutex::new(0), Condvar::new()),
            miner_thread: Mutex::new(None),
            local_addr,
        });
        let node = Node { inner };
        info!(node = %node.inner.config.node_name, height = node.height(), addr = ?local_addr, "node started");

        if let Some(listener) = listener {
            let n = node.clone();
            node.track(tokio::spawn(async move { n.accept_loop(listener).await }));
        }
        for peer in node.inner.config.peers.clone() {
            node.spawn_dialer(peer, None);
        }
        if node.inner.config.miner_enabled {
            let n = node.clone();
            let handle = std::thread::Builder::new()
                .name(format!("miner-{}", node.inner.config.node_name))
                .spawn(move || n.mining_loop())
                .expect("spawn miner thread");
            *node.inner.miner_thread.lock().unwrap() = Some(handle);
        }
        Ok(node)
    }

    pub fn config(&self) -> &NodeConfig {
        &self.inner.config
    }

    pub fn genesis(&self) -> &Genesis {
        &self.inner.genesis
    }

    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.inner.local_addr
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.inner.snapshot.borrow().clone()
    }

    pub fn watch(&self) -> watch::Receiver<Arc<Snapshot>> {
        self.inner.snapshot.subscribe()
    }

    /// Hashes of blocks as they join this node's canonical chain.
    pub fn subscribe_accepted(&self) -> broadcast::Receiver<Hash32> {
        self.inner.accepted.subscribe()
    }

    pub fn height(&self) -> u64 {
        self.snapshot().height
    }

    pub fn tip(&self) -> Hash32 {
        self.snapshot().tip
    }

    pub fn mempool_len(&self) -> usize {
        self.inner.core.lock().unwrap().mempool.len()
    }

    pub fn mempool_ids(&self) -> Vec<Hash32> {
        self.inner.core.lock().unwrap().mempool.transactions().map(Transaction::tx_id).collect()
    }

    pub fn mine_time(&self, block: &Hash32) -> Option<Duration> {
        self.inner.core.lock().unwrap().mine_times.get(block).copied()
    }

    pub fn block(&self, hash: &Hash32) -> Option<Arc<Block>> {
        self.inner.core.lock().unwrap().tree.get(hash).cloned()
    }

    pub fn peer_count(&self) -> usize {
        self.inner.peers.lock().unwrap().len()
    }

    /// Gossip messages this node has relayed on behalf of others.
    pub fn forwarded_count(&self) -> u64 {
        self.inner.forwards.load(Ordering::Relaxed)
    }

    pub fn rejection_log_jsonl(&self) -> String {
        self.inner.core.lock().unwrap().replay.rejection_log_jsonl()
    }

    fn track(&self, handle: JoinHandle<()>) {
        self.inner.tasks.lock().unwrap().push(handle);
    }

    fn is_shutdown(&self) -> bool {
        self.inner.shutdown.load(Ordering::SeqCst)
    }

    pub async fn shutdown(&self) {
        self.inner.shutdown.store(true, Ordering::SeqCst);
        let _ = self.inner.shutdown_signal.send(true);
        self.inner.tx_signal.1.notify_all();
        for t in self.inner.tasks.lock().unwrap().drain(..) {
            t.abort();
        }
        self.inner.peers.lock().unwrap().clear();
        let miner = self.inner.miner_thread.lock().unwrap().take();
        if let Some(handle) = miner {
            let _ = tokio::task::spawn_blocking(move || handle.join()).await;
        }
    }

    // ---- transactions ----

    /// Local submission: validates, admits to the mempool, gossips once.
    pub fn submit_tx(&self, tx: Transaction) -> Result<Hash32, TxRejectCode> {
        let id = self.admit(tx.clone())?;
        self.broadcast(Message::Tx { transaction: tx }, None);
        self.signal_miner();
        Ok(id)
    }

    /// Admits a group of transactions under one lock so the miner sees the
    /// whole group at once.
    pub fn submit_batch(&self, txs: Vec<Transaction>) -> Vec<Result<Hash32, TxRejectCode>> {
        let results: Vec<_> = {
            let mut core = self.inner.core.lock().unwrap();
            txs.iter().map(|tx| admit_locked(&mut core, tx.clone())).collect()
        };
        for (tx, r) in txs.into_iter().zip(&results) {
            if r.is_ok() {
                self.broadcast(Message::Tx { transaction: tx }, None);
            }
        }
        self.signal_miner();
        results
    }

    fn admit(&self, tx: Transaction) -> Result<Hash32, TxRejectCode> {
        let mut core = self.inner.core.lock().unwrap();
        admit_locked(&mut core, tx)
    }

    fn receive_tx(&self, tx: Transaction, from: u64) {
        let id = tx.tx_id();
        if self.inner.core.lock().unwrap().seen_txs.contains(&id) {
            return;
        }
        match self.admit(tx.clone()) {
            Ok(_) => {
                self.inner.forwards.fetch_add(1, Ordering::Relaxed);
                self.broadcast(Message::Tx { transaction: tx }, Some(from));
                self.signal_miner();
            }
            Err(code) => debug!(%id, ?code, "gossiped tx not admitted"),
        }
    }

    fn signal_miner(&self) {
        let (lock, cv) = &self.inner.tx_signal;
        *lock.lock().unwrap() += 1;
        cv.notify_all();
    }

    // ---- blocks ----

    /// Validates and applies a block from a peer (or the local miner when
    /// `from` is `None`).
    pub fn on_block(&self, block: Block, from: Option<u64>) -> BlockOutcome {
        let mut pending = vec![(block, from)];
        let mut first = None;
        while let Some((block, from)) = pending.pop() {
            let hash = block.hash();
            let outcome = self.on_block_one(block, from);
            if outcome_accepted(&outcome) {
                let released = self.inner.core.lock().unwrap().tree.take_orphans_of(&hash);
                pending.extend(released.into_iter().map(|b| (b, None)));
            }
            first.get_or_insert(outcome);
        }
        first.expect("at least one block processed")
    }

    fn on_block_one(&self, block: Block, from: Option<u64>) -> BlockOutcome {
        let hash = block.hash();
        let parent = block.header.parent_hash;
        let mut core = self.inner.core.lock().unwrap();
        let result = core.tree.insert(block);
        let outcome = match &result {
            Insert::Known => return BlockOutcome::Duplicate,
            Insert::Orphaned { missing_parent } => {
                drop(core);
                if let Some(peer) = from {
                    self.send_to(peer, Message::GetBlock { hash: *missing_parent });
                }
                debug!(%hash, %parent, "parked orphan");
                return BlockOutcome::Parked;
            }
            Insert::Rejected(v) => {
                let v = v.clone();
                drop(core);
                warn!(%hash, violations = ?v, "rejected block");
                if let Some(peer) = from {
                    self.record_fault(peer);
                }
                return BlockOutcome::Rejected(v);
            }
            Insert::SideBranch => BlockOutcome::SideBranch,
            Insert::Extended => BlockOutcome::Extended,
            Insert::Reorged { removed, added } => BlockOutcome::Reorged {
                removed: removed.len(),
                added: added.len(),
            },
        };

        let stored = core.tree.get(&hash).cloned().expect("just inserted");
        if let Some(store) = core.store.as_mut() {
            if let Err(e) = store.append(&stored) {
                warn!(error = %e, "block store append failed");
            }
        }
        for id in stored.tx_ids() {
            core.seen_txs.insert(id);
        }

        let mut newly_canonical = Vec::new();
        let mut returned = Vec::new();
        match result {
            Insert::Extended => {
                core.replay.apply_block(&stored);
                for id in stored.tx_ids() {
                    core.mempool.remove(&id);
                }
                newly_canonical.push(hash);
            }
            Insert::Reorged { removed, added } => {
                let canonical: Vec<Block> = core.tree.canonical_blocks().iter().map(|b| (**b).clone()).collect();
                core.replay = replay(&canonical, &self.inner.genesis);
                let mut added_ids = HashSet::new();
                for b in &added {
                    for id in b.tx_ids() {
                        core.mempool.remove(&id);
                        added_ids.insert(id);
                    }
                    newly_canonical.push(b.hash());
                }
                for b in &removed {
                    for tx in &b.transactions {
                        if !added_ids.contains(&tx.tx_id()) {
                            returned.push(tx.clone());
                        }
                    }
                }
                let state = core.replay.state.clone();
                returned.retain(|tx| core.mempool.insert(tx.clone(), &state).is_ok());
                info!(node = %self.inner.config.node_name, removed = removed.len(), added = added.len(), returned = returned.len(), "reorg");
            }
            _ => {}
        }
        if !newly_canonical.is_empty() {
            let state = core.replay.state.clone();
            core.mempool.revalidate(&state);
            let snap = Arc::new(build_snapshot(&core));
            self.inner.snapshot.send_replace(snap);
        }
        let first_time = core.seen_blocks.insert(hash);
        drop(core);

        for h in newly_canonical {
            let _ = self.inner.accepted.send(h);
        }
        if first_time {
            if from.is_some() {
                self.inner.forwards.fetch_add(1, Ordering::Relaxed);
            }
            self.broadcast(Message::Block { block: (*stored).clone() }, from);
        }
        // Transactions orphaned by a reorg are re-announced so a miner on the
        // winning side can pick them up.
        for tx in returned {
            self.broadcast(Message::Tx { transaction: tx }, None);
        }
        if !self.inner.core.lock().unwrap().mempool.is_empty() {
            self.signal_miner();
        }
        outcome
    }

    // ---- mining ----

    fn mining_loop(&self) {
        let max_txs = self.inner.config.max_block_txs.min(self.inner.genesis.max_block_txs);
        let difficulty = self.inner.genesis.difficulty_bits;
        let miner = self.inner.config.miner_address;
        'outer: while !self.is_shutdown() {
            let (tip_header, draft) = {
                let core = self.inner.core.lock().unwrap();
                let draft = core.mempool.draft(max_txs, &core.replay.state);
                (core.tree.tip().header.clone(), draft)
            };
            if draft.is_empty() {
                let (lock, cv) = &self.inner.tx_signal;
                let guard = lock.lock().unwrap();
                let _ = cv.wait_timeout(guard, Duration::from_millis(20)).unwrap();
                continue;
            }
            let tip_hash = tip_header.hash();
            let mut template = Block::template(&tip_header, &draft, difficulty, now_ms(), miner);
            let started = Instant::now();
            let mut start = 0u64;
            let sealed: BlockHeader = loop {
                if self.is_shutdown() {
                    return;
                }
                if self.inner.snapshot.borrow().tip != tip_hash {
                    debug!("tip moved: abandoning draft");
                    continue 'outer;
                }
                match pow::mine_from(&template, start, NONCE_SLICE) {
                    Ok(h) => break h,
                    Err(e) if e.next_nonce == u64::MAX => {
                        template.timestamp = now_ms().max(template.timestamp + 1);
                        start = 0;
                    }
                    Err(e) => start = e.next_nonce,
                }
            };
            let elapsed = started.elapsed();
            let block = Block {
                header: sealed,
                transactions: draft,
            };
            let hash = block.hash();
            self.inner.core.lock().unwrap().mine_times.insert(hash, elapsed);
            let outcome = self.on_block(block, None);
            debug!(node = %self.inner.config.node_name, %hash, ?outcome, ms = elapsed.as_millis() as u64, "mined");
        }
    }

    // ---- networking ----

    fn broadcast(&self, msg: Message, except: Option<u64>) {
        let peers = self.inner.peers.lock().unwrap();
        for (id, p) in peers.iter() {
            if Some(*id) != except {
                let _ = p.outbox.send(msg.clone());
            }
        }
    }

    fn send_to(&self, peer: u64, msg: Message) {
        if let Some(p) = self.inner.peers.lock().unwrap().get(&peer) {
            let _ = p.outbox.send(msg);
        }
    }

    fn record_fault(&self, peer: u64) {
        let mut peers = self.inner.peers.lock().unwrap();
        if let Some(p) = peers.get_mut(&peer) {
            p.faults += 1;
            if p.faults >= FAULT_THRESHOLD {
                warn!(addr = %p.addr, "disconnecting faulty peer");
                p.kick.notify_one();
                peers.remove(&peer);
            }
        }
    }

    async fn accept_loop(self, listener: TcpListener) {
        loop {
            match listener.accept().await {
                Ok((stream, addr)) => {
                    let n = self.clone();
                    self.track(tokio::spawn(async move {
                        n.run_connection(stream, addr.to_string(), None).await
                    }));
                }
                Err(e) => {
                    warn!(error = %e, "accept failed");
                    tokio::time::sleep(Duration::from_millis(50)).await;
                }
            }
        }
    }

    async fn connect_with_backoff(&self, addr: &str, max_attempts: Option<u32>) -> Option<TcpStream> {
        let mut backoff = Backoff::new(Duration::from_millis(50));
        let mut attempts = 0u32;
        while !self.is_shutdown() {
            match TcpStream::connect(addr).await {
                Ok(s) => {
                    let _ = s.set_nodelay(true);
                    return Some(s);
                }
                Err(e) => {
                    attempts += 1;
                    if max_attempts.is_some_and(|m| attempts >= m) {
                        return None;
                    }
                    let d = backoff.next_delay();
                    debug!(%addr, error = %e, delay_ms = d.as_millis() as u64, "peer unreachable, retrying");
                    tokio::time::sleep(d).await;
                }
            }
        }
        None
    }

    /// Keeps a persistent connection to `addr`, reconnecting when it drops.
    fn spawn_dialer(&self, addr: String, first_sync: Option<oneshot::Sender<SyncOutcome>>) {
        let n = self.clone();
        self.track(tokio::spawn(async move {
            let mut waiter = first_sync;
            while !n.is_shutdown() {
                let Some(stream) = n.connect_with_backoff(&addr, None).await else {
                    return;
                };
                n.run_connection(stream, addr.clone(), waiter.take()).await;
                tokio::time::sleep(Duration::from_millis(100)).await;
            }
        }));
    }

    /// Connects to `addr` (kept as a persistent peer afterwards) and pulls
    /// any heavier chain it has.
    pub async fn sync_with_peer(&self, addr: &str) -> Result<SyncOutcome, NodeError> {
        let stream = self
            .connect_with_backoff(addr, Some(8))
            .await
            .ok_or_else(|| NodeError::PeerUnreachable(addr.to_string()))?;
        let (tx, rx) = oneshot::channel();
        let n = self.clone();
        let a = addr.to_string();
        self.track(tokio::spawn(async move {
            n.run_connection(stream, a.clone(), Some(tx)).await;
            // Keep the peer after the first session ends.
            n.spawn_dialer(a, None);
        }));
        match tokio::time::timeout(Duration::from_secs(120), rx).await {
            Ok(Ok(outcome)) => Ok(outcome),
            _ => Err(NodeError::SyncTimeout(addr.to_string())),
        }
    }

    /// Adds a persistent peer without waiting for sync.
    pub fn add_peer(&self, addr: &str) {
        self.spawn_dialer(addr.to_string(), None);
    }

    async fn run_connection(&self, stream: TcpStream, addr: String, waiter: Option<oneshot::Sender<SyncOutcome>>) {
        let _ = stream.set_nodelay(true);
        let (mut reader, mut writer) = stream.into_split();
        let (outbox, mut rx) = mpsc::unbounded_channel::<Message>();
        let kick = Arc::new(Notify::new());
        let id = self.inner.next_peer.fetch_add(1, Ordering::Relaxed);
        self.inner.peers.lock().unwrap().insert(
            id,
            Peer {
                addr: addr.clone(),
                outbox: outbox.clone(),
                faults: 0,
                kick: kick.clone(),
            },
        );
        let writer_task = tokio::spawn(async move {
            while let Some(msg) = rx.recv().await {
                if write_message(&mut writer, &msg).await.is_err() {
                    break;
                }
            }
        });

        let snap = self.snapshot();
        let _ = outbox.send(Message::Hello {
            network_id: self.inner.genesis.network_id.clone(),
            tip_hash: snap.tip,
            height: snap.height,
        });

        let mut sync = SyncSession::new(waiter);
        let mut shutdown = self.inner.shutdown_signal.subscribe();
        loop {
            tokio::select! {
                msg = read_message(&mut reader) => match msg {
                    Ok(Some(m)) => {
                        if !self.handle_message(id, &outbox, &mut sync, m) {
                            break;
                        }
                    }
                    Ok(None) => break,
                    Err(e) => {
                        debug!(%addr, error = %e, "connection read failed");
                        break;
                    }
                },
                _ = kick.notified() => break,
                _ = shutdown.changed() => break,
            }
        }
        self.inner.peers.lock().unwrap().remove(&id);
        writer_task.abort();
    }

    /// Returns false when the connection should close.
    fn handle_message(
        &self,
        peer: u64,
        outbox: &mpsc::UnboundedSender<Message>,
        sync: &mut SyncSession,
        msg: Message,
    ) -> bool {
        match msg {
            Message::Hello {
                network_id, tip_hash, ..
            } => {
                if network_id != self.inner.genesis.network_id {
                    warn!(%network_id, "peer on a different network");
                    return false;
                }
                let known = self.inner.core.lock().unwrap().tree.contains(&tip_hash);
                if known {
                    sync.finish(SyncOutcome::InSync);
                } else {
                    sync.phase = SyncPhase::Headers { collected: Vec::new() };
                    let _ = outbox.send(Message::GetHeaders {
                        from_hash: tip_hash,
                        count: HEADERS_PAGE,
                    });
                }
            }
            Message::GetHeaders { from_hash, count } => {
                let headers = self
                    .inner
                    .core
                    .lock()
                    .unwrap()
                    .tree
                    .headers_back(&from_hash, count.min(HEADERS_PAGE * 4) as usize);
                let _ = outbox.send(Message::Headers { headers });
            }
            Message::Headers { headers } => {
                let SyncPhase::Headers { collected } = &mut sync.phase else {
                    return true;
                };
                let page_full = headers.len() as u32 >= HEADERS_PAGE;
                let mut found = false;
                {
                    let core = self.inner.core.lock().unwrap();
                    for h in &headers {
                        if core.tree.contains(&h.hash()) {
                            found = true;
                            break;
                        }
                        collected.push(h.clone());
                    }
                }
                if !found && page_full {
                    let from_hash = collected.last().expect("full page").parent_hash;
                    let _ = outbox.send(Message::GetHeaders {
                        from_hash,
                        count: HEADERS_PAGE,
                    });
                    return true;
                }
                let missing: Vec<Hash32> = collected.iter().rev().map(BlockHeader::hash).collect();
                if missing.is_empty() {
                    sync.finish(SyncOutcome::InSync);
                    return true;
                }
                for hash in &missing {
                    let _ = outbox.send(Message::GetBlock { hash: *hash });
                }
                sync.phase = SyncPhase::Blocks {
                    remaining: missing.into_iter().collect(),
                    fetched: 0,
                };
            }
            Message::GetBlock { hash } => {
                let block = self.inner.core.lock().unwrap().tree.get_any(&hash);
                if let Some(b) = block {
                    let _ = outbox.send(Message::Block { block: (*b).clone() });
                }
            }
            Message::Block { block } => {
                let hash = block.hash();
                let outcome = self.on_block(block, Some(peer));
                if let SyncPhase::Blocks { remaining, fetched } = &mut sync.phase {
                    if remaining.remove(&hash) && outcome_accepted_or_known(&outcome) {
                        *fetched += 1;
                    }
                    if remaining.is_empty() {
                        let n = *fetched;
                        sync.finish(SyncOutcome::Updated { blocks: n });
                    }
                }
            }
            Message::Tx { transaction } => self.receive_tx(transaction, peer),
        }
        true
    }
}

fn outcome_accepted(o: &BlockOutcome) -> bool {
    matches!(
        o,
        BlockOutcome::Extended | BlockOutcome::Reorged { .. } | BlockOutcome::SideBranch
    )
}

fn outcome_accepted_or_known(o: &BlockOutcome) -> bool {
    outcome_accepted(o) || *o == BlockOutcome::Duplicate
}

fn admit_locked(core: &mut Core, tx: Transaction) -> Result<Hash32, TxRejectCode> {
    let id = tx.tx_id();
    if core.seen_txs.contains(&id) || core.mempool.contains(&id) {
        return Err(TxRejectCode::DuplicateTx);
    }
    if !tx.verify_signature() {
        return Err(TxRejectCode::BadSig);
    }
    if tx.payload.validate().is_err() {
        return Err(TxRejectCode::MalformedPayload);
    }
    let state = core.replay.state.clone();
    core.mempool.insert(tx, &state)?;
    core.seen_txs.insert(id);
    Ok(id)
}

fn build_snapshot(core: &Core) -> Snapshot {
    Snapshot {
        tip: core.tree.tip_hash(),
        height: core.tree.height(),
        chain: Arc::new(core.tree.canonical_blocks()),
        state: Arc::new(core.replay.state.clone()),
        rejections: Arc::new(core.replay.rejections.clone()),
    }
}

enum SyncPhase {
    Idle,
    Headers { collected: Vec<BlockHeader> },
    Blocks { remaining: HashSet<Hash32>, fetched: usize },
}

struct SyncSession {
    phase: SyncPhase,
    waiter: Option<oneshot::Sender<SyncOutcome>>,
}

impl SyncSession {
    fn new(waiter: Option<oneshot::Sender<SyncOutcome>>) -> Self {
        SyncSession {
            phase: SyncPhase::Idle,
            waiter,
        }
    }

    fn finish(&mut self, outcome: SyncOutcome) {
        self.phase = SyncPhase::Idle;
        if let Some(w) = self.waiter.take() {
            let _ = w.send(outcome);
        }
    }
}
