//! Pending transactions awaiting inclusion.

use std::collections::{BTreeMap, HashMap};

use cadchain_core::contract::ContractState;
use cadchain_core::{Address, Hash32, Transaction};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum TxRejectCode {
    #[error("transaction already known")]
    DuplicateTx,
    #[error("signature does not verify")]
    BadSig,
    #[error("nonce below the sender's chain nonce")]
    StaleNonce,
    #[error("payload is structurally invalid")]
    MalformedPayload,
}

#[derive(Debug, Default)]
pub struct Mempool {
    by_arrival: BTreeMap<u64, Transaction>,
    ids: HashMap<Hash32, u64>,
    // sender -> nonce -> arrival sequence
    by_sender: HashMap<Address, BTreeMap<u64, u64>>,
    next_seq: u64,
}

impl Mempool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.by_arrival.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_arrival.is_empty()
    }

    pub fn contains(&self, id: &Hash32) -> bool {
        self.ids.contains_key(id)
    }

    pub fn transactions(&self) -> impl Iterator<Item = &Transaction> {
        self.by_arrival.values()
    }

    /// Admits `tx` given the sender's next nonce on the current chain. A
    /// nonce above that is parked until the gap fills.
    pub fn insert(&mut self, tx: Transaction, state: &ContractState) -> Result<Hash32, TxRejectCode> {
        let id = tx.tx_id();
        if self.ids.contains_key(&id) {
            return Err(TxRejectCode::DuplicateTx);
        }
        if tx.nonce < state.next_nonce(&tx.sender) {
            return Err(TxRejectCode::StaleNonce);
        }
        let slots = self.by_sender.entry(tx.sender).or_default();
        if slots.contains_key(&tx.nonce) {
            // Another transaction already holds this (sender, nonce) slot.
            return Err(TxRejectCode::DuplicateTx);
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        slots.insert(tx.nonce, seq);
        self.ids.insert(id, seq);
        self.by_arrival.insert(seq, tx);
        Ok(id)
    }

    pub fn remove(&mut self, id: &Hash32) -> Option<Transaction> {
        let seq = self.ids.remove(id)?;
        let tx = self.by_arrival.remove(&seq)?;
        if let Some(slots) = self.by_sender.get_mut(&tx.sender) {
            slots.remove(&tx.nonce);
            if slots.is_empty() {
                self.by_sender.remove(&tx.sender);
            }
        }
        Some(tx)
    }

    /// Drops transactions whose nonce the chain has already consumed.
    pub fn revalidate(&mut self, state: &ContractState) -> usize {
        let stale: Vec<Hash32> = self
            .by_arrival
            .values()
            .filter(|tx| tx.nonce < state.next_nonce(&tx.sender))
            .map(Transaction::tx_id)
            .collect();
        for id in &stale {
            self.remove(id);
        }
        stale.len()
    }

    /// Transactions in the gap-free nonce run of each sender, starting at the
    /// chain's next expected nonce.
    pub fn ready_len(&self, state: &ContractState) -> usize {
        self.by_sender
            .iter()
            .map(|(sender, slots)| {
                let mut expect = state.next_nonce(sender);
                let mut run = 0;
                for nonce in slots.keys() {
                    if *nonce != expect {
                        break;
                    }
                    expect += 1;
                    run += 1;
                }
                run
            })
            .sum()
    }

    /// Parked transactions waiting for a nonce gap to fill.
    pub fn future_len(&self, state: &ContractState) -> usize {
        self.len() - self.ready_len(state)
    }

    /// Up to `limit` ready transactions in arrival order, respecting each
    /// sender's nonce sequence.
    pub fn draft(&self, limit: usize, state: &ContractState) -> Vec<Transaction> {
        let mut expect: HashMap<Address, u64> = HashMap::new();
        let mut taken: Vec<u64> = Vec::new();
        let mut out = Vec::new();
        loop {
            let mut progressed = false;
            for (seq, tx) in &self.by_arrival {
                if out.len() >= limit {
                    return out;
                }
                if taken.contains(seq) {
                    continue;
                }
                let want = expect.entry(tx.sender).or_insert_with(|| state.next_nonce(&tx.sender));
                if tx.nonce == *want {
                    *want += 1;
                    taken.push(*seq);
                    out.push(tx.clone());
                    progressed = true;
                }
            }
            if !progressed {
                return out;
            }
        }
    }
}
