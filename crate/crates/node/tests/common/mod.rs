#![allow(dead_code)]

use cadchain_core::contract::{Action, Payload, RoutePattern};
use cadchain_core::{ConsortiumMember, Genesis, Keypair, Transaction};

pub fn owner() -> Keypair {
    Keypair::from_seed([1; 32])
}

pub fn genesis(difficulty_bits: u32, max_block_txs: usize) -> Genesis {
    Genesis {
        network_id: "cad-net-test".into(),
        difficulty_bits,
        max_block_txs,
        owner_address: owner().address(),
        consortium: vec![ConsortiumMember {
            name: "hospital-a".into(),
            address: Keypair::from_seed([2; 32]).address(),
        }],
        genesis_timestamp: 1_700_000_000_000,
    }
}

/// An always-valid owner transaction with the given nonce.
pub fn define_perm(keys: &Keypair, nonce: u64) -> Transaction {
    let payload = Payload::DefinePermission {
        perm_id: nonce + 1,
        name: format!("perm-{nonce}"),
        route: RoutePattern::parse("/ct/list/<intid>/").unwrap(),
        action: Action::View,
    };
    Transaction::signed(keys, nonce, payload, 1_700_000_000_000 + nonce)
}

pub fn init_tracing() {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_test_writer()
        .try_init();
}
