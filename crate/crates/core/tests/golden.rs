//! Byte-exact canonical encodings, frozen in `fixtures/canonical_encoding.json`.
//! Regenerate with `UPDATE_GOLDEN=1 cargo test -p cadchain-core --test golden`.

use cadchain_core::contract::{Action, Payload, RoutePattern};
use cadchain_core::encoding::canonical_encode;
use cadchain_core::hash::sha256;
use cadchain_core::{Address, BlockHeader, Keypair, Transaction};
use serde_json::{json, Value};

const PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/canonical_encoding.json");

fn payloads() -> Vec<Payload> {
    let user = Address([0x5a; 20]);
    vec![
        Payload::AddDelegate { addr: user },
        Payload::RemoveDelegate { addr: user },
        Payload::DefinePermission {
            perm_id: 1,
            name: "View CT Scan".into(),
            route: RoutePattern::parse("/ct/list/<intid>/").unwrap(),
            action: Action::View,
        },
        Payload::DefineRole { role_id: 1, name: "oncologist".into() },
        Payload::GrantPermissionToRole { role_id: 1, perm_id: 1 },
        Payload::RevokePermissionFromRole { role_id: 1, perm_id: 1 },
        Payload::AssignRole { user, role_id: 1 },
        Payload::RevokeRole { user, role_id: 1 },
        Payload::DefineViewTemplate {
            role_id: 2,
            fields: vec!["ID".into(), "Age".into(), "Charges".into()],
        },
    ]
}

fn current() -> Value {
    let keys = Keypair::from_seed([42; 32]);
    let payload_goldens: Vec<Value> = payloads()
        .into_iter()
        .map(|p| json!({ "type": p.type_name(), "canonical": String::from_utf8(canonical_encode(&p)).unwrap() }))
        .collect();
    let tx = Transaction::signed(&keys, 0, payloads()[2].clone(), 1_600_000_000_000);
    let header = BlockHeader {
        index: 1,
        parent_hash: sha256(b"parent"),
        merkle_root: sha256(b""),
        difficulty: 8,
        pow_nonce: 330,
        timestamp: 1_700_000_000_000,
        miner: keys.address(),
    };
    json!({
        "signer_seed_hex": hex::encode([42u8; 32]),
        "payloads": payload_goldens,
        "transaction": {
            "canonical": String::from_utf8(tx.canonical_bytes()).unwrap(),
            "signing_bytes": String::from_utf8(tx.signing_bytes()).unwrap(),
            "tx_id": tx.tx_id().to_hex(),
        },
        "header": {
            "canonical": String::from_utf8(header.canonical_bytes()).unwrap(),
            "block_hash": header.hash().to_hex(),
        }
    })
}

#[test]
fn canonical_bytes_match_golden_file() {
    let now = current();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(PATH, serde_json::to_string_pretty(&now).unwrap() + "\n").unwrap();
    }
    let frozen: Value = serde_json::from_str(&std::fs::read_to_string(PATH).unwrap()).unwrap();
    assert_eq!(now, frozen);
}

#[test]
fn golden_transaction_decodes_and_verifies() {
    let frozen: Value = serde_json::from_str(&std::fs::read_to_string(PATH).unwrap()).unwrap();
    let canonical = frozen["transaction"]["canonical"].as_str().unwrap();
    let tx: Transaction = cadchain_core::encoding::strict_decode(canonical.as_bytes()).unwrap();
    assert!(tx.verify_signature());
    assert_eq!(tx.tx_id().to_hex(), frozen["transaction"]["tx_id"].as_str().unwrap());
    assert_eq!(frozen["payloads"].as_array().unwrap().len(), 9);
}
