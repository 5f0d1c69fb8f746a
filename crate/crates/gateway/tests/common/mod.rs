#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use cadchain_core::{ConsortiumMember, Genesis, Keypair, Transaction};
use cadchain_gateway::keys::{KeyDirectory, KeyEntry};
use cadchain_gateway::records::RecordStore;
use cadchain_gateway::{auth, fixtures, router, App};
use cadchain_node::cluster::{node_config, wait_until};
use cadchain_node::{now_ms, Node};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub struct Harness {
    pub app: Arc<App>,
    pub router: Router,
    pub node: Node,
    pub owner: Keypair,
    pub oncologist: Keypair,
    pub pharmacist: Keypair,
    pub stranger: Keypair,
    pub records_dir: PathBuf,
    _dir: tempfile::TempDir,
}

pub fn genesis(owner: &Keypair) -> Genesis {
    Genesis {
        network_id: "cad-gateway-test".into(),
        difficulty_bits: 4,
        max_block_txs: 16,
        owner_address: owner.address(),
        consortium: vec![ConsortiumMember {
            name: "hospital-a".into(),
            address: owner.address(),
        }],
        genesis_timestamp: 1_700_000_000_000,
    }
}

/// A mining node plus gateway, records seeded with the PT0986 fixture and
/// `extra` synthetic patients.
pub async fn harness(extra: usize) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let records_dir = dir.path().join("records");
    std::fs::create_dir_all(&records_dir).unwrap();
    std::fs::copy(fixture("fig4_patient_PT0986.json"), records_dir.join("PT0986.json")).unwrap();
    for i in 0..extra {
        let id = format!("PT{:04}", 1000 + i);
        let body = serde_json::json!({"ID": id, "Age": 20 + i % 60, "Gender": "Male", "Charges": 100.5 + i as f64});
        std::fs::write(records_dir.join(format!("{id}.json")), body.to_string()).unwrap();
    }
    let owner = Keypair::from_seed([1; 32]);
    let oncologist = Keypair::from_seed([31; 32]);
    let pharmacist = Keypair::from_seed([32; 32]);
    let stranger = Keypair::from_seed([33; 32]);
    let keys = KeyDirectory::new(
        [&oncologist, &pharmacist, &stranger]
            .iter()
            .map(|k| KeyEntry {
                address: k.address(),
                public_key: k.public_key(),
            })
            .collect(),
    )
    .unwrap();
    let node = Node::start(node_config("gw", &dir.path().join("node"), true, 0), genesis(&owner))
        .await
        .unwrap();
    let app = App::new(node.clone(), RecordStore::open(&records_dir).unwrap(), keys);
    Harness {
        router: router(app.clone()),
        app,
        node,
        owner,
        oncologist,
        pharmacist,
        stranger,
        records_dir,
        _dir: dir,
    }
}

impl Harness {
    pub async fn call(&self, req: Request<Body>) -> (StatusCode, Value, String) {
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let text = String::from_utf8(bytes.to_vec()).unwrap();
        let value = serde_json::from_str(&text).unwrap_or(Value::Null);
        (status, value, text)
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Value, String) {
        self.call(Request::get(uri).body(Body::empty()).unwrap()).await
    }

    pub async fn post_raw(&self, body: Vec<u8>) -> (StatusCode, Value, String) {
        let req = Request::post("/api/tx")
            .header("content-type", "application/json")
            .body(Body::from(body))
            .unwrap();
        self.call(req).await
    }

    pub async fn post_tx(&self, tx: &Transaction) -> (StatusCode, Value, String) {
        self.post_raw(serde_json::to_vec(tx).unwrap()).await
    }

    pub async fn get_signed(&self, keys: &Keypair, path: &str) -> (StatusCode, Value, String) {
        let header = auth::sign_request(keys, "GET", path, now_ms());
        self.get_with_auth(path, &header).await
    }

    pub async fn get_with_auth(&self, path: &str, header: &str) -> (StatusCode, Value, String) {
        let req = Request::get(path).header(auth::AUTH_HEADER, header).body(Body::empty()).unwrap();
        self.call(req).await
    }

    /// Posts every tx through the HTTP API and waits for all to confirm.
    pub async fn submit_and_confirm(&self, txs: &[Transaction]) {
        for tx in txs {
            let (status, body, _) = self.post_tx(tx).await;
            assert_eq!(status, StatusCode::ACCEPTED, "{body}");
        }
        let ids: Vec<_> = txs.iter().map(Transaction::tx_id).collect();
        let ok = wait_until(Duration::from_secs(30), || {
            let snap = self.node.snapshot();
            ids.iter().all(|id| snap.contains_tx(id))
        })
        .await;
        assert!(ok, "transactions confirmed");
    }

    /// Loads the permission table, the two roles with their templates, and
    /// assigns oncologist and pharmacist.
    pub async fn load_role_pack(&self) -> usize {
        let perms = fixtures::load_permissions(&fixture("fig3_permissions.json")).unwrap();
        let pack = fixtures::load_templates(&fixture("fig4_templates.json")).unwrap();
        let mut payloads = fixtures::setup_payloads(&perms, &pack);
        payloads.extend(fixtures::assignments(&[
            (self.oncologist.address(), 1),
            (self.pharmacist.address(), 2),
        ]));
        let nonce = self.node.snapshot().state.next_nonce(&self.owner.address());
        let txs = fixtures::sign_all(&self.owner, nonce, payloads, now_ms());
        self.submit_and_confirm(&txs).await;
        txs.len()
    }
}
