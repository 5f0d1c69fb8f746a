//! HTTP gateway in front of a chain node: transaction submission, access
//! checks, chain and state inspection, and role-projected record delivery.

pub mod auth;
pub mod fixtures;
pub mod keys;
pub mod records;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{HeaderMap, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cadchain_core::contract::{check_access, AccessDecision, Action, ContractState, Payload};
use cadchain_core::{Address, Hash32, Transaction};
use cadchain_node::{now_ms, Node, Snapshot};
use serde::Serialize;
use serde_json::{json, Value};

use crate::keys::KeyDirectory;
use crate::records::{is_known_field, project_view, RecordStore};

pub use records::{PatientRecord, Projection};

pub const MAX_CHAIN_PAGE: u64 = 500;

/// The six record routes: (modality, operation).
pub const RECORD_ROUTES: [(&str, &str); 6] = [
    ("ct", "list"),
    ("mri", "list"),
    ("pet", "list"),
    ("histo", "list"),
    ("ct", "del"),
    ("pet", "del"),
];

pub struct App {
    node: Node,
    records: RecordStore,
    keys: KeyDirectory,
    confirmed: Mutex<Option<(Hash32, u64, Arc<ContractState>)>>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    code: String,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    decision: Option<AccessDecision>,
}

fn error(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    let body = ErrorBody {
        code: code.to_string(),
        message: message.into(),
        decision: None,
    };
    (status, Json(body)).into_response()
}

impl App {
    pub fn new(node: Node, records: RecordStore, keys: KeyDirectory) -> Arc<App> {
        Arc::new(App {
            node,
            records,
            keys,
            confirmed: Mutex::new(None),
        })
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn keys(&self) -> &KeyDirectory {
        &self.keys
    }

    /// State at tip minus `confirmations`, with the height it reflects.
    pub fn confirmed_state(&self, snap: &Snapshot) -> (u64, Arc<ContractState>) {
        let height = snap.height.saturating_sub(self.node.config().confirmations);
        let mut cache = self.confirmed.lock().unwrap();
        if let Some((tip, h, state)) = cache.as_ref() {
            if *tip == snap.tip && *h == height {
                return (height, state.clone());
            }
        }
        let state = snap.state_at(self.node.genesis(), height);
        *cache = Some((snap.tip, height, state.clone()));
        (height, state)
    }
}

pub fn router(app: Arc<App>) -> Router {
    let mut r = Router::new()
        .route("/api/tx", post(submit_tx))
        .route("/api/access", get(access))
        .route("/api/chain", get(chain))
        .route("/api/state/{kind}", get(state))
        .route("/api/events", get(events));
    for (modality, op) in RECORD_ROUTES {
        r = r.route(&format!("/{modality}/{op}/{{intid}}/"), get(record));
    }
    r.with_state(app)
}

/// Action a record route exercises.
pub fn route_action(path: &str) -> Action {
    if path.contains("/del/") {
        Action::Delete
    } else {
        Action::View
    }
}

async fn submit_tx(State(app): State<Arc<App>>, body: Bytes) -> Response {
    let tx: Transaction = match serde_json::from_slice(&body) {
        Ok(tx) => tx,
        Err(e) => return error(StatusCode::BAD_REQUEST, "MalformedPayload", e.to_string()),
    };
    if let Payload::DefineViewTemplate { fields, .. } = &tx.payload {
        if let Some(bad) = fields.iter().find(|f| !is_known_field(f)) {
            return error(StatusCode::BAD_REQUEST, "MalformedPayload", format!("unknown record field {bad:?}"));
        }
    }
    if app.node.peer_count() == 0 && !app.node.config().miner_enabled {
        return error(StatusCode::SERVICE_UNAVAILABLE, "NodeUnavailable", "gateway node has no peers");
    }
    match app.node.submit_tx(tx) {
        Ok(id) => (StatusCode::ACCEPTED, Json(json!({"tx_id": id, "status": "pending"}))).into_response(),
        Err(code) => error(StatusCode::BAD_REQUEST, &format!("{code:?}"), code.to_string()),
    }
}

fn param<'a>(q: &'a HashMap<String, String>, key: &str) -> Result<&'a str, Response> {
    q.get(key)
        .map(String::as_str)
        .ok_or_else(|| error(StatusCode::BAD_REQUEST, "BadRequest", format!("missing parameter `{key}`")))
}

async fn access(State(app): State<Arc<App>>, Query(q): Query<HashMap<String, String>>) -> Response {
    let parsed = (|| {
        let user: Address = param(&q, "user")?
            .parse()
            .map_err(|e| error(StatusCode::BAD_REQUEST, "BadRequest", format!("user: {e}")))?;
        let action: Action = param(&q, "action")?
            .parse()
            .map_err(|e: String| error(StatusCode::BAD_REQUEST, "BadRequest", e))?;
        let path = param(&q, "path")?.to_string();
        Ok::<_, Response>((user, action, path))
    })();
    let (user, action, path) = match parsed {
        Ok(v) => v,
        Err(r) => return r,
    };
    let snap = app.node.snapshot();
    let (height, state) = app.confirmed_state(&snap);
    let d = check_access(&state, &user, action, &path);
    Json(json!({
        "verdict": d.verdict,
        "matched_permission": d.matched_permission,
        "via_role": d.via_role,
        "reason": d.reason,
        "height": height,
    }))
    .into_response()
}

async fn record(State(app): State<Arc<App>>, method: Method, uri: Uri, headers: HeaderMap) -> Response {
    let path = uri.path();
    let token = match auth::parse_header(headers.get(auth::AUTH_HEADER).and_then(|v| v.to_str().ok())) {
        Ok(t) => t,
        Err(e) => return error(StatusCode::UNAUTHORIZED, "Unauthenticated", e.to_string()),
    };
    let snap = app.node.snapshot();
    let pk = app.keys.lookup(&token.address, &snap.chain);
    let user = match auth::authenticate(&token, method.as_str(), path, now_ms(), pk) {
        Ok(u) => u,
        Err(e) => return error(StatusCode::UNAUTHORIZED, "Unauthenticated", e.to_string()),
    };

    let (height, state) = app.confirmed_state(&snap);
    let action = route_action(path);
    let decision = check_access(&state, &user, action, path);
    if !decision.is_allow() {
        let body = ErrorBody {
            code: "Forbidden".into(),
            message: format!("access denied at height {height}: {}", decision.reason),
            decision: Some(decision),
        };
        return (StatusCode::FORBIDDEN, Json(body)).into_response();
    }

    let mut segments = path.trim_matches('/').split('/');
    let modality = segments.next().unwrap_or_default().to_string();
    let intid = segments.nth(1).and_then(|s| s.parse::<u64>().ok());
    let Some(intid) = intid else {
        return error(StatusCode::NOT_FOUND, "NotFound", "unknown patient id");
    };
    if action == Action::Delete {
        return match app.records.tombstone(intid, &modality).await {
            Ok(receipt) => Json(json!({
                "action": "Delete",
                "receipt": receipt,
                "permission": decision.matched_permission,
                "role": decision.via_role,
                "height": height,
            }))
            .into_response(),
            Err(records::RecordError::NotFound(_)) => error(StatusCode::NOT_FOUND, "NotFound", "unknown patient id"),
            Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "StoreError", e.to_string()),
        };
    }
    let Some(rec) = app.records.get(intid) else {
        return error(StatusCode::NOT_FOUND, "NotFound", "unknown patient id");
    };
    let role = decision.via_role.expect("allow names a role");
    let template = state.view_templates.get(&role).cloned().unwrap_or_default();
    Json(project_view(&rec, &template)).into_response()
}

async fn chain(State(app): State<Arc<App>>, Query(q): Query<HashMap<String, String>>) -> Response {
    let num = |key: &str, default: u64| -> Result<u64, Response> {
        match q.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| error(StatusCode::BAD_REQUEST, "BadRange", format!("`{key}` must be a non-negative integer"))),
        }
    };
    let (from, count) = match (num("from", 0), num("count", 20)) {
        (Ok(f), Ok(c)) => (f, c),
        (Err(r), _) | (_, Err(r)) => return r,
    };
    let snap = app.node.snapshot();
    if from > snap.height || count == 0 || count > MAX_CHAIN_PAGE {
        return error(
            StatusCode::BAD_REQUEST,
            "BadRange",
            format!("need from <= {} and 1 <= count <= {MAX_CHAIN_PAGE}", snap.height),
        );
    }
    let end = (from + count).min(snap.height + 1);
    let blocks: Vec<Value> = snap.chain[from as usize..end as usize]
        .iter()
        .map(|b| {
            json!({
                "hash": b.hash(),
                "header": b.header,
                "tx_ids": b.tx_ids(),
                "transactions": b.transactions,
            })
        })
        .collect();
    Json(json!({"height": snap.height, "tip": snap.tip, "blocks": blocks})).into_response()
}

async fn state(State(app): State<Arc<App>>, axum::extract::Path(kind): axum::extract::Path<String>) -> Response {
    let snap = app.node.snapshot();
    let s = &snap.state;
    let body = match kind.as_str() {
        "delegates" => json!(s
            .delegates
            .iter()
            .map(|(a, active)| json!({"address": a, "active": active}))
            .collect::<Vec<_>>()),
        "roles" => json!(s
            .roles
            .iter()
            .map(|(id, r)| json!({"role_id": id, "name": r.name, "permission_ids": r.permission_ids}))
            .collect::<Vec<_>>()),
        "permissions" => json!(s
            .permissions
            .iter()
            .map(|(id, p)| fixtures::PermissionRow {
                id: *id,
                name: p.name.clone(),
                route: p.route.clone(),
                action: p.action,
            })
            .collect::<Vec<_>>()),
        "templates" => json!(s
            .view_templates
            .iter()
            .map(|(id, f)| json!({"role_id": id, "fields": f}))
            .collect::<Vec<_>>()),
        "users" => json!(s
            .user_roles
            .iter()
            .map(|(u, r)| json!({"user": u, "role_ids": r}))
            .collect::<Vec<_>>()),
        other => return error(StatusCode::NOT_FOUND, "NotFound", format!("no state collection `{other}`")),
    };
    Json(body).into_response()
}

async fn events(State(app): State<Arc<App>>, Query(q): Query<HashMap<String, String>>) -> Response {
    let since = match q.get("since").map(|v| v.parse::<u64>()) {
        None => 0,
        Some(Ok(v)) => v,
        Some(Err(_)) => return error(StatusCode::BAD_REQUEST, "BadRange", "`since` must be a non-negative integer"),
    };
    let snap = app.node.snapshot();
    let evs: Vec<_> = snap.state.events.iter().filter(|e| e.block_index >= since).collect();
    Json(evs).into_response()
}
