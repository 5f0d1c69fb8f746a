//! The permission table and role/view pack, loaded onto the chain as
//! ordinary signed transactions.

use std::path::Path;

use cadchain_core::contract::{Action, Payload, RoutePattern};
use cadchain_core::{Address, Keypair, Transaction};
use serde::{Deserialize, Serialize};

/// One permission row; also the row shape of `/api/state/permissions`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermissionRow {
    pub id: u64,
    pub name: String,
    pub route: RoutePattern,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleFixture {
    pub role_id: u64,
    pub name: String,
    pub permission_ids: Vec<u64>,
    pub fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplatePack {
    #[serde(default)]
    pub note: String,
    pub roles: Vec<RoleFixture>,
}

pub fn load_permissions(path: &Path) -> anyhow::Result<Vec<PermissionRow>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn load_templates(path: &Path) -> anyhow::Result<TemplatePack> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Permissions, then roles, grants and view templates.
pub fn setup_payloads(perms: &[PermissionRow], pack: &TemplatePack) -> Vec<Payload> {
    let mut out: Vec<Payload> = perms
        .iter()
        .map(|p| Payload::DefinePermission {
            perm_id: p.id,
            name: p.name.clone(),
            route: p.route.clone(),
            action: p.action,
        })
        .collect();
    for r in &pack.roles {
        out.push(Payload::DefineRole {
            role_id: r.role_id,
            name: r.name.clone(),
        });
        out.extend(r.permission_ids.iter().map(|&perm_id| Payload::GrantPermissionToRole {
            role_id: r.role_id,
            perm_id,
        }));
        out.push(Payload::DefineViewTemplate {
            role_id: r.role_id,
            fields: r.fields.clone(),
        });
    }
    out
}

pub fn assignments(users: &[(Address, u64)]) -> Vec<Payload> {
    users
        .iter()
        .map(|&(user, role_id)| Payload::AssignRole { user, role_id })
        .collect()
}

/// Signs `payloads` with consecutive nonces from `first_nonce`.
pub fn sign_all(keys: &Keypair, first_nonce: u64, payloads: Vec<Payload>, timestamp: u64) -> Vec<Transaction> {
    payloads
        .into_iter()
        .enumerate()
        .map(|(i, p)| Transaction::signed(keys, first_nonce + i as u64, p, timestamp))
        .collect()
}
