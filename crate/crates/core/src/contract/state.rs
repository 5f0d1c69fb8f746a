use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::contract::payload::{Action, Payload};
use crate::contract::route::RoutePattern;
use crate::encoding::canonical_encode;
use crate::genesis::Genesis;
use crate::hash::Hash32;
use crate::tx::Transaction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permission {
    pub name: String,
    pub route: RoutePattern,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Role {
    pub name: String,
    pub permission_ids: BTreeSet<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    DelegateAdded,
    DelegateRemoved,
    PermissionDefined,
    RoleDefined,
    PermissionGranted,
    PermissionRevoked,
    RoleAssigned,
    RoleRevoked,
    ViewTemplateDefined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Subject {
    Address(Address),
    Id(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub subject: Subject,
    pub block_index: u64,
    pub tx_id: Hash32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, thiserror::Error)]
pub enum RejectCode {
    #[error("nonce does not match the sender's next expected nonce")]
    BadNonce,
    #[error("sender is not authorized for this operation")]
    Unauthorized,
    #[error("referenced role or permission does not exist")]
    UnknownId,
    #[error("payload is structurally invalid")]
    MalformedPayload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApplyContext {
    pub block_index: u64,
}

/// The contract's entire world state. Always a pure function of
/// (genesis, chain).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractState {
    pub owner: Address,
    pub delegates: BTreeMap<Address, bool>,
    pub permissions: BTreeMap<u64, Permission>,
    pub roles: BTreeMap<u64, Role>,
    pub user_roles: BTreeMap<Address, BTreeSet<u64>>,
    pub view_templates: BTreeMap<u64, Vec<String>>,
    pub nonces: BTreeMap<Address, u64>,
    pub events: Vec<Event>,
}

impl ContractState {
    pub fn from_genesis(genesis: &Genesis) -> Self {
        ContractState {
            owner: genesis.owner_address,
            delegates: genesis.consortium.iter().map(|m| (m.address, true)).collect(),
            permissions: BTreeMap::new(),
            roles: BTreeMap::new(),
            user_roles: BTreeMap::new(),
            view_templates: BTreeMap::new(),
            nonces: BTreeMap::new(),
            events: Vec::new(),
        }
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_encode(self)
    }

    pub fn next_nonce(&self, sender: &Address) -> u64 {
        self.nonces.get(sender).copied().unwrap_or(0)
    }

    pub fn is_delegate(&self, addr: &Address) -> bool {
        self.delegates.get(addr).copied().unwrap_or(false)
    }

    /// Total (user, role) assignment pairs.
    pub fn assignment_count(&self) -> usize {
        self.user_roles.values().map(BTreeSet::len).sum()
    }

    /// Pure transition: the successor state plus the events it emitted.
    pub fn apply(&self, tx: &Transaction, ctx: ApplyContext) -> Result<(ContractState, Vec<Event>), RejectCode> {
        let mut next = self.clone();
        let event = next.apply_in_place(tx, ctx)?;
        Ok((next, vec![event]))
    }

    /// Checks every precondition before touching any field, so a rejection
    /// leaves `self` unchanged.
    pub fn apply_in_place(&mut self, tx: &Transaction, ctx: ApplyContext) -> Result<Event, RejectCode> {
        let sender = tx.sender;
        if tx.nonce != self.next_nonce(&sender) {
            return Err(RejectCode::BadNonce);
        }
        let authorized = if tx.payload.requires_owner() {
            sender == self.owner
        } else {
            sender == self.owner || self.is_delegate(&sender)
        };
        if !authorized {
            return Err(RejectCode::Unauthorized);
        }
        tx.payload.validate().map_err(|_| RejectCode::MalformedPayload)?;
        self.check_references(&tx.payload)?;

        let (kind, subject) = self.mutate(&tx.payload);
        *self.nonces.entry(sender).or_insert(0) += 1;
        let event = Event {
            kind,
            subject,
            block_index: ctx.block_index,
            tx_id: tx.tx_id(),
        };
        self.events.push(event.clone());
        Ok(event)
    }

    fn check_references(&self, payload: &Payload) -> Result<(), RejectCode> {
        let role = |id: &u64| self.roles.contains_key(id);
        let perm = |id: &u64| self.permissions.contains_key(id);
        let ok = match payload {
            Payload::GrantPermissionToRole { role_id, perm_id }
            | Payload::RevokePermissionFromRole { role_id, perm_id } => role(role_id) && perm(perm_id),
            Payload::AssignRole { role_id, .. }
            | Payload::RevokeRole { role_id, .. }
            | Payload::DefineViewTemplate { role_id, .. } => role(role_id),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(RejectCode::UnknownId)
        }
    }

    fn mutate(&mut self, payload: &Payload) -> (EventKind, Subject) {
        match payload {
            Payload::AddDelegate { addr } => {
                self.delegates.insert(*addr, true);
                (EventKind::DelegateAdded, Subject::Address(*addr))
            }
            Payload::RemoveDelegate { addr } => {
                self.delegates.insert(*addr, false);
                (EventKind::DelegateRemoved, Subject::Address(*addr))
            }
            Payload::DefinePermission {
                perm_id,
                name,
                route,
                action,
            } => {
                self.permissions.insert(
                    *perm_id,
                    Permission {
                        name: name.clone(),
                        route: route.clone(),
                        action: *action,
                    },
                );
                (EventKind::PermissionDefined, Subject::Id(*perm_id))
            }
            Payload::DefineRole { role_id, name } => {
                // Upsert: redefinition renames but keeps existing grants.
                self.roles
                    .entry(*role_id)
                    .and_modify(|r| r.name = name.clone())
                    .or_insert_with(|| Role {
                        name: name.clone(),
                        permission_ids: Default::default(),
                    });
                (EventKind::RoleDefined, Subject::Id(*role_id))
            }
            Payload::GrantPermissionToRole { role_id, perm_id } => {
                if let Some(r) = self.roles.get_mut(role_id) {
                    r.permission_ids.insert(*perm_id);
                }
                (EventKind::PermissionGranted, Subject::Id(*role_id))
            }
            Payload::RevokePermissionFromRole { role_id, perm_id } => {
                if let Some(r) = self.roles.get_mut(role_id) {
                    r.permission_ids.remove(perm_id);
                }
                (EventKind::PermissionRevoked, Subject::Id(*role_id))
            }
            Payload::AssignRole { user, role_id } => {
                self.user_roles.entry(*user).or_default().insert(*role_id);
                (EventKind::RoleAssigned, Subject::Address(*user))
            }
            Payload::RevokeRole { user, role_id } => {
                if let Some(set) = self.user_roles.get_mut(user) {
                    set.remove(role_id);
                    if set.is_empty() {
                        self.user_roles.remove(user);
                    }
                }
                (EventKind::RoleRevoked, Subject::Address(*user))
            }
            Payload::DefineViewTemplate { role_id, fields } => {
                self.view_templates.insert(*role_id, fields.clone());
                (EventKind::ViewTemplateDefined, Subject::Id(*role_id))
            }
        }
    }
}
