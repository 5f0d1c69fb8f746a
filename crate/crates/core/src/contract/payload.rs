use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::contract::route::RoutePattern;

/// What a permission allows on its route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    View,
    Edit,
    Delete,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::View, Action::Edit, Action::Delete];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::View => "View",
            Action::Edit => "Edit",
            Action::Delete => "Delete",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "View" => Ok(Action::View),
            "Edit" => Ok(Action::Edit),
            "Delete" => Ok(Action::Delete),
            other => Err(format!("unknown action {other:?}")),
        }
    }
}

/// One contract operation. Serialized with a `type` tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Payload {
    AddDelegate {
        addr: Address,
    },
    RemoveDelegate {
        addr: Address,
    },
    DefinePermission {
        perm_id: u64,
        name: String,
        route: RoutePattern,
        action: Action,
    },
    DefineRole {
        role_id: u64,
        name: String,
    },
    GrantPermissionToRole {
        role_id: u64,
        perm_id: u64,
    },
    RevokePermissionFromRole {
        role_id: u64,
        perm_id: u64,
    },
    AssignRole {
        user: Address,
        role_id: u64,
    },
    RevokeRole {
        user: Address,
        role_id: u64,
    },
    DefineViewTemplate {
        role_id: u64,
        fields: Vec<String>,
    },
}

impl Payload {
    pub fn type_name(&self) -> &'static str {
        match self {
            Payload::AddDelegate { .. } => "AddDelegate",
            Payload::RemoveDelegate { .. } => "RemoveDelegate",
            Payload::DefinePermission { .. } => "DefinePermission",
            Payload::DefineRole { .. } => "DefineRole",
            Payload::GrantPermissionToRole { .. } => "GrantPermissionToRole",
            Payload::RevokePermissionFromRole { .. } => "RevokePermissionFromRole",
            Payload::AssignRole { .. } => "AssignRole",
            Payload::RevokeRole { .. } => "RevokeRole",
            Payload::DefineViewTemplate { .. } => "DefineViewTemplate",
        }
    }

    /// Owner-only operations (the delegate list).
    pub fn requires_owner(&self) -> bool {
        matches!(self, Payload::AddDelegate { .. } | Payload::RemoveDelegate { .. })
    }

    /// Structural checks independent of contract state: ids positive, names
    /// non-empty, routes well formed.
    pub fn validate(&self) -> Result<(), String> {
        fn id(v: u64, what: &str) -> Result<(), String> {
            if v == 0 {
                Err(format!("{what} must be positive"))
            } else {
                Ok(())
            }
        }
        fn name(v: &str) -> Result<(), String> {
            if v.trim().is_empty() {
                Err("name must be non-empty".into())
            } else {
                Ok(())
            }
        }
        match self {
            Payload::AddDelegate { .. } | Payload::RemoveDelegate { .. } => Ok(()),
            Payload::DefinePermission {
                perm_id,
                name: n,
                route,
                ..
            } => {
                id(*perm_id, "perm_id")?;
                name(n)?;
                route.check().map_err(|e| e.to_string())
            }
            Payload::DefineRole { role_id, name: n } => {
                id(*role_id, "role_id")?;
                name(n)
            }
            Payload::GrantPermissionToRole { role_id, perm_id }
            | Payload::RevokePermissionFromRole { role_id, perm_id } => {
                id(*role_id, "role_id")?;
                id(*perm_id, "perm_id")
            }
            Payload::AssignRole { role_id, .. } | Payload::RevokeRole { role_id, .. } => {
                id(*role_id, "role_id")
            }
            Payload::DefineViewTemplate { role_id, fields } => {
                id(*role_id, "role_id")?;
                if fields.iter().any(|f| f.is_empty()) {
                    return Err("template field names must be non-empty".into());
                }
                Ok(())
            }
        }
    }
}
