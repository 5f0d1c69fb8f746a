use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::contract::payload::Action;
use crate::contract::route::match_route;
use crate::contract::state::ContractState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Allow,
    Deny,
}

pub mod reason {
    pub const GRANTED: &str = "Granted";
    pub const NO_ROLES: &str = "NoRoles";
    pub const NO_MATCHING_PERMISSION: &str = "NoMatchingPermission";
    pub const NO_MATCHING_ROLE: &str = "NoMatchingRole";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessDecision {
    pub verdict: Verdict,
    pub matched_permission: Option<u64>,
    pub via_role: Option<u64>,
    pub reason: String,
}

impl AccessDecision {
    fn deny(reason: &str) -> Self {
        AccessDecision {
            verdict: Verdict::Deny,
            matched_permission: None,
            via_role: None,
            reason: reason.to_string(),
        }
    }

    pub fn is_allow(&self) -> bool {
        self.verdict == Verdict::Allow
    }
}

/// Closed-world RBAC check. Reports the lowest granted matching permission
/// and the lowest of the user's roles that holds it.
pub fn check_access(state: &ContractState, user: &Address, action: Action, path: &str) -> AccessDecision {
    let Some(user_roles) = state.user_roles.get(user).filter(|r| !r.is_empty()) else {
        return AccessDecision::deny(reason::NO_ROLES);
    };
    let mut any_match = false;
    // permissions is a BTreeMap, so this walks perm ids in ascending order.
    for (perm_id, perm) in &state.permissions {
        if perm.action != action || match_route(&perm.route, path).is_none() {
            continue;
        }
        any_match = true;
        let via = user_roles.iter().copied().find(|role_id| {
            state
                .roles
                .get(role_id)
                .is_some_and(|r| r.permission_ids.contains(perm_id))
        });
        if let Some(role_id) = via {
            return AccessDecision {
                verdict: Verdict::Allow,
                matched_permission: Some(*perm_id),
                via_role: Some(role_id),
                reason: reason::GRANTED.to_string(),
            };
        }
    }
    if any_match {
        AccessDecision::deny(reason::NO_MATCHING_ROLE)
    } else {
        AccessDecision::deny(reason::NO_MATCHING_PERMISSION)
    }
}
