//! The in-chain RBAC contract: payloads, state transitions, access checks
//! and chain replay.

pub mod access;
pub mod payload;
pub mod replay;
pub mod route;
pub mod state;

pub use access::{check_access, AccessDecision, Verdict};
pub use payload::{Action, Payload};
pub use replay::{replay, RejectionRecord, Replay};
pub use route::{match_route, RouteMatch, RoutePattern};
pub use state::{ApplyContext, ContractState, Event, EventKind, Permission, RejectCode, Role, Subject};
