//! Seeded RBAC workload: a setup prefix of permissions and roles, then a
//! mix of role assignments and permission grants over distinct pairs.

use cadchain_core::contract::{Action, Payload, RoutePattern};
use cadchain_core::{Address, Keypair, Transaction};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::GroupLaw;

pub const PERMISSIONS: u64 = 8;
pub const ROLES: u64 = 8;
pub const USERS: usize = 250;
const GRANT_SHARE: f64 = 0.2;

const ROUTES: [(&str, Action); 6] = [
    ("/ct/list/<intid>/", Action::View),
    ("/mri/list/<intid>/", Action::View),
    ("/pet/list/<intid>/", Action::View),
    ("/histo/list/<intid>/", Action::View),
    ("/ct/del/<intid>/", Action::Delete),
    ("/pet/del/<intid>/", Action::Delete),
];

pub fn owner_key() -> Keypair {
    Keypair::from_seed([0xB0; 32])
}

pub fn user(i: usize) -> Address {
    let mut a = [0u8; 20];
    a[..8].copy_from_slice(&(i as u64 + 1).to_be_bytes());
    a[19] = 0xEE;
    Address(a)
}

/// `total` payloads, all valid when applied in order by the owner.
pub fn payloads(total: usize, seed: u64) -> Vec<Payload> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(total);
    for perm_id in 1..=PERMISSIONS {
        let (route, action) = ROUTES[(perm_id as usize - 1) % ROUTES.len()];
        out.push(Payload::DefinePermission {
            perm_id,
            name: format!("permission-{perm_id}"),
            route: RoutePattern::parse(route).expect("static route"),
            action,
        });
    }
    for role_id in 1..=ROLES {
        out.push(Payload::DefineRole {
            role_id,
            name: format!("role-{role_id}"),
        });
    }
    out.truncate(total);

    let mut grants: Vec<(u64, u64)> = (1..=ROLES).flat_map(|r| (1..=PERMISSIONS).map(move |p| (r, p))).collect();
    let mut assigns: Vec<(usize, u64)> = (0..USERS).flat_map(|u| (1..=ROLES).map(move |r| (u, r))).collect();
    grants.shuffle(&mut rng);
    assigns.shuffle(&mut rng);
    while out.len() < total {
        let grant = !grants.is_empty() && (assigns.is_empty() || rng.gen_bool(GRANT_SHARE));
        if grant {
            let (role_id, perm_id) = grants.pop().expect("non-empty");
            out.push(Payload::GrantPermissionToRole { role_id, perm_id });
        } else if let Some((u, role_id)) = assigns.pop() {
            out.push(Payload::AssignRole { user: user(u), role_id });
        } else {
            // Distinct pairs exhausted: re-grant, which is a valid no-op.
            out.push(Payload::GrantPermissionToRole { role_id: 1, perm_id: 1 });
        }
    }
    out
}

pub fn transactions(total: usize, seed: u64, timestamp: u64) -> Vec<Transaction> {
    let keys = owner_key();
    payloads(total, seed)
        .into_iter()
        .enumerate()
        .map(|(n, p)| Transaction::signed(&keys, n as u64, p, timestamp))
        .collect()
}

/// Group sizes drawn uniformly from `law`, the last one truncated so the
/// sizes sum to `total`.
pub fn partition(total: usize, law: GroupLaw, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6772_6f75_7073);
    let mut left = total;
    let mut sizes = Vec::new();
    while left > 0 {
        let s = rng.gen_range(law.min..=law.max).min(left);
        sizes.push(s);
        left -= s;
    }
    sizes
}
