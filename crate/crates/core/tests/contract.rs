mod common;

use cadchain_core::contract::{
    check_access, replay, Action, ApplyContext, ContractState, EventKind, Payload, Replay, Subject,
};
use cadchain_core::{Block, Transaction};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn genesis_only_replay_is_genesis_state() {
    let w = common::world(0);
    let r = replay(&[Block::genesis(&w.genesis)], &w.genesis);
    assert_eq!(r.state, ContractState::from_genesis(&w.genesis));
    assert!(r.rejections.is_empty());
}

#[test]
fn replay_twice_is_identical() {
    let w = common::world(0);
    let chain = common::random_chain(99, 200, &w);
    let a = replay(&chain, &w.genesis);
    let b = replay(&chain, &w.genesis);
    assert_eq!(a, b);
    assert_eq!(a.state.canonical_bytes(), b.state.canonical_bytes());
    assert_eq!(a.rejection_log_jsonl(), b.rejection_log_jsonl());
}

#[test]
fn batch_replay_equals_one_at_a_time() {
    let w = common::world(0);
    for seed in 0..10 {
        let chain = common::random_chain(seed, 200, &w);
        let batch = replay(&chain, &w.genesis);

        // Incremental oracle: the pure `apply` transition, one tx at a time.
        let mut state = ContractState::from_genesis(&w.genesis);
        let mut rejected = 0usize;
        for block in &chain {
            for tx in &block.transactions {
                match state.apply(tx, ApplyContext { block_index: block.index() }) {
                    Ok((next, _)) => state = next,
                    Err(_) => rejected += 1,
                }
            }
        }
        assert_eq!(batch.state.canonical_bytes(), state.canonical_bytes(), "seed {seed}");
        assert_eq!(batch.rejections.len(), rejected);
    }
}

#[test]
fn rejection_log_lines() {
    let w = common::world(0);
    let chain = common::random_chain(4, 150, &w);
    let r = replay(&chain, &w.genesis);
    assert!(!r.rejections.is_empty());
    for line in r.rejection_log_jsonl().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), 3);
        assert!(obj["tx_id"].as_str().unwrap().len() == 64);
        assert!(obj["block_index"].is_u64());
        assert!(["BadNonce", "Unauthorized", "UnknownId", "MalformedPayload"]
            .contains(&obj["code"].as_str().unwrap()));
    }
}

#[test]
fn event_count_equals_accepted_transactions() {
    let w = common::world(0);
    let chain = common::random_chain(21, 250, &w);
    let r = replay(&chain, &w.genesis);
    let total: usize = chain.iter().map(|b| b.transactions.len()).sum();
    assert_eq!(r.state.events.len(), total - r.rejections.len());
    let nonce_sum: u64 = r.state.nonces.values().sum();
    assert_eq!(nonce_sum as usize, r.state.events.len());
}

fn referential_integrity(s: &ContractState) -> bool {
    s.roles
        .values()
        .all(|r| r.permission_ids.iter().all(|p| s.permissions.contains_key(p)))
        && s.user_roles.values().flatten().all(|r| s.roles.contains_key(r))
        && s.view_templates.keys().all(|r| s.roles.contains_key(r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fuzz_authorization_atomicity_and_witnesses(seed in any::<u64>()) {
        let w = common::world(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut senders = vec![&w.owner];
        senders.extend(w.delegates.iter());
        senders.extend(w.strangers.iter());

        let mut state = ContractState::from_genesis(&w.genesis);
        let mut sender_of = std::collections::HashMap::new();
        for i in 0..120u64 {
            let sender = senders[rng.gen_range(0..senders.len())];
            let mut nonce = state.next_nonce(&sender.address());
            if rng.gen_bool(0.1) { nonce += 1; }
            let tx = Transaction::signed(sender, nonce, common::random_payload(&mut rng, &w), i);
            let before = state.clone();
            sender_of.insert(tx.tx_id(), tx.sender);
            match state.apply_in_place(&tx, ApplyContext { block_index: i }) {
                Ok(ev) => {
                    if before.delegates != state.delegates {
                        prop_assert_eq!(tx.sender, w.owner.address());
                    }
                    if let Payload::RemoveDelegate { addr } = tx.payload {
                        prop_assert_eq!(state.delegates.get(&addr), Some(&false));
                        prop_assert_eq!(ev.kind, EventKind::DelegateRemoved);
                        prop_assert_eq!(ev.subject, Subject::Address(addr));
                    }
                }
                Err(_) => prop_assert_eq!(&before, &state),
            }
            prop_assert!(referential_integrity(&state));
        }

        // Audit the log: every delegate event was sent by the owner.
        for e in state.events.iter()
            .filter(|e| matches!(e.kind, EventKind::DelegateAdded | EventKind::DelegateRemoved))
        {
            prop_assert_eq!(sender_of[&e.tx_id], w.owner.address());
        }

        // check_access is pure and every Allow carries a verifiable witness.
        let snapshot = state.clone();
        for user in &w.users {
            for action in Action::ALL {
                for path in ["/ct/list/1/", "/mri/list/2/", "/pet/del/3/", "/ct/del/4/", "/histo/list/5/"] {
                    let d = check_access(&state, user, action, path);
                    if d.is_allow() {
                        let p = d.matched_permission.unwrap();
                        let r = d.via_role.unwrap();
                        prop_assert!(state.user_roles[user].contains(&r));
                        prop_assert!(state.roles[&r].permission_ids.contains(&p));
                        prop_assert_eq!(state.permissions[&p].action, action);
                        prop_assert!(cadchain_core::contract::match_route(&state.permissions[&p].route, path).is_some());
                    }
                }
            }
        }
        prop_assert_eq!(&snapshot, &state);

        // Closed world: revoke every assignment of one user, everything denies.
        let user = w.users[0];
        if let Some(roles) = state.user_roles.get(&user).cloned() {
            let mut n = state.next_nonce(&w.owner.address());
            for role_id in roles {
                let tx = Transaction::signed(&w.owner, n, Payload::RevokeRole { user, role_id }, 0);
                state.apply_in_place(&tx, ApplyContext { block_index: 999 }).unwrap();
                n += 1;
            }
        }
        for action in Action::ALL {
            for path in ["/ct/list/1/", "/pet/del/3/", "/ct/del/4/"] {
                prop_assert!(!check_access(&state, &user, action, path).is_allow());
            }
        }
    }
}

#[test]
fn replay_incremental_block_by_block_matches() {
    let w = common::world(0);
    let chain = common::random_chain(8, 120, &w);
    let mut r = Replay::new(&w.genesis);
    for b in &chain {
        r.apply_block(b);
    }
    assert_eq!(r, replay(&chain, &w.genesis));
}
