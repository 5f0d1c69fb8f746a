#![allow(dead_code)]

use cadchain_core::contract::{Action, ApplyContext, ContractState, Payload, RoutePattern};
use cadchain_core::{Address, Block, ChainParams, ConsortiumMember, Genesis, Keypair, Transaction};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct World {
    pub genesis: Genesis,
    pub owner: Keypair,
    pub delegates: Vec<Keypair>,
    pub strangers: Vec<Keypair>,
    pub users: Vec<Address>,
}

pub fn world(difficulty_bits: u32) -> World {
    let owner = Keypair::from_seed([1; 32]);
    let delegates: Vec<Keypair> = (0..3).map(|i| Keypair::from_seed([10 + i; 32])).collect();
    let strangers: Vec<Keypair> = (0..3).map(|i| Keypair::from_seed([20 + i; 32])).collect();
    let users = (0..8u8).map(|i| Address([0x80 + i; 20])).collect();
    let genesis = Genesis {
        network_id: "cad-test".into(),
        difficulty_bits,
        max_block_txs: 16,
        owner_address: owner.address(),
        consortium: delegates
            .iter()
            .enumerate()
            .map(|(i, k)| ConsortiumMember {
                name: format!("institution-{i}"),
                address: k.address(),
            })
            .collect(),
        genesis_timestamp: 1_600_000_000_000,
    };
    World {
        genesis,
        owner,
        delegates,
        strangers,
        users,
    }
}

const ROUTES: [&str; 6] = [
    "/ct/list/<intid>/",
    "/mri/list/<intid>/",
    "/pet/list/<intid>/",
    "/histo/list/<intid>/",
    "/ct/del/<intid>/",
    "/pet/del/<intid>/",
];

pub fn random_payload(rng: &mut impl Rng, w: &World) -> Payload {
    let role_id = rng.gen_range(1..=5);
    let perm_id = rng.gen_range(1..=8);
    let user = *w.users.choose(rng).unwrap();
    match rng.gen_range(0..10) {
        0 => {
            let pool: Vec<Address> = w
                .delegates
                .iter()
                .chain(w.strangers.iter())
                .map(Keypair::address)
                .collect();
            Payload::AddDelegate { addr: *pool.choose(rng).unwrap() }
        }
        1 => {
            let pool: Vec<Address> = w.delegates.iter().map(Keypair::address).collect();
            Payload::RemoveDelegate { addr: *pool.choose(rng).unwrap() }
        }
        2 => Payload::DefinePermission {
            perm_id,
            name: format!("perm {perm_id}"),
            route: RoutePattern::new_unchecked(*ROUTES.choose(rng).unwrap()),
            action: *Action::ALL.choose(rng).unwrap(),
        },
        3 => Payload::DefineRole {
            role_id,
            name: format!("role {role_id}"),
        },
        4 => Payload::GrantPermissionToRole { role_id, perm_id },
        5 => Payload::RevokePermissionFromRole { role_id, perm_id },
        6 | 7 => Payload::AssignRole { user, role_id },
        8 => Payload::RevokeRole { user, role_id },
        _ => Payload::DefineViewTemplate {
            role_id,
            fields: vec!["ID".into(), "Age".into()],
        },
    }
}

/// A random, structurally valid chain whose transactions include a mix of
/// contract-accepted and contract-rejected operations.
pub fn random_chain(seed: u64, tx_count: usize, w: &World) -> Vec<Block> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: ChainParams = w.genesis.params();
    let mut senders: Vec<&Keypair> = vec![&w.owner];
    senders.extend(w.delegates.iter());
    senders.extend(w.strangers.iter());

    let mut shadow = ContractState::from_genesis(&w.genesis);
    let mut chain = vec![Block::genesis(&w.genesis)];
    let mut remaining = tx_count;
    let mut ts = w.genesis.genesis_timestamp;
    while remaining > 0 {
        let n = rng.gen_range(1..=params.max_block_txs.min(remaining));
        let index = chain.len() as u64;
        let mut txs = Vec::with_capacity(n);
        for _ in 0..n {
            let sender = if rng.gen_bool(0.5) { senders[0] } else { *senders.choose(&mut rng).unwrap() };
            let mut nonce = shadow.next_nonce(&sender.address());
            if rng.gen_bool(0.05) {
                nonce += 1;
            }
            ts += rng.gen_range(0..5);
            let tx = Transaction::signed(sender, nonce, random_payload(&mut rng, w), ts);
            let _ = shadow.apply_in_place(&tx, ApplyContext { block_index: index });
            txs.push(tx);
        }
        remaining -= n;
        let parent = chain.last().unwrap();
        let block = Block::seal(parent, txs, &params, ts, w.owner.address());
        chain.push(block);
    }
    chain
}
