use sha2::{Digest, Sha256};

use crate::hash::{sha256, Hash32};

fn hash_pair(left: &Hash32, right: &Hash32) -> Hash32 {
    let mut h = Sha256::new();
    h.update(left.0);
    h.update(right.0);
    Hash32(h.finalize().into())
}

/// Pairwise SHA-256 reduction over `ids`. Odd levels duplicate their last
/// element; a single leaf is paired with itself; empty input hashes to
/// SHA-256 of the empty string.
pub fn merkle_root(ids: &[Hash32]) -> Hash32 {
    if ids.is_empty() {
        return sha256(b"");
    }
    let mut level: Vec<Hash32> = ids.to_vec();
    loop {
        if level.len() % 2 == 1 {
            let last = *level.last().expect("non-empty");
            level.push(last);
        }
        level = level.chunks_exact(2).map(|p| hash_pair(&p[0], &p[1])).collect();
        if level.len() == 1 {
            return level[0];
        }
    }
}
