use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::contract::payload::Payload;
use crate::crypto::{self, Keypair};
use crate::encoding::{canonical_encode, encode_value};
use crate::hash::{hex_bytes, sha256, Hash32};

/// A signed, nonce-sequenced envelope for one contract operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: Address,
    pub nonce: u64,
    pub payload: Payload,
    pub timestamp: u64,
    #[serde(with = "hex_bytes")]
    pub public_key: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub signature: Vec<u8>,
}

impl Transaction {
    /// Builds and signs a transaction from `keys`.
    pub fn signed(keys: &Keypair, nonce: u64, payload: Payload, timestamp: u64) -> Self {
        let mut tx = Transaction {
            sender: keys.address(),
            nonce,
            payload,
            timestamp,
            public_key: keys.public_key(),
            signature: Vec::new(),
        };
        tx.signature = keys.sign(&tx.signing_bytes());
        tx
    }

    /// Canonical encoding with the `signature` key omitted.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_value(self).expect("transaction serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("signature");
        }
        encode_value(&v)
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_encode(self)
    }

    pub fn tx_id(&self) -> Hash32 {
        sha256(&self.canonical_bytes())
    }

    /// Signature is valid and the sender is the address of the embedded key.
    pub fn verify_signature(&self) -> bool {
        Address::from_public_key(&self.public_key) == self.sender
            && crypto::verify(&self.public_key, &self.signing_bytes(), &self.signature)
    }
}
