//! Signed-request authentication for the record routes.
//!
//! The `X-Auth` header carries `{address, timestamp, signature}` where the
//! Ed25519 signature covers `METHOD \n PATH \n TIMESTAMP` (timestamp in
//! Unix milliseconds, decimal).

use cadchain_core::hash::hex_bytes;
use cadchain_core::{crypto, Address, Keypair};
use serde::{Deserialize, Serialize};

pub const AUTH_HEADER: &str = "x-auth";
pub const MAX_SKEW_MS: u64 = 60_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthToken {
    pub address: Address,
    pub timestamp: u64,
    #[serde(with = "hex_bytes")]
    pub signature: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuthError {
    #[error("missing X-Auth header")]
    Missing,
    #[error("malformed X-Auth header: {0}")]
    Malformed(String),
    #[error("timestamp outside the allowed clock skew")]
    Skew,
    #[error("no public key known for {0}")]
    UnknownKey(Address),
    #[error("signature does not verify")]
    BadSignature,
}

pub fn signing_message(method: &str, path: &str, timestamp: u64) -> Vec<u8> {
    format!("{method}\n{path}\n{timestamp}").into_bytes()
}

/// Builds an `X-Auth` header value.
pub fn sign_request(keys: &Keypair, method: &str, path: &str, timestamp: u64) -> String {
    let token = AuthToken {
        address: keys.address(),
        timestamp,
        signature: keys.sign(&signing_message(method, path, timestamp)),
    };
    serde_json::to_string(&token).expect("token serializes")
}

pub fn parse_header(value: Option<&str>) -> Result<AuthToken, AuthError> {
    let v = value.ok_or(AuthError::Missing)?;
    serde_json::from_str(v).map_err(|e| AuthError::Malformed(e.to_string()))
}

/// Verifies the token for this request; returns the authenticated address.
pub fn authenticate(
    token: &AuthToken,
    method: &str,
    path: &str,
    now_ms: u64,
    public_key: Option<Vec<u8>>,
) -> Result<Address, AuthError> {
    if token.timestamp.abs_diff(now_ms) > MAX_SKEW_MS {
        return Err(AuthError::Skew);
    }
    let pk = public_key.ok_or(AuthError::UnknownKey(token.address))?;
    if Address::from_public_key(&pk) != token.address {
        return Err(AuthError::BadSignature);
    }
    if !crypto::verify(&pk, &signing_message(method, path, token.timestamp), &token.signature) {
        return Err(AuthError::BadSignature);
    }
    Ok(token.address)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_skew() {
        let k = Keypair::from_seed([5; 32]);
        let h = sign_request(&k, "GET", "/ct/list/1/", 1_000_000);
        let t = parse_header(Some(&h)).unwrap();
        let pk = Some(k.public_key());
        assert_eq!(authenticate(&t, "GET", "/ct/list/1/", 1_000_000 + MAX_SKEW_MS, pk.clone()), Ok(k.address()));
        assert_eq!(authenticate(&t, "GET", "/ct/list/1/", 1_000_000 + MAX_SKEW_MS + 1, pk.clone()), Err(AuthError::Skew));
        assert_eq!(authenticate(&t, "GET", "/ct/list/2/", 1_000_000, pk.clone()), Err(AuthError::BadSignature));
        assert_eq!(authenticate(&t, "POST", "/ct/list/1/", 1_000_000, pk), Err(AuthError::BadSignature));
        let other = Some(Keypair::from_seed([6; 32]).public_key());
        assert_eq!(authenticate(&t, "GET", "/ct/list/1/", 1_000_000, other), Err(AuthError::BadSignature));
    }
}
