//! Canonical JSON: keys sorted bytewise, no whitespace, integers in base 10,
//! byte fields as lowercase hex strings. This is the only serialization used
//! for hashing and signing.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum EncodingError {
    #[error("serialize: {0}")]
    Serialize(#[source] serde_json::Error),
    #[error("decode: {0}")]
    Decode(#[source] serde_json::Error),
    #[error("input is not in canonical form")]
    NonCanonical,
}

/// Encodes any serializable value canonically.
///
/// Panics only if `value` fails to serialize, which does not happen for the
/// crate's own types (no non-string map keys, no NaN floats).
pub fn canonical_encode<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let v = serde_json::to_value(value).expect("canonical types always serialize");
    encode_value(&v)
}

pub fn encode_value(value: &Value) -> Vec<u8> {
    let mut out = Vec::with_capacity(256);
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut Vec<u8>) {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(b) => out.extend_from_slice(if *b { b"true" } else { b"false" }),
        Value::Number(n) => out.extend_from_slice(n.to_string().as_bytes()),
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(item, out);
            }
            out.push(b']');
        }
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
            out.push(b'{');
            for (i, (k, v)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_string(k, out);
                out.push(b':');
                write_value(v, out);
            }
            out.push(b'}');
        }
    }
}

fn write_string(s: &str, out: &mut Vec<u8>) {
    // serde_json's string escaping is deterministic and minimal.
    out.extend_from_slice(serde_json::to_string(s).expect("str serializes").as_bytes());
}

pub fn canonical_decode<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, EncodingError> {
    serde_json::from_slice(bytes).map_err(EncodingError::Decode)
}

/// Decodes and additionally requires that `bytes` is exactly the canonical
/// encoding of the decoded value.
pub fn strict_decode<T: DeserializeOwned + Serialize>(bytes: &[u8]) -> Result<T, EncodingError> {
    let value: T = canonical_decode(bytes)?;
    if canonical_encode(&value) != bytes {
        return Err(EncodingError::NonCanonical);
    }
    Ok(value)
}
