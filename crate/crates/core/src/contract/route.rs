use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const INT_PLACEHOLDER: &str = "<intid>";

/// A route template such as `/ct/list/<intid>/`.
///
/// Must begin and end with `/`. Every segment is either a non-empty literal
/// or the `<intid>` placeholder, which matches one all-digit segment.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoutePattern(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid route pattern {pattern:?}: {reason}")]
pub struct RouteError {
    pub pattern: String,
    pub reason: &'static str,
}

impl RoutePattern {
    pub fn parse(text: &str) -> Result<Self, RouteError> {
        let pattern = RoutePattern(text.to_string());
        pattern.check()?;
        Ok(pattern)
    }

    /// Wraps text without validation. Payloads carry routes verbatim and the
    /// contract rejects malformed ones at apply time.
    pub fn new_unchecked(text: impl Into<String>) -> Self {
        RoutePattern(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn check(&self) -> Result<(), RouteError> {
        let err = |reason| RouteError {
            pattern: self.0.clone(),
            reason,
        };
        if self.0 == "/" {
            return Ok(());
        }
        let inner = self
            .0
            .strip_prefix('/')
            .and_then(|s| s.strip_suffix('/'))
            .ok_or_else(|| err("must begin and end with '/'"))?;
        if inner.is_empty() {
            return Ok(());
        }
        for seg in inner.split('/') {
            if seg.is_empty() {
                return Err(err("empty segment"));
            }
            if seg != INT_PLACEHOLDER && (seg.contains('<') || seg.contains('>')) {
                return Err(err("unknown placeholder"));
            }
        }
        Ok(())
    }

    fn segments(&self) -> Vec<&str> {
        split_path(&self.0).unwrap_or_default()
    }
}

impl fmt::Debug for RoutePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RoutePattern({:?})", self.0)
    }
}

impl fmt::Display for RoutePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Captured placeholder values, keyed by placeholder name (`intid`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RouteMatch {
    pub captures: BTreeMap<String, u64>,
}

impl RouteMatch {
    pub fn intid(&self) -> Option<u64> {
        self.captures.get("intid").copied()
    }
}

// "/a/b/" -> ["a", "b"]; paths without both slashes do not split.
fn split_path(path: &str) -> Option<Vec<&str>> {
    if path == "/" {
        return Some(Vec::new());
    }
    let inner = path.strip_prefix('/')?.strip_suffix('/')?;
    if inner.is_empty() {
        return Some(Vec::new());
    }
    Some(inner.split('/').collect())
}

/// Segment-wise match. Trailing slash is significant.
pub fn match_route(pattern: &RoutePattern, path: &str) -> Option<RouteMatch> {
    if pattern.check().is_err() {
        return None;
    }
    let want = pattern.segments();
    let got = split_path(path)?;
    if want.len() != got.len() {
        return None;
    }
    let mut m = RouteMatch::default();
    for (w, g) in want.iter().zip(got.iter()) {
        if *w == INT_PLACEHOLDER {
            if g.is_empty() || !g.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let value: u64 = g.parse().ok()?;
            m.captures.insert("intid".to_string(), value);
        } else if w != g {
            return None;
        }
    }
    Some(m)
}
