use std::{cmp::Ordering, fmt};

use serde::{Deserialize, Serialize};

/// Identifier of a status or reply argument.
///
/// Ordering is natural (digit runs compare numerically), so `N8 < N11`.
/// Ties under natural ordering fall back to byte order to stay consistent
/// with `Eq`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArgId(String);

impl ArgId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Ids must be nonempty and match `[A-Za-z0-9_-]+`.
    pub fn is_well_formed(id: &str) -> bool {
        !id.is_empty()
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    }
}

impl Ord for ArgId {
    fn cmp(&self, other: &Self) -> Ordering {
        natord::compare(&self.0, &other.0).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ArgId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ArgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ArgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ArgId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ArgId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

// Hash-based lookup by `&str`. `Borrow<str>` would be wrong here because
// ordered collections would then compare with byte order.
impl indexmap::Equivalent<ArgId> for str {
    fn equivalent(&self, key: &ArgId) -> bool {
        self == key.0
    }
}

impl AsRef<str> for ArgId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}
