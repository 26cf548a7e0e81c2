use std::fmt;

use serde::{Deserialize, Serialize};

/// Scalar value of a finite-range variable.
///
/// Labelled levels are encoded as integer codes.
pub type Value = i64;

/// Name of an endogenous or exogenous variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableId(String);

impl VariableId {
    /// Panics on an empty name; use [`VariableId::try_new`] for untrusted input.
    pub fn new(name: impl Into<String>) -> Self {
        Self::try_new(name).expect("variable names must be non-empty")
    }

    pub fn try_new(name: impl Into<String>) -> Option<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            None
        } else {
            Some(VariableId(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VariableId {
    fn from(s: &str) -> Self {
        VariableId::new(s)
    }
}

impl From<String> for VariableId {
    fn from(s: String) -> Self {
        VariableId::new(s)
    }
}

impl std::borrow::Borrow<str> for VariableId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for VariableId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Ordered, duplicate-free, non-empty set of values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Value>", into = "Vec<Value>")]
pub struct ValueRange(Vec<Value>);

impl ValueRange {
    pub fn new(values: Vec<Value>) -> Result<Self, String> {
        if values.is_empty() {
            return Err("value range must be non-empty".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for v in &values {
            if !seen.insert(*v) {
                return Err(format!("duplicate value {v} in range"));
            }
        }
        Ok(ValueRange(values))
    }

    /// `0..n` as a range; `n` must be positive.
    pub fn codes(n: usize) -> Self {
        assert!(n > 0, "empty code range");
        ValueRange((0..n as Value).collect())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Value) -> bool {
        self.0.contains(&v)
    }

    pub fn index_of(&self, v: Value) -> Option<usize> {
        self.0.iter().position(|x| *x == v)
    }

    pub fn first(&self) -> Value {
        self.0[0]
    }
}

impl TryFrom<Vec<Value>> for ValueRange {
    type Error = String;

    fn try_from(values: Vec<Value>) -> Result<Self, Self::Error> {
        ValueRange::new(values)
    }
}

impl From<ValueRange> for Vec<Value> {
    fn from(r: ValueRange) -> Self {
        r.0
    }
}

/// Iterates the cartesian product of a list of value lists, last position
/// varying fastest. An empty list of factors yields the single empty tuple.
pub(crate) fn cartesian(factors: &[&[Value]]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::with_capacity(factors.len())];
    for factor in factors {
        let mut next = Vec::with_capacity(out.len() * factor.len());
        for prefix in &out {
            for v in factor.iter() {
                let mut t = prefix.clone();
                t.push(*v);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_rejects_duplicates_and_empty() {
        assert!(ValueRange::new(vec![]).is_err());
        assert!(ValueRange::new(vec![1, 2, 1]).is_err());
        assert_eq!(ValueRange::new(vec![0, 2, 4]).unwrap().index_of(4), Some(2));
    }

    #[test]
    fn cartesian_of_nothing_is_unit() {
        assert_eq!(cartesian(&[]), vec![Vec::<Value>::new()]);
        let a = [0, 1];
        let b = [5, 6, 7];
        let p = cartesian(&[&a, &b]);
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], vec![0, 6]);
    }

    #[test]
    fn empty_names_are_rejected() {
        assert!(VariableId::try_new("  ").is_none());
        assert_eq!(VariableId::from("X").as_str(), "X");
    }
}
