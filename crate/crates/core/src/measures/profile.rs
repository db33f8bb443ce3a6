use std::fmt;

use serde_json::{Value, json};

use crate::error::{Error, Result};

/// Neighbour counts by colour: `ℓ(b)` is the number of neighbours of colour `b`.
///
/// Stored sparsely as `(colour, count)` pairs sorted by colour with every
/// count positive, so the zero profile is the empty vector. Typical degrees
/// are O(1), which keeps these small.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Profile(Vec<(usize, u32)>);

impl Profile {
    pub fn zero() -> Self {
        Profile(Vec::new())
    }

    pub fn from_dense(counts: &[u32]) -> Self {
        Profile(
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(b, &c)| (b, c))
                .collect(),
        )
    }

    /// Builds a profile from arbitrary `(colour, count)` pairs; repeated
    /// colours are summed and zero counts dropped.
    pub fn from_entries<I: IntoIterator<Item = (usize, u32)>>(entries: I) -> Self {
        let mut v: Vec<(usize, u32)> = entries.into_iter().filter(|e| e.1 > 0).collect();
        v.sort_unstable();
        let mut out: Vec<(usize, u32)> = Vec::with_capacity(v.len());
        for (b, c) in v {
            match out.last_mut() {
                Some(last) if last.0 == b => last.1 += c,
                _ => out.push((b, c)),
            }
        }
        Profile(out)
    }

    pub fn count(&self, colour: usize) -> u32 {
        self.0
            .binary_search_by_key(&colour, |e| e.0)
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    /// Total number of neighbours.
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|e| e.1 as u64).sum()
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_colour(&self) -> Option<usize> {
        self.0.last().map(|e| e.0)
    }

    pub fn to_dense(&self, k: usize) -> Vec<u32> {
        let mut v = vec![0; k];
        for &(b, c) in &self.0 {
            v[b] = c;
        }
        v
    }

    /// `"(colour:count)"` strings in colour order.
    pub fn to_keys(&self) -> Vec<String> {
        self.0.iter().map(|(b, c)| format!("({b}:{c})")).collect()
    }

    pub fn parse_key(key: &str) -> Result<(usize, u32)> {
        let inner = key
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidMeasure(format!("bad profile key {key:?}")))?;
        let (b, c) = inner
            .split_once(':')
            .ok_or_else(|| Error::InvalidMeasure(format!("bad profile key {key:?}")))?;
        let b = b
            .trim()
            .parse()
            .map_err(|_| Error::InvalidMeasure(format!("bad colour in {key:?}")))?;
        let c = c
            .trim()
            .parse()
            .map_err(|_| Error::InvalidMeasure(format!("bad count in {key:?}")))?;
        Ok((b, c))
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (b, c)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({b}:{c})")?;
        }
        write!(f, "]")
    }
}

/// Support point of a neighbourhood measure: a vertex colour and its profile.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProfileAtom {
    pub colour: usize,
    pub profile: Profile,
}

impl ProfileAtom {
    pub fn new(colour: usize, profile: Profile) -> Self {
        ProfileAtom { colour, profile }
    }

    pub(crate) fn to_json(&self) -> Value {
        json!({ "colour": self.colour, "profile": self.profile.to_keys() })
    }

    pub(crate) fn from_json(v: &Value) -> Result<Self> {
        let colour = v
            .get("colour")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::InvalidMeasure(format!("atom {v} lacks a colour")))?
            as usize;
        let keys = v
            .get("profile")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidMeasure(format!("atom {v} lacks a profile")))?;
        let mut entries = Vec::with_capacity(keys.len());
        for key in keys {
            let s = key
                .as_str()
                .ok_or_else(|| Error::InvalidMeasure(format!("profile key {key} is not a string")))?;
            entries.push(Profile::parse_key(s)?);
        }
        Ok(ProfileAtom::new(colour, Profile::from_entries(entries)))
    }
}
