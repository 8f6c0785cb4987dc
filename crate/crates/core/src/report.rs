//! Sorted `key: value` reports.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::SurjectiveMap;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    entries: BTreeMap<String, String>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.entries.insert(key.into(), value.to_string());
        self
    }

    pub fn set_map(&mut self, key: impl Into<String>, map: &SurjectiveMap) -> &mut Self {
        self.set(key, map)
    }

    /// Copies every entry of `other` under `prefix.`.
    pub fn merge_prefixed(&mut self, prefix: &str, other: &Report) -> &mut Self {
        for (k, v) in &other.entries {
            self.entries.insert(format!("{prefix}.{k}"), v.clone());
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}

/// Zero-padded index so that keys sort numerically.
pub fn index_key(i: usize, total: usize) -> String {
    let width = total.max(1).to_string().len();
    format!("{i:0width$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_output() {
        let mut r = Report::new();
        r.set("b", 2).set("a", 1);
        assert_eq!(r.to_string(), "a: 1\nb: 2\n");
        assert_eq!(index_key(3, 120), "003");
        assert_eq!(index_key(0, 1), "0");
    }
}
