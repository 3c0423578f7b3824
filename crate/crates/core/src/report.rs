//! Ordered key/value documents for machine-readable reports.
//!
//! The structured output format is a flat list of `key = value` lines
//! with dotted key paths, emitted in a fixed order. Identical inputs
//! produce byte-identical documents: no timestamps, no map iteration
//! order, no locale-dependent formatting.

use std::fmt::Display;

#[derive(Debug, Default, Clone)]
pub struct Doc {
    entries: Vec<(String, String)>,
}

impl Doc {
    pub fn new() -> Self {
        Doc::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Append `other` with every key prefixed by `prefix.`.
    pub fn nest(&mut self, prefix: &str, other: Doc) {
        for (k, v) in other.entries {
            self.entries.push((format!("{}.{}", prefix, k), v));
        }
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}
