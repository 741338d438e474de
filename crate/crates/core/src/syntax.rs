//! Small helpers for the `<family> key=value ...` configuration syntax.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct KeyValues {
    family: Option<String>,
    pairs: Vec<(String, String)>,
}

impl KeyValues {
    /// Parse `key=value` words, rejecting keys outside `allowed` and duplicates.
    pub(crate) fn from_words(words: &[&str], allowed: &[&str]) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for word in words {
            let (key, value) = word
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{word}'")))?;
            let key = key.to_ascii_lowercase();
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Parse(format!(
                    "unknown parameter '{key}' (allowed: {})",
                    allowed.join(", ")
                )));
            }
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(Error::Parse(format!("parameter '{key}' given twice")));
            }
            pairs.push((key, value.to_string()));
        }
        Ok(KeyValues { family: None, pairs })
    }

    /// Parse a full `<family> key=value ...` string.
    pub(crate) fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let (family, rest) = words
            .split_first()
            .ok_or_else(|| Error::Parse("empty input".into()))?;
        let mut kv = KeyValues::from_words(rest, allowed)?;
        kv.family = Some(family.to_string());
        Ok(kv)
    }

    pub(crate) fn has(&self, key: &str) -> bool {
        self.pairs.iter().any(|(k, _)| k == key)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub(crate) fn get_or(&self, key: &str, default: f64) -> Result<f64> {
        self.raw(key).map_or(Ok(default), |v| parse_number(key, v))
    }

    pub(crate) fn require(&self, key: &str) -> Result<f64> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::Parse(format!("missing required parameter '{key}'")))?;
        parse_number(key, v)
    }

    pub(crate) fn with(mut self, key: &str, value: f64) -> Self {
        for (k, v) in &mut self.pairs {
            if k == key {
                *v = value.to_string();
            }
        }
        self
    }

    pub(crate) fn render(&self) -> String {
        let mut out = self.family.clone().unwrap_or_default();
        for (k, v) in &self.pairs {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(k);
            out.push('=');
            out.push_str(v);
        }
        out
    }
}

fn parse_number(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("parameter '{key}' is not a number: '{v}'")))
}

/// Numbers separated by commas and/or whitespace.
pub(crate) fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("not a number: '{t}'")))
        })
        .collect()
}

pub(crate) fn format_list(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_render_round_trip() {
        let kv = KeyValues::parse("powerlaw a=1 alpha=2", &["a", "alpha"]).unwrap();
        assert_eq!(kv.render(), "powerlaw a=1 alpha=2");
        assert_eq!(kv.clone().with("alpha", 1.5).render(), "powerlaw a=1 alpha=1.5");
        assert_eq!(kv.get_or("beta", 7.0).unwrap(), 7.0);
        assert!(kv.require("beta").is_err());
    }

    #[test]
    fn numbers_accept_mixed_separators() {
        assert_eq!(parse_numbers("1, 2\n3 4e-1").unwrap(), vec![1.0, 2.0, 3.0, 0.4]);
        assert!(parse_numbers("1,x").is_err());
    }
}
