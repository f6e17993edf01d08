//! Flat `key = value` text format used for experiment and codec configs.
//!
//! One pair per line, `#` starts a comment, keys are case-sensitive and
//! use the long CLI flag spelling (`snr-db`, `lambda`, ...).

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if map.entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(map)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<V>(&self, key: &str) -> Result<Option<V>>
    where
        V: FromStr,
        V::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("cannot parse `{key} = {raw}`: {e}"))),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let kv = KvMap::parse("# header\n alpha = 3  # unstable pole\n\ncodec=spiral\n").unwrap();
        assert_eq!(kv.get::<f64>("alpha").unwrap(), Some(3.0));
        assert_eq!(kv.get_str("codec"), Some("spiral"));
        assert_eq!(kv.get::<f64>("beta").unwrap(), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(KvMap::parse("alpha 3").is_err());
        assert!(KvMap::parse("= 3").is_err());
        assert!(KvMap::parse("a = 1\na = 2").is_err());
        assert!(KvMap::parse("a = x").unwrap().get::<f64>("a").is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut kv = KvMap::new();
        kv.set("delta", 4.5);
        kv.set("family", "spiral");
        assert_eq!(KvMap::parse(&kv.render()).unwrap(), kv);
    }
}
