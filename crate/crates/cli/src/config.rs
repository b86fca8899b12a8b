//! Flat `section.key = value` run configuration.
//!
//! Files are TOML restricted to scalars and arrays; nested tables are
//! flattened to dotted keys. Every key a command reads is recorded together
//! with any default it fell back to, and the hash is taken over that resolved
//! set, so two runs share a hash exactly when they ran with the same values.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::Value;

use crate::error::{CliError, CliResult};

/// Keys that never enter the hash because they do not affect any output.
const UNHASHED: &[&str] = &["out"];

#[derive(Debug, Default)]
pub struct FlatConfig {
    given: BTreeMap<String, Value>,
    resolved: RefCell<BTreeMap<String, Value>>,
    read: RefCell<BTreeSet<String>>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) -> CliResult<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out)?,
            Value::Array(items) if items.iter().any(|x| matches!(x, Value::Table(_) | Value::Array(_))) => {
                return Err(CliError::config(format!("{key}: only flat arrays of scalars are allowed")));
            }
            _ => {
                out.insert(key, v.clone());
            }
        }
    }
    Ok(())
}

/// Parses `text` as a TOML value, falling back to a bare string.
fn parse_value(text: &str) -> Value {
    match format!("v = {text}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v"),
        Err(_) => Value::String(text.to_string()),
    }
}

impl FlatConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::config(format!("config is not valid key-value text: {e}")))?;
        let mut given = BTreeMap::new();
        flatten("", &table, &mut given)?;
        Ok(Self {
            given,
            ..Self::default()
        })
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> CliResult<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override {assignment:?} is not key=value")))?;
        self.given.insert(k.trim().to_string(), parse_value(v.trim()));
        Ok(())
    }

    pub fn set_value(&mut self, key: &str, v: impl Into<Value>) {
        self.given.insert(key.to_string(), v.into());
    }

    fn lookup(&self, key: &str) -> Option<Value> {
        self.read.borrow_mut().insert(key.to_string());
        let v = self.given.get(key).cloned()?;
        self.resolved.borrow_mut().insert(key.to_string(), v.clone());
        Some(v)
    }

    fn fallback(&self, key: &str, v: Value) {
        self.resolved.borrow_mut().insert(key.to_string(), v);
    }

    fn wrong(key: &str, want: &str, v: &Value) -> CliError {
        CliError::config(format!("{key} must be {want}, got {v}"))
    }

    pub fn opt_f64(&self, key: &str) -> CliResult<Option<f64>> {
        match self.lookup(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(x)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(v) => Err(Self::wrong(key, "a number", &v)),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        Ok(match self.opt_f64(key)? {
            Some(x) => x,
            None => {
                self.fallback(key, Value::Float(default));
                default
            }
        })
    }

    pub fn opt_u64(&self, key: &str) -> CliResult<Option<u64>> {
        match self.lookup(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(v) => Err(Self::wrong(key, "a nonnegative integer", &v)),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> CliResult<usize> {
        Ok(match self.opt_u64(key)? {
            Some(x) => x as usize,
            None => {
                self.fallback(key, Value::Integer(default as i64));
                default
            }
        })
    }

    pub fn bool_or(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.lookup(key) {
            None => {
                self.fallback(key, Value::Boolean(default));
                Ok(default)
            }
            Some(Value::Boolean(b)) => Ok(b),
            Some(v) => Err(Self::wrong(key, "true or false", &v)),
        }
    }

    pub fn opt_str(&self, key: &str) -> CliResult<Option<String>> {
        match self.lookup(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(Self::wrong(key, "a string", &v)),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> CliResult<String> {
        Ok(match self.opt_str(key)? {
            Some(s) => s,
            None => {
                self.fallback(key, Value::String(default.to_string()));
                default.to_string()
            }
        })
    }

    pub fn opt_path(&self, key: &str) -> CliResult<Option<PathBuf>> {
        Ok(self.opt_str(key)?.map(PathBuf::from))
    }

    pub fn path(&self, key: &str) -> CliResult<PathBuf> {
        self.opt_path(key)?
            .ok_or_else(|| CliError::config(format!("{key} must be set")))
    }

    /// A list of integers; a single integer counts as a one-element list.
    pub fn usize_list_or(&self, key: &str, default: &[usize]) -> CliResult<Vec<usize>> {
        let as_usize = |v: &Value| match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            other => Err(Self::wrong(key, "nonnegative integers", other)),
        };
        match self.lookup(key) {
            None => {
                self.fallback(key, Value::Array(default.iter().map(|&x| Value::Integer(x as i64)).collect()));
                Ok(default.to_vec())
            }
            Some(Value::Array(items)) => items.iter().map(as_usize).collect(),
            Some(v) => Ok(vec![as_usize(&v)?]),
        }
    }

    pub fn str_list_or(&self, key: &str, default: &[&str]) -> CliResult<Vec<String>> {
        let as_str = |v: &Value| match v {
            Value::String(s) => Ok(s.clone()),
            other => Err(Self::wrong(key, "strings", other)),
        };
        match self.lookup(key) {
            None => {
                self.fallback(key, Value::Array(default.iter().map(|s| Value::String(s.to_string())).collect()));
                Ok(default.iter().map(|s| s.to_string()).collect())
            }
            Some(Value::Array(items)) => items.iter().map(as_str).collect(),
            Some(v) => Ok(vec![as_str(&v)?]),
        }
    }

    /// The root seed; there is deliberately no default.
    pub fn seed(&self) -> CliResult<u64> {
        self.opt_u64("seed")?
            .ok_or_else(|| CliError::config("seed must be set explicitly (--seed or seed = ...)"))
    }

    /// Fails on keys the command never read, which are almost always typos.
    pub fn reject_unknown(&self) -> CliResult<()> {
        let read = self.read.borrow();
        let unknown: Vec<&str> = self
            .given
            .keys()
            .filter(|k| !read.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::config(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }

    /// Resolved values as sorted `key = value` lines; valid config text.
    pub fn canonical(&self) -> String {
        self.resolved
            .borrow()
            .iter()
            .filter(|(k, _)| !UNHASHED.contains(&k.as_str()))
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn hash(&self) -> String {
        hash_text(&self.canonical())
    }
}

pub fn hash_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
