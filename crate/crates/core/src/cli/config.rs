use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::CliError;

/// A JSON config file (or `{}`) with `--set` overrides applied.
#[derive(Debug, Clone)]
pub struct RawConfig {
    pub value: Value,
    pub text: Option<String>,
    pub path: Option<std::path::PathBuf>,
}

impl RawConfig {
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self, CliError> {
        let (value, text) = match path {
            None => (Value::Object(Map::new()), None),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                let v: Value = serde_json::from_str(&text).map_err(|e| {
                    CliError::Config(format!("{}:{}:{}: {e}", p.display(), e.line(), e.column()))
                })?;
                if !v.is_object() {
                    return Err(CliError::Config(format!("{}: top level must be an object", p.display())));
                }
                (v, Some(text))
            }
        };
        let mut cfg = RawConfig {
            value,
            text,
            path: path.map(Path::to_path_buf),
        };
        for s in sets {
            let (key, raw) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set {s}: expected key=value")))?;
            // JSON literals pass through; anything else is a string.
            let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut cfg.value, key, v)?;
        }
        Ok(cfg)
    }

    /// Sets a top-level key unless the flag was not given.
    pub fn flag<T: Serialize>(&mut self, key: &str, v: Option<T>) -> Result<(), CliError> {
        if let Some(v) = v {
            let v = serde_json::to_value(v).map_err(|e| CliError::Config(e.to_string()))?;
            set_path(&mut self.value, key, v)?;
        }
        Ok(())
    }

    pub fn parse<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.value.clone()).map_err(|e| CliError::Config(self.context(&e.to_string())))
    }

    pub fn base_dir(&self) -> std::path::PathBuf {
        self.path
            .as_deref()
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_default()
    }

    /// Prefixes a message with the config path and, when `needle` occurs in
    /// the file, its line.
    pub fn locate(&self, needle: &str, msg: &str) -> String {
        match (&self.path, &self.text) {
            (Some(p), Some(t)) => match find_line(t, needle) {
                Some(line) => format!("{}:{line}: {msg}", p.display()),
                None => format!("{}: {msg}", p.display()),
            },
            _ => msg.to_string(),
        }
    }

    fn context(&self, msg: &str) -> String {
        match &self.path {
            Some(p) => format!("{}: {msg}", p.display()),
            None => msg.to_string(),
        }
    }
}

/// 1-based line of the first occurrence of `needle`.
pub fn find_line(text: &str, needle: &str) -> Option<usize> {
    text.lines().position(|l| l.contains(needle)).map(|i| i + 1)
}

fn set_path(root: &mut Value, key: &str, v: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("--set: bad key `{key}`")));
    }
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: `{}` is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("non-empty key")
}

/// SHA-256 of the compact JSON with object keys sorted at every level.
pub fn canonical_hash<T: Serialize>(v: &T) -> String {
    let value = serde_json::to_value(v).expect("config serializes");
    let mut h = Sha256::new();
    h.update(canonical(&value).as_bytes());
    hex::encode(h.finalize())
}

fn canonical(v: &Value) -> String {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", Value::String(k.clone()), canonical(&m[k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(a) => format!("[{}]", a.iter().map(canonical).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}
