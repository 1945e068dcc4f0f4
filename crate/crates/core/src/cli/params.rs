//! Typed access to a scenario's JSON parameter map.

use serde_json::{Map, Value};

use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Params<'a> {
    map: Option<&'a Map<String, Value>>,
}

fn bad(key: &str, v: &Value, want: &str) -> Error {
    Error::InvalidParameter(format!("`{key}` must be {want}, got {v}"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| bad(key, v, "a number")),
        Value::String(s) => s.trim().parse().map_err(|_| bad(key, v, "a number")),
        _ => Err(bad(key, v, "a number")),
    }
}

fn as_list(key: &str, v: &Value) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_f64(key, x)).collect(),
        Value::String(s) => s.split(',').map(|x| as_f64(key, &Value::String(x.into()))).collect(),
        Value::Number(_) => Ok(vec![as_f64(key, v)?]),
        _ => Err(bad(key, v, "a list of numbers")),
    }
}

impl<'a> Params<'a> {
    pub fn new(map: &'a Map<String, Value>) -> Self {
        Self { map: Some(map) }
    }

    pub fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.and_then(|m| m.get(key)).filter(|v| !v.is_null())
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| as_f64(key, v)).transpose()
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.opt_f64(key)? {
            None => Ok(default),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e15 => Ok(v as usize),
            Some(v) => Err(Error::InvalidParameter(format!("`{key}` must be a nonnegative integer, got {v}"))),
        }
    }

    pub fn i32(&self, key: &str, default: i32) -> Result<i32> {
        match self.opt_f64(key)? {
            None => Ok(default),
            Some(v) if v.fract() == 0.0 && v.abs() < 1e9 => Ok(v as i32),
            Some(v) => Err(Error::InvalidParameter(format!("`{key}` must be an integer, got {v}"))),
        }
    }

    pub fn opt_string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(bad(key, v, "a string")),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String> {
        Ok(self.opt_string(key)?.unwrap_or_else(|| default.to_string()))
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(Value::String(s)) if s == "true" || s == "false" => Ok(s == "true"),
            Some(v) => Err(bad(key, v, "a boolean")),
        }
    }

    pub fn opt_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| as_list(key, v)).transpose()
    }

    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        Ok(self.opt_list(key)?.unwrap_or_else(|| default.to_vec()))
    }

    /// A list of equal-length rows, e.g. `[[5, 3], [2, 1]]` or `"5,3;2,1"`.
    pub fn rows(&self, key: &str, width: usize, default: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let rows = match self.get(key) {
            None => return Ok(default.to_vec()),
            Some(Value::Array(items)) if items.iter().all(|x| x.is_array()) => {
                items.iter().map(|x| as_list(key, x)).collect::<Result<Vec<_>>>()?
            }
            Some(Value::String(s)) => s
                .split(';')
                .map(|r| as_list(key, &Value::String(r.into())))
                .collect::<Result<Vec<_>>>()?,
            Some(v) => vec![as_list(key, v)?],
        };
        if rows.is_empty() || rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidParameter(format!("`{key}` needs rows of {width} numbers")));
        }
        Ok(rows)
    }
}

/// Parses a `KEY=VALUE` override, reading the value as JSON when possible.
pub fn parse_assignment(s: &str) -> std::result::Result<(String, Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let key = k.trim().replace('-', "_");
    if key.is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    let value = serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().to_string()));
    Ok((key, value))
}
