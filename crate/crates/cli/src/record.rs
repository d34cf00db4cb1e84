//! JSON run records and their schema check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Subcommands that emit a record.
pub const COMMANDS: &[&str] = &[
    "stationary",
    "eigen",
    "bethe",
    "cgf",
    "rate",
    "cumulants",
    "simulate",
    "verify-appendix",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub tolerances: BTreeMap<String, f64>,
    /// Seconds.
    pub wall_time: f64,
}

/// One invocation: what was asked, what was computed, and how.
///
/// Non-finite results (rates outside the support, absent corrections) are
/// written as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub params: Value,
    pub results: Value,
    pub meta: Meta,
}

impl RunRecord {
    pub fn new(command: &str, params: Value, results: Value) -> Self {
        RunRecord {
            command: command.to_string(),
            params,
            results,
            meta: Meta {
                version: env!("CARGO_PKG_VERSION").to_string(),
                tolerances: BTreeMap::new(),
                wall_time: 0.0,
            },
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.meta.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialise")
    }
}

/// Checks a parsed record against the schema: exactly the four top-level
/// keys, a known command, object-valued `params`, object- or array-valued
/// `results`, and a complete `meta` block.
pub fn validate(v: &Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("record is not a JSON object")?;
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    if keys != ["command", "meta", "params", "results"] {
        return Err(format!("unexpected top-level keys {keys:?}"));
    }
    let command = obj["command"].as_str().ok_or("command is not a string")?;
    if !COMMANDS.contains(&command) {
        return Err(format!("unknown command {command:?}"));
    }
    if !obj["params"].is_object() {
        return Err("params is not an object".into());
    }
    if !(obj["results"].is_object() || obj["results"].is_array()) {
        return Err("results is neither an object nor an array".into());
    }
    let meta = obj["meta"].as_object().ok_or("meta is not an object")?;
    let mut mkeys: Vec<&str> = meta.keys().map(String::as_str).collect();
    mkeys.sort_unstable();
    if mkeys != ["tolerances", "version", "wall_time"] {
        return Err(format!("unexpected meta keys {mkeys:?}"));
    }
    meta["version"].as_str().ok_or("meta.version is not a string")?;
    let wall = meta["wall_time"].as_f64().ok_or("meta.wall_time is not a number")?;
    if !(wall >= 0.0) {
        return Err(format!("meta.wall_time is negative: {wall}"));
    }
    let tol = meta["tolerances"].as_object().ok_or("meta.tolerances is not an object")?;
    for (name, t) in tol {
        let t = t.as_f64().ok_or_else(|| format!("tolerance {name} is not a number"))?;
        if !(t > 0.0) {
            return Err(format!("tolerance {name} is not positive: {t}"));
        }
    }
    Ok(())
}

/// `x` as JSON, `null` unless finite.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::Null
    }
}

/// `Some(x)` as [`num`], `None` as `null`.
pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn round_trip() {
        let r = RunRecord::new("eigen", json!({"L": 4}), json!({"perron_root": 0.1 + 0.2})).tolerance("bridge", 1e-8);
        let text = r.to_json();
        let v: Value = serde_json::from_str(&text).unwrap();
        validate(&v).unwrap();
        let back: RunRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        // shortest round-trip formatting keeps every bit
        assert_eq!(back.results["perron_root"].as_f64().unwrap(), 0.1 + 0.2);
    }

    #[test]
    fn rejects_malformed() {
        let good = serde_json::to_value(RunRecord::new("cgf", json!({}), json!([]))).unwrap();
        validate(&good).unwrap();
        let mut bad = good.clone();
        bad["command"] = json!("plot");
        assert!(validate(&bad).is_err());
        let mut bad = good.clone();
        bad["meta"]["wall_time"] = Value::Null;
        assert!(validate(&bad).is_err());
        let mut bad = good.clone();
        bad.as_object_mut().unwrap().insert("extra".into(), json!(1));
        assert!(validate(&bad).is_err());
        let mut bad = good;
        bad["meta"]["tolerances"] = json!({"x": -1.0});
        assert!(validate(&bad).is_err());
    }

    #[test]
    fn non_finite_as_null() {
        assert_eq!(num(f64::INFINITY), Value::Null);
        assert_eq!(opt(None), Value::Null);
        assert_eq!(opt(Some(2.5)), json!(2.5));
    }
}
