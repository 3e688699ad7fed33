//! Optional JSON config: keys become `--key value` flags unless the same
//! flag already appears on the command line.

use std::ffi::OsString;

use concentra::{Error, Result};
use serde_json::Value;

fn flag_name(key: &str) -> String {
    format!("--{}", key.trim_start_matches('-').replace('_', "-"))
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

fn present(args: &[OsString], flag: &str) -> bool {
    let prefix = format!("{flag}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&prefix)
    })
}

fn scalar(key: &str, v: &Value) -> Result<String> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        _ => Err(Error::InvalidInput(format!("config key `{key}` must hold a number or string"))),
    }
}

/// Appends the flags implied by `config` to `args`.
pub fn merge(args: &[OsString], config: &Value) -> Result<Vec<OsString>> {
    let obj = config.as_object().ok_or_else(|| Error::InvalidInput("config file must hold a JSON object".into()))?;
    let mut out = args.to_vec();
    for (key, value) in obj {
        let flag = flag_name(key);
        if flag == "--config" || present(args, &flag) {
            continue;
        }
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag.into()),
            Value::Array(items) => {
                let joined = items.iter().map(|v| scalar(key, v)).collect::<Result<Vec<_>>>()?.join(",");
                out.push(flag.into());
                out.push(joined.into());
            }
            Value::Object(_) => return Err(Error::InvalidInput(format!("config key `{key}` may not hold an object"))),
            other => {
                out.push(flag.into());
                out.push(scalar(key, other)?.into());
            }
        }
    }
    Ok(out)
}

/// Reads the file named by `--config`, if any, and merges it into `args`.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("bad config JSON: {e}")))?;
    merge(&args, &value)
}
