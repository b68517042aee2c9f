//! `--config file.json` support: the file holds an object of flag names to
//! values, expanded into flags placed before the ones on the command line so
//! that explicit flags win.

use std::fs;

use anyhow::{bail, Context};
use serde_json::Value;

pub fn expand(args: &[String]) -> anyhow::Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path: Option<String> = None;
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            path = Some(args.get(i + 1).context("--config needs a path")?.clone());
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a.clone());
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {path}"))?;
    let Value::Object(map) = value else {
        bail!("config {path} must hold a JSON object");
    };
    let mut flags = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => flags.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => flags.extend([flag, s]),
            Value::Number(n) => flags.extend([flag, n.to_string()]),
            other => bail!("config key `{key}` has unsupported value {other}"),
        }
    }
    // program name and subcommand stay in front
    let split = rest.len().min(2);
    let mut out: Vec<String> = rest[..split].to_vec();
    out.extend(flags);
    out.extend_from_slice(&rest[split..]);
    Ok(out)
}
