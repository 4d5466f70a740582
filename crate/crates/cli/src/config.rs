//! `key = value` config files, merged into argv ahead of the user's own
//! flags so that flags given on the command line win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::Command;

use crate::UsageError;

/// Keys that make no sense inside a config file.
const RESERVED: [&str; 3] = ["help", "config", "threads"];

pub fn load(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            UsageError(format!("{}:{}: expected `key = value`, got `{line}`", path.display(), n + 1))
        })?;
        pairs.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(pairs)
}

fn valid_keys(sub: &Command) -> Vec<String> {
    sub.get_arguments()
        .filter_map(|a| a.get_long())
        .filter(|l| !RESERVED.contains(l))
        .map(str::to_string)
        .collect()
}

/// Inserts `--key value` pairs right after the subcommand name.
pub fn merge(
    argv: &[OsString],
    sub_index: usize,
    sub: &Command,
    pairs: &[(String, String)],
) -> anyhow::Result<Vec<OsString>> {
    let keys = valid_keys(sub);
    let mut extra = Vec::new();
    for (key, value) in pairs {
        if !keys.contains(key) {
            let listed: Vec<String> = keys.iter().map(|k| k.replace('-', "_")).collect();
            return Err(UsageError(format!(
                "unknown config key `{}` for `{}`; valid keys: {}",
                key.replace('-', "_"),
                sub.get_name(),
                listed.join(", ")
            ))
            .into());
        }
        extra.push(OsString::from(format!("--{key}")));
        extra.push(OsString::from(value));
    }
    let mut out = argv[..=sub_index].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[sub_index + 1..]);
    Ok(out)
}
