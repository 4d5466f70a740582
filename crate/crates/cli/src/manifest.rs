//! `manifest.txt`: enough to re-run a command and check its inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{ArgMatches, CommandFactory};
use sha2::{Digest, Sha256};

use crate::args::Cli;

/// Bumped when any output format changes.
pub const FORMAT_REVISION: u32 = 1;

pub struct Manifest {
    command: String,
    params: Vec<(String, String)>,
    inputs: Vec<(PathBuf, String)>,
    applied: Vec<(String, f64)>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("reading {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        for p in entries {
            hasher.update(p.file_name().unwrap_or_default().as_encoded_bytes());
            hasher.update(fs::read(&p).with_context(|| format!("reading {}", p.display()))?);
        }
    } else {
        hasher.update(fs::read(path).with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl Manifest {
    /// Every argument of the subcommand, defaults included.
    pub fn new(command: &str, matches: &ArgMatches) -> Self {
        let root = Cli::command();
        let args: Vec<&str> = root
            .find_subcommand(command)
            .map(|sub| sub.get_arguments().map(|a| a.get_id().as_str()).collect())
            .unwrap_or_default();
        let mut params = Vec::new();
        for id in matches.ids() {
            let key = id.as_str();
            if key == "help" || !args.contains(&key) {
                continue;
            }
            let value = match matches.get_raw(key) {
                Some(raw) => raw.map(|v| v.to_string_lossy().into_owned()).collect::<Vec<_>>().join(" "),
                _ => continue,
            };
            params.push((key.to_string(), value));
        }
        params.sort();
        Self { command: command.to_string(), params, inputs: Vec::new(), applied: Vec::new() }
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let hash = sha256_file(path)?;
        self.inputs.push((path.to_path_buf(), hash));
        Ok(())
    }

    pub fn applied(&mut self, items: &[(&str, f64)]) {
        self.applied.extend(items.iter().map(|&(k, v)| (k.to_string(), v)));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tool = tgd {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "format_revision = {FORMAT_REVISION}");
        let _ = writeln!(out, "command = {}", self.command);
        out.push_str("\n[parameters]\n");
        for (k, v) in &self.params {
            let _ = writeln!(out, "{k} = {v}");
        }
        out.push_str("\n[inputs]\n");
        for (p, h) in &self.inputs {
            let _ = writeln!(out, "{h}  {}", p.display());
        }
        if !self.applied.is_empty() {
            out.push_str("\n[applied]\n");
            for (k, v) in &self.applied {
                let _ = writeln!(out, "{k} = {v:e}");
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}
