//! Merging of `--config` files (flat `key=value` lines) with command-line
//! flags. Flags win over the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::{usage, CliResult, Opts};

const KEYS: &[&str] = &[
    "c",
    "nu",
    "branch",
    "xk",
    "xa",
    "ua",
    "K",
    "nu-grid",
    "window",
    "metric",
    "sign",
    "reference",
    "eps",
    "theta",
    "r",
    "out",
    "format",
];

pub struct Settings {
    values: BTreeMap<String, String>,
    pub windows: Vec<String>,
    out: Option<PathBuf>,
}

/// Parse `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key=value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        let k = k.trim_start_matches("--");
        if !KEYS.contains(&k) {
            return Err(usage(format!("config line {}: unknown key {k:?}", n + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

impl Settings {
    pub fn load(o: Opts) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        let mut windows = Vec::new();
        let mut out = None;
        if let Some(path) = &o.config {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            for (k, v) in parse_config(&text)? {
                match k.as_str() {
                    "window" => windows.push(v),
                    "out" => out = Some(PathBuf::from(v)),
                    _ => {
                        values.insert(k, v);
                    }
                }
            }
        }
        let flags = [
            ("c", o.c),
            ("nu", o.nu),
            ("branch", o.branch),
            ("xk", o.xk),
            ("xa", o.xa),
            ("ua", o.ua),
            ("K", o.k),
            ("nu-grid", o.nu_grid),
            ("metric", o.metric),
            ("sign", o.sign),
            ("reference", o.reference),
            ("eps", o.eps),
            ("theta", o.theta),
            ("r", o.r),
            ("format", o.format),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        if !o.window.is_empty() {
            windows = o.window;
        }
        if o.out.is_some() {
            out = o.out;
        }
        Ok(Self {
            values,
            windows,
            out,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}
