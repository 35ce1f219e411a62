//! `--config` file support: plain `key = value` lines injected as long
//! flags ahead of the command-line arguments, so explicit flags win.
//!
//! Manifests written by the tool use the same format; keys that are run
//! metadata rather than inputs (`command`, `version`, `duration_ms`,
//! `output`) are skipped on read, which lets a manifest be replayed with
//! `--config run.csv.manifest`.

use std::fmt;

#[derive(Debug)]
pub enum ConfigError {
    Io(String, std::io::Error),
    Malformed(String, usize),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(path, e) => write!(f, "cannot read config `{path}`: {e}"),
            ConfigError::Malformed(path, line) => {
                write!(f, "malformed line {line} in config `{path}` (want `key = value`)")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Keys recorded for provenance only, never replayed as flags.
const METADATA_KEYS: &[&str] = &["command", "version", "duration_ms", "output"];

/// Positional inputs recorded in manifests, replayed as positionals.
const POSITIONAL_KEYS: &[&str] = &["preset", "quantity", "problem", "figure"];

/// Scan argv for `--config FILE`, parse the file, and splice its entries in
/// as arguments placed before the user's own flags.
pub fn expand_config_args() -> Result<Vec<String>, ConfigError> {
    let raw: Vec<String> = std::env::args().collect();
    let mut path = None;
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == "--config" && i + 1 < raw.len() {
            path = Some(raw[i + 1].clone());
        } else if let Some(p) = raw[i].strip_prefix("--config=") {
            path = Some(p.to_string());
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(raw) };

    let text =
        std::fs::read_to_string(&path).map_err(|e| ConfigError::Io(path.clone(), e))?;
    let mut positionals = Vec::new();
    let mut flags = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or(ConfigError::Malformed(path.clone(), lineno + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if METADATA_KEYS.contains(&k) {
            continue;
        }
        if POSITIONAL_KEYS.contains(&k) {
            positionals.push(v.to_string());
            continue;
        }
        if v == "true" {
            flags.push(format!("--{k}"));
        } else if v == "false" {
            // absent boolean flag
        } else {
            flags.push(format!("--{k}"));
            flags.push(v.to_string());
        }
    }

    // argv = program, subcommand, [config positionals], config flags, user
    // args; config flags come first so explicit flags win (all args
    // self-override)
    let mut rest = raw[1..].to_vec();
    let mut cleaned = Vec::new();
    let mut skip = false;
    for a in rest.drain(..) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--config" {
            skip = true;
            continue;
        }
        if a.starts_with("--config=") {
            continue;
        }
        cleaned.push(a);
    }
    let mut out = Vec::with_capacity(raw.len() + flags.len() + positionals.len());
    out.push(raw[0].clone());
    if let Some(sub) = cleaned.first().cloned() {
        out.push(sub);
        // user positionals (a non-flag token right after the subcommand)
        // take precedence over the config's
        let user_has_positionals =
            cleaned.get(1).map(|a| !a.starts_with('-')).unwrap_or(false);
        if !user_has_positionals {
            out.extend(positionals);
        }
        out.extend(flags);
        out.extend(cleaned.into_iter().skip(1));
    } else {
        out.extend(positionals);
        out.extend(flags);
    }
    Ok(out)
}
