//! CSV and manifest writing: LF line endings, 17-significant-digit floats,
//! one `.manifest` sidecar per output file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A float rendered with 17 significant digits, enough to round-trip f64.
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        // keep integers readable; still exact
        format!("{v:.1}")
    } else {
        format!("{v:.16e}")
    }
}

/// Accumulates one CSV file in memory.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv {
            text: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Run provenance captured next to every output file.
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            entries: vec![
                ("command".into(), command.into()),
                ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ],
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, fmt_f64(value));
    }

    fn render(&self, output_name: &str, duration_ms: u128) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "output = {output_name}");
        let _ = writeln!(s, "duration_ms = {duration_ms}");
        s
    }
}

/// Write `content` to `dir/name` plus its manifest sidecar `dir/name.manifest`.
pub fn write_with_manifest(
    dir: &Path,
    name: &str,
    content: &str,
    manifest: &Manifest,
    duration_ms: u128,
) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    let side = dir.join(format!("{name}.manifest"));
    std::fs::write(&side, manifest.render(name, duration_ms))?;
    Ok(path)
}
