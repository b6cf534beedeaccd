use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: String,
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

/// Writes `result` wrapped with the command name and the full configuration.
/// Floats render in shortest round-trip form; non-finite values become `null`.
pub fn write_json<T: Serialize>(dir: &Path, file: &str, command: &str, config: &RunConfig, result: &T) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let env = Envelope {
        schema: format!("horlicz/{command}"),
        schema_version: SCHEMA_VERSION,
        command,
        config,
        result,
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| e.to_string())?;
    text.push('\n');
    let path = dir.join(file);
    fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Rounds to 12 significant digits and prints the shortest form of the result.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float");
    if r != 0.0 && !(1e-5..1e16).contains(&r.abs()) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

pub fn opt12(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    w.write_record(header).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record(r).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

/// File-system friendly form of a criterion label.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect::<String>()
        .trim_end_matches('_')
        .to_string()
}
