//! Report writers. Every JSON report carries the tool version and the
//! effective configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL: &str = "t2m-eval";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Per-clip metric values, the common currency between subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMetrics {
    pub clip_id: String,
    pub prompt_id: String,
    pub baseline_id: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub clip_id: Option<String>,
    pub message: String,
}

pub fn envelope(command: &str, config: &RunConfig, body: Value) -> Result<Value, CliError> {
    let mut map = serde_json::Map::new();
    map.insert("tool".into(), TOOL.into());
    map.insert("version".into(), VERSION.into());
    map.insert("command".into(), command.into());
    map.insert(
        "config".into(),
        serde_json::to_value(config).map_err(|e| CliError::Data(e.to_string()))?,
    );
    if let Value::Object(extra) = body {
        map.extend(extra);
    }
    Ok(Value::Object(map))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// CSV text from a header and string rows.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Data(e.to_string()))
}

/// Reads the `clips` array of any per-clip report.
pub fn read_clip_metrics(path: &Path) -> Result<Vec<ClipMetrics>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_value(v.get("clips").cloned().unwrap_or(Value::Array(Vec::new())))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
