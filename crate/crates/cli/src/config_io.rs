//! TOML ingestion into the flat dotted-key document.

use std::path::Path;

use thzra_core::{RawConfig, RawValue};

use crate::error::CliError;

/// Reads a TOML file and flattens nested tables into dotted keys.
pub fn load_raw(path: &Path) -> Result<RawConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_raw(&text).map(|raw| raw.with_base_dir(base))
}

pub fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let mut raw = RawConfig::new();
    flatten("", &table, &mut raw)?;
    Ok(raw)
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut RawConfig) -> Result<(), CliError> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out)?,
            other => {
                let value = convert(&key, other)?;
                out.set(key, value);
            }
        }
    }
    Ok(())
}

fn convert(key: &str, v: &toml::Value) -> Result<RawValue, CliError> {
    Ok(match v {
        toml::Value::Boolean(b) => RawValue::Bool(*b),
        toml::Value::Integer(i) => RawValue::Int(*i),
        toml::Value::Float(f) => RawValue::Float(*f),
        toml::Value::String(s) => RawValue::Str(s.clone()),
        toml::Value::Array(items) => RawValue::List(items.iter().map(|x| convert(key, x)).collect::<Result<_, _>>()?),
        toml::Value::Datetime(_) | toml::Value::Table(_) => {
            return Err(CliError::Config(format!("field `{key}`: unsupported value type")))
        }
    })
}
