pub mod analyze;
pub mod simulate;
pub mod sweep;
pub mod validate;

use thzra_core::{ConfigError, RawConfig};

use crate::error::CliError;

/// Integer list under `key`, each entry at least `min`.
pub(crate) fn u64_list(raw: &RawConfig, key: &str, min: u64) -> Result<Option<Vec<u64>>, CliError> {
    let Some(xs) = raw.f64_list(key)? else { return Ok(None) };
    xs.into_iter()
        .map(|x| {
            if x.fract() == 0.0 && x >= min as f64 && x <= u32::MAX as f64 {
                Ok(x as u64)
            } else {
                Err(ConfigError::OutOfRange {
                    field: key.into(),
                    value: x.to_string(),
                    bound: format!("integers >= {min}"),
                }
                .into())
            }
        })
        .collect::<Result<Vec<_>, CliError>>()
        .map(Some)
}
