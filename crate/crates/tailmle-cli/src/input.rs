//! Data file parsing: UTF-8 text, one decimal number per line, blank lines
//! and `#` comment lines ignored.

use crate::commands::CliError;
use std::path::Path;

pub fn read_numbers(path: &Path) -> Result<Vec<f64>, CliError> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => {
                return Err(CliError::usage(format!(
                    "{}: line {}: cannot parse {trimmed:?} as a finite number",
                    path.display(),
                    idx + 1
                )))
            }
        }
    }
    Ok(values)
}
