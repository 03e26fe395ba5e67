// SPDX-License-Identifier: MIT OR Apache-2.0

//! Series files: one value per line, an optional non-numeric header on the
//! first non-blank line, blank lines ignored.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: cannot parse {text:?} as a number")]
    Parse { path: String, line: usize, text: String },
    #[error("{path}: no values")]
    Empty { path: String },
}

pub fn read_series(path: &Path) -> Result<Vec<f64>, InputError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| InputError::Unreadable {
        path: shown.clone(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| InputError::Unreadable {
        path: shown.clone(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })?;
    parse_series(&text, &shown)
}

pub fn parse_series(text: &str, path: &str) -> Result<Vec<f64>, InputError> {
    let mut values = Vec::new();
    let mut seen_line = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = !seen_line;
        seen_line = true;
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            // a header is only allowed before any value
            Err(_) if first => {}
            _ => {
                return Err(InputError::Parse {
                    path: path.to_string(),
                    line: idx + 1,
                    text: line.to_string(),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(InputError::Empty { path: path.to_string() });
    }
    Ok(values)
}
