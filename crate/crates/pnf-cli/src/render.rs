//! Output shaping shared by every subcommand.
//!
//! Two invariants live here: every floating-point value leaving the binary is
//! rounded to 12 significant digits first, and identical invocations produce
//! byte-identical output (JSON objects are emitted with sorted keys, CSV rows
//! are written in a fixed order, and nothing time- or address-dependent is
//! printed).

use pnf::{Error, Result};
use serde::Serialize;
use serde_json::Value;

/// Rounds to 12 significant digits. Applied to every number the CLI prints so
/// that output is stable across platforms and libm versions.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific round-trip")
}

/// Renders a rounded value for CSV cells and human-readable check lines:
/// plain decimal in a comfortable range, trimmed scientific notation outside
/// it.
pub fn fmt12(x: f64) -> String {
    let r = sig12(x);
    if r == 0.0 {
        return "0".to_string();
    }
    let magnitude = r.abs();
    if (1e-4..1e15).contains(&magnitude) {
        format!("{r}")
    } else {
        let s = format!("{r:.11e}");
        let (mantissa, exponent) = s.split_once('e').expect("always has an exponent");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

fn round_value(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(rounded) = n.as_f64().and_then(|f| serde_json::Number::from_f64(sig12(f))) {
                    *value = Value::Number(rounded);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn serialization_error(e: impl std::error::Error + Send + Sync + 'static) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e))
}

/// Serializes with sorted keys and 12-significant-digit floats, plus a
/// trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut tree = serde_json::to_value(value).map_err(serialization_error)?;
    round_value(&mut tree);
    let mut body = serde_json::to_string_pretty(&tree).map_err(serialization_error)?;
    body.push('\n');
    Ok(body)
}

/// Flattens a JSON tree into dotted `key,value` rows (the CSV rendering of
/// report-shaped output). Arrays and strings are emitted as compact JSON.
pub fn flatten_json(value: &Value) -> Vec<(String, String)> {
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    rows
}

fn walk(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (key, child) in map {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                walk(&path, child, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// Accumulates CSV records into a string.
pub struct CsvBuilder {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvBuilder {
    pub fn new() -> Self {
        Self {
            writer: csv::Writer::from_writer(Vec::new()),
        }
    }

    pub fn record<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(serialization_error)
    }

    pub fn finish(self) -> Result<String> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| serialization_error(e.into_error()))?;
        String::from_utf8(bytes).map_err(serialization_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_truncates_to_twelve_digits() {
        assert_eq!(sig12(0.36787944117144233), 0.367879441171);
        assert_eq!(sig12(1.4621171572600098), 1.46211715726);
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12(-2.0), -2.0);
    }

    #[test]
    fn fmt12_switches_notation_by_magnitude() {
        assert_eq!(fmt12(0.36787944117144233), "0.367879441171");
        assert_eq!(fmt12(2.0), "2");
        assert_eq!(fmt12(3.822e-15), "3.822e-15");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(-0.0), "0");
    }

    #[test]
    fn json_floats_are_rounded_and_keys_sorted() {
        #[derive(Serialize)]
        struct Demo {
            zeta: f64,
            alpha: f64,
        }
        let body = to_json(&Demo {
            zeta: 0.36787944117144233,
            alpha: 1.0,
        })
        .unwrap();
        let alpha = body.find("alpha").unwrap();
        let zeta = body.find("zeta").unwrap();
        assert!(alpha < zeta);
        assert!(body.contains("0.367879441171"));
        assert!(body.ends_with('\n'));
    }
}
