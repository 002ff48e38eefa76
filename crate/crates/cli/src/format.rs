//! Number formatting and output sinks.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use rbg_core::Error;

/// Eight significant digits, plain notation for exponents in `[-5, 8)`.
pub fn fmt8(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.7e}");
    let exp: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-5..8).contains(&exp) {
        format!("{v:.*}", (7 - exp) as usize)
    } else {
        sci
    }
}

/// `v` rounded to eight significant digits.
pub fn round8(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.7e}").parse().unwrap_or(v)
    } else {
        v
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if let Some(r) = serde_json::Number::from_f64(round8(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to eight significant digits.
pub fn json<T: Serialize>(value: &T) -> Result<String, Error> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Config(format!("cannot serialize output: {e}")))?;
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| Error::Config(format!("cannot serialize output: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// CSV text with a header row and LF line endings.
pub fn csv_text(header: &[&str], rows: &[Vec<f64>]) -> Result<String, Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::Config(format!("cannot write CSV: {e}"));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| fmt8(v))).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("cannot write CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("cannot write CSV: {e}")))
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Config(format!("cannot write to standard output: {e}"))),
    }
}
