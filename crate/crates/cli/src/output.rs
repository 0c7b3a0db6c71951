//! Number formatting and output sinks.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;

pub const SCHEMA_VERSION: u64 = 1;
pub const SIG_DIGITS: usize = 10;

/// Rounds to `SIG_DIGITS` significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIG_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Shortest decimal rendering of `v` rounded to `SIG_DIGITS` digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    format!("{}", round_sig(v))
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Writer to `--out` if given, else stdout.
pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create `{}`", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Emits `body` (a JSON object) with a leading `schema` field and floats
/// rounded to `SIG_DIGITS` significant digits.
pub fn emit_json(body: Value, out: Option<&Path>) -> Result<()> {
    let mut map = serde_json::Map::new();
    map.insert("schema".into(), SCHEMA_VERSION.into());
    match body {
        Value::Object(m) => map.extend(m),
        other => {
            map.insert("value".into(), other);
        }
    }
    let mut v = Value::Object(map);
    round_value(&mut v);
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
