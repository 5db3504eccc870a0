//! Canonical JSON for reports: keys sorted, reals printed with 17
//! significant digits in exponent form, integers as integers, two-space
//! indentation. Equal values always serialize to identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::netsim::{CommMetrics, NetProfile};

/// Traffic counters with simulated network times. Local compute time is left
/// out so reports stay reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Traffic {
    pub bytes_sent: u64,
    pub rounds: u64,
    pub lan_seconds: f64,
    pub wan_seconds: f64,
}

impl From<&CommMetrics> for Traffic {
    fn from(m: &CommMetrics) -> Self {
        Self {
            bytes_sent: m.bytes_sent,
            rounds: m.rounds,
            lan_seconds: m.network_time(&NetProfile::LAN),
            wan_seconds: m.network_time(&NetProfile::WAN),
        }
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

/// Writes `value` as canonical JSON. The parent directory must exist.
pub fn emit_report<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_canonical_json(value)?)?;
    Ok(())
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").expect("string write");
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").expect("string write");
            } else {
                let f = n.as_f64().expect("json number");
                write!(out, "{f:.16e}").expect("string write");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                newline(depth + 1, out);
                write_value(item, depth + 1, out);
            }
            newline(depth, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                newline(depth + 1, out);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(&map[key], depth + 1, out);
            }
            newline(depth, out);
            out.push('}');
        }
    }
}

fn newline(depth: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[derive(Serialize)]
    struct Sample {
        zeta: f64,
        alpha: u64,
        name: String,
        nested: HashMap<String, Vec<f64>>,
    }

    fn sample() -> Sample {
        let mut nested = HashMap::new();
        nested.insert("b".into(), vec![0.1, -2.5e-300]);
        nested.insert("a".into(), vec![]);
        Sample {
            zeta: 1.0,
            alpha: 7,
            name: "q\"x".into(),
            nested,
        }
    }

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let s = to_canonical_json(&sample()).unwrap();
        let a = s.find("\"alpha\"").unwrap();
        let n = s.find("\"name\"").unwrap();
        let z = s.find("\"zeta\"").unwrap();
        assert!(a < n && n < z);
        assert!(s.contains("\"alpha\": 7"));
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("\"a\": []"));
    }

    #[test]
    fn round_trips_through_parse() {
        let s = to_canonical_json(&sample()).unwrap();
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back, serde_json::to_value(sample()).unwrap());
        assert_eq!(to_canonical_json(&back).unwrap(), s);
    }

    #[test]
    fn missing_directory_is_io_error() {
        let err = emit_report(&sample(), Path::new("/nonexistent/dir/r.json")).unwrap_err();
        assert!(matches!(err, crate::error::Error::Io(_)));
    }
}
