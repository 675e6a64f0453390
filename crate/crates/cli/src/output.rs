//! Rendering of results: JSON with fixed 17-digit floats, CSV with `# `
//! metadata lines, and the destination (stdout or a file).

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde_json::{Map, Number, Value};
use sublevel::Report;

pub const SWEEP_HEADER: [&str; 7] = [
    "t",
    "area_lower",
    "area_upper",
    "area_est",
    "ds_dt",
    "n_components",
    "engine",
];

/// A float as a JSON number with 17 significant digits; non-finite values
/// become the strings `inf`, `-inf`, `nan`.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        // Adding zero folds -0 into 0.
        Value::Number(Number::from_str(&format!("{:.16e}", v + 0.0)).expect("valid JSON number"))
    } else if v.is_nan() {
        Value::String("nan".into())
    } else if v > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

/// Rewrites every non-integer number in `v` to the 17-digit form.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_i64() || n.is_u64() => Value::Number(n),
        Value::Number(n) => num(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

fn float_map<'a>(m: impl IntoIterator<Item = (&'a String, &'a f64)>) -> Value {
    Value::Object(m.into_iter().map(|(k, v)| (k.clone(), num(*v))).collect())
}

pub fn report_json(rep: &Report) -> Value {
    let mut o = Map::new();
    o.insert("check".into(), Value::String(rep.check.clone()));
    o.insert(
        "status".into(),
        serde_json::to_value(rep.status).expect("status serializes"),
    );
    o.insert("margins".into(), float_map(&rep.margins));
    o.insert("params".into(), float_map(&rep.params));
    if !rep.violations.is_empty() {
        let v = serde_json::to_value(&rep.violations).expect("violations serialize");
        o.insert("violations".into(), normalize(v));
    }
    if !rep.notes.is_empty() {
        o.insert("notes".into(), Value::from(rep.notes.clone()));
    }
    Value::Object(o)
}

/// CSV cell for a float, empty when absent.
pub fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{:.16e}", v + 0.0))
}

/// Where the rendered document goes, plus the clock for the wall-clock
/// field.
pub struct Sink {
    pub out: Option<PathBuf>,
    pub started: Instant,
    pub config: Value,
}

impl Sink {
    fn wall_clock(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    fn emit(&self, body: &str) -> io::Result<()> {
        match &self.out {
            Some(path) => fs::write(path, body),
            None => {
                let mut stdout = io::stdout().lock();
                stdout.write_all(body.as_bytes())?;
                stdout.flush()
            }
        }
    }

    /// `body` plus `config`, `version` and (last) `wall_clock_s`.
    pub fn json(&self, body: Map<String, Value>) -> io::Result<()> {
        let mut o = body;
        o.insert("config".into(), self.config.clone());
        o.insert("version".into(), Value::String(sublevel::VERSION.into()));
        o.insert("wall_clock_s".into(), num(self.wall_clock()));
        let mut s = serde_json::to_string_pretty(&Value::Object(o)).expect("JSON renders");
        s.push('\n');
        self.emit(&s)
    }

    /// Metadata comment lines followed by `header` and `rows`.
    pub fn csv(&self, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut s = String::new();
        s.push_str(&format!("# version {}\n", sublevel::VERSION));
        s.push_str(&format!("# config {}\n", self.config));
        s.push_str(&format!("# wall_clock_s {:.3}\n", self.wall_clock()));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        s.push_str(std::str::from_utf8(&bytes).expect("CSV is UTF-8"));
        self.emit(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(-1.0 / 9.0).to_string(), "-1.1111111111111110e-1");
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(f64::NEG_INFINITY), Value::String("-inf".into()));
        let back: f64 = num(std::f64::consts::PI).as_f64().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn normalize_keeps_integers() {
        let v = serde_json::json!({"a": 3, "b": [0.5, -2], "c": {"d": 1e300}});
        let n = normalize(v);
        assert_eq!(n["a"].to_string(), "3");
        assert_eq!(n["b"][0].to_string(), "5.0000000000000000e-1");
        assert_eq!(n["b"][1].to_string(), "-2");
        assert_eq!(n["c"]["d"].to_string(), "1.0000000000000001e+300");
    }
}
