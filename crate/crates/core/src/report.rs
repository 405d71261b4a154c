//! Deterministic report documents: every float is written as a fixed-width decimal
//! string so identical runs give byte-identical files on every platform.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Decimal rendering used for all floats in reports.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Replaces every floating-point JSON number with its decimal string.
pub fn decimalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => Value::String(fmt_f64(n.as_f64().unwrap_or(f64::NAN))),
        Value::Array(a) => Value::Array(a.into_iter().map(decimalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, decimalize(v))).collect()),
        other => other,
    }
}

/// Serializes `x` to JSON with decimal-string floats; non-finite floats become null.
pub fn to_value<T: Serialize>(x: &T) -> Value {
    decimalize(serde_json::to_value(x).expect("report values serialize"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn ser_bigint_vec<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}

pub fn ser_bigint_matrix<S: Serializer>(m: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect();
    rows.serialize(s)
}

pub fn ser_rational_matrix<S: Serializer>(m: &[Vec<BigRational>], s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(fmt_rational).collect()).collect();
    rows.serialize(s)
}

/// Name, path and content digest of one input file.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(role: &str, path: &str, bytes: &[u8]) -> Self {
        InputDigest { role: role.to_string(), path: path.to_string(), sha256: sha256_hex(bytes) }
    }
}

/// A flat table for the CSV rendering of a report section.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Table { name: name.to_string(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Top-level document written by every subcommand.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub parameters: Value,
    pub verdict: String,
    pub exit_code: i32,
    pub summary: Vec<String>,
    pub result: Value,
    pub tables: Vec<Table>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            inputs: Vec::new(),
            parameters: Value::Object(Map::new()),
            verdict: String::new(),
            exit_code: 0,
            summary: Vec::new(),
            result: Value::Null,
            tables: Vec::new(),
        }
    }

    pub fn to_json_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("tool".into(), Value::String(env!("CARGO_PKG_NAME").into()));
        m.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("inputs".into(), to_value(&self.inputs));
        m.insert("parameters".into(), decimalize(self.parameters.clone()));
        m.insert("verdict".into(), Value::String(self.verdict.clone()));
        m.insert("exit_code".into(), Value::from(self.exit_code));
        m.insert("summary".into(), Value::from(self.summary.clone()));
        m.insert("result".into(), decimalize(self.result.clone()));
        Value::Object(m)
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("json value renders");
        s.push('\n');
        s
    }

    /// Sections as CSV blocks separated by `# name` lines; a report without tables
    /// becomes a single key/value block.
    pub fn render_csv(&self) -> Result<String, csv::Error> {
        let mut tables = vec![{
            let mut t = Table::new("report", &["key", "value"]);
            t.push(vec!["command".into(), self.command.clone()]);
            t.push(vec!["verdict".into(), self.verdict.clone()]);
            t.push(vec!["exit_code".into(), self.exit_code.to_string()]);
            for line in &self.summary {
                t.push(vec!["summary".into(), line.clone()]);
            }
            t
        }];
        tables.extend(self.tables.iter().cloned());
        let mut out = String::new();
        for t in &tables {
            out.push_str(&format!("# {}\n", t.name));
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&t.headers)?;
            for r in &t.rows {
                w.write_record(r)?;
            }
            let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
            out.push_str(&String::from_utf8_lossy(&bytes));
        }
        Ok(out)
    }
}
