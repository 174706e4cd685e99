//! Report assembly: numbers at 17 significant digits, JSON and CSV output.

use std::fmt;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

/// A float that serializes with 17 significant digits, and non-finite values
/// as the strings `"inf"`, `"-inf"` and `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.0;
        if x.is_nan() {
            f.write_str("nan")
        } else if x.is_infinite() {
            f.write_str(if x > 0.0 { "inf" } else { "-inf" })
        } else {
            write!(f, "{x:.16e}")
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(self.to_string()).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

pub fn nums(xs: &[f64]) -> Vec<Num> {
    xs.iter().copied().map(Num).collect()
}

/// JSON object with fields in insertion order, each pre-rendered so that
/// [`Num`] formatting survives nesting.
#[derive(Default)]
pub struct Obj(Vec<(&'static str, Box<RawValue>)>);

impl Obj {
    pub fn with<T: Serialize + ?Sized>(mut self, key: &'static str, value: &T) -> Self {
        self.0.push((key, raw(value)));
        self
    }
}

impl Serialize for Obj {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// `obj! { "key" => value, ... }` builds an [`Obj`].
macro_rules! obj {
    ($($key:literal => $value:expr),* $(,)?) => {
        $crate::report::Obj::default()$(.with($key, &$value))*
    };
}
pub(crate) use obj;

/// Rows for `--format csv`.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// What a command hands back for reporting.
pub struct Outcome {
    pub inputs: Box<RawValue>,
    pub outputs: Box<RawValue>,
    pub table: Table,
    pub seed: Option<u64>,
}

impl Outcome {
    pub fn new<I: Serialize, O: Serialize>(inputs: &I, outputs: &O, table: Table) -> Self {
        Outcome { inputs: raw(inputs), outputs: raw(outputs), table, seed: None }
    }
}

fn raw<T: Serialize + ?Sized>(v: &T) -> Box<RawValue> {
    let text = serde_json::to_string(v).expect("report values serialize");
    RawValue::from_string(text).expect("serde_json emits valid JSON")
}

#[derive(Serialize)]
struct RunReport<'a> {
    command: &'a [String],
    inputs: &'a RawValue,
    inputs_digest: String,
    outputs: &'a RawValue,
    wall_time: Option<Num>,
    seed: Option<u64>,
    version: &'static str,
}

pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// One-line JSON report.
pub fn render_json(argv: &[String], outcome: &Outcome, wall_time: Option<f64>) -> String {
    let report = RunReport {
        command: argv,
        inputs: &outcome.inputs,
        inputs_digest: digest(outcome.inputs.get()),
        outputs: &outcome.outputs,
        wall_time: wall_time.map(Num),
        seed: outcome.seed,
        version: env!("CARGO_PKG_VERSION"),
    };
    let mut text = serde_json::to_string(&report).expect("report serializes");
    text.push('\n');
    text
}
