//! JSON and CSV rendering of command results.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;

/// A command result: the JSON document and the rows of its CSV form.
#[derive(Clone, Debug)]
pub struct Output {
    pub json: Value,
    /// Records written one per CSV line; a single record when empty.
    pub table: Vec<Value>,
    pub status: Status,
}

/// Outcome class of a run, mapped to the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    Domain,
    VerificationFailure,
    Inconclusive,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Domain => 1,
            Status::VerificationFailure => 2,
            Status::Inconclusive => 3,
        }
    }

    /// Combines statuses; a failure outranks an inconclusive result.
    pub fn worst(self, other: Status) -> Status {
        let rank = |s: Status| match s {
            Status::Ok => 0,
            Status::Inconclusive => 1,
            Status::Domain => 2,
            Status::VerificationFailure => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

impl Output {
    pub fn new(json: impl Serialize) -> Self {
        Output { json: to_value(json), table: Vec::new(), status: Status::Ok }
    }

    pub fn with_table<T: Serialize>(mut self, rows: impl IntoIterator<Item = T>) -> Self {
        self.table = rows.into_iter().map(to_value).collect();
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("JSON values serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let rows: Vec<Value> = if self.table.is_empty() { vec![self.json.clone()] } else { self.table.clone() };
                to_csv(&rows)
            }
        }
    }
}

pub fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("command results serialize")
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) if a.len() == 2 && a.iter().all(Value::is_number) => {
            out.push((key("re"), scalar(&a[0])));
            out.push((key("im"), scalar(&a[1])));
        }
        Value::Array(_) => out.push((prefix.to_string(), v.to_string())),
        other => out.push((if prefix.is_empty() { "value".into() } else { prefix.to_string() }, scalar(other))),
    }
}

/// One line per record with the union of flattened keys as header, in order of first appearance.
pub fn to_csv(rows: &[Value]) -> String {
    let flat: Vec<Vec<(String, String)>> = rows
        .iter()
        .map(|r| {
            let mut out = Vec::new();
            flatten("", r, &mut out);
            out
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for row in &flat {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory CSV");
    for row in &flat {
        let m: Map<String, Value> = row.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let rec: Vec<String> = header.iter().map(|h| m.get(h).map(scalar).unwrap_or_default()).collect();
        w.write_record(&rec).expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_flattens_records() {
        let rows = vec![json!({"q0": "1+1i", "value": [1.0, -0.5], "meta": {"n": 3}}), json!({"q0": "2", "extra": true})];
        let s = to_csv(&rows);
        let lines: Vec<&str> = s.lines().collect();
        // object keys are sorted, so columns follow key order within each record
        assert_eq!(lines[0], "meta.n,q0,value.re,value.im,extra");
        assert_eq!(lines[1], "3,1+1i,1.0,-0.5,");
        assert_eq!(lines[2], ",2,,,true");
    }

    #[test]
    fn status_ordering() {
        assert_eq!(Status::Ok.worst(Status::Inconclusive), Status::Inconclusive);
        assert_eq!(Status::Inconclusive.worst(Status::VerificationFailure), Status::VerificationFailure);
        assert_eq!(Status::VerificationFailure.worst(Status::Inconclusive), Status::VerificationFailure);
        assert_eq!(Status::VerificationFailure.code(), 2);
    }
}
