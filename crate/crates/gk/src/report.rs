//! Sweep reports: one row per grid point with a measured quantity, an envelope and their ratio.

use std::collections::BTreeMap;

use serde::Serialize;

/// Parameter value attached to a sweep row.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

impl From<String> for ParamValue {
    fn from(v: String) -> Self {
        ParamValue::Text(v)
    }
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Text(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub params: BTreeMap<String, ParamValue>,
    pub lhs: f64,
    pub envelope: f64,
    pub ratio: f64,
}

impl SweepRow {
    /// Row with `ratio = lhs / envelope`; the envelope must be positive.
    pub fn new(params: Vec<(&str, ParamValue)>, lhs: f64, envelope: f64) -> Self {
        assert!(envelope > 0.0, "sweep envelope must be positive");
        SweepRow { params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(), lhs, envelope, ratio: lhs / envelope }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub name: String,
    pub rows: Vec<SweepRow>,
    pub max_ratio: f64,
    pub argmax: Option<usize>,
    /// Blow-up flag: the largest ratio over the top third of the growth
    /// parameter exceeds three times the largest over the bottom third.
    pub blow_up: bool,
}

impl SweepReport {
    pub fn new(name: &str, rows: Vec<SweepRow>) -> Self {
        let mut argmax = None;
        let mut max_ratio = f64::NEG_INFINITY;
        for (i, r) in rows.iter().enumerate() {
            if r.ratio > max_ratio || r.ratio.is_nan() {
                max_ratio = r.ratio;
                argmax = Some(i);
            }
        }
        if rows.is_empty() {
            max_ratio = 0.0;
        }
        SweepReport { name: name.to_string(), rows, max_ratio, argmax, blow_up: false }
    }

    /// Sets the blow-up flag by splitting rows into thirds of the numeric
    /// parameter `key` (rows without the key are ignored).
    pub fn with_blow_up_check(mut self, key: &str) -> Self {
        let mut vals: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter_map(|r| match r.params.get(key) {
                Some(ParamValue::Int(v)) => Some((*v as f64, r.ratio)),
                Some(ParamValue::Real(v)) => Some((*v, r.ratio)),
                _ => None,
            })
            .collect();
        if vals.len() >= 3 {
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let lo_cut = vals[vals.len() / 3].0;
            let hi_cut = vals[(2 * vals.len()) / 3].0;
            let max_in = |pred: &dyn Fn(f64) -> bool| vals.iter().filter(|v| pred(v.0)).map(|v| v.1).fold(0.0f64, f64::max);
            let low = max_in(&|k| k <= lo_cut);
            let high = max_in(&|k| k >= hi_cut);
            self.blow_up = high > 3.0 * low;
        }
        self
    }

    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.ratio.is_finite() && r.lhs.is_finite())
    }
}
