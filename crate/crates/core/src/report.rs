//! Structured pass/fail records produced by every check in the crate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Which way the measured value is compared against the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// pass iff `measured <= bound + tolerance`
    AtMost,
    /// pass iff `measured >= bound - tolerance`
    AtLeast,
    /// pass iff `|measured - bound| <= tolerance`
    Near,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The check could not be decided (e.g. unstable sign pattern); not a failure.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    #[serde(with = "float_or_text")]
    pub measured: f64,
    #[serde(with = "float_or_text")]
    pub bound: f64,
    #[serde(with = "float_or_text")]
    pub tolerance: f64,
    pub comparison: Comparison,
    /// Additional named conditions that must all hold for `pass`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub conditions: BTreeMap<String, bool>,
    pub status: Status,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<BTreeMap<String, Value>>,
}

/// Finite values as JSON numbers, the rest as `"NaN"`, `"inf"`, `"-inf"`.
mod float_or_text {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
        Null(()),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Null(()) => Ok(f64::NAN),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(de::Error::custom(format!("not a float: {other}"))),
            },
        }
    }
}

fn holds(comparison: Comparison, measured: f64, bound: f64, tolerance: f64) -> bool {
    match comparison {
        Comparison::AtMost => measured <= bound + tolerance,
        Comparison::AtLeast => measured >= bound - tolerance,
        Comparison::Near => (measured - bound).abs() <= tolerance,
    }
}

impl VerificationReport {
    pub fn new(name: impl Into<String>, comparison: Comparison, measured: f64, bound: f64, tolerance: f64) -> Self {
        let mut r = VerificationReport {
            name: name.into(),
            params: BTreeMap::new(),
            measured,
            bound,
            tolerance,
            comparison,
            conditions: BTreeMap::new(),
            status: Status::Fail,
            pass: false,
            extra: Vec::new(),
        };
        r.refresh();
        r
    }

    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, tolerance: f64) -> Self {
        Self::new(name, Comparison::AtMost, measured, bound, tolerance)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64, tolerance: f64) -> Self {
        Self::new(name, Comparison::AtLeast, measured, bound, tolerance)
    }

    pub fn near(name: impl Into<String>, measured: f64, bound: f64, tolerance: f64) -> Self {
        Self::new(name, Comparison::Near, measured, bound, tolerance)
    }

    /// A report for a check that raised an error instead of producing a value.
    pub fn failed(name: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut r = Self::new(name, Comparison::AtMost, f64::NAN, f64::NAN, 0.0);
        r.params.insert("error".into(), Value::String(reason.into()));
        r
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn condition(mut self, key: &str, holds: bool) -> Self {
        self.conditions.insert(key.to_string(), holds);
        self.refresh();
        self
    }

    pub fn with_extra(mut self, extra: Vec<BTreeMap<String, Value>>) -> Self {
        self.extra = extra;
        self
    }

    pub fn inconclusive(mut self) -> Self {
        self.status = Status::Inconclusive;
        self.pass = false;
        self
    }

    fn refresh(&mut self) {
        let ok = holds(self.comparison, self.measured, self.bound, self.tolerance)
            && self.conditions.values().all(|c| *c);
        self.pass = ok;
        self.status = if ok { Status::Pass } else { Status::Fail };
    }

    /// Re-derives `pass` from the stored fields; true when consistent.
    pub fn is_consistent(&self) -> bool {
        let ok = holds(self.comparison, self.measured, self.bound, self.tolerance)
            && self.conditions.values().all(|c| *c);
        match self.status {
            Status::Inconclusive => !self.pass,
            Status::Pass => ok && self.pass,
            Status::Fail => !ok && !self.pass,
        }
    }
}

/// Builds an `extra` record from key/value pairs.
pub fn record<const N: usize>(pairs: [(&str, Value); N]) -> BTreeMap<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
