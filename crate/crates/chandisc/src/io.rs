//! Ensemble files.
//!
//! ```json
//! { "dim": 2,
//!   "probs": [0.5, {"num": 1, "den": 2}],
//!   "unitaries": [ [[[1,0],[0,0]], [[0,0],[1,0]]], [[[0,0],[1,0]], [[1,0],[0,0]]] ],
//!   "names": ["I", "X"] }
//! ```
//!
//! Each unitary is a list of rows of `[re, im]` pairs; any number may be written as
//! `{"num", "den"}`. Without `"unitaries"` the gates are resolved from `"names"`.
//! `"probs"` may also be `"uniform"` (the default) or `"pi-digits"`.

use std::path::Path;

use serde_json::{json, Value};
use thiserror::Error;

use crate::certificates::rationalize;
use crate::channels::{named_gate, ChannelError, Ensemble, UnitaryGate};
use crate::linalg::{c, CMat};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed ensemble: {0}")]
    Format(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

fn bad(msg: impl Into<String>) -> InputError {
    InputError::Format(msg.into())
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbSpec {
    Uniform,
    PiDigits,
    Explicit(Vec<f64>),
}

const PI_DIGITS: &str = "31415926535897932384626433832795028841971693993751";

/// First `n` decimal digits of π, normalized.
pub fn pi_digit_probs(n: usize) -> Result<Vec<f64>, InputError> {
    if n == 0 || n > PI_DIGITS.len() {
        return Err(bad(format!("pi-digits supports 1..={} hypotheses", PI_DIGITS.len())));
    }
    let digits: Vec<f64> = PI_DIGITS.bytes().take(n).map(|b| f64::from(b - b'0')).collect();
    let total: f64 = digits.iter().sum();
    Ok(digits.iter().map(|d| d / total).collect())
}

impl ProbSpec {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>, InputError> {
        match self {
            ProbSpec::Uniform => Ok(vec![1.0 / n as f64; n]),
            ProbSpec::PiDigits => pi_digit_probs(n),
            ProbSpec::Explicit(p) if p.len() == n => Ok(p.clone()),
            ProbSpec::Explicit(p) => Err(bad(format!("{} probabilities for {n} gates", p.len()))),
        }
    }

    fn from_value(v: &Value) -> Result<Self, InputError> {
        match v {
            Value::Null => Ok(ProbSpec::Uniform),
            Value::String(s) => Self::keyword(s),
            Value::Array(items) => items.iter().map(number).collect::<Result<Vec<_>, _>>().map(ProbSpec::Explicit),
            other => Err(bad(format!("probs must be a keyword or a list, got {other}"))),
        }
    }

    fn keyword(s: &str) -> Result<Self, InputError> {
        match s {
            "uniform" => Ok(ProbSpec::Uniform),
            "pi-digits" => Ok(ProbSpec::PiDigits),
            other => Err(bad(format!("unknown probability keyword {other:?}"))),
        }
    }

    /// `uniform`, `pi-digits`, or a path to a JSON list of probabilities.
    pub fn parse_arg(arg: &str) -> Result<Self, InputError> {
        Self::keyword(arg).or_else(|_| {
            let text = read(Path::new(arg))?;
            Self::from_value(&serde_json::from_str(&text)?)
        })
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Io { path: path.display().to_string(), source })
}

fn number(v: &Value) -> Result<f64, InputError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| bad(format!("bad number {n}"))),
        Value::Object(o) => {
            let part = |k: &str| o.get(k).and_then(Value::as_f64).ok_or_else(|| bad(format!("fraction needs numeric {k:?}")));
            let (num, den) = (part("num")?, part("den")?);
            if den == 0.0 {
                return Err(bad("zero denominator"));
            }
            Ok(num / den)
        }
        other => Err(bad(format!("expected a number, got {other}"))),
    }
}

/// Exact `{"num","den"}` when a small fraction reproduces `x` bit for bit, otherwise the float.
fn number_json(x: f64) -> Value {
    if let Ok(r) = rationalize(x, 1_000_000) {
        let (n, d) = (r.numer().to_string(), r.denom().to_string());
        if let (Ok(n), Ok(d)) = (n.parse::<i64>(), d.parse::<i64>()) {
            if n as f64 / d as f64 == x {
                return if d == 1 { json!(n) } else { json!({ "num": n, "den": d }) };
            }
        }
    }
    json!(x)
}

fn matrix(v: &Value) -> Result<CMat, InputError> {
    let rows = v.as_array().ok_or_else(|| bad("a unitary must be a list of rows"))?;
    let n = rows.len();
    let mut m = CMat::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == n).ok_or_else(|| bad("unitaries must be square"))?;
        for (j, z) in row.iter().enumerate() {
            let pair = z.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("entries are [re, im] pairs"))?;
            m[(i, j)] = c(number(&pair[0])?, number(&pair[1])?);
        }
    }
    if n == 0 {
        return Err(bad("empty unitary"));
    }
    Ok(m)
}

/// Parses an ensemble document; `probs` overrides the file's own weights when given.
pub fn parse_ensemble(text: &str, probs: Option<&ProbSpec>) -> Result<Ensemble, InputError> {
    let doc: Value = serde_json::from_str(text)?;
    let names: Option<Vec<String>> = match doc.get("names") {
        None | Some(Value::Null) => None,
        Some(Value::Array(a)) => Some(
            a.iter()
                .map(|n| n.as_str().map(str::to_string).ok_or_else(|| bad("names must be strings")))
                .collect::<Result<_, _>>()?,
        ),
        Some(_) => return Err(bad("names must be a list")),
    };
    let gates: Vec<UnitaryGate> = match (doc.get("unitaries"), &names) {
        (Some(Value::Array(us)), _) => us.iter().map(|u| Ok(UnitaryGate::new(matrix(u)?)?)).collect::<Result<_, InputError>>()?,
        (Some(_), _) => return Err(bad("unitaries must be a list")),
        (None, Some(ns)) => ns.iter().map(|n| named_gate(n)).collect::<Result<_, _>>()?,
        (None, None) => return Err(bad("need \"unitaries\" or \"names\"")),
    };
    if gates.is_empty() {
        return Err(bad("empty ensemble"));
    }
    if let Some(ns) = &names {
        if ns.len() != gates.len() {
            return Err(bad(format!("{} names for {} unitaries", ns.len(), gates.len())));
        }
    }
    if let Some(d) = doc.get("dim") {
        let d = d.as_u64().ok_or_else(|| bad("dim must be a positive integer"))?;
        if gates.iter().any(|g| g.dim() as u64 != d) {
            return Err(bad(format!("unitaries do not match dim {d}")));
        }
    }
    let spec = match probs {
        Some(p) => p.clone(),
        None => ProbSpec::from_value(doc.get("probs").unwrap_or(&Value::Null))?,
    };
    let weights = spec.resolve(gates.len())?;
    let e = Ensemble::new(gates, weights)?;
    Ok(match names {
        Some(ns) => e.with_names(ns),
        None => e,
    })
}

pub fn read_ensemble(path: &Path, probs: Option<&ProbSpec>) -> Result<Ensemble, InputError> {
    parse_ensemble(&read(path)?, probs)
}

/// Serializes an ensemble in the format read by [`parse_ensemble`].
pub fn ensemble_to_json(e: &Ensemble) -> Value {
    let unitaries: Vec<Value> = e
        .gates()
        .iter()
        .map(|g| {
            let m = g.matrix();
            Value::Array(
                (0..m.nrows())
                    .map(|i| Value::Array((0..m.ncols()).map(|j| json!([number_json(m[(i, j)].re), number_json(m[(i, j)].im)])).collect()))
                    .collect(),
            )
        })
        .collect();
    let mut doc = json!({
        "dim": e.dim(),
        "probs": e.probs().iter().map(|p| number_json(*p)).collect::<Vec<_>>(),
        "unitaries": unitaries,
    });
    if let Some(ns) = e.names() {
        doc["names"] = json!(ns);
    }
    doc
}
