//! Scenario documents: parsing, defaults, validation.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use wbl_core::qmath::TOL_CONSTRUCTION;

pub const DEFAULT_SHOTS: u64 = 10_000;

pub const KEYS: [&str; 8] = [
    "experiment",
    "theta",
    "signs",
    "dephase",
    "shots",
    "seed",
    "output",
    "phase",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Chsh,
    Ghz,
    Verify,
    Message,
    Lhv,
    Optimize,
    Reason,
    Sample,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Chsh,
        Experiment::Ghz,
        Experiment::Verify,
        Experiment::Message,
        Experiment::Lhv,
        Experiment::Optimize,
        Experiment::Reason,
        Experiment::Sample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Chsh => "chsh",
            Experiment::Ghz => "ghz",
            Experiment::Verify => "verify",
            Experiment::Message => "message",
            Experiment::Lhv => "lhv",
            Experiment::Optimize => "optimize",
            Experiment::Reason => "reason",
            Experiment::Sample => "sample",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Table,
}

/// Angle in radians, remembering the literal it was written as (e.g. `"pi/4"`).
#[derive(Debug, Clone, PartialEq)]
pub struct Angle {
    pub radians: f64,
    pub literal: Option<String>,
}

impl Angle {
    pub fn radians(radians: f64) -> Self {
        Self {
            radians,
            literal: None,
        }
    }

    /// Accepts `[-][k]pi[/n]` as well as plain numbers.
    pub fn parse_literal(s: &str) -> Option<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if let Ok(x) = compact.parse::<f64>() {
            return x.is_finite().then(|| Self::radians(x));
        }
        let (sign, rest) = match compact.strip_prefix('-') {
            Some(r) => (-1.0, r),
            None => (1.0, compact.as_str()),
        };
        let (head, denom) = match rest.split_once('/') {
            Some((h, d)) => (h, d.parse::<f64>().ok().filter(|d| *d != 0.0)?),
            None => (rest, 1.0),
        };
        let coeff = head.strip_suffix("pi")?.trim_end_matches('*');
        let coeff = if coeff.is_empty() {
            1.0
        } else {
            coeff.parse::<f64>().ok()?
        };
        let radians = sign * coeff * PI / denom;
        radians.is_finite().then(|| Self {
            radians,
            literal: Some(s.to_string()),
        })
    }
}

impl Default for Angle {
    fn default() -> Self {
        Self {
            radians: PI / 4.0,
            literal: Some("pi/4".into()),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.literal {
            Some(l) => s.serialize_str(l),
            None => s.serialize_f64(self.radians),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub experiment: Experiment,
    pub theta: Angle,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signs: Option<[i8; 4]>,
    pub dephase: f64,
    pub shots: u64,
    pub seed: u64,
    pub output: OutputFormat,
    pub phase: [f64; 2],
}

impl Scenario {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            theta: Angle::default(),
            signs: None,
            dephase: 0.0,
            shots: DEFAULT_SHOTS,
            seed: 0,
            output: OutputFormat::Json,
            phase: [1.0, 0.0],
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("scenario serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    MalformedJson,
    UnknownKey,
    MissingKey,
    OutOfRange,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::MalformedJson => "malformed_json",
            ErrorCode::UnknownKey => "unknown_key",
            ErrorCode::MissingKey => "missing_key",
            ErrorCode::OutOfRange => "out_of_range",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("[{}] {message}", code.as_str())]
pub struct ScenarioError {
    pub code: ErrorCode,
    pub key: Option<String>,
    pub message: String,
}

impl ScenarioError {
    fn malformed(message: impl Into<String>) -> Self {
        Self {
            code: ErrorCode::MalformedJson,
            key: None,
            message: message.into(),
        }
    }

    fn range(key: &str, allowed: &str, got: &Value) -> Self {
        Self {
            code: ErrorCode::OutOfRange,
            key: Some(key.into()),
            message: format!("\"{key}\" must be {allowed}; got {got}"),
        }
    }
}

/// Parses a UTF-8 JSON scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ScenarioError::malformed(e.to_string()))?;
    scenario_from_value(&value)
}

pub fn scenario_from_value(value: &Value) -> Result<Scenario, ScenarioError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ScenarioError::malformed("scenario must be a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ScenarioError {
            code: ErrorCode::UnknownKey,
            key: Some(k.clone()),
            message: format!("unknown key \"{k}\"; allowed keys: {}", KEYS.join(", ")),
        });
    }
    let experiment = match obj.get("experiment") {
        None => {
            return Err(ScenarioError {
                code: ErrorCode::MissingKey,
                key: Some("experiment".into()),
                message: "\"experiment\" is required".into(),
            })
        }
        Some(v) => v.as_str().and_then(Experiment::parse).ok_or_else(|| {
            let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
            ScenarioError::range("experiment", &format!("one of {}", names.join("|")), v)
        })?,
    };
    let mut s = Scenario::new(experiment);
    if let Some(v) = obj.get("theta") {
        s.theta = parse_theta(v)?;
    }
    if let Some(v) = obj.get("signs") {
        s.signs = parse_signs(v)?;
    }
    if let Some(v) = obj.get("dephase") {
        s.dephase = v
            .as_f64()
            .filter(|x| (0.0..=1.0).contains(x))
            .ok_or_else(|| ScenarioError::range("dephase", "a number in [0, 1]", v))?;
    }
    if let Some(v) = obj.get("shots") {
        s.shots = v
            .as_u64()
            .ok_or_else(|| ScenarioError::range("shots", "a nonnegative integer", v))?;
    }
    if let Some(v) = obj.get("seed") {
        s.seed = v
            .as_u64()
            .ok_or_else(|| ScenarioError::range("seed", "an unsigned 64-bit integer", v))?;
    }
    if let Some(v) = obj.get("output") {
        s.output = serde_json::from_value(v.clone())
            .map_err(|_| ScenarioError::range("output", "one of json|csv|table", v))?;
    }
    if let Some(v) = obj.get("phase") {
        s.phase = parse_phase(v)?;
    }
    Ok(s)
}

fn parse_theta(v: &Value) -> Result<Angle, ScenarioError> {
    let angle = match v {
        Value::Number(n) => n.as_f64().map(Angle::radians),
        Value::String(s) => Angle::parse_literal(s),
        _ => None,
    };
    angle.ok_or_else(|| {
        ScenarioError::range(
            "theta",
            "a finite angle in radians or a literal like \"pi/4\"",
            v,
        )
    })
}

fn parse_signs(v: &Value) -> Result<Option<[i8; 4]>, ScenarioError> {
    if v.is_null() {
        return Ok(None);
    }
    let err = || ScenarioError::range("signs", "a list of four entries, each +1 or -1", v);
    let list = v.as_array().filter(|a| a.len() == 4).ok_or_else(err)?;
    let mut out = [0i8; 4];
    for (slot, x) in out.iter_mut().zip(list) {
        *slot = match x.as_i64() {
            Some(1) => 1,
            Some(-1) => -1,
            _ => return Err(err()),
        };
    }
    Ok(Some(out))
}

fn parse_phase(v: &Value) -> Result<[f64; 2], ScenarioError> {
    let err = || ScenarioError::range("phase", "a unit complex number [re, im]", v);
    let list = v.as_array().filter(|a| a.len() == 2).ok_or_else(err)?;
    let re = list[0].as_f64().ok_or_else(err)?;
    let im = list[1].as_f64().ok_or_else(err)?;
    if ((re * re + im * im).sqrt() - 1.0).abs() > TOL_CONSTRUCTION {
        return Err(err());
    }
    Ok([re, im])
}

/// Applies `overrides` on top of `base` key by key, so flags win over file values.
pub fn merge_objects(base: Value, overrides: Map<String, Value>) -> Result<Value, ScenarioError> {
    let mut obj = match base {
        Value::Object(o) => o,
        Value::Null => Map::new(),
        _ => return Err(ScenarioError::malformed("scenario must be a JSON object")),
    };
    obj.extend(overrides);
    Ok(Value::Object(obj))
}
