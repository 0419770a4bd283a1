//! Report assembly and the JSON, CSV and table emitters.

use serde::Serialize;
use serde_json::{json, Value};

use wbl_core::exec::Execution;
use wbl_core::experiments::CorrelatorTable;
use wbl_core::qmath::{TOL_CONSTRUCTION, TOL_END_TO_END, TOL_SPECTRAL};

use crate::scenario::{OutputFormat, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub package: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub seed: u64,
    pub rng: &'static str,
    pub parallel: bool,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub construction: f64,
    pub spectral: f64,
    pub end_to_end: f64,
}

impl Provenance {
    pub fn new(seed: u64, exec: Execution) -> Self {
        Self {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: wbl_core::VERSION,
            seed,
            rng: "ChaCha8, one stream per shot",
            parallel: exec.is_parallel(),
            tolerances: Tolerances {
                construction: TOL_CONSTRUCTION,
                spectral: TOL_SPECTRAL,
                end_to_end: TOL_END_TO_END,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: Scenario,
    pub results: Value,
    pub provenance: Provenance,
    pub wall_time_s: f64,
    /// Flat correlator table, when the experiment produces one.
    pub table: Option<CorrelatorTable>,
}

impl Report {
    /// Report without wall time; identical scenarios give identical bytes.
    pub fn canonical_value(&self) -> Value {
        json!({
            "scenario": self.scenario.to_json(),
            "results": self.results,
            "provenance": self.provenance,
        })
    }

    pub fn to_value(&self) -> Value {
        let mut v = self.canonical_value();
        v["wall_time_s"] = Value::from(self.wall_time_s);
        v
    }

    pub fn to_json(&self, canonical: bool) -> String {
        let v = if canonical {
            self.canonical_value()
        } else {
            self.to_value()
        };
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn render(&self, format: OutputFormat, canonical: bool) -> Result<String, csv::Error> {
        match format {
            OutputFormat::Json => Ok(self.to_json(canonical) + "\n"),
            OutputFormat::Csv => match &self.table {
                Some(t) => correlator_csv(t),
                None => flat_csv(&self.results),
            },
            OutputFormat::Table => Ok(self.table_text()),
        }
    }

    pub fn table_text(&self) -> String {
        let mut out = format!("experiment: {}\n", self.scenario.experiment);
        if let Some(t) = &self.table {
            out.push_str(&format!(
                "{:<8} {:<8} {:>22} {:>22} {:>8} {:>8}\n",
                "A", "B", "value", "stderr", "mode", "shots"
            ));
            for c in t.iter() {
                out.push_str(&format!(
                    "{:<8} {:<8} {:>22} {:>22} {:>8} {:>8}\n",
                    c.setting_a, c.setting_b, c.value, c.stderr, c.mode, c.shots
                ));
            }
        }
        for (k, v) in flatten(&self.results) {
            if !k.starts_with("correlators") {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

/// Columns `setting_a, setting_b, value, stderr, mode, shots`.
pub fn correlator_csv(table: &CorrelatorTable) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in table.iter() {
        w.serialize(c)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// `key,value` rows of the flattened results.
pub fn flat_csv(results: &Value) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"])?;
    for (k, v) in flatten(results) {
        w.write_record([k, v])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Leaf paths like `a.b[2]` with their scalar text.
pub fn flatten(v: &Value) -> Vec<(String, String)> {
    fn walk(prefix: String, v: &Value, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(p, x, out);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(format!("{prefix}[{i}]"), x, out);
                }
            }
            Value::String(s) => out.push((prefix, s.clone())),
            other => out.push((prefix, other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk(String::new(), v, &mut out);
    out
}
