use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{Map, Value};

use wbl_cli::scenario::{merge_objects, scenario_from_value, ScenarioError};
use wbl_cli::{run, RunError, EXIT_INTERNAL, EXIT_VALIDATION};

/// Wigner-friend Bell, GHZ and reasoning experiments.
///
/// Flags mirror scenario keys; a flag overrides the same key from --scenario.
#[derive(Debug, Parser)]
#[command(name = "wbl", version)]
struct Cli {
    /// chsh | ghz | verify | message | lhv | optimize | reason | sample
    experiment: Option<String>,

    /// Scenario JSON file
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,

    /// Angle in radians, or a literal such as pi/4
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,

    /// Four signs, e.g. +,+,-,+ or 1,1,-1,1
    #[arg(long, allow_hyphen_values = true)]
    signs: Option<String>,

    /// Dephasing strength in [0, 1]
    #[arg(long)]
    dephase: Option<f64>,

    #[arg(long)]
    shots: Option<u64>,

    #[arg(long)]
    seed: Option<u64>,

    /// json | csv | table
    #[arg(long)]
    output: Option<String>,

    /// Unit complex phase as re,im
    #[arg(long, allow_hyphen_values = true)]
    phase: Option<String>,

    /// Omit wall time from JSON so identical scenarios give identical bytes
    #[arg(long)]
    canonical: bool,
}

fn number_or_string(token: &str) -> Value {
    let t = token.trim();
    t.parse::<f64>()
        .ok()
        .and_then(|x| serde_json::Number::from_f64(x).map(Value::Number))
        .unwrap_or_else(|| Value::String(t.to_string()))
}

fn sign_token(token: &str) -> Value {
    match token.trim() {
        "+" | "+1" | "1" => Value::from(1),
        "-" | "-1" => Value::from(-1),
        other => Value::String(other.to_string()),
    }
}

impl Cli {
    fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        if let Some(e) = &self.experiment {
            m.insert("experiment".into(), Value::from(e.as_str()));
        }
        if let Some(t) = &self.theta {
            m.insert("theta".into(), number_or_string(t));
        }
        if let Some(s) = &self.signs {
            m.insert("signs".into(), s.split(',').map(sign_token).collect());
        }
        if let Some(d) = self.dephase {
            m.insert("dephase".into(), Value::from(d));
        }
        if let Some(n) = self.shots {
            m.insert("shots".into(), Value::from(n));
        }
        if let Some(n) = self.seed {
            m.insert("seed".into(), Value::from(n));
        }
        if let Some(o) = &self.output {
            m.insert("output".into(), Value::from(o.as_str()));
        }
        if let Some(p) = &self.phase {
            m.insert("phase".into(), p.split(',').map(number_or_string).collect());
        }
        m
    }
}

fn scenario_error(e: &ScenarioError) -> ExitCode {
    eprintln!("error[{}]: {}", e.code.as_str(), e.message);
    ExitCode::from(EXIT_VALIDATION as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let base = match &cli.scenario {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error[io]: cannot read {}: {e}", path.display());
                    return ExitCode::from(EXIT_VALIDATION as u8);
                }
            };
            match serde_json::from_str::<Value>(&text) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error[malformed_json]: {e}");
                    return ExitCode::from(EXIT_VALIDATION as u8);
                }
            }
        }
        None => Value::Null,
    };
    let scenario = match merge_objects(base, cli.overrides()).and_then(|v| scenario_from_value(&v))
    {
        Ok(s) => s,
        Err(e) => return scenario_error(&e),
    };
    let report = match run(&scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match report.render(scenario.output, cli.canonical) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", RunError::Internal(e.to_string()));
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}
