//! Versioned report envelopes and their validation.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use schur_lab::geometry::ClassificationReport;
use schur_lab::groups::{BoundaryVerdict, CotlarReport, SubalgebraVerdict};
use schur_lab::harmonic::SquareFunctionResult;
use schur_lab::multiplier::{exponent_serde, GrowthSummary, NormGrowthRecord};

use crate::config::Command;
use crate::error::CliError;

pub const SCHEMA: &str = "schur-lab/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<R> {
    pub schema: String,
    pub command: Command,
    pub seed: u64,
    pub outcome: Outcome,
    /// Excluded from determinism comparisons.
    pub wall_ms: u64,
    pub report: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsReport {
    pub symbol_id: String,
    #[serde(with = "exponent_serde")]
    pub p: f64,
    pub monotone: bool,
    pub records: Vec<NormGrowthRecord>,
    pub summary: Option<GrowthSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquarefnReport {
    pub shape: Vec<usize>,
    #[serde(with = "exponent_serde")]
    pub p: f64,
    pub terms: usize,
    pub result: SquareFunctionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CotlarRun {
    pub group: String,
    pub result: CotlarReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubalgebraRun {
    pub algebra: String,
    pub subspace: Vec<Vec<f64>>,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: SubalgebraVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GroupcheckReport {
    Subalgebra(SubalgebraRun),
    Boundary(BoundaryVerdict),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(with = "exponent_serde")]
    pub p: f64,
    pub index: usize,
    pub fourier_lb: f64,
    pub schur_lb: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferReport {
    pub rows: Vec<TransferRow>,
    pub violations: usize,
}

pub const TRANSFER_CSV_HEADER: &str = "N,p,index,fourier_lb,schur_lb,holds";

impl TransferReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRANSFER_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                schur_lab::multiplier::format_exponent(r.p),
                r.index,
                r.fourier_lb,
                r.schur_lb,
                r.holds
            ));
        }
        out
    }
}

fn typed<R: serde::de::DeserializeOwned>(v: Value) -> Result<(), CliError> {
    serde_json::from_value::<R>(v).map(|_| ()).map_err(|e| CliError::Schema(e.to_string()))
}

/// Parse a JSON report and check it against the schema of its command.
pub fn validate_report(text: &str) -> Result<Envelope<Value>, CliError> {
    let env: Envelope<Value> = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    if env.schema != SCHEMA {
        return Err(CliError::Schema(format!("schema '{}', expected '{SCHEMA}'", env.schema)));
    }
    let body = env.report.clone();
    match env.command {
        Command::Classify => typed::<ClassificationReport>(body)?,
        Command::Norms => typed::<NormsReport>(body)?,
        Command::Squarefn => typed::<SquarefnReport>(body)?,
        Command::Cotlar => typed::<CotlarRun>(body)?,
        Command::Groupcheck => typed::<GroupcheckReport>(body)?,
        Command::Transfer => typed::<TransferReport>(body)?,
    }
    Ok(env)
}

/// Copy of a JSON report with every `wall_ms` field zeroed.
pub fn strip_wall_ms(text: &str) -> Result<String, CliError> {
    fn walk(v: &mut Value) {
        match v {
            Value::Object(map) => {
                for (k, item) in map.iter_mut() {
                    if k == "wall_ms" {
                        *item = Value::from(0);
                    } else {
                        walk(item);
                    }
                }
            }
            Value::Array(items) => items.iter_mut().for_each(walk),
            _ => {}
        }
    }
    let mut v: Value = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    walk(&mut v);
    Ok(v.to_string())
}
