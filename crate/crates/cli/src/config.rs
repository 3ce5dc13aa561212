//! Experiment configuration files.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use schur_lab::groups::GroupElement;
use schur_lab::symbols::SymbolJson;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Classify,
    Norms,
    Squarefn,
    Cotlar,
    Groupcheck,
    Transfer,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Norms => "norms",
            Command::Squarefn => "squarefn",
            Command::Cotlar => "cotlar",
            Command::Groupcheck => "groupcheck",
            Command::Transfer => "transfer",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Pass,
    Fail,
}

/// Exponent in `[1, inf]`, written as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl FromStr for Exponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" => f64::INFINITY,
            t => match t.split_once('/') {
                Some((a, b)) => {
                    let a: f64 = a.trim().parse().map_err(|_| format!("bad exponent '{s}'"))?;
                    let b: f64 = b.trim().parse().map_err(|_| format!("bad exponent '{s}'"))?;
                    a / b
                }
                None => t.parse().map_err(|_| format!("bad exponent '{s}'"))?,
            },
        };
        if v.is_nan() || v < 1.0 {
            return Err(format!("exponent {s} is outside [1, inf]"));
        }
        Ok(Exponent(v))
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Num(v) => v.to_string(),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

/// A boundary point hint for `classify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointJson {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// `symbol` is a symbol object for the product-chart commands and a field
/// name or expression for `groupcheck`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolPayload {
    Field(String),
    Spec(SymbolJson),
}

/// One term of a square-function test: a trigonometric polynomial and a
/// direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareTerm {
    pub direction: Vec<f64>,
    /// `[frequency, [re, im]]` pairs.
    pub modes: Vec<(Vec<i64>, [f64; 2])>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolPayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<PointJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
    /// Exponents for `transfer`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ps: Option<Vec<Exponent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ascent_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<GroupElement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Grid shape for `squarefn`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<SquareTerm>>,
    /// Number of seeded random terms when `terms` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    /// Explicit symbol on `Z_N` for `transfer`, as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn symbol_spec(&self) -> Result<SymbolJson, CliError> {
        match &self.symbol {
            Some(SymbolPayload::Spec(s)) => Ok(s.clone()),
            Some(SymbolPayload::Field(_)) => Err(CliError::ConfigInvalid(
                "'symbol' must be a symbol object for this command".into(),
            )),
            None => Err(CliError::ConfigInvalid("missing 'symbol'".into())),
        }
    }

    pub fn exponent(&self) -> Result<f64, CliError> {
        self.p
            .map(|e| e.0)
            .ok_or_else(|| CliError::ConfigInvalid("missing 'p'".into()))
    }
}
