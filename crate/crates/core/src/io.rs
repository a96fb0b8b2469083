//! JSON input and output formats.
//!
//! Every document may carry `"format": "jetspace/1"`; outputs always do.
//! Inputs are size- and magnitude-checked before typed parsing, and typed
//! parse errors name the JSON path.

use std::collections::BTreeMap;
use std::sync::Arc;

use schemars::schema::RootSchema;
use schemars::{schema_for, JsonSchema};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::harness::{ConstructiveReport, ExperimentConfig, ExperimentKind, FinitenessReport, TwoPointReport};
use crate::jets::{Jet, Multiindex, Poly, Space};
use crate::metric::{ContractionReport, MetricCtx};
use crate::moduli::Modulus;
use crate::selection::{
    Certificate, ConvexSetSpec, DistortionTree, HellyReport, HypothesisViolation, Instance, Method, TreeStrategy,
};
use crate::whitney::{FeasibilityReport, FieldNormReport, JetField};

pub const FORMAT: &str = "jetspace/1";
pub const MAX_INPUT_BYTES: usize = 16 << 20;
/// Largest accepted magnitude of any input number.
pub const MAX_ABS: f64 = 1e12;
pub const MAX_POINTS: usize = 10_000;

fn ctx(k: usize, n: usize, modulus: &Modulus) -> Result<Arc<MetricCtx>> {
    MetricCtx::build(k, n, modulus.clone())
}

fn check_count(what: &str, len: usize) -> Result<()> {
    if len > MAX_POINTS {
        return Err(Error::Domain(format!("{len} {what} exceed the limit {MAX_POINTS}")));
    }
    Ok(())
}

/// A set-valued mapping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub k: usize,
    pub n: usize,
    pub modulus: Modulus,
    pub points: Vec<Vec<f64>>,
    pub sets: Vec<ConvexSetSpec>,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        check_count("points", self.points.len())?;
        Instance::new(ctx(self.k, self.n, &self.modulus)?, self.points.clone(), self.sets.clone())
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let space = inst.ctx().space();
        Self {
            k: space.k(),
            n: space.n(),
            modulus: inst.ctx().modulus().clone(),
            points: inst.points().to_vec(),
            sets: inst.sets().to_vec(),
        }
    }
}

/// A polynomial field on a finite set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub k: usize,
    pub n: usize,
    pub modulus: Modulus,
    pub points: Vec<Vec<f64>>,
    /// Coefficients in the basis order printed by `schema`.
    pub polys: Vec<Vec<f64>>,
    /// Also check both conditions at this `λ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl FieldSpec {
    pub fn build(&self) -> Result<JetField> {
        check_count("points", self.points.len())?;
        JetField::from_coeffs(ctx(self.k, self.n, &self.modulus)?, self.points.clone(), self.polys.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct JetSpec {
    pub coeffs: Vec<f64>,
    pub base: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default = "default_links")]
    pub max_links: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
}

fn default_links() -> usize {
    4
}

fn default_restarts() -> usize {
    8
}

fn default_sweeps() -> usize {
    4
}

/// Two jets, or a chain of jets for the contraction check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MetricInput {
    pub k: usize,
    pub n: usize,
    pub modulus: Modulus,
    pub jets: Vec<JetSpec>,
    /// Chain search between the first and last jet; needs a seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSpec>,
    /// Run the chain contraction check with this `λ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction_lambda: Option<f64>,
}

impl MetricInput {
    pub fn build(&self) -> Result<(Arc<MetricCtx>, Vec<Jet>)> {
        if self.jets.len() < 2 {
            return Err(Error::Domain(format!("need at least 2 jets, got {}", self.jets.len())));
        }
        check_count("jets", self.jets.len())?;
        let c = ctx(self.k, self.n, &self.modulus)?;
        let jets = self
            .jets
            .iter()
            .map(|j| {
                c.space().check_point(&j.base)?;
                Jet::new(Poly::new(c.space().clone(), j.coeffs.clone())?, j.base.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((c, jets))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TreeInput {
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<TreeStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_budget: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HellyInput {
    /// Ambient dimension.
    pub dim: usize,
    pub sets: Vec<ConvexSetSpec>,
    /// Defaults to `dim + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub must_contain: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct MetricOutput {
    pub d_prime: f64,
    pub one_point: f64,
    pub interval_lower: f64,
    pub interval_upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heuristic_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction: Option<ContractionReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct WhitneyOutput {
    pub norms: FieldNormReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SelectOutput {
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_used: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polys: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_violation: Option<HypothesisViolation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ExperimentOutput {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finiteness: Option<FinitenessReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_point: Option<TwoPointReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constructive: Option<ConstructiveReport>,
}

/// Basis order of `P_k` on `ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct BasisOutput {
    pub k: usize,
    pub n: usize,
    pub multiindices: Vec<Multiindex>,
}

impl BasisOutput {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        let s = Space::new(k, n)?;
        Ok(Self {
            k,
            n,
            multiindices: s.multiindices().to_vec(),
        })
    }
}

/// Output envelope carrying the format tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Tagged<T> {
    pub format: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Tagged<T> {
    pub fn new(body: T) -> Self {
        Self {
            format: FORMAT.to_string(),
            body,
        }
    }
}

/// Input document: the body with an optional format tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Input<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(flatten)]
    pub body: T,
}

/// Schemas of every subcommand's input and output.
#[derive(Clone, Debug, Serialize)]
pub struct SchemaDocument {
    pub inputs: BTreeMap<&'static str, RootSchema>,
    pub outputs: BTreeMap<&'static str, RootSchema>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisOutput>,
}

pub fn schema_document(basis: Option<BasisOutput>) -> SchemaDocument {
    let inputs = BTreeMap::from([
        ("metric", schema_for!(Input<MetricInput>)),
        ("whitney", schema_for!(Input<FieldSpec>)),
        ("select", schema_for!(Input<InstanceSpec>)),
        ("tree", schema_for!(Input<TreeInput>)),
        ("helly", schema_for!(Input<HellyInput>)),
        ("experiment", schema_for!(Input<ExperimentConfig>)),
    ]);
    let outputs = BTreeMap::from([
        ("metric", schema_for!(Tagged<MetricOutput>)),
        ("whitney", schema_for!(Tagged<WhitneyOutput>)),
        ("select", schema_for!(Tagged<SelectOutput>)),
        ("tree", schema_for!(Tagged<DistortionTree>)),
        ("helly", schema_for!(Tagged<HellyReport>)),
        ("experiment", schema_for!(Tagged<ExperimentOutput>)),
        ("basis", schema_for!(Tagged<BasisOutput>)),
    ]);
    SchemaDocument { inputs, outputs, basis }
}

fn walk(v: &Value, path: &mut String, depth: usize) -> Result<()> {
    if depth > 64 {
        return Err(Error::Parse {
            path: path.clone(),
            message: "nesting deeper than 64".into(),
        });
    }
    match v {
        Value::Number(x) => {
            let f = x.as_f64().unwrap_or(f64::INFINITY);
            if f.abs() > MAX_ABS {
                return Err(Error::Parse {
                    path: path.clone(),
                    message: format!("magnitude {f} exceeds {MAX_ABS}"),
                });
            }
        }
        Value::Array(a) => {
            for (i, e) in a.iter().enumerate() {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                walk(e, path, depth + 1)?;
                path.truncate(len);
            }
        }
        Value::Object(o) => {
            for (k, e) in o {
                // seeds are integers outside the numeric range of the data
                if k == "seed" {
                    continue;
                }
                let len = path.len();
                if !path.is_empty() {
                    path.push('.');
                }
                path.push_str(k);
                walk(e, path, depth + 1)?;
                path.truncate(len);
            }
        }
        _ => {}
    }
    Ok(())
}

/// Parses an input document.
pub fn parse<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    if bytes.len() > MAX_INPUT_BYTES {
        return Err(Error::Parse {
            path: ".".into(),
            message: format!("input of {} bytes exceeds {MAX_INPUT_BYTES}", bytes.len()),
        });
    }
    let mut value: Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if let Value::Object(o) = &mut value {
        match o.remove("format") {
            None => {}
            Some(Value::String(s)) if s == FORMAT => {}
            Some(other) => {
                return Err(Error::Parse {
                    path: "format".into(),
                    message: format!("expected \"{FORMAT}\", got {other}"),
                })
            }
        }
    }
    walk(&value, &mut String::new(), 0)?;
    serde_path_to_error::deserialize(value).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Serializes an output document with the format tag.
pub fn to_json<T: Serialize>(body: &T) -> Result<String> {
    serde_json::to_string_pretty(&Tagged::new(body)).map_err(|e| Error::Domain(format!("serialization: {e}")))
}
