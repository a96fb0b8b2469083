//! Lipschitz selection for set-valued mappings `x ↦ G(x)` on finite sets,
//! where each `G(x)` is a polytope of polynomials.
//!
//! Every pairwise Whitney–Glaeser constraint is linear in the coefficient
//! vectors once `λ` is fixed, and `λ` itself enters linearly, so feasibility
//! and the optimal `λ` are single LP solves.

mod constructive;
mod convex;
mod helly;
pub mod lp_build;
mod tree;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use constructive::{
    bounded_constructive_selection, constructive_selection, ConstructiveCertificate, ConstructiveOptions, HellyStep,
};
pub use convex::{rank, ConvexSetSpec, Equalities};
pub use helly::{helly_check, helly_check_containing, HellyReport};
pub(crate) use constructive::binomial_u128 as binomial;
pub(crate) use helly::for_each_subset;
pub use tree::{build_tree, ceil_log2, DistortionTree, TreeOptions, TreeStrategy, EXHAUSTIVE_MAX_POINTS};

use crate::error::{Error, Result};
use crate::lp::LpStatus;
use crate::metric::MetricCtx;
use crate::tol::FEAS_TOL;
use crate::whitney::{check_distinct, wg_lambda_star, wg_sup_part, JetField};
use lp_build::{Scale, SelectionLp};

/// A set-valued mapping on a finite point set.
#[derive(Clone, Debug)]
pub struct Instance {
    pub(crate) ctx: Arc<MetricCtx>,
    pub(crate) points: Vec<Vec<f64>>,
    pub(crate) sets: Vec<ConvexSetSpec>,
    dims: Vec<usize>,
    ell: usize,
}

impl Instance {
    /// Validates shapes, distinctness, nonemptiness of every set and declared
    /// dimensions.
    pub fn new(ctx: Arc<MetricCtx>, points: Vec<Vec<f64>>, sets: Vec<ConvexSetSpec>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("an instance needs at least one point".into()));
        }
        if points.len() != sets.len() {
            return Err(Error::Domain(format!("{} points but {} sets", points.len(), sets.len())));
        }
        for x in &points {
            ctx.space().check_point(x)?;
        }
        check_distinct(&points)?;
        let d = ctx.space().dim();
        let dims = sets
            .iter()
            .enumerate()
            .map(|(i, s)| s.validate(d, i))
            .collect::<Result<Vec<_>>>()?;
        let ell = dims.iter().copied().max().unwrap_or(0);
        Ok(Self {
            ctx,
            points,
            sets,
            dims,
            ell,
        })
    }

    pub fn ctx(&self) -> &Arc<MetricCtx> {
        &self.ctx
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn sets(&self) -> &[ConvexSetSpec] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `dim P_k`.
    pub fn dim(&self) -> usize {
        self.ctx.space().dim()
    }

    /// Dimension used for each set (declared, or computed when undeclared).
    pub fn set_dims(&self) -> &[usize] {
        &self.dims
    }

    /// `ℓ = max_x dim G(x)`.
    pub fn ell(&self) -> usize {
        self.ell
    }

    /// The instance on a subset of points, in the given order.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        Self {
            ctx: self.ctx.clone(),
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            sets: idx.iter().map(|&i| self.sets[i].clone()).collect(),
            dims: idx.iter().map(|&i| self.dims[i]).collect(),
            ell: idx.iter().map(|&i| self.dims[i]).max().unwrap_or(0),
        }
    }

    /// The same points with each `G(x)` replaced by the given set. Shapes
    /// are checked; nonemptiness is not.
    pub fn with_sets(&self, sets: Vec<ConvexSetSpec>) -> Result<Self> {
        let d = self.dim();
        for (i, s) in sets.iter().enumerate() {
            s.check_shape(d, i)?;
        }
        Ok(Self { sets, ..self.clone() })
    }

    /// Largest violation of `c_x ∈ G(x)` over all points.
    pub fn membership_violation(&self, coeffs: &[Vec<f64>]) -> f64 {
        self.sets
            .iter()
            .zip(coeffs)
            .map(|(s, c)| s.violation(c))
            .fold(0.0, f64::max)
    }

    pub(crate) fn field(&self, coeffs: Vec<Vec<f64>>) -> Result<JetField> {
        JetField::from_coeffs(self.ctx.clone(), self.points.clone(), coeffs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LpExact,
    Constructive,
}

/// Slack summary of a returned selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Certificate {
    /// Largest violation of any membership constraint.
    pub max_membership_violation: f64,
    pub membership_ok: bool,
    /// `wg_lambda_star` of the returned field.
    pub field_lambda: f64,
    /// Pointwise sup part of the returned field.
    pub field_sup_part: f64,
    pub lp_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constructive: Option<ConstructiveCertificate>,
}

#[derive(Clone, Debug)]
pub struct SelectionResult {
    pub field: JetField,
    pub lambda_used: f64,
    pub method: Method,
    pub certificate: Certificate,
}

impl SelectionResult {
    pub(crate) fn assemble(
        inst: &Instance,
        coeffs: Vec<Vec<f64>>,
        lambda_used: f64,
        method: Method,
        lp_iterations: usize,
    ) -> Result<Self> {
        let max_membership_violation = inst.membership_violation(&coeffs);
        let field = inst.field(coeffs)?;
        Ok(Self {
            certificate: Certificate {
                max_membership_violation,
                membership_ok: max_membership_violation <= FEAS_TOL,
                field_lambda: wg_lambda_star(&field).value,
                field_sup_part: wg_sup_part(&field),
                lp_iterations,
                constructive: None,
            },
            field,
            lambda_used,
            method,
        })
    }
}

/// Subset hypothesis failure found by the constructive algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct HypothesisViolation {
    /// Point indices of a subset with no selection of norm `≤ K`.
    pub subset: Vec<usize>,
    pub subset_lambda_star: f64,
    #[serde(rename = "K")]
    pub k_bound: f64,
    /// Joint LP scale that triggered the search, if any.
    pub helly_mu: Option<f64>,
}

impl fmt::Display for HypothesisViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "subset {:?} needs λ = {} > K = {}",
            self.subset, self.subset_lambda_star, self.k_bound
        )
    }
}

/// Outcome of an optimal-`λ` solve on a subset.
#[derive(Clone, Debug)]
pub(crate) struct SubsetOptimum {
    pub lambda: f64,
    pub coeffs: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// Minimal `λ` over the subset `nodes` with optional pinned polynomials and
/// an optional pointwise bound.
pub(crate) fn min_lambda_on(
    inst: &Instance,
    nodes: &[usize],
    pins: &[(usize, Vec<f64>)],
    sup_bound: Option<f64>,
) -> Result<Option<SubsetOptimum>> {
    let mut b = SelectionLp::new(inst, nodes);
    let lam = b.add_scale_var(1.0);
    b.add_all_pairs(Scale::Var { var: lam, factor: 1.0 });
    if let Some(k) = sup_bound {
        b.add_sup_bound(k);
    }
    for (g, c) in pins {
        if let Some(l) = nodes.iter().position(|n| n == g) {
            b.pin(l, c);
        }
    }
    let s = b.solve()?;
    match s.status {
        LpStatus::Optimal => Ok(Some(SubsetOptimum {
            lambda: s.x[lam],
            coeffs: b.coeffs(&s.x),
            iterations: s.iterations,
        })),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Solver("minimizing λ ≥ 0 reported unbounded".into())),
    }
}

/// One LP: is there a selection with `(dp)` at `λ`? Returns the witness field.
pub fn selection_feasible(inst: &Instance, lambda: f64) -> Result<Option<SelectionResult>> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("λ must be ≥ 0, got {lambda}")));
    }
    let nodes: Vec<usize> = (0..inst.len()).collect();
    let mut b = SelectionLp::new(inst, &nodes);
    b.add_all_pairs(Scale::Fixed(lambda));
    let s = b.solve()?;
    match s.status {
        LpStatus::Optimal => Ok(Some(SelectionResult::assemble(
            inst,
            b.coeffs(&s.x),
            lambda,
            Method::LpExact,
            s.iterations,
        )?)),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Solver("feasibility LP reported unbounded".into())),
    }
}

/// The smallest `λ` admitting a selection, with a selection attaining it.
pub fn min_lambda_selection(inst: &Instance) -> Result<(f64, SelectionResult)> {
    let nodes: Vec<usize> = (0..inst.len()).collect();
    let opt = min_lambda_on(inst, &nodes, &[], None)?.ok_or_else(|| {
        Error::Solver("selection LP infeasible although every set is nonempty".into())
    })?;
    let r = SelectionResult::assemble(inst, opt.coeffs, opt.lambda, Method::LpExact, opt.iterations)?;
    Ok((opt.lambda, r))
}
