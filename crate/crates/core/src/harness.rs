//! Seeded instance generation and finiteness experiments.
//!
//! Every trial draws from its own ChaCha stream `(seed, trial)`, so trials are
//! independent of scheduling and reports are reproducible bit for bit.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::InstanceSpec;
use crate::jets::{dist, Constants};
use crate::lp::LpStatus;
use crate::metric::MetricCtx;
use crate::moduli::Modulus;
use crate::selection::lp_build::{Scale, SelectionLp};
use crate::selection::{
    constructive_selection, min_lambda_on, min_lambda_selection, selection_feasible, ConstructiveOptions,
    ConvexSetSpec, HypothesisViolation, Instance,
};
use crate::whitney::{wg_lambda_star, JetField};

pub const MIN_SEPARATION: f64 = 1e-3;
pub const MAX_RESAMPLES: usize = 10_000;
/// Refuse experiments needing more subset LPs than this per trial.
pub const SUBSET_LIMIT: u128 = 1_000_000;
/// Relative slack for `λ ≤ K` comparisons.
pub const LAMBDA_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SetFamily {
    Singletons,
    Boxes,
    RandomPolytopes { facets: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

/// `K` as a number, or `"auto"`: the largest optimal `λ` over subsets of at
/// most `N` points, which makes every subset feasible by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(untagged)]
pub enum KSpec {
    Value(f64),
    Auto(Auto),
}

impl Default for KSpec {
    fn default() -> Self {
        KSpec::Auto(Auto::Auto)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Finiteness,
    TwoPoint,
    Constructive,
}

fn default_radius() -> f64 {
    0.5
}

fn default_constructive_max() -> usize {
    12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentKind,
    pub k: usize,
    pub n: usize,
    /// Affine dimension of the generated sets.
    pub ell: usize,
    pub num_points: usize,
    pub trials: usize,
    pub seed: u64,
    pub modulus: Modulus,
    pub set_family: SetFamily,
    /// Largest half-width of generated boxes.
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(rename = "K", default)]
    pub k_spec: KSpec,
    /// `γ` above which a trial counts as a counterexample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_ceiling: Option<f64>,
    #[serde(default = "default_constructive_max")]
    pub constructive_max_points: usize,
}

impl ExperimentConfig {
    pub fn new(k: usize, n: usize, ell: usize, num_points: usize, trials: usize, seed: u64, set_family: SetFamily) -> Self {
        Self {
            experiment: ExperimentKind::Finiteness,
            k,
            n,
            ell,
            num_points,
            trials,
            seed,
            modulus: Modulus::power(1.0).expect("valid exponent"),
            set_family,
            radius: default_radius(),
            k_spec: KSpec::default(),
            gamma_ceiling: None,
            constructive_max_points: default_constructive_max(),
        }
    }

    pub fn constants(&self) -> Result<Constants> {
        Constants::new(self.k, self.n)
    }

    /// `ℓ` of the generated sets: 0 for singletons.
    pub fn effective_ell(&self) -> usize {
        match self.set_family {
            SetFamily::Singletons => 0,
            _ => self.ell,
        }
    }

    /// `2^{min(ℓ+1, dim P_k)}`.
    pub fn n_used(&self) -> Result<usize> {
        let c = self.constants()?;
        c.finiteness_number(self.effective_ell())
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| Error::Domain("finiteness number overflows".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.constants()?;
        if self.ell > c.dim {
            return Err(Error::Domain(format!("ell = {} exceeds dim P_k = {}", self.ell, c.dim)));
        }
        if self.trials == 0 {
            return Err(Error::Domain("trials must be ≥ 1".into()));
        }
        if self.num_points == 0 {
            return Err(Error::Domain("num_points must be ≥ 1".into()));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(Error::Domain(format!("radius must be finite and ≥ 0, got {}", self.radius)));
        }
        if let KSpec::Value(k) = self.k_spec {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::Domain(format!("K must be finite and ≥ 0, got {k}")));
            }
        }
        if let Some(g) = self.gamma_ceiling {
            if !(g >= 1.0) {
                return Err(Error::Domain(format!("gamma_ceiling must be ≥ 1, got {g}")));
            }
        }
        if let SetFamily::RandomPolytopes { facets } = self.set_family {
            if facets > 256 {
                return Err(Error::Domain(format!("at most 256 facets, got {facets}")));
            }
        }
        Ok(())
    }

    fn validate_finiteness(&self) -> Result<usize> {
        self.validate()?;
        let n_used = self.n_used()?;
        if self.num_points < n_used {
            return Err(Error::Domain(format!(
                "num_points = {} is below N = {n_used}; every subset would be the whole set",
                self.num_points
            )));
        }
        let count = crate::selection::binomial(self.num_points, n_used);
        if count > SUBSET_LIMIT {
            return Err(Error::TooManySubsets {
                count,
                size: n_used,
                limit: SUBSET_LIMIT,
            });
        }
        Ok(n_used)
    }

    /// Default `γ` ceiling: `τ(m(m−1))·τ̃·eⁿ`, far above anything the
    /// tree construction can need.
    pub fn gamma_ceiling_or_default(&self) -> Result<f64> {
        if let Some(g) = self.gamma_ceiling {
            return Ok(g);
        }
        let c = self.constants()?;
        let m = self.num_points as f64;
        Ok(c.tau(m * (m - 1.0).max(1.0)) * c.ts * c.e_n)
    }

    fn rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut r = vec![0.0; d];
    r[i] = 1.0;
    r
}

/// Deterministic in `(seed, trial)`.
pub fn generate_instance(cfg: &ExperimentConfig, trial: usize) -> Result<Instance> {
    cfg.validate()?;
    let ctx = MetricCtx::build(cfg.k, cfg.n, cfg.modulus.clone())?;
    let (points, hidden) = generate_points_and_field(cfg, trial)?;
    let d = ctx.space().dim();
    let ell = cfg.effective_ell();
    let mut sets = Vec::with_capacity(points.len());
    let mut set_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5e75_0000_0000_0000);
    set_rng.set_stream(trial as u64);
    for h in &hidden {
        let s = match cfg.set_family {
            SetFamily::Singletons => ConvexSetSpec::singleton(h),
            SetFamily::Boxes | SetFamily::RandomPolytopes { .. } => {
                let r = set_rng.gen::<f64>() * cfg.radius;
                let mut free = sample(&mut set_rng, d, ell).into_vec();
                free.sort_unstable();
                let mut s = ConvexSetSpec::default();
                for i in 0..d {
                    if free.contains(&i) {
                        let mut neg = unit(d, i);
                        neg[i] = -1.0;
                        s.push(unit(d, i), h[i] + r);
                        s.push(neg, r - h[i]);
                    } else {
                        s.push_eq(unit(d, i), h[i]);
                    }
                }
                if let SetFamily::RandomPolytopes { facets } = cfg.set_family {
                    for _ in 0..facets {
                        let mut a = vec![0.0; d];
                        for &i in &free {
                            a[i] = set_rng.gen_range(-1.0..=1.0);
                        }
                        let norm1: f64 = a.iter().map(|v: &f64| v.abs()).sum();
                        let at: f64 = a.iter().zip(h).map(|(x, y)| x * y).sum();
                        s.push(a, at + set_rng.gen::<f64>() * r * norm1);
                    }
                }
                s.dim = Some(if r > 0.0 { ell } else { 0 });
                s
            }
        };
        sets.push(s);
    }
    Instance::new(ctx, points, sets)
}

/// Points with pairwise separation `≥ MIN_SEPARATION` and a hidden field with
/// coefficients uniform in `[−1, 1]`.
pub fn generate_points_and_field(cfg: &ExperimentConfig, trial: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let c = cfg.constants()?;
    let mut rng = cfg.rng(trial);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(cfg.num_points);
    let mut resamples = 0;
    while points.len() < cfg.num_points {
        let p: Vec<f64> = (0..cfg.n).map(|_| rng.gen::<f64>()).collect();
        if points.iter().all(|q| dist(&p, q) >= MIN_SEPARATION) {
            points.push(p);
        } else {
            resamples += 1;
            if resamples > MAX_RESAMPLES {
                return Err(Error::Generation(format!(
                    "no {} points with separation {MIN_SEPARATION} after {MAX_RESAMPLES} resamples",
                    cfg.num_points
                )));
            }
        }
    }
    let hidden = (0..cfg.num_points)
        .map(|_| (0..c.dim).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    Ok((points, hidden))
}

/// `λ* = 0 / K = 0` counts as `γ = 1`.
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num <= 1e-12 {
        1.0
    } else {
        f64::INFINITY
    }
}

fn within(lambda: f64, k: f64) -> bool {
    lambda <= k * (1.0 + LAMBDA_TOL) + 1e-12
}

/// Optimal `λ` of every subset with `2 ≤ size ≤ max_size`.
struct SubsetScan {
    lambdas: HashMap<Vec<usize>, f64>,
    top_max: f64,
}

fn scan_subsets(inst: &Instance, max_size: usize) -> Result<SubsetScan> {
    let m = inst.len();
    let top = max_size.min(m);
    let mut lambdas = HashMap::new();
    let mut top_max = 0.0f64;
    for size in 2..=top {
        crate::selection::for_each_subset(m, size, |idx| {
            let o = min_lambda_on(inst, idx, &[], None)?
                .ok_or_else(|| Error::Solver("subset LP infeasible although every set is nonempty".into()))?;
            if size == top {
                top_max = top_max.max(o.lambda);
            }
            lambdas.insert(idx.to_vec(), o.lambda);
            Ok(true)
        })?;
    }
    Ok(SubsetScan { lambdas, top_max })
}

impl SubsetScan {
    fn all_within(&self, k: f64) -> bool {
        self.lambdas.values().all(|&l| within(l, k))
    }

    /// Subsets whose optimal `λ` is smaller than that of one of their
    /// one-point-smaller subsets.
    fn monotonicity_violations(&self) -> usize {
        let mut bad = 0;
        for (sub, &l) in &self.lambdas {
            if sub.len() < 3 {
                continue;
            }
            for skip in 0..sub.len() {
                let smaller: Vec<usize> = sub.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
                if let Some(&ls) = self.lambdas.get(&smaller) {
                    if !within(ls, l) {
                        bad += 1;
                    }
                }
            }
        }
        bad
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Quantiles {
    pub count: usize,
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p90: f64,
    pub max: f64,
    pub mean: f64,
}

impl Quantiles {
    /// Nearest-rank quantiles of the finite values; `None` if there are none.
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Some(Self {
            count: v.len(),
            min: v[0],
            p25: q(0.25),
            median: q(0.5),
            p75: q(0.75),
            p90: q(0.9),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct TrialRecord {
    pub trial: usize,
    #[serde(rename = "N_used")]
    pub n_used: usize,
    pub subsets_checked: usize,
    pub subsets_feasible: bool,
    #[serde(rename = "K")]
    pub k_bound: f64,
    pub lambda_global: f64,
    /// `λ*_global / K`, present when every subset was feasible.
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Counterexample {
    pub trial: usize,
    #[serde(rename = "K")]
    pub k_bound: f64,
    pub lambda_global: f64,
    pub gamma: f64,
    pub gamma_ceiling: f64,
    pub instance: InstanceSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct FinitenessReport {
    #[serde(rename = "N_used")]
    pub n_used: usize,
    pub trials_run: usize,
    pub all_subsets_feasible_count: usize,
    /// Trials with every subset feasible and `γ ≤ gamma_ceiling`.
    pub global_feasible_count: usize,
    /// Trials with every subset feasible and the whole set feasible at `K`.
    pub feasible_at_k_count: usize,
    pub gamma_max: Option<f64>,
    pub gamma_distribution: Option<Quantiles>,
    pub gamma_ceiling: f64,
    pub monotonicity_violations: usize,
    /// Floating-point alarms that the exact recheck found feasible.
    pub false_alarms: usize,
    pub counterexamples: Vec<Counterexample>,
    pub trials: Vec<TrialRecord>,
}

struct TrialOutcome {
    record: TrialRecord,
    monotonicity_violations: usize,
    alarm: Option<bool>,
    instance: Instance,
}

/// Exact-rational feasibility of the whole instance at `λ`, reading the
/// floating-point data as exact binary values.
pub fn exact_feasible(inst: &Instance, lambda: f64) -> Result<bool> {
    let nodes: Vec<usize> = (0..inst.len()).collect();
    let mut b = SelectionLp::new(inst, &nodes);
    b.add_all_pairs(Scale::Fixed(lambda));
    Ok(b.lp.solve_exact()?.status == LpStatus::Optimal)
}

fn run_finiteness_trial(cfg: &ExperimentConfig, n_used: usize, ceiling: f64, trial: usize) -> Result<TrialOutcome> {
    let inst = generate_instance(cfg, trial)?;
    let scan = scan_subsets(&inst, n_used)?;
    let k = match cfg.k_spec {
        KSpec::Value(k) => k,
        KSpec::Auto(_) => scan.top_max,
    };
    let feasible = scan.all_within(k);
    let (lambda_global, _) = min_lambda_selection(&inst)?;
    let gamma = feasible.then(|| ratio(lambda_global, k));
    let alarm = match gamma {
        Some(g) if g > ceiling => Some(!exact_feasible(&inst, ceiling * k)?),
        _ => None,
    };
    Ok(TrialOutcome {
        record: TrialRecord {
            trial,
            n_used,
            subsets_checked: scan.lambdas.len(),
            subsets_feasible: feasible,
            k_bound: k,
            lambda_global,
            gamma,
        },
        monotonicity_violations: scan.monotonicity_violations(),
        alarm,
        instance: inst,
    })
}

/// For each trial: optimal `λ` on every subset of at most `N` points, then
/// `γ = λ*_global / K` when all of them are `≤ K`.
pub fn finiteness_experiment(cfg: &ExperimentConfig) -> Result<FinitenessReport> {
    let n_used = cfg.validate_finiteness()?;
    let ceiling = cfg.gamma_ceiling_or_default()?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_finiteness_trial(cfg, n_used, ceiling, t))
        .collect::<Result<Vec<_>>>()?;

    let gammas: Vec<f64> = outcomes.iter().filter_map(|o| o.record.gamma).collect();
    let mut counterexamples = Vec::new();
    let mut false_alarms = 0;
    for o in &outcomes {
        match o.alarm {
            Some(true) => counterexamples.push(Counterexample {
                trial: o.record.trial,
                k_bound: o.record.k_bound,
                lambda_global: o.record.lambda_global,
                gamma: o.record.gamma.unwrap_or(f64::INFINITY),
                gamma_ceiling: ceiling,
                instance: InstanceSpec::from_instance(&o.instance),
            }),
            Some(false) => false_alarms += 1,
            None => {}
        }
    }
    let all_feasible = outcomes.iter().filter(|o| o.record.subsets_feasible).count();
    Ok(FinitenessReport {
        n_used,
        trials_run: outcomes.len(),
        all_subsets_feasible_count: all_feasible,
        global_feasible_count: all_feasible - counterexamples.len(),
        feasible_at_k_count: outcomes
            .iter()
            .filter(|o| o.record.subsets_feasible && within(o.record.lambda_global, o.record.k_bound))
            .count(),
        gamma_max: gammas.iter().copied().reduce(f64::max),
        gamma_distribution: Quantiles::of(&gammas),
        gamma_ceiling: ceiling,
        monotonicity_violations: outcomes.iter().map(|o| o.monotonicity_violations).sum(),
        false_alarms,
        counterexamples,
        trials: outcomes.into_iter().map(|o| o.record).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct TwoPointTrial {
    pub trial: usize,
    /// Largest optimal `λ` over pairs.
    pub pair_lambda_max: f64,
    pub global_lambda: f64,
    /// `wg_lambda_star` of the hidden field.
    pub hidden_lambda: f64,
    pub feasible_at_pair_max: bool,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct TwoPointReport {
    pub trials_run: usize,
    pub agreements: usize,
    pub violations: usize,
    pub trials: Vec<TwoPointTrial>,
}

/// For singleton families: feasibility on every pair at `λ` implies global
/// feasibility at `λ`.
pub fn two_point_finiteness_check(cfg: &ExperimentConfig) -> Result<TwoPointReport> {
    cfg.validate()?;
    if cfg.set_family != SetFamily::Singletons {
        return Err(Error::Domain("the two-point check needs the singletons family".into()));
    }
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let inst = generate_instance(cfg, trial)?;
            let scan = scan_subsets(&inst, 2)?;
            let pair_max = scan.top_max;
            let (global, _) = min_lambda_selection(&inst)?;
            let hidden = JetField::from_coeffs(
                inst.ctx().clone(),
                inst.points().to_vec(),
                inst.sets().iter().map(|s| s.eq.as_ref().expect("singleton").b.clone()).collect(),
            )?;
            let hidden_lambda = wg_lambda_star(&hidden).value;
            let at = pair_max * (1.0 + LAMBDA_TOL) + 1e-12;
            let feasible_at_pair_max = selection_feasible(&inst, at)?.is_some();
            let agree = feasible_at_pair_max && (global - pair_max).abs() <= LAMBDA_TOL * pair_max.max(1.0);
            Ok(TwoPointTrial {
                trial,
                pair_lambda_max: pair_max,
                global_lambda: global,
                hidden_lambda,
                feasible_at_pair_max,
                agree,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let agreements = trials.iter().filter(|t| t.agree).count();
    Ok(TwoPointReport {
        trials_run: trials.len(),
        agreements,
        violations: trials.len() - agreements,
        trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct ConstructiveTrial {
    pub trial: usize,
    #[serde(rename = "K")]
    pub k_bound: f64,
    pub lambda_optimal: f64,
    pub lambda_constructive: Option<f64>,
    /// Constructive over optimal `λ`.
    pub ratio: Option<f64>,
    pub eta_observed: Option<f64>,
    /// `τ(m·η)·eⁿ`.
    pub bound_factor: Option<f64>,
    pub bound_ok: bool,
    pub edge_bound_ok: bool,
    pub membership_ok: bool,
    pub max_membership_violation: Option<f64>,
    pub max_mu: Option<f64>,
    pub steps: usize,
    pub hypothesis_violation: Option<HypothesisViolation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct ConstructiveReport {
    pub trials_run: usize,
    /// Trials where the construction returned a field passing every check.
    pub all_ok: bool,
    pub ratio_max: Option<f64>,
    pub ratio_distribution: Option<Quantiles>,
    pub hypothesis_violations: usize,
    pub trials: Vec<ConstructiveTrial>,
}

/// Runs the constructive and the optimal selection on each trial.
pub fn constructive_vs_optimal(cfg: &ExperimentConfig) -> Result<ConstructiveReport> {
    cfg.validate()?;
    if cfg.num_points > cfg.constructive_max_points {
        return Err(Error::Domain(format!(
            "num_points = {} exceeds constructive_max_points = {}",
            cfg.num_points, cfg.constructive_max_points
        )));
    }
    let n_used = cfg.n_used()?;
    let c = cfg.constants()?;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let inst = generate_instance(cfg, trial)?;
            let k = match cfg.k_spec {
                KSpec::Value(k) => k,
                KSpec::Auto(_) => scan_subsets(&inst, n_used)?.top_max,
            };
            let (opt, _) = min_lambda_selection(&inst)?;
            let mut t = ConstructiveTrial {
                trial,
                k_bound: k,
                lambda_optimal: opt,
                lambda_constructive: None,
                ratio: None,
                eta_observed: None,
                bound_factor: None,
                bound_ok: false,
                edge_bound_ok: false,
                membership_ok: false,
                max_membership_violation: None,
                max_mu: None,
                steps: 0,
                hypothesis_violation: None,
            };
            match constructive_selection(&inst, k, ConstructiveOptions::default()) {
                Ok(r) => {
                    let cert = r.certificate.constructive.as_ref().expect("constructive certificate");
                    t.lambda_constructive = Some(r.certificate.field_lambda);
                    t.ratio = Some(ratio(r.certificate.field_lambda, opt));
                    t.eta_observed = Some(cert.eta_observed);
                    t.bound_factor = Some(c.tau(inst.len() as f64 * cert.eta_observed) * c.e_n);
                    t.bound_ok = cert.bound_ok;
                    t.edge_bound_ok = cert.edge_bound_ok;
                    t.membership_ok = r.certificate.membership_ok;
                    t.max_membership_violation = Some(r.certificate.max_membership_violation);
                    t.max_mu = Some(cert.max_mu);
                    t.steps = cert.steps.len();
                }
                Err(Error::Hypothesis(v)) => t.hypothesis_violation = Some(*v),
                Err(e) => return Err(e),
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = trials.iter().filter_map(|t| t.ratio).collect();
    Ok(ConstructiveReport {
        trials_run: trials.len(),
        all_ok: trials.iter().all(|t| t.bound_ok && t.membership_ok),
        ratio_max: ratios.iter().copied().reduce(f64::max),
        ratio_distribution: Quantiles::of(&ratios),
        hypothesis_violations: trials.iter().filter(|t| t.hypothesis_violation.is_some()).count(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = ExperimentConfig::new(1, 1, 1, 6, 1, 7, SetFamily::Boxes);
        let a = InstanceSpec::from_instance(&generate_instance(&cfg, 3).unwrap());
        let b = InstanceSpec::from_instance(&generate_instance(&cfg, 3).unwrap());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = InstanceSpec::from_instance(&generate_instance(&cfg, 4).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn zero_radius_boxes_are_singletons() {
        let mut cfg = ExperimentConfig::new(1, 1, 1, 5, 1, 11, SetFamily::Boxes);
        cfg.radius = 0.0;
        let inst = generate_instance(&cfg, 0).unwrap();
        let (pts, hidden) = generate_points_and_field(&cfg, 0).unwrap();
        assert_eq!(inst.points(), &pts[..]);
        let (l, r) = min_lambda_selection(&inst).unwrap();
        let coeffs: Vec<Vec<f64>> = r.field.polys().iter().map(|p| p.coeffs().to_vec()).collect();
        for (c, h) in coeffs.iter().zip(&hidden) {
            for (x, y) in c.iter().zip(h) {
                assert!((x - y).abs() < 1e-8);
            }
        }
        let field = JetField::from_coeffs(inst.ctx().clone(), pts, hidden).unwrap();
        assert!((l - wg_lambda_star(&field).value).abs() <= 1e-7 * l.max(1.0));
    }

    #[test]
    fn singleton_gamma_is_one() {
        let cfg = ExperimentConfig::new(1, 1, 0, 4, 5, 2, SetFamily::Singletons);
        let r = finiteness_experiment(&cfg).unwrap();
        assert_eq!(r.n_used, 2);
        assert_eq!(r.all_subsets_feasible_count, 5);
        for t in &r.trials {
            assert!((t.gamma.unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(r.counterexamples.is_empty());
    }

    #[test]
    fn boxes_sweep_small() {
        let cfg = ExperimentConfig::new(1, 1, 1, 5, 4, 5, SetFamily::Boxes);
        let r = finiteness_experiment(&cfg).unwrap();
        assert_eq!(r.n_used, 4);
        assert!(r.counterexamples.is_empty());
        assert_eq!(r.monotonicity_violations, 0);
        assert!(r.gamma_max.unwrap().is_finite());
        assert_eq!(r, finiteness_experiment(&cfg).unwrap());
    }

    #[test]
    fn guard_and_sizing() {
        let cfg = ExperimentConfig::new(1, 1, 1, 3, 1, 0, SetFamily::Boxes);
        assert!(matches!(finiteness_experiment(&cfg), Err(Error::Domain(_))));
        // ℓ = dim P_k = 6 for k = 2, n = 2 gives N = 64
        let cfg = ExperimentConfig::new(2, 2, 6, 100, 1, 0, SetFamily::Boxes);
        assert!(matches!(finiteness_experiment(&cfg), Err(Error::TooManySubsets { .. })));
    }

    #[test]
    fn two_point_agreement() {
        let cfg = ExperimentConfig::new(2, 1, 0, 5, 6, 9, SetFamily::Singletons);
        let r = two_point_finiteness_check(&cfg).unwrap();
        assert_eq!(r.violations, 0);
        for t in &r.trials {
            assert!((t.global_lambda - t.hidden_lambda).abs() <= 1e-7 * t.hidden_lambda.max(1.0));
        }
    }

    #[test]
    fn constructive_comparison() {
        let cfg = ExperimentConfig::new(1, 1, 1, 6, 3, 1, SetFamily::Boxes);
        let r = constructive_vs_optimal(&cfg).unwrap();
        assert!(r.all_ok);
        assert!(r.ratio_max.unwrap() >= 1.0 - 1e-7);
    }

    #[test]
    fn quantiles() {
        let q = Quantiles::of(&[3.0, 1.0, 2.0, 4.0, f64::INFINITY]).unwrap();
        assert_eq!((q.count, q.min, q.median, q.max), (4, 1.0, 2.0, 4.0));
        assert!(Quantiles::of(&[]).is_none());
    }
}
