//! Constructive selection by induction over a distortion tree.
//!
//! Small sets are solved directly. Otherwise a tree is built, a vertex `x₀` of
//! degree `≥ ℓ_G + 1` is chosen, and one LP over all points asks for
//! polynomials satisfying the pairwise condition along every tree edge: at
//! scale `τ̃K` on edges at `x₀` and `eⁿK` inside each branch, both multiplied
//! by a variable `μ` that is minimized. `μ ≤ 1` is the nonemptiness of
//! `G(x₀) ∩ ⋂U(y)`. The polynomials at `x₀` and at its neighbors are then
//! fixed and each branch is solved recursively with its root pinned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::LpStatus;
use crate::whitney::wg_lambda_star;

use super::helly::for_each_subset;
use super::lp_build::{Scale, SelectionLp};
use super::tree::{build_tree, DistortionTree, TreeOptions};
use super::{min_lambda_on, ConvexSetSpec, HypothesisViolation, Instance, Method, SelectionResult};

/// Relative slack when comparing LP optima with `K`.
const K_SLACK: f64 = 1e-9;
/// Limit on subsets scanned when extracting a counterexample.
const EXTRACT_LIMIT: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, Default)]
pub struct ConstructiveOptions {
    /// Required tree degree; defaults to `ℓ_G + 1`.
    pub tree_degree: Option<usize>,
    pub tree: TreeOptions,
}

/// One inductive step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct HellyStep {
    pub size: usize,
    pub x0: usize,
    pub neighbors: Vec<usize>,
    /// Optimal edge scale of the joint LP; `≤ 1` certifies the step.
    pub mu: f64,
    /// Optimal scale on the edges at `x₀`, in units of `K`.
    pub nu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct ConstructiveCertificate {
    #[serde(rename = "K")]
    pub k_bound: f64,
    pub ell_g: usize,
    /// `2^{ℓ_G}`: sets up to this size are solved directly.
    pub base_size: usize,
    pub tree: Option<DistortionTree>,
    pub eta_observed: f64,
    pub steps: Vec<HellyStep>,
    pub base_cases: usize,
    /// Largest `μ` over all steps; above 1 means the subtree bounds needed
    /// more than `eⁿK` although no subset hypothesis failed.
    pub max_mu: f64,
    /// `τ(m·η)·K·eⁿ`.
    pub bound: f64,
    pub bound_ok: bool,
    /// Largest pairwise ratio along top-level tree edges.
    pub edge_lambda_max: f64,
    /// `τ(m·η)·eⁿ·edge_lambda_max`, valid by the chain estimate.
    pub edge_bound: f64,
    pub edge_bound_ok: bool,
}

struct Run<'a> {
    inst: &'a Instance,
    k: f64,
    cap: usize,
    degree: usize,
    tree_opts: TreeOptions,
    coeffs: Vec<Option<Vec<f64>>>,
    steps: Vec<HellyStep>,
    top_tree: Option<DistortionTree>,
    base_cases: usize,
    iterations: usize,
}

fn exceeds(v: f64, k: f64) -> bool {
    v > k * (1.0 + K_SLACK) + 1e-12
}

impl Run<'_> {
    fn assign(&mut self, nodes: &[usize], coeffs: Vec<Vec<f64>>, pins: &[(usize, Vec<f64>)]) {
        for (&g, c) in nodes.iter().zip(coeffs) {
            let v = pins.iter().find(|(p, _)| *p == g).map_or(c, |(_, pc)| pc.clone());
            self.coeffs[g] = Some(v);
        }
    }

    fn solve(&mut self, nodes: Vec<usize>, pins: Vec<(usize, Vec<f64>)>) -> Result<()> {
        let top = pins.is_empty();
        if nodes.len() == 1 && !top {
            self.assign(&nodes, vec![pins[0].1.clone()], &pins);
            return Ok(());
        }
        if nodes.len() <= self.cap {
            let opt = min_lambda_on(self.inst, &nodes, &pins, None)?
                .ok_or_else(|| Error::Solver("pinned base LP infeasible".into()))?;
            if top && exceeds(opt.lambda, self.k) {
                return Err(self.violation(nodes, opt.lambda, None));
            }
            self.iterations += opt.iterations;
            self.base_cases += 1;
            self.assign(&nodes, opt.coeffs, &pins);
            return Ok(());
        }

        let pts: Vec<Vec<f64>> = nodes.iter().map(|&g| self.inst.points[g].clone()).collect();
        let m = nodes.len();
        let tree = build_tree(&pts, Some(self.degree.min(m - 1)), self.tree_opts)?;
        let deg = tree.degrees(m);
        let x0 = (0..m)
            .filter(|&v| deg[v] >= tree.required_degree)
            .min_by_key(|&v| (tree.branches(m, v).iter().map(Vec::len).max().unwrap_or(0), v))
            .ok_or_else(|| Error::Solver("tree has no vertex of the required degree".into()))?;
        let branches = tree.branches(m, x0);
        if top && self.top_tree.is_none() {
            self.top_tree = Some(relabel(&tree, &nodes));
        }
        let c = *self.inst.ctx.constants();
        let on_x0 = |&(a, b): &(usize, usize)| a == x0 || b == x0;

        // the joint LP with every tree edge scaled by μ
        let mut lp1 = SelectionLp::new(self.inst, &nodes);
        let mu = lp1.add_scale_var(1.0);
        for e in &tree.edges {
            let factor = if on_x0(e) { c.ts * self.k } else { c.e_n * self.k };
            lp1.add_pair(e.0, e.1, Scale::Var { var: mu, factor });
        }
        pin_all(&mut lp1, &nodes, &pins);
        let s1 = lp1.solve()?;
        if s1.status != LpStatus::Optimal {
            return Err(Error::Solver(format!("joint tree LP: {:?}", s1.status)));
        }
        self.iterations += s1.iterations;
        let mu_star = s1.x[mu];
        if top && exceeds(mu_star, 1.0) {
            if let Some(v) = self.find_violation(&nodes, mu_star)? {
                return Err(Error::Hypothesis(Box::new(v)));
            }
        }

        // tighten the edges at x₀ with the branch edges held at the found scale
        let mu_bar = mu_star.max(1.0) * (1.0 + K_SLACK);
        let mut lp2 = SelectionLp::new(self.inst, &nodes);
        let nu = lp2.add_scale_var(1.0);
        for e in &tree.edges {
            if on_x0(e) {
                lp2.add_pair(e.0, e.1, Scale::Var { var: nu, factor: self.k });
            } else {
                lp2.add_pair(e.0, e.1, Scale::Fixed(mu_bar * c.e_n * self.k));
            }
        }
        pin_all(&mut lp2, &nodes, &pins);
        let s2 = lp2.solve()?;
        let (x, nu_star) = if s2.is_optimal() {
            self.iterations += s2.iterations;
            (lp2.coeffs(&s2.x), s2.x[nu])
        } else {
            (lp1.coeffs(&s1.x), mu_star * c.ts)
        };

        let neighbors: Vec<usize> = branches.iter().map(|b| b[0]).collect();
        let fixed: Vec<usize> = std::iter::once(x0).chain(neighbors.iter().copied()).collect();
        let fixed_global: Vec<usize> = fixed.iter().map(|&l| nodes[l]).collect();
        self.assign(&fixed_global, fixed.iter().map(|&l| x[l].clone()).collect(), &pins);
        self.steps.push(HellyStep {
            size: m,
            x0: nodes[x0],
            neighbors: neighbors.iter().map(|&l| nodes[l]).collect(),
            mu: mu_star,
            nu: nu_star,
        });

        for branch in branches {
            let sub: Vec<usize> = branch.iter().map(|&l| nodes[l]).collect();
            let root = sub[0];
            let mut sub_pins = vec![(root, self.coeffs[root].clone().expect("assigned"))];
            sub_pins.extend(pins.iter().filter(|(p, _)| *p != root && sub.contains(p)).cloned());
            self.solve(sub, sub_pins)?;
        }
        Ok(())
    }

    fn violation(&self, mut subset: Vec<usize>, lambda: f64, mu: Option<f64>) -> Error {
        subset.sort_unstable();
        Error::Hypothesis(Box::new(HypothesisViolation {
            subset,
            subset_lambda_star: lambda,
            k_bound: self.k,
            helly_mu: mu,
        }))
    }

    /// A subset of at most `2^{ℓ_G}` nodes with optimal `λ > K`, shrunk
    /// greedily.
    fn find_violation(&self, nodes: &[usize], mu: f64) -> Result<Option<HypothesisViolation>> {
        let size = self.cap.min(nodes.len());
        let count = binomial_u128(nodes.len(), size);
        if count > EXTRACT_LIMIT {
            log::warn!("skipping counterexample extraction over {count} subsets");
            return Ok(None);
        }
        let mut found: Option<(Vec<usize>, f64)> = None;
        for_each_subset(nodes.len(), size, |idx| {
            let sub: Vec<usize> = idx.iter().map(|&i| nodes[i]).collect();
            if let Some(o) = min_lambda_on(self.inst, &sub, &[], None)? {
                if exceeds(o.lambda, self.k) {
                    found = Some((sub, o.lambda));
                    return Ok(false);
                }
            }
            Ok(true)
        })?;
        let Some((mut sub, mut lambda)) = found else {
            return Ok(None);
        };
        let mut i = 0;
        while i < sub.len() && sub.len() > 1 {
            let mut smaller = sub.clone();
            smaller.remove(i);
            match min_lambda_on(self.inst, &smaller, &[], None)? {
                Some(o) if exceeds(o.lambda, self.k) => {
                    sub = smaller;
                    lambda = o.lambda;
                }
                _ => i += 1,
            }
        }
        sub.sort_unstable();
        Ok(Some(HypothesisViolation {
            subset: sub,
            subset_lambda_star: lambda,
            k_bound: self.k,
            helly_mu: Some(mu),
        }))
    }
}

fn pin_all(lp: &mut SelectionLp<'_>, nodes: &[usize], pins: &[(usize, Vec<f64>)]) {
    for (g, c) in pins {
        if let Some(l) = nodes.iter().position(|n| n == g) {
            lp.pin(l, c);
        }
    }
}

fn relabel(tree: &DistortionTree, nodes: &[usize]) -> DistortionTree {
    let mut t = tree.clone();
    t.edges = tree
        .edges
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (nodes[a], nodes[b]);
            (x.min(y), x.max(y))
        })
        .collect();
    t.edges.sort_unstable();
    t.max_degree_vertex = nodes[tree.max_degree_vertex];
    t
}

pub(crate) fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Selection by the inductive tree construction, assuming every subset of at
/// most `2^{ℓ_G}` points has a selection with `λ ≤ K`. A failing subset found
/// on the way is returned as [`Error::Hypothesis`].
pub fn constructive_selection(inst: &Instance, k: f64, opts: ConstructiveOptions) -> Result<SelectionResult> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("K must be finite and ≥ 0, got {k}")));
    }
    let c = *inst.ctx.constants();
    let ell_g = c.ell_g(inst.ell());
    let cap = 1usize.checked_shl(ell_g as u32).unwrap_or(usize::MAX);
    let m = inst.len();
    let mut run = Run {
        inst,
        k,
        cap,
        degree: opts.tree_degree.unwrap_or(ell_g + 1),
        tree_opts: opts.tree,
        coeffs: vec![None; m],
        steps: Vec::new(),
        top_tree: None,
        base_cases: 0,
        iterations: 0,
    };
    run.solve((0..m).collect(), Vec::new())?;
    if run.top_tree.is_none() && m >= 2 {
        run.top_tree = Some(build_tree(inst.points(), None, opts.tree)?);
    }
    let coeffs: Vec<Vec<f64>> = run.coeffs.into_iter().map(|c| c.expect("every point assigned")).collect();
    let mut result = SelectionResult::assemble(inst, coeffs, 0.0, Method::Constructive, run.iterations)?;
    result.lambda_used = result.certificate.field_lambda;

    let eta = run.top_tree.as_ref().map_or(1.0, |t| t.eta_observed);
    let tau = c.tau(m as f64 * eta);
    let bound = tau * k * c.e_n;
    let mut edge_lambda_max = 0.0f64;
    if let Some(t) = &run.top_tree {
        for &(a, b) in &t.edges {
            edge_lambda_max = edge_lambda_max.max(wg_lambda_star(&result.field.restrict(&[a, b])?).value);
        }
    }
    let edge_bound = tau * c.e_n * edge_lambda_max;
    let lambda = result.certificate.field_lambda;
    result.certificate.constructive = Some(ConstructiveCertificate {
        k_bound: k,
        ell_g,
        base_size: cap,
        eta_observed: eta,
        tree: run.top_tree,
        max_mu: run.steps.iter().map(|s| s.mu).fold(0.0, f64::max),
        steps: run.steps,
        base_cases: run.base_cases,
        bound,
        bound_ok: lambda <= bound * (1.0 + K_SLACK),
        edge_lambda_max,
        edge_bound,
        edge_bound_ok: lambda <= edge_bound * (1.0 + K_SLACK),
    });
    Ok(result)
}

/// Constructive selection inside `G(x) ∩ {P : |D^α P(x)| ≤ K}`. Bound rows
/// already implied by `G(x)` are not added.
pub fn bounded_constructive_selection(inst: &Instance, k: f64, opts: ConstructiveOptions) -> Result<SelectionResult> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("K must be finite and ≥ 0, got {k}")));
    }
    let space = inst.ctx.space();
    let d = inst.dim();
    let mut sets = Vec::with_capacity(inst.len());
    for (i, (x, g)) in inst.points.iter().zip(&inst.sets).enumerate() {
        let mono = space.monomials_at(x);
        let mut s: ConvexSetSpec = g.clone();
        for a in 0..d {
            let row = space.derivative_functional(a, &mono);
            let (lo, hi) = functional_range(g, &row, d)?;
            if hi > k {
                s.push(row.clone(), k);
            }
            if lo < -k {
                s.push(row.iter().map(|v| -v).collect(), k);
            }
        }
        if s.find_point(d)?.is_none() {
            return Err(Error::Hypothesis(Box::new(HypothesisViolation {
                subset: vec![i],
                subset_lambda_star: f64::INFINITY,
                k_bound: k,
                helly_mu: None,
            })));
        }
        sets.push(s);
    }
    let bounded = inst.with_sets(sets)?;
    let mut r = constructive_selection(&bounded, k, opts)?;
    let coeffs: Vec<Vec<f64>> = r.field.polys().iter().map(|p| p.coeffs().to_vec()).collect();
    let v = inst.membership_violation(&coeffs).max(bounded.membership_violation(&coeffs));
    r.certificate.max_membership_violation = v;
    r.certificate.membership_ok = v <= crate::tol::FEAS_TOL;
    Ok(r)
}

// [min, max] of ⟨row, c⟩ over the set
fn functional_range(g: &ConvexSetSpec, row: &[f64], d: usize) -> Result<(f64, f64)> {
    let mut out = [0.0; 2];
    for (slot, sign) in [(0usize, 1.0), (1, -1.0)] {
        let mut lp = crate::lp::LinearProgram::new(d);
        for j in 0..d {
            lp.set_free(j, true);
            lp.set_objective(j, sign * row[j]);
        }
        g.add_rows(&mut lp, 0);
        let s = lp.solve()?;
        out[slot] = match s.status {
            LpStatus::Optimal => sign * s.objective,
            LpStatus::Unbounded => sign * f64::NEG_INFINITY,
            LpStatus::Infeasible => return Err(Error::Solver("nonempty set reported infeasible".into())),
        };
    }
    Ok((out[0], out[1]))
}
