//! The two-point jet quantity `d′_ω`, certified bounds for the chain metric
//! `d_ω`, a heuristic chain search, and the chain-contraction check.
//!
//! `d_ω(T, T′)` is an infimum over all finite chains in `P_k × ℝⁿ` and is not
//! computed exactly. What is computed:
//!
//! * `d′_ω` in closed form ([`MetricCtx::two_point_delta`]),
//! * the interval `[e⁻ⁿ d′_ω, d′_ω]`, which always contains `d_ω`,
//! * an upper bound from an explicit chain found by local search.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{dist, Constants, Jet, Poly, Space};
use crate::moduli::{Modulus, PhiAlpha};
use crate::tol::approx_le;

/// Shared context: the polynomial space, the modulus and the `φ_α` table.
#[derive(Debug)]
pub struct MetricCtx {
    space: Arc<Space>,
    modulus: Modulus,
    constants: Constants,
    // indexed by |α|
    phis: Vec<PhiAlpha>,
}

impl MetricCtx {
    pub fn new(space: Arc<Space>, modulus: Modulus) -> Result<Arc<Self>> {
        let k = space.k();
        let phis = (0..=k)
            .map(|a| PhiAlpha::new(modulus.clone(), k, a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Self {
            constants: Constants::for_space(&space),
            space,
            modulus,
            phis,
        }))
    }

    pub fn build(k: usize, n: usize, modulus: Modulus) -> Result<Arc<Self>> {
        Self::new(Space::new(k, n)?, modulus)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    /// `φ_α` for `|α| = order`.
    pub fn phi(&self, order: usize) -> &PhiAlpha {
        &self.phis[order]
    }

    /// `ω̃(t)`.
    #[inline]
    pub fn omega(&self, t: f64) -> f64 {
        self.modulus.eval_unchecked(t)
    }

    /// `‖x−y‖^{k−|α|} ω̃(‖x−y‖)` for a basis index `α` and distance `r`.
    #[inline]
    pub fn dp_weight(&self, alpha: usize, r: f64) -> f64 {
        self.phis[self.space.order(alpha)].weight(r)
    }

    fn check_jet(&self, t: &Jet) -> Result<()> {
        self.space.check_same(t.space())?;
        self.space.check_point(&t.base)
    }

    /// Raises `best` to `max_α φ_α(|derivs_α|)`. `arg` is a point with
    /// `ω̃(arg) ≤ best`; a term with `|D^α| ≤ arg^{k−|α|} ω̃(arg)` cannot exceed
    /// `best`, so its inversion is skipped.
    fn phi_max(&self, derivs: &[f64], best: &mut f64, arg: &mut f64) -> Result<()> {
        if let Some(p) = self.modulus.pure_power() {
            return self.phi_max_power(derivs, p, best);
        }
        for (a, d) in derivs.iter().enumerate() {
            let phi = &self.phis[self.space.order(a)];
            let t = d.abs();
            if phi.gap() == 0 || !(t > 0.0) {
                *best = best.max(phi.eval(t)?);
            } else if t > phi.weight(*arg) {
                let (v, s) = phi.eval_with_arg(t)?;
                if v > *best {
                    *best = v;
                    *arg = s;
                }
            }
        }
        Ok(())
    }

    /// Closed form `φ_α(t) = t^{p/(j+p)}`: a term beats `best` only when
    /// `t > best^{(j+p)/p}`, so each threshold is computed once per value of `best`.
    fn phi_max_power(&self, derivs: &[f64], p: f64, best: &mut f64) -> Result<()> {
        const CACHED: usize = 16;
        let mut thr = [f64::NAN; CACHED];
        for (a, d) in derivs.iter().enumerate() {
            let phi = &self.phis[self.space.order(a)];
            let (j, t) = (phi.gap(), d.abs());
            if j == 0 || j >= CACHED || !(t > 0.0) {
                let v = phi.eval(t)?;
                if v > *best {
                    *best = v;
                    thr = [f64::NAN; CACHED];
                }
                continue;
            }
            if thr[j].is_nan() {
                thr[j] = best.powf((j as f64 + p) / p);
            }
            if t > thr[j] {
                let v = phi.eval(t)?;
                if v > *best {
                    *best = v;
                    thr = [f64::NAN; CACHED];
                }
            }
        }
        Ok(())
    }

    /// `d′_ω` from a coefficient difference and the two base points.
    pub fn delta_raw(&self, diff: &[f64], x0: &[f64], x1: &[f64]) -> Result<f64> {
        let mut arg = dist(x0, x1);
        let mut best = self.omega(arg);
        self.phi_max(&self.space.derivatives(diff, x0), &mut best, &mut arg)?;
        self.phi_max(&self.space.derivatives(diff, x1), &mut best, &mut arg)?;
        Ok(best)
    }

    /// `d′_ω(T₀, T₁) = max_α {ω(‖x₀−x₁‖), φ_α(|D^α(P₀−P₁)(x₀)|), φ_α(|D^α(P₀−P₁)(x₁)|)}`.
    pub fn two_point_delta(&self, t0: &Jet, t1: &Jet) -> Result<f64> {
        self.check_jet(t0)?;
        self.check_jet(t1)?;
        let diff = t0.poly.sub(&t1.poly)?;
        self.delta_raw(diff.coeffs(), &t0.base, &t1.base)
    }

    /// The one-basepoint maximum `max_α {ω(‖x₀−x₁‖), φ_α(|D^α(P₀−P₁)(x₀)|)}`.
    pub fn one_point_delta(&self, t0: &Jet, t1: &Jet) -> Result<f64> {
        self.check_jet(t0)?;
        self.check_jet(t1)?;
        let diff = t0.poly.sub(&t1.poly)?;
        let mut arg = dist(&t0.base, &t1.base);
        let mut best = self.omega(arg);
        self.phi_max(&self.space.derivatives(diff.coeffs(), &t0.base), &mut best, &mut arg)?;
        Ok(best)
    }

    /// `[e⁻ⁿ d′_ω, d′_ω]`, which contains `d_ω(T₀, T₁)`.
    pub fn chain_metric_bounds(&self, t0: &Jet, t1: &Jet) -> Result<MetricInterval> {
        let upper = self.two_point_delta(t0, t1)?;
        Ok(MetricInterval {
            lower: upper / self.constants.e_n,
            upper,
        })
    }

    /// Sum of `d′_ω` over consecutive links of a chain.
    pub fn chain_length(&self, chain: &[Jet]) -> Result<f64> {
        chain
            .windows(2)
            .map(|w| self.two_point_delta(&w[0], &w[1]))
            .sum()
    }

    /// Smallest chain sum `Σ d′_ω(T_i, T_{i+1})` found by seeded local search.
    ///
    /// Any chain from `T₀` to `T₁` bounds `d_ω` from above, and the one-link
    /// chain is always a candidate, so the result is `≤ d′_ω(T₀, T₁)`.
    pub fn chain_upper_bound_search(&self, t0: &Jet, t1: &Jet, opts: &ChainSearch) -> Result<f64> {
        let direct = self.two_point_delta(t0, t1)?;
        if opts.max_links <= 1 || direct == 0.0 {
            return Ok(direct);
        }
        // every chain costs at least ω̃(‖x₀−x₁‖) (subadditivity) and each top-order
        // |D^α(P₀−P₁)| (constant, so the link differences telescope)
        let diff = t0.poly.sub(&t1.poly)?;
        let top = self.space.derivatives(diff.coeffs(), &t0.base);
        let floor = (0..self.space.dim())
            .filter(|&a| self.space.order(a) == self.space.k())
            .fold(self.omega(dist(&t0.base, &t1.base)), |m, a| m.max(top[a].abs()));
        if direct <= floor {
            return Ok(direct);
        }
        let mut best = direct;
        for r in 0..opts.restarts.max(1) {
            let links = 2 + (r % (opts.max_links - 1));
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            let found = self.search_chain(t0, t1, links, r > 0, opts.sweeps, &mut rng)?;
            best = best.min(found);
        }
        Ok(best)
    }

    /// `d′_ω` between two search nodes (`coeffs ++ base`) with their monomials.
    fn link_cost(&self, a: &[f64], b: &[f64], ma: &[f64], mb: &[f64], sc: &mut Scratch) -> Result<f64> {
        let dim = self.space.dim();
        sc.diff.clear();
        sc.diff.extend(a[..dim].iter().zip(&b[..dim]).map(|(x, y)| x - y));
        let mut arg = dist(&a[dim..], &b[dim..]);
        let mut best = self.omega(arg);
        self.space.derivatives_into(&sc.diff, ma, &mut sc.der);
        self.phi_max(&sc.der, &mut best, &mut arg)?;
        self.space.derivatives_into(&sc.diff, mb, &mut sc.der);
        self.phi_max(&sc.der, &mut best, &mut arg)?;
        Ok(best)
    }

    fn search_chain(
        &self,
        t0: &Jet,
        t1: &Jet,
        links: usize,
        perturb: bool,
        sweeps: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64> {
        let dim = self.space.dim();
        let n = self.space.n();
        let width = dim + n;
        let c0 = t0.poly.coeffs();
        let c1 = t1.poly.coeffs();
        // nodes[i] = coeffs ++ base, endpoints fixed
        let mut nodes: Vec<Vec<f64>> = (0..=links)
            .map(|i| {
                let s = i as f64 / links as f64;
                c0.iter()
                    .zip(c1)
                    .map(|(a, b)| a + s * (b - a))
                    .chain(t0.base.iter().zip(&t1.base).map(|(a, b)| a + s * (b - a)))
                    .collect()
            })
            .collect();
        let spread: Vec<f64> = (0..width)
            .map(|c| {
                let a = if c < dim { c0[c] } else { t0.base[c - dim] };
                let b = if c < dim { c1[c] } else { t1.base[c - dim] };
                (b - a).abs().max(1e-3 * (1.0 + a.abs().max(b.abs())))
            })
            .collect();
        if perturb {
            for node in nodes.iter_mut().take(links).skip(1) {
                for (c, v) in node.iter_mut().enumerate() {
                    *v += 0.25 * spread[c] * rng.gen_range(-1.0..1.0);
                }
            }
        }
        // monomials at each node's base, refreshed only when a base coordinate moves
        let mut mono: Vec<Vec<f64>> = nodes.iter().map(|v| self.space.monomials_at(&v[dim..])).collect();
        let mut scratch = Scratch::default();
        let mut costs: Vec<f64> = (0..links)
            .map(|i| self.link_cost(&nodes[i], &nodes[i + 1], &mono[i], &mono[i + 1], &mut scratch))
            .collect::<Result<_>>()?;

        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut step: Vec<f64> = spread.iter().map(|s| 0.5 * s).collect();
        for _ in 0..sweeps {
            for i in 1..links {
                for c in 0..width {
                    let orig = nodes[i][c];
                    let mut eval = |v: f64, nodes: &mut Vec<Vec<f64>>, mono: &mut Vec<Vec<f64>>| -> Result<(f64, f64, f64)> {
                        nodes[i][c] = v;
                        if c >= dim {
                            self.space.monomials_into(&nodes[i][dim..], &mut mono[i]);
                        }
                        let a = self.link_cost(&nodes[i - 1], &nodes[i], &mono[i - 1], &mono[i], &mut scratch)?;
                        let b = self.link_cost(&nodes[i], &nodes[i + 1], &mono[i], &mono[i + 1], &mut scratch)?;
                        Ok((a + b, a, b))
                    };
                    let base_cost = costs[i - 1] + costs[i];
                    let (mut lo, mut hi) = (orig - step[c], orig + step[c]);
                    let mut x1 = hi - INV_PHI * (hi - lo);
                    let mut x2 = lo + INV_PHI * (hi - lo);
                    let mut f1 = eval(x1, &mut nodes, &mut mono)?.0;
                    let mut f2 = eval(x2, &mut nodes, &mut mono)?.0;
                    for _ in 0..14 {
                        if f1 <= f2 {
                            hi = x2;
                            x2 = x1;
                            f2 = f1;
                            x1 = hi - INV_PHI * (hi - lo);
                            f1 = eval(x1, &mut nodes, &mut mono)?.0;
                        } else {
                            lo = x1;
                            x1 = x2;
                            f1 = f2;
                            x2 = lo + INV_PHI * (hi - lo);
                            f2 = eval(x2, &mut nodes, &mut mono)?.0;
                        }
                    }
                    let cand = if f1 <= f2 { x1 } else { x2 };
                    let (total, a, b) = eval(cand, &mut nodes, &mut mono)?;
                    if total < base_cost {
                        costs[i - 1] = a;
                        costs[i] = b;
                    } else {
                        nodes[i][c] = orig;
                        if c >= dim {
                            self.space.monomials_into(&nodes[i][dim..], &mut mono[i]);
                        }
                    }
                }
            }
            for s in step.iter_mut() {
                *s *= 0.5;
            }
        }
        Ok(costs.iter().sum())
    }

    /// Check the chain-contraction estimate on a concrete chain.
    ///
    /// Hypotheses are tested with `d′_ω` in place of `d_ω` (valid since
    /// `d_ω ≤ d′_ω`): every link satisfies `d′_ω(T_i, T_{i+1}) ≤ ω(‖x_i − x_{i+1}‖)`,
    /// and both `Σ‖x_i − x_{i+1}‖ ≤ λ‖x₀ − x_m‖` and
    /// `Σω(‖x_i − x_{i+1}‖) ≤ λω(‖x₀ − x_m‖)`. The conclusion tested is
    /// `d_ω(τ⁻¹∘T₀, τ⁻¹∘T_m) ≤ ω(‖x₀ − x_m‖)` with `τ = e^{2n}λ^{k+1}`, through
    /// its certified lower bound `e⁻ⁿ d′_ω ≤ d_ω`. The stronger statement with
    /// `d′_ω` itself is reported separately in `d_prime_conclusion_holds`.
    pub fn chain_contraction_check(&self, chain: &[Jet], lambda: f64) -> Result<ContractionReport> {
        if chain.len() < 2 {
            return Err(Error::Domain("chain needs at least two jets".into()));
        }
        if !(lambda >= 1.0) {
            return Err(Error::Domain(format!("λ must be ≥ 1, got {lambda}")));
        }
        for t in chain {
            self.check_jet(t)?;
        }
        let first = &chain[0];
        let last = &chain[chain.len() - 1];
        let span = dist(&first.base, &last.base);
        let mut path_len = 0.0;
        let mut omega_sum = 0.0;
        let mut links_ok = true;
        for w in chain.windows(2) {
            let r = dist(&w[0].base, &w[1].base);
            path_len += r;
            let om = self.omega(r);
            omega_sum += om;
            links_ok &= approx_le(self.two_point_delta(&w[0], &w[1])?, om);
        }
        if span == 0.0 && path_len > 0.0 {
            return Err(Error::DegenerateBaseline);
        }
        let omega_span = self.omega(span);
        let length_ok = approx_le(path_len, lambda * span);
        let omega_ok = approx_le(omega_sum, lambda * omega_span);
        let tau = self.constants.tau(lambda);
        let conclusion_value = self.two_point_delta(&first.scale(1.0 / tau), &last.scale(1.0 / tau))?;
        Ok(ContractionReport {
            hypotheses_hold: links_ok && length_ok && omega_ok,
            conclusion_holds: approx_le(conclusion_value / self.constants.e_n, omega_span),
            d_prime_conclusion_holds: approx_le(conclusion_value, omega_span),
            tau,
            links_ok,
            length_ok,
            omega_ok,
            conclusion_value,
            omega_span,
        })
    }
}

/// Certified enclosure of `d_ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct MetricInterval {
    pub lower: f64,
    pub upper: f64,
}

impl MetricInterval {
    pub fn contains(&self, v: f64) -> bool {
        approx_le(self.lower, v) && approx_le(v, self.upper)
    }
}

#[derive(Default)]
struct Scratch {
    diff: Vec<f64>,
    der: Vec<f64>,
}

/// Chain search parameters.
#[derive(Clone, Copy, Debug)]
pub struct ChainSearch {
    pub max_links: usize,
    pub restarts: usize,
    pub sweeps: usize,
    pub seed: u64,
}

impl ChainSearch {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            max_links: 4,
            restarts: 8,
            sweeps: 4,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct ContractionReport {
    pub hypotheses_hold: bool,
    pub conclusion_holds: bool,
    pub d_prime_conclusion_holds: bool,
    pub tau: f64,
    pub links_ok: bool,
    pub length_ok: bool,
    pub omega_ok: bool,
    pub conclusion_value: f64,
    pub omega_span: f64,
}

/// Convenience constructor for a jet in a context's space.
pub fn jet(ctx: &MetricCtx, coeffs: &[f64], base: &[f64]) -> Result<Jet> {
    Jet::new(Poly::new(ctx.space().clone(), coeffs.to_vec())?, base.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin_ctx(k: usize, n: usize) -> Arc<MetricCtx> {
        MetricCtx::build(k, n, Modulus::power(1.0).unwrap()).unwrap()
    }

    #[test]
    fn identical_jets_are_at_zero() {
        let ctx = lin_ctx(2, 2);
        let t = jet(&ctx, &[1.0, 2.0, -1.0, 0.5, 0.0, 3.0], &[0.2, 0.4]).unwrap();
        assert_eq!(ctx.two_point_delta(&t, &t).unwrap(), 0.0);
        assert_eq!(ctx.one_point_delta(&t, &t).unwrap(), 0.0);
        let iv = ctx.chain_metric_bounds(&t, &t).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.0, 0.0));
    }

    #[test]
    fn same_polynomial_gives_omega_of_distance() {
        let ctx = MetricCtx::build(2, 2, Modulus::power(0.5).unwrap()).unwrap();
        let c = [1.0, 2.0, -1.0, 0.5, 0.0, 3.0];
        let a = jet(&ctx, &c, &[0.0, 0.0]).unwrap();
        let b = jet(&ctx, &c, &[3.0, 4.0]).unwrap();
        let expect = 5f64.sqrt();
        assert!((ctx.two_point_delta(&a, &b).unwrap() - expect).abs() < 1e-15);
        assert!((ctx.one_point_delta(&a, &b).unwrap() - expect).abs() < 1e-15);
        assert!(ctx.chain_metric_bounds(&a, &b).unwrap().contains(expect));
    }

    #[test]
    fn hand_example_k1_n1() {
        // P₀ = 0 at 0, P₁(t) = t at 1, ω(t) = t: φ₀ = √·, φ₁ = id.
        // terms {ω(1) = 1, φ₀(0) = 0, φ₀(1) = 1, φ₁(1) = 1}
        let ctx = lin_ctx(1, 1);
        let t0 = jet(&ctx, &[0.0, 0.0], &[0.0]).unwrap();
        let t1 = jet(&ctx, &[0.0, 1.0], &[1.0]).unwrap();
        let expected = [1f64, 0f64.sqrt(), 1f64.sqrt(), 1.0]
            .into_iter()
            .fold(0.0, f64::max);
        assert_eq!(ctx.two_point_delta(&t0, &t1).unwrap(), expected);
        assert_eq!(ctx.one_point_delta(&t0, &t1).unwrap(), 1.0);
        let iv = ctx.chain_metric_bounds(&t0, &t1).unwrap();
        assert!((iv.lower - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert_eq!(iv.upper, 1.0);
    }

    #[test]
    fn mismatched_spaces() {
        let a = lin_ctx(1, 1);
        let b = lin_ctx(2, 1);
        let t0 = jet(&a, &[0.0, 0.0], &[0.0]).unwrap();
        let t1 = jet(&b, &[0.0, 0.0, 0.0], &[0.0]).unwrap();
        assert!(matches!(
            a.two_point_delta(&t0, &t1),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn one_link_search_is_direct() {
        let ctx = lin_ctx(1, 1);
        let t0 = jet(&ctx, &[0.0, 0.0], &[0.0]).unwrap();
        let t1 = jet(&ctx, &[0.3, 1.0], &[1.0]).unwrap();
        let opts = ChainSearch {
            max_links: 1,
            ..ChainSearch::with_seed(1)
        };
        assert_eq!(
            ctx.chain_upper_bound_search(&t0, &t1, &opts).unwrap(),
            ctx.two_point_delta(&t0, &t1).unwrap()
        );
    }

    #[test]
    fn search_never_beats_exact_value_for_same_polynomial() {
        let ctx = MetricCtx::build(2, 1, Modulus::power(0.5).unwrap()).unwrap();
        let a = jet(&ctx, &[0.1, -1.0, 2.0], &[0.0]).unwrap();
        let b = jet(&ctx, &[0.1, -1.0, 2.0], &[0.81]).unwrap();
        let found = ctx
            .chain_upper_bound_search(&a, &b, &ChainSearch::with_seed(7))
            .unwrap();
        assert!(approx_le(0.9, found), "{found}");
        assert!(approx_le(found, 0.9));
    }

    #[test]
    fn contraction_two_element_chain() {
        let ctx = lin_ctx(1, 1);
        let t0 = jet(&ctx, &[0.0, 0.0], &[0.0]).unwrap();
        let t1 = jet(&ctx, &[-0.5, 0.5], &[1.0]).unwrap();
        let rep = ctx.chain_contraction_check(&[t0, t1], 1.0).unwrap();
        assert!(rep.hypotheses_hold);
        assert!(rep.conclusion_holds && rep.d_prime_conclusion_holds);
        assert!((rep.tau - 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn contraction_collinear_three_points() {
        // ω(t) = t, k = 1, x = 0, 0.5, 1. Link polynomials chosen so each link
        // meets |D^α(P_i − P_{i+1})| ≤ ‖Δx‖^{1−|α|}·‖Δx‖ at both ends.
        let ctx = lin_ctx(1, 1);
        let chain = vec![
            jet(&ctx, &[0.0, 0.0], &[0.0]).unwrap(),
            jet(&ctx, &[0.0, 0.5], &[0.5]).unwrap(),
            jet(&ctx, &[-0.25, 1.0], &[1.0]).unwrap(),
        ];
        // link checks by hand: diff (0, -0.5) → at 0: |0| ≤ 0.25, |-.5| ≤ .5;
        // at .5: |-.25| ≤ .25. diff (0.25, -0.5) at .5: |0| ≤ .25, at 1: |-.25| ≤ .25.
        let rep = ctx.chain_contraction_check(&chain, 1.0).unwrap();
        assert!(rep.links_ok && rep.length_ok && rep.omega_ok);
        assert!(rep.conclusion_holds);
    }

    #[test]
    fn contraction_degenerate_baseline() {
        let ctx = lin_ctx(1, 1);
        let chain = vec![
            jet(&ctx, &[0.0, 0.0], &[0.0]).unwrap(),
            jet(&ctx, &[0.0, 0.0], &[0.5]).unwrap(),
            jet(&ctx, &[0.0, 0.0], &[0.0]).unwrap(),
        ];
        assert!(matches!(
            ctx.chain_contraction_check(&chain, 2.0),
            Err(Error::DegenerateBaseline)
        ));
    }
}
