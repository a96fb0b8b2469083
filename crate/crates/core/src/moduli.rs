//! Moduli of continuity and the rescaling functions built from them.
//!
//! A [`Modulus`] is a concave, nondecreasing `ω` with `ω(0) = 0`, optionally
//! regularized to `ω̃(t) = ω(t) + ε·min(t, t_cap)` so that it is strictly
//! increasing. Every evaluation in the crate goes through `ω̃`.
//!
//! [`PhiAlpha`] is `φ(t) = ω(ψ(t))` where `ψ` inverts `s ↦ s^j ω(s)` and
//! `j = k − |α|`; for `j = 0` it is the identity.

use std::sync::atomic::{AtomicBool, Ordering};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for monotone inversion.
pub const INVERT_REL_TOL: f64 = 1e-12;
/// Bisection step limit for monotone inversion.
pub const INVERT_MAX_STEPS: usize = 200;
/// Distance from `sup ω` below which a capped `φ` value is reported.
pub const CAP_WARN_MARGIN: f64 = 1e-6;

const TINY: f64 = 1e-300;

static CAP_WARNED: AtomicBool = AtomicBool::new(false);

#[derive(Clone, Debug, PartialEq)]
pub enum ModulusKind {
    /// `ω(t) = t^p`, `0 < p ≤ 1`.
    Power { p: f64 },
    /// Linear interpolation between knots, continued with the final slope.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

/// A concave nondecreasing modulus of continuity with strictness regularization.
#[derive(Clone, Debug, PartialEq)]
pub struct Modulus {
    kind: ModulusKind,
    eps: f64,
    t_cap: f64,
}

impl Modulus {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidModulus(format!(
                "power exponent must lie in (0, 1], got {p}"
            )));
        }
        Ok(Self {
            kind: ModulusKind::Power { p },
            eps: 0.0,
            t_cap: f64::INFINITY,
        })
    }

    /// Concave piecewise-linear modulus. The first knot must be `(0, 0)`,
    /// abscissae strictly increasing, slopes positive at the start and
    /// nonincreasing after that. A flat final segment gets a default
    /// regularization `ε = 1e-9 · (first slope)`.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidModulus("need at least two knots".into()));
        }
        if knots.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidModulus("knots must be finite".into()));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(Error::InvalidModulus(
                "first knot must be (0, 0) so that ω(0) = 0".into(),
            ));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidModulus(
                    "knot abscissae must be strictly increasing".into(),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidModulus("modulus must be nondecreasing".into()));
            }
        }
        if knots[1].1 <= 0.0 {
            return Err(Error::InvalidModulus(
                "first slope must be positive (a concave modulus with zero initial slope vanishes)"
                    .into(),
            ));
        }
        // slope_i >= slope_{i+1}, cross-multiplied to avoid division.
        for w in knots.windows(3) {
            let (dt0, dv0) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            let (dt1, dv1) = (w[2].0 - w[1].0, w[2].1 - w[1].1);
            if dv1 * dt0 > dv0 * dt1 {
                return Err(Error::InvalidModulus(format!(
                    "slopes must be nonincreasing (concavity) at knot t = {}",
                    w[1].0
                )));
            }
        }
        let first_slope = knots[1].1 / knots[1].0;
        let n = knots.len();
        let final_flat = knots[n - 1].1 == knots[n - 2].1;
        Ok(Self {
            kind: ModulusKind::PiecewiseLinear { knots },
            eps: if final_flat { 1e-9 * first_slope } else { 0.0 },
            t_cap: f64::INFINITY,
        })
    }

    /// Override the regularization `ε·min(t, t_cap)`.
    pub fn with_regularization(mut self, eps: f64, t_cap: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidModulus(format!("eps must be finite and ≥ 0, got {eps}")));
        }
        if !(t_cap > 0.0) {
            return Err(Error::InvalidModulus(format!("t_cap must be positive, got {t_cap}")));
        }
        self.eps = eps;
        self.t_cap = t_cap;
        Ok(self)
    }

    pub fn kind(&self) -> &ModulusKind {
        &self.kind
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn t_cap(&self) -> f64 {
        self.t_cap
    }

    fn raw(&self, t: f64) -> f64 {
        match &self.kind {
            ModulusKind::Power { p } => {
                if *p == 1.0 {
                    t
                } else {
                    t.powf(*p)
                }
            }
            ModulusKind::PiecewiseLinear { knots } => {
                let n = knots.len();
                // index of the segment containing t (last segment extends beyond)
                let seg = match knots.partition_point(|&(tk, _)| tk <= t) {
                    0 => 0,
                    i if i >= n => n - 2,
                    i => i - 1,
                };
                let (t0, v0) = knots[seg];
                let (t1, v1) = knots[seg + 1];
                v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
            }
        }
    }

    /// `ω̃(t)`, including the regularization term. Errors on negative or NaN `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("modulus evaluated at {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    /// `ω̃(t)` for `t ≥ 0` without the domain check.
    #[inline]
    pub fn eval_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let reg = if self.eps > 0.0 {
            self.eps * t.min(self.t_cap)
        } else {
            0.0
        };
        self.raw(t) + reg
    }

    /// Supremum of `ω̃` over `ℝ₊` (`+∞` when unbounded).
    pub fn sup(&self) -> f64 {
        match &self.kind {
            ModulusKind::Power { .. } => f64::INFINITY,
            ModulusKind::PiecewiseLinear { knots } => {
                let n = knots.len();
                if knots[n - 1].1 > knots[n - 2].1 {
                    return f64::INFINITY;
                }
                if self.eps > 0.0 {
                    knots[n - 1].1 + self.eps * self.t_cap
                } else {
                    knots[n - 1].1
                }
            }
        }
    }

    /// Whether `ω̃` is strictly increasing on all of `ℝ₊`.
    pub fn is_strict(&self) -> bool {
        match &self.kind {
            ModulusKind::Power { .. } => true,
            ModulusKind::PiecewiseLinear { knots } => {
                let n = knots.len();
                knots[n - 1].1 > knots[n - 2].1 || (self.eps > 0.0 && self.t_cap.is_infinite())
            }
        }
    }

    /// `Some(p)` when `ω̃(t) = t^p` exactly, enabling closed-form inversion.
    pub(crate) fn pure_power(&self) -> Option<f64> {
        match self.kind {
            ModulusKind::Power { p } if self.eps == 0.0 => Some(p),
            _ => None,
        }
    }
}

/// Serialized form: `{"kind":"power","p":0.5}` or `{"kind":"pl","knots":[[0,0],[1,1]]}`,
/// both with optional `eps` and `t_cap`.
#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ModulusSpec {
    #[serde(rename = "power")]
    Power {
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_cap: Option<f64>,
    },
    #[serde(rename = "pl")]
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_cap: Option<f64>,
    },
}

impl TryFrom<ModulusSpec> for Modulus {
    type Error = Error;

    fn try_from(spec: ModulusSpec) -> Result<Self> {
        let (m, eps, t_cap) = match spec {
            ModulusSpec::Power { p, eps, t_cap } => (Modulus::power(p)?, eps, t_cap),
            ModulusSpec::PiecewiseLinear { knots, eps, t_cap } => (
                Modulus::piecewise_linear(knots.into_iter().map(|[t, v]| (t, v)).collect())?,
                eps,
                t_cap,
            ),
        };
        if eps.is_none() && t_cap.is_none() {
            return Ok(m);
        }
        let eps = eps.unwrap_or(m.eps);
        let t_cap = t_cap.unwrap_or(f64::INFINITY);
        m.with_regularization(eps, t_cap)
    }
}

impl From<&Modulus> for ModulusSpec {
    fn from(m: &Modulus) -> Self {
        let t_cap = m.t_cap.is_finite().then_some(m.t_cap);
        match &m.kind {
            ModulusKind::Power { p } => ModulusSpec::Power {
                p: *p,
                eps: (m.eps != 0.0).then_some(m.eps),
                t_cap,
            },
            ModulusKind::PiecewiseLinear { knots } => ModulusSpec::PiecewiseLinear {
                knots: knots.iter().map(|&(t, v)| [t, v]).collect(),
                eps: Some(m.eps),
                t_cap,
            },
        }
    }
}

impl Serialize for Modulus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModulusSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Modulus {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = ModulusSpec::deserialize(d)?;
        Modulus::try_from(spec).map_err(serde::de::Error::custom)
    }
}

impl JsonSchema for Modulus {
    fn schema_name() -> String {
        "Modulus".into()
    }

    fn json_schema(gen: &mut schemars::gen::SchemaGenerator) -> schemars::schema::Schema {
        ModulusSpec::json_schema(gen)
    }
}

/// Solve `f(s) = y` for nondecreasing `f` on `[lo, hi]` by the Illinois
/// variant of regula falsi, falling back to bisection when a step leaves the
/// bracket.
///
/// Stops when `|f(s) − y| ≤ 1e-12·max(y, tiny)` or the bracket has shrunk to
/// relative width `1e-12`, after at most 200 steps.
pub fn invert_monotone<F>(f: F, y: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo <= hi) || !(y >= 0.0) {
        return Err(Error::Domain(format!(
            "invalid inversion request y = {y}, bracket [{lo}, {hi}]"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    if f_lo > f_hi {
        return Err(Error::NotMonotone {
            s0: lo,
            f0: f_lo,
            s1: hi,
            f1: f_hi,
        });
    }
    if !(f_lo <= y && y <= f_hi) {
        return Err(Error::Bracket {
            target: y,
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let goal = INVERT_REL_TOL * y.max(TINY);
    if (f_lo - y).abs() <= goal {
        return Ok(lo);
    }
    if (f_hi - y).abs() <= goal {
        return Ok(hi);
    }
    // residuals used for the secant step; halved on the stale side (Illinois)
    let (mut r_lo, mut r_hi) = (f_lo - y, f_hi - y);
    let mut last_side = 0i8;
    for _ in 0..INVERT_MAX_STEPS {
        let mut mid = lo - r_lo * (hi - lo) / (r_hi - r_lo);
        if !(mid > lo && mid < hi) {
            mid = lo + 0.5 * (hi - lo);
        }
        let fm = f(mid);
        if fm < f_lo || fm > f_hi {
            return Err(Error::NotMonotone {
                s0: lo,
                f0: f_lo,
                s1: mid,
                f1: fm,
            });
        }
        if (fm - y).abs() <= goal {
            return Ok(mid);
        }
        if fm < y {
            lo = mid;
            f_lo = fm;
            r_lo = fm - y;
            if last_side == -1 {
                r_hi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = mid;
            f_hi = fm;
            r_hi = fm - y;
            if last_side == 1 {
                r_lo *= 0.5;
            }
            last_side = 1;
        }
        if hi - lo <= INVERT_REL_TOL * hi {
            break;
        }
    }
    // pick whichever endpoint lands closer
    Ok(if (f_hi - y).abs() < (y - f_lo).abs() { hi } else { lo })
}

/// `φ_α` for a fixed derivative order `|α|`.
#[derive(Clone, Debug)]
pub struct PhiAlpha {
    modulus: Modulus,
    k: usize,
    alpha_order: usize,
}

impl PhiAlpha {
    pub fn new(modulus: Modulus, k: usize, alpha_order: usize) -> Result<Self> {
        if k == 0 || alpha_order > k {
            return Err(Error::Domain(format!(
                "need k ≥ 1 and |α| ≤ k, got k = {k}, |α| = {alpha_order}"
            )));
        }
        Ok(Self {
            modulus,
            k,
            alpha_order,
        })
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha_order(&self) -> usize {
        self.alpha_order
    }

    /// `k − |α|`.
    pub fn gap(&self) -> usize {
        self.k - self.alpha_order
    }

    /// `s ↦ s^{k−|α|} ω̃(s)`, the function `ψ_α` inverts.
    #[inline]
    pub fn weight(&self, s: f64) -> f64 {
        powi(s, self.gap()) * self.modulus.eval_unchecked(s)
    }

    /// `φ_α(t)`; the identity when `|α| = k`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("φ_α evaluated at {t}")));
        }
        let j = self.gap();
        if j == 0 || t == 0.0 {
            return Ok(t);
        }
        if let Some(p) = self.modulus.pure_power() {
            // s^{j+p} = t  ⇒  φ(t) = t^{p/(j+p)}
            return Ok(t.powf(p / (j as f64 + p)));
        }
        self.eval_by_inversion(t)
    }

    /// `φ_α(t)` always through numeric inversion of `s^{k−|α|} ω̃(s)`.
    pub fn eval_by_inversion(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("φ_α evaluated at {t}")));
        }
        if self.gap() == 0 || t == 0.0 {
            return Ok(t);
        }
        Ok(self.eval_with_arg(t)?.0)
    }

    /// `(φ_α(t), ψ_α(t))` through numeric inversion, for `t > 0` and `|α| < k`.
    pub(crate) fn eval_with_arg(&self, t: f64) -> Result<(f64, f64)> {
        let s = self.psi(t)?;
        let v = self.modulus.eval_unchecked(s);
        let sup = self.modulus.sup();
        if sup.is_finite()
            && v >= sup - CAP_WARN_MARGIN
            && !CAP_WARNED.swap(true, Ordering::Relaxed)
        {
            log::warn!(
                "φ value {v} is within {CAP_WARN_MARGIN} of sup ω = {sup}; results near the cap are insensitive to their argument"
            );
        }
        Ok((v, s))
    }

    /// `ψ_α(t)`, the inverse of `s ↦ s^{k−|α|} ω̃(s)`.
    pub fn psi(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.bracket(t)?;
        invert_monotone(|s| self.weight(s), t, lo, hi)
    }

    fn bracket(&self, t: f64) -> Result<(f64, f64)> {
        let mut hi = 1.0f64;
        let mut lo = 0.0f64;
        if self.weight(hi) < t {
            let mut steps = 0;
            while self.weight(hi) < t {
                lo = hi;
                hi *= 2.0;
                steps += 1;
                if steps > 2100 || !hi.is_finite() {
                    return Err(Error::Bracket {
                        target: t,
                        lo,
                        hi,
                        f_lo: self.weight(lo),
                        f_hi: self.weight(hi),
                    });
                }
            }
        } else {
            let mut steps = 0;
            while hi > 0.0 && self.weight(hi * 0.5) >= t {
                hi *= 0.5;
                steps += 1;
                if steps > 2100 {
                    break;
                }
            }
            lo = hi * 0.5;
        }
        Ok((lo, hi))
    }

    /// Largest `u` with `φ_α(u) ≤ ω̃(w)`: `w^{k−|α|} ω̃(w)`, or `ω̃(w)` when `|α| = k`.
    pub fn inverse_bound(&self, w: f64) -> Result<f64> {
        if !(w >= 0.0) {
            return Err(Error::Domain(format!("distance {w} is negative")));
        }
        Ok(self.weight(w))
    }

    /// Sampled midpoint concavity and monotonicity check on a grid.
    pub fn check_shape(&self, grid: &[f64]) -> Result<bool> {
        let mut prev: Option<(f64, f64)> = None;
        for &t in grid {
            let v = self.eval(t)?;
            if let Some((pt, pv)) = prev {
                if t >= pt && v + crate::tol::CHECK_TOL * crate::tol::scale(v, pv) < pv {
                    return Ok(false);
                }
            }
            prev = Some((t, v));
        }
        for w in grid.windows(2) {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            let mid = self.eval(0.5 * (a + b))?;
            let chord = 0.5 * (self.eval(a)? + self.eval(b)?);
            if !crate::tol::approx_le(chord, mid) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `s^j` for small nonnegative integer `j`.
#[inline]
pub(crate) fn powi(s: f64, j: usize) -> f64 {
    match j {
        0 => 1.0,
        1 => s,
        2 => s * s,
        _ => s.powi(j as i32),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(knots: &[(f64, f64)]) -> Modulus {
        Modulus::piecewise_linear(knots.to_vec()).unwrap()
    }

    #[test]
    fn modulus_eval_examples() {
        assert_eq!(Modulus::power(0.5).unwrap().eval(4.0).unwrap(), 2.0);
        let m = pl(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.5)]);
        assert_eq!(m.eps(), 0.0);
        assert!((m.eval(1.5).unwrap() - 1.25).abs() < 1e-15);
        // beyond last knot continues with slope 0.5
        assert!((m.eval(4.0).unwrap() - 2.5).abs() < 1e-15);
        for m in [Modulus::power(0.3).unwrap(), m] {
            assert_eq!(m.eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn negative_argument_is_domain_error() {
        let m = Modulus::power(1.0).unwrap();
        assert!(matches!(m.eval(-1.0), Err(Error::Domain(_))));
        assert!(matches!(m.eval(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(Modulus::power(0.0).is_err());
        assert!(Modulus::power(1.5).is_err());
        assert!(Modulus::piecewise_linear(vec![(0.0, 0.0)]).is_err());
        assert!(Modulus::piecewise_linear(vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
        // convex kink
        assert!(Modulus::piecewise_linear(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]).is_err());
        // decreasing
        assert!(Modulus::piecewise_linear(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(Modulus::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn flat_tail_gets_default_regularization() {
        let m = pl(&[(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)]);
        assert!((m.eps() - 2e-9).abs() < 1e-24);
        assert!(m.is_strict());
        assert!(m.eval(10.0).unwrap() > m.eval(5.0).unwrap());
        let bounded = m.with_regularization(0.0, f64::INFINITY).unwrap();
        assert!(!bounded.is_strict());
        assert_eq!(bounded.sup(), 2.0);
    }

    #[test]
    fn invert_examples() {
        let s = invert_monotone(|s| s * s, 9.0, 0.0, 10.0).unwrap();
        assert!((s - 3.0).abs() < 1e-11);
        let s = invert_monotone(|s| s, 0.7, 0.0, 1.0).unwrap();
        assert!((s - 0.7).abs() < 1e-12);
        // closed form 8^{2/3} = 4
        let s = invert_monotone(|s: f64| s.powf(1.5), 8.0, 0.0, 10.0).unwrap();
        assert!((s - 4.0).abs() < 1e-10);
        assert!((8f64.powf(2.0 / 3.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn invert_reports_bracket_and_monotonicity() {
        assert!(matches!(
            invert_monotone(|s| s, 20.0, 0.0, 10.0),
            Err(Error::Bracket { .. })
        ));
        // a bump inside the bracket
        let f = |s: f64| if (0.3..0.95).contains(&s) { 100.0 } else { s };
        assert!(matches!(
            invert_monotone(f, 0.9, 0.0, 1.0),
            Err(Error::NotMonotone { .. })
        ));
    }

    #[test]
    fn phi_examples() {
        let id = PhiAlpha::new(Modulus::power(0.5).unwrap(), 2, 2).unwrap();
        assert_eq!(id.eval(0.7).unwrap(), 0.7);
        // ω(t) = t, gap 1: s² = t, φ = √t
        let lin = PhiAlpha::new(Modulus::power(1.0).unwrap(), 1, 0).unwrap();
        assert!((lin.eval(9.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((lin.eval_by_inversion(9.0).unwrap() - 3.0).abs() < 1e-10);
        // ω(t) = √t, gap 1: s^{3/2} = t, φ = t^{1/3}
        let half = PhiAlpha::new(Modulus::power(0.5).unwrap(), 1, 0).unwrap();
        assert!((half.eval(8.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((half.eval_by_inversion(8.0).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_bound_examples() {
        let top = PhiAlpha::new(Modulus::power(1.0).unwrap(), 1, 1).unwrap();
        assert_eq!(top.inverse_bound(1.0).unwrap(), 1.0);
        let lin = PhiAlpha::new(Modulus::power(1.0).unwrap(), 1, 0).unwrap();
        let u = lin.inverse_bound(2.0).unwrap();
        assert_eq!(u, 4.0);
        assert!((lin.eval(u).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(lin.inverse_bound(0.0).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_agrees_with_inversion() {
        for p in [0.2, 0.5, 0.8, 1.0] {
            for gap in 1..=3 {
                let phi = PhiAlpha::new(Modulus::power(p).unwrap(), 3, 3 - gap).unwrap();
                for t in [1e-9, 1e-4, 0.3, 1.0, 7.5, 1e5] {
                    let a = phi.eval(t).unwrap();
                    let b = phi.eval_by_inversion(t).unwrap();
                    assert!((a - b).abs() <= 1e-10 * a.max(1e-300), "p={p} gap={gap} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn phi_is_concave_and_monotone_on_grid() {
        let grid: Vec<f64> = (0..60).map(|i| 1e-4 * 1.3f64.powi(i)).collect();
        for m in [
            Modulus::power(0.4).unwrap(),
            pl(&[(0.0, 0.0), (0.5, 1.0), (2.0, 1.6), (5.0, 2.0)]),
        ] {
            for a in 0..=2 {
                let phi = PhiAlpha::new(m.clone(), 2, a).unwrap();
                assert!(phi.check_shape(&grid).unwrap());
            }
        }
    }

    #[test]
    fn bounded_modulus_caps_phi() {
        let m = pl(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)])
            .with_regularization(0.0, f64::INFINITY)
            .unwrap();
        let phi = PhiAlpha::new(m, 1, 0).unwrap();
        // s·ω(s) is still unbounded, so ψ exists; φ saturates at sup ω = 1
        assert!((phi.eval(1e6).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_roundtrip() {
        let m: Modulus = serde_json::from_str(r#"{"kind":"power","p":0.5}"#).unwrap();
        assert_eq!(m, Modulus::power(0.5).unwrap());
        let m: Modulus =
            serde_json::from_str(r#"{"kind":"pl","knots":[[0,0],[1,1]],"eps":0.01}"#).unwrap();
        assert_eq!(m.eps(), 0.01);
        let back: Modulus = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Modulus>(r#"{"kind":"power","p":2}"#).is_err());
    }
}
