#![allow(dead_code)]

use std::sync::Arc;

use jetspace::jets::{dist, Jet, Poly};
use jetspace::metric::MetricCtx;
use jetspace::moduli::Modulus;
use jetspace::selection::ConvexSetSpec;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `1e-9 · max(1, |a|, |b|)`.
pub fn tol(a: f64, b: f64) -> f64 {
    1e-9 * 1f64.max(a.abs()).max(b.abs())
}

pub fn le(a: f64, b: f64) -> bool {
    a <= b + tol(a, b)
}

pub fn power(p: f64) -> Modulus {
    Modulus::power(p).unwrap()
}

pub fn ctx(k: usize, n: usize, m: Modulus) -> Arc<MetricCtx> {
    MetricCtx::build(k, n, m).unwrap()
}

pub fn jet(ctx: &MetricCtx, coeffs: &[f64], base: &[f64]) -> Jet {
    Jet::new(Poly::new(ctx.space().clone(), coeffs.to_vec()).unwrap(), base.to_vec()).unwrap()
}

/// Concave piecewise-linear knot lists starting at the origin.
pub fn pl_knots() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (1usize..4, prop::collection::vec((0.05f64..1.0, 0.1f64..2.0), 3)).prop_map(|(segs, raw)| {
        let mut slopes: Vec<f64> = raw.iter().take(segs).map(|r| r.1).collect();
        slopes.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut knots = vec![(0.0, 0.0)];
        let (mut t, mut v) = (0.0, 0.0);
        for (i, s) in slopes.iter().enumerate() {
            t += raw[i].0;
            v += s * raw[i].0;
            knots.push((t, v));
        }
        knots
    })
}

pub fn modulus() -> impl Strategy<Value = Modulus> {
    prop_oneof![
        (0.2f64..=1.0).prop_map(power),
        Just(power(1.0)),
        pl_knots().prop_map(|k| Modulus::piecewise_linear(k).unwrap()),
        (0.3f64..1.0, 1e-3f64..0.1).prop_map(|(p, e)| power(p).with_regularization(e, 2.0).unwrap()),
    ]
}

/// `(k, n)` with both at most 2.
pub fn kn() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=2, 1usize..=2)
}

pub fn dim(k: usize, n: usize) -> usize {
    (1..=k).fold(1, |acc, i| acc * (n + i) / i)
}

pub fn coeffs(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, d)
}

pub fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

/// Graded-lex multiindices of total order ≤ k on ℝⁿ, built independently of the library.
pub fn multiindices(k: usize, n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for order in 0..=k as u32 {
        let mut level = Vec::new();
        gen(n, order, &mut Vec::new(), &mut level);
        out.extend(level);
    }
    out
}

fn gen(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() == n - 1 {
        prefix.push(left);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for a in (0..=left).rev() {
        prefix.push(a);
        gen(n, left - a, prefix, out);
        prefix.pop();
    }
}

/// `D^α` of `Σ c_δ x^δ` at `x`, by differentiating each monomial.
pub fn deriv(k: usize, n: usize, c: &[f64], alpha: &[u32], x: &[f64]) -> f64 {
    let mut total = 0.0;
    for (coef, delta) in c.iter().zip(multiindices(k, n)) {
        let mut term = *coef;
        for i in 0..n {
            if delta[i] < alpha[i] {
                term = 0.0;
                break;
            }
            for j in 0..alpha[i] {
                term *= (delta[i] - j) as f64;
            }
            term *= x[i].powi((delta[i] - alpha[i]) as i32);
        }
        total += term;
    }
    total
}

/// `φ(t)`: solve `s^{gap} ω̃(s) = t` by bisection and return `ω̃(s)`.
pub fn phi(m: &Modulus, gap: usize, t: f64) -> f64 {
    if gap == 0 || t == 0.0 {
        return t;
    }
    let w = |s: f64| s.powi(gap as i32) * m.eval(s).unwrap();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while w(hi) < t {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if w(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    m.eval(0.5 * (lo + hi)).unwrap()
}

/// `d′` computed from the definition with the oracles above.
pub fn d_prime(k: usize, n: usize, m: &Modulus, c0: &[f64], x0: &[f64], c1: &[f64], x1: &[f64]) -> f64 {
    let diff: Vec<f64> = c0.iter().zip(c1).map(|(a, b)| a - b).collect();
    let r: f64 = x0.iter().zip(x1).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let mut best = m.eval(r).unwrap();
    for alpha in multiindices(k, n) {
        let gap = k - alpha.iter().sum::<u32>() as usize;
        for x in [x0, x1] {
            best = best.max(phi(m, gap, deriv(k, n, &diff, &alpha, x).abs()));
        }
    }
    best
}

pub fn random_points(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    while pts.len() < m {
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        if pts.iter().all(|q| dist(q, &p) > 1e-2) {
            pts.push(p);
        }
    }
    pts
}

/// Box around `c` with a random half-width, cut by up to two halfspaces that
/// all keep a random point of the box.
pub fn random_polytope(rng: &mut ChaCha8Rng, d: usize) -> ConvexSetSpec {
    random_polytope_in(rng, d, 1.0)
}

/// [`random_polytope`] with centers in `[-spread, spread]ᵈ`.
pub fn random_polytope_in(rng: &mut ChaCha8Rng, d: usize, spread: f64) -> ConvexSetSpec {
    let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-spread..spread)).collect();
    let r = rng.gen_range(0.2..1.2);
    let lo: Vec<f64> = c.iter().map(|v| v - r).collect();
    let hi: Vec<f64> = c.iter().map(|v| v + r).collect();
    let keep: Vec<f64> = c.iter().map(|v| v + rng.gen_range(-r..r)).collect();
    let mut s = ConvexSetSpec::boxed(&lo, &hi);
    for _ in 0..rng.gen_range(0..3) {
        let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ak: f64 = a.iter().zip(&keep).map(|(x, y)| x * y).sum();
        s.push(a, ak + rng.gen_range(0.0..0.5) * r);
    }
    s
}

/// An affine flat of dimension `ell` through an interior point of a random box,
/// clipped by that box.
pub fn random_flat(rng: &mut ChaCha8Rng, d: usize, ell: usize) -> ConvexSetSpec {
    let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let r = rng.gen_range(0.2..1.2);
    let lo: Vec<f64> = c.iter().map(|v| v - r).collect();
    let hi: Vec<f64> = c.iter().map(|v| v + r).collect();
    let p: Vec<f64> = c.iter().map(|v| v + rng.gen_range(-0.5 * r..0.5 * r)).collect();
    let mut s = ConvexSetSpec::boxed(&lo, &hi);
    for _ in 0..d - ell {
        let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.iter().zip(&p).map(|(x, y)| x * y).sum();
        s.push_eq(a, b);
    }
    s.dim = Some(ell);
    s
}
