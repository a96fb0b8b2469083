//! Whitney–Glaeser conditions and the Lipschitz–Orlicz norm of jet fields
//! on finite sets.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{dist, Jet, Multiindex, Poly};
use crate::metric::{MetricCtx, MetricInterval};

/// Coordinates closer than this (in every component) count as one point.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// A polynomial `P_x` attached to each point `x` of a finite set `S`.
#[derive(Clone, Debug)]
pub struct JetField {
    ctx: Arc<MetricCtx>,
    points: Vec<Vec<f64>>,
    polys: Vec<Poly>,
}

impl JetField {
    pub fn new(ctx: Arc<MetricCtx>, points: Vec<Vec<f64>>, polys: Vec<Poly>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("a jet field needs at least one point".into()));
        }
        if points.len() != polys.len() {
            return Err(Error::Domain(format!(
                "{} points but {} polynomials",
                points.len(),
                polys.len()
            )));
        }
        for (x, p) in points.iter().zip(&polys) {
            ctx.space().check_point(x)?;
            ctx.space().check_same(p.space())?;
        }
        check_distinct(&points)?;
        Ok(Self { ctx, points, polys })
    }

    /// Builds a field from raw coefficient vectors.
    pub fn from_coeffs(ctx: Arc<MetricCtx>, points: Vec<Vec<f64>>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let polys = coeffs
            .into_iter()
            .map(|c| Poly::new(ctx.space().clone(), c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ctx, points, polys)
    }

    pub fn ctx(&self) -> &Arc<MetricCtx> {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    pub fn jet(&self, i: usize) -> Jet {
        Jet {
            poly: self.polys[i].clone(),
            base: self.points[i].clone(),
        }
    }

    /// Every polynomial multiplied by `c`.
    pub fn scale(&self, c: f64) -> Self {
        Self {
            ctx: self.ctx.clone(),
            points: self.points.clone(),
            polys: self.polys.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// The field restricted to the given indices, in that order.
    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            self.ctx.clone(),
            idx.iter().map(|&i| self.points[i].clone()).collect(),
            idx.iter().map(|&i| self.polys[i].clone()).collect(),
        )
    }
}

pub(crate) fn check_distinct(points: &[Vec<f64>]) -> Result<()> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let same = points[i]
                .iter()
                .zip(&points[j])
                .all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL);
            if same {
                return Err(Error::DuplicatePoint(i, j));
            }
        }
    }
    Ok(())
}

/// The minimal `λ` in the pairwise condition, with the pair and derivative
/// attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct LambdaStar {
    pub value: f64,
    pub pair: Option<(usize, usize)>,
    pub alpha: Option<Multiindex>,
}

impl LambdaStar {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct PairMax {
    ratio: f64,
    pair: (usize, usize),
    alpha: usize,
}

impl PairMax {
    // larger ratio wins, ties go to the lower pair
    fn better(self, o: Self) -> Self {
        if o.ratio > self.ratio || (o.ratio == self.ratio && (o.pair, o.alpha) < (self.pair, self.alpha)) {
            o
        } else {
            self
        }
    }
}

// D^α P_j(x_i) for every i, j
fn cross_derivatives(field: &JetField) -> Vec<Vec<Vec<f64>>> {
    let space = field.ctx.space();
    field
        .points
        .par_iter()
        .map(|x| {
            let mono = space.monomials_at(x);
            field
                .polys
                .iter()
                .map(|p| space.derivatives_with(p.coeffs(), &mono))
                .collect()
        })
        .collect()
}

/// `max_{x≠y, α} max{|D^α(P_x−P_y)(x)|, |D^α(P_x−P_y)(y)|} / (‖x−y‖^{k−|α|} ω(‖x−y‖))`,
/// which is `0` when `S` has one point and `+∞` if some weight vanishes under
/// a nonzero difference.
pub fn wg_lambda_star(field: &JetField) -> LambdaStar {
    let m = field.len();
    if m < 2 {
        return LambdaStar {
            value: 0.0,
            pair: None,
            alpha: None,
        };
    }
    let ctx = &field.ctx;
    let dim = ctx.space().dim();
    let d = cross_derivatives(field);
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let best = pairs
        .par_iter()
        .map(|&(i, j)| {
            let r = dist(&field.points[i], &field.points[j]);
            let mut best = PairMax {
                ratio: 0.0,
                pair: (i, j),
                alpha: 0,
            };
            for a in 0..dim {
                let num = (d[i][i][a] - d[i][j][a]).abs().max((d[j][i][a] - d[j][j][a]).abs());
                if num == 0.0 {
                    continue;
                }
                let w = ctx.dp_weight(a, r);
                let ratio = if w > 0.0 { num / w } else { f64::INFINITY };
                best = best.better(PairMax {
                    ratio,
                    pair: (i, j),
                    alpha: a,
                });
            }
            best
        })
        .reduce_with(PairMax::better)
        .expect("at least one pair");
    if best.ratio == 0.0 {
        return LambdaStar {
            value: 0.0,
            pair: None,
            alpha: None,
        };
    }
    LambdaStar {
        value: best.ratio,
        pair: Some(best.pair),
        alpha: Some(ctx.space().multiindices()[best.alpha].clone()),
    }
}

/// `max_{x∈S, |α|≤k} |D^α P_x(x)|`.
pub fn wg_sup_part(field: &JetField) -> f64 {
    let space = field.ctx.space();
    field
        .points
        .iter()
        .zip(&field.polys)
        .flat_map(|(x, p)| space.derivatives(p.coeffs(), x))
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Norms of a jet field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct FieldNormReport {
    pub sup_part: f64,
    pub lambda_star: f64,
    /// Encloses the norm taken with respect to the chain metric.
    pub lo_interval: MetricInterval,
    pub lo_star: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub worst_alpha: Option<Multiindex>,
}

/// Since each `φ_α` is increasing, `d′_ω(λ⁻¹∘T_x, λ⁻¹∘T_y) ≤ ω(‖x−y‖)` for all
/// pairs is exactly the pairwise condition at `λ`, so `lambda_star` is the
/// `d′_ω` version of the norm and `[λ*/eⁿ, λ*]` encloses the `d_ω` version.
pub fn lipschitz_orlicz_norm(field: &JetField) -> FieldNormReport {
    let ls = wg_lambda_star(field);
    let sup_part = wg_sup_part(field);
    let e_n = field.ctx.constants().e_n;
    FieldNormReport {
        sup_part,
        lambda_star: ls.value,
        lo_interval: MetricInterval {
            lower: ls.value / e_n,
            upper: ls.value,
        },
        lo_star: sup_part + ls.value,
        worst_pair: ls.pair,
        worst_alpha: ls.alpha,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Witness {
    /// `|D^α P_x(x)| > λ`.
    Nd { point: usize, alpha: Multiindex },
    /// The pairwise bound fails for `(x, y)` at `α`.
    Dp { pair: (usize, usize), alpha: Multiindex },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct FeasibilityReport {
    pub nd_ok: bool,
    pub dp_ok: bool,
    /// First violated constraint: pointwise ones in point order, then pairs
    /// in lexicographic order, each by basis index of `α`.
    pub witness: Option<Witness>,
}

/// Checks both Whitney–Glaeser conditions at `λ`.
pub fn wg_feasibility_check(field: &JetField, lambda: f64) -> Result<FeasibilityReport> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("λ must be ≥ 0, got {lambda}")));
    }
    let space = field.ctx.space();
    let mi = space.multiindices();
    let d = cross_derivatives(field);
    let m = field.len();
    let mut witness = None;
    let mut nd_ok = true;
    for i in 0..m {
        if let Some(a) = d[i][i].iter().position(|v| v.abs() > lambda) {
            nd_ok = false;
            witness.get_or_insert(Witness::Nd {
                point: i,
                alpha: mi[a].clone(),
            });
            break;
        }
    }
    let mut dp_ok = true;
    'pairs: for i in 0..m {
        for j in i + 1..m {
            let r = dist(&field.points[i], &field.points[j]);
            for a in 0..space.dim() {
                let num = (d[i][i][a] - d[i][j][a]).abs().max((d[j][i][a] - d[j][j][a]).abs());
                if num == 0.0 {
                    continue;
                }
                let w = field.ctx.dp_weight(a, r);
                let ratio = if w > 0.0 { num / w } else { f64::INFINITY };
                if ratio > lambda {
                    dp_ok = false;
                    witness.get_or_insert(Witness::Dp {
                        pair: (i, j),
                        alpha: mi[a].clone(),
                    });
                    break 'pairs;
                }
            }
        }
    }
    Ok(FeasibilityReport { nd_ok, dp_ok, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::Modulus;

    fn example() -> JetField {
        // k = 1, n = 1, ω(t) = t, S = {0, 1}, P₀ ≡ 0, P₁(t) = t − 1
        let ctx = MetricCtx::build(1, 1, Modulus::power(1.0).unwrap()).unwrap();
        JetField::from_coeffs(ctx, vec![vec![0.0], vec![1.0]], vec![vec![0.0, 0.0], vec![-1.0, 1.0]]).unwrap()
    }

    #[test]
    fn example_values() {
        let f = example();
        let ls = wg_lambda_star(&f);
        assert_eq!(ls.value, 1.0);
        assert_eq!(ls.pair, Some((0, 1)));
        assert_eq!(wg_sup_part(&f), 1.0);
        let rep = lipschitz_orlicz_norm(&f);
        assert_eq!(rep.lambda_star, 1.0);
        assert!((rep.lo_interval.lower - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(rep.lo_star, 2.0);
    }

    #[test]
    fn constant_and_singleton_fields() {
        let ctx = MetricCtx::build(2, 2, Modulus::power(0.5).unwrap()).unwrap();
        let c = vec![1.0, 0.5, -0.5, 0.0, 2.0, 1.0];
        let f = JetField::from_coeffs(
            ctx.clone(),
            vec![vec![0.0, 0.0], vec![0.3, 0.1], vec![0.9, 0.7]],
            vec![c.clone(), c.clone(), c.clone()],
        )
        .unwrap();
        let rep = lipschitz_orlicz_norm(&f);
        assert_eq!(rep.lambda_star, 0.0);
        assert_eq!((rep.lo_interval.lower, rep.lo_interval.upper), (0.0, 0.0));
        assert_eq!(rep.lo_star, rep.sup_part);
        let single = f.restrict(&[1]).unwrap();
        assert_eq!(wg_lambda_star(&single).value, 0.0);

        let ones = JetField::from_coeffs(ctx, vec![vec![0.0, 0.0]], vec![vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(wg_sup_part(&ones), 1.0);
    }

    #[test]
    fn feasibility_checks() {
        let f = example();
        let rep = lipschitz_orlicz_norm(&f);
        let ok = wg_feasibility_check(&f, rep.lo_star).unwrap();
        assert!(ok.nd_ok && ok.dp_ok && ok.witness.is_none());
        let exact = wg_feasibility_check(&f, rep.lambda_star).unwrap();
        assert!(exact.dp_ok);
        let zero = wg_feasibility_check(&f, 0.0).unwrap();
        assert!(!zero.nd_ok && !zero.dp_ok);
        assert!(zero.witness.is_some());
        let below = wg_feasibility_check(&f, 0.999 * rep.lambda_star).unwrap();
        assert!(!below.dp_ok);
        match below.witness {
            Some(Witness::Nd { .. }) => {}
            other => panic!("{other:?}"),
        }
        // S = {0, 0.5}, P₁(t) = t − 0.5: sup part 1, ratios 0.5/0.25 and 1/0.5
        let ctx = f.ctx().clone();
        let near = JetField::from_coeffs(ctx, vec![vec![0.0], vec![0.5]], vec![vec![0.0, 0.0], vec![-0.5, 1.0]]).unwrap();
        assert_eq!(wg_lambda_star(&near).value, 2.0);
        let below = wg_feasibility_check(&near, 1.5).unwrap();
        assert!(below.nd_ok);
        match below.witness {
            Some(Witness::Dp { pair: (0, 1), .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicates_rejected() {
        let ctx = MetricCtx::build(1, 1, Modulus::power(1.0).unwrap()).unwrap();
        let err = JetField::from_coeffs(ctx, vec![vec![0.5], vec![0.5 + 1e-13]], vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert!(matches!(err, Err(Error::DuplicatePoint(0, 1))));
    }

    #[test]
    fn scaling_is_homogeneous() {
        let f = example();
        assert_eq!(wg_lambda_star(&f.scale(3.0)).value, 3.0);
        assert_eq!(wg_sup_part(&f.scale(3.0)), 3.0);
    }
}
