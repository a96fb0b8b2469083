//! Dense two-phase simplex with Bland's rule.
//!
//! The tableau code is generic over [`Scalar`], so the same pivoting runs in
//! `f64` (with row/column equilibration and tolerances) and in exact
//! `BigRational` arithmetic for certificate rechecks.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::tol::FEAS_TOL;

/// Smallest magnitude accepted as a pivot or as a negative reduced cost.
pub const PIVOT_TOL: f64 = 1e-9;
/// Row relaxation in the `f64` ratio test.
const HARRIS_TOL: f64 = 1e-9;
/// Pivots between tableau rebuilds in `f64`.
const REINVERT_EVERY: usize = 50;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

/// `minimize c·x` subject to rows, with each variable either `≥ 0` or free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    free: Vec<bool>,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Largest absolute violation of the original rows at `x`.
    pub max_violation: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub status: LpStatus,
    pub x: Vec<BigRational>,
}

impl LinearProgram {
    /// `num_vars` nonnegative variables with zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            free: vec![false; num_vars],
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.free.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, free: bool) -> usize {
        self.free.push(free);
        self.objective.push(0.0);
        self.free.len() - 1
    }

    pub fn set_free(&mut self, j: usize, free: bool) {
        self.free[j] = free;
    }

    pub fn set_objective(&mut self, j: usize, c: f64) {
        self.objective[j] = c;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.free.len()));
        self.rows.push(Row { coeffs, rel, rhs });
    }

    /// Fixes a variable to a value with an equality row.
    pub fn fix(&mut self, j: usize, v: f64) {
        self.add_row(vec![(j, 1.0)], Relation::Eq, v);
    }

    /// Largest absolute constraint violation of `x`, including sign bounds.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &f) in self.free.iter().enumerate() {
            if !f {
                worst = worst.max(-x[j]);
            }
        }
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match r.rel {
                Relation::Le => lhs - r.rhs,
                Relation::Ge => r.rhs - lhs,
                Relation::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    fn iteration_limit(&self) -> usize {
        20_000 + 50 * (self.rows.len() + 2 * self.free.len())
    }

    /// Floating-point solve. Variables fixed by one-variable equality rows
    /// are substituted out first; the rest is equilibrated.
    pub fn solve(&self) -> Result<LpSolution> {
        let Some((fixed, reduced, map)) = self.presolve() else {
            return Ok(self.infeasible(0));
        };
        if map.len() == self.free.len() {
            return self.solve_equilibrated();
        }
        let s = reduced.solve_equilibrated()?;
        if s.status != LpStatus::Optimal {
            return Ok(s);
        }
        let mut x: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
        for (r, &j) in map.iter().enumerate() {
            x[j] = s.x[r];
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            max_violation: self.max_violation(&x),
            x,
            objective,
            iterations: s.iterations,
        })
    }

    // Substitutes variables fixed by one-variable equalities until none are
    // left. `None` when a substituted row is violated.
    fn presolve(&self) -> Option<(Vec<Option<f64>>, LinearProgram, Vec<usize>)> {
        let nv = self.free.len();
        let mut fixed: Vec<Option<f64>> = vec![None; nv];
        let mut changed = true;
        while changed {
            changed = false;
            for r in self.rows.iter().filter(|r| r.rel == Relation::Eq) {
                let mut rest = r.rhs;
                let mut var: Option<(usize, f64)> = None;
                let mut several = false;
                for &(j, a) in &r.coeffs {
                    match fixed[j] {
                        Some(v) => rest -= a * v,
                        None if a == 0.0 => {}
                        None => match var {
                            None => var = Some((j, a)),
                            Some((k, b)) if k == j => var = Some((k, b + a)),
                            Some(_) => several = true,
                        },
                    }
                }
                if several {
                    continue;
                }
                if let Some((j, a)) = var {
                    if a == 0.0 {
                        continue;
                    }
                    let mut v = rest / a;
                    if !self.free[j] {
                        if v < -FEAS_TOL {
                            return None;
                        }
                        v = v.max(0.0);
                    }
                    fixed[j] = Some(v);
                    changed = true;
                }
            }
        }
        let map: Vec<usize> = (0..nv).filter(|&j| fixed[j].is_none()).collect();
        let mut index = vec![usize::MAX; nv];
        for (r, &j) in map.iter().enumerate() {
            index[j] = r;
        }
        let mut reduced = LinearProgram::new(map.len());
        for (r, &j) in map.iter().enumerate() {
            reduced.free[r] = self.free[j];
            reduced.objective[r] = self.objective[j];
        }
        for row in &self.rows {
            let mut rhs = row.rhs;
            let mut mag = row.rhs.abs();
            let mut coeffs = Vec::with_capacity(row.coeffs.len());
            for &(j, a) in &row.coeffs {
                match fixed[j] {
                    Some(v) => {
                        rhs -= a * v;
                        mag = mag.max((a * v).abs());
                    }
                    None => coeffs.push((index[j], a)),
                }
            }
            if coeffs.iter().all(|&(_, a)| a == 0.0) {
                let tol = FEAS_TOL * mag.max(1.0);
                let ok = match row.rel {
                    Relation::Le => 0.0 <= rhs + tol,
                    Relation::Ge => 0.0 >= rhs - tol,
                    Relation::Eq => rhs.abs() <= tol,
                };
                if !ok {
                    return None;
                }
                continue;
            }
            reduced.rows.push(Row {
                coeffs,
                rel: row.rel,
                rhs,
            });
        }
        Some((fixed, reduced, map))
    }

    fn solve_equilibrated(&self) -> Result<LpSolution> {
        let (cols, col_of) = self.columns();
        let ncols = cols;
        let mut dense: Vec<Vec<f64>> = Vec::with_capacity(self.rows.len());
        let mut rels = Vec::with_capacity(self.rows.len());
        let mut rhs = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let mut row = vec![0.0; ncols];
            for &(j, a) in &r.coeffs {
                let (p, neg) = col_of[j];
                row[p] += a;
                if let Some(q) = neg {
                    row[q] -= a;
                }
            }
            let m = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m == 0.0 {
                let ok = match r.rel {
                    Relation::Le => 0.0 <= r.rhs + FEAS_TOL,
                    Relation::Ge => 0.0 >= r.rhs - FEAS_TOL,
                    Relation::Eq => r.rhs.abs() <= FEAS_TOL,
                };
                if !ok {
                    return Ok(self.infeasible(0));
                }
                continue;
            }
            dense.push(row);
            rels.push(r.rel);
            rhs.push(r.rhs);
        }
        for v in self.objective.iter().chain(&rhs) {
            if !v.is_finite() {
                return Err(Error::Solver(format!("non-finite LP data {v}")));
            }
        }
        if dense.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Solver("non-finite LP coefficient".into()));
        }

        // equilibrate: rows, columns (geometric), rows
        let row_scale = |dense: &mut Vec<Vec<f64>>, rhs: &mut Vec<f64>| {
            for (row, b) in dense.iter_mut().zip(rhs.iter_mut()) {
                let m = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for v in row.iter_mut() {
                    *v /= m;
                }
                *b /= m;
            }
        };
        row_scale(&mut dense, &mut rhs);
        let mut col_scale = vec![1.0; ncols];
        for (j, s) in col_scale.iter_mut().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for row in &dense {
                let a = row[j].abs();
                if a > 0.0 {
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
            }
            if hi > 0.0 {
                *s = (lo * hi).sqrt();
            }
        }
        for row in dense.iter_mut() {
            for (v, s) in row.iter_mut().zip(&col_scale) {
                *v /= s;
            }
        }
        row_scale(&mut dense, &mut rhs);

        let mut c = vec![0.0; ncols];
        for (j, &cj) in self.objective.iter().enumerate() {
            let (p, neg) = col_of[j];
            c[p] = cj / col_scale[p];
            if let Some(q) = neg {
                c[q] = -cj / col_scale[q];
            }
        }
        let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if cmax > 0.0 {
            for v in c.iter_mut() {
                *v /= cmax;
            }
        }
        let bscale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));

        let (status, xs, iterations) =
            run_simplex::<f64>(&dense, &rels, &rhs, &c, bscale, self.iteration_limit())?;
        if status != LpStatus::Optimal {
            return Ok(LpSolution {
                status,
                x: Vec::new(),
                objective: f64::NAN,
                iterations,
                max_violation: f64::NAN,
            });
        }
        let scaled: Vec<f64> = xs.iter().zip(&col_scale).map(|(v, s)| v / s).collect();
        let x = self.recombine(&col_of, |p| scaled[p]);
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            status,
            max_violation: self.max_violation(&x),
            x,
            objective,
            iterations,
        })
    }

    /// Exact solve in rational arithmetic; the data are read as the exact
    /// binary values of the `f64` inputs.
    pub fn solve_exact(&self) -> Result<ExactSolution> {
        let (ncols, col_of) = self.columns();
        let q = |v: f64| -> Result<BigRational> {
            BigRational::from_f64(v).ok_or_else(|| Error::Solver(format!("non-finite LP data {v}")))
        };
        let mut dense = Vec::with_capacity(self.rows.len());
        let mut rels = Vec::with_capacity(self.rows.len());
        let mut rhs = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let mut row = vec![<BigRational as Zero>::zero(); ncols];
            for &(j, a) in &r.coeffs {
                let a = q(a)?;
                let (p, neg) = col_of[j];
                row[p] += &a;
                if let Some(n) = neg {
                    row[n] -= &a;
                }
            }
            if row.iter().all(Zero::is_zero) {
                let b = q(r.rhs)?;
                let ok = match r.rel {
                    Relation::Le => !b.is_negative(),
                    Relation::Ge => !b.is_positive(),
                    Relation::Eq => b.is_zero(),
                };
                if !ok {
                    return Ok(ExactSolution {
                        status: LpStatus::Infeasible,
                        x: Vec::new(),
                    });
                }
                continue;
            }
            dense.push(row);
            rels.push(r.rel);
            rhs.push(q(r.rhs)?);
        }
        let mut c = vec![<BigRational as Zero>::zero(); ncols];
        for (j, &cj) in self.objective.iter().enumerate() {
            let cj = q(cj)?;
            let (p, neg) = col_of[j];
            if let Some(n) = neg {
                c[n] = -cj.clone();
            }
            c[p] = cj;
        }
        let (status, xs, _) =
            run_simplex::<BigRational>(&dense, &rels, &rhs, &c, 1.0, usize::MAX)?;
        if status != LpStatus::Optimal {
            return Ok(ExactSolution { status, x: Vec::new() });
        }
        let x = (0..self.free.len())
            .map(|j| {
                let (p, neg) = col_of[j];
                match neg {
                    Some(n) => &xs[p] - &xs[n],
                    None => xs[p].clone(),
                }
            })
            .collect();
        Ok(ExactSolution { status, x })
    }

    // column index of each variable's positive part, and of its negative part if free
    fn columns(&self) -> (usize, Vec<(usize, Option<usize>)>) {
        let mut next = 0;
        let map = self
            .free
            .iter()
            .map(|&f| {
                let p = next;
                next += 1;
                let n = if f {
                    next += 1;
                    Some(p + 1)
                } else {
                    None
                };
                (p, n)
            })
            .collect();
        (next, map)
    }

    fn recombine(&self, col_of: &[(usize, Option<usize>)], val: impl Fn(usize) -> f64) -> Vec<f64> {
        col_of
            .iter()
            .map(|&(p, n)| val(p) - n.map_or(0.0, &val))
            .collect()
    }

    fn infeasible(&self, iterations: usize) -> LpSolution {
        LpSolution {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            objective: f64::NAN,
            iterations,
            max_violation: f64::NAN,
        }
    }
}

/// Arithmetic needed by the tableau.
pub trait Scalar: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Whether comparisons are exact; selects the pivoting rules.
    const EXACT: bool;
    fn is_exact_zero(&self) -> bool;
    fn is_below_zero(&self) -> bool;
    /// `|self|` as `f64`.
    fn magnitude(&self) -> f64;
    /// Usable as a pivot: `> PIVOT_TOL` for `f64`, `> 0` exactly.
    fn is_pos(&self) -> bool;
    /// Negative reduced cost.
    fn is_neg(&self) -> bool;
    /// Nonzero beyond tolerance.
    fn is_nonzero(&self) -> bool {
        self.is_pos() || self.neg().is_pos()
    }
    fn cmp_ratio(&self, o: &Self) -> Ordering;
    /// Phase-one optimum `value` means the system is infeasible.
    fn infeasible_residual(value: &Self, scale: f64) -> bool;
    /// Rounding cleanup for a right-hand side.
    fn clamp_rhs(&self) -> Self {
        self.clone()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_below_zero(&self) -> bool {
        *self < 0.0
    }
    fn is_pos(&self) -> bool {
        *self > PIVOT_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -PIVOT_TOL
    }
    fn cmp_ratio(&self, o: &Self) -> Ordering {
        let tol = 1e-12 * (1.0 + self.abs().max(o.abs()));
        if (self - o).abs() <= tol {
            Ordering::Equal
        } else if self < o {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
    fn infeasible_residual(value: &Self, scale: f64) -> bool {
        *value > FEAS_TOL * scale
    }
    fn clamp_rhs(&self) -> Self {
        self.max(0.0)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn magnitude(&self) -> f64 {
        rational_to_f64(&self.abs())
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
    fn is_below_zero(&self) -> bool {
        self.is_negative()
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn cmp_ratio(&self, o: &Self) -> Ordering {
        self.cmp(o)
    }
    fn infeasible_residual(value: &Self, _scale: f64) -> bool {
        value.is_positive()
    }
}

/// Approximate `f64` of a rational, saturating on overflow.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

struct Tableau<T> {
    m: usize,
    ncols: usize,
    w: usize,
    t: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> &T {
        &self.t[i * self.w + j]
    }

    fn rhs(&self, i: usize) -> &T {
        self.at(i, self.ncols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.w;
        let p = self.t[r * w + c].clone();
        for j in 0..w {
            if !self.t[r * w + j].is_exact_zero() {
                self.t[r * w + j] = self.t[r * w + j].div(&p);
            }
        }
        let prow: Vec<(usize, T)> = (0..w)
            .filter(|&j| !self.t[r * w + j].is_exact_zero())
            .map(|j| (j, self.t[r * w + j].clone()))
            .collect();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c].clone();
            if f.is_exact_zero() {
                continue;
            }
            for (j, v) in &prow {
                let cell = &mut self.t[i * w + j];
                *cell = cell.sub(&f.mul(v));
            }
            self.t[i * w + c] = T::zero();
        }
        self.basis[r] = c;
    }

    /// Rebuilds the tableau as `B⁻¹·orig` for the current basis and the
    /// reduced costs from `cost`. Keeps the old tableau if `B` is singular.
    fn reinvert(&mut self, orig: &[T], cost: &[T]) {
        let (m, w) = (self.m, self.w);
        let mut a = orig.to_vec();
        let mut used = vec![false; m];
        let mut basis = vec![0; m];
        for &c in &self.basis {
            let Some(r) = (0..m)
                .filter(|&i| !used[i])
                .max_by(|&i, &k| a[i * w + c].magnitude().total_cmp(&a[k * w + c].magnitude()))
            else {
                return;
            };
            if a[r * w + c].magnitude() < 1e-11 {
                return;
            }
            used[r] = true;
            basis[r] = c;
            let p = a[r * w + c].clone();
            for j in 0..w {
                a[r * w + j] = a[r * w + j].div(&p);
            }
            for i in 0..m {
                if i == r || a[i * w + c].is_exact_zero() {
                    continue;
                }
                let f = a[i * w + c].clone();
                for j in 0..w {
                    let v = a[r * w + j].clone();
                    if !v.is_exact_zero() {
                        a[i * w + j] = a[i * w + j].sub(&f.mul(&v));
                    }
                }
                a[i * w + c] = T::zero();
            }
        }
        self.t[..m * w].clone_from_slice(&a);
        self.basis = basis;
        self.price(cost);
    }

    /// Objective row `cost − c_B·T`; `cost` has one entry per column plus 0
    /// for the right-hand side.
    fn price(&mut self, cost: &[T]) {
        let (m, w) = (self.m, self.w);
        for j in 0..w {
            let mut v = cost[j].clone();
            for i in 0..m {
                let cb = &cost[self.basis[i]];
                if !cb.is_exact_zero() {
                    v = v.sub(&cb.mul(&self.t[i * w + j]));
                }
            }
            self.t[m * w + j] = v;
        }
    }

    /// Simplex iterations on the objective row (row `m`) over the first
    /// `allowed` columns. Exact arithmetic uses Bland's rule throughout;
    /// `f64` uses the most negative reduced cost, falls back to Bland's rule
    /// on degenerate streaks, prefers large pivots among near-minimal ratios,
    /// and periodically rebuilds the tableau from `orig`. Returns `false`
    /// when unbounded.
    fn run(&mut self, allowed: usize, orig: &[T], cost: &[T], iters: &mut usize, limit: usize) -> Result<bool> {
        let obj = self.m;
        let mut since_reinvert = 0usize;
        let mut degenerate = 0usize;
        loop {
            if !T::EXACT && since_reinvert >= REINVERT_EVERY {
                self.reinvert(orig, cost);
                since_reinvert = 0;
            }
            let entering = if T::EXACT || degenerate > DEGENERATE_STREAK {
                (0..allowed).find(|&j| self.at(obj, j).is_neg())
            } else {
                (0..allowed)
                    .filter(|&j| self.at(obj, j).is_neg())
                    .max_by(|&a, &b| {
                        self.at(obj, a)
                            .magnitude()
                            .total_cmp(&self.at(obj, b).magnitude())
                            .then(b.cmp(&a))
                    })
            };
            let Some(c) = entering else {
                if !T::EXACT && since_reinvert > 0 {
                    self.reinvert(orig, cost);
                    since_reinvert = 0;
                    if (0..allowed).any(|j| self.at(obj, j).is_neg()) {
                        continue;
                    }
                }
                return Ok(true);
            };
            let leaving = if T::EXACT { self.bland_row(c) } else { self.harris_row(c) };
            let Some(r) = leaving else {
                if !T::EXACT && since_reinvert > 0 {
                    self.reinvert(orig, cost);
                    since_reinvert = 0;
                    continue;
                }
                return Ok(false);
            };
            if self.rhs(r).clamp_rhs().magnitude() <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            since_reinvert += 1;
            *iters += 1;
            if *iters > limit {
                return Err(Error::Solver(format!(
                    "iteration limit {limit} reached ({} rows, {} columns)",
                    self.m, self.ncols
                )));
            }
        }
    }

    fn bland_row(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for i in 0..self.m {
            let a = self.at(i, c);
            if !a.is_pos() {
                continue;
            }
            let ratio = self.rhs(i).clamp_rhs().div(a);
            let better = match &best {
                None => true,
                Some((bi, br)) => match ratio.cmp_ratio(br) {
                    Ordering::Less => true,
                    Ordering::Equal => self.basis[i] < self.basis[*bi],
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    // two passes: the largest step allowed with rows relaxed by HARRIS_TOL,
    // then the largest pivot among rows whose ratio is within that step
    fn harris_row(&self, c: usize) -> Option<usize> {
        let mut theta = f64::INFINITY;
        for i in 0..self.m {
            let a = self.at(i, c);
            if a.is_pos() {
                theta = theta.min((self.rhs(i).clamp_rhs().magnitude() + HARRIS_TOL) / a.magnitude());
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, c);
            if !a.is_pos() {
                continue;
            }
            let a = a.magnitude();
            if self.rhs(i).clamp_rhs().magnitude() / a > theta {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, ba)) => a > ba || (a == ba && self.basis[i] < self.basis[bi]),
            };
            if better {
                best = Some((i, a));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Two-phase simplex for `min c·x, A x (rel) b, x ≥ 0`. Returns the status,
/// the structural solution and the pivot count.
fn run_simplex<T: Scalar>(
    a: &[Vec<T>],
    rels: &[Relation],
    b: &[T],
    c: &[T],
    bscale: f64,
    limit: usize,
) -> Result<(LpStatus, Vec<T>, usize)> {
    let m = a.len();
    let n = c.len();
    // orient rows so b ≥ 0
    let mut rows: Vec<(Vec<T>, Relation, T)> = Vec::with_capacity(m);
    for i in 0..m {
        if b[i].is_below_zero() {
            let rel = match rels[i] {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            rows.push((a[i].iter().map(T::neg).collect(), rel, b[i].neg()));
        } else {
            rows.push((a[i].clone(), rels[i], b[i].clone()));
        }
    }
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let ncols = n + n_slack + n_art;
    let w = ncols + 1;
    let mut t = vec![T::zero(); (m + 1) * w];
    let mut basis = vec![0; m];
    let (mut s, mut art) = (n, n + n_slack);
    for (i, (row, rel, rhs)) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[i * w + j] = v.clone();
        }
        t[i * w + ncols] = rhs.clone();
        match rel {
            Relation::Le => {
                t[i * w + s] = T::one();
                basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                t[i * w + s] = T::one().neg();
                s += 1;
                t[i * w + art] = T::one();
                basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                t[i * w + art] = T::one();
                basis[i] = art;
                art += 1;
            }
        }
    }
    let art_start = n + n_slack;
    // phase one objective: sum of artificials, reduced
    for i in 0..m {
        if basis[i] >= art_start {
            for j in 0..w {
                if j < art_start || j == ncols {
                    let v = t[m * w + j].sub(&t[i * w + j]);
                    t[m * w + j] = v;
                }
            }
        }
    }
    let orig = t[..m * w].to_vec();
    let mut tab = Tableau {
        m,
        ncols,
        w,
        t,
        basis,
    };
    let mut iters = 0;
    if n_art > 0 {
        let cost1: Vec<T> = (0..w)
            .map(|j| if (art_start..ncols).contains(&j) { T::one() } else { T::zero() })
            .collect();
        tab.run(ncols, &orig, &cost1, &mut iters, limit)?;
        let residual = tab.rhs(m).neg();
        if T::infeasible_residual(&residual, bscale) {
            return Ok((LpStatus::Infeasible, Vec::new(), iters));
        }
        // drive artificials out of the basis where possible
        for i in 0..m {
            if tab.basis[i] >= art_start {
                if let Some(j) = (0..art_start)
                    .filter(|&j| tab.at(i, j).is_nonzero())
                    .max_by(|&a, &b| tab.at(i, a).magnitude().total_cmp(&tab.at(i, b).magnitude()).then(b.cmp(&a)))
                {
                    tab.pivot(i, j);
                }
            }
        }
    }
    let cost2: Vec<T> = (0..w).map(|j| if j < n { c[j].clone() } else { T::zero() }).collect();
    tab.price(&cost2);
    if !tab.run(art_start, &orig, &cost2, &mut iters, limit)? {
        return Ok((LpStatus::Unbounded, Vec::new(), iters));
    }
    let mut x = vec![T::zero(); n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i).clone();
        }
    }
    Ok((LpStatus::Optimal, x, iters))
}
