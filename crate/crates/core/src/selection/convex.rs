//! Polytopes `{c : A c ≤ b, E c = f}` in coefficient space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus, Relation};
use crate::tol::FEAS_TOL;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Equalities {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// Halfspaces `⟨a_i, c⟩ ≤ b_i`, optional equalities, and an optional declared
/// affine dimension.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ConvexSetSpec {
    #[serde(rename = "A", default)]
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq: Option<Equalities>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl ConvexSetSpec {
    /// The whole space.
    pub fn whole() -> Self {
        Self::default()
    }

    /// `{p}`, with declared dimension 0.
    pub fn singleton(p: &[f64]) -> Self {
        let d = p.len();
        Self {
            eq: Some(Equalities {
                a: (0..d).map(|i| unit(d, i, 1.0)).collect(),
                b: p.to_vec(),
            }),
            dim: Some(0),
            ..Self::default()
        }
    }

    /// `{c : lo ≤ c ≤ hi}` componentwise; infinite bounds are dropped.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Self {
        let d = lo.len();
        let mut s = Self::default();
        for i in 0..d {
            if hi[i].is_finite() {
                s.push(unit(d, i, 1.0), hi[i]);
            }
            if lo[i].is_finite() {
                s.push(unit(d, i, -1.0), -lo[i]);
            }
        }
        s
    }

    pub fn push(&mut self, a: Vec<f64>, b: f64) {
        self.a.push(a);
        self.b.push(b);
    }

    pub fn push_eq(&mut self, a: Vec<f64>, b: f64) {
        let eq = self.eq.get_or_insert_with(Equalities::default);
        eq.a.push(a);
        eq.b.push(b);
    }

    fn eq_rows(&self) -> (&[Vec<f64>], &[f64]) {
        match &self.eq {
            Some(e) => (&e.a, &e.b),
            None => (&[], &[]),
        }
    }

    /// Shape and finiteness checks against ambient dimension `d`.
    pub fn check_shape(&self, d: usize, index: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(format!("set {index}: {msg}")));
        if self.a.len() != self.b.len() {
            return bad(format!("{} rows in A but {} entries in b", self.a.len(), self.b.len()));
        }
        let (ea, eb) = self.eq_rows();
        if ea.len() != eb.len() {
            return bad(format!("{} equality rows but {} right-hand sides", ea.len(), eb.len()));
        }
        for row in self.a.iter().chain(ea) {
            if row.len() != d {
                return bad(format!("row of length {} in ambient dimension {d}", row.len()));
            }
        }
        if self.a.iter().chain(ea).flatten().chain(&self.b).chain(eb).any(|v| !v.is_finite()) {
            return bad("non-finite entry".into());
        }
        if let Some(k) = self.dim {
            if k > d {
                return bad(format!("declared dimension {k} exceeds ambient dimension {d}"));
            }
        }
        Ok(())
    }

    /// Adds the set's rows over variables `offset .. offset + d`.
    pub fn add_rows(&self, lp: &mut LinearProgram, offset: usize) {
        for (row, &b) in self.a.iter().zip(&self.b) {
            lp.add_row(sparse(row, offset), Relation::Le, b);
        }
        let (ea, eb) = self.eq_rows();
        for (row, &b) in ea.iter().zip(eb) {
            lp.add_row(sparse(row, offset), Relation::Eq, b);
        }
    }

    /// Largest violation of the set's constraints at `c`.
    pub fn violation(&self, c: &[f64]) -> f64 {
        let dot = |a: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
        let mut v = 0.0f64;
        for (row, &b) in self.a.iter().zip(&self.b) {
            v = v.max(dot(row) - b);
        }
        let (ea, eb) = self.eq_rows();
        for (row, &b) in ea.iter().zip(eb) {
            v = v.max((dot(row) - b).abs());
        }
        v
    }

    fn lp(&self, d: usize) -> LinearProgram {
        let mut lp = LinearProgram::new(d);
        for j in 0..d {
            lp.set_free(j, true);
        }
        self.add_rows(&mut lp, 0);
        lp
    }

    /// A point of the set, or `None` if empty.
    pub fn find_point(&self, d: usize) -> Result<Option<Vec<f64>>> {
        let s = self.lp(d).solve()?;
        Ok(s.is_optimal().then_some(s.x))
    }

    /// Affine dimension: `d` minus the rank of the explicit equalities and
    /// the inequalities that hold with equality on the whole set.
    pub fn affine_dim(&self, d: usize) -> Result<usize> {
        let (ea, _) = self.eq_rows();
        let mut rows: Vec<Vec<f64>> = ea.to_vec();
        if !self.a.is_empty() && !self.has_interior_slack(d)? {
            for (i, row) in self.a.iter().enumerate() {
                let mut lp = self.lp(d);
                for (j, &v) in row.iter().enumerate() {
                    lp.set_objective(j, v);
                }
                let s = lp.solve()?;
                match s.status {
                    LpStatus::Optimal => {
                        if self.b[i] - s.objective <= FEAS_TOL * self.b[i].abs().max(1.0) {
                            rows.push(row.clone());
                        }
                    }
                    LpStatus::Unbounded => {}
                    LpStatus::Infeasible => return Err(Error::EmptySet { index: 0 }),
                }
            }
        }
        Ok(d - rank(&rows))
    }

    // whether one point satisfies every inequality strictly
    fn has_interior_slack(&self, d: usize) -> Result<bool> {
        let mut lp = LinearProgram::new(d + 1);
        for j in 0..d {
            lp.set_free(j, true);
        }
        let t = d;
        lp.set_objective(t, -1.0);
        lp.add_row(vec![(t, 1.0)], Relation::Le, 1.0);
        for (row, &b) in self.a.iter().zip(&self.b) {
            let norm = row.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            let mut r = sparse(row, 0);
            r.push((t, norm));
            lp.add_row(r, Relation::Le, b);
        }
        let (ea, eb) = self.eq_rows();
        for (row, &b) in ea.iter().zip(eb) {
            lp.add_row(sparse(row, 0), Relation::Eq, b);
        }
        let s = lp.solve()?;
        Ok(s.is_optimal() && s.x[t] > 1e-7)
    }

    /// Checks nonemptiness and the declared dimension; returns the dimension
    /// to use (declared if present, else computed).
    pub fn validate(&self, d: usize, index: usize) -> Result<usize> {
        self.check_shape(d, index)?;
        if self.find_point(d)?.is_none() {
            return Err(Error::EmptySet { index });
        }
        let actual = self.affine_dim(d).map_err(|e| match e {
            Error::EmptySet { .. } => Error::EmptySet { index },
            e => e,
        })?;
        match self.dim {
            Some(declared) if actual > declared => Err(Error::DimensionExceeded {
                index,
                declared,
                actual,
            }),
            Some(declared) => Ok(declared),
            None => Ok(actual),
        }
    }
}

fn unit(d: usize, i: usize, v: f64) -> Vec<f64> {
    let mut r = vec![0.0; d];
    r[i] = v;
    r
}

pub(crate) fn sparse(row: &[f64], offset: usize) -> Vec<(usize, f64)> {
    row.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, &v)| (offset + j, v))
        .collect()
}

/// Numerical rank by Gaussian elimination with partial pivoting.
pub fn rank(rows: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .filter_map(|r| {
            let s = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            (s > 0.0).then(|| r.iter().map(|v| v / s).collect())
        })
        .collect();
    let Some(cols) = m.first().map(Vec::len) else {
        return 0;
    };
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())) else {
            break;
        };
        if m[p][c].abs() <= 1e-9 {
            continue;
        }
        m.swap(r, p);
        for i in r + 1..m.len() {
            let f = m[i][c] / m[r][c];
            if f != 0.0 {
                for j in c..cols {
                    m[i][j] -= f * m[r][j];
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}
