//! Assembly of selection LPs over a subset of an instance's points.

use crate::error::Result;
use crate::jets::dist;
use crate::lp::{LinearProgram, LpSolution, Relation};

use super::Instance;

/// How the right-hand side of a pairwise row scales.
#[derive(Clone, Copy, Debug)]
pub enum Scale {
    /// `|D^α(P_x − P_y)(z)| ≤ λ W` for a fixed `λ`.
    Fixed(f64),
    /// `|D^α(P_x − P_y)(z)| ≤ factor · v · W` for an LP variable `v`.
    Var { var: usize, factor: f64 },
}

pub struct SelectionLp<'a> {
    inst: &'a Instance,
    /// Global point indices, in local order.
    nodes: Vec<usize>,
    pub lp: LinearProgram,
    // functionals[local][α]: sparse row of D^α evaluated at that point
    functionals: Vec<Vec<Vec<(usize, f64)>>>,
}

impl<'a> SelectionLp<'a> {
    /// Free coefficient variables for each node plus its membership rows.
    pub fn new(inst: &'a Instance, nodes: &[usize]) -> Self {
        let dim = inst.dim();
        let mut lp = LinearProgram::new(nodes.len() * dim);
        for j in 0..lp.num_vars() {
            lp.set_free(j, true);
        }
        for (l, &g) in nodes.iter().enumerate() {
            inst.sets[g].add_rows(&mut lp, l * dim);
        }
        let space = inst.ctx.space();
        let functionals = nodes
            .iter()
            .map(|&g| {
                let mono = space.monomials_at(&inst.points[g]);
                (0..dim)
                    .map(|a| {
                        space
                            .derivative_functional(a, &mono)
                            .into_iter()
                            .enumerate()
                            .filter(|(_, v)| *v != 0.0)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            inst,
            nodes: nodes.to_vec(),
            lp,
            functionals,
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    fn var(&self, local: usize, t: usize) -> usize {
        local * self.inst.dim() + t
    }

    /// A nonnegative scale variable with objective coefficient `cost`.
    pub fn add_scale_var(&mut self, cost: f64) -> usize {
        let v = self.lp.add_var(false);
        self.lp.set_objective(v, cost);
        v
    }

    /// The pairwise condition between local nodes `i` and `j` at every `α`,
    /// evaluated at both base points.
    pub fn add_pair(&mut self, i: usize, j: usize, scale: Scale) {
        let ctx = &self.inst.ctx;
        let r = dist(&self.inst.points[self.nodes[i]], &self.inst.points[self.nodes[j]]);
        for a in 0..self.inst.dim() {
            let w = ctx.dp_weight(a, r);
            for z in [i, j] {
                let f = &self.functionals[z][a];
                for sign in [1.0, -1.0] {
                    let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * f.len() + 1);
                    row.extend(f.iter().map(|&(t, v)| (self.var(i, t), sign * v)));
                    row.extend(f.iter().map(|&(t, v)| (self.var(j, t), -sign * v)));
                    match scale {
                        Scale::Fixed(lambda) => self.lp.add_row(row, Relation::Le, lambda * w),
                        Scale::Var { var, factor } => {
                            row.push((var, -factor * w));
                            self.lp.add_row(row, Relation::Le, 0.0);
                        }
                    }
                }
            }
        }
    }

    pub fn add_all_pairs(&mut self, scale: Scale) {
        let m = self.nodes.len();
        for i in 0..m {
            for j in i + 1..m {
                self.add_pair(i, j, scale);
            }
        }
    }

    /// `|D^α P_x(x)| ≤ bound` for every node and `α`.
    pub fn add_sup_bound(&mut self, bound: f64) {
        for l in 0..self.nodes.len() {
            for a in 0..self.inst.dim() {
                let row: Vec<(usize, f64)> = self.functionals[l][a]
                    .iter()
                    .map(|&(t, v)| (self.var(l, t), v))
                    .collect();
                self.lp.add_row(row.clone(), Relation::Le, bound);
                self.lp.add_row(row, Relation::Ge, -bound);
            }
        }
    }

    /// Fixes a node's coefficients.
    pub fn pin(&mut self, local: usize, coeffs: &[f64]) {
        for (t, &v) in coeffs.iter().enumerate() {
            let j = self.var(local, t);
            self.lp.fix(j, v);
        }
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.lp.solve()
    }

    /// Coefficients of each node from a solution vector.
    pub fn coeffs(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let dim = self.inst.dim();
        (0..self.nodes.len())
            .map(|l| x[l * dim..(l + 1) * dim].to_vec())
            .collect()
    }
}
