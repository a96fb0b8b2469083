//! Spanning trees with a high-degree vertex and measured distortion
//! `η = max ρ_T/ρ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::dist;

/// Largest point count for the exhaustive search over labeled trees.
pub const EXHAUSTIVE_MAX_POINTS: usize = 8;

/// Relative slack for the numerical check `ρ ≤ ρ_T`.
pub const DOMINATION_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TreeStrategy {
    /// Minimum spanning tree plus leaf reattachment.
    Heuristic,
    /// Every labeled tree (at most `EXHAUSTIVE_MAX_POINTS` points).
    Exhaustive,
    /// Heuristic, falling back to exhaustive search when degraded.
    Auto,
}

#[derive(Clone, Copy, Debug)]
pub struct TreeOptions {
    pub strategy: TreeStrategy,
    /// Distortion above which the result is flagged as degraded.
    pub eta_budget: Option<f64>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            strategy: TreeStrategy::Heuristic,
            eta_budget: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct DistortionTree {
    /// Sorted `(i, j)` pairs with `i < j`.
    pub edges: Vec<(usize, usize)>,
    pub eta_observed: f64,
    pub max_degree_vertex: usize,
    pub max_degree: usize,
    pub required_degree: usize,
    pub degraded: bool,
    /// `ρ ≤ ρ_T` held for every pair.
    pub dominates: bool,
    pub strategy_used: TreeStrategy,
}

impl DistortionTree {
    pub fn degrees(&self, m: usize) -> Vec<usize> {
        degrees(m, &self.edges)
    }

    /// Tree path distances between all pairs.
    pub fn path_distances(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        tree_distances(points.len(), &self.edges, &distance_matrix(points))
    }

    /// The components left after deleting `v`, each listed from its vertex
    /// adjacent to `v`, ordered by that neighbor.
    pub fn branches(&self, m: usize, v: usize) -> Vec<Vec<usize>> {
        let adj = adjacency(m, &self.edges);
        let mut out = Vec::new();
        for &y in &adj[v] {
            let mut comp = vec![y];
            let mut stack = vec![(y, v)];
            while let Some((u, parent)) = stack.pop() {
                for &w in &adj[u] {
                    if w != parent {
                        comp.push(w);
                        stack.push((w, u));
                    }
                }
            }
            out.push(comp);
        }
        out
    }
}

/// `⌈log₂ m⌉`.
pub fn ceil_log2(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

fn distance_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| dist(a, b)).collect())
        .collect()
}

fn adjacency(m: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
    }
    adj
}

fn degrees(m: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut d = vec![0; m];
    for &(a, b) in edges {
        d[a] += 1;
        d[b] += 1;
    }
    d
}

fn tree_distances(m: usize, edges: &[(usize, usize)], rho: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let adj = adjacency(m, edges);
    let mut out = vec![vec![0.0; m]; m];
    let mut stack = Vec::with_capacity(m);
    for s in 0..m {
        stack.clear();
        stack.push((s, usize::MAX));
        while let Some((u, parent)) = stack.pop() {
            for &w in &adj[u] {
                if w != parent {
                    out[s][w] = out[s][u] + rho[u][w];
                    stack.push((w, u));
                }
            }
        }
    }
    out
}

// (eta, dominates)
fn distortion(m: usize, edges: &[(usize, usize)], rho: &[Vec<f64>]) -> (f64, bool) {
    let t = tree_distances(m, edges, rho);
    let mut eta = 1.0f64;
    let mut dominates = true;
    for i in 0..m {
        for j in i + 1..m {
            eta = eta.max(t[i][j] / rho[i][j]);
            dominates &= rho[i][j] <= t[i][j] * (1.0 + DOMINATION_SLACK);
        }
    }
    (eta, dominates)
}

fn normalize(edges: &mut [(usize, usize)]) {
    for e in edges.iter_mut() {
        if e.0 > e.1 {
            *e = (e.1, e.0);
        }
    }
    edges.sort_unstable();
}

fn kruskal(m: usize, rho: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| rho[a.0][a.1].total_cmp(&rho[b.0][b.1]).then(a.cmp(b)));
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    for (i, j) in pairs {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            edges.push((i, j));
        }
    }
    edges
}

fn heuristic(m: usize, rho: &[Vec<f64>], required: usize) -> Vec<(usize, usize)> {
    let mut edges = kruskal(m, rho);
    loop {
        let deg = degrees(m, &edges);
        let max_deg = deg.iter().copied().max().unwrap_or(0);
        if max_deg >= required {
            return edges;
        }
        let adj = adjacency(m, &edges);
        // (eta, leaf, target, new edges)
        let mut best: Option<(f64, usize, usize, Vec<(usize, usize)>)> = None;
        for v in (0..m).filter(|&v| deg[v] == max_deg) {
            for l in (0..m).filter(|&l| deg[l] == 1 && l != v) {
                let u = adj[l][0];
                if u == v {
                    continue;
                }
                let mut cand: Vec<(usize, usize)> = edges
                    .iter()
                    .copied()
                    .filter(|&e| e != (l.min(u), l.max(u)))
                    .collect();
                cand.push((l.min(v), l.max(v)));
                normalize(&mut cand);
                let (eta, _) = distortion(m, &cand, rho);
                let better = match &best {
                    None => true,
                    Some((be, bl, bv, _)) => eta < *be || (eta == *be && (l, v) < (*bl, *bv)),
                };
                if better {
                    best = Some((eta, l, v, cand));
                }
            }
        }
        match best {
            Some((_, _, _, cand)) => edges = cand,
            // only a star has no movable leaf, and a star has degree m − 1
            None => return edges,
        }
    }
}

fn prufer_decode(m: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    let mut deg = vec![1usize; m];
    for &s in seq {
        deg[s] += 1;
    }
    let mut edges = Vec::with_capacity(m - 1);
    for &s in seq {
        let leaf = (0..m).find(|&v| deg[v] == 1).expect("a leaf exists");
        edges.push((leaf.min(s), leaf.max(s)));
        deg[leaf] -= 1;
        deg[s] -= 1;
    }
    let rest: Vec<usize> = (0..m).filter(|&v| deg[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    normalize(&mut edges);
    edges
}

fn exhaustive(m: usize, rho: &[Vec<f64>], required: usize) -> Vec<(usize, usize)> {
    if m == 2 {
        return vec![(0, 1)];
    }
    let len = m - 2;
    let mut seq = vec![0usize; len];
    let mut counts = vec![0usize; m];
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    loop {
        counts.iter_mut().for_each(|c| *c = 0);
        for &s in &seq {
            counts[s] += 1;
        }
        if counts.iter().any(|&c| c + 1 >= required) {
            let edges = prufer_decode(m, &seq);
            let (eta, _) = distortion(m, &edges, rho);
            if best.as_ref().is_none_or(|(b, _)| eta < *b) {
                best = Some((eta, edges));
            }
        }
        let mut i = len;
        loop {
            if i == 0 {
                return best.expect("the star qualifies").1;
            }
            i -= 1;
            seq[i] += 1;
            if seq[i] < m {
                break;
            }
            seq[i] = 0;
        }
    }
}

/// A spanning tree with a vertex of degree `≥ required_degree` (default
/// `⌈log₂ m⌉`), its distortion, and whether `ρ ≤ ρ_T` held numerically.
pub fn build_tree(points: &[Vec<f64>], required_degree: Option<usize>, opts: TreeOptions) -> Result<DistortionTree> {
    let m = points.len();
    if m < 2 {
        return Err(Error::Domain("a tree needs at least two points".into()));
    }
    let required = required_degree.unwrap_or_else(|| ceil_log2(m));
    if required > m - 1 {
        return Err(Error::Domain(format!(
            "required degree {required} exceeds m − 1 = {}",
            m - 1
        )));
    }
    let rho = distance_matrix(points);
    for i in 0..m {
        for j in i + 1..m {
            if rho[i][j] == 0.0 {
                return Err(Error::DuplicatePoint(i, j));
            }
        }
    }
    let over = |eta: f64| opts.eta_budget.is_some_and(|b| eta > b);
    let exhaustive_ok = m <= EXHAUSTIVE_MAX_POINTS;
    let (edges, used) = match opts.strategy {
        TreeStrategy::Exhaustive => {
            if !exhaustive_ok {
                return Err(Error::Domain(format!(
                    "exhaustive search is limited to {EXHAUSTIVE_MAX_POINTS} points, got {m}"
                )));
            }
            (exhaustive(m, &rho, required), TreeStrategy::Exhaustive)
        }
        TreeStrategy::Heuristic => (heuristic(m, &rho, required), TreeStrategy::Heuristic),
        TreeStrategy::Auto => {
            let h = heuristic(m, &rho, required);
            if exhaustive_ok && over(distortion(m, &h, &rho).0) {
                (exhaustive(m, &rho, required), TreeStrategy::Exhaustive)
            } else {
                (h, TreeStrategy::Heuristic)
            }
        }
    };
    let (eta, dominates) = distortion(m, &edges, &rho);
    let deg = degrees(m, &edges);
    let max_degree = deg.iter().copied().max().unwrap_or(0);
    let max_degree_vertex = deg.iter().position(|&d| d == max_degree).unwrap_or(0);
    Ok(DistortionTree {
        edges,
        eta_observed: eta,
        max_degree_vertex,
        max_degree,
        required_degree: required,
        degraded: max_degree < required || over(eta),
        dominates,
        strategy_used: used,
    })
}
