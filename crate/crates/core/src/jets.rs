//! Polynomials of degree ≤ k in n variables, k-jets and derivative evaluation.
//!
//! Polynomials are stored as monomial coefficients `P(y) = Σ c_α y^α` over a
//! graded-lexicographic multiindex basis: by total degree, then by exponent
//! vectors in descending lexicographic order. For `n = 2, k = 2` this is
//! `1, y₁, y₂, y₁², y₁y₂, y₂²`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::moduli::powi;

/// Largest supported polynomial degree (factorial tables are exact up to here).
pub const MAX_K: usize = 8;
/// Largest supported ambient dimension.
pub const MAX_N: usize = 16;
/// Largest supported `dim P_k`.
pub const MAX_DIM: usize = 2048;

#[derive(
    Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize, schemars::JsonSchema,
)]
#[serde(transparent)]
pub struct Multiindex(pub Vec<u32>);

impl Multiindex {
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// `α!` as an exact integer.
    pub fn factorial(&self) -> u64 {
        self.0.iter().map(|&a| FACTORIALS[a as usize]).product()
    }

    fn dominates(&self, other: &Multiindex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

impl fmt::Display for Multiindex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

const FACTORIALS: [u64; MAX_K + 1] = [1, 1, 2, 6, 24, 120, 720, 5040, 40320];

/// `C(n + k, k)` computed exactly; `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n.checked_sub(k)?);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

#[derive(Clone, Debug)]
struct DerivTerm {
    gamma: usize,
    delta: usize,
    weight: f64,
}

/// The space `P_k` on `ℝⁿ` with its canonical basis.
#[derive(Debug)]
pub struct Space {
    k: usize,
    n: usize,
    multiindices: Vec<Multiindex>,
    orders: Vec<usize>,
    index: HashMap<Multiindex, usize>,
    // deriv[α] lists (γ, γ−α, γ!/(γ−α)!) for γ ≥ α
    deriv: Vec<Vec<DerivTerm>>,
    // sum_idx[α][β] = index of α+β when |α+β| ≤ k
    sum_idx: Vec<Vec<Option<usize>>>,
}

impl Space {
    pub fn new(k: usize, n: usize) -> Result<Arc<Self>> {
        if k == 0 || n == 0 {
            return Err(Error::Domain(format!("need k ≥ 1 and n ≥ 1, got k = {k}, n = {n}")));
        }
        if k > MAX_K || n > MAX_N {
            return Err(Error::Domain(format!(
                "k = {k}, n = {n} outside supported range k ≤ {MAX_K}, n ≤ {MAX_N}"
            )));
        }
        let dim = binomial((n + k) as u64, k as u64)
            .filter(|&d| d as usize <= MAX_DIM)
            .ok_or_else(|| Error::Domain(format!("dim P_k too large for k = {k}, n = {n}")))?
            as usize;

        let mut multiindices = Vec::with_capacity(dim);
        for d in 0..=k {
            let mut cur = vec![0u32; n];
            compositions(d as u32, 0, &mut cur, &mut multiindices);
        }
        debug_assert_eq!(multiindices.len(), dim);
        let orders = multiindices.iter().map(Multiindex::order).collect();
        let index: HashMap<_, _> = multiindices
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();

        let mut deriv = Vec::with_capacity(dim);
        for alpha in &multiindices {
            let mut terms = Vec::new();
            for (gi, gamma) in multiindices.iter().enumerate() {
                if !gamma.dominates(alpha) {
                    continue;
                }
                let delta = Multiindex(gamma.0.iter().zip(&alpha.0).map(|(g, a)| g - a).collect());
                let weight = gamma.factorial() / delta.factorial();
                terms.push(DerivTerm {
                    gamma: gi,
                    delta: index[&delta],
                    weight: weight as f64,
                });
            }
            deriv.push(terms);
        }
        let sum_idx = multiindices
            .iter()
            .map(|a| {
                multiindices
                    .iter()
                    .map(|b| {
                        let s = Multiindex(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                        index.get(&s).copied()
                    })
                    .collect()
            })
            .collect();

        Ok(Arc::new(Self {
            k,
            n,
            multiindices,
            orders,
            index,
            deriv,
            sum_idx,
        }))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.multiindices.len()
    }

    pub fn multiindices(&self) -> &[Multiindex] {
        &self.multiindices
    }

    /// `|α|` for the basis element at `idx`.
    pub fn order(&self, idx: usize) -> usize {
        self.orders[idx]
    }

    pub fn index_of(&self, alpha: &Multiindex) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Index of `α + β`, if `|α + β| ≤ k`.
    pub fn sum_index(&self, alpha: usize, beta: usize) -> Option<usize> {
        self.sum_idx[alpha][beta]
    }

    pub fn same_as(&self, other: &Space) -> bool {
        self.k == other.k && self.n == other.n
    }

    pub(crate) fn check_same(&self, other: &Space) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                k1: self.k,
                n1: self.n,
                k2: other.k,
                n2: other.n,
            })
        }
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Domain(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// All monomials `x^δ` in basis order.
    pub fn monomials_at(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.monomials_into(x, &mut out);
        out
    }

    /// [`Space::monomials_at`] into a reused buffer.
    pub fn monomials_into(&self, x: &[f64], out: &mut Vec<f64>) {
        let mut pows = [[1.0f64; MAX_K + 1]; MAX_N];
        for (i, &xi) in x.iter().enumerate() {
            for e in 1..=self.k {
                pows[i][e] = pows[i][e - 1] * xi;
            }
        }
        out.clear();
        out.extend(
            self.multiindices
                .iter()
                .map(|m| m.0.iter().enumerate().map(|(i, &e)| pows[i][e as usize]).product::<f64>()),
        );
    }

    /// `D^α P(x)` for every basis `α`, given coefficients and precomputed monomials.
    pub fn derivatives_with(&self, coeffs: &[f64], monomials: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.derivatives_into(coeffs, monomials, &mut out);
        out
    }

    /// [`Space::derivatives_with`] into a reused buffer.
    pub fn derivatives_into(&self, coeffs: &[f64], monomials: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.deriv.iter().map(|terms| {
            terms
                .iter()
                .map(|t| coeffs[t.gamma] * t.weight * monomials[t.delta])
                .sum::<f64>()
        }));
    }

    /// `D^α P(x)` for every basis `α`.
    pub fn derivatives(&self, coeffs: &[f64], x: &[f64]) -> Vec<f64> {
        self.derivatives_with(coeffs, &self.monomials_at(x))
    }

    /// Coefficient row `L` with `D^α P(x) = ⟨L, c⟩`; linear in the coefficients.
    pub fn derivative_functional(&self, alpha: usize, monomials: &[f64]) -> Vec<f64> {
        let mut row = vec![0.0; self.dim()];
        for t in &self.deriv[alpha] {
            row[t.gamma] = t.weight * monomials[t.delta];
        }
        row
    }
}

fn compositions(rem: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Multiindex>) {
    let n = cur.len();
    if pos == n - 1 {
        cur[pos] = rem;
        out.push(Multiindex(cur.clone()));
        return;
    }
    for a in (0..=rem).rev() {
        cur[pos] = a;
        compositions(rem - a, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// A polynomial in `P_k`.
#[derive(Clone, Debug)]
pub struct Poly {
    space: Arc<Space>,
    coeffs: Vec<f64>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.space.same_as(&other.space) && self.coeffs == other.coeffs
    }
}

impl Poly {
    pub fn new(space: Arc<Space>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::Domain(format!(
                "polynomial has {} coefficients, dim P_k = {}",
                coeffs.len(),
                space.dim()
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn zero(space: Arc<Space>) -> Self {
        let d = space.dim();
        Self {
            space,
            coeffs: vec![0.0; d],
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let mono = self.space.monomials_at(y);
        self.coeffs.iter().zip(&mono).map(|(c, m)| c * m).sum()
    }

    pub fn scale(&self, lambda: f64) -> Poly {
        Poly {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| lambda * c).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.space.check_same(&other.space)?;
        Ok(Poly {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        self.space.check_same(&other.space)?;
        Ok(Poly {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    /// `D^α P(x)`.
    pub fn derivative(&self, alpha: &Multiindex, x: &[f64]) -> Result<f64> {
        self.space.check_point(x)?;
        if alpha.0.len() != self.space.n() {
            return Err(Error::Domain(format!("multiindex {alpha} has wrong length")));
        }
        if alpha.order() > self.space.k() {
            return Err(Error::Domain(format!(
                "|α| = {} exceeds k = {}",
                alpha.order(),
                self.space.k()
            )));
        }
        let ai = self.space.index_of(alpha).expect("|α| ≤ k is in the basis");
        let mono = self.space.monomials_at(x);
        Ok(self.space.deriv[ai]
            .iter()
            .map(|t| self.coeffs[t.gamma] * t.weight * mono[t.delta])
            .sum())
    }

    /// All derivatives `D^α P(x)` in basis order.
    pub fn derivatives(&self, x: &[f64]) -> Vec<f64> {
        self.space.derivatives(&self.coeffs, x)
    }

    /// Coefficients of `P` in powers of `(y − a)`: `c'_β = D^β P(a) / β!`.
    pub fn taylor_shift(&self, a: &[f64]) -> Result<Poly> {
        self.space.check_point(a)?;
        let d = self.derivatives(a);
        let coeffs = d
            .iter()
            .zip(&self.space.multiindices)
            .map(|(v, beta)| v / beta.factorial() as f64)
            .collect();
        Ok(Poly {
            space: self.space.clone(),
            coeffs,
        })
    }

    /// Right-hand side of `|D^α Q(b)| ≤ Σ_{|β|≤k−|α|} |D^{α+β}Q(a)| ‖b−a‖^{|β|} / β!`.
    pub fn derivative_transfer_bound(&self, alpha: &Multiindex, a: &[f64], b: &[f64]) -> Result<f64> {
        self.space.check_point(a)?;
        self.space.check_point(b)?;
        let ai = self
            .space
            .index_of(alpha)
            .filter(|_| alpha.0.len() == self.space.n())
            .ok_or_else(|| Error::Domain(format!("multiindex {alpha} not in P_k")))?;
        let d = self.derivatives(a);
        let r = dist(a, b);
        let mut total = 0.0;
        for (bi, beta) in self.space.multiindices.iter().enumerate() {
            if let Some(s) = self.space.sum_index(ai, bi) {
                total += d[s].abs() * powi(r, beta.order()) / beta.factorial() as f64;
            }
        }
        Ok(total)
    }
}

/// A k-jet `(P, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub poly: Poly,
    pub base: Vec<f64>,
}

impl Jet {
    pub fn new(poly: Poly, base: Vec<f64>) -> Result<Self> {
        poly.space.check_point(&base)?;
        Ok(Self { poly, base })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.poly.space
    }

    /// `λ ∘ (P, x) = (λP, x)`.
    pub fn scale(&self, lambda: f64) -> Jet {
        Jet {
            poly: self.poly.scale(lambda),
            base: self.base.clone(),
        }
    }
}

/// Euclidean distance.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Constants appearing in the metric estimates and the selection construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub k: usize,
    pub n: usize,
    pub dim: usize,
    /// `eⁿ`
    pub e_n: f64,
    /// `e^{2n}`
    pub e_2n: f64,
    /// `e^{3n}`
    pub e_3n: f64,
    /// `3^{k+1} e^{3n}`, the relaxation scale for the neighbor sets.
    pub ts: f64,
}

impl Constants {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 || n == 0 || k > MAX_K || n > MAX_N {
            return Err(Error::Domain(format!("unsupported (k, n) = ({k}, {n})")));
        }
        let dim = binomial((n + k) as u64, k as u64)
            .ok_or_else(|| Error::Domain("dim P_k overflows".into()))? as usize;
        let nf = n as f64;
        Ok(Self {
            k,
            n,
            dim,
            e_n: nf.exp(),
            e_2n: (2.0 * nf).exp(),
            e_3n: (3.0 * nf).exp(),
            ts: 3f64.powi(k as i32 + 1) * (3.0 * nf).exp(),
        })
    }

    pub fn for_space(space: &Space) -> Self {
        Self::new(space.k(), space.n()).expect("valid space")
    }

    /// `ℓ_G = min{ℓ + 1, dim P_k}`.
    pub fn ell_g(&self, ell: usize) -> usize {
        (ell + 1).min(self.dim)
    }

    /// Finiteness number `2^{ℓ_G}`; `None` if it does not fit in `u128`.
    pub fn finiteness_number(&self, ell: usize) -> Option<u128> {
        1u128.checked_shl(self.ell_g(ell) as u32)
    }

    /// `2^{dim P_k}`.
    pub fn full_finiteness_number(&self) -> Option<u128> {
        1u128.checked_shl(self.dim as u32)
    }

    /// `τ(λ) = e^{2n} λ^{k+1}`.
    pub fn tau(&self, lambda: f64) -> f64 {
        self.e_2n * lambda.powi(self.k as i32 + 1)
    }
}
