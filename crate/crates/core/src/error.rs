use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid modulus: {0}")]
    InvalidModulus(String),

    #[error("inversion target {target} outside bracket [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket {
        target: f64,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("monotonicity violated while inverting: f({s0}) = {f0} > f({s1}) = {f1}")]
    NotMonotone { s0: f64, f0: f64, s1: f64, f1: f64 },

    #[error("spaces differ: (k={k1}, n={n1}) vs (k={k2}, n={n2})")]
    SpaceMismatch {
        k1: usize,
        n1: usize,
        k2: usize,
        n2: usize,
    },

    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),

    #[error("chain endpoints coincide but interior points differ; the length hypothesis is undefined")]
    DegenerateBaseline,

    #[error("convex set {index} is empty")]
    EmptySet { index: usize },

    #[error("convex set {index} has affine dimension {actual}, more than its declared {declared}")]
    DimensionExceeded {
        index: usize,
        declared: usize,
        actual: usize,
    },

    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error("selection hypothesis violated: {0}")]
    Hypothesis(Box<crate::selection::HypothesisViolation>),

    #[error("combinatorial guard: {count} subsets of size {size} exceed the limit {limit}; reduce num_points or ell")]
    TooManySubsets {
        count: u128,
        size: usize,
        limit: u128,
    },

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
}
