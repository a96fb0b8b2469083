//! Comparison tolerances shared by every inequality check in the crate.
//!
//! The `e^{±n}` factors in the jet metric amplify double rounding, so an
//! absolute tolerance alone is useless for large quantities and a relative
//! one is useless near zero. Every check uses `1e-9 · max(1, |a|, |b|)`.

/// Absolute tolerance before magnitude scaling.
pub const CHECK_TOL: f64 = 1e-9;

/// Feasibility tolerance for LP constraints and set membership.
pub const FEAS_TOL: f64 = 1e-8;

/// Magnitude scale used by [`approx_le`].
#[inline]
pub fn scale(a: f64, b: f64) -> f64 {
    1f64.max(a.abs()).max(b.abs())
}

/// `a ≤ b` up to the scaled check tolerance.
#[inline]
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + CHECK_TOL * scale(a, b)
}

/// `|a - b|` within the scaled check tolerance.
#[inline]
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= CHECK_TOL * scale(a, b)
}
