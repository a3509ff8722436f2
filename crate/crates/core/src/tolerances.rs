//! Numerical thresholds shared by the crate.

/// Imaginary parts below this (relative to `max(1, |q|)`) count as zero.
pub const REAL_AXIS_REL: f64 = 1e-13;

/// Default tolerance for "same sphere" tests.
pub const SPHERE_TOL: f64 = 1e-9;

/// Values of modulus at most this are treated as zeros when a division is needed.
pub const SINGULAR_TOL: f64 = 1e-13;

/// Relative imaginary residue allowed when a symmetrization is forced real.
pub const SYMMETRIZE_TOL: f64 = 1e-12;

/// Relative residual allowed by `left_linear_divide`.
pub const DIVISION_TOL: f64 = 1e-9;

/// Cells with `||Q| - 1|` at most this snap onto the unit sphere.
pub const UNIMODULAR_SNAP: f64 = 1e-11;

/// Cells with `||Q| - 1|` in `(UNIMODULAR_SNAP, BOUNDARY_BAND]` make the problem ambiguous.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Two unimodular cells closer than this are equal.
pub const UNIMODULAR_EQ: f64 = 1e-9;

/// Agreement and modulus tolerance for unimodular-constant detection.
pub const UNIMODULAR_PROBE: f64 = 1e-9;

/// Default verification tolerance for sampled inequalities.
pub const VERIFY_TOL: f64 = 1e-9;

/// Relative tolerance for the Pick positivity test.
pub const PSD_TOL: f64 = 1e-9;

/// Sampling never goes beyond this radius.
pub const RADIUS_CAP: f64 = 0.95;

/// Default truncation order for series.
pub const DEFAULT_ORDER: usize = 64;

/// Target tail at radius `RADIUS_CAP` for adaptive truncation.
pub const ADAPTIVE_TAIL: f64 = 1e-12;

/// Tolerance override read from `SR_TOL`, if present and parseable.
pub fn env_override() -> Option<f64> {
    std::env::var("SR_TOL").ok()?.trim().parse::<f64>().ok().filter(|t| *t > 0.0 && t.is_finite())
}
