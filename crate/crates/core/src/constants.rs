//! Frozen normalization constants.

/// `∫ eigenvalues of m = KAPPA · degree` on the unit-area torus
/// (`F = m dz∧dz̄ = −2i m dx∧dy`, `deg = (i/2π)∫ tr F`).
pub const KAPPA: f64 = std::f64::consts::PI;

/// Orientation sign making [`crate::scenario::chern_number`] of the degree-`d`
/// bump projector equal `d`, the degree of its image as a holomorphic
/// subbundle under [`crate::scenario::BumpProjector::holomorphic_structure`].
pub const CHERN_SIGN: f64 = -1.0;

/// Slopes within this distance of a rational with denominator `≤ n` snap.
pub const RATIONAL_SNAP_TOL: f64 = 0.05;
