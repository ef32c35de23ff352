//! Seeded random fields and pairs for oracles and verification suites.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::{FieldKind, MatrixField};
use crate::grid::Grid;
use crate::group::GroupDescriptor;
use crate::higgs::HiggsPair;
use crate::matrix::{self, C64};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_c64(rng: &mut impl Rng) -> C64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt() / std::f64::consts::SQRT_2;
    C64::from_polar(r, 2.0 * PI * u2)
}

pub fn random_matrix(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    (0..n * n).map(|_| gaussian_c64(rng)).collect()
}

/// Random unitary via Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let m = nalgebra::DMatrix::from_fn(n, n, |_, _| gaussian_c64(rng));
    let q = m.qr().q();
    let mut out = vec![matrix::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = q[(i, j)];
        }
    }
    out
}

/// Field with random Fourier content in `|p|, |q| ≤ max_mode`, decaying
/// like `1/(1 + |k|²)`.
pub fn band_limited_field(grid: &Grid, n: usize, kind: FieldKind, max_mode: i64, rng: &mut impl Rng) -> MatrixField {
    assert!(max_mode < grid.side() as i64 / 2, "band limit must stay below Nyquist");
    let n2 = n * n;
    let mut coeffs = vec![matrix::zero(); grid.sites() * n2];
    for p in -max_mode..=max_mode {
        for q in -max_mode..=max_mode {
            let s = grid.mode_index(p, q);
            let weight = 1.0 / (1.0 + (p * p + q * q) as f64);
            for e in 0..n2 {
                coeffs[s * n2 + e] = gaussian_c64(rng) * weight * grid.sites() as f64;
            }
        }
    }
    MatrixField::from_spectrum(grid, n, kind, coeffs).expect("shape is consistent")
}

/// Random band-limited pair with fields projected into the group's algebra.
pub fn random_pair(grid: &Grid, group: &std::sync::Arc<GroupDescriptor>, max_mode: i64, rng: &mut impl Rng) -> HiggsPair {
    let n = group.n();
    let alpha = band_limited_field(grid, n, FieldKind::Form01, max_mode, rng);
    let phi = band_limited_field(grid, n, FieldKind::Form10, max_mode, rng);
    let alpha = group.project_field(&alpha);
    let phi = group.project_field(&phi);
    HiggsPair::new(alpha, phi, group.clone()).expect("projected fields are subalgebra-valued")
}

/// Random pair direction (unprojected unless a group is given).
pub fn random_direction(
    grid: &Grid,
    group: &std::sync::Arc<GroupDescriptor>,
    max_mode: i64,
    rng: &mut impl Rng,
) -> (MatrixField, MatrixField) {
    let p = random_pair(grid, group, max_mode, rng);
    (p.alpha().clone(), p.phi().clone())
}
