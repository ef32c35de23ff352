//! Holomorphic projection of Higgs fields and counting of holomorphic
//! sections.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldKind, MatrixField};
use crate::higgs::higgs_defect;
use crate::matrix::{self, C64};

/// Singular-value window `(low, high)`: values below `low` count as kernel,
/// the next one must exceed `high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapTolerance {
    pub low: f64,
    pub high: f64,
}

impl Default for GapTolerance {
    fn default() -> Self {
        Self { low: 1e-3, high: 1e-1 }
    }
}

/// Fourier cutoff `|p|, |q| ≤ K` of the trial space used by
/// [`holo_section_count`].
pub const DEFAULT_SECTION_MODES: i64 = 10;

/// `ψ ↦ −∂_z ψ + [α*, ψ]`, the adjoint of `φ ↦ ∂_z̄ φ + [α, φ]`.
fn defect_adjoint(alpha_star: &MatrixField, psi: &MatrixField) -> MatrixField {
    let mut out = psi
        .clone()
        .with_kind(FieldKind::Function)
        .d_z()
        .expect("Function admits ∂_z")
        .scale_real(-1.0);
    let br = alpha_star
        .clone()
        .with_kind(FieldKind::Function)
        .pointwise(psi, FieldKind::Form10, matrix::commutator_into);
    out.add_assign_unchecked(&br, C64::new(1.0, 0.0));
    out
}

/// Orthogonal projection of `phi0` onto the kernel of `∂_z̄ + [α, ·]`.
///
/// Conjugate-gradient least squares on `∂̄_A x = ∂̄_A φ₀` started at zero
/// keeps `x ⟂ ker ∂̄_A`, so `φ₀ − x` is the kernel component; this is the
/// limit of the linear descent `dφ/ds = −∂̄_A†∂̄_A φ`, reached in Krylov
/// iterations rather than pseudo-time.
pub fn project_to_higgs(alpha: &MatrixField, phi0: &MatrixField, tol: f64, max_iter: usize) -> Result<MatrixField> {
    project_within(alpha, phi0, tol, max_iter, |f| f.clone())
}

/// [`project_to_higgs`] restricted to the range of an orthogonal projection
/// `restrict` containing `phi0` (for instance the filtration-preserving
/// fields of a [`crate::reduction::LeviReduction`]).
pub fn project_to_higgs_within(
    alpha: &MatrixField,
    phi0: &MatrixField,
    tol: f64,
    max_iter: usize,
    restrict: impl Fn(&MatrixField) -> MatrixField,
) -> Result<MatrixField> {
    project_within(alpha, phi0, tol, max_iter, restrict)
}

fn project_within(
    alpha: &MatrixField,
    phi0: &MatrixField,
    tol: f64,
    max_iter: usize,
    restrict: impl Fn(&MatrixField) -> MatrixField,
) -> Result<MatrixField> {
    if alpha.kind() != FieldKind::Form01 || phi0.kind() != FieldKind::Form10 {
        return Err(Error::KindViolation {
            op: "project_to_higgs",
            kinds: vec![alpha.kind(), phi0.kind()],
        });
    }
    alpha.check_same_shape(&phi0.clone().with_kind(FieldKind::Form01), "project_to_higgs")?;
    let apply = |x: &MatrixField| higgs_defect(alpha, x).expect("kinds checked");
    let alpha_star = alpha.adjoint();

    let b = apply(phi0);
    let mut rnorm = b.norm();
    if rnorm < tol {
        return Ok(phi0.clone());
    }
    let mut x = MatrixField::zeros(phi0.grid(), phi0.rank(), FieldKind::Form10);
    let mut r = b.clone();
    let mut s = restrict(&defect_adjoint(&alpha_star, &r));
    let mut p = s.clone();
    let mut gamma = s.norm2();
    for _ in 0..max_iter {
        let q = apply(&p);
        let qq = q.norm2();
        if qq == 0.0 {
            break;
        }
        let a = gamma / qq;
        x.add_assign_unchecked(&p, C64::new(a, 0.0));
        r.add_assign_unchecked(&q, C64::new(-a, 0.0));
        rnorm = r.norm();
        if rnorm < tol {
            // the recursive residual drifts from the true one; confirm and
            // restart from the true residual if needed
            r = b.clone();
            r.add_assign_unchecked(&apply(&x), C64::new(-1.0, 0.0));
            rnorm = r.norm();
            if rnorm < tol {
                let mut out = phi0.clone();
                out.add_assign_unchecked(&x, C64::new(-1.0, 0.0));
                return Ok(out);
            }
            s = restrict(&defect_adjoint(&alpha_star, &r));
            gamma = s.norm2();
            p = s.clone();
            continue;
        }
        s = restrict(&defect_adjoint(&alpha_star, &r));
        let gamma_new = s.norm2();
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        let mut next = s.clone();
        next.add_assign_unchecked(&p, C64::new(beta, 0.0));
        p = next;
    }
    Err(Error::NonConvergence {
        residual: rnorm,
        iterations: max_iter,
    })
}

/// Non-Nyquist modes `|p|, |q| ≤ modes` (clamped to the grid).
fn trial_modes(side: usize, modes: i64) -> Vec<(i64, i64)> {
    let k = modes.min(side as i64 / 2 - 1);
    let mut out = Vec::new();
    for p in -k..=k {
        for q in -k..=k {
            out.push((p, q));
        }
    }
    out
}

/// Smallest singular values of `v ↦ ∂_z̄ v + α v` on the trial space of
/// non-Nyquist Fourier modes `|p|, |q| ≤ modes`, ascending.
///
/// The Gram matrix `⟨D u_a, D u_b⟩` of the trial basis is assembled exactly
/// from the Fourier coefficients of `α` and `α†α`.
pub fn section_singular_values(alpha: &MatrixField, modes: i64) -> Result<Vec<f64>> {
    if alpha.kind() != FieldKind::Form01 {
        return Err(Error::KindViolation {
            op: "section_singular_values",
            kinds: vec![alpha.kind()],
        });
    }
    let grid = alpha.grid();
    let n = alpha.rank();
    let n2 = n * n;
    let inv = 1.0 / grid.sites() as f64;
    let a_hat: Vec<C64> = alpha.spectrum().into_iter().map(|c| c * inv).collect();
    let beta = alpha
        .adjoint()
        .with_kind(FieldKind::Function)
        .matmul(&alpha.clone().with_kind(FieldKind::Function))?;
    let b_hat: Vec<C64> = beta.spectrum().into_iter().map(|c| c * inv).collect();
    let nu = grid.dzbar_multiplier();

    let basis = trial_modes(grid.side(), modes);
    let dim = basis.len() * n;
    let mut gram = DMatrix::<C64>::zeros(dim, dim);
    for (a, &(p, q)) in basis.iter().enumerate() {
        let ka = grid.mode_index(p, q);
        for (b, &(p2, q2)) in basis.iter().enumerate() {
            let kb = grid.mode_index(p2, q2);
            let diff = grid.mode_index(p - p2, q - q2) * n2;
            let back = grid.mode_index(p2 - p, q2 - q) * n2;
            for i in 0..n {
                for j in 0..n {
                    let mut g = nu[ka].conj() * a_hat[diff + i * n + j]
                        + nu[kb] * a_hat[back + j * n + i].conj()
                        + b_hat[diff + i * n + j];
                    if a == b && i == j {
                        g += nu[ka].norm_sqr();
                    }
                    gram[(a * n + i, b * n + j)] = g;
                }
            }
        }
    }
    let eig = gram.symmetric_eigenvalues();
    let mut sv: Vec<f64> = eig.iter().map(|e| e.max(0.0).sqrt()).collect();
    sv.sort_by(|x, y| x.total_cmp(y));
    Ok(sv)
}

/// Number of holomorphic sections of `(C^n, ∂̄ + α)`, read off a clean gap
/// in the singular values of the coupled Dolbeault operator.
pub fn holo_section_count(alpha: &MatrixField, gap: GapTolerance) -> Result<usize> {
    holo_section_count_with(alpha, gap, DEFAULT_SECTION_MODES)
}

pub fn holo_section_count_with(alpha: &MatrixField, gap: GapTolerance, modes: i64) -> Result<usize> {
    let sv = section_singular_values(alpha, modes)?;
    count_below_gap(&sv, gap)
}

/// Count of values below `gap.low`, provided the next exceeds `gap.high`.
pub fn count_below_gap(ascending: &[f64], gap: GapTolerance) -> Result<usize> {
    let count = ascending.iter().take_while(|&&s| s < gap.low).count();
    match ascending.get(count) {
        Some(&next) if next <= gap.high => Err(Error::NoSpectralGap {
            values: ascending.iter().take(count + 3).copied().collect(),
            low: gap.low,
            high: gap.high,
        }),
        _ => Ok(count),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SectionField;
    use crate::grid::make_grid;
    use crate::random::{band_limited_field, rng};
    use nalgebra::DMatrix;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Dense matrix of `v ↦ ∂_z̄ v + α v` on non-Nyquist Fourier modes,
    /// built by applying the operator to each basis section.
    fn dense_singular_values(alpha: &MatrixField) -> Vec<f64> {
        let g = alpha.grid();
        let n = alpha.rank();
        let sites = g.sites();
        let mut cols = Vec::new();
        for s in 0..sites {
            if g.is_nyquist(s) {
                continue;
            }
            let (p, q) = g.mode(s);
            for i in 0..n {
                let mut data = vec![matrix::zero(); sites * n];
                for site in 0..sites {
                    let (x, y) = g.coords(site);
                    let ph = 2.0 * std::f64::consts::PI * (p as f64 * x + q as f64 * y);
                    data[site * n + i] = C64::from_polar(1.0, ph);
                }
                let v = SectionField::from_data(g, n, data).unwrap();
                cols.push(v.dbar_coupled(alpha).unwrap().into_data());
            }
        }
        let rows = sites * n;
        let scale = 1.0 / (sites as f64).sqrt();
        let m = DMatrix::from_fn(rows, cols.len(), |r, cidx| cols[cidx][r] * scale);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| a.total_cmp(b));
        sv
    }

    #[test]
    fn galerkin_matches_dense_operator() {
        let g = make_grid(8).unwrap();
        let mut r = rng(31);
        let alpha = band_limited_field(&g, 2, FieldKind::Form01, 2, &mut r).scale_real(0.3);
        let dense = dense_singular_values(&alpha);
        let galerkin = section_singular_values(&alpha, 3).unwrap();
        assert_eq!(dense.len(), galerkin.len());
        for (a, b) in dense.iter().zip(&galerkin) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn trivial_bundle_has_constants() {
        let g = make_grid(16).unwrap();
        let alpha = MatrixField::zeros(&g, 2, FieldKind::Form01);
        assert_eq!(holo_section_count(&alpha, GapTolerance::default()).unwrap(), 2);
    }

    #[test]
    fn nontrivial_extension_has_one_section() {
        let g = make_grid(8).unwrap();
        let alpha = MatrixField::constant(&g, FieldKind::Form01, &matrix::scaled(&matrix::unit(2, 0, 1), c(0.5)));
        let gap = GapTolerance::default();
        assert_eq!(holo_section_count(&alpha, gap).unwrap(), 1);
        let dense = dense_singular_values(&alpha);
        assert_eq!(count_below_gap(&dense, gap).unwrap(), 1);
        // the constant block [[0, c], [0, 0]] has singular values 0 and |c|
        let small = MatrixField::constant(&g, FieldKind::Form01, &matrix::scaled(&matrix::unit(2, 0, 1), c(0.01)));
        assert!(matches!(
            holo_section_count(&small, gap),
            Err(Error::NoSpectralGap { .. })
        ));
    }

    #[test]
    fn projection_keeps_constants() {
        let g = make_grid(16).unwrap();
        let alpha = MatrixField::zeros(&g, 2, FieldKind::Form01);
        let phi0 = MatrixField::constant(&g, FieldKind::Form10, &matrix::diag(&[c(1.0), c(-1.0)]));
        assert_eq!(project_to_higgs(&alpha, &phi0, 1e-12, 10).unwrap(), phi0);
    }

    #[test]
    fn projection_removes_oscillations() {
        let g = make_grid(16).unwrap();
        let alpha = MatrixField::zeros(&g, 2, FieldKind::Form01);
        let phi0 = MatrixField::from_fn(&g, 2, FieldKind::Form10, |x, y, out| {
            let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (x + 2.0 * y));
            out[1] = w;
        });
        let out = project_to_higgs(&alpha, &phi0, 1e-12, 50).unwrap();
        assert!(out.norm() < 1e-12);
    }

    #[test]
    fn projection_matches_dense_kernel() {
        let g = make_grid(8).unwrap();
        let n = 2;
        let mut r = rng(5);
        let alpha = MatrixField::constant(&g, FieldKind::Form01, &matrix::scaled(&matrix::unit(2, 0, 1), c(0.7)));
        let phi0 = band_limited_field(&g, n, FieldKind::Form10, 3, &mut r);
        let out = project_to_higgs(&alpha, &phi0, 1e-11, 500).unwrap();
        assert!(higgs_defect(&alpha, &out).unwrap().norm() < 1e-11);

        // dense operator on all n×n matrix fields, position-space unit basis
        let sites = g.sites();
        let dim = sites * n * n;
        let mut cols = Vec::with_capacity(dim);
        for e in 0..dim {
            let mut data = vec![matrix::zero(); dim];
            data[e] = c(1.0);
            let f = MatrixField::from_data(&g, n, FieldKind::Form10, data).unwrap();
            cols.push(higgs_defect(&alpha, &f).unwrap().into_data());
        }
        let d = DMatrix::from_fn(dim, dim, |r, col| cols[col][r]);
        let svd = d.svd(false, true);
        let v_t = svd.v_t.unwrap();
        let mut kernel_part = vec![matrix::zero(); dim];
        for (k, s) in svd.singular_values.iter().enumerate() {
            if *s < 1e-9 {
                let row = v_t.row(k);
                let coef: C64 = (0..dim).map(|e| row[e] * phi0.data()[e]).sum();
                for e in 0..dim {
                    kernel_part[e] += row[e].conj() * coef;
                }
            }
        }
        let want = MatrixField::from_data(&g, n, FieldKind::Form10, kernel_part).unwrap();
        assert!(out.max_abs_diff(&want) < 1e-9, "{}", out.max_abs_diff(&want));
    }

    #[test]
    fn gap_rules() {
        let gap = GapTolerance::default();
        assert_eq!(count_below_gap(&[1e-9, 2e-9, 0.5], gap).unwrap(), 2);
        assert!(count_below_gap(&[1e-9, 0.01, 0.5], gap).is_err());
        assert_eq!(count_below_gap(&[1e-9], gap).unwrap(), 1);
    }
}
