//! Higgs pairs, the moment-map density and the Yang-Mills-Higgs energy.
//!
//! A pair `(α, φ)` stands for the holomorphic structure `∂̄₀ + α dz̄` on the
//! trivial bundle with the standard Hermitian metric, together with the
//! Higgs field `θ = φ dz`. The Chern connection is `d + α dz̄ − α* dz`, so
//!
//! ```text
//! m = ∂_z α + ∂_z̄ α* + [α, α*] + [φ, φ*]
//! ```
//!
//! is the `dz∧dz̄` coefficient of `F + [θ, θ*]`, and `ymh = ⟨m, m⟩`.
//! The flow direction returned by [`ymh_gradient`] is
//! `(∂_z̄ m + [α, m], [φ, m])`, which equals `−¼ ∇ymh` for the flat pairing
//! `Re(⟨a, a'⟩ + ⟨b, b'⟩)`; see [`GRADIENT_METRIC_SCALE`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{transform_entries, FieldKind, MatrixField};
use crate::grid::Grid;
use crate::group::{descriptor, GroupDescriptor, GroupName};
use crate::matrix::{self, C64};

/// `d/dε ymh(x + εv) = −GRADIENT_METRIC_SCALE · Re⟨descent, v⟩`.
pub const GRADIENT_METRIC_SCALE: f64 = 4.0;

/// Off-subalgebra tolerance (relative) accepted by [`HiggsPair::new`].
pub const PAIR_SUBALGEBRA_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct HiggsPair {
    alpha: MatrixField,
    phi: MatrixField,
    group: Arc<GroupDescriptor>,
}

impl HiggsPair {
    pub fn new(alpha: MatrixField, phi: MatrixField, group: Arc<GroupDescriptor>) -> Result<Self> {
        if alpha.kind() != FieldKind::Form01 || phi.kind() != FieldKind::Form10 {
            return Err(Error::KindViolation {
                op: "HiggsPair::new",
                kinds: vec![alpha.kind(), phi.kind()],
            });
        }
        alpha.check_same_shape(&phi, "HiggsPair::new")?;
        if alpha.rank() != group.n() {
            return Err(Error::ShapeMismatch {
                op: "HiggsPair::new",
                detail: format!("field rank {} vs group rank {}", alpha.rank(), group.n()),
            });
        }
        let pair = Self { alpha, phi, group };
        let residual = pair.offalg_residual();
        let scale = 1.0 + pair.alpha.norm() + pair.phi.norm();
        if residual > PAIR_SUBALGEBRA_TOL * scale {
            return Err(Error::NotInSubalgebra { residual });
        }
        Ok(pair)
    }

    pub(crate) fn from_parts(alpha: MatrixField, phi: MatrixField, group: Arc<GroupDescriptor>) -> Self {
        Self { alpha, phi, group }
    }

    pub fn zero(grid: &Grid, group: Arc<GroupDescriptor>) -> Self {
        let n = group.n();
        Self {
            alpha: MatrixField::zeros(grid, n, FieldKind::Form01),
            phi: MatrixField::zeros(grid, n, FieldKind::Form10),
            group,
        }
    }

    /// Pair of spatially constant fields.
    pub fn constant(grid: &Grid, group: Arc<GroupDescriptor>, alpha: &[C64], phi: &[C64]) -> Result<Self> {
        Self::new(
            MatrixField::constant(grid, FieldKind::Form01, alpha),
            MatrixField::constant(grid, FieldKind::Form10, phi),
            group,
        )
    }

    pub fn alpha(&self) -> &MatrixField {
        &self.alpha
    }

    pub fn phi(&self) -> &MatrixField {
        &self.phi
    }

    pub fn group(&self) -> &Arc<GroupDescriptor> {
        &self.group
    }

    pub fn grid(&self) -> &Grid {
        self.alpha.grid()
    }

    pub fn rank(&self) -> usize {
        self.alpha.rank()
    }

    pub fn into_parts(self) -> (MatrixField, MatrixField, Arc<GroupDescriptor>) {
        (self.alpha, self.phi, self.group)
    }

    /// The same fields read as a `GL(n)` pair.
    pub fn as_ambient(&self) -> HiggsPair {
        let gl = descriptor(GroupName::GL, self.rank()).expect("GL(n) is always valid");
        Self::from_parts(self.alpha.clone(), self.phi.clone(), gl)
    }

    pub fn with_group(&self, group: Arc<GroupDescriptor>) -> Result<HiggsPair> {
        Self::new(self.alpha.clone(), self.phi.clone(), group)
    }

    /// Norm of the components of `α` and `φ` normal to the subalgebra.
    pub fn offalg_residual(&self) -> f64 {
        (self.group.offalg_norm2(&self.alpha) + self.group.offalg_norm2(&self.phi)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.phi.is_finite()
    }

    pub fn is_uniform(&self) -> bool {
        self.alpha.is_uniform() && self.phi.is_uniform()
    }

    /// Unitary gauge change by a `Function` field `g` with `g* g = 1`:
    /// `α ↦ gαg* − (∂̄g)g*`, `φ ↦ gφg*`.
    pub fn gauge_transform(&self, g: &MatrixField) -> Result<HiggsPair> {
        if g.kind() != FieldKind::Function {
            return Err(Error::KindViolation {
                op: "gauge_transform",
                kinds: vec![g.kind()],
            });
        }
        let gi = g.adjoint();
        let mut alpha = g.matmul(&self.alpha)?.matmul(&gi)?;
        alpha.axpy(C64::new(-1.0, 0.0), &g.d_zbar()?.matmul(&gi)?)?;
        let phi = g.matmul(&self.phi)?.matmul(&gi)?;
        Ok(Self::from_parts(alpha, phi, self.group.clone()))
    }

    /// `self + s · (dα, dφ)`
    pub fn displaced(&self, s: f64, dalpha: &MatrixField, dphi: &MatrixField) -> HiggsPair {
        let mut alpha = self.alpha.clone();
        let mut phi = self.phi.clone();
        alpha.add_assign_unchecked(dalpha, C64::new(s, 0.0));
        phi.add_assign_unchecked(dphi, C64::new(s, 0.0));
        Self::from_parts(alpha, phi, self.group.clone())
    }

    /// Pointwise `trace(φᵏ)` for `k = 1..=n`, as `n` scalar fields.
    pub fn trace_powers(&self) -> Vec<Vec<C64>> {
        trace_powers(&self.phi)
    }
}

pub(crate) fn trace_powers(phi: &MatrixField) -> Vec<Vec<C64>> {
    let n = phi.rank();
    let mut out = vec![Vec::with_capacity(phi.grid().sites()); n];
    let mut power = vec![matrix::zero(); n * n];
    let mut next = vec![matrix::zero(); n * n];
    for site in phi.sites() {
        power.copy_from_slice(site);
        for (k, col) in out.iter_mut().enumerate() {
            if k > 0 {
                matrix::mul_into(&power, site, &mut next, n);
                std::mem::swap(&mut power, &mut next);
            }
            col.push(matrix::trace(&power, n));
        }
    }
    out
}

/// Hermitian `(1,1)` density `m` of a pair.
#[derive(Clone, Debug)]
pub struct MomentField {
    density: MatrixField,
}

impl MomentField {
    pub fn density(&self) -> &MatrixField {
        &self.density
    }

    pub fn into_density(self) -> MatrixField {
        self.density
    }

    /// Largest pointwise deviation from `m* = m`.
    pub fn hermitian_defect(&self) -> f64 {
        self.density.max_abs_diff(&self.density.adjoint())
    }

    pub fn norm2(&self) -> f64 {
        self.density.norm2()
    }
}

/// `∂_z α + ∂_z̄ α*` from a single transform of `α`.
fn linear_curvature(alpha: &MatrixField) -> MatrixField {
    let grid = alpha.grid();
    let n = alpha.rank();
    if alpha.is_uniform() {
        return MatrixField::zeros(grid, n, FieldKind::Density11);
    }
    let n2 = n * n;
    let spec = alpha.spectrum();
    let mut out = vec![matrix::zero(); spec.len()];
    let mu = grid.dz_multiplier();
    let nu = grid.dzbar_multiplier();
    for s in 0..grid.sites() {
        let minus = grid.negated_mode(s);
        let a = &spec[s * n2..(s + 1) * n2];
        let b = &spec[minus * n2..(minus + 1) * n2];
        let o = &mut out[s * n2..(s + 1) * n2];
        for i in 0..n {
            for j in 0..n {
                // FFT(α*)_k = (α̂_{-k})†
                o[i * n + j] = mu[s] * a[i * n + j] + nu[s] * b[j * n + i].conj();
            }
        }
    }
    transform_entries(grid, n2, &mut out, false);
    MatrixField::from_data(grid, n, FieldKind::Density11, out).expect("shape preserved")
}

pub fn chern_moment(pair: &HiggsPair) -> MomentField {
    let alpha = &pair.alpha;
    let phi = &pair.phi;
    let n = alpha.rank();
    let mut m = linear_curvature(alpha);
    let alpha_star = alpha.adjoint();
    let phi_star = phi.adjoint();
    let mut buf = vec![matrix::zero(); n * n];
    for s in 0..alpha.grid().sites() {
        let out = m.site_mut(s);
        matrix::commutator_into(alpha.site(s), alpha_star.site(s), &mut buf, n);
        out.iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
        matrix::commutator_into(phi.site(s), phi_star.site(s), &mut buf, n);
        out.iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
    }
    MomentField { density: m }
}

pub fn ymh(pair: &HiggsPair) -> f64 {
    chern_moment(pair).norm2()
}

/// Flow direction `(dα, dφ)`; the negative gradient up to the factor
/// [`GRADIENT_METRIC_SCALE`].
#[derive(Clone, Debug)]
pub struct Descent {
    pub alpha: MatrixField,
    pub phi: MatrixField,
}

impl Descent {
    pub fn norm2(&self) -> f64 {
        self.alpha.norm2() + self.phi.norm2()
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    /// `−GRADIENT_METRIC_SCALE · Re⟨descent, v⟩`, the first-order change of
    /// `ymh` along `v` predicted by this direction.
    pub fn directional_derivative(&self, v_alpha: &MatrixField, v_phi: &MatrixField) -> Result<f64> {
        let pairing = self.alpha.inner(v_alpha)? + self.phi.inner(v_phi)?;
        Ok(-GRADIENT_METRIC_SCALE * pairing.re)
    }
}

/// Everything the flow needs from one evaluation of a state.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub moment: MomentField,
    pub ymh: f64,
    pub descent: Descent,
}

impl Evaluation {
    pub fn grad_norm(&self) -> f64 {
        self.descent.norm()
    }
}

pub fn evaluate(pair: &HiggsPair) -> Evaluation {
    let moment = chern_moment(pair);
    let ymh = moment.norm2();
    let descent = descent_from_moment(pair, &moment);
    Evaluation { moment, ymh, descent }
}

fn descent_from_moment(pair: &HiggsPair, moment: &MomentField) -> Descent {
    let m = moment.density().clone().with_kind(FieldKind::Function);
    let mut dalpha = m.d_zbar().expect("Function admits ∂_z̄");
    let n = pair.rank();
    let mut buf = vec![matrix::zero(); n * n];
    for s in 0..pair.grid().sites() {
        matrix::commutator_into(pair.alpha.site(s), m.site(s), &mut buf, n);
        dalpha.site_mut(s).iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
    }
    let dphi = pair.phi.pointwise(&m, FieldKind::Form10, matrix::commutator_into);
    Descent { alpha: dalpha, phi: dphi }
}

pub fn ymh_gradient(pair: &HiggsPair) -> Descent {
    descent_from_moment(pair, &chern_moment(pair))
}

/// `∂_z̄ φ + [α, φ]`, the `∂̄_A θ` coefficient.
pub fn higgs_defect(alpha: &MatrixField, phi: &MatrixField) -> Result<MatrixField> {
    let mut d = phi.d_zbar()?;
    d.add_assign_unchecked(&alpha.commutator(phi)?, C64::new(1.0, 0.0));
    Ok(d)
}

pub fn higgs_residual(pair: &HiggsPair) -> f64 {
    higgs_defect(&pair.alpha, &pair.phi)
        .expect("pair kinds are fixed")
        .norm()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::make_grid;
    use crate::random::{random_pair, random_unitary, rng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sl2() -> Arc<GroupDescriptor> {
        descriptor(GroupName::SL, 2).unwrap()
    }

    #[test]
    fn zero_pair_is_flat_and_critical() {
        let g = make_grid(8).unwrap();
        let p = HiggsPair::zero(&g, sl2());
        assert_eq!(chern_moment(&p).norm2(), 0.0);
        assert_eq!(ymh(&p), 0.0);
        assert_eq!(ymh_gradient(&p).norm2(), 0.0);
    }

    #[test]
    fn constant_upper_triangular_alpha() {
        let g = make_grid(8).unwrap();
        let cc = c(0.6, -0.3);
        let e12 = matrix::scaled(&matrix::unit(2, 0, 1), cc);
        let p = HiggsPair::constant(&g, sl2(), &e12, &[matrix::zero(); 4]).unwrap();
        let m = chern_moment(&p);
        let want = matrix::diag(&[c(cc.norm_sqr(), 0.0), c(-cc.norm_sqr(), 0.0)]);
        for site in m.density().sites() {
            assert!(matrix::max_abs_diff(site, &want) < 1e-15);
        }
        assert!((ymh(&p) - 2.0 * cc.norm_sqr().powi(2)).abs() < 1e-15);
        let d = ymh_gradient(&p);
        let want_d = p.alpha().scale_real(-2.0 * cc.norm_sqr());
        assert!(d.alpha.max_abs_diff(&want_d) < 1e-15);
        assert_eq!(d.phi.norm2(), 0.0);
    }

    #[test]
    fn constant_nilpotent_higgs_field() {
        let g = make_grid(8).unwrap();
        let eps = c(0.2, 0.1);
        let e12 = matrix::scaled(&matrix::unit(2, 0, 1), eps);
        let p = HiggsPair::constant(&g, sl2(), &[matrix::zero(); 4], &e12).unwrap();
        let want = matrix::diag(&[c(eps.norm_sqr(), 0.0), c(-eps.norm_sqr(), 0.0)]);
        for site in chern_moment(&p).density().sites() {
            assert!(matrix::max_abs_diff(site, &want) < 1e-15);
        }
    }

    #[test]
    fn moment_is_hermitian() {
        let g = make_grid(16).unwrap();
        let mut r = rng(11);
        let gl3 = descriptor(GroupName::GL, 3).unwrap();
        let p = random_pair(&g, &gl3, 5, &mut r);
        assert!(chern_moment(&p).hermitian_defect() < 1e-12);
    }

    #[test]
    fn higgs_residual_examples() {
        let g = make_grid(16).unwrap();
        let phi = matrix::scaled(&matrix::unit(2, 0, 1), c(0.5, 0.0));
        let p = HiggsPair::constant(&g, sl2(), &[matrix::zero(); 4], &phi).unwrap();
        assert_eq!(higgs_residual(&p), 0.0);
        let p = HiggsPair::constant(&g, sl2(), &matrix::unit(2, 0, 1), &phi).unwrap();
        assert_eq!(higgs_residual(&p), 0.0);

        let wave = MatrixField::from_fn(&g, 2, FieldKind::Form10, |x, _, out| {
            out[1] = C64::from_polar(1.0, 2.0 * PI * x);
        });
        let p = HiggsPair::new(MatrixField::zeros(&g, 2, FieldKind::Form01), wave.clone(), sl2()).unwrap();
        assert!((higgs_residual(&p) - PI * wave.norm()).abs() < 1e-12);
    }

    #[test]
    fn constant_unitary_gauge_invariance() {
        let g = make_grid(16).unwrap();
        let mut r = rng(5);
        let gl2 = descriptor(GroupName::GL, 2).unwrap();
        let p = random_pair(&g, &gl2, 4, &mut r);
        let u = random_unitary(2, &mut r);
        let u_star = matrix::adjoint(&u, 2);
        let conj = |f: &MatrixField| {
            f.map_sites(f.kind(), |m, out| {
                out.copy_from_slice(&matrix::mul(&matrix::mul(&u, m, 2), &u_star, 2));
            })
        };
        let q = HiggsPair::new(conj(p.alpha()), conj(p.phi()), gl2).unwrap();
        let (e0, e1) = (ymh(&p), ymh(&q));
        assert!((e0 - e1).abs() < 1e-12 * e0);
        let m0 = conj(chern_moment(&p).density());
        assert!(m0.max_abs_diff(chern_moment(&q).density()) < 1e-12);
    }

    #[test]
    fn first_order_decrease() {
        let g = make_grid(16).unwrap();
        let mut r = rng(8);
        let gl2 = descriptor(GroupName::GL, 2).unwrap();
        for _ in 0..3 {
            let p = random_pair(&g, &gl2, 3, &mut r);
            let d = ymh_gradient(&p);
            let e0 = ymh(&p);
            let e1 = ymh(&p.displaced(1e-6, &d.alpha, &d.phi));
            assert!(e1 < e0);
        }
    }
}
