//! *-closed Lie subalgebras of `gl(n, C)` and their representations.
//!
//! A descriptor carries the Frobenius-orthogonal projector onto its algebra
//! `𝔥`; the complement is the normal bundle in `End(W) = ad ⊕ F₀`. Every
//! descriptor is checked at construction: the projector must be idempotent,
//! self-adjoint, commute with `*`, and its image must be bracket-closed.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::higgs::{ymh_gradient, HiggsPair};
use crate::matrix::{self, C64};

const DESCRIPTOR_TOL: f64 = 1e-12;
const GRAM_SCHMIDT_TOL: f64 = 1e-12;
/// Subalgebra precondition of [`check_tangency`].
pub const TANGENCY_INPUT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupName {
    GL,
    SL,
    SO,
    SP,
}

impl GroupName {
    pub fn tag(self) -> u32 {
        match self {
            GroupName::GL => 0,
            GroupName::SL => 1,
            GroupName::SO => 2,
            GroupName::SP => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        Some(match tag {
            0 => GroupName::GL,
            1 => GroupName::SL,
            2 => GroupName::SO,
            3 => GroupName::SP,
            _ => return None,
        })
    }
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupName::GL => "GL",
            GroupName::SL => "SL",
            GroupName::SO => "SO",
            GroupName::SP => "SP",
        };
        f.write_str(s)
    }
}

impl FromStr for GroupName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GL" => Ok(GroupName::GL),
            "SL" => Ok(GroupName::SL),
            "SO" => Ok(GroupName::SO),
            "SP" => Ok(GroupName::SP),
            other => Err(Error::InvalidParameter(format!("unknown group {other:?}"))),
        }
    }
}

type ProjectorFn = Arc<dyn Fn(&[C64]) -> Vec<C64> + Send + Sync>;

pub struct GroupDescriptor {
    name: GroupName,
    n: usize,
    form: Option<Vec<C64>>,
    projector: ProjectorFn,
    /// Hermitian, Frobenius-orthonormal basis of `𝔥`.
    basis: Vec<Vec<C64>>,
}

impl fmt::Debug for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupDescriptor")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("dim", &self.basis.len())
            .finish()
    }
}

impl PartialEq for GroupDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.n == other.n
    }
}

/// Standard symplectic form `[[0, I], [−I, 0]]`.
pub fn standard_symplectic(n: usize) -> Vec<C64> {
    let h = n / 2;
    let mut j = vec![matrix::zero(); n * n];
    for i in 0..h {
        j[i * n + (i + h)] = C64::new(1.0, 0.0);
        j[(i + h) * n + i] = C64::new(-1.0, 0.0);
    }
    j
}

pub fn descriptor(name: GroupName, n: usize) -> Result<Arc<GroupDescriptor>> {
    if n == 0 {
        return Err(Error::InvalidDescriptor {
            name: name.to_string(),
            detail: "rank must be positive".into(),
        });
    }
    let (form, projector): (Option<Vec<C64>>, ProjectorFn) = match name {
        GroupName::GL => (None, Arc::new(|x: &[C64]| x.to_vec())),
        GroupName::SL => (
            None,
            Arc::new(move |x: &[C64]| {
                let shift = matrix::trace(x, n) / n as f64;
                let mut out = x.to_vec();
                for i in 0..n {
                    out[i * n + i] -= shift;
                }
                out
            }),
        ),
        GroupName::SO => (
            Some(matrix::identity(n)),
            Arc::new(move |x: &[C64]| {
                let xt = matrix::transpose(x, n);
                x.iter().zip(&xt).map(|(a, b)| (a - b) * 0.5).collect()
            }),
        ),
        GroupName::SP => {
            if !n.is_multiple_of(2) {
                return Err(Error::InvalidDescriptor {
                    name: name.to_string(),
                    detail: format!("symplectic algebra needs even rank, got {n}"),
                });
            }
            let j = standard_symplectic(n);
            let jj = j.clone();
            (
                Some(j),
                Arc::new(move |x: &[C64]| {
                    let jxtj = matrix::mul(&matrix::mul(&jj, &matrix::transpose(x, n), n), &jj, n);
                    x.iter().zip(&jxtj).map(|(a, b)| (a + b) * 0.5).collect()
                }),
            )
        }
    };
    GroupDescriptor::with_projector(name, n, form, projector)
}

impl GroupDescriptor {
    /// Builds and verifies a descriptor from an explicit projector.
    pub fn with_projector(
        name: GroupName,
        n: usize,
        form: Option<Vec<C64>>,
        projector: ProjectorFn,
    ) -> Result<Arc<GroupDescriptor>> {
        let fail = |detail: String| Error::InvalidDescriptor {
            name: format!("{name}({n})"),
            detail,
        };
        let units: Vec<Vec<C64>> = (0..n * n).map(|e| matrix::unit(n, e / n, e % n)).collect();
        let images: Vec<Vec<C64>> = units.iter().map(|u| projector(u)).collect();
        for (u, img) in units.iter().zip(&images) {
            let twice = projector(img);
            if matrix::max_abs_diff(&twice, img) > DESCRIPTOR_TOL {
                return Err(fail("projector is not idempotent".into()));
            }
            let star = projector(&matrix::adjoint(u, n));
            if matrix::max_abs_diff(&star, &matrix::adjoint(img, n)) > DESCRIPTOR_TOL {
                return Err(fail("image is not *-closed".into()));
            }
        }
        for (a, ia) in units.iter().zip(&images) {
            for (b, ib) in units.iter().zip(&images) {
                let lhs = matrix::frobenius(ia, b);
                let rhs = matrix::frobenius(a, ib);
                if (lhs - rhs).norm() > DESCRIPTOR_TOL {
                    return Err(fail("projector is not self-adjoint".into()));
                }
            }
        }
        let basis = hermitian_basis(&images, n);
        for x in &basis {
            for y in &basis {
                let br = matrix::commutator(x, y, n);
                if matrix::max_abs_diff(&projector(&br), &br) > DESCRIPTOR_TOL {
                    return Err(fail("image is not bracket-closed".into()));
                }
            }
        }
        Ok(Arc::new(GroupDescriptor {
            name,
            n,
            form,
            projector,
            basis,
        }))
    }

    pub fn name(&self) -> GroupName {
        self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn form_matrix(&self) -> Option<&[C64]> {
        self.form.as_deref()
    }

    /// Complex dimension of the subalgebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    pub fn is_proper(&self) -> bool {
        self.name != GroupName::GL
    }

    pub fn project(&self, x: &[C64]) -> Vec<C64> {
        (self.projector)(x)
    }

    pub fn project_field(&self, f: &MatrixField) -> MatrixField {
        if !self.is_proper() {
            return f.clone();
        }
        f.map_sites(f.kind(), |m, out| out.copy_from_slice(&self.project(m)))
    }

    pub(crate) fn offalg_norm2(&self, f: &MatrixField) -> f64 {
        if !self.is_proper() {
            return 0.0;
        }
        let sum: f64 = f
            .sites()
            .map(|m| matrix::norm_sqr(&matrix::sub(m, &self.project(m))))
            .sum();
        sum / f.grid().sites() as f64
    }
}

/// Real modified Gram-Schmidt over the Hermitian parts of the images.
fn hermitian_basis(images: &[Vec<C64>], n: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let half = C64::new(0.5, 0.0);
    let minus_half_i = C64::new(0.0, -0.5);
    for x in images {
        let xs = matrix::adjoint(x, n);
        let re = matrix::scaled(&matrix::add(x, &xs), half);
        let im = matrix::scaled(&matrix::sub(x, &xs), minus_half_i);
        for mut v in [re, im] {
            for b in &basis {
                let c = matrix::frobenius(&v, b).re;
                v.iter_mut().zip(b).for_each(|(a, bb)| *a -= bb * c);
            }
            let norm = matrix::norm_sqr(&v).sqrt();
            if norm > GRAM_SCHMIDT_TOL {
                basis.push(matrix::scaled(&v, C64::new(1.0 / norm, 0.0)));
            }
        }
    }
    basis
}

/// `f = tangent + normal` with `tangent ∈ 𝔥` pointwise.
pub fn split_field(f: &MatrixField, group: &GroupDescriptor) -> Result<(MatrixField, MatrixField)> {
    if f.rank() != group.n() {
        return Err(Error::ShapeMismatch {
            op: "split_field",
            detail: format!("field rank {} vs group rank {}", f.rank(), group.n()),
        });
    }
    let tangent = group.project_field(f);
    let normal = f.try_sub(&tangent)?;
    Ok((tangent, normal))
}

/// Norm of the normal component of the ambient gradient at an
/// `𝔥`-valued pair.
pub fn check_tangency(pair: &HiggsPair) -> Result<f64> {
    let residual = pair.offalg_residual();
    if residual > TANGENCY_INPUT_TOL {
        return Err(Error::NotInSubalgebra { residual });
    }
    let descent = ymh_gradient(&pair.as_ambient());
    let group = pair.group();
    Ok((group.offalg_norm2(&descent.alpha) + group.offalg_norm2(&descent.phi)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepresentationKind {
    Inclusion,
    Adjoint,
}

/// Lie algebra representation given on the source's Hermitian basis.
#[derive(Debug, Clone)]
pub struct Representation {
    kind: RepresentationKind,
    source: Arc<GroupDescriptor>,
    target: Arc<GroupDescriptor>,
    images: Vec<Vec<C64>>,
}

impl Representation {
    /// The defining representation `𝔥 ⊂ gl(n)`.
    pub fn inclusion(group: &Arc<GroupDescriptor>) -> Result<Self> {
        Ok(Self {
            kind: RepresentationKind::Inclusion,
            source: group.clone(),
            target: descriptor(GroupName::GL, group.n())?,
            images: group.basis().to_vec(),
        })
    }

    pub fn kind(&self) -> RepresentationKind {
        self.kind
    }

    pub fn source(&self) -> &Arc<GroupDescriptor> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GroupDescriptor> {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.target.n()
    }

    pub fn images(&self) -> &[Vec<C64>] {
        &self.images
    }

    /// Largest deviation of `[R_a, R_b] − Σ_c f_ab^c R_c`.
    pub fn bracket_defect(&self) -> f64 {
        let n = self.source.n();
        let d = self.dim();
        let basis = self.source.basis();
        let mut worst: f64 = 0.0;
        for (a, ta) in basis.iter().enumerate() {
            for (b, tb) in basis.iter().enumerate() {
                let br = matrix::commutator(ta, tb, n);
                let mut expect = vec![matrix::zero(); d * d];
                for (c, tc) in basis.iter().enumerate() {
                    let f = matrix::frobenius(&br, tc);
                    expect.iter_mut().zip(&self.images[c]).for_each(|(e, r)| *e += f * r);
                }
                let got = matrix::commutator(&self.images[a], &self.images[b], d);
                worst = worst.max(matrix::max_abs_diff(&got, &expect));
            }
        }
        worst
    }

    /// Image of a single algebra element.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        if self.kind == RepresentationKind::Inclusion {
            return x.to_vec();
        }
        let d = self.dim();
        let mut out = vec![matrix::zero(); d * d];
        for (t, r) in self.source.basis().iter().zip(&self.images) {
            let c = matrix::frobenius(x, t);
            out.iter_mut().zip(r).for_each(|(o, rr)| *o += c * rr);
        }
        out
    }
}

/// Adjoint representation of a proper subalgebra, landing in `so(dim)`.
pub fn adjoint_rep(group: &Arc<GroupDescriptor>) -> Result<Representation> {
    if !group.is_proper() {
        return Err(Error::InvalidDescriptor {
            name: format!("{}({})", group.name(), group.n()),
            detail: "adjoint representation requires SL, SO or SP".into(),
        });
    }
    let n = group.n();
    let basis = group.basis();
    let d = basis.len();
    let images: Vec<Vec<C64>> = basis
        .iter()
        .map(|ta| {
            let mut r = vec![matrix::zero(); d * d];
            for (b, tb) in basis.iter().enumerate() {
                let br = matrix::commutator(ta, tb, n);
                for (c, tc) in basis.iter().enumerate() {
                    r[c * d + b] = matrix::frobenius(&br, tc);
                }
            }
            r
        })
        .collect();
    let target = descriptor(GroupName::SO, d)?;
    let rep = Representation {
        kind: RepresentationKind::Adjoint,
        source: group.clone(),
        target: target.clone(),
        images,
    };
    for r in &rep.images {
        if matrix::max_abs_diff(&target.project(r), r) > DESCRIPTOR_TOL {
            return Err(Error::InvalidDescriptor {
                name: format!("ad {}({n})", group.name()),
                detail: "adjoint images are not antisymmetric".into(),
            });
        }
    }
    let defect = rep.bracket_defect();
    if defect > DESCRIPTOR_TOL {
        return Err(Error::InvalidDescriptor {
            name: format!("ad {}({n})", group.name()),
            detail: format!("bracket defect {defect:e}"),
        });
    }
    Ok(rep)
}

/// Pushes a pair through a representation, site by site.
pub fn induce_representation(pair: &HiggsPair, rep: &Representation) -> Result<HiggsPair> {
    if **pair.group() != **rep.source() {
        return Err(Error::InvalidDescriptor {
            name: format!("{}({})", pair.group().name(), pair.group().n()),
            detail: format!(
                "representation source is {}({})",
                rep.source().name(),
                rep.source().n()
            ),
        });
    }
    if rep.kind() == RepresentationKind::Inclusion {
        return Ok(HiggsPair::from_parts(
            pair.alpha().clone(),
            pair.phi().clone(),
            rep.target().clone(),
        ));
    }
    let d = rep.dim();
    let grid = pair.grid();
    let push = |f: &MatrixField| -> MatrixField {
        let mut data = Vec::with_capacity(grid.sites() * d * d);
        for m in f.sites() {
            data.extend(rep.apply(m));
        }
        MatrixField::from_data(grid, d, f.kind(), data).expect("rep dimension is consistent")
    };
    HiggsPair::new(push(pair.alpha()), push(pair.phi()), rep.target().clone())
}
