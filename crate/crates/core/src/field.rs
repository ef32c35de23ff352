//! Matrix-valued fields on the torus with form-type tracking.
//!
//! Coefficients are stored in position space, site-major and then row-major
//! within each `n × n` matrix. Form kinds follow the Dolbeault bidegree of
//! the object a field represents: `Form01` holds `a dz̄` coefficients,
//! `Form10` holds `b dz`, `Density11` holds the coefficient of `dz ∧ dz̄`.
//! With `A = α dz̄ − α* dz` the curvature `dA + A∧A` is
//! `(∂_z α + ∂_z̄ α* + [α, α*]) dz∧dz̄`, and that sign is the only
//! orientation convention used anywhere in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::{self, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    Function,
    Form01,
    Form10,
    Density11,
}

impl FieldKind {
    pub fn adjoint(self) -> FieldKind {
        match self {
            FieldKind::Form01 => FieldKind::Form10,
            FieldKind::Form10 => FieldKind::Form01,
            k => k,
        }
    }

    pub fn dz(self) -> Option<FieldKind> {
        match self {
            FieldKind::Form01 => Some(FieldKind::Density11),
            FieldKind::Function => Some(FieldKind::Form10),
            _ => None,
        }
    }

    pub fn dzbar(self) -> Option<FieldKind> {
        match self {
            FieldKind::Form10 => Some(FieldKind::Density11),
            FieldKind::Function => Some(FieldKind::Form01),
            _ => None,
        }
    }

    /// Kind of a pointwise product or bracket of `self` with `other`.
    pub fn product(self, other: FieldKind) -> Option<FieldKind> {
        use FieldKind::*;
        match (self, other) {
            (Function, k) | (k, Function) => Some(k),
            (Form01, Form10) | (Form10, Form01) => Some(Density11),
            _ => None,
        }
    }
}

#[derive(Clone)]
pub struct MatrixField {
    grid: Grid,
    n: usize,
    kind: FieldKind,
    data: Vec<C64>,
}

impl std::fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatrixField")
            .field("side", &self.grid.side())
            .field("n", &self.n)
            .field("kind", &self.kind)
            .finish()
    }
}

impl PartialEq for MatrixField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.n == other.n && self.kind == other.kind && self.data == other.data
    }
}

impl MatrixField {
    pub fn zeros(grid: &Grid, n: usize, kind: FieldKind) -> Self {
        Self {
            grid: grid.clone(),
            n,
            kind,
            data: vec![matrix::zero(); grid.sites() * n * n],
        }
    }

    pub fn from_data(grid: &Grid, n: usize, kind: FieldKind, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.sites() * n * n {
            return Err(Error::ShapeMismatch {
                op: "from_data",
                detail: format!("expected {} values, got {}", grid.sites() * n * n, data.len()),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            n,
            kind,
            data,
        })
    }

    /// Same matrix at every site.
    pub fn constant(grid: &Grid, kind: FieldKind, mat: &[C64]) -> Self {
        let n = (mat.len() as f64).sqrt() as usize;
        assert_eq!(n * n, mat.len(), "constant field needs a square matrix");
        let mut data = Vec::with_capacity(grid.sites() * n * n);
        for _ in 0..grid.sites() {
            data.extend_from_slice(mat);
        }
        Self {
            grid: grid.clone(),
            n,
            kind,
            data,
        }
    }

    /// Builds a field by evaluating `f(x, y, out)` at every site.
    pub fn from_fn(grid: &Grid, n: usize, kind: FieldKind, mut f: impl FnMut(f64, f64, &mut [C64])) -> Self {
        let mut field = Self::zeros(grid, n, kind);
        let n2 = n * n;
        for s in 0..grid.sites() {
            let (x, y) = grid.coords(s);
            f(x, y, &mut field.data[s * n2..(s + 1) * n2]);
        }
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn site(&self, s: usize) -> &[C64] {
        let n2 = self.n * self.n;
        &self.data[s * n2..(s + 1) * n2]
    }

    pub fn site_mut(&mut self, s: usize) -> &mut [C64] {
        let n2 = self.n * self.n;
        &mut self.data[s * n2..(s + 1) * n2]
    }

    pub fn sites(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks_exact(self.n * self.n)
    }

    /// Reinterprets the form type without touching data.
    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    /// Contraction of a `(1,1)` density with the flat Kähler form.
    ///
    /// On the unit-area flat torus this is a relabeling: the moment density
    /// becomes an `End`-valued function that can act on forms by bracket.
    pub fn contract(&self) -> Result<MatrixField> {
        if self.kind != FieldKind::Density11 {
            return Err(Error::KindViolation {
                op: "contract",
                kinds: vec![self.kind],
            });
        }
        Ok(self.clone().with_kind(FieldKind::Function))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// True when every site holds bit-identical values.
    pub fn is_uniform(&self) -> bool {
        let n2 = self.n * self.n;
        let first = &self.data[..n2];
        self.data.chunks_exact(n2).all(|c| c == first)
    }

    pub(crate) fn check_same_shape(&self, other: &MatrixField, op: &'static str) -> Result<()> {
        if self.grid != other.grid || self.n != other.n {
            return Err(Error::ShapeMismatch {
                op,
                detail: format!(
                    "grid {}/{} rank {}/{}",
                    self.grid.side(),
                    other.grid.side(),
                    self.n,
                    other.n
                ),
            });
        }
        Ok(())
    }

    fn check_same(&self, other: &MatrixField, op: &'static str) -> Result<()> {
        self.check_same_shape(other, op)?;
        if self.kind != other.kind {
            return Err(Error::KindViolation {
                op,
                kinds: vec![self.kind, other.kind],
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &MatrixField) -> Result<MatrixField> {
        self.check_same(other, "add")?;
        let mut out = self.clone();
        out.add_assign_unchecked(other, C64::new(1.0, 0.0));
        Ok(out)
    }

    pub fn try_sub(&self, other: &MatrixField) -> Result<MatrixField> {
        self.check_same(other, "sub")?;
        let mut out = self.clone();
        out.add_assign_unchecked(other, C64::new(-1.0, 0.0));
        Ok(out)
    }

    /// `self += s · other`
    pub fn axpy(&mut self, s: C64, other: &MatrixField) -> Result<()> {
        self.check_same(other, "axpy")?;
        self.add_assign_unchecked(other, s);
        Ok(())
    }

    pub(crate) fn add_assign_unchecked(&mut self, other: &MatrixField, s: C64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scale(&self, s: C64) -> MatrixField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn scale_real(&self, s: f64) -> MatrixField {
        self.scale(C64::new(s, 0.0))
    }

    /// Pointwise conjugate transpose; swaps `Form01` and `Form10`.
    pub fn adjoint(&self) -> MatrixField {
        let n = self.n;
        let n2 = n * n;
        let mut data = vec![matrix::zero(); self.data.len()];
        for (src, dst) in self.data.chunks_exact(n2).zip(data.chunks_exact_mut(n2)) {
            matrix::adjoint_into(src, dst, n);
        }
        MatrixField {
            grid: self.grid.clone(),
            n,
            kind: self.kind.adjoint(),
            data,
        }
    }

    /// `⟨u, v⟩ = (1/N²) Σ_sites trace(u · v*)`
    pub fn inner(&self, other: &MatrixField) -> Result<C64> {
        self.check_same(other, "inner")?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &MatrixField) -> C64 {
        let sum: C64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum();
        sum / self.grid.sites() as f64
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.sites() as f64
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    /// Largest pointwise Frobenius norm.
    pub fn sup_norm(&self) -> f64 {
        self.sites().map(|m| matrix::norm_sqr(m).sqrt()).fold(0.0, f64::max)
    }

    /// Pointwise `u·v − v·u` with kind tracking.
    pub fn commutator(&self, other: &MatrixField) -> Result<MatrixField> {
        self.check_same_shape(other, "commutator")?;
        let kind = self.kind.product(other.kind).ok_or(Error::KindViolation {
            op: "commutator",
            kinds: vec![self.kind, other.kind],
        })?;
        Ok(self.pointwise(other, kind, matrix::commutator_into))
    }

    /// Pointwise matrix product with kind tracking.
    pub fn matmul(&self, other: &MatrixField) -> Result<MatrixField> {
        self.check_same_shape(other, "matmul")?;
        let kind = self.kind.product(other.kind).ok_or(Error::KindViolation {
            op: "matmul",
            kinds: vec![self.kind, other.kind],
        })?;
        Ok(self.pointwise(other, kind, matrix::mul_into))
    }

    pub(crate) fn pointwise(
        &self,
        other: &MatrixField,
        kind: FieldKind,
        op: fn(&[C64], &[C64], &mut [C64], usize),
    ) -> MatrixField {
        let n = self.n;
        let n2 = n * n;
        let mut data = vec![matrix::zero(); self.data.len()];
        for ((a, b), out) in self
            .data
            .chunks_exact(n2)
            .zip(other.data.chunks_exact(n2))
            .zip(data.chunks_exact_mut(n2))
        {
            op(a, b, out, n);
        }
        MatrixField {
            grid: self.grid.clone(),
            n,
            kind,
            data,
        }
    }

    /// Applies `f` to each site matrix.
    pub fn map_sites(&self, kind: FieldKind, mut f: impl FnMut(&[C64], &mut [C64])) -> MatrixField {
        let n2 = self.n * self.n;
        let mut data = vec![matrix::zero(); self.data.len()];
        for (a, out) in self.data.chunks_exact(n2).zip(data.chunks_exact_mut(n2)) {
            f(a, out);
        }
        MatrixField {
            grid: self.grid.clone(),
            n: self.n,
            kind,
            data,
        }
    }

    /// Fourier coefficients in the same site-major layout.
    pub fn spectrum(&self) -> Vec<C64> {
        let mut out = self.data.clone();
        transform_entries(&self.grid, self.n * self.n, &mut out, true);
        out
    }

    pub fn from_spectrum(grid: &Grid, n: usize, kind: FieldKind, mut coeffs: Vec<C64>) -> Result<MatrixField> {
        if coeffs.len() != grid.sites() * n * n {
            return Err(Error::ShapeMismatch {
                op: "from_spectrum",
                detail: format!("{} coefficients", coeffs.len()),
            });
        }
        transform_entries(grid, n * n, &mut coeffs, false);
        Ok(MatrixField {
            grid: grid.clone(),
            n,
            kind,
            data: coeffs,
        })
    }

    fn apply_multiplier(&self, mult: &[C64], kind: FieldKind) -> MatrixField {
        if self.is_uniform() {
            return MatrixField::zeros(&self.grid, self.n, kind);
        }
        let n2 = self.n * self.n;
        let mut spec = self.spectrum();
        for (s, chunk) in spec.chunks_exact_mut(n2).enumerate() {
            let m = mult[s];
            chunk.iter_mut().for_each(|c| *c *= m);
        }
        transform_entries(&self.grid, n2, &mut spec, false);
        MatrixField {
            grid: self.grid.clone(),
            n: self.n,
            kind,
            data: spec,
        }
    }

    /// Spectral `∂_z`: multiplies mode `(p, q)` by `πi(p − iq)`.
    pub fn d_z(&self) -> Result<MatrixField> {
        let kind = self.kind.dz().ok_or(Error::KindViolation {
            op: "d_z",
            kinds: vec![self.kind],
        })?;
        Ok(self.apply_multiplier(self.grid.dz_multiplier(), kind))
    }

    /// Spectral `∂_z̄`: multiplies mode `(p, q)` by `πi(p + iq)`.
    pub fn d_zbar(&self) -> Result<MatrixField> {
        let kind = self.kind.dzbar().ok_or(Error::KindViolation {
            op: "d_zbar",
            kinds: vec![self.kind],
        })?;
        Ok(self.apply_multiplier(self.grid.dzbar_multiplier(), kind))
    }

    /// Zeroes modes outside `|p|, |q| ≤ N/3` (2/3 rule).
    pub fn dealias(&mut self) {
        if self.is_uniform() {
            return;
        }
        let n2 = self.n * self.n;
        let cut = (self.grid.side() / 3) as i64;
        let mut spec = self.spectrum();
        for (s, chunk) in spec.chunks_exact_mut(n2).enumerate() {
            let (p, q) = self.grid.mode(s);
            if p.abs() > cut || q.abs() > cut {
                chunk.iter_mut().for_each(|c| *c = matrix::zero());
            }
        }
        transform_entries(&self.grid, n2, &mut spec, false);
        self.data = spec;
    }

    /// Spatial mean of the matrix entries.
    pub fn mean(&self) -> Vec<C64> {
        let n2 = self.n * self.n;
        let mut acc = vec![matrix::zero(); n2];
        for m in self.sites() {
            for (a, v) in acc.iter_mut().zip(m) {
                *a += v;
            }
        }
        let inv = 1.0 / self.grid.sites() as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        acc
    }

    pub fn max_abs_diff(&self, other: &MatrixField) -> f64 {
        matrix::max_abs_diff(&self.data, &other.data)
    }
}

/// Transforms each matrix entry plane of interleaved site-major data.
pub(crate) fn transform_entries(grid: &Grid, stride: usize, data: &mut [C64], forward: bool) {
    let sites = grid.sites();
    let mut plane = vec![matrix::zero(); sites];
    let mut scratch = vec![matrix::zero(); sites];
    for e in 0..stride {
        for s in 0..sites {
            plane[s] = data[s * stride + e];
        }
        if forward {
            grid.fft2(&mut plane, &mut scratch);
        } else {
            grid.ifft2(&mut plane, &mut scratch);
        }
        for s in 0..sites {
            data[s * stride + e] = plane[s];
        }
    }
}

/// Discretized section of the trivial rank-`n` bundle.
#[derive(Clone, Debug)]
pub struct SectionField {
    grid: Grid,
    n: usize,
    data: Vec<C64>,
}

impl SectionField {
    pub fn zeros(grid: &Grid, n: usize) -> Self {
        Self {
            grid: grid.clone(),
            n,
            data: vec![matrix::zero(); grid.sites() * n],
        }
    }

    pub fn from_data(grid: &Grid, n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.sites() * n {
            return Err(Error::ShapeMismatch {
                op: "SectionField::from_data",
                detail: format!("expected {} values, got {}", grid.sites() * n, data.len()),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            n,
            data,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn inner(&self, other: &SectionField) -> Result<C64> {
        if self.grid != other.grid || self.n != other.n {
            return Err(Error::ShapeMismatch {
                op: "SectionField::inner",
                detail: format!("rank {}/{}", self.n, other.n),
            });
        }
        let sum: C64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum();
        Ok(sum / self.grid.sites() as f64)
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.sites() as f64
    }

    /// `v ↦ ∂_z̄ v + α v`
    pub fn dbar_coupled(&self, alpha: &MatrixField) -> Result<SectionField> {
        if alpha.kind() != FieldKind::Form01 {
            return Err(Error::KindViolation {
                op: "dbar_coupled",
                kinds: vec![alpha.kind()],
            });
        }
        if alpha.grid() != &self.grid || alpha.rank() != self.n {
            return Err(Error::ShapeMismatch {
                op: "dbar_coupled",
                detail: format!("rank {}/{}", alpha.rank(), self.n),
            });
        }
        let n = self.n;
        let mut spec = self.data.clone();
        transform_entries(&self.grid, n, &mut spec, true);
        let mult = self.grid.dzbar_multiplier();
        for (s, chunk) in spec.chunks_exact_mut(n).enumerate() {
            chunk.iter_mut().for_each(|c| *c *= mult[s]);
        }
        transform_entries(&self.grid, n, &mut spec, false);
        for s in 0..self.grid.sites() {
            let a = alpha.site(s);
            let v = &self.data[s * n..(s + 1) * n];
            for i in 0..n {
                let mut acc = matrix::zero();
                for j in 0..n {
                    acc += a[i * n + j] * v[j];
                }
                spec[s * n + i] += acc;
            }
        }
        Ok(SectionField {
            grid: self.grid.clone(),
            n,
            data: spec,
        })
    }
}
