//! Reduction of the structure group to the Levi subgroup of an orthogonal
//! holomorphic splitting `Cⁿ = im P₀ ⊕ … ⊕ im P_k`.
//!
//! When every `im P_i` is holomorphic and the splitting is orthogonal, the
//! moment map commutes with each `P_i`, the projectors stay fixed along the
//! flow, and only the diagonal blocks `P_i α P_i` move. Pairs obeying this
//! form an affine subspace: off-diagonal blocks of `α` are frozen at their
//! initial values and `φ` preserves the filtration `im P₀ ⊂ im P₀ ⊕ im P₁ ⊂ …`.
//! Restricting the flow to it is the gradient flow of the restricted energy,
//! whose gradient is the orthogonal projection of the ambient one.
//!
//! When every block has rank one the descent is also made orthogonal to the
//! unitary gauge directions of the diagonal torus `ξ = Σ iθ_i P_i`. Those
//! components vanish for the exact flow but not on the grid, where products
//! alias; left in, they make the flow creep along nearly flat gauge orbits.

use crate::error::{Error, Result};
use crate::field::{FieldKind, MatrixField};
use crate::higgs::{Descent, HiggsPair};
use crate::matrix::{self, C64};

const PROJECTOR_TOL: f64 = 1e-10;
const GAUGE_CG_TOL: f64 = 1e-12;
const GAUGE_CG_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct LeviReduction {
    blocks: Vec<MatrixField>,
    alpha_offdiag: MatrixField,
    rank_one: bool,
}

impl LeviReduction {
    /// `blocks` in order of decreasing slope; `alpha` supplies the frozen
    /// off-diagonal blocks.
    pub fn new(blocks: Vec<MatrixField>, alpha: &MatrixField) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidParameter("reduction needs at least one block".into()))?;
        let n = first.rank();
        let grid = first.grid().clone();
        if alpha.rank() != n || alpha.grid() != &grid || alpha.kind() != FieldKind::Form01 {
            return Err(Error::ShapeMismatch {
                op: "LeviReduction::new",
                detail: "alpha must be a Form01 field on the blocks' grid and rank".into(),
            });
        }
        let id = matrix::identity(n);
        let mut worst: f64 = 0.0;
        let mut rank_one = true;
        for s in 0..grid.sites() {
            let mut sum = vec![matrix::zero(); n * n];
            for (i, p) in blocks.iter().enumerate() {
                let pi = p.site(s);
                worst = worst.max(matrix::max_abs_diff(&matrix::mul(pi, pi, n), pi));
                worst = worst.max(matrix::max_abs_diff(&matrix::adjoint(pi, n), pi));
                let tr: C64 = (0..n).map(|a| pi[a * n + a]).sum();
                rank_one &= (tr.re - 1.0).abs() < 0.5;
                for q in &blocks[i + 1..] {
                    let cross = matrix::mul(pi, q.site(s), n);
                    worst = worst.max(cross.iter().map(|c| c.norm()).fold(0.0, f64::max));
                }
                sum = matrix::add(&sum, pi);
            }
            worst = worst.max(matrix::max_abs_diff(&sum, &id));
        }
        if worst > PROJECTOR_TOL {
            return Err(Error::InvalidParameter(format!(
                "blocks are not complementary orthogonal projectors (defect {worst:e})"
            )));
        }
        let mut reduction = Self {
            blocks,
            alpha_offdiag: MatrixField::zeros(&grid, n, FieldKind::Form01),
            rank_one,
        };
        reduction.alpha_offdiag = reduction.block_part(alpha, |i, j| i != j);
        Ok(reduction)
    }

    pub fn blocks(&self) -> &[MatrixField] {
        &self.blocks
    }

    /// `Σ P_i f P_j` over the block pairs selected by `keep`.
    fn block_part(&self, f: &MatrixField, keep: impl Fn(usize, usize) -> bool) -> MatrixField {
        let n = f.rank();
        let k = self.blocks.len();
        let mut out = MatrixField::zeros(f.grid(), n, f.kind());
        let mut left = vec![matrix::zero(); n * n];
        let mut both = vec![matrix::zero(); n * n];
        for s in 0..f.grid().sites() {
            let fs = f.site(s);
            let o = out.site_mut(s);
            for i in 0..k {
                matrix::mul_into(self.blocks[i].site(s), fs, &mut left, n);
                for j in 0..k {
                    if keep(i, j) {
                        matrix::mul_into(&left, self.blocks[j].site(s), &mut both, n);
                        o.iter_mut().zip(&both).for_each(|(a, b)| *a += b);
                    }
                }
            }
        }
        out
    }

    /// Tangential part of a flow direction at `pair`.
    pub fn project_descent(&self, pair: &HiggsPair, d: &Descent) -> Descent {
        let mut out = Descent {
            alpha: self.block_part(&d.alpha, |i, j| i == j),
            phi: self.block_part(&d.phi, |i, j| i <= j),
        };
        if self.rank_one {
            self.remove_torus_gauge(pair, &mut out);
        }
        out
    }

    /// Subtracts the least-squares fit of `d` by torus gauge directions
    /// `(Σ ∂̄(iθ_i) P_i, Σ_{i<j} i(θ_i − θ_j) P_i φ P_j)` with real `θ_i`.
    fn remove_torus_gauge(&self, pair: &HiggsPair, d: &mut Descent) {
        let grid = pair.grid().clone();
        let sites = grid.sites();
        let n = pair.rank();
        let k = self.blocks.len();
        let phi = pair.phi();
        let mut pairs = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let part = self.block_part(phi, |a, b| a == i && b == j);
                if part.norm2() > 0.0 {
                    pairs.push((i, j, part));
                }
            }
        }
        let scalar = |data: Vec<C64>, kind| MatrixField::from_data(&grid, 1, kind, data).expect("scalar layout");
        let trace_with = |f: &MatrixField, m: &MatrixField, s: usize| -> C64 {
            f.site(s).iter().zip(m.site(s)).map(|(x, y)| x.conj() * y).sum()
        };
        // G^T: (scalar α-components, φ-field) -> per-block real functions
        let adjoint = |a: &[MatrixField], r: &MatrixField| -> Vec<Vec<f64>> {
            let mut out: Vec<Vec<f64>> = a
                .iter()
                .map(|ai| {
                    let da = ai.d_z().expect("Form01 admits ∂_z");
                    da.data().iter().map(|c| -c.im).collect()
                })
                .collect();
            for (i, j, pij) in &pairs {
                for s in 0..sites {
                    let c = trace_with(pij, r, s).im;
                    out[*i][s] += c;
                    out[*j][s] -= c;
                }
            }
            out
        };
        let forward = |theta: &[Vec<f64>]| -> (Vec<MatrixField>, MatrixField) {
            let a = theta
                .iter()
                .map(|t| {
                    let f = scalar(t.iter().map(|&x| C64::new(0.0, x)).collect(), FieldKind::Function);
                    f.d_zbar().expect("Function admits ∂_z̄")
                })
                .collect();
            let mut r = MatrixField::zeros(&grid, n, FieldKind::Form10);
            for (i, j, pij) in &pairs {
                for s in 0..sites {
                    let w = C64::new(0.0, theta[*i][s] - theta[*j][s]);
                    r.site_mut(s).iter_mut().zip(pij.site(s)).for_each(|(o, x)| *o += w * x);
                }
            }
            (a, r)
        };
        let components: Vec<MatrixField> = self
            .blocks
            .iter()
            .map(|p| scalar((0..sites).map(|s| trace_with(p, &d.alpha, s)).collect(), FieldKind::Form01))
            .collect();
        let b = adjoint(&components, &d.phi);
        let dot = |x: &[Vec<f64>], y: &[Vec<f64>]| -> f64 {
            x.iter().zip(y).map(|(u, v)| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>() / sites as f64
        };
        let bnorm = dot(&b, &b).sqrt();
        if bnorm == 0.0 {
            return;
        }
        // Flat Laplacian preconditioner. Without φ the modes it annihilates
        // are null for the whole operator and are dropped; with φ they get
        // the φ weight, and the common constant shift is always null.
        let weight = 2.0 * pairs.iter().map(|(_, _, p)| p.norm2()).sum::<f64>() + std::f64::consts::PI.powi(2);
        let precondition = |r: &[Vec<f64>]| -> Vec<Vec<f64>> {
            let mut z: Vec<Vec<f64>> = r
                .iter()
                .map(|ri| {
                    let f = scalar(ri.iter().map(|&x| C64::new(x, 0.0)).collect(), FieldKind::Function);
                    let mut spec = f.spectrum();
                    for (c, m) in spec.iter_mut().zip(grid.dzbar_multiplier()) {
                        let lap = m.norm_sqr();
                        *c = if lap > 0.0 {
                            *c / lap
                        } else if pairs.is_empty() {
                            C64::new(0.0, 0.0)
                        } else {
                            *c / weight
                        };
                    }
                    let back = MatrixField::from_spectrum(&grid, 1, FieldKind::Function, spec).expect("scalar layout");
                    back.data().iter().map(|c| c.re).collect()
                })
                .collect();
            let shift = z.iter().flatten().sum::<f64>() / (k * sites) as f64;
            z.iter_mut().flatten().for_each(|x| *x -= shift);
            z
        };
        let apply = |t: &[Vec<f64>]| {
            let (a, r) = forward(t);
            adjoint(&a, &r)
        };
        let mut theta = vec![vec![0.0; sites]; k];
        let mut r = b;
        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..GAUGE_CG_MAX_ITER {
            let ap = apply(&p);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let step = rz / pap;
            for b in 0..k {
                for s in 0..sites {
                    theta[b][s] += step * p[b][s];
                    r[b][s] -= step * ap[b][s];
                }
            }
            if dot(&r, &r).sqrt() <= GAUGE_CG_TOL * bnorm {
                break;
            }
            z = precondition(&r);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for b in 0..k {
                for s in 0..sites {
                    p[b][s] = z[b][s] + beta * p[b][s];
                }
            }
        }
        let (a, r) = forward(&theta);
        for (ai, block) in a.iter().zip(&self.blocks) {
            for s in 0..sites {
                let c = ai.site(s)[0];
                d.alpha.site_mut(s).iter_mut().zip(block.site(s)).for_each(|(o, x)| *o -= c * x);
            }
        }
        d.phi.add_assign_unchecked(&r, C64::new(-1.0, 0.0));
    }

    /// Nearest pair in the reduced affine subspace.
    pub fn project_pair(&self, pair: &HiggsPair) -> HiggsPair {
        let mut alpha = self.block_part(pair.alpha(), |i, j| i == j);
        alpha.add_assign_unchecked(&self.alpha_offdiag, C64::new(1.0, 0.0));
        let phi = self.block_part(pair.phi(), |i, j| i <= j);
        HiggsPair::from_parts(alpha, phi, pair.group().clone())
    }

    /// Distance of a pair from the reduced subspace.
    pub fn normal_residual(&self, pair: &HiggsPair) -> f64 {
        let p = self.project_pair(pair);
        let da = pair.alpha().try_sub(p.alpha()).expect("same shape").norm2();
        let dp = pair.phi().try_sub(p.phi()).expect("same shape").norm2();
        (da + dp).sqrt()
    }

    /// Keeps only the filtration-preserving blocks of a Higgs field.
    pub fn filtered_phi(&self, phi: &MatrixField) -> MatrixField {
        self.block_part(phi, |i, j| i <= j)
    }
}
