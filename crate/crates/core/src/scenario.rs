//! Initial Higgs pairs with known Harder-Narasimhan and socle data.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::CHERN_SIGN;
use crate::error::{Error, Result};
use crate::field::{FieldKind, MatrixField};
use crate::grid::Grid;
use crate::group::{adjoint_rep, descriptor, induce_representation, GroupDescriptor, GroupName};
use crate::higgs::HiggsPair;
use crate::kernel::{project_to_higgs_within, GapTolerance};
use crate::matrix::{self, C64};
use crate::reduction::LeviReduction;

const PROJECTOR_TOL: f64 = 1e-10;
/// Relative residual of the holomorphic projection of the S7 Higgs field.
const S7_PROJECTION_TOL: f64 = 1e-10;

fn sigma(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

fn sigma_prime(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        sigma(u) / (u * u)
    }
}

/// C∞ step from 0 at `u ≤ 0` to 1 at `u ≥ 1`, with derivative.
fn smoothstep(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, b) = (sigma(u), sigma(1.0 - u));
    let s = a / (a + b);
    let ds = (sigma_prime(u) * b + a * sigma_prime(1.0 - u)) / ((a + b) * (a + b));
    (s, ds)
}

fn wrap(d: f64) -> f64 {
    d - (d + 0.5).floor()
}

/// Rank-one projector field whose image winds `degree` times around a disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProjector {
    pub center: (f64, f64),
    pub radius: f64,
    pub degree: i64,
}

type Frame = ([f64; 3], [f64; 3], [f64; 3]);

impl BumpProjector {
    pub fn new(center: (f64, f64), radius: f64, degree: i64) -> Result<Self> {
        if !(radius > 0.0 && radius < 0.5) {
            return Err(Error::InvalidParameter(format!("bump radius must lie in (0, 1/2), got {radius}")));
        }
        if !(center.0.is_finite() && center.1.is_finite()) {
            return Err(Error::InvalidParameter("bump center must be finite".into()));
        }
        Ok(Self { center, radius, degree })
    }

    /// Unit vector `n` and its analytic `x`, `y` derivatives at a point.
    fn frame(&self, x: f64, y: f64) -> Frame {
        let north = [0.0, 0.0, 1.0];
        if self.degree == 0 {
            return (north, [0.0; 3], [0.0; 3]);
        }
        let dx = wrap(x - self.center.0);
        let dy = wrap(y - self.center.1);
        let r = dx.hypot(dy);
        let u = r / self.radius;
        if u >= 1.0 {
            return (north, [0.0; 3], [0.0; 3]);
        }
        let d = self.degree as f64;
        let (s, ds) = smoothstep(u);
        let theta = PI * (1.0 - s);
        let theta_r = -PI * ds / self.radius;
        let psi = dy.atan2(dx);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = (d * psi).sin_cos();
        let n = [st * cp, st * sp, ct];
        if r == 0.0 {
            return (n, [0.0; 3], [0.0; 3]);
        }
        let n_r = [theta_r * ct * cp, theta_r * ct * sp, -theta_r * st];
        let n_psi = [-d * st * sp, d * st * cp, 0.0];
        let (rx, ry) = (dx / r, dy / r);
        let (px, py) = (-dy / (r * r), dx / (r * r));
        let nx = [0, 1, 2].map(|i| n_r[i] * rx + n_psi[i] * px);
        let ny = [0, 1, 2].map(|i| n_r[i] * ry + n_psi[i] * py);
        (n, nx, ny)
    }

    /// `(I + n·σ)/2` for a 3-vector `v`, or `(v·σ)/2` when `affine` is false.
    fn pauli(v: [f64; 3], affine: bool) -> [C64; 4] {
        let h = if affine { 0.5 } else { 0.0 };
        [
            C64::new(h + 0.5 * v[2], 0.0),
            C64::new(0.5 * v[0], -0.5 * v[1]),
            C64::new(0.5 * v[0], 0.5 * v[1]),
            C64::new(h - 0.5 * v[2], 0.0),
        ]
    }

    pub fn projector(&self, grid: &Grid) -> MatrixField {
        MatrixField::from_fn(grid, 2, FieldKind::Function, |x, y, out| {
            out.copy_from_slice(&Self::pauli(self.frame(x, y).0, true));
        })
    }

    /// Exact `∂_z̄ P = ½(∂_x P + i ∂_y P)` at the grid points.
    pub fn dbar_projector(&self, grid: &Grid) -> MatrixField {
        MatrixField::from_fn(grid, 2, FieldKind::Form01, |x, y, out| {
            let (_, nx, ny) = self.frame(x, y);
            let px = Self::pauli(nx, false);
            let py = Self::pauli(ny, false);
            for k in 0..4 {
                out[k] = 0.5 * (px[k] + C64::i() * py[k]);
            }
        })
    }

    /// `α = (2P − I) ∂_z̄ P` from the exact derivative; `im P` and `ker P`
    /// become holomorphic subbundles of degrees `±degree`.
    pub fn holomorphic_structure(&self, grid: &Grid) -> MatrixField {
        let p = self.projector(grid);
        let dp = self.dbar_projector(grid);
        reflect_times(&p, &dp)
    }

    /// `(1/4π) ∫ n · (∂_x n × ∂_y n)` with exact derivatives.
    pub fn map_degree(&self, grid: &Grid) -> f64 {
        let sum: f64 = (0..grid.sites())
            .map(|s| {
                let (x, y) = grid.coords(s);
                let (n, a, b) = self.frame(x, y);
                let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                n[0] * cross[0] + n[1] * cross[1] + n[2] * cross[2]
            })
            .sum();
        sum / grid.sites() as f64 / (4.0 * PI)
    }
}

/// `(2P − I) · f` pointwise.
fn reflect_times(p: &MatrixField, f: &MatrixField) -> MatrixField {
    let n = p.rank();
    let id = matrix::identity(n);
    let reflect = p.map_sites(FieldKind::Function, |m, out| {
        for k in 0..n * n {
            out[k] = 2.0 * m[k] - id[k];
        }
    });
    reflect.matmul(f).expect("Function times form")
}

pub fn bump_projector(grid: &Grid, center: (f64, f64), radius: f64, degree: i64) -> Result<MatrixField> {
    Ok(BumpProjector::new(center, radius, degree)?.projector(grid))
}

fn check_projector(p: &MatrixField) -> Result<()> {
    if p.kind() != FieldKind::Function {
        return Err(Error::KindViolation {
            op: "projector",
            kinds: vec![p.kind()],
        });
    }
    let n = p.rank();
    let mut worst: f64 = 0.0;
    for m in p.sites() {
        worst = worst.max(matrix::max_abs_diff(&matrix::mul(m, m, n), m));
        worst = worst.max(matrix::max_abs_diff(&matrix::adjoint(m, n), m));
    }
    if worst > PROJECTOR_TOL {
        return Err(Error::InvalidParameter(format!("not a Hermitian projector (defect {worst:e})")));
    }
    Ok(())
}

/// First Chern number of `im P`, `(1/2πi) ∫ tr(P [∂_x P, ∂_y P])` with
/// spectral derivatives, oriented by [`CHERN_SIGN`].
pub fn chern_number(p: &MatrixField) -> Result<f64> {
    check_projector(p)?;
    let n = p.rank();
    let dz = p.d_z()?.with_kind(FieldKind::Function);
    let dzbar = p.d_zbar()?.with_kind(FieldKind::Function);
    let px = dz.try_add(&dzbar)?;
    let py = dz.try_sub(&dzbar)?.scale(C64::i());
    let mut acc = C64::new(0.0, 0.0);
    let mut br = vec![matrix::zero(); n * n];
    for s in 0..p.grid().sites() {
        matrix::commutator_into(px.site(s), py.site(s), &mut br, n);
        acc += matrix::trace(&matrix::mul(p.site(s), &br, n), n);
    }
    let integral = acc / p.grid().sites() as f64;
    Ok(CHERN_SIGN * (integral / (2.0 * PI * C64::i())).re)
}

/// `α = (2P − I) ∂_z̄ P` with the spectral derivative.
pub fn split_structure(p: &MatrixField) -> Result<MatrixField> {
    check_projector(p)?;
    Ok(reflect_times(p, &p.d_zbar()?))
}

/// Largest pointwise `|(I − P)(∂_z̄ P + α P)|`; zero iff `im P` is
/// holomorphic for `∂̄ + α`.
pub fn subbundle_defect(p: &MatrixField, dbar_p: &MatrixField, alpha: &MatrixField) -> f64 {
    let n = p.rank();
    let id = matrix::identity(n);
    let mut worst: f64 = 0.0;
    for s in 0..p.grid().sites() {
        let pm = p.site(s);
        let q = matrix::sub(&id, pm);
        let inner = matrix::add(dbar_p.site(s), &matrix::mul(alpha.site(s), pm, n));
        let v = matrix::mul(&q, &inner, n);
        worst = worst.max(v.iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioName {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    #[serde(rename = "S8-S2")]
    S8S2,
    #[serde(rename = "S8-S3")]
    S8S3,
    #[serde(rename = "S8-S4")]
    S8S4,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 10] = [
        ScenarioName::S1,
        ScenarioName::S2,
        ScenarioName::S3,
        ScenarioName::S4,
        ScenarioName::S5,
        ScenarioName::S6,
        ScenarioName::S7,
        ScenarioName::S8S2,
        ScenarioName::S8S3,
        ScenarioName::S8S4,
    ];

    /// Scenario whose adjoint-induced pair this is.
    pub fn adjoint_base(self) -> Option<ScenarioName> {
        match self {
            ScenarioName::S8S2 => Some(ScenarioName::S2),
            ScenarioName::S8S3 => Some(ScenarioName::S3),
            ScenarioName::S8S4 => Some(ScenarioName::S4),
            _ => None,
        }
    }

    fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            ScenarioName::S1 => &[],
            ScenarioName::S2 | ScenarioName::S8S2 => &[("c0", 1.0)],
            ScenarioName::S3 | ScenarioName::S8S3 => &[("eps", 1.0)],
            ScenarioName::S4 | ScenarioName::S8S4 => &[("a", 1.0)],
            ScenarioName::S5 | ScenarioName::S6 => BUMP_DEFAULTS,
            ScenarioName::S7 => S7_DEFAULTS,
        }
    }

    fn groups(self) -> &'static [GroupName] {
        match self {
            ScenarioName::S1 => &[GroupName::SL, GroupName::GL],
            ScenarioName::S6 => &[GroupName::SL, GroupName::GL],
            ScenarioName::S8S2 | ScenarioName::S8S3 | ScenarioName::S8S4 => &[GroupName::SO],
            _ => &[GroupName::SL, GroupName::GL],
        }
    }

    pub fn rank(self) -> usize {
        match self {
            ScenarioName::S6 | ScenarioName::S8S2 | ScenarioName::S8S3 | ScenarioName::S8S4 => 3,
            _ => 2,
        }
    }
}

/// Sections of `O(d)` built from a bump are localized, and their Fourier
/// tails decay slower than geometrically; at `N = 32` the truncated kernel
/// vector leaves a singular value near `1e-2` while the rest of the spectrum
/// stays above `1`.
const BUMP_SECTION_GAP: GapTolerance = GapTolerance { low: 2e-2, high: 1e-1 };

const BUMP_DEFAULTS: &[(&str, f64)] = &[("degree", 1.0), ("radius", 0.45), ("center_x", 0.5), ("center_y", 0.5)];
const S7_DEFAULTS: &[(&str, f64)] = &[
    ("degree", 1.0),
    ("radius", 0.45),
    ("center_x", 0.5),
    ("center_y", 0.5),
    ("a", 0.0),
    ("b", 1.0),
];

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioName::S8S2 => "S8-S2",
            ScenarioName::S8S3 => "S8-S3",
            ScenarioName::S8S4 => "S8-S4",
            other => return fmt::Debug::fmt(other, f),
        };
        f.write_str(s)
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario {s:?}")))
    }
}

/// An expected value together with where it comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected<T> {
    pub value: T,
    pub source: String,
}

fn expect<T>(value: T, source: &str) -> Expected<T> {
    Expected {
        value,
        source: source.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: ScenarioName,
    pub rank: usize,
    pub group: GroupName,
    pub params: BTreeMap<String, f64>,
    /// Slopes `μ₁ ≥ … ≥ μ_n` of the initial pair, hence of the limit.
    pub expected_hn: Expected<Vec<f64>>,
    pub initial_h0: Option<Expected<usize>>,
    /// Section count of the limit's holomorphic structure.
    pub expected_h0: Option<Expected<usize>>,
    /// The limit Higgs field vanishes.
    pub phi_vanishes: bool,
    pub stationary: bool,
    /// Singular-value window for counting holomorphic sections.
    pub section_gap: GapTolerance,
    pub notes: String,
}

impl Scenario {
    /// Scenario with default parameters and group.
    pub fn new(name: ScenarioName) -> Self {
        Self::with_params(name, None, &BTreeMap::new()).expect("defaults are valid")
    }

    /// Scenario with parameter overrides; unknown keys are rejected.
    pub fn with_params(name: ScenarioName, group: Option<GroupName>, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut params: BTreeMap<String, f64> = name.defaults().iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in overrides {
            if !params.contains_key(k) {
                return Err(Error::InvalidParameter(format!("scenario {name} has no parameter {k:?}")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("parameter {k} must be finite")));
            }
            params.insert(k.clone(), *v);
        }
        let group = group.unwrap_or(name.groups()[0]);
        if !name.groups().contains(&group) {
            return Err(Error::InvalidParameter(format!("scenario {name} does not support group {group}")));
        }
        let degree = match params.get("degree") {
            Some(&d) if d.fract() != 0.0 => {
                return Err(Error::InvalidParameter(format!("degree must be an integer, got {d}")))
            }
            Some(&d) => d.abs(),
            None => 0.0,
        };
        let zero2 = vec![0.0, 0.0];
        let zero3 = vec![0.0, 0.0, 0.0];
        let flat = "flat trivial pair";
        let (hn, initial_h0, expected_h0, phi_vanishes, stationary, notes) = match name {
            ScenarioName::S1 => (expect(zero2, flat), Some(expect(2, "h0(O+O) = 2")), Some(expect(2, "h0(O+O) = 2")), true, true, "zero pair"),
            ScenarioName::S2 => (
                expect(zero2, "semistable extension of O by O; closed-form flow"),
                Some(expect(1, "constant-coefficient kernel: only (const, 0) survives")),
                Some(expect(2, "socle graded O+O at the limit; kernel-count oracle")),
                true,
                false,
                "nontrivial extension alpha = c0 E12",
            ),
            ScenarioName::S3 => (
                expect(zero2, "closed-form flow of the nilpotent Higgs field"),
                Some(expect(2, "alpha = 0")),
                Some(expect(2, "alpha = 0")),
                true,
                false,
                "nilpotent Higgs field phi = eps E12 on O+O",
            ),
            ScenarioName::S4 => (
                expect(zero2, "polystable, m = 0"),
                Some(expect(2, "alpha = 0")),
                Some(expect(2, "alpha = 0")),
                false,
                true,
                "diagonal Higgs field phi = diag(a, -a)",
            ),
            ScenarioName::S5 => (
                expect(vec![degree.abs(), -degree.abs()], "bump degree oracle and KAPPA calibration"),
                Some(expect(degree.abs() as usize, "h0(O(d)+O(-d)) = d on the torus")),
                Some(expect(degree.abs() as usize, "h0(O(d)+O(-d)) = d on the torus")),
                true,
                false,
                "split bundle O(d)+O(-d) from a degree-d bump projector",
            ),
            ScenarioName::S6 => (
                expect(vec![degree.abs(), 0.0, -degree.abs()], "block construction O(d)+O+O(-d)"),
                Some(expect(degree.abs() as usize + 1, "h0(O(d)+O+O(-d)) = d + 1")),
                Some(expect(degree.abs() as usize + 1, "h0(O(d)+O+O(-d)) = d + 1")),
                true,
                false,
                "rank-3 block O(d)+O(-d)+O",
            ),
            ScenarioName::S7 => (
                expect(vec![degree.abs(), -degree.abs()], "Hom-degree argument: the destabilizing sub is Higgs-invariant"),
                Some(expect(degree.abs() as usize, "h0(O(d)+O(-d)) = d on the torus")),
                Some(expect(degree.abs() as usize, "h0(O(d)+O(-d)) = d on the torus")),
                false,
                false,
                "S5 with a holomorphically projected upper-triangular Higgs field",
            ),
            ScenarioName::S8S2 => (
                expect(zero3, "adjoint of a semistable pair is semistable"),
                None,
                Some(expect(3, "adjoint of the socle graded O+O is trivial")),
                true,
                false,
                "adjoint-induced S2",
            ),
            ScenarioName::S8S3 => (
                expect(zero3, "adjoint of a semistable pair is semistable"),
                Some(expect(3, "alpha = 0")),
                Some(expect(3, "alpha = 0")),
                true,
                false,
                "adjoint-induced S3",
            ),
            ScenarioName::S8S4 => (
                expect(zero3, "adjoint of a polystable critical pair is critical"),
                Some(expect(3, "alpha = 0")),
                Some(expect(3, "alpha = 0")),
                false,
                true,
                "adjoint-induced S4",
            ),
        };
        Ok(Self {
            name,
            rank: name.rank(),
            group,
            params,
            expected_hn: hn,
            initial_h0,
            expected_h0,
            phi_vanishes,
            stationary,
            section_gap: if degree != 0.0 { BUMP_SECTION_GAP } else { GapTolerance::default() },
            notes: notes.to_string(),
        })
    }

    fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    fn bump(&self) -> Result<BumpProjector> {
        BumpProjector::new(
            (self.param("center_x"), self.param("center_y")),
            self.param("radius"),
            self.param("degree") as i64,
        )
    }

    pub fn group_descriptor(&self) -> Result<Arc<GroupDescriptor>> {
        descriptor(self.group, self.rank)
    }

    /// Orthogonal holomorphic splitting of the bump scenarios, blocks in
    /// order of decreasing slope. `alpha` is the structure being flowed.
    pub fn levi_reduction(&self, grid: &Grid, alpha: &MatrixField) -> Result<Option<LeviReduction>> {
        if !matches!(self.name, ScenarioName::S5 | ScenarioName::S6 | ScenarioName::S7) {
            return Ok(None);
        }
        let degree = self.param("degree");
        if degree == 0.0 {
            return Ok(None);
        }
        let p = self.bump()?.projector(grid);
        let id = matrix::identity(2);
        let q = p.map_sites(FieldKind::Function, |m, out| {
            for k in 0..4 {
                out[k] = id[k] - m[k];
            }
        });
        let mut blocks = if self.rank == 3 {
            let e33 = MatrixField::constant(grid, FieldKind::Function, &matrix::unit(3, 2, 2));
            vec![embed_rank2(&p), e33, embed_rank2(&q)]
        } else {
            vec![p, q]
        };
        if degree < 0.0 {
            blocks.reverse();
        }
        LeviReduction::new(blocks, alpha).map(Some)
    }

    /// Builds the initial pair on a grid.
    pub fn build(&self, grid: &Grid) -> Result<HiggsPair> {
        let group = self.group_descriptor()?;
        let zero = vec![matrix::zero(); self.rank * self.rank];
        let e12 = matrix::unit(2, 0, 1);
        let real = |v: f64| C64::new(v, 0.0);
        match self.name {
            ScenarioName::S1 => Ok(HiggsPair::zero(grid, group)),
            ScenarioName::S2 => HiggsPair::constant(grid, group, &matrix::scaled(&e12, real(self.param("c0"))), &zero),
            ScenarioName::S3 => HiggsPair::constant(grid, group, &zero, &matrix::scaled(&e12, real(self.param("eps")))),
            ScenarioName::S4 => {
                let a = self.param("a");
                HiggsPair::constant(grid, group, &zero, &matrix::diag(&[real(a), real(-a)]))
            }
            ScenarioName::S5 => {
                let alpha = self.bump()?.holomorphic_structure(grid);
                HiggsPair::new(alpha, MatrixField::zeros(grid, 2, FieldKind::Form10), group)
            }
            ScenarioName::S6 => {
                let alpha = embed_rank2(&self.bump()?.holomorphic_structure(grid));
                HiggsPair::new(alpha, MatrixField::zeros(grid, 3, FieldKind::Form10), group)
            }
            ScenarioName::S7 => {
                let bump = self.bump()?;
                let p = bump.projector(grid);
                let alpha = bump.holomorphic_structure(grid);
                let reduction = self.levi_reduction(grid, &alpha)?;
                let (a, b) = (self.param("a"), self.param("b"));
                let id = matrix::identity(2);
                let mut data = Vec::with_capacity(grid.sites() * 4);
                for pm in p.sites() {
                    let q = matrix::sub(&id, pm);
                    let upper = matrix::mul(&matrix::mul(pm, &e12, 2), &q, 2);
                    for k in 0..4 {
                        data.push(real(a) * (2.0 * pm[k] - id[k]) + real(b) * upper[k]);
                    }
                }
                let phi0 = MatrixField::from_data(grid, 2, FieldKind::Form10, data)?;
                let tol = S7_PROJECTION_TOL * phi0.norm().max(f64::MIN_POSITIVE);
                let phi = match &reduction {
                    Some(r) => project_to_higgs_within(&alpha, &phi0, tol, 50_000, |f| r.filtered_phi(f))?,
                    None => project_to_higgs_within(&alpha, &phi0, tol, 50_000, |f| f.clone())?,
                };
                let phi = group.project_field(&phi);
                HiggsPair::new(alpha, phi, group)
            }
            ScenarioName::S8S2 | ScenarioName::S8S3 | ScenarioName::S8S4 => {
                let base_name = self.name.adjoint_base().expect("adjoint scenario");
                let mut base = Scenario::new(base_name);
                base.params = self.params.clone();
                let base_pair = base.build(grid)?;
                induce_representation(&base_pair, &adjoint_rep(base_pair.group())?)
            }
        }
    }
}

/// `m ↦ m ⊕ 0` from rank 2 to rank 3.
fn embed_rank2(m: &MatrixField) -> MatrixField {
    let grid = m.grid();
    let mut data = vec![matrix::zero(); grid.sites() * 9];
    for (s, src) in m.sites().enumerate() {
        let out = &mut data[s * 9..(s + 1) * 9];
        out[0] = src[0];
        out[1] = src[1];
        out[3] = src[2];
        out[4] = src[3];
    }
    MatrixField::from_data(grid, 3, m.kind(), data).expect("rank-3 layout")
}

/// Every scenario with default parameters.
pub fn catalog() -> Vec<Scenario> {
    ScenarioName::ALL.into_iter().map(Scenario::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::higgs::{chern_moment, higgs_residual};

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep(0.0), (0.0, 0.0));
        assert_eq!(smoothstep(1.0), (1.0, 0.0));
        let (s, _) = smoothstep(0.5);
        assert!((s - 0.5).abs() < 1e-15);
        let h = 1e-6;
        let (a, _) = smoothstep(0.3 - h);
        let (b, _) = smoothstep(0.3 + h);
        assert!(((b - a) / (2.0 * h) - smoothstep(0.3).1).abs() < 1e-8);
    }

    #[test]
    fn degree_zero_is_constant() {
        let g = make_grid(16).unwrap();
        let p = bump_projector(&g, (0.5, 0.5), 0.4, 0).unwrap();
        let want = MatrixField::constant(&g, FieldKind::Function, &matrix::unit(2, 0, 0));
        assert_eq!(p, want);
        assert_eq!(chern_number(&p).unwrap(), 0.0);
        assert!(split_structure(&p).unwrap().norm() == 0.0);
    }

    #[test]
    fn projector_is_hermitian_idempotent() {
        let g = make_grid(32).unwrap();
        let p = bump_projector(&g, (0.3, 0.6), 0.45, 2).unwrap();
        for m in p.sites() {
            assert!(matrix::max_abs_diff(&matrix::mul(m, m, 2), m) < 1e-13);
            assert!(matrix::max_abs_diff(&matrix::adjoint(m, 2), m) < 1e-13);
        }
    }

    #[test]
    fn projector_spectrum_decays() {
        let g = make_grid(64).unwrap();
        let p = bump_projector(&g, (0.5, 0.5), 0.45, 1).unwrap();
        let spec = p.spectrum();
        let inv = 1.0 / g.sites() as f64;
        let band = |lo: i64, hi: i64| {
            (0..g.sites())
                .filter(|&s| {
                    let (a, b) = g.mode(s);
                    let k = a.abs().max(b.abs());
                    k >= lo && k < hi
                })
                .flat_map(|s| spec[s * 4..s * 4 + 4].iter().map(|c| c.norm() * inv).collect::<Vec<_>>())
                .fold(0.0, f64::max)
        };
        // faster than any power: the decay per octave keeps accelerating
        let (b1, b2, b3) = (band(4, 8), band(8, 16), band(16, 32));
        assert!(b2 / b1 < 0.05 && b3 / b2 < 0.5 * (b2 / b1), "{b1:e} {b2:e} {b3:e}");
    }

    #[test]
    fn exact_derivative_matches_spectral() {
        let g = make_grid(64).unwrap();
        let bump = BumpProjector::new((0.5, 0.5), 0.45, 1).unwrap();
        let spectral = bump.projector(&g).d_zbar().unwrap();
        let exact = bump.dbar_projector(&g);
        assert!(spectral.max_abs_diff(&exact) < 1e-3, "{}", spectral.max_abs_diff(&exact));
    }

    #[test]
    fn degree_oracles_agree() {
        let g = make_grid(64).unwrap();
        for d in 1..=3 {
            let bump = BumpProjector::new((0.5, 0.5), 0.45, d).unwrap();
            let md = bump.map_degree(&g);
            let ch = chern_number(&bump.projector(&g)).unwrap();
            assert!((md.abs() - d as f64).abs() < 1e-6, "map degree {md}");
            assert!((ch - d as f64).abs() < 1e-3, "chern {ch}");
            assert!((ch.abs() - md.abs()).abs() < 1e-3);
        }
        let ch = chern_number(&bump_projector(&g, (0.5, 0.5), 0.45, 1).unwrap()).unwrap();
        assert!((ch - 1.0).abs() < 1e-4, "{ch}");
    }

    #[test]
    fn split_structure_makes_image_holomorphic() {
        let g = make_grid(32).unwrap();
        let bump = BumpProjector::new((0.5, 0.5), 0.45, 1).unwrap();
        let p = bump.projector(&g);
        let dp = bump.dbar_projector(&g);
        let alpha = bump.holomorphic_structure(&g);
        assert!(subbundle_defect(&p, &dp, &alpha) < 1e-12);
        let tr = alpha.sites().map(|m| matrix::trace(m, 2).norm()).fold(0.0, f64::max);
        assert!(tr < 1e-13);
        let constant = MatrixField::constant(&g, FieldKind::Function, &matrix::unit(2, 1, 1));
        assert_eq!(split_structure(&constant).unwrap().norm(), 0.0);
    }

    #[test]
    fn chern_number_rejects_non_projectors() {
        let g = make_grid(8).unwrap();
        let f = MatrixField::constant(&g, FieldKind::Function, &matrix::scaled(&matrix::identity(2), C64::new(0.5, 0.0)));
        assert!(chern_number(&f).is_err());
    }

    #[test]
    fn catalog_pairs_are_valid() {
        let g = make_grid(32).unwrap();
        for sc in catalog() {
            let pair = sc.build(&g).unwrap();
            assert_eq!(pair.rank(), sc.rank);
            assert!(higgs_residual(&pair) < 1e-8, "{}: {:e}", sc.name, higgs_residual(&pair));
            assert!(pair.offalg_residual() < 1e-12, "{}", sc.name);
            assert!(!sc.expected_hn.source.is_empty());
            let tr: f64 = sc.expected_hn.value.iter().sum();
            assert!(tr.abs() < 1e-12);
            assert!(chern_moment(&pair).hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn parameters_are_checked() {
        let mut over = BTreeMap::new();
        over.insert("bogus".to_string(), 1.0);
        assert!(Scenario::with_params(ScenarioName::S2, None, &over).is_err());
        assert!(Scenario::with_params(ScenarioName::S8S3, Some(GroupName::SL), &BTreeMap::new()).is_err());
        let mut deg = BTreeMap::new();
        deg.insert("degree".to_string(), 1.5);
        assert!(Scenario::with_params(ScenarioName::S5, None, &deg).is_err());
        assert_eq!("s8-s3".parse::<ScenarioName>().unwrap(), ScenarioName::S8S3);
    }
}
