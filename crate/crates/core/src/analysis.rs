//! Classification of flow limits through gauge invariants: the spectrum of
//! the moment density, the slope vector it encodes, the Hitchin data
//! `trace(φᵏ)` and holomorphic section counts.

use serde::{Deserialize, Serialize};

use crate::constants::{KAPPA, RATIONAL_SNAP_TOL};
use crate::error::{Error, Result};
use crate::flow::evaluate_reduced;
use crate::higgs::{chern_moment, higgs_residual, HiggsPair};
use crate::kernel::{holo_section_count_with, GapTolerance, DEFAULT_SECTION_MODES};
use crate::matrix;
use crate::reduction::LeviReduction;
use crate::scenario::Scenario;

/// `hn_type` refuses pairs whose gradient exceeds this multiple of the
/// convergence threshold.
pub const NOT_CRITICAL_FACTOR: f64 = 100.0;

/// Per-band spatial statistics of the pointwise eigenvalues of `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSpectrum {
    /// Band means, descending.
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn moment_spectrum(pair: &HiggsPair) -> MomentSpectrum {
    let m = chern_moment(pair);
    let n = pair.rank();
    let sites = pair.grid().sites() as f64;
    let mut sum = vec![0.0; n];
    let mut sum2 = vec![0.0; n];
    for site in m.density().sites() {
        for (b, e) in matrix::hermitian_eigenvalues(site, n).into_iter().enumerate() {
            sum[b] += e;
            sum2[b] += e * e;
        }
    }
    let means: Vec<f64> = sum.iter().map(|s| s / sites).collect();
    let stds = sum2
        .iter()
        .zip(&means)
        .map(|(s2, mu)| (s2 / sites - mu * mu).max(0.0).sqrt())
        .collect();
    MomentSpectrum { means, stds }
}

/// Estimated Harder–Narasimhan slopes `μ₁ ≥ … ≥ μ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeVector {
    pub raw: Vec<f64>,
    /// `raw` snapped to rationals with denominator `≤ n`, when every entry
    /// is within [`RATIONAL_SNAP_TOL`] of one.
    pub snapped: Option<Vec<f64>>,
}

impl SlopeVector {
    pub fn from_means(means: &[f64]) -> Self {
        let raw: Vec<f64> = means.iter().map(|m| m / KAPPA).collect();
        let max_den = raw.len().max(1) as i64;
        let snapped = raw.iter().map(|&x| snap_rational(x, max_den)).collect();
        Self { raw, snapped }
    }

    /// Snapped values when available.
    pub fn value(&self) -> &[f64] {
        self.snapped.as_deref().unwrap_or(&self.raw)
    }
}

/// Nearest `p/q` with `q ≤ max_den`, if closer than [`RATIONAL_SNAP_TOL`].
pub fn snap_rational(x: f64, max_den: i64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for q in 1..=max_den {
        let cand = (x * q as f64).round() / q as f64;
        let err = (x - cand).abs();
        if best.is_none_or(|(_, e)| err < e - 1e-15) {
            best = Some((cand, err));
        }
    }
    best.filter(|&(_, e)| e < RATIONAL_SNAP_TOL).map(|(c, _)| c + 0.0)
}

/// Slope vector of a near-critical pair. Warns above `tol_grad` and fails
/// above `NOT_CRITICAL_FACTOR · tol_grad`.
pub fn hn_type(pair: &HiggsPair, reduction: Option<&LeviReduction>, tol_grad: f64) -> Result<SlopeVector> {
    let grad = evaluate_reduced(pair, reduction).grad_norm();
    let limit = NOT_CRITICAL_FACTOR * tol_grad;
    if grad > limit {
        return Err(Error::NotCritical { grad_norm: grad, limit });
    }
    if grad > tol_grad {
        log::warn!("hn_type: gradient norm {grad:e} above {tol_grad:e}; slopes are provisional");
    }
    Ok(SlopeVector::from_means(&moment_spectrum(pair).means))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerances {
    /// Allowed slope error relative to `max(1, |expected|)`.
    pub slope_rel: f64,
    pub eig_std: f64,
    pub higgs_residual: f64,
    pub hitchin: f64,
    /// `‖φ‖` below which the Higgs field counts as vanished.
    pub phi_norm: f64,
    pub tol_grad: f64,
    /// Overrides the scenario's section-count window.
    pub gap: Option<GapTolerance>,
    pub section_modes: i64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self {
            slope_rel: 0.02,
            eig_std: 1e-2,
            higgs_residual: 1e-6,
            hitchin: 1e-8,
            phi_norm: 1e-4,
            tol_grad: 1e-5,
            gap: None,
            section_modes: DEFAULT_SECTION_MODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub slope_vector: Vec<f64>,
    pub snapped_slopes: Option<Vec<f64>>,
    pub eig_means: Vec<f64>,
    pub eig_spatial_std: Vec<f64>,
    pub ymh: f64,
    pub grad_norm: f64,
    pub higgs_residual: f64,
    pub phi_norm: f64,
    /// Spatial means of `trace(φᵏ)`, `k = 1..=n`, as `[re, im]`.
    pub invariants_snapshot: Vec<[f64; 2]>,
    /// Sup-norm change of `trace(φᵏ)`, `k ≥ 2`, against the initial pair.
    pub hitchin_drift: Option<f64>,
    pub h0: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail { reasons: Vec<String> },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail { .. } => "FAIL",
            Verdict::Inconclusive { .. } => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub report: LimitReport,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Compares a limit with the scenario's expected data. `initial` supplies the
/// Hitchin data the limit must carry.
pub fn classify(
    limit: &HiggsPair,
    initial: Option<&HiggsPair>,
    expected: &Scenario,
    reduction: Option<&LeviReduction>,
    tol: &ClassifyTolerances,
) -> Classification {
    let eval = evaluate_reduced(limit, reduction);
    let spectrum = moment_spectrum(limit);
    let slopes = SlopeVector::from_means(&spectrum.means);
    let n = limit.rank();
    let sites = limit.grid().sites() as f64;
    let powers = limit.trace_powers();
    let invariants_snapshot = powers
        .iter()
        .map(|col| {
            let s: matrix::C64 = col.iter().sum();
            [s.re / sites, s.im / sites]
        })
        .collect();
    let hitchin_drift = initial.map(|init| {
        let base = init.trace_powers();
        powers
            .iter()
            .zip(&base)
            .skip(1)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    });
    let mut report = LimitReport {
        slope_vector: slopes.raw.clone(),
        snapped_slopes: slopes.snapped.clone(),
        eig_means: spectrum.means.clone(),
        eig_spatial_std: spectrum.stds.clone(),
        ymh: eval.ymh,
        grad_norm: eval.grad_norm(),
        higgs_residual: higgs_residual(limit),
        phi_norm: limit.phi().norm(),
        invariants_snapshot,
        hitchin_drift,
        h0: None,
    };

    let mut reasons = Vec::new();
    if report.grad_norm > NOT_CRITICAL_FACTOR * tol.tol_grad {
        reasons.push(format!(
            "not critical: gradient norm {:e} exceeds {:e}",
            report.grad_norm,
            NOT_CRITICAL_FACTOR * tol.tol_grad
        ));
    } else if report.grad_norm > tol.tol_grad {
        log::warn!("classify: gradient norm {:e} above {:e}", report.grad_norm, tol.tol_grad);
    }
    let want = &expected.expected_hn.value;
    if want.len() != n {
        reasons.push(format!("expected {} slopes, pair has rank {n}", want.len()));
    } else {
        for (i, (&got, &w)) in slopes.raw.iter().zip(want).enumerate() {
            if (got - w).abs() > tol.slope_rel * w.abs().max(1.0) {
                reasons.push(format!("slope {i}: {got:.6} vs expected {w}"));
            }
        }
    }
    for (i, &sd) in spectrum.stds.iter().enumerate() {
        if !(sd < tol.eig_std) {
            reasons.push(format!("band {i} spatial std {sd:e} not below {:e}", tol.eig_std));
        }
    }
    if !(report.higgs_residual < tol.higgs_residual) {
        reasons.push(format!("higgs residual {:e}", report.higgs_residual));
    }
    if let Some(d) = hitchin_drift {
        if !(d < tol.hitchin) {
            reasons.push(format!("hitchin invariants moved by {d:e}"));
        }
    }
    if expected.phi_vanishes && !(report.phi_norm < tol.phi_norm) {
        reasons.push(format!("|phi| = {:e} has not vanished", report.phi_norm));
    }
    let mut inconclusive = None;
    if let Some(h0) = &expected.expected_h0 {
        match holo_section_count_with(limit.alpha(), tol.gap.unwrap_or(expected.section_gap), tol.section_modes) {
            Ok(count) => {
                report.h0 = Some(count);
                if count != h0.value {
                    reasons.push(format!("h0 = {count}, expected {}", h0.value));
                }
            }
            Err(e @ Error::NoSpectralGap { .. }) => inconclusive = Some(e.to_string()),
            Err(e) => reasons.push(format!("section count failed: {e}")),
        }
    }
    let verdict = if !reasons.is_empty() {
        Verdict::Fail { reasons }
    } else if let Some(reason) = inconclusive {
        Verdict::Inconclusive { reason }
    } else {
        Verdict::Pass
    };
    Classification { report, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::group::{descriptor, GroupName};
    use crate::matrix::C64;
    use crate::scenario::ScenarioName;

    #[test]
    fn zero_pair_spectrum() {
        let g = make_grid(8).unwrap();
        let pair = HiggsPair::zero(&g, descriptor(GroupName::SL, 3).unwrap());
        let s = moment_spectrum(&pair);
        assert_eq!(s.means, vec![0.0; 3]);
        assert_eq!(s.stds, vec![0.0; 3]);
    }

    #[test]
    fn constant_extension_spectrum() {
        let g = make_grid(8).unwrap();
        let c = C64::new(0.6, 0.8) * 0.5;
        let alpha = matrix::scaled(&matrix::unit(2, 0, 1), c);
        let pair = HiggsPair::constant(&g, descriptor(GroupName::SL, 2).unwrap(), &alpha, &[C64::new(0.0, 0.0); 4]).unwrap();
        let s = moment_spectrum(&pair);
        let c2 = c.norm_sqr();
        assert!((s.means[0] - c2).abs() < 1e-15 && (s.means[1] + c2).abs() < 1e-15);
        assert!(s.stds.iter().all(|&x| x < 1e-15));
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_rational(0.98, 2), Some(1.0));
        assert_eq!(snap_rational(-0.51, 2), Some(-0.5));
        assert_eq!(snap_rational(0.01, 3), Some(0.0));
        assert_eq!(snap_rational(0.33, 3), Some(1.0 / 3.0));
        assert_eq!(snap_rational(0.25, 2), None);
        let sv = SlopeVector::from_means(&[0.99 * KAPPA, -0.99 * KAPPA]);
        assert_eq!(sv.value(), &[1.0, -1.0]);
    }

    #[test]
    fn not_critical_is_an_error() {
        let g = make_grid(8).unwrap();
        let alpha = matrix::unit(2, 0, 1);
        let pair = HiggsPair::constant(&g, descriptor(GroupName::SL, 2).unwrap(), &alpha, &[C64::new(0.0, 0.0); 4]).unwrap();
        assert!(matches!(hn_type(&pair, None, 1e-5), Err(Error::NotCritical { .. })));
        assert!(hn_type(&pair, None, 1.0).is_ok());
    }

    #[test]
    fn stationary_scenario_passes() {
        let g = make_grid(16).unwrap();
        let sc = Scenario::new(ScenarioName::S4);
        let pair = sc.build(&g).unwrap();
        let c = classify(&pair, Some(&pair), &sc, None, &ClassifyTolerances::default());
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        assert_eq!(c.report.h0, Some(2));
    }

    #[test]
    fn unflowed_extension_fails() {
        let g = make_grid(16).unwrap();
        let sc = Scenario::new(ScenarioName::S2);
        let pair = sc.build(&g).unwrap();
        let c = classify(&pair, Some(&pair), &sc, None, &ClassifyTolerances::default());
        assert!(matches!(c.verdict, Verdict::Fail { .. }));
    }
}
