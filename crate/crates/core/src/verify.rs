//! Self-check suites behind `ymhflow verify`.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::field::{FieldKind, MatrixField};
use crate::flow::{run_flow, step, FlowConfig, Integrator, TimeStep};
use crate::grid::{make_grid, Grid};
use crate::group::{check_tangency, descriptor, GroupDescriptor, GroupName};
use crate::higgs::{chern_moment, ymh, ymh_gradient, Descent, HiggsPair};
use crate::matrix::{self, C64};
use crate::random::{random_direction, random_matrix, random_pair, rng};
use crate::scenario::{Scenario, ScenarioName};

pub const SUITES: [&str; 6] = [
    "gradient-oracle",
    "tangency",
    "isometry",
    "higgs-preservation",
    "monotonicity",
    "hitchin-conservation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub side: usize,
    /// Negative control: flips the closed-form gradient before comparing it
    /// with finite differences.
    pub negate_gradient: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            side: 16,
            negate_gradient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the suite's metric.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

fn result(name: &'static str, value: f64, threshold: f64, detail: impl Into<String>) -> SuiteResult {
    SuiteResult {
        name,
        passed: value <= threshold,
        value,
        threshold,
        detail: detail.into(),
    }
}

/// Runs every suite in order.
pub fn run_suites(opts: &VerifyOptions) -> crate::error::Result<Vec<SuiteResult>> {
    let grid = make_grid(opts.side)?;
    Ok(vec![
        gradient_oracle(&grid, opts),
        tangency(&grid, opts),
        isometry(&grid, opts),
        higgs_preservation(&grid),
        monotonicity(&grid),
        hitchin_conservation(&grid, opts),
    ])
}

pub fn first_failure(results: &[SuiteResult]) -> Option<&SuiteResult> {
    results.iter().find(|r| !r.passed)
}

/// Fixed-width PASS/FAIL table.
pub fn render_table(results: &[SuiteResult]) -> String {
    let mut out = String::new();
    writeln!(out, "{:<22} {:<6} {:>12} {:>12}  detail", "suite", "result", "value", "threshold").unwrap();
    for r in results {
        writeln!(
            out,
            "{:<22} {:<6} {:>12.3e} {:>12.3e}  {}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.value,
            r.threshold,
            r.detail
        )
        .unwrap();
    }
    out
}

/// Relative mismatch between the closed-form first variation of `ymh` and a
/// central difference along a random direction.
pub fn gradient_mismatch(pair: &HiggsPair, descent: &Descent, rng: &mut impl Rng) -> f64 {
    let (va, vp) = random_direction(pair.grid(), pair.group(), 2, rng);
    let predicted = descent.directional_derivative(&va, &vp).expect("same shapes");
    let h = 1e-5;
    let fd = (ymh(&pair.displaced(h, &va, &vp)) - ymh(&pair.displaced(-h, &va, &vp))) / (2.0 * h);
    (predicted - fd).abs() / fd.abs().max(f64::MIN_POSITIVE)
}

fn gradient_oracle(grid: &Grid, opts: &VerifyOptions) -> SuiteResult {
    let mut r = rng(opts.seed);
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let n = if i % 2 == 0 { 2 } else { 3 };
        let group = descriptor(GroupName::GL, n).expect("GL exists");
        let pair = scaled(&random_pair(grid, &group, 2, &mut r), 0.5);
        let mut d = ymh_gradient(&pair);
        if opts.negate_gradient {
            d.alpha = d.alpha.scale_real(-1.0);
            d.phi = d.phi.scale_real(-1.0);
        }
        worst = worst.max(gradient_mismatch(&pair, &d, &mut r));
    }
    result("gradient-oracle", worst, 1e-6, "10 random rank-2/3 pairs, central differences")
}

fn scaled(pair: &HiggsPair, s: f64) -> HiggsPair {
    HiggsPair::new(pair.alpha().scale_real(s), pair.phi().scale_real(s), pair.group().clone()).expect("scaling keeps the algebra")
}

fn proper_groups() -> Vec<Arc<GroupDescriptor>> {
    [(GroupName::SL, 2), (GroupName::SO, 3), (GroupName::SP, 2), (GroupName::SL, 3)]
        .into_iter()
        .map(|(g, n)| descriptor(g, n).expect("standard descriptor"))
        .collect()
}

fn tangency(grid: &Grid, opts: &VerifyOptions) -> SuiteResult {
    let mut r = rng(opts.seed.wrapping_add(1));
    let mut worst: f64 = 0.0;
    for group in proper_groups() {
        for _ in 0..3 {
            let pair = random_pair(grid, &group, 2, &mut r);
            worst = worst.max(check_tangency(&pair).unwrap_or(f64::INFINITY));
        }
    }
    result("tangency", worst, 1e-12, "normal part of the ambient gradient, sl(2) so(3) sp(2) sl(3)")
}

/// `Σ_a |⟨T_a, m⟩|²` over an orthonormal basis of the group's algebra.
pub fn intrinsic_ymh(pair: &HiggsPair) -> f64 {
    let m = chern_moment(pair);
    let basis = pair.group().basis();
    let mut total = 0.0;
    for site in m.density().sites() {
        for t in basis {
            let c: C64 = t.iter().zip(site).map(|(a, b)| a.conj() * b).sum();
            total += c.norm_sqr();
        }
    }
    total / pair.grid().sites() as f64
}

fn isometry(grid: &Grid, opts: &VerifyOptions) -> SuiteResult {
    let mut r = rng(opts.seed.wrapping_add(2));
    let mut energy: f64 = 0.0;
    let mut closure: f64 = 0.0;
    for group in proper_groups() {
        let pair = random_pair(grid, &group, 2, &mut r);
        let ambient = ymh(&pair.as_ambient());
        energy = energy.max((intrinsic_ymh(&pair) - ambient).abs() / ambient.max(f64::MIN_POSITIVE));
        let next = step(&pair, 1e-4, Integrator::Rk4).expect("finite step");
        closure = closure.max(next.offalg_residual());
    }
    let worst = (energy / 1e-14).max(closure / 1e-11);
    result(
        "isometry",
        worst,
        1.0,
        format!("relative energy gap {energy:.1e} (<1e-14), closure after one step {closure:.1e} (<1e-11)"),
    )
}

fn short_run(pair: &HiggsPair, cfg: FlowConfig) -> crate::flow::FlowOutcome {
    run_flow(pair, &cfg).expect("verification runs start from Higgs pairs")
}

fn catalog_runs(grid: &Grid) -> Vec<(&'static str, crate::flow::FlowOutcome)> {
    let mut out = Vec::new();
    for (label, name, t_max) in [("S2", ScenarioName::S2, 1.0), ("S3", ScenarioName::S3, 1.0), ("S5", ScenarioName::S5, 0.25)] {
        let sc = Scenario::new(name);
        let pair = sc.build(grid).expect("catalog scenario builds");
        let reduction = sc.levi_reduction(grid, pair.alpha()).expect("reduction builds").map(Arc::new);
        let cfg = FlowConfig {
            dt: TimeStep::Auto,
            t_max,
            tol_grad: 0.0,
            monitor_every: 20,
            reduction,
            ..FlowConfig::default()
        };
        out.push((label, short_run(&pair, cfg)));
    }
    out
}

fn higgs_preservation(grid: &Grid) -> SuiteResult {
    let mut worst: f64 = 0.0;
    for (_, out) in catalog_runs(grid) {
        worst = worst.max(out.trace.rows.iter().map(|r| r.higgs_residual).fold(0.0, f64::max));
    }
    worst = worst.max(commuting_run(grid, 11).trace.rows.iter().map(|r| r.higgs_residual).fold(0.0, f64::max));
    result("higgs-preservation", worst, 1e-8, "S2, S3, S5 and a commuting pair")
}

fn monotonicity(grid: &Grid) -> SuiteResult {
    let worst = catalog_runs(grid)
        .iter()
        .flat_map(|(_, out)| out.trace.rows.iter().map(|r| r.monotonicity_violation))
        .fold(0.0, f64::max);
    result("monotonicity", worst, 1e-10, "largest per-step ymh increase on S2, S3, S5")
}

/// Uniform rank-3 pair `(a, p(a))`: `φ` commutes with `α`, so it is Higgs,
/// and `trace(φᵏ)` is nontrivial.
fn commuting_run(grid: &Grid, seed: u64) -> crate::flow::FlowOutcome {
    let mut r = rng(seed);
    let a = matrix::scaled(&random_matrix(3, &mut r), C64::new(0.4, 0.0));
    let a2 = matrix::mul(&a, &a, 3);
    let phi: Vec<C64> = a.iter().zip(&a2).map(|(x, y)| 0.5 * x + 0.3 * y).collect();
    let group = descriptor(GroupName::GL, 3).expect("GL exists");
    let alpha = MatrixField::constant(grid, FieldKind::Form01, &a);
    let phi = MatrixField::constant(grid, FieldKind::Form10, &phi);
    let pair = HiggsPair::new(alpha, phi, group).expect("GL pair");
    let cfg = FlowConfig {
        dt: TimeStep::Fixed(1e-3),
        t_max: 1.0,
        tol_grad: 0.0,
        monitor_every: 50,
        ..FlowConfig::default()
    };
    short_run(&pair, cfg)
}

fn hitchin_conservation(grid: &Grid, opts: &VerifyOptions) -> SuiteResult {
    let out = commuting_run(grid, opts.seed.wrapping_add(3));
    let worst = out.trace.rows.iter().map(|r| r.hitchin_drift).fold(0.0, f64::max);
    let moved = out.trace.rows.first().map(|r| r.ymh).unwrap_or(0.0) - out.trace.last().map(|r| r.ymh).unwrap_or(0.0);
    result(
        "hitchin-conservation",
        worst,
        1e-8,
        format!("pointwise trace(phi^k) drift, rank 3, energy drop {moved:.2e}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intrinsic_energy_of_gl_is_ambient() {
        let g = make_grid(8).unwrap();
        let pair = random_pair(&g, &descriptor(GroupName::GL, 2).unwrap(), 1, &mut rng(5));
        let (a, b) = (intrinsic_ymh(&pair), ymh(&pair));
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn suites_pass_and_negative_control_fails() {
        let results = run_suites(&VerifyOptions::default()).unwrap();
        assert_eq!(results.iter().map(|r| r.name).collect::<Vec<_>>(), SUITES);
        assert!(first_failure(&results).is_none(), "{}", render_table(&results));
        let g = make_grid(16).unwrap();
        let bad = gradient_oracle(&g, &VerifyOptions { negate_gradient: true, ..Default::default() });
        assert!(!bad.passed);
    }

    #[test]
    fn table_lists_every_suite() {
        let rows = vec![result("tangency", 1e-15, 1e-12, "x"), result("isometry", 2.0, 1.0, "y")];
        let table = render_table(&rows);
        assert!(table.contains("tangency") && table.contains("PASS") && table.contains("FAIL"));
        assert_eq!(first_failure(&rows).unwrap().name, "isometry");
    }
}
