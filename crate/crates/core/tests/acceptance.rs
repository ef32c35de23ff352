//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.
//!
//! The N = 32 runs dominate: expect tens of minutes in release mode.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use tempfile::TempDir;
use ymh_flow::analysis::{moment_spectrum, SlopeVector};
use ymh_flow::cli::{execute_run, CHECKPOINT_FILE};
use ymh_flow::config::{ResumeSection, RunConfig};
use ymh_flow::flow::{run_flow, step, FlowConfig, FlowOutcome, Integrator, StopReason, TimeStep};
use ymh_flow::grid::{make_grid, Grid};
use ymh_flow::group::{check_tangency, descriptor, GroupName};
use ymh_flow::higgs::{evaluate, ymh, ymh_gradient, HiggsPair};
use ymh_flow::kernel::holo_section_count;
use ymh_flow::random::{random_pair, rng};
use ymh_flow::scenario::{Scenario, ScenarioName};
use ymh_flow::verify::{gradient_mismatch, intrinsic_ymh};

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

/// Runs shared between criteria.
#[derive(Default)]
struct Runs {
    traces: Vec<(String, FlowOutcome)>,
    s5: Option<FlowOutcome>,
}

fn flow(sc: &Scenario, grid: &Grid, dt: TimeStep, t_max: f64, tol_grad: f64, monitor_every: u64) -> (HiggsPair, FlowOutcome) {
    let start = sc.build(grid).expect("scenario builds");
    let reduction = sc.levi_reduction(grid, start.alpha()).expect("reduction builds").map(Arc::new);
    let cfg = FlowConfig {
        dt,
        t_max,
        tol_grad,
        monitor_every,
        reduction,
        ..FlowConfig::default()
    };
    let out = run_flow(&start, &cfg).expect("flow runs");
    (start, out)
}

fn max_residual(out: &FlowOutcome, t_max: f64) -> f64 {
    out.trace
        .rows
        .iter()
        .filter(|r| r.t <= t_max + 1e-9)
        .map(|r| r.higgs_residual)
        .fold(0.0, f64::max)
}

fn c1_gradient_oracle(_: &mut Runs) -> Check {
    let grid = make_grid(16).unwrap();
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let n = 2 + i % 2;
        let p = random_pair(&grid, &descriptor(GroupName::GL, n).unwrap(), 2, &mut r);
        let p = HiggsPair::new(p.alpha().scale_real(0.5), p.phi().scale_real(0.5), p.group().clone()).unwrap();
        worst = worst.max(gradient_mismatch(&p, &ymh_gradient(&p), &mut r));
    }
    check(worst < 1e-6, format!("worst relative error {worst:.2e} over 10 pairs (< 1e-6)"))
}

fn c2_tangency(_: &mut Runs) -> Check {
    let grid = make_grid(16).unwrap();
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    let mut min_phi = f64::INFINITY;
    for (g, n) in [(GroupName::SL, 2), (GroupName::SO, 3), (GroupName::SP, 2)] {
        for _ in 0..3 {
            let p = random_pair(&grid, &descriptor(g, n).unwrap(), 2, &mut r);
            min_phi = min_phi.min(p.phi().norm());
            worst = worst.max(check_tangency(&p).unwrap());
        }
    }
    check(
        worst < 1e-12 && min_phi > 0.0,
        format!("normal gradient {worst:.2e} (< 1e-12), smallest |phi| {min_phi:.2}"),
    )
}

fn c3_higgs_preservation(runs: &mut Runs) -> Check {
    let grid = make_grid(32).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for name in [ScenarioName::S2, ScenarioName::S3, ScenarioName::S7] {
        let (_, out) = flow(&Scenario::new(name), &grid, TimeStep::Auto, 10.0, 0.0, 500);
        let worst = max_residual(&out, 10.0);
        pass &= worst < 1e-8 && out.t >= 10.0 - 1e-9;
        parts.push(format!("{name} {worst:.1e}"));
        runs.traces.push((name.to_string(), out));
    }
    // S5 runs to convergence (shared with criterion 6); it passes t = 10.
    let (_, s5) = flow(&Scenario::new(ScenarioName::S5), &grid, TimeStep::Auto, 60.0, 1e-5, 500);
    let worst = max_residual(&s5, 10.0);
    pass &= worst < 1e-8 && s5.t >= 10.0;
    parts.push(format!("S5 {worst:.1e} (to t = {:.1})", s5.t));
    runs.traces.push(("S5".into(), s5.clone()));
    runs.s5 = Some(s5);
    check(pass, format!("max higgs residual to t = 10 at N = 32: {}", parts.join(", ")))
}

fn c4_closed_form(runs: &mut Runs) -> Check {
    let grid = make_grid(16).unwrap();
    let sc = Scenario::new(ScenarioName::S2);
    let start = sc.build(&grid).unwrap();
    let cfg = FlowConfig {
        dt: TimeStep::Fixed(1e-3),
        t_max: 10.0,
        tol_grad: 0.0,
        monitor_every: 1,
        ..FlowConfig::default()
    };
    // Read c(t) off the state itself at each checkpoint time.
    let mut worst: f64 = 0.0;
    let mut state = start.clone();
    let mut t0 = 0.0;
    let mut trace = Vec::new();
    for t in [0.1, 1.0, 10.0] {
        let seg = FlowConfig { t_max: t - t0, ..cfg.clone() };
        let out = run_flow(&state, &seg).unwrap();
        trace.extend(out.trace.rows.iter().map(|r| r.grad_norm));
        state = out.limit;
        t0 = t;
        let c = state.alpha().mean()[1].norm();
        let exact = (1.0 + 4.0 * t).powf(-0.5);
        worst = worst.max((c - exact).abs() / exact);
    }
    let monotone = trace.windows(2).all(|w| w[1] <= w[0]);
    let whole = run_flow(&start, &cfg).unwrap();
    runs.traces.push(("S2 dt=1e-3".into(), whole));
    check(
        worst < 1e-6 && monotone,
        format!("worst relative error of |c| {worst:.2e} (< 1e-6), gradient monotone: {monotone}"),
    )
}

fn c5_socle_limits(runs: &mut Runs) -> Check {
    let grid = make_grid(16).unwrap();
    let s2 = Scenario::new(ScenarioName::S2);
    let (start, out) = flow(&s2, &grid, TimeStep::DEFAULT_ADAPTIVE, 1e9, 1e-10, 10);
    let before = holo_section_count(start.alpha(), s2.section_gap);
    let after = holo_section_count(out.limit.alpha(), s2.section_gap);
    runs.traces.push(("S2 limit".into(), out));
    let (_, s3) = flow(&Scenario::new(ScenarioName::S3), &grid, TimeStep::DEFAULT_ADAPTIVE, 1e9, 1e-13, 10);
    let phi = s3.limit.phi().norm();
    runs.traces.push(("S3 limit".into(), s3));
    let pass = matches!(before, Ok(1)) && matches!(after, Ok(2)) && phi < 1e-4;
    check(pass, format!("S2 h0 {before:?} -> {after:?}, S3 |phi| {phi:.2e} (< 1e-4)"))
}

fn slopes_within(slopes: &SlopeVector, want: &[f64], rel: f64) -> bool {
    slopes.raw.len() == want.len()
        && slopes
            .raw
            .iter()
            .zip(want)
            .all(|(x, w)| (x - w).abs() <= rel * w.abs().max(1.0))
}

fn c6_hn_type(runs: &mut Runs) -> Check {
    let grid = make_grid(32).unwrap();
    let s5_sc = Scenario::new(ScenarioName::S5);
    let s5 = runs
        .s5
        .take()
        .unwrap_or_else(|| flow(&s5_sc, &grid, TimeStep::Auto, 60.0, 1e-5, 500).1);
    let spec5 = moment_spectrum(&s5.limit);
    let sl5 = SlopeVector::from_means(&spec5.means);
    let std5 = spec5.stds.iter().cloned().fold(0.0, f64::max);
    let ok5 = s5.reason == StopReason::Converged && slopes_within(&sl5, &s5_sc.expected_hn.value, 0.02) && std5 < 1e-2;

    let s6_sc = Scenario::new(ScenarioName::S6);
    let (_, s6) = flow(&s6_sc, &grid, TimeStep::Auto, 200.0, 1e-5, 500);
    let sl6 = SlopeVector::from_means(&moment_spectrum(&s6.limit).means);
    let ok6 = s6.reason == StopReason::Converged && slopes_within(&sl6, &s6_sc.expected_hn.value, 0.02);
    let detail = format!(
        "S5 {} at t = {:.1}: slopes {:.4?}, max std {std5:.1e}; S6 {} at t = {:.1}: slopes {:.4?}",
        s5.reason, s5.t, sl5.raw, s6.reason, s6.t, sl6.raw
    );
    runs.traces.push(("S6".into(), s6));
    check(ok5 && ok6, detail)
}

fn c7_monotonicity_and_hitchin(runs: &mut Runs) -> Check {
    let grid = make_grid(16).unwrap();
    for name in ScenarioName::ALL {
        let (_, out) = flow(&Scenario::new(name), &grid, TimeStep::Auto, 1.0, 0.0, 50);
        runs.traces.push((format!("{name} catalog"), out));
    }
    let mut inc: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for (_, out) in &runs.traces {
        for r in &out.trace.rows {
            inc = inc.max(r.monotonicity_violation);
            drift = drift.max(r.hitchin_drift);
        }
    }
    check(
        inc <= 1e-10 && drift < 1e-8,
        format!("{} runs: max ymh increase per step {inc:.1e} (<= 1e-10), hitchin drift {drift:.1e} (< 1e-8)", runs.traces.len()),
    )
}

fn c8_embedding(_: &mut Runs) -> Check {
    let grid = make_grid(16).unwrap();
    let mut r = rng(99);
    let mut gap: f64 = 0.0;
    let mut closure: f64 = 0.0;
    for (g, n) in [(GroupName::SL, 2), (GroupName::SO, 3), (GroupName::SP, 2), (GroupName::SL, 3)] {
        let p = random_pair(&grid, &descriptor(g, n).unwrap(), 2, &mut r);
        let ambient = ymh(&p.as_ambient());
        gap = gap.max((intrinsic_ymh(&p) - ambient).abs() / ambient);
        closure = closure.max(step(&p, 1e-4, Integrator::Rk4).unwrap().offalg_residual());
    }
    check(
        gap < 1e-14 && closure < 1e-11,
        format!("intrinsic vs ambient {gap:.1e} (< 1e-14), closure after one step {closure:.1e} (< 1e-11)"),
    )
}

fn c9_adjoint_pairs(runs: &mut Runs) -> Check {
    let grid = make_grid(16).unwrap();
    let s8s4 = Scenario::new(ScenarioName::S8S4).build(&grid).unwrap();
    let grad = evaluate(&s8s4).grad_norm();
    let (_, out) = flow(&Scenario::new(ScenarioName::S8S2), &grid, TimeStep::DEFAULT_ADAPTIVE, 1e9, 1e-10, 10);
    let moment = ymh(&out.limit).sqrt();
    runs.traces.push(("S8-S2 limit".into(), out));
    check(
        grad < 1e-12 && moment < 1e-4,
        format!("ad(S4) gradient {grad:.1e} (< 1e-12), ad(S2) limit moment norm {moment:.1e} (< 1e-4)"),
    )
}

fn c10_determinism_and_resume(_: &mut Runs) -> Check {
    let tmp = TempDir::new().unwrap();
    let text = format!(
        "deterministic = true\n[grid]\nN = 16\n[scenario]\nname = \"S7\"\n[flow]\ndt = \"auto\"\nt_max = 0.1\ntol_grad = 0.0\nmonitor_every = 20\n[output]\ndir = \"{}\"\nformats = [\"json\", \"toml\"]\n",
        tmp.path().join("a").display()
    );
    let full = RunConfig::from_toml(&text).unwrap();
    let files = ["trace.csv", "summary.json", "summary.toml", CHECKPOINT_FILE];
    let read = |cfg: &RunConfig| -> Vec<Vec<u8>> { files.iter().map(|f| std::fs::read(cfg.output.dir.join(f)).unwrap()).collect() };
    let whole = execute_run(&full).unwrap();
    let first_bytes = read(&full);
    execute_run(&full).unwrap();
    let identical = read(&full) == first_bytes;

    let mut head_cfg = full.clone();
    head_cfg.flow.t_max = 0.05;
    head_cfg.output.dir = tmp.path().join("head");
    let head = execute_run(&head_cfg).unwrap();
    let mut tail_cfg = full.clone();
    tail_cfg.output.dir = tmp.path().join("tail");
    tail_cfg.resume = Some(ResumeSection {
        checkpoint: head_cfg.output.dir.join(CHECKPOINT_FILE),
        step: head.summary.steps,
        t: head.summary.t,
    });
    let tail = execute_run(&tail_cfg).unwrap();
    let mut worst: f64 = 0.0;
    let mut shared = 0;
    for r in &tail.trace.rows {
        if let Some(w) = whole.trace.row_at_step(r.step) {
            shared += 1;
            for (x, y) in [(r.t, w.t), (r.ymh, w.ymh), (r.grad_norm, w.grad_norm), (r.higgs_residual, w.higgs_residual), (r.hitchin_drift, w.hitchin_drift)] {
                worst = worst.max((x - y).abs() / (1.0 + y.abs()));
            }
        }
    }
    let complete = shared == tail.trace.rows.len() && shared > 1;
    check(
        identical && complete && worst <= 1e-12,
        format!("byte-identical rerun: {identical}; resumed trace ({shared} rows) differs by {worst:.1e} (<= 1e-12)"),
    )
}

fn main() {
    let criteria: [(&str, fn(&mut Runs) -> Check); 10] = [
        ("gradient oracle", c1_gradient_oracle),
        ("tangency", c2_tangency),
        ("flow preserves Higgs pairs", c3_higgs_preservation),
        ("convergence and closed form", c4_closed_form),
        ("socle-graded limit", c5_socle_limits),
        ("HN-type recovery", c6_hn_type),
        ("energy monotonicity and Hitchin conservation", c7_monotonicity_and_hitchin),
        ("embedding consistency", c8_embedding),
        ("adjoint-induced pairs", c9_adjoint_pairs),
        ("determinism and persistence", c10_determinism_and_resume),
    ];
    // ACCEPTANCE_ONLY=1,4 runs a subset.
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut runs = Runs::default();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let clock = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| f(&mut runs))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            check(false, format!("panicked: {msg}"))
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} {id:>2}. {name}: {} [{:.1} s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            clock.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
