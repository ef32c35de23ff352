//! Time integration of the YMH gradient flow
//! `dα/dt = ∂_z̄ m + [α, m]`, `dφ/dt = [φ, m]`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{transform_entries, FieldKind, MatrixField};
use crate::higgs::{evaluate, higgs_residual, trace_powers, Descent, Evaluation, HiggsPair};
use crate::matrix::{self, C64};
use crate::reduction::LeviReduction;

/// Initial-data tolerance for flowing from a Higgs pair.
pub const HIGGS_INPUT_TOL: f64 = 1e-6;
/// Relative energy growth over the running minimum treated as divergence.
pub const DIVERGENCE_RATIO: f64 = 1.1;

pub const TRACE_COLUMNS: [&str; 7] = [
    "step",
    "t",
    "ymh",
    "grad_norm",
    "higgs_residual",
    "offalg_residual",
    "hitchin_drift",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Rk4,
    EtdEuler,
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::Rk4 => "rk4",
            Integrator::EtdEuler => "etd-euler",
        })
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "rk4" => Ok(Integrator::Rk4),
            "etd-euler" | "etd" => Ok(Integrator::EtdEuler),
            other => Err(Error::InvalidParameter(format!("unknown integrator {other:?}"))),
        }
    }
}

/// Step-size policy.
///
/// `Adaptive` takes `min(dt_max, safety / ‖m‖∞)`, further capped by the
/// explicit stability bound unless the state is spatially constant (the
/// spectral derivatives of constant fields vanish identically, so only the
/// bracket terms limit the step). It exists for the slow polynomial tails
/// of non-minimal critical points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    Auto,
    Adaptive { safety: f64, dt_max: f64 },
}

impl TimeStep {
    pub const DEFAULT_ADAPTIVE: TimeStep = TimeStep::Adaptive {
        safety: 0.1,
        dt_max: 1e6,
    };
}

/// `0.5 · 4/(π² N²)`.
pub fn auto_dt(side: usize) -> f64 {
    2.0 / (std::f64::consts::PI.powi(2) * (side * side) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub dt: TimeStep,
    pub t_max: f64,
    pub tol_grad: f64,
    pub integrator: Integrator,
    pub monitor_every: u64,
    pub dealias: bool,
    /// Skips the Higgs-pair precondition.
    pub allow_non_higgs: bool,
    /// Restricts the flow to a Levi reduction; `grad_norm` is then the norm
    /// of the tangential descent.
    pub reduction: Option<Arc<LeviReduction>>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: TimeStep::Auto,
            t_max: 200.0,
            tol_grad: 1e-5,
            integrator: Integrator::Rk4,
            monitor_every: 100,
            dealias: false,
            allow_non_higgs: false,
            reduction: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        match self.dt {
            TimeStep::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => return bad("dt must be positive"),
            TimeStep::Adaptive { safety, dt_max } if !(safety > 0.0 && dt_max > 0.0) => {
                return bad("adaptive step needs positive safety and dt_max")
            }
            _ => {}
        }
        if !(self.t_max >= 0.0) {
            return bad("t_max must be non-negative");
        }
        if !(self.tol_grad >= 0.0) {
            return bad("tol_grad must be non-negative");
        }
        if self.monitor_every == 0 {
            return bad("monitor_every must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxTime,
    Diverged,
    NumericalFailure,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub step: u64,
    pub t: f64,
    pub ymh: f64,
    pub grad_norm: f64,
    pub higgs_residual: f64,
    pub offalg_residual: f64,
    pub hitchin_drift: f64,
    /// Largest single-step energy increase since the previous row.
    pub monotonicity_violation: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTrace {
    pub rows: Vec<FlowRow>,
}

impl FlowTrace {
    pub fn last(&self) -> Option<&FlowRow> {
        self.rows.last()
    }

    pub fn row_at_step(&self, step: u64) -> Option<&FlowRow> {
        self.rows.iter().find(|r| r.step == step)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.into());
        out.write_record(TRACE_COLUMNS).map_err(io)?;
        for r in &self.rows {
            out.write_record([
                r.step.to_string(),
                r.t.to_string(),
                r.ymh.to_string(),
                r.grad_norm.to_string(),
                r.higgs_residual.to_string(),
                r.offalg_residual.to_string(),
                r.hitchin_drift.to_string(),
            ])
            .map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Where a run starts: step counter, time, and the Hitchin baseline
/// `trace(φᵏ)` of the original initial pair.
#[derive(Debug, Clone, Default)]
pub struct FlowStart {
    pub step: u64,
    pub t: f64,
    pub hitchin_baseline: Option<Vec<Vec<C64>>>,
}

#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub limit: HiggsPair,
    pub trace: FlowTrace,
    pub reason: StopReason,
    pub steps: u64,
    pub t: f64,
}

/// Sup over sites and `2 ≤ k ≤ n` of `|trace(φᵏ) − baseline_k|`.
pub fn hitchin_drift(phi: &MatrixField, baseline: &[Vec<C64>]) -> f64 {
    let now = trace_powers(phi);
    now.iter()
        .zip(baseline)
        .skip(1)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

/// [`evaluate`], with the descent projected onto a reduction if given.
pub fn evaluate_reduced(pair: &HiggsPair, reduction: Option<&LeviReduction>) -> Evaluation {
    let mut eval = evaluate(pair);
    if let Some(r) = reduction {
        eval.descent = r.project_descent(pair, &eval.descent);
    }
    eval
}

/// One step from an already evaluated state.
fn advance(
    pair: &HiggsPair,
    eval: &Evaluation,
    dt: f64,
    integrator: Integrator,
    reduction: Option<&LeviReduction>,
) -> HiggsPair {
    let descent = |p: &HiggsPair| evaluate_reduced(p, reduction).descent;
    match integrator {
        Integrator::Rk4 => {
            let k1 = &eval.descent;
            let k2 = descent(&pair.displaced(0.5 * dt, &k1.alpha, &k1.phi));
            let k3 = descent(&pair.displaced(0.5 * dt, &k2.alpha, &k2.phi));
            let k4 = descent(&pair.displaced(dt, &k3.alpha, &k3.phi));
            let w = |s: f64| C64::new(s * dt / 6.0, 0.0);
            let (mut alpha, mut phi, group) = pair.clone().into_parts();
            for (k, s) in [(k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
                alpha.add_assign_unchecked(&k.alpha, w(s));
                phi.add_assign_unchecked(&k.phi, w(s));
            }
            HiggsPair::from_parts(alpha, phi, group)
        }
        Integrator::EtdEuler => {
            let next = etd_euler(pair, &eval.descent, dt);
            match reduction {
                Some(r) => r.project_pair(&next),
                None => next,
            }
        }
    }
}

/// `∂_z̄ ∂_z α + ∂_z̄² α*`, the linear part of the α-equation.
fn linear_part(alpha: &MatrixField) -> MatrixField {
    let grid = alpha.grid();
    let n = alpha.rank();
    if alpha.is_uniform() {
        return MatrixField::zeros(grid, n, FieldKind::Form01);
    }
    let n2 = n * n;
    let spec = alpha.spectrum();
    let mut out = vec![matrix::zero(); spec.len()];
    let nu = grid.dzbar_multiplier();
    for s in 0..grid.sites() {
        let minus = grid.negated_mode(s);
        let nu2 = nu[s].norm_sqr();
        let nn = nu[s] * nu[s];
        for i in 0..n {
            for j in 0..n {
                out[s * n2 + i * n + j] =
                    -nu2 * spec[s * n2 + i * n + j] + nn * spec[minus * n2 + j * n + i].conj();
            }
        }
    }
    transform_entries(grid, n2, &mut out, false);
    MatrixField::from_data(grid, n, FieldKind::Form01, out).expect("shape preserved")
}

/// Adds `IFFT(gain_k · FFT(Q f)_k)` to `target`, where the linear part is
/// `−2|ν|² Q` and `Q = ½(I − S)` with `S(f)^_k = (ν_k²/|ν_k|²)(f̂_{−k})†`.
fn add_filtered_q(target: &mut MatrixField, f: &MatrixField, gain: impl Fn(f64) -> f64) {
    let grid = f.grid().clone();
    let n = f.rank();
    let n2 = n * n;
    let spec = f.spectrum();
    let mut out = vec![matrix::zero(); spec.len()];
    let nu = grid.dzbar_multiplier();
    for s in 0..grid.sites() {
        let nu2 = nu[s].norm_sqr();
        if nu2 == 0.0 {
            continue;
        }
        let g = gain(nu2);
        let phase = nu[s] * nu[s] / nu2;
        let minus = grid.negated_mode(s);
        for i in 0..n {
            for j in 0..n {
                let q = 0.5 * (spec[s * n2 + i * n + j] - phase * spec[minus * n2 + j * n + i].conj());
                out[s * n2 + i * n + j] = g * q;
            }
        }
    }
    transform_entries(&grid, n2, &mut out, false);
    let delta = MatrixField::from_data(&grid, n, target.kind(), out).expect("shape preserved");
    target.add_assign_unchecked(&delta, C64::new(1.0, 0.0));
}

/// Exponential Euler: the R-linear block `−2|ν|²Q` of the α-equation is
/// propagated exactly, the remainder explicitly.
fn etd_euler(pair: &HiggsPair, descent: &Descent, dt: f64) -> HiggsPair {
    let (alpha0, phi0, group) = pair.clone().into_parts();
    let mut phi = phi0;
    phi.add_assign_unchecked(&descent.phi, C64::new(dt, 0.0));
    if alpha0.is_uniform() && descent.alpha.is_uniform() {
        let mut alpha = alpha0;
        alpha.add_assign_unchecked(&descent.alpha, C64::new(dt, 0.0));
        return HiggsPair::from_parts(alpha, phi, group);
    }
    let mut nonlinear = descent.alpha.clone();
    nonlinear.add_assign_unchecked(&linear_part(&alpha0), C64::new(-1.0, 0.0));

    let mut alpha = alpha0.clone();
    add_filtered_q(&mut alpha, &alpha0, |nu2| (-2.0 * nu2 * dt).exp() - 1.0);
    alpha.add_assign_unchecked(&nonlinear, C64::new(dt, 0.0));
    add_filtered_q(&mut alpha, &nonlinear, |nu2| {
        let z = 2.0 * nu2 * dt;
        dt * ((-(-z).exp_m1()) / z - 1.0)
    });
    HiggsPair::from_parts(alpha, phi, group)
}

/// One flow step of size `dt`.
pub fn step(pair: &HiggsPair, dt: f64, integrator: Integrator) -> Result<HiggsPair> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let next = advance(pair, &evaluate(pair), dt, integrator, None);
    if !next.is_finite() {
        return Err(Error::NumericalFailure { step: 1 });
    }
    Ok(next)
}

fn choose_dt(policy: TimeStep, pair: &HiggsPair, eval: &Evaluation) -> f64 {
    let side = pair.grid().side();
    match policy {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto => auto_dt(side),
        TimeStep::Adaptive { safety, dt_max } => {
            let m = eval.moment.density().sup_norm();
            let mut dt = if m > 0.0 { (safety / m).min(dt_max) } else { dt_max };
            if !pair.is_uniform() {
                dt = dt.min(auto_dt(side));
            }
            dt
        }
    }
}

pub fn run_flow(pair: &HiggsPair, config: &FlowConfig) -> Result<FlowOutcome> {
    run_flow_from(pair, config, FlowStart::default())
}

/// Runs the flow from an arbitrary clock position (checkpoint resume).
pub fn run_flow_from(pair: &HiggsPair, config: &FlowConfig, start: FlowStart) -> Result<FlowOutcome> {
    config.validate()?;
    if !config.allow_non_higgs {
        let r = higgs_residual(pair);
        if !(r < HIGGS_INPUT_TOL) {
            return Err(Error::InvalidParameter(format!(
                "initial pair is not a Higgs pair (residual {r:e}); set allow_non_higgs to override"
            )));
        }
    }
    let baseline = start
        .hitchin_baseline
        .clone()
        .unwrap_or_else(|| pair.trace_powers());
    let fixed_dt = matches!(config.dt, TimeStep::Fixed(_) | TimeStep::Auto);

    let mut state = pair.clone();
    let mut step_no = start.step;
    let mut t = start.t;
    let mut trace = FlowTrace::default();
    let mut running_min = f64::INFINITY;
    let mut prev_ymh: Option<f64> = None;
    let mut violation: f64 = 0.0;
    let mut last_row_step: Option<u64> = None;

    let monitor = |state: &HiggsPair, eval: &Evaluation, step: u64, t: f64, violation: f64| FlowRow {
        step,
        t,
        ymh: eval.ymh,
        grad_norm: eval.grad_norm(),
        higgs_residual: higgs_residual(state),
        offalg_residual: state.offalg_residual(),
        hitchin_drift: hitchin_drift(state.phi(), &baseline),
        monotonicity_violation: violation,
    };

    let reduction = config.reduction.as_deref();
    let reason = loop {
        let eval = evaluate_reduced(&state, reduction);
        if !eval.ymh.is_finite() || !state.is_finite() {
            break StopReason::NumericalFailure;
        }
        if let Some(prev) = prev_ymh {
            violation = violation.max(eval.ymh - prev);
        }
        prev_ymh = Some(eval.ymh);
        running_min = running_min.min(eval.ymh);

        let grad = eval.grad_norm();
        let stop = if grad < config.tol_grad {
            Some(StopReason::Converged)
        } else if eval.ymh > DIVERGENCE_RATIO * running_min + 1e-12 {
            Some(StopReason::Diverged)
        } else if t >= config.t_max || (fixed_dt && t_reached(t, config)) {
            Some(StopReason::MaxTime)
        } else {
            None
        };

        let due = step_no.is_multiple_of(config.monitor_every);
        if (due || stop.is_some()) && last_row_step != Some(step_no) {
            trace.rows.push(monitor(&state, &eval, step_no, t, violation));
            last_row_step = Some(step_no);
            violation = 0.0;
        }
        if let Some(reason) = stop {
            break reason;
        }

        let mut dt = choose_dt(config.dt, &state, &eval);
        if !fixed_dt {
            dt = dt.min(config.t_max - t);
        }
        let mut next = advance(&state, &eval, dt, config.integrator, reduction);
        if config.dealias {
            let (mut a, mut p, g) = next.into_parts();
            a.dealias();
            p.dealias();
            next = HiggsPair::from_parts(a, p, g);
        }
        state = next;
        step_no += 1;
        t = if fixed_dt {
            start.t + (step_no - start.step) as f64 * dt
        } else {
            t + dt
        };
    };

    if reason == StopReason::NumericalFailure {
        return Err(Error::NumericalFailure { step: step_no });
    }
    Ok(FlowOutcome {
        limit: state,
        trace,
        reason,
        steps: step_no,
        t,
    })
}

/// Fixed steps land on `t_max` up to rounding of `k · dt`.
fn t_reached(t: f64, config: &FlowConfig) -> bool {
    let dt = match config.dt {
        TimeStep::Fixed(dt) => dt,
        _ => return false,
    };
    t >= config.t_max - 1e-9 * dt
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantTolerances {
    pub higgs_residual: f64,
    pub offalg_residual: f64,
    pub ymh_increase: f64,
    pub hitchin_drift: f64,
}

impl Default for InvariantTolerances {
    fn default() -> Self {
        Self {
            higgs_residual: 1e-8,
            offalg_residual: 1e-11,
            ymh_increase: 1e-10,
            hitchin_drift: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub max_higgs_residual: f64,
    pub max_offalg_residual: f64,
    pub max_ymh_increase: f64,
    pub max_hitchin_drift: f64,
    pub pass: bool,
}

pub fn flow_invariant_report(trace: &FlowTrace, tol: &InvariantTolerances) -> Result<InvariantReport> {
    if trace.rows.is_empty() {
        return Err(Error::InvalidParameter("empty trace".into()));
    }
    let max = |f: fn(&FlowRow) -> f64| trace.rows.iter().map(f).fold(0.0, f64::max);
    let max_higgs_residual = max(|r| r.higgs_residual);
    let max_offalg_residual = max(|r| r.offalg_residual);
    let max_ymh_increase = max(|r| r.monotonicity_violation);
    let max_hitchin_drift = max(|r| r.hitchin_drift);
    let pass = max_higgs_residual <= tol.higgs_residual
        && max_offalg_residual <= tol.offalg_residual
        && max_ymh_increase <= tol.ymh_increase
        && max_hitchin_drift <= tol.hitchin_drift;
    Ok(InvariantReport {
        max_higgs_residual,
        max_offalg_residual,
        max_ymh_increase,
        max_hitchin_drift,
        pass,
    })
}
