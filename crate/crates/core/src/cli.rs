//! Subcommands behind the `ymhflow` binary, returning process exit codes.
//!
//! A run directory holds `trace.csv`, one summary per requested format and
//! the final pair as `final.ckpt`. A sweep adds `sweep.csv` in the base
//! directory and one run directory per grid point.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{classify, moment_spectrum, ClassifyTolerances, Classification, SlopeVector, Verdict};
use crate::checkpoint;
use crate::config::{RunConfig, SummaryFormat};
use crate::error::{Error, Result};
use crate::flow::{flow_invariant_report, run_flow_from, FlowStart, FlowTrace, InvariantReport, InvariantTolerances, StopReason};
use crate::group::GroupName;
use crate::higgs::HiggsPair;
use crate::scenario::{catalog, Scenario, ScenarioName};
use crate::verify::{first_failure, render_table, run_suites, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_MAX_TIME: i32 = 2;
pub const EXIT_RUN_FAILED: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_IO: i32 = 74;

pub const TRACE_FILE: &str = "trace.csv";
pub const CHECKPOINT_FILE: &str = "final.ckpt";
pub const SWEEP_FILE: &str = "sweep.csv";

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidGrid(_) => EXIT_USAGE,
        Error::Checkpoint { .. } => EXIT_DATA,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_RUN_FAILED,
    }
}

pub fn stop_exit_code(reason: StopReason) -> i32 {
    match reason {
        StopReason::Converged => EXIT_OK,
        StopReason::MaxTime => EXIT_MAX_TIME,
        StopReason::Diverged | StopReason::NumericalFailure => EXIT_RUN_FAILED,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: ScenarioName,
    pub group: GroupName,
    #[serde(rename = "N")]
    pub n: usize,
    pub stop_reason: StopReason,
    pub steps: u64,
    pub t: f64,
    pub ymh: f64,
    pub grad_norm: f64,
    pub slopes: Vec<f64>,
    pub snapped_slopes: Option<Vec<f64>>,
    pub slope_spatial_std: Vec<f64>,
    pub higgs_residual: f64,
    pub offalg_residual: f64,
    pub hitchin_drift: f64,
    pub invariants: InvariantReport,
    /// Seconds; absent in deterministic mode so reruns are byte-identical.
    pub wall_time: Option<f64>,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub trace: FlowTrace,
    pub limit: HiggsPair,
}

/// Starting pair and clock: the scenario's initial pair, or the checkpoint
/// named in `[resume]` checked against it.
fn starting_point(cfg: &RunConfig, initial: &HiggsPair) -> Result<(HiggsPair, FlowStart)> {
    let baseline = Some(initial.trace_powers());
    let Some(resume) = &cfg.resume else {
        return Ok((initial.clone(), FlowStart { step: 0, t: 0.0, hitchin_baseline: baseline }));
    };
    let pair = checkpoint::load(&resume.checkpoint)?;
    if pair.grid().side() != initial.grid().side() || pair.rank() != initial.rank() || pair.group().name() != initial.group().name() {
        return Err(Error::Config(format!(
            "resume checkpoint {} holds N = {}, n = {}, {} but the config asks for N = {}, n = {}, {}",
            resume.checkpoint.display(),
            pair.grid().side(),
            pair.rank(),
            pair.group().name(),
            initial.grid().side(),
            initial.rank(),
            initial.group().name()
        )));
    }
    Ok((
        pair,
        FlowStart {
            step: resume.step,
            t: resume.t,
            hitchin_baseline: baseline,
        },
    ))
}

/// Runs one configuration and writes its output directory.
pub fn execute_run(cfg: &RunConfig) -> Result<RunResult> {
    let clock = Instant::now();
    let (scenario, initial, flow) = cfg.prepare()?;
    let (start_pair, start) = starting_point(cfg, &initial)?;
    let outcome = run_flow_from(&start_pair, &flow, start)?;
    let invariants = flow_invariant_report(&outcome.trace, &InvariantTolerances::default())?;
    let last = *outcome.trace.last().expect("a run records at least one row");
    let spectrum = moment_spectrum(&outcome.limit);
    let slopes = SlopeVector::from_means(&spectrum.means);
    let summary = RunSummary {
        scenario: scenario.name,
        group: scenario.group,
        n: cfg.grid.n,
        stop_reason: outcome.reason,
        steps: outcome.steps,
        t: outcome.t,
        ymh: last.ymh,
        grad_norm: last.grad_norm,
        slopes: slopes.raw,
        snapped_slopes: slopes.snapped,
        slope_spatial_std: spectrum.stds,
        higgs_residual: last.higgs_residual,
        offalg_residual: last.offalg_residual,
        hitchin_drift: last.hitchin_drift,
        invariants,
        wall_time: (!cfg.deterministic).then(|| clock.elapsed().as_secs_f64()),
        config: cfg.clone(),
    };
    write_run_dir(&cfg.output.dir, &cfg.output.formats, &summary, &outcome.trace, &outcome.limit)?;
    Ok(RunResult {
        summary,
        trace: outcome.trace,
        limit: outcome.limit,
    })
}

fn write_run_dir(dir: &Path, formats: &[SummaryFormat], summary: &RunSummary, trace: &FlowTrace, limit: &HiggsPair) -> Result<()> {
    fs::create_dir_all(dir)?;
    trace.write_csv(fs::File::create(dir.join(TRACE_FILE))?)?;
    for &format in formats {
        fs::write(dir.join(format.file_name()), render_summary(summary, format))?;
    }
    checkpoint::save(&dir.join(CHECKPOINT_FILE), limit)
}

pub fn render_summary(summary: &RunSummary, format: SummaryFormat) -> String {
    match format {
        SummaryFormat::Json => serde_json::to_string_pretty(summary).expect("summary serializes") + "\n",
        SummaryFormat::Toml => toml::to_string(summary).expect("summary serializes"),
    }
}

fn report_error(err: &Error, stderr: &mut impl Write) -> i32 {
    let _ = writeln!(stderr, "error: {err}");
    exit_code(err)
}

pub fn cmd_run(config: &Path, stdout: &mut impl Write, stderr: &mut impl Write) -> i32 {
    let cfg = match RunConfig::load(config) {
        Ok(cfg) => cfg,
        Err(e) => return report_error(&e, stderr),
    };
    match execute_run(&cfg) {
        Ok(run) => {
            let s = &run.summary;
            let _ = writeln!(
                stdout,
                "{} N={}: {} at t = {} after {} steps, ymh = {:e}, grad = {:e} -> {}",
                s.scenario,
                s.n,
                s.stop_reason,
                s.t,
                s.steps,
                s.ymh,
                s.grad_norm,
                cfg.output.dir.display()
            );
            stop_exit_code(s.stop_reason)
        }
        Err(e) => report_error(&e, stderr),
    }
}

pub fn cmd_verify(opts: &VerifyOptions, stdout: &mut impl Write, stderr: &mut impl Write) -> i32 {
    let results = match run_suites(opts) {
        Ok(r) => r,
        Err(e) => return report_error(&e, stderr),
    };
    let _ = write!(stdout, "{}", render_table(&results));
    match first_failure(&results) {
        None => EXIT_OK,
        Some(r) => {
            let _ = writeln!(stderr, "verify failed: {}", r.name);
            EXIT_FAIL
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyRequest {
    pub checkpoint: PathBuf,
    pub scenario: ScenarioName,
    /// Defaults to the checkpoint's group.
    pub group: Option<GroupName>,
    pub params: BTreeMap<String, f64>,
    pub tolerances: ClassifyTolerances,
}

pub fn classify_pair(pair: &HiggsPair, req: &ClassifyRequest) -> Result<Classification> {
    let group = req.group.unwrap_or(pair.group().name());
    let scenario = Scenario::with_params(req.scenario, Some(group), &req.params)?;
    let (initial, reduction) = if scenario.rank == pair.rank() {
        let initial = scenario.build(pair.grid())?;
        let reduction = scenario.levi_reduction(pair.grid(), initial.alpha())?.map(Arc::new);
        (Some(initial), reduction)
    } else {
        (None, None)
    };
    Ok(classify(pair, initial.as_ref(), &scenario, reduction.as_deref(), &req.tolerances))
}

pub fn cmd_classify(req: &ClassifyRequest, stdout: &mut impl Write, stderr: &mut impl Write) -> i32 {
    let result = checkpoint::load(&req.checkpoint).and_then(|pair| classify_pair(&pair, req));
    match result {
        Ok(c) => {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&c).expect("report serializes"));
            match &c.verdict {
                Verdict::Pass => EXIT_OK,
                Verdict::Fail { reasons } => {
                    let _ = writeln!(stderr, "FAIL: {}", reasons.join("; "));
                    EXIT_FAIL
                }
                Verdict::Inconclusive { reason } => {
                    let _ = writeln!(stderr, "INCONCLUSIVE: {reason}");
                    EXIT_INCONCLUSIVE
                }
            }
        }
        Err(e) => report_error(&e, stderr),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub label: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: String,
    pub status: String,
    pub steps: Option<u64>,
    pub t: Option<f64>,
    pub ymh: Option<f64>,
    pub grad_norm: Option<f64>,
    pub higgs_residual: Option<f64>,
    pub slopes: String,
    pub dir: PathBuf,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        !(self.status == StopReason::Converged.to_string() || self.status == StopReason::MaxTime.to_string())
    }
}

/// Runs every point of the sweep grid (in parallel unless deterministic) and
/// writes the aggregate CSV. Per-run failures are recorded, not raised.
pub fn execute_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let runs = cfg.expand_sweep()?;
    let one = |(label, run): &(String, RunConfig)| -> SweepRow {
        let outcome = execute_run(run);
        let mut row = SweepRow {
            label: label.clone(),
            n: run.grid.n,
            dt: run.flow.dt.to_string(),
            status: String::new(),
            steps: None,
            t: None,
            ymh: None,
            grad_norm: None,
            higgs_residual: None,
            slopes: String::new(),
            dir: run.output.dir.clone(),
        };
        match outcome {
            Ok(r) => {
                let s = r.summary;
                row.status = s.stop_reason.to_string();
                row.steps = Some(s.steps);
                row.t = Some(s.t);
                row.ymh = Some(s.ymh);
                row.grad_norm = Some(s.grad_norm);
                row.higgs_residual = Some(s.higgs_residual);
                row.slopes = s.slopes.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            }
            Err(e) => row.status = format!("error: {e}"),
        }
        row
    };
    let rows: Vec<SweepRow> = if cfg.deterministic {
        runs.iter().map(one).collect()
    } else {
        runs.par_iter().map(one).collect()
    };
    fs::create_dir_all(&cfg.output.dir)?;
    let mut w = csv::Writer::from_path(cfg.output.dir.join(SWEEP_FILE)).map_err(|e| Error::Io(e.into()))?;
    for row in &rows {
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(rows)
}

pub fn cmd_sweep(config: &Path, stdout: &mut impl Write, stderr: &mut impl Write) -> i32 {
    let rows = match RunConfig::load(config).and_then(|cfg| execute_sweep(&cfg)) {
        Ok(rows) => rows,
        Err(e) => return report_error(&e, stderr),
    };
    let mut failed = 0;
    for row in &rows {
        let _ = writeln!(stdout, "{:<40} {}", row.label, row.status);
        if row.failed() {
            failed += 1;
            let _ = writeln!(stderr, "run {} failed: {}", row.label, row.status);
        }
    }
    if failed > 0 {
        let _ = writeln!(stderr, "{failed} of {} runs failed", rows.len());
        EXIT_RUN_FAILED
    } else {
        EXIT_OK
    }
}

pub fn render_catalog() -> String {
    let mut out = String::new();
    for sc in catalog() {
        let params = sc
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        let h0 = |e: &Option<crate::scenario::Expected<usize>>| e.as_ref().map_or("-".to_string(), |e| e.value.to_string());
        out.push_str(&format!(
            "{:<6} rank {} {:<3} slopes {:?} h0 {} -> {}{}  [{}]\n    {}\n",
            sc.name.to_string(),
            sc.rank,
            sc.group.to_string(),
            sc.expected_hn.value,
            h0(&sc.initial_h0),
            h0(&sc.expected_h0),
            if sc.phi_vanishes { ", phi -> 0" } else { "" },
            params,
            sc.notes
        ));
    }
    out
}

pub fn cmd_catalog(json: bool, stdout: &mut impl Write) -> i32 {
    let text = if json {
        serde_json::to_string_pretty(&catalog()).expect("catalog serializes") + "\n"
    } else {
        render_catalog()
    };
    let _ = write!(stdout, "{text}");
    EXIT_OK
}
