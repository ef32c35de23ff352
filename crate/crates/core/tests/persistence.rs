use std::fs;

use tempfile::TempDir;
use ymh_flow::checkpoint;
use ymh_flow::cli::{execute_run, CHECKPOINT_FILE, TRACE_FILE};
use ymh_flow::config::{ResumeSection, RunConfig};

fn config(name: &str, extra: &str, dir: &std::path::Path) -> RunConfig {
    let text = format!(
        r#"
        deterministic = true
        [grid]
        N = 16
        [scenario]
        name = "{name}"
        {extra}
        [flow]
        dt = "auto"
        t_max = 0.05
        tol_grad = 0.0
        monitor_every = 25
        [output]
        dir = "{}"
        formats = ["json", "toml"]
        "#,
        dir.display()
    );
    RunConfig::from_toml(&text).unwrap()
}

#[test]
fn deterministic_reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let a = config("S5", "", &tmp.path().join("a"));
    let mut b = a.clone();
    execute_run(&a).unwrap();
    // Same output directory name under a different parent so the config echo
    // is the only difference to strip.
    b.output.dir = tmp.path().join("b");
    execute_run(&b).unwrap();
    for f in [TRACE_FILE, CHECKPOINT_FILE] {
        assert_eq!(fs::read(a.output.dir.join(f)).unwrap(), fs::read(b.output.dir.join(f)).unwrap(), "{f}");
    }
    let strip = |p: &std::path::Path| fs::read_to_string(p).unwrap().replace(&p.parent().unwrap().display().to_string(), "");
    for f in ["summary.json", "summary.toml"] {
        assert_eq!(strip(&a.output.dir.join(f)), strip(&b.output.dir.join(f)), "{f}");
    }
    // And a literal rerun into the same directory reproduces every byte.
    let before: Vec<Vec<u8>> = [TRACE_FILE, CHECKPOINT_FILE, "summary.json", "summary.toml"]
        .iter()
        .map(|f| fs::read(a.output.dir.join(f)).unwrap())
        .collect();
    execute_run(&a).unwrap();
    for (f, old) in [TRACE_FILE, CHECKPOINT_FILE, "summary.json", "summary.toml"].iter().zip(before) {
        assert_eq!(fs::read(a.output.dir.join(f)).unwrap(), old, "{f}");
    }
}

fn resume_matches(name: &str, extra: &str) {
    let tmp = TempDir::new().unwrap();
    let full = config(name, extra, &tmp.path().join("full"));
    let whole = execute_run(&full).unwrap();

    let mut first = full.clone();
    first.flow.t_max = full.flow.t_max / 2.0;
    first.output.dir = tmp.path().join("first");
    let head = execute_run(&first).unwrap();
    assert!(head.summary.steps > 0);

    let mut second = full.clone();
    second.output.dir = tmp.path().join("second");
    second.resume = Some(ResumeSection {
        checkpoint: first.output.dir.join(CHECKPOINT_FILE),
        step: head.summary.steps,
        t: head.summary.t,
    });
    let tail = execute_run(&second).unwrap();
    assert_eq!(tail.summary.steps, whole.summary.steps);
    assert!(!tail.trace.rows.is_empty());
    for r in &tail.trace.rows {
        let w = whole.trace.row_at_step(r.step).unwrap_or_else(|| panic!("no row at step {}", r.step));
        for (x, y) in [
            (r.t, w.t),
            (r.ymh, w.ymh),
            (r.grad_norm, w.grad_norm),
            (r.higgs_residual, w.higgs_residual),
            (r.offalg_residual, w.offalg_residual),
            (r.hitchin_drift, w.hitchin_drift),
        ] {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "step {}: {x} vs {y}", r.step);
        }
    }
    let a = checkpoint::load(&full.output.dir.join(CHECKPOINT_FILE)).unwrap();
    let b = checkpoint::load(&second.output.dir.join(CHECKPOINT_FILE)).unwrap();
    assert!(a.alpha().max_abs_diff(b.alpha()) < 1e-12);
    assert!(a.phi().max_abs_diff(b.phi()) < 1e-12);
}

#[test]
fn resume_reproduces_reduced_run() {
    resume_matches("S5", "");
}

#[test]
fn resume_reproduces_hitchin_baseline() {
    resume_matches("S7", "");
}

#[test]
fn resume_rejects_mismatched_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let s1 = config("S1", "", &tmp.path().join("s1"));
    execute_run(&s1).unwrap();
    let mut other = config("S6", "", &tmp.path().join("s6"));
    other.resume = Some(ResumeSection {
        checkpoint: s1.output.dir.join(CHECKPOINT_FILE),
        step: 0,
        t: 0.0,
    });
    let err = execute_run(&other).unwrap_err();
    assert_eq!(ymh_flow::cli::exit_code(&err), 64, "{err}");
}
