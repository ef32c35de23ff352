//! Run a configuration in two halves through a checkpoint and compare with
//! the uninterrupted trace.

use ymh_flow::cli::{execute_run, CHECKPOINT_FILE};
use ymh_flow::config::{ResumeSection, RunConfig};

const CONFIG: &str = r#"
deterministic = true
[grid]
N = 16
[scenario]
name = "S2"
params = { c0 = 0.8 }
[flow]
dt = 0.002
t_max = 2.0
tol_grad = 0.0
monitor_every = 100
"#;

fn main() -> ymh_flow::error::Result<()> {
    let dir = std::env::temp_dir().join("ymhflow-checkpoint-example");
    let mut full = RunConfig::from_toml(CONFIG)?;
    full.output.dir = dir.join("full");
    let whole = execute_run(&full)?;

    let mut first = full.clone();
    first.flow.t_max = 1.0;
    first.output.dir = dir.join("first");
    let head = execute_run(&first)?;

    let mut second = full.clone();
    second.output.dir = dir.join("second");
    second.resume = Some(ResumeSection {
        checkpoint: first.output.dir.join(CHECKPOINT_FILE),
        step: head.summary.steps,
        t: head.summary.t,
    });
    let tail = execute_run(&second)?;

    let worst = tail
        .trace
        .rows
        .iter()
        .map(|r| {
            let w = whole.trace.row_at_step(r.step).expect("shared monitoring step");
            (r.ymh - w.ymh).abs().max((r.t - w.t).abs())
        })
        .fold(0.0, f64::max);
    println!(
        "resumed at step {} (t = {}); {} shared rows, max difference {worst:.1e}",
        head.summary.steps,
        head.summary.t,
        tail.trace.rows.len()
    );
    println!("outputs under {}", dir.display());
    Ok(())
}
