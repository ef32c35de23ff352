//! Harder-Narasimhan type of the split bundle `O(1) ⊕ O(−1)` read off the
//! eigenvalues of the limiting moment density.
//!
//! `cargo run --release --example hn_type -- [N]` (default 16; N = 32 resolves
//! the slopes to well under 1% and takes several minutes).

use std::sync::Arc;

use ymh_flow::analysis::{hn_type, moment_spectrum};
use ymh_flow::flow::{run_flow, FlowConfig, TimeStep};
use ymh_flow::grid::make_grid;
use ymh_flow::scenario::{chern_number, Scenario, ScenarioName};

fn main() -> ymh_flow::error::Result<()> {
    let side = std::env::args().nth(1).map_or(16, |s| s.parse().expect("grid side"));
    let grid = make_grid(side)?;
    let sc = Scenario::new(ScenarioName::S5);
    let start = sc.build(&grid)?;
    let reduction = sc.levi_reduction(&grid, start.alpha())?.map(Arc::new);
    if let Some(r) = &reduction {
        println!("block degrees {:.6} {:.6}", chern_number(&r.blocks()[0])?, chern_number(&r.blocks()[1])?);
    }
    let cfg = FlowConfig {
        dt: TimeStep::Auto,
        t_max: 100.0,
        tol_grad: 1e-5,
        monitor_every: 1000,
        reduction: reduction.clone(),
        ..FlowConfig::default()
    };
    let out = run_flow(&start, &cfg)?;
    for row in &out.trace.rows {
        println!("t {:>8.3} ymh {:.9e} grad {:.3e}", row.t, row.ymh, row.grad_norm);
    }
    let slopes = hn_type(&out.limit, reduction.as_deref(), 1e-5)?;
    let spec = moment_spectrum(&out.limit);
    println!("{}: slopes {:?} (snapped {:?}), spatial std {:?}", out.reason, slopes.raw, slopes.snapped, spec.stds);
    println!("expected {:?}", sc.expected_hn.value);
    Ok(())
}
