//! The flow of the constant extension `α = c E₁₂` against `|c(t)| = (1+4t)^{-1/2}`.

use ymh_flow::flow::{run_flow, FlowConfig, TimeStep};
use ymh_flow::grid::make_grid;
use ymh_flow::scenario::{Scenario, ScenarioName};

fn main() -> ymh_flow::error::Result<()> {
    let grid = make_grid(16)?;
    let pair = Scenario::new(ScenarioName::S2).build(&grid)?;
    let cfg = FlowConfig {
        dt: TimeStep::Fixed(1e-3),
        t_max: 10.0,
        tol_grad: 0.0,
        monitor_every: 100,
        ..FlowConfig::default()
    };
    let out = run_flow(&pair, &cfg)?;
    println!("{:>8} {:>14} {:>14} {:>10}", "t", "|c| flow", "|c| exact", "rel err");
    for target in [0.1, 1.0, 10.0] {
        let row = out.trace.rows.iter().find(|r| (r.t - target).abs() < 1e-6).expect("monitored time");
        // ymh = 2|c|⁴ for this pair.
        let c = (row.ymh / 2.0).powf(0.25);
        let exact = (1.0 + 4.0 * target).powf(-0.5);
        println!("{target:>8} {c:>14.10} {exact:>14.10} {:>10.1e}", (c - exact).abs() / exact);
    }
    let monotone = out.trace.rows.windows(2).all(|w| w[1].grad_norm <= w[0].grad_norm);
    println!("gradient norm monotone: {monotone}");
    Ok(())
}
