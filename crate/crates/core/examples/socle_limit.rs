//! Semistable pairs flow to their graded objects: the extension S2 splits
//! (one more holomorphic section) and the nilpotent Higgs field of S3 dies.

use ymh_flow::analysis::{classify, ClassifyTolerances};
use ymh_flow::flow::{run_flow, FlowConfig, TimeStep};
use ymh_flow::grid::make_grid;
use ymh_flow::kernel::{holo_section_count, GapTolerance};
use ymh_flow::scenario::{Scenario, ScenarioName};

fn main() -> ymh_flow::error::Result<()> {
    let grid = make_grid(16)?;
    // Spatially uniform states admit steps far beyond the spectral bound.
    let cfg = FlowConfig {
        dt: TimeStep::DEFAULT_ADAPTIVE,
        t_max: 1e9,
        tol_grad: 1e-13,
        ..FlowConfig::default()
    };
    for name in [ScenarioName::S2, ScenarioName::S3] {
        let sc = Scenario::new(name);
        let start = sc.build(&grid)?;
        let out = run_flow(&start, &cfg)?;
        let c = classify(&out.limit, Some(&start), &sc, None, &ClassifyTolerances::default());
        println!(
            "{name}: {} at t = {:.3e}; h0 {} -> {:?}; |phi| {:.1e} -> {:.1e}; verdict {}",
            out.reason,
            out.t,
            holo_section_count(start.alpha(), GapTolerance::default())?,
            c.report.h0,
            start.phi().norm(),
            c.report.phi_norm,
            c.verdict.label()
        );
    }
    Ok(())
}
