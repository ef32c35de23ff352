use std::f64::consts::PI;

use ymh_flow::analysis::{classify, moment_spectrum, ClassifyTolerances, Verdict};
use ymh_flow::field::{FieldKind, MatrixField};
use ymh_flow::flow::{run_flow, FlowConfig, TimeStep};
use ymh_flow::grid::{make_grid, Grid};
use ymh_flow::higgs::{higgs_residual, ymh, HiggsPair};
use ymh_flow::matrix::C64;
use ymh_flow::scenario::{Scenario, ScenarioName};

/// `diag(e^{2πi(x+y)}, e^{−2πi(x+y)})`: unitary, determinant one, and a
/// single Fourier mode per entry, so gauge changes stay band-limited.
fn winding_gauge(grid: &Grid) -> MatrixField {
    MatrixField::from_fn(grid, 2, FieldKind::Function, |x, y, o| {
        let w = C64::from_polar(1.0, 2.0 * PI * (x + y));
        o[0] = w;
        o[3] = w.conj();
    })
}

fn s2_limit(grid: &Grid) -> (Scenario, HiggsPair, HiggsPair) {
    let sc = Scenario::new(ScenarioName::S2);
    let start = sc.build(grid).unwrap();
    let cfg = FlowConfig {
        dt: TimeStep::DEFAULT_ADAPTIVE,
        t_max: 1e9,
        tol_grad: 1e-10,
        ..FlowConfig::default()
    };
    let limit = run_flow(&start, &cfg).unwrap().limit;
    (sc, start, limit)
}

#[test]
fn energy_and_spectrum_are_gauge_invariant() {
    let grid = make_grid(16).unwrap();
    let sc = Scenario::new(ScenarioName::S4);
    let pair = sc.build(&grid).unwrap();
    let pair = HiggsPair::new(
        pair.alpha().try_add(&Scenario::new(ScenarioName::S2).build(&grid).unwrap().alpha().scale_real(0.3)).unwrap(),
        pair.phi().clone(),
        pair.group().clone(),
    )
    .unwrap();
    let moved = pair.gauge_transform(&winding_gauge(&grid)).unwrap();
    assert!(moved.alpha().max_abs_diff(pair.alpha()) > 0.1, "gauge change is nontrivial");
    assert!((ymh(&moved) - ymh(&pair)).abs() < 1e-12 * ymh(&pair));
    let (a, b) = (moment_spectrum(&pair), moment_spectrum(&moved));
    for (x, y) in a.means.iter().zip(&b.means) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((higgs_residual(&moved) - higgs_residual(&pair)).abs() < 1e-10);
}

#[test]
fn classify_is_gauge_invariant() {
    let grid = make_grid(16).unwrap();
    let (sc, start, limit) = s2_limit(&grid);
    let g = winding_gauge(&grid);
    let tol = ClassifyTolerances::default();
    let plain = classify(&limit, Some(&start), &sc, None, &tol);
    let gauged = classify(&limit.gauge_transform(&g).unwrap(), Some(&start), &sc, None, &tol);
    assert_eq!(plain.verdict, Verdict::Pass, "{plain:?}");
    assert_eq!(gauged.verdict, plain.verdict, "{gauged:?}");
    assert_eq!(gauged.report.h0, Some(2));
    for (x, y) in plain.report.slope_vector.iter().zip(&gauged.report.slope_vector) {
        assert!((x - y).abs() < 1e-10);
    }
    assert!((plain.report.ymh - gauged.report.ymh).abs() < 1e-12);
}
