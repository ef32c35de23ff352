//! Moment map, energy and the closed-form descent direction of a random pair,
//! checked against finite differences.

use ymh_flow::group::{descriptor, GroupName};
use ymh_flow::grid::make_grid;
use ymh_flow::higgs::{chern_moment, ymh, ymh_gradient, GRADIENT_METRIC_SCALE};
use ymh_flow::random::{random_pair, rng};
use ymh_flow::verify::gradient_mismatch;

fn main() -> ymh_flow::error::Result<()> {
    let grid = make_grid(16)?;
    let mut r = rng(42);
    for n in [2, 3] {
        let pair = random_pair(&grid, &descriptor(GroupName::GL, n)?, 2, &mut r);
        let m = chern_moment(&pair);
        let d = ymh_gradient(&pair);
        println!(
            "rank {n}: ymh {:.6e}, hermitian defect {:.1e}, |descent| {:.4e}",
            ymh(&pair),
            m.hermitian_defect(),
            d.norm()
        );
        println!(
            "  d ymh(v) = -{GRADIENT_METRIC_SCALE} Re<descent, v>: relative mismatch {:.1e}",
            gradient_mismatch(&pair, &d, &mut r)
        );
    }
    Ok(())
}
