//! Spectral derivatives on the torus and the discrete adjoint relation.

use std::f64::consts::PI;

use ymh_flow::field::{FieldKind, MatrixField};
use ymh_flow::grid::make_grid;
use ymh_flow::matrix::C64;

fn main() -> ymh_flow::error::Result<()> {
    let grid = make_grid(32)?;
    // f = exp(2πi(2x + y)), so ∂_z f = πi(p − iq) f with (p, q) = (2, 1).
    let f = MatrixField::from_fn(&grid, 1, FieldKind::Function, |x, y, o| {
        o[0] = C64::from_polar(1.0, 2.0 * PI * (2.0 * x + y));
    });
    let df = f.d_z()?;
    let want = f.scale(C64::new(0.0, PI) * C64::new(2.0, -1.0)).with_kind(FieldKind::Form10);
    println!("d_z of a single mode: max error {:.2e}", df.max_abs_diff(&want));

    let g = MatrixField::from_fn(&grid, 1, FieldKind::Function, |x, y, o| {
        let phase = 2.0 * PI * (2.0 * x + y);
        o[0] = C64::new(phase.cos() + (2.0 * PI * x).sin(), 0.5 * phase.sin() + (4.0 * PI * y).cos());
    });
    let lhs = f.d_z()?.inner(&g.clone().with_kind(FieldKind::Form10))?;
    let rhs = -f.clone().with_kind(FieldKind::Form01).inner(&g.d_zbar()?)?;
    println!("<d_z f, g> = {lhs:.6}, -<f, d_zbar g> = {rhs:.6}");
    Ok(())
}
