//! The built-in scenarios and the topological data behind the bump ones.

use ymh_flow::cli::render_catalog;
use ymh_flow::grid::make_grid;
use ymh_flow::scenario::{chern_number, BumpProjector};

fn main() -> ymh_flow::error::Result<()> {
    print!("{}", render_catalog());
    let grid = make_grid(64)?;
    for d in 1..=3 {
        let bump = BumpProjector::new((0.5, 0.5), 0.45, d)?;
        println!(
            "degree {d}: map degree {:+.6}, chern number of im P {:+.6}",
            bump.map_degree(&grid),
            chern_number(&bump.projector(&grid))?
        );
    }
    Ok(())
}
