//! Subgroup-valued pairs: tangency of the flow, agreement of intrinsic and
//! ambient energies, and the adjoint-induced pair.

use ymh_flow::group::{adjoint_rep, check_tangency, descriptor, induce_representation, GroupName};
use ymh_flow::grid::make_grid;
use ymh_flow::higgs::ymh;
use ymh_flow::random::{random_pair, rng};
use ymh_flow::verify::intrinsic_ymh;

fn main() -> ymh_flow::error::Result<()> {
    let grid = make_grid(16)?;
    let mut r = rng(7);
    for (name, n) in [(GroupName::SL, 2), (GroupName::SO, 3), (GroupName::SP, 2)] {
        let group = descriptor(name, n)?;
        let pair = random_pair(&grid, &group, 2, &mut r);
        println!(
            "{name}({n}), dim {}: normal gradient {:.1e}, intrinsic ymh {:.10e}, ambient {:.10e}",
            group.dim(),
            check_tangency(&pair)?,
            intrinsic_ymh(&pair),
            ymh(&pair.as_ambient())
        );
    }
    let sl2 = descriptor(GroupName::SL, 2)?;
    let ad = adjoint_rep(&sl2)?;
    let pair = random_pair(&grid, &sl2, 1, &mut r);
    let induced = induce_representation(&pair, &ad)?;
    println!(
        "ad: sl(2) -> {}({}), bracket defect {:.1e}; induced pair off-algebra residual {:.1e}",
        ad.target().name(),
        ad.dim(),
        ad.bracket_defect(),
        induced.offalg_residual()
    );
    Ok(())
}
