use std::path::Path;

use proptest::prelude::*;
use ymh_flow::analysis::snap_rational;
use ymh_flow::checkpoint::{decode, encode};
use ymh_flow::config::{DtSetting, RunConfig};
use ymh_flow::field::{FieldKind, MatrixField};
use ymh_flow::flow::{step, Integrator};
use ymh_flow::grid::make_grid;
use ymh_flow::group::{check_tangency, descriptor, GroupName};
use ymh_flow::higgs::{ymh, ymh_gradient, HiggsPair};
use ymh_flow::random::{band_limited_field, random_pair, random_unitary, rng};
use ymh_flow::verify::gradient_mismatch;

fn group_strategy() -> impl Strategy<Value = (GroupName, usize)> {
    prop_oneof![
        Just((GroupName::GL, 2)),
        Just((GroupName::GL, 3)),
        Just((GroupName::SL, 2)),
        Just((GroupName::SL, 3)),
        Just((GroupName::SO, 3)),
        Just((GroupName::SP, 2)),
    ]
}

fn pair(seed: u64, g: (GroupName, usize), scale: f64) -> HiggsPair {
    let grid = make_grid(8).unwrap();
    let p = random_pair(&grid, &descriptor(g.0, g.1).unwrap(), 2, &mut rng(seed));
    HiggsPair::new(p.alpha().scale_real(scale), p.phi().scale_real(scale), p.group().clone()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn checkpoint_round_trip_is_bit_exact(seed in any::<u64>(), g in group_strategy()) {
        let p = pair(seed, g, 1.0);
        let bytes = encode(&p);
        let back = decode(&bytes, Path::new("mem")).unwrap();
        prop_assert_eq!(back.alpha(), p.alpha());
        prop_assert_eq!(back.phi(), p.phi());
        prop_assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn energy_is_invariant_under_constant_unitary_gauge(seed in any::<u64>(), g in group_strategy()) {
        let p = pair(seed, g, 0.5).as_ambient();
        let u = random_unitary(g.1, &mut rng(seed ^ 0x5a5a));
        let gauge = MatrixField::constant(p.grid(), FieldKind::Function, &u);
        let q = p.gauge_transform(&gauge).unwrap();
        let (a, b) = (ymh(&p), ymh(&q));
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn descent_matches_finite_differences(seed in any::<u64>(), g in group_strategy()) {
        let p = pair(seed, g, 0.3);
        let d = ymh_gradient(&p);
        let err = gradient_mismatch(&p, &d, &mut rng(seed.wrapping_add(1)));
        prop_assert!(err < 1e-6, "relative mismatch {:e}", err);
    }

    #[test]
    fn descent_is_tangent_to_the_subalgebra(seed in any::<u64>(), g in group_strategy()) {
        let p = pair(seed, g, 1.0);
        prop_assert!(check_tangency(&p).unwrap() < 1e-12);
    }

    #[test]
    fn small_steps_lower_the_energy(seed in any::<u64>(), g in group_strategy()) {
        let p = pair(seed, g, 0.3);
        let next = step(&p, 1e-4, Integrator::Rk4).unwrap();
        prop_assert!(ymh(&next) <= ymh(&p));
        prop_assert!(next.offalg_residual() < 1e-11);
    }

    #[test]
    fn derivatives_commute_with_star(seed in any::<u64>(), n in 1usize..4) {
        let grid = make_grid(8).unwrap();
        let f = band_limited_field(&grid, n, FieldKind::Function, 3, &mut rng(seed));
        let lhs = f.adjoint().d_zbar().unwrap();
        let rhs = f.d_z().unwrap().adjoint();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn config_round_trips(half in 4usize..64, t_max in 0.01f64..1e3, dt in 1e-6f64..1.0, seed in any::<u64>()) {
        let text = format!(
            "seed = {seed}\n[grid]\nN = {}\n[scenario]\nname = \"S2\"\n[flow]\ndt = {dt:e}\nt_max = {t_max:e}\n",
            2 * half
        );
        let cfg = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(cfg.flow.dt, DtSetting::Fixed(dt));
        prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn snapped_slopes_are_close_rationals(x in -3.0f64..3.0, den in 1i64..4) {
        if let Some(s) = snap_rational(x, den) {
            prop_assert!((s - x).abs() <= 0.05 + 1e-12);
            prop_assert!((1..=den).any(|q| ((s * q as f64).round() - s * q as f64).abs() < 1e-9));
        }
    }
}
