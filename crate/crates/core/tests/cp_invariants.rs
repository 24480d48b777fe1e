mod common;

use common::{random_density, random_pulse, rng};
use proptest::prelude::*;
use wssus_core::cp_map::{apply_cp_map, check_majorization, fidelity, DensityOperator};
use wssus_core::linalg::{hermitian_deviation, trace_product};
use wssus_core::optimizer::lower_bound;
use wssus_core::{ScatteringGrid, TimeGrid};

fn models() -> Vec<ScatteringGrid> {
    vec![
        ScatteringGrid::gaussian(2.0, 24).unwrap(),
        ScatteringGrid::rectangular(0.2, 0.05, 16).unwrap(),
        ScatteringGrid::gaussian(4.0, 16).unwrap().shifted(0.3, -0.2),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn map_preserves_trace_hermiticity_positivity(seed in any::<u64>(), model in 0usize..3) {
        let g = TimeGrid::default();
        let c = &models()[model];
        let rho = random_density(&g, &mut rng(seed));
        for adjoint in [false, true] {
            let out = apply_cp_map(c, &rho, adjoint).unwrap();
            prop_assert!((out.trace() - rho.trace()).abs() < 1e-10);
            prop_assert!(hermitian_deviation(out.entries()) < 1e-10);
            prop_assert!(*out.eigen().values.last().unwrap() > -1e-9);
        }
    }

    #[test]
    fn adjoint_identity(seed in any::<u64>(), model in 0usize..3) {
        let g = TimeGrid::default();
        let c = &models()[model];
        let mut r = rng(seed);
        let gg = DensityOperator::from_pulse(&random_pulse(&g, 5, &mut r)).unwrap();
        let gamma = DensityOperator::from_pulse(&random_pulse(&g, 5, &mut r)).unwrap();
        let lhs = trace_product(gg.entries(), apply_cp_map(c, &gamma, false).unwrap().entries());
        let rhs = trace_product(apply_cp_map(c, &gg, true).unwrap().entries(), gamma.entries());
        prop_assert!((lhs - rhs).norm() < 1e-10, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn maps_commute(seed in any::<u64>()) {
        let g = TimeGrid::default();
        let a = ScatteringGrid::gaussian(4.0, 16).unwrap();
        let b = ScatteringGrid::rectangular(0.3, 0.2, 8).unwrap();
        let rho = random_density(&g, &mut rng(seed));
        let ab = apply_cp_map(&a, &apply_cp_map(&b, &rho, false).unwrap(), false).unwrap();
        let ba = apply_cp_map(&b, &apply_cp_map(&a, &rho, false).unwrap(), false).unwrap();
        let diff = (ab.entries() - ba.entries()).norm();
        prop_assert!(diff < 1e-8, "{:e}", diff);
    }

    #[test]
    fn input_majorizes_output(seed in any::<u64>(), model in 0usize..3) {
        let g = TimeGrid::default();
        let rho = random_density(&g, &mut rng(seed));
        prop_assert!(check_majorization(&models()[model], &rho).unwrap());
    }
}

#[test]
fn jensen_bound_on_random_pairs() {
    let g = TimeGrid::default();
    let mut r = rng(2024);
    let mut violations = 0;
    for c in &models() {
        for _ in 0..100 {
            let a = random_pulse(&g, 6, &mut r);
            let b = random_pulse(&g, 6, &mut r);
            let f = fidelity(c, &a, &b).unwrap();
            let lb = lower_bound(c, &a, &b).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&f));
            if lb > f + 1e-8 {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn fidelity_matches_trace_form() {
    let g = TimeGrid::default();
    let mut r = rng(7);
    for c in &models() {
        let a = random_pulse(&g, 4, &mut r);
        let b = random_pulse(&g, 4, &mut r);
        let ga = DensityOperator::from_pulse(&a).unwrap();
        let gb = DensityOperator::from_pulse(&b).unwrap();
        let tr = trace_product(ga.entries(), apply_cp_map(c, &gb, false).unwrap().entries()).re;
        assert!((fidelity(c, &a, &b).unwrap() - tr).abs() < 1e-10);
    }
}
