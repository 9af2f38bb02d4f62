mod common;

use std::f64::consts::PI;

use common::*;
use nqs_bell::basis::Basis;
use nqs_bell::bell::{
    build_i1_hamiltonian, build_i2, build_i3, compile, i2_settings_random, i3_settings,
};
use nqs_bell::ed::min_eigenpair;
use nqs_bell::estimator::exact_expectation;
use nqs_bell::rbm::RbmParams;
use nqs_bell::{Operator, SchemeKind};
use proptest::prelude::*;

fn any_scheme(n: usize) -> impl Strategy<Value = SchemeKind> {
    prop_oneof![
        (1usize..=2).prop_map(|alpha| SchemeKind::Dense { alpha }),
        (1usize..=2, 0usize..=2).prop_map(|(alpha, range)| SchemeKind::ShortRange { alpha, range }),
        (1usize..=2 * n).prop_map(|n_hidden| SchemeKind::PermSymmetric { n_hidden }),
        (1usize..=2 * n, any::<bool>()).prop_map(|(n_hidden, free_first_site)| {
            SchemeKind::PartialSymmetric {
                n_hidden,
                free_first_site,
            }
        }),
    ]
}

/// One of the three Bell operators with random parameters.
fn any_instance() -> impl Strategy<Value = (Operator, Option<i32>)> {
    prop_oneof![
        (2usize..=4, 0.0..0.95f64, 0.0..3.0f64)
            .prop_map(|(half, d, big)| (build_i1_hamiltonian(2 * half, d, big).unwrap(), Some(0))),
        (3usize..=8, 0.0..PI, 0.0..0.3f64, any::<u64>()).prop_map(|(n, th, eps, seed)| {
            (
                compile(
                    &build_i2(n).unwrap(),
                    &i2_settings_random(n, th, eps, seed).unwrap(),
                )
                .unwrap(),
                None,
            )
        }),
        (3usize..=8, 0.0..PI).prop_map(|(n, th)| {
            (
                compile(&build_i3(n).unwrap(), &i3_settings(n, th).unwrap()).unwrap(),
                None,
            )
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compiled_i2_equals_tensored_observables(n in 2usize..=6, th in -PI..PI, eps in 0.0..0.5f64, seed in any::<u64>()) {
        let ineq = build_i2(n).unwrap();
        let settings = i2_settings_random(n, th, eps, seed).unwrap();
        let err = max_abs_diff(&dense(&compile(&ineq, &settings).unwrap()), &tensor_operator(&ineq, &settings));
        prop_assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn compiled_i3_equals_tensored_observables(n in 2usize..=6, th in -PI..PI) {
        let ineq = build_i3(n).unwrap();
        let settings = i3_settings(n, th).unwrap();
        let err = max_abs_diff(&dense(&compile(&ineq, &settings).unwrap()), &tensor_operator(&ineq, &settings));
        prop_assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn bell_operators_are_hermitian((op, _) in any_instance()) {
        let m = dense(&op);
        prop_assert!(max_abs_diff(&m, &m.adjoint()) <= 1e-12);
    }

    #[test]
    fn i3_never_beats_the_quantum_ceiling(n in 2usize..=8, th in 0.0..PI) {
        let op = compile(&build_i3(n).unwrap(), &i3_settings(n, th).unwrap()).unwrap();
        let e = min_eigenpair(&op, None).unwrap().min_eigenvalue;
        prop_assert!(e >= -2.0 * 2f64.sqrt() - 1e-9, "{e}");
    }

    #[test]
    fn rbm_energy_is_variational((op, sector) in any_instance(), kind_seed in any::<u64>(), scale in 0.05..1.0f64) {
        let n = op.n_sites();
        let kinds = all_schemes(n);
        let kind = kinds[(kind_seed % kinds.len() as u64) as usize];
        let p = RbmParams::<f64>::random_init(scheme(kind, n), scale, kind_seed).unwrap();
        let (e, var) = exact_expectation(&op, &p, &Basis::new(n, sector).unwrap()).unwrap();
        let e0 = min_eigenpair(&op, sector).unwrap().min_eigenvalue;
        prop_assert!(e >= e0 - 1e-9 * e0.abs().max(1.0), "{e} < {e0}");
        prop_assert!(var >= -1e-9);
    }

    #[test]
    fn lookup_cache_does_not_drift(n in 2usize..=12, seed in any::<u64>(), scale in 0.05..1.5f64, kind in any_scheme(6)) {
        let kind = match kind {
            SchemeKind::ShortRange { alpha, range } => SchemeKind::ShortRange { alpha, range: range.min(n - 1) },
            k => k,
        };
        prop_assert!(lookup_drift(kind, n, scale, 1000, seed) <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn forces_are_gradients(n in 3usize..=5, seed in any::<u64>(), kind in any_scheme(3)) {
        let op = random_operator(n, seed);
        let err = force_fd_error(kind, &op, seed);
        prop_assert!(err <= 1e-6, "{kind}: {err}");
    }
}

#[test]
fn compile_matches_tensor_at_eight_parties() {
    for (th, eps, seed) in [(2.0 * PI / 3.0, 0.1, 7), (0.3, 0.0, 1)] {
        let ineq = build_i2(8).unwrap();
        let settings = i2_settings_random(8, th, eps, seed).unwrap();
        assert!(
            max_abs_diff(
                &dense(&compile(&ineq, &settings).unwrap()),
                &tensor_operator(&ineq, &settings)
            ) <= 1e-12
        );
    }
    let ineq = build_i3(8).unwrap();
    let settings = i3_settings(8, 1.1).unwrap();
    assert!(
        max_abs_diff(
            &dense(&compile(&ineq, &settings).unwrap()),
            &tensor_operator(&ineq, &settings)
        ) <= 1e-12
    );
}

#[test]
fn i1_ground_state_lies_in_the_zero_magnetization_sector() {
    for (n, big) in [(6, 0.5), (8, 2.0), (10, 1.0), (12, 3.0)] {
        let op: Operator = build_i1_hamiltonian(n, 0.9, big).unwrap();
        assert!(op.conserves_magnetization());
        let full = min_eigenpair(&op, None).unwrap().min_eigenvalue;
        let sector = min_eigenpair(&op, Some(0)).unwrap().min_eigenvalue;
        assert!(
            (full - sector).abs() < 1e-8,
            "N={n} Δ={big}: {full} vs {sector}"
        );
    }
}
