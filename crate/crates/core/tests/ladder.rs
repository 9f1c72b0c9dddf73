use bell_ladder::ladder::{
    analytic_max_rhs, coefficients, coefficients_explicit, ladder_table, phi_window,
    phi_window_with, solve_exclusion_in, stepladder_table, verify_ladder, LadderSpec,
    DEFAULT_TOLERANCE,
};
use bell_ladder::state::singlet_spin1;
use bell_ladder::Execution;
use proptest::prelude::*;

fn feasible_phis(phi_min: f64) -> Vec<f64> {
    [0.0, 0.2, 0.45, 0.7, 0.95]
        .iter()
        .map(|f| phi_min + f * (90.0 - phi_min))
        .collect()
}

#[test]
fn windows_match_closed_form() {
    for k in 1..=11 {
        let w = phi_window(k);
        assert!(
            w.agreement_residual() < 1e-6,
            "K={k}: {} vs {}",
            w.max_rhs,
            w.analytic_max
        );
        assert!((w.analytic_max - analytic_max_rhs(k)).abs() == 0.0);
        assert!((w.phi_min_deg + w.phi_max_deg - 180.0).abs() < 1e-9);
    }
}

#[test]
fn window_values() {
    let cases = [(1, 70.5, 109.5), (2, 59.5, 120.5), (11, 48.08, 131.92)];
    for (k, lo, hi) in cases {
        let w = phi_window(k);
        assert!((w.phi_min_deg - lo).abs() < 0.05, "K={k} {}", w.phi_min_deg);
        assert!((w.phi_max_deg - hi).abs() < 0.05, "K={k} {}", w.phi_max_deg);
    }
    let w2 = phi_window(2);
    let expected = ((2.0 + 20f64.sqrt()) / 8.0).powi(5);
    assert!((w2.max_rhs - expected).abs() < 1e-9);
}

#[test]
fn windows_nest_towards_45() {
    let ws: Vec<_> = (1..=11).map(phi_window).collect();
    for pair in ws.windows(2) {
        assert!(pair[1].phi_min_deg < pair[0].phi_min_deg);
        assert!(pair[1].phi_max_deg > pair[0].phi_max_deg);
        assert!(pair[1].phi_min_deg > 45.0);
    }
}

#[test]
fn sequential_and_parallel_windows_agree() {
    for k in [1, 3, 6] {
        let s = phi_window_with(k, Execution::Sequential);
        let p = phi_window_with(k, Execution::Parallel);
        assert_eq!(s, p);
    }
}

#[test]
fn verification_passes_for_every_k() {
    let state = singlet_spin1();
    for k in 1..=11 {
        let w = phi_window(k);
        for phi in feasible_phis(w.phi_min_deg)
            .into_iter()
            .chain([180.0 - w.phi_min_deg - 1.0])
        {
            let thetas = solve_exclusion_in(&w, phi).expect("feasible");
            let spec = LadderSpec::new(phi, thetas).unwrap();
            assert!(spec.exclusion_residual().abs() < 1e-10, "K={k} phi={phi}");
            let table = ladder_table(&spec).unwrap();
            assert_eq!(table.edges.len(), 8 * k);
            assert!(table.edge_structure_violations().is_empty());
            let r = verify_ladder(&state, &table, DEFAULT_TOLERANCE).unwrap();
            assert!(
                r.pass,
                "K={k} phi={phi}: residual {} exclusion {}",
                r.max_residual(),
                r.exclusion_probability
            );
            let c = phi.to_radians().cos();
            assert!((r.start_probability - c * c / 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn named_feasibility_points() {
    let state = singlet_spin1();
    let w2 = phi_window(2);
    let th = solve_exclusion_in(&w2, 60.0).unwrap();
    let r = verify_ladder(
        &state,
        &ladder_table(&LadderSpec::new(60.0, th).unwrap()).unwrap(),
        1e-10,
    )
    .unwrap();
    assert!(r.pass);
    let w11 = phi_window(11);
    assert!(solve_exclusion_in(&w11, 48.19).is_some());
    assert!(solve_exclusion_in(&w11, 48.0).is_none());
    assert!(solve_exclusion_in(&w2, 59.0).is_none());
}

#[test]
fn edge_shapes_over_a_grid() {
    for k in [1, 3] {
        let w = phi_window(k);
        for i in 0..20 {
            let phi = w.phi_min_deg + (i as f64 + 0.5) / 20.0 * (w.phi_max_deg - w.phi_min_deg);
            if (phi - 90.0).abs() < 1e-6 {
                continue;
            }
            for j in 0..20 {
                let t = (j as f64 + 1.0) / 20.0;
                let thetas: Vec<f64> = w.argmax_thetas_deg.iter().map(|x| t * x).collect();
                let table = ladder_table(&LadderSpec::new(phi, thetas.clone()).unwrap()).unwrap();
                assert!(
                    table.edge_structure_violations().is_empty(),
                    "K={k} phi={phi} t={t}"
                );
                if k == 1 {
                    let s = stepladder_table(phi, thetas[0]).unwrap();
                    assert!(s.edge_structure_violations().is_empty());
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn recursive_and_explicit_coefficients_agree(thetas in prop::collection::vec(0.01f64..90.0, 1..12)) {
        let r = coefficients(&thetas).unwrap();
        let e = coefficients_explicit(&thetas).unwrap();
        prop_assert_eq!(r.len(), thetas.len());
        for (a, b) in r.iter().zip(&e) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
