use std::sync::Arc;

use oseen::diagnostics::divergence_linf;
use oseen::driver::{convergence_study, solve_steady, Manufactured, Scenario};
use oseen::linalg::SolverOptions;
use oseen::mesh::{generate_structured, Rect};
use oseen::mixed::assemble_mixed_system;
use oseen::system::{Scheme, Spaces};
use oseen::OseenError;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

fn unit_study(k: usize, levels: usize) -> Vec<oseen::diagnostics::ErrorNorms> {
    convergence_study(|n| Scenario::manufactured(n, 0.1, 10.0), Scheme::Mixed, k, levels, &SolverOptions::default()).unwrap()
}

#[test]
fn lowest_order_table_values() {
    let rows = unit_study(0, 4);
    let dofs: Vec<usize> = rows.iter().map(|r| r.dofs).collect();
    assert_eq!(dofs, [34, 114, 418, 1602]);
    let u = [0.1357, 0.1129, 0.0619, 0.0315];
    let w = [1.2943, 1.0072, 0.5623, 0.2869];
    let p = [0.2002, 0.1219, 0.0572, 0.0280];
    for (i, r) in rows.iter().enumerate() {
        assert!(close(r.u_div, u[i], 0.03), "u level {i}: {}", r.u_div);
        assert!(close(r.w_z, w[i], 0.01), "w level {i}: {}", r.w_z);
        assert!(close(r.p_l2, p[i], 0.01), "p level {i}: {}", r.p_l2);
    }
}

#[test]
fn first_order_table_values() {
    let rows = unit_study(1, 4);
    let dofs: Vec<usize> = rows.iter().map(|r| r.dofs).collect();
    assert_eq!(dofs, [98, 354, 1346, 5250]);
    let u = [0.0337, 0.0094, 0.0024];
    let w = [0.3448, 0.0979, 0.0255];
    let p = [0.0173, 0.0038, 8.3e-4];
    for (i, r) in rows[1..].iter().enumerate() {
        assert!(close(r.u_div, u[i], 0.02), "u level {}: {}", i + 1, r.u_div);
        assert!(close(r.w_z, w[i], 0.02), "w level {}: {}", i + 1, r.w_z);
        assert!(close(r.p_l2, p[i], 0.02), "p level {}: {}", i + 1, r.p_l2);
    }
}

#[test]
fn second_order_rates() {
    let rows = unit_study(2, 4);
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let u: Vec<f64> = rows.iter().map(|r| r.u_div).collect();
    let rate = oseen::diagnostics::fit_rates(&h, &u).unwrap()[3].unwrap();
    assert!((rate - 3.0).abs() < 0.15, "{rate}");
}

#[test]
fn every_solve_is_divergence_free() {
    for k in 0..=2 {
        for n in [2, 4, 8] {
            let sc = Scenario::manufactured(n, 0.1, 10.0).unwrap();
            let sol = solve_steady(&sc, Scheme::Mixed, k, &SolverOptions::default()).unwrap();
            let d = divergence_linf(&sol.u, &sol.p.space).unwrap();
            assert!(d < 1e-12, "k={k} n={n}: {d:e}");
        }
    }
}

#[test]
fn sigma_boundary_converges() {
    let rows = convergence_study(|n| Scenario::open_top(n, 0.1, 10.0), Scheme::Mixed, 1, 4, &SolverOptions::default()).unwrap();
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    for e in [rows.iter().map(|r| r.u_div).collect::<Vec<_>>(), rows.iter().map(|r| r.w_z).collect()] {
        let rate = oseen::diagnostics::fit_rates(&h, &e).unwrap()[3].unwrap();
        assert!((rate - 2.0).abs() < 0.2, "{rate}");
    }
}

#[test]
fn pressure_needs_a_gauge() {
    let mesh = Arc::new(generate_structured(2, 2, Rect::unit()).unwrap());
    let spaces = Spaces::mixed(mesh, 0).unwrap();
    let params = Manufactured::unit_square(0.1).params(10.0);
    assert!(matches!(assemble_mixed_system(&params, &spaces, false), Err(OseenError::NoPressureGauge)));
}

#[test]
fn sigma_data_without_sigma_is_rejected() {
    let mesh = Arc::new(generate_structured(2, 2, Rect::unit()).unwrap());
    let spaces = Spaces::mixed(mesh.clone(), 0).unwrap();
    let exact = Manufactured::unit_square(0.1);
    let mut params = exact.params(10.0);
    params.p_sigma = oseen::coefficient::ScalarCoefficient::analytic(move |x| exact.pressure(x));
    assert!(matches!(assemble_mixed_system(&params, &spaces, true), Err(OseenError::SigmaDataOnGamma)));
}

#[test]
fn dg_spaces_are_refused() {
    let mesh = Arc::new(generate_structured(2, 2, Rect::unit()).unwrap());
    let spaces = Spaces::dg(mesh, 0).unwrap();
    let params = Manufactured::unit_square(0.1).params(10.0);
    assert!(matches!(assemble_mixed_system(&params, &spaces, true), Err(OseenError::InconsistentSpaces(_))));
}
