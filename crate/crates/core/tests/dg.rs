use std::sync::Arc;

use oseen::coefficient::{OseenParams, Stabilisation};
use oseen::dg::{assemble_b1_dg, assemble_b2_dg, assemble_dg_system, assemble_e, assemble_j, facet_penalties, Form};
use oseen::diagnostics::fit_rates;
use oseen::driver::{convergence_study, Scenario};
use oseen::linalg::{Backend, SolverOptions};
use oseen::mesh::{generate_structured, Rect};
use oseen::system::{Scheme, Spaces};
use oseen::OseenError;

fn unit_study(k: usize, levels: usize) -> Vec<oseen::diagnostics::ErrorNorms> {
    convergence_study(|n| Scenario::manufactured(n, 0.1, 10.0), Scheme::Dg, k, levels, &SolverOptions::default()).unwrap()
}

#[test]
fn unknown_counts() {
    let rows = unit_study(0, 3);
    let dofs: Vec<usize> = rows.iter().map(|r| r.dofs).collect();
    assert_eq!(dofs, [65, 257, 1025]);
    let m = Arc::new(generate_structured(4, 4, Rect::unit()).unwrap());
    assert_eq!(Spaces::dg(m.clone(), 1).unwrap().offsets(true).total(), 577);
    assert_eq!(Spaces::dg(m, 2).unwrap().offsets(true).total(), 1025);
}

#[test]
fn energy_error_near_table_values() {
    let rows = unit_study(0, 4);
    for (r, want) in rows[2..].iter().zip([0.2343, 0.1217]) {
        assert!((r.a_seminorm - want).abs() < 0.05 * want, "{} vs {want}", r.a_seminorm);
    }
    let rows = unit_study(1, 4);
    for (r, want) in rows[2..].iter().zip([0.0366, 0.0089]) {
        assert!((r.a_seminorm - want).abs() < 0.1 * want, "{} vs {want}", r.a_seminorm);
    }
}

#[test]
fn energy_and_pressure_rates() {
    for k in 0..=1 {
        let rows = unit_study(k, 5);
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        for e in [rows.iter().map(|r| r.a_seminorm).collect::<Vec<_>>(), rows.iter().map(|r| r.p_l2).collect()] {
            let rate = fit_rates(&h, &e).unwrap()[4].unwrap();
            assert!((rate - (k + 1) as f64).abs() < 0.2, "k={k}: {rate}");
        }
    }
}

#[test]
fn primal_and_integrated_forms_agree_at_k2() {
    let mesh = Arc::new(oseen::selftest::open_top_mesh(3).unwrap());
    let s = Spaces::dg(mesh, 2).unwrap();
    let d1 = assemble_b1_dg(&s.velocity, &s.vorticity, 0.1, Form::Primal)
        .max_abs_diff(&assemble_b1_dg(&s.velocity, &s.vorticity, 0.1, Form::IntegratedByParts));
    let d2 = assemble_b2_dg(&s.velocity, &s.pressure, Form::Primal)
        .max_abs_diff(&assemble_b2_dg(&s.velocity, &s.pressure, Form::IntegratedByParts));
    assert!(d1 < 1e-12 && d2 < 1e-12, "{d1:e} {d2:e}");
}

#[test]
fn penalty_scaling_with_mesh_size() {
    let stab = Stabilisation { c11: 10.0, a11: 5.0, d11: 0.1 };
    for n in [2, 4, 8] {
        let mesh = generate_structured(n, n, Rect::unit()).unwrap();
        let link = mesh.links().iter().find(|l| l.minus.is_some()).unwrap();
        let (c, a, d) = facet_penalties(&mesh, link, &stab);
        let h = 2f64.sqrt() / n as f64;
        assert!((c - 10.0 / h).abs() < 1e-12 * c);
        assert!((a - 5.0 / h).abs() < 1e-12 * a);
        assert!((d - 0.1 * h).abs() < 1e-12 * d);
    }
}

#[test]
fn penalty_blocks_are_symmetric_semidefinite() {
    let mesh = Arc::new(oseen::selftest::open_top_mesh(3).unwrap());
    let s = Spaces::dg(mesh, 1).unwrap();
    let p = OseenParams::new(0.1, 10.0);
    for m in [assemble_j(&s.velocity, &p), assemble_e(&s.pressure, &p)] {
        assert!(m.max_abs_diff(&m.transpose()) < 1e-12 * m.max_abs());
        let ones = vec![1.0; m.nrows()];
        assert!(m.bilinear(&ones, &ones) >= -1e-12);
    }
}

#[test]
fn negative_penalty_is_rejected() {
    let mesh = Arc::new(generate_structured(2, 2, Rect::unit()).unwrap());
    let s = Spaces::dg(mesh, 0).unwrap();
    let mut p = OseenParams::new(0.1, 10.0);
    p.stab.c11 = -1.0;
    assert!(matches!(assemble_dg_system(&p, &s, true), Err(OseenError::Config(_))));
}

#[test]
fn high_order_uses_the_multifrontal_backend() {
    let sc = Scenario::manufactured(16, 0.1, 10.0).unwrap();
    let sol = oseen::driver::solve_steady(&sc, Scheme::Dg, 2, &SolverOptions::default()).unwrap();
    let r = sol.report.unwrap();
    assert_eq!(r.backend, Backend::Multifrontal);
    assert!(r.residual < 1e-12);
}
