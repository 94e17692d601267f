//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Run with `cargo test --test acceptance`.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use oseen::diagnostics::{fit_rates, ErrorNorms};
use oseen::driver::{convergence_study, run_transient, solve_steady, KhParams, Scenario, TimeLoopConfig};
use oseen::fespace::{FeFunction, Quadrature};
use oseen::linalg::SolverOptions;
use oseen::mesh::{generate_structured, Rect};
use oseen::selftest;
use oseen::system::{Scheme, Spaces};

/// Reference enstrophy of the shear-layer initial state, from an
/// independent symbolic curl integrated by composite Gauss–Legendre
/// quadrature (12 points on 80 × 400 subintervals).
const KH_E0: f64 = 37.633_826_908_365_5;

type Outcome = Result<String, String>;

fn last_rate(rows: &[ErrorNorms], f: impl Fn(&ErrorNorms) -> f64) -> f64 {
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let e: Vec<f64> = rows.iter().map(f).collect();
    fit_rates(&h, &e).ok().and_then(|r| r.last().copied().flatten()).unwrap_or(f64::NAN)
}

fn study(scheme: Scheme, k: usize, levels: usize) -> Result<Vec<ErrorNorms>, String> {
    convergence_study(|n| Scenario::manufactured(n, 0.1, 10.0), scheme, k, levels, &SolverOptions::default()).map_err(|e| e.to_string())
}

fn l2(f: &FeFunction) -> f64 {
    let mesh = f.space.mesh();
    let q = Quadrature::triangle(2 * f.space.polynomial_degree() + 2);
    let mut s = 0.0;
    for c in 0..mesh.n_cells() {
        let det = mesh.geometry(c).det.abs();
        if f.space.is_vector() {
            for (v, w) in f.vector_at(c, &q.points).0.iter().zip(&q.weights) {
                s += w * det * (v[0] * v[0] + v[1] * v[1]);
            }
        } else {
            for (v, w) in f.scalar_at(c, &q.points).0.iter().zip(&q.weights) {
                s += w * det * v * v;
            }
        }
    }
    s.sqrt()
}

fn mixed_rates(div_max: &mut f64) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for k in 0..=1 {
        let rows = study(Scheme::Mixed, k, 5)?;
        for (name, r) in [
            ("u", last_rate(&rows, |r| r.u_div)),
            ("w", last_rate(&rows, |r| r.w_z)),
            ("p", last_rate(&rows, |r| r.p_l2)),
        ] {
            ok &= (r - (k + 1) as f64).abs() <= 0.15;
            parts.push(format!("k={k} {name} {r:.3}"));
        }
        for r in &rows {
            *div_max = div_max.max(r.div_linf);
        }
    }
    let msg = parts.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn divergence(div_max: f64) -> Outcome {
    let msg = format!("max divergence_linf {div_max:.2e} (limit 1e-10)");
    if div_max < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn dg_rates() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for k in 0..=2 {
        let rows = study(Scheme::Dg, k, 6)?;
        for (name, r) in [("A", last_rate(&rows, |r| r.a_seminorm)), ("p", last_rate(&rows, |r| r.p_l2))] {
            ok &= (r - (k + 1) as f64).abs() <= 0.15;
            parts.push(format!("k={k} {name} {r:.3}"));
        }
        if k == 1 {
            let r = &rows[2];
            for (name, got, want) in [("A", r.a_seminorm, 0.0366), ("p", r.p_l2, 0.0133)] {
                let rel = (got - want).abs() / want;
                ok &= rel <= 0.25;
                parts.push(format!("k=1 h=0.1768 {name} {got:.4} vs {want} ({:.1}%)", 100.0 * rel));
            }
        }
    }
    let msg = parts.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn dof_count() -> Outcome {
    let mesh = Arc::new(generate_structured(2, 2, Rect::unit()).map_err(|e| e.to_string())?);
    let n = Spaces::dg(mesh, 0).map_err(|e| e.to_string())?.offsets(true).total();
    let sc = Scenario::manufactured(2, 0.1, 10.0).map_err(|e| e.to_string())?;
    let sol = solve_steady(&sc, Scheme::Dg, 0, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let msg = format!("{n} unknowns, solved system has {}", sol.n_dofs());
    if n == 65 && sol.n_dofs() == 65 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn zero_data() -> Outcome {
    let mut worst = 0.0f64;
    for scheme in [Scheme::Mixed, Scheme::Dg] {
        for k in 0..=2 {
            let sc = Scenario::zero(4, 0.1, 10.0).map_err(|e| e.to_string())?;
            let sol = solve_steady(&sc, scheme, k, &SolverOptions::default()).map_err(|e| e.to_string())?;
            worst = worst.max(l2(&sol.u)).max(l2(&sol.omega)).max(l2(&sol.p));
        }
    }
    let msg = format!("largest L2 norm {worst:.2e}");
    if worst < 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn coercivity() -> Outcome {
    let mut m = f64::INFINITY;
    for k in 0..=1 {
        m = m.min(selftest::coercivity_min_margin(8, k, 200, 0.1, 10.0, selftest::SEED).map_err(|e| e.to_string())?);
    }
    let msg = format!("min normalised margin {m:.3e} over 200 pairs, k=0,1");
    if m >= -1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ipp() -> Outcome {
    let mut d = 0.0f64;
    for k in 0..=1 {
        d = d.max(selftest::ipp_max_difference(4, k, 0.1).map_err(|e| e.to_string())?);
    }
    let msg = format!("max entry difference {d:.2e}");
    if d <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn commuting() -> Outcome {
    let mut d = 0.0f64;
    for k in 0..=1 {
        d = d.max(selftest::commuting_max_error(4, k, 20, selftest::SEED).map_err(|e| e.to_string())?);
    }
    let msg = format!("max coefficient error {d:.2e} over 20 fields, k=0,1");
    if d <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn transient() -> Outcome {
    let kh = KhParams::default();
    let sc = Scenario::kelvin_helmholtz(64, kh).map_err(|e| e.to_string())?;
    let cfg = TimeLoopConfig::new(Scheme::Dg, 1, kh.dt(), 20);
    let recs = run_transient(&sc, &cfg, |_, _| Ok(())).map_err(|e| format!("kh: {e}"))?;
    let e0 = recs[0].enstrophy.e;
    let rel = (e0 - KH_E0).abs() / KH_E0;
    let positive = recs.iter().all(|r| r.enstrophy.e.is_finite() && r.enstrophy.p.is_finite() && r.enstrophy.e > 0.0 && r.enstrophy.p > 0.0);

    let cav = Scenario::open_cavity(0.05, 1e-3, 0.1).map_err(|e| e.to_string())?;
    let cfg = TimeLoopConfig::new(Scheme::Mixed, 0, 0.1, 4);
    let crec = run_transient(&cav, &cfg, |_, _| Ok(())).map_err(|e| format!("cavity: {e}"))?;
    let div = crec[1..].iter().fold(0.0f64, |m, r| m.max(r.div_linf));
    let finite = crec.iter().all(|r| r.enstrophy.e.is_finite() && r.enstrophy.p.is_finite());

    let msg = format!(
        "kh {} steps, E(0) {e0:.4} vs {KH_E0:.4} ({:.2}%), E(20) {:.4}, P(20) {:.4e}; cavity {} steps, max div {div:.2e}",
        recs.len() - 1,
        100.0 * rel,
        recs[20].enstrophy.e,
        recs[20].enstrophy.p,
        crec.len() - 1,
    );
    if recs.len() == 21 && rel <= 0.01 && positive && crec.len() == 5 && finite && div < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let mut div_max = 0.0;
    let mut failed = 0;
    let mut report = |id: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        let (tag, msg) = match &r {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        if r.is_err() {
            failed += 1;
        }
        println!("criterion {id} [{tag}] {title}: {msg} ({secs:.1}s)");
    };
    report(1, "mixed convergence rates", &mut || mixed_rates(&mut div_max));
    report(2, "mixed divergence", &mut || divergence(div_max));
    report(3, "dg convergence", &mut dg_rates);
    report(4, "dg unknown count", &mut dof_count);
    report(5, "zero data", &mut zero_data);
    report(6, "coercivity", &mut coercivity);
    report(7, "integration by parts", &mut ipp);
    report(8, "commuting diagram", &mut commuting);
    report(9, "transient sanity", &mut transient);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
