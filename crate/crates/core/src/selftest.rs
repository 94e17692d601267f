//! Invariant checks runnable from the command line.
//!
//! The measuring functions are public so the test suites can apply their
//! own thresholds.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coefficient::{Field, OseenParams, Stabilisation, VectorCoefficient};
use crate::dg::{assemble_b1_dg, assemble_b2_dg, assemble_e, assemble_j, Form};
use crate::driver::{solve_steady, Manufactured, Scenario};
use crate::error::Result;
use crate::fespace::{interpolate_rt, project_l2, project_l2_by_cell, FeFunction, FeSpace, Values};
use crate::linalg::SolverOptions;
use crate::mesh::{generate_structured, Mesh, Point, Rect};
use crate::mixed::{assemble_a, assemble_c, assemble_d};
use crate::system::{Scheme, Spaces};

pub const SEED: u64 = 0x05ee_2024;

/// Unit square `n × n`, Σ on the top side, Γ elsewhere.
pub fn open_top_mesh(n: usize) -> Result<Mesh> {
    generate_structured(n, n, Rect::unit())?.tag_boundary(|x| x[1] < 1.0 - 1e-12, |_| true, None)
}

/// Largest entrywise difference between the primal and integrated-by-parts
/// forms of `b̃1` and `b̃2`.
pub fn ipp_max_difference(n: usize, k: usize, nu: f64) -> Result<f64> {
    let mesh = Arc::new(open_top_mesh(n)?);
    let s = Spaces::dg(mesh, k)?;
    let d1 = assemble_b1_dg(&s.velocity, &s.vorticity, nu, Form::Primal)
        .max_abs_diff(&assemble_b1_dg(&s.velocity, &s.vorticity, nu, Form::IntegratedByParts));
    let d2 = assemble_b2_dg(&s.velocity, &s.pressure, Form::Primal)
        .max_abs_diff(&assemble_b2_dg(&s.velocity, &s.pressure, Form::IntegratedByParts));
    Ok(d1.max(d2))
}

/// Random vector polynomial of total degree `deg` with its divergence.
pub fn random_polynomial(rng: &mut impl Rng, deg: usize) -> (impl Fn(Point) -> Point + Clone, impl Fn(Point) -> f64 + Clone) {
    let mut terms = Vec::new();
    for i in 0..=deg {
        for j in 0..=deg - i {
            terms.push((i as i32, j as i32, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    let t2 = terms.clone();
    let v = move |p: Point| {
        terms.iter().fold([0.0, 0.0], |a, &(i, j, c1, c2)| {
            let m = p[0].powi(i) * p[1].powi(j);
            [a[0] + c1 * m, a[1] + c2 * m]
        })
    };
    let div = move |p: Point| {
        t2.iter().fold(0.0, |a, &(i, j, c1, c2)| {
            let dx = if i > 0 { f64::from(i) * p[0].powi(i - 1) * p[1].powi(j) } else { 0.0 };
            let dy = if j > 0 { f64::from(j) * p[0].powi(i) * p[1].powi(j - 1) } else { 0.0 };
            a + c1 * dx + c2 * dy
        })
    };
    (v, div)
}

/// `max |div R_h v − P_h div v|` over coefficients, for `trials` random
/// polynomials of degree `≤ k+1` on an `n × n` mesh.
pub fn commuting_max_error(n: usize, k: usize, trials: usize, seed: u64) -> Result<f64> {
    let mesh = Arc::new(generate_structured(n, n, Rect::unit())?);
    let h = Arc::new(FeSpace::raviart_thomas(mesh.clone(), k)?);
    let q = FeSpace::discontinuous(mesh, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (v, div) = random_polynomial(&mut rng, k + 1);
        let rv = FeFunction::new(h.clone(), interpolate_rt(&h, &v))?;
        let lhs = project_l2_by_cell(&q, 2 * k + 4, |c, pts| Values::Scalar(rv.vector_at(c, pts).1))?;
        let rhs = project_l2(&q, Field::Scalar(&div))?;
        for (a, b) in lhs.iter().zip(&rhs) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Smallest normalised margin of
/// `a(v,v) + d(θ,θ) + c(θ,v) − (σ/2)‖v‖² − (1 − 2‖β‖²∞/(νσ))‖θ‖²`
/// over random pairs with `‖v‖² + ‖θ‖² = 1`, mixed spaces of index `k`.
pub fn coercivity_min_margin(n: usize, k: usize, pairs: usize, nu: f64, sigma: f64, seed: u64) -> Result<f64> {
    let mesh = Arc::new(generate_structured(n, n, Rect::unit())?);
    let s = Spaces::mixed(mesh.clone(), k)?;
    let exact = Manufactured::unit_square(nu);
    let beta = VectorCoefficient::analytic(move |x| exact.velocity(x));
    let a = assemble_a(&s.velocity, sigma);
    let m = assemble_a(&s.velocity, 1.0);
    let d = assemble_d(&s.vorticity);
    let c = assemble_c(&s.vorticity, &s.velocity, nu, &beta);
    let bmax = beta.sup_norm(&mesh, 2 * (k + 1) + 2).max(beta.sup_norm(&mesh, 12));
    let ind = 2.0 * bmax * bmax / (nu * sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..pairs {
        let v: Vec<f64> = (0..s.velocity.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..s.vorticity.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (nv, nt) = (m.bilinear(&v, &v), d.bilinear(&t, &t));
        let lhs = a.bilinear(&v, &v) + nt + c.bilinear(&v, &t);
        let rhs = 0.5 * sigma * nv + (1.0 - ind) * nt;
        worst = worst.min((lhs - rhs) / (nv + nt));
    }
    Ok(worst)
}

/// Smallest `xᵀJx / xᵀx` and `yᵀEy / yᵀy` over random vectors for the given
/// stabilisation constants.
pub fn penalty_min_rayleigh(n: usize, k: usize, stab: Stabilisation, samples: usize, seed: u64) -> Result<f64> {
    let mesh = Arc::new(open_top_mesh(n)?);
    let s = Spaces::dg(mesh, k)?;
    let mut params = OseenParams::new(0.1, 10.0);
    params.stab = stab;
    let j = assemble_j(&s.velocity, &params);
    let e = assemble_e(&s.pressure, &params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        for m in [&j, &e] {
            let x: Vec<f64> = (0..m.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xx: f64 = x.iter().map(|v| v * v).sum();
            worst = worst.min(m.bilinear(&x, &x) / xx);
        }
    }
    Ok(worst)
}

/// Largest coefficient of the solution with zero data.
pub fn zero_data_max(scheme: Scheme, k: usize, n: usize) -> Result<f64> {
    let sc = Scenario::zero(n, 0.1, 10.0)?;
    let sol = solve_steady(&sc, scheme, k, &SolverOptions::default())?;
    Ok(sol.u.coeffs.iter().chain(&sol.omega.coeffs).chain(&sol.p.coeffs).fold(0.0, |m: f64, v| m.max(v.abs())))
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, r: Result<(bool, String)>) -> Check {
    match r {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs every check with the given stabilisation constants (the defaults
/// are `c11 = a11 = σ = 10`, `d11 = ν = 0.1`).
pub fn run(stab: Stabilisation) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(check("dof-counts", (|| {
        let m = Arc::new(generate_structured(2, 2, Rect::unit())?);
        let got: Vec<usize> = [(Scheme::Mixed, 0), (Scheme::Mixed, 1), (Scheme::Dg, 0), (Scheme::Dg, 1)]
            .iter()
            .map(|&(s, k)| Spaces::new(m.clone(), s, k).map(|sp| sp.offsets(true).total()))
            .collect::<Result<_>>()?;
        Ok((got == [34, 98, 65, 145], format!("{got:?}")))
    })()));
    out.push(check("commuting-diagram", (|| {
        let e = commuting_max_error(4, 0, 5, SEED)?.max(commuting_max_error(4, 1, 5, SEED)?);
        Ok((e < 1e-12, format!("max error {e:.2e}")))
    })()));
    out.push(check("ipp-equivalence", (|| {
        let e = ipp_max_difference(4, 0, 0.1)?.max(ipp_max_difference(4, 1, 0.1)?);
        Ok((e < 1e-12, format!("max difference {e:.2e}")))
    })()));
    out.push(check("coercivity", (|| {
        let m = coercivity_min_margin(8, 0, 50, 0.1, 10.0, SEED)?;
        Ok((m >= -1e-10, format!("min margin {m:.3e}")))
    })()));
    out.push(check("flux-penalties", (|| {
        let p = OseenParams { stab, ..OseenParams::new(0.1, 10.0) };
        if let Err(e) = p.validate_stabilisation() {
            return Ok((false, e.to_string()));
        }
        let r = penalty_min_rayleigh(4, 1, stab, 20, SEED)?;
        Ok((r >= -1e-12, format!("min Rayleigh quotient {r:.3e}")))
    })()));
    out.push(check("zero-data", (|| {
        let e = zero_data_max(Scheme::Mixed, 0, 4)?.max(zero_data_max(Scheme::Dg, 0, 4)?);
        Ok((e < 1e-9, format!("max coefficient {e:.2e}")))
    })()));
    out.push(check("mixed-divergence", (|| {
        let sc = Scenario::manufactured(8, 0.1, 10.0)?;
        let sol = solve_steady(&sc, Scheme::Mixed, 1, &SolverOptions::default())?;
        let d = crate::diagnostics::divergence_linf(&sol.u, &sol.p.space)?;
        Ok((d < 1e-10, format!("divergence {d:.2e}")))
    })()));
    out
}

pub fn default_stabilisation() -> Stabilisation {
    Stabilisation { c11: 10.0, a11: 10.0, d11: 0.1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_by_default() {
        for c in run(default_stabilisation()) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn negative_penalty_is_caught() {
        let bad = Stabilisation { c11: -1.0, ..default_stabilisation() };
        let r = run(bad);
        assert!(!r.iter().find(|c| c.name == "flux-penalties").unwrap().passed);
    }
}
