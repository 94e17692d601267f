//! Steady solves, the backward-Euler time loop and convergence studies.

mod manufactured;
mod scenario;

pub use manufactured::{quartic_pressure, separable, sin2, sin3_over_3pi, square, Factor, Manufactured, StreamDerivatives};
pub use scenario::{cavity_initial_velocity, kh_initial_velocity, unit_square_gamma, KhParams, Scenario, SCENARIOS};

use std::sync::Arc;

use crate::coefficient::{Field, OseenParams, ScalarFn, VectorCoefficient};
use crate::dg::assemble_dg_system;
use crate::diagnostics::{divergence_linf, enstrophy_palinstrophy, error_norms, Enstrophy, ErrorNorms};
use crate::error::{OseenError, Result};
use crate::fespace::{interpolate_rt, project_l2, project_l2_by_cell, FeFunction, FeSpace, SpaceKind, Values};
use crate::linalg::{SolverOptions, SymbolicFactor};
use crate::mesh::Mesh;
use crate::mixed::assemble_mixed_system;
use crate::system::{SaddleSystem, Scheme, Solution, Spaces};

/// Assembles the system of either scheme.
pub fn assemble(params: &OseenParams, spaces: &Spaces, zero_mean: bool) -> Result<SaddleSystem> {
    match spaces.scheme {
        Scheme::Mixed => assemble_mixed_system(params, spaces, zero_mean),
        Scheme::Dg => assemble_dg_system(params, spaces, zero_mean),
    }
}

fn warn_indicator(params: &OseenParams, mesh: &Mesh) {
    let ind = params.solvability_indicator(mesh);
    if ind >= 1.0 {
        log::warn!("solvability indicator 2|beta|^2/(nu sigma) = {ind:.3e} >= 1; continuing");
    }
}

/// One steady solve of `params` on `spaces`.
pub fn solve_params(params: &OseenParams, spaces: &Spaces, zero_mean: bool, opts: &SolverOptions) -> Result<Solution> {
    warn_indicator(params, spaces.mesh());
    let sys = assemble(params, spaces, zero_mean)?;
    let (x, report) = sys.solve(opts)?;
    Solution::from_vector(spaces, &sys.offsets, &x, Some(report))
}

pub fn solve_steady(scenario: &Scenario, scheme: Scheme, k: usize, opts: &SolverOptions) -> Result<Solution> {
    let spaces = Spaces::new(scenario.mesh.clone(), scheme, k)?;
    solve_params(&scenario.params, &spaces, scenario.zero_mean, opts)
}

/// Errors on a sequence of meshes. `build(n)` returns the scenario on an
/// `n × n` grid; levels use `n = 2, 4, 8, …`.
pub fn convergence_study<F>(build: F, scheme: Scheme, k: usize, levels: usize, opts: &SolverOptions) -> Result<Vec<ErrorNorms>>
where
    F: Fn(usize) -> Result<Scenario>,
{
    (0..levels)
        .map(|l| {
            let sc = build(2 << l)?;
            let exact = sc
                .exact
                .as_ref()
                .ok_or_else(|| OseenError::Config(format!("scenario '{}' has no exact solution", sc.name)))?;
            let sol = solve_steady(&sc, scheme, k, opts)?;
            let e = error_norms(&sol, exact, &sc.params)?;
            log::info!("{scheme} k={k} level {l}: h={:.4} dofs={} u={:.3e} w={:.3e} p={:.3e}", e.h, e.dofs, e.u_div, e.w_z, e.p_l2);
            Ok(e)
        })
        .collect()
}

/// How the first velocity is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitialCondition {
    /// Interpolate (mixed) or project (DG) the scenario's initial field.
    #[default]
    FromField,
    /// Steady solve with `σ = 0` and `β = 0`.
    StokesSolve,
}

#[derive(Clone, Copy, Debug)]
pub struct TimeLoopConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    pub k: usize,
    pub initial_condition: InitialCondition,
    /// Replace `β` by the previous velocity at every step.
    pub update_beta: bool,
    pub solver: SolverOptions,
}

impl TimeLoopConfig {
    pub fn new(scheme: Scheme, k: usize, dt: f64, n_steps: usize) -> Self {
        TimeLoopConfig {
            dt,
            n_steps,
            scheme,
            k,
            initial_condition: InitialCondition::FromField,
            update_beta: true,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(OseenError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Diagnostics of one time level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub enstrophy: Enstrophy,
    pub div_linf: f64,
    pub residual: f64,
}

/// Vorticity used for diagnostics before the first solve: `√ν curl u0`
/// (the closed form when given, else the broken curl of `u`) projected onto
/// discontinuous polynomials of the vorticity degree.
pub fn initial_vorticity(u: &FeFunction, z: &FeSpace, nu: f64, curl: Option<&ScalarFn>) -> Result<FeFunction> {
    let mesh = u.space.mesh().clone();
    let space = Arc::new(FeSpace::discontinuous(mesh.clone(), z.polynomial_degree())?);
    let s = nu.sqrt();
    let c = match curl {
        Some(f) => project_l2_by_cell(&space, 2 * z.polynomial_degree() + 8, |cell, pts| {
            let g = mesh.geometry(cell);
            Values::Scalar(pts.iter().map(|p| s * f(g.map(*p))).collect())
        })?,
        None => {
            let deg = 2 * u.space.polynomial_degree() + 2;
            project_l2_by_cell(&space, deg, |cell, pts| Values::Scalar(u.vector_at(cell, pts).2.iter().map(|c| s * c).collect()))?
        }
    };
    FeFunction::new(space, c)
}

/// Discrete initial velocity in the scheme's velocity space.
pub fn initial_velocity(scenario: &Scenario, spaces: &Spaces, cfg: &TimeLoopConfig) -> Result<FeFunction> {
    let h = &spaces.velocity;
    match cfg.initial_condition {
        InitialCondition::StokesSolve => {
            let mut p = scenario.params.clone();
            p.sigma = 0.0;
            p.beta = VectorCoefficient::Zero;
            p.f = VectorCoefficient::Zero;
            Ok(solve_params(&p, spaces, scenario.zero_mean, &cfg.solver)?.u)
        }
        InitialCondition::FromField => {
            let f = scenario
                .initial_velocity
                .as_ref()
                .ok_or_else(|| OseenError::Config(format!("scenario '{}' has no initial velocity", scenario.name)))?;
            let c = match h.kind() {
                SpaceKind::RaviartThomas => interpolate_rt(h, |x| f(x)),
                _ => project_l2(h, Field::Vector(&|x| f(x)))?,
            };
            FeFunction::new(h.clone(), c)
        }
    }
}

fn record(step: usize, t: f64, u: &FeFunction, omega: &FeFunction, qs: &FeSpace, nu: f64, residual: f64) -> Result<StepRecord> {
    Ok(StepRecord {
        step,
        t,
        enstrophy: enstrophy_palinstrophy(omega, nu),
        div_linf: divergence_linf(u, qs)?,
        residual,
    })
}

/// Backward Euler with one linearisation per step: `σ = 1/dt`,
/// `f = σ u_prev` and (optionally) `β = u_prev`.
///
/// `observe` sees each record and the fields behind it; the initial state
/// is reported as step 0 with a projected vorticity and zero pressure.
pub fn run_transient<O>(scenario: &Scenario, cfg: &TimeLoopConfig, mut observe: O) -> Result<Vec<StepRecord>>
where
    O: FnMut(&StepRecord, &Solution) -> Result<()>,
{
    cfg.validate()?;
    let spaces = Spaces::new(scenario.mesh.clone(), cfg.scheme, cfg.k)?;
    let mut params = scenario.params.clone();
    params.sigma = 1.0 / cfg.dt;
    let nu = params.nu;

    let mut u = initial_velocity(scenario, &spaces, cfg)?;
    let w0 = initial_vorticity(&u, &spaces.vorticity, nu, scenario.initial_curl.as_ref())?;
    let r0 = record(0, 0.0, &u, &w0, &spaces.pressure, nu, 0.0)?;
    let mut s0 = Solution::zero(&spaces);
    s0.u = u.clone();
    s0.omega = w0;
    observe(&r0, &s0)?;
    let mut out = vec![r0];
    if !cfg.update_beta && params.beta.is_zero() {
        params.beta = VectorCoefficient::Discrete(u.clone());
    }

    let mut symbolic: Option<SymbolicFactor> = None;
    for step in 1..=cfg.n_steps {
        if cfg.update_beta {
            params.beta = VectorCoefficient::Discrete(u.clone());
        }
        let mut f = u.clone();
        f.scale(params.sigma);
        params.f = VectorCoefficient::Discrete(f);
        warn_indicator(&params, &scenario.mesh);
        let sys = assemble(&params, &spaces, scenario.zero_mean)?;
        let lu = sys.factor(symbolic.as_ref(), &cfg.solver)?;
        let (x, report) = lu.solve(&sys.rhs)?;
        if symbolic.is_none() {
            symbolic = Some(lu.symbolic().clone());
        }
        let sol = Solution::from_vector(&spaces, &sys.offsets, &x, Some(report))?;
        let t = step as f64 * cfg.dt;
        let r = record(step, t, &sol.u, &sol.omega, &spaces.pressure, nu, report.residual)?;
        log::info!(
            "step {step} t={t:.4e} E={:.6e} P={:.6e} div={:.2e} ({:?}, residual {:.1e})",
            r.enstrophy.e,
            r.enstrophy.p,
            r.div_linf,
            report.backend,
            report.residual
        );
        observe(&r, &sol)?;
        out.push(r);
        u = sol.u;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_initial_state_stays_zero() {
        let sc = Scenario::zero(4, 0.1, 10.0).unwrap();
        for scheme in [Scheme::Mixed, Scheme::Dg] {
            let cfg = TimeLoopConfig::new(scheme, 0, 0.1, 1);
            let mut max = 0.0f64;
            run_transient(&sc, &cfg, |_, s| {
                for c in s.u.coeffs.iter().chain(&s.omega.coeffs).chain(&s.p.coeffs) {
                    max = max.max(c.abs());
                }
                Ok(())
            })
            .unwrap();
            assert!(max < 1e-12, "{scheme}: {max}");
        }
    }

    #[test]
    fn nonpositive_dt_is_rejected() {
        let sc = Scenario::zero(2, 0.1, 10.0).unwrap();
        let cfg = TimeLoopConfig::new(Scheme::Mixed, 0, 0.0, 1);
        assert!(run_transient(&sc, &cfg, |_, _| Ok(())).is_err());
    }
}
