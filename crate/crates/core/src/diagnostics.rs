//! Error norms, convergence rates and flow diagnostics.

use crate::assembly::{cross, dot, facet_points, collect_ordered};
use crate::coefficient::OseenParams;
use crate::dg::facet_penalties;
use crate::driver::Manufactured;
use crate::error::{OseenError, Result};
use crate::fespace::{project_l2_by_cell, FacetQuadrature, FeFunction, FeSpace, Quadrature, SpaceKind, Values};
use crate::mesh::{FacetKind, Point};
use crate::system::{Scheme, Solution};

/// Quadrature degree used for errors against an exact solution.
pub fn error_quadrature_degree(space: &FeSpace) -> usize {
    2 * space.polynomial_degree() + 4
}

/// Discrete errors of one solve against an exact solution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    pub h: f64,
    pub dofs: usize,
    /// `‖u − u_h‖_{L²}`.
    pub u_l2: f64,
    /// `(‖u − u_h‖² + ‖div_h(u − u_h)‖²)^{1/2}`.
    pub u_div: f64,
    /// `‖ω − ω_h‖_{L²}`.
    pub w_l2: f64,
    /// `(‖ω − ω_h‖² + ν‖curl_h(ω − ω_h)‖²)^{1/2}`.
    pub w_z: f64,
    pub p_l2: f64,
    /// Energy seminorm of the stabilised scheme (zero for the mixed scheme).
    pub a_seminorm: f64,
    pub div_linf: f64,
}

fn sum_cells<F: Fn(usize) -> [f64; 5] + Sync>(n: usize, f: F) -> [f64; 5] {
    let parts = collect_ordered(n, |c, out: &mut Vec<[f64; 5]>| out.push(f(c)));
    parts.iter().fold([0.0; 5], |mut a, p| {
        for i in 0..5 {
            a[i] += p[i];
        }
        a
    })
}

/// Computes all norms of [`ErrorNorms`] for `sol` against `exact`.
///
/// `params` supplies `σ` and the stabilisation constants for the DG
/// seminorm.
pub fn error_norms(sol: &Solution, exact: &Manufactured, params: &OseenParams) -> Result<ErrorNorms> {
    let space = &sol.u.space;
    let mesh = space.mesh().clone();
    let q = Quadrature::triangle(error_quadrature_degree(space));
    let nu = exact.nu;
    let cells = sum_cells(mesh.n_cells(), |c| {
        let geo = mesh.geometry(c);
        let (u, div, _) = sol.u.vector_at(c, &q.points);
        let (w, gw) = sol.omega.scalar_at(c, &q.points);
        let (p, _) = sol.p.scalar_at(c, &q.points);
        let mut acc = [0.0; 5];
        for (i, wt) in q.weights.iter().enumerate() {
            let wt = wt * geo.det.abs();
            let x = geo.map(q.points[i]);
            let ue = exact.velocity(x);
            let we = exact.vorticity(x);
            let ge = exact.vorticity_gradient(x);
            let pe = exact.pressure(x);
            acc[0] += wt * ((ue[0] - u[i][0]).powi(2) + (ue[1] - u[i][1]).powi(2));
            acc[1] += wt * div[i].powi(2);
            acc[2] += wt * (we - w[i]).powi(2);
            acc[3] += wt * ((ge[0] - gw[i][0]).powi(2) + (ge[1] - gw[i][1]).powi(2));
            acc[4] += wt * (pe - p[i]).powi(2);
        }
        acc
    });
    let mut a2 = params.sigma * cells[0] + cells[2];
    if sol.scheme == Scheme::Dg {
        a2 += jump_seminorms(sol, params, Some(exact));
    }
    Ok(ErrorNorms {
        h: mesh.mesh_size(),
        dofs: sol.n_dofs(),
        u_l2: cells[0].sqrt(),
        u_div: (cells[0] + cells[1]).sqrt(),
        w_l2: cells[2].sqrt(),
        w_z: (cells[2] + nu * cells[3]).sqrt(),
        p_l2: cells[4].sqrt(),
        a_seminorm: if sol.scheme == Scheme::Dg { a2.sqrt() } else { 0.0 },
        div_linf: divergence_linf(&sol.u, &sol.p.space)?,
    })
}

/// `|e_u|_J² + |e_p|_E²` for the error against `exact`, or for the discrete
/// solution itself when `exact` is `None`.
pub fn jump_seminorms(sol: &Solution, params: &OseenParams, exact: Option<&Manufactured>) -> f64 {
    let space = &sol.u.space;
    let mesh = space.mesh();
    let fq = FacetQuadrature::exact_for(error_quadrature_degree(space));
    let s = params.nu.sqrt();
    let parts = collect_ordered(mesh.links().len(), |li, out: &mut Vec<f64>| {
        let link = &mesh.links()[li];
        let (c11, a11, d11) = facet_penalties(mesh, link, &params.stab);
        let fp = facet_points(mesh, link, &fq);
        let (up, _, _) = sol.u.vector_at(link.plus.cell, &fp.plus);
        let (pp, _) = sol.p.scalar_at(link.plus.cell, &fp.plus);
        let (um, pm) = match (link.minus, &fp.minus) {
            (Some(m), Some(pts)) => (sol.u.vector_at(m.cell, pts).0, sol.p.scalar_at(m.cell, pts).0),
            _ => (vec![[0.0; 2]; fp.w.len()], vec![0.0; fp.w.len()]),
        };
        let boundary = link.minus.is_none();
        let n = link.normal;
        let mut acc = 0.0;
        for (i, w) in fp.w.iter().enumerate() {
            let mut du = [up[i][0] - um[i][0], up[i][1] - um[i][1]];
            let mut dp = pp[i] - pm[i];
            if let Some(e) = exact {
                if boundary {
                    let ue = e.velocity(fp.x[i]);
                    du = [ue[0] - du[0], ue[1] - du[1]];
                    dp = e.pressure(fp.x[i]) - dp;
                } else {
                    du = [-du[0], -du[1]];
                    dp = -dp;
                }
            }
            if link.kind != FacetKind::Gamma {
                acc += w * (s * c11 * cross(du, n).powi(2) + d11 * dp * dp);
            }
            if link.kind != FacetKind::Sigma {
                acc += w * a11 * dot(du, n).powi(2);
            }
        }
        out.push(acc);
    });
    parts.iter().sum()
}

/// Largest coefficient of the `L²` projection of `div_h u_h` onto the
/// discontinuous space `qs`.
pub fn divergence_linf(u: &FeFunction, qs: &FeSpace) -> Result<f64> {
    if qs.kind() != SpaceKind::Discontinuous {
        return Err(OseenError::InconsistentSpaces("divergence is projected onto a discontinuous space".into()));
    }
    let deg = 2 * u.space.polynomial_degree() + 2;
    let c = project_l2_by_cell(qs, deg, |cell, pts| Values::Scalar(u.vector_at(cell, pts).1))?;
    Ok(c.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

/// Observed rates `log(e_{i−1}/e_i) / log(h_{i−1}/h_i)`; the first entry is
/// `None`.
pub fn fit_rates(h: &[f64], errors: &[f64]) -> Result<Vec<Option<f64>>> {
    if h.len() != errors.len() {
        return Err(OseenError::DimensionMismatch {
            expected: h.len(),
            got: errors.len(),
        });
    }
    if let Some(&e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(OseenError::DegenerateError(e));
    }
    let mut out = vec![None];
    for i in 1..errors.len() {
        out.push(Some((errors[i - 1] / errors[i]).ln() / (h[i - 1] / h[i]).ln()));
    }
    Ok(out)
}

/// Enstrophy-type quantities of a vorticity field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Enstrophy {
    /// `(1/2ν) ‖ω_h‖²`.
    pub e: f64,
    /// `(1/2ν) ‖∇_h ω_h‖²`.
    pub p: f64,
    /// The same with the physical vorticity `ω_h / √ν`.
    pub e_phys: f64,
    pub p_phys: f64,
}

pub fn enstrophy_palinstrophy(omega: &FeFunction, nu: f64) -> Enstrophy {
    let mesh = omega.space.mesh();
    let q = Quadrature::triangle(2 * omega.space.polynomial_degree() + 2);
    let s = sum_cells(mesh.n_cells(), |c| {
        let det = mesh.geometry(c).det.abs();
        let (w, g) = omega.scalar_at(c, &q.points);
        let mut acc = [0.0; 5];
        for (i, wt) in q.weights.iter().enumerate() {
            acc[0] += wt * det * w[i] * w[i];
            acc[1] += wt * det * (g[i][0] * g[i][0] + g[i][1] * g[i][1]);
        }
        acc
    });
    let e = s[0] / (2.0 * nu);
    let p = s[1] / (2.0 * nu);
    Enstrophy {
        e,
        p,
        e_phys: e / nu,
        p_phys: p / nu,
    }
}

/// `(1/2ν) ∫ ω²` for an analytic scalar vorticity, by fine quadrature.
pub fn analytic_enstrophy<F: Fn(Point) -> f64 + Sync>(mesh: &crate::mesh::Mesh, nu: f64, w: F, degree: usize) -> f64 {
    let q = Quadrature::triangle(degree);
    let s = sum_cells(mesh.n_cells(), |c| {
        let geo = mesh.geometry(c);
        let mut acc = [0.0; 5];
        for (i, wt) in q.weights.iter().enumerate() {
            acc[0] += wt * geo.det.abs() * w(geo.map(q.points[i])).powi(2);
        }
        acc
    });
    s[0] / (2.0 * nu)
}

/// One sample of a line profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileSample {
    pub x: Point,
    pub u: Point,
    pub omega: f64,
    pub p: f64,
}

/// Samples the solution at `n ≥ 2` equispaced points from `a` to `b`.
pub fn line_profile(sol: &Solution, a: Point, b: Point, n: usize) -> Result<Vec<ProfileSample>> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            Ok(ProfileSample {
                x,
                u: sol.u.eval_vector(x)?,
                omega: sol.omega.eval_scalar(x)?,
                p: sol.p.eval_scalar(x)?,
            })
        })
        .collect()
}

/// Profiles along the vertical line `x = x_mid` and horizontal line `y = y_mid`
/// of the rectangle `[x0, x1] × [y0, y1]`.
pub fn midline_profiles(sol: &Solution, rect: crate::mesh::Rect, n: usize) -> Result<(Vec<ProfileSample>, Vec<ProfileSample>)> {
    let xm = 0.5 * (rect.x0 + rect.x1);
    let ym = 0.5 * (rect.y0 + rect.y1);
    Ok((
        line_profile(sol, [xm, rect.y0], [xm, rect.y1], n)?,
        line_profile(sol, [rect.x0, ym], [rect.x1, ym], n)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_of_exact_powers() {
        let h = [0.5, 0.25, 0.125];
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
        let r = fit_rates(&h, &e).unwrap();
        assert!(r[0].is_none());
        assert!((r[1].unwrap() - 2.0).abs() < 1e-12 && (r[2].unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rates_reject_zero_error() {
        assert!(matches!(fit_rates(&[1.0, 0.5], &[1.0, 0.0]), Err(OseenError::DegenerateError(_))));
    }
}
