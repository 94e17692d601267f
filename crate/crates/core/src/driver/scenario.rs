//! Named problem set-ups: mesh, data and (where known) the exact solution.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::manufactured::Manufactured;
use crate::coefficient::{BoundaryData, OseenParams, ScalarCoefficient, ScalarFn, VectorFn};
use crate::error::{OseenError, Result};
use crate::mesh::{generate_masked, generate_structured, Diagonal, Mesh, Point, Rect};

/// A steady or transient problem.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub mesh: Arc<Mesh>,
    pub params: OseenParams,
    pub exact: Option<Manufactured>,
    /// Close the pressure with `∫ p = 0` (needed when Σ is empty).
    pub zero_mean: bool,
    pub initial_velocity: Option<VectorFn>,
    /// Scalar curl of the initial velocity, when known in closed form.
    pub initial_curl: Option<ScalarFn>,
    /// Bounding box, used for line profiles.
    pub bounds: Rect,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("cells", &self.mesh.n_cells())
            .field("zero_mean", &self.zero_mean)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

fn exact_params(exact: &Manufactured, sigma: f64, mesh: &Mesh) -> OseenParams {
    let mut p = exact.params(sigma);
    if !mesh.has_sigma() {
        p.p_sigma = ScalarCoefficient::Zero;
        p.u_sigma = BoundaryData::Zero;
    }
    p
}

/// Names accepted by [`Scenario::by_name`].
pub const SCENARIOS: [&str; 5] = ["manufactured", "open-top", "zero", "open-cavity", "kh"];

/// Unit square `n × n` with every boundary facet on Γ.
pub fn unit_square_gamma(n: usize) -> Result<Mesh> {
    generate_structured(n, n, Rect::unit())?.tag_boundary(|_| true, |_| false, None)
}

impl Scenario {
    /// Smooth solution on the unit square with Γ = ∂Ω and `β = u`.
    pub fn manufactured(n: usize, nu: f64, sigma: f64) -> Result<Self> {
        Self::manufactured_on(unit_square_gamma(n)?, nu, sigma)
    }

    /// The same data on a user-supplied tagged mesh of the unit square.
    pub fn manufactured_on(mesh: Mesh, nu: f64, sigma: f64) -> Result<Self> {
        let exact = Manufactured::unit_square(nu);
        let zero_mean = !mesh.has_sigma();
        Ok(Scenario {
            name: "manufactured".into(),
            params: exact_params(&exact, sigma, &mesh),
            mesh: Arc::new(mesh),
            exact: Some(exact),
            zero_mean,
            initial_velocity: None,
            initial_curl: None,
            bounds: Rect::unit(),
        })
    }

    /// Smooth solution with Σ on the top side and Γ elsewhere.
    pub fn open_top(n: usize, nu: f64, sigma: f64) -> Result<Self> {
        let exact = Manufactured::open_top(nu);
        let mesh = generate_structured(n, n, Rect::unit())?.tag_boundary(|x| x[1] < 1.0 - 1e-12, |_| true, None)?;
        Ok(Scenario {
            name: "open-top".into(),
            params: exact_params(&exact, sigma, &mesh),
            mesh: Arc::new(mesh),
            exact: Some(exact),
            zero_mean: false,
            initial_velocity: None,
            initial_curl: None,
            bounds: Rect::unit(),
        })
    }

    /// Homogeneous data and `β = (1, 0)` scaled to keep the indicator at 1/2.
    pub fn zero(n: usize, nu: f64, sigma: f64) -> Result<Self> {
        let mut params = OseenParams::new(nu, sigma);
        let b = (nu * sigma / 4.0).sqrt();
        params.beta = crate::coefficient::VectorCoefficient::Constant([b, 0.0]);
        Ok(Scenario {
            name: "zero".into(),
            mesh: Arc::new(unit_square_gamma(n)?),
            params,
            exact: None,
            zero_mean: true,
            initial_velocity: Some(Arc::new(|_| [0.0, 0.0])),
            initial_curl: None,
            bounds: Rect::unit(),
        })
    }

    /// Open cavity: box `(0, 1.2) × (0, 1)` with an inlet channel below and an
    /// outlet channel on the right, meshed by a masked grid of spacing `h`.
    /// Time stepping uses `σ = 1/dt`.
    pub fn open_cavity(h: f64, nu: f64, dt: f64) -> Result<Self> {
        let rect = Rect::new(0.0, 1.3, -0.1, 1.0);
        let nx = (1.3 / h).round() as usize;
        let ny = (1.1 / h).round() as usize;
        let keep = |c: Point| {
            let main = c[0] < 1.2 && c[1] > 0.0;
            let inlet = c[1] < 0.0 && c[0] > 0.25 && c[0] < 0.45;
            let outlet = c[0] > 1.2 && c[1] > 0.7 && c[1] < 0.9;
            main || inlet || outlet
        };
        let mesh = generate_masked(nx, ny, rect, Diagonal::Right, keep)?.tag_boundary(|_| true, |_| false, None)?;
        let sigma = 1.0 / dt;
        let mut params = OseenParams::new(nu, sigma);
        let s = nu.sqrt();
        params.gamma_normal = BoundaryData::analytic(|x, _| cavity_normal_velocity(x));
        params.gamma_vorticity = ScalarCoefficient::analytic(move |x| s * cavity_vorticity(x));
        Ok(Scenario {
            name: "open-cavity".into(),
            mesh: Arc::new(mesh),
            params,
            exact: None,
            zero_mean: true,
            initial_velocity: Some(Arc::new(cavity_initial_velocity)),
            initial_curl: Some(Arc::new(cavity_initial_curl)),
            bounds: rect,
        })
    }

    /// Double shear layer on the unit square, periodic in `x`, with slip
    /// walls at `y = 0, 1`.
    pub fn kelvin_helmholtz(n: usize, kh: KhParams) -> Result<Self> {
        let mesh = generate_structured(n, n, Rect::unit())?.tag_boundary(|_| true, |_| false, Some([1.0, 0.0]))?;
        let nu = kh.nu();
        let sigma = 1.0 / kh.dt();
        let mut params = OseenParams::new(nu, sigma);
        params.stab.d11 = nu;
        Ok(Scenario {
            name: "kh".into(),
            mesh: Arc::new(mesh),
            params,
            exact: None,
            zero_mean: true,
            initial_velocity: Some(Arc::new(move |x| kh.velocity(x))),
            initial_curl: Some(Arc::new(move |x| kh.curl(x))),
            bounds: Rect::unit(),
        })
    }

    /// Builds a scenario from its name; `n` is the number of cells per side
    /// of the unit square (ignored by `open-cavity`, which uses spacing 0.05).
    pub fn by_name(name: &str, n: usize, nu: Option<f64>, sigma: Option<f64>) -> Result<Self> {
        match name {
            "manufactured" => Self::manufactured(n, nu.unwrap_or(0.1), sigma.unwrap_or(10.0)),
            "open-top" => Self::open_top(n, nu.unwrap_or(0.1), sigma.unwrap_or(10.0)),
            "zero" => Self::zero(n, nu.unwrap_or(0.1), sigma.unwrap_or(10.0)),
            "open-cavity" => Self::open_cavity(0.05, nu.unwrap_or(0.001), 1.0 / sigma.unwrap_or(10.0)),
            "kh" => {
                let mut kh = KhParams::default();
                if let Some(nu) = nu {
                    kh.re = kh.delta0 * kh.u_inf / nu;
                }
                Self::kelvin_helmholtz(n, kh)
            }
            other => Err(OseenError::Config(format!(
                "unknown scenario '{other}' (expected one of {})",
                SCENARIOS.join(", ")
            ))),
        }
    }

    pub fn is_transient(&self) -> bool {
        self.initial_velocity.is_some() && self.exact.is_none()
    }

    /// Rebuilds the exact-solution data for a new `σ` (after a `--sigma`
    /// override, say).
    pub fn set_sigma(&mut self, sigma: f64) {
        let stab = self.params.stab;
        let follow = stab.c11 == self.params.sigma && stab.a11 == self.params.sigma;
        if let Some(e) = &self.exact {
            let beta = self.params.beta.clone();
            self.params = OseenParams { stab, beta, ..exact_params(e, sigma, &self.mesh) };
        } else {
            self.params.sigma = sigma;
        }
        if follow {
            self.params.stab.c11 = sigma;
            self.params.stab.a11 = sigma;
        }
    }
}

fn cavity_normal_velocity(x: Point) -> f64 {
    if x[1] < -0.1 + 1e-9 && x[0] > 0.25 && x[0] < 0.45 {
        -75.0 * (x[0] - 0.25) * (0.45 - x[0])
    } else if x[0] > 1.3 - 1e-9 && x[1] > 0.7 && x[1] < 0.9 {
        75.0 * (x[1] - 0.7) * (0.9 - x[1])
    } else {
        0.0
    }
}

/// Physical vorticity of the inlet and outlet profiles.
fn cavity_vorticity(x: Point) -> f64 {
    if x[1] < -0.1 + 1e-9 && x[0] >= 0.25 && x[0] <= 0.45 {
        75.0 * (0.7 - 2.0 * x[0])
    } else if x[0] > 1.3 - 1e-9 && x[1] >= 0.7 && x[1] <= 0.9 {
        -75.0 * (1.6 - 2.0 * x[1])
    } else {
        0.0
    }
}

/// Shifted smooth field used as the open-cavity initial velocity.
pub fn cavity_initial_velocity(x: Point) -> Point {
    let a = PI * x[0] / 1.3;
    let b = PI * (x[1] + 0.1) / 1.1;
    [
        a.sin().powi(2) * b.sin().powi(2) * b.cos(),
        -(2.0 * a).sin() * b.sin().powi(3) / 3.0,
    ]
}

/// Scalar curl of [`cavity_initial_velocity`].
pub fn cavity_initial_curl(x: Point) -> f64 {
    let (ka, kb) = (PI / 1.3, PI / 1.1);
    let a = ka * x[0];
    let b = kb * (x[1] + 0.1);
    let (sb, cb) = b.sin_cos();
    let dx_u2 = -2.0 * ka * (2.0 * a).cos() * sb.powi(3) / 3.0;
    let dy_u1 = a.sin().powi(2) * kb * (2.0 * sb * cb * cb - sb.powi(3));
    dx_u2 - dy_u1
}

/// Parameters of the double shear layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KhParams {
    pub c_n: f64,
    pub u_inf: f64,
    pub w_a: f64,
    pub w_b: f64,
    pub delta0: f64,
    pub re: f64,
}

impl Default for KhParams {
    fn default() -> Self {
        KhParams {
            c_n: 1e-3,
            u_inf: 1.0,
            w_a: 8.0 * PI,
            w_b: 20.0 * PI,
            delta0: 1.0 / 28.0,
            re: 1e4,
        }
    }
}

impl KhParams {
    pub fn nu(&self) -> f64 {
        self.delta0 * self.u_inf / self.re
    }

    /// Characteristic time `δ0 / u∞`.
    pub fn t_bar(&self) -> f64 {
        self.delta0 / self.u_inf
    }

    pub fn dt(&self) -> f64 {
        self.t_bar() / 20.0
    }

    pub fn velocity(&self, x: Point) -> Point {
        kh_initial_velocity(self, x)
    }

    /// Scalar curl of the initial velocity.
    pub fn curl(&self, x: Point) -> f64 {
        let (d, u, c) = (self.delta0, self.u_inf, self.c_n);
        let eta = (2.0 * x[1] - 1.0) / d;
        let e = (-(x[1] - 0.5).powi(2) / (d * d)).exp();
        let (ca, cb) = ((self.w_a * x[0]).cos(), (self.w_b * x[0]).cos());
        let sech2 = 1.0 / eta.cosh().powi(2);
        c * u * e * (self.w_a.powi(2) * ca + self.w_b.powi(2) * cb) - 2.0 * u / d * sech2
            + c * u * (ca + cb) * e / (d * d) * (2.0 - (2.0 * x[1] - 1.0).powi(2) / (d * d))
    }
}

/// Initial velocity of the shear-layer test, evaluated as written.
pub fn kh_initial_velocity(p: &KhParams, x: Point) -> Point {
    let (d, u, c) = (p.delta0, p.u_inf, p.c_n);
    let g = (-(x[1] - 0.5).powi(2) / (d * d)).exp();
    let u1 = u * ((2.0 * x[1] - 1.0) / d).tanh()
        - c * u * ((p.w_a * x[0]).cos() + (p.w_b * x[0]).cos()) * (2.0 * x[1] - 1.0) / (d * d) * g;
    let u2 = c * u * g * (p.w_a * (p.w_a * x[0]).sin() + p.w_b * (p.w_b * x[0]).sin());
    [u1, u2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kh_centreline_and_far_field() {
        let p = KhParams::default();
        assert_eq!(kh_initial_velocity(&p, [0.0, 0.5]), [0.0, 0.0]);
        let u = kh_initial_velocity(&p, [0.3, 1.0]);
        assert!((u[0] - 28f64.tanh()).abs() < 1e-12);
        assert!((p.nu() - 1.0 / 280000.0).abs() < 1e-18);
        assert!((p.dt() * 560.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kh_curl_matches_finite_differences() {
        let p = KhParams::default();
        let h = 1e-6;
        for &x in &[[0.1, 0.47], [0.33, 0.52], [0.8, 0.5]] {
            let dv = (p.velocity([x[0] + h, x[1]])[1] - p.velocity([x[0] - h, x[1]])[1]) / (2.0 * h);
            let du = (p.velocity([x[0], x[1] + h])[0] - p.velocity([x[0], x[1] - h])[0]) / (2.0 * h);
            let c = p.curl(x);
            assert!((c - (dv - du)).abs() < 1e-5 * c.abs().max(1.0), "{c} vs {}", dv - du);
        }
    }

    #[test]
    fn cavity_curl_matches_finite_differences() {
        let h = 1e-6;
        for &x in &[[0.2, 0.3], [0.9, 0.75], [0.65, 0.1]] {
            let u = cavity_initial_velocity;
            let dv = (u([x[0] + h, x[1]])[1] - u([x[0] - h, x[1]])[1]) / (2.0 * h);
            let du = (u([x[0], x[1] + h])[0] - u([x[0], x[1] - h])[0]) / (2.0 * h);
            assert!((cavity_initial_curl(x) - (dv - du)).abs() < 1e-7);
        }
    }

    #[test]
    fn cavity_mesh_and_flux_balance() {
        let s = Scenario::open_cavity(0.05, 1e-3, 0.1).unwrap();
        let main = 24 * 20;
        assert_eq!(s.mesh.n_cells(), 2 * (main + 4 * 2 + 2 * 4));
        let q = crate::fespace::FacetQuadrature::exact_for(4);
        let mut flux = 0.0;
        for l in s.mesh.links().iter().filter(|l| l.minus.is_none()) {
            let a = s.mesh.facet_midpoint(l.facet);
            for (t, w) in q.points.iter().zip(&q.weights) {
                let g = s.mesh.geometry(l.plus.cell).map(l.plus.reference_point(*t));
                let _ = a;
                flux += w * l.length * cavity_normal_velocity(g);
            }
        }
        assert!(flux.abs() < 1e-12, "net flux {flux}");
    }
}
