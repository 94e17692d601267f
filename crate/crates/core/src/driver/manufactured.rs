//! Exact solutions built from a stream function.
//!
//! With `u = curl ψ = (∂yψ, −∂xψ)` the velocity is solenoidal, the scaled
//! vorticity is `ω = √ν curl u = −√ν Δψ` and the load follows from the
//! momentum equation `σu + √ν curl ω + ν^{-1/2} ω×β + ∇p = f`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::coefficient::{BoundaryData, OseenParams, ScalarCoefficient, VectorCoefficient};
use crate::mesh::Point;

/// `d[a][b] = ∂x^a ∂y^b ψ` for `a + b ≤ 3`.
pub type StreamDerivatives = [[f64; 4]; 4];

/// A function of one variable with its first three derivatives.
pub type Factor = Arc<dyn Fn(f64) -> [f64; 4] + Send + Sync>;

type StreamFn = Arc<dyn Fn(Point) -> StreamDerivatives + Send + Sync>;
type PressureFn = Arc<dyn Fn(Point) -> (f64, Point) + Send + Sync>;

#[derive(Clone)]
pub struct Manufactured {
    pub nu: f64,
    psi: StreamFn,
    pressure: PressureFn,
}

impl fmt::Debug for Manufactured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Manufactured {{ nu: {} }}", self.nu)
    }
}

/// `ψ = Σ X_t(x) Y_t(y)`.
pub fn separable(terms: Vec<(Factor, Factor)>) -> impl Fn(Point) -> StreamDerivatives + Send + Sync {
    move |p| {
        let mut d = [[0.0; 4]; 4];
        for (fx, fy) in &terms {
            let (a, b) = (fx(p[0]), fy(p[1]));
            for i in 0..4 {
                for j in 0..4 - i {
                    d[i][j] += a[i] * b[j];
                }
            }
        }
        d
    }
}

/// `sin²(πt)`.
pub fn sin2(t: f64) -> [f64; 4] {
    let s = (PI * t).sin();
    let (s2, c2) = (2.0 * PI * t).sin_cos();
    [s * s, PI * s2, 2.0 * PI * PI * c2, -4.0 * PI.powi(3) * s2]
}

/// `sin³(πt) / (3π)`.
pub fn sin3_over_3pi(t: f64) -> [f64; 4] {
    let (s, c) = (PI * t).sin_cos();
    [
        s.powi(3) / (3.0 * PI),
        s * s * c,
        PI * (2.0 * s * c * c - s.powi(3)),
        PI * PI * (2.0 * c.powi(3) - 7.0 * s * s * c),
    ]
}

pub fn square(t: f64) -> [f64; 4] {
    [t * t, 2.0 * t, 2.0, 0.0]
}

/// `x⁴ − y⁴` and its gradient.
pub fn quartic_pressure(p: Point) -> (f64, Point) {
    let (x, y) = (p[0], p[1]);
    (x.powi(4) - y.powi(4), [4.0 * x.powi(3), -4.0 * y.powi(3)])
}

impl Manufactured {
    pub fn new(
        nu: f64,
        psi: impl Fn(Point) -> StreamDerivatives + Send + Sync + 'static,
        pressure: impl Fn(Point) -> (f64, Point) + Send + Sync + 'static,
    ) -> Self {
        Manufactured {
            nu,
            psi: Arc::new(psi),
            pressure: Arc::new(pressure),
        }
    }

    /// `u = (sin²πx sin²πy cosπy, −⅓ sin2πx sin³πy)`, `p = x⁴ − y⁴`.
    pub fn unit_square(nu: f64) -> Self {
        let terms: Vec<(Factor, Factor)> = vec![(Arc::new(sin2), Arc::new(sin3_over_3pi))];
        Self::new(nu, separable(terms), quartic_pressure)
    }

    /// `ψ = sin²(πx) y²`, `p = x⁴ − y⁴`: nonzero tangential velocity on `y = 1`.
    pub fn open_top(nu: f64) -> Self {
        let terms: Vec<(Factor, Factor)> = vec![(Arc::new(sin2), Arc::new(square))];
        Self::new(nu, separable(terms), quartic_pressure)
    }

    pub fn stream(&self, x: Point) -> StreamDerivatives {
        (self.psi)(x)
    }

    pub fn velocity(&self, x: Point) -> Point {
        let d = self.stream(x);
        [d[0][1], -d[1][0]]
    }

    /// `∇u` as `[[∂x u1, ∂y u1], [∂x u2, ∂y u2]]`.
    pub fn velocity_gradient(&self, x: Point) -> [[f64; 2]; 2] {
        let d = self.stream(x);
        [[d[1][1], d[0][2]], [-d[2][0], -d[1][1]]]
    }

    /// Scalar curl of the velocity, `−Δψ`.
    pub fn velocity_curl(&self, x: Point) -> f64 {
        let d = self.stream(x);
        -(d[2][0] + d[0][2])
    }

    pub fn vorticity(&self, x: Point) -> f64 {
        self.nu.sqrt() * self.velocity_curl(x)
    }

    pub fn vorticity_gradient(&self, x: Point) -> Point {
        let d = self.stream(x);
        let s = -self.nu.sqrt();
        [s * (d[3][0] + d[1][2]), s * (d[2][1] + d[0][3])]
    }

    pub fn pressure(&self, x: Point) -> f64 {
        (self.pressure)(x).0
    }

    pub fn pressure_gradient(&self, x: Point) -> Point {
        (self.pressure)(x).1
    }

    /// `σu + √ν curl ω + ν^{-1/2} ω(−β2, β1) + ∇p`.
    pub fn forcing(&self, x: Point, sigma: f64, beta: Point) -> Point {
        let u = self.velocity(x);
        let gw = self.vorticity_gradient(x);
        let w = self.vorticity(x);
        let gp = self.pressure_gradient(x);
        let (s, r) = (self.nu.sqrt(), 1.0 / self.nu.sqrt());
        [
            sigma * u[0] + s * gw[1] - r * w * beta[1] + gp[0],
            sigma * u[1] - s * gw[0] + r * w * beta[0] + gp[1],
        ]
    }

    /// Parameters with `β = u`, the matching load and boundary data taken
    /// from the exact solution on both Γ and Σ.
    pub fn params(&self, sigma: f64) -> OseenParams {
        let mut p = OseenParams::new(self.nu, sigma);
        let e = self.clone();
        p.beta = VectorCoefficient::analytic(move |x| e.velocity(x));
        let e = self.clone();
        p.f = VectorCoefficient::analytic(move |x| e.forcing(x, sigma, e.velocity(x)));
        self.set_boundary_data(&mut p);
        p
    }

    pub fn set_boundary_data(&self, p: &mut OseenParams) {
        let e = self.clone();
        p.gamma_normal = BoundaryData::normal_of(move |x| e.velocity(x));
        let e = self.clone();
        p.gamma_vorticity = ScalarCoefficient::analytic(move |x| e.vorticity(x));
        let e = self.clone();
        p.p_sigma = ScalarCoefficient::analytic(move |x| e.pressure(x));
        let e = self.clone();
        p.u_sigma = BoundaryData::tangential_of(move |x| e.velocity(x));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(Point) -> f64>(f: F, x: Point, dir: usize) -> f64 {
        let h = 1e-5;
        let mut a = x;
        let mut b = x;
        a[dir] += h;
        b[dir] -= h;
        (f(a) - f(b)) / (2.0 * h)
    }

    #[test]
    fn one_dimensional_factors_are_consistent() {
        for f in [sin2 as fn(f64) -> [f64; 4], sin3_over_3pi, square] {
            for &t in &[0.13, 0.5, 0.77] {
                let h = 1e-5;
                for d in 0..3 {
                    let num = (f(t + h)[d] - f(t - h)[d]) / (2.0 * h);
                    assert!((num - f(t)[d + 1]).abs() < 1e-6 * (1.0 + num.abs()), "d={d} t={t}");
                }
            }
        }
    }

    #[test]
    fn velocity_matches_closed_form_and_is_solenoidal() {
        let m = Manufactured::unit_square(0.1);
        for &x in &[[0.2, 0.3], [0.7, 0.45], [0.5, 0.9]] {
            let u = m.velocity(x);
            let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
            let u1 = sx * sx * sy * sy * (PI * x[1]).cos();
            let u2 = -(2.0 * PI * x[0]).sin() * sy.powi(3) / 3.0;
            assert!((u[0] - u1).abs() < 1e-14 && (u[1] - u2).abs() < 1e-14);
            let g = m.velocity_gradient(x);
            assert!((g[0][0] + g[1][1]).abs() < 1e-14);
            let div = fd(|p| m.velocity(p)[0], x, 0) + fd(|p| m.velocity(p)[1], x, 1);
            assert!(div.abs() < 1e-8);
        }
    }

    #[test]
    fn vorticity_and_its_gradient() {
        let m = Manufactured::open_top(0.3);
        for &x in &[[0.2, 0.3], [0.6, 0.85]] {
            let curl = fd(|p| m.velocity(p)[1], x, 0) - fd(|p| m.velocity(p)[0], x, 1);
            assert!((m.vorticity(x) - 0.3f64.sqrt() * curl).abs() < 1e-8);
            let g = m.vorticity_gradient(x);
            assert!((g[0] - fd(|p| m.vorticity(p), x, 0)).abs() < 1e-7);
            assert!((g[1] - fd(|p| m.vorticity(p), x, 1)).abs() < 1e-7);
        }
    }
}
