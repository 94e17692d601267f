//! Problem data: coefficients, boundary data and scheme parameters.

use std::fmt;
use std::sync::Arc;

use crate::error::{OseenError, Result};
use crate::fespace::{FeFunction, Quadrature};
use crate::mesh::{Mesh, Point};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
/// Boundary datum as a function of position and outward unit normal.
pub type BoundaryFn = Arc<dyn Fn(Point, Point) -> f64 + Send + Sync>;

/// Borrowed analytic field, used for projections.
#[derive(Clone, Copy)]
pub enum Field<'a> {
    Scalar(&'a dyn Fn(Point) -> f64),
    Vector(&'a dyn Fn(Point) -> Point),
}

#[derive(Clone, Default)]
pub enum ScalarCoefficient {
    #[default]
    Zero,
    Constant(f64),
    Analytic(ScalarFn),
    Discrete(FeFunction),
}

#[derive(Clone, Default)]
pub enum VectorCoefficient {
    #[default]
    Zero,
    Constant(Point),
    Analytic(VectorFn),
    Discrete(FeFunction),
}

#[derive(Clone, Default)]
pub enum BoundaryData {
    #[default]
    Zero,
    Analytic(BoundaryFn),
}

impl fmt::Debug for ScalarCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Analytic(_) => write!(f, "Analytic"),
            Self::Discrete(u) => write!(f, "Discrete({:?}, {} dofs)", u.space.kind(), u.coeffs.len()),
        }
    }
}

impl fmt::Debug for VectorCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(c) => write!(f, "Constant({c:?})"),
            Self::Analytic(_) => write!(f, "Analytic"),
            Self::Discrete(u) => write!(f, "Discrete({:?}, {} dofs)", u.space.kind(), u.coeffs.len()),
        }
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Analytic(_) => write!(f, "Analytic"),
        }
    }
}

fn same_mesh(u: &FeFunction, mesh: &Mesh) -> bool {
    std::ptr::eq(&**u.space.mesh(), mesh)
}

impl ScalarCoefficient {
    pub fn analytic(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self::Analytic(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero) || matches!(self, Self::Constant(c) if *c == 0.0)
    }

    /// Values at reference points `pts` of `cell`.
    pub fn values(&self, mesh: &Mesh, cell: usize, pts: &[Point]) -> Vec<f64> {
        match self {
            Self::Zero => vec![0.0; pts.len()],
            Self::Constant(c) => vec![*c; pts.len()],
            Self::Analytic(f) => {
                let g = mesh.geometry(cell);
                pts.iter().map(|p| f(g.map(*p))).collect()
            }
            Self::Discrete(u) if same_mesh(u, mesh) => u.scalar_at(cell, pts).0,
            Self::Discrete(u) => {
                let g = mesh.geometry(cell);
                pts.iter().map(|p| u.eval_scalar(g.map(*p)).unwrap_or(0.0)).collect()
            }
        }
    }

    pub fn at(&self, x: Point) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::Analytic(f) => f(x),
            Self::Discrete(u) => u.eval_scalar(x).unwrap_or(0.0),
        }
    }
}

impl VectorCoefficient {
    pub fn analytic(f: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        Self::Analytic(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero) || matches!(self, Self::Constant(c) if *c == [0.0, 0.0])
    }

    pub fn values(&self, mesh: &Mesh, cell: usize, pts: &[Point]) -> Vec<Point> {
        match self {
            Self::Zero => vec![[0.0; 2]; pts.len()],
            Self::Constant(c) => vec![*c; pts.len()],
            Self::Analytic(f) => {
                let g = mesh.geometry(cell);
                pts.iter().map(|p| f(g.map(*p))).collect()
            }
            Self::Discrete(u) if same_mesh(u, mesh) => u.vector_at(cell, pts).0,
            Self::Discrete(u) => {
                let g = mesh.geometry(cell);
                pts.iter().map(|p| u.eval_vector(g.map(*p)).unwrap_or([0.0; 2])).collect()
            }
        }
    }

    pub fn at(&self, x: Point) -> Point {
        match self {
            Self::Zero => [0.0; 2],
            Self::Constant(c) => *c,
            Self::Analytic(f) => f(x),
            Self::Discrete(u) => u.eval_vector(x).unwrap_or([0.0; 2]),
        }
    }

    /// Max of |β| over the quadrature points of degree `qdeg` in every cell.
    pub fn sup_norm(&self, mesh: &Mesh, qdeg: usize) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let q = Quadrature::triangle(qdeg);
        let mut pts = q.points.clone();
        pts.extend([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        (0..mesh.n_cells())
            .flat_map(|c| self.values(mesh, c, &pts))
            .map(|b| b[0].hypot(b[1]))
            .fold(0.0, f64::max)
    }
}

impl BoundaryData {
    pub fn analytic(f: impl Fn(Point, Point) -> f64 + Send + Sync + 'static) -> Self {
        Self::Analytic(Arc::new(f))
    }

    /// Normal component `g·n` of a vector field.
    pub fn normal_of(g: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        Self::analytic(move |x, n| {
            let v = g(x);
            v[0] * n[0] + v[1] * n[1]
        })
    }

    /// Tangential component `g×n = g1 n2 − g2 n1` of a vector field.
    pub fn tangential_of(g: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        Self::analytic(move |x, n| {
            let v = g(x);
            v[0] * n[1] - v[1] * n[0]
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn at(&self, x: Point, n: Point) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Analytic(f) => f(x, n),
        }
    }
}

/// Facet penalty constants of the DG scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stabilisation {
    pub c11: f64,
    pub a11: f64,
    pub d11: f64,
}

/// Coefficients and data of one Oseen problem.
///
/// `gamma_normal` and `gamma_vorticity` are the values of `u·n` and `ω` on
/// Γ; `p_sigma` and `u_sigma` (`u×n`) are the data on Σ.
#[derive(Clone, Debug)]
pub struct OseenParams {
    pub nu: f64,
    pub sigma: f64,
    pub beta: VectorCoefficient,
    pub f: VectorCoefficient,
    pub p_sigma: ScalarCoefficient,
    pub u_sigma: BoundaryData,
    pub gamma_normal: BoundaryData,
    pub gamma_vorticity: ScalarCoefficient,
    pub stab: Stabilisation,
}

impl OseenParams {
    /// Zero data, `c11 = a11 = σ` and `d11 = ν`.
    pub fn new(nu: f64, sigma: f64) -> Self {
        OseenParams {
            nu,
            sigma,
            beta: VectorCoefficient::Zero,
            f: VectorCoefficient::Zero,
            p_sigma: ScalarCoefficient::Zero,
            u_sigma: BoundaryData::Zero,
            gamma_normal: BoundaryData::Zero,
            gamma_vorticity: ScalarCoefficient::Zero,
            stab: Stabilisation {
                c11: sigma,
                a11: sigma,
                d11: nu,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(OseenError::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(OseenError::Config(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn validate_stabilisation(&self) -> Result<()> {
        let s = self.stab;
        for (name, v) in [("c11", s.c11), ("a11", s.a11), ("d11", s.d11)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(OseenError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn has_sigma_data(&self) -> bool {
        !self.p_sigma.is_zero() || !self.u_sigma.is_zero()
    }

    /// `2‖β‖²∞ / (νσ)`; the schemes are coercive when this is below one.
    pub fn solvability_indicator(&self, mesh: &Mesh) -> f64 {
        let b = self.beta.sup_norm(mesh, 6);
        if b == 0.0 {
            return 0.0;
        }
        2.0 * b * b / (self.nu * self.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, Rect};

    #[test]
    fn defaults_follow_sigma_and_nu() {
        let p = OseenParams::new(0.1, 10.0);
        assert_eq!(p.stab, Stabilisation { c11: 10.0, a11: 10.0, d11: 0.1 });
        assert!(p.validate().is_ok());
        assert!(OseenParams::new(0.0, 1.0).validate().is_err());
    }

    #[test]
    fn indicator_for_constant_beta() {
        let m = generate_structured(2, 2, Rect::unit()).unwrap();
        let mut p = OseenParams::new(0.5, 4.0);
        p.beta = VectorCoefficient::Constant([0.6, 0.8]);
        assert!((p.solvability_indicator(&m) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_components() {
        let g = BoundaryData::normal_of(|x| [x[0], 2.0]);
        assert_eq!(g.at([3.0, 0.0], [0.0, -1.0]), -2.0);
        let t = BoundaryData::tangential_of(|_| [1.0, 0.0]);
        assert_eq!(t.at([0.0, 0.0], [0.0, 1.0]), 1.0);
    }
}
