use std::sync::Arc;

use super::FeSpace;
use crate::error::{OseenError, Result};
use crate::mesh::Point;

/// A coefficient vector together with the space it lives in.
#[derive(Clone, Debug)]
pub struct FeFunction {
    pub space: Arc<FeSpace>,
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(OseenError::DimensionMismatch {
                expected: space.n_dofs(),
                got: coeffs.len(),
            });
        }
        Ok(FeFunction { space, coeffs })
    }

    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.n_dofs();
        FeFunction {
            space,
            coeffs: vec![0.0; n],
        }
    }

    fn local(&self, cell: usize) -> Vec<f64> {
        self.space.cell_dofs(cell).iter().map(|&d| self.coeffs[d]).collect()
    }

    /// Values and gradients of a scalar function at reference points of a cell.
    pub fn scalar_at(&self, cell: usize, pts: &[Point]) -> (Vec<f64>, Vec<Point>) {
        let b = self.space.scalar_basis(cell, pts);
        let c = self.local(cell);
        let mut val = vec![0.0; pts.len()];
        let mut grad = vec![[0.0; 2]; pts.len()];
        for q in 0..pts.len() {
            for (i, ci) in c.iter().enumerate() {
                val[q] += ci * b.v(q, i);
                let g = b.g(q, i);
                grad[q][0] += ci * g[0];
                grad[q][1] += ci * g[1];
            }
        }
        (val, grad)
    }

    /// Values, divergence and scalar curl of a vector function at reference
    /// points of a cell.
    pub fn vector_at(&self, cell: usize, pts: &[Point]) -> (Vec<Point>, Vec<f64>, Vec<f64>) {
        let b = self.space.vector_basis(cell, pts);
        let c = self.local(cell);
        let mut val = vec![[0.0; 2]; pts.len()];
        let mut div = vec![0.0; pts.len()];
        let mut curl = vec![0.0; pts.len()];
        for q in 0..pts.len() {
            for (i, ci) in c.iter().enumerate() {
                let v = b.v(q, i);
                val[q][0] += ci * v[0];
                val[q][1] += ci * v[1];
                div[q] += ci * b.d(q, i);
                curl[q] += ci * b.c(q, i);
            }
        }
        (val, div, curl)
    }

    /// Value at a physical point (first containing cell).
    pub fn eval_scalar(&self, x: Point) -> Result<f64> {
        let (cell, xi) = self.space.mesh().locate(x).ok_or(OseenError::PointOutsideDomain(x))?;
        Ok(self.scalar_at(cell, &[xi]).0[0])
    }

    pub fn eval_vector(&self, x: Point) -> Result<Point> {
        let (cell, xi) = self.space.mesh().locate(x).ok_or(OseenError::PointOutsideDomain(x))?;
        Ok(self.vector_at(cell, &[xi]).0[0])
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }
}
