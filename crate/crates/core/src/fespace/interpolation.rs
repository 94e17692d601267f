use faer::Mat;

use super::quadrature::{shifted_legendre, FacetQuadrature, Quadrature};
use super::reference::monomials;
use super::{FeSpace, SpaceKind};
use crate::error::{OseenError, Result};
use crate::linalg::{lu_factor, SolverOptions, TripletBuilder};
use crate::mesh::Point;

/// Field values at the quadrature points of one cell.
#[derive(Clone, Debug)]
pub enum Values {
    Scalar(Vec<f64>),
    Vector(Vec<Point>),
}

/// Canonical Raviart–Thomas interpolant `Π_h v`.
///
/// Facet DoFs are the moments of `v·n` against shifted Legendre polynomials
/// in the facet parameter; interior DoFs are moments of the inverse Piola
/// transform of `v` against `P_{k-1}` monomials.
pub fn interpolate_rt<F: Fn(Point) -> Point>(space: &FeSpace, v: F) -> Vec<f64> {
    assert_eq!(space.kind(), SpaceKind::RaviartThomas);
    let k = space.degree();
    let mesh = space.mesh();
    let nf = k + 1;
    let fq = FacetQuadrature::with_points(k + 6);
    let tq = Quadrature::triangle(2 * k + 8);
    let interior = if k == 0 { Vec::new() } else { monomials(k - 1) };
    let mut out = vec![0.0; space.n_dofs()];
    for cell in 0..mesh.n_cells() {
        let geo = mesh.geometry(cell);
        let pts = mesh.cell_points(cell);
        let dofs = space.cell_dofs(cell);
        let signs = space.cell_signs(cell);
        for (l, view) in space.facet_views(cell).iter().enumerate() {
            if !view.is_plus {
                continue;
            }
            let a = pts[(l + 1) % 3];
            let b = pts[(l + 2) % 3];
            let t = [b[0] - a[0], b[1] - a[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            let n = [t[1] / len, -t[0] / len];
            for j in 0..nf {
                let mut acc = 0.0;
                for (&s, &w) in fq.points.iter().zip(&fq.weights) {
                    let f = v([a[0] + s * t[0], a[1] + s * t[1]]);
                    acc += w * len * (f[0] * n[0] + f[1] * n[1]) * shifted_legendre(j, s);
                }
                out[dofs[l * nf + j]] = signs[l * nf + j] * acc;
            }
        }
        let mut idx = 3 * nf;
        for c in 0..2 {
            for &(ea, eb) in &interior {
                let mut acc = 0.0;
                for (xi, w) in tq.points.iter().zip(&tq.weights) {
                    let f = geo.inverse_piola(v(geo.map(*xi)));
                    acc += w * f[c] * xi[0].powi(ea) * xi[1].powi(eb);
                }
                out[dofs[idx]] = acc;
                idx += 1;
            }
        }
    }
    out
}

/// Global RT facet DoFs of a boundary datum `g = v·n` on one facet link.
pub fn rt_normal_moments<G: Fn(Point) -> f64>(space: &FeSpace, link: usize, g: G) -> Vec<f64> {
    let mesh = space.mesh();
    let l = &mesh.links()[link];
    let fq = FacetQuadrature::with_points(space.degree() + 6);
    let geo = mesh.geometry(l.plus.cell);
    (0..=space.degree())
        .map(|j| {
            fq.points
                .iter()
                .zip(&fq.weights)
                .map(|(&s, &w)| w * l.length * g(geo.map(l.plus.reference_point(s))) * shifted_legendre(j, s))
                .sum()
        })
        .collect()
}

/// Nodal interpolant into a scalar nodal space.
pub fn interpolate_lagrange<F: Fn(Point) -> f64>(space: &FeSpace, f: F) -> Vec<f64> {
    assert!(matches!(space.kind(), SpaceKind::Lagrange | SpaceKind::Discontinuous));
    let mut out = vec![0.0; space.n_dofs()];
    for cell in 0..space.mesh().n_cells() {
        for (d, x) in space.cell_dofs(cell).iter().zip(space.cell_nodes(cell)) {
            out[*d] = f(x);
        }
    }
    out
}

/// `L²` projection of an analytic field.
pub fn project_l2(space: &FeSpace, field: crate::coefficient::Field<'_>) -> Result<Vec<f64>> {
    use crate::coefficient::Field;
    let mesh = space.mesh().clone();
    let qdeg = 2 * space.polynomial_degree() + 6;
    project_l2_by_cell(space, qdeg, |cell, pts| {
        let geo = mesh.geometry(cell);
        match field {
            Field::Scalar(f) => Values::Scalar(pts.iter().map(|p| f(geo.map(*p))).collect()),
            Field::Vector(f) => Values::Vector(pts.iter().map(|p| f(geo.map(*p))).collect()),
        }
    })
}

/// `L²` projection of a field given cell by cell at reference points.
pub fn project_l2_by_cell<F>(space: &FeSpace, qdeg: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &[Point]) -> Values,
{
    let q = Quadrature::triangle(qdeg);
    let mesh = space.mesh();
    let n = space.n_local();
    let local = |cell: usize| -> Result<(Mat<f64>, Vec<f64>)> {
        let det = mesh.geometry(cell).det;
        let mut m = Mat::<f64>::zeros(n, n);
        let mut b = vec![0.0; n];
        let vals = f(cell, &q.points);
        if space.is_vector() {
            let Values::Vector(vals) = vals else {
                return Err(OseenError::InconsistentSpaces("vector space needs a vector field".into()));
            };
            let basis = space.vector_basis(cell, &q.points);
            for (iq, w) in q.weights.iter().enumerate() {
                let w = w * det;
                for i in 0..n {
                    let vi = basis.v(iq, i);
                    b[i] += w * (vals[iq][0] * vi[0] + vals[iq][1] * vi[1]);
                    for j in 0..n {
                        let vj = basis.v(iq, j);
                        m[(i, j)] += w * (vi[0] * vj[0] + vi[1] * vj[1]);
                    }
                }
            }
        } else {
            let Values::Scalar(vals) = vals else {
                return Err(OseenError::InconsistentSpaces("scalar space needs a scalar field".into()));
            };
            let basis = space.scalar_basis(cell, &q.points);
            for (iq, w) in q.weights.iter().enumerate() {
                let w = w * det;
                for i in 0..n {
                    let vi = basis.v(iq, i);
                    b[i] += w * vals[iq] * vi;
                    for j in 0..n {
                        m[(i, j)] += w * vi * basis.v(iq, j);
                    }
                }
            }
        }
        Ok((m, b))
    };

    let mut out = vec![0.0; space.n_dofs()];
    match space.kind() {
        SpaceKind::Discontinuous | SpaceKind::VectorDiscontinuous => {
            for cell in 0..mesh.n_cells() {
                let (m, b) = local(cell)?;
                let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
                let x = faer::linalg::solvers::Solve::solve(&m.llt(faer::Side::Lower).map_err(|_| {
                    OseenError::SingularMatrix { pivot: None }
                })?, &rhs);
                for (i, d) in space.cell_dofs(cell).iter().enumerate() {
                    out[*d] = x[(i, 0)];
                }
            }
        }
        _ => {
            let mut t = TripletBuilder::new(space.n_dofs(), space.n_dofs());
            let mut rhs = vec![0.0; space.n_dofs()];
            for cell in 0..mesh.n_cells() {
                let (m, b) = local(cell)?;
                let dofs = space.cell_dofs(cell);
                for i in 0..n {
                    rhs[dofs[i]] += b[i];
                    for j in 0..n {
                        t.add(dofs[i], dofs[j], m[(i, j)]);
                    }
                }
            }
            let a = t.build();
            let lu = lu_factor(&a, &SolverOptions::default())?;
            let (x, _) = lu.solve(&rhs)?;
            out = x;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::Field;
    use crate::fespace::FeFunction;
    use crate::mesh::{generate_structured, Rect};
    use std::sync::Arc;

    fn mesh(n: usize) -> Arc<crate::mesh::Mesh> {
        Arc::new(generate_structured(n, n, Rect::unit()).unwrap())
    }

    #[test]
    fn rt_reproduces_constants() {
        let m = mesh(3);
        for k in 0..=2 {
            let s = Arc::new(FeSpace::raviart_thomas(m.clone(), k).unwrap());
            let c = interpolate_rt(&s, |_| [1.0, -0.5]);
            let f = FeFunction::new(s.clone(), c).unwrap();
            for cell in 0..m.n_cells() {
                let (v, d, _) = f.vector_at(cell, &[[0.2, 0.7], [0.4, 0.1]]);
                for (vq, dq) in v.iter().zip(&d) {
                    assert!((vq[0] - 1.0).abs() < 1e-12 && (vq[1] + 0.5).abs() < 1e-12);
                    assert!(dq.abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn rt_divergence_of_radial_field() {
        let m = mesh(2);
        let s = Arc::new(FeSpace::raviart_thomas(m.clone(), 0).unwrap());
        let f = FeFunction::new(s.clone(), interpolate_rt(&s, |x| x)).unwrap();
        for cell in 0..m.n_cells() {
            let (_, d, _) = f.vector_at(cell, &[[0.3, 0.3]]);
            assert!((d[0] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rt_reproduces_its_own_polynomials() {
        let m = mesh(2);
        let s = Arc::new(FeSpace::raviart_thomas(m.clone(), 1).unwrap());
        // (x², xy) = x·(x, y) ∈ RT1, plus a P1 vector field.
        let field = |x: Point| [x[0] * x[0] + 0.3 * x[1] - 1.0, x[0] * x[1] + 2.0 * x[0]];
        let f = FeFunction::new(s.clone(), interpolate_rt(&s, field)).unwrap();
        for cell in 0..m.n_cells() {
            let xi = [0.15, 0.6];
            let x = m.geometry(cell).map(xi);
            let (v, _, _) = f.vector_at(cell, &[xi]);
            let e = field(x);
            assert!((v[0][0] - e[0]).abs() < 1e-12 && (v[0][1] - e[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_of_constant_and_cell_mean() {
        let m = mesh(2);
        let p0 = FeSpace::discontinuous(m.clone(), 0).unwrap();
        let f = |x: Point| x[0].powi(4) - x[1].powi(4);
        let c = project_l2(&p0, Field::Scalar(&f)).unwrap();
        // Cell means computed by an independent fine rule.
        let q = Quadrature::triangle(12);
        for cell in 0..m.n_cells() {
            let g = m.geometry(cell);
            let mean: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| w * f(g.map(*p))).sum::<f64>() / 0.5;
            assert!((c[p0.cell_dofs(cell)[0]] - mean).abs() < 1e-13);
        }
        for s in [FeSpace::lagrange(m.clone(), 2).unwrap(), FeSpace::discontinuous(m.clone(), 1).unwrap()] {
            let c = project_l2(&s, Field::Scalar(&|_| 3.5)).unwrap();
            assert!(c.iter().all(|v| (v - 3.5).abs() < 1e-12));
        }
        let s = FeSpace::vector_discontinuous(m, 2).unwrap();
        let c = project_l2(&s, Field::Vector(&|x| [x[0] * x[1], x[1] * x[1]])).unwrap();
        assert!(c.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn lagrange_interpolation_is_exact_on_polynomials() {
        let m = mesh(2);
        let s = Arc::new(FeSpace::lagrange(m.clone(), 3).unwrap());
        let f = |x: Point| x[0].powi(3) - 2.0 * x[0] * x[1] * x[1] + 1.0;
        let u = FeFunction::new(s.clone(), interpolate_lagrange(&s, f)).unwrap();
        let v = u.eval_scalar([0.37, 0.81]).unwrap();
        assert!((v - f([0.37, 0.81])).abs() < 1e-12);
    }
}
