//! Reference-triangle bases: nodal Lagrange `P_m` and Raviart–Thomas `RT_k`.
//!
//! Both are built from monomials through the inverse of a dual (Vandermonde)
//! matrix, which keeps the degree range uniform and the code short.

use faer::Mat;

use super::quadrature::{shifted_legendre, FacetQuadrature, Quadrature};
use crate::mesh::{Point, REFERENCE_VERTICES};

/// Exponents `(a, b)` of `x^a y^b` spanning `P_m`, ordered by total degree.
pub fn monomials(m: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for d in 0..=m as i32 {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

fn mono(e: (i32, i32), p: Point) -> f64 {
    p[0].powi(e.0) * p[1].powi(e.1)
}

fn mono_grad(e: (i32, i32), p: Point) -> Point {
    let dx = if e.0 > 0 { e.0 as f64 * p[0].powi(e.0 - 1) * p[1].powi(e.1) } else { 0.0 };
    let dy = if e.1 > 0 { e.1 as f64 * p[0].powi(e.0) * p[1].powi(e.1 - 1) } else { 0.0 };
    [dx, dy]
}

fn invert(a: &Mat<f64>) -> Mat<f64> {
    let lu = a.partial_piv_lu();
    let mut x = faer::linalg::solvers::DenseSolveCore::inverse(&lu);
    // Two Newton-Schulz sweeps clean up the rounding of the monomial basis.
    let n = a.nrows();
    for _ in 0..2 {
        let r = Mat::<f64>::identity(n, n) - a * &x;
        x = &x + &x * r;
    }
    x
}

/// Nodal Lagrange element of degree `m` on the reference triangle.
///
/// Node order: the three vertices, then `m - 1` nodes on each local edge
/// (edge `l` is opposite vertex `l` and runs from vertex `l+1` to `l+2`),
/// then interior nodes. Degree 0 has a single node at the centroid.
#[derive(Clone, Debug)]
pub struct Lagrange {
    pub degree: usize,
    pub nodes: Vec<Point>,
    exps: Vec<(i32, i32)>,
    /// `coeffs[(j, i)]`: coefficient of monomial `j` in basis function `i`.
    coeffs: Mat<f64>,
}

impl Lagrange {
    pub fn new(degree: usize) -> Self {
        let nodes = lagrange_nodes(degree);
        let exps = monomials(degree);
        let n = exps.len();
        assert_eq!(nodes.len(), n);
        let v = Mat::from_fn(n, n, |i, j| mono(exps[j], nodes[i]));
        Lagrange {
            degree,
            nodes,
            exps,
            coeffs: invert(&v),
        }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    /// Number of nodes strictly inside each edge.
    pub fn edge_nodes(&self) -> usize {
        self.degree.saturating_sub(1)
    }

    pub fn interior_nodes(&self) -> usize {
        if self.degree == 0 {
            1
        } else {
            self.dim() - 3 - 3 * self.edge_nodes()
        }
    }

    /// Values and reference gradients of every basis function at `p`.
    pub fn eval(&self, p: Point, val: &mut [f64], grad: &mut [Point]) {
        let n = self.dim();
        let m: Vec<f64> = self.exps.iter().map(|&e| mono(e, p)).collect();
        let g: Vec<Point> = self.exps.iter().map(|&e| mono_grad(e, p)).collect();
        for i in 0..n {
            let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
            for j in 0..n {
                let c = self.coeffs[(j, i)];
                v += c * m[j];
                gx += c * g[j][0];
                gy += c * g[j][1];
            }
            val[i] = v;
            grad[i] = [gx, gy];
        }
    }
}

fn lagrange_nodes(m: usize) -> Vec<Point> {
    if m == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    let mut nodes: Vec<Point> = REFERENCE_VERTICES.to_vec();
    let mf = m as f64;
    for l in 0..3 {
        let a = REFERENCE_VERTICES[(l + 1) % 3];
        let b = REFERENCE_VERTICES[(l + 2) % 3];
        for j in 1..m {
            let t = j as f64 / mf;
            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    for j in 1..m {
        for i in 1..m {
            if i + j < m {
                nodes.push([i as f64 / mf, j as f64 / mf]);
            }
        }
    }
    nodes
}

/// Raviart–Thomas element `RT_k = P_k² + x P̃_k` on the reference triangle.
///
/// Degrees of freedom: for each local edge `l` and `j = 0..=k`, the moment
/// `∫_e (v·n_l) L_j(t) ds` with `n_l` the unit outward normal and `t` the
/// edge parameter; then for `k ≥ 1` the interior moments `∫ v_c q` against
/// the monomials `q` of `P_{k-1}`, component by component.
#[derive(Clone, Debug)]
pub struct RaviartThomas {
    pub degree: usize,
    spans: Vec<Span>,
    coeffs: Mat<f64>,
}

#[derive(Clone, Copy, Debug)]
enum Span {
    X((i32, i32)),
    Y((i32, i32)),
    Radial((i32, i32)),
}

impl Span {
    /// Value and Jacobian `[[∂x v1, ∂y v1], [∂x v2, ∂y v2]]`.
    fn eval(self, p: Point) -> (Point, [[f64; 2]; 2]) {
        match self {
            Span::X(e) => {
                let g = mono_grad(e, p);
                ([mono(e, p), 0.0], [g, [0.0, 0.0]])
            }
            Span::Y(e) => {
                let g = mono_grad(e, p);
                ([0.0, mono(e, p)], [[0.0, 0.0], g])
            }
            Span::Radial(e) => {
                let m = mono(e, p);
                let g = mono_grad(e, p);
                (
                    [p[0] * m, p[1] * m],
                    [[m + p[0] * g[0], p[0] * g[1]], [p[1] * g[0], m + p[1] * g[1]]],
                )
            }
        }
    }
}

impl RaviartThomas {
    pub fn new(k: usize) -> Self {
        let mut spans = Vec::new();
        for e in monomials(k) {
            spans.push(Span::X(e));
            spans.push(Span::Y(e));
        }
        for b in 0..=k as i32 {
            spans.push(Span::Radial((k as i32 - b, b)));
        }
        let n = spans.len();
        assert_eq!(n, (k + 1) * (k + 3));

        let fq = FacetQuadrature::with_points(k + 3);
        let tq = Quadrature::triangle(2 * k + 2);
        let interior = monomials(k.saturating_sub(1));
        let mut dual = Mat::<f64>::zeros(n, n);
        for (col, s) in spans.iter().enumerate() {
            let mut row = 0;
            for l in 0..3 {
                let a = REFERENCE_VERTICES[(l + 1) % 3];
                let b = REFERENCE_VERTICES[(l + 2) % 3];
                let t = [b[0] - a[0], b[1] - a[1]];
                let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
                let normal = [t[1] / len, -t[0] / len];
                for j in 0..=k {
                    let mut acc = 0.0;
                    for (&sq, &w) in fq.points.iter().zip(&fq.weights) {
                        let x = [a[0] + sq * t[0], a[1] + sq * t[1]];
                        let (v, _) = s.eval(x);
                        acc += w * len * (v[0] * normal[0] + v[1] * normal[1]) * shifted_legendre(j, sq);
                    }
                    dual[(row, col)] = acc;
                    row += 1;
                }
            }
            if k > 0 {
                for c in 0..2 {
                    for &e in &interior {
                        let mut acc = 0.0;
                        for (x, w) in tq.points.iter().zip(&tq.weights) {
                            let (v, _) = s.eval(*x);
                            acc += w * v[c] * mono(e, *x);
                        }
                        dual[(row, col)] = acc;
                        row += 1;
                    }
                }
            }
            debug_assert_eq!(row, n);
        }
        RaviartThomas {
            degree: k,
            spans,
            coeffs: invert(&dual),
        }
    }

    pub fn dim(&self) -> usize {
        self.spans.len()
    }

    pub fn facet_dofs(&self) -> usize {
        self.degree + 1
    }

    pub fn interior_dofs(&self) -> usize {
        self.degree * (self.degree + 1)
    }

    /// Values and reference Jacobians of every basis function at `p`.
    pub fn eval(&self, p: Point, val: &mut [Point], jac: &mut [[[f64; 2]; 2]]) {
        let n = self.dim();
        let raw: Vec<(Point, [[f64; 2]; 2])> = self.spans.iter().map(|s| s.eval(p)).collect();
        for i in 0..n {
            let mut v = [0.0; 2];
            let mut d = [[0.0; 2]; 2];
            for (j, (rv, rd)) in raw.iter().enumerate() {
                let c = self.coeffs[(j, i)];
                if c == 0.0 {
                    continue;
                }
                v[0] += c * rv[0];
                v[1] += c * rv[1];
                for r in 0..2 {
                    for s in 0..2 {
                        d[r][s] += c * rd[r][s];
                    }
                }
            }
            val[i] = v;
            jac[i] = d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_is_nodal_and_sums_to_one() {
        for m in 0..=3 {
            let e = Lagrange::new(m);
            let n = e.dim();
            let mut v = vec![0.0; n];
            let mut g = vec![[0.0; 2]; n];
            for (i, node) in e.nodes.iter().enumerate() {
                e.eval(*node, &mut v, &mut g);
                for (j, vj) in v.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((vj - expect).abs() < 1e-12);
                }
            }
            e.eval([0.21, 0.37], &mut v, &mut g);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            let gs = g.iter().fold([0.0, 0.0], |a, b| [a[0] + b[0], a[1] + b[1]]);
            assert!(gs[0].abs() < 1e-12 && gs[1].abs() < 1e-12);
        }
    }

    #[test]
    fn node_counts() {
        assert_eq!(Lagrange::new(1).interior_nodes(), 0);
        assert_eq!(Lagrange::new(2).edge_nodes(), 1);
        assert_eq!(Lagrange::new(3).interior_nodes(), 1);
    }

    #[test]
    fn rt_dual_basis() {
        for k in 0..=2 {
            let e = RaviartThomas::new(k);
            let n = e.dim();
            let fq = FacetQuadrature::with_points(k + 3);
            let mut val = vec![[0.0; 2]; n];
            let mut jac = vec![[[0.0; 2]; 2]; n];
            // Edge moments of each basis function are Kronecker deltas.
            for l in 0..3 {
                let a = REFERENCE_VERTICES[(l + 1) % 3];
                let b = REFERENCE_VERTICES[(l + 2) % 3];
                let t = [b[0] - a[0], b[1] - a[1]];
                let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
                let nrm = [t[1] / len, -t[0] / len];
                for j in 0..=k {
                    let mut mom = vec![0.0; n];
                    for (&s, &w) in fq.points.iter().zip(&fq.weights) {
                        e.eval([a[0] + s * t[0], a[1] + s * t[1]], &mut val, &mut jac);
                        for i in 0..n {
                            mom[i] += w * len * (val[i][0] * nrm[0] + val[i][1] * nrm[1]) * shifted_legendre(j, s);
                        }
                    }
                    for (i, m) in mom.iter().enumerate() {
                        let expect = if i == l * (k + 1) + j { 1.0 } else { 0.0 };
                        assert!((m - expect).abs() < 1e-12, "k={k} l={l} j={j} i={i}: {m}");
                    }
                }
            }
        }
    }

    #[test]
    fn rt0_divergence_is_constant() {
        let e = RaviartThomas::new(0);
        let mut val = vec![[0.0; 2]; 3];
        let mut jac = vec![[[0.0; 2]; 2]; 3];
        e.eval([0.1, 0.2], &mut val, &mut jac);
        let d0: Vec<f64> = jac.iter().map(|j| j[0][0] + j[1][1]).collect();
        e.eval([0.6, 0.3], &mut val, &mut jac);
        for (i, j) in jac.iter().enumerate() {
            assert!((j[0][0] + j[1][1] - d0[i]).abs() < 1e-13);
            // Unit outward flux through one edge of a half-unit-area triangle.
            assert!((d0[i] - 2.0).abs() < 1e-13);
        }
    }
}
