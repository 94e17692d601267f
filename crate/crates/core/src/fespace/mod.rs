//! Finite element spaces on a [`Mesh`]: Raviart–Thomas, continuous Lagrange,
//! and scalar/vector discontinuous Lagrange.
//!
//! Spaces evaluate their local basis in physical coordinates, with global
//! orientation signs already applied, so assembly code only ever sees
//! `Σ coeff[dof] · φ_local`.

mod function;
mod interpolation;
pub mod quadrature;
pub mod reference;

pub use function::FeFunction;
pub use interpolation::{interpolate_lagrange, interpolate_rt, project_l2, project_l2_by_cell, rt_normal_moments, Values};
pub use quadrature::{FacetQuadrature, Quadrature};

use std::sync::Arc;

use crate::error::{OseenError, Result};
use crate::mesh::{FacetKind, LinkSide, Mesh, Point};
use reference::{Lagrange, RaviartThomas};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// `H(div)`-conforming Raviart–Thomas space `RT_k`.
    RaviartThomas,
    /// Continuous Lagrange space (scalar vorticity in the conforming scheme).
    Lagrange,
    /// Discontinuous scalar polynomials.
    Discontinuous,
    /// Discontinuous vector polynomials, component-major per cell.
    VectorDiscontinuous,
}

/// Highest supported polynomial degree for scalar/vector Lagrange-type spaces.
pub const MAX_NODAL_DEGREE: usize = 3;
/// Highest supported Raviart–Thomas index.
pub const MAX_RT_DEGREE: usize = 2;

#[derive(Clone, Debug)]
enum Element {
    Nodal(Lagrange),
    Rt(RaviartThomas),
}

/// Physical values of a scalar local basis at a set of points,
/// flattened point-major: entry `q * n + i`.
#[derive(Clone, Debug, Default)]
pub struct ScalarBasis {
    pub n: usize,
    pub val: Vec<f64>,
    pub grad: Vec<Point>,
}

impl ScalarBasis {
    #[inline]
    pub fn v(&self, q: usize, i: usize) -> f64 {
        self.val[q * self.n + i]
    }

    #[inline]
    pub fn g(&self, q: usize, i: usize) -> Point {
        self.grad[q * self.n + i]
    }

    /// Scalar curl `(∂y φ, −∂x φ)`.
    #[inline]
    pub fn curl(&self, q: usize, i: usize) -> Point {
        let g = self.g(q, i);
        [g[1], -g[0]]
    }
}

/// Physical values of a vector local basis at a set of points.
#[derive(Clone, Debug, Default)]
pub struct VectorBasis {
    pub n: usize,
    pub val: Vec<Point>,
    pub div: Vec<f64>,
    /// Scalar curl `∂x v2 − ∂y v1`.
    pub curl: Vec<f64>,
}

impl VectorBasis {
    #[inline]
    pub fn v(&self, q: usize, i: usize) -> Point {
        self.val[q * self.n + i]
    }

    #[inline]
    pub fn d(&self, q: usize, i: usize) -> f64 {
        self.div[q * self.n + i]
    }

    #[inline]
    pub fn c(&self, q: usize, i: usize) -> f64 {
        self.curl[q * self.n + i]
    }
}

/// Basis values at one point, as returned by [`FeSpace::eval_basis`].
#[derive(Clone, Debug)]
pub enum BasisValues {
    Scalar(ScalarBasis),
    Vector(VectorBasis),
}

/// How one cell sees each of its facets.
#[derive(Clone, Copy, Debug)]
pub struct FacetView {
    pub link: usize,
    pub side: LinkSide,
    pub is_plus: bool,
}

#[derive(Clone, Debug)]
pub struct FeSpace {
    kind: SpaceKind,
    degree: usize,
    mesh: Arc<Mesh>,
    element: Element,
    n_local: usize,
    n_dofs: usize,
    cell_dofs: Vec<usize>,
    cell_signs: Vec<f64>,
    views: Vec<[FacetView; 3]>,
    /// For Lagrange spaces: global DoFs lying on each facet link.
    link_dofs: Vec<Vec<usize>>,
}

impl FeSpace {
    /// Builds a space; `degree` is the polynomial degree for nodal spaces and
    /// the index `k` for `RT_k`.
    pub fn new(mesh: Arc<Mesh>, kind: SpaceKind, degree: usize) -> Result<Self> {
        let max = match kind {
            SpaceKind::RaviartThomas => MAX_RT_DEGREE,
            _ => MAX_NODAL_DEGREE,
        };
        if degree > max {
            return Err(OseenError::UnsupportedDegree { degree, max });
        }
        if kind == SpaceKind::Lagrange && degree == 0 {
            return Err(OseenError::InconsistentSpaces(
                "continuous Lagrange space needs degree ≥ 1".into(),
            ));
        }
        let views = facet_views(&mesh);
        let element = match kind {
            SpaceKind::RaviartThomas => Element::Rt(RaviartThomas::new(degree)),
            _ => Element::Nodal(Lagrange::new(degree)),
        };
        let n_scalar = match &element {
            Element::Nodal(e) => e.dim(),
            Element::Rt(e) => e.dim(),
        };
        let n_local = if kind == SpaceKind::VectorDiscontinuous { 2 * n_scalar } else { n_scalar };
        let nc = mesh.n_cells();
        let mut cell_dofs = vec![0usize; nc * n_local];
        let mut cell_signs = vec![1.0; nc * n_local];
        let mut link_dofs = Vec::new();
        let n_dofs = match (&element, kind) {
            (Element::Rt(e), _) => {
                let nf = e.facet_dofs();
                let ni = e.interior_dofs();
                let n_links = mesh.links().len();
                for c in 0..nc {
                    let base = c * n_local;
                    for (l, view) in views[c].iter().enumerate() {
                        for j in 0..nf {
                            let mut s = if view.is_plus { 1.0 } else { -1.0 };
                            if view.side.reversed && j % 2 == 1 {
                                s = -s;
                            }
                            cell_dofs[base + l * nf + j] = view.link * nf + j;
                            cell_signs[base + l * nf + j] = s;
                        }
                    }
                    for i in 0..ni {
                        cell_dofs[base + 3 * nf + i] = n_links * nf + c * ni + i;
                    }
                }
                n_links * nf + nc * ni
            }
            (Element::Nodal(e), SpaceKind::Lagrange) => {
                let (n, ld) = number_lagrange(&mesh, e, &views, &mut cell_dofs);
                link_dofs = ld;
                n
            }
            (Element::Nodal(_), _) => {
                for (i, d) in cell_dofs.iter_mut().enumerate() {
                    *d = i;
                }
                nc * n_local
            }
        };
        Ok(FeSpace {
            kind,
            degree,
            mesh,
            element,
            n_local,
            n_dofs,
            cell_dofs,
            cell_signs,
            views,
            link_dofs,
        })
    }

    pub fn raviart_thomas(mesh: Arc<Mesh>, k: usize) -> Result<Self> {
        Self::new(mesh, SpaceKind::RaviartThomas, k)
    }

    pub fn lagrange(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, SpaceKind::Lagrange, degree)
    }

    pub fn discontinuous(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, SpaceKind::Discontinuous, degree)
    }

    pub fn vector_discontinuous(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, SpaceKind::VectorDiscontinuous, degree)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Highest total polynomial degree of the functions in the space.
    pub fn polynomial_degree(&self) -> usize {
        match self.kind {
            SpaceKind::RaviartThomas => self.degree + 1,
            _ => self.degree,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn is_vector(&self) -> bool {
        matches!(self.kind, SpaceKind::RaviartThomas | SpaceKind::VectorDiscontinuous)
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell * self.n_local..(cell + 1) * self.n_local]
    }

    /// Orientation signs of the local basis (non-unit only for RT facet DoFs).
    pub fn cell_signs(&self, cell: usize) -> &[f64] {
        &self.cell_signs[cell * self.n_local..(cell + 1) * self.n_local]
    }

    pub fn facet_views(&self, cell: usize) -> &[FacetView; 3] {
        &self.views[cell]
    }

    /// Global DoFs whose basis functions do not vanish on the facet link.
    ///
    /// For RT spaces these are the normal-moment DoFs of the facet; for
    /// Lagrange spaces the vertex and edge nodes on it.
    pub fn link_dofs(&self, link: usize) -> Vec<usize> {
        match self.kind {
            SpaceKind::RaviartThomas => {
                let nf = self.degree + 1;
                (link * nf..(link + 1) * nf).collect()
            }
            SpaceKind::Lagrange => self.link_dofs[link].clone(),
            _ => Vec::new(),
        }
    }

    /// Sorted global DoFs on all facets of the given kind.
    pub fn boundary_dofs(&self, kind: FacetKind) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .mesh
            .links()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind == kind)
            .flat_map(|(i, _)| self.link_dofs(i))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Reference nodes of the scalar element (nodal spaces only).
    pub fn reference_nodes(&self) -> &[Point] {
        match &self.element {
            Element::Nodal(e) => &e.nodes,
            Element::Rt(_) => &[],
        }
    }

    pub fn scalar_basis(&self, cell: usize, pts: &[Point]) -> ScalarBasis {
        let Element::Nodal(e) = &self.element else {
            panic!("scalar_basis called on a vector space")
        };
        assert!(!self.is_vector(), "scalar_basis called on a vector space");
        let n = e.dim();
        let geo = self.mesh.geometry(cell);
        let mut out = ScalarBasis {
            n,
            val: vec![0.0; n * pts.len()],
            grad: vec![[0.0; 2]; n * pts.len()],
        };
        for (q, p) in pts.iter().enumerate() {
            let r = q * n..(q + 1) * n;
            e.eval(*p, &mut out.val[r.clone()], &mut out.grad[r.clone()]);
            for g in &mut out.grad[r] {
                *g = geo.grad(*g);
            }
        }
        out
    }

    pub fn vector_basis(&self, cell: usize, pts: &[Point]) -> VectorBasis {
        let geo = self.mesh.geometry(cell);
        let n = self.n_local;
        let mut out = VectorBasis {
            n,
            val: vec![[0.0; 2]; n * pts.len()],
            div: vec![0.0; n * pts.len()],
            curl: vec![0.0; n * pts.len()],
        };
        match (&self.element, self.kind) {
            (Element::Rt(e), _) => {
                let signs = self.cell_signs(cell);
                let mut val = vec![[0.0; 2]; n];
                let mut jac = vec![[[0.0; 2]; 2]; n];
                for (q, p) in pts.iter().enumerate() {
                    e.eval(*p, &mut val, &mut jac);
                    for i in 0..n {
                        let s = signs[i] / geo.det;
                        let v = geo.apply(val[i]);
                        // ∇x φ = J (∇ξ φ̂) J⁻¹ / det J
                        let d = jac[i];
                        let j = geo.jac;
                        let a = [
                            [j[0][0] * d[0][0] + j[1][0] * d[1][0], j[0][0] * d[0][1] + j[1][0] * d[1][1]],
                            [j[0][1] * d[0][0] + j[1][1] * d[1][0], j[0][1] * d[0][1] + j[1][1] * d[1][1]],
                        ];
                        let inv = geo.inv;
                        let g = [
                            [a[0][0] * inv[0][0] + a[0][1] * inv[1][0], a[0][0] * inv[0][1] + a[0][1] * inv[1][1]],
                            [a[1][0] * inv[0][0] + a[1][1] * inv[1][0], a[1][0] * inv[0][1] + a[1][1] * inv[1][1]],
                        ];
                        out.val[q * n + i] = [s * v[0], s * v[1]];
                        out.div[q * n + i] = s * (d[0][0] + d[1][1]);
                        out.curl[q * n + i] = s * (g[1][0] - g[0][1]);
                    }
                }
            }
            (Element::Nodal(e), SpaceKind::VectorDiscontinuous) => {
                let ns = e.dim();
                let mut val = vec![0.0; ns];
                let mut grad = vec![[0.0; 2]; ns];
                for (q, p) in pts.iter().enumerate() {
                    e.eval(*p, &mut val, &mut grad);
                    for i in 0..ns {
                        let g = geo.grad(grad[i]);
                        out.val[q * n + i] = [val[i], 0.0];
                        out.div[q * n + i] = g[0];
                        out.curl[q * n + i] = -g[1];
                        out.val[q * n + ns + i] = [0.0, val[i]];
                        out.div[q * n + ns + i] = g[1];
                        out.curl[q * n + ns + i] = g[0];
                    }
                }
            }
            _ => panic!("vector_basis called on a scalar space"),
        }
        out
    }

    /// Basis values at one reference point of a cell.
    pub fn eval_basis(&self, cell: usize, xi: Point) -> BasisValues {
        if self.is_vector() {
            BasisValues::Vector(self.vector_basis(cell, &[xi]))
        } else {
            BasisValues::Scalar(self.scalar_basis(cell, &[xi]))
        }
    }

    /// Physical coordinates of the nodes of a cell (nodal spaces).
    pub fn cell_nodes(&self, cell: usize) -> Vec<Point> {
        let geo = self.mesh.geometry(cell);
        self.reference_nodes().iter().map(|p| geo.map(*p)).collect()
    }
}

fn facet_views(mesh: &Mesh) -> Vec<[FacetView; 3]> {
    let placeholder = FacetView {
        link: usize::MAX,
        side: LinkSide {
            cell: 0,
            local: 0,
            reversed: false,
        },
        is_plus: true,
    };
    let mut views = vec![[placeholder; 3]; mesh.n_cells()];
    for (i, link) in mesh.links().iter().enumerate() {
        views[link.plus.cell][link.plus.local] = FacetView {
            link: i,
            side: link.plus,
            is_plus: true,
        };
        if let Some(m) = link.minus {
            views[m.cell][m.local] = FacetView {
                link: i,
                side: m,
                is_plus: false,
            };
        }
    }
    for (c, v) in views.iter().enumerate() {
        for (l, view) in v.iter().enumerate() {
            assert!(view.link != usize::MAX, "cell {c} facet {l} has no link");
        }
    }
    views
}

/// Numbers a continuous Lagrange space: vertex classes, then edge nodes by
/// link (ordered along the facet parameter), then interior nodes.
fn number_lagrange(
    mesh: &Mesh,
    e: &Lagrange,
    views: &[[FacetView; 3]],
    cell_dofs: &mut [usize],
) -> (usize, Vec<Vec<usize>>) {
    let n_local = e.dim();
    let mut class_dof = vec![usize::MAX; mesh.n_vertices()];
    let mut next = 0;
    for v in 0..mesh.n_vertices() {
        let c = mesh.vertex_class(v);
        if class_dof[c] == usize::MAX {
            class_dof[c] = next;
            next += 1;
        }
    }
    let n_vertex = next;
    let ne = e.edge_nodes();
    let n_links = mesh.links().len();
    let ni = e.interior_nodes();
    for c in 0..mesh.n_cells() {
        let base = c * n_local;
        let cell = mesh.cells()[c];
        for l in 0..3 {
            cell_dofs[base + l] = class_dof[mesh.vertex_class(cell[l])];
        }
        for (l, view) in views[c].iter().enumerate() {
            for j in 0..ne {
                let g = if view.side.reversed { ne - 1 - j } else { j };
                cell_dofs[base + 3 + l * ne + j] = n_vertex + view.link * ne + g;
            }
        }
        for i in 0..ni {
            cell_dofs[base + 3 + 3 * ne + i] = n_vertex + n_links * ne + c * ni + i;
        }
    }
    let mut link_dofs = vec![Vec::new(); n_links];
    for (c, v) in views.iter().enumerate() {
        let base = c * n_local;
        for (l, view) in v.iter().enumerate() {
            if !view.is_plus {
                continue;
            }
            let dofs = &mut link_dofs[view.link];
            dofs.push(cell_dofs[base + (l + 1) % 3]);
            dofs.push(cell_dofs[base + (l + 2) % 3]);
            for j in 0..ne {
                dofs.push(cell_dofs[base + 3 + l * ne + j]);
            }
        }
    }
    (n_vertex + n_links * ne + mesh.n_cells() * ni, link_dofs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, Rect};

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(generate_structured(n, n, Rect::unit()).unwrap())
    }

    #[test]
    fn dof_counts_two_by_two() {
        let m = mesh(2);
        assert_eq!(FeSpace::raviart_thomas(m.clone(), 0).unwrap().n_dofs(), 16);
        assert_eq!(FeSpace::discontinuous(m.clone(), 0).unwrap().n_dofs(), 8);
        assert_eq!(FeSpace::lagrange(m.clone(), 1).unwrap().n_dofs(), 9);
        assert_eq!(FeSpace::lagrange(m.clone(), 2).unwrap().n_dofs(), 25);
        assert_eq!(FeSpace::vector_discontinuous(m.clone(), 1).unwrap().n_dofs(), 48);
        assert_eq!(FeSpace::raviart_thomas(m, 1).unwrap().n_dofs(), 2 * 16 + 2 * 8);
    }

    #[test]
    fn unsupported_degree() {
        let m = mesh(1);
        assert!(matches!(
            FeSpace::raviart_thomas(m.clone(), 3),
            Err(OseenError::UnsupportedDegree { .. })
        ));
        assert!(FeSpace::discontinuous(m, 4).is_err());
    }

    #[test]
    fn lagrange_nodes_agree_across_cells() {
        let m = mesh(3);
        for deg in 1..=3 {
            let s = FeSpace::lagrange(m.clone(), deg).unwrap();
            let mut pos = vec![None::<Point>; s.n_dofs()];
            for c in 0..m.n_cells() {
                for (dof, x) in s.cell_dofs(c).iter().zip(s.cell_nodes(c)) {
                    match pos[*dof] {
                        None => pos[*dof] = Some(x),
                        Some(y) => assert!((x[0] - y[0]).abs() < 1e-14 && (x[1] - y[1]).abs() < 1e-14),
                    }
                }
            }
            assert!(pos.iter().all(|p| p.is_some()));
        }
    }

    #[test]
    fn rt_normal_trace_single_valued() {
        let m = mesh(3);
        for k in 0..=2 {
            let s = FeSpace::raviart_thomas(m.clone(), k).unwrap();
            let coeffs: Vec<f64> = (0..s.n_dofs()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            for link in m.links() {
                let Some(minus) = link.minus else { continue };
                for t in [0.1, 0.5, 0.8] {
                    let tp = s.vector_basis(link.plus.cell, &[link.plus.reference_point(t)]);
                    let tm = s.vector_basis(minus.cell, &[minus.reference_point(t)]);
                    let un = |b: &VectorBasis, cell: usize| {
                        let mut v = [0.0; 2];
                        for (i, d) in s.cell_dofs(cell).iter().enumerate() {
                            v[0] += coeffs[*d] * b.v(0, i)[0];
                            v[1] += coeffs[*d] * b.v(0, i)[1];
                        }
                        v[0] * link.normal[0] + v[1] * link.normal[1]
                    };
                    let (a, b) = (un(&tp, link.plus.cell), un(&tm, minus.cell));
                    assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "k={k}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn curl_of_linear_function() {
        let m = mesh(2);
        let s = FeSpace::lagrange(m.clone(), 1).unwrap();
        // θ = x has curl (∂yθ, −∂xθ) = (0, −1).
        let coeffs: Vec<f64> = {
            let mut c = vec![0.0; s.n_dofs()];
            for cell in 0..m.n_cells() {
                for (d, x) in s.cell_dofs(cell).iter().zip(s.cell_nodes(cell)) {
                    c[*d] = x[0];
                }
            }
            c
        };
        for cell in 0..m.n_cells() {
            let b = s.scalar_basis(cell, &[[0.2, 0.3]]);
            let mut curl = [0.0; 2];
            for (i, d) in s.cell_dofs(cell).iter().enumerate() {
                curl[0] += coeffs[*d] * b.curl(0, i)[0];
                curl[1] += coeffs[*d] * b.curl(0, i)[1];
            }
            assert!(curl[0].abs() < 1e-13 && (curl[1] + 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rt_divergence_matches_finite_difference() {
        let m = mesh(2);
        let s = FeSpace::raviart_thomas(m.clone(), 2).unwrap();
        let g = m.geometry(3);
        let xi = [0.3, 0.2];
        let h = 1e-6;
        let b = s.vector_basis(3, &[xi]);
        for i in 0..s.n_local() {
            let at = |x: Point| s.vector_basis(3, &[g.to_reference(x)]).v(0, i);
            let x = g.map(xi);
            let dx = (at([x[0] + h, x[1]])[0] - at([x[0] - h, x[1]])[0]) / (2.0 * h);
            let dy = (at([x[0], x[1] + h])[1] - at([x[0], x[1] - h])[1]) / (2.0 * h);
            let cx = (at([x[0] + h, x[1]])[1] - at([x[0] - h, x[1]])[1]) / (2.0 * h);
            let cy = (at([x[0], x[1] + h])[0] - at([x[0], x[1] - h])[0]) / (2.0 * h);
            assert!((b.d(0, i) - dx - dy).abs() < 1e-5 * (1.0 + b.d(0, i).abs()));
            assert!((b.c(0, i) - cx + cy).abs() < 1e-5 * (1.0 + b.c(0, i).abs()));
        }
    }
}
