//! Conforming triangle meshes of polygonal 2D domains.
//!
//! Cells are stored counter-clockwise. Local facet `l` of a cell is the edge
//! opposite local vertex `l`, running from local vertex `(l + 1) % 3` to
//! `(l + 2) % 3`. Every facet knows the one or two cells it touches; the
//! `plus` side is always the cell with the lower index, and the facet normal
//! used for global sign conventions is the outward normal of that cell.
//!
//! Periodic identification does not remove facets: both the master and the
//! slave facet stay in [`Mesh::facets`], and [`Mesh::links`] exposes the
//! pair as a single interior coupling between the two cells.

mod io;
mod structured;

pub use io::{read_text, write_text};
pub use structured::{generate_masked, generate_structured, Diagonal, Rect};

use std::collections::HashMap;

use crate::error::{OseenError, Result};

pub type Point = [f64; 2];

/// Reference-triangle vertex coordinates.
pub const REFERENCE_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    Gamma,
    Sigma,
    PeriodicMaster,
    PeriodicSlave,
}

impl BoundaryTag {
    /// Integer code used by the mesh text format.
    pub fn code(self) -> u8 {
        match self {
            BoundaryTag::Interior => 0,
            BoundaryTag::Gamma => 1,
            BoundaryTag::Sigma => 2,
            BoundaryTag::PeriodicMaster => 3,
            BoundaryTag::PeriodicSlave => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => BoundaryTag::Interior,
            1 => BoundaryTag::Gamma,
            2 => BoundaryTag::Sigma,
            3 => BoundaryTag::PeriodicMaster,
            4 => BoundaryTag::PeriodicSlave,
            _ => return None,
        })
    }
}

/// One cell adjacent to a facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellSide {
    pub cell: usize,
    pub local: usize,
}

#[derive(Clone, Debug)]
pub struct Facet {
    /// Endpoint vertex indices, lower index first.
    pub vertices: [usize; 2],
    /// Incident cell with the lower index.
    pub plus: CellSide,
    /// Second incident cell for interior facets.
    pub minus: Option<CellSide>,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }
}

/// How a facet participates in the variational forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FacetKind {
    Interior,
    Gamma,
    Sigma,
}

/// A cell's view of a coupled facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkSide {
    pub cell: usize,
    pub local: usize,
    /// True when the cell's local edge direction runs against the facet
    /// parameter direction.
    pub reversed: bool,
}

impl LinkSide {
    /// Reference coordinates of the point at facet parameter `s` in `[0, 1]`.
    pub fn reference_point(&self, s: f64) -> Point {
        let t = if self.reversed { 1.0 - s } else { s };
        let a = REFERENCE_VERTICES[(self.local + 1) % 3];
        let b = REFERENCE_VERTICES[(self.local + 2) % 3];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }
}

/// A facet as seen by assembly: kind, the coupled cells and geometry.
///
/// Periodic master/slave pairs appear once, as an interior link whose sides
/// are the two cells touching the pair. Slave facets have no link of their own.
#[derive(Clone, Debug)]
pub struct FacetLink {
    pub facet: usize,
    pub kind: FacetKind,
    pub plus: LinkSide,
    pub minus: Option<LinkSide>,
    /// Outward unit normal of the plus cell.
    pub normal: Point,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct Periodicity {
    pub translation: Point,
    /// For each facet, its periodic partner.
    pub partner: Vec<Option<usize>>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    facets: Vec<Facet>,
    cell_facets: Vec<[usize; 3]>,
    tags: Vec<BoundaryTag>,
    diameters: Vec<f64>,
    areas: Vec<f64>,
    periodic: Option<Periodicity>,
    /// Representative vertex of each periodic equivalence class.
    vertex_class: Vec<usize>,
    links: Vec<FacetLink>,
    /// Link index for each facet (slave facets map to their master's link).
    facet_link: Vec<usize>,
}

impl Mesh {
    /// Builds the facet topology of a triangulation. Clockwise cells are
    /// reoriented; every boundary facet is initially tagged `Gamma`.
    pub fn new(vertices: Vec<Point>, mut cells: Vec<[usize; 3]>) -> Result<Self> {
        if cells.is_empty() {
            return Err(OseenError::InvalidMesh("no cells".into()));
        }
        let nv = vertices.len();
        let mut areas = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter_mut().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(OseenError::InvalidMesh(format!(
                    "cell {c} references a missing vertex"
                )));
            }
            let a = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if a.abs() <= 1e-300 {
                return Err(OseenError::InvalidMesh(format!("cell {c} is degenerate")));
            }
            if a < 0.0 {
                cell.swap(1, 2);
            }
            areas.push(a.abs());
        }

        let mut facets: Vec<Facet> = Vec::new();
        let mut cell_facets = vec![[usize::MAX; 3]; cells.len()];
        let mut by_edge: HashMap<(usize, usize), usize> = HashMap::new();
        for (c, cell) in cells.iter().enumerate() {
            for l in 0..3 {
                let a = cell[(l + 1) % 3];
                let b = cell[(l + 2) % 3];
                let key = (a.min(b), a.max(b));
                match by_edge.get(&key) {
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.minus.is_some() {
                            return Err(OseenError::InvalidMesh(format!(
                                "edge {key:?} is shared by more than two cells"
                            )));
                        }
                        facet.minus = Some(CellSide { cell: c, local: l });
                        cell_facets[c][l] = f;
                    }
                    None => {
                        by_edge.insert(key, facets.len());
                        cell_facets[c][l] = facets.len();
                        facets.push(Facet {
                            vertices: [key.0, key.1],
                            plus: CellSide { cell: c, local: l },
                            minus: None,
                        });
                    }
                }
            }
        }

        let diameters = cells
            .iter()
            .map(|cell| {
                let p: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
                dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]))
            })
            .collect();
        let tags = facets
            .iter()
            .map(|f| {
                if f.is_boundary() {
                    BoundaryTag::Gamma
                } else {
                    BoundaryTag::Interior
                }
            })
            .collect();

        let mut mesh = Mesh {
            vertex_class: (0..nv).collect(),
            vertices,
            cells,
            facets,
            cell_facets,
            tags,
            diameters,
            areas,
            periodic: None,
            links: Vec::new(),
            facet_link: Vec::new(),
        };
        mesh.rebuild_links();
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    /// Facet indices of a cell, indexed by local facet.
    pub fn cell_facets(&self, cell: usize) -> [usize; 3] {
        self.cell_facets[cell]
    }

    pub fn tag(&self, facet: usize) -> BoundaryTag {
        self.tags[facet]
    }

    pub fn tags(&self) -> &[BoundaryTag] {
        &self.tags
    }

    pub fn cell_diameter(&self, cell: usize) -> f64 {
        self.diameters[cell]
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        self.areas[cell]
    }

    pub fn area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn periodicity(&self) -> Option<&Periodicity> {
        self.periodic.as_ref()
    }

    /// Representative of the periodic equivalence class of a vertex.
    pub fn vertex_class(&self, v: usize) -> usize {
        self.vertex_class[v]
    }

    /// Facets as coupled by the variational forms.
    pub fn links(&self) -> &[FacetLink] {
        &self.links
    }

    /// Index into [`Mesh::links`] of the link containing a facet.
    pub fn link_of_facet(&self, facet: usize) -> usize {
        self.facet_link[facet]
    }

    pub fn has_sigma(&self) -> bool {
        self.tags.iter().any(|&t| t == BoundaryTag::Sigma)
    }

    pub fn cell_points(&self, cell: usize) -> [Point; 3] {
        let c = self.cells[cell];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn geometry(&self, cell: usize) -> CellGeometry {
        CellGeometry::new(self.cell_points(cell))
    }

    pub fn facet_midpoint(&self, facet: usize) -> Point {
        let [a, b] = self.facets[facet].vertices;
        midpoint(self.vertices[a], self.vertices[b])
    }

    pub fn facet_length(&self, facet: usize) -> f64 {
        let [a, b] = self.facets[facet].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    /// Outward unit normal of `cell` on its local facet `local`.
    pub fn outward_normal(&self, cell: usize, local: usize) -> Point {
        let p = self.cell_points(cell);
        let a = p[(local + 1) % 3];
        let b = p[(local + 2) % 3];
        let t = [b[0] - a[0], b[1] - a[1]];
        let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
        [t[1] / len, -t[0] / len]
    }

    /// `h = max_T h_T`.
    pub fn mesh_size(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn centroid(&self, cell: usize) -> Point {
        let p = self.cell_points(cell);
        [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]
    }

    /// Locates the cell containing `x` and its reference coordinates.
    pub fn locate(&self, x: Point) -> Option<(usize, Point)> {
        const TOL: f64 = 1e-12;
        for cell in 0..self.n_cells() {
            let xi = self.geometry(cell).to_reference(x);
            if xi[0] >= -TOL && xi[1] >= -TOL && xi[0] + xi[1] <= 1.0 + TOL {
                return Some((cell, xi));
            }
        }
        None
    }

    /// Assigns boundary tags. Facets matched by `periodic` (a translation
    /// mapping master facets onto slave facets) are paired first; the rest
    /// are tagged `Gamma` where `gamma` holds at the facet midpoint, else
    /// `Sigma` where `sigma` holds.
    pub fn tag_boundary<G, S>(mut self, gamma: G, sigma: S, periodic: Option<Point>) -> Result<Self>
    where
        G: Fn(Point) -> bool,
        S: Fn(Point) -> bool,
    {
        let boundary: Vec<usize> = (0..self.n_facets())
            .filter(|&f| self.facets[f].is_boundary())
            .collect();
        let mut new_tags = self.tags.clone();
        self.periodic = None;
        self.vertex_class = (0..self.n_vertices()).collect();

        if let Some(t) = periodic {
            let (partner, classes) = self.pair_periodic(&boundary, t)?;
            for (f, p) in partner.iter().enumerate() {
                if let Some(g) = *p {
                    new_tags[f] = if self.facet_midpoint(g)[0] > self.facet_midpoint(f)[0]
                        || (self.facet_midpoint(g)[0] == self.facet_midpoint(f)[0]
                            && self.facet_midpoint(g)[1] > self.facet_midpoint(f)[1])
                    {
                        BoundaryTag::PeriodicMaster
                    } else {
                        BoundaryTag::PeriodicSlave
                    };
                }
            }
            self.periodic = Some(Periodicity {
                translation: t,
                partner,
            });
            self.vertex_class = classes;
        }

        for &f in &boundary {
            if matches!(
                new_tags[f],
                BoundaryTag::PeriodicMaster | BoundaryTag::PeriodicSlave
            ) && self.periodic.is_some()
            {
                continue;
            }
            let m = self.facet_midpoint(f);
            new_tags[f] = if gamma(m) {
                BoundaryTag::Gamma
            } else if sigma(m) {
                BoundaryTag::Sigma
            } else {
                return Err(OseenError::UntaggedFacet { facet: f, midpoint: m });
            };
        }
        self.tags = new_tags;
        self.rebuild_links();
        Ok(self)
    }

    /// Applies explicit per-facet tags (used by the text reader).
    pub(crate) fn with_tags(mut self, tags: Vec<BoundaryTag>) -> Result<Self> {
        let masters: Vec<usize> = (0..self.n_facets())
            .filter(|&f| tags[f] == BoundaryTag::PeriodicMaster)
            .collect();
        let slaves: Vec<usize> = (0..self.n_facets())
            .filter(|&f| tags[f] == BoundaryTag::PeriodicSlave)
            .collect();
        for (f, tag) in tags.iter().enumerate() {
            let boundary = self.facets[f].is_boundary();
            if boundary == (*tag == BoundaryTag::Interior) {
                return Err(OseenError::InvalidMesh(format!(
                    "facet {f}: tag {tag:?} inconsistent with its adjacency"
                )));
            }
        }
        self.periodic = None;
        self.vertex_class = (0..self.n_vertices()).collect();
        if masters.len() != slaves.len() {
            return Err(OseenError::PeriodicMismatch(format!(
                "{} master facets but {} slave facets",
                masters.len(),
                slaves.len()
            )));
        }
        if !masters.is_empty() {
            let centre = |fs: &[usize]| {
                let mut c = [0.0, 0.0];
                for &f in fs {
                    let m = self.facet_midpoint(f);
                    c[0] += m[0] / fs.len() as f64;
                    c[1] += m[1] / fs.len() as f64;
                }
                c
            };
            let cm = centre(&masters);
            let cs = centre(&slaves);
            let t = [cs[0] - cm[0], cs[1] - cm[1]];
            let candidates: Vec<usize> = masters.iter().chain(&slaves).cloned().collect();
            let (partner, classes) = self.pair_periodic(&candidates, t)?;
            for &m in &masters {
                match partner[m] {
                    Some(s) if tags[s] == BoundaryTag::PeriodicSlave => {}
                    _ => {
                        return Err(OseenError::PeriodicMismatch(format!(
                            "master facet {m} has no slave partner"
                        )))
                    }
                }
            }
            self.periodic = Some(Periodicity {
                translation: t,
                partner,
            });
            self.vertex_class = classes;
        }
        self.tags = tags;
        self.rebuild_links();
        Ok(self)
    }

    fn pair_periodic(
        &self,
        candidates: &[usize],
        t: Point,
    ) -> Result<(Vec<Option<usize>>, Vec<usize>)> {
        let scale = self.mesh_size();
        let tol = 1e-9 * scale.max(1.0);
        let mut partner = vec![None; self.n_facets()];
        let mut pairs = Vec::new();
        for &f in candidates {
            let m = self.facet_midpoint(f);
            let target = [m[0] + t[0], m[1] + t[1]];
            if let Some(&g) = candidates
                .iter()
                .find(|&&g| g != f && dist(self.facet_midpoint(g), target) < tol)
            {
                if partner[f].is_some() || partner[g].is_some() {
                    return Err(OseenError::PeriodicMismatch(format!(
                        "facet {f} or {g} paired twice"
                    )));
                }
                partner[f] = Some(g);
                partner[g] = Some(f);
                pairs.push((f, g));
            }
        }
        if pairs.is_empty() {
            return Err(OseenError::PeriodicMismatch(format!(
                "no boundary facet pairs under translation {t:?}"
            )));
        }

        // Union vertex classes along each pair and check congruence.
        let mut parent: Vec<usize> = (0..self.n_vertices()).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for &(f, g) in &pairs {
            let [a, b] = self.facets[f].vertices;
            let [c, d] = self.facets[g].vertices;
            for &v in &[a, b] {
                let x = self.vertices[v];
                let y = [x[0] + t[0], x[1] + t[1]];
                let w = if dist(self.vertices[c], y) < tol {
                    c
                } else if dist(self.vertices[d], y) < tol {
                    d
                } else {
                    return Err(OseenError::PeriodicMismatch(format!(
                        "facets {f} and {g} are not congruent under {t:?}"
                    )));
                };
                let (rv, rw) = (find(&mut parent, v), find(&mut parent, w));
                if rv != rw {
                    let (lo, hi) = (rv.min(rw), rv.max(rw));
                    parent[hi] = lo;
                }
            }
            if self.facets[f].plus.cell == self.facets[g].plus.cell {
                return Err(OseenError::PeriodicMismatch(format!(
                    "facets {f} and {g} belong to the same cell"
                )));
            }
        }
        let classes: Vec<usize> = (0..self.n_vertices()).map(|v| find(&mut parent, v)).collect();
        for &(f, _) in &pairs {
            let [a, b] = self.facets[f].vertices;
            if classes[a] == classes[b] {
                return Err(OseenError::PeriodicMismatch(format!(
                    "facet {f} collapses under periodic identification; refine the mesh"
                )));
            }
        }
        Ok((partner, classes))
    }

    fn link_side(&self, side: CellSide) -> LinkSide {
        let cell = self.cells[side.cell];
        let a = self.vertex_class[cell[(side.local + 1) % 3]];
        let b = self.vertex_class[cell[(side.local + 2) % 3]];
        LinkSide {
            cell: side.cell,
            local: side.local,
            reversed: a > b,
        }
    }

    fn rebuild_links(&mut self) {
        let mut links = Vec::with_capacity(self.n_facets());
        let mut facet_link = vec![usize::MAX; self.n_facets()];
        for f in 0..self.n_facets() {
            let facet = &self.facets[f];
            let (kind, plus, minus) = match self.tags[f] {
                BoundaryTag::Interior => (FacetKind::Interior, facet.plus, facet.minus),
                BoundaryTag::Gamma => (FacetKind::Gamma, facet.plus, None),
                BoundaryTag::Sigma => (FacetKind::Sigma, facet.plus, None),
                BoundaryTag::PeriodicSlave => continue,
                BoundaryTag::PeriodicMaster => {
                    let g = self
                        .periodic
                        .as_ref()
                        .and_then(|p| p.partner[f])
                        .expect("master facet without partner");
                    let (a, b) = (facet.plus, self.facets[g].plus);
                    let (p, m) = if a.cell < b.cell { (a, b) } else { (b, a) };
                    (FacetKind::Interior, p, Some(m))
                }
            };
            let plus_side = self.link_side(plus);
            let minus_side = minus.map(|m| self.link_side(m));
            let normal = self.outward_normal(plus.cell, plus.local);
            let length = self.facet_length(f);
            facet_link[f] = links.len();
            links.push(FacetLink {
                facet: f,
                kind,
                plus: plus_side,
                minus: minus_side,
                normal,
                length,
            });
        }
        if let Some(p) = &self.periodic {
            for f in 0..self.n_facets() {
                if self.tags[f] == BoundaryTag::PeriodicSlave {
                    let m = p.partner[f].expect("slave facet without partner");
                    facet_link[f] = facet_link[m];
                }
            }
        }
        self.links = links;
        self.facet_link = facet_link;
    }
}

/// Affine map `x = v0 + J ξ` from the reference triangle to a cell.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub origin: Point,
    /// Column-major Jacobian: `jac[c]` is column `c`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// Inverse Jacobian, row-major: `inv[r][c]`.
    pub inv: [[f64; 2]; 2],
}

impl CellGeometry {
    pub fn new(p: [Point; 3]) -> Self {
        let c0 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
        let c1 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
        let det = c0[0] * c1[1] - c1[0] * c0[1];
        // J = [[c0x, c1x], [c0y, c1y]]
        let inv = [
            [c1[1] / det, -c1[0] / det],
            [-c0[1] / det, c0[0] / det],
        ];
        CellGeometry {
            origin: p[0],
            jac: [c0, c1],
            det,
            inv,
        }
    }

    pub fn map(&self, xi: Point) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[1][0] * xi[1],
            self.origin[1] + self.jac[0][1] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> Point {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// `J v` for a reference vector.
    pub fn apply(&self, v: Point) -> Point {
        [
            self.jac[0][0] * v[0] + self.jac[1][0] * v[1],
            self.jac[0][1] * v[0] + self.jac[1][1] * v[1],
        ]
    }

    /// Physical gradient `J^{-T} ∇ξ` from a reference gradient.
    pub fn grad(&self, g: Point) -> Point {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }

    /// Contravariant Piola map of a reference vector.
    pub fn piola(&self, v: Point) -> Point {
        let w = self.apply(v);
        [w[0] / self.det, w[1] / self.det]
    }

    /// Inverse contravariant Piola map `det J^{-1} v`.
    pub fn inverse_piola(&self, v: Point) -> Point {
        [
            self.det * (self.inv[0][0] * v[0] + self.inv[0][1] * v[1]),
            self.det * (self.inv[1][0] * v[0] + self.inv[1][1] * v[1]),
        ]
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub(crate) fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Mesh {
        generate_structured(n, n, Rect::unit()).unwrap()
    }

    #[test]
    fn smallest_split() {
        let m = unit(1);
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_facets(), 5);
    }

    #[test]
    fn two_by_two_counts_and_size() {
        let m = unit(2);
        assert_eq!(m.n_cells(), 8);
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_facets(), 16);
        assert!((m.mesh_size() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn area_additivity() {
        let m = unit(4);
        assert_eq!(m.n_cells(), 32);
        assert!((m.area() - 1.0).abs() < 1e-12);
        assert!((m.mesh_size() - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn reference_triangle_size() {
        let m = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        assert!((m.mesh_size() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clockwise_cells_are_reoriented() {
        let m = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 2, 1]]).unwrap();
        assert!(m.geometry(0).det > 0.0);
    }

    #[test]
    fn interior_normals_cancel() {
        let m = unit(5);
        for f in m.facets() {
            if let Some(minus) = f.minus {
                let a = m.outward_normal(f.plus.cell, f.plus.local);
                let b = m.outward_normal(minus.cell, minus.local);
                assert!((a[0] + b[0]).abs() < 1e-14 && (a[1] + b[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn euler_relation() {
        for n in 1..6 {
            let m = generate_structured(n, n + 1, Rect::unit()).unwrap();
            let (v, e, f) = (m.n_vertices() as i64, m.n_facets() as i64, m.n_cells() as i64);
            assert_eq!(v - e + f, 1);
        }
    }

    #[test]
    fn refinement_halves_h() {
        for n in [1, 2, 3, 5] {
            let (fine, coarse) = (unit(2 * n).mesh_size(), unit(n).mesh_size());
            assert!((fine - coarse / 2.0).abs() < 1e-15 * coarse);
        }
    }

    #[test]
    fn all_gamma() {
        let m = unit(3).tag_boundary(|_| true, |_| false, None).unwrap();
        for (f, facet) in m.facets().iter().enumerate() {
            let expect = if facet.is_boundary() {
                BoundaryTag::Gamma
            } else {
                BoundaryTag::Interior
            };
            assert_eq!(m.tag(f), expect);
        }
        assert!(!m.has_sigma());
    }

    #[test]
    fn untagged_facet_is_reported() {
        let err = unit(2)
            .tag_boundary(|x| x[1] < 1e-12, |x| x[1] > 1.0 - 1e-12, None)
            .unwrap_err();
        assert!(matches!(err, OseenError::UntaggedFacet { .. }));
    }

    #[test]
    fn periodic_box_pairs_side_walls() {
        let ny = 6;
        let m = generate_structured(4, ny, Rect::unit())
            .unwrap()
            .tag_boundary(|_| true, |_| false, Some([1.0, 0.0]))
            .unwrap();
        let masters = m.tags().iter().filter(|&&t| t == BoundaryTag::PeriodicMaster).count();
        let slaves = m.tags().iter().filter(|&&t| t == BoundaryTag::PeriodicSlave).count();
        assert_eq!(masters, ny);
        assert_eq!(slaves, ny);
        let p = m.periodicity().unwrap();
        for (f, partner) in p.partner.iter().enumerate() {
            if let Some(g) = *partner {
                let a = m.facet_midpoint(f);
                let b = m.facet_midpoint(g);
                assert!((a[1] - b[1]).abs() < 1e-14);
                assert!(((a[0] - b[0]).abs() - 1.0).abs() < 1e-14);
                assert_eq!(p.partner[g], Some(f));
            }
        }
        // Periodic pairs become interior links with opposite normals.
        let interior = m.links().iter().filter(|l| l.kind == FacetKind::Interior).count();
        let plain_interior = m.facets().iter().filter(|f| !f.is_boundary()).count();
        assert_eq!(interior, plain_interior + ny);
    }

    #[test]
    fn periodic_mismatch() {
        let err = unit(3)
            .tag_boundary(|_| true, |_| false, Some([0.7, 0.0]))
            .unwrap_err();
        assert!(matches!(err, OseenError::PeriodicMismatch(_)));
    }

    #[test]
    fn link_sides_agree_on_facet_points() {
        let m = generate_structured(3, 4, Rect::unit())
            .unwrap()
            .tag_boundary(|_| true, |_| false, Some([1.0, 0.0]))
            .unwrap();
        let t = m.periodicity().unwrap().translation;
        for link in m.links() {
            let Some(minus) = link.minus else { continue };
            for s in [0.0, 0.3, 1.0] {
                let xp = m.geometry(link.plus.cell).map(link.plus.reference_point(s));
                let xm = m.geometry(minus.cell).map(minus.reference_point(s));
                let d = [xp[0] - xm[0], xp[1] - xm[1]];
                let same = d[0].abs() < 1e-13 && d[1].abs() < 1e-13;
                let shifted = ((d[0].abs() - t[0]).abs() < 1e-13) && d[1].abs() < 1e-13;
                assert!(same || shifted, "{xp:?} vs {xm:?}");
            }
        }
    }

    #[test]
    fn geometry_roundtrip() {
        let g = CellGeometry::new([[0.2, 0.1], [1.0, 0.3], [0.4, 0.9]]);
        let xi = [0.25, 0.5];
        let back = g.to_reference(g.map(xi));
        assert!((back[0] - xi[0]).abs() < 1e-14 && (back[1] - xi[1]).abs() < 1e-14);
        let v = [0.3, -0.7];
        let w = g.inverse_piola(g.piola(v));
        assert!((w[0] - v[0]).abs() < 1e-14 && (w[1] - v[1]).abs() < 1e-14);
    }
}
