//! Shared machinery for cell and facet assembly.
//!
//! Kernels produce dense local blocks; placements scatter them (optionally
//! transposed and scaled) into a global triplet list. Work is split into
//! fixed chunks that are concatenated in order, so results do not depend on
//! the number of threads.

use rayon::prelude::*;

use crate::fespace::{FacetQuadrature, FeSpace, Quadrature};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::{FacetLink, Mesh, Point};

pub(crate) type Triplet = (u32, u32, f64);

const CHUNK: usize = 64;

/// Runs `f` over `0..n` in parallel chunks and concatenates the outputs in
/// index order.
pub(crate) fn collect_ordered<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Vec<T>) + Sync,
{
    let chunks: Vec<Vec<T>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::new();
            for i in c * CHUNK..n.min((c + 1) * CHUNK) {
                f(i, &mut out);
            }
            out
        })
        .collect();
    let total = chunks.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total);
    for c in chunks {
        out.extend(c);
    }
    out
}

/// Dense local matrix: `vals[r * cols.len() + c]`.
#[derive(Clone, Debug, Default)]
pub(crate) struct LocalBlock {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl LocalBlock {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Self {
        let n = rows.len() * cols.len();
        LocalBlock {
            rows,
            cols,
            vals: vec![0.0; n],
        }
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let n = self.cols.len();
        self.vals[r * n + c] += v;
    }
}

/// Where a block lands in the global matrix.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Placement {
    pub row: usize,
    pub col: usize,
    pub scale: f64,
    pub transpose: bool,
}

impl Placement {
    pub fn at(row: usize, col: usize, scale: f64) -> Self {
        Placement {
            row,
            col,
            scale,
            transpose: false,
        }
    }

    pub fn transposed(row: usize, col: usize, scale: f64) -> Self {
        Placement {
            row,
            col,
            scale,
            transpose: true,
        }
    }
}

pub(crate) fn scatter(blocks: &[LocalBlock], places: &[Placement], out: &mut Vec<Triplet>) {
    for b in blocks {
        let nc = b.cols.len();
        for p in places {
            for (r, &gr) in b.rows.iter().enumerate() {
                for (c, &gc) in b.cols.iter().enumerate() {
                    let v = p.scale * b.vals[r * nc + c];
                    let (i, j) = if p.transpose { (gc, gr) } else { (gr, gc) };
                    out.push(((p.row + i) as u32, (p.col + j) as u32, v));
                }
            }
        }
    }
}

/// Assembles a kernel over `n` items (cells or links) into triplets.
pub(crate) fn assemble_with<F>(n: usize, places: &[Placement], kernel: F) -> Vec<Triplet>
where
    F: Fn(usize, &mut Vec<LocalBlock>) + Sync,
{
    collect_ordered(n, |i, out| {
        let mut blocks = Vec::new();
        kernel(i, &mut blocks);
        scatter(&blocks, places, out);
    })
}

pub(crate) fn block_matrix<F>(nrows: usize, ncols: usize, n: usize, kernel: F) -> SparseMatrix
where
    F: Fn(usize, &mut Vec<LocalBlock>) + Sync,
{
    let mut t = TripletBuilder::new(nrows, ncols);
    t.extend_from(assemble_with(n, &[Placement::at(0, 0, 1.0)], kernel));
    t.build()
}

/// Assembles a load vector from `(index, value)` contributions.
pub(crate) fn load_vector<F>(len: usize, n: usize, kernel: F) -> Vec<f64>
where
    F: Fn(usize, &mut Vec<(usize, f64)>) + Sync,
{
    let mut out = vec![0.0; len];
    for (i, v) in collect_ordered(n, kernel) {
        out[i] += v;
    }
    out
}

/// Cell quadrature for velocity degree `k+1`: exact to degree `2(k+1)+2`.
pub(crate) fn cell_rule(k: usize) -> Quadrature {
    Quadrature::triangle(2 * (k + 1) + 2)
}

pub(crate) fn facet_rule(k: usize) -> FacetQuadrature {
    FacetQuadrature::exact_for(2 * (k + 1) + 2)
}

/// Reference points of a facet rule seen from each side of a link, the
/// physical points and the physical weights.
pub(crate) struct FacetPoints {
    pub plus: Vec<Point>,
    pub minus: Option<Vec<Point>>,
    pub x: Vec<Point>,
    pub w: Vec<f64>,
}

pub(crate) fn facet_points(mesh: &Mesh, link: &FacetLink, q: &FacetQuadrature) -> FacetPoints {
    let plus: Vec<Point> = q.points.iter().map(|&s| link.plus.reference_point(s)).collect();
    let minus = link.minus.map(|m| q.points.iter().map(|&s| m.reference_point(s)).collect());
    let g = mesh.geometry(link.plus.cell);
    FacetPoints {
        x: plus.iter().map(|p| g.map(*p)).collect(),
        plus,
        minus,
        w: q.weights.iter().map(|w| w * link.length).collect(),
    }
}

/// Global DoFs of both cells adjacent to a link (plus first).
pub(crate) fn link_cell_dofs(space: &FeSpace, link: &FacetLink) -> Vec<usize> {
    let mut d = space.cell_dofs(link.plus.cell).to_vec();
    if let Some(m) = link.minus {
        d.extend_from_slice(space.cell_dofs(m.cell));
    }
    d
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `v × n = v1 n2 − v2 n1`.
pub(crate) fn cross(v: Point, n: Point) -> f64 {
    v[0] * n[1] - v[1] * n[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_collection_is_sequential_order() {
        let v = collect_ordered(1000, |i, out| {
            if i % 3 == 0 {
                out.push(i);
                out.push(i + 1);
            }
        });
        let expect: Vec<usize> = (0..1000).filter(|i| i % 3 == 0).flat_map(|i| [i, i + 1]).collect();
        assert_eq!(v, expect);
    }

    #[test]
    fn placement_transposes_and_scales() {
        let mut b = LocalBlock::new(vec![0, 2], vec![1]);
        b.add(0, 0, 1.0);
        b.add(1, 0, 2.0);
        let mut out = Vec::new();
        scatter(&[b], &[Placement::at(10, 0, 1.0), Placement::transposed(0, 10, -1.0)], &mut out);
        assert_eq!(out, vec![(10, 1, 1.0), (12, 1, 2.0), (1, 10, -1.0), (1, 12, -2.0)]);
    }
}
