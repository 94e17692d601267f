use super::{Mesh, Point};
use crate::error::{OseenError, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }
}

/// Which diagonal splits each square.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Diagonal {
    /// From lower-left to upper-right.
    #[default]
    Right,
    /// From lower-right to upper-left.
    Left,
}

/// Uniform `nx × ny` grid of squares, each split into two triangles by the
/// same diagonal.
pub fn generate_structured(nx: usize, ny: usize, rect: Rect) -> Result<Mesh> {
    generate_masked(nx, ny, rect, Diagonal::Right, |_| true)
}

/// Like [`generate_structured`], keeping only the squares whose centre
/// satisfies `keep`. Unused vertices are dropped.
pub fn generate_masked<F>(nx: usize, ny: usize, rect: Rect, diagonal: Diagonal, keep: F) -> Result<Mesh>
where
    F: Fn(Point) -> bool,
{
    if nx == 0 || ny == 0 {
        return Err(OseenError::InvalidMesh("nx and ny must be positive".into()));
    }
    let dx = (rect.x1 - rect.x0) / nx as f64;
    let dy = (rect.y1 - rect.y0) / ny as f64;
    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let coord = |i: usize, j: usize| -> Point {
        // Snap the last row/column onto the rectangle so refinement is exact.
        let x = if i == nx { rect.x1 } else { rect.x0 + i as f64 * dx };
        let y = if j == ny { rect.y1 } else { rect.y0 + j as f64 * dy };
        [x, y]
    };

    let mut used = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let mut index = |g: usize, p: Point, vertices: &mut Vec<Point>| {
        if used[g] == usize::MAX {
            used[g] = vertices.len();
            vertices.push(p);
        }
        used[g]
    };
    for j in 0..ny {
        for i in 0..nx {
            let centre = [rect.x0 + (i as f64 + 0.5) * dx, rect.y0 + (j as f64 + 0.5) * dy];
            if !keep(centre) {
                continue;
            }
            let v00 = index(grid(i, j), coord(i, j), &mut vertices);
            let v10 = index(grid(i + 1, j), coord(i + 1, j), &mut vertices);
            let v11 = index(grid(i + 1, j + 1), coord(i + 1, j + 1), &mut vertices);
            let v01 = index(grid(i, j + 1), coord(i, j + 1), &mut vertices);
            match diagonal {
                Diagonal::Right => {
                    cells.push([v00, v10, v11]);
                    cells.push([v00, v11, v01]);
                }
                Diagonal::Left => {
                    cells.push([v00, v10, v01]);
                    cells.push([v10, v11, v01]);
                }
            }
        }
    }
    Mesh::new(vertices, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_diagonal_matches_right_counts() {
        let a = generate_masked(3, 2, Rect::unit(), Diagonal::Left, |_| true).unwrap();
        let b = generate_structured(3, 2, Rect::unit()).unwrap();
        assert_eq!(a.n_cells(), b.n_cells());
        assert_eq!(a.n_facets(), b.n_facets());
        assert!((a.area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mask_drops_cells_and_vertices() {
        let m = generate_masked(4, 4, Rect::unit(), Diagonal::Right, |p| p[0] < 0.5).unwrap();
        assert_eq!(m.n_cells(), 16);
        assert_eq!(m.n_vertices(), 15);
        assert!((m.area() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(generate_structured(0, 3, Rect::unit()).is_err());
        assert!(generate_masked(2, 2, Rect::unit(), Diagonal::Right, |_| false).is_err());
    }
}
