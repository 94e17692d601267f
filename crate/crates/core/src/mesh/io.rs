//! Line-oriented mesh text format.
//!
//! ```text
//! vertices N
//! cells M
//! facets K
//! x y          (N lines)
//! i j k        (M lines, zero-based vertex indices)
//! a b tag      (K lines: 0 interior, 1 Gamma, 2 Sigma, 3/4 periodic master/slave)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Interior facets may be
//! omitted from the facet list; every boundary facet must be present.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{BoundaryTag, Mesh, Point};
use crate::error::{OseenError, Result};

pub fn read_text<R: BufRead>(reader: R) -> Result<Mesh> {
    let mut lines = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        lines.push((no + 1, t.to_string()));
    }
    let mut it = lines.into_iter();
    let mut header = |key: &str| -> Result<usize> {
        let (no, l) = it.next().ok_or(OseenError::MeshParse {
            line: 0,
            message: format!("missing `{key}` header"),
        })?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(OseenError::MeshParse { line: no, message: format!("expected `{key} <count>`") });
        }
        parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(OseenError::MeshParse { line: no, message: format!("bad `{key}` count") })
    };
    let nv = header("vertices")?;
    let nc = header("cells")?;
    let nf = header("facets")?;

    fn fields<T: std::str::FromStr>(no: usize, l: &str, n: usize) -> Result<Vec<T>> {
        let v: Vec<T> = l
            .split_whitespace()
            .map(|s| s.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| OseenError::MeshParse { line: no, message: format!("cannot parse `{l}`") })?;
        if v.len() != n {
            return Err(OseenError::MeshParse { line: no, message: format!("expected {n} fields") });
        }
        Ok(v)
    }
    let mut next = |what: &str| {
        it.next().ok_or(OseenError::MeshParse { line: 0, message: format!("unexpected end of file in {what}") })
    };

    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, l) = next("vertices")?;
        let v: Vec<f64> = fields(no, &l, 2)?;
        vertices.push([v[0], v[1]]);
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (no, l) = next("cells")?;
        let c: Vec<usize> = fields(no, &l, 3)?;
        cells.push([c[0], c[1], c[2]]);
    }
    let mut listed = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (no, l) = next("facets")?;
        let f: Vec<usize> = fields(no, &l, 3)?;
        let tag = u8::try_from(f[2])
            .ok()
            .and_then(BoundaryTag::from_code)
            .ok_or(OseenError::MeshParse { line: no, message: format!("unknown facet tag {}", f[2]) })?;
        listed.push((no, f[0], f[1], tag));
    }
    if let Some((no, _)) = next("trailer").ok() {
        return Err(OseenError::MeshParse { line: no, message: "trailing data after facets".into() });
    }

    let mesh = Mesh::new(vertices, cells)?;
    let by_edge: HashMap<(usize, usize), usize> = mesh
        .facets()
        .iter()
        .enumerate()
        .map(|(i, f)| ((f.vertices[0], f.vertices[1]), i))
        .collect();
    let mut tags: Vec<Option<BoundaryTag>> = vec![None; mesh.n_facets()];
    for (no, a, b, tag) in listed {
        let f = *by_edge.get(&(a.min(b), a.max(b))).ok_or(OseenError::MeshParse {
            line: no,
            message: format!("facet ({a}, {b}) is not an edge of the mesh"),
        })?;
        tags[f] = Some(tag);
    }
    let mut resolved = Vec::with_capacity(tags.len());
    for (f, t) in tags.into_iter().enumerate() {
        match t {
            Some(t) => resolved.push(t),
            None if !mesh.facets()[f].is_boundary() => resolved.push(BoundaryTag::Interior),
            None => {
                return Err(OseenError::UntaggedFacet { facet: f, midpoint: mesh.facet_midpoint(f) })
            }
        }
    }
    mesh.with_tags(resolved)
}

pub fn write_text<W: Write>(mesh: &Mesh, mut w: W) -> Result<()> {
    writeln!(w, "vertices {}", mesh.n_vertices())?;
    writeln!(w, "cells {}", mesh.n_cells())?;
    writeln!(w, "facets {}", mesh.n_facets())?;
    for v in mesh.vertices() {
        writeln!(w, "{:.17e} {:.17e}", v[0], v[1])?;
    }
    for c in mesh.cells() {
        writeln!(w, "{} {} {}", c[0], c[1], c[2])?;
    }
    for (f, facet) in mesh.facets().iter().enumerate() {
        writeln!(w, "{} {} {}", facet.vertices[0], facet.vertices[1], mesh.tag(f).code())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, Rect};

    #[test]
    fn roundtrip_with_periodic_tags() {
        let m = generate_structured(4, 3, Rect::unit())
            .unwrap()
            .tag_boundary(|x| x[1] < 1e-12, |_| true, Some([1.0, 0.0]))
            .unwrap();
        let mut buf = Vec::new();
        write_text(&m, &mut buf).unwrap();
        let r = read_text(buf.as_slice()).unwrap();
        assert_eq!(r.tags(), m.tags());
        assert_eq!(r.cells(), m.cells());
        assert_eq!(r.periodicity().unwrap().translation, [1.0, 0.0]);
        assert_eq!(r.links().len(), m.links().len());
    }

    #[test]
    fn missing_boundary_tag() {
        let text = "vertices 3\ncells 1\nfacets 2\n0 0\n1 0\n0 1\n0 1 2\n0 1 1\n1 2 1\n";
        let err = read_text(text.as_bytes()).unwrap_err();
        assert!(matches!(err, OseenError::UntaggedFacet { .. }));
    }

    #[test]
    fn bad_header() {
        let err = read_text("verts 3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, OseenError::MeshParse { line: 1, .. }));
    }

    #[test]
    fn interior_tag_on_boundary_rejected() {
        let text = "vertices 3\ncells 1\nfacets 3\n0 0\n1 0\n0 1\n0 1 2\n0 1 1\n1 2 0\n0 2 1\n";
        assert!(read_text(text.as_bytes()).is_err());
    }
}
