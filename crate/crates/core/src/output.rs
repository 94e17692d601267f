//! CSV tables and legacy VTK field files.

use std::io::Write;

use crate::diagnostics::{fit_rates, ErrorNorms, ProfileSample};
use crate::driver::StepRecord;
use crate::error::{OseenError, Result};
use crate::mesh::REFERENCE_VERTICES;
use crate::system::{Scheme, Solution};

fn csv_err(e: csv::Error) -> OseenError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => OseenError::Io(e),
        other => OseenError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn num(v: f64) -> String {
    format!("{v:.10e}")
}

fn rate(r: Option<f64>) -> String {
    r.map_or_else(String::new, |r| format!("{r:.4}"))
}

pub const ERROR_HEADER: [&str; 9] = ["h", "dofs", "err_u", "rate_u", "err_w", "rate_w", "err_p", "rate_p", "div_linf"];

/// Error table of a convergence study. The DG table appends the energy
/// seminorm and its rate as `err_a,rate_a`.
pub fn write_error_table<W: Write>(w: W, scheme: Scheme, rows: &[ErrorNorms]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = ERROR_HEADER.to_vec();
    if scheme == Scheme::Dg {
        header.extend(["err_a", "rate_a"]);
    }
    out.write_record(&header).map_err(csv_err)?;
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let col = |f: fn(&ErrorNorms) -> f64| -> Vec<Option<f64>> {
        let e: Vec<f64> = rows.iter().map(f).collect();
        fit_rates(&h, &e).unwrap_or_else(|_| vec![None; rows.len()])
    };
    let (ru, rw, rp, ra) = (col(|r| r.u_div), col(|r| r.w_z), col(|r| r.p_l2), col(|r| r.a_seminorm));
    for (i, r) in rows.iter().enumerate() {
        let mut rec = vec![
            num(r.h),
            r.dofs.to_string(),
            num(r.u_div),
            rate(ru[i]),
            num(r.w_z),
            rate(rw[i]),
            num(r.p_l2),
            rate(rp[i]),
            num(r.div_linf),
        ];
        if scheme == Scheme::Dg {
            rec.extend([num(r.a_seminorm), rate(ra[i])]);
        }
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub const DIAGNOSTICS_HEADER: [&str; 5] = ["t", "E", "P", "E_phys", "P_phys"];

/// Time series `t,E,P,E_phys,P_phys`.
pub fn write_diagnostics<W: Write>(w: W, records: &[StepRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DIAGNOSTICS_HEADER).map_err(csv_err)?;
    for r in records {
        let e = r.enstrophy;
        out.write_record([num(r.t), num(e.e), num(e.p), num(e.e_phys), num(e.p_phys)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_profile<W: Write>(w: W, samples: &[ProfileSample]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "u1", "u2", "omega", "p"]).map_err(csv_err)?;
    for s in samples {
        out.write_record([num(s.x[0]), num(s.x[1]), num(s.u[0]), num(s.u[1]), num(s.omega), num(s.p)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Legacy ASCII unstructured grid. Every cell gets its own three points so
/// discontinuous fields are shown without averaging.
pub fn write_vtk<W: Write>(mut w: W, sol: &Solution, title: &str) -> Result<()> {
    let mesh = sol.u.space.mesh();
    let nc = mesh.n_cells();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * nc)?;
    for c in 0..nc {
        for p in mesh.cell_points(c) {
            writeln!(w, "{} {} 0", num(p[0]), num(p[1]))?;
        }
    }
    writeln!(w, "CELLS {} {}", nc, 4 * nc)?;
    for c in 0..nc {
        writeln!(w, "3 {} {} {}", 3 * c, 3 * c + 1, 3 * c + 2)?;
    }
    writeln!(w, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(w, "5")?;
    }
    let (mut u, mut om, mut p) = (Vec::new(), Vec::new(), Vec::new());
    for c in 0..nc {
        u.extend(sol.u.vector_at(c, &REFERENCE_VERTICES).0);
        om.extend(sol.omega.scalar_at(c, &REFERENCE_VERTICES).0);
        p.extend(sol.p.scalar_at(c, &REFERENCE_VERTICES).0);
    }
    writeln!(w, "POINT_DATA {}", 3 * nc)?;
    writeln!(w, "VECTORS velocity double")?;
    for v in &u {
        writeln!(w, "{} {} 0", num(v[0]), num(v[1]))?;
    }
    for (name, vals) in [("vorticity", &om), ("pressure", &p)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in vals.iter() {
            writeln!(w, "{}", num(*v))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Enstrophy;

    #[test]
    fn diagnostics_header_only_for_no_records() {
        let mut buf = Vec::new();
        write_diagnostics(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,E,P,E_phys,P_phys\n");
    }

    #[test]
    fn error_table_rates() {
        let rows: Vec<ErrorNorms> = [0.5, 0.25]
            .iter()
            .map(|&h| ErrorNorms { h, dofs: 1, u_div: h, w_z: h * h, p_l2: h, a_seminorm: 0.0, div_linf: 0.0, ..Default::default() })
            .collect();
        let mut buf = Vec::new();
        write_error_table(&mut buf, Scheme::Mixed, &rows).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], ERROR_HEADER.join(","));
        let f: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(f[3], "1.0000");
        assert_eq!(f[5], "2.0000");
        assert!(lines[1].split(',').nth(3).unwrap().is_empty());
        let _ = Enstrophy::default();
    }
}
