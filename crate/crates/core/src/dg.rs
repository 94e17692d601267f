//! Stabilised discontinuous Galerkin scheme: discontinuous `P_{k+1}`
//! velocity, `P_k` vorticity and `P_k` pressure.
//!
//! On a facet with sides `±` and normal `n = n⁺`:
//!
//! * `⟦v⟧_T = (v⁺ − v⁻) × n`, `⟦v⟧_N = (v⁺ − v⁻)·n`,
//! * `⟦θ⟧_T = (θ⁺ − θ⁻)(−n2, n1)`, `⟦q⟧ = (q⁺ − q⁻) n`,
//! * `{·}` is the arithmetic mean.
//!
//! On boundary facets jumps are one-sided traces and averages are the trace.
//! The system reads
//!
//! ```text
//! [ σM + J   B̃1 + C   B̃2 ] [u]   [F̃]
//! [ −B̃1ᵀ     D        0  ] [ω] = [G̃]
//! [ −B̃2ᵀ     0        E  ] [p]   [L̃]
//! ```
//!
//! plus the mean-value multiplier when Σ is empty.

use crate::assembly::{
    assemble_with, block_matrix, cell_rule, collect_ordered, cross, dot, facet_points, facet_rule, link_cell_dofs,
    load_vector, FacetPoints, LocalBlock, Placement,
};
use crate::coefficient::{OseenParams, Stabilisation};
use crate::error::{OseenError, Result};
use crate::fespace::{FeSpace, SpaceKind};
use crate::linalg::{SparseMatrix, Strategy};
use crate::mesh::{FacetKind, FacetLink, Mesh, Point};
use crate::mixed::{b1c_kernel, b2_kernel, check_sigma_data, pressure_means, scalar_mass, vector_mass};
use crate::system::{SaddleSystem, Scheme, Spaces};

/// Which of the two equivalent expressions of `b̃1`/`b̃2` to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    /// Derivatives on the vorticity/pressure; facet sums over interior and Γ.
    Primal,
    /// Integrated by parts; facet sums over interior and Σ.
    IntegratedByParts,
}

/// Facet penalties `(C11, A11, D11)`.
///
/// Interior: `c11 max(1/h±)`, `a11 max(1/h±)`, `d11 max(h±)`; boundary: the
/// same with the single adjacent cell.
pub fn facet_penalties(mesh: &Mesh, link: &FacetLink, stab: &Stabilisation) -> (f64, f64, f64) {
    let hp = mesh.cell_diameter(link.plus.cell);
    let (hmin, hmax) = match link.minus {
        Some(m) => {
            let hm = mesh.cell_diameter(m.cell);
            (hp.min(hm), hp.max(hm))
        }
        None => (hp, hp),
    };
    (stab.c11 / hmin, stab.a11 / hmin, stab.d11 * hmax)
}

fn dg_degree(h: &FeSpace) -> usize {
    assert_eq!(h.kind(), SpaceKind::VectorDiscontinuous, "velocity space must be vector discontinuous");
    h.degree() - 1
}

/// Traces of a local basis from both sides of a link, indexed by the
/// concatenated (plus, minus) local DoFs.
pub(crate) struct Trace<T> {
    pub dofs: Vec<usize>,
    /// `val[q][a]`.
    pub val: Vec<Vec<T>>,
    /// `+1` on the plus side, `−1` on the minus side.
    pub sgn: Vec<f64>,
    /// Averaging weight: `1/2` on interior links, `1` on boundary links.
    pub avg: Vec<f64>,
}

fn weights(link: &FacetLink, np: usize, nm: usize) -> (Vec<f64>, Vec<f64>) {
    let a = if link.minus.is_some() { 0.5 } else { 1.0 };
    let mut sgn = vec![1.0; np];
    sgn.extend(std::iter::repeat(-1.0).take(nm));
    (sgn, vec![a; np + nm])
}

pub(crate) fn vector_trace(h: &FeSpace, link: &FacetLink, fp: &FacetPoints) -> Trace<Point> {
    let bp = h.vector_basis(link.plus.cell, &fp.plus);
    let bm = link.minus.map(|m| h.vector_basis(m.cell, fp.minus.as_ref().unwrap()));
    let np = bp.n;
    let nm = bm.as_ref().map_or(0, |b| b.n);
    let val = (0..fp.w.len())
        .map(|q| {
            let mut v: Vec<Point> = (0..np).map(|i| bp.v(q, i)).collect();
            if let Some(b) = &bm {
                v.extend((0..nm).map(|i| b.v(q, i)));
            }
            v
        })
        .collect();
    let (sgn, avg) = weights(link, np, nm);
    Trace {
        dofs: link_cell_dofs(h, link),
        val,
        sgn,
        avg,
    }
}

pub(crate) fn scalar_trace(s: &FeSpace, link: &FacetLink, fp: &FacetPoints) -> Trace<f64> {
    let bp = s.scalar_basis(link.plus.cell, &fp.plus);
    let bm = link.minus.map(|m| s.scalar_basis(m.cell, fp.minus.as_ref().unwrap()));
    let np = bp.n;
    let nm = bm.as_ref().map_or(0, |b| b.n);
    let val = (0..fp.w.len())
        .map(|q| {
            let mut v: Vec<f64> = (0..np).map(|i| bp.v(q, i)).collect();
            if let Some(b) = &bm {
                v.extend((0..nm).map(|i| b.v(q, i)));
            }
            v
        })
        .collect();
    let (sgn, avg) = weights(link, np, nm);
    Trace {
        dofs: link_cell_dofs(s, link),
        val,
        sgn,
        avg,
    }
}

fn in_gamma_set(kind: FacetKind) -> bool {
    matches!(kind, FacetKind::Interior | FacetKind::Gamma)
}

fn in_sigma_set(kind: FacetKind) -> bool {
    matches!(kind, FacetKind::Interior | FacetKind::Sigma)
}

/// Facet part of `b̃1`: rows velocity, columns vorticity.
fn b1_facet_kernel<'a>(h: &'a FeSpace, z: &'a FeSpace, nu: f64, form: Form, k: usize) -> impl Fn(usize, &mut Vec<LocalBlock>) + Sync + 'a {
    let fq = facet_rule(k);
    let s = nu.sqrt();
    move |li, out| {
        let mesh = h.mesh();
        let link = &mesh.links()[li];
        let active = match form {
            Form::Primal => in_gamma_set(link.kind),
            Form::IntegratedByParts => in_sigma_set(link.kind),
        };
        if !active {
            return;
        }
        let fp = facet_points(mesh, link, &fq);
        let tv = vector_trace(h, link, &fp);
        let tz = scalar_trace(z, link, &fp);
        let n = link.normal;
        let tn = [-n[1], n[0]];
        let mut lb = LocalBlock::new(tv.dofs.clone(), tz.dofs.clone());
        for (q, w) in fp.w.iter().enumerate() {
            for (i, vi) in tv.val[q].iter().enumerate() {
                for (j, tj) in tz.val[q].iter().enumerate() {
                    let v = match form {
                        // {v}·⟦θ⟧_T
                        Form::Primal => tv.avg[i] * tz.sgn[j] * tj * dot(*vi, tn),
                        // ⟦v⟧_T {θ}
                        Form::IntegratedByParts => tv.sgn[i] * cross(*vi, n) * tz.avg[j] * tj,
                    };
                    lb.add(i, j, s * w * v);
                }
            }
        }
        out.push(lb);
    }
}

/// Volume part of the integrated-by-parts `b̃1`: `√ν ∫ (curl v) θ`.
fn b1_ipp_volume_kernel<'a>(h: &'a FeSpace, z: &'a FeSpace, nu: f64, k: usize) -> impl Fn(usize, &mut Vec<LocalBlock>) + Sync + 'a {
    let q = cell_rule(k);
    let s = nu.sqrt();
    move |cell, out| {
        let det = h.mesh().geometry(cell).det.abs();
        let bv = h.vector_basis(cell, &q.points);
        let bz = z.scalar_basis(cell, &q.points);
        let mut lb = LocalBlock::new(h.cell_dofs(cell).to_vec(), z.cell_dofs(cell).to_vec());
        for (qi, w) in q.weights.iter().enumerate() {
            for i in 0..bv.n {
                for j in 0..bz.n {
                    lb.add(i, j, s * w * det * bv.c(qi, i) * bz.v(qi, j));
                }
            }
        }
        out.push(lb);
    }
}

/// Facet part of `b̃2`: rows velocity, columns pressure.
fn b2_facet_kernel<'a>(h: &'a FeSpace, qs: &'a FeSpace, form: Form, k: usize) -> impl Fn(usize, &mut Vec<LocalBlock>) + Sync + 'a {
    let fq = facet_rule(k);
    move |li, out| {
        let mesh = h.mesh();
        let link = &mesh.links()[li];
        let active = match form {
            Form::Primal => in_gamma_set(link.kind),
            Form::IntegratedByParts => in_sigma_set(link.kind),
        };
        if !active {
            return;
        }
        let fp = facet_points(mesh, link, &fq);
        let tv = vector_trace(h, link, &fp);
        let tq = scalar_trace(qs, link, &fp);
        let n = link.normal;
        let mut lb = LocalBlock::new(tv.dofs.clone(), tq.dofs.clone());
        for (q, w) in fp.w.iter().enumerate() {
            for (i, vi) in tv.val[q].iter().enumerate() {
                let vn = dot(*vi, n);
                for (j, qj) in tq.val[q].iter().enumerate() {
                    let v = match form {
                        // {q}⟦v⟧_N
                        Form::Primal => tq.avg[j] * qj * tv.sgn[i] * vn,
                        // −⟦q⟧·{v}
                        Form::IntegratedByParts => -tq.sgn[j] * qj * tv.avg[i] * vn,
                    };
                    lb.add(i, j, w * v);
                }
            }
        }
        out.push(lb);
    }
}

/// Volume part of the integrated-by-parts `b̃2`: `∫ ∇q·v`.
fn b2_ipp_volume_kernel<'a>(h: &'a FeSpace, qs: &'a FeSpace, k: usize) -> impl Fn(usize, &mut Vec<LocalBlock>) + Sync + 'a {
    let q = cell_rule(k);
    move |cell, out| {
        let det = h.mesh().geometry(cell).det.abs();
        let bv = h.vector_basis(cell, &q.points);
        let bq = qs.scalar_basis(cell, &q.points);
        let mut lb = LocalBlock::new(h.cell_dofs(cell).to_vec(), qs.cell_dofs(cell).to_vec());
        for (qi, w) in q.weights.iter().enumerate() {
            for i in 0..bv.n {
                for j in 0..bq.n {
                    lb.add(i, j, w * det * dot(bq.g(qi, j), bv.v(qi, i)));
                }
            }
        }
        out.push(lb);
    }
}

fn j_kernel<'a>(h: &'a FeSpace, nu: f64, stab: Stabilisation, k: usize) -> impl Fn(usize, &mut Vec<LocalBlock>) + Sync + 'a {
    let fq = facet_rule(k);
    let s = nu.sqrt();
    move |li, out| {
        let mesh = h.mesh();
        let link = &mesh.links()[li];
        let (c11, a11, _) = facet_penalties(mesh, link, &stab);
        let tang = if in_sigma_set(link.kind) { s * c11 } else { 0.0 };
        let norm = if in_gamma_set(link.kind) { a11 } else { 0.0 };
        let fp = facet_points(mesh, link, &fq);
        let tv = vector_trace(h, link, &fp);
        let n = link.normal;
        let mut lb = LocalBlock::new(tv.dofs.clone(), tv.dofs.clone());
        let m = tv.dofs.len();
        for (q, w) in fp.w.iter().enumerate() {
            let jt: Vec<f64> = (0..m).map(|i| tv.sgn[i] * cross(tv.val[q][i], n)).collect();
            let jn: Vec<f64> = (0..m).map(|i| tv.sgn[i] * dot(tv.val[q][i], n)).collect();
            for i in 0..m {
                for j in 0..m {
                    lb.add(i, j, w * (tang * jt[i] * jt[j] + norm * jn[i] * jn[j]));
                }
            }
        }
        out.push(lb);
    }
}

fn e_kernel<'a>(qs: &'a FeSpace, stab: Stabilisation, k: usize) -> impl Fn(usize, &mut Vec<LocalBlock>) + Sync + 'a {
    let fq = facet_rule(k);
    move |li, out| {
        let mesh = qs.mesh();
        let link = &mesh.links()[li];
        if !in_sigma_set(link.kind) {
            return;
        }
        let (_, _, d11) = facet_penalties(mesh, link, &stab);
        let fp = facet_points(mesh, link, &fq);
        let tq = scalar_trace(qs, link, &fp);
        let m = tq.dofs.len();
        let mut lb = LocalBlock::new(tq.dofs.clone(), tq.dofs.clone());
        for (q, w) in fp.w.iter().enumerate() {
            for i in 0..m {
                for j in 0..m {
                    lb.add(i, j, w * d11 * tq.sgn[i] * tq.val[q][i] * tq.sgn[j] * tq.val[q][j]);
                }
            }
        }
        out.push(lb);
    }
}

fn sum(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix {
    let mut t = crate::linalg::TripletBuilder::new(a.nrows(), a.ncols());
    for m in [&a, &b] {
        for i in 0..m.nrows() {
            let (c, v) = m.row(i);
            for (&j, &x) in c.iter().zip(v) {
                t.add(i, j, x);
            }
        }
    }
    t.build()
}

/// `b̃1(v, θ)`: rows velocity, columns vorticity.
pub fn assemble_b1_dg(h: &FeSpace, z: &FeSpace, nu: f64, form: Form) -> SparseMatrix {
    let k = dg_degree(h);
    let mesh = h.mesh();
    let (nr, nc) = (h.n_dofs(), z.n_dofs());
    let vol = match form {
        Form::Primal => block_matrix(nr, nc, mesh.n_cells(), b1c_kernel(h, z, nu, None, true, k)),
        Form::IntegratedByParts => block_matrix(nr, nc, mesh.n_cells(), b1_ipp_volume_kernel(h, z, nu, k)),
    };
    sum(vol, block_matrix(nr, nc, mesh.links().len(), b1_facet_kernel(h, z, nu, form, k)))
}

/// `b̃2(v, q)`: rows velocity, columns pressure.
pub fn assemble_b2_dg(h: &FeSpace, qs: &FeSpace, form: Form) -> SparseMatrix {
    let k = dg_degree(h);
    let mesh = h.mesh();
    let (nr, nc) = (h.n_dofs(), qs.n_dofs());
    let vol = match form {
        Form::Primal => block_matrix(nr, nc, mesh.n_cells(), b2_kernel(h, qs, k)),
        Form::IntegratedByParts => block_matrix(nr, nc, mesh.n_cells(), b2_ipp_volume_kernel(h, qs, k)),
    };
    sum(vol, block_matrix(nr, nc, mesh.links().len(), b2_facet_kernel(h, qs, form, k)))
}

/// Velocity jump penalty `j(u, v)`.
pub fn assemble_j(h: &FeSpace, params: &OseenParams) -> SparseMatrix {
    let k = dg_degree(h);
    let n = h.n_dofs();
    block_matrix(n, n, h.mesh().links().len(), j_kernel(h, params.nu, params.stab, k))
}

/// Pressure jump penalty `e(p, q)`.
pub fn assemble_e(qs: &FeSpace, params: &OseenParams) -> SparseMatrix {
    let n = qs.n_dofs();
    block_matrix(n, n, qs.mesh().links().len(), e_kernel(qs, params.stab, qs.degree()))
}

/// `[F̃, G̃, L̃]`.
///
/// Besides the Σ data, the Γ data `u·n = g_n` and `ω = g_ω` enter weakly:
/// `F̃ += −√ν ∫_Γ g_ω (v×n) + ∫_Γ A11 g_n (v·n)` and `L̃ += −∫_Γ g_n q`.
pub fn assemble_dg_rhs(params: &OseenParams, spaces: &Spaces) -> Result<Vec<f64>> {
    check_sigma_data(params, spaces)?;
    let (h, z, qs) = (&*spaces.velocity, &*spaces.vorticity, &*spaces.pressure);
    let k = dg_degree(h);
    let mesh = spaces.mesh();
    let (nu_, nw, np) = (h.n_dofs(), z.n_dofs(), qs.n_dofs());
    let mut rhs = vec![0.0; nu_ + nw + np];
    if !params.f.is_zero() {
        let q = cell_rule(k);
        let f = load_vector(nu_, mesh.n_cells(), |cell, out| {
            let det = mesh.geometry(cell).det.abs();
            let bv = h.vector_basis(cell, &q.points);
            let fv = params.f.values(mesh, cell, &q.points);
            for (i, d) in h.cell_dofs(cell).iter().enumerate() {
                let s: f64 = q.weights.iter().enumerate().map(|(qi, w)| w * det * dot(fv[qi], bv.v(qi, i))).sum();
                out.push((*d, s));
            }
        });
        rhs[..nu_].copy_from_slice(&f);
    }
    let gamma_data = !params.gamma_normal.is_zero() || !params.gamma_vorticity.is_zero();
    let sigma_data = params.has_sigma_data();
    if gamma_data || sigma_data {
        let fq = facet_rule(k);
        let s = params.nu.sqrt();
        let boundary: Vec<usize> = (0..mesh.links().len()).filter(|&l| mesh.links()[l].minus.is_none()).collect();
        let contrib = collect_ordered(boundary.len(), |bi, out: &mut Vec<(usize, f64)>| {
            let link = &mesh.links()[boundary[bi]];
            let (c11, a11, d11) = facet_penalties(mesh, link, &params.stab);
            let fp = facet_points(mesh, link, &fq);
            let cell = link.plus.cell;
            let n = link.normal;
            let bv = h.vector_basis(cell, &fp.plus);
            let bz = z.scalar_basis(cell, &fp.plus);
            let bq = qs.scalar_basis(cell, &fp.plus);
            for (qi, (x, w)) in fp.x.iter().zip(&fp.w).enumerate() {
                match link.kind {
                    FacetKind::Sigma => {
                        let ps = params.p_sigma.at(*x);
                        let us = params.u_sigma.at(*x, n);
                        for (i, d) in h.cell_dofs(cell).iter().enumerate() {
                            let v = bv.v(qi, i);
                            out.push((*d, w * (-ps * dot(v, n) + s * c11 * us * cross(v, n))));
                        }
                        for (i, d) in z.cell_dofs(cell).iter().enumerate() {
                            out.push((nu_ + d, -w * s * us * bz.v(qi, i)));
                        }
                        for (i, d) in qs.cell_dofs(cell).iter().enumerate() {
                            out.push((nu_ + nw + d, w * d11 * ps * bq.v(qi, i)));
                        }
                    }
                    FacetKind::Gamma => {
                        let gn = params.gamma_normal.at(*x, n);
                        let gw = params.gamma_vorticity.at(*x);
                        for (i, d) in h.cell_dofs(cell).iter().enumerate() {
                            let v = bv.v(qi, i);
                            out.push((*d, w * (-s * gw * cross(v, n) + a11 * gn * dot(v, n))));
                        }
                        for (i, d) in qs.cell_dofs(cell).iter().enumerate() {
                            out.push((nu_ + nw + d, -w * gn * bq.v(qi, i)));
                        }
                    }
                    FacetKind::Interior => {}
                }
            }
        });
        for (i, v) in contrib {
            rhs[i] += v;
        }
    }
    Ok(rhs)
}

/// Full DG system; the multiplier is added when `zero_mean` is set.
pub fn assemble_dg_system(params: &OseenParams, spaces: &Spaces, zero_mean: bool) -> Result<SaddleSystem> {
    params.validate()?;
    params.validate_stabilisation()?;
    if spaces.scheme != Scheme::Dg {
        return Err(OseenError::InconsistentSpaces(format!("expected dg spaces, got {}", spaces.scheme)));
    }
    spaces.check()?;
    let mesh = spaces.mesh();
    if !zero_mean && !mesh.has_sigma() {
        return Err(OseenError::NoPressureGauge);
    }
    let (h, z, qs) = (&*spaces.velocity, &*spaces.vorticity, &*spaces.pressure);
    let k = spaces.k;
    let off = spaces.offsets(zero_mean);
    let (nc, nl) = (mesh.n_cells(), mesh.links().len());
    let qr = cell_rule(k);
    let (u, w, p) = (off.u(), off.w(), off.p());
    let mut trip = assemble_with(nc, &[Placement::at(u, u, 1.0)], |cell, out| {
        out.push(vector_mass(h, cell, &qr.points, &qr.weights, params.sigma));
    });
    trip.extend(assemble_with(nl, &[Placement::at(u, u, 1.0)], j_kernel(h, params.nu, params.stab, k)));
    trip.extend(assemble_with(nc, &[Placement::at(u, w, 1.0)], b1c_kernel(h, z, params.nu, Some(&params.beta), true, k)));
    trip.extend(assemble_with(nc, &[Placement::transposed(w, u, -1.0)], b1c_kernel(h, z, params.nu, None, true, k)));
    trip.extend(assemble_with(
        nl,
        &[Placement::at(u, w, 1.0), Placement::transposed(w, u, -1.0)],
        b1_facet_kernel(h, z, params.nu, Form::Primal, k),
    ));
    let b2p = [Placement::at(u, p, 1.0), Placement::transposed(p, u, -1.0)];
    trip.extend(assemble_with(nc, &b2p, b2_kernel(h, qs, k)));
    trip.extend(assemble_with(nl, &b2p, b2_facet_kernel(h, qs, Form::Primal, k)));
    let qd = crate::fespace::Quadrature::triangle(2 * k + 2);
    trip.extend(assemble_with(nc, &[Placement::at(w, w, 1.0)], |cell, out| {
        out.push(scalar_mass(z, cell, &qd.points, &qd.weights, 1.0));
    }));
    trip.extend(assemble_with(nl, &[Placement::at(p, p, 1.0)], e_kernel(qs, params.stab, k)));
    if let Some(l) = off.lambda() {
        for (j, m) in pressure_means(qs).into_iter().enumerate() {
            trip.push(((p + j) as u32, l as u32, m));
            trip.push((l as u32, (p + j) as u32, m));
        }
        trip.push((l as u32, l as u32, 0.0));
    }
    let mut rhs = assemble_dg_rhs(params, spaces)?;
    rhs.resize(off.total(), 0.0);
    let mut sys = SaddleSystem::from_triplets(trip, rhs, off, &[], Strategy::Auto);
    let mut groups = vec![nc; off.total()];
    for cell in 0..nc {
        for (space, base) in [(h, u), (z, w), (qs, p)] {
            for &d in space.cell_dofs(cell) {
                groups[base + d] = cell;
            }
        }
    }
    sys.groups = Some(groups);
    Ok(sys)
}
