//! Conforming mixed scheme: `RT_k` velocity, continuous `P_{k+1}` vorticity
//! and discontinuous `P_k` pressure.
//!
//! Block rows of the system, for unknowns `(u, ω, p, λ)`:
//!
//! ```text
//! [ A    B1 + C   B2   0 ] [u]   [F]
//! [ B1ᵀ  −D       0    0 ] [ω] = [G]
//! [ B2ᵀ  0        0    m ] [p]   [0]
//! [ 0    0        mᵀ   0 ] [λ]   [0]
//! ```
//!
//! with `A = σ(u, v)`, `B1 = √ν(curl ω, v)`, `B2 = −(p, div v)`,
//! `C = ν^{-1/2}(ω × β, v)`, `D = (ω, θ)` and `m = ∫ q`. The normal velocity
//! and the vorticity on Γ are essential and eliminated.

use crate::assembly::{
    assemble_with, block_matrix, cell_rule, dot, facet_points, facet_rule, load_vector, LocalBlock, Placement,
};
use crate::coefficient::{OseenParams, VectorCoefficient};
use crate::error::{OseenError, Result};
use crate::fespace::{rt_normal_moments, FeSpace, SpaceKind};
use crate::linalg::Strategy;
use crate::mesh::{FacetKind, Point};
use crate::system::{SaddleSystem, Scheme, Spaces};

fn velocity_degree(h: &FeSpace) -> usize {
    assert_eq!(h.kind(), SpaceKind::RaviartThomas, "velocity space must be Raviart-Thomas");
    h.degree()
}

/// `σ ∫ u·v` on the velocity space.
pub fn assemble_a(h: &FeSpace, sigma: f64) -> crate::linalg::SparseMatrix {
    let k = velocity_degree(h);
    let q = cell_rule(k);
    let n = h.n_dofs();
    block_matrix(n, n, h.mesh().n_cells(), |cell, out| {
        out.push(vector_mass(h, cell, &q.points, &q.weights, sigma));
    })
}

pub(crate) fn vector_mass(h: &FeSpace, cell: usize, pts: &[Point], w: &[f64], scale: f64) -> LocalBlock {
    let det = h.mesh().geometry(cell).det.abs();
    let b = h.vector_basis(cell, pts);
    let dofs = h.cell_dofs(cell).to_vec();
    let mut lb = LocalBlock::new(dofs.clone(), dofs);
    for (qi, wq) in w.iter().enumerate() {
        let wq = scale * wq * det;
        for i in 0..b.n {
            for j in 0..b.n {
                lb.add(i, j, wq * dot(b.v(qi, i), b.v(qi, j)));
            }
        }
    }
    lb
}

pub(crate) fn scalar_mass(z: &FeSpace, cell: usize, pts: &[Point], w: &[f64], scale: f64) -> LocalBlock {
    let det = z.mesh().geometry(cell).det.abs();
    let b = z.scalar_basis(cell, pts);
    let dofs = z.cell_dofs(cell).to_vec();
    let mut lb = LocalBlock::new(dofs.clone(), dofs);
    for (qi, wq) in w.iter().enumerate() {
        let wq = scale * wq * det;
        for i in 0..b.n {
            for j in 0..b.n {
                lb.add(i, j, wq * b.v(qi, i) * b.v(qi, j));
            }
        }
    }
    lb
}

/// Rows: velocity test functions; columns: vorticity trial functions.
/// `√ν ∫ curl θ_j · v_i + ν^{-1/2} ∫ θ_j (−β2 v_i1 + β1 v_i2)`, either part
/// optional.
pub(crate) fn b1c_kernel<'a>(h: &'a FeSpace, z: &'a FeSpace, nu: f64, beta: Option<&'a VectorCoefficient>, with_b1: bool, k: usize) -> impl Fn(usize, &mut Vec<LocalBlock>) + Sync + 'a {
    let q = cell_rule(k);
    let beta = beta.cloned();
    move |cell, out| {
        let mesh = h.mesh();
        let det = mesh.geometry(cell).det.abs();
        let bv = h.vector_basis(cell, &q.points);
        let bz = z.scalar_basis(cell, &q.points);
        let betas = beta.as_ref().map(|b| b.values(mesh, cell, &q.points));
        let mut lb = LocalBlock::new(h.cell_dofs(cell).to_vec(), z.cell_dofs(cell).to_vec());
        let (s1, s2) = (nu.sqrt(), 1.0 / nu.sqrt());
        for (qi, w) in q.weights.iter().enumerate() {
            let w = w * det;
            for i in 0..bv.n {
                let v = bv.v(qi, i);
                for j in 0..bz.n {
                    let mut val = 0.0;
                    if with_b1 {
                        val += s1 * dot(bz.curl(qi, j), v);
                    }
                    if let Some(b) = &betas {
                        let b = b[qi];
                        val += s2 * bz.v(qi, j) * (-b[1] * v[0] + b[0] * v[1]);
                    }
                    lb.add(i, j, w * val);
                }
            }
        }
        out.push(lb);
    }
}

/// `√ν ∫ curl θ · v`; rows velocity, columns vorticity.
pub fn assemble_b1(h: &FeSpace, z: &FeSpace, nu: f64) -> crate::linalg::SparseMatrix {
    let k = velocity_degree(h);
    block_matrix(h.n_dofs(), z.n_dofs(), h.mesh().n_cells(), b1c_kernel(h, z, nu, None, true, k))
}

/// `ν^{-1/2} ∫ (θ × β)·v`; rows velocity, columns vorticity.
pub fn assemble_c(z: &FeSpace, h: &FeSpace, nu: f64, beta: &VectorCoefficient) -> crate::linalg::SparseMatrix {
    let k = velocity_degree(h);
    block_matrix(h.n_dofs(), z.n_dofs(), h.mesh().n_cells(), b1c_kernel(h, z, nu, Some(beta), false, k))
}

pub(crate) fn b2_kernel<'a>(h: &'a FeSpace, qs: &'a FeSpace, k: usize) -> impl Fn(usize, &mut Vec<LocalBlock>) + Sync + 'a {
    let q = cell_rule(k);
    move |cell, out| {
        let det = h.mesh().geometry(cell).det.abs();
        let bv = h.vector_basis(cell, &q.points);
        let bq = qs.scalar_basis(cell, &q.points);
        let mut lb = LocalBlock::new(h.cell_dofs(cell).to_vec(), qs.cell_dofs(cell).to_vec());
        for (qi, w) in q.weights.iter().enumerate() {
            let w = w * det;
            for i in 0..bv.n {
                for j in 0..bq.n {
                    lb.add(i, j, -w * bq.v(qi, j) * bv.d(qi, i));
                }
            }
        }
        out.push(lb);
    }
}

/// `−∫ q div v`; rows velocity, columns pressure.
pub fn assemble_b2(h: &FeSpace, qs: &FeSpace) -> crate::linalg::SparseMatrix {
    let k = velocity_degree(h);
    block_matrix(h.n_dofs(), qs.n_dofs(), h.mesh().n_cells(), b2_kernel(h, qs, k))
}

/// `∫ ω θ` on the vorticity space.
pub fn assemble_d(z: &FeSpace) -> crate::linalg::SparseMatrix {
    let q = crate::fespace::Quadrature::triangle(2 * z.polynomial_degree() + 2);
    let n = z.n_dofs();
    block_matrix(n, n, z.mesh().n_cells(), |cell, out| {
        out.push(scalar_mass(z, cell, &q.points, &q.weights, 1.0));
    })
}

/// `∫ q_j` for every pressure basis function.
pub fn pressure_means(qs: &FeSpace) -> Vec<f64> {
    let q = crate::fespace::Quadrature::triangle(qs.polynomial_degree());
    load_vector(qs.n_dofs(), qs.mesh().n_cells(), |cell, out| {
        let det = qs.mesh().geometry(cell).det.abs();
        let b = qs.scalar_basis(cell, &q.points);
        for (i, d) in qs.cell_dofs(cell).iter().enumerate() {
            let s: f64 = q.weights.iter().enumerate().map(|(qi, w)| w * det * b.v(qi, i)).sum();
            out.push((*d, s));
        }
    })
}

pub(crate) fn check_sigma_data(params: &OseenParams, spaces: &Spaces) -> Result<()> {
    if params.has_sigma_data() && !spaces.mesh().has_sigma() {
        return Err(OseenError::SigmaDataOnGamma);
    }
    Ok(())
}

/// `[F, G, 0]` with `F(v) = ∫ f·v − ⟨v·n, p_Σ⟩_Σ` and
/// `G(θ) = √ν ⟨u×n, θ⟩_Σ`.
pub fn assemble_rhs(params: &OseenParams, spaces: &Spaces) -> Result<Vec<f64>> {
    check_sigma_data(params, spaces)?;
    let (h, z) = (&*spaces.velocity, &*spaces.vorticity);
    let k = velocity_degree(h);
    let mesh = spaces.mesh();
    let q = cell_rule(k);
    let nu_s = params.nu.sqrt();
    let (nu_, nw) = (h.n_dofs(), z.n_dofs());
    let mut rhs = vec![0.0; nu_ + nw + spaces.pressure.n_dofs()];
    if !params.f.is_zero() {
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
    if params.has_sigma_data() {
        let fq = facet_rule(k);
        let sigma_links: Vec<usize> = (0..mesh.links().len()).filter(|&l| mesh.links()[l].kind == FacetKind::Sigma).collect();
        let contrib = crate::assembly::collect_ordered(sigma_links.len(), |li, out: &mut Vec<(usize, f64)>| {
            let link = &mesh.links()[sigma_links[li]];
            let fp = facet_points(mesh, link, &fq);
            let cell = link.plus.cell;
            let n = link.normal;
            let bv = h.vector_basis(cell, &fp.plus);
            let bz = z.scalar_basis(cell, &fp.plus);
            for (qi, (x, w)) in fp.x.iter().zip(&fp.w).enumerate() {
                let ps = params.p_sigma.at(*x);
                let us = params.u_sigma.at(*x, n);
                for (i, d) in h.cell_dofs(cell).iter().enumerate() {
                    out.push((*d, -w * ps * dot(bv.v(qi, i), n)));
                }
                for (i, d) in z.cell_dofs(cell).iter().enumerate() {
                    out.push((nu_ + d, w * nu_s * us * bz.v(qi, i)));
                }
            }
        });
        for (i, v) in contrib {
            rhs[i] += v;
        }
    }
    Ok(rhs)
}

/// Essential values on Γ: normal moments of `u·n` for the velocity and
/// nodal values of `ω` for the vorticity. Indices are global in `[u, ω]`.
pub fn essential_values(params: &OseenParams, spaces: &Spaces) -> Vec<(usize, f64)> {
    let (h, z) = (&*spaces.velocity, &*spaces.vorticity);
    let mesh = spaces.mesh();
    let mut out = Vec::new();
    for (li, link) in mesh.links().iter().enumerate() {
        if link.kind != FacetKind::Gamma {
            continue;
        }
        let dofs = h.link_dofs(li);
        let vals = if params.gamma_normal.is_zero() {
            vec![0.0; dofs.len()]
        } else {
            rt_normal_moments(h, li, |x| params.gamma_normal.at(x, link.normal))
        };
        out.extend(dofs.into_iter().zip(vals));
    }
    let gdofs = z.boundary_dofs(FacetKind::Gamma);
    if !gdofs.is_empty() {
        let mut pos = vec![None; z.n_dofs()];
        for cell in 0..mesh.n_cells() {
            for (d, x) in z.cell_dofs(cell).iter().zip(z.cell_nodes(cell)) {
                pos[*d].get_or_insert(x);
            }
        }
        let nu_ = h.n_dofs();
        for d in gdofs {
            let x = pos[d].expect("every vorticity DoF has a node");
            out.push((nu_ + d, params.gamma_vorticity.at(x)));
        }
    }
    out
}

/// Full mixed system. With `zero_mean` a multiplier enforces `∫ p = 0`;
/// without it Σ must be non-empty.
pub fn assemble_mixed_system(params: &OseenParams, spaces: &Spaces, zero_mean: bool) -> Result<SaddleSystem> {
    params.validate()?;
    if spaces.scheme != Scheme::Mixed {
        return Err(OseenError::InconsistentSpaces(format!("expected mixed spaces, got {}", spaces.scheme)));
    }
    spaces.check()?;
    let mesh = spaces.mesh();
    if !zero_mean && !mesh.has_sigma() {
        return Err(OseenError::NoPressureGauge);
    }
    let (h, z, qs) = (&*spaces.velocity, &*spaces.vorticity, &*spaces.pressure);
    let k = spaces.k;
    let off = spaces.offsets(zero_mean);
    let nc = mesh.n_cells();
    let qr = cell_rule(k);
    let mut trip = assemble_with(nc, &[Placement::at(off.u(), off.u(), 1.0)], |cell, out| {
        out.push(vector_mass(h, cell, &qr.points, &qr.weights, params.sigma));
    });
    trip.extend(assemble_with(nc, &[Placement::at(off.u(), off.w(), 1.0)], b1c_kernel(h, z, params.nu, Some(&params.beta), true, k)));
    trip.extend(assemble_with(nc, &[Placement::transposed(off.w(), off.u(), 1.0)], b1c_kernel(h, z, params.nu, None, true, k)));
    trip.extend(assemble_with(nc, &[Placement::at(off.u(), off.p(), 1.0), Placement::transposed(off.p(), off.u(), 1.0)], b2_kernel(h, qs, k)));
    let qd = crate::fespace::Quadrature::triangle(2 * z.polynomial_degree() + 2);
    trip.extend(assemble_with(nc, &[Placement::at(off.w(), off.w(), -1.0)], |cell, out| {
        out.push(scalar_mass(z, cell, &qd.points, &qd.weights, 1.0));
    }));
    if let Some(l) = off.lambda() {
        for (j, m) in pressure_means(qs).into_iter().enumerate() {
            trip.push(((off.p() + j) as u32, l as u32, m));
            trip.push((l as u32, (off.p() + j) as u32, m));
        }
        trip.push((l as u32, l as u32, 0.0));
    }
    let mut rhs = assemble_rhs(params, spaces)?;
    rhs.resize(off.total(), 0.0);
    let fixed = essential_values(params, spaces);
    Ok(SaddleSystem::from_triplets(trip, rhs, off, &fixed, Strategy::General))
}
