//! Discrete spaces of a scheme, the coupled saddle-point system and its
//! solution.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::Triplet;
use crate::error::{OseenError, Result};
use crate::fespace::{FeFunction, FeSpace, SpaceKind};
use crate::linalg::{lu_factor_with, LuFactor, SolveReport, SolverOptions, SparseMatrix, Strategy, SymbolicFactor, TripletBuilder};
use crate::mesh::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `RT_k × P_{k+1} × P_k-disc`.
    Mixed,
    /// `P_{k+1}-disc² × P_k-disc × P_k-disc`.
    Dg,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Mixed => "mixed",
            Scheme::Dg => "dg",
        })
    }
}

impl FromStr for Scheme {
    type Err = OseenError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mixed" => Ok(Scheme::Mixed),
            "dg" => Ok(Scheme::Dg),
            other => Err(OseenError::Config(format!("unknown scheme '{other}' (expected mixed or dg)"))),
        }
    }
}

/// Velocity, vorticity and pressure spaces of one scheme.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub scheme: Scheme,
    pub k: usize,
    pub velocity: Arc<FeSpace>,
    pub vorticity: Arc<FeSpace>,
    pub pressure: Arc<FeSpace>,
}

impl Spaces {
    pub fn new(mesh: Arc<Mesh>, scheme: Scheme, k: usize) -> Result<Self> {
        let (velocity, vorticity) = match scheme {
            Scheme::Mixed => (
                FeSpace::raviart_thomas(mesh.clone(), k)?,
                FeSpace::lagrange(mesh.clone(), k + 1)?,
            ),
            Scheme::Dg => (
                FeSpace::vector_discontinuous(mesh.clone(), k + 1)?,
                FeSpace::discontinuous(mesh.clone(), k)?,
            ),
        };
        let pressure = FeSpace::discontinuous(mesh, k)?;
        Ok(Spaces {
            scheme,
            k,
            velocity: Arc::new(velocity),
            vorticity: Arc::new(vorticity),
            pressure: Arc::new(pressure),
        })
    }

    pub fn mixed(mesh: Arc<Mesh>, k: usize) -> Result<Self> {
        Self::new(mesh, Scheme::Mixed, k)
    }

    pub fn dg(mesh: Arc<Mesh>, k: usize) -> Result<Self> {
        Self::new(mesh, Scheme::Dg, k)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.velocity.mesh()
    }

    /// Checks that the spaces fit the scheme and share one mesh.
    pub fn check(&self) -> Result<()> {
        let (hv, zv) = match self.scheme {
            Scheme::Mixed => (SpaceKind::RaviartThomas, SpaceKind::Lagrange),
            Scheme::Dg => (SpaceKind::VectorDiscontinuous, SpaceKind::Discontinuous),
        };
        let m = self.velocity.mesh();
        let ok = self.velocity.kind() == hv
            && self.vorticity.kind() == zv
            && self.pressure.kind() == SpaceKind::Discontinuous
            && Arc::ptr_eq(m, self.vorticity.mesh())
            && Arc::ptr_eq(m, self.pressure.mesh());
        if ok {
            Ok(())
        } else {
            Err(OseenError::InconsistentSpaces(format!("{} spaces do not fit the scheme or mesh", self.scheme)))
        }
    }

    pub fn offsets(&self, multiplier: bool) -> BlockOffsets {
        BlockOffsets {
            n_u: self.velocity.n_dofs(),
            n_w: self.vorticity.n_dofs(),
            n_p: self.pressure.n_dofs(),
            multiplier,
        }
    }
}

/// Layout of the unknown vector `[u, ω, p, (λ)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockOffsets {
    pub n_u: usize,
    pub n_w: usize,
    pub n_p: usize,
    pub multiplier: bool,
}

impl BlockOffsets {
    pub fn u(&self) -> usize {
        0
    }

    pub fn w(&self) -> usize {
        self.n_u
    }

    pub fn p(&self) -> usize {
        self.n_u + self.n_w
    }

    pub fn lambda(&self) -> Option<usize> {
        self.multiplier.then_some(self.n_u + self.n_w + self.n_p)
    }

    pub fn total(&self) -> usize {
        self.n_u + self.n_w + self.n_p + usize::from(self.multiplier)
    }
}

/// Assembled linear system of either scheme.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub offsets: BlockOffsets,
    /// Unknowns fixed by essential conditions (already eliminated).
    pub constrained: Vec<usize>,
    /// Factorisation best suited to the matrix structure.
    pub preferred: Strategy,
    /// Owning cell of each unknown when all of them are cell-local; used to
    /// keep a cell's unknowns together in the elimination order.
    pub groups: Option<Vec<usize>>,
}

impl SaddleSystem {
    /// Builds the matrix and applies essential values by symmetric
    /// elimination: the known columns move to the right-hand side and the
    /// constrained rows and columns become identity.
    pub(crate) fn from_triplets(
        triplets: Vec<Triplet>,
        mut rhs: Vec<f64>,
        offsets: BlockOffsets,
        fixed: &[(usize, f64)],
        preferred: Strategy,
    ) -> Self {
        let n = offsets.total();
        assert_eq!(rhs.len(), n);
        let mut t = TripletBuilder::new(n, n);
        t.extend_from(triplets);
        for &(i, _) in fixed {
            t.add(i, i, 0.0);
        }
        let mut matrix = t.build();
        let mut constrained: Vec<usize> = fixed.iter().map(|&(i, _)| i).collect();
        constrained.sort_unstable();
        constrained.dedup();
        if !fixed.is_empty() {
            let mut mask = vec![false; n];
            let mut g = vec![0.0; n];
            for &(i, v) in fixed {
                mask[i] = true;
                g[i] = v;
            }
            let ag = matrix.mul_vec(&g);
            for i in 0..n {
                rhs[i] = if mask[i] { g[i] } else { rhs[i] - ag[i] };
            }
            let row_ptr = matrix.row_ptr().to_vec();
            let cols = matrix.col_idx().to_vec();
            let vals = matrix.values_mut();
            for i in 0..n {
                for p in row_ptr[i]..row_ptr[i + 1] {
                    let j = cols[p];
                    if mask[i] || mask[j] {
                        vals[p] = if i == j { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        SaddleSystem {
            matrix,
            rhs,
            offsets,
            constrained,
            preferred,
            groups: None,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.total()
    }

    pub fn has_multiplier(&self) -> bool {
        self.offsets.multiplier
    }

    fn options(&self, opts: &SolverOptions) -> SolverOptions {
        let mut o = *opts;
        if o.strategy == Strategy::Auto && self.preferred != Strategy::Auto {
            o.strategy = self.preferred;
        }
        o
    }

    /// Factorises the matrix, reusing `symbolic` when given.
    pub fn factor(&self, symbolic: Option<&SymbolicFactor>, opts: &SolverOptions) -> Result<LuFactor<'_>> {
        let o = self.options(opts);
        match symbolic {
            Some(s) => lu_factor_with(&self.matrix, s, &o),
            None => {
                let s = crate::linalg::analyse_grouped(&self.matrix, o.strategy, self.groups.as_deref())?;
                lu_factor_with(&self.matrix, &s, &o)
            }
        }
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
        self.factor(None, opts)?.solve(&self.rhs)
    }
}

/// Discrete `(u_h, ω_h, p_h)` with the report of the solve that produced it.
#[derive(Clone, Debug)]
pub struct Solution {
    pub scheme: Scheme,
    pub u: FeFunction,
    pub omega: FeFunction,
    pub p: FeFunction,
    pub multiplier: Option<f64>,
    pub report: Option<SolveReport>,
}

impl Solution {
    pub fn from_vector(spaces: &Spaces, offsets: &BlockOffsets, x: &[f64], report: Option<SolveReport>) -> Result<Self> {
        if x.len() != offsets.total() {
            return Err(OseenError::DimensionMismatch {
                expected: offsets.total(),
                got: x.len(),
            });
        }
        Ok(Solution {
            scheme: spaces.scheme,
            u: FeFunction::new(spaces.velocity.clone(), x[offsets.u()..offsets.w()].to_vec())?,
            omega: FeFunction::new(spaces.vorticity.clone(), x[offsets.w()..offsets.p()].to_vec())?,
            p: FeFunction::new(spaces.pressure.clone(), x[offsets.p()..offsets.p() + offsets.n_p].to_vec())?,
            multiplier: offsets.lambda().map(|l| x[l]),
            report,
        })
    }

    pub fn zero(spaces: &Spaces) -> Self {
        Solution {
            scheme: spaces.scheme,
            u: FeFunction::zero(spaces.velocity.clone()),
            omega: FeFunction::zero(spaces.vorticity.clone()),
            p: FeFunction::zero(spaces.pressure.clone()),
            multiplier: None,
            report: None,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.u.coeffs.len() + self.omega.coeffs.len() + self.p.coeffs.len() + usize::from(self.multiplier.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, Rect};

    #[test]
    fn scheme_parsing() {
        assert_eq!("DG".parse::<Scheme>().unwrap(), Scheme::Dg);
        assert_eq!(Scheme::Mixed.to_string(), "mixed");
        assert!("cg".parse::<Scheme>().is_err());
    }

    #[test]
    fn dof_totals_on_coarsest_mesh() {
        let m = Arc::new(generate_structured(2, 2, Rect::unit()).unwrap());
        let cases = [(Scheme::Mixed, 0, 34), (Scheme::Mixed, 1, 98), (Scheme::Mixed, 2, 194), (Scheme::Dg, 0, 65), (Scheme::Dg, 1, 145), (Scheme::Dg, 2, 257)];
        for (s, k, n) in cases {
            let sp = Spaces::new(m.clone(), s, k).unwrap();
            sp.check().unwrap();
            assert_eq!(sp.offsets(true).total(), n, "{s} k={k}");
        }
    }

    #[test]
    fn elimination_fixes_values_and_keeps_pattern() {
        let offsets = BlockOffsets { n_u: 3, n_w: 0, n_p: 0, multiplier: false };
        let trip = vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, 2.0)];
        let s = SaddleSystem::from_triplets(trip, vec![1.0, 1.0, 1.0], offsets, &[(2, 5.0)], Strategy::General);
        assert_eq!(s.matrix.nnz(), 7);
        assert_eq!(s.rhs, vec![1.0, -4.0, 5.0]);
        let (x, _) = s.solve(&SolverOptions::default()).unwrap();
        assert!((x[2] - 5.0).abs() < 1e-14);
        assert!((2.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 2.0 * x[1] + 5.0 - 1.0).abs() < 1e-14);
    }
}
