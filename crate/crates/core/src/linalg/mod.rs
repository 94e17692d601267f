//! Sparse storage and direct solvers.

mod multifrontal;
mod sparse;

use std::sync::Arc;

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Par};

pub use multifrontal::MultifrontalSymbolic;
pub use sparse::{SparseMatrix, TripletBuilder};

use crate::error::{OseenError, Result};

/// Which factorisation backs a solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Multifrontal first, unrestricted sparse LU if a pivot collapses.
    #[default]
    Auto,
    /// Sparse LU with partial pivoting over the whole matrix.
    General,
    /// Multifrontal LU with pivoting inside each front.
    Multifrontal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    General,
    Multifrontal,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub strategy: Strategy,
    /// Relative residual `‖Ax − b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)` above which the
    /// solve is reported as inaccurate.
    pub tolerance: f64,
    pub refine_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            strategy: Strategy::Auto,
            tolerance: 1e-9,
            refine_steps: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub backend: Backend,
    pub n: usize,
    pub matrix_nnz: usize,
    pub factor_nnz: usize,
    /// Relative residual after refinement.
    pub residual: f64,
    pub refinement_steps: usize,
    pub success: bool,
}

/// Reusable analysis of a sparsity pattern.
#[derive(Clone)]
pub enum SymbolicFactor {
    General(SymbolicLu<usize>),
    Multifrontal(Arc<MultifrontalSymbolic>),
}

enum Numeric {
    General(Lu<usize, f64>),
    Multifrontal(multifrontal::MultifrontalLu),
}

/// Numeric factorisation tied to the matrix it was computed from.
pub struct LuFactor<'a> {
    a: &'a SparseMatrix,
    symbolic: SymbolicFactor,
    numeric: Numeric,
    opts: SolverOptions,
    a_norm: f64,
}

/// Parallelism for dense kernels, honouring `OSEEN_THREADS`.
pub fn parallelism() -> Par {
    let n = thread_count();
    if n <= 1 {
        Par::Seq
    } else {
        Par::rayon(n)
    }
}

/// Thread budget: `OSEEN_THREADS` if set, otherwise the available cores.
pub fn thread_count() -> usize {
    std::env::var("OSEEN_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn to_faer(a: &SparseMatrix) -> Result<SparseColMat<usize, f64>> {
    // CSR of A is CSC of Aᵀ; transpose once to get CSC of A.
    let t = a.transpose();
    let sym = SymbolicSparseColMat::new_checked(a.nrows(), a.ncols(), t.row_ptr().to_vec(), None, t.col_idx().to_vec());
    Ok(SparseColMat::new(sym, t.values().to_vec()))
}

fn general_symbolic(a: &SparseMatrix) -> Result<SymbolicFactor> {
    let m = to_faer(a)?;
    let s = SymbolicLu::try_new(m.symbolic()).map_err(|e| OseenError::Backend(format!("{e:?}")))?;
    Ok(SymbolicFactor::General(s))
}

/// Analyses the pattern of `a` for the requested strategy.
pub fn analyse(a: &SparseMatrix, strategy: Strategy) -> Result<SymbolicFactor> {
    analyse_grouped(a, strategy, None)
}

/// As [`analyse`], with unknowns grouped for the multifrontal ordering (see
/// [`MultifrontalSymbolic::analyse_grouped`]).
pub fn analyse_grouped(a: &SparseMatrix, strategy: Strategy, groups: Option<&[usize]>) -> Result<SymbolicFactor> {
    if a.nrows() != a.ncols() {
        return Err(OseenError::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    match strategy {
        Strategy::General => general_symbolic(a),
        Strategy::Auto | Strategy::Multifrontal => {
            Ok(SymbolicFactor::Multifrontal(Arc::new(MultifrontalSymbolic::analyse_grouped(a, groups)?)))
        }
    }
}

fn inf_norm(a: &SparseMatrix) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Factorises `a` from scratch.
pub fn lu_factor<'a>(a: &'a SparseMatrix, opts: &SolverOptions) -> Result<LuFactor<'a>> {
    let symbolic = analyse(a, opts.strategy)?;
    lu_factor_with(a, &symbolic, opts)
}

/// Factorises `a` reusing an earlier analysis of the same pattern.
pub fn lu_factor_with<'a>(a: &'a SparseMatrix, symbolic: &SymbolicFactor, opts: &SolverOptions) -> Result<LuFactor<'a>> {
    let a_norm = inf_norm(a);
    let par = parallelism();
    let numeric = match symbolic {
        SymbolicFactor::General(s) => general_numeric(a, s)?,
        SymbolicFactor::Multifrontal(s) => match multifrontal::factor(s, a, par) {
            Ok(f) => Numeric::Multifrontal(f),
            Err(e) if opts.strategy == Strategy::Auto => {
                log::warn!("multifrontal factorisation failed ({e}); falling back to general LU");
                let g = general_symbolic(a)?;
                let SymbolicFactor::General(s) = &g else { unreachable!() };
                let n = general_numeric(a, s)?;
                return Ok(LuFactor {
                    a,
                    symbolic: g,
                    numeric: n,
                    opts: *opts,
                    a_norm,
                });
            }
            Err(e) => return Err(e),
        },
    };
    Ok(LuFactor {
        a,
        symbolic: symbolic.clone(),
        numeric,
        opts: *opts,
        a_norm,
    })
}

fn general_numeric(a: &SparseMatrix, s: &SymbolicLu<usize>) -> Result<Numeric> {
    let m = to_faer(a)?;
    let lu = Lu::try_new_with_symbolic(s.clone(), m.as_ref()).map_err(|e| match e {
        faer::sparse::linalg::LuError::SymbolicSingular { index } => OseenError::SingularMatrix { pivot: Some(index) },
        other => OseenError::Backend(format!("{other:?}")),
    })?;
    Ok(Numeric::General(lu))
}

impl LuFactor<'_> {
    pub fn symbolic(&self) -> &SymbolicFactor {
        &self.symbolic
    }

    pub fn backend(&self) -> Backend {
        match self.numeric {
            Numeric::General(_) => Backend::General,
            Numeric::Multifrontal(_) => Backend::Multifrontal,
        }
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        match (&self.numeric, &self.symbolic) {
            (Numeric::General(lu), _) => {
                use faer::linalg::solvers::Solve;
                let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
                let x = lu.solve(&rhs);
                (0..b.len()).map(|i| x[(i, 0)]).collect()
            }
            (Numeric::Multifrontal(f), SymbolicFactor::Multifrontal(s)) => f.solve(s, b, parallelism()),
            _ => unreachable!("numeric and symbolic factors disagree"),
        }
    }

    fn factor_nnz(&self) -> usize {
        match (&self.numeric, &self.symbolic) {
            (Numeric::General(lu), _) => {
                let _ = lu;
                0
            }
            (Numeric::Multifrontal(_), SymbolicFactor::Multifrontal(s)) => s.factor_nnz(),
            _ => 0,
        }
    }

    /// Solves `A x = b` with iterative refinement. An inaccurate result is an
    /// error; the report is returned alongside successful solutions.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let n = self.a.nrows();
        if b.len() != n {
            return Err(OseenError::DimensionMismatch { expected: n, got: b.len() });
        }
        let b_norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rel = |x: &[f64], r: &[f64]| {
            let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let d = self.a_norm * xn + b_norm;
            if d == 0.0 {
                0.0
            } else {
                rn / d
            }
        };
        let residual = |x: &[f64]| -> Vec<f64> {
            let ax = self.a.mul_vec(x);
            b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect()
        };
        // Componentwise backward error max |r_i| / (|A||x| + |b|)_i drives the
        // refinement, so rows with small entries (the divergence rows) are
        // resolved as well as the large ones.
        let backward = |x: &[f64], r: &[f64]| {
            let ax = self.a.abs_mul_vec(x);
            r.iter().zip(ax.iter().zip(b)).fold(0.0f64, |m, (ri, (ai, bi))| {
                let d = ai + bi.abs();
                if d == 0.0 {
                    m
                } else {
                    m.max(ri.abs() / d)
                }
            })
        };
        let mut x = self.raw_solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OseenError::SingularMatrix { pivot: None });
        }
        let mut r = residual(&x);
        let mut berr = backward(&x, &r);
        let mut steps = 0;
        while steps < self.opts.refine_steps && berr > 2.0 * f64::EPSILON {
            let dx = self.raw_solve(&r);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let tr = residual(&trial);
            let tb = backward(&trial, &tr);
            steps += 1;
            if !(tb < berr) {
                break;
            }
            x = trial;
            r = tr;
            berr = tb;
        }
        let res = rel(&x, &r);
        let report = SolveReport {
            backend: self.backend(),
            n,
            matrix_nnz: self.a.nnz(),
            factor_nnz: self.factor_nnz(),
            residual: res,
            refinement_steps: steps,
            success: res <= self.opts.tolerance,
        };
        log::debug!("solve: {report:?}");
        if !report.success {
            return Err(OseenError::InaccurateSolve {
                residual: res,
                tolerance: self.opts.tolerance,
            });
        }
        Ok((x, report))
    }
}

/// One-shot `A x = b`.
pub fn solve(a: &SparseMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    lu_factor(a, opts)?.solve(b)
}
