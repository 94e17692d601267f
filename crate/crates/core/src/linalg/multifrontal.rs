//! Multifrontal LU on the symmetrised pattern of `A`.
//!
//! The fill-reducing ordering and the supernodal elimination tree come from
//! the symbolic Cholesky analysis of `A + Aᵀ` (approximate minimum degree).
//! Each front is factorised densely with partial pivoting restricted to its
//! fully summed rows. That is enough for matrices whose symmetric part is
//! positive definite on every principal subspace, which covers the DG
//! systems; a pivot that collapses is reported so the caller can fall back to
//! a factorisation with unrestricted pivoting.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::factor::{lu_in_place, lu_in_place_scratch};
use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_unit_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymbolicCholeskyRaw, SymmetricOrdering,
};
use faer::perm::PermRef;
use faer::sparse::linalg::{amd, SupernodalThreshold};
use faer::sparse::SymbolicSparseColMat;
use faer::reborrow::{Reborrow, ReborrowMut};
use faer::{Accum, Mat, Par, Side};

use super::SparseMatrix;
use crate::error::{OseenError, Result};

/// Ordering, supernode partition and column access of one sparsity pattern.
#[derive(Debug)]
pub struct MultifrontalSymbolic {
    n: usize,
    nnz: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    perm_inv: Vec<usize>,
    begin: Vec<usize>,
    patterns: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    csc_ptr: Vec<usize>,
    csc_row: Vec<u32>,
    csc_pos: Vec<u32>,
}

/// Fill-reducing order that keeps each group contiguous: minimum degree on
/// the quotient graph of the groups, members in ascending index within a
/// group.
fn grouped_ordering(a: &SparseMatrix, groups: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = a.nrows();
    let ng = groups.iter().max().map_or(0, |g| g + 1);
    let mut upper: Vec<Vec<usize>> = vec![Vec::new(); ng];
    for i in 0..n {
        for &j in &a.col_idx()[a.row_ptr()[i]..a.row_ptr()[i + 1]] {
            let (gi, gj) = (groups[i], groups[j]);
            if gi != gj {
                upper[gi.max(gj)].push(gi.min(gj));
            }
        }
    }
    let mut col_ptr = vec![0usize];
    let mut row_idx = Vec::new();
    for col in &mut upper {
        col.sort_unstable();
        col.dedup();
        row_idx.append(col);
        col_ptr.push(row_idx.len());
    }
    let nnz = row_idx.len();
    let pattern = SymbolicSparseColMat::new_checked(ng, ng, col_ptr, None, row_idx);
    let mut gperm = vec![0usize; ng];
    let mut ginv = vec![0usize; ng];
    let mut mem = MemBuffer::new(amd::order_maybe_unsorted_scratch::<usize>(ng, nnz));
    amd::order_maybe_unsorted(&mut gperm, &mut ginv, pattern.as_ref(), amd::Control::default(), MemStack::new(&mut mem))
        .map_err(|e| OseenError::Backend(format!("ordering failed: {e:?}")))?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ng];
    for (i, &g) in groups.iter().enumerate() {
        members[g].push(i);
    }
    let perm: Vec<usize> = gperm.iter().flat_map(|&g| members[g].iter().copied()).collect();
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    Ok((perm, inv))
}

impl MultifrontalSymbolic {
    pub fn analyse(a: &SparseMatrix) -> Result<Self> {
        Self::analyse_grouped(a, None)
    }

    /// As [`analyse`](Self::analyse), eliminating the members of each group
    /// together (`groups[i]` is the group of unknown `i`).
    pub fn analyse_grouped(a: &SparseMatrix, groups: Option<&[usize]>) -> Result<Self> {
        let n = a.nrows();
        if let Some(g) = groups {
            if g.len() != n {
                return Err(OseenError::DimensionMismatch { expected: n, got: g.len() });
            }
        }
        if n != a.ncols() {
            return Err(OseenError::DimensionMismatch { expected: n, got: a.ncols() });
        }
        if a.nnz() >= u32::MAX as usize {
            return Err(OseenError::Backend("matrix too large for the multifrontal solver".into()));
        }
        // Column access: csc_row/csc_pos list, for each column, the rows and
        // the CSR positions of its entries.
        let mut csc_ptr = vec![0usize; n + 1];
        for &c in a.col_idx() {
            csc_ptr[c + 1] += 1;
        }
        for j in 0..n {
            csc_ptr[j + 1] += csc_ptr[j];
        }
        let mut next = csc_ptr.clone();
        let mut csc_row = vec![0u32; a.nnz()];
        let mut csc_pos = vec![0u32; a.nnz()];
        for i in 0..n {
            for p in a.row_ptr()[i]..a.row_ptr()[i + 1] {
                let j = a.col_idx()[p];
                csc_row[next[j]] = i as u32;
                csc_pos[next[j]] = p as u32;
                next[j] += 1;
            }
        }

        // Upper triangle (including the diagonal) of the pattern of A + Aᵀ,
        // column-major.
        let mut upper: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            upper[i].push(i);
            for &j in &a.col_idx()[a.row_ptr()[i]..a.row_ptr()[i + 1]] {
                let (r, c) = (i.min(j), i.max(j));
                upper[c].push(r);
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0usize);
        for col in &mut upper {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
            *col = Vec::new();
        }
        drop(upper);
        let pattern = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let params = CholeskySymbolicParams {
            supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
            ..Default::default()
        };
        let custom = groups.map(|g| grouped_ordering(a, g)).transpose()?;
        let ordering = match &custom {
            Some((fwd, inv)) => SymmetricOrdering::Custom(PermRef::new_checked(fwd, inv, n)),
            None => SymmetricOrdering::Amd,
        };
        let sym = factorize_symbolic_cholesky(pattern.as_ref(), Side::Upper, ordering, params)
            .map_err(|e| OseenError::Backend(format!("symbolic analysis failed: {e:?}")))?;
        drop(pattern);
        let (perm, perm_inv) = match sym.perm() {
            Some(p) => {
                let (f, i) = p.arrays();
                (f.to_vec(), i.to_vec())
            }
            None => ((0..n).collect(), (0..n).collect()),
        };
        // Tiny or diagonal patterns may come back simplicial; those become
        // one-column supernodes.
        let (begin, patterns): (Vec<usize>, Vec<Vec<usize>>) = match sym.raw() {
            SymbolicCholeskyRaw::Supernodal(sn) => {
                let ns = sn.n_supernodes();
                let mut begin: Vec<usize> = sn.supernode_begin().to_vec();
                begin.push(*sn.supernode_end().last().unwrap_or(&0));
                (begin, (0..ns).map(|s| sn.supernode(s).pattern().to_vec()).collect())
            }
            SymbolicCholeskyRaw::Simplicial(sc) => {
                let (cp, ri) = (sc.col_ptr(), sc.row_idx());
                let patterns = (0..n)
                    .map(|j| {
                        let mut v: Vec<usize> = ri[cp[j]..cp[j + 1]].iter().copied().filter(|&r| r > j).collect();
                        v.sort_unstable();
                        v
                    })
                    .collect();
                ((0..=n).collect(), patterns)
            }
        };
        let ns = patterns.len();
        let mut owner = vec![0usize; n];
        for s in 0..ns {
            for c in begin[s]..begin[s + 1] {
                owner[c] = s;
            }
        }
        let mut children = vec![Vec::new(); ns];
        for (s, pat) in patterns.iter().enumerate() {
            if let Some(&first) = pat.first() {
                let parent = owner[first];
                debug_assert!(parent > s);
                children[parent].push(s);
            }
        }
        Ok(MultifrontalSymbolic {
            n,
            nnz: a.nnz(),
            perm,
            perm_inv,
            begin,
            patterns,
            children,
            csc_ptr,
            csc_row,
            csc_pos,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether `a` has the pattern this analysis was computed for (cheap check).
    pub fn matches(&self, a: &SparseMatrix) -> bool {
        a.nrows() == self.n && a.nnz() == self.nnz
    }

    /// Number of stored factor entries.
    pub fn factor_nnz(&self) -> usize {
        (0..self.patterns.len())
            .map(|s| {
                let k = self.begin[s + 1] - self.begin[s];
                let m = k + self.patterns[s].len();
                2 * m * k - k * k
            })
            .sum()
    }
}

struct Front {
    /// Row permutation of the fully summed block: row `i` of `P F11` is row
    /// `piv[i]` of `F11`.
    piv: Vec<usize>,
    /// `m × k`: unit-lower `L11` and `U11` packed in the top `k` rows, `L21` below.
    lower: Mat<f64>,
    /// `k × (m − k)` block `U12`.
    upper: Mat<f64>,
}

pub struct MultifrontalLu {
    fronts: Vec<Front>,
}

pub fn factor(sym: &MultifrontalSymbolic, a: &SparseMatrix, par: Par) -> Result<MultifrontalLu> {
    if !sym.matches(a) {
        return Err(OseenError::Backend("matrix pattern differs from the symbolic analysis".into()));
    }
    let n = sym.n;
    let ns = sym.patterns.len();
    let vals = a.values();
    let mut pos = vec![usize::MAX; n];
    let mut contrib: Vec<Option<Mat<f64>>> = (0..ns).map(|_| None).collect();
    let mut fronts = Vec::with_capacity(ns);
    for s in 0..ns {
        let (c0, c1) = (sym.begin[s], sym.begin[s + 1]);
        let k = c1 - c0;
        let pat = &sym.patterns[s];
        let m = k + pat.len();
        for (l, g) in (c0..c1).chain(pat.iter().copied()).enumerate() {
            pos[g] = l;
        }
        let mut f = Mat::<f64>::zeros(m, m);
        for j in c0..c1 {
            let oj = sym.perm[j];
            for e in sym.csc_ptr[oj]..sym.csc_ptr[oj + 1] {
                let i = sym.perm_inv[sym.csc_row[e] as usize];
                if i >= c0 {
                    f[(pos[i], j - c0)] += vals[sym.csc_pos[e] as usize];
                }
            }
        }
        for i in c0..c1 {
            let (cols, v) = a.row(sym.perm[i]);
            for (&oj, &x) in cols.iter().zip(v) {
                let j = sym.perm_inv[oj];
                if j >= c1 {
                    f[(i - c0, pos[j])] += x;
                }
            }
        }
        for &ch in &sym.children[s] {
            let u = contrib[ch].take().expect("child contribution consumed twice");
            let cp = &sym.patterns[ch];
            for (b, &gj) in cp.iter().enumerate() {
                let lj = pos[gj];
                for (r, &gi) in cp.iter().enumerate() {
                    f[(pos[gi], lj)] += u[(r, b)];
                }
            }
        }

        let mut scale: f64 = 0.0;
        for j in 0..k {
            for i in 0..m {
                scale = scale.max(f[(i, j)].abs());
            }
        }
        let mut piv_fwd = vec![0usize; k];
        let mut piv_inv = vec![0usize; k];
        {
            let mut mem = MemBuffer::new(lu_in_place_scratch::<usize, f64>(k, k, par, Default::default()));
            let stack = MemStack::new(&mut mem);
            let (f11, _, _, _) = f.as_mut().split_at_mut(k, k);
            lu_in_place(f11, &mut piv_fwd, &mut piv_inv, par, stack, Default::default());
        }
        for i in 0..k {
            let d = f[(i, i)];
            if !d.is_finite() || d.abs() <= 1e-14 * scale || scale == 0.0 {
                return Err(OseenError::SingularMatrix { pivot: Some(sym.perm[c0 + i]) });
            }
        }
        if m > k {
            let (f11, mut f12, mut f21, mut f22) = f.as_mut().split_at_mut(k, k);
            let rows: Mat<f64> = Mat::from_fn(k, m - k, |i, j| f12[(piv_fwd[i], j)]);
            f12.copy_from(&rows);
            solve_unit_lower_triangular_in_place(f11.rb(), f12.rb_mut(), par);
            solve_lower_triangular_in_place(f11.rb().transpose(), f21.rb_mut().transpose_mut(), par);
            matmul(f22.rb_mut(), Accum::Add, f21.rb(), f12.rb(), -1.0, par);
        }
        let lower = f.as_ref().submatrix(0, 0, m, k).to_owned();
        let upper = f.as_ref().submatrix(0, k, k, m - k).to_owned();
        if m > k {
            contrib[s] = Some(f.as_ref().submatrix(k, k, m - k, m - k).to_owned());
        }
        drop(f);
        fronts.push(Front {
            piv: piv_fwd,
            lower,
            upper,
        });
    }
    Ok(MultifrontalLu { fronts })
}

impl MultifrontalLu {
    pub fn solve(&self, sym: &MultifrontalSymbolic, b: &[f64], par: Par) -> Vec<f64> {
        let n = sym.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[sym.perm[i]]).collect();
        for (s, fr) in self.fronts.iter().enumerate() {
            let (c0, c1) = (sym.begin[s], sym.begin[s + 1]);
            let k = c1 - c0;
            let pat = &sym.patterns[s];
            let mut z = Mat::from_fn(k, 1, |i, _| y[c0 + fr.piv[i]]);
            let l11 = fr.lower.as_ref().submatrix(0, 0, k, k);
            solve_unit_lower_triangular_in_place(l11, z.as_mut(), par);
            for i in 0..k {
                y[c0 + i] = z[(i, 0)];
            }
            if !pat.is_empty() {
                let l21 = fr.lower.as_ref().submatrix(k, 0, pat.len(), k);
                let mut t = Mat::<f64>::zeros(pat.len(), 1);
                matmul(t.as_mut(), Accum::Replace, l21, z.as_ref(), 1.0, par);
                for (r, &g) in pat.iter().enumerate() {
                    y[g] -= t[(r, 0)];
                }
            }
        }
        for (s, fr) in self.fronts.iter().enumerate().rev() {
            let (c0, c1) = (sym.begin[s], sym.begin[s + 1]);
            let k = c1 - c0;
            let pat = &sym.patterns[s];
            let mut z = Mat::from_fn(k, 1, |i, _| y[c0 + i]);
            if !pat.is_empty() {
                let xp = Mat::from_fn(pat.len(), 1, |r, _| y[pat[r]]);
                matmul(z.as_mut(), Accum::Add, fr.upper.as_ref(), xp.as_ref(), -1.0, par);
            }
            let u11 = fr.lower.as_ref().submatrix(0, 0, k, k);
            solve_upper_triangular_in_place(u11, z.as_mut(), par);
            for i in 0..k {
                y[c0 + i] = z[(i, 0)];
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[sym.perm[i]] = y[i];
        }
        x
    }
}
