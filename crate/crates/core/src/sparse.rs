//! Compressed-row matrices and the direct solver.
//!
//! Assembly works on a fixed list of `(row, col)` positions. [`Pattern::build`]
//! sorts them once into CSR form and records, for every position, the slot of
//! the value array it accumulates into, so repeated assemblies on the same mesh
//! reduce to a scatter.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use crate::error::{Error, Result};

/// CSR structure without values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl Pattern {
    /// Builds the pattern of a position list and the slot of every position.
    /// Duplicate positions share a slot.
    pub fn build(nrows: usize, ncols: usize, positions: &[(usize, usize)]) -> Result<(Self, Vec<usize>)> {
        if let Some(&(r, c)) = positions.iter().find(|&&(r, c)| r >= nrows || c >= ncols) {
            return Err(Error::Dimension(format!(
                "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
            )));
        }
        let mut order: Vec<usize> = (0..positions.len()).collect();
        order.sort_unstable_by_key(|&k| positions[k]);

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(positions.len() / 2);
        let mut slots = vec![0usize; positions.len()];
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let p = positions[k];
            if last != Some(p) {
                col_idx.push(p.1);
                row_ptr[p.0 + 1] += 1;
                last = Some(p);
            }
            slots[k] = col_idx.len() - 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok((
            Self {
                nrows,
                ncols,
                row_ptr,
                col_idx,
            },
            slots,
        ))
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Value slot of `(row, col)`, if stored.
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[row], self.row_ptr[row + 1]);
        self.col_idx[lo..hi].binary_search(&col).ok().map(|k| lo + k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub pattern: Pattern,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Pattern) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    /// Sums duplicate triplets.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let positions: Vec<(usize, usize)> = triplets.iter().map(|&(r, c, _)| (r, c)).collect();
        let (pattern, slots) = Pattern::build(nrows, ncols, &positions)?;
        let mut m = Self::zeros(pattern);
        for (&(_, _, v), &s) in triplets.iter().zip(&slots) {
            m.values[s] += v;
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets).expect("diagonal entries are in range")
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |s| self.values[s])
    }

    /// Column indices and values of one row.
    pub fn row(&self, row: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.pattern.row_ptr[row], self.pattern.row_ptr[row + 1]);
        (&self.pattern.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows())
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols()]; self.nrows()];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                row[j] += a;
            }
        }
        d
    }

    /// The block with rows `rows` and columns `cols`, keeping stored zeros.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CsrMatrix {
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in rows.clone() {
            let (cs, vs) = self.row(i);
            for (&j, &a) in cs.iter().zip(vs) {
                if cols.contains(&j) {
                    col_idx.push(j - cols.start);
                    values.push(a);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            pattern: Pattern {
                nrows: rows.len(),
                ncols: cols.len(),
                row_ptr,
                col_idx,
            },
            values,
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual `‖b − A x‖ / ‖b‖` (absolute when `b = 0`).
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let nb = norm2(b);
    if nb > 0.0 {
        norm2(&r) / nb
    } else {
        norm2(&r)
    }
}

/// Residual below which a solve is accepted.
pub const RESIDUAL_TOL: f64 = 1e-12;
const REFINEMENT_STEPS: usize = 3;

/// Krylov iterations allowed with a stale factorization before refactoring.
const STALE_MAX_ITERS: usize = 12;
/// Iteration count after which the next call refactors.
const STALE_REFRESH_ITERS: usize = 8;

/// Sparse LU with the symbolic factorization cached across calls that share a
/// sparsity pattern.
///
/// With `reuse_factorization`, a numeric factorization of an earlier matrix
/// with the same pattern preconditions GMRES on the new one, and a fresh
/// factorization is computed only when that fails to converge quickly. The
/// acceptance criterion on the residual is the same either way.
#[derive(Default)]
pub struct SparseSolver {
    pub reuse_factorization: bool,
    symbolic: Option<(Pattern, SymbolicLu<usize>)>,
    numeric: Option<Lu<usize, f64>>,
    factorizations: usize,
}

impl std::fmt::Debug for SparseSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseSolver")
            .field("reuse_factorization", &self.reuse_factorization)
            .field("pattern_nnz", &self.symbolic.as_ref().map(|(p, _)| p.nnz()))
            .field("factorizations", &self.factorizations)
            .finish()
    }
}

fn apply_lu(lu: &Lu<usize, f64>, rhs: &mut [f64]) {
    let n = rhs.len();
    lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(rhs, n, 1));
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// GMRES on `a x = b`, right-preconditioned by a factorization of an earlier
/// matrix, without restarts. Returns the relative residual reached and the
/// iteration count.
fn preconditioned_solve(a: &CsrMatrix, b: &[f64], lu: &Lu<usize, f64>, x: &mut [f64]) -> (f64, usize) {
    let m = STALE_MAX_ITERS;
    let nb = norm2(b);
    x.fill(0.0);
    if nb == 0.0 {
        return (0.0, 0);
    }
    let target = RESIDUAL_TOL * 0.1 * nb;
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / nb).collect()];
    let mut hess = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
    let mut g = vec![0.0; m + 1];
    g[0] = nb;
    let mut k = 0;
    while k < m {
        let mut z = basis[k].clone();
        apply_lu(lu, &mut z);
        let mut w = a.mul_vec(&z);
        for (i, v) in basis.iter().enumerate() {
            let h = dot(&w, v);
            hess[i][k] = h;
            w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= h * vi);
        }
        let wn = norm2(&w);
        hess[k + 1][k] = wn;
        for i in 0..k {
            let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
            hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
            hess[i][k] = t;
        }
        let r = hess[k][k].hypot(hess[k + 1][k]);
        if r == 0.0 {
            break;
        }
        cs[k] = hess[k][k] / r;
        sn[k] = hess[k + 1][k] / r;
        hess[k][k] = r;
        hess[k + 1][k] = 0.0;
        g[k + 1] = -sn[k] * g[k];
        g[k] *= cs[k];
        k += 1;
        if g[k].abs() <= target || wn == 0.0 {
            break;
        }
        basis.push(w.iter().map(|v| v / wn).collect());
    }
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| hess[i][j] * y[j]).sum();
        y[i] = (g[i] - s) / hess[i][i];
    }
    let mut t = vec![0.0; b.len()];
    for (yi, v) in y.iter().zip(&basis) {
        t.iter_mut().zip(v).for_each(|(ti, vi)| *ti += yi * vi);
    }
    apply_lu(lu, &mut t);
    x.copy_from_slice(&t);
    (relative_residual(a, x, b), k)
}

/// Iterative refinement of `x` with `lu` as the approximate inverse.
fn refine(a: &CsrMatrix, b: &[f64], lu: &Lu<usize, f64>, x: &mut Vec<f64>, max_steps: usize) -> f64 {
    let mut res = relative_residual(a, x, b);
    for _ in 0..max_steps {
        if !res.is_finite() || res <= 1e-15 {
            break;
        }
        let ax = a.mul_vec(x);
        let mut d: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        apply_lu(lu, &mut d);
        let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + di).collect();
        let trial_res = relative_residual(a, &trial, b);
        if !(trial_res < res) {
            break;
        }
        *x = trial;
        res = trial_res;
    }
    res
}

impl SparseSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// A solver that keeps numeric factorizations as preconditioners.
    pub fn reusing() -> Self {
        Self {
            reuse_factorization: true,
            ..Self::default()
        }
    }

    /// Number of numeric factorizations computed so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n {
            return Err(Error::Dimension(format!(
                "cannot solve a {}x{} system with a right-hand side of length {}",
                n,
                a.ncols(),
                b.len()
            )));
        }
        if n == 0 {
            return Ok(Vec::new());
        }

        let same_pattern = matches!(&self.symbolic, Some((cp, _)) if *cp == a.pattern);
        if self.reuse_factorization && same_pattern {
            if let Some(lu) = &self.numeric {
                let mut x = vec![0.0; n];
                let (res, iters) = preconditioned_solve(a, b, lu, &mut x);
                if res <= RESIDUAL_TOL && x.iter().all(|v| v.is_finite()) {
                    if iters >= STALE_REFRESH_ITERS {
                        self.numeric = None;
                    }
                    return Ok(x);
                }
                log::trace!("stale factorization rejected at residual {res:e}");
            }
        }

        // The CSR arrays of A are the CSC arrays of Aᵀ: factor Aᵀ and apply
        // the transposed solve.
        let p = &a.pattern;
        let symbolic_t = SymbolicSparseColMatRef::new_checked(n, n, &p.row_ptr, None, &p.col_idx);
        if !same_pattern {
            let sym = SymbolicLu::try_new(symbolic_t)
                .map_err(|e| Error::LinearSolveFailed(format!("symbolic factorization: {e:?}")))?;
            self.symbolic = Some((p.clone(), sym));
            self.numeric = None;
        }
        let symbolic = self.symbolic.as_ref().map(|(_, s)| s.clone()).expect("cached above");
        let at = SparseColMatRef::new(symbolic_t, &a.values);
        let lu = Lu::try_new_with_symbolic(symbolic, at).map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::LinearSolveFailed(format!(
                "matrix is structurally singular (no pivot at step {index} of {n})"
            )),
            LuError::Generic(g) => Error::LinearSolveFailed(format!("numeric factorization: {g:?}")),
        })?;
        self.factorizations += 1;

        let mut x = b.to_vec();
        apply_lu(&lu, &mut x);
        let res = refine(a, b, &lu, &mut x, REFINEMENT_STEPS);

        if !(res <= RESIDUAL_TOL) || x.iter().any(|v| !v.is_finite()) {
            let rcond = reciprocal_condition_estimate(a, |v: &mut Vec<f64>, transpose: bool| {
                let m = MatMut::from_column_major_slice_mut(v, n, 1);
                if transpose {
                    lu.solve_in_place(m);
                } else {
                    lu.solve_transpose_in_place(m);
                }
            });
            self.numeric = None;
            return Err(Error::LinearSolveFailed(format!(
                "relative residual {res:e} exceeds {RESIDUAL_TOL:e} after refinement \
                 (n = {n}, nnz = {}, reciprocal condition estimate {rcond:e}{})",
                a.pattern.nnz(),
                if rcond < 1e-15 { ", matrix is numerically singular" } else { "" }
            )));
        }
        if self.reuse_factorization {
            self.numeric = Some(lu);
        }
        Ok(x)
    }
}

/// One-shot solve without pattern caching.
pub fn sparse_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SparseSolver::new().solve(a, b)
}

fn norm1(a: &CsrMatrix) -> f64 {
    let mut col_sums = vec![0.0; a.ncols()];
    for (&j, &v) in a.pattern.col_idx.iter().zip(&a.values) {
        col_sums[j] += v.abs();
    }
    col_sums.into_iter().fold(0.0, f64::max)
}

/// Hager–Higham estimate of `1 / (‖A‖₁ ‖A⁻¹‖₁)`. `solve(v, false)` must
/// overwrite `v` with `A⁻¹ v`, `solve(v, true)` with `A⁻ᵀ v`.
pub fn reciprocal_condition_estimate(a: &CsrMatrix, mut solve: impl FnMut(&mut Vec<f64>, bool)) -> f64 {
    let n = a.nrows();
    let anorm = norm1(a);
    if n == 0 || anorm == 0.0 {
        return 0.0;
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for _ in 0..5 {
        let mut y = x.clone();
        solve(&mut y, false);
        let y_norm: f64 = y.iter().map(|v| v.abs()).sum();
        if !y_norm.is_finite() {
            return 0.0;
        }
        if y_norm <= est {
            break;
        }
        est = y_norm;
        let mut z: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        solve(&mut z, true);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= zx {
            break;
        }
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    if est == 0.0 {
        0.0
    } else {
        1.0 / (anorm * est)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 1, 0.5), (1, 0, -1.0)]).unwrap();
        assert_eq!(m.pattern.nnz(), 3);
        assert_eq!(m.get(0, 1), 1.5);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 2.0, 3.0]), vec![3.0, 5.0]);
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn slots_point_at_positions() {
        let pos = [(2, 0), (0, 2), (1, 1), (0, 2), (2, 2)];
        let (p, slots) = Pattern::build(3, 3, &pos).unwrap();
        for (k, &(r, c)) in pos.iter().enumerate() {
            assert_eq!(p.find(r, c), Some(slots[k]));
        }
        assert_eq!(p.find(1, 0), None);
    }

    #[test]
    fn identity_solve() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.5, 0.0, 7.0];
        assert_eq!(sparse_solve(&a, &b).unwrap(), b);
    }

    #[test]
    fn two_by_two() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let x = sparse_solve(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nonsymmetric_uses_correct_orientation() {
        // [[1, 2], [0, 1]] x = (5, 2) → x = (1, 2)
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 1.0)]).unwrap();
        let x = sparse_solve(&a, &[5.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn symbolic_reuse_across_values() {
        let mut solver = SparseSolver::new();
        let mut a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (2, 2, 2.0), (2, 0, 1.0)]).unwrap();
        let x = solver.solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert!(relative_residual(&a, &x, &[1.0, 2.0, 3.0]) < 1e-15);
        for v in a.values.iter_mut() {
            *v *= 2.0;
        }
        let y = solver.solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((xi - 2.0 * yi).abs() < 1e-14);
        }
    }

    #[test]
    fn stale_factorization_reused() {
        let n = 40;
        let matrix = |diag: &dyn Fn(usize) -> f64| {
            let mut t = Vec::new();
            for i in 0..n {
                t.push((i, i, diag(i)));
                if i + 1 < n {
                    t.push((i, i + 1, -1.0));
                    t.push((i + 1, i, -1.5));
                }
            }
            CsrMatrix::from_triplets(n, n, &t).unwrap()
        };
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut solver = SparseSolver::reusing();
        solver.solve(&matrix(&|_| 4.0), &b).unwrap();
        assert_eq!(solver.factorizations(), 1);
        let a2 = matrix(&|i| 4.0 * (1.0 + 0.01 * (i as f64).sin()));
        let x = solver.solve(&a2, &b).unwrap();
        assert_eq!(solver.factorizations(), 1);
        assert!(relative_residual(&a2, &x, &b) <= RESIDUAL_TOL);
        // far from the cached matrix: refactor
        let a3 = matrix(&|i| 4.0 + 30.0 * (1.7 * i as f64).sin());
        let x = solver.solve(&a3, &b).unwrap();
        assert_eq!(solver.factorizations(), 2);
        assert!(relative_residual(&a3, &x, &b) <= RESIDUAL_TOL);
    }

    #[test]
    fn singular_matrix_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let err = sparse_solve(&a, &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::LinearSolveFailed(_)), "{err}");
        // zero row
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 0.0)]).unwrap();
        assert!(sparse_solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn block_extraction() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 2, 5.0), (2, 1, 7.0), (2, 2, 9.0)]).unwrap();
        let b = a.block(1..3, 1..3);
        assert_eq!(b.to_dense(), vec![vec![0.0, 5.0], vec![7.0, 9.0]]);
    }

    #[test]
    fn condition_estimate_of_diagonal() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1e-3), (2, 2, 10.0)]).unwrap();
        let d = [1.0, 1e-3, 10.0];
        let rc = reciprocal_condition_estimate(&a, |v, _| {
            for (x, di) in v.iter_mut().zip(d) {
                *x /= di;
            }
        });
        assert!((rc - 1e-4).abs() < 1e-12);
    }
}
