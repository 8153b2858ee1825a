//! Thin wrappers around faer's sparse matrices and factorisations, plus the
//! optional rayon-backed map used by cell and patch loops.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, SymbolicSparseColMat, Triplet};
use faer::Side;

use crate::error::SolverError;

/// Compressed sparse column matrix. Duplicate triplets are summed on construction.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    inner: SparseColMat<usize, f64>,
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let t: Vec<Triplet<usize, usize, f64>> = triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        Self {
            inner: SparseColMat::try_new_from_triplets(nrows, ncols, &t).expect("triplet indices in range"),
        }
    }

    /// Builds a matrix from a pattern and matching values.
    pub fn from_pattern(pattern: &Pattern, values: Vec<f64>) -> Self {
        let sym = SymbolicSparseColMat::new_checked(
            pattern.nrows,
            pattern.ncols,
            pattern.col_ptr.clone(),
            None,
            pattern.row_idx.clone(),
        );
        Self {
            inner: SparseColMat::new(sym, values),
        }
    }

    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.inner.val().len()
    }

    fn for_each(&self, mut f: impl FnMut(usize, usize, f64)) {
        let sym = self.inner.symbolic();
        let (ptr, rows, vals) = (sym.col_ptr(), sym.row_idx(), self.inner.val());
        for c in 0..self.ncols() {
            for i in ptr[c]..ptr[c + 1] {
                f(rows[i], c, vals[i]);
            }
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        self.for_each(|r, c, v| out.push((r, c, v)));
        out
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.for_each(|r, c, v| y[r] += v * x[c]);
        y
    }

    /// `y = A^T x`
    pub fn mul_t_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols()];
        self.for_each(|r, c, v| y[c] += v * x[r]);
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.val().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows().min(self.ncols())];
        self.for_each(|r, c, v| {
            if r == c {
                d[r] += v;
            }
        });
        d
    }

    /// `alpha A + beta B` for matrices of equal shape.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> SparseMatrix {
        let (sa, sb) = (self.inner.symbolic(), other.inner.symbolic());
        if sa.col_ptr() == sb.col_ptr() && sa.row_idx() == sb.row_idx() {
            let vals = self.inner.val().iter().zip(other.inner.val()).map(|(a, b)| alpha * a + beta * b).collect();
            return SparseMatrix {
                inner: SparseColMat::new(sa.to_owned().expect("symbolic copy"), vals),
            };
        }
        let mut t: Vec<(usize, usize, f64)> = self.triplets().into_iter().map(|(r, c, v)| (r, c, alpha * v)).collect();
        t.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, beta * v)));
        SparseMatrix::from_triplets(self.nrows(), self.ncols(), &t)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows(), self.ncols());
        self.for_each(|r, c, v| m[(r, c)] += v);
        m
    }

    /// Largest entry of `A - A^T`.
    pub fn asymmetry(&self) -> f64 {
        let d = self.to_dense_if_small();
        match d {
            Some(d) => (&d - d.transpose()).amax(),
            None => {
                let t = self.triplets();
                let mut map = std::collections::HashMap::with_capacity(t.len());
                for (r, c, v) in t {
                    *map.entry((r, c)).or_insert(0.0) += v;
                }
                map.iter()
                    .map(|(&(r, c), v)| (v - map.get(&(c, r)).copied().unwrap_or(0.0)).abs())
                    .fold(0.0, f64::max)
            }
        }
    }

    fn to_dense_if_small(&self) -> Option<nalgebra::DMatrix<f64>> {
        (self.nrows() * self.ncols() <= 4_000_000).then(|| self.to_dense())
    }

    pub(crate) fn faer(&self) -> &SparseColMat<usize, f64> {
        &self.inner
    }
}

/// Column-compressed sparsity pattern built from element connectivity, so that
/// assembly can add into a fixed value array instead of collecting triplets.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub nrows: usize,
    pub ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl Pattern {
    /// `elements` yields `(row dofs, column dofs)`; entries equal to `usize::MAX` are skipped.
    pub fn from_elements<'a>(nrows: usize, ncols: usize, elements: impl Iterator<Item = (&'a [usize], &'a [usize])>) -> Self {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); ncols];
        for (rows, cs) in elements {
            for &c in cs.iter().filter(|&&c| c != usize::MAX) {
                cols[c].extend(rows.iter().copied().filter(|&r| r != usize::MAX));
            }
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        for mut c in cols {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(&c);
            col_ptr.push(row_idx.len());
        }
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Position of entry `(r, c)` in the value array.
    #[inline]
    pub fn index(&self, r: usize, c: usize) -> usize {
        let lo = self.col_ptr[c];
        let slice = &self.row_idx[lo..self.col_ptr[c + 1]];
        lo + slice.binary_search(&r).expect("entry in pattern")
    }
}

fn to_mat(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn from_mat(x: &Mat<f64>) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, 0)]).collect()
}

/// Sparse Cholesky factorisation of a symmetric positive definite matrix.
pub struct Cholesky {
    llt: Option<Llt<usize, f64>>,
    n: usize,
}

impl Cholesky {
    pub fn new(a: &SparseMatrix) -> Result<Self, SolverError> {
        if a.nrows() == 0 {
            return Ok(Self { llt: None, n: 0 });
        }
        let llt = a
            .faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| SolverError::SingularSystem(format!("Cholesky: {e:?}")))?;
        Ok(Self { llt: Some(llt), n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        match &self.llt {
            Some(llt) => from_mat(&llt.solve(&to_mat(b))),
            None => Vec::new(),
        }
    }
}

/// Sparse LU factorisation with partial pivoting.
pub struct SparseLu {
    lu: Option<Lu<usize, f64>>,
    n: usize,
}

impl SparseLu {
    pub fn new(a: &SparseMatrix) -> Result<Self, SolverError> {
        if a.nrows() == 0 {
            return Ok(Self { lu: None, n: 0 });
        }
        let lu = a
            .faer()
            .sp_lu()
            .map_err(|e| SolverError::SingularSystem(format!("LU: {e:?}")))?;
        Ok(Self { lu: Some(lu), n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        match &self.lu {
            Some(lu) => from_mat(&lu.solve(&to_mat(b))),
            None => Vec::new(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on. Results keep index order.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        with_pool(|| (0..n).into_par_iter().map(&f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(job: impl FnOnce() -> T + Send) -> T {
    use std::sync::OnceLock;
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    let pool = POOL.get_or_init(|| {
        let n = std::env::var("CURLCURL_THREADS").ok()?.parse::<usize>().ok()?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().ok()
    });
    match pool {
        Some(p) => p.install(job),
        None => job(),
    }
}
