//! Thin helpers over `faer` for the Hermitian positive-definite systems that
//! appear in every posterior computation.

use faer::linalg::solvers::{DenseSolveCore, Llt};
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Col, Mat, Par, Side};

use crate::error::{Error, Result};
use crate::c64;

/// Default cap on the estimated condition number of a factored system.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

/// Cholesky factor of a Hermitian positive-definite matrix together with a
/// pivot-based condition estimate.
pub(crate) struct HpdFactor {
    llt: Llt<c64>,
    condition: f64,
}

impl HpdFactor {
    /// Factors `a`, rejecting it if the factorization breaks down or the
    /// estimated condition number exceeds `cap`.
    ///
    /// The estimate is `(max L_ii / min L_ii)^2`, a lower bound on the true
    /// 2-norm condition number that is free once the factor exists.
    pub(crate) fn new(a: &Mat<c64>, what: &'static str, cap: f64) -> Result<Self> {
        let llt = a.llt(Side::Lower).map_err(|_| Error::IllConditioned {
            what,
            condition: f64::INFINITY,
            cap,
        })?;
        let l = llt.L();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..l.nrows() {
            let d = l[(i, i)].re;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let condition = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
        if !(condition <= cap) {
            return Err(Error::IllConditioned { what, condition, cap });
        }
        Ok(Self { llt, condition })
    }

    #[allow(dead_code)]
    pub(crate) fn condition(&self) -> f64 {
        self.condition
    }

    /// Solves `A x = b` for a single right-hand side.
    pub(crate) fn solve_vec(&self, b: &[c64]) -> Vec<c64> {
        let mut rhs = Col::<c64>::from_fn(b.len(), |i| b[i]);
        faer::linalg::solvers::Solve::solve_in_place(&self.llt, rhs.as_mat_mut());
        (0..b.len()).map(|i| rhs[i]).collect()
    }

    /// Returns `L^{-1} B`, so that `B^H A^{-1} B = (L^{-1}B)^H (L^{-1}B)`.
    pub(crate) fn whiten(&self, b: &Mat<c64>) -> Mat<c64> {
        let mut out = b.clone();
        solve_lower_triangular_in_place(self.llt.L(), out.as_mut(), Par::Seq);
        out
    }

    pub(crate) fn inverse(&self) -> Mat<c64> {
        self.llt.inverse()
    }

    /// Real diagonal of `A^{-1}`.
    pub(crate) fn inverse_diag(&self) -> Vec<f64> {
        let n = self.llt.L().nrows();
        let mut eye = Mat::<c64>::identity(n, n);
        solve_lower_triangular_in_place(self.llt.L(), eye.as_mut(), Par::Seq);
        // (A^{-1})_{ii} = sum_k |(L^{-1})_{k,i}|^2
        (0..n)
            .map(|i| (i..n).map(|k| eye[(k, i)].norm_sqr()).sum())
            .collect()
    }
}

/// Squared Euclidean norm of every column.
pub(crate) fn column_norms_sqr(a: &Mat<c64>) -> Vec<f64> {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm_sqr()).sum())
        .collect()
}

/// `A^H x`.
pub(crate) fn adjoint_times(a: &Mat<c64>, x: &[c64]) -> Vec<c64> {
    debug_assert_eq!(a.nrows(), x.len());
    (0..a.ncols())
        .map(|j| {
            let col = a.col(j);
            let mut acc = c64::new(0.0, 0.0);
            for (i, xi) in x.iter().enumerate() {
                acc += col[i].conj() * xi;
            }
            acc
        })
        .collect()
}

/// `A x`.
pub(crate) fn times(a: &Mat<c64>, x: &[c64]) -> Vec<c64> {
    debug_assert_eq!(a.ncols(), x.len());
    let mut out = vec![c64::new(0.0, 0.0); a.nrows()];
    for (j, xj) in x.iter().enumerate() {
        if *xj == c64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * xj;
        }
    }
    out
}
