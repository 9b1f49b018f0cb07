//! Spectral and proximal kernels: SVD, singular value thresholding,
//! complex soft-thresholding and leverage scores.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix};

/// Default relative cutoff for the numerical rank used by [`leverage_scores`].
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

/// Thin SVD `A = U diag(sigma) V^H` with `r = min(m, n)` columns in `U` and `V`.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: Matrix,
    /// Nonincreasing and nonnegative.
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }

    /// Factors of `SVT_tau` of the decomposed matrix: same singular vectors,
    /// singular values `max(sigma - tau, 0)`.
    pub fn shrink(&self, tau: f64) -> SvdFactors {
        SvdFactors {
            u: self.u.clone(),
            sigma: self.sigma.iter().map(|&s| (s - tau).max(0.0)).collect(),
            v: self.v.clone(),
        }
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }

    /// Count of singular values strictly above `rel_tol * sigma_max`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let max = self.sigma.first().copied().unwrap_or(0.0);
        if max <= 0.0 {
            return 0;
        }
        self.sigma.iter().take_while(|&&s| s > rel_tol * max).count()
    }
}

fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Thin SVD via faer. nalgebra's complex SVD is not used: it returns wrong
/// factors for some rank-deficient complex inputs, which SVT produces all
/// the time.
pub fn svd(m: &Matrix) -> Result<SvdFactors> {
    if !all_finite(m) {
        return Err(Error::NonFinite("svd input"));
    }
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Ok(SvdFactors { u: Matrix::zeros(rows, 0), sigma: vec![], v: Matrix::zeros(cols, 0) });
    }
    let a = faer::Mat::<faer::c64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = a.thin_svd().map_err(|_| Error::SvdFailed)?;
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    Ok(SvdFactors {
        u: Matrix::from_fn(rows, r, |i, j| u[(i, j)]),
        sigma: (0..r).map(|j| s[j].re).collect(),
        v: Matrix::from_fn(cols, r, |i, j| v[(i, j)]),
    })
}

/// Singular value thresholding. Returns `U diag(max(sigma - tau, 0)) V^H`
/// together with the factors of the input matrix.
pub fn svt(m: &Matrix, tau: f64) -> Result<(Matrix, SvdFactors)> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("svt threshold must be >= 0, got {tau}")));
    }
    let factors = svd(m)?;
    let out = factors.shrink(tau).reconstruct();
    Ok((out, factors))
}

pub fn nuclear_norm(m: &Matrix) -> Result<f64> {
    Ok(svd(m)?.nuclear_norm())
}

/// `x / |x| * max(|x| - lambda, 0)`, with `0 -> 0`.
#[inline]
pub fn shrink_complex(x: Complex64, lambda: f64) -> Complex64 {
    let mag = x.norm();
    if mag <= lambda || mag == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        x * ((mag - lambda) / mag)
    }
}

pub fn soft_threshold(t: &DenseTensor, lambda: f64) -> DenseTensor {
    t.map(|x| shrink_complex(x, lambda))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeveragePair {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub rank_used: usize,
}

/// Row and column leverage scores of a factored matrix, using the numerical
/// rank `r = #{sigma_i > rank_tol * sigma_max}`. A zero matrix gives all-zero
/// scores with `rank_used = 0`.
pub fn leverage_scores(f: &SvdFactors, rank_tol: f64) -> LeveragePair {
    let (m, n) = (f.u.nrows(), f.v.nrows());
    let r = f.numerical_rank(rank_tol);
    if r == 0 {
        return LeveragePair { left: vec![0.0; m], right: vec![0.0; n], rank_used: 0 };
    }
    let row_energy = |basis: &Matrix, scale: f64| -> Vec<f64> {
        (0..basis.nrows())
            .map(|i| scale * (0..r).map(|j| basis[(i, j)].norm_sqr()).sum::<f64>())
            .collect()
    };
    LeveragePair {
        left: row_energy(&f.u, m as f64 / r as f64),
        right: row_energy(&f.v, n as f64 / r as f64),
        rank_used: r,
    }
}
