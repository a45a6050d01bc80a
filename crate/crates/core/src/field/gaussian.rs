use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Draws centred Gaussian vectors with a fixed covariance.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
    scratch_len: usize,
}

impl GaussianSampler {
    /// Factorizes `cov` once: Cholesky when it is numerically positive
    /// definite, otherwise a symmetric eigen square root. Negative
    /// eigenvalues down to `−10⁻¹²·trace` are treated as zero.
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let n = cov.nrows();
        if n != cov.ncols() {
            return Err(Error::Domain(format!("covariance must be square, got {}×{}", n, cov.ncols())));
        }
        let asym = (cov - cov.transpose()).abs().max();
        let scale = cov.abs().max();
        if !(asym <= 1e-12 * scale) {
            return Err(Error::Numerical(format!("covariance is not symmetric (deviation {asym:e})")));
        }
        if let Some(ch) = cov.clone().cholesky() {
            return Ok(Self { factor: ch.l(), scratch_len: n });
        }
        let trace = cov.trace();
        let jitter = 1e-12 * trace.abs();
        let eig = SymmetricEigen::new(cov.clone());
        let min = eig.eigenvalues.min();
        if min < -jitter {
            return Err(Error::Numerical(format!("covariance is indefinite: eigenvalue {min:e}, trace {trace:e}")));
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self { factor, scratch_len: n })
    }

    pub fn dim(&self) -> usize {
        self.scratch_len
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let n = self.scratch_len;
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|j| self.factor[(i, j)] * z[j]).sum();
        }
    }
}
