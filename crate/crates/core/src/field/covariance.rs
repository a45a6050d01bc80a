use nalgebra::{DMatrix, SymmetricEigen};

use super::{norm3, ContinuumField, FieldFunction, FieldModel, SingleModeModel};
use crate::error::{Error, Result};
use crate::particle::ParticlePath;

/// Per-node sums along a path.
///
/// With `Δ_j` the left-endpoint weights and `z_i(x)` the `i`-th node value of
/// `ρ_x`, `left_i = Σ_j Δ_j e^{-t_j ω_i} z_i(X_j)` and
/// `right_i = Σ_j Δ_j e^{-(t − t_j) ω_i} z_i(X_j)`.
struct PathSums {
    variance: f64,
    left: Vec<(f64, f64)>,
    right: Vec<(f64, f64)>,
}

/// Joint covariance of `(φ(j_0 h_1), …, φ(j_t h'_1), …, Φ_path)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointCovariance {
    pub matrix: DMatrix<f64>,
    pub n_left: usize,
    pub n_right: usize,
}

impl EndpointCovariance {
    /// Index of the path variable.
    pub fn path_index(&self) -> usize {
        self.n_left + self.n_right
    }

    pub fn path_variance(&self) -> f64 {
        let p = self.path_index();
        self.matrix[(p, p)]
    }

    /// Fails unless every eigenvalue is at least `−10⁻¹⁰·trace`.
    pub fn check_psd(&self) -> Result<()> {
        check_psd(&self.matrix, 1e-10)
    }
}

pub(crate) fn check_psd(m: &DMatrix<f64>, rel: f64) -> Result<()> {
    let trace = m.trace();
    if m.nrows() == 0 {
        return Ok(());
    }
    let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
    if min < -rel * trace.abs() {
        return Err(Error::Numerical(format!("covariance matrix is indefinite: eigenvalue {min:e}, trace {trace:e}")));
    }
    Ok(())
}

impl FieldModel {
    /// Variance of `Φ = Σ_j Δ_j φ(δ_{t_j} ⊗ ρ_{X_j})` given the path, by a
    /// running accumulator per momentum node (linear in the number of grid
    /// points).
    pub fn path_variance(&self, path: &ParticlePath) -> Result<f64> {
        Ok(self.path_sums(path, false)?.variance)
    }

    /// Joint covariance of left endpoint variables at time 0, right endpoint
    /// variables at time `t`, and the path variable.
    pub fn endpoint_covariance(
        &self,
        path: &ParticlePath,
        left: &[FieldFunction],
        right: &[FieldFunction],
    ) -> Result<EndpointCovariance> {
        let t = path.horizon();
        let want = !left.is_empty() || !right.is_empty();
        let sums = self.path_sums(path, want)?;
        let n = left.len() + right.len() + 1;
        let mut m = DMatrix::zeros(n, n);
        let ends: Vec<(&FieldFunction, f64)> =
            left.iter().map(|h| (h, 0.0)).chain(right.iter().map(|h| (h, t))).collect();
        for (a, &(ha, sa)) in ends.iter().enumerate() {
            for (b, &(hb, sb)) in ends.iter().enumerate().skip(a) {
                let v = 0.5 * self.node_inner(ha, hb, sb - sa)?;
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
            let acc = if a < left.len() { &sums.left } else { &sums.right };
            let v = 0.5 * self.node_pair(ha, acc)?;
            m[(a, n - 1)] = v;
            m[(n - 1, a)] = v;
        }
        m[(n - 1, n - 1)] = sums.variance;
        Ok(EndpointCovariance { matrix: m, n_left: left.len(), n_right: right.len() })
    }

    /// `(g, e^{-|τ|ω} f)` on the same nodes as the path sums.
    fn node_inner(&self, g: &FieldFunction, f: &FieldFunction, tau: f64) -> Result<f64> {
        match self {
            FieldModel::SingleMode(_) => self.euclid_slice_inner(0.0, g, tau, f),
            FieldModel::Continuum(c) => {
                let (pg, cg) = c.profile(g)?;
                let (pf, cf) = c.profile(f)?;
                let tau = tau.abs();
                let mut acc = 0.0;
                for (i, k) in c.quadrature.vector_nodes.iter().enumerate() {
                    let kn = norm3(k);
                    let phase: f64 = (0..c.dim()).map(|d| k[d] * (cf[d] - cg[d])).sum();
                    acc += c.vector_base[i]
                        * c.profile_at(pg, kn)
                        * c.profile_at(pf, kn)
                        * phase.cos()
                        * (-tau * c.vector_omega[i]).exp();
                }
                Ok(acc)
            }
        }
    }

    /// `Σ_i (h, z_i-weighted accumulator)`: the pairing of `h` with a
    /// time-integrated path functional.
    fn node_pair(&self, h: &FieldFunction, acc: &[(f64, f64)]) -> Result<f64> {
        match self {
            FieldModel::SingleMode(m) => {
                let amp = match h {
                    FieldFunction::Mode { amplitude } => *amplitude,
                    FieldFunction::Form { center, amplitude } => amplitude * m.coupling.eval(center),
                    FieldFunction::Gaussian { .. } => {
                        return Err(Error::ModelValidity("gaussian test functions need a continuum field".into()))
                    }
                };
                Ok(amp * acc[0].0)
            }
            FieldModel::Continuum(c) => {
                let (p, center) = c.profile(h)?;
                let mut s = 0.0;
                for (i, k) in c.quadrature.vector_nodes.iter().enumerate() {
                    let phase: f64 = (0..c.dim()).map(|d| k[d] * center[d]).sum();
                    let (sn, cs) = phase.sin_cos();
                    // Re[e^{-ik·c} acc]
                    let re = cs * acc[i].0 + sn * acc[i].1;
                    s += c.vector_base[i] * c.profile_at(p, norm3(k)) * c.vector_rho[i] * re;
                }
                Ok(s)
            }
        }
    }

    fn path_sums(&self, path: &ParticlePath, ends: bool) -> Result<PathSums> {
        let t = path.horizon();
        let (raw, left, right) = match self {
            FieldModel::SingleMode(m) => single_mode_sums(m, path, ends),
            FieldModel::Continuum(c) => continuum_sums(c, path, ends),
        };
        let tol = 1e-8 * self.max_covariance() * t * t;
        if raw < -tol || !raw.is_finite() {
            return Err(Error::Numerical(format!("path variance {raw:e} is negative beyond tolerance {tol:e}")));
        }
        Ok(PathSums { variance: raw.max(0.0), left, right })
    }
}

type Sums = (f64, Vec<(f64, f64)>, Vec<(f64, f64)>);

fn single_mode_sums(m: &SingleModeModel, path: &ParticlePath, ends: bool) -> Sums {
    let times = path.times();
    let n = times.len();
    let w = m.omega0;
    let (mut acc, mut s, mut left) = (0.0, 0.0, 0.0);
    let mut last_gap = f64::NAN;
    let mut decay = 0.0;
    for j in 0..n.saturating_sub(1) {
        let dt = times[j + 1] - times[j];
        let u = m.coupling.eval(path.position(j));
        if j > 0 {
            let gap = times[j] - times[j - 1];
            if gap != last_gap {
                decay = (-gap * w).exp();
                last_gap = gap;
            }
            acc *= decay;
        }
        acc += u * dt;
        s += dt * u * (2.0 * acc - u * dt);
        if ends {
            left += dt * u * (-times[j] * w).exp();
        }
    }
    let right = if n >= 2 { acc * (-(times[n - 1] - times[n - 2]) * w).exp() } else { 0.0 };
    (0.5 * s, vec![(left, 0.0)], vec![(right, 0.0)])
}

fn continuum_sums(c: &ContinuumField, path: &ParticlePath, ends: bool) -> Sums {
    let times = path.times();
    let n = times.len();
    let nodes = &c.quadrature.vector_nodes;
    let m = nodes.len();
    let dim = c.dim();
    let mut acc = vec![(0.0, 0.0); m];
    let mut s = vec![0.0; m];
    let mut left = if ends { vec![(0.0, 0.0); m] } else { Vec::new() };
    let mut lfac = vec![1.0; if ends { m } else { 0 }];
    let mut decay = vec![0.0; m];
    let mut last_gap = f64::NAN;
    for j in 0..n.saturating_sub(1) {
        let dt = times[j + 1] - times[j];
        let x = path.position(j);
        if j > 0 {
            let gap = times[j] - times[j - 1];
            if gap != last_gap {
                for (d, om) in decay.iter_mut().zip(&c.vector_omega) {
                    *d = (-gap * om).exp();
                }
                last_gap = gap;
            }
        }
        for i in 0..m {
            let k = &nodes[i];
            let phase: f64 = (0..dim).map(|d| k[d] * x[d]).sum();
            let (sn, cs) = phase.sin_cos();
            let a = &mut acc[i];
            if j > 0 {
                a.0 *= decay[i];
                a.1 *= decay[i];
            }
            // A ← A + e^{-ik·x} Δ
            a.0 += cs * dt;
            a.1 -= sn * dt;
            s[i] += dt * (2.0 * (cs * a.0 - sn * a.1) - dt);
            if ends {
                if j > 0 {
                    lfac[i] *= decay[i];
                }
                left[i].0 += lfac[i] * dt * cs;
                left[i].1 += lfac[i] * dt * sn;
            }
        }
    }
    let variance = 0.5 * (0..m).map(|i| c.vector_base[i] * c.vector_rho[i] * c.vector_rho[i] * s[i]).sum::<f64>();
    let right = if ends && n >= 2 {
        let gap = times[n - 1] - times[n - 2];
        acc.iter()
            .zip(&c.vector_omega)
            .map(|(a, om)| {
                let d = (-gap * om).exp();
                (a.0 * d, -a.1 * d)
            })
            .collect()
    } else if ends {
        vec![(0.0, 0.0); m]
    } else {
        Vec::new()
    };
    let left = if ends && n < 2 { vec![(0.0, 0.0); m] } else { left };
    (variance, left, right)
}
