//! Batch-means error bars, the parallel batch runner and a two-sample
//! Kolmogorov–Smirnov test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::rng::{batch_stream, Purpose, Stream};

/// How samples were split into independently seeded batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchLayout {
    pub batches: usize,
    pub per_batch: usize,
}

impl BatchLayout {
    /// Splits at least `samples` draws into `batches` equal batches.
    pub fn new(samples: usize, batches: usize) -> Result<Self> {
        ensure!(batches >= 2, Config, "batch means need at least 2 batches, got {batches}");
        ensure!(samples >= batches, Config, "{samples} samples cannot fill {batches} batches");
        Ok(Self { batches, per_batch: samples.div_ceil(batches) })
    }

    pub fn total(&self) -> usize {
        self.batches * self.per_batch
    }
}

/// Positivity bookkeeping for the multiplicative field weight of each path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    pub min_weight: f64,
    pub max_weight: f64,
    pub non_positive: u64,
    /// Conditional weights whose quadrature did not settle under order doubling.
    #[serde(default)]
    pub unconverged: u64,
}

impl Default for WeightDiagnostics {
    fn default() -> Self {
        Self { min_weight: f64::INFINITY, max_weight: f64::NEG_INFINITY, non_positive: 0, unconverged: 0 }
    }
}

impl WeightDiagnostics {
    #[inline]
    pub fn record(&mut self, w: f64) {
        self.min_weight = self.min_weight.min(w);
        self.max_weight = self.max_weight.max(w);
        if w <= 0.0 || w.is_nan() {
            self.non_positive += 1;
        }
    }

    fn merge(&mut self, other: &Self) {
        self.min_weight = self.min_weight.min(other.min_weight);
        self.max_weight = self.max_weight.max(other.max_weight);
        self.non_positive += other.non_positive;
        self.unconverged += other.unconverged;
    }
}

/// A Monte Carlo mean with its batch-means standard error and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub layout: BatchLayout,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weights: Option<WeightDiagnostics>,
}

impl EstimateResult {
    /// Mean and error from per-batch means, reduced in batch order.
    pub fn from_batch_means(batch_means: &[f64], seed: u64, layout: BatchLayout) -> Self {
        let b = batch_means.len() as f64;
        let mean = batch_means.iter().sum::<f64>() / b;
        let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
        Self { mean, stderr: (var / b).sqrt(), n_samples: layout.total(), seed, layout, weights: None }
    }

    /// Distance to `reference` in units of this estimate's standard error.
    /// An exact match with zero error is 0σ.
    pub fn sigmas_from(&self, reference: f64) -> f64 {
        let d = (self.mean - reference).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Streams handed to the per-path closure. Each batch gets private ones.
pub struct BatchStreams {
    pub particle: Stream,
    pub field: Stream,
    pub inner: Stream,
}

/// Runs `per_path` over every sample of every batch, in parallel over batches.
///
/// `per_path` writes one value per observable into its output slice and may
/// record field weights. Batches are reduced in index order, so the result
/// is bit-identical for any number of worker threads.
pub fn run_batches<F>(seed: u64, layout: BatchLayout, observables: usize, per_path: F) -> Result<Vec<EstimateResult>>
where
    F: Fn(&mut BatchStreams, &mut [f64], &mut WeightDiagnostics) -> Result<()> + Sync,
{
    let batches: Vec<(Vec<f64>, WeightDiagnostics)> = (0..layout.batches)
        .into_par_iter()
        .map(|b| {
            let mut streams = BatchStreams {
                particle: batch_stream(seed, b, Purpose::Particle),
                field: batch_stream(seed, b, Purpose::Field),
                inner: batch_stream(seed, b, Purpose::Inner),
            };
            let mut sums = vec![0.0; observables];
            let mut out = vec![0.0; observables];
            let mut diag = WeightDiagnostics::default();
            for _ in 0..layout.per_batch {
                per_path(&mut streams, &mut out, &mut diag)?;
                for (s, v) in sums.iter_mut().zip(&out) {
                    *s += v;
                }
            }
            let n = layout.per_batch as f64;
            Ok((sums.into_iter().map(|s| s / n).collect(), diag))
        })
        .collect::<Result<_>>()?;

    let mut diag = WeightDiagnostics::default();
    for (_, d) in &batches {
        diag.merge(d);
    }
    let recorded = diag.min_weight.is_finite() || diag.non_positive > 0;
    Ok((0..observables)
        .map(|k| {
            let means: Vec<f64> = batches.iter().map(|(m, _)| m[k]).collect();
            let mut est = EstimateResult::from_batch_means(&means, seed, layout);
            if recorded {
                est.weights = Some(diag);
            }
            est
        })
        .collect())
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic critical value of the two-sample KS statistic at level `alpha`.
pub fn ks_critical(alpha: f64, na: usize, nb: usize) -> f64 {
    let c = (-(0.5 * alpha).ln() / 2.0).sqrt();
    let (na, nb) = (na as f64, nb as f64);
    c * ((na + nb) / (na * nb)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn layout_rounds_up() {
        let l = BatchLayout::new(1001, 10).unwrap();
        assert_eq!(l.per_batch, 101);
        assert_eq!(l.total(), 1010);
        assert!(BatchLayout::new(5, 10).is_err());
        assert!(BatchLayout::new(5, 1).is_err());
    }

    #[test]
    fn batch_means_error() {
        let est = EstimateResult::from_batch_means(&[1.0, 2.0, 3.0, 4.0], 0, BatchLayout { batches: 4, per_batch: 1 });
        assert_eq!(est.mean, 2.5);
        assert!((est.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn runner_is_independent_of_thread_count() {
        let layout = BatchLayout::new(4000, 40).unwrap();
        let f = |s: &mut BatchStreams, out: &mut [f64], _: &mut WeightDiagnostics| {
            let u: f64 = s.particle.random();
            out[0] = u;
            out[1] = u * u;
            Ok(())
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_batches(9, layout, 2, f)).unwrap();
        let b = four.install(|| run_batches(9, layout, 2, f)).unwrap();
        assert_eq!(a, b);
        assert!((a[0].mean - 0.5).abs() < 4.0 * a[0].stderr);
        assert!(a[0].weights.is_none());
    }

    #[test]
    fn ks_detects_shift_and_accepts_same_law() {
        let mut r = crate::rng::stream(4, 0);
        let a: Vec<f64> = (0..5000).map(|_| r.random()).collect();
        let b: Vec<f64> = (0..5000).map(|_| r.random()).collect();
        let c: Vec<f64> = (0..5000).map(|_| r.random::<f64>() + 0.1).collect();
        let crit = ks_critical(0.01, 5000, 5000);
        assert!((crit - 1.6276 * (2.0f64 / 5000.0).sqrt()).abs() < 1e-4);
        assert!(ks_statistic(&a, &b) < crit);
        assert!(ks_statistic(&a, &c) > crit);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_statistic(&[0.0], &[1.0]), 1.0);
    }
}
