//! Subordinated Brownian paths `X_t = B_{T_t}` and the particle-only
//! Feynman–Kac estimators.
//!
//! Spatial increments have per-coordinate variance `2ΔT`, which makes
//! `E[e^{ik·(X_t − X_0)}] = E[e^{-|k|² T_t}] = e^{-t h(|k|²)}`: the path
//! expectation reproduces the Fourier multiplier of `√(−Δ + M²) − M`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::functions::{PotentialSpec, TestFunction};
use crate::stats::{run_batches, BatchLayout, EstimateResult};
use crate::subordinator::{InverseGaussian, SubordinatorSpec};

/// Grid points `0 = t_0 < t_1 < … < t_n = t` in operator time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    /// `n` equal steps on `[0, t]`. A zero horizon gives the one-point grid.
    pub fn uniform(t: f64, n: usize) -> Result<Self> {
        ensure!(t >= 0.0 && t.is_finite(), Domain, "horizon must be finite and non-negative, got {t}");
        if t == 0.0 {
            return Ok(Self { points: vec![0.0] });
        }
        ensure!(n >= 1, Domain, "time grid needs at least one step");
        let mut points: Vec<f64> = (0..=n).map(|j| t * j as f64 / n as f64).collect();
        points[n] = t;
        Ok(Self { points })
    }

    /// A uniform grid with the extra `marks` inserted. Marks must be strictly
    /// increasing and interior to `(0, t)`.
    pub fn with_marks(t: f64, n: usize, marks: &[f64]) -> Result<Self> {
        ensure!(
            marks.windows(2).all(|w| w[0] < w[1]),
            Config,
            "insertion times must be strictly increasing, got {marks:?}"
        );
        ensure!(
            marks.iter().all(|&m| m > 0.0 && m < t),
            Config,
            "insertion times must lie strictly inside (0, {t}), got {marks:?}"
        );
        let mut grid = Self::uniform(t, n)?;
        let tol = 1e-12 * t;
        for &m in marks {
            if grid.points.iter().all(|p| (p - m).abs() > tol) {
                grid.points.push(m);
            }
        }
        grid.points.sort_by(f64::total_cmp);
        Ok(grid)
    }

    /// Every interval split into `r` equal pieces; old point `j` becomes
    /// point `j·r`.
    pub fn refine(&self, r: usize) -> TimeGrid {
        assert!(r >= 1);
        if r == 1 {
            return self.clone();
        }
        let mut points = Vec::with_capacity((self.points.len() - 1) * r + 1);
        for w in self.points.windows(2) {
            for i in 0..r {
                points.push(w[0] + (w[1] - w[0]) * i as f64 / r as f64);
            }
        }
        points.push(*self.points.last().unwrap());
        TimeGrid { points }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Index of the grid point closest to `time`.
    pub fn index_of(&self, time: f64) -> usize {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - time).abs().total_cmp(&(b.1 - time).abs()))
            .map(|(i, _)| i)
            .unwrap()
    }
}

/// One trajectory sampled at the grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticlePath {
    dim: usize,
    times: Vec<f64>,
    subordinated: Vec<f64>,
    positions: Vec<f64>,
}

impl ParticlePath {
    pub(crate) fn empty(dim: usize, grid: &TimeGrid) -> Self {
        let n = grid.points.len();
        Self { dim, times: grid.points.clone(), subordinated: vec![0.0; n], positions: vec![0.0; n * dim] }
    }

    /// A path that stays at `start`, useful as a frozen reference.
    pub fn frozen(start: &[f64], grid: &TimeGrid) -> Self {
        let mut p = Self::empty(start.len(), grid);
        for j in 0..p.len() {
            p.positions[j * p.dim..(j + 1) * p.dim].copy_from_slice(start);
        }
        p
    }

    /// A path through given positions (one row of length `dim` per time).
    pub fn from_positions(dim: usize, grid: &TimeGrid, positions: Vec<f64>) -> Result<Self> {
        ensure!(positions.len() == grid.points.len() * dim, Domain, "need {} coordinates", grid.points.len() * dim);
        let n = grid.points.len();
        Ok(Self { dim, times: grid.points.clone(), subordinated: vec![0.0; n], positions })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn subordinated_times(&self) -> &[f64] {
        &self.subordinated
    }

    #[inline]
    pub fn position(&self, j: usize) -> &[f64] {
        &self.positions[j * self.dim..(j + 1) * self.dim]
    }

    pub fn start(&self) -> &[f64] {
        self.position(0)
    }

    pub fn end(&self) -> &[f64] {
        self.position(self.len() - 1)
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Keeps every `stride`-th point.
    pub fn coarsen(&self, stride: usize) -> ParticlePath {
        if stride == 1 {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.len()).step_by(stride).collect();
        debug_assert_eq!(*keep.last().unwrap(), self.len() - 1);
        ParticlePath {
            dim: self.dim,
            times: keep.iter().map(|&j| self.times[j]).collect(),
            subordinated: keep.iter().map(|&j| self.subordinated[j]).collect(),
            positions: keep.iter().flat_map(|&j| self.position(j).iter().copied()).collect(),
        }
    }
}

/// Samples paths on a fixed grid, reusing the per-interval increment laws.
#[derive(Debug, Clone)]
pub struct PathSampler {
    grid: TimeGrid,
    laws: Vec<InverseGaussian>,
}

impl PathSampler {
    pub fn new(spec: &SubordinatorSpec, grid: &TimeGrid) -> Result<Self> {
        let laws = grid.points.windows(2).map(|w| spec.increment_law(w[1] - w[0])).collect::<Result<_>>()?;
        Ok(Self { grid: grid.clone(), laws })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn sample<R: Rng + ?Sized>(&self, start: &[f64], rng: &mut R) -> ParticlePath {
        let mut path = ParticlePath::empty(start.len(), &self.grid);
        self.sample_into(start, &mut path, rng);
        path
    }

    /// Refills `path` (which must come from the same grid and dimension).
    pub fn sample_into<R: Rng + ?Sized>(&self, start: &[f64], path: &mut ParticlePath, rng: &mut R) {
        let d = start.len();
        if path.dim != d || path.times.len() != self.grid.points.len() {
            *path = ParticlePath::empty(d, &self.grid);
        }
        path.positions[..d].copy_from_slice(start);
        path.subordinated[0] = 0.0;
        for (j, law) in self.laws.iter().enumerate() {
            let dt = law.sample(rng);
            path.subordinated[j + 1] = path.subordinated[j] + dt;
            let sd = (2.0 * dt).sqrt();
            for c in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                path.positions[(j + 1) * d + c] = path.positions[j * d + c] + sd * z;
            }
        }
    }
}

/// Samples `X` on `grid` starting from `start`.
pub fn sample_path<R: Rng + ?Sized>(
    start: &[f64],
    grid: &TimeGrid,
    spec: &SubordinatorSpec,
    rng: &mut R,
) -> Result<ParticlePath> {
    ensure!(!start.is_empty(), Domain, "particle dimension must be at least 1");
    Ok(PathSampler::new(spec, grid)?.sample(start, rng))
}

/// Left-endpoint Riemann sum `Σ_j V(X_{t_j})(t_{j+1} − t_j)`.
pub fn action_integral(path: &ParticlePath, v: &PotentialSpec) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    path.times.windows(2).enumerate().map(|(j, w)| v.eval(path.position(j)) * (w[1] - w[0])).sum()
}

/// Sampling knobs shared by every Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub samples: usize,
    pub batches: usize,
    /// Riemann / Trotter resolution of the time grid.
    pub steps_per_unit_time: usize,
    /// Random drivers are drawn on the grid refined by this factor and then
    /// restricted. Runs at different resolutions with the same driver grid
    /// share their random numbers.
    pub driver_refinement: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { samples: 100_000, batches: 100, steps_per_unit_time: 200, driver_refinement: 1, seed: 0 }
    }
}

impl SamplingConfig {
    pub fn layout(&self) -> Result<BatchLayout> {
        BatchLayout::new(self.samples, self.batches)
    }

    pub fn steps_for(&self, t: f64) -> usize {
        ((t * self.steps_per_unit_time as f64).ceil() as usize).max(1)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        ensure!(self.steps_per_unit_time >= 1, Config, "steps_per_unit_time must be at least 1");
        ensure!(self.driver_refinement >= 1, Config, "driver_refinement must be at least 1");
        self.layout().map(|_| ())
    }
}

/// Evaluation grid plus the finer driver grid the random numbers live on.
#[derive(Debug, Clone)]
pub(crate) struct PathPlan {
    pub sampler: PathSampler,
    pub stride: usize,
    pub proposal: crate::functions::Proposal,
    pub dim: usize,
}

impl PathPlan {
    pub fn new(
        dim: usize,
        start: &TestFunction,
        spec: &SubordinatorSpec,
        grid: TimeGrid,
        cfg: &SamplingConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let proposal = start.proposal(dim)?;
        let stride = if grid.steps() == 0 { 1 } else { cfg.driver_refinement };
        let sampler = PathSampler::new(spec, &grid.refine(stride))?;
        Ok(Self { sampler, stride, proposal, dim })
    }

    /// Draws a start point and a path; returns the path (on the evaluation
    /// grid) and the importance weight `1/q(X_0)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut ParticlePath) -> (ParticlePath, f64) {
        let mut x0 = vec![0.0; self.dim];
        let q = self.proposal.sample(rng, &mut x0);
        self.sampler.sample_into(&x0, buf, rng);
        (buf.coarsen(self.stride), 1.0 / q)
    }
}

/// Monte Carlo estimate of `(f, e^{-t H_par} g)` with
/// `H_par = √(−Δ + M²) − M + V`.
pub fn fk_particle_estimate(
    f: &TestFunction,
    g: &TestFunction,
    v: &PotentialSpec,
    t: f64,
    dim: usize,
    spec: &SubordinatorSpec,
    cfg: &SamplingConfig,
) -> Result<EstimateResult> {
    fk_with_insertions(f, g, v, &[], t, dim, spec, cfg)
}

/// Monte Carlo estimate of
/// `(f, e^{-t_1 H} g_1 e^{-(t_2 − t_1) H} … g_{n−1} e^{-(t − t_{n−1}) H} g)`.
#[allow(clippy::too_many_arguments)]
pub fn fk_with_insertions(
    f: &TestFunction,
    g: &TestFunction,
    v: &PotentialSpec,
    insertions: &[(f64, TestFunction)],
    t: f64,
    dim: usize,
    spec: &SubordinatorSpec,
    cfg: &SamplingConfig,
) -> Result<EstimateResult> {
    g.validate(dim)?;
    v.validate(dim)?;
    for (_, h) in insertions {
        h.validate(dim)?;
    }
    let marks: Vec<f64> = insertions.iter().map(|(s, _)| *s).collect();
    let grid = TimeGrid::with_marks(t, cfg.steps_for(t), &marks)?;
    let at: Vec<usize> = marks.iter().map(|&s| grid.index_of(s)).collect();
    let plan = PathPlan::new(dim, f, spec, grid, cfg)?;
    let est = run_batches(cfg.seed, cfg.layout()?, 1, |streams, out, _| {
        let mut buf = ParticlePath::empty(dim, plan.sampler.grid());
        let (path, inv_q) = plan.draw(&mut streams.particle, &mut buf);
        let mut w = f.eval(path.start()) * inv_q * g.eval(path.end());
        for ((_, h), &j) in insertions.iter().zip(&at) {
            w *= h.eval(path.position(j));
        }
        out[0] = if w == 0.0 { 0.0 } else { w * (-action_integral(&path, v)).exp() };
        Ok(())
    })?;
    Ok(est.into_iter().next().unwrap())
}
