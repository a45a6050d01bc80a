//! Deterministic reference solvers: Strang split-step propagation on
//! periodic Fourier grids for the particle alone, for the particle coupled to
//! one field mode, and for the field mode alone.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::field::SingleModeModel;
use crate::functions::{PotentialSpec, ScalarFunction, TestFunction};
use crate::interaction::PolynomialInteraction;
use crate::quadrature::hermite;
use crate::subordinator::SubordinatorSpec;

/// Relative spectral mass allowed in the outer eighth of the frequency band.
pub const BAND_MASS_TOL: f64 = 1e-8;
/// Relative mass allowed in the outer sixteenth of the box.
pub const BOUNDARY_MASS_TOL: f64 = 1e-8;

/// A periodic grid on `[−L, L)` with `N` points and time step `Δτ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_length: f64,
    pub points: usize,
    pub dt: f64,
}

impl GridSpec {
    pub fn new(half_length: f64, points: usize, dt: f64) -> Result<Self> {
        let g = Self { half_length, points, dt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.points >= 8 && self.points.is_power_of_two(),
            Config,
            "grid points must be a power of two ≥ 8, got {}",
            self.points
        );
        ensure!(self.half_length > 0.0 && self.half_length.is_finite(), Config, "grid half-length must be positive");
        ensure!(self.dt > 0.0 && self.dt.is_finite(), Config, "grid time step must be positive");
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|j| -self.half_length + j as f64 * h).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = std::f64::consts::PI / self.half_length;
        (0..n).map(|j| if j < n / 2 { j } else { j - n } as f64 * dk).collect()
    }

    /// Twice the points and half the time step.
    pub fn refined(&self) -> GridSpec {
        GridSpec { points: 2 * self.points, dt: 0.5 * self.dt, ..*self }
    }
}

/// Resolution and positivity bookkeeping of a propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDiagnostics {
    pub steps: usize,
    /// Largest relative spectral mass seen in the outer band.
    pub band_mass: f64,
    /// Largest relative mass seen near the box edge.
    pub boundary_mass: f64,
    /// Smallest `min u / max u` after any step.
    pub min_relative: f64,
}

impl Default for GridDiagnostics {
    fn default() -> Self {
        Self { steps: 0, band_mass: 0.0, boundary_mass: 0.0, min_relative: f64::INFINITY }
    }
}

/// Matrix elements at the requested horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub horizons: Vec<f64>,
    pub values: Vec<f64>,
    pub diagnostics: GridDiagnostics,
}

/// Orthonormal Hermite-function basis sampled at the Gauss–Hermite nodes:
/// `u[(n, i)] = ψ_n(q_i) √(w_i e^{q_i²})`. The matrix is orthogonal, so
/// node values scaled by `√(w_i e^{q_i²})` and Hermite coefficients are
/// related by a rotation.
#[derive(Debug, Clone)]
struct HermiteBasis {
    nodes: Vec<f64>,
    u: Vec<f64>,
    modes: usize,
}

impl HermiteBasis {
    fn new(modes: usize) -> Self {
        let rule = hermite(modes);
        let mut u = vec![0.0; modes * modes];
        for (i, (&q, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let sw = w.sqrt();
            let (mut p1, mut p0) = (std::f64::consts::PI.powf(-0.25), 0.0);
            for n in 0..modes {
                u[n * modes + i] = p1 * sw;
                let nf = (n + 1) as f64;
                let p2 = (2.0 / nf).sqrt() * q * p1 - (n as f64 / nf).sqrt() * p0;
                p0 = p1;
                p1 = p2;
            }
        }
        Self { nodes: rule.nodes.clone(), u, modes }
    }

    /// Coefficients of the oscillator ground state in the node representation.
    fn vacuum(&self) -> Vec<f64> {
        self.u[..self.modes].to_vec()
    }

    fn apply(&self, lane: &mut [Complex64], forward: bool) {
        let m = self.modes;
        let src = lane.to_vec();
        for (r, out) in lane.iter_mut().enumerate() {
            *out = if forward {
                (0..m).map(|i| src[i] * self.u[r * m + i]).sum()
            } else {
                (0..m).map(|n| src[n] * self.u[n * m + r]).sum()
            };
        }
    }
}

enum Axis {
    Fourier { grid: GridSpec, forward: Arc<dyn Fft<f64>>, inverse: Arc<dyn Fft<f64>> },
    Hermite(HermiteBasis),
}

impl Axis {
    fn fourier(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Axis::Fourier {
            grid,
            forward: planner.plan_fft_forward(grid.points),
            inverse: planner.plan_fft_inverse(grid.points),
        }
    }

    fn len(&self) -> usize {
        match self {
            Axis::Fourier { grid, .. } => grid.points,
            Axis::Hermite(b) => b.modes,
        }
    }

    /// Quadrature weight of one grid value in inner products.
    fn cell(&self) -> f64 {
        match self {
            Axis::Fourier { grid, .. } => grid.spacing(),
            Axis::Hermite(_) => 1.0,
        }
    }

    /// Transforms contiguous lanes of this axis' length.
    fn transform(&self, data: &mut [Complex64], forward: bool) {
        match self {
            Axis::Fourier { forward: f, inverse: i, grid } => {
                if forward {
                    f.process(data)
                } else {
                    i.process(data);
                    let s = 1.0 / grid.points as f64;
                    data.iter_mut().for_each(|z| *z *= s);
                }
            }
            Axis::Hermite(b) => data.chunks_mut(b.modes).for_each(|lane| b.apply(lane, forward)),
        }
    }

    /// Whether spectral index `i` lies in the outer eighth of the band.
    fn outer_mode(&self, i: usize) -> bool {
        match self {
            Axis::Fourier { grid, .. } => {
                let n = grid.points;
                let j = if i < n / 2 { i } else { n - i };
                8 * j >= 7 * (n / 2)
            }
            Axis::Hermite(b) => 8 * i >= 7 * b.modes,
        }
    }

    /// Whether grid index `i` lies in the outer sixteenth of the box.
    fn edge_point(&self, i: usize) -> bool {
        let n = self.len();
        let j = if i < n / 2 { i } else { n - 1 - i };
        16 * j < n / 2
    }
}

/// Split-step propagator for `H = K + U` with `K` diagonal in the spectral
/// representation and `U` diagonal on the grid, on one or two axes. Axis 0
/// is stored contiguously.
struct Propagator {
    axes: Vec<Axis>,
    dt: f64,
    /// `U` at the grid points.
    potential: Vec<f64>,
    /// `K` at the spectral indices, laid out like the data.
    symbol: Vec<f64>,
}

impl Propagator {
    fn cell(&self) -> f64 {
        self.axes.iter().map(Axis::cell).product()
    }

    fn transform(&self, u: &mut [Complex64], forward: bool) {
        let n0 = self.axes[0].len();
        self.axes[0].transform(u, forward);
        if let Some(second) = self.axes.get(1) {
            let n1 = second.len();
            let mut t = vec![Complex64::default(); u.len()];
            transpose(u, &mut t, n0, n1);
            second.transform(&mut t, forward);
            transpose(&t, u, n1, n0);
        }
    }

    fn kinetic_step(&self, u: &mut [Complex64], mult: &[f64]) {
        self.transform(u, true);
        mul(u, mult);
        self.transform(u, false);
    }

    /// `u ← e^{-tH} u` in `ceil(t/Δτ)` Strang steps.
    fn evolve(&self, u: &mut [Complex64], t: f64, diag: &mut GridDiagnostics) {
        if t <= 0.0 {
            return;
        }
        let flat = self.potential.iter().all(|&v| v == 0.0);
        let n = if flat { 1 } else { ((t / self.dt) - 1e-9).ceil().max(1.0) as usize };
        let h = t / n as f64;
        let kin: Vec<f64> = self.symbol.iter().map(|s| (-h * s).exp()).collect();
        let half: Vec<f64> = self.potential.iter().map(|v| (-0.5 * h * v).exp()).collect();
        let full: Vec<f64> = half.iter().map(|e| e * e).collect();
        if !flat {
            mul(u, &half);
        }
        for step in 0..n {
            self.kinetic_step(u, &kin);
            if !flat {
                mul(u, if step + 1 == n { &half } else { &full });
            }
            let max = u.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            let min = u.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            if max > 0.0 {
                diag.min_relative = diag.min_relative.min(min / max);
            }
        }
        diag.steps += n;
    }

    /// Updates the band and boundary masses for `u`.
    fn inspect(&self, u: &[Complex64], diag: &mut GridDiagnostics) {
        let total: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return;
        }
        let mut spec = u.to_vec();
        self.transform(&mut spec, true);
        let spec_total: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
        let n0 = self.axes[0].len();
        let second = self.axes.get(1);
        let (mut band, mut bound) = (0.0, 0.0);
        for (idx, (z, s)) in u.iter().zip(&spec).enumerate() {
            let (i0, i1) = (idx % n0, idx / n0);
            if self.axes[0].outer_mode(i0) || second.is_some_and(|a| a.outer_mode(i1)) {
                band += s.norm_sqr();
            }
            if self.axes[0].edge_point(i0) || second.is_some_and(|a| a.edge_point(i1)) {
                bound += z.norm_sqr();
            }
        }
        diag.band_mass = diag.band_mass.max(band / spec_total);
        diag.boundary_mass = diag.boundary_mass.max(bound / total);
    }

    fn inner(&self, a: &[f64], u: &[Complex64]) -> f64 {
        self.cell() * a.iter().zip(u).map(|(x, z)| x * z.re).sum::<f64>()
    }

    /// `(a, e^{-t_i H} b)` at increasing horizons.
    fn matrix_elements(&self, a: &[f64], b: &[f64], horizons: &[f64]) -> Result<GridResult> {
        ensure!(
            horizons.windows(2).all(|w| w[0] < w[1]) && horizons.first().is_some_and(|&t| t >= 0.0),
            Config,
            "horizons must be non-negative and strictly increasing"
        );
        let mut diag = GridDiagnostics::default();
        let mut u: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.inspect(&u, &mut diag);
        let probe: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.inspect(&probe, &mut diag);
        let mut values = Vec::with_capacity(horizons.len());
        let mut now = 0.0;
        for &t in horizons {
            self.evolve(&mut u, t - now, &mut diag);
            now = t;
            values.push(self.inner(a, &u));
        }
        self.inspect(&u, &mut diag);
        check_resolution(&diag)?;
        Ok(GridResult { horizons: horizons.to_vec(), values, diagnostics: diag })
    }
}

fn check_resolution(d: &GridDiagnostics) -> Result<()> {
    if d.band_mass > BAND_MASS_TOL {
        return Err(Error::Resolution(format!(
            "relative spectral mass {:.2e} near the Nyquist frequency; refine the grid",
            d.band_mass
        )));
    }
    if d.boundary_mass > BOUNDARY_MASS_TOL {
        return Err(Error::Resolution(format!(
            "relative mass {:.2e} at the box edge; enlarge the box",
            d.boundary_mass
        )));
    }
    Ok(())
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    // src is cols-major blocks of length `rows`: src[c * rows + r]
    for c in 0..cols {
        for r in 0..rows {
            dst[r * cols + c] = src[c * rows + r];
        }
    }
}

fn mul(u: &mut [Complex64], m: &[f64]) {
    for (z, f) in u.iter_mut().zip(m) {
        *z *= f;
    }
}

/// `f` sampled at the grid points.
pub fn sample_on_grid(f: &TestFunction, grid: &GridSpec) -> Vec<f64> {
    grid.positions().iter().map(|&x| f.eval(&[x])).collect()
}

fn particle_propagator(v: &PotentialSpec, spec: &SubordinatorSpec, grid: &GridSpec) -> Result<Propagator> {
    grid.validate()?;
    v.validate(1)?;
    let pot = grid.positions().iter().map(|&x| v.eval(&[x])).collect();
    let symbol = grid.wavenumbers().iter().map(|&k| spec.laplace_exponent(k * k)).collect::<Result<_>>()?;
    Ok(Propagator { axes: vec![Axis::fourier(*grid)], dt: grid.dt, potential: pot, symbol })
}

/// `e^{-tH} f` for `H = √(−Δ + M²) − M + V` in one dimension.
pub fn particle_semigroup_grid(
    f: &[f64],
    v: &PotentialSpec,
    t: f64,
    spec: &SubordinatorSpec,
    grid: &GridSpec,
) -> Result<(Vec<f64>, GridDiagnostics)> {
    ensure!(f.len() == grid.points, Domain, "grid function has {} values, grid has {}", f.len(), grid.points);
    ensure!(t >= 0.0, Domain, "horizon must be non-negative");
    let prop = particle_propagator(v, spec, grid)?;
    let mut diag = GridDiagnostics::default();
    let mut u: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    prop.inspect(&u, &mut diag);
    prop.evolve(&mut u, t, &mut diag);
    prop.inspect(&u, &mut diag);
    check_resolution(&diag)?;
    Ok((u.iter().map(|z| z.re).collect(), diag))
}

/// `(f, e^{-t_1 H} g_1 e^{-(t_2 − t_1) H} ⋯ g_{n−1} e^{-(t − t_{n−1}) H} g)`.
pub fn particle_matrix_element_grid(
    f: &TestFunction,
    g: &TestFunction,
    v: &PotentialSpec,
    insertions: &[(f64, TestFunction)],
    t: f64,
    spec: &SubordinatorSpec,
    grid: &GridSpec,
) -> Result<(f64, GridDiagnostics)> {
    let prop = particle_propagator(v, spec, grid)?;
    let mut times: Vec<f64> = insertions.iter().map(|(s, _)| *s).collect();
    ensure!(
        times.windows(2).all(|w| w[0] < w[1]) && times.iter().all(|&s| s > 0.0 && s < t),
        Config,
        "insertion times must be strictly increasing inside (0, t)"
    );
    times.push(t);
    let mut diag = GridDiagnostics::default();
    let mut u: Vec<Complex64> = sample_on_grid(g, grid).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    prop.inspect(&u, &mut diag);
    // propagate from the right: the last insertion acts first
    let mut now = t;
    for (s, h) in insertions.iter().rev() {
        prop.evolve(&mut u, now - s, &mut diag);
        for (z, x) in u.iter_mut().zip(grid.positions()) {
            *z *= h.eval(&[x]);
        }
        now = *s;
    }
    prop.evolve(&mut u, now, &mut diag);
    prop.inspect(&u, &mut diag);
    check_resolution(&diag)?;
    Ok((prop.inner(&sample_on_grid(f, grid), &u), diag))
}

/// Field-mode resolution: the number of oscillator eigenfunctions kept.
/// The mode coordinate is represented on the matching Gauss–Hermite nodes,
/// where the free oscillator is exact and the interaction is diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeGridSpec {
    pub modes: usize,
    pub dt: f64,
}

impl ModeGridSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            (8..=MAX_MODES).contains(&self.modes),
            Config,
            "mode count must lie in 8..={MAX_MODES}, got {}",
            self.modes
        );
        ensure!(self.dt > 0.0 && self.dt.is_finite(), Config, "grid time step must be positive");
        Ok(())
    }

    pub fn refined(&self) -> Self {
        Self { modes: 2 * self.modes, dt: 0.5 * self.dt }
    }
}

/// Largest supported number of oscillator modes.
pub const MAX_MODES: usize = 256;

/// Position grid (which also sets the time step) and mode count for the
/// coupled oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledGridSpec {
    pub x: GridSpec,
    pub modes: usize,
}

impl Default for CoupledGridSpec {
    fn default() -> Self {
        Self { x: GridSpec { half_length: 16.0, points: 256, dt: 1e-3 }, modes: 48 }
    }
}

impl CoupledGridSpec {
    pub fn validate(&self) -> Result<()> {
        self.x.validate()?;
        ModeGridSpec { modes: self.modes, dt: self.x.dt }.validate()
    }

    pub fn refined(&self) -> Self {
        Self { x: self.x.refined(), modes: 2 * self.modes }
    }
}

/// `(f⊗Ω, e^{-tH} g⊗Ω)` at each horizon for
/// `H = h(−∂_x²) + (ω₀/2)(−∂_q² + q² − 1) + V(x) + κP(c(x) q)`, where `Ω` is
/// the oscillator ground state and `q` has vacuum variance `½`.
#[allow(clippy::too_many_arguments)]
pub fn coupled_single_mode_grid(
    f: &TestFunction,
    g: &TestFunction,
    spec: &SubordinatorSpec,
    model: &SingleModeModel,
    v: &PotentialSpec,
    p: &PolynomialInteraction,
    horizons: &[f64],
    grid: &CoupledGridSpec,
) -> Result<GridResult> {
    grid.validate()?;
    v.validate(1)?;
    p.validate()?;
    ensure!(!p.is_formal(), ModelValidity, "the grid oracle needs κ ≥ 0");
    let basis = HermiteBasis::new(grid.modes);
    let xs = grid.x.positions();
    let nx = xs.len();
    let w0 = model.omega0;
    let hx: Vec<f64> = grid.x.wavenumbers().iter().map(|&k| spec.laplace_exponent(k * k)).collect::<Result<_>>()?;
    let mut pot = Vec::with_capacity(nx * grid.modes);
    let mut sym = Vec::with_capacity(nx * grid.modes);
    for (n, &q) in basis.nodes.iter().enumerate() {
        for &x in &xs {
            let c = model.coupling.eval(&[x]);
            pot.push(v.eval(&[x]) + p.coupling * p.eval(c * q));
        }
        for &h in &hx {
            sym.push(h + w0 * n as f64);
        }
    }
    let omega = basis.vacuum();
    let prop = Propagator {
        axes: vec![Axis::fourier(grid.x), Axis::Hermite(basis)],
        dt: grid.x.dt,
        potential: pot,
        symbol: sym,
    };
    let tensor = |h: &TestFunction| -> Vec<f64> {
        let hx = sample_on_grid(h, &grid.x);
        omega.iter().flat_map(|&o| hx.iter().map(move |a| a * o)).collect()
    };
    prop.matrix_elements(&tensor(f), &tensor(g), horizons)
}

/// `(Ω, e^{-t_i H} Ω)` for `H = (ω₀/2)(−∂_q² + q² − 1) + V(a q)`, the
/// single-mode field with `φ(f) = a q`.
pub fn oscillator_1d_grid(
    v_bos: &ScalarFunction,
    amplitude: f64,
    omega0: f64,
    horizons: &[f64],
    grid: &ModeGridSpec,
) -> Result<GridResult> {
    grid.validate()?;
    v_bos.validate_bounded_below()?;
    ensure!(omega0 > 0.0, ModelValidity, "mode frequency must be positive");
    let basis = HermiteBasis::new(grid.modes);
    let pot = basis.nodes.iter().map(|&q| v_bos.eval(amplitude * q)).collect();
    let sym = (0..grid.modes).map(|n| omega0 * n as f64).collect();
    let omega = basis.vacuum();
    let prop = Propagator { axes: vec![Axis::Hermite(basis)], dt: grid.dt, potential: pot, symbol: sym };
    prop.matrix_elements(&omega, &omega, horizons)
}
