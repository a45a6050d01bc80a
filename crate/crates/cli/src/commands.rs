//! Subcommand pipelines.

use std::time::Instant;

use clap::ValueEnum;
use rayon::prelude::*;
use relfk::field::SingleModeModel;
use relfk::oracle::{coupled_single_mode_grid, oscillator_1d_grid, particle_matrix_element_grid, GridDiagnostics};
use relfk::stats::{ks_critical, ks_statistic};
use relfk::{
    field_only_estimate, fk_with_insertions, ground_energy_estimate, hitting_time_reference, matrix_element,
    n_point_insertions, EstimateResult, FieldFunction, FieldModel, PolynomialInteraction, StateSpec, SubordinatorSpec,
    TestFunction,
};
use serde_json::json;

use crate::config::{
    coupled_model, particle_spec, ExperimentConfig, FieldConfig, OracleConfig, OracleKind, Requirements,
};
use crate::output::{Sink, SummaryRow};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    SubordinatorCheck,
    FreeParticle,
    CovarianceTable,
    MatrixElement,
    NPoint,
    FieldOnly,
    GroundEnergy,
    Oracle,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SubordinatorCheck => "subordinator-check",
            Command::FreeParticle => "free-particle",
            Command::CovarianceTable => "covariance-table",
            Command::MatrixElement => "matrix-element",
            Command::NPoint => "n-point",
            Command::FieldOnly => "field-only",
            Command::GroundEnergy => "ground-energy",
            Command::Oracle => "oracle",
            Command::Compare => "compare",
        }
    }
}

/// Runs one subcommand, filling `sink`. With `strict`, breaches of the
/// built-in checks become errors after all records are collected.
pub fn run(command: Command, cfg: &ExperimentConfig, strict: bool, sink: &mut Sink) -> Result<(), CliError> {
    let failures = match command {
        Command::SubordinatorCheck => subordinator_check(cfg, sink)?,
        Command::FreeParticle => free_particle(cfg, sink)?,
        Command::CovarianceTable => covariance_table(cfg, sink)?,
        Command::MatrixElement => matrix_elements(cfg, sink)?,
        Command::NPoint => n_point(cfg, sink)?,
        Command::FieldOnly => field_only(cfg, sink)?,
        Command::GroundEnergy => ground_energy(cfg, sink)?,
        Command::Oracle => oracle(cfg, sink)?,
        Command::Compare => compare(cfg, sink)?,
    };
    if strict && !failures.is_empty() {
        return Err(CliError::Strict(failures.join("; ")));
    }
    Ok(())
}

type Failures = Vec<String>;

fn estimate_row(label: &str, t: f64, e: &EstimateResult) -> SummaryRow {
    SummaryRow {
        label: label.to_string(),
        horizon: Some(t),
        value: e.mean,
        stderr: Some(e.stderr),
        n_samples: Some(e.n_samples),
        ..SummaryRow::default()
    }
}

fn sigmas(value: f64, reference: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        (value - reference) / stderr
    } else if value == reference {
        0.0
    } else {
        f64::INFINITY.copysign(value - reference)
    }
}

fn subordinator_check(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Failures, CliError> {
    let mut req = Requirements::default();
    let model = req.need("model", cfg.model.as_ref());
    req.finish("subordinator-check")?;
    let spec = particle_spec(model.unwrap())?;
    let run = cfg.run();
    let sc = cfg.subordinator_check();
    let mut failures = Vec::new();

    let points: Vec<(f64, f64)> =
        sc.horizons.iter().flat_map(|&t| sc.laplace_args.iter().map(move |&s| (t, s))).collect();
    let clock = Instant::now();
    let results: Vec<(f64, f64)> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(t, s))| {
            let mut rng = relfk::rng::stream(run.seed, i as u64);
            relfk::empirical_laplace_check(t, s, &spec, run.samples, &mut rng)
        })
        .collect::<relfk::Result<_>>()?;
    for (&(t, s), &(mean, stderr)) in points.iter().zip(&results) {
        let exact = (-t * spec.laplace_exponent(s)?).exp();
        let z = sigmas(mean, exact, stderr);
        let pass = z.abs() <= 3.0;
        let label = format!("laplace t={t} s={s}");
        if !pass {
            failures.push(format!("{label}: {z:.2}σ"));
        }
        sink.record(
            &label,
            run.samples,
            json!({ "mass": spec.mass(), "t": t, "s": s, "mean": mean, "stderr": stderr, "exact": exact, "sigmas": z, "pass": pass }),
        );
        sink.summary(SummaryRow {
            label,
            horizon: Some(t),
            value: mean,
            stderr: Some(stderr),
            n_samples: Some(run.samples),
            reference: Some(exact),
            sigmas: Some(z),
            pass: Some(pass),
        });
    }
    sink.timing("laplace", run.samples * points.len(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let ks = hitting_time_ks(&spec, sc.ks_horizon, sc.ks_step, sc.ks_samples, run.seed)?;
    let critical = ks_critical(sc.ks_alpha, sc.ks_samples, sc.ks_samples);
    let pass = ks <= critical;
    if !pass {
        failures.push(format!("KS statistic {ks:.4} above critical {critical:.4}"));
    }
    sink.record(
        "hitting-time ks",
        2 * sc.ks_samples,
        json!({ "t": sc.ks_horizon, "step": sc.ks_step, "statistic": ks, "critical": critical, "alpha": sc.ks_alpha, "pass": pass }),
    );
    sink.summary(SummaryRow {
        label: "hitting-time ks".into(),
        horizon: Some(sc.ks_horizon),
        value: ks,
        n_samples: Some(2 * sc.ks_samples),
        reference: Some(critical),
        pass: Some(pass),
        ..SummaryRow::default()
    });
    sink.timing("hitting-time ks", 2 * sc.ks_samples, clock.elapsed().as_secs_f64());
    Ok(failures)
}

/// Two-sample KS statistic between exact increments and the hitting-time
/// construction. Draws are split into chunks with private streams.
pub fn hitting_time_ks(spec: &SubordinatorSpec, t: f64, step: f64, n: usize, seed: u64) -> relfk::Result<f64> {
    const CHUNKS: usize = 64;
    const EXACT: u64 = 1 << 32;
    const HITTING: u64 = 2 << 32;
    let law = spec.increment_law(t)?;
    let per = n.div_ceil(CHUNKS);
    let exact: Vec<f64> = (0..CHUNKS)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = relfk::rng::stream(seed, EXACT + c as u64);
            let k = per.min(n.saturating_sub(c * per));
            (0..k).map(move |_| law.sample(&mut rng)).collect::<Vec<_>>()
        })
        .collect();
    let hitting: Vec<f64> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = relfk::rng::stream(seed, HITTING + c as u64);
            let k = per.min(n.saturating_sub(c * per));
            (0..k).map(|_| hitting_time_reference(t, spec, step, &mut rng)).collect::<relfk::Result<Vec<_>>>()
        })
        .collect::<relfk::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(ks_statistic(&exact, &hitting))
}

fn free_particle(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Failures, CliError> {
    let mut req = Requirements::default();
    let model = req.need("model", cfg.model.as_ref());
    let states = req.need("states", cfg.states.as_ref());
    let run = cfg.run();
    let horizons = req.need_horizons(&run);
    req.finish("free-particle")?;
    let (model, states) = (model.unwrap(), states.unwrap());
    let spec = particle_spec(model)?;
    let insertions: Vec<(f64, TestFunction)> =
        cfg.particle_insertions.iter().map(|i| (i.time, i.function.clone())).collect();
    for &t in &horizons {
        let clock = Instant::now();
        let e = fk_with_insertions(
            &states.left.particle,
            &states.right.particle,
            &model.potential,
            &insertions,
            t,
            model.dim,
            &spec,
            &run.sampling(),
        )?;
        let label = format!("free-particle t={t}");
        sink.record(&label, e.n_samples, json!({ "t": t, "estimate": e }));
        sink.summary(estimate_row(&label, t, &e));
        sink.timing(&label, e.n_samples, clock.elapsed().as_secs_f64());
    }
    Ok(Vec::new())
}

fn field_model(cfg: &ExperimentConfig, req: &mut Requirements) -> Option<(usize, FieldConfig)> {
    let model = req.need("model", cfg.model.as_ref())?;
    let field = req.need("model.field", model.field.as_ref())?;
    Some((model.dim, field.clone()))
}

fn covariance_table(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Failures, CliError> {
    let mut req = Requirements::default();
    let fm = field_model(cfg, &mut req);
    req.finish("covariance-table")?;
    let (dim, fc) = fm.unwrap();
    let field = fc.build(dim)?;
    field.validate_for(dim)?;
    let table = cfg.covariance_table.clone().unwrap_or_default();
    let origin = vec![0.0; dim];
    let rho = FieldFunction::form_at(&origin);
    let half_norm = 0.5 * field.bos_inner(&rho, &rho)?;
    let w00 = field.covariance(&origin, &origin, 0.0);
    sink.record("norm", 0, json!({ "w00": w00, "half_norm_sq": half_norm }));
    sink.summary(SummaryRow {
        label: "W(0,0)".into(),
        horizon: Some(0.0),
        value: w00,
        reference: Some(half_norm),
        pass: Some((w00 - half_norm).abs() <= 1e-12 * half_norm.abs().max(1e-300)),
        ..SummaryRow::default()
    });
    for &r in &table.separations {
        let mut x = origin.clone();
        x[0] = r;
        for &tau in &table.lags {
            let w = field.covariance(&x, &origin, tau);
            let label = format!("W r={r} tau={tau}");
            sink.record(&label, 0, json!({ "r": r, "tau": tau, "w": w }));
            sink.summary(SummaryRow { label, horizon: Some(tau), value: w, ..SummaryRow::default() });
        }
    }
    Ok(Vec::new())
}

fn weight_failures(label: &str, e: &EstimateResult) -> Failures {
    let mut f = Vec::new();
    if let Some(w) = &e.weights {
        if w.non_positive > 0 {
            f.push(format!("{label}: {} non-positive path weights", w.non_positive));
        }
        if w.unconverged > 0 {
            f.push(format!("{label}: {} path weights without quadrature convergence", w.unconverged));
        }
    }
    f
}

fn matrix_elements(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Failures, CliError> {
    let mut req = Requirements::default();
    let fm = field_model(cfg, &mut req);
    let p = req.need("interaction", cfg.interaction.as_ref());
    let states = req.need("states", cfg.states.as_ref());
    let run = cfg.run();
    let horizons = req.need_horizons(&run);
    req.finish("matrix-element")?;
    let model = coupled_model(cfg.model.as_ref().unwrap(), &fm.unwrap().1, p.unwrap())?;
    let states = states.unwrap();
    let mut failures = Vec::new();
    for &t in &horizons {
        let clock = Instant::now();
        let e = matrix_element(&states.left, &states.right, &model, t, &run.estimator())?;
        let label = format!("matrix-element t={t}");
        failures.extend(weight_failures(&label, &e));
        sink.record(&label, e.n_samples, json!({ "t": t, "estimate": e, "formal": model.interaction.is_formal() }));
        sink.summary(estimate_row(&label, t, &e));
        sink.timing(&label, e.n_samples, clock.elapsed().as_secs_f64());
    }
    Ok(failures)
}

fn n_point(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Failures, CliError> {
    let mut req = Requirements::default();
    let fm = field_model(cfg, &mut req);
    let states = req.need("states", cfg.states.as_ref());
    let run = cfg.run();
    let horizons = req.need_horizons(&run);
    req.finish("n-point")?;
    if cfg.interaction.as_ref().is_some_and(|p| p.coupling != 0.0) {
        log::warn!("n-point uses the uncoupled Hamiltonian; the interaction block is ignored");
    }
    let free = PolynomialInteraction::monomial(2, 0.0)?;
    let model = coupled_model(cfg.model.as_ref().unwrap(), &fm.unwrap().1, &free)?;
    let states = states.unwrap();
    let insertions: Vec<_> = cfg.insertions.iter().map(|i| (i.time, i.function.clone())).collect();
    for &t in &horizons {
        let clock = Instant::now();
        let e = n_point_insertions(&states.left, &states.right, &model, &insertions, t, &run.estimator())?;
        let label = format!("n-point t={t}");
        sink.record(&label, e.n_samples, json!({ "t": t, "insertions": cfg.insertions.len(), "estimate": e }));
        sink.summary(estimate_row(&label, t, &e));
        sink.timing(&label, e.n_samples, clock.elapsed().as_secs_f64());
    }
    Ok(Vec::new())
}

fn field_only(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Failures, CliError> {
    let mut req = Requirements::default();
    let fm = field_model(cfg, &mut req);
    let fo = req.need("field_only", cfg.field_only.as_ref());
    let run = cfg.run();
    let horizons = req.need_horizons(&run);
    req.finish("field-only")?;
    let (dim, fc) = fm.unwrap();
    let field = fc.build(dim)?;
    let fo = fo.unwrap();
    for &t in &horizons {
        let clock = Instant::now();
        let e = field_only_estimate(&fo.function, &fo.potential, &field, t, &run.sampling())?;
        let label = format!("field-only t={t}");
        sink.record(&label, e.n_samples, json!({ "t": t, "estimate": e }));
        sink.summary(estimate_row(&label, t, &e));
        sink.timing(&label, e.n_samples, clock.elapsed().as_secs_f64());
    }
    Ok(Vec::new())
}

fn ground_energy(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Failures, CliError> {
    let mut req = Requirements::default();
    let fm = field_model(cfg, &mut req);
    let p = req.need("interaction", cfg.interaction.as_ref());
    let states = req.need("states", cfg.states.as_ref());
    let run = cfg.run();
    if run.horizons.is_empty() {
        req.need::<()>("run.horizons", None);
    }
    req.finish("ground-energy")?;
    let model = coupled_model(cfg.model.as_ref().unwrap(), &fm.unwrap().1, p.unwrap())?;
    let states = states.unwrap();
    let clock = Instant::now();
    let g = ground_energy_estimate(&states.left, &states.right, &model, &run.horizons, &run.estimator())?;
    let n: usize = g.matrix_elements.iter().map(|e| e.n_samples).sum();
    let mut failures = Vec::new();
    for (&t, e) in g.horizons.iter().zip(&g.matrix_elements) {
        let label = format!("matrix-element t={t}");
        failures.extend(weight_failures(&label, e));
        sink.summary(estimate_row(&label, t, e));
    }
    sink.record(
        "ground-energy",
        n,
        json!({ "energy": g.energy(), "fit": g.fit, "horizons": g.horizons, "matrix_elements": g.matrix_elements }),
    );
    sink.summary(SummaryRow {
        label: "ground-energy".into(),
        value: g.energy(),
        stderr: Some(g.fit.slope_stderr),
        n_samples: Some(n),
        ..SummaryRow::default()
    });
    sink.timing("ground-energy", n, clock.elapsed().as_secs_f64());
    Ok(failures)
}

/// Grid values at each horizon, optionally with a refined rerun.
pub struct OracleOutcome {
    pub horizons: Vec<f64>,
    pub values: Vec<f64>,
    pub diagnostics: GridDiagnostics,
    pub refined: Option<Vec<f64>>,
}

impl OracleOutcome {
    /// Largest change under refinement.
    pub fn self_convergence(&self) -> Option<f64> {
        self.refined.as_ref().map(|r| r.iter().zip(&self.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// The most accurate value available at horizon `i`.
    pub fn best(&self, i: usize) -> f64 {
        self.refined.as_ref().map_or(self.values[i], |r| r[i])
    }
}

fn single_mode(fc: &FieldConfig) -> Result<SingleModeModel, CliError> {
    match fc {
        FieldConfig::SingleMode { omega0, coupling } => {
            FieldModel::single_mode(*omega0, coupling.clone())?;
            Ok(SingleModeModel { omega0: *omega0, coupling: coupling.clone() })
        }
        FieldConfig::Continuum { .. } => {
            Err(CliError::Config("the grid oracles need a single-mode field".into(), Vec::new()))
        }
    }
}

fn vacuum_scale(s: &StateSpec) -> Result<f64, CliError> {
    s.field
        .constant_value()
        .ok_or_else(|| CliError::Config("the coupled grid oracle supports vacuum field states only".into(), Vec::new()))
}

fn require_oracle(cfg: &ExperimentConfig, command: &str) -> Result<(OracleConfig, Vec<f64>), CliError> {
    let mut req = Requirements::default();
    let oc = req.need("oracle", cfg.oracle.as_ref()).cloned();
    let horizons = req.need_horizons(&cfg.run());
    match oc.as_ref().map(|o| o.kind) {
        Some(OracleKind::Particle) => {
            req.need("model", cfg.model.as_ref());
            req.need("states", cfg.states.as_ref());
        }
        Some(OracleKind::Coupled) => {
            field_model(cfg, &mut req);
            req.need("interaction", cfg.interaction.as_ref());
            req.need("states", cfg.states.as_ref());
        }
        Some(OracleKind::FieldOnly) => {
            field_model(cfg, &mut req);
            req.need("field_only", cfg.field_only.as_ref());
        }
        None => {}
    }
    req.finish(command)?;
    let model = cfg.model.as_ref().unwrap();
    if model.dim != 1 && oc.as_ref().unwrap().kind != OracleKind::FieldOnly {
        return Err(CliError::Config("grid oracles are one-dimensional".into(), Vec::new()));
    }
    Ok((oc.unwrap(), horizons))
}

/// Runs the oracle selected by the config's `oracle` block.
pub fn oracle_values(cfg: &ExperimentConfig, command: &str) -> Result<OracleOutcome, CliError> {
    let (oc, horizons) = require_oracle(cfg, command)?;
    let model = cfg.model.as_ref().unwrap();
    let run_once = |refined: bool| -> Result<(Vec<f64>, GridDiagnostics), CliError> {
        match oc.kind {
            OracleKind::Particle => {
                let grid = if refined { oc.grid.refined() } else { oc.grid };
                let spec = particle_spec(model)?;
                let states = cfg.states.as_ref().unwrap();
                let ins: Vec<(f64, TestFunction)> =
                    cfg.particle_insertions.iter().map(|i| (i.time, i.function.clone())).collect();
                let mut values = Vec::new();
                let mut diag = GridDiagnostics::default();
                for &t in &horizons {
                    let (v, d) = particle_matrix_element_grid(
                        &states.left.particle,
                        &states.right.particle,
                        &model.potential,
                        &ins,
                        t,
                        &spec,
                        &grid,
                    )?;
                    values.push(v);
                    diag = d;
                }
                Ok((values, diag))
            }
            OracleKind::Coupled => {
                let grid = if refined { oc.coupled_grid().refined() } else { oc.coupled_grid() };
                let sm = single_mode(model.field.as_ref().unwrap())?;
                let states = cfg.states.as_ref().unwrap();
                let scale = vacuum_scale(&states.left)? * vacuum_scale(&states.right)?;
                let r = coupled_single_mode_grid(
                    &states.left.particle,
                    &states.right.particle,
                    &particle_spec(model)?,
                    &sm,
                    &model.potential,
                    cfg.interaction.as_ref().unwrap(),
                    &horizons,
                    &grid,
                )?;
                Ok((r.values.iter().map(|v| scale * v).collect(), r.diagnostics))
            }
            OracleKind::FieldOnly => {
                let grid = if refined { oc.mode_grid().refined() } else { oc.mode_grid() };
                let fc = model.field.as_ref().unwrap();
                let sm = single_mode(fc)?;
                let fo = cfg.field_only.as_ref().unwrap();
                let field = fc.build(model.dim)?;
                let amplitude = field.bos_inner(&fo.function, &fo.function)?.sqrt();
                let r = oscillator_1d_grid(&fo.potential, amplitude, sm.omega0, &horizons, &grid)?;
                Ok((r.values, r.diagnostics))
            }
        }
    };
    let (values, diagnostics) = run_once(false)?;
    let refined = if oc.check_refinement { Some(run_once(true)?.0) } else { None };
    Ok(OracleOutcome { horizons, values, diagnostics, refined })
}

fn oracle(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Failures, CliError> {
    let clock = Instant::now();
    let o = oracle_values(cfg, "oracle")?;
    let tol = cfg.compare_limits().convergence_tol;
    let conv = o.self_convergence();
    let converged = conv.map(|c| c <= tol);
    let mut failures = Vec::new();
    if converged == Some(false) {
        failures.push(format!("oracle changed by {:.3e} under refinement", conv.unwrap()));
    }
    for (i, &t) in o.horizons.iter().enumerate() {
        let label = format!("oracle t={t}");
        sink.record(
            &label,
            0,
            json!({
                "t": t,
                "kind": cfg.oracle.as_ref().unwrap().kind,
                "grid": cfg.oracle.as_ref().unwrap(),
                "value": o.values[i],
                "refined": o.refined.as_ref().map(|r| r[i]),
                "diagnostics": o.diagnostics,
            }),
        );
        sink.summary(SummaryRow {
            label,
            horizon: Some(t),
            value: o.values[i],
            reference: o.refined.as_ref().map(|r| r[i]),
            pass: converged,
            ..SummaryRow::default()
        });
    }
    sink.timing("oracle", 0, clock.elapsed().as_secs_f64());
    Ok(failures)
}

fn compare(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Failures, CliError> {
    let clock = Instant::now();
    let o = oracle_values(cfg, "compare")?;
    let oracle_secs = clock.elapsed().as_secs_f64();
    let limits = cfg.compare_limits();
    let conv = o.self_convergence();
    let converged = conv.map_or(true, |c| c <= limits.convergence_tol);
    let run = cfg.run();
    let model = cfg.model.as_ref().unwrap();
    let kind = cfg.oracle.as_ref().unwrap().kind;
    let mut failures = Vec::new();
    if !converged {
        failures.push(format!("oracle changed by {:.3e} under refinement", conv.unwrap()));
    }
    for (i, &t) in o.horizons.iter().enumerate() {
        let clock = Instant::now();
        let e = match kind {
            OracleKind::Particle => {
                let states = cfg.states.as_ref().unwrap();
                let ins: Vec<(f64, TestFunction)> =
                    cfg.particle_insertions.iter().map(|i| (i.time, i.function.clone())).collect();
                fk_with_insertions(
                    &states.left.particle,
                    &states.right.particle,
                    &model.potential,
                    &ins,
                    t,
                    model.dim,
                    &particle_spec(model)?,
                    &run.sampling(),
                )?
            }
            OracleKind::Coupled => {
                let states = cfg.states.as_ref().unwrap();
                let m = coupled_model(model, model.field.as_ref().unwrap(), cfg.interaction.as_ref().unwrap())?;
                matrix_element(&states.left, &states.right, &m, t, &run.estimator())?
            }
            OracleKind::FieldOnly => {
                let fo = cfg.field_only.as_ref().unwrap();
                let field = model.field.as_ref().unwrap().build(model.dim)?;
                field_only_estimate(&fo.function, &fo.potential, &field, t, &run.sampling())?
            }
        };
        let reference = o.best(i);
        let z = sigmas(e.mean, reference, e.stderr);
        let pass = z.abs() <= limits.sigma_limit && converged;
        let label = format!("compare t={t}");
        if z.abs() > limits.sigma_limit {
            failures.push(format!("{label}: discrepancy {z:.2}σ exceeds {}σ", limits.sigma_limit));
        }
        failures.extend(weight_failures(&label, &e));
        sink.record(
            &label,
            e.n_samples,
            json!({
                "t": t,
                "kind": kind,
                "estimate": e,
                "oracle": reference,
                "oracle_self_convergence": conv,
                "sigmas": z,
                "pass": pass,
            }),
        );
        sink.summary(SummaryRow {
            label: label.clone(),
            horizon: Some(t),
            value: e.mean,
            stderr: Some(e.stderr),
            n_samples: Some(e.n_samples),
            reference: Some(reference),
            sigmas: Some(z),
            pass: Some(pass),
        });
        sink.timing(&label, e.n_samples, clock.elapsed().as_secs_f64());
    }
    sink.timing("oracle", 0, oracle_secs);
    Ok(failures)
}
