use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relfk_cli::config::Format;
use relfk_cli::output::Provenance;
use relfk_cli::{run, CliError, Command, ExperimentConfig, Sink, VERSION};

#[derive(Parser)]
#[command(name = "relfk", version = VERSION, about = "Path-integral experiments for a relativistic particle coupled to a Bose field")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.samples`.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 6 when a built-in check fails.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads.
    #[arg(long, global = true, env = "RELFK_WORKERS")]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Subordinator Laplace transform and hitting-time law.
    SubordinatorCheck,
    /// Particle-only Feynman–Kac matrix elements.
    FreeParticle,
    /// Field covariance W(r, τ) on a lattice.
    CovarianceTable,
    /// Coupled matrix elements (Φ, e^{-tH} Ψ).
    MatrixElement,
    /// Multi-time field insertions.
    NPoint,
    /// The field alone with a potential.
    FieldOnly,
    /// Log-slope ground-energy fit.
    GroundEnergy,
    /// Spectral-grid reference values.
    Oracle,
    /// Monte Carlo against the grid oracle.
    Compare,
    /// Parse the config and print it back in canonical form.
    ShowConfig,
}

fn command(s: Sub) -> Option<Command> {
    Some(match s {
        Sub::SubordinatorCheck => Command::SubordinatorCheck,
        Sub::FreeParticle => Command::FreeParticle,
        Sub::CovarianceTable => Command::CovarianceTable,
        Sub::MatrixElement => Command::MatrixElement,
        Sub::NPoint => Command::NPoint,
        Sub::FieldOnly => Command::FieldOnly,
        Sub::GroundEnergy => Command::GroundEnergy,
        Sub::Oracle => Command::Oracle,
        Sub::Compare => Command::Compare,
        Sub::ShowConfig => return None,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("worker count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if cli.seed.is_some() || cli.samples.is_some() {
        let mut run = cfg.run();
        if let Some(s) = cli.seed {
            run.seed = s;
        }
        if let Some(n) = cli.samples {
            run.samples = n;
        }
        cfg.run = Some(run);
    }
    let Some(cmd) = command(cli.command) else {
        print!("{}", cfg.to_text(Format::of(path)));
        return Ok(());
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| PathBuf::from(&o.dir)))
        .unwrap_or_else(|| PathBuf::from("relfk-out"));
    let provenance = Provenance {
        command: cmd.name().to_string(),
        config_hash: cfg.hash(),
        seed: cfg.run().seed,
        version: VERSION.to_string(),
    };
    let mut sink = Sink::new(provenance);
    let outcome = run(cmd, &cfg, cli.strict, &mut sink);
    // records gathered before a strict failure are still written
    if outcome.is_ok() || matches!(outcome, Err(CliError::Strict(_))) {
        sink.write(&dir)?;
        for row in sink.rows() {
            let err = row.stderr.map(|s| format!(" ± {s:.3e}")).unwrap_or_default();
            let reference = row.reference.map(|r| format!("  ref {r:.6e}")).unwrap_or_default();
            let z = row.sigmas.map(|z| format!("  {z:+.2}σ")).unwrap_or_default();
            let pass = match row.pass {
                Some(true) => "  ok",
                Some(false) => "  FAIL",
                None => "",
            };
            println!("{:<28} {:.6e}{err}{reference}{z}{pass}", row.label, row.value);
        }
    }
    outcome
}
