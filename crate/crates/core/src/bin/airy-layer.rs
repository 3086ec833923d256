use airy_layer::experiment::{run, ExperimentConfig, Kind};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "airy-layer", version, about = "Eigenvalue asymptotics and pseudospectra for -h²Δ + iV")]
struct Cli {
    #[command(subcommand)]
    kind: Command,
    /// JSON experiment configuration; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = default_jobs())]
    jobs: usize,
    /// Multiplier applied to every acceptance tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// 1D expansion against numerical eigenvalues.
    Expand1d,
    /// Boundary eigenvalue prediction, quasimode and residual in 2D.
    Expand2d,
    /// Leftmost eigenvalues of the 1D operator.
    Spectrum1d,
    /// Leftmost eigenvalues near the boundary point in 2D.
    Spectrum2d,
    /// Resolvent norm map over a window of the complex plane.
    Pseudospectrum,
    /// Semigroup norm curves.
    Semigroup,
    /// Run the full acceptance suite.
    VerifyAll,
}

impl From<Command> for Kind {
    fn from(c: Command) -> Kind {
        match c {
            Command::Expand1d => Kind::Expand1d,
            Command::Expand2d => Kind::Expand2d,
            Command::Spectrum1d => Kind::Spectrum1d,
            Command::Spectrum2d => Kind::Spectrum2d,
            Command::Pseudospectrum => Kind::Pseudospectrum,
            Command::Semigroup => Kind::Semigroup,
            Command::VerifyAll => Kind::VerifyAll,
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = Kind::from(cli.kind);
    let mut cfg = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match ExperimentConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            },
            Err(e) => return config_error(format!("{}: {e}", path.display())),
        },
        None => ExperimentConfig::new(kind),
    };
    if cfg.kind != kind {
        return config_error(format!("config kind {} does not match subcommand {}", cfg.kind.name(), kind.name()));
    }
    if let Some(out) = &cli.out {
        cfg.output = out.display().to_string();
    }
    if !(cli.tol_scale > 0.0 && cli.tol_scale.is_finite()) || cli.jobs == 0 {
        return config_error("--tol-scale must be positive and --jobs at least 1");
    }
    let out = match run(&cfg, cli.jobs, cli.tol_scale) {
        Ok(o) => o,
        Err(e) if e.is_config() => return config_error(e),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = out.write(std::path::Path::new(&cfg.output)) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    for r in &out.records {
        let status = match (r.passed, &r.error) {
            (_, Some(_)) => "ERROR",
            (Some(true), _) => "PASS",
            (Some(false), _) => "FAIL",
            (None, _) => "-",
        };
        let h = r.h.map(|h| format!(" h={h}")).unwrap_or_default();
        let detail = r.error.clone().or_else(|| r.values.get("detail").and_then(|d| d.as_str()).map(String::from)).unwrap_or_default();
        println!("{:<14} {:<6}{h} {detail}", r.stage, status);
    }
    println!("results written to {}", cfg.output);
    if out.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
