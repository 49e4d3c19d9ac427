use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thinwall::commands::{self, CommandError, Report};
use thinwall::config::{parse_mesh, parse_quad, parse_step, positive_list, ConfigError, RunConfig};

/// Energies, recovery sequences and Korn constants of thin-walled beams.
///
/// Exit status: 0 when every acceptance check passed, 1 on a numerical or
/// acceptance failure, 2 on a configuration error.
#[derive(Parser, Debug)]
#[command(name = "thinwall", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the CSV here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recovery construction, 1 to 5.
    #[arg(long, global = true)]
    step: Option<String>,
    /// Comma separated values of h.
    #[arg(long = "h-list", global = true)]
    h_list: Option<String>,
    /// Quadrature nodes as nx1,ns,nt.
    #[arg(long, global = true)]
    quad: Option<String>,
    /// Comma separated values of eps for the Korn scan.
    #[arg(long = "eps-list", global = true)]
    eps_list: Option<String>,
    /// Korn mesh as NsxNt.
    #[arg(long, global = true)]
    mesh: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy ratio against the limit functional over the h list.
    GammaSweep,
    /// Young's modulus, Poisson ratio and relaxed bending coefficients.
    MaterialTable,
    /// Class membership residuals of the configured triple.
    ClassCheck,
    /// Korn constant over the eps list.
    KornScan,
    /// Diagnostics of one recovery field.
    RecoveryProbe {
        #[arg(long, default_value_t = 0.1)]
        h: f64,
    },
}

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.step {
        cfg.step = parse_step("--step", v)?;
    }
    if let Some(v) = &cli.h_list {
        cfg.h_list = positive_list("--h-list", v)?;
    }
    if let Some(v) = &cli.quad {
        cfg.quad = parse_quad("--quad", v)?;
    }
    if let Some(v) = &cli.eps_list {
        cfg.eps_list = positive_list("--eps-list", v)?;
    }
    if let Some(v) = &cli.mesh {
        cfg.mesh = parse_mesh("--mesh", v)?;
    }
    if let Some(v) = &cli.out {
        cfg.output = Some(v.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<Report, CommandError> {
    match cli.command {
        Command::GammaSweep => commands::gamma_sweep(cfg),
        Command::MaterialTable => commands::material_table(cfg),
        Command::ClassCheck => commands::class_check(cfg),
        Command::KornScan => commands::korn_scan(cfg),
        Command::RecoveryProbe { h } => commands::recovery_probe(cfg, h),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&cli, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(match e {
                CommandError::Config(_) => 2,
                CommandError::Numerical(_) => 1,
            });
        }
    };
    let written = match &cfg.output {
        Some(path) => report.table.write_file(path),
        None => report.table.write_to(std::io::stdout().lock()).map_err(std::io::Error::other),
    };
    if let Err(e) = written {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(2);
    }
    for f in &report.failures {
        eprintln!("check failed: {f}");
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
