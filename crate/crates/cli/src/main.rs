use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kompakton_cli::{cmd_analyze, cmd_dispersion, cmd_simulate, cmd_table, parse_config, CliError, ExperimentConfig, TableId};
use kompakton_cli::output::read_file;

#[derive(Parser)]
#[command(name = "kompakton", version, about = "Compacton simulations and numerical radiation measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and store its snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output_dir` from the config, then `./out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the radiation in a stored trajectory.
    Analyze {
        /// Directory written by `simulate`.
        trajectory: PathBuf,
        /// Replaces the configuration stored with the trajectory.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to the trajectory directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Group velocity of the linearized scheme and front-speed predictions.
    Dispersion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Run a table campaign.
    Table {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        table: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    Ok(parse_config(&read_file(path)?)?)
}

fn out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let quiet = cli.quiet;
    let note = |msg: String| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(out, &cfg);
            note(format!("simulating {} with M = {} to t = {}", cfg.scheme, cfg.nodes, cfg.t_end));
            let summary = cmd_simulate(&cfg, &dir)?;
            note(format!("{} steps, {} snapshots written to {}", summary.steps, summary.snapshots, dir.display()));
            match summary.failure() {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Command::Analyze { trajectory, config, out } => {
            let cfg = config.as_deref().map(load).transpose()?;
            let dir = out.unwrap_or_else(|| trajectory.clone());
            let report = cmd_analyze(&trajectory, cfg.as_ref(), &dir)?;
            for side in [&report.forward, &report.backward] {
                note(format!(
                    "{}: velocity {}, scaling exponent {}",
                    side.side,
                    side.front_velocity.map_or("nd".into(), |f| format!("{:.4}", f.slope)),
                    side.scaling.map_or("nd".into(), |f| format!("{:.4}", f.exponent)),
                ));
            }
            Ok(())
        }
        Command::Dispersion { config, out, samples } => {
            let cfg = load(&config)?;
            let dir = out_dir(out, &cfg);
            cmd_dispersion(cfg.scheme, cfg.dx(), cfg.c0, samples, cfg.analysis.probe, &dir)?;
            note(format!("dispersion curve written to {}", dir.display()));
            Ok(())
        }
        Command::Table { config, table, out } => {
            let table: TableId = table.parse()?;
            let cfg = load(&config)?;
            let dir = out_dir(out, &cfg);
            cmd_table(table, &cfg, &dir, |r| {
                if !quiet {
                    let p = &r.point;
                    eprintln!(
                        "{} dx={} dt={} c={} c0={}: forward {}, backward {}",
                        p.scheme,
                        p.dx,
                        p.dt,
                        p.c,
                        p.c0,
                        r.forward.render(),
                        r.backward.render()
                    );
                }
            })?;
            note(format!("{table} written to {}", dir.display()));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
