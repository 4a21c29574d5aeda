use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isopt_cli::config::{ExperimentConfig, RawConfig};
use isopt_cli::csv::CsvTable;
use isopt_cli::harness::{summary_table, CliError, Experiment};
use isopt_cli::reproduce::{self, Curve};
use isopt_core::Scheme;

#[derive(Parser)]
#[command(
    name = "isopt",
    version,
    about = "Importance-sampling estimators, optimal proposals and benchmark reproductions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicate one configured estimator and print its summary row.
    Estimate(ExperimentArgs),
    /// Like `estimate`, once per sample size.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
    },
    /// Optimal-proposal utilities.
    Qopt {
        #[command(subcommand)]
        action: QoptAction,
    },
    /// Diagnostic sweeps.
    Diag {
        #[command(subcommand)]
        action: DiagAction,
    },
    /// Regenerate benchmark tables and figure data.
    Reproduce {
        #[arg(value_enum)]
        what: Reproduction,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replications per cell (default 1000 for table3, 5000 for curves).
        #[arg(long)]
        reps: Option<usize>,
        /// Samples per run for curves.
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Sample sizes for table3.
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = isopt_core::grid::DEFAULT_GRID_POINTS)]
        grid_points: usize,
    },
}

#[derive(Subcommand)]
enum QoptAction {
    /// Write `(θ, q_opt(θ))` on the grid, normalized to unit mass.
    Dump {
        #[arg(long)]
        scheme: Scheme,
        /// Config supplying target, targets, f, phi, proposal and n.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key=value` overrides.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_points: Option<usize>,
    },
}

#[derive(Subcommand)]
enum DiagAction {
    /// Closed-form against empirical variance over a range of `h`.
    Sweep {
        #[arg(long, value_enum)]
        curve: CurveArg,
        #[arg(long)]
        h_from: f64,
        #[arg(long)]
        h_to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 5000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveArg {
    Is,
    Ris,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reproduction {
    Table3,
    Curves,
    Figures123,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Summary CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run CSV path.
    #[arg(long)]
    runs_out: Option<PathBuf>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// `standard` or `full-dm`.
    #[arg(long)]
    mis_weights: Option<String>,
}

fn raw_config(path: Option<&Path>, sets: &[String]) -> Result<RawConfig, CliError> {
    let mut raw = match path {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    for s in sets {
        raw.set_pair(s)?;
    }
    Ok(raw)
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut raw = raw_config(self.config.as_deref(), &self.set)?;
        let flags = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("reps", self.reps.map(|v| v.to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("grid_points", self.grid_points.map(|v| v.to_string())),
            ("mis_weights", self.mis_weights.clone()),
            ("output", self.out.as_ref().map(|p| p.display().to_string())),
            (
                "runs_output",
                self.runs_out.as_ref().map(|p| p.display().to_string()),
            ),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                if k == "reps" {
                    // `reps` and `replications` are aliases; the flag must beat either spelling.
                    raw.set("replications", v.clone())?;
                }
                raw.set(k, v)?;
            }
        }
        Ok(ExperimentConfig::from_raw(&raw)?)
    }
}

fn emit(table: &CsvTable, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => table.write(p),
        None => {
            print!("{}", table.render());
            Ok(())
        }
    }
}

/// Process exit status: 3 when any replication failed.
fn status(failed: usize) -> ExitCode {
    if failed > 0 {
        eprintln!("warning: {failed} replication(s) failed and were excluded");
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Estimate(args) => {
            let config = args.config()?;
            let out = isopt_cli::run(config.clone())?;
            if config.output.is_none() {
                print!(
                    "{}",
                    summary_table(std::slice::from_ref(&out.summary)).render()
                );
            }
            Ok(status(out.failed()))
        }
        Command::Sweep { exp, ns } => {
            let base = exp.config()?;
            let mut rows = Vec::new();
            for n in ns {
                let mut c = base.clone();
                c.n = n;
                c.budgets = None;
                rows.push(Experiment::new(c)?.run().summary);
            }
            let failed = rows.iter().map(|r| r.failed).sum();
            emit(&summary_table(&rows), base.output.as_deref())?;
            Ok(status(failed))
        }
        Command::Qopt {
            action:
                QoptAction::Dump {
                    scheme,
                    config,
                    set,
                    out,
                    grid_points,
                },
        } => {
            let mut raw = raw_config(config.as_deref(), &set)?;
            if let Some(g) = grid_points {
                raw.set("grid_points", g.to_string())?;
            }
            emit(&reproduce::qopt_dump(&raw, scheme)?, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Diag {
            action:
                DiagAction::Sweep {
                    curve,
                    h_from,
                    h_to,
                    steps,
                    n,
                    runs,
                    seed,
                    out,
                },
        } => {
            let curve = match curve {
                CurveArg::Is => Curve::Is,
                CurveArg::Ris => Curve::Ris,
            };
            let points: Vec<_> = reproduce::linspace(h_from, h_to, steps)
                .into_iter()
                .map(|h| reproduce::curve_point(curve, h, n, runs, seed))
                .collect();
            emit(&reproduce::diag_sweep_csv(&points), out.as_deref())?;
            Ok(status(points.iter().map(|p| p.failed).sum()))
        }
        Command::Reproduce {
            what,
            seed,
            reps,
            n,
            ns,
            out,
            grid_points,
        } => match what {
            Reproduction::Table3 => {
                let ns = ns.unwrap_or_else(|| reproduce::TABLE3_NS.to_vec());
                let rows = reproduce::table3(seed, reps.unwrap_or(1000), &ns, grid_points)?;
                emit(&reproduce::table3_csv(&rows), out.as_deref())?;
                Ok(status(rows.iter().map(|r| r.summary.failed).sum()))
            }
            Reproduction::Curves => {
                let points =
                    reproduce::curves(seed, reps.unwrap_or(5000), n, &reproduce::default_hs());
                emit(&reproduce::curves_csv(&points), out.as_deref())?;
                // asymptote-region failures are recorded in the CSV, not fatal
                Ok(status(points.iter().map(|p| p.failed).sum()))
            }
            Reproduction::Figures123 => {
                emit(&reproduce::figures123(grid_points)?, out.as_deref())?;
                Ok(ExitCode::SUCCESS)
            }
        },
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
