use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use linrec_core::density::{DensityReport, ReturnSet};
use linrec_core::harness::{self, Experiment, ExperimentConfig, HarnessError, RunReport};

#[derive(Parser, Debug)]
#[command(
    name = "linrec",
    version,
    about = "Run recurrence experiments and inspect return sets"
)]
struct Cli {
    /// Output directory; overrides the config and LINREC_OUT.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed overriding the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Evaluate orbits and windows on all cores.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run every inequality sweep with default parameters.
    Facts,
    /// Summarize a return set CSV (one column `n`).
    Density {
        returnset: PathBuf,
        /// Horizon of the set; defaults to its largest element.
        #[arg(long)]
        horizon: Option<u128>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run { config } => match ExperimentConfig::load(config) {
            Ok(cfg) => run(&cli, cfg),
            Err(e) => fail(&e),
        },
        Command::Facts => run(&cli, ExperimentConfig::new(Experiment::FactsSuite)),
        Command::Density { returnset, horizon } => match density(&cli, returnset, *horizon) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
    };
    ExitCode::from(code as u8)
}

fn fail(e: &HarnessError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

fn run(cli: &Cli, mut cfg: ExperimentConfig) -> i32 {
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.parallel |= cli.parallel;
    let out = harness::resolve_output_dir(cli.out.as_deref(), Some(&cfg));
    match harness::run(&cfg, &out) {
        Ok(report) => {
            print_report(&report, &out.join(cfg.experiment.id()));
            report.exit_code()
        }
        Err(e) => fail(&e),
    }
}

fn print_report(report: &RunReport, dir: &Path) {
    let mut stdout = io::stdout().lock();
    for a in &report.assertions {
        let tag = if a.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(stdout, "{tag} {}: {}", a.id, a.detail);
    }
    let verdict = if report.passed { "passed" } else { "FAILED" };
    let _ = writeln!(
        stdout,
        "{} {verdict}; outputs in {}",
        report.experiment,
        dir.display()
    );
}

fn density(cli: &Cli, path: &Path, horizon: Option<u128>) -> anyhow::Result<()> {
    use anyhow::Context;
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let set = ReturnSet::read_csv(BufReader::new(f), horizon)
        .with_context(|| format!("reading {}", path.display()))?;
    let report = DensityReport::compute(&set);
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let target = dir.join("density.csv");
            let f =
                File::create(&target).with_context(|| format!("creating {}", target.display()))?;
            report
                .write_csv(io::BufWriter::new(f))
                .with_context(|| format!("writing {}", target.display()))?;
            println!("{}", target.display());
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}
