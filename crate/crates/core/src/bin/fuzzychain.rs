use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fuzzychain::harness::output::metrics_table;
use fuzzychain::harness::{self, ExperimentConfig, HarnessError};
use fuzzychain::Granularity;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "fuzzychain", version, about = "Fuzzy-stake consensus simulation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write its result files.
    Run {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Re-read a result directory, print its metrics and regenerate plots.
    Report { dir: PathBuf },
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Round sweep over the 990-validator population.
    Exp1(Overrides),
    /// PoW / PoS / DPoS comparison.
    Exp2(Overrides),
    /// Experiment described by a TOML config file.
    Custom {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated round counts, e.g. 100,200,300.
    #[arg(long, value_delimiter = ',')]
    rounds: Option<Vec<u64>>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    granularity: Option<Granularity>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(rounds) = &self.rounds {
            cfg.rounds = rounds.clone();
        }
        if let Some(reps) = self.reps {
            cfg.repetitions = reps;
        }
        if let Some(g) = self.granularity {
            cfg.granularity = g;
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Report { dir } => {
            print!("{}", harness::report_dir(&dir)?);
            Ok(())
        }
        Command::Run { experiment } => {
            let (mut cfg, overrides) = match experiment {
                Experiment::Exp1(o) => (ExperimentConfig::exp1(), o),
                Experiment::Exp2(o) => (ExperimentConfig::exp2(), o),
                Experiment::Custom { config, overrides } => (ExperimentConfig::load(&config)?, overrides),
            };
            overrides.apply(&mut cfg);
            cfg.validate()?;
            let report = harness::run(&cfg)?;
            let written = harness::emit_outputs(&report, &overrides.out)?;
            print!("{}", metrics_table(&report.tables));
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}
