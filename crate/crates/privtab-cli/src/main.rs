use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use privtab::error::Error;
use privtab::privacy::{Neighboring, PrivacyParams};
use privtab_cli::config::RunConfig;
use privtab_cli::pipeline::{self, EvalOptions};

#[derive(Parser)]
#[command(
    name = "privtab",
    version,
    about = "Differentially private synthetic tabular data from noisy marginals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: noisy marginals -> consistency -> synthesis.
    Synth(SynthArgs),
    /// Score a synthetic dataset against the original.
    Eval(EvalArgs),
    /// Tabulate the five composition strategies' noise stds over k.
    NoisePlan(NoisePlanArgs),
    /// Rank attribute pairs by their independent-difference score.
    Indif(IndifArgs),
    /// Dump a noisy-marginal archive.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Optional run-config JSON; flags below override its fields.
    #[arg(long)]
    run_config: Option<PathBuf>,
    /// Input data CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Domain spec JSON.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Marginal-config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    neighboring: Option<NeighboringArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum NeighboringArg {
    Bounded,
    Unbounded,
}

impl From<NeighboringArg> for Neighboring {
    fn from(v: NeighboringArg) -> Self {
        match v {
            NeighboringArg::Bounded => Neighboring::Bounded,
            NeighboringArg::Unbounded => Neighboring::Unbounded,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Original data CSV.
    #[arg(long)]
    data: PathBuf,
    /// Synthetic data CSV.
    #[arg(long)]
    synth: PathBuf,
    /// Domain spec JSON.
    #[arg(long)]
    domain: PathBuf,
    #[arg(long, default_value_t = privtab::evaluation::DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// City attribute for the Gini / pay-gap metric.
    #[arg(long, requires_all = ["gini_sex", "gini_income"])]
    gini_city: Option<String>,
    /// Sex attribute for the Gini / pay-gap metric.
    #[arg(long)]
    gini_sex: Option<String>,
    /// Income attribute (numeric) for the Gini / pay-gap metric.
    #[arg(long)]
    gini_income: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NoisePlanArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, value_enum, default_value = "unbounded")]
    neighboring: NeighboringArg,
    #[arg(long, default_value_t = 100)]
    k_max: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IndifArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    domain: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Marginal archive written by `synth`.
    #[arg(long)]
    archive: PathBuf,
}

fn emit(text: &str, out: Option<&PathBuf>) -> privtab::error::Result<()> {
    match out {
        Some(path) => pipeline::write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> privtab::error::Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let mut cfg = match &args.run_config {
                Some(path) => RunConfig::from_json(&pipeline::read_file(path)?)?,
                None => RunConfig::default(),
            };
            if let Some(v) = args.data {
                cfg.data = v;
            }
            if let Some(v) = args.domain {
                cfg.domain = v;
            }
            if let Some(v) = args.config {
                cfg.config = v;
            }
            if let Some(v) = args.out {
                cfg.out = v;
            }
            if let Some(v) = args.epsilon {
                cfg.epsilon = v;
            }
            if let Some(v) = args.delta {
                cfg.delta = v;
            }
            if let Some(v) = args.neighboring {
                cfg.neighboring = v.into();
            }
            if let Some(v) = args.seed {
                cfg.seed = v;
            }
            if let Some(v) = args.iterations {
                cfg.iterations = v;
            }
            let artifacts = pipeline::run_synth(&cfg)?;
            eprintln!(
                "wrote {}, {}, {}",
                artifacts.synthetic_csv.display(),
                artifacts.marginal_archive.display(),
                artifacts.manifest.display()
            );
            Ok(())
        }
        Command::Eval(args) => {
            let gini_attrs = match (args.gini_city, args.gini_sex, args.gini_income) {
                (Some(c), Some(s), Some(i)) => Some((c, s, i)),
                _ => None,
            };
            let opts = EvalOptions {
                trials: args.trials,
                seed: args.seed,
                gini_attrs,
            };
            let report = pipeline::run_eval(&args.data, &args.synth, &args.domain, &opts)?;
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            emit(&text, args.out.as_ref())
        }
        Command::NoisePlan(args) => {
            let params = PrivacyParams::new(args.epsilon, args.delta, args.neighboring.into())?;
            let table = pipeline::run_noise_plan(&params, args.k_max)?;
            emit(&table, args.out.as_ref())
        }
        Command::Indif(args) => {
            let table = pipeline::run_indif(&args.data, &args.domain)?;
            emit(&table, args.out.as_ref())
        }
        Command::Inspect(args) => {
            let text = pipeline::run_inspect(&args.archive)?;
            emit(&text, None)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // exit codes: 0 success, 1 pipeline/validation (including bad flags),
    // 2 I/O
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
