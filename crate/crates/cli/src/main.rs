use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;
use precdiff::model::ModelId;
use precdiff::simulation::summaries_to_csv;
use precdiff::{load_csv, power_curve, run_test, simulate, Group, NormOrder, SimulationSpec, TestConfig};

const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

/// Two-sample test for equality of high-dimensional precision matrices.
#[derive(Parser, Debug)]
#[command(name = "precdiff", version, about)]
struct Cli {
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test two CSV samples and write a JSON report.
    Test(TestArgs),
    /// Monte Carlo rejection frequencies for one configuration.
    Simulate(SimulateArgs),
    /// Rejection frequencies over a list of signal magnitudes.
    PowerCurve(PowerCurveArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Norm orders, comma separated; "inf" for the maximum.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,inf")]
    p_norms: Vec<NormOrder>,

    /// Numbers of largest entries kept by the norm, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,100,500,1000")]
    s0: Vec<usize>,

    /// Bootstrap replicates.
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    #[arg(long, default_value_t = 20_190_401)]
    seed: u64,

    /// Penalty scale for the node-wise regressions.
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,

    /// Scale columns to unit variance before the regressions (default).
    #[arg(long, overrides_with = "no_standardize")]
    standardize: bool,

    #[arg(long)]
    no_standardize: bool,

    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl ConfigArgs {
    fn config(&self) -> TestConfig {
        TestConfig {
            p_norms: self.p_norms.clone(),
            s0_values: self.s0.clone(),
            replicates: self.bootstrap,
            alpha: self.alpha,
            seed: self.seed,
            kappa: self.kappa,
            standardize: !self.no_standardize,
            threads: self.threads,
        }
    }
}

#[derive(Args, Debug)]
struct TestArgs {
    #[arg(long)]
    group1: PathBuf,

    #[arg(long)]
    group2: PathBuf,

    /// Treat the first row of each file as variable names.
    #[arg(long)]
    header: bool,

    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Base precision model: 1, 2 or 3.
    #[arg(long, default_value = "1")]
    model: ModelId,

    #[arg(long, short = 'd', default_value_t = 50)]
    dim: usize,

    #[arg(long, default_value_t = 100)]
    n1: usize,

    #[arg(long, default_value_t = 100)]
    n2: usize,

    /// Nonzero entries of the perturbation.
    #[arg(long, default_value_t = 20)]
    m_t: usize,

    #[arg(long, default_value_t = 100)]
    reps: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Signal magnitude; 0 estimates the size.
    #[arg(long, default_value_t = 0.0)]
    r: f64,

    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args, Debug)]
struct PowerCurveArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Ascending signal magnitudes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    r_list: Vec<f64>,

    #[command(flatten)]
    config: ConfigArgs,
}

impl ModelArgs {
    fn spec(&self, r: f64) -> SimulationSpec {
        SimulationSpec {
            model: self.model,
            d: self.dim,
            n1: self.n1,
            n2: self.n2,
            m_t: self.m_t,
            r,
            reps: self.reps,
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Test(args) => {
            let config = args.config.config();
            config.validate()?;
            let x = load_csv(&args.group1, args.header, Group::First)
                .with_context(|| format!("loading {}", args.group1.display()))?;
            let y = load_csv(&args.group2, args.header, Group::Second)
                .with_context(|| format!("loading {}", args.group2.display()))?;
            info!("group 1: {}x{}, group 2: {}x{}", x.n(), x.d(), y.n(), y.d());
            let report = precdiff::par::with_threads(config.threads, || run_test(&x, &y, &config))??;
            emit(args.config.output.as_deref(), &report.to_json()?)
        }
        Command::Simulate(args) => {
            let config = args.config.config();
            let spec = args.model.spec(args.r);
            let summary = precdiff::par::with_threads(config.threads, || simulate(&spec, &config))??;
            emit(args.config.output.as_deref(), &summaries_to_csv(&[summary]))
        }
        Command::PowerCurve(args) => {
            let config = args.config.config();
            let spec = args.model.spec(0.0);
            let curve = precdiff::par::with_threads(config.threads, || power_curve(&spec, &args.r_list, &config))??;
            emit(args.config.output.as_deref(), &curve.to_csv())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<precdiff::Error>() {
        Some(e) if e.is_numerical() => EXIT_NUMERICAL,
        Some(precdiff::Error::Internal(_)) => EXIT_INTERNAL,
        Some(_) => EXIT_INVALID,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_INVALID,
        None => EXIT_INTERNAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
