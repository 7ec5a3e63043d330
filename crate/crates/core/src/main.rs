use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tce::bench::{self, BenchmarkConfig, DataRegime, Method, SimulateConfig};
use tce::scm::{EffectTruth, GeneratorConfig, SpreadKind};
use tce::{confidence_region, estimate_effects, Error};

#[derive(Parser)]
#[command(name = "tce", version, about = "Total causal effects and confidence regions in linear Gaussian SCMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    General,
    #[value(name = "partial_ev")]
    PartialEv,
    Ev,
}

impl From<RegimeArg> for DataRegime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::General => DataRegime::General,
            RegimeArg::PartialEv => DataRegime::PartialEv,
            RegimeArg::Ev => DataRegime::Ev,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TruthArg {
    Nonzero,
    Zero,
}

impl From<TruthArg> for EffectTruth {
    fn from(t: TruthArg) -> Self {
        match t {
            TruthArg::Nonzero => EffectTruth::Nonzero,
            TruthArg::Zero => EffectTruth::Zero,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpreadArg {
    Sd,
    Variance,
}

#[derive(clap::Args)]
struct GenArgs {
    /// Number of variables.
    #[arg(long, default_value_t = 10)]
    d: usize,
    /// Which effect the generated graphs must have.
    #[arg(long, value_enum, default_value = "nonzero")]
    truth: TruthArg,
    /// Reading of the 0.1 spread of the N(0.5, 0.1) edge-weight law.
    #[arg(long, value_enum, default_value = "sd")]
    weight_spread: SpreadArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GenArgs {
    fn generator(&self) -> GeneratorConfig {
        let spread_kind = match self.weight_spread {
            SpreadArg::Sd => SpreadKind::StdDev,
            SpreadArg::Variance => SpreadKind::Variance,
        };
        GeneratorConfig { spread_kind, ..GeneratorConfig::default() }
    }
}

#[derive(clap::Args)]
struct QueryArgs {
    /// Samples CSV (n rows, d numeric columns, optional header).
    data: PathBuf,
    /// Assumed error-variance regime.
    #[arg(long, value_enum, default_value = "general")]
    regime: RegimeArg,
    /// Cause node (0-based).
    #[arg(long, default_value_t = 0)]
    i: usize,
    /// Response node (0-based).
    #[arg(long, default_value_t = 1)]
    j: usize,
    /// Subtract column means before forming the covariance.
    #[arg(long)]
    center: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random SCMs and samples, one CSV per repetition plus a manifest.
    Simulate {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, value_enum, default_value = "general")]
        regime: RegimeArg,
        #[arg(long, default_value_t = 0)]
        i: usize,
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the set of plausible effects of i on j as JSON.
    Estimate {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Print a confidence region for the effect of i on j as JSON.
    Confint {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Run the coverage benchmark; writes bench.csv and summary.json.
    Benchmark {
        #[command(flatten)]
        gen: GenArgs,
        /// Sample sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Data regimes, comma separated.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "general,partial_ev,ev")]
        regime: Vec<RegimeArg>,
        /// Methods, comma separated: general_conf, partial_ev_conf, ev_conf.
        #[arg(long, value_delimiter = ',', default_value = "general_conf,partial_ev_conf,ev_conf")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 0)]
        i: usize,
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long)]
        center: bool,
        /// Fill runtime_ms with wall-clock times (output is then not byte-reproducible).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SingularBlock { .. } | Error::DegenerateQuadratic { .. } | Error::SingularCovariance { .. } => 4,
        Error::InvalidInput(_) | Error::DimensionTooLarge { .. } => 2,
        _ => 3,
    }
}

fn load_precision(q: &QueryArgs) -> tce::Result<(tce::PdMatrix, usize)> {
    let text = fs::read_to_string(&q.data)?;
    let data = bench::read_samples_csv(&text)?;
    if data.n() < data.d() {
        return Err(Error::InvalidInput(format!("need at least {} rows, found {}", data.d(), data.n())));
    }
    let prec = bench::covariance(&data, q.center)?.inverse()?;
    Ok((prec, data.n()))
}

fn run(cli: Cli) -> tce::Result<()> {
    match cli.command {
        Command::Simulate { gen, n, reps, regime, i, j, out } => {
            let config = SimulateConfig {
                d: gen.d,
                n,
                reps,
                regime: regime.into(),
                truth: gen.truth.into(),
                i,
                j,
                seed: gen.seed,
                generator: gen.generator(),
            };
            let manifest = bench::simulate(&config, &out)?;
            log::info!("wrote {} datasets to {}", manifest.datasets.len(), out.display());
        }
        Command::Estimate { query } => {
            let (prec, _) = load_precision(&query)?;
            let tag = DataRegime::from(query.regime).tag(query.i, query.j);
            let est = estimate_effects(&prec, query.i, query.j, tag)?;
            println!("{}", serde_json::to_string_pretty(&est)?);
        }
        Command::Confint { query, alpha } => {
            let (prec, n) = load_precision(&query)?;
            let tag = DataRegime::from(query.regime).tag(query.i, query.j);
            let region = confidence_region(&prec, n, query.i, query.j, alpha, tag)?;
            println!("{}", serde_json::to_string_pretty(&region)?);
        }
        Command::Benchmark { gen, n, reps, alpha, regime, methods, i, j, center, timing, out } => {
            let methods = methods.iter().map(|m| Method::parse(m)).collect::<tce::Result<Vec<_>>>()?;
            let config = BenchmarkConfig {
                d: gen.d,
                ns: n,
                reps,
                alpha,
                data_regimes: regime.into_iter().map(DataRegime::from).collect(),
                methods,
                truth: gen.truth.into(),
                i,
                j,
                seed: gen.seed,
                center,
                timing,
                generator: gen.generator(),
            };
            let output = bench::run_benchmark(&config)?;
            bench::write_benchmark(&out, &output)?;
            for c in &output.summary.cells {
                log::info!(
                    "{:>10} {:>15} n={:<6} coverage={:.3} width={:.3} zero={:.3} failed={}",
                    c.data_regime.name(),
                    c.method.name(),
                    c.n,
                    c.coverage,
                    c.mean_width,
                    c.zero_proportion,
                    c.failed
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("TCE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
