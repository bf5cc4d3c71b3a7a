//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or data error, 2 non-convergence.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::StudyConfig;
use crate::edge_models::EdgeFamily;
use crate::error::{Error, Result};
use crate::estimator::{fit, BetaUpdate, FitResult, SolverConfig};
use crate::io::{load_network, write_edges, write_pair_covariates, CovariateSource, Transform};
use crate::simulator::{generate_with_truth, run_mc_study, BetaRule, CovariateRule, Dependence, GenSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "netmoment", version, about = "Moment estimation for networks with degree heterogeneity and homophily")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit degree parameters and homophily coefficients.
    Fit(FitArgs),
    /// Generate a network and write its edge list and covariates.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study described by a TOML file.
    McStudy(StudyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransformArg {
    None,
    EuclideanDistance,
    MatchIndicator,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::None => Transform::None,
            TransformArg::EuclideanDistance => Transform::EuclideanDistance,
            TransformArg::MatchIndicator => Transform::MatchIndicator,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BetaUpdateArg {
    Preconditioned,
    LogRatio,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    family: EdgeFamily,
    #[arg(long)]
    edges: PathBuf,
    #[arg(long, conflicts_with_all = ["node_attrs", "transform"], required_unless_present = "node_attrs")]
    pair_covariates: Option<PathBuf>,
    #[arg(long, requires = "transform")]
    node_attrs: Option<PathBuf>,
    #[arg(long, value_enum)]
    transform: Option<TransformArg>,
    #[arg(long)]
    tol_f: Option<f64>,
    #[arg(long)]
    tol_q: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner_beta: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long, value_enum)]
    beta_update: Option<BetaUpdateArg>,
    #[arg(long)]
    no_bias_correct: bool,
    /// Accepted for interface symmetry; fitting is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CovariateArg {
    Pm1,
    Uniform,
    Distance,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    family: EdgeFamily,
    #[arg(long)]
    n: usize,
    /// True homophily coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.5,-0.5")]
    gamma: Vec<f64>,
    /// Degree parameters are drawn uniformly from [-bound, bound].
    #[arg(long, default_value_t = 1.0)]
    beta_bound: f64,
    #[arg(long, value_enum, default_value = "pm1")]
    covariates: CovariateArg,
    /// Latent correlation for dependent probit edges.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    noise_free: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for edges.csv, covariates.csv and truth.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the replicate count in the config file.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Messages go to standard error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_DATA } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Simulate(args) => run_simulate(args),
        Command::McStudy(args) => run_study(args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    if let Error::NoConvergence { trace, .. } = e {
        if let Some(trace) = trace {
            if let Ok(json) = serde_json::to_string(trace) {
                eprintln!("{json}");
            }
        }
        return EXIT_NO_CONVERGENCE;
    }
    EXIT_DATA
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| Error::InvalidData(format!("cannot create {}: {e}", path.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn solver_config(args: &FitArgs) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(v) = args.tol_f {
        cfg.tol_f = v;
    }
    if let Some(v) = args.tol_q {
        cfg.tol_q = v;
    }
    if let Some(v) = args.max_outer {
        cfg.max_outer = v;
    }
    if let Some(v) = args.max_inner_beta {
        cfg.max_inner_beta = v;
    }
    if let Some(v) = args.damping {
        cfg.damping = v;
    }
    if let Some(v) = args.beta_update {
        cfg.beta_update = match v {
            BetaUpdateArg::Preconditioned => BetaUpdate::Preconditioned,
            BetaUpdateArg::LogRatio => BetaUpdate::LogRatio,
        };
    }
    cfg
}

fn run_fit(args: FitArgs) -> Result<()> {
    let source = match (&args.pair_covariates, &args.node_attrs, args.transform) {
        (Some(p), None, None) => CovariateSource::Pairs(p),
        (None, Some(p), Some(t)) => CovariateSource::NodeAttrs(p, t.into()),
        _ => {
            return Err(Error::Config(
                "give either --pair-covariates or --node-attrs with --transform".into(),
            ))
        }
    };
    let data = load_network(&args.edges, source)?;
    let mut res = fit(&data, args.family, &solver_config(&args), None)?;
    if args.no_bias_correct {
        res.gamma_bc = None;
    }
    let mut out = sink(args.out.as_deref())?;
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &res)?;
            writeln!(out)?;
        }
        Format::Csv => write_fit_csv(&res, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

/// Long format: `parameter,index,estimate,se,estimate_bc`.
pub fn write_fit_csv<W: Write>(res: &FitResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "index", "estimate", "se", "estimate_bc"])?;
    for (i, (b, se)) in res.params.beta.iter().zip(&res.se_beta).enumerate() {
        w.write_record(["beta".to_string(), i.to_string(), b.to_string(), se.to_string(), String::new()])?;
    }
    for (k, (g, se)) in res.params.gamma.iter().zip(&res.se_gamma).enumerate() {
        let bc = res.gamma_bc.as_ref().map_or(String::new(), |v| v[k].to_string());
        w.write_record(["gamma".to_string(), k.to_string(), g.to_string(), se.to_string(), bc])?;
    }
    w.flush()?;
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let covariates = match args.covariates {
        CovariateArg::Pm1 => CovariateRule::IidPm1 { p: args.gamma.len() },
        CovariateArg::Uniform => CovariateRule::IidUniform { p: args.gamma.len(), low: -1.0, high: 1.0 },
        CovariateArg::Distance => CovariateRule::NodeDistance { dim: 2 },
    };
    let spec = GenSpec {
        n: args.n,
        family: args.family,
        beta: BetaRule::Uniform { bound: args.beta_bound },
        gamma_star: args.gamma,
        covariates,
        dependence: args.rho.map_or(Dependence::Independent, |rho| Dependence::EquicorrelatedProbit { rho }),
        noise_free: args.noise_free,
        seed: args.seed,
        stream: 0,
    };
    let sim = generate_with_truth(&spec)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| Error::InvalidData(format!("cannot create {}: {e}", args.out.display())))?;
    write_edges(&sim.data, BufWriter::new(File::create(args.out.join("edges.csv"))?))?;
    write_pair_covariates(&sim.data, BufWriter::new(File::create(args.out.join("covariates.csv"))?))?;
    let truth = serde_json::json!({ "spec": spec, "beta": sim.truth.beta, "gamma": sim.truth.gamma });
    serde_json::to_writer_pretty(BufWriter::new(File::create(args.out.join("truth.json"))?), &truth)?;
    Ok(())
}

fn run_study(args: StudyArgs) -> Result<()> {
    let mut cfg = StudyConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    let report = run_mc_study(&cfg.grid()?, cfg.replicates, &cfg.solver)?;
    let mut out = sink(args.out.as_deref())?;
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
        Format::Csv => report.write_csv(&mut out)?,
    }
    out.flush()?;
    Ok(())
}
