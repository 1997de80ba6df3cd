//! Command-line front end: train, direct, sweep and eval.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, SweepConfig};
use crate::model::{Activation, MlpParams};
use crate::problems::{registry_get, CustomProblem, ProblemSpec};
use crate::system::{Discretisation, DirectSolve, CoefficientMap};
use crate::train::{self, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "speclearn", version, about = "Spectral-coefficient learning for parametric fractional DEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and write checkpoint.json, loss.csv and config.toml.
    Train(RunArgs),
    /// Solve the Galerkin system for one parameter vector.
    Direct(DirectArgs),
    /// Train over a grid of hidden widths, sample counts and seeds.
    Sweep(SweepArgs),
    /// Test error of a saved checkpoint as JSON.
    Eval(EvalArgs),
}

/// Options shared by every command that trains.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the keys below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// Custom problem definition (TOML).
    #[arg(long)]
    pub problem_file: Option<PathBuf>,
    #[arg(long)]
    pub basis_n: Option<usize>,
    #[arg(long)]
    pub quad_degree: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub adam_epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DirectArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Parameter vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub params: Vec<f64>,
    /// Grid points per dimension.
    #[arg(long, default_value_t = metrics::DEFAULT_GRID_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub hidden_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub samples_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Output file is `{problem}_{name}.csv`.
    #[arg(long, default_value = "sweep")]
    pub name: String,
    #[arg(long, default_value_t = metrics::DEFAULT_TEST_COUNT)]
    pub test_count: usize,
    #[arg(long, default_value_t = metrics::DEFAULT_GRID_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = metrics::DEFAULT_TEST_COUNT)]
    pub test_count: usize,
    #[arg(long, default_value_t = metrics::DEFAULT_GRID_RESOLUTION)]
    pub resolution: usize,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub problem_file: Option<PathBuf>,
    pub basis_n: Option<usize>,
    pub quad_degree: Option<usize>,
    pub hidden: Option<usize>,
    pub activation: Option<Activation>,
    pub samples: Option<usize>,
    pub epochs: Option<usize>,
    pub adam_epochs: Option<usize>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// A fully resolved run: flags over config file over problem defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem_file: Option<PathBuf>,
    pub basis_n: usize,
    pub quad_degree: usize,
    pub hidden: usize,
    pub activation: Activation,
    pub samples: usize,
    pub epochs: usize,
    pub adam_epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<(Self, Arc<ProblemSpec>)> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let problem_file = args.problem_file.clone().or(file.problem_file);
        let problem_name = args.problem.clone().or(file.problem);
        let spec = match (&problem_file, &problem_name) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either a problem name or a problem file, not both".into()))
            }
            (Some(path), None) => CustomProblem::load(path)?.into_spec()?,
            (None, Some(name)) => registry_get(name)?,
            (None, None) => return Err(Error::Config("no problem given (use --problem or --problem-file)".into())),
        };
        let d = &spec.defaults;
        let cfg = Self {
            problem: spec.name.clone(),
            problem_file,
            basis_n: args.basis_n.or(file.basis_n).unwrap_or(d.basis_n),
            quad_degree: args.quad_degree.or(file.quad_degree).unwrap_or(d.quad_degree),
            hidden: args.hidden.or(file.hidden).unwrap_or(d.hidden),
            activation: args.activation.or(file.activation).unwrap_or(Activation::Tanh),
            samples: args.samples.or(file.samples).unwrap_or(d.samples),
            epochs: args.epochs.or(file.epochs).unwrap_or(d.epochs),
            adam_epochs: args.adam_epochs.or(file.adam_epochs).unwrap_or(d.adam_epochs),
            lr: args.lr.or(file.lr).unwrap_or(d.adam_lr),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("results")),
        };
        if cfg.basis_n < 3 {
            return Err(Error::Config(format!("basis count must be at least 3, got {}", cfg.basis_n)));
        }
        if cfg.quad_degree < 1 {
            return Err(Error::Config("quadrature degree must be at least 1".into()));
        }
        if cfg.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        Ok((cfg, Arc::new(spec)))
    }

    pub fn discretisation(&self, spec: Arc<ProblemSpec>) -> Result<Discretisation> {
        Discretisation::new(spec, self.basis_n, self.quad_degree)
    }

    pub fn train_config(&self, spec: &ProblemSpec) -> TrainConfig {
        TrainConfig {
            sample_count: self.samples,
            epochs: self.epochs,
            adam_epochs: self.adam_epochs.min(self.epochs),
            adam_lr: self.lr,
            seed: self.seed,
            domain_measure: spec.sampler.measure(),
            ..TrainConfig::default()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_train(args: &RunArgs) -> Result<train::TrainOutcome> {
    let (cfg, spec) = RunConfig::resolve(args)?;
    let disc = cfg.discretisation(spec.clone())?;
    create_dir(&cfg.out)?;
    write(&cfg.out.join("config.toml"), &cfg.to_toml())?;
    let outcome = train::fit(&disc, cfg.hidden, cfg.activation, &cfg.train_config(&spec))?;
    outcome.params.save(&cfg.out.join("checkpoint.json"))?;
    write(&cfg.out.join("loss.csv"), &train::history_csv(&outcome.history))?;
    println!("final loss {:e}", outcome.final_loss);
    Ok(outcome)
}

/// `x,z_tilde,z_exact,abs_err` rows (`x1,x2,...` for space-time problems).
pub fn direct_csv(disc: &Discretisation, params: &[f64], resolution: usize) -> Result<(String, f64)> {
    let grid = disc.uniform_grid(resolution)?;
    let omega = DirectSolve.coefficients(disc, params)?;
    let approx = disc.evaluate(&omega, &grid)?;
    let exact = disc.exact_on(params, &grid);
    let mut out = if grid.axes().len() == 1 { "x".to_string() } else { "x1,x2".to_string() };
    out.push_str(",z_tilde,z_exact,abs_err\n");
    let mut max_err: f64 = 0.0;
    for ((p, zt), z) in grid.points().zip(&approx).zip(&exact) {
        let err = (zt - z).abs();
        max_err = max_err.max(err);
        for c in &p {
            let _ = write!(out, "{c},");
        }
        let _ = writeln!(out, "{zt:e},{z:e},{err:e}");
    }
    Ok((out, max_err))
}

pub fn cmd_direct(args: &DirectArgs) -> Result<f64> {
    let (cfg, spec) = RunConfig::resolve(&args.run)?;
    if args.params.len() != spec.sampler.dim() {
        return Err(Error::Config(format!(
            "problem {} takes {} parameters, got {}",
            spec.name,
            spec.sampler.dim(),
            args.params.len()
        )));
    }
    let disc = cfg.discretisation(spec.clone())?;
    let (csv, max_err) = direct_csv(&disc, &args.params, args.resolution)?;
    create_dir(&cfg.out)?;
    write(&cfg.out.join(format!("{}_direct.csv", spec.name)), &csv)?;
    println!("max abs error {max_err:e}");
    Ok(max_err)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<metrics::SweepRow>> {
    let (cfg, spec) = RunConfig::resolve(&args.run)?;
    let disc = cfg.discretisation(spec.clone())?;
    let sweep_cfg = SweepConfig {
        hidden: args.hidden_values.clone(),
        samples: args.samples_values.clone(),
        seeds: args.seeds.clone(),
        activation: cfg.activation,
        epochs: cfg.epochs,
        adam_epochs: cfg.adam_epochs.min(cfg.epochs),
        adam_lr: cfg.lr,
        test_count: args.test_count,
        grid_resolution: args.resolution,
    };
    let rows = metrics::sweep(&disc, &sweep_cfg)?;
    create_dir(&cfg.out)?;
    write(&cfg.out.join("config.toml"), &cfg.to_toml())?;
    let path = cfg.out.join(format!("{}_{}.csv", spec.name, args.name));
    write(&path, &metrics::sweep_csv(&rows))?;
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(rows)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<metrics::ErrorReport> {
    let (cfg, spec) = RunConfig::resolve(&args.run)?;
    let disc = cfg.discretisation(spec)?;
    let model = MlpParams::load(&args.checkpoint)?;
    let report = metrics::test_error(&disc, &model, args.test_count, cfg.seed, args.resolution)?;
    let json = serde_json::to_string_pretty(&report)?;
    if args.run.out.is_some() {
        create_dir(&cfg.out)?;
        write(&cfg.out.join("report.json"), &json)?;
    }
    println!("{json}");
    Ok(report)
}

/// Run a parsed command line, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a).map(drop),
        Command::Direct(a) => cmd_direct(a).map(drop),
        Command::Sweep(a) => cmd_sweep(a).map(drop),
        Command::Eval(a) => cmd_eval(a).map(drop),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
