//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::apps::llle::{DEFAULT_LLLE_RESOLUTION, DEFAULT_LLLE_TAU};
use crate::apps::vle::{DEFAULT_VLE_TAU, DEFAULT_VOLUME_POINTS, DEFAULT_V_MAX, DEFAULT_V_MIN};
use crate::apps::{
    generate_labels, log_spaced_volumes, solve_llle, vapor_pressure, LlleMethod, SystemSpec,
};
use crate::enumerate::{enumerate_groups, StateGroup, DEFAULT_GROUP_BUDGET};
use crate::error::{invalid, Error, Result};
use crate::gibbs::{GeModel, SymmetricTernaryModel, VdwHelmholtz};
use crate::grid::{augment_with_feed, make_simplex_grid, make_uniform_grid, DEFAULT_EPS};
use crate::io::{read_labels_file, write_json, write_labels, Label};
use crate::solver::{
    beta_from_tau, formulation1_binary, formulation2_distribution, formulation2_marginals,
    group_energies, solve_binary, DEFAULT_EPS_TIE,
};
use crate::train::{fit_system, fit_systems, FitConfig, LrSchedule, OptimizerKind};

#[derive(Debug, Parser)]
#[command(
    name = "phasesplit",
    version,
    about = "Discrete phase-equilibrium solver and model fitting"
)]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Debug logging on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Solve one binary phase split.
    Solve(SolveArgs),
    /// Fit an excess Gibbs energy model to a label file.
    Fit(FitArgs),
    /// Generate equilibrium labels from model specs.
    Dataset(DatasetArgs),
    /// Vapor pressure of a reduced van der Waals fluid.
    Vp(VpArgs),
    /// Three-phase split of a symmetric ternary mixture.
    Llle(LlleArgs),
    /// Dump state distributions of both formulations as CSV.
    Dist(DistArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelKind {
    Ideal,
    Margules,
    Nrtl,
    Flexible,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Margules interaction parameter.
    #[arg(long = "A")]
    pub a: Option<f64>,
    #[arg(long)]
    pub tau12: Option<f64>,
    #[arg(long)]
    pub tau21: Option<f64>,
    /// NRTL non-randomness.
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Flexible-model coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    /// JSON model spec, e.g. {"kind":"margules","A":2.5}.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
}

impl ModelArgs {
    fn build(&self) -> Result<Option<GeModel>> {
        if let Some(path) = &self.model_file {
            let text = std::fs::read_to_string(path)?;
            let m: GeModel = serde_json::from_str(&text)?;
            m.validate()?;
            return Ok(Some(m));
        }
        let Some(kind) = self.model else {
            return Ok(None);
        };
        let need = |v: Option<f64>, name: &'static str| {
            v.ok_or_else(|| invalid(name, "required by this model"))
        };
        let m = match kind {
            ModelKind::Ideal => GeModel::Ideal,
            ModelKind::Margules => GeModel::margules(need(self.a, "A")?),
            ModelKind::Nrtl => GeModel::Nrtl {
                tau12: need(self.tau12, "tau12")?,
                tau21: need(self.tau21, "tau21")?,
                alpha: self.alpha,
            },
            ModelKind::Flexible => GeModel::Flexible {
                theta: self
                    .theta
                    .clone()
                    .ok_or_else(|| invalid("theta", "required by this model"))?,
            },
        };
        m.validate()?;
        Ok(Some(m))
    }

    fn require(&self) -> Result<GeModel> {
        self.build()?
            .ok_or_else(|| invalid("model", "give --model or --model-file"))
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub z: f64,
    #[arg(long, default_value_t = 401)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.01)]
    pub tau: f64,
    #[arg(long, default_value_t = DEFAULT_EPS_TIE)]
    pub eps_tie: f64,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Label CSV with columns system_id, z, x_lo, x_hi, is_split.
    #[arg(long)]
    pub labels: PathBuf,
    /// JSON file with any subset of the fit settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Initial model (default: flexible expansion of --order with zero
    /// coefficients).
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub tau_decay: Option<f64>,
    #[arg(long)]
    pub lambda_g: Option<f64>,
    #[arg(long)]
    pub lambda_h: Option<f64>,
    #[arg(long)]
    pub eps_h: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub gibbs_grid: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Report file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fitted model parameters as JSON.
    #[arg(long)]
    pub params_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Adamw,
    Sgd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    Constant,
    Onecycle,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// JSON list of {"system_id": ..., "model": {...}}.
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long, default_value_t = 401)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    /// Label CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VpArgs {
    /// Reduced temperature T/Tc.
    #[arg(long)]
    pub tr: f64,
    #[arg(long, default_value_t = DEFAULT_VOLUME_POINTS)]
    pub points: usize,
    #[arg(long, default_value_t = DEFAULT_V_MIN)]
    pub v_min: f64,
    #[arg(long, default_value_t = DEFAULT_V_MAX)]
    pub v_max: f64,
    /// Softmax temperature in units of R*Tc.
    #[arg(long, default_value_t = DEFAULT_VLE_TAU)]
    pub tau: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Formulation1,
    Formulation2,
}

#[derive(Debug, Args)]
pub struct LlleArgs {
    #[arg(long = "A")]
    pub a: f64,
    #[arg(long, default_value_t = DEFAULT_LLLE_RESOLUTION)]
    pub resolution: usize,
    /// First two mole fractions, comma separated; the third is implied.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_LLLE_TAU)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Formulation1)]
    pub method: MethodArg,
    /// Largest number of candidate tuples examined per group order.
    #[arg(long, default_value_t = DEFAULT_GROUP_BUDGET)]
    pub budget: u128,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub z: f64,
    #[arg(long, default_value_t = 0.005)]
    pub tau: f64,
    #[arg(long, default_value_t = 500)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(invalid("threads", "must be at least 1"));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| invalid("threads", e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Fit(a) => cmd_fit(a, cli.verbose),
        Command::Dataset(a) => cmd_dataset(a),
        Command::Vp(a) => cmd_vp(a),
        Command::Llle(a) => cmd_llle(a),
        Command::Dist(a) => cmd_dist(a),
    })
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            std::io::stdout().write_all(s.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let model = a.model.require()?;
    let grid = make_uniform_grid(a.grid, a.eps)?;
    let r = solve_binary(&model, a.z, &grid, a.tau, a.eps_tie)?;
    emit_json(a.out.as_deref(), &r)
}

fn fit_config(a: &FitArgs) -> Result<FitConfig> {
    let mut c = match &a.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => FitConfig::default(),
    };
    macro_rules! set {
        ($($field:ident <- $flag:expr),* $(,)?) => {
            $(if let Some(v) = $flag { c.$field = v; })*
        };
    }
    set! {
        lr <- a.lr,
        epochs <- a.epochs,
        batch_size <- a.batch_size,
        tau0 <- a.tau0,
        tau_decay <- a.tau_decay,
        lambda_g <- a.lambda_g,
        lambda_h <- a.lambda_h,
        eps_h <- a.eps_h,
        grid_n <- a.grid,
        gibbs_grid_n <- a.gibbs_grid,
        weight_decay <- a.weight_decay,
        seed <- a.seed,
    }
    if let Some(p) = a.patience {
        c.patience = Some(p);
    }
    if let Some(o) = a.optimizer {
        c.optimizer = match o {
            OptimizerArg::Adamw => OptimizerKind::Adamw,
            OptimizerArg::Sgd => OptimizerKind::Sgd,
        };
    }
    if let Some(s) = a.schedule {
        c.schedule = match s {
            ScheduleArg::Constant => LrSchedule::Constant,
            ScheduleArg::Onecycle => LrSchedule::Onecycle,
        };
    }
    c.validate()?;
    Ok(c)
}

pub fn cmd_fit(a: &FitArgs, verbose: bool) -> Result<()> {
    let config = fit_config(a)?;
    let model0 = a
        .model
        .build()?
        .unwrap_or_else(|| GeModel::flexible_zeros(a.order));
    let labels: Vec<Label> = read_labels_file(&a.labels)?;
    let single = labels.iter().all(|l| l.system_id == labels[0].system_id);
    if single {
        let report = fit_system(&labels, &model0, &config)?;
        if verbose {
            eprintln!("fit finished in {:.3} s", report.wall_time_s);
        }
        if let Some(p) = &a.params_out {
            write_json(p, &report.model)?;
        }
        emit_json(a.out.as_deref(), &report)
    } else {
        let report = fit_systems(&labels, &model0, &config)?;
        if let Some(p) = &a.params_out {
            let models: Vec<SystemSpec> = report
                .systems
                .iter()
                .map(|s| SystemSpec {
                    system_id: s.system_id.clone(),
                    model: s.report.model.clone(),
                })
                .collect();
            write_json(p, &models)?;
        }
        emit_json(a.out.as_deref(), &report)
    }
}

pub fn cmd_dataset(a: &DatasetArgs) -> Result<()> {
    let specs: Vec<SystemSpec> = serde_json::from_str(&std::fs::read_to_string(&a.models)?)?;
    let (rows, warnings) = generate_labels(&specs, a.grid, a.eps)?;
    for w in &warnings {
        eprintln!("{w}");
    }
    let labels: Vec<Label> = rows.into_iter().map(|r| r.label).collect();
    let mut buf = Vec::new();
    write_labels(&mut buf, &labels)?;
    emit_text(a.out.as_deref(), &String::from_utf8_lossy(&buf))
}

pub fn cmd_vp(a: &VpArgs) -> Result<()> {
    let model = VdwHelmholtz::new(a.tr)?;
    let v = log_spaced_volumes(a.points, a.v_min, a.v_max)?;
    let r = vapor_pressure(&model, &v, a.tau)?;
    emit_json(a.out.as_deref(), &r)
}

/// Completes `n-1` mole fractions with the implied last one.
pub fn complete_feed(partial: &[f64]) -> Result<Vec<f64>> {
    if partial.is_empty() {
        return Err(Error::EmptyInput("feed composition"));
    }
    let mut z = partial.to_vec();
    z.push(1.0 - partial.iter().sum::<f64>());
    crate::gibbs::ideal_mixing(&z)?;
    Ok(z)
}

pub fn cmd_llle(a: &LlleArgs) -> Result<()> {
    let z = complete_feed(&a.z)?;
    let grid = make_simplex_grid(3, a.resolution)?;
    let method = match a.method {
        MethodArg::Formulation1 => LlleMethod::Formulation1,
        MethodArg::Formulation2 => LlleMethod::Formulation2,
    };
    let r = solve_llle(
        &SymmetricTernaryModel::new(a.a),
        &z,
        &grid,
        a.tau,
        method,
        a.budget,
    )?;
    emit_json(a.out.as_deref(), &r)
}

pub fn cmd_dist(a: &DistArgs) -> Result<()> {
    let model = a.model.require()?;
    let grid = make_uniform_grid(a.grid, a.eps)?;
    // validates z before any work
    augment_with_feed(&grid, a.z)?;
    let beta = beta_from_tau(a.tau)?;
    let x = grid.points();
    let g: Vec<f64> = x.iter().map(|&v| model.gmix(v)).collect();
    let f1 = formulation1_binary(x, &g, a.z, beta)?;
    let classes = enumerate_groups(&grid, &[a.z], 2, DEFAULT_GROUP_BUDGET)?;
    let groups: Vec<StateGroup> = classes.into_iter().flatten().collect();
    let f2 = formulation2_distribution(&group_energies(&groups, &g), beta)?;
    let q = formulation2_marginals(&groups, &f2.probs, x.len())?;
    let mut text = String::from("x,p_formulation1,p_formulation2_marginal\n");
    for i in 0..x.len() {
        text.push_str(&format!("{},{},{}\n", x[i], f1.probs[i], q[i]));
    }
    emit_text(a.out.as_deref(), &text)
}
