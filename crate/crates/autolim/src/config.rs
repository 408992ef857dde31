//! JSON run configurations and the command-line entry point.
//!
//! One config file drives one command. The `command` field must match the
//! invoked subcommand, unknown keys are rejected, and a parsed config
//! serializes back to an equivalent document, so fixtures stay honest.
//!
//! Exit codes: 0 success, 1 bad configuration, 2 model violates the
//! hypotheses behind the limit formulas, 3 integration failure, 4
//! verification failure. Errors print a machine-readable JSON object on
//! stdout and a human-readable line on stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::limits::{self, LimitsError, SweepAxis, SweepBase, SweepTable, SweepValue};
use crate::linearize::{self, LinearizeError};
use crate::model::{
    ChainParams, CyclicNetwork, ModelError, NodeRates, PathwayModel, RateFn, TwoStateParams,
};
use crate::numerics::dot;
use crate::sim::{self, ControllerSpec, DisturbanceSpec, SimError};
use crate::tolerances;
use crate::verify::{self, Fault, VerifyOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Limits,
    Sweep,
    Simulate,
    Verify,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Limits => "limits",
            CommandKind::Sweep => "sweep",
            CommandKind::Simulate => "simulate",
            CommandKind::Verify => "verify",
        }
    }
}

/// Model description as it appears in config files. Buildable into a
/// validated [`PathwayModel`]; validation happens in the constructors, never
/// during deserialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    TwoState {
        alpha: f64,
        k: f64,
        #[serde(default)]
        g: f64,
        #[serde(default)]
        h: f64,
        #[serde(default)]
        a: f64,
    },
    Chain {
        alpha: f64,
        #[serde(rename = "K")]
        k: f64,
        #[serde(default)]
        g: f64,
        #[serde(default)]
        h: f64,
        #[serde(default)]
        a: f64,
        n: usize,
    },
    Cyclic {
        alpha: f64,
        nodes: Vec<NodeRates<f64>>,
        sink: RateFn<f64>,
        x_star: Vec<f64>,
        y_star: f64,
    },
}

impl ModelConfig {
    pub fn build(&self) -> Result<PathwayModel<f64>, ModelError> {
        match self {
            ModelConfig::TwoState { alpha, k, g, h, a } => {
                Ok(PathwayModel::TwoState(TwoStateParams::new(*alpha, *k, *g, *h, *a)?))
            }
            ModelConfig::Chain { alpha, k, g, h, a, n } => {
                Ok(PathwayModel::Chain(ChainParams::new(*alpha, *k, *g, *h, *a, *n)?))
            }
            ModelConfig::Cyclic { alpha, nodes, sink, x_star, y_star } => {
                Ok(PathwayModel::Cyclic(CyclicNetwork::new(
                    *alpha,
                    nodes.clone(),
                    sink.clone(),
                    x_star.clone(),
                    *y_star,
                )?))
            }
        }
    }
}

/// One swept parameter with its grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case", deny_unknown_fields)]
pub enum AxisConfig {
    Alpha { values: Vec<f64> },
    Rate { values: Vec<f64> },
    #[serde(rename = "g")]
    Feedback { values: Vec<f64> },
    #[serde(rename = "n")]
    Length { values: Vec<usize> },
}

impl AxisConfig {
    fn to_axis(&self) -> SweepAxis<f64> {
        match self {
            AxisConfig::Alpha { values } => SweepAxis::Alpha(values.clone()),
            AxisConfig::Rate { values } => SweepAxis::RateConst(values.clone()),
            AxisConfig::Feedback { values } => SweepAxis::Feedback(values.clone()),
            AxisConfig::Length { values } => SweepAxis::Length(values.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<AxisConfig>,
}

fn zero_disturbance() -> DisturbanceSpec<f64> {
    DisturbanceSpec::Zero
}

fn default_t_end() -> f64 {
    tolerances::DEFAULT_ENERGY_HORIZON
}

fn default_dt() -> f64 {
    tolerances::DEFAULT_DT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub controller: ControllerSpec<f64>,
    #[serde(default = "zero_disturbance")]
    pub disturbance: DisturbanceSpec<f64>,
    /// Initial state `(x1, ..., xn, y)`; defaults to the equilibrium.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Name prefixes selecting a subset of suites; empty selects all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<String>,
    /// Injects a deliberate defect; the run must then fail. Test plumbing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    /// Default output path; the `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
enum AppError {
    Config(String),
    Hypothesis(String),
    Integration(String),
}

impl AppError {
    fn kind(&self) -> &'static str {
        match self {
            AppError::Config(_) => "config",
            AppError::Hypothesis(_) => "hypothesis_violation",
            AppError::Integration(_) => "integration",
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 1,
            AppError::Hypothesis(_) => 2,
            AppError::Integration(_) => 3,
        }
    }

    fn detail(&self) -> &str {
        match self {
            AppError::Config(d) | AppError::Hypothesis(d) | AppError::Integration(d) => d,
        }
    }
}

fn model_error(e: ModelError) -> AppError {
    match e {
        ModelError::InvalidParameter { .. }
        | ModelError::DimensionMismatch { .. }
        | ModelError::NegativeState { .. }
        | ModelError::Unsupported { .. } => AppError::Config(e.to_string()),
        ModelError::InvalidEquilibrium { .. }
        | ModelError::NotIncreasing { .. }
        | ModelError::DecreasingSink { .. }
        | ModelError::DerivativeMismatch { .. } => AppError::Hypothesis(e.to_string()),
    }
}

fn linearize_error(e: LinearizeError) -> AppError {
    match e {
        LinearizeError::Model(m) => model_error(m),
        LinearizeError::NonUniformRates { .. }
        | LinearizeError::DegenerateRelay { .. }
        | LinearizeError::NoUnstableMode { .. } => AppError::Hypothesis(e.to_string()),
    }
}

fn limits_error(e: LimitsError) -> AppError {
    match e {
        LimitsError::Linearize(l) => linearize_error(l),
        LimitsError::Model(m) => model_error(m),
        LimitsError::DegenerateControl { .. } => AppError::Hypothesis(e.to_string()),
        LimitsError::InvalidAxis { .. }
        | LimitsError::DuplicateAxis { .. }
        | LimitsError::EmptyAxis { .. }
        | LimitsError::Dimension { .. } => AppError::Config(e.to_string()),
    }
}

fn sim_error(e: SimError) -> AppError {
    match e {
        SimError::Model(m) => model_error(m),
        SimError::InvalidSpec { .. } | SimError::StepTooLarge { .. } => {
            AppError::Config(e.to_string())
        }
        SimError::PositivityViolation { .. }
        | SimError::BlowUp { .. }
        | SimError::ZeroDisturbance
        | SimError::BracketError { .. }
        | SimError::HorizonExhausted { .. } => AppError::Integration(e.to_string()),
    }
}

/// Serializes with every float printed as `d.dddddddddddddddde±x`: 17
/// significant digits, enough to round-trip any double.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json_full_precision<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser).expect("reports contain no non-serializable values");
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

fn format_cell(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_sweep_csv(table: &SweepTable<f64>) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|cell| match cell {
                SweepValue::Count(n) => n.to_string(),
                SweepValue::Value(x) => format_cell(*x),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn render_trajectory_csv(traj: &sim::Trajectory<f64>) -> String {
    let dim = traj.states.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..dim {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",y,u,delta\n");
    for (i, state) in traj.states.iter().enumerate() {
        out.push_str(&format_cell(traj.t[i]));
        for v in state {
            out.push(',');
            out.push_str(&format_cell(*v));
        }
        out.push(',');
        out.push_str(&format_cell(traj.u[i]));
        out.push(',');
        out.push_str(&format_cell(traj.delta[i]));
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    l2_y_dev: f64,
    l2_delta: f64,
    empirical_gain: Option<f64>,
    converged: bool,
    /// Attenuation floor of the model, when its hypotheses hold.
    gamma: Option<f64>,
    /// Minimum output transient energy from the configured initial state.
    energy_limit: Option<f64>,
}

#[derive(Parser, Debug)]
#[command(
    name = "autolim",
    version,
    about = "Hard limits on disturbance rejection in autocatalytic pathways"
)]
struct Cli {
    /// Seed for the randomized verification suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form limits plus oracle cross-checks for one model, as JSON.
    Limits {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed forms over a parameter grid, as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One nonlinear trajectory: summary JSON on stdout, CSV to a file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Write the trajectory CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Self-verification battery; nonzero exit if any suite fails.
    Verify {
        /// Optional config selecting suites, seed, or an injected fault.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Command-line entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print on stdout and exit cleanly; anything
            // else is a usage error.
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            let payload = serde_json::json!({
                "error": {
                    "kind": err.kind(),
                    "detail": err.detail(),
                    "exit_code": err.exit_code(),
                }
            });
            println!("{payload}");
            eprintln!("error: {}", err.detail());
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, AppError> {
    let tol_scale = tol_scale_from_env()?;
    match cli.command {
        Command::Limits { config, out } => {
            let cfg = load_config(&config, CommandKind::Limits)?;
            run_limits(&cfg, out.as_deref())
        }
        Command::Sweep { config, out } => {
            let cfg = load_config(&config, CommandKind::Sweep)?;
            run_sweep(&cfg, out.as_deref())
        }
        Command::Simulate { config, out } => {
            let cfg = load_config(&config, CommandKind::Simulate)?;
            run_simulate(&cfg, out.as_deref())
        }
        Command::Verify { config, out } => {
            let block = match config {
                Some(path) => {
                    load_config(&path, CommandKind::Verify)?.verify.unwrap_or_default()
                }
                None => VerifyConfig::default(),
            };
            run_verify(&block, cli.seed, tol_scale, out.as_deref())
        }
    }
}

fn tol_scale_from_env() -> Result<f64, AppError> {
    match std::env::var("AUTOLIM_TOL_SCALE") {
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => Err(AppError::Config(format!(
                "AUTOLIM_TOL_SCALE must be a positive real, got {raw:?}"
            ))),
        },
        Err(_) => Ok(1.0),
    }
}

fn load_config(path: &Path, expected: CommandKind) -> Result<RunConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    if cfg.command != expected {
        return Err(AppError::Config(format!(
            "config is for `{}` but `{}` was invoked",
            cfg.command.name(),
            expected.name()
        )));
    }
    Ok(cfg)
}

fn required_model(cfg: &RunConfig) -> Result<PathwayModel<f64>, AppError> {
    let mc = cfg
        .model
        .as_ref()
        .ok_or_else(|| AppError::Config("config has no `model` block".to_string()))?;
    mc.build().map_err(model_error)
}

fn out_path<'a>(flag: Option<&'a Path>, cfg: &'a RunConfig) -> Option<&'a Path> {
    flag.or(cfg.output.as_deref())
}

fn write_file(path: &Path, text: &str) -> Result<(), AppError> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| AppError::Config(format!("cannot write {}: {e}", path.display())))
}

fn run_limits(cfg: &RunConfig, out: Option<&Path>) -> Result<i32, AppError> {
    let model = required_model(cfg)?;
    let report = limits::analyze(&model).map_err(limits_error)?;
    let json = to_json_full_precision(&report);
    println!("{json}");
    if let Some(path) = out_path(out, cfg) {
        write_file(path, &json)?;
    }
    Ok(0)
}

fn run_sweep(cfg: &RunConfig, out: Option<&Path>) -> Result<i32, AppError> {
    let base = match cfg.model.as_ref() {
        Some(ModelConfig::TwoState { alpha, k, g, h, a }) => SweepBase::TwoState(
            TwoStateParams::new(*alpha, *k, *g, *h, *a).map_err(model_error)?,
        ),
        Some(ModelConfig::Chain { alpha, k, g, h, a, n }) => SweepBase::Chain(
            ChainParams::new(*alpha, *k, *g, *h, *a, *n).map_err(model_error)?,
        ),
        Some(ModelConfig::Cyclic { .. }) => {
            return Err(AppError::Config(
                "sweeps cover the two_state and chain families only".to_string(),
            ))
        }
        None => return Err(AppError::Config("config has no `model` block".to_string())),
    };
    let sweep_cfg = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| AppError::Config("config has no `sweep` block".to_string()))?;
    let axes: Vec<SweepAxis<f64>> = sweep_cfg.axes.iter().map(AxisConfig::to_axis).collect();
    let table = limits::sweep(&base, &axes).map_err(limits_error)?;
    let csv = render_sweep_csv(&table);
    match out_path(out, cfg) {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn run_simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<i32, AppError> {
    let model = required_model(cfg)?;
    let sc = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| AppError::Config("config has no `simulate` block".to_string()))?;
    let x0 = match &sc.x0 {
        Some(v) => v.clone(),
        None => model.equilibrium().state(),
    };
    let traj = sim::integrate(&model, &sc.controller, &sc.disturbance, &x0, sc.t_end, sc.dt)
        .map_err(sim_error)?;
    if let Some(path) = out_path(out, cfg) {
        write_file(path, &render_trajectory_csv(&traj))?;
    }
    let empirical_gain = sim::empirical_gain(&traj).ok();
    let summary = SimulateSummary {
        l2_y_dev: traj.l2_y_dev,
        l2_delta: traj.l2_delta,
        empirical_gain,
        converged: traj.converged,
        gamma: limits::gamma_closed_form(&model).ok(),
        energy_limit: energy_limit_from(&model, &x0),
    };
    println!("{}", to_json_full_precision(&summary));
    Ok(0)
}

/// Minimum output transient energy achievable from `x0`, when the model's
/// internal drift is unstable; `None` otherwise.
fn energy_limit_from(model: &PathwayModel<f64>, x0: &[f64]) -> Option<f64> {
    let zd = linearize::zero_dynamics(model).ok()?;
    let dm = linearize::dominant_mode(model).ok()?;
    let zbar = limits::internal_deviation(model, x0).ok()?;
    let ztilde = dot(&dm.v, &zbar);
    limits::energy_oracle(&zd, &dm, ztilde).ok()
}

fn run_verify(
    block: &VerifyConfig,
    seed_flag: Option<u64>,
    tol_scale: f64,
    out: Option<&Path>,
) -> Result<i32, AppError> {
    let opts = VerifyOptions {
        seed: seed_flag.or(block.seed).unwrap_or(0),
        tol_scale,
        suites: block.suites.clone(),
        fault: block.fault,
    };
    let report = verify::run_verify(&opts);
    if report.suites.is_empty() {
        return Err(AppError::Config(format!(
            "no suite matches {:?}; available: {:?}",
            opts.suites,
            verify::suite_names()
        )));
    }
    let json = to_json_full_precision(&report);
    println!("{json}");
    if let Some(path) = out {
        write_file(path, &json)?;
    }
    if report.passed {
        Ok(0)
    } else {
        let failed: Vec<&str> =
            report.suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect();
        eprintln!("error: verification failed in {}", failed.join(", "));
        Ok(4)
    }
}
