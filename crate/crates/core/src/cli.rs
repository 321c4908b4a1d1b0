//! The `aoi` command line: evaluate ages, run simulations, optimize the
//! transition matrix, sweep parameter grids to CSV, and cross-validate the
//! closed forms against the simulator.
//!
//! Output is machine-first: JSON for scalar results (flat objects,
//! snake_case keys) and CSV for sweeps. Runs with identical arguments and
//! seed produce byte-identical output. Exit codes: 0 success, 2 validation
//! error, 3 infeasible optimization, 1 internal error or failed validation
//! checks.
//!
//! Every flag can also come from a `--config <file>` JSON object whose keys
//! mirror the long flag names (`{"scenario": "ge-service", "mu_b": 0.1}`);
//! explicit flags override file values.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{age, age_ge_arrival, age_ge_service, age_single_state};
use crate::optimize::{classify, optimal_constrained, optimal_unconstrained, verify_monotonicity};
use crate::simulate::{mix_seed, simulate_cycles, InitialState};
use crate::{
    CostModel, Error, Feasibility, GEArrivalScenario, GEServiceScenario, Scenario, SimConfig,
    State, TransitionMatrix,
};

const DEFAULT_CYCLES: u64 = 1_000_000;
const DEFAULT_SEED: u64 = 0;
const DEFAULT_REPLICATIONS: u32 = 8;
const DEFAULT_EPSILON: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Errors surfaced to the user, mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or violated model invariants (exit 2).
    Validation(String),
    /// The requested budget admits no transition matrix (exit 3). Carries
    /// the rendered report, if any, so it can still be emitted.
    Infeasible {
        message: String,
        report: Option<String>,
    },
    /// I/O or serialization failure (exit 1).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Infeasible { .. } => EXIT_INFEASIBLE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Internal(m) => m,
            CliError::Infeasible { message, .. } => message,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleBudget { .. } => CliError::Infeasible {
                message: e.to_string(),
                report: None,
            },
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

// ---------------------------------------------------------------------------
// argument parsing

#[derive(Parser)]
#[command(
    name = "aoi",
    version,
    about = "Age of information for a blocking update server with Gilbert-Elliot modulated service or sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form time-average age
    Age(AgeArgs),
    /// Estimate the time-average age by seeded Monte Carlo
    Simulate(SimulateArgs),
    /// Find the age-optimal transition matrix, optionally under a budget
    Optimize(OptimizeArgs),
    /// Sweep p or q over a grid and emit a CSV table
    Sweep(SweepArgs),
    /// Cross-check the closed forms, invariants, and simulator agreement
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ScenarioKind {
    /// Gilbert-Elliot service times, Poisson arrivals
    GeService,
    /// Gilbert-Elliot interarrival times, exponential service
    GeArrival,
    /// No modulation (age command only)
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum VaryAxis {
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatKind {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum InitialStateKind {
    Bad,
    Good,
    Stationary,
}

impl From<InitialStateKind> for InitialState {
    fn from(k: InitialStateKind) -> Self {
        match k {
            InitialStateKind::Bad => InitialState::Fixed(State::Bad),
            InitialStateKind::Good => InitialState::Fixed(State::Good),
            InitialStateKind::Stationary => InitialState::Stationary,
        }
    }
}

#[derive(Args, Clone)]
struct RateArgs {
    /// Scenario kind
    #[arg(long, value_enum)]
    scenario: Option<ScenarioKind>,
    /// Arrival rate (ge-service, single)
    #[arg(long)]
    lambda: Option<f64>,
    /// Bad-state service rate (ge-service)
    #[arg(long)]
    mu_b: Option<f64>,
    /// Good-state service rate (ge-service)
    #[arg(long)]
    mu_g: Option<f64>,
    /// Service rate (ge-arrival, single)
    #[arg(long)]
    mu: Option<f64>,
    /// Bad-state arrival rate (ge-arrival)
    #[arg(long)]
    lambda_b: Option<f64>,
    /// Good-state arrival rate (ge-arrival)
    #[arg(long)]
    lambda_g: Option<f64>,
}

#[derive(Args, Clone)]
struct SimControlArgs {
    /// Cycles per replication [default: 1000000]
    #[arg(long)]
    cycles: Option<u64>,
    /// Base RNG seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Independent replications [default: 8]
    #[arg(long)]
    replications: Option<u32>,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output format [default: json]
    #[arg(long, value_enum)]
    format: Option<FormatKind>,
    /// Write output to this path instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file whose keys mirror the long flags; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AgeArgs {
    #[command(flatten)]
    rates: RateArgs,
    /// Transition probability bad -> good
    #[arg(long)]
    p: Option<f64>,
    /// Transition probability good -> bad
    #[arg(long)]
    q: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    rates: RateArgs,
    /// Transition probability bad -> good
    #[arg(long)]
    p: Option<f64>,
    /// Transition probability good -> bad
    #[arg(long)]
    q: Option<f64>,
    #[command(flatten)]
    sim: SimControlArgs,
    /// Initial modulation state [default: stationary]
    #[arg(long, value_enum)]
    initial_state: Option<InitialStateKind>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    rates: RateArgs,
    /// Cost per unit time in the bad state
    #[arg(long)]
    c_b: Option<f64>,
    /// Cost per unit time in the good state
    #[arg(long)]
    c_g: Option<f64>,
    /// Average cost budget per unit time
    #[arg(long)]
    budget: Option<f64>,
    /// Distance kept from open boundaries [default: 1e-6]
    #[arg(long)]
    epsilon: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    rates: RateArgs,
    /// Which transition probability varies
    #[arg(long, value_enum)]
    vary: Option<VaryAxis>,
    /// Varied values as start:stop:step (stop inclusive within half a step)
    #[arg(long)]
    range: Option<String>,
    /// Fixed values of the other axis, e.g. q=0.1,0.5,0.9
    #[arg(long)]
    fix: Option<String>,
    /// Also simulate each row and fill delta_sim/sim_stderr
    #[arg(long)]
    with_sim: bool,
    #[command(flatten)]
    sim: SimControlArgs,
    /// Write output to this path instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file whose keys mirror the long flags; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Closed-form checks only (skips simulator agreement)
    #[arg(long)]
    quick: bool,
    #[command(flatten)]
    sim: SimControlArgs,
    /// Write output to this path instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file whose keys mirror the long flags; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

/// The `--config` file: one flat object, keys mirror the long flags. Each
/// subcommand reads the keys it understands.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    scenario: Option<ScenarioKind>,
    lambda: Option<f64>,
    mu_b: Option<f64>,
    mu_g: Option<f64>,
    mu: Option<f64>,
    lambda_b: Option<f64>,
    lambda_g: Option<f64>,
    p: Option<f64>,
    q: Option<f64>,
    c_b: Option<f64>,
    c_g: Option<f64>,
    budget: Option<f64>,
    epsilon: Option<f64>,
    cycles: Option<u64>,
    seed: Option<u64>,
    replications: Option<u32>,
    initial_state: Option<InitialStateKind>,
    vary: Option<VaryAxis>,
    range: Option<String>,
    fix: Option<String>,
    with_sim: Option<bool>,
    quick: Option<bool>,
    format: Option<FormatKind>,
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| validation(format!("invalid config {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// resolved run descriptions

/// A fully validated request, ready to execute.
pub enum RunSpec {
    Age(AgeSpec),
    Simulate(SimulateSpec),
    Optimize(OptimizeSpec),
    Sweep(SweepSpec),
    Validate(ValidateSpec),
}

impl RunSpec {
    pub fn out_path(&self) -> Option<&Path> {
        match self {
            RunSpec::Age(s) => s.out.as_deref(),
            RunSpec::Simulate(s) => s.out.as_deref(),
            RunSpec::Optimize(s) => s.out.as_deref(),
            RunSpec::Sweep(s) => s.out.as_deref(),
            RunSpec::Validate(s) => s.out.as_deref(),
        }
    }
}

pub enum AgeTarget {
    Single {
        lambda: f64,
        mu: f64,
    },
    Ge {
        scenario: Scenario,
        matrix: TransitionMatrix,
    },
}

pub struct AgeSpec {
    pub target: AgeTarget,
    pub format: FormatKind,
    pub out: Option<PathBuf>,
}

pub struct SimulateSpec {
    pub config: SimConfig,
    pub format: FormatKind,
    pub out: Option<PathBuf>,
}

pub struct OptimizeSpec {
    pub scenario: Scenario,
    pub cost: Option<CostModel>,
    pub epsilon: f64,
    pub format: FormatKind,
    pub out: Option<PathBuf>,
}

pub struct SweepSpec {
    pub scenario: Scenario,
    pub vary_p: bool,
    pub varied: Vec<f64>,
    pub fixed: Vec<f64>,
    pub with_sim: bool,
    pub cycles: u64,
    pub seed: u64,
    pub replications: u32,
    pub out: Option<PathBuf>,
}

pub struct ValidateSpec {
    pub quick: bool,
    pub cycles: u64,
    pub seed: u64,
    pub replications: u32,
    pub out: Option<PathBuf>,
}

struct RateFlags {
    lambda: Option<f64>,
    mu_b: Option<f64>,
    mu_g: Option<f64>,
    mu: Option<f64>,
    lambda_b: Option<f64>,
    lambda_g: Option<f64>,
}

impl RateFlags {
    fn merged(args: &RateArgs, cfg: &ConfigFile) -> (Option<ScenarioKind>, Self) {
        (
            args.scenario.or(cfg.scenario),
            Self {
                lambda: args.lambda.or(cfg.lambda),
                mu_b: args.mu_b.or(cfg.mu_b),
                mu_g: args.mu_g.or(cfg.mu_g),
                mu: args.mu.or(cfg.mu),
                lambda_b: args.lambda_b.or(cfg.lambda_b),
                lambda_g: args.lambda_g.or(cfg.lambda_g),
            },
        )
    }

    fn require(&self, flag: &str) -> Result<f64, CliError> {
        let value = match flag {
            "--lambda" => self.lambda,
            "--mu-b" => self.mu_b,
            "--mu-g" => self.mu_g,
            "--mu" => self.mu,
            "--lambda-b" => self.lambda_b,
            "--lambda-g" => self.lambda_g,
            _ => unreachable!(),
        };
        value.ok_or_else(|| validation(format!("{flag} is required for this scenario")))
    }

    fn forbid(&self, kind: &str, flags: &[(&str, Option<f64>)]) -> Result<(), CliError> {
        for (name, value) in flags {
            if value.is_some() {
                return Err(validation(format!(
                    "{name} does not apply to scenario {kind}"
                )));
            }
        }
        Ok(())
    }
}

enum ScenarioChoice {
    Single { lambda: f64, mu: f64 },
    Ge(Scenario),
}

fn build_scenario(
    kind: Option<ScenarioKind>,
    flags: &RateFlags,
    allow_single: bool,
) -> Result<ScenarioChoice, CliError> {
    let kind = kind.ok_or_else(|| validation("--scenario is required"))?;
    match kind {
        ScenarioKind::GeService => {
            flags.forbid(
                "ge-service",
                &[
                    ("--mu", flags.mu),
                    ("--lambda-b", flags.lambda_b),
                    ("--lambda-g", flags.lambda_g),
                ],
            )?;
            let scenario = GEServiceScenario::new(
                flags.require("--lambda")?,
                flags.require("--mu-b")?,
                flags.require("--mu-g")?,
            )?;
            Ok(ScenarioChoice::Ge(Scenario::Service(scenario)))
        }
        ScenarioKind::GeArrival => {
            flags.forbid(
                "ge-arrival",
                &[
                    ("--lambda", flags.lambda),
                    ("--mu-b", flags.mu_b),
                    ("--mu-g", flags.mu_g),
                ],
            )?;
            let scenario = GEArrivalScenario::new(
                flags.require("--mu")?,
                flags.require("--lambda-b")?,
                flags.require("--lambda-g")?,
            )?;
            Ok(ScenarioChoice::Ge(Scenario::Arrival(scenario)))
        }
        ScenarioKind::Single => {
            if !allow_single {
                return Err(validation(
                    "scenario single is only available for the age command",
                ));
            }
            flags.forbid(
                "single",
                &[
                    ("--mu-b", flags.mu_b),
                    ("--mu-g", flags.mu_g),
                    ("--lambda-b", flags.lambda_b),
                    ("--lambda-g", flags.lambda_g),
                ],
            )?;
            Ok(ScenarioChoice::Single {
                lambda: flags.require("--lambda")?,
                mu: flags.require("--mu")?,
            })
        }
    }
}

fn require_ge(choice: ScenarioChoice) -> Result<Scenario, CliError> {
    match choice {
        ScenarioChoice::Ge(s) => Ok(s),
        ScenarioChoice::Single { .. } => unreachable!("single rejected above"),
    }
}

fn build_spec(command: Command) -> Result<RunSpec, CliError> {
    match command {
        Command::Age(args) => {
            let cfg = load_config(args.output.config.as_deref())?;
            let (kind, flags) = RateFlags::merged(&args.rates, &cfg);
            let p = args.p.or(cfg.p);
            let q = args.q.or(cfg.q);
            let target = match build_scenario(kind, &flags, true)? {
                ScenarioChoice::Single { lambda, mu } => {
                    if p.is_some() || q.is_some() {
                        return Err(validation("--p/--q do not apply to scenario single"));
                    }
                    AgeTarget::Single { lambda, mu }
                }
                ScenarioChoice::Ge(scenario) => AgeTarget::Ge {
                    scenario,
                    matrix: TransitionMatrix::new(
                        p.ok_or_else(|| validation("--p is required"))?,
                        q.ok_or_else(|| validation("--q is required"))?,
                    )?,
                },
            };
            Ok(RunSpec::Age(AgeSpec {
                target,
                format: args
                    .output
                    .format
                    .or(cfg.format)
                    .unwrap_or(FormatKind::Json),
                out: args.output.out.or(cfg.out),
            }))
        }
        Command::Simulate(args) => {
            let cfg = load_config(args.output.config.as_deref())?;
            let (kind, flags) = RateFlags::merged(&args.rates, &cfg);
            let scenario = require_ge(build_scenario(kind, &flags, false)?)?;
            let matrix = TransitionMatrix::new(
                args.p
                    .or(cfg.p)
                    .ok_or_else(|| validation("--p is required"))?,
                args.q
                    .or(cfg.q)
                    .ok_or_else(|| validation("--q is required"))?,
            )?;
            let config = SimConfig::new(
                scenario,
                matrix,
                args.sim.cycles.or(cfg.cycles).unwrap_or(DEFAULT_CYCLES),
                args.sim.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
                args.sim
                    .replications
                    .or(cfg.replications)
                    .unwrap_or(DEFAULT_REPLICATIONS),
            )?
            .with_initial_state(
                args.initial_state
                    .or(cfg.initial_state)
                    .unwrap_or(InitialStateKind::Stationary)
                    .into(),
            );
            Ok(RunSpec::Simulate(SimulateSpec {
                config,
                format: args
                    .output
                    .format
                    .or(cfg.format)
                    .unwrap_or(FormatKind::Json),
                out: args.output.out.or(cfg.out),
            }))
        }
        Command::Optimize(args) => {
            let cfg = load_config(args.output.config.as_deref())?;
            let (kind, flags) = RateFlags::merged(&args.rates, &cfg);
            let scenario = require_ge(build_scenario(kind, &flags, false)?)?;
            let c_b = args.c_b.or(cfg.c_b);
            let c_g = args.c_g.or(cfg.c_g);
            let budget = args.budget.or(cfg.budget);
            let cost = match (c_b, c_g, budget) {
                (None, None, None) => None,
                (Some(c_b), Some(c_g), Some(budget)) => Some(CostModel::new(c_b, c_g, budget)?),
                _ => {
                    return Err(validation(
                        "--c-b, --c-g, and --budget must be given together",
                    ))
                }
            };
            Ok(RunSpec::Optimize(OptimizeSpec {
                scenario,
                cost,
                epsilon: args.epsilon.or(cfg.epsilon).unwrap_or(DEFAULT_EPSILON),
                format: args
                    .output
                    .format
                    .or(cfg.format)
                    .unwrap_or(FormatKind::Json),
                out: args.output.out.or(cfg.out),
            }))
        }
        Command::Sweep(args) => {
            let cfg = load_config(args.config.as_deref())?;
            let (kind, flags) = RateFlags::merged(&args.rates, &cfg);
            let scenario = require_ge(build_scenario(kind, &flags, false)?)?;
            let vary = args
                .vary
                .or(cfg.vary)
                .ok_or_else(|| validation("--vary is required (p or q)"))?;
            let range = args
                .range
                .or(cfg.range)
                .ok_or_else(|| validation("--range is required (start:stop:step)"))?;
            let fix = args
                .fix
                .or(cfg.fix)
                .ok_or_else(|| validation("--fix is required (e.g. q=0.1,0.5,0.9)"))?;
            let varied = parse_range(&range)?;
            let fixed_axis = match vary {
                VaryAxis::P => "q",
                VaryAxis::Q => "p",
            };
            let mut fixed = parse_fix(&fix, fixed_axis)?;
            fixed.sort_by(|a, b| a.partial_cmp(b).expect("finite fixed values"));
            Ok(RunSpec::Sweep(SweepSpec {
                scenario,
                vary_p: vary == VaryAxis::P,
                varied,
                fixed,
                with_sim: args.with_sim || cfg.with_sim.unwrap_or(false),
                cycles: args.sim.cycles.or(cfg.cycles).unwrap_or(DEFAULT_CYCLES),
                seed: args.sim.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
                replications: args
                    .sim
                    .replications
                    .or(cfg.replications)
                    .unwrap_or(DEFAULT_REPLICATIONS),
                out: args.out.or(cfg.out),
            }))
        }
        Command::Validate(args) => {
            let cfg = load_config(args.config.as_deref())?;
            let spec = ValidateSpec {
                quick: args.quick || cfg.quick.unwrap_or(false),
                cycles: args.sim.cycles.or(cfg.cycles).unwrap_or(DEFAULT_CYCLES),
                seed: args.sim.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
                replications: args
                    .sim
                    .replications
                    .or(cfg.replications)
                    .unwrap_or(DEFAULT_REPLICATIONS),
                out: args.out.or(cfg.out),
            };
            if !spec.quick && spec.replications < 2 {
                return Err(validation(
                    "validate needs at least 2 replications for the simulator agreement check",
                ));
            }
            Ok(RunSpec::Validate(spec))
        }
    }
}

/// Parses `start:stop:step`; the stop value is included when it lands within
/// half a step of the grid.
fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(validation(format!(
            "--range must be start:stop:step, got '{text}'"
        )));
    };
    let parse = |s: &str, what: &str| -> Result<f64, CliError> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| validation(format!("--range {what} '{s}' is not a number")))
    };
    let (start, stop, step) = (
        parse(start, "start")?,
        parse(stop, "stop")?,
        parse(step, "step")?,
    );
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0) {
        return Err(validation("--range needs finite bounds and step > 0"));
    }
    if stop < start - step / 2.0 {
        return Err(validation("--range stop lies before start"));
    }
    let mut values = Vec::new();
    let mut i = 0u32;
    loop {
        let v = start + f64::from(i) * step;
        if v > stop + step / 2.0 {
            break;
        }
        values.push(v);
        i += 1;
    }
    if values.is_empty() {
        return Err(validation("--range produced no values"));
    }
    Ok(values)
}

/// Parses `axis=v1,v2,...` where `axis` must name the non-varied axis.
fn parse_fix(text: &str, expected_axis: &str) -> Result<Vec<f64>, CliError> {
    let Some((axis, list)) = text.split_once('=') else {
        return Err(validation(format!(
            "--fix must look like {expected_axis}=0.1,0.5,0.9, got '{text}'"
        )));
    };
    if axis.trim() != expected_axis {
        return Err(validation(format!(
            "--fix must set the non-varied axis '{expected_axis}', got '{}'",
            axis.trim()
        )));
    }
    let values: Result<Vec<f64>, CliError> = list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| validation(format!("--fix value '{s}' is not a finite number")))
        })
        .collect();
    let values = values?;
    if values.is_empty() {
        return Err(validation("--fix needs at least one value"));
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// rendered outputs

#[derive(Serialize)]
#[serde(untagged)]
enum RateFields {
    Service {
        lambda: f64,
        mu_b: f64,
        mu_g: f64,
    },
    Arrival {
        mu: f64,
        lambda_b: f64,
        lambda_g: f64,
    },
}

impl RateFields {
    fn of(scenario: &Scenario) -> Self {
        match scenario {
            Scenario::Service(s) => RateFields::Service {
                lambda: s.lambda(),
                mu_b: s.mu_b(),
                mu_g: s.mu_g(),
            },
            Scenario::Arrival(s) => RateFields::Arrival {
                mu: s.mu(),
                lambda_b: s.lambda_b(),
                lambda_g: s.lambda_g(),
            },
        }
    }
}

#[derive(Serialize)]
struct SingleAgeOutput {
    scenario: &'static str,
    lambda: f64,
    mu: f64,
    delta: f64,
}

#[derive(Serialize)]
struct GeAgeOutput {
    scenario: &'static str,
    #[serde(flatten)]
    rates: RateFields,
    p: f64,
    q: f64,
    pi_b: f64,
    pi_g: f64,
    #[serde(rename = "EQ_b")]
    eq_b: f64,
    #[serde(rename = "EQ_g")]
    eq_g: f64,
    #[serde(rename = "EY_b")]
    ey_b: f64,
    #[serde(rename = "EY_g")]
    ey_g: f64,
    delta: f64,
}

#[derive(Serialize)]
struct SimulateOutput {
    scenario: &'static str,
    #[serde(flatten)]
    rates: RateFields,
    p: f64,
    q: f64,
    initial_state: &'static str,
    cycles: u64,
    seed: u64,
    replications: u32,
    delta_hat: f64,
    std_error: f64,
    cycles_total: u64,
    sim_time_total: f64,
}

#[derive(Serialize)]
struct OptimizeOutput {
    scenario: &'static str,
    #[serde(flatten)]
    rates: RateFields,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<f64>,
    epsilon: f64,
    feasibility: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    p_star: f64,
    q_star: f64,
    delta_star: f64,
    attained: bool,
    constant_along_line: bool,
    tie: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    average_cost: Option<f64>,
}

#[derive(Serialize)]
struct InfeasibleOutput {
    scenario: &'static str,
    #[serde(flatten)]
    rates: RateFields,
    c_b: f64,
    c_g: f64,
    budget: f64,
    feasibility: &'static str,
    error: String,
}

fn render_json<S: Serialize>(value: &S) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// CSV rendering of a flat JSON object: one header row, one value row.
fn render_scalar_csv<S: Serialize>(value: &S) -> Result<String, CliError> {
    let json = serde_json::to_value(value)
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    let object = json.as_object().expect("scalar outputs are objects");
    let mut header = Vec::new();
    let mut row = Vec::new();
    for (key, value) in object {
        header.push(key.clone());
        row.push(match value {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        });
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&header).map_err(csv_internal)?;
    writer.write_record(&row).map_err(csv_internal)?;
    finish_csv(writer)
}

fn csv_internal(e: csv::Error) -> CliError {
    CliError::Internal(format!("csv write failed: {e}"))
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Internal(format!("csv write failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(format!("csv write failed: {e}")))
}

fn render_scalar<S: Serialize>(value: &S, format: FormatKind) -> Result<String, CliError> {
    match format {
        FormatKind::Json => render_json(value),
        FormatKind::Csv => render_scalar_csv(value),
    }
}

/// Ten significant digits, plain notation where reasonable.
fn fmt_sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..=15).contains(&mag) {
        return format!("{x:.9e}");
    }
    let decimals = (9 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

// ---------------------------------------------------------------------------
// command execution

pub fn cmd_age(spec: &AgeSpec) -> Result<String, CliError> {
    match &spec.target {
        AgeTarget::Single { lambda, mu } => {
            let delta = age_single_state(*lambda, *mu)?;
            render_scalar(
                &SingleAgeOutput {
                    scenario: "single",
                    lambda: *lambda,
                    mu: *mu,
                    delta,
                },
                spec.format,
            )
        }
        AgeTarget::Ge { scenario, matrix } => {
            let breakdown = age(scenario, matrix);
            let pi = matrix.stationary_distribution();
            render_scalar(
                &GeAgeOutput {
                    scenario: scenario.kind(),
                    rates: RateFields::of(scenario),
                    p: matrix.p(),
                    q: matrix.q(),
                    pi_b: pi.pi_b(),
                    pi_g: pi.pi_g(),
                    eq_b: breakdown.eq_b,
                    eq_g: breakdown.eq_g,
                    ey_b: breakdown.ey_b,
                    ey_g: breakdown.ey_g,
                    delta: breakdown.delta,
                },
                spec.format,
            )
        }
    }
}

pub fn cmd_simulate(spec: &SimulateSpec) -> Result<String, CliError> {
    let cfg = &spec.config;
    let result = simulate_cycles(cfg);
    render_scalar(
        &SimulateOutput {
            scenario: cfg.scenario.kind(),
            rates: RateFields::of(&cfg.scenario),
            p: cfg.transition.p(),
            q: cfg.transition.q(),
            initial_state: match cfg.initial_state {
                InitialState::Stationary => "stationary",
                InitialState::Fixed(State::Bad) => "bad",
                InitialState::Fixed(State::Good) => "good",
            },
            cycles: cfg.num_cycles,
            seed: cfg.seed,
            replications: cfg.replications,
            delta_hat: result.delta_hat,
            std_error: result.std_error,
            cycles_total: result.cycles_total,
            sim_time_total: result.sim_time_total,
        },
        spec.format,
    )
}

pub fn cmd_optimize(spec: &OptimizeSpec) -> Result<String, CliError> {
    let feasibility = spec.cost.as_ref().map(classify);
    let result = match &spec.cost {
        None => optimal_unconstrained(&spec.scenario, spec.epsilon)?,
        Some(cm) => match optimal_constrained(&spec.scenario, cm, spec.epsilon) {
            Ok(r) => r,
            Err(e @ Error::InfeasibleBudget { .. }) => {
                let report = render_json(&InfeasibleOutput {
                    scenario: spec.scenario.kind(),
                    rates: RateFields::of(&spec.scenario),
                    c_b: cm.c_b(),
                    c_g: cm.c_g(),
                    budget: cm.budget(),
                    feasibility: "infeasible",
                    error: e.to_string(),
                })?;
                return Err(CliError::Infeasible {
                    message: e.to_string(),
                    report: Some(report),
                });
            }
            Err(e) => return Err(e.into()),
        },
    };
    let average_cost = spec.cost.as_ref().map(|cm| {
        cm.average_cost(
            &TransitionMatrix::new(result.p_star, result.q_star).expect("optimum is valid"),
        )
    });
    render_scalar(
        &OptimizeOutput {
            scenario: spec.scenario.kind(),
            rates: RateFields::of(&spec.scenario),
            c_b: spec.cost.as_ref().map(|c| c.c_b()),
            c_g: spec.cost.as_ref().map(|c| c.c_g()),
            budget: spec.cost.as_ref().map(|c| c.budget()),
            epsilon: spec.epsilon,
            feasibility: feasibility
                .as_ref()
                .map_or("unconstrained", Feasibility::name),
            alpha: result.alpha,
            p_star: result.p_star,
            q_star: result.q_star,
            delta_star: result.delta_star,
            attained: result.attained,
            constant_along_line: result.constant_along_line,
            tie: result.tie,
            average_cost,
        },
        spec.format,
    )
}

pub fn cmd_sweep(spec: &SweepSpec) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "scenario",
            "p",
            "q",
            "delta_analytic",
            "delta_sim",
            "sim_stderr",
        ])
        .map_err(csv_internal)?;

    let mut row_index = 0u64;
    for &fixed in &spec.fixed {
        for &varied in &spec.varied {
            let (p, q) = if spec.vary_p {
                (varied, fixed)
            } else {
                (fixed, varied)
            };
            let matrix = TransitionMatrix::new(p, q)?;
            let delta = age(&spec.scenario, &matrix).delta;
            let (delta_sim, sim_stderr) = if spec.with_sim {
                let cfg = SimConfig::new(
                    spec.scenario,
                    matrix,
                    spec.cycles,
                    mix_seed(spec.seed, row_index),
                    spec.replications,
                )?;
                let result = simulate_cycles(&cfg);
                (fmt_sig10(result.delta_hat), fmt_sig10(result.std_error))
            } else {
                (String::new(), String::new())
            };
            writer
                .write_record([
                    spec.scenario.kind().to_string(),
                    fmt_sig10(p),
                    fmt_sig10(q),
                    fmt_sig10(delta),
                    delta_sim,
                    sim_stderr,
                ])
                .map_err(csv_internal)?;
            row_index += 1;
        }
    }
    finish_csv(writer)
}

// ---------------------------------------------------------------------------
// validate

#[derive(Serialize)]
struct CheckOutcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct ValidateReport {
    quick: bool,
    cycles: u64,
    seed: u64,
    replications: u32,
    checks: Vec<CheckOutcome>,
    passed: bool,
}

fn ln_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo * (hi / lo).powf(rng.random::<f64>())
}

fn canonical_service() -> Scenario {
    Scenario::Service(GEServiceScenario::new(1.0, 0.1, 1.0).expect("canonical rates"))
}

fn canonical_arrival() -> Scenario {
    Scenario::Arrival(GEArrivalScenario::new(1.0, 0.1, 1.0).expect("canonical rates"))
}

/// At (p, q) = (1, 0) and (0, 1) the closed forms must reduce to the
/// single-state formula for the good and bad rates respectively.
fn check_boundary_consistency(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 101));
    let good_corner = TransitionMatrix::new(1.0, 0.0).expect("corner");
    let bad_corner = TransitionMatrix::new(0.0, 1.0).expect("corner");
    let mut worst = 0.0f64;
    let mut identities = 0u32;
    for _ in 0..100 {
        let fixed = ln_uniform(&mut rng, 0.05, 5.0);
        let slow = ln_uniform(&mut rng, 0.05, 5.0);
        let fast = slow * (1.1 + 30.0 * rng.random::<f64>());

        let service = GEServiceScenario::new(fixed, slow, fast).expect("ordered rates");
        let pairs = [
            (
                age_ge_service(&service, &good_corner).delta,
                age_single_state(fixed, fast),
            ),
            (
                age_ge_service(&service, &bad_corner).delta,
                age_single_state(fixed, slow),
            ),
        ];
        let arrival = GEArrivalScenario::new(fixed, slow, fast).expect("ordered rates");
        let arrival_pairs = [
            (
                age_ge_arrival(&arrival, &good_corner).delta,
                age_single_state(fast, fixed),
            ),
            (
                age_ge_arrival(&arrival, &bad_corner).delta,
                age_single_state(slow, fixed),
            ),
        ];
        for (got, want) in pairs.into_iter().chain(arrival_pairs) {
            let want = want.expect("positive rates");
            worst = worst.max((got - want).abs() / want);
            identities += 1;
        }
    }
    CheckOutcome {
        name: "boundary_consistency",
        passed: worst <= 1e-12,
        detail: format!("{identities} corner identities, worst relative error {worst:.3e}"),
    }
}

/// The arrival-scenario age must be invariant along rays (p, q) -> (kp, kq).
fn check_ray_invariance(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 202));
    let mut scenarios = vec![canonical_arrival()];
    for _ in 0..10 {
        let mu = ln_uniform(&mut rng, 0.05, 5.0);
        let slow = ln_uniform(&mut rng, 0.05, 5.0);
        let fast = slow * (1.1 + 20.0 * rng.random::<f64>());
        scenarios.push(Scenario::Arrival(
            GEArrivalScenario::new(mu, slow, fast).expect("ordered rates"),
        ));
    }
    let grid = [0.1, 0.2, 0.3, 0.45];
    let mut worst = 0.0f64;
    let mut count = 0u32;
    for scenario in &scenarios {
        for &p in &grid {
            for &q in &grid {
                let base = age(scenario, &TransitionMatrix::new(p, q).expect("grid")).delta;
                for k in [0.5, 2.0] {
                    let scaled = age(
                        scenario,
                        &TransitionMatrix::new(k * p, k * q).expect("grid"),
                    )
                    .delta;
                    worst = worst.max((scaled - base).abs() / base);
                    count += 1;
                }
            }
        }
    }
    CheckOutcome {
        name: "ray_invariance",
        passed: worst <= 1e-12,
        detail: format!("{count} ray pairs, worst relative error {worst:.3e}"),
    }
}

/// Age decreases in p and increases in q on a 9x9 interior grid.
fn check_monotonicity_grid() -> CheckOutcome {
    let mut violations = 0usize;
    let mut points = 0usize;
    for scenario in [canonical_service(), canonical_arrival()] {
        let report = verify_monotonicity(&scenario, 9).expect("grid resolution 9");
        violations += report.violations.len();
        points += report.points.len();
    }
    CheckOutcome {
        name: "monotonicity_grid",
        passed: violations == 0,
        detail: format!("{points} grid points, {violations} violations"),
    }
}

/// The derivative-numerator expression stays negative across a log-spaced
/// parameter grid.
fn check_sign_condition() -> CheckOutcome {
    let grid: Vec<f64> = (0..10)
        .map(|i| 10f64.powf(-2.0 + f64::from(i) * 4.0 / 9.0))
        .collect();
    let mut max_value = f64::NEG_INFINITY;
    let mut count = 0u32;
    for &lambda in &grid {
        for &mu_b in &grid {
            for &mu_g in &grid {
                if mu_g <= mu_b {
                    continue;
                }
                let scenario = GEServiceScenario::new(lambda, mu_b, mu_g).expect("ordered rates");
                for q in [0.01, 0.5, 0.99] {
                    max_value = max_value.max(crate::optimize::lemma1_sign_condition(&scenario, q));
                    count += 1;
                }
            }
        }
    }
    CheckOutcome {
        name: "sign_condition",
        passed: max_value < 0.0,
        detail: format!("{count} evaluations, maximum value {max_value:.3e}"),
    }
}

/// Monte Carlo estimates agree with the closed forms within three standard
/// errors.
fn check_oracle_agreement(cycles: u64, seed: u64, replications: u32) -> CheckOutcome {
    let points: Vec<(Scenario, f64, f64)> = vec![
        (canonical_service(), 0.5, 0.5),
        (canonical_service(), 0.9, 0.1),
        (canonical_service(), 0.1, 0.9),
        (canonical_arrival(), 0.5, 0.5),
        (canonical_arrival(), 0.2, 0.8),
        (canonical_arrival(), 0.7, 0.3),
    ];
    let mut worst_z = 0.0f64;
    let mut failures = Vec::new();
    for (index, (scenario, p, q)) in points.iter().enumerate() {
        let matrix = TransitionMatrix::new(*p, *q).expect("grid point");
        let cfg = SimConfig::new(
            *scenario,
            matrix,
            cycles,
            mix_seed(seed, 1000 + index as u64),
            replications,
        )
        .expect("validated controls");
        let result = simulate_cycles(&cfg);
        let exact = age(scenario, &matrix).delta;
        let z = (result.delta_hat - exact).abs() / result.std_error;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            failures.push(format!("{} (p={p}, q={q}): z={z:.2}", scenario.kind()));
        }
    }
    CheckOutcome {
        name: "oracle_agreement",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!(
                "{} points within 3 standard errors, worst z {worst_z:.2}",
                points.len()
            )
        } else {
            failures.join("; ")
        },
    }
}

fn render_validate_report(report: &ValidateReport) -> Result<(String, bool), CliError> {
    Ok((render_json(report)?, report.passed))
}

pub fn cmd_validate(spec: &ValidateSpec) -> Result<(String, bool), CliError> {
    let mut checks = vec![
        check_boundary_consistency(spec.seed),
        check_ray_invariance(spec.seed),
        check_monotonicity_grid(),
        check_sign_condition(),
    ];
    if !spec.quick {
        checks.push(check_oracle_agreement(
            spec.cycles,
            spec.seed,
            spec.replications,
        ));
    }
    let passed = checks.iter().all(|c| c.passed);
    render_validate_report(&ValidateReport {
        quick: spec.quick,
        cycles: spec.cycles,
        seed: spec.seed,
        replications: spec.replications,
        checks,
        passed,
    })
}

// ---------------------------------------------------------------------------
// entry points

/// A rendered result plus the exit code to finish with.
pub struct Output {
    pub text: String,
    pub exit_code: i32,
}

pub fn execute(spec: &RunSpec) -> Result<Output, CliError> {
    let ok = |text| Output {
        text,
        exit_code: EXIT_OK,
    };
    match spec {
        RunSpec::Age(s) => cmd_age(s).map(ok),
        RunSpec::Simulate(s) => cmd_simulate(s).map(ok),
        RunSpec::Optimize(s) => cmd_optimize(s).map(ok),
        RunSpec::Sweep(s) => cmd_sweep(s).map(ok),
        RunSpec::Validate(s) => cmd_validate(s).map(|(text, passed)| Output {
            text,
            exit_code: if passed { EXIT_OK } else { EXIT_INTERNAL },
        }),
    }
}

fn write_output(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Full pipeline: parse, build, execute, emit. Returns the process exit code.
pub fn run_args<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let spec = match build_spec(cli.command) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return e.exit_code();
        }
    };
    let out = spec.out_path().map(Path::to_path_buf);
    match execute(&spec) {
        Ok(output) => match write_output(&output.text, out.as_deref()) {
            Ok(()) => output.exit_code,
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
        Err(e) => {
            if let CliError::Infeasible {
                report: Some(report),
                ..
            } = &e
            {
                let _ = write_output(report, out.as_deref());
            }
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn main_entry() -> i32 {
    run_args(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn range_parsing() {
        let values = parse_range("0.1:0.9:0.1").unwrap();
        assert_eq!(values.len(), 9);
        assert_relative_eq!(values[0], 0.1, epsilon = 1e-12);
        assert_relative_eq!(values[8], 0.9, epsilon = 1e-12);

        assert_eq!(parse_range("0.5:0.5:0.1").unwrap(), vec![0.5]);
        assert!(parse_range("0.1:0.9").is_err());
        assert!(parse_range("0.1:0.9:0").is_err());
        assert!(parse_range("0.9:0.1:0.1").is_err());
        assert!(parse_range("a:b:c").is_err());
    }

    #[test]
    fn fix_parsing() {
        assert_eq!(
            parse_fix("q=0.1,0.5,0.9", "q").unwrap(),
            vec![0.1, 0.5, 0.9]
        );
        assert_eq!(parse_fix("p = 0.3", "p").unwrap(), vec![0.3]);
        assert!(parse_fix("p=0.1", "q").is_err());
        assert!(parse_fix("0.1,0.2", "q").is_err());
        assert!(parse_fix("q=x", "q").is_err());
        assert!(parse_fix("q=NaN,0.5", "q").is_err());
    }

    #[test]
    fn sig10_formatting() {
        assert_eq!(fmt_sig10(0.1), "0.1000000000");
        assert_eq!(fmt_sig10(14.269230769230769), "14.26923077");
        assert_eq!(fmt_sig10(2.5), "2.500000000");
        assert_eq!(fmt_sig10(0.0), "0");
        assert_eq!(fmt_sig10(1.0e-7), "1.000000000e-7");
        let round_trip: f64 = fmt_sig10(185.5 / 13.0).parse().unwrap();
        assert_relative_eq!(round_trip, 185.5 / 13.0, max_relative = 1e-9);
    }

    #[test]
    fn age_output_carries_all_expected_keys() {
        let scenario = canonical_service();
        let Scenario::Service(_) = scenario else {
            unreachable!()
        };
        let spec = AgeSpec {
            target: AgeTarget::Ge {
                scenario,
                matrix: TransitionMatrix::new(0.5, 0.5).unwrap(),
            },
            format: FormatKind::Json,
            out: None,
        };
        let text = cmd_age(&spec).unwrap();
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in [
            "scenario", "lambda", "mu_b", "mu_g", "p", "q", "pi_b", "pi_g", "EQ_b", "EQ_g", "EY_b",
            "EY_g", "delta",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        assert_relative_eq!(
            json["delta"].as_f64().unwrap(),
            185.5 / 13.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn scalar_csv_has_header_and_value_row() {
        let spec = AgeSpec {
            target: AgeTarget::Single {
                lambda: 1.0,
                mu: 1.0,
            },
            format: FormatKind::Csv,
            out: None,
        };
        let text = cmd_age(&spec).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            vec!["scenario,lambda,mu,delta", "single,1.0,1.0,2.5"]
        );
    }

    #[test]
    fn failed_check_is_named_and_nonzero() {
        let report = ValidateReport {
            quick: true,
            cycles: 0,
            seed: 0,
            replications: 0,
            checks: vec![CheckOutcome {
                name: "boundary_consistency",
                passed: false,
                detail: "injected failure".to_string(),
            }],
            passed: false,
        };
        let (text, passed) = render_validate_report(&report).unwrap();
        assert!(!passed);
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["passed"], serde_json::Value::Bool(false));
        assert_eq!(json["checks"][0]["name"], "boundary_consistency");
        // execute() maps a failed validation run onto a nonzero exit
        let exit = if passed { EXIT_OK } else { EXIT_INTERNAL };
        assert_ne!(exit, EXIT_OK);
    }

    #[test]
    fn quick_validation_passes() {
        let spec = ValidateSpec {
            quick: true,
            cycles: 1000,
            seed: 0,
            replications: 2,
            out: None,
        };
        let (text, passed) = cmd_validate(&spec).unwrap();
        assert!(passed, "{text}");
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["checks"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn infeasible_budget_renders_report() {
        let spec = OptimizeSpec {
            scenario: canonical_service(),
            cost: Some(CostModel::new(1.0, 2.0, 0.5).unwrap()),
            epsilon: 1e-6,
            format: FormatKind::Json,
            out: None,
        };
        match cmd_optimize(&spec) {
            Err(CliError::Infeasible { report, .. }) => {
                let json: serde_json::Value = serde_json::from_str(&report.unwrap()).unwrap();
                assert_eq!(json["feasibility"], "infeasible");
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn sweep_rows_are_ordered_and_complete() {
        let spec = SweepSpec {
            scenario: canonical_service(),
            vary_p: true,
            varied: parse_range("0.1:0.9:0.1").unwrap(),
            fixed: vec![0.1, 0.5, 0.9],
            with_sim: false,
            cycles: 1000,
            seed: 0,
            replications: 2,
            out: None,
        };
        let text = cmd_sweep(&spec).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scenario,p,q,delta_analytic,delta_sim,sim_stderr");
        assert_eq!(lines.len(), 28);
        // ordered by (fixed q, varied p)
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[1], "0.1000000000");
        assert_eq!(first[2], "0.1000000000");
        let last: Vec<&str> = lines[27].split(',').collect();
        assert_eq!(last[1], "0.9000000000");
        assert_eq!(last[2], "0.9000000000");
        assert!(lines[1].ends_with(",,"));
    }
}
