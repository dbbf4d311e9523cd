//! Command-line front end: wires the JSON file formats to every estimator
//! and emits deterministic reports (`result.json`, `losses.csv`,
//! `trajectory.csv`). Exit codes: 0 optimal, 2 model-level infeasibility
//! (result.json still written), 1 usage or I/O errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

/// Comma-separated decimal vector argument (newtype so clap takes it as a
/// single value).
#[derive(Clone)]
struct VecArg(Vec<f64>);

#[derive(Clone)]
struct PolicyArg(Vec<usize>);

#[derive(Clone)]
struct FixedArg(Vec<(usize, f64)>);

use invopt::apps::{self, InstanceKind, PathNetwork, PathwayVariant};
use invopt::classical::{self, ClassicalConfig, LpObjectiveMode};
use invopt::datadriven::{self, DataDrivenConfig, RiskSpec};
use invopt::io::{self, PathsFile, ResultDoc, StreamFile, TrafficFile};
use invopt::model::{
    ConvexForwardModel, Dataset, EstStatus, EstimationResult, LinearForwardModel, MdpModel, NormP,
    ParameterSpace,
};
use invopt::online::{self, OnlineConfig, OnlineMethod};
use invopt::{oracles, solver, Error};

#[derive(Parser)]
#[command(
    name = "invopt",
    version,
    about = "Forward/inverse optimization toolkit",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// Seed for generators (reproducibility).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Verification/feasibility tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; estimators are serial, 1 is the deterministic mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for result.json and CSV reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config file with [defaults] for seed/tol/threads/out.
    #[arg(long, global = true, default_value = "invopt.toml")]
    config: PathBuf,
}

/// Effective settings after merging invopt.toml with the flags.
struct Settings {
    seed: u64,
    tol: f64,
    #[allow(dead_code)]
    threads: usize,
    out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
struct ConfigFile {
    #[serde(default)]
    defaults: ConfigDefaults,
}

#[derive(Debug, Default, Deserialize)]
struct ConfigDefaults {
    seed: Option<u64>,
    tol: Option<f64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
}

impl Settings {
    fn resolve(opts: &GlobalOpts) -> Result<Self, String> {
        let file: ConfigFile = if opts.config.exists() {
            let text = std::fs::read_to_string(&opts.config)
                .map_err(|e| format!("cannot read {}: {e}", opts.config.display()))?;
            toml::from_str(&text)
                .map_err(|e| format!("invalid config {}: {e}", opts.config.display()))?
        } else {
            ConfigFile::default()
        };
        let threads = opts.threads.or(file.defaults.threads).unwrap_or(1);
        if threads == 0 {
            return Err("--threads must be at least 1".into());
        }
        let tol = opts.tol.or(file.defaults.tol).unwrap_or(1e-6);
        if !(tol > 0.0) {
            return Err("--tol must be positive".into());
        }
        Ok(Settings {
            seed: opts.seed.or(file.defaults.seed).unwrap_or(0),
            tol,
            threads,
            out: opts
                .out
                .clone()
                .or(file.defaults.out)
                .unwrap_or_else(|| PathBuf::from(".")),
        })
    }

    fn classical_cfg(&self) -> ClassicalConfig {
        ClassicalConfig {
            verify_tol: self.tol,
            ..ClassicalConfig::default()
        }
    }

    fn datadriven_cfg(&self) -> DataDrivenConfig {
        DataDrivenConfig {
            epsilon: self.tol,
            ..DataDrivenConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem of a model at a given parameter.
    SolveForward(SolveForwardArgs),
    /// Check that input files parse and satisfy their invariants.
    Validate(ValidateArgs),
    /// Classical inverse estimation (observation must become exactly optimal).
    Classical(ClassicalArgs),
    /// Data-driven inverse estimation (loss/risk minimization).
    Datadriven(DatadrivenArgs),
    /// Online parameter learning over an observation stream.
    Online(OnlineArgs),
    /// Application benchmarks and instance generation.
    Bench(BenchArgs),
    /// Brute-force oracles for debugging (not part of the stable interface).
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SolveForwardArgs {
    /// Forward model (model.json schema).
    #[arg(long)]
    model: PathBuf,
    /// Cost parameter as comma-separated decimals; defaults to the model's
    /// stored cost vector.
    #[arg(long, value_parser = parse_vec)]
    theta: Option<VecArg>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    theta_space: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    mdp: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ClassicalMethod {
    LpObj,
    LpJoint,
    ConMatrix,
    ConFeas,
    MilpCut,
    Mdp,
    OptValue,
    Partial,
    Kkt,
}

#[derive(Args)]
struct ClassicalArgs {
    #[arg(long, value_enum)]
    method: ClassicalMethod,
    /// Linear model (most methods) or convex model (kkt).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Parameter space (theta_space.json schema).
    #[arg(long)]
    theta_space: Option<PathBuf>,
    /// Observed decision, comma-separated.
    #[arg(long, value_parser = parse_vec)]
    x_hat: Option<VecArg>,
    /// Optimality certificate for lp-obj: complementary slackness or strong
    /// duality.
    #[arg(long, value_enum, default_value = "sd")]
    dual_mode: DualMode,
    /// Perturbation norm for con-matrix / complementarity norm elsewhere.
    #[arg(long, value_enum, default_value = "one")]
    norm: NormArg,
    /// Constraint row count for con-feas (the space covers the stacked
    /// (matrix, rhs) parameters).
    #[arg(long)]
    rows: Option<usize>,
    /// Target optimal value for opt-value.
    #[arg(long)]
    target: Option<f64>,
    /// Pinned components for partial, e.g. "0=1.5,2=0".
    #[arg(long, value_parser = parse_fixed)]
    fixed: Option<FixedArg>,
    /// MDP file for the mdp method.
    #[arg(long)]
    mdp: Option<PathBuf>,
    /// Observed deterministic policy for the mdp method, comma-separated
    /// action indices.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PolicyArg>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DualMode {
    Cs,
    Sd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum NormArg {
    One,
    Inf,
}

impl From<NormArg> for NormP {
    fn from(n: NormArg) -> NormP {
        match n {
            NormArg::One => NormP::One,
            NormArg::Inf => NormP::Inf,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LossArg {
    Aso,
    Rso,
    Distance,
    Vi,
    Kkt,
}

#[derive(Args)]
struct DatadrivenArgs {
    #[arg(long, value_enum)]
    loss: LossArg,
    /// Risk aggregator: "expected", "cvar:A", or "var:X".
    #[arg(long, default_value = "expected", value_parser = parse_risk)]
    risk: RiskSpec,
    /// Dataset (linear models for aso/rso/distance, convex for vi/kkt).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    theta_space: PathBuf,
    /// Complementarity/selection norm for kkt and var.
    #[arg(long, value_enum, default_value = "one")]
    norm: NormArg,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Ogd,
    Mwu,
    Implicit,
}

#[derive(Args)]
struct OnlineArgs {
    #[arg(long, value_enum)]
    rule: RuleArg,
    /// Stream file: {dataset, space}; observations are visited in order.
    #[arg(long)]
    stream: PathBuf,
    /// Base step size (round t uses eta0/sqrt(t)).
    #[arg(long, default_value_t = 1.0)]
    eta0: f64,
    /// Record the average regret every this many rounds.
    #[arg(long, default_value_t = 50)]
    record_every: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[command(subcommand)]
    which: BenchCommand,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Two-stage pathway-cost estimation plus concordance of every path.
    Pathway {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        paths: PathBuf,
        #[arg(long, value_enum, default_value = "l1")]
        variant: VariantArg,
    },
    /// Congestion-kernel calibration from observed flows.
    Traffic {
        #[arg(long)]
        instance: PathBuf,
        /// Ridge weight on the kernel coefficients.
        #[arg(long, default_value_t = 1e-8)]
        kappa: f64,
        /// Kernel degree override (defaults to the instance's).
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Emit a seeded synthetic instance with planted parameters.
    Generate {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Output file for the instance JSON.
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    L1,
    Squared,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Lp,
    Knapsack,
    Path,
    Traffic,
}

#[derive(Args)]
struct OracleArgs {
    #[command(subcommand)]
    which: OracleCommand,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Enumerate the vertices of a model's feasible region.
    Vertices {
        #[arg(long)]
        model: PathBuf,
    },
    /// Report the delta-net size over a parameter space.
    Net {
        #[arg(long)]
        theta_space: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
}

// ---------------------------------------------------------------------------
// Argument parsers.
// ---------------------------------------------------------------------------

fn parse_vec(s: &str) -> Result<VecArg, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()
        .map(VecArg)
}

fn parse_policy(s: &str) -> Result<PolicyArg, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()
        .map(PolicyArg)
}

fn parse_fixed(s: &str) -> Result<FixedArg, String> {
    s.split(',')
        .map(|pair| {
            let (i, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("'{pair}': expected index=value"))?;
            Ok((
                i.trim().parse().map_err(|e| format!("'{i}': {e}"))?,
                v.trim().parse().map_err(|e| format!("'{v}': {e}"))?,
            ))
        })
        .collect::<Result<_, _>>()
        .map(FixedArg)
}

fn parse_risk(s: &str) -> Result<RiskSpec, String> {
    if s == "expected" {
        return Ok(RiskSpec::Expected);
    }
    if let Some(a) = s.strip_prefix("cvar:") {
        let alpha: f64 = a.parse().map_err(|e| format!("'{a}': {e}"))?;
        return Ok(RiskSpec::Cvar { alpha });
    }
    if let Some(x) = s.strip_prefix("var:") {
        let chi: f64 = x.parse().map_err(|e| format!("'{x}': {e}"))?;
        return Ok(RiskSpec::Var { chi });
    }
    Err(format!(
        "'{s}': expected expected, cvar:ALPHA, or var:CHI"
    ))
}

// ---------------------------------------------------------------------------
// Dispatch.
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let settings = match Settings::resolve(&cli.global) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("invopt: {msg}");
            return ExitCode::from(1);
        }
    };
    match dispatch(&cli.command, &settings) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("invopt: {e}");
            if model_level_infeasible(&e) {
                // result.json is still owed on exit 2.
                let doc = ResultDoc::bare(command_name(&cli.command), EstStatus::Infeasible, vec![], 0.0)
                    .with_diag("error_code", 2.0);
                let _ = io::write_json(&settings.out.join("result.json"), &doc);
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::SolveForward(_) => "solve-forward",
        Command::Validate(_) => "validate",
        Command::Classical(_) => "classical",
        Command::Datadriven(_) => "datadriven",
        Command::Online(_) => "online",
        Command::Bench(_) => "bench",
        Command::Oracle(_) => "oracle",
    }
}

fn model_level_infeasible(e: &Error) -> bool {
    matches!(
        e,
        Error::InverseInfeasible
            | Error::ObservationInfeasible(_)
            | Error::CompletionInfeasible
            | Error::TargetUnattainable { .. }
            | Error::NoCandidateFacet
            | Error::InfeasiblePaths
            | Error::DecompositionInfeasible
            | Error::ForwardUnbounded
            | Error::DegenerateRange
            | Error::EmptyNet
    )
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::InvalidInput(format!("missing required flag --{flag}")))
}

fn write_result(out: &Path, doc: &ResultDoc) -> Result<(), Error> {
    io::write_json(&out.join("result.json"), doc)
}

fn write_losses(out: &Path, losses: &[f64]) -> Result<(), Error> {
    std::fs::write(out.join("losses.csv"), io::losses_csv(losses))?;
    Ok(())
}

fn dispatch(cmd: &Command, st: &Settings) -> Result<(), Error> {
    std::fs::create_dir_all(&st.out)?;
    match cmd {
        Command::SolveForward(a) => run_solve_forward(a, st),
        Command::Validate(a) => run_validate(a, st),
        Command::Classical(a) => run_classical(a, st),
        Command::Datadriven(a) => run_datadriven(a, st),
        Command::Online(a) => run_online(a, st),
        Command::Bench(a) => match &a.which {
            BenchCommand::Pathway {
                network,
                paths,
                variant,
            } => run_bench_pathway(network, paths, *variant, st),
            BenchCommand::Traffic {
                instance,
                kappa,
                degree,
            } => run_bench_traffic(instance, *kappa, *degree, st),
            BenchCommand::Generate {
                kind,
                size,
                noise,
                file,
            } => run_bench_generate(*kind, *size, *noise, file, st),
        },
        Command::Oracle(a) => run_oracle(a, st),
    }
}

fn run_solve_forward(a: &SolveForwardArgs, st: &Settings) -> Result<(), Error> {
    let model: LinearForwardModel = io::read_json(&a.model)?;
    let canonical = invopt::model::canonicalize(&model)?;
    let theta = a.theta.clone().map(|v| v.0).unwrap_or_else(|| model.cost.clone());
    let (value, x) = solver::forward_value(&canonical, &theta)?;
    let mut doc = ResultDoc::bare("solve-forward", EstStatus::Optimal, theta, value);
    for (i, &v) in x.iter().enumerate() {
        doc = doc.with_diag(&format!("x_{i}"), v);
    }
    write_result(&st.out, &doc)
}

fn run_validate(a: &ValidateArgs, st: &Settings) -> Result<(), Error> {
    if a.model.is_none() && a.theta_space.is_none() && a.dataset.is_none() && a.mdp.is_none() {
        return Err(Error::InvalidInput(
            "nothing to validate: pass --model, --theta-space, --dataset, or --mdp".into(),
        ));
    }
    let mut checked = 0.0;
    if let Some(p) = &a.model {
        let model: LinearForwardModel = io::read_json(p)?;
        invopt::model::canonicalize(&model)?;
        checked += 1.0;
    }
    if let Some(p) = &a.theta_space {
        let space: ParameterSpace = io::read_json(p)?;
        space.convex_pieces()?;
        checked += 1.0;
    }
    if let Some(p) = &a.dataset {
        let ds: Dataset<LinearForwardModel> = io::read_json(p)?;
        ds.validate_shape()?;
        for m in &ds.models {
            invopt::model::canonicalize(m)?;
        }
        checked += 1.0;
    }
    if let Some(p) = &a.mdp {
        let mdp: MdpModel = io::read_json(p)?;
        mdp.validate()?;
        checked += 1.0;
    }
    let doc = ResultDoc::bare("validate", EstStatus::Optimal, vec![], 0.0)
        .with_diag("files_checked", checked);
    write_result(&st.out, &doc)
}

fn run_classical(a: &ClassicalArgs, st: &Settings) -> Result<(), Error> {
    let cfg = st.classical_cfg();
    let load_model = || -> Result<LinearForwardModel, Error> {
        io::read_json(need(a.model.as_ref(), "model")?)
    };
    let load_space = || -> Result<ParameterSpace, Error> {
        io::read_json(need(a.theta_space.as_ref(), "theta-space")?)
    };
    let (name, res): (&str, EstimationResult) = match a.method {
        ClassicalMethod::LpObj => {
            let mode = match a.dual_mode {
                DualMode::Cs => LpObjectiveMode::Cs,
                DualMode::Sd => LpObjectiveMode::Sd,
            };
            let res = classical::estimate_lp_objective(
                &load_model()?,
                &need(a.x_hat.clone(), "x-hat")?.0,
                &load_space()?,
                mode,
                &cfg,
            )?;
            ("classical/lp-obj", res)
        }
        ClassicalMethod::LpJoint => (
            "classical/lp-joint",
            classical::estimate_lp_joint(
                &load_model()?,
                &need(a.x_hat.clone(), "x-hat")?.0,
                &load_space()?,
                &cfg,
            )?,
        ),
        ClassicalMethod::ConMatrix => (
            "classical/con-matrix",
            classical::estimate_constraint_matrix(
                &load_model()?,
                &need(a.x_hat.clone(), "x-hat")?.0,
                a.norm.into(),
                &cfg,
            )?,
        ),
        ClassicalMethod::ConFeas => (
            "classical/con-feas",
            classical::estimate_constraints_feasibility(
                need(a.rows, "rows")?,
                &need(a.x_hat.clone(), "x-hat")?.0,
                &load_space()?,
                &cfg,
            )?,
        ),
        ClassicalMethod::MilpCut => (
            "classical/milp-cut",
            classical::estimate_milp_cutting_plane(
                &load_model()?,
                &need(a.x_hat.clone(), "x-hat")?.0,
                &load_space()?,
                &cfg,
            )?,
        ),
        ClassicalMethod::Mdp => {
            let mdp: MdpModel = io::read_json(need(a.mdp.as_ref(), "mdp")?)?;
            let policy = need(a.policy.clone(), "policy")?.0;
            (
                "classical/mdp",
                classical::estimate_mdp_rewards(&mdp, &policy, &cfg)?,
            )
        }
        ClassicalMethod::OptValue => (
            "classical/opt-value",
            classical::estimate_inverse_optimal_value(
                &load_model()?,
                need(a.target, "target")?,
                &load_space()?,
                &cfg,
            )?,
        ),
        ClassicalMethod::Partial => (
            "classical/partial",
            classical::estimate_partial_lp(
                &load_model()?,
                &need(a.fixed.clone(), "fixed")?.0,
                &load_space()?,
                &cfg,
            )?,
        ),
        ClassicalMethod::Kkt => {
            let model: ConvexForwardModel =
                io::read_json(need(a.model.as_ref(), "model")?)?;
            (
                "classical/kkt",
                classical::estimate_convex_objective_kkt(
                    &model,
                    &need(a.x_hat.clone(), "x-hat")?.0,
                    &load_space()?,
                    &cfg,
                )?,
            )
        }
    };
    write_result(&st.out, &ResultDoc::from_estimation(name, &res))
}

fn run_datadriven(a: &DatadrivenArgs, st: &Settings) -> Result<(), Error> {
    let space: ParameterSpace = io::read_json(&a.theta_space)?;
    let cfg = st.datadriven_cfg();
    let (name, mut res): (String, EstimationResult) = match (a.loss, &a.risk) {
        (LossArg::Distance, RiskSpec::Var { chi }) => {
            let ds: Dataset<LinearForwardModel> = io::read_json(&a.dataset)?;
            (
                format!("datadriven/distance/var:{chi}"),
                datadriven::estimate_var(&ds, &space, *chi, a.norm.into(), &cfg)?,
            )
        }
        (_, RiskSpec::Var { .. }) => {
            return Err(Error::UnsupportedCombination(
                "value-at-risk estimation is implemented for the distance loss".into(),
            ))
        }
        (LossArg::Aso, _) => {
            let ds: Dataset<LinearForwardModel> = io::read_json(&a.dataset)?;
            ("datadriven/aso".into(), datadriven::estimate_aso(&ds, &space)?)
        }
        (LossArg::Rso, _) => {
            let ds: Dataset<LinearForwardModel> = io::read_json(&a.dataset)?;
            ("datadriven/rso".into(), datadriven::estimate_rso(&ds, &space)?)
        }
        (LossArg::Distance, _) => {
            let ds: Dataset<LinearForwardModel> = io::read_json(&a.dataset)?;
            (
                "datadriven/distance".into(),
                datadriven::estimate_distance(&ds, &space, &cfg)?,
            )
        }
        (LossArg::Vi, _) => {
            let ds: Dataset<ConvexForwardModel> = io::read_json(&a.dataset)?;
            ("datadriven/vi".into(), datadriven::estimate_vi(&ds, &space)?)
        }
        (LossArg::Kkt, _) => {
            let ds: Dataset<ConvexForwardModel> = io::read_json(&a.dataset)?;
            (
                "datadriven/kkt".into(),
                datadriven::estimate_kkt(&ds, &space, a.norm.into())?,
            )
        }
    };
    // Expected risk is what the estimators minimize; a CVaR request is
    // re-aggregated over the per-observation losses of the returned θ.
    if let RiskSpec::Cvar { alpha } = a.risk {
        if !res.per_obs_loss.is_empty() {
            let cvar = datadriven::aggregate_risk(&res.per_obs_loss, None, &a.risk)?;
            res = res.with_diag("cvar_risk", cvar).with_diag("cvar_alpha", alpha);
        }
    }
    write_losses(&st.out, &res.per_obs_loss)?;
    write_result(&st.out, &ResultDoc::from_estimation(&name, &res))
}

fn run_online(a: &OnlineArgs, st: &Settings) -> Result<(), Error> {
    let stream: StreamFile = io::read_json(&a.stream)?;
    let method = match a.rule {
        RuleArg::Ogd => OnlineMethod::Ogd,
        RuleArg::Mwu => OnlineMethod::Mwu,
        RuleArg::Implicit => OnlineMethod::Implicit,
    };
    let cfg = OnlineConfig {
        eta0: a.eta0,
        record_every: a.record_every,
    };
    let report = online::run_stream(&stream.dataset, &stream.space, method, &cfg)?;
    std::fs::write(st.out.join("trajectory.csv"), io::trajectory_csv(&report))?;
    let final_theta = report.thetas.last().cloned().unwrap_or_default();
    let name = match a.rule {
        RuleArg::Ogd => "online/ogd",
        RuleArg::Mwu => "online/mwu",
        RuleArg::Implicit => "online/implicit",
    };
    let doc = ResultDoc::bare(name, EstStatus::Optimal, final_theta, report.avg_regret)
        .with_diag("rounds", report.losses.len() as f64)
        .with_diag("batch_loss", report.batch_loss)
        .with_diag("mean_online_loss", report.batch_loss + report.avg_regret);
    write_result(&st.out, &doc)
}

fn run_bench_pathway(
    network: &Path,
    paths: &Path,
    variant: VariantArg,
    st: &Settings,
) -> Result<(), Error> {
    let net: PathNetwork = io::read_json(network)?;
    let pf: PathsFile = io::read_json(paths)?;
    let variant = match variant {
        VariantArg::L1 => PathwayVariant::L1,
        VariantArg::Squared => PathwayVariant::Squared,
    };
    let res =
        apps::estimate_pathway_costs(&net, &pf.reference, &pf.survived, &pf.died, variant)?;
    write_losses(&st.out, &res.eps_reference)?;
    // Concordance of every supplied path under the final costs, as an
    // (index, omega) series for external plotting.
    let mut series: Vec<(f64, f64)> = vec![];
    for (i, p) in pf
        .reference
        .iter()
        .chain(&pf.survived)
        .chain(&pf.died)
        .enumerate()
    {
        if let Ok(w) = apps::concordance_omega(&net, &res.theta, p) {
            series.push((i as f64, w));
        }
    }
    std::fs::write(st.out.join("omega.csv"), io::series_csv("omega", &series))?;
    let mut doc = ResultDoc::bare(
        "bench/pathway",
        EstStatus::Optimal,
        res.theta.clone(),
        res.stage1_gap,
    )
    .with_diag("stage1_gap", res.stage1_gap);
    if let Some(s2) = res.stage2_objective {
        doc = doc.with_diag("stage2_objective", s2);
    }
    for (v, d) in res.duals.iter().enumerate() {
        doc = doc.with_diag(&format!("potential_{v}"), *d);
    }
    write_result(&st.out, &doc)
}

fn run_bench_traffic(
    instance: &Path,
    kappa: f64,
    degree: Option<usize>,
    st: &Settings,
) -> Result<(), Error> {
    let tf: TrafficFile = io::read_json(instance)?;
    let mut inst = tf.instance.clone();
    if let Some(d) = degree {
        inst.degree = d;
    }
    let theta = apps::calibrate_traffic(&inst, &tf.observed, kappa)?;
    let eq = apps::solve_equilibrium(&inst, &theta)?;
    let series: Vec<(f64, f64)> = eq
        .iter()
        .enumerate()
        .map(|(k, &f)| (k as f64, f))
        .collect();
    std::fs::write(
        st.out.join("equilibrium.csv"),
        io::series_csv("flow", &series),
    )?;
    let fit = tf
        .observed
        .iter()
        .map(|obs| {
            obs.iter()
                .zip(&eq)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max)
        })
        .fold(0.0_f64, f64::max);
    let doc = ResultDoc::bare("bench/traffic", EstStatus::Optimal, theta, fit)
        .with_diag("kappa", kappa)
        .with_diag("degree", inst.degree as f64)
        .with_diag("flow_misfit_inf", fit);
    write_result(&st.out, &doc)
}

fn run_bench_generate(
    kind: KindArg,
    size: usize,
    noise: f64,
    file: &Path,
    st: &Settings,
) -> Result<(), Error> {
    let kind = match kind {
        KindArg::Lp => InstanceKind::Lp,
        KindArg::Knapsack => InstanceKind::Knapsack,
        KindArg::Path => InstanceKind::Path,
        KindArg::Traffic => InstanceKind::Traffic,
    };
    let inst = apps::generate_instance(kind, st.seed, size, noise)?;
    io::write_json(file, &inst)?;
    let doc = ResultDoc::bare("bench/generate", EstStatus::Optimal, vec![], 0.0)
        .with_diag("seed", st.seed as f64)
        .with_diag("size", size as f64)
        .with_diag("noise", noise);
    write_result(&st.out, &doc)
}

fn run_oracle(a: &OracleArgs, st: &Settings) -> Result<(), Error> {
    match &a.which {
        OracleCommand::Vertices { model } => {
            let m: LinearForwardModel = io::read_json(model)?;
            let cm = invopt::model::canonicalize(&m)?;
            let verts = oracles::enumerate_vertices(&cm.a, &cm.b)?;
            let mut doc =
                ResultDoc::bare("oracle/vertices", EstStatus::Optimal, vec![], verts.len() as f64);
            let mut diag = BTreeMap::new();
            for (i, v) in verts.iter().enumerate() {
                for (k, &c) in v.iter().enumerate() {
                    diag.insert(format!("v{i}_{k}"), io::round_sig(c));
                }
            }
            doc.diagnostics = diag;
            write_result(&st.out, &doc)
        }
        OracleCommand::Net { theta_space, delta } => {
            let space: ParameterSpace = io::read_json(theta_space)?;
            let net = oracles::lattice_net(&space, *delta, 1_000_000)?;
            let doc = ResultDoc::bare("oracle/net", EstStatus::Optimal, vec![], net.len() as f64)
                .with_diag("delta", *delta);
            write_result(&st.out, &doc)
        }
    }
}
