//! Command-line front end.
//!
//! Every analysis is a subcommand with machine-readable output. Exit codes:
//! 0 success, 1 analysis negative (rank deficient, no return found, steering
//! failed), 2 usage or configuration error, 3 runtime error (guard violation,
//! step limit, sampler exhaustion).

use crate::control::{ControlSignal, ControlSystem};
use crate::error::{Error, Result};
use crate::integrate::{conservation_report, integrate, IntegratorOptions};
use crate::larc::{larc_rank, larc_scan};
use crate::poisson::State;
use crate::sample::{rejection_sample, stream};
use crate::stability::{nonwandering_probe, recurrence_probe};
use crate::steer::{steer, verify_plan, SteerOptions};
use crate::systems::{self, SystemSpec};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "redctl",
    version,
    about = "Controllability toolkit for reduced Poisson control systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a system (optionally under a control signal) and emit the trajectory
    Simulate(SimulateArgs),
    /// Structural diagnostics
    #[command(subcommand)]
    Check(CheckCommand),
    /// Lie algebra rank condition at a point or over sampled states
    Larc(LarcArgs),
    /// Recurrence probe of the uncontrolled flow
    Recur(RecurArgs),
    /// Nonwandering probe around a point
    Nonwander(NonwanderArgs),
    /// Properness profile of the system's conserved map
    Proper(ProperArgs),
    /// Plan a bounded control between two states and verify it by replay
    Steer(SteerArgs),
    /// Combined rank + recurrence summary (evidence, not proof)
    Verdict(VerdictArgs),
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Antisymmetry, Jacobi, and Casimir residuals over sampled states
    Structure(StructureArgs),
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// Built-in system: vortex, threewave, or bodies
    #[arg(long)]
    system: Option<String>,
    /// JSON parameter file (overrides --system)
    #[arg(long)]
    params: Option<PathBuf>,
}

impl SystemArgs {
    fn spec(&self) -> Result<SystemSpec> {
        if let Some(path) = &self.params {
            let text = std::fs::read_to_string(path)?;
            return Ok(serde_json::from_str(&text)?);
        }
        match &self.system {
            Some(name) => Ok(SystemSpec::by_name(name)),
            None => Err(Error::InvalidParams("pass --system or --params".into())),
        }
    }

    fn build(&self) -> Result<ControlSystem> {
        self.spec()?.build()
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutputArgs {
    fn emit(&self, content: &str) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, content)?,
            None => print!("{content}"),
        }
        Ok(())
    }
}

#[derive(Args)]
struct TolArgs {
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    abs_tol: f64,
}

impl TolArgs {
    fn options(&self) -> IntegratorOptions {
        IntegratorOptions::with_tols(self.rel_tol, self.abs_tol)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Initial state, comma-separated
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Control signal JSON file
    #[arg(long)]
    signal: Option<PathBuf>,
    /// Integration span "t0,t1"
    #[arg(long)]
    span: String,
    #[command(flatten)]
    tols: TolArgs,
    /// Output format: csv or json
    #[arg(long, default_value = "csv")]
    format: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct StructureArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LarcArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Evaluate at this point; omit to scan sampled states
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = crate::larc::DEFAULT_MAX_DEPTH)]
    depth: usize,
    #[arg(long, default_value_t = crate::larc::DEFAULT_RANK_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RecurArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long, default_value_t = 0.2)]
    radius: f64,
    /// Return window "T_min,T_max"
    #[arg(long, default_value = "1,1000")]
    span: String,
    #[command(flatten)]
    tols: TolArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct NonwanderArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long, default_value_t = 0.2)]
    radius: f64,
    /// Return window "T_min,T_max"
    #[arg(long, default_value = "1,1000")]
    span: String,
    #[arg(long, default_value_t = 8)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tols: TolArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ProperArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Sphere radii, comma-separated and increasing
    #[arg(long, default_value = "1,2,4,8")]
    radii: String,
    #[arg(long, default_value_t = 128)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SteerArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Goal state, comma-separated
    #[arg(long = "xF", allow_hyphen_values = true)]
    x_goal: String,
    #[arg(long, default_value_t = 1e-2)]
    goal_tol: f64,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, default_value_t = 8)]
    samples: usize,
    #[arg(long, default_value_t = 0.1)]
    goal_bias: f64,
    #[arg(long, default_value_t = 20_000)]
    max_nodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerdictArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = crate::larc::DEFAULT_MAX_DEPTH)]
    depth: usize,
    #[arg(long, default_value_t = crate::larc::DEFAULT_RANK_TOL)]
    tol: f64,
    /// Number of recurrence probes from sampled states
    #[arg(long, default_value_t = 5)]
    probes: usize,
    #[arg(long, default_value_t = 0.2)]
    radius: f64,
    /// Return window "T_min,T_max"
    #[arg(long, default_value = "1,1000")]
    span: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format: text or json
    #[arg(long, default_value = "text")]
    format: String,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParams(format!("cannot parse '{s}' as a number")))
        })
        .collect()
}

fn parse_state(text: &str, dim: usize) -> Result<State> {
    let v = parse_vector(text)?;
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    Ok(DVector::from_vec(v))
}

fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let v = parse_vector(text)?;
    if v.len() != 2 {
        return Err(Error::InvalidParams(format!("expected 'a,b', got '{text}'")));
    }
    Ok((v[0], v[1]))
}

fn json_line(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Run the CLI on the given argument list; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            error_code(&err)
        }
    }
}

fn error_code(err: &Error) -> i32 {
    match err {
        Error::SteerFailed { .. } => 1,
        Error::DimensionMismatch { .. }
        | Error::ControlOutOfBounds { .. }
        | Error::SignalOutOfSpan { .. }
        | Error::InvalidSignal(_)
        | Error::InvalidParams(_)
        | Error::Json(_) => 2,
        Error::GuardViolation { .. }
        | Error::StepLimitExceeded { .. }
        | Error::StepUnderflow { .. }
        | Error::SamplerExhausted { .. }
        | Error::Io(_) => 3,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Check(CheckCommand::Structure(args)) => cmd_check_structure(args),
        Command::Larc(args) => cmd_larc(args),
        Command::Recur(args) => cmd_recur(args),
        Command::Nonwander(args) => cmd_nonwander(args),
        Command::Proper(args) => cmd_proper(args),
        Command::Steer(args) => cmd_steer(args),
        Command::Verdict(args) => cmd_verdict(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let sys = args.system.build()?;
    let x0 = parse_state(&args.x0, sys.dim())?;
    let span = parse_pair(&args.span)?;
    let signal = match &args.signal {
        Some(path) => Some(ControlSignal::from_json(&std::fs::read_to_string(path)?)?),
        None => None,
    };
    let traj = integrate(&sys, &x0, signal.as_ref(), span, &args.tols.options())?;
    match args.format.as_str() {
        "csv" => {
            let mut buf = Vec::new();
            traj.write_csv(sys.coord_names(), &mut buf)?;
            args.output.emit(&String::from_utf8(buf).expect("utf8 csv"))?;
        }
        "json" => {
            let mut value = traj.to_json();
            if let Some(obj) = value.as_object_mut() {
                obj.insert(
                    "conservation".into(),
                    serde_json::to_value(conservation_report(&traj, sys.integrals()))?,
                );
            }
            args.output.emit(&json_line(&value))?;
        }
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown format '{other}' (expected csv or json)"
            )))
        }
    }
    Ok(0)
}

const JACOBI_TOL: f64 = 1e-6;
const CASIMIR_TOL: f64 = 1e-10;

fn cmd_check_structure(args: StructureArgs) -> Result<i32> {
    let sys = args.system.build()?;
    let ps = sys.structure().ok_or_else(|| {
        Error::InvalidParams(format!("system {} carries no Poisson structure", sys.name()))
    })?;
    let mut antisymmetry_max: f64 = 0.0;
    let mut jacobi_max: f64 = 0.0;
    let mut casimir_max = vec![0.0_f64; sys.casimirs().len()];
    let mut casimir_ok = true;
    let mut kernel_dims: Vec<usize> = Vec::new();

    for k in 0..args.samples {
        let mut rng = stream(args.seed, k as u64);
        let x = sys.sample_state(&mut rng)?;
        let j = ps.matrix_at(&x)?;
        let asym = (&j + j.transpose()).amax();
        antisymmetry_max = antisymmetry_max.max(asym);
        jacobi_max = jacobi_max.max(ps.jacobi_residual(&x)?);
        let j_norm = j.norm();
        for (i, c) in sys.casimirs().iter().enumerate() {
            let r = ps.casimir_residual(c, &x)?;
            casimir_max[i] = casimir_max[i].max(r);
            if r > CASIMIR_TOL * (1.0 + j_norm) {
                casimir_ok = false;
            }
        }
        if k < 16 {
            kernel_dims.push(ps.kernel_basis(&x, 1e-8)?.len());
        }
    }

    let pass = antisymmetry_max == 0.0 && jacobi_max < JACOBI_TOL && casimir_ok;
    let report = serde_json::json!({
        "system": sys.name(),
        "samples": args.samples,
        "seed": args.seed,
        "antisymmetry_max": antisymmetry_max,
        "jacobi_max": jacobi_max,
        "jacobi_tol": JACOBI_TOL,
        "casimirs": sys.casimirs().iter().zip(&casimir_max).map(|(c, r)| {
            serde_json::json!({"label": c.label(), "max_residual": r})
        }).collect::<Vec<_>>(),
        "kernel_dims": kernel_dims,
        "pass": pass,
    });
    args.output.emit(&json_line(&report))?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_larc(args: LarcArgs) -> Result<i32> {
    let sys = args.system.build()?;
    match &args.point {
        Some(point) => {
            let x = parse_state(point, sys.dim())?;
            let report = larc_rank(&sys, &x, args.depth, args.tol)?;
            let full = report.is_full(sys.dim());
            args.output.emit(&json_line(&report.to_json()))?;
            Ok(if full { 0 } else { 1 })
        }
        None => {
            let scan = larc_scan(&sys, None, args.samples, args.depth, args.tol, args.seed)?;
            let full = scan.is_full();
            args.output.emit(&json_line(&scan.to_json()))?;
            Ok(if full { 0 } else { 1 })
        }
    }
}

fn cmd_recur(args: RecurArgs) -> Result<i32> {
    let sys = args.system.build()?;
    let x0 = parse_state(&args.x0, sys.dim())?;
    let (t_min, t_max) = parse_pair(&args.span)?;
    let result = recurrence_probe(&sys, &x0, args.radius, t_min, t_max, &args.tols.options())?;
    let report = serde_json::json!({
        "system": sys.name(),
        "radius": args.radius,
        "t_min": t_min,
        "t_max": t_max,
        "found": result.is_some(),
        "t_star": result.as_ref().map(|r| r.t_star),
        "dist": result.as_ref().map(|r| r.dist),
    });
    args.output.emit(&json_line(&report))?;
    Ok(if result.is_some() { 0 } else { 1 })
}

fn cmd_nonwander(args: NonwanderArgs) -> Result<i32> {
    let sys = args.system.build()?;
    let x0 = parse_state(&args.x0, sys.dim())?;
    let (t_min, t_max) = parse_pair(&args.span)?;
    let result = nonwandering_probe(
        &sys,
        &x0,
        args.radius,
        t_min,
        t_max,
        args.samples,
        args.seed,
        &args.tols.options(),
    )?;
    let report = serde_json::json!({
        "system": sys.name(),
        "radius": args.radius,
        "t_min": t_min,
        "t_max": t_max,
        "samples": args.samples,
        "seed": args.seed,
        "found": result.is_some(),
        "evidence": result.as_ref().map(|e| e.to_json()),
    });
    args.output.emit(&json_line(&report))?;
    Ok(if result.is_some() { 0 } else { 1 })
}

fn cmd_proper(args: ProperArgs) -> Result<i32> {
    let spec = args.system.spec()?;
    let radii = parse_vector(&args.radii)?;
    let profile = systems::properness_profile(&spec, &radii, args.samples, args.seed)?;
    args.output.emit(&json_line(&serde_json::to_value(&profile)?))?;
    Ok(0)
}

fn cmd_steer(args: SteerArgs) -> Result<i32> {
    let sys = args.system.build()?;
    let x0 = parse_state(&args.x0, sys.dim())?;
    let goal = parse_state(&args.x_goal, sys.dim())?;
    let opts = SteerOptions {
        goal_tol: args.goal_tol,
        dt_expand: args.dt,
        n_control_samples: args.samples,
        goal_bias: args.goal_bias,
        max_nodes: args.max_nodes,
        seed: args.seed,
        metric_weights: None,
    };
    match steer(&sys, &x0, &goal, &opts) {
        Ok(result) => {
            let replay = verify_plan(
                &sys,
                &x0,
                &result.signal,
                &goal,
                2.0 * opts.goal_tol,
                &IntegratorOptions::with_tols(1e-10, 1e-12),
            )?;
            let mut value = result.to_json();
            if let Some(obj) = value.as_object_mut() {
                obj.insert("replay".into(), serde_json::to_value(&replay)?);
            }
            args.output.emit(&json_line(&value))?;
            Ok(if replay.ok { 0 } else { 1 })
        }
        Err(Error::SteerFailed { best_error, nodes_expanded }) => {
            let report = serde_json::json!({
                "failed": true,
                "best_error": best_error,
                "nodes_expanded": nodes_expanded,
            });
            args.output.emit(&json_line(&report))?;
            Ok(1)
        }
        Err(other) => Err(other),
    }
}

fn cmd_verdict(args: VerdictArgs) -> Result<i32> {
    let sys = args.system.build()?;
    let (t_min, t_max) = parse_pair(&args.span)?;
    let scan = larc_scan(&sys, None, args.samples, args.depth, args.tol, args.seed)?;

    let mut t_stars = Vec::new();
    let mut returned = 0usize;
    let opts = IntegratorOptions::default();
    for k in 0..args.probes {
        let mut rng = stream(args.seed ^ 0x5eed_0001, k as u64);
        let sampler = sys.sample_region().ok_or_else(|| {
            Error::InvalidParams(format!("system {} has no default sampling box", sys.name()))
        })?;
        let x0 = rejection_sample(&mut rng, 10_000, |r| sampler.sample(r), |x| sys.guard(x))?;
        match recurrence_probe(&sys, &x0, args.radius, t_min, t_max, &opts) {
            Ok(Some(rec)) => {
                returned += 1;
                t_stars.push(Some(rec.t_star));
            }
            Ok(None) => t_stars.push(None),
            // A probe that leaves the guarded domain is inconclusive, not fatal.
            Err(Error::GuardViolation { .. }) | Err(Error::StepUnderflow { .. }) => t_stars.push(None),
            Err(other) => return Err(other),
        }
    }

    let larc_full = scan.is_full();
    let all_returned = returned == args.probes;
    let pass = larc_full && all_returned;

    match args.format.as_str() {
        "text" => {
            let mut text = String::new();
            text.push_str(&format!(
                "LARC: sampled rank {} (min rank {}/{} over {} states, depth {})\n",
                if larc_full { "full" } else { "DEFICIENT" },
                scan.min_rank,
                scan.dim,
                args.samples,
                args.depth
            ));
            text.push_str(&format!(
                "WPPS evidence: {}/{} probes recurrent (radius {}, window ({}, {}])\n",
                returned, args.probes, args.radius, t_min, t_max
            ));
            text.push_str(&format!(
                "verdict: {} -- sampled evidence, not a proof\n",
                if pass {
                    "LARC holds on samples and the drift shows recurrence"
                } else {
                    "hypotheses NOT confirmed on samples"
                }
            ));
            args.output.emit(&text)?;
        }
        "json" => {
            let report = serde_json::json!({
                "system": sys.name(),
                "larc": {
                    "min_rank": scan.min_rank,
                    "dim": scan.dim,
                    "samples": args.samples,
                    "depth": args.depth,
                    "full": larc_full,
                },
                "recurrence": {
                    "probes": args.probes,
                    "returned": returned,
                    "radius": args.radius,
                    "t_min": t_min,
                    "t_max": t_max,
                    "t_stars": t_stars,
                },
                "pass": pass,
                "note": "sampled evidence, not a proof",
            });
            args.output.emit(&json_line(&report))?;
        }
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown format '{other}' (expected text or json)"
            )))
        }
    }
    Ok(if pass { 0 } else { 1 })
}
