#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use cxcompare::comparison::{
    compute_exponential_comparison, compute_gaussian_comparison, Family, GridSpec, SharpComparison,
};
use cxcompare::extremal::ExtremalDistribution;
use cxcompare::tensorize::{
    default_catalog, random_instance, ridge_catalog, ridge_mc_suite, tensorization_check,
    InstanceKind, TensorizationReport, TensorizeInstance,
};
use serde::Serialize;
use serde_json::json;

mod output;
mod verify;

use output::{significant, Format, OutputArgs, SCHEMA_VERSION};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cxcompare",
    version,
    about = "Sharp convex-order comparison constants and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Gaussian,
    Exponential,
}

impl From<Kind> for Family {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Gaussian => Family::Gaussian,
            Kind::Exponential => Family::Exponential,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the sharp constants as JSON.
    Constants(ConstantsArgs),
    /// Tabulate the stop-loss envelope against the comparator.
    Envelope(EnvelopeArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Tabulate the extremal CDF or draw samples from it.
    Extremal(ExtremalArgs),
    /// Check multivariate domination on discrete trees or rank-one ridge laws.
    Tensorize(TensorizeArgs),
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    kind: Kind,
    /// Significant digits.
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u8).range(3..=12))]
    digits: u8,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EnvelopeArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    kind: Kind,
    /// Comparator scale as a multiple of the sharp constant.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 40.0)]
    umax: f64,
    #[arg(long, default_value_t = 401, value_parser = clap::value_parser!(u64).range(2..=10_000_000))]
    points: u64,
    /// Exit 1 unless the comparator dominates on the dense check grid.
    #[arg(long)]
    assert_dominance: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    kind: Kind,
    /// Comparator scale for the dominance check, as a multiple of the sharp constant.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["cdf", "sample"])))]
struct ExtremalArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    kind: Kind,
    /// Emit the CDF on a uniform grid from the lower support end to --umax.
    #[arg(long)]
    cdf: bool,
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..=10_000_000))]
    points: u64,
    #[arg(long, default_value_t = 6.0)]
    umax: f64,
    /// Draw this many samples.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    sample: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["random", "file", "ridge"])))]
struct TensorizeArgs {
    /// Check this many seeded random instances.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    random: Option<u64>,
    /// Check the instance in a JSON tree document.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Run the rank-one ridge checks.
    #[arg(long)]
    ridge: bool,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=8))]
    depth: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..=1024))]
    dim: u64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

/// Either success or a named failed check.
enum Outcome {
    Ok,
    Failed(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<cxcompare::Error>() {
        Some(cxcompare::Error::Bracket { .. } | cxcompare::Error::Convergence { .. }) => {
            EXIT_CHECK_FAILED
        }
        _ => EXIT_USAGE,
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Constants(args) => constants(args),
        Command::Envelope(args) => envelope(args),
        Command::Verify(args) => verify_cmd(args),
        Command::Extremal(args) => extremal(args),
        Command::Tensorize(args) => tensorize(args),
    }
}

fn require_json(output: &OutputArgs, command: &str) -> Result<()> {
    if output.format_or(Format::Json) != Format::Json {
        bail!(cxcompare::Error::Usage(format!(
            "{command} only writes JSON"
        )));
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        bail!(cxcompare::Error::Usage(format!(
            "--{name} must be positive and finite, got {x}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct GaussianConstants {
    schema_version: u32,
    kind: &'static str,
    a: f64,
    p0: f64,
    z: f64,
    c0: f64,
    c0_squared: f64,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ExponentialConstants {
    schema_version: u32,
    kind: &'static str,
    aE: f64,
    pE: f64,
    wE: f64,
    cE: f64,
}

fn constants(args: ConstantsArgs) -> Result<Outcome> {
    require_json(&args.output, "constants")?;
    let r = |x: f64| significant(x, args.digits as usize);
    match args.kind {
        Kind::Gaussian => {
            let g = compute_gaussian_comparison()?;
            args.output.emit_json(&GaussianConstants {
                schema_version: SCHEMA_VERSION,
                kind: "gaussian",
                a: r(g.sol.knee()),
                p0: r(g.sol.knee_prob()),
                z: r(g.z),
                c0: r(g.c0),
                c0_squared: r(g.c0_squared),
            })?;
        }
        Kind::Exponential => {
            let e = compute_exponential_comparison()?;
            args.output.emit_json(&ExponentialConstants {
                schema_version: SCHEMA_VERSION,
                kind: "exponential",
                aE: r(e.sol.knee()),
                pE: r(e.sol.knee_prob()),
                wE: r(e.w),
                cE: r(e.c),
            })?;
        }
    }
    Ok(Outcome::Ok)
}

fn envelope(args: EnvelopeArgs) -> Result<Outcome> {
    positive("scale", args.scale)?;
    positive("umax", args.umax)?;
    let sc = SharpComparison::compute(args.kind.into())?;
    let c = args.scale * sc.sharp_scale();
    let comp = sc.comparator(c)?;
    let sol = sc.solution();
    let n = args.points as usize;
    let mut grid: Vec<f64> = (0..n)
        .map(|i| args.umax * i as f64 / (n - 1) as f64)
        .collect();
    let tangency = sc.tangency_u(c);
    if tangency > 0.0 && tangency < args.umax && !grid.contains(&tangency) {
        let at = grid.partition_point(|&u| u < tangency);
        grid.insert(at, tangency);
    }
    let rows: Vec<[f64; 4]> = grid
        .iter()
        .map(|&u| {
            let j = sol.stop_loss_envelope(u)?;
            let g = comp.stop_loss(u);
            Ok([u, j, g, g - j])
        })
        .collect::<cxcompare::Result<_>>()?;

    match args.output.format_or(Format::Csv) {
        Format::Csv => args
            .output
            .emit_csv(&["u", "envelope", "comparator", "gap"], rows.iter().map(|r| r.to_vec()))?,
        Format::Json => args.output.emit_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "kind": Family::from(args.kind).name(),
            "scale": c,
            "tangency_u": tangency,
            "rows": rows.iter().map(|r| json!({"u": r[0], "envelope": r[1], "comparator": r[2], "gap": r[3]})).collect::<Vec<_>>(),
        }))?,
    }

    if args.assert_dominance {
        let spec = GridSpec {
            u_max: args.umax.max(GridSpec::MIN_U_MAX),
            ..GridSpec::default()
        };
        let report = sc.dominance_report(c, &spec)?;
        if !report.dominates(1e-12) {
            return Ok(Outcome::Failed(format!(
                "dominance: gap {} at u = {}",
                report.min_gap, report.argmin_u
            )));
        }
    }
    Ok(Outcome::Ok)
}

fn verify_cmd(args: VerifyArgs) -> Result<Outcome> {
    require_json(&args.output, "verify")?;
    positive("scale", args.scale)?;
    let summary = verify::run(args.kind.into(), args.scale, args.n as usize, args.seed)?;
    args.output.emit_json(&summary)?;
    Ok(if summary.passed {
        Outcome::Ok
    } else {
        Outcome::Failed(summary.failed.join(", "))
    })
}

fn extremal(args: ExtremalArgs) -> Result<Outcome> {
    let dist = ExtremalDistribution::for_kind(Family::from(args.kind).envelope_kind())?;
    let format = args.output.format_or(Format::Csv);
    if args.cdf {
        let lo = -dist.solution().knee();
        if !(args.umax > lo) || !args.umax.is_finite() {
            bail!(cxcompare::Error::Usage(format!("--umax must exceed {lo}")));
        }
        let n = args.points as usize;
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let x = lo + (args.umax - lo) * i as f64 / (n - 1) as f64;
                [x, dist.cdf(x)]
            })
            .collect();
        match format {
            Format::Csv => args
                .output
                .emit_csv(&["x", "cdf"], rows.iter().map(|r| r.to_vec()))?,
            Format::Json => args.output.emit_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "kind": Family::from(args.kind).name(),
                "rows": rows.iter().map(|r| json!({"x": r[0], "cdf": r[1]})).collect::<Vec<_>>(),
            }))?,
        }
    } else {
        let n = args.sample.expect("mode group") as usize;
        let samples = dist.sample(n, args.seed);
        match format {
            Format::Csv => args
                .output
                .emit_csv(&["x"], samples.iter().map(|&x| vec![x]))?,
            Format::Json => args.output.emit_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "kind": Family::from(args.kind).name(),
                "seed": args.seed,
                "samples": samples,
            }))?,
        }
    }
    Ok(Outcome::Ok)
}

fn tensorize(args: TensorizeArgs) -> Result<Outcome> {
    require_json(&args.output, "tensorize")?;
    let catalog = default_catalog();
    let n = args.n as usize;

    if let Some(count) = args.random {
        let depth = args.depth as usize;
        let mut failures = Vec::new();
        for index in 0..count {
            let inst = random_instance(args.seed, index, depth, InstanceKind::Dominated)?;
            let report =
                tensorization_check(&inst.tree, &inst.comparators, &catalog, n, args.seed)?;
            if !report.is_asserted() || !report.passed() {
                failures.push(json!({"index": index, "instance": inst, "report": report}));
            }
        }
        let passed = failures.is_empty();
        args.output.emit_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "mode": "random",
            "instances": count,
            "depth": depth,
            "seed": args.seed,
            "catalog": catalog.iter().map(|f| f.name()).collect::<Vec<_>>(),
            "passed": passed,
            "failures": failures,
        }))?;
        return Ok(if passed {
            Outcome::Ok
        } else {
            Outcome::Failed(format!("{} random instances violated", failures.len()))
        });
    }

    if let Some(path) = &args.file {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let inst = TensorizeInstance::from_json(&text)?;
        let report = tensorization_check(&inst.tree, &inst.comparators, &catalog, n, args.seed)?;
        emit_tree_report(&args.output, &report, args.seed)?;
        return Ok(tree_outcome(&report));
    }

    let dim = args.dim as usize;
    let direction = vec![1.0 / (dim as f64).sqrt(); dim];
    let functions = ridge_catalog(&direction)?;
    let report = ridge_mc_suite(&direction, &functions, n, args.seed)?;
    let dist = ExtremalDistribution::for_kind(Family::Gaussian.envelope_kind())?;
    let variance = dist.variance();
    let c0_squared = report.scale * report.scale;
    let passed = report.passed() && variance <= c0_squared;
    args.output.emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "mode": "ridge",
        "passed": passed,
        "second_moment": {"variance": variance, "c0_squared": c0_squared, "holds": variance <= c0_squared},
        "report": report,
    }))?;
    Ok(if passed {
        Outcome::Ok
    } else {
        let mut failed: Vec<String> = report
            .rows
            .iter()
            .filter(|r| !r.holds)
            .map(|r| r.name.clone())
            .collect();
        if variance > c0_squared {
            failed.push("second_moment".into());
        }
        Outcome::Failed(format!("ridge: {}", failed.join(", ")))
    })
}

fn emit_tree_report(output: &OutputArgs, report: &TensorizationReport, seed: u64) -> Result<()> {
    output.emit_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "mode": "file",
        "seed": seed,
        "passed": report.is_asserted() && report.passed(),
        "report": report,
    }))
}

/// A document whose hypothesis fails is reported as a failure naming the node.
fn tree_outcome(report: &TensorizationReport) -> Outcome {
    use cxcompare::tensorize::TensorizationStatus;
    match &report.status {
        TensorizationStatus::Skipped { witness } => Outcome::Failed(format!(
            "conditional domination fails at node {}",
            witness.node
        )),
        TensorizationStatus::Asserted if !report.passed() => {
            let names: Vec<&str> = report
                .rows
                .iter()
                .filter(|r| !r.holds)
                .map(|r| r.function.as_str())
                .collect();
            Outcome::Failed(format!("tensorization: {}", names.join(", ")))
        }
        TensorizationStatus::Asserted => Outcome::Ok,
    }
}
