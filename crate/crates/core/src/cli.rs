//! The `scheme-lab` command-line front end.
//!
//! Exit status is 0 on success, 2 on a usage error and 1 when a computation
//! fails (infeasible kernel, malformed grid, non-convergence) or a `verify`
//! check fails. Every float is printed with 9 significant digits.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{optimal_rule_iid, Regime};
use crate::copulas::{CostKernel, FgmParameter, GridDensity};
use crate::error::Error;
use crate::model::{evaluate_scheme, Budget, RewardRule};
use crate::montecarlo::{simulate, OutcomeCounts, DEFAULT_DRAWS, DEFAULT_SEED};
use crate::optimizer::{
    optimize_fgm, optimize_rule_fgm_fixed, sweep, SearchConfig, SweepMode, SweepRow,
};
use crate::output::{fmt_sig, round_sig, write_atomic};
use crate::verify::{run_suite, Suite};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SCHEME_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "scheme-lab",
    version,
    about = "Two-period budget-constrained incentive solver"
)]
#[command(args_override_self = true)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a reward rule under a cost kernel.
    Eval(EvalArgs),
    /// Closed-form optimal rule under independent costs.
    SolveIid(SolveIidArgs),
    /// Jointly optimise the rule and the FGM parameter.
    SolveFgm(SolveFgmArgs),
    /// Optimise over a range of budgets and emit a table.
    Sweep(SweepArgs),
    /// Monte Carlo estimate of expected performance.
    Simulate(SimulateArgs),
    /// Run the built-in oracle checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelName {
    Iid,
    Fgm,
    Sufficient,
    Sustained,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ModeName {
    Iid,
    Fgm,
    FgmThetaZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    All,
    Iid,
    Fgm,
    Schemes,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// File of `key=value` lines supplying defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value = "iid")]
    pub kernel: KernelName,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Headerless CSV of cell masses for `--kernel grid`.
    #[arg(long)]
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub rule: RuleArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SolveIidArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SolveFgmArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    /// Fix θ instead of optimising it.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "iid")]
    pub mode: ModeName,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub w_min: f64,
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    pub w_max: f64,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub step: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub rule: RuleArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteName,
    #[command(flatten)]
    pub common: Common,
}

/// A failure with its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter(_) | Error::Domain(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parse `argv`, run the command and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(f) => return report(f),
    };
    let cfg = match RunConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(f) => return report(f),
    };
    match pool.install(|| execute(&cfg.command)) {
        Ok(code) => code,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> i32 {
    eprintln!("error: {}", f.message);
    f.code
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Failure::usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })
}

/// Splice `--config` file entries in right after the subcommand so that
/// explicit flags, which come later, take precedence.
fn expand_config(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(pos) = argv
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))
    else {
        return Ok(argv);
    };
    let path = match argv[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => argv
            .get(pos + 1)
            .map(PathBuf::from)
            .ok_or_else(|| Failure::usage("--config needs a path"))?,
    };
    if argv.len() < 2 {
        return Ok(argv);
    }
    let extra = config_flags(&path)?;
    let mut out = Vec::with_capacity(argv.len() + extra.len());
    out.extend_from_slice(&argv[..2]);
    out.extend(extra);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

fn config_flags(path: &Path) -> CliResult<Vec<OsString>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut flags = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::usage(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" {
            return Err(Failure::usage(
                "config files cannot include other config files",
            ));
        }
        flags.push(OsString::from(format!("--{key}")));
        flags.push(OsString::from(value.trim()));
    }
    Ok(flags)
}

fn execute(cmd: &Command) -> CliResult<i32> {
    match cmd {
        Command::Eval(a) => cmd_eval(a),
        Command::SolveIid(a) => cmd_solve_iid(a),
        Command::SolveFgm(a) => cmd_solve_fgm(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn required(v: Option<f64>, name: &str) -> CliResult<f64> {
    v.ok_or_else(|| Failure::usage(format!("--{name} is required")))
}

fn build_kernel(k: &KernelArgs, w: f64) -> CliResult<CostKernel> {
    if k.theta.is_some() && k.kernel != KernelName::Fgm {
        return Err(Failure::usage("--theta applies only to --kernel fgm"));
    }
    if k.grid.is_some() && k.kernel != KernelName::Grid {
        return Err(Failure::usage("--grid applies only to --kernel grid"));
    }
    Ok(match k.kernel {
        KernelName::Iid => CostKernel::Iid,
        KernelName::Fgm => CostKernel::fgm(required(k.theta, "theta")?)?,
        KernelName::Sufficient => CostKernel::purely_sufficient(w)?,
        KernelName::Sustained => CostKernel::purely_sustained(w)?,
        KernelName::Grid => {
            let path = k
                .grid
                .as_ref()
                .ok_or_else(|| Failure::usage("--grid is required"))?;
            CostKernel::Grid(GridDensity::load_csv(path)?)
        }
    })
}

fn build_rule(r: &RuleArgs) -> CliResult<RewardRule> {
    let w = required(r.w, "w")?;
    let rule = RewardRule::new(
        required(r.x, "x")?,
        required(r.y, "y")?,
        required(r.z, "z")?,
        Budget::new(w)?,
    )?;
    Ok(rule)
}

fn emit(common: &Common, text: String) -> CliResult<i32> {
    match &common.out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("serialisable output");
    s.push('\n');
    s
}

/// Render a header row and one or more numeric rows.
fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct EvalOut {
    kernel: String,
    w: f64,
    x: f64,
    y: f64,
    z: f64,
    performance: f64,
    period1_mass: f64,
    period2_mass: f64,
}

fn cmd_eval(a: &EvalArgs) -> CliResult<i32> {
    let rule = build_rule(&a.rule)?;
    let kernel = build_kernel(&a.kernel, rule.w())?;
    let ev = evaluate_scheme(&kernel, &rule)?;
    let out = EvalOut {
        kernel: kernel.description(),
        w: round_sig(rule.w()),
        x: round_sig(rule.x()),
        y: round_sig(rule.y()),
        z: round_sig(rule.z()),
        performance: round_sig(ev.performance),
        period1_mass: round_sig(ev.period1_mass),
        period2_mass: round_sig(ev.period2_mass),
    };
    let text = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out),
        Format::Csv => csv_table(
            &[
                "w",
                "x",
                "y",
                "z",
                "performance",
                "period1_mass",
                "period2_mass",
            ],
            &[[
                rule.w(),
                rule.x(),
                rule.y(),
                rule.z(),
                ev.performance,
                ev.period1_mass,
                ev.period2_mass,
            ]
            .iter()
            .map(|&v| fmt_sig(v))
            .collect()],
        ),
    };
    emit(&a.common, text)
}

#[derive(Serialize)]
struct SolveIidOut {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
    performance: f64,
    regime: Regime,
    any_z_at_least_one: bool,
    alternatives: Vec<[f64; 3]>,
}

fn cmd_solve_iid(a: &SolveIidArgs) -> CliResult<i32> {
    let w = required(a.w, "w")?;
    let opt = optimal_rule_iid(Budget::new(w)?)?;
    let rule = opt.canonical();
    let text = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&SolveIidOut {
            w: round_sig(w),
            x: round_sig(rule.x()),
            y: round_sig(rule.y()),
            z: round_sig(rule.z()),
            performance: round_sig(opt.performance),
            regime: opt.regime,
            any_z_at_least_one: opt.any_z_at_least_one,
            alternatives: opt.rules[1..]
                .iter()
                .map(|r| [round_sig(r.x()), round_sig(r.y()), round_sig(r.z())])
                .collect(),
        }),
        Format::Csv => csv_table(
            &["w", "x", "y", "z", "performance"],
            &opt.rules
                .iter()
                .map(|r| {
                    [w, r.x(), r.y(), r.z(), opt.performance]
                        .iter()
                        .map(|&v| fmt_sig(v))
                        .collect()
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(&a.common, text)
}

#[derive(Serialize)]
struct SolveFgmOut {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
    theta: f64,
    performance: f64,
    evaluations: usize,
    converged: bool,
}

fn cmd_solve_fgm(a: &SolveFgmArgs) -> CliResult<i32> {
    let w = required(a.w, "w")?;
    let config = SearchConfig::default();
    let r = match a.theta {
        Some(t) => optimize_rule_fgm_fixed(w, FgmParameter::new(t)?, &config)?,
        None => optimize_fgm(w, &config)?,
    };
    let theta = r.theta.map(FgmParameter::value).unwrap_or(0.0);
    let text = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&SolveFgmOut {
            w: round_sig(w),
            x: round_sig(r.rule.x()),
            y: round_sig(r.rule.y()),
            z: round_sig(r.rule.z()),
            theta: round_sig(theta),
            performance: round_sig(r.performance),
            evaluations: r.evaluations,
            converged: r.converged,
        }),
        Format::Csv => csv_table(
            &["w", "x", "y", "z", "theta", "performance"],
            &[
                [w, r.rule.x(), r.rule.y(), r.rule.z(), theta, r.performance]
                    .iter()
                    .map(|&v| fmt_sig(v))
                    .collect(),
            ],
        ),
    };
    emit(&a.common, text)
}

#[derive(Serialize)]
struct SweepRowOut {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
    theta: Option<f64>,
    performance: f64,
}

#[derive(Serialize)]
struct SweepOut {
    mode: SweepMode,
    rows: Vec<SweepRowOut>,
}

/// The sweep table in its fixed CSV schema.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("w,x,y,z,theta,performance\n");
    for r in rows {
        let theta = r.theta.map(fmt_sig).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_sig(r.w),
            fmt_sig(r.x),
            fmt_sig(r.y),
            fmt_sig(r.z),
            theta,
            fmt_sig(r.performance)
        );
    }
    s
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<i32> {
    let mode = match a.mode {
        ModeName::Iid => SweepMode::Iid,
        ModeName::Fgm => SweepMode::Fgm,
        ModeName::FgmThetaZero => SweepMode::FgmThetaZero,
    };
    let rows = sweep(a.w_min, a.w_max, a.step, mode, &SearchConfig::default())?;
    let text = match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => sweep_csv(&rows),
        Format::Json => to_json(&SweepOut {
            mode,
            rows: rows
                .iter()
                .map(|r| SweepRowOut {
                    w: round_sig(r.w),
                    x: round_sig(r.x),
                    y: round_sig(r.y),
                    z: round_sig(r.z),
                    theta: r.theta.map(round_sig),
                    performance: round_sig(r.performance),
                })
                .collect(),
        }),
    };
    emit(&a.common, text)
}

#[derive(Serialize)]
struct SimulateOut {
    estimate: f64,
    stderr: f64,
    n: usize,
    seed: u64,
    counts: OutcomeCounts,
    kernel: String,
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<i32> {
    let rule = build_rule(&a.rule)?;
    let kernel = build_kernel(&a.kernel, rule.w())?;
    let r = simulate(&kernel, &rule, a.n, a.seed)?;
    let text = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&SimulateOut {
            estimate: round_sig(r.estimate),
            stderr: round_sig(r.stderr),
            n: r.n,
            seed: r.seed,
            counts: r.counts,
            kernel: kernel.description(),
            w: round_sig(rule.w()),
            x: round_sig(rule.x()),
            y: round_sig(rule.y()),
            z: round_sig(rule.z()),
        }),
        Format::Csv => csv_table(
            &[
                "estimate",
                "stderr",
                "n",
                "seed",
                "neither",
                "period1_only",
                "period2_only",
                "both",
            ],
            &[vec![
                fmt_sig(r.estimate),
                fmt_sig(r.stderr),
                r.n.to_string(),
                r.seed.to_string(),
                r.counts.neither.to_string(),
                r.counts.period1_only.to_string(),
                r.counts.period2_only.to_string(),
                r.counts.both.to_string(),
            ]],
        ),
    };
    emit(&a.common, text)
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<i32> {
    let suite = match a.suite {
        SuiteName::All => Suite::All,
        SuiteName::Iid => Suite::Iid,
        SuiteName::Fgm => Suite::Fgm,
        SuiteName::Schemes => Suite::Schemes,
    };
    let outcomes = run_suite(suite)?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let text = match a.common.format {
        Some(Format::Json) => to_json(&serde_json::json!({
            "passed": failed == 0,
            "checks": outcomes,
        })),
        Some(Format::Csv) => {
            let mut s = String::from("check,passed,detail\n");
            for o in &outcomes {
                let _ = writeln!(s, "\"{}\",{},\"{}\"", o.name, o.passed, o.detail);
            }
            s
        }
        None => {
            let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
            let mut s = String::new();
            for o in &outcomes {
                let tag = if o.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "{tag}  {:<width$}  {}", o.name, o.detail);
            }
            let _ = writeln!(s, "{} checks, {} failed", outcomes.len(), failed);
            s
        }
    };
    emit(&a.common, text)?;
    Ok(if failed == 0 { 0 } else { 1 })
}
