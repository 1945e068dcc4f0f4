//! The `divlab` command line: subcommands build a [`Scenario`], the runner
//! dispatches it and writes the JSON report and CSV plot data.
//!
//! Parameter precedence is command-line flags, then the `--config` JSON file,
//! then the operation's defaults. A config file may hold `seed`, `out`,
//! `tolerances`, a `params` object applied to every operation and one object
//! per operation id (or recipe name) applied to that one only.

pub mod ops;
pub mod params;
pub mod recipes;
pub mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::report::{Check, Environment, VerificationReport};
use crate::{Error, Result};
pub use scenario::{is_usage_error, run_scenario, Outcome, RunContext, Scenario, DEFAULT_SEED, OPERATIONS};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "divlab", version, about = "Verification laboratory for divergence-free and divergence-measure fields")]
pub struct Cli {
    /// Output directory for the JSON report and CSV files; without it the report goes to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for Monte Carlo probes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// Registry name, e.g. `capillary:R=1` or `twisting:levels=8`.
    #[arg(long)]
    pub field: Option<String>,
    /// Extra operation parameter, KEY=VALUE (value read as JSON when possible).
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = params::parse_assignment)]
    pub extra: Vec<(String, Value)>,
    /// Tolerance override, NAME=VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = params::parse_assignment)]
    pub tol: Vec<(String, Value)>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify a cylindrical potential on a (rho, z) grid.
    Certify(Op<CertifyArgs>),
    /// Flow-tube volume identity for X = eta + eps e_n.
    FlowTube(Op<FlowTubeArgs>),
    /// Strip identity for a planar field.
    StripIdentity(Op<StripArgs>),
    /// Weak normal trace estimates at an interface point.
    Trace(Op<TraceArgs>),
    /// Density of a deviation set at an interface point.
    Density(Op<DensityArgs>),
    /// One-sided approximate limit test.
    Aplim(Op<AplimArgs>),
    /// Blow-up consistency series and weak-star averages.
    Blowup(Op<BlowupArgs>),
    /// Density of the N_alpha set of a normalized field.
    Nalpha(Op<NalphaArgs>),
    /// Demonstrations.
    #[command(subcommand)]
    Demo(Demo),
    /// List the built-in recipes.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Run a built-in recipe by name.
    Run {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
pub enum Demo {
    /// Blow-up of the saturated separable ODE.
    Separable(Op<SeparableArgs>),
}

/// Operation-specific flags plus the common ones.
#[derive(Debug, Args)]
pub struct Op<T: Args> {
    #[command(flatten)]
    pub args: T,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    /// Constant in the third condition.
    #[arg(long)]
    pub c: Option<f64>,
    /// `certified` or `violated`.
    #[arg(long)]
    pub expect: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct FlowTubeArgs {
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// eps as a multiple of the field's sup bound.
    #[arg(long)]
    pub eps_factor: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a_lo: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a_hi: Option<Vec<f64>>,
    #[arg(long)]
    pub h0: Option<f64>,
    /// Seeds per axis of the top plate.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Slope c of a linear gauge phi(t) = c t.
    #[arg(long)]
    pub gauge: Option<f64>,
    /// Number of trajectories written to CSV.
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Repeat with twice the seeds per axis.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub refine: Option<bool>,
}

#[derive(Debug, Args, Serialize)]
pub struct StripArgs {
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// `linear:c=..` or `quadratic:c=..`, enables the edge audit.
    #[arg(long)]
    pub phi: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProbeArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// `line`, `circle:R=..:cx=..:cy=..` or `hyperplane:px=..:py=..:nx=..:ny=..`.
    #[arg(long, allow_hyphen_values = true)]
    pub interface: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub k_lo: Option<i32>,
    #[arg(long)]
    pub k_hi: Option<i32>,
}

#[derive(Debug, Args, Serialize)]
pub struct TraceArgs {
    /// `ball-average`, `curvilinear`, `sphere-flux`, `pairing` or `all`.
    #[arg(long)]
    pub method: Option<String>,
    /// Region for boundary pairings: `unit-square`, `rect:..` or `disk:..`.
    #[arg(long)]
    pub omega: Option<String>,
    /// Expected trace value.
    #[arg(long, allow_hyphen_values = true)]
    pub expected: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub probe: ProbeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub max_theta: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub probe: ProbeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AplimArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// `confirmed`, `rejected` or `inconclusive`.
    #[arg(long)]
    pub expect: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub probe: ProbeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BlowupArgs {
    /// Known trace value; estimated by ball averages otherwise.
    #[arg(long, allow_hyphen_values = true)]
    pub trace_value: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub probe: ProbeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct NalphaArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub max_ratio: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub probe: ProbeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SeparableArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long)]
    pub psi0: Option<f64>,
}

/// Parsed `--config` file.
#[derive(Debug, Default)]
struct Config(Map<String, Value>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
        match serde_json::from_str(&text)? {
            Value::Object(m) => Ok(Self(m)),
            _ => Err(Error::InvalidParameter("config file must hold a JSON object".into())),
        }
    }

    fn object(&self, key: &str) -> Result<Map<String, Value>> {
        match self.0.get(key) {
            None => Ok(Map::new()),
            Some(Value::Object(m)) => Ok(m.clone()),
            Some(_) => Err(Error::InvalidParameter(format!("config `{key}` must be an object"))),
        }
    }

    fn seed(&self) -> Result<Option<u64>> {
        match self.0.get("seed") {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| Error::InvalidParameter("config `seed` must be a nonnegative integer".into())),
        }
    }

    fn out(&self) -> Option<PathBuf> {
        self.0.get("out").and_then(Value::as_str).map(PathBuf::from)
    }
}

fn to_params<T: Serialize>(args: &T) -> Result<Map<String, Value>> {
    match serde_json::to_value(args)? {
        Value::Object(m) => Ok(m.into_iter().filter(|(_, v)| !v.is_null()).collect()),
        _ => Ok(Map::new()),
    }
}

/// Layers config and command-line settings over `base`.
fn layer(mut base: Scenario, key: &str, cfg: &Config, cli: Map<String, Value>, common: &Common) -> Result<Scenario> {
    for layer in [cfg.object("params")?, cfg.object(key)?, cli] {
        for (k, v) in layer {
            if k == "field" {
                base.field = v.as_str().map(str::to_string);
            } else {
                base.params.insert(k, v);
            }
        }
    }
    for (k, v) in &common.extra {
        base.params.insert(k.clone(), v.clone());
    }
    for (k, v) in cfg.object("tolerances")? {
        let v = v
            .as_f64()
            .ok_or_else(|| Error::InvalidParameter(format!("tolerance `{k}` must be a number")))?;
        base.tolerances.insert(k, v);
    }
    for (k, v) in &common.tol {
        let v = v
            .as_f64()
            .ok_or_else(|| Error::InvalidParameter(format!("tolerance `{k}` must be a number")))?;
        base.tolerances.insert(k.clone(), v);
    }
    if let Some(f) = &common.field {
        base.field = Some(f.clone());
    }
    Ok(base)
}

fn op_scenario<T: Args + Serialize>(op: &str, o: &Op<T>, cfg: &Config) -> Result<Scenario> {
    layer(Scenario::new(op, op), op, cfg, to_params(&o.args)?, &o.common)
}

/// Rayon pool size from `DIVLAB_WORKERS`, defaulting to available parallelism.
pub fn init_workers() -> usize {
    if let Some(n) = std::env::var("DIVLAB_WORKERS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // a second initialization in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    rayon::current_num_threads()
}

/// Runs a scenario and stamps the report. Numerical failures become a report
/// with a failed `completed` check; usage errors are returned.
pub fn execute(sc: &Scenario, seed: u64) -> Result<Outcome> {
    let ctx = RunContext { seed };
    let mut out = match run_scenario(sc, &ctx) {
        Ok(o) => o,
        Err(e) if is_usage_error(&e) => return Err(e),
        Err(e) => {
            let mut rep = VerificationReport::new(&sc.operation);
            rep.push(Check::flag("completed", false));
            rep.set_status("NUMERICAL_FAILURE").note(e.to_string());
            Outcome::new(rep)
        }
    };
    out.report.name = sc.name.clone();
    out.report.scenario = Some(serde_json::to_value(sc)?);
    out.report.timestamp = Some(chrono::Utc::now().to_rfc3339());
    out.report.environment = Some(Environment {
        precision: "f64".into(),
        seed,
        workers: init_workers(),
    });
    Ok(out)
}

/// Writes `<name>.json` and `<name>.<suffix>.csv` into `dir`.
pub fn write_outputs(dir: &Path, sc: &mut Scenario, out: &mut Outcome) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = vec![format!("{}.json", sc.name)];
    written.extend(out.csv.iter().map(|(suffix, _)| format!("{}.{suffix}.csv", sc.name)));
    sc.outputs = written.clone();
    out.report.scenario = Some(serde_json::to_value(&*sc)?);
    std::fs::write(dir.join(&written[0]), out.report.to_json_pretty()? + "\n")?;
    for ((_, body), file) in out.csv.iter().zip(&written[1..]) {
        std::fs::write(dir.join(file), body)?;
    }
    Ok(written.iter().map(|f| dir.join(f)).collect())
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_catalog(json: bool) -> Result<()> {
    let cat = recipes::catalog();
    if json {
        return emit(&serde_json::to_string_pretty(&cat)?);
    }
    let width = cat.iter().map(|s| s.name.len()).max().unwrap_or(0);
    let lines: Vec<String> = cat
        .iter()
        .map(|s| format!("{:width$}  {:20}  {}", s.name, s.operation, s.description))
        .collect();
    emit(&lines.join("\n"))
}

fn summarize(rep: &VerificationReport) {
    let passed = rep.checks.iter().filter(|c| c.passed()).count();
    eprintln!(
        "{} {} ({passed}/{} checks){}",
        if rep.passed() { "PASS" } else { "FAIL" },
        rep.name,
        rep.checks.len(),
        rep.status.as_deref().map(|s| format!(" [{s}]")).unwrap_or_default()
    );
    for c in rep.checks.iter().filter(|c| !c.passed()) {
        eprintln!("  FAIL {}: value {:.6e}, tolerance {:.3e}", c.name, c.value, c.tolerance);
    }
    for n in &rep.notes {
        eprintln!("  note: {n}");
    }
}

fn run_cli(cli: Cli) -> Result<i32> {
    let cfg = Config::load(cli.config.as_deref())?;
    let mut sc = match &cli.command {
        Command::List { json } => {
            print_catalog(*json)?;
            return Ok(EXIT_PASS);
        }
        Command::Run { name, common } => {
            let base = recipes::find(name)?;
            layer(base, name, &cfg, Map::new(), common)?
        }
        Command::Certify(o) => op_scenario("certify", o, &cfg)?,
        Command::FlowTube(o) => op_scenario("flow-tube", o, &cfg)?,
        Command::StripIdentity(o) => op_scenario("strip-identity", o, &cfg)?,
        Command::Trace(o) => op_scenario("trace", o, &cfg)?,
        Command::Density(o) => op_scenario("density", o, &cfg)?,
        Command::Aplim(o) => op_scenario("aplim", o, &cfg)?,
        Command::Blowup(o) => op_scenario("blowup", o, &cfg)?,
        Command::Nalpha(o) => op_scenario("nalpha", o, &cfg)?,
        Command::Demo(Demo::Separable(o)) => op_scenario("separable", o, &cfg)?,
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.seed()?.unwrap_or(DEFAULT_SEED),
    };
    let mut out = execute(&sc, seed)?;
    match cli.out.or_else(|| cfg.out()) {
        Some(dir) => {
            for p in write_outputs(&dir, &mut sc, &mut out)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => emit(&out.report.to_json_pretty()?)?,
    }
    summarize(&out.report);
    Ok(if out.report.passed() { EXIT_PASS } else { EXIT_FAIL })
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    init_workers();
    match run_cli(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAIL
            }
        }
    }
}
