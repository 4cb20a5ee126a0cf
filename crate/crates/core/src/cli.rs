//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 config error,
//! 3 numerical error, 4 I/O error.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channel::SystemConfig;
use crate::error::Error;
use crate::experiments::{
    antenna_scaling, realize, run_sweep, trial_rng, OutputGroup, Quantity, ScalingSpec, ScalingTable, Scenario,
    SweepResult, SweepSpec, SweepVariable,
};
use crate::linalg::{CMatrix, CVector};
use crate::verify::{run_verify, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const SWEEP_HEADER: &str =
    "distance,mean_eve_sinr,se_eve_sinr,p5,p95,bound_jensen,mean_legit_far,mean_legit_near,mean_secrecy_bits,trials";
pub const SCALING_HEADER: &str = "M,N,mean_eve_sinr,se,lambda_min_over_M,slope_so_far,mean_legit_far";

#[derive(Debug, Parser)]
#[command(name = "noma-shield", version, about = "MIMO-NOMA signal-alignment eavesdropping simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: CommonOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Dump one channel realization with all intermediates as JSON.
    Single,
    /// Monte Carlo sweep over distance (or number of pairs) to CSV.
    Sweep,
    /// Eavesdropper SINR against antenna count, with a log-log slope fit.
    Scaling,
    /// Run the randomized invariant battery.
    Verify,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonOpts {
    /// JSON config, or a run manifest written by a previous run.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<usize>,
    #[arg(long, global = true, value_name = "START:STOP:STEP")]
    pub grid: Option<String>,
    #[arg(long, global = true, value_name = "F")]
    pub gamma: Option<f64>,
    #[arg(long = "m-list", global = true, value_name = "a,b,c")]
    pub m_list: Option<String>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long = "print-config", global = true)]
    pub print_config: bool,
    /// Perturb the precoder before verification (sanity check of `verify`).
    #[arg(long = "fault-inject", global = true)]
    pub fault_inject: bool,
}

/// Inclusive arithmetic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Vec::new();
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid must be START:STOP:STEP, got `{s}`"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad grid number `{p}`: {e}"));
        Ok(GridRange {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            step: num(parts[2])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub grid: GridRange,
    pub trials: usize,
    pub outputs: BTreeSet<OutputGroup>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            variable: SweepVariable::EveDistance,
            grid: GridRange {
                start: 2.0,
                stop: 14.0,
                step: 1.0,
            },
            trials: 1000,
            outputs: OutputGroup::ALL.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingSection {
    pub gamma: f64,
    pub m_list: Vec<usize>,
    pub trials: usize,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection {
            gamma: 0.75,
            m_list: vec![8, 16, 32, 64],
            trials: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub instances: usize,
    pub random_detectors: usize,
    pub fault_offset: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            instances: 100,
            random_detectors: 100,
            fault_offset: 1e-3,
        }
    }
}

/// Complete input of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub scenario: Scenario,
    pub sweep: SweepSection,
    pub scaling: ScalingSection,
    pub verify: VerifySection,
    /// Set by `--fault-inject`.
    pub fault_inject: bool,
}

/// Sidecar written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub config: RunConfig,
    pub master_seed: u64,
    pub tool_version: String,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::Spec(_) | Error::Domain(_) => EXIT_CONFIG,
            Error::AlignmentFailure { .. } | Error::IllConditioned { .. } | Error::Numerical(_) | Error::ResampleLimit { .. } => {
                EXIT_NUMERIC
            }
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// Parse a config document; a run manifest is accepted and its embedded
/// config used.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::config(format!("malformed config: {e}")))?;
    let inner = match &value {
        Value::Object(map) if map.contains_key("tool_version") && map.contains_key("config") => map["config"].clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| CliError::config(format!("malformed config: {e}")))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::io(format!("cannot read config {}: {e}", p.display())))?;
            parse_config(&text)
        }
    }
}

fn parse_m_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| CliError::config(format!("bad --m-list entry `{p}`: {e}")))
        })
        .collect()
}

/// Apply command-line overrides to a loaded config.
pub fn resolve(command: Command, opts: &CommonOpts) -> Result<RunConfig, CliError> {
    let mut cfg = load_config(opts.config.as_deref())?;
    if let Some(seed) = opts.seed {
        cfg.system.master_seed = seed;
    }
    if let Some(trials) = opts.trials {
        match command {
            Command::Sweep | Command::Single => cfg.sweep.trials = trials,
            Command::Scaling => cfg.scaling.trials = trials,
            Command::Verify => cfg.verify.instances = trials,
        }
    }
    if let Some(g) = &opts.grid {
        cfg.sweep.grid = GridRange::parse(g).map_err(CliError::config)?;
    }
    if let Some(gamma) = opts.gamma {
        cfg.scaling.gamma = gamma;
    }
    if let Some(list) = &opts.m_list {
        cfg.scaling.m_list = parse_m_list(list)?;
    }
    if opts.fault_inject {
        cfg.fault_inject = true;
    }
    Ok(cfg)
}

/// Twelve significant digits, scientific notation, independent of locale.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn complex_json(z: &crate::linalg::C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(complex_json).collect()))
            .collect(),
    )
}

fn vector_json(v: &CVector) -> Value {
    Value::Array(v.iter().map(complex_json).collect())
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn single_json(cfg: &RunConfig) -> Result<Value, CliError> {
    let sys = &cfg.system;
    sys.validate()?;
    let sc = &cfg.scenario;
    if sc.target_pair >= sys.num_pairs {
        return Err(CliError::config(format!(
            "scenario.target_pair {} out of range for {} pairs",
            sc.target_pair, sys.num_pairs
        )));
    }
    let pins = crate::channel::DistancePins {
        near_all: sc.near_distance,
        far_all: sc.far_distance,
        ..Default::default()
    };
    let mut rng = trial_rng(sys.master_seed, 0, 0);
    let r = realize(sys, &pins, sc.eve_distance, sc.target_pair, &mut rng)?;
    let residuals = r.precoder.alignment_residuals(&r.population);
    let rep = &r.report;
    Ok(json!({
        "num_pairs": sys.num_pairs,
        "antennas_per_user": sys.antennas_per_user,
        "target_pair": sc.target_pair,
        "master_seed": sys.master_seed,
        "redraws": r.redraws,
        "distances": r.population.pairs.iter().map(|p| json!({"near": p.d_near, "far": p.d_far})).collect::<Vec<_>>(),
        "f": r.precoder.f,
        "alignment_residuals": residuals,
        "null_space_dims": r.precoder.pairs.iter().map(|a| a.null_dim).collect::<Vec<_>>(),
        "gp_max_offdiag": r.precoder.max_offdiag_gp(),
        "cond_g": r.precoder.cond_g,
        "eve": {
            "distance": r.eve.distance,
            "path_loss": r.eve.path_loss,
            "w": matrix_json(r.eve_channel.w()),
            "u_opt": vector_json(&rep.u_opt),
            "sinr_opt": rep.sinr_eve_opt,
        },
        "legit_zf": rep.legit_zf,
        "legit_opt": rep.legit_opt,
        "bounds": rep.bounds,
        "secrecy_capacity_far_bits": rep.secrecy_capacity_far,
    }))
}

fn sweep_spec(cfg: &RunConfig) -> SweepSpec {
    SweepSpec {
        cfg: cfg.system.clone(),
        scenario: cfg.scenario.clone(),
        variable: cfg.sweep.variable,
        grid: cfg.sweep.grid.values(),
        trials_per_point: cfg.sweep.trials,
        outputs: cfg.sweep.outputs.clone(),
    }
}

/// Sweep result as CSV with the fixed header.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    let mean = |p: &crate::experiments::PointResult, q: Quantity| p.stat(q).map_or(f64::NAN, |s| s.mean);
    for p in &result.points {
        let eve = p.stat(Quantity::EveOpt);
        let field = |f: fn(&crate::experiments::Summary) -> f64| eve.map_or(f64::NAN, f);
        let cells = [
            fmt_sig12(p.value),
            fmt_sig12(field(|s| s.mean)),
            fmt_sig12(field(|s| s.std_err)),
            fmt_sig12(field(|s| s.p5)),
            fmt_sig12(field(|s| s.p95)),
            fmt_sig12(mean(p, Quantity::BoundJensen)),
            fmt_sig12(mean(p, Quantity::LegitFarOpt)),
            fmt_sig12(mean(p, Quantity::LegitNearOpt)),
            fmt_sig12(mean(p, Quantity::SecrecyBits)),
            p.trials.to_string(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn scaling_spec(cfg: &RunConfig) -> ScalingSpec {
    ScalingSpec {
        cfg: cfg.system.clone(),
        scenario: cfg.scenario.clone(),
        gamma: cfg.scaling.gamma,
        m_list: cfg.scaling.m_list.clone(),
        trials: cfg.scaling.trials,
    }
}

/// Scaling table as CSV with the fixed header.
pub fn scaling_csv(table: &ScalingTable) -> String {
    let mut out = String::from(SCALING_HEADER);
    out.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.m,
            r.n,
            fmt_sig12(r.eve_sinr.mean),
            fmt_sig12(r.eve_sinr.std_err),
            fmt_sig12(r.lambda_min_over_m),
            r.slope_so_far.map(fmt_sig12).unwrap_or_default(),
            fmt_sig12(r.legit_far.mean),
        );
    }
    out
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

/// Write `contents` to `--out` with a manifest next to it, or to stdout.
fn emit(command: Command, cfg: &RunConfig, out_path: Option<&Path>, contents: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out_path {
        None => stdout
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::io(format!("cannot write to stdout: {e}"))),
        Some(path) => {
            write_file(path, contents)?;
            let manifest = RunManifest {
                command,
                config: cfg.clone(),
                master_seed: cfg.system.master_seed,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp: chrono::Utc::now().to_rfc3339(),
                outputs: vec![path.display().to_string()],
            };
            write_file(&manifest_path(path), &pretty(&manifest))
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = resolve(cli.command, &cli.opts)?;
    if cli.opts.print_config {
        stdout
            .write_all(pretty(&cfg).as_bytes())
            .map_err(|e| CliError::io(e.to_string()))?;
        return Ok(EXIT_OK);
    }
    let out = cli.opts.out.as_deref();
    match cli.command {
        Command::Single => {
            let value = single_json(&cfg)?;
            emit(Command::Single, &cfg, out, &pretty(&value), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Sweep => {
            let spec = sweep_spec(&cfg);
            let result = run_sweep(&spec)?;
            emit(Command::Sweep, &cfg, out, &sweep_csv(&result), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Scaling => {
            let spec = scaling_spec(&cfg);
            let table = antenna_scaling(&spec)?;
            emit(Command::Scaling, &cfg, out, &scaling_csv(&table), stdout)?;
            writeln!(stdout, "slope={}", fmt_sig12(table.slope)).map_err(|e| CliError::io(e.to_string()))?;
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let mut opts = VerifyOptions::new(cfg.system.clone(), cfg.system.master_seed, cfg.verify.instances);
            opts.random_detectors = cfg.verify.random_detectors;
            if cfg.fault_inject {
                opts.fault_offset = Some(cfg.verify.fault_offset);
            }
            let report = run_verify(&opts)?;
            emit(Command::Verify, &cfg, out, &pretty(&report), stdout)?;
            if report.passed {
                Ok(EXIT_OK)
            } else {
                let failed: Vec<String> = report
                    .families
                    .iter()
                    .filter(|f| !f.passed())
                    .map(|f| format!("{} (replay seed {})", f.name, f.first_failing_seed.unwrap_or_default()))
                    .collect();
                Err(CliError {
                    code: EXIT_VERIFY,
                    message: format!("verification failed: {}", failed.join(", ")),
                })
            }
        }
    }
}

/// Run the CLI on `args` (including the program name), returning the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return if code == 0 { EXIT_OK } else { EXIT_CONFIG };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_expansion() {
        let g = GridRange::parse("2:14:1").unwrap();
        let v = g.values();
        assert_eq!(v.len(), 13);
        assert_eq!((v[0], v[12]), (2.0, 14.0));
        assert_eq!(GridRange::parse("0:1:0.1").unwrap().values().len(), 11);
        assert!(GridRange::parse("5:2:1").unwrap().values().is_empty());
        assert!(GridRange::parse("1:2").is_err());
    }

    #[test]
    fn sig12_formatting() {
        assert_eq!(fmt_sig12(0.1), "1.00000000000e-1");
        assert_eq!(fmt_sig12(1234.5), "1.23450000000e3");
    }

    #[test]
    fn unknown_field_is_reported() {
        let err = parse_config(r#"{"system": {"num_pair": 7}}"#).unwrap_err();
        assert_eq!(err.code, EXIT_CONFIG);
        assert!(err.message.contains("num_pair"), "{}", err.message);
    }

    #[test]
    fn manifest_is_accepted_as_config() {
        let cfg = RunConfig {
            system: SystemConfig {
                master_seed: 99,
                ..SystemConfig::default()
            },
            ..RunConfig::default()
        };
        let manifest = RunManifest {
            command: Command::Sweep,
            config: cfg.clone(),
            master_seed: 99,
            tool_version: "x".into(),
            timestamp: "t".into(),
            outputs: vec![],
        };
        assert_eq!(parse_config(&pretty(&manifest)).unwrap(), cfg);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::Spec("x".into())).code, EXIT_CONFIG);
        assert_eq!(CliError::from(Error::Numerical("x".into())).code, EXIT_NUMERIC);
    }
}
