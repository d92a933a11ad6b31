//! Command-line pipeline: config loading, subcommands and artifact files.
//!
//! Every subcommand reads one JSON run config (all fields optional; the
//! defaults reproduce the planar desk setup) and writes into the output
//! directory. Later stages read the files of earlier ones, so
//! `simulate -> estimate -> select` and `risk`, `verify` can run in any order
//! before `report`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::estimator::{check_sinc_range, estimate_all, sigma_hat, CoeffEstimates, IndexSets};
use crate::obsmodel::{draw_samples, NoiseFamily, NoiseModel, SampleSet};
use crate::phantoms::{Bump, Phantom};
use crate::properties::{property_suite, PropertyReport, SuiteOptions};
use crate::riskharness::{oracle_report, Experiment, ExperimentConfig, SigmaMode};
use crate::selector::{check_delta, reconstruct, select, GridSpec};
use crate::{Error, Result};

/// Environment variable that replaces `output_dir` from the config.
pub const OUTPUT_DIR_ENV: &str = "CTSELECT_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ctselect", version, about = "Adaptive weight selection for noisy Radon data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run config; omitted fields take their defaults.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Draw one noisy sinogram and write samples.csv.
    Simulate,
    /// Estimate coefficients and the noise level from samples.csv.
    Estimate,
    /// Choose a weight from coefficients.csv and reconstruct.
    Select,
    /// Monte Carlo risk of every weight over the noise family.
    Risk,
    /// Run the property suite.
    Verify,
    /// Merge earlier outputs into report.json.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Select => "select",
            Command::Risk => "risk",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    pub exponent: u32,
}

/// Number of samples per projection line, or `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QSetting {
    Count(usize),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub models: Vec<NoiseModel>,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub fourth_hi: f64,
    /// Law used by `simulate`; defaults to the first family member. May lie
    /// outside the family, e.g. a zero-variance noiseless run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<NoiseModel>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        let fam = NoiseFamily::desk_default();
        Self {
            models: fam.models().to_vec(),
            sigma_lo: fam.sigma_lo(),
            sigma_hi: fam.sigma_hi(),
            fourth_hi: fam.fourth_hi(),
            simulate: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverride {
    pub k_star: Option<u32>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Replications {
    pub moments: usize,
    pub risk: usize,
}

impl Default for Replications {
    fn default() -> Self {
        Self { moments: 10_000, risk: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub phantom: Vec<BumpSpec>,
    pub dimension: usize,
    pub x_star: f64,
    pub m: usize,
    pub q: QSetting,
    /// Cap ratio for `q = "auto"` and the noise-rate regime.
    pub q_star: f64,
    pub delta: f64,
    pub sigma_mode: SigmaMode,
    /// Also require `m^d <= q <= q_star m^d`.
    pub sigma_rate_regime: bool,
    pub noise: NoiseSpec,
    pub grid: GridOverride,
    pub replications: Replications,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Side length of the reconstruction raster.
    pub resolution: usize,
    /// Checks whose failure makes `verify` and `report` exit nonzero.
    /// `None` marks every check as required.
    pub required_checks: Option<Vec<String>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let desk = Phantom::desk_default();
        Self {
            phantom: desk
                .bumps()
                .iter()
                .map(|b| BumpSpec { center: b.center.clone(), radius: b.radius, amplitude: b.amplitude, exponent: b.exponent })
                .collect(),
            dimension: 2,
            x_star: 1.0,
            m: 8,
            q: QSetting::Count(34),
            q_star: 2.0,
            delta: 0.1,
            sigma_mode: SigmaMode::Estimated,
            sigma_rate_regime: false,
            noise: NoiseSpec::default(),
            grid: GridOverride::default(),
            replications: Replications::default(),
            seed: 20240611,
            output_dir: PathBuf::from("out"),
            resolution: 128,
            required_checks: None,
        }
    }
}

/// A config that passed validation, with derived objects built once.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub raw: RunConfig,
    pub phantom: Phantom,
    pub q: usize,
    pub family: NoiseFamily,
    pub simulate_noise: NoiseModel,
    pub sets: IndexSets,
    pub output_dir: PathBuf,
}

impl ResolvedConfig {
    pub fn experiment_config(&self) -> ExperimentConfig {
        let grid = match (self.raw.grid.k_star, self.raw.grid.epsilon) {
            (None, None) => None,
            (k, e) => {
                let n = self.design_size();
                let base = GridSpec::from_sample_size(n).unwrap_or(GridSpec { k_star: 1, epsilon: 0.5 });
                Some(GridSpec { k_star: k.unwrap_or(base.k_star), epsilon: e.unwrap_or(base.epsilon) })
            }
        };
        ExperimentConfig {
            phantom: self.phantom.clone(),
            m: self.raw.m,
            q: self.q,
            delta: self.raw.delta,
            sigma_mode: self.raw.sigma_mode,
            grid,
            sigma_hi: self.family.sigma_hi(),
        }
    }

    /// `q` times the number of projection directions.
    fn design_size(&self) -> usize {
        let keys: std::collections::BTreeSet<_> = self.sets.s_n.iter().map(|j| crate::obsmodel::direction_key(j)).collect();
        self.q * keys.len()
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.output_dir.join(file)
    }
}

/// `max(2 d m + 2, m^d)` capped at `floor(q_star m^d)`.
pub fn auto_q(d: usize, m: usize, q_star: f64) -> usize {
    let md = m.pow(d as u32);
    let cap = (q_star * md as f64).floor() as usize;
    (2 * d * m + 2).max(md).min(cap)
}

/// 1-based line of the first `"key":` in `text`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|line| {
        line.find(&needle).is_some_and(|at| line[at + needle.len()..].trim_start().starts_with(':'))
    })
    .map(|i| i + 1)
}

fn located(source: &str, text: &str, key: &str, err: Error) -> Error {
    let msg = match err {
        Error::Config(m) | Error::Input(m) | Error::Unsupported(m) => m,
        other => other.to_string(),
    };
    match key_line(text, key) {
        Some(line) => Error::Config(format!("{source}:{line}: {key}: {msg}")),
        None => Error::Config(format!("{source}: {key}: {msg}")),
    }
}

impl RunConfig {
    /// Parses and validates; errors name the file and line.
    pub fn from_json(text: &str, source: &str) -> Result<ResolvedConfig> {
        let raw: RunConfig = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("{source}:{}:{}: {e}", e.line(), e.column()))
        })?;
        raw.resolve(text, source)
    }

    pub fn load(path: Option<&Path>) -> Result<ResolvedConfig> {
        match path {
            Some(p) => {
                let text = fs::read_to_string(p)?;
                Self::from_json(&text, &p.display().to_string())
            }
            None => RunConfig::default().resolve("", "<defaults>"),
        }
    }

    fn resolve(self, text: &str, source: &str) -> Result<ResolvedConfig> {
        let at = |key: &str, e: Error| located(source, text, key, e);
        let d = self.dimension;
        if !(2..=3).contains(&d) {
            return Err(at("dimension", Error::Config(format!("must be 2 or 3, got {d}"))));
        }
        let bumps = self
            .phantom
            .iter()
            .map(|b| Bump { center: b.center.clone(), radius: b.radius, amplitude: b.amplitude, exponent: b.exponent })
            .collect();
        let phantom = Phantom::new(bumps, self.x_star, d).map_err(|e| at("phantom", e))?;
        check_delta(self.delta).map_err(|e| at("delta", e))?;
        if self.m < 1 {
            return Err(at("m", Error::Config("must be >= 1".into())));
        }
        if !(self.q_star >= 1.0) {
            return Err(at("q_star", Error::Config(format!("must be >= 1, got {}", self.q_star))));
        }
        let q = match &self.q {
            QSetting::Count(q) => *q,
            QSetting::Word(w) if w == "auto" => auto_q(d, self.m, self.q_star),
            QSetting::Word(w) => return Err(at("q", Error::Config(format!("expected a count or \"auto\", got {w:?}")))),
        };
        let min_q = 2 * d * self.m + 2;
        if q < min_q {
            return Err(at("q", Error::Config(format!("q = {q} is below 2 d m + 2 = {min_q}"))));
        }
        if self.sigma_mode == SigmaMode::Estimated && self.m < 4 {
            return Err(at("m", Error::Config(format!("estimated noise level needs m >= 4, got {}", self.m))));
        }
        if self.sigma_rate_regime {
            let md = self.m.pow(d as u32);
            if (q as f64) < md as f64 || (q as f64) > self.q_star * md as f64 {
                return Err(at(
                    "q",
                    Error::Config(format!("noise-rate regime needs m^d <= q <= q_star m^d = [{md}, {}], got {q}", self.q_star * md as f64)),
                ));
            }
        }
        let sets = IndexSets::new(d, self.m).map_err(|e| at("m", e))?;
        check_sinc_range(&sets.s_n, self.x_star, q).map_err(|e| at("q", e))?;
        let family = NoiseFamily::new(self.noise.models.clone(), self.noise.sigma_lo, self.noise.sigma_hi, self.noise.fourth_hi)
            .map_err(|e| at("noise", e))?;
        let simulate_noise = match self.noise.simulate {
            Some(n) => NoiseModel::new(n.kind, n.sigma).map_err(|e| at("simulate", e))?,
            None => *family.models().first().ok_or_else(|| at("models", Error::Config("noise family is empty".into())))?,
        };
        if let Some(e) = self.grid.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(at("epsilon", Error::Config(format!("must lie in (0, 1), got {e}"))));
            }
        }
        if self.grid.k_star == Some(0) {
            return Err(at("k_star", Error::Config("must be >= 1".into())));
        }
        if self.replications.risk < 100 {
            return Err(at("risk", Error::Config(format!("at least 100 replications are required, got {}", self.replications.risk))));
        }
        if self.replications.moments < 2 {
            return Err(at("moments", Error::Config("at least 2 replications are required".into())));
        }
        if self.resolution < 8 {
            return Err(at("resolution", Error::Config(format!("must be >= 8, got {}", self.resolution))));
        }
        let output_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| self.output_dir.clone());
        Ok(ResolvedConfig { raw: self, phantom, q, family, simulate_noise, sets, output_dir })
    }
}

/// Result of one subcommand: files written and whether required checks held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub required_passed: bool,
}

fn require(cfg: &ResolvedConfig, file: &str, producer: &'static str) -> Result<PathBuf> {
    let path = cfg.path(file);
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::Dependency { path, producer })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub seed: u64,
    pub q: usize,
    pub n_total: usize,
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub seed: u64,
    pub q: usize,
    pub m: usize,
    pub sigma_mode: SigmaMode,
    /// Present when the high band is nonempty.
    pub sigma_hat: Option<f64>,
    /// Noise level handed to the selector.
    pub sigma_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub seed: u64,
    pub position: usize,
    pub beta: u32,
    pub ell: f64,
    pub sigma_used: f64,
    pub cost: f64,
    /// Empirical error of the selected weight against the reference coefficients.
    pub error: f64,
    /// Smallest empirical error over the family.
    pub best_error: f64,
    pub family_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub required_passed: bool,
    pub failed_required: Vec<String>,
    pub report: PropertyReport,
}

fn is_required(required: &Option<Vec<String>>, check: &str) -> bool {
    match required {
        None => true,
        Some(list) => list.iter().any(|r| r == check || check.strip_prefix(r.as_str()).is_some_and(|rest| rest.starts_with(':'))),
    }
}

pub fn run_simulate(cfg: &ResolvedConfig) -> Result<Outcome> {
    fs::create_dir_all(&cfg.output_dir)?;
    let samples = draw_samples(&cfg.phantom, &cfg.sets.s_n, cfg.q, &cfg.simulate_noise, cfg.raw.seed)?;
    let csv_path = cfg.path("samples.csv");
    samples.write_csv(BufWriter::new(File::create(&csv_path)?))?;
    let json_path = cfg.path("samples.json");
    write_json(
        &json_path,
        &SimulateSummary { seed: cfg.raw.seed, q: cfg.q, n_total: samples.n_total(), noise: cfg.simulate_noise },
    )?;
    Ok(Outcome { written: vec![csv_path, json_path], required_passed: true })
}

pub fn run_estimate(cfg: &ResolvedConfig) -> Result<Outcome> {
    let path = require(cfg, "samples.csv", "simulate")?;
    let samples = SampleSet::read_csv(BufReader::new(File::open(&path)?), cfg.raw.x_star, cfg.raw.seed)?;
    if samples.q() != cfg.q {
        return Err(Error::Input(format!("{} has q = {}, config has q = {}", path.display(), samples.q(), cfg.q)));
    }
    let est = estimate_all(&samples, &cfg.sets.s_n)?;
    let sigma_hat = if cfg.sets.t_n.is_empty() { None } else { Some(sigma_hat(&est, &cfg.sets)?) };
    let sigma_used = match cfg.raw.sigma_mode {
        SigmaMode::Known => cfg.simulate_noise.sigma,
        SigmaMode::Estimated => sigma_hat.expect("validated m >= 4"),
    };
    let csv_path = cfg.path("coefficients.csv");
    est.write_csv(BufWriter::new(File::create(&csv_path)?))?;
    let json_path = cfg.path("estimate.json");
    write_json(
        &json_path,
        &EstimateSummary { seed: cfg.raw.seed, q: cfg.q, m: cfg.raw.m, sigma_mode: cfg.raw.sigma_mode, sigma_hat, sigma_used },
    )?;
    Ok(Outcome { written: vec![csv_path, json_path], required_passed: true })
}

pub fn run_select(cfg: &ResolvedConfig) -> Result<Outcome> {
    let coeff_path = require(cfg, "coefficients.csv", "estimate")?;
    let summary: EstimateSummary = read_json(&require(cfg, "estimate.json", "estimate")?)?;
    let est = CoeffEstimates::read_csv(BufReader::new(File::open(&coeff_path)?), cfg.q, cfg.raw.x_star)?;
    let exp = Experiment::new(cfg.experiment_config())?;
    let fam = exp.family();
    let sel = select(fam, &est, cfg.raw.delta, summary.sigma_used)?;
    let errors: Vec<f64> = fam.weights.iter().map(|w| exp.error_of(w, &est)).collect();
    let gp = sel.grid_point().expect("grid family");

    let costs_path = cfg.path("costs.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&costs_path)?));
    w.write_record(["beta", "ell", "quad", "cross", "penalty", "total", "error", "selected"])?;
    for (i, (c, wv)) in sel.costs.iter().zip(&fam.weights).enumerate() {
        let p = wv.grid_point().expect("grid family");
        w.write_record([
            p.beta.to_string(),
            format!("{:?}", p.ell),
            format!("{:?}", c.quad),
            format!("{:?}", c.cross),
            format!("{:?}", c.penalty),
            format!("{:?}", c.total),
            format!("{:?}", errors[i]),
            (i == sel.position).to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);

    let sel_path = cfg.path("selection.json");
    write_json(
        &sel_path,
        &SelectionSummary {
            seed: cfg.raw.seed,
            position: sel.position,
            beta: gp.beta,
            ell: gp.ell,
            sigma_used: summary.sigma_used,
            cost: sel.cost.total,
            error: errors[sel.position],
            best_error: errors.iter().copied().fold(f64::INFINITY, f64::min),
            family_size: fam.len(),
        },
    )?;
    let mut written = vec![costs_path, sel_path];
    if cfg.raw.dimension == 2 {
        let raster = reconstruct(&sel.weights, &est, cfg.raw.x_star, cfg.raw.resolution)?;
        let pgm_path = cfg.path("reconstruction.pgm");
        let scale = raster.write_pgm(BufWriter::new(File::create(&pgm_path)?))?;
        let side_path = cfg.path("reconstruction.json");
        write_json(&side_path, &scale)?;
        written.extend([pgm_path, side_path]);
    }
    Ok(Outcome { written, required_passed: true })
}

pub fn run_risk(cfg: &ResolvedConfig) -> Result<Outcome> {
    fs::create_dir_all(&cfg.output_dir)?;
    let exp = Experiment::new(cfg.experiment_config())?;
    let report = oracle_report(&exp, &cfg.family, cfg.raw.replications.risk, cfg.raw.seed)?;
    let json_path = cfg.path("risk.json");
    write_json(&json_path, &report)?;
    let table_path = cfg.path("risk_table.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&table_path)?));
    w.write_record(["noise", "beta", "ell", "mean", "se"])?;
    for m in &report.models {
        for l in &m.per_lambda {
            w.write_record([
                m.kind.name().to_string(),
                l.beta.to_string(),
                format!("{:?}", l.ell),
                format!("{:?}", l.mean),
                format!("{:?}", l.se),
            ])?;
        }
    }
    w.flush()?;
    Ok(Outcome { written: vec![json_path, table_path], required_passed: true })
}

pub fn run_verify(cfg: &ResolvedConfig) -> Result<Outcome> {
    fs::create_dir_all(&cfg.output_dir)?;
    let opts = SuiteOptions {
        seed: cfg.raw.seed,
        moment_replications: cfg.raw.replications.moments,
        risk_replications: cfg.raw.replications.risk,
        ..SuiteOptions::default()
    };
    let report = property_suite(&cfg.experiment_config(), &cfg.family, &opts)?;
    let failed_required: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed && is_required(&cfg.raw.required_checks, &c.name))
        .map(|c| c.name.clone())
        .collect();
    let csv_path = cfg.path("verify.csv");
    report.write_csv(BufWriter::new(File::create(&csv_path)?))?;
    let json_path = cfg.path("verify.json");
    let required_passed = failed_required.is_empty();
    write_json(&json_path, &VerifySummary { seed: cfg.raw.seed, required_passed, failed_required, report })?;
    Ok(Outcome { written: vec![csv_path, json_path], required_passed })
}

/// Merges the JSON outputs of the other stages. `report.json` depends only
/// on those files; the wall-clock time goes to `metadata.json`.
pub fn run_report(cfg: &ResolvedConfig) -> Result<Outcome> {
    let parts = [
        ("simulate", "samples.json", "simulate"),
        ("estimate", "estimate.json", "estimate"),
        ("select", "selection.json", "select"),
        ("risk", "risk.json", "risk"),
        ("verify", "verify.json", "verify"),
    ];
    let mut merged = serde_json::Map::new();
    merged.insert("seed".into(), Value::from(cfg.raw.seed));
    merged.insert("config".into(), serde_json::to_value(&cfg.raw)?);
    let mut required_passed = true;
    for (key, file, producer) in parts {
        let value: Value = read_json(&require(cfg, file, producer)?)?;
        if key == "verify" {
            required_passed = value.get("required_passed").and_then(Value::as_bool).unwrap_or(false);
        }
        merged.insert(key.into(), value);
    }
    // the output directory is an environment detail, not a result
    if let Some(Value::Object(c)) = merged.get_mut("config") {
        c.remove("output_dir");
    }
    let report_path = cfg.path("report.json");
    write_json(&report_path, &Value::Object(merged))?;
    let meta_path = cfg.path("metadata.json");
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    write_json(
        &meta_path,
        &serde_json::json!({ "generated_unix_seconds": now, "version": env!("CARGO_PKG_VERSION") }),
    )?;
    Ok(Outcome { written: vec![report_path, meta_path], required_passed })
}

pub fn run_command(command: Command, cfg: &ResolvedConfig) -> Result<Outcome> {
    match command {
        Command::Simulate => run_simulate(cfg),
        Command::Estimate => run_estimate(cfg),
        Command::Select => run_select(cfg),
        Command::Risk => run_risk(cfg),
        Command::Verify => run_verify(cfg),
        Command::Report => run_report(cfg),
    }
}

/// Entry point for the binary: 0 on success, 1 when a required check
/// failed, 2 on any error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = RunConfig::load(cli.config.as_deref()).and_then(|cfg| run_command(cli.command, &cfg));
    match outcome {
        Ok(o) => {
            for p in &o.written {
                println!("wrote {}", p.display());
            }
            if o.required_passed {
                0
            } else {
                eprintln!("{}: a required check failed", cli.command.name());
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_desk_setup() {
        let cfg = RunConfig::from_json("{}", "t.json").unwrap();
        assert_eq!(cfg.q, 34);
        assert_eq!(cfg.phantom, Phantom::desk_default());
        assert_eq!(cfg.family, NoiseFamily::desk_default());
        assert_eq!(cfg.experiment_config(), ExperimentConfig::desk_default());
    }

    #[test]
    fn auto_q_rule() {
        assert_eq!(auto_q(2, 8, 2.0), 64);
        assert_eq!(auto_q(2, 4, 2.0), 18);
        assert_eq!(auto_q(2, 4, 1.0), 16);
        let cfg = RunConfig::from_json("{\"q\": \"auto\"}", "t.json").unwrap();
        assert_eq!(cfg.q, 64);
        assert!(RunConfig::from_json("{\"q\": \"many\"}", "t.json").is_err());
    }

    #[test]
    fn bad_delta_is_line_addressed() {
        let text = "{\n  \"m\": 8,\n  \"delta\": 0.2\n}";
        let msg = RunConfig::from_json(text, "run.json").unwrap_err().to_string();
        assert!(msg.contains("run.json:3"), "{msg}");
        assert!(msg.contains("(0, 1/8)"), "{msg}");
    }

    #[test]
    fn parse_errors_carry_position() {
        let msg = RunConfig::from_json("{\n  \"m\": 8,\n  \"bogus\": 1\n}", "run.json").unwrap_err().to_string();
        assert!(msg.contains("run.json:3:"), "{msg}");
    }

    #[test]
    fn rate_regime_gate() {
        let err = RunConfig::from_json("{\"sigma_rate_regime\": true}", "t.json").unwrap_err();
        assert!(err.to_string().contains("m^d <= q"), "{err}");
        assert!(RunConfig::from_json("{\"sigma_rate_regime\": true, \"q\": 64}", "t.json").is_ok());
    }

    #[test]
    fn required_check_matching() {
        assert!(is_required(&None, "anything"));
        let list = Some(vec!["linear_form_bound".to_string()]);
        assert!(is_required(&list, "linear_form_bound:laplace"));
        assert!(!is_required(&list, "linear_form_bound_x"));
        assert!(!is_required(&list, "support"));
    }
}
