//! Command-line front end.
//!
//! Configuration is a flat `key = value` file (blank lines and `#`
//! comments allowed) plus flag overrides; flags win. Every run writes its
//! CSV tables and, next to each, a `<stem>.manifest.json` with the
//! resolved configuration, seed, timestamps and SHA-256 of the data.

mod csv;
mod selftest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::{grid_histogram, histogram, IdentifyMode};
use crate::pipeline::{
    run_synthetic_defects, sweep_points, table_codes, voltage_snapshots, AllocationSweep, CodeSpec, Compensation,
    DefectSource, PipelineError, SimConfig, SweepPoint,
};

pub use csv::{emit_csv, format_sig6, Cell, Table};
pub use selftest::{run_selftest, Check};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_SELFTEST: i32 = 3;

pub const SWEEP_HEADER: [&str; 13] = [
    "sigma_fast",
    "sigma_random",
    "zeta",
    "l",
    "r",
    "trials",
    "failures",
    "p_fail",
    "ci_lo",
    "ci_hi",
    "mean_identified",
    "mean_raw_ber",
    "is_optimal",
];

pub const HISTOGRAM_HEADER: [&str; 3] = ["population", "bin_center", "count"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("selftest failed: {0}")]
    Selftest(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Pipeline(PipelineError::InvalidConfig { .. }) => EXIT_CONFIG,
            CliError::Pipeline(_) | CliError::Io { .. } => EXIT_RUNTIME,
            CliError::Selftest(_) => EXIT_SELFTEST,
        }
    }
}

fn config_err(field: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config { field: field.into(), reason: reason.into() }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "detrap", version, about = "Fast-detrapping compensation experiments for 3D NAND")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Threshold-voltage histograms before detrapping, after detrapping and after compensation.
    Distribution,
    /// Allocation sweep over identify levels.
    ZetaSweep,
    /// Allocation sweep over the fast-detrapping spread.
    FastSweep,
    /// Allocation sweep over the read-noise spread.
    RandomSweep,
    /// Stuck-at defects plus a BSC, bypassing the flash channel.
    Synthetic,
    /// Field axioms and brute-force code oracles.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Distribution => "distribution",
            Command::ZetaSweep => "zeta-sweep",
            Command::FastSweep => "fast-sweep",
            Command::RandomSweep => "random-sweep",
            Command::Synthetic => "synthetic",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// Flat key = value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<String>,
    /// Blocks per sweep point (codewords for `synthetic`).
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<String>,
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    pub sigma_fast: Option<String>,
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    pub sigma_random: Option<String>,
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    pub zeta: Option<String>,
    /// Comma-separated code indices 0..=10 (l = 10·index), or `all`.
    #[arg(long, global = true, value_name = "LIST|all")]
    pub codes: Option<String>,
    #[arg(long, global = true, value_name = "on|off")]
    pub compensation: Option<String>,
    #[arg(long, global = true, value_name = "two-read|one-read|oracle")]
    pub identify_mode: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub wl_count: Option<String>,
    /// Single code: masking redundancy (with `--r`).
    #[arg(long, global = true, value_name = "N")]
    pub l: Option<String>,
    /// Single code: error-correction redundancy (with `--l`).
    #[arg(long, global = true, value_name = "N")]
    pub r: Option<String>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut add = |k: &'static str, val: &Option<String>| {
            if let Some(x) = val {
                v.push((k, x.clone()));
            }
        };
        add("seed", &self.seed);
        add("trials", &self.trials);
        add("threads", &self.threads);
        add("sigma_fast", &self.sigma_fast);
        add("sigma_random", &self.sigma_random);
        add("zeta", &self.zeta);
        add("codes", &self.codes);
        add("compensation", &self.compensation);
        add("identify_mode", &self.identify_mode);
        add("wl_count", &self.wl_count);
        add("l", &self.l);
        add("r", &self.r);
        v
    }
}

/// Everything a run needs beyond the simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub sim: SimConfig<f64>,
    pub zeta_list: Vec<f64>,
    pub sigma_fast_list: Vec<f64>,
    pub sigma_random_list: Vec<f64>,
    pub bin_width: f64,
    pub out: PathBuf,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            zeta_list: vec![0.1, 0.2, 0.3, 0.4],
            sigma_fast_list: vec![0.40, 0.45, 0.50],
            sigma_random_list: vec![0.20, 0.25, 0.30],
            bin_width: 0.05,
            out: PathBuf::from("out"),
        }
    }
}

/// Parses `key = value` lines. Later duplicates win.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}", i + 1), "expected `key = value`"))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| config_err(key, format!("`{v}`: {e}")))
}

fn float_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|x| num::<f64>(key, x.trim())).collect()
}

fn on_off(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(config_err(key, format!("expected on|off, got `{v}`"))),
    }
}

fn parse_codes(v: &str) -> Result<Vec<CodeSpec>, CliError> {
    if v == "all" {
        return Ok(table_codes());
    }
    let table = table_codes();
    v.split(',')
        .map(|x| {
            let i: usize = num("codes", x.trim())?;
            table.get(i).copied().ok_or_else(|| config_err("codes", format!("code index {i} outside 0..=10")))
        })
        .collect()
}

impl RunSettings {
    /// Defaults, then the config file, then flags.
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        if let Some(path) = &flags.config {
            let text = fs::read_to_string(path).map_err(|e| config_err("config", format!("{}: {e}", path.display())))?;
            pairs.extend(parse_kv(&text)?);
        }
        pairs.extend(flags.pairs().into_iter().map(|(k, v)| (k.to_string(), v)));
        let mut s = Self::default();
        if let Some(out) = &flags.out {
            s.out = out.clone();
        }
        s.apply(&pairs)?;
        s.validate()?;
        Ok(s)
    }

    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<(), CliError> {
        let (mut m, mut k, mut l, mut r) = (None, None, None, None);
        let (mut eps0, mut eps1, mut p) = (0.0, 0.0, 0.0);
        let mut synthetic_set = false;
        let c = &mut self.sim;
        for (key, v) in pairs {
            let key = key.as_str();
            match key {
                "seed" => c.master_seed = num(key, v)?,
                "trials" => c.trials = num(key, v)?,
                "threads" => c.threads = Some(num(key, v)?),
                "wl_count" => c.wl_count = num(key, v)?,
                "bl_count" => c.bl_count = num(key, v)?,
                "codes" => c.codes = parse_codes(v)?,
                "compensation" => c.compensation = v.parse::<Compensation>().map_err(|e| config_err(key, e))?,
                "identify_mode" => c.identify_mode = v.parse::<IdentifyMode>().map_err(|e| config_err(key, e))?,
                "per_zeta_optimum" => c.per_zeta_optimum = on_off(key, v)?,
                "m" => m = Some(num::<u32>(key, v)?),
                "k" => k = Some(num::<usize>(key, v)?),
                "l" => l = Some(num::<usize>(key, v)?),
                "r" => r = Some(num::<usize>(key, v)?),
                "sigma_fast" | "detrap_sigma" => c.channel.detrap_sigma = num(key, v)?,
                "sigma_random" | "random_sigma" => c.channel.random_sigma = num(key, v)?,
                "zeta" | "identify_level" => c.channel.identify_level = num(key, v)?,
                "eta" | "read_level" => c.channel.read_level = num(key, v)?,
                "erase_mean" => c.channel.erase_mean = num(key, v)?,
                "erase_sigma" => c.channel.erase_sigma = num(key, v)?,
                "verify_level" | "nu" => c.channel.verify_level = num(key, v)?,
                "step" | "delta_vpp" => c.channel.step = num(key, v)?,
                "gamma_wl" | "gamma" => c.channel.gamma_wl = num(key, v)?,
                "gamma_bl" => c.channel.gamma_bl = num(key, v)?,
                "gamma_ssl" => c.channel.gamma_ssl = num(key, v)?,
                "detrap_mean" => c.channel.detrap_mean = num(key, v)?,
                "detrap_fraction" => c.channel.detrap_fraction = num(key, v)?,
                "eps0" => {
                    eps0 = num(key, v)?;
                    synthetic_set = true;
                }
                "eps1" => {
                    eps1 = num(key, v)?;
                    synthetic_set = true;
                }
                "p" | "crossover" => {
                    p = num(key, v)?;
                    synthetic_set = true;
                }
                "zeta_list" => self.zeta_list = float_list(key, v)?,
                "sigma_fast_list" => self.sigma_fast_list = float_list(key, v)?,
                "sigma_random_list" => self.sigma_random_list = float_list(key, v)?,
                "bin_width" => self.bin_width = num(key, v)?,
                "out" => self.out = PathBuf::from(v),
                other => return Err(config_err(other, "unknown key")),
            }
        }
        if l.is_some() || r.is_some() {
            let m = m.unwrap_or(10);
            let k = k.unwrap_or(923);
            let (Some(l), Some(r)) = (l, r) else {
                return Err(config_err(if l.is_none() { "l" } else { "r" }, "`l` and `r` must be given together"));
            };
            let code = CodeSpec::new(m, k, l, r);
            if k + l + r != code.n() {
                return Err(config_err("l", format!("k + l + r = {} but n = {}", k + l + r, code.n())));
            }
            self.sim.codes = vec![code];
            self.sim.bl_count = code.n();
        } else if m.is_some() || k.is_some() {
            return Err(config_err(if m.is_some() { "m" } else { "k" }, "only meaningful together with `l` and `r`"));
        }
        if synthetic_set {
            self.sim.defect_source = DefectSource::Synthetic { eps0, eps1, p };
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.sim.validate().map_err(|e| match e {
            PipelineError::InvalidConfig { field, reason } => config_err(field, reason),
            PipelineError::Channel(crate::channel::ChannelError::InvalidParams { field, reason }) => {
                config_err(field, reason)
            }
            other => CliError::Pipeline(other),
        })?;
        if self.bin_width.is_nan() || self.bin_width <= 0.0 {
            return Err(config_err("bin_width", "must be positive"));
        }
        for (key, list) in [
            ("zeta_list", &self.zeta_list),
            ("sigma_fast_list", &self.sigma_fast_list),
            ("sigma_random_list", &self.sigma_random_list),
        ] {
            if list.is_empty() || list.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(config_err(key, "needs one or more finite non-negative values"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    pub master_seed: u64,
    pub config: RunSettings,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputRecord>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Writes the tables and their manifests into `settings.out`.
fn publish(
    command: Command,
    settings: &RunSettings,
    started: &str,
    tables: &[(&str, Table)],
) -> Result<Vec<PathBuf>, CliError> {
    let dir = &settings.out;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut records = Vec::new();
    let mut written = Vec::new();
    for (stem, table) in tables {
        let path = dir.join(format!("{stem}.csv"));
        emit_csv(table, &path).map_err(io_err(&path))?;
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        records.push((
            *stem,
            OutputRecord {
                file: format!("{stem}.csv"),
                sha256: hex::encode(Sha256::digest(&bytes)),
                rows: table.rows.len(),
            },
        ));
        written.push(path);
    }
    let finished = now();
    for (stem, _) in &records {
        let manifest = RunManifest {
            command: command.name().to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: settings.sim.master_seed,
            config: settings.clone(),
            started: started.to_string(),
            finished: finished.clone(),
            outputs: records.iter().map(|(_, r)| r.clone()).collect(),
        };
        let path = dir.join(format!("{stem}.manifest.json"));
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, json + "\n").map_err(io_err(&path))?;
    }
    Ok(written)
}

pub fn sweep_table(sweeps: &[AllocationSweep]) -> Table {
    let mut t = Table::new(SWEEP_HEADER.to_vec());
    for s in sweeps {
        for row in &s.rows {
            t.push(sweep_cells(row));
        }
    }
    t
}

fn sweep_cells(row: &crate::pipeline::SweepRow) -> Vec<Cell> {
    let st = &row.stats;
    vec![
        row.point.sigma_fast.into(),
        row.point.sigma_random.into(),
        row.point.zeta.into(),
        row.l.into(),
        row.r.into(),
        st.trials_total.into(),
        st.failures.into(),
        st.p_fail.into(),
        st.ci_lo.into(),
        st.ci_hi.into(),
        st.mean_identified.into(),
        st.mean_raw_ber.into(),
        row.is_optimal.into(),
    ]
}

fn optimum_table(sweeps: &[AllocationSweep]) -> Table {
    let mut t = Table::new(SWEEP_HEADER.to_vec());
    for s in sweeps {
        for row in s.rows.iter().filter(|r| r.is_optimal) {
            t.push(sweep_cells(row));
        }
    }
    t
}

fn sweep_run(command: Command, s: &RunSettings, points: Vec<SweepPoint>, stem: &str) -> Result<Vec<PathBuf>, CliError> {
    let started = now();
    let mut sweeps = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        eprintln!("[{}/{}] sigma_fast={} sigma_random={} zeta={}", i + 1, points.len(), p.sigma_fast, p.sigma_random, p.zeta);
        let mut one = s.sim.clone();
        one.per_zeta_optimum = true;
        sweeps.extend(sweep_points(&one, std::slice::from_ref(p))?);
    }
    if command == Command::ZetaSweep && !s.sim.per_zeta_optimum {
        crate::pipeline::share_optimum(&mut sweeps);
    }
    let optimum_stem = format!("{stem}_optimum");
    publish(command, s, &started, &[(stem, sweep_table(&sweeps)), (&optimum_stem, optimum_table(&sweeps))])
}

fn base_point(s: &RunSettings) -> SweepPoint {
    SweepPoint::of(&s.sim)
}

fn distribution(s: &RunSettings) -> Result<Vec<PathBuf>, CliError> {
    let started = now();
    let spec = s.sim.codes.iter().copied().max_by_key(|c| c.l).expect("validated non-empty");
    let code = spec.build().map_err(PipelineError::from)?;
    let snaps = voltage_snapshots(&s.sim, &code)?;
    let mut t = Table::new(HISTOGRAM_HEADER.to_vec());
    for (name, values) in [
        ("before-detrap", &snaps.before_detrap),
        ("after-detrap", &snaps.after_detrap),
        ("after-compensation", &snaps.after_compensation),
    ] {
        for (center, count) in histogram(values.iter().copied(), s.bin_width) {
            t.push(vec![name.into(), center.into(), count.into()]);
        }
    }
    publish(Command::Distribution, s, &started, &[("distribution", t)])
}

fn synthetic(s: &RunSettings) -> Result<Vec<PathBuf>, CliError> {
    let started = now();
    let mut cfg = s.sim.clone();
    if !matches!(cfg.defect_source, DefectSource::Synthetic { .. }) {
        cfg.defect_source = DefectSource::Synthetic { eps0: 0.0, eps1: 0.0, p: 0.0 };
    }
    let DefectSource::Synthetic { eps0, eps1, p } = cfg.defect_source else { unreachable!() };
    let stats = run_synthetic_defects(&cfg)?;
    let mut t = Table::new(vec![
        "l", "r", "eps0", "eps1", "p", "trials", "failures", "p_fail", "ci_lo", "ci_hi", "mean_defects", "mean_raw_ber",
    ]);
    for (c, st) in cfg.codes.iter().zip(&stats) {
        t.push(vec![
            c.l.into(),
            c.r.into(),
            eps0.into(),
            eps1.into(),
            p.into(),
            st.trials_total.into(),
            st.failures.into(),
            st.p_fail.into(),
            st.ci_lo.into(),
            st.ci_hi.into(),
            st.mean_identified.into(),
            st.mean_raw_ber.into(),
        ]);
    }
    publish(Command::Synthetic, s, &started, &[("synthetic", t)])
}

/// Executes one command. Returns the data files written.
pub fn run(command: Command, s: &RunSettings) -> Result<Vec<PathBuf>, CliError> {
    let base = base_point(s);
    match command {
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            match checks.iter().find(|c| !c.passed) {
                Some(c) => Err(CliError::Selftest(c.name.to_string())),
                None => Ok(Vec::new()),
            }
        }
        Command::Distribution => distribution(s),
        Command::ZetaSweep => {
            let points = s.zeta_list.iter().map(|&zeta| SweepPoint { zeta, ..base }).collect();
            sweep_run(command, s, points, "zeta_sweep")
        }
        Command::FastSweep => {
            let points = s.sigma_fast_list.iter().map(|&sigma_fast| SweepPoint { sigma_fast, ..base }).collect();
            sweep_run(command, s, points, "fast_sweep")
        }
        Command::RandomSweep => {
            let points = s.sigma_random_list.iter().map(|&sigma_random| SweepPoint { sigma_random, ..base }).collect();
            sweep_run(command, s, points, "random_sweep")
        }
        Command::Synthetic => synthetic(s),
    }
}

/// Process entry point; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let settings = match RunSettings::resolve(&cli.flags) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match run(cli.command, &settings) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Voltage histogram of one grid split by S0 / S1 / identified S1, as a
/// table in the histogram schema.
pub fn grid_histogram_table<V: crate::channel::Voltage>(
    grid: &crate::channel::CellGrid<V>,
    identified: &[(crate::channel::Page, Vec<usize>)],
    bin_width: f64,
) -> Table {
    let mut t = Table::new(HISTOGRAM_HEADER.to_vec());
    for row in grid_histogram(grid, identified, bin_width) {
        t.push(vec![row.population.into(), row.bin_center.into(), row.count.into()]);
    }
    t
}
