//! Block-level experiments: write a block with or without compensation,
//! read it back, and count per-codeword decoding failures.
//!
//! Each word line holds one codeword (`bl_count = n`). Word lines are
//! written in ascending order. Cells of word line `i` found in `[η, ζ)`
//! after its write become stuck-at-0 defects for word line `i + 1`, so the
//! upper cells get programmed and lift them through interference.
//!
//! Trials are independent blocks. Trial `t` draws all its randomness from
//! ChaCha streams keyed by [`trial_seed`]`(master_seed, t)`; every code in
//! a sweep sees the same streams, so allocations are compared on common
//! random numbers.

mod stats;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{
    apply_fast_detrapping, erase_block, identify_detrapped, interfere, program_page, read_page, CellGrid,
    ChannelError, ChannelParams, Dims, IdentifyMode, Level, Voltage,
};
use crate::gf2::BitVec;
use crate::pbch::{pbch_construct, random_defect_pattern, DefectPattern, EncodeOutcome, PbchCode, PbchError};

pub use stats::{wilson_interval, FailureStats, Tally};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Pbch(#[from] PbchError),
    #[error("invalid configuration `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

fn invalid<T>(field: &'static str, reason: impl Into<String>) -> Result<T, PipelineError> {
    Err(PipelineError::InvalidConfig { field, reason: reason.into() })
}

/// Shape of a partitioned BCH code `[2^m − 1, k, l, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeSpec {
    pub m: u32,
    pub k: usize,
    pub l: usize,
    pub r: usize,
}

impl CodeSpec {
    pub fn new(m: u32, k: usize, l: usize, r: usize) -> Self {
        Self { m, k, l, r }
    }

    pub fn n(&self) -> usize {
        (1usize << self.m) - 1
    }

    pub fn build(&self) -> Result<PbchCode, PbchError> {
        pbch_construct(self.m, self.k, self.l, self.r)
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.n(), self.k, self.l, self.r)
    }
}

/// The eleven `[1023, 923, l, 100 − l]` allocations, `l = 0, 10, …, 100`.
pub fn table_codes() -> Vec<CodeSpec> {
    (0..=10).map(|i| CodeSpec::new(10, 923, 10 * i, 100 - 10 * i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compensation {
    #[default]
    On,
    Off,
}

impl fmt::Display for Compensation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compensation::On => "on",
            Compensation::Off => "off",
        })
    }
}

impl FromStr for Compensation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" => Ok(Compensation::On),
            "off" => Ok(Compensation::Off),
            other => Err(format!("expected on|off, got `{other}`")),
        }
    }
}

/// Where defects come from: the flash channel, or an i.i.d. stuck-at
/// channel followed by a BSC with crossover `p`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectSource {
    #[default]
    ChannelIdentified,
    Synthetic { eps0: f64, eps1: f64, p: f64 },
}

/// Full experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<V> {
    pub channel: ChannelParams<V>,
    pub codes: Vec<CodeSpec>,
    pub wl_count: usize,
    pub bl_count: usize,
    /// Blocks per sweep point (each block yields `wl_count` codewords).
    pub trials: u64,
    pub master_seed: u64,
    pub identify_mode: IdentifyMode,
    pub compensation: Compensation,
    pub defect_source: DefectSource,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Mark the best allocation separately for every identify level.
    pub per_zeta_optimum: bool,
}

/// Blocks per point by default: 4200 × 24 word lines ≥ 10^5 codewords.
pub const DEFAULT_TRIALS: u64 = 4200;

impl<V: Voltage> Default for SimConfig<V> {
    fn default() -> Self {
        Self {
            channel: ChannelParams::default(),
            codes: table_codes(),
            wl_count: 24,
            bl_count: 1023,
            trials: DEFAULT_TRIALS,
            master_seed: 0x5eed,
            identify_mode: IdentifyMode::TwoRead,
            compensation: Compensation::On,
            defect_source: DefectSource::ChannelIdentified,
            threads: None,
            per_zeta_optimum: true,
        }
    }
}

impl<V: Voltage> SimConfig<V> {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.channel.validate()?;
        if self.codes.is_empty() {
            return invalid("codes", "at least one code is required");
        }
        for c in &self.codes {
            if !(2..=16).contains(&c.m) {
                return invalid("codes", format!("{c}: field degree must be in 2..=16"));
            }
            if c.k + c.l + c.r != c.n() {
                return invalid("codes", format!("{c}: k + l + r = {} ≠ n", c.k + c.l + c.r));
            }
            if c.n() != self.bl_count {
                return invalid("bl_count", format!("{} ≠ code length {}", self.bl_count, c.n()));
            }
        }
        if self.trials == 0 {
            return invalid("trials", "must be at least 1");
        }
        if self.wl_count == 0 {
            return invalid("wl_count", "must be at least 1");
        }
        if self.threads == Some(0) {
            return invalid("threads", "must be at least 1");
        }
        if let DefectSource::Synthetic { eps0, eps1, p } = self.defect_source {
            if !(0.0..=1.0).contains(&eps0) || !(0.0..=1.0).contains(&eps1) || eps0 + eps1 > 1.0 {
                return invalid("defect_source", "need eps0, eps1 ≥ 0 and eps0 + eps1 ≤ 1");
            }
            if !(0.0..=1.0).contains(&p) {
                return invalid("defect_source", "crossover p must be in [0, 1]");
            }
        }
        Ok(())
    }

    fn dims(&self) -> Dims {
        Dims::planar(self.wl_count, self.bl_count)
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    mix64(mix64(master) ^ trial)
}

/// Independent random streams of one trial, one per purpose, so that
/// changing what one stage consumes never shifts another.
#[derive(Debug, Clone)]
pub struct BlockRng {
    pub messages: ChaCha8Rng,
    pub erase: ChaCha8Rng,
    pub detrap: ChaCha8Rng,
    pub identify: ChaCha8Rng,
    pub read: ChaCha8Rng,
}

impl BlockRng {
    pub fn new(seed: u64) -> Self {
        let stream = |s: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(s);
            r
        };
        Self { messages: stream(0), erase: stream(1), detrap: stream(2), identify: stream(3), read: stream(4) }
    }

    pub fn for_trial(master: u64, trial: u64) -> Self {
        Self::new(trial_seed(master, trial))
    }
}

pub fn random_message<R: Rng + ?Sized>(k: usize, rng: &mut R) -> BitVec {
    let words = (0..k.div_ceil(64)).map(|_| rng.random::<u64>()).collect();
    BitVec::from_words(words, k)
}

/// Identified cells become stuck-at-0 defects: programming them to S1
/// produces the compensating interference.
pub fn defects_from_identified(n: usize, positions: &[usize]) -> Result<DefectPattern, PbchError> {
    DefectPattern::stuck_at_zero(n, positions)
}

/// What happened to one word line during the block write.
#[derive(Debug, Clone, PartialEq)]
pub struct WlRecord<V> {
    pub encode: EncodeOutcome,
    /// Cells of this word line found in `[η, ζ)` right after its write.
    pub identified: Vec<usize>,
    /// Page voltages right after ISPP.
    pub after_program: Vec<V>,
    /// Page voltages right after fast detrapping, before the next word line.
    pub after_detrap: Vec<V>,
    /// Per-cell shift applied by ISPP.
    pub program_shift: Vec<V>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockWrite<V> {
    pub grid: CellGrid<V>,
    pub wls: Vec<WlRecord<V>>,
}

/// Writes one codeword per word line onto an erased grid, in ascending
/// word-line order: encode (masking the previous line's identified cells
/// when compensation is on), program, fast detrapping, interference onto
/// the line below, identify reads.
pub fn write_block<V: Voltage>(
    grid: CellGrid<V>,
    messages: &[BitVec],
    code: &PbchCode,
    config: &SimConfig<V>,
    rng: &mut BlockRng,
) -> Result<BlockWrite<V>, PipelineError> {
    let dims = grid.dims();
    if messages.len() != dims.wl {
        return Err(PipelineError::InvalidConfig {
            field: "wl_count",
            reason: format!("{} messages for {} word lines", messages.len(), dims.wl),
        });
    }
    let params = &config.channel;
    let mut grid = grid;
    let mut wls: Vec<WlRecord<V>> = Vec::with_capacity(dims.wl);
    for (wl, msg) in messages.iter().enumerate() {
        let defects = match (config.compensation, wls.last()) {
            (Compensation::On, Some(prev)) => defects_from_identified(code.n(), &prev.identified)?,
            _ => DefectPattern::none(code.n()),
        };
        let encode = code.mask_encode(msg, &defects)?;
        let program_shift = program_page(&mut grid, wl, &encode.codeword, params)?;
        let after_program = grid.voltages(wl).to_vec();
        apply_fast_detrapping(&mut grid, wl, params, &mut rng.detrap);
        let after_detrap = grid.voltages(wl).to_vec();
        interfere(&mut grid, wl, &program_shift, params)?;
        let identified =
            identify_detrapped(&grid, wl, params, &mut rng.identify, config.identify_mode, Some(&encode.codeword))?;
        wls.push(WlRecord { encode, identified, after_program, after_detrap, program_shift });
    }
    Ok(BlockWrite { grid, wls })
}

/// Decode result of one word line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WlOutcome {
    pub success: bool,
    pub raw_errors: usize,
    pub identified: usize,
    pub masked: bool,
    pub unmasked_count: usize,
    /// Top word line: nothing above it can compensate.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialResult {
    pub wls: Vec<WlOutcome>,
}

impl TrialResult {
    pub fn tally(&self) -> Tally {
        let mut t = Tally { blocks: 1, ..Default::default() };
        for w in &self.wls {
            t.codewords += 1;
            t.failures += u64::from(!w.success);
            t.raw_errors += w.raw_errors as u64;
            t.identified += w.identified as u64;
            t.unmasked_words += u64::from(!w.masked);
            if w.boundary {
                t.boundary_codewords += 1;
                t.boundary_failures += u64::from(!w.success);
            }
        }
        t.block_failures = u64::from(t.failures > 0);
        t
    }
}

/// Reads every word line once at η with fresh noise and decodes it. A
/// word line succeeds iff the recovered message equals the written one,
/// so miscorrections count as failures.
pub fn evaluate_block<V: Voltage>(
    block: &BlockWrite<V>,
    messages: &[BitVec],
    code: &PbchCode,
    config: &SimConfig<V>,
    rng: &mut BlockRng,
) -> TrialResult {
    let top = block.wls.len().saturating_sub(1);
    let wls = block
        .wls
        .iter()
        .zip(messages)
        .enumerate()
        .map(|(wl, (rec, msg))| {
            let read = read_page(&block.grid, wl, config.channel.read_level, &config.channel, &mut rng.read, true);
            let raw_errors = read.bits.hamming_distance(&rec.encode.codeword);
            let success = matches!(code.decode(&read.bits), Ok((m, _)) if &m == msg);
            WlOutcome {
                success,
                raw_errors,
                identified: rec.identified.len(),
                masked: rec.encode.masked,
                unmasked_count: rec.encode.unmasked_count,
                boundary: wl == top,
            }
        })
        .collect();
    TrialResult { wls }
}

/// One full block trial of `code` with the given streams.
pub fn simulate_block<V: Voltage>(
    code: &PbchCode,
    config: &SimConfig<V>,
    rng: &mut BlockRng,
) -> Result<(BlockWrite<V>, TrialResult), PipelineError> {
    let messages: Vec<BitVec> = (0..config.wl_count).map(|_| random_message(code.k(), &mut rng.messages)).collect();
    let grid = erase_block(config.dims(), &config.channel, &mut rng.erase);
    let block = write_block(grid, &messages, code, config, rng)?;
    let result = evaluate_block(&block, &messages, code, config, rng);
    Ok((block, result))
}

pub fn build_codes<V: Voltage>(config: &SimConfig<V>) -> Result<Vec<Arc<PbchCode>>, PipelineError> {
    config.codes.iter().map(|c| Ok(Arc::new(c.build()?))).collect()
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Tallies for every code, summed over trials. Integer sums make the
/// result independent of thread count and scheduling.
pub fn run_tallies<V: Voltage>(config: &SimConfig<V>, codes: &[Arc<PbchCode>]) -> Result<Vec<Tally>, PipelineError> {
    config.validate()?;
    let zero = || Ok(vec![Tally::default(); codes.len()]);
    let combine = |a: Result<Vec<Tally>, PipelineError>, b: Result<Vec<Tally>, PipelineError>| {
        let (mut a, b) = (a?, b?);
        for (x, y) in a.iter_mut().zip(&b) {
            x.merge(y);
        }
        Ok(a)
    };
    in_pool(config.threads, || {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| -> Result<Vec<Tally>, PipelineError> {
                codes
                    .iter()
                    .map(|code| {
                        let mut rng = BlockRng::for_trial(config.master_seed, trial);
                        match config.defect_source {
                            DefectSource::ChannelIdentified => Ok(simulate_block(code, config, &mut rng)?.1.tally()),
                            DefectSource::Synthetic { eps0, eps1, p } => {
                                synthetic_trial(code, eps0, eps1, p, &mut rng.messages)
                            }
                        }
                    })
                    .collect()
            })
            .reduce(zero, combine)
    })?
}

/// [`FailureStats`] for every code of the configuration, in order.
pub fn run_trials<V: Voltage>(config: &SimConfig<V>) -> Result<Vec<FailureStats>, PipelineError> {
    let codes = build_codes(config)?;
    let tallies = run_tallies(config, &codes)?;
    Ok(tallies.iter().map(|t| FailureStats::from_tally(t, config.bl_count)).collect())
}

fn synthetic_trial<R: Rng + ?Sized>(code: &PbchCode, eps0: f64, eps1: f64, p: f64, rng: &mut R) -> Result<Tally, PipelineError> {
    let n = code.n();
    let msg = random_message(code.k(), rng);
    let defects = random_defect_pattern(n, eps0, eps1, rng)?;
    let enc = code.mask_encode(&msg, &defects)?;
    let mut out = enc.codeword.clone();
    defects.apply(&mut out);
    let mut stuck = vec![false; n];
    for &pos in defects.positions() {
        stuck[pos] = true;
    }
    if p > 0.0 {
        for (j, &s) in stuck.iter().enumerate() {
            if !s && rng.random_bool(p) {
                out.flip(j);
            }
        }
    }
    let success = matches!(code.decode(&out), Ok((m, _)) if m == msg);
    Ok(Tally {
        codewords: 1,
        failures: u64::from(!success),
        raw_errors: out.hamming_distance(&enc.codeword) as u64,
        identified: defects.len() as u64,
        unmasked_words: u64::from(!enc.masked),
        blocks: 1,
        block_failures: u64::from(!success),
        boundary_codewords: 0,
        boundary_failures: 0,
    })
}

/// Pure defect-channel experiment: i.i.d. stuck cells, then a BSC on the
/// normal cells. One codeword per trial.
pub fn run_synthetic_defects<V: Voltage>(config: &SimConfig<V>) -> Result<Vec<FailureStats>, PipelineError> {
    if !matches!(config.defect_source, DefectSource::Synthetic { .. }) {
        return invalid("defect_source", "synthetic run needs a synthetic defect source");
    }
    run_trials(config)
}

/// Operating point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub sigma_fast: f64,
    pub sigma_random: f64,
    pub zeta: f64,
}

impl SweepPoint {
    pub fn apply<V: Voltage>(&self, config: &SimConfig<V>) -> SimConfig<V> {
        let mut c = config.clone();
        c.channel.detrap_sigma = V::of(self.sigma_fast);
        c.channel.random_sigma = V::of(self.sigma_random);
        c.channel.identify_level = V::of(self.zeta);
        c
    }

    pub fn of<V: Voltage>(config: &SimConfig<V>) -> Self {
        Self {
            sigma_fast: config.channel.detrap_sigma.as_f64(),
            sigma_random: config.channel.random_sigma.as_f64(),
            zeta: config.channel.identify_level.as_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub l: usize,
    pub r: usize,
    pub stats: FailureStats,
    pub is_optimal: bool,
}

/// One allocation sweep: rows ordered by `l`, best allocation flagged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationSweep {
    pub point: SweepPoint,
    pub rows: Vec<SweepRow>,
    pub best: usize,
}

impl AllocationSweep {
    pub fn best_row(&self) -> &SweepRow {
        &self.rows[self.best]
    }

    pub fn row_for_l(&self, l: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.l == l)
    }

    fn set_best(&mut self, best: usize) {
        self.best = best;
        for (i, r) in self.rows.iter_mut().enumerate() {
            r.is_optimal = i == best;
        }
    }
}

/// Index of the smallest point estimate; ties go to the smaller `l`.
pub fn argmin_allocation(rows: &[(usize, f64)]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

fn assemble(point: SweepPoint, codes: &[CodeSpec], stats: Vec<FailureStats>) -> AllocationSweep {
    let mut rows: Vec<SweepRow> = codes
        .iter()
        .zip(stats)
        .map(|(c, stats)| SweepRow { point, l: c.l, r: c.r, stats, is_optimal: false })
        .collect();
    rows.sort_by_key(|r| r.l);
    let keys: Vec<(usize, f64)> = rows.iter().map(|r| (r.l, r.stats.p_fail)).collect();
    let best = argmin_allocation(&keys).unwrap_or(0);
    let mut sweep = AllocationSweep { point, rows, best };
    sweep.set_best(best);
    sweep
}

/// Runs every code of the configuration and picks `(l*, r*)`.
pub fn sweep_allocation<V: Voltage>(config: &SimConfig<V>) -> Result<AllocationSweep, PipelineError> {
    if config.codes.len() < 2 {
        return invalid("codes", "an allocation sweep needs at least two codes");
    }
    let stats = run_trials(config)?;
    Ok(assemble(SweepPoint::of(config), &config.codes, stats))
}

/// Allocation sweeps at several operating points, building each code once.
pub fn sweep_points<V: Voltage>(config: &SimConfig<V>, points: &[SweepPoint]) -> Result<Vec<AllocationSweep>, PipelineError> {
    if config.codes.len() < 2 {
        return invalid("codes", "an allocation sweep needs at least two codes");
    }
    let codes = build_codes(config)?;
    let mut sweeps = Vec::with_capacity(points.len());
    for point in points {
        let cfg = point.apply(config);
        let tallies = run_tallies(&cfg, &codes)?;
        let stats = tallies.iter().map(|t| FailureStats::from_tally(t, cfg.bl_count)).collect();
        sweeps.push(assemble(*point, &config.codes, stats));
    }
    if !config.per_zeta_optimum {
        share_optimum(&mut sweeps);
    }
    Ok(sweeps)
}

/// Holds one allocation across all sweeps: the `l` with the lowest pooled
/// failure rate (ties to smaller `l`).
pub fn share_optimum(sweeps: &mut [AllocationSweep]) {
    let Some(first) = sweeps.first() else { return };
    let pooled: Vec<(usize, f64)> = first
        .rows
        .iter()
        .map(|row| {
            let (f, n) = sweeps
                .iter()
                .filter_map(|s| s.row_for_l(row.l))
                .fold((0u64, 0u64), |(f, n), r| (f + r.stats.failures, n + r.stats.trials_total));
            (row.l, if n == 0 { 0.0 } else { f as f64 / n as f64 })
        })
        .collect();
    let Some(i) = argmin_allocation(&pooled) else { return };
    let l = pooled[i].0;
    for s in sweeps.iter_mut() {
        if let Some(idx) = s.rows.iter().position(|r| r.l == l) {
            s.set_best(idx);
        }
    }
}

/// Threshold voltages of programmed cells at three moments, pooled over
/// trials: right after ISPP, right after fast detrapping, and at the end
/// of the block write.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VoltageSnapshots {
    pub before_detrap: Vec<f64>,
    pub after_detrap: Vec<f64>,
    pub after_compensation: Vec<f64>,
    /// Identified cells below the top word line: after detrapping and at
    /// the end of the write, pairwise.
    pub identified_after_detrap: Vec<f64>,
    pub identified_final: Vec<f64>,
    /// Programmed cells whose final true voltage is below η.
    pub s1_below_read: u64,
    pub s1_total: u64,
}

impl VoltageSnapshots {
    pub fn s1_below_fraction(&self) -> f64 {
        if self.s1_total == 0 {
            0.0
        } else {
            self.s1_below_read as f64 / self.s1_total as f64
        }
    }

    /// Mean final minus mean post-detrap voltage of identified cells.
    pub fn identified_rise(&self) -> Option<f64> {
        let n = self.identified_final.len();
        if n == 0 {
            return None;
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        Some(mean(&self.identified_final) - mean(&self.identified_after_detrap))
    }
}

/// Collects [`VoltageSnapshots`] over `config.trials` blocks of one code.
pub fn voltage_snapshots<V: Voltage>(config: &SimConfig<V>, code: &PbchCode) -> Result<VoltageSnapshots, PipelineError> {
    config.validate()?;
    let mut out = VoltageSnapshots::default();
    let eta = config.channel.read_level;
    for trial in 0..config.trials {
        let mut rng = BlockRng::for_trial(config.master_seed, trial);
        let (block, _) = simulate_block(code, config, &mut rng)?;
        let top = block.wls.len() - 1;
        for (wl, rec) in block.wls.iter().enumerate() {
            let intended = block.grid.intended(wl);
            let fin = block.grid.voltages(wl);
            for j in (0..intended.len()).filter(|&j| intended[j] == Level::S1) {
                out.before_detrap.push(rec.after_program[j].as_f64());
                out.after_detrap.push(rec.after_detrap[j].as_f64());
                out.after_compensation.push(fin[j].as_f64());
                out.s1_total += 1;
                out.s1_below_read += u64::from(fin[j] < eta);
            }
            if wl < top {
                for &j in &rec.identified {
                    out.identified_after_detrap.push(rec.after_detrap[j].as_f64());
                    out.identified_final.push(fin[j].as_f64());
                }
            }
        }
    }
    Ok(out)
}
