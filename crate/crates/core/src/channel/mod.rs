//! Threshold-voltage simulator for an SLC 3D vertical flash block.
//!
//! The write path is erase → ISPP programming → fast detrapping, with
//! capacitive interference from each programmed page onto its already
//! written neighbours. Reads compare the voltage plus fresh Gaussian noise
//! against a level: below the level reads as `1`.
//!
//! The random part of the write noise comes only from the erase
//! distribution. ISPP adds exact multiples of the step voltage, so each
//! programmed cell lands in `[ν, ν + ΔVpp)`.

mod grid;
mod histogram;
mod params;
mod voltage;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::gf2::BitVec;

pub use grid::{CellGrid, Dims, Level, Page};
pub use histogram::{grid_histogram, histogram, HistogramRow, Population};
pub use params::ChannelParams;
pub use voltage::Voltage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("invalid channel parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("page (wl {}, ssl {}) already programmed since the last erase", .0.wl, .0.ssl)]
    AlreadyProgrammed(Page),
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("one-read identification needs the original page data")]
    MissingOriginal,
}

/// How cells hit by fast detrapping are located after a page is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentifyMode {
    /// Reads at η and at ζ; cells reading 0 at η and 1 at ζ.
    #[default]
    TwoRead,
    /// One read at ζ combined with the original data: cells written as S1
    /// that read 1 at ζ.
    OneRead,
    /// Noise-free reference: S1 cells whose true voltage is below ζ.
    Oracle,
}

impl fmt::Display for IdentifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdentifyMode::TwoRead => "two-read",
            IdentifyMode::OneRead => "one-read",
            IdentifyMode::Oracle => "oracle",
        })
    }
}

impl FromStr for IdentifyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-read" => Ok(IdentifyMode::TwoRead),
            "one-read" => Ok(IdentifyMode::OneRead),
            "oracle" => Ok(IdentifyMode::Oracle),
            other => Err(format!("unknown identify mode `{other}` (two-read|one-read|oracle)")),
        }
    }
}

/// Hard-decision read of one page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageBits<V> {
    pub bits: BitVec,
    pub level: V,
}

/// Fresh block: every cell drawn from the erase distribution, nothing
/// written. Voltages are drawn in storage order (SSL group 0 first).
pub fn erase_block<V: Voltage, R: Rng + ?Sized>(dims: Dims, params: &ChannelParams<V>, rng: &mut R) -> CellGrid<V> {
    let mut grid = CellGrid::uniform(dims, params.erase_mean);
    grid.erase(params, rng);
    grid
}

impl<V: Voltage> CellGrid<V> {
    /// Resets the block: redraws erase voltages and clears program state.
    pub fn erase<R: Rng + ?Sized>(&mut self, params: &ChannelParams<V>, rng: &mut R) {
        for v in &mut self.voltage {
            *v = V::sample_normal(rng, params.erase_mean, params.erase_sigma);
        }
        self.program_shift.fill(V::zero());
        self.intended.fill(Level::S0);
        self.written.fill(false);
    }
}

/// ISPP programming of one page. Cells whose target bit is `0` go to S1:
/// pulses of exactly `step` are applied until the voltage reaches the
/// verify level. Returns the per-cell shift (zero for cells left at S0).
pub fn program_page<V: Voltage>(
    grid: &mut CellGrid<V>,
    page: impl Into<Page>,
    target: &BitVec,
    params: &ChannelParams<V>,
) -> Result<Vec<V>, ChannelError> {
    let page = page.into();
    let bl = grid.dims().bl;
    if target.len() != bl {
        return Err(ChannelError::LengthMismatch { expected: bl, actual: target.len() });
    }
    if grid.is_written(page) {
        return Err(ChannelError::AlreadyProgrammed(page));
    }
    let (nu, step) = (params.verify_level, params.step);
    let (volts, shifts, intended) = grid.page_parts_mut(page);
    let mut applied = vec![V::zero(); bl];
    for j in 0..bl {
        let level = Level::from_bit(target.get(j));
        intended[j] = level;
        if level == Level::S0 || volts[j] >= nu {
            continue;
        }
        let start = volts[j];
        let mut pulses = ((nu - start) / step).ceil();
        // Guard against rounding leaving the cell a hair under ν.
        while start + pulses * step < nu {
            pulses = pulses + V::one();
        }
        let dv = pulses * step;
        volts[j] = start + dv;
        shifts[j] = shifts[j] + dv;
        applied[j] = dv;
    }
    grid.mark_written(page);
    Ok(applied)
}

/// Adds `γ_wl · shift` to every cell of the victim page: the word-line
/// term of the interference model.
pub fn apply_ici<V: Voltage>(
    grid: &mut CellGrid<V>,
    victim: impl Into<Page>,
    aggressor_shifts: &[V],
    params: &ChannelParams<V>,
) -> Result<(), ChannelError> {
    add_coupled(grid, victim.into(), aggressor_shifts, params.gamma_wl)
}

fn add_coupled<V: Voltage>(grid: &mut CellGrid<V>, victim: Page, shifts: &[V], gamma: V) -> Result<(), ChannelError> {
    let bl = grid.dims().bl;
    if shifts.len() != bl {
        return Err(ChannelError::LengthMismatch { expected: bl, actual: shifts.len() });
    }
    if gamma == V::zero() {
        return Ok(());
    }
    for (v, &dv) in grid.voltages_mut(victim).iter_mut().zip(shifts) {
        *v = *v + gamma * dv;
    }
    Ok(())
}

/// Full interference fan-out of a freshly programmed page onto its
/// already-written neighbours: word-line planes above and below (`γ_wl`),
/// adjacent bit lines within the page (`γ_bl`), and adjacent SSL groups
/// on the same word line (`γ_ssl`). Terms with a zero ratio are skipped.
pub fn interfere<V: Voltage>(
    grid: &mut CellGrid<V>,
    aggressor: impl Into<Page>,
    shifts: &[V],
    params: &ChannelParams<V>,
) -> Result<(), ChannelError> {
    let a = aggressor.into();
    let dims = grid.dims();
    if shifts.len() != dims.bl {
        return Err(ChannelError::LengthMismatch { expected: dims.bl, actual: shifts.len() });
    }
    let mut wl_neighbours = Vec::with_capacity(2);
    if a.wl > 0 {
        wl_neighbours.push(Page::new(a.wl - 1, a.ssl));
    }
    if a.wl + 1 < dims.wl {
        wl_neighbours.push(Page::new(a.wl + 1, a.ssl));
    }
    for victim in wl_neighbours {
        if grid.is_written(victim) {
            add_coupled(grid, victim, shifts, params.gamma_wl)?;
        }
    }
    if params.gamma_bl > V::zero() {
        let bl = dims.bl;
        let lateral: Vec<V> = (0..bl)
            .map(|j| {
                let left = if j > 0 { shifts[j - 1] } else { V::zero() };
                let right = if j + 1 < bl { shifts[j + 1] } else { V::zero() };
                left + right
            })
            .collect();
        add_coupled(grid, a, &lateral, params.gamma_bl)?;
    }
    if params.gamma_ssl > V::zero() {
        let mut ssl_neighbours = Vec::with_capacity(2);
        if a.ssl > 0 {
            ssl_neighbours.push(Page::new(a.wl, a.ssl - 1));
        }
        if a.ssl + 1 < dims.ssl {
            ssl_neighbours.push(Page::new(a.wl, a.ssl + 1));
        }
        for victim in ssl_neighbours {
            if grid.is_written(victim) {
                add_coupled(grid, victim, shifts, params.gamma_ssl)?;
            }
        }
    }
    Ok(())
}

/// Charge loss right after programming: every S1 cell of the page (or a
/// random `detrap_fraction` of them) shifts by a draw from
/// `N(detrap_mean, detrap_sigma²)`.
pub fn apply_fast_detrapping<V: Voltage, R: Rng + ?Sized>(
    grid: &mut CellGrid<V>,
    page: impl Into<Page>,
    params: &ChannelParams<V>,
    rng: &mut R,
) {
    let page = page.into();
    let fraction = params.detrap_fraction;
    let (volts, _, intended) = grid.page_parts_mut(page);
    for (v, &level) in volts.iter_mut().zip(intended.iter()) {
        if level != Level::S1 {
            continue;
        }
        if fraction < 1.0 && !rng.random_bool(fraction) {
            continue;
        }
        *v = *v + V::sample_normal(rng, params.detrap_mean, params.detrap_sigma);
    }
}

/// Binary read at `level`, with fresh `N(0, random_sigma²)` noise per cell
/// when `fresh_noise` is set. A cell reads `1` iff it is below the level.
pub fn read_page<V: Voltage, R: Rng + ?Sized>(
    grid: &CellGrid<V>,
    page: impl Into<Page>,
    level: V,
    params: &ChannelParams<V>,
    rng: &mut R,
    fresh_noise: bool,
) -> PageBits<V> {
    let volts = grid.voltages(page);
    let sigma = if fresh_noise { params.random_sigma } else { V::zero() };
    let bits = BitVec::from_bools(volts.iter().map(|&v| V::sample_normal(rng, v, sigma) < level));
    PageBits { bits, level }
}

/// Locates cells of a just-written page that sagged into `[η, ζ)`.
pub fn identify_detrapped<V: Voltage, R: Rng + ?Sized>(
    grid: &CellGrid<V>,
    page: impl Into<Page>,
    params: &ChannelParams<V>,
    rng: &mut R,
    mode: IdentifyMode,
    original: Option<&BitVec>,
) -> Result<Vec<usize>, ChannelError> {
    let page = page.into();
    match mode {
        IdentifyMode::TwoRead => {
            let at_read = read_page(grid, page, params.read_level, params, rng, true);
            let at_identify = read_page(grid, page, params.identify_level, params, rng, true);
            Ok((0..grid.dims().bl)
                .filter(|&j| !at_read.bits.get(j) && at_identify.bits.get(j))
                .collect())
        }
        IdentifyMode::OneRead => {
            let original = original.ok_or(ChannelError::MissingOriginal)?;
            if original.len() != grid.dims().bl {
                return Err(ChannelError::LengthMismatch { expected: grid.dims().bl, actual: original.len() });
            }
            let at_identify = read_page(grid, page, params.identify_level, params, rng, true);
            Ok((0..grid.dims().bl)
                .filter(|&j| !original.get(j) && at_identify.bits.get(j))
                .collect())
        }
        IdentifyMode::Oracle => {
            let zeta = params.identify_level;
            Ok(grid
                .voltages(page)
                .iter()
                .zip(grid.intended(page))
                .enumerate()
                .filter(|(_, (&v, &level))| level == Level::S1 && v < zeta)
                .map(|(j, _)| j)
                .collect())
        }
    }
}
