use serde::Serialize;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` at 95% confidence.
/// Returns `(0, 1)` for `n = 0`.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    // Clamp so the interval always contains the point estimate despite rounding.
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Integer tallies over codewords (one codeword per word line).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub codewords: u64,
    pub failures: u64,
    pub raw_errors: u64,
    pub identified: u64,
    pub unmasked_words: u64,
    pub blocks: u64,
    pub block_failures: u64,
    /// Codewords on the top word line, which never gets compensated.
    pub boundary_codewords: u64,
    pub boundary_failures: u64,
}

impl Tally {
    pub fn merge(&mut self, other: &Tally) {
        self.codewords += other.codewords;
        self.failures += other.failures;
        self.raw_errors += other.raw_errors;
        self.identified += other.identified;
        self.unmasked_words += other.unmasked_words;
        self.blocks += other.blocks;
        self.block_failures += other.block_failures;
        self.boundary_codewords += other.boundary_codewords;
        self.boundary_failures += other.boundary_failures;
    }
}

/// Per-codeword decoding failure statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailureStats {
    pub failures: u64,
    pub trials_total: u64,
    pub p_fail: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Identified cells per codeword.
    pub mean_identified: f64,
    /// Raw bit errors at the final read, per bit.
    pub mean_raw_ber: f64,
    pub blocks: u64,
    pub block_failures: u64,
    pub boundary_codewords: u64,
    pub boundary_failures: u64,
    /// Codewords whose defects could not all be masked.
    pub unmasked_words: u64,
}

impl FailureStats {
    pub fn from_tally(t: &Tally, n: usize) -> Self {
        let total = t.codewords;
        let p_fail = if total == 0 { 0.0 } else { t.failures as f64 / total as f64 };
        let (ci_lo, ci_hi) = wilson_interval(t.failures, total);
        let per = |x: u64| if total == 0 { 0.0 } else { x as f64 / total as f64 };
        Self {
            failures: t.failures,
            trials_total: total,
            p_fail,
            ci_lo,
            ci_hi,
            mean_identified: per(t.identified),
            mean_raw_ber: per(t.raw_errors) / n as f64,
            blocks: t.blocks,
            block_failures: t.block_failures,
            boundary_codewords: t.boundary_codewords,
            boundary_failures: t.boundary_failures,
            unmasked_words: t.unmasked_words,
        }
    }

    /// Non-overlapping confidence intervals, `self` strictly below `other`.
    pub fn separated_below(&self, other: &FailureStats) -> bool {
        self.ci_hi < other.ci_lo
    }
}
