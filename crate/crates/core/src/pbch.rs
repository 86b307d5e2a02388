//! Partitioned BCH codes `[n, k, l, r]` for memories with stuck-at cells.
//!
//! The code is built from two nested narrow-sense BCH codes over the same
//! field. The error-correcting code `C_err` has design roots `α^1 … α^(2t)`
//! with `t = r / m`, and the inner code `C_in ⊂ C_err` adds whole
//! conjugacy classes until `l` more parity bits are consumed.
//!
//! * `G1` (k × n) is the systematic generator of `C_in`.
//! * `G0` (l × n) is the systematic generator of the cyclic code
//!   `C_0 = ⟨(x^n + 1) / h(x)⟩`, where `h` is the product of the added
//!   minimal polynomials. `C_0 ⊂ C_err`, `C_0 ∩ C_in = {0}`, and being
//!   cyclic it has no all-zero coordinate, so any single defect is
//!   maskable.
//! * `R` (k × n) satisfies `R·G1ᵀ = I` and `R·G0ᵀ = 0`.
//!
//! Encoding writes `msg·G1 ⊕ z·G0`, with `z` chosen so the word agrees
//! with the stuck values. The decoder never sees the defects: it corrects
//! up to `t` errors with `C_err` and applies `R`.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::bch::{coset_of, generator_for_cosets, BchCode, BchError, CyclicEncoder};
use crate::galois::{build_field, BinaryPolynomial, FieldSpec, FieldTables};
use crate::gf2::{BitMatrix, BitVec, IncrementalSolver, Offer};

/// Largest image rank for which masking failures are resolved by an
/// exhaustive search for the fewest violated defects.
pub const EXACT_SEARCH_RANK: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PbchError {
    #[error(transparent)]
    Bch(#[from] BchError),
    #[error("invalid PBCH parameters: {0}")]
    InvalidParams(String),
    #[error("invalid defect pattern: {0}")]
    InvalidDefects(String),
    #[error("expected length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("uncorrectable word")]
    DecodeFailure,
}

/// Per-cell state of a memory with defects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    StuckZero,
    StuckOne,
    Normal,
}

/// Stuck-at defects of one codeword: sorted positions and their stuck bits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DefectPattern {
    n: usize,
    positions: Vec<usize>,
    stuck_values: Vec<bool>,
}

impl DefectPattern {
    pub fn none(n: usize) -> Self {
        Self { n, positions: Vec::new(), stuck_values: Vec::new() }
    }

    pub fn new(n: usize, positions: Vec<usize>, stuck_values: Vec<bool>) -> Result<Self, PbchError> {
        if positions.len() != stuck_values.len() {
            return Err(PbchError::InvalidDefects(format!(
                "{} positions but {} stuck values",
                positions.len(),
                stuck_values.len()
            )));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PbchError::InvalidDefects("positions not strictly increasing".into()));
        }
        if let Some(&p) = positions.last() {
            if p >= n {
                return Err(PbchError::InvalidDefects(format!("position {p} outside [0, {n})")));
            }
        }
        Ok(Self { n, positions, stuck_values })
    }

    /// Every listed position stuck at 0. Duplicates are merged.
    pub fn stuck_at_zero(n: usize, positions: &[usize]) -> Result<Self, PbchError> {
        let mut p = positions.to_vec();
        p.sort_unstable();
        p.dedup();
        let values = vec![false; p.len()];
        Self::new(n, p, values)
    }

    pub fn from_states(states: &[CellState]) -> Self {
        let mut positions = Vec::new();
        let mut stuck_values = Vec::new();
        for (i, s) in states.iter().enumerate() {
            match s {
                CellState::StuckZero => {
                    positions.push(i);
                    stuck_values.push(false);
                }
                CellState::StuckOne => {
                    positions.push(i);
                    stuck_values.push(true);
                }
                CellState::Normal => {}
            }
        }
        Self { n: states.len(), positions, stuck_values }
    }

    pub fn states(&self) -> Vec<CellState> {
        let mut s = vec![CellState::Normal; self.n];
        for (&p, &v) in self.positions.iter().zip(&self.stuck_values) {
            s[p] = if v { CellState::StuckOne } else { CellState::StuckZero };
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn stuck_values(&self) -> &[bool] {
        &self.stuck_values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.positions.iter().copied().zip(self.stuck_values.iter().copied())
    }

    /// Forces the stuck positions of `word` to their stuck values.
    pub fn apply(&self, word: &mut BitVec) {
        for (p, v) in self.iter() {
            word.set(p, v);
        }
    }

    /// Number of defects whose stuck value disagrees with `word`.
    pub fn violations(&self, word: &BitVec) -> usize {
        self.iter().filter(|&(p, v)| word.get(p) != v).count()
    }
}

/// I.i.d. ternary defect states: stuck-0 with probability `eps0`, stuck-1
/// with probability `eps1`, normal otherwise.
pub fn random_defect_pattern<R: Rng + ?Sized>(
    n: usize,
    eps0: f64,
    eps1: f64,
    rng: &mut R,
) -> Result<DefectPattern, PbchError> {
    let valid = |p: f64| (0.0..=1.0).contains(&p);
    if !valid(eps0) || !valid(eps1) || eps0 + eps1 > 1.0 + 1e-12 {
        return Err(PbchError::InvalidParams(format!(
            "defect probabilities eps0 = {eps0}, eps1 = {eps1} must be in [0, 1] with sum <= 1"
        )));
    }
    let mut positions = Vec::new();
    let mut values = Vec::new();
    if eps0 + eps1 == 0.0 {
        return Ok(DefectPattern::none(n));
    }
    for i in 0..n {
        let u: f64 = rng.random();
        if u < eps0 {
            positions.push(i);
            values.push(false);
        } else if u < eps0 + eps1 {
            positions.push(i);
            values.push(true);
        }
    }
    Ok(DefectPattern { n, positions, stuck_values: values })
}

/// Result of additive encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeOutcome {
    pub codeword: BitVec,
    /// The masking vector `z` (l bits).
    pub masking_vector: BitVec,
    pub masked: bool,
    /// Defects where the codeword disagrees with the stuck value.
    pub unmasked_count: usize,
}

/// How the message is read back out of a corrected codeword.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Recovery {
    /// `R` has a single one per row; message bit `i` is codeword bit `pos[i]`.
    Select(Vec<usize>),
    /// For words of `C_err`: `z` follows from `x mod g_in` restricted to
    /// `cols` times `solve`, then `msg = x[l+r..n) ⊕ (z·G0)[l+r..n)`.
    Peel { cols: Vec<usize>, solve: BitMatrix },
}

/// A partitioned BCH code `[n, k, l, r]`.
#[derive(Debug, Clone)]
pub struct PbchCode {
    n: usize,
    k: usize,
    l: usize,
    r: usize,
    err_code: BchCode,
    inner: CyclicEncoder,
    inner_extra_cosets: Vec<usize>,
    g1: BitMatrix,
    g0: BitMatrix,
    // g0_columns[p] = column p of G0 as an l-bit vector.
    g0_columns: Vec<BitVec>,
    recovery_matrix: BitMatrix,
    recovery: Recovery,
}

/// Builds `[2^m - 1, k, l, r]` over the standard field of degree `m`.
pub fn pbch_construct(m: u32, k: usize, l: usize, r: usize) -> Result<PbchCode, PbchError> {
    let field = Arc::new(build_field(FieldSpec::standard(m).map_err(BchError::from)?).map_err(BchError::from)?);
    PbchCode::new(field, k, l, r)
}

impl PbchCode {
    pub fn new(field: Arc<FieldTables>, k: usize, l: usize, r: usize) -> Result<Self, PbchError> {
        let m = field.m() as usize;
        let n = field.order();
        if k + l + r != n {
            return Err(PbchError::InvalidParams(format!("k + l + r = {} but n = {n}", k + l + r)));
        }
        if k == 0 {
            return Err(PbchError::InvalidParams("k must be positive".into()));
        }
        if !l.is_multiple_of(m) || !r.is_multiple_of(m) {
            return Err(PbchError::InvalidParams(format!("l = {l} and r = {r} must be multiples of m = {m}")));
        }
        let t = r / m;
        let err_code = BchCode::new(field.clone(), t)?;
        if err_code.parity_len() != r {
            return Err(PbchError::InvalidParams(format!(
                "BCH code with t = {t} has {} parity bits, not r = {r}",
                err_code.parity_len()
            )));
        }

        // Extend the design roots with whole conjugacy classes, taken in
        // increasing order of representative, until l bits are consumed.
        let mut covered = vec![false; n];
        for j in 1..=2 * t {
            for e in coset_of(j, field.m()) {
                covered[e] = true;
            }
        }
        let mut extra = Vec::new();
        let mut consumed = 0;
        let mut s = 1;
        while consumed < l {
            if s >= n {
                return Err(PbchError::InvalidParams(format!("ran out of conjugacy classes at l = {consumed}")));
            }
            if !covered[s] {
                let coset = coset_of(s, field.m());
                if consumed + coset.len() > l {
                    return Err(PbchError::InvalidParams(format!(
                        "conjugacy classes cannot tile l = {l} exactly; nearest achievable l is {consumed} or {}",
                        consumed + coset.len()
                    )));
                }
                consumed += coset.len();
                for e in coset {
                    covered[e] = true;
                }
                extra.push(s);
            }
            s += 1;
        }

        let extra_gen = generator_for_cosets(&field, &extra).map_err(BchError::from)?;
        let inner = CyclicEncoder::new(n, err_code.generator().mul(&extra_gen))?;
        debug_assert_eq!(inner.k(), k);
        let g1 = inner.generator_matrix();

        let g0 = if l == 0 {
            BitMatrix::zeros(0, n)
        } else {
            let xn1 = BinaryPolynomial::from_exponents(&[n, 0]);
            let (masking_gen, rem) = xn1.divmod(&extra_gen).map_err(BchError::from)?;
            debug_assert!(rem.is_zero());
            CyclicEncoder::new(n, masking_gen)?.generator_matrix()
        };
        let g0_columns = g0.transpose().rows().to_vec();

        let recovery_matrix = compute_recovery(&g1, &g0)
            .ok_or_else(|| PbchError::InvalidParams("[G1; G0] is rank deficient".into()))?;
        let recovery = if recovery_matrix.rows().iter().all(|row| row.count_ones() == 1) {
            Recovery::Select(
                recovery_matrix
                    .rows()
                    .iter()
                    .map(|row| row.first_one().expect("weight one"))
                    .collect(),
            )
        } else {
            peel_recovery(&inner, &g0)
                .ok_or_else(|| PbchError::InvalidParams("G0 meets the inner code".into()))?
        };

        Ok(Self {
            n,
            k,
            l,
            r,
            err_code,
            inner,
            inner_extra_cosets: extra,
            g1,
            g0,
            g0_columns,
            recovery_matrix,
            recovery,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> u32 {
        self.err_code.m()
    }

    /// Random-error correction capability `r / m`.
    pub fn t(&self) -> usize {
        self.err_code.t()
    }

    pub fn err_code(&self) -> &BchCode {
        &self.err_code
    }

    /// Representatives of the conjugacy classes the inner code adds on top
    /// of the error-correcting code's design roots.
    pub fn inner_extra_cosets(&self) -> &[usize] {
        &self.inner_extra_cosets
    }

    pub fn g1(&self) -> &BitMatrix {
        &self.g1
    }

    pub fn g0(&self) -> &BitMatrix {
        &self.g0
    }

    pub fn recovery_matrix(&self) -> &BitMatrix {
        &self.recovery_matrix
    }

    /// `msg · G1`.
    pub fn message_word(&self, msg: &BitVec) -> Result<BitVec, PbchError> {
        if msg.len() != self.k {
            return Err(PbchError::LengthMismatch { expected: self.k, actual: msg.len() });
        }
        Ok(self.inner.encode(msg)?)
    }

    /// `z · G0`.
    pub fn masking_word(&self, z: &BitVec) -> BitVec {
        self.g0.left_mul(z)
    }

    /// The `l` coefficients of defect position `p` in the masking system.
    pub fn g0_column(&self, p: usize) -> &BitVec {
        &self.g0_columns[p]
    }

    /// Additive encoding: chooses `z` so that `msg·G1 ⊕ z·G0` agrees with
    /// the stuck values, or violates as few of them as it can find.
    pub fn mask_encode(&self, msg: &BitVec, defects: &DefectPattern) -> Result<EncodeOutcome, PbchError> {
        if defects.n() != self.n {
            return Err(PbchError::LengthMismatch { expected: self.n, actual: defects.n() });
        }
        let base = self.message_word(msg)?;
        if defects.is_empty() {
            return Ok(EncodeOutcome {
                codeword: base,
                masking_vector: BitVec::zeros(self.l),
                masked: true,
                unmasked_count: 0,
            });
        }

        let mut solver = IncrementalSolver::new(self.l);
        let mut rejected = 0;
        for (p, v) in defects.iter() {
            if solver.offer(self.g0_columns[p].clone(), v ^ base.get(p)) == Offer::Inconsistent {
                rejected += 1;
            }
        }
        let mut z = solver.solution();
        if rejected > 0 {
            z = self.min_violation_search(&base, defects, z);
        }

        let mut codeword = base;
        codeword.xor_assign(&self.masking_word(&z));
        let unmasked_count = defects.violations(&codeword);
        Ok(EncodeOutcome { codeword, masking_vector: z, masked: unmasked_count == 0, unmasked_count })
    }

    /// Improves a greedy masking vector by exhaustively scanning the image
    /// of `z ↦ (z·G0)|_D` when its rank is small enough.
    fn min_violation_search(&self, base: &BitVec, defects: &DefectPattern, start: BitVec) -> BitVec {
        let d = defects.len();
        // Image vectors of each unknown over the defect positions, reduced
        // to a basis while tracking preimages.
        let mut basis: Vec<(BitVec, BitVec, usize)> = Vec::new(); // (image, preimage, pivot)
        for i in 0..self.l {
            let mut img = BitVec::from_bools(defects.positions().iter().map(|&p| self.g0_columns[p].get(i)));
            let mut pre = BitVec::zeros(self.l);
            pre.set(i, true);
            for (bi, bp, piv) in &basis {
                if img.get(*piv) {
                    img.xor_assign(bi);
                    pre.xor_assign(bp);
                }
            }
            if let Some(piv) = img.first_one() {
                basis.push((img, pre, piv));
            }
        }
        if basis.len() > EXACT_SEARCH_RANK {
            return start;
        }

        // Current violation mask for `start`.
        let mut residual = BitVec::zeros(d);
        let start_word = self.masking_word(&start);
        for (i, (p, v)) in defects.iter().enumerate() {
            if base.get(p) ^ start_word.get(p) != v {
                residual.set(i, true);
            }
        }
        let mut best = residual.count_ones();
        let mut best_z = start.clone();
        let mut z = start;
        // Gray code walk over all 2^rank combinations of basis images.
        for step in 1u64..(1u64 << basis.len()) {
            let j = step.trailing_zeros() as usize;
            residual.xor_assign(&basis[j].0);
            z.xor_assign(&basis[j].1);
            let w = residual.count_ones();
            if w < best {
                best = w;
                best_z = z.clone();
                if w == 0 {
                    break;
                }
            }
        }
        best_z
    }

    /// Recovers the message from a possibly corrupted word. Needs no
    /// knowledge of the defects.
    pub fn decode(&self, received: &BitVec) -> Result<(BitVec, usize), PbchError> {
        if received.len() != self.n {
            return Err(PbchError::LengthMismatch { expected: self.n, actual: received.len() });
        }
        let (corrected, errors) = match self.err_code.decode(received) {
            Ok(v) => v,
            Err(BchError::DecodeFailure) => return Err(PbchError::DecodeFailure),
            Err(e) => return Err(e.into()),
        };
        Ok((self.recover_message(&corrected), errors))
    }

    /// `R · x`.
    pub fn recover_message(&self, codeword: &BitVec) -> BitVec {
        match &self.recovery {
            Recovery::Select(pos) => BitVec::from_bools(pos.iter().map(|&p| codeword.get(p))),
            Recovery::Peel { cols, solve } => {
                let rem = self.inner.remainder(codeword);
                let z = solve.left_mul(&BitVec::from_bools(cols.iter().map(|&c| rem.get(c))));
                let mut msg = codeword.slice(self.n - self.k, self.k);
                msg.xor_assign(&self.masking_word(&z).slice(self.n - self.k, self.k));
                msg
            }
        }
    }
}

/// Free-function form of [`PbchCode::mask_encode`].
pub fn mask_encode(msg: &BitVec, defects: &DefectPattern, code: &PbchCode) -> Result<EncodeOutcome, PbchError> {
    code.mask_encode(msg, defects)
}

/// Free-function form of [`PbchCode::decode`].
pub fn pbch_decode(received: &BitVec, code: &PbchCode) -> Result<(BitVec, usize), PbchError> {
    code.decode(received)
}

/// Precomputes the [`Recovery::Peel`] map: the residues of the `G0` rows
/// modulo the inner generator are independent, so `l` pivot coordinates
/// of the residue determine `z`.
fn peel_recovery(inner: &CyclicEncoder, g0: &BitMatrix) -> Option<Recovery> {
    let l = g0.nrows();
    let residues: Vec<BitVec> = g0.rows().iter().map(|row| inner.remainder(row)).collect();
    let width = inner.parity_len();
    let mut cols = Vec::with_capacity(l);
    let mut basis: Vec<(BitVec, usize)> = Vec::new();
    let columns = BitMatrix::from_rows(residues.clone(), width).transpose();
    for c in 0..width {
        let mut v = columns.row(c).clone();
        for (b, piv) in &basis {
            if v.get(*piv) {
                v.xor_assign(b);
            }
        }
        if let Some(piv) = v.first_one() {
            basis.push((v, piv));
            cols.push(c);
            if cols.len() == l {
                break;
            }
        }
    }
    if cols.len() < l {
        return None;
    }
    // rem|_cols = z · A with A = residues restricted to cols (l × l).
    let a = BitMatrix::from_rows(
        residues.iter().map(|r| BitVec::from_bools(cols.iter().map(|&c| r.get(c)))).collect(),
        l,
    );
    Some(Recovery::Peel { cols, solve: a.inverse()? })
}

/// Solves `R · [G1; G0]ᵀ = [I_k | 0]` for `R` supported on an information
/// set of `[G1; G0]`. Columns are scanned from the high end so that, for
/// systematic generators, `R` comes out as a coordinate selection.
fn compute_recovery(g1: &BitMatrix, g0: &BitMatrix) -> Option<BitMatrix> {
    let k = g1.nrows();
    let stacked = g1.vstack(g0);
    let rows = stacked.nrows();
    let n = stacked.ncols();

    // Pick `rows` independent columns, highest index first.
    let cols = stacked.transpose();
    let mut chosen = Vec::with_capacity(rows);
    let mut basis: Vec<(BitVec, usize)> = Vec::new();
    for c in (0..n).rev() {
        let mut v = cols.row(c).clone();
        for (b, piv) in &basis {
            if v.get(*piv) {
                v.xor_assign(b);
            }
        }
        if let Some(piv) = v.first_one() {
            basis.push((v, piv));
            chosen.push(c);
            if chosen.len() == rows {
                break;
            }
        }
    }
    if chosen.len() < rows {
        return None;
    }
    // M_S: rows × rows restriction of the stacked generator to `chosen`.
    let sub = BitMatrix::from_rows(
        stacked.rows().iter().map(|r| BitVec::from_bools(chosen.iter().map(|&c| r.get(c)))).collect(),
        rows,
    );
    // R_S · M_Sᵀ = [I | 0]  ⇒  R_S = [I | 0] · (M_Sᵀ)⁻¹.
    let inv_t = sub.transpose().inverse()?;
    let mut r = BitMatrix::zeros(k, n);
    for i in 0..k {
        for (j, &c) in chosen.iter().enumerate() {
            if inv_t.get(i, j) {
                r.set(i, c, true);
            }
        }
    }
    Some(r)
}
