//! Binary primitive BCH codes of length `n = 2^m - 1`.
//!
//! Codewords are stored as [`BitVec`]s where bit `i` is the coefficient of
//! `x^i`. Encoding is systematic: parity occupies positions `[0, n - k)`
//! and the message sits verbatim in `[n - k, n)`.
//!
//! Decoding is bounded-distance: Berlekamp–Massey synthesizes the error
//! locator from the syndromes and a Chien search finds its roots.

use std::sync::Arc;

use thiserror::Error;

use crate::galois::{build_field, BinaryPolynomial, Element, FieldSpec, FieldTables, GaloisError};
use crate::gf2::{BitMatrix, BitVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BchError {
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error("invalid BCH parameters: {0}")]
    InvalidParams(String),
    #[error("expected length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("uncorrectable word")]
    DecodeFailure,
}

/// Cyclotomic coset of `s` modulo `2^m - 1`, in doubling order starting at `s`.
pub fn coset_of(s: usize, m: u32) -> Vec<usize> {
    let n = (1usize << m) - 1;
    let s = s % n;
    let mut coset = vec![s];
    let mut x = (2 * s) % n;
    while x != s {
        coset.push(x);
        x = (2 * x) % n;
    }
    coset
}

/// Partition of `[1, 2^m - 2]` into cyclotomic cosets, ordered by their
/// smallest element (which is also each coset's first entry).
pub fn cyclotomic_cosets(m: u32) -> Vec<Vec<usize>> {
    let n = (1usize << m) - 1;
    let mut taken = vec![false; n];
    let mut out = Vec::new();
    for s in 1..n {
        if taken[s] {
            continue;
        }
        let coset = coset_of(s, m);
        for &e in &coset {
            taken[e] = true;
        }
        out.push(coset);
    }
    out
}

/// Product of the minimal polynomials of `α^s` over the given coset
/// representatives.
pub(crate) fn generator_for_cosets(field: &FieldTables, reps: &[usize]) -> Result<BinaryPolynomial, GaloisError> {
    let mut g = BinaryPolynomial::one();
    for &s in reps {
        g = g.mul(&field.minimal_polynomial(field.exp(s))?);
    }
    Ok(g)
}

/// Systematic encoder for a binary cyclic code of length `n` with a given
/// generator polynomial. Works bit-serially on a packed shift register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicEncoder {
    n: usize,
    generator: BinaryPolynomial,
    parity_len: usize,
    // Generator without its leading term, padded to the register width.
    feedback: Vec<u64>,
    // byte_table[b] = x^r · b(x) mod g for every 8-bit b, `width` words each.
    byte_table: Vec<u64>,
}

fn read_bits(reg: &[u64], start: usize, len: usize) -> u64 {
    let (w, b) = (start / 64, start % 64);
    let mut v = reg[w] >> b;
    if b + len > 64 {
        v |= reg[w + 1] << (64 - b);
    }
    v & ((1u64 << len) - 1)
}

fn mask_to(reg: &mut [u64], bits: usize) {
    for (i, w) in reg.iter_mut().enumerate() {
        let lo = 64 * i;
        if bits <= lo {
            *w = 0;
        } else if bits - lo < 64 {
            *w &= (1u64 << (bits - lo)) - 1;
        }
    }
}

impl CyclicEncoder {
    pub fn new(n: usize, generator: BinaryPolynomial) -> Result<Self, BchError> {
        let parity_len = generator
            .degree()
            .ok_or_else(|| BchError::InvalidParams("zero generator polynomial".into()))?;
        if parity_len >= n {
            return Err(BchError::InvalidParams(format!(
                "generator degree {parity_len} leaves no information bits at n = {n}"
            )));
        }
        let width = parity_len.div_ceil(64).max(1);
        let mut feedback = generator.words().to_vec();
        feedback.resize(width + 1, 0);
        feedback[parity_len / 64] &= !(1u64 << (parity_len % 64));
        feedback.truncate(width);
        let mut enc = Self { n, generator, parity_len, feedback, byte_table: Vec::new() };
        if parity_len >= 8 {
            let mut table = Vec::with_capacity(256 * width);
            for byte in 0..256u32 {
                let mut reg = vec![0u64; width];
                enc.shift_in(&mut reg, (0..8).rev().map(|i| (byte >> i) & 1 == 1));
                table.extend_from_slice(&reg);
            }
            enc.byte_table = table;
        }
        Ok(enc)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.n - self.parity_len
    }

    pub fn parity_len(&self) -> usize {
        self.parity_len
    }

    pub fn generator(&self) -> &BinaryPolynomial {
        &self.generator
    }

    /// One LFSR step per bit of `bits_high_first`: computes
    /// `x^r · b(x) mod g` for the polynomial `b` read high degree first.
    fn shift_in(&self, reg: &mut [u64], bits_high_first: impl Iterator<Item = bool>) {
        let r = self.parity_len;
        let (top_word, top_bit) = ((r - 1) / 64, (r - 1) % 64);
        for b in bits_high_first {
            let out = (reg[top_word] >> top_bit) & 1 == 1;
            for w in (1..reg.len()).rev() {
                reg[w] = (reg[w] << 1) | (reg[w - 1] >> 63);
            }
            reg[0] <<= 1;
            if out ^ b {
                for (x, f) in reg.iter_mut().zip(&self.feedback) {
                    *x ^= f;
                }
            }
        }
        mask_to(reg, r);
    }

    /// `x^r · b(x) mod g` where `b` is bits `[start, end)` of `v`, bit
    /// `start` being the constant term. Processes a byte per table lookup.
    fn shifted_remainder(&self, v: &BitVec, start: usize, end: usize) -> Vec<u64> {
        let r = self.parity_len;
        let width = self.feedback.len();
        let mut reg = vec![0u64; width];
        if r < 8 {
            self.shift_in(&mut reg, (start..end).rev().map(|i| v.get(i)));
            return reg;
        }
        let lead = (end - start) % 8;
        self.shift_in(&mut reg, (end - lead..end).rev().map(|i| v.get(i)));
        let mut i = end - lead;
        while i > start {
            i -= 8;
            let top = read_bits(&reg, r - 8, 8) ^ v.get_bits(i, 8);
            for w in (1..width).rev() {
                reg[w] = (reg[w] << 8) | (reg[w - 1] >> 56);
            }
            reg[0] <<= 8;
            mask_to(&mut reg, r);
            let row = &self.byte_table[top as usize * width..(top as usize + 1) * width];
            for (x, t) in reg.iter_mut().zip(row) {
                *x ^= t;
            }
        }
        reg
    }

    /// `word mod g` for a length-`n` word.
    pub fn remainder(&self, word: &BitVec) -> BitVec {
        debug_assert_eq!(word.len(), self.n);
        let r = self.parity_len;
        if r == 0 {
            return BitVec::zeros(0);
        }
        // w = H·x^r + L with deg L < r, so w mod g = (x^r·H mod g) + L.
        let mut rem = BitVec::from_words(self.shifted_remainder(word, r, self.n), r);
        rem.xor_assign(&word.slice(0, r));
        rem
    }

    /// Systematic codeword: parity in `[0, r)`, `info` in `[r, n)`.
    pub fn encode(&self, info: &BitVec) -> Result<BitVec, BchError> {
        if info.len() != self.k() {
            return Err(BchError::LengthMismatch { expected: self.k(), actual: info.len() });
        }
        let mut cw = BitVec::zeros(self.n);
        if self.parity_len > 0 {
            let parity = BitVec::from_words(self.shifted_remainder(info, 0, info.len()), self.parity_len);
            cw.copy_from(0, &parity);
        }
        cw.copy_from(self.parity_len, info);
        Ok(cw)
    }

    /// Systematic generator matrix; row `j` encodes the unit message `e_j`.
    pub fn generator_matrix(&self) -> BitMatrix {
        let k = self.k();
        let rows = (0..k)
            .map(|j| {
                let mut e = BitVec::zeros(k);
                e.set(j, true);
                self.encode(&e).expect("unit message has length k")
            })
            .collect();
        BitMatrix::from_rows(rows, self.n)
    }

    pub fn is_codeword(&self, word: &BitVec) -> bool {
        word.len() == self.n && (self.parity_len == 0 || self.remainder(word).is_zero())
    }
}

/// A binary primitive narrow-sense BCH code.
#[derive(Debug, Clone)]
pub struct BchCode {
    field: Arc<FieldTables>,
    t: usize,
    design_roots: Vec<usize>,
    encoder: CyclicEncoder,
    // odd_powers[i][b] = α^((2i + 1)·b) for b below the parity length.
    odd_powers: Vec<Vec<Element>>,
}

/// Builds the narrow-sense BCH code with design roots `α^1 … α^(2t)` over
/// the standard field of degree `m`.
pub fn bch_generator(m: u32, t: usize) -> Result<BchCode, BchError> {
    let field = Arc::new(build_field(FieldSpec::standard(m)?)?);
    BchCode::new(field, t)
}

impl BchCode {
    pub fn new(field: Arc<FieldTables>, t: usize) -> Result<Self, BchError> {
        let n = field.order();
        if 2 * t >= n {
            return Err(BchError::InvalidParams(format!("t = {t} too large for n = {n}")));
        }
        let m = field.m();
        let mut reps: Vec<usize> = Vec::new();
        let mut covered = vec![false; n];
        for j in 1..=2 * t {
            if !covered[j] {
                let coset = coset_of(j, m);
                for &e in &coset {
                    covered[e] = true;
                }
                reps.push(j);
            }
        }
        let generator = generator_for_cosets(&field, &reps)?;
        let encoder = CyclicEncoder::new(n, generator)?;
        let r = encoder.parity_len();
        let odd_powers = (1..2 * t)
            .step_by(2)
            .map(|j| (0..r).map(|b| field.exp(j * b)).collect())
            .collect();
        Ok(Self { field, t, design_roots: (1..=2 * t).collect(), encoder, odd_powers })
    }

    pub fn field(&self) -> &Arc<FieldTables> {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.encoder.n()
    }

    pub fn m(&self) -> u32 {
        self.field.m()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dimension(&self) -> usize {
        self.encoder.k()
    }

    pub fn parity_len(&self) -> usize {
        self.encoder.parity_len()
    }

    pub fn generator(&self) -> &BinaryPolynomial {
        self.encoder.generator()
    }

    pub fn design_roots(&self) -> &[usize] {
        &self.design_roots
    }

    pub fn encoder(&self) -> &CyclicEncoder {
        &self.encoder
    }

    pub fn encode(&self, msg: &BitVec) -> Result<BitVec, BchError> {
        self.encoder.encode(msg)
    }

    /// The message part of a systematic codeword.
    pub fn extract_message(&self, codeword: &BitVec) -> BitVec {
        codeword.slice(self.parity_len(), self.dimension())
    }

    pub fn is_codeword(&self, word: &BitVec) -> bool {
        self.encoder.is_codeword(word)
    }

    /// `S_j = w(α^j)` for `j = 1 … 2t`.
    pub fn syndromes(&self, word: &BitVec) -> Result<Vec<Element>, BchError> {
        if word.len() != self.n() {
            return Err(BchError::LengthMismatch { expected: self.n(), actual: word.len() });
        }
        if self.t == 0 {
            return Ok(Vec::new());
        }
        // g(α^j) = 0 for every design root, so w(α^j) = (w mod g)(α^j).
        let rem = self.encoder.remainder(word);
        Ok(self.syndromes_from_remainder(&rem))
    }

    fn syndromes_from_remainder(&self, rem: &BitVec) -> Vec<Element> {
        let mut s = vec![0 as Element; 2 * self.t];
        for (idx, powers) in self.odd_powers.iter().enumerate() {
            let mut acc = 0;
            for b in rem.ones_positions() {
                acc ^= powers[b];
            }
            s[2 * idx] = acc;
        }
        // S_2j = S_j^2 over a binary word.
        for j in 1..=self.t {
            s[2 * j - 1] = self.field.mul(s[j - 1], s[j - 1]);
        }
        s
    }

    /// Bounded-distance decoding. Returns the corrected codeword and the
    /// number of flipped bits.
    pub fn decode(&self, word: &BitVec) -> Result<(BitVec, usize), BchError> {
        if word.len() != self.n() {
            return Err(BchError::LengthMismatch { expected: self.n(), actual: word.len() });
        }
        if self.t == 0 {
            return Ok((word.clone(), 0));
        }
        let rem = self.encoder.remainder(word);
        if rem.is_zero() {
            return Ok((word.clone(), 0));
        }
        let syn = self.syndromes_from_remainder(&rem);
        let locator = berlekamp_massey(&syn, &self.field);
        let degree = locator.len() - 1;
        if degree == 0 || degree > self.t {
            return Err(BchError::DecodeFailure);
        }
        let positions = chien_search(&locator, &self.field, self.n());
        if positions.len() != degree {
            return Err(BchError::DecodeFailure);
        }
        let mut fixed = word.clone();
        for &p in &positions {
            fixed.flip(p);
        }
        if !self.encoder.is_codeword(&fixed) {
            return Err(BchError::DecodeFailure);
        }
        Ok((fixed, degree))
    }
}

/// Berlekamp–Massey over GF(2^m). Returns the connection polynomial
/// `Λ(x) = 1 + λ_1 x + … + λ_L x^L` with trailing zeros trimmed.
pub fn berlekamp_massey(syndromes: &[Element], field: &FieldTables) -> Vec<Element> {
    let mut lambda: Vec<Element> = vec![1];
    let mut prev: Vec<Element> = vec![1];
    let mut l = 0usize;
    let mut shift = 1usize;
    let mut prev_disc: Element = 1;

    for k in 0..syndromes.len() {
        let mut disc = syndromes[k];
        for i in 1..=l.min(lambda.len() - 1) {
            disc ^= field.mul(lambda[i], syndromes[k - i]);
        }
        if disc == 0 {
            shift += 1;
            continue;
        }
        let coef = field.div(disc, prev_disc).expect("previous discrepancy is nonzero");
        let mut next = lambda.clone();
        if next.len() < prev.len() + shift {
            next.resize(prev.len() + shift, 0);
        }
        for (i, &p) in prev.iter().enumerate() {
            next[i + shift] ^= field.mul(coef, p);
        }
        if 2 * l <= k {
            prev = lambda;
            prev_disc = disc;
            l = k + 1 - l;
            shift = 1;
        } else {
            shift += 1;
        }
        lambda = next;
    }
    while lambda.len() > 1 && lambda.last() == Some(&0) {
        lambda.pop();
    }
    lambda
}

/// Error positions `p` such that `Λ(α^-p) = 0`.
pub fn chien_search(locator: &[Element], field: &FieldTables, n: usize) -> Vec<usize> {
    let degree = locator.len() - 1;
    let order = field.order();
    // Nonzero terms λ_j α^(-j p), tracked as (log, per-step increment).
    let mut terms: Vec<(usize, usize)> = locator
        .iter()
        .enumerate()
        .filter_map(|(j, &c)| field.log(c).map(|lg| (lg, (order - j % order) % order)))
        .collect();
    let antilog = field.antilog_table();
    let mut found = Vec::with_capacity(degree);
    for p in 0..n {
        let sum = terms.iter().fold(0, |acc: Element, &(e, _)| acc ^ antilog[e]);
        if sum == 0 {
            found.push(p);
            if found.len() == degree {
                break;
            }
        }
        for (e, step) in terms.iter_mut() {
            *e += *step;
            if *e >= order {
                *e -= order;
            }
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code_15_7() -> BchCode {
        bch_generator(4, 2).unwrap()
    }

    #[test]
    fn coset_examples() {
        assert_eq!(coset_of(1, 4), vec![1, 2, 4, 8]);
        assert_eq!(coset_of(3, 4), vec![3, 6, 12, 9]);
        assert_eq!(coset_of(5, 4), vec![5, 10]);
        let all = cyclotomic_cosets(4);
        let mut flat: Vec<usize> = all.iter().flatten().copied().collect();
        flat.sort();
        assert_eq!(flat, (1..15).collect::<Vec<_>>());
        assert_eq!(all.len(), 4); // {1}, {3}, {5}, {7}
    }

    #[test]
    fn generator_examples() {
        let c = bch_generator(4, 1).unwrap();
        assert_eq!(*c.generator(), BinaryPolynomial::from_exponents(&[4, 1, 0]));
        assert_eq!((c.n(), c.dimension()), (15, 11));

        let c = code_15_7();
        assert_eq!(*c.generator(), BinaryPolynomial::from_exponents(&[8, 7, 6, 4, 0]));
        assert_eq!((c.n(), c.dimension()), (15, 7));

        let c = bch_generator(10, 10).unwrap();
        assert_eq!(c.generator().degree(), Some(100));
        assert_eq!((c.n(), c.dimension()), (1023, 923));
    }

    #[test]
    fn generator_divides_x_n_plus_1() {
        for (m, t) in [(4, 1), (4, 2), (4, 3), (5, 3), (10, 10)] {
            let c = bch_generator(m, t).unwrap();
            let xn1 = BinaryPolynomial::from_exponents(&[c.n(), 0]);
            assert!(xn1.rem(c.generator()).unwrap().is_zero(), "m={m} t={t}");
            for &j in c.design_roots() {
                assert_eq!(c.generator().eval(c.field().exp(j), c.field()), 0);
            }
        }
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(bch_generator(4, 8), Err(BchError::InvalidParams(_))));
        // t = 4 needs cosets {1},{3},{5},{7}: degree 14 leaves k = 1, valid.
        assert_eq!(bch_generator(4, 4).unwrap().dimension(), 1);
    }

    #[test]
    fn encode_examples() {
        let c = code_15_7();
        let zero = c.encode(&BitVec::zeros(7)).unwrap();
        assert!(zero.is_zero());
        let mut msg = BitVec::zeros(7);
        msg.set(0, true);
        let cw = c.encode(&msg).unwrap();
        let expected = BinaryPolynomial::from_exponents(&[8, 7, 6, 4, 0]);
        assert_eq!(BinaryPolynomial::from_bits(cw.iter()), expected);
        assert_eq!(c.extract_message(&cw), msg);
        assert!(matches!(c.encode(&BitVec::zeros(6)), Err(BchError::LengthMismatch { .. })));
    }

    #[test]
    fn encoder_matches_polynomial_division() {
        let c = bch_generator(5, 3).unwrap();
        for seed in 0..20u64 {
            let msg = BitVec::from_bools((0..c.dimension()).map(|i| (seed * 7 + i as u64 * 13) % 5 < 2));
            let cw = c.encode(&msg).unwrap();
            let p = BinaryPolynomial::from_bits(cw.iter());
            assert!(p.rem(c.generator()).unwrap().is_zero());
            assert!(c.is_codeword(&cw));
        }
    }

    #[test]
    fn single_error_syndromes() {
        let c = code_15_7();
        let f = c.field().clone();
        for p in 0..15 {
            let mut w = BitVec::zeros(15);
            w.set(p, true);
            let s = c.syndromes(&w).unwrap();
            for (idx, &sj) in s.iter().enumerate() {
                let j = idx + 1;
                assert_eq!(sj, f.exp(j * p), "p={p} j={j}");
            }
        }
    }

    #[test]
    fn three_errors_give_nonzero_syndromes() {
        let c = code_15_7();
        let mut w = c.encode(&BitVec::from_bytes(&[1, 0, 1, 1, 0, 0, 1])).unwrap();
        for p in [1, 6, 11] {
            w.flip(p);
        }
        assert!(c.syndromes(&w).unwrap().iter().any(|&s| s != 0));
    }

    #[test]
    fn decode_clean_and_corrupted() {
        let c = code_15_7();
        let cw = c.encode(&BitVec::from_bytes(&[0, 1, 1, 0, 1, 0, 1])).unwrap();
        assert_eq!(c.decode(&cw).unwrap(), (cw.clone(), 0));
        for a in 0..15 {
            for b in a + 1..15 {
                let mut w = cw.clone();
                w.flip(a);
                w.flip(b);
                assert_eq!(c.decode(&w).unwrap(), (cw.clone(), 2));
            }
        }
    }

    #[test]
    fn weight_three_never_silently_corrected() {
        let c = code_15_7();
        let cw = c.encode(&BitVec::from_bytes(&[1, 1, 0, 0, 1, 0, 1])).unwrap();
        for a in 0..15 {
            for b in a + 1..15 {
                for d in b + 1..15 {
                    let mut w = cw.clone();
                    w.flip(a);
                    w.flip(b);
                    w.flip(d);
                    match c.decode(&w) {
                        Err(BchError::DecodeFailure) => {}
                        Ok((out, _)) => {
                            assert_ne!(out, cw);
                            assert!(c.is_codeword(&out));
                        }
                        Err(e) => panic!("unexpected {e:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_code_t0() {
        let c = bch_generator(4, 0).unwrap();
        assert_eq!(c.dimension(), 15);
        let w = BitVec::from_bytes(&[1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1, 1]);
        assert_eq!(c.encode(&w).unwrap(), w);
        assert_eq!(c.decode(&w).unwrap(), (w.clone(), 0));
        assert!(c.syndromes(&w).unwrap().is_empty());
    }
}
