//! Packed bit vectors and matrices over GF(2).

use std::fmt;

/// Fixed-length bit vector, 64 bits per word. Bits past `len` are zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BitVec(")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; words_for(len)], len }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self { words: vec![!0; words_for(len)], len };
        v.clear_tail();
        v
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let iter = bits.into_iter();
        let mut words = Vec::with_capacity(words_for(iter.size_hint().0));
        let (mut cur, mut len) = (0u64, 0usize);
        for b in iter {
            cur |= u64::from(b) << (len % 64);
            len += 1;
            if len % 64 == 0 {
                words.push(cur);
                cur = 0;
            }
        }
        if len % 64 != 0 {
            words.push(cur);
        }
        Self { words, len }
    }

    /// From 0/1 bytes; any nonzero byte is a 1.
    pub fn from_bytes(bits: &[u8]) -> Self {
        Self::from_bools(bits.iter().map(|&b| b != 0))
    }

    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(words_for(len), 0);
        let mut v = Self { words, len };
        v.clear_tail();
        v
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub fn push(&mut self, b: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, b);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if b {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut v = self.clone();
        v.xor_assign(other);
        v
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of the bitwise AND.
    pub fn dot(&self, other: &BitVec) -> bool {
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    pub fn hamming_distance(&self, other: &BitVec) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits, ascending.
    pub fn ones_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Index of the lowest set bit.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .position(|&w| w != 0)
            .map(|wi| wi * 64 + self.words[wi].trailing_zeros() as usize)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    /// Bits `[start, start + len)` packed into a word, bit `start` lowest.
    /// `len` must be at most 64.
    #[inline]
    pub fn get_bits(&self, start: usize, len: usize) -> u64 {
        assert!(len <= 64 && start + len <= self.len);
        if len == 0 {
            return 0;
        }
        let (w, b) = (start / 64, start % 64);
        let mut v = self.words[w] >> b;
        if b != 0 && b + len > 64 {
            v |= self.words[w + 1] << (64 - b);
        }
        if len < 64 {
            v &= (1u64 << len) - 1;
        }
        v
    }

    /// Overwrites bits `[start, start + len)` with the low `len` bits of `v`.
    #[inline]
    fn set_bits(&mut self, start: usize, len: usize, v: u64) {
        debug_assert!(len <= 64 && start + len <= self.len);
        if len == 0 {
            return;
        }
        let mask = if len == 64 { !0 } else { (1u64 << len) - 1 };
        let v = v & mask;
        let (w, b) = (start / 64, start % 64);
        self.words[w] = (self.words[w] & !(mask << b)) | (v << b);
        if b != 0 && b + len > 64 {
            let spill = b + len - 64;
            let m2 = (1u64 << spill) - 1;
            self.words[w + 1] = (self.words[w + 1] & !m2) | (v >> (64 - b));
        }
    }

    /// Bits `[start, start + len)` as a new vector.
    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        assert!(start + len <= self.len);
        let words = (0..words_for(len))
            .map(|i| self.get_bits(start + 64 * i, (len - 64 * i).min(64)))
            .collect();
        BitVec { words, len }
    }

    /// Overwrites bits `[start, start + src.len())` with `src`.
    pub fn copy_from(&mut self, start: usize, src: &BitVec) {
        assert!(start + src.len <= self.len);
        for (i, &w) in src.words.iter().enumerate() {
            let len = (src.len - 64 * i).min(64);
            self.set_bits(start + 64 * i, len, w);
        }
    }
}

/// Dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Default)]
pub struct BitMatrix {
    rows: Vec<BitVec>,
    cols: usize,
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r:?}")?;
        }
        f.write_str("]")
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows: vec![BitVec::zeros(cols); rows], cols }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.rows[i].set(i, true);
        }
        m
    }

    pub fn from_rows(rows: Vec<BitVec>, cols: usize) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "row length mismatch");
        Self { rows, cols }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, b: bool) {
        self.rows[r].set(c, b);
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            for c in row.ones_positions() {
                t.rows[c].set(r, true);
            }
        }
        t
    }

    /// Row vector times matrix: XOR of the rows selected by `v`.
    pub fn left_mul(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.rows.len());
        let mut out = BitVec::zeros(self.cols);
        for i in v.ones_positions() {
            out.xor_assign(&self.rows[i]);
        }
        out
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.cols);
        BitVec::from_bools(self.rows.iter().map(|r| r.dot(v)))
    }

    /// `self · other`.
    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.rows.len());
        let rows = self.rows.iter().map(|r| other.left_mul(r)).collect();
        BitMatrix { rows, cols: other.cols }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols);
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        BitMatrix { rows, cols: self.cols }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce().len()
    }

    /// In-place reduced row echelon form; returns pivot columns in row order.
    pub fn row_reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows.len() {
                break;
            }
            let Some(p) = (r..self.rows.len()).find(|&i| self.rows[i].get(c)) else {
                continue;
            };
            self.rows.swap(r, p);
            let pivot = self.rows[r].clone();
            for i in 0..self.rows.len() {
                if i != r && self.rows[i].get(c) {
                    self.rows[i].xor_assign(&pivot);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Inverse of a square matrix, `None` if singular.
    pub fn inverse(&self) -> Option<BitMatrix> {
        let n = self.rows.len();
        assert_eq!(n, self.cols, "inverse of non-square matrix");
        let mut aug: Vec<(BitVec, BitVec)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut e = BitVec::zeros(n);
                e.set(i, true);
                (r.clone(), e)
            })
            .collect();
        for c in 0..n {
            let p = (c..n).find(|&i| aug[i].0.get(c))?;
            aug.swap(c, p);
            let (pl, pr) = aug[c].clone();
            for (i, row) in aug.iter_mut().enumerate() {
                if i != c && row.0.get(c) {
                    row.0.xor_assign(&pl);
                    row.1.xor_assign(&pr);
                }
            }
        }
        Some(BitMatrix { rows: aug.into_iter().map(|(_, r)| r).collect(), cols: n })
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BitVec::is_zero)
    }
}

/// Incremental Gaussian elimination for systems `Σ_i x_i a_i = b` where
/// each equation is an unknown-coefficient vector `a` and a right-hand
/// side bit `b`.
///
/// Equations are offered one at a time; an equation that contradicts the
/// ones already accepted is rejected and leaves the system unchanged.
#[derive(Debug, Clone)]
pub struct IncrementalSolver {
    unknowns: usize,
    // Fully reduced rows (a, b); pivot[i] is the leading unknown of row i.
    rows: Vec<(BitVec, bool)>,
    pivots: Vec<usize>,
}

/// Result of offering an equation to an [`IncrementalSolver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offer {
    /// Independent of accepted equations; rank increased.
    Added,
    /// Implied by accepted equations.
    Redundant,
    /// Contradicts accepted equations; rejected.
    Inconsistent,
}

impl IncrementalSolver {
    pub fn new(unknowns: usize) -> Self {
        Self { unknowns, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `(a, b)` against the accepted rows without modifying them.
    fn reduce(&self, a: &mut BitVec, b: &mut bool) {
        for ((row, rb), &p) in self.rows.iter().zip(&self.pivots) {
            if a.get(p) {
                a.xor_assign(row);
                *b ^= rb;
            }
        }
    }

    pub fn offer(&mut self, mut a: BitVec, mut b: bool) -> Offer {
        assert_eq!(a.len(), self.unknowns);
        self.reduce(&mut a, &mut b);
        let Some(p) = a.first_one() else {
            return if b { Offer::Inconsistent } else { Offer::Redundant };
        };
        // Keep the system fully reduced: eliminate p from existing rows.
        for (row, rb) in self.rows.iter_mut() {
            if row.get(p) {
                row.xor_assign(&a);
                *rb ^= b;
            }
        }
        self.rows.push((a, b));
        self.pivots.push(p);
        Offer::Added
    }

    /// The solution with every free unknown set to zero.
    pub fn solution(&self) -> BitVec {
        let mut x = BitVec::zeros(self.unknowns);
        for ((_, b), &p) in self.rows.iter().zip(&self.pivots) {
            // Fully reduced rows have no other pivot columns, and free
            // columns are zero, so each pivot unknown equals its rhs.
            x.set(p, *b);
        }
        x
    }
}
