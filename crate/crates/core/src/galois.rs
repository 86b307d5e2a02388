//! Arithmetic over GF(2^m) and over binary polynomials.
//!
//! Field elements are integers in polynomial basis; bit `i` is the
//! coefficient of `α^i`. Multiplication goes through log/antilog tables,
//! with zero handled outside the tables.

use std::fmt;

use thiserror::Error;

/// Smallest supported field degree.
pub const MIN_DEGREE: u32 = 2;
/// Largest supported field degree (table-based fields only).
pub const MAX_DEGREE: u32 = 16;

/// A field element in polynomial basis.
pub type Element = u16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaloisError {
    #[error("field degree {0} outside supported range [2, 16]")]
    UnsupportedDegree(u32),
    #[error("polynomial {poly:#x} does not have degree {m}")]
    WrongDegree { m: u32, poly: u32 },
    #[error("polynomial {poly:#x} is not primitive: α has order {order}, expected {expected}")]
    NotPrimitive { poly: u32, order: u32, expected: u32 },
    #[error("division by zero")]
    DivideByZero,
}

/// Degree plus primitive polynomial, the recipe for a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpec {
    m: u32,
    primitive_poly: u32,
}

impl FieldSpec {
    /// `primitive_poly` includes the leading `x^m` term, e.g. `0x13` for
    /// `x^4 + x + 1`. Primitivity is checked by [`build_field`].
    pub fn new(m: u32, primitive_poly: u32) -> Result<Self, GaloisError> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&m) {
            return Err(GaloisError::UnsupportedDegree(m));
        }
        if primitive_poly >> m != 1 {
            return Err(GaloisError::WrongDegree { m, poly: primitive_poly });
        }
        Ok(Self { m, primitive_poly })
    }

    /// Default primitive polynomial for each supported degree.
    ///
    /// For m = 10 this is `x^10 + x^3 + 1`.
    pub fn standard(m: u32) -> Result<Self, GaloisError> {
        let poly = match m {
            2 => 0x7,
            3 => 0xB,
            4 => 0x13,
            5 => 0x25,
            6 => 0x43,
            7 => 0x89,
            8 => 0x11D,
            9 => 0x211,
            10 => 0x409,
            11 => 0x805,
            12 => 0x1053,
            13 => 0x201B,
            14 => 0x4443,
            15 => 0x8003,
            16 => 0x1100B,
            _ => return Err(GaloisError::UnsupportedDegree(m)),
        };
        Self::new(m, poly)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn primitive_poly(&self) -> u32 {
        self.primitive_poly
    }
}

/// Log/antilog tables for GF(2^m).
#[derive(Clone, PartialEq, Eq)]
pub struct FieldTables {
    spec: FieldSpec,
    // log[0] is never read.
    log: Vec<u16>,
    antilog: Vec<Element>,
}

impl fmt::Debug for FieldTables {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldTables")
            .field("m", &self.spec.m)
            .field("primitive_poly", &format_args!("{:#x}", self.spec.primitive_poly))
            .finish()
    }
}

/// Builds the tables, rejecting polynomials whose root does not generate
/// the whole multiplicative group.
pub fn build_field(spec: FieldSpec) -> Result<FieldTables, GaloisError> {
    let m = spec.m;
    let size = 1usize << m;
    let order = (size - 1) as u32;
    let mut log = vec![0u16; size];
    let mut antilog = vec![0 as Element; size - 1];
    let mut seen = vec![false; size];

    let mut x: u32 = 1;
    for i in 0..order {
        if seen[x as usize] {
            return Err(GaloisError::NotPrimitive {
                poly: spec.primitive_poly,
                order: i,
                expected: order,
            });
        }
        seen[x as usize] = true;
        antilog[i as usize] = x as Element;
        log[x as usize] = i as u16;
        x <<= 1;
        if x & (1 << m) != 0 {
            x ^= spec.primitive_poly;
        }
    }
    if x != 1 {
        // The orbit of α never returned to 1 within 2^m - 1 steps; only
        // possible when the polynomial is not irreducible with α invertible.
        return Err(GaloisError::NotPrimitive {
            poly: spec.primitive_poly,
            order: 0,
            expected: order,
        });
    }
    Ok(FieldTables { spec, log, antilog })
}

impl FieldTables {
    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn m(&self) -> u32 {
        self.spec.m
    }

    /// Number of field elements, 2^m.
    pub fn size(&self) -> usize {
        1 << self.spec.m
    }

    /// Multiplicative group order, 2^m - 1.
    pub fn order(&self) -> usize {
        self.antilog.len()
    }

    /// Discrete log of a nonzero element.
    #[inline]
    pub fn log(&self, a: Element) -> Option<usize> {
        (a != 0).then(|| self.log[a as usize] as usize)
    }

    /// `α^e` for any exponent, reduced mod 2^m - 1.
    #[inline]
    pub fn exp(&self, e: usize) -> Element {
        self.antilog[e % self.antilog.len()]
    }

    /// Raw antilog table, indexed by exponent in [0, 2^m - 2].
    pub fn antilog_table(&self) -> &[Element] {
        &self.antilog
    }

    /// Raw log table; entry 0 is meaningless.
    pub fn log_table(&self) -> &[u16] {
        &self.log
    }

    #[inline]
    pub fn add(&self, a: Element, b: Element) -> Element {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Element, b: Element) -> Element {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.antilog.len();
        let mut e = self.log[a as usize] as usize + self.log[b as usize] as usize;
        if e >= n {
            e -= n;
        }
        self.antilog[e]
    }

    pub fn inv(&self, a: Element) -> Result<Element, GaloisError> {
        if a == 0 {
            return Err(GaloisError::DivideByZero);
        }
        let n = self.antilog.len();
        let l = self.log[a as usize] as usize;
        Ok(self.antilog[(n - l) % n])
    }

    pub fn div(&self, a: Element, b: Element) -> Result<Element, GaloisError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Element, e: u64) -> Element {
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        let n = self.antilog.len() as u64;
        let l = self.log[a as usize] as u64;
        self.antilog[((l * (e % n)) % n) as usize]
    }

    /// Minimal polynomial over GF(2) of a nonzero element: the product of
    /// `(x - c)` over its conjugacy class `{e, e^2, e^4, ...}`.
    pub fn minimal_polynomial(&self, e: Element) -> Result<BinaryPolynomial, GaloisError> {
        if e == 0 {
            return Err(GaloisError::DivideByZero);
        }
        let mut conjugates = vec![e];
        let mut c = self.mul(e, e);
        while c != e {
            conjugates.push(c);
            c = self.mul(c, c);
        }
        // Coefficients over GF(2^m), lowest degree first.
        let mut poly: Vec<Element> = vec![1];
        for &root in &conjugates {
            let mut next = vec![0 as Element; poly.len() + 1];
            for (i, &coef) in poly.iter().enumerate() {
                next[i + 1] ^= coef;
                next[i] ^= self.mul(coef, root);
            }
            poly = next;
        }
        debug_assert!(poly.iter().all(|&c| c <= 1), "minimal polynomial has non-binary coefficients");
        Ok(BinaryPolynomial::from_bits(poly.iter().map(|&c| c == 1)))
    }
}

/// Polynomial over GF(2), packed 64 coefficients per word, lowest degree
/// first. Always normalized: no trailing zero words.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BinaryPolynomial {
    words: Vec<u64>,
}

impl fmt::Debug for BinaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryPolynomial({self})")
    }
}

impl fmt::Display for BinaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(deg) = self.degree() else {
            return f.write_str("0");
        };
        let mut first = true;
        for i in (0..=deg).rev() {
            if !self.coeff(i) {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match i {
                0 => f.write_str("1")?,
                1 => f.write_str("x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

impl BinaryPolynomial {
    pub fn zero() -> Self {
        Self { words: Vec::new() }
    }

    pub fn one() -> Self {
        Self { words: vec![1] }
    }

    /// `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut p = Self { words: vec![0; k / 64 + 1] };
        p.words[k / 64] = 1 << (k % 64);
        p
    }

    /// Builds from the set of exponents with coefficient 1.
    pub fn from_exponents(exponents: &[usize]) -> Self {
        let mut p = Self::zero();
        for &e in exponents {
            p.toggle(e);
        }
        p
    }

    /// Builds from coefficients, lowest degree first.
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        for (i, b) in bits.into_iter().enumerate() {
            if i % 64 == 0 {
                words.push(0);
            }
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        let mut p = Self { words };
        p.normalize();
        p
    }

    /// Builds from packed words (bit `i` of word `w` is the coefficient of
    /// `x^(64w + i)`).
    pub fn from_words(words: Vec<u64>) -> Self {
        let mut p = Self { words };
        p.normalize();
        p
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Coefficients lowest degree first, `degree + 1` entries (empty for 0).
    pub fn to_bits(&self) -> Vec<bool> {
        match self.degree() {
            None => Vec::new(),
            Some(d) => (0..=d).map(|i| self.coeff(i)).collect(),
        }
    }

    fn normalize(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        let top = *self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - top.leading_zeros() as usize)
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| (w >> (i % 64)) & 1 == 1)
    }

    fn toggle(&mut self, i: usize) {
        if self.words.len() <= i / 64 {
            self.words.resize(i / 64 + 1, 0);
        }
        self.words[i / 64] ^= 1 << (i % 64);
        self.normalize();
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let (long, short) = if self.words.len() >= other.words.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut words = long.words.clone();
        for (w, s) in words.iter_mut().zip(&short.words) {
            *w ^= s;
        }
        Self::from_words(words)
    }

    /// Carry-less product.
    pub fn mul(&self, other: &Self) -> Self {
        let (Some(da), Some(db)) = (self.degree(), other.degree()) else {
            return Self::zero();
        };
        let mut words = vec![0u64; (da + db) / 64 + 1];
        for i in 0..=da {
            if !self.coeff(i) {
                continue;
            }
            let (ws, bs) = (i / 64, i % 64);
            for (j, &w) in other.words.iter().enumerate() {
                words[ws + j] ^= w << bs;
                if bs != 0 && ws + j + 1 < words.len() {
                    words[ws + j + 1] ^= w >> (64 - bs);
                }
            }
        }
        Self::from_words(words)
    }

    /// Long division: returns `(q, r)` with `self = q·d + r`, `deg r < deg d`.
    pub fn divmod(&self, d: &Self) -> Result<(Self, Self), GaloisError> {
        let dd = d.degree().ok_or(GaloisError::DivideByZero)?;
        let mut rem = self.words.clone();
        let Some(dp) = self.degree() else {
            return Ok((Self::zero(), Self::zero()));
        };
        if dp < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut quot = vec![0u64; (dp - dd) / 64 + 1];
        for i in (dd..=dp).rev() {
            if (rem[i / 64] >> (i % 64)) & 1 == 0 {
                continue;
            }
            let shift = i - dd;
            quot[shift / 64] |= 1 << (shift % 64);
            let (ws, bs) = (shift / 64, shift % 64);
            for (j, &w) in d.words.iter().enumerate() {
                rem[ws + j] ^= w << bs;
                if bs != 0 && ws + j + 1 < rem.len() {
                    rem[ws + j + 1] ^= w >> (64 - bs);
                }
            }
        }
        Ok((Self::from_words(quot), Self::from_words(rem)))
    }

    pub fn rem(&self, d: &Self) -> Result<Self, GaloisError> {
        Ok(self.divmod(d)?.1)
    }

    /// Evaluates at a field element with Horner's rule.
    pub fn eval(&self, x: Element, field: &FieldTables) -> Element {
        let Some(deg) = self.degree() else {
            return 0;
        };
        let mut acc: Element = 0;
        for i in (0..=deg).rev() {
            acc = field.mul(acc, x) ^ Element::from(self.coeff(i));
        }
        acc
    }

    /// Greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b).expect("b is nonzero");
            a = b;
            b = r;
        }
        a
    }
}
