//! Shared helpers for the integration suites.

#![allow(dead_code)]

pub mod laws;

use detrap::gf2::BitVec;
use rand::Rng;

pub fn bits_from_u64(v: u64, len: usize) -> BitVec {
    BitVec::from_words(vec![v], len)
}

pub fn random_bits<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BitVec {
    BitVec::from_bools((0..len).map(|_| rng.random::<bool>()))
}

/// `count` distinct positions in `[0, n)`, sorted.
pub fn random_positions<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut v = rand::seq::index::sample(rng, n, count).into_vec();
    v.sort_unstable();
    v
}

/// All subsets of `[0, n)` with at most `max` elements, in lexicographic order.
pub fn subsets_up_to(n: usize, max: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, max: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if cur.len() == max {
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, max, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max, 0, &mut Vec::new(), &mut out);
    out
}
