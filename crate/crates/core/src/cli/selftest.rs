//! Built-in consistency checks: field axioms and brute-force oracles on
//! toy codes.

use std::sync::Arc;

use crate::bch::BchCode;
use crate::galois::{build_field, FieldSpec, FieldTables};
use crate::gf2::BitVec;
use crate::pbch::{pbch_construct, DefectPattern, PbchCode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, failures: usize, cases: usize) -> Check {
    Check { name, passed: failures == 0, detail: format!("{failures} discrepancies in {cases} cases") }
}

pub fn run_selftest() -> Vec<Check> {
    vec![field_axioms(), bch_small_weights(), toy_masking_oracle()]
}

fn field_axioms() -> Check {
    let (mut bad, mut cases) = (0, 0);
    for m in 2..=10 {
        let f = match FieldSpec::standard(m).and_then(build_field) {
            Ok(f) => f,
            Err(_) => {
                bad += 1;
                continue;
            }
        };
        let q = f.size() as u16;
        // Exhaustive for small fields, a fixed stride for the larger ones.
        let stride = if m <= 6 { 1 } else { 37 };
        for a in (1..q).step_by(stride) {
            cases += 1;
            match f.inv(a) {
                Ok(inv) if f.mul(a, inv) == 1 => {}
                _ => bad += 1,
            }
            for b in (0..q).step_by(stride) {
                for c in (0..q).step_by(stride * 3) {
                    cases += 1;
                    let assoc = f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c));
                    let distrib = f.mul(a, b ^ c) == f.mul(a, b) ^ f.mul(a, c);
                    if !assoc || !distrib {
                        bad += 1;
                    }
                }
            }
        }
        cases += 1;
        if f.order() != (1 << m) - 1 || f.exp(f.order()) != 1 {
            bad += 1;
        }
    }
    check("field axioms GF(2^2)..GF(2^10)", bad, cases)
}

fn unit_patterns(n: usize, max_weight: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for i in 0..n {
        out.push(vec![i]);
        if max_weight >= 2 {
            for j in i + 1..n {
                out.push(vec![i, j]);
            }
        }
    }
    out
}

fn bch_small_weights() -> Check {
    let field: Arc<FieldTables> = match FieldSpec::standard(4).and_then(build_field) {
        Ok(f) => Arc::new(f),
        Err(_) => return check("[15, 7] t=2 BCH weight ≤ 2", 1, 1),
    };
    let code = match BchCode::new(field, 2) {
        Ok(c) => c,
        Err(_) => return check("[15, 7] t=2 BCH weight ≤ 2", 1, 1),
    };
    let (mut bad, mut cases) = (0, 0);
    for m in 0..(1u64 << code.dimension()) {
        let msg = BitVec::from_words(vec![m], code.dimension());
        let Ok(cw) = code.encode(&msg) else {
            bad += 1;
            continue;
        };
        for pattern in unit_patterns(15, 2) {
            cases += 1;
            let mut word = cw.clone();
            for &p in &pattern {
                word.flip(p);
            }
            match code.decode(&word) {
                Ok((fixed, _)) if fixed == cw => {}
                _ => bad += 1,
            }
        }
    }
    check("[15, 7] t=2 BCH weight ≤ 2", bad, cases)
}

/// Does some masking vector satisfy every defect? Enumerates all `2^l`.
fn exhaustively_maskable(code: &PbchCode, base: &BitVec, defects: &DefectPattern) -> bool {
    (0..1u64 << code.l()).any(|z| {
        let mut w = base.clone();
        w.xor_assign(&code.masking_word(&BitVec::from_words(vec![z], code.l())));
        defects.violations(&w) == 0
    })
}

fn toy_masking_oracle() -> Check {
    let Ok(code) = pbch_construct(4, 7, 4, 4) else {
        return check("[15, 7, 4, 4] masking oracle", 1, 1);
    };
    let (mut bad, mut cases) = (0, 0);
    for m in 0..128u64 {
        let msg = BitVec::from_words(vec![m], 7);
        let Ok(base) = code.message_word(&msg) else {
            bad += 1;
            continue;
        };
        for positions in unit_patterns(15, 2) {
            for values in 0..1u32 << positions.len() {
                cases += 1;
                let stuck = (0..positions.len()).map(|i| (values >> i) & 1 == 1).collect();
                let Ok(defects) = DefectPattern::new(15, positions.clone(), stuck) else {
                    bad += 1;
                    continue;
                };
                let Ok(out) = code.mask_encode(&msg, &defects) else {
                    bad += 1;
                    continue;
                };
                let expected = exhaustively_maskable(&code, &base, &defects);
                let round_trip = matches!(code.decode(&out.codeword), Ok((d, 0)) if d == msg);
                if out.masked != expected || !round_trip {
                    bad += 1;
                }
            }
        }
    }
    check("[15, 7, 4, 4] masking oracle", bad, cases)
}
