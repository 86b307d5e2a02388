//! Invariant laws, each run by proptest with a deterministic RNG.
//!
//! A law returns `Err` with the minimal failing input on violation. Both
//! the per-law test target and the acceptance target run these.

use std::sync::OnceLock;

use detrap::bch::{bch_generator, BchCode};
use detrap::channel::{
    apply_fast_detrapping, apply_ici, erase_block, identify_detrapped, interfere, program_page, read_page,
    CellGrid, ChannelParams, Dims, IdentifyMode, Level, Page,
};
use detrap::galois::{build_field, BinaryPolynomial, FieldSpec, FieldTables};
use detrap::gf2::BitVec;
use detrap::pbch::{pbch_construct, DefectPattern, PbchCode};
use detrap::pipeline::{
    simulate_block, wilson_interval, BlockRng, CodeSpec, Compensation, FailureStats, SimConfig, Tally,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_bits, random_positions, subsets_up_to};

pub const CASES: u32 = 10_000;

pub struct Law {
    pub name: &'static str,
    pub run: fn() -> Result<(), String>,
}

pub fn all() -> Vec<Law> {
    macro_rules! laws {
        ($($f:ident),* $(,)?) => { vec![$(Law { name: stringify!($f), run: $f }),*] };
    }
    laws![
        galois_field_axioms,
        galois_order_divides,
        galois_minimal_polynomial_divides,
        galois_divmod_round_trip,
        bch_round_trip_small,
        bch_round_trip_1023,
        bch_round_trip_15_7_exhaustive,
        bch_decoder_output_is_codeword,
        bch_linearity,
        bch_min_distance_15_7,
        pbch_masking_never_corrupts,
        pbch_superposition,
        pbch_toy_oracle_equivalence,
        pbch_tradeoff_monotone,
        pbch_syndrome_zero,
        channel_ici_linearity,
        channel_ispp_overshoot,
        channel_ssl_invariance,
        channel_seed_determinism,
        channel_program_shift_monotone,
        channel_read_convention,
        channel_identify_agreement,
        pipeline_compensation_exact,
        pipeline_on_off_identical_without_detrap,
        pipeline_monotone_in_sigma_random,
        pipeline_ci_coverage,
        pipeline_failure_stats,
    ]
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(cases: u32, s: S, law: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&s, law).map_err(|e| e.to_string())
}

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(what()))
    }
}

fn fields() -> &'static [FieldTables] {
    static F: OnceLock<Vec<FieldTables>> = OnceLock::new();
    F.get_or_init(|| (2..=10).map(|m| build_field(FieldSpec::standard(m).unwrap()).unwrap()).collect())
}

fn field(m: u32) -> &'static FieldTables {
    &fields()[(m - 2) as usize]
}

fn small_bch() -> &'static [BchCode] {
    static C: OnceLock<Vec<BchCode>> = OnceLock::new();
    C.get_or_init(|| {
        [(4, 1), (4, 2), (4, 3), (5, 2), (5, 3), (6, 3), (7, 4), (8, 5), (9, 6)]
            .iter()
            .map(|&(m, t)| bch_generator(m, t).unwrap())
            .collect()
    })
}

fn bch_1023() -> &'static BchCode {
    static C: OnceLock<BchCode> = OnceLock::new();
    C.get_or_init(|| bch_generator(10, 10).unwrap())
}

fn bch_15_7() -> &'static BchCode {
    static C: OnceLock<BchCode> = OnceLock::new();
    C.get_or_init(|| bch_generator(4, 2).unwrap())
}

fn pbch_codes() -> &'static [PbchCode] {
    static C: OnceLock<Vec<PbchCode>> = OnceLock::new();
    C.get_or_init(|| {
        [(4, 7, 4, 4), (4, 7, 0, 8), (4, 11, 4, 0), (5, 16, 5, 10), (10, 923, 30, 70), (10, 923, 100, 0), (10, 923, 50, 50)]
            .iter()
            .map(|&(m, k, l, r)| pbch_construct(m, k, l, r).unwrap())
            .collect()
    })
}

fn toy() -> &'static PbchCode {
    &pbch_codes()[0]
}

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn field_degree() -> impl Strategy<Value = u32> {
    2u32..=10
}

// ---------------------------------------------------------------- galois

/// Associativity, commutativity and distributivity, 10^4 triples per field size.
pub fn galois_field_axioms() -> Result<(), String> {
    for m in 2..=10u32 {
        let q = 1u16 << m;
        check(CASES, (0..q, 0..q, 0..q), |(a, b, c)| {
            let f = field(m);
            ensure(f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c)), || format!("assoc m={m} {a} {b} {c}"))?;
            ensure(f.mul(a, b) == f.mul(b, a), || format!("comm m={m} {a} {b}"))?;
            ensure(f.add(a, b) == f.add(b, a), || format!("add comm m={m}"))?;
            ensure(f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)), || format!("distrib m={m} {a} {b} {c}"))?;
            if a != 0 {
                ensure(f.mul(a, f.inv(a).unwrap()) == 1, || format!("inverse m={m} {a}"))?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// `a^(2^m - 1) = 1` for every nonzero `a`.
pub fn galois_order_divides() -> Result<(), String> {
    check(CASES, (field_degree(), any::<u16>()), |(m, raw)| {
        let f = field(m);
        let a = (raw % ((1u16 << m) - 1)) + 1;
        ensure(f.pow(a, (1u64 << m) - 1) == 1, || format!("m={m} a={a}"))
    })
}

/// Minimal polynomials of nonzero elements divide `x^(2^m - 1) + 1`.
pub fn galois_minimal_polynomial_divides() -> Result<(), String> {
    check(CASES, (field_degree(), any::<u16>()), |(m, raw)| {
        let f = field(m);
        let a = (raw % ((1u16 << m) - 1)) + 1;
        let mp = f.minimal_polynomial(a).unwrap();
        let n = (1usize << m) - 1;
        let modulus = BinaryPolynomial::from_exponents(&[n, 0]);
        let (_, rem) = modulus.divmod(&mp).unwrap();
        ensure(rem.is_zero(), || format!("m={m} a={a}"))?;
        ensure(mp.eval(a, f) == 0, || format!("not a root: m={m} a={a}"))
    })
}

/// `q·d + r = p` with `deg r < deg d`.
pub fn galois_divmod_round_trip() -> Result<(), String> {
    let poly = || prop::collection::vec(any::<u64>(), 0..4).prop_map(BinaryPolynomial::from_words);
    check(CASES, (poly(), poly()), |(p, d)| {
        if d.is_zero() {
            return Ok(());
        }
        let (q, r) = p.divmod(&d).unwrap();
        ensure(q.mul(&d).add(&r) == p, || "recomposition".into())?;
        ensure(r.is_zero() || r.degree() < d.degree(), || "remainder degree".into())
    })
}

// ---------------------------------------------------------------- bch

fn round_trip_case(code: &BchCode, seed: u64, weight: usize) -> Result<(), TestCaseError> {
    let mut rng = rng_from(seed);
    let msg = random_bits(code.dimension(), &mut rng);
    let cw = code.encode(&msg).unwrap();
    let mut word = cw.clone();
    for p in random_positions(code.n(), weight, &mut rng) {
        word.flip(p);
    }
    match code.decode(&word) {
        Ok((fixed, count)) => {
            ensure(fixed == cw && count == weight, || format!("n={} t={} e={weight} seed={seed}", code.n(), code.t()))
        }
        Err(e) => Err(TestCaseError::fail(format!("decode error {e}: n={} e={weight} seed={seed}", code.n()))),
    }
}

/// Random codes with random error patterns of weight at most t.
pub fn bch_round_trip_small() -> Result<(), String> {
    let codes = small_bch();
    check(CASES, (0..codes.len(), any::<u64>(), any::<usize>()), |(i, seed, w)| {
        let code = &codes[i];
        round_trip_case(code, seed, w % (code.t() + 1))
    })
}

/// `[1023, 923]` t=10 with 10^5 random patterns of weight at most 10.
pub fn bch_round_trip_1023() -> Result<(), String> {
    check(10 * CASES, (any::<u64>(), 0usize..=10), |(seed, w)| round_trip_case(bch_1023(), seed, w))
}

/// Every message of `[15, 7]` with every error pattern of weight at most 2.
pub fn bch_round_trip_15_7_exhaustive() -> Result<(), String> {
    let code = bch_15_7();
    let patterns = subsets_up_to(15, 2);
    for m in 0..128u64 {
        let cw = code.encode(&BitVec::from_words(vec![m], 7)).unwrap();
        for p in &patterns {
            let mut word = cw.clone();
            p.iter().for_each(|&i| word.flip(i));
            match code.decode(&word) {
                Ok((fixed, count)) if fixed == cw && count == p.len() => {}
                other => return Err(format!("msg {m} pattern {p:?}: {other:?}")),
            }
        }
    }
    Ok(())
}

/// Whatever the decoder returns has all syndromes zero.
pub fn bch_decoder_output_is_codeword() -> Result<(), String> {
    let codes = small_bch();
    check(CASES, (0..codes.len() + 1, any::<u64>(), 0usize..40), |(i, seed, w)| {
        let code = if i == codes.len() { bch_1023() } else { &codes[i] };
        let mut rng = rng_from(seed);
        let mut word = code.encode(&random_bits(code.dimension(), &mut rng)).unwrap();
        for p in random_positions(code.n(), w.min(code.n()), &mut rng) {
            word.flip(p);
        }
        if let Ok((out, _)) = code.decode(&word) {
            let s = code.syndromes(&out).unwrap();
            ensure(s.iter().all(|&x| x == 0), || format!("n={} w={w} seed={seed}", code.n()))?;
        }
        Ok(())
    })
}

/// `encode(a ⊕ b) = encode(a) ⊕ encode(b)`.
pub fn bch_linearity() -> Result<(), String> {
    let codes = small_bch();
    check(CASES, (0..codes.len() + 1, any::<u64>()), |(i, seed)| {
        let code = if i == codes.len() { bch_1023() } else { &codes[i] };
        let mut rng = rng_from(seed);
        let a = random_bits(code.dimension(), &mut rng);
        let b = random_bits(code.dimension(), &mut rng);
        let lhs = code.encode(&a.xor(&b)).unwrap();
        let rhs = code.encode(&a).unwrap().xor(&code.encode(&b).unwrap());
        ensure(lhs == rhs, || format!("n={} seed={seed}", code.n()))
    })
}

/// Minimum weight over the 127 nonzero codewords of `[15, 7]` is 5.
pub fn bch_min_distance_15_7() -> Result<(), String> {
    let code = bch_15_7();
    let d = (1..128u64)
        .map(|m| code.encode(&BitVec::from_words(vec![m], 7)).unwrap().count_ones())
        .min()
        .unwrap();
    if d == 5 {
        Ok(())
    } else {
        Err(format!("minimum distance {d}"))
    }
}

// ---------------------------------------------------------------- pbch

/// Defect count biased toward the masking capacity of the code.
fn random_defects(code: &PbchCode, rng: &mut ChaCha8Rng) -> DefectPattern {
    let cap = (code.l() + code.l() / 4 + 2).min(code.n());
    let count = rng.random_range(0..=cap);
    let positions = random_positions(code.n(), count, rng);
    let stuck = (0..count).map(|_| rng.random::<bool>()).collect();
    DefectPattern::new(code.n(), positions, stuck).unwrap()
}

fn pbch_case(seed: u64, i: usize) -> (&'static PbchCode, BitVec, DefectPattern) {
    let code = &pbch_codes()[i];
    let mut rng = rng_from(seed);
    let msg = random_bits(code.k(), &mut rng);
    let defects = random_defects(code, &mut rng);
    (code, msg, defects)
}

/// Decoding a noiseless masked codeword returns the message, masked or not.
pub fn pbch_masking_never_corrupts() -> Result<(), String> {
    check(CASES, (any::<u64>(), 0..pbch_codes().len()), |(seed, i)| {
        let (code, msg, defects) = pbch_case(seed, i);
        let out = code.mask_encode(&msg, &defects).unwrap();
        ensure(out.masked == (out.unmasked_count == 0), || "masked flag".into())?;
        ensure(out.unmasked_count == defects.violations(&out.codeword), || "unmasked count".into())?;
        match code.decode(&out.codeword) {
            Ok((m, 0)) => ensure(m == msg, || format!("code {i} seed {seed}")),
            other => Err(TestCaseError::fail(format!("code {i} seed {seed}: {other:?}"))),
        }
    })
}

/// `codeword ⊕ msg·G1` lies in the row space of G0, via the returned `z`.
pub fn pbch_superposition() -> Result<(), String> {
    check(CASES, (any::<u64>(), 0..pbch_codes().len()), |(seed, i)| {
        let (code, msg, defects) = pbch_case(seed, i);
        let out = code.mask_encode(&msg, &defects).unwrap();
        let residual = out.codeword.xor(&code.message_word(&msg).unwrap());
        ensure(residual == code.g0().left_mul(&out.masking_vector), || format!("code {i} seed {seed}"))
    })
}

fn exists_masking_vector(code: &PbchCode, base: &BitVec, defects: &DefectPattern) -> bool {
    (0..1u64 << code.l()).any(|z| {
        let mut w = base.clone();
        for r in 0..code.l() {
            if (z >> r) & 1 == 1 {
                w.xor_assign(code.g0().row(r));
            }
        }
        defects.violations(&w) == 0
    })
}

/// On `[15, 7, 4, 4]` with at most 4 defects, `masked` agrees with a
/// search over all 16 masking vectors.
pub fn pbch_toy_oracle_equivalence() -> Result<(), String> {
    check(CASES, (0u64..128, prop::sample::subsequence((0..15).collect::<Vec<usize>>(), 0..=4), any::<u8>()), |(m, pos, vals)| {
        let code = toy();
        let msg = BitVec::from_words(vec![m], 7);
        let stuck = (0..pos.len()).map(|i| (vals >> i) & 1 == 1).collect();
        let defects = DefectPattern::new(15, pos.clone(), stuck).unwrap();
        let out = code.mask_encode(&msg, &defects).unwrap();
        let expected = exists_masking_vector(code, &code.message_word(&msg).unwrap(), &defects);
        ensure(out.masked == expected, || format!("msg {m} positions {pos:?} values {vals:#b}"))
    })
}

/// Largest `d` such that every defect set of size `d`, with every stuck
/// pattern, is masked. Exhaustive; the zero message covers all right-hand
/// sides because stuck values range over everything.
pub fn guaranteed_maskable(code: &PbchCode) -> usize {
    let n = code.n();
    let zero = BitVec::zeros(code.k());
    let subsets = subsets_up_to(n, code.l() + 1);
    let mut worst = usize::MAX;
    for pos in subsets {
        if pos.len() >= worst {
            continue;
        }
        for vals in 0..1u32 << pos.len() {
            let stuck = (0..pos.len()).map(|i| (vals >> i) & 1 == 1).collect();
            let defects = DefectPattern::new(n, pos.clone(), stuck).unwrap();
            if !code.mask_encode(&zero, &defects).unwrap().masked {
                worst = pos.len();
                break;
            }
        }
    }
    worst - 1
}

/// Guaranteed-maskable count is non-decreasing in `l` at fixed `n` and `k`.
pub fn pbch_tradeoff_monotone() -> Result<(), String> {
    for (m, k, ls) in [(4u32, 7usize, vec![0usize, 4, 8]), (4, 11, vec![0, 4])] {
        let n = (1usize << m) - 1;
        let (mut prev, mut built) = (0, 0);
        for l in ls {
            let Ok(code) = pbch_construct(m, k, l, n - k - l) else { continue };
            built += 1;
            let d = guaranteed_maskable(&code);
            if d < prev {
                return Err(format!("[{n}, {k}, {l}, {}]: {d} < {prev}", n - k - l));
            }
            prev = d;
        }
        if built < 2 {
            return Err(format!("only {built} constructible codes for n={n}, k={k}"));
        }
    }
    Ok(())
}

/// Emitted codewords have zero syndromes under the error-correcting code.
pub fn pbch_syndrome_zero() -> Result<(), String> {
    check(CASES, (any::<u64>(), 0..pbch_codes().len()), |(seed, i)| {
        let (code, msg, defects) = pbch_case(seed, i);
        let out = code.mask_encode(&msg, &defects).unwrap();
        let s = code.err_code().syndromes(&out.codeword).unwrap();
        ensure(s.iter().all(|&x| x == 0), || format!("code {i} seed {seed}"))
    })
}

// ---------------------------------------------------------------- channel

fn written_grid(seed: u64, dims: Dims, params: &ChannelParams<f64>) -> CellGrid<f64> {
    let mut rng = rng_from(seed);
    let mut grid = erase_block(dims, params, &mut rng);
    for ssl in 0..dims.ssl {
        for wl in 0..dims.wl {
            let page = Page::new(wl, ssl);
            let target = random_bits(dims.bl, &mut rng);
            program_page(&mut grid, page, &target, params).unwrap();
        }
    }
    grid
}

/// Shifts `a` then `b` equal one application of `a + b`, for the word-line
/// term and for the full fan-out.
pub fn channel_ici_linearity() -> Result<(), String> {
    let shifts = || prop::collection::vec(0.0f64..6.0, 12);
    check(CASES, (any::<u64>(), shifts(), shifts(), 0.0f64..0.3, 0.0f64..0.1, 0.0f64..0.1), |(seed, a, b, g, gbl, gssl)| {
        let params = ChannelParams { gamma_wl: g, gamma_bl: gbl, gamma_ssl: gssl, ..ChannelParams::default() };
        let base = written_grid(seed, Dims::new(3, 12, 2), &params);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let page = Page::new(1, 0);

        let (mut two, mut one) = (base.clone(), base.clone());
        apply_ici(&mut two, page, &a, &params).unwrap();
        apply_ici(&mut two, page, &b, &params).unwrap();
        apply_ici(&mut one, page, &sum, &params).unwrap();
        let close = |x: &CellGrid<f64>, y: &CellGrid<f64>| {
            x.all_voltages().iter().zip(y.all_voltages()).all(|(u, v)| (u - v).abs() <= 1e-12)
        };
        ensure(close(&two, &one), || "apply_ici".into())?;

        let (mut two, mut one) = (base.clone(), base);
        interfere(&mut two, page, &a, &params).unwrap();
        interfere(&mut two, page, &b, &params).unwrap();
        interfere(&mut one, page, &sum, &params).unwrap();
        ensure(close(&two, &one), || "interfere".into())
    })
}

/// With every erase voltage below ν, programmed cells land in `[ν, ν + ΔVpp)`.
pub fn channel_ispp_overshoot() -> Result<(), String> {
    check(CASES, (any::<u64>(), 0.05f64..2.0, 0.0f64..3.0), |(seed, step, nu)| {
        let params = ChannelParams { step, verify_level: nu, ..ChannelParams::default() };
        let dims = Dims::planar(1, 64);
        let mut rng = rng_from(seed);
        let mut grid = erase_block(dims, &params, &mut rng);
        let erased = grid.voltages(0).to_vec();
        let target = random_bits(64, &mut rng);
        let shifts = program_page(&mut grid, 0, &target, &params).unwrap();
        for j in 0..64 {
            let v = grid.voltages(0)[j];
            if target.get(j) || erased[j] >= nu {
                ensure(v == erased[j] && shifts[j] == 0.0, || format!("untouched cell {j} moved"))?;
            } else {
                ensure(v >= nu && v < nu + step, || format!("cell {j}: {v} outside [{nu}, {})", nu + step))?;
                let pulses = shifts[j] / step;
                ensure((pulses - pulses.round()).abs() < 1e-9, || "shift is not whole pulses".into())?;
            }
        }
        Ok(())
    })
}

/// Write sequence on a page set: program, detrap, interfere, identify.
fn run_pages(
    grid: &mut CellGrid<f64>,
    pages: &[Page],
    targets: &[BitVec],
    params: &ChannelParams<f64>,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    pages
        .iter()
        .zip(targets)
        .map(|(&page, target)| {
            let shifts = program_page(grid, page, target, params).unwrap();
            apply_fast_detrapping(grid, page, params, rng);
            interfere(grid, page, &shifts, params).unwrap();
            identify_detrapped(grid, page, params, rng, IdentifyMode::TwoRead, Some(target)).unwrap()
        })
        .collect()
}

/// With `γ_bl = γ_ssl = 0`, SSL group 0 evolves the same whether or not
/// other groups exist and are written.
pub fn channel_ssl_invariance() -> Result<(), String> {
    check(CASES, (any::<u64>(), 1usize..4), |(seed, extra)| {
        let params = ChannelParams::<f64>::default();
        let (wl, bl) = (4, 16);
        let mut msg_rng = rng_from(seed ^ 0xabcd);
        let targets: Vec<BitVec> = (0..wl).map(|_| random_bits(bl, &mut msg_rng)).collect();
        let pages0: Vec<Page> = (0..wl).map(|w| Page::new(w, 0)).collect();

        // Erase draws come from their own stream, as in the pipeline.
        let mut planar = erase_block(Dims::planar(wl, bl), &params, &mut rng_from(seed));
        let mut rng = rng_from(!seed);
        let ids_planar = run_pages(&mut planar, &pages0, &targets, &params, &mut rng);

        let mut stacked = erase_block(Dims::new(wl, bl, 1 + extra), &params, &mut rng_from(seed));
        let mut rng = rng_from(!seed);
        let ids_stacked = run_pages(&mut stacked, &pages0, &targets, &params, &mut rng);
        // Interleave writes to the other groups; group 0 must not notice.
        for ssl in 1..=extra {
            let pages: Vec<Page> = (0..wl).map(|w| Page::new(w, ssl)).collect();
            run_pages(&mut stacked, &pages, &targets, &params, &mut rng);
        }
        ensure(ids_planar == ids_stacked, || "identified cells differ".into())?;
        for w in 0..wl {
            ensure(planar.voltages(w) == stacked.voltages(Page::new(w, 0)), || format!("wl {w} voltages differ"))?;
        }
        Ok(())
    })
}

fn small_config() -> SimConfig<f64> {
    SimConfig {
        codes: vec![CodeSpec::new(4, 7, 4, 4)],
        wl_count: 5,
        bl_count: 15,
        trials: 1,
        ..SimConfig::default()
    }
}

/// Same seed, same grid, same reads.
pub fn channel_seed_determinism() -> Result<(), String> {
    let cfg = small_config();
    check(CASES, any::<u64>(), |seed| {
        let (a, ra) = simulate_block(toy(), &cfg, &mut BlockRng::new(seed)).unwrap();
        let (b, rb) = simulate_block(toy(), &cfg, &mut BlockRng::new(seed)).unwrap();
        ensure(a == b && ra == rb, || format!("seed {seed}"))?;
        let mut r1 = rng_from(seed);
        let mut r2 = rng_from(seed);
        let p = &cfg.channel;
        let x = read_page(&a.grid, 2, p.read_level, p, &mut r1, true);
        let y = read_page(&b.grid, 2, p.read_level, p, &mut r2, true);
        ensure(x == y, || format!("reads differ, seed {seed}"))
    })
}

/// Program shifts start at zero after erase and never decrease while the
/// block is written.
pub fn channel_program_shift_monotone() -> Result<(), String> {
    check(CASES, any::<u64>(), |seed| {
        let params = ChannelParams::<f64> { gamma_bl: 0.02, ..ChannelParams::default() };
        let dims = Dims::new(4, 12, 2);
        let mut rng = rng_from(seed);
        let mut grid = erase_block(dims, &params, &mut rng);
        let all_shifts = |g: &CellGrid<f64>| -> Vec<f64> {
            (0..dims.ssl).flat_map(|s| (0..dims.wl).map(move |w| Page::new(w, s))).flat_map(|p| g.program_shifts(p).to_vec()).collect()
        };
        let mut prev = all_shifts(&grid);
        ensure(prev.iter().all(|&s| s == 0.0), || "nonzero shift after erase".into())?;
        for ssl in 0..dims.ssl {
            for wl in 0..dims.wl {
                let page = Page::new(wl, ssl);
                let target = random_bits(dims.bl, &mut rng);
                let shifts = program_page(&mut grid, page, &target, &params).unwrap();
                apply_fast_detrapping(&mut grid, page, &params, &mut rng);
                interfere(&mut grid, page, &shifts, &params).unwrap();
                let now = all_shifts(&grid);
                ensure(now.iter().zip(&prev).all(|(a, b)| a >= b), || format!("shift decreased at {page:?}"))?;
                prev = now;
            }
        }
        grid.erase(&params, &mut rng);
        ensure(all_shifts(&grid).iter().all(|&s| s == 0.0), || "erase did not reset shifts".into())
    })
}

/// Noiseless reads return 1 exactly for cells below the level.
pub fn channel_read_convention() -> Result<(), String> {
    check(CASES, (any::<u64>(), -3.0f64..3.0), |(seed, level)| {
        let params = ChannelParams::<f64>::default();
        let grid = written_grid(seed, Dims::planar(2, 32), &params);
        let mut rng = rng_from(seed);
        let read = read_page(&grid, 1, level, &params, &mut rng, false);
        let v = grid.voltages(1);
        ensure((0..32).all(|j| read.bits.get(j) == (v[j] < level)), || format!("level {level}"))
    })
}

/// At `σ_random = 10⁻³` the oracle set contains at least 99% of the cells
/// the two-read procedure identifies, pooled over all cases. The oracle
/// also takes S1 cells below η, which a read at η cannot separate from S0.
pub fn channel_identify_agreement() -> Result<(), String> {
    let (found, contained) = (std::cell::Cell::new(0u64), std::cell::Cell::new(0u64));
    check(CASES, any::<u64>(), |seed| {
        let params = ChannelParams::<f64> { random_sigma: 1e-3, ..ChannelParams::default() };
        let bl = 128;
        let mut rng = rng_from(seed);
        let mut grid = erase_block(Dims::planar(1, bl), &params, &mut rng);
        let target = random_bits(bl, &mut rng);
        program_page(&mut grid, 0, &target, &params).unwrap();
        apply_fast_detrapping(&mut grid, 0, &params, &mut rng);
        let two = identify_detrapped(&grid, 0, &params, &mut rng, IdentifyMode::TwoRead, None).unwrap();
        let oracle = identify_detrapped(&grid, 0, &params, &mut rng, IdentifyMode::Oracle, None).unwrap();
        found.set(found.get() + two.len() as u64);
        contained.set(contained.get() + two.iter().filter(|j| oracle.contains(j)).count() as u64);
        let in_window = oracle.iter().all(|&j| grid.voltages(0)[j] < params.identify_level && grid.intended(0)[j] == Level::S1);
        ensure(in_window, || "oracle picked a cell outside the window".into())
    })?;
    let (found, contained) = (found.get(), contained.get());
    if found > 0 && contained as f64 >= 0.99 * found as f64 {
        Ok(())
    } else {
        Err(format!("oracle contains {contained} of {found} two-read cells"))
    }
}

// ---------------------------------------------------------------- pipeline

/// When the next word line masks all identified cells, each of them ends
/// exactly `γ_wl · ΔV` above its post-detrap voltage, with `ΔV > 0`.
pub fn pipeline_compensation_exact() -> Result<(), String> {
    let cfg = SimConfig { wl_count: 6, ..small_config() };
    let gamma = cfg.channel.gamma_wl;
    check(CASES, any::<u64>(), |seed| {
        let (block, _) = simulate_block(toy(), &cfg, &mut BlockRng::new(seed)).unwrap();
        for wl in 0..block.wls.len() - 1 {
            let (rec, upper) = (&block.wls[wl], &block.wls[wl + 1]);
            if !upper.encode.masked {
                continue;
            }
            let fin = block.grid.voltages(wl);
            for &j in &rec.identified {
                let dv = upper.program_shift[j];
                ensure(dv > 0.0, || format!("seed {seed} wl {wl} cell {j}: upper cell not programmed"))?;
                ensure(fin[j] == rec.after_detrap[j] + gamma * dv, || format!("seed {seed} wl {wl} cell {j}"))?;
            }
        }
        Ok(())
    })
}

/// Without detrapping nothing is identified (oracle identification), so
/// compensation on and off give bit-identical blocks and outcomes.
pub fn pipeline_on_off_identical_without_detrap() -> Result<(), String> {
    let mut base = small_config();
    base.channel.detrap_mean = 0.0;
    base.channel.detrap_sigma = 0.0;
    base.identify_mode = IdentifyMode::Oracle;
    let on = SimConfig { compensation: Compensation::On, ..base.clone() };
    let off = SimConfig { compensation: Compensation::Off, ..base };
    check(CASES, any::<u64>(), |seed| {
        let a = simulate_block(toy(), &on, &mut BlockRng::new(seed)).unwrap();
        let b = simulate_block(toy(), &off, &mut BlockRng::new(seed)).unwrap();
        ensure(a == b, || format!("seed {seed}"))
    })
}

/// Point estimates of P_fail over a σ_random grid never decrease.
pub fn pipeline_monotone_in_sigma_random() -> Result<(), String> {
    let mut prev = (0.0, 0.0);
    for sigma in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let mut cfg = SimConfig { trials: 2000, wl_count: 5, ..small_config() };
        cfg.channel.random_sigma = sigma;
        let p = detrap::pipeline::run_trials(&cfg).map_err(|e| e.to_string())?[0].p_fail;
        if p < prev.1 {
            return Err(format!("P_fail {p} at σ={sigma} below {} at σ={}", prev.1, prev.0));
        }
        prev = (sigma, p);
    }
    Ok(())
}

/// The 95% Wilson interval covers the true rate in ≥ 93% of 1000 meta-trials.
pub fn pipeline_ci_coverage() -> Result<(), String> {
    let mut rng = rng_from(0xc0ffee);
    for (q, n) in [(0.01, 5000u64), (0.05, 1000), (0.2, 300), (0.5, 100)] {
        let covered = (0..1000)
            .filter(|_| {
                let s = (0..n).filter(|_| rng.random_bool(q)).count() as u64;
                let (lo, hi) = wilson_interval(s, n);
                lo <= q && q <= hi
            })
            .count();
        if covered < 930 {
            return Err(format!("q={q} n={n}: coverage {covered}/1000"));
        }
    }
    Ok(())
}

/// `P_fail = failures / trials_total` and the interval contains it.
pub fn pipeline_failure_stats() -> Result<(), String> {
    check(CASES, (1u64..1_000_000, any::<u64>()), |(total, raw)| {
        let failures = raw % (total + 1);
        let t = Tally { codewords: total, failures, ..Tally::default() };
        let s = FailureStats::from_tally(&t, 15);
        ensure(s.p_fail == failures as f64 / total as f64, || "p_fail".into())?;
        ensure(s.ci_lo <= s.p_fail && s.p_fail <= s.ci_hi, || format!("{failures}/{total}"))?;
        ensure(0.0 <= s.ci_lo && s.ci_hi <= 1.0, || "bounds".into())
    })
}
