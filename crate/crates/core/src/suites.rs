//! Verification suites, one per acceptance criterion. Each returns a
//! [`SuiteReport`]; the CLI `all` command and the acceptance test run them.

use crate::arith::{gcd, is_prime, primes_up_to};
use crate::characters::{discover_average_convention, enumerate_characters, AverageConvention};
use crate::error::Result;
use crate::expsums::{charsum_congruence, charsum_grid, congruence_indicator, verify_twisted_factorization};
use crate::lfunc::{balance_check, central_value, exponent_scan, LFunctionSpec, SCAN_BALANCES};
use crate::modforms::{coefficient_bound_report, Eigenform};
use crate::oscint::{
    bessel_weighted_k_sum, oscillatory_quadrature, second_derivative_bound_check, stationary_phase_eval, suppression_ratio,
    KSumMode, PhaseSpec, SmoothWeight,
};
use crate::pipeline::{default_j_tuples, i_phase, j_decay_suite, poisson_check_s5, PipelineParams};
use crate::report::{SuiteReport, Verdict};
use crate::trace::{square_grid, trace_consistency};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Serialize)]
struct Worst {
    cases: usize,
    max_deviation: f64,
    argmax: Vec<i64>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            cases: 0,
            max_deviation: 0.0,
            argmax: Vec::new(),
        }
    }

    fn record(&mut self, dev: f64, at: &[i64]) {
        self.cases += 1;
        if dev > self.max_deviation || self.argmax.is_empty() {
            self.max_deviation = dev;
            self.argmax = at.to_vec();
        }
    }
}

/// Closed form of the complete sum for c ≤ `c_max` and the congruence
/// indicator form for coprime c₁, c₂ ≤ `pair_max`.
pub fn charsum_suite(c_max: u64, pair_max: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("charsum");
    let mut grid = Worst::new();
    for c in 1..=c_max {
        let ci = c as i64;
        for n in (0..ci.max(1)).filter(|&n| gcd(n, ci) == 1) {
            for m in 0..ci {
                let res = charsum_grid(m, n, c)?;
                grid.record(res.deviation.unwrap_or(f64::INFINITY), &[m, n, ci]);
            }
        }
    }
    r.push("closed_form", Verdict::from_check(grid.max_deviation <= 1e-9), &grid);

    let mut cong = Worst::new();
    for c1 in 1..=pair_max {
        for c2 in (1..=pair_max).filter(|&c2| gcd(c1 as i64, c2 as i64) == 1) {
            let (c1i, c2i) = (c1 as i64, c2 as i64);
            let big = c1i * c2i;
            for n1 in (1..=c1i).filter(|&n| gcd(n, c1i) == 1) {
                for n2 in (1..=c2i).filter(|&n| gcd(n, c2i) == 1) {
                    for m in 0..big {
                        let value = charsum_congruence(m, n1, n2, c1, c2)?;
                        let hit = congruence_indicator(m, n1, n2, c1, c2).unwrap_or(false);
                        let expected = if hit { big as f64 } else { 0.0 };
                        let dev = (value - num_complex::Complex64::new(expected, 0.0)).norm();
                        cong.record(dev, &[m, n1, n2, c1i, c2i]);
                    }
                }
            }
        }
    }
    r.push("congruence_indicator", Verdict::from_check(cong.max_deviation <= 1e-9), &cong);
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
struct FactorizationSweep {
    cases: usize,
    literal_failures: usize,
    corrected_failures: usize,
    max_corrected_deviation: f64,
    /// smallest (q, c, ν, n, m′) where the literal form fails, with the ratio rhs/lhs
    minimal_counterexample: Option<(Vec<i64>, Option<num_complex::Complex64>)>,
}

/// The twisted Kloosterman factorization for every primitive odd ψ mod q.
pub fn twisted_suite(primes: &[u64], c_max: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("twisted_factorization");
    let mut sweep = FactorizationSweep {
        cases: 0,
        literal_failures: 0,
        corrected_failures: 0,
        max_corrected_deviation: 0.0,
        minimal_counterexample: None,
    };
    for &q in primes {
        let qi = q as i64;
        let chars = enumerate_characters(q)?;
        for chi in chars.iter().filter(|c| c.is_primitive() && c.is_odd()) {
            for c in (1..=c_max).filter(|&c| gcd(c as i64, qi) == 1) {
                for nu in [0u32, 1] {
                    for n in 1..=3i64 {
                        for m_prime in (1..qi).filter(|&m| gcd(m, qi) == 1) {
                            let rep = verify_twisted_factorization(chi, n, m_prime, nu, c)?;
                            sweep.cases += 1;
                            sweep.max_corrected_deviation = sweep
                                .max_corrected_deviation
                                .max(rep.lhs_middle.difference)
                                .max(rep.lhs_corrected.difference);
                            if !rep.corrected_holds() {
                                sweep.corrected_failures += 1;
                            }
                            if !rep.all_hold() {
                                sweep.literal_failures += 1;
                                if sweep.minimal_counterexample.is_none() {
                                    let key = vec![qi, c as i64, nu as i64, n, m_prime];
                                    sweep.minimal_counterexample = Some((key, rep.lhs_rhs.ratio));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    r.push(
        "literal_form",
        // itemized, not gated: the corrected form is the documented variant
        if sweep.literal_failures == 0 { Verdict::Pass } else { Verdict::Inconclusive },
        &serde_json::json!({
            "cases": sweep.cases,
            "failures": sweep.literal_failures,
            "minimal_counterexample": sweep.minimal_counterexample,
        }),
    );
    r.push(
        "corrected_form",
        Verdict::from_check(sweep.corrected_failures == 0 && sweep.max_corrected_deviation <= 1e-9),
        &sweep,
    );
    Ok(r)
}

/// One closed-form convention for the odd-character average across all q.
pub fn average_suite(primes: &[u64]) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("character_average");
    let reports = primes
        .iter()
        .map(|&q| discover_average_convention(q, 1e-9))
        .collect::<Result<Vec<_>>>()?;
    let mut common: Vec<AverageConvention> = reports.first().map(|r| r.consistent.clone()).unwrap_or_default();
    for rep in &reports {
        common.retain(|c| rep.consistent.contains(c));
    }
    let fixed = common.first().copied();
    r.push(
        "fixed_convention",
        Verdict::from_check(fixed.is_some() && reports.iter().all(|r| r.m_prime_invariant)),
        &serde_json::json!({ "convention": fixed, "per_modulus": reports }),
    );
    Ok(r)
}

/// Petersson cancellation, rank-one structure, λ(2) recovery and the
/// two-dimensional spectral fit.
pub fn petersson_suite() -> Result<SuiteReport> {
    let mut r = SuiteReport::new("petersson");
    let k10 = trace_consistency(10, &square_grid(5), 1e-8)?;
    r.push("cancellation_k10", k10.verdict, &k10);
    let grid = square_grid(8);
    for k in [12u32, 16, 18, 20, 22, 26] {
        let rep = trace_consistency(k, &grid, 1e-6)?;
        let ratio = rep
            .singular_values
            .as_ref()
            .map_or(f64::INFINITY, |s| s.get(1).copied().unwrap_or(0.0) / s[0]);
        let v = rep.verdict.and(Verdict::from_check(ratio <= 1e-6));
        r.push(
            &format!("rank_one_k{k}"),
            v,
            &serde_json::json!({ "second_singular_ratio": ratio, "report": rep }),
        );
        if k == 12 {
            let expected = -24.0 / 2f64.powf(5.5);
            let got = rep
                .rank1
                .as_ref()
                .and_then(|c| c.recovery.iter().find(|x| x.m == 2))
                .map(|x| x.recovered)
                .unwrap_or(f64::NAN);
            r.push(
                "lambda2_k12",
                Verdict::from_check((got - expected).abs() <= 1e-7),
                &serde_json::json!({ "recovered": got, "expected": expected }),
            );
        }
    }
    let k24 = trace_consistency(24, &grid, 1e-6)?;
    r.push("dimension_two_k24", k24.verdict, &k24);
    Ok(r)
}

/// Direct against kernel evaluation of the Bessel-weighted k-sum, and the
/// sub-threshold suppression ratio.
pub fn besselsum_suite() -> Result<SuiteReport> {
    let mut r = SuiteReport::new("besselsum");
    let mut agree = Worst::new();
    for k in [8u32, 16, 32] {
        for x in [10.0, 1e2, 1e3, 1e4] {
            let d = bessel_weighted_k_sum(k, x, KSumMode::Direct)?;
            let q = bessel_weighted_k_sum(k, x, KSumMode::Kernel)?;
            agree.record((d.value - q.value).norm(), &[k as i64, x as i64]);
        }
    }
    r.push("direct_vs_kernel", Verdict::from_check(agree.max_deviation <= 1e-8), &agree);
    for k in [8u32, 16, 32] {
        let s = suppression_ratio(k, 1e6)?;
        r.push(&format!("suppression_k{k}"), s.verdict, &s);
    }
    Ok(r)
}

pub struct CorpusCase {
    pub label: String,
    pub weight: SmoothWeight,
    pub phase: PhaseSpec,
}

fn interior_root(d1: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> bool {
    d1(lo) * d1(hi) < 0.0
}

/// Phases from the k-sum and the dual off-diagonal at parameters p, each with
/// a single stationary point well inside the support of its weight.
pub fn stationary_corpus(p: &PipelineParams) -> Vec<CorpusCase> {
    let mut out = Vec::new();
    let k = p.k_scale;
    // uv − xπ²v²/K² in e() units
    for x in [k * k, 2.0 * k * k, 4.0 * k * k] {
        for u in [1.25, 1.5, 1.75] {
            let a = TAU * u;
            let b = TAU * x * PI * PI / (k * k);
            let v0 = a / (2.0 * b);
            let half = 2.0;
            let phase = PhaseSpec::new(Arc::new(move |v| a * v - b * v * v))
                .with_derivatives(Arc::new(move |v| a - 2.0 * b * v), Arc::new(move |_| -2.0 * b))
                .with_scales(2.0 * b * half * half, half);
            out.push(CorpusCase {
                label: format!("ksum u={u} x={x}"),
                weight: SmoothWeight::bump(v0 - half, v0 + half),
                phase,
            });
        }
    }
    let (nf, t, dual) = (p.n_len as f64, p.t, p.dual_len);
    let c1 = p.q_scale.round();
    let c2 = c1 + 1.0;
    let cross = (nf * dual).sqrt();
    for x3 in [1.25, 1.5, 1.75] {
        for n in 1..=20 {
            let nn = n as f64;
            // 2t log x − (N n/c₁) x² − (√(NÑ)/c₁) x x₃
            let (a1, b1) = (nf * nn / c1, cross * x3 / c1);
            let d1 = move |x: f64| 2.0 * t / x - 2.0 * a1 * x - b1;
            if interior_root(&d1, 1.2, 1.8) {
                let phase = PhaseSpec::new(Arc::new(move |x: f64| 2.0 * t * x.ln() - a1 * x * x - b1 * x))
                    .with_derivatives(Arc::new(d1), Arc::new(move |x: f64| -2.0 * t / (x * x) - 2.0 * a1))
                    .with_scales(2.0 * t + a1 + b1, 1.0);
                out.push(CorpusCase {
                    label: format!("G1 n={n} x3={x3}"),
                    weight: SmoothWeight::bump(1.0, 2.0),
                    phase,
                });
            }
            // −2t log x + (N n/c₂) x² + (√(NÑ)/c₂) x x₃
            let (a2, b2) = (nf * nn / c2, cross * x3 / c2);
            let d2 = move |x: f64| -2.0 * t / x + 2.0 * a2 * x + b2;
            if interior_root(&d2, 1.2, 1.8) {
                let phase = PhaseSpec::new(Arc::new(move |x: f64| -2.0 * t * x.ln() + a2 * x * x + b2 * x))
                    .with_derivatives(Arc::new(d2), Arc::new(move |x: f64| 2.0 * t / (x * x) + 2.0 * a2))
                    .with_scales(2.0 * t + a2 + b2, 1.0);
                out.push(CorpusCase {
                    label: format!("G2 n={n} x3={x3}"),
                    weight: SmoothWeight::bump(1.0, 2.0),
                    phase,
                });
            }
        }
    }
    for c in [c1 as u64, c2 as u64] {
        for v in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
            for n in 1..=4i64 {
                let h = i_phase(v * dual, n, c, p.n_len, t);
                if interior_root(&|y| h.d1(y), 1.2, 1.8) {
                    out.push(CorpusCase {
                        label: format!("I v={v} n={n} c={c}"),
                        weight: SmoothWeight::bump(1.0, 2.0),
                        phase: h,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct CorpusRow {
    label: String,
    quadrature: num_complex::Complex64,
    leading: num_complex::Complex64,
    relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
struct RandomCase {
    support: (f64, f64),
    coefficients: (f64, f64, f64, f64),
    value: f64,
    bound: f64,
}

/// Leading stationary-phase term against quadrature on the structured
/// corpus, and the second-derivative bound on a seeded random corpus.
pub fn stationary_suite(p: &PipelineParams, seed: u64, random_cases: usize) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("stationary_phase");
    let mut rows = Vec::new();
    for case in stationary_corpus(p) {
        let quad = oscillatory_quadrature(&case.weight, &case.phase, 1e-12)?;
        let lead = stationary_phase_eval(&case.weight, &case.phase, 0)?;
        rows.push(CorpusRow {
            relative_error: (lead.estimate.value - quad.value).norm() / quad.value.norm(),
            label: case.label,
            quadrature: quad.value,
            leading: lead.estimate.value,
        });
    }
    let worst = rows.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    r.push(
        "leading_term",
        Verdict::from_check(!rows.is_empty() && worst <= 0.02),
        &serde_json::json!({ "cases": rows.len(), "max_relative_error": worst, "rows": rows }),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut worst_ratio = 0.0f64;
    for _ in 0..random_cases {
        let lo = rng.gen_range(0.5..2.0);
        let hi = lo + rng.gen_range(0.25..2.0);
        let a: f64 = rng.gen_range(1.0..500.0);
        let c: f64 = rng.gen_range(0.0..500.0);
        let b: f64 = rng.gen_range(-1000.0..1000.0);
        let s: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        // s(a x² + b x − c log x), f″ = s(2a + c/x²)
        let f = PhaseSpec::new(Arc::new(move |x: f64| s * (a * x * x + b * x - c * x.ln())))
            .with_derivatives(
                Arc::new(move |x: f64| s * (2.0 * a * x + b - c / x)),
                Arc::new(move |x: f64| s * (2.0 * a + c / (x * x))),
            );
        let rep = second_derivative_bound_check(&SmoothWeight::bump(lo, hi), &f)?;
        let ratio = rep.value.value.norm() / rep.bound;
        worst_ratio = worst_ratio.max(ratio);
        if rep.verdict != Verdict::Pass {
            violations.push(RandomCase {
                support: (lo, hi),
                coefficients: (s, a, b, c),
                value: rep.value.value.norm(),
                bound: rep.bound,
            });
        }
    }
    r.push(
        "second_derivative_bound",
        Verdict::from_check(violations.is_empty()),
        &serde_json::json!({
            "seed": seed,
            "cases": random_cases,
            "max_value_over_bound": worst_ratio,
            "violations": violations,
        }),
    );
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
struct PoissonRow {
    m: u64,
    c: u64,
    n_len: u64,
    t: f64,
    relative_gap: f64,
    tail_fraction: f64,
    zero_term: f64,
    negative_terms: f64,
}

/// Poisson identity for S₅ on m ≤ 3, c ≤ 10, N ∈ {500, 1000, 2000},
/// t ∈ {0, 100, 500}.
pub fn poisson_suite(tol: f64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("poisson");
    let mut rows = Vec::new();
    for t in [0.0f64, 100.0, 500.0] {
        let k = t.cbrt().round().max(1.0);
        for n_len in [500u64, 1000, 2000] {
            let p = PipelineParams::with_default_q(n_len, t, k)?;
            for c in 1..=10u64 {
                for m in 1..=3u64 {
                    let rep = poisson_check_s5(m, c, &p, tol)?;
                    rows.push(PoissonRow {
                        m,
                        c,
                        n_len,
                        t,
                        relative_gap: rep.relative_gap,
                        tail_fraction: rep.tail_fraction,
                        zero_term: rep.zero_term,
                        negative_terms: rep.negative_terms,
                    });
                }
            }
        }
    }
    let gap = rows.iter().map(|x| x.relative_gap).fold(0.0, f64::max);
    let tail = rows.iter().map(|x| x.tail_fraction).fold(0.0, f64::max);
    r.push(
        "identity",
        Verdict::from_check(gap <= tol),
        &serde_json::json!({ "cases": rows.len(), "max_relative_gap": gap }),
    );
    r.push(
        "dual_tail",
        Verdict::from_check(tail <= 1e-8),
        &serde_json::json!({ "max_tail_fraction": tail, "rows": rows }),
    );
    // At t = 0 the cutoff 8ct/N is zero and every n ≠ 0 counts as tail.
    let positive_t = rows.iter().filter(|x| x.t > 0.0).map(|x| x.tail_fraction).fold(0.0, f64::max);
    r.push(
        "dual_tail_positive_t",
        Verdict::from_check(positive_t <= 1e-8),
        &serde_json::json!({ "max_tail_fraction": positive_t }),
    );
    Ok(r)
}

/// J(0), J(m) and the decay of J beyond 16N/K².
pub fn jdecay_suite(p: &PipelineParams) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("j_decay");
    let rep = j_decay_suite(p, &default_j_tuples(p))?;
    r.push("t_j0", rep.verdict_j0, &serde_json::json!({ "a0": rep.a0 }));
    r.push("tk_jm", rep.verdict_jm, &serde_json::json!({ "a1": rep.a1 }));
    r.push("decay", rep.verdict_decay, &serde_json::json!({ "far_ratio": rep.far_ratio, "cut": rep.cut }));
    r.push("octave_trend", rep.verdict_trend, &rep);
    Ok(r)
}

/// Balance invariance, conjugate symmetry and the exponent scan for Δ.
pub fn lvalue_suite(t_min: f64, t_max: f64, step: f64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("lvalue");
    let spec = LFunctionSpec::delta(20_000);
    let mut balance = Vec::new();
    for t in [0.0, 10.0, 100.0, 500.0] {
        balance.push(balance_check(&spec, t, &[0.5, 1.0, 2.0])?);
    }
    let spread = balance.iter().map(|b| b.relative_spread).fold(0.0, f64::max);
    r.push("balance_invariance", Verdict::from_check(spread <= 1e-6), &balance);

    let mut conj = 0.0f64;
    for t in [10.0, 100.0, 500.0] {
        let up = central_value(&spec, t, 1.0)?.value;
        let down = central_value(&spec, -t, 1.0)?.value;
        conj = conj.max((up - down.conj()).norm() / up.norm().max(1.0));
    }
    r.push(
        "conjugate_symmetry",
        Verdict::from_check(conj <= 1e-9),
        &serde_json::json!({ "max_relative_gap": conj }),
    );

    let scan = exponent_scan(&spec, t_min, t_max, step)?;
    r.push(
        "scan_consistency",
        Verdict::from_check(scan.summary.max_gap <= 1e-6 && scan.summary.flagged == 0),
        &serde_json::json!({ "balances": SCAN_BALANCES, "summary": scan.summary }),
    );
    let peak = scan.summary.peak_fit.as_ref().map(|f| f.slope);
    r.push(
        "peak_exponent",
        match peak {
            Some(_) => Verdict::Pass,
            None => Verdict::Inconclusive,
        },
        &serde_json::json!({ "fitted_exponent": peak, "reported_only": true }),
    );
    Ok(r)
}

/// Deligne and Rankin–Selberg checks for Δ up to x.
pub fn coefficient_suite(x: usize) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("coefficients");
    let rep = coefficient_bound_report(&Eigenform::delta(x + 1), x)?;
    r.push("deligne", Verdict::from_check(rep.max_deligne_ratio <= 1.0 + 1e-10), &rep);
    r.push("rankin_selberg", Verdict::from_check(rep.rs_within(0.1, 10.0)), &rep.rankin_selberg);
    Ok(r)
}

/// Primes 3 ≤ q ≤ 13.
pub fn small_odd_primes() -> Vec<u64> {
    primes_up_to(13).into_iter().filter(|&q| q >= 3 && is_prime(q)).collect()
}

/// Parameters shared by the stationary-phase and J suites.
pub fn reference_params() -> PipelineParams {
    PipelineParams::new(10_000, 1000.0, 10.0, 100.0).expect("valid constants")
}

pub type SuiteFn = Box<dyn Fn() -> Result<SuiteReport> + Send + Sync>;

/// The ten acceptance suites in order, with their runtime budgets in seconds.
pub fn acceptance(seed: u64) -> Vec<(usize, &'static str, f64, SuiteFn)> {
    vec![
        (1, "charsum", 60.0, Box::new(|| charsum_suite(40, 12))),
        (2, "twisted_factorization", 120.0, Box::new(|| twisted_suite(&[3, 5, 7, 11, 13], 20))),
        (3, "character_average", 60.0, Box::new(|| average_suite(&small_odd_primes()))),
        (4, "petersson", 120.0, Box::new(petersson_suite)),
        (5, "besselsum", 60.0, Box::new(besselsum_suite)),
        (6, "stationary_phase", 120.0, Box::new(move || stationary_suite(&reference_params(), seed, 200))),
        (7, "poisson", 180.0, Box::new(|| poisson_suite(1e-6))),
        (8, "j_decay", 300.0, Box::new(|| jdecay_suite(&reference_params()))),
        (9, "lvalue", 600.0, Box::new(|| lvalue_suite(100.0, 1000.0, 0.5))),
        (10, "coefficients", 30.0, Box::new(|| coefficient_suite(10_000))),
    ]
}
