//! The dual off-diagonal pipeline: Poisson summation for S₅, the integral
//! I(m,n,c), the nested integral J(m), and the assembly of O₂*.
//!
//!   S₅ = Σ_n n^{it} e(√(nm)/c) S(n,m;c) W(n/N)
//!      = (N^{1+it}/c) Σ_n C(n) I(m,n,c),   C(n) = c e(−m n̄/c) or 0,
//!   I(m,n,c) = ∫ v^{it} W(v) e((√(mNv) − nNv)/c) dv,
//!   J(m) = ∫ I(vÑ,n₁,c₁) conj(I(vÑ,n₂,c₂)) U(v) e(−mv) dv.

use crate::arith::{gcd, mod_inverse, mul_mod};
use crate::error::{Error, Result};
use crate::expsums::{charsum_grid, congruence_indicator, kloosterman_with};
use crate::oscint::{oscillatory_quadrature, second_derivative_bound_check, PhaseSpec, SecondDerivativeReport, SmoothWeight};
use crate::report::{SuiteReport, Verdict};
use crate::special::{ComplexEstimate, Method};
use crate::unity::{csum, rsum, RootTable};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

pub const MAX_POISSON_C: u64 = 50;
pub const MAX_POISSON_N: u64 = 100_000;
pub const MAX_T: f64 = 2000.0;
pub const MAX_J_N: u64 = 10_000;
const I_TOL: f64 = 1e-12;
const MAX_DUAL_TERMS: i64 = 20_000;

/// (N, t, K, Q) with Ñ = Q²K⁴/N derived, never set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineParams {
    pub n_len: u64,
    pub t: f64,
    pub k_scale: f64,
    pub q_scale: f64,
    pub dual_len: f64,
}

#[derive(Deserialize)]
struct RawParams {
    n_len: u64,
    t: f64,
    k_scale: f64,
    q_scale: Option<f64>,
    dual_len: Option<f64>,
}

impl<'de> Deserialize<'de> for PipelineParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(d)?;
        let p = match raw.q_scale {
            Some(q) => PipelineParams::new(raw.n_len, raw.t, raw.k_scale, q),
            None => PipelineParams::with_default_q(raw.n_len, raw.t, raw.k_scale),
        }
        .map_err(serde::de::Error::custom)?;
        if let Some(claimed) = raw.dual_len {
            p.check_dual(claimed).map_err(serde::de::Error::custom)?;
        }
        Ok(p)
    }
}

impl PipelineParams {
    pub fn new(n_len: u64, t: f64, k_scale: f64, q_scale: f64) -> Result<Self> {
        if n_len == 0 || !(k_scale > 0.0) || !(q_scale > 0.0) || !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need N, K, Q > 0 and t >= 0, got N={n_len}, t={t}, K={k_scale}, Q={q_scale}"
            )));
        }
        Ok(PipelineParams {
            n_len,
            t,
            k_scale,
            q_scale,
            dual_len: q_scale * q_scale * k_scale.powi(4) / n_len as f64,
        })
    }

    /// Q = N/K², the smallest Q with QK² ≥ N.
    pub fn with_default_q(n_len: u64, t: f64, k_scale: f64) -> Result<Self> {
        Self::new(n_len, t, k_scale, n_len as f64 / (k_scale * k_scale))
    }

    pub fn c_range(&self) -> f64 {
        self.q_scale
    }

    pub fn check_dual(&self, claimed: f64) -> Result<()> {
        if (claimed - self.dual_len).abs() > 1e-9 * self.dual_len {
            return Err(Error::Precondition(format!(
                "Ñ = {claimed} is inconsistent with Q²K⁴/N = {}",
                self.dual_len
            )));
        }
        Ok(())
    }

    /// K ≤ t^{1/2}
    pub fn k_regime_ok(&self) -> bool {
        self.k_scale <= self.t.sqrt()
    }

    fn nf(&self) -> f64 {
        self.n_len as f64
    }
}

/// W on [1, 2] for n/N and y; U on [1, 2] for v.
pub fn default_weight() -> SmoothWeight {
    SmoothWeight::bump(1.0, 2.0)
}

/// Phase of I(m,n,c) in radians: t log y + 2π(√(mNy) − nNy)/c.
pub fn i_phase(m: f64, n: i64, c: u64, n_len: u64, t: f64) -> PhaseSpec {
    let a = TAU * (m * n_len as f64).sqrt() / c as f64;
    let b = TAU * n as f64 * n_len as f64 / c as f64;
    PhaseSpec::new(Arc::new(move |y: f64| t * y.ln() + a * y.sqrt() - b * y))
        .with_derivatives(
            Arc::new(move |y: f64| t / y + a / (2.0 * y.sqrt()) - b),
            Arc::new(move |y: f64| -t / (y * y) - a / (4.0 * y.powf(1.5))),
        )
        .with_scales(t + a + b.abs() + 1.0, 1.0)
}

fn i_value(w: &SmoothWeight, m: f64, n: i64, c: u64, n_len: u64, t: f64) -> Result<ComplexEstimate> {
    oscillatory_quadrature(w, &i_phase(m, n, c, n_len, t), I_TOL)
}

/// I(m,n,c) by adaptive quadrature.
pub fn i_integral(m: f64, n: i64, c: u64, p: &PipelineParams) -> Result<ComplexEstimate> {
    if c == 0 || !(m >= 0.0) {
        return Err(Error::InvalidArgument(format!("m = {m}, c = {c}")));
    }
    if p.t > MAX_T {
        return Err(Error::OutOfRange(format!("t = {} > {MAX_T}", p.t)));
    }
    i_value(&default_weight(), m, n, c, p.n_len, p.t)
}

#[derive(Debug, Clone, Serialize)]
pub struct IBoundReport {
    pub m: f64,
    pub n: i64,
    pub c: u64,
    pub t: f64,
    pub estimate: ComplexEstimate,
    /// 8 max|W| / √(t/8π), from |G₁″| ≥ t/(2π v²) on [1, 2]
    pub claimed_bound: f64,
    /// the same bound with r scanned on the support
    pub scan: SecondDerivativeReport,
    pub verdict: Verdict,
}

/// |I| against the second-derivative bound; requires t > 0.
pub fn i_bound_check(m: f64, n: i64, c: u64, p: &PipelineParams) -> Result<IBoundReport> {
    if !(p.t > 0.0) {
        return Err(Error::Precondition("the bound needs t > 0".into()));
    }
    let w = default_weight();
    let estimate = i_integral(m, n, c, p)?;
    let scan = second_derivative_bound_check(&w, &i_phase(m, n, c, p.n_len, p.t).scaled(1.0 / TAU))?;
    let claimed_bound = 8.0 * w.sup_norm(1025) / (p.t / (8.0 * PI)).sqrt();
    let mag = estimate.value.norm();
    Ok(IBoundReport {
        m,
        n,
        c,
        t: p.t,
        verdict: Verdict::from_check(mag <= claimed_bound && mag <= scan.bound),
        estimate,
        claimed_bound,
        scan,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DualTerm {
    pub n: i64,
    pub charsum: Complex64,
    pub integral: ComplexEstimate,
    pub term: Complex64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonReport {
    pub m: u64,
    pub c: u64,
    pub params: PipelineParams,
    pub direct: Complex64,
    pub dual: Complex64,
    /// Σ_n |S(n,m;c)| W(n/N), the natural size of S₅
    pub trivial_bound: f64,
    pub relative_gap: f64,
    pub dual_error: f64,
    /// 8ct/N
    pub cutoff: f64,
    pub n_range: (i64, i64),
    /// |n = 0 term|
    pub zero_term: f64,
    /// Σ_{n<0} |term|
    pub negative_terms: f64,
    /// Σ_{|n| > 8ct/N} |term|
    pub tail: f64,
    pub tail_fraction: f64,
    /// terms above 1e−14 of the trivial bound
    pub terms: Vec<DualTerm>,
    pub verdict: Verdict,
}

/// Both sides of the Poisson identity for S₅.
pub fn poisson_check_s5(m: u64, c: u64, p: &PipelineParams, tol: f64) -> Result<PoissonReport> {
    if c == 0 || c > MAX_POISSON_C {
        return Err(Error::OutOfRange(format!("c = {c} outside 1..={MAX_POISSON_C}")));
    }
    if p.n_len > MAX_POISSON_N || p.t > MAX_T {
        return Err(Error::OutOfRange(format!("N = {} or t = {} too large", p.n_len, p.t)));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let w = default_weight();
    let (nf, cf, mf, t) = (p.nf(), c as f64, m as f64, p.t);
    let table = RootTable::new(c as i64);
    let kl: Vec<f64> = (0..c as i64).map(|a| kloosterman_with(&table, a, m as i64).re).collect();
    let (lo, hi) = (p.n_len, 2 * p.n_len);
    let direct = csum((lo..=hi).map(|n| {
        let x = n as f64;
        let phase = t * x.ln() + TAU * (x * mf).sqrt() / cf;
        Complex64::from_polar(kl[(n % c) as usize] * w.eval(x / nf), phase)
    }));
    let trivial_bound = rsum((lo..=hi).map(|n| kl[(n % c) as usize].abs() * w.eval(n as f64 / nf)));

    let prefactor = Complex64::from_polar(nf / cf, t * nf.ln());
    let dual_term = |n: i64| -> Result<Option<DualTerm>> {
        let cs = charsum_grid(m as i64, n, c)?;
        let charsum = cs.closed_form.unwrap_or(cs.value);
        if charsum.norm() < 1e-9 {
            return Ok(None);
        }
        let integral = i_value(&w, mf, n, c, p.n_len, t)?;
        let term = prefactor * charsum * integral.value;
        Ok(Some(DualTerm { n, charsum, integral, term }))
    };
    // Stationary n lie in (c/N)[t/(4π) + √(mN)/(2√2 c), t/(2π) + √(mN)/(2c)].
    let stat_hi = (cf / nf * (t / TAU + (mf * nf).sqrt() / (2.0 * cf))).ceil() as i64;
    let cutoff = 8.0 * cf * t / nf;
    let must_reach = stat_hi.max(cutoff.ceil() as i64) + 2;
    let negligible = 1e-14 * trivial_bound.max(1e-300);

    let mut terms: BTreeMap<i64, Option<DualTerm>> = BTreeMap::new();
    terms.insert(0, dual_term(0)?);
    let mut quiet = 0;
    let mut k = 1i64;
    loop {
        if k > MAX_DUAL_TERMS {
            return Err(Error::NoConvergence {
                what: "dual sum of S5".into(),
                achieved: f64::NAN,
            });
        }
        let pair = [k, -k]
            .par_iter()
            .map(|&n| dual_term(n))
            .collect::<Result<Vec<_>>>()?;
        let mut computed = false;
        let mut small = true;
        for (n, term) in [k, -k].into_iter().zip(pair) {
            if let Some(d) = &term {
                computed = true;
                // |C(n)|/c ≤ 1, so N|I| bounds the term
                small &= d.integral.value.norm() < (negligible / nf).max(10.0 * d.integral.abs_error);
            }
            terms.insert(n, term);
        }
        if computed {
            quiet = if small { quiet + 1 } else { 0 };
        }
        if k >= must_reach && quiet >= 3 {
            break;
        }
        k += 1;
    }

    let present: Vec<&DualTerm> = terms.values().flatten().collect();
    let dual = csum(present.iter().map(|d| d.term));
    let dual_error = rsum(present.iter().map(|d| nf / cf * d.charsum.norm() * d.integral.abs_error));
    let zero_term = terms[&0].as_ref().map_or(0.0, |d| d.term.norm());
    let negative_terms = rsum(present.iter().filter(|d| d.n < 0).map(|d| d.term.norm()));
    let tail = rsum(present.iter().filter(|d| d.n.abs() as f64 > cutoff).map(|d| d.term.norm()));
    let relative_gap = (direct - dual).norm() / trivial_bound;
    let tail_fraction = tail / trivial_bound;
    let keep = 1e-14 * trivial_bound;
    Ok(PoissonReport {
        m,
        c,
        params: *p,
        direct,
        dual,
        trivial_bound,
        relative_gap,
        dual_error,
        cutoff,
        n_range: (-k, k),
        zero_term,
        negative_terms,
        tail,
        tail_fraction,
        terms: present.into_iter().filter(|d| d.term.norm() > keep).cloned().collect(),
        verdict: Verdict::from_check(relative_gap <= tol),
    })
}

/// Chebyshev series on [a, b].
#[derive(Debug, Clone)]
struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<Complex64>,
    /// max abs_error of the sampled values
    sample_error: f64,
}

impl Chebyshev {
    fn fit<F>(f: F, a: f64, b: f64, rel_tol: f64, max_degree: usize) -> Result<Chebyshev>
    where
        F: Fn(f64) -> Result<ComplexEstimate> + Sync,
    {
        let mut d = 64;
        loop {
            let nodes: Vec<f64> = (0..d)
                .map(|j| {
                    let x = (PI * (j as f64 + 0.5) / d as f64).cos();
                    0.5 * (a + b) + 0.5 * (b - a) * x
                })
                .collect();
            let vals = nodes.par_iter().map(|&v| f(v)).collect::<Result<Vec<_>>>()?;
            let sample_error = vals.iter().map(|e| e.abs_error).fold(0.0, f64::max);
            let mut coeffs: Vec<Complex64> = (0..d)
                .map(|k| {
                    let s = csum(vals.iter().enumerate().map(|(j, e)| {
                        e.value * (PI * k as f64 * (j as f64 + 0.5) / d as f64).cos()
                    }));
                    s * (2.0 / d as f64)
                })
                .collect();
            coeffs[0] *= 0.5;
            let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let tail = coeffs[d - d / 8..].iter().map(|c| c.norm()).fold(0.0, f64::max);
            if tail <= (rel_tol * peak).max(4.0 * sample_error) || peak == 0.0 {
                return Ok(Chebyshev { a, b, coeffs, sample_error: sample_error + 2.0 * tail * (d / 8) as f64 });
            }
            if 2 * d > max_degree {
                return Err(Error::NoConvergence {
                    what: format!("Chebyshev fit on [{a}, {b}] at degree {d}"),
                    achieved: tail / peak,
                });
            }
            d *= 2;
        }
    }

    fn eval(&self, v: f64) -> Complex64 {
        let x = (2.0 * v - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + b1 * (2.0 * x) - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + b1 * x - b2
    }
}

/// Trapezoid intervals on the support of U for J(m); U vanishes to all
/// orders at the endpoints so the rule is spectrally accurate.
const J_PANELS: usize = 16384;

/// I(vÑ, n, c) for v in the support of U, sampled on the trapezoid grid.
#[derive(Debug, Clone)]
struct IProfile {
    samples: Vec<Complex64>,
    error: f64,
    degree: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct JValue {
    pub m: i64,
    pub value: ComplexEstimate,
}

/// Cache of I-profiles for nested J(m) evaluations at fixed parameters.
pub struct JEngine {
    params: PipelineParams,
    w: SmoothWeight,
    u_samples: Vec<f64>,
    grid: Vec<f64>,
    profiles: std::sync::Mutex<BTreeMap<(i64, u64), Arc<IProfile>>>,
}

impl JEngine {
    pub fn new(p: &PipelineParams) -> Result<Self> {
        if p.n_len > MAX_J_N || p.t > MAX_T {
            return Err(Error::OutOfRange(format!("N = {} or t = {} too large", p.n_len, p.t)));
        }
        if (p.k_scale - p.t.cbrt().round()).abs() > 1e-9 {
            return Err(Error::Precondition(format!("K = {} ≠ round(t^(1/3))", p.k_scale)));
        }
        if p.q_scale * p.k_scale * p.k_scale < p.nf() * (1.0 - 1e-12) {
            return Err(Error::Precondition("need QK² ≥ N".into()));
        }
        let u = default_weight();
        let (a, b) = u.support();
        let grid: Vec<f64> = (0..=J_PANELS).map(|j| a + (b - a) * j as f64 / J_PANELS as f64).collect();
        Ok(JEngine {
            params: *p,
            w: default_weight(),
            u_samples: grid.iter().map(|&v| u.eval(v)).collect(),
            grid,
            profiles: Default::default(),
        })
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    fn profile(&self, n: i64, c: u64) -> Result<Arc<IProfile>> {
        if c == 0 {
            return Err(Error::InvalidArgument("c must be positive".into()));
        }
        if let Some(p) = self.profiles.lock().expect("lock").get(&(n, c)) {
            return Ok(p.clone());
        }
        let p = &self.params;
        let (a, b) = (self.grid[0], self.grid[J_PANELS]);
        let cheb = Chebyshev::fit(
            |v| i_value(&self.w, v * p.dual_len, n, c, p.n_len, p.t),
            a,
            b,
            1e-12,
            4096,
        )?;
        let samples: Vec<Complex64> = self.grid.par_iter().map(|&v| cheb.eval(v)).collect();
        let profile = Arc::new(IProfile {
            samples,
            error: cheb.sample_error,
            degree: cheb.coeffs.len(),
        });
        self.profiles.lock().expect("lock").insert((n, c), profile.clone());
        Ok(profile)
    }

    /// Chebyshev degree used for I(vÑ, n, c).
    pub fn profile_degree(&self, n: i64, c: u64) -> Result<usize> {
        Ok(self.profile(n, c)?.degree)
    }

    /// J(m) for every m in `ms`, sharing the product samples.
    pub fn j_many(&self, ms: &[i64], n1: i64, n2: i64, c1: u64, c2: u64) -> Result<Vec<JValue>> {
        let max_m = ms.iter().map(|m| m.unsigned_abs()).max().unwrap_or(0);
        if max_m as usize > J_PANELS / 4 {
            return Err(Error::OutOfRange(format!("|m| = {max_m} > {}", J_PANELS / 4)));
        }
        let (p1, p2) = (self.profile(n1, c1)?, self.profile(n2, c2)?);
        let h = (self.grid[J_PANELS] - self.grid[0]) / J_PANELS as f64;
        let g: Vec<Complex64> = (0..=J_PANELS)
            .map(|j| p1.samples[j] * p2.samples[j].conj() * self.u_samples[j])
            .collect();
        let amp1 = p1.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let amp2 = p2.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let l1_u: f64 = self.u_samples.iter().sum::<f64>() * h;
        let err = l1_u * (amp1 * p2.error + amp2 * p1.error + p1.error * p2.error) + 1e-15 * l1_u * amp1 * amp2;
        Ok(ms
            .par_iter()
            .map(|&m| {
                let value = csum(
                    g.iter()
                        .zip(&self.grid)
                        .map(|(gj, &v)| gj * Complex64::from_polar(h, -TAU * (m as f64 * v).fract())),
                );
                JValue {
                    m,
                    value: ComplexEstimate::new(value, err, Method::Quadrature),
                }
            })
            .collect())
    }

    pub fn j(&self, m: i64, n1: i64, n2: i64, c1: u64, c2: u64) -> Result<ComplexEstimate> {
        Ok(self.j_many(&[m], n1, n2, c1, c2)?[0].value)
    }
}

/// J(m; n₁, n₂, c₁, c₂) at parameters p.
pub fn j_integral(m: i64, n1: i64, n2: i64, c1: u64, c2: u64, p: &PipelineParams) -> Result<ComplexEstimate> {
    JEngine::new(p)?.j(m, n1, n2, c1, c2)
}

/// Fully nested adaptive quadrature for J(m), without interpolation.
pub fn j_integral_nested(m: i64, n1: i64, n2: i64, c1: u64, c2: u64, p: &PipelineParams, tol: f64) -> Result<ComplexEstimate> {
    let w = default_weight();
    let u = default_weight();
    let (a, b) = u.support();
    // about four panels per oscillation of the integrand
    let cycles = m.unsigned_abs() as f64 + (p.nf() * p.dual_len).sqrt() * (1.0 / c1 as f64 + 1.0 / c2 as f64) + 4.0;
    let panels = (4.0 * cycles).ceil() as usize;
    let breaks: Vec<f64> = (0..=panels).map(|j| a + (b - a) * j as f64 / panels as f64).collect();
    crate::oscint::integrate(
        |v| {
            let uv = u.eval(v);
            if uv == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let i1 = i_value(&w, v * p.dual_len, n1, c1, p.n_len, p.t).map(|e| e.value);
            let i2 = i_value(&w, v * p.dual_len, n2, c2, p.n_len, p.t).map(|e| e.value);
            match (i1, i2) {
                (Ok(x), Ok(y)) => x * y.conj() * uv * Complex64::from_polar(1.0, -TAU * (m as f64 * v).fract()),
                _ => Complex64::new(f64::NAN, f64::NAN),
            }
        },
        &breaks,
        tol,
        crate::oscint::DEFAULT_BUDGET / 1000,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct JTuple {
    pub n1: i64,
    pub n2: i64,
    pub c1: u64,
    pub c2: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct JTupleProfile {
    pub tuple: JTuple,
    pub j0: f64,
    /// t |J(0)|
    pub a0: f64,
    /// max_{1 ≤ |m| ≤ 2N/K²} tK |J(m)|
    pub a1: f64,
    pub argmax_a1: i64,
    /// max_{m ≥ 16N/K²} |J(m)| / |J(0)|
    pub far_ratio: f64,
    /// octave maxima of |J(m)| beyond 2N/K²
    pub octaves: Vec<(i64, f64)>,
    pub octave_trend_ok: bool,
    pub symmetry_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct JDecayReport {
    pub params: PipelineParams,
    pub tuples: Vec<JTupleProfile>,
    pub a0: f64,
    pub a1: f64,
    pub far_ratio: f64,
    pub cut: i64,
    pub verdict_j0: Verdict,
    pub verdict_jm: Verdict,
    pub verdict_decay: Verdict,
    pub verdict_trend: Verdict,
}

impl JDecayReport {
    pub fn verdict(&self) -> Verdict {
        self.verdict_j0.and(self.verdict_jm).and(self.verdict_decay).and(self.verdict_trend)
    }
}

/// Stationary n for I(vÑ, n, c) at v ∈ [1, 2]: the integers near
/// (c/N)(t/(2πy) + √(vÑ/N)/(2√y))·(N/c)… expressed through the phase slope.
pub fn stationary_n_range(c: u64, p: &PipelineParams) -> (i64, i64) {
    let cf = c as f64;
    let slope = |v: f64, y: f64| (cf / p.nf()) * (p.t / (TAU * y) + (v * p.dual_len * p.nf()).sqrt() / (2.0 * cf * y.sqrt()));
    let lo = slope(1.0, 2.0).floor() as i64;
    let hi = slope(2.0, 1.0).ceil() as i64;
    (lo.max(1), hi.max(1))
}

/// t|J(0)|, tK|J(m)| and the decay of |J(m)| for each tuple.
pub fn j_decay_suite(p: &PipelineParams, tuples: &[JTuple]) -> Result<JDecayReport> {
    let engine = JEngine::new(p)?;
    let base = (p.nf() / (p.k_scale * p.k_scale)).ceil() as i64;
    let near = 2 * base;
    let cut = 16 * base;
    let far_hi = 32 * base;
    let mut ms: Vec<i64> = (-near..=near).collect();
    ms.extend((near + 1..=far_hi).filter(|m| m % 4 == 0 || *m == cut));
    let mut profiles = Vec::new();
    for tu in tuples {
        let js = engine.j_many(&ms, tu.n1, tu.n2, tu.c1, tu.c2)?;
        let at = |m: i64| js.iter().find(|j| j.m == m).map(|j| j.value.value);
        let j0 = at(0).expect("m = 0 sampled").norm();
        let (mut a1, mut argmax) = (0.0f64, 1i64);
        for j in js.iter().filter(|j| j.m != 0 && j.m.abs() <= near) {
            let v = p.t * p.k_scale * j.value.value.norm();
            if v > a1 {
                a1 = v;
                argmax = j.m;
            }
        }
        let far_ratio = js
            .iter()
            .filter(|j| j.m >= cut)
            .map(|j| j.value.value.norm())
            .fold(0.0, f64::max)
            / j0.max(1e-300);
        let mut octaves = Vec::new();
        let mut lo = near;
        while lo < far_hi {
            let hi = (2 * lo).min(far_hi);
            let peak = js
                .iter()
                .filter(|j| j.m > lo && j.m <= hi)
                .map(|j| j.value.value.norm())
                .fold(0.0, f64::max);
            octaves.push((hi, peak));
            lo = hi;
        }
        let octave_trend_ok = octaves.windows(2).all(|w| w[1].1 <= 2.0 * w[0].1 + 1e-300)
            && octaves.last().map_or(true, |l| l.1 <= octaves[0].1);
        let mirrored = engine.j_many(&[-1, 0, 1], tu.n2, tu.n1, tu.c2, tu.c1)?;
        let symmetry_gap = mirrored
            .iter()
            .map(|mj| (at(-mj.m).expect("sampled") - mj.value.value.conj()).norm())
            .fold(0.0, f64::max);
        profiles.push(JTupleProfile {
            tuple: tu.clone(),
            j0,
            a0: p.t * j0,
            a1,
            argmax_a1: argmax,
            far_ratio,
            octaves,
            octave_trend_ok,
            symmetry_gap,
        });
    }
    let a0 = profiles.iter().map(|t| t.a0).fold(0.0, f64::max);
    let a1 = profiles.iter().map(|t| t.a1).fold(0.0, f64::max);
    let far_ratio = profiles.iter().map(|t| t.far_ratio).fold(0.0, f64::max);
    let trend = profiles.iter().all(|t| t.octave_trend_ok);
    Ok(JDecayReport {
        params: *p,
        a0,
        a1,
        far_ratio,
        cut,
        verdict_j0: Verdict::from_check(a0 <= 100.0),
        verdict_jm: Verdict::from_check(a1 <= 100.0),
        verdict_decay: Verdict::from_check(far_ratio <= 1e-6),
        verdict_trend: Verdict::from_check(trend),
        tuples: profiles,
    })
}

/// Default tuples for the J suite: diagonal and neighbouring (n, c) in the
/// stationary range at c ≈ Q.
pub fn default_j_tuples(p: &PipelineParams) -> Vec<JTuple> {
    let c = p.q_scale.round().max(1.0) as u64;
    let (lo, hi) = stationary_n_range(c, p);
    let n = ((lo + hi) / 2).max(1);
    let mut c2 = c + 1;
    while gcd(n, c2 as i64) != 1 {
        c2 += 1;
    }
    vec![
        JTuple { n1: n, n2: n, c1: c, c2: c },
        JTuple { n1: lo, n2: lo, c1: c, c2: c },
        JTuple { n1: n, n2: n + 1, c1: c, c2: c },
        JTuple { n1: n, n2: n, c1: c, c2 },
    ]
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AssemblyGrid {
    /// sampled c values in [Q, 2Q], at most 12
    pub c_values: usize,
    /// sampled n values per c, at most 20
    pub n_values: usize,
    /// sampled m values for the J profile, at most 30
    pub m_values: usize,
}

impl Default for AssemblyGrid {
    fn default() -> Self {
        AssemblyGrid {
            c_values: 6,
            n_values: 8,
            m_values: 30,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssemblyReport {
    pub params: PipelineParams,
    pub grid: AssemblyGrid,
    pub c_sample: Vec<u64>,
    pub tuples: usize,
    /// Ñ Σ_c c^{−2} Σ_n |J(0)|, extrapolated to the full ranges
    pub diagonal: f64,
    /// with one factor 1/(c₁c₂)
    pub offdiagonal_single: f64,
    /// with the factor 1/(c₁c₂) twice, as displayed
    pub offdiagonal_as_written: f64,
    pub diagonal_scale: f64,
    pub offdiagonal_scale: f64,
    pub diagonal_constant: f64,
    pub offdiagonal_constant_as_written: f64,
    pub offdiagonal_constant_single: f64,
    pub congruence_hits: usize,
    pub congruence_predicted: f64,
    pub congruence_ratio: f64,
    pub m_cut: i64,
    pub verdict_diagonal: Verdict,
    pub verdict_offdiagonal: Verdict,
    pub verdict_sparsity: Verdict,
}

fn sample_evenly(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    let span = hi - lo + 1;
    if count as u64 >= span {
        return (lo..=hi).collect();
    }
    let mut out: Vec<u64> = (0..count)
        .map(|j| lo + ((j as f64 + 0.5) * span as f64 / count as f64).floor() as u64)
        .collect();
    out.dedup();
    out
}

/// Assemble O₂* from measured J values on a sampled grid.
pub fn offdiagonal_assembly(p: &PipelineParams, grid: &AssemblyGrid) -> Result<AssemblyReport> {
    if grid.c_values < 4 || grid.n_values < 4 || grid.m_values < 4 {
        return Err(Error::Precondition("need at least 4 points per axis".into()));
    }
    if grid.c_values > 12 || grid.n_values > 20 || grid.m_values > 30 {
        return Err(Error::OutOfRange("grid exceeds 12 c, 20 n, 30 m values".into()));
    }
    let engine = JEngine::new(p)?;
    let q = p.q_scale.round().max(1.0) as u64;
    let c_sample = sample_evenly(q, 2 * q, grid.c_values);
    let c_weight = (q + 1) as f64 / c_sample.len() as f64;
    let n_range = |c: u64| -> (u64, Vec<u64>) {
        // n ~ ct/N, widened to include the stationary range
        let top = ((2.0 * c as f64 * p.t / p.nf()).ceil() as u64).max(stationary_n_range(c, p).1 as u64).max(1);
        (top, sample_evenly(1, top, grid.n_values))
    };
    let m_cut = (8.0 * p.nf() / (p.k_scale * p.k_scale)).ceil() as i64;
    let dual = p.dual_len;

    let mut diagonal = 0.0;
    let mut off_single = 0.0;
    let mut off_written = 0.0;
    let mut hits = 0usize;
    let mut predicted = 0.0;
    let mut tuples = 0usize;
    for &c1 in &c_sample {
        let (top1, ns1) = n_range(c1);
        let w1 = top1 as f64 / ns1.len() as f64;
        for &n in &ns1 {
            if gcd(n as i64, c1 as i64) != 1 {
                continue;
            }
            let j0 = engine.j(0, n as i64, n as i64, c1, c1)?.value.norm();
            diagonal += c_weight * w1 * dual * j0 / (c1 * c1) as f64;
        }
        for &c2 in &c_sample {
            let (top2, ns2) = n_range(c2);
            let w2 = top2 as f64 / ns2.len() as f64;
            let big = (c1 * c2) as i64;
            for &n1 in &ns1 {
                for &n2 in &ns2 {
                    if c1 == c2 && n1 == n2 {
                        continue;
                    }
                    let (Some(n1b), Some(n2b)) = (mod_inverse(n1 as i64, c1 as i64), mod_inverse(n2 as i64, c2 as i64)) else {
                        continue;
                    };
                    tuples += 1;
                    predicted += (2 * m_cut + 1) as f64 / big as f64;
                    // the unique residue class of m, then its representatives in [−m_cut, m_cut]
                    let r = (mul_mod(n1b, c2 as i64, big) - mul_mod(n2b, c1 as i64, big)).rem_euclid(big);
                    let mut ms = Vec::new();
                    let mut m = r - ((r + m_cut) / big) * big;
                    while m <= m_cut {
                        if m >= -m_cut {
                            debug_assert_eq!(congruence_indicator(m, n1 as i64, n2 as i64, c1, c2), Some(true));
                            ms.push(m);
                        }
                        m += big;
                    }
                    hits += ms.len();
                    if ms.is_empty() {
                        continue;
                    }
                    let js = engine.j_many(&ms, n1 as i64, n2 as i64, c1, c2)?;
                    let s: f64 = js.iter().map(|j| j.value.value.norm()).sum();
                    let weight = c_weight * c_weight * w1 * w2 * dual;
                    off_single += weight * s / big as f64;
                    off_written += weight * s / (big * big) as f64;
                }
            }
        }
    }
    let diagonal_scale = dual / p.nf();
    let offdiagonal_scale = dual * p.t / (p.nf() * p.k_scale.powi(3));
    let congruence_ratio = hits as f64 / predicted.max(1e-300);
    let diagonal_constant = diagonal / diagonal_scale;
    let offdiagonal_constant_as_written = off_written / offdiagonal_scale;
    Ok(AssemblyReport {
        params: *p,
        grid: *grid,
        c_sample,
        tuples,
        diagonal,
        offdiagonal_single: off_single,
        offdiagonal_as_written: off_written,
        diagonal_scale,
        offdiagonal_scale,
        diagonal_constant,
        offdiagonal_constant_as_written,
        offdiagonal_constant_single: off_single / offdiagonal_scale,
        congruence_hits: hits,
        congruence_predicted: predicted,
        congruence_ratio,
        m_cut,
        verdict_diagonal: Verdict::from_check(diagonal_constant <= 100.0),
        verdict_offdiagonal: Verdict::from_check(offdiagonal_constant_as_written <= 100.0),
        verdict_sparsity: Verdict::from_check((1.0 / 3.0..=3.0).contains(&congruence_ratio)),
    })
}

/// All pipeline checks at one parameter set, for the CLI.
pub fn pipeline_suite(p: &PipelineParams, grid: &AssemblyGrid) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("pipeline");
    let j = j_decay_suite(p, &default_j_tuples(p))?;
    r.push("j_decay", j.verdict(), &j);
    let a = offdiagonal_assembly(p, grid)?;
    let v = a.verdict_diagonal.and(a.verdict_offdiagonal).and(a.verdict_sparsity);
    r.push("offdiagonal_assembly", v, &a);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_are_coherent() {
        let p = PipelineParams::new(10_000, 1000.0, 10.0, 100.0).unwrap();
        assert!((p.dual_len - 1e4).abs() < 1e-9);
        assert!(p.check_dual(2e4).is_err());
        assert!(p.k_regime_ok());
        let q = PipelineParams::with_default_q(10_000, 1000.0, 10.0).unwrap();
        assert_eq!(q.q_scale, 100.0);
        let json = serde_json::to_string(&p).unwrap();
        let back: PipelineParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"n_len":10000,"t":1000,"k_scale":10,"q_scale":100,"dual_len":5}"#;
        assert!(serde_json::from_str::<PipelineParams>(bad).is_err());
        assert!(PipelineParams::new(0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn poisson_identity() {
        let p = PipelineParams::with_default_q(500, 100.0, 4.0).unwrap();
        let r = poisson_check_s5(1, 3, &p, 1e-6).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:e} {} {}", r.relative_gap, r.direct, r.dual);
        assert!(r.tail_fraction < 1e-8);
        let p = PipelineParams::with_default_q(300, 0.0, 4.0).unwrap();
        let r = poisson_check_s5(1, 1, &p, 1e-6).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:e}", r.relative_gap);
        assert!(r.zero_term > 0.5 * r.direct.norm());
        assert!(poisson_check_s5(1, 51, &p, 1e-6).is_err());
    }

    #[test]
    fn i_bounds_and_scaling() {
        let p = PipelineParams::new(1000, 400.0, 7.0, 20.0).unwrap();
        let r = i_bound_check(1.0, 1, 10, &p).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.claimed_bound - 8.0 / (400.0 / (8.0 * PI)).sqrt()).abs() < 1e-9);
        let p0 = PipelineParams::new(1000, 0.0, 7.0, 20.0).unwrap();
        assert!(i_integral(1.0, 0, 10, &p0).unwrap().value.is_finite());
        assert!(i_bound_check(1.0, 0, 10, &p0).is_err());
        // n chosen so that the stationary point sits near the peak of W
        let stationary = |t: f64| (50.0 * t / (TAU * 1000.0 * 1.5)).round() as i64;
        let p4 = PipelineParams::new(1000, 1600.0, 7.0, 20.0).unwrap();
        let a = i_integral(1.0, stationary(400.0), 50, &p).unwrap().value.norm();
        let b = i_integral(1.0, stationary(1600.0), 50, &p4).unwrap().value.norm();
        assert!((1.5..=3.0).contains(&(a / b)), "{}", a / b);
    }

    #[test]
    fn chebyshev_fit() {
        let c = Chebyshev::fit(
            |v| Ok(ComplexEstimate::new(Complex64::from_polar(1.0, 40.0 * v), 0.0, Method::Series)),
            1.0,
            2.0,
            1e-13,
            1024,
        )
        .unwrap();
        for v in [1.0, 1.1, 1.57, 2.0] {
            assert!((c.eval(v) - Complex64::from_polar(1.0, 40.0 * v)).norm() < 1e-12);
        }
    }

    #[test]
    fn j_matches_nested_quadrature() {
        let p = PipelineParams::new(1000, 216.0, 6.0, 28.0).unwrap();
        let engine = JEngine::new(&p).unwrap();
        let (lo, hi) = stationary_n_range(28, &p);
        let n = (lo + hi) / 2;
        for (m, n2, c2) in [(0i64, n, 28u64), (3, n, 28), (-2, n + 1, 29)] {
            let fast = engine.j(m, n, n2, 28, c2).unwrap();
            let slow = j_integral_nested(m, n, n2, 28, c2, &p, 1e-10).unwrap();
            let gap = (fast.value - slow.value).norm();
            assert!(gap < 1e-9 + fast.abs_error + slow.abs_error, "m={m}: {} vs {}", fast.value, slow.value);
        }
        let j0 = engine.j(0, n, n, 28, 28).unwrap().value;
        assert!(j0.re > 0.0 && j0.im.abs() < 1e-12 * j0.re);
        assert!(JEngine::new(&PipelineParams::new(1000, 216.0, 5.0, 40.0).unwrap()).is_err());
    }
}
