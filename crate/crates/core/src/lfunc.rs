//! L(1/2 + it, f) for level-1 holomorphic eigenforms and ingested Maass
//! coefficients, via a smoothed approximate functional equation.
//!
//! With γ the gamma factor, Λ = γL and Λ(s) = ε Λ(1 − s),
//!
//!   L(s) = Σ λ(n) n^{−s} V_s(n b) + ε γ(1−s)/γ(s) Σ λ(n) n^{−(1−s)} V_{1−s}(n / b),
//!
//!   V_s(y) = (1/2πi) ∫_{(σ)} G(w) γ(s+w)/γ(s) y^{−w} dw/w,
//!
//! where b is the balance and G(w) = exp(w²/16). The gamma ratio carries the
//! conductor, so both pieces have length about √C_t up to the balance.

use crate::arith::divisor_count_table;
use crate::error::{Error, Result};
use crate::modforms::{rankin_selberg_profile, Eigenform};
use crate::oscint::SmoothWeight;
use crate::special::{ln_gamma, ComplexEstimate, Method};
use crate::unity::{csum, linear_fit, rsum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

/// G(w) = exp(w² / MOLLIFIER_SCALE).
pub const MOLLIFIER_SCALE: f64 = 16.0;
pub const MAX_SCAN_T: f64 = 5000.0;
pub const CONSISTENCY_TOL: f64 = 1e-6;
const TRUNCATION_TOL: f64 = 1e-13;
const RIGHT_SIGMA: f64 = 2.0;
const TAIL_SIGMAS: [f64; 6] = [3.0, 5.0, 8.0, 12.0, 18.0, 26.0];
const MAX_NODES_V: f64 = 600.0;
/// Rankin–Selberg partial-sum ratio window for ingested data.
pub const RS_WINDOW: (f64, f64) = (0.05, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GammaData {
    /// γ(s) = (2π)^{−s} Γ(s + (k−1)/2)
    Holomorphic { weight: u32 },
    /// γ(s) = π^{−s} Γ((s+δ+iν)/2) Γ((s+δ−iν)/2), δ = 1 for odd forms
    Maass { nu: f64, odd: bool },
}

impl GammaData {
    pub fn ln_gamma_factor(&self, s: Complex64) -> Result<Complex64> {
        match *self {
            GammaData::Holomorphic { weight } => {
                Ok(-s * TAU.ln() + ln_gamma(s + (weight as f64 - 1.0) / 2.0)?)
            }
            GammaData::Maass { nu, odd } => {
                let d = if odd { 1.0 } else { 0.0 };
                let inu = Complex64::new(0.0, nu);
                Ok(-s * PI.ln() + ln_gamma((s + d + inu) / 2.0)? + ln_gamma((s + d - inu) / 2.0)?)
            }
        }
    }

    /// Distance from Re w = 0 to the first pole of γ(1/2 + it + w).
    fn pole_gap(&self) -> f64 {
        match *self {
            GammaData::Holomorphic { weight } => weight as f64 / 2.0,
            GammaData::Maass { odd, .. } => {
                if odd {
                    1.5
                } else {
                    0.5
                }
            }
        }
    }

    /// Analytic conductor C_t: |k/2 + it|²/(2π)² or |s² + ν²|/(2π)² at s = 1/2 + it.
    pub fn conductor(&self, t: f64) -> f64 {
        match *self {
            GammaData::Holomorphic { weight } => {
                Complex64::new(weight as f64 / 2.0, t).norm_sqr() / (TAU * TAU)
            }
            GammaData::Maass { nu, .. } => {
                let s = Complex64::new(0.5, t);
                (s * s + nu * nu).norm() / (TAU * TAU)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "origin", rename_all = "lowercase")]
pub enum CoefficientOrigin {
    Computed { weight: u32 },
    Ingested { path: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSource {
    pub origin: CoefficientOrigin,
    /// λ(n) indexed by n; λ(0) is unused and stored as 0.
    #[serde(skip)]
    pub lambda: Vec<f64>,
    pub n_max: usize,
}

impl CoefficientSource {
    pub fn new(origin: CoefficientOrigin, lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() < 2 {
            return Err(Error::InsufficientCoefficients {
                needed: 1,
                available: 0,
            });
        }
        if (lambda[1] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("λ(1) = {} ≠ 1", lambda[1])));
        }
        if let Some(n) = lambda.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("λ({n}) is not finite")));
        }
        let n_max = lambda.len() - 1;
        Ok(CoefficientSource { origin, lambda, n_max })
    }

    pub fn from_eigenform(f: &Eigenform) -> Result<Self> {
        let mut lambda = f.lambda.clone();
        lambda[0] = 0.0;
        Self::new(CoefficientOrigin::Computed { weight: f.weight }, lambda)
    }

    /// Smallest B with |λ(n)| ≤ B √n on the stored range, and at least 2.
    fn sqrt_bound(&self) -> f64 {
        self.lambda
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, v)| v.abs() / (n as f64).sqrt())
            .fold(2.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    /// "deligne": |λ(n)| ≤ d(n); "ingested": |λ(n)| ≤ 2 n^{7/64}.
    pub rule: &'static str,
    pub violations: usize,
    pub first_violation: Option<usize>,
    pub max_ratio: f64,
    pub rs_min: f64,
    pub rs_max: f64,
}

fn bound_check(lambda: &[f64], deligne: bool) -> BoundCheck {
    let n_max = lambda.len() - 1;
    let d = if deligne { divisor_count_table(n_max) } else { Vec::new() };
    let (mut violations, mut first, mut max_ratio) = (0, None, 0.0f64);
    for (n, v) in lambda.iter().enumerate().skip(1) {
        let bound = if deligne {
            d[n] as f64
        } else {
            2.0 * (n as f64).powf(7.0 / 64.0)
        };
        let r = v.abs() / bound;
        max_ratio = max_ratio.max(r);
        if r > 1.0 + 1e-10 {
            violations += 1;
            first.get_or_insert(n);
        }
    }
    let rs = rankin_selberg_profile(lambda, n_max);
    BoundCheck {
        rule: if deligne { "deligne" } else { "ingested" },
        violations,
        first_violation: first,
        max_ratio,
        rs_min: rs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        rs_max: rs.iter().map(|r| r.1).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LFunctionSpec {
    pub gamma: GammaData,
    pub coefficients: CoefficientSource,
    pub root_number: Complex64,
    pub bounds: BoundCheck,
}

impl LFunctionSpec {
    /// Level-1 holomorphic eigenform, root number i^k.
    pub fn holomorphic(f: &Eigenform) -> Result<Self> {
        let coefficients = CoefficientSource::from_eigenform(f)?;
        let bounds = bound_check(&coefficients.lambda, true);
        if bounds.violations > 0 {
            return Err(Error::Precondition(format!(
                "{} coefficients exceed the Deligne bound, first at n = {:?}",
                bounds.violations, bounds.first_violation
            )));
        }
        let root_number = Complex64::i().powu(f.weight);
        Ok(LFunctionSpec {
            gamma: GammaData::Holomorphic { weight: f.weight },
            coefficients,
            root_number: Complex64::new(root_number.re.round(), root_number.im.round()),
            bounds,
        })
    }

    /// Ramanujan Δ with λ(n) for n ≤ n_max.
    pub fn delta(n_max: usize) -> Self {
        Self::holomorphic(&Eigenform::delta(n_max + 1)).expect("Δ satisfies Deligne")
    }

    /// Maass form data. The Rankin–Selberg ratio must lie in `RS_WINDOW`;
    /// violations of |λ(n)| ≤ 2 n^{7/64} are only recorded.
    pub fn maass(nu: f64, odd: bool, root_number: Complex64, coefficients: CoefficientSource) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::InvalidArgument(format!("nu = {nu}")));
        }
        if (root_number.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("|root number| = {}", root_number.norm())));
        }
        let bounds = bound_check(&coefficients.lambda, false);
        if bounds.rs_min < RS_WINDOW.0 || bounds.rs_max > RS_WINDOW.1 {
            return Err(Error::Precondition(format!(
                "Rankin–Selberg ratio range [{:.4}, {:.4}] outside [{}, {}]",
                bounds.rs_min, bounds.rs_max, RS_WINDOW.0, RS_WINDOW.1
            )));
        }
        Ok(LFunctionSpec {
            gamma: GammaData::Maass { nu, odd },
            coefficients,
            root_number,
            bounds,
        })
    }

    pub fn n_max(&self) -> usize {
        self.coefficients.n_max
    }
}

/// Parse a Maass coefficient file: `# nu = …`, `# epsilon = ±1`,
/// `# parity = even|odd` headers, then `n,lambda_n` rows starting at n = 1.
pub fn parse_maass(text: &str, origin: &str) -> Result<LFunctionSpec> {
    let (mut nu, mut eps, mut odd) = (None, None, false);
    let mut lambda = vec![0.0];
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        if let Some(rest) = line.strip_prefix('#') {
            let Some((key, value)) = rest.split_once('=') else { continue };
            let value = value.trim();
            match key.trim() {
                "nu" => nu = Some(value.parse::<f64>().map_err(|e| parse_err(format!("nu: {e}")))?),
                "epsilon" => {
                    eps = Some(match value {
                        "+1" | "1" => 1.0,
                        "-1" => -1.0,
                        _ => return Err(parse_err(format!("epsilon must be +1 or -1, got {value}"))),
                    })
                }
                "parity" => {
                    odd = match value {
                        "even" => false,
                        "odd" => true,
                        _ => return Err(parse_err(format!("parity must be even or odd, got {value}"))),
                    }
                }
                other => return Err(parse_err(format!("unknown header key {other}"))),
            }
            continue;
        }
        let (n, v) = line
            .split_once(',')
            .ok_or_else(|| parse_err(format!("expected n,lambda_n, got {line}")))?;
        let n: usize = n.trim().parse().map_err(|e| parse_err(format!("n: {e}")))?;
        let v: f64 = v.trim().parse().map_err(|e| parse_err(format!("lambda: {e}")))?;
        if n != lambda.len() {
            return Err(parse_err(format!("expected n = {}, got {n}", lambda.len())));
        }
        lambda.push(v);
    }
    let nu = nu.ok_or(Error::Parse {
        line: 0,
        message: "missing '# nu = ' header".into(),
    })?;
    let eps = eps.unwrap_or(if odd { -1.0 } else { 1.0 });
    let source = CoefficientSource::new(
        CoefficientOrigin::Ingested {
            path: origin.to_string(),
        },
        lambda,
    )?;
    LFunctionSpec::maass(nu, odd, Complex64::new(eps, 0.0), source)
}

pub fn load_maass(path: &Path) -> Result<LFunctionSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_maass(&text, &path.display().to_string())
}

/// Trapezoid nodes for (1/2πi)∫_{(σ)} G(w) γ(s+w)/γ(s) y^{−w} dw/w.
#[derive(Debug, Clone)]
struct Contour {
    sigma: f64,
    v0: f64,
    h: f64,
    coeffs: Vec<Complex64>,
    abs_sum: f64,
    /// 1 when the line lies left of the pole at w = 0.
    residue: f64,
}

impl Contour {
    fn build(gamma: &GammaData, s: Complex64, sigma: f64, h: f64) -> Result<Contour> {
        let ln_ref = gamma.ln_gamma_factor(s)?;
        let node = |v: f64| -> Result<Complex64> {
            let w = Complex64::new(sigma, v);
            let ln = w * w / MOLLIFIER_SCALE + gamma.ln_gamma_factor(s + w)? - ln_ref;
            Ok(ln.exp() * h / (TAU * w))
        };
        let walk = |dir: f64| -> Result<Vec<Complex64>> {
            let (mut out, mut peak, mut quiet) = (Vec::new(), 0.0f64, 0);
            let mut j = if dir > 0.0 { 0.0 } else { 1.0 };
            loop {
                let v = dir * j * h;
                if v.abs() > MAX_NODES_V {
                    return Err(Error::NoConvergence {
                        what: "AFE contour did not decay".into(),
                        achieved: out.last().map_or(f64::NAN, |c: &Complex64| c.norm()),
                    });
                }
                let c = node(v)?;
                peak = peak.max(c.norm());
                out.push(c);
                quiet = if v.abs() > 8.0 && c.norm() < 1e-24 * peak { quiet + 1 } else { 0 };
                if quiet >= 4 {
                    return Ok(out);
                }
                j += 1.0;
            }
        };
        let up = walk(1.0)?;
        let mut coeffs = walk(-1.0)?;
        let below = coeffs.len();
        coeffs.reverse();
        coeffs.extend(up);
        let abs_sum = coeffs.iter().map(|c| c.norm()).sum();
        Ok(Contour {
            sigma,
            v0: -(below as f64) * h,
            h,
            coeffs,
            abs_sum,
            residue: if sigma < 0.0 { 1.0 } else { 0.0 },
        })
    }

    /// (value, rounding bound)
    fn eval(&self, y: f64) -> (Complex64, f64) {
        let l = y.ln();
        let base = (-self.sigma * l).exp();
        let step = Complex64::from_polar(1.0, -self.h * l);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut z = Complex64::new(0.0, 0.0);
        for (j, c) in self.coeffs.iter().enumerate() {
            if j % 32 == 0 {
                z = Complex64::from_polar(1.0, -(self.v0 + j as f64 * self.h) * l);
            }
            acc += c * z;
            z *= step;
        }
        let err = 64.0 * f64::EPSILON * self.abs_sum * base * (1.0 + l.abs());
        (self.residue + base * acc, err)
    }
}

/// V_s on both sides of the transition, with tail majorants.
#[derive(Debug, Clone)]
struct AfePiece {
    right: Contour,
    left: Contour,
    sqrt_c: f64,
    /// (σ, M_σ) with |V_s(y)| ≤ M_σ y^{−σ}
    majorants: Vec<(f64, f64)>,
}

fn majorant(gamma: &GammaData, s: Complex64, sigma: f64) -> Result<f64> {
    let ln_ref = gamma.ln_gamma_factor(s)?;
    let h = 0.25;
    let f = |v: f64| -> Result<f64> {
        let w = Complex64::new(sigma, v);
        let ln = w * w / MOLLIFIER_SCALE + gamma.ln_gamma_factor(s + w)? - ln_ref;
        Ok(ln.re.exp() / w.norm())
    };
    let mut total = f(0.0)?;
    let mut peak = total;
    for dir in [1.0, -1.0] {
        let mut j = 1.0;
        loop {
            let v = dir * j * h;
            let x = f(v)?;
            total += x;
            peak = peak.max(x);
            if (v.abs() > 8.0 && x < 1e-20 * peak) || v.abs() > MAX_NODES_V {
                break;
            }
            j += 1.0;
        }
    }
    // trapezoid of a smooth positive integrand, doubled for safety
    Ok(2.0 * total * h / TAU)
}

impl AfePiece {
    fn new(gamma: &GammaData, s: Complex64, sqrt_c: f64) -> Result<AfePiece> {
        let gap = gamma.pole_gap();
        let left_sigma = -(gap / 2.0).min(2.0);
        let right = Contour::build(gamma, s, RIGHT_SIGMA, RIGHT_SIGMA / 6.0)?;
        let left = Contour::build(gamma, s, left_sigma, left_sigma.abs() / 6.0)?;
        let majorants = TAIL_SIGMAS
            .iter()
            .map(|&sg| majorant(gamma, s, sg).map(|m| (sg, m)))
            .collect::<Result<Vec<_>>>()?;
        Ok(AfePiece {
            right,
            left,
            sqrt_c,
            majorants,
        })
    }

    fn v(&self, y: f64) -> (Complex64, f64) {
        if y >= self.sqrt_c {
            self.right.eval(y)
        } else {
            self.left.eval(y)
        }
    }

    /// Length N and tail bound for Σ_{n>N} |λ(n)| n^{−1/2} |V(nβ)| with |λ(n)| ≤ B√n.
    fn length(&self, beta: f64, b: f64) -> (usize, f64) {
        let tail = |n: f64, sg: f64, m: f64| b * m * beta.powf(-sg) * n.powf(1.0 - sg) / (sg - 1.0);
        self.majorants
            .iter()
            .map(|&(sg, m)| {
                let n = (b * m * beta.powf(-sg) / ((sg - 1.0) * TRUNCATION_TOL)).powf(1.0 / (sg - 1.0));
                let n = n.ceil().max(1.0);
                (n as usize, tail(n, sg, m))
            })
            .min_by_key(|p| p.0)
            .expect("nonempty")
    }
}

/// Everything in the AFE at one t that does not depend on the balance.
#[derive(Debug, Clone)]
struct AfeContext {
    t: f64,
    first: AfePiece,
    second: AfePiece,
    /// ε γ(1−s)/γ(s)
    root_factor: Complex64,
}

impl AfeContext {
    fn new(spec: &LFunctionSpec, t: f64) -> Result<AfeContext> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("t = {t}")));
        }
        let s = Complex64::new(0.5, t);
        let g = &spec.gamma;
        let sqrt_c = g.conductor(t).sqrt();
        let root_factor = spec.root_number * (g.ln_gamma_factor(s.conj())? - g.ln_gamma_factor(s)?).exp();
        Ok(AfeContext {
            t,
            first: AfePiece::new(g, s, sqrt_c)?,
            second: AfePiece::new(g, s.conj(), sqrt_c)?,
            root_factor,
        })
    }

    fn lengths(&self, src: &CoefficientSource, balance: f64) -> ((usize, f64), (usize, f64)) {
        let b = src.sqrt_bound();
        (self.first.length(balance, b), self.second.length(1.0 / balance, b))
    }

    fn evaluate(&self, src: &CoefficientSource, balance: f64) -> Result<(ComplexEstimate, usize)> {
        check_balance(balance)?;
        let ((n1, tail1), (n2, tail2)) = self.lengths(src, balance);
        let needed = n1.max(n2);
        if needed > src.n_max {
            return Err(Error::InsufficientCoefficients {
                needed,
                available: src.n_max,
            });
        }
        let piece = |piece: &AfePiece, n_len: usize, sign: f64, beta: f64| {
            let mut err = 0.0;
            let sum = csum((1..=n_len).map(|n| {
                let nf = n as f64;
                let (v, e) = piece.v(nf * beta);
                let a = src.lambda[n] / nf.sqrt();
                err += a.abs() * (e + 4.0 * f64::EPSILON * (v.norm() * (1.0 + (self.t * nf.ln()).abs())));
                a * Complex64::from_polar(1.0, sign * self.t * nf.ln()) * v
            }));
            (sum, err)
        };
        let (s1, e1) = piece(&self.first, n1, -1.0, balance);
        let (s2, e2) = piece(&self.second, n2, 1.0, 1.0 / balance);
        let value = s1 + self.root_factor * s2;
        let abs_error = tail1 + tail2 + e1 + e2 + 1e-14 * value.norm();
        Ok((ComplexEstimate::new(value, abs_error, Method::Quadrature), n1 + n2))
    }
}

fn check_balance(balance: f64) -> Result<()> {
    if !(0.25..=4.0).contains(&balance) {
        return Err(Error::InvalidArgument(format!("balance {balance} outside [1/4, 4]")));
    }
    Ok(())
}

/// V_t(balance · y) with V from the contour integral at s = 1/2 + it.
pub fn afe_weight(y: f64, t: f64, spec: &LFunctionSpec, balance: f64) -> Result<Complex64> {
    if !(y > 0.0) {
        return Err(Error::InvalidArgument(format!("y = {y} must be positive")));
    }
    check_balance(balance)?;
    let s = Complex64::new(0.5, t);
    let piece = AfePiece::new(&spec.gamma, s, spec.gamma.conductor(t).sqrt())?;
    Ok(piece.v(balance * y).0)
}

/// Number of coefficients the AFE needs at (t, balance).
pub fn required_length(spec: &LFunctionSpec, t: f64, balance: f64) -> Result<usize> {
    check_balance(balance)?;
    let ctx = AfeContext::new(spec, t)?;
    let ((n1, _), (n2, _)) = ctx.lengths(&spec.coefficients, balance);
    Ok(n1.max(n2))
}

pub fn central_value(spec: &LFunctionSpec, t: f64, balance: f64) -> Result<ComplexEstimate> {
    check_balance(balance)?;
    Ok(AfeContext::new(spec, t)?.evaluate(&spec.coefficients, balance)?.0)
}

/// Λ(1/2 + it) = γ(1/2 + it) L(1/2 + it).
pub fn completed_value(spec: &LFunctionSpec, t: f64, balance: f64) -> Result<Complex64> {
    let l = central_value(spec, t, balance)?;
    Ok(spec.gamma.ln_gamma_factor(Complex64::new(0.5, t))?.exp() * l.value)
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceReport {
    pub t: f64,
    pub values: Vec<(f64, Complex64)>,
    /// max |L_b − L_b′| / max(1, |L|)
    pub relative_spread: f64,
    pub max_claimed_error: f64,
}

/// Evaluate at several balances sharing one AFE context.
pub fn balance_check(spec: &LFunctionSpec, t: f64, balances: &[f64]) -> Result<BalanceReport> {
    let ctx = AfeContext::new(spec, t)?;
    let mut values = Vec::with_capacity(balances.len());
    let mut max_claimed_error = 0.0f64;
    for &b in balances {
        let (est, _) = ctx.evaluate(&spec.coefficients, b)?;
        max_claimed_error = max_claimed_error.max(est.abs_error);
        values.push((b, est.value));
    }
    let scale = values.iter().map(|v| v.1.norm()).fold(1.0, f64::max);
    let mut spread = 0.0f64;
    for a in &values {
        for b in &values {
            spread = spread.max((a.1 - b.1).norm());
        }
    }
    Ok(BalanceReport {
        t,
        values,
        relative_spread: spread / scale,
        max_claimed_error,
    })
}

/// S(N) = Σ λ(n) n^{it} W(n/N) over the support of W.
pub fn sn_sum(f: &CoefficientSource, n: u64, t: f64, w: &SmoothWeight) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let (a, b) = w.support();
    let nf = n as f64;
    let lo = (a * nf).ceil().max(1.0) as usize;
    let hi = (b * nf).floor() as usize;
    if hi > f.n_max {
        return Err(Error::InsufficientCoefficients {
            needed: hi,
            available: f.n_max,
        });
    }
    Ok(csum((lo..=hi).map(|m| {
        let mf = m as f64;
        f.lambda[m] * w.eval(mf / nf) * Complex64::from_polar(1.0, t * mf.ln())
    })))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRecord {
    pub t: f64,
    pub modulus: f64,
    pub afe_length: usize,
    pub consistency_gap: f64,
    pub convexity_ratio: f64,
    pub weyl_ratio: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeakFit {
    pub peaks: usize,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub records: usize,
    pub accepted: usize,
    pub flagged: usize,
    pub max_gap: f64,
    pub max_weyl_ratio: f64,
    pub max_convexity_ratio: f64,
    /// log|L| at local maxima against log t
    pub peak_fit: Option<PeakFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub summary: ScanSummary,
    pub records: Vec<ScanRecord>,
}

/// Balances whose disagreement is the consistency gap of a scan record.
pub const SCAN_BALANCES: (f64, f64) = (1.0, 2.0);

pub fn scan_grid(t_min: f64, t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !t_min.is_finite() || !t_max.is_finite() {
        return Err(Error::InvalidArgument(format!("scan range [{t_min}, {t_max}] step {step}")));
    }
    if t_max.abs().max(t_min.abs()) > MAX_SCAN_T {
        return Err(Error::OutOfRange(format!("|t| > {MAX_SCAN_T}")));
    }
    if t_max <= t_min {
        return Ok(Vec::new());
    }
    let count = ((t_max - t_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|j| t_min + j as f64 * step).collect())
}

fn scan_point(spec: &LFunctionSpec, t: f64) -> Result<ScanRecord> {
    let ctx = AfeContext::new(spec, t)?;
    let (a, len) = ctx.evaluate(&spec.coefficients, SCAN_BALANCES.0)?;
    let (b, _) = ctx.evaluate(&spec.coefficients, SCAN_BALANCES.1)?;
    let modulus = a.value.norm();
    let consistency_gap = (a.value - b.value).norm();
    let ta = t.abs().max(1.0);
    Ok(ScanRecord {
        t,
        modulus,
        afe_length: len,
        consistency_gap,
        convexity_ratio: modulus / ta.sqrt(),
        weyl_ratio: modulus / ta.cbrt(),
        accepted: consistency_gap <= CONSISTENCY_TOL * modulus.max(1.0),
    })
}

fn summarize(records: &[ScanRecord]) -> ScanSummary {
    let ok: Vec<&ScanRecord> = records.iter().filter(|r| r.accepted).collect();
    let peaks: Vec<(f64, f64)> = ok
        .windows(3)
        .filter(|w| w[1].modulus > w[0].modulus && w[1].modulus > w[2].modulus && w[1].t > 1.0)
        .map(|w| (w[1].t.ln(), w[1].modulus.ln()))
        .collect();
    ScanSummary {
        records: records.len(),
        accepted: ok.len(),
        flagged: records.len() - ok.len(),
        max_gap: records.iter().map(|r| r.consistency_gap).fold(0.0, f64::max),
        max_weyl_ratio: ok.iter().map(|r| r.weyl_ratio).fold(0.0, f64::max),
        max_convexity_ratio: ok.iter().map(|r| r.convexity_ratio).fold(0.0, f64::max),
        peak_fit: linear_fit(&peaks).map(|(slope, intercept)| PeakFit {
            peaks: peaks.len(),
            slope,
            intercept,
        }),
    }
}

/// |L(1/2 + it)| on t_min, t_min + step, …, ≤ t_max; records are ordered by t.
pub fn exponent_scan(spec: &LFunctionSpec, t_min: f64, t_max: f64, step: f64) -> Result<ScanResult> {
    let grid = scan_grid(t_min, t_max, step)?;
    let records = grid
        .par_iter()
        .map(|&t| scan_point(spec, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        summary: summarize(&records),
        records,
    })
}

pub const SCAN_CSV_HEADER: &str = "t,modulus,afe_length,consistency_gap,convexity_ratio,weyl_ratio";

pub fn scan_csv(records: &[ScanRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(SCAN_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{:.17e},{},{:.6e},{:.17e},{:.17e}",
            r.t, r.modulus, r.afe_length, r.consistency_gap, r.convexity_ratio, r.weyl_ratio
        );
    }
    out
}

/// Upper bound Σ_{n ≤ 3N} |λ(n)| for |S(N)|.
pub fn sn_trivial_bound(f: &CoefficientSource, n: u64) -> f64 {
    let hi = (3 * n as usize).min(f.n_max);
    rsum(f.lambda[1..=hi].iter().map(|v| v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscint::SmoothWeight;

    fn delta() -> LFunctionSpec {
        LFunctionSpec::delta(20_000)
    }

    #[test]
    fn weight_limits() {
        let f = delta();
        let v = afe_weight(1e-6, 50.0, &f, 1.0).unwrap();
        assert!((v - 1.0).norm() < 1e-6, "{v}");
        let c = f.gamma.conductor(50.0).sqrt();
        let v = afe_weight(1e3 * c, 50.0, &f, 1.0).unwrap();
        assert!(v.norm() < 1e-10, "{v}");
        let v = afe_weight(0.7, 0.0, &f, 1.0).unwrap();
        assert!(v.im.abs() < 1e-14 * v.re.abs().max(1.0));
        assert!(v.re > 0.0 && v.re < 1.0);
        assert!(afe_weight(0.0, 1.0, &f, 1.0).is_err());
        assert!(afe_weight(1.0, 1.0, &f, 5.0).is_err());
    }

    #[test]
    fn left_and_right_contours_differ_by_the_residue() {
        let f = delta();
        for t in [0.0, 20.0, 300.0] {
            let s = Complex64::new(0.5, t);
            let c = f.gamma.conductor(t).sqrt();
            let piece = AfePiece::new(&f.gamma, s, c).unwrap();
            for y in [0.3 * c, c, 3.0 * c] {
                let (r, er) = piece.right.eval(y);
                let (l, el) = piece.left.eval(y);
                assert!((r - l).norm() < 1e-11 + er + el, "t={t} y={y}: {r} vs {l}");
            }
        }
    }

    #[test]
    fn balance_invariance_and_conjugation() {
        let f = delta();
        let r = balance_check(&f, 0.0, &[0.5, 1.0, 2.0]).unwrap();
        assert!(r.relative_spread < 1e-8, "{r:?}");
        assert!(r.values.iter().all(|v| v.1.im.abs() < 1e-10));
        // tabulated central value of L(s, Δ) in the analytic normalization
        assert!((r.values[1].1.re - 0.7921228386).abs() < 1e-9);
        for t in [10.0, 100.0] {
            let r = balance_check(&f, t, &[0.5, 1.0, 2.0]).unwrap();
            assert!(r.relative_spread < 1e-6, "t={t}: {r:?}");
            let a = central_value(&f, t, 1.0).unwrap().value;
            let b = central_value(&f, -t, 1.0).unwrap().value;
            assert!((a - b.conj()).norm() < 1e-9);
            let la = completed_value(&f, t, 1.0).unwrap().norm();
            let lb = completed_value(&f, -t, 1.0).unwrap().norm();
            assert!((la - lb).abs() <= 1e-8 * la);
        }
    }

    #[test]
    fn odd_root_number_gives_zero() {
        // ε = i^18 = −1 forces L(1/2) = 0
        let f = crate::modforms::hecke_eigenforms(18, 400).unwrap().remove(0);
        let spec = LFunctionSpec::holomorphic(&f).unwrap();
        assert_eq!(spec.root_number, Complex64::new(-1.0, 0.0));
        let v = central_value(&spec, 0.0, 1.0).unwrap();
        assert!(v.value.norm() < 1e-10, "{v:?}");
    }

    #[test]
    fn insufficient_coefficients() {
        let f = LFunctionSpec::delta(50);
        assert!(matches!(central_value(&f, 400.0, 1.0), Err(Error::InsufficientCoefficients { .. })));
    }

    #[test]
    fn sn_sums() {
        let f = delta().coefficients;
        let w = SmoothWeight::bump(1.0, 2.0);
        let s = sn_sum(&f, 1000, 0.0, &w).unwrap();
        let naive: f64 = (1000..=2000).map(|n| f.lambda[n] * w.eval(n as f64 / 1000.0)).sum();
        assert!((s.re - naive).abs() < 1e-9 && s.im == 0.0);
        let s = sn_sum(&f, 1000, 1000.0, &w).unwrap();
        assert!(s.norm() <= 10.0 * 1000f64.sqrt() * 1000f64.cbrt() * 1000f64.ln());
        assert!(s.norm() <= sn_trivial_bound(&f, 1000));
        let wide = SmoothWeight::bump(0.5, 1.5);
        let s = sn_sum(&f, 1, 3.0, &wide).unwrap();
        assert!((s - wide.eval(1.0)).norm() < 1e-15);
        assert!(sn_sum(&f, 15_000, 0.0, &w).is_err());
    }

    #[test]
    fn scan_grid_and_gate() {
        assert_eq!(scan_grid(10.0, 50.0, 0.25).unwrap().len(), 161);
        assert!(scan_grid(5.0, 5.0, 1.0).unwrap().is_empty());
        assert!(scan_grid(0.0, 6000.0, 1.0).is_err());
        let f = LFunctionSpec::delta(4000);
        let r = exponent_scan(&f, 10.0, 14.0, 0.5).unwrap();
        assert_eq!(r.records.len(), 9);
        assert!(r.records.iter().all(|x| x.accepted && x.consistency_gap <= 1e-6));
        assert!(r.records.windows(2).all(|w| w[0].t < w[1].t));
        let csv = scan_csv(&r.records);
        assert!(csv.starts_with(SCAN_CSV_HEADER));
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn maass_ingestion() {
        let d = delta();
        let mut text = String::from("# nu = 9.53369526135\n# parity = even\n");
        for n in 1..=2000 {
            text.push_str(&format!("{n},{}\n", d.coefficients.lambda[n]));
        }
        let spec = parse_maass(&text, "inline").unwrap();
        assert_eq!(spec.root_number, Complex64::new(1.0, 0.0));
        assert_eq!(spec.n_max(), 2000);
        assert!(spec.bounds.rs_min >= 0.05);
        // Δ's coefficients with a Maass gamma factor are not an L-function;
        // only the plumbing is exercised here.
        assert!(central_value(&spec, 5.0, 1.0).unwrap().value.is_finite());

        let scaled = text.replace("# parity = even", "# parity = even\n# epsilon = -1");
        let rows: String = scaled
            .lines()
            .map(|l| match l.split_once(',') {
                Some((n, v)) if n != "1" => format!("{n},{}\n", 10.0 * v.parse::<f64>().unwrap()),
                _ => format!("{l}\n"),
            })
            .collect();
        assert!(matches!(parse_maass(&rows, "x"), Err(Error::Precondition(_))));

        let bad = "# nu = 1\n1,1\n3,0.5\n";
        assert!(matches!(parse_maass(bad, "x"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_maass("1,1\n", "x"), Err(Error::Parse { .. })));
        assert!(parse_maass("# nu = 1\n1,0.5\n", "x").is_err());
        assert!(matches!(parse_maass("# nu = 1\n# parity = weird\n", "x"), Err(Error::Parse { line: 2, .. })));
    }
}
