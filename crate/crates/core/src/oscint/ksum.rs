use super::quad::{integrate, phase_breakpoints, weight_phase_integral, DEFAULT_BUDGET};
use super::{bump_profile, PhaseSpec, SmoothWeight};
use crate::error::{Error, Result};
use crate::report::Verdict;
use crate::special::{bessel_j, ComplexEstimate, Method};
use crate::unity::rsum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KSumMode {
    Direct,
    Kernel,
    Asymptotic,
}

impl std::str::FromStr for KSumMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(KSumMode::Direct),
            "kernel" => Ok(KSumMode::Kernel),
            "asymptotic" => Ok(KSumMode::Asymptotic),
            _ => Err(Error::InvalidArgument(format!("unknown k-sum mode {s:?}"))),
        }
    }
}

/// W((k−1)/K), the bump on [1, 2].
fn weight(u: f64) -> f64 {
    bump_profile(2.0 * u - 3.0)
}

/// Frequencies beyond which the Fourier transform of W is below ~1e−12.
const FOURIER_CUTOFF: f64 = 120.0;
const CHEB_DEGREE: usize = 32;
const CHEB_PANEL: f64 = 4.0;
const TRAPEZOID_NODES: usize = 400;

/// A(ξ) = ∫ W(3/2 + s) cos(2πξs) ds, so that Ŵ(ξ) = e(3ξ/2)·A(ξ).
/// Tabulated as piecewise Chebyshev series; the nodes come from the
/// trapezoid rule, which is spectrally accurate for W.
struct FourierTable {
    coeffs: Vec<[f64; CHEB_DEGREE]>,
}

impl FourierTable {
    fn build() -> Self {
        let h = 1.0 / TRAPEZOID_NODES as f64;
        let nodes: Vec<(f64, f64)> = (1..TRAPEZOID_NODES)
            .map(|j| {
                let s = -0.5 + j as f64 * h;
                (s, weight(1.5 + s))
            })
            .collect();
        let a_exact = |xi: f64| h * rsum(nodes.iter().map(|&(s, w)| w * (TAU * xi * s).cos()));
        let panels = (FOURIER_CUTOFF / CHEB_PANEL).ceil() as usize;
        let n = CHEB_DEGREE;
        let coeffs = (0..panels)
            .map(|p| {
                let mid = (p as f64 + 0.5) * CHEB_PANEL;
                let vals: Vec<f64> = (0..n)
                    .map(|i| {
                        let x = (PI * (i as f64 + 0.5) / n as f64).cos();
                        a_exact(mid + 0.5 * CHEB_PANEL * x)
                    })
                    .collect();
                let mut c = [0.0; CHEB_DEGREE];
                for (j, cj) in c.iter_mut().enumerate() {
                    *cj = 2.0 / n as f64
                        * (0..n)
                            .map(|i| vals[i] * (PI * j as f64 * (i as f64 + 0.5) / n as f64).cos())
                            .sum::<f64>();
                }
                c
            })
            .collect();
        FourierTable { coeffs }
    }

    fn eval(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        let p = (xi / CHEB_PANEL) as usize;
        if p >= self.coeffs.len() {
            return 0.0;
        }
        let x = 2.0 * (xi - (p as f64 + 0.5) * CHEB_PANEL) / CHEB_PANEL;
        let c = &self.coeffs[p];
        let (mut b1, mut b2) = (0.0, 0.0);
        for &cj in c.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + cj;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + 0.5 * c[0]
    }
}

fn fourier_table() -> &'static FourierTable {
    static TABLE: OnceLock<FourierTable> = OnceLock::new();
    TABLE.get_or_init(FourierTable::build)
}

fn direct(k_scale: f64, z: f64) -> Result<ComplexEstimate> {
    let mut terms = Vec::new();
    let mut err = 0.0;
    let k_max = (2.0 * k_scale).ceil() as u32 + 2;
    for k in (2..=k_max).step_by(2) {
        let w = weight((k - 1) as f64 / k_scale);
        if w == 0.0 {
            continue;
        }
        let j = bessel_j(k - 1, z)?;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(sign * w * j.value.re);
        err += w * j.abs_error;
    }
    let mag: f64 = terms.iter().map(|t| t.abs()).sum();
    let value = rsum(terms);
    Ok(ComplexEstimate::real(value, err + 4.0 * f64::EPSILON * mag, Method::Recurrence))
}

/// −∫ ĝ(v) sin(z cos 2πv) dv with ĝ(v) = K·Ŵ(Kv), folded onto v ≥ 0.
fn kernel(k_scale: f64, z: f64) -> Result<ComplexEstimate> {
    let table = fourier_table();
    let v_max = FOURIER_CUTOFF / k_scale;
    let rate = move |v: f64| z * TAU * (TAU * v).sin().abs() + 4.0 * PI * k_scale;
    let breaks = phase_breakpoints(0.0, v_max, &rate, 0.5 / k_scale)?;
    let integrand = move |v: f64| {
        let xi = k_scale * v;
        let g = k_scale * table.eval(xi) * (3.0 * PI * xi).cos();
        Complex64::new(-2.0 * g * (z * (TAU * v).cos()).sin(), 0.0)
    };
    let est = integrate(integrand, &breaks, 1e-11, DEFAULT_BUDGET)?;
    // neglected |ξ| > cutoff: |A| is below 1e−12 there and decays rapidly
    let tail = 2.0 * 10.0 * table.eval(FOURIER_CUTOFF - 1e-9).abs();
    Ok(ComplexEstimate::new(
        Complex64::new(est.value.re, 0.0),
        est.abs_error + tail,
        Method::Quadrature,
    ))
}

/// Quadratic Taylor model of cos 2πv at v = 0; the v-integral is then
/// Gaussian:
/// S₁ ≈ −Im[e^{i(z − π/4)}·K/(2π√x)·∫ W(s) exp(iK²s²/(4πx)) ds].
/// The stationary points v = m/2, m ≠ 0, are left out of the value and
/// enter the error through |ĝ(m/2)|/(2π√x).
fn asymptotic(k_scale: f64, x: f64) -> Result<ComplexEstimate> {
    let z = TAU * x;
    let c = k_scale * k_scale / (4.0 * PI * x);
    let w = SmoothWeight::bump(1.0, 2.0);
    let h = PhaseSpec::new(Arc::new(move |s| c * s * s))
        .with_derivatives(Arc::new(move |s| 2.0 * c * s), Arc::new(move |_| 2.0 * c));
    let inner = weight_phase_integral(&w, &h, 1e-13)?;
    let amp = k_scale / (TAU * x.sqrt());
    let value = -(Complex64::from_polar(amp, z - FRAC_PI_4) * inner.value).im;
    let model = amp * w.l1_norm() / (4.0 * z);
    let table = fourier_table();
    let aliased: f64 = (1..)
        .map(|m| k_scale * m as f64 / 2.0)
        .take_while(|&xi| xi < FOURIER_CUTOFF)
        .map(|xi| 2.0 * k_scale * table.eval(xi).abs() / (TAU * x.sqrt()))
        .sum();
    Ok(ComplexEstimate::real(
        value,
        1.5 * (model + aliased) + amp * inner.abs_error + 8.0 * f64::EPSILON * z * amp,
        Method::Asymptotic,
    ))
}

/// S₁ = Σ_{k even} i^{−k} W((k−1)/K) J_{k−1}(2πx).
pub fn bessel_weighted_k_sum(k_scale: u32, x: f64, mode: KSumMode) -> Result<ComplexEstimate> {
    if k_scale < 8 {
        return Err(Error::InvalidArgument(format!("K = {k_scale} < 8")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!("x = {x}")));
    }
    let k = k_scale as f64;
    let z = TAU * x;
    match mode {
        KSumMode::Direct => direct(k, z),
        KSumMode::Kernel => kernel(k, z),
        KSumMode::Asymptotic => asymptotic(k, x),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuppressionReport {
    pub k: u32,
    pub in_regime: f64,
    pub sub_threshold: f64,
    /// |S₁(4K²)| / |S₁(K²/16)|
    pub ratio: f64,
    pub verdict: Verdict,
}

pub fn suppression_ratio(k_scale: u32, required: f64) -> Result<SuppressionReport> {
    let k = k_scale as f64;
    let hi = bessel_weighted_k_sum(k_scale, 4.0 * k * k, KSumMode::Direct)?;
    let lo = bessel_weighted_k_sum(k_scale, k * k / 16.0, KSumMode::Direct)?;
    let ratio = hi.value.norm() / lo.value.norm();
    Ok(SuppressionReport {
        k: k_scale,
        in_regime: hi.value.norm(),
        sub_threshold: lo.value.norm(),
        ratio,
        verdict: Verdict::from_check(ratio >= required),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CTruncationProfile {
    pub n: f64,
    pub k: u32,
    pub q: f64,
    /// c at which x = N/(cQ) reaches K²
    pub c_threshold: f64,
    pub samples: Vec<(f64, f64, f64)>,
    /// log10 of |S₁| at the threshold over |S₁| at 8× the threshold
    pub decay_orders: f64,
}

/// |S₁(N/(cQ))| as c runs over a geometric grid from the threshold N/(QK²)
/// up to eight times it.
pub fn c_truncation_profile(n: f64, k_scale: u32, q: f64) -> Result<CTruncationProfile> {
    let k = k_scale as f64;
    let c0 = n / (q * k * k);
    let mut samples = Vec::new();
    for j in 0..=12 {
        let c = c0 * 8f64.powf(j as f64 / 12.0);
        let x = n / (c * q);
        let s = bessel_weighted_k_sum(k_scale, x, KSumMode::Direct)?;
        samples.push((c, x, s.value.norm()));
    }
    let decay_orders = (samples[0].2 / samples[12].2).log10();
    Ok(CTruncationProfile {
        n,
        k: k_scale,
        q,
        c_threshold: c0,
        samples,
        decay_orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_small_argument_bound;

    #[test]
    fn fourier_table_matches_trapezoid() {
        let t = fourier_table();
        // A(0) = ∫ W
        let l1 = SmoothWeight::bump(1.0, 2.0).l1_norm();
        assert!((t.eval(0.0) - l1).abs() < 1e-12);
        for xi in [0.3, 2.5, 7.9, 33.3, 80.0] {
            let direct: f64 = {
                let h = 1.0 / 4000.0;
                (1..4000)
                    .map(|j| {
                        let s = -0.5 + j as f64 * h;
                        h * weight(1.5 + s) * (TAU * xi * s).cos()
                    })
                    .sum()
            };
            assert!((t.eval(xi) - direct).abs() < 1e-14, "xi={xi}");
        }
    }

    #[test]
    fn direct_agrees_with_kernel_small_grid() {
        for (k, x) in [(8u32, 10.0), (16, 10.0), (8, 100.0), (16, 2000.0)] {
            let d = bessel_weighted_k_sum(k, x, KSumMode::Direct).unwrap();
            let q = bessel_weighted_k_sum(k, x, KSumMode::Kernel).unwrap();
            assert!((d.value - q.value).norm() <= 1e-8, "K={k} x={x}: {} {}", d.value, q.value);
        }
    }

    #[test]
    fn asymptotic_regime() {
        for k in [8u32, 16, 32] {
            let kf = k as f64;
            for x in [4.0 * kf * kf, 10.0 * kf * kf, 2.5e4] {
                let d = bessel_weighted_k_sum(k, x, KSumMode::Direct).unwrap();
                let a = bessel_weighted_k_sum(k, x, KSumMode::Asymptotic).unwrap();
                let amp = kf / (TAU * x.sqrt()) * SmoothWeight::bump(1.0, 2.0).l1_norm();
                let gap = (d.value - a.value).norm();
                assert!(gap <= 0.1 * amp, "K={k} x={x} gap={gap:e} amp={amp:e}");
                assert!(gap <= a.abs_error + d.abs_error, "K={k} x={x} gap={gap:e} claimed={:e}", a.abs_error);
            }
        }
    }

    #[test]
    fn deep_small_argument() {
        // every J_{k−1}(2πx) with 2πx below the order is dominated by (πx)^{k−1}/(k−1)!
        let (k, x) = (16u32, 1.0);
        let s = bessel_weighted_k_sum(k, x, KSumMode::Direct).unwrap().value.norm();
        let bound: f64 = (17..32).map(|nu| bessel_small_argument_bound(nu, TAU * x)).sum();
        assert!(s <= bound && bound < 1e-3, "{s:e} {bound:e}");
        assert!(bessel_weighted_k_sum(7, 1.0, KSumMode::Direct).is_err());
    }
}
