use super::{ComplexEstimate, Method};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// B_2, B_4, ..., B_40.
const BERNOULLI: [f64; 20] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
    -7709321041217.0 / 510.0,
    2577687858367.0 / 6.0,
    -26315271553053477373.0 / 1919190.0,
    2929993913841559.0 / 6.0,
    -261082718496449122051.0 / 13530.0,
];

pub const MAX_TERMS: usize = BERNOULLI.len() - 1;

/// Smallest |z| at which the asymptotic series is evaluated after lifting.
const LIFT_RADIUS: f64 = 12.0;

fn is_pole(s: Complex64) -> bool {
    s.im == 0.0 && s.re <= 0.0 && s.re == s.re.round()
}

/// ln Γ(s) from Stirling's series with `terms` Bernoulli corrections, after
/// lifting s by the recursion Γ(s) = Γ(s + m)/(s(s+1)⋯(s+m−1)).
///
/// The branch is the one obtained from principal logarithms of s+j, which is
/// continuous on Re s > 0.
pub fn gamma_stirling(s: Complex64, terms: usize) -> Result<ComplexEstimate> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("Gamma argument {s}")));
    }
    if is_pole(s) {
        return Err(Error::GammaPole(s.re));
    }
    if terms == 0 || terms > MAX_TERMS {
        return Err(Error::InvalidArgument(format!(
            "terms must be in 1..={MAX_TERMS}, got {terms}"
        )));
    }
    let mut z = s;
    let mut shift = Complex64::new(0.0, 0.0);
    let mut shift_mag = 0.0;
    while z.re < 0.5 || z.norm() < LIFT_RADIUS {
        let l = z.ln();
        shift += l;
        shift_mag += l.norm();
        z += 1.0;
    }
    let zinv = z.inv();
    let zinv2 = zinv * zinv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut zpow = zinv;
    for (j, b) in BERNOULLI.iter().take(terms).enumerate() {
        let j2 = 2.0 * (j + 1) as f64;
        series += b / (j2 * (j2 - 1.0)) * zpow;
        zpow *= zinv2;
    }
    let main = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln();
    let value = main + series - shift;
    let j2 = 2.0 * (terms + 1) as f64;
    let sec = 1.0 / (z.arg() / 2.0).cos();
    let remainder = BERNOULLI[terms].abs() / (j2 * (j2 - 1.0)) * zpow.norm() * sec.powf(j2);
    let rounding = 4.0 * f64::EPSILON * (main.norm() + shift_mag + 1.0);
    Ok(ComplexEstimate::new(value, remainder + rounding, Method::Asymptotic))
}

pub fn ln_gamma(s: Complex64) -> Result<Complex64> {
    gamma_stirling(s, 14).map(|e| e.value)
}

pub fn gamma(s: Complex64) -> Result<Complex64> {
    ln_gamma(s).map(|l| l.exp())
}

/// The leading modulus √(2π) |t|^{σ−1/2} e^{−π|t|/2} of Γ(σ + it).
pub fn stirling_modulus(s: Complex64) -> f64 {
    let t = s.im.abs();
    (2.0 * PI).sqrt() * t.powf(s.re - 0.5) * (-PI * t / 2.0).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaRatioReport {
    pub k: f64,
    pub tau: f64,
    /// Γ(K/2 + iτ) / Γ(K/2 − iτ)
    pub ratio: ComplexEstimate,
    pub modulus_deviation: f64,
    /// 2 Im ln Γ(K/2 + iτ), continuous in τ
    pub true_phase: f64,
    /// 2τ log K − τ/K − τ
    pub claimed_phase: f64,
    /// 2τ log(K/2) − τ/K − τ
    pub log_half_phase: f64,
    /// 2τ log(K/2) − 2τ/K
    pub corrected_phase: f64,
    pub claimed_error: f64,
    pub log_half_error: f64,
    pub corrected_error: f64,
}

pub fn gamma_ratio_phase(k: f64, tau: f64) -> Result<GammaRatioReport> {
    if !(k >= 10.0) || !(tau.abs() <= k / 4.0) {
        return Err(Error::InvalidArgument(format!(
            "need K >= 10 and |tau| <= K/4, got K = {k}, tau = {tau}"
        )));
    }
    let est = gamma_stirling(Complex64::new(k / 2.0, tau), 14)?;
    let true_phase = 2.0 * est.value.im;
    let ratio = Complex64::from_polar(1.0, true_phase);
    let claimed_phase = 2.0 * tau * k.ln() - tau / k - tau;
    let log_half_phase = 2.0 * tau * (k / 2.0).ln() - tau / k - tau;
    let corrected_phase = 2.0 * tau * (k / 2.0).ln() - 2.0 * tau / k;
    Ok(GammaRatioReport {
        k,
        tau,
        ratio: ComplexEstimate::new(ratio, 2.0 * est.abs_error, Method::Asymptotic),
        modulus_deviation: (ratio.norm() - 1.0).abs(),
        true_phase,
        claimed_phase,
        log_half_phase,
        corrected_phase,
        claimed_error: true_phase - claimed_phase,
        log_half_error: true_phase - log_half_phase,
        corrected_error: true_phase - corrected_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        for n in 1..=20u32 {
            let f: f64 = (1..n).map(|j| j as f64).product();
            let g = gamma(Complex64::new(n as f64, 0.0)).unwrap();
            assert!((g.re - f).abs() <= 1e-12 * f, "n={n}");
            assert!(g.im.abs() <= 1e-12 * f);
        }
        assert!((gamma(Complex64::new(5.0, 0.0)).unwrap().re - 24.0).abs() < 1e-12);
    }

    #[test]
    fn poles() {
        for p in [0.0, -1.0, -7.0] {
            assert_eq!(gamma_stirling(Complex64::new(p, 0.0), 10), Err(Error::GammaPole(p)));
        }
        assert!(gamma_stirling(Complex64::new(-1.0, 1e-3), 10).is_ok());
    }

    #[test]
    fn reflection() {
        let s = Complex64::new(0.3, 11.0);
        let lhs = gamma(s).unwrap() * gamma(1.0 - s).unwrap();
        let rhs = PI / (PI * s).sin();
        assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn half_line_modulus() {
        // |Γ(1/2 + it)|² = π / cosh(πt)
        for t in [1.0, 5.0, 20.0, 60.0] {
            let g = gamma(Complex64::new(0.5, t)).unwrap().norm();
            let exact = (PI / (PI * t).cosh()).sqrt();
            assert!((g - exact).abs() <= 1e-12 * exact, "t={t}");
        }
        let s = Complex64::new(0.5, 20.0);
        let rel = (gamma(s).unwrap().norm() / stirling_modulus(s) - 1.0).abs();
        assert!(rel <= 0.05);
    }

    #[test]
    fn ratio_trivial_and_unit() {
        let r = gamma_ratio_phase(100.0, 0.0).unwrap();
        assert_eq!(r.ratio.value, Complex64::new(1.0, 0.0));
        for (k, t) in [(200.0, 2.0), (10.0, 2.5), (1000.0, 5.0), (64.0, -16.0)] {
            let r = gamma_ratio_phase(k, t).unwrap();
            assert!(r.modulus_deviation < 1e-10);
        }
        assert!(gamma_ratio_phase(9.0, 0.0).is_err());
        assert!(gamma_ratio_phase(100.0, 26.0).is_err());
    }
}
