use super::{ComplexEstimate, Method};
use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_4, PI};

pub const MAX_ORDER: u32 = 10_000;
pub const MAX_ARGUMENT: f64 = 1e8;

/// Above this argument the backward recurrence becomes too long and the
/// Hankel expansion for J₀, J₁ plus upward recurrence is used instead.
const MILLER_LIMIT: f64 = 2e5;
const EPS: f64 = f64::EPSILON;

fn ln_factorial(n: u32) -> f64 {
    if n < 30 {
        return (2..=n).map(|j| (j as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    // Stirling for ln Γ(x)
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// (x/2)^ν / ν!, the majorant of |J_ν(x)| for 0 ≤ x ≤ 2√(ν+1).
pub fn bessel_small_argument_bound(nu: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    (nu as f64 * (x / 2.0).ln() - ln_factorial(nu)).exp()
}

/// (x/2)^n / n! as a running product, rescaled to avoid underflow.
fn power_over_factorial(n: u32, x: f64) -> f64 {
    let (mut m, mut scale) = (1.0f64, 0i32);
    for j in 1..=n {
        m *= x / (2.0 * j as f64);
        if m < 1e-200 {
            m *= 1e200;
            scale += 1;
            if scale > 2 {
                return 0.0;
            }
        }
    }
    m * 1e-200f64.powi(scale)
}

fn series(n: u32, x: f64) -> (f64, f64) {
    let pref = power_over_factorial(n, x);
    if pref == 0.0 {
        return (0.0, f64::MIN_POSITIVE);
    }
    let y = -x * x / 4.0;
    let (mut term, mut sum, mut k) = (1.0f64, 1.0f64, 0u32);
    while term.abs() > EPS * 0.1 * sum.abs() {
        k += 1;
        term *= y / (k as f64 * (n + k) as f64);
        sum += term;
        if k > 500 {
            break;
        }
    }
    let value = pref * sum;
    (value, 4.0 * EPS * (k as f64 + n as f64 / 2.0 + 2.0) * value.abs())
}

/// Hankel asymptotic expansion; returns (value, abs_error) or `None` if the
/// series does not reach the target accuracy before diverging.
fn hankel(n: u32, x: f64) -> Option<(f64, f64)> {
    let mu = 4.0 * (n as f64) * (n as f64);
    let (mut p, mut q) = (1.0f64, 0.0f64);
    let mut a = 1.0f64;
    let mut last = 1.0f64;
    let mut k = 1u32;
    loop {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a == 0.0 {
            last = 0.0;
            break;
        }
        if a.abs() > last.abs() && k > (n / 2 + 2) {
            break;
        }
        last = a;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 0.1 * EPS {
            break;
        }
        k += 1;
        if k > 400 {
            break;
        }
    }
    if last.abs() > 1e-12 {
        return None;
    }
    // χ = x − φ with φ = (2n+1)π/4 reduced exactly mod 2π
    let phi = ((2 * n as u64 + 1) % 8) as f64 * FRAC_PI_4;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    let amp = (2.0 / (PI * x)).sqrt();
    let value = amp * (p * cos_chi - q * sin_chi);
    let err = amp * (2.0 * last.abs() + 8.0 * EPS * (1.0 + x * EPS));
    Some((value, err))
}

/// Backward recurrence from well above max(n, x), normalized by
/// J₀ + 2 Σ J_{2k} = 1. Returns J₀..=J_{n_max}.
fn miller(n_max: u32, x: f64) -> Vec<f64> {
    let top = (n_max as f64).max(x);
    let mut start = (top + 30.0 + 6.0 * top.sqrt()) as u32;
    start += start % 2;
    let mut out = vec![0.0f64; n_max as usize + 1];
    let (mut next, mut cur) = (0.0f64, 1e-30f64);
    let mut norm = 0.0f64;
    for k in (1..=start).rev() {
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        if k <= n_max {
            out[k as usize] = cur;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            for v in out.iter_mut().skip(k as usize) {
                *v *= s;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

fn forward(n_max: u32, x: f64) -> Vec<f64> {
    let j0 = hankel(0, x).expect("large argument").0;
    let j1 = hankel(1, x).expect("large argument").0;
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(j0);
    if n_max >= 1 {
        out.push(j1);
    }
    for k in 1..n_max {
        let v = 2.0 * k as f64 / x * out[k as usize] - out[k as usize - 1];
        out.push(v);
    }
    out
}

fn check(order: u32, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::OutOfRange(format!("Bessel argument {x}")));
    }
    if order > MAX_ORDER || x > MAX_ARGUMENT {
        return Err(Error::OutOfRange(format!(
            "J_{order}({x}) outside order <= {MAX_ORDER}, x <= {MAX_ARGUMENT:e}"
        )));
    }
    Ok(())
}

/// J_n(x) for integer n ≥ 0 and x ≥ 0.
pub fn bessel_j(order: u32, x: f64) -> Result<ComplexEstimate> {
    check(order, x)?;
    let n = order;
    if x == 0.0 {
        let v = if n == 0 { 1.0 } else { 0.0 };
        return Ok(ComplexEstimate::real(v, 0.0, Method::Series));
    }
    if x * x <= 4.0 * (n as f64 + 1.0) {
        let (v, e) = series(n, x);
        return Ok(ComplexEstimate::real(v, e, Method::Series));
    }
    if x >= 40.0 && x >= 2.0 * (n as f64) * (n as f64) {
        if let Some((v, e)) = hankel(n, x) {
            return Ok(ComplexEstimate::real(v, e, Method::Asymptotic));
        }
    }
    if x <= MILLER_LIMIT {
        let v = miller(n, x)[n as usize];
        let scale = v.abs().max(if (n as f64) < x { (2.0 / (PI * x)).sqrt() * 1e-3 } else { 0.0 });
        let err = 16.0 * EPS * (x.max(n as f64).sqrt() + 10.0) * scale;
        return Ok(ComplexEstimate::real(v, err, Method::Recurrence));
    }
    let v = forward(n, x)[n as usize];
    let amp = (2.0 / (PI * x)).sqrt();
    let err = amp * EPS * (x * 4.0 + 16.0 * (n as f64 + 1.0));
    Ok(ComplexEstimate::real(v, err, Method::Recurrence))
}

/// Plain-value variant for inner loops.
pub fn bessel_j_value(order: u32, x: f64) -> f64 {
    bessel_j(order, x).map(|e| e.value.re).unwrap_or(f64::NAN)
}

/// J₀(x), ..., J_{n_max}(x) in a single recurrence pass.
pub fn bessel_j_range(n_max: u32, x: f64) -> Result<Vec<f64>> {
    check(n_max, x)?;
    if x == 0.0 {
        let mut v = vec![0.0; n_max as usize + 1];
        v[0] = 1.0;
        return Ok(v);
    }
    if x > MILLER_LIMIT {
        return Ok(forward(n_max, x));
    }
    Ok(miller(n_max, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap().value.re, 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap().value.re, 0.0);
        assert!(bessel_j(10_001, 1.0).is_err());
        assert!(bessel_j(1, 2e8).is_err());
        assert!(bessel_j(1, -1.0).is_err());
    }

    #[test]
    fn recurrence_identity() {
        let x = 7.3;
        let lhs = bessel_j_value(4, x) + bessel_j_value(6, x);
        let rhs = 10.0 / x * bessel_j_value(5, x);
        assert!((lhs - rhs).abs() < 1e-11 * rhs.abs().max(1e-300));
    }

    #[test]
    fn methods_agree_at_boundaries() {
        // Compare each regime with the Miller recurrence where both apply.
        for &(n, x) in &[(0u32, 45.0), (1, 45.0), (3, 60.0), (2, 100.0), (5, 300.0)] {
            let h = hankel(n, x).unwrap().0;
            let m = miller(n, x)[n as usize];
            assert!((h - m).abs() < 1e-13, "n={n} x={x} {h} {m}");
        }
        for &(n, x) in &[(10u32, 6.0), (50, 14.0), (3, 3.9)] {
            let s = series(n, x).0;
            let m = miller(n, x)[n as usize];
            assert!((s - m).abs() < 1e-14 * s.abs(), "n={n} x={x}");
        }
        let x = 2.5e5;
        let f = forward(20, x);
        for n in [0u32, 1, 7, 20] {
            let h = hankel(n, x).unwrap().0;
            assert!((f[n as usize] - h).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn range_matches_single() {
        for &x in &[0.5, 3.0, 25.0, 140.0, 900.0] {
            let r = bessel_j_range(60, x).unwrap();
            for n in [0u32, 1, 11, 33, 60] {
                let single = bessel_j_value(n, x);
                assert!((r[n as usize] - single).abs() <= 1e-13 * single.abs().max(1e-3), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn small_argument_domination() {
        for nu in [11u32, 15, 23, 31, 63] {
            for i in 1..=40 {
                let x = (nu + 1) as f64 * i as f64 / 40.0;
                let j = bessel_j_value(nu, x).abs();
                assert!(j <= bessel_small_argument_bound(nu, x) * (1.0 + 1e-12), "nu={nu} x={x}");
            }
        }
    }
}
