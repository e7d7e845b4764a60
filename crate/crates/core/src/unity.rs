//! Additive characters e(x) = exp(2πi x), roots-of-unity tables and
//! compensated complex summation.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// e(x) = exp(2πi x) for real `x`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * x)
}

/// e(a/c) computed from the reduced residue of `a`.
#[inline]
pub fn e_frac(a: i64, c: i64) -> Complex64 {
    let r = a.rem_euclid(c);
    // Fold into (-c/2, c/2] so the angle stays small.
    let r = if 2 * r > c { r - c } else { r };
    Complex64::from_polar(1.0, TAU * (r as f64) / (c as f64))
}

/// Table of the c-th roots of unity e(j/c), j = 0..c.
#[derive(Debug, Clone)]
pub struct RootTable {
    modulus: i64,
    roots: Vec<Complex64>,
}

impl RootTable {
    pub fn new(modulus: i64) -> Self {
        assert!(modulus >= 1);
        let roots = (0..modulus).map(|j| e_frac(j, modulus)).collect();
        Self { modulus, roots }
    }

    pub fn modulus(&self) -> i64 {
        self.modulus
    }

    /// e(a / modulus) for any integer `a`.
    #[inline]
    pub fn at(&self, a: i64) -> Complex64 {
        self.roots[a.rem_euclid(self.modulus) as usize]
    }
}

/// Neumaier-compensated accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

impl std::iter::FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for z in iter {
            s.add(z);
        }
        s
    }
}

/// Compensated sum of an iterator of complex numbers.
pub fn csum<I: IntoIterator<Item = Complex64>>(iter: I) -> Complex64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Compensated sum of reals.
pub fn rsum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for x in iter {
        neumaier(&mut s, &mut c, x);
    }
    s + c
}

/// Ordinary least-squares line through `pts`: (slope, intercept).
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| {
        let slope = sxy / sxx;
        (slope, my - slope * mx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_sum_to_zero() {
        for c in 2..200 {
            let t = RootTable::new(c);
            let s = csum((0..c).map(|j| t.at(j)));
            assert!(s.norm() < 1e-12, "c={c} sum={s}");
        }
    }

    #[test]
    fn e_frac_matches_e() {
        for c in 1..50i64 {
            for a in -200..200i64 {
                let d = e_frac(a, c) - e(a as f64 / c as f64);
                assert!(d.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn compensation_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(rsum(xs), 2.0);
    }
}
