//! Oscillatory integrals ∫ w(t) exp(i h(t)) dt: a brute-force adaptive
//! quadrature oracle, stationary-phase expansion, decay checks for phases
//! without stationary points, the second-derivative bound, and the Bessel
//! sum over weights k.

mod ksum;
mod quad;
mod stationary;

pub use ksum::{
    bessel_weighted_k_sum, c_truncation_profile, suppression_ratio, CTruncationProfile, KSumMode,
    SuppressionReport,
};
pub use quad::{
    integrate, oscillatory_quadrature, phase_breakpoints, weight_phase_integral, DEFAULT_BUDGET,
    MAX_PHASE,
};
pub use stationary::{
    find_stationary_point, fresnel_sign_pair, nonstationary_decay_check,
    second_derivative_bound_check, stationary_phase_eval, DecayReport, LadderPoint,
    SecondDerivativeReport, SignPairReport, StationaryPhaseReport,
};

use crate::error::{Error, Result};
use std::sync::Arc;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Binomial central difference of order n at step δ, error O(δ²).
fn raw_difference(f: &dyn Fn(f64) -> f64, x: f64, n: u32, d: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0f64;
    for j in 0..=n {
        let off = (n as f64 / 2.0 - j as f64) * d;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f(x + off);
        binom = binom * (n - j) as f64 / (j + 1) as f64;
    }
    acc / d.powi(n as i32)
}

/// n-th derivative by central differences with one Richardson step. The
/// base step is ε^{1/3}·scale for the first derivative and ε^{1/(n+4)}·scale
/// above, balancing the O(δ⁴) truncation against rounding.
pub fn central_difference(f: &dyn Fn(f64) -> f64, x: f64, n: u32, scale: f64) -> f64 {
    if n == 0 {
        return f(x);
    }
    let root = if n == 1 { 3.0 } else { n as f64 + 4.0 };
    let d = f64::EPSILON.powf(1.0 / root) * scale;
    let coarse = raw_difference(f, x, n, d);
    let fine = raw_difference(f, x, n, d / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// Canonical bump exp(1 − 1/(1 − u²)) on (−1, 1), normalized to peak 1.
pub fn bump_profile(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// Smooth step: 0 for s ≤ 0, 1 for s ≥ 1, built from exp(−1/s).
pub fn smooth_step(s: f64) -> f64 {
    let psi = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let (p, q) = (psi(s), psi(1.0 - s));
        p / (p + q)
    }
}

/// A smooth amplitude on [a, b] with w^{(j)} ≪ X·V^{−j}.
#[derive(Clone)]
pub struct SmoothWeight {
    f: RealFn,
    a: f64,
    b: f64,
    pub x_scale: f64,
    pub v_scale: f64,
}

impl std::fmt::Debug for SmoothWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothWeight")
            .field("support", &(self.a, self.b))
            .field("x_scale", &self.x_scale)
            .field("v_scale", &self.v_scale)
            .finish()
    }
}

const ENDPOINT_TOL: f64 = 1e-8;

impl SmoothWeight {
    /// A compactly supported weight; rejects evaluators that do not vanish
    /// to third order at the endpoints.
    pub fn new(f: RealFn, a: f64, b: f64, x_scale: f64, v_scale: f64) -> Result<Self> {
        let w = Self::amplitude(f, a, b, x_scale, v_scale)?;
        let defect = w.endpoint_defect();
        if defect > ENDPOINT_TOL {
            return Err(Error::Precondition(format!(
                "weight does not vanish at the support endpoints (defect {defect:e})"
            )));
        }
        Ok(w)
    }

    /// An amplitude on [a, b] without the endpoint condition, as needed for
    /// the second-derivative bound.
    pub fn amplitude(f: RealFn, a: f64, b: f64, x_scale: f64, v_scale: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!("support [{a}, {b}]")));
        }
        if !(x_scale > 0.0 && v_scale > 0.0) {
            return Err(Error::InvalidArgument("scales must be positive".into()));
        }
        Ok(SmoothWeight {
            f,
            a,
            b,
            x_scale,
            v_scale,
        })
    }

    /// Bump on [a, b] with value 1 at the midpoint.
    pub fn bump(a: f64, b: f64) -> Self {
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        let f: RealFn = Arc::new(move |t| bump_profile((t - mid) / half));
        SmoothWeight {
            f,
            a,
            b,
            x_scale: 1.0,
            v_scale: half / 2.0,
        }
    }

    /// Supported on [a, d], identically 1 on [b, c].
    pub fn plateau(a: f64, b: f64, c: f64, d: f64) -> Self {
        assert!(a < b && b <= c && c < d, "plateau needs a < b <= c < d");
        let f: RealFn =
            Arc::new(move |t| smooth_step((t - a) / (b - a)) * smooth_step((d - t) / (d - c)));
        SmoothWeight {
            f,
            a,
            b: d,
            x_scale: 1.0,
            v_scale: (b - a).min(d - c) / 2.0,
        }
    }

    /// Constant amplitude on [a, b].
    pub fn constant(a: f64, b: f64, value: f64) -> Self {
        SmoothWeight {
            f: Arc::new(move |_| value),
            a,
            b,
            x_scale: value.abs().max(f64::MIN_POSITIVE),
            v_scale: b - a,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t < self.a || t > self.b {
            0.0
        } else {
            (self.f)(t)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn evaluator(&self) -> RealFn {
        self.f.clone()
    }

    pub fn derivative(&self, t: f64, n: u32) -> f64 {
        let f = |s: f64| self.eval(s);
        central_difference(&f, t, n, self.v_scale)
    }

    /// Largest |w^{(j)}| for j ≤ 3 at the two endpoints.
    pub fn endpoint_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for e in [self.a, self.b] {
            for n in 0..=3 {
                worst = worst.max(self.derivative(e, n).abs());
            }
        }
        worst
    }

    /// ∫|w| by composite Simpson on 2048 panels.
    pub fn l1_norm(&self) -> f64 {
        let n = 2048;
        let h = (self.b - self.a) / n as f64;
        let mut s = self.eval(self.a).abs() + self.eval(self.b).abs();
        for j in 1..n {
            let c = if j % 2 == 1 { 4.0 } else { 2.0 };
            s += c * self.eval(self.a + j as f64 * h).abs();
        }
        s * h / 3.0
    }

    pub fn sup_norm(&self, samples: usize) -> f64 {
        grid(self.a, self.b, samples)
            .map(|t| self.eval(t).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |j| a + (b - a) * j as f64 / (n - 1) as f64)
}

/// A real phase h with h^{(j)} ≪ Y·Q^{−j} and optional |h′| ≥ R.
#[derive(Clone)]
pub struct PhaseSpec {
    h: RealFn,
    h1: Option<RealFn>,
    h2: Option<RealFn>,
    pub y_scale: f64,
    pub q_scale: f64,
    pub lower_bound: Option<f64>,
}

impl std::fmt::Debug for PhaseSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhaseSpec")
            .field("y_scale", &self.y_scale)
            .field("q_scale", &self.q_scale)
            .field("lower_bound", &self.lower_bound)
            .field("analytic_h1", &self.h1.is_some())
            .field("analytic_h2", &self.h2.is_some())
            .finish()
    }
}

/// Finite-difference spot check of the scale claims.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScaleCheck {
    /// max over the grid of |h^{(j)}|·Q^j / Y for j = 1, 2, 3
    pub upper: [f64; 3],
    /// min over the grid of |h″|·Q² / Y
    pub lower_second: f64,
}

impl PhaseSpec {
    pub fn new(h: RealFn) -> Self {
        PhaseSpec {
            h,
            h1: None,
            h2: None,
            y_scale: 1.0,
            q_scale: 1.0,
            lower_bound: None,
        }
    }

    pub fn zero() -> Self {
        Self::new(Arc::new(|_| 0.0)).with_derivatives(Arc::new(|_| 0.0), Arc::new(|_| 0.0))
    }

    pub fn with_derivatives(mut self, h1: RealFn, h2: RealFn) -> Self {
        self.h1 = Some(h1);
        self.h2 = Some(h2);
        self
    }

    pub fn with_scales(mut self, y: f64, q: f64) -> Self {
        self.y_scale = y;
        self.q_scale = q;
        self
    }

    pub fn with_lower_bound(mut self, r: f64) -> Self {
        self.lower_bound = Some(r);
        self
    }

    /// λ·h, with Y and R scaled accordingly.
    pub fn scaled(&self, lambda: f64) -> Self {
        let h = self.h.clone();
        let h1 = self.h1.clone();
        let h2 = self.h2.clone();
        PhaseSpec {
            h: Arc::new(move |t| lambda * h(t)),
            h1: h1.map(|g| Arc::new(move |t| lambda * g(t)) as RealFn),
            h2: h2.map(|g| Arc::new(move |t| lambda * g(t)) as RealFn),
            y_scale: self.y_scale * lambda.abs(),
            q_scale: self.q_scale,
            lower_bound: self.lower_bound.map(|r| r * lambda.abs()),
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        (self.h)(t)
    }

    pub fn d1(&self, t: f64) -> f64 {
        match &self.h1 {
            Some(g) => g(t),
            None => central_difference(&|s| (self.h)(s), t, 1, self.q_scale),
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match &self.h2 {
            Some(g) => g(t),
            None => central_difference(&|s| (self.h)(s), t, 2, self.q_scale),
        }
    }

    pub fn d3(&self, t: f64) -> f64 {
        match &self.h2 {
            Some(g) => central_difference(&|s| g(s), t, 1, self.q_scale),
            None => central_difference(&|s| (self.h)(s), t, 3, self.q_scale),
        }
    }

    /// Spot check on a 32-point grid of [a, b].
    pub fn scale_check(&self, a: f64, b: f64) -> ScaleCheck {
        let (y, q) = (self.y_scale, self.q_scale);
        let mut upper = [0.0f64; 3];
        let mut lower = f64::INFINITY;
        for t in grid(a, b, 32) {
            let d = [self.d1(t), self.d2(t), self.d3(t)];
            for j in 0..3 {
                upper[j] = upper[j].max(d[j].abs() * q.powi(j as i32 + 1) / y);
            }
            lower = lower.min(d[1].abs() * q * q / y);
        }
        ScaleCheck {
            upper,
            lower_second: lower,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_differences() {
        let f = |x: f64| x.sin();
        for (n, want) in [(1u32, 1.0f64.cos()), (2, -1.0f64.sin()), (3, -1.0f64.cos()), (4, 1.0f64.sin())] {
            let d = central_difference(&f, 1.0, n, 1.0);
            assert!((d - want).abs() < 1e-5, "n={n} {d} {want}");
        }
        let d1 = central_difference(&|x: f64| x.exp(), 0.5, 1, 1.0);
        assert!((d1 - 0.5f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn weights() {
        let w = SmoothWeight::bump(1.0, 2.0);
        assert_eq!(w.eval(1.5), 1.0);
        assert_eq!(w.eval(0.9), 0.0);
        assert!(w.endpoint_defect() < 1e-8);
        let u = SmoothWeight::plateau(0.5, 1.0, 2.0, 3.0);
        for t in [1.0, 1.3, 2.0] {
            assert!((u.eval(t) - 1.0).abs() < 1e-15);
        }
        assert!(u.eval(0.75) > 0.0 && u.eval(0.75) < 1.0);
        assert!(u.endpoint_defect() < 1e-8);
        let bad = SmoothWeight::new(Arc::new(|_| 1.0), 0.0, 1.0, 1.0, 1.0);
        assert!(bad.is_err());
        let w = SmoothWeight::bump(-1.0, 1.0);
        let l1 = w.l1_norm();
        // e·∫exp(−1/(1−u²)) du = e·0.4439938...
        assert!((l1 - 1.2069003).abs() < 1e-6, "{l1}");
    }

    #[test]
    fn phase_scales() {
        let h = PhaseSpec::new(Arc::new(|t: f64| 100.0 * t.ln())).with_scales(100.0, 1.0);
        let c = h.scale_check(1.0, 2.0);
        assert!((c.upper[0] - 1.0).abs() < 1e-6);
        assert!((c.lower_second - 0.25).abs() < 1e-5);
        let s = h.scaled(3.0);
        assert!((s.d1(2.0) - 150.0).abs() < 1e-7);
        assert_eq!(s.y_scale, 300.0);
    }
}
