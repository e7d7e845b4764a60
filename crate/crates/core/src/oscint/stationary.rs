use super::quad::{weight_phase_best_effort, weight_phase_integral};
use super::{central_difference, grid, PhaseSpec, SmoothWeight};
use crate::error::{Error, Result};
use crate::report::Verdict;
use crate::special::{ComplexEstimate, Method};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::Arc;

const SCAN_POINTS: usize = 513;

/// The unique sign change of h′ on [a, b], located by bisection and
/// polished by Newton.
pub fn find_stationary_point(h: &PhaseSpec, a: f64, b: f64) -> Result<f64> {
    let ts: Vec<f64> = grid(a, b, SCAN_POINTS).collect();
    let ds: Vec<f64> = ts.iter().map(|&t| h.d1(t)).collect();
    let mut brackets = Vec::new();
    for j in 0..ts.len() - 1 {
        if ds[j] == 0.0 && j > 0 && j < ts.len() - 1 {
            brackets.push((ts[j], ts[j]));
        } else if ds[j] * ds[j + 1] < 0.0 {
            brackets.push((ts[j], ts[j + 1]));
        }
    }
    match brackets.len() {
        0 => return Err(Error::NoStationaryPoint),
        1 => {}
        n => return Err(Error::MultipleStationaryPoints(n)),
    }
    let (mut lo, mut hi) = brackets[0];
    let mut dlo = h.d1(lo);
    while hi - lo > 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let dm = h.d1(mid);
        if dm == 0.0 {
            return Ok(mid);
        }
        if dm * dlo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            dlo = dm;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let h2 = h.d2(t);
        if h2 == 0.0 {
            break;
        }
        let next = t - h.d1(t) / h2;
        if !(next >= lo && next <= hi) {
            break;
        }
        t = next;
    }
    Ok(t)
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryPhaseReport {
    pub estimate: ComplexEstimate,
    pub t0: f64,
    pub h2: f64,
    /// e^{ih(t₀)}·p_n(t₀)/√h″(t₀) for n = 0..=order
    pub terms: Vec<Complex64>,
    /// magnitude of the n = 1 term
    pub first_correction: f64,
    /// V·√Y/Q, large in the regime where the expansion is asymptotic
    pub size_parameter: f64,
    pub y_scale: f64,
}

const MAX_ORDER: usize = 2;

/// Stationary-phase expansion of ∫ w e^{ih} about the unique interior
/// stationary point, with terms
/// p_n = √(2π) e^{iπ/4} (i/(2h″(t₀)))^n G^{(2n)}(t₀) / n!,
/// G(t) = w(t) exp(i(h(t) − h(t₀) − ½h″(t₀)(t − t₀)²)).
pub fn stationary_phase_eval(
    w: &SmoothWeight,
    h: &PhaseSpec,
    order: usize,
) -> Result<StationaryPhaseReport> {
    if order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "stationary phase order {order} > {MAX_ORDER}"
        )));
    }
    let (a, b) = w.support();
    let t0 = find_stationary_point(h, a, b)?;
    let h0 = h.value(t0);
    let h2 = h.d2(t0);
    if h2 == 0.0 {
        return Err(Error::Precondition("degenerate stationary point".into()));
    }
    let (y, q) = (h.y_scale, h.q_scale);
    let scale = w.v_scale.min(q * y.powf(-1.0 / 3.0)).min((b - a) / 4.0);
    let big_h = |t: f64| h.value(t) - h0 - 0.5 * h2 * (t - t0) * (t - t0);
    let g_re = |t: f64| w.eval(t) * big_h(t).cos();
    let g_im = |t: f64| w.eval(t) * big_h(t).sin();
    let sqrt_h2 = Complex64::new(h2, 0.0).sqrt();
    let front = Complex64::from_polar(1.0, h0) / sqrt_h2
        * Complex64::from_polar((TAU).sqrt(), FRAC_PI_4);
    let ratio = Complex64::new(0.0, 1.0 / (2.0 * h2));
    let wanted = (order + 1).min(MAX_ORDER);
    let mut terms = Vec::with_capacity(wanted + 1);
    let mut fact = 1.0;
    for n in 0..=wanted {
        if n > 0 {
            fact *= n as f64;
        }
        let g = if n == 0 {
            Complex64::new(w.eval(t0), 0.0)
        } else {
            let k = 2 * n as u32;
            Complex64::new(
                central_difference(&g_re, t0, k, scale),
                central_difference(&g_im, t0, k, scale),
            )
        };
        terms.push(front * ratio.powu(n as u32) * g / fact);
    }
    let first_correction = terms.get(1).map_or(0.0, |z| z.norm());
    let kept: Complex64 = terms.iter().take(order + 1).sum();
    let abs_error = if order < wanted {
        2.0 * terms[order + 1].norm()
    } else {
        let (t1, t2) = (terms[1].norm(), terms[2].norm());
        if t1 > 0.0 {
            2.0 * t2 * (t2 / t1).max(1e-3)
        } else {
            t2
        }
    };
    terms.truncate(order + 1);
    Ok(StationaryPhaseReport {
        estimate: ComplexEstimate::new(kept, abs_error, Method::Asymptotic),
        t0,
        h2,
        terms,
        first_correction,
        size_parameter: w.v_scale * y.sqrt() / q,
        y_scale: y,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderPoint {
    pub lambda: f64,
    pub r: f64,
    pub magnitude: f64,
    pub threshold: f64,
    pub bound_shape: f64,
    pub in_regime: bool,
    pub at_floor: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub points: Vec<LadderPoint>,
    pub floor: f64,
    /// slope of log|I| against log R over in-regime points above the floor
    pub fitted_exponent: Option<f64>,
    pub verdict: Verdict,
}

/// Scales the phase along a geometric ladder λ ∈ {10^{j/2}} and checks that
/// |I| falls at least as fast as VX[(QR/√Y)^{−3} + (RV)^{−3}] once
/// R ≥ 10·max(√Y/Q, 1/V).
pub fn nonstationary_decay_check(w: &SmoothWeight, h: &PhaseSpec) -> Result<DecayReport> {
    let r = h
        .lower_bound
        .ok_or_else(|| Error::InvalidArgument("phase needs a lower bound R on |h'|".into()))?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("R = {r}")));
    }
    let (a, b) = w.support();
    let min_d1 = grid(a, b, SCAN_POINTS)
        .map(|t| h.d1(t).abs())
        .fold(f64::INFINITY, f64::min);
    if min_d1 < r * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!(
            "|h'| drops to {min_d1:e} < R = {r:e} on the support"
        )));
    }
    let l1 = w.l1_norm();
    let tol = 1e-14 * l1.max(f64::MIN_POSITIVE);
    let floor = 100.0 * tol;
    let (v, x) = (w.v_scale, w.x_scale);
    let mut points = Vec::new();
    for j in 0..=6 {
        let lambda = 10f64.powf(j as f64 / 2.0);
        let hs = h.scaled(lambda);
        let i = match weight_phase_best_effort(w, &hs, tol) {
            Ok(e) => e,
            Err(Error::Precondition(_)) => break,
            Err(e) => return Err(e),
        };
        let rl = r * lambda;
        let (yl, q) = (hs.y_scale, hs.q_scale);
        let threshold = 10.0 * (yl.sqrt() / q).max(1.0 / v);
        let bound_shape = v * x * ((q * rl / yl.sqrt()).powi(-3) + (rl * v).powi(-3));
        let magnitude = i.value.norm();
        points.push(LadderPoint {
            lambda,
            r: rl,
            magnitude,
            threshold,
            bound_shape,
            in_regime: rl >= threshold,
            at_floor: magnitude <= floor.max(i.abs_error),
        });
    }
    let regime: Vec<&LadderPoint> = points.iter().filter(|p| p.in_regime).collect();
    let verdict = if regime.len() < 2 {
        Verdict::Inconclusive
    } else {
        let ok = regime.windows(2).all(|pair| {
            let (p, q) = (pair[0], pair[1]);
            q.at_floor || p.at_floor || q.magnitude / p.magnitude <= 2.0 * q.bound_shape / p.bound_shape
        });
        Verdict::from_check(ok)
    };
    let fit: Vec<(f64, f64)> = regime
        .iter()
        .filter(|p| !p.at_floor)
        .map(|p| (p.r.ln(), p.magnitude.ln()))
        .collect();
    Ok(DecayReport {
        points,
        floor,
        fitted_exponent: least_squares_slope(&fit),
        verdict,
    })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    crate::unity::linear_fit(pts).map(|f| f.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct SignPairReport {
    pub u: f64,
    pub x: f64,
    pub k: f64,
    pub plus: ComplexEstimate,
    pub minus: ComplexEstimate,
    /// |I₊| / |I₋|
    pub ratio: f64,
    pub plus_stationary: Option<f64>,
    pub minus_stationary: Option<f64>,
}

/// The v-integrals ∫ F(v) e(uv ± 4π²xv²/K²) dv with F a plateau weight equal
/// to 1 on [−V, V] and supported on [−2V, 2V].
pub fn fresnel_sign_pair(u: f64, x: f64, k: f64, v: f64) -> Result<SignPairReport> {
    let f = SmoothWeight::plateau(-2.0 * v, -v, v, 2.0 * v);
    let a = 4.0 * PI * PI * x / (k * k);
    let phase = |sign: f64| {
        PhaseSpec::new(Arc::new(move |t| TAU * (u * t + sign * a * t * t)))
            .with_derivatives(
                Arc::new(move |t| TAU * (u + 2.0 * sign * a * t)),
                Arc::new(move |_| TAU * 2.0 * sign * a),
            )
            .with_scales(TAU * a * v * v, v)
    };
    let tol = 1e-12 * f.l1_norm();
    let (hp, hm) = (phase(1.0), phase(-1.0));
    let plus = weight_phase_integral(&f, &hp, tol)?;
    let minus = weight_phase_integral(&f, &hm, tol)?;
    let (sa, sb) = f.support();
    Ok(SignPairReport {
        u,
        x,
        k,
        ratio: plus.value.norm() / minus.value.norm(),
        plus,
        minus,
        plus_stationary: find_stationary_point(&hp, sa, sb).ok(),
        minus_stationary: find_stationary_point(&hm, sa, sb).ok(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondDerivativeReport {
    pub value: ComplexEstimate,
    pub r: f64,
    pub m: f64,
    pub bound: f64,
    /// whether g/f′ is monotone on the scan grid
    pub monotone: bool,
    pub verdict: Verdict,
}

/// |∫ g e(f)| ≤ 8M/√r for f″ of one sign with |f″| ≥ r and |g| ≤ M.
pub fn second_derivative_bound_check(
    g: &SmoothWeight,
    f: &PhaseSpec,
) -> Result<SecondDerivativeReport> {
    let (a, b) = g.support();
    let ts: Vec<f64> = grid(a, b, 1025).collect();
    let f2: Vec<f64> = ts.iter().map(|&t| f.d2(t)).collect();
    let positive = f2[0] > 0.0;
    if f2.iter().any(|&d| d == 0.0 || (d > 0.0) != positive) {
        return Err(Error::Precondition("f'' changes sign or vanishes".into()));
    }
    let r = f2.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
    let m = ts.iter().map(|&t| g.eval(t).abs()).fold(0.0, f64::max);
    let quot: Vec<f64> = ts.iter().map(|&t| g.eval(t) / f.d1(t)).collect();
    let monotone = quot.iter().all(|q| q.is_finite())
        && (quot.windows(2).all(|p| p[1] >= p[0]) || quot.windows(2).all(|p| p[1] <= p[0]));
    let value = weight_phase_integral(g, &f.scaled(TAU), 1e-12 * (m * (b - a)).max(1e-300))?;
    let bound = 8.0 * m / r.sqrt();
    Ok(SecondDerivativeReport {
        verdict: Verdict::from_check(value.value.norm() <= bound),
        value,
        r,
        m,
        bound,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::super::oscillatory_quadrature;
    use super::*;

    fn quadratic(amp: f64, centre: f64) -> PhaseSpec {
        PhaseSpec::new(Arc::new(move |t| amp * (t - centre) * (t - centre)))
            .with_derivatives(
                Arc::new(move |t| 2.0 * amp * (t - centre)),
                Arc::new(move |_| 2.0 * amp),
            )
            .with_scales(amp, 1.0)
    }

    #[test]
    fn quadratic_phase_leading_term() {
        let w = SmoothWeight::bump(1.0, 2.0);
        let amp = 1e3;
        let h = quadratic(amp, 1.5);
        let sp = stationary_phase_eval(&w, &h, 0).unwrap();
        let expected = (PI / amp).sqrt() * Complex64::from_polar(1.0, FRAC_PI_4);
        assert!((sp.estimate.value - expected).norm() < 1e-14);
        assert!((sp.t0 - 1.5).abs() < 1e-12);
        let q = oscillatory_quadrature(&w, &h, 1e-12).unwrap();
        let rel = (sp.estimate.value - q.value).norm() / q.value.norm();
        assert!(rel <= 0.02, "{rel}");
        assert!((sp.estimate.value - q.value).norm() <= sp.estimate.abs_error);
    }

    #[test]
    fn gaussian_fresnel_closed_form() {
        // ∫ exp(iAt²) exp(−t²) dt = √(π/(1 − iA))
        let amp = 40.0;
        let w = SmoothWeight::amplitude(Arc::new(|t: f64| (-t * t).exp()), -7.0, 7.0, 1.0, 1.0)
            .unwrap();
        let h = quadratic(amp, 0.0);
        let exact = (Complex64::new(PI, 0.0) / Complex64::new(1.0, -amp)).sqrt();
        let q = oscillatory_quadrature(&w, &h, 1e-12).unwrap();
        assert!((q.value - exact).norm() < 1e-11);
        let mut last = f64::INFINITY;
        for order in 0..=2 {
            let sp = stationary_phase_eval(&w, &h, order).unwrap();
            let err = (sp.estimate.value - exact).norm();
            assert!(err < last, "order {order}");
            assert!(err <= sp.estimate.abs_error, "order {order}: {err:e}");
            last = err;
        }
    }

    #[test]
    fn stationary_point_errors() {
        let w = SmoothWeight::bump(1.0, 2.0);
        let linear = PhaseSpec::new(Arc::new(|t| 5.0 * t));
        assert_eq!(
            stationary_phase_eval(&w, &linear, 0).unwrap_err(),
            Error::NoStationaryPoint
        );
        let wiggly = PhaseSpec::new(Arc::new(|t: f64| (20.0 * t).sin()));
        assert!(matches!(
            stationary_phase_eval(&w, &wiggly, 0),
            Err(Error::MultipleStationaryPoints(_))
        ));
    }

    #[test]
    fn linear_phase_decay_ladder() {
        let w = SmoothWeight::bump(1.0, 2.0);
        let r = 10.0;
        let h = PhaseSpec::new(Arc::new(move |t| r * t))
            .with_derivatives(Arc::new(move |_| r), Arc::new(|_| 0.0))
            .with_scales(r, 1.0)
            .with_lower_bound(r);
        let rep = nonstationary_decay_check(&w, &h).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!((rep.points.last().unwrap().r - 1e4).abs() < 1e-6);
        let mags: Vec<f64> = rep.points.iter().map(|p| p.magnitude).collect();
        // faster than R^{-3} between the first two in-regime points
        let p: Vec<&LadderPoint> = rep.points.iter().filter(|p| p.in_regime && !p.at_floor).collect();
        assert!(p.len() >= 2, "{mags:?}");
        assert!(p[1].magnitude / p[0].magnitude < (p[1].r / p[0].r).powi(-3), "{mags:?}");
    }

    #[test]
    fn decay_check_out_of_regime_and_violations() {
        let narrow = SmoothWeight::new(
            Arc::new(|t: f64| super::super::bump_profile((t - 1.5) / 1e-4)),
            1.5 - 1e-4,
            1.5 + 1e-4,
            1.0,
            1e-5,
        )
        .unwrap();
        let h = PhaseSpec::new(Arc::new(|t| t))
            .with_derivatives(Arc::new(|_| 1.0), Arc::new(|_| 0.0))
            .with_lower_bound(1.0);
        let rep = nonstationary_decay_check(&narrow, &h).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        let w = SmoothWeight::bump(1.0, 2.0);
        let bad = quadratic(10.0, 1.5).with_lower_bound(1.0);
        assert!(matches!(nonstationary_decay_check(&w, &bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn both_signs_have_stationary_points() {
        // I₋(u) = conj(I₊(u)) under v → −v for even F.
        for (u, x) in [(1.0, 400.0), (1.5, 1000.0), (2.0, 2500.0)] {
            let rep = fresnel_sign_pair(u, x, 10.0, 1.0).unwrap();
            assert!(rep.plus_stationary.is_some() && rep.minus_stationary.is_some());
            assert!((rep.plus.value - rep.minus.value.conj()).norm() < 1e-10);
            assert!((rep.ratio - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn second_derivative_examples() {
        let quad_phase = PhaseSpec::new(Arc::new(|t| t * t))
            .with_derivatives(Arc::new(|t| 2.0 * t), Arc::new(|_| 2.0));
        let one = SmoothWeight::constant(1.0, 2.0, 1.0);
        let rep = second_derivative_bound_check(&one, &quad_phase).unwrap();
        assert!((rep.r - 2.0).abs() < 1e-12 && rep.m == 1.0);
        assert!((rep.bound - 8.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.monotone);

        let t = 500.0;
        let log_phase = PhaseSpec::new(Arc::new(move |x: f64| t / TAU * x.ln()))
            .with_derivatives(
                Arc::new(move |x| t / (TAU * x)),
                Arc::new(move |x| -t / (TAU * x * x)),
            );
        let rep = second_derivative_bound_check(&one, &log_phase).unwrap();
        assert!((rep.r - t / (TAU * 4.0)).abs() < 1e-9);
        assert_eq!(rep.verdict, Verdict::Pass);

        let zero = SmoothWeight::constant(1.0, 2.0, 0.0);
        let rep = second_derivative_bound_check(&zero, &quad_phase).unwrap();
        assert_eq!(rep.value.value, Complex64::new(0.0, 0.0));
        assert_eq!(rep.verdict, Verdict::Pass);

        let cubic = PhaseSpec::new(Arc::new(|t: f64| (t - 1.5).powi(3)));
        assert!(second_derivative_bound_check(&one, &cubic).is_err());
    }

    #[test]
    fn section_seven_phase_curvature() {
        // G₁(x) = 2t log x − (N n₁/c₁)x² − (√(NÑ)/c₁)x·x₃ at t = 10³, N = Ñ = 10⁴
        let (t, nn, nt) = (1e3f64, 1e4f64, 1e4f64);
        let (n1, c1, x3) = (7.0, 100.0, 1.0);
        let b = (nn * nt).sqrt() / c1;
        let g1 = PhaseSpec::new(Arc::new(move |x: f64| {
            2.0 * t * x.ln() - nn * n1 / c1 * x * x - b * x * x3
        }))
        .with_derivatives(
            Arc::new(move |x| 2.0 * t / x - 2.0 * nn * n1 / c1 * x - b * x3),
            Arc::new(move |x| -2.0 * t / (x * x) - 2.0 * nn * n1 / c1),
        )
        .with_scales(t, 1.0);
        let w = SmoothWeight::new(
            Arc::new(|x: f64| x * super::super::bump_profile(2.0 * x * x - 3.0)),
            1.0,
            2f64.sqrt(),
            1.0,
            0.1,
        )
        .unwrap();
        let sp = stationary_phase_eval(&w, &g1, 0).unwrap();
        let ratio = sp.h2.abs() / t;
        assert!((0.25..=4.0).contains(&ratio), "{ratio}");
    }
}
