use super::{PhaseSpec, SmoothWeight};
use crate::error::{Error, Result};
use crate::special::{ComplexEstimate, Method};
use crate::unity::csum;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Largest total phase variation accepted by the quadrature oracle.
pub const MAX_PHASE: f64 = 1e7;
pub const DEFAULT_BUDGET: usize = 80_000_000;

/// Phase allowed across one initial Gauss–Kronrod panel.
const PANEL_PHASE: f64 = 8.0;
const MAX_DEPTH: u32 = 48;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525982424,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
/// 10-point Gauss weights at XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

struct Panel {
    value: Complex64,
    error: f64,
    floor: f64,
}

fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let mut fv = [Complex64::new(0.0, 0.0); 21];
    fv[20] = f(c);
    for j in 0..10 {
        let x = hl * XGK[j];
        fv[2 * j] = f(c - x);
        fv[2 * j + 1] = f(c + x);
    }
    let mut resk = fv[20] * WGK[10];
    let mut resg = Complex64::new(0.0, 0.0);
    let mut resabs = fv[20].norm() * WGK[10];
    for j in 0..10 {
        let pair = fv[2 * j] + fv[2 * j + 1];
        resk += pair * WGK[j];
        resabs += WGK[j] * (fv[2 * j].norm() + fv[2 * j + 1].norm());
        if j % 2 == 1 {
            resg += pair * WG[j / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fv[20] - mean).norm();
    for j in 0..10 {
        resasc += WGK[j] * ((fv[2 * j] - mean).norm() + (fv[2 * j + 1] - mean).norm());
    }
    let (resk, resabs, resasc) = (resk * hl, resabs * hl.abs(), resasc * hl.abs());
    let mut err = ((resk - resg * hl).norm()).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    Panel {
        value: resk,
        error: err.max(floor),
        floor,
    }
}

struct Adapt<'a, F> {
    f: &'a F,
    evals: &'a AtomicUsize,
    budget: usize,
}

impl<F: Fn(f64) -> Complex64> Adapt<'_, F> {
    /// Returns the panel estimate and whether the local tolerance was met.
    fn run(&self, a: f64, b: f64, tol: f64, depth: u32) -> (Panel, bool) {
        let p = gk21(self.f, a, b);
        let used = self.evals.fetch_add(21, Ordering::Relaxed) + 21;
        if p.error <= tol {
            return (p, true);
        }
        if depth >= MAX_DEPTH || used > self.budget || p.error <= p.floor {
            return (p, false);
        }
        let m = 0.5 * (a + b);
        let (l, okl) = self.run(a, m, tol / 2.0, depth + 1);
        let (r, okr) = self.run(m, b, tol / 2.0, depth + 1);
        let refined = Panel {
            value: l.value + r.value,
            error: l.error + r.error,
            floor: l.floor + r.floor,
        };
        (refined, okl && okr)
    }
}

/// ∫ f over [breaks[0], breaks.last()], splitting at the given breakpoints.
/// Panels run in parallel; the reduction is in panel order, so the result
/// does not depend on the thread count.
pub fn integrate<F>(f: F, breaks: &[f64], tol: f64, budget: usize) -> Result<ComplexEstimate>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let (est, converged, evals) = integrate_best_effort(f, breaks, tol, budget)?;
    if !converged && est.abs_error > tol {
        return Err(Error::NoConvergence {
            what: format!("adaptive quadrature ({evals} evaluations)"),
            achieved: est.abs_error,
        });
    }
    Ok(est)
}

/// As [`integrate`], but returns the estimate with its honest error bound
/// even when `tol` was not reached.
pub(crate) fn integrate_best_effort<F>(
    f: F,
    breaks: &[f64],
    tol: f64,
    budget: usize,
) -> Result<(ComplexEstimate, bool, usize)>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    if breaks.len() < 2 {
        return Err(Error::InvalidArgument("need at least one panel".into()));
    }
    let total = breaks[breaks.len() - 1] - breaks[0];
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("empty integration range".into()));
    }
    let evals = AtomicUsize::new(0);
    let adapt = Adapt {
        f: &f,
        evals: &evals,
        budget,
    };
    let panels: Vec<(Panel, bool)> = breaks
        .par_windows(2)
        .map(|w| adapt.run(w[0], w[1], tol * (w[1] - w[0]) / total, 0))
        .collect();
    let value = csum(panels.iter().map(|(p, _)| p.value));
    let mag: f64 = panels.iter().map(|(p, _)| p.value.norm()).sum();
    let error: f64 =
        panels.iter().map(|(p, _)| p.error).sum::<f64>() + 4.0 * f64::EPSILON * mag;
    let converged = panels.iter().all(|(_, ok)| *ok);
    Ok((
        ComplexEstimate::new(value, error, Method::Quadrature),
        converged,
        evals.load(Ordering::Relaxed),
    ))
}

/// Breakpoints on [a, b] such that each panel carries at most a few radians
/// of phase, given the local rate |dφ/dt|.
pub fn phase_breakpoints(
    a: f64,
    b: f64,
    rate: &dyn Fn(f64) -> f64,
    max_len: f64,
) -> Result<Vec<f64>> {
    let mut pts = vec![a];
    let mut t = a;
    let mut phase = 0.0;
    let max_len = max_len.min(b - a);
    while t < b {
        let r0 = rate(t).abs();
        let mut step = (PANEL_PHASE / r0.max(1e-300)).min(max_len);
        let r1 = rate((t + step).min(b)).abs();
        let r = r0.max(r1);
        if r1 > r0 {
            step = (PANEL_PHASE / r1).min(max_len);
        }
        phase += r * step.min(b - t);
        if phase > MAX_PHASE {
            return Err(Error::Precondition(format!(
                "total phase variation exceeds {MAX_PHASE:e} radians"
            )));
        }
        t += step;
        if t > b - 1e-3 * step {
            t = b;
        }
        pts.push(t);
    }
    Ok(pts)
}

fn weight_phase_breaks(w: &SmoothWeight, h: &PhaseSpec) -> Result<Vec<f64>> {
    let (a, b) = w.support();
    phase_breakpoints(a, b, &|t| h.d1(t), (b - a) / 16.0)
}

/// Best-effort variant used where tiny magnitudes are being measured.
pub(crate) fn weight_phase_best_effort(
    w: &SmoothWeight,
    h: &PhaseSpec,
    tol: f64,
) -> Result<ComplexEstimate> {
    let breaks = weight_phase_breaks(w, h)?;
    integrate_best_effort(|t| weight_phase_point(w, h, t), &breaks, tol, DEFAULT_BUDGET / 8)
        .map(|r| r.0)
}

#[inline]
fn weight_phase_point(w: &SmoothWeight, h: &PhaseSpec, t: f64) -> Complex64 {
    let wt = w.eval(t);
    if wt == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::from_polar(wt, h.value(t))
    }
}

/// ∫ w(t) exp(i h(t)) dt without the public tolerance floor.
pub fn weight_phase_integral(w: &SmoothWeight, h: &PhaseSpec, tol: f64) -> Result<ComplexEstimate> {
    let breaks = weight_phase_breaks(w, h)?;
    integrate(
        |t| weight_phase_point(w, h, t),
        &breaks,
        tol,
        DEFAULT_BUDGET,
    )
}

/// ∫ w(t) exp(i h(t)) dt to absolute accuracy `tol`.
pub fn oscillatory_quadrature(w: &SmoothWeight, h: &PhaseSpec, tol: f64) -> Result<ComplexEstimate> {
    if !(tol >= 1e-12) {
        return Err(Error::InvalidArgument(format!("tol must be >= 1e-12, got {tol}")));
    }
    weight_phase_integral(w, h, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn polynomials_and_trig() {
        let r = integrate(|t| Complex64::new(t * t, 0.0), &[0.0, 1.0], 1e-14, 10_000).unwrap();
        assert!((r.value.re - 1.0 / 3.0).abs() < 1e-15);
        let r = integrate(
            |t| Complex64::from_polar(1.0, 50.0 * t),
            &[0.0, 0.5, 1.0],
            1e-13,
            1_000_000,
        )
        .unwrap();
        let exact = (Complex64::from_polar(1.0, 50.0) - 1.0) / Complex64::new(0.0, 50.0);
        assert!((r.value - exact).norm() < 1e-13);
        assert!(r.abs_error <= 1e-13);
    }

    #[test]
    fn no_oscillation_matches_simpson() {
        let w = SmoothWeight::bump(1.0, 2.0);
        let r = oscillatory_quadrature(&w, &PhaseSpec::zero(), 1e-12).unwrap();
        assert!((r.value.re - w.l1_norm()).abs() < 1e-9);
        assert_eq!(r.value.im, 0.0);
    }

    #[test]
    fn linear_phase_many_oscillations() {
        let w = SmoothWeight::constant(0.0, 1.0, 1.0);
        let omega = 2.0e5 + 0.3;
        let h = PhaseSpec::new(Arc::new(move |t| omega * t))
            .with_derivatives(Arc::new(move |_| omega), Arc::new(|_| 0.0));
        let r = oscillatory_quadrature(&w, &h, 1e-12).unwrap();
        let exact = (Complex64::from_polar(1.0, omega) - 1.0) / Complex64::new(0.0, omega);
        assert!((r.value - exact).norm() < 1e-12, "{}", (r.value - exact).norm());
    }

    #[test]
    fn rejects_bad_inputs() {
        let w = SmoothWeight::bump(1.0, 2.0);
        assert!(oscillatory_quadrature(&w, &PhaseSpec::zero(), 1e-13).is_err());
        let h = PhaseSpec::new(Arc::new(|t| 1e8 * t));
        assert!(matches!(
            oscillatory_quadrature(&w, &h, 1e-10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let w = SmoothWeight::bump(1.0, 2.0);
        let h = PhaseSpec::new(Arc::new(|t: f64| 300.0 * t * t.ln()));
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| oscillatory_quadrature(&w, &h, 1e-12).unwrap().value)
        };
        let one = run(1);
        assert_eq!(one, run(3));
    }
}
