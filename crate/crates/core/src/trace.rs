//! The level-1 Petersson formula
//! Δ_k(m,n) = δ_{m=n} + 2π i^{−k} Σ_c S(m,n;c)/c · J_{k−1}(4π√(mn)/c)
//! and its spectral side Σ_f ω_f^{−1} λ_f(m) λ_f(n).

use crate::arith::{divisor_count, gcd};
use crate::error::{Error, Result};
use crate::expsums::kloosterman_real;
use crate::modforms::{dim_cusp_forms, hecke_eigenforms};
use crate::report::Verdict;
use crate::special::{bessel_j, bessel_small_argument_bound};
use crate::unity::{rsum, RootTable};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const MAX_C: u64 = 1_000_000;
pub const MAX_MN: u64 = 1_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct PeterssonSide {
    pub k: u32,
    pub m: u64,
    pub n: u64,
    pub delta_term: u8,
    /// Σ_{c ≤ c_max} S(m,n;c)/c · J_{k−1}(4π√(mn)/c), without the 2π i^{−k}
    pub kloosterman_sum_value: f64,
    pub tail_bound: f64,
    /// Accumulated Bessel error, already scaled by 2π.
    pub rounding_bound: f64,
    pub c_max: u64,
    pub value: f64,
}

fn check_args(k: u32, m: u64, n: u64) -> Result<()> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("weight {k} must be even and >= 4")));
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("m, n must be positive".into()));
    }
    if m.saturating_mul(n) > MAX_MN {
        return Err(Error::OutOfRange(format!("mn = {} > {MAX_MN}", m * n)));
    }
    Ok(())
}

/// Bound on 2π Σ_{c > C} |S(m,n;c)|/c · |J_{k−1}(4π√(mn)/c)| from |S| ≤ c
/// and |J_ν(x)| ≤ (x/2)^ν/ν!.
pub fn petersson_tail_bound(k: u32, m: u64, n: u64, c: u64) -> f64 {
    let nu = k - 1;
    let a = 2.0 * PI * ((m * n) as f64).sqrt();
    // Σ_{c'>c} c'^{−ν} ≤ ∫_c^∞ y^{−ν} dy
    let zeta_tail = (c as f64).powi(1 - nu as i32) / (nu as f64 - 1.0);
    2.0 * PI * bessel_small_argument_bound(nu, 2.0 * a) * zeta_tail
}

fn required_c(k: u32, m: u64, n: u64, tol: f64) -> Result<u64> {
    let (mut lo, mut hi) = (1u64, 1u64);
    while petersson_tail_bound(k, m, n, hi) >= tol {
        if hi >= MAX_C {
            return Err(Error::NoConvergence {
                what: format!("Petersson tail for k={k}, m={m}, n={n} within c <= {MAX_C}"),
                achieved: petersson_tail_bound(k, m, n, MAX_C),
            });
        }
        lo = hi;
        hi = (hi * 2).min(MAX_C);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if petersson_tail_bound(k, m, n, mid) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The c-sum truncated at `c_max`, with its accumulated Bessel error.
pub fn petersson_truncated(k: u32, m: u64, n: u64, c_max: u64) -> Result<(f64, f64)> {
    check_args(k, m, n)?;
    if c_max == 0 || c_max > MAX_C {
        return Err(Error::OutOfRange(format!("c_max = {c_max}")));
    }
    let a = 4.0 * PI * ((m * n) as f64).sqrt();
    let terms: Vec<Result<(f64, f64)>> = (1..=c_max)
        .into_par_iter()
        .map(|c| {
            let j = bessel_j(k - 1, a / c as f64)?;
            let s = kloosterman_real(&RootTable::new(c as i64), m as i64, n as i64);
            Ok((s * j.value.re / c as f64, s.abs() * j.abs_error / c as f64))
        })
        .collect();
    let terms = terms.into_iter().collect::<Result<Vec<_>>>()?;
    let value = rsum(terms.iter().map(|t| t.0));
    let err = rsum(terms.iter().map(|t| t.1)) + 4.0 * f64::EPSILON * rsum(terms.iter().map(|t| t.0.abs()));
    Ok((value, err))
}

/// Geometric side Δ_k(m,n), truncated where the tail bound drops below `tol`.
pub fn petersson_delta(k: u32, m: u64, n: u64, tol: f64) -> Result<PeterssonSide> {
    check_args(k, m, n)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol}")));
    }
    let c_max = required_c(k, m, n, tol)?;
    let (sum, err) = petersson_truncated(k, m, n, c_max)?;
    let delta_term = u8::from(m == n);
    let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(PeterssonSide {
        k,
        m,
        n,
        delta_term,
        kloosterman_sum_value: sum,
        tail_bound: petersson_tail_bound(k, m, n, c_max),
        rounding_bound: 2.0 * PI * err,
        c_max,
        value: delta_term as f64 + 2.0 * PI * sign * sum,
    })
}

/// All pairs (m, n) with 1 ≤ m, n ≤ size.
pub fn square_grid(size: u64) -> Vec<(u64, u64)> {
    (1..=size).flat_map(|m| (1..=size).map(move |n| (m, n))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaRecovery {
    pub m: u64,
    pub recovered: f64,
    pub expected: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Rank1Check {
    /// max |Δ(m,n)Δ(1,1) − Δ(m,1)Δ(1,n)| / Δ(1,1)²
    pub factorization_residual: f64,
    pub harmonic_weight: f64,
    pub recovery: Vec<LambdaRecovery>,
    pub max_lambda_error: f64,
    /// max |λ(n)|/d(n) over recovered values
    pub deligne_ratio: f64,
    /// max |λ(m)λ(n) − Σ_{d|(m,n)} λ(mn/d²)| over products inside the grid
    pub hecke_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dim2Check {
    /// ω_f^{−1} for the two eigenforms, ordered as `hecke_eigenforms`.
    pub weights: [f64; 2],
    pub condition: f64,
    pub max_residual: f64,
    pub weights_positive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub k: u32,
    pub dim: usize,
    pub pairs: usize,
    pub max_c: u64,
    pub max_tail: f64,
    pub max_abs_delta: f64,
    pub symmetry_residual: f64,
    /// Singular values of [Δ(m,n)] when the grid is a full rectangle.
    pub singular_values: Option<Vec<f64>>,
    pub rank1: Option<Rank1Check>,
    pub dim2: Option<Dim2Check>,
    pub verdict: Verdict,
}

fn compute_deltas(k: u32, pairs: &[(u64, u64)], tail_tol: f64) -> Result<BTreeMap<(u64, u64), PeterssonSide>> {
    let mut out = BTreeMap::new();
    for &(m, n) in pairs {
        if !out.contains_key(&(m, n)) {
            out.insert((m, n), petersson_delta(k, m, n, tail_tol)?);
        }
    }
    Ok(out)
}

fn rectangle(pairs: &[(u64, u64)], d: &BTreeMap<(u64, u64), PeterssonSide>) -> Option<DMatrix<f64>> {
    let mut ms: Vec<u64> = pairs.iter().map(|p| p.0).collect();
    let mut ns: Vec<u64> = pairs.iter().map(|p| p.1).collect();
    ms.sort_unstable();
    ms.dedup();
    ns.sort_unstable();
    ns.dedup();
    let mut mat = DMatrix::zeros(ms.len(), ns.len());
    for (i, m) in ms.iter().enumerate() {
        for (j, n) in ns.iter().enumerate() {
            mat[(i, j)] = d.get(&(*m, *n))?.value;
        }
    }
    Some(mat)
}

fn hecke_residual(lambda: &BTreeMap<u64, f64>) -> f64 {
    let mut worst = 0.0f64;
    for (&m, &lm) in lambda.iter().filter(|(&m, _)| m >= 2) {
        for (&n, &ln) in lambda.iter().filter(|(&n, _)| n >= 2) {
            let Some(&_) = lambda.get(&(m * n)) else { continue };
            let g = gcd(m as i64, n as i64) as u64;
            let rhs: f64 = (1..=g)
                .filter(|d| g % d == 0)
                .map(|d| lambda.get(&(m * n / (d * d))).copied())
                .sum::<Option<f64>>()
                .unwrap_or(f64::NAN);
            worst = worst.max((lm * ln - rhs).abs());
        }
    }
    worst
}

/// Compare the geometric side on `grid` with the spectral side over the
/// level-1 eigenbasis of weight k.
pub fn trace_consistency(k: u32, grid: &[(u64, u64)], tol: f64) -> Result<TraceReport> {
    let dim = dim_cusp_forms(k);
    if dim > 2 {
        return Err(Error::Precondition(format!("dim S_{k} = {dim} > 2")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let max_index = grid.iter().map(|p| p.0.max(p.1)).max().unwrap_or(1);
    let mut pairs: Vec<(u64, u64)> = grid.to_vec();
    for &(m, n) in grid {
        pairs.extend([(n, m), (m, 1), (1, n), (1, 1), (2, 1)]);
    }
    let d = compute_deltas(k, &pairs, 1e-13)?;
    let get = |m: u64, n: u64| d[&(m, n)].value;

    let max_c = d.values().map(|s| s.c_max).max().unwrap_or(0);
    let max_tail = d.values().map(|s| s.tail_bound).fold(0.0, f64::max);
    let max_abs_delta = grid.iter().map(|&(m, n)| get(m, n).abs()).fold(0.0, f64::max);
    let symmetry_residual = grid
        .iter()
        .map(|&(m, n)| (get(m, n) - get(n, m)).abs())
        .fold(0.0, f64::max);
    let singular_values = rectangle(grid, &d).map(|mat| {
        let mut s: Vec<f64> = mat.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    });

    let mut verdict = Verdict::from_check(symmetry_residual <= 1e-10);
    let mut rank1 = None;
    let mut dim2 = None;
    match dim {
        0 => verdict = verdict.and(Verdict::from_check(max_abs_delta <= tol)),
        1 => {
            let f = hecke_eigenforms(k, max_index as usize + 1)?.remove(0);
            let w = get(1, 1);
            let factorization_residual = grid
                .iter()
                .map(|&(m, n)| (get(m, n) * w - get(m, 1) * get(1, n)).abs() / (w * w))
                .fold(0.0, f64::max);
            let mut indices: Vec<u64> = grid.iter().flat_map(|p| [p.0, p.1]).collect();
            indices.sort_unstable();
            indices.dedup();
            let recovery: Vec<LambdaRecovery> = indices
                .iter()
                .map(|&m| {
                    let recovered = get(m, 1) / w;
                    let expected = f.lambda[m as usize];
                    LambdaRecovery {
                        m,
                        recovered,
                        expected,
                        error: (recovered - expected).abs(),
                    }
                })
                .collect();
            let max_lambda_error = recovery.iter().map(|r| r.error).fold(0.0, f64::max);
            let deligne_ratio = recovery
                .iter()
                .map(|r| r.recovered.abs() / divisor_count(r.m) as f64)
                .fold(0.0, f64::max);
            let lambda: BTreeMap<u64, f64> = recovery.iter().map(|r| (r.m, r.recovered)).collect();
            let check = Rank1Check {
                factorization_residual,
                harmonic_weight: w,
                max_lambda_error,
                deligne_ratio,
                hecke_residual: hecke_residual(&lambda),
                recovery,
            };
            verdict = verdict.and(Verdict::from_check(
                w > 0.0
                    && check.factorization_residual <= tol
                    && check.max_lambda_error <= tol
                    && check.deligne_ratio <= 1.0 + 1e-6
                    && check.hecke_residual <= 1e-6,
            ));
            rank1 = Some(check);
        }
        _ => {
            let forms = hecke_eigenforms(k, max_index as usize + 1)?;
            let (l1, l2) = (forms[0].lambda[2], forms[1].lambda[2]);
            let det = l2 - l1;
            let condition = (1.0 + l1.abs().max(l2.abs())) / det.abs();
            if !(condition < 1e8) {
                return Err(Error::RepeatedEigenvalue(k));
            }
            // w₁ + w₂ = Δ(1,1), w₁λ₁(2) + w₂λ₂(2) = Δ(2,1)
            let (d11, d21) = (get(1, 1), get(2, 1));
            let w1 = (d11 * l2 - d21) / det;
            let w2 = (d21 - d11 * l1) / det;
            let max_residual = grid
                .iter()
                .map(|&(m, n)| {
                    let (m, n) = (m as usize, n as usize);
                    let pred = w1 * forms[0].lambda[m] * forms[0].lambda[n] + w2 * forms[1].lambda[m] * forms[1].lambda[n];
                    (get(m as u64, n as u64) - pred).abs()
                })
                .fold(0.0, f64::max);
            let check = Dim2Check {
                weights: [w1, w2],
                condition,
                max_residual,
                weights_positive: w1 > 0.0 && w2 > 0.0,
            };
            verdict = verdict.and(Verdict::from_check(check.weights_positive && max_residual <= tol));
            dim2 = Some(check);
        }
    }
    Ok(TraceReport {
        k,
        dim,
        pairs: grid.len(),
        max_c,
        max_tail,
        max_abs_delta,
        symmetry_residual,
        singular_values,
        rank1,
        dim2,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_space_cancels() {
        let s = petersson_delta(10, 1, 1, 1e-13).unwrap();
        assert!(s.value.abs() < 1e-8, "{}", s.value);
        assert!(s.tail_bound < 1e-12);
        assert_eq!(s.delta_term, 1);
    }

    #[test]
    fn harmonic_weight_of_delta() {
        let s = petersson_delta(12, 1, 1, 1e-13).unwrap();
        assert!(s.value > 0.0);
        // ω^{−1} = Γ(k−1) / ((4π)^{k−1} ⟨Δ,Δ⟩) with ⟨Δ,Δ⟩ = 1.035362056804320922e−6
        let gamma11: f64 = (1..=10).map(|j| j as f64).product();
        let expected = gamma11 / (4.0 * PI).powi(11) / 1.035362056804320922e-6;
        assert!((s.value - expected).abs() < 1e-9 * expected, "{} vs {expected}", s.value);
    }

    #[test]
    fn dim_one_factorization() {
        let d = |m, n| petersson_delta(12, m, n, 1e-13).unwrap().value;
        let lhs = d(2, 3) * d(1, 1);
        let rhs = d(2, 1) * d(1, 3);
        assert!((lhs - rhs).abs() < 1e-8 * lhs.abs());
    }

    #[test]
    fn truncation_is_sound() {
        for (k, m, n) in [(12u32, 3u64, 5u64), (10, 4, 4), (16, 7, 2)] {
            let s = petersson_delta(k, m, n, 1e-13).unwrap();
            let (doubled, err) = petersson_truncated(k, m, n, 2 * s.c_max).unwrap();
            let change = 2.0 * PI * (doubled - s.kloosterman_sum_value).abs();
            assert!(change < s.tail_bound + 2.0 * PI * err + s.rounding_bound, "k={k} m={m} n={n}");
        }
    }

    #[test]
    fn argument_checks() {
        assert!(petersson_delta(11, 1, 1, 1e-12).is_err());
        assert!(petersson_delta(2, 1, 1, 1e-12).is_err());
        assert!(petersson_delta(12, 0, 1, 1e-12).is_err());
        assert!(petersson_delta(12, 2000, 1000, 1e-12).is_err());
        assert!(matches!(petersson_delta(4, 1000, 1000, 1e-12), Err(Error::NoConvergence { .. })));
        assert!(trace_consistency(36, &square_grid(2), 1e-6).is_err());
    }

    #[test]
    fn consistency_dim0_dim1_dim2() {
        let r = trace_consistency(10, &square_grid(5), 1e-8).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        let r = trace_consistency(12, &square_grid(8), 1e-7).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let rank = r.rank1.as_ref().unwrap();
        let l2 = rank.recovery.iter().find(|x| x.m == 2).unwrap().recovered;
        assert!((l2 - (-24.0 / 2f64.powf(5.5))).abs() < 1e-7);
        assert!((l2 + 0.530330).abs() < 1e-6);
        let sv = r.singular_values.unwrap();
        assert!(sv[1] <= 1e-6 * sv[0]);
        let r = trace_consistency(24, &square_grid(6), 1e-6).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.dim2);
        assert!(r.dim2.unwrap().weights_positive);
    }
}
