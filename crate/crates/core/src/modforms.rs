//! Level-1 cusp forms: Victor–Miller basis, Hecke operators, eigenforms and
//! coefficient bounds.
//!
//! q-expansions and Hecke matrices are exact `BigInt`s. Eigenvalues of T₂ are
//! isolated with a Sturm sequence and refined to `FIXED_BITS` binary digits;
//! eigenform coefficients are accumulated exactly in that fixed-point scale
//! and only converted to `f64` when normalizing to λ(n).

use crate::arith::{divisor_count_table, gcd};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

/// Binary digits kept for eigenvalues and eigenvector entries.
const FIXED_BITS: u64 = 256;

/// dim S_k(SL(2, Z)) for even k ≥ 0.
pub fn dim_cusp_forms(k: u32) -> usize {
    if k % 2 == 1 || k < 12 {
        return 0;
    }
    let base = (k / 12) as usize;
    if k % 12 == 2 {
        base - 1
    } else {
        base
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QExpansion {
    pub weight: u32,
    /// a(0), ..., a(prec - 1)
    pub coeffs: Vec<BigInt>,
}

impl QExpansion {
    pub fn prec(&self) -> usize {
        self.coeffs.len()
    }
}

fn check_weight(k: u32) -> Result<()> {
    if k % 2 == 1 || k < 4 {
        return Err(Error::InvalidArgument(format!(
            "weight must be even and >= 4, got {k}"
        )));
    }
    Ok(())
}

fn series_mul(a: &[BigInt], b: &[BigInt], prec: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); prec];
    for (i, ai) in a.iter().enumerate().take(prec) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(prec - i) {
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

fn series_pow(a: &[BigInt], e: u32, prec: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); prec];
    out[0] = BigInt::one();
    for _ in 0..e {
        out = series_mul(&out, a, prec);
    }
    out
}

/// Sparse Jacobi series ∏(1 − qⁿ)³ = Σ_{m≥0} (−1)^m (2m+1) q^{m(m+1)/2}.
fn eta_cubed_terms(prec: usize) -> Vec<(usize, i64)> {
    (0..)
        .map(|m: usize| (m * (m + 1) / 2, if m % 2 == 0 { 1 } else { -1 } * (2 * m as i64 + 1)))
        .take_while(|&(e, _)| e < prec)
        .collect()
}

/// Coefficients of A^alpha for a sparse series A with A(0) = 1, using
/// n F_n = Σ_{j≥1} ((alpha + 1) j − n) a_j F_{n−j}.
fn sparse_power_big(terms: &[(usize, i64)], alpha: i64, prec: usize) -> Vec<BigInt> {
    let mut f = vec![BigInt::zero(); prec];
    if prec == 0 {
        return f;
    }
    f[0] = BigInt::one();
    for n in 1..prec {
        let mut acc = BigInt::zero();
        for &(j, aj) in terms.iter().skip(1) {
            if j > n {
                break;
            }
            let w = ((alpha + 1) * j as i64 - n as i64) * aj;
            if w != 0 {
                acc += &f[n - j] * w;
            }
        }
        let (q, r) = acc.div_rem(&BigInt::from(n));
        debug_assert!(r.is_zero());
        f[n] = q;
    }
    f
}

/// Δ = q ∏(1 − qⁿ)²⁴ to `prec` terms (a(0) = 0).
pub fn delta_series(prec: usize) -> QExpansion {
    let body = sparse_power_big(&eta_cubed_terms(prec), 8, prec.saturating_sub(1));
    let mut coeffs = vec![BigInt::zero(); prec];
    for (i, c) in body.into_iter().enumerate() {
        coeffs[i + 1] = c;
    }
    QExpansion { weight: 12, coeffs }
}

fn divisor_power_sums(prec: usize, power: u32) -> Vec<BigInt> {
    let mut s = vec![BigInt::zero(); prec];
    for d in 1..prec {
        let dp = BigInt::from(d).pow(power);
        for m in (d..prec).step_by(d) {
            s[m] += &dp;
        }
    }
    s
}

/// E₄ = 1 + 240 Σ σ₃(n) qⁿ.
pub fn eisenstein_e4(prec: usize) -> QExpansion {
    let mut c = divisor_power_sums(prec, 3);
    for x in c.iter_mut() {
        *x *= 240;
    }
    if prec > 0 {
        c[0] = BigInt::one();
    }
    QExpansion { weight: 4, coeffs: c }
}

/// E₆ = 1 − 504 Σ σ₅(n) qⁿ.
pub fn eisenstein_e6(prec: usize) -> QExpansion {
    let mut c = divisor_power_sums(prec, 5);
    for x in c.iter_mut() {
        *x *= -504;
    }
    if prec > 0 {
        c[0] = BigInt::one();
    }
    QExpansion { weight: 6, coeffs: c }
}

/// Echelonized integral basis of S_k: the i-th form has a(j) = δ_ij for 1 ≤ j ≤ dim.
pub fn victor_miller_basis(k: u32, prec: usize) -> Result<Vec<QExpansion>> {
    check_weight(k)?;
    let d = dim_cusp_forms(k);
    if d == 0 {
        return Ok(Vec::new());
    }
    if prec < d + 2 {
        return Err(Error::InsufficientCoefficients {
            needed: d + 2,
            available: prec,
        });
    }
    let delta = delta_series(prec);
    let e4 = eisenstein_e4(prec);
    let e6 = eisenstein_e6(prec);
    let mut forms: Vec<Vec<BigInt>> = Vec::with_capacity(d);
    let mut delta_pow = delta.coeffs.clone();
    for j in 1..=d {
        let rest = k - 12 * j as u32;
        let b = if rest % 4 == 0 { 0 } else { 1 };
        let a = (rest - 6 * b) / 4;
        let f = series_mul(
            &delta_pow,
            &series_mul(
                &series_pow(&e4.coeffs, a, prec),
                &series_pow(&e6.coeffs, b, prec),
                prec,
            ),
            prec,
        );
        forms.push(f);
        delta_pow = series_mul(&delta_pow, &delta.coeffs, prec);
    }
    for i in (0..d).rev() {
        for j in i + 1..d {
            let factor = forms[i][j + 1].clone();
            if factor.is_zero() {
                continue;
            }
            let (head, tail) = forms.split_at_mut(j);
            for (x, y) in head[i].iter_mut().zip(&tail[0]) {
                *x -= &factor * y;
            }
        }
    }
    Ok(forms
        .into_iter()
        .map(|coeffs| QExpansion { weight: k, coeffs })
        .collect())
}

/// (T_m f)(n) = Σ_{d | gcd(m, n)} d^{k−1} a(mn/d²) for n < `out_prec`.
pub fn hecke_apply(f: &QExpansion, m: usize, out_prec: usize) -> Result<QExpansion> {
    let needed = m * (out_prec.max(1) - 1) + 1;
    if needed > f.prec() {
        return Err(Error::InsufficientCoefficients {
            needed,
            available: f.prec(),
        });
    }
    let k = f.weight;
    let coeffs = (0..out_prec)
        .map(|n| {
            if n == 0 {
                // a(0) σ_{k−1}(m); zero for cusp forms.
                let s: BigInt = (1..=m)
                    .filter(|d| m % d == 0)
                    .map(|d| BigInt::from(d).pow(k - 1))
                    .sum();
                return &f.coeffs[0] * s;
            }
            let g = gcd(m as i64, n as i64) as usize;
            (1..=g)
                .filter(|d| g % d == 0)
                .map(|d| BigInt::from(d).pow(k - 1) * &f.coeffs[m * n / (d * d)])
                .sum()
        })
        .collect();
    Ok(QExpansion { weight: k, coeffs })
}

/// Matrix of T_m on the echelon basis: row i holds the coordinates of T_m b_i.
pub fn hecke_matrix(basis: &[QExpansion], m: usize) -> Result<Vec<Vec<BigInt>>> {
    let d = basis.len();
    basis
        .iter()
        .map(|b| {
            let t = hecke_apply(b, m, d + 1)?;
            Ok(t.coeffs[1..=d].to_vec())
        })
        .collect()
}

pub fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|l| &a[i][l] * &b[l][j]).sum())
                .collect()
        })
        .collect()
}

/// Characteristic polynomial det(xI − M), coefficients from constant term up,
/// by Faddeev–LeVerrier over the rationals.
pub fn characteristic_polynomial(m: &[Vec<BigInt>]) -> Vec<BigInt> {
    let n = m.len();
    let mq: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect())
        .collect();
    let mut coeffs = vec![BigRational::zero(); n + 1];
    coeffs[n] = BigRational::one();
    let mut mk: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); n]; n];
    for k in 1..=n {
        // M_k = M·M_{k−1} + c_{n−k+1} I ; c_{n−k} = −tr(M·M_k)/k
        let mut next = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = BigRational::zero();
                for l in 0..n {
                    s += &mq[i][l] * &mk[l][j];
                }
                if i == j {
                    s += &coeffs[n - k + 1];
                }
                next[i][j] = s;
            }
        }
        mk = next;
        let mut tr = BigRational::zero();
        for i in 0..n {
            for l in 0..n {
                tr += &mq[i][l] * &mk[l][i];
            }
        }
        coeffs[n - k] = -tr / BigRational::from_integer(BigInt::from(k));
    }
    coeffs
        .into_iter()
        .map(|c| {
            debug_assert!(c.is_integer());
            c.to_integer()
        })
        .collect()
}

fn poly_eval_sign(p: &[BigInt], x_num: &BigInt, shift: u64) -> i32 {
    // sign of 2^{shift·deg} p(x_num / 2^shift)
    let deg = p.len() - 1;
    let mut total = BigInt::zero();
    let mut xp = BigInt::one();
    for (i, c) in p.iter().enumerate() {
        total += (c * &xp) << (shift as usize * (deg - i));
        xp *= x_num;
    }
    match total.sign() {
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
        num_bigint::Sign::Plus => 1,
    }
}

fn poly_derivative(p: &[BigInt]) -> Vec<BigInt> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigInt::from(i))
        .collect()
}

fn poly_trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn poly_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db].clone();
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let shift = r.len() - 1 - db;
        let f = r.last().unwrap().clone() / &lead;
        for (i, bi) in b.iter().enumerate() {
            r[shift + i] -= &f * bi;
        }
        r.pop();
        r = poly_trim(r);
        if r.len() <= db {
            break;
        }
    }
    poly_trim(r)
}

fn to_rat(p: &[BigInt]) -> Vec<BigRational> {
    p.iter().map(|c| BigRational::from_integer(c.clone())).collect()
}

/// Sturm chain p, p′, −rem(...) with rational coefficients, cleared to integers.
fn sturm_chain(p: &[BigInt]) -> Vec<Vec<BigInt>> {
    let mut chain = vec![to_rat(p), to_rat(&poly_derivative(p))];
    loop {
        let n = chain.len();
        let r = poly_rem(&chain[n - 2], &chain[n - 1]);
        if r.len() == 1 && r[0].is_zero() {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
        if chain.last().unwrap().len() == 1 {
            break;
        }
    }
    chain
        .into_iter()
        .map(|q| {
            let den = q.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            q.into_iter()
                .map(|c| (c * BigRational::from_integer(den.clone())).to_integer())
                .collect()
        })
        .collect()
}

fn sign_changes(chain: &[Vec<BigInt>], x_num: &BigInt, shift: u64) -> usize {
    let signs: Vec<i32> = chain
        .iter()
        .map(|p| poly_eval_sign(p, x_num, shift))
        .filter(|&s| s != 0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Real roots of an integer polynomial with distinct roots, as fixed-point
/// numerators over 2^FIXED_BITS, ascending.
fn real_roots_fixed(p: &[BigInt]) -> Option<Vec<BigInt>> {
    let deg = p.len() - 1;
    // squarefree check: gcd(p, p′) constant
    let chain = sturm_chain(p);
    if chain.last().map(|q| q.len() > 1).unwrap_or(false) {
        return None;
    }
    let lead = p[deg].abs();
    let bound = p.iter().map(|c| c.abs()).max().unwrap() / lead + BigInt::one() + BigInt::one();
    let scale = BigInt::one() << FIXED_BITS as usize;
    let lo = -&bound * &scale;
    let hi = &bound * &scale;
    let mut stack = vec![(lo, hi)];
    let mut roots = Vec::new();
    while let Some((a, b)) = stack.pop() {
        let count = sign_changes(&chain, &a, FIXED_BITS) as i64 - sign_changes(&chain, &b, FIXED_BITS) as i64;
        if count == 0 {
            continue;
        }
        if count == 1 || &b - &a <= BigInt::one() {
            // bisect on the sign of p
            let (mut a, mut b) = (a, b);
            let sa = poly_eval_sign(p, &a, FIXED_BITS);
            while &b - &a > BigInt::one() {
                let mid: BigInt = (&a + &b) >> 1;
                let sm = poly_eval_sign(p, &mid, FIXED_BITS);
                if sm == 0 {
                    b = mid;
                    break;
                }
                if sm == sa {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            roots.push(b);
            continue;
        }
        let mid: BigInt = (&a + &b) >> 1;
        stack.push((a, mid.clone()));
        stack.push((mid, b));
    }
    roots.sort();
    Some(roots)
}

fn fixed_to_f64(x: &BigInt, bits: u64) -> f64 {
    let bits_len = x.bits();
    if bits_len > 1000 {
        let drop = bits_len - 60;
        let y = x >> drop as usize;
        return y.to_f64().unwrap() * 2f64.powi((drop as i64 - bits as i64) as i32);
    }
    let shift = bits_len.saturating_sub(60);
    let y = x >> shift as usize;
    y.to_f64().unwrap() * 2f64.powi(shift as i32 - bits as i32)
}

/// Solve A c = b over the rationals; `None` if singular.
fn solve_rational(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for c in col..n {
                    let v = &f * &a[col][c];
                    a[r][c] -= v;
                }
                let v = &f * &b[col];
                b[r] -= v;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct Eigenform {
    pub weight: u32,
    pub space_dim: usize,
    /// Eigenvalue of T₂, i.e. a(2).
    pub t2_eigenvalue: f64,
    /// a(n) for n < prec (a(0) = 0), as f64.
    pub arithmetic: Vec<f64>,
    /// Exact integer coefficients, available when the eigenvalue is rational.
    #[serde(skip)]
    pub exact: Option<Vec<BigInt>>,
    /// λ(n) = a(n) / n^{(k−1)/2}; λ(0) = 0.
    pub lambda: Vec<f64>,
}

impl Eigenform {
    fn from_arithmetic(weight: u32, space_dim: usize, arithmetic: Vec<f64>, exact: Option<Vec<BigInt>>) -> Eigenform {
        let half = (weight as f64 - 1.0) / 2.0;
        let lambda = arithmetic
            .iter()
            .enumerate()
            .map(|(n, a)| if n == 0 { 0.0 } else { a / (n as f64).powf(half) })
            .collect();
        Eigenform {
            weight,
            space_dim,
            t2_eigenvalue: arithmetic.get(2).copied().unwrap_or(f64::NAN),
            arithmetic,
            exact,
            lambda,
        }
    }

    pub fn prec(&self) -> usize {
        self.lambda.len()
    }

    /// Ramanujan Δ with coefficients for n < prec, via the fast path.
    pub fn delta(prec: usize) -> Eigenform {
        let tau = ramanujan_tau(prec);
        let arithmetic = tau.iter().map(|&t| t as f64).collect();
        Eigenform::from_arithmetic(12, 1, arithmetic, None)
    }
}

/// Hecke eigenbasis of S_k, ordered by increasing T₂ eigenvalue.
pub fn hecke_eigenforms(k: u32, prec: usize) -> Result<Vec<Eigenform>> {
    check_weight(k)?;
    let d = dim_cusp_forms(k);
    if d == 0 {
        return Err(Error::Precondition(format!("dim S_{k} = 0")));
    }
    let prec = prec.max(2 * d + 2);
    let basis = victor_miller_basis(k, prec)?;
    if d == 1 {
        let exact = basis[0].coeffs.clone();
        let arithmetic = exact.iter().map(|c| c.to_f64().unwrap()).collect();
        return Ok(vec![Eigenform::from_arithmetic(k, 1, arithmetic, Some(exact))]);
    }
    let m = hecke_matrix(&basis, 2)?;
    let charpoly = characteristic_polynomial(&m);
    let roots = real_roots_fixed(&charpoly).ok_or(Error::RepeatedEigenvalue(k))?;
    if roots.len() != d {
        return Err(Error::RepeatedEigenvalue(k));
    }
    let scale = BigInt::one() << FIXED_BITS as usize;
    let denom = BigRational::from_integer(scale.clone());
    roots
        .iter()
        .map(|root| {
            let lam = BigRational::new(root.clone(), scale.clone());
            // left eigenvector c with c₁ = 1: Σ_i c_i M_ij = λ c_j for j = 2..d
            let a: Vec<Vec<BigRational>> = (1..d)
                .map(|j| {
                    (1..d)
                        .map(|i| {
                            let mut v = BigRational::from_integer(m[i][j].clone());
                            if i == j {
                                v -= &lam;
                            }
                            v
                        })
                        .collect()
                })
                .collect();
            let b: Vec<BigRational> = (1..d)
                .map(|j| -BigRational::from_integer(m[0][j].clone()))
                .collect();
            let rest = solve_rational(a, b).ok_or(Error::RepeatedEigenvalue(k))?;
            let fixed: Vec<BigInt> = std::iter::once(scale.clone())
                .chain(rest.iter().map(|c| (c * &denom).round().to_integer()))
                .collect();
            let arithmetic = (0..prec)
                .map(|n| {
                    let s: BigInt = fixed
                        .iter()
                        .zip(&basis)
                        .map(|(c, b)| c * &b.coeffs[n])
                        .sum();
                    fixed_to_f64(&s, FIXED_BITS)
                })
                .collect();
            Ok(Eigenform::from_arithmetic(k, d, arithmetic, None))
        })
        .collect()
}

const P1: u64 = 4_611_686_018_427_387_847; // largest prime below 2^62
const P2: u64 = 4_611_686_018_427_387_817;

fn mulm(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

fn powm(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, a, p);
        }
        a = mulm(a, a, p);
        e >>= 1;
    }
    r
}

fn sparse_power_mod(terms: &[(usize, i64)], alpha: i64, len: usize, p: u64) -> Vec<u64> {
    let mut f = vec![0u64; len];
    if len == 0 {
        return f;
    }
    f[0] = 1;
    let inv: Vec<u64> = (0..len as u64).map(|n| if n == 0 { 0 } else { powm(n, p - 2, p) }).collect();
    let red = |x: i64| -> u64 { x.rem_euclid(p as i64) as u64 };
    for n in 1..len {
        let mut acc: u128 = 0;
        for &(j, aj) in terms.iter().skip(1) {
            if j > n {
                break;
            }
            let w = red(((alpha + 1) * j as i64 - n as i64) * aj);
            acc += mulm(w, f[n - j], p) as u128;
        }
        f[n] = mulm((acc % p as u128) as u64, inv[n], p);
    }
    f
}

/// τ(n) for n < prec (τ(0) = 0), exact, via the Jacobi product computed
/// modulo two 62-bit primes and recombined.
pub fn ramanujan_tau(prec: usize) -> Vec<i128> {
    let len = prec.saturating_sub(1);
    let terms = eta_cubed_terms(len);
    let r1 = sparse_power_mod(&terms, 8, len, P1);
    let r2 = sparse_power_mod(&terms, 8, len, P2);
    let p1_inv = powm(P1 % P2, P2 - 2, P2);
    let modulus = P1 as u128 * P2 as u128;
    let mut out = vec![0i128; prec];
    for i in 0..len {
        let diff = (r2[i] as i128 - (r1[i] % P2) as i128).rem_euclid(P2 as i128) as u64;
        let t = mulm(diff, p1_inv, P2);
        let x = r1[i] as u128 + P1 as u128 * t as u128;
        out[i + 1] = if x > modulus / 2 {
            -((modulus - x) as i128)
        } else {
            x as i128
        };
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientBoundReport {
    pub x: usize,
    pub max_deligne_ratio: f64,
    pub argmax: usize,
    pub deligne_ok: bool,
    /// (x, Σ_{n≤x} λ(n)² / x) on a doubling grid ending at X
    pub rankin_selberg: Vec<(usize, f64)>,
    pub rs_min: f64,
    pub rs_max: f64,
}

impl CoefficientBoundReport {
    pub fn rs_within(&self, lo: f64, hi: f64) -> bool {
        self.rs_min >= lo && self.rs_max <= hi
    }
}

/// (x′, Σ_{n≤x′} λ(n)² / x′) on the doubling grid 1, 2, 4, … ending at x.
/// `lambda` is indexed by n, with lambda[0] ignored.
pub fn rankin_selberg_profile(lambda: &[f64], x: usize) -> Vec<(usize, f64)> {
    let x = x.min(lambda.len().saturating_sub(1));
    if x == 0 {
        return Vec::new();
    }
    let mut grid: Vec<usize> = std::iter::successors(Some(1usize), |&g| Some(g * 2))
        .take_while(|&g| g < x)
        .collect();
    grid.push(x);
    let mut partial = 0.0;
    let mut rs = Vec::with_capacity(grid.len());
    let mut gi = 0;
    for n in 1..=x {
        partial += lambda[n] * lambda[n];
        if n == grid[gi] {
            rs.push((n, partial / n as f64));
            gi += 1;
        }
    }
    rs
}

pub fn coefficient_bound_report(f: &Eigenform, x: usize) -> Result<CoefficientBoundReport> {
    if x == 0 {
        return Err(Error::InvalidArgument("X must be >= 1".into()));
    }
    if x >= f.prec() {
        return Err(Error::InsufficientCoefficients {
            needed: x + 1,
            available: f.prec(),
        });
    }
    let d = divisor_count_table(x);
    let (mut best, mut argmax) = (0.0f64, 1usize);
    for n in 1..=x {
        let r = f.lambda[n].abs() / d[n] as f64;
        if r > best {
            best = r;
            argmax = n;
        }
    }
    let rs = rankin_selberg_profile(&f.lambda, x);
    let rs_min = rs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let rs_max = rs.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(CoefficientBoundReport {
        x,
        max_deligne_ratio: best,
        argmax,
        deligne_ok: best <= 1.0 + 1e-10,
        rankin_selberg: rs,
        rs_min,
        rs_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn dimensions() {
        // classical count: ⌊k/12⌋ − [k ≡ 2 mod 12] for k ≥ 4, via generating monomials
        for k in (4..=40u32).step_by(2) {
            let monomials = (0..=k / 4)
                .flat_map(|a| (0..=k / 6).map(move |b| (a, b)))
                .filter(|&(a, b)| 4 * a + 6 * b == k)
                .count();
            // dim M_k = number of (a, b); S_k has one fewer
            assert_eq!(dim_cusp_forms(k), monomials - 1, "k={k}");
        }
    }

    #[test]
    fn delta_leading_coefficients() {
        let d = delta_series(6);
        assert_eq!(d.coeffs, ints(&[0, 1, -24, 252, -1472, 4830]));
        let fast = ramanujan_tau(6);
        assert_eq!(fast, vec![0, 1, -24, 252, -1472, 4830]);
    }

    #[test]
    fn fast_tau_matches_exact() {
        let exact = delta_series(800);
        let fast = ramanujan_tau(800);
        for n in 0..800 {
            assert_eq!(BigInt::from(fast[n]), exact.coeffs[n], "n={n}");
        }
    }

    #[test]
    fn delta_from_eisenstein() {
        let prec = 60;
        let e4 = eisenstein_e4(prec);
        let e6 = eisenstein_e6(prec);
        let e4c = series_pow(&e4.coeffs, 3, prec);
        let e6s = series_pow(&e6.coeffs, 2, prec);
        let d = delta_series(prec);
        for n in 0..prec {
            assert_eq!(&e4c[n] - &e6s[n], &d.coeffs[n] * 1728);
        }
    }

    #[test]
    fn basis_examples() {
        assert!(victor_miller_basis(10, 20).unwrap().is_empty());
        let b12 = victor_miller_basis(12, 10).unwrap();
        assert_eq!(b12.len(), 1);
        assert_eq!(&b12[0].coeffs[..5], &ints(&[0, 1, -24, 252, -1472])[..]);
        let b24 = victor_miller_basis(24, 20).unwrap();
        assert_eq!(b24.len(), 2);
        for (i, f) in b24.iter().enumerate() {
            assert!(f.coeffs[0].is_zero());
            for j in 1..=2 {
                assert_eq!(f.coeffs[j], BigInt::from((i + 1 == j) as i64));
            }
        }
        assert!(victor_miller_basis(11, 20).is_err());
        assert!(victor_miller_basis(2, 20).is_err());
    }

    #[test]
    fn echelon_for_all_weights() {
        for k in (4..=40u32).step_by(2) {
            let basis = victor_miller_basis(k, 12).unwrap();
            assert_eq!(basis.len(), dim_cusp_forms(k));
            for (i, f) in basis.iter().enumerate() {
                for j in 1..=basis.len() {
                    assert_eq!(f.coeffs[j], BigInt::from((i + 1 == j) as i64));
                }
            }
        }
    }

    #[test]
    fn hecke_multiplicativity() {
        for k in [24u32, 36, 40] {
            let basis = victor_miller_basis(k, 400).unwrap();
            for m in 2..=10usize {
                for n in 2..=10usize {
                    if gcd(m as i64, n as i64) != 1 || m * n > 30 {
                        continue;
                    }
                    let tm = hecke_matrix(&basis, m).unwrap();
                    let tn = hecke_matrix(&basis, n).unwrap();
                    let tmn = hecke_matrix(&basis, m * n).unwrap();
                    assert_eq!(mat_mul(&tn, &tm), tmn, "k={k} m={m} n={n}");
                    assert_eq!(mat_mul(&tm, &tn), tmn);
                }
            }
        }
    }

    #[test]
    fn eigenform_examples() {
        let delta = &hecke_eigenforms(12, 20).unwrap()[0];
        assert!((delta.lambda[2] - (-24.0 / 2f64.powf(5.5))).abs() < 1e-12);
        assert!((delta.lambda[2] + 0.530330086).abs() < 1e-9);
        let f16 = &hecke_eigenforms(16, 20).unwrap()[0];
        assert_eq!(f16.exact.as_ref().unwrap()[2], BigInt::from(216));
        assert!(hecke_eigenforms(10, 20).is_err());
    }

    fn check_hecke_relations(f: &Eigenform, upto: usize) {
        let l = &f.lambda;
        assert!((l[1] - 1.0).abs() < 1e-12);
        for m in 1..upto {
            for n in 1..upto {
                if m * n >= upto || gcd(m as i64, n as i64) != 1 {
                    continue;
                }
                let lhs = l[m * n];
                let rhs = l[m] * l[n];
                assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-3), "m={m} n={n}");
            }
        }
        for p in [2usize, 3, 5, 7] {
            let mut pj = vec![1usize];
            while pj.last().unwrap() * p < upto {
                pj.push(pj.last().unwrap() * p);
            }
            for j in 1..pj.len() - 1 {
                let lhs = l[p] * l[pj[j]];
                let rhs = l[pj[j + 1]] + l[pj[j - 1]];
                assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "p={p} j={j}");
            }
        }
    }

    #[test]
    fn dim_two_eigenforms() {
        for k in [24u32, 28, 30, 32] {
            let forms = hecke_eigenforms(k, 300).unwrap();
            assert_eq!(forms.len(), 2);
            for f in &forms {
                check_hecke_relations(f, 300);
            }
            // The two T₂ eigenvalues of weight 24 are 540 ± 12√144169.
            if k == 24 {
                let r = 12.0 * 144169f64.sqrt();
                assert!((forms[0].t2_eigenvalue - (540.0 - r)).abs() < 1e-6);
                assert!((forms[1].t2_eigenvalue - (540.0 + r)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn dim_three_eigenforms() {
        let forms = hecke_eigenforms(36, 200).unwrap();
        assert_eq!(forms.len(), 3);
        for f in &forms {
            check_hecke_relations(f, 200);
        }
    }

    #[test]
    fn lambda_independent_of_prec() {
        let a = hecke_eigenforms(24, 60).unwrap();
        let b = hecke_eigenforms(24, 200).unwrap();
        for (fa, fb) in a.iter().zip(&b) {
            for n in 1..60 {
                assert!((fa.lambda[n] - fb.lambda[n]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deligne_and_rankin_selberg() {
        let delta = Eigenform::delta(1001);
        let r = coefficient_bound_report(&delta, 1000).unwrap();
        assert!(r.deligne_ok);
        assert!(r.rs_within(0.1, 10.0));
        let r1 = coefficient_bound_report(&delta, 1).unwrap();
        assert_eq!(r1.max_deligne_ratio, 1.0);
        let f16 = &hecke_eigenforms(16, 501).unwrap()[0];
        let r = coefficient_bound_report(f16, 500).unwrap();
        assert!(r.deligne_ok && r.rs_within(0.1, 10.0));
        assert!(coefficient_bound_report(f16, 501).is_err());
    }
}
