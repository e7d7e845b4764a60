//! Kloosterman sums and complete character sums.
//!
//! Everything here is evaluated by brute force over reduced residues; these
//! routines are the ground truth that the faster numerical code is checked
//! against.

use crate::arith::{gcd, mod_inverse, mul_mod, pow_mod};
use crate::characters::{gauss_sum, DirichletCharacter};
use crate::error::{Error, Result};
use crate::unity::{csum, e_frac, RootTable};
use num_complex::Complex64;
use serde::Serialize;

pub const MAX_BRUTE_MODULUS: u64 = 100_000;

fn check_modulus(c: u64) -> Result<()> {
    if c == 0 {
        return Err(Error::InvalidArgument("modulus c must be >= 1".into()));
    }
    if c > MAX_BRUTE_MODULUS {
        return Err(Error::OutOfRange(format!("c = {c} > {MAX_BRUTE_MODULUS}")));
    }
    Ok(())
}

/// S(m, n; c) = Σ_{x mod c, (x,c)=1} e((m x + n x̄)/c).
pub fn kloosterman(m: i64, n: i64, c: u64) -> Result<Complex64> {
    check_modulus(c)?;
    let table = RootTable::new(c as i64);
    Ok(kloosterman_with(&table, m, n))
}

/// Kloosterman sum reusing a root table for modulus `table.modulus()`.
pub fn kloosterman_with(table: &RootTable, m: i64, n: i64) -> Complex64 {
    let c = table.modulus();
    if c == 1 {
        return Complex64::new(1.0, 0.0);
    }
    let (m, n) = (m.rem_euclid(c), n.rem_euclid(c));
    csum((1..c).filter_map(|x| {
        let xb = mod_inverse(x, c)?;
        Some(table.at((mul_mod(m, x, c) + mul_mod(n, xb, c)) % c))
    }))
}

/// Real Kloosterman sum as f64 (the imaginary part cancels in exact arithmetic).
pub fn kloosterman_real(table: &RootTable, m: i64, n: i64) -> f64 {
    kloosterman_with(table, m, n).re
}

/// S_χ(m, n; c) = Σ_{x mod c}* χ(x) e((m x + n x̄)/c); the modulus of χ must divide c.
pub fn twisted_kloosterman(chi: &DirichletCharacter, m: i64, n: i64, c: u64) -> Result<Complex64> {
    check_modulus(c)?;
    if c % chi.modulus() != 0 {
        return Err(Error::ModulusMismatch {
            character: chi.modulus(),
            modulus: c,
        });
    }
    let ci = c as i64;
    if c == 1 {
        return Ok(chi.value(0));
    }
    let table = RootTable::new(ci);
    let (m, n) = (m.rem_euclid(ci), n.rem_euclid(ci));
    Ok(csum((1..ci).filter_map(|x| {
        let xb = mod_inverse(x, ci)?;
        Some(chi.value(x) * table.at((mul_mod(m, x, ci) + mul_mod(n, xb, ci)) % ci))
    })))
}

#[derive(Debug, Clone, Serialize)]
pub struct Equality {
    pub label: &'static str,
    pub difference: f64,
    pub holds: bool,
    /// right / left when the two sides differ and the left side is nonzero
    pub ratio: Option<Complex64>,
}

impl Equality {
    fn new(label: &'static str, left: Complex64, right: Complex64, tol: f64) -> Equality {
        let difference = (left - right).norm();
        let holds = difference < tol;
        let ratio = (!holds && left.norm() > tol).then(|| right / left);
        Equality {
            label,
            difference,
            holds,
            ratio,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub q: u64,
    pub n: i64,
    pub m_prime: i64,
    pub nu: u32,
    pub c: u64,
    /// S_ψ(n q^{2+ν}, m′; cq)
    pub lhs: Complex64,
    /// S_ψ(0, m′ c̄; q) · S(n q^{1+ν}, m′ q̄; c)
    pub middle: Complex64,
    /// √q · conj(ε_ψ) · ψ(m′ c̄) · S(n, m′ q^ν; c)
    pub rhs: Complex64,
    /// ψ(−1) · rhs, from S_ψ(0, a; q) = ψ(a) g(ψ̄) and g(ψ̄) = ψ(−1) conj(g(ψ))
    pub corrected_rhs: Complex64,
    pub lhs_middle: Equality,
    pub middle_rhs: Equality,
    pub lhs_rhs: Equality,
    pub lhs_corrected: Equality,
}

impl FactorizationReport {
    pub fn all_hold(&self) -> bool {
        self.lhs_middle.holds && self.middle_rhs.holds && self.lhs_rhs.holds
    }

    pub fn corrected_holds(&self) -> bool {
        self.lhs_middle.holds && self.lhs_corrected.holds
    }
}

/// Evaluate the three expressions of the twisted Kloosterman factorization
/// independently and compare them pairwise.
pub fn verify_twisted_factorization(
    chi: &DirichletCharacter,
    n: i64,
    m_prime: i64,
    nu: u32,
    c: u64,
) -> Result<FactorizationReport> {
    let q = chi.modulus();
    if !crate::arith::is_prime(q) {
        return Err(Error::Precondition(format!("character modulus {q} is not prime")));
    }
    if !chi.is_primitive() || !chi.is_odd() {
        return Err(Error::Precondition("character must be primitive and odd".into()));
    }
    if c == 0 {
        return Err(Error::InvalidArgument("c must be >= 1".into()));
    }
    let (qi, ci) = (q as i64, c as i64);
    if gcd(ci, qi) != 1 {
        return Err(Error::NotCoprime {
            name: "c",
            value: ci,
            modulus: qi,
        });
    }
    if gcd(m_prime, qi) != 1 {
        return Err(Error::NotCoprime {
            name: "m'",
            value: m_prime,
            modulus: qi,
        });
    }
    let cq = c * q;
    let cqi = cq as i64;
    let q_pow = |e: u32, modulus: i64| pow_mod(qi, e as u64, modulus);

    let lhs = twisted_kloosterman(chi, mul_mod(n, q_pow(2 + nu, cqi), cqi), m_prime, cq)?;

    let c_bar_q = mod_inverse(ci, qi).expect("coprime");
    let q_bar_c = mod_inverse(qi, ci).expect("coprime");
    let first = twisted_kloosterman(chi, 0, mul_mod(m_prime, c_bar_q, qi), q)?;
    let second = kloosterman(
        mul_mod(n, q_pow(1 + nu, ci), ci),
        mul_mod(m_prime, q_bar_c, ci),
        c,
    )?;
    let middle = first * second;

    let eps = gauss_sum(chi).epsilon;
    let rhs = (q as f64).sqrt()
        * eps.conj()
        * chi.value(mul_mod(m_prime, c_bar_q, qi))
        * kloosterman(n, mul_mod(m_prime, q_pow(nu, ci), ci), c)?;

    let corrected_rhs = chi.value(-1) * rhs;
    let tol = 1e-9;
    Ok(FactorizationReport {
        q,
        n,
        m_prime,
        nu,
        c,
        lhs,
        middle,
        rhs,
        corrected_rhs,
        lhs_middle: Equality::new("lhs = middle", lhs, middle, tol),
        middle_rhs: Equality::new("middle = rhs", middle, rhs, tol),
        lhs_rhs: Equality::new("lhs = rhs", lhs, rhs, tol),
        lhs_corrected: Equality::new("lhs = psi(-1) rhs", lhs, corrected_rhs, tol),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CharsumGridResult {
    pub value: Complex64,
    /// c · e(−m n̄ / c), or `None` when gcd(n, c) > 1
    pub closed_form: Option<Complex64>,
    pub deviation: Option<f64>,
}

/// C(m, c) = Σ_{α mod c} Σ_{β mod c, (β,c)=1} e((αβ + m β̄ + n α)/c).
pub fn charsum_grid(m: i64, n: i64, c: u64) -> Result<CharsumGridResult> {
    check_modulus(c)?;
    let ci = c as i64;
    let table = RootTable::new(ci);
    let units: Vec<(i64, i64)> = (0..ci)
        .filter_map(|b| mod_inverse(b, ci).map(|bb| (b, bb)))
        .collect();
    let value = csum((0..ci).flat_map(|a| {
        let table = &table;
        units.iter().map(move |&(b, bb)| {
            table.at((mul_mod(a, b, ci) + mul_mod(m, bb, ci) + mul_mod(n, a, ci)) % ci)
        })
    }));
    let closed_form = mod_inverse(n, ci).map(|nb| ci as f64 * e_frac(-mul_mod(m, nb, ci), ci));
    Ok(CharsumGridResult {
        value,
        closed_form,
        deviation: closed_form.map(|cf| (cf - value).norm()),
    })
}

/// Σ_{β mod c₁c₂} e(−β n̄₁/c₁ + β n̄₂/c₂ + m β/(c₁c₂)).
pub fn charsum_congruence(m: i64, n1: i64, n2: i64, c1: u64, c2: u64) -> Result<Complex64> {
    check_modulus(c1)?;
    check_modulus(c2)?;
    let (c1i, c2i) = (c1 as i64, c2 as i64);
    let n1b = mod_inverse(n1, c1i).ok_or(Error::NotCoprime {
        name: "n1",
        value: n1,
        modulus: c1i,
    })?;
    let n2b = mod_inverse(n2, c2i).ok_or(Error::NotCoprime {
        name: "n2",
        value: n2,
        modulus: c2i,
    })?;
    let big = c1i * c2i;
    check_modulus(big as u64)?;
    let table = RootTable::new(big);
    // Put everything over c₁c₂: −β n̄₁ c₂ + β n̄₂ c₁ + m β.
    let step = (-mul_mod(n1b, c2i, big) + mul_mod(n2b, c1i, big) + m.rem_euclid(big)).rem_euclid(big);
    Ok(csum((0..big).map(|b| table.at(mul_mod(b, step, big)))))
}

/// Whether n̄₁ c₂ − n̄₂ c₁ ≡ m (mod c₁c₂).
pub fn congruence_indicator(m: i64, n1: i64, n2: i64, c1: u64, c2: u64) -> Option<bool> {
    let (c1i, c2i) = (c1 as i64, c2 as i64);
    let big = c1i * c2i;
    let n1b = mod_inverse(n1, c1i)?;
    let n2b = mod_inverse(n2, c2i)?;
    Some((mul_mod(n1b, c2i, big) - mul_mod(n2b, c1i, big) - m).rem_euclid(big) == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{is_prime, primes_up_to};
    use crate::characters::enumerate_characters;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn quadratic(q: u64) -> DirichletCharacter {
        enumerate_characters(q)
            .unwrap()
            .into_iter()
            .find(|c| c.order() == 2)
            .unwrap()
    }

    #[test]
    fn kloosterman_examples() {
        assert!(close(kloosterman(1, 1, 2).unwrap(), Complex64::new(1.0, 0.0), 1e-12));
        assert!(close(kloosterman(1, 1, 3).unwrap(), Complex64::new(-1.0, 0.0), 1e-12));
        assert!(close(kloosterman(0, 1, 4).unwrap(), Complex64::new(0.0, 0.0), 1e-12));
        assert!(close(kloosterman(5, -7, 1).unwrap(), Complex64::new(1.0, 0.0), 0.0 + 1e-15));
    }

    #[test]
    fn twisted_examples() {
        let principal = DirichletCharacter::principal(1);
        assert!(close(
            twisted_kloosterman(&principal, 1, 1, 3).unwrap(),
            Complex64::new(-1.0, 0.0),
            1e-12
        ));
        // x = 1 contributes e(2/3), x = 2 contributes χ(2) e(4/3) = −e(1/3)
        let chi3 = quadratic(3);
        let expected = e_frac(2, 3) - e_frac(4, 3);
        assert!(close(expected, Complex64::new(0.0, -(3f64.sqrt())), 1e-12));
        assert!(close(twisted_kloosterman(&chi3, 1, 1, 3).unwrap(), expected, 1e-12));
        // S_χ(0, 2; 5) = Σ χ(x) e(2x̄/5) = χ̄(2) Σ χ̄(y) e(y/5)
        let chi5 = quadratic(5);
        let expected = chi5.value(2).conj() * gauss_sum(&chi5.conj()).g;
        assert!(close(twisted_kloosterman(&chi5, 0, 2, 5).unwrap(), expected, 1e-12));
        assert!(matches!(
            twisted_kloosterman(&chi5, 1, 1, 6),
            Err(Error::ModulusMismatch { .. })
        ));
    }

    #[test]
    fn weil_bound_small_primes() {
        for p in primes_up_to(50) {
            let t = RootTable::new(p as i64);
            for m in 1..p as i64 {
                for n in 1..p as i64 {
                    let s = kloosterman_with(&t, m, n);
                    assert!(s.norm() <= 2.0 * (p as f64).sqrt() + 1e-9);
                    assert!(s.im.abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn symmetry_and_crt() {
        for c1 in 1..=30i64 {
            for c2 in 1..=30i64 {
                if gcd(c1, c2) != 1 || c1 * c2 > 300 {
                    continue;
                }
                let inv2 = mod_inverse(c2, c1).unwrap();
                let inv1 = mod_inverse(c1, c2).unwrap();
                for (m, n) in [(1, 1), (2, 5), (0, 3), (7, 0), (-4, 9)] {
                    let whole = kloosterman(m, n, (c1 * c2) as u64).unwrap();
                    let split = kloosterman(m * inv2, n * inv2, c1 as u64).unwrap()
                        * kloosterman(m * inv1, n * inv1, c2 as u64).unwrap();
                    assert!(close(whole, split, 1e-9), "c1={c1} c2={c2} m={m} n={n}");
                    let swapped = kloosterman(n, m, (c1 * c2) as u64).unwrap();
                    assert!(close(whole, swapped, 1e-12));
                }
            }
        }
    }

    #[test]
    fn factorization_first_equality_holds() {
        for q in [3u64, 5, 7, 11] {
            for chi in enumerate_characters(q).unwrap() {
                if !(chi.is_odd() && chi.is_primitive()) {
                    continue;
                }
                for c in 1..=8u64 {
                    if c % q == 0 {
                        continue;
                    }
                    for nu in 0..2 {
                        let r = verify_twisted_factorization(&chi, 2, 1, nu, c).unwrap();
                        assert!(r.lhs_middle.holds, "q={q} c={c} nu={nu}: {}", r.lhs_middle.difference);
                        assert!(r.corrected_holds(), "q={q} c={c} nu={nu}");
                        if r.rhs.norm() > 1e-6 {
                            assert!(!r.middle_rhs.holds);
                            assert!((r.middle_rhs.ratio.unwrap() + 1.0).norm() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn factorization_preconditions() {
        let chi = quadratic(5);
        assert!(verify_twisted_factorization(&chi, 1, 1, 0, 5).is_err());
        assert!(verify_twisted_factorization(&chi, 1, 5, 0, 2).is_err());
        let even = enumerate_characters(5).unwrap().into_iter().find(|c| c.is_even() && !c.is_principal()).unwrap();
        assert!(verify_twisted_factorization(&even, 1, 1, 0, 2).is_err());
        assert!(is_prime(5));
    }

    #[test]
    fn charsum_grid_examples() {
        let r = charsum_grid(1, 2, 5).unwrap();
        assert!(close(r.value, 5.0 * e_frac(-3, 5), 1e-9));
        for c0 in 1..=20 {
            let r = charsum_grid(0, 1, c0).unwrap();
            assert!(close(r.value, Complex64::new(c0 as f64, 0.0), 1e-9));
        }
        let r = charsum_grid(7, 3, 8).unwrap();
        assert!(close(r.value, 8.0 * e_frac(-21, 8), 1e-9));
        let r = charsum_grid(1, 2, 4).unwrap();
        assert!(r.closed_form.is_none());
    }

    #[test]
    fn charsum_grid_closed_form_sweep() {
        for c in 1..=40u64 {
            for n in 0..c as i64 {
                if gcd(n, c as i64) != 1 {
                    continue;
                }
                for m in 0..c as i64 {
                    let r = charsum_grid(m, n, c).unwrap();
                    assert!(r.deviation.unwrap() < 1e-9, "m={m} n={n} c={c}");
                }
            }
        }
    }

    #[test]
    fn congruence_examples() {
        assert!(close(charsum_congruence(2, 1, 1, 3, 5).unwrap(), Complex64::new(15.0, 0.0), 1e-9));
        assert!(close(charsum_congruence(1, 1, 1, 3, 5).unwrap(), Complex64::new(0.0, 0.0), 1e-9));
        assert!(close(charsum_congruence(-4, 2, 3, 5, 7).unwrap(), Complex64::new(35.0, 0.0), 1e-9));
        assert!(charsum_congruence(1, 5, 1, 5, 3).is_err());
    }

    #[test]
    fn congruence_sweep() {
        for c1 in 1..=12u64 {
            for c2 in 1..=12u64 {
                if gcd(c1 as i64, c2 as i64) != 1 {
                    continue;
                }
                for n1 in 1..=c1 as i64 {
                    for n2 in 1..=c2 as i64 {
                        let Some(_) = congruence_indicator(0, n1, n2, c1, c2) else { continue };
                        for m in 0..(c1 * c2) as i64 {
                            let v = charsum_congruence(m, n1, n2, c1, c2).unwrap();
                            let ind = congruence_indicator(m, n1, n2, c1, c2).unwrap();
                            let expected = if ind { (c1 * c2) as f64 } else { 0.0 };
                            assert!(close(v, Complex64::new(expected, 0.0), 1e-9));
                        }
                    }
                }
            }
        }
    }
}
