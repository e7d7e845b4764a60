//! Dirichlet characters, Gauss sums and the odd-character average.
//!
//! Characters are built from discrete logarithms on generators of each
//! prime-power factor of `(Z/qZ)*` and glued together by CRT. Every nonzero
//! value is stored as an exact exponent `j` with `χ(a) = e(j / order)`, so
//! multiplicativity and orthogonality checks reduce to integer arithmetic.

use crate::arith::{factorize, gcd, mod_inverse, modulo, primitive_root, totient};
use crate::error::{Error, Result};
use crate::unity::{csum, e_frac};
use num_complex::Complex64;
use serde::Serialize;

pub const MAX_MODULUS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirichletCharacter {
    modulus: u64,
    order: u64,
    /// `exps[a] = Some(j)` means χ(a) = e(j/order); `None` when gcd(a, q) > 1.
    exps: Vec<Option<u64>>,
    parity: Parity,
    primitive: bool,
}

impl DirichletCharacter {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_even(&self) -> bool {
        self.parity == Parity::Even
    }

    pub fn is_odd(&self) -> bool {
        self.parity == Parity::Odd
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive
    }

    pub fn is_principal(&self) -> bool {
        self.order == 1
    }

    /// Exact exponent: χ(a) = e(j/order), or `None` when χ(a) = 0.
    pub fn exponent(&self, a: i64) -> Option<u64> {
        self.exps[modulo(a, self.modulus as i64) as usize]
    }

    pub fn value(&self, a: i64) -> Complex64 {
        match self.exponent(a) {
            Some(j) => e_frac(j as i64, self.order as i64),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// The full value table χ(0), ..., χ(q-1).
    pub fn values(&self) -> Vec<Complex64> {
        (0..self.modulus as i64).map(|a| self.value(a)).collect()
    }

    pub fn conj(&self) -> DirichletCharacter {
        let exps = self
            .exps
            .iter()
            .map(|e| e.map(|j| (self.order - j) % self.order))
            .collect();
        DirichletCharacter {
            exps,
            ..self.clone()
        }
    }

    /// The principal character modulo `q`.
    pub fn principal(q: u64) -> DirichletCharacter {
        assert!(q >= 1);
        let exps = (0..q)
            .map(|a| (gcd(a as i64, q as i64) == 1).then_some(0))
            .collect();
        DirichletCharacter {
            modulus: q,
            order: 1,
            exps,
            parity: Parity::Even,
            primitive: q == 1,
        }
    }

    fn from_exponents(modulus: u64, common: u64, raw: Vec<Option<u64>>) -> DirichletCharacter {
        let mut g = common;
        for j in raw.iter().flatten() {
            g = gcd(g as i64, *j as i64) as u64;
        }
        let order = common / g;
        let exps: Vec<Option<u64>> = raw.into_iter().map(|e| e.map(|j| (j / g) % order)).collect();
        let minus_one = exps[(modulus as usize + modulus as usize - 1) % modulus as usize];
        let parity = match minus_one {
            Some(j) if 2 * j == order => Parity::Odd,
            _ => Parity::Even,
        };
        let mut chi = DirichletCharacter {
            modulus,
            order,
            exps,
            parity,
            primitive: false,
        };
        chi.primitive = chi.compute_primitive();
        chi
    }

    /// χ is primitive iff it is not trivial on {a ≡ 1 mod q/p} for every prime p | q.
    fn compute_primitive(&self) -> bool {
        let q = self.modulus;
        if q == 1 {
            return true;
        }
        factorize(q).into_iter().all(|(p, _)| {
            let d = q / p;
            (1..q as i64)
                .step_by(d as usize)
                .any(|a| matches!(self.exponent(a), Some(j) if j != 0))
        })
    }
}

/// One cyclic factor of (Z/p^e)*: a generator and its order.
struct CyclicGen {
    generator: u64,
    order: u64,
}

struct PrimePowerGroup {
    modulus: u64,
    gens: Vec<CyclicGen>,
    /// discrete logs of each residue with respect to `gens`
    logs: Vec<Option<Vec<u64>>>,
}

impl PrimePowerGroup {
    fn new(p: u64, e: u32) -> PrimePowerGroup {
        let pe = p.pow(e);
        let gens = if p == 2 {
            match e {
                1 => vec![],
                2 => vec![CyclicGen {
                    generator: 3,
                    order: 2,
                }],
                _ => vec![
                    CyclicGen {
                        generator: pe - 1,
                        order: 2,
                    },
                    CyclicGen {
                        generator: 5,
                        order: pe / 4,
                    },
                ],
            }
        } else {
            vec![CyclicGen {
                generator: primitive_root(pe).expect("odd prime powers are cyclic"),
                order: totient(pe),
            }]
        };
        let mut logs: Vec<Option<Vec<u64>>> = vec![None; pe as usize];
        // Enumerate every exponent vector; the group is the direct product.
        let mut stack: Vec<(u64, Vec<u64>)> = vec![(1 % pe, Vec::new())];
        for g in &gens {
            let mut next = Vec::with_capacity(stack.len() * g.order as usize);
            for (val, ks) in &stack {
                let mut v = *val;
                for k in 0..g.order {
                    let mut ks2 = ks.clone();
                    ks2.push(k);
                    next.push((v, ks2));
                    v = v * g.generator % pe;
                }
            }
            stack = next;
        }
        for (val, ks) in stack {
            logs[val as usize] = Some(ks);
        }
        if pe == 2 {
            logs[1] = Some(vec![]);
        }
        PrimePowerGroup {
            modulus: pe,
            gens,
            logs,
        }
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a as i64, b as i64) as u64 * b
}

/// All φ(q) Dirichlet characters modulo `q`, principal character first.
pub fn enumerate_characters(q: u64) -> Result<Vec<DirichletCharacter>> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus must be >= 1".into()));
    }
    if q > MAX_MODULUS {
        return Err(Error::OutOfRange(format!("modulus {q} > {MAX_MODULUS}")));
    }
    if q == 1 {
        return Ok(vec![DirichletCharacter::principal(1)]);
    }
    let groups: Vec<PrimePowerGroup> = factorize(q)
        .into_iter()
        .map(|(p, e)| PrimePowerGroup::new(p, e))
        .collect();
    let orders: Vec<u64> = groups
        .iter()
        .flat_map(|g| g.gens.iter().map(|c| c.order))
        .collect();
    let common = orders.iter().copied().fold(1, lcm);

    // Per-residue discrete log vectors (global generator order).
    let logs: Vec<Option<Vec<u64>>> = (0..q)
        .map(|a| {
            let mut out = Vec::with_capacity(orders.len());
            for g in &groups {
                out.extend(g.logs[(a % g.modulus) as usize].as_ref()?.iter().copied());
            }
            Some(out)
        })
        .collect();

    let total: u64 = orders.iter().product();
    let mut chars = Vec::with_capacity(total as usize);
    let mut idx = vec![0u64; orders.len()];
    for _ in 0..total {
        let raw = logs
            .iter()
            .map(|l| {
                l.as_ref().map(|ks| {
                    let mut j = 0u64;
                    for ((k, &ji), &n) in ks.iter().zip(&idx).zip(&orders) {
                        j = (j + k * ji % n * (common / n)) % common;
                    }
                    j
                })
            })
            .collect();
        chars.push(DirichletCharacter::from_exponents(q, common, raw));
        for (i, n) in idx.iter_mut().zip(&orders) {
            *i += 1;
            if *i < *n {
                break;
            }
            *i = 0;
        }
    }
    Ok(chars)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussSumResult {
    pub g: Complex64,
    pub epsilon: Complex64,
    /// |g| - √q, reported for primitive characters only.
    pub modulus_deviation: Option<f64>,
}

/// g_χ = Σ_{α mod q} χ(α) e(α/q) and ε_χ = g_χ/√q.
pub fn gauss_sum(chi: &DirichletCharacter) -> GaussSumResult {
    let q = chi.modulus() as i64;
    let g = csum((0..q).map(|a| chi.value(a) * e_frac(a, q)));
    let sq = (q as f64).sqrt();
    GaussSumResult {
        g,
        epsilon: g / sq,
        modulus_deviation: chi.is_primitive().then(|| g.norm() - sq),
    }
}

fn require_coprime(name: &'static str, value: i64, modulus: i64) -> Result<()> {
    if gcd(value, modulus) != 1 {
        return Err(Error::NotCoprime {
            name,
            value,
            modulus,
        });
    }
    Ok(())
}

/// Brute-force ½ Σ_ψ (1 − ψ(−1)) ε_ψ² conj(ε_ψ) ψ(m′ c̄) conj(ψ(m′ ℓ)) over all ψ mod q.
pub fn odd_character_average(q: u64, c: i64, ell: i64, m_prime: i64) -> Result<Complex64> {
    if q < 3 {
        return Err(Error::Precondition(format!("q = {q} < 3")));
    }
    let qi = q as i64;
    require_coprime("c", c, qi)?;
    require_coprime("l", ell, qi)?;
    require_coprime("m'", m_prime, qi)?;
    let c_bar = mod_inverse(c, qi).expect("coprime");
    let chars = enumerate_characters(q)?;
    Ok(average_over(&chars, qi, c_bar, ell, m_prime))
}

fn average_over(chars: &[DirichletCharacter], q: i64, c_bar: i64, ell: i64, m_prime: i64) -> Complex64 {
    csum(chars.iter().map(|psi| {
        let weight = 0.5 * (Complex64::new(1.0, 0.0) - psi.value(-1));
        if weight.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let eps = gauss_sum(psi).epsilon;
        weight
            * eps
            * eps
            * eps.conj()
            * psi.value(crate::arith::mul_mod(m_prime, c_bar, q))
            * psi.value(crate::arith::mul_mod(m_prime, ell, q)).conj()
    }))
}

/// Which residue the closed form of the odd-character average uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AverageResidue {
    /// x = c·ℓ mod q
    Product,
    /// x = inverse of c·ℓ mod q
    InverseOfProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AverageConvention {
    pub sign: i8,
    pub residue: AverageResidue,
}

/// Closed-form candidate (φ(q)/(2√q))·(e(x/q) − e(−x/q))·u.
pub fn average_closed_form(q: u64, c: i64, ell: i64, conv: AverageConvention) -> Option<Complex64> {
    let qi = q as i64;
    let prod = crate::arith::mul_mod(c, ell, qi);
    let x = match conv.residue {
        AverageResidue::Product => prod,
        AverageResidue::InverseOfProduct => mod_inverse(prod, qi)?,
    };
    let scale = totient(q) as f64 / (2.0 * (q as f64).sqrt());
    Some((e_frac(x, qi) - e_frac(-x, qi)) * scale * conv.sign as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct AverageConventionReport {
    pub q: u64,
    pub cases: usize,
    /// Conventions that match every admissible (c, ℓ, m′) to `tol`.
    pub consistent: Vec<AverageConvention>,
    /// Residual of the best-fitting convention.
    pub max_residual: f64,
    pub m_prime_invariant: bool,
}

/// Evaluate the odd-character average on every admissible (c, ℓ, m′) mod q and
/// find which of the four closed-form conventions fits all of them.
pub fn discover_average_convention(q: u64, tol: f64) -> Result<AverageConventionReport> {
    if q < 3 {
        return Err(Error::Precondition(format!("q = {q} < 3")));
    }
    let qi = q as i64;
    let chars = enumerate_characters(q)?;
    let units: Vec<i64> = (1..qi).filter(|&a| gcd(a, qi) == 1).collect();
    let candidates = [
        AverageConvention { sign: 1, residue: AverageResidue::Product },
        AverageConvention { sign: -1, residue: AverageResidue::Product },
        AverageConvention { sign: 1, residue: AverageResidue::InverseOfProduct },
        AverageConvention { sign: -1, residue: AverageResidue::InverseOfProduct },
    ];
    let mut worst = [0.0f64; 4];
    let mut cases = 0;
    let mut m_invariant = true;
    for &c in &units {
        let c_bar = mod_inverse(c, qi).expect("unit");
        for &ell in &units {
            let reference = average_over(&chars, qi, c_bar, ell, 1);
            for &m in &units {
                let value = if m == 1 {
                    reference
                } else {
                    average_over(&chars, qi, c_bar, ell, m)
                };
                if (value - reference).norm() > tol {
                    m_invariant = false;
                }
                cases += 1;
                for (w, conv) in worst.iter_mut().zip(&candidates) {
                    let cf = average_closed_form(q, c, ell, *conv).expect("unit");
                    *w = w.max((value - cf).norm());
                }
            }
        }
    }
    let consistent: Vec<AverageConvention> = candidates
        .iter()
        .zip(&worst)
        .filter(|(_, &w)| w <= tol)
        .map(|(c, _)| *c)
        .collect();
    Ok(AverageConventionReport {
        q,
        cases,
        consistent,
        max_residual: worst.iter().copied().fold(f64::INFINITY, f64::min),
        m_prime_invariant: m_invariant,
    })
}
