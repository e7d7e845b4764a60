//! Elementary integer arithmetic shared by the character and exponential-sum code.

/// Greatest common divisor of the absolute values.
pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a as i64
}

/// Extended Euclid: returns `(g, x, y)` with `a*x + b*y = g = gcd(a, b)`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a as i128, b as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r as i64, -old_s as i64, -old_t as i64)
    } else {
        (old_r as i64, old_s as i64, old_t as i64)
    }
}

/// Least nonnegative residue of `a` modulo `m` (`m >= 1`).
#[inline]
pub fn modulo(a: i64, m: i64) -> i64 {
    a.rem_euclid(m)
}

/// Product reduced modulo `m` without overflow.
#[inline]
pub fn mul_mod(a: i64, b: i64, m: i64) -> i64 {
    ((a as i128 * b as i128).rem_euclid(m as i128)) as i64
}

/// Inverse of `a` modulo `m`, or `None` when `gcd(a, m) > 1`.
///
/// Modulo 1 every integer is invertible and the inverse is 0.
pub fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    assert!(m >= 1, "modulus must be positive");
    if m == 1 {
        return Some(0);
    }
    let (g, x, _) = ext_gcd(modulo(a, m), m);
    (g == 1).then(|| modulo(x, m))
}

pub fn pow_mod(base: i64, mut exp: u64, m: i64) -> i64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1i64;
    let mut b = modulo(base, m);
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    result
}

/// Prime factorization by trial division as `(p, e)` pairs in increasing `p`.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut n = n;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n).first().map(|&(p, e)| p == n && e == 1).unwrap_or(false)
}

/// Euler's totient.
pub fn totient(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Number of positive divisors d(n).
pub fn divisor_count(n: u64) -> u64 {
    factorize(n).into_iter().map(|(_, e)| e as u64 + 1).product()
}

/// d(n) for all `n <= limit` by a sieve; index 0 is unused and set to 0.
pub fn divisor_count_table(limit: usize) -> Vec<u32> {
    let mut d = vec![0u32; limit + 1];
    for i in 1..=limit {
        for j in (i..=limit).step_by(i) {
            d[j] += 1;
        }
    }
    d
}

/// Smallest primitive root modulo `m`, where `m` is 2, 4, p^k or 2p^k.
pub fn primitive_root(m: u64) -> Option<u64> {
    match m {
        0 => return None,
        1 => return Some(0),
        2 => return Some(1),
        _ => {}
    }
    if m == 4 {
        return Some(3);
    }
    let phi = totient(m);
    let prime_factors: Vec<u64> = factorize(phi).into_iter().map(|(p, _)| p).collect();
    (2..m).find(|&g| {
        gcd(g as i64, m as i64) == 1
            && prime_factors
                .iter()
                .all(|&p| pow_mod(g as i64, phi / p, m as i64) != 1)
    })
}

/// Primes up to `limit` (inclusive).
pub fn primes_up_to(limit: usize) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; limit + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= limit {
        if sieve[i] {
            for j in (i * i..=limit).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| p.then_some(i as u64))
        .collect()
}
