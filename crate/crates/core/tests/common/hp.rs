//! Extended-precision reference values built on astro-float.

use astro_float::{BigFloat, Consts, RoundingMode};

pub const RM: RoundingMode = RoundingMode::ToEven;

pub struct Hp {
    pub p: usize,
    pub cc: Consts,
}

impl Hp {
    pub fn new(p: usize) -> Hp {
        Hp {
            p,
            cc: Consts::new().expect("constants cache"),
        }
    }

    pub fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    pub fn int(&self, x: i64) -> BigFloat {
        BigFloat::from_i64(x, self.p)
    }

    pub fn parse(&mut self, s: &str) -> BigFloat {
        BigFloat::parse(s, astro_float::Radix::Dec, self.p, RM, &mut self.cc)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.p, RM)
    }

    pub fn to_f64(&mut self, x: &BigFloat) -> f64 {
        if x.is_zero() {
            return 0.0;
        }
        let s = x.format(astro_float::Radix::Dec, RM, &mut self.cc).expect("format");
        s.parse::<f64>().expect("decimal")
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }
    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }
    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }
    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }
    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.p, RM, &mut self.cc)
    }
    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.p, RM, &mut self.cc)
    }
    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.p, RM)
    }
    pub fn sin(&mut self, a: &BigFloat) -> BigFloat {
        a.sin(self.p, RM, &mut self.cc)
    }
    pub fn cos(&mut self, a: &BigFloat) -> BigFloat {
        a.cos(self.p, RM, &mut self.cc)
    }

    /// atan2(y, x)
    pub fn atan2(&mut self, y: &BigFloat, x: &BigFloat) -> BigFloat {
        let pi = self.pi();
        if x.is_zero() {
            let half = self.div(&pi, &self.int(2));
            return if y.is_negative() { half.neg() } else { half };
        }
        let base = self.div(y, x).atan(self.p, RM, &mut self.cc);
        if x.is_positive() {
            base
        } else if y.is_negative() {
            self.sub(&base, &pi)
        } else {
            self.add(&base, &pi)
        }
    }
}

/// J_n(x) from its power series; `x` is taken exactly as the given f64.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    // cancellation in the alternating series costs about x / ln 2 bits
    let p = 192 + (x * 1.5) as usize;
    let mut hp = Hp::new(p);
    let half = hp.div(&hp.f(x), &hp.int(2));
    let y = hp.mul(&half, &half);
    let mut term = hp.int(1);
    for j in 1..=n {
        term = hp.mul(&term, &hp.div(&half, &hp.int(j as i64)));
    }
    let mut sum = term.clone();
    let mut k = 0i64;
    loop {
        k += 1;
        let d = hp.int(k * (n as i64 + k));
        term = hp.div(&hp.mul(&term, &y), &d).neg();
        sum = hp.add(&sum, &term);
        if (k as f64) > x + 20.0 && term.is_zero() {
            break;
        }
        if (k as f64) > x + 20.0 {
            let e_t = term.exponent().unwrap_or(i32::MIN as _) as i64;
            let e_s = sum.exponent().unwrap_or(0) as i64;
            if e_t < e_s - p as i64 {
                break;
            }
        }
    }
    hp.to_f64(&sum)
}

#[derive(Clone)]
pub struct C {
    pub re: BigFloat,
    pub im: BigFloat,
}

const BERNOULLI: [&str; 21] = [
    "1/6",
    "-1/30",
    "1/42",
    "-1/30",
    "5/66",
    "-691/2730",
    "7/6",
    "-3617/510",
    "43867/798",
    "-174611/330",
    "854513/138",
    "-236364091/2730",
    "8553103/6",
    "-23749461029/870",
    "8615841276005/14322",
    "-7709321041217/510",
    "2577687858367/6",
    "-26315271553053477373/1919190",
    "2929993913841559/6",
    "-261082718496449122051/13530",
    "1520097643918070802691/1806",
];

fn c_add(hp: &Hp, a: &C, b: &C) -> C {
    C {
        re: hp.add(&a.re, &b.re),
        im: hp.add(&a.im, &b.im),
    }
}

fn c_mul(hp: &Hp, a: &C, b: &C) -> C {
    C {
        re: hp.sub(&hp.mul(&a.re, &b.re), &hp.mul(&a.im, &b.im)),
        im: hp.add(&hp.mul(&a.re, &b.im), &hp.mul(&a.im, &b.re)),
    }
}

fn c_inv(hp: &Hp, a: &C) -> C {
    let d = hp.add(&hp.mul(&a.re, &a.re), &hp.mul(&a.im, &a.im));
    C {
        re: hp.div(&a.re, &d),
        im: hp.div(&a.im, &d).neg(),
    }
}

fn c_ln(hp: &mut Hp, a: &C) -> C {
    let m2 = hp.add(&hp.mul(&a.re, &a.re), &hp.mul(&a.im, &a.im));
    let half = hp.div(&hp.int(1), &hp.int(2));
    let l = hp.ln(&m2);
    let re = hp.mul(&l, &half);
    let im = hp.atan2(&a.im, &a.re);
    C { re, im }
}

/// ln Γ(s) on the branch continuous in Re s > 0 (principal logs of s + j).
pub fn ln_gamma(re: f64, im: f64) -> (f64, f64) {
    let mut hp = Hp::new(320);
    let mut z = C {
        re: hp.f(re),
        im: hp.f(im),
    };
    let mut shift = C {
        re: hp.int(0),
        im: hp.int(0),
    };
    let one = hp.int(1);
    let mut zr = re;
    while zr < 0.5 || (zr * zr + im * im).sqrt() < 80.0 {
        let l = c_ln(&mut hp, &z);
        shift = c_add(&hp, &shift, &l);
        z.re = hp.add(&z.re, &one);
        zr += 1.0;
    }
    // (z − 1/2) ln z − z + ln(2π)/2 + Σ B_{2j} / (2j(2j−1) z^{2j−1})
    let lnz = c_ln(&mut hp, &z);
    let half = hp.div(&one, &hp.int(2));
    let zm = C {
        re: hp.sub(&z.re, &half),
        im: z.im.clone(),
    };
    let mut acc = c_mul(&hp, &zm, &lnz);
    acc.re = hp.sub(&acc.re, &z.re);
    acc.im = hp.sub(&acc.im, &z.im);
    let pi = hp.pi();
    let two_pi = hp.mul(&pi, &hp.int(2));
    let l2p = hp.ln(&two_pi);
    acc.re = hp.add(&acc.re, &hp.mul(&l2p, &half));
    let zinv = c_inv(&hp, &z);
    let zinv2 = c_mul(&hp, &zinv, &zinv);
    let mut zp = zinv.clone();
    for (j, b) in BERNOULLI.iter().enumerate() {
        let (num, den) = b.split_once('/').unwrap();
        let bn = hp.parse(num);
        let bd = hp.parse(den);
        let j2 = 2 * (j as i64 + 1);
        let coef = hp.div(&bn, &hp.mul(&bd, &hp.int(j2 * (j2 - 1))));
        acc.re = hp.add(&acc.re, &hp.mul(&coef, &zp.re));
        acc.im = hp.add(&acc.im, &hp.mul(&coef, &zp.im));
        zp = c_mul(&hp, &zp, &zinv2);
    }
    let r = hp.sub(&acc.re, &shift.re);
    let i = hp.sub(&acc.im, &shift.im);
    (hp.to_f64(&r), hp.to_f64(&i))
}
