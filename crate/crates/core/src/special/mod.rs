//! Special functions: Bessel J of integer order, complex log-Gamma, the
//! Gamma-ratio phase, and the trigonometric kernel of the Bessel sum over k.

mod bessel;
mod gamma;

pub use bessel::{bessel_j, bessel_j_range, bessel_j_value, bessel_small_argument_bound};
pub use gamma::{
    gamma, gamma_ratio_phase, gamma_stirling, ln_gamma, stirling_modulus, GammaRatioReport,
};

use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Series,
    Recurrence,
    Asymptotic,
    Quadrature,
}

/// A value together with a claimed bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub abs_error: f64,
    pub method: Method,
}

impl ComplexEstimate {
    pub fn new(value: Complex64, abs_error: f64, method: Method) -> Self {
        debug_assert!(abs_error.is_finite() && abs_error >= 0.0);
        ComplexEstimate {
            value,
            abs_error,
            method,
        }
    }

    pub fn real(value: f64, abs_error: f64, method: Method) -> Self {
        Self::new(Complex64::new(value, 0.0), abs_error, method)
    }
}

/// C_a(v, x) = −2i sin(x sin 2πv) + 2 i^{1−a} sin(x cos 2πv).
pub fn bessel_kernel_ca(a: i64, v: f64, x: f64) -> Complex64 {
    let (s, c) = (std::f64::consts::TAU * v).sin_cos();
    let i_pow = match (1 - a).rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    Complex64::new(0.0, -2.0) * (x * s).sin() + 2.0 * i_pow * (x * c).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        let z = bessel_kernel_ca(1, 0.0, std::f64::consts::PI);
        assert!(z.norm() < 1e-15);
        let z = bessel_kernel_ca(1, 0.25, 2.0);
        assert!((z - Complex64::new(0.0, -2.0 * 2f64.sin())).norm() < 1e-15);
        let s = (0.5f64.sqrt()).sin();
        let z = bessel_kernel_ca(3, 0.125, 1.0);
        assert!((z - Complex64::new(-2.0, -2.0) * s).norm() < 1e-15);
        assert_eq!(bessel_kernel_ca(-1, 0.3, 2.0), bessel_kernel_ca(3, 0.3, 2.0));
    }
}
