//! Gamma function values at positive integers and half-integers, kept exact
//! as a rational multiple of a power of `sqrt(pi)`.

use std::fmt;
use std::ops::{Div, Mul};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// The exact number `coeff * pi^(sqrt_pi_power / 2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqrtPiMultiple {
    pub coeff: Rational,
    pub sqrt_pi_power: i64,
}

impl SqrtPiMultiple {
    pub fn rational(coeff: Rational) -> Self {
        SqrtPiMultiple {
            coeff,
            sqrt_pi_power: 0,
        }
    }

    pub fn one() -> Self {
        Self::rational(Rational::from(1))
    }

    /// `Some` when no power of pi survives.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.sqrt_pi_power == 0 || self.coeff == 0 {
            Some(&self.coeff)
        } else {
            None
        }
    }

    pub fn to_float(&self, prec: u32) -> Float {
        let sqrt_pi = Float::with_val(prec + 32, rug::float::Constant::Pi).sqrt();
        let pow = sqrt_pi.pow(self.sqrt_pi_power as i32);
        Float::with_val(prec, pow * &self.coeff)
    }

    pub fn pow(&self, exp: u32) -> Self {
        SqrtPiMultiple {
            coeff: Rational::from((&self.coeff).pow(exp as i32)),
            sqrt_pi_power: self.sqrt_pi_power * exp as i64,
        }
    }
}

impl Mul for SqrtPiMultiple {
    type Output = SqrtPiMultiple;
    fn mul(self, rhs: SqrtPiMultiple) -> SqrtPiMultiple {
        SqrtPiMultiple {
            coeff: self.coeff * rhs.coeff,
            sqrt_pi_power: self.sqrt_pi_power + rhs.sqrt_pi_power,
        }
    }
}

impl Div for SqrtPiMultiple {
    type Output = SqrtPiMultiple;
    fn div(self, rhs: SqrtPiMultiple) -> SqrtPiMultiple {
        assert!(rhs.coeff != 0, "division by zero");
        SqrtPiMultiple {
            coeff: self.coeff / rhs.coeff,
            sqrt_pi_power: self.sqrt_pi_power - rhs.sqrt_pi_power,
        }
    }
}

impl fmt::Display for SqrtPiMultiple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sqrt_pi_power {
            0 => write!(f, "{}", self.coeff),
            p => write!(f, "{} * pi^({}/2)", self.coeff, p),
        }
    }
}

pub fn factorial(k: u32) -> Integer {
    Integer::from(Integer::factorial(k))
}

/// `Gamma(twice_arg / 2)` for a positive integer `twice_arg`.
pub fn gamma_half(twice_arg: u64) -> SqrtPiMultiple {
    assert!(twice_arg > 0, "Gamma has a pole at 0");
    if twice_arg.is_multiple_of(2) {
        let k = (twice_arg / 2) as u32;
        SqrtPiMultiple::rational(Rational::from(factorial(k - 1)))
    } else {
        // Gamma(k + 1/2) = (2k)! / (4^k k!) sqrt(pi)
        let k = ((twice_arg - 1) / 2) as u32;
        let num = factorial(2 * k);
        let den = Integer::from(4u32).pow(k) * factorial(k);
        SqrtPiMultiple {
            coeff: Rational::from((num, den)),
            sqrt_pi_power: 1,
        }
    }
}

/// `Gamma(k)` for a positive integer `k`.
pub fn gamma_int(k: u64) -> Integer {
    assert!(k > 0, "Gamma has a pole at {k}");
    factorial((k - 1) as u32)
}

pub fn binomial(n: u64, k: u64) -> Integer {
    Integer::from(Integer::binomial_u(n as u32, k as u32))
}
