//! Exact SU(2) coupling coefficients.
//!
//! Clebsch–Gordan coefficients and 6j symbols are of the form `±√r` with `r`
//! rational. They are evaluated with big rationals and rounded only once.
//! Spins and projections are passed doubled (`2j`, `2m`) so that half-integers
//! stay integral.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

/// A real number `sign · √square` with rational `square ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedSqrt {
    negative: bool,
    square: BigRational,
}

impl SignedSqrt {
    pub fn zero() -> Self {
        Self { negative: false, square: BigRational::zero() }
    }

    /// `s · √p` for rationals `s` and `p ≥ 0`.
    pub fn from_parts(scale: &BigRational, radicand: &BigRational) -> Self {
        let square = scale * scale * radicand;
        let negative = scale.is_negative() && !square.is_zero();
        Self { negative, square }
    }

    pub fn is_zero(&self) -> bool {
        self.square.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// The rational `value²`.
    pub fn square(&self) -> &BigRational {
        &self.square
    }

    /// `value² · sign(value)`, a rational carrying the whole number.
    pub fn signed_square(&self) -> BigRational {
        if self.negative {
            -self.square.clone()
        } else {
            self.square.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        let num = self.square.numer().to_f64().unwrap_or(f64::NAN);
        let den = self.square.denom().to_f64().unwrap_or(f64::NAN);
        let magnitude = Float::sqrt(num / den);
        if self.negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

fn factorial(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn rational(n: BigInt) -> BigRational {
    BigRational::from_integer(n)
}

fn half(twice: i64) -> Option<i64> {
    (twice % 2 == 0).then_some(twice / 2)
}

/// Whether `(a, b, c)` (doubled) satisfy the triangle rule with integer
/// perimeter.
pub fn triangle(ta: i64, tb: i64, tc: i64) -> bool {
    ta >= 0 && tb >= 0 && tc >= 0 && tc <= ta + tb && tc >= (ta - tb).abs() && (ta + tb + tc) % 2 == 0
}

/// Triangle coefficient `(a+b−c)!(a−b+c)!(−a+b+c)!/(a+b+c+1)!`.
fn delta(ta: i64, tb: i64, tc: i64) -> BigRational {
    let num = factorial((ta + tb - tc) / 2) * factorial((ta - tb + tc) / 2) * factorial((-ta + tb + tc) / 2);
    let den = factorial((ta + tb + tc) / 2 + 1);
    BigRational::new(num, den)
}

/// `⟨j1 m1 j2 m2 | J M⟩` in the Condon–Shortley convention (Racah formula).
pub fn clebsch_gordan(tj1: i64, tm1: i64, tj2: i64, tm2: i64, tj: i64, tm: i64) -> SignedSqrt {
    if tm1 + tm2 != tm || !triangle(tj1, tj2, tj) {
        return SignedSqrt::zero();
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm.abs() > tj {
        return SignedSqrt::zero();
    }
    let (Some(j1pm1), Some(j2pm2), Some(jpm)) = (half(tj1 + tm1), half(tj2 + tm2), half(tj + tm)) else {
        return SignedSqrt::zero();
    };
    let j1mm1 = (tj1 - tm1) / 2;
    let j2mm2 = (tj2 - tm2) / 2;
    let jmm = (tj - tm) / 2;

    let prefactor = BigRational::from_integer(BigInt::from(tj + 1))
        * delta(tj1, tj2, tj)
        * rational(
            factorial(jpm)
                * factorial(jmm)
                * factorial(j1mm1)
                * factorial(j1pm1)
                * factorial(j2mm2)
                * factorial(j2pm2),
        );

    let a = (tj1 + tj2 - tj) / 2;
    let b = j1mm1;
    let c = j2pm2;
    let d = (tj - tj2 + tm1) / 2;
    let e = (tj - tj1 - tm2) / 2;
    let k_min = 0.max(-d).max(-e);
    let k_max = a.min(b).min(c);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k) * factorial(a - k) * factorial(b - k) * factorial(c - k) * factorial(d + k) * factorial(e + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    SignedSqrt::from_parts(&sum, &prefactor)
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}` (Racah sum); zero when any triad
/// fails the triangle rule.
pub fn six_j(tj1: i64, tj2: i64, tj3: i64, tj4: i64, tj5: i64, tj6: i64) -> SignedSqrt {
    let triads = [(tj1, tj2, tj3), (tj1, tj5, tj6), (tj4, tj2, tj6), (tj4, tj5, tj3)];
    if triads.iter().any(|&(a, b, c)| !triangle(a, b, c)) {
        return SignedSqrt::zero();
    }
    let radicand = triads.iter().fold(BigRational::one(), |acc, &(a, b, c)| acc * delta(a, b, c));
    let sums: Vec<i64> = triads.iter().map(|&(a, b, c)| (a + b + c) / 2).collect();
    let pairs = [(tj1 + tj2 + tj4 + tj5) / 2, (tj2 + tj3 + tj5 + tj6) / 2, (tj3 + tj1 + tj6 + tj4) / 2];
    let t_min = *sums.iter().max().unwrap();
    let t_max = *pairs.iter().min().unwrap();
    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let den = sums.iter().fold(BigInt::one(), |acc, &s| acc * factorial(t - s))
            * pairs.iter().fold(BigInt::one(), |acc, &p| acc * factorial(p - t));
        let term = BigRational::new(factorial(t + 1), den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    SignedSqrt::from_parts(&sum, &radicand)
}
