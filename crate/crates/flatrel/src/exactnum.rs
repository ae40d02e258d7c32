//! Exact arithmetic over Q and real quadratic extensions Q(√D).
//!
//! A [`QuadNum`] stores `a + b√D` with rational `a`, `b` and a nonnegative
//! integer discriminant `D ≡ 0, 1 (mod 4)`; `D = 0` encodes a plain rational.
//! All ordering and sign tests are exact (integer comparisons), never floating
//! point. When `D` is a perfect square the same representation is used, read
//! through the splitting `a + b·d` / `a − b·d` with `d = √D`; this keeps a
//! single code path for all discriminants.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Rational = BigRational;

/// Build a rational from an integer pair; panics on zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumError {
    #[error("discriminant mismatch: {0} vs {1}")]
    DiscMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by a zero divisor (norm 0 in split algebra, disc {0})")]
    ZeroDivisor(u64),
    #[error("invalid discriminant {0}: must be 0 or ≡ 0,1 mod 4")]
    BadDisc(u64),
}

/// An element a + b√D of Q(√D), exactly ordered through the real embedding
/// that sends √D to the positive square root.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadNum {
    pub a: Rational,
    pub b: Rational,
    pub disc: u64,
}

pub fn valid_disc(d: u64) -> bool {
    d == 0 || d % 4 == 0 || d % 4 == 1
}

impl QuadNum {
    pub fn new(a: Rational, b: Rational, disc: u64) -> Result<Self, NumError> {
        if !valid_disc(disc) {
            return Err(NumError::BadDisc(disc));
        }
        let mut q = QuadNum { a, b, disc };
        q.normalize();
        Ok(q)
    }

    /// Internal constructor for callers that already validated the disc.
    fn raw(a: Rational, b: Rational, disc: u64) -> Self {
        let mut q = QuadNum { a, b, disc };
        q.normalize();
        q
    }

    /// A zero `b` part makes the value rational; drop to disc 0 so rationals
    /// from different fields interoperate.
    fn normalize(&mut self) {
        if self.b.is_zero() {
            self.disc = 0;
        }
        if self.disc == 0 {
            self.b = Rational::zero();
        }
    }

    pub fn zero() -> Self {
        QuadNum { a: Rational::zero(), b: Rational::zero(), disc: 0 }
    }

    pub fn one() -> Self {
        QuadNum { a: Rational::one(), b: Rational::zero(), disc: 0 }
    }

    pub fn from_rational(a: Rational) -> Self {
        QuadNum { a, b: Rational::zero(), disc: 0 }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat_int(n))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_rational(ratio(n, d))
    }

    /// b·√D as an element of Q(√D).
    pub fn sqrt_disc(disc: u64) -> Result<Self, NumError> {
        QuadNum::new(Rational::zero(), Rational::one(), disc)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Unify discriminants: rational values promote to the other operand's
    /// field; two genuinely quadratic values must share their disc.
    fn join_disc(&self, other: &Self) -> Result<u64, NumError> {
        match (self.disc, other.disc) {
            (0, d) | (d, 0) => Ok(d),
            (d1, d2) if d1 == d2 => Ok(d1),
            (d1, d2) => Err(NumError::DiscMismatch(d1, d2)),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, NumError> {
        let d = self.join_disc(other)?;
        Ok(QuadNum::raw(&self.a + &other.a, &self.b + &other.b, d))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, NumError> {
        let d = self.join_disc(other)?;
        Ok(QuadNum::raw(&self.a - &other.a, &self.b - &other.b, d))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, NumError> {
        let d = self.join_disc(other)?;
        let disc = Rational::from_integer(BigInt::from(d));
        let a = &self.a * &other.a + &self.b * &other.b * &disc;
        let b = &self.a * &other.b + &self.b * &other.a;
        Ok(QuadNum::raw(a, b, d))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, NumError> {
        if other.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        let d = self.join_disc(other)?;
        // 1/(a+b√D) = (a−b√D)/(a²−b²D); for square D the norm can vanish on
        // nonzero elements (zero divisors of Q⊕Q).
        let disc = Rational::from_integer(BigInt::from(d));
        let norm = &other.a * &other.a - &other.b * &other.b * &disc;
        if norm.is_zero() {
            return Err(NumError::ZeroDivisor(d));
        }
        let inv_a = &other.a / &norm;
        let inv_b = -&other.b / &norm;
        self.checked_mul(&QuadNum::raw(inv_a, inv_b, d))
    }

    pub fn neg(&self) -> Self {
        QuadNum { a: -&self.a, b: -&self.b, disc: self.disc }
    }

    /// a − b√D. For square D this is conjugation through the Q⊕Q splitting.
    pub fn galois_conjugate(&self) -> Self {
        QuadNum::raw(self.a.clone(), -&self.b, self.disc)
    }

    /// Exact sign of the real embedding: −1, 0 or +1.
    pub fn sign(&self) -> i8 {
        let sa = rational_sign(&self.a);
        let sb = rational_sign(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 {
            return sb;
        }
        if sa == sb {
            return sa;
        }
        // Opposite signs: compare a² with b²·D by exact arithmetic. The value
        // a + b√D has the sign of a exactly when |a| > |b|√D.
        let disc = Rational::from_integer(BigInt::from(self.disc));
        let diff = &self.a * &self.a - &self.b * &self.b * &disc;
        match rational_sign(&diff) {
            0 => 0,
            s if s == 1 => sa,
            _ => sb,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign() < 0
    }

    pub fn cmp_exact(&self, other: &Self) -> Result<std::cmp::Ordering, NumError> {
        let d = self.checked_sub(other)?;
        Ok(match d.sign() {
            1 => std::cmp::Ordering::Greater,
            -1 => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Equal,
        })
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * (self.disc as f64).sqrt()
    }

    /// Decimal rendering used by serialization and display.
    pub fn decimal_string(&self, digits: usize) -> String {
        format!("{:.*}", digits, self.to_f64())
    }
}

pub fn rational_sign(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl fmt::Debug for QuadNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.disc == 0 {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{} + {}*sqrt({})", self.a, self.b, self.disc)
        }
    }
}

impl fmt::Display for QuadNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl std::ops::$trait for &QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: &QuadNum) -> QuadNum {
                self.$checked(rhs).expect("quadratic number arithmetic")
            }
        }
        impl std::ops::$trait for QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: QuadNum) -> QuadNum {
                (&self).$checked(&rhs).expect("quadratic number arithmetic")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &QuadNum {
    type Output = QuadNum;
    fn neg(self) -> QuadNum {
        QuadNum::neg(self)
    }
}

impl std::ops::Neg for QuadNum {
    type Output = QuadNum;
    fn neg(self) -> QuadNum {
        QuadNum::neg(&self)
    }
}

/// The golden ratio (1+√5)/2 as an element of Q(√5).
pub fn golden() -> QuadNum {
    QuadNum::new(ratio(1, 2), ratio(1, 2), 5).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: (i64, i64), b: (i64, i64), d: u64) -> QuadNum {
        QuadNum::new(ratio(a.0, a.1), ratio(b.0, b.1), d).unwrap()
    }

    #[test]
    fn golden_ratio_satisfies_its_quadratic() {
        let l = golden();
        let l2 = l.checked_mul(&l).unwrap();
        let rhs = l.checked_add(&QuadNum::one()).unwrap();
        assert_eq!(l2, rhs);
    }

    #[test]
    fn sqrt5_squares_to_five() {
        let r = QuadNum::sqrt_disc(5).unwrap();
        assert_eq!(r.checked_mul(&r).unwrap(), QuadNum::from_int(5));
    }

    #[test]
    fn exact_signs() {
        assert_eq!(QuadNum::zero().sign(), 0);
        // 1 − √5/2 < 0 because 1 < 5/4.
        assert_eq!(q((1, 1), (-1, 2), 5).sign(), -1);
        // 3 − √5 > 0 because 9 > 5.
        assert_eq!(q((3, 1), (-1, 1), 5).sign(), 1);
        // golden conjugate (1−√5)/2 < 0.
        assert_eq!(golden().galois_conjugate().sign(), -1);
    }

    #[test]
    fn division_round_trip() {
        let x = q((2, 3), (5, 7), 5);
        let y = q((-1, 2), (3, 4), 5);
        let z = x.checked_div(&y).unwrap().checked_mul(&y).unwrap();
        assert_eq!(z, x);
    }

    #[test]
    fn rational_promotes_across_discs() {
        let r = QuadNum::from_ratio(3, 2);
        let s = q((0, 1), (1, 1), 5);
        assert!(r.checked_add(&s).is_ok());
        let t8 = q((0, 1), (1, 1), 8);
        assert!(s.checked_add(&t8).is_err());
    }

    #[test]
    fn square_disc_zero_divisor() {
        // 2 − √4 = 0 in the embedding but nonzero as a pair: dividing by it
        // must fail with the zero-divisor error.
        let z = q((2, 1), (-1, 1), 4);
        assert_eq!(z.sign(), 0);
        assert_eq!(
            QuadNum::one().checked_div(&z),
            Err(NumError::ZeroDivisor(4))
        );
    }

    #[test]
    fn conjugation_is_ring_hom() {
        let x = q((2, 1), (3, 1), 5);
        let y = q((-1, 3), (7, 5), 5);
        let lhs = x.checked_mul(&y).unwrap().galois_conjugate();
        let rhs = x
            .galois_conjugate()
            .checked_mul(&y.galois_conjugate())
            .unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(x.galois_conjugate().galois_conjugate(), x);
    }

    #[test]
    fn sign_matches_float() {
        let samples = [
            q((1, 1), (-1, 2), 5),
            q((3, 1), (-1, 1), 5),
            q((-7, 3), (2, 1), 8),
            q((0, 1), (-5, 2), 13),
        ];
        for s in &samples {
            let f = s.to_f64();
            if f.abs() > 1e-12 {
                assert_eq!(s.sign() as f64, f.signum());
            }
        }
    }
}
