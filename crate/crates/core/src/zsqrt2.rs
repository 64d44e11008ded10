//! Exact arithmetic in the ring ℤ[√2] and exact comparisons against real
//! thresholds.
//!
//! Membership tests for norm balls compare elements `a + b√2` against a
//! threshold `T` given as an `f64`. Every finite `f64` is a dyadic rational,
//! so the comparison has an exact answer; it is decided by a certified
//! floating-point interval first and by big-integer arithmetic when the
//! interval straddles the threshold.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ZSqrt2 {
    pub a: i64,
    pub b: i64,
}

impl ZSqrt2 {
    pub const ZERO: ZSqrt2 = ZSqrt2 { a: 0, b: 0 };
    pub const ONE: ZSqrt2 = ZSqrt2 { a: 1, b: 0 };

    pub const fn new(a: i64, b: i64) -> Self {
        ZSqrt2 { a, b }
    }

    pub const fn from_int(a: i64) -> Self {
        ZSqrt2 { a, b: 0 }
    }

    /// Galois conjugate `a − b√2`.
    pub const fn conj(self) -> Self {
        ZSqrt2 { a: self.a, b: -self.b }
    }

    /// Field norm `a² − 2b²`.
    pub fn norm(self) -> i128 {
        let (a, b) = (self.a as i128, self.b as i128);
        a * a - 2 * b * b
    }

    pub fn to_f64(self) -> f64 {
        self.a as f64 + self.b as f64 * std::f64::consts::SQRT_2
    }

    /// Exact sign of `a + b√2`.
    pub fn signum(self) -> Ordering {
        sign_sqrt2(self.a as i128, self.b as i128)
    }

    pub fn abs(self) -> Self {
        if self.signum() == Ordering::Less {
            -self
        } else {
            self
        }
    }

    pub fn checked_mul(self, o: Self) -> Option<Self> {
        let a = self.a.checked_mul(o.a)?.checked_add(2i64.checked_mul(self.b.checked_mul(o.b)?)?)?;
        let b = self.a.checked_mul(o.b)?.checked_add(self.b.checked_mul(o.a)?)?;
        Some(ZSqrt2 { a, b })
    }

    /// Exact comparison with a real number.
    pub fn cmp_real(self, x: &Threshold) -> Ordering {
        x.cmp_elem(self).reverse()
    }
}

impl Add for ZSqrt2 {
    type Output = ZSqrt2;
    fn add(self, o: Self) -> Self {
        ZSqrt2::new(self.a + o.a, self.b + o.b)
    }
}

impl Sub for ZSqrt2 {
    type Output = ZSqrt2;
    fn sub(self, o: Self) -> Self {
        ZSqrt2::new(self.a - o.a, self.b - o.b)
    }
}

impl Neg for ZSqrt2 {
    type Output = ZSqrt2;
    fn neg(self) -> Self {
        ZSqrt2::new(-self.a, -self.b)
    }
}

impl Mul for ZSqrt2 {
    type Output = ZSqrt2;
    fn mul(self, o: Self) -> Self {
        ZSqrt2::new(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)
    }
}

impl Mul<i64> for ZSqrt2 {
    type Output = ZSqrt2;
    fn mul(self, k: i64) -> Self {
        ZSqrt2::new(self.a * k, self.b * k)
    }
}

/// Exact sign of `p + q√2` for machine integers.
pub fn sign_sqrt2(p: i128, q: i128) -> Ordering {
    match (p.cmp(&0), q.cmp(&0)) {
        (Ordering::Equal, s) | (s, Ordering::Equal) => s,
        (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
        (Ordering::Less, Ordering::Less) => Ordering::Less,
        (Ordering::Greater, Ordering::Less) => {
            // p − |q|√2: compare p² with 2q²
            let (p2, q2) = (p.checked_mul(p), q.checked_mul(q).and_then(|x| x.checked_mul(2)));
            match (p2, q2) {
                (Some(p2), Some(q2)) => p2.cmp(&q2),
                _ => sign_sqrt2_big(&BigInt::from(p), &BigInt::from(q)),
            }
        }
        (Ordering::Less, Ordering::Greater) => sign_sqrt2(-p, -q).reverse(),
    }
}

/// Exact sign of `p + q√2` for big integers.
pub fn sign_sqrt2_big(p: &BigInt, q: &BigInt) -> Ordering {
    let sp = p.sign();
    let sq = q.sign();
    use num_bigint::Sign::*;
    match (sp, sq) {
        (NoSign, NoSign) => Ordering::Equal,
        (NoSign, Plus) | (Plus, NoSign) | (Plus, Plus) => Ordering::Greater,
        (NoSign, Minus) | (Minus, NoSign) | (Minus, Minus) => Ordering::Less,
        (Plus, Minus) => (p * p).cmp(&(q * q * BigInt::from(2))),
        (Minus, Plus) => (q * q * BigInt::from(2)).cmp(&(p * p)),
    }
}

/// A real threshold known exactly as a rational number, with a cached
/// floating-point value for the fast path.
#[derive(Debug, Clone)]
pub struct Threshold {
    approx: f64,
    /// absolute error bound on `approx`
    approx_err: f64,
    exact: BigRational,
}

impl Threshold {
    /// The exact value of a finite `f64`.
    pub fn from_f64(x: f64) -> Self {
        let exact = BigRational::from_f64(x).expect("finite threshold");
        Threshold { approx: x, approx_err: 0.0, exact }
    }

    pub fn from_rational(exact: BigRational) -> Self {
        let approx = exact.to_f64().unwrap_or(f64::INFINITY);
        Threshold { approx, approx_err: approx.abs() * 4.0 * f64::EPSILON, exact }
    }

    /// `T²` exactly.
    pub fn square_of(t: f64) -> Self {
        let r = BigRational::from_f64(t).expect("finite threshold");
        Threshold::from_rational(&r * &r)
    }

    /// `T² + T⁻²` exactly: the Frobenius-norm bound equivalent to
    /// `‖g‖_op ≤ T` for `det g = 1`, `T ≥ 1`.
    pub fn square_plus_inverse_square_of(t: f64) -> Self {
        let r = BigRational::from_f64(t).expect("finite threshold");
        let sq = &r * &r;
        let inv = sq.recip();
        Threshold::from_rational(sq + inv)
    }

    pub fn approx(&self) -> f64 {
        self.approx
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    /// `floor` of the threshold as an integer, exact.
    pub fn floor_i128(&self) -> i128 {
        let n = self.exact.numer();
        let d = self.exact.denom();
        n.div_floor(d).to_i128().expect("threshold floor fits in i128")
    }

    /// Exact ordering of `self` relative to `x = a + b√2`.
    pub fn cmp_elem(&self, x: ZSqrt2) -> Ordering {
        let v = x.to_f64();
        // |a + b√2 − fl(...)| ≤ a few ulps of the summands
        let err = (x.a.unsigned_abs() as f64 + 1.5 * x.b.unsigned_abs() as f64) * 4.0 * f64::EPSILON;
        let gap = self.approx - v;
        if gap.abs() > err + self.approx_err + f64::MIN_POSITIVE {
            return if gap > 0.0 { Ordering::Greater } else { Ordering::Less };
        }
        // exact: sign of (n − d·a) − d·b·√2
        let n = self.exact.numer();
        let d = self.exact.denom();
        let p = n - d * BigInt::from(x.a);
        let q = -(d * BigInt::from(x.b));
        sign_sqrt2_big(&p, &q)
    }

    /// `x ≤ self`, exactly.
    pub fn admits(&self, x: ZSqrt2) -> bool {
        self.cmp_elem(x) != Ordering::Less
    }

    /// `|x| ≤ self`, exactly.
    pub fn admits_abs(&self, x: ZSqrt2) -> bool {
        self.admits(x.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.exact.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.exact.is_negative()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_cases() {
        assert_eq!(sign_sqrt2(0, 0), Ordering::Equal);
        assert_eq!(sign_sqrt2(3, -2), Ordering::Greater); // 3 − 2.83
        assert_eq!(sign_sqrt2(2, -2), Ordering::Less);
        assert_eq!(sign_sqrt2(-3, 2), Ordering::Less);
        assert_eq!(sign_sqrt2(-1, 1), Ordering::Greater);
    }

    #[test]
    fn units_have_norm_one() {
        let e = ZSqrt2::new(1, 1); // 1 + √2
        assert_eq!(e.norm(), -1);
        assert_eq!((e * e).norm(), 1);
        assert_eq!(e * e.conj(), ZSqrt2::from_int(-1));
    }

    #[test]
    fn threshold_ties_are_exact() {
        let t = Threshold::from_f64(3.0);
        assert!(t.admits(ZSqrt2::from_int(3)));
        assert!(!t.admits(ZSqrt2::from_int(4)));
        // 1 + √2 ≈ 2.414 < 2.5
        assert!(Threshold::from_f64(2.5).admits(ZSqrt2::new(1, 1)));
        assert!(!Threshold::from_f64(2.4142135).admits(ZSqrt2::new(1, 1)));
        assert!(Threshold::from_f64(2.4142136).admits(ZSqrt2::new(1, 1)));
        // the closest doubles on either side of 1 + √2
        let f = 1.0 + std::f64::consts::SQRT_2;
        let below = f64::from_bits(f.to_bits() - 1);
        let above = f64::from_bits(f.to_bits() + 1);
        assert!(!Threshold::from_f64(below).admits(ZSqrt2::new(1, 1)));
        assert!(Threshold::from_f64(above).admits(ZSqrt2::new(1, 1)));
    }

    #[test]
    fn threshold_squares() {
        assert_eq!(Threshold::square_of(2.5).floor_i128(), 6);
        assert_eq!(Threshold::square_plus_inverse_square_of(1.0).floor_i128(), 2);
        assert_eq!(Threshold::square_plus_inverse_square_of(2.0).floor_i128(), 4);
    }

    proptest! {
        #[test]
        fn sign_matches_float_when_far(p in -1_000_000i64..1_000_000, q in -1_000_000i64..1_000_000) {
            let v = p as f64 + q as f64 * std::f64::consts::SQRT_2;
            if v.abs() > 1e-6 {
                prop_assert_eq!(sign_sqrt2(p as i128, q as i128), v.partial_cmp(&0.0).unwrap());
            }
            prop_assert_eq!(sign_sqrt2(p as i128, q as i128), sign_sqrt2_big(&BigInt::from(p), &BigInt::from(q)));
        }

        #[test]
        fn multiplication_is_multiplicative_on_norms(a in -1000i64..1000, b in -1000i64..1000, c in -1000i64..1000, d in -1000i64..1000) {
            let x = ZSqrt2::new(a, b);
            let y = ZSqrt2::new(c, d);
            prop_assert_eq!((x * y).norm(), x.norm() * y.norm());
        }
    }
}
