//! Exact rational intervals.
//!
//! Every real quantity the crate certifies (α, η, approximation errors,
//! normalized products) is carried as a pair of exact rationals `lo ≤ hi`
//! known to enclose it. Rational arithmetic is exact, so interval operations
//! here never round; `coarsen` is the one deliberate widening step, used to
//! keep denominators small on hot paths.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Three-valued outcome of an interval comparison: the enclosed reals may not
/// be separated well enough to decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certainty {
    True,
    False,
    Unknown,
}

impl Certainty {
    pub fn is_true(self) -> bool {
        self == Certainty::True
    }
}

/// Closed interval `[lo, hi]` of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalInterval {
    lo: BigRational,
    hi: BigRational,
}

impl RationalInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Self { lo, hi }
    }

    pub fn point(value: BigRational) -> Self {
        Self {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn from_int(value: impl Into<BigInt>) -> Self {
        Self::point(BigRational::from_integer(value.into()))
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    pub fn contains(&self, value: &BigRational) -> bool {
        &self.lo <= value && value <= &self.hi
    }

    pub fn contains_interval(&self, other: &Self) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    pub fn shift(&self, offset: &BigRational) -> Self {
        Self {
            lo: &self.lo + offset,
            hi: &self.hi + offset,
        }
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        let a = &self.lo * factor;
        let b = &self.hi * factor;
        if factor.is_negative() {
            Self { lo: b, hi: a }
        } else {
            Self { lo: a, hi: b }
        }
    }

    pub fn scale_int(&self, factor: &BigInt) -> Self {
        self.scale(&BigRational::from_integer(factor.clone()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        Self { lo, hi }
    }

    /// Division by an interval that certainly excludes zero.
    pub fn div(&self, other: &Self) -> Self {
        assert!(
            other.lo.is_positive() || other.hi.is_negative(),
            "interval division requires a sign-definite divisor"
        );
        let candidates = [
            &self.lo / &other.lo,
            &self.lo / &other.hi,
            &self.hi / &other.lo,
            &self.hi / &other.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        Self { lo, hi }
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            Self {
                lo: BigRational::zero(),
                hi: self.lo.abs().max(self.hi.abs()),
            }
        }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    /// Strict `self < other` on the enclosed reals.
    pub fn lt(&self, other: &Self) -> Certainty {
        if self.hi < other.lo {
            Certainty::True
        } else if self.lo >= other.hi {
            Certainty::False
        } else {
            Certainty::Unknown
        }
    }

    pub fn lt_rational(&self, bound: &BigRational) -> Certainty {
        if &self.hi < bound {
            Certainty::True
        } else if &self.lo >= bound {
            Certainty::False
        } else {
            Certainty::Unknown
        }
    }

    pub fn gt_rational(&self, bound: &BigRational) -> Certainty {
        if &self.lo > bound {
            Certainty::True
        } else if &self.hi <= bound {
            Certainty::False
        } else {
            Certainty::Unknown
        }
    }

    /// Sign of the enclosed real, when the interval decides it.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Outward rounding to dyadic endpoints with denominator `2^bits`.
    /// Always contains `self`; widens by at most `2^{1-bits}`.
    pub fn coarsen(&self, bits: u32) -> Self {
        Self {
            lo: dyadic_floor(&self.lo, bits),
            hi: dyadic_ceil(&self.hi, bits),
        }
    }

    /// Longest decimal expansion shared by both endpoints, e.g. `"0.4999"`.
    /// Requires a non-negative interval; `digits` caps the fractional length.
    pub fn common_decimal_prefix(&self, digits: usize) -> String {
        assert!(!self.lo.is_negative(), "decimal prefix needs a non-negative interval");
        let int_lo = self.lo.to_integer();
        let int_hi = self.hi.to_integer();
        if int_lo != int_hi {
            return String::new();
        }
        let mut out = int_lo.to_string();
        out.push('.');
        let mut lo_frac = &self.lo - BigRational::from_integer(int_lo);
        let mut hi_frac = &self.hi - BigRational::from_integer(int_hi);
        let ten = BigRational::from_integer(10.into());
        let mut emitted = 0usize;
        while emitted < digits {
            lo_frac *= &ten;
            hi_frac *= &ten;
            let d_lo = lo_frac.to_integer();
            let d_hi = hi_frac.to_integer();
            if d_lo != d_hi {
                break;
            }
            out.push(char::from(b'0' + u8::try_from(&d_lo % 10u8).unwrap()));
            lo_frac -= BigRational::from_integer(d_lo.clone());
            hi_frac -= BigRational::from_integer(d_hi);
            emitted += 1;
        }
        out
    }

    /// Approximate printing for report text; not used in any certification.
    pub fn approx_f64(&self) -> f64 {
        rational_to_f64(&self.midpoint())
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// `⌊x·2^bits⌋ / 2^bits`.
pub fn dyadic_floor(x: &BigRational, bits: u32) -> BigRational {
    let scale = BigInt::from(BigUint::one() << bits);
    let scaled = (x * BigRational::from_integer(scale.clone())).floor();
    scaled / BigRational::from_integer(scale)
}

/// `⌈x·2^bits⌉ / 2^bits`.
pub fn dyadic_ceil(x: &BigRational, bits: u32) -> BigRational {
    let scale = BigInt::from(BigUint::one() << bits);
    let scaled = (x * BigRational::from_integer(scale.clone())).ceil();
    scaled / BigRational::from_integer(scale)
}

/// Nearest integer with exact halves rounded down.
pub fn nearest_half_down(x: &BigRational) -> BigInt {
    let half = BigRational::new(BigInt::one(), 2.into());
    (x - half).ceil().to_integer()
}

/// Lossy conversion for display only.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    // Scale into f64 range via bit lengths before dividing.
    let num = x.numer();
    let den = x.denom();
    if num.is_zero() {
        return 0.0;
    }
    let shift = (num.bits() as i64 - den.bits() as i64).clamp(-900, 900);
    let (n, d) = if shift > 0 {
        (num.clone() >> shift as u64, den.clone())
    } else {
        (num.clone(), den.clone() >> (-shift) as u64)
    };
    let nf = n.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = d.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df * 2f64.powi(shift as i32)
}

/// Parses "p/q" or plain "p".
pub fn rational_from_str(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((p, q)) => {
            let num: BigInt = p.trim().parse().ok()?;
            let den: BigInt = q.trim().parse().ok()?;
            if den.is_zero() {
                return None;
            }
            Some(BigRational::new(num, den))
        }
        None => Some(BigRational::from_integer(s.trim().parse().ok()?)),
    }
}

pub fn rational_to_string(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

impl Serialize for RationalInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("RationalInterval", 2)?;
        s.serialize_field("lo", &rational_to_string(&self.lo))?;
        s.serialize_field("hi", &rational_to_string(&self.hi))?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for RationalInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lo: String,
            hi: String,
        }
        let raw = Raw::deserialize(deserializer)?;
        let lo = rational_from_str(&raw.lo).ok_or_else(|| D::Error::custom("bad rational"))?;
        let hi = rational_from_str(&raw.hi).ok_or_else(|| D::Error::custom("bad rational"))?;
        if lo > hi {
            return Err(D::Error::custom("interval endpoints out of order"));
        }
        Ok(RationalInterval { lo, hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn iv(a: (i64, i64), b: (i64, i64)) -> RationalInterval {
        RationalInterval::new(rat(a.0, a.1), rat(b.0, b.1))
    }

    #[test]
    fn abs_handles_sign_straddle() {
        let straddle = iv((-3, 2), (1, 2));
        let a = straddle.abs();
        assert_eq!(a.lo(), &rat(0, 1));
        assert_eq!(a.hi(), &rat(3, 2));
        assert_eq!(iv((-5, 1), (-2, 1)).abs(), iv((2, 1), (5, 1)));
    }

    #[test]
    fn three_valued_comparison() {
        let a = iv((0, 1), (1, 1));
        let b = iv((2, 1), (3, 1));
        assert_eq!(a.lt(&b), Certainty::True);
        assert_eq!(b.lt(&a), Certainty::False);
        let c = iv((1, 2), (5, 2));
        assert_eq!(a.lt(&c), Certainty::Unknown);
    }

    #[test]
    fn nearest_half_down_ties() {
        assert_eq!(nearest_half_down(&rat(5, 2)), BigInt::from(2));
        assert_eq!(nearest_half_down(&rat(-1, 2)), BigInt::from(-1));
        assert_eq!(nearest_half_down(&rat(12, 5)), BigInt::from(2));
        assert_eq!(nearest_half_down(&rat(13, 5)), BigInt::from(3));
        assert_eq!(nearest_half_down(&rat(-12, 5)), BigInt::from(-2));
    }

    #[test]
    fn coarsen_is_outward() {
        let x = iv((1, 3), (2, 3));
        let c = x.coarsen(8);
        assert!(c.contains_interval(&x));
        assert!(c.width() <= x.width() + rat(1, 128));
        assert_eq!(c.lo().denom() % BigInt::from(2), BigInt::zero());
    }

    #[test]
    fn decimal_prefix_stops_at_disagreement() {
        let x = iv((12345, 100000), (12349, 100000));
        assert_eq!(x.common_decimal_prefix(10), "0.1234");
        let y = iv((1, 1), (1, 1));
        assert_eq!(y.common_decimal_prefix(3), "1.000");
    }

    #[test]
    fn rational_round_trip() {
        for s in ["3/4", "-7/2", "5", "0"] {
            let r = rational_from_str(s).unwrap();
            assert_eq!(rational_from_str(&rational_to_string(&r)).unwrap(), r);
        }
        assert!(rational_from_str("1/0").is_none());
    }

    fn arb_rational() -> impl Strategy<Value = BigRational> {
        (-2000i64..2000, 1i64..300).prop_map(|(n, d)| rat(n, d))
    }

    fn arb_interval() -> impl Strategy<Value = RationalInterval> {
        (arb_rational(), arb_rational())
            .prop_map(|(a, b)| if a <= b { RationalInterval::new(a, b) } else { RationalInterval::new(b, a) })
    }

    proptest! {
        #[test]
        fn add_contains_sums(a in arb_interval(), b in arb_interval()) {
            let s = a.add(&b);
            prop_assert!(s.contains(&(a.lo() + b.lo())));
            prop_assert!(s.contains(&(a.hi() + b.hi())));
            prop_assert!(s.contains(&(a.midpoint() + b.midpoint())));
        }

        #[test]
        fn mul_contains_products(a in arb_interval(), b in arb_interval()) {
            let p = a.mul(&b);
            prop_assert!(p.contains(&(a.midpoint() * b.midpoint())));
            prop_assert!(p.contains(&(a.lo() * b.hi())));
        }

        #[test]
        fn hull_contains_both(a in arb_interval(), b in arb_interval()) {
            let h = a.hull(&b);
            prop_assert!(h.contains_interval(&a));
            prop_assert!(h.contains_interval(&b));
        }

        #[test]
        fn abs_contains_abs_of_members(a in arb_interval()) {
            prop_assert!(a.abs().contains(&a.midpoint().abs()));
            prop_assert!(a.abs().contains(&a.lo().abs()) || a.abs().contains(&a.hi().abs()));
        }

        #[test]
        fn coarsen_never_shrinks(a in arb_interval(), bits in 4u32..64) {
            prop_assert!(a.coarsen(bits).contains_interval(&a));
        }

        #[test]
        fn nearest_half_down_is_within_half(x in arb_rational()) {
            let n = nearest_half_down(&x);
            let err = (x - BigRational::from_integer(n)).abs();
            prop_assert!(err <= rat(1, 2));
        }
    }
}
