//! Certified enclosures of `ln` and square roots over exact rationals.
//!
//! `ln x` is reduced to `m·ln 2 + 2·atanh(t)` with `t = (y-1)/(y+1)` and
//! `y = x/2^m ∈ [1, 2)`, so `t ∈ [0, 1/3]` and the series converges by a
//! factor ≥ 9 per term. The series itself runs on dyadic fixed point — plain
//! integers at scale `2^prec` with floor/ceil rounding — because rational
//! arithmetic gcd-reduces on every step and is two orders of magnitude
//! slower. All series quantities are non-negative, so directed rounding of
//! lower/upper tracks gives an enclosure no matter how the rounding fell.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::interval::RationalInterval;

fn big_ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `atanh(num/den)` for `0 ≤ num/den ≤ 1/3`, as scaled integers:
/// `lo/2^prec ≤ atanh ≤ hi/2^prec`.
fn atanh_scaled(num: &BigInt, den: &BigInt, prec: u32) -> (BigInt, BigInt) {
    debug_assert!(!num.is_negative() && num * BigInt::from(3) <= *den);
    let one_scaled: BigInt = BigInt::one() << prec;
    // Stop once the tail bound drops under 2^14 ulps; with prec = bits + 16
    // the final width stays below 2^-bits.
    let tol: BigInt = BigInt::one() << 14;
    let t_lo = (num << prec).div_floor(den);
    let t_hi = (num << prec).div_ceil(den);
    let t_sq_lo = (&t_lo * &t_lo) >> prec;
    let t_sq_hi = (&t_hi * &t_hi + (&one_scaled - 1)) >> prec;

    let mut power_lo = t_lo.clone();
    let mut power_hi = t_hi.clone();
    let mut sum_lo = t_lo;
    let mut sum_hi = t_hi;
    let mut n = 1u64;
    loop {
        power_lo = (&power_lo * &t_sq_lo) >> prec;
        power_hi = (&power_hi * &t_sq_hi + (&one_scaled - 1)) >> prec;
        // Tail bound: sum_{m>=n} t^(2m+1)/(2m+1) <= t^(2n+1)/((2n+1)(1-t^2)),
        // and 1/(1-t^2) <= 9/8 for t <= 1/3.
        let tail = (&power_hi * BigInt::from(9)).div_ceil(&BigInt::from(8 * (2 * n + 1)));
        if tail < tol {
            return (sum_lo, sum_hi + tail + 1);
        }
        let odd = BigInt::from(2 * n + 1);
        sum_lo += power_lo.div_floor(&odd);
        sum_hi += power_hi.div_ceil(&odd);
        n += 1;
    }
}

/// `atanh(t)` for an exact `t ∈ [0, 1/3]`, to roughly `2^-bits` width.
fn atanh_enclosure(t: &BigRational, bits: u32) -> RationalInterval {
    assert!(!t.is_negative() && t <= &big_ratio(1, 3));
    let prec = bits + 16;
    let (lo, hi) = atanh_scaled(t.numer(), t.denom(), prec);
    let scale = BigInt::one() << prec;
    RationalInterval::new(
        BigRational::new(lo, scale.clone()),
        BigRational::new(hi, scale),
    )
}

/// `ln 2` at fixed high precision; valid (just wider than needed) for any
/// caller asking for fewer bits.
pub fn ln2() -> &'static RationalInterval {
    static LN2: OnceLock<RationalInterval> = OnceLock::new();
    LN2.get_or_init(|| atanh_enclosure(&big_ratio(1, 3), 320).scale(&big_ratio(2, 1)))
}

/// Certified enclosure of `ln x` for an exact rational `x > 0`.
pub fn ln_rational(x: &BigRational, bits: u32) -> RationalInterval {
    assert!(x.is_positive(), "ln needs a positive argument");
    assert!(bits <= 300, "ln2 cache is 320 bits");
    let mut m: i64 = x.numer().bits() as i64 - x.denom().bits() as i64;
    let two = big_ratio(2, 1);
    let mut y = if m >= 0 {
        x / BigRational::from_integer(BigInt::from(BigUint::one() << m as u64))
    } else {
        x * BigRational::from_integer(BigInt::from(BigUint::one() << (-m) as u64))
    };
    while y < BigRational::one() {
        y *= &two;
        m -= 1;
    }
    while y >= two {
        y /= &two;
        m += 1;
    }
    let t = (&y - BigRational::one()) / (&y + BigRational::one());
    let series = atanh_enclosure(&t, bits).scale(&two);
    ln2().scale_int(&BigInt::from(m)).add(&series)
}

/// `[ln lo, ln hi]` outward for a positive interval.
pub fn ln_interval(x: &RationalInterval, bits: u32) -> RationalInterval {
    assert!(x.lo().is_positive());
    let lo = ln_rational(x.lo(), bits);
    let hi = ln_rational(x.hi(), bits);
    RationalInterval::new(lo.lo().clone(), hi.hi().clone())
}

/// Enclosure of `sqrt r` for an exact rational `r ≥ 0`, via the integer
/// square root of `num·den·4^bits`.
pub fn sqrt_rational(r: &BigRational, bits: u32) -> RationalInterval {
    assert!(!r.is_negative());
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let scaled = (num * den) << (2 * bits as u64);
    let root = scaled.sqrt();
    let scale = BigInt::from(den * (BigUint::one() << bits));
    let lo = BigRational::new(BigInt::from(root.clone()), scale.clone());
    let hi = BigRational::new(BigInt::from(root + BigUint::one()), scale);
    RationalInterval::new(lo, hi)
}

/// `[sqrt lo, sqrt hi]` outward for a non-negative interval.
pub fn sqrt_interval(x: &RationalInterval, bits: u32) -> RationalInterval {
    assert!(!x.lo().is_negative());
    let lo = sqrt_rational(x.lo(), bits);
    let hi = sqrt_rational(x.hi(), bits);
    RationalInterval::new(lo.lo().clone(), hi.hi().clone())
}

/// Enclosure of `ln(ln q) / sqrt(ln q)`, the weight a product `q·|qα-η-r|`
/// is normalized by. Requires `q ≥ 16` so the numerator is positive.
pub fn normalization_factor(q: u64, bits: u32) -> RationalInterval {
    assert!(q >= 16, "normalization needs ln ln q > 0");
    let ln_q = ln_rational(&BigRational::from_integer(q.into()), bits).coarsen(bits + 8);
    let ln_ln_q = ln_interval(&ln_q, bits);
    let sqrt_ln_q = sqrt_interval(&ln_q, bits);
    ln_ln_q.div(&sqrt_ln_q).coarsen(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rational_to_f64;
    use num_traits::Zero;
    use proptest::prelude::*;

    #[test]
    fn ln_one_is_zero() {
        let z = ln_rational(&BigRational::one(), 64);
        assert!(z.contains(&BigRational::zero()));
        assert!(z.width() < big_ratio(1, 1 << 40));
    }

    #[test]
    fn ln_two_matches_reference_digits() {
        // ln 2 = 0.6931471805599453094...
        let l = ln2();
        let digits = l.common_decimal_prefix(18);
        assert!(digits.starts_with("0.693147180559945309"), "{digits}");
    }

    #[test]
    fn ln_powers_of_two_are_multiples_of_ln2() {
        let l1024 = ln_rational(&big_ratio(1024, 1), 128);
        let ten_ln2 = ln2().scale(&big_ratio(10, 1));
        assert!(l1024.contains(&ten_ln2.midpoint()));
        let l_inv = ln_rational(&big_ratio(1, 1024), 128);
        assert!(l_inv.contains(&ten_ln2.neg().midpoint()));
    }

    #[test]
    fn sqrt_four_contains_two() {
        let s = sqrt_rational(&big_ratio(4, 1), 64);
        assert!(s.contains(&big_ratio(2, 1)));
        assert!(s.width() < big_ratio(1, 1 << 60));
    }

    #[test]
    fn normalization_factor_at_hundred_and_one() {
        // ln 101 = 4.6151..., ln ln 101 = 1.5294..., sqrt(ln 101) = 2.1483...
        let f = normalization_factor(101, 128);
        let approx = rational_to_f64(&f.midpoint());
        let expect = (101f64).ln().ln() / (101f64).ln().sqrt();
        assert!((approx - expect).abs() < 1e-9, "{approx} vs {expect}");
        assert!(f.width() < BigRational::new(BigInt::one(), BigInt::from(BigUint::one() << 100)));
    }

    proptest! {
        #[test]
        fn ln_encloses_f64_reference(n in 1i64..2_000_000, d in 1i64..2_000_000) {
            let x = big_ratio(n, d);
            let enc = ln_rational(&x, 96);
            let reference = (n as f64 / d as f64).ln();
            let mid = rational_to_f64(&enc.midpoint());
            prop_assert!((mid - reference).abs() < 1e-9);
            prop_assert!(enc.width() < big_ratio(1, 1 << 62));
        }

        #[test]
        fn ln_is_additive_over_products(a in 2i64..5000, b in 2i64..5000) {
            let la = ln_rational(&big_ratio(a, 1), 96);
            let lb = ln_rational(&big_ratio(b, 1), 96);
            let lab = ln_rational(&big_ratio(a * b, 1), 96);
            // ln(ab) must land inside the (slightly wider) sum enclosure.
            let sum = la.add(&lb);
            prop_assert!(sum.hull(&lab).width() <= sum.width() + lab.width());
            prop_assert!(lab.lo() <= sum.hi() && sum.lo() <= lab.hi());
        }

        #[test]
        fn sqrt_squared_contains_argument(n in 0i64..1_000_000, d in 1i64..1000) {
            let x = big_ratio(n, d);
            let s = sqrt_rational(&x, 80);
            prop_assert!(s.mul(&s).contains(&x));
        }
    }
}
