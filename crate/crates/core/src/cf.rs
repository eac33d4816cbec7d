//! The scheduled continued fraction: partial quotients `a_{k+1} = W_k · P_{⌊k/2⌋+1}`,
//! exact convergent vectors `e_k = (v_k, u_k)`, and rational enclosures of the
//! limit value α.
//!
//! Taking each quotient equal to its floor makes both schedule laws hold at
//! once: divisibility by `P_{⌊k/2⌋}` comes for free from `P_{⌊k/2⌋} | P_{⌊k/2⌋+1}`,
//! and the growth requirement holds with equality.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::RationalInterval;
use crate::omega::PrimeArrangement;
use crate::serde_util::biguint_string_vec;
use crate::transcend::ln_rational;

/// Growth factors `W_k` for the quotient schedule. Must be integer,
/// nondecreasing, unbounded, and at least 5 everywhere (smaller values would
/// kill the positive coefficient in the lower sandwich bound).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WPolicy {
    /// `W_k = k + offset`.
    Linear { offset: u64 },
}

impl WPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            WPolicy::Linear { offset } if *offset < 5 => Err(Error::InvalidPolicy(format!(
                "W_0 = {offset} < 5 breaks the lower sandwich coefficient"
            ))),
            _ => Ok(()),
        }
    }

    pub fn w(&self, k: usize) -> u64 {
        match self {
            WPolicy::Linear { offset } => k as u64 + offset,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            WPolicy::Linear { offset } => format!("k+{offset}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let body = s.trim();
        let offset = body
            .strip_prefix("k+")
            .and_then(|t| t.parse::<u64>().ok())
            .ok_or_else(|| Error::InvalidPolicy(format!("cannot parse W policy {body:?}, expected k+N")))?;
        let policy = WPolicy::Linear { offset };
        policy.validate()?;
        Ok(policy)
    }
}

/// The partial quotients `a_1 .. a_K` with their growth factors and the
/// realized growth-rate certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientSchedule {
    pub a0: i64,
    #[serde(with = "biguint_string_vec")]
    pub a: Vec<BigUint>,
    pub w: Vec<u64>,
    /// Enclosure of `max_{2 ≤ k ≤ K} ln(a_k) / (k (ln k)²)`: the smallest
    /// exponent constant this schedule realizes. Finite and positive.
    pub gamma_min: RationalInterval,
}

impl QuotientSchedule {
    pub fn depth(&self) -> usize {
        self.a.len()
    }

    /// `a_k`, `1 ≤ k ≤ K`.
    pub fn quotient(&self, k: usize) -> &BigUint {
        &self.a[k - 1]
    }

    /// `W_k`, `0 ≤ k < K`.
    pub fn growth_factor(&self, k: usize) -> u64 {
        self.w[k]
    }
}

/// Builds the schedule to depth `K ≥ 2`: `a_{k+1} = W_k · P_{⌊k/2⌋+1}`.
pub fn build_schedule(arr: &PrimeArrangement, depth: usize, policy: WPolicy) -> Result<QuotientSchedule> {
    assert!(depth >= 2, "schedule depth must be at least 2");
    policy.validate()?;
    let needed_shell = (depth - 1) / 2 + 1;
    if needed_shell > arr.max_shell {
        return Err(Error::ShellOutOfRange {
            k: needed_shell,
            max: arr.max_shell,
        });
    }
    let mut a = Vec::with_capacity(depth);
    let mut w = Vec::with_capacity(depth);
    for k in 0..depth {
        let w_k = policy.w(k);
        if w_k < 5 {
            return Err(Error::InvalidPolicy(format!("W_{k} = {w_k} < 5")));
        }
        if k > 0 && w_k < w[k - 1] {
            return Err(Error::InvalidPolicy(format!("W_{k} decreased")));
        }
        a.push(arr.primorial(k / 2 + 1)? * w_k);
        w.push(w_k);
    }
    let gamma_min = realized_gamma(&a);
    Ok(QuotientSchedule {
        a0: 0,
        a,
        w,
        gamma_min,
    })
}

/// Enclosure of `max_{k ≥ 2} ln(a_k)/(k (ln k)²)`. The `k = 1` term is
/// excluded: `ln 1 = 0` makes the bound vacuous there, and the maximum over
/// `k ≥ 2` is the meaningful realized constant.
fn realized_gamma(a: &[BigUint]) -> RationalInterval {
    let mut best: Option<RationalInterval> = None;
    for (ratio, _) in gamma_ratios(a) {
        best = Some(match best {
            None => ratio,
            Some(prev) => RationalInterval::new(
                prev.lo().clone().max(ratio.lo().clone()),
                prev.hi().clone().max(ratio.hi().clone()),
            ),
        });
    }
    best.expect("schedule depth >= 2")
}

/// The per-level ratios `ln(a_k)/(k (ln k)²)` for `k = 2..K`, as enclosures.
pub fn gamma_ratios(a: &[BigUint]) -> Vec<(RationalInterval, usize)> {
    let mut out = Vec::new();
    for (idx, a_k) in a.iter().enumerate().skip(1) {
        let k = idx + 1;
        let ln_a = ln_rational(&BigRational::from_integer(BigInt::from(a_k.clone())), 96);
        let ln_k = ln_rational(&BigRational::from_integer(k.into()), 96);
        let denom = ln_k
            .mul(&ln_k)
            .scale(&BigRational::from_integer(k.into()));
        out.push((ln_a.div(&denom).coarsen(96), k));
    }
    out
}

/// Convergent vectors `e_k = (v_k, u_k)`, stored for `k = -1, 0, 1, ..`
/// with the recursion seeds `e_{-1} = (0, 1)` and `e_0 = (1, a_0)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergentSeq {
    /// `e[k + 1] = e_k`; each entry is `(v, u)` as decimal strings.
    pub e: Vec<(String, String)>,
    #[serde(skip)]
    cache: Vec<(BigInt, BigInt)>,
}

impl ConvergentSeq {
    fn from_cache(cache: Vec<(BigInt, BigInt)>) -> Self {
        let e = cache
            .iter()
            .map(|(v, u)| (v.to_string(), u.to_string()))
            .collect();
        Self { e, cache }
    }

    /// Rebuilds the integer cache after deserialization.
    pub fn rehydrate(&mut self) -> Result<()> {
        self.cache = self
            .e
            .iter()
            .map(|(v, u)| {
                Ok((
                    v.parse().map_err(|_| Error::Parse("bad convergent".into()))?,
                    u.parse().map_err(|_| Error::Parse("bad convergent".into()))?,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Highest index `K` such that `e_K` is known.
    pub fn depth(&self) -> usize {
        self.cache.len() - 2
    }

    /// `e_k` for `k ≥ -1`.
    pub fn e(&self, k: isize) -> &(BigInt, BigInt) {
        &self.cache[(k + 1) as usize]
    }

    /// Denominator `v_k`.
    pub fn v(&self, k: isize) -> &BigInt {
        &self.e(k).0
    }

    /// Numerator `u_k`.
    pub fn u(&self, k: isize) -> &BigInt {
        &self.e(k).1
    }
}

/// Runs the exact recursion `e_{k+1} = a_{k+1} e_k + e_{k-1}` to depth `K`.
pub fn convergents(schedule: &QuotientSchedule, depth: usize) -> ConvergentSeq {
    assert!(depth <= schedule.depth(), "schedule too short");
    let mut cache: Vec<(BigInt, BigInt)> = Vec::with_capacity(depth + 2);
    cache.push((BigInt::zero(), BigInt::one()));
    cache.push((BigInt::one(), BigInt::from(schedule.a0)));
    for k in 1..=depth {
        let a_k = BigInt::from(schedule.quotient(k).clone());
        let (v1, u1) = cache[k].clone();
        let (v0, u0) = cache[k - 1].clone();
        cache.push((&a_k * v1 + v0, &a_k * u1 + u0));
    }
    ConvergentSeq::from_cache(cache)
}

/// Enclosure of α between the consecutive convergents `u_k/v_k` and
/// `u_{k+1}/v_{k+1}`; exact width `1/(v_k v_{k+1})`.
pub fn alpha_enclosure(seq: &ConvergentSeq, k: usize) -> Result<RationalInterval> {
    if k + 1 > seq.depth() {
        return Err(Error::DepthExhausted {
            needed: format!("convergent e_{}", k + 1),
            depth: seq.depth(),
        });
    }
    let a = BigRational::new(seq.u(k as isize).clone(), seq.v(k as isize).clone());
    let b = BigRational::new(seq.u(k as isize + 1).clone(), seq.v(k as isize + 1).clone());
    Ok(if a <= b {
        RationalInterval::new(a, b)
    } else {
        RationalInterval::new(b, a)
    })
}

/// All convergent-sequence laws at once: the determinant alternates as
/// `v_k u_{k-1} - v_{k-1} u_k = (-1)^k`, entries are coprime, denominators
/// grow strictly and at least like powers of the golden ratio.
pub fn verify_convergents(seq: &ConvergentSeq) -> Result<()> {
    let depth = seq.depth();
    for k in 0..=depth {
        let ki = k as isize;
        let det = seq.v(ki) * seq.u(ki - 1) - seq.v(ki - 1) * seq.u(ki);
        let expected = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        if det != expected {
            return Err(Error::soundness("(qqq)", k, format!("determinant {det}")));
        }
        if !seq.v(ki).gcd(seq.u(ki)).is_one() {
            return Err(Error::soundness("(qqq)", k, "convergent not in lowest terms"));
        }
        if k >= 1 {
            if seq.v(ki) <= seq.v(ki - 1) {
                return Err(Error::soundness("(qqq)", k, "denominators must increase"));
            }
            // v_k >= φ^{k-1}, certified through the rational upper bound
            // φ < 1618035/1000000.
            let phi_hi_num = BigInt::from(1_618_035u64);
            let scale = BigInt::from(1_000_000u64);
            let lhs = seq.v(ki) * scale.pow(k as u32 - 1);
            let rhs = phi_hi_num.pow(k as u32 - 1);
            if lhs < rhs {
                return Err(Error::soundness("(qqq)", k, "denominator below golden-ratio floor"));
            }
        }
    }
    Ok(())
}

/// Schedule laws against the arrangement's own primorials, exactly:
/// `P_{⌊k/2⌋} | a_{k+1}` and `a_{k+1} ≥ W_k · P_{⌊k/2⌋+1}`.
pub fn verify_schedule(arr: &PrimeArrangement, schedule: &QuotientSchedule) -> Result<()> {
    for k in 0..schedule.depth() {
        let a_next = schedule.quotient(k + 1);
        let modulus = arr.primorial(k / 2)?;
        if !(a_next % &modulus).is_zero() {
            return Err(Error::soundness("(pe)", k, format!("a_{} not divisible", k + 1)));
        }
        let floor = arr.primorial(k / 2 + 1)? * schedule.growth_factor(k);
        if a_next < &floor {
            return Err(Error::soundness("(boo)", k, format!("a_{} below growth floor", k + 1)));
        }
        if schedule.growth_factor(k) < 5 || (k > 0 && schedule.growth_factor(k) < schedule.growth_factor(k - 1)) {
            return Err(Error::soundness("(boo)", k, "growth factors must be nondecreasing and at least 5"));
        }
    }
    Ok(())
}
