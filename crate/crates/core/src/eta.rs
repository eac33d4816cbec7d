//! Certified enclosures of `η = lim_k (b_k·α - c_k)`.
//!
//! Consecutive partial values straddle the limit: the residuals
//! `η - (b_k·α - c_k)` alternate in sign and shrink strictly. So the convex
//! hull of interval evaluations of two consecutive partial values encloses η,
//! and every claim about η downstream is checked against such hulls — η is
//! never collapsed to a single rational anywhere in the crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::cf::alpha_enclosure;
use crate::error::{Error, Result};
use crate::interval::{Certainty, RationalInterval};
use crate::lattice::{LatticeContext, LevelRecord};

/// Interval enclosure of η obtained from levels `k` and `k+1`.
#[derive(Debug, Clone)]
pub struct EtaEnclosure {
    pub level: usize,
    pub alpha_depth: usize,
    pub interval: RationalInterval,
    /// The partial point `(b_k, c_k)` the enclosure hangs off.
    pub point: (BigInt, BigInt),
}

/// Interval value of the partial `b_k·α - c_k`.
pub fn partial_value(
    levels: &[LevelRecord],
    alpha: &RationalInterval,
    k: usize,
) -> RationalInterval {
    let record = &levels[k];
    alpha
        .scale_int(&record.point.0)
        .shift(&BigRational::from_integer(-record.point.1.clone()))
}

/// Default α depth for a level-`k` η enclosure: four levels deeper, clamped
/// to what the state knows. The α slop is then negligible against `1/v_k`.
pub fn default_alpha_depth(ctx: &LatticeContext, k: usize) -> usize {
    (k + 4).min(ctx.seq.depth() - 1)
}

/// Hull of the interval evaluations of two consecutive partial values.
/// Valid because η always lies strictly between the true partial values.
///
/// Errors with `Precision` when the α slop drowns the separation between the
/// two levels — the hull would still contain η but be useless downstream.
pub fn eta_enclosure(
    ctx: &LatticeContext,
    levels: &[LevelRecord],
    k: usize,
    alpha_depth: usize,
) -> Result<EtaEnclosure> {
    if k + 1 >= levels.len() {
        return Err(Error::DepthExhausted {
            needed: format!("levels {k} and {}", k + 1),
            depth: levels.len().saturating_sub(1),
        });
    }
    // Separating levels k and k+1 needs α at depth k+1 or more: the slop on
    // the level-(k+1) partial value is b_{k+1}·(α width), which only drops
    // below the separation 1/(2v_k) once the α denominators outgrow v_{k+1}.
    if alpha_depth < k + 1 {
        return Err(Error::Precision(format!(
            "α depth {alpha_depth} too shallow to separate levels {k} and {}",
            k + 1
        )));
    }
    let alpha = alpha_enclosure(ctx.seq, alpha_depth)?;
    let s_k = partial_value(levels, &alpha, k);
    let s_next = partial_value(levels, &alpha, k + 1);
    if s_k.lt(&s_next) == Certainty::Unknown && s_next.lt(&s_k) == Certainty::Unknown {
        return Err(Error::Precision(format!(
            "α depth {alpha_depth} cannot separate levels {k} and {}",
            k + 1
        )));
    }
    Ok(EtaEnclosure {
        level: k,
        alpha_depth,
        interval: s_k.hull(&s_next),
        point: levels[k].point.clone(),
    })
}

/// Residual `η - (b_k·α - c_k)` as an interval, with η enclosed from a
/// strictly deeper pair of levels so the residual keeps a definite sign.
pub fn residual(
    ctx: &LatticeContext,
    levels: &[LevelRecord],
    k: usize,
    eta: &EtaEnclosure,
) -> Result<RationalInterval> {
    assert!(eta.level > k, "η enclosure must come from deeper levels");
    let alpha = alpha_enclosure(ctx.seq, eta.alpha_depth)?;
    Ok(eta.interval.sub(&partial_value(levels, &alpha, k)))
}

/// The two-sided sandwich at level `k`, certified by intervals:
/// `(1/2 - 2/W_k)/v_k < |η - (b_k·α - c_k)| < (1/2 + 1/(2W_k))/v_k`.
///
/// `Unknown` means the enclosures were too coarse, not that the claim is
/// false; callers deepen and retry.
pub fn sandwich_check(
    ctx: &LatticeContext,
    levels: &[LevelRecord],
    k: usize,
    alpha_depth: usize,
) -> Result<Certainty> {
    let eta = eta_enclosure(ctx, levels, k + 1, alpha_depth)?;
    let r = residual(ctx, levels, k, &eta)?.abs();
    let w_k = BigRational::from_integer(ctx.schedule.growth_factor(k).into());
    let v_k = BigRational::from_integer(ctx.seq.v(k as isize).clone());
    let half = BigRational::new(BigInt::one(), 2.into());
    let lower = (&half - BigRational::from_integer(2.into()) / &w_k) / &v_k;
    let upper = (&half + BigRational::one() / (BigRational::from_integer(2.into()) * &w_k)) / &v_k;
    let above = r.gt_rational(&lower);
    let below = r.lt_rational(&upper);
    Ok(match (above, below) {
        (Certainty::True, Certainty::True) => Certainty::True,
        (Certainty::False, _) | (_, Certainty::False) => Certainty::False,
        _ => Certainty::Unknown,
    })
}

/// `sandwich_check` with automatic deepening of the α depth up to the
/// state's cap when the comparison comes back `Unknown`.
pub fn sandwich_check_auto(
    ctx: &LatticeContext,
    levels: &[LevelRecord],
    k: usize,
) -> Result<Certainty> {
    let mut depth = default_alpha_depth(ctx, k + 1);
    loop {
        match sandwich_check(ctx, levels, k, depth)? {
            Certainty::Unknown if depth < ctx.seq.depth() - 1 => depth += 1,
            decided => return Ok(decided),
        }
    }
}

/// Certifies, for `k` in `lo..=hi`, that consecutive residuals have opposite
/// definite signs, that their magnitudes strictly decrease, and that the
/// companion point `(b_{k+1} - v_k, c_{k+1} - u_k)` leaves the residual sign
/// unchanged.
pub fn verify_residual_signs(
    ctx: &LatticeContext,
    levels: &[LevelRecord],
    lo: usize,
    hi: usize,
) -> Result<()> {
    for k in lo..=hi {
        let alpha_depth = default_alpha_depth(ctx, k + 2);
        let eta = eta_enclosure(ctx, levels, k + 2, alpha_depth).map_err(|_| {
            Error::DepthExhausted {
                needed: format!("levels through {}", k + 3),
                depth: levels.len().saturating_sub(1),
            }
        })?;
        let r_k = residual(ctx, levels, k, &eta)?;
        let r_next = residual(ctx, levels, k + 1, &eta)?;
        let s_k = r_k.sign().ok_or_else(|| {
            Error::Precision(format!("residual sign at level {k} undecided"))
        })?;
        let s_next = r_next.sign().ok_or_else(|| {
            Error::Precision(format!("residual sign at level {} undecided", k + 1))
        })?;
        if s_k == s_next {
            return Err(Error::soundness("(eta)", k, "consecutive residuals share a sign"));
        }
        if r_next.abs().lt(&r_k.abs()) != Certainty::True {
            return Err(Error::soundness("(eta)", k, "residual magnitudes fail to decrease"));
        }
        // Companion point: drop one copy of e_k from level k+1.
        let alpha = alpha_enclosure(ctx.seq, eta.alpha_depth)?;
        let b = &levels[k + 1].point.0 - ctx.seq.v(k as isize);
        let c = &levels[k + 1].point.1 - ctx.seq.u(k as isize);
        let companion_value = alpha
            .scale_int(&b)
            .shift(&BigRational::from_integer(-c));
        let companion = eta.interval.sub(&companion_value);
        let s_comp = companion.sign().ok_or_else(|| {
            Error::Precision(format!("companion sign at level {k} undecided"))
        })?;
        if s_comp != s_k {
            return Err(Error::soundness("(eta)", k, "companion point flips the residual sign"));
        }
    }
    Ok(())
}

/// Certifies that the series terms `P_{⌊(j-1)/2⌋}·λ_j·|v_{j-1}α - u_{j-1}|`
/// strictly decrease for `j = 1 .. levels.len()-1`.
pub fn verify_summand_decay(ctx: &LatticeContext, levels: &[LevelRecord]) -> Result<()> {
    let top = ctx.seq.depth() - 1;
    let alpha = alpha_enclosure(ctx.seq, top)?;
    let mut prev: Option<RationalInterval> = None;
    for (j, record) in levels.iter().enumerate() {
        let Some(lambda) = &record.next_lambda else { break };
        // Term j+1 of the series, driven by level j's outgoing multiplier.
        let coef = BigInt::from(ctx.primorials.p(j / 2).clone()) * BigInt::from(lambda.clone());
        let ji = j as isize;
        let tail = alpha
            .scale_int(ctx.seq.v(ji))
            .shift(&BigRational::from_integer(-ctx.seq.u(ji).clone()))
            .abs();
        let term = tail.scale_int(&coef);
        if let Some(p) = prev {
            if term.lt(&p) != Certainty::True {
                return Err(Error::soundness(
                    "(eta)",
                    j,
                    "series terms fail to decrease strictly",
                ));
            }
        }
        prev = Some(term);
    }
    Ok(())
}

/// Decimal digits certified by an enclosure, or the enclosure itself when
/// its endpoints straddle a decimal boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DigitString {
    Decimal(String),
    Straddle(RationalInterval),
}

impl std::fmt::Display for DigitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DigitString::Decimal(s) => write!(f, "{s}"),
            DigitString::Straddle(i) => write!(f, "{i}"),
        }
    }
}

/// Certified decimal digits of α and η.
#[derive(Debug, Clone)]
pub struct CertifiedDigits {
    pub alpha: DigitString,
    pub eta: DigitString,
    pub alpha_depth: usize,
    pub eta_level: usize,
}

fn digits_from_interval(interval: &RationalInterval, n: usize) -> DigitString {
    let prefix = interval.common_decimal_prefix(n);
    let frac_len = prefix.split_once('.').map(|(_, f)| f.len()).unwrap_or(0);
    if frac_len >= n {
        DigitString::Decimal(prefix)
    } else {
        DigitString::Straddle(interval.clone())
    }
}

/// Picks depths with enclosure width below `10^-(n+2)` and emits `n`
/// guaranteed fractional digits of α and of η (or the straddling interval).
pub fn certified_digits(
    ctx: &LatticeContext,
    levels: &[LevelRecord],
    n: usize,
) -> Result<CertifiedDigits> {
    assert!(n >= 1);
    let tolerance = BigRational::new(BigInt::one(), BigInt::from(10u32).pow(n as u32 + 2));

    let alpha_depth = (0..ctx.seq.depth())
        .find(|&d| {
            alpha_enclosure(ctx.seq, d)
                .map(|a| a.width() < tolerance)
                .unwrap_or(false)
        })
        .ok_or(Error::DepthExhausted {
            needed: format!("α enclosure narrower than 10^-{}", n + 2),
            depth: ctx.seq.depth(),
        })?;
    let alpha = alpha_enclosure(ctx.seq, alpha_depth)?;

    let mut eta_choice = None;
    for k in 1..levels.len().saturating_sub(1) {
        let enclosure = eta_enclosure(ctx, levels, k, default_alpha_depth(ctx, k))?;
        if enclosure.interval.width() < tolerance {
            eta_choice = Some(enclosure);
            break;
        }
    }
    let eta = eta_choice.ok_or(Error::DepthExhausted {
        needed: format!("η enclosure narrower than 10^-{}", n + 2),
        depth: levels.len().saturating_sub(1),
    })?;
    if eta.interval.lo().is_negative() {
        return Err(Error::Precision("η enclosure must be positive for digit emission".into()));
    }

    Ok(CertifiedDigits {
        alpha: digits_from_interval(&alpha, n),
        eta: digits_from_interval(&eta.interval, n),
        alpha_depth,
        eta_level: eta.level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{build_schedule, convergents, WPolicy};
    use crate::grid::solve_crt_pair;
    use crate::lattice::build_levels;
    use crate::omega::{arrange_primes, PermutationPolicy};

    struct Fixture {
        primorials: crate::omega::Primorials,
        pairs: Vec<crate::grid::CrtPair>,
        schedule: crate::cf::QuotientSchedule,
        seq: crate::cf::ConvergentSeq,
    }

    impl Fixture {
        fn new(depth: usize) -> Self {
            let max_shell = depth / 2 + 1;
            let arr = arrange_primes(max_shell, PermutationPolicy::Canonical);
            let primorials = arr.primorials();
            let pairs = (0..=max_shell)
                .map(|k| solve_crt_pair(&arr, k).unwrap())
                .collect();
            let schedule = build_schedule(&arr, depth, WPolicy::Linear { offset: 5 }).unwrap();
            let seq = convergents(&schedule, depth);
            Self { primorials, pairs, schedule, seq }
        }

        fn ctx(&self) -> LatticeContext<'_> {
            LatticeContext {
                primorials: &self.primorials,
                pairs: &self.pairs,
                schedule: &self.schedule,
                seq: &self.seq,
            }
        }
    }

    #[test]
    fn enclosures_nest_and_shrink() {
        let fx = Fixture::new(6);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 6).unwrap();
        let mut prev: Option<EtaEnclosure> = None;
        for k in 0..=4usize {
            let enc = eta_enclosure(&ctx, &levels, k, default_alpha_depth(&ctx, k)).unwrap();
            if let Some(p) = prev {
                assert!(
                    p.interval.contains_interval(&enc.interval),
                    "level {k} does not nest"
                );
                // Shrink is at least geometric, driven by v_{k+1}/v_k ≥ a_{k+1}:
                // width_k ≥ (1/2 - 2/W_k)/v_k while width_{k+1} ≤ 0.6/v_{k+1},
                // so the ratio beats a_{k+1}/6.
                let a_next = BigRational::from_integer(BigInt::from(
                    ctx.schedule.quotient(k).clone(),
                ));
                assert!(
                    enc.interval.width() * a_next
                        <= p.interval.width() * BigRational::from_integer(6.into()),
                    "level {k} shrinks too slowly"
                );
            }
            prev = Some(enc);
        }
    }

    #[test]
    fn width_obeys_the_upper_sandwich_plus_slop() {
        let fx = Fixture::new(6);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 6).unwrap();
        for k in 1..=4usize {
            let depth = default_alpha_depth(&ctx, k);
            let alpha = alpha_enclosure(ctx.seq, depth).unwrap();
            let enc = eta_enclosure(&ctx, &levels, k, depth).unwrap();
            let w_k = BigRational::from_integer(ctx.schedule.growth_factor(k).into());
            let v_k = BigRational::from_integer(ctx.seq.v(k as isize).clone());
            let half = BigRational::new(BigInt::one(), 2.into());
            let slop = alpha.width()
                * BigRational::from_integer(&levels[k].point.0 + &levels[k + 1].point.0);
            let bound = (&half + BigRational::one() / (BigRational::from_integer(2.into()) * w_k))
                / v_k
                + slop;
            assert!(enc.interval.width() <= bound, "level {k}");
        }
    }

    #[test]
    fn sandwich_certifies_at_level_three() {
        let fx = Fixture::new(6);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 6).unwrap();
        assert_eq!(sandwich_check_auto(&ctx, &levels, 3).unwrap(), Certainty::True);
        for k in 0..=3usize {
            assert_eq!(
                sandwich_check_auto(&ctx, &levels, k).unwrap(),
                Certainty::True,
                "level {k}"
            );
        }
    }

    #[test]
    fn residual_signs_alternate_and_decay() {
        let fx = Fixture::new(7);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 7).unwrap();
        verify_residual_signs(&ctx, &levels, 0, 3).unwrap();
        verify_summand_decay(&ctx, &levels).unwrap();
    }

    #[test]
    fn digits_are_stable_under_deepening() {
        let fx = Fixture::new(6);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 6).unwrap();
        let d8 = certified_digits(&ctx, &levels, 8).unwrap();
        let d16 = certified_digits(&ctx, &levels, 16).unwrap();
        match (&d8.alpha, &d16.alpha) {
            (DigitString::Decimal(a), DigitString::Decimal(b)) => {
                assert!(b.starts_with(a), "{b} vs {a}");
                assert!(a.starts_with("0."));
            }
            other => panic!("expected plain digits, got {other:?}"),
        }
        match (&d8.eta, &d16.eta) {
            (DigitString::Decimal(a), DigitString::Decimal(b)) => {
                assert!(b.starts_with(a), "{b} vs {a}");
            }
            other => panic!("expected plain digits, got {other:?}"),
        }
    }

    #[test]
    fn digit_depth_exhaustion_is_reported() {
        let fx = Fixture::new(4);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 4).unwrap();
        // Demands far more digits than a depth-4 build can certify.
        match certified_digits(&ctx, &levels, 4000) {
            Err(Error::DepthExhausted { .. }) => {}
            other => panic!("expected depth exhaustion, got {other:?}"),
        }
    }
}
