//! Recursive lattice points `𝔷_k = (b_k, c_k)`.
//!
//! Level `k` lives in the affine lattice spanned by the convergent basis
//! `(e_{k-1}, e_k)` whose coordinates are pinned, modulo primorials, to the
//! CRT grid pair of shell `⌊k/2⌋` (parity decides which of the pair lands on
//! which coordinate). Each step adds `P_l·λ_{k+1}·e_k`; the multiplier is
//! first selected as a residue class so the next level's congruences hold,
//! then rounded so the step stays balanced around `a_{k+1}/(2P_l)` — that
//! balance is what later pins `b_k` near `v_k/2`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cf::{ConvergentSeq, QuotientSchedule};
use crate::error::{Error, Result};
use crate::grid::CrtPair;
use crate::interval::nearest_half_down;
use crate::omega::{omega_set, IndexPair, Primorials};
use crate::serde_util::{bigint_pair_string, biguint_string_opt};

/// Everything the level recursion reads; immutable while building.
pub struct LatticeContext<'a> {
    pub primorials: &'a Primorials,
    pub pairs: &'a [CrtPair],
    pub schedule: &'a QuotientSchedule,
    pub seq: &'a ConvergentSeq,
}

/// One constructed level: the point, its coordinates in the convergent
/// basis, and the multipliers that produce the next level (absent on the
/// deepest level).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub k: usize,
    /// `⌊k/2⌋`; the shell whose primorial drives the outgoing step.
    pub l: usize,
    /// `(b_k, c_k)`.
    #[serde(with = "bigint_pair_string")]
    pub point: (BigInt, BigInt),
    /// Coordinates `(𝔛_k, 𝔜_k)` of the point in the basis `(e_{k-1}, e_k)`.
    #[serde(with = "bigint_pair_string")]
    pub frak: (BigInt, BigInt),
    /// Residue representative `λ*_{k+1} ∈ {1..Q_{l+1}}`.
    #[serde(with = "biguint_string_opt")]
    pub next_lambda_star: Option<BigUint>,
    /// Full multiplier `λ_{k+1} ≡ λ*_{k+1} (mod Q_{l+1})`, `λ_{k+1} ≥ 1`.
    #[serde(with = "biguint_string_opt")]
    pub next_lambda: Option<BigUint>,
}

/// One completed construction step.
pub struct Extension {
    pub lambda_star: BigUint,
    pub lambda: BigUint,
    pub next: LevelRecord,
}

/// Residue constraints a level's basis coordinates must satisfy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineLatticeSpec {
    pub k: usize,
    pub x_residue: BigInt,
    pub x_modulus: BigInt,
    pub y_residue: BigInt,
    pub y_modulus: BigInt,
}

/// Decomposes `z = x·e_{k-1} + y·e_k`; exact because the basis is unimodular.
pub fn frak_coords(z: &(BigInt, BigInt), seq: &ConvergentSeq, k: usize) -> (BigInt, BigInt) {
    let ki = k as isize;
    let (f_v, f_u) = seq.e(ki - 1);
    let (g_v, g_u) = seq.e(ki);
    let det = f_v * g_u - f_u * g_v;
    debug_assert!(det.clone().abs().is_one());
    let x = (&z.0 * g_u - &z.1 * g_v) / &det;
    let y = (f_v * &z.1 - f_u * &z.0) / &det;
    (x, y)
}

/// Membership of `z` in the affine lattice spanned by arbitrary non-collinear
/// `f, g` with the given residue constraints on the coordinates.
pub fn affine_lattice_contains(
    z: &(BigInt, BigInt),
    f: &(BigInt, BigInt),
    g: &(BigInt, BigInt),
    spec: &AffineLatticeSpec,
) -> bool {
    let det = &f.0 * &g.1 - &f.1 * &g.0;
    assert!(!det.is_zero(), "basis vectors must be non-collinear");
    let x_num = &z.0 * &g.1 - &z.1 * &g.0;
    let y_num = &f.0 * &z.1 - &f.1 * &z.0;
    if !(&x_num % &det).is_zero() || !(&y_num % &det).is_zero() {
        return false;
    }
    let x = x_num / &det;
    let y = y_num / det;
    (&x - &spec.x_residue).mod_floor(&spec.x_modulus).is_zero()
        && (&y - &spec.y_residue).mod_floor(&spec.y_modulus).is_zero()
}

impl<'a> LatticeContext<'a> {
    fn p(&self, l: usize) -> BigInt {
        BigInt::from(self.primorials.p(l).clone())
    }

    fn q(&self, l: usize) -> BigInt {
        BigInt::from(self.primorials.q(l).clone())
    }

    /// The grid value the next level's first coordinate must match modulo
    /// `Q_{l+1}` (and then modulo `P_{l+1}`): `Y_{l+1}` after an even level,
    /// `X_{l+1}` after an odd one.
    fn step_target(&self, k: usize) -> BigInt {
        let l = k / 2;
        if k % 2 == 0 {
            BigInt::from(self.pairs[l + 1].y.clone())
        } else {
            BigInt::from(self.pairs[l + 1].x.clone())
        }
    }

    /// Residue constraints for level `k`.
    pub fn spec(&self, k: usize) -> AffineLatticeSpec {
        let l = k / 2;
        if k % 2 == 0 {
            AffineLatticeSpec {
                k,
                x_residue: BigInt::from(self.pairs[l].x.clone()),
                x_modulus: self.p(l),
                y_residue: BigInt::from(self.pairs[l].y.clone()),
                y_modulus: self.p(l),
            }
        } else {
            AffineLatticeSpec {
                k,
                x_residue: BigInt::from(self.pairs[l + 1].y.clone()),
                x_modulus: self.p(l + 1),
                y_residue: BigInt::from(self.pairs[l].x.clone()),
                y_modulus: self.p(l),
            }
        }
    }

    /// Membership of a plane point in the level-`k` lattice.
    pub fn lattice_membership(&self, z: &(BigInt, BigInt), k: usize) -> bool {
        let ki = k as isize;
        affine_lattice_contains(z, self.seq.e(ki - 1), self.seq.e(ki), &self.spec(k))
    }

    /// The unique residue class in `{1..Q_{l+1}}` that makes the stepped
    /// coordinate match the grid target modulo `Q_{l+1}`.
    pub fn select_lambda_star(&self, record: &LevelRecord, k: usize) -> Result<BigUint> {
        let l = k / 2;
        let q_next = self.q(l + 1);
        let p_l = self.p(l);
        let a_next = BigInt::from(self.schedule.quotient(k + 1).clone());
        let target = self.step_target(k);
        let rhs = (&target - &record.frak.1 + &record.frak.0 * &a_next).mod_floor(&q_next);
        let inv = crate::grid::mod_inverse(&p_l, &q_next).ok_or_else(|| {
            Error::soundness("(Q)", k, "primorial not invertible modulo its cofactor")
        })?;
        let residue = (inv * rhs).mod_floor(&q_next);
        let star = if residue.is_zero() { q_next } else { residue };
        Ok(star.to_biguint().expect("residue in {1..Q}"))
    }

    /// Rounds the multiplier into the balanced window:
    /// `λ_{k+1} = λ* + λ·Q_{l+1}` with `λ` the nearest integer (ties down) to
    /// `a_{k+1}/(2P_{l+1}) - λ*/Q_{l+1}`.
    pub fn choose_lambda(&self, lambda_star: &BigUint, k: usize) -> Result<BigUint> {
        let l = k / 2;
        let q_next = self.q(l + 1);
        let p_l = self.p(l);
        let p_next = self.p(l + 1);
        let a_next = BigInt::from(self.schedule.quotient(k + 1).clone());
        let star = BigInt::from(lambda_star.clone());
        let ratio = BigRational::new(a_next.clone(), 2 * &p_next)
            - BigRational::new(star.clone(), q_next.clone());
        let rounds = nearest_half_down(&ratio);
        let lambda = &star + rounds * &q_next;
        // |λ_{k+1} - a_{k+1}/(2P_l)| ≤ Q_{l+1}/2, in integer form.
        let deviation = (BigInt::from(2) * &p_l * &lambda - &a_next).abs();
        if deviation > p_next {
            return Err(Error::soundness(
                "(bound)",
                k,
                format!("multiplier deviation {deviation} exceeds half-window"),
            ));
        }
        if lambda < BigInt::one() {
            return Err(Error::soundness("(bound)", k, "multiplier must be positive"));
        }
        Ok(lambda.to_biguint().expect("positive"))
    }

    /// Builds level `k+1` from level `k`, asserting every law on the way.
    /// Returns the multipliers used and the new record.
    pub fn extend_point(&self, record: &LevelRecord) -> Result<Extension> {
        let k = record.k;
        let l = k / 2;
        let lambda_star = self.select_lambda_star(record, k)?;
        let lambda = self.choose_lambda(&lambda_star, k)?;
        let lambda_int = BigInt::from(lambda.clone());
        debug_assert_eq!(
            lambda_int.mod_floor(&self.q(l + 1)),
            BigInt::from(lambda_star.clone()).mod_floor(&self.q(l + 1))
        );

        let p_l = self.p(l);
        let step = &p_l * &lambda_int;
        let ki = k as isize;
        let (v_k, u_k) = self.seq.e(ki);
        let point = (&record.point.0 + &step * v_k, &record.point.1 + &step * u_k);

        let a_next = BigInt::from(self.schedule.quotient(k + 1).clone());
        let frak_x = &record.frak.1 + &step - &record.frak.0 * &a_next;
        let frak_y = record.frak.0.clone();
        let next = LevelRecord {
            k: k + 1,
            l: (k + 1) / 2,
            point,
            frak: (frak_x.clone(), frak_y),
            next_lambda_star: None,
            next_lambda: None,
        };

        // Decomposition consistency against an independent solve.
        if frak_coords(&next.point, self.seq, k + 1) != next.frak {
            return Err(Error::soundness("(z12)", k + 1, "stored coordinates disagree with the basis solve"));
        }
        let target = self.step_target(k);
        if !(&frak_x - &target).mod_floor(&p_l).is_zero() {
            return Err(Error::soundness("(raz)", k + 1, "stepped coordinate misses the grid value modulo P_l"));
        }
        if !(&frak_x - &target).mod_floor(&self.q(l + 1)).is_zero() {
            return Err(Error::soundness("(dva)", k + 1, "stepped coordinate misses the grid value modulo Q_{l+1}"));
        }
        if !(&frak_x - &target).mod_floor(&self.p(l + 1)).is_zero() {
            return Err(Error::soundness("(tri)", k + 1, "stepped coordinate misses the grid value modulo P_{l+1}"));
        }
        if !self.lattice_membership(&next.point, k + 1) {
            return Err(Error::soundness("(ze)", k + 1, "point escaped its lattice"));
        }
        self.check_centering(&next)?;
        if k + 1 >= 2 {
            let g = next.point.0.gcd(&next.point.1);
            if g <= BigInt::one() {
                return Err(Error::soundness("(from)", k + 1, "constructed point has coprime coordinates"));
            }
        }

        Ok(Extension {
            lambda_star,
            lambda,
            next,
        })
    }

    /// `|b_m - v_m/2| ≤ 2·P_{⌊(m-1)/2⌋+1}·v_{m-1}`, in integer form.
    fn check_centering(&self, record: &LevelRecord) -> Result<()> {
        let m = record.k;
        if m == 0 {
            return Ok(());
        }
        let l_prev = (m - 1) / 2;
        let v_m = self.seq.v(m as isize);
        let v_prev = self.seq.v(m as isize - 1);
        let lhs = (BigInt::from(2) * &record.point.0 - v_m).abs();
        let rhs = BigInt::from(4) * self.p(l_prev + 1) * v_prev;
        if lhs > rhs {
            return Err(Error::soundness("(be)", m, "point drifted away from v_k/2"));
        }
        Ok(())
    }
}

/// Builds levels `0..=depth` from the origin, stamping each record with the
/// multipliers that produced its successor.
pub fn build_levels(ctx: &LatticeContext, depth: usize) -> Result<Vec<LevelRecord>> {
    let mut levels = Vec::with_capacity(depth + 1);
    let mut current = LevelRecord {
        k: 0,
        l: 0,
        point: (BigInt::zero(), BigInt::zero()),
        frak: (BigInt::zero(), BigInt::zero()),
        next_lambda_star: None,
        next_lambda: None,
    };
    if !ctx.lattice_membership(&current.point, 0) {
        return Err(Error::soundness("(ze)", 0, "origin is not in the base lattice"));
    }
    for _ in 0..depth {
        let ext = ctx.extend_point(&current)?;
        current.next_lambda_star = Some(ext.lambda_star);
        current.next_lambda = Some(ext.lambda);
        levels.push(current);
        current = ext.next;
    }
    levels.push(current);
    Ok(levels)
}

/// Re-checks every stored level of a (possibly reloaded) construction.
pub fn verify_levels(ctx: &LatticeContext, levels: &[LevelRecord]) -> Result<()> {
    if levels.is_empty() || levels[0].point != (BigInt::zero(), BigInt::zero()) {
        return Err(Error::soundness("(ze)", 0, "levels must start at the origin"));
    }
    for record in levels {
        let k = record.k;
        if record.l != k / 2 {
            return Err(Error::soundness("(ze)", k, "stored shell index is wrong"));
        }
        if frak_coords(&record.point, ctx.seq, k) != record.frak {
            return Err(Error::soundness("(z12)", k, "stored basis coordinates are wrong"));
        }
        if !ctx.lattice_membership(&record.point, k) {
            return Err(Error::soundness("(ze)", k, "stored point is not in its lattice"));
        }
        ctx.check_centering(record)?;
        if k >= 2 && record.point.0.gcd(&record.point.1) <= BigInt::one() {
            return Err(Error::soundness("(from)", k, "stored point has coprime coordinates"));
        }
    }
    // Step relations between consecutive records.
    for win in levels.windows(2) {
        let (cur, next) = (&win[0], &win[1]);
        let k = cur.k;
        let l = k / 2;
        let lambda_star = cur
            .next_lambda_star
            .as_ref()
            .ok_or_else(|| Error::soundness("(dva)", k, "missing multiplier residue"))?;
        let lambda = cur
            .next_lambda
            .as_ref()
            .ok_or_else(|| Error::soundness("(bound)", k, "missing multiplier"))?;
        let expected_star = ctx.select_lambda_star(cur, k)?;
        if *lambda_star != expected_star {
            return Err(Error::soundness("(dva)", k, "stored residue disagrees with the congruence solve"));
        }
        let expected_lambda = ctx.choose_lambda(lambda_star, k)?;
        if *lambda != expected_lambda {
            return Err(Error::soundness("(bound)", k, "stored multiplier disagrees with the rounding rule"));
        }
        let step = ctx.p(l) * BigInt::from(lambda.clone());
        let ki = k as isize;
        let expected_point = (
            &cur.point.0 + &step * ctx.seq.v(ki),
            &cur.point.1 + &step * ctx.seq.u(ki),
        );
        if next.point != expected_point {
            return Err(Error::soundness("(z0)", k + 1, "stored point is not the stepped point"));
        }
        if next.frak.1 != cur.frak.0 {
            return Err(Error::soundness("(z11)", k + 1, "second coordinate must carry over"));
        }
        let a_next = BigInt::from(ctx.schedule.quotient(k + 1).clone());
        if next.frak.0 != &cur.frak.1 + &step - &cur.frak.0 * a_next {
            return Err(Error::soundness("(z12)", k + 1, "first coordinate recursion broken"));
        }
    }
    verify_sum_identity(ctx, levels)
}

/// Individually checkable laws of the level recursion, tagged the way the
/// check log prints them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelLaw {
    /// "(ze)": every stored point belongs to its lattice.
    Membership,
    /// "(z0)": each point is the previous one stepped by `P_l·λ_{k+1}·e_k`.
    StepPoint,
    /// "(z11)": the second basis coordinate carries over.
    CarryOver,
    /// "(z12)": the first-coordinate recursion and the basis decomposition.
    Recursion,
    /// "(raz)": stepped coordinate matches the grid value modulo `P_l`.
    ResidueCoarse,
    /// "(dva)": ... modulo `Q_{l+1}`, with the stored residue representative.
    ResidueSelect,
    /// "(tri)": ... modulo `P_{l+1}`.
    ResidueCombined,
    /// "(bound)": multiplier stays within half a cofactor of `a_{k+1}/(2P_l)`.
    Bound,
    /// "(be)": points stay near `v_k/2`.
    Centering,
    /// "(from)": constructed points are never primitive from level 2 on.
    NonPrimitive,
}

impl LevelLaw {
    pub fn tag(self) -> &'static str {
        match self {
            LevelLaw::Membership => "(ze)",
            LevelLaw::StepPoint => "(z0)",
            LevelLaw::CarryOver => "(z11)",
            LevelLaw::Recursion => "(z12)",
            LevelLaw::ResidueCoarse => "(raz)",
            LevelLaw::ResidueSelect => "(dva)",
            LevelLaw::ResidueCombined => "(tri)",
            LevelLaw::Bound => "(bound)",
            LevelLaw::Centering => "(be)",
            LevelLaw::NonPrimitive => "(from)",
        }
    }
}

/// Checks one law across all stored levels.
pub fn verify_law(ctx: &LatticeContext, levels: &[LevelRecord], law: LevelLaw) -> Result<()> {
    for record in levels {
        let k = record.k;
        match law {
            LevelLaw::Membership => {
                if !ctx.lattice_membership(&record.point, k) {
                    return Err(Error::soundness("(ze)", k, "point not in its lattice"));
                }
            }
            LevelLaw::Centering => ctx.check_centering(record)?,
            LevelLaw::NonPrimitive => {
                if k >= 2 && record.point.0.gcd(&record.point.1).is_one() {
                    return Err(Error::soundness("(from)", k, "point is primitive"));
                }
            }
            LevelLaw::Recursion => {
                if frak_coords(&record.point, ctx.seq, k) != record.frak {
                    return Err(Error::soundness("(z12)", k, "basis decomposition mismatch"));
                }
            }
            _ => {}
        }
    }
    for win in levels.windows(2) {
        let (cur, next) = (&win[0], &win[1]);
        let k = cur.k;
        let l = k / 2;
        let lambda = cur
            .next_lambda
            .as_ref()
            .ok_or_else(|| Error::soundness(law.tag(), k, "missing multiplier"))?;
        let lambda_star = cur
            .next_lambda_star
            .as_ref()
            .ok_or_else(|| Error::soundness(law.tag(), k, "missing multiplier residue"))?;
        let step = ctx.p(l) * BigInt::from(lambda.clone());
        let target = ctx.step_target(k);
        match law {
            LevelLaw::StepPoint => {
                let ki = k as isize;
                let expected = (
                    &cur.point.0 + &step * ctx.seq.v(ki),
                    &cur.point.1 + &step * ctx.seq.u(ki),
                );
                if next.point != expected {
                    return Err(Error::soundness("(z0)", k + 1, "point is not the stepped point"));
                }
            }
            LevelLaw::CarryOver => {
                if next.frak.1 != cur.frak.0 {
                    return Err(Error::soundness("(z11)", k + 1, "second coordinate must carry over"));
                }
            }
            LevelLaw::Recursion => {
                let a_next = BigInt::from(ctx.schedule.quotient(k + 1).clone());
                if next.frak.0 != &cur.frak.1 + &step - &cur.frak.0 * a_next {
                    return Err(Error::soundness("(z12)", k + 1, "first coordinate recursion broken"));
                }
            }
            LevelLaw::ResidueCoarse => {
                if !(&next.frak.0 - &target).mod_floor(&ctx.p(l)).is_zero() {
                    return Err(Error::soundness("(raz)", k + 1, "misses grid value modulo P_l"));
                }
            }
            LevelLaw::ResidueSelect => {
                let q_next = ctx.q(l + 1);
                let star = BigInt::from(lambda_star.clone());
                if star < BigInt::one() || star > q_next {
                    return Err(Error::soundness("(dva)", k, "residue representative out of range"));
                }
                if BigInt::from(lambda.clone()).mod_floor(&q_next) != star.mod_floor(&q_next) {
                    return Err(Error::soundness("(dva)", k, "multiplier leaves its residue class"));
                }
                if !(&next.frak.0 - &target).mod_floor(&q_next).is_zero() {
                    return Err(Error::soundness("(dva)", k + 1, "misses grid value modulo Q_{l+1}"));
                }
            }
            LevelLaw::ResidueCombined => {
                if !(&next.frak.0 - &target).mod_floor(&ctx.p(l + 1)).is_zero() {
                    return Err(Error::soundness("(tri)", k + 1, "misses grid value modulo P_{l+1}"));
                }
            }
            LevelLaw::Bound => {
                let a_next = BigInt::from(ctx.schedule.quotient(k + 1).clone());
                let deviation = (BigInt::from(2) * ctx.p(l) * BigInt::from(lambda.clone()) - a_next).abs();
                if deviation > ctx.p(l + 1) {
                    return Err(Error::soundness("(bound)", k, "multiplier outside half-window"));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// The non-primitivity window: every `z = 𝔷_k + x·e_{k-1} + y·e_k` with
/// `max(1,|x|)·max(1,|y|) ≤ ⌊k/2⌋` has non-coprime coordinates. Returns the
/// witness gcd per box point. At `k = 0` the box is the origin alone and the
/// witness gcd is 0 (the point is `(0,0)`, still non-primitive).
pub fn nonprimitive_certificate(
    ctx: &LatticeContext,
    levels: &[LevelRecord],
    k: usize,
) -> Result<Vec<(IndexPair, BigUint)>> {
    let record = levels
        .get(k)
        .ok_or(Error::DepthExhausted {
            needed: format!("level {k}"),
            depth: levels.len().saturating_sub(1),
        })?;
    let ki = k as isize;
    let (f_v, f_u) = ctx.seq.e(ki - 1);
    let (g_v, g_u) = ctx.seq.e(ki);
    let mut out = Vec::new();
    for (x, y) in omega_set(k / 2) {
        let b = &record.point.0 + x * f_v + y * g_v;
        let c = &record.point.1 + x * f_u + y * g_u;
        let g = b.gcd(&c);
        if g.is_one() {
            return Err(Error::soundness(
                "(from)",
                k,
                format!("coprime point inside the window at (x,y)=({x},{y})"),
            ));
        }
        out.push(((x, y), g.to_biguint().expect("gcd is non-negative")));
    }
    Ok(out)
}

/// Independent recomputation of the closed-form coordinate sums
/// `b_k = Σ_{j=1..k} P_{⌊(j-1)/2⌋}·λ_j·v_{j-1}` (and the same with `u` for
/// `c_k`) against every stored point.
pub fn verify_sum_identity(ctx: &LatticeContext, levels: &[LevelRecord]) -> Result<()> {
    let mut b = BigInt::zero();
    let mut c = BigInt::zero();
    for record in levels {
        if record.point != (b.clone(), c.clone()) {
            return Err(Error::soundness(
                "(eta)",
                record.k,
                "summed coordinates disagree with the stored point",
            ));
        }
        if let Some(lambda) = &record.next_lambda {
            let coef = ctx.p(record.k / 2) * BigInt::from(lambda.clone());
            b += &coef * ctx.seq.v(record.k as isize);
            c += &coef * ctx.seq.u(record.k as isize);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{build_schedule, convergents, WPolicy};
    use crate::grid::solve_crt_pair;
    use crate::omega::{arrange_primes, PermutationPolicy, PrimeArrangement};

    pub(crate) struct Fixture {
        #[allow(dead_code)]
        pub arr: PrimeArrangement,
        pub primorials: Primorials,
        pub pairs: Vec<CrtPair>,
        pub schedule: QuotientSchedule,
        pub seq: ConvergentSeq,
    }

    impl Fixture {
        pub fn new(depth: usize) -> Self {
            let max_shell = depth / 2 + 1;
            let arr = arrange_primes(max_shell, PermutationPolicy::Canonical);
            let primorials = arr.primorials();
            let pairs = (0..=max_shell)
                .map(|k| solve_crt_pair(&arr, k).unwrap())
                .collect();
            let schedule = build_schedule(&arr, depth, WPolicy::Linear { offset: 5 }).unwrap();
            let seq = convergents(&schedule, depth);
            Self {
                arr,
                primorials,
                pairs,
                schedule,
                seq,
            }
        }

        pub fn ctx(&self) -> LatticeContext<'_> {
            LatticeContext {
                primorials: &self.primorials,
                pairs: &self.pairs,
                schedule: &self.schedule,
                seq: &self.seq,
            }
        }
    }

    #[test]
    fn frak_coords_round_trips() {
        let fx = Fixture::new(5);
        let ctx = fx.ctx();
        for k in 1..=4usize {
            let ki = k as isize;
            let e_prev = ctx.seq.e(ki - 1).clone();
            let e_k = ctx.seq.e(ki).clone();
            assert_eq!(frak_coords(&e_k, ctx.seq, k), (BigInt::zero(), BigInt::one()));
            let z = (
                3 * &e_prev.0 - 2 * &e_k.0,
                3 * &e_prev.1 - 2 * &e_k.1,
            );
            assert_eq!(frak_coords(&z, ctx.seq, k), (BigInt::from(3), BigInt::from(-2)));
        }
    }

    #[test]
    fn builds_and_verifies_six_levels() {
        let fx = Fixture::new(6);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 6).unwrap();
        assert_eq!(levels.len(), 7);
        assert_eq!(levels[0].point, (BigInt::zero(), BigInt::zero()));
        // 𝔷_1 = P_0·λ_1·e_0, so c_1 = 0 with a_0 = 0.
        assert_eq!(levels[1].point.1, BigInt::zero());
        assert_eq!(
            levels[1].point.0,
            2 * BigInt::from(levels[0].next_lambda.clone().unwrap())
        );
        verify_levels(&ctx, &levels).unwrap();
    }

    #[test]
    fn lambda_star_is_the_unique_working_residue() {
        let fx = Fixture::new(4);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 4).unwrap();
        for k in 0..4usize {
            let l = k / 2;
            let q_next = BigInt::from(fx.primorials.q(l + 1).clone());
            let star = BigInt::from(levels[k].next_lambda_star.clone().unwrap());
            assert!(star >= BigInt::one() && star <= q_next);
            let lambda = BigInt::from(levels[k].next_lambda.clone().unwrap());
            assert_eq!(lambda.mod_floor(&q_next), star.mod_floor(&q_next));
            // A shifted residue breaks the next-level congruence.
            let a_next = BigInt::from(fx.schedule.quotient(k + 1).clone());
            let p_l = BigInt::from(fx.primorials.p(l).clone());
            let target = if k % 2 == 0 {
                BigInt::from(fx.pairs[l + 1].y.clone())
            } else {
                BigInt::from(fx.pairs[l + 1].x.clone())
            };
            let frak_x_good = (&levels[k].frak.1 + &p_l * &lambda - &levels[k].frak.0 * &a_next)
                .mod_floor(&q_next);
            assert_eq!(frak_x_good, target.mod_floor(&q_next));
            if q_next > BigInt::one() {
                let frak_x_bad = (&levels[k].frak.1 + &p_l * (&lambda + 1u32)
                    - &levels[k].frak.0 * &a_next)
                    .mod_floor(&q_next);
                assert_ne!(frak_x_bad, target.mod_floor(&q_next));
            }
        }
    }

    #[test]
    fn membership_examples() {
        let fx = Fixture::new(6);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 6).unwrap();
        for k in 0..=6usize {
            assert!(ctx.lattice_membership(&levels[k].point, k), "level {k}");
            let ki = k as isize;
            // Shifting by e_{k-1} bumps the x-coordinate residue by one.
            let shifted = (
                &levels[k].point.0 + ctx.seq.v(ki - 1),
                &levels[k].point.1 + ctx.seq.u(ki - 1),
            );
            assert!(!ctx.lattice_membership(&shifted, k), "level {k} shifted");
            // Adding P_l·e_k (even k) keeps all congruences.
            if k % 2 == 0 {
                let p_l = BigInt::from(fx.primorials.p(k / 2).clone());
                let kept = (
                    &levels[k].point.0 + &p_l * ctx.seq.v(ki),
                    &levels[k].point.1 + &p_l * ctx.seq.u(ki),
                );
                assert!(ctx.lattice_membership(&kept, k), "level {k} stepped");
            }
        }
    }

    #[test]
    fn deep_points_share_a_factor() {
        let fx = Fixture::new(5);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 5).unwrap();
        for k in 2..=5usize {
            let g = levels[k].point.0.gcd(&levels[k].point.1);
            assert!(g > BigInt::one(), "level {k} gcd {g}");
        }
    }

    #[test]
    fn nonprimitive_window_is_exhaustively_covered() {
        let fx = Fixture::new(6);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 6).unwrap();
        for k in 0..=6usize {
            let cert = nonprimitive_certificate(&ctx, &levels, k).unwrap();
            assert_eq!(cert.len() as u64, crate::omega::omega_cardinality(k / 2));
        }
    }

    #[test]
    fn verify_rejects_tampering() {
        let fx = Fixture::new(4);
        let ctx = fx.ctx();
        let mut levels = build_levels(&ctx, 4).unwrap();
        levels[2].point.0 += 1;
        assert!(verify_levels(&ctx, &levels).is_err());
    }
}
