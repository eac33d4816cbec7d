//! The persisted construction and its re-check suite.
//!
//! A state file is self-contained: reloading it and running `check` repeats
//! every law the builder enforced, line by line, against the stored data.
//! Serialization is canonical — sorted keys, fixed separators, unbounded
//! integers as decimal strings — so identical parameters give identical
//! bytes.

use std::borrow::Cow;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::cf::{
    build_schedule, convergents, gamma_ratios, verify_convergents,
    verify_schedule, ConvergentSeq, QuotientSchedule, WPolicy,
};
use crate::error::{Error, Result};
use crate::eta::{sandwich_check_auto, verify_residual_signs, verify_summand_decay};
use crate::grid::{grid_certificate, solve_crt_pair, verify_chain, CrtPair};
use crate::interval::Certainty;
use crate::lattice::{
    build_levels, nonprimitive_certificate, verify_law, LatticeContext, LevelLaw, LevelRecord,
};
use crate::omega::{
    arrange_primes, omega_cardinality, verify_gcd_laws, PermutationPolicy, PrimeArrangement,
    Primorials,
};
use crate::transcend::ln_rational;

pub const FORMAT_VERSION: u32 = 1;

/// Build inputs; everything else in a state is derived from these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildParams {
    /// `a_0` of the continued fraction; fixed at 0 so α ∈ (0, 1).
    pub a0: i64,
    pub depth: usize,
    pub w_policy: WPolicy,
    pub perm_policy: PermutationPolicy,
}

impl BuildParams {
    pub fn new(depth: usize, w_policy: WPolicy, perm_policy: PermutationPolicy) -> Self {
        Self {
            a0: 0,
            depth,
            w_policy,
            perm_policy,
        }
    }
}

/// The full construction: arrangement, grid pairs, schedule, convergents,
/// and the recursive lattice points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionState {
    pub format_version: u32,
    pub params: BuildParams,
    pub arrangement: PrimeArrangement,
    pub crt_pairs: Vec<CrtPair>,
    pub schedule: QuotientSchedule,
    pub convergents: ConvergentSeq,
    pub levels: Vec<LevelRecord>,
    #[serde(skip)]
    primorials: Option<Primorials>,
}

impl ConstructionState {
    /// Builds the whole construction level by level, with every fatal check
    /// running as it goes.
    pub fn build(params: BuildParams) -> Result<Self> {
        if params.depth < 2 {
            return Err(Error::InvalidPolicy("depth must be at least 2".into()));
        }
        if params.a0 != 0 {
            return Err(Error::InvalidPolicy("a0 is fixed at 0".into()));
        }
        params.w_policy.validate()?;
        let max_shell = params.depth / 2 + 1;
        let arrangement = arrange_primes(max_shell, params.perm_policy);
        arrangement.verify_shells()?;
        let primorials = arrangement.primorials();
        let crt_pairs: Vec<CrtPair> = (0..=max_shell)
            .map(|k| solve_crt_pair(&arrangement, k))
            .collect::<Result<_>>()?;
        verify_chain(&arrangement, &crt_pairs)?;
        let schedule = build_schedule(&arrangement, params.depth, params.w_policy)?;
        let seq = convergents(&schedule, params.depth);
        verify_convergents(&seq)?;
        let ctx = LatticeContext {
            primorials: &primorials,
            pairs: &crt_pairs,
            schedule: &schedule,
            seq: &seq,
        };
        let levels = build_levels(&ctx, params.depth)?;
        Ok(ConstructionState {
            format_version: FORMAT_VERSION,
            params,
            arrangement,
            crt_pairs,
            schedule,
            convergents: seq,
            levels,
            primorials: Some(primorials),
        })
    }

    pub fn depth(&self) -> usize {
        self.params.depth
    }

    pub fn max_shell(&self) -> usize {
        self.arrangement.max_shell
    }

    fn primorials_ref(&self) -> &Primorials {
        self.primorials
            .as_ref()
            .expect("state is hydrated after build/load")
    }

    pub fn ctx(&self) -> LatticeContext<'_> {
        LatticeContext {
            primorials: self.primorials_ref(),
            pairs: &self.crt_pairs,
            schedule: &self.schedule,
            seq: &self.convergents,
        }
    }

    /// Canonical JSON: keys sorted, two-space indent, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("state serializes");
        // serde_json maps are BTreeMaps, so re-serializing the value sorts keys.
        let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
        out.push('\n');
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let mut state: ConstructionState =
            serde_json::from_str(raw).map_err(|e| Error::Parse(e.to_string()))?;
        if state.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: state.format_version,
                expected: FORMAT_VERSION,
            });
        }
        state.convergents.rehydrate()?;
        state.primorials = Some(state.arrangement.primorials());
        Ok(state)
    }

    /// A state fit to scan up to `q_max`: the second-deepest denominator must
    /// reach `q_max²·10^9`, which keeps every scan enclosure far below the
    /// per-`q` width budget. Rebuilds deeper from the same parameters when
    /// the current depth falls short; byte-determinism is preserved because
    /// the rebuild is the same function of the parameters.
    pub fn deepened_for_scan(&self, q_max: u64) -> Result<Cow<'_, Self>> {
        let need = BigInt::from(q_max) * BigInt::from(q_max) * BigInt::from(1_000_000_000u64);
        if self.scan_anchor() >= need {
            return Ok(Cow::Borrowed(self));
        }
        let mut depth = self.depth() + 1;
        loop {
            let mut params = self.params.clone();
            params.depth = depth;
            let candidate = Self::build(params)?;
            if candidate.scan_anchor() >= need {
                return Ok(Cow::Owned(candidate));
            }
            depth += 1;
        }
    }

    fn scan_anchor(&self) -> BigInt {
        // The scan's η enclosure hangs off level depth-2, so that level's
        // denominator controls every width the scan compares.
        self.convergents.v(self.depth() as isize - 2).clone()
    }
}

/// One line of the check log.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    /// Short law tag, e.g. "(xy)".
    pub law: String,
    pub name: &'static str,
    pub passed: bool,
    /// Diagnostics report but never fail the run.
    pub diagnostic: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckLog {
    pub lines: Vec<CheckLine>,
}

impl CheckLog {
    fn record(&mut self, law: &str, name: &'static str, outcome: Result<String>) {
        match outcome {
            Ok(detail) => self.lines.push(CheckLine {
                law: law.into(),
                name,
                passed: true,
                diagnostic: false,
                detail,
            }),
            Err(e) => self.lines.push(CheckLine {
                law: law.into(),
                name,
                passed: false,
                diagnostic: false,
                detail: e.to_string(),
            }),
        }
    }

    fn diagnostic(&mut self, law: &str, name: &'static str, passed: bool, detail: String) {
        self.lines.push(CheckLine {
            law: law.into(),
            name,
            passed,
            diagnostic: true,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed || l.diagnostic)
    }

    /// First failing non-diagnostic law, for exit messages.
    pub fn first_failure(&self) -> Option<&CheckLine> {
        self.lines.iter().find(|l| !l.passed && !l.diagnostic)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            let status = match (line.passed, line.diagnostic) {
                (true, false) => "pass",
                (false, false) => "FAIL",
                (true, true) => "diag-pass",
                (false, true) => "diag-warn",
            };
            out.push_str(&format!("{status:<9} {:<8} {}", line.law, line.name));
            if !line.detail.is_empty() {
                out.push_str(&format!(" — {}", line.detail));
            }
            out.push('\n');
        }
        out
    }
}

impl ConstructionState {
    /// Re-runs every law of the construction against the stored data and
    /// returns one log line per law tag.
    pub fn check(&self) -> CheckLog {
        let mut log = CheckLog::default();
        let ctx = self.ctx();
        let depth = self.depth();
        let max_shell = self.max_shell();

        log.record(
            "(o)",
            "index-box cardinalities",
            check_cardinalities(600).map(|()| "closed form = enumeration for k ≤ 600".into()),
        );
        log.record(
            "arrangement",
            "shell-respecting bijection",
            self.arrangement.verify_shells().map(|()| String::new()),
        );
        log.record("(p)(Q)", "primorial identities", self.check_primorials());
        let gcd_depth = max_shell.min(6);
        log.record(
            "(ab)(ab1)",
            "row/column gcd laws",
            verify_gcd_laws(&self.arrangement, gcd_depth).map(|()| format!("exhaustive to shell {gcd_depth}")),
        );
        log.record("(xy)", "grid certificates", self.check_grids());
        log.record(
            "(xky)",
            "grid chain congruences",
            verify_chain(&self.arrangement, &self.crt_pairs).map(|()| String::new()),
        );
        log.record(
            "(pe)(boo)",
            "quotient schedule laws",
            verify_schedule(&self.arrangement, &self.schedule).map(|()| String::new()),
        );
        log.record(
            "(qqq)",
            "convergent laws",
            verify_convergents(&self.convergents).map(|()| String::new()),
        );
        log.record("(iiee)", "realized growth exponent", self.check_gamma());

        for law in [
            LevelLaw::Membership,
            LevelLaw::StepPoint,
            LevelLaw::CarryOver,
            LevelLaw::Recursion,
            LevelLaw::ResidueCoarse,
            LevelLaw::ResidueSelect,
            LevelLaw::ResidueCombined,
            LevelLaw::Bound,
            LevelLaw::Centering,
            LevelLaw::NonPrimitive,
        ] {
            log.record(
                law.tag(),
                "level recursion law",
                verify_law(&ctx, &self.levels, law).map(|()| String::new()),
            );
        }

        log.record(
            "(eta)",
            "closed-form coordinate sums",
            crate::lattice::verify_sum_identity(&ctx, &self.levels).map(|()| String::new()),
        );

        let nonprim_top = depth.min(8);
        log.record("(from)", "non-primitive windows", {
            (0..=nonprim_top)
                .try_for_each(|k| nonprimitive_certificate(&ctx, &self.levels, k).map(|_| ()))
                .map(|()| format!("exhaustive boxes for k ≤ {nonprim_top}"))
        });

        if depth >= 6 {
            let hi = (depth - 3).min(10);
            log.record("(eta1)(eta2)", "two-sided sandwich", {
                (3..=hi)
                    .try_for_each(|k| match sandwich_check_auto(&ctx, &self.levels, k) {
                        Ok(Certainty::True) => Ok(()),
                        Ok(other) => Err(Error::soundness(
                            "(eta1)",
                            k,
                            format!("sandwich not certified: {other:?}"),
                        )),
                        Err(e) => Err(e),
                    })
                    .map(|()| format!("certified for 3 ≤ k ≤ {hi}"))
            });
        }
        if depth >= 4 {
            let hi = (depth - 4).min(10);
            log.record(
                "(eta)",
                "residual signs and decay",
                verify_residual_signs(&ctx, &self.levels, 0, hi)
                    .and_then(|()| verify_summand_decay(&ctx, &self.levels))
                    .map(|()| format!("alternation/decrease for k ≤ {hi}")),
            );
        }

        // Non-fatal diagnostics.
        let (ratio_ok, ratio_detail) = diagnostic_omega_ratio();
        log.diagnostic("(o)", "density ratio at k=10^5", ratio_ok, ratio_detail);
        let (peak_ok, peak_detail) = diagnostic_gamma_peak(&self.schedule);
        log.diagnostic("(iiee)", "growth-ratio peak", peak_ok, peak_detail);

        log
    }

    fn check_primorials(&self) -> Result<String> {
        let pr = self.primorials_ref();
        if pr.p(0) != &num_bigint::BigUint::from(2u32) {
            return Err(Error::soundness("(p)", 0, "P_0 must be 2"));
        }
        for k in 1..=self.max_shell() {
            if pr.p(k - 1) * pr.q(k) != *pr.p(k) {
                return Err(Error::soundness("(Q)", k, "P_k ≠ P_{k-1}·Q_k"));
            }
            if !pr.p(k - 1).gcd(pr.q(k)).is_one() {
                return Err(Error::soundness("(Q)", k, "primorial shares a factor with its cofactor"));
            }
            if pr.p(k) != &self.arrangement.primorial(k)? {
                return Err(Error::soundness("(p)", k, "stored primorial disagrees with the arrangement"));
            }
        }
        Ok(format!("gcd(P_k, Q_(k+1)) = 1 for k < {}", self.max_shell()))
    }

    fn check_grids(&self) -> Result<String> {
        for pair in &self.crt_pairs {
            let p_k = self.arrangement.primorial(pair.k)?;
            if pair.x < p_k || pair.x >= (&p_k << 1) || pair.y < p_k || pair.y >= (&p_k << 1) {
                return Err(Error::soundness("(xy)", pair.k, "pair escaped [P_k, 2P_k-1]"));
            }
            grid_certificate(&self.arrangement, pair)?;
        }
        if self.crt_pairs[0].x != num_bigint::BigUint::from(2u32)
            || self.crt_pairs[0].y != num_bigint::BigUint::from(2u32)
        {
            return Err(Error::soundness("(xy)", 0, "X_0 = Y_0 = 2 required"));
        }
        Ok(format!("exhaustive witnesses for k ≤ {}", self.max_shell()))
    }

    fn check_gamma(&self) -> Result<String> {
        let recomputed = gamma_ratios(&self.schedule.a);
        let hi = recomputed
            .iter()
            .map(|(r, _)| r.hi())
            .max()
            .expect("depth ≥ 2");
        let lo = recomputed
            .iter()
            .map(|(r, _)| r.lo())
            .max()
            .expect("depth ≥ 2");
        if self.schedule.gamma_min.hi() != hi || self.schedule.gamma_min.lo() != lo {
            return Err(Error::soundness("(iiee)", None, "stored γ disagrees with recomputation"));
        }
        if !self.schedule.gamma_min.lo().is_positive() {
            return Err(Error::soundness("(iiee)", None, "realized γ must be positive"));
        }
        Ok(format!(
            "γ_min ≈ {:.4}",
            crate::interval::rational_to_f64(&self.schedule.gamma_min.midpoint())
        ))
    }
}

fn check_cardinalities(k_max: usize) -> Result<()> {
    for k in 0..=k_max {
        if crate::omega::omega_set(k).len() as u64 != omega_cardinality(k) {
            return Err(Error::soundness("(o)", k, "cardinality mismatch"));
        }
    }
    Ok(())
}

/// ω_k / (4k·ln k) at k = 10^5 should sit inside [0.9, 1.15].
fn diagnostic_omega_ratio() -> (bool, String) {
    let k = 100_000u64;
    let omega = BigRational::from_integer(omega_cardinality(k as usize).into());
    let ln_k = ln_rational(&BigRational::from_integer(k.into()), 64);
    let denom = ln_k.scale(&BigRational::from_integer((4 * k).into()));
    let ratio = crate::interval::RationalInterval::point(omega).div(&denom);
    let lo_bound = BigRational::new(9.into(), 10.into());
    let hi_bound = BigRational::new(23.into(), 20.into());
    let ok = ratio.gt_rational(&lo_bound) == Certainty::True
        && ratio.lt_rational(&hi_bound) == Certainty::True;
    (
        ok,
        format!("ω_k/(4k ln k) ≈ {:.5} at k=10^5", ratio.approx_f64()),
    )
}

/// The realized growth ratios peak early and stay below the peak afterward.
fn diagnostic_gamma_peak(schedule: &QuotientSchedule) -> (bool, String) {
    let ratios = gamma_ratios(&schedule.a);
    let peak = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.lo().cmp(b.1 .0.lo()))
        .expect("depth ≥ 2");
    let peak_k = peak.1 .1;
    let last_below = ratios
        .last()
        .map(|(r, _)| r.hi() < peak.1 .0.lo() || peak_k == ratios.last().unwrap().1)
        .unwrap_or(true);
    (
        peak_k <= 4 && last_below,
        format!(
            "peak ratio ≈ {:.3} at k={peak_k}, tail ≈ {:.3}",
            peak.1 .0.approx_f64(),
            ratios.last().unwrap().0.approx_f64()
        ),
    )
}
