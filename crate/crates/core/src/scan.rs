//! Exact scan of `q·|qα - η - r|` over a range of `q`.
//!
//! Every claim a report makes is interval-certified: lower bounds use `lo`
//! endpoints, existence of small products uses `hi` endpoints, and no
//! midpoint ever decides anything. The whole pipeline is exact rational
//! arithmetic end to end, so two scans of the same state are bit-identical
//! whatever the thread count.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::cf::alpha_enclosure;
use crate::error::{Error, Result};
use crate::eta::eta_enclosure;
use crate::interval::{nearest_half_down, RationalInterval};
use crate::lattice::{LatticeContext, LevelRecord};
use crate::serde_util::bigint_string;
use crate::transcend::normalization_factor;

/// Bits kept when coarsening the shared enclosures; widths stay far below
/// every threshold the scan compares against.
const SHARED_ENCLOSURE_BITS: u32 = 320;
/// Bits kept in stored per-record intervals.
const RECORD_BITS: u32 = 128;
/// The certified margin only speaks for `q` strictly above this.
pub const MARGIN_Q_FLOOR: u64 = 100;

/// One evaluated candidate `(q, r)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxRecord {
    pub q: u64,
    #[serde(with = "bigint_string")]
    pub r: BigInt,
    /// Enclosure of `|qα - η - r|`.
    pub err: RationalInterval,
    /// `gcd(q, r) = 1`.
    pub coprime: bool,
    /// Enclosure of `q·|qα - η - r|`.
    pub product: RationalInterval,
    /// Enclosure of `q·|qα - η - r|·ln(ln q)/sqrt(ln q)`.
    pub normalized: RationalInterval,
}

/// The three candidates `r̂-1, r̂, r̂+1` around the nearest integer `r̂` to
/// `qα - η`. Any other `r` misses by at least 1/2, so its product is at
/// least `q/2` — never competitive below the thresholds this scan certifies.
pub fn best_approximants(
    q: u64,
    alpha: &RationalInterval,
    eta: &RationalInterval,
) -> Result<Vec<ApproxRecord>> {
    let value = alpha.scale_int(&BigInt::from(q)).sub(eta);
    let budget = BigRational::new(BigInt::one(), BigInt::from(1_000_000u64) * BigInt::from(q));
    if value.width() >= budget {
        return Err(Error::Precision(format!(
            "enclosure width for q={q} exceeds 10^-6/q"
        )));
    }
    let r_hat = nearest_half_down(&value.midpoint());
    let norm = normalization_factor(q, RECORD_BITS);
    let q_int = BigInt::from(q);
    let mut out = Vec::with_capacity(3);
    for offset in [-1i64, 0, 1] {
        let r = &r_hat + offset;
        let err = value
            .shift(&BigRational::from_integer(-r.clone()))
            .abs()
            .coarsen(RECORD_BITS);
        let coprime = q_int.gcd(&r).is_one();
        let product = err.scale_int(&q_int).coarsen(RECORD_BITS);
        let normalized = product.mul(&norm).coarsen(RECORD_BITS);
        out.push(ApproxRecord {
            q,
            r,
            err,
            coprime,
            product,
            normalized,
        });
    }
    Ok(out)
}

/// Histogram over the per-`q` best primitive normalized lower bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    /// Upper edges, as rational strings; the last bucket is unbounded.
    pub edges: Vec<String>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new() -> Self {
        let edges: Vec<BigRational> = [
            (1, 4),
            (1, 2),
            (1, 1),
            (2, 1),
            (4, 1),
            (8, 1),
            (16, 1),
            (32, 1),
            (64, 1),
            (128, 1),
        ]
        .iter()
        .map(|&(n, d)| BigRational::new(n.into(), d.into()))
        .collect();
        Histogram {
            edges: edges.iter().map(crate::interval::rational_to_string).collect(),
            counts: vec![0; edges.len() + 1],
        }
    }

    fn insert(&mut self, value: &BigRational) {
        let idx = self
            .edges
            .iter()
            .map(|e| crate::interval::rational_from_str(e).expect("own edges parse"))
            .position(|e| value < &e)
            .unwrap_or(self.edges.len());
        self.counts[idx] += 1;
    }

    fn merge(&mut self, other: &Histogram) {
        debug_assert_eq!(self.edges, other.edges);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Aggregated scan results over a `q` range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub q_min: u64,
    pub q_max: u64,
    pub resolved: u64,
    /// `q` values whose enclosures stayed too wide; non-empty marks the
    /// report partial.
    pub unresolved: Vec<u64>,
    /// Certified lower bound on the normalized product over all evaluated
    /// primitive pairs: the minimum of `normalized.lo`.
    pub c_hat_lower: Option<String>,
    /// Record attaining `c_hat_lower`.
    pub best_primitive: Option<ApproxRecord>,
    /// Non-coprime record with the smallest certified product upper bound.
    pub best_nonprimitive: Option<ApproxRecord>,
    /// Record with the smallest certified product upper bound, coprime or not.
    pub global_min: Option<ApproxRecord>,
    pub primitive_histogram: Histogram,
}

impl ScanReport {
    pub fn is_partial(&self) -> bool {
        !self.unresolved.is_empty()
    }

    pub fn c_hat(&self) -> Option<BigRational> {
        self.c_hat_lower
            .as_deref()
            .and_then(crate::interval::rational_from_str)
    }

    fn empty(q_min: u64, q_max: u64) -> Self {
        ScanReport {
            q_min,
            q_max,
            resolved: 0,
            unresolved: Vec::new(),
            c_hat_lower: None,
            best_primitive: None,
            best_nonprimitive: None,
            global_min: None,
            primitive_histogram: Histogram::new(),
        }
    }

    fn absorb_record(&mut self, record: &ApproxRecord) {
        if record.coprime {
            // q values at or below the floor may be scanned for exploration
            // but never feed the certified margin.
            if record.q > MARGIN_Q_FLOOR {
                let better = match &self.best_primitive {
                    None => true,
                    Some(cur) => record_key_lt(record, cur, |r| r.normalized.lo().clone()),
                };
                if better {
                    self.c_hat_lower =
                        Some(crate::interval::rational_to_string(record.normalized.lo()));
                    self.best_primitive = Some(record.clone());
                }
            }
        } else {
            let better = match &self.best_nonprimitive {
                None => true,
                Some(cur) => record_key_lt(record, cur, |r| r.product.hi().clone()),
            };
            if better {
                self.best_nonprimitive = Some(record.clone());
            }
        }
        let better_global = match &self.global_min {
            None => true,
            Some(cur) => record_key_lt(record, cur, |r| r.product.hi().clone()),
        };
        if better_global {
            self.global_min = Some(record.clone());
        }
    }

    /// Commutative, associative merge; chunked scans fold into the same
    /// report a sequential scan produces.
    pub fn merge(mut self, other: ScanReport) -> ScanReport {
        self.q_min = self.q_min.min(other.q_min);
        self.q_max = self.q_max.max(other.q_max);
        self.resolved += other.resolved;
        self.unresolved.extend(other.unresolved);
        self.unresolved.sort_unstable();
        for record in [&other.best_primitive, &other.best_nonprimitive, &other.global_min]
            .into_iter()
            .flatten()
        {
            self.absorb_record(record);
        }
        self.primitive_histogram.merge(&other.primitive_histogram);
        self
    }
}

/// Strict total order on records by a rational key, tie-broken by `(q, r)`.
fn record_key_lt(
    a: &ApproxRecord,
    b: &ApproxRecord,
    key: impl Fn(&ApproxRecord) -> BigRational,
) -> bool {
    match key(a).cmp(&key(b)) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => (a.q, &a.r) < (b.q, &b.r),
    }
}

fn scan_block(
    alpha: &RationalInterval,
    eta: &RationalInterval,
    q_lo: u64,
    q_hi: u64,
) -> ScanReport {
    let mut report = ScanReport::empty(q_lo, q_hi);
    for q in q_lo..=q_hi {
        match best_approximants(q, alpha, eta) {
            Ok(records) => {
                report.resolved += 1;
                let mut best_primitive_lo: Option<BigRational> = None;
                for record in &records {
                    report.absorb_record(record);
                    if record.coprime && record.q > MARGIN_Q_FLOOR {
                        let lo = record.normalized.lo().clone();
                        best_primitive_lo = Some(match best_primitive_lo {
                            None => lo,
                            Some(cur) => cur.min(lo),
                        });
                    }
                }
                if let Some(lo) = best_primitive_lo {
                    report.primitive_histogram.insert(&lo);
                }
            }
            Err(_) => report.unresolved.push(q),
        }
    }
    report
}

/// Shared enclosures the scan evaluates against: α between the two deepest
/// convergents, η from the two deepest levels, both coarsened outward.
pub fn scan_enclosures(
    ctx: &LatticeContext,
    levels: &[LevelRecord],
) -> Result<(RationalInterval, RationalInterval)> {
    let alpha_depth = ctx.seq.depth() - 1;
    let alpha = alpha_enclosure(ctx.seq, alpha_depth)?.coarsen(SHARED_ENCLOSURE_BITS);
    // Deepest separable η level: K-2, with α at depth K-1.
    let eta = eta_enclosure(ctx, levels, levels.len() - 3, alpha_depth)?
        .interval
        .coarsen(SHARED_ENCLOSURE_BITS);
    Ok((alpha, eta))
}

/// Scans `q ∈ [q_min, q_max]`, splitting into `jobs` contiguous blocks.
/// Records the certified minimum of the normalized product over primitive
/// pairs and the unrestricted minimum product for contrast.
pub fn coprime_scan(
    ctx: &LatticeContext,
    levels: &[LevelRecord],
    q_min: u64,
    q_max: u64,
    jobs: usize,
) -> Result<ScanReport> {
    assert!(q_min >= 2 && q_max >= q_min);
    let jobs = jobs.max(1);
    let (alpha, eta) = scan_enclosures(ctx, levels)?;
    // Fail fast when the state cannot resolve even the widest q.
    let widest = alpha.scale_int(&BigInt::from(q_max)).sub(&eta).width();
    if widest >= BigRational::new(BigInt::one(), BigInt::from(1_000_000u64) * BigInt::from(q_max)) {
        return Err(Error::Precision(format!(
            "state too shallow to resolve q={q_max}; deepen the build"
        )));
    }

    let total = q_max - q_min + 1;
    let per_block = total.div_ceil(jobs as u64);
    let blocks: Vec<(u64, u64)> = (0..jobs as u64)
        .map(|b| {
            let lo = q_min + b * per_block;
            let hi = (lo + per_block - 1).min(q_max);
            (lo, hi)
        })
        .filter(|(lo, hi)| lo <= hi)
        .collect();

    let partials: Vec<ScanReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = blocks
            .iter()
            .map(|&(lo, hi)| scope.spawn({
                let alpha = &alpha;
                let eta = &eta;
                move || scan_block(alpha, eta, lo, hi)
            }))
            .collect();
        handles.into_iter().map(|h| h.join().expect("scan worker")).collect()
    });

    let mut iter = partials.into_iter();
    let first = iter.next().expect("at least one block");
    Ok(iter.fold(first, |acc, part| acc.merge(part)))
}

/// Positivity of the certified margin, with the attaining record and the
/// contrast against the best non-primitive product.
#[derive(Debug, Clone)]
pub struct MarginSummary {
    pub c_hat_lower: BigRational,
    pub attained: ApproxRecord,
    /// `best primitive normalized.lo / best non-primitive product.hi`.
    pub contrast: Option<BigRational>,
}

/// Extracts the margin from a completed report, aborting if it is not
/// certifiably positive.
pub fn certified_margin(report: &ScanReport) -> Result<MarginSummary> {
    let attained = report.best_primitive.clone().ok_or_else(|| {
        Error::soundness("(main)", None, "no primitive candidates in the scanned range")
    })?;
    let c_hat = report.c_hat().expect("c_hat accompanies best_primitive");
    if !c_hat.is_positive() {
        return Err(Error::soundness(
            "(main)",
            None,
            format!("certified margin {c_hat} is not positive"),
        ));
    }
    let contrast = report.best_nonprimitive.as_ref().and_then(|np| {
        let denom = np.product.hi();
        if denom.is_positive() {
            Some(attained.normalized.lo() / denom)
        } else {
            None
        }
    });
    Ok(MarginSummary {
        c_hat_lower: c_hat,
        attained,
        contrast,
    })
}

fn describe_record(record: &ApproxRecord) -> String {
    format!(
        "q={} r={} coprime={} product≈{:.6} normalized≈{:.6}\n    product interval    {}\n    normalized interval {}",
        record.q,
        record.r,
        record.coprime,
        record.product.approx_f64(),
        record.normalized.approx_f64(),
        record.product,
        record.normalized,
    )
}

/// Plain-text summary of a report.
pub fn render_report_text(report: &ScanReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("scan over q in [{}, {}]\n", report.q_min, report.q_max));
    out.push_str(&format!(
        "resolved {} of {} q values\n",
        report.resolved,
        report.resolved + report.unresolved.len() as u64
    ));
    if report.is_partial() {
        out.push_str(&format!("unresolved q: {:?}\n", report.unresolved));
    }
    match (&report.c_hat_lower, &report.best_primitive) {
        (Some(c), Some(best)) => {
            out.push_str(&format!(
                "certified primitive margin c_hat_lower = {} (≈{:.6})\n",
                c,
                crate::interval::rational_to_f64(&report.c_hat().unwrap())
            ));
            out.push_str(&format!("  attained by {}\n", describe_record(best)));
        }
        _ => out.push_str("no primitive candidates evaluated\n"),
    }
    if let Some(np) = &report.best_nonprimitive {
        out.push_str(&format!("best non-primitive: {}\n", describe_record(np)));
    }
    if let Some(g) = &report.global_min {
        out.push_str(&format!("unrestricted minimum: {}\n", describe_record(g)));
    }
    out.push_str("primitive normalized lower-bound histogram:\n");
    let mut lo_label = String::from("0");
    for (idx, count) in report.primitive_histogram.counts.iter().enumerate() {
        let hi_label = report
            .primitive_histogram
            .edges
            .get(idx)
            .cloned()
            .unwrap_or_else(|| "inf".into());
        out.push_str(&format!("  [{lo_label:>5}, {hi_label:>5}): {count}\n"));
        lo_label = hi_label;
    }
    out
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
    fn candidates_cover_the_nearest_integer() {
        let fx = Fixture::new(4);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 4).unwrap();
        let (alpha, eta) = scan_enclosures(&ctx, &levels).unwrap();
        let records = best_approximants(101, &alpha, &eta).unwrap();
        assert_eq!(records.len(), 3);
        // Some candidate is within 1/2: q·err ≤ q/2 + slop.
        let best = records
            .iter()
            .map(|r| r.err.hi().clone())
            .min()
            .unwrap();
        assert!(best <= BigRational::new(1.into(), 2.into()));
        // All three r are consecutive.
        assert_eq!(&records[1].r - &records[0].r, BigInt::one());
        assert_eq!(&records[2].r - &records[1].r, BigInt::one());
        for r in &records {
            assert!(!r.err.lo().is_negative());
        }
    }

    #[test]
    fn coprimality_flags_are_exact() {
        let fx = Fixture::new(4);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 4).unwrap();
        let (alpha, eta) = scan_enclosures(&ctx, &levels).unwrap();
        for q in [101u64, 102, 1000] {
            for record in best_approximants(q, &alpha, &eta).unwrap() {
                let expected = BigInt::from(q).gcd(&record.r).is_one();
                assert_eq!(record.coprime, expected);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_scans_agree() {
        let fx = Fixture::new(4);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 4).unwrap();
        let one = coprime_scan(&ctx, &levels, 101, 600, 1).unwrap();
        let eight = coprime_scan(&ctx, &levels, 101, 600, 8).unwrap();
        assert_eq!(one, eight);
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&eight).unwrap()
        );
    }

    #[test]
    fn margin_is_positive_and_shrinks_with_wider_ranges() {
        let fx = Fixture::new(4);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 4).unwrap();
        let narrow = coprime_scan(&ctx, &levels, 101, 400, 2).unwrap();
        let wide = coprime_scan(&ctx, &levels, 101, 800, 2).unwrap();
        let m_narrow = certified_margin(&narrow).unwrap();
        let m_wide = certified_margin(&wide).unwrap();
        assert!(m_narrow.c_hat_lower.is_positive());
        assert!(m_wide.c_hat_lower <= m_narrow.c_hat_lower);
    }

    #[test]
    fn report_merge_is_the_same_as_one_pass() {
        let fx = Fixture::new(4);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 4).unwrap();
        let left = coprime_scan(&ctx, &levels, 101, 300, 1).unwrap();
        let right = coprime_scan(&ctx, &levels, 301, 500, 1).unwrap();
        let whole = coprime_scan(&ctx, &levels, 101, 500, 1).unwrap();
        assert_eq!(left.merge(right), whole);
    }

    #[test]
    fn shallow_state_is_rejected_not_mangled() {
        let fx = Fixture::new(2);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 2).unwrap();
        // Depth 2 leaves v_1 ≈ 1.1e9; q=10^9 demands width < 1e-15.
        match coprime_scan(&ctx, &levels, 101, 1_000_000_000, 1) {
            Err(Error::Precision(_)) => {}
            other => panic!("expected precision error, got {other:?}"),
        }
    }

    #[test]
    fn text_rendering_mentions_the_extremes() {
        let fx = Fixture::new(4);
        let ctx = fx.ctx();
        let levels = build_levels(&ctx, 4).unwrap();
        let report = coprime_scan(&ctx, &levels, 101, 300, 2).unwrap();
        let text = render_report_text(&report);
        assert!(text.contains("certified primitive margin"));
        assert!(text.contains("unrestricted minimum"));
    }
}
