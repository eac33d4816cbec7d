//! Construction of a pair of real numbers (α, η) whose inhomogeneous
//! approximations `q·|qα - η - r|` stay uniformly large over coprime pairs
//! `(q, r)`, together with the machinery to certify that behavior with exact
//! arithmetic at desk scale.
//!
//! The pieces, bottom to top:
//!
//! * [`omega`] — hyperbolic index boxes, a shell-respecting arrangement of
//!   the primes over them, primorials and row/column products;
//! * [`grid`] — the CRT-built pair `(X_k, Y_k)` whose translated grid is
//!   coprime-free, plus the complementary minimal-coprime-box search;
//! * [`cf`] — the scheduled continued fraction defining α and its exact
//!   convergents;
//! * [`lattice`] — the recursive points `𝔷_k = (b_k, c_k)` pinned to the
//!   grid through affine lattices over the convergent bases;
//! * [`eta`] — certified rational enclosures of η = lim (b_k·α - c_k);
//! * [`scan`] — exact best-approximant scans separating primitive from
//!   non-primitive behavior;
//! * [`state`] — deterministic build, canonical JSON persistence, and the
//!   full re-check suite.

pub mod cf;
pub mod error;
pub mod eta;
pub mod grid;
pub mod interval;
pub mod lattice;
pub mod omega;
pub mod primes;
pub mod rng;
pub mod scan;
pub mod serde_util;
pub mod state;
pub mod transcend;

pub use cf::{alpha_enclosure, build_schedule, convergents, ConvergentSeq, QuotientSchedule, WPolicy};
pub use error::{Error, Result};
pub use eta::{certified_digits, eta_enclosure, sandwich_check, EtaEnclosure};
pub use grid::{erdos_min_box, grid_certificate, solve_crt_pair, CrtPair, GridCertificate, MinBox};
pub use interval::{Certainty, RationalInterval};
pub use lattice::{frak_coords, nonprimitive_certificate, AffineLatticeSpec, LatticeContext, LevelRecord};
pub use omega::{
    arrange_primes, omega_cardinality, omega_set, IndexPair, PermutationPolicy, PrimeArrangement,
    Primorials,
};
pub use scan::{best_approximants, coprime_scan, certified_margin, ApproxRecord, ScanReport};
pub use state::{BuildParams, CheckLog, ConstructionState};
