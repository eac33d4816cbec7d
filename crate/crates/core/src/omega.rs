//! Index boxes `Ω_k`, the shell-respecting prime arrangement `p_{i,j}`, and the
//! products built from it: primorials `P_k`, cofactors `Q_{k+1}`, row products
//! `A_i^[k]` and column products `B_j^[k]`.
//!
//! `Ω_0 = {(0,0)}` by fiat; for `k ≥ 1` membership is the hyperbolic condition
//! `max(1,|i|)·max(1,|j|) ≤ k`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::Primes;
use crate::rng::SplitMix64;

/// Point of the integer grid indexing the prime arrangement.
pub type IndexPair = (i64, i64);

/// Membership test for `Ω_k`.
pub fn omega_contains(pair: IndexPair, k: usize) -> bool {
    let (i, j) = pair;
    if k == 0 {
        return pair == (0, 0);
    }
    let a = 1i64.max(i.abs()) as u128;
    let b = 1i64.max(j.abs()) as u128;
    a * b <= k as u128
}

/// All pairs of `Ω_k` in lexicographic order by `(i, j)`.
pub fn omega_set(k: usize) -> Vec<IndexPair> {
    if k == 0 {
        return vec![(0, 0)];
    }
    let k_i = k as i64;
    let mut out = Vec::with_capacity(omega_cardinality(k) as usize);
    for i in -k_i..=k_i {
        let m = k_i / 1i64.max(i.abs());
        for j in -m..=m {
            out.push((i, j));
        }
    }
    out
}

/// `|Ω_k|` in closed form: `4k + 1 + 4·Σ_{i=1..k} ⌊k/i⌋` for `k ≥ 1`.
pub fn omega_cardinality(k: usize) -> u64 {
    if k == 0 {
        return 1;
    }
    let k = k as u64;
    let divisor_sum: u64 = (1..=k).map(|i| k / i).sum();
    4 * k + 1 + 4 * divisor_sum
}

/// Shell `Ω_k \ Ω_{k-1}` in lexicographic order (`Ω_0` itself for `k = 0`).
pub fn omega_shell(k: usize) -> Vec<IndexPair> {
    if k == 0 {
        return vec![(0, 0)];
    }
    omega_set(k)
        .into_iter()
        .filter(|&p| !omega_contains(p, k - 1))
        .collect()
}

/// How primes are distributed inside each shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PermutationPolicy {
    /// Lexicographic pairs receive increasing primes; bit-reproducible.
    Canonical,
    /// Each shell's primes are shuffled by a deterministic keyed generator.
    Seeded { seed: u64 },
}

/// Bijection from `Ω_K` onto the first `ω_K` primes, respecting shells:
/// the pairs of `Ω_k \ Ω_{k-1}` always receive exactly the primes with
/// 1-based positions in `(ω_{k-1}, ω_k]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimeArrangement {
    pub max_shell: usize,
    pub policy: PermutationPolicy,
    /// Per shell, the pairs in lexicographic order with their assigned primes.
    #[serde(with = "crate::serde_util::shell_table")]
    pub shells: Vec<Vec<(IndexPair, u64)>>,
}

/// Shell-respecting arrangement of the first `ω_K` primes over `Ω_K`.
pub fn arrange_primes(max_shell: usize, policy: PermutationPolicy) -> PrimeArrangement {
    let mut table = Primes::new();
    let mut shells = Vec::with_capacity(max_shell + 1);
    for k in 0..=max_shell {
        let pairs = omega_shell(k);
        let lo = if k == 0 { 0 } else { omega_cardinality(k - 1) as usize };
        let hi = omega_cardinality(k) as usize;
        let mut primes: Vec<u64> = table.first_n(hi)[lo..].to_vec();
        debug_assert_eq!(primes.len(), pairs.len());
        if let PermutationPolicy::Seeded { seed } = policy {
            let mut rng = SplitMix64::new(seed ^ (k as u64).wrapping_mul(0x9e37_79b9));
            rng.shuffle(&mut primes);
        }
        shells.push(pairs.into_iter().zip(primes).collect());
    }
    PrimeArrangement {
        max_shell,
        policy,
        shells,
    }
}

impl PrimeArrangement {
    /// The prime assigned to `pair`, if `pair ∈ Ω_{max_shell}`.
    pub fn prime_at(&self, pair: IndexPair) -> Option<u64> {
        if !omega_contains(pair, self.max_shell) {
            return None;
        }
        // Walk the shell the pair first appears in.
        let first = (0..=self.max_shell)
            .find(|&k| omega_contains(pair, k))
            .expect("pair is in the max shell");
        self.shells[first]
            .iter()
            .find(|(p, _)| *p == pair)
            .map(|&(_, prime)| prime)
    }

    fn check_shell(&self, k: usize) -> Result<()> {
        if k > self.max_shell {
            return Err(Error::ShellOutOfRange {
                k,
                max: self.max_shell,
            });
        }
        Ok(())
    }

    /// `P_k`: product of the arranged primes over `Ω_k`, equivalently of the
    /// first `ω_k` primes.
    pub fn primorial(&self, k: usize) -> Result<BigUint> {
        self.check_shell(k)?;
        let mut acc = BigUint::one();
        for shell in &self.shells[..=k] {
            for &(_, p) in shell {
                acc *= p;
            }
        }
        Ok(acc)
    }

    /// `Q_k = P_k / P_{k-1}` for `1 ≤ k ≤ max_shell`; coprime to `P_{k-1}`.
    pub fn cofactor(&self, k: usize) -> Result<BigUint> {
        if k == 0 {
            return Err(Error::ShellOutOfRange {
                k,
                max: self.max_shell,
            });
        }
        self.check_shell(k)?;
        let mut acc = BigUint::one();
        for &(_, p) in &self.shells[k] {
            acc *= p;
        }
        Ok(acc)
    }

    /// All primorials and cofactors up to the max shell.
    pub fn primorials(&self) -> Primorials {
        let mut p = Vec::with_capacity(self.max_shell + 1);
        let mut q = Vec::with_capacity(self.max_shell);
        let mut acc = BigUint::one();
        for (k, shell) in self.shells.iter().enumerate() {
            let mut step = BigUint::one();
            for &(_, prime) in shell {
                step *= prime;
            }
            acc *= &step;
            p.push(acc.clone());
            if k >= 1 {
                q.push(step);
            }
        }
        Primorials { p, q }
    }

    /// `A_i^[k]`: product of the primes in row `i` of `Ω_k`. Requires `|i| ≤ k`.
    pub fn row_product(&self, i: i64, k: usize) -> Result<BigUint> {
        self.check_shell(k)?;
        if i.unsigned_abs() > k as u64 {
            return Err(Error::IndexOutOfRange { index: i, k });
        }
        let mut acc = BigUint::one();
        let m = if k == 0 { 0 } else { k as i64 / 1i64.max(i.abs()) };
        for j in -m..=m {
            acc *= self.prime_at((i, j)).expect("row slice stays inside the box");
        }
        Ok(acc)
    }

    /// `B_j^[k]`: product of the primes in column `j` of `Ω_k`. Requires `|j| ≤ k`.
    pub fn col_product(&self, j: i64, k: usize) -> Result<BigUint> {
        self.check_shell(k)?;
        if j.unsigned_abs() > k as u64 {
            return Err(Error::IndexOutOfRange { index: j, k });
        }
        let mut acc = BigUint::one();
        let m = if k == 0 { 0 } else { k as i64 / 1i64.max(j.abs()) };
        for i in -m..=m {
            acc *= self.prime_at((i, j)).expect("column slice stays inside the box");
        }
        Ok(acc)
    }

    /// Verifies the shell-respecting bijection: shell `k` holds exactly the
    /// primes with 1-based positions in `(ω_{k-1}, ω_k]`, and `(0,0) ↦ 2`.
    pub fn verify_shells(&self) -> Result<()> {
        let mut table = Primes::new();
        for (k, shell) in self.shells.iter().enumerate() {
            let lo = if k == 0 { 0 } else { omega_cardinality(k - 1) as usize };
            let hi = omega_cardinality(k) as usize;
            let expected_pairs = omega_shell(k);
            let pairs: Vec<IndexPair> = shell.iter().map(|&(p, _)| p).collect();
            if pairs != expected_pairs {
                return Err(Error::soundness(
                    "arrangement",
                    k,
                    "shell pairs are not the lexicographic shell",
                ));
            }
            let mut got: Vec<u64> = shell.iter().map(|&(_, p)| p).collect();
            got.sort_unstable();
            if got != table.first_n(hi)[lo..] {
                return Err(Error::soundness(
                    "arrangement",
                    k,
                    "shell primes are not the next block of primes",
                ));
            }
        }
        if self.prime_at((0, 0)) != Some(2) {
            return Err(Error::soundness("arrangement", 0, "(0,0) must map to 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Primorials {
    /// `P_0 .. P_K`.
    pub p: Vec<BigUint>,
    /// `Q_1 .. Q_K`, indexed so `q[k-1] == Q_k`.
    pub q: Vec<BigUint>,
}

impl Primorials {
    pub fn p(&self, k: usize) -> &BigUint {
        &self.p[k]
    }

    /// `Q_k`, `k ≥ 1`.
    pub fn q(&self, k: usize) -> &BigUint {
        &self.q[k - 1]
    }
}

/// Cross-gcd law for a row and a column product:
/// `gcd(A_i^[k1], B_j^[k2])` is `p_{i,j}` when `(i,j) ∈ Ω_{min(k1,k2)}`, else 1.
pub fn expected_cross_gcd(arr: &PrimeArrangement, i: i64, j: i64, k1: usize, k2: usize) -> BigUint {
    let m = k1.min(k2);
    if omega_contains((i, j), m) {
        BigUint::from(arr.prime_at((i, j)).expect("pair inside max shell"))
    } else {
        BigUint::one()
    }
}

/// Exhaustive check of the pairwise-coprimality and cross-gcd laws through
/// shell `k_max`. Exact; meant for small `k_max` (≤ 6).
pub fn verify_gcd_laws(arr: &PrimeArrangement, k_max: usize) -> Result<()> {
    for k in 0..=k_max {
        let k_i = k as i64;
        let rows: Vec<BigUint> = (-k_i..=k_i)
            .map(|i| arr.row_product(i, k))
            .collect::<Result<_>>()?;
        let cols: Vec<BigUint> = (-k_i..=k_i)
            .map(|j| arr.col_product(j, k))
            .collect::<Result<_>>()?;
        let p_k = arr.primorial(k)?;
        let row_prod: BigUint = rows.iter().product();
        let col_prod: BigUint = cols.iter().product();
        if row_prod != p_k || col_prod != p_k {
            return Err(Error::soundness(
                "(p)",
                k,
                "row/column products do not multiply to the primorial",
            ));
        }
        for (a, row_a) in rows.iter().enumerate() {
            for (b, row_b) in rows.iter().enumerate() {
                if a < b && !row_a.gcd(row_b).is_one() {
                    return Err(Error::soundness("(ab)", k, format!("rows {a},{b} share a factor")));
                }
            }
        }
        for (a, col_a) in cols.iter().enumerate() {
            for (b, col_b) in cols.iter().enumerate() {
                if a < b && !col_a.gcd(col_b).is_one() {
                    return Err(Error::soundness("(ab)", k, format!("columns {a},{b} share a factor")));
                }
            }
        }
    }
    // Cross law over mixed shell depths.
    for k1 in 0..=k_max {
        for k2 in 0..=k_max {
            for i in -(k1 as i64)..=(k1 as i64) {
                for j in -(k2 as i64)..=(k2 as i64) {
                    let a = arr.row_product(i, k1)?;
                    let b = arr.col_product(j, k2)?;
                    if a.gcd(&b) != expected_cross_gcd(arr, i, j, k1, k2) {
                        return Err(Error::soundness(
                            "(ab1)",
                            k1.max(k2),
                            format!("cross gcd at (i,j)=({i},{j}), shells ({k1},{k2})"),
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}
