//! The translated coprime-free grid: integers `(X_k, Y_k)` built by the
//! Chinese Remainder Theorem so that every `(X_k + i, Y_k + j)` with
//! `(i, j) ∈ Ω_k` shares the factor `p_{i,j}`, plus the complementary
//! minimal-coprime-box search.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::omega::{omega_set, PrimeArrangement};
use crate::serde_util::biguint_string;

/// CRT-built pair for shell `k`, normalized into `[P_k, 2P_k - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrtPair {
    pub k: usize,
    #[serde(with = "biguint_string")]
    pub x: BigUint,
    #[serde(with = "biguint_string")]
    pub y: BigUint,
}

/// Inverse of `a` modulo `m` for coprime inputs.
pub fn mod_inverse(a: &BigInt, modulus: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(modulus);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(modulus))
}

/// Solves `x ≡ r_i (mod m_i)` for pairwise coprime moduli by folding the
/// congruences in the given order; returns the residue modulo the product.
pub fn crt_combine(congruences: &[(BigInt, BigInt)]) -> Result<(BigInt, BigInt)> {
    let mut residue = BigInt::zero();
    let mut modulus = BigInt::one();
    for (r, m) in congruences {
        // residue + modulus·t ≡ r (mod m)
        let inv = mod_inverse(&modulus, m).ok_or_else(|| {
            Error::soundness("(ab)", None, "CRT moduli are not pairwise coprime")
        })?;
        let t = ((r - &residue) * inv).mod_floor(m);
        residue += &modulus * t;
        modulus *= m;
        residue = residue.mod_floor(&modulus);
    }
    Ok((residue, modulus))
}

/// The unique `(X_k, Y_k)` in `[P_k, 2P_k - 1]²` with `X_k + i ≡ 0 (mod A_i^[k])`
/// and `Y_k + j ≡ 0 (mod B_j^[k])` for all `|i|, |j| ≤ k`.
pub fn solve_crt_pair(arr: &PrimeArrangement, k: usize) -> Result<CrtPair> {
    let k_i = k as i64;
    let mut x_congruences = Vec::with_capacity(2 * k + 1);
    let mut y_congruences = Vec::with_capacity(2 * k + 1);
    for i in -k_i..=k_i {
        let a = BigInt::from(arr.row_product(i, k)?);
        x_congruences.push((BigInt::from(-i).mod_floor(&a), a));
    }
    for j in -k_i..=k_i {
        let b = BigInt::from(arr.col_product(j, k)?);
        y_congruences.push((BigInt::from(-j).mod_floor(&b), b));
    }
    let p_k = BigInt::from(arr.primorial(k)?);
    let (x0, mx) = crt_combine(&x_congruences)?;
    let (y0, my) = crt_combine(&y_congruences)?;
    debug_assert_eq!(mx, p_k);
    debug_assert_eq!(my, p_k);
    // Residues land in [0, P_k - 1]; shift once to reach [P_k, 2P_k - 1].
    let x = (x0 + &p_k).to_biguint().expect("positive by construction");
    let y = (y0 + &p_k).to_biguint().expect("positive by construction");
    Ok(CrtPair { k, x, y })
}

/// One divisibility witness of the grid law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridWitness {
    pub i: i64,
    pub j: i64,
    /// Prime dividing both `X_k + i` and `Y_k + j`, as a decimal string.
    pub witness: String,
}

/// Exhaustive table of witnesses over `Ω_k` for one CRT pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCertificate {
    pub k: usize,
    pub entries: Vec<GridWitness>,
}

/// Certifies `p_{i,j} | gcd(X_k + i, Y_k + j)` for every `(i, j) ∈ Ω_k`.
/// A failed divisibility means the construction itself is broken.
pub fn grid_certificate(arr: &PrimeArrangement, pair: &CrtPair) -> Result<GridCertificate> {
    let k = pair.k;
    let x = BigInt::from(pair.x.clone());
    let y = BigInt::from(pair.y.clone());
    let mut entries = Vec::new();
    for (i, j) in omega_set(k) {
        let p = arr
            .prime_at((i, j))
            .ok_or(Error::IndexOutOfRange { index: i, k })?;
        let p_big = BigInt::from(p);
        if !((&x + i) % &p_big).is_zero() || !((&y + j) % &p_big).is_zero() {
            return Err(Error::soundness(
                "(xy)",
                k,
                format!("p_{{{i},{j}}}={p} does not divide both X_{k}+{i} and Y_{k}+{j}"),
            ));
        }
        entries.push(GridWitness {
            i,
            j,
            witness: p.to_string(),
        });
    }
    Ok(GridCertificate { k, entries })
}

/// Consistency of consecutive CRT pairs: `X_{k+1} ≡ X_k` and `Y_{k+1} ≡ Y_k`
/// modulo `P_k`.
pub fn verify_chain(arr: &PrimeArrangement, pairs: &[CrtPair]) -> Result<()> {
    for w in pairs.windows(2) {
        let k = w[0].k;
        let p_k = arr.primorial(k)?;
        if w[1].x.clone() % &p_k != w[0].x.clone() % &p_k
            || w[1].y.clone() % &p_k != w[0].y.clone() % &p_k
        {
            return Err(Error::soundness(
                "(xky)",
                k,
                "consecutive CRT pairs disagree modulo the primorial",
            ));
        }
    }
    Ok(())
}

/// Result of the minimal-coprime-box search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinBox {
    pub t: u64,
    pub i: u64,
    pub j: u64,
}

/// Smallest `t` such that some `0 ≤ i, j ≤ t` makes `gcd(x+i, y+j) = 1`,
/// searching shells outward and lexicographically within each shell.
/// Requires `x ≤ y`.
pub fn erdos_min_box(x: &BigUint, y: &BigUint, t_max: u64) -> Result<MinBox> {
    assert!(x <= y, "convention: x <= y");
    assert!(!x.is_zero(), "positive integers only");
    for t in 0..=t_max {
        // The L-infinity shell at distance t, in lexicographic (i, j) order.
        let shell: Box<dyn Iterator<Item = (u64, u64)>> = if t == 0 {
            Box::new(std::iter::once((0, 0)))
        } else {
            Box::new((0..t).map(move |i| (i, t)).chain((0..=t).map(move |j| (t, j))))
        };
        for (i, j) in shell {
            if (x + i).gcd(&(y + j)).is_one() {
                return Ok(MinBox { t, i, j });
            }
        }
    }
    Err(Error::BoxNotFound { t_max })
}

/// `erdos_min_box` for machine-size inputs.
pub fn erdos_min_box_u64(x: u64, y: u64, t_max: u64) -> Result<MinBox> {
    erdos_min_box(&BigUint::from(x), &BigUint::from(y), t_max)
}

/// Plain-text gcd table of the translated grid for `|i|, |j| ≤ k`.
pub fn gcd_table(pair: &CrtPair, k_show: i64) -> String {
    let x = BigInt::from(pair.x.clone());
    let y = BigInt::from(pair.y.clone());
    let mut cells: Vec<Vec<String>> = Vec::new();
    for i in -k_show..=k_show {
        let mut row = Vec::new();
        for j in -k_show..=k_show {
            let g = (&x + i).gcd(&(&y + j));
            row.push(match g.to_u64() {
                Some(v) => v.to_string(),
                None => format!("~10^{}", g.to_string().len() - 1),
            });
        }
        cells.push(row);
    }
    let width = cells
        .iter()
        .flatten()
        .map(String::len)
        .max()
        .unwrap_or(1)
        .max(4);
    let mut out = String::new();
    out.push_str(&format!("gcd(X_{0}+i, Y_{0}+j) for |i|,|j| <= {1}\n", pair.k, k_show));
    out.push_str(&format!("{:>width$} ", "i\\j"));
    for j in -k_show..=k_show {
        out.push_str(&format!("{j:>width$} "));
    }
    out.push('\n');
    for (row, i) in cells.iter().zip(-k_show..=k_show) {
        out.push_str(&format!("{i:>width$} "));
        for cell in row {
            out.push_str(&format!("{cell:>width$} "));
        }
        out.push('\n');
    }
    out
}
