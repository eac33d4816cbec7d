//! Growing prime table backed by a segmented Eratosthenes sieve.

/// Prime table that extends itself on demand.
#[derive(Debug, Clone, Default)]
pub struct Primes {
    list: Vec<u64>,
    sieved_to: u64,
}

impl Primes {
    pub fn new() -> Self {
        Self {
            list: Vec::new(),
            sieved_to: 1,
        }
    }

    /// First `n` primes, extending the table if needed.
    pub fn first_n(&mut self, n: usize) -> &[u64] {
        while self.list.len() < n {
            self.extend();
        }
        &self.list[..n]
    }

    /// The `n`-th prime, 1-based (`nth(1) == 2`).
    pub fn nth(&mut self, n: usize) -> u64 {
        assert!(n >= 1);
        self.first_n(n)[n - 1]
    }

    fn extend(&mut self) {
        if self.list.is_empty() {
            self.list.push(2);
            self.list.push(3);
            self.sieved_to = 3;
            return;
        }
        let lo = self.sieved_to + 1;
        // The segment must stay below sieved_to² so the base primes cover it.
        let hi = (self.sieved_to * 2)
            .max(16)
            .min(self.sieved_to * self.sieved_to);
        let root = (hi as f64).sqrt() as u64 + 1;
        assert!(root <= self.sieved_to + 1, "segment outgrew its base primes");
        let len = (hi - lo + 1) as usize;
        let mut composite = vec![false; len];
        for &p in &self.list {
            if p > root {
                break;
            }
            let start = lo.div_ceil(p).max(2) * p;
            let mut m = start;
            while m <= hi {
                composite[(m - lo) as usize] = true;
                m += p;
            }
        }
        for (off, &c) in composite.iter().enumerate() {
            if !c {
                self.list.push(lo + off as u64);
            }
        }
        self.sieved_to = hi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_prime_naive(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn first_primes_match_naive() {
        let mut primes = Primes::new();
        let got = primes.first_n(200).to_vec();
        let naive: Vec<u64> = (2..).filter(|&n| is_prime_naive(n)).take(200).collect();
        assert_eq!(got, naive);
    }

    #[test]
    fn nth_is_one_based() {
        let mut primes = Primes::new();
        assert_eq!(primes.nth(1), 2);
        assert_eq!(primes.nth(9), 23);
        assert_eq!(primes.nth(21), 73);
        assert_eq!(primes.nth(100), 541);
    }
}
