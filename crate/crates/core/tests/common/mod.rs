//! Brute-force enumeration over all `2^n` step sequences. Nothing here
//! calls into the library, so it serves as an independent reference.
#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;

pub fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn ratio(num: i128, den: i128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Walk and area at times `0..=n` for path number `bits` (bit `i` set
/// means step `i + 1` is up).
pub fn walk(n: usize, bits: u64) -> (Vec<i64>, Vec<i64>) {
    let mut s = vec![0i64; n + 1];
    let mut a = vec![0i64; n + 1];
    for i in 0..n {
        let x = if (bits >> i) & 1 == 1 { 1 } else { -1 };
        s[i + 1] = s[i] + x;
        a[i + 1] = a[i] + s[i + 1];
    }
    (s, a)
}

pub fn positive(a: &[i64]) -> bool {
    a[1..].iter().all(|&v| v >= 0)
}

pub struct Enumeration {
    pub n: usize,
    /// Endpoint counts over all paths.
    pub all: HashMap<(i64, i64), i128>,
    /// Endpoint counts over paths with `A_1..A_n >= 0`.
    pub pos: HashMap<(i64, i64), i128>,
}

impl Enumeration {
    pub fn new(n: usize) -> Self {
        let mut all = HashMap::new();
        let mut pos = HashMap::new();
        for bits in 0..(1u64 << n) {
            let (s, a) = walk(n, bits);
            let end = (s[n], a[n]);
            *all.entry(end).or_insert(0) += 1;
            if positive(&a) {
                *pos.entry(end).or_insert(0) += 1;
            }
        }
        Self { n, all, pos }
    }

    fn total(&self) -> i128 {
        1i128 << self.n
    }

    pub fn point_prob(&self, l: (i64, i64)) -> BigRational {
        ratio(self.all.get(&l).copied().unwrap_or(0), self.total())
    }

    pub fn persistence(&self) -> BigRational {
        ratio(self.pos.values().sum(), self.total())
    }

    /// `(joint, conditioning event, conditional)` for `S_n = A_n = 0`.
    pub fn bridge(&self) -> (BigRational, BigRational, BigRational) {
        let j = self.pos.get(&(0, 0)).copied().unwrap_or(0);
        let f = self.all.get(&(0, 0)).copied().unwrap_or(0);
        (ratio(j, self.total()), ratio(f, self.total()), ratio(j, f))
    }

    /// Same for `S_n = 0`.
    pub fn s_bridge(&self) -> (BigRational, BigRational, BigRational) {
        let j: i128 = self
            .pos
            .iter()
            .filter(|(k, _)| k.0 == 0)
            .map(|(_, c)| c)
            .sum();
        let f: i128 = self
            .all
            .iter()
            .filter(|(k, _)| k.0 == 0)
            .map(|(_, c)| c)
            .sum();
        (ratio(j, self.total()), ratio(f, self.total()), ratio(j, f))
    }

    fn cond_mean(&self, f: impl Fn(i64, i64) -> i64) -> BigRational {
        let den: i128 = self.pos.values().sum();
        let num: i128 = self
            .pos
            .iter()
            .map(|(&(s, a), &c)| f(s, a) as i128 * c)
            .sum();
        ratio(num, den)
    }

    /// `(E|S_n|, E A_n, E S_n^+)` given positivity.
    pub fn moments(&self) -> (BigRational, BigRational, BigRational) {
        (
            self.cond_mean(|s, _| s.abs()),
            self.cond_mean(|_, a| a),
            self.cond_mean(|s, _| s.max(0)),
        )
    }

    pub fn tail_lhs(&self, l: usize, m: i64) -> BigRational {
        let lm = l as i64 * m;
        self.cond_mean(|s, a| (s >= m && a >= lm) as i64)
    }

    /// `P({S_n >= 2m} ∩ positivity)`.
    pub fn association_lhs(&self, m: i64) -> BigRational {
        let c: i128 = self
            .pos
            .iter()
            .filter(|(k, _)| k.0 >= 2 * m)
            .map(|(_, c)| c)
            .sum();
        ratio(c, self.total())
    }

    /// `P(S_n` satisfies `pred)`.
    pub fn walk_prob(&self, pred: impl Fn(i64) -> bool) -> BigRational {
        let c: i128 = self
            .all
            .iter()
            .filter(|(k, _)| pred(k.0))
            .map(|(_, c)| c)
            .sum();
        ratio(c, self.total())
    }
}

/// `(P(v > n), E[S_n; v > n], P(v <= n))` with `v` the first hit of -1.
pub fn first_passage(n: usize) -> (BigRational, BigRational, BigRational) {
    let mut surv = 0i128;
    let mut sum = 0i128;
    for bits in 0..(1u64 << n) {
        let (s, _) = walk(n, bits);
        if s.iter().all(|&v| v >= 0) {
            surv += 1;
            sum += s[n] as i128;
        }
    }
    let t = 1i128 << n;
    (ratio(surv, t), ratio(sum, t), ratio(t - surv, t))
}

/// `E(S_{n+1} | S_1..S_{n+1} > 0)`.
pub fn strict_positive_moment(n: usize) -> BigRational {
    let len = n + 1;
    let (mut num, mut den) = (0i128, 0i128);
    for bits in 0..(1u64 << len) {
        let (s, _) = walk(len, bits);
        if s[1..].iter().all(|&v| v > 0) {
            den += 1;
            num += s[len] as i128;
        }
    }
    ratio(num, den)
}

/// `E(S_n^+ | S_t = 0, S_j > 0 for t < j <= n)`, or `None` if the event
/// is empty.
pub fn last_zero_moment(n: usize, t: usize) -> Option<BigRational> {
    let (mut num, mut den) = (0i128, 0i128);
    for bits in 0..(1u64 << n) {
        let (s, _) = walk(n, bits);
        if s[t] == 0 && s[t + 1..].iter().all(|&v| v > 0) {
            den += 1;
            num += s[n].max(0) as i128;
        }
    }
    (den > 0).then(|| ratio(num, den))
}

/// `P(A_j >= 0 for j in range | S_N = A_N = 0)`.
pub fn bridge_window_positive(
    n_total: usize,
    range: std::ops::RangeInclusive<usize>,
) -> BigRational {
    let (mut num, mut den) = (0i128, 0i128);
    for bits in 0..(1u64 << n_total) {
        let (s, a) = walk(n_total, bits);
        if s[n_total] == 0 && a[n_total] == 0 {
            den += 1;
            if range.clone().all(|j| a[j] >= 0) {
                num += 1;
            }
        }
    }
    ratio(num, den)
}
