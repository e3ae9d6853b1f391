//! Exact laws of the walk-area pair by dynamic programming.
//!
//! Every operation takes a [`Precision`]. Exact mode stores path counts
//! (in `u128` while they fit, big integers beyond) and returns dyadic
//! weights or rationals; float mode stores probabilities.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{in_support, in_tilde_support, State};
use crate::layer::{Constraint, Layer};
use crate::weight::{check_budget, Mass, Precision, Value, Weight, U128_LIMIT};

macro_rules! dispatch {
    ($precision:expr, $n:expr, $f:ident ( $($arg:expr),* )) => {
        match $precision {
            Precision::Exact if $n <= U128_LIMIT => $f::<u128>($($arg),*),
            Precision::Exact => $f::<BigUint>($($arg),*),
            Precision::Float => $f::<f64>($($arg),*),
        }
    };
}

/// One step of a layer.
pub fn step_layer<M: Mass>(layer: &Layer<M>) -> Layer<M> {
    layer.step()
}

/// Law of `(S_n, A_n)`.
pub fn free_layer<M: Mass>(n: usize) -> Layer<M> {
    Layer::after(State::ORIGIN, n, Constraint::Free)
}

/// Law of `(S_n, A_n)` restricted to `A_1, ..., A_n >= 0`.
pub fn positive_layer<M: Mass>(n: usize) -> Layer<M> {
    Layer::after(State::ORIGIN, n, Constraint::PositiveArea)
}

fn zero_weight(n: usize, precision: Precision) -> Weight {
    match precision {
        Precision::Exact => Weight::exact(BigUint::zero(), n),
        Precision::Float => Weight::Float(0.0),
    }
}

/// `Σ f(x)·m / 2^scale` over the given items (float masses are already
/// probabilities).
fn linear_value<'a, M: Mass>(items: impl Iterator<Item = (i64, &'a M)>, scale: usize) -> Value {
    if M::EXACT {
        let mut num = BigInt::zero();
        for (f, m) in items {
            if f != 0 {
                num += BigInt::from(m.to_biguint().expect("exact mass")) * f;
            }
        }
        Value::Exact(BigRational::new(num, BigInt::one() << scale))
    } else {
        Value::Float(items.map(|(f, m)| f as f64 * m.raw_f64()).sum())
    }
}

fn conditional_mean<M: Mass>(layer: &Layer<M>, f: impl Fn(State) -> i64) -> Result<Value> {
    let scale = layer.time();
    let den = linear_value(layer.iter().map(|(_, m)| (1, m)), scale);
    let empty = match &den {
        Value::Exact(r) => r.is_zero(),
        Value::Float(v) => *v == 0.0,
    };
    if empty {
        return Err(Error::NullConditioning(
            "the positivity event is empty".into(),
        ));
    }
    let num = linear_value(layer.iter().map(|(st, m)| (f(st), m)), scale);
    Ok(num.div(&den))
}

fn row_total<M: Mass>(layer: &Layer<M>, s: i64) -> M {
    let mut acc = M::default();
    if let Some((_, row)) = layer.row(s) {
        for m in row {
            acc.accumulate(m);
        }
    }
    acc
}

/// `P((S_n, A_n) = l)`; zero off the parity support.
pub fn point_prob(n: usize, l: (i64, i64), precision: Precision) -> Result<Weight> {
    check_budget(n, precision)?;
    if !in_support(n, l) {
        return Ok(zero_weight(n, precision));
    }
    fn run<M: Mass>(n: usize, st: State) -> Weight {
        free_layer::<M>(n).mass(st).into_weight(n)
    }
    Ok(dispatch!(precision, n, run(n, State::new(l.0, l.1))))
}

/// `P(A_1 >= 0, ..., A_n >= 0)`.
pub fn persistence(n: usize, precision: Precision) -> Result<Weight> {
    if n == 0 {
        return Err(Error::InvalidArgument("persistence needs n >= 1".into()));
    }
    check_budget(n, precision)?;
    fn run<M: Mass>(n: usize) -> Weight {
        positive_layer::<M>(n).total().into_weight(n)
    }
    Ok(dispatch!(precision, n, run(n)))
}

/// Positivity probability under a conditioning event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    pub horizon: usize,
    /// Probability of positivity and the conditioning event together.
    pub joint: Weight,
    /// Probability of the conditioning event.
    pub free: Weight,
    pub conditional: Value,
}

/// `P(A_1..A_N >= 0 | S_N = A_N = 0)`.
pub fn bridge_persistence(n: usize, precision: Precision) -> Result<BridgeReport> {
    if n == 0 || !n.is_multiple_of(4) {
        return Err(Error::NotMultipleOfFour(n));
    }
    check_budget(n, precision)?;
    fn run<M: Mass>(n: usize) -> (Weight, Weight) {
        (
            positive_layer::<M>(n).mass(State::ORIGIN).into_weight(n),
            free_layer::<M>(n).mass(State::ORIGIN).into_weight(n),
        )
    }
    let (joint, free) = dispatch!(precision, n, run(n));
    let conditional = joint.ratio(&free)?;
    Ok(BridgeReport {
        horizon: n,
        joint,
        free,
        conditional,
    })
}

/// `P(A_1..A_N >= 0 | S_N = 0)`.
pub fn s_bridge_persistence(n: usize, precision: Precision) -> Result<BridgeReport> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddHorizon(n));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 2".into()));
    }
    check_budget(n, precision)?;
    fn run<M: Mass>(n: usize) -> (Weight, Weight) {
        (
            row_total(&positive_layer::<M>(n), 0).into_weight(n),
            row_total(&free_layer::<M>(n), 0).into_weight(n),
        )
    }
    let (joint, free) = dispatch!(precision, n, run(n));
    let conditional = joint.ratio(&free)?;
    Ok(BridgeReport {
        horizon: n,
        joint,
        free,
        conditional,
    })
}

/// Persistence quantities for every horizon `1..=n_max` from one sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub n: usize,
    pub persistence: Weight,
    /// Present for even `n`.
    pub s_bridge: Option<BridgeReport>,
    /// Present for `n` divisible by 4.
    pub bridge: Option<BridgeReport>,
}

pub fn persistence_profile(n_max: usize, precision: Precision) -> Result<Vec<ProfilePoint>> {
    check_budget(n_max, precision)?;
    fn run<M: Mass>(n_max: usize) -> Result<Vec<ProfilePoint>> {
        let mut free = Layer::<M>::origin(Constraint::Free);
        let mut pos = Layer::<M>::origin(Constraint::PositiveArea);
        let mut out = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            free = free.step();
            pos = pos.step();
            let report = |joint: M, base: M| -> Result<BridgeReport> {
                let joint = joint.into_weight(n);
                let free = base.into_weight(n);
                Ok(BridgeReport {
                    horizon: n,
                    conditional: joint.ratio(&free)?,
                    joint,
                    free,
                })
            };
            let s_bridge = if n % 2 == 0 {
                Some(report(row_total(&pos, 0), row_total(&free, 0))?)
            } else {
                None
            };
            let bridge = if n % 4 == 0 {
                Some(report(pos.mass(State::ORIGIN), free.mass(State::ORIGIN))?)
            } else {
                None
            };
            out.push(ProfilePoint {
                n,
                persistence: pos.total().into_weight(n),
                s_bridge,
                bridge,
            });
        }
        Ok(out)
    }
    dispatch!(precision, n_max, run(n_max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    pub n: usize,
    pub e_abs_s: Value,
    pub e_a: Value,
    pub e_s_plus: Value,
}

/// `E(|S_n|)`, `E(A_n)` and `E(S_n^+)` given `A_1..A_n >= 0`.
pub fn conditional_moments(n: usize, precision: Precision) -> Result<Moments> {
    if n == 0 {
        return Err(Error::InvalidArgument("moments need n >= 1".into()));
    }
    check_budget(n, precision)?;
    fn run<M: Mass>(n: usize) -> Result<Moments> {
        let layer = positive_layer::<M>(n);
        Ok(Moments {
            n,
            e_abs_s: conditional_mean(&layer, |st| st.s.abs())?,
            e_a: conditional_mean(&layer, |st| st.a)?,
            e_s_plus: conditional_mean(&layer, |st| st.s.max(0))?,
        })
    }
    dispatch!(precision, n, run(n))
}

/// Walk law after `n` steps killed on entering `s < floor`; index is `s`.
fn killed_walk<M: Mass>(n: usize, first: i64, floor: i64) -> Vec<M> {
    let width = n + 2;
    let mut cur = vec![M::default(); width];
    cur[0] = M::unit();
    // Index i holds S = i; the start is at 0 and the barrier is applied
    // from time `first` onwards.
    for k in 1..=n {
        let mut next = vec![M::default(); width];
        for (i, m) in cur.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            let s = i as i64;
            for t in [s + 1, s - 1] {
                if t < 0 || (k as i64 >= first && t < floor) {
                    continue;
                }
                next[t as usize].add_branch(m);
            }
        }
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstPassage {
    pub n: usize,
    /// `P(v > n)` with `v` the first hitting time of -1.
    pub p_survive: Value,
    /// `E[S_n; v > n]`.
    pub lhs: Value,
    /// `P(v <= n)`.
    pub rhs: Value,
}

fn first_passage_any(n: usize, precision: Precision) -> FirstPassage {
    fn run<M: Mass>(n: usize) -> FirstPassage {
        let law = killed_walk::<M>(n, 1, 0);
        let p_survive = linear_value(law.iter().map(|m| (1, m)), n);
        let lhs = linear_value(law.iter().enumerate().map(|(s, m)| (s as i64, m)), n);
        let rhs = Value::one(M::EXACT).sub(&p_survive);
        FirstPassage {
            n,
            p_survive,
            lhs,
            rhs,
        }
    }
    dispatch!(precision, n, run(n))
}

/// Survival and the optional-stopping identity for the walk killed at -1.
pub fn first_passage(n: usize, precision: Precision) -> Result<FirstPassage> {
    if n == 0 {
        return Err(Error::InvalidArgument("first passage needs n >= 1".into()));
    }
    Ok(first_passage_any(n, precision))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrictMoment {
    pub n: usize,
    /// `E(S_{n+1} | S_1, ..., S_{n+1} > 0)` computed directly.
    pub value: Value,
    /// `1 + P(v <= n) / P(v > n)`.
    pub identity: Value,
}

pub fn strict_positive_moment(n: usize, precision: Precision) -> Result<StrictMoment> {
    fn run<M: Mass>(n: usize) -> Value {
        // n + 1 steps staying at or above 1.
        let law = killed_walk::<M>(n + 1, 1, 1);
        let num = linear_value(law.iter().enumerate().map(|(s, m)| (s as i64, m)), n + 1);
        let den = linear_value(law.iter().map(|m| (1, m)), n + 1);
        num.div(&den)
    }
    let value = dispatch!(precision, n, run(n));
    let fp = first_passage_any(n, precision);
    let identity = Value::one(fp.rhs.is_exact()).add(&fp.rhs.div(&fp.p_survive));
    Ok(StrictMoment { n, value, identity })
}

/// Two sides of an inequality `lhs >= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPair {
    pub lhs: Value,
    pub rhs: Value,
    pub holds: bool,
}

impl BoundPair {
    fn new(lhs: Value, rhs: Value) -> Self {
        let holds = lhs.ge(&rhs);
        Self { lhs, rhs, holds }
    }
}

/// Walk law after `l` steps; index `j` holds `S_l = 2j - l`.
fn walk_law<M: Mass>(l: usize) -> Vec<M> {
    let mut cur = vec![M::unit()];
    for _ in 0..l {
        let mut next = vec![M::default(); cur.len() + 1];
        for (j, m) in cur.iter().enumerate() {
            next[j].add_branch(m);
            next[j + 1].add_branch(m);
        }
        cur = next;
    }
    cur
}

fn walk_prob<M: Mass>(l: usize, pred: impl Fn(i64) -> bool) -> Value {
    let law = walk_law::<M>(l);
    linear_value(
        law.iter()
            .enumerate()
            .map(|(j, m)| (pred(2 * j as i64 - l as i64) as i64, m)),
        l,
    )
}

/// `P(S_n >= m, A_n >= l·m | positivity)` against
/// `P(S_l >= 2m)·P(|S_{n-l}| <= m)`.
pub fn tail_joint_bound(n: usize, l: usize, m: i64, precision: Precision) -> Result<BoundPair> {
    if l == 0 || l >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= l < n (got l = {l}, n = {n})"
        )));
    }
    if m < 0 {
        return Err(Error::InvalidArgument(format!("need m >= 0 (got {m})")));
    }
    check_budget(n, precision)?;
    fn run<M: Mass>(n: usize, l: usize, m: i64) -> Result<BoundPair> {
        let layer = positive_layer::<M>(n);
        let lm = l as i64 * m;
        let lhs = conditional_mean(&layer, |st| (st.s >= m && st.a >= lm) as i64)?;
        let rhs = walk_prob::<M>(l, |s| s >= 2 * m).mul(&walk_prob::<M>(n - l, |s| s.abs() <= m));
        Ok(BoundPair::new(lhs, rhs))
    }
    dispatch!(precision, n, run(n, l, m))
}

/// `P({S_l >= 2m} ∩ positivity)` against `P(S_l >= 2m)·P(positivity)`.
pub fn association_check(l: usize, m: i64, precision: Precision) -> Result<BoundPair> {
    if l == 0 {
        return Err(Error::InvalidArgument("need l >= 1".into()));
    }
    if m < 0 {
        return Err(Error::InvalidArgument(format!("need m >= 0 (got {m})")));
    }
    check_budget(l, precision)?;
    fn run<M: Mass>(l: usize, m: i64) -> BoundPair {
        let layer = positive_layer::<M>(l);
        let lhs = linear_value(layer.iter().map(|(st, w)| ((st.s >= 2 * m) as i64, w)), l);
        let pos = linear_value(layer.iter().map(|(_, w)| (1, w)), l);
        let rhs = walk_prob::<M>(l, |s| s >= 2 * m).mul(&pos);
        BoundPair::new(lhs, rhs)
    }
    Ok(dispatch!(precision, l, run(l, m)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub horizon: usize,
    /// `P(positivity ∩ {(S_N, A_N) = (0, 0)})` from a single sweep.
    pub direct: Weight,
    /// The same probability assembled over the states at times `N/4` and
    /// `3N/4`.
    pub composed: Weight,
    /// Every start of the last segment lies in the tilde parity support.
    pub last_starts_in_tilde_support: bool,
    pub equal: bool,
}

/// Splits a positive bridge of length `4n` into segments of lengths
/// `n`, `2n`, `n` joined by the Markov property, each segment run from its
/// shifted start.
pub fn decomposition_identity(horizon: usize, precision: Precision) -> Result<Decomposition> {
    if horizon == 0 || !horizon.is_multiple_of(4) {
        return Err(Error::NotMultipleOfFour(horizon));
    }
    check_budget(horizon, precision)?;
    fn run<M: Mass>(horizon: usize) -> Decomposition {
        let n = horizon / 4;
        let direct = positive_layer::<M>(horizon)
            .mass(State::ORIGIN)
            .into_weight(horizon);
        let first = positive_layer::<M>(n);
        let last = Layer::<M>::reach(State::ORIGIN, n, Constraint::PositiveArea);
        let tilde = last.iter().all(|(st, _)| in_tilde_support(n, (st.s, st.a)));
        let mut exact = BigUint::zero();
        let mut float = 0.0f64;
        for (start, w1) in first.iter() {
            let middle = Layer::<M>::after(start, 2 * n, Constraint::PositiveArea);
            for (mid, w2) in middle.iter() {
                let Some(w3) = last.get(mid) else { continue };
                if w3.is_zero() {
                    continue;
                }
                if M::EXACT {
                    exact += w1.to_biguint().unwrap()
                        * w2.to_biguint().unwrap()
                        * w3.to_biguint().unwrap();
                } else {
                    float += w1.raw_f64() * w2.raw_f64() * w3.raw_f64();
                }
            }
        }
        let composed = if M::EXACT {
            Weight::exact(exact, horizon)
        } else {
            Weight::Float(float)
        };
        let equal = match (&direct, &composed) {
            (Weight::Float(a), Weight::Float(b)) => (a - b).abs() <= 1e-12 * a.abs().max(1e-300),
            _ => direct == composed,
        };
        Decomposition {
            horizon,
            direct,
            composed,
            last_starts_in_tilde_support: tilde,
            equal,
        }
    }
    Ok(dispatch!(precision, horizon, run(horizon)))
}

/// `P(S_n ∈ [a√n, b√n], A_n ∈ [a n^{3/2}, b n^{3/2}] | positivity)`.
pub fn target_zone_mass(n: usize, a_coef: f64, b_coef: f64, precision: Precision) -> Result<Value> {
    if !(a_coef > 0.0 && a_coef < b_coef && b_coef.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < a < b (got a = {a_coef}, b = {b_coef})"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("target zone needs n >= 1".into()));
    }
    check_budget(n, precision)?;
    let sn = (n as f64).sqrt();
    let an = (n as f64).powf(1.5);
    let inside = move |st: State| {
        let (s, a) = (st.s as f64, st.a as f64);
        (s >= a_coef * sn && s <= b_coef * sn && a >= a_coef * an && a <= b_coef * an) as i64
    };
    fn run<M: Mass>(n: usize, inside: impl Fn(State) -> i64) -> Result<Value> {
        conditional_mean(&positive_layer::<M>(n), inside)
    }
    dispatch!(precision, n, run(n, inside))
}
