//! Sampling of conditioned paths and Monte Carlo persistence estimates.
//!
//! Every sample draws from its own ChaCha stream `(seed, sample index)`,
//! so results do not depend on the number of worker threads.

mod backward;
mod bisection;
mod clt;

pub use backward::BackwardTable;
pub use bisection::BridgeSampler;
pub use clt::{
    chi_square_test, marginal_chi_square, pinned_clt_check, pinned_marginal_density,
    pinned_marginal_moments, ChiSquare, MarginalCheck, PinnedCltReport,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Regime;
use crate::lattice::{in_support, triangular, State, StepPath};
use crate::transforms::is_positive;

/// Generator for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `count` samples in parallel, sample `i` from stream `i`.
pub fn par_samples<T: Send>(
    seed: u64,
    count: usize,
    f: impl Fn(&mut ChaCha8Rng) -> T + Sync,
) -> Vec<T> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| f(&mut sample_rng(seed, i)))
        .collect()
}

/// Nearest integer `≡ parity (mod 2)` to `x`, ties to the smaller one.
fn nearest_with_parity(x: f64, parity: i64) -> i64 {
    let lo = 2 * ((x - parity as f64) / 2.0).floor() as i64 + parity;
    let hi = lo + 2;
    if x - lo as f64 <= hi as f64 - x {
        lo
    } else {
        hi
    }
}

/// Smallest and largest `A_n` over paths of length `n` ending at `s`.
pub fn area_range(n: usize, s: i64) -> Option<(i64, i64)> {
    let n_i = n as i64;
    if s.abs() > n_i || (n_i - s) % 2 != 0 {
        return None;
    }
    let ups = (n_i + s) / 2;
    let downs = n_i - ups;
    // All ups first maximizes the area; all downs first minimizes it.
    let max = ups * (ups + 1) / 2 + downs * ups - downs * (downs + 1) / 2;
    let min = -(downs * (downs + 1) / 2) - ups * downs + ups * (ups + 1) / 2;
    Some((min, max))
}

/// `true` iff some path of length `n` ends at `st`.
pub fn reachable(n: usize, st: State) -> bool {
    in_support(n, (st.s, st.a))
        && area_range(n, st.s).is_some_and(|(lo, hi)| st.a >= lo && st.a <= hi)
}

/// Lattice pin for a real target `p` at horizon `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinSpec {
    pub horizon: usize,
    /// Real target, if the pin was rounded from one.
    pub target: Option<(f64, f64)>,
    pub state: State,
}

impl PinSpec {
    /// Rounds `(√N p1, N^{3/2} p2)` to the nearest parity-correct lattice
    /// point, coordinatewise, ties toward smaller coordinates.
    pub fn round(horizon: usize, p: (f64, f64)) -> Result<Self> {
        let nf = horizon as f64;
        let s = nearest_with_parity(nf.sqrt() * p.0, (horizon % 2) as i64);
        let a = nearest_with_parity(nf.powf(1.5) * p.1, triangular(horizon) % 2);
        let state = State::new(s, a);
        if !reachable(horizon, state) {
            return Err(Error::UnreachablePin { n: horizon, s, a });
        }
        Ok(Self {
            horizon,
            target: Some(p),
            state,
        })
    }

    pub fn exact(horizon: usize, state: State) -> Result<Self> {
        if !reachable(horizon, state) {
            return Err(Error::UnreachablePin {
                n: horizon,
                s: state.s,
                a: state.a,
            });
        }
        Ok(Self {
            horizon,
            target: None,
            state,
        })
    }

    /// Pin in scaled coordinates.
    pub fn scaled(&self) -> (f64, f64) {
        let nf = self.horizon as f64;
        (
            self.state.s as f64 / nf.sqrt(),
            self.state.a as f64 / nf.powf(1.5),
        )
    }
}

/// Breakpoints `(S_k/√N, A_k/N^{3/2})`, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledPath {
    pub horizon: usize,
    pub points: Vec<(f64, f64)>,
}

impl ScaledPath {
    pub fn from_path(path: &StepPath) -> Self {
        let n = path.len();
        let nf = (n.max(1)) as f64;
        let (cs, ca) = (nf.sqrt(), nf.powf(1.5));
        let mut s = 0i64;
        let mut a = 0i64;
        let mut points = Vec::with_capacity(n + 1);
        points.push((0.0, 0.0));
        for &x in path.steps() {
            s += x as i64;
            a += s;
            points.push((s as f64 / cs, a as f64 / ca));
        }
        Self { horizon: n, points }
    }

    pub fn from_points(points: Vec<(f64, f64)>) -> Self {
        Self {
            horizon: points.len().saturating_sub(1),
            points,
        }
    }

    /// Value at time `t ∈ [0, 1]`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        if self.horizon == 0 {
            return self.points[0];
        }
        let x = t.clamp(0.0, 1.0) * self.horizon as f64;
        let k = (x.floor() as usize).min(self.horizon - 1);
        let frac = x - k as f64;
        let (p, q) = (self.points[k], self.points[k + 1]);
        (p.0 + frac * (q.0 - p.0), p.1 + frac * (q.1 - p.1))
    }
}

/// `min(1, max(0, inf_t z2(t)))`; the infimum of a piecewise linear path
/// is attained at a breakpoint.
pub fn positivity_functional(path: &ScaledPath) -> f64 {
    let inf = path
        .points
        .iter()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    inf.clamp(0.0, 1.0)
}

/// Uniform path of length `n`.
pub fn free_path<R: Rng>(n: usize, rng: &mut R) -> StepPath {
    let steps: Vec<i64> = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    StepPath::new(steps).expect("steps are ±1")
}

/// Uniform path of length `n` (even) with `S_n = 0`.
pub fn s_bridge_path<R: Rng>(n: usize, rng: &mut R) -> StepPath {
    let mut s = 0i64;
    let mut steps = Vec::with_capacity(n);
    for k in 0..n {
        let remaining = (n - k) as i64;
        let ups_needed = (remaining - s) / 2;
        let x = if rng.random::<f64>() * (remaining as f64) < ups_needed as f64 {
            1
        } else {
            -1
        };
        s += x;
        steps.push(x);
    }
    StepPath::new(steps).expect("steps are ±1")
}

/// Largest horizon sampled with full backward tables; longer bridges use
/// the bisection sampler.
pub const TABLE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub n: usize,
    pub regime: Regime,
    pub samples: usize,
    pub seed: u64,
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of the persistence probability in one regime.
pub fn mc_persistence(n: usize, samples: usize, seed: u64, regime: Regime) -> Result<McEstimate> {
    if n == 0 || samples == 0 {
        return Err(Error::InvalidArgument(
            "need n >= 1 and samples >= 1".into(),
        ));
    }
    let hits: Vec<bool> = match regime {
        Regime::Free => par_samples(seed, samples, |rng| is_positive(&free_path(n, rng))),
        Regime::SBridge => {
            if !n.is_multiple_of(2) {
                return Err(Error::OddHorizon(n));
            }
            par_samples(seed, samples, |rng| is_positive(&s_bridge_path(n, rng)))
        }
        Regime::FullBridge => {
            if !n.is_multiple_of(4) {
                return Err(Error::NotMultipleOfFour(n));
            }
            if n <= TABLE_LIMIT {
                let table = BackwardTable::<f64>::build(n, Some(State::ORIGIN), false)?;
                par_samples(seed, samples, |rng| is_positive(&table.sample_path(rng)))
            } else {
                let sampler = BridgeSampler::new(n, State::ORIGIN)?;
                par_samples(seed, samples, |rng| is_positive(&sampler.sample_path(rng)))
            }
        }
    };
    let k = hits.iter().filter(|&&h| h).count() as f64;
    let m = samples as f64;
    let estimate = k / m;
    Ok(McEstimate {
        n,
        regime,
        samples,
        seed,
        estimate,
        std_error: (estimate * (1.0 - estimate) / m).sqrt(),
    })
}
