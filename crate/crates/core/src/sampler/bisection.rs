use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{State, StepPath};
use crate::layer::{Constraint, Layer};

/// Segments up to this length are sampled step by step.
const BASE: usize = 32;

/// Exact sampler for walk bridges `(0,0) -> pin` of any length, without an
/// area constraint.
///
/// A segment of length `L = L1 + L2` from `x` to `y` is split by proposing
/// its first `L1` steps as a free walk and accepting the proposal with
/// probability `F_{L2}(y - z) / max F_{L2}`, where `z` is the proposed
/// midpoint state and `F_L` is the free law after `L` steps seen from `z`.
/// Only the free layers for the split lengths are stored.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    horizon: usize,
    pin: State,
    base: Vec<Layer<f64>>,
    split: BTreeMap<usize, (Layer<f64>, f64)>,
}

/// State offset that a walk started at `z` must add in `len` steps to end
/// at `y`.
fn offset(z: State, y: State, len: usize) -> State {
    State::new(y.s - z.s, y.a - z.a - len as i64 * z.s)
}

fn split_lengths(len: usize, out: &mut Vec<usize>) {
    if len <= BASE {
        return;
    }
    let l2 = len - len / 2;
    out.push(l2);
    split_lengths(l2, out);
}

impl BridgeSampler {
    pub fn new(horizon: usize, pin: State) -> Result<Self> {
        if !super::reachable(horizon, pin) {
            return Err(Error::UnreachablePin {
                n: horizon,
                s: pin.s,
                a: pin.a,
            });
        }
        let mut wanted = Vec::new();
        split_lengths(horizon, &mut wanted);
        let top = wanted.iter().copied().max().unwrap_or(0);
        let mut base = Vec::with_capacity(BASE + 1);
        let mut split = BTreeMap::new();
        let mut layer = Layer::<f64>::origin(Constraint::Free);
        for len in 0..=top.max(BASE) {
            if len > 0 {
                layer = layer.step();
            }
            if len <= BASE {
                base.push(layer.clone());
            }
            if wanted.contains(&len) {
                let max = layer.cells().iter().copied().fold(0.0, f64::max);
                split.insert(len, (layer.clone(), max));
            }
        }
        Ok(Self {
            horizon,
            pin,
            base,
            split,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pin(&self) -> State {
        self.pin
    }

    pub fn sample_path<R: Rng>(&self, rng: &mut R) -> StepPath {
        let mut steps = Vec::with_capacity(self.horizon);
        self.fill(State::ORIGIN, self.horizon, self.pin, rng, &mut steps);
        StepPath::new(steps.into_iter().map(i64::from)).expect("steps are ±1")
    }

    fn fill<R: Rng>(&self, x: State, len: usize, y: State, rng: &mut R, out: &mut Vec<i8>) {
        if len <= BASE {
            self.fill_sequential(x, len, y, rng, out);
            return;
        }
        let l1 = len / 2;
        let l2 = len - l1;
        let (law, max) = &self.split[&l2];
        let mut proposal = Vec::with_capacity(l1);
        loop {
            proposal.clear();
            let mut z = x;
            for _ in 0..l1 {
                let step: i8 = if rng.random::<bool>() { 1 } else { -1 };
                z = z.advance(step);
                proposal.push(step);
            }
            let w = law.get(offset(z, y, l2)).copied().unwrap_or(0.0);
            if w > 0.0 && rng.random::<f64>() * max < w {
                out.extend_from_slice(&proposal);
                self.fill(z, l2, y, rng, out);
                return;
            }
        }
    }

    fn fill_sequential<R: Rng>(
        &self,
        x: State,
        len: usize,
        y: State,
        rng: &mut R,
        out: &mut Vec<i8>,
    ) {
        let mut st = x;
        for r in (1..=len).rev() {
            let law = &self.base[r - 1];
            let up = law
                .get(offset(st.advance(1), y, r - 1))
                .copied()
                .unwrap_or(0.0);
            let down = law
                .get(offset(st.advance(-1), y, r - 1))
                .copied()
                .unwrap_or(0.0);
            debug_assert!(up + down > 0.0, "segment endpoint unreachable");
            let step: i8 = if rng.random::<f64>() * (up + down) < up {
                1
            } else {
                -1
            };
            st = st.advance(step);
            out.push(step);
        }
        debug_assert_eq!(st, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::evolve;
    use crate::sampler::{par_samples, BackwardTable};

    #[test]
    fn endpoints_hit_the_pin() {
        for (n, pin) in [
            (100usize, State::ORIGIN),
            (130, State::new(4, 301)),
            (33, State::new(1, 17)),
        ] {
            let s = BridgeSampler::new(n, pin).unwrap();
            for p in par_samples(5, 200, |rng| s.sample_path(rng)) {
                assert_eq!(p.len(), n);
                assert_eq!(*evolve(&p).last().unwrap(), pin);
            }
        }
    }

    #[test]
    fn law_matches_backward_table() {
        // Horizon 72 splits once (36 + 36) before the sequential base.
        let n = 72;
        let sampler = BridgeSampler::new(n, State::ORIGIN).unwrap();
        let table = BackwardTable::<f64>::build(n, Some(State::ORIGIN), false).unwrap();
        let k = 36;
        let exact: std::collections::HashMap<i64, f64> =
            table
                .marginal(k)
                .into_iter()
                .fold(Default::default(), |mut m, (st, p)| {
                    *m.entry(st.s).or_default() += p;
                    m
                });
        let count = 40_000;
        let paths = par_samples(11, count, |rng| sampler.sample_path(rng));
        let mut hist = std::collections::HashMap::<i64, f64>::new();
        for p in &paths {
            *hist.entry(p.walk()[k]).or_default() += 1.0 / count as f64;
        }
        for (s, p) in exact {
            let got = hist.get(&s).copied().unwrap_or(0.0);
            let se = (p * (1.0 - p) / count as f64).sqrt();
            assert!((got - p).abs() < 5.0 * se + 1e-4, "s={s}: {got} vs {p}");
        }
    }

    #[test]
    fn rejects_unreachable() {
        assert!(BridgeSampler::new(8, State::new(0, 20)).is_err());
        assert!(BridgeSampler::new(8, State::new(8, 0)).is_err());
    }
}
