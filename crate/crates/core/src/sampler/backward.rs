use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{State, StepPath};
use crate::layer::{Constraint, Grid, Layer};
use crate::weight::Mass;

/// Continuation masses `B_k(s, a)` of the constraint event for every time
/// `k`, from the endpoint indicator back to time 0.
#[derive(Debug, Clone)]
pub struct BackwardTable<M> {
    horizon: usize,
    pin: Option<State>,
    positive: bool,
    layers: Vec<Layer<M>>,
}

impl<M: Mass> BackwardTable<M> {
    /// `pin = None` leaves the endpoint free.
    pub fn build(horizon: usize, pin: Option<State>, positive: bool) -> Result<Self> {
        let constraint = if positive {
            Constraint::PositiveArea
        } else {
            Constraint::Free
        };
        let reach = Grid::from_origin(horizon, constraint);
        let last = match pin {
            Some(p) => {
                if !crate::lattice::in_support(horizon, (p.s, p.a)) {
                    return Err(Error::UnreachablePin {
                        n: horizon,
                        s: p.s,
                        a: p.a,
                    });
                }
                let g = Grid::point(p).intersect(&reach);
                Layer::from_parts(horizon, constraint, g, vec![M::unit(); g.len()])
            }
            None => Layer::from_parts(horizon, constraint, reach, vec![M::unit(); reach.len()]),
        };
        let mut layers = vec![last];
        for k in (0..horizon).rev() {
            let next = layers.last().expect("nonempty");
            let grid = next
                .grid()
                .backward()
                .intersect(&Grid::from_origin(k, constraint));
            layers.push(next.pull_back(grid));
        }
        layers.reverse();
        let table = Self {
            horizon,
            pin,
            positive,
            layers,
        };
        if table.layers[0].mass(State::ORIGIN).is_zero() {
            return Err(Error::NullConditioning(match pin {
                Some(p) => format!("no admissible path ends at {p} at horizon {horizon}"),
                None => format!("no admissible path of length {horizon}"),
            }));
        }
        Ok(table)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pin(&self) -> Option<State> {
        self.pin
    }

    pub fn positive(&self) -> bool {
        self.positive
    }

    pub fn layer(&self, k: usize) -> &Layer<M> {
        &self.layers[k]
    }

    /// `B_k(st)` as a raw value (a count for exact masses).
    pub fn raw(&self, k: usize, st: State) -> f64 {
        self.layers[k].get(st).map_or(0.0, Mass::raw_f64)
    }

    /// Probability of the constraint event, `B_0(0, 0)`.
    pub fn event_probability(&self) -> crate::weight::Weight {
        self.layers[0].mass(State::ORIGIN).into_weight(self.horizon)
    }

    /// `(p_up, p_down)` of the conditioned chain at time `k`, or `None` when
    /// the state cannot complete the event.
    pub fn transition(&self, k: usize, st: State) -> Option<(f64, f64)> {
        let next = self.layers.get(k + 1)?;
        let up = next.get(st.advance(1)).map_or(0.0, Mass::raw_f64);
        let down = next.get(st.advance(-1)).map_or(0.0, Mass::raw_f64);
        let total = up + down;
        (total > 0.0).then(|| (up / total, down / total))
    }

    /// One path from the conditioned law.
    pub fn sample_path<R: Rng>(&self, rng: &mut R) -> StepPath {
        let mut st = State::ORIGIN;
        let mut steps = Vec::with_capacity(self.horizon);
        for k in 0..self.horizon {
            let (p_up, _) = self
                .transition(k, st)
                .expect("sampled states keep positive continuation mass");
            let x: i8 = if rng.random::<f64>() < p_up { 1 } else { -1 };
            st = st.advance(x);
            steps.push(x as i64);
        }
        StepPath::new(steps).expect("steps are ±1")
    }

    /// `count` paths; sample `i` uses stream `i` of `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<StepPath> {
        super::par_samples(seed, count, |rng| self.sample_path(rng))
    }

    /// Exact law of the state at time `k` under the conditioned measure:
    /// forward mass times backward mass over the event probability.
    pub fn marginal(&self, k: usize) -> Vec<(State, f64)> {
        let constraint = self.layers[0].constraint();
        let forward = Layer::<f64>::after(State::ORIGIN, k, constraint);
        let total = self.raw(0, State::ORIGIN);
        // Exact tables hold counts: rescale backward counts to probabilities.
        let back_scale = if M::EXACT {
            2f64.powi(-((self.horizon - k) as i32))
        } else {
            1.0
        };
        let event = if M::EXACT {
            total * 2f64.powi(-(self.horizon as i32))
        } else {
            total
        };
        forward
            .iter()
            .filter_map(|(st, f)| {
                let b = self.raw(k, st) * back_scale;
                (b > 0.0).then(|| (st, f * b / event))
            })
            .collect()
    }
}
