//! Dense layers over the `(s, a)` lattice.
//!
//! All states reachable at a fixed time from a single start share the parity
//! of `s` and the parity of `a`, so a layer is a rectangle of cells with
//! stride 2 in both coordinates. A sweep to horizon `N` touches `O(N^4)` cells.

use crate::lattice::{triangular, State};
use crate::weight::Mass;

/// Which paths survive a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Constraint {
    #[default]
    Free,
    /// Every area value after time 0 must be nonnegative.
    PositiveArea,
}

impl Constraint {
    pub fn is_positive(self) -> bool {
        matches!(self, Constraint::PositiveArea)
    }
}

/// Stride-2 rectangle `s = s_min + 2i`, `a = a_min + 2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub s_min: i64,
    pub s_len: usize,
    pub a_min: i64,
    pub a_len: usize,
}

impl Grid {
    pub const EMPTY: Grid = Grid {
        s_min: 0,
        s_len: 0,
        a_min: 0,
        a_len: 0,
    };

    pub fn point(st: State) -> Self {
        Self {
            s_min: st.s,
            s_len: 1,
            a_min: st.a,
            a_len: 1,
        }
    }

    /// Grid of states reachable from the origin in `k` steps.
    pub fn from_origin(k: usize, constraint: Constraint) -> Self {
        let t = triangular(k);
        let grid = Self {
            s_min: -(k as i64),
            s_len: k + 1,
            a_min: -t,
            a_len: (t as usize) + 1,
        };
        if constraint.is_positive() && k > 0 {
            grid.crop_negative_area()
        } else {
            grid
        }
    }

    pub fn is_empty(&self) -> bool {
        self.s_len == 0 || self.a_len == 0
    }

    pub fn len(&self) -> usize {
        self.s_len * self.a_len
    }

    pub fn s_max(&self) -> i64 {
        self.s_min + 2 * (self.s_len as i64 - 1)
    }

    pub fn a_max(&self) -> i64 {
        self.a_min + 2 * (self.a_len as i64 - 1)
    }

    pub fn index(&self, st: State) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        let di = st.s - self.s_min;
        let dj = st.a - self.a_min;
        if di < 0 || dj < 0 || di % 2 != 0 || dj % 2 != 0 {
            return None;
        }
        let (i, j) = ((di / 2) as usize, (dj / 2) as usize);
        (i < self.s_len && j < self.a_len).then_some(i * self.a_len + j)
    }

    pub fn state_at(&self, i: usize, j: usize) -> State {
        State::new(self.s_min + 2 * i as i64, self.a_min + 2 * j as i64)
    }

    /// Keeps only cells with `a >= 0`.
    pub fn crop_negative_area(self) -> Self {
        if self.is_empty() || self.a_min >= 0 {
            return self;
        }
        let a_max = self.a_max();
        let a_min = self.a_min.rem_euclid(2);
        if a_min > a_max {
            return Grid::EMPTY;
        }
        Self {
            a_min,
            a_len: ((a_max - a_min) / 2 + 1) as usize,
            ..self
        }
    }

    /// Grid after one forward step.
    pub fn forward(&self, constraint: Constraint) -> Self {
        if self.is_empty() {
            return Grid::EMPTY;
        }
        let a_min = self.a_min + self.s_min - 1;
        let a_max = self.a_max() + self.s_max() + 1;
        let grid = Self {
            s_min: self.s_min - 1,
            s_len: self.s_len + 1,
            a_min,
            a_len: ((a_max - a_min) / 2 + 1) as usize,
        };
        if constraint.is_positive() {
            grid.crop_negative_area()
        } else {
            grid
        }
    }

    /// Grid of all one-step predecessors.
    pub fn backward(&self) -> Self {
        if self.is_empty() {
            return Grid::EMPTY;
        }
        let a_min = self.a_min - self.s_max();
        let a_max = self.a_max() - self.s_min;
        Self {
            s_min: self.s_min - 1,
            s_len: self.s_len + 1,
            a_min,
            a_len: ((a_max - a_min) / 2 + 1) as usize,
        }
    }

    /// Intersection of two grids with matching parities.
    pub fn intersect(&self, other: &Grid) -> Self {
        if self.is_empty() || other.is_empty() {
            return Grid::EMPTY;
        }
        debug_assert_eq!((self.s_min - other.s_min).rem_euclid(2), 0);
        debug_assert_eq!((self.a_min - other.a_min).rem_euclid(2), 0);
        let s_lo = self.s_min.max(other.s_min);
        let s_hi = self.s_max().min(other.s_max());
        let a_lo = self.a_min.max(other.a_min);
        let a_hi = self.a_max().min(other.a_max());
        if s_lo > s_hi || a_lo > a_hi {
            return Grid::EMPTY;
        }
        Self {
            s_min: s_lo,
            s_len: ((s_hi - s_lo) / 2 + 1) as usize,
            a_min: a_lo,
            a_len: ((a_hi - a_lo) / 2 + 1) as usize,
        }
    }

    /// Row index of walk value `s`, if present.
    fn row(&self, s: i64) -> Option<usize> {
        let di = s - self.s_min;
        if self.is_empty() || di < 0 || di % 2 != 0 {
            return None;
        }
        let i = (di / 2) as usize;
        (i < self.s_len).then_some(i)
    }
}

/// Masses of the states at one time, from a fixed start and constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<M> {
    time: usize,
    constraint: Constraint,
    grid: Grid,
    cells: Vec<M>,
}

impl<M: Mass> Layer<M> {
    /// Unit mass at `start`, time 0.
    pub fn start(start: State, constraint: Constraint) -> Self {
        Self {
            time: 0,
            constraint,
            grid: Grid::point(start),
            cells: vec![M::unit()],
        }
    }

    pub fn origin(constraint: Constraint) -> Self {
        Self::start(State::ORIGIN, constraint)
    }

    /// Layer `n` steps after `start`.
    pub fn after(start: State, n: usize, constraint: Constraint) -> Self {
        let mut layer = Self::start(start, constraint);
        for _ in 0..n {
            layer = layer.step();
        }
        layer
    }

    pub fn from_parts(time: usize, constraint: Constraint, grid: Grid, cells: Vec<M>) -> Self {
        assert_eq!(grid.len(), cells.len(), "cell count must match the grid");
        Self {
            time,
            constraint,
            grid,
            cells,
        }
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cells(&self) -> &[M] {
        &self.cells
    }

    pub fn get(&self, st: State) -> Option<&M> {
        self.grid.index(st).map(|i| &self.cells[i])
    }

    /// Mass at `st`, zero when absent.
    pub fn mass(&self, st: State) -> M {
        self.get(st).cloned().unwrap_or_default()
    }

    /// `(a_min, row)` for walk value `s`.
    pub fn row(&self, s: i64) -> Option<(i64, &[M])> {
        let i = self.grid.row(s)?;
        let len = self.grid.a_len;
        Some((self.grid.a_min, &self.cells[i * len..(i + 1) * len]))
    }

    /// Nonzero cells.
    pub fn iter(&self) -> impl Iterator<Item = (State, &M)> + '_ {
        let a_len = self.grid.a_len.max(1);
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(move |(idx, m)| (self.grid.state_at(idx / a_len, idx % a_len), m))
    }

    pub fn total(&self) -> M {
        let mut acc = M::default();
        for m in &self.cells {
            if !m.is_zero() {
                acc.accumulate(m);
            }
        }
        acc
    }

    /// One step of the pair: `(s, a) -> (s ± 1, a + s ± 1)`, each branch
    /// carrying half the mass. Under the area constraint, targets with
    /// negative area are discarded.
    pub fn step(&self) -> Self {
        let grid = self.grid.forward(self.constraint);
        let mut cells = vec![M::default(); grid.len()];
        if !grid.is_empty() {
            let src = &self.grid;
            for i in 0..src.s_len {
                let s = src.s_min + 2 * i as i64;
                let row = &self.cells[i * src.a_len..(i + 1) * src.a_len];
                for (dir, target_row) in [(1i64, i + 1), (-1i64, i)] {
                    let s2 = s + dir;
                    let shift = src.a_min + s2 - grid.a_min;
                    debug_assert_eq!(shift.rem_euclid(2), 0);
                    let off = shift / 2;
                    let j0 = if off < 0 { (-off) as usize } else { 0 };
                    let out = &mut cells[target_row * grid.a_len..(target_row + 1) * grid.a_len];
                    for j in j0..src.a_len {
                        let m = &row[j];
                        if !m.is_zero() {
                            out[(j as i64 + off) as usize].add_branch(m);
                        }
                    }
                }
            }
        }
        Self {
            time: self.time + 1,
            constraint: self.constraint,
            grid,
            cells,
        }
    }

    /// Continuation masses one step earlier, on `grid`:
    /// `B(s, a) = ½ B'(s + 1, a + s + 1) + ½ B'(s - 1, a + s - 1)` with
    /// `self` holding `B'`. Cells absent from `self` count as zero, so a
    /// constraint on the later time is expressed by cropping its grid.
    pub fn pull_back(&self, grid: Grid) -> Self {
        let mut cells = vec![M::default(); grid.len()];
        for i in 0..grid.s_len {
            let s = grid.s_min + 2 * i as i64;
            let out = &mut cells[i * grid.a_len..(i + 1) * grid.a_len];
            for dir in [1i64, -1] {
                let s2 = s + dir;
                let Some((a_min2, row2)) = self.row(s2) else {
                    continue;
                };
                let shift = grid.a_min + s2 - a_min2;
                debug_assert_eq!(shift.rem_euclid(2), 0);
                let off = shift / 2;
                let j_lo = (-off).max(0) as usize;
                let j_hi = ((row2.len() as i64 - off).max(0) as usize).min(grid.a_len);
                for j in j_lo..j_hi {
                    let m = &row2[(j as i64 + off) as usize];
                    if !m.is_zero() {
                        out[j].add_branch(m);
                    }
                }
            }
        }
        Self {
            time: self.time.saturating_sub(1),
            constraint: self.constraint,
            grid,
            cells,
        }
    }

    /// Continuation masses of reaching `pin` in `steps` steps, for every
    /// start that can reach it. Intermediate times (and the pin itself) obey
    /// the constraint; the start state does not.
    pub fn reach(pin: State, steps: usize, constraint: Constraint) -> Self {
        let mut grid = Grid::point(pin);
        if constraint.is_positive() && steps > 0 {
            grid = grid.crop_negative_area();
        }
        let cells = vec![M::unit(); grid.len()];
        let mut layer = Self {
            time: steps,
            constraint,
            grid,
            cells,
        };
        for remaining in (0..steps).rev() {
            let mut g = layer.grid.backward();
            if constraint.is_positive() && remaining > 0 {
                g = g.crop_negative_area();
            }
            layer = layer.pull_back(g);
        }
        layer
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(layer: &Layer<u128>) -> Vec<(State, u128)> {
        let mut v: Vec<_> = layer.iter().map(|(s, m)| (s, *m)).collect();
        v.sort();
        v
    }

    #[test]
    fn first_steps() {
        let l1 = Layer::<u128>::origin(Constraint::Free).step();
        assert_eq!(
            collect(&l1),
            vec![(State::new(-1, -1), 1), (State::new(1, 1), 1)]
        );
        let p1 = Layer::<u128>::origin(Constraint::PositiveArea).step();
        assert_eq!(collect(&p1), vec![(State::new(1, 1), 1)]);
        let l2 = l1.step();
        assert_eq!(
            collect(&l2),
            vec![
                (State::new(-2, -3), 1),
                (State::new(0, -1), 1),
                (State::new(0, 1), 1),
                (State::new(2, 3), 1)
            ]
        );
        let f2 = Layer::<f64>::after(State::ORIGIN, 2, Constraint::Free);
        assert_eq!(f2.mass(State::new(0, 1)), 0.25);
    }

    #[test]
    fn grid_matches_origin_formula() {
        for constraint in [Constraint::Free, Constraint::PositiveArea] {
            let mut layer = Layer::<u128>::origin(constraint);
            for k in 1..=12 {
                layer = layer.step();
                assert_eq!(*layer.grid(), Grid::from_origin(k, constraint), "k={k}");
            }
        }
    }

    #[test]
    fn free_mass_conserved_and_symmetric() {
        let mut layer = Layer::<u128>::origin(Constraint::Free);
        for k in 1..=40usize {
            layer = layer.step();
            assert_eq!(layer.total(), 1u128 << k);
            for (st, m) in layer.iter() {
                assert_eq!(layer.mass(State::new(-st.s, -st.a)), *m);
            }
        }
    }

    #[test]
    fn reach_matches_forward_counts() {
        // Continuation counts to a pin equal forward counts from each start.
        let pin = State::new(0, 0);
        for constraint in [Constraint::Free, Constraint::PositiveArea] {
            let back = Layer::<u128>::reach(pin, 6, constraint);
            for (st, m) in back.iter() {
                let fwd = Layer::<u128>::after(st, 6, constraint);
                assert_eq!(fwd.mass(pin), *m, "{st:?} {constraint:?}");
            }
            // And nothing outside the backward grid reaches the pin.
            for s in -8..=8i64 {
                for a in -30..=30i64 {
                    let st = State::new(s, a);
                    if back.get(st).is_none() {
                        assert_eq!(Layer::<u128>::after(st, 6, constraint).mass(pin), 0);
                    }
                }
            }
        }
    }

    #[test]
    fn empty_positive_layer_stays_empty() {
        let layer = Layer::<u128>::start(State::new(-5, 0), Constraint::PositiveArea);
        let after = layer.step().step();
        assert!(after.grid().is_empty());
        assert_eq!(after.total(), 0);
        assert!(after.step().grid().is_empty());
    }
}
