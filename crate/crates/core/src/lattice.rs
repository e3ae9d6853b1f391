//! Step paths, lattice states and the time-reversed adjoint process.
//!
//! A path of `n` symmetric ±1 steps `X_1, ..., X_n` drives the pair
//! `S_k = X_1 + ... + X_k` (the walk) and `A_k = S_1 + ... + S_k` (its area).
//! Trajectories always include time 0 with `(S_0, A_0) = (0, 0)`.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// `k (k + 1) / 2`, the largest possible area after `k` steps.
pub fn triangular(k: usize) -> i64 {
    let k = k as i64;
    k * (k + 1) / 2
}

/// A finite sequence of ±1 steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepPath {
    steps: Vec<i8>,
}

impl StepPath {
    pub fn new<I>(steps: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<i64>,
    {
        let steps = steps
            .into_iter()
            .map(|x| {
                let x = x.into();
                match x {
                    1 => Ok(1i8),
                    -1 => Ok(-1i8),
                    other => Err(Error::InvalidStep(other)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { steps })
    }

    pub fn empty() -> Self {
        Self { steps: Vec::new() }
    }

    /// Path number `index` in the enumeration of all `2^n` paths: bit `i`
    /// set means step `i + 1` is `+1`.
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n < 64, "path enumeration is limited to n < 64");
        let steps = (0..n)
            .map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 })
            .collect();
        Self { steps }
    }

    pub(crate) fn from_raw(steps: Vec<i8>) -> Self {
        debug_assert!(steps.iter().all(|&x| x == 1 || x == -1));
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    /// Step `X_i` for `1 <= i <= n`.
    pub fn step(&self, i: usize) -> i8 {
        self.steps[i - 1]
    }

    /// Walk values `S_0, ..., S_n`.
    pub fn walk(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut s = 0i64;
        out.push(s);
        for &x in &self.steps {
            s += x as i64;
            out.push(s);
        }
        out
    }

    /// Compact `+`/`-` rendering, one character per step.
    pub fn to_signs(&self) -> String {
        self.steps
            .iter()
            .map(|&x| if x > 0 { '+' } else { '-' })
            .collect()
    }
}

impl FromStr for StepPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let steps = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1i8),
                '-' => Ok(-1i8),
                other => Err(Error::InvalidSign(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { steps })
    }
}

impl fmt::Display for StepPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_signs())
    }
}

/// Walk value and area value at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct State {
    pub s: i64,
    pub a: i64,
}

impl State {
    pub const ORIGIN: State = State { s: 0, a: 0 };

    pub const fn new(s: i64, a: i64) -> Self {
        Self { s, a }
    }

    /// One step of the pair: `(s, a) -> (s + x, a + s + x)`.
    pub fn advance(self, x: i8) -> Self {
        let s = self.s + x as i64;
        Self { s, a: self.a + s }
    }

    /// Range and parity constraints of a state reached from the origin in `k` steps.
    pub fn satisfies_parity(&self, k: usize) -> bool {
        let t = triangular(k);
        self.s.abs() <= k as i64 && self.a.abs() <= t && in_support(k, (self.s, self.a))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.s, self.a)
    }
}

/// Which parity set a lattice point is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParityMode {
    /// `l1 = n (mod 2)`, `l2 = n (n + 1) / 2 (mod 2)`: the support of `(S_n, A_n)`.
    #[default]
    Standard,
    /// `l1 = n (mod 2)`, `l2 = (n - 1) n / 2 (mod 2)`: the support of `(S_n, A_{n-1})`.
    Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct LatticePoint {
    pub l1: i64,
    pub l2: i64,
    pub n: usize,
}

impl LatticePoint {
    pub fn new(n: usize, l1: i64, l2: i64) -> Self {
        Self { l1, l2, n }
    }

    pub fn state(&self) -> State {
        State::new(self.l1, self.l2)
    }

    pub fn in_support(&self, mode: ParityMode) -> bool {
        let n = self.n as i64;
        let area_parity = match mode {
            ParityMode::Standard => n * (n + 1) / 2,
            ParityMode::Tilde => (n - 1) * n / 2,
        };
        (self.l1 - n).rem_euclid(2) == 0 && (self.l2 - area_parity).rem_euclid(2) == 0
    }
}

/// Membership of `l` in the support set `D_n`.
pub fn in_support(n: usize, l: (i64, i64)) -> bool {
    LatticePoint::new(n, l.0, l.1).in_support(ParityMode::Standard)
}

/// Membership of `l` in the shifted parity set used for `(S_n, A_{n-1})`.
pub fn in_tilde_support(n: usize, l: (i64, i64)) -> bool {
    LatticePoint::new(n, l.0, l.1).in_support(ParityMode::Tilde)
}

/// States `(S_k, A_k)` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    states: Vec<State>,
}

impl Trajectory {
    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn start(&self) -> State {
        self.states[0]
    }

    pub fn end(&self) -> State {
        *self.states.last().expect("trajectory always holds time 0")
    }

    /// The area one step before the start, `A_{-1} = A_0 - S_0`.
    pub fn area_before_start(&self) -> i64 {
        let s0 = self.start();
        s0.a - s0.s
    }

    /// `A_k` for `k >= -1`.
    pub fn area(&self, k: isize) -> i64 {
        if k < 0 {
            self.area_before_start()
        } else {
            self.states[k as usize].a
        }
    }
}

impl Deref for Trajectory {
    type Target = [State];

    fn deref(&self) -> &[State] {
        &self.states
    }
}

/// Runs the pair recursion from the origin.
pub fn evolve(path: &StepPath) -> Trajectory {
    evolve_from(State::ORIGIN, path)
}

/// Runs the pair recursion from an arbitrary start state.
pub fn evolve_from(start: State, path: &StepPath) -> Trajectory {
    let mut states = Vec::with_capacity(path.len() + 1);
    let mut cur = start;
    states.push(cur);
    for &x in path.steps() {
        cur = cur.advance(x);
        states.push(cur);
    }
    Trajectory { states }
}

/// Start-point shift: the process started at `start` is
/// `(S_n + s, A_n + a + n s)` in terms of the process started at the origin.
pub fn shift_states(start: State, states: &[State]) -> Trajectory {
    let states = states
        .iter()
        .enumerate()
        .map(|(n, st)| State::new(st.s + start.s, st.a + start.a + n as i64 * start.s))
        .collect();
    Trajectory { states }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjointState {
    pub s_bar: i64,
    pub a_bar: i64,
    pub origin: State,
    pub horizon: usize,
}

impl AdjointState {
    pub fn state(&self) -> State {
        State::new(self.s_bar, self.a_bar)
    }
}

/// The time-reversed adjoint process of horizon `N = path.len()`:
/// `s̄_0 = origin.s`, `ā_0 = origin.a`, `s̄_{k+1} = s̄_k - X_{N-k}`, `ā_{k+1} = ā_k - s̄_k`.
pub fn adjoint_evolve(path: &StepPath, origin: State) -> Vec<AdjointState> {
    let horizon = path.len();
    let mut out = Vec::with_capacity(horizon + 1);
    let (mut s_bar, mut a_bar) = (origin.s, origin.a);
    out.push(AdjointState {
        s_bar,
        a_bar,
        origin,
        horizon,
    });
    for k in 0..horizon {
        let x = path.step(horizon - k) as i64;
        let next_s = s_bar - x;
        a_bar -= s_bar;
        s_bar = next_s;
        out.push(AdjointState {
            s_bar,
            a_bar,
            origin,
            horizon,
        });
    }
    out
}

/// For each `k`, whether the reversed adjoint state at `N - k` equals `(S_k, A_k)`.
pub fn accordance(path: &StepPath, origin: State) -> Vec<bool> {
    let forward = evolve(path);
    let adjoint = adjoint_evolve(path, origin);
    let n = path.len();
    (0..=n)
        .map(|k| adjoint[n - k].state() == forward[k])
        .collect()
}
