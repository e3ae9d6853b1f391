//! Gaussian limit of the walk-area pair and characteristic-function
//! inversion.
//!
//! `(S_n/√n, A_n/n^{3/2})` converges to the pair (Brownian motion at 1,
//! its integral) whose density is [`g_density`]. Point probabilities are
//! recovered from the characteristic function `∏ cos(t1 + j·t2)` by
//! integrating over `[-π, π]^2`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::free_layer;
use crate::lattice::{in_support, triangular};
use crate::quadrature::GaussLegendre;
use crate::weight::{check_budget, Mass, Precision, U128_LIMIT};

/// Closed-form constants of the limit density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianPairDensity;

impl GaussianPairDensity {
    /// Matrix of the quadratic form `2x² − 6xy + 6y²`, doubled.
    pub const R: [[f64; 2]; 2] = [[4.0, -6.0], [-6.0, 12.0]];
    /// Covariance of the limit pair.
    pub const COVARIANCE: [[f64; 2]; 2] = [[1.0, 0.5], [0.5, 1.0 / 3.0]];
    pub const DET_R: f64 = 12.0;

    pub fn normalizer() -> f64 {
        3f64.sqrt() / PI
    }

    pub fn density(x: f64, y: f64) -> f64 {
        g_density(x, y)
    }
}

/// `(√3/π)·exp(−2x² + 6xy − 6y²)`.
pub fn g_density(x: f64, y: f64) -> f64 {
    GaussianPairDensity::normalizer() * (-2.0 * x * x + 6.0 * x * y - 6.0 * y * y).exp()
}

/// Transition density over time `t` from `(u, v)` to `(x, y)`.
pub fn g_transition(t: f64, u: f64, v: f64, x: f64, y: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("need t > 0 (got {t})")));
    }
    Ok(transition(t, u, v, x, y))
}

pub(crate) fn transition(t: f64, u: f64, v: f64, x: f64, y: f64) -> f64 {
    g_density((x - u) / t.sqrt(), (y - v - t * u) / t.powf(1.5)) / (t * t)
}

/// Mass, mean and covariance of `g` by quadrature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMoments {
    pub mass: f64,
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
}

pub fn density_moments(panels: usize, order: usize) -> DensityMoments {
    let gl = GaussLegendre::new(order);
    let xs = gl.composite(-10.0, 10.0, panels);
    let ys = gl.composite(-6.0, 6.0, panels);
    let mut m = [0.0f64; 6];
    for &(x, wx) in &xs {
        for &(y, wy) in &ys {
            let w = wx * wy * g_density(x, y);
            m[0] += w;
            m[1] += w * x;
            m[2] += w * y;
            m[3] += w * x * x;
            m[4] += w * x * y;
            m[5] += w * y * y;
        }
    }
    let mean = [m[1] / m[0], m[2] / m[0]];
    DensityMoments {
        mass: m[0],
        mean,
        covariance: [
            [
                m[3] / m[0] - mean[0] * mean[0],
                m[4] / m[0] - mean[0] * mean[1],
            ],
            [
                m[4] / m[0] - mean[0] * mean[1],
                m[5] / m[0] - mean[1] * mean[1],
            ],
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChapmanKolmogorov {
    pub s: f64,
    pub t: f64,
    pub w: [f64; 2],
    /// `∫∫ g_s(0,0;z) g_{t−s}(z;w) dz`.
    pub composed: f64,
    /// `g_t(0,0;w)`.
    pub direct: f64,
    pub abs_error: f64,
}

pub fn chapman_kolmogorov(s: f64, t: f64, w: [f64; 2]) -> Result<ChapmanKolmogorov> {
    if !(s > 0.0 && s < t) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < s < t (got s = {s}, t = {t})"
        )));
    }
    let gl = GaussLegendre::new(16);
    let half1 = 10.0 * s.sqrt();
    let half2 = 10.0 * s.powf(1.5);
    let composed = gl.integrate_2d(
        |z1, z2| transition(s, 0.0, 0.0, z1, z2) * transition(t - s, z1, z2, w[0], w[1]),
        (-half1, half1),
        (-half2, half2),
        48,
    );
    let direct = transition(t, 0.0, 0.0, w[0], w[1]);
    Ok(ChapmanKolmogorov {
        s,
        t,
        w,
        composed,
        direct,
        abs_error: (composed - direct).abs(),
    })
}

/// `∏_{j=1..n} cos(t1 + j·t2)`.
pub fn char_fn(n: usize, t1: f64, t2: f64) -> f64 {
    (1..=n).map(|j| (t1 + j as f64 * t2).cos()).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    GaussLegendre,
}

/// Composite Gauss–Legendre grid over `[-π, π]^2`.
///
/// The integrand for a point `l` is a trigonometric polynomial of degree
/// up to `2n` in `t1` and `n(n+1)` in `t2`. The default spec keeps the
/// phase swept within one panel below 8 radians so a 16-point rule is
/// accurate to round-off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureSpec {
    pub panels_t1: usize,
    pub panels_t2: usize,
    pub nodes: usize,
    pub rule: QuadratureRule,
}

impl QuadratureSpec {
    pub const DEFAULT_NODES: usize = 16;

    pub fn for_n(n: usize) -> Self {
        let per_panel = 8.0;
        let deg1 = (2 * n).max(1) as f64;
        let deg2 = (n * (n + 1)).max(1) as f64;
        Self {
            panels_t1: ((2.0 * PI * deg1 / per_panel).ceil() as usize).max(2),
            panels_t2: ((2.0 * PI * deg2 / per_panel).ceil() as usize)
                .max(n)
                .max(2),
            nodes: Self::DEFAULT_NODES,
            rule: QuadratureRule::GaussLegendre,
        }
    }

    /// Smallest admissible resolution: `n` panels along `t2`, two along
    /// `t1`, four nodes per panel.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.panels_t2 < n.max(1) || self.panels_t1 < 2 || self.nodes < 4 {
            return Err(Error::InvalidArgument(format!(
                "quadrature too coarse for n = {n}: need panels_t2 >= {}, panels_t1 >= 2, nodes >= 4 \
                 (got {}, {}, {})",
                n.max(1),
                self.panels_t2,
                self.panels_t1,
                self.nodes
            )));
        }
        Ok(())
    }

    /// Coarser companion rule used for the error estimate.
    fn companion(&self) -> Self {
        if self.nodes >= 8 {
            Self {
                nodes: self.nodes - 4,
                ..*self
            }
        } else {
            Self {
                panels_t1: (self.panels_t1 / 2).max(1),
                panels_t2: (self.panels_t2 / 2).max(1),
                ..*self
            }
        }
    }
}

/// Separable pieces of the inversion sums for one grid: for each `t2`
/// node, `Σ_i w_i f(t1_i, t2) cos(t1_i l1)` and the sine analogue.
struct InversionGrid {
    t2: Vec<(f64, f64)>,
    l1_min: i64,
    cos_part: Vec<Vec<f64>>,
    sin_part: Vec<Vec<f64>>,
}

impl InversionGrid {
    fn build(n: usize, spec: &QuadratureSpec, l1_range: (i64, i64)) -> Self {
        let gl = GaussLegendre::new(spec.nodes);
        let t1 = gl.composite(-PI, PI, spec.panels_t1);
        let t2 = gl.composite(-PI, PI, spec.panels_t2);
        let (l1_min, l1_max) = l1_range;
        let width = (l1_max - l1_min + 1) as usize;
        let cols: Vec<Vec<(f64, f64)>> = t2
            .par_iter()
            .map(|&(y, _)| {
                let mut out = vec![(0.0, 0.0); width];
                for &(x, wx) in &t1 {
                    let f = wx * char_fn(n, x, y);
                    for (k, l1) in (l1_min..=l1_max).enumerate() {
                        let (s, c) = (x * l1 as f64).sin_cos();
                        out[k].0 += f * c;
                        out[k].1 += f * s;
                    }
                }
                out
            })
            .collect();
        let mut cos_part = vec![vec![0.0; t2.len()]; width];
        let mut sin_part = vec![vec![0.0; t2.len()]; width];
        for (j, col) in cols.iter().enumerate() {
            for (k, &(c, s)) in col.iter().enumerate() {
                cos_part[k][j] = c;
                sin_part[k][j] = s;
            }
        }
        Self {
            t2,
            l1_min,
            cos_part,
            sin_part,
        }
    }

    /// `(2π)^{-2} ∫∫ f(t) cos(t1 l1 + t2 l2) dt`.
    fn value(&self, l1: i64, l2: i64) -> f64 {
        let k = (l1 - self.l1_min) as usize;
        let (c, s) = (&self.cos_part[k], &self.sin_part[k]);
        let mut acc = 0.0;
        for (j, &(y, wy)) in self.t2.iter().enumerate() {
            let (sn, cs) = (y * l2 as f64).sin_cos();
            acc += wy * (c[j] * cs - s[j] * sn);
        }
        acc / (4.0 * PI * PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inversion {
    pub l1: i64,
    pub l2: i64,
    pub value: f64,
    /// Difference from the coarser companion rule.
    pub error_estimate: f64,
}

/// `P((S_n, A_n) = l)` by numerical inversion of the characteristic
/// function.
pub fn invert_cf(n: usize, l: (i64, i64), spec: &QuadratureSpec) -> Result<Inversion> {
    spec.validate(n)?;
    let fine = InversionGrid::build(n, spec, (l.0, l.0));
    let coarse = InversionGrid::build(n, &spec.companion(), (l.0, l.0));
    let value = fine.value(l.0, l.1);
    Ok(Inversion {
        l1: l.0,
        l2: l.1,
        value,
        error_estimate: (value - coarse.value(l.0, l.1)).abs(),
    })
}

/// Inversion at every point of the parity support inside the box
/// `|l1| <= n`, `|l2| <= n(n+1)/2`.
pub fn invert_cf_support(n: usize, spec: &QuadratureSpec) -> Result<Vec<Inversion>> {
    spec.validate(n)?;
    let n_i = n as i64;
    let t = triangular(n);
    let fine = InversionGrid::build(n, spec, (-n_i, n_i));
    let coarse = InversionGrid::build(n, &spec.companion(), (-n_i, n_i));
    let points: Vec<(i64, i64)> = (-n_i..=n_i)
        .flat_map(|l1| (-t..=t).map(move |l2| (l1, l2)))
        .filter(|&l| in_support(n, l))
        .collect();
    Ok(points
        .par_iter()
        .map(|&(l1, l2)| {
            let value = fine.value(l1, l2);
            Inversion {
                l1,
                l2,
                value,
                error_estimate: (value - coarse.value(l1, l2)).abs(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LltReport {
    pub n: usize,
    /// `sup |(n²/4)·P((S_n, A_n) = l) − g(l1/√n, l2/n^{3/2})|`.
    pub sup_error: f64,
    pub argmax: (i64, i64),
}

/// Local limit error over every support point in the reachable box.
pub fn llt_sup_error(n: usize, precision: Precision) -> Result<LltReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("need n >= 1".into()));
    }
    check_budget(n, precision)?;
    fn probs<M: Mass>(n: usize) -> Vec<((i64, i64), f64)> {
        let layer = free_layer::<M>(n);
        let scale = 2f64.powi(-(n as i32));
        let grid = *layer.grid();
        let mut out = Vec::with_capacity(grid.len());
        for i in 0..grid.s_len {
            for j in 0..grid.a_len {
                let st = grid.state_at(i, j);
                let m = &layer.cells()[i * grid.a_len + j];
                let p = if M::EXACT {
                    m.raw_f64() * scale
                } else {
                    m.raw_f64()
                };
                out.push(((st.s, st.a), p));
            }
        }
        out
    }
    let table = match precision {
        Precision::Exact if n <= U128_LIMIT => probs::<u128>(n),
        Precision::Exact => probs::<num_bigint::BigUint>(n),
        Precision::Float => probs::<f64>(n),
    };
    let nf = n as f64;
    let (sn, an) = (nf.sqrt(), nf.powf(1.5));
    let mut best = (0.0f64, (0, 0));
    for ((l1, l2), p) in table {
        let e = (nf * nf / 4.0 * p - g_density(l1 as f64 / sn, l2 as f64 / an)).abs();
        if e > best.0 {
            best = (e, (l1, l2));
        }
    }
    Ok(LltReport {
        n,
        sup_error: best.0,
        argmax: best.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticBound {
    pub n: usize,
    /// Grid minimum of `Σ(t1 + j t2)² / (n t1² + n³ t2²)`.
    pub min_ratio: f64,
    /// `3(n+1) / (2(2n+1))`.
    pub c1: crate::weight::Value,
    /// `n − (Σj)² / Σj²`.
    pub min_g: crate::weight::Value,
}

/// Scans the quadratic-form ratio over `resolution` directions.
pub fn quadratic_bound_scan(n: usize, resolution: usize) -> Result<QuadraticBound> {
    if n < 2 {
        return Err(Error::InvalidArgument("need n >= 2".into()));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let nf = n as f64;
    let s1: f64 = (1..=n).map(|j| j as f64).sum();
    let s2: f64 = (1..=n).map(|j| (j * j) as f64).sum();
    // The ratio is homogeneous of degree 0: scan the ellipse
    // n t1² + n³ t2² = 1.
    let mut min_ratio = f64::INFINITY;
    for k in 0..resolution {
        let phi = PI * k as f64 / resolution as f64;
        let t1 = phi.cos() / nf.sqrt();
        let t2 = phi.sin() / nf.powf(1.5);
        let q = nf * t1 * t1 + 2.0 * s1 * t1 * t2 + s2 * t2 * t2;
        min_ratio = min_ratio.min(q);
    }
    let n_i = n as i64;
    let s1_i = n_i * (n_i + 1) / 2;
    let s2_i = n_i * (n_i + 1) * (2 * n_i + 1) / 6;
    let c1 = crate::weight::Value::from_ratio(3 * (n_i + 1), 2 * (2 * n_i + 1));
    let min_g = crate::weight::Value::from_ratio(n_i * s2_i - s1_i * s1_i, s2_i);
    Ok(QuadraticBound {
        n,
        min_ratio,
        c1,
        min_g,
    })
}

/// Sampling density of the decay scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecayGrid {
    /// Points along `t1 ∈ [0, π]`.
    pub t1_points: usize,
    /// Points along `t2 ∈ [0, π]` per unit of `n`.
    pub t2_points_per_n: usize,
}

impl Default for DecayGrid {
    fn default() -> Self {
        Self {
            t1_points: 1201,
            t2_points_per_n: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayScan {
    pub n: usize,
    pub eps: f64,
    /// Grid supremum of `|f|` where the distance to the corners of
    /// `[0, π]^2` is at least `eps`; a lower bound for the true supremum.
    pub sup_abs: f64,
    pub per_step: f64,
    pub grid: DecayGrid,
}

fn dist_to_multiple_of_pi(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    r.min(PI - r)
}

/// Grid supremum of `|f|` away from the points where it equals 1. The
/// distance is `|t1 − s1| + n|t2 − s2|`. Besides the regular grid, each
/// `t1` column is also sampled exactly on the boundary of the region.
pub fn cf_decay_scan(n: usize, eps: f64, grid: DecayGrid) -> Result<DecayScan> {
    if n < 4 {
        return Err(Error::InvalidArgument("need n >= 4".into()));
    }
    if !(eps > 0.0 && eps < PI / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < eps < pi/2 (got {eps})"
        )));
    }
    if grid.t1_points < 2 || grid.t2_points_per_n == 0 {
        return Err(Error::InvalidArgument("decay grid too small".into()));
    }
    let nf = n as f64;
    let m2 = grid.t2_points_per_n * n + 1;
    let t2s: Vec<f64> = (0..m2).map(|k| PI * k as f64 / (m2 - 1) as f64).collect();
    let sup_abs = (0..grid.t1_points)
        .into_par_iter()
        .map(|i| {
            let t1 = PI * i as f64 / (grid.t1_points - 1) as f64;
            let d1 = dist_to_multiple_of_pi(t1);
            let mut best = 0.0f64;
            for &t2 in &t2s {
                if d1 + nf * dist_to_multiple_of_pi(t2) >= eps {
                    best = best.max(char_fn(n, t1, t2).abs());
                }
            }
            if d1 < eps {
                let off = (eps - d1) / nf;
                for t2 in [off, PI - off] {
                    best = best.max(char_fn(n, t1, t2).abs());
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(DecayScan {
        n,
        eps,
        sup_abs,
        per_step: sup_abs.powf(1.0 / nf),
        grid,
    })
}
