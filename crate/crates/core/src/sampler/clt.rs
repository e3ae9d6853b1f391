use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{par_samples, BackwardTable, BridgeSampler, PinSpec, ScaledPath, TABLE_LIMIT};
use crate::error::{Error, Result};
use crate::fourier::transition;
use crate::lattice::{evolve, State};
use crate::quadrature::GaussLegendre;

/// Density at `z` of the limit pair at time `t` given its value `pin` at
/// time 1.
pub fn pinned_marginal_density(t: f64, pin: (f64, f64), z: (f64, f64)) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < t < 1 (got {t})")));
    }
    Ok(density(t, pin, z))
}

fn density(t: f64, pin: (f64, f64), z: (f64, f64)) -> f64 {
    transition(t, 0.0, 0.0, z.0, z.1) * transition(1.0 - t, z.0, z.1, pin.0, pin.1)
        / transition(1.0, 0.0, 0.0, pin.0, pin.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalMoments {
    pub mass: f64,
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
}

fn moments_on_box(
    t: f64,
    pin: (f64, f64),
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    panels: usize,
) -> MarginalMoments {
    let gl = GaussLegendre::new(16);
    let xs = gl.composite(x0, x1, panels);
    let ys = gl.composite(y0, y1, panels);
    let mut m = [0.0f64; 6];
    for &(x, wx) in &xs {
        for &(y, wy) in &ys {
            let w = wx * wy * density(t, pin, (x, y));
            m[0] += w;
            m[1] += w * x;
            m[2] += w * y;
            m[3] += w * x * x;
            m[4] += w * x * y;
            m[5] += w * y * y;
        }
    }
    let mean = [m[1] / m[0], m[2] / m[0]];
    let c01 = m[4] / m[0] - mean[0] * mean[1];
    MarginalMoments {
        mass: m[0],
        mean,
        covariance: [
            [m[3] / m[0] - mean[0] * mean[0], c01],
            [c01, m[5] / m[0] - mean[1] * mean[1]],
        ],
    }
}

/// Mass, mean and covariance of the pinned marginal by quadrature: a wide
/// coarse pass locates the bulk, a second pass integrates over twelve
/// standard deviations around it.
pub fn pinned_marginal_moments(t: f64, pin: (f64, f64)) -> Result<MarginalMoments> {
    pinned_marginal_density(t, pin, (0.0, 0.0))?;
    let wide_x = (-8.0 + pin.0.min(0.0), 8.0 + pin.0.max(0.0));
    let wide_y = (-8.0 + pin.1.min(0.0), 8.0 + pin.1.max(0.0));
    let coarse = moments_on_box(t, pin, wide_x, wide_y, 64);
    let sd = [
        coarse.covariance[0][0].sqrt(),
        coarse.covariance[1][1].sqrt(),
    ];
    let fine = moments_on_box(
        t,
        pin,
        (coarse.mean[0] - 12.0 * sd[0], coarse.mean[0] + 12.0 * sd[0]),
        (coarse.mean[1] - 12.0 * sd[1], coarse.mean[1] + 12.0 * sd[1]),
        24,
    );
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins after pooling every cell with expected count below 5.
    pub bins: usize,
}

/// Pearson test of `observed` counts against probabilities `expected`.
/// Cells with expected count below 5 are pooled into one bin.
pub fn chi_square_test(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() {
        return Err(Error::InvalidArgument("bin count mismatch".into()));
    }
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected) {
        let e = p * n;
        if e < 5.0 {
            pooled_o += o as f64;
            pooled_e += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled_e > 0.0 || pooled_o > 0.0 {
        bins.push((pooled_o, pooled_e));
    }
    if bins.len() < 2 {
        return Err(Error::InvalidArgument(
            "too few bins for a chi-square test".into(),
        ));
    }
    let statistic: f64 = bins
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        bins: bins.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalCheck {
    pub horizon: usize,
    pub time: usize,
    pub samples: usize,
    pub seed: u64,
    pub states: usize,
    pub chi_square: ChiSquare,
    /// Every sampled path ends at the pin.
    pub endpoints_at_pin: bool,
}

/// Chi-square comparison of sampled `(S_k, A_k)` against the exact
/// conditioned marginal of the same table.
pub fn marginal_chi_square(
    table: &BackwardTable<f64>,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<MarginalCheck> {
    if k > table.horizon() {
        return Err(Error::InvalidArgument("time beyond the horizon".into()));
    }
    let exact = table.marginal(k);
    let index: std::collections::HashMap<State, usize> = exact
        .iter()
        .enumerate()
        .map(|(i, (st, _))| (*st, i))
        .collect();
    let draws = par_samples(seed, samples, |rng| {
        let traj = evolve(&table.sample_path(rng));
        (traj[k], traj.end())
    });
    let mut counts = vec![0u64; exact.len()];
    let mut endpoints_at_pin = true;
    let mut outside = 0u64;
    for (st, end) in draws {
        if let Some(p) = table.pin() {
            endpoints_at_pin &= end == p;
        }
        match index.get(&st) {
            Some(&i) => counts[i] += 1,
            None => outside += 1,
        }
    }
    let probs: Vec<f64> = exact.iter().map(|(_, p)| *p).collect();
    let mut chi_square = chi_square_test(&counts, &probs)?;
    if outside > 0 {
        chi_square.p_value = 0.0;
        chi_square.statistic = f64::INFINITY;
    }
    Ok(MarginalCheck {
        horizon: table.horizon(),
        time: k,
        samples,
        seed,
        states: exact.len(),
        chi_square,
        endpoints_at_pin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinnedCltReport {
    pub horizon: usize,
    pub t: f64,
    pub pin: PinSpec,
    pub samples: usize,
    pub seed: u64,
    pub empirical_mean: [f64; 2],
    pub empirical_covariance: [[f64; 2]; 2],
    pub oracle_mean: [f64; 2],
    pub oracle_covariance: [[f64; 2]; 2],
    /// `|emp − oracle| / max(|oracle mean|, oracle sd)` per coordinate.
    pub mean_error: [f64; 2],
    /// `|emp − oracle| / sqrt(var_i var_j)` per entry.
    pub covariance_error: [[f64; 2]; 2],
    pub max_mean_error: f64,
    pub max_covariance_error: f64,
}

/// Compares the sampled scaled marginal at time `t` of walk bridges
/// pinned at `pin` with the pinned Gaussian limit evaluated at the scaled
/// lattice pin.
pub fn pinned_clt_check(
    pin: &PinSpec,
    t: f64,
    samples: usize,
    seed: u64,
    allow_odd: bool,
) -> Result<PinnedCltReport> {
    let n = pin.horizon;
    if !n.is_multiple_of(2) && !allow_odd {
        return Err(Error::OddHorizon(n));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let oracle = pinned_marginal_moments(t, pin.scaled())?;
    let at = |p: &crate::lattice::StepPath| ScaledPath::from_path(p).at(t);
    let draws: Vec<(f64, f64)> = if n <= TABLE_LIMIT {
        let table = BackwardTable::<f64>::build(n, Some(pin.state), false)?;
        par_samples(seed, samples, |rng| at(&table.sample_path(rng)))
    } else {
        let sampler = BridgeSampler::new(n, pin.state)?;
        par_samples(seed, samples, |rng| at(&sampler.sample_path(rng)))
    };
    let m = samples as f64;
    let mean = [
        draws.iter().map(|d| d.0).sum::<f64>() / m,
        draws.iter().map(|d| d.1).sum::<f64>() / m,
    ];
    let mut cov = [[0.0; 2]; 2];
    for d in &draws {
        let dv = [d.0 - mean[0], d.1 - mean[1]];
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += dv[i] * dv[j] / (m - 1.0);
            }
        }
    }
    let sd = [
        oracle.covariance[0][0].sqrt(),
        oracle.covariance[1][1].sqrt(),
    ];
    let mut mean_error = [0.0; 2];
    let mut covariance_error = [[0.0; 2]; 2];
    for i in 0..2 {
        mean_error[i] = (mean[i] - oracle.mean[i]).abs() / oracle.mean[i].abs().max(sd[i]);
        for j in 0..2 {
            covariance_error[i][j] = (cov[i][j] - oracle.covariance[i][j]).abs() / (sd[i] * sd[j]);
        }
    }
    Ok(PinnedCltReport {
        horizon: n,
        t,
        pin: *pin,
        samples,
        seed,
        empirical_mean: mean,
        empirical_covariance: cov,
        oracle_mean: oracle.mean,
        oracle_covariance: oracle.covariance,
        max_mean_error: mean_error.iter().copied().fold(0.0, f64::max),
        max_covariance_error: covariance_error
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max),
        mean_error,
        covariance_error,
    })
}
