//! Persistence exponents by log-log least squares.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::persistence_profile;
use crate::sampler::mc_persistence;
use crate::weight::{Precision, Value, Weight};

/// Conditioning applied before asking for positivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Free,
    /// Conditioned on `S_N = 0`.
    SBridge,
    /// Conditioned on `S_N = A_N = 0`.
    FullBridge,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Free, Regime::SBridge, Regime::FullBridge];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Free => "free",
            Regime::SBridge => "s-bridge",
            Regime::FullBridge => "full-bridge",
        }
    }

    /// Whether horizon `n` admits the conditioning event.
    pub fn admits(self, n: usize) -> bool {
        n > 0
            && match self {
                Regime::Free => true,
                Regime::SBridge => n.is_multiple_of(2),
                Regime::FullBridge => n.is_multiple_of(4),
            }
    }

    fn check(self, n: usize) -> Result<()> {
        if self.admits(n) {
            return Ok(());
        }
        Err(match self {
            Regime::FullBridge => Error::NotMultipleOfFour(n),
            Regime::SBridge if n > 0 => Error::OddHorizon(n),
            _ => Error::InvalidArgument("horizon must be positive".into()),
        })
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown regime {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayPoint {
    pub n: usize,
    pub p: Value,
    /// Joint probability of positivity and the conditioning event, when
    /// computed exactly.
    pub joint: Option<Weight>,
    pub exact: bool,
    /// Monte Carlo standard error for estimated points.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySeries {
    pub regime: Option<Regime>,
    pub points: Vec<DecayPoint>,
}

impl DecaySeries {
    /// Series of plain `(n, p)` pairs.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Self {
        Self {
            regime: None,
            points: pairs
                .iter()
                .map(|&(n, p)| DecayPoint {
                    n,
                    p: Value::Float(p),
                    joint: None,
                    exact: false,
                    std_error: None,
                })
                .collect(),
        }
    }

    /// Points with `n >= min_n`.
    pub fn tail(&self, min_n: usize) -> Self {
        Self {
            regime: self.regime,
            points: self
                .points
                .iter()
                .filter(|p| p.n >= min_n)
                .cloned()
                .collect(),
        }
    }

    /// The larger half of the points (the smallest sizes dropped).
    pub fn upper_half(&self) -> Self {
        let skip = self.points.len() / 2;
        Self {
            regime: self.regime,
            points: self.points[skip..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Negated slope of `log p` against `log n`.
    pub theta: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub points: usize,
    pub min_n: usize,
    pub max_n: usize,
}

pub fn fit_exponent(series: &DecaySeries) -> Result<ExponentFit> {
    let pts = &series.points;
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a fit needs at least 3 points (got {})",
            pts.len()
        )));
    }
    if let Some(bad) = pts.iter().find(|p| p.p.to_f64().is_nan() || p.p.to_f64() <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "probabilities must be positive (n = {} has p = {})",
            bad.n, bad.p
        )));
    }
    if pts.windows(2).any(|w| w[0].n >= w[1].n) {
        return Err(Error::InvalidArgument(
            "sizes must be strictly increasing".into(),
        ));
    }
    let xs: Vec<f64> = pts.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.p.to_f64().ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(ExponentFit {
        theta: -slope,
        intercept,
        residual: (rss / m).sqrt(),
        points: pts.len(),
        min_n: pts[0].n,
        max_n: pts[pts.len() - 1].n,
    })
}

/// Where the values of a series come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Source {
    Exact { precision: Precision },
    MonteCarlo { samples: usize, seed: u64 },
}

/// Persistence values of `regime` at the sizes `n_list`.
pub fn regime_suite(n_list: &[usize], regime: Regime, source: Source) -> Result<DecaySeries> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("empty size list".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "sizes must be strictly increasing".into(),
        ));
    }
    for &n in n_list {
        regime.check(n)?;
    }
    let points = match source {
        Source::Exact { precision } => {
            let max = *n_list.last().expect("nonempty");
            let profile = persistence_profile(max, precision)?;
            n_list
                .iter()
                .map(|&n| {
                    let pt = &profile[n - 1];
                    let (p, joint) = match regime {
                        Regime::Free => (pt.persistence.to_value(), pt.persistence.clone()),
                        Regime::SBridge => {
                            let b = pt.s_bridge.as_ref().expect("even horizon");
                            (b.conditional.clone(), b.joint.clone())
                        }
                        Regime::FullBridge => {
                            let b = pt.bridge.as_ref().expect("horizon divisible by 4");
                            (b.conditional.clone(), b.joint.clone())
                        }
                    };
                    DecayPoint {
                        n,
                        exact: p.is_exact(),
                        p,
                        joint: Some(joint),
                        std_error: None,
                    }
                })
                .collect()
        }
        Source::MonteCarlo { samples, seed } => n_list
            .iter()
            .map(|&n| {
                let est = mc_persistence(n, samples, seed, regime)?;
                Ok(DecayPoint {
                    n,
                    p: Value::Float(est.estimate),
                    joint: None,
                    exact: false,
                    std_error: Some(est.std_error),
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(DecaySeries {
        regime: Some(regime),
        points,
    })
}

/// Fit over the sizes `n >= min_n` and over the upper half of those sizes.
/// The series keeps every requested size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub regime: Regime,
    pub min_n: usize,
    pub series: DecaySeries,
    pub fit: ExponentFit,
    pub tail_fit: Option<ExponentFit>,
}

pub fn exponent_report(
    n_list: &[usize],
    regime: Regime,
    source: Source,
    min_n: usize,
) -> Result<ExponentReport> {
    let series = regime_suite(n_list, regime, source)?;
    let fitted = series.tail(min_n);
    let fit = fit_exponent(&fitted)?;
    let tail_fit = fit_exponent(&fitted.upper_half()).ok();
    Ok(ExponentReport {
        regime,
        min_n,
        series,
        fit,
        tail_fit,
    })
}
