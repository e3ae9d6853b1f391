//! Step inversions after the last visit to a level, and exhaustive checks
//! of the counting inequalities they imply.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::StepPath;

/// Largest path length accepted by the exhaustive checks.
pub const ENUMERATION_LIMIT: usize = 24;

/// Negates every step after index `cut` (steps `cut+1..=n`).
pub fn invert_from(path: &StepPath, cut: usize) -> StepPath {
    let steps = path
        .steps()
        .iter()
        .enumerate()
        .map(|(i, &x)| if i >= cut { -x } else { x })
        .collect();
    StepPath::from_raw(steps)
}

/// Last time `k <= n` with `S_k = level`, counting `S_0 = 0`.
pub fn last_visit(path: &StepPath, level: i64) -> Option<usize> {
    path.walk().iter().rposition(|&s| s == level)
}

pub fn last_zero(path: &StepPath) -> usize {
    last_visit(path, 0).expect("the walk starts at zero")
}

pub fn invert_after_last_zero(path: &StepPath) -> StepPath {
    invert_from(path, last_zero(path))
}

pub fn invert_after_last_r(path: &StepPath, r: i64) -> Result<StepPath> {
    if r < 1 {
        return Err(Error::InvalidArgument(format!(
            "level must be positive (got {r})"
        )));
    }
    let cut = last_visit(path, r).ok_or(Error::LevelNotReached(r))?;
    Ok(invert_from(path, cut))
}

/// `A_1, ..., A_n >= 0`.
pub fn is_positive(path: &StepPath) -> bool {
    let mut s = 0i64;
    let mut a = 0i64;
    for &x in path.steps() {
        s += x as i64;
        a += s;
        if a < 0 {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransformReport {
    pub n: usize,
    pub domain_size: u64,
    pub image_size: u64,
    pub codomain_size: u64,
    pub injective: bool,
    pub in_codomain: bool,
    /// The counting inequality derived from the map.
    pub inequality_holds: bool,
}

impl TransformReport {
    pub fn passed(&self) -> bool {
        self.injective && self.in_codomain && self.inequality_holds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignFlipReport {
    #[serde(flatten)]
    pub report: TransformReport,
    /// `Σ S_n^-` over positive paths.
    pub sum_s_minus: u64,
    /// `Σ S_n^+` over positive paths.
    pub sum_s_plus: u64,
}

fn check_limit(n: usize) -> Result<()> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::BudgetExceeded {
            kind: "enumeration",
            n,
            budget: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

fn all_paths(n: usize) -> impl ParallelIterator<Item = StepPath> {
    (0..1u64 << n)
        .into_par_iter()
        .map(move |i| StepPath::from_index(n, i))
}

/// Inversion after the last zero maps positive paths ending below zero
/// injectively to positive paths ending above zero, with `S_n = -k`
/// sent to `S_n = k`.
pub fn check_sign_flip_injection(n: usize) -> Result<SignFlipReport> {
    check_limit(n)?;
    let positive: Vec<StepPath> = all_paths(n).filter(is_positive).collect();
    let end = |p: &StepPath| p.walk().last().copied().unwrap_or(0);
    let domain: Vec<&StepPath> = positive.iter().filter(|p| end(p) < 0).collect();
    let images: Vec<StepPath> = domain.iter().map(|p| invert_after_last_zero(p)).collect();
    let in_codomain = domain
        .iter()
        .zip(&images)
        .all(|(p, q)| is_positive(q) && end(q) == -end(p) && end(q) > 0);
    let distinct: HashSet<&StepPath> = images.iter().collect();
    let codomain_size = positive.iter().filter(|p| end(p) > 0).count() as u64;
    let mut by_end = std::collections::BTreeMap::<i64, i64>::new();
    for p in &positive {
        *by_end.entry(end(p)).or_default() += 1;
    }
    let inequality_holds = by_end
        .iter()
        .filter(|(&k, _)| k < 0)
        .all(|(&k, &c)| c <= by_end.get(&-k).copied().unwrap_or(0));
    let sum_s_minus = positive.iter().map(|p| (-end(p)).max(0) as u64).sum();
    let sum_s_plus = positive.iter().map(|p| end(p).max(0) as u64).sum();
    Ok(SignFlipReport {
        report: TransformReport {
            n,
            domain_size: domain.len() as u64,
            image_size: distinct.len() as u64,
            codomain_size,
            injective: distinct.len() == domain.len(),
            in_codomain,
            inequality_holds,
        },
        sum_s_minus,
        sum_s_plus,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelReport {
    #[serde(flatten)]
    pub report: TransformReport,
    pub r: i64,
    /// Positive paths whose maximum reaches `r`.
    pub reach_count: u64,
    /// Positive paths with `S_n >= r`.
    pub end_count: u64,
    /// Every image walk stays strictly above `r` after the cut.
    pub image_above_level: bool,
}

/// Inversion after the last visit to `r` maps positive paths that reach
/// `r` but end below it injectively into positive paths ending above `r`,
/// giving `#{max S >= r} <= 2·#{S_n >= r}` on the positivity event.
pub fn check_level_r_injection(n: usize, r: i64) -> Result<LevelReport> {
    check_limit(n)?;
    if r < 1 {
        return Err(Error::InvalidArgument(format!(
            "level must be positive (got {r})"
        )));
    }
    let positive: Vec<(StepPath, Vec<i64>)> = all_paths(n)
        .filter(is_positive)
        .map(|p| {
            let w = p.walk();
            (p, w)
        })
        .collect();
    let mut domain = Vec::new();
    let mut reach_count = 0u64;
    let mut end_count = 0u64;
    let mut codomain_size = 0u64;
    for (p, w) in &positive {
        let end = *w.last().unwrap_or(&0);
        let reaches = w.iter().any(|&s| s >= r);
        reach_count += reaches as u64;
        end_count += (end >= r) as u64;
        codomain_size += (end > r) as u64;
        if reaches && end < r {
            domain.push(p);
        }
    }
    let mut in_codomain = true;
    let mut image_above_level = true;
    let mut distinct = HashSet::new();
    for p in &domain {
        let q = invert_after_last_r(p, r)?;
        let cut = last_visit(p, r).expect("domain paths reach the level");
        let wq = q.walk();
        in_codomain &= is_positive(&q) && *wq.last().unwrap_or(&0) > r;
        image_above_level &= wq[cut + 1..].iter().all(|&y| y > r);
        distinct.insert(q);
    }
    Ok(LevelReport {
        report: TransformReport {
            n,
            domain_size: domain.len() as u64,
            image_size: distinct.len() as u64,
            codomain_size,
            injective: distinct.len() == domain.len(),
            in_codomain,
            inequality_holds: reach_count <= 2 * end_count,
        },
        r,
        reach_count,
        end_count,
        image_above_level,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonotoneReport {
    pub n: usize,
    /// Ordered pairs `(x, y)` with `y_k >= x_k` for every `k`.
    pub dominated_pairs: u64,
    /// `x` positive implies `y` positive on every dominated pair.
    pub preserved: bool,
    /// Walk domination implies area domination on every dominated pair.
    pub area_dominated: bool,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.preserved && self.area_dominated
    }
}

/// Exhaustive check over all ordered pairs of paths of length `n`.
pub fn check_monotone_membership(n: usize) -> Result<MonotoneReport> {
    if n > 12 {
        return Err(Error::BudgetExceeded {
            kind: "pairwise enumeration",
            n,
            budget: 12,
        });
    }
    let walks: Vec<(Vec<i64>, Vec<i64>, bool)> = (0..1u64 << n)
        .map(|i| {
            let p = StepPath::from_index(n, i);
            let w = p.walk();
            let mut acc = 0;
            let area: Vec<i64> = w
                .iter()
                .map(|&s| {
                    acc += s;
                    acc
                })
                .collect();
            (w, area, is_positive(&p))
        })
        .collect();
    let (pairs, preserved, area_dominated) = walks
        .par_iter()
        .map(|(xw, xa, xpos)| {
            let mut pairs = 0u64;
            let mut preserved = true;
            let mut area = true;
            for (yw, ya, ypos) in &walks {
                if yw.iter().zip(xw).all(|(y, x)| y >= x) {
                    pairs += 1;
                    preserved &= !xpos || *ypos;
                    area &= ya.iter().zip(xa).all(|(y, x)| y >= x);
                }
            }
            (pairs, preserved, area)
        })
        .reduce(
            || (0, true, true),
            |a, b| (a.0 + b.0, a.1 && b.1, a.2 && b.2),
        );
    Ok(MonotoneReport {
        n,
        dominated_pairs: pairs,
        preserved,
        area_dominated,
    })
}
