//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{q, Enumeration};
use irw_bridge::exact::{
    association_check, bridge_persistence, conditional_moments, decomposition_identity,
    first_passage, persistence, point_prob, s_bridge_persistence, strict_positive_moment,
    tail_joint_bound,
};
use irw_bridge::exponent::{exponent_report, Regime, Source};
use irw_bridge::fourier::{
    cf_decay_scan, chapman_kolmogorov, density_moments, invert_cf_support, llt_sup_error,
    quadratic_bound_scan, DecayGrid, QuadratureSpec,
};
use irw_bridge::sampler::{marginal_chi_square, pinned_clt_check, BackwardTable, PinSpec};
use irw_bridge::transforms::{
    check_level_r_injection, check_monotone_membership, check_sign_flip_injection,
};
use irw_bridge::{Precision, State, Value, Weight};
use num_rational::BigRational;

const EXACT: Precision = Precision::Exact;
const FLOAT: Precision = Precision::Float;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rat(v: &Value) -> BigRational {
    v.as_rational().cloned().expect("exact value")
}

fn wrat(w: &Weight) -> BigRational {
    w.to_rational().expect("exact weight")
}

fn oracle_equivalence() -> Outcome {
    let mut checked = 0usize;
    for n in 1..=16usize {
        let e = Enumeration::new(n);
        let ni = n as i64;
        let t = ni * (ni + 1) / 2;
        for l1 in -ni..=ni {
            for l2 in -t..=t {
                let got = wrat(&point_prob(n, (l1, l2), EXACT).map_err(|e| e.to_string())?);
                ensure(got == e.point_prob((l1, l2)), || {
                    format!("point_prob n={n} l=({l1},{l2})")
                })?;
                checked += 1;
            }
        }
        ensure(
            wrat(&persistence(n, EXACT).unwrap()) == e.persistence(),
            || format!("persistence n={n}"),
        )?;
        if n % 4 == 0 {
            let b = bridge_persistence(n, EXACT).unwrap();
            let (j, f, c) = e.bridge();
            ensure(
                (wrat(&b.joint), wrat(&b.free), rat(&b.conditional)) == (j.clone(), f, c),
                || format!("bridge n={n}"),
            )?;
            let d = decomposition_identity(n, EXACT).unwrap();
            ensure(wrat(&d.direct) == j && d.equal, || {
                format!("decomposition N={n}")
            })?;
        }
        if n % 2 == 0 {
            let b = s_bridge_persistence(n, EXACT).unwrap();
            let (j, f, c) = e.s_bridge();
            ensure(
                (wrat(&b.joint), wrat(&b.free), rat(&b.conditional)) == (j, f, c),
                || format!("s-bridge n={n}"),
            )?;
        }
        let m = conditional_moments(n, EXACT).unwrap();
        let (abs_s, area, s_plus) = e.moments();
        ensure(
            (rat(&m.e_abs_s), rat(&m.e_a), rat(&m.e_s_plus)) == (abs_s, area, s_plus),
            || format!("moments n={n}"),
        )?;
        let fp = first_passage(n, EXACT).unwrap();
        ensure(
            (rat(&fp.p_survive), rat(&fp.lhs), rat(&fp.rhs)) == common::first_passage(n),
            || format!("first_passage n={n}"),
        )?;
        for l in 1..n {
            let rest = Enumeration::new(n - l);
            let head = Enumeration::new(l);
            for m in 0..=3i64 {
                let b = tail_joint_bound(n, l, m, EXACT).unwrap();
                let rhs = head.walk_prob(|s| s >= 2 * m) * rest.walk_prob(|s| s.abs() <= m);
                let lhs = e.tail_lhs(l, m);
                ensure(
                    rat(&b.lhs) == lhs && rat(&b.rhs) == rhs && b.holds == (lhs >= rhs),
                    || format!("tail_joint_bound n={n} l={l} m={m}"),
                )?;
            }
        }
        for m in 0..=3i64 {
            let a = association_check(n, m, EXACT).unwrap();
            let lhs = e.association_lhs(m);
            let rhs = e.walk_prob(|s| s >= 2 * m) * e.persistence();
            ensure(rat(&a.lhs) == lhs && rat(&a.rhs) == rhs && a.holds, || {
                format!("association l={n} m={m}")
            })?;
        }
    }
    Ok(format!(
        "n <= 16, {checked} point masses and all derived quantities equal"
    ))
}

fn pinned_values() -> Outcome {
    let b4 = rat(&bridge_persistence(4, EXACT).unwrap().conditional);
    let b8 = rat(&bridge_persistence(8, EXACT).unwrap().conditional);
    let p4 = wrat(&persistence(4, EXACT).unwrap());
    ensure(b4 == q(1, 2) && b8 == q(3, 8) && p4 == q(7, 16), || {
        format!("got {b4}, {b8}, {p4}")
    })?;
    Ok("bridge(4) = 1/2, bridge(8) = 3/8, persistence(4) = 7/16".into())
}

fn inversion_consistency() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in [1usize, 2, 4, 8, 16, 24] {
        let spec = QuadratureSpec::for_n(n);
        let inv = invert_cf_support(n, &spec).map_err(|e| e.to_string())?;
        for r in inv {
            let exact = point_prob(n, (r.l1, r.l2), EXACT).unwrap().to_f64();
            worst = worst.max((r.value - exact).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-9 && secs < 60.0, || {
        format!("max error {worst:.2e}, {secs:.1}s")
    })?;
    Ok(format!(
        "max |inversion - exact| = {worst:.2e} over the full support, {secs:.1}s"
    ))
}

fn llt_trend() -> Outcome {
    let errs: Vec<f64> = [16usize, 32, 64, 128]
        .iter()
        .map(|&n| llt_sup_error(n, FLOAT).map(|r| r.sup_error))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let text = format!("{errs:.5?}");
    ensure(
        errs.windows(2).all(|w| w[1] < w[0]) && errs[3] < errs[0] / 2.0,
        || format!("sup errors {text}"),
    )?;
    Ok(format!("sup errors at n = 16, 32, 64, 128: {text}"))
}

fn quadratic_scan() -> Outcome {
    let mut min = f64::INFINITY;
    for n in 2..=64 {
        let r = quadratic_bound_scan(n, 3600).map_err(|e| e.to_string())?;
        ensure(r.min_ratio > 0.0, || {
            format!("min_ratio({n}) = {}", r.min_ratio)
        })?;
        min = min.min(r.min_ratio);
    }
    let r = quadratic_bound_scan(2, 3600).unwrap();
    ensure(
        r.c1 == Value::from_ratio(9, 10) && r.min_g == Value::from_ratio(1, 5),
        || format!("c1(2) = {}, min_G(2) = {}", r.c1, r.min_g),
    )?;
    Ok(format!(
        "smallest min_ratio over n = 2..64 is {min:.4}; c1(2) = 9/10, min_G(2) = 1/5"
    ))
}

fn decay_scan() -> Outcome {
    let grid = DecayGrid::default();
    let mut per_step = Vec::new();
    for n in [4usize, 8, 16, 32, 64] {
        per_step.push(
            cf_decay_scan(n, 0.5, grid)
                .map_err(|e| e.to_string())?
                .per_step,
        );
    }
    let text = format!("{per_step:.6?}");
    ensure(
        per_step.iter().all(|&p| p < 0.999) && per_step.windows(2).all(|w| w[1] <= w[0]),
        || format!("per_step {text}"),
    )?;
    Ok(format!(
        "per_step(eps = 0.5) at n = 4..64: {text} ({} x {}n grid)",
        grid.t1_points, grid.t2_points_per_n
    ))
}

fn stopping_identity() -> Outcome {
    for n in 1..=20 {
        let fp = first_passage(n, EXACT).unwrap();
        ensure(rat(&fp.lhs) == rat(&fp.rhs), || {
            format!("first passage n={n}")
        })?;
        let sm = strict_positive_moment(n, EXACT).unwrap();
        ensure(rat(&sm.value) == rat(&sm.identity), || {
            format!("strict moment n={n}")
        })?;
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for n in (10..=160).step_by(10) {
        let p = first_passage(n, EXACT).unwrap().p_survive.to_f64();
        let v = p * (n as f64).sqrt();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    ensure(lo > 0.6 && hi < 1.0, || {
        format!("sqrt(n) P(v > n) in [{lo:.4}, {hi:.4}]")
    })?;
    Ok(format!(
        "identities exact for n <= 20; sqrt(n) P(v > n) in [{lo:.4}, {hi:.4}] for n <= 160"
    ))
}

fn transform_suite() -> Outcome {
    for n in 1..=12 {
        let r = check_sign_flip_injection(n).map_err(|e| e.to_string())?;
        ensure(r.report.passed(), || format!("sign flip n={n}"))?;
        for level in 1..=3 {
            let r = check_level_r_injection(n, level).map_err(|e| e.to_string())?;
            ensure(r.report.passed() && r.image_above_level, || {
                format!("level {level} n={n}")
            })?;
        }
    }
    let mut pairs = 0;
    for n in 1..=8 {
        let r = check_monotone_membership(n).map_err(|e| e.to_string())?;
        ensure(r.passed(), || format!("monotone n={n}"))?;
        pairs += r.dominated_pairs;
    }
    Ok(format!(
        "sign flip and levels 1..3 pass for n <= 12; {pairs} dominated pairs for n <= 8"
    ))
}

fn sampler_exactness() -> Outcome {
    let table =
        BackwardTable::<f64>::build(32, Some(State::ORIGIN), true).map_err(|e| e.to_string())?;
    let r = marginal_chi_square(&table, 16, 100_000, 2024).map_err(|e| e.to_string())?;
    let c = &r.chi_square;
    ensure(c.p_value > 1e-3 && r.endpoints_at_pin, || {
        format!(
            "p = {:.3e}, endpoints at pin: {}",
            c.p_value, r.endpoints_at_pin
        )
    })?;
    Ok(format!(
        "chi2 = {:.1} on {} dof, p = {:.3}",
        c.statistic, c.dof, c.p_value
    ))
}

fn pinned_clt() -> Outcome {
    let start = Instant::now();
    let pin = PinSpec::round(512, (0.5, 0.5)).map_err(|e| e.to_string())?;
    let r = pinned_clt_check(&pin, 0.5, 100_000, 2024, false).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        r.max_mean_error < 0.02 && r.max_covariance_error < 0.05,
        || {
            format!(
                "mean error {:.4}, covariance error {:.4}",
                r.max_mean_error, r.max_covariance_error
            )
        },
    )?;
    Ok(format!(
        "pin {}, mean error {:.4} (< 0.02), covariance error {:.4} (< 0.05), {secs:.1}s",
        pin.state, r.max_mean_error, r.max_covariance_error
    ))
}

fn density_calculus() -> Outcome {
    let mut worst = 0.0f64;
    for (s, t, w) in [
        (0.3, 0.7, [0.2, -0.1]),
        (0.2, 0.5, [0.0, 0.0]),
        (0.25, 1.0, [-0.4, 0.3]),
        (0.6, 0.9, [1.0, 0.5]),
    ] {
        let ck = chapman_kolmogorov(s, t, w).map_err(|e| e.to_string())?;
        worst = worst.max(ck.abs_error);
    }
    let m = density_moments(60, 16);
    let c = m.covariance;
    let cov_err = [
        (c[0][0] - 1.0).abs(),
        (c[0][1] - 0.5).abs(),
        (c[1][0] - 0.5).abs(),
        (c[1][1] - 1.0 / 3.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let mass_err = (m.mass - 1.0).abs();
    ensure(worst < 1e-6 && mass_err < 1e-8 && cov_err < 1e-8, || {
        format!("CK {worst:.2e}, mass {mass_err:.2e}, covariance {cov_err:.2e}")
    })?;
    Ok(format!(
        "CK error {worst:.2e}, mass error {mass_err:.2e}, covariance error {cov_err:.2e}"
    ))
}

fn exponent_dichotomy() -> Outcome {
    let sizes = [16usize, 32, 64, 128];
    let source = Source::Exact { precision: FLOAT };
    let theta = |regime| {
        exponent_report(&sizes, regime, source, 16)
            .map(|r| r.fit.theta)
            .map_err(|e| e.to_string())
    };
    let full = theta(Regime::FullBridge)?;
    let free = theta(Regime::Free)?;
    let s_bridge = theta(Regime::SBridge)?;
    let text = format!("full {full:.4}, free {free:.4}, s-bridge {s_bridge:.4}");
    ensure(
        (0.4..=0.6).contains(&full)
            && (0.18..=0.32).contains(&free)
            && (0.18..=0.32).contains(&s_bridge),
        || text.clone(),
    )?;
    Ok(format!("theta over N = 16..128: {text}"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("oracle equivalence", oracle_equivalence),
        ("pinned values", pinned_values),
        ("inversion consistency", inversion_consistency),
        ("LLT trend", llt_trend),
        ("quadratic form scan", quadratic_scan),
        ("characteristic function decay", decay_scan),
        ("stopping identity", stopping_identity),
        ("transform suite", transform_suite),
        ("pinned sampler exactness", sampler_exactness),
        ("pinned CLT", pinned_clt),
        ("transition density calculus", density_calculus),
        ("exponent dichotomy", exponent_dichotomy),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
