use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irw_bridge::exact::{
    association_check, bridge_persistence, conditional_moments, decomposition_identity,
    first_passage, persistence, point_prob, s_bridge_persistence, strict_positive_moment,
    tail_joint_bound, target_zone_mass,
};
use irw_bridge::exponent::{exponent_report, ExponentReport, Regime, Source};
use irw_bridge::fourier::{
    cf_decay_scan, chapman_kolmogorov, g_density, g_transition, invert_cf, invert_cf_support,
    llt_sup_error, quadratic_bound_scan, DecayGrid, QuadratureSpec,
};
use irw_bridge::sampler::{
    free_path, marginal_chi_square, mc_persistence, par_samples, pinned_clt_check, BackwardTable,
    BridgeSampler, PinSpec, TABLE_LIMIT,
};
use irw_bridge::transforms::{
    check_level_r_injection, check_monotone_membership, check_sign_flip_injection,
};
use irw_bridge::weight::{check_budget, EXACT_BUDGET};
use irw_bridge::{Precision, State, StepPath, Value};
use serde::Serialize;
use serde_json::{json, Map, Value as Json};

#[derive(Parser)]
#[command(
    name = "irw-bridge",
    version,
    about = "Persistence probabilities of the integrated simple random walk"
)]
struct Cli {
    /// Arithmetic for layer sweeps.
    #[arg(long, value_enum, default_value_t = Mode::Exact, global = true)]
    mode: Mode,
    /// Output format; `sample` defaults to text, everything else to json.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Exact,
    Float,
}

impl From<Mode> for Precision {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => Precision::Exact,
            Mode::Float => Precision::Float,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformKind {
    SignFlip,
    Level,
    Monotone,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CltKind {
    Moments,
    ChiSquare,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceKind {
    Exact,
    Mc,
}

#[derive(Args)]
struct Horizon {
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct PinArgs {
    /// Lattice pin `S,A`.
    #[arg(long, value_parser = parse_pin, conflicts_with = "target")]
    pin: Option<State>,
    /// Real target `x,y`, rounded to the lattice.
    #[arg(long, value_parser = parse_pair)]
    target: Option<(f64, f64)>,
}

#[derive(Subcommand)]
enum Command {
    /// P((S_n, A_n) = (l1, l2)).
    PointProb {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        l1: i64,
        #[arg(long, allow_hyphen_values = true)]
        l2: i64,
    },
    /// P(A_1, ..., A_n >= 0).
    Persistence(Horizon),
    /// Positivity given S_N = A_N = 0.
    Bridge(Horizon),
    /// Positivity given S_N = 0.
    SBridge(Horizon),
    /// Conditional moments of S_n and A_n given positivity.
    Moments(Horizon),
    /// Optional-stopping identity for the walk killed at -1, with the
    /// strict positive moment.
    FirstPassage(Horizon),
    /// P(S_n >= m, A_n >= lm | positivity) against its product bound.
    TailBound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        m: i64,
    },
    /// Association inequality for {S_l >= 2m} and positivity.
    Association {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        m: i64,
    },
    /// Bridge probability split over three segments.
    Decomposition(Horizon),
    /// Conditional mass of the target box [a, b] in scaled coordinates.
    TargetZone {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
    /// Sup error of the local limit approximation.
    LltError(Horizon),
    /// Point masses by characteristic-function inversion.
    InvertCf {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true, requires = "l2")]
        l1: Option<i64>,
        #[arg(long, allow_hyphen_values = true, requires = "l1")]
        l2: Option<i64>,
        #[arg(long)]
        panels_t1: Option<usize>,
        #[arg(long)]
        panels_t2: Option<usize>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Quadratic-form lower bound scan.
    LemmaQuadratic {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3600)]
        resolution: usize,
    },
    /// Grid supremum of |f| away from its maxima.
    LemmaDecay {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 1201)]
        t1_points: usize,
        #[arg(long, default_value_t = 400)]
        t2_points_per_n: usize,
    },
    /// Limit density g, or the transition density g_t when --t is given.
    Density {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        u: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        v: f64,
    },
    /// Chapman-Kolmogorov check for g_t at an intermediate time s.
    TransitionCk {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        w1: f64,
        #[arg(long, allow_hyphen_values = true)]
        w2: f64,
    },
    /// Exhaustive checks of the path transformations.
    TransformsCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = TransformKind::SignFlip)]
        kind: TransformKind,
        #[arg(long, default_value_t = 1)]
        r: i64,
    },
    /// Sample paths, optionally pinned and/or conditioned on positivity.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        pin: PinArgs,
        #[arg(long)]
        positive: bool,
    },
    /// Sampled pinned marginals against their oracles.
    CltCheck {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        pin: PinArgs,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = CltKind::Moments)]
        kind: CltKind,
        /// Condition on positivity (chi-square kind only).
        #[arg(long)]
        positive: bool,
        /// Accept odd horizons (moments kind).
        #[arg(long)]
        allow_odd: bool,
    },
    /// Monte Carlo persistence estimate.
    Mc {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        regime: Regime,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Persistence exponents by log-log least squares.
    Exponent {
        /// Regimes to fit; all three when omitted.
        #[arg(long, value_delimiter = ',')]
        regime: Vec<Regime>,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
        sizes: Vec<usize>,
        /// Smallest size used in the fits.
        #[arg(long, default_value_t = 16)]
        min_n: usize,
        #[arg(long, value_enum, default_value_t = SourceKind::Exact)]
        source: SourceKind,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Required with --source mc.
        #[arg(long)]
        seed: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PointProb { .. } => "point-prob",
            Command::Persistence(_) => "persistence",
            Command::Bridge(_) => "bridge",
            Command::SBridge(_) => "s-bridge",
            Command::Moments(_) => "moments",
            Command::FirstPassage(_) => "first-passage",
            Command::TailBound { .. } => "tail-bound",
            Command::Association { .. } => "association",
            Command::Decomposition(_) => "decomposition",
            Command::TargetZone { .. } => "target-zone",
            Command::LltError(_) => "llt-error",
            Command::InvertCf { .. } => "invert-cf",
            Command::LemmaQuadratic { .. } => "lemma-quadratic",
            Command::LemmaDecay { .. } => "lemma-decay",
            Command::Density { .. } => "density",
            Command::TransitionCk { .. } => "transition-ck",
            Command::TransformsCheck { .. } => "transforms-check",
            Command::Sample { .. } => "sample",
            Command::CltCheck { .. } => "clt-check",
            Command::Mc { .. } => "mc",
            Command::Exponent { .. } => "exponent",
        }
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s
        .split_once(',')
        .ok_or("expected two comma-separated numbers")?;
    let x = x.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = y.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((x, y))
}

fn parse_pin(s: &str) -> Result<State, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or("expected two comma-separated integers")?;
    let x = x.trim().parse::<i64>().map_err(|e| e.to_string())?;
    let y = y.trim().parse::<i64>().map_err(|e| e.to_string())?;
    Ok(State::new(x, y))
}

enum Failure {
    Library(irw_bridge::Error),
    Usage(String),
    Io(String),
}

impl From<irw_bridge::Error> for Failure {
    fn from(e: irw_bridge::Error) -> Self {
        Failure::Library(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Library(irw_bridge::Error::BudgetExceeded { .. }) => 3,
            Failure::Library(_) | Failure::Usage(_) => 2,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Library(e) => e.to_string(),
            Failure::Usage(m) | Failure::Io(m) => m.clone(),
        }
    }
}

enum Report {
    Json(Json),
    /// Sampled paths as sign strings.
    Paths(Vec<String>),
    Exponent(Vec<ExponentReport>),
}

fn to_json<T: Serialize>(v: &T) -> Json {
    serde_json::to_value(v).expect("reports serialize")
}

fn resolve_pin(n: usize, pin: &PinArgs) -> Result<Option<PinSpec>, Failure> {
    Ok(match (pin.pin, pin.target) {
        (Some(st), _) => Some(PinSpec::exact(n, st)?),
        (None, Some(p)) => Some(PinSpec::round(n, p)?),
        (None, None) => None,
    })
}

fn run(cmd: &Command, mode: Mode) -> Result<Report, Failure> {
    let precision = Precision::from(mode);
    let report = match *cmd {
        Command::PointProb { n, l1, l2 } => to_json(&json!({
            "n": n,
            "l": [l1, l2],
            "probability": to_json(&point_prob(n, (l1, l2), precision)?),
        })),
        Command::Persistence(Horizon { n }) => to_json(&json!({
            "n": n,
            "probability": to_json(&persistence(n, precision)?),
        })),
        Command::Bridge(Horizon { n }) => to_json(&bridge_persistence(n, precision)?),
        Command::SBridge(Horizon { n }) => to_json(&s_bridge_persistence(n, precision)?),
        Command::Moments(Horizon { n }) => to_json(&conditional_moments(n, precision)?),
        Command::FirstPassage(Horizon { n }) => {
            let fp = first_passage(n, precision)?;
            let strict = strict_positive_moment(n, precision)?;
            let holds = fp.lhs == fp.rhs;
            json!({
                "first_passage": to_json(&fp),
                "identity_holds": holds,
                "strict_moment": to_json(&strict),
            })
        }
        Command::TailBound { n, l, m } => {
            let b = tail_joint_bound(n, l, m, precision)?;
            json!({ "n": n, "l": l, "m": m, "bound": to_json(&b) })
        }
        Command::Association { l, m } => {
            let b = association_check(l, m, precision)?;
            json!({ "l": l, "m": m, "bound": to_json(&b) })
        }
        Command::Decomposition(Horizon { n }) => to_json(&decomposition_identity(n, precision)?),
        Command::TargetZone { n, a, b } => json!({
            "n": n,
            "a": a,
            "b": b,
            "mass": to_json(&target_zone_mass(n, a, b, precision)?),
        }),
        Command::LltError(Horizon { n }) => to_json(&llt_sup_error(n, precision)?),
        Command::InvertCf {
            n,
            l1,
            l2,
            panels_t1,
            panels_t2,
            nodes,
        } => {
            let mut spec = QuadratureSpec::for_n(n);
            spec.panels_t1 = panels_t1.unwrap_or(spec.panels_t1);
            spec.panels_t2 = panels_t2.unwrap_or(spec.panels_t2);
            spec.nodes = nodes.unwrap_or(spec.nodes);
            let points = match (l1, l2) {
                (Some(a), Some(b)) => vec![invert_cf(n, (a, b), &spec)?],
                _ => invert_cf_support(n, &spec)?,
            };
            json!({ "n": n, "spec": to_json(&spec), "points": to_json(&points) })
        }
        Command::LemmaQuadratic { n, resolution } => {
            let r = quadratic_bound_scan(n, resolution)?;
            json!({ "resolution": resolution, "scan": to_json(&r) })
        }
        Command::LemmaDecay {
            n,
            eps,
            t1_points,
            t2_points_per_n,
        } => to_json(&cf_decay_scan(
            n,
            eps,
            DecayGrid {
                t1_points,
                t2_points_per_n,
            },
        )?),
        Command::Density { x, y, t, u, v } => match t {
            Some(t) => json!({
                "t": t, "from": [u, v], "to": [x, y],
                "value": g_transition(t, u, v, x, y)?,
            }),
            None => json!({ "t": 1.0, "from": [0.0, 0.0], "to": [x, y], "value": g_density(x, y) }),
        },
        Command::TransitionCk { s, t, w1, w2 } => to_json(&chapman_kolmogorov(s, t, [w1, w2])?),
        Command::TransformsCheck { n, kind, r } => match kind {
            TransformKind::SignFlip => to_json(&check_sign_flip_injection(n)?),
            TransformKind::Level => to_json(&check_level_r_injection(n, r)?),
            TransformKind::Monotone => to_json(&check_monotone_membership(n)?),
        },
        Command::Sample {
            n,
            count,
            seed,
            ref pin,
            positive,
        } => {
            let pin = resolve_pin(n, pin)?;
            return Ok(Report::Paths(sample(n, count, seed, pin, positive)?));
        }
        Command::CltCheck {
            n,
            ref pin,
            t,
            samples,
            seed,
            kind,
            positive,
            allow_odd,
        } => {
            let pin = resolve_pin(n, pin)?;
            match kind {
                CltKind::Moments => {
                    let pin = pin.ok_or_else(|| {
                        Failure::Usage("the moments check needs --pin or --target".into())
                    })?;
                    if positive {
                        return Err(Failure::Usage(
                            "--positive applies to the chi-square kind only".into(),
                        ));
                    }
                    to_json(&pinned_clt_check(&pin, t, samples, seed, allow_odd)?)
                }
                CltKind::ChiSquare => {
                    if n > EXACT_BUDGET {
                        return Err(irw_bridge::Error::BudgetExceeded {
                            kind: "table",
                            n,
                            budget: EXACT_BUDGET,
                        }
                        .into());
                    }
                    let k = (t * n as f64).round() as usize;
                    let table = BackwardTable::<f64>::build(n, pin.map(|p| p.state), positive)?;
                    json!({
                        "pin": to_json(&pin),
                        "positive": positive,
                        "check": to_json(&marginal_chi_square(&table, k, samples, seed)?),
                    })
                }
            }
        }
        Command::Mc {
            n,
            regime,
            samples,
            seed,
        } => to_json(&mc_persistence(n, samples, seed, regime)?),
        Command::Exponent {
            ref regime,
            ref sizes,
            min_n,
            source,
            samples,
            seed,
        } => {
            let source = match source {
                SourceKind::Exact => {
                    if let Some(&max) = sizes.iter().max() {
                        check_budget(max, precision)?;
                    }
                    Source::Exact { precision }
                }
                SourceKind::Mc => Source::MonteCarlo {
                    samples,
                    seed: seed.ok_or_else(|| {
                        Failure::Usage("--source mc needs an explicit --seed".into())
                    })?,
                },
            };
            let regimes = if regime.is_empty() {
                Regime::ALL.to_vec()
            } else {
                regime.clone()
            };
            let reports = regimes
                .into_iter()
                .map(|r| exponent_report(sizes, r, source, min_n))
                .collect::<irw_bridge::Result<Vec<_>>>()?;
            return Ok(Report::Exponent(reports));
        }
    };
    Ok(Report::Json(report))
}

fn sample(
    n: usize,
    count: usize,
    seed: u64,
    pin: Option<PinSpec>,
    positive: bool,
) -> Result<Vec<String>, Failure> {
    let signs = |p: StepPath| p.to_signs();
    let paths = match (pin, positive) {
        (None, false) => par_samples(seed, count, |rng| signs(free_path(n, rng))),
        (Some(p), false) if n > TABLE_LIMIT => {
            let sampler = BridgeSampler::new(n, p.state)?;
            par_samples(seed, count, |rng| signs(sampler.sample_path(rng)))
        }
        (pin, positive) => {
            if n > EXACT_BUDGET {
                return Err(irw_bridge::Error::BudgetExceeded {
                    kind: "table",
                    n,
                    budget: EXACT_BUDGET,
                }
                .into());
            }
            let table = BackwardTable::<f64>::build(n, pin.map(|p| p.state), positive)?;
            table.sample(seed, count).into_iter().map(signs).collect()
        }
    };
    Ok(paths)
}

/// Flattens nested objects into dotted keys; arrays become JSON text.
fn flatten(prefix: &str, v: &Json, out: &mut Vec<(String, String)>) {
    match v {
        Json::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        Json::Null => out.push((prefix.to_string(), String::new())),
        Json::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_rows(rows: &[Json]) -> Result<Vec<u8>, Failure> {
    let flat: Vec<Vec<(String, String)>> = rows
        .iter()
        .map(|r| {
            let mut out = Vec::new();
            flatten("", r, &mut out);
            out
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for row in &flat {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for row in &flat {
        let record = header.iter().map(|h| {
            row.iter()
                .find(|(k, _)| k == h)
                .map_or("", |(_, v)| v.as_str())
        });
        w.write_record(record).map_err(io)?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

/// Exact conditional values are rationals, so `p_scale` holds the
/// denominator: `p = p_numerator / p_scale`.
fn exponent_csv(reports: &[ExponentReport]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record([
        "regime",
        "n",
        "p_numerator",
        "p_scale",
        "p_float",
        "exact_flag",
    ])
    .map_err(io)?;
    for r in reports {
        for pt in &r.series.points {
            let (num, den) = match &pt.p {
                Value::Exact(q) => (q.numer().to_string(), q.denom().to_string()),
                Value::Float(_) => (String::new(), String::new()),
            };
            w.write_record([
                r.regime.name().to_string(),
                pt.n.to_string(),
                num,
                den,
                pt.p.to_f64().to_string(),
                pt.exact.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

fn render(cli: &Cli, report: Report) -> Result<Vec<u8>, Failure> {
    let command = cli.command.name();
    let format = cli.format.unwrap_or(match report {
        Report::Paths(_) => Format::Text,
        _ => Format::Json,
    });
    let envelope = |result: Json| {
        let mut m = Map::new();
        m.insert("command".into(), json!(command));
        m.insert("mode".into(), to_json(&cli.mode));
        m.insert("result".into(), result);
        Json::Object(m)
    };
    let pretty = |v: &Json| {
        let mut s = serde_json::to_string_pretty(v).expect("json");
        s.push('\n');
        s.into_bytes()
    };
    match (report, format) {
        (Report::Paths(paths), Format::Text) => Ok(paths
            .iter()
            .flat_map(|p| format!("{p}\n").into_bytes())
            .collect()),
        (Report::Paths(paths), Format::Json) => Ok(pretty(&envelope(json!({ "paths": paths })))),
        (Report::Paths(paths), Format::Csv) => {
            let rows: Vec<Json> = paths.iter().map(|p| json!({ "path": p })).collect();
            csv_rows(&rows)
        }
        (Report::Exponent(r), Format::Csv) => exponent_csv(&r),
        (Report::Exponent(r), Format::Json) => Ok(pretty(&envelope(to_json(&r)))),
        (Report::Json(v), Format::Json) => Ok(pretty(&envelope(v))),
        (Report::Json(v), Format::Csv) => {
            // Reports holding a list of points give one row per point.
            let rows = match &v {
                Json::Object(m) => m
                    .get("points")
                    .and_then(Json::as_array)
                    .cloned()
                    .unwrap_or_else(|| vec![v.clone()]),
                _ => vec![v.clone()],
            };
            csv_rows(&rows)
        }
        (_, Format::Text) => Err(Failure::Usage(format!(
            "--format text applies to sample only, not {command}"
        ))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = run(&cli.command, cli.mode).and_then(|r| render(&cli, r));
    let bytes = match result {
        Ok(b) => b,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.exit_code());
        }
    };
    let written = match &cli.output {
        Some(path) => File::create(path).and_then(|mut f| f.write_all(&bytes)),
        None => io::stdout().lock().write_all(&bytes),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
