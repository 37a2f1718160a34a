mod args;
mod report;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use bmm_core::bounds::{
    construct_even_pair, construct_lemma4_pair, construct_near_optimal_pair, phase_sweep,
    sweep_grid, BoundReport, ExtremalPair,
};
use bmm_core::chernoff::chernoff_info;
use bmm_core::oracle::{closest_pair_with, min_ci_against_capped, OracleOptions};
use bmm_core::sim::{fit_exponent, simulate_error_rates};
use bmm_core::{
    mixture_distribution, theorem1_bounds, theorem2_bounds, BinaryMatrix, Error, FlipProfile,
    SimConfig,
};
use clap::Parser;
use serde_json::{Map, Value};

use args::*;
use report::{header, matrix, num, profile as profile_json};

struct Failure {
    code: u8,
    message: String,
    /// Partial report still worth printing.
    report: Option<Value>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
            report: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) => 2,
            Error::ResourceCap { .. } => 3,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
            report: None,
        }
    }
}

enum Output {
    Json(Value),
    Text(String),
}

type CmdResult = Result<Output, Failure>;

fn read_matrix(flag: &str, path: &Path) -> Result<BinaryMatrix, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("--{flag}: cannot read {}: {e}", path.display())))?;
    BinaryMatrix::parse(&text)
        .map_err(|e| Failure::usage(format!("--{flag}: {}: {e}", path.display())))
}

fn write_file(flag: &str, path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::usage(format!("--{flag}: cannot write {}: {e}", path.display())))
}

fn build_profile(p: &ProfileArgs, n_cols: usize) -> Result<FlipProfile, Failure> {
    match (&p.flip, &p.flips) {
        (Some(f), None) => {
            FlipProfile::constant(*f, n_cols).map_err(|e| Failure::usage(format!("--flip: {e}")))
        }
        (None, Some(v)) => {
            if v.len() != n_cols {
                return Err(Failure::usage(format!(
                    "--flips: {} rates given for {n_cols} columns",
                    v.len()
                )));
            }
            FlipProfile::new(v.clone()).map_err(|e| Failure::usage(format!("--flips: {e}")))
        }
        _ => Err(Failure::usage(
            "exactly one of --flip and --flips is required",
        )),
    }
}

fn bound_json(out: &mut Map<String, Value>, r: &BoundReport) {
    out.insert("lower_nats".into(), num(r.lower));
    out.insert("upper_nats".into(), num(r.upper));
    out.insert("regime".into(), r.regime.as_str().into());
    out.insert("tight".into(), r.tight.into());
    out.insert("folded".into(), r.folded.into());
    let d = &r.decomposition;
    let mut dj = Map::new();
    dj.insert("cal_l".into(), d.cal_l.into());
    dj.insert("k".into(), d.k.into());
    dj.insert("r".into(), d.r.into());
    dj.insert("epsilon".into(), num(d.epsilon));
    dj.insert("eta".into(), d.eta.map(num).unwrap_or(Value::Null));
    out.insert("decomposition".into(), dj.into());
}

fn compute_bounds(
    n: usize,
    l: usize,
    p: &FlipProfile,
    generalized: bool,
) -> Result<BoundReport, Failure> {
    match p.as_constant() {
        Some(f) if !generalized => Ok(theorem1_bounds(n, l, f)?),
        _ => Ok(theorem2_bounds(n, l, p)?),
    }
}

fn cmd_ci(a: &CiArgs) -> CmdResult {
    let ma = read_matrix("a", &a.a)?;
    let mb = read_matrix("b", &a.b)?;
    if ma.n_cols() != mb.n_cols() {
        return Err(Failure::usage(format!(
            "--a has {} columns but --b has {}",
            ma.n_cols(),
            mb.n_cols()
        )));
    }
    let p = build_profile(&a.profile, ma.n_cols())?;
    let r = chernoff_info(
        &mixture_distribution(&ma, &p)?,
        &mixture_distribution(&mb, &p)?,
    )?;
    let mut out = header("ci");
    out.insert("L".into(), ma.n_cols().into());
    out.insert("profile".into(), profile_json(&p));
    out.insert("a".into(), matrix(&ma));
    out.insert("b".into(), matrix(&mb));
    out.insert("value_nats".into(), num(r.value));
    out.insert("lambda_star".into(), num(r.lambda_star));
    out.insert("iterations".into(), r.iterations.into());
    out.insert("converged".into(), r.converged.into());
    Ok(Output::Json(out.into()))
}

fn cmd_bounds(a: &BoundsArgs) -> CmdResult {
    let (n, l) = (a.shape.n, a.shape.l);
    let p = build_profile(&a.profile, l)?;
    let r = compute_bounds(n, l, &p, a.generalized)?;
    let mut out = header("bounds");
    out.insert("N".into(), n.into());
    out.insert("L".into(), l.into());
    out.insert("profile".into(), profile_json(&p));
    bound_json(&mut out, &r);
    Ok(Output::Json(out.into()))
}

fn cmd_closest_pair(a: &ClosestPairArgs) -> CmdResult {
    let (n, l) = (a.shape.n, a.shape.l);
    let p = build_profile(&a.profile, l)?;
    let opts = OracleOptions {
        cap: a.cap,
        ..Default::default()
    };
    let r = closest_pair_with(n, l, &p, opts)?;
    let mut out = header("closest-pair");
    out.insert("N".into(), n.into());
    out.insert("L".into(), l.into());
    out.insert("profile".into(), profile_json(&p));
    out.insert("min_ci_nats".into(), num(r.min_ci));
    out.insert("pair_a".into(), matrix(&r.pair.a));
    out.insert("pair_b".into(), matrix(&r.pair.b));
    out.insert("candidates".into(), r.candidates_examined.into());
    out.insert("non_identifiable".into(), r.non_identifiable.into());
    Ok(Output::Json(out.into()))
}

fn cmd_construct(a: &ConstructArgs) -> CmdResult {
    let (n, l, f) = (a.shape.n, a.shape.l, a.flip);
    let folded = if f > 0.5 { 1.0 - f } else { f };
    let kind = match a.kind {
        Kind::Auto if folded > 0.25 => Kind::NearOptimal,
        Kind::Auto if n % 2 == 1 => Kind::Odd,
        Kind::Auto => Kind::Even,
        k => k,
    };
    let e: ExtremalPair = match kind {
        Kind::Odd => construct_lemma4_pair(n, l, f)?,
        Kind::Even => construct_even_pair(n, l, f)?,
        _ => construct_near_optimal_pair(n, l, f)?,
    };
    write_file("out-a", &a.out_a, &e.pair.a.to_text())?;
    write_file("out-b", &a.out_b, &e.pair.b.to_text())?;
    let mut out = header("construct");
    out.insert("N".into(), n.into());
    out.insert("L".into(), l.into());
    out.insert("profile".into(), profile_json(&e.pair.profile));
    out.insert("construction".into(), e.construction.as_str().into());
    out.insert("predicted_ci_nats".into(), num(e.predicted_ci));
    out.insert("pair_a".into(), matrix(&e.pair.a));
    out.insert("pair_b".into(), matrix(&e.pair.b));
    out.insert("out_a".into(), a.out_a.display().to_string().into());
    out.insert("out_b".into(), a.out_b.display().to_string().into());
    Ok(Output::Json(out.into()))
}

fn cmd_sweep(a: &SweepArgs) -> CmdResult {
    let grid = sweep_grid(a.f_min, a.f_max, a.steps)?;
    let rows = phase_sweep(a.shape.n, a.shape.l, &grid)?;
    match a.format {
        Format::Csv => {
            let mut s = String::from("f,bound_low_noise_nats,bound_high_noise_nats\n");
            for r in rows {
                s.push_str(&format!(
                    "{},{},{}\n",
                    r.f, r.bound_low_noise, r.bound_high_noise
                ));
            }
            Ok(Output::Text(s))
        }
        Format::Json => {
            let mut out = header("sweep");
            out.insert("N".into(), a.shape.n.into());
            out.insert("L".into(), a.shape.l.into());
            let table: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    m.insert("f".into(), num(r.f));
                    m.insert("bound_low_noise_nats".into(), num(r.bound_low_noise));
                    m.insert("bound_high_noise_nats".into(), num(r.bound_high_noise));
                    m.into()
                })
                .collect();
            out.insert("rows".into(), table.into());
            Ok(Output::Json(out.into()))
        }
    }
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let truth = read_matrix("truth", &a.truth)?;
    let p = build_profile(&a.profile, truth.n_cols())?;
    let cfg = SimConfig::new(truth, p, a.m.clone(), a.trials, a.seed)?;
    let exact = min_ci_against_capped(&cfg.truth, &cfg.profile, bmm_core::oracle::DEFAULT_CAP)?;
    let per_m = simulate_error_rates(&cfg)?;

    let mut out = header("simulate");
    let mut c = Map::new();
    c.insert("truth".into(), matrix(&cfg.truth));
    c.insert("profile".into(), profile_json(&cfg.profile));
    c.insert("m_values".into(), cfg.m_values.clone().into());
    c.insert("trials".into(), cfg.trials.into());
    c.insert("seed".into(), cfg.seed.into());
    out.insert("config".into(), c.into());
    let table: Vec<Value> = per_m
        .iter()
        .map(|pt| {
            let mut m = Map::new();
            m.insert("m".into(), pt.m.into());
            m.insert("errors".into(), pt.errors.into());
            m.insert("error_rate".into(), num(pt.error_rate));
            m.insert("wilson_low".into(), num(pt.wilson.0));
            m.insert("wilson_high".into(), num(pt.wilson.1));
            m.into()
        })
        .collect();
    out.insert("per_m".into(), table.into());
    out.insert("exact_exponent_nats".into(), num(exact.value));
    out.insert("closest_alternative".into(), matrix(&exact.closest));

    let pts: Vec<(usize, f64)> = per_m.iter().map(|p| (p.m, p.error_rate)).collect();
    match fit_exponent(&pts) {
        Ok(fit) => {
            out.insert("slope".into(), num(fit.slope));
            out.insert(
                "slope_interval".into(),
                vec![num(fit.slope_interval.0), num(fit.slope_interval.1)].into(),
            );
            out.insert("used_points".into(), fit.used_points.into());
            let rel = if exact.value > 0.0 {
                (fit.slope - exact.value) / exact.value
            } else {
                f64::NAN
            };
            out.insert("relative_deviation".into(), num(rel));
            Ok(Output::Json(out.into()))
        }
        Err(e) => {
            out.insert("slope".into(), Value::Null);
            out.insert("fit_error".into(), e.to_string().into());
            let mut f = Failure::from(e);
            f.report = Some(out.into());
            Err(f)
        }
    }
}

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let (n, l) = (a.shape.n, a.shape.l);
    let p = build_profile(&a.profile, l)?;
    let bounds = compute_bounds(n, l, &p, false)?;
    let opts = OracleOptions {
        cap: a.cap,
        ..Default::default()
    };
    let r = closest_pair_with(n, l, &p, opts)?;
    let near = |x: f64, y: f64| x == y || (x - y).abs() <= a.tol;
    let status = if bounds.tight && near(r.min_ci, bounds.lower) {
        "tight-match"
    } else if r.min_ci >= bounds.lower - a.tol && r.min_ci <= bounds.upper + a.tol {
        "within-bounds"
    } else {
        "violation"
    };
    let mut out = header("verify");
    out.insert("N".into(), n.into());
    out.insert("L".into(), l.into());
    out.insert("profile".into(), profile_json(&p));
    out.insert("status".into(), status.into());
    out.insert("min_ci_nats".into(), num(r.min_ci));
    bound_json(&mut out, &bounds);
    out.insert("pair_a".into(), matrix(&r.pair.a));
    out.insert("pair_b".into(), matrix(&r.pair.b));
    out.insert("candidates".into(), r.candidates_examined.into());
    out.insert("tolerance".into(), num(a.tol));
    if status == "violation" {
        return Err(Failure {
            code: 1,
            message: format!(
                "oracle minimum {} lies outside [{}, {}]",
                r.min_ci, bounds.lower, bounds.upper
            ),
            report: Some(out.into()),
        });
    }
    Ok(Output::Json(out.into()))
}

fn render(out: &Output) -> String {
    match out {
        Output::Json(v) => {
            let mut s = serde_json::to_string_pretty(v).expect("report serializes");
            s.push('\n');
            s
        }
        Output::Text(t) => t.clone(),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.output {
        Some(path) => write_file("output", path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::usage(format!("--threads: {e}")))?;
    }
    let result = match &cli.command {
        Command::Ci(a) => cmd_ci(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::ClosestPair(a) => cmd_closest_pair(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(out) => emit(cli, &render(&out)),
        Err(mut f) => {
            if let Some(rep) = f.report.take() {
                emit(cli, &render(&Output::Json(rep)))?;
            }
            Err(f)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
