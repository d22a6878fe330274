use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use qosc_core::export::{measure_to_csv, write_block_operator, OperatorEnvelope};
use qosc_core::extension::build_extension;
use qosc_core::harness::{
    default_q_grid, run_suite, CheckId, CheckRequest, ModeName, Report, Scenario, Status, DEFAULT_BLOCKS, DEFAULT_D,
    DEFAULT_DEPTH, DEFAULT_D_SUB, DEFAULT_N_MAX,
};
use qosc_core::identities::halmos_bram_form;
use qosc_core::moments::{quadrature_from_moments, MomentSequence};
use qosc_core::qcalc::{basic_number, q_binomial, q_factorial, Mode};
use qosc_core::shiftops::{build_shift, canonical_weights, selfcommutator, DEFAULT_SEED};
use qosc_core::{QParam, Scalar, Surd, Value};
use serde_json::json;

const INVALID_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "qosc", version, about = "Finite-truncation checks for the relation S*S - qSS* = I")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate [n]_q, [n]_q! and the q-binomial row.
    Qcalc(QcalcArgs),
    /// Canonical shift: relation residuals, selfcommutator, hyponormality, norm, regime rejections.
    Shift(CommonArgs),
    /// Mixed-product expansion, norm expansion and the positivity form.
    Identity(IdentityArgs),
    /// Block normal extension: normality and consistency.
    Extend(CommonArgs),
    /// Schmudgen reduction and classification round trip.
    Classify(CommonArgs),
    /// Hankel positivity, quadrature, radial lift, D_q and M.
    Moments(CommonArgs),
    /// Default battery over q in {-1/2, 0, 1/2, 1, 2}, or an explicit scenario.
    Suite(SuiteArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Deformation parameter, `p/q` or decimal (default 1/2; for `suite`,
    /// a comma-separated list replacing the default grid).
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, value_enum, default_value_t = CliMode::Exact)]
    mode: CliMode,
    /// Floating-point tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Truncation dimension d.
    #[arg(long, default_value_t = DEFAULT_D)]
    dim: usize,
    /// Blocks per side M of the normal extension.
    #[arg(long, default_value_t = DEFAULT_BLOCKS)]
    blocks: usize,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
    /// Depth p of the positivity form and norm expansion.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, default_value_t = DEFAULT_D_SUB)]
    d_sub: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Restrict to these checks (repeatable).
    #[arg(long = "check")]
    checks: Vec<String>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the CSV report and artifacts into this directory.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Print the JSON report instead of the summary lines.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct IdentityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Power i of S* in the mixed-product check (with --j).
    #[arg(long, requires = "j")]
    i: Option<u64>,
    #[arg(long, requires = "i")]
    j: Option<u64>,
}

#[derive(Args)]
struct SuiteArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Run this scenario JSON file (or array of scenarios) instead of the default battery.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args)]
struct QcalcArgs {
    #[arg(long, allow_hyphen_values = true)]
    q: String,
    #[arg(long, value_enum, default_value_t = CliMode::Exact)]
    mode: CliMode,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliMode {
    Exact,
    Float,
}

impl From<CliMode> for ModeName {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Exact => ModeName::Exact,
            CliMode::Float => ModeName::Float,
        }
    }
}

/// Invalid input: exit 2.
struct Invalid(String);

impl<E: std::fmt::Display> From<E> for Invalid {
    fn from(e: E) -> Self {
        Invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(INVALID_INPUT)
        }
    }
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(command: Command) -> Result<u8, Invalid> {
    match command {
        Command::Qcalc(a) => qcalc(a),
        Command::Shift(c) => module(
            c,
            &[
                CheckId::OqResidual,
                CheckId::QcommLeft,
                CheckId::QcommRight,
                CheckId::SelfcommutatorDiagonal,
                CheckId::Hyponormality,
                CheckId::NormEstimate,
                CheckId::BilateralRegime,
                CheckId::NormalSolutionRegime,
            ],
            None,
            shift_artifacts,
        ),
        Command::Identity(a) => module(
            a.common,
            &[CheckId::MixedProduct, CheckId::NormExpansion, CheckId::HalmosBramPositivity],
            a.i.zip(a.j),
            identity_artifacts,
        ),
        Command::Extend(c) => {
            module(c, &[CheckId::ExtensionNormality, CheckId::ExtensionConsistency], None, extension_artifacts)
        }
        Command::Classify(c) => module(c, &[CheckId::SchmudgenReduction, CheckId::SchmudgenRoundTrip], None, no_artifacts),
        Command::Moments(c) => module(
            c,
            &[
                CheckId::HankelPositivity,
                CheckId::QuadratureMoments,
                CheckId::RadialLift,
                CheckId::PolyCommutation,
                CheckId::Adjointness,
            ],
            None,
            moment_artifacts,
        ),
        Command::Suite(a) => suite(a),
    }
}

fn scenario(c: &CommonArgs, q: Value) -> Scenario {
    Scenario {
        tol: c.tol,
        d: c.dim,
        blocks: c.blocks,
        n_max: c.n_max,
        p: c.depth,
        d_sub: c.d_sub,
        seed: c.seed,
        ..Scenario::new(q, c.mode.into())
    }
}

fn selected(c: &CommonArgs, family: &[CheckId]) -> Result<Vec<CheckId>, Invalid> {
    if c.checks.is_empty() {
        return Ok(family.to_vec());
    }
    c.checks
        .iter()
        .map(|name| {
            CheckId::parse(name)
                .filter(|id| family.contains(id))
                .ok_or_else(|| Invalid(format!("unknown check {name:?} for this subcommand")))
        })
        .collect()
}

type Artifacts = fn(&Scenario, &QParam, &Path) -> qosc_core::Result<()>;

fn module(c: CommonArgs, family: &[CheckId], powers: Option<(u64, u64)>, artifacts: Artifacts) -> Result<u8, Invalid> {
    let q = Value::from_str(c.q.as_deref().unwrap_or("1/2"))?;
    let explicit = !c.checks.is_empty();
    let ids = selected(&c, family)?;
    let base = scenario(&c, q);
    let qp = base.validate()?;
    // without an explicit selection, checks undefined for this q are skipped
    let ids: Vec<CheckId> = ids.into_iter().filter(|id| explicit || id.applies(&qp)).collect();
    if ids.is_empty() {
        return Err(Invalid(format!("no check of this subcommand applies to q = {}", base.q)));
    }
    let sc = base.with_checks(ids.into_iter().map(|id| CheckRequest {
        id,
        powers: if id == CheckId::MixedProduct { powers } else { None },
    }));
    let report = run_suite(std::slice::from_ref(&sc))?;
    if let Some(dir) = &c.csv {
        fs::create_dir_all(dir)?;
        artifacts(&sc, &qp, dir)?;
    }
    emit(&report, &c)
}

fn suite(a: SuiteArgs) -> Result<u8, Invalid> {
    let c = &a.common;
    let scenarios: Vec<Scenario> = match &a.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            if v.is_array() {
                serde_json::from_value(v)?
            } else {
                vec![serde_json::from_value(v)?]
            }
        }
        None => {
            let grid = match &c.q {
                None => default_q_grid(),
                Some(list) => list.split(',').map(Value::from_str).collect::<Result<_, _>>()?,
            };
            let mut out = Vec::new();
            for q in grid {
                let sc = scenario(c, q);
                let ids = if c.checks.is_empty() {
                    sc.checks.iter().map(|r| r.id).collect()
                } else {
                    let all = selected(c, &CheckId::ALL)?;
                    match sc.validate() {
                        Ok(qp) => all.into_iter().filter(|id| id.applies(&qp)).collect(),
                        Err(_) => all,
                    }
                };
                out.push(sc.with_checks(ids.into_iter().map(CheckRequest::from)));
            }
            out
        }
    };
    let report = run_suite(&scenarios)?;
    if let Some(dir) = &c.csv {
        fs::create_dir_all(dir)?;
    }
    emit(&report, c)
}

fn emit(report: &Report, c: &CommonArgs) -> Result<u8, Invalid> {
    if let Some(out) = &c.out {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(out, report.to_json())?;
    }
    if let Some(dir) = &c.csv {
        fs::write(dir.join("report.csv"), report.to_csv())?;
    }
    if c.json {
        say(&report.to_json());
    } else {
        for r in &report.records {
            let status = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Error => "ERROR",
            };
            let mut line = format!("{status:5} {:24} q={:<5} {:5}", r.check.name(), r.inputs.q.to_string(), r.mode.to_string());
            if let Some(v) = r.residual {
                line.push_str(&format!(" residual={v:e}"));
            }
            if let Some(v) = r.scaled_residual.filter(|_| r.mode == ModeName::Float) {
                line.push_str(&format!(" scaled={v:e}"));
            }
            if let Some(v) = &r.verdict {
                line.push_str(&format!(" [{v}]"));
            }
            if let Some(e) = &r.error {
                line.push_str(&format!(" error: {e}"));
            }
            say(&line);
        }
        let s = &report.summary;
        say(&format!("{} checks: {} passed, {} failed, {} errors", s.total, s.passed, s.failed, s.errors));
    }
    Ok(report.exit_code() as u8)
}

fn no_artifacts(_: &Scenario, _: &QParam, _: &Path) -> qosc_core::Result<()> {
    Ok(())
}

fn shift_artifacts(sc: &Scenario, q: &QParam, dir: &Path) -> qosc_core::Result<()> {
    fn write<T: Scalar>(sc: &Scenario, q: &QParam, dir: &Path) -> qosc_core::Result<()> {
        let s = build_shift::<T>(&canonical_weights::<T::Real>(q, sc.d)?, sc.d)?;
        OperatorEnvelope::from_operator(&s).write(dir, "shift")?;
        OperatorEnvelope::from_operator(&selfcommutator(&s, q)?).write(dir, "selfcommutator")
    }
    dispatch(sc, q, dir, write::<Surd>, write::<Complex64>)
}

fn identity_artifacts(sc: &Scenario, q: &QParam, dir: &Path) -> qosc_core::Result<()> {
    fn write<T: Scalar>(sc: &Scenario, q: &QParam, dir: &Path) -> qosc_core::Result<()> {
        let s = build_shift::<T>(&canonical_weights::<T::Real>(q, sc.d)?, sc.d)?;
        OperatorEnvelope::from_form(&halmos_bram_form(&s, sc.p, sc.d_sub)?).write(dir, "positivity_form")
    }
    dispatch(sc, q, dir, write::<Surd>, write::<Complex64>)
}

fn extension_artifacts(sc: &Scenario, q: &QParam, dir: &Path) -> qosc_core::Result<()> {
    fn write<T: Scalar>(sc: &Scenario, q: &QParam, dir: &Path) -> qosc_core::Result<()> {
        write_block_operator(&build_extension::<T>(q, sc.d, sc.blocks)?, &dir.join("extension")).map(|_| ())
    }
    dispatch(sc, q, dir, write::<Surd>, write::<Complex64>)
}

fn moment_artifacts(sc: &Scenario, q: &QParam, dir: &Path) -> qosc_core::Result<()> {
    let nodes = sc.n_max.div_ceil(2).max(1);
    let quad = if matches!(q.value(), Value::Rational(_)) {
        quadrature_from_moments(&MomentSequence::<num_rational::BigRational>::q_factorial(q, 2 * nodes - 1)?, nodes)?
    } else {
        quadrature_from_moments(&MomentSequence::<f64>::q_factorial(q, 2 * nodes - 1)?, nodes)?
    };
    fs::write(dir.join("measure.csv"), measure_to_csv(&quad.measure))?;
    Ok(())
}

fn dispatch(
    sc: &Scenario,
    q: &QParam,
    dir: &Path,
    exact: fn(&Scenario, &QParam, &Path) -> qosc_core::Result<()>,
    float: fn(&Scenario, &QParam, &Path) -> qosc_core::Result<()>,
) -> qosc_core::Result<()> {
    if q.mode() == Mode::Exact {
        exact(sc, q, dir)
    } else {
        float(sc, q, dir)
    }
}

fn qcalc(a: QcalcArgs) -> Result<u8, Invalid> {
    let mode = match a.mode {
        CliMode::Exact => Mode::Exact,
        CliMode::Float => Mode::Float { tolerance: a.tol.unwrap_or(qosc_core::qcalc::DEFAULT_TOLERANCE) },
    };
    let q = QParam::parse(&a.q, mode)?;
    let n = a.n_max as u64;
    let rows: Vec<serde_json::Value> = (0..=n)
        .map(|k| -> Result<serde_json::Value, Invalid> {
            Ok(json!({
                "n": k,
                "basic": basic_number(k as i64, &q)?,
                "factorial": q_factorial(k, &q),
                "binomial": q_binomial(n, k as i64, &q),
            }))
        })
        .collect::<Result<_, _>>()?;
    let doc = json!({ "q": q.value(), "mode": q.mode(), "regime": format!("{:?}", q.regime()), "n_max": n, "rows": rows });
    let text = serde_json::to_string_pretty(&doc)?;
    match &a.out {
        Some(out) => fs::write(out, &text)?,
        None => say(&text),
    }
    Ok(0)
}
