//! Scenarios, the check runner and machine-readable reports.

mod checks;

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use checks::{CheckId, CheckRequest, Outcome, FAMILY_SUPPORT, MIXED_PRODUCT_MAX_POWER, NORM_EXPANSION_FAMILIES};

use crate::qcalc::{Mode, QParam};
use crate::scalar::Value;
use crate::shiftops::DEFAULT_SEED;
use crate::surd::Surd;

/// Tolerance for checks that only run in floating point.
pub const FLOAT_CHECK_TOLERANCE: f64 = 1e-10;

pub const DEFAULT_D: usize = 24;
pub const DEFAULT_BLOCKS: usize = 6;
pub const DEFAULT_N_MAX: usize = 8;
pub const DEFAULT_DEPTH: usize = 2;
pub const DEFAULT_D_SUB: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Exact,
    Float,
}

impl fmt::Display for ModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeName::Exact => "exact",
            ModeName::Float => "float",
        })
    }
}

/// One run configuration. When read from JSON only `q` is required; missing
/// fields take the standard defaults and a missing `checks` list selects
/// every applicable check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScenarioRepr")]
pub struct Scenario {
    pub q: Value,
    pub mode: ModeName,
    /// Float tolerance; defaults to the mode's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub d: usize,
    #[serde(rename = "M")]
    pub blocks: usize,
    pub n_max: usize,
    /// Depth of the positivity form and of the norm expansion families.
    pub p: usize,
    /// Basis vectors per power in the positivity form.
    pub d_sub: usize,
    pub seed: u64,
    pub checks: Vec<CheckRequest>,
}

#[derive(Deserialize)]
struct ScenarioRepr {
    q: Value,
    #[serde(default = "default_mode")]
    mode: ModeName,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default = "default_d")]
    d: usize,
    #[serde(rename = "M", default = "default_blocks")]
    blocks: usize,
    #[serde(default = "default_n_max")]
    n_max: usize,
    #[serde(default = "default_depth")]
    p: usize,
    #[serde(default = "default_d_sub")]
    d_sub: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    checks: Option<Vec<CheckRequest>>,
}

fn default_mode() -> ModeName {
    ModeName::Exact
}
fn default_d() -> usize {
    DEFAULT_D
}
fn default_blocks() -> usize {
    DEFAULT_BLOCKS
}
fn default_n_max() -> usize {
    DEFAULT_N_MAX
}
fn default_depth() -> usize {
    DEFAULT_DEPTH
}
fn default_d_sub() -> usize {
    DEFAULT_D_SUB
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl From<ScenarioRepr> for Scenario {
    fn from(r: ScenarioRepr) -> Self {
        let mut s = Scenario {
            q: r.q,
            mode: r.mode,
            tol: r.tol,
            d: r.d,
            blocks: r.blocks,
            n_max: r.n_max,
            p: r.p,
            d_sub: r.d_sub,
            seed: r.seed,
            checks: Vec::new(),
        };
        s.checks = r.checks.unwrap_or_else(|| s.applicable_checks());
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid scenario: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ScenarioError(pub Vec<FieldError>);

impl Scenario {
    /// Defaults of the standard battery with every check that applies to `q`.
    pub fn new(q: Value, mode: ModeName) -> Self {
        let mut s = Scenario {
            q,
            mode,
            tol: None,
            d: DEFAULT_D,
            blocks: DEFAULT_BLOCKS,
            n_max: DEFAULT_N_MAX,
            p: DEFAULT_DEPTH,
            d_sub: DEFAULT_D_SUB,
            seed: DEFAULT_SEED,
            checks: Vec::new(),
        };
        s.checks = s.applicable_checks();
        s
    }

    pub fn with_checks(mut self, checks: impl IntoIterator<Item = CheckRequest>) -> Self {
        self.checks = checks.into_iter().collect();
        self
    }

    /// All catalogue checks defined for this scenario's `q`; empty if `q`
    /// does not validate.
    pub fn applicable_checks(&self) -> Vec<CheckRequest> {
        match self.qparam() {
            Ok(q) => CheckId::ALL.into_iter().filter(|c| c.applies(&q)).map(CheckRequest::from).collect(),
            Err(_) => Vec::new(),
        }
    }

    fn qparam(&self) -> crate::Result<QParam> {
        let mode = match self.mode {
            ModeName::Exact => Mode::Exact,
            ModeName::Float => Mode::Float { tolerance: self.tol.unwrap_or(crate::qcalc::DEFAULT_TOLERANCE) },
        };
        QParam::new(self.q.clone(), mode)
    }

    /// Checks every field, collecting all failures.
    pub fn validate(&self) -> Result<QParam, ScenarioError> {
        let mut errors = Vec::new();
        let mut fail = |field: &str, message: String| errors.push(FieldError { field: field.into(), message });
        let q = self.qparam();
        if let Err(e) = &q {
            fail("q", e.to_string());
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                fail("tol", format!("must be a positive finite number, got {t}"));
            }
        }
        for (field, value, min, max) in [
            ("d", self.d, 2, 512),
            ("M", self.blocks, 1, 64),
            ("n_max", self.n_max, 1, 64),
            ("p", self.p, 1, 16),
            ("d_sub", self.d_sub, 1, 64),
        ] {
            if value < min || value > max {
                fail(field, format!("must lie in [{min}, {max}], got {value}"));
            }
        }
        if self.checks.is_empty() {
            fail("checks", "no checks selected".into());
        }
        for c in &self.checks {
            if c.powers.is_some() && c.id != CheckId::MixedProduct {
                fail("checks", format!("{} takes no powers", c.id));
            }
        }
        match (q, errors.is_empty()) {
            (Ok(q), true) => Ok(q),
            _ => Err(ScenarioError(errors)),
        }
    }

    fn tolerance(&self, q: &QParam, id: CheckId) -> f64 {
        if id.float_only() {
            self.tol.unwrap_or(FLOAT_CHECK_TOLERANCE)
        } else {
            q.mode().tolerance()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordInputs {
    pub q: Value,
    pub d: usize,
    #[serde(rename = "M")]
    pub blocks: usize,
    pub n_max: usize,
    pub p: usize,
    pub d_sub: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: CheckId,
    pub anchor: String,
    pub inputs: RecordInputs,
    pub mode: ModeName,
    pub tolerance: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub seed: u64,
    pub timestamp: String,
    pub records: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.failed == 0 && self.summary.errors == 0
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report with its wall-clock fields (timestamp, per-check timings)
    /// cleared, for comparing runs.
    pub fn canonical(&self) -> Report {
        let mut r = self.clone();
        r.timestamp.clear();
        for rec in &mut r.records {
            rec.elapsed_ms = 0.0;
        }
        r
    }

    /// One row per record.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "check",
            "anchor",
            "q",
            "mode",
            "d",
            "M",
            "n_max",
            "p",
            "d_sub",
            "status",
            "residual",
            "scaled_residual",
            "tolerance",
            "verdict",
            "error",
            "elapsed_ms",
        ])
        .expect("write to memory");
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            let i = &r.inputs;
            w.write_record([
                r.check.name().to_string(),
                r.anchor.clone(),
                i.q.to_string(),
                r.mode.to_string(),
                i.d.to_string(),
                i.blocks.to_string(),
                i.n_max.to_string(),
                i.p.to_string(),
                i.d_sub.to_string(),
                serde_json::to_value(r.status).expect("status").as_str().unwrap_or_default().to_string(),
                opt(r.residual),
                opt(r.scaled_residual),
                r.tolerance.to_string(),
                r.verdict.clone().unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
                r.elapsed_ms.to_string(),
            ])
            .expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

fn run_one(req: &CheckRequest, sc: &Scenario, q: &QParam) -> CheckRecord {
    let tol = sc.tolerance(q, req.id);
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(|| match sc.mode {
        ModeName::Exact => checks::run_check::<Surd>(req, sc, q, tol),
        ModeName::Float => checks::run_check::<Complex64>(req, sc, q, tol),
    }));
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let mode = if req.id.float_only() { ModeName::Float } else { sc.mode };
    let mut record = CheckRecord {
        check: req.id,
        anchor: req.id.anchor().to_string(),
        inputs: RecordInputs {
            q: sc.q.clone(),
            d: sc.d,
            blocks: sc.blocks,
            n_max: sc.n_max,
            p: sc.p,
            d_sub: sc.d_sub,
            seed: sc.seed,
            powers: req.powers,
        },
        mode,
        tolerance: if mode == ModeName::Exact { 0.0 } else { tol },
        status: Status::Error,
        residual: None,
        scaled_residual: None,
        verdict: None,
        error: None,
        elapsed_ms,
    };
    match result {
        Ok(Ok(o)) => {
            record.status = if o.passed { Status::Pass } else { Status::Fail };
            record.residual = o.residual;
            record.scaled_residual = o.scaled;
            record.verdict = o.verdict;
        }
        Ok(Err(e)) => record.error = Some(e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "check panicked".into());
            record.error = Some(format!("internal error: {msg}"));
        }
    }
    record
}

/// Validates every scenario, then runs their checks in order. Check errors
/// become error records; only validation failures abort.
pub fn run_suite(scenarios: &[Scenario]) -> Result<Report, ScenarioError> {
    let validated = scenarios
        .iter()
        .map(|s| s.validate().map(|q| (s, q)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut records = Vec::new();
    for (sc, q) in validated {
        for req in &sc.checks {
            records.push(run_one(req, sc, &q));
        }
    }
    let count = |st: Status| records.iter().filter(|r| r.status == st).count();
    let summary =
        Summary { total: records.len(), passed: count(Status::Pass), failed: count(Status::Fail), errors: count(Status::Error) };
    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: scenarios.first().map_or(DEFAULT_SEED, |s| s.seed),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        records,
        summary,
    })
}

pub fn run_scenario(s: &Scenario) -> Result<Report, ScenarioError> {
    run_suite(std::slice::from_ref(s))
}

/// `q` grid of the default battery, covering every regime.
pub fn default_q_grid() -> Vec<Value> {
    vec![Value::rational(-1, 2), Value::integer(0), Value::rational(1, 2), Value::integer(1), Value::integer(2)]
}

/// The default battery: exact arithmetic, `d = 24`, `M = 6`, `n_max = 8`,
/// `p = 2`, each `q` with the checks that apply to it.
pub fn default_suite(seed: u64) -> Vec<Scenario> {
    default_q_grid()
        .into_iter()
        .map(|q| Scenario { seed, ..Scenario::new(q, ModeName::Exact) })
        .collect()
}
