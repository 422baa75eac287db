//! The named experiments behind each subcommand.

use std::path::Path;

use num_complex::Complex64;
use rotlab_core::circlefn::{zero_set, Angle, CircleError, CircleFunction, Turns};
use rotlab_core::classify::{
    self, AlgebraIsomorphism, BrownMeasure, ClassifyError, Evidence, IndexValue, SpectrumShape,
    SUPPORT_TOL,
};
use rotlab_core::diophantine::{Convergent, DiophantineError, RotationAngle};
use rotlab_core::ergodic::{self, GridSpec};
use rotlab_core::fkdet::{self, FkdetError, Method, RefinementSchedule};
use rotlab_core::matrixmodel::{self, ComplexRect, FiniteModel, ModelError};
use serde_json::{json, Value};

use crate::config::{ConfigError, ExperimentConfig, MAX_HARPER_DIM};
use crate::output::{fmt_f64, json_f64, write_atomic, Record, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_REFUSED: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operation {
    Fkdet,
    Birkhoff,
    Radius,
    Nu,
    Spectrum,
    Brown,
    Model,
    Pseudospec,
    Harper,
    Index,
    Simplicity,
    AlgebraA,
}

impl Operation {
    pub const ALL: [Operation; 12] = [
        Operation::Fkdet,
        Operation::Birkhoff,
        Operation::Radius,
        Operation::Nu,
        Operation::Spectrum,
        Operation::Brown,
        Operation::Model,
        Operation::Pseudospec,
        Operation::Harper,
        Operation::Index,
        Operation::Simplicity,
        Operation::AlgebraA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operation::Fkdet => "fkdet",
            Operation::Birkhoff => "birkhoff",
            Operation::Radius => "radius",
            Operation::Nu => "nu",
            Operation::Spectrum => "spectrum",
            Operation::Brown => "brown",
            Operation::Model => "model",
            Operation::Pseudospec => "pseudospec",
            Operation::Harper => "harper",
            Operation::Index => "index",
            Operation::Simplicity => "simplicity",
            Operation::AlgebraA => "algebraA",
        }
    }

    /// The statement each experiment exercises.
    pub fn tag(self) -> &'static str {
        match self {
            Operation::Fkdet => "determinant-as-geometric-mean",
            Operation::Birkhoff => "uniform-birkhoff-convergence",
            Operation::Radius => "spectral-radius-equals-determinant",
            Operation::Nu => "brown-measure-weak-limit",
            Operation::Spectrum => "spectrum-circle-or-disk",
            Operation::Brown => "brown-measure-haar-on-circle",
            Operation::Model => "finite-model-circle-law",
            Operation::Pseudospec => "pseudospectrum-disk-filling",
            Operation::Harper => "harper-finite-model",
            Operation::Index => "subfactor-index-fourier-gcd",
            Operation::Simplicity => "simplicity-orbit-condition",
            Operation::AlgebraA => "algebra-a-isomorphism",
        }
    }

    pub fn from_name(name: &str) -> Option<Operation> {
        Operation::ALL.into_iter().find(|op| op.name() == name)
    }
}

/// A failed experiment with the exit status it maps to.
#[derive(Clone, Debug, PartialEq)]
pub struct RunError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl RunError {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        RunError {
            code,
            kind,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::new(EXIT_CONFIG, "ConfigError", e.to_string())
    }
}

impl From<FkdetError> for RunError {
    fn from(e: FkdetError) -> Self {
        match e {
            FkdetError::Inconclusive { .. } => {
                RunError::new(EXIT_INCONCLUSIVE, "Inconclusive", e.to_string())
            }
            FkdetError::BadSchedule(_) => RunError::new(EXIT_CONFIG, "BadSchedule", e.to_string()),
        }
    }
}

impl From<DiophantineError> for RunError {
    fn from(e: DiophantineError) -> Self {
        match e {
            DiophantineError::PrecisionExhausted { .. } => {
                RunError::new(EXIT_INCONCLUSIVE, "PrecisionExhausted", e.to_string())
            }
            DiophantineError::Overflow(_) => {
                RunError::new(EXIT_INCONCLUSIVE, "Overflow", e.to_string())
            }
            _ => RunError::new(EXIT_CONFIG, "InvalidTheta", e.to_string()),
        }
    }
}

impl From<CircleError> for RunError {
    fn from(e: CircleError) -> Self {
        RunError::new(EXIT_CONFIG, "CircleError", e.to_string())
    }
}

impl From<ClassifyError> for RunError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Determinant(d) => d.into(),
            ClassifyError::Circle(c) => c.into(),
            ClassifyError::InexactZeroSet => {
                RunError::new(EXIT_REFUSED, "InexactZeroSet", e.to_string())
            }
            ClassifyError::EmptyZeroSet => {
                RunError::new(EXIT_REFUSED, "EmptyZeroSet", e.to_string())
            }
            ClassifyError::HypothesisFailed { .. } => {
                RunError::new(EXIT_REFUSED, "HypothesisFailed", e.to_string())
            }
            ClassifyError::ThetaMismatch { .. } => {
                RunError::new(EXIT_CONFIG, "ThetaMismatch", e.to_string())
            }
        }
    }
}

impl From<ModelError> for RunError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NoConvergence { .. } => {
                RunError::new(EXIT_INCONCLUSIVE, "NoConvergence", e.to_string())
            }
            ModelError::ZeroEigenvalue => {
                RunError::new(EXIT_REFUSED, "ZeroEigenvalue", e.to_string())
            }
        }
    }
}

/// Summary record plus CSV payloads.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub record: Record,
    pub tables: Vec<Table>,
}

pub const DEFAULT_LEVELS: u32 = 20;
pub const DEFAULT_N: usize = 1000;
pub const DEFAULT_GRID: usize = 256;
pub const DEFAULT_SCHEDULE: [usize; 3] = [10, 100, 1000];
pub const DEFAULT_NU_N: usize = 512;
pub const DEFAULT_NU_GRID: usize = 4096;
/// Index of the default convergent; `55/89` for the golden θ.
pub const DEFAULT_CONVERGENT: usize = 10;
pub const DEFAULT_EPSILONS: [f64; 2] = [0.05, 0.1];

fn complex_cells(z: Complex64) -> [String; 2] {
    [fmt_f64(z.re), fmt_f64(z.im)]
}

fn grid_of(cfg: &ExperimentConfig, default_size: usize) -> GridSpec {
    let size = cfg.params.grid_size.unwrap_or(default_size);
    match cfg.params.grid_offset {
        Some(offset) => GridSpec::with_offset(size, offset),
        None => GridSpec::new(size),
    }
}

fn schedule_of(cfg: &ExperimentConfig) -> Result<RefinementSchedule, RunError> {
    Ok(RefinementSchedule::up_to(
        cfg.params.levels.unwrap_or(DEFAULT_LEVELS),
    )?)
}

/// The convergent selected by `p`/`q` or by index.
pub fn convergent_of(
    cfg: &ExperimentConfig,
    theta: &RotationAngle,
) -> Result<Convergent, RunError> {
    if let (Some(p), Some(q)) = (cfg.params.p, cfg.params.q) {
        return Ok(Convergent {
            p,
            q,
            error_bound: (theta.value() - p as f64 / q as f64).abs(),
        });
    }
    let k = cfg.params.convergent.unwrap_or(DEFAULT_CONVERGENT);
    let convs = theta.convergents(k + 1)?;
    Ok(convs[k])
}

fn model_of(cfg: &ExperimentConfig) -> Result<FiniteModel, RunError> {
    let theta = cfg.theta()?;
    let f = cfg.function()?;
    let conv = convergent_of(cfg, &theta)?;
    if conv.q > crate::config::MAX_MODEL_DIM {
        return Err(
            ConfigError::Invalid(format!("model dimension {} exceeds budget", conv.q)).into(),
        );
    }
    let base = match &cfg.params.base_angle {
        Some(a) => a.resolve(&theta)?,
        None => Angle::ZERO,
    };
    Ok(matrixmodel::build_model(&f, &conv, base))
}

pub fn run(op: Operation, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    if let Some(name) = &cfg.operation {
        if name != op.name() {
            return Err(ConfigError::Invalid(format!(
                "config is for {name:?} but {:?} was requested",
                op.name()
            ))
            .into());
        }
    }
    let mut record = Record::new(op.name(), op.tag());
    let mut tables = Vec::new();
    match op {
        Operation::Fkdet => {
            let f = cfg.function()?;
            let schedule = schedule_of(cfg)?;
            let d = if cfg.params.force_quadrature.unwrap_or(false) {
                fkdet::fk_determinant_quadrature(&f, &schedule)?
            } else {
                fkdet::fk_determinant(&f, &schedule)?
            };
            record.num("delta", d.delta);
            record.num("log_delta", d.log_delta);
            record.num("error_estimate", d.error_estimate);
            record.set("zero", d.is_zero());
            record.set(
                "method",
                match d.method {
                    Method::Analytic => "analytic",
                    Method::Quadrature => "quadrature",
                },
            );
            let mut t = Table::new(
                "fkdet_levels",
                &["level", "integral", "extrapolated", "error_estimate"],
            );
            for l in &d.trace {
                t.push(vec![
                    l.level.to_string(),
                    fmt_f64(l.integral),
                    fmt_f64(l.extrapolated),
                    fmt_f64(l.error_estimate),
                ]);
            }
            tables.push(t);
        }
        Operation::Birkhoff => {
            let f = cfg.function()?;
            let theta = cfg.theta()?;
            let n = cfg.params.n.unwrap_or(DEFAULT_N);
            let grid = grid_of(cfg, DEFAULT_GRID);
            let trace = ergodic::birkhoff_product(&f, &theta, n, grid);
            record.set("n", n);
            record.set("grid_size", grid.size);
            record.num("sup_root", trace.sup_root);
            record.num("inf_root", trace.inf_root);
            record.num("gap", trace.gap());
            let mut t = Table::new("birkhoff", &["j", "angle", "log_product", "root"]);
            for (j, l) in trace.log_values.iter().enumerate() {
                t.push(vec![
                    j.to_string(),
                    fmt_f64(grid.angle(j)),
                    fmt_f64(*l),
                    fmt_f64((l / n as f64).exp()),
                ]);
            }
            tables.push(t);
        }
        Operation::Radius => {
            let f = cfg.function()?;
            let theta = cfg.theta()?;
            let schedule = cfg
                .params
                .schedule
                .clone()
                .unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec());
            let grid = grid_of(cfg, DEFAULT_GRID);
            let d = fkdet::fk_determinant(&f, &schedule_of(cfg)?)?;
            let est = ergodic::spectral_radius_estimate(&f, &theta, &schedule, grid);
            record.num("determinant", d.delta);
            let mut t = Table::new("radius", &["n", "sup_root", "deviation"]);
            for (n, r) in &est {
                t.push(vec![
                    n.to_string(),
                    fmt_f64(*r),
                    fmt_f64((r - d.delta).abs()),
                ]);
            }
            if let Some((n, r)) = est.last() {
                record.set("n", *n);
                record.num("sup_root", *r);
                record.num("deviation", (r - d.delta).abs());
            }
            tables.push(t);
        }
        Operation::Nu => {
            let f = cfg.function()?;
            let theta = cfg.theta()?;
            let n = cfg.params.n.unwrap_or(DEFAULT_NU_N);
            let grid = grid_of(cfg, DEFAULT_NU_GRID);
            let d = fkdet::fk_determinant(&f, &schedule_of(cfg)?)?;
            let nu = ergodic::nu_n_distribution(&f, &theta, n, grid);
            let target = d.delta * d.delta;
            record.set("n", n);
            record.set("grid_size", grid.size);
            record.num("determinant_squared", target);
            record.num("mean", nu.mean());
            for (key, p) in [("q05", 0.05), ("median", 0.5), ("q95", 0.95)] {
                record.num(key, nu.quantile(p));
            }
            record.num(
                "mass_within_10_percent",
                nu.mass_in(0.9 * target, 1.1 * target),
            );
            let mut t = Table::new("nu", &["rank", "value"]);
            for (i, v) in nu.samples().iter().enumerate() {
                t.push(vec![i.to_string(), fmt_f64(*v)]);
            }
            tables.push(t);
        }
        Operation::Spectrum => {
            let f = cfg.function()?;
            let v = classify::classify_spectrum(&f)?;
            record.set(
                "shape",
                match v.shape {
                    SpectrumShape::Circle => "circle",
                    SpectrumShape::Disk => "disk",
                },
            );
            record.num("radius", v.radius);
            record.set("invertible", v.invertible);
            record.set("evidence", evidence_json(&v.evidence));
        }
        Operation::Brown => {
            let f = cfg.function()?;
            let b = classify::brown_measure(&f)?;
            record.set("measure", b.to_string());
            record.set(
                "kind",
                match b {
                    BrownMeasure::HaarOnCircle { .. } => "haar_on_circle",
                    BrownMeasure::PointMassAtZero => "point_mass_at_zero",
                },
            );
            record.num("radius", b.radius());
        }
        Operation::Model => {
            let m = model_of(cfg)?;
            let pairs = matrixmodel::eigenpairs_closed_form(&m);
            let mut worst: f64 = 0.0;
            for pair in &pairs {
                if pair.lambda != Complex64::default() {
                    worst = worst.max(matrixmodel::eigen_residual(&m, pair)?);
                }
            }
            let (log_mod, arg) = m.log_polar_product();
            record.set("p", m.p);
            record.set("q", m.q);
            record.set("degenerate", m.degenerate);
            record.num("spectral_radius", m.spectral_radius());
            record.num("log_abs_det", log_mod);
            record.num("det_arg", arg);
            record.num("max_residual", worst);
            let mut t = Table::new("model_eigenvalues", &["j", "re", "im"]);
            for (j, ev) in m.eigenvalues().iter().enumerate() {
                let [re, im] = complex_cells(*ev);
                t.push(vec![j.to_string(), re, im]);
            }
            tables.push(t);
            let mut w = Table::new("model_weights", &["k", "re", "im"]);
            for (k, d) in m.weights.iter().enumerate() {
                let [re, im] = complex_cells(*d);
                w.push(vec![k.to_string(), re, im]);
            }
            tables.push(w);
        }
        Operation::Pseudospec => {
            let m = model_of(cfg)?;
            let rect = match cfg.params.rect {
                Some(r) => ComplexRect {
                    re_min: r.re.0,
                    re_max: r.re.1,
                    im_min: r.im.0,
                    im_max: r.im.1,
                    nx: r.nx,
                    ny: r.ny,
                },
                None => ComplexRect::square(1.2, 101),
            };
            let eps = cfg
                .params
                .epsilons
                .clone()
                .unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
            let field = matrixmodel::pseudospectrum_grid(&m, rect);
            record.set("p", m.p);
            record.set("q", m.q);
            record.num(
                "sigma_at_zero",
                matrixmodel::sigma_min(&m, Complex64::default())?,
            );
            record.num("min_weight", m.min_weight());
            record.set("flagged", field.flagged.iter().filter(|f| **f).count());
            let fractions: Vec<Value> = field
                .sublevel_fractions(&eps)
                .into_iter()
                .map(|(e, frac)| json!({"epsilon": json_f64(e), "fraction": json_f64(frac)}))
                .collect();
            record.set("sublevel_fractions", fractions);
            let mut t = Table::new("pseudospec", &["re", "im", "sigma_min", "flagged"]);
            for (z, s, flagged) in field.points() {
                let [re, im] = complex_cells(z);
                t.push(vec![re, im, fmt_f64(s), (flagged as u8).to_string()]);
            }
            tables.push(t);
        }
        Operation::Harper => {
            let coupling = cfg.params.coupling.unwrap_or(1.0);
            let mut t = Table::new("harper", &["p", "q", "coupling", "eigenvalue"]);
            if let Some(q_max) = cfg.params.q_max {
                let pts = matrixmodel::butterfly(coupling, q_max);
                record.set("q_max", q_max);
                record.set("points", pts.len());
                for pt in pts {
                    t.push(vec![
                        pt.p.to_string(),
                        pt.q.to_string(),
                        fmt_f64(pt.coupling),
                        fmt_f64(pt.eigenvalue),
                    ]);
                }
            } else {
                let conv = convergent_of(cfg, &cfg.theta()?)?;
                if conv.q > MAX_HARPER_DIM {
                    return Err(ConfigError::Invalid(format!(
                        "Harper dimension {} exceeds {MAX_HARPER_DIM}",
                        conv.q
                    ))
                    .into());
                }
                let ev = matrixmodel::harper_eigenvalues(coupling, &conv);
                record.set("p", conv.p);
                record.set("q", conv.q);
                record.num("min", ev.first().copied().unwrap_or(0.0));
                record.num("max", ev.last().copied().unwrap_or(0.0));
                for e in ev {
                    t.push(vec![
                        conv.p.to_string(),
                        conv.q.to_string(),
                        fmt_f64(coupling),
                        fmt_f64(e),
                    ]);
                }
            }
            record.num("coupling", coupling);
            tables.push(t);
        }
        Operation::Index => {
            let f = cfg.function()?;
            let r = classify::subfactor_index(&f, cfg.params.tol.unwrap_or(SUPPORT_TOL))?;
            record.set("n", index_json(r.n));
            record.set("support", r.support.clone());
            record.set("method", format!("{:?}", r.method));
            record.set("notes", r.notes.clone());
        }
        Operation::Simplicity => {
            let f = cfg.function()?;
            let theta = cfg.theta()?;
            let v = classify::simplicity(&f, &theta)?;
            record.set("verdict", v.simple.to_string());
            record.set(
                "witness",
                v.failing_witness
                    .map(|w| json!({"i": w.i, "j": w.j, "n": w.n})),
            );
            record.set("conditions_checked", v.conditions_checked.clone());
            let mut t = Table::new("simplicity_zeros", &["index", "turns", "exact"]);
            for (i, a) in zero_set(&f).angles().enumerate() {
                t.push(vec![
                    i.to_string(),
                    fmt_f64(a.turns()),
                    a.is_exact().to_string(),
                ]);
            }
            tables.push(t);
        }
        Operation::AlgebraA => {
            let f = cfg.function()?;
            let theta = cfg.theta()?;
            let r = classify::algebra_a(&f, &theta)?;
            record.set("n", r.n);
            record.set("statement", r.statement());
            record.set("isomorphism", r.isomorphism.to_string());
            record.set(
                "isomorphism_kind",
                match r.isomorphism {
                    AlgebraIsomorphism::RotationSubalgebra { .. } => "rotation_subalgebra",
                    AlgebraIsomorphism::GeneralizedRotation => "generalized_rotation",
                    AlgebraIsomorphism::GeneralizedRotationPower { .. } => {
                        "generalized_rotation_power"
                    }
                },
            );
            record.set("notes", r.notes.clone());
        }
    }
    record.set("status", "ok");
    Ok(Outcome { record, tables })
}

fn evidence_json(e: &Evidence) -> Value {
    match e {
        Evidence::ExactZeroSet { zeros } => json!({"kind": "exact_zero_set", "zeros": zeros}),
        Evidence::SampledMinimum { min_abs, relative } => json!({
            "kind": "sampled_minimum",
            "min_abs": json_f64(*min_abs),
            "relative": json_f64(*relative),
        }),
    }
}

fn index_json(n: IndexValue) -> Value {
    match n {
        IndexValue::Degenerate => Value::String("DEGENERATE".into()),
        IndexValue::Index(k) => Value::from(k),
    }
}

/// Record written when an experiment fails.
pub fn error_record(op: Operation, err: &RunError) -> Record {
    let mut r = Record::new(op.name(), op.tag());
    r.set("status", "error");
    r.set("exit_code", err.code);
    r.set("error", err.kind);
    r.set("message", err.message.clone());
    r
}

/// Runs `op`, writes `<op>.json` and one CSV per table into `out`, and
/// returns the exit status.
pub fn execute(op: Operation, cfg: &ExperimentConfig, out: &Path) -> i32 {
    let (record, tables, code) = match run(op, cfg) {
        Ok(o) => (o.record, o.tables, EXIT_OK),
        Err(e) => {
            eprintln!("rotlab {}: {e}", op.name());
            (error_record(op, &e), Vec::new(), e.code)
        }
    };
    let json = record.to_json();
    print!("{json}");
    let mut result = write_atomic(&out.join(format!("{}.json", op.name())), &json);
    for t in &tables {
        if result.is_ok() {
            result = write_atomic(&out.join(format!("{}.csv", t.name)), &t.to_csv());
        }
    }
    match result {
        Ok(()) => code,
        Err(e) => {
            eprintln!("rotlab {}: cannot write artifacts: {e}", op.name());
            EXIT_FAILURE
        }
    }
}

/// Zeros `{1, e^{2πiθ}}`.
pub fn zeros_one_and_alpha(theta: RotationAngle) -> CircleFunction {
    CircleFunction::with_zeros_at(&[Angle::ZERO, Angle::shifted(Turns::ZERO, 1, theta)])
}
