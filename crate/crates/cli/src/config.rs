//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "function": {"kind": "factored", "scalar": [1, 0], "roots": [{"angle": "0/1"}]},
//!   "theta": "golden",
//!   "params": {"n": 1000, "grid_size": 256},
//!   "seed": 7
//! }
//! ```
//!
//! Angles are written as exact fractions of a turn (`"1/3"`), as rational
//! points shifted by multiples of θ (`{"base": "0/1", "shift": 1}`), or as
//! floating turns (`{"turns": 0.25}`). Unknown keys are rejected everywhere.

use std::path::Path;

use num_complex::Complex64;
use rotlab_core::circlefn::{Angle, CircleFunction, Root, Turns};
use rotlab_core::diophantine::RotationAngle;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When present, must name the subcommand being run.
    pub operation: Option<String>,
    pub function: Option<FunctionDesc>,
    pub theta: Option<ThetaDesc>,
    #[serde(default)]
    pub params: Params,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionDesc {
    /// `Σ c_k z^k`, coefficients as `[k, re, im]`.
    Laurent {
        coefficients: Vec<(i64, f64, f64)>,
    },
    /// `λ + z`.
    ShiftPlus {
        lambda: (f64, f64),
    },
    Constant {
        value: (f64, f64),
    },
    Factored {
        scalar: (f64, f64),
        roots: Vec<RootDesc>,
    },
    EssentialZero {
        p: f64,
    },
    Product {
        factors: Vec<FunctionDesc>,
    },
    /// `f(e^{2πi·rotation} z)`.
    Scaled {
        base: Box<FunctionDesc>,
        rotation: AngleDesc,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RootDesc {
    OnCircle {
        angle: AngleDesc,
        #[serde(default = "one")]
        mult: u32,
    },
    Off {
        value: (f64, f64),
        #[serde(default = "one")]
        mult: u32,
    },
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum AngleDesc {
    Rational(String),
    Shifted { base: String, shift: i64 },
    Turns { turns: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ThetaDesc {
    Preset(String),
    Surd { surd: (i64, i64, i64, i64) },
    Decimal { decimal: String, precision: u32 },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectDesc {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: Option<usize>,
    pub grid_size: Option<usize>,
    pub grid_offset: Option<f64>,
    pub schedule: Option<Vec<usize>>,
    /// Deepest quadrature level.
    pub levels: Option<u32>,
    pub force_quadrature: Option<bool>,
    /// Index into the convergent sequence of θ.
    pub convergent: Option<usize>,
    pub p: Option<u64>,
    pub q: Option<u64>,
    pub base_angle: Option<AngleDesc>,
    pub rect: Option<RectDesc>,
    pub epsilons: Option<Vec<f64>>,
    pub coupling: Option<f64>,
    pub q_max: Option<u64>,
    pub tol: Option<f64>,
    pub horizon: Option<u64>,
}

/// Budget on `n · grid_size` for the ergodic experiments.
pub const MAX_EVALUATIONS: u128 = 1_000_000_000;
pub const MAX_LEVEL: u32 = 24;
pub const MAX_MODEL_DIM: u64 = 1 << 16;
pub const MAX_HARPER_DIM: u64 = 4096;
pub const MAX_BUTTERFLY_Q: u64 = 200;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.params.validate()?;
        Ok(config)
    }

    pub fn theta(&self) -> Result<RotationAngle, ConfigError> {
        match &self.theta {
            None => Ok(RotationAngle::GoldenConjugate),
            Some(t) => t.resolve(),
        }
    }

    pub fn function(&self) -> Result<CircleFunction, ConfigError> {
        let theta = self.theta()?;
        self.function
            .as_ref()
            .ok_or_else(|| invalid("this experiment needs a \"function\""))?
            .resolve(&theta)
    }
}

impl ThetaDesc {
    pub fn resolve(&self) -> Result<RotationAngle, ConfigError> {
        match self {
            ThetaDesc::Preset(name) => match name.as_str() {
                "golden" => Ok(RotationAngle::GoldenConjugate),
                "silver" => Ok(RotationAngle::SilverConjugate),
                other => Err(invalid(format!("unknown theta preset {other:?}"))),
            },
            ThetaDesc::Surd { surd: (a, b, c, d) } => {
                RotationAngle::quadratic_surd(*a, *b, *c, *d).map_err(|e| invalid(e.to_string()))
            }
            ThetaDesc::Decimal { decimal, precision } => {
                RotationAngle::decimal(decimal, *precision).map_err(|e| invalid(e.to_string()))
            }
        }
    }
}

fn parse_turns(text: &str) -> Result<Turns, ConfigError> {
    text.parse::<Turns>()
        .map_err(|e| invalid(format!("bad angle {text:?}: {e}")))
}

impl AngleDesc {
    pub fn resolve(&self, theta: &RotationAngle) -> Result<Angle, ConfigError> {
        match self {
            AngleDesc::Rational(text) => Ok(Angle::RationalTurns(parse_turns(text)?)),
            AngleDesc::Shifted { base, shift } => {
                Ok(Angle::shifted(parse_turns(base)?, *shift, *theta))
            }
            AngleDesc::Turns { turns } if turns.is_finite() => Ok(Angle::real(*turns)),
            AngleDesc::Turns { .. } => Err(invalid("angle turns must be finite")),
        }
    }
}

fn complex((re, im): (f64, f64)) -> Result<Complex64, ConfigError> {
    if re.is_finite() && im.is_finite() {
        Ok(Complex64::new(re, im))
    } else {
        Err(invalid("complex values must be finite"))
    }
}

impl FunctionDesc {
    pub fn resolve(&self, theta: &RotationAngle) -> Result<CircleFunction, ConfigError> {
        let circle = |e: rotlab_core::circlefn::CircleError| invalid(e.to_string());
        Ok(match self {
            FunctionDesc::Laurent { coefficients } => {
                let mut coeffs = Vec::with_capacity(coefficients.len());
                for &(k, re, im) in coefficients {
                    coeffs.push((k, complex((re, im))?));
                }
                CircleFunction::laurent(coeffs)
            }
            FunctionDesc::ShiftPlus { lambda } => CircleFunction::shift_plus(complex(*lambda)?),
            FunctionDesc::Constant { value } => CircleFunction::constant(complex(*value)?),
            FunctionDesc::Factored { scalar, roots } => {
                let mut resolved = Vec::with_capacity(roots.len());
                for r in roots {
                    resolved.push(match r {
                        RootDesc::OnCircle { angle, mult } => {
                            (Root::OnCircle(angle.resolve(theta)?), *mult)
                        }
                        RootDesc::Off { value, mult } => (Root::Off(complex(*value)?), *mult),
                    });
                }
                CircleFunction::factored(complex(*scalar)?, resolved).map_err(circle)?
            }
            FunctionDesc::EssentialZero { p } => {
                CircleFunction::essential_zero(*p).map_err(circle)?
            }
            FunctionDesc::Product { factors } => CircleFunction::product(
                factors
                    .iter()
                    .map(|f| f.resolve(theta))
                    .collect::<Result<_, _>>()?,
            ),
            FunctionDesc::Scaled { base, rotation } => {
                CircleFunction::scaled(base.resolve(theta)?, rotation.resolve(theta)?)
            }
        })
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.n.unwrap_or(1);
        let g = self.grid_size.unwrap_or(1);
        if n == 0 || g == 0 {
            return Err(invalid("n and grid_size must be positive"));
        }
        let longest = self
            .schedule
            .as_ref()
            .and_then(|s| s.iter().max().copied())
            .unwrap_or(0)
            .max(n);
        if longest as u128 * g as u128 > MAX_EVALUATIONS {
            return Err(invalid(format!("n · grid_size exceeds {MAX_EVALUATIONS}")));
        }
        if let Some(s) = &self.schedule {
            if s.is_empty() || s.contains(&0) || s.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(
                    "schedule must be a nonempty increasing list of positive n",
                ));
            }
        }
        if let Some(l) = self.levels {
            if !(4..=MAX_LEVEL).contains(&l) {
                return Err(invalid(format!("levels must lie in 4..={MAX_LEVEL}")));
            }
        }
        if let Some(o) = self.grid_offset {
            if !o.is_finite() {
                return Err(invalid("grid_offset must be finite"));
            }
        }
        if let Some(q) = self.q {
            if q == 0 || q > MAX_MODEL_DIM {
                return Err(invalid(format!("q must lie in 1..={MAX_MODEL_DIM}")));
            }
        }
        if self.p.is_some() != self.q.is_some() {
            return Err(invalid("p and q must be given together"));
        }
        if let Some(r) = &self.rect {
            if r.nx == 0 || r.ny == 0 || r.nx > 512 || r.ny > 512 {
                return Err(invalid("rect resolution must lie in 1..=512 per axis"));
            }
            if !(r.re.0 < r.re.1 && r.im.0 < r.im.1) {
                return Err(invalid("rect bounds must be increasing"));
            }
        }
        if let Some(eps) = &self.epsilons {
            if eps.iter().any(|e| e.is_nan() || *e <= 0.0) {
                return Err(invalid("epsilons must be positive"));
            }
        }
        if let Some(c) = self.coupling {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(invalid("coupling must be a nonnegative number"));
            }
        }
        if let Some(q) = self.q_max {
            if q == 0 || q > MAX_BUTTERFLY_Q {
                return Err(invalid(format!("q_max must lie in 1..={MAX_BUTTERFLY_Q}")));
            }
        }
        if let Some(t) = self.tol {
            if t.is_nan() || t <= 0.0 {
                return Err(invalid("tol must be positive"));
            }
        }
        if let Some(c) = self.convergent {
            if c > 80 {
                return Err(invalid("convergent index must be at most 80"));
            }
        }
        Ok(())
    }
}
