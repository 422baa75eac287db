//! Decision procedures for `u f(v)`: spectrum shape, Brown measure,
//! subfactor index, minimal period of `|f|`, the orbit condition on the zero
//! set, simplicity of `C*(u f(v), 1)`, and the algebra `A = C*(vⁿ)`.
//!
//! The spectrum is the circle `Δ·S¹` when `f(v)` is invertible and the closed
//! disk of radius `Δ` otherwise. The Brown measure is always Haar measure on
//! `Δ·S¹` (a point mass at 0 when `Δ = 0`). For `u + λv` this gives radius
//! `max(1, |λ|)`, not `|λ|`, when `|λ| < 1`.

use std::fmt;

use num_integer::Integer;
use thiserror::Error;

use crate::circlefn::{
    fourier_abs_squared, fourier_abs_squared_sampled, zero_set, CircleError, CircleFunction,
    Exactness, FourierMethod, ZeroSet,
};
use crate::diophantine::RotationAngle;
use crate::fkdet::{fk_determinant, DeterminantResult, FkdetError, RefinementSchedule};

/// Sampled invertibility threshold, relative to `max |f|` on the grid.
pub const TAU_INV: f64 = 1e-6;
pub const INVERTIBILITY_GRID: usize = 1 << 16;
/// Relative cutoff for the Fourier support of `|f|²`.
pub const SUPPORT_TOL: f64 = 1e-9;
/// Frequency limit used when `|f|²` has to be sampled.
pub const SAMPLED_FOURIER_LIMIT: i64 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error(transparent)]
    Determinant(#[from] FkdetError),
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error("zero set is only known approximately; exact orbit decisions are refused")]
    InexactZeroSet,
    #[error("f has no zeros on the circle")]
    EmptyZeroSet,
    #[error("zero set is expressed in a rotation number other than {expected}")]
    ThetaMismatch { expected: RotationAngle },
    #[error("orbit condition fails: {witness}")]
    HypothesisFailed { witness: OrbitWitness },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumShape {
    Circle,
    Disk,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Evidence {
    /// Zero set known exactly, with this many distinct zeros.
    ExactZeroSet { zeros: usize },
    /// `min |f|` over the sampling grid and its ratio to `max |f|`.
    SampledMinimum { min_abs: f64, relative: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumVerdict {
    pub shape: SpectrumShape,
    /// `Δ(f(v))`.
    pub radius: f64,
    pub invertible: bool,
    pub evidence: Evidence,
    pub determinant: DeterminantResult,
}

/// Decides invertibility of `f(v)` from the zero set, falling back to a
/// sampled minimum when the zero set came from a numerical search.
pub fn invertibility(f: &CircleFunction, zeros: &ZeroSet) -> (bool, Evidence) {
    if zeros.exactness == Exactness::Exact {
        return (
            zeros.is_empty(),
            Evidence::ExactZeroSet { zeros: zeros.len() },
        );
    }
    let n = INVERTIBILITY_GRID;
    let (mut min, mut max) = (f64::INFINITY, 0.0f64);
    for j in 0..n {
        let v = f.eval_turns(j as f64 / n as f64).norm();
        min = min.min(v);
        max = max.max(v);
    }
    let relative = if max > 0.0 { min / max } else { 0.0 };
    (
        zeros.is_empty() && relative > TAU_INV,
        Evidence::SampledMinimum {
            min_abs: min,
            relative,
        },
    )
}

/// Circle of radius `Δ` when `f(v)` is invertible, closed disk otherwise.
pub fn classify_spectrum(f: &CircleFunction) -> Result<SpectrumVerdict, ClassifyError> {
    let determinant = fk_determinant(f, &RefinementSchedule::default())?;
    let zeros = zero_set(f);
    let (invertible, evidence) = invertibility(f, &zeros);
    Ok(SpectrumVerdict {
        shape: if invertible {
            SpectrumShape::Circle
        } else {
            SpectrumShape::Disk
        },
        radius: determinant.delta,
        invertible,
        evidence,
        determinant,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BrownMeasure {
    HaarOnCircle { radius: f64 },
    PointMassAtZero,
}

impl BrownMeasure {
    pub fn from_determinant(d: &DeterminantResult) -> Self {
        if d.delta == 0.0 {
            BrownMeasure::PointMassAtZero
        } else {
            BrownMeasure::HaarOnCircle { radius: d.delta }
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            BrownMeasure::HaarOnCircle { radius } => *radius,
            BrownMeasure::PointMassAtZero => 0.0,
        }
    }
}

impl fmt::Display for BrownMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BrownMeasure::HaarOnCircle { radius } => write!(f, "Haar measure on {radius}·S¹"),
            BrownMeasure::PointMassAtZero => write!(f, "point mass at 0"),
        }
    }
}

pub fn brown_measure(f: &CircleFunction) -> Result<BrownMeasure, ClassifyError> {
    let d = fk_determinant(f, &RefinementSchedule::default())?;
    Ok(BrownMeasure::from_determinant(&d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexValue {
    /// `|f|` is constant: every rotation is a period.
    Degenerate,
    Index(u64),
}

impl fmt::Display for IndexValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexValue::Degenerate => write!(f, "DEGENERATE"),
            IndexValue::Index(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexReport {
    pub n: IndexValue,
    /// Indices `k` with a non-negligible coefficient of `|f|²`.
    pub support: Vec<i64>,
    pub method: FourierMethod,
    pub notes: Vec<String>,
}

/// `n = gcd{k ≠ 0 : (|f|²)^(k) ≠ 0}`, the index of the subfactor generated by
/// `u f(v)`. Computed from `|f|` through `|f|²`, which has the same periods.
/// `tol` is relative to the largest coefficient.
pub fn subfactor_index(f: &CircleFunction, tol: f64) -> Result<IndexReport, ClassifyError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut notes = vec!["computed from |f| via the Fourier coefficients of |f|^2".to_string()];
    let data = match f.laurent_coefficients() {
        Some(coeffs) => {
            let span = match (coeffs.keys().next(), coeffs.keys().next_back()) {
                (Some(lo), Some(hi)) => hi - lo,
                _ => 0,
            };
            fourier_abs_squared(f, span)?
        }
        None => {
            let data = fourier_abs_squared_sampled(f, SAMPLED_FOURIER_LIMIT);
            notes.push(format!(
                "sampled coefficients up to |k| = {SAMPLED_FOURIER_LIMIT}, aliasing estimate {:e}",
                data.aliasing_error
            ));
            data
        }
    };
    let cutoff = (tol * data.max_magnitude()).max(10.0 * data.aliasing_error);
    let support: Vec<i64> = data
        .coefficients
        .iter()
        .filter(|(_, c)| c.norm() > cutoff)
        .map(|(k, _)| *k)
        .collect();
    let g = support
        .iter()
        .filter(|k| **k != 0)
        .fold(0u64, |acc, k| acc.gcd(&k.unsigned_abs()));
    let n = if g == 0 {
        notes.push("|f| is constant".to_string());
        IndexValue::Degenerate
    } else {
        IndexValue::Index(g)
    };
    Ok(IndexReport {
        n,
        support,
        method: data.method,
        notes,
    })
}

/// The `n` for which `|f|` has minimal period `e^{2πi/n}`; `1` when `|f|`
/// has no nontrivial period.
pub fn minimal_period(f: &CircleFunction, tol: f64) -> Result<IndexValue, ClassifyError> {
    Ok(subfactor_index(f, tol)?.n)
}

/// A collision `t_i − t_j ≡ nθ (mod 1)` between zeros `i` and `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitWitness {
    pub i: usize,
    pub j: usize,
    pub n: i64,
}

impl OrbitWitness {
    pub fn reversed(&self) -> Self {
        OrbitWitness {
            i: self.j,
            j: self.i,
            n: -self.n,
        }
    }
}

impl fmt::Display for OrbitWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t_{} - t_{} = {}θ", self.i, self.j, self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitVerdict {
    pub holds: bool,
    pub witness: Option<OrbitWitness>,
}

/// Whether `φⁿ(Y) ∩ Y = ∅` for every `n ≠ 0`, `φ` the rotation by `θ`.
///
/// Decided exactly: for `t = r + mθ`, a collision exists iff two zeros share
/// `r` and differ in `m`. `horizon` is unused for exact inputs. The witness
/// is normalized to `n > 0`.
pub fn orbit_condition(
    zeros: &ZeroSet,
    theta: &RotationAngle,
    _horizon: u64,
) -> Result<OrbitVerdict, ClassifyError> {
    if zeros.exactness != Exactness::Exact {
        return Err(ClassifyError::InexactZeroSet);
    }
    let mut parts = Vec::with_capacity(zeros.len());
    for a in zeros.angles() {
        let (r, m, t) = a.exact_parts().ok_or(ClassifyError::InexactZeroSet)?;
        if let Some(t) = t {
            if t != *theta {
                return Err(ClassifyError::ThetaMismatch { expected: *theta });
            }
        }
        parts.push((r, m));
    }
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let ((ri, mi), (rj, mj)) = (parts[i], parts[j]);
            if ri == rj && mi != mj {
                let w = OrbitWitness { i, j, n: mi - mj };
                let w = if w.n < 0 { w.reversed() } else { w };
                return Ok(OrbitVerdict {
                    holds: false,
                    witness: Some(w),
                });
            }
        }
    }
    Ok(OrbitVerdict {
        holds: true,
        witness: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Simplicity {
    Simple,
    NotSimple,
    Undecided,
}

impl fmt::Display for Simplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Simplicity::Simple => "simple",
            Simplicity::NotSimple => "not simple",
            Simplicity::Undecided => "undecided",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplicityVerdict {
    pub simple: Simplicity,
    pub failing_witness: Option<OrbitWitness>,
    pub conditions_checked: Vec<String>,
}

/// Simplicity of `C*(u f(v), 1)` for `f` with zeros on the circle and
/// non-periodic `|f|`: simple exactly when the orbit condition holds. With a
/// periodic `|f|` the criterion does not apply and the verdict is undecided.
pub fn simplicity(
    f: &CircleFunction,
    theta: &RotationAngle,
) -> Result<SimplicityVerdict, ClassifyError> {
    let zeros = zero_set(f);
    if zeros.is_empty() {
        return Err(ClassifyError::EmptyZeroSet);
    }
    if zeros.exactness != Exactness::Exact {
        return Err(ClassifyError::InexactZeroSet);
    }
    let mut checked = vec![format!("zero set exact with {} points", zeros.len())];
    let period = minimal_period(f, SUPPORT_TOL)?;
    if period != IndexValue::Index(1) {
        checked.push(format!(
            "|f| is periodic (n = {period}); criterion not applicable"
        ));
        return Ok(SimplicityVerdict {
            simple: Simplicity::Undecided,
            failing_witness: None,
            conditions_checked: checked,
        });
    }
    checked.push("|f| not periodic".to_string());
    let orbit = orbit_condition(&zeros, theta, 0)?;
    checked.push(if orbit.holds {
        "orbit condition holds".to_string()
    } else {
        "orbit condition fails".to_string()
    });
    Ok(SimplicityVerdict {
        simple: if orbit.holds {
            Simplicity::Simple
        } else {
            Simplicity::NotSimple
        },
        failing_witness: orbit.witness,
        conditions_checked: checked,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraIsomorphism {
    /// `C*(u, vⁿ)`, for invertible `f(v)`.
    RotationSubalgebra { n: u64 },
    /// `A_{θ,|f|²}`.
    GeneralizedRotation,
    /// `A_{nθ,|g|²}` with `f(v) = g(vⁿ)`.
    GeneralizedRotationPower { n: u64 },
}

impl fmt::Display for AlgebraIsomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraIsomorphism::RotationSubalgebra { n: 0 } => write!(f, "C*(u)"),
            AlgebraIsomorphism::RotationSubalgebra { n: 1 } => write!(f, "C*(u,v)"),
            AlgebraIsomorphism::RotationSubalgebra { n } => write!(f, "C*(u,v^{n})"),
            AlgebraIsomorphism::GeneralizedRotation => write!(f, "A_{{θ,|f|^2}}"),
            AlgebraIsomorphism::GeneralizedRotationPower { n } => write!(f, "A_{{{n}θ,|g|^2}}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraReport {
    /// `A = C*(vⁿ)`; `0` when `|f|` is constant and `A` reduces to scalars.
    pub n: u64,
    pub isomorphism: AlgebraIsomorphism,
    pub notes: Vec<String>,
}

impl AlgebraReport {
    pub fn statement(&self) -> String {
        match self.n {
            0 => "A = C*(1)".to_string(),
            1 => "A = C*(v)".to_string(),
            n => format!("A = C*(v^{n})"),
        }
    }
}

/// The algebra `A = C*(vⁿ)` inside `C*(u f(v), 1)` and the resulting
/// isomorphism type.
pub fn algebra_a(
    f: &CircleFunction,
    theta: &RotationAngle,
) -> Result<AlgebraReport, ClassifyError> {
    let zeros = zero_set(f);
    let (invertible, _) = invertibility(f, &zeros);
    let period = minimal_period(f, SUPPORT_TOL)?;
    let mut notes = Vec::new();
    if invertible {
        let n = match period {
            IndexValue::Index(n) => n,
            IndexValue::Degenerate => {
                notes.push("|f| is constant, so f(v) is a unitary up to scale".to_string());
                0
            }
        };
        return Ok(AlgebraReport {
            n,
            isomorphism: AlgebraIsomorphism::RotationSubalgebra { n },
            notes,
        });
    }
    if zeros.is_empty() || zeros.exactness != Exactness::Exact {
        return Err(ClassifyError::InexactZeroSet);
    }
    let orbit = orbit_condition(&zeros, theta, 0)?;
    if let Some(witness) = orbit.witness {
        return Err(ClassifyError::HypothesisFailed { witness });
    }
    match period {
        IndexValue::Index(1) => Ok(AlgebraReport {
            n: 1,
            isomorphism: AlgebraIsomorphism::GeneralizedRotation,
            notes,
        }),
        IndexValue::Index(n) => {
            notes.push(format!("f(v) = g(v^{n})"));
            Ok(AlgebraReport {
                n,
                isomorphism: AlgebraIsomorphism::GeneralizedRotationPower { n },
                notes,
            })
        }
        IndexValue::Degenerate => Err(CircleError::Invalid("f vanishes identically".into()).into()),
    }
}
