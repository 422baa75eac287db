//! Continuous functions on the unit circle.
//!
//! A [`CircleFunction`] is a small expression tree: Laurent polynomials,
//! polynomials given by their roots, the flat-at-one-point function
//! `exp(-1/dist^p)`, products, and rotations `z ↦ f(e^{2πis} z)`. Points of
//! the circle are [`Angle`]s measured in turns.
//!
//! Evaluation is "anchored": a point is an exact angle plus a floating
//! offset. When the anchor coincides exactly with a known zero the offset is
//! the distance to that zero with full relative precision, which is what lets
//! the determinant quadrature resolve singularities down to 1e-18 turns.

mod angle;
mod fourier;
mod zeros;

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::numeric::{cis_turns, log_chord, wrap_centered};

pub use angle::{Angle, Turns};
pub use fourier::{fourier_abs_squared, fourier_abs_squared_sampled, FourierData, FourierMethod};
pub use zeros::{zero_set, Exactness, ZeroPoint, ZeroSet};

/// Tolerance for classifying a root as lying on the unit circle.
pub const TAU_CIRCLE: f64 = 1e-9;
/// Sampled zeros must fall below this fraction of the largest grid value.
pub const TAU_ZERO: f64 = 1e-10;
/// Below this distance from its zero, the essential-zero function is 0.
pub const ESSENTIAL_ZERO_FLOOR: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircleError {
    #[error("invalid circle function: {0}")]
    Invalid(String),
    #[error("|f|² has Fourier support up to |k| = {needed}, beyond the requested K = {limit}")]
    DegreeOverflow { needed: i64, limit: i64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Root {
    /// A root on the unit circle, located exactly.
    OnCircle(Angle),
    /// A root off the circle; `||root| − 1| ≥ TAU_CIRCLE`.
    Off(Complex64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircleFunction {
    /// `Σ c_k z^k` over finitely many `k`.
    Laurent(BTreeMap<i64, Complex64>),
    /// `scalar · Π (z − root)^multiplicity`.
    Factored {
        scalar: Complex64,
        roots: Vec<(Root, u32)>,
    },
    /// `exp(−1/dist(t, 0)^p)` in turns; a single zero at angle 0.
    EssentialZero {
        p: f64,
    },
    Product(Vec<CircleFunction>),
    /// `z ↦ base(e^{2πi·rotation} z)`.
    Scaled {
        base: Box<CircleFunction>,
        rotation: Angle,
    },
}

impl CircleFunction {
    pub fn laurent<I: IntoIterator<Item = (i64, Complex64)>>(coefficients: I) -> Self {
        let mut map = BTreeMap::new();
        for (k, c) in coefficients {
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        CircleFunction::Laurent(map)
    }

    /// Real-coefficient Laurent polynomial.
    pub fn laurent_real<I: IntoIterator<Item = (i64, f64)>>(coefficients: I) -> Self {
        Self::laurent(
            coefficients
                .into_iter()
                .map(|(k, c)| (k, Complex64::new(c, 0.0))),
        )
    }

    pub fn constant(c: Complex64) -> Self {
        Self::laurent([(0, c)])
    }

    /// `λ + z` as a Laurent polynomial.
    pub fn shift_plus(lambda: Complex64) -> Self {
        Self::laurent([(0, lambda), (1, Complex64::new(1.0, 0.0))])
    }

    pub fn factored(scalar: Complex64, roots: Vec<(Root, u32)>) -> Result<Self, CircleError> {
        if !(scalar.re.is_finite() && scalar.im.is_finite()) {
            return Err(CircleError::Invalid("scalar must be finite".into()));
        }
        for (root, mult) in &roots {
            if *mult == 0 {
                return Err(CircleError::Invalid(
                    "root multiplicity must be positive".into(),
                ));
            }
            if let Root::Off(r) = root {
                if !(r.re.is_finite() && r.im.is_finite()) {
                    return Err(CircleError::Invalid("root must be finite".into()));
                }
                if (r.norm() - 1.0).abs() < TAU_CIRCLE {
                    return Err(CircleError::Invalid(format!(
                        "root {r} lies on the unit circle; give it as an exact angle"
                    )));
                }
            }
        }
        Ok(CircleFunction::Factored { scalar, roots })
    }

    /// `Π (z − e^{2πi·a})` over the given on-circle angles.
    pub fn with_zeros_at(angles: &[Angle]) -> Self {
        CircleFunction::Factored {
            scalar: Complex64::new(1.0, 0.0),
            roots: angles.iter().map(|a| (Root::OnCircle(*a), 1)).collect(),
        }
    }

    pub fn essential_zero(p: f64) -> Result<Self, CircleError> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(CircleError::Invalid(format!(
                "essential zero needs p ≥ 1, got {p}"
            )));
        }
        Ok(CircleFunction::EssentialZero { p })
    }

    pub fn product(factors: Vec<CircleFunction>) -> Self {
        CircleFunction::Product(factors)
    }

    pub fn scaled(base: CircleFunction, rotation: Angle) -> Self {
        CircleFunction::Scaled {
            base: Box::new(base),
            rotation,
        }
    }

    /// `f(e^{2πi t})`.
    pub fn evaluate(&self, t: &Angle) -> Complex64 {
        self.eval_at(t, 0.0)
    }

    /// `f(e^{2πi t})` for floating turns.
    pub fn eval_turns(&self, t: f64) -> Complex64 {
        self.eval_at(&Angle::ZERO, t)
    }

    /// `ln|f(e^{2πi t})|`, `-∞` at zeros.
    pub fn log_abs_turns(&self, t: f64) -> f64 {
        self.log_abs_at(&Angle::ZERO, t)
    }

    pub(crate) fn eval_at(&self, anchor: &Angle, offset: f64) -> Complex64 {
        match self {
            CircleFunction::Laurent(coeffs) => eval_laurent(coeffs, anchor, offset),
            CircleFunction::Factored { scalar, roots } => {
                let mut acc = *scalar;
                for (root, mult) in roots {
                    let factor = match root {
                        Root::OnCircle(a) => {
                            let d = distance_turns(anchor, a, offset);
                            // e^{2πia}(e^{2πid} − 1) = e^{2πi(a + d/2)} · 2i sin(πd)
                            let s = 2.0 * (std::f64::consts::PI * d).sin();
                            cis_turns(a.turns() + 0.5 * d) * Complex64::new(0.0, s)
                        }
                        Root::Off(r) => point(anchor, offset) - r,
                    };
                    acc *= factor.powu(*mult);
                }
                acc
            }
            CircleFunction::EssentialZero { p } => {
                let dist = distance_turns(anchor, &Angle::ZERO, offset).abs();
                if dist < ESSENTIAL_ZERO_FLOOR {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new((-dist.powf(-p)).exp(), 0.0)
                }
            }
            CircleFunction::Product(factors) => {
                factors.iter().fold(Complex64::new(1.0, 0.0), |acc, f| {
                    acc * f.eval_at(anchor, offset)
                })
            }
            CircleFunction::Scaled { base, rotation } => {
                base.eval_at(&anchor.add(rotation), offset)
            }
        }
    }

    pub(crate) fn log_abs_at(&self, anchor: &Angle, offset: f64) -> f64 {
        match self {
            CircleFunction::Laurent(coeffs) => eval_laurent(coeffs, anchor, offset).norm().ln(),
            CircleFunction::Factored { scalar, roots } => {
                let mut acc = scalar.norm().ln();
                for (root, mult) in roots {
                    let term = match root {
                        Root::OnCircle(a) => log_chord(distance_turns(anchor, a, offset)),
                        Root::Off(r) => (point(anchor, offset) - r).norm().ln(),
                    };
                    acc += *mult as f64 * term;
                }
                acc
            }
            CircleFunction::EssentialZero { p } => {
                let dist = distance_turns(anchor, &Angle::ZERO, offset).abs();
                if dist == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -dist.powf(-p)
                }
            }
            CircleFunction::Product(factors) => {
                let mut acc = 0.0;
                for f in factors {
                    let v = f.log_abs_at(anchor, offset);
                    if v == f64::NEG_INFINITY {
                        return v;
                    }
                    acc += v;
                }
                acc
            }
            CircleFunction::Scaled { base, rotation } => {
                base.log_abs_at(&anchor.add(rotation), offset)
            }
        }
    }

    /// Closed-form `ln Δ(f(v))` when the function is built only from
    /// factored polynomials and monomials (Jensen's formula). On-circle roots
    /// contribute nothing.
    pub fn analytic_log_determinant(&self) -> Option<f64> {
        match self {
            CircleFunction::Laurent(coeffs) => match coeffs.len() {
                0 => Some(f64::NEG_INFINITY),
                1 => coeffs.values().next().map(|c| c.norm().ln()),
                _ => None,
            },
            CircleFunction::Factored { scalar, roots } => {
                let mut acc = scalar.norm().ln();
                for (root, mult) in roots {
                    if let Root::Off(r) = root {
                        acc += *mult as f64 * r.norm().ln().max(0.0);
                    }
                }
                Some(acc)
            }
            CircleFunction::EssentialZero { .. } => None,
            CircleFunction::Product(factors) => factors
                .iter()
                .map(|f| f.analytic_log_determinant())
                .sum::<Option<f64>>(),
            CircleFunction::Scaled { base, .. } => base.analytic_log_determinant(),
        }
    }

    /// Laurent coefficients when `f` is a (Laurent) polynomial.
    pub fn laurent_coefficients(&self) -> Option<BTreeMap<i64, Complex64>> {
        match self {
            CircleFunction::Laurent(c) => Some(c.clone()),
            CircleFunction::Factored { scalar, roots } => {
                let mut poly = BTreeMap::from([(0i64, *scalar)]);
                for (root, mult) in roots {
                    let r = match root {
                        Root::OnCircle(a) => cis_turns(a.turns()),
                        Root::Off(r) => *r,
                    };
                    let linear = BTreeMap::from([(0i64, -r), (1i64, Complex64::new(1.0, 0.0))]);
                    for _ in 0..*mult {
                        poly = convolve(&poly, &linear);
                    }
                }
                Some(poly)
            }
            CircleFunction::EssentialZero { .. } => None,
            CircleFunction::Product(factors) => {
                let mut acc = BTreeMap::from([(0i64, Complex64::new(1.0, 0.0))]);
                for f in factors {
                    acc = convolve(&acc, &f.laurent_coefficients()?);
                }
                Some(acc)
            }
            CircleFunction::Scaled { base, rotation } => {
                let s = rotation.turns();
                Some(
                    base.laurent_coefficients()?
                        .into_iter()
                        .map(|(k, c)| (k, c * cis_turns(wrap_centered(k as f64 * s))))
                        .collect(),
                )
            }
        }
    }

    pub fn is_polynomial(&self) -> bool {
        match self {
            CircleFunction::Laurent(_) | CircleFunction::Factored { .. } => true,
            CircleFunction::EssentialZero { .. } => false,
            CircleFunction::Product(f) => f.iter().all(|f| f.is_polynomial()),
            CircleFunction::Scaled { base, .. } => base.is_polynomial(),
        }
    }
}

fn point(anchor: &Angle, offset: f64) -> Complex64 {
    match anchor {
        Angle::RationalTurns(r) if r.is_zero() => cis_turns(offset),
        _ => cis_turns(anchor.turns() + offset),
    }
}

/// Signed distance in turns from `target` to `anchor + offset`, in
/// `(-1/2, 1/2]`. Exact cancellation when the anchor sits on the target.
fn distance_turns(anchor: &Angle, target: &Angle, offset: f64) -> f64 {
    let diff = anchor.sub(target);
    match diff {
        Angle::RationalTurns(r) if r.is_zero() => wrap_centered(offset),
        _ => wrap_centered(diff.turns() + offset),
    }
}

fn eval_laurent(coeffs: &BTreeMap<i64, Complex64>, anchor: &Angle, offset: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    match anchor {
        // exact root-of-unity reduction of k·r before any rounding
        Angle::RationalTurns(r) if offset == 0.0 => {
            for (&k, c) in coeffs {
                acc += c * cis_turns(r.scale(k).to_f64());
            }
        }
        _ => {
            let t = if matches!(anchor, Angle::RationalTurns(r) if r.is_zero()) {
                offset
            } else {
                anchor.turns() + offset
            };
            for (&k, c) in coeffs {
                acc += c * cis_turns(wrap_centered(k as f64 * t));
            }
        }
    }
    acc
}

pub(crate) fn convolve(
    a: &BTreeMap<i64, Complex64>,
    b: &BTreeMap<i64, Complex64>,
) -> BTreeMap<i64, Complex64> {
    let mut out = BTreeMap::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            *out.entry(ka + kb).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn evaluation_examples() {
        let z2 = CircleFunction::laurent_real([(2, 1.0)]);
        assert_eq!(z2.evaluate(&Angle::rational(1, 4)), c(-1.0));
        let ez = CircleFunction::essential_zero(1.0).unwrap();
        assert_eq!(ez.evaluate(&Angle::ZERO), c(0.0));
        let two_plus_z = CircleFunction::shift_plus(c(2.0));
        assert_eq!(two_plus_z.evaluate(&Angle::rational(1, 2)), c(1.0));
    }

    #[test]
    fn essential_zero_profile() {
        let ez = CircleFunction::essential_zero(2.0).unwrap();
        let at = |x: f64| ez.eval_turns(x).re;
        assert_relative_eq!(at(0.25), (-16.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(at(0.75), (-16.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(at(0.5), (-4.0f64).exp(), max_relative = 1e-14);
        assert_eq!(at(1e-16), 0.0);
        assert_eq!(ez.log_abs_turns(0.0), f64::NEG_INFINITY);
        assert_relative_eq!(ez.log_abs_turns(1e-3), -1e6, max_relative = 1e-12);
        assert!(CircleFunction::essential_zero(0.5).is_err());
    }

    #[test]
    fn factored_agrees_with_expanded_polynomial() {
        let f = CircleFunction::factored(
            c(2.0),
            vec![
                (Root::OnCircle(Angle::rational(1, 3)), 2),
                (Root::Off(Complex64::new(0.3, -0.2)), 1),
            ],
        )
        .unwrap();
        let coeffs = f.laurent_coefficients().unwrap();
        let poly = CircleFunction::Laurent(coeffs);
        for j in 0..50 {
            let t = j as f64 / 50.0 + 0.003;
            let a = f.eval_turns(t);
            let b = poly.eval_turns(t);
            assert!(
                (a - b).norm() <= 1e-12 * (1.0 + a.norm()),
                "t={t}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn off_circle_roots_must_be_off_the_circle() {
        let bad = CircleFunction::factored(c(1.0), vec![(Root::Off(c(1.0 + 1e-12)), 1)]);
        assert!(bad.is_err());
        assert!(CircleFunction::factored(c(1.0), vec![(Root::Off(c(2.0)), 0)]).is_err());
    }

    #[test]
    fn anchored_log_resolves_tiny_distances() {
        let f = CircleFunction::with_zeros_at(&[Angle::rational(1, 3)]);
        let v = f.log_abs_at(&Angle::rational(1, 3), 1e-17);
        assert_relative_eq!(
            v,
            (2.0 * std::f64::consts::PI * 1e-17f64).ln(),
            max_relative = 1e-12
        );
        // the same through a rotation that cancels exactly
        let g = CircleFunction::scaled(
            CircleFunction::essential_zero(1.0).unwrap(),
            Angle::rational(1, 3),
        );
        assert_relative_eq!(
            g.log_abs_at(&Angle::rational(2, 3), 1e-17),
            -1e17,
            max_relative = 1e-12
        );
    }

    #[test]
    fn analytic_log_determinant_cases() {
        let z_minus_1 = CircleFunction::with_zeros_at(&[Angle::ZERO]);
        assert_eq!(z_minus_1.analytic_log_determinant(), Some(0.0));
        let off = CircleFunction::factored(c(1.0), vec![(Root::Off(c(-3.0)), 1)]).unwrap();
        assert_relative_eq!(off.analytic_log_determinant().unwrap(), 3f64.ln());
        assert_eq!(
            CircleFunction::shift_plus(c(2.0)).analytic_log_determinant(),
            None
        );
        assert_relative_eq!(
            CircleFunction::constant(Complex64::new(0.0, -4.0))
                .analytic_log_determinant()
                .unwrap(),
            4f64.ln()
        );
    }

    proptest! {
        #[test]
        fn rotation_shifts_the_argument(s in 0.0f64..1.0, t in 0.0f64..1.0) {
            let f = CircleFunction::laurent([
                (-2, Complex64::new(0.5, 0.1)),
                (0, c(1.0)),
                (3, Complex64::new(-0.7, 2.0)),
            ]);
            let g = CircleFunction::scaled(f.clone(), Angle::real(s));
            let lhs = g.eval_turns(t);
            let rhs = f.eval_turns(t + s);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn rotation_by_rational_is_exact_composition(n in 0i64..12, t in 0.0f64..1.0) {
            let f = CircleFunction::with_zeros_at(&[Angle::ZERO, Angle::rational(1, 5)]);
            let s = Angle::rational(n, 12);
            let g = CircleFunction::scaled(f.clone(), s);
            let lhs = g.eval_turns(t);
            let rhs = f.eval_turns(t + s.turns());
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }
}
