use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;

use crate::diophantine::RotationAngle;
use crate::numeric::{wrap_unit, DoubleDouble};

/// An exact rational number of turns, kept reduced into `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Turns(Ratio<i64>);

impl Turns {
    pub const ZERO: Turns = Turns(Ratio::new_raw(0, 1));

    /// Panics when `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator in rational turns");
        Self::from_ratio(Ratio::new(num, den))
    }

    fn from_ratio(r: Ratio<i64>) -> Self {
        let num = r.numer().mod_floor(r.denom());
        Turns(Ratio::new(num, *r.denom()))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.numer() == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub(crate) fn to_dd(&self) -> DoubleDouble {
        DoubleDouble::ratio(self.numer() as f64, self.denom() as f64)
    }

    pub fn add(&self, other: &Turns) -> Turns {
        Self::from_ratio(self.0 + other.0)
    }

    pub fn sub(&self, other: &Turns) -> Turns {
        Self::from_ratio(self.0 - other.0)
    }

    pub fn neg(&self) -> Turns {
        Self::from_ratio(-self.0)
    }

    /// `k · self` reduced mod 1 without intermediate overflow.
    pub fn scale(&self, k: i64) -> Turns {
        let den = self.denom() as i128;
        let num = (self.numer() as i128 * k as i128).rem_euclid(den);
        Turns::new(num as i64, den as i64)
    }
}

impl fmt::Display for Turns {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Turns {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: i64 = n.parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let d: i64 = d.parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        if d <= 0 {
            return Err(format!("denominator must be positive in `{s}`"));
        }
        Ok(Turns::new(n, d))
    }
}

/// A point of the circle, measured in turns (`z = e^{2πi t}`).
///
/// The two exact variants make orbit questions under an irrational rotation
/// decidable: `r + mθ` and `r' + m'θ` coincide iff `r = r'` and `m = m'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    RationalTurns(Turns),
    /// `base + multiple · θ (mod 1)`; never constructed with `multiple == 0`.
    ShiftedRational {
        base: Turns,
        multiple: i64,
        theta: RotationAngle,
    },
    /// Floating turns in `[0, 1)`. Never used for exact orbit decisions.
    Real(f64),
}

impl Angle {
    pub const ZERO: Angle = Angle::RationalTurns(Turns::ZERO);

    pub fn rational(num: i64, den: i64) -> Angle {
        Angle::RationalTurns(Turns::new(num, den))
    }

    /// `base + multiple·θ`; collapses to `RationalTurns` when `multiple == 0`.
    pub fn shifted(base: Turns, multiple: i64, theta: RotationAngle) -> Angle {
        if multiple == 0 {
            Angle::RationalTurns(base)
        } else {
            Angle::ShiftedRational {
                base,
                multiple,
                theta,
            }
        }
    }

    pub fn real(t: f64) -> Angle {
        Angle::Real(wrap_unit(t))
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Angle::Real(_))
    }

    pub(crate) fn to_dd(&self) -> DoubleDouble {
        match self {
            Angle::RationalTurns(r) => r.to_dd(),
            Angle::ShiftedRational {
                base,
                multiple,
                theta,
            } => base.to_dd().add(theta.value_dd().mul_int(*multiple)).frac(),
            Angle::Real(t) => DoubleDouble::from_f64(*t),
        }
    }

    /// Numerical value in `[0, 1)`.
    pub fn turns(&self) -> f64 {
        wrap_unit(self.to_dd().to_f64())
    }

    /// True when the two angles are the same point of the circle, decided
    /// exactly when both are exact and share a rotation number.
    pub fn same_point(&self, other: &Angle) -> bool {
        match (self.exact_parts(), other.exact_parts()) {
            (Some((r1, m1, t1)), Some((r2, m2, t2))) if m1 == 0 || m2 == 0 || t1 == t2 => {
                r1 == r2 && m1 == m2
            }
            _ => {
                let d = crate::numeric::wrap_centered(self.turns() - other.turns());
                d.abs() < 1e-12
            }
        }
    }

    /// `(r, m, θ)` for exact angles; `θ` is `None` for pure rationals.
    pub(crate) fn exact_parts(&self) -> Option<(Turns, i64, Option<RotationAngle>)> {
        match *self {
            Angle::RationalTurns(r) => Some((r, 0, None)),
            Angle::ShiftedRational {
                base,
                multiple,
                theta,
            } => Some((base, multiple, Some(theta))),
            Angle::Real(_) => None,
        }
    }

    pub fn add(&self, other: &Angle) -> Angle {
        match (self.exact_parts(), other.exact_parts()) {
            (Some((r1, m1, t1)), Some((r2, m2, t2))) => match (t1, t2) {
                (Some(a), Some(b)) if a != b => Angle::real(self.turns() + other.turns()),
                _ => {
                    let theta = t1.or(t2);
                    match theta {
                        Some(theta) => Angle::shifted(r1.add(&r2), m1 + m2, theta),
                        None => Angle::RationalTurns(r1.add(&r2)),
                    }
                }
            },
            _ => Angle::real(self.to_dd().add(other.to_dd()).frac().to_f64()),
        }
    }

    pub fn neg(&self) -> Angle {
        match *self {
            Angle::RationalTurns(r) => Angle::RationalTurns(r.neg()),
            Angle::ShiftedRational {
                base,
                multiple,
                theta,
            } => Angle::shifted(base.neg(), -multiple, theta),
            Angle::Real(t) => Angle::real(-t),
        }
    }

    pub fn sub(&self, other: &Angle) -> Angle {
        self.add(&other.neg())
    }

    /// Total order by numerical position, used only for stable output.
    pub(crate) fn position_cmp(&self, other: &Angle) -> Ordering {
        self.turns().total_cmp(&other.turns())
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::RationalTurns(r) => write!(f, "{r}"),
            Angle::ShiftedRational { base, multiple, .. } => {
                write!(f, "{base}{multiple:+}θ")
            }
            Angle::Real(t) => write!(f, "{t}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turns_reduce_into_unit_interval() {
        assert_eq!(Turns::new(5, 4), Turns::new(1, 4));
        assert_eq!(Turns::new(-1, 4), Turns::new(3, 4));
        assert_eq!(Turns::new(2, 4).denom(), 2);
        assert_eq!("3/2".parse::<Turns>().unwrap(), Turns::new(1, 2));
        assert!("1/0".parse::<Turns>().is_err());
    }

    #[test]
    fn scale_does_not_overflow() {
        let t = Turns::new(1, 1_000_003);
        assert_eq!(t.scale(1_000_003), Turns::ZERO);
        assert_eq!(t.scale(i64::MAX).denom(), 1_000_003);
    }

    #[test]
    fn shifted_with_zero_multiple_is_rational() {
        let a = Angle::shifted(Turns::new(1, 3), 0, RotationAngle::GoldenConjugate);
        assert_eq!(a, Angle::rational(1, 3));
    }

    #[test]
    fn exact_arithmetic_cancels() {
        let g = RotationAngle::GoldenConjugate;
        let a = Angle::shifted(Turns::new(1, 10), 2, g);
        let b = Angle::shifted(Turns::new(1, 10), 2, g);
        assert_eq!(a.sub(&b), Angle::ZERO);
        assert!(a.same_point(&b));
        assert!(!a.same_point(&Angle::rational(1, 10)));
    }

    #[test]
    fn numeric_value_of_shifted_angle() {
        let g = RotationAngle::GoldenConjugate;
        let a = Angle::shifted(Turns::ZERO, 1, g);
        assert!((a.turns() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }
}
