//! Rotation numbers and their continued-fraction convergents.
//!
//! Quadratic surds are expanded with the exact integer recurrence for
//! `(P + √D) / Q`, so every partial quotient is certified without floating
//! point. Decimal rotation numbers carry an uncertainty radius and only the
//! convergents shared by the whole uncertainty interval are released.

use std::fmt;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::circlefn::{Angle, Turns};
use crate::numeric::DoubleDouble;

/// Largest `|n|` accepted by [`orbit_angle`].
pub const MAX_ORBIT_STEPS: i64 = 1 << 31;

const MAX_DECIMAL_SCALE: u32 = 36;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiophantineError {
    #[error("precision exhausted after {certified} certified convergents")]
    PrecisionExhausted { certified: usize },
    #[error("invalid quadratic surd: {0}")]
    InvalidSurd(String),
    #[error("invalid decimal rotation number: {0}")]
    InvalidDecimal(String),
    #[error("convergent denominator overflows u64 at index {0}")]
    Overflow(usize),
}

/// `(a + b√c) / d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticSurd {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

/// A decimal rotation number `digits / 10^scale`, trusted to
/// `precision_digits` places: the true value lies within `10^-precision_digits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DecimalTheta {
    digits: i128,
    scale: u32,
    precision_digits: u32,
}

impl DecimalTheta {
    pub fn precision_digits(&self) -> u32 {
        self.precision_digits
    }

    fn value(&self) -> BigRational {
        BigRational::new(BigInt::from(self.digits), BigInt::from(10).pow(self.scale))
    }

    fn radius(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(10).pow(self.precision_digits))
    }
}

/// The irrational rotation number θ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RotationAngle {
    /// `(√5 − 1) / 2`
    GoldenConjugate,
    /// `√2 − 1`
    SilverConjugate,
    QuadraticSurd(QuadraticSurd),
    Decimal(DecimalTheta),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergent {
    pub p: u64,
    pub q: u64,
    /// Upper bound on `|θ − p/q|`.
    pub error_bound: f64,
}

impl Convergent {
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

impl RotationAngle {
    pub fn quadratic_surd(a: i64, b: i64, c: i64, d: i64) -> Result<Self, DiophantineError> {
        if b == 0 || d == 0 {
            return Err(DiophantineError::InvalidSurd(
                "b and d must be nonzero".into(),
            ));
        }
        if c <= 1 || c.sqrt() * c.sqrt() == c {
            return Err(DiophantineError::InvalidSurd(format!(
                "c = {c} must be a positive non-square"
            )));
        }
        let s = QuadraticSurd { a, b, c, d };
        let form = SurdForm::from_surd(&s);
        // 0 < (P + √D)/Q < 1  ⇔  0 < P + √D < Q for Q > 0 (flip for Q < 0)
        let (p, q) = (BigInt::from(form.p), BigInt::from(form.q));
        let d_ = BigInt::from(form.d);
        let lower = if form.q > 0 {
            sign_surd(&p, &BigInt::one(), &d_) > 0
        } else {
            sign_surd(&p, &BigInt::one(), &d_) < 0
        };
        let upper = if form.q > 0 {
            sign_surd(&(&q - &p), &BigInt::from(-1), &d_) > 0
        } else {
            sign_surd(&(&q - &p), &BigInt::from(-1), &d_) < 0
        };
        if !(lower && upper) {
            return Err(DiophantineError::InvalidSurd(format!(
                "({a} + {b}√{c})/{d} is not in (0, 1)"
            )));
        }
        Ok(RotationAngle::QuadraticSurd(s))
    }

    /// Parse a decimal string such as `"0.6180339887"`.
    pub fn decimal(text: &str, precision_digits: u32) -> Result<Self, DiophantineError> {
        let text = text.trim();
        let bad = || DiophantineError::InvalidDecimal(text.to_string());
        let frac = text
            .strip_prefix("0.")
            .or_else(|| text.strip_prefix('.'))
            .ok_or_else(bad)?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = frac.len() as u32;
        if scale > MAX_DECIMAL_SCALE || precision_digits > MAX_DECIMAL_SCALE {
            return Err(DiophantineError::InvalidDecimal(format!(
                "at most {MAX_DECIMAL_SCALE} digits are supported"
            )));
        }
        let digits: i128 = frac.parse().map_err(|_| bad())?;
        if digits == 0 {
            return Err(DiophantineError::InvalidDecimal(
                "value must lie in (0, 1)".into(),
            ));
        }
        Ok(RotationAngle::Decimal(DecimalTheta {
            digits,
            scale,
            precision_digits,
        }))
    }

    fn surd(&self) -> Option<QuadraticSurd> {
        match *self {
            RotationAngle::GoldenConjugate => Some(QuadraticSurd {
                a: -1,
                b: 1,
                c: 5,
                d: 2,
            }),
            RotationAngle::SilverConjugate => Some(QuadraticSurd {
                a: -1,
                b: 1,
                c: 2,
                d: 1,
            }),
            RotationAngle::QuadraticSurd(s) => Some(s),
            RotationAngle::Decimal(_) => None,
        }
    }

    /// θ to about 30 significant digits.
    pub(crate) fn value_dd(&self) -> DoubleDouble {
        match self.surd() {
            Some(s) => {
                // deepest convergent with q exactly representable: error < 1/q² ≈ 1e-31
                const LIMIT: u64 = 1 << 53;
                let mut best = (0u64, 1u64);
                for (p, q, _) in SurdConvergents::new(&s) {
                    if q >= LIMIT {
                        break;
                    }
                    best = (p, q);
                }
                DoubleDouble::ratio(best.0 as f64, best.1 as f64)
            }
            None => {
                let RotationAngle::Decimal(dec) = self else {
                    unreachable!()
                };
                let v = dec.value();
                let hi = v.to_f64().unwrap_or(0.0);
                let rest = v - BigRational::from_float(hi).unwrap_or_else(BigRational::zero);
                DoubleDouble::new(hi, rest.to_f64().unwrap_or(0.0))
            }
        }
    }

    pub fn value(&self) -> f64 {
        self.value_dd().to_f64()
    }

    /// The first `count` continued-fraction convergents of θ.
    pub fn convergents(&self, count: usize) -> Result<Vec<Convergent>, DiophantineError> {
        match self.surd() {
            Some(s) => {
                let mut out = Vec::with_capacity(count);
                let mut iter = SurdConvergents::new(&s);
                let mut current = iter.next().ok_or(DiophantineError::Overflow(0))?;
                while out.len() < count {
                    let next = iter
                        .next()
                        .ok_or(DiophantineError::Overflow(out.len() + 1))?;
                    let (p, q, _) = current;
                    let bound = 1.0 / (q as f64 * next.1 as f64);
                    out.push(Convergent {
                        p,
                        q,
                        error_bound: bound,
                    });
                    current = next;
                }
                Ok(out)
            }
            None => {
                let RotationAngle::Decimal(dec) = self else {
                    unreachable!()
                };
                decimal_convergents(dec, count)
            }
        }
    }

    /// Exact check of `|θ q − p| < 1/q` for surd rotation numbers.
    pub fn certifies(&self, p: u64, q: u64) -> Option<bool> {
        let s = self.surd()?;
        let form = SurdForm::from_surd(&s);
        let (p, q) = (BigInt::from(p), BigInt::from(q));
        let qq = BigInt::from(form.q);
        let x = &q * BigInt::from(form.p) - &p * &qq;
        let b = &q * &q;
        let a = &q * &x;
        let d = BigInt::from(form.d);
        // θq − p = (x + q√D)/Q; need |q x + q²√D| < |Q|
        let abs_q = qq.abs();
        let upper = sign_surd(&(&abs_q - &a), &(-&b), &d) > 0;
        let lower = sign_surd(&(&abs_q + &a), &b, &d) > 0;
        Some(upper && lower)
    }
}

impl fmt::Display for RotationAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RotationAngle::GoldenConjugate => write!(f, "golden"),
            RotationAngle::SilverConjugate => write!(f, "silver"),
            RotationAngle::QuadraticSurd(s) => {
                write!(f, "surd({},{},{},{})", s.a, s.b, s.c, s.d)
            }
            RotationAngle::Decimal(d) => {
                write!(
                    f,
                    "0.{:0width$}~{}",
                    d.digits,
                    d.precision_digits,
                    width = d.scale as usize
                )
            }
        }
    }
}

/// Sign of `a + b√d` for `d > 0` non-square.
fn sign_surd(a: &BigInt, b: &BigInt, d: &BigInt) -> i32 {
    let sa = a.signum();
    let sb = b.signum();
    if sb.is_zero() {
        return if sa.is_zero() {
            0
        } else if sa.is_positive() {
            1
        } else {
            -1
        };
    }
    if !sa.is_negative() && sb.is_positive() {
        return 1;
    }
    if !sa.is_positive() && sb.is_negative() {
        return -1;
    }
    // opposite signs: compare a² with b²d (never equal, √d irrational)
    let lhs = a * a;
    let rhs = b * b * d;
    let a_dominates = lhs > rhs;
    match (a_dominates, sa.is_positive()) {
        (true, true) | (false, false) => 1,
        _ => -1,
    }
}

/// `(P + √D) / Q` with `Q | D − P²`.
#[derive(Clone, Copy, Debug)]
struct SurdForm {
    p: i128,
    q: i128,
    d: i128,
}

impl SurdForm {
    fn from_surd(s: &QuadraticSurd) -> Self {
        let d = (s.b as i128) * (s.b as i128) * (s.c as i128);
        let (mut p, mut q) = if s.b > 0 {
            (s.a as i128, s.d as i128)
        } else {
            (-(s.a as i128), -(s.d as i128))
        };
        let mut d = d;
        if (d - p * p) % q != 0 {
            let aq = q.abs();
            p *= aq;
            d *= q * q;
            q *= aq;
        }
        SurdForm { p, q, d }
    }
}

/// Iterator over `(p_k, q_k, a_k)` for a quadratic surd, ending on overflow.
struct SurdConvergents {
    form: SurdForm,
    root: i128,
    prev: (u64, u64),
    prev2: (u64, u64),
    done: bool,
}

impl SurdConvergents {
    fn new(s: &QuadraticSurd) -> Self {
        let form = SurdForm::from_surd(s);
        SurdConvergents {
            form,
            root: form.d.sqrt(),
            prev: (1, 0),
            prev2: (0, 1),
            done: false,
        }
    }
}

impl Iterator for SurdConvergents {
    type Item = (u64, u64, u64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let SurdForm { p, q, d } = self.form;
        let a = if q > 0 {
            Integer::div_floor(&(p + self.root), &q)
        } else {
            -Integer::div_floor(&(p + self.root), &-q) - 1
        };
        let p_next = a * q - p;
        let q_next = (d - p_next * p_next) / q;
        self.form = SurdForm {
            p: p_next,
            q: q_next,
            d,
        };
        let a = u64::try_from(a).ok()?;
        let step = |prev: u64, prev2: u64| a.checked_mul(prev)?.checked_add(prev2);
        let (Some(pk), Some(qk)) = (
            step(self.prev.0, self.prev2.0),
            step(self.prev.1, self.prev2.1),
        ) else {
            self.done = true;
            return None;
        };
        self.prev2 = self.prev;
        self.prev = (pk, qk);
        Some((pk, qk, a))
    }
}

/// All convergents of a rational, in order.
fn rational_convergents(r: &BigRational) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::new();
    let (mut num, mut den) = (r.numer().clone(), r.denom().clone());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
    while !den.is_zero() {
        let (a, rem) = num.div_mod_floor(&den);
        let p = &a * &p1 + &p2;
        let q = &a * &q1 + &q2;
        out.push((p.clone(), q.clone()));
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
        num = std::mem::replace(&mut den, rem);
    }
    out
}

fn decimal_convergents(
    dec: &DecimalTheta,
    count: usize,
) -> Result<Vec<Convergent>, DiophantineError> {
    let mid = dec.value();
    let radius = dec.radius();
    let lo = rational_convergents(&(&mid - &radius));
    let hi = rational_convergents(&(&mid + &radius));
    let mut out = Vec::new();
    for (p, q) in rational_convergents(&mid) {
        if out.len() == count {
            break;
        }
        let shared = lo.contains(&(p.clone(), q.clone())) && hi.contains(&(p.clone(), q.clone()));
        if !shared {
            break;
        }
        let idx = out.len();
        let pu = p.to_u64().ok_or(DiophantineError::Overflow(idx))?;
        let qu = q.to_u64().ok_or(DiophantineError::Overflow(idx))?;
        let approx = BigRational::new(p, q);
        let gap = (&mid - approx).abs() + &radius;
        let bound = gap
            .to_f64()
            .unwrap_or(f64::INFINITY)
            .min(1.0 / (qu as f64 * qu as f64));
        out.push(Convergent {
            p: pu,
            q: qu,
            error_bound: bound,
        });
    }
    if out.len() < count {
        return Err(DiophantineError::PrecisionExhausted {
            certified: out.len(),
        });
    }
    Ok(out)
}

/// `t + nθ (mod 1)`, staying exact on exact angles.
///
/// A `ShiftedRational` angle built on a different rotation number cannot be
/// combined exactly and falls back to a `Real` angle.
pub fn orbit_angle(theta: &RotationAngle, n: i64, t: &Angle) -> Angle {
    assert!(
        n.abs() <= MAX_ORBIT_STEPS,
        "orbit step {n} exceeds the supported range"
    );
    match *t {
        Angle::RationalTurns(r) => Angle::shifted(r, n, *theta),
        Angle::ShiftedRational {
            base,
            multiple,
            theta: own,
        } if own == *theta => Angle::shifted(base, multiple + n, own),
        _ => {
            let v = t.to_dd().add(theta.value_dd().mul_int(n)).frac();
            Angle::real(v.to_f64())
        }
    }
}

/// Convenience: `orbit_angle` at rational turns.
pub fn orbit_of_rational(theta: &RotationAngle, n: i64, t: Turns) -> Angle {
    orbit_angle(theta, n, &Angle::RationalTurns(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pq(c: &[Convergent]) -> Vec<(u64, u64)> {
        c.iter().map(|c| (c.p, c.q)).collect()
    }

    #[test]
    fn golden_gives_fibonacci_ratios() {
        let c = RotationAngle::GoldenConjugate.convergents(6).unwrap();
        assert_eq!(pq(&c), vec![(0, 1), (1, 1), (1, 2), (2, 3), (3, 5), (5, 8)]);
    }

    #[test]
    fn silver_gives_pell_ratios() {
        let c = RotationAngle::SilverConjugate.convergents(5).unwrap();
        assert_eq!(pq(&c), vec![(0, 1), (1, 2), (2, 5), (5, 12), (12, 29)]);
    }

    #[test]
    fn half_exhausts_after_one_half() {
        let half = RotationAngle::decimal("0.50000000000000000000", 20).unwrap();
        assert_eq!(
            half.convergents(3),
            Err(DiophantineError::PrecisionExhausted { certified: 2 })
        );
        let two = half.convergents(2).unwrap();
        assert_eq!(pq(&two), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn decimal_golden_matches_surd_prefix() {
        let dec = RotationAngle::decimal("0.618033988749894848204586834365638117", 36).unwrap();
        let from_dec = dec.convergents(20).unwrap();
        let exact = RotationAngle::GoldenConjugate.convergents(20).unwrap();
        assert_eq!(pq(&from_dec), pq(&exact));
        // far fewer digits -> far fewer convergents
        let short = RotationAngle::decimal("0.618034", 6).unwrap();
        assert!(matches!(
            short.convergents(20),
            Err(DiophantineError::PrecisionExhausted { certified }) if (10..20).contains(&certified)
        ));
    }

    #[test]
    fn surd_values() {
        assert!((RotationAngle::GoldenConjugate.value() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-16);
        assert!((RotationAngle::SilverConjugate.value() - (2f64.sqrt() - 1.0)).abs() < 3e-16);
        let s = RotationAngle::quadratic_surd(0, 1, 3, 2).unwrap();
        assert!((s.value() - 3f64.sqrt() / 2.0).abs() < 1e-16);
    }

    #[test]
    fn surd_validation() {
        assert!(RotationAngle::quadratic_surd(0, 1, 4, 3).is_err());
        assert!(RotationAngle::quadratic_surd(0, 1, 5, 1).is_err());
        assert!(RotationAngle::quadratic_surd(3, -1, 5, 1).is_ok()); // 3 − √5 ≈ 0.76
        assert!(RotationAngle::quadratic_surd(1, 1, 2, 0).is_err());
    }

    #[test]
    fn general_surd_convergents_are_certified() {
        let s = RotationAngle::quadratic_surd(3, -1, 5, 1).unwrap();
        let theta = s.value();
        for c in s.convergents(25).unwrap() {
            assert!(s.certifies(c.p, c.q).unwrap(), "{c:?}");
            assert!((theta - c.value()).abs() <= c.error_bound * (1.0 + 1e-9) + 1e-16);
        }
    }

    #[test]
    fn certification_rejects_non_convergents() {
        // 3/4 is not within 1/q² of the golden conjugate
        assert_eq!(RotationAngle::GoldenConjugate.certifies(3, 4), Some(false));
        assert_eq!(RotationAngle::GoldenConjugate.certifies(55, 89), Some(true));
    }

    #[test]
    fn orbit_angle_examples() {
        let g = RotationAngle::GoldenConjugate;
        let t = Angle::rational(1, 10);
        assert_eq!(orbit_angle(&g, 0, &t), t);
        assert_eq!(
            orbit_angle(&g, 2, &t),
            Angle::ShiftedRational {
                base: Turns::new(1, 10),
                multiple: 2,
                theta: g
            }
        );
        let alpha = Angle::shifted(Turns::ZERO, 1, g);
        assert_eq!(orbit_angle(&g, -1, &alpha), Angle::ZERO);
        let r = orbit_angle(&g, 3, &Angle::real(0.25));
        assert!(matches!(r, Angle::Real(_)));
        assert!((r.turns() - (0.25 + 3.0 * g.value()).fract()).abs() < 1e-14);
    }
}
