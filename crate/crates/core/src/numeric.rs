//! Small floating-point kernels shared by the quadrature and orbit code.
//!
//! `DoubleDouble` carries roughly 32 significant digits as an unevaluated sum
//! `hi + lo`; it is only used where a rotation number has to be stepped many
//! times without drifting.

use std::f64::consts::PI;

use num_complex::Complex64;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    /// `num / den` for integers that are exactly representable as `f64`.
    pub fn ratio(num: f64, den: f64) -> Self {
        let hi = num / den;
        // remainder of the leading quotient is exact under fma
        let rem = (-hi).mul_add(den, num);
        Self::new(hi, rem / den)
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        Self::new(s, e)
    }

    pub fn add_f64(self, x: f64) -> Self {
        self.add(Self::from_f64(x))
    }

    pub fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    /// Multiplication by an integer of magnitude below 2^53.
    pub fn mul_int(self, m: i64) -> Self {
        let m = m as f64;
        let p = self.hi * m;
        let err = self.hi.mul_add(m, -p);
        Self::new(p, err + self.lo * m)
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(self) -> Self {
        let fl = self.hi.floor();
        let mut r = Self::new(self.hi - fl, self.lo);
        if r.hi < 0.0 || (r.hi == 0.0 && r.lo < 0.0) {
            r = r.add_f64(1.0);
        }
        if r.hi >= 1.0 {
            r = r.add_f64(-1.0);
        }
        r
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Steps `t, t + θ, t + 2θ, …` modulo one with double-double compensation,
/// so million-step orbits stay accurate to well below 1e-12.
#[derive(Clone, Debug)]
pub struct OrbitStepper {
    state: DoubleDouble,
    step: DoubleDouble,
}

impl OrbitStepper {
    pub fn new(start: DoubleDouble, step: DoubleDouble) -> Self {
        OrbitStepper {
            state: start.frac(),
            step,
        }
    }

    pub fn current(&self) -> f64 {
        let t = self.state.to_f64();
        if t >= 1.0 {
            0.0
        } else {
            t
        }
    }

    pub fn advance(&mut self) {
        self.state = self.state.add(self.step).frac();
    }
}

/// Reduce turns into `[0, 1)`.
#[inline]
pub fn wrap_unit(t: f64) -> f64 {
    let r = t - t.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Reduce turns into `(-1/2, 1/2]`.
#[inline]
pub fn wrap_centered(t: f64) -> f64 {
    let r = wrap_unit(t);
    if r > 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// `e^{2πi t}`, reduced to the nearest quarter turn first so that quarter
/// points come out exact (`cis_turns(0.25) == i`).
pub fn cis_turns(t: f64) -> Complex64 {
    let four = 4.0 * t;
    let quarter = four.round();
    let r = (four - quarter) / 4.0;
    let (s, c) = (2.0 * PI * r).sin_cos();
    let base = Complex64::new(c, s);
    match (quarter as i64).rem_euclid(4) {
        0 => base,
        1 => Complex64::new(-base.im, base.re),
        2 => Complex64::new(-base.re, -base.im),
        _ => Complex64::new(base.im, -base.re),
    }
}

/// `ln|e^{2πi d} - 1| = ln|2 sin(π d)|`, accurate for tiny `d`.
#[inline]
pub fn log_chord(d: f64) -> f64 {
    let d = wrap_centered(d);
    (2.0 * (PI * d).sin()).abs().ln()
}

/// Pairwise (cascade) summation over a fixed index tree.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(cis_turns(0.25), Complex64::new(0.0, 1.0));
        assert_eq!(cis_turns(0.5), Complex64::new(-1.0, 0.0));
        assert_eq!(cis_turns(0.75), Complex64::new(0.0, -1.0));
        assert_eq!(cis_turns(1.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn double_double_ratio_recovers_remainder() {
        let third = DoubleDouble::ratio(1.0, 3.0);
        let back = third.mul_int(3);
        assert!((back.hi - 1.0).abs() < 1e-30 || (back.to_f64() - 1.0).abs() < 1e-30);
        assert!((back.hi - 1.0 + back.lo).abs() < 1e-30);
    }

    #[test]
    fn stepper_tracks_integer_multiples() {
        // θ = 1/3 exactly in double-double; after 3·10^5 steps we are back at 0
        let third = DoubleDouble::ratio(1.0, 3.0);
        let mut st = OrbitStepper::new(DoubleDouble::ZERO, third);
        for _ in 0..300_000 {
            st.advance();
        }
        let t = st.current();
        assert!(t < 1e-13 || 1.0 - t < 1e-13, "drifted to {t}");
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..1000).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }

    #[test]
    fn log_chord_small_argument() {
        let d = 1e-18;
        assert!((log_chord(d) - (2.0 * PI * d).ln()).abs() < 1e-12);
    }
}
