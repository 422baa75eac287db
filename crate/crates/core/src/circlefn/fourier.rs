use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{CircleError, CircleFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourierMethod {
    /// Exact convolution `f · conj(f)` of the Laurent coefficients.
    Symbolic,
    /// Discrete transform of `|f|²` on `samples` uniform points.
    Sampled { samples: usize },
}

/// Fourier coefficients of `|f|²` for `|k| ≤ limit`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierData {
    pub coefficients: BTreeMap<i64, Complex64>,
    pub limit: i64,
    pub method: FourierMethod,
    /// Largest change of any coefficient between `N` and `2N` samples;
    /// zero on the symbolic path.
    pub aliasing_error: f64,
}

impl FourierData {
    pub fn get(&self, k: i64) -> Complex64 {
        self.coefficients.get(&k).copied().unwrap_or_default()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.coefficients
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Indices whose coefficient exceeds `rel_tol · max |c_k|`.
    pub fn support(&self, rel_tol: f64) -> Vec<i64> {
        let cutoff = rel_tol * self.max_magnitude();
        self.coefficients
            .iter()
            .filter(|(_, c)| c.norm() > cutoff)
            .map(|(k, _)| *k)
            .collect()
    }
}

/// Coefficients of `|f|²` up to `|k| ≤ limit`. Polynomial inputs are handled
/// symbolically; everything else is sampled.
pub fn fourier_abs_squared(f: &CircleFunction, limit: i64) -> Result<FourierData, CircleError> {
    let Some(coeffs) = f.laurent_coefficients() else {
        return Ok(fourier_abs_squared_sampled(f, limit));
    };
    let mut out: BTreeMap<i64, Complex64> = (-limit..=limit)
        .map(|k| (k, Complex64::default()))
        .collect();
    let mut needed = 0i64;
    for (ka, ca) in &coeffs {
        for (kb, cb) in &coeffs {
            let m = ka - kb;
            let v = ca * cb.conj();
            if v == Complex64::default() {
                continue;
            }
            needed = needed.max(m.abs());
            if let Some(slot) = out.get_mut(&m) {
                *slot += v;
            }
        }
    }
    if needed > limit {
        return Err(CircleError::DegreeOverflow { needed, limit });
    }
    Ok(FourierData {
        coefficients: out,
        limit,
        method: FourierMethod::Symbolic,
        aliasing_error: 0.0,
    })
}

fn sampled_coefficients(f: &CircleFunction, n: usize, limit: i64) -> BTreeMap<i64, Complex64> {
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(f.eval_turns(j as f64 / n as f64).norm_sqr(), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    (-limit..=limit)
        .map(|k| {
            let idx = k.rem_euclid(n as i64) as usize;
            (k, buf[idx] * scale)
        })
        .collect()
}

/// The sampled path, forced. Uses `N ≥ 4K` points and compares against `2N`.
pub fn fourier_abs_squared_sampled(f: &CircleFunction, limit: i64) -> FourierData {
    let limit = limit.max(0);
    let n = ((4 * limit.max(2)) as usize).next_power_of_two();
    let coarse = sampled_coefficients(f, n, limit);
    let fine = sampled_coefficients(f, 2 * n, limit);
    let aliasing_error = coarse
        .iter()
        .map(|(k, c)| (c - fine[k]).norm())
        .fold(0.0, f64::max);
    FourierData {
        coefficients: fine,
        limit,
        method: FourierMethod::Sampled { samples: 2 * n },
        aliasing_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nonzero(d: &FourierData) -> Vec<(i64, f64, f64)> {
        d.coefficients
            .iter()
            .filter(|(_, c)| c.norm() > 1e-12)
            .map(|(k, c)| (*k, c.re, c.im))
            .collect()
    }

    /// Oracle: brute-force sampling and a naive discrete transform.
    fn brute_force(f: &CircleFunction, k: i64, n: usize) -> Complex64 {
        let mut acc = Complex64::default();
        for j in 0..n {
            let t = j as f64 / n as f64;
            let w = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 * t);
            acc += f.eval_turns(t).norm_sqr() * w;
        }
        acc / n as f64
    }

    #[test]
    fn identity_has_flat_modulus() {
        let z = CircleFunction::laurent_real([(1, 1.0)]);
        let d = fourier_abs_squared(&z, 3).unwrap();
        assert_eq!(nonzero(&d), vec![(0, 1.0, 0.0)]);
    }

    #[test]
    fn frozen_examples_match_brute_force() {
        let one_plus_3z2 = CircleFunction::laurent_real([(0, 1.0), (2, 3.0)]);
        let d = fourier_abs_squared(&one_plus_3z2, 4).unwrap();
        assert_eq!(
            nonzero(&d),
            vec![(-2, 3.0, 0.0), (0, 10.0, 0.0), (2, 3.0, 0.0)]
        );
        for k in -4..=4 {
            assert!((d.get(k) - brute_force(&one_plus_3z2, k, 64)).norm() < 1e-12);
        }

        let two_plus_z = CircleFunction::laurent_real([(0, 2.0), (1, 1.0)]);
        let d = fourier_abs_squared(&two_plus_z, 2).unwrap();
        assert_eq!(
            nonzero(&d),
            vec![(-1, 2.0, 0.0), (0, 5.0, 0.0), (1, 2.0, 0.0)]
        );
        for k in -2..=2 {
            assert!((d.get(k) - brute_force(&two_plus_z, k, 64)).norm() < 1e-12);
        }
    }

    #[test]
    fn degree_overflow() {
        let f = CircleFunction::laurent_real([(0, 1.0), (5, 1.0)]);
        assert_eq!(
            fourier_abs_squared(&f, 4),
            Err(CircleError::DegreeOverflow {
                needed: 5,
                limit: 4
            })
        );
    }

    #[test]
    fn sampled_path_agrees_on_polynomials() {
        let f = CircleFunction::laurent([
            (-1, Complex64::new(0.3, 0.4)),
            (0, Complex64::new(1.0, 0.0)),
            (2, Complex64::new(0.0, -1.5)),
        ]);
        let exact = fourier_abs_squared(&f, 6).unwrap();
        let sampled = fourier_abs_squared_sampled(&f, 6);
        assert!(sampled.aliasing_error < 1e-12);
        for k in -6..=6 {
            assert!((exact.get(k) - sampled.get(k)).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn essential_zero_uses_sampling() {
        let f = CircleFunction::essential_zero(1.0).unwrap();
        let d = fourier_abs_squared(&f, 8).unwrap();
        assert!(matches!(d.method, FourierMethod::Sampled { .. }));
        // |f|² is even and real: coefficients are real and symmetric
        for k in 1..=8 {
            assert!((d.get(k) - d.get(-k)).norm() < 1e-12);
            assert!(d.get(k).im.abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn conjugate_symmetry(re in proptest::collection::vec(-2.0f64..2.0, 4),
                              im in proptest::collection::vec(-2.0f64..2.0, 4)) {
            let f = CircleFunction::laurent(
                (0..4).map(|k| (k as i64 - 1, Complex64::new(re[k], im[k]))),
            );
            let d = fourier_abs_squared(&f, 3).unwrap();
            for k in 0..=3 {
                prop_assert!((d.get(-k) - d.get(k).conj()).norm() < 1e-12);
            }
            // c_0 is the mean of |f|² over 4K uniform samples
            let n = 12;
            let mean = (0..n).map(|j| f.eval_turns(j as f64 / n as f64).norm_sqr()).sum::<f64>() / n as f64;
            prop_assert!((d.get(0).re - mean).abs() < 1e-9);
        }
    }
}
