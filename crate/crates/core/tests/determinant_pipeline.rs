//! Determinants, Birkhoff products and finite models agree with each other
//! and with Jensen's formula computed independently here.

use num_complex::Complex64;
use proptest::prelude::*;
use rotlab_core::circlefn::{Angle, CircleFunction, Root};
use rotlab_core::diophantine::RotationAngle;
use rotlab_core::ergodic::{self, GridSpec};
use rotlab_core::fkdet::{self, RefinementSchedule};
use rotlab_core::matrixmodel::{self, FiniteModel};

/// `ln Δ` of `c ∏ (z − a_k)` by Jensen: `ln|c| + Σ ln max(1, |a_k|)`.
fn jensen(scalar: Complex64, roots: &[Complex64]) -> f64 {
    scalar.norm().ln() + roots.iter().map(|a| a.norm().max(1.0).ln()).sum::<f64>()
}

fn polynomial(scalar: Complex64, roots: &[Complex64]) -> CircleFunction {
    CircleFunction::factored(scalar, roots.iter().map(|a| (Root::Off(*a), 1)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadrature_matches_jensen(
        radii in prop::collection::vec(0.2f64..2.5, 1..4),
        phases in prop::collection::vec(0.0f64..1.0, 4),
        scale in 0.5f64..2.0,
    ) {
        let roots: Vec<Complex64> = radii
            .iter()
            .zip(&phases)
            .filter(|(r, _)| (**r - 1.0).abs() > 0.05)
            .map(|(r, t)| Complex64::from_polar(*r, std::f64::consts::TAU * t))
            .collect();
        let scalar = Complex64::new(scale, 0.0);
        let f = polynomial(scalar, &roots);
        let d = fkdet::fk_determinant_quadrature(&f, &RefinementSchedule::default()).unwrap();
        prop_assert!((d.log_delta - jensen(scalar, &roots)).abs() < 1e-7);
    }
}

#[test]
fn birkhoff_roots_approach_the_determinant() {
    let roots = [Complex64::new(0.0, 1.7), Complex64::new(-0.4, 0.1)];
    let f = polynomial(Complex64::new(1.0, 0.0), &roots);
    let delta = jensen(Complex64::new(1.0, 0.0), &roots).exp();
    let est = ergodic::spectral_radius_estimate(
        &f,
        &RotationAngle::SilverConjugate,
        &[10, 100, 2000],
        GridSpec::new(128),
    );
    let devs: Vec<f64> = est.iter().map(|(_, r)| (r - delta).abs()).collect();
    assert!(devs[2] < devs[0], "{devs:?}");
    assert!(devs[2] < 0.01, "{devs:?}");
}

#[test]
fn finite_model_radius_is_a_riemann_sum_of_the_determinant() {
    let f = CircleFunction::shift_plus(Complex64::new(0.0, 3.0));
    let golden = RotationAngle::GoldenConjugate;
    let conv = golden.convergents(16).unwrap()[15];
    let m = matrixmodel::build_model(&f, &conv, Angle::rational(1, 7));
    let direct = m.weights.iter().map(|d| d.norm().ln()).sum::<f64>() / m.q as f64;
    assert!((m.spectral_radius().ln() - direct).abs() < 1e-12);
    assert!((m.spectral_radius() - 3.0).abs() < 1e-9);
}

#[test]
fn dense_power_iteration_confirms_closed_form_radius() {
    let weights: Vec<Complex64> = (0..9)
        .map(|k| Complex64::from_polar(1.0 + 0.3 * (k as f64).sin(), 0.7 * k as f64))
        .collect();
    let m = FiniteModel::from_weights(2, weights);
    let a = m.matrix();
    // (S D)^q = (∏ d_k) I, so q-step growth of any vector is ρ^q.
    let mut x = vec![Complex64::new(0.0, 0.0); m.dim()];
    x[3] = Complex64::new(1.0, 0.0);
    for _ in 0..m.dim() {
        x = a.apply(&x);
    }
    let growth = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    assert!((growth.powf(1.0 / m.dim() as f64) - m.spectral_radius()).abs() < 1e-12);
}
