//! Birkhoff products `P_n(z) = ∏_{k<n} |f(αᵏz)|` along the rotation by
//! `α = e^{2πiθ}`.
//!
//! `(u f(v))ⁿ = uⁿ f(α^{n−1}v)⋯f(v)`, so `P_n^{1/n}` sampled over the circle
//! tracks the spectral radius of `u f(v)`. All products are accumulated in
//! log-space. Sup and inf are taken over a finite grid and therefore only
//! bound the essential sup and inf from one side; refine the grid to tighten.

use rayon::prelude::*;
use thiserror::Error;

use crate::circlefn::{CircleFunction, TAU_ZERO};
use crate::diophantine::RotationAngle;
use crate::numeric::{CompensatedSum, DoubleDouble, OrbitStepper};

/// Upper bound on `n · grid_size` accepted by the simulations.
pub const MAX_EVALUATIONS: u128 = 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ErgodicError {
    #[error("|f| < {TAU_ZERO} at grid point {grid_index}, step {step}")]
    ZeroOnGrid { grid_index: usize, step: usize },
}

/// Uniform sample angles `j/size + offset`, in turns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub size: usize,
    pub offset: f64,
}

impl GridSpec {
    /// Grid of `size` points offset by half a cell, which avoids zeros at
    /// rational angles with small denominators.
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "grid needs at least one point");
        GridSpec {
            size,
            offset: 0.5 / size as f64,
        }
    }

    pub fn with_offset(size: usize, offset: f64) -> Self {
        assert!(size >= 1, "grid needs at least one point");
        GridSpec { size, offset }
    }

    fn point(&self, j: usize) -> DoubleDouble {
        DoubleDouble::ratio(j as f64, self.size as f64)
            .add_f64(self.offset)
            .frac()
    }

    pub fn angle(&self, j: usize) -> f64 {
        self.point(j).to_f64()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffTrace {
    pub n: usize,
    pub grid: GridSpec,
    /// `ln P_n(z_j)`; `-∞` when some factor vanishes.
    pub log_values: Vec<f64>,
    pub sup_root: f64,
    pub inf_root: f64,
}

impl BirkhoffTrace {
    /// `P_n(z_j)`; may overflow to `∞` for large `n`.
    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|l| l.exp()).collect()
    }

    pub fn gap(&self) -> f64 {
        self.sup_root - self.inf_root
    }
}

/// Sorted samples with equal weights.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Self {
        assert!(!samples.is_empty(), "empty distribution");
        assert!(samples.iter().all(|s| s.is_finite()), "non-finite sample");
        samples.sort_by(f64::total_cmp);
        EmpiricalDistribution { samples }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fraction of samples in `[a, b]`.
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        let lo = self.samples.partition_point(|&s| s < a);
        let hi = self.samples.partition_point(|&s| s <= b);
        hi.saturating_sub(lo) as f64 / self.samples.len() as f64
    }

    pub fn mean(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &s in &self.samples {
            acc.add(s);
        }
        acc.value() / self.samples.len() as f64
    }

    /// Lower empirical quantile, `p ∈ [0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let idx = ((p.clamp(0.0, 1.0) * self.samples.len() as f64).ceil() as usize).max(1) - 1;
        self.samples[idx]
    }
}

fn check_budget(n: usize, grid: &GridSpec) {
    assert!(n >= 1, "n must be positive");
    assert!(
        n as u128 * grid.size as u128 <= MAX_EVALUATIONS,
        "n · grid_size exceeds {MAX_EVALUATIONS} evaluations"
    );
}

/// `ln P_n` at one start angle (turns). Stops early at a vanishing factor.
pub fn log_birkhoff_at(f: &CircleFunction, theta: &RotationAngle, start: f64, n: usize) -> f64 {
    log_product(f, theta.value_dd(), DoubleDouble::from_f64(start), n, None).0
}

/// Returns `(ln P_n, first step with |f| < τ_zero)`.
fn log_product(
    f: &CircleFunction,
    step: DoubleDouble,
    start: DoubleDouble,
    n: usize,
    zero_floor: Option<f64>,
) -> (f64, Option<usize>) {
    let mut orbit = OrbitStepper::new(start, step);
    let mut acc = CompensatedSum::default();
    let mut small = None;
    for k in 0..n {
        let l = f.log_abs_turns(orbit.current());
        if let Some(floor) = zero_floor {
            if small.is_none() && l < floor {
                small = Some(k);
            }
        }
        if l == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, small);
        }
        acc.add(l);
        orbit.advance();
    }
    (acc.value(), small)
}

fn trace_with(
    f: &CircleFunction,
    theta: &RotationAngle,
    n: usize,
    grid: GridSpec,
    zero_floor: Option<f64>,
) -> (BirkhoffTrace, Option<(usize, usize)>) {
    check_budget(n, &grid);
    let step = theta.value_dd();
    let results: Vec<(f64, Option<usize>)> = (0..grid.size)
        .into_par_iter()
        .map(|j| log_product(f, step, grid.point(j), n, zero_floor))
        .collect();
    let first_zero = results
        .iter()
        .enumerate()
        .find_map(|(j, (_, s))| s.map(|k| (j, k)));
    let log_values: Vec<f64> = results.into_iter().map(|(l, _)| l).collect();
    let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = log_values.iter().copied().fold(f64::INFINITY, f64::min);
    let trace = BirkhoffTrace {
        n,
        grid,
        sup_root: (max / n as f64).exp(),
        inf_root: (min / n as f64).exp(),
        log_values,
    };
    (trace, first_zero)
}

/// `P_n` over the grid, with `sup_root = max_j P_n(z_j)^{1/n}` and
/// `inf_root = min_j P_n(z_j)^{1/n}`.
pub fn birkhoff_product(
    f: &CircleFunction,
    theta: &RotationAngle,
    n: usize,
    grid: GridSpec,
) -> BirkhoffTrace {
    trace_with(f, theta, n, grid, None).0
}

/// `(n, sup_root)` for each `n` in an increasing schedule. For continuous
/// `f` the limit is the determinant `Δ(f(v))`, which equals the spectral
/// radius of `u f(v)`.
pub fn spectral_radius_estimate(
    f: &CircleFunction,
    theta: &RotationAngle,
    schedule: &[usize],
    grid: GridSpec,
) -> Vec<(usize, f64)> {
    assert!(
        schedule.windows(2).all(|w| w[0] < w[1]),
        "schedule must increase"
    );
    schedule
        .iter()
        .map(|&n| (n, birkhoff_product(f, theta, n, grid).sup_root))
        .collect()
}

/// `sup_root − inf_root`, refusing grids whose orbits hit a zero of `f`.
pub fn uniformity_gap(
    f: &CircleFunction,
    theta: &RotationAngle,
    n: usize,
    grid: GridSpec,
) -> Result<f64, ErgodicError> {
    let (trace, zero) = trace_with(f, theta, n, grid, Some(TAU_ZERO.ln()));
    if let Some((grid_index, step)) = zero {
        return Err(ErgodicError::ZeroOnGrid { grid_index, step });
    }
    Ok(trace.gap().max(0.0))
}

/// Empirical law of `P_n(z_j)^{2/n}` over the grid.
pub fn nu_n_distribution(
    f: &CircleFunction,
    theta: &RotationAngle,
    n: usize,
    grid: GridSpec,
) -> EmpiricalDistribution {
    let trace = birkhoff_product(f, theta, n, grid);
    EmpiricalDistribution::new(
        trace
            .log_values
            .iter()
            .map(|l| (2.0 * l / n as f64).exp())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlefn::Angle;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    const GOLDEN: RotationAngle = RotationAngle::GoldenConjugate;

    #[test]
    fn constant_products() {
        let f = CircleFunction::constant(Complex64::new(3.0, 0.0));
        let t = birkhoff_product(&f, &GOLDEN, 5, GridSpec::new(7));
        for v in t.values() {
            assert_relative_eq!(v, 243.0, max_relative = 1e-14);
        }
        assert_relative_eq!(t.sup_root, 3.0, max_relative = 1e-14);
        assert_relative_eq!(t.inf_root, 3.0, max_relative = 1e-14);
        assert_eq!(uniformity_gap(&f, &GOLDEN, 5, GridSpec::new(7)), Ok(0.0));
        let nu = nu_n_distribution(&f, &GOLDEN, 5, GridSpec::new(7));
        assert_eq!(nu.mass_in(8.999, 9.001), 1.0);
    }

    #[test]
    fn unimodular_identity() {
        let z = CircleFunction::laurent_real([(1, 1.0)]);
        let t = birkhoff_product(&z, &GOLDEN, 7, GridSpec::new(16));
        for v in t.values() {
            assert_relative_eq!(v, 1.0, max_relative = 1e-14);
        }
        assert_relative_eq!(t.sup_root, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_factor_forces_zero_product() {
        let f = CircleFunction::with_zeros_at(&[Angle::ZERO]);
        let t = birkhoff_product(&f, &GOLDEN, 10, GridSpec::with_offset(8, 0.0));
        assert_eq!(t.values()[0], 0.0);
        assert_eq!(t.inf_root, 0.0);
        assert!(t.sup_root >= t.inf_root);
        assert!(matches!(
            uniformity_gap(&f, &GOLDEN, 10, GridSpec::with_offset(8, 0.0)),
            Err(ErgodicError::ZeroOnGrid {
                grid_index: 0,
                step: 0
            })
        ));
    }

    #[test]
    fn essential_zero_radius_trends_down() {
        let f = CircleFunction::essential_zero(2.0).unwrap();
        let est = spectral_radius_estimate(&f, &GOLDEN, &[10, 100, 1000], GridSpec::new(64));
        assert!(est[2].1 < est[1].1 && est[1].1 < est[0].1, "{est:?}");
    }

    #[test]
    fn distribution_helpers() {
        let d = EmpiricalDistribution::new(vec![3.0, 1.0, 2.0, 4.0]);
        assert_eq!(d.samples(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d.mass_in(1.5, 3.0), 0.5);
        assert_eq!(d.mean(), 2.5);
        assert_eq!(d.quantile(0.5), 2.0);
        assert_eq!(d.quantile(1.0), 4.0);
    }

    #[test]
    fn nu_samples_are_powers_of_birkhoff_values() {
        let f = CircleFunction::shift_plus(Complex64::new(2.0, 0.0));
        let n = 20;
        let t = birkhoff_product(&f, &GOLDEN, n, GridSpec::new(32));
        let mut expected: Vec<f64> = t.values().iter().map(|v| v.powf(2.0 / n as f64)).collect();
        expected.sort_by(f64::total_cmp);
        let nu = nu_n_distribution(&f, &GOLDEN, n, GridSpec::new(32));
        for (a, b) in nu.samples().iter().zip(&expected) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cocycle_identity(start in 0.0f64..1.0, n in 1usize..200, m in 1usize..200,
                            c0 in 1.5f64..3.0, c1 in -1.0f64..1.0) {
            let f = CircleFunction::laurent_real([(0, c0), (1, c1)]);
            let whole = log_birkhoff_at(&f, &GOLDEN, start, n + m);
            let head = log_birkhoff_at(&f, &GOLDEN, start, n);
            let shifted = crate::numeric::wrap_unit(start + n as f64 * GOLDEN.value());
            let tail = log_birkhoff_at(&f, &GOLDEN, shifted, m);
            prop_assert!((whole - head - tail).abs() <= 1e-9 * whole.abs().max(1.0));
        }

        #[test]
        fn sup_dominates_inf(c0 in 0.0f64..2.0, c1 in -2.0f64..2.0, n in 1usize..50) {
            let f = CircleFunction::laurent_real([(0, c0), (1, c1), (-1, 0.5)]);
            let t = birkhoff_product(&f, &GOLDEN, n, GridSpec::new(17));
            prop_assert!(t.sup_root >= t.inf_root && t.inf_root >= 0.0);
        }

        #[test]
        fn commensurate_rotation_keeps_sup(shift in 0usize..64) {
            // rotating the grid by a whole number of cells permutes its points
            let f = CircleFunction::laurent_real([(0, 2.0), (1, 0.7), (2, -0.3)]);
            let base = birkhoff_product(&f, &GOLDEN, 50, GridSpec::new(64));
            let offset = 0.5 / 64.0 + shift as f64 / 64.0;
            let moved = birkhoff_product(&f, &GOLDEN, 50, GridSpec::with_offset(64, offset));
            prop_assert!((base.sup_root - moved.sup_root).abs() <= 1e-12 * base.sup_root);
        }
    }
}
