//! Finite clock-and-shift models of `u f(v)` at a rational rotation `p/q`.
//!
//! With `S` the cyclic shift (`S e_k = e_{k+1 mod q}`) and `D = diag(d_k)`,
//! `d_k = f(e^{2πi(base + kp/q)})`, the model is the weighted cyclic shift
//! `M = S·D`. Its eigenvalues are the `q`-th roots of `∏ d_k`, so the
//! spectrum is available in closed form and checked against a direct
//! sparse matrix product.

mod harper;
mod sigma;

use num_complex::Complex64;
use thiserror::Error;

use crate::circlefn::{Angle, CircleFunction, TAU_ZERO};
use crate::diophantine::Convergent;
use crate::numeric::{cis_turns, pairwise_sum};

pub use harper::{
    butterfly, harper_eigenvalues, harper_eigenvalues_pq, harper_matrix, ButterflyPoint,
};
pub use sigma::{
    pseudospectrum_grid, sigma_min, ComplexRect, PseudospectrumField, MAX_RESOLUTION,
    SIGMA_MAX_ITERATIONS, SIGMA_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("eigenvalue is zero; the residual check does not apply")]
    ZeroEigenvalue,
    #[error("inverse iteration did not converge; best estimate {best}")]
    NoConvergence { best: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteModel {
    pub p: u64,
    pub q: u64,
    pub base_angle: Angle,
    pub weights: Vec<Complex64>,
    /// Some `|d_k| < τ_zero`.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub lambda: Complex64,
    pub vector: Vec<Complex64>,
}

/// Samples `f` on the rotated `q`-th roots of unity.
pub fn build_model(f: &CircleFunction, conv: &Convergent, base_angle: Angle) -> FiniteModel {
    assert!(conv.q >= 1, "q must be positive");
    let q = conv.q as i64;
    let p = (conv.p % conv.q) as i64;
    let weights = (0..q)
        .map(|k| {
            let step = Angle::rational(((k as i128 * p as i128) % q as i128) as i64, q);
            f.evaluate(&base_angle.add(&step))
        })
        .collect();
    FiniteModel::with_base(conv.p, conv.q, base_angle, weights)
}

impl FiniteModel {
    /// A model from explicit weights, at base angle 0.
    pub fn from_weights(p: u64, weights: Vec<Complex64>) -> Self {
        let q = weights.len() as u64;
        Self::with_base(p, q, Angle::ZERO, weights)
    }

    fn with_base(p: u64, q: u64, base_angle: Angle, weights: Vec<Complex64>) -> Self {
        assert_eq!(weights.len() as u64, q, "need q weights");
        assert!(q >= 1, "q must be positive");
        let degenerate = weights.iter().any(|d| d.norm() < TAU_ZERO);
        FiniteModel {
            p,
            q,
            base_angle,
            weights,
            degenerate,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn has_zero_weight(&self) -> bool {
        self.weights.iter().any(|d| *d == Complex64::default())
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().map(|d| d.norm()).fold(0.0, f64::max)
    }

    pub fn min_weight(&self) -> f64 {
        self.weights
            .iter()
            .map(|d| d.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `(ln |∏ d_k|, principal arg ∏ d_k)`, accumulated in log-polar form.
    pub fn log_polar_product(&self) -> (f64, f64) {
        let logs: Vec<f64> = self.weights.iter().map(|d| d.norm().ln()).collect();
        let args: Vec<f64> = self.weights.iter().map(|d| d.arg()).collect();
        let phase = pairwise_sum(&args);
        (pairwise_sum(&logs), principal_arg(phase))
    }

    /// `ρ = |∏ d_k|^{1/q}`, the common modulus of every eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        if self.has_zero_weight() {
            return 0.0;
        }
        (self.log_polar_product().0 / self.dim() as f64).exp()
    }

    /// `λ_j = ρ e^{i(φ + 2πj)/q}` for `j = 0..q`, exact at quarter turns.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let q = self.dim();
        if self.has_zero_weight() {
            return vec![Complex64::default(); q];
        }
        let (log_abs, phi) = self.log_polar_product();
        let rho = (log_abs / q as f64).exp();
        let phase_turns = phi / std::f64::consts::TAU;
        (0..q)
            .map(|j| rho * cis_turns((phase_turns + j as f64) / q as f64))
            .collect()
    }

    /// Explicit `M = S·D` as a sparse product of the shift and the weights.
    pub fn matrix(&self) -> SparseMatrix {
        let q = self.dim();
        SparseMatrix::cyclic_shift(q).mul(&SparseMatrix::diagonal(&self.weights))
    }
}

fn principal_arg(phase: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = phase.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r - tau
    } else {
        r
    }
}

/// Closed-form eigenpairs: `x_0 = 1`, `x_{k+1} = d_k x_k / λ`. With a zero
/// weight every eigenvalue is 0 and each pair carries the kernel vector
/// `e_m` at the first vanishing weight.
pub fn eigenpairs_closed_form(model: &FiniteModel) -> Vec<EigenPair> {
    let q = model.dim();
    if let Some(m) = model
        .weights
        .iter()
        .position(|d| *d == Complex64::default())
    {
        let mut e = vec![Complex64::default(); q];
        e[m] = Complex64::new(1.0, 0.0);
        return vec![
            EigenPair {
                lambda: Complex64::default(),
                vector: e,
            };
            q
        ];
    }
    model
        .eigenvalues()
        .into_iter()
        .map(|lambda| {
            let mut vector = Vec::with_capacity(q);
            let mut x = Complex64::new(1.0, 0.0);
            for d in &model.weights {
                vector.push(x);
                x = d * x / lambda;
            }
            EigenPair { lambda, vector }
        })
        .collect()
}

/// `‖M x − λ x‖₂ / ‖x‖₂` through the explicit sparse matrix.
pub fn eigen_residual(model: &FiniteModel, pair: &EigenPair) -> Result<f64, ModelError> {
    if pair.lambda == Complex64::default() {
        return Err(ModelError::ZeroEigenvalue);
    }
    Ok(residual_with(&model.matrix(), pair))
}

pub(crate) fn residual_with(m: &SparseMatrix, pair: &EigenPair) -> f64 {
    let mx = m.apply(&pair.vector);
    let num: f64 = mx
        .iter()
        .zip(&pair.vector)
        .map(|(a, x)| (a - pair.lambda * x).norm_sqr())
        .sum();
    let den: f64 = pair.vector.iter().map(|x| x.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Row-wise sparse complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseMatrix {
    pub fn cyclic_shift(q: usize) -> Self {
        let mut rows = vec![Vec::new(); q];
        for k in 0..q {
            rows[(k + 1) % q].push((k, Complex64::new(1.0, 0.0)));
        }
        SparseMatrix { rows }
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        SparseMatrix {
            rows: d.iter().enumerate().map(|(k, v)| vec![(k, *v)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut out: Vec<(usize, Complex64)> = Vec::new();
                for (j, a) in row {
                    for (k, b) in &other.rows[*j] {
                        match out.iter_mut().find(|(c, _)| c == k) {
                            Some(slot) => slot.1 += a * b,
                            None => out.push((*k, a * b)),
                        }
                    }
                }
                out
            })
            .collect();
        SparseMatrix { rows }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(j, a)| a * x[*j]).sum())
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i]
            .iter()
            .filter(|(c, _)| *c == j)
            .map(|(_, v)| *v)
            .sum()
    }
}
