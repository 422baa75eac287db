//! Smallest singular values of `M − λI` for the weighted cyclic shift.
//!
//! `M − λI` is upper Hessenberg with a single off-band entry in the top-right
//! corner, so a Givens QR factorization costs `O(q)` and leaves `R` with at
//! most three nonzeros per row (columns `i`, `i+1`, `q−1`). Each application
//! of `(A*A)^{-1}` is then two triangular solves.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{FiniteModel, ModelError};

pub const SIGMA_TOLERANCE: f64 = 1e-10;
pub const SIGMA_MAX_ITERATIONS: usize = 500;
/// Largest accepted pseudospectrum resolution per axis.
pub const MAX_RESOLUTION: usize = 512;

/// Sparse row of `R`: `(column, value)`.
type Row = Vec<(usize, Complex64)>;

struct HessenbergQr {
    /// Rotation `r` acts on rows `(r−1, r)` as `[[c, s], [−s̄, c]]`.
    rotations: Vec<(f64, Complex64)>,
    rows: Vec<Row>,
}

fn add_entry(row: &mut Row, col: usize, v: Complex64) {
    match row.iter_mut().find(|(c, _)| *c == col) {
        Some(slot) => slot.1 += v,
        None => row.push((col, v)),
    }
}

fn entry(row: &Row, col: usize) -> Complex64 {
    row.iter()
        .find(|(c, _)| *c == col)
        .map(|(_, v)| *v)
        .unwrap_or_default()
}

fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    if y == Complex64::default() {
        return (1.0, Complex64::default());
    }
    if x == Complex64::default() {
        return (0.0, y.conj() / y.norm());
    }
    let ax = x.norm();
    let r = ax.hypot(y.norm());
    (ax / r, (x / ax) * y.conj() / r)
}

impl HessenbergQr {
    fn new(weights: &[Complex64], lambda: Complex64) -> Self {
        let q = weights.len();
        let mut cur: Row = Vec::with_capacity(3);
        add_entry(&mut cur, 0, -lambda);
        add_entry(&mut cur, q - 1, weights[q - 1]);
        let mut rows = Vec::with_capacity(q);
        let mut rotations = Vec::with_capacity(q.saturating_sub(1));
        for r in 1..q {
            let below: Row = vec![(r - 1, weights[r - 1]), (r, -lambda)];
            let (c, s) = givens(entry(&cur, r - 1), weights[r - 1]);
            let mut top: Row = Vec::with_capacity(3);
            let mut next: Row = Vec::with_capacity(3);
            for &(col, v) in &cur {
                add_entry(&mut top, col, c * v);
                if col != r - 1 {
                    add_entry(&mut next, col, -s.conj() * v);
                }
            }
            for &(col, v) in &below {
                add_entry(&mut top, col, s * v);
                if col != r - 1 {
                    add_entry(&mut next, col, c * v);
                }
            }
            rotations.push((c, s));
            rows.push(top);
            cur = next;
        }
        rows.push(cur);
        HessenbergQr { rotations, rows }
    }

    fn singular(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .any(|(i, row)| entry(row, i) == Complex64::default())
    }

    /// `A z = b`.
    fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut y = b.to_vec();
        for (k, &(c, s)) in self.rotations.iter().enumerate() {
            let (a, bb) = (y[k], y[k + 1]);
            y[k] = c * a + s * bb;
            y[k + 1] = -s.conj() * a + c * bb;
        }
        let q = y.len();
        let mut z = vec![Complex64::default(); q];
        for i in (0..q).rev() {
            let mut acc = y[i];
            let mut diag = Complex64::default();
            for &(col, v) in &self.rows[i] {
                if col == i {
                    diag = v;
                } else {
                    acc -= v * z[col];
                }
            }
            z[i] = acc / diag;
        }
        z
    }

    /// `A* w = b`.
    fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let q = b.len();
        let mut acc = vec![Complex64::default(); q];
        let mut t = vec![Complex64::default(); q];
        for i in 0..q {
            let diag = entry(&self.rows[i], i);
            t[i] = (b[i] - acc[i]) / diag.conj();
            for &(col, v) in &self.rows[i] {
                if col > i {
                    acc[col] += v.conj() * t[i];
                }
            }
        }
        for (k, &(c, s)) in self.rotations.iter().enumerate().rev() {
            let (a, bb) = (t[k], t[k + 1]);
            t[k] = c * a - s * bb;
            t[k + 1] = s.conj() * a + c * bb;
        }
        t
    }
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Deterministic start vector with no special alignment to Fourier modes.
fn start_vector(q: usize) -> Vec<Complex64> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let x: Vec<Complex64> = (0..q)
        .map(|k| {
            let k = k as f64;
            let phase = (k * k * golden + 0.1 * k).fract();
            Complex64::from_polar(
                1.0 + 0.5 * (k * std::f64::consts::SQRT_2).fract(),
                std::f64::consts::TAU * phase,
            )
        })
        .collect();
    let n = norm(&x);
    x.into_iter().map(|v| v / n).collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, by Sturm-count bisection.
fn tridiagonal_max_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let n = alpha.len();
    let radius = |i: usize| {
        let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { beta[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..n)
        .map(|i| alpha[i] - radius(i))
        .fold(f64::INFINITY, f64::min);
    let mut hi = (0..n)
        .map(|i| alpha[i] + radius(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let count_below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..n {
            let b2 = if i > 0 {
                beta[i - 1] * beta[i - 1]
            } else {
                0.0
            };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi.abs() {
            break;
        }
        if count_below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Smallest singular value of `M − λI`. At `λ = 0` this is `min |d_k|`.
///
/// Inverse iteration on `(A*A)^{-1}`, accelerated by building the Krylov
/// space of its iterates (Lanczos with full reorthogonalization). Converged
/// when the largest Rayleigh–Ritz value changes by at most
/// [`SIGMA_TOLERANCE`] relative between steps.
pub fn sigma_min(model: &FiniteModel, lambda: Complex64) -> Result<f64, ModelError> {
    if lambda == Complex64::default() {
        return Ok(model.min_weight());
    }
    let qr = HessenbergQr::new(&model.weights, lambda);
    if qr.singular() {
        return Ok(0.0);
    }
    let q = model.dim();
    let apply = |x: &[Complex64]| qr.solve(&qr.solve_adjoint(x));

    let mut basis: Vec<Vec<Complex64>> = vec![start_vector(q)];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut previous = f64::NAN;
    let mut best = f64::INFINITY;
    for step in 0..SIGMA_MAX_ITERATIONS.min(q) {
        let v = &basis[step];
        let mut w = apply(v);
        if w.iter().any(|x| !x.is_finite()) {
            return Ok(0.0);
        }
        alpha.push(dot(v, &w).re);
        for u in &basis {
            let proj = dot(u, &w);
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= proj * ui;
            }
        }
        let theta = tridiagonal_max_eigenvalue(&alpha, &beta);
        if !theta.is_finite() {
            return Ok(0.0);
        }
        let sigma = 1.0 / theta.sqrt();
        best = best.min(sigma);
        let b = norm(&w);
        let exhausted = step + 1 == q || b <= 1e-14 * theta;
        if exhausted || (theta - previous).abs() <= SIGMA_TOLERANCE * theta {
            return Ok(sigma);
        }
        previous = theta;
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
    Err(ModelError::NoConvergence { best })
}

/// Axis-aligned rectangle in the complex plane sampled at `nx × ny` points,
/// endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexRect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ComplexRect {
    pub fn square(half_width: f64, n: usize) -> Self {
        ComplexRect {
            re_min: -half_width,
            re_max: half_width,
            im_min: -half_width,
            im_max: half_width,
            nx: n,
            ny: n,
        }
    }

    fn coord(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    /// Point `(ix, iy)`; row-major index `iy · nx + ix`.
    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            Self::coord(self.re_min, self.re_max, self.nx, ix),
            Self::coord(self.im_min, self.im_max, self.ny, iy),
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudospectrumField {
    pub rect: ComplexRect,
    /// `σ_min` per point, row-major; best estimate on flagged points.
    pub sigma: Vec<f64>,
    /// Points where inverse iteration hit its iteration cap.
    pub flagged: Vec<bool>,
}

impl PseudospectrumField {
    pub fn points(&self) -> impl Iterator<Item = (Complex64, f64, bool)> + '_ {
        (0..self.rect.len()).map(move |i| {
            let z = self.rect.point(i % self.rect.nx, i / self.rect.nx);
            (z, self.sigma[i], self.flagged[i])
        })
    }

    /// Fraction of all grid points satisfying `pred(λ, σ_min)`.
    pub fn fraction_where(&self, pred: impl Fn(Complex64, f64) -> bool) -> f64 {
        let hits = self.points().filter(|(z, s, _)| pred(*z, *s)).count();
        hits as f64 / self.rect.len() as f64
    }

    /// Fraction of points in the `ε`-pseudospectrum, per `ε`.
    pub fn sublevel_fractions(&self, epsilons: &[f64]) -> Vec<(f64, f64)> {
        epsilons
            .iter()
            .map(|&e| (e, self.fraction_where(|_, s| s < e)))
            .collect()
    }
}

/// `σ_min(M − λI)` over a rectangular grid.
pub fn pseudospectrum_grid(model: &FiniteModel, rect: ComplexRect) -> PseudospectrumField {
    assert!(
        rect.nx >= 1 && rect.ny >= 1 && rect.nx <= MAX_RESOLUTION && rect.ny <= MAX_RESOLUTION,
        "resolution must be within 1..={MAX_RESOLUTION} per axis"
    );
    let results: Vec<(f64, bool)> = (0..rect.len())
        .into_par_iter()
        .map(
            |i| match sigma_min(model, rect.point(i % rect.nx, i / rect.nx)) {
                Ok(s) => (s, false),
                Err(ModelError::NoConvergence { best }) => (best, true),
                Err(ModelError::ZeroEigenvalue) => unreachable!("sigma_min never reports this"),
            },
        )
        .collect();
    let (sigma, flagged) = results.into_iter().unzip();
    PseudospectrumField {
        rect,
        sigma,
        flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixmodel::eigenpairs_closed_form;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Oracle: dense matrix, smallest eigenvalue of `A*A` by Jacobi.
    fn dense_sigma_min(model: &FiniteModel, lambda: Complex64) -> f64 {
        let q = model.dim();
        let m = model.matrix();
        let a: Vec<Vec<Complex64>> = (0..q)
            .map(|i| {
                (0..q)
                    .map(|j| m.get(i, j) - if i == j { lambda } else { c(0.0, 0.0) })
                    .collect()
            })
            .collect();
        // A*A is Hermitian; embed as a real symmetric 2q × 2q matrix
        let mut h = vec![vec![0.0; 2 * q]; 2 * q];
        for i in 0..q {
            for j in 0..q {
                let v: Complex64 = (0..q).map(|k| a[k][i].conj() * a[k][j]).sum();
                h[i][j] = v.re;
                h[i + q][j + q] = v.re;
                h[i][j + q] = -v.im;
                h[i + q][j] = v.im;
            }
        }
        let ev = crate::matrixmodel::harper::jacobi_eigenvalues(h);
        ev[0].max(0.0).sqrt()
    }

    #[test]
    fn zero_lambda_gives_min_weight() {
        let m = FiniteModel::from_weights(1, vec![c(2.0, 0.0), c(0.0, -0.3), c(1.0, 1.0)]);
        assert_eq!(sigma_min(&m, c(0.0, 0.0)), Ok(0.3));
    }

    #[test]
    fn shift_at_two() {
        for q in [1, 2, 5, 8] {
            let m = FiniteModel::from_weights(1, vec![c(1.0, 0.0); q]);
            let s = sigma_min(&m, c(2.0, 0.0)).unwrap();
            // brute force over the diagonalized values |ω^j − 2|
            let oracle = (0..q)
                .map(|j| (crate::numeric::cis_turns(j as f64 / q as f64) - 2.0).norm())
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(s, oracle, epsilon = 1e-9);
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn vanishes_at_eigenvalues() {
        let m = FiniteModel::from_weights(
            3,
            (0..13)
                .map(|k| c(1.0 + 0.1 * k as f64, 0.2 * k as f64 - 1.0))
                .collect(),
        );
        for pair in eigenpairs_closed_form(&m) {
            assert!(sigma_min(&m, pair.lambda).unwrap() <= 1e-8 * m.max_weight());
        }
    }

    #[test]
    fn far_points_obey_norm_bound() {
        let m =
            FiniteModel::from_weights(1, (0..9).map(|k| c(0.5 + 0.1 * k as f64, 0.3)).collect());
        let max = m.max_weight();
        for z in [c(5.0, 0.0), c(-3.0, 4.0), c(0.0, -6.0)] {
            assert!(sigma_min(&m, z).unwrap() >= z.norm() - max - 1e-12);
        }
    }

    #[test]
    fn matches_dense_oracle() {
        let m = FiniteModel::from_weights(
            2,
            vec![
                c(1.0, 0.5),
                c(0.2, 0.0),
                c(-1.5, 0.3),
                c(0.7, -0.7),
                c(2.0, 0.0),
                c(0.05, 0.1),
            ],
        );
        for z in [c(0.3, 0.2), c(-1.0, 0.4), c(1.5, -1.5), c(0.01, 0.0)] {
            let fast = sigma_min(&m, z).unwrap();
            assert_abs_diff_eq!(fast, dense_sigma_min(&m, z), epsilon = 1e-9);
        }
    }

    #[test]
    fn unit_shift_grid_through_origin() {
        let m = FiniteModel::from_weights(1, vec![c(1.0, 0.0); 6]);
        let field = pseudospectrum_grid(&m, ComplexRect::square(1.0, 3));
        assert_eq!(field.sigma[4], 1.0);
        assert_eq!(field.rect.point(1, 1), c(0.0, 0.0));
        assert_eq!(field.sublevel_fractions(&[1e-300])[0].1, 0.0);
    }

    proptest! {
        #[test]
        fn one_lipschitz(re1 in -2.0f64..2.0, im1 in -2.0f64..2.0,
                         re2 in -2.0f64..2.0, im2 in -2.0f64..2.0,
                         seed in proptest::collection::vec((0.1f64..2.0, -3.0f64..3.0), 2..40)) {
            let m = FiniteModel::from_weights(1, seed.into_iter().map(|(r, a)| Complex64::from_polar(r, a)).collect());
            let (a, b) = (c(re1, im1), c(re2, im2));
            if let (Ok(sa), Ok(sb)) = (sigma_min(&m, a), sigma_min(&m, b)) {
                prop_assert!((sa - sb).abs() <= (a - b).norm() + 1e-6);
            }
        }
    }
}
