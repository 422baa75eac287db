//! The Harper (almost Mathieu) matrix `H = (U + U*) + λ(V + V*)` at `p/q`,
//! diagonalized by cyclic Jacobi rotations.

use rayon::prelude::*;

use crate::diophantine::Convergent;

/// Off-diagonal Frobenius norm at which Jacobi stops.
const JACOBI_TOLERANCE: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;
pub const MAX_HARPER_DIM: u64 = 4096;

/// Dense `H` with `U` the cyclic shift and `V = diag(e^{2πikp/q})`.
pub fn harper_matrix(coupling: f64, p: u64, q: u64) -> Vec<Vec<f64>> {
    assert!(
        (1..=MAX_HARPER_DIM).contains(&q),
        "q must lie in 1..={MAX_HARPER_DIM}"
    );
    let q = q as usize;
    let mut h = vec![vec![0.0; q]; q];
    for k in 0..q {
        let next = (k + 1) % q;
        h[next][k] += 1.0;
        h[k][next] += 1.0;
        let t = ((k as u128 * p as u128) % q as u128) as f64 / q as f64;
        h[k][k] += 2.0 * coupling * (std::f64::consts::TAU * t).cos();
    }
    h
}

/// Ascending eigenvalues of the Harper matrix at `conv.p / conv.q`.
pub fn harper_eigenvalues(coupling: f64, conv: &Convergent) -> Vec<f64> {
    harper_eigenvalues_pq(coupling, conv.p, conv.q)
}

pub fn harper_eigenvalues_pq(coupling: f64, p: u64, q: u64) -> Vec<f64> {
    assert!(coupling >= 0.0, "coupling must be nonnegative");
    jacobi_eigenvalues(harper_matrix(coupling, p, q))
}

/// Ascending eigenvalues of a real symmetric matrix by cyclic Jacobi.
pub(crate) fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ButterflyPoint {
    pub p: u64,
    pub q: u64,
    pub coupling: f64,
    pub eigenvalue: f64,
}

/// Hofstadter butterfly: every eigenvalue for all `p/q` in lowest terms
/// with `1 ≤ q ≤ q_max`, `0 ≤ p < q`, ordered by `(q, p, eigenvalue)`.
pub fn butterfly(coupling: f64, q_max: u64) -> Vec<ButterflyPoint> {
    let fractions: Vec<(u64, u64)> = (1..=q_max)
        .flat_map(|q| {
            (0..q)
                .filter(move |&p| num_integer::gcd(p, q) == 1)
                .map(move |p| (p, q))
        })
        .collect();
    fractions
        .par_iter()
        .map(|&(p, q)| {
            harper_eigenvalues_pq(coupling, p, q)
                .into_iter()
                .map(|eigenvalue| ButterflyPoint {
                    p,
                    q,
                    coupling,
                    eigenvalue,
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn free_case_is_cosines() {
        for q in [1u64, 2, 3, 7, 12] {
            let ev = harper_eigenvalues_pq(0.0, 1, q);
            let mut expected: Vec<f64> = (0..q)
                .map(|j| 2.0 * (std::f64::consts::TAU * j as f64 / q as f64).cos())
                .collect();
            expected.sort_by(f64::total_cmp);
            for (a, b) in ev.iter().zip(&expected) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn half_flux_two_by_two() {
        // characteristic polynomial of [[2, 2], [2, −2]] is x² − 8
        let ev = harper_eigenvalues_pq(1.0, 1, 2);
        assert_abs_diff_eq!(ev[0], -8f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 8f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn butterfly_counts() {
        let pts = butterfly(1.0, 5);
        // Σ_{q≤5} φ(q)·q with φ(1) counting p = 0
        assert_eq!(pts.len(), 1 + 2 + 2 * 3 + 2 * 4 + 4 * 5);
    }

    proptest! {
        #[test]
        fn bounded_and_conjugation_invariant(coupling in 0.0f64..3.0, q in 2u64..24, p in 1u64..24) {
            let p = p % q;
            let ev = harper_eigenvalues_pq(coupling, p, q);
            prop_assert_eq!(ev.len() as u64, q);
            for e in &ev {
                prop_assert!(e.abs() <= 2.0 + 2.0 * coupling + 1e-9);
            }
            let mirrored = harper_eigenvalues_pq(coupling, q - p, q);
            for (a, b) in ev.iter().zip(&mirrored) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let trace: f64 = harper_matrix(coupling, p, q).iter().enumerate().map(|(i, r)| r[i]).sum();
            prop_assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-8);
        }
    }
}
