//! Fuglede–Kadison determinants of `f(v)`: the geometric mean
//! `Δ(f(v)) = exp ∫₀¹ ln|f(e^{2πix})| dx`.
//!
//! Polynomials given by their roots go through Jensen's formula. Everything
//! else is integrated with a composite midpoint rule on dyadically refined
//! grids. Cells touching a known zero are graded geometrically toward it, so
//! integrable logarithmic singularities converge and non-integrable ones
//! (the essential zero) are driven visibly toward `-∞`.

use rayon::prelude::*;
use thiserror::Error;

use crate::circlefn::{zero_set, Angle, CircleFunction};
use crate::numeric::pairwise_sum;

/// Target for the extrapolated error estimate on the quadrature path.
pub const EPS_QUAD: f64 = 1e-8;
/// A partial integral below this, falling steadily, certifies `Δ = 0`.
pub const DIVERGENCE_CUTOFF: f64 = -60.0;
/// Minimum per-level drop of the partial integral for divergence.
pub const DIVERGENCE_STEP: f64 = 1.0;
/// Consecutive qualifying drops needed for divergence.
const DIVERGENCE_RUN: usize = 3;
/// Nodes closer than this to an inexactly located zero are shifted.
const NEAR_ZERO: f64 = 1e-14;
/// Grading toward inexactly located zeros stops at this cell width.
const MIN_SAMPLED_WIDTH: f64 = 1e-13;
const MAX_LEVEL: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FkdetError {
    #[error(
        "quadrature inconclusive after level {level}: integral {integral}, error estimate {error_estimate}"
    )]
    Inconclusive {
        level: u32,
        integral: f64,
        error_estimate: f64,
    },
    #[error("invalid refinement schedule: {0}")]
    BadSchedule(String),
}

/// Increasing dyadic levels; level `L` uses `2^L` base cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementSchedule {
    levels: Vec<u32>,
}

impl RefinementSchedule {
    pub fn new(levels: Vec<u32>) -> Result<Self, FkdetError> {
        if levels.is_empty() {
            return Err(FkdetError::BadSchedule("schedule is empty".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FkdetError::BadSchedule("levels must increase".into()));
        }
        if levels[0] < 2 {
            return Err(FkdetError::BadSchedule("levels start at 2".into()));
        }
        if levels[levels.len() - 1] > MAX_LEVEL {
            return Err(FkdetError::BadSchedule(format!("levels above {MAX_LEVEL}")));
        }
        Ok(RefinementSchedule { levels })
    }

    /// Levels `2..=depth`.
    pub fn up_to(depth: u32) -> Result<Self, FkdetError> {
        Self::new((2..=depth).collect())
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }
}

impl Default for RefinementSchedule {
    fn default() -> Self {
        RefinementSchedule {
            levels: (2..=20).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelRecord {
    pub level: u32,
    /// Raw midpoint sum at this level.
    pub integral: f64,
    /// Richardson-extrapolated value.
    pub extrapolated: f64,
    pub error_estimate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterminantResult {
    /// `ln Δ`, or `-∞`.
    pub log_delta: f64,
    pub delta: f64,
    pub method: Method,
    pub error_estimate: f64,
    /// Per-level quadrature history (empty on the analytic path).
    pub trace: Vec<LevelRecord>,
}

impl DeterminantResult {
    fn analytic(log_delta: f64) -> Self {
        DeterminantResult {
            log_delta,
            delta: log_delta.exp(),
            method: Method::Analytic,
            error_estimate: 0.0,
            trace: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_delta == f64::NEG_INFINITY
    }
}

/// `Δ(f(v))`, analytically when `f` is assembled from factored polynomials,
/// by quadrature otherwise.
pub fn fk_determinant(
    f: &CircleFunction,
    schedule: &RefinementSchedule,
) -> Result<DeterminantResult, FkdetError> {
    match f.analytic_log_determinant() {
        Some(log_delta) => Ok(DeterminantResult::analytic(log_delta)),
        None => fk_determinant_quadrature(f, schedule),
    }
}

/// The quadrature path, also for inputs that have a closed form.
pub fn fk_determinant_quadrature(
    f: &CircleFunction,
    schedule: &RefinementSchedule,
) -> Result<DeterminantResult, FkdetError> {
    let zeros = zero_set(f);
    let singular: Vec<Singular> = zeros
        .points
        .iter()
        .map(|p| Singular {
            angle: p.angle,
            turns: p.angle.turns(),
            exact: p.angle.is_exact(),
        })
        .collect();

    let mut trace: Vec<LevelRecord> = Vec::with_capacity(schedule.levels.len());
    for &level in &schedule.levels {
        let integral = log_integral(f, level, &singular);
        let (extrapolated, error_estimate) = match trace.last() {
            None => (integral, f64::INFINITY),
            Some(prev) => {
                let ratio = 2f64.powi((level - prev.level) as i32);
                let r = (ratio * integral - prev.integral) / (ratio - 1.0);
                let err = if trace.len() >= 2 {
                    (r - prev.extrapolated).abs()
                } else {
                    (integral - prev.integral).abs()
                };
                (r, err)
            }
        };
        trace.push(LevelRecord {
            level,
            integral,
            extrapolated,
            error_estimate,
        });

        if diverges(&trace) {
            return Ok(DeterminantResult {
                log_delta: f64::NEG_INFINITY,
                delta: 0.0,
                method: Method::Quadrature,
                error_estimate: 0.0,
                trace,
            });
        }
        if trace.len() >= 3 && level >= 4 && error_estimate <= EPS_QUAD && extrapolated.is_finite()
        {
            return Ok(DeterminantResult {
                log_delta: extrapolated,
                delta: extrapolated.exp(),
                method: Method::Quadrature,
                error_estimate,
                trace,
            });
        }
    }
    let last = trace.last().expect("schedule is nonempty");
    Err(FkdetError::Inconclusive {
        level: last.level,
        integral: last.extrapolated,
        error_estimate: last.error_estimate,
    })
}

fn diverges(trace: &[LevelRecord]) -> bool {
    if trace.len() <= DIVERGENCE_RUN {
        return false;
    }
    let last = trace[trace.len() - 1].integral;
    if last == f64::NEG_INFINITY {
        return true;
    }
    last < DIVERGENCE_CUTOFF
        && trace[trace.len() - DIVERGENCE_RUN - 1..]
            .windows(2)
            .all(|w| w[0].integral - w[1].integral >= DIVERGENCE_STEP)
}

#[derive(Clone, Copy, Debug)]
struct Singular {
    angle: Angle,
    turns: f64,
    exact: bool,
}

/// A quadrature node: anchor angle plus signed offset in turns.
struct Node<'a> {
    anchor: &'a Angle,
    offset: f64,
}

struct LevelContext<'a> {
    f: &'a CircleFunction,
    singular: &'a [Singular],
    grade_depth: u32,
}

impl LevelContext<'_> {
    fn log_at(&self, node: Node<'_>, width: f64) -> f64 {
        let t = node.anchor.turns() + node.offset;
        let near_inexact = self
            .singular
            .iter()
            .any(|s| !s.exact && crate::numeric::wrap_centered(t - s.turns).abs() < NEAR_ZERO);
        let v = if near_inexact {
            f64::NEG_INFINITY
        } else {
            self.f.log_abs_at(node.anchor, node.offset)
        };
        if v > f64::NEG_INFINITY {
            return v;
        }
        // shift off the zero: average of the quarter points of the cell
        let q1 = self.f.log_abs_at(node.anchor, node.offset - 0.25 * width);
        let q2 = self.f.log_abs_at(node.anchor, node.offset + 0.25 * width);
        let v = 0.5 * (q1 + q2);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }

    /// Midpoint rule on `[0, w]` measured from the zero `s` in direction
    /// `dir`, with geometric subcells `[w/2^{k+1}, w/2^k]`.
    fn graded(&self, s: &Singular, w: f64, dir: f64, acc: &mut Vec<f64>) {
        let depth = if s.exact {
            self.grade_depth
        } else {
            let mut d = 0;
            while d < self.grade_depth && w / 2f64.powi(d as i32 + 1) >= MIN_SAMPLED_WIDTH {
                d += 1;
            }
            d
        };
        let mut hi = w;
        for _ in 0..depth {
            let lo = 0.5 * hi;
            let width = hi - lo;
            let node = Node {
                anchor: &s.angle,
                offset: dir * (lo + 0.5 * width),
            };
            acc.push(width * self.log_at(node, width));
            hi = lo;
        }
        let node = Node {
            anchor: &s.angle,
            offset: dir * 0.5 * hi,
        };
        acc.push(hi * self.log_at(node, hi));
    }

    fn plain(&self, anchor: &Angle, offset: f64, width: f64, acc: &mut Vec<f64>) {
        acc.push(width * self.log_at(Node { anchor, offset }, width));
    }
}

fn log_integral(f: &CircleFunction, level: u32, singular: &[Singular]) -> f64 {
    let m = 1usize << level;
    let ctx = LevelContext {
        f,
        singular,
        grade_depth: 2 * level,
    };
    if singular.is_empty() {
        let h = 1.0 / m as f64;
        let cells: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|j| {
                let mut acc = Vec::with_capacity(1);
                ctx.plain(&Angle::ZERO, (j as f64 + 0.5) * h, h, &mut acc);
                acc[0]
            })
            .collect();
        return pairwise_sum(&cells);
    }

    // Split the circle into arcs between consecutive zeros. Each arc gets the
    // same scaled mesh at every level, so the error expansion in the cell
    // width has level-independent coefficients.
    let k = singular.len();
    let arcs: Vec<f64> = (0..k)
        .map(|i| {
            let s = &singular[i];
            let t = &singular[(i + 1) % k];
            let arc = t.turns - s.turns;
            if arc <= 0.0 {
                arc + 1.0
            } else {
                arc
            }
        })
        .collect();
    let cells: Vec<f64> = (0..k * m)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / m, idx % m);
            let s = &singular[i];
            let t = &singular[(i + 1) % k];
            let arc = arcs[i];
            let h = arc / m as f64;
            let mut acc = Vec::new();
            if j == 0 {
                ctx.graded(s, h, 1.0, &mut acc);
            } else if j == m - 1 {
                ctx.graded(t, h, -1.0, &mut acc);
            } else {
                let x = (j as f64 + 0.5) * h;
                if x <= 0.5 * arc {
                    ctx.plain(&s.angle, x, h, &mut acc);
                } else {
                    ctx.plain(&t.angle, x - arc, h, &mut acc);
                }
            }
            pairwise_sum(&acc)
        })
        .collect();
    pairwise_sum(&cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlefn::Root;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Oracle: plain midpoint rule on 2^20 points, no grading, no extrapolation.
    fn midpoint_oracle(f: &CircleFunction) -> f64 {
        let n = 1usize << 20;
        let h = 1.0 / n as f64;
        let vals: Vec<f64> = (0..n)
            .map(|j| f.log_abs_turns((j as f64 + 0.5) * h) * h)
            .collect();
        pairwise_sum(&vals)
    }

    #[test]
    fn z_minus_one_has_unit_determinant() {
        let f = CircleFunction::with_zeros_at(&[Angle::ZERO]);
        let r = fk_determinant(&f, &RefinementSchedule::default()).unwrap();
        assert_eq!(r.method, Method::Analytic);
        assert_eq!(r.delta, 1.0);
        assert_eq!(r.error_estimate, 0.0);
    }

    #[test]
    fn constants() {
        let f = CircleFunction::constant(Complex64::new(3.0, 4.0));
        let r = fk_determinant(&f, &RefinementSchedule::default()).unwrap();
        assert_abs_diff_eq!(r.delta, 5.0, epsilon = 1e-14);
    }

    #[test]
    fn lambda_plus_z_matches_frozen_oracle() {
        // oracle values at 2^20 midpoints: ln 2 and 0 respectively
        for (lambda, expected) in [(2.0, 2.0), (0.5, 1.0)] {
            let f = CircleFunction::shift_plus(c(lambda));
            let oracle = midpoint_oracle(&f).exp();
            assert_abs_diff_eq!(oracle, expected, epsilon = 1e-12);
            let r = fk_determinant(&f, &RefinementSchedule::default()).unwrap();
            assert_eq!(r.method, Method::Quadrature);
            assert_abs_diff_eq!(r.delta, expected, epsilon = 1e-10);
            assert!(r.error_estimate <= EPS_QUAD);
            // and the factored form through Jensen's formula
            let factored =
                CircleFunction::factored(c(1.0), vec![(Root::Off(c(-lambda)), 1)]).unwrap();
            let a = fk_determinant(&factored, &RefinementSchedule::default()).unwrap();
            assert_abs_diff_eq!(a.delta, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn log_singularity_on_the_circle() {
        let f = CircleFunction::shift_plus(c(1.0));
        let r = fk_determinant(&f, &RefinementSchedule::default()).unwrap();
        assert_abs_diff_eq!(r.delta, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn essential_zero_certifies_zero() {
        for p in [1.0, 2.0] {
            let f = CircleFunction::essential_zero(p).unwrap();
            let r = fk_determinant(&f, &RefinementSchedule::default()).unwrap();
            assert!(r.is_zero(), "p = {p}: {:?}", r.trace.last());
            assert_eq!(r.delta, 0.0);
            assert!(r.trace.len() <= 20);
        }
    }

    #[test]
    fn rotated_essential_zero_still_certifies() {
        let f = CircleFunction::scaled(
            CircleFunction::essential_zero(1.0).unwrap(),
            Angle::rational(1, 3),
        );
        let r = fk_determinant(&f, &RefinementSchedule::default()).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn quadrature_agrees_with_analytic_at_depth_16() {
        let schedule = RefinementSchedule::up_to(16).unwrap();
        let cases = vec![
            CircleFunction::with_zeros_at(&[Angle::ZERO]),
            CircleFunction::with_zeros_at(&[Angle::rational(1, 3), Angle::rational(5, 7)]),
            CircleFunction::factored(
                c(0.7),
                vec![
                    (Root::Off(Complex64::new(1.5, 0.5)), 2),
                    (Root::OnCircle(Angle::rational(1, 4)), 1),
                    (Root::Off(Complex64::new(0.1, -0.2)), 1),
                ],
            )
            .unwrap(),
        ];
        for f in cases {
            let exact = fk_determinant(&f, &schedule).unwrap();
            let quad = fk_determinant_quadrature(&f, &schedule).unwrap();
            assert_abs_diff_eq!(quad.log_delta, exact.log_delta, epsilon = 1e-6);
        }
    }

    #[test]
    fn multiplicative_and_rotation_invariant() {
        let schedule = RefinementSchedule::default();
        let f = CircleFunction::laurent([(0, c(2.0)), (1, Complex64::new(0.3, 0.4)), (-1, c(0.2))]);
        let g = CircleFunction::shift_plus(Complex64::new(0.0, 0.6));
        let df = fk_determinant(&f, &schedule).unwrap();
        let dg = fk_determinant(&g, &schedule).unwrap();
        let dfg = fk_determinant(&CircleFunction::product(vec![f.clone(), g]), &schedule).unwrap();
        let tol = df.error_estimate + dg.error_estimate + dfg.error_estimate + 1e-12;
        assert_abs_diff_eq!(dfg.log_delta, df.log_delta + dg.log_delta, epsilon = tol);

        for s in [0.1234, 0.5, 0.87] {
            let rotated = CircleFunction::scaled(f.clone(), Angle::real(s));
            let dr = fk_determinant(&rotated, &schedule).unwrap();
            assert_abs_diff_eq!(dr.log_delta, df.log_delta, epsilon = 1e-9);
        }
    }

    #[test]
    fn scaling_on_the_analytic_path() {
        let base = CircleFunction::with_zeros_at(&[Angle::rational(1, 5)]);
        let scaled = CircleFunction::product(vec![CircleFunction::constant(c(-3.5)), base.clone()]);
        let schedule = RefinementSchedule::default();
        let a = fk_determinant(&base, &schedule).unwrap();
        let b = fk_determinant(&scaled, &schedule).unwrap();
        assert_eq!(b.method, Method::Analytic);
        assert_abs_diff_eq!(b.delta, 3.5 * a.delta, epsilon = 1e-15);
    }

    #[test]
    fn short_schedule_is_inconclusive() {
        let f = CircleFunction::essential_zero(1.0).unwrap();
        let schedule = RefinementSchedule::new(vec![2, 3, 4]).unwrap();
        assert!(matches!(
            fk_determinant(&f, &schedule),
            Err(FkdetError::Inconclusive { .. })
        ));
    }

    #[test]
    fn schedule_validation() {
        assert!(RefinementSchedule::new(vec![]).is_err());
        assert!(RefinementSchedule::new(vec![3, 3]).is_err());
        assert!(RefinementSchedule::new(vec![30]).is_err());
    }
}
