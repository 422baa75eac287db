use super::{Angle, CircleFunction, Root, TAU_ZERO};

const SEARCH_GRID: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroPoint {
    pub angle: Angle,
    pub multiplicity: u32,
}

/// Zeros of `f` on the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSet {
    pub points: Vec<ZeroPoint>,
    pub exactness: Exactness,
}

impl ZeroSet {
    pub fn empty(exactness: Exactness) -> Self {
        ZeroSet {
            points: Vec::new(),
            exactness,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn angles(&self) -> impl Iterator<Item = &Angle> {
        self.points.iter().map(|p| &p.angle)
    }

    /// Add a zero, merging with an existing point at the same angle.
    pub fn insert(&mut self, angle: Angle, multiplicity: u32) {
        if !angle.is_exact() {
            self.exactness = Exactness::Sampled;
        }
        if let Some(p) = self.points.iter_mut().find(|p| p.angle.same_point(&angle)) {
            p.multiplicity += multiplicity;
        } else {
            self.points.push(ZeroPoint {
                angle,
                multiplicity,
            });
        }
    }

    fn union(mut self, other: ZeroSet) -> ZeroSet {
        if other.exactness == Exactness::Sampled {
            self.exactness = Exactness::Sampled;
        }
        for p in other.points {
            self.insert(p.angle, p.multiplicity);
        }
        self
    }
}

/// Zeros of `f` on the unit circle: exact for factored and essential-zero
/// pieces, located by a refining grid search for Laurent polynomials.
pub fn zero_set(f: &CircleFunction) -> ZeroSet {
    let mut set = match f {
        CircleFunction::Laurent(_) => sampled_zeros(f),
        CircleFunction::Factored { roots, .. } => {
            let mut set = ZeroSet::empty(Exactness::Exact);
            for (root, mult) in roots {
                if let Root::OnCircle(a) = root {
                    set.insert(*a, *mult);
                }
            }
            set
        }
        CircleFunction::EssentialZero { .. } => {
            let mut set = ZeroSet::empty(Exactness::Exact);
            set.insert(Angle::ZERO, 1);
            set
        }
        CircleFunction::Product(factors) => factors
            .iter()
            .map(zero_set)
            .fold(ZeroSet::empty(Exactness::Exact), ZeroSet::union),
        CircleFunction::Scaled { base, rotation } => {
            let inner = zero_set(base);
            let mut set = ZeroSet::empty(inner.exactness);
            for p in inner.points {
                set.insert(p.angle.sub(rotation), p.multiplicity);
            }
            set
        }
    };
    set.points.sort_by(|a, b| a.angle.position_cmp(&b.angle));
    set
}

fn golden_section_min(f: &CircleFunction, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f.eval_turns(c).norm();
    let mut fd = f.eval_turns(d).norm();
    for _ in 0..120 {
        if (b - a).abs() < 1e-17 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f.eval_turns(c).norm();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f.eval_turns(d).norm();
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

fn estimate_multiplicity(f: &CircleFunction, t: f64) -> u32 {
    let h = 1e-4;
    let a = f.eval_turns(t + h).norm();
    let b = f.eval_turns(t + 2.0 * h).norm();
    if a <= 0.0 || b <= 0.0 {
        return 1;
    }
    ((b / a).ln() / 2f64.ln()).round().max(1.0) as u32
}

fn sampled_zeros(f: &CircleFunction) -> ZeroSet {
    let n = SEARCH_GRID;
    let values: Vec<f64> = (0..n)
        .map(|j| f.eval_turns(j as f64 / n as f64).norm())
        .collect();
    let max = values.iter().cloned().fold(0.0, f64::max);
    let mut set = ZeroSet::empty(Exactness::Sampled);
    if max == 0.0 {
        return set;
    }
    let h = 1.0 / n as f64;
    for j in 0..n {
        let here = values[j];
        let left = values[(j + n - 1) % n];
        let right = values[(j + 1) % n];
        if !(here <= left && here <= right) || here > 1e-2 * max {
            continue;
        }
        let centre = j as f64 * h;
        let t = if here == 0.0 {
            centre
        } else {
            golden_section_min(f, centre - h, centre + h)
        };
        if f.eval_turns(t).norm() < TAU_ZERO * max {
            set.insert(Angle::real(t), estimate_multiplicity(f, t));
        }
    }
    // merged points from plateaus keep the first multiplicity estimate only
    for p in &mut set.points {
        p.multiplicity = estimate_multiplicity(f, p.angle.turns());
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlefn::Turns;
    use crate::diophantine::RotationAngle;
    use num_complex::Complex64;

    #[test]
    fn factored_root_at_one() {
        let f = CircleFunction::with_zeros_at(&[Angle::ZERO]);
        let z = zero_set(&f);
        assert_eq!(z.exactness, Exactness::Exact);
        assert_eq!(
            z.points,
            vec![ZeroPoint {
                angle: Angle::ZERO,
                multiplicity: 1
            }]
        );
    }

    #[test]
    fn zero_free_polynomial() {
        let f = CircleFunction::shift_plus(Complex64::new(2.0, 0.0));
        let z = zero_set(&f);
        assert!(z.is_empty());
        assert_eq!(z.exactness, Exactness::Sampled);
    }

    #[test]
    fn essential_zero_has_one_exact_zero() {
        let z = zero_set(&CircleFunction::essential_zero(2.0).unwrap());
        assert_eq!(z.exactness, Exactness::Exact);
        assert_eq!(z.len(), 1);
        assert_eq!(z.points[0].angle, Angle::ZERO);
    }

    #[test]
    fn laurent_zeros_are_located() {
        // 1 + z vanishes at 1/2; (1 − z)² has a double zero at 0;
        // z − e^{2πi·0.3} at 0.3 (off the search grid)
        let f = CircleFunction::shift_plus(Complex64::new(1.0, 0.0));
        let z = zero_set(&f);
        assert_eq!(z.len(), 1);
        assert!((z.points[0].angle.turns() - 0.5).abs() < 1e-12);
        assert_eq!(z.points[0].multiplicity, 1);

        let g = CircleFunction::laurent_real([(0, 1.0), (1, -2.0), (2, 1.0)]);
        let z = zero_set(&g);
        assert_eq!(z.len(), 1);
        assert_eq!(z.points[0].multiplicity, 2);

        let r = crate::numeric::cis_turns(0.3);
        let h = CircleFunction::laurent([(0, -r), (1, Complex64::new(1.0, 0.0))]);
        let z = zero_set(&h);
        assert_eq!(z.len(), 1);
        assert!((z.points[0].angle.turns() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn product_is_multiset_union() {
        let g = RotationAngle::GoldenConjugate;
        let alpha = Angle::shifted(Turns::ZERO, 1, g);
        let a = CircleFunction::with_zeros_at(&[Angle::ZERO, alpha]);
        let b = CircleFunction::with_zeros_at(&[Angle::ZERO]);
        let e = CircleFunction::scaled(
            CircleFunction::essential_zero(1.0).unwrap(),
            Angle::rational(1, 4),
        );
        let z = zero_set(&CircleFunction::product(vec![a, b, e]));
        assert_eq!(z.exactness, Exactness::Exact);
        let mults: Vec<(f64, u32)> = z
            .points
            .iter()
            .map(|p| (p.angle.turns(), p.multiplicity))
            .collect();
        assert_eq!(mults.len(), 3);
        assert_eq!(mults[0], (0.0, 2));
        assert!(z.points.iter().any(|p| p.angle == Angle::rational(3, 4)));
        assert!(z.points.iter().any(|p| p.angle == alpha));
    }
}
