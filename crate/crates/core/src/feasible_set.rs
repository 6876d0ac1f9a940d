//! Feasible sets with cheap Euclidean projections.
//!
//! The set used by the truss problem is
//! `S = { x : lᵀx ≤ V₀, x_j ≥ x_min }`, projected exactly by a breakpoint
//! search on the budget multiplier.

use crate::error::{check_dim, Error, Result};
use crate::linalg::dot;

/// Worst-case constraint residuals of a point. Positive means violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `max_j` violation of the bound constraints.
    pub bounds: f64,
    /// `lᵀx − V₀`, or `-∞` when the set has no budget constraint.
    pub budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub residuals: Residuals,
}

/// Closed convex set with a Euclidean projection.
pub trait FeasibleSet: Send + Sync {
    fn dim(&self) -> usize;

    fn project(&self, y: &[f64]) -> Result<Vec<f64>>;

    fn residuals(&self, x: &[f64]) -> Result<Residuals>;

    fn contains(&self, x: &[f64], tol: f64) -> Result<Membership> {
        let residuals = self.residuals(x)?;
        Ok(Membership {
            inside: residuals.bounds <= tol && residuals.budget <= tol,
            residuals,
        })
    }
}

impl<T: FeasibleSet + ?Sized> FeasibleSet for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        (**self).project(y)
    }
    fn residuals(&self, x: &[f64]) -> Result<Residuals> {
        (**self).residuals(x)
    }
}

/// `{ x ∈ ℝᵐ : lᵀx ≤ V₀, x_j ≥ x_min }` with `l > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBudgetSet {
    lengths: Vec<f64>,
    budget: f64,
    lower: f64,
}

/// Projection result with the budget multiplier `θ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub x: Vec<f64>,
    pub theta: f64,
}

impl BoxBudgetSet {
    pub fn new(lengths: Vec<f64>, budget: f64, lower: f64) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(l) = lengths.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "lengths must be positive, got {l}"
            )));
        }
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "volume budget must be positive, got {budget}"
            )));
        }
        if !(lower > 0.0 && lower.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lower bound must be positive, got {lower}"
            )));
        }
        let min_volume = lower * lengths.iter().sum::<f64>();
        if min_volume > budget {
            return Err(Error::EmptySet { min_volume, budget });
        }
        Ok(Self {
            lengths,
            budget,
            lower,
        })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Random point with every component strictly above the bound and the
    /// budget strictly slack.
    pub fn sample_interior<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: Vec<f64> = self.lengths.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let room = self.budget - self.lower * self.lengths.iter().sum::<f64>();
        let t = rng.gen_range(0.2..0.99) * room / dot(&self.lengths, &u);
        u.iter().map(|&v| self.lower + t * v).collect()
    }

    /// `lᵀx`.
    pub fn volume(&self, x: &[f64]) -> f64 {
        dot(&self.lengths, x)
    }

    /// Exact projection.
    ///
    /// With `x_j(θ) = max(x_min, y_j − θ l_j)` the budget residual
    /// `r(θ) = lᵀx(θ) − V₀` is continuous, piecewise linear and
    /// nonincreasing. Its kinks sit at `θ_j = (y_j − x_min)/l_j`; a scan over
    /// the sorted kinks finds the segment where `r` changes sign and the root
    /// is solved for on that segment.
    pub fn project_with_multiplier(&self, y: &[f64]) -> Result<Projection> {
        check_dim(self.lengths.len(), y.len())?;
        let lo = self.lower;
        let clipped: Vec<f64> = y.iter().map(|&v| v.max(lo)).collect();
        if self.volume(&clipped) <= self.budget {
            return Ok(Projection {
                x: clipped,
                theta: 0.0,
            });
        }

        let mut kinks: Vec<(f64, usize)> = y
            .iter()
            .zip(&self.lengths)
            .enumerate()
            .map(|(j, (&yj, &lj))| ((yj - lo) / lj, j))
            .filter(|&(t, _)| t > 0.0)
            .collect();
        kinks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        // Components with a nonpositive kink sit at the bound for every θ ≥ 0.
        let mut free_ly = 0.0;
        let mut free_l2 = 0.0;
        for &(_, j) in &kinks {
            free_ly += self.lengths[j] * y[j];
            free_l2 += self.lengths[j] * self.lengths[j];
        }
        let mut fixed_l = self.lengths.iter().sum::<f64>()
            - kinks.iter().map(|&(_, j)| self.lengths[j]).sum::<f64>();

        // r(0) > 0 guarantees at least one kink; x_min Σl ≤ V₀ guarantees
        // r ≤ 0 after the last one.
        let mut segment = kinks.len() - 1;
        let mut prev = 0.0;
        for (pos, &(t, j)) in kinks.iter().enumerate() {
            let r = free_ly - t * free_l2 + lo * fixed_l - self.budget;
            if r <= 0.0 {
                segment = pos;
                break;
            }
            prev = t;
            free_ly -= self.lengths[j] * y[j];
            free_l2 -= self.lengths[j] * self.lengths[j];
            fixed_l += self.lengths[j];
        }

        // Recompute the sums of the located segment from scratch.
        let (mut ly, mut l2, mut fl) = (0.0, 0.0, 0.0);
        for (pos, &(_, j)) in kinks.iter().enumerate() {
            let lj = self.lengths[j];
            if pos >= segment {
                ly += lj * y[j];
                l2 += lj * lj;
            } else {
                fl += lj;
            }
        }
        fl += self.lengths.iter().sum::<f64>() - kinks.iter().map(|&(_, j)| self.lengths[j]).sum::<f64>();
        let upper = kinks[segment].0;
        let mut theta = ((ly + lo * fl - self.budget) / l2).clamp(prev, upper);

        let mut x: Vec<f64> = y
            .iter()
            .zip(&self.lengths)
            .map(|(&yj, &lj)| (yj - theta * lj).max(lo))
            .collect();
        // For large |y| the subtraction above loses absolute accuracy of
        // order ε|y|. Spread the leftover budget residual over the free
        // components, which only involves numbers of the size of x.
        for _ in 0..8 {
            let r = self.volume(&x) - self.budget;
            if r <= 0.0 && -r <= 4.0 * f64::EPSILON * self.budget {
                break;
            }
            let free_l2: f64 = x
                .iter()
                .zip(&self.lengths)
                .filter(|(&v, _)| v > lo)
                .map(|(_, &l)| l * l)
                .sum();
            if free_l2 == 0.0 {
                break;
            }
            let shift = r / free_l2;
            theta += shift;
            for (v, &l) in x.iter_mut().zip(&self.lengths) {
                if *v > lo {
                    *v = (*v - shift * l).max(lo);
                }
            }
        }
        Ok(Projection { x, theta })
    }
}

impl FeasibleSet for BoxBudgetSet {
    fn dim(&self) -> usize {
        self.lengths.len()
    }

    fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.project_with_multiplier(y)?.x)
    }

    fn residuals(&self, x: &[f64]) -> Result<Residuals> {
        check_dim(self.lengths.len(), x.len())?;
        let bounds = x
            .iter()
            .map(|&v| self.lower - v)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Residuals {
            bounds,
            budget: self.volume(x) - self.budget,
        })
    }
}

/// Axis-aligned box `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::EmptyInput);
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParameter("box has lower > upper".into()));
        }
        Ok(Self { lower, upper })
    }
}

impl FeasibleSet for BoxSet {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.lower.len(), y.len())?;
        Ok(y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| v.clamp(l, u))
            .collect())
    }

    fn residuals(&self, x: &[f64]) -> Result<Residuals> {
        check_dim(self.lower.len(), x.len())?;
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| (l - v).max(v - u))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Residuals {
            bounds,
            budget: f64::NEG_INFINITY,
        })
    }
}

/// All of `ℝᵐ`; projection is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WholeSpace {
    dim: usize,
}

impl WholeSpace {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl FeasibleSet for WholeSpace {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, y.len())?;
        Ok(y.to_vec())
    }

    fn residuals(&self, x: &[f64]) -> Result<Residuals> {
        check_dim(self.dim, x.len())?;
        Ok(Residuals {
            bounds: f64::NEG_INFINITY,
            budget: f64::NEG_INFINITY,
        })
    }
}

/// Exhaustive active-set projection onto a [`BoxBudgetSet`]: tries every
/// pattern of components at the bound, with the budget active or not, and
/// keeps the closest feasible candidate. Exponential in `m`; a reference for
/// checking [`BoxBudgetSet::project`] on small instances.
pub fn project_by_enumeration(set: &BoxBudgetSet, y: &[f64]) -> Result<Vec<f64>> {
    let m = set.dim();
    check_dim(m, y.len())?;
    if m > 20 {
        return Err(Error::InvalidParameter(
            "enumeration oracle is limited to m <= 20".into(),
        ));
    }
    let l = set.lengths();
    let lo = set.lower();
    let v0 = set.budget();
    let feas_tol = 1e-12 * v0.max(1.0);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |x: Vec<f64>| {
        if x.iter().any(|&v| v < lo - 1e-15 * lo.abs().max(1.0)) {
            return;
        }
        if dot(l, &x) > v0 + feas_tol {
            return;
        }
        let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    };
    for mask in 0u32..(1 << m) {
        let free = |j: usize| mask & (1 << j) != 0;
        // Budget inactive.
        consider((0..m).map(|j| if free(j) { y[j] } else { lo }).collect());
        // Budget active.
        let mut ly = 0.0;
        let mut l2 = 0.0;
        let mut fixed = 0.0;
        for j in 0..m {
            if free(j) {
                ly += l[j] * y[j];
                l2 += l[j] * l[j];
            } else {
                fixed += l[j];
            }
        }
        if l2 > 0.0 {
            let theta = (ly + lo * fixed - v0) / l2;
            if theta >= 0.0 {
                consider(
                    (0..m)
                        .map(|j| if free(j) { y[j] - theta * l[j] } else { lo })
                        .collect(),
                );
            }
        }
    }
    best.map(|(_, x)| x)
        .ok_or_else(|| Error::InvalidParameter("enumeration found no feasible candidate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut impl Rng, m: usize) -> BoxBudgetSet {
        let lengths: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
        let lower = rng.gen_range(0.01..0.5);
        let min_vol = lower * lengths.iter().sum::<f64>();
        let budget = min_vol * rng.gen_range(1.0..5.0);
        BoxBudgetSet::new(lengths, budget, lower).unwrap()
    }

    #[test]
    fn identity_on_feasible_points() {
        let s = BoxBudgetSet::new(vec![1.0, 2.0], 10.0, 0.5).unwrap();
        let y = vec![1.0, 3.0];
        let p = s.project_with_multiplier(&y).unwrap();
        assert_eq!(p.x, y);
        assert_eq!(p.theta, 0.0);
    }

    #[test]
    fn single_component_budget_active() {
        let s = BoxBudgetSet::new(vec![1.0], 1.0, 0.1).unwrap();
        let p = s.project_with_multiplier(&[2.0]).unwrap();
        assert!((p.x[0] - 1.0).abs() < 1e-15);
        assert!((p.theta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn only_bounds_active() {
        let s = BoxBudgetSet::new(vec![1.0, 1.0], 10.0, 1.0).unwrap();
        assert_eq!(s.project(&[0.0, 5.0]).unwrap(), vec![1.0, 5.0]);
    }

    #[test]
    fn tied_kinks() {
        let s = BoxBudgetSet::new(vec![1.0; 4], 2.0, 0.1).unwrap();
        let y = [3.0, 3.0, 3.0, 3.0];
        let p = s.project(&y).unwrap();
        for v in &p {
            assert!((v - 0.5).abs() < 1e-15);
        }
        let y = [1.1, 1.1, 5.0, -3.0];
        let want = project_by_enumeration(&s, &y).unwrap();
        let got = s.project(&y).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tight_set_collapses_to_lower_bound() {
        let s = BoxBudgetSet::new(vec![1.0, 1.0], 0.5, 0.25).unwrap();
        let p = s.project(&[7.0, -1.0]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn huge_inputs_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lengths: Vec<f64> = (0..70).map(|_| rng.gen_range(1.0..2.3)).collect();
        let s = BoxBudgetSet::new(lengths.clone(), 0.1, 1e-8).unwrap();
        for _ in 0..200 {
            let top = rng.gen_range(0..70);
            let y: Vec<f64> = (0..70)
                .map(|j| if j == top { 1e10 } else { rng.gen_range(0.0..0.99) * 1e10 })
                .collect();
            let p = s.project_with_multiplier(&y).unwrap();
            let r = s.residuals(&p.x).unwrap();
            assert!(r.budget <= 1e-10 && r.budget >= -1e-10, "{}", r.budget);
            assert!(r.bounds <= 0.0);
            for (j, (&xj, &yj)) in p.x.iter().zip(&y).enumerate() {
                let expect = (yj - p.theta * lengths[j]).max(1e-8);
                assert!((xj - expect).abs() <= 1e-5, "{xj} vs {expect}");
            }
        }
    }

    #[test]
    fn constructor_errors() {
        assert!(matches!(
            BoxBudgetSet::new(vec![1.0, 1.0], 0.1, 0.1),
            Err(Error::EmptySet { .. })
        ));
        assert!(BoxBudgetSet::new(vec![1.0, -1.0], 1.0, 0.1).is_err());
        assert!(BoxBudgetSet::new(vec![1.0], 0.0, 0.1).is_err());
        assert!(BoxBudgetSet::new(vec![1.0], 1.0, 0.0).is_err());
        assert_eq!(BoxBudgetSet::new(vec![], 1.0, 0.1), Err(Error::EmptyInput));
    }

    #[test]
    fn dimension_mismatch() {
        let s = BoxBudgetSet::new(vec![1.0, 1.0], 10.0, 1.0).unwrap();
        assert!(matches!(s.project(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(s.contains(&[1.0], 0.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn contains_examples() {
        let s = BoxBudgetSet::new(vec![1.0, 2.0, 0.5], 3.0, 0.2).unwrap();
        let m = s.contains(&[0.2; 3], 0.0).unwrap();
        assert!(m.inside);
        assert!(m.residuals.bounds <= 0.0 && m.residuals.budget <= 0.0);
        let m = s.contains(&[0.2 - 1e-6, 0.2, 0.2], 0.0).unwrap();
        assert!(!m.inside);
        assert!((m.residuals.bounds - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn matches_enumeration_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..300 {
            let m = rng.gen_range(1..=6);
            let s = random_set(&mut rng, m);
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..4.0)).collect();
            let got = s.project_with_multiplier(&y).unwrap();
            let want = project_by_enumeration(&s, &y).unwrap();
            for (a, b) in got.x.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-10, "{:?} vs {:?}", got.x, want);
            }
            // KKT certificate.
            assert!(got.theta >= 0.0);
            let slack = s.budget() - s.volume(&got.x);
            assert!(slack >= -1e-10 * s.budget());
            assert!(got.theta * slack.abs() <= 1e-9);
            for j in 0..m {
                let expect = (y[j] - got.theta * s.lengths()[j]).max(s.lower());
                assert!((got.x[j] - expect).abs() <= 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn projection_properties(seed in any::<u64>(), m in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_set(&mut rng, m);
            let y1: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y2: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p1 = s.project(&y1).unwrap();
            let p2 = s.project(&y2).unwrap();
            prop_assert!(s.contains(&p1, 1e-12).unwrap().inside);

            let pp = s.project(&p1).unwrap();
            for (a, b) in pp.iter().zip(&p1) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let d_in = crate::linalg::dist(&y1, &y2);
            let d_out = crate::linalg::dist(&p1, &p2);
            prop_assert!(d_out <= d_in + 1e-12);

            // Obtuse angle against random feasible points.
            for _ in 0..20 {
                let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..3.0)).collect();
                let x = s.project(&z).unwrap();
                let ip: f64 = (0..m).map(|j| (y1[j] - p1[j]) * (x[j] - p1[j])).sum();
                prop_assert!(ip <= 1e-10);
            }
        }
    }

    #[test]
    fn box_and_whole_space() {
        let b = BoxSet::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(b.project(&[2.0, -3.0]).unwrap(), vec![1.0, -1.0]);
        assert!(b.contains(&[0.5, 0.0], 0.0).unwrap().inside);
        assert!(!b.contains(&[1.5, 0.0], 0.0).unwrap().inside);
        let w = WholeSpace::new(2);
        assert_eq!(w.project(&[5.0, -7.0]).unwrap(), vec![5.0, -7.0]);
        assert!(w.contains(&[1e300, 0.0], 0.0).unwrap().inside);
    }
}
