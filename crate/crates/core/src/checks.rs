//! Oracle and invariant suites shared by `sapg check` and the acceptance
//! tests. Every suite is seeded and returns one [`PropertyOutcome`] per
//! property with the worst observed error.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feasible_set::{project_by_enumeration, BoxBudgetSet, BoxSet, FeasibleSet, WholeSpace};
use crate::linalg::{dist, SymMatrix};
use crate::smoothing::{QuadraticObjective, SmoothedObjective};
use crate::solvers::{lyapunov_series, next_a, run, surrogate_optimum, theorem_bound, Algorithm, SolverConfig};
use crate::truss::RobustComplianceProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub threshold: f64,
    pub detail: String,
}

impl PropertyOutcome {
    fn bounded(name: &str, worst: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: worst <= threshold,
            worst,
            threshold,
            detail,
        }
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: worst {:.3e} (limit {:.3e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.threshold
        )?;
        if !self.detail.is_empty() {
            write!(f, "; {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Grad,
    Project,
    Smoothing,
    Lyapunov,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Grad => "grad",
            Suite::Project => "project",
            Suite::Smoothing => "smoothing",
            Suite::Lyapunov => "lyapunov",
            Suite::All => "all",
        }
    }
}

/// Relative error used by the gradient check: `|a − b| / max(|b|, floor)`.
fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Analytic `∇f_μ` against central differences with step `h_j = 10⁻⁴ x_j`
/// at `points` random interior designs for every `μ` in `mus`.
///
/// Central differences of `f` only resolve a component to about
/// `ε|f|/h` in absolute terms, so the denominator of the relative error is
/// floored at `10⁻³ ‖∇f_μ‖_∞`.
pub fn gradient_check<O>(obj: &O, set: &BoxBudgetSet, points: usize, mus: &[f64], seed: u64) -> Result<PropertyOutcome>
where
    O: SmoothedObjective + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut at = String::new();
    for p in 0..points {
        let x = set.sample_interior(&mut rng);
        for &mu in mus {
            let g = obj.grad_smoothed(&x, mu)?;
            let floor = 1e-3 * g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut xp = x.clone();
            for j in 0..x.len() {
                let h = 1e-4 * x[j];
                xp[j] = x[j] + h;
                let fp = obj.eval_smoothed(&xp, mu)?;
                xp[j] = x[j] - h;
                let fm = obj.eval_smoothed(&xp, mu)?;
                xp[j] = x[j];
                let fd = (fp - fm) / (2.0 * h);
                let e = rel_err(g[j], fd, floor);
                if e > worst {
                    worst = e;
                    at = format!("point {p}, mu {mu}, bar {j}");
                }
            }
        }
    }
    Ok(PropertyOutcome::bounded(
        "gradient matches central differences",
        worst,
        1e-5,
        format!("{points} points x {} mu values; worst at {at}", mus.len()),
    ))
}

/// Sandwich `0 ≤ f_{μ₂}(x) − f_{μ₁}(x) ≤ β(μ₁ − μ₂)` for every pair
/// `μ₁ > μ₂` drawn from `mus` (which may contain 0).
pub fn smoothing_check<O>(obj: &O, set: &BoxBudgetSet, points: usize, mus: &[f64], seed: u64) -> Result<PropertyOutcome>
where
    O: SmoothedObjective + ?Sized,
{
    let beta = obj.constants().beta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..points {
        let x = set.sample_interior(&mut rng);
        let vals: Vec<f64> = mus.iter().map(|&mu| obj.eval_smoothed(&x, mu)).collect::<Result<_>>()?;
        for (i, &m1) in mus.iter().enumerate() {
            for (j, &m2) in mus.iter().enumerate() {
                if m1 <= m2 {
                    continue;
                }
                let diff = vals[j] - vals[i];
                // Positive means a violation of either side.
                let lower = -diff;
                let upper = diff - beta * (m1 - m2);
                worst = worst.max(lower).max(upper);
            }
        }
    }
    Ok(PropertyOutcome::bounded(
        "smoothing sandwich",
        worst,
        1e-10,
        format!("{points} points, beta = {beta:.6}"),
    ))
}

fn random_box_budget(rng: &mut ChaCha8Rng, m: usize) -> Result<BoxBudgetSet> {
    let lengths: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
    let lower = rng.gen_range(0.01..0.5);
    let min_volume: f64 = lower * lengths.iter().sum::<f64>();
    let budget = min_volume * rng.gen_range(1.01..4.0);
    BoxBudgetSet::new(lengths, budget, lower)
}

/// Breakpoint projection against the exhaustive active-set oracle, plus
/// idempotence and nonexpansiveness, on random sets of every dimension
/// `1..=max_m`.
pub fn projection_check(
    max_m: usize,
    instances_per_size: usize,
    ys_per_instance: usize,
    seed: u64,
) -> Result<Vec<PropertyOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = 0.0f64;
    let mut idem = 0.0f64;
    let mut nonexp = f64::NEG_INFINITY;
    let mut count = 0usize;
    for m in 1..=max_m {
        for _ in 0..instances_per_size {
            let set = random_box_budget(&mut rng, m)?;
            let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
            for _ in 0..ys_per_instance {
                let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..3.0)).collect();
                let p = set.project(&y)?;
                let q = project_by_enumeration(&set, &y)?;
                oracle = oracle.max(p.iter().zip(&q).fold(0.0, |a, (u, v)| a.max((u - v).abs())));
                let pp = set.project(&p)?;
                idem = idem.max(dist(&p, &pp));
                if let Some((y1, p1)) = &prev {
                    nonexp = nonexp.max(dist(&p, p1) - dist(&y, y1));
                }
                prev = Some((y, p));
                count += 1;
            }
        }
    }
    let detail = format!("m = 1..={max_m}, {count} projections");
    Ok(vec![
        PropertyOutcome::bounded("projection matches active-set oracle", oracle, 1e-10, detail.clone()),
        PropertyOutcome::bounded("projection idempotent", idem, 1e-12, detail.clone()),
        PropertyOutcome::bounded("projection nonexpansive", nonexp.max(0.0), 1e-12, detail),
    ])
}

/// Worst recurrence residual and worst violation of `k/2 ≤ a_k ≤ 3k/2`
/// for `k ≤ k_max`.
///
/// The residual `a_{k+1}² − a_{k+1} − a_k²` is evaluated as
/// `(a_{k+1} − a_k)(a_{k+1} + a_k) − a_{k+1}` and divided by `a_{k+1}²`;
/// rounding `a_{k+1}` alone leaves an absolute residual near `ε a_{k+1}²`.
pub fn a_sequence_check(k_max: usize) -> Vec<PropertyOutcome> {
    let mut a = 0.0f64;
    let mut residual = 0.0f64;
    let mut bounds = f64::NEG_INFINITY;
    for k in 0..k_max {
        let b = next_a(a);
        let r = ((b - a) * (b + a) - b) / (b * b);
        residual = residual.max(r.abs());
        let kf = (k + 1) as f64;
        bounds = bounds.max(kf / 2.0 - b).max(b - 1.5 * kf);
        a = b;
    }
    vec![
        PropertyOutcome::bounded("a-sequence recurrence", residual, 1e-12, format!("k <= {k_max}, relative to a_(k+1)^2")),
        PropertyOutcome::bounded("a-sequence bounds k/2 <= a_k <= 3k/2", bounds.max(0.0), 0.0, format!("k <= {k_max}")),
    ]
}

/// `f(x^k) − f* ≤ theorem_bound(k)` over a trace's records.
fn bound_excess(records: &[crate::solvers::TraceRecord], f_star: f64, config: &SolverConfig, beta: f64, d0: f64) -> Result<(f64, usize)> {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for r in records.iter().filter(|r| r.k >= 1) {
        let b = theorem_bound(r.k, config.mu0, config.l, config.l_prime, beta, d0)?;
        let e = (r.f_x - f_star) - b;
        if e > 0.0 {
            violations += 1;
        }
        worst = worst.max(e);
    }
    Ok((worst, violations))
}

/// Lyapunov and rate-bound checks on instances with an exact minimizer:
/// `½x²` on the line, and a convex quadratic over a box whose minimizer is
/// pinned to a corner.
pub fn exact_lyapunov_checks(iterations: usize) -> Result<Vec<PropertyOutcome>> {
    let mut out = Vec::new();
    let line = QuadraticObjective::new(SymMatrix::identity(1), vec![0.0])?;
    let whole = WholeSpace::new(1);
    out.extend(exact_case("1-D quadratic", &line, &whole, &[3.0], &[0.0], iterations)?);

    let h = SymMatrix::from_rows(&[
        vec![4.0, 1.0, 0.0],
        vec![1.0, 3.0, 0.5],
        vec![0.0, 0.5, 2.0],
    ])?;
    // The unconstrained minimizer (-1, 2, 5) is cut off by the box; x* solves
    // the KKT system with x₀ = 0 and x₂ = 3 active and x₁ free.
    let center = vec![-1.0, 2.0, 5.0];
    let quad = QuadraticObjective::new(h.clone(), center.clone())?;
    let boxed = BoxSet::new(vec![0.0, -5.0, -5.0], vec![5.0, 5.0, 3.0])?;
    let x1 = center[1] - (h.get(1, 0) * (0.0 - center[0]) + h.get(1, 2) * (3.0 - center[2])) / h.get(1, 1);
    let xstar = vec![0.0, x1, 3.0];
    out.extend(exact_case("box quadratic", &quad, &boxed, &[4.0, -4.0, -2.0], &xstar, iterations)?);
    Ok(out)
}

fn exact_case<S: FeasibleSet>(
    label: &str,
    obj: &QuadraticObjective,
    set: &S,
    x0: &[f64],
    xstar: &[f64],
    iterations: usize,
) -> Result<Vec<PropertyOutcome>> {
    let c = obj.constants();
    let config = SolverConfig {
        l: c.l,
        l_prime: c.l_prime,
        max_iters: iterations,
        keep_states: true,
        ..SolverConfig::paper_default(Algorithm::Sapg)
    };
    let trace = run(&config, obj, set, x0).map_err(|e| e.error)?;
    let report = lyapunov_series(&trace, obj, &config, xstar)?;
    let f_star = obj.eval_nonsmooth(xstar)?;
    let d0 = dist(&trace.states.as_ref().ok_or(Error::MissingStates)?[0].x, xstar);
    let (bound, violations) = bound_excess(&trace.records, f_star, &config, c.beta, d0)?;
    let tol = report.tolerance;
    Ok(vec![
        PropertyOutcome::bounded(
            &format!("{label}: Lemma 1 inequality"),
            report.worst_lemma_excess(),
            tol,
            format!("{} violations over {iterations} steps", report.lemma_violations.len()),
        ),
        PropertyOutcome::bounded(
            &format!("{label}: modified Lyapunov nonincreasing"),
            report.worst_monotone_excess(),
            tol,
            format!("{} violations", report.monotone_violations.len()),
        ),
        PropertyOutcome::bounded(
            &format!("{label}: gap below rate bound"),
            bound.max(0.0),
            0.0,
            format!("{violations} violations"),
        ),
    ])
}

/// Lyapunov diagnostics and the rate bound on the truss instance, measured
/// against a surrogate minimizer from a long S-APG run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrussLyapunov {
    pub surrogate_f: f64,
    /// `f` after half the surrogate budget minus `f` after the full budget;
    /// an estimate of the surrogate's own optimality gap.
    pub surrogate_gap: f64,
    pub lemma_violations: usize,
    pub worst_lemma_excess: f64,
    pub monotone_violations: usize,
    pub worst_monotone_excess: f64,
    pub bound_violations: usize,
    pub worst_bound_excess: f64,
    /// Last iteration at which the rate bound failed.
    pub last_bound_violation: Option<usize>,
}

impl TrussLyapunov {
    /// Pass/fail lines with every violation measured against ten times the
    /// surrogate gap.
    pub fn outcomes(&self) -> Vec<PropertyOutcome> {
        let limit = 10.0 * self.surrogate_gap;
        vec![
            PropertyOutcome::bounded(
                "truss: Lemma 1 inequality (surrogate x*)",
                self.worst_lemma_excess,
                limit,
                format!("{} violations", self.lemma_violations),
            ),
            PropertyOutcome::bounded(
                "truss: modified Lyapunov nonincreasing (surrogate x*)",
                self.worst_monotone_excess,
                limit,
                format!("{} violations", self.monotone_violations),
            ),
            PropertyOutcome::bounded(
                "truss: gap below rate bound (surrogate f*)",
                self.worst_bound_excess.max(0.0),
                limit,
                match self.last_bound_violation {
                    Some(k) => format!("{} violations, last at k = {k}", self.bound_violations),
                    None => "0 violations".into(),
                },
            ),
        ]
    }
}

/// Runs S-APG with retained states, builds a surrogate minimizer from runs
/// of `surrogate_iters / 2` and `surrogate_iters` iterations, and evaluates
/// the Lyapunov inequalities and the rate bound against it.
pub fn truss_lyapunov(
    problem: &RobustComplianceProblem,
    config: &SolverConfig,
    x0: &[f64],
    surrogate_iters: usize,
) -> Result<TrussLyapunov> {
    let obj = problem.objective();
    let set = problem.feasible();
    let half = surrogate_optimum(config, &obj, set, x0, surrogate_iters / 2, 1e-8, 0).map_err(|e| e.error)?;
    let sur = surrogate_optimum(config, &obj, set, x0, surrogate_iters, 1e-8, 200).map_err(|e| e.error)?;
    let cfg = SolverConfig {
        algorithm: Algorithm::Sapg,
        keep_states: true,
        trace_every: 1,
        ..config.clone()
    };
    let trace = run(&cfg, &obj, set, x0).map_err(|e| e.error)?;
    let f_star = sur.f.min(trace.best.0);
    let report = lyapunov_series(&trace, &obj, &cfg, &sur.x)?;
    let d0 = dist(&trace.states.as_ref().ok_or(Error::MissingStates)?[0].x, &sur.x);
    let beta = obj.constants().beta;
    let mut last = None;
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for r in trace.records.iter().filter(|r| r.k >= 1) {
        let e = (r.f_x - f_star) - theorem_bound(r.k, cfg.mu0, cfg.l, cfg.l_prime, beta, d0)?;
        worst = worst.max(e);
        if e > 0.0 {
            count += 1;
            last = Some(r.k);
        }
    }
    Ok(TrussLyapunov {
        surrogate_f: sur.f,
        surrogate_gap: (half.f - sur.f).max(0.0),
        lemma_violations: report.lemma_violations.len(),
        worst_lemma_excess: report.worst_lemma_excess(),
        monotone_violations: report.monotone_violations.len(),
        worst_monotone_excess: report.worst_monotone_excess(),
        bound_violations: count,
        worst_bound_excess: worst,
        last_bound_violation: last,
    })
}
