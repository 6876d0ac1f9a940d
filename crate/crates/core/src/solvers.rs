//! First-order methods on smoothed objectives over projectable sets.
//!
//! * **S-APG** – smoothing accelerated projected gradient with feasible
//!   iterates. Per iteration, with `μ_k = μ₀/(k+1)` and `L_k = L' + L/μ_k`:
//!
//!   ```text
//!   a_{k+1} = (1 + √(4a_k² + 1)) / 2
//!   y^k     = (1 − 1/a_{k+1}) x^k + (1/a_{k+1}) z^k
//!   z^{k+1} = Π_S(z^k − (a_{k+1}/L_k) ∇f_{μ_k}(y^k))
//!   x^{k+1} = (1 − 1/a_{k+1}) x^k + (1/a_{k+1}) z^{k+1}
//!   ```
//!
//!   `y^k` and `x^{k+1}` are convex combinations of feasible points, so every
//!   gradient is taken inside `S`.
//! * **S-PG** – `x^{k+1} = Π_S(x^k − ∇f_{μ_k}(x^k)/L_k)` with
//!   `μ_k = μ₀(k+1)^p`, `p = −1/2` by default.
//! * **Subgrad** – `x^{k+1} = Π_S(x^k − α g^k)` with `α = c/√(k+1)`.

use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::feasible_set::FeasibleSet;
use crate::linalg::dist;
use crate::smoothing::SmoothedObjective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sapg,
    Spg,
    Subgrad,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Sapg, Algorithm::Spg, Algorithm::Subgrad];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sapg => "sapg",
            Algorithm::Spg => "spg",
            Algorithm::Subgrad => "subgrad",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sapg" => Some(Algorithm::Sapg),
            "spg" => Some(Algorithm::Spg),
            "subgrad" | "subgradient" => Some(Algorithm::Subgrad),
            _ => None,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub mu0: f64,
    pub l: f64,
    pub l_prime: f64,
    pub max_iters: usize,
    /// `c` in the subgradient step `c/√k`.
    pub subgrad_step_c: f64,
    /// Exponent `p` of the S-PG schedule `μ_k = μ₀(k+1)^p`.
    pub spg_mu_exponent: f64,
    /// Record every `trace_every`-th iterate (the final one is always kept).
    pub trace_every: usize,
    pub reference_optimum: Option<f64>,
    /// Retain `(x, y, z)` for every recorded iterate.
    pub keep_states: bool,
    /// Fill the wall-clock column of the trace.
    pub record_time: bool,
}

impl SolverConfig {
    /// Experiment defaults: `μ₀ = 1`, `L = 10⁵` (S-APG) or `10⁶` (S-PG),
    /// `c = 10⁻⁶`, 4000 iterations.
    pub fn paper_default(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            mu0: 1.0,
            l: match algorithm {
                Algorithm::Spg => 1e6,
                _ => 1e5,
            },
            l_prime: 0.0,
            max_iters: 4000,
            subgrad_step_c: 1e-6,
            spg_mu_exponent: -0.5,
            trace_every: 1,
            reference_optimum: None,
            keep_states: false,
            record_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return bad(format!("mu0 must be positive, got {}", self.mu0));
        }
        if !(self.l >= 0.0 && self.l.is_finite()) || !(self.l_prime >= 0.0 && self.l_prime.is_finite()) {
            return bad(format!("L = {} and L' = {} must be finite and nonnegative", self.l, self.l_prime));
        }
        if self.algorithm != Algorithm::Subgrad && self.l == 0.0 && self.l_prime == 0.0 {
            return bad("L = 0 requires L' > 0".into());
        }
        if self.algorithm == Algorithm::Subgrad && !(self.subgrad_step_c > 0.0 && self.subgrad_step_c.is_finite()) {
            return bad(format!("subgradient step constant must be positive, got {}", self.subgrad_step_c));
        }
        if !self.spg_mu_exponent.is_finite() || self.spg_mu_exponent > 0.0 {
            return bad(format!("S-PG exponent must be <= 0, got {}", self.spg_mu_exponent));
        }
        if self.trace_every == 0 {
            return bad("trace stride must be at least 1".into());
        }
        Ok(())
    }

    /// Smoothing parameter used at iteration `k`; zero for the subgradient
    /// method.
    pub fn mu_at(&self, k: usize) -> f64 {
        match self.algorithm {
            Algorithm::Sapg => sapg_mu(self.mu0, k),
            Algorithm::Spg => self.mu0 * ((k + 1) as f64).powf(self.spg_mu_exponent),
            Algorithm::Subgrad => 0.0,
        }
    }

    /// `L' + L/μ_k`; zero for the subgradient method.
    pub fn lipschitz_at(&self, k: usize) -> f64 {
        match self.algorithm {
            Algorithm::Subgrad => 0.0,
            _ if self.l == 0.0 => self.l_prime,
            _ => self.l_prime + self.l / self.mu_at(k),
        }
    }
}

/// `μ₀ / (k+1)`.
pub fn sapg_mu(mu0: f64, k: usize) -> f64 {
    mu0 / (k + 1) as f64
}

/// `a_{k+1} = (1 + √(4a_k² + 1)) / 2`.
#[inline]
pub fn next_a(a: f64) -> f64 {
    0.5 * (1.0 + (4.0 * a * a + 1.0).sqrt())
}

/// Subgradient step `c k^{-1/2}` for `k ≥ 1`.
pub fn subgrad_step_size(c: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidIteration(0));
    }
    Ok(c / (k as f64).sqrt())
}

/// Iterate state at index `k`.
///
/// `y` is the extrapolation point that produced `x^k` (`y^{k−1}`); at `k = 0`
/// it equals `x⁰`. The single-sequence methods keep `y = z = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub a: f64,
    pub mu: f64,
    pub lk: f64,
}

impl SolverState {
    pub fn initial(config: &SolverConfig, x0: Vec<f64>) -> Self {
        Self {
            k: 0,
            y: x0.clone(),
            z: x0.clone(),
            x: x0,
            a: 0.0,
            mu: config.mu_at(0),
            lk: config.lipschitz_at(0),
        }
    }
}

fn ensure_finite(k: usize, what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalBreakdown {
            k,
            reason: format!("non-finite {what}"),
        })
    }
}

fn check_dims<O, S>(state: &SolverState, obj: &O, set: &S) -> Result<()>
where
    O: SmoothedObjective + ?Sized,
    S: FeasibleSet + ?Sized,
{
    check_dim(obj.dim(), set.dim())?;
    check_dim(obj.dim(), state.x.len())
}

/// One S-APG iteration, `k → k+1`.
pub fn sapg_step<O, S>(state: &SolverState, obj: &O, set: &S, config: &SolverConfig) -> Result<SolverState>
where
    O: SmoothedObjective + ?Sized,
    S: FeasibleSet + ?Sized,
{
    check_dims(state, obj, set)?;
    let k = state.k;
    let mu = sapg_mu(config.mu0, k);
    let lk = config.lipschitz_at(k);
    let a_next = next_a(state.a);
    let w = 1.0 / a_next;

    let y: Vec<f64> = state
        .x
        .iter()
        .zip(&state.z)
        .map(|(x, z)| (1.0 - w) * x + w * z)
        .collect();
    let g = obj.grad_smoothed(&y, mu)?;
    ensure_finite(k, "gradient", &g)?;
    let step = a_next / lk;
    let trial: Vec<f64> = state.z.iter().zip(&g).map(|(z, gi)| z - step * gi).collect();
    ensure_finite(k, "gradient step", &trial)?;
    let z = set.project(&trial)?;
    let x: Vec<f64> = state
        .x
        .iter()
        .zip(&z)
        .map(|(x, z)| (1.0 - w) * x + w * z)
        .collect();
    ensure_finite(k, "iterate", &x)?;

    Ok(SolverState {
        k: k + 1,
        x,
        y,
        z,
        a: a_next,
        mu: config.mu_at(k + 1),
        lk: config.lipschitz_at(k + 1),
    })
}

/// One S-PG iteration.
pub fn spg_step<O, S>(state: &SolverState, obj: &O, set: &S, config: &SolverConfig) -> Result<SolverState>
where
    O: SmoothedObjective + ?Sized,
    S: FeasibleSet + ?Sized,
{
    check_dims(state, obj, set)?;
    let k = state.k;
    let mu = config.mu0 * ((k + 1) as f64).powf(config.spg_mu_exponent);
    let lk = if config.l == 0.0 {
        config.l_prime
    } else {
        config.l_prime + config.l / mu
    };
    let g = obj.grad_smoothed(&state.x, mu)?;
    ensure_finite(k, "gradient", &g)?;
    let trial: Vec<f64> = state.x.iter().zip(&g).map(|(x, gi)| x - gi / lk).collect();
    ensure_finite(k, "gradient step", &trial)?;
    let x = set.project(&trial)?;
    Ok(single_sequence_state(k + 1, x, config))
}

/// One projected subgradient iteration.
pub fn subgrad_step<O, S>(state: &SolverState, obj: &O, set: &S, config: &SolverConfig) -> Result<SolverState>
where
    O: SmoothedObjective + ?Sized,
    S: FeasibleSet + ?Sized,
{
    check_dims(state, obj, set)?;
    let k = state.k;
    // The step counter starts at 1 so that the first step uses α = c.
    let alpha = subgrad_step_size(config.subgrad_step_c, k + 1)?;
    let g = obj.subgradient(&state.x)?;
    ensure_finite(k, "subgradient", &g)?;
    let trial: Vec<f64> = state.x.iter().zip(&g).map(|(x, gi)| x - alpha * gi).collect();
    ensure_finite(k, "subgradient step", &trial)?;
    let x = set.project(&trial)?;
    Ok(single_sequence_state(k + 1, x, config))
}

fn single_sequence_state(k: usize, x: Vec<f64>, config: &SolverConfig) -> SolverState {
    SolverState {
        k,
        y: x.clone(),
        z: x.clone(),
        x,
        a: 0.0,
        mu: config.mu_at(k),
        lk: config.lipschitz_at(k),
    }
}

/// Runs one step of the configured algorithm.
pub fn step<O, S>(state: &SolverState, obj: &O, set: &S, config: &SolverConfig) -> Result<SolverState>
where
    O: SmoothedObjective + ?Sized,
    S: FeasibleSet + ?Sized,
{
    match config.algorithm {
        Algorithm::Sapg => sapg_step(state, obj, set, config),
        Algorithm::Spg => spg_step(state, obj, set, config),
        Algorithm::Subgrad => subgrad_step(state, obj, set, config),
    }
}

/// One recorded iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `f(x^k)`.
    pub f_x: f64,
    /// `f_{μ_k}(x^k)`.
    pub f_mu_x: f64,
    pub mu_k: f64,
    pub l_k: f64,
    pub a_k: f64,
    /// Worst bound violation over `x^k`, `y`, `z^k`.
    pub feas_residual_box: f64,
    /// Worst budget residual over `x^k`, `y`, `z^k`.
    pub feas_residual_budget: f64,
    /// Norm of the `z` update that produced this iterate (0 at `k = 0`).
    pub step_norm: f64,
    pub time_s: Option<f64>,
    pub lyapunov: Option<LyapunovDiagnostics>,
}

/// Lyapunov values and the rate bound at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovDiagnostics {
    pub e_k: f64,
    pub etilde_k: f64,
    pub bound_rhs_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub algorithm: Algorithm,
    pub records: Vec<TraceRecord>,
    /// States matching `records` when `keep_states` is set.
    pub states: Option<Vec<SolverState>>,
    pub final_state: SolverState,
    /// Lowest `f(x^k)` among recorded iterates and the iterate attaining it.
    pub best: (f64, Vec<f64>),
}

impl IterateTrace {
    pub fn final_record(&self) -> &TraceRecord {
        self.records.last().expect("trace always has the initial record")
    }
}

/// A run that stopped early; `trace` holds everything recorded so far.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error}")]
pub struct RunError {
    pub trace: Box<IterateTrace>,
    pub error: Error,
}

fn record<O, S>(
    state: &SolverState,
    prev_z: Option<&[f64]>,
    obj: &O,
    set: &S,
    start: Option<Instant>,
) -> Result<TraceRecord>
where
    O: SmoothedObjective + ?Sized,
    S: FeasibleSet + ?Sized,
{
    let f_x = obj.eval_nonsmooth(&state.x)?;
    let f_mu_x = if state.mu > 0.0 {
        obj.eval_smoothed(&state.x, state.mu)?
    } else {
        f_x
    };
    if !f_x.is_finite() || !f_mu_x.is_finite() {
        return Err(Error::NumericalBreakdown {
            k: state.k,
            reason: "non-finite objective value".into(),
        });
    }
    let mut bx = f64::NEG_INFINITY;
    let mut bb = f64::NEG_INFINITY;
    for v in [&state.x, &state.y, &state.z] {
        let r = set.residuals(v)?;
        bx = bx.max(r.bounds);
        bb = bb.max(r.budget);
    }
    Ok(TraceRecord {
        k: state.k,
        f_x,
        f_mu_x,
        mu_k: state.mu,
        l_k: state.lk,
        a_k: state.a,
        feas_residual_box: bx,
        feas_residual_budget: bb,
        step_norm: prev_z.map_or(0.0, |p| dist(p, &state.z)),
        time_s: start.map(|t| t.elapsed().as_secs_f64()),
        lyapunov: None,
    })
}

/// Runs `config.max_iters` iterations from `x0`.
///
/// A starting point outside `set` is projected first. Any error inside the
/// loop becomes [`Error::NumericalBreakdown`] and is returned together with
/// the partial trace.
pub fn run<O, S>(config: &SolverConfig, obj: &O, set: &S, x0: &[f64]) -> std::result::Result<IterateTrace, RunError>
where
    O: SmoothedObjective + ?Sized,
    S: FeasibleSet + ?Sized,
{
    let start = config.record_time.then(Instant::now);
    let fail_early = |error: Error| {
        let state = SolverState::initial(config, x0.to_vec());
        RunError {
            trace: Box::new(IterateTrace {
                algorithm: config.algorithm,
                records: Vec::new(),
                states: None,
                final_state: state,
                best: (f64::INFINITY, x0.to_vec()),
            }),
            error,
        }
    };
    config.validate().map_err(fail_early)?;
    check_dim(obj.dim(), x0.len()).map_err(fail_early)?;
    check_dim(obj.dim(), set.dim()).map_err(fail_early)?;

    let mut x_start = x0.to_vec();
    if !set.contains(x0, 0.0).map_err(fail_early)?.inside {
        warn!("starting point is infeasible; projecting it onto the feasible set");
        x_start = set.project(x0).map_err(fail_early)?;
    }

    let mut state = SolverState::initial(config, x_start);
    let first = record(&state, None, obj, set, start).map_err(fail_early)?;
    let mut trace = IterateTrace {
        algorithm: config.algorithm,
        best: (first.f_x, state.x.clone()),
        records: vec![first],
        states: config.keep_states.then(|| vec![state.clone()]),
        final_state: state.clone(),
    };

    let breakdown = |k: usize, e: Error| match e {
        Error::NumericalBreakdown { .. } => e,
        other => Error::NumericalBreakdown {
            k,
            reason: other.to_string(),
        },
    };

    for k in 0..config.max_iters {
        let next = match step(&state, obj, set, config) {
            Ok(s) => s,
            Err(e) => {
                return Err(RunError {
                    trace: Box::new(trace),
                    error: breakdown(k, e),
                })
            }
        };
        let is_last = k + 1 == config.max_iters;
        if (k + 1) % config.trace_every == 0 || is_last {
            match record(&next, Some(&state.z), obj, set, start) {
                Ok(r) => {
                    if r.f_x < trace.best.0 {
                        trace.best = (r.f_x, next.x.clone());
                    }
                    trace.records.push(r);
                    if let Some(states) = trace.states.as_mut() {
                        states.push(next.clone());
                    }
                }
                Err(e) => {
                    trace.final_state = next;
                    return Err(RunError {
                        trace: Box::new(trace),
                        error: breakdown(k + 1, e),
                    });
                }
            }
        }
        state = next;
    }
    trace.final_state = state;
    Ok(trace)
}

/// Right-hand side of the S-APG rate bound on `f(x^k) − f*`:
///
/// ```text
/// (2L D² + 6βμ₀² log k)/(μ₀ k) + 2(L' + L/μ₀)(D² + (3βμ₀²/L) log k)/k²
/// ```
///
/// with `D = ‖x⁰ − x*‖`. For `L = 0` this is the smooth accelerated rate
/// `2L' D²/k²`.
pub fn theorem_bound(k: usize, mu0: f64, l: f64, l_prime: f64, beta: f64, x0_dist: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidIteration(k));
    }
    let kf = k as f64;
    let d2 = x0_dist * x0_dist;
    if l == 0.0 {
        return Ok(2.0 * l_prime * d2 / (kf * kf));
    }
    let log_k = kf.ln();
    let first = (2.0 * l * d2 + 6.0 * beta * mu0 * mu0 * log_k) / (mu0 * kf);
    let second = 2.0 * (l_prime + l / mu0) * (d2 + (3.0 * beta * mu0 * mu0 / l) * log_k) / (kf * kf);
    Ok(first + second)
}

/// A violated Lyapunov inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// The inequality between iterations `k` and `k+1` failed.
    pub k: usize,
    /// Amount by which the left side exceeds the right side.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    /// One entry per retained state.
    pub series: Vec<(usize, LyapunovDiagnostics)>,
    /// Failures of `E_{k+1} ≤ E_k + β a_{k+1} μ_k / L_k`.
    pub lemma_violations: Vec<Violation>,
    /// Failures of `Ẽ_{k+1} ≤ Ẽ_k`.
    pub monotone_violations: Vec<Violation>,
    pub tolerance: f64,
}

impl LyapunovReport {
    pub fn worst_lemma_excess(&self) -> f64 {
        self.lemma_violations.iter().map(|v| v.excess).fold(0.0, f64::max)
    }

    pub fn worst_monotone_excess(&self) -> f64 {
        self.monotone_violations.iter().map(|v| v.excess).fold(0.0, f64::max)
    }
}

/// Evaluates, for an S-APG trace with retained states of consecutive
/// iterations,
///
/// ```text
/// E_k = (a_k²/L_k)(f_k(x^k) − f_k(x*) + βμ_k) + ½‖z^k − x*‖²
/// Ẽ_k = (a_k²/L_k)(f(x^k) − f(x*) + βμ_k) + ½‖z^k − x*‖² − Σ_{l=1..k} β a_{l+1} μ_l / L_l
/// ```
///
/// and flags failures of the one-step inequalities at tolerance
/// `10⁻⁸ · max(1, E₀)`. `xstar` may be any feasible reference point; both
/// inequalities are then stated relative to it.
pub fn lyapunov_series<O>(trace: &IterateTrace, obj: &O, config: &SolverConfig, xstar: &[f64]) -> Result<LyapunovReport>
where
    O: SmoothedObjective + ?Sized,
{
    if trace.algorithm != Algorithm::Sapg {
        return Err(Error::InvalidParameter(
            "Lyapunov diagnostics apply to S-APG traces only".into(),
        ));
    }
    let states = trace.states.as_ref().ok_or(Error::MissingStates)?;
    if states.windows(2).any(|w| w[1].k != w[0].k + 1) || states.first().is_none_or(|s| s.k != 0) {
        return Err(Error::MissingStates);
    }
    check_dim(obj.dim(), xstar.len())?;
    let beta = obj.constants().beta;
    let f_star = obj.eval_nonsmooth(xstar)?;
    let x0_dist = dist(&states[0].x, xstar);

    let mut series = Vec::with_capacity(states.len());
    let mut increments = Vec::with_capacity(states.len());
    // Σ_{l=1..k} β a_{l+1} μ_l / L_l
    let mut tilde_sum = 0.0;
    for s in states {
        let a_next = next_a(s.a);
        let allowance = beta * a_next * s.mu / s.lk;
        if s.k >= 1 {
            tilde_sum += allowance;
        }
        let coef = s.a * s.a / s.lk;
        let half_d2 = 0.5 * dist(&s.z, xstar).powi(2);
        let e_k = if coef == 0.0 {
            half_d2
        } else {
            let gap_mu = obj.eval_smoothed(&s.x, s.mu)? - obj.eval_smoothed(xstar, s.mu)?;
            coef * (gap_mu + beta * s.mu) + half_d2
        };
        let etilde_k = if coef == 0.0 {
            half_d2 - tilde_sum
        } else {
            let gap = obj.eval_nonsmooth(&s.x)? - f_star;
            coef * (gap + beta * s.mu) + half_d2 - tilde_sum
        };
        let bound_rhs_k = if s.k >= 1 {
            theorem_bound(s.k, config.mu0, config.l, config.l_prime, beta, x0_dist)?
        } else {
            f64::INFINITY
        };
        series.push((
            s.k,
            LyapunovDiagnostics {
                e_k,
                etilde_k,
                bound_rhs_k,
            },
        ));
        increments.push(allowance);
    }

    let tolerance = 1e-8 * series.first().map_or(1.0, |(_, d)| d.e_k.max(1.0));
    let mut lemma_violations = Vec::new();
    let mut monotone_violations = Vec::new();
    for i in 0..series.len().saturating_sub(1) {
        let (k, cur) = series[i];
        let next = series[i + 1].1;
        let excess = next.e_k - (cur.e_k + increments[i]);
        if excess > tolerance {
            lemma_violations.push(Violation { k, excess });
        }
        let excess = next.etilde_k - cur.etilde_k;
        if excess > tolerance {
            monotone_violations.push(Violation { k, excess });
        }
    }
    Ok(LyapunovReport {
        series,
        lemma_violations,
        monotone_violations,
        tolerance,
    })
}

/// Copies Lyapunov values into the matching trace records.
pub fn attach_lyapunov(trace: &mut IterateTrace, report: &LyapunovReport) {
    for rec in &mut trace.records {
        if let Ok(i) = report.series.binary_search_by_key(&rec.k, |(k, _)| *k) {
            rec.lyapunov = Some(report.series[i].1);
        }
    }
}

/// High-accuracy reference point for experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub x: Vec<f64>,
    pub f: f64,
}

/// Long S-APG run (`iterations`) followed by `polish_steps` projected
/// gradient steps on `f_μ` with `μ = polish_mu`; returns the best point
/// evaluated.
pub fn surrogate_optimum<O, S>(
    config: &SolverConfig,
    obj: &O,
    set: &S,
    x0: &[f64],
    iterations: usize,
    polish_mu: f64,
    polish_steps: usize,
) -> std::result::Result<Surrogate, RunError>
where
    O: SmoothedObjective + ?Sized,
    S: FeasibleSet + ?Sized,
{
    let cfg = SolverConfig {
        algorithm: Algorithm::Sapg,
        max_iters: iterations,
        trace_every: 1,
        keep_states: false,
        record_time: false,
        ..config.clone()
    };
    let trace = run(&cfg, obj, set, x0)?;
    let (mut best_f, mut best_x) = trace.best.clone();
    let lk = cfg.l_prime + if cfg.l == 0.0 { 0.0 } else { cfg.l / polish_mu };
    let mut x = best_x.clone();
    for _ in 0..polish_steps {
        let Ok(g) = obj.grad_smoothed(&x, polish_mu) else { break };
        let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi / lk).collect();
        let Ok(next) = set.project(&trial) else { break };
        x = next;
        if let Ok(f) = obj.eval_nonsmooth(&x) {
            if f < best_f {
                best_f = f;
                best_x = x.clone();
            }
        }
    }
    Ok(Surrogate { x: best_x, f: best_f })
}
