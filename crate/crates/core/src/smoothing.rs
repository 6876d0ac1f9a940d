//! Smoothed objectives.
//!
//! A [`SmoothedObjective`] bundles a convex, possibly nonsmooth `f`, a family
//! of smooth approximations `f_μ` with gradients, and the constants that
//! control them:
//!
//! * `∇f_μ` is `(L' + L/μ)`-Lipschitz on the feasible set,
//! * `0 ≤ f_{μ₂}(x) − f_{μ₁}(x) ≤ β (μ₁ − μ₂)` for `μ₁ ≥ μ₂ ≥ 0`, with `f_0 = f`.
//!
//! The main instance is [`SpectralLseObjective`], the log-sum-exp smoothing of
//! the largest eigenvalue of a matrix-valued map `A(x)`:
//!
//! ```text
//! f_μ(x) = μ log Σᵢ exp(λᵢ(A(x)) / μ) − μ log n
//! ```

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dist, log_sum_exp, softmax_weights, sym_eig, EigenDecomposition, SymMatrix};

/// Lipschitz and smoothing-gap constants of a smoothed objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConstants {
    /// Coefficient of the `1/μ` part of the gradient Lipschitz constant.
    pub l: f64,
    /// μ-independent part of the gradient Lipschitz constant.
    pub l_prime: f64,
    /// Smoothing gap: `f ≤ f_μ + β μ`.
    pub beta: f64,
}

impl SmoothingConstants {
    pub fn new(l: f64, l_prime: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("L", l), ("L'", l_prime), ("beta", beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self { l, l_prime, beta })
    }

    /// `L' + L/μ`.
    pub fn lipschitz(&self, mu: f64) -> f64 {
        if self.l == 0.0 {
            self.l_prime
        } else {
            self.l_prime + self.l / mu
        }
    }
}

/// A convex objective with a smoothing family.
///
/// Implementations are immutable after construction. `eval_smoothed(x, 0.0)`
/// must return `f(x)` itself.
pub trait SmoothedObjective: Send + Sync {
    fn dim(&self) -> usize;

    fn constants(&self) -> SmoothingConstants;

    /// The nonsmooth objective `f(x)`.
    fn eval_nonsmooth(&self, x: &[f64]) -> Result<f64>;

    /// `f_μ(x)`; `μ = 0` evaluates `f(x)`.
    fn eval_smoothed(&self, x: &[f64], mu: f64) -> Result<f64>;

    /// `∇f_μ(x)` for `μ > 0`.
    fn grad_smoothed(&self, x: &[f64], mu: f64) -> Result<Vec<f64>>;

    /// Some element of the subdifferential of `f` at `x`.
    fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl<T: SmoothedObjective + ?Sized> SmoothedObjective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn constants(&self) -> SmoothingConstants {
        (**self).constants()
    }
    fn eval_nonsmooth(&self, x: &[f64]) -> Result<f64> {
        (**self).eval_nonsmooth(x)
    }
    fn eval_smoothed(&self, x: &[f64], mu: f64) -> Result<f64> {
        (**self).eval_smoothed(x, mu)
    }
    fn grad_smoothed(&self, x: &[f64], mu: f64) -> Result<Vec<f64>> {
        (**self).grad_smoothed(x, mu)
    }
    fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).subgradient(x)
    }
}

/// A smooth symmetric-matrix-valued map `x ↦ A(x) ∈ 𝕊ⁿ`.
pub trait MatrixMap: Send + Sync {
    type Local: LocalMatrix;

    /// Dimension `m` of the design vector.
    fn dim(&self) -> usize;

    /// Order `n` of `A(x)`.
    fn order(&self) -> usize;

    /// Evaluates `A(x)` together with whatever is needed for its derivatives.
    fn linearize(&self, x: &[f64]) -> Result<Self::Local>;
}

/// `A(x)` and its partial derivatives at one fixed point.
pub trait LocalMatrix {
    fn dim(&self) -> usize;

    fn value(&self) -> &SymMatrix;

    /// `∂A/∂x_j`.
    fn derivative(&self, j: usize) -> Result<SymMatrix>;

    /// Component `j` of the result is `Σᵢ wᵢ uᵢᵀ (∂A/∂x_j) uᵢ`.
    fn weighted_forms(&self, vectors: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
        check_dim(vectors.len(), weights.len())?;
        (0..self.dim())
            .map(|j| {
                let d = self.derivative(j)?;
                Ok(vectors
                    .iter()
                    .zip(weights)
                    .map(|(u, &w)| w * d.quadratic_form(u))
                    .sum())
            })
            .collect()
    }
}

/// `A(x) = diag(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalMap {
    n: usize,
}

impl DiagonalMap {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self { n })
    }
}

pub struct DiagonalLocal {
    value: SymMatrix,
}

impl MatrixMap for DiagonalMap {
    type Local = DiagonalLocal;

    fn dim(&self) -> usize {
        self.n
    }

    fn order(&self) -> usize {
        self.n
    }

    fn linearize(&self, x: &[f64]) -> Result<DiagonalLocal> {
        check_dim(self.n, x.len())?;
        Ok(DiagonalLocal {
            value: SymMatrix::diagonal(x)?,
        })
    }
}

impl LocalMatrix for DiagonalLocal {
    fn dim(&self) -> usize {
        self.value.order()
    }

    fn value(&self) -> &SymMatrix {
        &self.value
    }

    fn derivative(&self, j: usize) -> Result<SymMatrix> {
        let n = self.value.order();
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, len: n });
        }
        let mut d = SymMatrix::zeros(n);
        d.set(j, j, 1.0);
        Ok(d)
    }

    fn weighted_forms(&self, vectors: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
        check_dim(vectors.len(), weights.len())?;
        Ok((0..self.dim())
            .map(|j| vectors.iter().zip(weights).map(|(u, &w)| w * u[j] * u[j]).sum())
            .collect())
    }
}

/// `f_μ(A)` from the eigenvalues of `A`, with `μ = 0` giving `λ₁(A)`.
pub fn spectral_value(eigenvalues: &[f64], mu: f64) -> Result<f64> {
    if mu == 0.0 {
        return eigenvalues
            .iter()
            .copied()
            .reduce(f64::max)
            .ok_or(Error::EmptyInput);
    }
    let n = eigenvalues.len() as f64;
    Ok(log_sum_exp(eigenvalues, mu)? - mu * n.ln())
}

/// Log-sum-exp smoothing of the maximum eigenvalue:
/// `μ log Σ exp(λᵢ(A)/μ) − μ log n`. `μ = 0` returns `λ₁(A)`.
pub fn spectral_f_mu(a: &SymMatrix, mu: f64) -> Result<f64> {
    let eig = sym_eig(a)?;
    spectral_value(&eig.values, mu)
}

/// `∇f_μ(x)` for `f_μ = spectral_f_mu ∘ A`.
pub fn spectral_grad_f_mu<M: MatrixMap>(x: &[f64], mu: f64, map: &M) -> Result<Vec<f64>> {
    let local = map.linearize(x)?;
    let eig = sym_eig(local.value())?;
    spectral_grad_from(&local, &eig, mu)
}

fn spectral_grad_from<L: LocalMatrix>(local: &L, eig: &EigenDecomposition, mu: f64) -> Result<Vec<f64>> {
    let weights = softmax_weights(&eig.values, mu)?;
    let n = eig.values.len();
    // Weights that underflow to zero contribute nothing.
    let (vectors, weights): (Vec<Vec<f64>>, Vec<f64>) = (0..n)
        .filter(|&i| weights[i] > 0.0)
        .map(|i| (eig.vector(i), weights[i]))
        .unzip();
    local.weighted_forms(&vectors, &weights)
}

/// Subgradient of `λ₁(A(·))` built from the first eigenvector returned by
/// [`sym_eig`].
pub fn subgradient_max_eig<L: LocalMatrix>(local: &L) -> Result<Vec<f64>> {
    let eig = sym_eig(local.value())?;
    local.weighted_forms(&[eig.vector(0)], &[1.0])
}

/// `μ log Σ exp(vᵢ/μ) − μ log n`.
pub fn finite_max_lse(values: &[f64], mu: f64) -> Result<f64> {
    spectral_value(values, mu)
}

/// Gradient of [`finite_max_lse`] with respect to `values`.
pub fn finite_max_lse_grad(values: &[f64], mu: f64) -> Result<Vec<f64>> {
    softmax_weights(values, mu)
}

/// Spectral log-sum-exp smoothing of `λ₁(A(x))`; `β = log n`.
#[derive(Debug, Clone)]
pub struct SpectralLseObjective<M> {
    map: M,
    constants: SmoothingConstants,
}

impl<M: MatrixMap> SpectralLseObjective<M> {
    /// `l` and `l_prime` are the user-supplied Lipschitz coefficients; `β`
    /// is set to `log n`.
    pub fn new(map: M, l: f64, l_prime: f64) -> Result<Self> {
        let beta = (map.order() as f64).ln();
        let constants = SmoothingConstants::new(l, l_prime, beta)?;
        Ok(Self { map, constants })
    }

    pub fn map(&self) -> &M {
        &self.map
    }
}

impl<M: MatrixMap> SmoothedObjective for SpectralLseObjective<M> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn constants(&self) -> SmoothingConstants {
        self.constants
    }

    fn eval_nonsmooth(&self, x: &[f64]) -> Result<f64> {
        self.eval_smoothed(x, 0.0)
    }

    fn eval_smoothed(&self, x: &[f64], mu: f64) -> Result<f64> {
        let local = self.map.linearize(x)?;
        spectral_f_mu(local.value(), mu)
    }

    fn grad_smoothed(&self, x: &[f64], mu: f64) -> Result<Vec<f64>> {
        spectral_grad_f_mu(x, mu, &self.map)
    }

    fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        subgradient_max_eig(&self.map.linearize(x)?)
    }
}

/// `f(x) = maxᵢ (aᵢᵀx + bᵢ)` smoothed by [`finite_max_lse`].
///
/// `L = maxᵢ ‖aᵢ‖²`, `L' = 0`, `β = log n`.
#[derive(Debug, Clone)]
pub struct MaxAffineObjective {
    slopes: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    constants: SmoothingConstants,
}

impl MaxAffineObjective {
    pub fn new(slopes: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let dim = slopes.first().ok_or(Error::EmptyInput)?.len();
        check_dim(slopes.len(), offsets.len())?;
        for s in &slopes {
            check_dim(dim, s.len())?;
        }
        let l = slopes.iter().map(|s| linalg::dot(s, s)).fold(0.0, f64::max);
        let beta = (slopes.len() as f64).ln();
        let constants = SmoothingConstants::new(l, 0.0, beta)?;
        Ok(Self {
            slopes,
            offsets,
            constants,
        })
    }

    fn pieces(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self
            .slopes
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| linalg::dot(a, x) + b)
            .collect())
    }

    fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for (a, &w) in self.slopes.iter().zip(weights) {
            for (gi, ai) in g.iter_mut().zip(a) {
                *gi += w * ai;
            }
        }
        g
    }
}

impl SmoothedObjective for MaxAffineObjective {
    fn dim(&self) -> usize {
        self.slopes[0].len()
    }

    fn constants(&self) -> SmoothingConstants {
        self.constants
    }

    fn eval_nonsmooth(&self, x: &[f64]) -> Result<f64> {
        finite_max_lse(&self.pieces(x)?, 0.0)
    }

    fn eval_smoothed(&self, x: &[f64], mu: f64) -> Result<f64> {
        finite_max_lse(&self.pieces(x)?, mu)
    }

    fn grad_smoothed(&self, x: &[f64], mu: f64) -> Result<Vec<f64>> {
        let w = finite_max_lse_grad(&self.pieces(x)?, mu)?;
        Ok(self.combine(&w))
    }

    fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.pieces(x)?;
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        let mut w = vec![0.0; p.len()];
        w[best] = 1.0;
        Ok(self.combine(&w))
    }
}

/// Smooth convex quadratic `½ (x − c)ᵀ H (x − c)`; every `f_μ` equals `f`.
///
/// `L = 0`, `β = 0`, `L' = λ_max(H)`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    hessian: SymMatrix,
    center: Vec<f64>,
    constants: SmoothingConstants,
}

impl QuadraticObjective {
    /// # Errors
    /// `InvalidParameter` if `H` has a negative eigenvalue.
    pub fn new(hessian: SymMatrix, center: Vec<f64>) -> Result<Self> {
        check_dim(hessian.order(), center.len())?;
        let eig = sym_eig(&hessian)?;
        let smallest = *eig.values.last().unwrap();
        if smallest < -1e-12 * eig.values[0].abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "quadratic is not convex (eigenvalue {smallest:e})"
            )));
        }
        let constants = SmoothingConstants::new(0.0, eig.values[0].max(0.0), 0.0)?;
        Ok(Self {
            hessian,
            center,
            constants,
        })
    }

    pub fn hessian(&self) -> &SymMatrix {
        &self.hessian
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn shifted(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.center.len(), x.len())?;
        Ok(x.iter().zip(&self.center).map(|(a, c)| a - c).collect())
    }
}

impl SmoothedObjective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn constants(&self) -> SmoothingConstants {
        self.constants
    }

    fn eval_nonsmooth(&self, x: &[f64]) -> Result<f64> {
        Ok(0.5 * self.hessian.quadratic_form(&self.shifted(x)?))
    }

    fn eval_smoothed(&self, x: &[f64], _mu: f64) -> Result<f64> {
        self.eval_nonsmooth(x)
    }

    fn grad_smoothed(&self, x: &[f64], _mu: f64) -> Result<Vec<f64>> {
        self.hessian.matvec(&self.shifted(x)?)
    }

    fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.grad_smoothed(x, 0.0)
    }
}

/// Observed gradient Lipschitz ratio between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzWitness {
    /// `‖∇f_μ(x) − ∇f_μ(y)‖ / ‖x − y‖`.
    pub observed: f64,
    /// `L' + L/μ` from the supplied constants.
    pub assumed: f64,
}

impl LipschitzWitness {
    pub fn violated(&self) -> bool {
        self.observed > self.assumed
    }
}

/// Samples the gradient Lipschitz ratio at `(x, y)`. Violations are meant to
/// be logged: the constants are estimates, not certified bounds.
pub fn lipschitz_witness<O: SmoothedObjective + ?Sized>(
    obj: &O,
    constants: SmoothingConstants,
    x: &[f64],
    y: &[f64],
    mu: f64,
) -> Result<LipschitzWitness> {
    let gx = obj.grad_smoothed(x, mu)?;
    let gy = obj.grad_smoothed(y, mu)?;
    let dx = dist(x, y);
    let observed = if dx == 0.0 { 0.0 } else { dist(&gx, &gy) / dx };
    Ok(LipschitzWitness {
        observed,
        assumed: constants.lipschitz(mu),
    })
}
