//! Regularized maximum-likelihood (FTRL) estimators over the ball `‖θ‖ ≤ B`.
//!
//! Regularizer convention: `ψ(θ) = λ‖θ‖²`, so its gradient is `2λθ`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{solve_spd, Matrix, Vector};
use crate::loss::{CompiledLoss, Observation};
use crate::models::{GlmFamily, ObservationModel, LAPLACE_SMOOTHING};
use crate::solver::{minimize_on_ball, BallObjective, SolverOptions};

pub use crate::solver::SolverOptions as FitOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Regularizer {
    /// `λ‖θ‖²`
    Ridge { lambda: f64 },
    /// `λ‖θ‖² + A(x_pendingᵀθ)`, the Vovk–Azoury–Warmuth forecaster.
    Vaw { lambda: f64, pending_x: Vector },
}

impl Regularizer {
    pub fn lambda(&self) -> f64 {
        match self {
            Regularizer::Ridge { lambda } | Regularizer::Vaw { lambda, .. } => *lambda,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let lambda = self.lambda();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        if let Regularizer::Vaw { pending_x, .. } = self {
            check_dim(dim, pending_x.len())?;
            if pending_x.norm() > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "pending covariate norm {} exceeds 1",
                    pending_x.norm()
                )));
            }
        }
        Ok(())
    }
}

/// An FTRL solution with solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub theta: Vector,
    /// Unsmoothed objective at `theta`.
    pub objective: f64,
    /// Projected-gradient norm at `theta`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Continuation schedule for the Huber half-width of Laplace losses.
pub fn smoothing_schedule(model: &ObservationModel) -> Vec<f64> {
    match model {
        ObservationModel::Laplace { b } => {
            let mut s: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
                .iter()
                .map(|f| f * b)
                .filter(|&e| e > LAPLACE_SMOOTHING)
                .collect();
            s.push(LAPLACE_SMOOTHING);
            s
        }
        _ => vec![0.0],
    }
}

struct FtrlObjective<'a> {
    loss: &'a CompiledLoss,
    lambda: f64,
    pending: Option<(GlmFamily, &'a Vector)>,
}

impl FtrlObjective<'_> {
    fn extra(&self, theta: &Vector) -> f64 {
        let mut v = self.lambda * theta.norm_squared();
        if let Some((fam, x)) = self.pending {
            v += fam.log_partition(x.dot(theta));
        }
        v
    }

    fn exact_value(&self, theta: &Vector) -> f64 {
        self.loss.value(theta) + self.extra(theta)
    }
}

impl BallObjective for FtrlObjective<'_> {
    fn dim(&self) -> usize {
        self.loss.dim()
    }

    fn value(&self, x: &Vector, smoothing: f64) -> f64 {
        self.loss.smoothed_value(x, smoothing) + self.extra(x)
    }

    fn value_grad_hess(&self, x: &Vector, smoothing: f64) -> (f64, Vector, Matrix) {
        let (mut f, mut g, mut h) = self.loss.value_grad_hess(x, smoothing);
        f += self.lambda * x.norm_squared();
        g.axpy(2.0 * self.lambda, x, 1.0);
        for i in 0..h.nrows() {
            h[(i, i)] += 2.0 * self.lambda;
        }
        if let Some((fam, p)) = self.pending {
            let z = p.dot(x);
            f += fam.log_partition(z);
            g.axpy(fam.log_partition_d1(z), p, 1.0);
            h.ger(fam.log_partition_d2(z), p, p, 1.0);
        }
        (f, g, h)
    }
}

/// FTRL fit on a pre-compiled loss.
pub fn ftrl_fit_compiled(
    loss: &CompiledLoss,
    reg: &Regularizer,
    radius: f64,
    warm_start: Option<&Vector>,
    opts: &SolverOptions,
) -> Result<Estimate> {
    let dim = loss.dim();
    reg.validate(dim)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be > 0, got {radius}"
        )));
    }
    let pending = match reg {
        Regularizer::Ridge { .. } => None,
        Regularizer::Vaw { pending_x, .. } => {
            let fam = loss.model().as_glm().ok_or_else(|| {
                Error::Unsupported(format!(
                    "the VAW regularizer needs a log-partition function; {} has none",
                    loss.model().name()
                ))
            })?;
            Some((fam, pending_x))
        }
    };
    if loss.is_empty() && pending.is_none() {
        return Ok(Estimate {
            theta: Vector::zeros(dim),
            objective: 0.0,
            grad_norm: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let x0 = match warm_start {
        Some(w) => {
            check_dim(dim, w.len())?;
            w.clone()
        }
        None => Vector::zeros(dim),
    };
    let obj = FtrlObjective {
        loss,
        lambda: reg.lambda(),
        pending,
    };
    let sol = minimize_on_ball(&obj, x0, radius, &smoothing_schedule(loss.model()), opts);
    Ok(Estimate {
        objective: obj.exact_value(&sol.x),
        theta: sol.x,
        grad_norm: sol.residual,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Minimizes `Σ w_s·nll(x_sᵀθ, y_s) + ψ(θ)` over `‖θ‖ ≤ radius`.
pub fn ftrl_fit(
    model: &ObservationModel,
    dim: usize,
    history: &[Observation],
    reg: &Regularizer,
    radius: f64,
    warm_start: Option<&Vector>,
    opts: &SolverOptions,
) -> Result<Estimate> {
    model.validate()?;
    let loss = CompiledLoss::from_observations(*model, dim, history)?;
    ftrl_fit_compiled(&loss, reg, radius, warm_start, opts)
}

/// `(Σ w x xᵀ/σ² + 2λI)⁻¹ Σ w x y/σ²`, the unconstrained Gaussian ridge fit.
pub fn ridge_closed_form(
    history: &[Observation],
    dim: usize,
    sigma: f64,
    lambda: f64,
) -> Result<Vector> {
    let s2 = sigma * sigma;
    let mut a = Matrix::identity(dim, dim) * (2.0 * lambda);
    let mut b = Vector::zeros(dim);
    for o in history {
        check_dim(dim, o.x.len())?;
        a.ger(o.w / s2, &o.x, &o.x, 1.0);
        b.axpy(o.w * o.y / s2, &o.x, 1.0);
    }
    if history.is_empty() {
        return Ok(b);
    }
    solve_spd(&a, &b).ok_or(Error::Singular("ridge normal equations"))
}
