//! Ellipsoidal confidence sets used as comparison baselines.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{inv_quad_form, log_det_spd, solve_spd, Matrix, Vector};
use crate::models::EULER_GAMMA;

/// `{θ : ‖θ − center‖²_V ≤ beta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSet {
    pub center: Vector,
    pub v: Matrix,
    /// Squared radius.
    pub beta: f64,
    /// Whether the radius carries a coverage guarantee.
    pub provable: bool,
}

impl EllipsoidSet {
    pub fn contains(&self, theta: &Vector) -> Result<bool> {
        check_dim(self.center.len(), theta.len())?;
        let d = theta - &self.center;
        Ok(d.dot(&(&self.v * &d)) <= self.beta)
    }
}

/// `xᵀcenter + √β·‖x‖_{V⁻¹}`.
pub fn ellipsoid_ucb(set: &EllipsoidSet, x: &Vector) -> Result<f64> {
    check_dim(set.center.len(), x.len())?;
    let q = inv_quad_form(&set.v, x).ok_or(Error::Singular("ellipsoid matrix"))?;
    Ok(x.dot(&set.center) + set.beta.max(0.0).sqrt() * q.sqrt())
}

fn log_det_ratio(v: &Matrix, lambda: f64) -> Result<f64> {
    let d = v.nrows() as f64;
    Ok(log_det_spd(v).ok_or(Error::Singular("design matrix"))? - d * lambda.ln())
}

/// Sub-Gaussian radius `√β = √λ·B + σ√(2log(1/δ) + log(det V/det λI))`
/// for `V = Σ x xᵀ + λI`.
pub fn ay_radius(v: &Matrix, lambda: f64, sigma: f64, b: f64, delta: f64) -> Result<f64> {
    let ld = log_det_ratio(v, lambda)?;
    Ok(lambda.sqrt() * b + sigma * (2.0 * (1.0 / delta).ln() + ld).sqrt())
}

/// Sub-exponential radius for `V = Σ x xᵀ/ν² + λI`:
/// `√λ‖θ⋆‖ + √λkK + (d/(√λkK))log(1/(1−k)) + (1/(√λkK))log(det(V)^{1/2}/(δ·det(√λI)))`.
pub fn subexp_radius(
    v: &Matrix,
    lambda: f64,
    k: f64,
    big_k: f64,
    delta: f64,
    theta_norm_bound: f64,
) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "k must lie in (0, 1), got {k}"
        )));
    }
    let d = v.nrows() as f64;
    let sl = lambda.sqrt();
    let log_det_v = log_det_spd(v).ok_or(Error::Singular("design matrix"))?;
    let log_term = 0.5 * log_det_v - delta.ln() - 0.5 * d * lambda.ln();
    let scale = sl * k * big_k;
    Ok(sl * theta_norm_bound + scale + d / scale * (1.0 / (1.0 - k)).ln() + log_term / scale)
}

/// Heuristic squared radius `2log(1/δ)` (no coverage guarantee).
pub fn heuristic_radius(delta: f64) -> f64 {
    2.0 * (1.0 / delta).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMetric {
    /// Curvature at the estimate, `exp(θ̂ᵀx)`.
    Laplace,
    /// Worst-case curvature `exp(B)`.
    WorstCase,
}

/// `Σ c_s x_s x_sᵀ + λI` with `c_s = exp(θ̂ᵀx_s)` or `exp(B)`.
pub fn poisson_heuristic_v(
    kind: PoissonMetric,
    xs: &[Vector],
    theta_hat: &Vector,
    b: f64,
    lambda: f64,
) -> Result<Matrix> {
    let d = theta_hat.len();
    let mut v = Matrix::identity(d, d) * lambda;
    for x in xs {
        check_dim(d, x.len())?;
        let c = match kind {
            PoissonMetric::Laplace => x.dot(theta_hat).exp(),
            PoissonMetric::WorstCase => b.exp(),
        };
        v.ger(c, x, x, 1.0);
    }
    Ok(v)
}

/// Regularized least squares `(Σ w x xᵀ + λI)⁻¹ Σ w x y` (`w` is a common
/// scale applied to every observation).
pub fn regularized_least_squares(
    xs: &[Vector],
    ys: &[f64],
    scale: f64,
    lambda: f64,
    dim: usize,
) -> Result<(Vector, Matrix)> {
    let mut v = Matrix::identity(dim, dim) * lambda;
    let mut rhs = Vector::zeros(dim);
    for (x, &y) in xs.iter().zip(ys) {
        check_dim(dim, x.len())?;
        v.ger(scale, x, x, 1.0);
        rhs.axpy(scale * y, x, 1.0);
    }
    let center = solve_spd(&v, &rhs).ok_or(Error::Singular("least squares"))?;
    Ok((center, v))
}

/// Log-survival-time regression view of a Weibull observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelObservation {
    /// `log t`
    pub y: f64,
    /// `−p·log t − γ_EM`, whose conditional mean is `xᵀθ`.
    pub response: f64,
}

pub fn gumbel_transform(t: f64, p: f64) -> Result<GumbelObservation> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain {
            model: "weibull",
            value: t,
        });
    }
    let y = t.ln();
    Ok(GumbelObservation {
        y,
        response: -p * y - EULER_GAMMA,
    })
}
