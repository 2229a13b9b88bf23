//! Closed-form bounds from the theory, as executable inequalities.
//!
//! Regularizer conventions are stated per function: `ν` enters the
//! log-partition potential as `(ν/2)‖θ‖²`, while FTRL's `λ` enters as
//! `λ‖θ‖²`.

use crate::confidence::LrState;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{inv_quad_form, log_det_spd, Matrix, Vector};
use crate::models::ObservationModel;

/// Online log-determinant ledger for `V_t = Σ μ x xᵀ + λI`.
#[derive(Debug, Clone)]
pub struct GainLedger {
    pub v: Matrix,
    pub lambda: f64,
    pub mu: f64,
    /// `log det(V_t/λ)`
    pub gamma: f64,
    /// `Δγ_s = log(1 + μ‖x_s‖²_{V_{s−1}⁻¹})`
    pub increments: Vec<f64>,
}

impl GainLedger {
    pub fn new(dim: usize, mu: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "information gain needs μ, λ > 0 (got {mu}, {lambda})"
            )));
        }
        Ok(Self {
            v: Matrix::identity(dim, dim) * lambda,
            lambda,
            mu,
            gamma: 0.0,
            increments: Vec::new(),
        })
    }

    pub fn push(&mut self, x: &Vector) -> Result<f64> {
        check_dim(self.v.nrows(), x.len())?;
        let q = inv_quad_form(&self.v, x).ok_or(Error::Singular("gain ledger"))?;
        let inc = (self.mu * q).ln_1p();
        self.v.ger(self.mu, x, x, 1.0);
        self.gamma += inc;
        self.increments.push(inc);
        Ok(inc)
    }

    /// `log det(V/λ)` recomputed from scratch.
    pub fn log_det_gamma(&self) -> f64 {
        let d = self.v.nrows() as f64;
        log_det_spd(&self.v).expect("V is positive definite") - d * self.lambda.ln()
    }
}

/// `γ = log det(Σ (μ/λ) x xᵀ + I)` with per-step increments.
pub fn information_gain(xs: &[Vector], dim: usize, mu: f64, lambda: f64) -> Result<GainLedger> {
    let mut g = GainLedger::new(dim, mu, lambda)?;
    for x in xs {
        g.push(x)?;
    }
    Ok(g)
}

/// Bregman divergence `D_Z(θ₁, θ₂)` of `Z(θ) = Σ w_s A(x_sᵀθ) + (ν/2)‖θ‖²`.
pub fn bregman_divergence(
    model: &ObservationModel,
    xs: &[Vector],
    ws: &[f64],
    nu: f64,
    theta1: &Vector,
    theta2: &Vector,
) -> Result<f64> {
    let fam = model.as_glm().ok_or_else(|| {
        Error::Unsupported(format!("{} has no log-partition function", model.name()))
    })?;
    if xs.len() != ws.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ws.len(),
        });
    }
    check_dim(theta1.len(), theta2.len())?;
    let mut d = 0.0;
    for (x, &w) in xs.iter().zip(ws) {
        check_dim(theta1.len(), x.len())?;
        let (z1, z2) = (x.dot(theta1), x.dot(theta2));
        d += w
            * (fam.log_partition(z1)
                - fam.log_partition(z2)
                - fam.log_partition_d1(z2) * (z1 - z2));
    }
    Ok(d + 0.5 * nu * (theta1 - theta2).norm_squared())
}

/// `∇Z(θ) = Σ w_s A'(x_sᵀθ) x_s + νθ`.
pub fn potential_gradient(
    model: &ObservationModel,
    xs: &[Vector],
    ws: &[f64],
    nu: f64,
    theta: &Vector,
) -> Result<Vector> {
    let fam = model.as_glm().ok_or_else(|| {
        Error::Unsupported(format!("{} has no log-partition function", model.name()))
    })?;
    let mut g = theta * nu;
    for (x, &w) in xs.iter().zip(ws) {
        g.axpy(w * fam.log_partition_d1(x.dot(theta)), x, 1.0);
    }
    Ok(g)
}

/// `Γ = log det(W/ν)` with `W = Σ w x xᵀ/σ² + νI`; only the Gaussian
/// likelihood has this closed form.
pub fn gaussian_bregman_gain(
    model: &ObservationModel,
    xs: &[Vector],
    ws: &[f64],
    nu: f64,
) -> Result<f64> {
    let sigma = match model {
        ObservationModel::Gaussian { sigma } => *sigma,
        other => {
            return Err(Error::Unsupported(format!(
                "the Bregman information gain has no closed form for the {} model",
                other.name()
            )))
        }
    };
    let d = xs.first().map_or(0, |x| x.len());
    if d == 0 {
        return Ok(0.0);
    }
    let mut w_mat = Matrix::identity(d, d) * nu;
    for (x, &w) in xs.iter().zip(ws) {
        w_mat.ger(w / (sigma * sigma), x, x, 1.0);
    }
    Ok(log_det_spd(&w_mat).ok_or(Error::Singular("W"))? - d as f64 * nu.ln())
}

/// Realized regret of the estimator game against `θ⋆`:
/// `Σ w_s nll(θ̂_s) − Σ w_s nll(θ⋆) = −log R_t(θ⋆)`.
pub fn estimator_regret(state: &LrState, theta_star: &Vector) -> Result<f64> {
    Ok(-state.log_ratio(theta_star)?)
}

/// Bregman-ball radius for members of the set:
/// `(4L/μ)(log(1/α) + νB² + Γ) + 2log(1/δ) + 2R`.
#[allow(clippy::too_many_arguments)]
pub fn theorem3_rhs(
    l: f64,
    mu: f64,
    alpha: f64,
    delta: f64,
    nu: f64,
    b: f64,
    gain: f64,
    regret: f64,
) -> f64 {
    let xi = (1.0 / alpha).ln() + nu * b * b + gain;
    4.0 * l / mu * xi + 2.0 * (1.0 / delta).ln() + 2.0 * regret
}

/// FTRL regret bound with `ψ = λ‖θ‖²`:
/// `λB² + (L/μ)(γ + 2log(1/δ)) + (2L²B²/μ)γ`.
pub fn theorem4_rhs(lambda: f64, b: f64, l: f64, mu: f64, gamma: f64, delta: f64) -> f64 {
    lambda * b * b + l / mu * (gamma + 2.0 * (1.0 / delta).ln()) + 2.0 * l * l * b * b / mu * gamma
}

/// VAW regret bound:
/// `λB² + (2L/μ)(γ + log(1/δ)) + (L/μ)Σ B²/(1/L + bias²_s)·Δγ_s`.
#[allow(clippy::too_many_arguments)]
pub fn theorem5_rhs(
    lambda: f64,
    b: f64,
    l: f64,
    mu: f64,
    gamma: f64,
    delta: f64,
    bias: &[f64],
    gain_increments: &[f64],
) -> Result<f64> {
    if bias.len() != gain_increments.len() {
        return Err(Error::DimensionMismatch {
            expected: bias.len(),
            found: gain_increments.len(),
        });
    }
    let sum: f64 = bias
        .iter()
        .zip(gain_increments)
        .map(|(&bs, &dg)| {
            if bs.is_infinite() {
                0.0
            } else {
                b * b / (1.0 / l + bs) * dg
            }
        })
        .sum();
    Ok(lambda * b * b + 2.0 * l / mu * (gamma + (1.0 / delta).ln()) + l / mu * sum)
}

/// `β_t = 16log(1/δ) + 12λB² + 8(B²/σ² + 1)γ`.
pub fn appd_beta(lambda: f64, b: f64, sigma: f64, gamma: f64, delta: f64) -> f64 {
    16.0 * (1.0 / delta).ln()
        + 12.0 * lambda * b * b
        + 8.0 * (b * b / (sigma * sigma) + 1.0) * gamma
}

/// Linear-bandit regret bound
/// `6√(tγ)(σ√(log(1/δ) + γ) + σ√λ·B + B√γ)`.
pub fn theorem6_rhs(t: usize, gamma: f64, sigma: f64, lambda: f64, b: f64, delta: f64) -> f64 {
    let t = t as f64;
    6.0 * (t * gamma).sqrt()
        * (sigma * ((1.0 / delta).ln() + gamma).sqrt()
            + sigma * lambda.sqrt() * b
            + b * gamma.sqrt())
}

/// Both sides of the elliptical potential lemma:
/// `Σ‖u_s‖²_{V̄_s⁻¹}` with `V̄_s = λI + Σ_{i≤s} u_i u_iᵀ`, and
/// `log(det V̄_t / det λI)`.
pub fn elliptical_potential_check(us: &[Vector], lambda: f64) -> Result<(f64, f64)> {
    let Some(first) = us.first() else {
        return Ok((0.0, 0.0));
    };
    let d = first.len();
    let mut v = Matrix::identity(d, d) * lambda;
    let mut lhs = 0.0;
    for u in us {
        check_dim(d, u.len())?;
        v.ger(1.0, u, u, 1.0);
        lhs += inv_quad_form(&v, u).ok_or(Error::Singular("potential"))?;
    }
    let rhs = log_det_spd(&v).ok_or(Error::Singular("potential"))? - d as f64 * lambda.ln();
    Ok((lhs, rhs))
}

/// `d·log(r²t/λ + 1)`.
pub fn elliptical_potential_cap(d: usize, r: f64, t: usize, lambda: f64) -> f64 {
    d as f64 * (r * r * t as f64 / lambda + 1.0).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, d: usize) -> Vector {
        let mut v = Vector::zeros(d);
        v[i] = 1.0;
        v
    }

    #[test]
    fn information_gain_examples() {
        let g = information_gain(&[e(0, 2)], 2, 1.0, 1.0).unwrap();
        assert!((g.gamma - 2f64.ln()).abs() < 1e-15);
        assert_eq!(information_gain(&[], 2, 1.0, 1.0).unwrap().gamma, 0.0);
    }

    #[test]
    fn formula_values() {
        let t3 = theorem3_rhs(1.0, 1.0, 0.1, 0.1, 1.0, 1.0, 0.0, 0.0);
        assert!((t3 - 17.8155).abs() < 1e-4);
        let t4 = theorem4_rhs(1.0, 1.0, 1.0, 1.0, 1.0, 0.1);
        assert!((t4 - 8.6052).abs() < 1e-4);
        let t5 = theorem5_rhs(
            1.0,
            1.0,
            1.0,
            1.0,
            2f64.ln(),
            (-1f64).exp(),
            &[1.0],
            &[2f64.ln()],
        )
        .unwrap();
        // 1 + 2(ln 2 + 1) + ½·ln 2
        assert!((t5 - 4.7329).abs() < 1e-4);
        assert!((appd_beta(1.0, 1.0, 1.0, 1.0, 0.1) - 64.841).abs() < 1e-3);
        assert_eq!(appd_beta(0.0, 1.0, 1.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn potential_two_steps() {
        let (lhs, rhs) = elliptical_potential_check(&[e(0, 2), e(0, 2)], 1.0).unwrap();
        assert!((lhs - (0.5 + 1.0 / 3.0)).abs() < 1e-14);
        assert!((rhs - 3f64.ln()).abs() < 1e-14);
        assert_eq!(elliptical_potential_check(&[], 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn non_gaussian_gain_is_refused() {
        let err = gaussian_bregman_gain(&ObservationModel::Poisson, &[e(0, 2)], &[1.0], 1.0);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }
}
