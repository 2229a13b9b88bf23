//! The weighted likelihood-ratio process and its confidence sets.
//!
//! `log R_t(θ) = Σ_s w_s·nll(x_sᵀθ, y_s) − Σ_s w_s·nll(x_sᵀθ̂_s, y_s)` and
//! `C_t = {θ : ‖θ‖ ≤ B, log R_t(θ) ≤ log(1/α)}`.

use std::sync::Arc;

use nalgebra::{Cholesky, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimators::{ftrl_fit_compiled, Estimate, Regularizer};
use crate::linalg::{Matrix, Vector};
use crate::loss::CompiledLoss;
use crate::models::{CurvatureConstants, ObservationModel};
use crate::solver::SolverOptions;

/// Snapshot schema version written by [`LrState::to_json`].
pub const SNAPSHOT_VERSION: u32 = 1;

/// How per-round likelihood weights are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `w_t = (1/L)/(1/L + bias bound at x_t)`.
    Adaptive,
    /// `w_t = 1`.
    Classical,
}

/// Which regularizer the estimator sequence uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Ridge,
    /// Adds the pending covariate's log-partition term (GLMs only).
    Vaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrConfig {
    pub model: ObservationModel,
    pub dim: usize,
    /// Parameter bound `B`.
    pub radius: f64,
    /// Regularization `λ` in `λ‖θ‖²`.
    pub lambda: f64,
    pub alpha: f64,
    pub weighting: Weighting,
    pub estimator: EstimatorKind,
    /// Whether the estimator minimizes the weighted (true) or the
    /// unweighted (false) cumulative loss.
    pub use_weights: bool,
    pub solver: SolverOptions,
}

impl LrConfig {
    pub fn new(model: ObservationModel, dim: usize, radius: f64, lambda: f64, alpha: f64) -> Self {
        Self {
            model,
            dim,
            radius,
            lambda,
            alpha,
            weighting: Weighting::Adaptive,
            estimator: EstimatorKind::Ridge,
            use_weights: true,
            solver: SolverOptions::default(),
        }
    }

    pub fn with_weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn with_estimator(mut self, estimator: EstimatorKind) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )))
            }
        };
        pos("radius", self.radius)?;
        pos("lambda", self.lambda)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if self.estimator == EstimatorKind::Vaw && self.model.as_glm().is_none() {
            return Err(Error::Unsupported(format!(
                "the VAW estimator needs a GLM, not {}",
                self.model.name()
            )));
        }
        Ok(())
    }
}

/// One round of the process. `theta_hat` was fitted on earlier rounds only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub x: Vector,
    pub y: f64,
    pub w: f64,
    pub theta_hat: Vector,
    /// `w·nll(xᵀθ̂, y)`
    pub est_nll: f64,
    /// Whether the estimator solve met its tolerance.
    pub converged: bool,
}

/// `C_t` membership reads `log R_t(θ) ≤ log_alpha_inv`, equivalently
/// `Σ w_s·nll(x_sᵀθ, y_s) ≤ cum_est_nll + log_alpha_inv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipThreshold {
    pub log_alpha_inv: f64,
    pub cum_est_nll: f64,
}

impl MembershipThreshold {
    /// Bound on the weighted loss `g(θ)` that defines the set.
    pub fn loss_level(&self) -> f64 {
        self.cum_est_nll + self.log_alpha_inv
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    config: LrConfig,
    rounds: Vec<Round>,
}

/// Full history of the process plus cached aggregates. Cloning is cheap for
/// the round list (shared); the cached losses are copied.
#[derive(Debug, Clone)]
pub struct LrState {
    config: LrConfig,
    curvature: CurvatureConstants,
    rounds: Arc<Vec<Round>>,
    cum_est_nll: f64,
    v_mu_lambda: Matrix,
    v_chol: Cholesky<f64, Dyn>,
    suff_stat: Vector,
    lr_loss: CompiledLoss,
    fit_loss: CompiledLoss,
    leader: Estimate,
}

impl LrState {
    pub fn new(config: LrConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let v = Matrix::identity(d, d) * config.lambda;
        let v_chol = Cholesky::new(v.clone()).ok_or(Error::Singular("λI"))?;
        Ok(Self {
            curvature: config.model.curvature(config.radius),
            rounds: Arc::new(Vec::new()),
            cum_est_nll: 0.0,
            v_mu_lambda: v,
            v_chol,
            suff_stat: Vector::zeros(d),
            lr_loss: CompiledLoss::new(config.model, d),
            fit_loss: CompiledLoss::new(config.model, d),
            leader: Estimate {
                theta: Vector::zeros(d),
                objective: 0.0,
                grad_norm: 0.0,
                iterations: 0,
                converged: true,
            },
            config,
        })
    }

    /// Rebuilds a state from recorded rounds without refitting their
    /// estimators.
    pub fn from_rounds(config: LrConfig, rounds: Vec<Round>) -> Result<Self> {
        let mut state = Self::new(config)?;
        for r in rounds {
            check_dim(state.config.dim, r.x.len())?;
            check_dim(state.config.dim, r.theta_hat.len())?;
            if !(r.w > 0.0 && r.w <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "weight {} outside (0, 1]",
                    r.w
                )));
            }
            state.absorb(r)?;
        }
        state.refresh_leader()?;
        Ok(state)
    }

    pub fn config(&self) -> &LrConfig {
        &self.config
    }

    pub fn curvature(&self) -> CurvatureConstants {
        self.curvature
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn cum_est_nll(&self) -> f64 {
        self.cum_est_nll
    }

    /// `Σ μ x_s x_sᵀ + λI`.
    pub fn v_mu_lambda(&self) -> &Matrix {
        &self.v_mu_lambda
    }

    /// `Σ w_s T(y_s) x_s`; zero for models without a sufficient statistic.
    pub fn suff_stat(&self) -> &Vector {
        &self.suff_stat
    }

    /// The weighted loss `g(θ) = Σ w_s·nll(x_sᵀθ, y_s)`.
    pub fn lr_loss(&self) -> &CompiledLoss {
        &self.lr_loss
    }

    /// Ridge FTRL estimate on all rounds so far (the next round's θ̂ for the
    /// ridge estimator).
    pub fn leader(&self) -> &Estimate {
        &self.leader
    }

    pub fn threshold(&self) -> MembershipThreshold {
        MembershipThreshold {
            log_alpha_inv: (1.0 / self.config.alpha).ln(),
            cum_est_nll: self.cum_est_nll,
        }
    }

    /// `2λB²·xᵀ(V^{μ;λ})⁻¹x`, an upper bound on the squared bias of the
    /// current estimator along `x`.
    pub fn bias_bound(&self, x: &Vector) -> Result<f64> {
        check_dim(self.config.dim, x.len())?;
        let z = self
            .v_chol
            .l_dirty()
            .solve_lower_triangular(x)
            .ok_or(Error::Singular("design matrix"))?;
        let b = self.config.radius;
        Ok(2.0 * self.config.lambda * b * b * z.norm_squared())
    }

    pub fn adaptive_weight(&self, x: &Vector) -> Result<f64> {
        match self.config.weighting {
            Weighting::Classical => {
                check_dim(self.config.dim, x.len())?;
                Ok(1.0)
            }
            Weighting::Adaptive => {
                let inv_l = 1.0 / self.curvature.l;
                Ok(inv_l / (inv_l + self.bias_bound(x)?))
            }
        }
    }

    /// Estimator for a round played at `x`, fitted on the rounds so far.
    pub fn estimator_for(&self, x: &Vector) -> Result<Estimate> {
        match self.config.estimator {
            EstimatorKind::Ridge => Ok(self.leader.clone()),
            EstimatorKind::Vaw => ftrl_fit_compiled(
                &self.fit_loss,
                &Regularizer::Vaw {
                    lambda: self.config.lambda,
                    pending_x: x.clone(),
                },
                self.config.radius,
                Some(&self.leader.theta),
                &self.config.solver,
            ),
        }
    }

    /// Plays `x`, observes `y`, and appends the round. The weight and the
    /// estimator depend only on past rounds and `x`.
    pub fn update(&mut self, x: &Vector, y: f64) -> Result<&Round> {
        check_dim(self.config.dim, x.len())?;
        if x.norm() > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "covariate norm {} exceeds 1",
                x.norm()
            )));
        }
        self.config.model.check_support(y)?;
        let w = self.adaptive_weight(x)?;
        let est = self.estimator_for(x)?;
        let est_nll = w * self.config.model.canonical_nll(x.dot(&est.theta), y)?;
        self.absorb(Round {
            x: x.clone(),
            y,
            w,
            theta_hat: est.theta,
            est_nll,
            converged: est.converged,
        })?;
        self.refresh_leader()?;
        Ok(self.rounds.last().expect("just pushed"))
    }

    fn absorb(&mut self, r: Round) -> Result<()> {
        let model = self.config.model;
        self.lr_loss.push(&r.x, r.y, r.w)?;
        let fit_w = if self.config.use_weights { r.w } else { 1.0 };
        self.fit_loss.push(&r.x, r.y, fit_w)?;
        if let Some(fam) = model.as_glm() {
            self.suff_stat
                .axpy(r.w * fam.sufficient_statistic(r.y)?, &r.x, 1.0);
        }
        self.v_mu_lambda.ger(self.curvature.mu, &r.x, &r.x, 1.0);
        self.v_chol = Cholesky::new(self.v_mu_lambda.clone()).ok_or(Error::Singular("V"))?;
        self.cum_est_nll += r.est_nll;
        Arc::make_mut(&mut self.rounds).push(r);
        Ok(())
    }

    fn refresh_leader(&mut self) -> Result<()> {
        let warm = self.leader.theta.clone();
        self.leader = ftrl_fit_compiled(
            &self.fit_loss,
            &Regularizer::Ridge {
                lambda: self.config.lambda,
            },
            self.config.radius,
            Some(&warm),
            &self.config.solver,
        )?;
        Ok(())
    }

    /// `log R_t(θ)`.
    pub fn log_ratio(&self, theta: &Vector) -> Result<f64> {
        check_dim(self.config.dim, theta.len())?;
        Ok(self.lr_loss.value(theta) - self.cum_est_nll)
    }

    /// `θ ∈ C_t` (boundary inclusive; points outside the ball are excluded).
    pub fn membership(&self, theta: &Vector) -> Result<bool> {
        if theta.norm() > self.config.radius * (1.0 + 1e-12) {
            check_dim(self.config.dim, theta.len())?;
            return Ok(false);
        }
        Ok(self.log_ratio(theta)? <= self.threshold().log_alpha_inv)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Snapshot {
            version: SNAPSHOT_VERSION,
            config: self.config.clone(),
            rounds: self.rounds.as_ref().clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(s)?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Unsupported(format!(
                "snapshot version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        Self::from_rounds(snap.config, snap.rounds)
    }
}

/// `log R_t(θ)` recomputed directly from a round list, term by term.
pub fn log_ratio_from_rounds(model: &ObservationModel, rounds: &[Round], theta: &Vector) -> f64 {
    rounds
        .iter()
        .map(|r| r.w * model.nll(r.x.dot(theta), r.y) - r.est_nll)
        .sum()
}
