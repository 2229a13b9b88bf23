//! Experiment configuration (TOML) and environment construction.
//!
//! Defaults reproduce the one-dimensional benchmark: 64 grid points on
//! `[0, 1.2]`, squared-exponential lengthscale 0.06, `B = 4`, `λ = 1`,
//! Gaussian noise `σ = 0.15`, 200 rounds, 10 seeds. Unknown keys are errors.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bandit::{BanditEnvironment, Method, MethodParams, Scenario};
use crate::confidence::EstimatorKind;
use crate::error::{Error, Result};
use crate::kernel::{build_features, project_payoff, uniform_grid, Benchmark, DEFAULT_TRUNCATION};
use crate::linalg::Vector;
use crate::models::ObservationModel;
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ObservationModel,
    pub methods: Vec<Method>,
    pub horizon: usize,
    pub alpha: f64,
    pub delta: f64,
    pub lambda: f64,
    #[serde(rename = "B")]
    pub bound: f64,
    /// Number of seeded repetitions; run `i` uses `base_seed + i`.
    pub seeds: usize,
    pub base_seed: u64,
    pub out: Option<PathBuf>,
    pub report_bounds: bool,
    pub classical_weights: bool,
    pub budget_secs: f64,
    pub environment: EnvironmentConfig,
    pub kernel: KernelConfig,
    pub grid: GridConfig,
    pub solver: SolverOptions,
    pub estimator: EstimatorConfig,
    pub baseline: BaselineConfig,
    pub calibration: CalibrationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ObservationModel::Gaussian { sigma: 0.15 },
            methods: vec![Method::LrWeighted, Method::Ay2011],
            horizon: 200,
            alpha: 0.1,
            delta: 0.1,
            lambda: 1.0,
            bound: 4.0,
            seeds: 10,
            base_seed: 0,
            out: None,
            report_bounds: false,
            classical_weights: false,
            budget_secs: 5.0,
            environment: EnvironmentConfig::default(),
            kernel: KernelConfig::default(),
            grid: GridConfig::default(),
            solver: SolverOptions::default(),
            estimator: EstimatorConfig::default(),
            baseline: BaselineConfig::default(),
            calibration: CalibrationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentKind {
    F41d,
    Camelback,
    /// Random unit actions in `dim` dimensions.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub benchmark: EnvironmentKind,
    /// Multiplies the benchmark payoff before it is represented in the
    /// feature space (keeps `‖θ⋆‖ ≤ B`).
    pub payoff_scale: f64,
    /// Largest tolerated grid residual of the payoff representation.
    pub residual_tol: f64,
    /// Ridge used to represent the payoff.
    pub fit_lambda: f64,
    /// `linear` only: dimension, number of actions, `‖θ⋆‖`, seed.
    pub dim: usize,
    pub actions: usize,
    pub theta_norm: f64,
    pub seed: u64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            benchmark: EnvironmentKind::F41d,
            payoff_scale: 1.0,
            residual_tol: 1e-4,
            fit_lambda: 1e-8,
            dim: 2,
            actions: 20,
            theta_norm: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// Squared exponential.
    Se,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub lengthscale: f64,
    /// Eigenvalues below this are dropped.
    pub truncation: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::Se,
            lengthscale: 0.06,
            truncation: DEFAULT_TRUNCATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Points per axis.
    pub size: usize,
    /// Per-axis `[lo, hi]`; defaults to the benchmark's domain.
    pub bounds: Option<Vec<[f64; 2]>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            size: 64,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Fit the estimator on the weighted loss.
    pub use_weights: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            kind: EstimatorKind::Ridge,
            use_weights: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub subexp: SubexpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubexpConfig {
    pub k: f64,
}

impl Default for SubexpConfig {
    fn default() -> Self {
        Self { k: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub runs: usize,
    pub horizon: usize,
    /// Levels to calibrate; defaults to `[alpha]`.
    pub alphas: Option<Vec<f64>>,
    pub scenarios: Vec<Scenario>,
    /// `‖θ⋆‖` of the random-parameter scenarios.
    pub theta_norm: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            runs: 200,
            horizon: 15,
            alphas: None,
            scenarios: Scenario::ALL.to_vec(),
            theta_norm: 1.0,
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be > 0, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.model
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        unit_interval("alpha", self.alpha)?;
        unit_interval("delta", self.delta)?;
        positive("lambda", self.lambda)?;
        positive("B", self.bound)?;
        positive("budget_secs", self.budget_secs)?;
        positive("kernel.lengthscale", self.kernel.lengthscale)?;
        positive("environment.payoff_scale", self.environment.payoff_scale)?;
        unit_interval("baseline.subexp.k", self.baseline.subexp.k)?;
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        for m in &self.methods {
            m.check_model(&self.model)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.estimator.kind == EstimatorKind::Vaw && self.model.as_glm().is_none() {
            return Err(Error::Config(format!(
                "estimator.kind = \"vaw\" needs a GLM, not {}",
                self.model.name()
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.grid.size == 0 {
            return Err(Error::Config("grid.size must be at least 1".into()));
        }
        if self.calibration.horizon == 0 {
            return Err(Error::Config(
                "calibration.horizon must be at least 1".into(),
            ));
        }
        for &a in self.calibration_alphas().iter() {
            unit_interval("calibration.alphas", a)?;
        }
        if self.environment.benchmark == EnvironmentKind::Linear
            && (self.environment.dim == 0 || self.environment.actions == 0)
        {
            return Err(Error::Config(
                "linear environment needs dim, actions ≥ 1".into(),
            ));
        }
        Ok(())
    }

    pub fn calibration_alphas(&self) -> Vec<f64> {
        self.calibration
            .alphas
            .clone()
            .unwrap_or_else(|| vec![self.alpha])
    }

    pub fn method_params(&self) -> MethodParams {
        MethodParams {
            lambda: self.lambda,
            radius: self.bound,
            alpha: self.alpha,
            delta: self.delta,
            subexp_k: self.baseline.subexp.k,
            estimator: self.estimator.kind,
            use_weights: self.estimator.use_weights,
            classical_weights: self.classical_weights,
            solver: self.solver,
            report_bounds: self.report_bounds,
            budget_secs: self.budget_secs,
        }
    }

    /// Builds the action set and `θ⋆`.
    pub fn environment(&self) -> Result<(BanditEnvironment, EnvironmentInfo)> {
        let env_cfg = &self.environment;
        let bench = match env_cfg.benchmark {
            EnvironmentKind::F41d => Benchmark::F41d,
            EnvironmentKind::Camelback => Benchmark::Camelback,
            EnvironmentKind::Linear => return self.linear_environment(),
        };
        let bounds: Vec<(f64, f64)> = match &self.grid.bounds {
            Some(b) => b.iter().map(|&[lo, hi]| (lo, hi)).collect(),
            None => bench.bounds(),
        };
        let grid = uniform_grid(&bounds, self.grid.size)?;
        let fmap = build_features(&grid, self.kernel.lengthscale, self.kernel.truncation)?;
        let values = grid
            .iter()
            .map(|x| Ok(env_cfg.payoff_scale * bench.eval(x)?))
            .collect::<Result<Vec<f64>>>()?;
        let payoff = project_payoff(&fmap, &values, env_cfg.fit_lambda, env_cfg.residual_tol)?;
        if payoff.norm > self.bound {
            return Err(Error::NormExceedsBound {
                norm: payoff.norm,
                bound: self.bound,
            });
        }
        let info = EnvironmentInfo {
            rank: fmap.rank(),
            feature_scale: fmap.scale,
            theta_norm: payoff.norm,
            residual: payoff.residual,
        };
        Ok((
            BanditEnvironment::new(fmap.features(), payoff.theta, self.model)?,
            info,
        ))
    }

    fn linear_environment(&self) -> Result<(BanditEnvironment, EnvironmentInfo)> {
        let e = &self.environment;
        let mut rng = ChaCha8Rng::seed_from_u64(e.seed);
        let unit = |rng: &mut ChaCha8Rng| loop {
            let v = Vector::from_fn(e.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let n = v.norm();
            if n > 1e-12 {
                return v / n;
            }
        };
        let actions: Vec<Vector> = (0..e.actions).map(|_| unit(&mut rng)).collect();
        let theta = unit(&mut rng) * e.theta_norm;
        if e.theta_norm > self.bound {
            return Err(Error::NormExceedsBound {
                norm: e.theta_norm,
                bound: self.bound,
            });
        }
        let info = EnvironmentInfo {
            rank: e.dim,
            feature_scale: 1.0,
            theta_norm: e.theta_norm,
            residual: 0.0,
        };
        Ok((BanditEnvironment::new(actions, theta, self.model)?, info))
    }
}

/// Facts about the constructed environment, reported in run headers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvironmentInfo {
    pub rank: usize,
    pub feature_scale: f64,
    pub theta_norm: f64,
    pub residual: f64,
}
