//! The UCB game loop, pseudo-regret accounting, the calibration protocol and
//! multi-seed sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    ay_radius, ellipsoid_ucb, gumbel_transform, heuristic_radius, regularized_least_squares,
    subexp_radius, EllipsoidSet,
};
use crate::confidence::{EstimatorKind, LrConfig, LrState, Weighting};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::models::ObservationModel;
use crate::oracles::{theorem4_rhs, theorem6_rhs, GainLedger};
use crate::solver::SolverOptions;
use crate::ucb::{UcbSolution, UcbSolver};

/// Random-stream indices derived from one run seed; every method sees the
/// same noise for the same seed.
const NOISE_STREAM: u64 = 0;
const ACTION_STREAM: u64 = 1;
const THETA_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// A confidence-set construction driving UCB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LrWeighted,
    LrClassical,
    #[serde(rename = "ay2011")]
    Ay2011,
    Subexp,
    Heuristic,
    PoissonLaplace,
    PoissonWorstcase,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::LrWeighted,
        Method::LrClassical,
        Method::Ay2011,
        Method::Subexp,
        Method::Heuristic,
        Method::PoissonLaplace,
        Method::PoissonWorstcase,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::LrWeighted => "lr_weighted",
            Method::LrClassical => "lr_classical",
            Method::Ay2011 => "ay2011",
            Method::Subexp => "subexp",
            Method::Heuristic => "heuristic",
            Method::PoissonLaplace => "poisson_laplace",
            Method::PoissonWorstcase => "poisson_worstcase",
        }
    }

    /// Whether the set carries a coverage guarantee.
    pub fn provable(&self) -> bool {
        matches!(
            self,
            Method::LrWeighted | Method::LrClassical | Method::Ay2011 | Method::Subexp
        )
    }

    pub fn is_lr(&self) -> bool {
        matches!(self, Method::LrWeighted | Method::LrClassical)
    }

    /// Rejects method/model pairs without a defined construction.
    pub fn check_model(&self, model: &ObservationModel) -> Result<()> {
        let ok = match self {
            Method::LrWeighted | Method::LrClassical | Method::Heuristic => true,
            Method::Ay2011 => matches!(model, ObservationModel::Gaussian { .. }),
            Method::Subexp => subexp_scale(model).is_some(),
            Method::PoissonLaplace | Method::PoissonWorstcase => {
                matches!(model, ObservationModel::Poisson)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "method {} is not defined for the {} model",
                self.name(),
                model.name()
            )))
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Sub-exponential scale `ν` of the regression noise: Gaussian `σ`,
/// Laplace `√2·b`, Weibull (log-time view) `p`.
pub fn subexp_scale(model: &ObservationModel) -> Option<f64> {
    match *model {
        ObservationModel::Gaussian { sigma } => Some(sigma),
        ObservationModel::Laplace { b } => Some(std::f64::consts::SQRT_2 * b),
        ObservationModel::Weibull { p } => Some(p),
        ObservationModel::Poisson | ObservationModel::Bernoulli => None,
    }
}

/// Expected Fisher information of one observation at `z`.
fn fisher_information(model: &ObservationModel, z: f64) -> f64 {
    match *model {
        ObservationModel::Gaussian { sigma } => 1.0 / (sigma * sigma),
        ObservationModel::Laplace { b } => 1.0 / (b * b),
        ObservationModel::Weibull { .. } => 1.0,
        ObservationModel::Poisson | ObservationModel::Bernoulli => {
            model.as_glm().expect("GLM").log_partition_d2(z)
        }
    }
}

/// Finite action set with a known parameter.
#[derive(Debug, Clone)]
pub struct BanditEnvironment {
    pub actions: Vec<Vector>,
    pub theta_star: Vector,
    pub model: ObservationModel,
    /// `max_x xᵀθ⋆`
    pub optimal_value: f64,
}

impl BanditEnvironment {
    pub fn new(actions: Vec<Vector>, theta_star: Vector, model: ObservationModel) -> Result<Self> {
        model.validate()?;
        if actions.is_empty() {
            return Err(Error::InvalidParameter("empty action set".into()));
        }
        for a in &actions {
            check_dim(theta_star.len(), a.len())?;
            if a.norm() > 1.0 + 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "action norm {} exceeds 1",
                    a.norm()
                )));
            }
        }
        let optimal_value = actions
            .iter()
            .map(|a| a.dot(&theta_star))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            actions,
            theta_star,
            model,
            optimal_value,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn mean_payoff(&self, action: usize) -> f64 {
        self.actions[action].dot(&self.theta_star)
    }

    /// Same actions and noise model with another parameter.
    pub fn with_theta(&self, theta_star: Vector) -> Result<Self> {
        Self::new(self.actions.clone(), theta_star, self.model)
    }
}

/// Parameters shared by every method of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub lambda: f64,
    /// Parameter bound `B`.
    pub radius: f64,
    /// Level of the likelihood-ratio sets.
    pub alpha: f64,
    /// Level of the baseline sets.
    pub delta: f64,
    /// Sub-exponential baseline's `k ∈ (0, 1)`.
    pub subexp_k: f64,
    pub estimator: EstimatorKind,
    pub use_weights: bool,
    /// Forces `w ≡ 1` for every likelihood-ratio method.
    pub classical_weights: bool,
    pub solver: SolverOptions,
    pub report_bounds: bool,
    /// Per-round wall-time budget in seconds.
    pub budget_secs: f64,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            radius: 4.0,
            alpha: 0.1,
            delta: 0.1,
            subexp_k: 0.5,
            estimator: EstimatorKind::Ridge,
            use_weights: true,
            classical_weights: false,
            solver: SolverOptions::default(),
            report_bounds: false,
            budget_secs: 5.0,
        }
    }
}

/// How actions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionRule {
    /// Optimism over the method's own confidence set.
    Ucb,
    /// Uniformly random actions, independent of the data.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub action: usize,
    pub reward: f64,
    /// `max_x xᵀθ⋆ − x_tᵀθ⋆`
    pub regret: f64,
    pub cum_regret: f64,
    /// Likelihood-ratio sets: loss level `Σ w·nll(θ̂) + log(1/α)`;
    /// ellipsoids: squared radius `β`.
    pub threshold: f64,
    pub weight: f64,
    /// `θ⋆` has been in every set up to and including this round.
    pub covered: bool,
    pub bound_t4: Option<f64>,
    pub bound_t6: Option<f64>,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub seed: u64,
    pub method: Method,
    pub rounds: Vec<RoundRecord>,
}

impl RunResult {
    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn covered(&self) -> bool {
        self.rounds.last().is_none_or(|r| r.covered)
    }
}

/// Confidence set maintained by one method.
enum Engine {
    /// The set plus each action's latest UCB solution, reused as warm starts.
    Lr(Box<LrState>, Vec<Option<UcbSolution>>),
    Ellipsoid(Box<EllipsoidEngine>),
}

struct EllipsoidEngine {
    method: Method,
    model: ObservationModel,
    dim: usize,
    params: MethodParams,
    xs: Vec<Vector>,
    responses: Vec<f64>,
    /// Penalized maximum-likelihood fit for the Fisher-metric sets.
    mle: Option<LrState>,
    set: EllipsoidSet,
}

impl EllipsoidEngine {
    fn new(
        method: Method,
        model: ObservationModel,
        dim: usize,
        params: &MethodParams,
    ) -> Result<Self> {
        let mle = match method {
            Method::Heuristic | Method::PoissonLaplace | Method::PoissonWorstcase => {
                let mut cfg = LrConfig::new(model, dim, params.radius, params.lambda, params.alpha)
                    .with_weighting(Weighting::Classical);
                cfg.solver = params.solver;
                Some(LrState::new(cfg)?)
            }
            _ => None,
        };
        let mut engine = Self {
            method,
            model,
            dim,
            params: params.clone(),
            xs: Vec::new(),
            responses: Vec::new(),
            mle,
            set: EllipsoidSet {
                center: Vector::zeros(dim),
                v: Matrix::identity(dim, dim),
                beta: 0.0,
                provable: method.provable(),
            },
        };
        engine.set = engine.build()?;
        Ok(engine)
    }

    fn update(&mut self, x: &Vector, y: f64) -> Result<()> {
        let response = match (self.method, self.model) {
            (Method::Subexp, ObservationModel::Weibull { p }) => gumbel_transform(y, p)?.response,
            _ => y,
        };
        self.xs.push(x.clone());
        self.responses.push(response);
        if let Some(mle) = &mut self.mle {
            mle.update(x, y)?;
        }
        self.set = self.build()?;
        Ok(())
    }

    fn build(&self) -> Result<EllipsoidSet> {
        let p = &self.params;
        let provable = self.method.provable();
        match self.method {
            Method::Ay2011 => {
                let ObservationModel::Gaussian { sigma } = self.model else {
                    return Err(Error::Unsupported("ay2011 needs Gaussian noise".into()));
                };
                let (center, v) =
                    regularized_least_squares(&self.xs, &self.responses, 1.0, p.lambda, self.dim)?;
                let r = ay_radius(&v, p.lambda, sigma, p.radius, p.delta)?;
                Ok(EllipsoidSet {
                    center,
                    v,
                    beta: r * r,
                    provable,
                })
            }
            Method::Subexp => {
                let nu = subexp_scale(&self.model).ok_or_else(|| {
                    Error::Unsupported(format!("subexp is not defined for {}", self.model.name()))
                })?;
                let (center, v) = regularized_least_squares(
                    &self.xs,
                    &self.responses,
                    1.0 / (nu * nu),
                    p.lambda,
                    self.dim,
                )?;
                let r = subexp_radius(&v, p.lambda, p.subexp_k, p.radius, p.delta, p.radius)?;
                Ok(EllipsoidSet {
                    center,
                    v,
                    beta: r * r,
                    provable,
                })
            }
            Method::Heuristic | Method::PoissonLaplace | Method::PoissonWorstcase => {
                let mle = self.mle.as_ref().expect("Fisher-metric sets keep a fit");
                let center = mle.leader().theta.clone();
                let mut v = Matrix::identity(self.dim, self.dim) * p.lambda;
                for x in &self.xs {
                    let c = match self.method {
                        Method::PoissonWorstcase => p.radius.exp(),
                        _ => fisher_information(&self.model, x.dot(&center)),
                    };
                    v.ger(c, x, x, 1.0);
                }
                Ok(EllipsoidSet {
                    center,
                    v,
                    beta: heuristic_radius(p.delta),
                    provable,
                })
            }
            Method::LrWeighted | Method::LrClassical => {
                unreachable!("likelihood-ratio methods use their own engine")
            }
        }
    }
}

impl Engine {
    fn new(
        method: Method,
        model: ObservationModel,
        dim: usize,
        params: &MethodParams,
    ) -> Result<Self> {
        method.check_model(&model)?;
        if method.is_lr() {
            let weighting = if method == Method::LrClassical || params.classical_weights {
                Weighting::Classical
            } else {
                Weighting::Adaptive
            };
            let mut cfg = LrConfig::new(model, dim, params.radius, params.lambda, params.alpha)
                .with_weighting(weighting)
                .with_estimator(params.estimator);
            cfg.use_weights = params.use_weights;
            cfg.solver = params.solver;
            Ok(Engine::Lr(Box::new(LrState::new(cfg)?), Vec::new()))
        } else {
            Ok(Engine::Ellipsoid(Box::new(EllipsoidEngine::new(
                method, model, dim, params,
            )?)))
        }
    }

    fn select(&mut self, actions: &[Vector]) -> Result<usize> {
        match self {
            Engine::Lr(state, hints) => {
                let (idx, solved) = UcbSolver::new(state)?.select_action_hinted(actions, hints)?;
                hints.resize(actions.len(), None);
                for (h, s) in hints.iter_mut().zip(solved) {
                    if s.is_some() {
                        *h = s;
                    }
                }
                Ok(idx)
            }
            Engine::Ellipsoid(e) => {
                let mut best = (0, f64::NEG_INFINITY);
                for (i, x) in actions.iter().enumerate() {
                    let u = ellipsoid_ucb(&e.set, x)?;
                    if u > best.1 {
                        best = (i, u);
                    }
                }
                Ok(best.0)
            }
        }
    }

    /// Absorbs a round and returns its weight.
    fn update(&mut self, x: &Vector, y: f64) -> Result<f64> {
        match self {
            Engine::Lr(state, _) => Ok(state.update(x, y)?.w),
            Engine::Ellipsoid(e) => {
                e.update(x, y)?;
                Ok(1.0)
            }
        }
    }

    fn threshold(&self) -> f64 {
        match self {
            Engine::Lr(state, _) => state.threshold().loss_level(),
            Engine::Ellipsoid(e) => e.set.beta,
        }
    }

    fn contains(&self, theta: &Vector) -> Result<bool> {
        match self {
            Engine::Lr(state, _) => state.membership(theta),
            Engine::Ellipsoid(e) => e.set.contains(theta),
        }
    }
}

/// One seeded game of `horizon` rounds. The action of round `t` is chosen
/// from the set built on rounds `1..t−1`.
pub fn run_episode(
    env: &BanditEnvironment,
    method: Method,
    params: &MethodParams,
    horizon: usize,
    seed: u64,
    rule: ActionRule,
) -> Result<RunResult> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let dim = env.dim();
    let mut engine = Engine::new(method, env.model, dim, params)?;
    let mut noise = stream(seed, NOISE_STREAM);
    let mut picks = stream(seed, ACTION_STREAM);
    let curvature = env.model.curvature(params.radius);
    let mut ledger = if params.report_bounds {
        Some(GainLedger::new(dim, curvature.mu, params.lambda)?)
    } else {
        None
    };
    let mut rounds = Vec::with_capacity(horizon);
    let mut cum_regret = 0.0;
    let mut covered = true;
    for t in 1..=horizon {
        let start = Instant::now();
        let at_round = |e: Error| Error::Round {
            round: t,
            source: Box::new(e),
        };
        let action = match rule {
            ActionRule::Ucb => engine.select(&env.actions).map_err(at_round)?,
            ActionRule::Uniform => picks.random_range(0..env.actions.len()),
        };
        let x = &env.actions[action];
        let mean = x.dot(&env.theta_star);
        let reward = env.model.sample(mean, &mut noise);
        let weight = engine.update(x, reward).map_err(at_round)?;
        covered = covered && engine.contains(&env.theta_star).map_err(at_round)?;
        let regret = env.optimal_value - mean;
        cum_regret += regret;
        let (bound_t4, bound_t6) = match &mut ledger {
            Some(l) => {
                l.push(x).map_err(at_round)?;
                let t4 = theorem4_rhs(
                    params.lambda,
                    params.radius,
                    curvature.l,
                    curvature.mu,
                    l.gamma,
                    params.delta,
                );
                let t6 = match env.model {
                    ObservationModel::Gaussian { sigma } => theorem6_rhs(
                        t,
                        l.gamma,
                        sigma,
                        params.lambda,
                        params.radius,
                        params.delta,
                    ),
                    _ => f64::NAN,
                };
                (Some(t4), Some(t6))
            }
            None => (None, None),
        };
        let wall_secs = start.elapsed().as_secs_f64();
        if wall_secs > params.budget_secs {
            return Err(Error::Timeout {
                round: t,
                budget_secs: params.budget_secs,
            });
        }
        rounds.push(RoundRecord {
            round: t,
            action,
            reward,
            regret,
            cum_regret,
            threshold: engine.threshold(),
            weight,
            covered,
            bound_t4,
            bound_t6,
            wall_secs,
        });
    }
    Ok(RunResult {
        seed,
        method,
        rounds,
    })
}

/// UCB game with the method's own confidence set.
pub fn run_ucb(
    env: &BanditEnvironment,
    method: Method,
    params: &MethodParams,
    horizon: usize,
    seed: u64,
) -> Result<RunResult> {
    run_episode(env, method, params, horizon, seed, ActionRule::Ucb)
}

/// Calibration scenario: how covariates are collected and which parameter
/// generates the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    AdaptiveThetaZero,
    AdaptiveThetaRandom,
    IidThetaZero,
    IidThetaRandom,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::AdaptiveThetaZero,
        Scenario::AdaptiveThetaRandom,
        Scenario::IidThetaZero,
        Scenario::IidThetaRandom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::AdaptiveThetaZero => "adaptive_theta_zero",
            Scenario::AdaptiveThetaRandom => "adaptive_theta_random",
            Scenario::IidThetaZero => "iid_theta_zero",
            Scenario::IidThetaRandom => "iid_theta_random",
        }
    }

    pub fn rule(&self) -> ActionRule {
        match self {
            Scenario::AdaptiveThetaZero | Scenario::AdaptiveThetaRandom => ActionRule::Ucb,
            Scenario::IidThetaZero | Scenario::IidThetaRandom => ActionRule::Uniform,
        }
    }

    pub fn random_theta(&self) -> bool {
        matches!(
            self,
            Scenario::AdaptiveThetaRandom | Scenario::IidThetaRandom
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

/// Uniformly random direction scaled to `norm`.
pub fn random_theta(dim: usize, norm: f64, seed: u64) -> Vector {
    let mut rng = stream(seed, THETA_STREAM);
    loop {
        let v = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v * (norm / n);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub method: Method,
    pub alpha: f64,
    pub scenario: Scenario,
    pub runs: usize,
    pub covered: usize,
}

impl CalibrationResult {
    pub fn covered_fraction(&self) -> f64 {
        self.covered as f64 / self.runs as f64
    }
}

/// Runs `runs` seeded games of `horizon` rounds and counts those whose set
/// contained `θ⋆` at every round. Likelihood-ratio sets run at level
/// `alpha`, and so do the baselines (`δ = alpha`).
#[allow(clippy::too_many_arguments)]
pub fn run_calibration(
    env: &BanditEnvironment,
    method: Method,
    params: &MethodParams,
    alpha: f64,
    scenario: Scenario,
    theta_norm: f64,
    runs: usize,
    horizon: usize,
    base_seed: u64,
) -> Result<CalibrationResult> {
    if runs == 0 {
        return Err(Error::InvalidParameter(
            "calibration needs at least one run".into(),
        ));
    }
    let params = MethodParams {
        alpha,
        delta: alpha,
        report_bounds: false,
        ..params.clone()
    };
    let covered = (0..runs)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let theta = if scenario.random_theta() {
                random_theta(env.dim(), theta_norm, seed)
            } else {
                Vector::zeros(env.dim())
            };
            let env = env.with_theta(theta)?;
            let run = run_episode(&env, method, &params, horizon, seed, scenario.rule())?;
            Ok(run.covered() as usize)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    Ok(CalibrationResult {
        method,
        alpha,
        scenario,
        runs,
        covered,
    })
}

/// Outcome of one `(seed, method)` job of a sweep.
#[derive(Debug)]
pub struct RunOutcome {
    pub seed: u64,
    pub method: Method,
    pub result: Result<RunResult>,
}

/// Independent runs for every method and `seeds` seeds
/// (`seed_i = base_seed + i`), sorted by seed, then by method order.
/// Failed runs are reported, not fatal.
pub fn sweep(
    env: &BanditEnvironment,
    methods: &[Method],
    params: &MethodParams,
    horizon: usize,
    base_seed: u64,
    seeds: usize,
) -> Vec<RunOutcome> {
    let jobs: Vec<(u64, usize)> = (0..seeds)
        .flat_map(|i| (0..methods.len()).map(move |m| (base_seed.wrapping_add(i as u64), m)))
        .collect();
    let mut out: Vec<(usize, RunOutcome)> = jobs
        .into_par_iter()
        .map(|(seed, m)| {
            let method = methods[m];
            (
                m,
                RunOutcome {
                    seed,
                    method,
                    result: run_ucb(env, method, params, horizon, seed),
                },
            )
        })
        .collect();
    out.sort_by_key(|(m, o)| (o.seed, *m));
    out.into_iter().map(|(_, o)| o).collect()
}

/// Per-round median of the cumulative regret across runs of equal length.
pub fn median_curve(runs: &[&RunResult]) -> Vec<f64> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    (0..first.rounds.len())
        .map(|t| {
            let mut v: Vec<f64> = runs.iter().map(|r| r.rounds[t].cum_regret).collect();
            median(&mut v)
        })
        .collect()
}

pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
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
    fn single_action_has_no_regret() {
        let env = BanditEnvironment::new(
            vec![e(0, 2)],
            Vector::from_vec(vec![0.5, 0.0]),
            ObservationModel::Gaussian { sigma: 0.1 },
        )
        .unwrap();
        for m in [Method::LrWeighted, Method::Ay2011, Method::Heuristic] {
            let r = run_ucb(&env, m, &MethodParams::default(), 10, 3).unwrap();
            assert!(r.rounds.iter().all(|x| x.regret == 0.0 && x.action == 0));
        }
    }

    #[test]
    fn noiseless_two_arms_settle_on_the_better_arm() {
        let env = BanditEnvironment::new(
            vec![e(0, 2), e(1, 2)],
            Vector::from_vec(vec![0.3, 0.8]),
            ObservationModel::Gaussian { sigma: 1e-6 },
        )
        .unwrap();
        let params = MethodParams {
            radius: 1.0,
            ..MethodParams::default()
        };
        let r = run_ucb(&env, Method::LrClassical, &params, 8, 0).unwrap();
        let pulled: Vec<usize> = r.rounds.iter().map(|x| x.action).collect();
        assert!(
            pulled[..2].contains(&0) && pulled[..2].contains(&1),
            "{pulled:?}"
        );
        for w in r.rounds[2..].windows(2) {
            assert_eq!(w[0].cum_regret, w[1].cum_regret);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("lr".parse::<Method>().is_err());
        assert!(Method::Ay2011
            .check_model(&ObservationModel::Laplace { b: 0.1 })
            .is_err());
    }

    #[test]
    fn sweep_is_sorted_and_deterministic() {
        let env = BanditEnvironment::new(
            vec![e(0, 2), e(1, 2), (e(0, 2) + e(1, 2)) / 2f64.sqrt()],
            Vector::from_vec(vec![0.3, -0.2]),
            ObservationModel::Gaussian { sigma: 0.2 },
        )
        .unwrap();
        let params = MethodParams {
            radius: 1.0,
            ..MethodParams::default()
        };
        let methods = [Method::Ay2011, Method::LrWeighted];
        let a = sweep(&env, &methods, &params, 6, 10, 3);
        let b = sweep(&env, &methods, &params, 6, 10, 3);
        let keys: Vec<(u64, Method)> = a.iter().map(|o| (o.seed, o.method)).collect();
        assert_eq!(keys[0], (10, Method::Ay2011));
        assert_eq!(keys[1], (10, Method::LrWeighted));
        assert_eq!(keys[5], (12, Method::LrWeighted));
        for (x, y) in a.iter().zip(&b) {
            let (x, y) = (x.result.as_ref().unwrap(), y.result.as_ref().unwrap());
            for (p, q) in x.rounds.iter().zip(&y.rounds) {
                assert_eq!(
                    (p.action, p.reward.to_bits()),
                    (q.action, q.reward.to_bits())
                );
            }
        }
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
