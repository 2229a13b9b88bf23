//! Weighted sums of canonical negative log-likelihoods, grouped by distinct
//! covariate.
//!
//! Bandit data repeats covariates, and for GLMs and the Weibull model all
//! observations at the same covariate collapse into two scalars, so the
//! per-evaluation cost scales with the number of distinct covariates rather
//! than the number of rounds.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::linalg::{Matrix, Vector};
use crate::models::{GlmFamily, ObservationModel};

/// One weighted observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vector,
    pub y: f64,
    pub w: f64,
}

impl Observation {
    pub fn new(x: Vector, y: f64, w: f64) -> Self {
        Self { x, y, w }
    }
}

#[derive(Debug, Clone)]
enum Aggregate {
    /// `w·A(z) − s·z`
    Glm { family: GlmFamily, w: f64, s: f64 },
    /// `c·eᶻ − w·z`
    Weibull { c: f64, w: f64 },
    /// `Σ wᵢ|yᵢ − z| / b`
    Laplace { b: f64, obs: Vec<(f64, f64)> },
}

impl Aggregate {
    fn empty(model: &ObservationModel) -> Self {
        match *model {
            ObservationModel::Laplace { b } => Aggregate::Laplace { b, obs: Vec::new() },
            ObservationModel::Weibull { .. } => Aggregate::Weibull { c: 0.0, w: 0.0 },
            m => Aggregate::Glm {
                family: m.as_glm().expect("glm family"),
                w: 0.0,
                s: 0.0,
            },
        }
    }

    fn push(&mut self, model: &ObservationModel, y: f64, weight: f64) {
        match self {
            Aggregate::Glm { family, w, s } => {
                *w += weight;
                *s += weight * family.sufficient_statistic(y).unwrap_or(f64::NAN);
            }
            Aggregate::Weibull { c, w } => {
                let p = match model {
                    ObservationModel::Weibull { p } => *p,
                    _ => unreachable!(),
                };
                *c += weight * y.powf(p);
                *w += weight;
            }
            Aggregate::Laplace { obs, .. } => obs.push((y, weight)),
        }
    }

    #[inline]
    fn value(&self, z: f64) -> f64 {
        match self {
            Aggregate::Glm { family, w, s } => w * family.log_partition(z) - s * z,
            Aggregate::Weibull { c, w } => c * z.exp() - w * z,
            Aggregate::Laplace { b, obs } => {
                obs.iter().map(|(y, w)| w * (y - z).abs()).sum::<f64>() / b
            }
        }
    }

    #[inline]
    fn derivatives(&self, z: f64, smoothing: f64) -> (f64, f64, f64) {
        match self {
            Aggregate::Glm { family, w, s } => (
                w * family.log_partition(z) - s * z,
                w * family.log_partition_d1(z) - s,
                w * family.log_partition_d2(z),
            ),
            Aggregate::Weibull { c, w } => {
                let e = c * z.exp();
                (e - w * z, e - w, e)
            }
            Aggregate::Laplace { b, obs } => {
                let m = ObservationModel::Laplace { b: *b };
                obs.iter().fold((0.0, 0.0, 0.0), |acc, &(y, w)| {
                    let (f, d1, d2) = m.nll_derivatives(z, y, smoothing);
                    (acc.0 + w * f, acc.1 + w * d1, acc.2 + w * d2)
                })
            }
        }
    }
}

/// `g(θ) = Σ_s w_s · nll(x_sᵀθ, y_s)` over a fixed data set.
#[derive(Debug, Clone)]
pub struct CompiledLoss {
    model: ObservationModel,
    dim: usize,
    points: Vec<Vector>,
    aggregates: Vec<Aggregate>,
    index: HashMap<Vec<u64>, usize>,
    total_weight: f64,
    count: usize,
}

fn key(x: &Vector) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

impl CompiledLoss {
    pub fn new(model: ObservationModel, dim: usize) -> Self {
        Self {
            model,
            dim,
            points: Vec::new(),
            aggregates: Vec::new(),
            index: HashMap::new(),
            total_weight: 0.0,
            count: 0,
        }
    }

    pub fn from_observations(
        model: ObservationModel,
        dim: usize,
        history: &[Observation],
    ) -> Result<Self> {
        let mut loss = Self::new(model, dim);
        for o in history {
            loss.push(&o.x, o.y, o.w)?;
        }
        Ok(loss)
    }

    pub fn push(&mut self, x: &Vector, y: f64, w: f64) -> Result<()> {
        check_dim(self.dim, x.len())?;
        self.model.check_support(y)?;
        let k = key(x);
        let idx = match self.index.get(&k) {
            Some(&i) => i,
            None => {
                self.points.push(x.clone());
                self.aggregates.push(Aggregate::empty(&self.model));
                self.index.insert(k, self.points.len() - 1);
                self.points.len() - 1
            }
        };
        self.aggregates[idx].push(&self.model, y, w);
        self.total_weight += w;
        self.count += 1;
        Ok(())
    }

    pub fn model(&self) -> &ObservationModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of observations pushed.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Distinct covariates in first-seen order.
    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Exact loss value (no smoothing).
    pub fn value(&self, theta: &Vector) -> f64 {
        self.points
            .iter()
            .zip(&self.aggregates)
            .map(|(x, a)| a.value(x.dot(theta)))
            .sum()
    }

    /// Value, gradient and Hessian; the Laplace loss is Huber-smoothed with
    /// half-width `smoothing`.
    pub fn value_grad_hess(&self, theta: &Vector, smoothing: f64) -> (f64, Vector, Matrix) {
        let d = self.dim;
        let mut f = 0.0;
        let mut g = Vector::zeros(d);
        let mut h = Matrix::zeros(d, d);
        for (x, a) in self.points.iter().zip(&self.aggregates) {
            let (v, d1, d2) = a.derivatives(x.dot(theta), smoothing);
            f += v;
            g.axpy(d1, x, 1.0);
            if d2 != 0.0 {
                h.ger(d2, x, x, 1.0);
            }
        }
        (f, g, h)
    }

    /// Value and gradient only.
    pub fn value_grad(&self, theta: &Vector, smoothing: f64) -> (f64, Vector) {
        let mut f = 0.0;
        let mut g = Vector::zeros(self.dim);
        for (x, a) in self.points.iter().zip(&self.aggregates) {
            let (v, d1, _) = a.derivatives(x.dot(theta), smoothing);
            f += v;
            g.axpy(d1, x, 1.0);
        }
        (f, g)
    }

    /// Smoothed value only.
    pub fn smoothed_value(&self, theta: &Vector, smoothing: f64) -> f64 {
        if !self.needs_smoothing() {
            return self.value(theta);
        }
        self.points
            .iter()
            .zip(&self.aggregates)
            .map(|(x, a)| a.derivatives(x.dot(theta), smoothing).0)
            .sum()
    }

    /// Whether the loss is nonsmooth and solvers should use continuation.
    pub fn needs_smoothing(&self) -> bool {
        matches!(self.model, ObservationModel::Laplace { .. })
    }

    /// Whether the loss is an exact quadratic in θ.
    pub fn is_quadratic(&self) -> bool {
        matches!(self.model, ObservationModel::Gaussian { .. })
    }

    /// Re-expresses the loss in the coordinates `u = Qᵀθ` of an orthonormal
    /// basis `Q` (`dim × k`) that spans every covariate.
    pub fn project(&self, basis: &Matrix) -> CompiledLoss {
        let k = basis.ncols();
        let points: Vec<Vector> = self.points.iter().map(|x| basis.tr_mul(x)).collect();
        let index = points
            .iter()
            .enumerate()
            .map(|(i, p)| (key(p), i))
            .collect();
        CompiledLoss {
            model: self.model,
            dim: k,
            points,
            aggregates: self.aggregates.clone(),
            index,
            total_weight: self.total_weight,
            count: self.count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_history(model: ObservationModel, n: usize, seed: u64) -> Vec<Observation> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let actions: Vec<Vector> = (0..4)
            .map(|_| Vector::from_fn(3, |_, _| rng.random::<f64>() - 0.5))
            .collect();
        (0..n)
            .map(|_| {
                let x = actions[rng.random_range(0..4)].clone();
                let y = model.sample(x.sum(), &mut rng);
                Observation::new(x, y, rng.random::<f64>() * 0.9 + 0.1)
            })
            .collect()
    }

    #[test]
    fn aggregated_value_matches_direct_sum() {
        for model in [
            ObservationModel::Gaussian { sigma: 0.3 },
            ObservationModel::Poisson,
            ObservationModel::Bernoulli,
            ObservationModel::Laplace { b: 0.5 },
            ObservationModel::Weibull { p: 2.0 },
        ] {
            let hist = random_history(model, 40, 7);
            let loss = CompiledLoss::from_observations(model, 3, &hist).unwrap();
            assert!(loss.points().len() <= 4);
            let theta = Vector::from_vec(vec![0.3, -0.2, 0.5]);
            let direct: f64 = hist
                .iter()
                .map(|o| o.w * model.nll(o.x.dot(&theta), o.y))
                .sum();
            assert!((loss.value(&theta) - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for model in [
            ObservationModel::Gaussian { sigma: 0.3 },
            ObservationModel::Poisson,
            ObservationModel::Weibull { p: 2.0 },
        ] {
            let hist = random_history(model, 30, 3);
            let loss = CompiledLoss::from_observations(model, 3, &hist).unwrap();
            let theta = Vector::from_vec(vec![0.1, 0.4, -0.3]);
            let (_, g, h) = loss.value_grad_hess(&theta, 0.0);
            for i in 0..3 {
                let mut e = Vector::zeros(3);
                e[i] = 1e-5;
                let fd = (loss.value(&(&theta + &e)) - loss.value(&(&theta - &e))) / 2e-5;
                assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{model:?}");
                let (_, gp) = loss.value_grad(&(&theta + &e), 0.0);
                let (_, gm) = loss.value_grad(&(&theta - &e), 0.0);
                let col = (gp - gm) / 2e-5;
                assert!((col - h.column(i)).norm() < 1e-5 * (1.0 + h.norm()));
            }
        }
    }

    #[test]
    fn projection_preserves_values_on_the_span() {
        let model = ObservationModel::Poisson;
        let hist = random_history(model, 20, 11);
        let loss = CompiledLoss::from_observations(model, 3, &hist).unwrap();
        let q = nalgebra::linalg::QR::new(Matrix::from_fn(3, 3, |i, j| {
            ((i + 2 * j) as f64).sin() + if i == j { 2.0 } else { 0.0 }
        }))
        .q();
        let projected = loss.project(&q);
        let theta = Vector::from_vec(vec![0.2, -0.1, 0.3]);
        let u = q.tr_mul(&theta);
        assert!((loss.value(&theta) - projected.value(&u)).abs() < 1e-12);
    }
}
