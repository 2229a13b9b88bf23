//! Conditional observation models `p_θ(y | x)` that depend on the parameter
//! only through the scalar `z = xᵀθ`.
//!
//! Only the parameter-dependent ("canonical") part of each negative
//! log-likelihood is exposed for estimation: base measures and other
//! `θ`-free constants cancel in every likelihood ratio. Full densities are
//! still available through [`ObservationModel::density`] for validation.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Huber half-width used when a solver needs a smooth surrogate of the
/// Laplace negative log-likelihood.
pub const LAPLACE_SMOOTHING: f64 = 1e-6;

/// Exponential-family members with natural parameter `z = xᵀθ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlmFamily {
    Gaussian { sigma: f64 },
    Poisson,
    Bernoulli,
}

/// Additive Laplace noise with scale `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceSpec {
    pub b: f64,
}

/// Weibull survival times with rate `exp(xᵀθ)` and known shape `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullSurvivalSpec {
    pub p: f64,
}

/// Strong-convexity (`mu`) and smoothness (`l`) constants of the
/// per-observation loss on `z ∈ [−B, B]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureConstants {
    pub mu: f64,
    pub l: f64,
}

/// A pluggable likelihood. Serialized as a table with a `family` key, e.g.
/// `{ family = "gaussian", sigma = 0.15 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelTable", into = "ModelTable")]
pub enum ObservationModel {
    Gaussian { sigma: f64 },
    Poisson,
    Bernoulli,
    Laplace { b: f64 },
    Weibull { p: f64 },
}

/// Flat serialized form; keys that do not belong to the family are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelTable {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
}

impl TryFrom<ModelTable> for ObservationModel {
    type Error = String;

    fn try_from(t: ModelTable) -> std::result::Result<Self, String> {
        let given: Vec<&str> = [("sigma", t.sigma), ("b", t.b), ("p", t.p)]
            .iter()
            .filter(|(_, v)| v.is_some())
            .map(|(k, _)| *k)
            .collect();
        let (model, allowed): (ObservationModel, &[&str]) = match t.family.as_str() {
            "gaussian" => (
                ObservationModel::Gaussian {
                    sigma: t.sigma.ok_or("gaussian model needs `sigma`")?,
                },
                &["sigma"],
            ),
            "poisson" => (ObservationModel::Poisson, &[]),
            "bernoulli" => (ObservationModel::Bernoulli, &[]),
            "laplace" => (
                ObservationModel::Laplace {
                    b: t.b.ok_or("laplace model needs `b`")?,
                },
                &["b"],
            ),
            "weibull" => (
                ObservationModel::Weibull {
                    p: t.p.ok_or("weibull model needs `p`")?,
                },
                &["p"],
            ),
            other => return Err(format!("unknown model family `{other}`")),
        };
        if let Some(k) = given.iter().find(|k| !allowed.contains(k)) {
            return Err(format!("unknown key `{k}` for the {} model", t.family));
        }
        Ok(model)
    }
}

impl From<ObservationModel> for ModelTable {
    fn from(m: ObservationModel) -> Self {
        let mut t = ModelTable {
            family: m.name().to_string(),
            sigma: None,
            b: None,
            p: None,
        };
        match m {
            ObservationModel::Gaussian { sigma } => t.sigma = Some(sigma),
            ObservationModel::Laplace { b } => t.b = Some(b),
            ObservationModel::Weibull { p } => t.p = Some(p),
            _ => {}
        }
        t
    }
}

impl GlmFamily {
    /// Log-partition function `A(z)`.
    pub fn log_partition(&self, z: f64) -> f64 {
        match *self {
            GlmFamily::Gaussian { sigma } => z * z / (2.0 * sigma * sigma),
            GlmFamily::Poisson => z.exp(),
            GlmFamily::Bernoulli => softplus(z),
        }
    }

    /// `A'(z)`, the mean of the sufficient statistic.
    pub fn log_partition_d1(&self, z: f64) -> f64 {
        match *self {
            GlmFamily::Gaussian { sigma } => z / (sigma * sigma),
            GlmFamily::Poisson => z.exp(),
            GlmFamily::Bernoulli => logistic(z),
        }
    }

    /// `A''(z)`.
    pub fn log_partition_d2(&self, z: f64) -> f64 {
        match *self {
            GlmFamily::Gaussian { sigma } => 1.0 / (sigma * sigma),
            GlmFamily::Poisson => z.exp(),
            GlmFamily::Bernoulli => {
                let s = logistic(z);
                s * (1.0 - s)
            }
        }
    }

    /// Sufficient statistic `T(y)`. The Gaussian uses `y/σ²`, which is the
    /// statistic that pairs with `A(z) = z²/(2σ²)`.
    pub fn sufficient_statistic(&self, y: f64) -> Result<f64> {
        self.check_support(y)?;
        Ok(match *self {
            GlmFamily::Gaussian { sigma } => y / (sigma * sigma),
            GlmFamily::Poisson | GlmFamily::Bernoulli => y,
        })
    }

    fn check_support(&self, y: f64) -> Result<()> {
        let ok = match self {
            GlmFamily::Gaussian { .. } => y.is_finite(),
            GlmFamily::Poisson => y >= 0.0 && y.fract() == 0.0 && y.is_finite(),
            GlmFamily::Bernoulli => y == 0.0 || y == 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain {
                model: self.name(),
                value: y,
            })
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GlmFamily::Gaussian { .. } => "gaussian",
            GlmFamily::Poisson => "poisson",
            GlmFamily::Bernoulli => "bernoulli",
        }
    }
}

impl From<LaplaceSpec> for ObservationModel {
    fn from(s: LaplaceSpec) -> Self {
        ObservationModel::Laplace { b: s.b }
    }
}

impl From<WeibullSurvivalSpec> for ObservationModel {
    fn from(s: WeibullSurvivalSpec) -> Self {
        ObservationModel::Weibull { p: s.p }
    }
}

impl From<GlmFamily> for ObservationModel {
    fn from(f: GlmFamily) -> Self {
        match f {
            GlmFamily::Gaussian { sigma } => ObservationModel::Gaussian { sigma },
            GlmFamily::Poisson => ObservationModel::Poisson,
            GlmFamily::Bernoulli => ObservationModel::Bernoulli,
        }
    }
}

impl ObservationModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidParameter(format!(
                "{} {what} must be positive and finite, got {v}",
                self.name()
            )))
        };
        match *self {
            ObservationModel::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                bad("sigma", sigma)
            }
            ObservationModel::Laplace { b } if !(b > 0.0 && b.is_finite()) => bad("scale b", b),
            ObservationModel::Weibull { p } if !(p >= 1.0 && p.is_finite()) => Err(
                Error::InvalidParameter(format!("weibull shape p must be >= 1, got {p}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObservationModel::Gaussian { .. } => "gaussian",
            ObservationModel::Poisson => "poisson",
            ObservationModel::Bernoulli => "bernoulli",
            ObservationModel::Laplace { .. } => "laplace",
            ObservationModel::Weibull { .. } => "weibull",
        }
    }

    pub fn as_glm(&self) -> Option<GlmFamily> {
        match *self {
            ObservationModel::Gaussian { sigma } => Some(GlmFamily::Gaussian { sigma }),
            ObservationModel::Poisson => Some(GlmFamily::Poisson),
            ObservationModel::Bernoulli => Some(GlmFamily::Bernoulli),
            _ => None,
        }
    }

    pub fn check_support(&self, y: f64) -> Result<()> {
        if let Some(glm) = self.as_glm() {
            return glm.check_support(y);
        }
        let ok = match self {
            ObservationModel::Laplace { .. } => y.is_finite(),
            ObservationModel::Weibull { .. } => y > 0.0 && y.is_finite(),
            _ => unreachable!(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain {
                model: self.name(),
                value: y,
            })
        }
    }

    /// Canonical negative log-likelihood at `z = xᵀθ`.
    ///
    /// GLM: `A(z) − T(y)z`; Laplace: `|y − z|/b`; Weibull: `yᵖ·eᶻ − z`.
    pub fn canonical_nll(&self, z: f64, y: f64) -> Result<f64> {
        self.check_support(y)?;
        Ok(self.nll(z, y))
    }

    /// [`canonical_nll`](Self::canonical_nll) without the support check.
    #[inline]
    pub fn nll(&self, z: f64, y: f64) -> f64 {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                z * z / (2.0 * s2) - y * z / s2
            }
            ObservationModel::Poisson => z.exp() - y * z,
            ObservationModel::Bernoulli => softplus(z) - y * z,
            ObservationModel::Laplace { b } => (y - z).abs() / b,
            ObservationModel::Weibull { p } => y.powf(p) * z.exp() - z,
        }
    }

    /// Value, first and second derivative of the canonical NLL in `z`.
    /// The Laplace loss is replaced by its Huber smoothing of half-width
    /// `smoothing`, which never exceeds the exact loss.
    #[inline]
    pub fn nll_derivatives(&self, z: f64, y: f64, smoothing: f64) -> (f64, f64, f64) {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                (z * z / (2.0 * s2) - y * z / s2, (z - y) / s2, 1.0 / s2)
            }
            ObservationModel::Poisson => {
                let e = z.exp();
                (e - y * z, e - y, e)
            }
            ObservationModel::Bernoulli => {
                let s = logistic(z);
                (softplus(z) - y * z, s - y, s * (1.0 - s))
            }
            ObservationModel::Laplace { b } => {
                let r = z - y;
                let eps = smoothing;
                if r.abs() <= eps {
                    (r * r / (2.0 * eps * b), r / (eps * b), 1.0 / (eps * b))
                } else {
                    ((r.abs() - 0.5 * eps) / b, r.signum() / b, 0.0)
                }
            }
            ObservationModel::Weibull { p } => {
                let c = y.powf(p) * z.exp();
                (c - z, c - 1.0, c)
            }
        }
    }

    /// Full density (or probability mass) of `y` at `z`, base measure
    /// included.
    pub fn density(&self, z: f64, y: f64) -> f64 {
        self.log_density(z, y).exp()
    }

    pub fn log_density(&self, z: f64, y: f64) -> f64 {
        if self.check_support(y).is_err() {
            return f64::NEG_INFINITY;
        }
        match *self {
            ObservationModel::Gaussian { sigma } => {
                let r = (y - z) / sigma;
                -0.5 * r * r - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            ObservationModel::Poisson => {
                let rate = z.exp();
                y * rate.ln() - rate - ln_factorial(y as u64)
            }
            ObservationModel::Bernoulli => {
                let p1 = logistic(z);
                if y == 1.0 {
                    p1.ln()
                } else {
                    (1.0 - p1).ln()
                }
            }
            ObservationModel::Laplace { b } => -(y - z).abs() / b - (2.0 * b).ln(),
            ObservationModel::Weibull { p } => {
                let rate = z.exp();
                rate.ln() + p.ln() + (p - 1.0) * y.ln() - y.powf(p) * rate
            }
        }
    }

    /// Analytic mean of `y` at `z`.
    pub fn mean(&self, z: f64) -> f64 {
        match *self {
            ObservationModel::Gaussian { .. } | ObservationModel::Laplace { .. } => z,
            ObservationModel::Poisson => z.exp(),
            ObservationModel::Bernoulli => logistic(z),
            ObservationModel::Weibull { p } => gamma_fn(1.0 + 1.0 / p) * (-z / p).exp(),
        }
    }

    /// Analytic variance of `y` at `z`.
    pub fn variance(&self, z: f64) -> f64 {
        match *self {
            ObservationModel::Gaussian { sigma } => sigma * sigma,
            ObservationModel::Laplace { b } => 2.0 * b * b,
            ObservationModel::Poisson => z.exp(),
            ObservationModel::Bernoulli => {
                let s = logistic(z);
                s * (1.0 - s)
            }
            ObservationModel::Weibull { p } => {
                let g1 = gamma_fn(1.0 + 1.0 / p);
                (gamma_fn(1.0 + 2.0 / p) - g1 * g1) * (-2.0 * z / p).exp()
            }
        }
    }

    /// Draws `y ~ p(· | z)`. Additive-noise models draw `y = z + η`.
    pub fn sample<R: Rng + ?Sized>(&self, z: f64, rng: &mut R) -> f64 {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                let n: f64 = StandardNormal.sample(rng);
                z + sigma * n
            }
            ObservationModel::Poisson => {
                let rate = z.exp();
                Poisson::new(rate).map(|d| d.sample(rng)).unwrap_or(0.0)
            }
            ObservationModel::Bernoulli => {
                if rng.random::<f64>() < logistic(z) {
                    1.0
                } else {
                    0.0
                }
            }
            ObservationModel::Laplace { b } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                z - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            ObservationModel::Weibull { p } => {
                // 1 − U ∈ (0, 1] keeps the logarithm finite.
                let u: f64 = 1.0 - rng.random::<f64>();
                (-u.ln() / z.exp()).powf(1.0 / p)
            }
        }
    }

    /// Curvature constants on `z ∈ [−B, B]`. Laplace and Weibull values are
    /// heuristic (the Laplace loss is not smooth, the Weibull loss is not
    /// globally smooth).
    pub fn curvature(&self, radius: f64) -> CurvatureConstants {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                let v = 1.0 / (sigma * sigma);
                CurvatureConstants { mu: v, l: v }
            }
            ObservationModel::Poisson => CurvatureConstants {
                mu: (-radius).exp(),
                l: radius.exp(),
            },
            ObservationModel::Bernoulli => {
                let e = (-radius).exp();
                CurvatureConstants {
                    mu: e / ((1.0 + e) * (1.0 + e)),
                    l: 0.25,
                }
            }
            ObservationModel::Laplace { b } => CurvatureConstants {
                mu: 1.0 / b,
                l: 1.0 / b,
            },
            ObservationModel::Weibull { .. } => CurvatureConstants {
                mu: (-radius).exp(),
                l: radius.exp(),
            },
        }
    }

    /// Whether the curvature constants are heuristic rather than exact
    /// bounds on the loss curvature.
    pub fn curvature_is_heuristic(&self) -> bool {
        matches!(
            self,
            ObservationModel::Laplace { .. } | ObservationModel::Weibull { .. }
        )
    }
}

/// `log(1 + eᶻ)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n < 256 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    ln_gamma(n as f64 + 1.0)
}

/// Lanczos approximation (g = 7, n = 9), accurate to ~1e-15 for x > 0.5.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn gamma_fn(x: f64) -> f64 {
    ln_gamma(x).exp()
}
