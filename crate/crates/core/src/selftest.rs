//! Fast invariant suite behind `lrcs selftest`: model normalization, loss
//! consistency, curvature bounds, bound formulas, the elliptical potential
//! lemma and feature reconstruction.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::baselines::{ay_radius, heuristic_radius, subexp_radius};
use crate::kernel::{build_features, uniform_grid, DEFAULT_TRUNCATION};
use crate::linalg::{Matrix, Vector};
use crate::models::{ln_factorial, GlmFamily, ObservationModel};
use crate::oracles::{
    appd_beta, elliptical_potential_cap, elliptical_potential_check, information_gain,
    theorem3_rhs, theorem4_rhs, theorem5_rhs,
};

/// A deliberately wrong convention used as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Gaussian sufficient statistic `y/σ` instead of `y/σ²`.
    GaussianStatisticOverSigma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Models exercised by the suite.
pub fn test_models() -> Vec<ObservationModel> {
    vec![
        ObservationModel::Gaussian { sigma: 0.5 },
        ObservationModel::Gaussian { sigma: 0.15 },
        ObservationModel::Poisson,
        ObservationModel::Bernoulli,
        ObservationModel::Laplace { b: 0.15 },
        ObservationModel::Weibull { p: 2.0 },
    ]
}

fn statistic(fam: GlmFamily, y: f64, fault: Option<Fault>) -> f64 {
    match (fam, fault) {
        (GlmFamily::Gaussian { sigma }, Some(Fault::GaussianStatisticOverSigma)) => y / sigma,
        _ => fam.sufficient_statistic(y).expect("support"),
    }
}

fn log_base_measure(fam: GlmFamily, y: f64) -> f64 {
    match fam {
        GlmFamily::Gaussian { sigma } => {
            -y * y / (2.0 * sigma * sigma) - 0.5 * (2.0 * PI * sigma * sigma).ln()
        }
        GlmFamily::Poisson => -ln_factorial(y as u64),
        GlmFamily::Bernoulli => 0.0,
    }
}

/// Density built from the exponential-family parts `h(y)·exp(T(y)z − A(z))`
/// for GLMs, and the closed form otherwise.
pub fn family_density(model: &ObservationModel, z: f64, y: f64, fault: Option<Fault>) -> f64 {
    match model.as_glm() {
        Some(fam) => {
            (log_base_measure(fam, y) + statistic(fam, y, fault) * z - fam.log_partition(z)).exp()
        }
        None => model.density(z, y),
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Total mass of `p_z` by quadrature (or summation over the discrete
/// support up to a negligible tail).
pub fn total_mass(model: &ObservationModel, z: f64, fault: Option<Fault>) -> f64 {
    let dens = |y: f64| family_density(model, z, y, fault);
    match *model {
        ObservationModel::Gaussian { sigma } => {
            let half = z.abs() + 14.0 * sigma + 5.0;
            simpson(dens, -half, half, 40_000)
        }
        ObservationModel::Poisson => {
            let rate = z.exp();
            let top = (rate + 40.0 * rate.sqrt() + 40.0) as u64;
            (0..=top).map(|k| dens(k as f64)).sum()
        }
        ObservationModel::Bernoulli => dens(0.0) + dens(1.0),
        ObservationModel::Laplace { b } => {
            simpson(dens, z - 40.0 * b, z, 20_000) + simpson(dens, z, z + 40.0 * b, 20_000)
        }
        ObservationModel::Weibull { p } => {
            // t^p·e^z = 60 leaves a tail of e^{−60}.
            let top = (60.0 / z.exp()).powf(1.0 / p);
            simpson(dens, 0.0, top, 40_000)
        }
    }
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> PropertyResult {
    match f() {
        Ok(detail) => PropertyResult {
            name,
            passed: true,
            detail,
        },
        Err(detail) => PropertyResult {
            name,
            passed: false,
            detail,
        },
    }
}

pub fn density_normalization(fault: Option<Fault>) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for model in test_models() {
        for _ in 0..20 {
            let z = rng.random_range(-1.0..1.0);
            let err = (total_mass(&model, z, fault) - 1.0).abs();
            if err > 1e-4 {
                return Err(format!(
                    "{} at z = {z:.4}: mass off by {err:.3e}",
                    model.name()
                ));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("max |mass − 1| = {worst:.2e}"))
}

/// `nll(z₁) − nll(z₂) = log p_{z₂}(y) − log p_{z₁}(y)`, with the density
/// assembled from the family parts.
pub fn nll_matches_log_ratio(fault: Option<Fault>) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for model in test_models() {
        for _ in 0..50 {
            let z1: f64 = rng.random_range(-1.0..1.0);
            let z2: f64 = rng.random_range(-1.0..1.0);
            let y = model.sample(z1, &mut rng);
            let lhs = model.nll(z1, y) - model.nll(z2, y);
            let rhs = family_density(&model, z2, y, fault).ln()
                - family_density(&model, z1, y, fault).ln();
            let err = (lhs - rhs).abs() / (1.0 + lhs.abs());
            if !(err <= 1e-10) {
                return Err(format!(
                    "{} (z₁ = {z1:.3}, z₂ = {z2:.3}, y = {y:.3}): {lhs} vs {rhs}",
                    model.name()
                ));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("max relative error {worst:.2e}"))
}

pub fn curvature_bounds() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let b = 2.0;
    for model in test_models() {
        let Some(fam) = model.as_glm() else { continue };
        let c = model.curvature(b);
        let tol = 1e-4 * c.l;
        for _ in 0..200 {
            let z: f64 = rng.random_range(-b..b);
            let h = 1e-4;
            let d2 = (fam.log_partition(z + h) - 2.0 * fam.log_partition(z)
                + fam.log_partition(z - h))
                / (h * h);
            if d2 < c.mu - tol || d2 > c.l + tol {
                return Err(format!(
                    "{}: A''({z:.3}) = {d2} outside [{}, {}]",
                    model.name(),
                    c.mu,
                    c.l
                ));
            }
        }
    }
    Ok("200 points per GLM".into())
}

pub fn oracle_formulas() -> Result<String, String> {
    let ln2 = 2f64.ln();
    let cases = [
        (
            "theorem3",
            theorem3_rhs(1.0, 1.0, 0.1, 0.1, 1.0, 1.0, 0.0, 0.0),
            17.8155,
            1e-4,
        ),
        (
            "theorem4",
            theorem4_rhs(1.0, 1.0, 1.0, 1.0, 1.0, 0.1),
            8.6052,
            1e-4,
        ),
        (
            "theorem5",
            theorem5_rhs(1.0, 1.0, 1.0, 1.0, ln2, (-1f64).exp(), &[1.0], &[ln2])
                .map_err(|e| e.to_string())?,
            1.0 + 2.0 * (ln2 + 1.0) + 0.5 * ln2,
            1e-12,
        ),
        (
            "appd_beta",
            appd_beta(1.0, 1.0, 1.0, 1.0, 0.1),
            64.841,
            1e-3,
        ),
        (
            "ay_radius",
            ay_radius(&Matrix::identity(2, 2), 1.0, 1.0, 1.0, 0.1).map_err(|e| e.to_string())?,
            3.1460,
            1e-4,
        ),
        (
            "subexp_radius",
            subexp_radius(&Matrix::identity(1, 1), 1.0, 0.5, 1.0, 0.1, 1.0)
                .map_err(|e| e.to_string())?,
            7.4915,
            1e-4,
        ),
        ("heuristic_radius", heuristic_radius(0.1), 4.6052, 1e-4),
    ];
    for (name, got, want, tol) in cases {
        if (got - want).abs() > tol {
            return Err(format!("{name}: {got} vs {want}"));
        }
    }
    Ok(format!("{} closed forms", cases.len()))
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    let v = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    v / n
}

/// `Σ‖u‖²_{V̄⁻¹} ≤ log det(V̄/λ) ≤ d·log(r²t/λ + 1)` on random sequences.
pub fn elliptical_potential(sequences: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..sequences {
        let d = rng.random_range(1..=8);
        let t = rng.random_range(1..=500);
        let lambda: f64 = rng.random_range(0.5..2.0);
        let r: f64 = rng.random_range(0.1..1.0);
        let us: Vec<Vector> = (0..t)
            .map(|_| random_unit(&mut rng, d) * rng.random_range(0.0..r))
            .collect();
        let (lhs, rhs) = elliptical_potential_check(&us, lambda).map_err(|e| e.to_string())?;
        let cap = elliptical_potential_cap(d, r, t, lambda);
        if !(lhs <= rhs + 1e-12 && rhs <= cap + 1e-12) {
            return Err(format!(
                "sequence {i} (d = {d}, t = {t}): {lhs} ≤ {rhs} ≤ {cap} fails"
            ));
        }
    }
    Ok(format!("{sequences} sequences"))
}

pub fn information_gain_identity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let d = rng.random_range(1..=6);
        let xs: Vec<Vector> = (0..50).map(|_| random_unit(&mut rng, d)).collect();
        let g = information_gain(&xs, d, 0.7, 1.3).map_err(|e| e.to_string())?;
        let sum: f64 = g.increments.iter().sum();
        let direct = g.log_det_gamma();
        if (sum - direct).abs() > 1e-8 || g.increments.iter().any(|&v| v < 0.0) {
            return Err(format!("Σ increments {sum} vs log det {direct}"));
        }
    }
    Ok("online and direct log-determinants agree".into())
}

/// Reconstruction error of the benchmark feature maps.
pub fn feature_reconstruction() -> Result<String, String> {
    let grids = [
        (uniform_grid(&[(0.0, 1.2)], 64), 0.06),
        (uniform_grid(&[(-1.0, 1.0), (-1.0, 1.0)], 10), 0.2),
    ];
    let mut errs = Vec::new();
    for (grid, ls) in grids {
        let grid = grid.map_err(|e| e.to_string())?;
        let f = build_features(&grid, ls, DEFAULT_TRUNCATION).map_err(|e| e.to_string())?;
        let err = f.reconstruction_error();
        if err > 1e-6 {
            return Err(format!(
                "{} points, lengthscale {ls}: error {err:.3e}",
                grid.len()
            ));
        }
        errs.push(format!("{err:.1e}"));
    }
    Ok(format!("errors {}", errs.join(", ")))
}

/// Runs every property; `fault` swaps in a wrong convention.
pub fn run(fault: Option<Fault>) -> Vec<PropertyResult> {
    vec![
        check("density_normalization", || density_normalization(fault)),
        check("nll_matches_log_ratio", || nll_matches_log_ratio(fault)),
        check("curvature_bounds", curvature_bounds),
        check("oracle_formulas", oracle_formulas),
        check("elliptical_potential", || elliptical_potential(100, 15)),
        check("information_gain_identity", information_gain_identity),
        check("feature_reconstruction", feature_reconstruction),
    ]
}
