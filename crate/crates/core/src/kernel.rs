//! Exact finite feature maps for a squared-exponential RKHS restricted to a
//! grid, and the benchmark payoff functions.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix, Vector};

pub const DEFAULT_TRUNCATION: f64 = 1e-10;
pub const DEFAULT_JITTER: f64 = 1e-10;

/// `k(x, x') = exp(−‖x − x'‖²/(2ℓ²))`.
pub fn se_kernel(a: &[f64], b: &[f64], lengthscale: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * lengthscale * lengthscale)).exp()
}

/// Uniform grid with `n` points per axis on the box `bounds`, in row-major
/// order (last axis fastest).
pub fn uniform_grid(bounds: &[(f64, f64)], n: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || bounds.is_empty() {
        return Err(Error::InvalidParameter(
            "grid needs at least one point and one axis".into(),
        ));
    }
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        if n == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        }
    };
    let mut points = vec![Vec::new()];
    for &b in bounds {
        let ax = axis(b);
        points = points
            .into_iter()
            .flat_map(|p| {
                ax.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Feature vectors `φ(x_i)` (rows of `phi`) with `φ(x_i)ᵀφ(x_j) = scale⁻²·k(x_i, x_j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMap {
    pub grid: Vec<Vec<f64>>,
    pub phi: Matrix,
    pub lengthscale: f64,
    pub tol: f64,
    /// Global factor applied so that `max ‖φ(x_i)‖ = 1`.
    pub scale: f64,
}

impl FeatureMap {
    pub fn rank(&self) -> usize {
        self.phi.ncols()
    }

    pub fn feature(&self, i: usize) -> Vector {
        self.phi.row(i).transpose()
    }

    pub fn features(&self) -> Vec<Vector> {
        (0..self.phi.nrows()).map(|i| self.feature(i)).collect()
    }

    /// Largest `|φ(x_i)ᵀφ(x_j)/scale² − k(x_i, x_j)|` over the grid.
    pub fn reconstruction_error(&self) -> f64 {
        let gram = &self.phi * self.phi.transpose() / (self.scale * self.scale);
        let mut err: f64 = 0.0;
        for i in 0..self.grid.len() {
            for j in 0..self.grid.len() {
                let k = se_kernel(&self.grid[i], &self.grid[j], self.lengthscale);
                err = err.max((gram[(i, j)] - k).abs());
            }
        }
        err
    }
}

/// Eigen-features of the grid kernel matrix, truncated at relative
/// eigenvalue `tol` and rescaled to unit maximal norm.
pub fn build_features(grid: &[Vec<f64>], lengthscale: f64, tol: f64) -> Result<FeatureMap> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    if !(lengthscale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lengthscale must be > 0, got {lengthscale}"
        )));
    }
    let n = grid.len();
    let k = Matrix::from_fn(n, n, |i, j| {
        se_kernel(&grid[i], &grid[j], lengthscale) + if i == j { DEFAULT_JITTER } else { 0.0 }
    });
    let eig = SymmetricEigen::new(k);
    let min = eig.eigenvalues.min();
    if min < -1e-8 {
        return Err(Error::NotPsd(min));
    }
    let mut order: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] >= tol).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut phi = Matrix::zeros(n, order.len());
    for (c, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i) * eig.eigenvalues[i].sqrt();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                col = -col;
            }
        }
        phi.set_column(c, &col);
    }
    let max_norm = (0..n).map(|i| phi.row(i).norm()).fold(0.0, f64::max);
    let scale = if max_norm > 0.0 { 1.0 / max_norm } else { 1.0 };
    phi *= scale;
    Ok(FeatureMap {
        grid: grid.to_vec(),
        phi,
        lengthscale,
        tol,
        scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    /// `r(x) = −(1.4 − 3x)·sin(18x)` on `[0, 1.2]`.
    F41d,
    /// Negated six-hump camelback; inputs `u ∈ [−1, 1]²` map to
    /// `(2u₁, u₂)`, the usual `[−2, 2] × [−1, 1]` box.
    Camelback,
}

impl Benchmark {
    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::F41d => "f4_1d",
            Benchmark::Camelback => "camelback",
        }
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            Benchmark::F41d => vec![(0.0, 1.2)],
            Benchmark::Camelback => vec![(-1.0, 1.0), (-1.0, 1.0)],
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let bounds = self.bounds();
        if x.len() != bounds.len() {
            return Err(Error::DimensionMismatch {
                expected: bounds.len(),
                found: x.len(),
            });
        }
        for (&v, &(lo, hi)) in x.iter().zip(&bounds) {
            if !(v >= lo - 1e-12 && v <= hi + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "{} is outside the {} domain [{lo}, {hi}]",
                    v,
                    self.name()
                )));
            }
        }
        Ok(match self {
            Benchmark::F41d => f4_1d(x[0]),
            Benchmark::Camelback => -six_hump_camel(2.0 * x[0], x[1]),
        })
    }
}

pub fn f4_1d(x: f64) -> f64 {
    -(1.4 - 3.0 * x) * (18.0 * x).sin()
}

/// `4x² − 2.1x⁴ + x⁶/3 + xy − 4y² + 4y⁴`.
pub fn six_hump_camel(x: f64, y: f64) -> f64 {
    let x2 = x * x;
    let y2 = y * y;
    4.0 * x2 - 2.1 * x2 * x2 + x2 * x2 * x2 / 3.0 + x * y - 4.0 * y2 + 4.0 * y2 * y2
}

/// `θ⋆` whose features reproduce a payoff on the grid.
#[derive(Debug, Clone)]
pub struct ProjectedPayoff {
    pub theta: Vector,
    pub norm: f64,
    /// Largest `|φ(x_i)ᵀθ − r(x_i)|`.
    pub residual: f64,
}

/// Kernel-ridge fit `(ΦᵀΦ + λI)⁻¹Φᵀr`, rejected when the grid residual
/// exceeds `max_residual`.
pub fn project_payoff(
    fmap: &FeatureMap,
    values: &[f64],
    lambda_fit: f64,
    max_residual: f64,
) -> Result<ProjectedPayoff> {
    let n = fmap.phi.nrows();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: values.len(),
        });
    }
    let m = fmap.rank();
    let r = Vector::from_column_slice(values);
    let a = fmap.phi.tr_mul(&fmap.phi) + Matrix::identity(m, m) * lambda_fit;
    let theta = solve_spd(&a, &fmap.phi.tr_mul(&r)).ok_or(Error::Singular("payoff fit"))?;
    let residual = (&fmap.phi * &theta - &r).amax();
    if residual > max_residual {
        return Err(Error::NotRepresentable {
            residual,
            tol: max_residual,
        });
    }
    Ok(ProjectedPayoff {
        norm: theta.norm(),
        theta,
        residual,
    })
}
