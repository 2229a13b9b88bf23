//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn cholesky(a: &Matrix) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(a.clone())
}

pub fn solve_spd(a: &Matrix, b: &Vector) -> Option<Vector> {
    cholesky(a).map(|c| c.solve(b))
}

/// `xᵀ A⁻¹ x` for symmetric positive definite `A`.
pub fn inv_quad_form(a: &Matrix, x: &Vector) -> Option<f64> {
    let chol = cholesky(a)?;
    let l = chol.l();
    let z = l.solve_lower_triangular(x)?;
    Some(z.norm_squared())
}

pub fn log_det_spd(a: &Matrix) -> Option<f64> {
    let chol = cholesky(a)?;
    let l = chol.l();
    Some(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// `xᵀ A x`.
pub fn quad_form(a: &Matrix, x: &Vector) -> f64 {
    x.dot(&(a * x))
}

/// Adds `scale · x xᵀ` to `a` in place.
pub fn rank_one_update(a: &mut Matrix, x: &Vector, scale: f64) {
    a.ger(scale, x, x, 1.0);
}

/// Radial projection onto the Euclidean ball of the given radius.
pub fn project_ball(v: &mut Vector, radius: f64) {
    let n = v.norm();
    if n > radius {
        *v *= radius / n;
    }
}

/// Eigen-decomposition of a symmetric PSD matrix with negative roundoff
/// eigenvalues clamped to zero.
#[derive(Debug, Clone)]
pub struct PsdEigen {
    pub values: Vector,
    pub vectors: Matrix,
}

impl PsdEigen {
    pub fn new(h: &Matrix) -> Self {
        let sym = (h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let values = eig.eigenvalues.map(|v| v.max(0.0));
        Self {
            values,
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Solves `min ½ uᵀHu − cᵀu` subject to `‖u‖ ≤ radius` for PSD `H`.
///
/// Returns the minimizer and the multiplier `ρ ≥ 0` of the ball constraint
/// (`(H + ρI)u = c`).
pub fn ball_qp(eig: &PsdEigen, c: &Vector, radius: f64) -> (Vector, f64) {
    let ct = eig.vectors.transpose() * c;
    let (coef, rho) = ball_qp_diag(eig.values.as_slice(), ct.as_slice(), radius);
    (&eig.vectors * Vector::from_vec(coef), rho)
}

/// [`ball_qp`] in the eigenbasis: `values` are the (nonnegative) eigenvalues
/// and `c` the rotated linear term.
pub fn ball_qp_diag(values: &[f64], c: &[f64], radius: f64) -> (Vec<f64>, f64) {
    debug_assert_eq!(values.len(), c.len());
    let lmax = values.iter().cloned().fold(0.0_f64, f64::max);
    let zero_tol = 1e-13 * lmax.max(1e-300);
    let cnorm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if cnorm == 0.0 || radius <= 0.0 {
        return (vec![0.0; c.len()], 0.0);
    }

    let sol = |rho: f64| -> Vec<f64> {
        values
            .iter()
            .zip(c)
            .map(|(&l, &ci)| {
                let den = l + rho;
                if den <= zero_tol {
                    0.0
                } else {
                    ci / den
                }
            })
            .collect()
    };
    let norm = |u: &[f64]| u.iter().map(|v| v * v).sum::<f64>().sqrt();

    // Unconstrained (minimum-norm) minimizer exists when c has no weight on
    // the null space.
    let null_weight: f64 = values
        .iter()
        .zip(c)
        .filter(|(&l, _)| l <= zero_tol)
        .map(|(_, &ci)| ci * ci)
        .sum::<f64>()
        .sqrt();
    if null_weight <= 1e-14 * cnorm {
        let u = sol(0.0);
        if norm(&u) <= radius {
            return (u, 0.0);
        }
    }

    // Secular equation φ(ρ) = 1/‖u(ρ)‖ − 1/R, increasing and concave in ρ.
    let mut lo = 0.0_f64;
    let mut hi = cnorm / radius;
    let target = 1.0 / radius;
    let mut rho = if null_weight > 0.0 {
        // ‖u(ρ)‖ ≥ null_weight/ρ, so the root is at least null_weight/R.
        (null_weight / radius).max(1e-300)
    } else {
        0.0
    };
    lo = lo.max(if null_weight > 0.0 { rho } else { 0.0 });
    for _ in 0..200 {
        let mut s2 = 0.0;
        let mut s3 = 0.0;
        for (&l, &ci) in values.iter().zip(c) {
            let den = l + rho;
            if den <= zero_tol {
                continue;
            }
            let q = ci / den;
            s2 += q * q;
            s3 += q * q / den;
        }
        let un = s2.sqrt();
        let phi = 1.0 / un - target;
        if un.is_finite() && (un - radius).abs() <= 1e-13 * radius {
            break;
        }
        if phi < 0.0 {
            lo = lo.max(rho);
        } else {
            hi = hi.min(rho);
        }
        // φ'(ρ) = s3 / ‖u‖³
        let dphi = s3 / (un * un * un);
        let mut next = if dphi > 0.0 && un.is_finite() {
            rho - phi / dphi
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) <= 1e-15 * hi.max(1e-300) {
            rho = next;
            break;
        }
        rho = next;
    }
    let mut u = sol(rho);
    let n = norm(&u);
    if n > radius {
        for v in &mut u {
            *v *= radius / n;
        }
    }
    (u, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_qp_interior_solution() {
        let h = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let c = Vector::from_vec(vec![1.0, 1.0]);
        let (u, rho) = ball_qp(&PsdEigen::new(&h), &c, 10.0);
        assert!(rho == 0.0);
        assert!((u[0] - 0.5).abs() < 1e-12 && (u[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ball_qp_singular_hessian_hits_boundary() {
        // Linear objective: solution is the boundary point along c.
        let h = Matrix::zeros(3, 3);
        let c = Vector::from_vec(vec![3.0, 0.0, 4.0]);
        let (u, _) = ball_qp(&PsdEigen::new(&h), &c, 2.0);
        assert!((u.norm() - 2.0).abs() < 1e-12);
        assert!((u[0] - 1.2).abs() < 1e-9 && (u[2] - 1.6).abs() < 1e-9);
    }

    #[test]
    fn ball_qp_active_constraint_matches_kkt() {
        let h = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let c = Vector::from_vec(vec![5.0, -2.0]);
        let (u, rho) = ball_qp(&PsdEigen::new(&h), &c, 1.0);
        assert!((u.norm() - 1.0).abs() < 1e-10);
        let resid = (&h * &u + &u * rho) - &c;
        assert!(resid.norm() < 1e-8, "{resid}");
        assert!(rho > 0.0);
    }

    #[test]
    fn log_det_and_inv_quad() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert!((log_det_spd(&a).unwrap() - 6.0_f64.ln()).abs() < 1e-14);
        let x = Vector::from_vec(vec![1.0, 1.0]);
        assert!((inv_quad_form(&a, &x).unwrap() - (0.5 + 1.0 / 3.0)).abs() < 1e-14);
    }
}
