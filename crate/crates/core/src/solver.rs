//! Damped Newton minimization of convex objectives over a Euclidean ball.
//!
//! Each iteration minimizes the local quadratic model over the ball (a
//! one-dimensional secular equation solved with Cholesky factorizations,
//! falling back to an eigen-decomposition), then
//! backtracks along the segment to that point with an Armijo test (steps
//! must strictly decrease the objective, so stagnation ends the stage). Segment
//! points stay feasible, so no projection of the Newton iterate is needed.
//! A projected-gradient step is the fallback when the Newton direction does
//! not decrease the objective.

use serde::{Deserialize, Serialize};

use crate::linalg::{ball_qp, cholesky, project_ball, Matrix, PsdEigen, Vector};

const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACK: usize = 60;
const MAX_SECULAR: usize = 40;
const SECULAR_TOL: f64 = 1e-10;

/// Objective interface for [`minimize_on_ball`]. `smoothing` is a Huber
/// half-width for nonsmooth terms; smooth objectives ignore it.
pub trait BallObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector, smoothing: f64) -> f64;
    fn value_grad_hess(&self, x: &Vector, smoothing: f64) -> (f64, Vector, Matrix);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Projected-gradient tolerance.
    pub tol: f64,
    /// Newton iterations across all smoothing stages.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BallSolution {
    pub x: Vector,
    /// Objective at `x` for the last smoothing stage.
    pub value: f64,
    /// `‖x − P(x − ∇f(x))‖`, zero exactly at a constrained stationary point.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Projected-gradient residual `‖x − P(x − g)‖`.
pub fn projected_residual(x: &Vector, g: &Vector, radius: f64) -> f64 {
    let mut p = x - g;
    project_ball(&mut p, radius);
    (x - p).norm()
}

pub fn minimize_on_ball<O: BallObjective>(
    obj: &O,
    x0: Vector,
    radius: f64,
    schedule: &[f64],
    opts: &SolverOptions,
) -> BallSolution {
    let mut x = x0;
    project_ball(&mut x, radius);
    let mut iterations = 0;
    let mut value = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let last_stage = schedule.len().saturating_sub(1);

    for (stage, &eps) in schedule.iter().enumerate() {
        converged = false;
        let final_stage = stage == last_stage;
        // Intermediate continuation stages only need a rough solution.
        let tol = if final_stage {
            opts.tol
        } else {
            opts.tol.max(1e-4)
        };
        loop {
            let (f, g, h) = obj.value_grad_hess(&x, eps);
            value = f;
            residual = projected_residual(&x, &g, radius);
            if residual <= tol {
                converged = true;
                break;
            }
            if iterations >= opts.max_iter {
                break;
            }
            iterations += 1;

            let target = newton_target(&x, &g, &h, radius);
            let d = &target - &x;
            let slope = g.dot(&d);
            let mut moved = false;
            if slope < 0.0 {
                let mut s = 1.0;
                for _ in 0..MAX_BACKTRACK {
                    let cand = &x + &d * s;
                    let fc = obj.value(&cand, eps);
                    if fc < f && fc <= f + ARMIJO * s * slope {
                        x = cand;
                        moved = true;
                        break;
                    }
                    s *= SHRINK;
                }
            }
            if !moved {
                moved = projected_gradient_step(obj, &mut x, f, &g, &h, radius, eps);
            }
            if !moved {
                // No representable decrease left: we are at the numerical
                // optimum of this stage.
                converged = residual <= tol.max(1e-6 * (1.0 + g.norm()));
                break;
            }
        }
        if !final_stage && iterations >= opts.max_iter {
            break;
        }
    }
    BallSolution {
        x,
        value,
        residual,
        iterations,
        converged,
    }
}

/// Minimizer of the local quadratic model over the ball.
fn newton_target(x: &Vector, g: &Vector, h: &Matrix, radius: f64) -> Vector {
    if let Some(ch) = cholesky(h) {
        let xn = x - ch.solve(g);
        if xn.norm() <= radius {
            return xn;
        }
    }
    let c = h * x - g;
    ball_qp_cholesky(h, &c, radius).unwrap_or_else(|| ball_qp(&PsdEigen::new(h), &c, radius).0)
}

/// `min ½ uᵀHu − cᵀu` over the ball by Newton's method on the secular
/// equation `1/‖u(ρ)‖ = 1/radius` with `(H + ρI)u(ρ) = c`, one Cholesky
/// factorization per step. Starting below the root makes the iterates
/// increase monotonically. `None` when it fails to settle.
fn ball_qp_cholesky(h: &Matrix, c: &Vector, radius: f64) -> Option<Vector> {
    let cnorm = c.norm();
    if cnorm == 0.0 {
        return Some(Vector::zeros(c.len()));
    }
    let hnorm = h.norm();
    let mut rho = (cnorm / radius - hnorm).max(1e-12 * (hnorm + cnorm / radius));
    for _ in 0..MAX_SECULAR {
        let mut shifted = h.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += rho;
        }
        let ch = cholesky(&shifted)?;
        let u = ch.solve(c);
        let un = u.norm();
        if un <= radius * (1.0 + SECULAR_TOL) {
            // Inside the ball: either the root or an (almost) unconstrained
            // minimizer that the tiny starting shift barely perturbs.
            return Some(u);
        }
        let w = ch.l().solve_lower_triangular(&u)?;
        let step = (un * un / w.norm_squared()) * ((un - radius) / radius);
        if !step.is_finite() || step <= 0.0 {
            return None;
        }
        rho += step;
        if un <= radius * (1.0 + 1e-3) && step <= SECULAR_TOL * rho {
            return Some(u * (radius / un));
        }
    }
    None
}

fn projected_gradient_step<O: BallObjective>(
    obj: &O,
    x: &mut Vector,
    f: f64,
    g: &Vector,
    h: &Matrix,
    radius: f64,
    eps: f64,
) -> bool {
    let lip = h.norm().max(1e-12);
    let mut t = 1.0 / lip;
    for _ in 0..MAX_BACKTRACK {
        let mut cand = &*x - g * t;
        project_ball(&mut cand, radius);
        let step = &cand - &*x;
        if step.norm() == 0.0 {
            return false;
        }
        let fc = obj.value(&cand, eps);
        if fc < f && fc <= f + ARMIJO * g.dot(&step) {
            *x = cand;
            return true;
        }
        t *= SHRINK;
    }
    false
}
