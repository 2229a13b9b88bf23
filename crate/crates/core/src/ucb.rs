//! Optimistic values `max {xᵀθ : θ ∈ C_t}` over the likelihood-ratio set.
//!
//! The problem is solved through its Lagrangian dual
//! `D(η) = max_{‖θ‖≤B} xᵀθ − η(g(θ) − c)`, with `g` the weighted loss and
//! `c` the set's loss level. `D` is convex in `η` with derivative
//! `c − g(θ(η))`, so the optimal multiplier is the root of
//! `φ(η) = g(θ(η)) − c`; it is located by safeguarded false position in
//! `log η`. Every evaluated `D(η)` (corrected by the inner Frank–Wolfe gap)
//! is an upper bound on the optimum; mixing the inner solutions on both sides
//! of the root gives a feasible point and hence a lower bound. The reported
//! value is the best upper bound, so optimism is never lost to solver error.
//!
//! Only the span of the observed covariates matters for `g`, so the problem
//! is solved in an orthonormal basis of that span plus one coordinate along
//! the part of `x` outside it.

use crate::confidence::LrState;
use crate::error::{check_dim, Error, Result};
use crate::estimators::smoothing_schedule;
use crate::linalg::{ball_qp_diag, Matrix, PsdEigen, Vector};
use crate::loss::CompiledLoss;
use crate::models::ObservationModel;
use crate::solver::{minimize_on_ball, BallObjective, SolverOptions};

const ETA_MIN: f64 = 1e-6;
const ETA_MAX: f64 = 1e6;
const GAP_TOL: f64 = 1e-5;
const MAX_SEARCH: usize = 80;
/// Inner Newton iterations for the one-shot screening bound.
const SCREEN_ITER: usize = 5;
/// Finest Huber smoothing used by the multiplier search, relative to `b`.
const UCB_SMOOTHING_REL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct UcbSolution {
    /// Certified upper bound on `max {xᵀθ : θ ∈ C_t}`.
    pub value: f64,
    /// `xᵀθ` at the feasible point `theta` (a lower bound).
    pub primal: f64,
    /// `value − primal`.
    pub gap: f64,
    /// Final multiplier (0 when the ball constraint alone is binding).
    pub eta: f64,
    /// A member of `C_t` attaining `primal`.
    pub theta: Vector,
    pub certified: bool,
}

/// `½uᵀHu − bᵀu` in the eigenbasis of `H`.
#[derive(Debug, Clone)]
struct Quadratic {
    values: Vec<f64>,
    vectors: Matrix,
    b_rot: Vec<f64>,
}

/// Per-round data shared by all actions.
#[derive(Debug, Clone)]
pub struct UcbSolver {
    dim: usize,
    radius: f64,
    level: f64,
    basis: Matrix,
    loss: CompiledLoss,
    quad: Option<Quadratic>,
    schedule: Vec<f64>,
    /// Feasible point in full coordinates.
    interior: Vector,
    opts: SolverOptions,
    /// Multiplier search range, scaled by the curvature bound `L` so that
    /// `η·g` stays on the scale of `xᵀθ`.
    eta_min: f64,
    eta_max: f64,
    eta_start: f64,
    /// Upper bound on `g − g_ε` for the finest smoothing level.
    smoothing_slack: f64,
}

/// Orthonormal basis (columns) of the span of `points`.
fn span_basis(points: &[Vector], dim: usize) -> Matrix {
    let mut cols: Vec<Vector> = Vec::new();
    for p in points {
        let scale = p.norm();
        if scale == 0.0 {
            continue;
        }
        let mut v = p.clone();
        for _ in 0..2 {
            for q in &cols {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let n = v.norm();
        if n > 1e-10 * scale {
            cols.push(v / n);
        }
        if cols.len() == dim {
            break;
        }
    }
    if cols.is_empty() {
        return Matrix::zeros(dim, 0);
    }
    Matrix::from_columns(&cols)
}

/// Smoothing levels for the multiplier search. The Huber surrogate never
/// exceeds the exact loss, so the dual value computed with it is still an
/// upper bound; stopping at a coarser level only loosens it by at most
/// `η Σ w ε / (2b)` and keeps the inner problems well conditioned.
fn ucb_schedule(model: &ObservationModel) -> Vec<f64> {
    let mut s = smoothing_schedule(model);
    if let ObservationModel::Laplace { b } = model {
        let floor = UCB_SMOOTHING_REL * b;
        s.retain(|&e| e >= floor);
        if s.is_empty() {
            s.push(floor);
        }
    }
    s
}

impl UcbSolver {
    pub fn new(state: &LrState) -> Result<Self> {
        let cfg = state.config();
        let dim = cfg.dim;
        let level = state.threshold().loss_level();
        let l_scale = state.curvature().l;
        let basis = span_basis(state.lr_loss().points(), dim);
        let loss = state.lr_loss().project(&basis);
        let k = basis.ncols();
        let quad = if loss.is_quadratic() && k > 0 {
            let (_, g0, h) = loss.value_grad_hess(&Vector::zeros(k), 0.0);
            let eig = PsdEigen::new(&h);
            let b_rot = (eig.vectors.transpose() * (-g0)).as_slice().to_vec();
            Some(Quadratic {
                values: eig.values.as_slice().to_vec(),
                vectors: eig.vectors,
                b_rot,
            })
        } else {
            None
        };
        let mut solver = Self {
            dim,
            radius: cfg.radius,
            level,
            basis,
            schedule: ucb_schedule(&cfg.model),
            loss,
            quad,
            interior: state.leader().theta.clone(),
            opts: SolverOptions {
                tol: 1e-9,
                max_iter: 200,
            },
            eta_min: ETA_MIN / l_scale.max(1.0),
            eta_max: ETA_MAX / l_scale.min(1.0),
            eta_start: 1.0 / l_scale,
            smoothing_slack: 0.0,
        };
        if let ObservationModel::Laplace { b } = cfg.model {
            let eps = *solver.schedule.last().unwrap_or(&0.0);
            solver.smoothing_slack = solver.loss.total_weight() * eps / (2.0 * b);
        }
        solver.ensure_interior()?;
        Ok(solver)
    }

    /// Loss level `c` of the set `{g ≤ c}`.
    pub fn level(&self) -> f64 {
        self.level
    }

    fn g_full(&self, theta: &Vector) -> f64 {
        self.loss.value(&self.basis.tr_mul(theta))
    }

    /// Makes sure a member of the set is known, falling back from the
    /// running estimator to the loss minimizer.
    fn ensure_interior(&mut self) -> Result<()> {
        if self.basis.ncols() == 0 || self.g_full(&self.interior) <= self.level {
            return Ok(());
        }
        let k = self.basis.ncols();
        let obj = ScaledLoss {
            loss: &self.loss,
            ridge: 1e-10,
        };
        let start = self.basis.tr_mul(&self.interior);
        let sol = minimize_on_ball(&obj, start, self.radius, &self.schedule, &self.opts);
        let theta = &self.basis * &sol.x;
        let g = self.loss.value(&sol.x);
        debug_assert_eq!(sol.x.len(), k);
        if g <= self.level {
            self.interior = theta;
            Ok(())
        } else {
            Err(Error::Infeasible(format!(
                "minimum weighted loss {g:.6e} exceeds the level {:.6e}",
                self.level
            )))
        }
    }

    pub fn solve(&self, x: &Vector) -> Result<UcbSolution> {
        self.solve_from(x, self.eta_start, None, f64::NEG_INFINITY)
    }

    fn query(&self, x: &Vector) -> Query {
        let xs = self.basis.tr_mul(x);
        let perp = x - &self.basis * &xs;
        let r = perp.norm();
        let has_tau = r > 1e-12 * x.norm().max(1e-300);
        let mut a = xs.clone();
        if has_tau {
            a = a.push(r);
        }
        let a_rot = self.quad.as_ref().map(|q| {
            let mut v = (q.vectors.transpose() * &xs).as_slice().to_vec();
            if has_tau {
                v.push(r);
            }
            v
        });
        if let Some(r) = &a_rot {
            a = Vector::from_vec(r.clone());
        }
        Query {
            k: xs.len(),
            a,
            a_rot,
            perp: has_tau.then(|| perp / r),
        }
    }

    /// Multiplier search from `eta0`. A `warm` point (e.g. the previous
    /// round's solution for the same action) starts the inner solves and
    /// narrows the initial bracketing step. The search stops early, with
    /// `certified = false`, once the upper bound drops below `cutoff`.
    fn solve_from(
        &self,
        x: &Vector,
        eta0: f64,
        warm: Option<&Vector>,
        cutoff: f64,
    ) -> Result<UcbSolution> {
        check_dim(self.dim, x.len())?;
        let xnorm = x.norm();
        let b = self.radius;
        if xnorm == 0.0 {
            return Ok(exact(0.0, 0.0, self.interior.clone()));
        }
        // Largest point of the ball along x.
        let top = x * (b / xnorm);
        if self.basis.ncols() == 0 || self.g_full(&top) <= self.level {
            return Ok(exact(b * xnorm, 0.0, top));
        }
        let q = self.query(x);
        let prob = Problem {
            solver: self,
            q: &q,
        };
        let interior_v = prob.to_local(&self.interior);
        let mut best = Bounds {
            upper: f64::INFINITY,
            lower: x.dot(&self.interior),
            lower_v: interior_v,
            eta: eta0,
            slack: self.smoothing_slack,
        };

        let mut s = eta0.clamp(self.eta_min, self.eta_max).ln();
        let mut step = if warm.is_some() {
            1.5f64.ln()
        } else {
            10f64.ln()
        };
        let mut warm: Option<Vector> = warm.map(|t| prob.to_local(t));
        let mut lo: Option<(f64, f64, Vector)> = None; // φ > 0 side: (s, φ, v)
        let mut hi: Option<(f64, f64, Vector)> = None; // φ ≤ 0 side

        // Bracket the root of φ in log η.
        loop {
            let p = prob.eval(s.exp(), warm.as_ref());
            best.absorb_dual(&p);
            let phi = p.g - self.level;
            warm = Some(p.v.clone());
            if phi > 0.0 {
                lo = Some((s, phi, p.v));
                if hi.is_some() || s >= self.eta_max.ln() {
                    break;
                }
                s = (s + step).min(self.eta_max.ln());
                step *= 2.0;
            } else {
                prob.absorb_primal(&mut best, &p.v);
                hi = Some((s, phi, p.v));
                if lo.is_some() || s <= self.eta_min.ln() {
                    break;
                }
                s = (s - step).max(self.eta_min.ln());
                step *= 2.0;
            }
            if best.converged() || best.upper < cutoff {
                break;
            }
        }

        if let (Some(l), Some(h)) = (&lo, &hi) {
            prob.mix(&mut best, &l.2, &h.2);
        }
        let (mut lo, mut hi) = (lo, hi);
        let mut side = 0i8;
        for _ in 0..MAX_SEARCH {
            if best.converged() || best.upper < cutoff {
                break;
            }
            let (Some(l), Some(h)) = (&lo, &hi) else {
                break;
            };
            if (l.0 - h.0).abs() < 1e-13 {
                break;
            }
            // Illinois false position on φ(s).
            let (mut fl, mut fh) = (l.1, h.1);
            if side == 1 {
                fh *= 0.5;
            } else if side == -1 {
                fl *= 0.5;
            }
            let mut s_new = l.0 - fl * (h.0 - l.0) / (fh - fl);
            let width = (h.0 - l.0).abs();
            let lo_end = l.0.min(h.0) + 1e-3 * width;
            let hi_end = l.0.max(h.0) - 1e-3 * width;
            if !s_new.is_finite() || s_new < lo_end || s_new > hi_end {
                s_new = 0.5 * (l.0 + h.0);
            }
            let warm_v = if l.1 < -h.1 { &l.2 } else { &h.2 };
            let p = prob.eval(s_new.exp(), Some(warm_v));
            best.absorb_dual(&p);
            let phi = p.g - self.level;
            if phi > 0.0 {
                side = if side == -1 { -2 } else { -1 };
                lo = Some((s_new, phi, p.v));
            } else {
                prob.absorb_primal(&mut best, &p.v);
                side = if side == 1 { 2 } else { 1 };
                hi = Some((s_new, phi, p.v));
            }
            let (l, h) = (lo.as_ref().unwrap(), hi.as_ref().unwrap());
            prob.mix(&mut best, &l.2, &h.2);
        }

        let theta = prob.to_full(&best.lower_v);
        let upper = best.upper.max(best.lower);
        Ok(UcbSolution {
            value: upper,
            primal: best.lower,
            gap: upper - best.lower,
            eta: best.eta,
            theta,
            certified: best.converged(),
        })
    }

    /// Index of the action with the largest optimistic value (lowest index
    /// among ties) and the solved values. Actions that are provably worse
    /// than the incumbent are skipped and reported as `None`.
    pub fn select_action(&self, actions: &[Vector]) -> Result<(usize, Vec<Option<UcbSolution>>)> {
        self.select_action_hinted(actions, &[])
    }

    /// [`Self::select_action`] warm-started from earlier solutions for the
    /// same actions (`hints[j]` for `actions[j]`; missing entries or an
    /// empty slice mean no hint). Hints only affect speed: every reported
    /// value is still a certified bound for the current set.
    pub fn select_action_hinted(
        &self,
        actions: &[Vector],
        hints: &[Option<UcbSolution>],
    ) -> Result<(usize, Vec<Option<UcbSolution>>)> {
        if actions.is_empty() {
            return Err(Error::InvalidParameter("empty action set".into()));
        }
        let hint = |j: usize| {
            hints
                .get(j)
                .and_then(|h| h.as_ref())
                .filter(|h| h.eta > 0.0)
        };
        let mut out: Vec<Option<UcbSolution>> = vec![None; actions.len()];
        // Start from the previous winner or, without hints, the action the
        // estimator prefers: usually the winner either way.
        let first = actions
            .iter()
            .enumerate()
            .map(|(i, a)| {
                (
                    i,
                    hint(i).map_or_else(|| a.dot(&self.interior), |h| h.value),
                )
            })
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
        let first = first.0;
        let sol = match hint(first) {
            Some(h) => {
                self.solve_from(&actions[first], h.eta, Some(&h.theta), f64::NEG_INFINITY)?
            }
            None => self.solve(&actions[first])?,
        };
        let mut best_idx = first;
        let mut best_value = sol.value;
        let mut best_primal = sol.primal;
        let cuts = self.cuts_for(&actions[first], &sol);
        let eta_ref = if sol.eta > 0.0 {
            sol.eta
        } else {
            self.eta_start
        };
        let first_theta = sol.theta.clone();
        out[first] = Some(sol);

        // One warm-started dual evaluation per action is already a valid
        // upper bound; full solves go in decreasing order of that bound and
        // stop once it falls below the incumbent's feasible value.
        let mut candidates: Vec<(usize, f64)> = Vec::new();
        for (j, x) in actions.iter().enumerate() {
            if j == first {
                continue;
            }
            check_dim(self.dim, x.len())?;
            if let Some(c) = &cuts {
                if c.upper_bound(x, self.radius) < best_primal {
                    continue;
                }
            }
            let bound = match hint(j) {
                Some(h) => self.dual_bound(x, h.eta, Some(&h.theta)),
                None => self.dual_bound(x, eta_ref, Some(&first_theta)),
            };
            if bound >= best_primal {
                candidates.push((j, bound));
            }
        }
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (j, bound) in candidates {
            if bound < best_primal {
                break;
            }
            let x = &actions[j];
            // Stopping once the bound falls below the incumbent's feasible
            // value is safe: such an action cannot be the maximizer.
            let sol = match hint(j) {
                Some(h) => self.solve_from(x, h.eta, Some(&h.theta), best_primal)?,
                None => self.solve_from(x, eta_ref, None, best_primal)?,
            };
            let better = sol.value > best_value || (sol.value == best_value && j < best_idx);
            if better {
                best_idx = j;
                best_value = sol.value;
            }
            best_primal = best_primal.max(sol.primal);
            out[j] = Some(sol);
        }
        Ok((best_idx, out))
    }

    /// `D(η)` for one multiplier: an upper bound on the optimistic value.
    fn dual_bound(&self, x: &Vector, eta: f64, warm: Option<&Vector>) -> f64 {
        let xnorm = x.norm();
        let top = x * (self.radius / xnorm.max(f64::MIN_POSITIVE));
        if xnorm == 0.0 || self.basis.ncols() == 0 || self.g_full(&top) <= self.level {
            return self.radius * xnorm;
        }
        let q = self.query(x);
        let prob = Problem {
            solver: self,
            q: &q,
        };
        let warm_v = warm.map(|t| prob.to_local(t));
        let opts = SolverOptions {
            tol: self.opts.tol,
            max_iter: SCREEN_ITER,
        };
        prob.eval_with(
            eta.clamp(self.eta_min, self.eta_max),
            warm_v.as_ref(),
            &opts,
        )
        .dual
    }

    /// A linear lower model of `g` at the solution of one query, turned into
    /// a cheap upper bound for other queries: with `ℓ(θ) = g₀ + ∇gᵀ(θ − θ₀)
    /// ≤ g(θ)`, `max_θ xᵀθ − η(ℓ(θ) − c) = B‖x − η∇g‖ − η(g₀ − ∇gᵀθ₀ − c)`.
    fn cuts_for(&self, x: &Vector, sol: &UcbSolution) -> Option<Cut> {
        if sol.eta <= 0.0 || self.basis.ncols() == 0 {
            return None;
        }
        let q = self.query(x);
        let prob = Problem {
            solver: self,
            q: &q,
        };
        let v = prob.inner(sol.eta, Some(&prob.to_local(&sol.theta)), &self.opts);
        let theta0 = prob.to_full(&v);
        let u0 = self.basis.tr_mul(&theta0);
        let eps = *self.schedule.last().unwrap_or(&0.0);
        let (g0, grad_u) = self.loss.value_grad(&u0, eps);
        let grad = &self.basis * grad_u;
        Some(Cut {
            eta: sol.eta,
            offset: sol.eta * (g0 - grad.dot(&theta0) - self.level),
            grad,
        })
    }
}

fn exact(value: f64, eta: f64, theta: Vector) -> UcbSolution {
    UcbSolution {
        value,
        primal: value,
        gap: 0.0,
        eta,
        theta,
        certified: true,
    }
}

struct Cut {
    eta: f64,
    offset: f64,
    grad: Vector,
}

impl Cut {
    fn upper_bound(&self, x: &Vector, radius: f64) -> f64 {
        radius * (x - &self.grad * self.eta).norm() - self.offset
    }
}

struct Query {
    k: usize,
    /// Objective in local coordinates `(u, τ)` (eigenbasis coordinates for
    /// quadratic losses).
    a: Vector,
    /// `a` in the eigenbasis of the quadratic loss.
    a_rot: Option<Vec<f64>>,
    /// Unit direction of `x` outside the data span.
    perp: Option<Vector>,
}

struct Bounds {
    upper: f64,
    lower: f64,
    lower_v: Vector,
    eta: f64,
    /// Bound on `g − g_ε`: the part of the gap caused by smoothing.
    slack: f64,
}

impl Bounds {
    fn converged(&self) -> bool {
        self.upper - self.lower <= GAP_TOL * (1.0 + self.lower.abs()) + self.eta * self.slack
    }

    fn absorb_dual(&mut self, p: &Evaluated) {
        if p.dual < self.upper {
            self.upper = p.dual;
            self.eta = p.eta;
        }
    }
}

struct Evaluated {
    v: Vector,
    /// Loss at `v` (smoothed for nonsmooth models).
    g: f64,
    /// Upper bound on `D(η)`.
    dual: f64,
    eta: f64,
}

struct Problem<'a> {
    solver: &'a UcbSolver,
    q: &'a Query,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.q.a.len()
    }

    /// Local coordinates of a full-space point (dropping components that
    /// affect neither the objective nor the loss).
    fn to_local(&self, theta: &Vector) -> Vector {
        let s = self.solver;
        let u = s.basis.tr_mul(theta);
        let mut v = match &s.quad {
            Some(q) => q.vectors.tr_mul(&u),
            None => u,
        };
        if let Some(p) = &self.q.perp {
            v = v.push(p.dot(theta));
        }
        // Keep inside the ball despite rounding.
        let n = v.norm();
        if n > s.radius {
            v *= s.radius / n;
        }
        v
    }

    fn to_full(&self, v: &Vector) -> Vector {
        let s = self.solver;
        let k = self.q.k;
        let head = v.rows(0, k).into_owned();
        let u = match &s.quad {
            Some(q) => &q.vectors * head,
            None => head,
        };
        let mut theta = &s.basis * u;
        if let Some(p) = &self.q.perp {
            theta.axpy(v[k], p, 1.0);
        }
        theta
    }

    /// Exact loss at local point `v`; decides membership.
    fn g(&self, v: &Vector) -> f64 {
        let s = self.solver;
        let head = v.rows(0, self.q.k).into_owned();
        match &s.quad {
            Some(q) => s.loss.value(&(&q.vectors * head)),
            None => s.loss.value(&head),
        }
    }

    /// Loss used by the multiplier search: the eigenbasis formula for
    /// quadratic losses, the final Huber surrogate for nonsmooth ones.
    fn g_smoothed(&self, v: &Vector) -> f64 {
        let s = self.solver;
        match &s.quad {
            Some(q) => (0..self.q.k)
                .map(|i| 0.5 * q.values[i] * v[i] * v[i] - q.b_rot[i] * v[i])
                .sum(),
            None => s.loss.smoothed_value(
                &v.rows(0, self.q.k).into_owned(),
                *s.schedule.last().unwrap(),
            ),
        }
    }

    /// Maximizer of `aᵀv − η g(v)` over the ball.
    fn inner(&self, eta: f64, warm: Option<&Vector>, opts: &SolverOptions) -> Vector {
        let s = self.solver;
        let k = self.q.k;
        match (&s.quad, &self.q.a_rot) {
            (Some(q), Some(a_rot)) => {
                let n = self.n();
                let mut vals = Vec::with_capacity(n);
                let mut c = Vec::with_capacity(n);
                for i in 0..k {
                    vals.push(eta * q.values[i]);
                    c.push(eta * q.b_rot[i] + a_rot[i]);
                }
                if n > k {
                    vals.push(0.0);
                    c.push(a_rot[k]);
                }
                Vector::from_vec(ball_qp_diag(&vals, &c, s.radius).0)
            }
            _ => {
                let obj = InnerObjective {
                    loss: &s.loss,
                    eta,
                    a: &self.q.a,
                    k,
                };
                let (x0, schedule) = match warm {
                    Some(w) => (w.clone(), &s.schedule[s.schedule.len() - 1..]),
                    None => (Vector::zeros(self.n()), &s.schedule[..]),
                };
                minimize_on_ball(&obj, x0, s.radius, schedule, opts).x
            }
        }
    }

    /// Inner solve plus a rigorous upper bound on `D(η)`.
    fn eval(&self, eta: f64, warm: Option<&Vector>) -> Evaluated {
        self.eval_with(eta, warm, &self.solver.opts)
    }

    /// As [`Self::eval`] with explicit inner-solver options; the bound stays
    /// valid for any inner iterate because the Frank–Wolfe gap is added.
    fn eval_with(&self, eta: f64, warm: Option<&Vector>, opts: &SolverOptions) -> Evaluated {
        let s = self.solver;
        let v = self.inner(eta, warm, opts);
        let g = self.g_smoothed(&v);
        let lin = self.q.a.dot(&v);
        // Frank–Wolfe gap of the inner concave maximization.
        let grad = self.inner_gradient(eta, &v);
        let fw = (s.radius * grad.norm() - grad.dot(&v)).max(0.0);
        Evaluated {
            dual: lin - eta * (g - s.level) + fw,
            v,
            g,
            eta,
        }
    }

    /// Gradient of `aᵀv − η g(v)` (smoothed).
    fn inner_gradient(&self, eta: f64, v: &Vector) -> Vector {
        let s = self.solver;
        let k = self.q.k;
        let mut grad = self.q.a.clone();
        match &s.quad {
            Some(q) => {
                for i in 0..k {
                    grad[i] -= eta * (q.values[i] * v[i] - q.b_rot[i]);
                }
            }
            None => {
                let eps = *s.schedule.last().unwrap();
                let (_, gu) = s.loss.value_grad(&v.rows(0, k).into_owned(), eps);
                for i in 0..k {
                    grad[i] -= eta * gu[i];
                }
            }
        }
        grad
    }

    fn absorb_primal(&self, best: &mut Bounds, v: &Vector) {
        if self.g(v) <= self.solver.level {
            let val = self.q.a.dot(v);
            if val > best.lower {
                best.lower = val;
                best.lower_v = v.clone();
            }
        }
    }

    /// Best feasible point on the segment from a feasible `feas` towards an
    /// infeasible `infeas` (the loss is convex along the segment).
    fn mix(&self, best: &mut Bounds, infeas: &Vector, feas: &Vector) {
        let c = self.solver.level;
        if self.g(feas) > c || self.q.a.dot(infeas) <= self.q.a.dot(feas) {
            return;
        }
        let (mut t0, mut t1) = (0.0, 1.0);
        for _ in 0..60 {
            let t = 0.5 * (t0 + t1);
            let v = feas + (infeas - feas) * t;
            if self.g(&v) <= c {
                t0 = t;
            } else {
                t1 = t;
            }
            if t1 - t0 < 1e-14 {
                break;
            }
        }
        let v = feas + (infeas - feas) * t0;
        self.absorb_primal(best, &v);
    }
}

/// `η·g_ε(u) − aᵀv` over local coordinates `v = (u, τ)`.
struct InnerObjective<'a> {
    loss: &'a CompiledLoss,
    eta: f64,
    a: &'a Vector,
    k: usize,
}

impl BallObjective for InnerObjective<'_> {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, v: &Vector, eps: f64) -> f64 {
        self.eta
            * self
                .loss
                .smoothed_value(&v.rows(0, self.k).into_owned(), eps)
            - self.a.dot(v)
    }

    fn value_grad_hess(&self, v: &Vector, eps: f64) -> (f64, Vector, Matrix) {
        let n = self.a.len();
        let k = self.k;
        let (f, g, h) = self.loss.value_grad_hess(&v.rows(0, k).into_owned(), eps);
        let mut grad = -self.a.clone();
        let mut hess = Matrix::zeros(n, n);
        for i in 0..k {
            grad[i] += self.eta * g[i];
            for j in 0..k {
                hess[(i, j)] = self.eta * h[(i, j)];
            }
        }
        (self.eta * f - self.a.dot(v), grad, hess)
    }
}

/// `g(u) + ridge‖u‖²`, used to find a member of the set when the running
/// estimator is not one.
struct ScaledLoss<'a> {
    loss: &'a CompiledLoss,
    ridge: f64,
}

impl BallObjective for ScaledLoss<'_> {
    fn dim(&self) -> usize {
        self.loss.dim()
    }

    fn value(&self, u: &Vector, eps: f64) -> f64 {
        self.loss.smoothed_value(u, eps) + self.ridge * u.norm_squared()
    }

    fn value_grad_hess(&self, u: &Vector, eps: f64) -> (f64, Vector, Matrix) {
        let (f, mut g, mut h) = self.loss.value_grad_hess(u, eps);
        g.axpy(2.0 * self.ridge, u, 1.0);
        for i in 0..h.nrows() {
            h[(i, i)] += 2.0 * self.ridge;
        }
        (f + self.ridge * u.norm_squared(), g, h)
    }
}

/// `max {xᵀθ : θ ∈ C_t}` for one covariate.
pub fn ucb_value(state: &LrState, x: &Vector) -> Result<UcbSolution> {
    UcbSolver::new(state)?.solve(x)
}

/// Action with the largest optimistic value; ties go to the lowest index.
pub fn select_action(state: &LrState, actions: &[Vector]) -> Result<usize> {
    Ok(UcbSolver::new(state)?.select_action(actions)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confidence::{LrConfig, Weighting};
    use crate::models::ObservationModel;
    use rand::{Rng, SeedableRng};

    fn grid_max(state: &LrState, x: &Vector, step: f64) -> f64 {
        let b = state.config().radius;
        let n = (b / step).round() as i64;
        let mut best = f64::NEG_INFINITY;
        for i in -n..=n {
            for j in -n..=n {
                let th = Vector::from_vec(vec![i as f64 * step, j as f64 * step]);
                if th.norm() <= b && state.membership(&th).unwrap() {
                    best = best.max(x.dot(&th));
                }
            }
        }
        best
    }

    fn random_state(model: ObservationModel, t: usize, seed: u64) -> LrState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cfg = LrConfig::new(model, 2, 1.0, 1.0, 0.1).with_weighting(Weighting::Classical);
        let mut s = LrState::new(cfg).unwrap();
        let theta = Vector::from_vec(vec![0.6, -0.3]);
        for _ in 0..t {
            let a: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let x = Vector::from_vec(vec![a.cos(), a.sin()]) * 0.9;
            let y = model.sample(x.dot(&theta), &mut rng);
            s.update(&x, y).unwrap();
        }
        s
    }

    #[test]
    fn empty_state_gives_ball_value() {
        let s = LrState::new(LrConfig::new(ObservationModel::Poisson, 3, 2.0, 1.0, 0.1)).unwrap();
        let x = Vector::from_vec(vec![0.3, 0.4, 0.0]);
        let sol = ucb_value(&s, &x).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-15);
        assert_eq!(ucb_value(&s, &Vector::zeros(3)).unwrap().value, 0.0);
    }

    #[test]
    fn matches_grid_search_in_two_dimensions() {
        for (i, model) in [
            ObservationModel::Gaussian { sigma: 0.5 },
            ObservationModel::Poisson,
            ObservationModel::Laplace { b: 0.5 },
            ObservationModel::Weibull { p: 2.0 },
        ]
        .into_iter()
        .enumerate()
        {
            let s = random_state(model, 12, 40 + i as u64);
            let x = Vector::from_vec(vec![0.8, 0.5]);
            let sol = ucb_value(&s, &x).unwrap();
            let grid = grid_max(&s, &x, 0.01);
            assert!(
                sol.value >= grid - 1e-9,
                "{model:?}: {} < {grid}",
                sol.value
            );
            assert!(
                (sol.value - grid).abs() < 2e-2,
                "{model:?}: {} vs {grid}",
                sol.value
            );
            assert!(s.membership(&sol.theta).unwrap());
            assert!(sol.value >= x.dot(&s.leader().theta) - 1e-7);
        }
    }

    #[test]
    fn selection_agrees_with_exhaustive_solve() {
        let s = random_state(ObservationModel::Poisson, 20, 5);
        let actions: Vec<Vector> = (0..12)
            .map(|i| {
                let a = i as f64 * 0.5;
                Vector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect();
        let solver = UcbSolver::new(&s).unwrap();
        let (idx, _) = solver.select_action(&actions).unwrap();
        let values: Vec<f64> = actions
            .iter()
            .map(|a| solver.solve(a).unwrap().value)
            .collect();
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(values[idx] >= best - 1e-5);
    }
}
