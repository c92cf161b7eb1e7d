//! Bounded nonlinear least squares by a trust-region reflective method.
//!
//! Each iteration minimises the Gauss–Newton model of `½‖r(ξ + p)‖²` over a
//! two-dimensional subspace (scaled gradient and Gauss–Newton direction)
//! inside a trust region. Bounds enter through Coleman–Li affine scaling;
//! steps that leave the box are either truncated, reflected off the first
//! bound hit, or replaced by a bounded gradient step, whichever the quadratic
//! model prefers. Iterates stay strictly feasible.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{ensure, Error, Result};

/// Residual vector and Jacobian of a least-squares problem.
pub trait LeastSquaresProblem {
    fn residual(&self, p: &DVector<f64>) -> Result<DVector<f64>>;

    /// Defaults to forward differences with step `√ε·max(|ξ|, 1)`.
    fn jacobian(&self, p: &DVector<f64>, r: &DVector<f64>) -> Result<DMatrix<f64>> {
        forward_difference_jacobian(|q| self.residual(q), p, r)
    }
}

pub fn forward_difference_jacobian(
    f: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    p: &DVector<f64>,
    r: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let eps = f64::EPSILON.sqrt();
    let mut jac = DMatrix::zeros(r.len(), p.len());
    for j in 0..p.len() {
        let h = eps * p[j].abs().max(1.0);
        let mut q = p.clone();
        q[j] += h;
        // the perturbed coordinate is exactly representable difference
        let h = q[j] - p[j];
        let rq = f(&q)?;
        ensure(rq.len() == r.len(), || "residual length changed between evaluations".into())?;
        jac.set_column(j, &((rq - r) / h));
    }
    Ok(jac)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionConfig {
    /// Initial radius as a multiple of the scaled norm of the start point
    /// (or absolute when the start is the origin).
    pub initial_radius: f64,
    pub max_radius: f64,
    pub shrink: f64,
    pub grow: f64,
    /// Steps with actual/predicted reduction below this shrink the radius.
    pub eta_shrink: f64,
    /// Steps above this that reach the boundary grow the radius.
    pub eta_grow: f64,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    pub max_iterations: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TrustRegionConfig {
    pub fn unbounded(n: usize) -> Self {
        Self::bounded(vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    pub fn bounded(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            initial_radius: 100.0,
            max_radius: 1e10,
            shrink: 0.25,
            grow: 2.0,
            eta_shrink: 0.25,
            eta_grow: 0.75,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-12,
            max_iterations: 200,
            lower,
            upper,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        ensure(self.lower.len() == n && self.upper.len() == n, || {
            format!("bounds have length {}/{}, expected {n}", self.lower.len(), self.upper.len())
        })?;
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            ensure(lo < hi && !lo.is_nan() && !hi.is_nan(), || format!("bound {j}: need lower < upper, got [{lo}, {hi}]"))?;
        }
        ensure(self.shrink > 0.0 && self.shrink < 1.0 && self.grow > 1.0, || {
            format!("need 0 < shrink < 1 < grow, got {} and {}", self.shrink, self.grow)
        })?;
        ensure(0.0 <= self.eta_shrink && self.eta_shrink < self.eta_grow && self.eta_grow < 1.0, || {
            "need 0 <= eta_shrink < eta_grow < 1".into()
        })?;
        ensure(
            self.gradient_tolerance > 0.0 && self.step_tolerance > 0.0 && self.initial_radius > 0.0 && self.max_radius > 0.0,
            || "tolerances and radii must be > 0".into(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Step,
    MaxIterations,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Gradient => "gradient",
            Termination::Step => "step",
            Termination::MaxIterations => "max-iter",
        }
    }
}

/// One trial step. `cost` is the sum of squared residuals at the iterate
/// after the step (the trial point if accepted, the unchanged point if not).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub cost: f64,
    pub radius: f64,
    pub gradient_norm: f64,
    pub accepted: bool,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameters: Vec<f64>,
    /// ‖r‖² at the returned parameters
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// parameters sitting on (within 1e-6 of the range from) a bound
    pub active_bounds: Vec<usize>,
    pub trace: Vec<TraceRow>,
}

impl FitResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,cost,delta,grad_norm,accepted\n");
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{}",
                r.iteration, r.cost, r.radius, r.gradient_norm, r.accepted as u8
            );
        }
        out
    }

    pub fn describe(&self) -> String {
        let mut s = format!(
            "{} after {} iterations, cost {:.6e} (from {:.6e})",
            self.termination.name(),
            self.iterations,
            self.cost,
            self.initial_cost
        );
        if !self.active_bounds.is_empty() {
            let _ = write!(s, ", active bounds on parameters {:?}", self.active_bounds);
        }
        s
    }
}

/// Minimises `‖r(ξ)‖²` subject to `lower ≤ ξ ≤ upper`.
pub fn trr_least_squares(
    problem: &dyn LeastSquaresProblem,
    start: &[f64],
    cfg: &TrustRegionConfig,
) -> Result<FitResult> {
    let n = start.len();
    ensure(n > 0, || "no parameters".into())?;
    cfg.validate(n)?;
    let lb = DVector::from_column_slice(&cfg.lower);
    let ub = DVector::from_column_slice(&cfg.upper);
    for j in 0..n {
        ensure(start[j] >= lb[j] && start[j] <= ub[j], || {
            format!("start parameter {j} = {} outside [{}, {}]", start[j], lb[j], ub[j])
        })?;
    }
    let mut x = strictly_feasible(&DVector::from_column_slice(start), &lb, &ub);
    let mut f = problem.residual(&x)?;
    if !f.iter().all(|v| v.is_finite()) {
        return Err(Error::Evaluation(x.iter().copied().collect()));
    }
    let m = f.len();
    ensure(m > 0, || "empty residual".into())?;
    let mut cost = 0.5 * f.norm_squared();
    let initial_cost = 2.0 * cost;
    let mut jac = checked_jacobian(problem, &x, &f)?;
    let mut g = jac.tr_mul(&f);
    let mut scale_inv = jac_scale(&jac, None);

    let (v0, dv0) = cl_scaling(&x, &g, &lb, &ub);
    let mut delta = {
        let mut s = 0.0;
        for j in 0..n {
            let vj = if dv0[j] != 0.0 { v0[j] * scale_inv[j] } else { v0[j] };
            s += (x[j] * scale_inv[j] / vj.sqrt()).powi(2);
        }
        let s = s.sqrt();
        cfg.initial_radius * if s > 0.0 && s.is_finite() { s } else { 1.0 }
    };

    let mut trace = Vec::new();
    let mut iterations = 0;
    let termination;
    'outer: loop {
        let (mut v, dv) = cl_scaling(&x, &g, &lb, &ub);
        let g_norm = g.iter().zip(v.iter()).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max);
        if g_norm < cfg.gradient_tolerance {
            termination = Termination::Gradient;
            break;
        }
        for j in 0..n {
            if dv[j] != 0.0 {
                v[j] *= scale_inv[j];
            }
        }
        let d = DVector::from_fn(n, |j, _| v[j].sqrt() / scale_inv[j]);
        let diag_h = DVector::from_fn(n, |j, _| g[j] * dv[j] / scale_inv[j]);
        let g_h = d.component_mul(&g);
        let j_h = &jac * DMatrix::from_diagonal(&d);

        // Subspace spanned by the scaled gradient and the Gauss–Newton step of
        // the augmented system [J_h; diag(√diag_h)] p ≈ -[f; 0].
        let gn_h = gauss_newton_step(&j_h, &diag_h, &f);
        let basis = orthonormal_basis(&g_h, &gn_h);
        let js = &j_h * &basis;
        let b_s = js.tr_mul(&js) + basis.tr_mul(&(DMatrix::from_diagonal(&diag_h) * &basis));
        let g_s = basis.tr_mul(&g_h);
        let theta = (1.0 - g_norm).max(0.995);

        loop {
            if iterations >= cfg.max_iterations {
                termination = Termination::MaxIterations;
                break 'outer;
            }
            iterations += 1;
            let p_s = solve_subspace(&b_s, &g_s, delta);
            let p_h = &basis * p_s;
            let p = d.component_mul(&p_h);
            let (step, step_h, predicted) = select_step(&x, &j_h, &diag_h, &g_h, p, p_h, &d, delta, &lb, &ub, theta);
            let x_new = strictly_feasible(&(&x + &step), &lb, &ub);
            let f_new = problem.residual(&x_new)?;
            if !f_new.iter().all(|v| v.is_finite()) {
                return Err(Error::Evaluation(x_new.iter().copied().collect()));
            }
            ensure(f_new.len() == m, || "residual length changed between evaluations".into())?;
            let cost_new = 0.5 * f_new.norm_squared();
            let actual = cost - cost_new;
            let step_h_norm = step_h.norm();
            let ratio = if predicted > 0.0 {
                actual / predicted
            } else if predicted == 0.0 && actual == 0.0 {
                1.0
            } else {
                0.0
            };
            if ratio < cfg.eta_shrink {
                delta = cfg.shrink * step_h_norm;
            } else if ratio > cfg.eta_grow && step_h_norm > 0.95 * delta {
                delta = (cfg.grow * delta).min(cfg.max_radius);
            }
            let accepted = actual > 0.0;
            trace.push(TraceRow {
                iteration: iterations,
                cost: 2.0 * if accepted { cost_new } else { cost },
                radius: delta,
                gradient_norm: g_norm,
                accepted,
                ratio,
            });
            let step_norm = (&x_new - &x).norm();
            let small_step = step_norm < cfg.step_tolerance * (cfg.step_tolerance + x.norm());
            if accepted {
                x = x_new;
                f = f_new;
                cost = cost_new;
                jac = checked_jacobian(problem, &x, &f)?;
                g = jac.tr_mul(&f);
                scale_inv = jac_scale(&jac, Some(&scale_inv));
            }
            if small_step || delta == 0.0 {
                termination = Termination::Step;
                break 'outer;
            }
            if accepted {
                break;
            }
        }
    }

    let active_bounds = (0..n)
        .filter(|&j| {
            let span = if (ub[j] - lb[j]).is_finite() { ub[j] - lb[j] } else { x[j].abs().max(1.0) };
            (x[j] - lb[j]).abs() <= 1e-6 * span || (ub[j] - x[j]).abs() <= 1e-6 * span
        })
        .collect();
    Ok(FitResult {
        parameters: x.iter().copied().collect(),
        cost: 2.0 * cost,
        initial_cost,
        iterations,
        termination,
        active_bounds,
        trace,
    })
}

fn checked_jacobian(problem: &dyn LeastSquaresProblem, x: &DVector<f64>, f: &DVector<f64>) -> Result<DMatrix<f64>> {
    let jac = problem.jacobian(x, f)?;
    ensure(jac.nrows() == f.len() && jac.ncols() == x.len(), || {
        format!("jacobian is {}x{}, expected {}x{}", jac.nrows(), jac.ncols(), f.len(), x.len())
    })?;
    if !jac.iter().all(|v| v.is_finite()) {
        return Err(Error::Evaluation(x.iter().copied().collect()));
    }
    Ok(jac)
}

/// Column norms of the Jacobian, never decreasing over iterations; zeros map to 1.
fn jac_scale(jac: &DMatrix<f64>, previous: Option<&DVector<f64>>) -> DVector<f64> {
    DVector::from_fn(jac.ncols(), |j, _| {
        let mut s = jac.column(j).norm();
        if let Some(p) = previous {
            s = s.max(p[j]);
        }
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    })
}

/// Coleman–Li scaling: distance to the bound the gradient points toward.
fn cl_scaling(x: &DVector<f64>, g: &DVector<f64>, lb: &DVector<f64>, ub: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = x.len();
    let mut v = DVector::from_element(n, 1.0);
    let mut dv = DVector::zeros(n);
    for j in 0..n {
        if g[j] < 0.0 && ub[j].is_finite() {
            v[j] = ub[j] - x[j];
            dv[j] = -1.0;
        } else if g[j] > 0.0 && lb[j].is_finite() {
            v[j] = x[j] - lb[j];
            dv[j] = 1.0;
        }
    }
    (v, dv)
}

fn strictly_feasible(x: &DVector<f64>, lb: &DVector<f64>, ub: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(x.len(), |j, _| {
        let c = x[j].clamp(lb[j], ub[j]);
        if c <= lb[j] {
            next_toward(lb[j], ub[j])
        } else if c >= ub[j] {
            next_toward(ub[j], lb[j])
        } else {
            c
        }
    })
}

fn next_toward(a: f64, b: f64) -> f64 {
    if !a.is_finite() || a == b {
        return a;
    }
    let bits = a.to_bits();
    let up = b > a;
    let next = if a == 0.0 {
        f64::from_bits(1) * if up { 1.0 } else { -1.0 }
    } else if (a > 0.0) == up {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    };
    next
}

fn gauss_newton_step(j_h: &DMatrix<f64>, diag_h: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
    let (m, n) = j_h.shape();
    let mut a = DMatrix::zeros(m + n, n);
    a.view_mut((0, 0), (m, n)).copy_from(j_h);
    for j in 0..n {
        a[(m + j, j)] = diag_h[j].max(0.0).sqrt();
    }
    let mut rhs = DVector::zeros(m + n);
    rhs.rows_mut(0, m).copy_from(&(-f));
    let svd = a.svd(true, true);
    let tol = svd.singular_values.max() * f64::EPSILON * (m + n) as f64;
    svd.solve(&rhs, tol).unwrap_or_else(|_| DVector::zeros(n))
}

/// Orthonormal columns spanning {a, b}; one column when they are parallel.
fn orthonormal_basis(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let an = a.norm();
    if !(an > 0.0) {
        let bn = b.norm();
        return if bn > 0.0 { DMatrix::from_columns(&[b / bn]) } else { DMatrix::zeros(a.len(), 0) };
    }
    let e1 = a / an;
    let w = b - &e1 * e1.dot(b);
    let wn = w.norm();
    if wn > 1e-12 * b.norm().max(f64::MIN_POSITIVE) && a.len() > 1 {
        DMatrix::from_columns(&[e1, w / wn])
    } else {
        DMatrix::from_columns(&[e1])
    }
}

/// Exact minimiser of `gᵀy + ½yᵀBy` over `‖y‖ ≤ Δ` in one or two dimensions.
fn solve_subspace(b: &DMatrix<f64>, g: &DVector<f64>, delta: f64) -> DVector<f64> {
    match b.nrows() {
        0 => DVector::zeros(0),
        1 => {
            let (bb, gg) = (b[(0, 0)], g[0]);
            let y = if bb > 0.0 && (gg / bb).abs() <= delta { -gg / bb } else if gg > 0.0 { -delta } else { delta };
            DVector::from_element(1, y)
        }
        _ => {
            let bm = Matrix2::new(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]);
            let gv = Vector2::new(g[0], g[1]);
            if let Some(ch) = bm.cholesky() {
                let y = -ch.solve(&gv);
                if y.norm() <= delta {
                    return DVector::from_column_slice(y.as_slice());
                }
            }
            let y = boundary_minimum(&bm, &gv, delta);
            DVector::from_column_slice(y.as_slice())
        }
    }
}

fn boundary_minimum(b: &Matrix2<f64>, g: &Vector2<f64>, delta: f64) -> Vector2<f64> {
    let q = |t: f64| {
        let y = Vector2::new(t.cos(), t.sin()) * delta;
        0.5 * y.dot(&(b * y)) + g.dot(&y)
    };
    const N: usize = 72;
    let h = std::f64::consts::TAU / N as f64;
    let best = (0..N).min_by(|&i, &j| q(i as f64 * h).total_cmp(&q(j as f64 * h))).unwrap_or(0);
    // golden-section refinement inside the bracketing cells
    let (mut lo, mut hi) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    for _ in 0..60 {
        if q(c) < q(d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - r * (hi - lo);
        d = lo + r * (hi - lo);
    }
    let t = 0.5 * (lo + hi);
    Vector2::new(t.cos(), t.sin()) * delta
}

fn quadratic(j: &DMatrix<f64>, g: &DVector<f64>, s: &DVector<f64>, diag: &DVector<f64>) -> f64 {
    let js = j * s;
    0.5 * (js.norm_squared() + s.dot(&diag.component_mul(s))) + g.dot(s)
}

/// Coefficients of `a t² + b t + c`, the model along `s0 + t s`.
fn quadratic_1d(j: &DMatrix<f64>, g: &DVector<f64>, s: &DVector<f64>, s0: Option<&DVector<f64>>, diag: &DVector<f64>) -> (f64, f64, f64) {
    let js = j * s;
    let a = 0.5 * (js.norm_squared() + s.dot(&diag.component_mul(s)));
    let mut b = g.dot(s);
    let mut c = 0.0;
    if let Some(s0) = s0 {
        b += (j * s0).dot(&js) + s0.dot(&diag.component_mul(s));
        c = quadratic(j, g, s0, diag);
    }
    (a, b, c)
}

fn minimize_1d(a: f64, b: f64, lo: f64, hi: f64, c: f64) -> (f64, f64) {
    let val = |t: f64| a * t * t + b * t + c;
    let mut cands = vec![lo, hi];
    if a != 0.0 {
        let t = -0.5 * b / a;
        if lo < t && t < hi {
            cands.push(t);
        }
    }
    cands
        .into_iter()
        .map(|t| (t, val(t)))
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap_or((lo, val(lo)))
}

/// Largest `t` with `x + t s` in the box, and the coordinates that hit first
/// (signed with the step direction).
fn step_to_bound(x: &DVector<f64>, s: &DVector<f64>, lb: &DVector<f64>, ub: &DVector<f64>) -> (f64, Vec<f64>) {
    let steps: Vec<f64> = (0..x.len())
        .map(|j| {
            if s[j] == 0.0 {
                f64::INFINITY
            } else {
                ((lb[j] - x[j]) / s[j]).max((ub[j] - x[j]) / s[j])
            }
        })
        .collect();
    let min = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let hits = steps
        .iter()
        .zip(s.iter())
        .map(|(&t, &sj)| if t == min { sj.signum() } else { 0.0 })
        .collect();
    (min, hits)
}

/// Positive root of `‖x + t s‖ = Δ`.
fn to_trust_boundary(x: &DVector<f64>, s: &DVector<f64>, delta: f64) -> f64 {
    let a = s.norm_squared();
    if a == 0.0 {
        return f64::INFINITY;
    }
    let b = x.dot(s);
    let c = x.norm_squared() - delta * delta;
    let disc = (b * b - a * c).max(0.0).sqrt();
    (-b + disc) / a
}

fn in_bounds(x: &DVector<f64>, lb: &DVector<f64>, ub: &DVector<f64>) -> bool {
    (0..x.len()).all(|j| x[j] >= lb[j] && x[j] <= ub[j])
}

/// Chooses between the (possibly truncated) trust-region step, its
/// reflection off the first bound hit, and a bounded scaled-gradient step.
#[allow(clippy::too_many_arguments)]
fn select_step(
    x: &DVector<f64>,
    j_h: &DMatrix<f64>,
    diag_h: &DVector<f64>,
    g_h: &DVector<f64>,
    mut p: DVector<f64>,
    mut p_h: DVector<f64>,
    d: &DVector<f64>,
    delta: f64,
    lb: &DVector<f64>,
    ub: &DVector<f64>,
    theta: f64,
) -> (DVector<f64>, DVector<f64>, f64) {
    if in_bounds(&(x + &p), lb, ub) {
        let value = quadratic(j_h, g_h, &p_h, diag_h);
        return (p, p_h, -value);
    }
    let (p_stride, hits) = step_to_bound(x, &p, lb, ub);
    let mut r_h = p_h.clone();
    for (j, h) in hits.iter().enumerate() {
        if *h != 0.0 {
            r_h[j] = -r_h[j];
        }
    }
    let r = d.component_mul(&r_h);
    p *= p_stride;
    p_h *= p_stride;
    let x_on_bound = x + &p;
    let to_tr = to_trust_boundary(&p_h, &r_h, delta);
    let (to_bound, _) = step_to_bound(&x_on_bound, &r, lb, ub);
    let r_stride = to_bound.min(to_tr);
    let (r_lo, r_hi) = if r_stride > 0.0 {
        let lo = (1.0 - theta) * p_stride / r_stride;
        let hi = if r_stride == to_bound { theta * to_bound } else { to_tr };
        (lo, hi)
    } else {
        (0.0, -1.0)
    };
    let (r_step, r_step_h, r_value) = if r_lo <= r_hi {
        let (a, b, c) = quadratic_1d(j_h, g_h, &r_h, Some(&p_h), diag_h);
        let (t, value) = minimize_1d(a, b, r_lo, r_hi, c);
        let rh = &p_h + &r_h * t;
        (d.component_mul(&rh), rh, value)
    } else {
        (r.clone(), r_h.clone(), f64::INFINITY)
    };

    p *= theta;
    p_h *= theta;
    let p_value = quadratic(j_h, g_h, &p_h, diag_h);

    let ag_h = -g_h;
    let ag = d.component_mul(&ag_h);
    let to_tr = delta / ag_h.norm();
    let (to_bound, _) = step_to_bound(x, &ag, lb, ub);
    let ag_max = if to_bound < to_tr { theta * to_bound } else { to_tr };
    let (a, b, _) = quadratic_1d(j_h, g_h, &ag_h, None, diag_h);
    let (t, ag_value) = minimize_1d(a, b, 0.0, ag_max, 0.0);

    if p_value < r_value && p_value < ag_value {
        (p, p_h, -p_value)
    } else if r_value < p_value && r_value < ag_value {
        (r_step, r_step_h, -r_value)
    } else {
        (ag * t, ag_h * t, -ag_value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear {
        a: DMatrix<f64>,
        y: DVector<f64>,
    }

    impl LeastSquaresProblem for Linear {
        fn residual(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(&self.a * p - &self.y)
        }
        fn jacobian(&self, _: &DVector<f64>, _: &DVector<f64>) -> Result<DMatrix<f64>> {
            Ok(self.a.clone())
        }
    }

    struct Rosenbrock;

    impl LeastSquaresProblem for Rosenbrock {
        fn residual(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]))
        }
        fn jacobian(&self, p: &DVector<f64>, _: &DVector<f64>) -> Result<DMatrix<f64>> {
            Ok(DMatrix::from_row_slice(2, 2, &[-20.0 * p[0], 10.0, -1.0, 0.0]))
        }
    }

    fn linear_problem() -> Linear {
        let a = DMatrix::from_fn(12, 3, |i, j| ((i + 1) as f64).powi(j as i32) / (1.0 + j as f64) + if i == j { 1.0 } else { 0.0 });
        let y = DVector::from_fn(12, |i, _| (i as f64 * 0.7).sin() + 2.0);
        Linear { a, y }
    }

    fn assert_trace_monotone(r: &FitResult) {
        let accepted: Vec<f64> = r.trace.iter().filter(|t| t.accepted).map(|t| t.cost).collect();
        let mut prev = r.initial_cost;
        for c in accepted {
            assert!(c <= prev, "cost increased {prev} -> {c}");
            prev = c;
        }
    }

    #[test]
    fn linear_least_squares_matches_normal_equations() {
        let p = linear_problem();
        let exact = (p.a.transpose() * &p.a).lu().solve(&(p.a.transpose() * &p.y)).unwrap();
        let r = trr_least_squares(&p, &[0.0, 0.0, 0.0], &TrustRegionConfig::unbounded(3)).unwrap();
        assert!(r.iterations <= 3, "{}", r.describe());
        for j in 0..3 {
            assert!((r.parameters[j] - exact[j]).abs() < 1e-8 * exact[j].abs().max(1.0), "{:?} vs {exact}", r.parameters);
        }
        assert_trace_monotone(&r);
    }

    #[test]
    fn optimal_start_stops_on_gradient() {
        let a = DMatrix::identity(2, 2);
        let p = Linear { a, y: DVector::from_vec(vec![1.5, -2.0]) };
        let r = trr_least_squares(&p, &[1.5, -2.0], &TrustRegionConfig::unbounded(2)).unwrap();
        assert_eq!(r.termination, Termination::Gradient);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.parameters, vec![1.5, -2.0]);
    }

    #[test]
    fn bounded_rosenbrock() {
        let cfg = TrustRegionConfig::bounded(vec![-5.0, -5.0], vec![5.0, 5.0]);
        let r = trr_least_squares(&Rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!((r.parameters[0] - 1.0).abs() < 1e-6 && (r.parameters[1] - 1.0).abs() < 1e-6, "{:?} {}", r.parameters, r.describe());
        assert_trace_monotone(&r);
        assert!(r.active_bounds.is_empty());
    }

    #[test]
    fn active_bound_is_reported() {
        // unconstrained optimum (1, 1) lies outside x0 <= 0.5
        let cfg = TrustRegionConfig::bounded(vec![-5.0, -5.0], vec![0.5, 5.0]);
        let r = trr_least_squares(&Rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!((r.parameters[0] - 0.5).abs() < 1e-6, "{:?}", r.parameters);
        assert!((r.parameters[1] - 0.25).abs() < 1e-5, "{:?}", r.parameters);
        assert_eq!(r.active_bounds, vec![0]);
        for t in &r.trace {
            assert!(t.cost.is_finite());
        }
        assert!(r.parameters[0] <= 0.5);
    }

    #[test]
    fn radius_follows_ratio() {
        let cfg = TrustRegionConfig::bounded(vec![-5.0, -5.0], vec![5.0, 5.0]);
        let r = trr_least_squares(&Rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        for w in r.trace.windows(2) {
            if w[1].ratio < cfg.eta_shrink {
                assert!(w[1].radius <= w[0].radius, "{:?}", w);
            }
        }
    }

    #[test]
    fn forward_difference_matches_analytic() {
        let p = DVector::from_vec(vec![0.3, -0.7]);
        let r = Rosenbrock.residual(&p).unwrap();
        let fd = forward_difference_jacobian(|q| Rosenbrock.residual(q), &p, &r).unwrap();
        let exact = Rosenbrock.jacobian(&p, &r).unwrap();
        assert!((fd - exact).amax() < 1e-6);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = TrustRegionConfig::bounded(vec![1.0], vec![0.0]);
        assert!(trr_least_squares(&Rosenbrock, &[0.5, 0.5], &cfg).is_err());
        cfg = TrustRegionConfig::unbounded(2);
        cfg.shrink = 1.5;
        assert!(trr_least_squares(&Rosenbrock, &[0.5, 0.5], &cfg).is_err());
        let cfg = TrustRegionConfig::bounded(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert!(trr_least_squares(&Rosenbrock, &[2.0, 0.5], &cfg).is_err());
    }

    #[test]
    fn non_finite_residual_is_an_error() {
        struct Bad;
        impl LeastSquaresProblem for Bad {
            fn residual(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(DVector::from_element(2, if p[0] > 0.5 { f64::NAN } else { p[0] - 3.0 }))
            }
        }
        let err = trr_least_squares(&Bad, &[0.0], &TrustRegionConfig::unbounded(1)).unwrap_err();
        assert!(matches!(err, Error::Evaluation(_)), "{err}");
    }

    #[test]
    fn trace_csv_header() {
        let r = trr_least_squares(&Rosenbrock, &[-1.2, 1.0], &TrustRegionConfig::unbounded(2)).unwrap();
        let csv = r.trace_csv();
        assert!(csv.starts_with("iter,cost,delta,grad_norm,accepted\n"));
        assert_eq!(csv.lines().count(), r.trace.len() + 1);
    }
}
