use nalgebra::{DMatrix, DVector};

use super::library::{Term, N_TERMS, TERMS};
use crate::error::{ensure, Error, Result};

pub const N_STATES: usize = 4;
pub const STATE_NAMES: [&str; N_STATES] = ["xdot", "vdot", "zdot", "Idot"];

/// Sparse 4 x 17 coefficient matrix Ξ. Rows are the x, v, z, I equations;
/// columns follow the library order. Inactive entries are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub xi: [[f64; N_TERMS]; N_STATES],
    pub active: [[bool; N_TERMS]; N_STATES],
}

impl Default for CoefficientMatrix {
    fn default() -> Self {
        Self {
            xi: [[0.0; N_TERMS]; N_STATES],
            active: [[false; N_TERMS]; N_STATES],
        }
    }
}

impl CoefficientMatrix {
    pub fn full_mask() -> [[bool; N_TERMS]; N_STATES] {
        [[true; N_TERMS]; N_STATES]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().flatten().filter(|&&a| a).count()
    }

    pub fn row_active_count(&self, row: usize) -> usize {
        self.active[row].iter().filter(|&&a| a).count()
    }

    pub fn get(&self, row: usize, term: Term) -> f64 {
        self.xi[row][term.index()]
    }

    /// Ξ Θ(sample)ᵀ for one library row.
    #[inline]
    pub fn apply(&self, theta: &[f64; N_TERMS]) -> [f64; N_STATES] {
        let mut out = [0.0; N_STATES];
        for (o, row) in out.iter_mut().zip(&self.xi) {
            *o = row.iter().zip(theta).map(|(c, t)| c * t).sum();
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.xi.iter().flatten().all(|v| v.is_finite())
    }
}

/// Column-scaled QR factorisation of `[Θ | Ẋ]`, reused for every masked
/// refit. A subset fit only needs the 17-row triangular factor.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    /// Euclidean norms of the library columns (1 where a column is zero).
    pub column_norms: [f64; N_TERMS],
    pub column_is_zero: [bool; N_TERMS],
    /// Norms of the four derivative rows.
    pub target_norms: [f64; N_STATES],
    r: DMatrix<f64>,
    n_samples: usize,
}

impl RegressionProblem {
    /// `theta` is n x 17, `xdot` is n x 4 (one column per state equation).
    pub fn new(theta: &DMatrix<f64>, xdot: &DMatrix<f64>) -> Result<Self> {
        let n = theta.nrows();
        ensure(theta.ncols() == N_TERMS, || format!("library needs {N_TERMS} columns"))?;
        ensure(xdot.ncols() == N_STATES && xdot.nrows() == n, || {
            format!("derivative matrix must be {n} x {N_STATES}, got {:?}", xdot.shape())
        })?;
        ensure(n >= N_TERMS + N_STATES, || format!("need at least {} samples, got {n}", N_TERMS + N_STATES))?;
        ensure(theta.iter().chain(xdot.iter()).all(|v| v.is_finite()), || {
            "non-finite entries in regression data".into()
        })?;
        let mut column_norms = [1.0; N_TERMS];
        let mut column_is_zero = [false; N_TERMS];
        let mut aug = DMatrix::zeros(n, N_TERMS + N_STATES);
        for j in 0..N_TERMS {
            let norm = theta.column(j).norm();
            if norm > 0.0 {
                column_norms[j] = norm;
            } else {
                column_is_zero[j] = true;
            }
            aug.column_mut(j).copy_from(&(theta.column(j) / column_norms[j]));
        }
        let mut target_norms = [0.0; N_STATES];
        for k in 0..N_STATES {
            target_norms[k] = xdot.column(k).norm();
            aug.column_mut(N_TERMS + k).copy_from(&xdot.column(k));
        }
        let r = aug.qr().r();
        Ok(Self {
            column_norms,
            column_is_zero,
            target_norms,
            r,
            n_samples: n,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Least squares for one state equation restricted to `cols`.
    pub fn solve_row(&self, row: usize, cols: &[usize]) -> Result<Vec<f64>> {
        if cols.is_empty() {
            return Ok(Vec::new());
        }
        ensure(self.n_samples >= cols.len(), || {
            format!("{} samples cannot determine {} coefficients", self.n_samples, cols.len())
        })?;
        let zero: Vec<usize> = cols.iter().copied().filter(|&j| self.column_is_zero[j]).collect();
        if !zero.is_empty() {
            return Err(Error::RankDeficient {
                columns: zero.iter().map(|&j| TERMS[j].name().to_string()).collect(),
            });
        }
        let m = self.r.nrows().min(N_TERMS);
        let a = DMatrix::from_fn(m, cols.len(), |i, c| self.r[(i, cols[c])]);
        let b = DVector::from_fn(m, |i, _| self.r[(i, N_TERMS + row)]);
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let (imin, smin) = svd.singular_values.argmin();
        if !(smax > 0.0) || smin < 1e-10 * smax {
            let v_t = svd.v_t.as_ref().expect("requested");
            let null = v_t.row(imin);
            let columns = cols
                .iter()
                .zip(null.iter())
                .filter(|(_, w)| w.abs() > 0.1)
                .map(|(&j, _)| TERMS[j].name().to_string())
                .collect();
            return Err(Error::RankDeficient { columns });
        }
        let sol = svd
            .solve(&b, 0.0)
            .map_err(|e| Error::Numerical(format!("svd solve failed: {e}")))?;
        Ok(cols
            .iter()
            .zip(sol.iter())
            .map(|(&j, c)| c / self.column_norms[j])
            .collect())
    }

    pub fn fit(&self, mask: &[[bool; N_TERMS]; N_STATES]) -> Result<CoefficientMatrix> {
        let mut out = CoefficientMatrix {
            active: *mask,
            ..Default::default()
        };
        for row in 0..N_STATES {
            let cols: Vec<usize> = (0..N_TERMS).filter(|&j| mask[row][j]).collect();
            for (j, c) in cols.iter().zip(self.solve_row(row, &cols)?) {
                out.xi[row][*j] = c;
            }
        }
        Ok(out)
    }

    /// `|ξ_kj| ‖θ_j‖ / ‖Ẋ_k‖`: coefficient size in units of the target row.
    pub fn normalized_magnitude(&self, xi: &CoefficientMatrix, row: usize, col: usize) -> f64 {
        let scale = if self.target_norms[row] > 0.0 { self.target_norms[row] } else { 1.0 };
        xi.xi[row][col].abs() * self.column_norms[col] / scale
    }
}

/// Per-row least squares over the active columns of `mask`.
pub fn least_squares_fit(
    theta: &DMatrix<f64>,
    xdot: &DMatrix<f64>,
    mask: &[[bool; N_TERMS]; N_STATES],
) -> Result<CoefficientMatrix> {
    RegressionProblem::new(theta, xdot)?.fit(mask)
}

#[derive(Debug, Clone, Copy)]
pub struct LassoOptions {
    pub max_iterations: usize,
    /// Largest tolerated optimality violation, relative to the target norm.
    pub tolerance: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            tolerance: 1e-13,
        }
    }
}

/// Per-row minimiser of `‖Ẋ_k − Θ ξ_k‖² + alpha ‖ξ_k‖₁` by cyclic coordinate
/// descent on the Gram matrix.
pub fn lasso_fit(theta: &DMatrix<f64>, xdot: &DMatrix<f64>, alpha: f64) -> Result<CoefficientMatrix> {
    lasso_fit_with(theta, xdot, alpha, LassoOptions::default())
}

pub fn lasso_fit_with(
    theta: &DMatrix<f64>,
    xdot: &DMatrix<f64>,
    alpha: f64,
    opts: LassoOptions,
) -> Result<CoefficientMatrix> {
    ensure(alpha >= 0.0 && alpha.is_finite(), || format!("lasso alpha must be >= 0, got {alpha}"))?;
    ensure(theta.ncols() == N_TERMS && xdot.ncols() == N_STATES && theta.nrows() == xdot.nrows(), || {
        "lasso: shape mismatch".into()
    })?;
    let gram = theta.transpose() * theta;
    let mut out = CoefficientMatrix::default();
    for row in 0..N_STATES {
        let y = xdot.column(row);
        let b = theta.transpose() * y;
        let yy = y.norm_squared();
        let xi = lasso_row(&gram, &b, yy, alpha, opts)?;
        for j in 0..N_TERMS {
            out.xi[row][j] = xi[j];
            out.active[row][j] = xi[j] != 0.0;
        }
    }
    Ok(out)
}

fn lasso_row(
    gram: &DMatrix<f64>,
    b: &DVector<f64>,
    yy: f64,
    alpha: f64,
    opts: LassoOptions,
) -> Result<Vec<f64>> {
    let p = gram.nrows();
    let lambda = 0.5 * alpha;
    let mut w = vec![0.0; p];
    // c = b - G w, maintained incrementally and refreshed at every check
    let mut c: Vec<f64> = b.iter().copied().collect();
    let scale = yy.sqrt().max(1e-300);
    for iter in 0..opts.max_iterations {
        for j in 0..p {
            let gjj = gram[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            let rho = c[j] + gjj * w[j];
            let new = soft_threshold(rho, lambda) / gjj;
            let delta = new - w[j];
            if delta != 0.0 {
                for k in 0..p {
                    c[k] -= gram[(k, j)] * delta;
                }
                w[j] = new;
            }
        }
        if iter % 8 == 7 || iter + 1 == opts.max_iterations {
            for k in 0..p {
                c[k] = b[k] - (0..p).map(|j| gram[(k, j)] * w[j]).sum::<f64>();
            }
            // optimality: c_j = lambda sign(w_j) on the support, |c_j| <= lambda off it
            let violation = (0..p)
                .filter(|&j| gram[(j, j)] > 0.0)
                .map(|j| {
                    let v = if w[j] != 0.0 {
                        (c[j] - lambda * w[j].signum()).abs()
                    } else {
                        (c[j].abs() - lambda).max(0.0)
                    };
                    v / gram[(j, j)].sqrt()
                })
                .fold(0.0_f64, f64::max);
            if violation <= opts.tolerance * scale {
                return Ok(w);
            }
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iterations,
        gap: 2.0 * duality_gap(gram, b, yy, &w, &c, lambda),
    })
}

/// Gap for the half-scaled problem ½‖y − Θw‖² + λ‖w‖₁, computed from the
/// Gram quantities only. `c = Θᵀr`.
fn duality_gap(gram: &DMatrix<f64>, b: &DVector<f64>, yy: f64, w: &[f64], c: &[f64], lambda: f64) -> f64 {
    let p = w.len();
    let bw: f64 = (0..p).map(|j| b[j] * w[j]).sum();
    let mut wgw = 0.0;
    for i in 0..p {
        for j in 0..p {
            wgw += w[i] * gram[(i, j)] * w[j];
        }
    }
    let rr = (yy - 2.0 * bw + wgw).max(0.0);
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let primal = 0.5 * rr + lambda * l1;
    let cmax = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let s = if cmax > lambda && cmax > 0.0 { lambda / cmax } else { 1.0 };
    let yr = yy - bw;
    // ‖y − s r‖² = yy − 2 s yᵀr + s² rr
    let dual = 0.5 * yy - 0.5 * (yy - 2.0 * s * yr + s * s * rr);
    (primal - dual).max(0.0)
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}
