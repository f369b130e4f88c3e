//! Log-sum-exp smoothed inner objective, its gradient, and the simple
//! geometric pieces of the penalty problem (projection, auxiliary update,
//! Lipschitz bound).

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::mimo::RealLiftedProblem;

/// Below this, `sigma log W` is treated as zero and the data-term gradient is
/// replaced by its subgradient limit.
const DEGENERATE_LOG_W: f64 = 1e-300;

/// Value of `sqrt(sigma log W) - d + lambda (PT - xbar^T v)` with
/// `W = sum_i exp(r_i^2 / sigma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothValue {
    pub value: f64,
    /// `log W`, computed with a max shift so it never overflows.
    pub log_w: f64,
    /// The smoothed infinity norm `sqrt(sigma log W)`.
    pub smooth_term: f64,
    /// `PT - xbar^T v`, non-negative on the feasible set.
    pub penalty_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothGradient {
    pub value: SmoothValue,
    pub grad_x: DMatrix<f64>,
    pub grad_d: f64,
    /// Set when every residual vanished and the data term was dropped.
    pub degenerate: bool,
}

/// Penalty parameters of one inner subproblem.
#[derive(Clone, Copy, Debug)]
pub struct Penalty<'a> {
    pub v: &'a DMatrix<f64>,
    pub lambda: f64,
    pub sigma: f64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("smoothing parameter must be > 0, got {sigma}")));
    }
    Ok(())
}

/// `log sum_i exp(r_i^2 / sigma)` via `m + log sum_i exp(a_i - m)`.
pub(crate) fn log_sum_exp_sq(r: &DMatrix<f64>, sigma: f64) -> f64 {
    let m = r.iter().fold(0.0f64, |acc, x| acc.max(x * x)) / sigma;
    let s: f64 = r.iter().map(|x| (x * x / sigma - m).exp()).sum();
    m + s.ln()
}

fn value_from_residual(lifted: &RealLiftedProblem, r: &DMatrix<f64>, xbar: &DMatrix<f64>, d: f64, p: &Penalty) -> SmoothValue {
    let log_w = log_sum_exp_sq(r, p.sigma);
    let smooth_term = (p.sigma * log_w).max(0.0).sqrt();
    let penalty_gap = lifted.ball_radius_sq() - xbar.dot(p.v);
    SmoothValue { value: smooth_term - d + p.lambda * penalty_gap, log_w, smooth_term, penalty_gap }
}

pub fn smoothed_objective(lifted: &RealLiftedProblem, xbar: &DMatrix<f64>, d: f64, p: &Penalty) -> Result<SmoothValue> {
    check_sigma(p.sigma)?;
    lifted.check_block(xbar)?;
    let r = lifted.residual(xbar, d);
    Ok(value_from_residual(lifted, &r, xbar, d, p))
}

/// Analytic gradient of [`smoothed_objective`] in `(xbar, d)`:
///
/// `df/dxbar = hbar^T (w ∘ r) / sqrt(sigma log W) - lambda v`,
/// `df/dd = -<w ∘ r, sbar> / sqrt(sigma log W) - 1`,
///
/// with softmax weights `w_i = exp(r_i^2/sigma) / W`.
pub fn smoothed_gradient(lifted: &RealLiftedProblem, xbar: &DMatrix<f64>, d: f64, p: &Penalty) -> Result<SmoothGradient> {
    check_sigma(p.sigma)?;
    lifted.check_block(xbar)?;
    let mut r = lifted.residual(xbar, d);
    let value = value_from_residual(lifted, &r, xbar, d, p);
    let degenerate = !(p.sigma * value.log_w > DEGENERATE_LOG_W);
    if degenerate {
        r.fill(0.0);
    } else {
        let inv = 1.0 / value.smooth_term;
        let (sigma, log_w) = (p.sigma, value.log_w);
        r.apply(|x| *x *= (*x * *x / sigma - log_w).exp() * inv);
    }
    let mut grad_x = lifted.hbar().tr_mul(&r);
    grad_x -= p.v * p.lambda;
    let grad_d = -r.dot(lifted.sbar()) - 1.0;
    Ok(SmoothGradient { value, grad_x, grad_d, degenerate })
}

/// Euclidean projection onto `[-radius, radius]^{2NT} x [0, inf)`.
pub fn project_feasible(xbar: &DMatrix<f64>, d: f64, box_radius: f64) -> (DMatrix<f64>, f64) {
    (xbar.map(|x| x.clamp(-box_radius, box_radius)), d.max(0.0))
}

pub(crate) fn project_in_place(xbar: &mut DMatrix<f64>, d: f64, box_radius: f64) -> f64 {
    xbar.apply(|x| *x = x.clamp(-box_radius, box_radius));
    d.max(0.0)
}

/// Maximizer of `xbar^T v` over `||v||^2 <= ball_radius_sq`. A zero `xbar`
/// leaves every feasible `v` optimal; zero is returned.
pub fn v_update(xbar: &DMatrix<f64>, ball_radius_sq: f64) -> DMatrix<f64> {
    let norm = xbar.norm();
    if norm == 0.0 {
        return DMatrix::zeros(xbar.nrows(), xbar.ncols());
    }
    xbar * (ball_radius_sq.sqrt() / norm)
}

/// Lipschitz constant of `(xbar, d) -> ||hbar xbar_t - d sbar_t||_inf - d`:
/// the largest gradient norm of the linear pieces, `||(h_i, -s_i)||`, plus
/// one for the `-d` term.
pub fn lipschitz_estimate(lifted: &RealLiftedProblem) -> f64 {
    let hbar = lifted.hbar();
    let sbar = lifted.sbar();
    let mut worst: f64 = 0.0;
    for i in 0..hbar.nrows() {
        let h_sq = hbar.row(i).norm_squared();
        for t in 0..sbar.ncols() {
            worst = worst.max(h_sq + sbar[(i, t)] * sbar[(i, t)]);
        }
    }
    worst.sqrt() + 1.0
}
