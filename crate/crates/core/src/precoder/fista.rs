//! Monotone FISTA with backtracking for the smoothed inner subproblem
//! over the box `|xbar_i| <= sqrt(P/2N)`, `d >= 0`.

use nalgebra::DMatrix;

use super::smooth::{project_in_place, smoothed_gradient, smoothed_objective, Penalty, SmoothValue};
use crate::error::{invalid, Error, Result};
use crate::mimo::RealLiftedProblem;

/// Consecutive small-change iterations required to stop.
pub const STALL_WINDOW: usize = 5;

/// Rejections tolerated in one backtracking search before giving up.
const MAX_BACKTRACKS: usize = 200;

/// Inner-solver knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FistaSettings {
    pub max_iters: usize,
    /// Stop once `|f_{l+1} - f_l| / max(1, |f_l|)` stays below this for
    /// [`STALL_WINDOW`] iterations.
    pub tol: f64,
    pub bt_shrink: f64,
    pub bt_grow: f64,
}

#[derive(Clone, Debug)]
pub struct FistaOutcome {
    pub xbar: DMatrix<f64>,
    pub d: f64,
    pub value: SmoothValue,
    pub iterations: usize,
    /// Step size in force at exit, reusable as the next warm start.
    pub step: f64,
    /// Smoothed objective after every iteration, starting with the warm point.
    pub trace: Vec<f64>,
    pub restarts: usize,
    /// Gradient evaluations that hit the all-zero-residual limit.
    pub degenerate_gradients: usize,
}

struct Candidate {
    xbar: DMatrix<f64>,
    d: f64,
    value: SmoothValue,
}

/// Minimizes the smoothed subproblem starting from `(warm_x, warm_d)`.
///
/// Momentum follows `t_{l+1} = (1 + sqrt(1 + 4 t_l^2)) / 2`. A step whose
/// objective exceeds the current one resets `t` to 1 and is replaced by a
/// plain projected-gradient step from the current point, so the objective
/// never increases.
pub fn fista_solve(
    lifted: &RealLiftedProblem,
    penalty: &Penalty,
    warm_x: &DMatrix<f64>,
    warm_d: f64,
    step: f64,
    settings: &FistaSettings,
) -> Result<FistaOutcome> {
    if !(step > 0.0) || !(settings.bt_shrink > 0.0 && settings.bt_shrink < 1.0) || !(settings.bt_grow >= 1.0) {
        return Err(invalid("FISTA needs step > 0, shrink in (0,1) and grow >= 1"));
    }
    let radius = lifted.box_radius();
    let mut x = warm_x.clone();
    let d = project_in_place(&mut x, warm_d, radius);
    let value = checked(smoothed_objective(lifted, &x, d, penalty)?, "warm start")?;
    let mut cur = Candidate { xbar: x, d, value };
    let mut prev_x = cur.xbar.clone();
    let mut prev_d = cur.d;
    let mut t = 1.0f64;
    let mut gamma = step;
    let mut stall = 0;
    let mut iterations = 0;
    let mut restarts = 0;
    let mut degenerate = 0;
    let mut trace = vec![cur.value.value];

    while iterations < settings.max_iters {
        iterations += 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        let w = &cur.xbar + (&cur.xbar - &prev_x) * beta;
        let wd = cur.d + beta * (cur.d - prev_d);

        let mut t_after = t_next;
        let mut next = prox_step(lifted, penalty, &w, wd, &mut gamma, settings, &mut degenerate)?;
        if next.value.value > cur.value.value {
            t_after = 1.0;
            restarts += 1;
            if beta != 0.0 {
                next = prox_step(lifted, penalty, &cur.xbar, cur.d, &mut gamma, settings, &mut degenerate)?;
            }
            if next.value.value > cur.value.value {
                next = Candidate { xbar: cur.xbar.clone(), d: cur.d, value: cur.value };
            }
        }

        let change = (cur.value.value - next.value.value).abs() / cur.value.value.abs().max(1.0);
        prev_x = std::mem::replace(&mut cur.xbar, next.xbar);
        prev_d = cur.d;
        cur.d = next.d;
        cur.value = next.value;
        t = t_after;
        trace.push(cur.value.value);

        if change < settings.tol {
            stall += 1;
            if stall >= STALL_WINDOW {
                break;
            }
        } else {
            stall = 0;
        }
    }

    Ok(FistaOutcome {
        xbar: cur.xbar,
        d: cur.d,
        value: cur.value,
        iterations,
        step: gamma,
        trace,
        restarts,
        degenerate_gradients: degenerate,
    })
}

/// One projected-gradient step from `(w, wd)` with step size chosen by
/// backtracking on the quadratic upper model.
fn prox_step(
    lifted: &RealLiftedProblem,
    penalty: &Penalty,
    w: &DMatrix<f64>,
    wd: f64,
    gamma: &mut f64,
    settings: &FistaSettings,
    degenerate: &mut usize,
) -> Result<Candidate> {
    let g = smoothed_gradient(lifted, w, wd, penalty)?;
    if g.degenerate {
        *degenerate += 1;
    }
    let f_w = checked(g.value, "extrapolated point")?.value;
    let radius = lifted.box_radius();
    *gamma *= settings.bt_grow;
    for _ in 0..MAX_BACKTRACKS {
        let mut z = w - &g.grad_x * *gamma;
        let zd = project_in_place(&mut z, wd - *gamma * g.grad_d, radius);
        let value = smoothed_objective(lifted, &z, zd, penalty)?;
        if value.value.is_finite() {
            let dx = &z - w;
            let dd = zd - wd;
            let model = f_w + g.grad_x.dot(&dx) + g.grad_d * dd + (dx.norm_squared() + dd * dd) / (2.0 * *gamma);
            // rounding slack; monotonicity is enforced by the caller
            if value.value <= model + 1e-13 * f_w.abs().max(1.0) {
                return Ok(Candidate { xbar: z, d: zd, value });
            }
        }
        *gamma *= settings.bt_shrink;
    }
    Err(Error::Numerical(format!(
        "backtracking failed after {MAX_BACKTRACKS} reductions (step {:.3e}, f = {f_w:.6e})",
        *gamma
    )))
}

fn checked(v: SmoothValue, at: &str) -> Result<SmoothValue> {
    if v.value.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!(
            "smoothed objective not finite at {at} (log W = {}, penalty gap = {})",
            v.log_w, v.penalty_gap
        )))
    }
}
