//! Penalty-continuation block coordinate descent for the one-bit problem.
//!
//! Binary transmit entries are replaced by the box `|xbar_i| <= sqrt(P/2N)`
//! together with an auxiliary `v` in the ball `||v||^2 <= PT` and the
//! penalty `lambda (PT - xbar^T v)`. The objective is convex in `(xbar, d)`
//! for fixed `v` and in `v` for fixed `(xbar, d)`, so the solver alternates:
//!
//! 1. `(xbar, d)` by the smoothed FISTA inner solver, warm-started;
//! 2. `v = sqrt(PT) xbar / ||xbar||` in closed form;
//!
//! and multiplies `lambda` by `delta` every `period_m` iterations until it
//! exceeds twice the Lipschitz constant of the worst-residual objective. At
//! that point the penalty pins `xbar` to the box corners and a final sign
//! rounding makes the block exactly one-bit.

use nalgebra::DMatrix;

use super::fista::{fista_solve, FistaSettings};
use super::gain::optimal_gain;
use super::smooth::{lipschitz_estimate, smoothed_objective, v_update, Penalty};
use super::PrecodeResult;
use crate::error::{invalid, Error, Result};
use crate::mimo::{real_lift, unlift_block, ChannelRealization, RealLiftedProblem, SymbolBlock, TransmitBlock};
use crate::ser::minimax_objective;

/// When the penalty continuation stops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// `lambda > 2 L`, with `L` the Lipschitz estimate of the worst-residual
    /// objective in the original variables.
    Lipschitz,
    /// `lambda > 2 L / sqrt(P/2N)`: the same exact-penalty threshold after
    /// rescaling the box to `[-1, 1]`, where the penalty reads
    /// `lambda (P/2N) (2NT - u^T w)` and the objective is `L sqrt(P/2N)`
    /// Lipschitz in `u`.
    ScaledLipschitz,
}

impl StopRule {
    pub fn as_str(self) -> &'static str {
        match self {
            StopRule::Lipschitz => "lipschitz",
            StopRule::ScaledLipschitz => "scaled",
        }
    }

    fn threshold(self, lipschitz: f64, box_radius: f64) -> f64 {
        match self {
            StopRule::Lipschitz => 2.0 * lipschitz,
            StopRule::ScaledLipschitz => 2.0 * lipschitz / box_radius,
        }
    }
}

impl std::str::FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lipschitz" => Ok(StopRule::Lipschitz),
            "scaled" => Ok(StopRule::ScaledLipschitz),
            _ => Err(invalid(format!("unknown stop rule '{s}' (expected lipschitz or scaled)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BcdConfig {
    /// Initial penalty. `None` picks `0.01 L / sqrt(2NT)`.
    pub lambda0: Option<f64>,
    pub delta: f64,
    pub period_m: usize,
    pub sigma_smooth: f64,
    pub fista_max_iters: usize,
    pub fista_tol: f64,
    pub bcd_max_iters: usize,
    pub bt_shrink: f64,
    pub bt_grow: f64,
    /// Initial inner step size. `None` picks `1 / L^2`.
    pub gamma0: Option<f64>,
    /// Re-fit the gain exactly after rounding instead of keeping the
    /// solver's last `d`.
    pub refit_gain: bool,
    pub stop_rule: StopRule,
}

impl Default for BcdConfig {
    fn default() -> Self {
        BcdConfig {
            lambda0: None,
            delta: 2.0,
            period_m: 5,
            sigma_smooth: 0.01,
            fista_max_iters: 500,
            fista_tol: 1e-6,
            bcd_max_iters: 1000,
            bt_shrink: 0.5,
            bt_grow: 1.1,
            gamma0: None,
            refit_gain: true,
            stop_rule: StopRule::ScaledLipschitz,
        }
    }
}

impl BcdConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if let Some(l) = self.lambda0 {
            pos("lambda0", l)?;
        }
        if let Some(g) = self.gamma0 {
            pos("gamma0", g)?;
        }
        pos("sigma_smooth", self.sigma_smooth)?;
        pos("fista_tol", self.fista_tol)?;
        if !(self.delta > 1.0) || !self.delta.is_finite() {
            return Err(invalid(format!("delta must exceed 1, got {}", self.delta)));
        }
        if self.period_m == 0 || self.fista_max_iters == 0 || self.bcd_max_iters == 0 {
            return Err(invalid("period_m, fista_max_iters and bcd_max_iters must be >= 1"));
        }
        if !(self.bt_shrink > 0.0 && self.bt_shrink < 1.0) {
            return Err(invalid(format!("bt_shrink must lie in (0, 1), got {}", self.bt_shrink)));
        }
        if !(self.bt_grow >= 1.0) || !self.bt_grow.is_finite() {
            return Err(invalid(format!("bt_grow must be >= 1, got {}", self.bt_grow)));
        }
        Ok(())
    }

    fn fista(&self) -> FistaSettings {
        FistaSettings {
            max_iters: self.fista_max_iters,
            tol: self.fista_tol,
            bt_shrink: self.bt_shrink,
            bt_grow: self.bt_grow,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcdStep {
    /// Current point re-evaluated under a freshly increased `lambda`.
    PhaseStart,
    /// After the `(xbar, d)` update.
    Inner,
    /// After the `v` update.
    Auxiliary,
}

/// One record of the outer iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub phase: usize,
    pub lambda: f64,
    pub step: BcdStep,
    /// Penalized objective with the smoothed infinity norm; the quantity the
    /// iteration decreases within a phase.
    pub smoothed: f64,
    /// Penalized objective with the exact infinity norm.
    pub exact: f64,
    /// `PT - xbar^T v`.
    pub penalty_gap: f64,
    pub fista_iterations: usize,
}

/// Feasible iterate of the penalty problem.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub xbar: DMatrix<f64>,
    pub d: f64,
    pub v: DMatrix<f64>,
    pub lambda: f64,
}

impl SolverState {
    fn initial(lifted: &RealLiftedProblem, lambda: f64) -> Self {
        let shape = (2 * lifted.antennas(), lifted.block_len());
        SolverState {
            xbar: DMatrix::zeros(shape.0, shape.1),
            d: 1.0,
            v: DMatrix::zeros(shape.0, shape.1),
            lambda,
        }
    }

    /// Box, ball and sign constraints, with a relative rounding allowance on
    /// the ball.
    pub fn is_feasible(&self, lifted: &RealLiftedProblem) -> bool {
        let r = lifted.box_radius();
        let pt = lifted.ball_radius_sq();
        self.xbar.iter().all(|x| x.abs() <= r)
            && self.d >= 0.0
            && self.v.norm_squared() <= pt * (1.0 + 1e-12)
    }
}

/// Solver internals kept alongside the rounded result.
#[derive(Clone, Debug, PartialEq)]
pub struct BcdDiagnostics {
    pub lipschitz: f64,
    pub lambda_final: f64,
    /// `PT - xbar^T v` at termination, before rounding.
    pub penalty_gap: f64,
    /// Last iterate before sign rounding.
    pub relaxed_xbar: DMatrix<f64>,
    pub relaxed_gain: f64,
    pub trace: Vec<TraceEntry>,
    pub degenerate_gradients: usize,
}

/// Runs the block coordinate descent on an already lifted problem and
/// returns the final feasible state with its trace.
pub fn bcd_solve(lifted: &RealLiftedProblem, cfg: &BcdConfig) -> Result<(SolverState, BcdDiagnostics, usize)> {
    cfg.validate()?;
    let lip = lipschitz_estimate(lifted);
    let lambda0 = cfg.lambda0.unwrap_or(0.01 * lip / (lifted.num_variables() as f64).sqrt());
    let mut step = cfg.gamma0.unwrap_or(1.0 / (lip * lip));
    let settings = cfg.fista();
    let pt = lifted.ball_radius_sq();
    let stop_at = cfg.stop_rule.threshold(lip, lifted.box_radius());

    let mut state = SolverState::initial(lifted, lambda0);
    let mut trace = Vec::new();
    let mut phase = 0;
    let mut iteration = 0;
    let mut fista_total = 0;
    let mut degenerate = 0;

    let record = |state: &SolverState, step_kind, iteration, phase, fista_iterations, trace: &mut Vec<TraceEntry>| -> Result<()> {
        let pen = Penalty { v: &state.v, lambda: state.lambda, sigma: cfg.sigma_smooth };
        let smooth = smoothed_objective(lifted, &state.xbar, state.d, &pen)?;
        let exact = minimax_objective(lifted, &state.xbar, state.d)?.value + state.lambda * smooth.penalty_gap;
        if smooth.penalty_gap < -1e-12 * pt || !state.is_feasible(lifted) {
            return Err(Error::Numerical(format!(
                "iterate left the feasible set (penalty gap {:.3e})",
                smooth.penalty_gap
            )));
        }
        trace.push(TraceEntry {
            iteration,
            phase,
            lambda: state.lambda,
            step: step_kind,
            smoothed: smooth.value,
            exact,
            penalty_gap: smooth.penalty_gap,
            fista_iterations,
        });
        Ok(())
    };

    record(&state, BcdStep::PhaseStart, 0, 0, 0, &mut trace)?;
    while state.lambda <= stop_at && iteration < cfg.bcd_max_iters {
        let pen = Penalty { v: &state.v, lambda: state.lambda, sigma: cfg.sigma_smooth };
        let inner = fista_solve(lifted, &pen, &state.xbar, state.d, step, &settings)?;
        step = inner.step;
        fista_total += inner.iterations;
        degenerate += inner.degenerate_gradients;
        state.xbar = inner.xbar;
        state.d = inner.d;
        iteration += 1;
        record(&state, BcdStep::Inner, iteration, phase, inner.iterations, &mut trace)?;

        state.v = v_update(&state.xbar, pt);
        record(&state, BcdStep::Auxiliary, iteration, phase, 0, &mut trace)?;

        if iteration % cfg.period_m == 0 {
            state.lambda *= cfg.delta;
            phase += 1;
            if state.lambda <= stop_at && iteration < cfg.bcd_max_iters {
                record(&state, BcdStep::PhaseStart, iteration, phase, 0, &mut trace)?;
            }
        }
    }

    let penalty_gap = pt - state.xbar.dot(&state.v);
    let diagnostics = BcdDiagnostics {
        lipschitz: lip,
        lambda_final: state.lambda,
        penalty_gap,
        relaxed_xbar: state.xbar.clone(),
        relaxed_gain: state.d,
        trace,
        degenerate_gradients: degenerate,
    };
    Ok((state, diagnostics, fista_total))
}

/// Largest relative deviation of `|xbar_i|` from the one-bit amplitude.
pub fn binarity_gap(xbar: &DMatrix<f64>, box_radius: f64) -> f64 {
    xbar.iter().fold(0.0f64, |m, x| m.max((x.abs() - box_radius).abs() / box_radius))
}

/// Sign rounding onto `±sqrt(P/2N)`, with `sign(0) = +1`.
pub fn round_to_onebit(xbar: &DMatrix<f64>, box_radius: f64) -> DMatrix<f64> {
    xbar.map(|x| if x < 0.0 { -box_radius } else { box_radius })
}

/// One-bit precoding of the block `S` over channel `H`.
pub fn bcd_precode(h: &ChannelRealization, s: &SymbolBlock, power: f64, cfg: &BcdConfig) -> Result<PrecodeResult> {
    let lifted = real_lift(h, s, power)?;
    let (state, diagnostics, fista_total) = bcd_solve(&lifted, cfg)?;
    let r = lifted.box_radius();
    let gap = binarity_gap(&state.xbar, r);
    let rounded = round_to_onebit(&state.xbar, r);
    let (gain, final_objective) = if cfg.refit_gain {
        optimal_gain(&lifted, &rounded)?
    } else {
        (state.d, minimax_objective(&lifted, &rounded, state.d)?)
    };
    let transmit = TransmitBlock::new(unlift_block(&rounded), power, true)?;
    let bcd_iterations = diagnostics.trace.last().map_or(0, |e| e.iteration);
    Ok(PrecodeResult {
        transmit,
        gain,
        final_objective,
        bcd_iterations,
        fista_iterations_total: fista_total,
        binarity_gap: Some(gap),
        solver: Some(diagnostics),
    })
}
