//! Precoders: block coordinate descent one-bit precoding and the
//! zero-forcing baselines, behind a common [`Precoder`] trait.

mod bcd;
mod fista;
mod gain;
mod smooth;
mod zf;

use std::fmt;
use std::str::FromStr;

pub use bcd::{
    bcd_precode, bcd_solve, binarity_gap, round_to_onebit, BcdConfig, BcdDiagnostics, BcdStep, SolverState,
    StopRule, TraceEntry,
};
pub use fista::{fista_solve, FistaOutcome, FistaSettings, STALL_WINDOW};
pub use gain::{estimate_gain_ls, optimal_gain};
pub use smooth::{
    lipschitz_estimate, project_feasible, smoothed_gradient, smoothed_objective, v_update, Penalty, SmoothGradient,
    SmoothValue,
};
pub use zf::{one_bit_quantize, one_bit_zf_precode, right_inverse, zf_precode, MAX_GRAM_CONDITION};

use crate::error::{invalid, Result};
use crate::mimo::{ChannelRealization, QamConstellation, SymbolBlock, TransmitBlock};
use crate::ser::MinimaxValue;

/// Output of any precoder.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecodeResult {
    pub transmit: TransmitBlock,
    /// Gain `d` the users divide by before deciding.
    pub gain: f64,
    /// Exact worst-residual objective of `transmit` at `gain`.
    pub final_objective: MinimaxValue,
    pub bcd_iterations: usize,
    pub fista_iterations_total: usize,
    /// Only for the iterative solver, measured before rounding.
    pub binarity_gap: Option<f64>,
    pub solver: Option<BcdDiagnostics>,
}

impl PrecodeResult {
    pub(crate) fn baseline(transmit: TransmitBlock, gain: f64, final_objective: MinimaxValue) -> Self {
        PrecodeResult {
            transmit,
            gain,
            final_objective,
            bcd_iterations: 0,
            fista_iterations_total: 0,
            binarity_gap: None,
            solver: None,
        }
    }
}

/// A downlink precoder. Implementations must be deterministic functions of
/// their inputs; the harness relies on it for reproducible sweeps.
pub trait Precoder: Send + Sync {
    fn name(&self) -> &str;

    fn precode(
        &self,
        h: &ChannelRealization,
        s: &SymbolBlock,
        constellation: &QamConstellation,
        power: f64,
    ) -> Result<PrecodeResult>;
}

pub struct ZeroForcing;

impl Precoder for ZeroForcing {
    fn name(&self) -> &str {
        PrecoderKind::Zf.as_str()
    }

    fn precode(&self, h: &ChannelRealization, s: &SymbolBlock, c: &QamConstellation, power: f64) -> Result<PrecodeResult> {
        zf_precode(h, s, c, power)
    }
}

pub struct OneBitZeroForcing;

impl Precoder for OneBitZeroForcing {
    fn name(&self) -> &str {
        PrecoderKind::OneBitZf.as_str()
    }

    fn precode(&self, h: &ChannelRealization, s: &SymbolBlock, c: &QamConstellation, power: f64) -> Result<PrecodeResult> {
        one_bit_zf_precode(h, s, c, power)
    }
}

pub struct BcdFista {
    pub config: BcdConfig,
}

impl Precoder for BcdFista {
    fn name(&self) -> &str {
        PrecoderKind::BcdFista.as_str()
    }

    fn precode(&self, h: &ChannelRealization, s: &SymbolBlock, _c: &QamConstellation, power: f64) -> Result<PrecodeResult> {
        bcd_precode(h, s, power, &self.config)
    }
}

/// Built-in precoders selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrecoderKind {
    Zf,
    OneBitZf,
    BcdFista,
}

impl PrecoderKind {
    pub const ALL: [PrecoderKind; 3] = [PrecoderKind::Zf, PrecoderKind::OneBitZf, PrecoderKind::BcdFista];

    pub fn as_str(self) -> &'static str {
        match self {
            PrecoderKind::Zf => "zf",
            PrecoderKind::OneBitZf => "onebit-zf",
            PrecoderKind::BcdFista => "bcd-fista",
        }
    }

    pub fn build(self, bcd: &BcdConfig) -> Box<dyn Precoder> {
        match self {
            PrecoderKind::Zf => Box::new(ZeroForcing),
            PrecoderKind::OneBitZf => Box::new(OneBitZeroForcing),
            PrecoderKind::BcdFista => Box::new(BcdFista { config: *bcd }),
        }
    }
}

impl fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrecoderKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        PrecoderKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| invalid(format!("unknown precoder '{s}' (expected zf, onebit-zf or bcd-fista)")))
    }
}
