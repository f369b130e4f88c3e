//! Zero-forcing baselines.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::gain::estimate_gain_ls;
use super::PrecodeResult;
use crate::error::{dims, Error, Result};
use crate::mimo::{lift_vector, real_lift, ChannelRealization, QamConstellation, SymbolBlock, TransmitBlock};
use crate::ser::minimax_objective;

/// Largest accepted condition number of `H H^H`.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Right pseudo-inverse `H^H (H H^H)^{-1}`.
pub fn right_inverse(h: &ChannelRealization) -> Result<DMatrix<Complex64>> {
    if h.users() > h.antennas() {
        return Err(dims(format!(
            "zero forcing needs K <= N, got K={} N={}",
            h.users(),
            h.antennas()
        )));
    }
    let hm = h.matrix();
    let gram = hm * hm.adjoint();
    let sv = gram.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < MAX_GRAM_CONDITION) {
        return Err(Error::Numerical(format!("H H^H is ill-conditioned (condition number {cond:.3e})")));
    }
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Numerical(format!("H H^H is singular (condition number {cond:.3e})")))?;
    Ok(hm.adjoint() * inv)
}

/// `X = beta H^+ S` with `beta = sqrt(P / (E_s ||H^+||_F^2))`, so that
/// `E ||x_t||^2 = P` for i.i.d. uniform symbols. The returned gain is `beta`.
pub fn zf_precode(h: &ChannelRealization, s: &SymbolBlock, c: &QamConstellation, power: f64) -> Result<PrecodeResult> {
    if s.users() != h.users() {
        return Err(dims("symbol block and channel disagree on the number of users"));
    }
    let pinv = right_inverse(h)?;
    let beta = (power / (c.mean_energy() * pinv.norm_squared())).sqrt();
    let x = (&pinv * s.matrix()) * Complex64::new(beta, 0.0);
    let transmit = TransmitBlock::new(x, power, false)?;
    let lifted = real_lift(h, s, power)?;
    let final_objective = minimax_objective(&lifted, &lift_vector(transmit.matrix()), beta)?;
    Ok(PrecodeResult::baseline(transmit, beta, final_objective))
}

/// Maps each entry to `sqrt(P/2N) (sign Re + j sign Im)` with `sign(0) = +1`.
pub fn one_bit_quantize(x: &TransmitBlock, power: f64) -> Result<TransmitBlock> {
    let a = (power / (2.0 * x.antennas() as f64)).sqrt();
    let sgn = |v: f64| if v < 0.0 { -a } else { a };
    TransmitBlock::new(x.matrix().map(|z| Complex64::new(sgn(z.re), sgn(z.im))), power, true)
}

/// Zero forcing followed by one-bit quantization, with a least-squares gain.
pub fn one_bit_zf_precode(
    h: &ChannelRealization,
    s: &SymbolBlock,
    c: &QamConstellation,
    power: f64,
) -> Result<PrecodeResult> {
    let zf = zf_precode(h, s, c, power)?;
    let transmit = one_bit_quantize(&zf.transmit, power)?;
    let gain = estimate_gain_ls(h, &transmit, s)?;
    let lifted = real_lift(h, s, power)?;
    let final_objective = minimax_objective(&lifted, &lift_vector(transmit.matrix()), gain)?;
    Ok(PrecodeResult::baseline(transmit, gain, final_objective))
}
