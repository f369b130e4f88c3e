//! Signal model: channel, QAM constellation, symbol and transmit blocks,
//! additive noise and the real-valued lifting consumed by the solvers.

mod channel;
mod lift;
mod qam;

pub use channel::{apply_channel_awgn, gen_rayleigh_channel, ChannelRealization, NoiseModel};
pub use lift::{lift_vector, real_lift, unlift_block, RealLiftedProblem};
pub use qam::{count_bit_errors, detect, map_bits, unmap_symbols, QamConstellation, SymbolBlock, TransmitBlock};

pub use num_complex::Complex64;
