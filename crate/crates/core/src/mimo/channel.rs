use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::TransmitBlock;
use crate::error::{dims, invalid, Result};

/// Downlink channel `H`, one row per single-antenna user and one column per
/// base-station antenna.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    entries: DMatrix<Complex64>,
}

impl ChannelRealization {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(invalid("channel must have at least one user and one antenna"));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("channel entries must be finite"));
        }
        Ok(ChannelRealization { entries })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(dims("ragged channel rows"));
        }
        Self::new(DMatrix::from_fn(k, n, |i, j| rows[i][j]))
    }

    pub fn users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }
}

/// Circularly symmetric complex Gaussian noise with variance `sigma_n_sq`
/// per complex sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub sigma_n_sq: f64,
}

impl NoiseModel {
    pub fn new(sigma_n_sq: f64) -> Result<Self> {
        // zero is accepted as the noiseless limit
        if !(sigma_n_sq >= 0.0) || !sigma_n_sq.is_finite() {
            return Err(invalid(format!("noise variance must be finite and >= 0, got {sigma_n_sq}")));
        }
        Ok(NoiseModel { sigma_n_sq })
    }

    /// Noise variance for a given `P / sigma_n^2` ratio in dB.
    pub fn from_snr_db(power: f64, snr_db: f64) -> Result<Self> {
        Self::new(power / 10f64.powf(snr_db / 10.0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let s = (self.sigma_n_sq / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    }
}

/// Draws an i.i.d. `CN(0, 1)` channel of `k` users by `n` antennas.
pub fn gen_rayleigh_channel<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<ChannelRealization> {
    if k == 0 || n == 0 {
        return Err(invalid(format!("channel dimensions must be positive, got K={k}, N={n}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // fill row by row so the draw order does not depend on storage layout
    let mut h = DMatrix::zeros(k, n);
    for i in 0..k {
        for j in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            h[(i, j)] = Complex64::new(s * re, s * im);
        }
    }
    ChannelRealization::new(h)
}

/// `Y = H X + N`, with noise drawn in column-major order of `Y`.
pub fn apply_channel_awgn<R: Rng + ?Sized>(
    h: &ChannelRealization,
    x: &TransmitBlock,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    if x.antennas() != h.antennas() {
        return Err(dims(format!(
            "transmit block has {} antennas, channel has {}",
            x.antennas(),
            h.antennas()
        )));
    }
    let mut y = h.matrix() * x.matrix();
    if noise.sigma_n_sq > 0.0 {
        for v in y.iter_mut() {
            *v += noise.sample(rng);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn channel_is_reproducible() {
        let a = gen_rayleigh_channel(2, 4, &mut RngStream::new(7)).unwrap();
        let b = gen_rayleigh_channel(2, 4, &mut RngStream::new(7)).unwrap();
        assert_eq!(a, b);
        let bits_a: Vec<u64> = a.matrix().iter().map(|z| z.re.to_bits()).collect();
        let bits_b: Vec<u64> = b.matrix().iter().map(|z| z.re.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn channel_has_unit_average_gain() {
        let h = gen_rayleigh_channel(1, 100_000, &mut RngStream::new(11)).unwrap();
        let mean = h.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e5;
        assert!((0.98..=1.02).contains(&mean), "mean |h|^2 = {mean}");
    }

    #[test]
    fn zero_users_rejected() {
        assert!(gen_rayleigh_channel(0, 4, &mut RngStream::new(1)).is_err());
        assert!(gen_rayleigh_channel(3, 0, &mut RngStream::new(1)).is_err());
    }

    #[test]
    fn noiseless_channel_is_exact() {
        let h = gen_rayleigh_channel(3, 5, &mut RngStream::new(2)).unwrap();
        let x = TransmitBlock::new(
            DMatrix::from_fn(5, 2, |i, j| Complex64::new(i as f64, j as f64 - 1.0)),
            1.0,
            false,
        )
        .unwrap();
        let y = apply_channel_awgn(&h, &x, &NoiseModel::new(0.0).unwrap(), &mut RngStream::new(3)).unwrap();
        assert_eq!(y, h.matrix() * x.matrix());
    }

    #[test]
    fn noise_variance_matches_model() {
        let h = ChannelRealization::new(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))).unwrap();
        let c = Complex64::new(0.5, -1.5);
        let x = TransmitBlock::new(DMatrix::from_element(1, 100_000, c), 1.0, false).unwrap();
        let noise = NoiseModel::new(0.3).unwrap();
        let y = apply_channel_awgn(&h, &x, &noise, &mut RngStream::new(5)).unwrap();
        let n = y.len() as f64;
        let mean = y.iter().map(|v| v - c).sum::<Complex64>() / n;
        let var = y.iter().map(|v| (v - c - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
        assert!((var / 0.3 - 1.0).abs() < 0.05, "sample variance {var}");
    }

    #[test]
    fn noisy_channel_is_reproducible() {
        let h = gen_rayleigh_channel(2, 3, &mut RngStream::new(2)).unwrap();
        let x = TransmitBlock::new(DMatrix::from_element(3, 4, Complex64::new(1.0, 1.0)), 1.0, false).unwrap();
        let noise = NoiseModel::new(0.1).unwrap();
        let a = apply_channel_awgn(&h, &x, &noise, &mut RngStream::new(9)).unwrap();
        let b = apply_channel_awgn(&h, &x, &noise, &mut RngStream::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn snr_conversion() {
        let n = NoiseModel::from_snr_db(1.0, 20.0).unwrap();
        assert!((n.sigma_n_sq - 0.01).abs() < 1e-15);
        assert!(NoiseModel::new(f64::NAN).is_err());
        assert!(NoiseModel::new(-1.0).is_err());
    }
}
