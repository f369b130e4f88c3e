use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ChannelRealization, SymbolBlock};
use crate::error::{dims, invalid, Result};

/// Real-valued form of one precoding instance.
///
/// `hbar = [[Re H, -Im H], [Im H, Re H]]` acts on each lifted transmit column
/// `[Re x_t; Im x_t]`; the block-diagonal operator over the whole block is
/// never formed, products are taken column by column as `hbar * xbar`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealLiftedProblem {
    hbar: DMatrix<f64>,
    sbar: DMatrix<f64>,
    power: f64,
    users: usize,
    antennas: usize,
    block_len: usize,
}

impl RealLiftedProblem {
    /// Lifted channel, `2K x 2N`.
    pub fn hbar(&self) -> &DMatrix<f64> {
        &self.hbar
    }

    /// Lifted symbols, `2K x T`. Its column-major storage is the stacked
    /// vector of all `2KT` lifted symbols.
    pub fn sbar(&self) -> &DMatrix<f64> {
        &self.sbar
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// `sqrt(P / 2N)`.
    pub fn box_radius(&self) -> f64 {
        (self.power / (2.0 * self.antennas as f64)).sqrt()
    }

    /// `P T`.
    pub fn ball_radius_sq(&self) -> f64 {
        self.power * self.block_len as f64
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Number of lifted residual rows, `2KT`.
    pub fn num_residuals(&self) -> usize {
        2 * self.users * self.block_len
    }

    /// Number of lifted transmit variables, `2NT`.
    pub fn num_variables(&self) -> usize {
        2 * self.antennas * self.block_len
    }

    /// `hbar * xbar - d * sbar`, the `2K x T` residual block.
    pub fn residual(&self, xbar: &DMatrix<f64>, d: f64) -> DMatrix<f64> {
        let mut r = &self.hbar * xbar;
        r.zip_apply(&self.sbar, |ri, si| *ri -= d * si);
        r
    }

    pub fn check_block(&self, xbar: &DMatrix<f64>) -> Result<()> {
        if xbar.shape() != (2 * self.antennas, self.block_len) {
            return Err(dims(format!(
                "lifted transmit block is {:?}, expected {:?}",
                xbar.shape(),
                (2 * self.antennas, self.block_len)
            )));
        }
        Ok(())
    }

    /// Builds a problem directly from real data. Used by tests that need a
    /// lifted operator without a complex channel behind it.
    pub fn from_parts(hbar: DMatrix<f64>, sbar: DMatrix<f64>, power: f64) -> Result<Self> {
        if !hbar.nrows().is_multiple_of(2) || !hbar.ncols().is_multiple_of(2) || hbar.nrows() != sbar.nrows() {
            return Err(dims("lifted channel must be 2K x 2N with matching 2K x T symbols"));
        }
        if !(power > 0.0) {
            return Err(invalid("power must be positive"));
        }
        Ok(RealLiftedProblem {
            users: hbar.nrows() / 2,
            antennas: hbar.ncols() / 2,
            block_len: sbar.ncols(),
            hbar,
            sbar,
            power,
        })
    }
}

/// Lifts `(H, S, P)` to the real-valued problem.
pub fn real_lift(h: &ChannelRealization, s: &SymbolBlock, power: f64) -> Result<RealLiftedProblem> {
    if s.users() != h.users() {
        return Err(dims(format!("symbol block has {} users, channel has {}", s.users(), h.users())));
    }
    if !(power > 0.0) || !power.is_finite() {
        return Err(invalid(format!("power must be positive, got {power}")));
    }
    let (k, n) = (h.users(), h.antennas());
    let hm = h.matrix();
    let mut hbar = DMatrix::zeros(2 * k, 2 * n);
    for i in 0..k {
        for j in 0..n {
            let z = hm[(i, j)];
            hbar[(i, j)] = z.re;
            hbar[(i, j + n)] = -z.im;
            hbar[(i + k, j)] = z.im;
            hbar[(i + k, j + n)] = z.re;
        }
    }
    Ok(RealLiftedProblem {
        hbar,
        sbar: lift_vector(s.matrix()),
        power,
        users: k,
        antennas: n,
        block_len: s.len(),
    })
}

/// Stacks real over imaginary parts: an `m x T` complex block becomes
/// `2m x T` real.
pub fn lift_vector(z: &DMatrix<Complex64>) -> DMatrix<f64> {
    let m = z.nrows();
    DMatrix::from_fn(2 * m, z.ncols(), |i, t| if i < m { z[(i, t)].re } else { z[(i - m, t)].im })
}

/// Inverse of [`lift_vector`].
pub fn unlift_block(xbar: &DMatrix<f64>) -> DMatrix<Complex64> {
    let m = xbar.nrows() / 2;
    DMatrix::from_fn(m, xbar.ncols(), |i, t| Complex64::new(xbar[(i, t)], xbar[(i + m, t)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::{gen_rayleigh_channel, QamConstellation};
    use crate::rng::RngStream;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_channel_lift() {
        let q = QamConstellation::new(2).unwrap();
        let h = ChannelRealization::from_rows(&[vec![c(1.0, 2.0)]]).unwrap();
        let s = SymbolBlock::new(DMatrix::from_element(1, 1, c(3.0, -1.0)), &q).unwrap();
        let p = real_lift(&h, &s, 1.0).unwrap();
        assert_eq!(p.hbar(), &DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 2.0, 1.0]));
        assert_eq!(p.sbar(), &DMatrix::from_column_slice(2, 1, &[3.0, -1.0]));
    }

    #[test]
    fn lift_is_a_homomorphism() {
        let q = QamConstellation::new(1).unwrap();
        let mut rng = RngStream::new(99);
        for _ in 0..100 {
            let h = gen_rayleigh_channel(2, 3, &mut rng).unwrap();
            let s = SymbolBlock::new(DMatrix::from_element(2, 1, c(1.0, 1.0)), &q).unwrap();
            let p = real_lift(&h, &s, 1.0).unwrap();
            let x = DMatrix::from_fn(3, 1, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let direct = lift_vector(&(h.matrix() * &x));
            let lifted = p.hbar() * lift_vector(&x);
            let scale = direct.amax();
            assert!((lifted - &direct).amax() <= 1e-12 * scale);
        }
    }

    #[test]
    fn unlift_inverts_lift() {
        let z = DMatrix::from_fn(3, 2, |i, j| c(i as f64, -(j as f64) - 0.5));
        assert_eq!(unlift_block(&lift_vector(&z)), z);
    }

    #[test]
    fn radii() {
        let q = QamConstellation::new(1).unwrap();
        let h = gen_rayleigh_channel(2, 8, &mut RngStream::new(1)).unwrap();
        let s = SymbolBlock::new(DMatrix::from_element(2, 5, c(1.0, -1.0)), &q).unwrap();
        let p = real_lift(&h, &s, 2.0).unwrap();
        assert!((p.box_radius() - (2.0f64 / 16.0).sqrt()).abs() < 1e-15);
        assert_eq!(p.ball_radius_sq(), 10.0);
        assert_eq!(p.num_residuals(), 20);
        assert_eq!(p.num_variables(), 80);
    }

    #[test]
    fn mismatched_users_rejected() {
        let q = QamConstellation::new(1).unwrap();
        let h = gen_rayleigh_channel(2, 4, &mut RngStream::new(1)).unwrap();
        let s = SymbolBlock::new(DMatrix::from_element(3, 1, c(1.0, 1.0)), &q).unwrap();
        assert!(real_lift(&h, &s, 1.0).is_err());
    }
}
