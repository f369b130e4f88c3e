//! Receive-gain selection: least-squares fit for the linear baselines and the
//! exact minimax fit used after one-bit rounding.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{dims, invalid, Result};
use crate::mimo::{ChannelRealization, RealLiftedProblem, SymbolBlock, TransmitBlock};
use crate::ser::{minimax_objective, MinimaxValue};

/// Least-squares gain `sum Re(conj(s) (Hx)) / sum |s|^2`, clamped at zero.
pub fn estimate_gain_ls(h: &ChannelRealization, x: &TransmitBlock, s: &SymbolBlock) -> Result<f64> {
    if x.antennas() != h.antennas() || s.users() != h.users() || s.len() != x.len() {
        return Err(dims("channel, transmit block and symbols disagree in shape"));
    }
    let y = h.matrix() * x.matrix();
    let energy: f64 = s.matrix().iter().map(Complex64::norm_sqr).sum();
    if !(energy > 0.0) {
        return Err(invalid("symbol block has zero energy"));
    }
    let corr: f64 = y.iter().zip(s.matrix().iter()).map(|(y, s)| (s.conj() * y).re).sum();
    Ok((corr / energy).max(0.0))
}

/// Gain minimizing `max_i |a_i - d s_i| - d` over `d >= 0` for the fixed
/// lifted point `xbar`.
///
/// The objective is convex and piecewise linear in `d`. A golden-section
/// search brackets the minimizer, then the two lines active at the bracket
/// ends are intersected to land on the breakpoint itself.
pub fn optimal_gain(lifted: &RealLiftedProblem, xbar: &DMatrix<f64>) -> Result<(f64, MinimaxValue)> {
    lifted.check_block(xbar)?;
    let a = lifted.hbar() * xbar;
    let s = lifted.sbar();
    let lines: Vec<(f64, f64)> = a
        .iter()
        .zip(s.iter())
        .flat_map(|(&ai, &si)| [(ai, -si - 1.0), (-ai, si - 1.0)])
        .collect();
    let eval = |d: f64| lines.iter().fold(f64::NEG_INFINITY, |m, (c, k)| m.max(c + k * d));
    let active = |d: f64| {
        lines
            .iter()
            .copied()
            .max_by(|(c1, k1), (c2, k2)| (c1 + k1 * d).total_cmp(&(c2 + k2 * d)))
            .unwrap()
    };

    let a_max = a.amax();
    let s_max = s.amax();
    let upper = if s_max > 1.0 { 2.0 * a_max / (s_max - 1.0) } else { 2.0 * a_max };
    let mut best_d = 0.0;
    let mut best_v = eval(0.0);
    if upper > 0.0 {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (0.0, upper);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (eval(x1), eval(x2));
        for _ in 0..200 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = eval(x2);
            }
            if hi - lo <= f64::EPSILON * hi.max(1e-300) {
                break;
            }
        }
        let mut candidates = vec![lo, hi, x1, x2, upper];
        let (c1, k1) = active(lo);
        let (c2, k2) = active(hi);
        if k1 != k2 {
            let cross = (c2 - c1) / (k1 - k2);
            if cross.is_finite() && cross >= 0.0 {
                candidates.push(cross);
            }
        }
        for d in candidates {
            let v = eval(d);
            if v < best_v {
                best_v = v;
                best_d = d;
            }
        }
    }
    let value = minimax_objective(lifted, xbar, best_d)?;
    Ok((best_d, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::{gen_rayleigh_channel, real_lift, QamConstellation};
    use crate::rng::RngStream;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_setup(seed: u64) -> (ChannelRealization, SymbolBlock, QamConstellation) {
        let mut rng = RngStream::new(seed);
        let q = QamConstellation::new(2).unwrap();
        let h = gen_rayleigh_channel(2, 4, &mut rng).unwrap();
        let s = SymbolBlock::new(DMatrix::from_fn(2, 3, |_, _| q.points()[rng.random_range(0..16)]), &q).unwrap();
        (h, s, q)
    }

    #[test]
    fn ls_gain_recovers_exact_scaling() {
        // 1x1 channel so X can be chosen with HX = 3 S
        let q = QamConstellation::new(2).unwrap();
        let h = ChannelRealization::from_rows(&[vec![c(0.5, 0.5)]]).unwrap();
        let s = SymbolBlock::new(DMatrix::from_row_slice(1, 2, &[c(1.0, -3.0), c(3.0, 3.0)]), &q).unwrap();
        let inv = Complex64::new(1.0, 0.0) / c(0.5, 0.5);
        let x = TransmitBlock::new(s.matrix().map(|z| z * inv * 3.0), 1.0, false).unwrap();
        assert!((estimate_gain_ls(&h, &x, &s).unwrap() - 3.0).abs() < 1e-12);
        let xneg = TransmitBlock::new(s.matrix().map(|z| -z * inv), 1.0, false).unwrap();
        assert_eq!(estimate_gain_ls(&h, &xneg, &s).unwrap(), 0.0);
    }

    #[test]
    fn ls_gain_matches_scalar_least_squares() {
        let (h, s, _) = random_setup(3);
        let mut rng = RngStream::new(4);
        let x = TransmitBlock::new(DMatrix::from_fn(4, 3, |_, _| c(rng.random(), rng.random())), 1.0, false).unwrap();
        let d = estimate_gain_ls(&h, &x, &s).unwrap();
        // minimize ||Y - d S||_F^2 over a fine grid then refine by parabola vertex
        let y = h.matrix() * x.matrix();
        let cost = |d: f64| (&y - s.matrix().map(|z| z * d)).norm_squared();
        let (c0, c1, c2) = (cost(0.0), cost(1.0), cost(2.0));
        let vertex = (c0 - c2) / (2.0 * (c0 - 2.0 * c1 + c2)) + 1.0;
        assert!((d - vertex.max(0.0)).abs() < 1e-10);
    }

    #[test]
    fn optimal_gain_matches_breakpoint_enumeration() {
        for seed in 0..40 {
            let (h, s, _) = random_setup(100 + seed);
            let lifted = real_lift(&h, &s, 1.0).unwrap();
            let mut rng = RngStream::new(seed);
            let r = lifted.box_radius();
            let xbar = DMatrix::from_fn(8, 3, |_, _| if rng.random::<bool>() { r } else { -r });
            let (d, v) = optimal_gain(&lifted, &xbar).unwrap();
            assert!(d >= 0.0);
            // oracle: every pairwise line crossing plus d = 0
            let a = lifted.hbar() * &xbar;
            let mut lines = Vec::new();
            for (ai, si) in a.iter().zip(lifted.sbar().iter()) {
                lines.push((*ai, -si - 1.0));
                lines.push((-ai, si - 1.0));
            }
            let g = |d: f64| lines.iter().fold(f64::NEG_INFINITY, |m: f64, (c, k)| m.max(c + k * d));
            let mut best = g(0.0);
            for i in 0..lines.len() {
                for j in 0..i {
                    let (c1, k1) = lines[i];
                    let (c2, k2) = lines[j];
                    if k1 != k2 {
                        let x = (c2 - c1) / (k1 - k2);
                        if x >= 0.0 {
                            best = best.min(g(x));
                        }
                    }
                }
            }
            assert!((v.value - best).abs() < 1e-12, "seed {seed}: {} vs {best}", v.value);
        }
    }

    #[test]
    fn optimal_gain_of_exact_shaping() {
        let sbar = DMatrix::from_column_slice(4, 1, &[1.0, -3.0, 3.0, -1.0]);
        let id = RealLiftedProblem::from_parts(DMatrix::identity(4, 4), sbar.clone(), 1.0).unwrap();
        let (d, v) = optimal_gain(&id, &(sbar * 0.5)).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert!((v.value + 0.5).abs() < 1e-12);
    }
}
