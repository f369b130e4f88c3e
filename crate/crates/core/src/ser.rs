//! Error-probability bounds and the exact worst-case residual objective.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use statrs::function::erf::erfc;

use crate::error::{dims, invalid, Result};
use crate::mimo::{detect, NoiseModel, QamConstellation, RealLiftedProblem};

/// Gaussian tail probability `Q(x) = P(Z > x)`, evaluated as `erfc(x/√2)/2`.
pub fn q_function(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(invalid("Q-function argument is NaN"));
    }
    Ok(0.5 * erfc(x / std::f64::consts::SQRT_2))
}

/// Per-dimension symbol-error upper bounds `(M^R, M^I)` for one user and one
/// symbol time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SepBound {
    pub m_r: f64,
    pub m_i: f64,
}

impl SepBound {
    /// `2 max{M^R, M^I}`, the bound on the full symbol error probability.
    pub fn symbol_bound(&self) -> f64 {
        2.0 * self.m_r.max(self.m_i)
    }
}

/// Bounds from the noiseless received value `hx = h_i^T x_t`.
pub fn sep_bounds_from_output(hx: Complex64, d: f64, s: Complex64, sigma_n_sq: f64) -> Result<SepBound> {
    if !(d >= 0.0) {
        return Err(invalid(format!("gain must be >= 0, got {d}")));
    }
    if !(sigma_n_sq > 0.0) {
        return Err(invalid(format!("noise variance must be > 0, got {sigma_n_sq}")));
    }
    let scale = (sigma_n_sq / 2.0).sqrt();
    let m = |received: f64, symbol: f64| -> Result<f64> {
        Ok(2.0 * q_function((d - (received - d * symbol).abs()) / scale)?)
    };
    Ok(SepBound { m_r: m(hx.re, s.re)?, m_i: m(hx.im, s.im)? })
}

/// Bounds for user row `h_i` and transmit column `x_t`.
pub fn sep_bounds(h_i: &[Complex64], x_t: &[Complex64], d: f64, s: Complex64, sigma_n_sq: f64) -> Result<SepBound> {
    if h_i.len() != x_t.len() {
        return Err(dims(format!("channel row has {} entries, transmit vector {}", h_i.len(), x_t.len())));
    }
    let hx = h_i.iter().zip(x_t).map(|(h, x)| h * x).sum();
    sep_bounds_from_output(hx, d, s, sigma_n_sq)
}

/// Worst lifted residual minus the gain, with the location of the maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimaxValue {
    pub value: f64,
    /// Lifted row in `0..2K`; rows `K..2K` are the quadrature parts.
    pub row: usize,
    pub time: usize,
}

/// `max_t ||hbar xbar_t - d sbar_t||_inf - d`. Ties go to the lowest row,
/// then the lowest time index.
pub fn minimax_objective(lifted: &RealLiftedProblem, xbar: &DMatrix<f64>, d: f64) -> Result<MinimaxValue> {
    lifted.check_block(xbar)?;
    if !(d >= 0.0) {
        return Err(invalid(format!("gain must be >= 0, got {d}")));
    }
    Ok(minimax_of_residual(&lifted.residual(xbar, d), d))
}

pub(crate) fn minimax_of_residual(r: &DMatrix<f64>, d: f64) -> MinimaxValue {
    let mut best = MinimaxValue { value: f64::NEG_INFINITY, row: 0, time: 0 };
    for i in 0..r.nrows() {
        for t in 0..r.ncols() {
            let a = r[(i, t)].abs();
            if a > best.value {
                best = MinimaxValue { value: a, row: i, time: t };
            }
        }
    }
    best.value -= d;
    best
}

/// Outcome of comparing an empirical SEP against its analytic bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SepChainReport {
    pub empirical: f64,
    pub bound: f64,
    /// Binomial standard deviation of the empirical estimate.
    pub std_err: f64,
    pub trials: u64,
    pub passes: bool,
}

/// Checks `SEP <= 2 max{M^R, M^I}` statistically: passes when the empirical
/// rate is within three binomial standard deviations above the bound.
pub fn sep_chain_check(errors: u64, trials: u64, bound: &SepBound) -> Result<SepChainReport> {
    if trials == 0 {
        return Err(invalid("SEP check needs at least one trial"));
    }
    if errors > trials {
        return Err(invalid(format!("{errors} errors out of {trials} trials")));
    }
    let p = errors as f64 / trials as f64;
    let std_err = (p * (1.0 - p) / trials as f64).sqrt();
    let b = bound.symbol_bound();
    Ok(SepChainReport { empirical: p, bound: b, std_err, trials, passes: p <= b + 3.0 * std_err })
}

/// Monte Carlo symbol errors of `dec((hx + n)/d)` against `s` over `trials`
/// noise draws.
pub fn simulate_symbol_errors<R: Rng + ?Sized>(
    hx: Complex64,
    d: f64,
    s: Complex64,
    c: &QamConstellation,
    noise: &NoiseModel,
    trials: u64,
    rng: &mut R,
) -> Result<u64> {
    let mut errors = 0;
    for _ in 0..trials {
        if detect(hx + noise.sample(rng), d, c)? != s {
            errors += 1;
        }
    }
    Ok(errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::{gen_rayleigh_channel, lift_vector, real_lift, SymbolBlock};
    use crate::rng::RngStream;
    use rand::Rng;

    /// Composite Simpson quadrature of the standard normal density on
    /// `[x, x + 40]`; independent of erfc.
    fn q_quadrature(x: f64) -> f64 {
        let (a, b, n) = (x, x + 40.0, 400_000);
        let h = (b - a) / n as f64;
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = phi(a) + phi(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * phi(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(q_function(0.0).unwrap(), 0.5);
    }

    #[test]
    fn q_reflection() {
        for x in [0.3, 1.0, 2.5] {
            let lhs = q_function(-x).unwrap();
            assert!((lhs - (1.0 - q_function(x).unwrap())).abs() < 1e-15);
        }
    }

    #[test]
    fn q_matches_quadrature() {
        let v = q_function(1.6449).unwrap();
        assert!((v - 0.05).abs() < 1e-4);
        for x in [-2.0, 0.0, 0.7, 1.6449, 3.0, 5.0] {
            let oracle = q_quadrature(x);
            assert!((q_function(x).unwrap() - oracle).abs() <= 1e-12 + 1e-9 * oracle, "x = {x}");
        }
    }

    #[test]
    fn q_rejects_nan() {
        assert!(q_function(f64::NAN).is_err());
    }

    #[test]
    fn q_strictly_decreasing() {
        let grid: Vec<f64> = (0..1000).map(|i| -8.0 + 16.0 * i as f64 / 999.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| q_function(x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        // near x = -8 consecutive values differ by less than one ulp of 1.0,
        // so strictness is only checked where doubles can resolve it
        for (w, x) in vals.windows(2).zip(&grid) {
            if *x >= -7.5 {
                assert!(w[1] < w[0], "not strictly decreasing at {x}");
            }
        }
        assert!(vals.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn zero_residual_bound() {
        // sigma_n = sqrt(2) makes the denominator 1
        let b = sep_bounds_from_output(c(1.0, -3.0), 1.0, c(1.0, -3.0), 2.0).unwrap();
        let expect = 2.0 * q_function(1.0).unwrap();
        assert!((b.m_r - expect).abs() < 1e-15);
        assert!((b.m_i - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_gain_bound_is_at_least_one() {
        let hx = c(0.4, -0.2);
        let b = sep_bounds_from_output(hx, 0.0, c(3.0, 1.0), 0.5).unwrap();
        let expect = 2.0 * q_function(-0.4 * 2f64.sqrt() / 0.5f64.sqrt()).unwrap();
        assert!((b.m_r - expect).abs() < 1e-15);
        assert!(b.m_r >= 1.0 && b.m_i >= 1.0);
    }

    #[test]
    fn bounds_match_direct_recomputation() {
        let mut rng = RngStream::new(31);
        let q = QamConstellation::new(2).unwrap();
        for _ in 0..50 {
            let n = 6;
            let h: Vec<Complex64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let x: Vec<Complex64> = (0..n).map(|_| c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))).collect();
            let s = q.points()[rng.random_range(0..16)];
            let d = rng.random_range(0.0..0.5);
            let sig = rng.random_range(0.01..1.0);
            let b = sep_bounds(&h, &x, d, s, sig).unwrap();
            // independent path: lifted real arithmetic and quadrature Q
            let (mut re, mut im) = (0.0, 0.0);
            for (hj, xj) in h.iter().zip(&x) {
                re += hj.re * xj.re - hj.im * xj.im;
                im += hj.re * xj.im + hj.im * xj.re;
            }
            let den = (sig / 2.0).sqrt();
            let mr = 2.0 * q_quadrature((d - (re - d * s.re).abs()) / den);
            let mi = 2.0 * q_quadrature((d - (im - d * s.im).abs()) / den);
            assert!((b.m_r - mr).abs() <= 1e-9 * mr.max(1e-300) + 1e-14);
            assert!((b.m_i - mi).abs() <= 1e-9 * mi.max(1e-300) + 1e-14);
            assert!(b.m_r > 0.0 && b.m_r <= 2.0);
        }
    }

    #[test]
    fn bounds_symmetric_under_negation() {
        let b1 = sep_bounds_from_output(c(0.3, -1.1), 0.4, c(1.0, -3.0), 0.2).unwrap();
        let b2 = sep_bounds_from_output(c(-0.3, 1.1), 0.4, c(-1.0, 3.0), 0.2).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn minimax_exact_shaping() {
        let hbar = DMatrix::<f64>::identity(2, 2);
        let sbar = DMatrix::from_column_slice(2, 1, &[1.0, -3.0]);
        let p = RealLiftedProblem::from_parts(hbar, sbar.clone(), 1.0).unwrap();
        let d = 0.25;
        let v = minimax_objective(&p, &(sbar * d), d).unwrap();
        assert_eq!(v.value, -d);
    }

    #[test]
    fn minimax_hand_example() {
        // identity channel with sbar = 0 makes the residual equal to xbar
        let p = RealLiftedProblem::from_parts(DMatrix::identity(2, 2), DMatrix::zeros(2, 1), 1.0).unwrap();
        let x = DMatrix::from_column_slice(2, 1, &[0.2, -0.7]);
        let v = minimax_objective(&p, &x, 0.1).unwrap();
        assert!((v.value - 0.6).abs() < 1e-15);
        assert_eq!((v.row, v.time), (1, 0));
    }

    #[test]
    fn minimax_ties_break_low() {
        let r = DMatrix::from_row_slice(2, 2, &[0.1, 0.5, 0.5, -0.5]);
        let v = minimax_of_residual(&r, 0.0);
        assert_eq!((v.row, v.time), (0, 1));
    }

    #[test]
    fn minimax_matches_complex_loop() {
        let mut rng = RngStream::new(5);
        let q = QamConstellation::new(2).unwrap();
        for _ in 0..30 {
            let h = gen_rayleigh_channel(3, 5, &mut rng).unwrap();
            let s = SymbolBlock::new(DMatrix::from_fn(3, 4, |_, _| q.points()[rng.random_range(0..16)]), &q).unwrap();
            let p = real_lift(&h, &s, 1.0).unwrap();
            let x = DMatrix::from_fn(5, 4, |_, _| c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)));
            let d = rng.random_range(0.0..1.0);
            let got = minimax_objective(&p, &lift_vector(&x), d).unwrap().value;
            // complex-domain loop over users, times and both dimensions
            let y = h.matrix() * &x;
            let mut worst = f64::NEG_INFINITY;
            for t in 0..4 {
                for i in 0..3 {
                    let e = y[(i, t)] - s.matrix()[(i, t)] * d;
                    worst = worst.max(e.re.abs()).max(e.im.abs());
                }
            }
            assert!((got - (worst - d)).abs() < 1e-12);
        }
    }

    #[test]
    fn minimax_convex_in_point_and_gain() {
        let mut rng = RngStream::new(8);
        let q = QamConstellation::new(2).unwrap();
        for _ in 0..200 {
            let h = gen_rayleigh_channel(2, 3, &mut rng).unwrap();
            let s = SymbolBlock::new(DMatrix::from_fn(2, 2, |_, _| q.points()[rng.random_range(0..16)]), &q).unwrap();
            let p = real_lift(&h, &s, 1.0).unwrap();
            let xa = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-0.4..0.4));
            let xb = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-0.4..0.4));
            let (da, db): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let th: f64 = rng.random();
            let mix = &xa * th + &xb * (1.0 - th);
            let lhs = minimax_objective(&p, &mix, th * da + (1.0 - th) * db).unwrap().value;
            let rhs = th * minimax_objective(&p, &xa, da).unwrap().value
                + (1.0 - th) * minimax_objective(&p, &xb, db).unwrap().value;
            assert!(lhs <= rhs + 1e-10);
        }
    }

    #[test]
    fn ordering_by_bound_matches_ordering_by_objective() {
        let mut rng = RngStream::new(12);
        let q = QamConstellation::new(2).unwrap();
        let sigma_n_sq = 0.05;
        for _ in 0..100 {
            let h = gen_rayleigh_channel(2, 4, &mut rng).unwrap();
            let s = SymbolBlock::new(DMatrix::from_fn(2, 3, |_, _| q.points()[rng.random_range(0..16)]), &q).unwrap();
            let p = real_lift(&h, &s, 1.0).unwrap();
            let d = 0.3;
            let worst_bound = |x: &DMatrix<Complex64>| {
                let y = h.matrix() * x;
                let mut w: f64 = 0.0;
                for i in 0..2 {
                    for t in 0..3 {
                        let b = sep_bounds_from_output(y[(i, t)], d, s.matrix()[(i, t)], sigma_n_sq).unwrap();
                        w = w.max(b.symbol_bound());
                    }
                }
                w
            };
            let xa = DMatrix::from_fn(4, 3, |_, _| c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)));
            let xb = DMatrix::from_fn(4, 3, |_, _| c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)));
            let oa = minimax_objective(&p, &lift_vector(&xa), d).unwrap().value;
            let ob = minimax_objective(&p, &lift_vector(&xb), d).unwrap().value;
            let (ba, bb) = (worst_bound(&xa), worst_bound(&xb));
            if (oa - ob).abs() > 1e-9 && (ba - bb).abs() > 1e-12 {
                assert_eq!(oa < ob, ba < bb);
            }
        }
    }

    #[test]
    fn chain_check_monte_carlo_interior_symbol() {
        // residual 0, d = 1: the bound 4Q(sqrt(2)/sigma_n) = 0.1 fixes sigma_n
        let q = QamConstellation::new(2).unwrap();
        let z = inverse_q(0.025);
        let sigma_n = std::f64::consts::SQRT_2 / z;
        let s = c(1.0, -1.0);
        let b = sep_bounds_from_output(s, 1.0, s, sigma_n * sigma_n).unwrap();
        assert!((b.symbol_bound() - 0.1).abs() < 1e-9);
        let noise = NoiseModel::new(sigma_n * sigma_n).unwrap();
        let errs = simulate_symbol_errors(s, 1.0, s, &q, &noise, 100_000, &mut RngStream::new(4)).unwrap();
        let rep = sep_chain_check(errs, 100_000, &b).unwrap();
        assert!(rep.passes, "{rep:?}");
    }

    #[test]
    fn chain_check_noiseless_limit() {
        let q = QamConstellation::new(2).unwrap();
        let s = c(3.0, 1.0);
        let noise = NoiseModel::new(1e-30).unwrap();
        let errs = simulate_symbol_errors(s, 1.0, s, &q, &noise, 1000, &mut RngStream::new(4)).unwrap();
        assert_eq!(errs, 0);
        let b = sep_bounds_from_output(s, 1.0, s, 1e-30).unwrap();
        assert!(sep_chain_check(errs, 1000, &b).unwrap().passes);
    }

    #[test]
    fn corner_symbol_errs_less_than_interior_bound() {
        let q = QamConstellation::new(2).unwrap();
        let sigma_n_sq = 0.5;
        let noise = NoiseModel::new(sigma_n_sq).unwrap();
        let corner = c(3.0, 3.0);
        let interior = c(1.0, 1.0);
        let b = sep_bounds_from_output(interior, 1.0, interior, sigma_n_sq).unwrap();
        let n = 100_000;
        let errs = simulate_symbol_errors(corner, 1.0, corner, &q, &noise, n, &mut RngStream::new(6)).unwrap();
        assert!((errs as f64 / n as f64) < b.symbol_bound());
    }

    #[test]
    fn chain_check_rejects_zero_trials() {
        let b = SepBound { m_r: 0.1, m_i: 0.1 };
        assert!(sep_chain_check(0, 0, &b).is_err());
    }

    fn inverse_q(p: f64) -> f64 {
        // Q^{-1}(p) by bisection on the implementation
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_function(mid).unwrap() > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
