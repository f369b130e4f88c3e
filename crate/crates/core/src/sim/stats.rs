use statrs::function::beta::inv_beta_reg;

/// Two-sided Clopper–Pearson interval for `successes` out of `trials` at
/// confidence `1 - alpha`.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (successes as f64, trials as f64);
    let low = if successes == 0 { 0.0 } else { inv_beta_reg(k, n - k + 1.0, alpha / 2.0) };
    let high = if successes >= trials { 1.0 } else { inv_beta_reg(k + 1.0, n - k, 1.0 - alpha / 2.0) };
    (low.clamp(0.0, 1.0), high.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_successes() {
        let (lo, hi) = clopper_pearson(0, 100, 0.05);
        assert_eq!(lo, 0.0);
        // 1 - 0.025^(1/100)
        assert!((hi - (1.0 - 0.025f64.powf(0.01))).abs() < 1e-10);
    }

    #[test]
    fn all_successes() {
        let (lo, hi) = clopper_pearson(50, 50, 0.05);
        assert_eq!(hi, 1.0);
        assert!((lo - 0.025f64.powf(1.0 / 50.0)).abs() < 1e-10);
    }

    #[test]
    fn interval_brackets_estimate() {
        for (k, n) in [(1, 10), (7, 1000), (500, 1000), (3, 1_000_000)] {
            let (lo, hi) = clopper_pearson(k, n, 0.05);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0, "{k}/{n}: [{lo}, {hi}]");
        }
    }

    #[test]
    fn textbook_value() {
        // 5 / 20 at 95%: [0.0866, 0.4910]
        let (lo, hi) = clopper_pearson(5, 20, 0.05);
        assert!((lo - 0.0866).abs() < 1e-4 && (hi - 0.4910).abs() < 1e-4, "[{lo}, {hi}]");
    }
}
