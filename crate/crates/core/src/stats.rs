//! Small numeric helpers shared across modules.

/// Quantile with linear interpolation between order statistics (the common
/// "type 7" definition). `data` need not be sorted.
pub fn quantile(data: &[f64], p: f64) -> f64 {
    assert!(!data.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p), "quantile level out of range");
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&sorted, p)
}

/// Same as [`quantile`] but assumes `sorted` is ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(data: &[f64]) -> f64 {
    data.iter().sum::<f64>() / data.len() as f64
}

/// Unbiased sample variance.
pub fn variance(data: &[f64]) -> f64 {
    let m = mean(data);
    data.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (data.len() as f64 - 1.0)
}

/// log(sum(exp(x_i))) with the usual max shift; -inf entries are skipped.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// ln(k!) via the log-gamma function.
pub fn ln_factorial(k: u64) -> f64 {
    libm::lgamma_r(k as f64 + 1.0).0
}

/// Poisson log-pmf at count `k` with mean `lambda` (`lambda > 0` required).
pub fn poisson_log_pmf(k: u64, lambda: f64) -> f64 {
    k as f64 * lambda.ln() - lambda - ln_factorial(k)
}

/// Deterministic per-index stream seed derived from a master seed
/// (splitmix64 finalizer), so parallel fan-out does not depend on thread
/// scheduling.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E3779B97F4A7C15)
        .wrapping_add(index.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let data = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&data, 0.0), 1.0);
        assert_eq!(quantile(&data, 1.0), 4.0);
        assert!((quantile(&data, 0.5) - 2.5).abs() < 1e-12);
        assert!((quantile(&data, 0.25) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs: Vec<f64> = vec![-1.0, 0.5, 2.0];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_ignores_neg_inf() {
        let xs = vec![f64::NEG_INFINITY, 0.0];
        assert!((log_sum_exp(&xs) - 0.0).abs() < 1e-12);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn ln_factorial_small_values() {
        assert!((ln_factorial(0) - 0.0).abs() < 1e-12);
        assert!((ln_factorial(1) - 0.0).abs() < 1e-12);
        assert!((ln_factorial(3) - 6.0f64.ln()).abs() < 1e-12);
        assert!((ln_factorial(10) - 3628800.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn poisson_log_pmf_known_values() {
        // P(0; 1) = e^-1
        assert!((poisson_log_pmf(0, 1.0) + 1.0).abs() < 1e-12);
        // P(3; 2) = 2^3 e^-2 / 6
        let expect = 3.0 * 2.0f64.ln() - 2.0 - 6.0f64.ln();
        assert!((poisson_log_pmf(3, 2.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn derive_seed_varies_by_index() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(7, 0));
    }
}
