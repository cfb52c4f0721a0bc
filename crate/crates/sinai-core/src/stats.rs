//! Running statistics and distribution-comparison helpers shared by the
//! experiment suites and their tests.
//!
//! Nothing in here is specific to random environments. The experiments
//! accumulate per-replicate summaries with [`OnlineStats`], quote Monte Carlo
//! uncertainty through the stderr helpers, and compare empirical samples with
//! the Kolmogorov-Smirnov and chi-square routines.

/// Streaming mean and variance (Welford's algorithm).
///
/// `merge` combines two accumulators (Chan's pairwise update), which is handy
/// for parallel reductions. Floating-point addition is not associative, so
/// merge order affects low-order bits; code that promises byte-identical
/// output across thread counts must fold partial results in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OnlineStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl OnlineStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut s = Self::new();
        for &x in xs {
            s.push(x);
        }
        s
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: OnlineStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let total = n1 + n2;
        let delta = other.mean - self.mean;
        self.mean += delta * n2 / total;
        self.m2 += other.m2 + delta * delta * n1 * n2 / total;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance (n-1 denominator). NaN below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean, `sqrt(variance / count)`.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Standard error of an empirical proportion: `sqrt(p (1 - p) / trials)`.
pub fn binomial_stderr(successes: u64, trials: u64) -> f64 {
    assert!(trials > 0, "binomial_stderr needs at least one trial");
    assert!(successes <= trials);
    let p = successes as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Standard error of a difference (or sum) of independent estimates.
pub fn combined_stderr(se_a: f64, se_b: f64) -> f64 {
    se_a.hypot(se_b)
}

/// Delta-method standard error of the ratio `num / den` for independent
/// estimates. Written as `|1/den| * hypot(se_num, r * se_den)` so a zero
/// numerator stays well defined.
pub fn ratio_stderr(num: f64, se_num: f64, den: f64, se_den: f64) -> f64 {
    let r = num / den;
    se_num.hypot(r * se_den) / den.abs()
}

/// Two-sample Kolmogorov-Smirnov statistic: the sup-distance between the two
/// empirical distribution functions.
pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(
        !xs.is_empty() && !ys.is_empty(),
        "ks_statistic needs non-empty samples"
    );
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let n = a.len() as f64;
    let m = b.len() as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        // Advance past every sample at the current threshold on both sides so
        // ties are counted jointly, then record the gap just right of it.
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Large-sample two-sided 1% critical value for the two-sample KS statistic,
/// `1.628 sqrt((n + m) / (n m))`.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    assert!(n > 0 && m > 0);
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Upper-tail p-value of a chi-square statistic: `Q(dof/2, stat/2)` where `Q`
/// is the regularized upper incomplete gamma function.
pub fn chi_square_pvalue(stat: f64, dof: f64) -> f64 {
    assert!(stat.is_finite() && dof > 0.0 && dof.is_finite());
    if stat <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(dof / 2.0, stat / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn sample(seed: u64, n: usize) -> Vec<f64> {
        let mut s = Stream::new(seed);
        (0..n).map(|_| s.next_f64() * 10.0 - 3.0).collect()
    }

    #[test]
    fn online_matches_two_pass() {
        let xs = sample(11, 1000);
        let st = OnlineStats::from_slice(&xs);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var =
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
        assert_eq!(st.count(), 1000);
        assert!((st.mean() - mean).abs() < 1e-12);
        assert!((st.variance() - var).abs() / var < 1e-12);
        assert!((st.stderr() - (var / 1000.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs = sample(17, 777);
        let full = OnlineStats::from_slice(&xs);
        for split in [1, 123, 400, 776] {
            let mut left = OnlineStats::from_slice(&xs[..split]);
            let right = OnlineStats::from_slice(&xs[split..]);
            left.merge(right);
            assert_eq!(left.count(), full.count());
            assert!((left.mean() - full.mean()).abs() < 1e-12);
            assert!((left.variance() - full.variance()).abs() < 1e-10);
        }
        let mut empty = OnlineStats::new();
        empty.merge(full);
        assert_eq!(empty, full);
    }

    #[test]
    fn degenerate_counts() {
        let mut s = OnlineStats::new();
        assert!(s.mean().is_nan());
        s.push(4.0);
        assert_eq!(s.mean(), 4.0);
        assert!(s.variance().is_nan());
    }

    #[test]
    fn binomial_and_ratio_closed_forms() {
        let se = binomial_stderr(25, 100);
        assert!((se - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-16);
        assert_eq!(binomial_stderr(0, 50), 0.0);
        let se_r = ratio_stderr(2.0, 0.1, 4.0, 0.2);
        let expect = 0.25 * (0.1f64.hypot(0.5 * 0.2));
        assert!((se_r - expect).abs() < 1e-15);
        assert_eq!(ratio_stderr(0.0, 0.3, 2.0, 0.5), 0.15);
        assert!((combined_stderr(3.0, 4.0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn ks_statistic_cases() {
        let a = sample(5, 300);
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let lo = vec![0.0, 1.0, 2.0];
        let hi = vec![10.0, 11.0];
        assert_eq!(ks_statistic(&lo, &hi), 1.0);
        // Hand-computed sup for a small mixed case: just past 1.5 the EDFs
        // are 1/3 and 1.
        let x = vec![1.0, 2.0, 3.0];
        let y = vec![1.5];
        assert!((ks_statistic(&x, &y) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ks_statistic(&x, &x.clone()), 0.0);
    }

    #[test]
    fn ks_critical_formula() {
        let c = ks_critical_1pct(10_000, 10_000);
        assert!((c - 1.628 * (2.0f64 / 10_000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chi_square_known_tails() {
        // dof 2 has survival exp(-x/2).
        assert!((chi_square_pvalue(4.0, 2.0) - (-2.0f64).exp()).abs() < 1e-12);
        // 5% point of chi-square with one degree of freedom.
        assert!((chi_square_pvalue(3.841, 1.0) - 0.05).abs() < 2e-4);
        // Reference table value for dof 10 at stat 10.
        assert!((chi_square_pvalue(10.0, 10.0) - 0.440_493).abs() < 1e-5);
        assert_eq!(chi_square_pvalue(0.0, 5.0), 1.0);
        // Monotone decreasing in the statistic.
        assert!(chi_square_pvalue(5.0, 3.0) > chi_square_pvalue(9.0, 3.0));
    }
}
