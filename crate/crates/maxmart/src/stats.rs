//! Statistical verdicts: empirical CDF, one-sample Kolmogorov–Smirnov
//! uniformity test, and mean confidence intervals.
//!
//! Thresholds are the asymptotic Kolmogorov critical values `c(alpha)/sqrt(n)`
//! with `c(0.01) = 1.628` and `c(0.05) = 1.358`; every distributional test in
//! the crate runs with `n >= 1e4`, where the asymptotic form is adequate.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Outcome of a KS uniformity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsVerdict {
    pub n: usize,
    pub d_stat: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub pass: bool,
}

/// Asymptotic Kolmogorov critical coefficient for the supported levels.
pub fn ks_critical(alpha: f64) -> Result<f64> {
    if alpha == 0.01 {
        Ok(1.628)
    } else if alpha == 0.05 {
        Ok(1.358)
    } else {
        Err(Error::Parameter(format!("unsupported KS significance level {alpha}")))
    }
}

/// Empirical CDF: sorted samples paired with ranks over n.
pub fn ecdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::Parameter("ecdf requires a nonempty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Parameter("ecdf sample contains NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    Ok(sorted.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect())
}

/// One-sample KS test of standard uniformity,
/// `d = sup_i max(i/n - u_(i), u_(i) - (i-1)/n)`.
pub fn ks_uniform(samples: &[f64], alpha: f64) -> Result<KsVerdict> {
    ks_uniform_with_bias(samples, alpha, 0.0)
}

/// Same test with the pass threshold relaxed by an additive `bias` term
/// accounting for certified one-sided truncation bias in the sampler.
pub fn ks_uniform_with_bias(samples: &[f64], alpha: f64, bias: f64) -> Result<KsVerdict> {
    if samples.is_empty() {
        return Err(Error::Parameter("ks_uniform requires a nonempty sample".into()));
    }
    if samples.iter().any(|u| !(0.0..=1.0).contains(u)) {
        return Err(Error::Parameter("ks_uniform samples must lie in [0, 1]".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let nf = n as f64;
    let mut d_stat: f64 = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        let upper = (i + 1) as f64 / nf - u;
        let lower = u - i as f64 / nf;
        d_stat = d_stat.max(upper).max(lower);
    }
    let threshold = ks_critical(alpha)? / nf.sqrt() + bias;
    Ok(KsVerdict { n, d_stat, threshold, alpha, pass: d_stat < threshold })
}

/// Sample mean with a `k_sigma * sd / sqrt(n)` halfwidth.
pub fn mean_ci(samples: &[f64], k_sigma: f64) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Parameter("mean_ci requires at least two samples".into()));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    Ok((mean, k_sigma * (var / nf).sqrt()))
}
