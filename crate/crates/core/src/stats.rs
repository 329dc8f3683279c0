//! Small statistics helpers shared by the sampler, predictors and harness.

use rand::Rng;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// `(mean, standard error of the mean)`.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    (mean(xs), (variance(xs) / xs.len() as f64).sqrt())
}

/// Normalized autocorrelation at `lag` using the biased covariance estimator,
/// which keeps the value in `[-1, 1]`.
pub fn autocorrelation(series: &[f64], lag: usize) -> Result<f64> {
    if series.len() <= lag {
        return Err(Error::InvalidArgument(format!("series of length {} too short for lag {lag}", series.len())));
    }
    let m = mean(series);
    let var: f64 = series.iter().map(|x| (x - m).powi(2)).sum();
    let scale = series.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if var <= (1e-14 * scale).powi(2) * series.len() as f64 {
        return Err(Error::InvalidArgument("constant series has no autocorrelation".into()));
    }
    let cov: f64 = series.iter().zip(&series[lag..]).map(|(a, b)| (a - m) * (b - m)).sum();
    Ok(cov / var)
}

/// Integrated autocorrelation time `1 + 2 Σ_k ρ(k)`, summed until the first
/// non-positive `ρ(k)`.
pub fn integrated_autocorrelation_time(series: &[f64]) -> Result<f64> {
    let mut tau = 1.0;
    for lag in 1..series.len() / 2 {
        let r = autocorrelation(series, lag)?;
        if r <= 0.0 {
            break;
        }
        tau += 2.0 * r;
    }
    Ok(tau)
}

/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("line fit needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("line fit needs distinct x values".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LineFit { slope, intercept, r_squared, slope_stderr })
}

/// Percentile bootstrap interval of the mean at confidence `level`.
pub fn bootstrap_ci<R: Rng + ?Sized>(samples: &[f64], resamples: usize, level: f64, rng: &mut R) -> Result<(f64, f64)> {
    bootstrap_ci_with(samples.len(), resamples, level, rng, |idx| {
        idx.iter().map(|&i| samples[i]).sum::<f64>() / idx.len() as f64
    })
}

/// Percentile bootstrap interval of an arbitrary statistic of `n` samples.
/// `statistic` receives the resampled indices.
pub fn bootstrap_ci_with<R: Rng + ?Sized>(
    n: usize,
    resamples: usize,
    level: f64,
    rng: &mut R,
    mut statistic: impl FnMut(&[usize]) -> f64,
) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least two samples".into()));
    }
    if resamples == 0 || !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidArgument("bootstrap needs resamples > 0 and level in (0, 1)".into()));
    }
    let mut idx = vec![0; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
            statistic(&idx)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let q = |p: f64| stats[((p * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    let tail = 0.5 * (1.0 - level);
    Ok((q(tail), q(1.0 - tail)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn autocorrelation_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!((autocorrelation(&xs, 0).unwrap() - 1.0).abs() < 1e-14);
        for lag in 1..5 {
            assert!(autocorrelation(&xs, lag).unwrap().abs() < 2.0 / (xs.len() as f64).sqrt());
        }
        assert!(autocorrelation(&[1.0; 10], 1).is_err());
        assert!(autocorrelation(&xs[..3], 3).is_err());
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bootstrap_constant_and_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (lo, hi) = bootstrap_ci(&[3.0; 20], 1000, 0.68, &mut rng).unwrap();
        assert_eq!((lo, hi), (3.0, 3.0));
        let xs: Vec<f64> = (0..400).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (lo, hi) = bootstrap_ci(&xs, 1000, 0.68, &mut rng).unwrap();
        let expect = 2.0 * (variance(&xs) / xs.len() as f64).sqrt();
        assert!(((hi - lo) / expect - 1.0).abs() < 0.2);
        assert!(bootstrap_ci(&[], 10, 0.68, &mut rng).is_err());
    }
}
