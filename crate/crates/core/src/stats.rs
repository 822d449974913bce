//! Small statistical toolkit: summaries, batch means, two-sample tests,
//! binomial intervals and a weighted trend test.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (0 for fewer than two values).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean for independent values.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    2.0 * (1.0 - Normal::standard().cdf(z.abs()))
}

/// Mean with a standard error from batch means, plus the implied
/// integrated autocorrelation time and effective sample size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchMeans {
    pub mean: f64,
    pub se: f64,
    pub iat: f64,
    pub ess: f64,
}

/// Batch-means analysis with `batches` equal batches (trailing values that
/// do not fill a batch are dropped from the variance estimate only).
pub fn batch_means(xs: &[f64], batches: usize) -> BatchMeans {
    let n = xs.len();
    let m = mean(xs);
    let batches = batches.max(2);
    let b = n / batches;
    if b < 1 || n < 4 {
        return BatchMeans {
            mean: m,
            se: std_error(xs),
            iat: 1.0,
            ess: n as f64,
        };
    }
    let bm: Vec<f64> = xs.chunks_exact(b).take(batches).map(mean).collect();
    let var_b = variance(&bm);
    let var_x = variance(xs);
    let se = (var_b / bm.len() as f64).sqrt();
    let iat = if var_x > 0.0 {
        (b as f64 * var_b / var_x).max(1.0)
    } else {
        1.0
    };
    BatchMeans {
        mean: m,
        se,
        iat,
        ess: n as f64 / iat,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov distribution tail `P(K > λ)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction). Conservative for discrete data.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_tail(lambda),
    })
}

/// χ² test of homogeneity for two samples of integer-valued statistics.
/// Adjacent values are pooled until every pooled cell has expected count
/// at least 5 in both samples.
pub fn chi2_homogeneity(a: &[i64], b: &[i64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    let lo = *a.iter().chain(b).min().expect("nonempty");
    let hi = *a.iter().chain(b).max().expect("nonempty");
    let width = (hi - lo + 1) as usize;
    let mut ca = vec![0f64; width];
    let mut cb = vec![0f64; width];
    for &v in a {
        ca[(v - lo) as usize] += 1.0;
    }
    for &v in b {
        cb[(v - lo) as usize] += 1.0;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;
    let min_expected = |ka: f64, kb: f64| {
        let t = ka + kb;
        (t * na / total).min(t * nb / total)
    };
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut acc_a, mut acc_b) = (0.0, 0.0);
    for k in 0..width {
        acc_a += ca[k];
        acc_b += cb[k];
        if min_expected(acc_a, acc_b) >= 5.0 {
            cells.push((acc_a, acc_b));
            acc_a = 0.0;
            acc_b = 0.0;
        }
    }
    if acc_a + acc_b > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += acc_a;
                last.1 += acc_b;
            }
            None => cells.push((acc_a, acc_b)),
        }
    }
    if cells.len() < 2 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
        });
    }
    let mut stat = 0.0;
    for &(ka, kb) in &cells {
        let t = ka + kb;
        let ea = t * na / total;
        let eb = t * nb / total;
        stat += (ka - ea).powi(2) / ea + (kb - eb).powi(2) / eb;
    }
    let dof = (cells.len() - 1) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(TestResult {
        statistic: stat,
        p_value: 1.0 - dist.cdf(stat),
    })
}

/// χ² goodness of fit of observed counts against expected counts.
pub fn chi2_goodness_of_fit(observed: &[f64], expected: &[f64]) -> Result<TestResult> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::InvalidParameter("need at least two matching cells".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(TestResult {
        statistic: stat,
        p_value: 1.0 - dist.cdf(stat),
    })
}

/// Per-test level for `m` simultaneous tests at family level `alpha`.
pub fn bonferroni(alpha: f64, m: usize) -> f64 {
    alpha / m.max(1) as f64
}

/// Wilson score interval for a binomial proportion at two-sided level
/// `1 − alpha`.
pub fn wilson_interval(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = normal_quantile(1.0 - alpha / 2.0);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Weighted least-squares slope of `y` on `x` with weights `1/se²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub slope: f64,
    pub se: f64,
    /// One-sided p-value for "slope < 0".
    pub p_decreasing: f64,
}

pub fn weighted_trend(x: &[f64], y: &[f64], se: &[f64]) -> Result<Trend> {
    if x.len() != y.len() || x.len() != se.len() || x.len() < 3 {
        return Err(Error::InsufficientSamples {
            need: 3,
            got: x.len().min(y.len()).min(se.len()),
        });
    }
    // Floor the weights so an exact-zero SE does not dominate.
    let floor = se.iter().cloned().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1.0 };
    let w: Vec<f64> = se.iter().map(|s| 1.0 / s.max(floor).powi(2)).collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = w
        .iter()
        .zip(x.iter().zip(y))
        .map(|(w, (x, y))| w * (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let se = (1.0 / sxx).sqrt();
    Ok(Trend {
        slope,
        se,
        p_decreasing: Normal::standard().cdf(slope / se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    #[test]
    fn summaries() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959964).abs() < 1e-6);
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        // P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.0098
        assert!((kolmogorov_tail(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_tail(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn ks_same_and_shifted() {
        let mut rng = stream(1, Purpose::Misc, 0);
        let a: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() + 0.1).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.001);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
    }

    #[test]
    fn chi2_detects_difference_and_pools() {
        let a: Vec<i64> = (0..1000).map(|i| i % 4).collect();
        let b: Vec<i64> = (0..1000).map(|i| (i + 1) % 4).collect();
        let r = chi2_homogeneity(&a, &b).unwrap();
        assert!(r.statistic.abs() < 1e-12 && (r.p_value - 1.0).abs() < 1e-12);
        let c: Vec<i64> = (0..1000).map(|i| if i % 3 == 0 { 0 } else { 1 }).collect();
        let d: Vec<i64> = (0..1000).map(|i| if i % 2 == 0 { 0 } else { 1 }).collect();
        assert!(chi2_homogeneity(&c, &d).unwrap().p_value < 1e-6);
        // a lone outlier value is pooled rather than creating a sparse cell
        let mut e = a.clone();
        e.push(40);
        assert!(chi2_homogeneity(&a, &e).unwrap().p_value > 0.5);
    }

    #[test]
    fn wilson_reference() {
        let (lo, hi) = wilson_interval(50, 100, 0.05);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        let (lo, _) = wilson_interval(0, 30, 0.05);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn batch_means_of_ar1() {
        // AR(1) with ρ = 0.9 has integrated autocorrelation time (1+ρ)/(1−ρ) = 19
        let mut rng = stream(2, Purpose::Misc, 0);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..400_000)
            .map(|_| {
                let e: f64 = rng.random::<f64>() - 0.5;
                x = 0.9 * x + e;
                x
            })
            .collect();
        let bm = batch_means(&xs, 40);
        assert!((bm.iat - 19.0).abs() < 5.0, "{bm:?}");
    }

    #[test]
    fn trend_slope_sign() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [4.0, 3.0, 2.0, 1.0];
        let t = weighted_trend(&x, &y, &[0.1; 4]).unwrap();
        assert!((t.slope + 1.0).abs() < 1e-12);
        assert!(t.p_decreasing < 1e-6);
    }
}
