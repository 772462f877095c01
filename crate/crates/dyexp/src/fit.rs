//! Log-log scaling fits: regret(T) ~ c * T^slope.

use anyhow::{bail, Result};
use dying_experts::rng::Substream;

const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Result of fitting ln(mean regret) against ln T.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    /// 95% interval for the slope from a paired seed bootstrap.
    pub ci: Option<(f64, f64)>,
    /// Set when a mean regret is non-positive, which a log-log fit cannot
    /// represent; the numeric fields are meaningless then.
    pub untestable: Option<String>,
}

fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn slope_of_means(ts: &[usize], means: &[f64]) -> Option<f64> {
    if means.iter().any(|&m| m <= 0.0) {
        return None;
    }
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(means)
        .map(|(&t, &m)| ((t as f64).ln(), m.ln()))
        .collect();
    Some(ols(&pts).0)
}

/// Fits the scaling exponent of per-seed regrets measured at several
/// horizons. `regrets[i]` holds one value per seed at horizon `ts[i]`;
/// seed j means the same seed in every vector, which lets the bootstrap
/// resample whole seeds.
pub fn fit_exponent(ts: &[usize], regrets: &[Vec<f64>]) -> Result<FitReport> {
    if ts.len() != regrets.len() {
        bail!("one regret vector per horizon required");
    }
    let distinct: std::collections::BTreeSet<_> = ts.iter().collect();
    if distinct.len() < 3 {
        bail!("need at least 3 distinct horizons, got {}", distinct.len());
    }
    let n_seeds = regrets[0].len();
    if n_seeds == 0 || regrets.iter().any(|r| r.len() != n_seeds) {
        bail!("every horizon needs the same positive number of seeds");
    }

    let means: Vec<f64> = regrets
        .iter()
        .map(|r| r.iter().sum::<f64>() / n_seeds as f64)
        .collect();
    if let Some(i) = means.iter().position(|&m| m <= 0.0) {
        return Ok(FitReport {
            slope: f64::NAN,
            intercept: f64::NAN,
            ci: None,
            untestable: Some(format!(
                "mean regret {} at T = {} is not positive",
                means[i], ts[i]
            )),
        });
    }
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(&means)
        .map(|(&t, &m)| ((t as f64).ln(), m.ln()))
        .collect();
    let (slope, intercept) = ols(&pts);

    // paired bootstrap: resample seeds, reuse the same index set at every
    // horizon; resamples with a non-positive mean are skipped
    let mut rng = Substream::new(0x5eed_b007, &[BOOTSTRAP_RESAMPLES as u64]);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let idx: Vec<usize> = (0..n_seeds).map(|_| rng.next_below(n_seeds)).collect();
        let res_means: Vec<f64> = regrets
            .iter()
            .map(|r| idx.iter().map(|&j| r[j]).sum::<f64>() / n_seeds as f64)
            .collect();
        if let Some(s) = slope_of_means(ts, &res_means) {
            slopes.push(s);
        }
    }
    let ci = if slopes.len() >= BOOTSTRAP_RESAMPLES / 2 {
        slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| slopes[((slopes.len() - 1) as f64 * p).round() as usize];
        Some((q(0.025), q(0.975)))
    } else {
        None
    };
    Ok(FitReport {
        slope,
        intercept,
        ci,
        untestable: None,
    })
}
