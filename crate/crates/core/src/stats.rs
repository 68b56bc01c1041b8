//! Bootstrap intervals and frequency checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plan::RandomPlan;

/// Lower and upper percentiles reported by every bootstrap interval.
pub const CI_LOWER: f64 = 0.10;
pub const CI_UPPER: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    /// Sum of the values (counts when values are 0/1 indicators).
    Count,
}

impl Statistic {
    fn apply(&self, values: impl Iterator<Item = f64>) -> f64 {
        let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        match self {
            Statistic::Mean => sum / n.max(1) as f64,
            Statistic::Count => sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub resamples: usize,
    pub seed: u64,
}

/// Nearest-rank percentile of an already sorted slice.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Percentile interval `[p10, p90]` of `replicates`, widened to contain `point`.
pub fn percentile_interval(point: f64, mut replicates: Vec<f64>) -> (f64, f64) {
    replicates.sort_by(f64::total_cmp);
    let lo = percentile_sorted(&replicates, CI_LOWER).min(point);
    let hi = percentile_sorted(&replicates, CI_UPPER).max(point);
    (lo, hi)
}

/// Percentile bootstrap of `statistic`; resample `r` draws from stream `r`.
pub fn bootstrap(
    values: &[f64],
    statistic: Statistic,
    resamples: usize,
    plan: &RandomPlan,
) -> Result<BootstrapCI> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter("bootstrap needs at least 2 values".into()));
    }
    if resamples < 20 {
        return Err(Error::InvalidParameter("bootstrap needs at least 20 resamples".into()));
    }
    let point = statistic.apply(values.iter().copied());
    let m = values.len();
    let replicates = (0..resamples)
        .map(|r| {
            let mut rng = plan.rng(r as u64);
            statistic.apply((0..m).map(|_| values[rng.gen_range(0..m)]))
        })
        .collect();
    let (lo, hi) = percentile_interval(point, replicates);
    Ok(BootstrapCI {
        point,
        lo,
        hi,
        resamples,
        seed: plan.master_seed,
    })
}

/// True iff every cell count is within `tolerance_sigmas * sqrt(N p (1-p))` of `N p`.
pub fn frequency_check(observed: &[u64], expected: &[f64], tolerance_sigmas: f64) -> Result<bool> {
    if observed.len() != expected.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: expected.len(),
        });
    }
    let total_p: f64 = expected.iter().sum();
    if (total_p - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "expected probabilities sum to {total_p}"
        )));
    }
    let n = observed.iter().sum::<u64>() as f64;
    Ok(observed.iter().zip(expected).all(|(&o, &p)| {
        let sigma = (n * p * (1.0 - p)).sqrt();
        (o as f64 - n * p).abs() <= tolerance_sigmas * sigma
    }))
}
