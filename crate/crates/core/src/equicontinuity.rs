//! Empirical μ-mean-equicontinuity partitions and mean expansivity.
//!
//! Clusters are built greedily: the lowest-index uncovered sample becomes a
//! centre and absorbs every uncovered sample within `ε/2`, so any two members
//! of a cluster are within `ε` of each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::cover::mass_target;
use crate::exec;
use crate::metrics::{default_tolerance, running_averages, running_max_average, LimitEstimate, Observable};
use crate::pairwise::{PairMetric, SignatureSet};
use crate::partition::Partition;
use crate::plan::RandomPlan;
use crate::systems::{Point, SystemHandle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiPartition {
    /// Sample indices of each cluster `A_1, ..., A_k`.
    pub clusters: Vec<Vec<usize>>,
    pub centers: Vec<usize>,
    pub eps: f64,
    pub covered_mass: f64,
    pub horizon: usize,
    /// Twice the largest centre distance of each cluster.
    pub diameter_bounds: Vec<f64>,
    pub metric: PairMetric,
    /// Fraction of centre/sample distances whose horizons `N/4, N/2, N` did not settle.
    pub nonconverged_fraction: f64,
    pub samples: Vec<Point>,
}

impl EquiPartition {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }
}

/// Why the greedy clustering stopped short.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiFailure {
    pub k_max: usize,
    pub clusters_built: usize,
    pub covered_mass: f64,
    pub eps: f64,
    pub horizon: usize,
    pub nonconverged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EquiSearch {
    Found(EquiPartition),
    /// More than `k_max` clusters were needed: evidence against mean
    /// equicontinuity at this `ε`, not a proof.
    Failed(EquiFailure),
}

impl EquiSearch {
    pub fn partition(&self) -> Option<&EquiPartition> {
        match self {
            EquiSearch::Found(p) => Some(p),
            EquiSearch::Failed(_) => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, EquiSearch::Found(_))
    }
}

/// Default cluster budget `floor(sqrt(m))`.
pub fn default_k_max(sample_count: usize) -> usize {
    ((sample_count as f64).sqrt().floor() as usize).max(1)
}

fn settle_horizons(n: usize) -> Option<[usize; 3]> {
    let h = [n / 4, n / 2, n];
    (h[0] >= 1 && h[0] < h[1]).then_some(h)
}

fn is_unsettled(gaps: &[f64], horizons: Option<[usize; 3]>) -> bool {
    match horizons {
        Some(h) => {
            let v = running_averages(gaps.iter().copied(), &h);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo > default_tolerance(h[2])
        }
        None => false,
    }
}

/// Greedy search for clusters of pairwise `metric`-distance `< ε` at horizon
/// `N` whose union carries empirical mass `> 1 - ε`.
pub fn find_equipartition(
    system: &SystemHandle,
    metric: &PairMetric,
    eps: f64,
    samples: &[Point],
    horizon: usize,
    k_max: Option<usize>,
) -> Result<EquiSearch> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} must be positive")));
    }
    let m = samples.len();
    if m == 0 {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let k_max = k_max.unwrap_or_else(|| default_k_max(m));
    let sigs = SignatureSet::build(system, metric, samples, horizon)?;
    let settle = settle_horizons(horizon);
    let mut covered = vec![false; m];
    let mut covered_count = 0usize;
    let mut clusters = Vec::new();
    let mut centers = Vec::new();
    let mut diameter_bounds = Vec::new();
    let (mut evaluated, mut unsettled) = (0usize, 0usize);
    let target = mass_target(eps);
    let mass = |c: usize| c as f64 / m as f64;

    while clusters.is_empty() || mass(covered_count) <= target {
        let Some(center) = covered.iter().position(|c| !c) else { break };
        if clusters.len() >= k_max {
            return Ok(EquiSearch::Failed(EquiFailure {
                k_max,
                clusters_built: clusters.len(),
                covered_mass: mass(covered_count),
                eps,
                horizon,
                nonconverged_fraction: unsettled as f64 / evaluated.max(1) as f64,
            }));
        }
        let open: Vec<usize> = (0..m).filter(|&j| !covered[j]).collect();
        let evals = exec::map_slice(&open, |&j| {
            let gaps = sigs.gaps(center, j);
            (sigs.distance(center, j), is_unsettled(&gaps, settle))
        });
        let mut members = Vec::new();
        let mut radius = 0.0f64;
        for (&j, &(d, bad)) in open.iter().zip(&evals) {
            evaluated += 1;
            unsettled += bad as usize;
            if d < eps / 2.0 {
                members.push(j);
                radius = radius.max(d);
            }
        }
        for &j in &members {
            covered[j] = true;
        }
        covered_count += members.len();
        centers.push(center);
        diameter_bounds.push(2.0 * radius);
        clusters.push(members);
    }
    Ok(EquiSearch::Found(EquiPartition {
        clusters,
        centers,
        eps,
        covered_mass: mass(covered_count),
        horizon,
        diameter_bounds,
        metric: metric.clone(),
        nonconverged_fraction: unsettled as f64 / evaluated.max(1) as f64,
        samples: samples.to_vec(),
    }))
}

/// [`find_equipartition`] on `sample_count` fresh draws from the plan.
pub fn find_equipartition_sampled(
    system: &SystemHandle,
    metric: &PairMetric,
    eps: f64,
    sample_count: usize,
    horizon: usize,
    k_max: Option<usize>,
    plan: &RandomPlan,
) -> Result<EquiSearch> {
    let samples = system.sample_measure(sample_count, plan);
    find_equipartition(system, metric, eps, &samples, horizon, k_max)
}

/// Clusters of pairwise `H_N^α < ε`.
pub fn hamming_equipartition(
    system: &SystemHandle,
    partition: &Partition,
    eps: f64,
    samples: &[Point],
    horizon: usize,
    k_max: Option<usize>,
) -> Result<EquiSearch> {
    let metric = PairMetric::Hamming {
        partition: partition.clone(),
    };
    find_equipartition(system, &metric, eps, samples, horizon, k_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    /// Limit estimate over the horizons must stay below `ε`.
    Limsup,
    /// Running maximum up to the largest horizon must stay below `ε`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mode: VerifyMode,
    pub max_pairwise: f64,
    /// Largest pairwise value inside each cluster.
    pub cluster_max: Vec<f64>,
    pub pairs_checked: usize,
    pub failing_pairs: usize,
    /// Pairs whose limit estimate was flagged as not converged (limsup mode).
    pub nonconverged_pairs: usize,
    pub pass: bool,
}

/// Re-evaluates every within-cluster pair of `ep`.
pub fn verify_equipartition(
    ep: &EquiPartition,
    system: &SystemHandle,
    horizons: &[usize],
    mode: VerifyMode,
) -> Result<VerifyReport> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(Error::InvalidParameter("horizons must be positive and increasing".into()));
    }
    if mode == VerifyMode::Limsup && horizons.len() < 3 {
        return Err(Error::InvalidParameter("limsup mode needs at least 3 horizons".into()));
    }
    if let Some(&bad) = ep.clusters.iter().flatten().find(|&&i| i >= ep.samples.len()) {
        return Err(Error::InvalidParameter(format!("cluster references sample {bad}")));
    }
    let last = *horizons.last().unwrap();
    let sigs = SignatureSet::build(system, &ep.metric, &ep.samples, last)?;
    let mut cluster_max = Vec::with_capacity(ep.clusters.len());
    let (mut pairs_checked, mut failing_pairs, mut nonconverged_pairs) = (0, 0, 0);
    for cluster in &ep.clusters {
        let pairs: Vec<(usize, usize)> = cluster
            .iter()
            .enumerate()
            .flat_map(|(a, &i)| cluster[a + 1..].iter().map(move |&j| (i, j)))
            .collect();
        let results = exec::map_slice(&pairs, |&(i, j)| -> Result<(f64, bool)> {
            let gaps = sigs.gaps(i, j);
            Ok(match mode {
                VerifyMode::Uniform => (running_max_average(&gaps), true),
                VerifyMode::Limsup => {
                    let values = running_averages(gaps, horizons);
                    let est = LimitEstimate::from_values(horizons, values, None)?;
                    (est.value, est.converged)
                }
            })
        });
        let mut worst = 0.0f64;
        for r in results {
            let (v, converged) = r?;
            pairs_checked += 1;
            failing_pairs += (v >= ep.eps) as usize;
            nonconverged_pairs += (!converged) as usize;
            worst = worst.max(v);
        }
        cluster_max.push(worst);
    }
    let max_pairwise = cluster_max.iter().copied().fold(0.0, f64::max);
    Ok(VerifyReport {
        mode,
        max_pairwise,
        cluster_max,
        pairs_checked,
        failing_pairs,
        nonconverged_pairs,
        pass: failing_pairs == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansivityEstimate {
    /// Fraction of pairs whose limit estimate exceeds `δ`.
    pub fraction: f64,
    pub nonconverged_fraction: f64,
    pub pairs: usize,
    pub delta: f64,
    pub horizon: usize,
}

/// Fraction of independent μ×μ pairs with `lim f̄_n(x, y) > δ`, using the
/// limit estimate over horizons `N/4, N/2, N`.
pub fn mean_expansivity_estimate(
    system: &SystemHandle,
    f: &Observable,
    delta: f64,
    pair_count: usize,
    horizon: usize,
    plan: &RandomPlan,
) -> Result<ExpansivityEstimate> {
    if pair_count < 100 {
        return Err(Error::InvalidParameter("at least 100 pairs are required".into()));
    }
    let Some(horizons) = settle_horizons(horizon) else {
        return Err(Error::InvalidParameter("horizon must be at least 4".into()));
    };
    f.check(system)?;
    let metric = PairMetric::Fbar {
        observable: f.clone(),
    };
    let points = system.sample_measure(2 * pair_count, &plan.derive("pairs"));
    let sigs = SignatureSet::build(system, &metric, &points, horizon)?;
    let outcomes = exec::map_indexed(pair_count, |p| -> Result<(bool, bool)> {
        let gaps = sigs.gaps(2 * p, 2 * p + 1);
        let est = LimitEstimate::from_values(&horizons, running_averages(gaps, &horizons), None)?;
        Ok((est.value > delta, est.converged))
    });
    let (mut above, mut unsettled) = (0usize, 0usize);
    for o in outcomes {
        let (a, c) = o?;
        above += a as usize;
        unsettled += (!c) as usize;
    }
    Ok(ExpansivityEstimate {
        fraction: above as f64 / pair_count as f64,
        nonconverged_fraction: unsettled as f64 / pair_count as f64,
        pairs: pair_count,
        delta,
        horizon,
    })
}
