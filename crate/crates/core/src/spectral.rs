//! Koopman-operator geometry in L²(μ).
//!
//! All L² integrals are Monte Carlo averages over one shared sample set, so
//! every pairwise distance along an orbit `{U^n f}` uses the same points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::metrics::Observable;
use crate::pairwise::DistanceMatrix;
use crate::plan::RandomPlan;
use crate::systems::{Point, SystemHandle, Trajectory};

/// Minimum number of Monte Carlo points for an L² estimate.
pub const MIN_L2_SAMPLES: usize = 1000;

/// Orbit prefix used for the pairwise distance summary.
pub const SUMMARY_HORIZON: usize = 512;

/// `scale · U^power f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KoopmanTerm {
    pub observable: Observable,
    pub power: i64,
    pub scale: Complex64,
}

impl KoopmanTerm {
    pub fn new(observable: Observable, power: i64, scale: Complex64) -> Self {
        Self {
            observable,
            power,
            scale,
        }
    }

    pub fn eval(&self, system: &SystemHandle, x: &Point) -> Result<Complex64> {
        Ok(self.scale * koopman_value(system, &self.observable, self.power, x)?)
    }
}

impl From<Observable> for KoopmanTerm {
    fn from(observable: Observable) -> Self {
        Self::new(observable, 0, Complex64::new(1.0, 0.0))
    }
}

/// `(U^n f)(x) = f(T^n x)`; negative `n` uses the inverse map.
pub fn koopman_value(system: &SystemHandle, f: &Observable, n: i64, x: &Point) -> Result<Complex64> {
    f.check(system)?;
    f.eval(system, &system.step(x, n))
}

fn check_samples(count: usize) -> Result<()> {
    if count < MIN_L2_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "L² estimates need at least {MIN_L2_SAMPLES} samples, got {count}"
        )));
    }
    Ok(())
}

/// Monte Carlo `‖a - b‖_{L²(μ)}`.
pub fn l2_distance(
    system: &SystemHandle,
    a: &KoopmanTerm,
    b: &KoopmanTerm,
    sample_count: usize,
    plan: &RandomPlan,
) -> Result<f64> {
    check_samples(sample_count)?;
    a.observable.check(system)?;
    b.observable.check(system)?;
    let samples = system.sample_measure(sample_count, plan);
    let sq = exec::map_slice(&samples, |x| -> Result<f64> {
        Ok((a.eval(system, x)? - b.eval(system, x)?).norm_sqr())
    });
    let mut total = 0.0;
    for v in sq {
        total += v?;
    }
    Ok((total / sample_count as f64).sqrt())
}

/// `‖U f - λ f‖_{L²(μ)}`.
pub fn eigen_residual(
    system: &SystemHandle,
    f: &Observable,
    lambda: Complex64,
    sample_count: usize,
    plan: &RandomPlan,
) -> Result<f64> {
    if (lambda.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue candidate {lambda} is not on the unit circle"
        )));
    }
    let shifted = KoopmanTerm::new(f.clone(), 1, Complex64::new(1.0, 0.0));
    let scaled = KoopmanTerm::new(f.clone(), 0, lambda);
    l2_distance(system, &shifted, &scaled, sample_count, plan)
}

/// Streams the columns `(U^a f)(x_s)` for `a = 0, 1, ...` over a fixed sample set.
struct OrbitColumns<'a> {
    system: &'a SystemHandle,
    f: &'a Observable,
    trajectories: Vec<Trajectory<'a>>,
}

impl<'a> OrbitColumns<'a> {
    fn new(system: &'a SystemHandle, f: &'a Observable, samples: &[Point]) -> Self {
        Self {
            system,
            f,
            trajectories: samples.iter().map(|x| system.trajectory(x)).collect(),
        }
    }

    fn next_column(&mut self) -> Result<Vec<Complex64>> {
        let (system, f) = (self.system, self.f);
        exec::map_slice_mut(&mut self.trajectories, |t| {
            let p = t.next().expect("trajectories are infinite");
            f.eval(system, &p)
        })
        .into_iter()
        .collect()
    }
}

fn column_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    let total: f64 = u.iter().zip(v).map(|(a, b)| (a - b).norm_sqr()).sum();
    (total / u.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitGeometry {
    pub horizon: usize,
    pub radius: f64,
    pub covering_count: usize,
    /// Orbit indices chosen as ball centres, in order.
    pub centers: Vec<usize>,
    /// Summary over the first `summary_horizon` orbit elements (off-diagonal).
    pub summary: Option<DistanceSummary>,
    pub summary_horizon: usize,
    pub sample_count: usize,
    pub seed: u64,
}

impl OrbitGeometry {
    /// Covering count of the orbit prefix of length `h ≤ horizon`.
    pub fn count_at(&self, h: usize) -> usize {
        self.centers.iter().filter(|&&c| c < h).count()
    }
}

/// L² distance matrix of `{U^0 f, ..., U^{N-1} f}`.
pub fn orbit_distance_matrix(
    system: &SystemHandle,
    f: &Observable,
    horizon: usize,
    sample_count: usize,
    plan: &RandomPlan,
) -> Result<DistanceMatrix> {
    check_samples(sample_count)?;
    f.check(system)?;
    let samples = system.sample_measure(sample_count, plan);
    let mut cols = OrbitColumns::new(system, f, &samples);
    let columns = (0..horizon)
        .map(|_| cols.next_column())
        .collect::<Result<Vec<_>>>()?;
    let rows = exec::map_indexed(horizon, |a| {
        ((a + 1)..horizon)
            .map(|b| column_distance(&columns[a], &columns[b]))
            .collect::<Vec<_>>()
    });
    Ok(DistanceMatrix::from_condensed(horizon, rows.concat()))
}

/// First-fit cover of `{U^0 f, ..., U^{N-1} f}` by closed L² balls of radius
/// `r`: an orbit element becomes a new centre unless it lies within `r` of an
/// existing one.
pub fn orbit_covering_number(
    system: &SystemHandle,
    f: &Observable,
    horizon: usize,
    radius: f64,
    sample_count: usize,
    plan: &RandomPlan,
) -> Result<OrbitGeometry> {
    if horizon == 0 || !(radius > 0.0) {
        return Err(Error::InvalidParameter("need N ≥ 1 and r > 0".into()));
    }
    check_samples(sample_count)?;
    f.check(system)?;
    let samples = system.sample_measure(sample_count, plan);
    let mut cols = OrbitColumns::new(system, f, &samples);
    let summary_horizon = horizon.min(SUMMARY_HORIZON);
    let mut kept: Vec<Vec<Complex64>> = Vec::with_capacity(summary_horizon);
    let mut center_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut centers = Vec::new();
    for a in 0..horizon {
        let col = cols.next_column()?;
        let covered = center_cols.iter().any(|c| column_distance(c, &col) <= radius);
        if !covered {
            centers.push(a);
            center_cols.push(col.clone());
        }
        if a < summary_horizon {
            kept.push(col);
        }
    }
    let summary = (summary_horizon >= 2).then(|| {
        let mut d: Vec<f64> = exec::map_indexed(summary_horizon, |a| {
            ((a + 1)..summary_horizon)
                .map(|b| column_distance(&kept[a], &kept[b]))
                .collect::<Vec<_>>()
        })
        .concat();
        d.sort_by(f64::total_cmp);
        DistanceSummary {
            min: d[0],
            median: d[d.len() / 2],
            max: d[d.len() - 1],
        }
    });
    Ok(OrbitGeometry {
        horizon,
        radius,
        covering_count: centers.len(),
        centers,
        summary,
        summary_horizon,
        sample_count,
        seed: plan.master_seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlmostPeriodicity {
    Ap,
    NotAp,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApClassification {
    pub verdict: AlmostPeriodicity,
    pub horizons: Vec<usize>,
    pub counts: Vec<usize>,
    pub geometry: OrbitGeometry,
}

/// Decision rule on covering counts at increasing horizons: `Ap` when the
/// last two counts agree, `NotAp` when the last count ratio is at least half
/// the horizon ratio, otherwise `Inconclusive`.
pub fn classify_counts(horizons: &[usize], counts: &[usize]) -> AlmostPeriodicity {
    let k = counts.len();
    if k < 2 || horizons.len() != k {
        return AlmostPeriodicity::Inconclusive;
    }
    let (c0, c1) = (counts[k - 2] as f64, counts[k - 1] as f64);
    let (h0, h1) = (horizons[k - 2] as f64, horizons[k - 1] as f64);
    if counts[k - 1] == counts[k - 2] {
        AlmostPeriodicity::Ap
    } else if c1 / c0 >= 0.5 * (h1 / h0) {
        AlmostPeriodicity::NotAp
    } else {
        AlmostPeriodicity::Inconclusive
    }
}

/// Covering counts of the orbit prefixes at each horizon, then [`classify_counts`].
///
/// The verdict concerns this observable only and says nothing about the
/// spectrum of the whole system.
pub fn classify_almost_periodic(
    system: &SystemHandle,
    f: &Observable,
    horizons: &[usize],
    radius: f64,
    sample_count: usize,
    plan: &RandomPlan,
) -> Result<ApClassification> {
    if horizons.len() < 3 || horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "need at least 3 strictly increasing horizons".into(),
        ));
    }
    let geometry = orbit_covering_number(system, f, *horizons.last().unwrap(), radius, sample_count, plan)?;
    let counts: Vec<usize> = horizons.iter().map(|&h| geometry.count_at(h)).collect();
    Ok(ApClassification {
        verdict: classify_counts(horizons, &counts),
        horizons: horizons.to_vec(),
        counts,
        geometry,
    })
}
