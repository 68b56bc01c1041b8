//! Covering-number complexities `K(n, α, ε)`, `K(n, ε, f̄)`, `K(n, ε, f̂)`.
//!
//! The measure-theoretic minimum over arbitrary finite centre sets is
//! estimated by a greedy weighted cover whose centres are the samples
//! themselves. [`exact_cover_number_small`] solves tiny word distributions
//! exactly and serves as the reference for the greedy estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::hamming_avg;
use crate::pairwise::{signature, signature_distance, BallSets, BitSet, DistanceMatrix, PairMetric, SignatureSet};
use crate::partition::NameWord;
use crate::plan::RandomPlan;
use crate::stats::percentile_interval;
use crate::systems::{Point, SystemHandle};

/// Number of bootstrap resamples per curve point.
pub const DEFAULT_RESAMPLES: usize = 20;

/// Covered mass must exceed `1 - ε` by more than this to count, so sums that
/// equal the threshold in exact arithmetic stay uncovered after rounding.
pub const MASS_SLACK: f64 = 1e-12;

/// The mass a cover must strictly exceed.
pub fn mass_target(eps: f64) -> f64 {
    1.0 - eps + MASS_SLACK
}

/// Largest word space the exact solver accepts.
pub const MAX_EXACT_WORDS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    /// Indices into the sample list.
    pub centers: Vec<usize>,
    pub eps: f64,
    pub covered_mass: f64,
    pub sample_count: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl CoverResult {
    pub fn count(&self) -> usize {
        self.centers.len()
    }
}

/// `y ∈ B(x, ε)`, i.e. the orbit distance is strictly below `ε`.
pub fn ball_member(
    system: &SystemHandle,
    metric: &PairMetric,
    center: &Point,
    candidate: &Point,
    n: usize,
    eps: f64,
) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {eps} must be positive")));
    }
    let a = signature(system, metric, center, n)?;
    let b = signature(system, metric, candidate, n)?;
    Ok(signature_distance(system, &a, &b, n, metric) < eps)
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    gain: f64,
    idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // larger gain first, then smaller index
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Outcome of the greedy selection.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyCover {
    pub centers: Vec<usize>,
    pub covered_mass: f64,
    /// True when the mass target was exceeded within the budget.
    pub reached: bool,
}

fn uncovered_gain(ball: &BitSet, uncovered: &BitSet, weights: Option<&[f64]>) -> f64 {
    match weights {
        None => ball.intersection_count(uncovered) as f64,
        Some(w) => {
            let mut acc = 0.0;
            for j in ball.iter() {
                if uncovered.contains(j) {
                    acc += w[j];
                }
            }
            acc
        }
    }
}

/// Greedy weighted partial cover: repeatedly takes the ball with the
/// largest uncovered mass (ties to the lowest index) until the covered mass
/// strictly exceeds `1 - eps` or `max_centers` balls are used.
///
/// `weights = None` means uniform mass `1/m`. Uses lazy gain updates, which
/// select exactly the same sequence as the eager rule since gains only shrink.
pub fn greedy_cover(balls: &BallSets, weights: Option<&[f64]>, eps: f64, max_centers: usize) -> GreedyCover {
    let m = balls.len();
    let target = mass_target(eps);
    let mut uncovered = BitSet::full(m);
    let mut covered_units = 0.0f64;
    let mass = |units: f64| match weights {
        None => units / m as f64,
        Some(_) => units,
    };
    let mut heap: BinaryHeap<HeapEntry> = (0..m)
        .map(|idx| HeapEntry {
            gain: uncovered_gain(&balls.balls[idx], &uncovered, weights),
            idx,
        })
        .collect();
    let mut centers = Vec::new();
    let reached = |centers: &Vec<usize>, units: f64| !centers.is_empty() && mass(units) > target;
    while !reached(&centers, covered_units) {
        if centers.len() >= max_centers {
            break;
        }
        let Some(top) = heap.pop() else { break };
        let gain = uncovered_gain(&balls.balls[top.idx], &uncovered, weights);
        let fresh = HeapEntry { gain, idx: top.idx };
        if heap.peek().is_some_and(|next| fresh < *next) {
            heap.push(fresh);
            continue;
        }
        centers.push(top.idx);
        covered_units += gain;
        uncovered.subtract(&balls.balls[top.idx]);
    }
    let covered_mass = mass(covered_units);
    GreedyCover {
        reached: reached(&centers, covered_units),
        centers,
        covered_mass,
    }
}

/// Options of [`estimate_cover_number`].
#[derive(Debug, Clone, Copy, Default)]
pub struct CoverOptions {
    /// Defaults to the sample count.
    pub max_centers: Option<usize>,
    /// Seed recorded in the result.
    pub seed: u64,
}

fn check_weights(weights: Option<&[f64]>, m: usize) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != m {
            return Err(Error::LengthMismatch {
                left: w.len(),
                right: m,
            });
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 || w.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
    }
    Ok(())
}

/// Greedy cover of a precomputed distance matrix.
pub fn cover_from_matrix(
    dm: &DistanceMatrix,
    weights: Option<&[f64]>,
    horizon: usize,
    eps: f64,
    options: CoverOptions,
) -> Result<CoverResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {eps} must be positive")));
    }
    let m = dm.len();
    if m == 0 {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    check_weights(weights, m)?;
    let max_centers = options.max_centers.unwrap_or(m);
    let balls = BallSets::from_matrix(dm, eps);
    let g = greedy_cover(&balls, weights, eps, max_centers);
    if !g.reached {
        return Err(Error::BudgetExhausted {
            max_centers,
            covered_mass: g.covered_mass,
        });
    }
    Ok(CoverResult {
        centers: g.centers,
        eps,
        covered_mass: g.covered_mass,
        sample_count: m,
        horizon,
        seed: options.seed,
    })
}

/// Empirical `K(n, ·, ε)`: greedy cover of sample-centred balls until the
/// (weighted) sample mass exceeds `1 - ε`.
pub fn estimate_cover_number(
    system: &SystemHandle,
    samples: &[Point],
    weights: Option<&[f64]>,
    n: usize,
    eps: f64,
    metric: &PairMetric,
    options: CoverOptions,
) -> Result<CoverResult> {
    let sigs = SignatureSet::build(system, metric, samples, n)?;
    cover_from_matrix(&sigs.distance_matrix(), weights, n, eps, options)
}

/// Greedy estimate on an explicit word distribution (centres among the words).
pub fn greedy_cover_words(word_distribution: &[(Vec<u32>, f64)], eps: f64) -> Result<CoverResult> {
    let words: Vec<NameWord> = word_distribution
        .iter()
        .map(|(w, _)| NameWord::new(w.clone(), 0))
        .collect();
    let n = words.first().map_or(0, NameWord::len);
    if let Some(w) = words.iter().find(|w| w.len() != n) {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: n,
        });
    }
    let dm = DistanceMatrix::from_fn(words.len(), |i, j| {
        hamming_avg(&words[i], &words[j]).expect("equal lengths checked")
    });
    let weights: Vec<f64> = word_distribution.iter().map(|(_, p)| *p).collect();
    cover_from_matrix(&dm, Some(&weights), n, eps, CoverOptions::default())
}

/// True minimum number of Hamming balls (centres among all words over the
/// alphabet) whose union carries mass strictly above `1 - ε`.
///
/// Exhaustive branch-and-bound; the word space `alphabet^n` and the support
/// are both limited to [`MAX_EXACT_WORDS`].
pub fn exact_cover_number_small(word_distribution: &[(Vec<u32>, f64)], eps: f64) -> Result<usize> {
    if word_distribution.is_empty() {
        return Err(Error::InvalidParameter("empty word distribution".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {eps} must be positive")));
    }
    let total: f64 = word_distribution.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("masses sum to {total}")));
    }
    let n = word_distribution[0].0.len();
    if let Some((w, _)) = word_distribution.iter().find(|(w, _)| w.len() != n) {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: n,
        });
    }
    if word_distribution.len() == 1 {
        return Ok(1);
    }
    let alphabet = word_distribution
        .iter()
        .flat_map(|(w, _)| w.iter().copied())
        .max()
        .unwrap_or(0) as u64
        + 1;
    let space = (alphabet as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if space > MAX_EXACT_WORDS as u128 || word_distribution.len() > MAX_EXACT_WORDS {
        return Err(Error::InstanceTooLarge(format!(
            "{alphabet}^{n} candidate centres exceed {MAX_EXACT_WORDS}"
        )));
    }
    let support = word_distribution.len();
    let masses: Vec<f64> = word_distribution.iter().map(|(_, p)| *p).collect();

    // one ball per candidate centre, duplicates removed
    let mut balls: Vec<BitSet> = Vec::new();
    let mut center = vec![0u32; n];
    for code in 0..space as u64 {
        let mut rest = code;
        for slot in center.iter_mut().rev() {
            *slot = (rest % alphabet) as u32;
            rest /= alphabet;
        }
        let mut ball = BitSet::new(support);
        for (j, (w, _)) in word_distribution.iter().enumerate() {
            let diff = w.iter().zip(&center).filter(|(a, b)| a != b).count();
            if (diff as f64 / n.max(1) as f64) < eps {
                ball.insert(j);
            }
        }
        if ball.count() > 0 {
            balls.push(ball);
        }
    }
    balls.sort_by(|a, b| {
        let ma: f64 = a.iter().map(|j| masses[j]).sum();
        let mb: f64 = b.iter().map(|j| masses[j]).sum();
        mb.total_cmp(&ma)
    });
    balls.dedup();

    let target = mass_target(eps);
    for k in 1..=support {
        let mut search = ExactSearch {
            balls: &balls,
            masses: &masses,
            target,
        };
        if search.feasible(k, 0, &mut BitSet::new(support), 0.0) {
            return Ok(k);
        }
    }
    Ok(support)
}

struct ExactSearch<'a> {
    balls: &'a [BitSet],
    masses: &'a [f64],
    target: f64,
}

impl ExactSearch<'_> {
    fn gain(&self, ball: &BitSet, covered: &BitSet) -> f64 {
        ball.iter().filter(|&j| !covered.contains(j)).map(|j| self.masses[j]).sum()
    }

    /// Can `left` more balls (indices ≥ `from`) push the covered mass above target?
    fn feasible(&mut self, left: usize, from: usize, covered: &mut BitSet, mass: f64) -> bool {
        if mass > self.target {
            return true;
        }
        if left == 0 || from >= self.balls.len() {
            return false;
        }
        let mut gains: Vec<(f64, usize)> = (from..self.balls.len())
            .map(|i| (self.gain(&self.balls[i], covered), i))
            .filter(|(g, _)| *g > 0.0)
            .collect();
        // marginal gains are submodular, so the top `left` gains bound the optimum
        let mut sorted: Vec<f64> = gains.iter().map(|(g, _)| *g).collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let bound: f64 = sorted.iter().take(left).sum();
        if mass + bound <= self.target {
            return false;
        }
        gains.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (g, i) in gains {
            if mass + g * left as f64 <= self.target {
                // remaining candidates have smaller gains
                break;
            }
            let before = covered.clone();
            for j in self.balls[i].iter() {
                covered.insert(j);
            }
            let ok = self.feasible(left - 1, i + 1, covered, mass + g);
            *covered = before;
            if ok {
                return true;
            }
        }
        false
    }
}

/// One horizon of a complexity curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub k_est: usize,
    pub k_lo: f64,
    pub k_hi: f64,
    pub covered_mass: f64,
    /// The greedy cover could not reach the mass target within the budget;
    /// `k_est` is then `budget + 1`, a censored value.
    pub budget_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityCurve {
    pub points: Vec<CurvePoint>,
    pub eps: f64,
    pub metric: PairMetric,
    pub samples: usize,
    pub seed: u64,
    pub resamples: usize,
    pub budget: usize,
}

/// Knobs of [`complexity_curve`].
#[derive(Debug, Clone, Copy)]
pub struct CurveOptions {
    pub resamples: usize,
    /// Centre budget per horizon; defaults to `floor((1 - ε) m)`, the count at
    /// which a cover by singleton balls would still fall short.
    pub budget: Option<usize>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            resamples: DEFAULT_RESAMPLES,
            budget: None,
        }
    }
}

fn censored_count(g: &GreedyCover, budget: usize) -> (usize, bool) {
    if g.reached {
        (g.centers.len(), false)
    } else {
        (budget + 1, true)
    }
}

/// Sweeps the cover estimate over increasing horizons with bootstrap
/// intervals (10th/90th percentiles over resampled sample sets).
pub fn complexity_curve(
    system: &SystemHandle,
    metric: &PairMetric,
    horizons: &[usize],
    eps: f64,
    sample_count: usize,
    plan: &RandomPlan,
    options: CurveOptions,
) -> Result<ComplexityCurve> {
    let samples = system.sample_measure(sample_count, &plan.derive("samples"));
    complexity_curve_on(system, metric, horizons, eps, &samples, plan, options)
}

/// [`complexity_curve`] over a caller-provided sample set.
pub fn complexity_curve_on(
    system: &SystemHandle,
    metric: &PairMetric,
    horizons: &[usize],
    eps: f64,
    samples: &[Point],
    plan: &RandomPlan,
    options: CurveOptions,
) -> Result<ComplexityCurve> {
    if horizons.len() < 3 || horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "a complexity curve needs at least 3 strictly increasing horizons".into(),
        ));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {eps} must be positive")));
    }
    if options.resamples < 20 {
        return Err(Error::InvalidParameter("at least 20 bootstrap resamples".into()));
    }
    let m = samples.len();
    if m == 0 {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let budget = options
        .budget
        .unwrap_or(((1.0 - eps).max(0.0) * m as f64).floor() as usize)
        .max(1);
    let boot_plan = plan.derive("bootstrap");
    let mut points = Vec::with_capacity(horizons.len());
    for &n in horizons {
        let dm = SignatureSet::build(system, metric, samples, n)?.distance_matrix();
        let g = greedy_cover(&BallSets::from_matrix(&dm, eps), None, eps, budget);
        let (k_est, budget_hit) = censored_count(&g, budget);
        let horizon_plan = boot_plan.derive(&n.to_string());
        let replicates: Vec<f64> = (0..options.resamples)
            .map(|r| {
                let mut rng = horizon_plan.rng(r as u64);
                let idx: Vec<usize> = (0..m).map(|_| rng.gen_range(0..m)).collect();
                let gr = greedy_cover(&BallSets::resampled(&dm, &idx, eps), None, eps, budget);
                censored_count(&gr, budget).0 as f64
            })
            .collect();
        let (k_lo, k_hi) = percentile_interval(k_est as f64, replicates);
        points.push(CurvePoint {
            n,
            k_est,
            k_lo,
            k_hi,
            covered_mass: g.covered_mass,
            budget_hit,
        });
    }
    Ok(ComplexityCurve {
        points,
        eps,
        metric: metric.clone(),
        samples: m,
        seed: plan.master_seed,
        resamples: options.resamples,
        budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundedness {
    Bounded,
    Growing,
    Inconclusive,
}

/// Decision rule on a sequence of estimates.
///
/// * bounded: the last three estimates lie within +1 of each other and none
///   of them is censored by the budget;
/// * growing: every step strictly increases (a censored point may repeat the
///   previous censored value) and last/first ≥ 2;
/// * inconclusive otherwise.
pub fn classify_estimates(estimates: &[usize], censored: &[bool]) -> Boundedness {
    let k = estimates.len();
    if k < 3 {
        return Boundedness::Inconclusive;
    }
    let tail = &estimates[k - 3..];
    let (lo, hi) = (tail.iter().min().unwrap(), tail.iter().max().unwrap());
    let tail_censored = censored.get(k - 3..).is_some_and(|c| c.iter().any(|&b| b));
    if hi - lo <= 1 && !tail_censored {
        return Boundedness::Bounded;
    }
    let monotone = (1..k).all(|i| {
        estimates[i] > estimates[i - 1]
            || (censored.get(i).copied().unwrap_or(false) && estimates[i] >= estimates[i - 1])
    });
    if monotone && estimates[k - 1] as f64 >= 2.0 * estimates[0] as f64 {
        Boundedness::Growing
    } else {
        Boundedness::Inconclusive
    }
}

pub fn classify_boundedness(curve: &ComplexityCurve) -> Boundedness {
    let est: Vec<usize> = curve.points.iter().map(|p| p.k_est).collect();
    let cens: Vec<bool> = curve.points.iter().map(|p| p.budget_hit).collect();
    classify_estimates(&est, &cens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;
    use crate::systems::{make_system, PointSpec, SystemSpec};

    fn uniform_binary_words(n: usize) -> Vec<(Vec<u32>, f64)> {
        let total = 1usize << n;
        (0..total)
            .map(|code| {
                let w = (0..n).map(|i| ((code >> (n - 1 - i)) & 1) as u32).collect();
                (w, 1.0 / total as f64)
            })
            .collect()
    }

    #[test]
    fn strict_ball_membership() {
        let s = make_system(&SystemSpec::BernoulliShift {
            p: 0.5,
            alphabet_size: 2,
        })
        .unwrap();
        let metric = PairMetric::Hamming {
            partition: Partition::cylinder(vec![0], 2).unwrap(),
        };
        let x = s.point_from_spec(&PointSpec::Symbols { symbols: vec![0, 1, 1, 0] }).unwrap();
        let y = s.point_from_spec(&PointSpec::Symbols { symbols: vec![0, 1, 1, 1] }).unwrap();
        assert!(ball_member(&s, &metric, &x, &x, 4, 1e-9).unwrap());
        assert!(!ball_member(&s, &metric, &x, &y, 4, 0.25).unwrap());
        assert!(ball_member(&s, &metric, &x, &y, 4, 0.26).unwrap());
        assert!(ball_member(&s, &metric, &x, &y, 4, 0.0).is_err());
    }

    #[test]
    fn exact_small_examples() {
        let words = uniform_binary_words(4);
        assert_eq!(exact_cover_number_small(&words, 0.25).unwrap(), 13);
        assert_eq!(exact_cover_number_small(&words, 0.3).unwrap(), 3);
        assert_eq!(exact_cover_number_small(&[(vec![1, 0, 1], 1.0)], 0.1).unwrap(), 1);
    }

    #[test]
    fn exact_rejects_large_and_bad_mass() {
        let words = vec![(vec![0u32; 17], 0.5), (vec![1u32; 17], 0.5)];
        assert!(matches!(
            exact_cover_number_small(&words, 0.1),
            Err(Error::InstanceTooLarge(_))
        ));
        let words = vec![(vec![0u32; 2], 0.5), (vec![1u32; 2], 0.6)];
        assert!(exact_cover_number_small(&words, 0.1).is_err());
    }

    #[test]
    fn greedy_on_uniform_words() {
        let words = uniform_binary_words(4);
        assert_eq!(greedy_cover_words(&words, 0.25).unwrap().count(), 13);
        let g = greedy_cover_words(&words, 0.3).unwrap();
        assert!(g.count() >= 3);
        assert!(g.covered_mass > 0.7);
    }

    #[test]
    fn trivial_partition_single_center() {
        let s = make_system(&SystemSpec::Doubling {}).unwrap();
        let samples = s.sample_measure(200, &RandomPlan::new(5));
        let metric = PairMetric::Hamming {
            partition: Partition::Trivial,
        };
        let r = estimate_cover_number(&s, &samples, None, 32, 0.5, &metric, CoverOptions::default()).unwrap();
        assert_eq!(r.count(), 1);
        assert_eq!(r.covered_mass, 1.0);
    }

    #[test]
    fn identity_halves_two_centers() {
        let s = make_system(&SystemSpec::Identity {}).unwrap();
        let samples = s.sample_measure(500, &RandomPlan::new(6));
        let metric = PairMetric::Hamming {
            partition: Partition::halves(),
        };
        for n in [1, 10, 100] {
            let r = estimate_cover_number(&s, &samples, None, n, 0.1, &metric, CoverOptions::default()).unwrap();
            assert_eq!(r.count(), 2);
        }
    }

    #[test]
    fn budget_exhaustion_reported() {
        let s = make_system(&SystemSpec::BernoulliShift {
            p: 0.5,
            alphabet_size: 2,
        })
        .unwrap();
        let samples = s.sample_measure(100, &RandomPlan::new(7));
        let metric = PairMetric::Hamming {
            partition: Partition::cylinder(vec![0], 2).unwrap(),
        };
        let opts = CoverOptions {
            max_centers: Some(10),
            seed: 7,
        };
        let err = estimate_cover_number(&s, &samples, None, 64, 0.1, &metric, opts).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { max_centers: 10, .. }));
    }

    #[test]
    fn classification_examples() {
        let none = [false; 4];
        assert_eq!(classify_estimates(&[5, 5, 5, 5], &none), Boundedness::Bounded);
        assert_eq!(classify_estimates(&[4, 9, 20, 44], &none), Boundedness::Growing);
        assert_eq!(classify_estimates(&[3, 7, 6], &none[..3]), Boundedness::Inconclusive);
        // censored plateau is growth evidence, never a bound
        assert_eq!(
            classify_estimates(&[200, 1300, 1801, 1801], &[false, false, true, true]),
            Boundedness::Growing
        );
        assert_eq!(
            classify_estimates(&[1801, 1801, 1801], &[true, true, true]),
            Boundedness::Inconclusive
        );
    }
}
