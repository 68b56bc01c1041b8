//! Birkhoff-averaged pseudo-metrics along orbits, densities of integer
//! sets, and finite-horizon limit estimates.

mod observable;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{name_word, NameWord, Partition};
use crate::systems::{Point, SystemHandle};

pub use observable::{observe_orbit, Observable};

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Fraction of positions where two names disagree.
pub fn hamming_avg(w1: &NameWord, w2: &NameWord) -> Result<f64> {
    if w1.len() != w2.len() {
        return Err(Error::LengthMismatch {
            left: w1.len(),
            right: w2.len(),
        });
    }
    if w1.is_empty() {
        return Ok(0.0);
    }
    let diff = w1
        .symbols
        .iter()
        .zip(&w2.symbols)
        .filter(|(a, b)| a != b)
        .count();
    Ok(diff as f64 / w1.len() as f64)
}

/// `H_n^α(x, y)` computed from the two names.
pub fn hamming_n(
    system: &SystemHandle,
    partition: &Partition,
    x: &Point,
    y: &Point,
    n: usize,
) -> Result<f64> {
    hamming_avg(
        &name_word(system, partition, x, n)?,
        &name_word(system, partition, y, n)?,
    )
}

fn check_horizon(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("horizon must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `d̄_n(x, y) = (1/n) Σ_{i<n} d(T^i x, T^i y)`.
pub fn dbar_n(system: &SystemHandle, x: &Point, y: &Point, n: usize) -> Result<f64> {
    check_horizon(n)?;
    let mut acc = Accumulator::default();
    for (a, b) in system.trajectory(x).zip(system.trajectory(y)).take(n) {
        acc.add(system.metric(&a, &b));
    }
    Ok(acc.total() / n as f64)
}

/// Per-step gaps `|f(T^i x) - f(T^i y)|` for `i < n`.
pub fn observable_gaps(
    system: &SystemHandle,
    f: &Observable,
    x: &Point,
    y: &Point,
    n: usize,
) -> Result<Vec<f64>> {
    f.check(system)?;
    system
        .trajectory(x)
        .zip(system.trajectory(y))
        .take(n)
        .map(|(a, b)| Ok((f.eval(system, &a)? - f.eval(system, &b)?).norm()))
        .collect()
}

/// `f̄_n(x, y) = (1/n) Σ_{i<n} |f(T^i x) - f(T^i y)|`.
pub fn fbar_n(
    system: &SystemHandle,
    f: &Observable,
    x: &Point,
    y: &Point,
    n: usize,
) -> Result<f64> {
    check_horizon(n)?;
    let gaps = observable_gaps(system, f, x, y, n)?;
    let mut acc = Accumulator::default();
    gaps.iter().for_each(|&g| acc.add(g));
    Ok(acc.total() / n as f64)
}

/// `f̂_n(x, y) = max_{1≤k≤n} f̄_k(x, y)`.
pub fn fhat_n(
    system: &SystemHandle,
    f: &Observable,
    x: &Point,
    y: &Point,
    n: usize,
) -> Result<f64> {
    check_horizon(n)?;
    let gaps = observable_gaps(system, f, x, y, n)?;
    Ok(running_max_average(&gaps))
}

/// `max_k (1/k) Σ_{i<k} gaps[i]` over the whole slice.
pub fn running_max_average(gaps: &[f64]) -> f64 {
    let mut acc = Accumulator::default();
    let mut best = 0.0f64;
    for (i, &g) in gaps.iter().enumerate() {
        acc.add(g);
        best = best.max(acc.total() / (i + 1) as f64);
    }
    best
}

/// Averages `(1/h) Σ_{i<h} summand(i)` at every horizon `h`, in one pass.
pub fn running_averages<I>(summands: I, horizons: &[usize]) -> Vec<f64>
where
    I: IntoIterator<Item = f64>,
{
    let last = horizons.iter().copied().max().unwrap_or(0);
    let mut out = Vec::with_capacity(horizons.len());
    let mut acc = Accumulator::default();
    let mut iter = summands.into_iter();
    let mut targets = horizons.iter().peekable();
    for i in 1..=last {
        acc.add(iter.next().unwrap_or(0.0));
        while targets.peek().is_some_and(|&&h| h == i) {
            targets.next();
            out.push(acc.total() / i as f64);
        }
    }
    out
}

/// `H_h^α(x, y)` at each horizon `h`, sharing one orbit pass.
pub fn hamming_profile(
    system: &SystemHandle,
    partition: &Partition,
    x: &Point,
    y: &Point,
    horizons: &[usize],
) -> Result<Vec<f64>> {
    check_horizons(horizons, 1)?;
    let last = *horizons.last().unwrap();
    let mut flags = Vec::with_capacity(last);
    for (a, b) in system.trajectory(x).zip(system.trajectory(y)).take(last) {
        let differ = partition.classify(system, &a)? != partition.classify(system, &b)?;
        flags.push(if differ { 1.0 } else { 0.0 });
    }
    Ok(running_averages(flags, horizons))
}

/// `f̄_h(x, y)` at each horizon `h`, sharing one orbit pass.
pub fn fbar_profile(
    system: &SystemHandle,
    f: &Observable,
    x: &Point,
    y: &Point,
    horizons: &[usize],
) -> Result<Vec<f64>> {
    check_horizons(horizons, 1)?;
    let gaps = observable_gaps(system, f, x, y, *horizons.last().unwrap())?;
    Ok(running_averages(gaps, horizons))
}

/// An integer set given by membership test or by a sorted list.
pub enum IntSet<'a> {
    Predicate(&'a (dyn Fn(u64) -> bool + Sync)),
    Sorted(&'a [u64]),
}

impl IntSet<'_> {
    /// `#(F ∩ [0, n-1])`.
    pub fn count_below(&self, n: u64) -> u64 {
        match self {
            IntSet::Predicate(p) => (0..n).filter(|&i| p(i)).count() as u64,
            IntSet::Sorted(v) => v.partition_point(|&i| i < n) as u64,
        }
    }
}

/// `(1/N) #(F ∩ [0, N-1])`, the window quantity behind both densities.
pub fn window_density(set: &IntSet<'_>, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("density window must be at least 1".into()));
    }
    Ok(set.count_below(n) as f64 / n as f64)
}

/// Window density at `N`; callers take the limsup across windows.
pub fn upper_density(set: &IntSet<'_>, n: u64) -> Result<f64> {
    window_density(set, n)
}

/// Window density at `N`; callers take the liminf across windows.
pub fn lower_density(set: &IntSet<'_>, n: u64) -> Result<f64> {
    window_density(set, n)
}

/// Largest window density over the given windows.
pub fn upper_density_over(set: &IntSet<'_>, windows: &[u64]) -> Result<f64> {
    windows
        .iter()
        .try_fold(f64::NEG_INFINITY, |m, &n| Ok(m.max(window_density(set, n)?)))
}

/// Smallest window density over the given windows.
pub fn lower_density_over(set: &IntSet<'_>, windows: &[u64]) -> Result<f64> {
    windows
        .iter()
        .try_fold(f64::INFINITY, |m, &n| Ok(m.min(window_density(set, n)?)))
}

/// Finite-horizon proxy for a Birkhoff limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    /// Value at the last horizon.
    pub value: f64,
    pub horizons: Vec<usize>,
    pub values: Vec<f64>,
    /// Max pairwise deviation across the last three horizons.
    pub spread: f64,
    pub tolerance: f64,
    pub converged: bool,
}

/// Default convergence tolerance: `max(0.005, 2/sqrt(n_last))`.
pub fn default_tolerance(n_last: usize) -> f64 {
    0.005f64.max(2.0 / (n_last as f64).sqrt())
}

fn check_horizons(horizons: &[usize], min_len: usize) -> Result<()> {
    if horizons.len() < min_len {
        return Err(Error::InvalidParameter(format!(
            "need at least {min_len} horizons, got {}",
            horizons.len()
        )));
    }
    if horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "horizons must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

impl LimitEstimate {
    /// Builds the estimate from values already evaluated at `horizons`.
    pub fn from_values(horizons: &[usize], values: Vec<f64>, tolerance: Option<f64>) -> Result<Self> {
        check_horizons(horizons, 3)?;
        if values.len() != horizons.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: horizons.len(),
            });
        }
        let tail = &values[values.len() - 3..];
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = hi - lo;
        let tolerance = tolerance.unwrap_or_else(|| default_tolerance(*horizons.last().unwrap()));
        Ok(Self {
            value: *values.last().unwrap(),
            horizons: horizons.to_vec(),
            values,
            spread,
            tolerance,
            converged: spread <= tolerance,
        })
    }
}

/// Evaluates `seq` at each horizon and summarizes convergence.
pub fn limit_estimate<F>(mut seq: F, horizons: &[usize]) -> Result<LimitEstimate>
where
    F: FnMut(usize) -> f64,
{
    check_horizons(horizons, 3)?;
    let values = horizons.iter().map(|&n| seq(n)).collect();
    LimitEstimate::from_values(horizons, values, None)
}

/// `start, start*factor, ...` below `end`, then `end` itself.
pub fn geometric_horizons(start: usize, end: usize, factor: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut h = start.max(1);
    while h < end {
        out.push(h);
        h = h.saturating_mul(factor.max(2));
    }
    if end >= start.max(1) {
        out.push(end);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::RandomPlan;
    use crate::systems::{golden_angle, make_system, SystemSpec};

    #[test]
    fn hamming_examples() {
        let w = |v: Vec<u32>| NameWord::new(v, 2);
        assert_eq!(hamming_avg(&w(vec![0, 1, 1, 0]), &w(vec![0, 1, 1, 0])).unwrap(), 0.0);
        assert_eq!(hamming_avg(&w(vec![0, 1, 1]), &w(vec![1, 0, 1])).unwrap(), 2.0 / 3.0);
        assert_eq!(hamming_avg(&w(vec![0; 4]), &w(vec![1; 4])).unwrap(), 1.0);
        assert!(matches!(
            hamming_avg(&w(vec![0; 4]), &w(vec![0; 3])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn dbar_examples() {
        let r = make_system(&SystemSpec::Rotation {
            theta: golden_angle(),
        })
        .unwrap();
        let x = Point::circle(0.0);
        let y = Point::circle(0.2);
        assert_eq!(dbar_n(&r, &x, &x, 10).unwrap(), 0.0);
        for n in [1, 7, 100] {
            assert!((dbar_n(&r, &x, &y, n).unwrap() - 0.2).abs() < 1e-12);
        }
        let id = make_system(&SystemSpec::Identity {}).unwrap();
        assert!((dbar_n(&id, &x, &Point::circle(0.9), 5).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn fbar_constant_is_zero() {
        let r = make_system(&SystemSpec::Doubling {}).unwrap();
        let plan = RandomPlan::new(3);
        let pts = r.sample_measure(2, &plan);
        let f = Observable::Constant { c: 2.5 };
        assert_eq!(fbar_n(&r, &f, &pts[0], &pts[1], 50).unwrap(), 0.0);
    }

    #[test]
    fn fbar_character_on_rotation() {
        let r = make_system(&SystemSpec::Rotation {
            theta: golden_angle(),
        })
        .unwrap();
        let f = Observable::Character { k: 1 };
        let x = Point::circle(0.0);
        let y = Point::circle(1.0 / 6.0);
        let v = fbar_n(&r, &f, &x, &y, 1000).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        let h = fhat_n(&r, &f, &x, &y, 1000).unwrap();
        assert!((h - v).abs() < 1e-12);
    }

    #[test]
    fn fhat_at_one_is_fbar() {
        let d = make_system(&SystemSpec::Doubling {}).unwrap();
        let pts = d.sample_measure(2, &RandomPlan::new(8));
        let f = Observable::CellIndicator {
            partition: Partition::halves(),
            label: 0,
        };
        assert_eq!(
            fhat_n(&d, &f, &pts[0], &pts[1], 1).unwrap(),
            fbar_n(&d, &f, &pts[0], &pts[1], 1).unwrap()
        );
    }

    #[test]
    fn character_needs_circle() {
        let s = make_system(&SystemSpec::BernoulliShift {
            p: 0.5,
            alphabet_size: 2,
        })
        .unwrap();
        let pts = s.sample_measure(2, &RandomPlan::new(1));
        let err = fbar_n(&s, &Observable::Character { k: 1 }, &pts[0], &pts[1], 3).unwrap_err();
        assert!(matches!(err, Error::IncompatibleObservable { .. }));
    }

    #[test]
    fn density_examples() {
        let evens = |i: u64| i.is_multiple_of(2);
        assert_eq!(upper_density(&IntSet::Predicate(&evens), 10).unwrap(), 0.5);
        let squares: Vec<u64> = (0..20).map(|i| i * i).collect();
        assert_eq!(lower_density(&IntSet::Sorted(&squares), 100).unwrap(), 0.10);
        assert_eq!(upper_density(&IntSet::Sorted(&[]), 10).unwrap(), 0.0);
        let windows = [5, 6, 7, 8, 9, 10];
        assert_eq!(upper_density_over(&IntSet::Predicate(&evens), &windows).unwrap(), 0.6);
        assert_eq!(lower_density_over(&IntSet::Predicate(&evens), &windows).unwrap(), 0.5);
    }

    #[test]
    fn limit_of_constant() {
        let est = limit_estimate(|_| 0.3, &[10, 100, 1000]).unwrap();
        assert_eq!(est.value, 0.3);
        assert_eq!(est.spread, 0.0);
        assert!(est.converged);
        assert!(limit_estimate(|_| 0.3, &[10, 100]).is_err());
        assert!(limit_estimate(|_| 0.3, &[10, 10, 100]).is_err());
    }

    #[test]
    fn running_averages_match_direct() {
        let vals: Vec<f64> = (0..20).map(|i| (i % 3) as f64).collect();
        let avgs = running_averages(vals.iter().copied(), &[1, 5, 20]);
        assert_eq!(avgs[0], 0.0);
        assert_eq!(avgs[1], (0.0 + 1.0 + 2.0 + 0.0 + 1.0) / 5.0);
        assert!((avgs[2] - vals.iter().sum::<f64>() / 20.0).abs() < 1e-15);
    }

    #[test]
    fn geometric_list() {
        assert_eq!(geometric_horizons(16, 4096, 2).len(), 9);
        assert_eq!(geometric_horizons(10, 1000, 10), vec![10, 100, 1000]);
        assert_eq!(geometric_horizons(10, 500, 10), vec![10, 100, 500]);
    }
}
