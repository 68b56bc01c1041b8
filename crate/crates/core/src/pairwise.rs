//! Orbit signatures and pairwise distance matrices for the four
//! Birkhoff-type pseudo-metrics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::metrics::{observe_orbit, running_max_average, Accumulator, Observable};
use crate::partition::{name_word, NameWord, Partition};
use crate::systems::{Point, SystemHandle};

/// Which pseudo-metric along orbits is being used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairMetric {
    /// `H_n^α`: fraction of disagreeing α-name symbols.
    Hamming { partition: Partition },
    /// `d̄_n`: averaged state-space metric.
    Dbar,
    /// `f̄_n`: averaged observable gap.
    Fbar { observable: Observable },
    /// `f̂_n`: running maximum of `f̄_k`, `k ≤ n`.
    Fhat { observable: Observable },
}

impl PairMetric {
    pub fn label(&self) -> &'static str {
        match self {
            PairMetric::Hamming { .. } => "hamming",
            PairMetric::Dbar => "dbar",
            PairMetric::Fbar { .. } => "fbar",
            PairMetric::Fhat { .. } => "fhat",
        }
    }
}

/// Precomputed orbit data of one point over a fixed horizon.
#[derive(Debug, Clone)]
pub enum Signature {
    /// Binary α-name, 64 symbols per word.
    Bits(Vec<u64>),
    Symbols(Vec<u32>),
    Values(Vec<Complex64>),
    Orbit(Vec<Point>),
}

fn pack_bits(symbols: &[u32]) -> Vec<u64> {
    let mut words = vec![0u64; symbols.len().div_ceil(64)];
    for (i, &s) in symbols.iter().enumerate() {
        if s != 0 {
            words[i / 64] |= 1u64 << (i % 64);
        }
    }
    words
}

/// Signature of a name word; binary names are bit-packed.
pub fn word_signature(word: &NameWord) -> Signature {
    if word.cells <= 2 {
        Signature::Bits(pack_bits(&word.symbols))
    } else {
        Signature::Symbols(word.symbols.clone())
    }
}

/// Signatures of a point set under one metric and horizon.
#[derive(Debug, Clone)]
pub struct SignatureSet {
    system: SystemHandle,
    metric: PairMetric,
    horizon: usize,
    sigs: Vec<Signature>,
}

impl SignatureSet {
    pub fn build(
        system: &SystemHandle,
        metric: &PairMetric,
        points: &[Point],
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if let PairMetric::Fbar { observable } | PairMetric::Fhat { observable } = metric {
            observable.check(system)?;
        }
        let sigs = exec::map_slice(points, |x| signature(system, metric, x, horizon))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            system: system.clone(),
            metric: metric.clone(),
            horizon,
            sigs,
        })
    }

    /// Signatures built directly from name words (all of equal length).
    pub fn from_words(system: &SystemHandle, partition: &Partition, words: &[NameWord]) -> Result<Self> {
        let horizon = words.first().map_or(0, NameWord::len);
        if horizon == 0 {
            return Err(Error::InvalidParameter("empty word list".into()));
        }
        if let Some(w) = words.iter().find(|w| w.len() != horizon) {
            return Err(Error::LengthMismatch {
                left: w.len(),
                right: horizon,
            });
        }
        Ok(Self {
            system: system.clone(),
            metric: PairMetric::Hamming {
                partition: partition.clone(),
            },
            horizon,
            sigs: words.iter().map(word_signature).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.sigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigs.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn metric(&self) -> &PairMetric {
        &self.metric
    }

    pub fn signature(&self, i: usize) -> &Signature {
        &self.sigs[i]
    }

    pub fn system(&self) -> &SystemHandle {
        &self.system
    }

    pub fn gaps(&self, i: usize, j: usize) -> Vec<f64> {
        signature_gaps(&self.system, &self.sigs[i], &self.sigs[j], self.horizon)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        signature_distance(&self.system, &self.sigs[i], &self.sigs[j], self.horizon, &self.metric)
    }

    /// Condensed upper-triangular distance matrix, rows computed in parallel.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let m = self.len();
        let rows = exec::map_indexed(m, |i| {
            ((i + 1)..m).map(|j| self.distance(i, j)).collect::<Vec<f64>>()
        });
        DistanceMatrix {
            m,
            data: rows.concat(),
        }
    }
}

/// Signature of one point.
pub fn signature(
    system: &SystemHandle,
    metric: &PairMetric,
    x: &Point,
    horizon: usize,
) -> Result<Signature> {
    Ok(match metric {
        PairMetric::Hamming { partition } => {
            word_signature(&name_word(system, partition, x, horizon)?)
        }
        PairMetric::Dbar => Signature::Orbit(system.orbit(x, horizon)),
        PairMetric::Fbar { observable } | PairMetric::Fhat { observable } => {
            Signature::Values(observe_orbit(system, observable, x, horizon)?)
        }
    })
}

/// Distance between two signatures built for the same metric and horizon.
pub fn signature_distance(
    system: &SystemHandle,
    a: &Signature,
    b: &Signature,
    horizon: usize,
    metric: &PairMetric,
) -> f64 {
    let n = horizon as f64;
    match (a, b) {
        (Signature::Bits(x), Signature::Bits(y)) => {
            let diff: u32 = x.iter().zip(y).map(|(p, q)| (p ^ q).count_ones()).sum();
            diff as f64 / n
        }
        (Signature::Symbols(x), Signature::Symbols(y)) => {
            x.iter().zip(y).filter(|(p, q)| p != q).count() as f64 / n
        }
        (Signature::Values(x), Signature::Values(y)) => match metric {
            PairMetric::Fhat { .. } => {
                let gaps: Vec<f64> = x.iter().zip(y).map(|(p, q)| (p - q).norm()).collect();
                running_max_average(&gaps)
            }
            _ => {
                let mut acc = Accumulator::default();
                x.iter().zip(y).for_each(|(p, q)| acc.add((p - q).norm()));
                acc.total() / n
            }
        },
        (Signature::Orbit(x), Signature::Orbit(y)) => {
            let mut acc = Accumulator::default();
            x.iter().zip(y).for_each(|(p, q)| acc.add(system.metric(p, q)));
            acc.total() / n
        }
        _ => f64::NAN,
    }
}

/// Per-step summands of the metric for `i < len`: disagreement flags for
/// names, `|f(T^i x) - f(T^i y)|` for observables, `d(T^i x, T^i y)` for orbits.
pub fn signature_gaps(system: &SystemHandle, a: &Signature, b: &Signature, len: usize) -> Vec<f64> {
    match (a, b) {
        (Signature::Bits(x), Signature::Bits(y)) => (0..len)
            .map(|i| ((x[i / 64] ^ y[i / 64]) >> (i % 64) & 1) as f64)
            .collect(),
        (Signature::Symbols(x), Signature::Symbols(y)) => x
            .iter()
            .zip(y)
            .take(len)
            .map(|(p, q)| if p != q { 1.0 } else { 0.0 })
            .collect(),
        (Signature::Values(x), Signature::Values(y)) => {
            x.iter().zip(y).take(len).map(|(p, q)| (p - q).norm()).collect()
        }
        (Signature::Orbit(x), Signature::Orbit(y)) => x
            .iter()
            .zip(y)
            .take(len)
            .map(|(p, q)| system.metric(p, q))
            .collect(),
        _ => vec![f64::NAN; len],
    }
}

/// Symmetric matrix with zero diagonal, stored as its strict upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(m: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                data.push(f(i, j));
            }
        }
        Self { m, data }
    }

    /// Wraps a row-major upper triangle (without diagonal).
    pub fn from_condensed(m: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), m * m.saturating_sub(1) / 2, "condensed length");
        Self { m, data }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.data[i * self.m - i * (i + 1) / 2 + (j - i - 1)]
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.data
    }
}

/// Fixed-width bit set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::new(len);
        (0..len).for_each(|i| s.insert(i));
        s
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersection_count(&self, other: &BitSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Removes every element of `other`.
    pub fn subtract(&mut self, other: &BitSet) {
        self.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a &= !b);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + t)
                }
            })
        })
    }
}

/// Open balls `B(i, ε) = {j : d(i, j) < ε}` of every sample.
#[derive(Debug, Clone)]
pub struct BallSets {
    pub balls: Vec<BitSet>,
}

impl BallSets {
    pub fn from_matrix(dm: &DistanceMatrix, eps: f64) -> Self {
        let m = dm.len();
        let balls = exec::map_indexed(m, |i| {
            let mut b = BitSet::new(m);
            (0..m).filter(|&j| dm.get(i, j) < eps).for_each(|j| b.insert(j));
            b
        });
        Self { balls }
    }

    /// Balls of a resampled multiset: element `a` stands for original sample `idx[a]`.
    pub fn resampled(dm: &DistanceMatrix, idx: &[usize], eps: f64) -> Self {
        let m = idx.len();
        let balls = exec::map_indexed(m, |a| {
            let mut b = BitSet::new(m);
            (0..m)
                .filter(|&c| dm.get(idx[a], idx[c]) < eps)
                .for_each(|c| b.insert(c));
            b
        });
        Self { balls }
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condensed_indexing() {
        let dm = DistanceMatrix::from_fn(5, |i, j| (10 * i + j) as f64);
        assert_eq!(dm.get(1, 3), 13.0);
        assert_eq!(dm.get(3, 1), 13.0);
        assert_eq!(dm.get(2, 2), 0.0);
        assert_eq!(dm.get(3, 4), 34.0);
    }

    #[test]
    fn bitset_ops() {
        let mut a = BitSet::new(130);
        a.insert(0);
        a.insert(64);
        a.insert(129);
        assert_eq!(a.count(), 3);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![0, 64, 129]);
        let mut full = BitSet::full(130);
        assert_eq!(full.intersection_count(&a), 3);
        full.subtract(&a);
        assert_eq!(full.count(), 127);
        assert!(!full.contains(64));
    }

    #[test]
    fn packed_hamming_matches_symbolwise() {
        let w1 = NameWord::new((0..100).map(|i| (i % 3 == 0) as u32).collect(), 2);
        let w2 = NameWord::new((0..100).map(|i| (i % 5 == 0) as u32).collect(), 2);
        let direct = crate::metrics::hamming_avg(&w1, &w2).unwrap();
        let system = crate::systems::make_system(&crate::systems::SystemSpec::Identity {}).unwrap();
        let metric = PairMetric::Hamming {
            partition: Partition::halves(),
        };
        let d = signature_distance(&system, &word_signature(&w1), &word_signature(&w2), 100, &metric);
        assert_eq!(d, direct);
    }
}
