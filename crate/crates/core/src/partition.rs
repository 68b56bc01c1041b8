//! Finite partitions, α-names and the iterated refinement ⋁ T^{-i}α.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{frac_mul, reduce_unit, Point, StateSpace, SymbolPoint, SystemHandle};

/// Largest cell count a refinement may produce.
pub const MAX_REFINED_CELLS: usize = 1 << 20;

/// A finite measurable partition with cells labelled `0..cell_count()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Partition {
    /// Half-open arcs `[c_i, c_{i+1})`; the last arc wraps through 1.
    CircleIntervals { cuts: Vec<f64> },
    /// Cylinder sets fixed by the symbols at `coords`, most significant first.
    Cylinder { coords: Vec<i64>, alphabet: u8 },
    Trivial,
    /// Rectangles `A_i × B_j`, labelled `i * right_cells + j`.
    Product {
        left: Box<Partition>,
        right: Box<Partition>,
    },
}

impl Partition {
    /// `{[0, 1/2), [1/2, 1)}`.
    pub fn halves() -> Self {
        Partition::CircleIntervals {
            cuts: vec![0.0, 0.5],
        }
    }

    pub fn circle_intervals(mut cuts: Vec<f64>) -> Result<Self> {
        if cuts.is_empty() || cuts.iter().any(|c| !(0.0..1.0).contains(c)) {
            return Err(Error::InvalidParameter(
                "interval cuts must be a non-empty list in [0, 1)".into(),
            ));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        Ok(Partition::CircleIntervals { cuts })
    }

    pub fn cylinder(coords: Vec<i64>, alphabet: u8) -> Result<Self> {
        if alphabet < 1 || coords.is_empty() {
            return Err(Error::InvalidParameter(
                "cylinder partitions need at least one coordinate and symbol".into(),
            ));
        }
        let p = Partition::Cylinder { coords, alphabet };
        if p.cell_count_u128() > MAX_REFINED_CELLS as u128 {
            return Err(Error::InstanceTooLarge(format!(
                "cylinder partition has more than {MAX_REFINED_CELLS} cells"
            )));
        }
        Ok(p)
    }

    fn cell_count_u128(&self) -> u128 {
        match self {
            Partition::CircleIntervals { cuts } => cuts.len() as u128,
            Partition::Cylinder { coords, alphabet } => {
                (*alphabet as u128).saturating_pow(coords.len() as u32)
            }
            Partition::Trivial => 1,
            Partition::Product { left, right } => {
                left.cell_count_u128().saturating_mul(right.cell_count_u128())
            }
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cell_count_u128().min(usize::MAX as u128) as usize
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Partition::CircleIntervals { .. } => "circle_intervals",
            Partition::Cylinder { .. } => "cylinder",
            Partition::Trivial => "trivial",
            Partition::Product { .. } => "product",
        }
    }

    /// Label of the cell containing `x`.
    pub fn classify(&self, system: &SystemHandle, x: &Point) -> Result<u32> {
        let incompatible = || Error::IncompatiblePartition {
            partition: self.kind_name(),
            point: x.family_name(),
        };
        match self {
            Partition::Trivial => Ok(0),
            Partition::CircleIntervals { cuts } => match (system.state_space(), x) {
                (StateSpace::Circle, Point::Circle(v)) => Ok(interval_label(cuts, *v)),
                (StateSpace::BinaryCircle, Point::Symbolic(s)) => Ok(binary_interval_label(cuts, s)),
                _ => Err(incompatible()),
            },
            Partition::Cylinder { coords, alphabet } => {
                let k = *alphabet as u32;
                let mut label = 0u32;
                for &c in coords {
                    let s = match x {
                        Point::Symbolic(p) => p.symbol(c),
                        Point::Digits(d) if c >= 0 => d.digit(c as usize),
                        _ => return Err(incompatible()),
                    } as u32;
                    if s >= k {
                        return Err(incompatible());
                    }
                    label = label * k + s;
                }
                Ok(label)
            }
            Partition::Product { left, right } => match (system.factors(), x) {
                (Some((ls, rs)), Point::Pair(a, b)) => {
                    let l = left.classify(ls, a)?;
                    let r = right.classify(rs, b)?;
                    Ok(l * right.cell_count() as u32 + r)
                }
                _ => Err(incompatible()),
            },
        }
    }
}

fn interval_label(cuts: &[f64], v: f64) -> u32 {
    let idx = cuts.partition_point(|&c| c <= v);
    if idx == 0 {
        (cuts.len() - 1) as u32
    } else {
        (idx - 1) as u32
    }
}

/// Interval label of a binary expansion, reading only as many digits as
/// needed to place the dyadic interval inside one cell.
fn binary_interval_label(cuts: &[f64], s: &SymbolPoint) -> u32 {
    let mut a = 0.0f64;
    let mut w = 1.0f64;
    for j in 0..53 {
        w *= 0.5;
        if s.symbol(j) == 1 {
            a += w;
        }
        let idx = cuts.partition_point(|&c| c <= a);
        if idx == cuts.len() || cuts[idx] >= a + w {
            return interval_label(cuts, a);
        }
    }
    interval_label(cuts, a)
}

/// Forward α-name segment `(α_0(x), ..., α_{n-1}(x))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameWord {
    pub symbols: Vec<u32>,
    /// Number of cells of the generating partition.
    pub cells: u32,
}

impl NameWord {
    pub fn new(symbols: Vec<u32>, cells: u32) -> Self {
        Self { symbols, cells }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// α-name of `x` over the horizon `n`: symbol `i` classifies `T^i x`.
pub fn name_word(
    system: &SystemHandle,
    partition: &Partition,
    x: &Point,
    n: usize,
) -> Result<NameWord> {
    if n == 0 {
        return Err(Error::InvalidParameter("name horizon must be at least 1".into()));
    }
    let symbols = system
        .trajectory(x)
        .take(n)
        .map(|p| partition.classify(system, &p))
        .collect::<Result<Vec<_>>>()?;
    Ok(NameWord::new(symbols, partition.cell_count() as u32))
}

/// The refinement `⋁_{i<N} T^{-i}α` together with the α-name of length `N`
/// carried by each of its cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub partition: Partition,
    pub cell_names: Vec<Vec<u32>>,
}

/// Computes `⋁_{i<N} T^{-i}α` symbolically.
///
/// Interval partitions pull back their cut points; cylinder partitions on
/// shift spaces widen their coordinate set.
pub fn refine(partition: &Partition, system: &SystemHandle, n: usize) -> Result<Refinement> {
    if n == 0 {
        return Err(Error::InvalidParameter("refinement depth must be at least 1".into()));
    }
    match partition {
        Partition::Trivial => Ok(Refinement {
            partition: Partition::Trivial,
            cell_names: vec![vec![0; n]],
        }),
        Partition::CircleIntervals { cuts } => refine_intervals(cuts, system, n),
        Partition::Cylinder { coords, alphabet } => refine_cylinder(coords, *alphabet, system, n),
        Partition::Product { .. } => Err(Error::UnsupportedKind(
            "refinement of product partitions".into(),
        )),
    }
}

fn refine_intervals(cuts: &[f64], system: &SystemHandle, n: usize) -> Result<Refinement> {
    let mut refined: Vec<f64> = match system.state_space() {
        StateSpace::Circle => {
            let theta = system.rotation_angle().unwrap_or(0.0);
            (0..n as i64)
                .flat_map(|i| cuts.iter().map(move |&c| reduce_unit(c + frac_mul(-i, theta))))
                .collect()
        }
        StateSpace::BinaryCircle => {
            let total = cuts.len() as u128 * ((1u128 << n.min(100)) - 1);
            if n > 20 || total > MAX_REFINED_CELLS as u128 {
                return Err(Error::InstanceTooLarge(format!(
                    "doubling refinement of depth {n} exceeds {MAX_REFINED_CELLS} cells"
                )));
            }
            let mut out = Vec::new();
            for i in 0..n {
                let scale = 0.5f64.powi(i as i32);
                for j in 0..(1u64 << i) {
                    for &c in cuts {
                        out.push((c + j as f64) * scale);
                    }
                }
            }
            out
        }
        other => {
            return Err(Error::UnsupportedKind(format!(
                "interval partitions on a {}",
                other.name()
            )))
        }
    };
    refined.sort_by(f64::total_cmp);
    refined.dedup();
    let original = Partition::CircleIntervals {
        cuts: cuts.to_vec(),
    };
    let l = refined.len();
    let cell_names = (0..l)
        .map(|k| {
            let lo = refined[k];
            let hi = if k + 1 < l { refined[k + 1] } else { refined[0] + 1.0 };
            let mid = reduce_unit(0.5 * (lo + hi));
            let x = match system.state_space() {
                StateSpace::BinaryCircle => Point::Symbolic(SymbolPoint::from_binary(mid)),
                _ => Point::Circle(mid),
            };
            name_word(system, &original, &x, n).map(|w| w.symbols)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Refinement {
        partition: Partition::CircleIntervals { cuts: refined },
        cell_names,
    })
}

fn refine_cylinder(
    coords: &[i64],
    alphabet: u8,
    system: &SystemHandle,
    n: usize,
) -> Result<Refinement> {
    if !matches!(
        system.state_space(),
        StateSpace::Shift { .. } | StateSpace::BinaryCircle
    ) {
        return Err(Error::UnsupportedKind(format!(
            "cylinder refinement on a {}",
            system.state_space().name()
        )));
    }
    let mut union: Vec<i64> = (0..n as i64)
        .flat_map(|i| coords.iter().map(move |&c| c + i))
        .collect();
    union.sort_unstable();
    union.dedup();
    let refined = Partition::cylinder(union.clone(), alphabet)?;
    let k = alphabet as u32;
    let cells = refined.cell_count();
    let cell_names = (0..cells)
        .map(|label| {
            // decode the refined label into symbols at the union coordinates
            let mut rest = label as u32;
            let mut syms = vec![0u32; union.len()];
            for slot in syms.iter_mut().rev() {
                *slot = rest % k;
                rest /= k;
            }
            let at = |coord: i64| syms[union.binary_search(&coord).expect("coordinate in union")];
            (0..n as i64)
                .map(|i| coords.iter().fold(0u32, |acc, &c| acc * k + at(c + i)))
                .collect()
        })
        .collect();
    Ok(Refinement {
        partition: refined,
        cell_names,
    })
}
