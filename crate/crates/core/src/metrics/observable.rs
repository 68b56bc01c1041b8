use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::systems::{frac_mul, Point, StateSpace, SystemHandle};

/// A function on the state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// `e^{2πikx}` on circle families.
    Character { k: i64 },
    /// Indicator of one partition cell.
    CellIndicator { partition: Partition, label: u32 },
    /// Symbol (or odometer digit) at a fixed index.
    CoordinateRead { index: i64 },
    Constant { c: f64 },
    /// Simple function: `values[label]` on each cell of `partition`.
    Table {
        partition: Partition,
        values: Vec<f64>,
    },
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::Character { .. } => "character",
            Observable::CellIndicator { .. } => "cell_indicator",
            Observable::CoordinateRead { .. } => "coordinate_read",
            Observable::Constant { .. } => "constant",
            Observable::Table { .. } => "table",
        }
    }

    fn incompatible(&self, system: &SystemHandle) -> Error {
        Error::IncompatibleObservable {
            observable: self.name(),
            family: system.state_space().name(),
        }
    }

    /// Checks that the observable is defined on the system's state space.
    pub fn check(&self, system: &SystemHandle) -> Result<()> {
        match self {
            Observable::Character { .. } if !system.state_space().has_circle_coordinate() => {
                Err(self.incompatible(system))
            }
            Observable::CoordinateRead { .. }
                if !matches!(
                    system.state_space(),
                    StateSpace::Shift { .. } | StateSpace::BinaryCircle | StateSpace::Odometer { .. }
                ) =>
            {
                Err(self.incompatible(system))
            }
            Observable::Table { partition, values } if values.len() != partition.cell_count() => {
                Err(Error::LengthMismatch {
                    left: values.len(),
                    right: partition.cell_count(),
                })
            }
            _ => Ok(()),
        }
    }

    /// `f(x)`.
    pub fn eval(&self, system: &SystemHandle, x: &Point) -> Result<Complex64> {
        match self {
            Observable::Character { k } => {
                let v = system
                    .circle_coordinate(x)
                    .ok_or_else(|| self.incompatible(system))?;
                let turn = frac_mul(*k, v);
                Ok(Complex64::from_polar(1.0, std::f64::consts::TAU * turn))
            }
            Observable::CellIndicator { partition, label } => {
                let l = partition.classify(system, x)?;
                Ok(Complex64::new(if l == *label { 1.0 } else { 0.0 }, 0.0))
            }
            Observable::CoordinateRead { index } => match x {
                Point::Symbolic(s) => Ok(Complex64::new(s.symbol(*index) as f64, 0.0)),
                Point::Digits(d) if *index >= 0 => {
                    Ok(Complex64::new(d.digit(*index as usize) as f64, 0.0))
                }
                _ => Err(self.incompatible(system)),
            },
            Observable::Constant { c } => Ok(Complex64::new(*c, 0.0)),
            Observable::Table { partition, values } => {
                let l = partition.classify(system, x)? as usize;
                values
                    .get(l)
                    .map(|&v| Complex64::new(v, 0.0))
                    .ok_or(Error::LengthMismatch {
                        left: values.len(),
                        right: partition.cell_count(),
                    })
            }
        }
    }

    /// Upper bound on `|f|`, when the observable has an obvious one.
    pub fn sup_norm(&self) -> Option<f64> {
        match self {
            Observable::Character { .. } => Some(1.0),
            Observable::CellIndicator { .. } => Some(1.0),
            Observable::CoordinateRead { .. } => Some(255.0),
            Observable::Constant { c } => Some(c.abs()),
            Observable::Table { values, .. } => {
                Some(values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            }
        }
    }
}

/// Values `f(x), f(Tx), ..., f(T^{n-1}x)`.
pub fn observe_orbit(
    system: &SystemHandle,
    f: &Observable,
    x: &Point,
    n: usize,
) -> Result<Vec<Complex64>> {
    f.check(system)?;
    system.trajectory(x).take(n).map(|p| f.eval(system, &p)).collect()
}
