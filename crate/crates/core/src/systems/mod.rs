//! Catalog of measure-preserving systems.
//!
//! A [`SystemHandle`] bundles the invertible map, a metric on the state space
//! and a sampler for the invariant measure. Handles are immutable and can be
//! shared freely between worker threads.

mod point;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::plan::RandomPlan;

pub use point::{frac_mul, reduce_unit, DigitPoint, Point, SymbolPoint, Tail};

/// Number of symbols compared by the shift and odometer metrics.
pub const DEFAULT_WINDOW: usize = 64;

/// Longest orbit the circle families are allowed to materialize.
pub const MAX_CIRCLE_ORBIT: usize = 10_000_000;

/// The golden rotation number `(sqrt(5) - 1) / 2`.
pub fn golden_angle() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Declarative description of a catalog system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum SystemSpec {
    Rotation {
        theta: f64,
    },
    Doubling {},
    BernoulliShift {
        p: f64,
        alphabet_size: u8,
    },
    Sturmian {
        theta: f64,
    },
    Odometer {
        base: u8,
    },
    Identity {},
    Product {
        left: Box<SystemSpec>,
        right: Box<SystemSpec>,
    },
}

impl SystemSpec {
    pub fn describe(&self) -> String {
        match self {
            SystemSpec::Rotation { theta } => format!("rotation by {theta} on the circle"),
            SystemSpec::Doubling {} => "doubling map x -> 2x mod 1 (natural extension)".into(),
            SystemSpec::BernoulliShift { p, alphabet_size } => {
                format!("two-sided Bernoulli shift on {alphabet_size} symbols, p = {p}")
            }
            SystemSpec::Sturmian { theta } => format!("Sturmian coding of rotation by {theta}"),
            SystemSpec::Odometer { base } => format!("{base}-adic odometer"),
            SystemSpec::Identity {} => "identity on the circle".into(),
            SystemSpec::Product { left, right } => {
                format!("product of ({}) and ({})", left.describe(), right.describe())
            }
        }
    }

    /// A few ready-made specs, used by the `systems` subcommand.
    pub fn catalog() -> Vec<SystemSpec> {
        vec![
            SystemSpec::Rotation {
                theta: golden_angle(),
            },
            SystemSpec::Doubling {},
            SystemSpec::BernoulliShift {
                p: 0.5,
                alphabet_size: 2,
            },
            SystemSpec::Sturmian {
                theta: golden_angle(),
            },
            SystemSpec::Odometer { base: 2 },
            SystemSpec::Identity {},
            SystemSpec::Product {
                left: Box::new(SystemSpec::Rotation {
                    theta: golden_angle(),
                }),
                right: Box::new(SystemSpec::Odometer { base: 3 }),
            },
        ]
    }
}

/// Coarse classification of a system's state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpace {
    /// Points are `Point::Circle`.
    Circle,
    /// Circle coordinates stored as binary expansions (`Point::Symbolic`).
    BinaryCircle,
    /// Two-sided shift sequences over `alphabet` symbols.
    Shift { alphabet: u8 },
    Odometer { base: u8 },
    Product,
}

impl StateSpace {
    pub fn name(&self) -> &'static str {
        match self {
            StateSpace::Circle => "circle",
            StateSpace::BinaryCircle => "binary circle",
            StateSpace::Shift { .. } => "shift space",
            StateSpace::Odometer { .. } => "odometer",
            StateSpace::Product => "product space",
        }
    }

    /// True when circle observables (characters, interval partitions) apply.
    pub fn has_circle_coordinate(&self) -> bool {
        matches!(self, StateSpace::Circle | StateSpace::BinaryCircle)
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Rotation { theta: f64 },
    Doubling,
    Bernoulli { p: f64, alphabet: u8 },
    Sturmian { theta: f64 },
    Odometer { base: u8 },
    Identity,
    Product(Box<SystemHandle>, Box<SystemHandle>),
}

/// Ready-to-use system built by [`make_system`].
#[derive(Debug, Clone)]
pub struct SystemHandle {
    spec: SystemSpec,
    kind: Kind,
    window: usize,
    warnings: Vec<String>,
}

/// Small-denominator rational approximation of `theta`, if one is exact to 1e-12.
pub fn rational_angle(theta: f64) -> Option<(u64, u64)> {
    (1..=10_000u64).find_map(|q| {
        let p = (theta * q as f64).round();
        ((theta - p / q as f64).abs() <= 1e-12).then_some((p as u64, q))
    })
}

fn check_angle(theta: f64, warnings: &mut Vec<String>) -> Result<()> {
    if !theta.is_finite() || !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "angle {theta} must lie in [0, 1)"
        )));
    }
    if let Some((p, q)) = rational_angle(theta) {
        warnings.push(format!(
            "angle {theta} is rational ({p}/{q}); the system is periodic"
        ));
    }
    Ok(())
}

/// Validates a spec and builds its handle.
pub fn make_system(spec: &SystemSpec) -> Result<SystemHandle> {
    let mut warnings = Vec::new();
    let kind = match spec {
        SystemSpec::Rotation { theta } => {
            check_angle(*theta, &mut warnings)?;
            Kind::Rotation { theta: *theta }
        }
        SystemSpec::Sturmian { theta } => {
            check_angle(*theta, &mut warnings)?;
            Kind::Sturmian { theta: *theta }
        }
        SystemSpec::Doubling {} => Kind::Doubling,
        SystemSpec::BernoulliShift { p, alphabet_size } => {
            if !(p.is_finite() && *p > 0.0 && *p < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "Bernoulli parameter {p} must lie in (0, 1)"
                )));
            }
            if *alphabet_size < 2 {
                return Err(Error::InvalidParameter(format!(
                    "alphabet size {alphabet_size} must be at least 2"
                )));
            }
            Kind::Bernoulli {
                p: *p,
                alphabet: *alphabet_size,
            }
        }
        SystemSpec::Odometer { base } => {
            if *base < 2 {
                return Err(Error::InvalidParameter(format!(
                    "odometer base {base} must be at least 2"
                )));
            }
            Kind::Odometer { base: *base }
        }
        SystemSpec::Identity {} => Kind::Identity,
        SystemSpec::Product { left, right } => {
            let l = make_system(left)?;
            let r = make_system(right)?;
            warnings.extend(l.warnings.iter().cloned());
            warnings.extend(r.warnings.iter().cloned());
            Kind::Product(Box::new(l), Box::new(r))
        }
    };
    Ok(SystemHandle {
        spec: spec.clone(),
        kind,
        window: DEFAULT_WINDOW,
        warnings,
    })
}

/// User-facing description of a single point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Real(f64),
    Symbols { symbols: Vec<u8> },
    Digits { digits: Vec<u8> },
    Pair(Box<PointSpec>, Box<PointSpec>),
}

impl SystemHandle {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    /// Warnings raised at construction (e.g. rational rotation numbers).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Comparison window of the symbolic metrics.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window.max(1);
        if let Kind::Product(l, r) = &mut self.kind {
            l.window = self.window;
            r.window = self.window;
        }
        self
    }

    pub fn state_space(&self) -> StateSpace {
        match &self.kind {
            Kind::Rotation { .. } | Kind::Identity => StateSpace::Circle,
            Kind::Doubling => StateSpace::BinaryCircle,
            Kind::Bernoulli { alphabet, .. } => StateSpace::Shift {
                alphabet: *alphabet,
            },
            Kind::Sturmian { .. } => StateSpace::Shift { alphabet: 2 },
            Kind::Odometer { base } => StateSpace::Odometer { base: *base },
            Kind::Product(..) => StateSpace::Product,
        }
    }

    /// Components of a product system.
    pub fn factors(&self) -> Option<(&SystemHandle, &SystemHandle)> {
        match &self.kind {
            Kind::Product(l, r) => Some((l, r)),
            _ => None,
        }
    }

    /// Rotation number of rotation and identity systems.
    pub fn rotation_angle(&self) -> Option<f64> {
        match self.kind {
            Kind::Rotation { theta } => Some(theta),
            Kind::Identity => Some(0.0),
            _ => None,
        }
    }

    /// Circle coordinate of a point of a circle family.
    pub fn circle_coordinate(&self, x: &Point) -> Option<f64> {
        match (&self.kind, x) {
            (Kind::Rotation { .. } | Kind::Identity, Point::Circle(v)) => Some(*v),
            (Kind::Doubling, Point::Symbolic(s)) => Some(s.binary_value()),
            _ => None,
        }
    }

    /// Builds a point from a user description.
    pub fn point_from_spec(&self, spec: &PointSpec) -> Result<Point> {
        let bad = || {
            Error::InvalidParameter(format!(
                "point {spec:?} does not describe a point of {}",
                self.spec.describe()
            ))
        };
        match (&self.kind, spec) {
            (Kind::Rotation { .. } | Kind::Identity, PointSpec::Real(x)) => Ok(Point::circle(*x)),
            (Kind::Doubling, PointSpec::Real(x)) => {
                Ok(Point::Symbolic(SymbolPoint::from_binary(*x)))
            }
            (Kind::Sturmian { theta }, PointSpec::Real(x)) => {
                Ok(Point::Symbolic(SymbolPoint::from_tail(Tail::RotationCoding {
                    phase: reduce_unit(*x),
                    theta: *theta,
                })))
            }
            (Kind::Doubling | Kind::Sturmian { .. } | Kind::Bernoulli { .. }, PointSpec::Symbols { symbols }) => {
                let alphabet = match self.state_space() {
                    StateSpace::Shift { alphabet } => alphabet,
                    _ => 2,
                };
                if symbols.iter().any(|&s| s >= alphabet) {
                    return Err(bad());
                }
                Ok(Point::Symbolic(SymbolPoint::from_symbols(symbols, 0)))
            }
            (Kind::Odometer { base }, PointSpec::Digits { digits } | PointSpec::Symbols { symbols: digits }) => {
                if digits.iter().any(|&d| d >= *base) {
                    return Err(bad());
                }
                Ok(Point::Digits(DigitPoint {
                    base: *base,
                    digits: digits.clone(),
                    tail: Tail::Constant { symbol: 0 },
                }))
            }
            (Kind::Product(l, r), PointSpec::Pair(a, b)) => Ok(Point::Pair(
                Box::new(l.point_from_spec(a)?),
                Box::new(r.point_from_spec(b)?),
            )),
            _ => Err(bad()),
        }
    }

    /// `T^k x`; negative `k` applies the inverse map.
    pub fn step(&self, x: &Point, k: i64) -> Point {
        match (&self.kind, x) {
            (Kind::Identity, _) => x.clone(),
            (Kind::Rotation { theta }, Point::Circle(v)) => {
                Point::Circle(reduce_unit(v + frac_mul(k, *theta)))
            }
            (_, Point::Symbolic(s)) => Point::Symbolic(s.shifted(k)),
            (_, Point::Digits(d)) => {
                let mut out = d.clone();
                out.add(k);
                Point::Digits(out)
            }
            (Kind::Product(l, r), Point::Pair(a, b)) => {
                Point::Pair(Box::new(l.step(a, k)), Box::new(r.step(b, k)))
            }
            _ => x.clone(),
        }
    }

    /// Lazy forward orbit `x, Tx, T^2 x, ...`.
    pub fn trajectory(&self, x: &Point) -> Trajectory<'_> {
        Trajectory {
            system: self,
            base: x.clone(),
            current: x.clone(),
            index: 0,
        }
    }

    /// The first `n` points of the forward orbit of `x`.
    pub fn orbit(&self, x: &Point, n: usize) -> Vec<Point> {
        if matches!(x, Point::Circle(_)) {
            assert!(
                n <= MAX_CIRCLE_ORBIT,
                "circle orbits are capped at {MAX_CIRCLE_ORBIT} steps"
            );
        }
        self.trajectory(x).take(n).collect()
    }

    /// Distance between two points of the state space.
    pub fn metric(&self, x: &Point, y: &Point) -> f64 {
        match (&self.kind, x, y) {
            (_, Point::Circle(a), Point::Circle(b)) => {
                let t = (a - b).abs();
                t.min(1.0 - t)
            }
            (Kind::Doubling, Point::Symbolic(a), Point::Symbolic(b)) => {
                let t = (a.binary_value() - b.binary_value()).abs();
                t.min(1.0 - t)
            }
            (_, Point::Symbolic(a), Point::Symbolic(b)) => {
                let w = self.window as i64;
                (0..w)
                    .find(|&i| a.symbol(i) != b.symbol(i) || a.symbol(-i) != b.symbol(-i))
                    .map_or(0.0, |i| 0.5f64.powi(i as i32))
            }
            (_, Point::Digits(a), Point::Digits(b)) => (0..self.window)
                .find(|&i| a.digit(i) != b.digit(i))
                .map_or(0.0, |i| (a.base as f64).powi(-(i as i32))),
            (Kind::Product(l, r), Point::Pair(a1, b1), Point::Pair(a2, b2)) => {
                l.metric(a1, a2).max(r.metric(b1, b2))
            }
            _ => f64::NAN,
        }
    }

    /// One draw from the invariant measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.kind {
            Kind::Rotation { .. } | Kind::Identity => Point::Circle(rng.gen::<f64>()),
            Kind::Doubling => Point::Symbolic(SymbolPoint::from_tail(Tail::Categorical {
                seed: rng.gen(),
                p: 0.5,
                alphabet: 2,
            })),
            Kind::Bernoulli { p, alphabet } => {
                Point::Symbolic(SymbolPoint::from_tail(Tail::Categorical {
                    seed: rng.gen(),
                    p: *p,
                    alphabet: *alphabet,
                }))
            }
            Kind::Sturmian { theta } => {
                Point::Symbolic(SymbolPoint::from_tail(Tail::RotationCoding {
                    phase: rng.gen::<f64>(),
                    theta: *theta,
                }))
            }
            Kind::Odometer { base } => Point::Digits(DigitPoint {
                base: *base,
                digits: Vec::new(),
                tail: Tail::Categorical {
                    seed: rng.gen(),
                    p: (*base as f64 - 1.0) / *base as f64,
                    alphabet: *base,
                },
            }),
            Kind::Product(l, r) => Point::Pair(Box::new(l.sample(rng)), Box::new(r.sample(rng))),
        }
    }

    /// `count` i.i.d. draws; draw `j` uses stream `j` of the plan.
    pub fn sample_measure(&self, count: usize, plan: &RandomPlan) -> Vec<Point> {
        exec::map_indexed(count, |j| self.sample(&mut plan.rng(j as u64)))
    }
}

/// Iterator over a forward orbit.
///
/// Circle points are recomputed from the base point at every index so the
/// rounding error does not accumulate along the orbit.
pub struct Trajectory<'a> {
    system: &'a SystemHandle,
    base: Point,
    current: Point,
    index: i64,
}

impl Trajectory<'_> {
    fn advance(system: &SystemHandle, current: &mut Point, base: &Point, index: i64) {
        match current {
            Point::Circle(_) => *current = system.step(base, index),
            Point::Symbolic(s) => {
                if let Point::Symbolic(b) = base {
                    s.origin = b.origin + index;
                }
            }
            Point::Digits(d) => d.add(1),
            Point::Pair(a, b) => {
                if let (Some((l, r)), Point::Pair(ba, bb)) = (system.factors(), base) {
                    Self::advance(l, a, ba, index);
                    Self::advance(r, b, bb, index);
                }
            }
        }
    }
}

impl Iterator for Trajectory<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        if self.index > 0 {
            Self::advance(self.system, &mut self.current, &self.base, self.index);
        }
        self.index += 1;
        Some(self.current.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(spec: SystemSpec) -> SystemHandle {
        make_system(&spec).unwrap()
    }

    #[test]
    fn zero_rotation_is_identity() {
        let s = sys(SystemSpec::Rotation { theta: 0.0 });
        assert_eq!(s.step(&Point::circle(0.3), 5), Point::Circle(0.3));
        assert!(!s.warnings().is_empty());
    }

    #[test]
    fn rotation_step_examples() {
        let s = sys(SystemSpec::Rotation { theta: 0.25 });
        let y = s.step(&Point::circle(0.9), 1).as_circle().unwrap();
        assert!((y - 0.15).abs() < 1e-15);
        assert_eq!(s.step(&Point::circle(0.9), 0), Point::Circle(0.9));
    }

    #[test]
    fn doubling_steps() {
        let s = sys(SystemSpec::Doubling {});
        let x = s.point_from_spec(&PointSpec::Real(0.375)).unwrap();
        assert_eq!(s.circle_coordinate(&s.step(&x, 1)), Some(0.75));
        assert_eq!(s.circle_coordinate(&s.step(&x, 2)), Some(0.5));
        let orbit: Vec<f64> = s
            .orbit(&x, 3)
            .iter()
            .map(|p| s.circle_coordinate(p).unwrap())
            .collect();
        assert_eq!(orbit, vec![0.375, 0.75, 0.5]);
        // inverse of the dyadic point takes the left preimage
        assert_eq!(s.circle_coordinate(&s.step(&x, -1)), Some(0.1875));
    }

    #[test]
    fn shift_step_moves_origin() {
        let s = sys(SystemSpec::BernoulliShift {
            p: 0.5,
            alphabet_size: 2,
        });
        let x = s.sample(&mut RandomPlan::new(1).rng(0));
        let y = s.step(&x, 1);
        if let (Point::Symbolic(a), Point::Symbolic(b)) = (&x, &y) {
            for i in -10..10 {
                assert_eq!(b.symbol(i), a.symbol(i + 1));
            }
        } else {
            panic!("shift points are symbolic");
        }
    }

    #[test]
    fn identity_orbit() {
        let s = sys(SystemSpec::Identity {});
        assert_eq!(s.orbit(&Point::circle(0.3), 4), vec![Point::Circle(0.3); 4]);
    }

    #[test]
    fn metric_examples() {
        let c = sys(SystemSpec::Rotation { theta: 0.1 });
        assert!((c.metric(&Point::circle(0.1), &Point::circle(0.9)) - 0.2).abs() < 1e-15);
        let b = sys(SystemSpec::BernoulliShift {
            p: 0.5,
            alphabet_size: 2,
        });
        let x = b
            .point_from_spec(&PointSpec::Symbols {
                symbols: vec![1, 0, 1, 1, 0],
            })
            .unwrap();
        let y = b
            .point_from_spec(&PointSpec::Symbols {
                symbols: vec![1, 0, 1, 0, 0],
            })
            .unwrap();
        assert_eq!(b.metric(&x, &y), 0.125);
        assert_eq!(b.metric(&x, &x), 0.0);
    }

    #[test]
    fn odometer_step_inverts() {
        let s = sys(SystemSpec::Odometer { base: 3 });
        let x = s.sample(&mut RandomPlan::new(5).rng(2));
        let y = s.step(&s.step(&x, 17), -17);
        assert_eq!(s.metric(&x, &y), 0.0);
        let z = s.step(&x, 1);
        let w = s.trajectory(&x).nth(1).unwrap();
        assert_eq!(s.metric(&z, &w), 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(make_system(&SystemSpec::Rotation { theta: 1.5 }).is_err());
        assert!(make_system(&SystemSpec::BernoulliShift {
            p: 1.0,
            alphabet_size: 2
        })
        .is_err());
        assert!(make_system(&SystemSpec::Odometer { base: 1 }).is_err());
    }

    #[test]
    fn golden_rotation_is_not_flagged() {
        let s = sys(SystemSpec::Rotation {
            theta: golden_angle(),
        });
        assert!(s.warnings().is_empty());
    }

    #[test]
    fn spec_json_shape() {
        let spec = SystemSpec::Rotation { theta: 0.25 };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"family":"rotation","params":{"theta":0.25}}"#);
        let back: SystemSpec =
            serde_json::from_str(r#"{"family":"doubling","params":{}}"#).unwrap();
        assert_eq!(back, SystemSpec::Doubling {});
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = sys(SystemSpec::Sturmian {
            theta: golden_angle(),
        });
        let plan = RandomPlan::new(11);
        assert_eq!(s.sample_measure(50, &plan), s.sample_measure(50, &plan));
    }
}
