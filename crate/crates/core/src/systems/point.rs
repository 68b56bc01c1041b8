use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::plan::{hash_pair, unit_from_hash};

/// Reduces a real number into [0, 1).
pub fn reduce_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Fractional part of `k * theta` with the product's rounding error folded back in.
pub fn frac_mul(k: i64, theta: f64) -> f64 {
    let kf = k as f64;
    let hi = kf * theta;
    let lo = kf.mul_add(theta, -hi);
    reduce_unit((hi - hi.floor()) + lo)
}

/// Rule extending a symbol sequence beyond its explicit prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Tail {
    /// Every unspecified index carries the same symbol.
    Constant { symbol: u8 },
    /// i.i.d. symbols keyed by (seed, index): symbol 0 with probability
    /// `1 - p`, the remaining symbols share `p` equally.
    Categorical { seed: u64, p: f64, alphabet: u8 },
    /// Two-interval coding of a rotation: symbol 1 iff `phase + i*theta`
    /// lands in `[1 - theta, 1)`.
    RotationCoding { phase: f64, theta: f64 },
}

impl Tail {
    pub fn symbol(&self, index: i64) -> u8 {
        match *self {
            Tail::Constant { symbol } => symbol,
            Tail::Categorical { seed, p, alphabet } => {
                let u = unit_from_hash(hash_pair(seed, index as u64));
                let zero_mass = 1.0 - p;
                if u < zero_mass || alphabet < 2 {
                    0
                } else {
                    let others = (alphabet - 1) as f64;
                    let k = ((u - zero_mass) / p * others) as u64;
                    (1 + k.min(alphabet as u64 - 2)) as u8
                }
            }
            Tail::RotationCoding { phase, theta } => {
                let y = reduce_unit(phase + frac_mul(index, theta));
                u8::from(y >= 1.0 - theta)
            }
        }
    }
}

/// A two-sided symbol sequence viewed from `origin`.
///
/// Index `j` of the point reads absolute position `origin + j`; positions in
/// `[start, start + prefix.len())` come from the explicit prefix, all others
/// from the tail rule. Shifting only moves `origin`, so the sequence itself is
/// never copied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolPoint {
    pub origin: i64,
    pub start: i64,
    pub prefix: Arc<[u8]>,
    pub tail: Tail,
}

impl SymbolPoint {
    pub fn from_tail(tail: Tail) -> Self {
        Self {
            origin: 0,
            start: 0,
            prefix: Arc::from(Vec::new()),
            tail,
        }
    }

    /// Explicit symbols at indices `0..symbols.len()`, `fill` elsewhere.
    pub fn from_symbols(symbols: &[u8], fill: u8) -> Self {
        Self {
            origin: 0,
            start: 0,
            prefix: Arc::from(symbols.to_vec()),
            tail: Tail::Constant { symbol: fill },
        }
    }

    #[inline]
    pub fn symbol(&self, j: i64) -> u8 {
        let a = self.origin + j;
        let rel = a - self.start;
        if rel >= 0 && (rel as usize) < self.prefix.len() {
            self.prefix[rel as usize]
        } else {
            self.tail.symbol(a)
        }
    }

    pub fn shifted(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.origin += k;
        out
    }

    /// Real number with binary digits `symbol(0), symbol(1), ...` (53 bits).
    pub fn binary_value(&self) -> f64 {
        let mut v: u64 = 0;
        for j in 0..53 {
            v = (v << 1) | (self.symbol(j) & 1) as u64;
        }
        v as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Binary expansion of `x` in [0, 1) truncated at 64 bits, zeros beyond.
    pub fn from_binary(x: f64) -> Self {
        let v = (reduce_unit(x) * 18_446_744_073_709_551_616.0) as u64;
        let bits: Vec<u8> = (0..64).map(|j| ((v >> (63 - j)) & 1) as u8).collect();
        Self::from_symbols(&bits, 0)
    }
}

/// One-sided digit sequence of an odometer point, least significant digit first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitPoint {
    pub base: u8,
    pub digits: Vec<u8>,
    pub tail: Tail,
}

/// Longest digit prefix an odometer addition may materialize.
const MAX_CARRY_DIGITS: usize = 1 << 16;

impl DigitPoint {
    pub fn digit(&self, j: usize) -> u8 {
        if j < self.digits.len() {
            self.digits[j]
        } else {
            self.tail.symbol(j as i64)
        }
    }

    /// Adds `k` as a `base`-adic integer (negative `k` borrows).
    pub fn add(&mut self, k: i64) {
        let b = self.base as i128;
        let mut carry = k as i128;
        let mut j = 0usize;
        while carry != 0 {
            if j >= self.digits.len() {
                if let Tail::Constant { symbol } = self.tail {
                    let next = symbol as i128 + carry;
                    if next.div_euclid(b) == carry {
                        // carry reproduces itself on every remaining digit
                        self.tail = Tail::Constant {
                            symbol: next.rem_euclid(b) as u8,
                        };
                        return;
                    }
                }
                if j >= MAX_CARRY_DIGITS {
                    return;
                }
                let d = self.tail.symbol(j as i64);
                self.digits.push(d);
            }
            let next = self.digits[j] as i128 + carry;
            self.digits[j] = next.rem_euclid(b) as u8;
            carry = next.div_euclid(b);
            j += 1;
        }
    }
}

/// A point of one of the catalog state spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    /// Circle coordinate in [0, 1).
    Circle(f64),
    /// Two-sided symbol sequence (shifts, Sturmian codings, binary expansions).
    Symbolic(SymbolPoint),
    /// Odometer digits.
    Digits(DigitPoint),
    Pair(Box<Point>, Box<Point>),
}

impl Point {
    pub fn circle(x: f64) -> Self {
        Point::Circle(reduce_unit(x))
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Point::Circle(_) => "circle",
            Point::Symbolic(_) => "symbolic",
            Point::Digits(_) => "odometer",
            Point::Pair(..) => "product",
        }
    }

    pub fn as_circle(&self) -> Option<f64> {
        match self {
            Point::Circle(x) => Some(*x),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_handles_negatives() {
        assert_eq!(reduce_unit(-0.25), 0.75);
        assert_eq!(reduce_unit(1.0), 0.0);
        assert_eq!(reduce_unit(-1e-18), 0.0);
    }

    #[test]
    fn frac_mul_large_multiples() {
        let theta = 0.25;
        assert_eq!(frac_mul(3, theta), 0.75);
        assert_eq!(frac_mul(-1, theta), 0.75);
        assert_eq!(frac_mul(1_000_001, theta), 0.25);
    }

    #[test]
    fn categorical_tail_is_deterministic() {
        let t = Tail::Categorical {
            seed: 9,
            p: 0.5,
            alphabet: 3,
        };
        for i in -50..50 {
            assert_eq!(t.symbol(i), t.symbol(i));
            assert!(t.symbol(i) < 3);
        }
    }

    #[test]
    fn binary_roundtrip_of_dyadic() {
        let p = SymbolPoint::from_binary(0.375);
        assert_eq!(p.symbol(0), 0);
        assert_eq!(p.symbol(1), 1);
        assert_eq!(p.symbol(2), 1);
        assert_eq!(p.binary_value(), 0.375);
        assert_eq!(p.shifted(1).binary_value(), 0.75);
    }

    #[test]
    fn odometer_carry_and_borrow() {
        let mut d = DigitPoint {
            base: 2,
            digits: vec![1, 1, 0],
            tail: Tail::Constant { symbol: 0 },
        };
        d.add(1);
        assert_eq!(&d.digits, &[0, 0, 1]);
        d.add(-5);
        // 4 - 5 = -1: all ones
        assert_eq!(&d.digits, &[1, 1, 1]);
        assert_eq!(d.tail, Tail::Constant { symbol: 1 });
        d.add(1);
        assert_eq!(&d.digits, &[0, 0, 0]);
        assert_eq!(d.tail, Tail::Constant { symbol: 0 });
    }
}
