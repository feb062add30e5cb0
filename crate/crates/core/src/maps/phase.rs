//! Circle coordinates.
//!
//! Unperturbed base maps are linear with integer coefficients, so a base
//! coordinate stored as a 64-bit binary fraction `k / 2^64` evolves exactly
//! under wrapping integer arithmetic (`x -> 3x` is `k -> 3k mod 2^64`).
//! Perturbed base maps fall back to `f64`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;
const HALF_TURN: u64 = 1 << 63;

/// A point of the circle `R/Z` held as the exact binary fraction `k / 2^64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Phase(pub u64);

impl Phase {
    pub const ZERO: Phase = Phase(0);
    pub const HALF: Phase = Phase(HALF_TURN);

    /// Phase nearest below `x mod 1`.
    pub fn from_f64(x: f64) -> Phase {
        let r = x - x.floor();
        let scaled = r * TWO_POW_64;
        if scaled.is_nan() || scaled >= TWO_POW_64 {
            return Phase::ZERO;
        }
        Phase(scaled as u64)
    }

    /// Exact phase of `num / den` when `den` is a power of two no larger than `2^64`.
    pub fn from_dyadic(num: u64, den: u64) -> Option<Phase> {
        if den == 0 || !den.is_power_of_two() {
            return None;
        }
        let shift = 64 - den.trailing_zeros();
        let k = (num % den) as u128;
        Some(Phase((k << shift) as u64))
    }

    pub fn to_f64(self) -> f64 {
        let v = self.0 as f64 / TWO_POW_64;
        if v >= 1.0 {
            0.0
        } else {
            v
        }
    }

    #[inline]
    pub fn triple(self) -> Phase {
        Phase(self.0.wrapping_mul(3))
    }

    #[inline]
    pub fn wrapping_add(self, other: Phase) -> Phase {
        Phase(self.0.wrapping_add(other.0))
    }

    #[inline]
    pub fn wrapping_mul(self, m: u64) -> Phase {
        Phase(self.0.wrapping_mul(m))
    }

    #[inline]
    pub fn shift_half(self) -> Phase {
        Phase(self.0.wrapping_add(HALF_TURN))
    }

    /// `cos(2πx)`, reduced through the half turn so that
    /// `(x + 1/2).cos_turn() == -x.cos_turn()` holds bit for bit.
    #[inline]
    pub fn cos_turn(self) -> f64 {
        if self.0 >= HALF_TURN {
            -(TAU * ((self.0 - HALF_TURN) as f64 / TWO_POW_64)).cos()
        } else {
            (TAU * (self.0 as f64 / TWO_POW_64)).cos()
        }
    }

    /// `(sin 2πx, cos 2πx)` with the same half-turn antisymmetry as [`Phase::cos_turn`].
    #[inline]
    pub fn sin_cos_turn(self) -> (f64, f64) {
        if self.0 >= HALF_TURN {
            let (s, c) = (TAU * ((self.0 - HALF_TURN) as f64 / TWO_POW_64)).sin_cos();
            (-s, -c)
        } else {
            (TAU * (self.0 as f64 / TWO_POW_64)).sin_cos()
        }
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phase({:#018x} ~ {})", self.0, self.to_f64())
    }
}

/// A circle coordinate: exact when the base dynamics allow it, `f64` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coord {
    Exact(Phase),
    Float(f64),
}

impl Coord {
    pub fn value(self) -> f64 {
        match self {
            Coord::Exact(p) => p.to_f64(),
            Coord::Float(x) => x,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Coord::Exact(_))
    }

    pub fn phase(self) -> Phase {
        match self {
            Coord::Exact(p) => p,
            Coord::Float(x) => Phase::from_f64(x),
        }
    }

    pub fn to_float(self) -> Coord {
        Coord::Float(self.value())
    }

    #[inline]
    pub fn cos_turn(self) -> f64 {
        match self {
            Coord::Exact(p) => p.cos_turn(),
            Coord::Float(x) => (TAU * x).cos(),
        }
    }

    #[inline]
    pub fn sin_cos_turn(self) -> (f64, f64) {
        match self {
            Coord::Exact(p) => p.sin_cos_turn(),
            Coord::Float(x) => (TAU * x).sin_cos(),
        }
    }

    /// Integer-linear combination `m0·self + m1·other mod 1`.
    #[inline]
    pub fn combine(self, m0: i64, other: Coord, m1: i64) -> Coord {
        match (self, other) {
            (Coord::Exact(p), Coord::Exact(q)) => {
                Coord::Exact(Phase(p.0.wrapping_mul(m0 as u64).wrapping_add(q.0.wrapping_mul(m1 as u64))))
            }
            _ => Coord::Float(wrap_unit(m0 as f64 * self.value() + m1 as f64 * other.value())),
        }
    }

    #[inline]
    pub fn scale(self, m: i64) -> Coord {
        match self {
            Coord::Exact(p) => Coord::Exact(p.wrapping_mul(m as u64)),
            Coord::Float(x) => Coord::Float(wrap_unit(m as f64 * x)),
        }
    }

    pub fn shift_half(self) -> Coord {
        match self {
            Coord::Exact(p) => Coord::Exact(p.shift_half()),
            Coord::Float(x) => Coord::Float(wrap_unit(x + 0.5)),
        }
    }
}

impl From<Phase> for Coord {
    fn from(p: Phase) -> Self {
        Coord::Exact(p)
    }
}

/// Reduce to `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}
