//! Closed real intervals with inclusion-isotone arithmetic.
//!
//! Endpoints are computed in ordinary floating point (no directed rounding);
//! the thresholds built from these intervals are several orders of magnitude
//! wider than one ulp.

use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// Builds `[lo, hi]`, rejecting reversed or NaN endpoints.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::InvalidInput("interval lower bound exceeds upper bound"))
        }
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// `[center - radius, center + radius]`; `radius` must be non-negative.
    pub fn centered(center: f64, radius: f64) -> Result<Self> {
        if radius >= 0.0 {
            Interval::new(center - radius, center + radius)
        } else {
            Err(Error::InvalidInput("negative interval radius"))
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Closed-set membership: boundary values are inside.
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn scale(&self, k: f64) -> Interval {
        let (a, b) = (k * self.lo, k * self.hi);
        Interval { lo: a.min(b), hi: a.max(b) }
    }

    /// Interval quotient; fails when the divisor contains zero.
    pub fn checked_div(&self, rhs: &Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(min_max([self.lo / rhs.lo, self.lo / rhs.hi, self.hi / rhs.lo, self.hi / rhs.hi]))
    }

    /// Tangent, defined for intervals strictly inside (−π/2, π/2) where it is monotone.
    pub fn tan(&self) -> Result<Interval> {
        let half_pi = core::f64::consts::FRAC_PI_2;
        if self.lo > -half_pi && self.hi < half_pi {
            Ok(Interval { lo: self.lo.tan(), hi: self.hi.tan() })
        } else {
            Err(Error::TanDomain)
        }
    }

    /// Range of `sign(x)` over the interval; `[-1, 1]` when zero is interior.
    pub fn signum(&self) -> Interval {
        let sign = |x: f64| {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        };
        Interval { lo: sign(self.lo), hi: sign(self.hi) }
    }

    /// Range of `x·|x|`, which is monotone increasing.
    pub fn signed_square(&self) -> Interval {
        Interval { lo: self.lo * self.lo.abs(), hi: self.hi * self.hi.abs() }
    }
}

fn min_max(v: [f64; 4]) -> Interval {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Interval { lo, hi }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval { lo: self.lo + rhs.lo, hi: self.hi + rhs.hi }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval { lo: self.lo - rhs.hi, hi: self.hi - rhs.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        min_max([self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi])
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, k: f64) -> Interval {
        self.scale(k)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// True iff every coordinate of `point` lies in the matching interval.
pub fn hull_contains(hull: &[Interval], point: &[f64]) -> bool {
    hull.len() == point.len() && hull.iter().zip(point).all(|(iv, &x)| iv.contains(x))
}
