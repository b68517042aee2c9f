//! Closed rational intervals and boxes.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[String; 2]", try_from = "[String; 2]")]
pub struct Interval {
    lo: Scalar,
    hi: Scalar,
}

impl From<Interval> for [String; 2] {
    fn from(i: Interval) -> Self {
        [scalar::format(&i.lo), scalar::format(&i.hi)]
    }
}

impl TryFrom<[String; 2]> for Interval {
    type Error = Error;

    fn try_from([lo, hi]: [String; 2]) -> Result<Self> {
        Interval::new(scalar::parse(&lo)?, scalar::parse(&hi)?)
    }
}

impl Interval {
    pub fn new(lo: Scalar, hi: Scalar) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInput(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: Scalar) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    /// `[-r, r]`; `r` must be non-negative.
    pub fn symmetric(r: Scalar) -> Result<Self> {
        Interval::new(-r.clone(), r)
    }

    pub fn lo(&self) -> &Scalar {
        &self.lo
    }

    pub fn hi(&self) -> &Scalar {
        &self.hi
    }

    pub fn width(&self) -> Scalar {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Scalar {
        (&self.lo + &self.hi) / Scalar::from_integer(2.into())
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `c·self + d` evaluated exactly.
    pub fn affine(&self, c: &Scalar, d: &Scalar) -> Interval {
        let (a, b) = (c * &self.lo + d, c * &self.hi + d);
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    /// Pulls each endpoint inward by `margin`; a zero-width interval is left
    /// as is. Returns `None` when a positive-width interval is consumed.
    pub fn shrink(&self, margin: &Scalar) -> Option<Interval> {
        if self.lo == self.hi {
            return Some(self.clone());
        }
        let (lo, hi) = (&self.lo + margin, &self.hi - margin);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn magnitude(&self) -> Scalar {
        let (a, b) = (self.lo.abs(), self.hi.abs());
        if a > b {
            a
        } else {
            b
        }
    }
}

/// A product of closed intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoxN {
    intervals: Vec<Interval>,
}

impl BoxN {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidInput("a box needs at least one axis".into()));
        }
        Ok(BoxN { intervals })
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn axis(&self, i: usize) -> &Interval {
        &self.intervals[i]
    }

    pub fn contains_box(&self, other: &BoxN) -> bool {
        self.dim() == other.dim()
            && self.intervals.iter().zip(&other.intervals).all(|(a, b)| a.contains_interval(b))
    }

    pub fn contains_point(&self, x: &[Scalar]) -> bool {
        x.len() == self.dim() && self.intervals.iter().zip(x).all(|(i, v)| i.contains(v))
    }

    pub fn shrink(&self, margin: &Scalar) -> Option<BoxN> {
        self.intervals
            .iter()
            .map(|i| i.shrink(margin))
            .collect::<Option<Vec<_>>>()
            .map(|intervals| BoxN { intervals })
    }

    /// Index of the first widest axis.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        let mut width = self.intervals[0].width();
        for (i, iv) in self.intervals.iter().enumerate().skip(1) {
            let w = iv.width();
            if w > width {
                best = i;
                width = w;
            }
        }
        best
    }

    pub fn is_degenerate(&self) -> bool {
        self.intervals.iter().all(|i| i.width().is_zero())
    }

    /// Halves the longest axis at its exact midpoint.
    pub fn bisect(&self) -> (BoxN, BoxN) {
        let axis = self.longest_axis();
        let mid = self.intervals[axis].midpoint();
        let mut left = self.clone();
        let mut right = self.clone();
        left.intervals[axis].hi = mid.clone();
        right.intervals[axis].lo = mid;
        (left, right)
    }
}
