//! The region of interest: a closed interval on the real line.

use serde::{Deserialize, Serialize};

/// Closed interval `[lo, hi]` with `lo < hi`.
///
/// Serialized as a two-element array, e.g. `[0.0, 10.0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// Builds the interval, rejecting empty or non-finite ranges.
    pub fn new(lo: f64, hi: f64) -> Result<Self, InvalidInterval> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(InvalidInterval { lo, hi })
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

    /// Membership test, inclusive at both endpoints.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Uniform grid of `points >= 2` values with both endpoints included.
    ///
    /// The last value is exactly `hi` (no float drift at the right edge).
    pub fn grid(&self, points: usize) -> Vec<f64> {
        assert!(points >= 2, "a grid needs at least both endpoints");
        let step = self.width() / (points - 1) as f64;
        (0..points)
            .map(|i| {
                if i + 1 == points {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

/// Raised when an interval has `lo >= hi` or non-finite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("invalid interval [{lo}, {hi}]: bounds must be finite with lo < hi")]
pub struct InvalidInterval {
    pub lo: f64,
    pub hi: f64,
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = InvalidInterval;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contains_is_inclusive_at_endpoints() {
        let d = Interval::new(0.0, 10.0).unwrap();
        assert!(d.contains(0.0));
        assert!(d.contains(10.0));
        assert!(d.contains(5.0));
        assert!(!d.contains(-1e-12));
        assert!(!d.contains(10.0 + 1e-12));
    }

    #[test]
    fn rejects_degenerate_ranges() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NEG_INFINITY, 0.0).is_err());
        assert!(Interval::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn grid_includes_both_endpoints_exactly() {
        let d = Interval::new(0.0, 10.0).unwrap();
        let g = d.grid(101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 10.0);
        assert_eq!(g[1], 0.1);
        let two = d.grid(2);
        assert_eq!(two, vec![0.0, 10.0]);
    }

    #[test]
    fn serde_round_trip_as_pair() {
        let d = Interval::new(-1.5, 2.5).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(text, "[-1.5,2.5]");
        let back: Interval = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        let bad: Result<Interval, _> = serde_json::from_str("[3.0,1.0]");
        assert!(bad.is_err());
    }
}
