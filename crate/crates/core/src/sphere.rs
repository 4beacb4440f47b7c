//! Points of the Riemann sphere in a two-chart representation.

use num_complex::Complex64;
use serde::{Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    pub fn finite(re: f64, im: f64) -> Self {
        SpherePoint::Finite(Complex64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match self {
            SpherePoint::Finite(w) => Some(*w),
            SpherePoint::Infinity => None,
        }
    }

    /// Image under `ζ ↦ 1 / (ζ - a)`; `∞ ↦ 0`, `a ↦ ∞`.
    pub fn invert_about(&self, a: Complex64) -> SpherePoint {
        match self {
            SpherePoint::Infinity => SpherePoint::Finite(Complex64::new(0.0, 0.0)),
            SpherePoint::Finite(w) => {
                let d = w - a;
                if d == Complex64::new(0.0, 0.0) {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite(d.inv())
                }
            }
        }
    }

    /// Chordal distance on the unit-diameter-2 sphere.
    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        match (self, other) {
            (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
            (SpherePoint::Finite(w), SpherePoint::Infinity)
            | (SpherePoint::Infinity, SpherePoint::Finite(w)) => 2.0 / (1.0 + w.norm_sqr()).sqrt(),
            (SpherePoint::Finite(a), SpherePoint::Finite(b)) => {
                2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
            }
        }
    }
}

impl Serialize for SpherePoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SpherePoint::Finite(w) => [w.re, w.im].serialize(s),
            SpherePoint::Infinity => "infinity".serialize(s),
        }
    }
}

/// Coordinates of a loop sample in one of two charts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// The sample is `w` itself.
    Finite,
    /// The sample is `u = 1 / (w - a)` for the loop's chart base `a`.
    Inverted,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversion_swaps_zero_and_infinity() {
        let a = Complex64::new(1.0, -2.0);
        assert_eq!(SpherePoint::Infinity.invert_about(a), SpherePoint::finite(0.0, 0.0));
        assert_eq!(SpherePoint::Finite(a).invert_about(a), SpherePoint::Infinity);
        let w = SpherePoint::finite(3.0, 1.0);
        let u = w.invert_about(a).as_finite().unwrap();
        assert!((a + u.inv() - Complex64::new(3.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn chordal_metric_is_bounded_and_symmetric() {
        let p = SpherePoint::finite(1e8, 0.0);
        assert!(p.chordal_distance(&SpherePoint::Infinity) < 1e-7);
        let a = SpherePoint::finite(0.0, 0.0);
        assert!((a.chordal_distance(&SpherePoint::Infinity) - 2.0).abs() < 1e-15);
        let b = SpherePoint::finite(0.3, -0.4);
        assert_eq!(a.chordal_distance(&b), b.chordal_distance(&a));
    }
}
