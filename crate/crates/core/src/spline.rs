//! Quintic Hermite splines through sampled data.
//!
//! Node first and second derivatives are estimated from the five nearest
//! samples (exact for quartics), then each knot interval carries the unique
//! quintic matching value, slope and curvature at both ends. The result is
//! C² across knots; the third derivative is piecewise and jumps at interior
//! knots, which are therefore reported as breakpoints. Third derivatives
//! inherit the accuracy of the node estimates and should be read as
//! approximate.

use num_complex::Complex64;

use crate::error::{Error, Result};

const STENCIL: usize = 5;

#[derive(Clone, Debug)]
pub struct QuinticSpline {
    knots: Vec<f64>,
    /// Per interval: polynomial coefficients in the local variable u ∈ [0, 1].
    segments: Vec<[Complex64; 6]>,
}

/// Finite-difference weights (Fornberg) for derivatives 0..=2 at `x0`.
fn fornberg_weights(x0: f64, xs: &[f64]) -> [Vec<f64>; 3] {
    let n = xs.len();
    let m = 2;
    let mut c = vec![vec![vec![0.0; n]; n]; m + 1];
    c[0][0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            for k in 0..=m.min(i) {
                let prev_i = c[k][i - 1][j];
                let prev_km = if k > 0 { c[k - 1][i - 1][j] } else { 0.0 };
                c[k][i][j] = ((xs[i] - x0) * prev_i - k as f64 * prev_km) / c3;
            }
        }
        for k in 0..=m.min(i) {
            let prev_km = if k > 0 { c[k - 1][i - 1][i - 1] } else { 0.0 };
            let prev_k = c[k][i - 1][i - 1];
            c[k][i][i] = c1 / c2 * (k as f64 * prev_km - (xs[i - 1] - x0) * prev_k);
        }
        c1 = c2;
    }
    [
        c[0][n - 1].clone(),
        c[1][n - 1].clone(),
        c[2][n - 1].clone(),
    ]
}

impl QuinticSpline {
    pub fn new(knots: &[f64], values: &[Complex64]) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidFamily(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.len() < STENCIL + 1 {
            return Err(Error::InvalidFamily(format!(
                "spline needs at least {} samples, got {}",
                STENCIL + 1,
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidFamily(
                "sample parameters must be strictly increasing".into(),
            ));
        }
        let n = knots.len();
        let mut d1 = vec![Complex64::new(0.0, 0.0); n];
        let mut d2 = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let lo = i.saturating_sub(STENCIL / 2).min(n - STENCIL);
            let xs = &knots[lo..lo + STENCIL];
            let [_, w1, w2] = fornberg_weights(knots[i], xs);
            for (j, (a, b)) in w1.iter().zip(&w2).enumerate() {
                d1[i] += values[lo + j] * *a;
                d2[i] += values[lo + j] * *b;
            }
        }
        let segments = (0..n - 1)
            .map(|i| {
                let h = knots[i + 1] - knots[i];
                let a0 = values[i];
                let a1 = d1[i] * h;
                let a2 = d2[i] * (h * h / 2.0);
                let big_a = values[i + 1] - (a0 + a1 + a2);
                let big_b = d1[i + 1] * h - (a1 + a2 * 2.0);
                let big_c = d2[i + 1] * (h * h) - a2 * 2.0;
                let a3 = big_a * 10.0 - big_b * 4.0 + big_c * 0.5;
                let a4 = big_a * -15.0 + big_b * 7.0 - big_c;
                let a5 = big_a * 6.0 - big_b * 3.0 + big_c * 0.5;
                [a0, a1, a2, a3, a4, a5]
            })
            .collect();
        Ok(QuinticSpline {
            knots: knots.to_vec(),
            segments,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Interior knots, where the third derivative may jump.
    pub fn breakpoints(&self) -> &[f64] {
        &self.knots[1..self.knots.len() - 1]
    }

    /// Value and derivatives 1..=3 at `t`. `left` selects the segment ending
    /// at `t` when `t` is a knot.
    pub fn derivatives(&self, t: f64, left: bool) -> [Complex64; 4] {
        let n = self.knots.len();
        let seg = match self.knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => {
                if (left && i > 0) || i == n - 1 {
                    i - 1
                } else {
                    i
                }
            }
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let t0 = self.knots[seg];
        let h = self.knots[seg + 1] - t0;
        let u = (t - t0) / h;
        let a = &self.segments[seg];
        let zero = Complex64::new(0.0, 0.0);
        let mut p = [zero; 4];
        // Horner on each derivative of the quintic in u.
        for k in 0..4 {
            let mut acc = zero;
            for j in (k..6).rev() {
                let falling: f64 = ((j - k + 1)..=j).map(|m| m as f64).product();
                acc = acc * u + a[j] * falling;
            }
            p[k] = acc / h.powi(k as i32);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(t: f64) -> Complex64 {
        Complex64::new(1.0 - 2.0 * t + 0.5 * t * t * t, 0.3 * t * t - t)
    }

    fn cubic_d1(t: f64) -> Complex64 {
        Complex64::new(-2.0 + 1.5 * t * t, 0.6 * t - 1.0)
    }

    #[test]
    fn reproduces_cubics_on_irregular_knots() {
        let knots: Vec<f64> = (0..12).map(|i| i as f64 * 0.3 + 0.01 * (i * i) as f64).collect();
        let vals: Vec<Complex64> = knots.iter().map(|&t| cubic(t)).collect();
        let s = QuinticSpline::new(&knots, &vals).unwrap();
        for k in 0..200 {
            let t = knots[0] + (knots[11] - knots[0]) * k as f64 / 199.0;
            let d = s.derivatives(t, false);
            assert!((d[0] - cubic(t)).norm() < 1e-10, "value at {t}");
            assert!((d[1] - cubic_d1(t)).norm() < 1e-9, "slope at {t}");
        }
    }

    #[test]
    fn continuity_through_second_derivative() {
        let knots: Vec<f64> = (0..10).map(|i| i as f64 * 0.25).collect();
        let vals: Vec<Complex64> = knots
            .iter()
            .map(|&t| Complex64::new(t.sin(), (2.0 * t).cos()))
            .collect();
        let s = QuinticSpline::new(&knots, &vals).unwrap();
        for &b in s.breakpoints() {
            let l = s.derivatives(b, true);
            let r = s.derivatives(b, false);
            for k in 0..3 {
                assert!((l[k] - r[k]).norm() < 1e-9, "order {k} at {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_samples() {
        let k = [0.0, 1.0, 2.0];
        let v = [Complex64::new(0.0, 0.0); 3];
        assert!(QuinticSpline::new(&k, &v).is_err());
        let k = [0.0, 1.0, 1.0, 2.0, 3.0, 4.0];
        let v = [Complex64::new(0.0, 0.0); 6];
        assert!(QuinticSpline::new(&k, &v).is_err());
    }
}
