//! Boundary traces of `f` on single circles and their holomorphic extensions.
//!
//! A trace stores `N` samples `f(c + r e^{iθ_j})` and the discrete Laurent
//! coefficients `a_n`, `-N/2 ≤ n < N/2`. The restriction extends
//! holomorphically into the disc iff the negative coefficients vanish; the
//! extension is the power series built from the nonnegative ones.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::CircleFamily;
use crate::function::FunctionSpec;

pub const DEFAULT_TRACE_SAMPLES: usize = 256;

/// Points with `|z - c| / r` up to `1 + CLOSED_DISC_SLACK` are accepted as on
/// the closed disc.
const CLOSED_DISC_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryTrace {
    pub t: f64,
    pub center: Complex64,
    pub radius: f64,
    pub n: usize,
    pub values: Vec<Complex64>,
    /// `a_{-N/2}, …, a_{N/2 - 1}`.
    pub coefficients: Vec<Complex64>,
}

impl BoundaryTrace {
    /// Laurent coefficient `a_k`; zero outside the stored band.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            Complex64::new(0.0, 0.0)
        } else {
            self.coefficients[(k + half) as usize]
        }
    }

    /// Nonnegative-frequency coefficients `a_0, …, a_{N/2 - 1}`.
    pub fn analytic_part(&self) -> &[Complex64] {
        &self.coefficients[self.n / 2..]
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n as f64
    }

    /// `max_{n<0} |a_n|`.
    pub fn extendibility_defect(&self) -> f64 {
        self.coefficients[..self.n / 2]
            .iter()
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }

    /// Value of the extension `f_t` at a strictly interior point.
    pub fn evaluate_extension(&self, z: Complex64) -> Result<Complex64> {
        let ratio = (z - self.center).norm() / self.radius;
        if !(ratio < 1.0) {
            return Err(Error::NotInterior { ratio });
        }
        Ok(self.series(z))
    }

    /// Extension on the closed disc (boundary included, up to a small slack).
    pub(crate) fn evaluate_closed(&self, z: Complex64) -> Result<Complex64> {
        let ratio = (z - self.center).norm() / self.radius;
        if !(ratio <= 1.0 + CLOSED_DISC_SLACK) {
            return Err(Error::NotInterior { ratio });
        }
        Ok(self.series(z))
    }

    fn series(&self, z: Complex64) -> Complex64 {
        let zeta = (z - self.center) / self.radius;
        self.analytic_part()
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, a| acc * zeta + a)
    }
}

/// Reusable FFT plan for traces of one size.
#[derive(Clone)]
pub struct TraceSampler {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    nodes: Vec<Complex64>,
}

impl std::fmt::Debug for TraceSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TraceSampler").field("n", &self.n).finish()
    }
}

impl TraceSampler {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "trace size {n} must be a power of two ≥ 16"
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(n);
        let nodes = (0..n)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
            .collect();
        Ok(TraceSampler { n, fft, nodes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample(&self, f: &FunctionSpec, family: &CircleFamily, t: f64) -> Result<BoundaryTrace> {
        let (center, radius) = family.jet0(t)?;
        let values = self
            .nodes
            .iter()
            .map(|e| f.eval(center + e * radius))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.from_values(t, center, radius, values))
    }

    pub fn from_values(
        &self,
        t: f64,
        center: Complex64,
        radius: f64,
        values: Vec<Complex64>,
    ) -> BoundaryTrace {
        let n = self.n;
        let mut buf = values.clone();
        self.fft.process(&mut buf);
        let scale = 1.0 / n as f64;
        // FFT bin k holds frequency k for k < N/2 and k - N above.
        let mut coefficients = Vec::with_capacity(n);
        coefficients.extend(buf[n / 2..].iter().map(|v| v * scale));
        coefficients.extend(buf[..n / 2].iter().map(|v| v * scale));
        BoundaryTrace {
            t,
            center,
            radius,
            n,
            values,
            coefficients,
        }
    }
}

pub fn sample_trace(f: &FunctionSpec, family: &CircleFamily, t: f64, n: usize) -> Result<BoundaryTrace> {
    TraceSampler::new(n)?.sample(f, family, t)
}

/// Source of the per-circle extensions `f_t(z)`.
pub trait ExtensionSource {
    /// `f_t(z)` for `z` in the closed disc `D̄_t`.
    fn extension(&self, t: f64, z: Complex64) -> Result<Complex64>;
}

impl<F> ExtensionSource for F
where
    F: Fn(f64, Complex64) -> Result<Complex64>,
{
    fn extension(&self, t: f64, z: Complex64) -> Result<Complex64> {
        self(t, z)
    }
}

/// Extensions computed from boundary traces of a function spec.
#[derive(Clone, Debug)]
pub struct TraceExtensions<'a> {
    pub family: &'a CircleFamily,
    pub f: &'a FunctionSpec,
    pub sampler: TraceSampler,
    /// Traces with a larger defect are rejected.
    pub defect_threshold: Option<f64>,
}

impl<'a> TraceExtensions<'a> {
    pub fn new(family: &'a CircleFamily, f: &'a FunctionSpec, n: usize) -> Result<Self> {
        Ok(TraceExtensions {
            family,
            f,
            sampler: TraceSampler::new(n)?,
            defect_threshold: None,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.defect_threshold = Some(threshold);
        self
    }
}

impl ExtensionSource for TraceExtensions<'_> {
    fn extension(&self, t: f64, z: Complex64) -> Result<Complex64> {
        let trace = self.sampler.sample(self.f, self.family, t)?;
        if let Some(threshold) = self.defect_threshold {
            let defect = trace.extendibility_defect();
            if defect > threshold {
                return Err(Error::Extendibility { t, defect, threshold });
            }
        }
        trace.evaluate_closed(z)
    }
}

/// `max |f_t(z) - f_s(z)|` over sampled `t, s` whose discs contain `z` in
/// their interior.
pub fn consistency_defect(
    f: &FunctionSpec,
    family: &CircleFamily,
    z: Complex64,
    n_t: usize,
    n: usize,
) -> Result<f64> {
    // Parameters whose circle passes within this relative band of z are skipped.
    const ENDPOINT_BAND: f64 = 1e-6;
    let sampler = TraceSampler::new(n)?;
    let mut values = Vec::new();
    for t in family.grid(n_t) {
        let (c, r) = family.jet0(t)?;
        if (z - c).norm() < r * (1.0 - ENDPOINT_BAND) {
            values.push(sampler.sample(f, family, t)?.evaluate_extension(z)?);
        }
    }
    if values.len() < 2 {
        return Err(Error::FewerThanTwoDiscs { count: values.len() });
    }
    let mut worst: f64 = 0.0;
    for i in 0..values.len() {
        for k in i + 1..values.len() {
            worst = worst.max((values[i] - values[k]).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_family(center: f64) -> CircleFamily {
        CircleFamily::from_exprs(&format!("{center} + t"), "1", [0.0, 1.0]).unwrap()
    }

    fn linear() -> CircleFamily {
        CircleFamily::from_exprs("t", "1", [-1.1, 1.1]).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn monomial_on_unit_circle() {
        let tr = sample_trace(&FunctionSpec::monomial(2), &unit_family(0.0), 0.0, 64).unwrap();
        for k in -32..32 {
            let expect = if k == 2 { 1.0 } else { 0.0 };
            assert!((tr.coefficient(k) - c(expect, 0.0)).norm() < 1e-12, "a_{k}");
        }
    }

    #[test]
    fn conjugate_coefficients() {
        let tr = sample_trace(&FunctionSpec::conj_z(), &unit_family(0.0), 0.0, 64).unwrap();
        assert!((tr.coefficient(-1) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((tr.extendibility_defect() - 1.0).abs() < 1e-12);
        // Off-center circle: conj(t0 + e^{iθ}) = conj(t0) + e^{-iθ}.
        let t0 = c(0.7, -0.2);
        let fam = CircleFamily::from_exprs("0.7 - 0.2*i + t", "1", [0.0, 1.0]).unwrap();
        let tr = sample_trace(&FunctionSpec::conj_z(), &fam, 0.0, 64).unwrap();
        assert!((tr.coefficient(0) - t0.conj()).norm() < 1e-12);
        assert!((tr.coefficient(-1) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn holomorphic_defects_vanish() {
        let fam = unit_family(0.0);
        let e = sample_trace(&FunctionSpec::Exp, &fam, 0.0, 256).unwrap();
        assert!(e.extendibility_defect() < 1e-10);
        let rec = sample_trace(&FunctionSpec::reciprocal(c(3.0, 0.0)), &fam, 0.0, 256).unwrap();
        assert!(rec.extendibility_defect() < 1e-10);
    }

    #[test]
    fn extension_values() {
        let fam = unit_family(0.0);
        let tr = sample_trace(&FunctionSpec::monomial(2), &fam, 0.0, 64).unwrap();
        let v = tr.evaluate_extension(c(0.0, 0.4)).unwrap();
        assert!((v - c(-0.16, 0.0)).norm() < 1e-14);
        let e = sample_trace(&FunctionSpec::Exp, &fam, 0.0, 256).unwrap();
        let at0 = e.evaluate_extension(c(0.0, 0.0)).unwrap();
        assert!((at0 - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(at0, e.coefficient(0));
        assert!(matches!(
            tr.evaluate_extension(c(1.0, 0.0)),
            Err(Error::NotInterior { .. })
        ));
    }

    #[test]
    fn conjugate_defect_tracks_radius() {
        let fam = CircleFamily::from_exprs("t", "1 + 0.25*t", [0.0, 2.0]).unwrap();
        for t in [0.0, 0.5, 1.3, 2.0] {
            let tr = sample_trace(&FunctionSpec::conj_z(), &fam, t, 128).unwrap();
            assert!((tr.extendibility_defect() - (1.0 + 0.25 * t)).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_transform_identity() {
        let f = FunctionSpec::poly(&[(3, 1, c(0.5, -1.0)), (0, 2, c(2.0, 0.0)), (1, 0, c(0.0, 1.0))]);
        let fam = CircleFamily::from_exprs("0.3 + i*t", "0.8", [0.0, 1.0]).unwrap();
        let tr = sample_trace(&f, &fam, 0.4, 32).unwrap();
        let scale = tr.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (j, v) in tr.values.iter().enumerate() {
            let th = tr.theta(j);
            let back: Complex64 = (-16..16)
                .map(|k| tr.coefficient(k) * Complex64::from_polar(1.0, k as f64 * th))
                .sum();
            assert!((back - v).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(TraceSampler::new(8).is_err());
        assert!(TraceSampler::new(48).is_err());
    }

    #[test]
    fn consistency_examples() {
        let fam = linear();
        let d = consistency_defect(&FunctionSpec::Exp, &fam, c(0.0, 0.4), 41, 256).unwrap();
        assert!(d < 1e-8, "{d}");
        let d = consistency_defect(&FunctionSpec::monomial(2), &fam, c(0.0, 0.0), 41, 256).unwrap();
        assert!(d < 1e-10, "{d}");
        assert!(matches!(
            consistency_defect(&FunctionSpec::Exp, &fam, c(5.0, 0.0), 41, 256),
            Err(Error::FewerThanTwoDiscs { .. })
        ));
        // Non-holomorphic data disagrees between circles.
        let d = consistency_defect(&FunctionSpec::conj_z(), &fam, c(0.0, 0.4), 41, 256).unwrap();
        assert!(d > 0.1);
    }

    #[test]
    fn closure_source() {
        let src = |t: f64, _z: Complex64| -> Result<Complex64> { Ok(c(t, 0.0)) };
        assert_eq!(src.extension(0.25, c(0.0, 0.0)).unwrap(), c(0.25, 0.0));
    }
}
