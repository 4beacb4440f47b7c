//! Cauchy-type integrals over fiber loops with the squared kernel
//! `Φ(z, w) = ∫_G F(z, ζ) (ζ - w)^{-2} dζ`, where `F(z, w(t)) = f_t(z)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::critical::build_critical_curves;
use crate::error::{Error, Result};
use crate::extension::ExtensionSource;
use crate::family::CircleFamily;
use crate::fiber::{bbox_diagonal, build_fiber_curve, polygon_distance, Loop, SamplingController, ON_LOOP_TOL};
use crate::jet::Jet;
use crate::sphere::{Chart, SpherePoint};

/// Default relative agreement between successive Romberg levels.
pub const QUADRATURE_TOL: f64 = 1e-8;
/// Default parameter margin at loop endpoints, as a fraction of the interval.
pub const ENDPOINT_MARGIN: f64 = 1e-3;

const MIN_LEVEL: usize = 6;
const MAX_LEVEL: usize = 14;

/// Result of an adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: Complex64,
    /// Integral of the absolute integrand; errors are measured against it.
    pub scale: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Quadrature {
    fn zero() -> Self {
        Quadrature {
            value: Complex64::new(0.0, 0.0),
            scale: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    fn add(&mut self, other: Quadrature) {
        self.value += other.value;
        self.scale += other.scale;
        self.evaluations += other.evaluations;
        self.converged &= other.converged;
    }
}

/// Romberg integration of `g` over `[a, b]`, doubling uniform grids until
/// the extrapolated values agree to `rel_tol` of the absolute integral.
pub fn romberg(
    g: &mut dyn FnMut(f64) -> Result<Complex64>,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    let h0 = b - a;
    let (ga, gb) = (g(a)?, g(b)?);
    let mut trap = (ga + gb) * (0.5 * h0);
    let mut abs_trap = 0.5 * h0 * (ga.norm() + gb.norm());
    let mut evaluations = 2;
    let mut prev_row = vec![trap];
    for level in 1..=MAX_LEVEL {
        let n_new = 1usize << (level - 1);
        let h = h0 / (1usize << level) as f64;
        let (mut sum, mut abs_sum) = (Complex64::new(0.0, 0.0), 0.0);
        for k in 0..n_new {
            let v = g(a + (2 * k + 1) as f64 * h)?;
            sum += v;
            abs_sum += v.norm();
        }
        evaluations += n_new;
        trap = trap * 0.5 + sum * h;
        abs_trap = abs_trap * 0.5 + abs_sum * h;
        let mut row = vec![trap];
        let mut factor = 4.0;
        for j in 0..prev_row.len() {
            let r = row[j] + (row[j] - prev_row[j]) / (factor - 1.0);
            row.push(r);
            factor *= 4.0;
        }
        let best = row[row.len() - 1];
        let last = prev_row[prev_row.len() - 1];
        if level >= MIN_LEVEL && (best - last).norm() <= rel_tol * abs_trap.max(f64::MIN_POSITIVE) {
            return Ok(Quadrature {
                value: best,
                scale: abs_trap,
                evaluations,
                converged: true,
            });
        }
        prev_row = row;
    }
    Ok(Quadrature {
        value: prev_row[prev_row.len() - 1],
        scale: abs_trap,
        evaluations,
        converged: false,
    })
}

/// How a loop integral is parametrized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Route {
    /// `w'(t) / (w(t) - w₀)²` in closed algebraic form.
    Finite,
    /// Through `u = 1 / (w - a)`: `-u'(t) / ((a - w₀) u(t) + 1)²`.
    Inverted(Complex64),
}

impl Route {
    pub fn of(lp: &Loop) -> Self {
        match lp.chart {
            Chart::Finite => Route::Finite,
            Chart::Inverted => Route::Inverted(lp.base),
        }
    }
}

/// `dζ / (ζ - w₀)²` along the fiber over `z`, per unit `t`.
fn kernel_weight(family: &CircleFamily, z: Complex64, t: f64, w0: Complex64, route: Route) -> Result<Complex64> {
    let j = family.jet(t)?;
    let (c, dc, r, dr) = (j.c[0], j.c[1], j.r[0], j.r[1]);
    let d = z - c;
    Ok(match route {
        Route::Finite => {
            let num = dc.conj() * d * d + 2.0 * r * dr * d + r * r * dc;
            let den = (c.conj() - w0) * d + r * r;
            num / (den * den)
        }
        Route::Inverted(a) => {
            let dj = Jet::constant(z) - j.c_jet();
            let rj = j.r_jet();
            let u = dj / ((j.c_jet().conj() - Jet::constant(a)) * dj + rj * rj);
            let den = (a - w0) * u.value() + 1.0;
            -u.derivative(1) / (den * den)
        }
    })
}

/// Refuses `w₀` within the on-loop tolerance of the sampled loop.
fn check_off_loop(lp: &Loop, w0: Complex64) -> Result<()> {
    let (pts, q) = match lp.chart {
        Chart::Finite => (lp.chart_values(), Some(w0)),
        Chart::Inverted => (
            lp.chart_values(),
            SpherePoint::Finite(w0).invert_about(lp.base).as_finite(),
        ),
    };
    if let Some(q) = q {
        let distance = polygon_distance(&pts, q);
        if !(distance > ON_LOOP_TOL * bbox_diagonal(&pts)) {
            return Err(Error::OnCurve { distance });
        }
    }
    Ok(())
}

/// `∫ F (ζ - w₀)^{-2} dζ` over one loop of the fiber over `z`.
pub fn loop_phi(
    family: &CircleFamily,
    source: &dyn ExtensionSource,
    z: Complex64,
    lp: &Loop,
    w0: SpherePoint,
    route: Route,
    rel_tol: f64,
) -> Result<Quadrature> {
    let w0 = match w0 {
        // The kernel vanishes identically in the limit w₀ → ∞.
        SpherePoint::Infinity => return Ok(Quadrature::zero()),
        SpherePoint::Finite(w) => w,
    };
    check_off_loop(lp, w0)?;
    let mut g = |t: f64| -> Result<Complex64> {
        Ok(source.extension(t, z)? * kernel_weight(family, z, t, w0, route)?)
    };
    romberg(&mut g, lp.interval.0, lp.interval.1, rel_tol)
}

/// `Φ(z, w₀)` summed over `loops`; `Φ(z, ∞) = 0`.
pub fn phi_quadrature(
    family: &CircleFamily,
    source: &dyn ExtensionSource,
    z: Complex64,
    loops: &[&Loop],
    w0: SpherePoint,
) -> Result<Quadrature> {
    let mut total = Quadrature::zero();
    for lp in loops {
        total.add(loop_phi(family, source, z, lp, w0, Route::of(lp), QUADRATURE_TOL)?);
    }
    Ok(total)
}

pub fn phi(
    family: &CircleFamily,
    source: &dyn ExtensionSource,
    z: Complex64,
    loops: &[&Loop],
    w0: SpherePoint,
) -> Result<Complex64> {
    Ok(phi_quadrature(family, source, z, loops, w0)?.value)
}

/// `∫ F(ζ) (ζ - w₀)^{-2} dζ` over a closed parametrized curve
/// `t ↦ (ζ(t), ζ'(t))` on `[a, b]`.
pub fn curve_phi(
    curve: &dyn Fn(f64) -> (Complex64, Complex64),
    values: &dyn Fn(Complex64) -> Complex64,
    (a, b): (f64, f64),
    w0: Complex64,
) -> Result<Quadrature> {
    let mut g = |t: f64| -> Result<Complex64> {
        let (zeta, dzeta) = curve(t);
        let d = zeta - w0;
        Ok(values(zeta) * dzeta / (d * d))
    };
    romberg(&mut g, a, b, QUADRATURE_TOL)
}

/// Samples of `F` and `dζ/dt` (in the loop's chart) along one loop.
#[derive(Clone, Debug, Serialize)]
pub struct LoopIntegrand {
    pub z: Complex64,
    pub t: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `w'(t)` in the finite chart, `u'(t)` in the inverted chart.
    pub weights: Vec<Complex64>,
    pub chart: Chart,
    pub base: Complex64,
}

impl LoopIntegrand {
    /// Evaluates `F` and the chart derivative at the loop samples.
    pub fn build(family: &CircleFamily, source: &dyn ExtensionSource, z: Complex64, lp: &Loop) -> Result<Self> {
        let mut values = Vec::with_capacity(lp.len());
        let mut weights = Vec::with_capacity(lp.len());
        for s in &lp.samples {
            values.push(source.extension(s.t, z)?);
            let j = family.jet(s.t)?;
            let dj = Jet::constant(z) - j.c_jet();
            let rj = j.r_jet();
            let w = match lp.chart {
                Chart::Finite => j.c_jet().conj() + rj * rj / dj,
                Chart::Inverted => dj / ((j.c_jet().conj() - Jet::constant(lp.base)) * dj + rj * rj),
            };
            weights.push(w.derivative(1));
        }
        Ok(LoopIntegrand {
            z,
            t: lp.samples.iter().map(|s| s.t).collect(),
            values,
            weights,
            chart: lp.chart,
            base: lp.base,
        })
    }

    /// Composite trapezoid rule for `∫ F (ζ - w₀)^{-2} dζ` on the samples.
    pub fn trapezoid(&self, lp: &Loop, w0: Complex64) -> Complex64 {
        let term = |k: usize| -> Complex64 {
            let v = lp.samples[k].value;
            let kernel = match self.chart {
                Chart::Finite => (v - w0).powi(-2),
                Chart::Inverted => {
                    let den = (self.base - w0) * v + 1.0;
                    -(den * den).inv()
                }
            };
            self.values[k] * self.weights[k] * kernel
        };
        (1..self.t.len())
            .map(|k| (term(k) + term(k - 1)) * (0.5 * (self.t[k] - self.t[k - 1])))
            .sum()
    }
}

/// `max |f_t(z) - mean f_t(z)|` over the loop samples, skipping a fraction
/// `margin` of the interval at each end.
pub fn loop_constancy_defect(
    source: &dyn ExtensionSource,
    z: Complex64,
    lp: &Loop,
    margin: f64,
) -> Result<f64> {
    let (t0, t1) = lp.interval;
    let cut = margin * (t1 - t0);
    let values: Vec<Complex64> = lp
        .samples
        .iter()
        .filter(|s| s.t > t0 + cut && s.t < t1 - cut)
        .map(|s| source.extension(s.t, z))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::NoInteriorSamples);
    }
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    Ok(values.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MoreraResult {
    /// `|∮_γ Φ(z, w₀) dz|`.
    pub residual: f64,
    /// `∮_γ` of the absolute Φ-integrands, the reference for `residual`.
    pub scale: f64,
    pub nodes: usize,
    pub loop_count: usize,
}

impl MoreraResult {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

fn polyline_distance(pts: &[Complex64], q: Complex64) -> f64 {
    pts.windows(2)
        .map(|w| polygon_distance(w, q))
        .fold(f64::INFINITY, f64::min)
}

/// Trapezoid value of `∮ Φ(z, w₀) dz` on the circle `|z - z0| = radius` with
/// `n` nodes, Φ taken over all loops of the fiber at each node.
pub fn morera_phi_test(
    family: &CircleFamily,
    source: &dyn ExtensionSource,
    z0: Complex64,
    radius: f64,
    w0: SpherePoint,
    n: usize,
    ctl: &SamplingController,
) -> Result<MoreraResult> {
    if n < 4 || !(radius > 0.0) {
        return Err(Error::InvalidArgument("Morera test needs n ≥ 4 and radius > 0".into()));
    }
    let critical = build_critical_curves(family, 1024)?;
    for br in &critical.branches {
        let d = polyline_distance(&br.points(), z0);
        if d <= radius {
            return Err(Error::CrossesCriticalSet(format!(
                "disc of radius {radius} at {z0} meets P ({} branch, distance {d:.3e})",
                br.branch.label()
            )));
        }
    }
    let centers: Vec<Complex64> = family.grid(2048).map(|t| family.center(t)).collect::<Result<_>>()?;
    let d = polyline_distance(&centers, z0);
    if d <= radius {
        return Err(Error::CrossesCriticalSet(format!(
            "disc of radius {radius} at {z0} meets C (distance {d:.3e})"
        )));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    let mut loop_count = None;
    let dtheta = 2.0 * PI / n as f64;
    for k in 0..n {
        let e = Complex64::from_polar(1.0, k as f64 * dtheta);
        let z = z0 + e * radius;
        let fiber = build_fiber_curve(family, z, ctl)?;
        match loop_count {
            None => loop_count = Some(fiber.loops.len()),
            Some(m) if m != fiber.loops.len() => {
                return Err(Error::CrossesCriticalSet(format!(
                    "loop count changes from {m} to {} on γ",
                    fiber.loops.len()
                )))
            }
            _ => {}
        }
        let refs: Vec<&Loop> = fiber.loops.iter().collect();
        let q = phi_quadrature(family, source, z, &refs, w0)?;
        let dz = Complex64::new(0.0, radius) * e * dtheta;
        sum += q.value * dz;
        scale += q.scale * radius * dtheta;
    }
    Ok(MoreraResult {
        residual: sum.norm(),
        scale,
        nodes: n,
        loop_count: loop_count.unwrap_or(0),
    })
}
