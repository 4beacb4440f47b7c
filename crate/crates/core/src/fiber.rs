//! Fiber curves `Γ_z = { w(t) = c̄(t) + r(t)² / (z - c(t)) : t ∈ I_z }`.
//!
//! Over a point `z` the incidence set `I_z` splits into disjoint closed
//! intervals; each interval yields one closed loop through `z̄` on the
//! Riemann sphere. Loops passing close to `∞` are sampled in the inverted
//! chart `u = 1 / (w - a)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::CircleFamily;
use crate::roots::{bisect, golden_min};
use crate::sphere::{Chart, SpherePoint};
use crate::svg::SvgCanvas;

/// `min |z - c| / r` below which a loop is sampled in the inverted chart.
const POLE_SWITCH: f64 = 0.1;
/// Relative distance to a center at which a loop counts as passing ∞.
const INFINITY_TOL: f64 = 1e-9;
/// Interval endpoints are refined in `t` to this.
const ENDPOINT_T_TOL: f64 = 1e-13;
/// Required `||z - c| - r|` at refined endpoints.
const ENDPOINT_RESIDUAL: f64 = 1e-10;
/// Loops must close at `z̄` within this (relative to `max(1, |z|)`).
const CLOSURE_TOL: f64 = 1e-8;
/// Winding sums must be this close to an integer.
const WINDING_INTEGER_TOL: f64 = 1e-6;
/// Golden angle, used for deterministic base perturbations.
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangencyWarning {
    pub t: f64,
    /// `|z - c(t)|² - r(t)²` at the near-tangency.
    pub g: f64,
}

/// `I_z` as sorted disjoint closed intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncidenceSet {
    pub z: Complex64,
    pub intervals: Vec<(f64, f64)>,
    pub warnings: Vec<TangencyWarning>,
}

fn incidence_g(family: &CircleFamily, z: Complex64, t: f64) -> f64 {
    match family.jet0(t) {
        Ok((c, r)) => (z - c).norm_sqr() - r * r,
        Err(_) => f64::NAN,
    }
}

/// Locates `I_z` for `z` outside both end discs.
pub fn incidence_intervals(
    family: &CircleFamily,
    z: Complex64,
    resolution: usize,
    tol: f64,
) -> Result<IncidenceSet> {
    if resolution < 256 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} < 256")));
    }
    let (alpha, beta) = family.t_range();
    for (which, t) in [("alpha", alpha), ("beta", beta)] {
        let (c, r) = family.jet0(t)?;
        let margin = (z - c).norm() - r;
        if margin <= 0.0 {
            return Err(Error::InEndDisc { which, margin });
        }
    }
    let g = |t: f64| incidence_g(family, z, t);
    let ts: Vec<f64> = family.grid(resolution).collect();
    let gs: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let h = (beta - alpha) / (resolution - 1) as f64;

    let mut curvature: f64 = 0.0;
    for j in 1..resolution - 1 {
        curvature = curvature.max((gs[j + 1] - 2.0 * gs[j] + gs[j - 1]).abs() / (h * h));
    }
    // A dip between grid points can hide at most this far below the grid values.
    let hidden = curvature * h * h + tol;

    let mut roots = Vec::new();
    let mut warnings = Vec::new();
    for j in 0..resolution - 1 {
        if (gs[j] <= 0.0) != (gs[j + 1] <= 0.0) {
            roots.push(bisect(g, ts[j], ts[j + 1], ENDPOINT_T_TOL));
        }
    }
    for j in 1..resolution - 1 {
        let (lo, hi) = (ts[j - 1], ts[j + 1]);
        if gs[j] > 0.0 && gs[j] < gs[j - 1] && gs[j] <= gs[j + 1] && gs[j] < hidden {
            let (tm, gm) = golden_min(&g, lo, hi, 1e-14);
            if gm <= 0.0 {
                roots.push(bisect(g, lo, tm, ENDPOINT_T_TOL));
                roots.push(bisect(g, tm, hi, ENDPOINT_T_TOL));
            } else if gm < tol {
                warnings.push(TangencyWarning { t: tm, g: gm });
            }
        } else if gs[j] <= 0.0 && gs[j] > gs[j - 1] && gs[j] >= gs[j + 1] && -gs[j] < hidden {
            let neg = |t: f64| -g(t);
            let (tm, ng) = golden_min(&neg, lo, hi, 1e-14);
            let gm = -ng;
            if gm > 0.0 {
                roots.push(bisect(g, lo, tm, ENDPOINT_T_TOL));
                roots.push(bisect(g, tm, hi, ENDPOINT_T_TOL));
            } else if -gm < tol {
                warnings.push(TangencyWarning { t: tm, g: gm });
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 4.0 * ENDPOINT_T_TOL);
    if roots.len() % 2 == 1 {
        let t = roots[roots.len() - 1];
        return Err(Error::EndpointRefinement { t, residual: g(t) });
    }
    for &t in &roots {
        let (c, r) = family.jet0(t)?;
        let residual = ((z - c).norm() - r).abs();
        if !(residual < ENDPOINT_RESIDUAL * r.max(1.0)) {
            return Err(Error::EndpointRefinement { t, residual });
        }
    }
    let intervals = roots.chunks(2).map(|p| (p[0], p[1])).collect();
    warnings.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(IncidenceSet {
        z,
        intervals,
        warnings,
    })
}

/// `w(t) = c̄(t) + r(t)² / (z - c(t))`, or `∞` at the center.
pub fn fiber_point(family: &CircleFamily, t: f64, z: Complex64) -> Result<SpherePoint> {
    let (c, r) = family.jet0(t)?;
    let d = z - c;
    if d.norm() <= f64::MIN_POSITIVE.sqrt() * r {
        return Ok(SpherePoint::Infinity);
    }
    Ok(SpherePoint::Finite(c.conj() + r * r / d))
}

/// `u(t) = 1 / (w(t) - a) = d / ((c̄ - a) d + r²)` with `d = z - c`; finite
/// through the pole of `w`.
fn inverted_point(c: Complex64, r: f64, z: Complex64, a: Complex64) -> Complex64 {
    let d = z - c;
    d / ((c.conj() - a) * d + r * r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LoopSample {
    pub t: f64,
    /// Coordinate in the loop's chart.
    pub value: Complex64,
}

/// One closed loop of a fiber curve, oriented by increasing `t`.
#[derive(Clone, Debug, Serialize)]
pub struct Loop {
    pub interval: (f64, f64),
    pub chart: Chart,
    /// Base `a` of the inverted chart; unused in the finite chart.
    pub base: Complex64,
    pub samples: Vec<LoopSample>,
    pub passes_infinity: bool,
}

impl Loop {
    /// Closed polygon loop in the finite chart; samples are parametrized by
    /// their index.
    pub fn from_points(points: &[Complex64]) -> Self {
        let samples = points
            .iter()
            .enumerate()
            .map(|(k, &value)| LoopSample { t: k as f64, value })
            .collect();
        Loop {
            interval: (0.0, points.len().saturating_sub(1) as f64),
            chart: Chart::Finite,
            base: Complex64::new(0.0, 0.0),
            samples,
            passes_infinity: false,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn point(&self, i: usize) -> SpherePoint {
        decode(self.chart, self.base, self.samples[i].value)
    }

    pub fn points(&self) -> Vec<SpherePoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn chart_values(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    /// Images of the samples under `ζ ↦ 1 / (ζ - b)`.
    pub fn images_about(&self, b: Complex64) -> Vec<Complex64> {
        self.samples
            .iter()
            .map(|s| match self.chart {
                Chart::Finite => (s.value - b).inv(),
                Chart::Inverted => s.value / (Complex64::new(1.0, 0.0) + (self.base - b) * s.value),
            })
            .collect()
    }

    /// Bounding-box diagonal in chart coordinates.
    pub fn chart_diameter(&self) -> f64 {
        bbox_diagonal(&self.chart_values())
    }

    /// Largest chordal distance from the first sample, doubled; a cheap
    /// diameter bound on the sphere.
    pub fn chordal_diameter(&self) -> f64 {
        let pts = self.points();
        let mut best: f64 = 0.0;
        let step = (pts.len() / 256).max(1);
        for i in (0..pts.len()).step_by(step) {
            for j in (i + 1..pts.len()).step_by(step) {
                best = best.max(pts[i].chordal_distance(&pts[j]));
            }
        }
        best
    }

    /// Closest pair among samples other than the two endpoints, in chart
    /// coordinates.
    pub fn min_separation(&self) -> f64 {
        if self.len() < 4 {
            return f64::INFINITY;
        }
        closest_pair(&self.chart_values()[1..self.len() - 1])
    }

    /// Polygon length in chart coordinates.
    pub fn chart_length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].value - w[0].value).norm()).sum()
    }

    /// Winding index with the sphere normalization (left side 1, right side
    /// 0); see [`winding_index`].
    pub fn winding_index(&self, w: SpherePoint) -> Result<i32> {
        winding_index(self, w)
    }
}

fn decode(chart: Chart, base: Complex64, v: Complex64) -> SpherePoint {
    match chart {
        Chart::Finite => SpherePoint::Finite(v),
        Chart::Inverted => {
            if v == Complex64::new(0.0, 0.0) {
                SpherePoint::Infinity
            } else {
                SpherePoint::Finite(base + v.inv())
            }
        }
    }
}

pub(crate) fn bbox_diagonal(pts: &[Complex64]) -> f64 {
    let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for p in pts {
        bb[0] = bb[0].min(p.re);
        bb[1] = bb[1].max(p.re);
        bb[2] = bb[2].min(p.im);
        bb[3] = bb[3].max(p.im);
    }
    ((bb[1] - bb[0]).powi(2) + (bb[3] - bb[2]).powi(2)).sqrt()
}

fn closest_pair(pts: &[Complex64]) -> f64 {
    let mut sorted: Vec<Complex64> = pts.to_vec();
    sorted.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    let mut best = f64::INFINITY;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            if sorted[j].re - sorted[i].re >= best {
                break;
            }
            best = best.min((sorted[j] - sorted[i]).norm());
        }
    }
    best
}

/// Summed argument increments of the closed polygon around `q`, in turns.
fn winding_turns(pts: &[Complex64], q: Complex64) -> f64 {
    let n = pts.len();
    let mut total = 0.0;
    for k in 0..n {
        let a = pts[k] - q;
        let b = pts[(k + 1) % n] - q;
        total += (b / a).arg();
    }
    total / (2.0 * PI)
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a) * ab.conj()).re / len2;
    (p - (a + ab * s.clamp(0.0, 1.0))).norm()
}

pub(crate) fn polygon_distance(pts: &[Complex64], q: Complex64) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|k| segment_distance(q, pts[k], pts[(k + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn signed_area(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    0.5 * (0..n)
        .map(|k| {
            let (a, b) = (pts[k], pts[(k + 1) % n]);
            a.re * b.im - a.im * b.re
        })
        .sum::<f64>()
}

/// Raw winding number of a closed polygon around `q`, refusing points
/// within `tol_rel · diameter` of the polygon.
fn polygon_winding(pts: &[Complex64], q: Complex64, tol_rel: f64) -> Result<i32> {
    let diam = bbox_diagonal(pts);
    let distance = polygon_distance(pts, q);
    if !(distance > tol_rel * diam) {
        return Err(Error::OnCurve { distance });
    }
    let turns = winding_turns(pts, q);
    let k = turns.round();
    let deviation = (turns - k).abs();
    if deviation >= WINDING_INTEGER_TOL {
        return Err(Error::WindingNotInteger { deviation });
    }
    Ok(k as i32)
}

/// Relative tolerance for "on the loop" in winding computations.
pub const ON_LOOP_TOL: f64 = 1e-9;

/// Picks a Möbius base off every loop: the first candidate around `anchor`
/// whose chordal distance to all samples exceeds a margin, else the best.
pub fn choose_base(loops: &[&Loop], anchor: Complex64, scale: f64) -> Complex64 {
    let pts: Vec<SpherePoint> = loops.iter().flat_map(|l| l.points()).collect();
    let clearance = |b: Complex64| {
        let bp = SpherePoint::Finite(b);
        pts.iter()
            .map(|p| p.chordal_distance(&bp))
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = (anchor + scale, f64::NEG_INFINITY);
    for k in 0..64 {
        let b = anchor + Complex64::from_polar(scale * (1.0 + 0.5 * k as f64), GOLDEN_ANGLE * k as f64);
        let c = clearance(b);
        if c > 0.02 {
            return b;
        }
        if c > best.1 {
            best = (b, c);
        }
    }
    best.0
}

/// Index of `w` with respect to `lp`, normalized on the sphere so the left
/// side of the loop has index 1 and the right side index 0.
///
/// When the loop lives in the inverted chart or `w = ∞`, both are first
/// moved by `μ(ζ) = 1 / (ζ - a)` with `a` off the loop.
pub fn winding_index(lp: &Loop, w: SpherePoint) -> Result<i32> {
    let (pts, q) = match (lp.chart, w) {
        (Chart::Finite, SpherePoint::Finite(q)) => (lp.chart_values(), Some(q)),
        (Chart::Finite, SpherePoint::Infinity) => {
            let anchor = lp.samples[0].value;
            let a = choose_base(&[lp], anchor, lp.chart_diameter().max(1e-300));
            (lp.images_about(a), Some(Complex64::new(0.0, 0.0)))
        }
        (Chart::Inverted, w) => {
            let q = match w.invert_about(lp.base) {
                SpherePoint::Finite(q) => Some(q),
                SpherePoint::Infinity => None,
            };
            (lp.chart_values(), q)
        }
    };
    let raw = match q {
        Some(q) => polygon_winding(&pts, q, ON_LOOP_TOL)?,
        // w is the base point itself.
        None => 0,
    };
    let orientation = if signed_area(&pts) >= 0.0 { 1 } else { -1 };
    Ok(raw - orientation.min(0))
}

/// Raw index of `w` relative to the base point `b` (index 0 at `b`):
/// winding number of `μ_b(loop)` around `μ_b(w)`. Additive over loops.
pub fn relative_index(lp: &Loop, w: SpherePoint, b: Complex64) -> Result<i32> {
    match w.invert_about(b) {
        SpherePoint::Finite(q) => polygon_winding(&lp.images_about(b), q, ON_LOOP_TOL),
        SpherePoint::Infinity => Ok(0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    /// Index 1 (`G⁺`).
    Plus,
    /// Index 0 (`G⁻`).
    Minus,
    /// On (or numerically on) the curve.
    On,
    /// Any other index.
    Other(i32),
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeResult {
    pub point: SpherePoint,
    pub index: Option<i32>,
    pub membership: Membership,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionClassification {
    pub quasi_simple: bool,
    pub probes: Vec<ProbeResult>,
    /// Raw index subtracted so the minimum over the sphere is zero.
    pub offset: i32,
}

/// Total index of a union of loops, normalized so that its minimum over the
/// sphere is zero.
pub struct RegionIndexer<'a> {
    loops: Vec<&'a Loop>,
    base: Complex64,
    images: Vec<Vec<Complex64>>,
    offset: i32,
    anchor: Complex64,
    scale: f64,
}

impl<'a> RegionIndexer<'a> {
    pub fn new(loops: &[&'a Loop], probes: usize) -> Result<(Self, Vec<ProbeResult>)> {
        if loops.is_empty() {
            return Err(Error::InvalidArgument("no loops to classify".into()));
        }
        let finite: Vec<Complex64> = loops
            .iter()
            .flat_map(|l| l.points())
            .filter_map(|p| p.as_finite())
            .filter(|w| w.norm() < 1e12)
            .collect();
        let anchor = finite.first().copied().unwrap_or_default();
        let scale = bbox_diagonal(&finite).max(1e-12);
        let base = choose_base(loops, anchor, scale);
        let images = loops.iter().map(|l| l.images_about(base)).collect();
        let mut indexer = RegionIndexer {
            loops: loops.to_vec(),
            base,
            images,
            offset: 0,
            anchor,
            scale,
        };
        let results: Vec<ProbeResult> = indexer
            .probe_points(&finite, probes)
            .into_iter()
            .map(|p| indexer.raw_probe(p))
            .collect();
        let min_raw = results.iter().filter_map(|r| r.index).fold(0, i32::min);
        indexer.offset = min_raw;
        let results = results
            .into_iter()
            .map(|mut r| {
                r.index = r.index.map(|k| k - min_raw);
                r.membership = membership_of(r.index);
                r
            })
            .collect();
        Ok((indexer, results))
    }

    fn probe_points(&self, finite: &[Complex64], probes: usize) -> Vec<SpherePoint> {
        let mut out = vec![SpherePoint::Infinity];
        // Fibonacci lattice on the sphere, stereographically projected
        // around the loops.
        let radius = 0.5 * self.scale;
        for k in 0..probes {
            let zc = 1.0 - (2.0 * k as f64 + 1.0) / probes as f64;
            let phi = GOLDEN_ANGLE * k as f64;
            let rho = ((1.0 + zc) / (1.0 - zc)).sqrt();
            out.push(SpherePoint::Finite(self.anchor + Complex64::from_polar(radius * rho, phi)));
        }
        // Uniform grid over the finite bounding box.
        if !finite.is_empty() {
            let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in finite {
                x0 = x0.min(p.re);
                x1 = x1.max(p.re);
                y0 = y0.min(p.im);
                y1 = y1.max(p.im);
            }
            let m = 24;
            for i in 0..m {
                for j in 0..m {
                    let x = x0 + (x1 - x0) * (i as f64 + 0.5) / m as f64;
                    let y = y0 + (y1 - y0) * (j as f64 + 0.5) / m as f64;
                    out.push(SpherePoint::finite(x, y));
                }
            }
        }
        out
    }

    fn raw_index(&self, w: SpherePoint) -> Result<i32> {
        let q = match w.invert_about(self.base) {
            SpherePoint::Finite(q) => q,
            SpherePoint::Infinity => return Ok(0),
        };
        let mut total = 0;
        for pts in &self.images {
            total += polygon_winding(pts, q, ON_LOOP_TOL)?;
        }
        Ok(total)
    }

    fn raw_probe(&self, point: SpherePoint) -> ProbeResult {
        match self.raw_index(point) {
            Ok(k) => ProbeResult {
                point,
                index: Some(k),
                membership: Membership::Other(k),
            },
            Err(_) => ProbeResult {
                point,
                index: None,
                membership: Membership::On,
            },
        }
    }

    /// Normalized index of `w`.
    pub fn index(&self, w: SpherePoint) -> Result<i32> {
        Ok(self.raw_index(w)? - self.offset)
    }

    pub fn membership(&self, w: SpherePoint) -> Membership {
        membership_of(self.index(w).ok())
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn loops(&self) -> &[&'a Loop] {
        &self.loops
    }
}

fn membership_of(index: Option<i32>) -> Membership {
    match index {
        None => Membership::On,
        Some(1) => Membership::Plus,
        Some(0) => Membership::Minus,
        Some(k) => Membership::Other(k),
    }
}

/// Probes the sphere and decides whether the union of `loops` is
/// quasi-simple (all indices in {0, 1}).
pub fn classify_regions(loops: &[Loop], probes: usize) -> Result<RegionClassification> {
    let refs: Vec<&Loop> = loops.iter().collect();
    let (indexer, results) = RegionIndexer::new(&refs, probes)?;
    let quasi_simple = results
        .iter()
        .all(|r| matches!(r.membership, Membership::Plus | Membership::Minus | Membership::On));
    Ok(RegionClassification {
        quasi_simple,
        probes: results,
        offset: indexer.offset,
    })
}

/// Controls loop sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplingController {
    /// Grid size for locating `I_z`.
    pub resolution: usize,
    /// Tangency tolerance on `|z - c|² - r²`.
    pub tol: f64,
    /// Initial uniform samples per loop.
    pub initial: usize,
    /// Chords are refined below this fraction of the loop diameter.
    pub chord_fraction: f64,
    pub max_samples: usize,
}

impl Default for SamplingController {
    fn default() -> Self {
        SamplingController {
            resolution: 1024,
            tol: 1e-10,
            initial: 65,
            chord_fraction: 0.05,
            max_samples: 4096,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberCurve {
    pub z: Complex64,
    pub loops: Vec<Loop>,
    pub warnings: Vec<TangencyWarning>,
}

impl FiberCurve {
    /// Sum of the per-loop normalized indices.
    pub fn winding_index(&self, w: SpherePoint) -> Result<i32> {
        self.loops.iter().map(|l| l.winding_index(w)).sum()
    }

    /// Writes `t, w_re, w_im, chart` rows for every loop sample.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "w_re", "w_im", "chart"])?;
        for lp in &self.loops {
            let chart = match lp.chart {
                Chart::Finite => "finite",
                Chart::Inverted => "inverted",
            };
            for (i, s) in lp.samples.iter().enumerate() {
                let (re, im) = match lp.point(i) {
                    SpherePoint::Finite(w) => (w.re.to_string(), w.im.to_string()),
                    SpherePoint::Infinity => ("inf".into(), "inf".into()),
                };
                wtr.write_record([s.t.to_string(), re, im, chart.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// SVG of the loops in the `w`-plane, colored by interval index.
    pub fn to_svg(&self) -> String {
        let zb = self.z.conj();
        let mut view_pts: Vec<Complex64> = vec![zb];
        for lp in &self.loops {
            for p in lp.points() {
                if let Some(w) = p.as_finite() {
                    view_pts.push(w);
                }
            }
        }
        let clip = 10.0 * self.loops.iter().map(|l| l.interval.1 - l.interval.0).fold(1.0, f64::max);
        view_pts.retain(|w| (w - zb).norm() <= clip);
        let mut canvas = SvgCanvas::fit(&view_pts, 640.0, 0.08);
        for (k, lp) in self.loops.iter().enumerate() {
            let color = crate::svg::palette(k);
            let mut run: Vec<Complex64> = Vec::new();
            for p in lp.points() {
                match p.as_finite() {
                    Some(w) if (w - zb).norm() <= clip => run.push(w),
                    _ => {
                        canvas.polyline(&run, color, 1.5);
                        run.clear();
                    }
                }
            }
            canvas.polyline(&run, color, 1.5);
        }
        canvas.dot(zb, "#000", 3.0);
        canvas.label(zb, "z̄");
        canvas.finish()
    }
}

fn chart_value(
    family: &CircleFamily,
    z: Complex64,
    t: f64,
    chart: Chart,
    base: Complex64,
) -> Result<Complex64> {
    let (c, r) = family.jet0(t)?;
    Ok(match chart {
        Chart::Finite => c.conj() + r * r / (z - c),
        Chart::Inverted => inverted_point(c, r, z, base),
    })
}

fn sample_interval(
    family: &CircleFamily,
    z: Complex64,
    interval: (f64, f64),
    chart: Chart,
    base: Complex64,
    ctl: &SamplingController,
) -> Result<Vec<LoopSample>> {
    let (t0, t1) = interval;
    let n0 = ctl.initial.max(3);
    let mut samples: Vec<LoopSample> = (0..n0)
        .map(|k| {
            let t = if k + 1 == n0 {
                t1
            } else {
                t0 + (t1 - t0) * k as f64 / (n0 - 1) as f64
            };
            chart_value(family, z, t, chart, base).map(|value| LoopSample { t, value })
        })
        .collect::<Result<_>>()?;
    for _ in 0..16 {
        let values: Vec<Complex64> = samples.iter().map(|s| s.value).collect();
        let limit = ctl.chord_fraction * bbox_diagonal(&values);
        let mut long: Vec<(f64, usize)> = samples
            .windows(2)
            .enumerate()
            .filter_map(|(k, w)| {
                let chord = (w[1].value - w[0].value).norm();
                (chord > limit && w[1].t - w[0].t > 1e-15).then_some((chord, k))
            })
            .collect();
        let room = ctl.max_samples.saturating_sub(samples.len());
        if long.is_empty() || room == 0 {
            break;
        }
        if long.len() > room {
            long.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            long.truncate(room);
        }
        let mut split = vec![false; samples.len()];
        for &(_, k) in &long {
            split[k] = true;
        }
        let mut next = Vec::with_capacity(samples.len() + long.len());
        for k in 0..samples.len() {
            next.push(samples[k]);
            if split[k] {
                let t = 0.5 * (samples[k].t + samples[k + 1].t);
                next.push(LoopSample {
                    t,
                    value: chart_value(family, z, t, chart, base)?,
                });
            }
        }
        samples = next;
    }
    Ok(samples)
}

/// Builds the loops of `Γ_z`, one per incidence interval.
pub fn build_fiber_curve(
    family: &CircleFamily,
    z: Complex64,
    ctl: &SamplingController,
) -> Result<FiberCurve> {
    let inc = incidence_intervals(family, z, ctl.resolution, ctl.tol)?;
    let zb = z.conj();
    let mut loops = Vec::with_capacity(inc.intervals.len());
    for &(t0, t1) in &inc.intervals {
        let ratio = |t: f64| -> f64 {
            match family.jet0(t.clamp(t0, t1)) {
                Ok((c, r)) => (z - c).norm() / r,
                Err(_) => f64::INFINITY,
            }
        };
        // Coarse scan, then refine the closest approach to a center.
        let m = 64;
        let (mut tm, mut best) = (t0, f64::INFINITY);
        for k in 0..=m {
            let t = t0 + (t1 - t0) * k as f64 / m as f64;
            let v = ratio(t);
            if v < best {
                best = v;
                tm = t;
            }
        }
        let step = (t1 - t0) / m as f64;
        let (_, refined) = golden_min(&ratio, (tm - step).max(t0), (tm + step).min(t1), 1e-15);
        let min_ratio = refined.min(best);
        let passes_infinity = min_ratio <= INFINITY_TOL;
        let r_mid = family.radius(0.5 * (t0 + t1))?;

        let (chart, base, samples) = if min_ratio < POLE_SWITCH {
            let mut chosen = None;
            for k in 0..16 {
                let a = zb + Complex64::from_polar(r_mid * (1.0 + 0.5 * k as f64), GOLDEN_ANGLE * k as f64);
                let samples = sample_interval(family, z, (t0, t1), Chart::Inverted, a, ctl)?;
                // |u| ≤ 4 / r keeps the base at least r/4 away from the loop.
                let umax = samples.iter().map(|s| s.value.norm()).fold(0.0, f64::max);
                if umax * r_mid <= 4.0 {
                    chosen = Some((a, samples));
                    break;
                }
            }
            let (a, samples) = chosen.ok_or_else(|| {
                Error::InvalidArgument(format!("no inverted-chart base found for z = {z}"))
            })?;
            (Chart::Inverted, a, samples)
        } else {
            let samples = sample_interval(family, z, (t0, t1), Chart::Finite, zb, ctl)?;
            (Chart::Finite, zb, samples)
        };
        let lp = Loop {
            interval: (t0, t1),
            chart,
            base,
            samples,
            passes_infinity,
        };
        let scale = z.norm().max(1.0);
        for i in [0, lp.len() - 1] {
            let gap = match lp.point(i) {
                SpherePoint::Finite(w) => (w - zb).norm(),
                SpherePoint::Infinity => f64::INFINITY,
            };
            if !(gap < CLOSURE_TOL * scale) {
                return Err(Error::EndpointRefinement {
                    t: lp.samples[i].t,
                    residual: gap,
                });
            }
        }
        if !(lp.min_separation() > 0.0) {
            return Err(Error::InvalidFamily(format!(
                "fiber loop over z = {z} is not injective"
            )));
        }
        loops.push(lp);
    }
    Ok(FiberCurve {
        z,
        loops,
        warnings: inc.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn linear() -> CircleFamily {
        CircleFamily::from_exprs("t", "1", [-1.1, 1.1]).unwrap()
    }

    fn unit_circle(n: usize, ccw: bool) -> Loop {
        let s = if ccw { 1.0 } else { -1.0 };
        let pts: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, s * 2.0 * PI * k as f64 / n as f64))
            .collect();
        Loop::from_points(&pts)
    }

    #[test]
    fn incidence_linear_closed_form() {
        let inc = incidence_intervals(&linear(), c(0.0, 0.4), 1024, 1e-10).unwrap();
        let h = (1.0f64 - 0.16).sqrt();
        assert_eq!(inc.intervals.len(), 1);
        assert!((inc.intervals[0].0 + h).abs() < 1e-12);
        assert!((inc.intervals[0].1 - h).abs() < 1e-12);
        let empty = incidence_intervals(&linear(), c(2.0, 2.0), 1024, 1e-10).unwrap();
        assert!(empty.intervals.is_empty());
        assert!(matches!(
            incidence_intervals(&linear(), c(1.05, 0.0), 1024, 1e-10),
            Err(Error::InEndDisc { which: "beta", .. })
        ));
        assert!(incidence_intervals(&linear(), c(0.0, 0.4), 100, 1e-10).is_err());
    }

    #[test]
    fn narrow_interval_between_grid_points() {
        // z just below the envelope Im z = 1: interval half-width ~ 1.4e-4,
        // far below the grid spacing.
        let z = c(0.0123, 1.0 - 1e-8);
        let inc = incidence_intervals(&linear(), z, 256, 1e-12).unwrap();
        assert_eq!(inc.intervals.len(), 1);
        let half = (1.0 - z.im * z.im).sqrt();
        assert!((inc.intervals[0].0 - (z.re - half)).abs() < 1e-12);
        assert!((inc.intervals[0].1 - (z.re + half)).abs() < 1e-12);
    }

    #[test]
    fn tangency_warning() {
        let z = c(0.3, 1.0 + 1e-13);
        let inc = incidence_intervals(&linear(), z, 256, 1e-10).unwrap();
        assert!(inc.intervals.is_empty());
        assert_eq!(inc.warnings.len(), 1);
        assert!((inc.warnings[0].t - 0.3).abs() < 1e-6);
    }

    #[test]
    fn fiber_points() {
        let f = linear();
        let w = fiber_point(&f, 0.0, c(0.0, 0.4)).unwrap();
        assert!((w.as_finite().unwrap() - c(0.0, -2.5)).norm() < 1e-12);
        assert_eq!(fiber_point(&f, 0.0, c(0.0, 0.0)).unwrap(), SpherePoint::Infinity);
        let w = fiber_point(&f, 0.84f64.sqrt(), c(0.0, 0.4)).unwrap();
        assert!((w.as_finite().unwrap() - c(0.0, -0.4)).norm() < 1e-12);
    }

    #[test]
    fn linear_loop_closes() {
        let fc = build_fiber_curve(&linear(), c(0.0, 0.4), &SamplingController::default()).unwrap();
        assert_eq!(fc.loops.len(), 1);
        let lp = &fc.loops[0];
        assert!(!lp.passes_infinity);
        assert_eq!(lp.chart, Chart::Finite);
        for i in [0, lp.len() - 1] {
            assert!((lp.point(i).as_finite().unwrap() - c(0.0, -0.4)).norm() < 1e-8);
        }
        assert!(lp.min_separation() > 0.0);
        assert!(lp.len() <= 4096);
    }

    #[test]
    fn loop_through_infinity_on_centers_curve() {
        let fc = build_fiber_curve(&linear(), c(0.05, 0.0), &SamplingController::default()).unwrap();
        assert_eq!(fc.loops.len(), 1);
        let lp = &fc.loops[0];
        assert!(lp.passes_infinity);
        assert_eq!(lp.chart, Chart::Inverted);
        assert!(lp.samples.iter().map(|s| s.value.norm()).fold(f64::INFINITY, f64::min) < 0.05);
    }

    #[test]
    fn unit_circle_indices() {
        let lp = unit_circle(400, true);
        assert_eq!(winding_index(&lp, SpherePoint::finite(0.0, 0.0)).unwrap(), 1);
        assert_eq!(winding_index(&lp, SpherePoint::finite(3.0, 0.0)).unwrap(), 0);
        assert_eq!(winding_index(&lp, SpherePoint::Infinity).unwrap(), 0);
        assert!(matches!(
            winding_index(&lp, SpherePoint::finite(1.0, 0.0)),
            Err(Error::OnCurve { .. })
        ));
        // Reversed orientation: the unbounded side is now on the left.
        let rev = unit_circle(400, false);
        assert_eq!(winding_index(&rev, SpherePoint::finite(0.0, 0.0)).unwrap(), 0);
        assert_eq!(winding_index(&rev, SpherePoint::Infinity).unwrap(), 1);
    }

    #[test]
    fn classification_examples() {
        let single = classify_regions(&[unit_circle(200, true)], 400).unwrap();
        assert!(single.quasi_simple);

        // Limaçon r = 1/2 + cos θ: inner loop winds twice.
        let lim: Vec<Complex64> = (0..800)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 800.0;
                Complex64::from_polar(0.5 + th.cos(), th)
            })
            .collect();
        let res = classify_regions(&[Loop::from_points(&lim)], 400).unwrap();
        assert!(!res.quasi_simple);
        assert!(res.probes.iter().any(|p| p.membership == Membership::Other(2)));

        let outer: Vec<Complex64> =
            (0..300).map(|k| Complex64::from_polar(2.0, 2.0 * PI * k as f64 / 300.0)).collect();
        let nested = [unit_circle(300, true), Loop::from_points(&outer)];
        assert!(!classify_regions(&nested, 400).unwrap().quasi_simple);
        // Opposite orientations bound an annulus: quasi-simple.
        let annulus = [unit_circle(300, false), Loop::from_points(&outer)];
        assert!(classify_regions(&annulus, 400).unwrap().quasi_simple);
    }

    #[test]
    fn csv_columns() {
        let fc = build_fiber_curve(&linear(), c(0.0, 0.4), &SamplingController::default()).unwrap();
        let mut buf = Vec::new();
        fc.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,w_re,w_im,chart"));
        assert_eq!(lines.count(), fc.loops[0].len());
        assert!(fc.to_svg().starts_with("<svg"));
    }
}
