//! Loop continuation along a path in the `z`-plane.
//!
//! Fibers are built at stations along the path and their loops matched by
//! overlap of incidence intervals. Steps whose matching is not a bijection are
//! bisected until the change is pinned to a single event (a loop created,
//! annihilated, split or merged at a crossing of `P`); a loop whose index at
//! `∞` flips has crossed the centers curve `C`, and the crossing is polished to
//! a station lying exactly on `C`. Loops are grouped into classes by
//! union-find over the matchings.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::critical::{piece_side, pieces, sliding_jet, tangency_case, Branch, CaseLabel, CriticalSet};
use crate::error::{Error, Result};
use crate::family::CircleFamily;
use crate::fiber::{build_fiber_curve, winding_index, Loop, SamplingController};
use crate::roots::{bisect, golden_min};
use crate::sphere::{Chart, SpherePoint};
use crate::svg::{palette, SvgCanvas};

/// Minimum transversality (sine of the crossing angle) and relative
/// clearance required of a separating line.
pub const LINE_MARGIN_TOL: f64 = 1e-3;
pub const MAX_LINE_ATTEMPTS: usize = 1000;
/// Chordal loop diameter below which a loop counts as contracted to `z̄`.
pub const CONTRACTED_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PCrossing {
    pub z: Complex64,
    /// Position along the line.
    pub s: f64,
    pub t: f64,
    pub branch: Branch,
    pub case: Option<CaseLabel>,
    /// Sine of the crossing angle.
    pub transversality: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CCrossing {
    pub z: Complex64,
    pub s: f64,
    pub t: f64,
    pub transversality: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineMargins {
    /// Smallest crossing sine over `P` and `C`.
    pub transversality: f64,
    /// Closest approach of a non-crossing branch or of `C`, relative to scale.
    pub near_miss: f64,
    /// Distance to the nearest singular point of `P`, relative to scale.
    pub singular: f64,
    /// Gap between the line and the end discs, relative to scale.
    pub end_discs: f64,
    /// Smallest spacing between consecutive crossings, relative to scale.
    pub separation: f64,
}

impl LineMargins {
    fn worst(&self) -> f64 {
        [self.transversality, self.near_miss, self.singular, self.end_discs, self.separation]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// The line `{ base + s · direction }`.
#[derive(Clone, Debug, Serialize)]
pub struct SeparatingLine {
    pub base: Complex64,
    /// Unit direction.
    pub direction: Complex64,
    pub perturbed: bool,
    pub attempts: usize,
    pub crossings_p: Vec<PCrossing>,
    pub crossings_c: Vec<CCrossing>,
    pub margins: LineMargins,
    /// Parameter range covering the bounding box of Ω with a margin.
    pub extent: (f64, f64),
    /// Half-width of the band around the line.
    pub band_half_width: f64,
}

impl SeparatingLine {
    pub fn point(&self, s: f64) -> Complex64 {
        self.base + self.direction * s
    }

    /// Signed distance to the line, positive on the left.
    pub fn side(&self, z: Complex64) -> f64 {
        (self.direction.conj() * (z - self.base)).im
    }

    pub fn path(&self) -> Vec<Complex64> {
        vec![self.point(self.extent.0), self.point(self.extent.1)]
    }
}

struct LineCandidate {
    base: Complex64,
    direction: Complex64,
}

fn line_crossings(
    family: &CircleFamily,
    critical: &CriticalSet,
    cand: &LineCandidate,
    scale: f64,
) -> Result<(Vec<PCrossing>, Vec<CCrossing>, LineMargins)> {
    let dir = cand.direction;
    let side = |z: Complex64| (dir.conj() * (z - cand.base)).im;
    let along = |z: Complex64| (dir.conj() * (z - cand.base)).re;
    let mut near_miss = f64::INFINITY;
    let mut transversality = f64::INFINITY;

    let mut crossings_p = Vec::new();
    for br in &critical.branches {
        let g = |t: f64, piece_end: f64| -> f64 {
            sliding_jet(family, t, Some(piece_side(t, piece_end)), br.branch)
                .map(|j| side(j.value()))
                .unwrap_or(f64::NAN)
        };
        let samples = &br.samples;
        for k in 0..samples.len().saturating_sub(1) {
            let (a, b) = (&samples[k], &samples[k + 1]);
            if a.piece != b.piece {
                continue;
            }
            let piece_end = pieces(family)[a.piece].1;
            let (ga, gb) = (side(a.p), side(b.p));
            if (ga > 0.0) != (gb > 0.0) {
                let t = bisect(|t| g(t, piece_end), a.t, b.t, 1e-14);
                let j = sliding_jet(family, t, Some(piece_side(t, piece_end)), br.branch)?;
                let dp = j.derivative(1);
                let sine = if dp.norm() > 0.0 { (dir.conj() * dp).im.abs() / dp.norm() } else { 0.0 };
                transversality = transversality.min(sine);
                let case = tangency_case(family, br.branch, t, 1e-6).ok().map(|c| c.label);
                crossings_p.push(PCrossing {
                    z: j.value(),
                    s: along(j.value()),
                    t,
                    branch: br.branch,
                    case,
                    transversality: sine,
                });
            } else if k > 0 && samples[k - 1].piece == a.piece {
                let gp = side(samples[k - 1].p);
                if (gp > 0.0) == (ga > 0.0) && ga.abs() <= gp.abs() && ga.abs() <= gb.abs() {
                    let f = |t: f64| g(t, piece_end).abs();
                    let (_, m) = golden_min(&f, samples[k - 1].t, b.t, 1e-14);
                    near_miss = near_miss.min(m / scale);
                }
            }
        }
    }

    let n = 4096;
    let ts: Vec<f64> = family.grid(n).collect();
    let gs: Vec<f64> = ts.iter().map(|&t| family.center(t).map(side)).collect::<Result<_>>()?;
    let gc = |t: f64| family.center(t).map(side).unwrap_or(f64::NAN);
    let mut crossings_c = Vec::new();
    for k in 0..n - 1 {
        if (gs[k] > 0.0) != (gs[k + 1] > 0.0) {
            let t = bisect(gc, ts[k], ts[k + 1], 1e-14);
            let j = family.jet(t)?;
            let dc = j.c[1];
            let sine = (dir.conj() * dc).im.abs() / dc.norm();
            transversality = transversality.min(sine);
            crossings_c.push(CCrossing {
                z: j.c[0],
                s: along(j.c[0]),
                t,
                transversality: sine,
            });
        } else if k > 0
            && (gs[k - 1] > 0.0) == (gs[k] > 0.0)
            && gs[k].abs() <= gs[k - 1].abs()
            && gs[k].abs() <= gs[k + 1].abs()
        {
            let f = |t: f64| gc(t).abs();
            let (_, m) = golden_min(&f, ts[k - 1], ts[k + 1], 1e-14);
            near_miss = near_miss.min(m / scale);
        }
    }

    let singular = critical
        .singular_points
        .iter()
        .map(|sp| side(sp.p).abs() / scale)
        .fold(f64::INFINITY, f64::min);
    let (ca, ra) = family.jet0(family.alpha())?;
    let (cb, rb) = family.jet0(family.beta())?;
    let (sa, sb) = (side(ca), side(cb));
    let end_discs = if sa * sb < 0.0 {
        (sa.abs() - ra).min(sb.abs() - rb) / scale
    } else {
        -1.0
    };
    let mut positions: Vec<f64> = crossings_p.iter().map(|c| c.s).chain(crossings_c.iter().map(|c| c.s)).collect();
    positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let separation = positions
        .windows(2)
        .map(|w| (w[1] - w[0]) / scale)
        .fold(f64::INFINITY, f64::min);
    crossings_p.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
    crossings_c.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
    Ok((
        crossings_p,
        crossings_c,
        LineMargins {
            transversality,
            near_miss,
            singular,
            end_discs,
            separation,
        },
    ))
}

/// Clips the line to the bounding box of Ω enlarged by 10% of its diagonal.
fn line_extent(family: &CircleFamily, cand: &LineCandidate) -> Result<(f64, f64)> {
    let bb = family.bounding_box(512)?;
    let pad = 0.1 * ((bb[1] - bb[0]).hypot(bb[3] - bb[2]));
    let (x0, x1, y0, y1) = (bb[0] - pad, bb[1] + pad, bb[2] - pad, bb[3] + pad);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (p, d, a, b) in [
        (cand.base.re, cand.direction.re, x0, x1),
        (cand.base.im, cand.direction.im, y0, y1),
    ] {
        if d.abs() < 1e-15 {
            continue;
        }
        let (s0, s1) = ((a - p) / d, (b - p) / d);
        lo = lo.max(s0.min(s1));
        hi = hi.min(s0.max(s1));
    }
    Ok((lo, hi))
}

/// A line through the gap between `C_α` and `C_β`, perpendicular to the
/// segment joining their centers, perturbed (deterministically from `seed`)
/// until it meets `P` and `C` transversally, avoids the singular points of
/// `P`, and crosses `C` an odd number of times.
pub fn choose_separating_line(
    family: &CircleFamily,
    critical: &CriticalSet,
    seed: u64,
) -> Result<SeparatingLine> {
    let (ca, ra) = family.jet0(family.alpha())?;
    let (cb, rb) = family.jet0(family.beta())?;
    let d = (cb - ca).norm();
    let gap = d - ra - rb;
    if !(gap > 0.0) {
        return Err(Error::NoSeparatingLine(format!(
            "end discs are not disjoint (gap {gap:.3e})"
        )));
    }
    let u = (cb - ca) / d;
    let mid = ca + u * (ra + 0.5 * gap);
    let scale = family.scale();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<LineMargins> = None;
    for attempt in 0..MAX_LINE_ATTEMPTS {
        let (offset, tilt) = if attempt == 0 {
            (0.0, 0.0)
        } else {
            let spread = (attempt as f64 / 50.0).min(1.0);
            (
                rng.random_range(-0.4..0.4) * gap * spread,
                rng.random_range(-0.3..0.3) * spread,
            )
        };
        let cand = LineCandidate {
            base: mid + u * offset,
            direction: Complex64::i() * u * Complex64::from_polar(1.0, tilt),
        };
        let (crossings_p, crossings_c, margins) = line_crossings(family, critical, &cand, scale)?;
        let ok = margins.worst() > LINE_MARGIN_TOL && crossings_c.len() % 2 == 1;
        if ok {
            let extent = line_extent(family, &cand)?;
            return Ok(SeparatingLine {
                base: cand.base,
                direction: cand.direction,
                perturbed: attempt > 0,
                attempts: attempt + 1,
                crossings_p,
                crossings_c,
                band_half_width: 0.1 * margins.end_discs * scale,
                margins,
                extent,
            });
        }
        if worst.map_or(true, |w| margins.worst() > w.worst()) {
            worst = Some(margins);
        }
    }
    Err(Error::NoSeparatingLine(format!(
        "{MAX_LINE_ATTEMPTS} attempts; best margins {:?}",
        worst
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrackingController {
    /// Initial number of uniform steps along the path.
    pub steps: usize,
    /// Events are localized to this fraction of the path length; steps are
    /// never refined below it.
    pub min_step: f64,
    /// Index flips at `∞` are localized to this fraction before the
    /// crossing with `C` is polished.
    pub flip_step: f64,
    pub sampling: SamplingController,
}

impl Default for TrackingController {
    fn default() -> Self {
        TrackingController {
            steps: 128,
            min_step: 1e-9,
            flip_step: 1e-6,
            sampling: SamplingController::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LoopSummary {
    pub interval: (f64, f64),
    pub chart: Chart,
    pub passes_infinity: bool,
    pub chordal_diameter: f64,
    /// Sphere-normalized index of `∞`; absent when `∞` is on the loop.
    pub infinity_index: Option<i32>,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Station {
    /// Arc length along the path.
    pub s: f64,
    pub z: Complex64,
    #[serde(skip)]
    pub loops: Vec<Loop>,
    pub summary: Vec<LoopSummary>,
}

impl Station {
    pub fn passes_infinity(&self) -> bool {
        self.summary.iter().any(|l| l.passes_infinity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Create,
    Annihilate,
    Split,
    Merge,
    CrossInfinity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "set", rename_all = "lowercase")]
pub enum EventCause {
    P {
        branch: Branch,
        t: f64,
        case: Option<CaseLabel>,
        distance: f64,
    },
    C {
        t: f64,
        distance: f64,
    },
}

impl EventCause {
    pub fn distance(&self) -> f64 {
        match self {
            EventCause::P { distance, .. } | EventCause::C { distance, .. } => *distance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub s: f64,
    pub z: Complex64,
    pub station_before: usize,
    pub station_after: usize,
    pub cause: EventCause,
}

/// Correspondence of loop `from.1` at station `from.0` with loop `to.1` at
/// station `to.0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Link {
    pub from: (usize, usize),
    pub to: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopClass {
    pub id: usize,
    pub members: Vec<(usize, usize)>,
    /// Stations at which some member passes through `∞`.
    pub infinity_stations: Vec<usize>,
    pub first_station: usize,
    pub last_station: usize,
}

impl LoopClass {
    pub fn infinity_parity_odd(&self) -> bool {
        self.infinity_stations.len() % 2 == 1
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuationTrace {
    pub path: Vec<Complex64>,
    pub stations: Vec<Station>,
    pub links: Vec<Link>,
    pub events: Vec<Event>,
    pub classes: Vec<LoopClass>,
    /// Unique class with an odd number of `∞` stations, if any.
    pub selected: Option<usize>,
    /// First and last stations of the selected class.
    pub band_edges: Option<(usize, usize)>,
}

struct Path {
    points: Vec<Complex64>,
    cumulative: Vec<f64>,
}

impl Path {
    fn new(points: &[Complex64]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("path needs at least two points".into()));
        }
        let mut cumulative = vec![0.0];
        for w in points.windows(2) {
            cumulative.push(cumulative[cumulative.len() - 1] + (w[1] - w[0]).norm());
        }
        if !(cumulative[cumulative.len() - 1] > 0.0) {
            return Err(Error::InvalidArgument("path has zero length".into()));
        }
        Ok(Path {
            points: points.to_vec(),
            cumulative,
        })
    }

    fn length(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    fn segment(&self, s: f64) -> usize {
        let k = self.cumulative.partition_point(|&c| c <= s);
        k.clamp(1, self.points.len() - 1) - 1
    }

    fn direction(&self, k: usize) -> Complex64 {
        let d = self.points[k + 1] - self.points[k];
        d / d.norm()
    }

    fn at(&self, s: f64) -> Complex64 {
        let k = self.segment(s);
        self.points[k] + self.direction(k) * (s - self.cumulative[k])
    }
}

fn nearest_on_c(family: &CircleFamily, z: Complex64) -> Result<(f64, f64)> {
    let n = 2048;
    let ts: Vec<f64> = family.grid(n).collect();
    let dist = |t: f64| family.center(t).map(|c| (c - z).norm()).unwrap_or(f64::INFINITY);
    let mut best = (ts[0], f64::INFINITY);
    for &t in &ts {
        let d = dist(t);
        if d < best.1 {
            best = (t, d);
        }
    }
    let h = (family.beta() - family.alpha()) / (n - 1) as f64;
    let (t, d) = golden_min(&dist, (best.0 - h).max(family.alpha()), (best.0 + h).min(family.beta()), 1e-14);
    Ok(if d < best.1 { (t, d) } else { best })
}

fn nearest_on_p(family: &CircleFamily, z: Complex64) -> Result<(Branch, f64, f64)> {
    let mut best = (Branch::Plus, family.alpha(), f64::INFINITY);
    for branch in [Branch::Plus, Branch::Minus] {
        for (t0, t1) in pieces(family) {
            let dist = |t: f64| {
                sliding_jet(family, t, Some(piece_side(t, t1)), branch)
                    .map(|j| (j.value() - z).norm())
                    .unwrap_or(f64::INFINITY)
            };
            let m = 512;
            let h = (t1 - t0) / m as f64;
            let mut local = (t0, f64::INFINITY);
            for k in 0..=m {
                let t = t0 + h * k as f64;
                let d = dist(t);
                if d < local.1 {
                    local = (t, d);
                }
            }
            let (t, d) = golden_min(&dist, (local.0 - h).max(t0), (local.0 + h).min(t1), 1e-14);
            let local = if d < local.1 { (t, d) } else { local };
            if local.1 < best.2 {
                best = (branch, local.0, local.1);
            }
        }
    }
    Ok(best)
}

enum Outcome {
    Continuous(Vec<(usize, usize)>),
    Flip(Vec<(usize, usize)>),
    Event(EventKind, Vec<(usize, usize)>),
    Ambiguous,
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0.max(b.0) <= a.1.min(b.1)
}

/// Overlap graph between the loops of two stations, split into components.
fn compare(a: &Station, b: &Station) -> Outcome {
    let (na, nb) = (a.summary.len(), b.summary.len());
    let mut uf = UnionFind::new(na + nb);
    let mut edges = Vec::new();
    for i in 0..na {
        for j in 0..nb {
            if overlaps(a.summary[i].interval, b.summary[j].interval) {
                uf.union(i, na + j);
                edges.push((i, j));
            }
        }
    }
    let mut comps: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for i in 0..na {
        comps.entry(uf.find(i)).or_default().0 += 1;
    }
    for j in 0..nb {
        comps.entry(uf.find(na + j)).or_default().1 += 1;
    }
    let irregular: Vec<(usize, usize)> = comps.values().copied().filter(|&c| c != (1, 1)).collect();
    let flipped = edges.iter().any(|&(i, j)| {
        let one_to_one = comps[&uf.find(i)] == (1, 1);
        match (a.summary[i].infinity_index, b.summary[j].infinity_index) {
            (Some(x), Some(y)) => one_to_one && x != y,
            _ => false,
        }
    });
    match irregular.as_slice() {
        [] if flipped => Outcome::Flip(edges),
        [] => Outcome::Continuous(edges),
        [c] if !flipped => {
            let kind = match c {
                (0, 1) => EventKind::Create,
                (1, 0) => EventKind::Annihilate,
                (1, 2) => EventKind::Split,
                (2, 1) => EventKind::Merge,
                _ => return Outcome::Ambiguous,
            };
            Outcome::Event(kind, edges)
        }
        _ => Outcome::Ambiguous,
    }
}

struct Tracker<'a> {
    family: &'a CircleFamily,
    path: Path,
    ctl: TrackingController,
    stations: Vec<Station>,
    links: Vec<Link>,
    events: Vec<Event>,
}

impl Tracker<'_> {
    fn station(&self, s: f64) -> Result<Station> {
        self.station_at(s, self.path.at(s))
    }

    fn station_at(&self, s: f64, z: Complex64) -> Result<Station> {
        let fiber = build_fiber_curve(self.family, z, &self.ctl.sampling)?;
        let summary = fiber
            .loops
            .iter()
            .map(|lp| LoopSummary {
                interval: lp.interval,
                chart: lp.chart,
                passes_infinity: lp.passes_infinity,
                chordal_diameter: lp.chordal_diameter(),
                infinity_index: if lp.passes_infinity {
                    None
                } else {
                    winding_index(lp, SpherePoint::Infinity).ok()
                },
                samples: lp.len(),
            })
            .collect();
        Ok(Station {
            s,
            z,
            loops: fiber.loops,
            summary,
        })
    }

    fn push(&mut self, st: Station) -> Result<usize> {
        let idx = self.stations.len();
        if st.passes_infinity() {
            let (t, distance) = nearest_on_c(self.family, st.z)?;
            self.events.push(Event {
                kind: EventKind::CrossInfinity,
                s: st.s,
                z: st.z,
                station_before: idx,
                station_after: idx,
                cause: EventCause::C { t, distance },
            });
        }
        self.stations.push(st);
        Ok(idx)
    }

    fn link(&mut self, ia: usize, ib: usize, edges: &[(usize, usize)]) {
        for &(i, j) in edges {
            self.links.push(Link {
                from: (ia, i),
                to: (ib, j),
            });
        }
    }

    /// Station exactly on `C` between the stations `ia` and `b`, by Newton
    /// iteration on `path(s) = c(t)`.
    fn crossing_station(&self, ia: usize, b: &Station, edges: &[(usize, usize)]) -> Result<Option<Station>> {
        let a = &self.stations[ia];
        let (lo, hi) = edges.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &(i, j)| {
            let (x, y) = (a.summary[i].interval, b.summary[j].interval);
            (acc.0.min(x.0).min(y.0), acc.1.max(x.1).max(y.1))
        });
        let mut s = 0.5 * (a.s + b.s);
        let z = self.path.at(s);
        let dist = |t: f64| self.family.center(t).map(|c| (c - z).norm()).unwrap_or(f64::INFINITY);
        let (mut t, _) = golden_min(&dist, lo, hi, 1e-14);
        let k = self.path.segment(s);
        let dir = self.path.direction(k);
        let tol = 1e-15 * self.family.scale().max(z.norm());
        for _ in 0..50 {
            let j = self.family.jet(t)?;
            let f = self.path.at(s) - j.c[0];
            if f.norm() <= tol {
                break;
            }
            let dc = j.c[1];
            // [dir, -c'] (ds, dt) = -f
            let det = dir.re * (-dc.im) - (-dc.re) * dir.im;
            if det == 0.0 {
                return Ok(None);
            }
            let ds = (-f.re * (-dc.im) - (-dc.re) * -f.im) / det;
            let dt = (dir.re * -f.im - dir.im * -f.re) / det;
            s += ds;
            t = (t + dt).clamp(self.family.alpha(), self.family.beta());
        }
        let slack = 1e-3 * (b.s - a.s);
        if !(s > a.s - slack && s < b.s + slack) {
            return Ok(None);
        }
        let s = s.clamp(a.s, b.s);
        let z = self.family.center(t)?;
        let st = self.station_at(s, z)?;
        Ok(st.passes_infinity().then_some(st))
    }

    /// Processes the step from the pushed station `ia` to `b`; returns the
    /// index of `b` once pushed.
    fn walk(&mut self, ia: usize, b: Station) -> Result<usize> {
        let length = self.path.length();
        let a_s = self.stations[ia].s;
        let width = b.s - a_s;
        let outcome = compare(&self.stations[ia], &b);
        let leaf = match outcome {
            Outcome::Continuous(_) => true,
            Outcome::Flip(_) => width <= self.ctl.flip_step * length,
            Outcome::Event(..) | Outcome::Ambiguous => width <= self.ctl.min_step * length,
        };
        if !leaf {
            let mid = self.station(a_s + 0.5 * width)?;
            let im = self.walk(ia, mid)?;
            return self.walk(im, b);
        }
        match outcome {
            Outcome::Continuous(edges) => {
                let ib = self.push(b)?;
                self.link(ia, ib, &edges);
                Ok(ib)
            }
            Outcome::Flip(edges) => match self.crossing_station(ia, &b, &edges)? {
                Some(x) => {
                    let ix = self.push(x)?;
                    let (xa, xb) = (compare(&self.stations[ia], &self.stations[ix]), compare(&self.stations[ix], &b));
                    match (xa, xb) {
                        (Outcome::Continuous(e1), Outcome::Continuous(e2)) => {
                            self.link(ia, ix, &e1);
                            let ib = self.push(b)?;
                            self.link(ix, ib, &e2);
                            Ok(ib)
                        }
                        _ => Err(self.ambiguous(ia, &b)),
                    }
                }
                None => Err(self.ambiguous(ia, &b)),
            },
            Outcome::Event(kind, edges) => {
                let s = 0.5 * (a_s + b.s);
                let z = self.path.at(s);
                let (branch, t, distance) = nearest_on_p(self.family, z)?;
                let case = tangency_case(self.family, branch, t, 1e-6).ok().map(|c| c.label);
                let ib = self.push(b)?;
                self.link(ia, ib, &edges);
                self.events.push(Event {
                    kind,
                    s,
                    z,
                    station_before: ia,
                    station_after: ib,
                    cause: EventCause::P {
                        branch,
                        t,
                        case,
                        distance,
                    },
                });
                Ok(ib)
            }
            Outcome::Ambiguous => Err(self.ambiguous(ia, &b)),
        }
    }

    fn ambiguous(&self, ia: usize, b: &Station) -> Error {
        Error::AmbiguousMatching {
            from: format!("{}", self.stations[ia].z),
            to: format!("{}", b.z),
        }
    }
}

/// Tracks the loops of `Γ_z` along a polyline path.
pub fn track_loops(family: &CircleFamily, path: &[Complex64], ctl: &TrackingController) -> Result<ContinuationTrace> {
    if ctl.steps == 0 || !(ctl.min_step > 0.0) || !(ctl.flip_step > 0.0) {
        return Err(Error::InvalidArgument("tracking controller needs positive steps".into()));
    }
    let path = Path::new(path)?;
    let length = path.length();
    let mut tracker = Tracker {
        family,
        path,
        ctl: *ctl,
        stations: Vec::new(),
        links: Vec::new(),
        events: Vec::new(),
    };
    let first = tracker.station(0.0)?;
    let mut ia = tracker.push(first)?;
    for k in 1..=ctl.steps {
        let s = if k == ctl.steps { length } else { length * k as f64 / ctl.steps as f64 };
        let st = tracker.station(s)?;
        ia = tracker.walk(ia, st)?;
    }
    let Tracker {
        path,
        stations,
        links,
        events,
        ..
    } = tracker;
    let classes = build_classes(&stations, &links);
    let odd: Vec<&LoopClass> = classes.iter().filter(|c| c.infinity_parity_odd()).collect();
    let selected = (odd.len() == 1).then(|| odd[0].id);
    let band_edges = selected.map(|id| (classes[id].first_station, classes[id].last_station));
    Ok(ContinuationTrace {
        path: path.points,
        stations,
        links,
        events,
        classes,
        selected,
        band_edges,
    })
}

/// Tracks along the separating line over its whole extent.
pub fn track_line(family: &CircleFamily, line: &SeparatingLine, ctl: &TrackingController) -> Result<ContinuationTrace> {
    track_loops(family, &line.path(), ctl)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index as root keeps class numbering stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn build_classes(stations: &[Station], links: &[Link]) -> Vec<LoopClass> {
    let mut offset = Vec::with_capacity(stations.len());
    let mut n = 0;
    for st in stations {
        offset.push(n);
        n += st.summary.len();
    }
    let mut uf = UnionFind::new(n);
    for l in links {
        uf.union(offset[l.from.0] + l.from.1, offset[l.to.0] + l.to.1);
    }
    let mut by_root: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (si, st) in stations.iter().enumerate() {
        for li in 0..st.summary.len() {
            by_root.entry(uf.find(offset[si] + li)).or_default().push((si, li));
        }
    }
    by_root
        .into_values()
        .enumerate()
        .map(|(id, members)| {
            let mut infinity_stations: Vec<usize> = members
                .iter()
                .filter(|&&(si, li)| stations[si].summary[li].passes_infinity)
                .map(|&(si, _)| si)
                .collect();
            infinity_stations.dedup();
            LoopClass {
                id,
                first_station: members[0].0,
                last_station: members[members.len() - 1].0,
                members,
                infinity_stations,
            }
        })
        .collect()
}

/// Classes of the trace and the selected class: the unique one with an odd
/// number of stations at which a member passes `∞`.
pub fn loop_classes(trace: &ContinuationTrace) -> Result<(&[LoopClass], usize)> {
    let odd: Vec<usize> = trace.classes.iter().filter(|c| c.infinity_parity_odd()).map(|c| c.id).collect();
    match odd.as_slice() {
        [id] => Ok((&trace.classes, *id)),
        _ => {
            let dump: Vec<String> = trace
                .classes
                .iter()
                .map(|c| {
                    format!(
                        "class {}: {} loops, stations {}..{}, ∞ at {:?}",
                        c.id,
                        c.members.len(),
                        c.first_station,
                        c.last_station,
                        c.infinity_stations
                    )
                })
                .collect();
            Err(Error::NoOddClass(format!(
                "{} classes with odd ∞-parity; {}",
                odd.len(),
                dump.join("; ")
            )))
        }
    }
}

/// Loops of the class `class` at the station located at `z`.
#[derive(Clone, Debug, Serialize)]
pub struct GSelection {
    pub station: usize,
    #[serde(skip)]
    pub loops: Vec<Loop>,
    pub loop_indices: Vec<usize>,
    /// Empty, or every loop has shrunk to (nearly) the point `z̄`.
    pub contracted: bool,
}

pub fn select_g(trace: &ContinuationTrace, class: usize, z: Complex64) -> Result<GSelection> {
    let tol = 1e-12 * z.norm().max(1.0);
    let station = trace
        .stations
        .iter()
        .position(|st| (st.z - z).norm() <= tol)
        .ok_or_else(|| Error::NotAStation(format!("{z}")))?;
    let cls = trace
        .classes
        .get(class)
        .ok_or_else(|| Error::InvalidArgument(format!("no class {class}")))?;
    let loop_indices: Vec<usize> = cls
        .members
        .iter()
        .filter(|&&(si, _)| si == station)
        .map(|&(_, li)| li)
        .collect();
    let st = &trace.stations[station];
    let loops: Vec<Loop> = loop_indices.iter().map(|&li| st.loops[li].clone()).collect();
    let contracted = loop_indices
        .iter()
        .all(|&li| st.summary[li].chordal_diameter < CONTRACTED_TOL);
    Ok(GSelection {
        station,
        loops,
        loop_indices,
        contracted,
    })
}

impl ContinuationTrace {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Loops of `class` at station `si`.
    pub fn class_loops(&self, class: usize, si: usize) -> Vec<&Loop> {
        self.classes[class]
            .members
            .iter()
            .filter(|&&(s, _)| s == si)
            .map(|&(_, li)| &self.stations[si].loops[li])
            .collect()
    }

    /// Row of panels showing the loops at up to `panels` stations spread
    /// along the path, colored by class.
    pub fn filmstrip_svg(&self, panels: usize) -> String {
        let n = self.stations.len();
        let panels = panels.clamp(1, n.max(1));
        let mut class_of = BTreeMap::new();
        for c in &self.classes {
            for &m in &c.members {
                class_of.insert(m, c.id);
            }
        }
        let length = self.stations.last().map_or(1.0, |s| s.s.max(1e-300));
        let mut picks: Vec<usize> = (0..panels)
            .map(|k| {
                let target = length * (k as f64 + 0.5) / panels as f64;
                self.stations
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1.s - target).abs().partial_cmp(&(b.1.s - target).abs()).unwrap())
                    .map_or(0, |(i, _)| i)
            })
            .collect();
        picks.dedup();
        let size = 200.0;
        let mut body = String::new();
        for (col, &si) in picks.iter().enumerate() {
            let st = &self.stations[si];
            let zb = st.z.conj();
            let clip = 8.0;
            let mut pts = vec![zb];
            for lp in &st.loops {
                pts.extend(lp.points().iter().filter_map(|p| p.as_finite()).filter(|w| (w - zb).norm() < clip));
            }
            let mut canvas = SvgCanvas::fit(&pts, size, 0.1);
            for (li, lp) in st.loops.iter().enumerate() {
                let color = palette(class_of.get(&(si, li)).copied().unwrap_or(0));
                let mut run = Vec::new();
                for p in lp.points() {
                    match p.as_finite() {
                        Some(w) if (w - zb).norm() < clip => run.push(w),
                        _ => {
                            canvas.polyline(&run, color, 1.2);
                            run.clear();
                        }
                    }
                }
                canvas.polyline(&run, color, 1.2);
            }
            canvas.dot(zb, "#000", 2.0);
            body.push_str(&canvas.finish_at(col as f64 * (size + 8.0), 0.0));
        }
        let width = picks.len() as f64 * (size + 8.0);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{h}\">\n{body}</svg>\n",
            h = size * 1.5
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::build_critical_curves;
    use crate::family::PieceSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn linear() -> CircleFamily {
        CircleFamily::from_exprs("t", "1", [-1.1, 1.1]).unwrap()
    }

    #[test]
    fn linear_line_is_imaginary_axis() {
        let f = linear();
        let cs = build_critical_curves(&f, 256).unwrap();
        let line = choose_separating_line(&f, &cs, 7).unwrap();
        assert!(!line.perturbed);
        assert!(line.base.norm() < 1e-12);
        assert!((line.direction.re).abs() < 1e-12);
        assert_eq!(line.crossings_c.len(), 1);
        assert!(line.crossings_c[0].z.norm() < 1e-12);
        assert_eq!(line.crossings_p.len(), 2);
        let mut ims: Vec<f64> = line.crossings_p.iter().map(|p| p.z.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        assert!((line.band_half_width - 0.01).abs() < 1e-9);
    }

    #[test]
    fn line_requires_disjoint_end_discs() {
        let f = CircleFamily::from_exprs("t", "1", [-0.9, 0.9]).unwrap();
        let cs = build_critical_curves(&f, 256).unwrap();
        assert!(matches!(choose_separating_line(&f, &cs, 1), Err(Error::NoSeparatingLine(_))));
    }

    #[test]
    fn linear_trace_events() {
        let f = linear();
        let path = [c(0.0, 0.99), c(0.0, -0.99)];
        let trace = track_loops(&f, &path, &TrackingController::default()).unwrap();
        let kinds: Vec<EventKind> = trace.events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::CrossInfinity]);
        assert!(trace.events[0].z.norm() < 1e-9);
        assert!(trace.stations.iter().all(|s| s.summary.len() == 1));
        assert_eq!(trace.classes.len(), 1);
        assert_eq!(trace.selected, Some(0));

        let path = [c(0.0, 1.01), c(0.0, 0.5)];
        let trace = track_loops(&f, &path, &TrackingController::default()).unwrap();
        assert_eq!(trace.events.len(), 1);
        assert_eq!(trace.events[0].kind, EventKind::Create);
        assert!((trace.events[0].z.im - 1.0).abs() < 1e-8);
        assert!(trace.events[0].cause.distance() < 1e-8);
        assert!(trace.selected.is_none());
    }

    fn hairpin() -> CircleFamily {
        let piece = |c: &str, t0: f64, t1: f64| PieceSpec {
            c: c.into(),
            r: "1".into(),
            t_range: [t0, t1],
        };
        let a = 0.75 * std::f64::consts::PI;
        CircleFamily::piecewise(&[
            piece("-t", -6.0, 0.0),
            piece("0.75*i + 0.75*exp(-i*(pi/2 + t/0.75))", 0.0, a),
            piece("(t - 0.75*pi) + 1.5*i", a, a + 4.0),
        ])
        .unwrap()
    }

    #[test]
    fn coarse_step_is_ambiguous() {
        let ctl = TrackingController {
            steps: 1,
            min_step: 1.0,
            ..TrackingController::default()
        };
        // Both arms gain a loop within the single step.
        let path = [c(2.0, -1.05), c(2.0, 0.55)];
        assert!(matches!(
            track_loops(&hairpin(), &path, &ctl),
            Err(Error::AmbiguousMatching { .. })
        ));
    }

    #[test]
    fn hairpin_split_and_classes() {
        let f = hairpin();
        let path = [c(0.0, 0.75), c(1.0, 0.75)];
        let trace = track_loops(&f, &path, &TrackingController::default()).unwrap();
        let kinds: Vec<EventKind> = trace.events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::Split]);
        assert_eq!(trace.stations[0].summary.len(), 1);
        assert_eq!(trace.stations.last().unwrap().summary.len(), 2);

        let path = [c(2.0, -1.2), c(2.0, 1.2)];
        let trace = track_loops(&f, &path, &TrackingController::default()).unwrap();
        assert_eq!(trace.classes.len(), 2);
        let (_, id) = loop_classes(&trace).unwrap();
        let cls = &trace.classes[id];
        assert_eq!(cls.infinity_stations.len(), 1);
        let zi = trace.stations[cls.infinity_stations[0]].z;
        assert!((zi - c(2.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn select_g_on_linear_trace() {
        let f = linear();
        let path = [c(0.0, 1.2), c(0.0, -1.2)];
        let trace = track_loops(&f, &path, &TrackingController::default()).unwrap();
        let (_, id) = loop_classes(&trace).unwrap();
        let st = trace.stations.iter().find(|s| (s.z.im - 0.45).abs() < 0.01).unwrap();
        let g = select_g(&trace, id, st.z).unwrap();
        assert_eq!(g.loops.len(), 1);
        assert!(!g.contracted);
        let outside = trace.stations.iter().find(|s| s.z.im > 1.05).unwrap();
        let g = select_g(&trace, id, outside.z).unwrap();
        assert!(g.loops.is_empty() && g.contracted);
        assert!(matches!(select_g(&trace, id, c(0.3, 0.3)), Err(Error::NotAStation(_))));
        let (k0, k1) = trace.band_edges.unwrap();
        assert!(trace.stations[k0].summary.iter().all(|l| l.chordal_diameter < CONTRACTED_TOL));
        assert!(trace.stations[k1].summary.iter().all(|l| l.chordal_diameter < CONTRACTED_TOL));
        assert!(trace.to_json().unwrap().contains("CROSS_INFINITY"));
        assert!(trace.filmstrip_svg(6).starts_with("<svg"));
    }
}
