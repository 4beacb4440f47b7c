//! End-to-end verification: hypotheses on the family and the function, the
//! loop machinery, and a direct holomorphy test of the conclusion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy::{loop_constancy_defect, morera_phi_test, phi_quadrature, MoreraResult, ENDPOINT_MARGIN};
use crate::continuation::{choose_separating_line, loop_classes, select_g, track_line, ContinuationTrace, EventKind, TrackingController};
use crate::critical::build_critical_curves;
use crate::error::{Error, Result};
use crate::extension::{consistency_defect, TraceExtensions, TraceSampler};
use crate::family::{CircleFamily, ValidationReport};
use crate::fiber::{classify_regions, polygon_distance, Loop, SamplingController};
use crate::function::FunctionSpec;
use crate::sphere::{Chart, SpherePoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub extendibility: f64,
    pub consistency: f64,
    /// Relative to the absolute Φ-integral over the loops.
    pub phi: f64,
    pub morera: f64,
    pub dbar: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            extendibility: 1e-8,
            consistency: 1e-7,
            phi: 1e-5,
            morera: 1e-4,
            dbar: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerificationConfig {
    /// Samples per boundary trace.
    pub n: usize,
    pub validation_samples: usize,
    /// Parameters in the extendibility sweep.
    pub t_samples: usize,
    /// Squares along the longer side of the bounding box in the ∂̄ test.
    pub grid: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// Initial tracking steps along the separating line.
    pub steps: usize,
    /// Stations checked for loop constancy and quasi-simplicity.
    pub stations: usize,
    /// `(z, w)` pairs at which Φ is sampled.
    pub phi_samples: usize,
    pub morera_loops: usize,
    pub morera_nodes: usize,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        VerificationConfig {
            n: 256,
            validation_samples: 512,
            t_samples: 64,
            grid: 32,
            tolerances: Tolerances::default(),
            seed: 0,
            steps: 128,
            stations: 20,
            phi_samples: 50,
            morera_loops: 5,
            morera_nodes: 48,
        }
    }
}

impl VerificationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: VerificationConfig = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let t = &self.tolerances;
        if ![t.extendibility, t.consistency, t.phi, t.morera, t.dbar]
            .iter()
            .all(|&x| x > 0.0 && x.is_finite())
        {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !self.n.is_power_of_two() || self.n < 8 {
            return Err(Error::InvalidArgument(format!("N = {} is not a power of two ≥ 8", self.n)));
        }
        if self.t_samples < 2 || self.grid < 2 || self.steps == 0 || self.morera_nodes < 4 {
            return Err(Error::InvalidArgument("sample counts too small".into()));
        }
        Ok(())
    }
}

/// Axis-parallel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn centered(z: Complex64, half: f64) -> Self {
        Rect {
            x_min: z.re - half,
            x_max: z.re + half,
            y_min: z.im - half,
            y_max: z.im + half,
        }
    }
}

fn side_integral(f: &FunctionSpec, a: Complex64, b: Complex64) -> Result<Complex64> {
    // Romberg on nested trapezoids.
    const LEVELS: usize = 6;
    let d = b - a;
    let mut table: Vec<Complex64> = Vec::with_capacity(LEVELS);
    let mut trap = (f.eval(a)? + f.eval(b)?) * 0.5 * d;
    let mut n = 1usize;
    for level in 0..LEVELS {
        if level > 0 {
            let h = 1.0 / (2 * n) as f64;
            let mut mid = Complex64::new(0.0, 0.0);
            for k in 0..n {
                mid += f.eval(a + d * ((2 * k + 1) as f64 * h))?;
            }
            trap = trap * 0.5 + mid * d * h;
            n *= 2;
        }
        let mut row = vec![trap];
        let mut factor = 1.0;
        for j in 0..level {
            factor *= 4.0;
            let v = row[j] + (row[j] - table[j]) / (factor - 1.0);
            row.push(v);
        }
        table = row;
    }
    Ok(table[LEVELS - 1])
}

fn check_domain(f: &FunctionSpec, r: &Rect) -> Result<()> {
    match f {
        FunctionSpec::Grid(g) => {
            if r.x_min < g.x_min || r.x_max > g.x_max || r.y_min < g.y_min || r.y_max > g.y_max {
                return Err(Error::InvalidArgument("region leaves the sampled grid".into()));
            }
        }
        FunctionSpec::Reciprocal { a_re, a_im } => {
            if *a_re >= r.x_min && *a_re <= r.x_max && *a_im >= r.y_min && *a_im <= r.y_max {
                return Err(Error::InvalidArgument("region contains the pole".into()));
            }
        }
        _ => {}
    }
    Ok(())
}

/// `|∮ f dz| / h²` on one square of side `h` with lower-left corner `z0`.
pub fn square_residual(f: &FunctionSpec, z0: Complex64, h: f64) -> Result<f64> {
    let corners = [
        z0,
        z0 + Complex64::new(h, 0.0),
        z0 + Complex64::new(h, h),
        z0 + Complex64::new(0.0, h),
    ];
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..4 {
        sum += side_integral(f, corners[k], corners[(k + 1) % 4])?;
    }
    Ok(sum.norm() / (h * h))
}

/// Largest `|∮ f dz| / h²` over the squares of side `h` tiling `region`
/// from its lower-left corner; about `2 |∂f/∂z̄|`.
pub fn dbar_residual(f: &FunctionSpec, region: &Rect, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(region.x_max > region.x_min && region.y_max > region.y_min) {
        return Err(Error::InvalidArgument("empty region or mesh".into()));
    }
    check_domain(f, region)?;
    let nx = (((region.x_max - region.x_min) / h) * (1.0 + 1e-12)).floor().max(1.0) as usize;
    let ny = (((region.y_max - region.y_min) / h) * (1.0 + 1e-12)).floor().max(1.0) as usize;
    let mut worst: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let z0 = Complex64::new(region.x_min + i as f64 * h, region.y_min + j as f64 * h);
            worst = worst.max(square_residual(f, z0, h)?);
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DbarSummary {
    pub residual: f64,
    /// Center of the worst square.
    pub worst_at: Option<Complex64>,
    pub h: f64,
    pub squares: usize,
}

/// ∂̄ residual over the squares of a grid on the bounding box that lie in Ω.
pub fn dbar_over_omega(family: &CircleFamily, f: &FunctionSpec, grid: usize) -> Result<DbarSummary> {
    let bb = family.bounding_box(512)?;
    let h = (bb[1] - bb[0]).max(bb[3] - bb[2]) / grid as f64;
    let nx = ((bb[1] - bb[0]) / h).ceil() as usize;
    let ny = ((bb[3] - bb[2]) / h).ceil() as usize;
    let mut out = DbarSummary {
        residual: 0.0,
        worst_at: None,
        h,
        squares: 0,
    };
    for j in 0..ny {
        for i in 0..nx {
            let z0 = Complex64::new(bb[0] + i as f64 * h, bb[2] + j as f64 * h);
            let center = z0 + Complex64::new(0.5 * h, 0.5 * h);
            if family.omega_margin(center, 256)? > -h * std::f64::consts::FRAC_1_SQRT_2 {
                continue;
            }
            // A pole inside Ω is a finding, not an input error; its square
            // carries a residual of order 2π / h², or ∞ when on an edge.
            if !matches!(f, FunctionSpec::Reciprocal { .. }) {
                check_domain(f, &Rect::centered(center, 0.5 * h))?;
            }
            let res = square_residual(f, z0, h)?;
            let res = if res.is_finite() { res } else { f64::INFINITY };
            out.squares += 1;
            if res > out.residual || out.worst_at.is_none() {
                out.residual = res.max(out.residual);
                out.worst_at = Some(center);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HypothesisSummary {
    pub max_defect: f64,
    pub worst_t: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParitySummary {
    pub cross_infinity_events: usize,
    pub c_crossings: usize,
    pub classes: usize,
    pub selected: Option<usize>,
    pub odd: bool,
    pub line_perturbed: bool,
    pub quasi_simple_stations: usize,
    pub checked_stations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MoreraSample {
    pub center: Complex64,
    pub radius: f64,
    pub w0: Complex64,
    pub result: MoreraResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MachinerySummary {
    pub consistency_defect: f64,
    pub consistency_points: usize,
    pub loop_constancy_defect: f64,
    pub constancy_stations: usize,
    /// Largest `|Φ| / ∫|integrand|` over the sampled `(z, w)`.
    pub phi_relative: f64,
    /// `(z, w)` of the largest relative Φ.
    pub phi_worst: Option<(Complex64, Complex64)>,
    pub phi_samples: usize,
    pub morera_relative: f64,
    pub morera: Vec<MoreraSample>,
    pub parity: ParitySummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub stage: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithHolomorphic,
    HypothesisFails { witness: Witness },
    MachineryFails { witness: Witness },
    ValidationFails { witness: Witness },
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::ConsistentWithHolomorphic => 0,
            Verdict::HypothesisFails { .. } => 2,
            Verdict::MachineryFails { .. } | Verdict::ValidationFails { .. } => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::ConsistentWithHolomorphic => "consistent-with-holomorphic",
            Verdict::HypothesisFails { .. } => "hypothesis-fails",
            Verdict::MachineryFails { .. } => "machinery-fails",
            Verdict::ValidationFails { .. } => "validation-fails",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictReport {
    pub config: VerificationConfig,
    pub validation: ValidationReport,
    pub hypothesis: Option<HypothesisSummary>,
    pub machinery: Option<MachinerySummary>,
    pub conclusion: Option<DbarSummary>,
    pub verdict: Verdict,
}

impl VerdictReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn witness(stage: &'static str, value: f64, tolerance: f64, detail: String) -> Witness {
    Witness {
        stage,
        value,
        tolerance,
        detail,
    }
}

/// Verdict from the recorded measurements.
pub fn decide(
    validation: &ValidationReport,
    hypothesis: Option<&HypothesisSummary>,
    machinery: Option<&MachinerySummary>,
    conclusion: Option<&DbarSummary>,
    tol: &Tolerances,
) -> Verdict {
    if !validation.overall {
        let (name, c) = [("a", &validation.a), ("b", &validation.b), ("c", &validation.c), ("d", &validation.d)]
            .into_iter()
            .find(|(_, c)| !c.pass)
            .unwrap_or(("a", &validation.a));
        return Verdict::ValidationFails {
            witness: witness("validation", c.margin, 0.0, format!("condition ({name}) at {:?}", c.witness)),
        };
    }
    let Some(h) = hypothesis else {
        return Verdict::MachineryFails {
            witness: witness("hypothesis", f64::NAN, tol.extendibility, "sweep missing".into()),
        };
    };
    if !(h.max_defect <= tol.extendibility) {
        return Verdict::HypothesisFails {
            witness: witness("extendibility", h.max_defect, tol.extendibility, format!("t = {}", h.worst_t)),
        };
    }
    let Some(m) = machinery else {
        return Verdict::MachineryFails {
            witness: witness("machinery", f64::NAN, 0.0, "not run".into()),
        };
    };
    let checks = [
        ("consistency", m.consistency_defect, tol.consistency),
        ("loop-constancy", m.loop_constancy_defect, tol.consistency),
        ("phi", m.phi_relative, tol.phi),
        ("morera", m.morera_relative, tol.morera),
    ];
    for (stage, value, tolerance) in checks {
        if !(value <= tolerance) {
            return Verdict::MachineryFails {
                witness: witness(stage, value, tolerance, String::new()),
            };
        }
    }
    let p = &m.parity;
    if !p.odd || p.cross_infinity_events != p.c_crossings {
        return Verdict::MachineryFails {
            witness: witness(
                "parity",
                p.cross_infinity_events as f64,
                p.c_crossings as f64,
                format!("selected class {:?}", p.selected),
            ),
        };
    }
    if p.quasi_simple_stations != p.checked_stations {
        return Verdict::MachineryFails {
            witness: witness(
                "quasi-simple",
                p.quasi_simple_stations as f64,
                p.checked_stations as f64,
                String::new(),
            ),
        };
    }
    match conclusion {
        Some(d) if d.residual <= tol.dbar => Verdict::ConsistentWithHolomorphic,
        Some(d) => Verdict::MachineryFails {
            witness: witness("dbar", d.residual, tol.dbar, format!("at {:?}", d.worst_at)),
        },
        None => Verdict::MachineryFails {
            witness: witness("dbar", f64::NAN, tol.dbar, "no squares inside Ω".into()),
        },
    }
}

pub fn extendibility_sweep(family: &CircleFamily, f: &FunctionSpec, n: usize, t_samples: usize) -> Result<HypothesisSummary> {
    let sampler = TraceSampler::new(n)?;
    let mut out = HypothesisSummary {
        max_defect: f64::NEG_INFINITY,
        worst_t: family.alpha(),
        samples: t_samples,
    };
    for t in family.grid(t_samples) {
        let d = sampler.sample(f, family, t)?.extendibility_defect();
        if d > out.max_defect {
            out.max_defect = d;
            out.worst_t = t;
        }
    }
    Ok(out)
}

/// Stations whose selected loops are non-empty and not contracted, spread
/// evenly along the trace.
fn pick_stations(trace: &ContinuationTrace, class: usize, count: usize) -> Result<Vec<(usize, Vec<Loop>)>> {
    let mut usable = Vec::new();
    for st in &trace.stations {
        if st.passes_infinity() {
            continue;
        }
        let g = select_g(trace, class, st.z)?;
        if !g.loops.is_empty() && !g.contracted {
            usable.push((g.station, g.loops));
        }
    }
    if usable.len() <= count {
        return Ok(usable);
    }
    let m = usable.len();
    let mut picked = Vec::with_capacity(count);
    let mut last = usize::MAX;
    for k in 0..count {
        let i = (k * (m - 1)) / (count - 1).max(1);
        if i != last {
            picked.push(usable[i].clone());
            last = i;
        }
    }
    Ok(picked)
}

fn decode(lp: &Loop, v: Complex64) -> SpherePoint {
    match lp.chart {
        Chart::Finite => SpherePoint::Finite(v),
        Chart::Inverted if v.norm() > 0.0 => SpherePoint::Finite(lp.base + v.inv()),
        Chart::Inverted => SpherePoint::Infinity,
    }
}

/// Point offset from a sample of `lp` along the chart normal, starting the
/// search at sample `j`. The offset must keep at least half its length as
/// clearance from the whole loop; thin loops fold back on themselves.
fn offset_point(lp: &Loop, j: usize, side: f64) -> Option<SpherePoint> {
    let n = lp.len();
    if n < 4 {
        return None;
    }
    let pts = lp.chart_values();
    let delta = 0.05 * lp.chart_diameter();
    for k in 0..n - 2 {
        let i = 1 + (j + k) % (n - 2);
        let tangent = pts[i + 1] - pts[i - 1];
        if tangent.norm() == 0.0 {
            continue;
        }
        let q = pts[i] + Complex64::i() * tangent / tangent.norm() * (side * delta);
        if polygon_distance(&pts, q) >= 0.5 * delta {
            return Some(decode(lp, q));
        }
    }
    None
}

fn run_machinery(
    family: &CircleFamily,
    f: &FunctionSpec,
    cfg: &VerificationConfig,
) -> Result<MachinerySummary> {
    let critical = build_critical_curves(family, 1024).map_err(|e| e.at_stage("critical"))?;
    let line = choose_separating_line(family, &critical, cfg.seed).map_err(|e| e.at_stage("separating-line"))?;
    let ctl = TrackingController {
        steps: cfg.steps,
        ..TrackingController::default()
    };
    let trace = track_line(family, &line, &ctl).map_err(|e| e.at_stage("continuation"))?;
    let cross = trace.events.iter().filter(|e| e.kind == EventKind::CrossInfinity).count();
    let mut parity = ParitySummary {
        cross_infinity_events: cross,
        c_crossings: line.crossings_c.len(),
        classes: trace.classes.len(),
        selected: None,
        odd: false,
        line_perturbed: line.perturbed,
        quasi_simple_stations: 0,
        checked_stations: 0,
    };
    let class = match loop_classes(&trace) {
        Ok((_, id)) => id,
        Err(Error::NoOddClass(_)) => {
            return Ok(MachinerySummary {
                consistency_defect: f64::NAN,
                consistency_points: 0,
                loop_constancy_defect: f64::NAN,
                constancy_stations: 0,
                phi_relative: f64::NAN,
                phi_worst: None,
                phi_samples: 0,
                morera_relative: f64::NAN,
                morera: Vec::new(),
                parity,
            })
        }
        Err(e) => return Err(e.at_stage("classes")),
    };
    parity.selected = Some(class);
    parity.odd = true;

    let source = TraceExtensions::new(family, f, cfg.n)?;
    let picks = pick_stations(&trace, class, cfg.stations)?;

    let mut constancy: f64 = 0.0;
    let mut consistency: f64 = 0.0;
    let mut consistency_points = 0;
    for (si, loops) in &picks {
        let z = trace.stations[*si].z;
        for lp in loops {
            let d = loop_constancy_defect(&source, z, lp, ENDPOINT_MARGIN).map_err(|e| e.at_stage("loop-constancy"))?;
            constancy = constancy.max(d);
        }
        match consistency_defect(f, family, z, 64, cfg.n) {
            Ok(d) => {
                consistency = consistency.max(d);
                consistency_points += 1;
            }
            Err(Error::FewerThanTwoDiscs { .. }) => {}
            Err(e) => return Err(e.at_stage("consistency")),
        }
        parity.checked_stations += 1;
        if classify_regions(loops, 64).map_err(|e| e.at_stage("regions"))?.quasi_simple {
            parity.quasi_simple_stations += 1;
        }
    }

    let mut phi_relative: f64 = 0.0;
    let mut phi_worst = None;
    let mut phi_samples = 0;
    if !picks.is_empty() {
        for k in 0..4 * cfg.phi_samples {
            if phi_samples == cfg.phi_samples {
                break;
            }
            let (si, loops) = &picks[k % picks.len()];
            let z = trace.stations[*si].z;
            let lp = &loops[(k / picks.len()) % loops.len()];
            let j = 1 + (k * 7919) % lp.len().saturating_sub(2).max(1);
            let side = if k % 2 == 0 { 1.0 } else { -1.0 };
            let Some(SpherePoint::Finite(w)) = offset_point(lp, j, side) else { continue };
            let refs: Vec<&Loop> = loops.iter().collect();
            let q = phi_quadrature(family, &source, z, &refs, SpherePoint::Finite(w)).map_err(|e| e.at_stage("phi"))?;
            let rel = if q.scale > 0.0 { q.value.norm() / q.scale } else { q.value.norm() };
            if rel > phi_relative || phi_worst.is_none() {
                phi_relative = rel.max(phi_relative);
                phi_worst = Some((z, w));
            }
            phi_samples += 1;
        }
    }

    let morera = morera_samples(family, &source, &trace, &critical, cfg)?;
    let morera_relative = morera.iter().map(|m| m.result.relative()).fold(0.0, f64::max);

    Ok(MachinerySummary {
        consistency_defect: consistency,
        consistency_points,
        loop_constancy_defect: constancy,
        constancy_stations: picks.len(),
        phi_relative,
        phi_worst,
        phi_samples,
        morera_relative,
        morera,
        parity,
    })
}

fn polyline_distance(pts: &[Complex64], q: Complex64) -> f64 {
    pts.windows(2)
        .map(|w| {
            let ab = w[1] - w[0];
            let l2 = ab.norm_sqr();
            let s = if l2 > 0.0 { ((q - w[0]) * ab.conj()).re / l2 } else { 0.0 };
            (w[0] + ab * s.clamp(0.0, 1.0) - q).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Morera-Φ tests on small circles around stations well away from `P` and `C`.
fn morera_samples(
    family: &CircleFamily,
    source: &TraceExtensions,
    trace: &ContinuationTrace,
    critical: &crate::critical::CriticalSet,
    cfg: &VerificationConfig,
) -> Result<Vec<MoreraSample>> {
    let centers_c: Vec<Complex64> = family.grid(2048).map(|t| family.center(t)).collect::<Result<_>>()?;
    let branches: Vec<Vec<Complex64>> = critical.branches.iter().map(|b| b.points()).collect();
    let scale = family.scale();
    let mut candidates: Vec<(f64, usize)> = trace
        .stations
        .iter()
        .enumerate()
        .filter(|(_, st)| !st.loops.is_empty())
        .map(|(i, st)| {
            let d = branches
                .iter()
                .map(|b| polyline_distance(b, st.z))
                .fold(polyline_distance(&centers_c, st.z), f64::min);
            (d, i)
        })
        .filter(|&(d, _)| d > 0.02 * scale)
        .collect();
    candidates.sort_by(|a, b| a.1.cmp(&b.1));
    let m = candidates.len();
    let count = cfg.morera_loops.min(m);
    let sampling = SamplingController::default();
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (d, si) = candidates[(2 * k + 1) * m / (2 * count)];
        let center = trace.stations[si].z;
        let radius = 0.3 * d;
        let mut done = false;
        // w₀ away from the loops; retried at other angles if a loop passes it.
        for attempt in 0..8 {
            let w0 = center.conj() + Complex64::from_polar(3.0 * scale, 0.7 + 0.9 * attempt as f64);
            match morera_phi_test(family, source, center, radius, SpherePoint::Finite(w0), cfg.morera_nodes, &sampling) {
                Ok(result) => {
                    out.push(MoreraSample {
                        center,
                        radius,
                        w0,
                        result,
                    });
                    done = true;
                    break;
                }
                Err(Error::OnCurve { .. }) => continue,
                Err(e) => return Err(e.at_stage("morera")),
            }
        }
        if !done {
            return Err(Error::Stage {
                stage: "morera",
                source: Box::new(Error::InvalidArgument(format!("no w₀ off the loops near {center}"))),
            });
        }
    }
    Ok(out)
}

/// Runs validation, the extendibility sweep, the loop machinery (only when
/// the hypothesis holds) and the ∂̄ test, then decides the verdict.
pub fn run_verification(family: &CircleFamily, f: &FunctionSpec, cfg: &VerificationConfig) -> Result<VerdictReport> {
    cfg.check()?;
    f.check()?;
    let validation = family.validate(cfg.validation_samples).map_err(|e| e.at_stage("validation"))?;
    let mut hypothesis = None;
    let mut machinery = None;
    if validation.overall {
        let h = extendibility_sweep(family, f, cfg.n, cfg.t_samples).map_err(|e| e.at_stage("extendibility"))?;
        if h.max_defect <= cfg.tolerances.extendibility {
            machinery = Some(run_machinery(family, f, cfg)?);
        }
        hypothesis = Some(h);
    }
    let conclusion = match dbar_over_omega(family, f, cfg.grid).map_err(|e| e.at_stage("dbar"))? {
        d if d.squares > 0 => Some(d),
        _ => None,
    };
    let verdict = decide(
        &validation,
        hypothesis.as_ref(),
        machinery.as_ref(),
        conclusion.as_ref(),
        &cfg.tolerances,
    );
    Ok(VerdictReport {
        config: cfg.clone(),
        validation,
        hypothesis,
        machinery,
        conclusion,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dbar_examples() {
        let r = Rect::centered(c(0.3, -0.2), 0.5);
        assert!(dbar_residual(&FunctionSpec::monomial(2), &r, 0.1).unwrap() < 1e-12);
        let d = dbar_residual(&FunctionSpec::conj_z(), &r, 0.1).unwrap();
        assert!((d - 2.0).abs() < 1e-10);
        let zzb = FunctionSpec::poly(&[(1, 1, c(1.0, 0.0))]);
        let z0 = c(0.8, 0.6);
        let res = square_residual(&zzb, z0 - c(0.05, 0.05), 0.1).unwrap();
        assert!((res - 2.0 * z0.norm()).abs() < 1e-10);
        assert!(dbar_residual(&FunctionSpec::reciprocal(c(0.3, -0.2)), &r, 0.1).is_err());
    }

    #[test]
    fn config_checks() {
        assert!(VerificationConfig::from_json("{\"n\": 100}").is_err());
        assert!(VerificationConfig::from_json("{\"tolerances\": {\"dbar\": 0}}").is_err());
        let cfg = VerificationConfig::from_json("{\"seed\": 3}").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.n, 256);
    }

    #[test]
    fn invalid_family_skips_machinery() {
        let f = CircleFamily::from_exprs("t", "1", [-0.9, 0.9]).unwrap();
        let rep = run_verification(&f, &FunctionSpec::Exp, &VerificationConfig::default()).unwrap();
        assert!(rep.machinery.is_none() && rep.hypothesis.is_none());
        assert_eq!(rep.verdict.exit_code(), 3);
        assert_eq!(rep.verdict.label(), "validation-fails");
    }

    #[test]
    fn conj_fails_hypothesis() {
        let f = CircleFamily::from_exprs("t", "1", [-1.1, 1.1]).unwrap();
        let rep = run_verification(&f, &FunctionSpec::conj_z(), &VerificationConfig::default()).unwrap();
        let h = rep.hypothesis.unwrap();
        assert!((h.max_defect - 1.0).abs() < 1e-10);
        assert!(rep.machinery.is_none());
        assert_eq!(rep.verdict.exit_code(), 2);
    }

    #[test]
    fn exp_is_consistent() {
        let f = CircleFamily::from_exprs("t", "1", [-1.1, 1.1]).unwrap();
        let rep = run_verification(&f, &FunctionSpec::Exp, &VerificationConfig::default()).unwrap();
        let m = rep.machinery.as_ref().unwrap();
        assert_eq!(m.parity.cross_infinity_events, 1);
        assert_eq!(m.morera.len(), 5);
        assert!(m.phi_samples >= 50 - 1);
        assert_eq!(rep.verdict, Verdict::ConsistentWithHolomorphic, "{}", rep.to_json().unwrap());
        let again = run_verification(&f, &FunctionSpec::Exp, &VerificationConfig::default()).unwrap();
        assert_eq!(rep.to_json().unwrap(), again.to_json().unwrap());
    }
}
