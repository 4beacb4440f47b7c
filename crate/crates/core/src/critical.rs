//! Critical values of `Z(t, θ) = c(t) + r(t) e^{iθ}`: the sliding points
//! `p±(t)` where `C_t` touches its envelope, the curvature of the branches and
//! the tangency case at each regular point.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{CircleFamily, Side};
use crate::jet::Jet;
use crate::roots::bisect;
use crate::svg::{palette, SvgCanvas};

/// Curvature denominators below this fraction of `|p'|³` count as zero.
const FLAT_TOL: f64 = 1e-14;
/// `|p'|` below this multiple of `|c'|` marks a singular point.
const SINGULAR_TOL: f64 = 1e-6;

/// Which of the two sliding points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        }
    }
}

/// Jet of `p(t) = c - (r' ± i sqrt(|c'|² - r'²)) / conj(c')`; entries up to
/// `p''` are exact.
pub fn sliding_jet(family: &CircleFamily, t: f64, side: Option<Side>, branch: Branch) -> Result<Jet> {
    let j = family.eval(t, 3, side)?;
    let c = j.c_jet();
    let dc = c.differentiate();
    let dr = j.r_jet().differentiate();
    let disc = dc * dc.conj() - dr * dr;
    let value = disc.value().re;
    if !(value > 0.0) {
        return Err(Error::Discriminant { t, value });
    }
    let i = Complex64::new(0.0, branch.sign());
    Ok(c - (dr + disc.sqrt().scale(i)) / dc.conj())
}

/// Both sliding points of `C_t`.
pub fn sliding_points(family: &CircleFamily, t: f64) -> Result<(Complex64, Complex64)> {
    let p = sliding_jet(family, t, None, Branch::Plus)?.value();
    let m = sliding_jet(family, t, None, Branch::Minus)?.value();
    Ok((p, m))
}

/// `|p'|³ / |Im(conj(p') p'')|`, infinite for flat points.
pub fn curvature_radius(dp: Complex64, ddp: Complex64) -> f64 {
    let speed3 = dp.norm().powi(3);
    let den = (dp.conj() * ddp).im.abs();
    if den < FLAT_TOL * speed3 || speed3 == 0.0 {
        f64::INFINITY
    } else {
        speed3 / den
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchSample {
    pub t: f64,
    /// Smooth piece of the family the sample belongs to.
    pub piece: usize,
    pub p: Complex64,
    pub dp: Complex64,
    pub ddp: Complex64,
    /// Infinite values serialize as `null`.
    pub rho: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlidingBranch {
    pub branch: Branch,
    pub samples: Vec<BranchSample>,
}

impl SlidingBranch {
    pub fn points(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.p).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingularPoint {
    pub branch: Branch,
    pub t: f64,
    pub p: Complex64,
}

/// Two regular branch points that coincide.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Collision {
    pub first: (Branch, f64),
    pub second: (Branch, f64),
    pub z: Complex64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalSet {
    pub branches: [SlidingBranch; 2],
    pub singular_points: Vec<SingularPoint>,
    /// No two regular points of different parameters coincide.
    pub simplicity: bool,
    pub collisions: Vec<Collision>,
}

/// Smooth pieces `[t0, t1]` between breakpoints.
pub fn pieces(family: &CircleFamily) -> Vec<(f64, f64)> {
    let mut cuts = vec![family.alpha()];
    cuts.extend_from_slice(family.breakpoints());
    cuts.push(family.beta());
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Side to evaluate at `t` inside the piece `[t0, t1]`.
pub fn piece_side(t: f64, t1: f64) -> Side {
    if t >= t1 {
        Side::Left
    } else {
        Side::Right
    }
}

fn branch_sample(
    family: &CircleFamily,
    t: f64,
    piece: usize,
    side: Side,
    branch: Branch,
) -> Result<BranchSample> {
    let j = sliding_jet(family, t, Some(side), branch)?;
    let (dp, ddp) = (j.derivative(1), j.derivative(2));
    Ok(BranchSample {
        t,
        piece,
        p: j.value(),
        dp,
        ddp,
        rho: curvature_radius(dp, ddp),
    })
}

/// Samples both branches of `P` and locates singular points and collisions.
pub fn build_critical_curves(family: &CircleFamily, n_samples: usize) -> Result<CriticalSet> {
    if n_samples < 16 {
        return Err(Error::InvalidArgument(format!("n_samples = {n_samples} < 16")));
    }
    let pcs = pieces(family);
    let total = family.beta() - family.alpha();
    let mut branches = Vec::with_capacity(2);
    let mut singular_points = Vec::new();
    for branch in [Branch::Plus, Branch::Minus] {
        let mut samples = Vec::new();
        for (k, &(t0, t1)) in pcs.iter().enumerate() {
            let n = ((n_samples as f64 * (t1 - t0) / total).ceil() as usize).max(8);
            let start = samples.len();
            for i in 0..n {
                let t = if i + 1 == n {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (n - 1) as f64
                };
                samples.push(branch_sample(family, t, k, piece_side(t, t1), branch)?);
            }
            singular_points.extend(locate_singular(family, &samples[start..], t1, branch)?);
        }
        branches.push(SlidingBranch { branch, samples });
    }
    singular_points.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap().then((a.branch as u8).cmp(&(b.branch as u8))));
    let branches: [SlidingBranch; 2] = branches.try_into().unwrap();
    let collisions = collision_scan(&branches);
    Ok(CriticalSet {
        simplicity: collisions.is_empty(),
        branches,
        singular_points,
        collisions,
    })
}

/// Minima of `|p'|²` found by sign changes of `Re(conj(p') p'')`, kept when
/// `|p'|` is negligible against `|c'|`.
fn locate_singular(
    family: &CircleFamily,
    samples: &[BranchSample],
    t1: f64,
    branch: Branch,
) -> Result<Vec<SingularPoint>> {
    let slope = |t: f64| -> f64 {
        match sliding_jet(family, t, Some(piece_side(t, t1)), branch) {
            Ok(j) => (j.derivative(1).conj() * j.derivative(2)).re,
            Err(_) => f64::NAN,
        }
    };
    let mut out = Vec::new();
    for w in samples.windows(2) {
        let (a, b) = ((w[0].dp.conj() * w[0].ddp).re, (w[1].dp.conj() * w[1].ddp).re);
        if !(a < 0.0 && b >= 0.0) {
            continue;
        }
        let t = bisect(slope, w[0].t, w[1].t, 1e-14);
        let jet = sliding_jet(family, t, Some(piece_side(t, t1)), branch)?;
        let speed = family.eval(t, 1, Some(piece_side(t, t1)))?.c[1].norm();
        if jet.derivative(1).norm() < SINGULAR_TOL * speed {
            out.push(SingularPoint {
                branch,
                t,
                p: jet.value(),
            });
        }
    }
    Ok(out)
}

fn segments_cross(a0: Complex64, a1: Complex64, b0: Complex64, b1: Complex64) -> Option<Complex64> {
    let cross = |u: Complex64, v: Complex64| u.re * v.im - u.im * v.re;
    let (da, db) = (a1 - a0, b1 - b0);
    let den = cross(da, db);
    if den == 0.0 {
        return None;
    }
    let s = cross(b0 - a0, db) / den;
    let u = cross(b0 - a0, da) / den;
    ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&u)).then(|| a0 + da * s)
}

/// Pairwise crossing test between the sampled polylines of both branches,
/// skipping neighbouring segments of the same branch.
fn collision_scan(branches: &[SlidingBranch; 2]) -> Vec<Collision> {
    struct Seg {
        branch: usize,
        idx: usize,
        a: Complex64,
        b: Complex64,
        t: f64,
    }
    let mut segs = Vec::new();
    for (bi, br) in branches.iter().enumerate() {
        for (k, w) in br.samples.windows(2).enumerate() {
            if w[0].p != w[1].p {
                segs.push(Seg {
                    branch: bi,
                    idx: k,
                    a: w[0].p,
                    b: w[1].p,
                    t: 0.5 * (w[0].t + w[1].t),
                });
            }
        }
    }
    segs.sort_by(|x, y| x.a.re.min(x.b.re).partial_cmp(&y.a.re.min(y.b.re)).unwrap());
    let mut out = Vec::new();
    for i in 0..segs.len() {
        let si = &segs[i];
        let xmax = si.a.re.max(si.b.re);
        for sj in &segs[i + 1..] {
            if sj.a.re.min(sj.b.re) > xmax {
                break;
            }
            if si.branch == sj.branch && si.idx.abs_diff(sj.idx) <= 2 {
                continue;
            }
            if let Some(z) = segments_cross(si.a, si.b, sj.a, sj.b) {
                let (first, second) = if (si.branch, si.t) <= (sj.branch, sj.t) {
                    (si, sj)
                } else {
                    (sj, si)
                };
                out.push(Collision {
                    first: (branches[first.branch].branch, first.t),
                    second: (branches[second.branch].branch, second.t),
                    z,
                });
            }
        }
    }
    out.sort_by(|a, b| a.first.1.partial_cmp(&b.first.1).unwrap());
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    Case1,
    Case2,
    Case3Forbidden,
}

impl CaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::Case1 => "case1",
            CaseLabel::Case2 => "case2",
            CaseLabel::Case3Forbidden => "case3_forbidden",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tangency {
    Interior,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangencyCase {
    pub label: CaseLabel,
    pub tangency: Tangency,
    pub rho: f64,
    pub r: f64,
    /// Set with case 3, when `|c'|` is also below `tol · scale`.
    pub family_degenerate: bool,
}

/// Classifies the contact between `C_t` and the branch at `p(t)`.
///
/// Interior tangency means the center of curvature of `P` lies on the same
/// side of the common tangent as `c(t)`; flat points count as interior.
pub fn tangency_case(family: &CircleFamily, branch: Branch, t: f64, tol: f64) -> Result<TangencyCase> {
    let side = if t >= family.beta() { Side::Left } else { Side::Right };
    let jet = sliding_jet(family, t, Some(side), branch)?;
    let fj = family.eval(t, 1, Some(side))?;
    let (p, dp, ddp) = (jet.value(), jet.derivative(1), jet.derivative(2));
    let speed = fj.c[1].norm();
    if dp.norm() < SINGULAR_TOL * speed {
        return Err(Error::SingularPoint { t, speed: dp.norm() });
    }
    let r = fj.r[0];
    let rho = curvature_radius(dp, ddp);
    let tangency = if rho.is_infinite() {
        Tangency::Interior
    } else {
        let den = (dp.conj() * ddp).im;
        let center_side = (dp.conj() * (fj.c[0] - p)).im;
        if center_side * den > 0.0 {
            Tangency::Interior
        } else {
            Tangency::Exterior
        }
    };
    let mut family_degenerate = false;
    let label = match tangency {
        Tangency::Interior if (rho - r).abs() < tol => {
            family_degenerate = speed < tol * family.scale();
            CaseLabel::Case3Forbidden
        }
        Tangency::Interior if rho < r => CaseLabel::Case2,
        _ => CaseLabel::Case1,
    };
    Ok(TangencyCase {
        label,
        tangency,
        rho,
        r,
        family_degenerate,
    })
}

/// Zero of the Jacobian determinant of `(t, θ) ↦ Z(t, θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OraclePoint {
    pub t: f64,
    pub theta: f64,
    pub z: Complex64,
}

/// Critical values found directly from `det DZ = r (Re(conj(c') e^{iθ}) + r')`,
/// scanning `n_theta` angles at each of `n_t` parameters.
pub fn critical_values_oracle(family: &CircleFamily, n_t: usize, n_theta: usize) -> Result<Vec<OraclePoint>> {
    let mut out = Vec::new();
    if n_t == 0 || n_theta < 4 {
        return Ok(out);
    }
    for t in family.grid(n_t) {
        let j = family.eval(t, 1, Some(if t >= family.beta() { Side::Left } else { Side::Right }))?;
        let (c, dc, r, dr) = (j.c[0], j.c[1], j.r[0], j.r[1]);
        let det = |th: f64| r * ((dc.conj() * Complex64::from_polar(1.0, th)).re + dr);
        let h = 2.0 * PI / n_theta as f64;
        for k in 0..n_theta {
            let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
            let (da, db) = (det(a), det(b));
            if da == 0.0 || (da > 0.0) != (db > 0.0) && db != 0.0 {
                let theta = bisect(det, a, b, 1e-15);
                out.push(OraclePoint {
                    t,
                    theta,
                    z: c + Complex64::from_polar(r, theta),
                });
            }
        }
    }
    Ok(out)
}

impl CriticalSet {
    /// Writes `branch, t, p_re, p_im, rho, case` rows.
    pub fn write_csv<W: Write>(&self, family: &CircleFamily, tol: f64, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["branch", "t", "p_re", "p_im", "rho", "case"])?;
        for br in &self.branches {
            for s in &br.samples {
                let case = match tangency_case(family, br.branch, s.t, tol) {
                    Ok(c) => c.label.as_str(),
                    Err(_) => "singular",
                };
                wtr.write_record([
                    br.branch.label().to_string(),
                    s.t.to_string(),
                    s.p.re.to_string(),
                    s.p.im.to_string(),
                    if s.rho.is_finite() { s.rho.to_string() } else { "inf".into() },
                    case.to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Overlay of both branches on a sample of the circles.
    pub fn to_svg(&self, family: &CircleFamily) -> Result<String> {
        let bb = family.bounding_box(128)?;
        let mut pts = vec![Complex64::new(bb[0], bb[2]), Complex64::new(bb[1], bb[3])];
        for br in &self.branches {
            pts.extend(br.points());
        }
        let mut canvas = SvgCanvas::fit(&pts, 720.0, 0.05);
        for t in family.grid(24) {
            let (c, r) = family.jet0(t)?;
            canvas.circle(c, r, "#bbbbbb");
        }
        let centers: Vec<Complex64> = family.grid(256).map(|t| family.center(t)).collect::<Result<_>>()?;
        canvas.polyline(&centers, "#555555", 1.0);
        for (k, br) in self.branches.iter().enumerate() {
            canvas.polyline(&br.points(), palette(k), 1.8);
        }
        for s in &self.singular_points {
            canvas.dot(s.p, "#000000", 3.5);
        }
        Ok(canvas.finish())
    }
}
