//! Circle families `t ↦ (c(t), r(t))` and their hypothesis checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::roots::{golden_min, pattern_search_pair};
use crate::spline::QuinticSpline;

/// Imaginary part allowed in a radius expression, relative to its size.
const REAL_RADIUS_TOL: f64 = 1e-12;
/// Pieces of a piecewise family must agree at shared breakpoints to this.
const PIECE_CONTINUITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
struct ExprPiece {
    t0: f64,
    t1: f64,
    c: Expr,
    r: Expr,
}

#[derive(Clone, Debug)]
enum Backend {
    Expr(Vec<ExprPiece>),
    Spline { c: QuinticSpline, r: QuinticSpline },
}

/// On-disk description of a family.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilySpec {
    Expr {
        c: String,
        r: String,
        t_range: [f64; 2],
    },
    Sampled {
        t: Vec<f64>,
        c_re: Vec<f64>,
        c_im: Vec<f64>,
        r: Vec<f64>,
    },
    Piecewise { pieces: Vec<PieceSpec> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PieceSpec {
    pub c: String,
    pub r: String,
    pub t_range: [f64; 2],
}

/// A one-parameter family of circles `C_t` on `[α, β]`.
#[derive(Clone, Debug)]
pub struct CircleFamily {
    alpha: f64,
    beta: f64,
    backend: Backend,
    breakpoints: Vec<f64>,
}

/// Center and radius with derivatives at one parameter value.
///
/// Entries above `order` are NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilyJet {
    pub t: f64,
    pub order: usize,
    pub c: [Complex64; 4],
    pub r: [f64; 4],
}

impl FamilyJet {
    pub fn c(&self, k: usize) -> Option<Complex64> {
        (k <= self.order).then(|| self.c[k])
    }

    pub fn r(&self, k: usize) -> Option<f64> {
        (k <= self.order).then(|| self.r[k])
    }

    /// Jet of `c` as a Taylor object.
    pub fn c_jet(&self) -> Jet {
        Jet::from_derivatives(self.c)
    }

    pub fn r_jet(&self) -> Jet {
        Jet::from_derivatives(self.r.map(|v| Complex64::new(v, 0.0)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscPosition {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "at", rename_all = "lowercase")]
pub enum Witness {
    Endpoints,
    Parameter { t: f64 },
    Pair { t: f64, s: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub pass: bool,
    pub margin: f64,
    pub witness: Witness,
}

impl ConditionVerdict {
    fn strict(margin: f64, witness: Witness) -> Self {
        ConditionVerdict {
            pass: margin > 0.0,
            margin,
            witness,
        }
    }
}

/// Outcome of checking the four family hypotheses on a sample grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Endpoint discs are disjoint.
    pub a: ConditionVerdict,
    /// Regular, injective center curve ("sampled injectivity").
    pub b: ConditionVerdict,
    /// No circle inside another closed disc, for `|t - s| ≥ delta`.
    pub c: ConditionVerdict,
    /// `|c'| > |r'|`.
    pub d: ConditionVerdict,
    pub n_samples: usize,
    pub delta: f64,
    pub injectivity: &'static str,
    pub overall: bool,
}

impl CircleFamily {
    /// Closed-form family from expressions in `t`.
    pub fn from_exprs(c: &str, r: &str, t_range: [f64; 2]) -> Result<Self> {
        Self::piecewise(&[PieceSpec {
            c: c.into(),
            r: r.into(),
            t_range,
        }])
    }

    /// Closed-form family assembled from consecutive pieces; the shared
    /// endpoints become breakpoints.
    pub fn piecewise(pieces: &[PieceSpec]) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidFamily("no pieces".into()));
        }
        let mut parsed = Vec::with_capacity(pieces.len());
        for p in pieces {
            let [t0, t1] = p.t_range;
            if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
                return Err(Error::InvalidFamily(format!("bad t_range [{t0}, {t1}]")));
            }
            parsed.push(ExprPiece {
                t0,
                t1,
                c: Expr::parse(&p.c)?,
                r: Expr::parse(&p.r)?,
            });
        }
        let mut breakpoints = Vec::new();
        for w in parsed.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.t1 != b.t0 {
                return Err(Error::InvalidFamily(format!(
                    "pieces must be contiguous ({} vs {})",
                    a.t1, b.t0
                )));
            }
            let ca = a.c.jet_at(a.t1).value();
            let cb = b.c.jet_at(b.t0).value();
            let ra = a.r.jet_at(a.t1).value();
            let rb = b.r.jet_at(b.t0).value();
            if (ca - cb).norm() > PIECE_CONTINUITY_TOL || (ra - rb).norm() > PIECE_CONTINUITY_TOL {
                return Err(Error::InvalidFamily(format!(
                    "family is discontinuous at t = {}",
                    a.t1
                )));
            }
            breakpoints.push(a.t1);
        }
        let fam = CircleFamily {
            alpha: parsed[0].t0,
            beta: parsed[parsed.len() - 1].t1,
            backend: Backend::Expr(parsed),
            breakpoints,
        };
        fam.check_radius_samples()?;
        Ok(fam)
    }

    /// Spline family through samples of `c` and `r`.
    pub fn sampled(t: &[f64], c: &[Complex64], r: &[f64]) -> Result<Self> {
        if r.len() != t.len() {
            return Err(Error::InvalidFamily("t and r lengths differ".into()));
        }
        let rc: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let cs = QuinticSpline::new(t, c)?;
        let rs = QuinticSpline::new(t, &rc)?;
        let fam = CircleFamily {
            alpha: t[0],
            beta: t[t.len() - 1],
            breakpoints: cs.breakpoints().to_vec(),
            backend: Backend::Spline { c: cs, r: rs },
        };
        fam.check_radius_samples()?;
        Ok(fam)
    }

    pub fn from_spec(spec: &FamilySpec) -> Result<Self> {
        match spec {
            FamilySpec::Expr { c, r, t_range } => Self::from_exprs(c, r, *t_range),
            FamilySpec::Piecewise { pieces } => Self::piecewise(pieces),
            FamilySpec::Sampled { t, c_re, c_im, r } => {
                if c_re.len() != t.len() || c_im.len() != t.len() {
                    return Err(Error::InvalidFamily("c_re/c_im lengths differ from t".into()));
                }
                let c: Vec<Complex64> = c_re
                    .iter()
                    .zip(c_im)
                    .map(|(&a, &b)| Complex64::new(a, b))
                    .collect();
                Self::sampled(t, &c, r)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FamilySpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    fn check_radius_samples(&self) -> Result<()> {
        for t in self.grid(257) {
            let j = self.jet(t)?;
            if !(j.r[0] > 0.0) {
                return Err(Error::InvalidFamily(format!(
                    "radius {} not positive at t = {t}",
                    j.r[0]
                )));
            }
        }
        Ok(())
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `n` equally spaced parameters including both ends.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let h = (self.beta - self.alpha) / (n.max(2) - 1) as f64;
        (0..n).map(move |i| {
            if i + 1 == n {
                self.beta
            } else {
                self.alpha + h * i as f64
            }
        })
    }

    fn check_range(&self, t: f64) -> Result<()> {
        if !(t >= self.alpha && t <= self.beta) {
            return Err(Error::OutOfRange {
                t,
                lo: self.alpha,
                hi: self.beta,
            });
        }
        Ok(())
    }

    fn raw_derivatives(&self, t: f64, side: Side) -> Result<([Complex64; 4], [f64; 4])> {
        match &self.backend {
            Backend::Expr(pieces) => {
                let idx = match side {
                    Side::Left => pieces.iter().position(|p| t > p.t0 && t <= p.t1),
                    Side::Right => pieces.iter().position(|p| t >= p.t0 && t < p.t1),
                }
                .unwrap_or(if t <= self.alpha { 0 } else { pieces.len() - 1 });
                let p = &pieces[idx];
                let tj = Jet::variable(t);
                let c = p.c.eval_jet(&tj);
                let r = p.r.eval_jet(&tj);
                if !c.is_finite() || !r.is_finite() {
                    return Err(Error::InvalidFamily(format!(
                        "expression not finite at t = {t}"
                    )));
                }
                let rd = r.derivatives();
                let mut rr = [0.0; 4];
                for k in 0..4 {
                    if rd[k].im.abs() > REAL_RADIUS_TOL * rd[k].re.abs().max(1.0) {
                        return Err(Error::InvalidFamily(format!(
                            "radius expression is not real at t = {t}"
                        )));
                    }
                    rr[k] = rd[k].re;
                }
                Ok((c.derivatives(), rr))
            }
            Backend::Spline { c, r } => {
                let left = side == Side::Left;
                let cd = c.derivatives(t, left);
                let rd = r.derivatives(t, left);
                Ok((cd, rd.map(|v| v.re)))
            }
        }
    }

    /// Center, radius and derivatives up to `order` (≤ 3) at `t`.
    ///
    /// At a breakpoint a side is required for `order ≥ 1`.
    pub fn eval(&self, t: f64, order: usize, side: Option<Side>) -> Result<FamilyJet> {
        self.check_range(t)?;
        if order > 3 {
            return Err(Error::InvalidArgument(format!("order {order} > 3")));
        }
        let at_break = self.breakpoints.contains(&t);
        let side = match side {
            Some(s) => s,
            None if at_break && order >= 1 => return Err(Error::BreakpointSide { t, order }),
            None => self.default_side(t),
        };
        let (mut c, mut r) = self.raw_derivatives(t, side)?;
        for k in order + 1..4 {
            c[k] = Complex64::new(f64::NAN, f64::NAN);
            r[k] = f64::NAN;
        }
        Ok(FamilyJet { t, order, c, r })
    }

    fn default_side(&self, t: f64) -> Side {
        if t >= self.beta {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// Full jet with the side chosen automatically (right-sided except at β).
    pub fn jet(&self, t: f64) -> Result<FamilyJet> {
        self.eval(t, 3, Some(self.default_side(t)))
    }

    pub fn center(&self, t: f64) -> Result<Complex64> {
        Ok(self.jet0(t)?.0)
    }

    pub fn radius(&self, t: f64) -> Result<f64> {
        Ok(self.jet0(t)?.1)
    }

    /// Center and radius only.
    pub fn jet0(&self, t: f64) -> Result<(Complex64, f64)> {
        let j = self.eval(t, 0, None)?;
        Ok((j.c[0], j.r[0]))
    }

    pub fn point_in_disc(&self, t: f64, z: Complex64, tol: f64) -> Result<DiscPosition> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        let (c, r) = self.jet0(t)?;
        let m = (z - c).norm() - r;
        Ok(if m < -tol {
            DiscPosition::Interior
        } else if m > tol {
            DiscPosition::Exterior
        } else {
            DiscPosition::Boundary
        })
    }

    /// `min_t (|z - c(t)| - r(t))`: negative inside Ω, positive outside Ω̄.
    pub fn omega_margin(&self, z: Complex64, n: usize) -> Result<f64> {
        let h = (self.beta - self.alpha) / (n - 1) as f64;
        let f = |t: f64| -> f64 {
            match self.jet0(t.clamp(self.alpha, self.beta)) {
                Ok((c, r)) => (z - c).norm() - r,
                Err(_) => f64::INFINITY,
            }
        };
        let mut best = (f64::INFINITY, self.alpha);
        for t in self.grid(n) {
            let v = f(t);
            if v < best.0 {
                best = (v, t);
            }
        }
        let lo = (best.1 - h).max(self.alpha);
        let hi = (best.1 + h).min(self.beta);
        let (_, v) = golden_min(&f, lo, hi, 1e-12);
        Ok(v.min(best.0))
    }

    /// Typical radius, for scaling tolerances.
    pub fn scale(&self) -> f64 {
        let mut acc = 0.0;
        let mut n = 0;
        for t in self.grid(33) {
            if let Ok(r) = self.radius(t) {
                acc += r;
                n += 1;
            }
        }
        if n == 0 {
            1.0
        } else {
            acc / n as f64
        }
    }

    /// Bounding box `(x_min, x_max, y_min, y_max)` of Ω̄ on a sample grid.
    pub fn bounding_box(&self, n: usize) -> Result<[f64; 4]> {
        let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for t in self.grid(n) {
            let (c, r) = self.jet0(t)?;
            bb[0] = bb[0].min(c.re - r);
            bb[1] = bb[1].max(c.re + r);
            bb[2] = bb[2].min(c.im - r);
            bb[3] = bb[3].max(c.im + r);
        }
        Ok(bb)
    }

    /// Checks hypotheses (a)–(d) on an `n_samples` grid.
    pub fn validate(&self, n_samples: usize) -> Result<ValidationReport> {
        if n_samples < 64 {
            return Err(Error::InvalidArgument(format!(
                "n_samples = {n_samples} < 64"
            )));
        }
        let ts: Vec<f64> = self.grid(n_samples).collect();
        let jets: Vec<FamilyJet> = ts.iter().map(|&t| self.jet(t)).collect::<Result<_>>()?;
        let h = (self.beta - self.alpha) / (n_samples - 1) as f64;
        let delta = (self.beta - self.alpha) / n_samples as f64 * 4.0;

        // (a) exact at the endpoints.
        let ja = &jets[0];
        let jb = &jets[n_samples - 1];
        let a = ConditionVerdict::strict(
            (ja.c[0] - jb.c[0]).norm() - (ja.r[0] + jb.r[0]),
            Witness::Endpoints,
        );

        let speed = |t: f64| -> f64 {
            self.jet(t.clamp(self.alpha, self.beta))
                .map(|j| j.c[1].norm())
                .unwrap_or(f64::INFINITY)
        };
        let d_margin = |t: f64| -> f64 {
            self.jet(t.clamp(self.alpha, self.beta))
                .map(|j| j.c[1].norm() - j.r[1].abs())
                .unwrap_or(f64::INFINITY)
        };
        let refine_t = |f: &dyn Fn(f64) -> f64, t: f64, grid_val: f64| -> (f64, f64) {
            let lo = (t - h).max(self.alpha);
            let hi = (t + h).min(self.beta);
            let (tr, v) = golden_min(f, lo, hi, 1e-12);
            if v < grid_val {
                (tr, v)
            } else {
                (t, grid_val)
            }
        };

        // (b) regularity and sampled injectivity, in units of speed.
        let (mut b_t, mut b_min) = (ts[0], f64::INFINITY);
        for (t, j) in ts.iter().zip(&jets) {
            let v = j.c[1].norm();
            if v < b_min {
                b_min = v;
                b_t = *t;
            }
        }
        let (b_t, b_min) = refine_t(&speed, b_t, b_min);
        let chord_ratio = |t: f64, s: f64| -> f64 {
            match (self.center(t), self.center(s)) {
                (Ok(ct), Ok(cs)) => (ct - cs).norm() / (t - s).abs(),
                _ => f64::INFINITY,
            }
        };
        let (inj_pair, inj_min) = self.worst_pair(&ts, delta, |i, k| {
            (jets[i].c[0] - jets[k].c[0]).norm() / (ts[k] - ts[i])
        });
        let (inj_pair, inj_min) = refine_pair(&chord_ratio, inj_pair, inj_min, h, delta, self);
        let b = if inj_min < b_min {
            ConditionVerdict::strict(inj_min, Witness::Pair { t: inj_pair.0, s: inj_pair.1 })
        } else {
            ConditionVerdict::strict(b_min, Witness::Parameter { t: b_t })
        };

        // (c) off-diagonal pairs beyond the cutoff.
        let c_fn = |t: f64, s: f64| -> f64 {
            match (self.jet0(t), self.jet0(s)) {
                (Ok((ct, rt)), Ok((cs, rs))) => (ct - cs).norm() - (rt - rs).abs(),
                _ => f64::INFINITY,
            }
        };
        let (c_pair, c_min) = self.worst_pair(&ts, delta, |i, k| {
            (jets[i].c[0] - jets[k].c[0]).norm() - (jets[i].r[0] - jets[k].r[0]).abs()
        });
        let (c_pair, c_min) = refine_pair(&c_fn, c_pair, c_min, h, delta, self);
        let c = ConditionVerdict::strict(c_min, Witness::Pair { t: c_pair.0, s: c_pair.1 });

        // (d) on the grid.
        let (mut d_t, mut d_min) = (ts[0], f64::INFINITY);
        for (t, j) in ts.iter().zip(&jets) {
            let v = j.c[1].norm() - j.r[1].abs();
            if v < d_min {
                d_min = v;
                d_t = *t;
            }
        }
        let (d_t, d_min) = refine_t(&d_margin, d_t, d_min);
        let d = ConditionVerdict::strict(d_min, Witness::Parameter { t: d_t });

        Ok(ValidationReport {
            overall: a.pass && b.pass && c.pass && d.pass,
            a,
            b,
            c,
            d,
            n_samples,
            delta,
            injectivity: "sampled",
        })
    }

    /// Minimum of `f(i, k)` over index pairs with `t_k - t_i ≥ delta`.
    /// Ties keep the pair with the smallest `t`.
    fn worst_pair(
        &self,
        ts: &[f64],
        delta: f64,
        f: impl Fn(usize, usize) -> f64,
    ) -> ((f64, f64), f64) {
        let mut best = ((ts[0], ts[ts.len() - 1]), f64::INFINITY);
        for i in 0..ts.len() {
            for k in i + 1..ts.len() {
                if ts[k] - ts[i] < delta * (1.0 - 1e-12) {
                    continue;
                }
                let v = f(i, k);
                if v < best.1 {
                    best = ((ts[i], ts[k]), v);
                }
            }
        }
        best
    }
}

fn refine_pair(
    f: &dyn Fn(f64, f64) -> f64,
    pair: (f64, f64),
    val: f64,
    h: f64,
    delta: f64,
    fam: &CircleFamily,
) -> ((f64, f64), f64) {
    if !val.is_finite() {
        return (pair, val);
    }
    let (t, s, v) = pattern_search_pair(f, pair.0, pair.1, h, fam.alpha, fam.beta, delta);
    if v < val {
        ((t, s), v)
    } else {
        (pair, val)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(lo: f64, hi: f64) -> CircleFamily {
        CircleFamily::from_exprs("t", "1", [lo, hi]).unwrap()
    }

    #[test]
    fn linear_jet() {
        let f = linear(-1.1, 1.1);
        let j = f.eval(0.5, 2, None).unwrap();
        assert_eq!(j.c(0), Some(Complex64::new(0.5, 0.0)));
        assert_eq!(j.c(1), Some(Complex64::new(1.0, 0.0)));
        assert_eq!(j.c(2), Some(Complex64::new(0.0, 0.0)));
        assert_eq!(j.r(0), Some(1.0));
        assert_eq!(j.r(1), Some(0.0));
        assert_eq!(j.c(3), None);
        assert!(j.c[3].re.is_nan());
    }

    #[test]
    fn arc_jet() {
        let f = CircleFamily::from_exprs("2*exp(i*t)", "1", [-1.5, 1.5]).unwrap();
        let j = f.eval(0.0, 2, None).unwrap();
        assert!((j.c[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((j.c[1] - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        assert!((j.c[2] - Complex64::new(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn out_of_range() {
        let f = linear(-1.1, 1.1);
        assert!(matches!(f.eval(1.2, 0, None), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn breakpoint_requires_side() {
        let f = CircleFamily::piecewise(&[
            PieceSpec { c: "t".into(), r: "1".into(), t_range: [0.0, 1.0] },
            PieceSpec { c: "1 + i*(t-1)".into(), r: "1".into(), t_range: [1.0, 2.0] },
        ])
        .unwrap();
        assert_eq!(f.breakpoints(), &[1.0]);
        assert!(matches!(f.eval(1.0, 1, None), Err(Error::BreakpointSide { .. })));
        assert!(f.eval(1.0, 0, None).is_ok());
        let l = f.eval(1.0, 1, Some(Side::Left)).unwrap();
        let r = f.eval(1.0, 1, Some(Side::Right)).unwrap();
        assert_eq!(l.c[1], Complex64::new(1.0, 0.0));
        assert_eq!(r.c[1], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn discontinuous_pieces_rejected() {
        let e = CircleFamily::piecewise(&[
            PieceSpec { c: "t".into(), r: "1".into(), t_range: [0.0, 1.0] },
            PieceSpec { c: "t + 1".into(), r: "1".into(), t_range: [1.0, 2.0] },
        ]);
        assert!(e.is_err());
    }

    #[test]
    fn complex_radius_rejected() {
        assert!(CircleFamily::from_exprs("t", "1 + i*t", [0.0, 1.0]).is_err());
        assert!(CircleFamily::from_exprs("t", "t", [-1.0, 1.0]).is_err());
    }

    #[test]
    fn validation_examples() {
        let rep = linear(-1.1, 1.1).validate(256).unwrap();
        assert!(rep.overall);
        assert!((rep.a.margin - 0.2).abs() < 1e-12);
        let rep = linear(-0.9, 0.9).validate(256).unwrap();
        assert!(!rep.a.pass);
        assert!((rep.a.margin + 0.2).abs() < 1e-12);
        let f = CircleFamily::from_exprs("t", "2*t + 3", [0.0, 1.0]).unwrap();
        let rep = f.validate(64).unwrap();
        assert!(!rep.d.pass);
        assert!((rep.d.margin + 1.0).abs() < 1e-12);
        assert!(!rep.overall);
    }

    #[test]
    fn injectivity_failure_found() {
        // Loop of the center curve: c(0) = c(2π).
        let f = CircleFamily::from_exprs("3*exp(i*t)", "1", [0.0, 7.0]).unwrap();
        let rep = f.validate(128).unwrap();
        assert!(rep.b.margin < 1e-6, "{:?}", rep.b);
        match rep.b.witness {
            Witness::Pair { t, s } => {
                assert!((s - t - 2.0 * std::f64::consts::PI).abs() < 1e-6, "{t} {s}")
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn disc_classification() {
        let f = linear(-1.1, 1.1);
        let tol = 1e-12;
        let z = |re, im| Complex64::new(re, im);
        assert_eq!(f.point_in_disc(0.0, z(0.0, 0.4), tol).unwrap(), DiscPosition::Interior);
        assert_eq!(f.point_in_disc(0.0, z(1.0, 0.0), tol).unwrap(), DiscPosition::Boundary);
        assert_eq!(f.point_in_disc(0.0, z(3.0, 0.0), tol).unwrap(), DiscPosition::Exterior);
        assert!(f.point_in_disc(0.0, z(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn json_specs() {
        let f = CircleFamily::from_json(r#"{"kind":"expr","c":"t","r":"1","t_range":[-1.1,1.1]}"#)
            .unwrap();
        assert_eq!(f.t_range(), (-1.1, 1.1));
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let spec = FamilySpec::Sampled {
            c_re: t.clone(),
            c_im: vec![0.0; 20],
            r: vec![1.0; 20],
            t: t.clone(),
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains(r#""kind":"sampled""#));
        let f = CircleFamily::from_json(&text).unwrap();
        assert!((f.center(0.55).unwrap() - Complex64::new(0.55, 0.0)).norm() < 1e-12);
    }
}
