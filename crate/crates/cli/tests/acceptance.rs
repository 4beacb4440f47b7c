//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines always show; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use circle_analyticity::cauchy::curve_phi;
use circle_analyticity::continuation::{choose_separating_line, loop_classes, select_g, track_line, EventKind, TrackingController};
use circle_analyticity::critical::{build_critical_curves, critical_values_oracle, tangency_case, CaseLabel};
use circle_analyticity::extension::TraceSampler;
use circle_analyticity::fiber::{build_fiber_curve, classify_regions, fiber_point, incidence_intervals, SamplingController};
use circle_analyticity::verify::{dbar_residual, run_verification, Rect, VerificationConfig};
use circle_analyticity::{CircleFamily, Complex64, Error, FunctionSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn data(rel: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", rel].iter().collect();
    p.to_string_lossy().into_owned()
}

fn family(name: &str) -> CircleFamily {
    CircleFamily::from_json(&std::fs::read_to_string(data(&format!("families/{name}.json"))).unwrap()).unwrap()
}

fn linear() -> CircleFamily {
    family("linear")
}

fn check(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn family_gate() -> Outcome {
    let rep = linear().validate(512).map_err(err)?;
    check(rep.overall, format!("linear family rejected: {rep:?}"))?;
    check((rep.a.margin - 0.2).abs() < 1e-12, format!("(a) margin {}", rep.a.margin))?;
    let short = family("linear_short").validate(512).map_err(err)?;
    check(!short.a.pass && !short.overall, "[-0.9, 0.9] passes (a)".into())?;
    Ok(format!("(a) margin {:.15}", rep.a.margin))
}

fn extendibility() -> Outcome {
    let fam = linear();
    let sampler = TraceSampler::new(256).map_err(err)?;
    let holo = [
        FunctionSpec::monomial(2),
        FunctionSpec::poly(&[(3, 0, c(1.0, 0.0)), (1, 0, c(-2.0, 0.0))]),
        FunctionSpec::Exp,
        FunctionSpec::reciprocal(c(3.0, 0.0)),
    ];
    let mut worst: f64 = 0.0;
    let mut conj_worst: f64 = 0.0;
    for t in fam.grid(64) {
        for f in &holo {
            worst = worst.max(sampler.sample(f, &fam, t).map_err(err)?.extendibility_defect());
        }
        let d = sampler.sample(&FunctionSpec::conj_z(), &fam, t).map_err(err)?.extendibility_defect();
        conj_worst = conj_worst.max((d - 1.0).abs());
    }
    check(worst < 1e-9, format!("holomorphic defect {worst:e}"))?;
    check(conj_worst < 1e-10, format!("conj defect off by {conj_worst:e}"))?;
    Ok(format!("holomorphic max {worst:.1e}, |defect(z̄) - 1| ≤ {conj_worst:.1e}"))
}

fn fiber_geometry() -> Outcome {
    let fam = linear();
    let z = c(0.0, 0.4);
    let set = incidence_intervals(&fam, z, 1024, 1e-10).map_err(err)?;
    let half = 0.84f64.sqrt();
    check(set.intervals.len() == 1, format!("intervals {:?}", set.intervals))?;
    let (a, b) = set.intervals[0];
    check((a + half).abs() < 1e-9 && (b - half).abs() < 1e-9, format!("I_z = [{a}, {b}]"))?;
    let curve = build_fiber_curve(&fam, z, &SamplingController::default()).map_err(err)?;
    let lp = &curve.loops[0];
    let gap = [0, lp.len() - 1]
        .iter()
        .map(|&i| (lp.point(i).as_finite().unwrap() - z.conj()).norm())
        .fold(0.0, f64::max);
    check(gap < 1e-8, format!("closure gap {gap:e}"))?;
    let w = fiber_point(&fam, 0.0, z).map_err(err)?.as_finite().unwrap();
    check((w - c(0.0, -2.5)).norm() < 1e-12, format!("w(0) = {w}"))?;
    Ok(format!("I_z = [{a:.9}, {b:.9}], closure {gap:.1e}"))
}

fn critical_set() -> Outcome {
    let fam = linear();
    let set = build_critical_curves(&fam, 512).map_err(err)?;
    let oracle = critical_values_oracle(&fam, 256, 720).map_err(err)?;
    let branch: Vec<Complex64> = set.branches.iter().flat_map(|b| b.points()).collect();
    let dist = |p: Complex64, pts: &[Complex64]| pts.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min);
    // Oracle samples a coarser t grid, so compare each oracle point against
    // the closed form and each branch point against the oracle's line.
    let oracle_pts: Vec<Complex64> = oracle.iter().map(|o| o.z).collect();
    let mut hausdorff: f64 = 0.0;
    for o in &oracle {
        hausdorff = hausdorff.max(dist(o.z, &[c(o.t, -1.0), c(o.t, 1.0)]));
    }
    for &p in &branch {
        let d = oracle_pts
            .iter()
            .filter(|q| (q.im - p.im).abs() < 0.5)
            .map(|q| (q.im - p.im).abs())
            .fold(f64::INFINITY, f64::min);
        hausdorff = hausdorff.max(d);
    }
    check(hausdorff < 1e-6, format!("Hausdorff {hausdorff:e}"))?;
    let mut on_circle: f64 = 0.0;
    for br in &set.branches {
        for s in &br.samples {
            let (cc, r) = fam.jet0(s.t).map_err(err)?;
            on_circle = on_circle.max(((s.p - cc).norm() - r).abs());
            let expect = c(s.t, -br.branch.sign());
            check((s.p - expect).norm() < 1e-12, format!("p at t = {} is {}", s.t, s.p))?;
            check(s.rho.is_infinite(), format!("ρ = {} at t = {}", s.rho, s.t))?;
            let case = tangency_case(&fam, br.branch, s.t, 1e-6).map_err(err)?;
            check(case.label == CaseLabel::Case1, format!("{:?} at t = {}", case.label, s.t))?;
        }
    }
    check(on_circle < 1e-10, format!("|p - c| - r up to {on_circle:e}"))?;
    Ok(format!("Hausdorff {hausdorff:.1e}, on-circle {on_circle:.1e}, ρ = ∞, case1"))
}

fn kernel_identities() -> Outcome {
    let unit = |t: f64| {
        let e = Complex64::from_polar(1.0, t);
        (e, c(0.0, 1.0) * e)
    };
    let full = (0.0, 2.0 * PI);
    let one = |_: Complex64| c(1.0, 0.0);
    let id = |z: Complex64| z;
    let mut worst_one: f64 = 0.0;
    let mut worst_in: f64 = 0.0;
    let mut worst_out: f64 = 0.0;
    for w in [c(0.0, 0.0), c(0.3, 0.2), c(-0.5, 0.6), c(2.0, 1.0), c(0.0, -3.0)] {
        worst_one = worst_one.max(curve_phi(&unit, &one, full, w).map_err(err)?.value.norm());
        let v = curve_phi(&unit, &id, full, w).map_err(err)?.value;
        if w.norm() < 1.0 {
            worst_in = worst_in.max((v - c(0.0, 2.0 * PI)).norm());
        } else {
            worst_out = worst_out.max(v.norm());
        }
    }
    check(worst_one < 1e-10, format!("F = 1: {worst_one:e}"))?;
    check(worst_in < 1e-8, format!("F = ζ inside: {worst_in:e}"))?;
    check(worst_out < 1e-8, format!("F = ζ outside: {worst_out:e}"))?;
    Ok(format!("F=1 {worst_one:.1e}, inside {worst_in:.1e}, outside {worst_out:.1e}"))
}

fn continuation_parity() -> Outcome {
    let fam = linear();
    let critical = build_critical_curves(&fam, 1024).map_err(err)?;
    let line = choose_separating_line(&fam, &critical, 0).map_err(err)?;
    check(
        line.base.norm() < 1e-12 && line.direction.re.abs() < 1e-12,
        format!("line {} + s·{}", line.base, line.direction),
    )?;
    let ctl = TrackingController::default();
    let trace = track_line(&fam, &line, &ctl).map_err(err)?;
    let step = (line.extent.1 - line.extent.0) / ctl.steps as f64;
    let events: Vec<(EventKind, f64)> = trace.events.iter().map(|e| (e.kind, e.z.im)).collect();
    check(events.len() == 3, format!("events {events:?}"))?;
    let cross: Vec<f64> = events.iter().filter(|e| e.0 == EventKind::CrossInfinity).map(|e| e.1).collect();
    check(cross.len() == 1 && cross[0].abs() <= step, format!("CROSS_INFINITY at {cross:?}"))?;
    for (kind, y) in &events {
        if matches!(kind, EventKind::Create | EventKind::Annihilate) {
            check((y.abs() - 1.0).abs() <= step, format!("{kind:?} at y = {y}"))?;
        }
    }
    let (_, id) = loop_classes(&trace).map_err(err)?;
    check(trace.classes[id].infinity_stations.len() % 2 == 1, "even parity".into())?;

    let mut diam = Vec::new();
    for st in &trace.stations {
        let g = select_g(&trace, id, st.z).map_err(err)?;
        if g.loops.is_empty() {
            continue;
        }
        if !st.passes_infinity() {
            let rc = classify_regions(&g.loops, 32).map_err(err)?;
            check(rc.quasi_simple, format!("G_z not quasi-simple at {}", st.z))?;
        }
        let d = g.loop_indices.iter().map(|&li| st.summary[li].chordal_diameter).fold(0.0, f64::max);
        diam.push(d);
    }
    let peak = diam.iter().enumerate().fold(0, |m, (i, &d)| if d > diam[m] { i } else { m });
    let noise = 1e-3;
    let rising = diam[..=peak].windows(2).all(|w| w[1] >= w[0] - noise);
    let falling = diam[peak..].windows(2).all(|w| w[1] <= w[0] + noise);
    let ends = diam[0].max(diam[diam.len() - 1]);
    check(rising && falling, "diameters not monotone toward K±".into())?;
    check(ends < 1e-3, format!("edge diameter {ends:e}"))?;
    Ok(format!(
        "{} stations, events CREATE/CROSS_INFINITY/ANNIHILATE, edge diameter {ends:.1e}",
        trace.stations.len()
    ))
}

fn machinery() -> Outcome {
    let rep = run_verification(&linear(), &FunctionSpec::Exp, &VerificationConfig::default()).map_err(err)?;
    let m = rep.machinery.ok_or("machinery not run")?;
    check(m.constancy_stations >= 20, format!("{} stations", m.constancy_stations))?;
    check(m.loop_constancy_defect < 1e-7, format!("constancy {:e}", m.loop_constancy_defect))?;
    check(m.phi_samples >= 50, format!("{} Φ samples", m.phi_samples))?;
    check(m.phi_relative < 1e-5, format!("Φ {:e}", m.phi_relative))?;
    check(m.morera.len() >= 5, format!("{} Morera loops", m.morera.len()))?;
    check(m.morera_relative < 1e-4, format!("Morera {:e}", m.morera_relative))?;
    Ok(format!(
        "constancy {:.1e}, Φ {:.1e}, Morera {:.1e}",
        m.loop_constancy_defect, m.phi_relative, m.morera_relative
    ))
}

fn verify_exit(function: &str) -> Result<i32, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_circan"))
        .args(["verify", "--family", &data("families/linear.json"), "--function", &data(function)])
        .output()
        .map_err(|e| e.to_string())?;
    out.status.code().ok_or_else(|| "killed".to_string())
}

fn conclusion() -> Outcome {
    let r = Rect::centered(c(0.0, 0.0), 0.5);
    let sq = dbar_residual(&FunctionSpec::monomial(2), &r, 0.1).map_err(err)?;
    let cj = dbar_residual(&FunctionSpec::conj_z(), &r, 0.1).map_err(err)?;
    check(sq < 1e-12, format!("dbar(z²) = {sq:e}"))?;
    check((cj - 2.0).abs() < 1e-10, format!("dbar(z̄) = {cj}"))?;
    let exp = verify_exit("functions/exp.json")?;
    let conj = verify_exit("functions/conj.json")?;
    check(exp == 0, format!("verify exp exited {exp}"))?;
    check(conj == 2, format!("verify z̄ exited {conj}"))?;
    Ok(format!("dbar(z²) {sq:.1e}, dbar(z̄) {cj:.12}, exits {exp}/{conj}"))
}

fn brute_force(fam: &CircleFamily, z: Complex64, n: usize) -> Option<Vec<(f64, f64)>> {
    let (a, b) = fam.t_range();
    let g = |t: f64| {
        let (cc, r) = fam.jet0(t).unwrap();
        (z - cc).norm_sqr() - r * r
    };
    let ts: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
    let gs: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    if (1..n - 1).any(|k| (gs[k] - gs[k - 1]) * (gs[k + 1] - gs[k]) <= 0.0 && gs[k].abs() < 1e-4) {
        return None;
    }
    let mut roots = Vec::new();
    for k in 0..n - 1 {
        if (gs[k] <= 0.0) != (gs[k + 1] <= 0.0) {
            let (mut lo, mut hi) = (ts[k], ts[k + 1]);
            let lo_in = gs[k] <= 0.0;
            while hi - lo > 1e-15 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (g(mid) <= 0.0) == lo_in {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    Some(roots.chunks(2).map(|p| (p[0], p[1])).collect())
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for (k, name) in ["linear", "arc", "hairpin"].iter().enumerate() {
        let fam = family(name);
        let bb = fam.bounding_box(512).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let mut checked = 0;
        while checked < 100 {
            let z = c(rng.random_range(bb[0]..bb[1]), rng.random_range(bb[2]..bb[3]));
            let fast = match incidence_intervals(&fam, z, 1024, 1e-10) {
                Ok(s) => s.intervals,
                Err(Error::InEndDisc { .. }) => continue,
                Err(e) => return Err(format!("{name} at {z}: {e}")),
            };
            let Some(slow) = brute_force(&fam, z, 10240) else { continue };
            check(fast.len() == slow.len(), format!("{name} at {z}: {fast:?} vs {slow:?}"))?;
            for (p, q) in fast.iter().zip(&slow) {
                worst = worst.max((p.0 - q.0).abs()).max((p.1 - q.1).abs());
            }
            checked += 1;
        }
    }
    check(worst < 1e-8, format!("endpoint deviation {worst:e}"))?;
    Ok(format!("3 × 100 points, endpoint deviation {worst:.1e}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("v{k}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_circan"))
            .args([
                "verify",
                "--family",
                &data("families/hairpin.json"),
                "--function",
                &data("functions/exp.json"),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .map_err(|e| e.to_string())?
            .status;
        check(status.code() == Some(0), format!("run {k} exited {status}"))?;
        reports.push(std::fs::read(out).map_err(|e| e.to_string())?);
    }
    check(reports[0] == reports[1], "reports differ".into())?;
    Ok(format!("{} identical bytes", reports[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("family gate", family_gate),
        ("extendibility", extendibility),
        ("fiber geometry", fiber_geometry),
        ("critical set", critical_set),
        ("kernel identities", kernel_identities),
        ("continuation parity", continuation_parity),
        ("machinery on holomorphic data", machinery),
        ("conclusion test", conclusion),
        ("oracle equivalence", oracle_equivalence),
        ("determinism", determinism),
    ];
    let budget = Duration::from_secs(10);
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > budget => Err(format!("{msg}; took {elapsed:.1?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name} ({elapsed:.2?}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({elapsed:.2?}): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
