use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circle_analyticity::continuation::{choose_separating_line, track_line, TrackingController};
use circle_analyticity::critical::build_critical_curves;
use circle_analyticity::extension::TraceSampler;
use circle_analyticity::fiber::{build_fiber_curve, SamplingController};
use circle_analyticity::verify::{run_verification, VerificationConfig};
use circle_analyticity::{CircleFamily, Complex64, Error, FunctionSpec};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "circan", version, about = "Checks holomorphy of functions on domains swept by families of circles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the family hypotheses (a)-(d).
    Validate {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Laurent coefficients of f on one circle and its extendibility defect.
    Extension {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        function: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(short = 'N', long = "samples", default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Fiber curve over one point z.
    Fiber {
        #[arg(long)]
        family: PathBuf,
        /// As "RE,IM".
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sampled branches of the critical set.
    Critical {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Loop continuation along the separating line.
    Continuation {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Full verification pipeline.
    Verify {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn load_family(path: &Path) -> Result<CircleFamily, Error> {
    CircleFamily::from_json(&read(path)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_z(s: &str) -> Result<Complex64, Error> {
    let bad = || Error::InvalidArgument(format!("expected RE,IM but got {s:?}"));
    let (re, im) = s.split_once(',').ok_or_else(bad)?;
    let re: f64 = re.trim().parse().map_err(|_| bad())?;
    let im: f64 = im.trim().parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn run(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Validate { family, samples, out } => {
            let rep = load_family(&family)?.validate(samples)?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&rep)?)?;
            Ok(if rep.overall { 0 } else { 3 })
        }
        Command::Extension {
            family,
            function,
            t,
            n,
            tol,
        } => {
            let fam = load_family(&family)?;
            let f = FunctionSpec::from_json(&read(&function)?)?;
            let trace = TraceSampler::new(n)?.sample(&f, &fam, t)?;
            let defect = trace.extendibility_defect();
            let negative: Vec<Complex64> = (1..=n as i64 / 2).map(|k| trace.coefficient(-k)).collect();
            let body = json!({
                "t": t,
                "center": trace.center,
                "radius": trace.radius,
                "n": n,
                "defect": defect,
                "tolerance": tol,
                "analytic": trace.analytic_part(),
                "negative": negative,
            });
            println!("{}", serde_json::to_string_pretty(&body)?);
            Ok(if defect <= tol { 0 } else { 2 })
        }
        Command::Fiber { family, z, svg, csv } => {
            let fam = load_family(&family)?;
            let z = parse_z(&z)?;
            let curve = build_fiber_curve(&fam, z, &SamplingController::default())?;
            let loops: Vec<_> = curve
                .loops
                .iter()
                .map(|lp| {
                    json!({
                        "interval": lp.interval,
                        "chart": lp.chart,
                        "base": lp.base,
                        "passes_infinity": lp.passes_infinity,
                        "samples": lp.len(),
                    })
                })
                .collect();
            let body = json!({ "z": z, "loops": loops, "warnings": curve.warnings });
            println!("{}", serde_json::to_string_pretty(&body)?);
            if let Some(p) = svg {
                fs::write(p, curve.to_svg())?;
            }
            if let Some(p) = csv {
                curve.write_csv(fs::File::create(p)?)?;
            }
            Ok(0)
        }
        Command::Critical {
            family,
            out,
            samples,
            svg,
        } => {
            let fam = load_family(&family)?;
            let set = build_critical_curves(&fam, samples)?;
            set.write_csv(&fam, 1e-6, fs::File::create(&out)?)?;
            if let Some(p) = svg {
                fs::write(p, set.to_svg(&fam)?)?;
            }
            let body = json!({
                "singular_points": set.singular_points,
                "simple": set.simplicity,
                "collisions": set.collisions,
            });
            println!("{}", serde_json::to_string_pretty(&body)?);
            Ok(0)
        }
        Command::Continuation {
            family,
            seed,
            steps,
            out,
            svg,
        } => {
            let fam = load_family(&family)?;
            let critical = build_critical_curves(&fam, 1024)?;
            let line = choose_separating_line(&fam, &critical, seed)?;
            let ctl = TrackingController {
                steps,
                ..TrackingController::default()
            };
            let trace = track_line(&fam, &line, &ctl)?;
            let body = json!({ "line": line, "trace": trace });
            emit(out.as_deref(), &serde_json::to_string_pretty(&body)?)?;
            if let Some(p) = svg {
                fs::write(p, trace.filmstrip_svg(8))?;
            }
            Ok(if trace.selected.is_some() { 0 } else { 3 })
        }
        Command::Verify {
            family,
            function,
            config,
            out,
        } => {
            let fam = load_family(&family)?;
            let f = FunctionSpec::from_json(&read(&function)?)?;
            let cfg = match config {
                Some(p) => VerificationConfig::from_json(&read(&p)?)?,
                None => VerificationConfig::default(),
            };
            let rep = run_verification(&fam, &f, &cfg)?;
            let text = rep.to_json()?;
            match out {
                Some(p) => {
                    fs::write(p, text)?;
                    println!("{}", rep.verdict.label());
                }
                None => println!("{text}"),
            }
            Ok(rep.verdict.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    // Usage errors exit 1; clap's default 2 is reserved for failed hypotheses.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
