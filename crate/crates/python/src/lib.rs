//! Python bindings. Structured results (reports, traces) cross the boundary
//! as JSON and come back as plain dicts.

use circle_analyticity as ca;
use ca::continuation::{choose_separating_line, track_line, TrackingController};
use ca::critical::{build_critical_curves, sliding_points as core_sliding_points, tangency_case, Branch};
use ca::extension::TraceSampler;
use ca::fiber::{build_fiber_curve, fiber_point as core_fiber_point, incidence_intervals as core_incidence, SamplingController};
use ca::verify::{dbar_residual as core_dbar, run_verification, Rect, VerificationConfig};
use ca::{Complex64, SpherePoint};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: ca::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn sphere(p: SpherePoint) -> Option<Complex64> {
    p.as_finite()
}

/// A one-parameter family of circles.
#[pyclass(module = "circan", frozen)]
struct Family {
    inner: ca::CircleFamily,
}

#[pymethods]
impl Family {
    /// Family with center `c(t)` and radius `r(t)` given as expressions in `t`.
    #[new]
    fn new(c: &str, r: &str, alpha: f64, beta: f64) -> PyResult<Self> {
        let inner = ca::CircleFamily::from_exprs(c, r, [alpha, beta]).map_err(err)?;
        Ok(Family { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Family {
            inner: ca::CircleFamily::from_json(text).map_err(err)?,
        })
    }

    #[getter]
    fn t_range(&self) -> (f64, f64) {
        self.inner.t_range()
    }

    fn center(&self, t: f64) -> PyResult<Complex64> {
        self.inner.center(t).map_err(err)
    }

    fn radius(&self, t: f64) -> PyResult<f64> {
        self.inner.radius(t).map_err(err)
    }

    #[pyo3(signature = (samples = 512))]
    fn validate<'py>(&self, py: Python<'py>, samples: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.validate(samples).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        let (a, b) = self.inner.t_range();
        format!("Family(t in [{a}, {b}])")
    }
}

/// A test function on the plane.
#[pyclass(module = "circan", frozen)]
struct Function {
    inner: ca::FunctionSpec,
}

#[pymethods]
impl Function {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Function {
            inner: ca::FunctionSpec::from_json(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn exp() -> Self {
        Function {
            inner: ca::FunctionSpec::Exp,
        }
    }

    /// `sum c · z^m · conj(z)^n` over `(m, n, c)` triples.
    #[staticmethod]
    fn poly(terms: Vec<(u32, u32, Complex64)>) -> Self {
        Function {
            inner: ca::FunctionSpec::poly(&terms),
        }
    }

    #[staticmethod]
    fn conj() -> Self {
        Function {
            inner: ca::FunctionSpec::conj_z(),
        }
    }

    #[staticmethod]
    fn reciprocal(a: Complex64) -> Self {
        Function {
            inner: ca::FunctionSpec::reciprocal(a),
        }
    }

    fn __call__(&self, z: Complex64) -> PyResult<Complex64> {
        self.inner.eval(z).map_err(err)
    }
}

/// Largest negative-frequency Laurent coefficient of `f` on the circle `t`.
#[pyfunction]
#[pyo3(signature = (family, function, t, n = 256))]
fn extendibility_defect(family: &Family, function: &Function, t: f64, n: usize) -> PyResult<f64> {
    let trace = TraceSampler::new(n)
        .and_then(|s| s.sample(&function.inner, &family.inner, t))
        .map_err(err)?;
    Ok(trace.extendibility_defect())
}

/// Parameter intervals whose closed discs contain `z`.
#[pyfunction]
#[pyo3(signature = (family, z, resolution = 1024))]
fn incidence_intervals(family: &Family, z: Complex64, resolution: usize) -> PyResult<Vec<(f64, f64)>> {
    Ok(core_incidence(&family.inner, z, resolution, 1e-10).map_err(err)?.intervals)
}

/// `w(t)` on the fiber over `z`; `None` stands for the point at infinity.
#[pyfunction]
fn fiber_point(family: &Family, t: f64, z: Complex64) -> PyResult<Option<Complex64>> {
    Ok(sphere(core_fiber_point(&family.inner, t, z).map_err(err)?))
}

/// Loops of the fiber over `z` as lists of points (`None` at infinity).
#[pyfunction]
fn fiber_loops(family: &Family, z: Complex64) -> PyResult<Vec<Vec<Option<Complex64>>>> {
    let curve = build_fiber_curve(&family.inner, z, &SamplingController::default()).map_err(err)?;
    Ok(curve
        .loops
        .iter()
        .map(|lp| lp.points().into_iter().map(sphere).collect())
        .collect())
}

#[pyfunction]
fn sliding_points(family: &Family, t: f64) -> PyResult<(Complex64, Complex64)> {
    core_sliding_points(&family.inner, t).map_err(err)
}

/// Case label (`case1`, `case2`, `case3-forbidden`) of the `+` or `-` branch at `t`.
#[pyfunction]
#[pyo3(signature = (family, branch, t, tol = 1e-6))]
fn case_label(family: &Family, branch: &str, t: f64, tol: f64) -> PyResult<&'static str> {
    let b = match branch {
        "+" => Branch::Plus,
        "-" => Branch::Minus,
        _ => return Err(PyValueError::new_err("branch must be '+' or '-'")),
    };
    Ok(tangency_case(&family.inner, b, t, tol).map_err(err)?.label.as_str())
}

#[pyfunction]
#[pyo3(signature = (family, samples = 1024))]
fn critical_set<'py>(py: Python<'py>, family: &Family, samples: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &build_critical_curves(&family.inner, samples).map_err(err)?)
}

/// Separating line and loop continuation along it.
#[pyfunction]
#[pyo3(signature = (family, seed = 0, steps = 128))]
fn continuation<'py>(py: Python<'py>, family: &Family, seed: u64, steps: usize) -> PyResult<Bound<'py, PyAny>> {
    let critical = build_critical_curves(&family.inner, 1024).map_err(err)?;
    let line = choose_separating_line(&family.inner, &critical, seed).map_err(err)?;
    let ctl = TrackingController {
        steps,
        ..TrackingController::default()
    };
    let trace = track_line(&family.inner, &line, &ctl).map_err(err)?;
    to_py(py, &serde_json::json!({ "line": line, "trace": trace }))
}

#[pyfunction]
fn dbar_residual(function: &Function, x_min: f64, x_max: f64, y_min: f64, y_max: f64, h: f64) -> PyResult<f64> {
    let r = Rect {
        x_min,
        x_max,
        y_min,
        y_max,
    };
    core_dbar(&function.inner, &r, h).map_err(err)
}

/// Full verification; returns the report dict (key `verdict` holds the outcome).
#[pyfunction]
#[pyo3(signature = (family, function, config = None))]
fn verify<'py>(py: Python<'py>, family: &Family, function: &Function, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = match config {
        Some(text) => VerificationConfig::from_json(text).map_err(err)?,
        None => VerificationConfig::default(),
    };
    let rep = py.detach(|| run_verification(&family.inner, &function.inner, &cfg)).map_err(err)?;
    to_py(py, &rep)
}

#[pymodule]
fn circan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Family>()?;
    m.add_class::<Function>()?;
    m.add_function(wrap_pyfunction!(extendibility_defect, m)?)?;
    m.add_function(wrap_pyfunction!(incidence_intervals, m)?)?;
    m.add_function(wrap_pyfunction!(fiber_point, m)?)?;
    m.add_function(wrap_pyfunction!(fiber_loops, m)?)?;
    m.add_function(wrap_pyfunction!(sliding_points, m)?)?;
    m.add_function(wrap_pyfunction!(case_label, m)?)?;
    m.add_function(wrap_pyfunction!(critical_set, m)?)?;
    m.add_function(wrap_pyfunction!(continuation, m)?)?;
    m.add_function(wrap_pyfunction!(dbar_residual, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
