//! Python bindings. Functions are passed as expression text or registry
//! names (`"exp(x)"`, `"neg_sin_pi"`), so no Python callback crosses the
//! solver loops.

use coconvex::harness::{resolve_function, run_experiment, Experiment, ExperimentConfig};
use coconvex::korovkin::fejer_apply;
use coconvex::shape::{is_coconvex, is_convex};
use coconvex::smoothness::{classical_modulus, dt_modulus, ModulusSpec};
use coconvex::solvers::{best_approximation, best_spline, ApproxProblem, ShapeConstraint, SplineOptions};
use coconvex::weighted_spaces::weighted_lp_norm;
use coconvex::{ChebyshevPartition, ChebyshevPolynomial, Continuity, Error, Func, InflectionPartition, WeightedNormParams};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Solver(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn func(spec: &str) -> PyResult<Func> {
    resolve_function(spec).map(|r| r.func()).map_err(py_err)
}

fn partition(points: Vec<f64>) -> PyResult<InflectionPartition> {
    InflectionPartition::new(points).map_err(py_err)
}

fn constraint(shape: &str, inflections: Option<Vec<f64>>) -> PyResult<ShapeConstraint> {
    match shape {
        "none" => Ok(ShapeConstraint::None),
        "convex" => Ok(ShapeConstraint::Convex),
        "coconvex" => Ok(ShapeConstraint::Coconvex(partition(inflections.unwrap_or_default())?)),
        other => Err(PyValueError::new_err(format!(
            "unknown shape '{other}' (expected none, convex or coconvex)"
        ))),
    }
}

/// Polynomial in the Chebyshev basis on `[-1, 1]`.
#[pyclass(name = "Polynomial", module = "coconvex_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyPolynomial(ChebyshevPolynomial);

#[pymethods]
impl PyPolynomial {
    #[new]
    fn new(coeffs: Vec<f64>) -> PyResult<Self> {
        ChebyshevPolynomial::new(coeffs).map(Self).map_err(py_err)
    }

    /// Builds from monomial coefficients `a₀ + a₁x + …`.
    #[staticmethod]
    fn from_power(power: Vec<f64>) -> PyResult<Self> {
        ChebyshevPolynomial::from_power(&power).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn interpolate(expr: &str, degree: usize) -> PyResult<Self> {
        let f = func(expr)?;
        ChebyshevPolynomial::interpolate(f.as_fn(), degree).map(Self).map_err(py_err)
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.0.coeffs().to_vec()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    fn to_power(&self) -> Vec<f64> {
        self.0.to_power()
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.0.eval(x).map_err(py_err)
    }

    #[pyo3(signature = (order = 1))]
    fn derivative(&self, order: usize) -> Self {
        Self(self.0.nth_derivative(order))
    }

    fn roots(&self) -> Vec<f64> {
        self.0.roots_in_unit()
    }

    #[pyo3(signature = (tol = 0.0))]
    fn is_convex(&self, tol: f64) -> bool {
        is_convex(&self.0, tol)
    }

    #[pyo3(signature = (inflections, tol = 0.0))]
    fn is_coconvex(&self, inflections: Vec<f64>, tol: f64) -> PyResult<bool> {
        Ok(is_coconvex(&self.0, &partition(inflections)?, tol))
    }

    fn __repr__(&self) -> String {
        format!("Polynomial({:?})", self.0.coeffs())
    }
}

/// `‖w_{α,β} f‖_p` on `[-1, 1]`.
#[pyfunction]
#[pyo3(signature = (expr, p, alpha = 0.0, beta = 0.0))]
fn weighted_norm(expr: &str, p: f64, alpha: f64, beta: f64) -> PyResult<f64> {
    let params = WeightedNormParams::new(alpha, beta, p).map_err(py_err)?;
    weighted_lp_norm(func(expr)?.as_fn(), &params).map_err(py_err)
}

/// Classical (`kind="classical"`) or Ditzian–Totik (`kind="dt"`) modulus.
#[pyfunction]
#[pyo3(signature = (expr, k, t, p, kind = "dt"))]
fn modulus(expr: &str, k: usize, t: f64, p: f64, kind: &str) -> PyResult<f64> {
    let f = func(expr)?;
    match kind {
        "classical" => classical_modulus(f.as_fn(), k, t, p),
        "dt" => dt_modulus(f.as_fn(), &ModulusSpec::new(k, p), t),
        other => return Err(PyValueError::new_err(format!("unknown modulus kind '{other}'"))),
    }
    .map_err(py_err)
}

/// Best approximation by polynomials of degree `< n`. Returns a dict with
/// the polynomial, the error, the solver status and the worst shape
/// residual.
#[pyfunction]
#[pyo3(signature = (expr, n, p, alpha = 0.0, beta = 0.0, shape = "none", inflections = None))]
#[allow(clippy::too_many_arguments)]
fn best_approx<'py>(
    py: Python<'py>,
    expr: &str,
    n: usize,
    p: f64,
    alpha: f64,
    beta: f64,
    shape: &str,
    inflections: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let norm = WeightedNormParams::new(alpha, beta, p).map_err(py_err)?;
    let prob = ApproxProblem::new(func(expr)?, n, norm).with_constraint(constraint(shape, inflections)?);
    let sol = best_approximation(&prob).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("polynomial", PyPolynomial(sol.polynomial.clone()))?;
    out.set_item("error", sol.error)?;
    out.set_item("status", sol.status.as_str())?;
    out.set_item("iterations", sol.iterations)?;
    if !sol.constraint_residual.is_empty() {
        out.set_item("worst_residual", sol.worst_residual())?;
    }
    Ok(out)
}

/// Best spline of order `k` (degree `k − 1`) on the Chebyshev partition
/// with `n` pieces.
#[pyfunction]
#[pyo3(signature = (expr, n, k, p, continuity = "C0", alpha = 0.0, beta = 0.0))]
#[allow(clippy::too_many_arguments)]
fn best_spline_approx<'py>(
    py: Python<'py>,
    expr: &str,
    n: usize,
    k: usize,
    p: f64,
    continuity: &str,
    alpha: f64,
    beta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let continuity = match continuity {
        "C0" => Continuity::C0,
        "C1" => Continuity::C1,
        other => return Err(PyValueError::new_err(format!("unknown continuity '{other}'"))),
    };
    let norm = WeightedNormParams::new(alpha, beta, p).map_err(py_err)?;
    let knots = ChebyshevPartition::new(n).map_err(py_err)?;
    let sol = best_spline(
        &func(expr)?,
        knots.knots(),
        k,
        continuity,
        &ShapeConstraint::None,
        &norm,
        &SplineOptions::default(),
    )
    .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("knots", sol.spline.knots().to_vec())?;
    let pieces: Vec<PyPolynomial> = sol.spline.pieces().iter().cloned().map(PyPolynomial).collect();
    out.set_item("pieces", pieces)?;
    out.set_item("error", sol.error)?;
    out.set_item("status", sol.status.as_str())?;
    Ok(out)
}

/// Fejér mean `σ_n f(x)` of a 2π-periodic function.
#[pyfunction]
fn fejer(expr: &str, n: usize, x: f64) -> PyResult<f64> {
    fejer_apply(func(expr)?.as_fn(), n, x).map_err(py_err)
}

/// Runs a named experiment (`table`, `ratio`, `thm212`, `jackson`,
/// `example28`) from a JSON config and returns the rendered output.
#[pyfunction]
#[pyo3(signature = (name, config = "{}"))]
fn experiment(name: &str, config: &str) -> PyResult<String> {
    let which: Experiment = name.parse().map_err(py_err)?;
    let cfg = ExperimentConfig::from_json(config).map_err(py_err)?;
    run_experiment(which, &cfg).map_err(py_err)
}

/// Evaluates an expression at `x`; raises `ValueError` on a parse error.
#[pyfunction]
fn evaluate(expr: &str, x: f64) -> PyResult<f64> {
    Ok(func(expr)?.eval(x))
}

#[pymodule]
fn coconvex_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPolynomial>()?;
    m.add_function(wrap_pyfunction!(weighted_norm, m)?)?;
    m.add_function(wrap_pyfunction!(modulus, m)?)?;
    m.add_function(wrap_pyfunction!(best_approx, m)?)?;
    m.add_function(wrap_pyfunction!(best_spline_approx, m)?)?;
    m.add_function(wrap_pyfunction!(fejer, m)?)?;
    m.add_function(wrap_pyfunction!(experiment, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
