//! Python bindings for the LDG + IMEX solver harness.

use ldg_imex::harness::{self, RunConfig};
use ldg_imex::problem::BUILTIN_PROBLEMS;
use ldg_imex::Error;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Unsupported(_) => PyValueError::new_err(e.to_string()),
        Error::Numeric(_) | Error::NoConvergence { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::Contract(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Study settings shared by every entry point; `None` keeps the problem defaults.
#[derive(Debug, Clone, Default)]
pub struct Settings<'a> {
    pub problem: &'a str,
    pub tableau: &'a str,
    pub bc: &'a str,
    pub alg: &'a str,
    pub step_rule: &'a str,
    pub levels: Option<Vec<usize>>,
    pub cfl: Option<f64>,
    pub final_time: Option<f64>,
    pub degree: Option<usize>,
}

impl Settings<'_> {
    pub fn config(&self) -> PyResult<RunConfig> {
        let mut c = RunConfig::default();
        for (k, v) in [
            ("problem", self.problem),
            ("tableau", self.tableau),
            ("bc", self.bc),
            ("alg", self.alg),
            ("step_rule", self.step_rule),
        ] {
            c.set(k, v).map_err(to_py)?;
        }
        if let Some(l) = &self.levels {
            c.levels = l.clone();
        }
        c.cfl = self.cfl;
        c.final_time = self.final_time;
        c.degree = self.degree;
        c.validate().map_err(to_py)?;
        Ok(c)
    }
}

/// One mesh level of a convergence study.
#[pyclass(frozen, get_all, skip_from_py_object, module = "ldg_imex_py")]
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n: usize,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// L1, L2, Linf orders against the previous level; `None` on the first level.
    pub orders: Option<(Option<f64>, Option<f64>, Option<f64>)>,
    pub steps: usize,
    pub seconds: f64,
}

#[pymethods]
impl ConvergenceRow {
    fn __repr__(&self) -> String {
        format!(
            "ConvergenceRow(n={}, l1={:e}, l2={:e}, linf={:e}, orders={:?})",
            self.n, self.l1, self.l2, self.linf, self.orders
        )
    }
}

/// Result of a single mesh level with its nodal error profile.
#[pyclass(frozen, get_all, skip_from_py_object, module = "ldg_imex_py")]
#[derive(Debug, Clone)]
pub struct SingleResult {
    pub n: usize,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub linf: Option<f64>,
    pub steps: usize,
    /// Node coordinates as (x, y); y is 0 in 1D.
    pub nodes: Vec<(f64, f64)>,
    pub values: Vec<f64>,
    pub reference: Vec<f64>,
    pub errors: Vec<f64>,
    /// Largest nodal error over the median error of the interior cells.
    pub boundary_layer_ratio: f64,
}

#[pymethods]
impl SingleResult {
    fn __repr__(&self) -> String {
        format!("SingleResult(n={}, linf={:?}, steps={})", self.n, self.linf, self.steps)
    }
}

/// Names of the built-in problems.
#[pyfunction]
fn problems() -> Vec<&'static str> {
    BUILTIN_PROBLEMS.to_vec()
}

/// Errors and observed orders over a sequence of meshes.
#[pyfunction]
#[pyo3(signature = (problem="heat1d", tableau="ark3", bc="treated", alg="alg2", levels=None, cfl=None, final_time=None, degree=None, step_rule="width"))]
#[allow(clippy::too_many_arguments)]
pub fn convergence(
    py: Python<'_>,
    problem: &str,
    tableau: &str,
    bc: &str,
    alg: &str,
    levels: Option<Vec<usize>>,
    cfl: Option<f64>,
    final_time: Option<f64>,
    degree: Option<usize>,
    step_rule: &str,
) -> PyResult<Vec<ConvergenceRow>> {
    let cfg = Settings {
        problem,
        tableau,
        bc,
        alg,
        step_rule,
        levels,
        cfl,
        final_time,
        degree,
    }
    .config()?;
    let report = py.detach(|| harness::run_convergence(&cfg)).map_err(to_py)?;
    Ok(report
        .rows
        .into_iter()
        .map(|r| ConvergenceRow {
            n: r.n,
            l1: r.errors[0],
            l2: r.errors[1],
            linf: r.errors[2],
            orders: r.orders.map(|o| (o[0], o[1], o[2])),
            steps: r.steps,
            seconds: r.seconds,
        })
        .collect())
}

/// Integrates one level and returns the nodal error profile.
#[pyfunction]
#[pyo3(signature = (n, problem="heat1d", tableau="ark3", bc="treated", alg="alg2", cfl=None, final_time=None, degree=None, step_rule="width"))]
#[allow(clippy::too_many_arguments)]
pub fn single(
    py: Python<'_>,
    n: usize,
    problem: &str,
    tableau: &str,
    bc: &str,
    alg: &str,
    cfl: Option<f64>,
    final_time: Option<f64>,
    degree: Option<usize>,
    step_rule: &str,
) -> PyResult<SingleResult> {
    let cfg = Settings {
        problem,
        tableau,
        bc,
        alg,
        step_rule,
        levels: Some(vec![n]),
        cfl,
        final_time,
        degree,
    }
    .config()?;
    let s = py.detach(|| harness::run_single(&cfg, n)).map_err(to_py)?;
    let coords = &s.run.field.space.coords;
    let norms = s.run.norms;
    Ok(SingleResult {
        n,
        l1: norms.map(|m| m.l1),
        l2: norms.map(|m| m.l2),
        linf: norms.map(|m| m.linf),
        steps: s.run.stats.steps,
        nodes: s.profile.iter().map(|r| (coords[r.dof].x, coords[r.dof].y)).collect(),
        values: s.profile.iter().map(|r| r.value).collect(),
        reference: s.profile.iter().map(|r| r.reference).collect(),
        errors: s.profile.iter().map(|r| r.error).collect(),
        boundary_layer_ratio: s.boundary_layer_ratio(),
    })
}

/// Treated-over-naive wall-time overhead per level, as (n, overhead) pairs.
#[pyfunction]
#[pyo3(signature = (problem="heat1d", tableau="ark3", alg="alg2", levels=None, repeats=5))]
pub fn efficiency(
    py: Python<'_>,
    problem: &str,
    tableau: &str,
    alg: &str,
    levels: Option<Vec<usize>>,
    repeats: usize,
) -> PyResult<Vec<(usize, f64)>> {
    let cfg = Settings {
        problem,
        tableau,
        bc: "treated",
        alg,
        step_rule: "width",
        levels,
        ..Default::default()
    }
    .config()?;
    let report = py.detach(|| harness::run_efficiency(&cfg, repeats)).map_err(to_py)?;
    Ok(report.overheads())
}

#[pymodule]
fn ldg_imex_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ConvergenceRow>()?;
    m.add_class::<SingleResult>()?;
    m.add_function(wrap_pyfunction!(problems, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(single, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency, m)?)?;
    Ok(())
}
