//! Python bindings for the coverage cost library.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use coverplace::catalog::{self, make_named, PlacementKind};
use coverplace::checks::{self, CheckConfig, Suite};
use coverplace::cost::{expected_cost_dp, expected_cost_enumeration};
use coverplace::lp::{build_lp, export_lp_text};
use coverplace::model::{FailureModel, Geometry, Placement};
use coverplace::{optimizer, random, runs, Error};

create_exception!(coverplace, SizeGuardError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::TooLarge { .. } => SizeGuardError::new_err(e.to_string()),
        Error::Solver(_) | Error::NoConvergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn geometry(name: &str) -> PyResult<Geometry> {
    match name {
        "interval" => Ok(Geometry::Interval),
        "circle" => Ok(Geometry::Circle),
        _ => Err(PyValueError::new_err(format!(
            "geometry must be 'interval' or 'circle', got '{name}'"
        ))),
    }
}

/// Sorted sensor positions in [0, 1].
#[pyclass(name = "Placement", module = "coverplace", frozen)]
struct PyPlacement {
    inner: Placement,
}

#[pymethods]
impl PyPlacement {
    #[new]
    fn new(positions: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: Placement::new(&positions).map_err(to_py)?,
        })
    }

    /// Named layouts: eq, sgl, alt, three:K, random:SEED.
    #[staticmethod]
    fn named(name: &str, n: usize) -> PyResult<Self> {
        let kind = match name.split_once(':') {
            None if name == "eq" => PlacementKind::Equispaced,
            None if name == "sgl" => PlacementKind::SingleCluster,
            None if name == "alt" => PlacementKind::Alternative,
            Some(("three", k)) => PlacementKind::ThreeCluster(
                k.parse().map_err(|_| PyValueError::new_err("bad cluster size"))?,
            ),
            Some(("random", s)) => {
                PlacementKind::Random(s.parse().map_err(|_| PyValueError::new_err("bad seed"))?)
            }
            _ => return Err(PyValueError::new_err(format!("unknown placement '{name}'"))),
        };
        Ok(Self {
            inner: make_named(kind, n).map_err(to_py)?.placement,
        })
    }

    #[getter]
    fn positions(&self) -> Vec<f64> {
        self.inner.positions().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Placement({:?})", self.inner.positions())
    }
}

/// Independent failures with probability p, or exactly k of n failing.
#[pyclass(name = "FailureModel", module = "coverplace", frozen)]
struct PyFailureModel {
    inner: FailureModel,
}

#[pymethods]
impl PyFailureModel {
    #[staticmethod]
    fn independent(p: f64) -> PyResult<Self> {
        Ok(Self {
            inner: FailureModel::independent(p).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn cortes(k: usize, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: FailureModel::cortes(k, n).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        match self.inner {
            FailureModel::Independent { p } => format!("FailureModel.independent({p})"),
            FailureModel::Cortes { k, n } => format!("FailureModel.cortes({k}, {n})"),
        }
    }
}

#[pyfunction]
#[pyo3(signature = (placement, model, geometry = "interval", method = "dp"))]
fn expected_cost(
    placement: PyRef<'_, PyPlacement>,
    model: PyRef<'_, PyFailureModel>,
    geometry: &str,
    method: &str,
) -> PyResult<f64> {
    let geom = self::geometry(geometry)?;
    let report = match method {
        "dp" => expected_cost_dp(&placement.inner, &model.inner, geom),
        "enum" => expected_cost_enumeration(&placement.inner, &model.inner, geom),
        _ => return Err(PyValueError::new_err("method must be 'dp' or 'enum'")),
    };
    Ok(report.map_err(to_py)?.expected_cost)
}

/// Optimal placement; returns a dict with positions, cost and lower_bound.
#[pyfunction]
#[pyo3(signature = (n, model, geometry = "interval"))]
fn optimize<'py>(
    py: Python<'py>,
    n: usize,
    model: PyRef<'_, PyFailureModel>,
    geometry: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let opt = optimizer::optimize_lp(n, &model.inner, self::geometry(geometry)?).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("positions", opt.placement.positions().to_vec())?;
    out.set_item("cost", opt.cost)?;
    out.set_item("lower_bound", opt.lower_bound)?;
    out.set_item("certified_gap", opt.certified_gap)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (n, p_grid, geometry = "interval", match_tol = 1e-6))]
fn sweep<'py>(
    py: Python<'py>,
    n: usize,
    p_grid: Vec<f64>,
    geometry: &str,
    match_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let res = optimizer::sweep_p(n, &p_grid, self::geometry(geometry)?, match_tol).map_err(to_py)?;
    let segments: Vec<(usize, usize)> = res.breakpoints.iter().map(|s| (s.start, s.end)).collect();
    let out = PyDict::new(py);
    out.set_item("p", res.p_grid)?;
    out.set_item("placements", res.placements)?;
    out.set_item("costs", res.costs)?;
    out.set_item("segments", segments)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (n, model, geometry = "interval"))]
fn export_lp(n: usize, model: PyRef<'_, PyFailureModel>, geometry: &str) -> PyResult<String> {
    let built = build_lp(n, &model.inner, self::geometry(geometry)?).map_err(to_py)?;
    Ok(export_lp_text(&built.lp))
}

#[pyfunction]
fn expected_cost_equispaced(n: usize, p: f64) -> PyResult<f64> {
    FailureModel::independent(p).map_err(to_py)?;
    Ok(runs::expected_cost_equispaced(n, p))
}

#[pyfunction]
fn expected_cost_random(n: usize, p: f64) -> PyResult<f64> {
    random::expected_cost_random(n, p).map_err(to_py)
}

/// E[C0] of m uniform points as an exact fraction (numerator, denominator).
#[pyfunction]
fn exact_random_fraction(m: usize) -> PyResult<(String, String)> {
    if m > random::RATIONAL_MAX_M {
        return Err(SizeGuardError::new_err(format!(
            "exact fraction needs m <= {}",
            random::RATIONAL_MAX_M
        )));
    }
    let r = random::exact_ec0_random_rational(m);
    Ok((r.numer().to_string(), r.denom().to_string()))
}

#[pyfunction]
#[pyo3(signature = (n, seed, index = 0))]
fn sample_uniform_placement(n: usize, seed: u64, index: u64) -> PyPlacement {
    PyPlacement {
        inner: catalog::sample_uniform_placement(n, seed, index),
    }
}

/// Runs one verification check and returns (passed, detail).
#[pyfunction]
#[pyo3(signature = (id, suite = "fast", seed = checks::DEFAULT_SEED))]
fn run_check(py: Python<'_>, id: u8, suite: &str, seed: u64) -> PyResult<(bool, String)> {
    if !checks::CHECKS.iter().any(|c| c.0 == id) {
        return Err(PyValueError::new_err(format!("no check with id {id}")));
    }
    let suite = match suite {
        "fast" => Suite::Fast,
        "full" => Suite::Full,
        _ => return Err(PyValueError::new_err("suite must be 'fast' or 'full'")),
    };
    let cfg = CheckConfig::new(suite, seed);
    let outcome = py.detach(|| checks::run_check(id, &cfg));
    Ok((outcome.passed, outcome.detail))
}

#[pymodule]
#[pyo3(name = "coverplace")]
fn coverplace_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GENERATOR_ID", catalog::GENERATOR_ID)?;
    m.add("SizeGuardError", m.py().get_type::<SizeGuardError>())?;
    m.add_class::<PyPlacement>()?;
    m.add_class::<PyFailureModel>()?;
    m.add_function(wrap_pyfunction!(expected_cost, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(export_lp, m)?)?;
    m.add_function(wrap_pyfunction!(expected_cost_equispaced, m)?)?;
    m.add_function(wrap_pyfunction!(expected_cost_random, m)?)?;
    m.add_function(wrap_pyfunction!(exact_random_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(sample_uniform_placement, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    Ok(())
}
