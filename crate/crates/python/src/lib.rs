//! Python bindings: the lattice types and the three reachability runners,
//! exposed as an extension module named `reachtrack`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use reachtrack_cli::runners::{self, RunOutput};
use reachtrack_core::analysis;
use reachtrack_core::dynamics::{
    alpha_of, kappa_of, sigma_of, AffineForm, AffineIntervalBoxMap, Problem, RhsModel,
};
use reachtrack_core::grid::{
    chebyshev, hausdorff_digital, is_chain_connected, rasterize, DigitalSet as CoreDigitalSet,
    GridPoint, IntervalBox, RasterMode, Resolution,
};
use reachtrack_core::refine::error_e;
use reachtrack_core::scheme::{cumsum_nodes, validate_admissible, Discretization};
use reachtrack_core::topology::{self, BoundaryPair as CoreBoundaryPair};

fn py_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// One affine form `(coefficients, offset)`.
type PyForm = (Vec<f64>, f64);

fn parse_mode(mode: &str) -> PyResult<RasterMode> {
    match mode {
        "full" => Ok(RasterMode::Full),
        "boundary" => Ok(RasterMode::Boundary),
        other => Err(PyValueError::new_err(format!(
            "mode must be 'full' or 'boundary', got '{other}'"
        ))),
    }
}

/// A finite set of lattice points at one resolution.
#[pyclass(name = "DigitalSet", skip_from_py_object)]
#[derive(Clone)]
struct PyDigitalSet {
    inner: CoreDigitalSet,
}

#[pymethods]
impl PyDigitalSet {
    #[new]
    fn new(rho: f64, dim: usize, points: Vec<Vec<i64>>) -> PyResult<Self> {
        let r = Resolution::new(rho).map_err(py_err)?;
        let inner = CoreDigitalSet::from_points(r, dim, points.iter().map(|c| GridPoint::new(c)))
            .map_err(py_err)?;
        Ok(PyDigitalSet { inner })
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho().get()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "DigitalSet(rho={}, dim={}, points={})",
            self.inner.rho().get(),
            self.inner.dim(),
            self.inner.len()
        )
    }

    /// Lattice indices in lexicographic order.
    fn points(&self) -> Vec<Vec<i64>> {
        self.inner
            .sorted_points()
            .iter()
            .map(|p| p.coords().to_vec())
            .collect()
    }

    /// Embedded positions `rho * index` in lexicographic index order.
    fn positions(&self) -> Vec<Vec<f64>> {
        self.inner
            .sorted_points()
            .iter()
            .map(|p| p.embed(self.inner.rho()))
            .collect()
    }

    fn is_chain_connected(&self) -> PyResult<bool> {
        is_chain_connected(&self.inner).map_err(py_err)
    }

    fn hausdorff(&self, other: &PyDigitalSet) -> PyResult<f64> {
        hausdorff_digital(&self.inner, &other.inner).map_err(py_err)
    }

    /// Re-digitization onto a coarser nested grid.
    fn restrict(&self, rho_coarse: f64) -> PyResult<PyDigitalSet> {
        let r = Resolution::new(rho_coarse).map_err(py_err)?;
        Ok(PyDigitalSet {
            inner: topology::restrict(&self.inner, r).map_err(py_err)?,
        })
    }

    /// The boundary pair uniquely encoding this set.
    fn trace(&self) -> PyResult<PyBoundaryPair> {
        Ok(PyBoundaryPair {
            inner: topology::trace(&self.inner).map_err(py_err)?,
        })
    }
}

/// The pair of inner and first outer boundary layer of a digital image.
#[pyclass(name = "BoundaryPair", skip_from_py_object)]
#[derive(Clone)]
struct PyBoundaryPair {
    inner: CoreBoundaryPair,
}

#[pymethods]
impl PyBoundaryPair {
    #[getter]
    fn d0(&self) -> PyDigitalSet {
        PyDigitalSet {
            inner: self.inner.d0().clone(),
        }
    }

    #[getter]
    fn d1(&self) -> PyDigitalSet {
        PyDigitalSet {
            inner: self.inner.d1().clone(),
        }
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho().get()
    }

    fn __repr__(&self) -> String {
        format!(
            "BoundaryPair(rho={}, d0={}, d1={})",
            self.inner.rho().get(),
            self.inner.d0().len(),
            self.inner.d1().len()
        )
    }

    /// The unique set with this trace.
    fn reconstruct(&self) -> PyResult<PyDigitalSet> {
        Ok(PyDigitalSet {
            inner: topology::reconstruct(&self.inner).map_err(py_err)?,
        })
    }

    /// The boundary pair of the restriction of the encoded set.
    fn restrict(&self, rho_coarse: f64) -> PyResult<PyBoundaryPair> {
        let r = Resolution::new(rho_coarse).map_err(py_err)?;
        Ok(PyBoundaryPair {
            inner: topology::restrict_pair(&self.inner, r).map_err(py_err)?,
        })
    }
}

/// Result of one reachability run.
#[pyclass(name = "RunResult")]
struct PyRunResult {
    output: RunOutput,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn algo(&self) -> String {
        self.output.report.algo.clone()
    }

    /// A-priori error bound of the final discretization.
    #[getter]
    fn error_bound(&self) -> f64 {
        self.output.report.e_value
    }

    #[getter]
    fn h(&self) -> Vec<f64> {
        self.output.report.delta.h().to_vec()
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.output.report.delta.t().to_vec()
    }

    #[getter]
    fn rho(&self) -> Vec<f64> {
        self.output.report.delta.rho().to_vec()
    }

    #[getter]
    fn c_r(&self) -> Vec<u64> {
        self.output.report.counters.iter().map(|c| c.c_r).collect()
    }

    #[getter]
    fn c_f(&self) -> Vec<u64> {
        self.output.report.counters.iter().map(|c| c.c_f).collect()
    }

    #[getter]
    fn total_c_f(&self) -> u64 {
        self.output.report.counters.iter().map(|c| c.c_f).sum()
    }

    #[getter]
    fn relative_error(&self) -> Option<f64> {
        self.output.report.relative_error
    }

    /// `(value, overestimate)` of the distance to the exact reachable set,
    /// when one is known.
    #[getter]
    fn hausdorff_to_exact(&self) -> Option<(f64, f64)> {
        self.output
            .report
            .hausdorff_to_exact
            .as_ref()
            .map(|c| (c.value, c.overestimate))
    }

    fn n_steps(&self) -> usize {
        self.output.report.delta.n()
    }

    /// Boundary pair of the reachable set at node `k`.
    fn boundary(&self, k: usize) -> PyResult<PyBoundaryPair> {
        self.output
            .boundaries
            .get(k)
            .map(|p| PyBoundaryPair { inner: p.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("node {k} out of range")))
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(algo='{}', n={}, error_bound={:.6})",
            self.output.report.algo,
            self.output.report.delta.n(),
            self.output.report.e_value
        )
    }
}

/// A differential inclusion with box-valued right-hand side.
#[pyclass(name = "Problem")]
struct PyProblem {
    inner: Problem,
}

#[pymethods]
impl PyProblem {
    /// The scaled-interval example with parameter `L`.
    #[staticmethod]
    fn simp7(lipschitz: f64) -> PyResult<Self> {
        Ok(PyProblem {
            inner: analysis::simp7_problem(lipschitz).map_err(py_err)?,
        })
    }

    /// The rotation-like example.
    #[staticmethod]
    fn bp() -> PyResult<Self> {
        Ok(PyProblem {
            inner: analysis::bp_problem().map_err(py_err)?,
        })
    }

    /// Builds a problem from per-coordinate pairs of affine forms
    /// `((coeffs, offset), (coeffs, offset))`, evaluated with sorted
    /// endpoints.
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    fn affine_interval_box(
        name: String,
        rows: Vec<(PyForm, PyForm)>,
        lipschitz: f64,
        bound: f64,
        d_x: usize,
        d_u: usize,
        x0: Vec<f64>,
        horizon: f64,
    ) -> PyResult<Self> {
        let rows = rows
            .into_iter()
            .map(|((ca, oa), (cb, ob))| (AffineForm::new(ca, oa), AffineForm::new(cb, ob)))
            .collect();
        let map = AffineIntervalBoxMap::new(rows).map_err(py_err)?;
        let rhs = RhsModel::new(map, lipschitz, bound, d_x, d_u).map_err(py_err)?;
        Ok(PyProblem {
            inner: Problem::new(name, rhs, IntervalBox::point(&x0), horizon).map_err(py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn lipschitz(&self) -> f64 {
        self.inner.rhs.lipschitz()
    }

    #[getter]
    fn bound(&self) -> f64 {
        self.inner.rhs.bound()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.rhs.dim()
    }

    /// `(h, t, rho)` of the starting discretization of the iterative driver.
    fn initial_discretization(&self) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let d = Discretization::uniform_initial(
            self.inner.rhs.lipschitz(),
            self.inner.rhs.bound(),
            self.inner.horizon,
        )
        .map_err(py_err)?;
        Ok((d.h().to_vec(), d.t().to_vec(), d.rho().to_vec()))
    }

    /// Adaptive boundary tracking over a decreasing threshold ladder.
    fn run_ba(&self, py: Python<'_>, eps_ladder: Vec<f64>) -> PyResult<PyRunResult> {
        let problem = &self.inner;
        let output = py
            .detach(|| runners::run_ba(problem, &eps_ladder))
            .map_err(py_err)?;
        Ok(PyRunResult { output })
    }

    /// Uniform boundary tracking at one threshold.
    fn run_bu(&self, py: Python<'_>, eps: f64) -> PyResult<PyRunResult> {
        let problem = &self.inner;
        let output = py.detach(|| runners::run_bu(problem, eps)).map_err(py_err)?;
        Ok(PyRunResult { output })
    }

    /// Uniform full-set recursion at one threshold.
    fn run_eu(&self, py: Python<'_>, eps: f64) -> PyResult<PyRunResult> {
        let problem = &self.inner;
        let output = py.detach(|| runners::run_eu(problem, eps)).map_err(py_err)?;
        Ok(PyRunResult { output })
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(name='{}', dim={}, L={}, P={}, T={})",
            self.inner.name,
            self.inner.rhs.dim(),
            self.inner.rhs.lipschitz(),
            self.inner.rhs.bound(),
            self.inner.horizon
        )
    }
}

/// Chebyshev (max) distance between two positions.
#[pyfunction(name = "chebyshev")]
fn py_chebyshev(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    chebyshev(&x, &y).map_err(py_err)
}

/// Blow-up radius `(1 + L h) rho / 2`.
#[pyfunction(name = "alpha")]
fn py_alpha(lipschitz: f64, h: f64, rho: f64) -> f64 {
    alpha_of(lipschitz, h, rho)
}

#[pyfunction(name = "kappa")]
fn py_kappa(lipschitz: f64, h: f64, rho: f64) -> PyResult<f64> {
    kappa_of(lipschitz, h, rho).map_err(py_err)
}

/// Average annulus thickness `2 alpha + kappa / 4`.
#[pyfunction(name = "sigma")]
fn py_sigma(lipschitz: f64, h: f64, rho: f64) -> PyResult<f64> {
    sigma_of(lipschitz, h, rho).map_err(py_err)
}

/// A-priori error bound of the discretization `(h, rho)` with nodes at the
/// cumulative sums of `h`.
#[pyfunction(name = "error_bound")]
fn py_error_bound(lipschitz: f64, bound: f64, h: Vec<f64>, rho: Vec<f64>) -> PyResult<f64> {
    let t = cumsum_nodes(&h);
    let horizon = *t.last().unwrap_or(&0.0);
    let delta = Discretization::from_parts(h, t, rho).map_err(py_err)?;
    Ok(error_e(&delta, lipschitz, bound, horizon))
}

/// Admissibility diagnostics of `(h, rho)`; empty means admissible.
#[pyfunction(name = "admissibility_violations")]
fn py_admissibility(
    lipschitz: f64,
    bound: f64,
    horizon: f64,
    h: Vec<f64>,
    rho: Vec<f64>,
) -> PyResult<Vec<String>> {
    let t = cumsum_nodes(&h);
    let delta = Discretization::from_parts(h, t, rho).map_err(py_err)?;
    Ok(validate_admissible(&delta, lipschitz, bound, horizon).violations)
}

/// `eps / e^{L T}`.
#[pyfunction(name = "relative_error")]
fn py_relative_error(eps: f64, lipschitz: f64, horizon: f64) -> f64 {
    analysis::relative_error(eps, lipschitz, horizon)
}

/// Lattice points within `alpha` of the box `[lo, hi]` (mode `"full"`) or of
/// its topological boundary (mode `"boundary"`).
#[pyfunction(name = "rasterize_box")]
fn py_rasterize_box(
    lo: Vec<f64>,
    hi: Vec<f64>,
    alpha: f64,
    rho: f64,
    mode: &str,
) -> PyResult<PyDigitalSet> {
    let b = IntervalBox::new(lo, hi).map_err(py_err)?;
    let r = Resolution::new(rho).map_err(py_err)?;
    Ok(PyDigitalSet {
        inner: rasterize(&b, alpha, r, parse_mode(mode)?).map_err(py_err)?,
    })
}

#[pymodule]
fn reachtrack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDigitalSet>()?;
    m.add_class::<PyBoundaryPair>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(py_chebyshev, m)?)?;
    m.add_function(wrap_pyfunction!(py_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(py_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(py_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(py_error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(py_admissibility, m)?)?;
    m.add_function(wrap_pyfunction!(py_relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(py_rasterize_box, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
