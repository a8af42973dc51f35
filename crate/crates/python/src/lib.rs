//! Python bindings: geometry, node generation, the incremental plastic
//! solver, closed-form cylinder references and the benchmark presets.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mlplast::approx::BasisConfig;
use mlplast::driver::{self, LoadProgram, SolverConfig};
use mlplast::elastic::ElasticConstants;
use mlplast::geometry::{BoundaryTag, Cutout};
use mlplast::material::{von_mises, HardeningCurve, MaterialModel};
use mlplast::{nodegen, verify};
use mlplast_cli::config::{parse_config, Case, Overrides};
use mlplast_cli::run::{solve, RunError};

create_exception!(mlplast_py, SolverError, PyRuntimeError);
create_exception!(mlplast_py, ConfigError, PyValueError);

fn to_py(e: mlplast::Error) -> PyErr {
    use mlplast::Error as E;
    match e {
        E::InvalidDomain(_)
        | E::InvalidBasis(_)
        | E::InvalidMaterial(_)
        | E::OutOfRange(_)
        | E::DimensionMismatch { .. }
        | E::BoundaryUnderResolved { .. }
        | E::TooFewNodes { .. }
        | E::BeyondLimitLoad { .. } => ConfigError::new_err(e.to_string()),
        other => SolverError::new_err(other.to_string()),
    }
}

/// Quarter annulus with optional circular holes.
#[pyclass(name = "Domain", module = "mlplast_py", from_py_object)]
#[derive(Clone)]
struct PyDomain {
    inner: mlplast::geometry::Domain,
}

#[pymethods]
impl PyDomain {
    #[new]
    fn new(inner_radius: f64, outer_radius: f64) -> PyResult<Self> {
        let inner = mlplast::geometry::Domain::quarter_annulus(inner_radius, outer_radius).map_err(to_py)?;
        Ok(PyDomain { inner })
    }

    /// Returns a copy with one more hole.
    #[pyo3(signature = (x, y, radius, pressurized = false))]
    fn with_hole(&self, x: f64, y: f64, radius: f64, pressurized: bool) -> PyResult<Self> {
        let mut c = Cutout::new([x, y], radius);
        if pressurized {
            c = c.with_tag(BoundaryTag::InnerPressure);
        }
        let inner = self.inner.clone().with_cutout(c).map_err(to_py)?;
        Ok(PyDomain { inner })
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        self.inner.contains([x, y])
    }

    fn area(&self) -> f64 {
        self.inner.approximate_area()
    }
}

#[pyclass(name = "NodeSet", module = "mlplast_py", from_py_object)]
#[derive(Clone)]
struct PyNodeSet {
    inner: nodegen::NodeSet,
}

#[pymethods]
impl PyNodeSet {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn boundary_count(&self) -> usize {
        self.inner.boundary_count
    }

    /// `[(x, y), ...]` in mm, boundary nodes first.
    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        self.inner.positions.iter().map(|p| (p[0], p[1])).collect()
    }

    /// Boundary tag names, one per boundary node.
    #[getter]
    fn tags(&self) -> Vec<&'static str> {
        self.inner.tags.iter().map(|t| t.as_str()).collect()
    }

    fn separation_distance(&self) -> f64 {
        self.inner.separation_distance()
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.inner.write_csv(path.as_ref()).map_err(to_py)
    }
}

/// Scattered nodes with nominal spacing `h` [mm].
#[pyfunction]
#[pyo3(signature = (domain, h, seed = 1))]
fn generate_nodes(domain: &PyDomain, h: f64, seed: u64) -> PyResult<PyNodeSet> {
    Ok(PyNodeSet { inner: nodegen::fill(&domain.inner, h, seed).map_err(to_py)? })
}

/// Elastic constants and hardening. `hardening` is `"perfect"`, `"linear"`
/// (with `modulus`) or `"table"` (with `knots` as `(eqps, stress)` pairs).
#[pyclass(name = "Material", module = "mlplast_py", from_py_object)]
#[derive(Clone)]
struct PyMaterial {
    inner: MaterialModel,
}

#[pymethods]
impl PyMaterial {
    #[new]
    #[pyo3(signature = (young = 210.0, poisson = 0.3, yield_stress = 0.24, hardening = "perfect", modulus = 0.0, knots = None))]
    fn new(
        young: f64,
        poisson: f64,
        yield_stress: f64,
        hardening: &str,
        modulus: f64,
        knots: Option<Vec<(f64, f64)>>,
    ) -> PyResult<Self> {
        let curve = match hardening {
            "perfect" => HardeningCurve::Perfect { yield_stress },
            "linear" => HardeningCurve::Linear { yield_stress, modulus },
            "table" => HardeningCurve::Piecewise {
                knots: knots.ok_or_else(|| ConfigError::new_err("table hardening needs knots"))?,
            },
            other => return Err(ConfigError::new_err(format!("unknown hardening `{other}`"))),
        };
        let elastic = ElasticConstants::new(young, poisson).map_err(to_py)?;
        Ok(PyMaterial { inner: MaterialModel::new(elastic, curve).map_err(to_py)? })
    }

    fn yield_stress(&self, eqps: f64) -> f64 {
        self.inner.hardening.yield_stress(eqps)
    }
}

/// Converged fields of a run.
#[pyclass(name = "RunResult", module = "mlplast_py")]
struct PyRunResult {
    #[pyo3(get)]
    displacement: Vec<(f64, f64)>,
    /// `(sxx, syy, szz, sxy)` per node [GPa].
    #[pyo3(get)]
    stress: Vec<(f64, f64, f64, f64)>,
    #[pyo3(get)]
    eqps: Vec<f64>,
    #[pyo3(get)]
    iterations: Vec<usize>,
    #[pyo3(get)]
    return_mappings: usize,
}

#[pymethods]
impl PyRunResult {
    fn max_displacement(&self) -> f64 {
        self.displacement.iter().map(|u| u.0.hypot(u.1)).fold(0.0, f64::max)
    }

    fn von_mises(&self) -> Vec<f64> {
        self.stress
            .iter()
            .map(|s| von_mises(&mlplast::elastic::Tensor2PS::new(s.0, s.1, s.2, s.3)))
            .collect()
    }
}

/// Discretized problem with a factorized stiffness matrix. Inner-pressure
/// boundaries carry the load; symmetry edges are mirrored.
#[pyclass(name = "Problem", module = "mlplast_py")]
struct PyProblem {
    inner: driver::Problem,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (domain, nodes, material, stencil_size = 20, phs_order = 3, monomial_degree = 3, boundary_stencil_size = 30))]
    fn new(
        py: Python<'_>,
        domain: &PyDomain,
        nodes: &PyNodeSet,
        material: &PyMaterial,
        stencil_size: usize,
        phs_order: u32,
        monomial_degree: u32,
        boundary_stencil_size: usize,
    ) -> PyResult<Self> {
        let basis = BasisConfig { phs_order, monomial_degree, stencil_size, boundary_stencil_size };
        let (d, n, m) = (domain.inner.clone(), nodes.inner.clone(), material.inner.clone());
        let inner = py.detach(move || driver::Problem::new(&d, n, &basis, m)).map_err(to_py)?;
        Ok(PyProblem { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.nodes.len()
    }

    #[getter]
    fn nodes(&self) -> PyNodeSet {
        PyNodeSet { inner: self.inner.nodes.clone() }
    }

    /// Applies `pressure` [GPa] in `n_load` equal steps.
    #[pyo3(signature = (pressure, n_load = 1, tolerance = 1e-6, max_picard_iterations = 500))]
    fn run(
        &self,
        py: Python<'_>,
        pressure: f64,
        n_load: usize,
        tolerance: f64,
        max_picard_iterations: usize,
    ) -> PyResult<PyRunResult> {
        let load = LoadProgram::new(pressure, n_load).map_err(to_py)?;
        let cfg = SolverConfig { tolerance, max_picard_iterations, ..Default::default() };
        let report = py.detach(|| driver::run(&self.inner, &load, &cfg)).map_err(to_py)?;
        Ok(PyRunResult {
            displacement: report.displacement.iter().map(|u| (u[0], u[1])).collect(),
            stress: report.states.iter().map(|s| (s.stress.xx, s.stress.yy, s.stress.zz, s.stress.xy)).collect(),
            eqps: report.eqps(),
            iterations: report.steps.iter().map(|s| s.iterations).collect(),
            return_mappings: report.return_mappings,
        })
    }

    fn export_matrix(&self, path: &str) -> PyResult<()> {
        self.inner.system().export_matrix(path.as_ref()).map_err(to_py)
    }
}

fn state_dict<'py>(py: Python<'py>, s: verify::RadialState) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("radial", s.radial)?;
    d.set_item("hoop", s.hoop)?;
    d.set_item("axial", s.axial)?;
    d.set_item("displacement", s.displacement)?;
    Ok(d)
}

/// Lamé stresses [GPa] and radial displacement [mm] at radius `r`.
#[pyfunction]
#[pyo3(signature = (r, pressure, a = 100.0, b = 200.0, young = 210.0, poisson = 0.3))]
fn elastic_reference<'py>(
    py: Python<'py>,
    r: f64,
    pressure: f64,
    a: f64,
    b: f64,
    young: f64,
    poisson: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let ec = ElasticConstants::new(young, poisson).map_err(to_py)?;
    state_dict(py, verify::elastic_reference(r, pressure, a, b, &ec).map_err(to_py)?)
}

/// Partly plastic cylinder with the front at `c`.
#[pyfunction]
#[pyo3(signature = (r, c, a = 100.0, b = 200.0, yield_stress = 0.24, young = 210.0, poisson = 0.3))]
#[allow(clippy::too_many_arguments)]
fn plastic_reference<'py>(
    py: Python<'py>,
    r: f64,
    c: f64,
    a: f64,
    b: f64,
    yield_stress: f64,
    young: f64,
    poisson: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let ec = ElasticConstants::new(young, poisson).map_err(to_py)?;
    state_dict(py, verify::plastic_reference(r, c, a, b, yield_stress, &ec).map_err(to_py)?)
}

/// Front radius [mm] for an inner pressure; returns `a` below the onset of yielding.
#[pyfunction]
#[pyo3(signature = (pressure, a = 100.0, b = 200.0, yield_stress = 0.24))]
fn front_from_pressure(pressure: f64, a: f64, b: f64, yield_stress: f64) -> PyResult<f64> {
    Ok(verify::front_from_pressure(pressure, a, b, yield_stress).map_err(to_py)?.radius)
}

#[pyfunction]
#[pyo3(signature = (a = 100.0, b = 200.0, yield_stress = 0.24))]
fn limit_pressure(a: f64, b: f64, yield_stress: f64) -> f64 {
    verify::limit_pressure(a, b, yield_stress)
}

#[pyfunction]
#[pyo3(signature = (a = 100.0, b = 200.0, yield_stress = 0.24))]
fn onset_pressure(a: f64, b: f64, yield_stress: f64) -> f64 {
    verify::onset_pressure(a, b, yield_stress)
}

/// Intersection radius of the hoop-stress fits over plastic and elastic nodes.
#[pyfunction]
#[pyo3(signature = (nodes, result, theta_from = 0.0, theta_to = std::f64::consts::FRAC_PI_2))]
fn extract_front(nodes: &PyNodeSet, result: &PyRunResult, theta_from: f64, theta_to: f64) -> PyResult<f64> {
    let stress: Vec<_> = result
        .stress
        .iter()
        .map(|s| mlplast::elastic::Tensor2PS::new(s.0, s.1, s.2, s.3))
        .collect();
    verify::extract_front(&nodes.inner.positions, &stress, &result.eqps, theta_from, theta_to)
        .map(|f| f.radius)
        .map_err(to_py)
}

/// Runs a benchmark preset and returns its summary as a dict. Nothing is
/// written to disk.
#[pyfunction]
#[pyo3(signature = (case, h = None, seed = None, n_load = None, pressure = None))]
fn run_preset<'py>(
    py: Python<'py>,
    case: &str,
    h: Option<f64>,
    seed: Option<u64>,
    n_load: Option<usize>,
    pressure: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let case: Case = case.parse().map_err(ConfigError::new_err)?;
    let overrides = Overrides { case: Some(case), spacing: h, seed, load_steps: n_load, pressure, ..Default::default() };
    let cfg = parse_config(None, &overrides).map_err(|e| ConfigError::new_err(e.to_string()))?;
    let outcome = py.detach(|| solve(&cfg)).map_err(|e| match e {
        RunError::Config(c) => ConfigError::new_err(c.to_string()),
        other => SolverError::new_err(other.to_string()),
    })?;
    let d = PyDict::new(py);
    for line in outcome.summary.to_text().lines() {
        if let Some((k, v)) = line.split_once('=') {
            match v.parse::<f64>() {
                Ok(x) => d.set_item(k, x)?,
                Err(_) => d.set_item(k, v)?,
            }
        }
    }
    Ok(d)
}

#[pymodule]
fn mlplast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyNodeSet>()?;
    m.add_class::<PyMaterial>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(generate_nodes, m)?)?;
    m.add_function(wrap_pyfunction!(elastic_reference, m)?)?;
    m.add_function(wrap_pyfunction!(plastic_reference, m)?)?;
    m.add_function(wrap_pyfunction!(front_from_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(limit_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(onset_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(extract_front, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    Ok(())
}
