//! Python bindings: domains, weights, function spaces, rule construction and
//! the Gauss–Legendre reference rules.

use poscub::cli::gauss_legendre::{gauss_legendre as gl_1d, gauss_legendre_reference};
use poscub::cubature::Cubature;
use poscub::function_space::{FunctionSpace, SpaceKind};
use poscub::geometry::{Domain, DomainSpec, WeightFunction};
use poscub::moments::{compute_moments, MomentMode, MomentProvenance, MomentVector, DEFAULT_QMC_SAMPLES};
use poscub::pipeline::{construct as construct_rule, ConstructionConfig};
use poscub::sequences::SequenceKind;
use poscub::CubatureError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: CubatureError) -> PyErr {
    match e {
        CubatureError::InvalidArgument(_)
        | CubatureError::DimensionMismatch { .. }
        | CubatureError::Schema(_)
        | CubatureError::Unsupported(_)
        | CubatureError::MomentsUnsupported
        | CubatureError::HaltonDimension(..)
        | CubatureError::NegativeWeight { .. } => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = CubatureError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

#[pyclass(name = "Domain", module = "pyposcub", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDomain(Domain);

#[pymethods]
impl PyDomain {
    /// Axis-aligned cube `||x - center||_inf <= radius`.
    #[staticmethod]
    fn cube(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        Domain::cube(&center, radius).map(Self).map_err(to_py)
    }

    /// Euclidean ball `||x - center||_2 <= radius`.
    #[staticmethod]
    fn ball(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        Domain::ball(&center, radius).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (parts, disjoint = false))]
    fn union(parts: Vec<PyRef<'_, PyDomain>>, disjoint: bool) -> PyResult<Self> {
        Domain::union(parts.iter().map(|p| p.0.clone()).collect(), disjoint)
            .map(Self)
            .map_err(to_py)
    }

    /// Builds a domain from its JSON description.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        DomainSpec::from_json(text).and_then(|s| s.build()).map(Self).map_err(to_py)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    fn contains(&self, x: Vec<f64>) -> PyResult<bool> {
        if x.len() != self.0.dimension() {
            return Err(PyValueError::new_err("point has the wrong dimension"));
        }
        Ok(self.0.contains(&x))
    }

    fn __repr__(&self) -> String {
        format!("Domain({:?})", self.0.shape())
    }
}

#[pyclass(name = "Weight", module = "pyposcub", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyWeight(WeightFunction);

#[pymethods]
impl PyWeight {
    #[staticmethod]
    fn one() -> Self {
        Self(WeightFunction::One)
    }

    /// `||x||_2^p`.
    #[staticmethod]
    fn radial_power(p: f64) -> Self {
        Self(WeightFunction::RadialPower(p))
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.evaluate(&x).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Weight({:?})", self.0)
    }
}

#[pyclass(name = "FunctionSpace", module = "pyposcub", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFunctionSpace(FunctionSpace);

#[pymethods]
impl PyFunctionSpace {
    #[new]
    #[pyo3(signature = (kind, dimension, degree))]
    fn new(kind: &str, dimension: usize, degree: u32) -> PyResult<Self> {
        FunctionSpace::from_descriptor(parse::<SpaceKind>(kind)?, dimension, degree)
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn algebraic(dimension: usize, degree: u32) -> PyResult<Self> {
        FunctionSpace::algebraic(dimension, degree).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn trigonometric(dimension: usize, degree: u32) -> PyResult<Self> {
        FunctionSpace::trigonometric(dimension, degree).map(Self).map_err(to_py)
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    /// Values of all basis functions at `x`.
    fn evaluate(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != self.0.dimension() {
            return Err(PyValueError::new_err("point has the wrong dimension"));
        }
        Ok(self.0.evaluate(&x))
    }

    fn __len__(&self) -> usize {
        self.0.size()
    }

    fn __repr__(&self) -> String {
        let d = self.0.descriptor();
        format!("FunctionSpace({}, dimension={}, degree={:?}, K={})", d.kind, d.dimension, d.degree, d.size)
    }
}

#[pyclass(name = "Cubature", module = "pyposcub", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCubature(Cubature);

#[pymethods]
impl PyCubature {
    #[new]
    fn new(nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> PyResult<Self> {
        Cubature::new(nodes, weights, Default::default())
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn nodes(&self) -> Vec<Vec<f64>> {
        self.0.nodes().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    /// Exactness residual recorded at construction, if any.
    #[getter]
    fn residual(&self) -> Option<f64> {
        self.0.metadata().residual
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn weight_sum(&self) -> f64 {
        self.0.weight_sum()
    }

    /// `Σ w_n f(x_n)` for a Python callable taking a list of coordinates.
    fn evaluate(&self, f: &Bound<'_, PyAny>) -> PyResult<f64> {
        let mut sum = 0.0;
        for (x, w) in self.0.nodes().iter().zip(self.0.weights()) {
            let v: f64 = f.call1((x.clone(),))?.extract()?;
            if !v.is_finite() {
                return Err(PyValueError::new_err(format!("f({x:?}) = {v} is not finite")));
            }
            sum += w * v;
        }
        Ok(sum)
    }

    /// `max_k |C_N[φ_k] - m_k|`.
    fn exactness_residual(&self, space: &PyFunctionSpace, moments: Vec<f64>) -> PyResult<f64> {
        let m = MomentVector::new(moments, MomentProvenance::Analytic).map_err(to_py)?;
        self.0.exactness_residual(&space.0, &m).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Cubature::from_json(text)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// CSV text with one `x_1,...,x_d,w` row per node.
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.0.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Cubature(N={}, dimension={})", self.0.len(), self.0.dimension())
    }
}

#[pyclass(name = "Construction", module = "pyposcub", frozen)]
pub struct PyConstruction {
    #[pyo3(get)]
    cubature: Py<PyCubature>,
    #[pyo3(get)]
    moments: Vec<f64>,
    /// QMC error estimate of the moments, `None` for analytic moments.
    #[pyo3(get)]
    moment_error: Option<f64>,
    #[pyo3(get)]
    report: String,
    /// Node counts tried by the least-squares stage.
    #[pyo3(get)]
    ls_history: Vec<usize>,
}

fn weight_or_one(weight: Option<PyRef<'_, PyWeight>>) -> WeightFunction {
    weight.map(|w| w.0.clone()).unwrap_or(WeightFunction::One)
}

/// Moments of `space` on `domain` (`mode` is auto, analytic or qmc).
#[pyfunction]
#[pyo3(signature = (space, domain, weight = None, mode = "auto", qmc_samples = DEFAULT_QMC_SAMPLES))]
fn moments(
    space: &PyFunctionSpace,
    domain: &PyDomain,
    weight: Option<PyRef<'_, PyWeight>>,
    mode: &str,
    qmc_samples: usize,
) -> PyResult<Vec<f64>> {
    let m = compute_moments(&space.0, &domain.0, &weight_or_one(weight), parse::<MomentMode>(mode)?, qmc_samples)
        .map_err(to_py)?;
    Ok(m.values().to_vec())
}

/// Positive rule with at most `K` nodes inside `domain`, exact on `space`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (domain, space, weight = None, sequence = None, moments = "auto", qmc_samples = DEFAULT_QMC_SAMPLES, n_cap = None))]
fn construct(
    py: Python<'_>,
    domain: &PyDomain,
    space: &PyFunctionSpace,
    weight: Option<PyRef<'_, PyWeight>>,
    sequence: Option<&str>,
    moments: &str,
    qmc_samples: usize,
    n_cap: Option<usize>,
) -> PyResult<PyConstruction> {
    let mut config = ConstructionConfig {
        sequence: sequence.map(parse::<SequenceKind>).transpose()?,
        moments: parse(moments)?,
        qmc_samples,
        ..Default::default()
    };
    config.ls.n_cap = n_cap;
    let weight = weight_or_one(weight);
    let (d, s) = (domain.0.clone(), space.0.clone());
    let built = py.detach(move || construct_rule(&d, &weight, &s, &config)).map_err(to_py)?;
    let moment_error = match built.moments.provenance() {
        MomentProvenance::Analytic => None,
        MomentProvenance::Qmc { error_estimate, .. } => Some(error_estimate),
    };
    Ok(PyConstruction {
        moments: built.moments.values().to_vec(),
        moment_error,
        report: built.trace.report(),
        ls_history: built.trace.ls_history.iter().map(|a| a.nodes).collect(),
        cubature: Py::new(py, PyCubature(built.cubature))?,
    })
}

/// `n`-point Gauss–Legendre nodes and weights on `[-1, 1]`.
#[pyfunction]
fn gauss_legendre(n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    gl_1d(n).map_err(to_py)
}

/// Product Gauss–Legendre rule on a cube or a 2-/3-dimensional ball.
#[pyfunction]
#[pyo3(signature = (domain, n, weight = None))]
fn gauss_legendre_rule(domain: &PyDomain, n: usize, weight: Option<PyRef<'_, PyWeight>>) -> PyResult<PyCubature> {
    gauss_legendre_reference(&domain.0, &weight_or_one(weight), n)
        .map(PyCubature)
        .map_err(to_py)
}

#[pymodule]
fn pyposcub(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyWeight>()?;
    m.add_class::<PyFunctionSpace>()?;
    m.add_class::<PyCubature>()?;
    m.add_class::<PyConstruction>()?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(construct, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_legendre, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_legendre_rule, m)?)?;
    Ok(())
}
