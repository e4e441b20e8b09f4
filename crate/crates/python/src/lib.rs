//! Python bindings for the space-form model, curvature functions, radial
//! surfaces and the pinching experiment.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use starpinch::pinch::{identity_suite as run_identity_suite, run_pinch as run_pinch_rs, PinchSettings};
use starpinch::surface::{BasisFunction, PerturbationTerm, SignConvention};
use starpinch::symfun::{self, CurvatureProfile};
use starpinch::{spaceform, surface, AmbientPoint, Error, ErrorKind};

fn to_py_err(e: Error) -> PyErr {
    match e.kind() {
        ErrorKind::Numerical => PyRuntimeError::new_err(e.to_string()),
        ErrorKind::Hypothesis | ErrorKind::Input => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        serde_json::Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(f)) => f.into_pyobject(py)?.into_any(),
            _ => py.None().into_bound(py),
        },
        serde_json::Value::String(s) => s.into_pyobject(py)?.into_any(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Conformal ball model of the space form of curvature `delta`.
#[pyclass(name = "SpaceFormModel", frozen)]
#[derive(Clone)]
struct PySpaceFormModel {
    inner: spaceform::SpaceFormModel,
}

#[pymethods]
impl PySpaceFormModel {
    #[new]
    fn new(delta: f64, ambient_dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: spaceform::SpaceFormModel::new(delta, ambient_dim).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    fn conformal_factor(&self, x: Vec<f64>) -> f64 {
        self.inner.conformal_factor(&x)
    }

    /// Euclidean chart radius of the geodesic sphere of radius `r` about the origin.
    fn chart_radius(&self, r: f64) -> f64 {
        self.inner.chart_radius(r)
    }

    fn radius_from_chart(&self, s: f64) -> f64 {
        self.inner.radius_from_chart(s)
    }

    fn max_geodesic_radius(&self) -> f64 {
        self.inner.max_geodesic_radius()
    }

    fn translate(&self, center: Vec<f64>, y: Vec<f64>) -> Vec<f64> {
        self.inner.translate(&center, &y)
    }

    fn distance(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        spaceform::geodesic_distance(&AmbientPoint::new(x), &AmbientPoint::new(y), &self.inner).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("SpaceFormModel(delta={}, ambient_dim={})", self.inner.delta(), self.inner.ambient_dim())
    }
}

#[pyfunction]
fn c_delta(t: f64, delta: f64) -> f64 {
    spaceform::c_delta(t, delta)
}

#[pyfunction]
fn s_delta(t: f64, delta: f64) -> f64 {
    spaceform::s_delta(t, delta)
}

#[pyfunction]
fn geodesic_distance(x: Vec<f64>, y: Vec<f64>, model: &PySpaceFormModel) -> PyResult<f64> {
    model.distance(x, y)
}

fn profile(kappa: Vec<f64>) -> PyResult<CurvatureProfile> {
    CurvatureProfile::from_values(kappa).map_err(to_py_err)
}

/// Normalized mean curvatures `[H_0, ..., H_n]`.
#[pyfunction]
fn mean_curvatures(kappa: Vec<f64>) -> PyResult<Vec<f64>> {
    let p = profile(kappa)?;
    Ok((0..=p.n()).map(|k| p.h(k)).collect())
}

/// `|S - H Id|^2`.
#[pyfunction]
fn umbilicity_squared(kappa: Vec<f64>) -> PyResult<f64> {
    Ok(profile(kappa)?.tau_sq)
}

#[pyfunction]
fn newton_gap(kappa: Vec<f64>, k: usize) -> PyResult<f64> {
    symfun::newton_gap(&profile(kappa)?, k).map_err(to_py_err)
}

#[pyfunction]
fn maclaurin_gaps(kappa: Vec<f64>, r: usize) -> PyResult<Vec<f64>> {
    symfun::maclaurin_gaps(&profile(kappa)?, r).map_err(to_py_err)
}

fn parse_term(d: &Bound<'_, PyDict>) -> PyResult<PerturbationTerm> {
    let get = |k: &str| -> PyResult<Bound<'_, PyAny>> {
        d.get_item(k)?
            .ok_or_else(|| PyValueError::new_err(format!("perturbation term needs '{k}'")))
    };
    let amplitude: f64 = get("amplitude")?.extract()?;
    let basis: String = get("basis")?.extract()?;
    let basis = match basis.as_str() {
        "harmonic" => BasisFunction::Harmonic {
            l: get("l")?.extract()?,
            m: get("m")?.extract()?,
        },
        "monomial" => BasisFunction::Monomial {
            powers: get("powers")?.extract()?,
        },
        other => return Err(PyValueError::new_err(format!("unknown basis '{other}'"))),
    };
    Ok(PerturbationTerm { basis, amplitude })
}

/// Radial graph `rho(u) = rho0 (1 + sum a_i Y_i(u))` over the base point.
///
/// Terms are dicts such as `{"basis": "harmonic", "l": 3, "m": 0, "amplitude": 0.05}`
/// or `{"basis": "monomial", "powers": [1, 1, 0, 0], "amplitude": 0.1}`.
#[pyclass(name = "RadialSurface", frozen)]
#[derive(Clone)]
struct PyRadialSurface {
    inner: surface::RadialSurface,
}

#[pymethods]
impl PyRadialSurface {
    #[new]
    #[pyo3(signature = (n, model, rho0, terms = None, flip_sign = false))]
    fn new(
        n: usize,
        model: &PySpaceFormModel,
        rho0: f64,
        terms: Option<Vec<Bound<'_, PyDict>>>,
        flip_sign: bool,
    ) -> PyResult<Self> {
        let terms = terms
            .unwrap_or_default()
            .iter()
            .map(parse_term)
            .collect::<PyResult<Vec<_>>>()?;
        let mut inner = surface::RadialSurface::new(n, model.inner, rho0, terms).map_err(to_py_err)?;
        if flip_sign {
            inner = inner.with_sign_convention(SignConvention::Flipped);
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn geodesic_sphere(n: usize, model: &PySpaceFormModel, rho: f64) -> PyResult<Self> {
        Ok(Self {
            inner: surface::RadialSurface::geodesic_sphere(n, model.inner, rho).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn rho0(&self) -> f64 {
        self.inner.rho0()
    }

    /// Geodesic radius in the unit direction `u`.
    fn radius(&self, u: Vec<f64>) -> f64 {
        self.inner.radius_at(&u)
    }

    /// The surface with every amplitude multiplied by `factor`.
    fn scaled(&self, factor: f64) -> Self {
        Self {
            inner: self.inner.scaled(factor),
        }
    }

    /// Curvature data at the point over the unit direction `u`.
    fn evaluate_point<'py>(&self, py: Python<'py>, u: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let p = self.inner.evaluate_point(&u).map_err(to_py_err)?;
        let d = PyDict::new(py);
        d.set_item("x", p.x.coords.clone())?;
        d.set_item("normal", p.nu.clone())?;
        d.set_item("kappa", p.kappa().to_vec())?;
        d.set_item("mean_curvatures", (0..=p.profile.n()).map(|k| p.h(k)).collect::<Vec<_>>())?;
        d.set_item("tau_sq", p.profile.tau_sq)?;
        d.set_item("support", p.support)?;
        d.set_item("r", p.r)?;
        d.set_item("area_element", p.area_element)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "RadialSurface(n={}, delta={}, rho0={}, terms={})",
            self.inner.n(),
            self.inner.model().delta(),
            self.inner.rho0(),
            self.inner.terms().len()
        )
    }
}

fn settings(quad_order: usize, quad_order_check: Option<usize>, seed: u64, calibration_samples: usize) -> PinchSettings {
    PinchSettings {
        quad_order,
        quad_order_check: quad_order_check.unwrap_or(2 * quad_order),
        seed,
        calibration_samples,
        ..PinchSettings::default()
    }
}

/// Pinching experiment; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (surface, r, quad_order = 32, quad_order_check = None, seed = 0, calibration_samples = 100_000))]
fn run_pinch<'py>(
    py: Python<'py>,
    surface: &PyRadialSurface,
    r: usize,
    quad_order: usize,
    quad_order_check: Option<usize>,
    seed: u64,
    calibration_samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let s = settings(quad_order, quad_order_check, seed, calibration_samples);
    let rep = py
        .detach(|| run_pinch_rs(&surface.inner, r, &s))
        .map_err(to_py_err)?;
    to_py(py, &rep)
}

/// Identity and inequality residuals; returns a list of dicts.
#[pyfunction]
#[pyo3(signature = (surface, r, quad_order = 32, quad_order_check = None, seed = 0, calibration_samples = 100_000))]
fn identity_suite<'py>(
    py: Python<'py>,
    surface: &PyRadialSurface,
    r: usize,
    quad_order: usize,
    quad_order_check: Option<usize>,
    seed: u64,
    calibration_samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let s = settings(quad_order, quad_order_check, seed, calibration_samples);
    let suite = py
        .detach(|| run_identity_suite(&surface.inner, r, &s))
        .map_err(to_py_err)?;
    to_py(py, &suite.checks)
}

#[pymodule]
#[pyo3(name = "starpinch")]
fn starpinch_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpaceFormModel>()?;
    m.add_class::<PyRadialSurface>()?;
    m.add_function(wrap_pyfunction!(c_delta, m)?)?;
    m.add_function(wrap_pyfunction!(s_delta, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mean_curvatures, m)?)?;
    m.add_function(wrap_pyfunction!(umbilicity_squared, m)?)?;
    m.add_function(wrap_pyfunction!(newton_gap, m)?)?;
    m.add_function(wrap_pyfunction!(maclaurin_gaps, m)?)?;
    m.add_function(wrap_pyfunction!(run_pinch, m)?)?;
    m.add_function(wrap_pyfunction!(identity_suite, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
