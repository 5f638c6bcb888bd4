use std::str::FromStr;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

use nfhcb::container::StoredCodebook;
use nfhcb::sim::{run_gain_experiment, run_search_experiment, SimConfig};
use nfhcb::{Error, GainModel, PatternKind};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn point(theta: f64, r: Option<f64>) -> PyResult<nfhcb::PolarPoint> {
    match r {
        Some(r) => nfhcb::PolarPoint::from_range(theta, r),
        None => nfhcb::PolarPoint::far_field(theta),
    }
    .map_err(py_err)
}

#[pyclass(name = "ArrayConfig", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyArrayConfig(nfhcb::ArrayConfig);

#[pymethods]
impl PyArrayConfig {
    #[new]
    #[pyo3(signature = (n_elements, carrier_hz, spacing=None))]
    fn new(n_elements: usize, carrier_hz: f64, spacing: Option<f64>) -> PyResult<Self> {
        match spacing {
            Some(d) => nfhcb::ArrayConfig::with_spacing(n_elements, carrier_hz, d),
            None => nfhcb::ArrayConfig::new(n_elements, carrier_hz),
        }
        .map(Self)
        .map_err(py_err)
    }

    /// 256 elements at 40 GHz, half-wavelength spacing.
    #[staticmethod]
    fn reference() -> Self {
        Self(nfhcb::ArrayConfig::reference())
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.0.n_elements()
    }

    #[getter]
    fn carrier_hz(&self) -> f64 {
        self.0.carrier_hz()
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.0.wavelength()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    #[getter]
    fn fresnel_distance(&self) -> f64 {
        self.0.fresnel_distance()
    }

    #[getter]
    fn max_curvature(&self) -> f64 {
        self.0.max_curvature()
    }

    fn __repr__(&self) -> String {
        format!(
            "ArrayConfig(n_elements={}, carrier_hz={})",
            self.0.n_elements(),
            self.0.carrier_hz()
        )
    }
}

#[pyclass(name = "BeamVector", frozen, from_py_object)]
#[derive(Clone)]
struct PyBeamVector(nfhcb::BeamVector);

#[pymethods]
impl PyBeamVector {
    /// Per-element weights as Python complex numbers.
    #[getter]
    fn weights(&self) -> Vec<Complex64> {
        self.0.weights().to_vec()
    }

    #[getter]
    fn active(&self) -> Vec<bool> {
        self.0.active_mask().to_vec()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Gain toward `(theta, r)`; `r=None` is the far field.
    #[pyo3(signature = (cfg, theta, r=None, exact=false))]
    fn gain(&self, cfg: &PyArrayConfig, theta: f64, r: Option<f64>, exact: bool) -> PyResult<f64> {
        let model = if exact { GainModel::Exact } else { GainModel::Quadratic };
        nfhcb::beam_gain(&cfg.0, &self.0, &point(theta, r)?, model).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "SearchResult", frozen, get_all)]
struct PySearchResult {
    /// `(ring, angle)` of the chosen bottom-level codeword, 0-based.
    selected: (usize, usize),
    steps: usize,
    upper_steps: usize,
    achieved_gain: f64,
    trace: Vec<(usize, usize)>,
}

impl From<nfhcb::SearchResult> for PySearchResult {
    fn from(r: nfhcb::SearchResult) -> Self {
        Self {
            selected: (r.selected.ring, r.selected.angle),
            steps: r.steps,
            upper_steps: r.upper_steps,
            achieved_gain: r.achieved_gain,
            trace: r.trace.iter().map(|c| (c.ring, c.angle)).collect(),
        }
    }
}

#[pymethods]
impl PySearchResult {
    fn __repr__(&self) -> String {
        format!(
            "SearchResult(selected={:?}, steps={}, achieved_gain={:.6})",
            self.selected, self.steps, self.achieved_gain
        )
    }
}

#[pyclass(name = "LowerCodebook", frozen)]
struct PyLowerCodebook(nfhcb::LowerCodebook);

impl PyLowerCodebook {
    fn check(&self, ring: usize, angle: usize) -> PyResult<()> {
        if ring >= self.0.n_rings() || angle >= self.0.n_angles() {
            return Err(PyIndexError::new_err(format!(
                "codeword ({ring}, {angle}) outside {} rings x {} angles",
                self.0.n_rings(),
                self.0.n_angles()
            )));
        }
        Ok(())
    }
}

#[pymethods]
impl PyLowerCodebook {
    /// Smallest grid whose worst coverage corner keeps gain `rho`.
    #[staticmethod]
    fn build(cfg: &PyArrayConfig, rho: f64) -> PyResult<Self> {
        nfhcb::build_lower_codebook(&cfg.0, rho).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn with_grid(cfg: &PyArrayConfig, rho: f64, n_angles: usize, n_rings: usize) -> PyResult<Self> {
        nfhcb::LowerCodebook::with_grid(&cfg.0, rho, n_angles, n_rings)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn n_angles(&self) -> usize {
        self.0.n_angles()
    }

    #[getter]
    fn n_rings(&self) -> usize {
        self.0.n_rings()
    }

    #[getter]
    fn config(&self) -> PyArrayConfig {
        PyArrayConfig(*self.0.cfg())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn codeword(&self, ring: usize, angle: usize) -> PyResult<PyBeamVector> {
        self.check(ring, angle)?;
        Ok(PyBeamVector(self.0.codeword(ring, angle).clone()))
    }

    /// `(theta, r)` of a codeword's focus; `r` is None on the far-field ring.
    fn steering_point(&self, ring: usize, angle: usize) -> PyResult<(f64, Option<f64>)> {
        self.check(ring, angle)?;
        let p = self.0.steering_point(ring, angle);
        Ok((p.theta(), p.range()))
    }

    fn worst_corner_gain(&self) -> f64 {
        self.0.worst_corner_gain(nfhcb::CornerModel::Fresnel)
    }

    fn search(&self, channel: Vec<Complex64>) -> PyResult<PySearchResult> {
        nfhcb::exhaustive_search(&self.0, &channel)
            .map(Into::into)
            .map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        StoredCodebook::Lower(self.0.clone()).save(path).map_err(py_err)
    }

    fn to_csv(&self) -> String {
        StoredCodebook::Lower(self.0.clone()).to_csv()
    }

    fn content_hash(&self) -> String {
        StoredCodebook::Lower(self.0.clone()).content_hash()
    }
}

#[pyclass(name = "HierarchicalCodebook", frozen)]
struct PyHierarchicalCodebook(nfhcb::HierarchicalCodebook);

#[pymethods]
impl PyHierarchicalCodebook {
    /// `pattern` is one of "deact", "bmwss", "quadric".
    #[staticmethod]
    #[pyo3(signature = (lower, n_levels, pattern="deact"))]
    fn build(lower: &PyLowerCodebook, n_levels: usize, pattern: &str) -> PyResult<Self> {
        let kind = PatternKind::from_str(pattern).map_err(py_err)?;
        let hcfg = nfhcb::HierarchyConfig::new(n_levels, kind);
        nfhcb::build_hierarchy(lower.0.cfg(), &hcfg, lower.0.clone())
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn n_levels(&self) -> usize {
        self.0.n_levels()
    }

    #[getter]
    fn pattern(&self) -> &'static str {
        self.0.config().pattern.as_str()
    }

    fn ring_counts(&self) -> Vec<usize> {
        self.0.ring_counts()
    }

    fn children(&self, level: usize, index: usize) -> PyResult<Vec<usize>> {
        let upper = self.0.n_levels() - 1;
        if level >= upper || index >= self.0.level(level).len() {
            return Err(PyIndexError::new_err(format!(
                "no codeword {index} on upper level {level}"
            )));
        }
        Ok(self.0.children(level, index).to_vec())
    }

    fn lower(&self) -> PyLowerCodebook {
        PyLowerCodebook(self.0.lower().clone())
    }

    fn search(&self, channel: Vec<Complex64>) -> PyResult<PySearchResult> {
        nfhcb::hierarchical_search(&self.0, &channel)
            .map(Into::into)
            .map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        StoredCodebook::Hierarchy(self.0.clone()).save(path).map_err(py_err)
    }

    fn content_hash(&self) -> String {
        StoredCodebook::Hierarchy(self.0.clone()).content_hash()
    }
}

/// Read a file written by `save`; returns the matching codebook class.
#[pyfunction]
fn load_codebook(py: Python<'_>, path: &str) -> PyResult<Py<PyAny>> {
    Ok(match StoredCodebook::load(path).map_err(py_err)? {
        StoredCodebook::Lower(cb) => Py::new(py, PyLowerCodebook(cb))?.into_any(),
        StoredCodebook::Hierarchy(h) => Py::new(py, PyHierarchicalCodebook(h))?.into_any(),
    })
}

/// Complex Fresnel integral `C(x) + iS(x)`.
#[pyfunction]
fn fresnel(x: f64) -> Complex64 {
    nfhcb::fresnel(x)
}

#[pyfunction]
#[pyo3(signature = (cfg, theta, r=None))]
fn steering_vector(cfg: &PyArrayConfig, theta: f64, r: Option<f64>) -> PyResult<PyBeamVector> {
    nfhcb::steering_vector(&cfg.0, &point(theta, r)?, GainModel::Quadratic)
        .map(PyBeamVector)
        .map_err(py_err)
}

/// Line-of-sight channel from a user at `(theta, r)`, exact spherical model.
#[pyfunction]
fn los_channel(cfg: &PyArrayConfig, theta: f64, r: f64) -> PyResult<Vec<Complex64>> {
    let p = point(theta, Some(r))?;
    nfhcb::synthesize_channel(&cfg.0, &nfhcb::ChannelRealization::line_of_sight(p)).map_err(py_err)
}

#[pyfunction]
fn rotate(cfg: &PyArrayConfig, w: &PyBeamVector, delta_theta: f64) -> PyResult<PyBeamVector> {
    nfhcb::rotate(&cfg.0, &w.0, delta_theta)
        .map(PyBeamVector)
        .map_err(py_err)
}

#[pyfunction]
fn relocate(cfg: &PyArrayConfig, w: &PyBeamVector, delta_r: f64) -> PyResult<PyBeamVector> {
    nfhcb::relocate(&cfg.0, &w.0, delta_r).map(PyBeamVector).map_err(py_err)
}

/// Run an experiment from a JSON config; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (config_json, kind="gain", threads=None))]
fn run_experiment(py: Python<'_>, config_json: &str, kind: &str, threads: Option<usize>) -> PyResult<String> {
    let mut sim = SimConfig::from_json(config_json).map_err(py_err)?;
    sim.threads = threads;
    let run = match kind {
        "gain" => run_gain_experiment,
        "search" => run_search_experiment,
        other => return Err(PyValueError::new_err(format!("unknown experiment '{other}'"))),
    };
    let report = py.detach(|| run(&sim)).map_err(py_err)?;
    Ok(report.to_json())
}

#[pymodule]
fn nearfield_hcb(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyArrayConfig>()?;
    m.add_class::<PyBeamVector>()?;
    m.add_class::<PyLowerCodebook>()?;
    m.add_class::<PyHierarchicalCodebook>()?;
    m.add_class::<PySearchResult>()?;
    m.add_function(wrap_pyfunction!(fresnel, m)?)?;
    m.add_function(wrap_pyfunction!(steering_vector, m)?)?;
    m.add_function(wrap_pyfunction!(los_channel, m)?)?;
    m.add_function(wrap_pyfunction!(rotate, m)?)?;
    m.add_function(wrap_pyfunction!(relocate, m)?)?;
    m.add_function(wrap_pyfunction!(load_codebook, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
