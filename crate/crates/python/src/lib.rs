//! Python bindings: tensors, the channel model, the estimator, bounds, and
//! scenario sweeps.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use chanest::channel::{self, ArrayConfig, BeamformingMatrices, PathParams, WaveformConfig};
use chanest::crb::{crb_bounds, ParamVector};
use chanest::estimator::{self, EstimatorConfig, PathEstimate};
use chanest::harness::{self, Parameter, Scenario};
use chanest::tensor::{self, Mode};
use chanest::{CMatrix, Complex64};

fn to_py(e: chanest::Error) -> PyErr {
    match e {
        chanest::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Dense third-order complex tensor, stored column-major (first index fastest).
#[pyclass(name = "Tensor3", from_py_object)]
#[derive(Clone)]
struct PyTensor3(tensor::Tensor3);

#[pymethods]
impl PyTensor3 {
    #[new]
    fn new(dims: [usize; 3], data: Vec<Complex64>) -> PyResult<Self> {
        tensor::Tensor3::from_vec(dims, data).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn zeros(dims: [usize; 3]) -> Self {
        Self(tensor::Tensor3::zeros(dims))
    }

    #[getter]
    fn dims(&self) -> [usize; 3] {
        self.0.dims()
    }

    fn get(&self, i: usize, j: usize, k: usize) -> PyResult<Complex64> {
        let d = self.0.dims();
        if i >= d[0] || j >= d[1] || k >= d[2] {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.get(i, j, k))
    }

    /// Entries in storage order.
    fn data(&self) -> Vec<Complex64> {
        self.0.as_slice().to_vec()
    }

    fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// Mode-`mode` unfolding (1, 2, or 3) as a list of rows.
    fn unfold(&self, mode: usize) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(rows(&self.0.unfold(mode_from(mode)?)))
    }

    fn __sub__(&self, other: &PyTensor3) -> PyResult<Self> {
        self.0.sub(&other.0).map(Self).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Tensor3(dims={:?})", self.0.dims())
    }
}

fn mode_from(mode: usize) -> PyResult<Mode> {
    match mode {
        1 => Ok(Mode::One),
        2 => Ok(Mode::Two),
        3 => Ok(Mode::Three),
        _ => Err(PyValueError::new_err(format!("mode must be 1, 2, or 3, got {mode}"))),
    }
}

/// Result of [`msvd`]: core, factors (lists of rows), and mode singular values.
#[pyclass(name = "Msvd")]
struct PyMsvd(tensor::MsvdResult);

#[pymethods]
impl PyMsvd {
    #[getter]
    fn core(&self) -> PyTensor3 {
        PyTensor3(self.0.core().clone())
    }

    fn factor(&self, mode: usize) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(rows(self.0.factor(mode_from(mode)?)))
    }

    #[getter]
    fn singular_values(&self) -> Vec<Vec<f64>> {
        self.0.mode_singular_values.to_vec()
    }

    fn reconstruct(&self) -> PyResult<PyTensor3> {
        self.0.tucker.reconstruct().map(PyTensor3).map_err(to_py)
    }

    /// Ranks chosen by the singular-value threshold.
    #[pyo3(signature = (multiplier = estimator::DEFAULT_MULTIPLIER))]
    fn estimate_ranks(&self, multiplier: f64) -> PyResult<[usize; 3]> {
        estimator::estimate_ranks(&self.0, multiplier).map_err(to_py)
    }
}

#[pyfunction]
fn msvd(t: &PyTensor3) -> PyResult<PyMsvd> {
    tensor::msvd(&t.0).map(PyMsvd).map_err(to_py)
}

#[pyclass(name = "WaveformConfig", from_py_object)]
#[derive(Clone)]
struct PyWaveform(WaveformConfig);

#[pymethods]
impl PyWaveform {
    #[new]
    fn new(carrier_hz: f64, n_subcarriers: usize, bandwidth_hz: f64, n_training: usize) -> PyResult<Self> {
        WaveformConfig::new(carrier_hz, n_subcarriers, bandwidth_hz, n_training)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn carrier_hz(&self) -> f64 {
        self.0.carrier_hz
    }
    #[getter]
    fn n_subcarriers(&self) -> usize {
        self.0.n_subcarriers
    }
    #[getter]
    fn n_training(&self) -> usize {
        self.0.n_training
    }
    #[getter]
    fn symbol_duration_s(&self) -> f64 {
        self.0.symbol_duration_s
    }

    /// Distance period of the subcarrier phase signature, meters.
    fn unambiguous_range(&self) -> f64 {
        channel::unambiguous_range(&self.0)
    }
}

#[pyclass(name = "ArrayConfig", from_py_object)]
#[derive(Clone)]
struct PyArrays(ArrayConfig);

#[pymethods]
impl PyArrays {
    #[new]
    fn new(n_tx: usize, n_rx: usize, l_tx: usize, l_rx: usize) -> PyResult<Self> {
        ArrayConfig::new(n_tx, n_rx, l_tx, l_rx).map(Self).map_err(to_py)
    }

    #[getter]
    fn n_tx(&self) -> usize {
        self.0.n_tx
    }
    #[getter]
    fn n_rx(&self) -> usize {
        self.0.n_rx
    }
    #[getter]
    fn l_tx(&self) -> usize {
        self.0.l_tx
    }
    #[getter]
    fn l_rx(&self) -> usize {
        self.0.l_rx
    }
}

/// Precoder and combiner with entries drawn from {1, -1, i, -i}.
#[pyclass(name = "Beamformers", from_py_object)]
#[derive(Clone)]
struct PyBeamformers(BeamformingMatrices);

#[pymethods]
impl PyBeamformers {
    #[staticmethod]
    fn random(arrays: &PyArrays, seed: u64) -> Self {
        Self(channel::random_beamformers(&arrays.0, seed))
    }
}

#[pyclass(name = "Path", from_py_object)]
#[derive(Clone)]
struct PyPath(PathParams);

#[pymethods]
impl PyPath {
    #[new]
    fn new(theta_rx: f64, theta_tx: f64, distance: f64, gain: Complex64) -> PyResult<Self> {
        PathParams::new(theta_rx, theta_tx, distance, gain).map(Self).map_err(to_py)
    }

    #[getter]
    fn theta_rx(&self) -> f64 {
        self.0.theta_rx
    }
    #[getter]
    fn theta_tx(&self) -> f64 {
        self.0.theta_tx
    }
    #[getter]
    fn distance(&self) -> f64 {
        self.0.distance
    }
    #[getter]
    fn gain(&self) -> Complex64 {
        self.0.gain
    }
    #[getter]
    fn delay(&self) -> f64 {
        self.0.delay()
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "Path(theta_rx={}, theta_tx={}, distance={}, gain={})",
            p.theta_rx, p.theta_tx, p.distance, p.gain
        )
    }
}

fn unwrap_paths(paths: &[PyPath]) -> Vec<PathParams> {
    paths.iter().map(|p| p.0).collect()
}

/// Paths of the default two-path scene (gains 1 and 0.5).
#[pyfunction]
fn default_paths() -> PyResult<Vec<PyPath>> {
    Scenario::default_two_path()
        .true_paths()
        .map(|v| v.into_iter().map(PyPath).collect())
        .map_err(to_py)
}

/// Measurement tensor; `snr_db=None` gives the noiseless signal.
#[pyfunction]
#[pyo3(signature = (paths, beamformers, waveform, arrays, snr_db = None, seed = 0))]
fn synthesize(
    paths: Vec<PyPath>,
    beamformers: &PyBeamformers,
    waveform: &PyWaveform,
    arrays: &PyArrays,
    snr_db: Option<f64>,
    seed: u64,
) -> PyResult<PyTensor3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    channel::synthesize_measurement(&unwrap_paths(&paths), &beamformers.0, &waveform.0, &arrays.0, snr_db, &mut rng)
        .map(PyTensor3)
        .map_err(to_py)
}

/// Estimated paths, strongest first, using the default estimator settings.
#[pyfunction]
fn estimate(y: &PyTensor3, beamformers: &PyBeamformers, waveform: &PyWaveform, arrays: &PyArrays) -> PyResult<Vec<PyPath>> {
    let est = EstimatorConfig::default();
    estimator::estimate_channel_parameters(&y.0, &beamformers.0, &waveform.0, &arrays.0, &est)
        .map(|v| v.iter().map(|e: &PathEstimate| PyPath(e.to_params())).collect())
        .map_err(to_py)
}

/// RMSE lower bounds keyed by coordinate name, e.g. `theta_rx[0]`.
#[pyfunction]
fn crb<'py>(
    py: Python<'py>,
    paths: Vec<PyPath>,
    beamformers: &PyBeamformers,
    waveform: &PyWaveform,
    arrays: &PyArrays,
    noise_variance: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let params = ParamVector::new(unwrap_paths(&paths));
    let report = crb_bounds(&params, &beamformers.0, &waveform.0, &arrays.0, noise_variance).map_err(to_py)?;
    let d = PyDict::new(py);
    for (label, b) in report.labels.iter().zip(&report.bounds) {
        d.set_item(label, b)?;
    }
    Ok(d)
}

/// `(nonselective, N_rx N_s / (2T) in Hz, ratio to the carrier)`.
#[pyfunction]
fn check_frequency_nonselective(waveform: &PyWaveform, arrays: &PyArrays) -> (bool, f64, f64) {
    let f = channel::check_frequency_nonselective(&waveform.0, &arrays.0);
    (f.nonselective, f.dispersion_term_hz, f.ratio)
}

/// The default two-path SNR sweep as scenario TOML.
#[pyfunction]
fn default_scenario_toml() -> PyResult<String> {
    Scenario::default_two_path().to_toml_string().map_err(to_py)
}

/// Runs a scenario given as TOML text; returns one dict per results row.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, scenario_toml: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let s = Scenario::from_toml_str(scenario_toml).map_err(to_py)?;
    let r = py.detach(|| harness::run_scenario(&s)).map_err(to_py)?;
    let mut out = Vec::new();
    for p in &r.points {
        for st in &p.stats {
            let d = PyDict::new(py);
            d.set_item("sweep_value", p.point.value)?;
            d.set_item("parameter_name", st.parameter.name())?;
            d.set_item("path_index", st.path_index)?;
            d.set_item("rmse", st.rmse)?;
            d.set_item("crb", st.crb)?;
            d.set_item("detection_rate", p.detection_rate)?;
            d.set_item("n_sim", p.n_sim)?;
            out.push(d);
        }
    }
    Ok(out)
}

/// Bounds only: `(sweep_value, parameter_name, path_index, crb)` tuples.
#[pyfunction]
fn crb_sweep(py: Python<'_>, scenario_toml: &str) -> PyResult<Vec<(f64, &'static str, usize, f64)>> {
    let s = Scenario::from_toml_str(scenario_toml).map_err(to_py)?;
    let pts = py.detach(|| harness::crb_sweep(&s)).map_err(to_py)?;
    let mut out = Vec::new();
    for p in &pts {
        for (n, b) in p.bounds.iter().enumerate() {
            for (k, param) in Parameter::ALL.iter().enumerate() {
                out.push((p.point.value, param.name(), n, b[k]));
            }
        }
    }
    Ok(out)
}

#[pymodule]
fn pychanest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor3>()?;
    m.add_class::<PyMsvd>()?;
    m.add_class::<PyWaveform>()?;
    m.add_class::<PyArrays>()?;
    m.add_class::<PyBeamformers>()?;
    m.add_class::<PyPath>()?;
    m.add_function(wrap_pyfunction!(msvd, m)?)?;
    m.add_function(wrap_pyfunction!(default_paths, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(crb, m)?)?;
    m.add_function(wrap_pyfunction!(check_frequency_nonselective, m)?)?;
    m.add_function(wrap_pyfunction!(default_scenario_toml, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(crb_sweep, m)?)?;
    Ok(())
}
