//! Python module `floquet_ssh`: model parameters, Floquet operators,
//! extended-space quasienergies, invariants and wave-packet trajectories.
//!
//! Library errors surface as `floquet_ssh.FloquetError` carrying `code` and
//! `module` attributes; bad arguments raise `ValueError`.

use floquet_core::linalg::{Mat2, C64};
use floquet_core::topology::{InvariantOptions, WindingRoute};
use floquet_core::wavepacket::WavePacketSpec;
use floquet_core::{extended, perturbation, propagator, topology, wavepacket};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(floquet_ssh, FloquetError, PyRuntimeError);

fn to_py(e: floquet_core::FloquetError) -> PyErr {
    if let floquet_core::FloquetError::InvalidArgument(m) = &e {
        return PyValueError::new_err(m.clone());
    }
    let err = FloquetError::new_err(e.to_string());
    Python::attach(|py| {
        let value = err.value(py);
        // attributes are informational; a failure here must not mask the error
        let _ = value.setattr("code", e.code());
        let _ = value.setattr("module", e.module());
    });
    err
}

fn rows(m: &Mat2) -> Vec<Vec<C64>> {
    (0..2).map(|i| vec![m[(i, 0)], m[(i, 1)]]).collect()
}

#[pyclass(name = "ModelParams", module = "floquet_ssh", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyModelParams(floquet_core::ModelParams);

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (j1 = 1.0, j2 = 1.5, amp = 1.0, omega = 5.5))]
    fn new(j1: f64, j2: f64, amp: f64, omega: f64) -> PyResult<Self> {
        floquet_core::ModelParams::new(j1, j2, amp, omega).map(Self).map_err(to_py)
    }

    #[getter]
    fn j1(&self) -> f64 {
        self.0.j1
    }
    #[getter]
    fn j2(&self) -> f64 {
        self.0.j2
    }
    #[getter]
    fn amp(&self) -> f64 {
        self.0.amp
    }
    #[getter]
    fn omega(&self) -> f64 {
        self.0.omega
    }
    #[getter]
    fn period(&self) -> f64 {
        self.0.period
    }

    fn with_amp(&self, amp: f64) -> PyResult<Self> {
        self.0.with_amp(amp).map(Self).map_err(to_py)
    }

    fn with_omega(&self, omega: f64) -> PyResult<Self> {
        self.0.with_omega(omega).map(Self).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!("ModelParams(j1={}, j2={}, amp={}, omega={})", p.j1, p.j2, p.amp, p.omega)
    }
}

#[pyclass(name = "InvariantReport", module = "floquet_ssh", frozen, get_all)]
pub struct PyInvariantReport {
    amp: f64,
    omega: f64,
    nu0: i32,
    nupi: i32,
    raw_nu0: f64,
    raw_nupi: f64,
    gap0: f64,
    gappi: f64,
    kgrid: usize,
    truncation: usize,
    structure_residual: f64,
    integer_deficit: f64,
}

impl From<topology::InvariantReport> for PyInvariantReport {
    fn from(r: topology::InvariantReport) -> Self {
        Self {
            amp: r.amp,
            omega: r.omega,
            nu0: r.nu0,
            nupi: r.nupi,
            raw_nu0: r.raw_nu0,
            raw_nupi: r.raw_nupi,
            gap0: r.gap0,
            gappi: r.gappi,
            kgrid: r.kgrid,
            truncation: r.truncation,
            structure_residual: r.residuals.structure,
            integer_deficit: r.residuals.integer_deficit,
        }
    }
}

#[pymethods]
impl PyInvariantReport {
    fn __repr__(&self) -> String {
        format!(
            "InvariantReport(amp={}, omega={}, nu0={}, nupi={}, gap0={:.4}, gappi={:.4})",
            self.amp, self.omega, self.nu0, self.nupi, self.gap0, self.gappi
        )
    }
}

#[pyclass(name = "Trajectory", module = "floquet_ssh", frozen, get_all)]
pub struct PyTrajectory {
    times: Vec<f64>,
    x_exact: Vec<f64>,
    v_exact: Vec<f64>,
    norm: Vec<f64>,
    x_origin: f64,
    x_first_order: Option<Vec<f64>>,
    x_lowfreq: Option<Vec<f64>>,
}

#[pymethods]
impl PyTrajectory {
    fn max_norm_drift(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    fn __len__(&self) -> usize {
        self.times.len()
    }
}

fn options(kgrid_size: usize, steps: usize, truncation: usize) -> InvariantOptions {
    InvariantOptions {
        kgrid_size,
        steps,
        truncation,
        ..InvariantOptions::default()
    }
}

/// `h(k, t)` as a nested 2×2 list.
#[pyfunction]
fn bloch_hamiltonian(params: PyModelParams, k: f64, t: f64) -> Vec<Vec<C64>> {
    rows(&floquet_core::model::bloch_hamiltonian(&params.0, k, t).matrix())
}

#[pyfunction]
#[pyo3(signature = (params, k, steps = propagator::DEFAULT_STEPS_PER_PERIOD))]
fn floquet_operator(py: Python<'_>, params: PyModelParams, k: f64, steps: usize) -> PyResult<Vec<Vec<C64>>> {
    let u = py.detach(|| propagator::floquet_operator(&params.0, k, steps)).map_err(to_py)?;
    Ok(rows(&u.matrix))
}

/// Eigenphases of the one-period operator in `(-π, π]`.
#[pyfunction]
#[pyo3(signature = (params, k, steps = propagator::DEFAULT_STEPS_PER_PERIOD))]
fn floquet_eigenphases(py: Python<'_>, params: PyModelParams, k: f64, steps: usize) -> PyResult<(f64, f64)> {
    let u = py.detach(|| propagator::floquet_operator(&params.0, k, steps)).map_err(to_py)?;
    let [a, b] = u.eigenphases();
    Ok((a, b))
}

/// Principal quasienergies `(lower, upper)` from the truncated extended space.
#[pyfunction]
#[pyo3(signature = (params, k, truncation = 10))]
fn quasienergies(params: PyModelParams, k: f64, truncation: usize) -> PyResult<(f64, f64)> {
    let [lo, hi] = extended::quasienergies(&params.0, k, truncation).map_err(to_py)?;
    Ok((lo.quasienergy, hi.quasienergy))
}

/// Rows `(k, band, quasienergy, q)` including `replicas` copies per side.
#[pyfunction]
#[pyo3(signature = (params, ks, truncation = 10, replicas = 1))]
fn spectrum(
    py: Python<'_>,
    params: PyModelParams,
    ks: Vec<f64>,
    truncation: usize,
    replicas: u32,
) -> PyResult<Vec<(f64, usize, f64, i64)>> {
    let rows = py
        .detach(|| extended::spectrum_scan(&params.0, &ks, truncation, replicas))
        .map_err(to_py)?;
    Ok(rows.iter().map(|r| (r.k, r.band_index, r.quasienergy, r.replica_q)).collect())
}

#[pyfunction]
#[pyo3(signature = (params, kgrid_size = topology::DEFAULT_KGRID, steps = propagator::DEFAULT_STEPS_PER_PERIOD, truncation = 10))]
fn gap_invariants(
    py: Python<'_>,
    params: PyModelParams,
    kgrid_size: usize,
    steps: usize,
    truncation: usize,
) -> PyResult<PyInvariantReport> {
    let opts = options(kgrid_size, steps, truncation);
    py.detach(|| topology::gap_invariants(&params.0, &opts))
        .map(Into::into)
        .map_err(to_py)
}

/// Berry-phase windings `[lower, upper]`; `route` is "state" or "extended".
#[pyfunction]
#[pyo3(signature = (params, kgrid_size = topology::DEFAULT_KGRID, truncation = 10, route = "state"))]
fn band_winding(py: Python<'_>, params: PyModelParams, kgrid_size: usize, truncation: usize, route: &str) -> PyResult<(i32, i32)> {
    let route = match route {
        "state" => WindingRoute::FloquetState,
        "extended" => WindingRoute::ExtendedTerm,
        other => return Err(PyValueError::new_err(format!("unknown route '{other}'"))),
    };
    let opts = options(kgrid_size, propagator::DEFAULT_STEPS_PER_PERIOD, truncation);
    let [lo, hi] = py.detach(|| topology::band_winding(&params.0, &opts, route)).map_err(to_py)?;
    Ok((lo, hi))
}

/// Grid of `(amp, omega, nu0, nupi, status)`; invariants are `None` off the
/// gapped region.
#[pyfunction]
#[pyo3(signature = (params, amps, omegas, kgrid_size = 128, threshold = topology::DEFAULT_CLOSURE_THRESHOLD))]
#[allow(clippy::type_complexity)]
fn phase_diagram(
    py: Python<'_>,
    params: PyModelParams,
    amps: Vec<f64>,
    omegas: Vec<f64>,
    kgrid_size: usize,
    threshold: f64,
) -> PyResult<Vec<(f64, f64, Option<i32>, Option<i32>, String)>> {
    let opts = options(kgrid_size, propagator::DEFAULT_STEPS_PER_PERIOD, 10);
    let d = py
        .detach(|| topology::phase_diagram(&params.0, &amps, &omegas, &opts, threshold))
        .map_err(to_py)?;
    Ok(d.points
        .iter()
        .map(|p| {
            let inv = p.invariants();
            (p.amp, p.omega, inv.map(|i| i.0), inv.map(|i| i.1), p.status.to_string())
        })
        .collect())
}

/// First-order centre of mass of the `k = 0` packet at time `t`.
#[pyfunction]
fn com_first_order(params: PyModelParams, t: f64) -> PyResult<f64> {
    perturbation::com_first_order(&params.0, t).map(|r| r.0).map_err(to_py)
}

/// Amplitudes and signed frequencies of the three first-order terms.
#[pyfunction]
fn com_terms(params: PyModelParams) -> PyResult<([f64; 3], [f64; 3])> {
    let t = perturbation::ComTerms::first_order(&params.0).map_err(to_py)?;
    Ok((t.amplitudes, t.frequencies))
}

/// Exact packet trajectory. `method` is "momentum" or "real-space"; the
/// spinor is the sublattice polarization `(a, b)`.
#[pyfunction]
#[pyo3(signature = (params, width = 10.0, k0 = 0.0, cells = 400, duration = 25.0, dt = None, spinor = None, method = "momentum"))]
#[allow(clippy::too_many_arguments)]
fn trajectory(
    py: Python<'_>,
    params: PyModelParams,
    width: f64,
    k0: f64,
    cells: usize,
    duration: f64,
    dt: Option<f64>,
    spinor: Option<(C64, C64)>,
    method: &str,
) -> PyResult<PyTrajectory> {
    let mut spec = WavePacketSpec::standard(&params.0).with_width(width).with_cells(cells);
    spec.k0 = k0;
    spec.duration = duration;
    if let Some(dt) = dt {
        spec.dt = dt;
    }
    if let Some((a, b)) = spinor {
        spec.spinor = [a, b];
    }
    let evolve = match method {
        "momentum" => wavepacket::evolve_momentum_space,
        "real-space" => wavepacket::evolve_real_space,
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    let p = params.0;
    let mut t = py.detach(|| evolve(&spec, &p)).map_err(to_py)?;
    // a resonant drive leaves the analytic columns empty rather than failing
    match t.attach_first_order(&p, k0) {
        Ok(()) | Err(floquet_core::FloquetError::Resonance { .. }) => {}
        Err(e) => return Err(to_py(e)),
    }
    Ok(PyTrajectory {
        times: t.times,
        x_exact: t.x_exact,
        v_exact: t.v_exact,
        norm: t.norm,
        x_origin: t.x_origin,
        x_first_order: t.x_first_order,
        x_lowfreq: t.x_lowfreq,
    })
}

#[pymodule]
fn floquet_ssh(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FloquetError", m.py().get_type::<FloquetError>())?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyInvariantReport>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(bloch_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(floquet_operator, m)?)?;
    m.add_function(wrap_pyfunction!(floquet_eigenphases, m)?)?;
    m.add_function(wrap_pyfunction!(quasienergies, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(gap_invariants, m)?)?;
    m.add_function(wrap_pyfunction!(band_winding, m)?)?;
    m.add_function(wrap_pyfunction!(phase_diagram, m)?)?;
    m.add_function(wrap_pyfunction!(com_first_order, m)?)?;
    m.add_function(wrap_pyfunction!(com_terms, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    Ok(())
}
