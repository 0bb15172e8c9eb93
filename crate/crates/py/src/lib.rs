//! Python bindings: potentials, scattering data, reflection data, the
//! inverse transform and the PDE evolver.

use num_complex::Complex64 as C64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use ist::direct::{compute_scattering, detect_spectrum_obstructions, DirectConfig, ScatteringSet};
use ist::lattice::{make_xgrid, weighted_norms, Spacing, XGrid};
use ist::mtmpde::{self, Boundary, EvolverConfig, Splitting};
use ist::recon::{self, InverseConfig, PipelineConfig};
use ist::spectra::{self, ReflectionSet};

create_exception!(mtm_ist, ObstructedError, PyException);
create_exception!(mtm_ist, ConvergenceError, PyException);

fn to_py(e: ist::Error) -> PyErr {
    use ist::Error as E;
    match e {
        E::Obstructed { .. } => ObstructedError::new_err(e.to_string()),
        E::NonConvergence { .. } | E::NonConverged { .. } | E::WronskianDrift { .. } | E::Singular { .. } | E::GaugeInconsistent { .. } => {
            ConvergenceError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_spacing(s: &str) -> PyResult<Spacing> {
    match s {
        "mapped" => Ok(Spacing::Mapped),
        "log" => Ok(Spacing::Log),
        _ => Err(PyValueError::new_err(format!("unknown spacing {s:?}"))),
    }
}

fn pipeline(z_max: f64, nodes: usize, spacing: &str) -> PyResult<PipelineConfig> {
    Ok(PipelineConfig { z_max, nodes, spacing: parse_spacing(spacing)?, ..Default::default() })
}

/// Fields `u`, `v` sampled on a uniform grid.
#[pyclass(module = "mtm_ist", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Potential {
    inner: ist::Potential,
}

#[pymethods]
impl Potential {
    #[new]
    #[pyo3(signature = (x0, dx, u, v))]
    fn new(x0: f64, dx: f64, u: Vec<C64>, v: Vec<C64>) -> PyResult<Self> {
        let grid = XGrid::new(x0, dx, u.len()).map_err(to_py)?;
        Ok(Potential { inner: ist::Potential::new(grid, u, v).map_err(to_py)? })
    }

    /// `u = u_amp·e^{−x²}`, `v = v_amp·e^{−x²}` on `[−L, L]` with `n` points.
    #[staticmethod]
    #[pyo3(signature = (half_width=20.0, n=4001, u_amp=0.2, v_amp=0.1))]
    fn gaussian(half_width: f64, n: usize, u_amp: f64, v_amp: f64) -> PyResult<Self> {
        let grid = make_xgrid(half_width, n).map_err(to_py)?;
        Ok(Potential { inner: ist::Potential::gaussian(grid, u_amp, v_amp) })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Potential { inner: ist::io::read_potential(std::path::Path::new(path)).map_err(to_py)? })
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid().xs()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.grid().dx()
    }

    #[getter]
    fn u(&self) -> Vec<C64> {
        self.inner.u().to_vec()
    }

    #[getter]
    fn v(&self) -> Vec<C64> {
        self.inner.v().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.grid().len()
    }

    /// `∫(|u|² + |v|²) dx`
    fn charge(&self) -> f64 {
        self.inner.charge()
    }

    /// Largest pointwise distance to `other` in `u` and in `v`.
    fn max_deviation(&self, other: &Potential) -> (f64, f64) {
        self.inner.max_deviation(&other.inner)
    }

    fn norms<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let g = self.inner.grid();
        let u = weighted_norms(self.inner.u(), g).map_err(to_py)?;
        let v = weighted_norms(self.inner.v(), g).map_err(to_py)?;
        to_dict(py, &serde_json::json!({ "u": u, "v": v }))
    }

    fn __repr__(&self) -> String {
        let g = self.inner.grid();
        format!("Potential(n={}, x0={}, dx={})", g.len(), g.x0(), g.dx())
    }
}

/// `a`, `b₊`, `b₋` on a symmetric z-grid.
#[pyclass(module = "mtm_ist", frozen)]
pub struct Scattering {
    inner: ScatteringSet,
    a_threshold: f64,
}

#[pymethods]
impl Scattering {
    #[getter]
    fn z(&self) -> Vec<f64> {
        self.inner.grid.nodes().to_vec()
    }

    #[getter]
    fn a(&self) -> Vec<C64> {
        self.inner.a.clone()
    }

    #[getter]
    fn bp(&self) -> Vec<C64> {
        self.inner.bp.clone()
    }

    #[getter]
    fn bm(&self) -> Vec<C64> {
        self.inner.bm.clone()
    }

    #[getter]
    fn a0(&self) -> C64 {
        self.inner.a0
    }

    #[getter]
    fn ainf(&self) -> C64 {
        self.inner.ainf
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.diagnostics)
    }

    /// `min |a|`, winding number of `a` and the verdict.
    fn obstruction<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &detect_spectrum_obstructions(&self.inner, self.a_threshold))
    }

    /// Raises `ObstructedError` if `a` is too small or winds.
    fn reflections(&self) -> PyResult<Reflections> {
        Ok(Reflections { inner: spectra::reflections_from_scattering(&self.inner, self.a_threshold).map_err(to_py)? })
    }
}

/// Reflection coefficients on the ω- and z-grids at time `t`.
#[pyclass(module = "mtm_ist", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Reflections {
    inner: ReflectionSet,
}

#[pymethods]
impl Reflections {
    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn z(&self) -> Vec<f64> {
        self.inner.z_grid.nodes().to_vec()
    }

    #[getter]
    fn omega(&self) -> Vec<f64> {
        self.inner.omega_grid.nodes().to_vec()
    }

    #[getter]
    fn rhp(&self) -> Vec<C64> {
        self.inner.rhp.clone()
    }

    #[getter]
    fn rhm(&self) -> Vec<C64> {
        self.inner.rhm.clone()
    }

    #[getter]
    fn rp(&self) -> Vec<C64> {
        self.inner.rp.clone()
    }

    #[getter]
    fn rm(&self) -> Vec<C64> {
        self.inner.rm.clone()
    }

    fn c0(&self) -> f64 {
        self.inner.c0()
    }

    fn ladder<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.ladder_report())
    }

    fn norms<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &spectra::reflection_norm_report(&self.inner))
    }

    /// Reflection data advanced by `dt`.
    fn evolve(&self, dt: f64) -> Reflections {
        Reflections { inner: spectra::evolve_reflections(&self.inner, dt) }
    }

    /// Reconstruct the potential at time `t` on `[−L, L]` with `n` points.
    #[pyo3(signature = (half_width, n, t=None))]
    fn inverse(&self, py: Python<'_>, half_width: f64, n: usize, t: Option<f64>) -> PyResult<Potential> {
        let grid = make_xgrid(half_width, n).map_err(to_py)?;
        let t = t.unwrap_or(self.inner.t);
        let rs = self.inner.clone();
        let out = py.detach(move || recon::inverse(&rs, &grid, t, &InverseConfig::default())).map_err(to_py)?;
        Ok(Potential { inner: out.p })
    }
}

/// Scattering data of `p` on a symmetric z-grid.
#[pyfunction]
#[pyo3(signature = (p, z_max=16.0, nodes=512, spacing="mapped", a_threshold=1e-3))]
fn scattering(py: Python<'_>, p: &Potential, z_max: f64, nodes: usize, spacing: &str, a_threshold: f64) -> PyResult<Scattering> {
    let grid = pipeline(z_max, nodes, spacing)?.spectral_grid().map_err(to_py)?;
    let pot = p.inner.clone();
    let inner = py.detach(move || compute_scattering(&pot, &grid, &DirectConfig::default())).map_err(to_py)?;
    Ok(Scattering { inner, a_threshold })
}

/// Direct transform, evolution to `t`, inverse transform. Returns the
/// reconstructed potential and the diagnostic report.
#[pyfunction]
#[pyo3(signature = (p, t=0.0, z_max=16.0, nodes=512, spacing="mapped"))]
fn roundtrip<'py>(py: Python<'py>, p: &Potential, t: f64, z_max: f64, nodes: usize, spacing: &str) -> PyResult<(Potential, Bound<'py, PyAny>)> {
    let cfg = pipeline(z_max, nodes, spacing)?;
    let pot = p.inner.clone();
    let out = py.detach(move || recon::roundtrip(&pot, t, &cfg)).map_err(to_py)?;
    let report = to_dict(py, &out.report)?;
    Ok((Potential { inner: out.recon.p }, report))
}

/// Split-step evolution of the PDE to time `t` (negative runs backwards).
#[pyfunction]
#[pyo3(signature = (p, t, dt=None, splitting="strang", boundary="zero_pad"))]
fn evolve_pde(py: Python<'_>, p: &Potential, t: f64, dt: Option<f64>, splitting: &str, boundary: &str) -> PyResult<Potential> {
    let splitting = match splitting {
        "strang" => Splitting::Strang,
        "lie" => Splitting::Lie,
        _ => return Err(PyValueError::new_err(format!("unknown splitting {splitting:?}"))),
    };
    let boundary = match boundary {
        "zero_pad" => Boundary::ZeroPad,
        "periodic" => Boundary::Periodic,
        _ => return Err(PyValueError::new_err(format!("unknown boundary {boundary:?}"))),
    };
    let cfg = EvolverConfig { dt: dt.unwrap_or(p.inner.grid().dx()), splitting, boundary, ..Default::default() };
    let pot = p.inner.clone();
    let out = py.detach(move || mtmpde::evolve(&pot, t, &cfg)).map_err(to_py)?;
    Ok(Potential { inner: out.p })
}

#[pymodule]
fn mtm_ist(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Potential>()?;
    m.add_class::<Scattering>()?;
    m.add_class::<Reflections>()?;
    m.add_function(wrap_pyfunction!(scattering, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_pde, m)?)?;
    m.add("ObstructedError", m.py().get_type::<ObstructedError>())?;
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    Ok(())
}
