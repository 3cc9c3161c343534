//! Python bindings: groups, partitions, δ, Patterson-Sullivan measures,
//! Fourier and FUP scans. Words cross the boundary as dotted strings ("1.2.1").

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use schottky_lab::fit::ScanResult;
use schottky_lab::fup::{fup_scan, hyperbolic_phase, lebesgue_fup_norm};
use schottky_lab::measure::{
    build_measure, cantor_measure, estimate_delta, poincare_series_delta, regularity_scan,
};
use schottky_lab::oscillatory::{fourier_scan, oscillatory_integral, FourierOptions, PhasePair};
use schottky_lab::schottky::DEFAULT_BUDGET;
use schottky_lab::{DiscreteMeasure, Error, MobiusTransform, SchottkyData, Word};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Budget { .. } | Error::Convergence { .. } | Error::Refine(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn word(s: &str) -> PyResult<Word> {
    s.parse().map_err(to_py)
}

fn scan_dict<'py>(py: Python<'py>, s: &ScanResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("exponent_hat", s.exponent_hat)?;
    d.set_item("intercept", s.intercept)?;
    d.set_item("r2", s.r2)?;
    d.set_item("window", s.window)?;
    d.set_item("window_ok", s.window_ok)?;
    d.set_item("points", s.points.clone())?;
    Ok(d)
}

/// Real Möbius map `x ↦ (ax+b)/(cx+d)` normalized to determinant one.
#[pyclass(name = "Mobius", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMobius(MobiusTransform);

#[pymethods]
impl PyMobius {
    #[new]
    fn new(a: f64, b: f64, c: f64, d: f64) -> PyResult<Self> {
        MobiusTransform::new(a, b, c, d).map(PyMobius).map_err(to_py)
    }

    fn __call__(&self, x: f64) -> Option<f64> {
        self.0.apply_real(x)
    }

    fn derivative(&self, x: f64) -> PyResult<f64> {
        self.0.derivative(x).map_err(to_py)
    }

    fn compose(&self, other: &PyMobius) -> PyMobius {
        PyMobius(self.0.compose(&other.0))
    }

    fn inverse(&self) -> PyMobius {
        PyMobius(self.0.inverse())
    }

    fn det(&self) -> f64 {
        self.0.det()
    }

    fn rows(&self) -> [[f64; 2]; 2] {
        self.0.rows()
    }

    fn __repr__(&self) -> String {
        let [[a, b], [c, d]] = self.0.rows();
        format!("Mobius({a}, {b}, {c}, {d})")
    }
}

/// Schottky group given by `2r` disjoint intervals and paired generators.
#[pyclass(name = "SchottkyGroup", frozen)]
struct PyGroup(SchottkyData);

#[pymethods]
impl PyGroup {
    /// One of the shipped groups: symmetric_r2, asymmetric_r2, r3.
    #[staticmethod]
    fn shipped(name: &str) -> PyResult<Self> {
        match schottky_lab::examples::shipped(name) {
            Some(d) => Ok(PyGroup(d.map_err(to_py)?)),
            None => Err(PyValueError::new_err(format!("unknown group {name:?}"))),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        SchottkyData::from_json(text).map(PyGroup).map_err(to_py)
    }

    #[staticmethod]
    fn from_disks(centers: Vec<f64>, radii: Vec<f64>) -> PyResult<Self> {
        SchottkyData::from_disks(&centers, &radii).map(PyGroup).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_config().to_json()
    }

    #[getter]
    fn r(&self) -> usize {
        self.0.r()
    }

    #[getter]
    fn intervals(&self) -> Vec<(f64, f64)> {
        self.0.intervals().iter().map(|i| (i.lo, i.hi)).collect()
    }

    fn generator(&self, letter: u32) -> PyResult<PyMobius> {
        let l = word(&letter.to_string())?;
        if !self.0.alphabet().is_admissible(l.letters()) {
            return Err(PyValueError::new_err(format!("letter {letter} is outside the alphabet")));
        }
        Ok(PyMobius(self.0.generator(l.letters()[0])))
    }

    /// `{axiom: (passed, defect)}`.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rep = self.0.validate();
        let d = PyDict::new(py);
        for c in &rep.checks {
            d.set_item(&c.name, (c.passed, c.defect))?;
        }
        Ok(d)
    }

    fn interval_of(&self, w: &str) -> PyResult<(f64, f64)> {
        let iv = self.0.interval_of(&word(w)?).map_err(to_py)?;
        Ok((iv.lo, iv.hi))
    }

    fn interval_size(&self, w: &str) -> PyResult<f64> {
        self.0.interval_size(&word(w)?).map_err(to_py)
    }

    /// `Z(τ)` as `(word, lo, hi, size)` rows.
    #[pyo3(signature = (tau, budget = DEFAULT_BUDGET))]
    fn partition(&self, tau: f64, budget: usize) -> PyResult<Vec<(String, f64, f64, f64)>> {
        let z = self.0.build_partition(tau, budget).map_err(to_py)?;
        z.cells
            .iter()
            .map(|c| {
                let s = self.0.interval_size(&c.word).map_err(to_py)?;
                Ok((c.word.to_string(), c.interval.lo, c.interval.hi, s))
            })
            .collect()
    }

    #[pyo3(signature = (tau = 1e-2, tol = 1e-7))]
    fn delta(&self, tau: f64, tol: f64) -> PyResult<f64> {
        Ok(estimate_delta(&self.0, tau, tol).map_err(to_py)?.delta)
    }

    fn poincare_delta(&self, max_len: usize) -> PyResult<f64> {
        Ok(poincare_series_delta(&self.0, max_len).map_err(to_py)?.delta)
    }

    /// Patterson-Sullivan measure at resolution `tau`.
    fn measure(&self, tau: f64, delta: f64) -> PyResult<PyMeasure> {
        build_measure(&self.0, tau, delta).map(PyMeasure).map_err(to_py)
    }

    /// `‖B(h)‖` on the discretized measure with the hyperbolic phase.
    #[pyo3(signature = (delta, h_grid, tol = 1e-10))]
    fn fup_scan<'py>(&self, py: Python<'py>, delta: f64, h_grid: Vec<f64>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let ks = hyperbolic_phase().for_group(&self.0).map_err(to_py)?;
        let s = fup_scan(&self.0, delta, &ks, &h_grid, tol).map_err(to_py)?;
        let d = scan_dict(py, &s.fit)?;
        d.set_item("norms", s.points.iter().map(|p| p.norm).collect::<Vec<_>>())?;
        d.set_item("schur_bounds", s.points.iter().map(|p| p.schur_bound).collect::<Vec<_>>())?;
        Ok(d)
    }

    /// Lebesgue-grid operator norm on the `h^ρ` neighbourhood.
    #[pyo3(signature = (h, rho = 0.9, tol = 1e-10))]
    fn lebesgue_fup_norm(&self, h: f64, rho: f64, tol: f64) -> PyResult<f64> {
        let ks = hyperbolic_phase().for_group(&self.0).map_err(to_py)?;
        Ok(lebesgue_fup_norm(&self.0, &ks, h, rho, tol).map_err(to_py)?.norm)
    }
}

/// Finite atomic approximation of a measure on the line.
#[pyclass(name = "Measure", frozen)]
struct PyMeasure(DiscreteMeasure);

#[pymethods]
impl PyMeasure {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau()
    }

    fn total_mass(&self) -> f64 {
        self.0.total_mass()
    }

    /// `(word, center, mass)` per atom.
    fn atoms(&self) -> Vec<(String, f64, f64)> {
        self.0
            .atoms()
            .iter()
            .map(|a| (a.word.to_string(), a.center, a.mass))
            .collect()
    }

    fn interval_mass(&self, lo: f64, hi: f64) -> PyResult<f64> {
        let iv = schottky_lab::Interval::new(lo, hi).map_err(to_py)?;
        Ok(self.0.interval_mass(&iv))
    }

    /// `μ̂(ξ) = ∫ e^{iξx} dμ`.
    fn fourier(&self, xi: f64) -> PyResult<Complex64> {
        oscillatory_integral(&self.0, &PhasePair::linear(4.0), xi).map_err(to_py)
    }

    /// Envelope of `|μ̂|` over `xi_grid` with the windowed power-law fit.
    fn fourier_scan<'py>(&self, py: Python<'py>, xi_grid: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let s = fourier_scan(&self.0, &PhasePair::linear(4.0), &xi_grid, &FourierOptions::default()).map_err(to_py)?;
        scan_dict(py, &s)
    }

    /// `(upper max, lower min)` of `μ(I)/|I|^δ` over random intervals.
    #[pyo3(signature = (n_samples = 10_000, seed = 0))]
    fn regularity(&self, n_samples: usize, seed: u64) -> (f64, f64) {
        let r = regularity_scan(&self.0, n_samples, seed);
        (r.upper.max, r.lower.min)
    }
}

/// Middle-third Cantor measure with `2^n` atoms.
#[pyfunction]
fn cantor(n: usize) -> PyResult<PyMeasure> {
    cantor_measure(n).map(PyMeasure).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "schottky_lab")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMobius>()?;
    m.add_class::<PyGroup>()?;
    m.add_class::<PyMeasure>()?;
    m.add_function(wrap_pyfunction!(cantor, m)?)?;
    Ok(())
}
