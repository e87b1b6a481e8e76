//! Python bindings: `import pysymchaos`.
//!
//! Rationals cross the boundary as `fractions.Fraction` (strings like
//! `"2/7"` are accepted too); reports come back as plain dicts.

use num_bigint::BigUint;
use num_rational::BigRational;
use pyo3::exceptions::{PyArithmeticError, PyOverflowError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::Serialize;

use symchaos::interval::{lambda_membership_depth, MapSpec};
use symchaos::rational::parse_rational;
use symchaos::tau::{tau_bit, tau_prefix, tau_segment};
use symchaos::turbulence::{chaos_implies_turbulence, turbulence_check};
use symchaos::witness::{
    chaos_witness_search_interval, chaos_witness_search_shift, distance_series, scheduled_coincidence_check,
    scheduled_divergence_check, scheduled_tracking_check, LogisticSystem, ScanMode, ShiftSpace, WitnessConfig,
};
use symchaos::{BitStream, Error, PwlMap, RationalInterval, TauParams, Word};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Argument(_) | Error::Parse { .. } | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        Error::Range(_) | Error::Precision { .. } => PyOverflowError::new_err(e.to_string()),
        Error::Escape { .. } | Error::NoPoint(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for symchaos::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// A `Fraction`, an `int` or a string such as `"-2/3"`.
fn rational(obj: &Bound<'_, PyAny>) -> PyResult<BigRational> {
    if let Ok(s) = obj.cast::<PyString>() {
        return parse_rational(&s.to_cow()?).py();
    }
    obj.extract::<BigRational>()
}

fn to_dict<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Infinite binary sequence given by a rule, e.g. `"champ"`, `"ep:01:1"`,
/// `"shift(champ,3)"`.
#[pyclass(name = "BitStream", frozen, from_py_object)]
#[derive(Clone)]
struct PyBitStream(BitStream);

#[pymethods]
impl PyBitStream {
    #[new]
    fn new(rule: &str) -> PyResult<Self> {
        rule.parse().py().map(PyBitStream)
    }

    fn bit(&self, n: u64) -> PyResult<u8> {
        self.0.bit(n).py()
    }

    /// The first `len` bits as a `"0101..."` string.
    fn prefix(&self, len: usize) -> PyResult<String> {
        Ok(self.0.prefix(len).py()?.to_string())
    }

    fn shift(&self, n: u64) -> Self {
        PyBitStream(self.0.shift(n))
    }

    fn complement(&self) -> Self {
        PyBitStream(self.0.complement())
    }

    fn is_eventually_zero(&self) -> PyResult<bool> {
        self.0.is_eventually_zero().py()
    }

    /// `(numerator, precision)` of the distance truncated to `precision` bits.
    #[pyo3(signature = (other, precision = 64))]
    fn distance(&self, other: &PyBitStream, precision: u32) -> PyResult<(BigUint, u32)> {
        let d = symchaos::truncated_distance(&self.0, &other.0, precision).py()?;
        Ok((d.numerator, d.precision))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("BitStream('{}')", self.0)
    }
}

/// Parameters of the factorial construction.
#[pyclass(name = "Tau", frozen)]
struct PyTau(TauParams);

#[pymethods]
impl PyTau {
    #[new]
    #[pyo3(signature = (k = 5, gamma = "const1", prefix = None, family = None, alpha = "champ", max_stage = 19))]
    fn new(
        k: u32,
        gamma: &str,
        prefix: Option<&str>,
        family: Option<Vec<String>>,
        alpha: &str,
        max_stage: u32,
    ) -> PyResult<Self> {
        let mut p = TauParams::new(k, gamma.parse().py()?).py()?.with_alpha(alpha.parse().py()?);
        if let Some(prefix) = prefix {
            p = p.with_prefix(prefix.parse::<Word>().py()?).py()?;
        }
        if let Some(family) = family {
            let members = family.iter().map(|s| s.parse::<BitStream>()).collect::<symchaos::Result<Vec<_>>>().py()?;
            p = p.with_family(members);
        }
        Ok(PyTau(p.with_max_stage(max_stage).py()?))
    }

    fn bit(&self, n: u64) -> PyResult<u8> {
        tau_bit(&self.0, n).py()
    }

    fn segment(&self, n: u64) -> PyResult<String> {
        Ok(tau_segment(&self.0, n).py()?.to_string())
    }

    fn prefix(&self, len: usize) -> PyResult<String> {
        Ok(tau_prefix(&self.0, len).py()?.to_string())
    }

    fn stream(&self) -> PyBitStream {
        PyBitStream(self.0.stream())
    }

    /// Copy with a different gamma rule.
    fn with_gamma(&self, gamma: &str) -> PyResult<Self> {
        Ok(PyTau(self.0.clone().with_gamma(gamma.parse().py()?)))
    }
}

/// Continuous piecewise-linear map: `"tent"`, `"g"`, `"h"` or
/// `"pwl: (x0,y0) (x1,y1) ..."`.
#[pyclass(name = "PwlMap", frozen)]
struct PyPwlMap(PwlMap);

#[pymethods]
impl PyPwlMap {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        match spec.parse::<MapSpec>().py()? {
            MapSpec::Pwl(m) => Ok(PyPwlMap(m)),
            MapSpec::Logistic(_) => Err(PyValueError::new_err("logistic maps are not piecewise linear")),
        }
    }

    fn eval(&self, x: &Bound<'_, PyAny>) -> PyResult<BigRational> {
        self.0.eval(&rational(x)?).py()
    }

    /// `[x, f(x), ..., f^n(x)]`.
    fn iterate(&self, x: &Bound<'_, PyAny>, n: usize) -> PyResult<Vec<BigRational>> {
        self.0.iterate(&rational(x)?, n).py()
    }

    fn image(&self, lo: &Bound<'_, PyAny>, hi: &Bound<'_, PyAny>) -> PyResult<(BigRational, BigRational)> {
        let j = RationalInterval::new(rational(lo)?, rational(hi)?).py()?;
        let img = self.0.image(&j).py()?;
        Ok((img.lo, img.hi))
    }

    fn square(&self) -> PyResult<Self> {
        Ok(PyPwlMap(self.0.square().py()?))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PwlMap('{}')", self.0)
    }
}

#[pyfunction]
#[pyo3(signature = (s, m, precision = 64, gamma = "const1", beta = "const0"))]
fn divergence_check(py: Python<'_>, s: u32, m: u32, precision: u32, gamma: &str, beta: &str) -> PyResult<Py<PyAny>> {
    let p = TauParams::new(5, gamma.parse().py()?).py()?;
    let q = p.clone().with_gamma(beta.parse().py()?);
    to_dict(py, &scheduled_divergence_check(&p, &q, s, m, precision).py()?)
}

#[pyfunction]
#[pyo3(signature = (i, j, m, precision = 64, gamma = "const1", beta = "const0"))]
fn coincidence_check(
    py: Python<'_>,
    i: u64,
    j: u64,
    m: u32,
    precision: u32,
    gamma: &str,
    beta: &str,
) -> PyResult<Py<PyAny>> {
    let p = TauParams::new(5, gamma.parse().py()?).py()?;
    let q = p.clone().with_gamma(beta.parse().py()?);
    to_dict(py, &scheduled_coincidence_check(&p, &q, i, j, m, precision).py()?)
}

#[pyfunction]
#[pyo3(signature = (tau, i, j, m, precision = 64))]
fn tracking_check(py: Python<'_>, tau: &PyTau, i: u32, j: u64, m: u32, precision: u32) -> PyResult<Py<PyAny>> {
    to_dict(py, &scheduled_tracking_check(&tau.0, i, j, m, precision).py()?)
}

/// Exact distances `d(f^n x, f^n y)` for `n < n_iter`. `system` is `"shift"`
/// (with stream rules), a PWL spec or `"logistic:<mu>"`.
#[pyfunction]
#[pyo3(signature = (system, x, y, n_iter, precision = 64))]
fn distances(
    system: &str,
    x: &Bound<'_, PyAny>,
    y: &Bound<'_, PyAny>,
    n_iter: u64,
    precision: u32,
) -> PyResult<Vec<BigRational>> {
    let series = if system.trim() == "shift" {
        let x: BitStream = x.extract::<String>()?.parse().py()?;
        let y: BitStream = y.extract::<String>()?.parse().py()?;
        distance_series(&ShiftSpace, &x, &y, n_iter, precision, ScanMode::Sequential).py()?
    } else {
        let (x, y) = (rational(x)?, rational(y)?);
        match system.parse::<MapSpec>().py()? {
            MapSpec::Pwl(m) => distance_series(&m, &x, &y, n_iter, precision, ScanMode::Sequential).py()?,
            MapSpec::Logistic(mu) => {
                distance_series(&LogisticSystem::new(mu), &x, &y, n_iter, precision, ScanMode::Sequential).py()?
            }
        }
    };
    Ok(series.entries.into_iter().map(|e| e.value).collect())
}

#[pyfunction]
#[pyo3(signature = (x, word, horizon = None))]
fn witness_shift(py: Python<'_>, x: &PyBitStream, word: &str, horizon: Option<u64>) -> PyResult<Py<PyAny>> {
    let mut cfg = WitnessConfig::shift_default();
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    let w: Word = word.parse().py()?;
    to_dict(py, &chaos_witness_search_shift(&x.0, &w, &cfg).py()?)
}

#[pyfunction]
#[pyo3(signature = (map, x, lo, hi, seed = 0, horizon = None))]
fn witness_interval(
    py: Python<'_>,
    map: &PyPwlMap,
    x: &Bound<'_, PyAny>,
    lo: &Bound<'_, PyAny>,
    hi: &Bound<'_, PyAny>,
    seed: u64,
    horizon: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let mut cfg = WitnessConfig::interval_default();
    cfg.seed = seed;
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    let v = RationalInterval::new(rational(lo)?, rational(hi)?).py()?;
    to_dict(py, &chaos_witness_search_interval(&map.0, &rational(x)?, &v, &cfg).py()?)
}

#[pyfunction]
fn turbulence(py: Python<'_>, map: &PyPwlMap) -> PyResult<Py<PyAny>> {
    to_dict(py, &turbulence_check(&map.0).py()?)
}

#[pyfunction]
#[pyo3(signature = (map, seed = 0))]
fn implication_pipeline(py: Python<'_>, map: &PyPwlMap, seed: u64) -> PyResult<Py<PyAny>> {
    let mut cfg = WitnessConfig::interval_default();
    cfg.seed = seed;
    to_dict(py, &chaos_implies_turbulence(&map.0, &cfg, None).py()?)
}

/// True when the first `n` logistic iterates of `x` stay in `[0, 1]`.
#[pyfunction]
fn logistic_membership(mu: &Bound<'_, PyAny>, x: &Bound<'_, PyAny>, n: usize) -> PyResult<bool> {
    lambda_membership_depth(&rational(mu)?, &rational(x)?, n).py()
}

#[pymodule]
fn pysymchaos(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBitStream>()?;
    m.add_class::<PyTau>()?;
    m.add_class::<PyPwlMap>()?;
    m.add_function(wrap_pyfunction!(divergence_check, m)?)?;
    m.add_function(wrap_pyfunction!(coincidence_check, m)?)?;
    m.add_function(wrap_pyfunction!(tracking_check, m)?)?;
    m.add_function(wrap_pyfunction!(distances, m)?)?;
    m.add_function(wrap_pyfunction!(witness_shift, m)?)?;
    m.add_function(wrap_pyfunction!(witness_interval, m)?)?;
    m.add_function(wrap_pyfunction!(turbulence, m)?)?;
    m.add_function(wrap_pyfunction!(implication_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(logistic_membership, m)?)?;
    Ok(())
}
