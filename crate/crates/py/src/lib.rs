//! Python bindings. Matrices cross the boundary as nested lists of `complex`.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use std::sync::Arc;
use tomoforge_core::estimators::Algorithm;
use tomoforge_core::harness::{self, derive_rng, Observable};
use tomoforge_core::moments;
use tomoforge_core::pgm;
use tomoforge_core::purification::DoubleSchur;
use tomoforge_core::schur::SchurDecomposition;
use tomoforge_core::symmetric;
use tomoforge_core::tensor::{self, Mat, Operator, C64};
use tomoforge_core::Error;

create_exception!(tomoforge, NumericalError, PyRuntimeError, "A numerical routine failed on valid input.");

type Rows = Vec<Vec<C64>>;

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn mat_from_rows(rows: &Rows) -> PyResult<Mat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows_from_mat(m: &Mat) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn operator(rows: &Rows) -> PyResult<Operator> {
    Operator::from_matrix(mat_from_rows(rows)?).map_err(to_py)
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Random density matrix of the given rank.
#[pyfunction]
#[pyo3(signature = (d, rank, seed=0))]
fn random_density(d: usize, rank: usize, seed: u64) -> PyResult<Rows> {
    let rho = tensor::random_density(d, rank, &mut derive_rng(seed, "python-state", 0)).map_err(to_py)?;
    Ok(rows_from_mat(rho.matrix()))
}

#[pyfunction]
fn fidelity(rho: Rows, sigma: Rows) -> PyResult<f64> {
    tensor::fidelity(&operator(&rho)?, &operator(&sigma)?).map_err(to_py)
}

#[pyfunction]
fn trace_distance(rho: Rows, sigma: Rows) -> PyResult<f64> {
    tensor::trace_distance(&operator(&rho)?, &operator(&sigma)?).map_err(to_py)
}

/// Projector onto the symmetric subspace of `(ℂ^d)^⊗n`.
#[pyfunction]
fn sym_projector(n: usize, d: usize) -> PyResult<Rows> {
    Ok(rows_from_mat(symmetric::sym_projector(n, d).map_err(to_py)?.matrix()))
}

/// Jucys–Murphy element `X_i` of `S_n` acting on `(ℂ^d)^⊗n`.
#[pyfunction]
fn jucys_murphy(i: usize, n: usize, d: usize) -> PyResult<Rows> {
    let x = symmetric::jucys_murphy(i, n).map_err(to_py)?.realize(d).map_err(to_py)?;
    Ok(rows_from_mat(x.matrix()))
}

/// One tomography run. Returns `{"estimate", "algorithm", "lambda", "clipped"}`.
#[pyfunction]
#[pyo3(signature = (algorithm, rho, r, n, seed=0))]
fn estimate<'py>(
    py: Python<'py>,
    algorithm: &str,
    rho: Rows,
    r: usize,
    n: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let alg: Algorithm = algorithm.parse().map_err(to_py)?;
    let rho = operator(&rho)?;
    let sample = harness::run_algorithm(alg, &rho, r, n, &mut derive_rng(seed, "python-estimate", 0)).map_err(to_py)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("estimate", rows_from_mat(sample.estimate.matrix()))?;
    dict.set_item("algorithm", sample.meta.algorithm)?;
    dict.set_item("lambda", sample.meta.lambda.map(|l| l.parts().to_vec()))?;
    dict.set_item("clipped", sample.meta.clipped)?;
    Ok(dict.into_any())
}

#[pyfunction]
#[pyo3(signature = (rho, r, n, seed=0))]
fn mix_gps_moments<'py>(py: Python<'py>, rho: Rows, r: usize, n: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let rep =
        moments::mix_gps_moments(&operator(&rho)?, r, n, &mut derive_rng(seed, "python-moments", 0)).map_err(to_py)?;
    to_dict(py, &rep.summary())
}

#[pyfunction]
#[pyo3(signature = (rho, n, seed=0))]
fn mix_plus_gps_moments<'py>(py: Python<'py>, rho: Rows, n: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let rep = moments::mix_plus_gps_moments(&operator(&rho)?, n, &mut derive_rng(seed, "python-moments", 0))
        .map_err(to_py)?;
    to_dict(py, &rep.summary())
}

#[pyfunction]
#[pyo3(signature = (rho, r, n, samples=20_000, seed=0))]
fn purify_check<'py>(
    py: Python<'py>,
    rho: Rows,
    r: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = harness::purify_check(&operator(&rho)?, r, n, samples, seed).map_err(to_py)?;
    to_dict(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (d, r, n, samples=20_000, adjoint_probes=20, seed=0))]
fn pgm_check<'py>(
    py: Python<'py>,
    d: usize,
    r: usize,
    n: usize,
    samples: usize,
    adjoint_probes: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = pgm::pgm_check(d, r, n, samples, adjoint_probes, &mut derive_rng(seed, "pgm-check", 0)).map_err(to_py)?;
    to_dict(py, &rep)
}

/// Averages Mix⁺(GPS) over `n_total / k` batches of `k` copies.
#[pyfunction]
#[pyo3(signature = (rho, n_total, k, seed=0))]
fn run_k_entangled(rho: Rows, n_total: usize, k: usize, seed: u64) -> PyResult<Rows> {
    let out = harness::run_k_entangled(&operator(&rho)?, n_total, k, &mut derive_rng(seed, "python-k-entangled", 0))
        .map_err(to_py)?;
    Ok(rows_from_mat(out.estimate.matrix()))
}

/// Median-of-means plug-in estimates for `[(id, matrix), ...]`.
#[pyfunction]
#[pyo3(signature = (rho, observables, n_prime=50, k_mom=9, seed=0))]
fn run_shadows<'py>(
    py: Python<'py>,
    rho: Rows,
    observables: Vec<(String, Rows)>,
    n_prime: usize,
    k_mom: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let obs = observables
        .iter()
        .map(|(id, m)| Observable::new(id.clone(), mat_from_rows(m)?).map_err(to_py))
        .collect::<PyResult<Vec<_>>>()?;
    let rows = harness::run_shadows(&operator(&rho)?, &obs, n_prime, k_mom, &mut derive_rng(seed, "python-shadows", 0))
        .map_err(to_py)?;
    to_dict(py, &rows)
}

/// Explicit Schur transform of `(ℂ^d)^⊗n`.
#[pyclass(frozen, module = "tomoforge")]
struct SchurTransform {
    inner: Arc<SchurDecomposition>,
}

#[pymethods]
impl SchurTransform {
    #[new]
    fn new(n: usize, d: usize) -> PyResult<Self> {
        Ok(SchurTransform { inner: SchurDecomposition::cached(n, d).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    /// `[(partition, dim λ, dim V_λ), ...]`.
    fn blocks(&self) -> Vec<(Vec<usize>, usize, usize)> {
        self.inner.blocks().iter().map(|b| (b.lambda.parts().to_vec(), b.specht_dim(), b.weyl_dim)).collect()
    }

    /// Weak Schur sampling law of `ρ^⊗n`.
    fn block_probabilities(&self, rho: Rows) -> PyResult<Vec<(Vec<usize>, f64)>> {
        let power = tensor::tensor_power(&operator(&rho)?, self.inner.n()).map_err(to_py)?;
        let probs = self.inner.block_probabilities(power.matrix()).map_err(to_py)?;
        Ok(probs.into_iter().map(|(l, p)| (l.parts().to_vec(), p)).collect())
    }

    #[pyo3(signature = (probes=5, seed=0))]
    fn validate<'py>(&self, py: Python<'py>, probes: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let rep = self.inner.validate(probes, &mut derive_rng(seed, "schur-validate", 0)).map_err(to_py)?;
        to_dict(py, &rep)
    }
}

/// Random purification channel on `n` copies of a `d`-dimensional state with purifier rank `r`.
/// Outputs live on `(ℂ^d ⊗ ℂ^r)^⊗n` with registers interleaved.
#[pyclass(frozen, module = "tomoforge")]
struct PurificationChannel {
    inner: Arc<DoubleSchur>,
}

#[pymethods]
impl PurificationChannel {
    #[new]
    fn new(n: usize, d: usize, r: usize) -> PyResult<Self> {
        Ok(PurificationChannel { inner: DoubleSchur::cached(n, d, r).map_err(to_py)? })
    }

    /// Channel output on `ρ^⊗n`.
    fn apply(&self, rho: Rows) -> PyResult<Rows> {
        let power = tensor::tensor_power(&operator(&rho)?, self.inner.n()).map_err(to_py)?;
        Ok(rows_from_mat(self.inner.apply(&power).map_err(to_py)?.matrix()))
    }

    /// Closed-form output for `ρ^⊗n`.
    fn final_formula(&self, rho: Rows) -> PyResult<Rows> {
        Ok(rows_from_mat(self.inner.final_formula(&operator(&rho)?).map_err(to_py)?.matrix()))
    }

    /// One trajectory on `ρ^⊗n`: the sampled partition and the purified block state.
    #[pyo3(signature = (rho, seed=0))]
    fn sample(&self, rho: Rows, seed: u64) -> PyResult<(Vec<usize>, Rows)> {
        let power = tensor::tensor_power(&operator(&rho)?, self.inner.n()).map_err(to_py)?;
        let (lambda, out) = self.inner.sample(&power, &mut derive_rng(seed, "python-purify", 0)).map_err(to_py)?;
        Ok((lambda.parts().to_vec(), rows_from_mat(out.matrix())))
    }

    fn projector_identity_residual(&self) -> PyResult<f64> {
        self.inner.projector_identity_residual().map_err(to_py)
    }

    /// Largest `‖Σ K†K − Π_λ‖` over the blocks.
    fn kraus_completeness_residual(&self) -> PyResult<f64> {
        self.inner
            .blocks()
            .iter()
            .try_fold(0.0f64, |acc, b| Ok(acc.max(self.inner.kraus_completeness_residual(&b.lambda).map_err(to_py)?)))
    }
}

#[pymodule]
fn tomoforge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RNG_FAMILY", harness::RNG_FAMILY)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<SchurTransform>()?;
    m.add_class::<PurificationChannel>()?;
    m.add_function(wrap_pyfunction!(random_density, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(sym_projector, m)?)?;
    m.add_function(wrap_pyfunction!(jucys_murphy, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(mix_gps_moments, m)?)?;
    m.add_function(wrap_pyfunction!(mix_plus_gps_moments, m)?)?;
    m.add_function(wrap_pyfunction!(purify_check, m)?)?;
    m.add_function(wrap_pyfunction!(pgm_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_k_entangled, m)?)?;
    m.add_function(wrap_pyfunction!(run_shadows, m)?)?;
    Ok(())
}
