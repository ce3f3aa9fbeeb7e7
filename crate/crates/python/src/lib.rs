//! Python bindings: the joint fit, the Lloyd baseline, metrics and the
//! graph/label building blocks. Matrices cross the boundary as lists of
//! rows (anything iterable of float sequences, e.g. a 2-D numpy array).

use nalgebra::DMatrix;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sgec::assignment::{solve_assignment as solve_labels, AssignmentSolveConfig};
use sgec::graph::{knn_graph as build_knn, self_supervised_similarity};
use sgec::io::Format;
use sgec::pipeline::{InitMethod, MfaLabelDistances};
use sgec::{Assignment, Beta, DataMatrix, DistanceMatrix, Error, FitConfig, LabelVector, Method};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::InvalidInput(_) | Error::Parse { .. } => PyValueError::new_err(err.to_string()),
        Error::Numeric(_) | Error::Degenerate(_) => PyRuntimeError::new_err(err.to_string()),
        Error::Io(_) | Error::Serde(_) => PyOSError::new_err(err.to_string()),
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> sgec::Result<DMatrix<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::InvalidInput(format!("row {i} has {} entries, expected {d}", rows[i].len())));
    }
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn data(rows: &[Vec<f64>]) -> PyResult<DataMatrix> {
    matrix_from_rows(rows).and_then(DataMatrix::new).map_err(to_py)
}

fn assignment(labels: Vec<usize>, clusters: Option<usize>) -> PyResult<Assignment> {
    let c = clusters.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    Assignment::new(labels, c).map_err(to_py)
}

/// Builds a fit configuration from the keyword-style options.
#[allow(clippy::too_many_arguments)]
pub fn build_config(
    clusters: usize,
    method: &str,
    neighbors: usize,
    dim: Option<usize>,
    eta: f64,
    beta: Option<f64>,
    max_outer: usize,
    tol: f64,
    seed: u64,
    standardize: bool,
    recompute_knn: bool,
    init: &str,
    mfa_label_distances: &str,
) -> sgec::Result<FitConfig> {
    let mut cfg = FitConfig::new(method.parse::<Method>()?, clusters);
    cfg.neighbors = neighbors;
    cfg.target_dim = dim;
    cfg.eta = eta;
    cfg.beta = beta.map_or(Beta::Auto, Beta::Fixed);
    cfg.max_outer = max_outer;
    cfg.tol = tol;
    cfg.seed = seed;
    cfg.standardize = standardize;
    cfg.recompute_knn_embedded = recompute_knn;
    cfg.init = match init {
        "balanced" => InitMethod::BalancedRandom,
        "kmeans" => InitMethod::Kmeans,
        other => return Err(Error::InvalidInput(format!("unknown init '{other}'"))),
    };
    cfg.mfa_label_distances = match mfa_label_distances {
        "full" => MfaLabelDistances::Full,
        "masked" => MfaLabelDistances::NeighborMasked,
        other => return Err(Error::InvalidInput(format!("unknown MFA label distances '{other}'"))),
    };
    Ok(cfg)
}

#[pyclass(frozen, name = "Metrics", module = "pysgec")]
pub struct PyMetrics {
    #[pyo3(get)]
    acc: f64,
    #[pyo3(get)]
    nmi: f64,
    #[pyo3(get)]
    purity: f64,
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!("Metrics(acc={:.4}, nmi={:.4}, purity={:.4})", self.acc, self.nmi, self.purity)
    }
}

impl From<sgec::Metrics> for PyMetrics {
    fn from(m: sgec::Metrics) -> Self {
        Self {
            acc: m.acc,
            nmi: m.nmi,
            purity: m.purity,
        }
    }
}

/// Outcome of `fit`.
#[pyclass(frozen, name = "FitResult", module = "pysgec")]
pub struct PyFitResult {
    #[pyo3(get)]
    labels: Vec<usize>,
    #[pyo3(get)]
    objective_trace: Vec<f64>,
    #[pyo3(get)]
    outer_iters: usize,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    wall_time: f64,
    projection: Option<DMatrix<f64>>,
}

#[pymethods]
impl PyFitResult {
    /// d×m projection as rows, or None for the K-means baseline.
    #[getter]
    fn projection(&self) -> Option<Vec<Vec<f64>>> {
        self.projection.as_ref().map(rows_of)
    }

    /// Projects new samples with the learned W.
    fn embed(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let w = self
            .projection
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("this fit has no projection"))?;
        let y = sgec::embedding::embed(&data(&x)?, w).map_err(to_py)?;
        Ok(rows_of(&y))
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult(n={}, outer_iters={}, converged={})",
            self.labels.len(),
            self.outer_iters,
            self.converged
        )
    }
}

/// Jointly learns a projection and a balanced clustering.
///
/// `method` is "our-lpp", "our-mfa" or "kmeans"; `beta=None` picks the
/// balance weight automatically.
#[pyfunction]
#[pyo3(signature = (
    x, clusters, method="our-lpp", neighbors=5, dim=None, eta=1.0, beta=None, max_outer=50,
    tol=1e-6, seed=0, standardize=false, recompute_knn=false, init="balanced",
    mfa_label_distances="full"
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    clusters: usize,
    method: &str,
    neighbors: usize,
    dim: Option<usize>,
    eta: f64,
    beta: Option<f64>,
    max_outer: usize,
    tol: f64,
    seed: u64,
    standardize: bool,
    recompute_knn: bool,
    init: &str,
    mfa_label_distances: &str,
) -> PyResult<PyFitResult> {
    let x = data(&x)?;
    let cfg = build_config(
        clusters, method, neighbors, dim, eta, beta, max_outer, tol, seed, standardize, recompute_knn, init,
        mfa_label_distances,
    )
    .map_err(to_py)?;
    let report = py.detach(|| sgec::fit(&x, &cfg)).map_err(to_py)?;
    Ok(PyFitResult {
        labels: report.assignment.labels().to_vec(),
        objective_trace: report.objective_trace,
        outer_iters: report.outer_iters,
        converged: report.converged,
        wall_time: report.wall_time,
        projection: report.projection.map(|p| p.into_matrix()),
    })
}

type KMeansOut = (Vec<usize>, Vec<Vec<f64>>, Vec<f64>);

/// Lloyd's K-means. Returns (labels, centroids, objective_trace).
#[pyfunction]
#[pyo3(signature = (x, clusters, seed=0, max_iter=300))]
fn kmeans(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    clusters: usize,
    seed: u64,
    max_iter: usize,
) -> PyResult<KMeansOut> {
    let x = data(&x)?;
    let km = py
        .detach(|| sgec::kmeans_lloyd(&x, clusters, seed, max_iter))
        .map_err(to_py)?;
    Ok((km.assignment.labels().to_vec(), rows_of(&km.centroids.values), km.objective_trace))
}

/// ACC, NMI and purity of a predicted labeling against ground truth.
#[pyfunction]
fn evaluate(pred: Vec<usize>, truth: Vec<i64>) -> PyResult<PyMetrics> {
    let m = sgec::evaluate(&assignment(pred, None)?, &LabelVector::from_raw(&truth)).map_err(to_py)?;
    Ok(m.into())
}

#[pyfunction]
fn accuracy(pred: Vec<usize>, truth: Vec<i64>) -> PyResult<f64> {
    sgec::accuracy(&assignment(pred, None)?, &LabelVector::from_raw(&truth)).map_err(to_py)
}

#[pyfunction]
fn nmi(pred: Vec<usize>, truth: Vec<i64>) -> PyResult<f64> {
    sgec::nmi(&assignment(pred, None)?, &LabelVector::from_raw(&truth)).map_err(to_py)
}

#[pyfunction]
fn purity(pred: Vec<usize>, truth: Vec<i64>) -> PyResult<f64> {
    sgec::purity(&assignment(pred, None)?, &LabelVector::from_raw(&truth)).map_err(to_py)
}

/// Squared Euclidean distances between rows.
#[pyfunction]
fn pairwise_sq_dist(y: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let m = matrix_from_rows(&y).map_err(to_py)?;
    let d = sgec::linalg::pairwise_sq_dist(&m).map_err(to_py)?;
    Ok(rows_of(d.as_matrix()))
}

/// Symmetric kNN neighbor lists (union rule).
#[pyfunction]
fn knn_graph(x: Vec<Vec<f64>>, k: usize) -> PyResult<Vec<Vec<usize>>> {
    let g = build_knn(&data(&x)?, k).map_err(to_py)?;
    Ok((0..g.len()).map(|i| g.neighbors(i).to_vec()).collect())
}

/// Label-consistent similarity on kNN edges as `(i, j, weight)` with i < j.
#[pyfunction]
#[pyo3(signature = (x, labels, k, clusters=None))]
fn similarity(
    x: Vec<Vec<f64>>,
    labels: Vec<usize>,
    k: usize,
    clusters: Option<usize>,
) -> PyResult<Vec<(usize, usize, f64)>> {
    let nbrs = build_knn(&data(&x)?, k).map_err(to_py)?;
    let s = self_supervised_similarity(&assignment(labels, clusters)?, &nbrs).map_err(to_py)?;
    Ok(s.edges().to_vec())
}

/// Balanced label step on a distance matrix. Returns (labels, objective_trace).
#[pyfunction]
#[pyo3(signature = (d, labels, beta, clusters=None, max_sweeps=100))]
fn solve_assignment(
    d: Vec<Vec<f64>>,
    labels: Vec<usize>,
    beta: f64,
    clusters: Option<usize>,
    max_sweeps: usize,
) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let d = matrix_from_rows(&d).and_then(DistanceMatrix::from_matrix).map_err(to_py)?;
    let cfg = AssignmentSolveConfig {
        max_sweeps,
        ..AssignmentSolveConfig::new(beta)
    };
    let sol = solve_labels(&d, &assignment(labels, clusters)?, &cfg).map_err(to_py)?;
    Ok((sol.assignment.labels().to_vec(), sol.objective_trace))
}

/// Reads a numeric table ("csv" or "whitespace"); a header line is skipped.
#[pyfunction]
#[pyo3(signature = (path, format="csv"))]
fn load_matrix(path: &str, format: &str) -> PyResult<Vec<Vec<f64>>> {
    let format: Format = format.parse().map_err(to_py)?;
    let x = sgec::io::load_matrix(path, format).map_err(to_py)?;
    Ok(rows_of(x.as_matrix()))
}

#[pymodule]
fn pysgec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFitResult>()?;
    m.add_class::<PyMetrics>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(purity, m)?)?;
    m.add_function(wrap_pyfunction!(pairwise_sq_dist, m)?)?;
    m.add_function(wrap_pyfunction!(knn_graph, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(solve_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(load_matrix, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
