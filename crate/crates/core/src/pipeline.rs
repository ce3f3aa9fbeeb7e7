//! The joint fit: alternate the projection solve and the label solve until
//! the labels stop moving, plus the plain Lloyd baseline and the two
//! closed-form K-means objectives.
//!
//! One outer iteration costs one d×d eigendecomposition per projection
//! step (several for the trace-ratio variant), O(N²m) to build the embedded
//! distance matrix and O(N²) per label sweep, i.e. roughly
//! `O(t_outer · (t_eig · d³ + t_sweep · N² · m))` overall.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{default_beta, solve_assignment, AssignmentSolveConfig};
use crate::embedding::{embed, solve_projection_lpp, solve_projection_mfa_with, TraceRatioConfig};
use crate::error::{Error, Result};
use crate::graph::{
    knn_graph, knn_graph_rows, mfa_similarities, self_supervised_similarity, Assignment,
    NeighborGraph,
};
use crate::linalg::{pairwise_sq_dist, DataMatrix, DistanceMatrix, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    OurLpp,
    OurMfa,
    Kmeans,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "our-lpp" | "lpp" => Ok(Method::OurLpp),
            "our-mfa" | "mfa" => Ok(Method::OurMfa),
            "kmeans" => Ok(Method::Kmeans),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// Balance weight for the label step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Beta {
    /// `mean(D) · N / c`, recomputed for every label step.
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Beta::Auto);
        }
        s.parse::<f64>()
            .map(Beta::Fixed)
            .map_err(|_| Error::invalid(format!("beta must be 'auto' or a number, got '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    BalancedRandom,
    Kmeans,
}

/// Which distances the discriminant variant hands to the label step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MfaLabelDistances {
    /// All pairwise embedded distances, as for the locality-preserving variant.
    Full,
    /// Distances restricted to kNN edges.
    NeighborMasked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub method: Method,
    pub clusters: usize,
    pub neighbors: usize,
    /// Defaults to `min(clusters, d)`.
    pub target_dim: Option<usize>,
    pub eta: f64,
    pub beta: Beta,
    pub max_outer: usize,
    pub tol: f64,
    pub seed: u64,
    pub standardize: bool,
    pub recompute_knn_embedded: bool,
    pub init: InitMethod,
    pub max_sweeps: usize,
    pub kmeans_max_iter: usize,
    pub mfa_label_distances: MfaLabelDistances,
}

impl FitConfig {
    pub fn new(method: Method, clusters: usize) -> Self {
        Self {
            method,
            clusters,
            neighbors: 5,
            target_dim: None,
            eta: 1.0,
            beta: Beta::Auto,
            max_outer: 50,
            tol: 1e-6,
            seed: 0,
            standardize: false,
            recompute_knn_embedded: false,
            init: InitMethod::BalancedRandom,
            max_sweeps: 100,
            kmeans_max_iter: 300,
            mfa_label_distances: MfaLabelDistances::Full,
        }
    }

    pub fn resolved_dim(&self, n_features: usize) -> usize {
        self.target_dim.unwrap_or_else(|| self.clusters.min(n_features))
    }

    pub fn validate(&self, n_samples: usize, n_features: usize) -> Result<()> {
        if self.clusters < 1 || self.clusters > n_samples {
            return Err(Error::invalid(format!(
                "cluster count {} must lie in [1, {n_samples}]",
                self.clusters
            )));
        }
        if self.max_outer < 1 {
            return Err(Error::invalid("max_outer must be at least 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.method == Method::Kmeans {
            return Ok(());
        }
        if self.neighbors < 1 || self.neighbors >= n_samples {
            return Err(Error::invalid(format!(
                "neighbor count {} must lie in [1, {}]",
                self.neighbors,
                n_samples - 1
            )));
        }
        let m = self.resolved_dim(n_features);
        if m < 1 || m > n_features {
            return Err(Error::invalid(format!(
                "target dimension {m} must lie in [1, {n_features}]"
            )));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid("eta must be finite and ≥ 0"));
        }
        if let Beta::Fixed(b) = self.beta {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::invalid("beta must be finite and ≥ 0"));
            }
        }
        if self.max_sweeps < 1 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub assignment: Assignment,
    /// Absent for the K-means baseline.
    pub projection: Option<Projection>,
    /// One value per outer iteration.
    pub objective_trace: Vec<f64>,
    pub outer_iters: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub config: FitConfig,
}

/// c×d matrix of cluster means.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    pub values: DMatrix<f64>,
}

impl CentroidSet {
    /// Cluster means of `x` under `g`; rows of empty clusters are zero.
    pub fn from_assignment(x: &DataMatrix, g: &Assignment) -> Self {
        let xm = x.as_matrix();
        let mut values = DMatrix::zeros(g.n_clusters(), xm.ncols());
        let sizes = g.cluster_sizes();
        for (i, &l) in g.labels().iter().enumerate() {
            let mut row = values.row_mut(l);
            row += xm.row(i);
        }
        for (k, &n) in sizes.iter().enumerate() {
            if n > 0 {
                values.row_mut(k).scale_mut(1.0 / n as f64);
            }
        }
        Self { values }
    }
}

/// Balanced random labels: sizes differ by at most one and no cluster is
/// empty. Deterministic for a given seed.
pub fn initialize_assignment(n: usize, c: usize, seed: u64) -> Result<Assignment> {
    if c < 1 || c > n {
        return Err(Error::invalid(format!("cannot split {n} samples into {c} clusters")));
    }
    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels.shuffle(&mut rng);
    Assignment::new(labels, c)
}

/// `Σ_ij g_ij ‖x^i − u^j‖²` with `u^j` the cluster means.
pub fn kmeans_objective(x: &DataMatrix, g: &Assignment) -> f64 {
    let u = CentroidSet::from_assignment(x, g);
    let xm = x.as_matrix();
    g.labels()
        .iter()
        .enumerate()
        .map(|(i, &l)| (xm.row(i) - u.values.row(l)).norm_squared())
        .sum()
}

/// `Σ_ij ‖x^i − x^j‖² s_ij` with the dense `S = G P^{-1} Gᵀ`.
pub fn manifold_objective(x: &DataMatrix, g: &Assignment) -> f64 {
    let xm = x.as_matrix();
    let sizes = g.cluster_sizes();
    let labels = g.labels();
    let n = labels.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] == labels[j] {
                total += 2.0 * (xm.row(i) - xm.row(j)).norm_squared() / sizes[labels[i]] as f64;
            }
        }
    }
    total
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignment: Assignment,
    pub centroids: CentroidSet,
    /// Objective after every iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sq_dist_row(xm: &DMatrix<f64>, i: usize, u: &DMatrix<f64>, k: usize) -> f64 {
    (xm.row(i) - u.row(k)).norm_squared()
}

fn kmeans_plus_plus(xm: &DMatrix<f64>, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = xm.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| (xm.row(i) - xm.row(chosen[0])).norm_squared())
        .collect();
    while chosen.len() < c {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min((xm.row(i) - xm.row(next)).norm_squared());
        }
    }
    DMatrix::from_fn(c, xm.ncols(), |k, j| xm[(chosen[k], j)])
}

/// Lloyd's algorithm from a k-means++ start.
///
/// A cluster left empty by the assignment step takes the sample farthest
/// from its current centroid.
pub fn kmeans_lloyd(x: &DataMatrix, c: usize, seed: u64, max_iter: usize) -> Result<KMeansResult> {
    let n = x.n_samples();
    if c < 1 || c > n {
        return Err(Error::invalid(format!("cannot split {n} samples into {c} clusters")));
    }
    let xm = x.as_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(xm, c, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter.max(1) {
        iterations += 1;
        let mut changed = 0;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_d = sq_dist_row(xm, i, &centroids, 0);
            for k in 1..c {
                let d = sq_dist_row(xm, i, &centroids, k);
                if d < best_d {
                    best = k;
                    best_d = d;
                }
            }
            if *label != best {
                *label = best;
                changed += 1;
            }
        }
        let mut sizes = vec![0usize; c];
        for &l in &labels {
            sizes[l] += 1;
        }
        while let Some(empty) = sizes.iter().position(|&s| s == 0) {
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist_row(xm, a, &centroids, labels[a])
                        .total_cmp(&sq_dist_row(xm, b, &centroids, labels[b]))
                        .then(b.cmp(&a))
                })
                .expect("c ≤ N leaves a cluster with at least two members");
            sizes[labels[far]] -= 1;
            sizes[empty] += 1;
            labels[far] = empty;
            changed += 1;
        }
        let g = Assignment::new(labels.clone(), c)?;
        centroids = CentroidSet::from_assignment(x, &g).values;
        trace.push(kmeans_objective(x, &g));
        if changed == 0 {
            converged = true;
            break;
        }
    }

    let assignment = Assignment::new(labels, c)?;
    Ok(KMeansResult {
        centroids: CentroidSet { values: centroids },
        assignment,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Runs the configured method on `x`.
pub fn fit(x: &DataMatrix, cfg: &FitConfig) -> Result<FitReport> {
    let start = Instant::now();
    cfg.validate(x.n_samples(), x.n_features())?;
    let standardized;
    let x = if cfg.standardize {
        standardized = x.standardized();
        &standardized
    } else {
        x
    };

    if cfg.method == Method::Kmeans {
        let km = kmeans_lloyd(x, cfg.clusters, cfg.seed, cfg.kmeans_max_iter)?;
        return Ok(FitReport {
            assignment: km.assignment,
            projection: None,
            outer_iters: km.objective_trace.len(),
            objective_trace: km.objective_trace,
            converged: km.converged,
            wall_time: start.elapsed().as_secs_f64(),
            config: cfg.clone(),
        });
    }

    let mut g = match cfg.init {
        InitMethod::BalancedRandom => initialize_assignment(x.n_samples(), cfg.clusters, cfg.seed)?,
        InitMethod::Kmeans => kmeans_lloyd(x, cfg.clusters, cfg.seed, cfg.kmeans_max_iter)?.assignment,
    };
    let m = cfg.resolved_dim(x.n_features());
    let mut nbrs = knn_graph(x, cfg.neighbors)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut projection = None;
    let mut converged = false;

    for _ in 0..cfg.max_outer {
        let w = solve_projection(x, &g, &nbrs, cfg, m)?;
        let y = embed(x, w.as_matrix())?;
        let dist = pairwise_sq_dist(&y)?;
        let label_dist = match (cfg.method, cfg.mfa_label_distances) {
            (Method::OurMfa, MfaLabelDistances::NeighborMasked) => {
                dist.masked(|i, j| nbrs.contains(i, j))
            }
            _ => dist,
        };
        let beta = match cfg.beta {
            Beta::Auto => default_beta(&label_dist, cfg.clusters),
            Beta::Fixed(b) => b,
        };
        let solve_cfg = AssignmentSolveConfig {
            max_sweeps: cfg.max_sweeps,
            ..AssignmentSolveConfig::new(beta)
        };
        let next = solve_assignment(&label_dist, &g, &solve_cfg)?.assignment;
        let objective = self_supervised_similarity(&next, &nbrs)?.quadratic_form(&y);
        let changes = next.changes_from(&g);
        let rel_change = trace
            .last()
            .map(|&prev: &f64| (prev - objective).abs() / prev.abs().max(f64::MIN_POSITIVE));

        trace.push(objective);
        g = next;
        projection = Some(w);
        if cfg.recompute_knn_embedded {
            nbrs = knn_graph_rows(&y, cfg.neighbors)?;
        }
        if changes == 0 || rel_change.is_some_and(|r| r < cfg.tol) {
            converged = true;
            break;
        }
    }

    Ok(FitReport {
        assignment: g,
        projection,
        outer_iters: trace.len(),
        objective_trace: trace,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
    })
}

fn solve_projection(
    x: &DataMatrix,
    g: &Assignment,
    nbrs: &NeighborGraph,
    cfg: &FitConfig,
    m: usize,
) -> Result<Projection> {
    match cfg.method {
        Method::OurLpp => {
            let s = self_supervised_similarity(g, nbrs)?;
            solve_projection_lpp(x, &s, cfg.eta, m)
        }
        Method::OurMfa => {
            let (within, between) = mfa_similarities(g, nbrs)?;
            Ok(solve_projection_mfa_with(x, &within, &between, m, &TraceRatioConfig::default())?.projection)
        }
        Method::Kmeans => unreachable!("K-means has no projection step"),
    }
}

/// Embedded distances for a fitted report, useful for inspection.
pub fn embedded_distances(x: &DataMatrix, w: &Projection) -> Result<DistanceMatrix> {
    pairwise_sq_dist(&embed(x, w.as_matrix())?)
}
