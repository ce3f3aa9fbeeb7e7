//! Discrete label subproblem with the projection held fixed.
//!
//! Minimizes `tr(Gᵀ D G) − β ‖Gᵀ‖_{2,1}` over one-hot G, where D holds the
//! squared distances between embedded samples. The concave balance term is
//! linearized at the start of every sweep through its gradient H, and the
//! resulting surrogate is minimized exactly one row at a time. Because the
//! ℓ2,1 term is convex the surrogate majorizes the true objective, so every
//! sweep is a descent step. A sweep that moves nothing is followed by one
//! pass of single-row moves scored on the exact objective.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Assignment;
use crate::linalg::DistanceMatrix;

/// Sum of the column norms of a nonnegative N×c matrix, `‖Gᵀ‖_{2,1}`.
pub fn l21_norm_rows_of_transpose(g: &DMatrix<f64>) -> f64 {
    g.column_iter().map(|c| c.norm()).sum()
}

/// `‖Gᵀ‖_{2,1}` of a hard assignment, `Σ_j √n_j`.
pub fn l21_norm(g: &Assignment) -> f64 {
    g.cluster_sizes().iter().map(|&n| (n as f64).sqrt()).sum()
}

/// Gradient of `‖Gᵀ‖_{2,1}` at a hard assignment: column j of G scaled by
/// `1/‖g_j‖`. Columns of empty clusters are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSubgradient {
    labels: Vec<usize>,
    inv_norms: Vec<f64>,
}

impl BalanceSubgradient {
    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        if self.labels[i] == k {
            self.inv_norms[k]
        } else {
            0.0
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.inv_norms.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.labels.len(), self.inv_norms.len(), |i, k| self.get(i, k))
    }

    /// `⟨H, G⟩ = tr(Hᵀ G)`.
    pub fn inner(&self, g: &Assignment) -> f64 {
        g.labels()
            .iter()
            .enumerate()
            .map(|(i, &k)| self.get(i, k))
            .sum()
    }
}

pub fn balance_subgradient(g: &Assignment) -> BalanceSubgradient {
    let inv_norms = g
        .cluster_sizes()
        .iter()
        .map(|&n| if n == 0 { 0.0 } else { 1.0 / (n as f64).sqrt() })
        .collect();
    BalanceSubgradient {
        labels: g.labels().to_vec(),
        inv_norms,
    }
}

/// `tr(Gᵀ D G)`: the sum of `d_ij` over ordered same-cluster pairs.
pub fn within_distance(d: &DistanceMatrix, g: &Assignment) -> f64 {
    let labels = g.labels();
    let mut total = 0.0;
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] == labels[j] {
                total += d.get(i, j);
            }
        }
    }
    total
}

/// `tr(Gᵀ D G) − β ‖Gᵀ‖_{2,1}`.
pub fn assignment_objective(d: &DistanceMatrix, g: &Assignment, beta: f64) -> f64 {
    within_distance(d, g) - beta * l21_norm(g)
}

/// `tr(Gᵀ D G) − β ⟨H, G⟩`, the linearized objective minimized by a sweep.
pub fn surrogate_objective(
    d: &DistanceMatrix,
    g: &Assignment,
    h: &BalanceSubgradient,
    beta: f64,
) -> f64 {
    within_distance(d, g) - beta * h.inner(g)
}

/// Scale-matched balance weight, `mean(D) · N / c`.
pub fn default_beta(d: &DistanceMatrix, n_clusters: usize) -> f64 {
    d.mean() * d.len() as f64 / n_clusters as f64
}

/// Per-cluster score `2 Gᵀ d_i − β (h^i)ᵀ` for row i under the current G.
pub fn row_scores(
    g: &Assignment,
    d: &DistanceMatrix,
    h: &BalanceSubgradient,
    beta: f64,
    i: usize,
) -> Vec<f64> {
    let c = g.n_clusters();
    let mut scores = vec![0.0; c];
    for (j, &l) in g.labels().iter().enumerate() {
        scores[l] += d.get(i, j);
    }
    for (k, s) in scores.iter_mut().enumerate() {
        *s = 2.0 * *s - beta * h.get(i, k);
    }
    scores
}

/// Moves row i to its lowest-scoring cluster. On exact ties the current
/// cluster is kept if it is among the minimizers, otherwise the lowest
/// index wins. Returns whether the label changed.
pub fn update_row(
    g: &mut Assignment,
    d: &DistanceMatrix,
    h: &BalanceSubgradient,
    beta: f64,
    i: usize,
) -> bool {
    let scores = row_scores(g, d, h, beta, i);
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] {
            best = k;
        }
    }
    let current = g.label(i);
    if scores[current] == scores[best] {
        best = current;
    }
    let changed = best != g.label(i);
    g.set_label(i, best);
    changed
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignmentSolveConfig {
    pub beta: f64,
    pub max_sweeps: usize,
    /// Also stop when a sweep lowers the objective by less than this
    /// fraction of its magnitude. Zero disables the test.
    pub tol: f64,
    /// When a linearized sweep moves nothing, try single-row moves scored
    /// on the exact objective before stopping.
    pub polish: bool,
}

impl AssignmentSolveConfig {
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            max_sweeps: 100,
            tol: 0.0,
            polish: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssignmentSolution {
    pub assignment: Assignment,
    /// True objective before the first sweep and after every sweep.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Samples moved into empty clusters after sweeps.
    pub repairs: usize,
}

/// One pass of exact single-row moves: each row goes to the cluster that
/// lowers `tr(Gᵀ D G) − β ‖Gᵀ‖_{2,1}` the most, if any does. Rows never
/// leave a singleton cluster. Returns the number of moves.
///
/// The linearized step never credits the balance gain of joining another
/// cluster, so it can stall where an exact move still helps.
pub fn polish_rows(g: &mut Assignment, d: &DistanceMatrix, beta: f64) -> usize {
    let c = g.n_clusters();
    let mut sizes = g.cluster_sizes();
    let mut moves = 0;
    for i in 0..g.len() {
        let from = g.label(i);
        if sizes[from] < 2 {
            continue;
        }
        let mut sums = vec![0.0; c];
        for (j, &l) in g.labels().iter().enumerate() {
            sums[l] += d.get(i, j);
        }
        let leave = (sizes[from] as f64).sqrt() - ((sizes[from] - 1) as f64).sqrt();
        let scale = sums.iter().sum::<f64>().abs().max(beta.abs()).max(f64::MIN_POSITIVE);
        let mut best = from;
        let mut best_delta = -1e-12 * scale;
        for k in (0..c).filter(|&k| k != from) {
            let join = ((sizes[k] + 1) as f64).sqrt() - (sizes[k] as f64).sqrt();
            let delta = 2.0 * (sums[k] - sums[from]) - beta * (join - leave);
            if delta < best_delta {
                best = k;
                best_delta = delta;
            }
        }
        if best != from {
            g.set_label(i, best);
            sizes[from] -= 1;
            sizes[best] += 1;
            moves += 1;
        }
    }
    moves
}

/// Refills empty clusters: each takes the sample of the largest cluster
/// with the largest within-cluster distance sum. Returns the number of moves.
///
/// Every such move lowers both `tr(Gᵀ D G)` and `−‖Gᵀ‖_{2,1}`.
pub fn repair_empty_clusters(g: &mut Assignment, d: &DistanceMatrix) -> usize {
    let mut moves = 0;
    loop {
        let sizes = g.cluster_sizes();
        let Some(empty) = sizes.iter().position(|&n| n == 0) else {
            break;
        };
        let largest = (0..sizes.len())
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        if sizes[largest] < 2 {
            break;
        }
        let members: Vec<usize> = (0..g.len()).filter(|&i| g.label(i) == largest).collect();
        let spread = |i: usize| members.iter().map(|&j| d.get(i, j)).sum::<f64>();
        let mut pick = members[0];
        let mut pick_spread = spread(pick);
        for &i in &members[1..] {
            let s = spread(i);
            if s > pick_spread {
                pick = i;
                pick_spread = s;
            }
        }
        g.set_label(pick, empty);
        moves += 1;
    }
    moves
}

/// Row-by-row majorization-minimization of the balance-regularized objective.
pub fn solve_assignment(
    d: &DistanceMatrix,
    g_init: &Assignment,
    cfg: &AssignmentSolveConfig,
) -> Result<AssignmentSolution> {
    if d.len() != g_init.len() {
        return Err(Error::invalid(format!(
            "distance matrix is {}×{} but assignment has {} rows",
            d.len(),
            d.len(),
            g_init.len()
        )));
    }
    if !(cfg.beta.is_finite() && cfg.beta >= 0.0) {
        return Err(Error::invalid(format!("beta must be finite and ≥ 0, got {}", cfg.beta)));
    }
    if cfg.max_sweeps < 1 {
        return Err(Error::invalid("max_sweeps must be at least 1"));
    }

    let mut g = g_init.clone();
    let mut objective = assignment_objective(d, &g, cfg.beta);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut sweeps = 0;
    let mut repairs = 0;

    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let h = balance_subgradient(&g);
        let mut changes = 0;
        for i in 0..g.len() {
            if update_row(&mut g, d, &h, cfg.beta, i) {
                changes += 1;
            }
        }
        let moved = repair_empty_clusters(&mut g, d);
        repairs += moved;
        changes += moved;
        if changes == 0 && cfg.polish {
            changes += polish_rows(&mut g, d, cfg.beta);
        }

        let next = assignment_objective(d, &g, cfg.beta);
        let decrease = objective - next;
        objective = next;
        trace.push(objective);
        if changes == 0 || (cfg.tol > 0.0 && decrease.abs() < cfg.tol * objective.abs().max(1.0)) {
            converged = true;
            break;
        }
    }

    Ok(AssignmentSolution {
        assignment: g,
        objective_trace: trace,
        sweeps,
        converged,
        repairs,
    })
}
