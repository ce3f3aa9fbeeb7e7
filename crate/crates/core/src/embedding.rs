//! Projection subproblem with the labels held fixed.
//!
//! The locality-preserving variant minimizes `tr(Wᵀ Xᵀ (L_S − η D_S) X W)`
//! over orthonormal W, which is solved exactly by the m smallest
//! eigenvectors of `Xᵀ (L_S − η D_S) X`. The discriminant variant minimizes
//! the trace ratio `tr(Wᵀ A W) / tr(Wᵀ B W)` with `A = Xᵀ L_w X` and
//! `B = Xᵀ L_b X`, by alternating an eigen-solve of `A − λB` with the
//! ratio update for λ.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;
use crate::linalg::{sym_eig_smallest, DataMatrix, Projection};

/// `X · W`.
pub fn embed(x: &DataMatrix, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.n_features() != w.nrows() {
        return Err(Error::invalid(format!(
            "data has {} features but projection has {} rows",
            x.n_features(),
            w.nrows()
        )));
    }
    Ok(x.as_matrix() * w)
}

/// `Xᵀ L_S X`.
pub fn graph_scatter(x: &DataMatrix, s: &SimilarityGraph) -> DMatrix<f64> {
    symmetrize(x.as_matrix().transpose() * s.laplacian_times(x.as_matrix()))
}

/// `Xᵀ (L_S − η D_S) X`, the matrix whose bottom eigenvectors give W.
pub fn lpp_target(x: &DataMatrix, s: &SimilarityGraph, eta: f64) -> DMatrix<f64> {
    let xm = x.as_matrix();
    let lx = s.laplacian_times(xm) - s.degree_times(xm) * eta;
    symmetrize(xm.transpose() * lx)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `tr(Wᵀ M W)`.
pub fn trace_quadratic(w: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    (w.transpose() * m * w).trace()
}

fn check_dims(x: &DataMatrix, s: &SimilarityGraph, m: usize) -> Result<()> {
    if s.len() != x.n_samples() {
        return Err(Error::invalid(format!(
            "similarity graph has {} nodes but data has {} samples",
            s.len(),
            x.n_samples()
        )));
    }
    if m < 1 || m > x.n_features() {
        return Err(Error::invalid(format!(
            "target dimension {m} must lie in [1, {}]",
            x.n_features()
        )));
    }
    Ok(())
}

/// Orthonormal W minimizing `tr(Wᵀ Xᵀ (L_S − η D_S) X W)`.
pub fn solve_projection_lpp(
    x: &DataMatrix,
    s: &SimilarityGraph,
    eta: f64,
    m: usize,
) -> Result<Projection> {
    check_dims(x, s, m)?;
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::invalid(format!("eta must be finite and ≥ 0, got {eta}")));
    }
    let target = lpp_target(x, s, eta);
    let eig = sym_eig_smallest(&target, m)?;
    Projection::new(eig.vectors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRatioConfig {
    /// Stop once |λ_{t+1} − λ_t| falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Denominators at or below this are treated as zero.
    pub denominator_floor: f64,
}

impl Default for TraceRatioConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
            denominator_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraceRatioSolution {
    pub projection: Projection,
    pub ratio: f64,
    /// Ratio of every accepted iterate, starting with the initialization.
    pub ratio_trace: Vec<f64>,
}

/// Minimizes `tr(Wᵀ A W) / tr(Wᵀ B W)` over d×m orthonormal W.
///
/// Starts from the bottom-m eigenvectors of A. Each step takes the bottom
/// eigenvectors of `A − λB` and is kept only if it strictly lowers the
/// ratio, so the returned trace is decreasing.
pub fn trace_ratio_minimize(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    m: usize,
    cfg: &TraceRatioConfig,
) -> Result<TraceRatioSolution> {
    let ratio_of = |w: &DMatrix<f64>| -> Option<f64> {
        let den = trace_quadratic(w, b);
        (den > cfg.denominator_floor).then(|| trace_quadratic(w, a) / den)
    };

    let mut w = sym_eig_smallest(a, m)?.vectors;
    let mut lambda = match ratio_of(&w) {
        Some(r) => r,
        None => {
            // Fall back to the directions that maximize the denominator.
            w = sym_eig_smallest(&(-b), m)?.vectors;
            ratio_of(&w).ok_or_else(|| {
                Error::Degenerate("between-graph scatter vanishes on every candidate".into())
            })?
        }
    };
    let mut ratio_trace = vec![lambda];

    for _ in 0..cfg.max_iter {
        let shifted = a - b * lambda;
        let candidate = sym_eig_smallest(&shifted, m)?.vectors;
        let Some(next) = ratio_of(&candidate) else {
            break;
        };
        if next >= lambda {
            break;
        }
        let step = lambda - next;
        w = candidate;
        lambda = next;
        ratio_trace.push(lambda);
        if step < cfg.tol {
            break;
        }
    }

    Ok(TraceRatioSolution {
        projection: Projection::new(w)?,
        ratio: lambda,
        ratio_trace,
    })
}

/// Orthonormal W minimizing the within/between graph scatter ratio.
pub fn solve_projection_mfa(
    x: &DataMatrix,
    within: &SimilarityGraph,
    between: &SimilarityGraph,
    m: usize,
) -> Result<TraceRatioSolution> {
    solve_projection_mfa_with(x, within, between, m, &TraceRatioConfig::default())
}

pub fn solve_projection_mfa_with(
    x: &DataMatrix,
    within: &SimilarityGraph,
    between: &SimilarityGraph,
    m: usize,
    cfg: &TraceRatioConfig,
) -> Result<TraceRatioSolution> {
    check_dims(x, within, m)?;
    check_dims(x, between, m)?;
    let a = graph_scatter(x, within);
    let b = graph_scatter(x, between);
    trace_ratio_minimize(&a, &b, m, cfg)
}
