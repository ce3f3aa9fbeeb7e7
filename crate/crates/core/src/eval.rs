//! External clustering metrics: accuracy under the best one-to-one
//! cluster/class matching, normalized mutual information and purity.

use pathfinding::matrix::Matrix;
use pathfinding::prelude::kuhn_munkres;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Assignment;

/// Ground-truth classes, remapped to `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    values: Vec<usize>,
    n_classes: usize,
}

impl LabelVector {
    /// Remaps arbitrary class ids to contiguous indices in ascending id order.
    pub fn from_raw(raw: &[i64]) -> Self {
        let mut ids: Vec<i64> = raw.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let values = raw
            .iter()
            .map(|v| ids.binary_search(v).expect("id present"))
            .collect();
        Self {
            values,
            n_classes: ids.len(),
        }
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
}

/// Cluster × class count matrix.
fn contingency(pred: &Assignment, truth: &LabelVector) -> Result<Vec<Vec<usize>>> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "prediction has {} entries but truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("cannot score an empty labeling"));
    }
    let mut table = vec![vec![0usize; truth.n_classes()]; pred.n_clusters()];
    for (&p, &t) in pred.labels().iter().zip(truth.values()) {
        table[p][t] += 1;
    }
    Ok(table)
}

pub fn accuracy(pred: &Assignment, truth: &LabelVector) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let side = table.len().max(truth.n_classes()).max(1);
    let mut weights = Matrix::new(side, side, 0i64);
    for (k, row) in table.iter().enumerate() {
        for (t, &count) in row.iter().enumerate() {
            weights[(k, t)] = count as i64;
        }
    }
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over `√(H(pred) · H(truth))`.
pub fn nmi(pred: &Assignment, truth: &LabelVector) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = pred.len() as f64;
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..truth.n_classes())
        .map(|t| table.iter().map(|r| r[t]).sum())
        .collect();
    let h_pred = entropy(row_sums.iter().copied(), n);
    let h_truth = entropy(col_sums.iter().copied(), n);
    if h_pred == 0.0 && h_truth == 0.0 {
        // Both are the single-block partition.
        return Ok(1.0);
    }
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (k, row) in table.iter().enumerate() {
        for (t, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint = count as f64 / n;
                mi += joint * (count as f64 * n / (row_sums[k] * col_sums[t]) as f64).ln();
            }
        }
    }
    Ok((mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}

/// Fraction of samples covered by each cluster's majority class.
///
/// All-singleton predictions score 1.0.
pub fn purity(pred: &Assignment, truth: &LabelVector) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let covered: usize = table.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
    Ok(covered as f64 / pred.len() as f64)
}

pub fn evaluate(pred: &Assignment, truth: &LabelVector) -> Result<Metrics> {
    Ok(Metrics {
        acc: accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        purity: purity(pred, truth)?,
    })
}
