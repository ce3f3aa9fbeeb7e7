//! Dense matrix types, pairwise squared distances and the symmetric
//! eigensolver used by the projection solvers.
//!
//! Everything here is a pure function of its inputs. The eigensolver is
//! nalgebra's symmetric QR implementation, wrapped so that results come
//! back sorted ascending with a fixed sign convention and a checked residual.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Sample matrix: one row per sample, one column per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 samples, got {}",
                values.nrows()
            )));
        }
        if values.ncols() < 1 {
            return Err(Error::invalid("need at least 1 feature"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::invalid(format!("non-finite value at ({r}, {c})")));
        }
        Ok(Self { values })
    }

    /// Builds a matrix from row vectors. Rows must all have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::invalid(format!(
                "row {i} has {} columns, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    /// Per-feature z-scoring. Constant columns are centered to zero.
    pub fn standardized(&self) -> Self {
        let n = self.n_samples() as f64;
        let mut out = self.values.clone();
        for mut col in out.column_iter_mut() {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            for v in col.iter_mut() {
                *v -= mean;
                if sd > 1e-12 {
                    *v /= sd;
                }
            }
        }
        Self { values: out }
    }
}

/// A d×m projection with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    values: DMatrix<f64>,
}

impl Projection {
    /// Orthonormality tolerance accepted by [`Projection::new`].
    pub const ORTHONORMAL_TOL: f64 = 1e-8;

    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (d, m) = values.shape();
        if m < 1 || m > d {
            return Err(Error::invalid(format!(
                "projection must be d×m with 1 ≤ m ≤ d, got {d}×{m}"
            )));
        }
        let err = orthonormality_error(&values);
        if err > Self::ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "projection columns not orthonormal (max |WᵀW − I| = {err:e})"
            )));
        }
        Ok(Self { values })
    }

    pub fn input_dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn target_dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }
}

/// Largest absolute entry of `WᵀW − I`.
pub fn orthonormality_error(w: &DMatrix<f64>) -> f64 {
    let gram = w.transpose() * w;
    let m = gram.nrows();
    (gram - DMatrix::<f64>::identity(m, m)).amax()
}

/// Symmetric N×N matrix of squared Euclidean distances, zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
}

impl DistanceMatrix {
    /// Wraps an explicit matrix after checking the distance-matrix contract.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::invalid("distance matrix must be square"));
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if !a.is_finite() || a < 0.0 || a != b {
                    return Err(Error::invalid(format!(
                        "entries ({i},{j})/({j},{i}) must be equal, finite and ≥ 0"
                    )));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Mean over all N² entries, diagonal included.
    pub fn mean(&self) -> f64 {
        self.values.mean()
    }

    /// Keeps only the entries where `keep(i, j)` holds; the rest become zero.
    pub fn masked(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let n = self.len();
        let values = DMatrix::from_fn(n, n, |i, j| {
            if keep(i, j) {
                self.values[(i, j)]
            } else {
                0.0
            }
        });
        Self { values }
    }
}

/// Squared Euclidean distances between the rows of `y`.
///
/// Each entry is summed over coordinates in a fixed order, so the result is
/// exactly symmetric and bitwise reproducible.
pub fn pairwise_sq_dist(y: &DMatrix<f64>) -> Result<DistanceMatrix> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("embedded matrix contains non-finite values"));
    }
    let n = y.nrows();
    // Row-major copy so each row is contiguous.
    let rows: Vec<Vec<f64>> = (0..n).map(|i| y.row(i).iter().copied().collect()).collect();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let d: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix { values: out })
}

/// Tolerances for [`sym_eig_smallest_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenTolerances {
    /// Allowed |M_ij − M_ji|, relative to max(1, max |M|).
    pub symmetry: f64,
    /// Allowed ‖MV − VΛ‖_F relative to ‖M‖_F.
    pub residual: f64,
    /// Iteration cap handed to the QR solver.
    pub max_iter: usize,
}

impl Default for EigenTolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-10,
            residual: 1e-8,
            max_iter: 100_000,
        }
    }
}

/// Leading part of a symmetric eigendecomposition.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: DVector<f64>,
    /// One eigenvector per column, matching `values`.
    pub vectors: DMatrix<f64>,
}

/// The `count` smallest eigenpairs of a symmetric matrix.
pub fn sym_eig_smallest(m: &DMatrix<f64>, count: usize) -> Result<SymEig> {
    sym_eig_smallest_with(m, count, &EigenTolerances::default())
}

pub fn sym_eig_smallest_with(
    m: &DMatrix<f64>,
    count: usize,
    tol: &EigenTolerances,
) -> Result<SymEig> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::invalid(format!(
            "eigen input must be square, got {}×{}",
            d,
            m.ncols()
        )));
    }
    if count < 1 || count > d {
        return Err(Error::invalid(format!(
            "requested {count} eigenpairs of a {d}×{d} matrix"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("eigen input contains non-finite values"));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > tol.symmetry * scale {
        return Err(Error::invalid(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let sym = (m + m.transpose()) * 0.5;

    let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, tol.max_iter)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(count);

    let values = DVector::from_iterator(count, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(d, count);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(col, &v);
    }

    let residual = (&sym * &vectors - &vectors * DMatrix::from_diagonal(&values)).norm();
    if residual > tol.residual * sym.norm() {
        return Err(Error::Numeric(format!(
            "eigen residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(SymEig { values, vectors })
}
