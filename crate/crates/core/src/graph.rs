//! Cluster indicators, kNN neighborhoods and the label-driven similarity
//! graphs built from them.
//!
//! A similarity graph here is never a free-standing kernel: its weights are
//! the inner products of rows of the normalized indicator `Z = G P^{-1/2}`,
//! restricted to kNN edges. For two samples in the same cluster `k` that
//! inner product is `1/n_k`; across clusters it is zero.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

/// Hard cluster membership for N samples over `c` clusters.
///
/// Stored as a label per sample; the N×c one-hot matrix G is available via
/// [`Assignment::indicator`]. Clusters may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, n_clusters: usize) -> Result<Self> {
        if n_clusters == 0 {
            return Err(Error::invalid("cluster count must be at least 1"));
        }
        if let Some(i) = labels.iter().position(|&l| l >= n_clusters) {
            return Err(Error::invalid(format!(
                "label {} of sample {i} is out of range for {n_clusters} clusters",
                labels[i]
            )));
        }
        Ok(Self { labels, n_clusters })
    }

    /// Reads a one-hot N×c matrix. Every row must contain a single 1.
    pub fn from_indicator(g: &DMatrix<f64>) -> Result<Self> {
        let mut labels = Vec::with_capacity(g.nrows());
        for (i, row) in g.row_iter().enumerate() {
            let ones: Vec<usize> = (0..row.len()).filter(|&j| row[j] == 1.0).collect();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones.len() != 1 || zeros + 1 != row.len() {
                return Err(Error::invalid(format!("row {i} is not one-hot")));
            }
            labels.push(ones[0]);
        }
        Self::new(labels, g.ncols())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub(crate) fn set_label(&mut self, i: usize, k: usize) {
        debug_assert!(k < self.n_clusters);
        self.labels[i] = k;
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `p_jj`, the number of samples in each cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// The N×c one-hot matrix G.
    pub fn indicator(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.len(), self.n_clusters);
        for (i, &l) in self.labels.iter().enumerate() {
            g[(i, l)] = 1.0;
        }
        g
    }

    /// Number of samples whose label differs from `other`.
    pub fn changes_from(&self, other: &Assignment) -> usize {
        self.labels
            .iter()
            .zip(&other.labels)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn normalized(&self) -> NormalizedIndicator {
        NormalizedIndicator::from_assignment(self)
    }
}

/// `Z = G P^{-1/2}` together with the cluster sizes `p_jj`.
///
/// Columns of empty clusters are zero. Row sums of G (the diagonal of Q)
/// are identically one for any valid indicator, so Q is never stored.
#[derive(Debug, Clone)]
pub struct NormalizedIndicator {
    pub values: DMatrix<f64>,
    pub cluster_sizes: Vec<usize>,
    labels: Vec<usize>,
}

impl NormalizedIndicator {
    pub fn from_assignment(g: &Assignment) -> Self {
        let sizes = g.cluster_sizes();
        let mut z = DMatrix::zeros(g.len(), g.n_clusters());
        for (i, &l) in g.labels().iter().enumerate() {
            z[(i, l)] = 1.0 / (sizes[l] as f64).sqrt();
        }
        Self {
            values: z,
            cluster_sizes: sizes,
            labels: g.labels().to_vec(),
        }
    }

    /// `⟨z_i, z_j⟩`: `1/n_k` when both samples sit in cluster k, else 0.
    #[inline]
    pub fn inner(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.labels[i], self.labels[j]);
        if a == b {
            1.0 / self.cluster_sizes[a] as f64
        } else {
            0.0
        }
    }

    /// The dense `Z Zᵀ = G P^{-1} Gᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.values * self.values.transpose()
    }
}

/// Symmetric kNN adjacency built with the union rule: i and j are linked
/// when either is among the other's k nearest neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    k: usize,
    /// Sorted neighbor lists, no self-loops.
    adjacency: Vec<Vec<usize>>,
}

impl NeighborGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Dense 0/1 adjacency matrix.
    pub fn mask(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut a = DMatrix::zeros(n, n);
        for (i, j) in self.edges() {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }
}

/// kNN graph over the rows of `x`.
pub fn knn_graph(x: &DataMatrix, k: usize) -> Result<NeighborGraph> {
    knn_graph_rows(x.as_matrix(), k)
}

/// kNN graph over the rows of an arbitrary matrix (e.g. an embedding).
///
/// Equidistant candidates are ranked by lower sample index.
pub fn knn_graph_rows(y: &DMatrix<f64>, k: usize) -> Result<NeighborGraph> {
    let n = y.nrows();
    if k < 1 || k + 1 > n {
        return Err(Error::invalid(format!(
            "neighbor count k={k} must lie in [1, N-1] for N={n}"
        )));
    }
    let dist = crate::linalg::pairwise_sq_dist(y)?;
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut candidates: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        candidates.clear();
        candidates.extend((0..n).filter(|&j| j != i));
        candidates.sort_by(|&a, &b| dist.get(i, a).total_cmp(&dist.get(i, b)).then(a.cmp(&b)));
        for &j in &candidates[..k] {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }
    for nb in &mut adjacency {
        nb.sort_unstable();
        nb.dedup();
    }
    Ok(NeighborGraph { k, adjacency })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Lpp,
    MfaWithin,
    MfaBetween,
    /// Built directly from a user matrix.
    Custom,
}

/// Sparse symmetric nonnegative similarity with zero diagonal.
#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    n: usize,
    /// Nonzero weights, each undirected edge once with `i < j`.
    edges: Vec<(usize, usize, f64)>,
    degree: Vec<f64>,
    kind: SimilarityKind,
}

impl SimilarityGraph {
    fn from_edges(n: usize, edges: Vec<(usize, usize, f64)>, kind: SimilarityKind) -> Self {
        let mut degree = vec![0.0; n];
        for &(i, j, w) in &edges {
            degree[i] += w;
            degree[j] += w;
        }
        Self {
            n,
            edges,
            degree,
            kind,
        }
    }

    /// Validates and sparsifies a dense similarity matrix.
    pub fn from_dense(s: &DMatrix<f64>) -> Result<Self> {
        let n = s.nrows();
        if s.ncols() != n {
            return Err(Error::invalid("similarity matrix must be square"));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            if s[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("similarity has nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (s[(i, j)], s[(j, i)]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::invalid(format!("bad similarity weight at ({i},{j})")));
                }
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(Error::invalid(format!("similarity is asymmetric at ({i},{j})")));
                }
                if a != 0.0 {
                    edges.push((i, j, a));
                }
            }
        }
        Ok(Self::from_edges(n, edges, SimilarityKind::Custom))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// `D_S`, the row sums.
    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.n, self.n);
        for &(i, j, w) in &self.edges {
            s[(i, j)] = w;
            s[(j, i)] = w;
        }
        s
    }

    /// `Σ_ij ‖y_i − y_j‖² s_ij` over the rows of `y` (both orderings counted).
    pub fn quadratic_form(&self, y: &DMatrix<f64>) -> f64 {
        2.0 * self
            .edges
            .iter()
            .map(|&(i, j, w)| w * (y.row(i) - y.row(j)).norm_squared())
            .sum::<f64>()
    }

    /// `L_S · X` without materializing `L_S`.
    pub fn laplacian_times(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.degree_times(x);
        for c in 0..x.ncols() {
            for &(i, j, w) in &self.edges {
                out[(i, c)] -= w * x[(j, c)];
                out[(j, c)] -= w * x[(i, c)];
            }
        }
        out
    }

    /// `D_S · X`.
    pub fn degree_times(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (i, &deg) in self.degree.iter().enumerate() {
            out.row_mut(i).scale_mut(deg);
        }
        out
    }
}

/// Label-consistent kNN similarity: `s_ij = ⟨z_i, z_j⟩` on kNN edges, zero elsewhere.
pub fn self_supervised_similarity(g: &Assignment, nbrs: &NeighborGraph) -> Result<SimilarityGraph> {
    check_sizes(g, nbrs)?;
    let z = g.normalized();
    let edges = nbrs
        .edges()
        .filter_map(|(i, j)| {
            let w = z.inner(i, j);
            (w != 0.0).then_some((i, j, w))
        })
        .collect();
    Ok(SimilarityGraph::from_edges(g.len(), edges, SimilarityKind::Lpp))
}

/// Within/between pair for the discriminant variant: on every kNN edge
/// `s_w = ⟨z_i, z_j⟩` and `s_b = 1 − ⟨z_i, z_j⟩`.
pub fn mfa_similarities(
    g: &Assignment,
    nbrs: &NeighborGraph,
) -> Result<(SimilarityGraph, SimilarityGraph)> {
    check_sizes(g, nbrs)?;
    let z = g.normalized();
    let mut within = Vec::new();
    let mut between = Vec::new();
    for (i, j) in nbrs.edges() {
        let w = z.inner(i, j);
        if w != 0.0 {
            within.push((i, j, w));
        }
        if w != 1.0 {
            between.push((i, j, 1.0 - w));
        }
    }
    let n = g.len();
    Ok((
        SimilarityGraph::from_edges(n, within, SimilarityKind::MfaWithin),
        SimilarityGraph::from_edges(n, between, SimilarityKind::MfaBetween),
    ))
}

fn check_sizes(g: &Assignment, nbrs: &NeighborGraph) -> Result<()> {
    if g.len() != nbrs.len() {
        return Err(Error::invalid(format!(
            "assignment covers {} samples but the neighbor graph has {}",
            g.len(),
            nbrs.len()
        )));
    }
    Ok(())
}

/// Degree matrix `D_S` and Laplacian `L_S = D_S − S`, both dense.
pub fn laplacian(s: &SimilarityGraph) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(s.degree()));
    let l = &d - s.to_dense();
    (d, l)
}
