#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use sgec::{Assignment, DataMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian blobs whose means differ only in the first `informative`
/// coordinates; every coordinate carries unit-scale noise times `noise`.
pub fn gaussian_blobs(
    per_cluster: usize,
    clusters: usize,
    ambient: usize,
    informative: usize,
    separation: f64,
    noise: f64,
    seed: u64,
) -> (DataMatrix, Vec<i64>) {
    let mut r = rng(seed);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| {
            (0..ambient)
                .map(|j| {
                    if j < informative {
                        separation * r.sample::<f64, _>(StandardNormal)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let n = per_cluster * clusters;
    let gauss = Normal::new(0.0, noise).unwrap();
    let mut labels = Vec::with_capacity(n);
    let mut x = DMatrix::zeros(n, ambient);
    for i in 0..n {
        let k = i % clusters;
        labels.push(k as i64);
        for j in 0..ambient {
            x[(i, j)] = centers[k][j] + gauss.sample(&mut r);
        }
    }
    (DataMatrix::new(x).unwrap(), labels)
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

pub fn random_labels(r: &mut ChaCha8Rng, n: usize, c: usize) -> Assignment {
    Assignment::new((0..n).map(|_| r.random_range(0..c)).collect(), c).unwrap()
}

/// Random symmetric nonnegative similarity with zero diagonal and the given edge density.
pub fn random_similarity(r: &mut ChaCha8Rng, n: usize, density: f64) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if r.random::<f64>() < density {
                let w = r.random_range(0.0..1.0);
                s[(i, j)] = w;
                s[(j, i)] = w;
            }
        }
    }
    s
}

/// Every labeling of `n` samples into `c` clusters (empty clusters allowed).
pub fn all_assignments(n: usize, c: usize) -> impl Iterator<Item = Assignment> {
    (0..c.pow(n as u32)).map(move |mut code| {
        let labels = (0..n)
            .map(|_| {
                let l = code % c;
                code /= c;
                l
            })
            .collect();
        Assignment::new(labels, c).unwrap()
    })
}

/// Random d×m matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal(r: &mut ChaCha8Rng, d: usize, m: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, m, |_, _| r.sample::<f64, _>(StandardNormal));
    g.qr().q().columns(0, m).into_owned()
}

/// Accuracy by trying every injective cluster→class map (brute force).
pub fn brute_force_accuracy(pred: &[usize], truth: &[usize], c: usize, classes: usize) -> f64 {
    let n = pred.len();
    let mut table = vec![vec![0usize; classes]; c];
    for (&p, &t) in pred.iter().zip(truth) {
        table[p][t] += 1;
    }
    fn go(k: usize, table: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
        if k == table.len() {
            return 0;
        }
        // cluster k left unmatched
        let mut best = go(k + 1, table, used);
        for t in 0..used.len() {
            if !used[t] {
                used[t] = true;
                best = best.max(table[k][t] + go(k + 1, table, used));
                used[t] = false;
            }
        }
        best
    }
    let mut used = vec![false; classes];
    go(0, &table, &mut used) as f64 / n as f64
}
