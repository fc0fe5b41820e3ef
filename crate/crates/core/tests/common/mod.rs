//! Brute-force reference implementations shared by the integration tests.
//!
//! Everything here is written directly from the definitions, with no calls
//! into the code paths under test beyond data accessors.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;
use sensalign::{EmbeddingMatrix, MatrixMeta};

pub fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize, d: usize) -> EmbeddingMatrix {
    let data = (0..n * d).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
    EmbeddingMatrix::new(n, d, data, MatrixMeta::new("synthetic", Default::default())).unwrap()
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, n: usize, mean: f64, sd: f64) -> Vec<f64> {
    (0..n).map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn rows_f64(x: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    x.iter_rows().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect()
}

pub fn matrix_from_f64(rows: &[Vec<f64>]) -> EmbeddingMatrix {
    let rows32: Vec<Vec<f32>> = rows.iter().map(|r| r.iter().map(|&v| v as f32).collect()).collect();
    EmbeddingMatrix::from_rows(&rows32, MatrixMeta::new("synthetic", Default::default())).unwrap()
}

/// Double-loop cosine kernel.
pub fn oracle_kernel(x: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    let rows = rows_f64(x);
    let n = rows.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut dot = 0.0;
            let mut ni = 0.0;
            let mut nj = 0.0;
            for c in 0..rows[i].len() {
                dot += rows[i][c] * rows[j][c];
                ni += rows[i][c] * rows[i][c];
                nj += rows[j][c] * rows[j][c];
            }
            k[i][j] = dot / (ni.sqrt() * nj.sqrt());
        }
    }
    k
}

/// Top-k by fully sorting every other index (descending value, ascending index).
pub fn oracle_neighbors(kernel: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    let n = kernel.len();
    (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                kernel[i][b]
                    .partial_cmp(&kernel[i][a])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            others.truncate(k);
            others
        })
        .collect()
}

pub fn oracle_overlaps(a: &[Vec<usize>], b: &[Vec<usize>]) -> Vec<usize> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let xs: HashSet<_> = x.iter().collect();
            let ys: HashSet<_> = y.iter().collect();
            xs.intersection(&ys).count()
        })
        .collect()
}

/// `(1/n) sum_i |N_a(i) ∩ N_b(i)| / k` from scratch.
pub fn oracle_alignment(xa: &EmbeddingMatrix, xb: &EmbeddingMatrix, k: usize) -> f64 {
    let na = oracle_neighbors(&oracle_kernel(xa), k);
    let nb = oracle_neighbors(&oracle_kernel(xb), k);
    let total: usize = oracle_overlaps(&na, &nb).iter().sum();
    total as f64 / (xa.rows() * k) as f64
}

/// Linear CKA via centered Gram matrices: `tr(KxKy) / sqrt(tr(KxKx) tr(KyKy))`.
pub fn oracle_cka(x: &EmbeddingMatrix, y: &EmbeddingMatrix) -> f64 {
    fn centered_gram(x: &EmbeddingMatrix) -> Vec<Vec<f64>> {
        let rows = rows_f64(x);
        let n = rows.len();
        let d = rows[0].len();
        let means: Vec<f64> = (0..d).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n as f64).collect();
        let centered: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&means).map(|(v, m)| v - m).collect())
            .collect();
        (0..n)
            .map(|i| (0..n).map(|j| (0..d).map(|c| centered[i][c] * centered[j][c]).sum()).collect())
            .collect()
    }
    fn trace_product(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let n = a.len();
        (0..n).map(|i| (0..n).map(|j| a[i][j] * b[j][i]).sum::<f64>()).sum()
    }
    let kx = centered_gram(x);
    let ky = centered_gram(y);
    trace_product(&kx, &ky) / (trace_product(&kx, &kx) * trace_product(&ky, &ky)).sqrt()
}

/// Mean over all pairs of 1 / 0.5 / 0.
pub fn oracle_auroc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut doubled: u64 = 0;
    for p in pos {
        for q in neg {
            doubled += match p.partial_cmp(q).unwrap() {
                Ordering::Greater => 2,
                Ordering::Equal => 1,
                Ordering::Less => 0,
            };
        }
    }
    doubled as f64 / (2 * pos.len() * neg.len()) as f64
}

/// Random orthogonal matrix (rows orthonormal) by Gram-Schmidt on Gaussian vectors.
pub fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

pub fn matmul(rows: &[Vec<f64>], q: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| (0..q[0].len()).map(|j| r.iter().zip(q).map(|(a, qr)| a * qr[j]).sum()).collect())
        .collect()
}
