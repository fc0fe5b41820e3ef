//! Cosine kernels, exact top-k neighbor lists, mutual-kNN alignment, and linear CKA.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::store::EmbeddingMatrix;

/// Neighbor count used when a caller has no reason to pick another.
pub const DEFAULT_K: usize = 10;

/// Dense symmetric `n x n` matrix of pairwise cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    n: usize,
    values: Vec<f64>,
}

impl Kernel {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-row top-k neighbor lists, self excluded, ordered by descending
/// similarity and then ascending index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborIndex {
    n: usize,
    k: usize,
    lists: Vec<usize>,
}

impl NeighborIndex {
    /// Wraps precomputed lists after checking the structural invariants.
    pub fn from_lists(n: usize, k: usize, lists: Vec<Vec<usize>>) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::KOutOfRange { k, n });
        }
        if lists.len() != n {
            return Err(Error::Shape(format!("{} lists for n={n}", lists.len())));
        }
        let mut flat = Vec::with_capacity(n * k);
        for (i, list) in lists.iter().enumerate() {
            if list.len() != k {
                return Err(Error::Shape(format!("list {i} has {} entries, expected {k}", list.len())));
            }
            let mut sorted = list.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != k || list.contains(&i) || sorted.last().is_some_and(|&j| j >= n) {
                return Err(Error::Shape(format!("list {i} is not {k} distinct non-self indices")));
            }
            flat.extend_from_slice(list);
        }
        Ok(NeighborIndex { n, k, lists: flat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.lists[i * self.k..(i + 1) * self.k]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.lists.chunks_exact(self.k)
    }
}

/// Mutual-kNN alignment between two neighbor indices over the same items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentScore {
    pub value: f64,
    pub k: usize,
    pub n: usize,
    /// Sum of per-item intersection sizes; `value == shared / (n * k)`.
    pub shared: usize,
}

impl AlignmentScore {
    pub fn from_shared(shared: usize, n: usize, k: usize) -> Self {
        AlignmentScore {
            value: shared as f64 / (n * k) as f64,
            k,
            n,
            shared,
        }
    }
}

fn row_norms(x: &EmbeddingMatrix) -> Result<Vec<f64>> {
    x.iter_rows()
        .enumerate()
        .map(|(i, r)| {
            let mut ss = 0.0f64;
            for &v in r {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: r.iter().position(|v| !v.is_finite()).unwrap_or(0) });
                }
                ss += f64::from(v) * f64::from(v);
            }
            if ss == 0.0 {
                return Err(Error::ZeroRow(i));
            }
            Ok(ss.sqrt())
        })
        .collect()
}

pub fn cosine_kernel(x: &EmbeddingMatrix) -> Result<Kernel> {
    cosine_kernel_with(x, Execution::default())
}

/// `K[i][j] = dot(z_i, z_j) / (|z_i| |z_j|)`, accumulated in `f64`.
///
/// Each entry is computed with the same summation order as its transpose, so
/// the result is exactly symmetric.
pub fn cosine_kernel_with(x: &EmbeddingMatrix, exec: Execution) -> Result<Kernel> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Shape(format!("kernel needs at least 2 rows, got {n}")));
    }
    let norms = row_norms(x)?;
    let d = x.cols();
    let wide: Vec<f64> = x.data().iter().map(|&v| f64::from(v)).collect();
    let mut values = vec![0.0; n * n];
    exec.for_each_chunk(&mut values, n, |i, out| {
        let zi = &wide[i * d..(i + 1) * d];
        for (j, slot) in out.iter_mut().enumerate() {
            let zj = &wide[j * d..(j + 1) * d];
            let dot: f64 = zi.iter().zip(zj).map(|(a, b)| a * b).sum();
            *slot = dot / (norms[i] * norms[j]);
        }
    });
    Ok(Kernel { n, values })
}

#[inline]
fn by_similarity(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

/// Writes the top-k of `candidates` (value, position) into `out`, best first.
fn select_top(candidates: &mut [(f64, usize)], k: usize, out: &mut [usize]) {
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, by_similarity);
    }
    let head = &mut candidates[..k];
    head.sort_unstable_by(by_similarity);
    for (slot, &(_, j)) in out.iter_mut().zip(head.iter()) {
        *slot = j;
    }
}

/// Above this k a partial sort beats insertion into a sorted buffer.
const INSERTION_MAX_K: usize = 48;

/// Top-k by a single pass with a sorted buffer of the best `k` seen so far.
fn insert_top<I: Iterator<Item = (f64, usize)>>(candidates: I, best: &mut Vec<(f64, usize)>, k: usize) {
    best.clear();
    for c in candidates {
        if best.len() == k {
            if by_similarity(&c, &best[k - 1]) != Ordering::Less {
                continue;
            }
            best.pop();
        }
        let at = best.partition_point(|b| by_similarity(b, &c) == Ordering::Less);
        best.insert(at, c);
    }
}

pub fn topk_neighbors(kernel: &Kernel, k: usize) -> Result<NeighborIndex> {
    topk_neighbors_with(kernel, k, Execution::default())
}

pub fn topk_neighbors_with(kernel: &Kernel, k: usize, exec: Execution) -> Result<NeighborIndex> {
    let identity: Vec<usize> = (0..kernel.n).collect();
    neighbors_of_sample(kernel, &identity, k, exec)
}

/// Neighbor lists for a resampled multiset of kernel rows.
///
/// Position `a` of the sample stands for kernel row `sample[a]`. Every
/// position is a distinct item: only `a` itself is excluded from its own
/// list, so a duplicate of the same kernel row competes like any other
/// candidate. Returned indices are sample positions.
pub fn neighbors_of_sample(
    kernel: &Kernel,
    sample: &[usize],
    k: usize,
    exec: Execution,
) -> Result<NeighborIndex> {
    let m = sample.len();
    if k == 0 || k >= m {
        return Err(Error::KOutOfRange { k, n: m });
    }
    if let Some(&bad) = sample.iter().find(|&&s| s >= kernel.n) {
        return Err(Error::InvalidArgument(format!(
            "sample index {bad} out of range for kernel of size {}",
            kernel.n
        )));
    }
    let mut lists = vec![0usize; m * k];
    exec.for_each_chunk(&mut lists, k, |a, out| {
        let row = kernel.row(sample[a]);
        let others = sample
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .map(|(b, &s)| (row[s], b));
        if k <= INSERTION_MAX_K {
            let mut best = Vec::with_capacity(k + 1);
            insert_top(others, &mut best, k);
            for (slot, &(_, j)) in out.iter_mut().zip(&best) {
                *slot = j;
            }
        } else {
            let mut candidates: Vec<(f64, usize)> = others.collect();
            select_top(&mut candidates, k, out);
        }
    });
    Ok(NeighborIndex { n: m, k, lists })
}

/// Size of the intersection of two duplicate-free index lists.
pub(crate) fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    if a.len() <= 32 {
        return a.iter().filter(|x| b.contains(x)).count();
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

pub(crate) fn check_same_shape(a: &NeighborIndex, b: &NeighborIndex) -> Result<()> {
    if a.n != b.n {
        return Err(Error::RowCountMismatch { expected: a.n, found: b.n });
    }
    if a.k != b.k {
        return Err(Error::Shape(format!("neighbor counts differ: k={} vs k={}", a.k, b.k)));
    }
    Ok(())
}

/// Per-item `|N_a(i) ∩ N_b(i)|`, indexed by item.
pub fn shared_neighbor_counts(a: &NeighborIndex, b: &NeighborIndex) -> Result<Vec<usize>> {
    check_same_shape(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| intersection_size(x, y)).collect())
}

/// Mean fraction of shared top-k neighbors: `(1/n) sum_i |N_a(i) ∩ N_b(i)| / k`.
pub fn mutual_knn_alignment(a: &NeighborIndex, b: &NeighborIndex) -> Result<AlignmentScore> {
    let shared: usize = shared_neighbor_counts(a, b)?.into_iter().sum();
    Ok(AlignmentScore::from_shared(shared, a.n, a.k))
}

/// Convenience: kernels, neighbor lists, and alignment from two paired matrices.
pub fn align_matrices(a: &EmbeddingMatrix, b: &EmbeddingMatrix, k: usize) -> Result<AlignmentScore> {
    if a.rows() != b.rows() {
        return Err(Error::RowCountMismatch { expected: a.rows(), found: b.rows() });
    }
    let na = topk_neighbors(&cosine_kernel(a)?, k)?;
    let nb = topk_neighbors(&cosine_kernel(b)?, k)?;
    mutual_knn_alignment(&na, &nb)
}

/// Column-centered copy laid out column by column (`cols` vectors of length `rows`).
fn centered_columns(x: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    let n = x.rows();
    (0..x.cols())
        .map(|c| {
            let col: Vec<f64> = x.iter_rows().map(|r| f64::from(r[c])).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            col.into_iter().map(|v| v - mean).collect()
        })
        .collect()
}

fn squared_frobenius_of_cross(a: &[Vec<f64>], b: &[Vec<f64>], exec: Execution) -> f64 {
    exec.map_range(a.len(), |i| {
        b.iter()
            .map(|bj| {
                let dot: f64 = a[i].iter().zip(bj).map(|(x, y)| x * y).sum();
                dot * dot
            })
            .sum::<f64>()
    })
    .into_iter()
    .sum()
}

pub fn linear_cka(x: &EmbeddingMatrix, y: &EmbeddingMatrix) -> Result<f64> {
    linear_cka_with(x, y, Execution::default())
}

/// Biased linear CKA with column centering:
/// `|X'ᵀY'|²_F / (|X'ᵀX'|_F |Y'ᵀY'|_F)`.
pub fn linear_cka_with(x: &EmbeddingMatrix, y: &EmbeddingMatrix, exec: Execution) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::RowCountMismatch { expected: x.rows(), found: y.rows() });
    }
    if x.rows() < 3 {
        return Err(Error::Shape(format!("CKA needs at least 3 rows, got {}", x.rows())));
    }
    for m in [x, y] {
        if let Some((row, col)) = m.first_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    let xc = centered_columns(x);
    let yc = centered_columns(y);
    let xx = squared_frobenius_of_cross(&xc, &xc, exec).sqrt();
    let yy = squared_frobenius_of_cross(&yc, &yc, exec).sqrt();
    if xx == 0.0 || yy == 0.0 {
        return Err(Error::Degenerate("all-constant matrix has no centered variance".into()));
    }
    let xy = squared_frobenius_of_cross(&xc, &yc, exec);
    Ok(xy / (xx * yy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::MatrixMeta;

    fn mat(rows: &[&[f32]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(rows, MatrixMeta::default()).unwrap()
    }

    #[test]
    fn orthogonal_rows_give_identity() {
        let k = cosine_kernel(&mat(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(k.values(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn scaled_rows_are_identical_under_cosine() {
        let k = cosine_kernel(&mat(&[&[1.0, 0.0], &[2.0, 0.0]])).unwrap();
        assert_eq!(k.values(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_row_is_rejected() {
        let err = cosine_kernel(&mat(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap_err();
        assert!(matches!(err, Error::ZeroRow(1)));
    }

    #[test]
    fn three_point_neighbors() {
        let k = cosine_kernel(&mat(&[&[1.0, 0.0], &[0.99, 0.14], &[0.0, 1.0]])).unwrap();
        let idx = topk_neighbors(&k, 1).unwrap();
        assert_eq!(idx.neighbors(0), &[1]);
        assert_eq!(idx.neighbors(1), &[0]);
        assert_eq!(idx.neighbors(2), &[1]);
    }

    #[test]
    fn k_out_of_range() {
        let k = cosine_kernel(&mat(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(matches!(topk_neighbors(&k, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(topk_neighbors(&k, 3), Err(Error::KOutOfRange { .. })));
        assert!(topk_neighbors(&k, 2).is_ok());
    }

    #[test]
    fn ties_prefer_lower_index() {
        // Rows 3 and 5 are identical, so they tie for row 0's single slot.
        let k = cosine_kernel(&mat(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
            &[1.0, 1.0, 0.0],
            &[0.0, 1.0, 1.0],
            &[1.0, 1.0, 0.0],
        ]))
        .unwrap();
        assert_eq!(k.get(0, 3), k.get(0, 5));
        assert_eq!(topk_neighbors(&k, 1).unwrap().neighbors(0), &[3]);
        assert_eq!(topk_neighbors(&k, 2).unwrap().neighbors(0), &[3, 5]);
    }

    #[test]
    fn full_neighborhood_when_k_is_n_minus_one() {
        let k = cosine_kernel(&mat(&[&[1.0, 0.2], &[0.3, 1.0], &[-1.0, 0.5], &[0.1, -0.4]])).unwrap();
        let idx = topk_neighbors(&k, 3).unwrap();
        for i in 0..4 {
            let mut l = idx.neighbors(i).to_vec();
            l.sort_unstable();
            let expected: Vec<usize> = (0..4).filter(|&j| j != i).collect();
            assert_eq!(l, expected);
        }
    }

    #[test]
    fn swapped_pairs_score_zero() {
        // Space A pairs (0,1) and (2,3); space B pairs (0,2) and (1,3).
        let a = mat(&[&[1.0, 0.05], &[1.0, -0.05], &[0.05, 1.0], &[-0.05, 1.0]]);
        let b = mat(&[&[1.0, 0.05], &[0.05, 1.0], &[1.0, -0.05], &[-0.05, 1.0]]);
        let s = align_matrices(&a, &b, 1).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(align_matrices(&a, &a, 1).unwrap().value, 1.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = NeighborIndex::from_lists(3, 1, vec![vec![1], vec![0], vec![0]]).unwrap();
        let b = NeighborIndex::from_lists(4, 1, vec![vec![1], vec![0], vec![0], vec![0]]).unwrap();
        assert!(mutual_knn_alignment(&a, &b).is_err());
        let c = NeighborIndex::from_lists(3, 2, vec![vec![1, 2], vec![0, 2], vec![0, 1]]).unwrap();
        assert!(mutual_knn_alignment(&a, &c).is_err());
    }

    #[test]
    fn from_lists_rejects_self_and_duplicates() {
        assert!(NeighborIndex::from_lists(3, 1, vec![vec![0], vec![0], vec![0]]).is_err());
        assert!(NeighborIndex::from_lists(3, 2, vec![vec![1, 1], vec![0, 2], vec![0, 1]]).is_err());
    }

    #[test]
    fn selection_paths_agree() {
        let values = [0.5, 0.1, 0.5, 0.9, -0.2, 0.5, 0.9, 0.0, 0.3, 0.5];
        for k in 1..values.len() {
            let cands: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
            let mut a = vec![0; k];
            select_top(&mut cands.clone(), k, &mut a);
            let mut best = Vec::new();
            insert_top(cands.into_iter(), &mut best, k);
            let b: Vec<usize> = best.iter().map(|c| c.1).collect();
            assert_eq!(a, b, "k={k}");
        }
    }

    #[test]
    fn large_k_intersection_path() {
        let a: Vec<usize> = (0..40).collect();
        let b: Vec<usize> = (20..60).rev().collect();
        assert_eq!(intersection_size(&a, &b), 20);
    }

    #[test]
    fn cka_identity_and_errors() {
        let x = mat(&[&[1.0, 2.0], &[3.0, 1.0], &[0.5, -1.0], &[2.0, 2.0]]);
        assert!((linear_cka(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let c = mat(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(linear_cka(&x, &c), Err(Error::Degenerate(_))));
        let short = mat(&[&[1.0, 2.0], &[3.0, 1.0], &[0.5, -1.0]]);
        assert!(matches!(linear_cka(&x, &short), Err(Error::RowCountMismatch { .. })));
    }
}
