//! Invariants checked over generated inputs.

mod common;

use std::collections::BTreeMap;

use common::{matmul, matrix_from_f64, random_orthogonal, rows_f64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sensalign::axis::{fit_axis, project, separation_report};
use sensalign::kernel::{cosine_kernel, linear_cka, mutual_knn_alignment, topk_neighbors};
use sensalign::neighbors::{mean_overlap_fraction, overlap_per_item};
use sensalign::stats::{auroc, cohens_d, kde, mean};
use sensalign::store::{decode_matrix, encode_matrix, encoded_len, FIXED_HEADER_LEN};
use sensalign::{EmbeddingMatrix, MatrixMeta};

fn matrix(n: std::ops::Range<usize>, d: std::ops::Range<usize>) -> impl Strategy<Value = EmbeddingMatrix> {
    (n, d).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(-10.0f32..10.0, d), n)
            .prop_filter("no zero rows", |rows| rows.iter().all(|r| r.iter().any(|&v| v != 0.0)))
            .prop_map(|rows| EmbeddingMatrix::from_rows(&rows, MatrixMeta::new("p", Default::default())).unwrap())
    })
}

/// Two matrices with the same row count.
fn paired(n: std::ops::Range<usize>) -> impl Strategy<Value = (EmbeddingMatrix, EmbeddingMatrix)> {
    n.prop_flat_map(|n| (matrix(n..n + 1, 1..7), matrix(n..n + 1, 1..7)))
}

/// Paired matrices with at least two columns, so exact kernel ties are non-generic.
fn paired_generic(n: std::ops::Range<usize>) -> impl Strategy<Value = (EmbeddingMatrix, EmbeddingMatrix)> {
    n.prop_flat_map(|n| (matrix(n..n + 1, 2..7), matrix(n..n + 1, 2..7)))
}

fn score(a: &EmbeddingMatrix, b: &EmbeddingMatrix, k: usize) -> f64 {
    let na = topk_neighbors(&cosine_kernel(a).unwrap(), k).unwrap();
    let nb = topk_neighbors(&cosine_kernel(b).unwrap(), k).unwrap();
    mutual_knn_alignment(&na, &nb).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn file_round_trip_is_bit_exact(m in matrix(1..30, 1..12)) {
        let bytes = encode_matrix(&m).unwrap();
        let meta_len = serde_json::to_vec(&m.meta).unwrap().len();
        prop_assert_eq!(bytes.len(), FIXED_HEADER_LEN + meta_len + 4 * m.rows() * m.cols());
        prop_assert_eq!(bytes.len(), encoded_len(&m).unwrap());
        let back = decode_matrix(&bytes).unwrap();
        let same = back.data().iter().zip(m.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
        prop_assert_eq!(back, m);
    }

    #[test]
    fn alignment_is_symmetric((a, b) in paired(4..24), k in 1usize..4) {
        let na = topk_neighbors(&cosine_kernel(&a).unwrap(), k).unwrap();
        let nb = topk_neighbors(&cosine_kernel(&b).unwrap(), k).unwrap();
        let ab = mutual_knn_alignment(&na, &nb).unwrap();
        let ba = mutual_knn_alignment(&nb, &na).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab.value));
    }

    #[test]
    fn alignment_ignores_row_rescaling((a, b) in paired(4..24), exps in prop::collection::vec(-6i32..6, 24)) {
        // Power-of-two scales are exact in floating point, so kernels match bit for bit.
        let scaled: Vec<Vec<f64>> = rows_f64(&a)
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.into_iter().map(|v| v * 2f64.powi(exps[i])).collect())
            .collect();
        let scaled = matrix_from_f64(&scaled);
        prop_assert_eq!(score(&a, &b, 2), score(&scaled, &b, 2));
    }

    #[test]
    fn alignment_ignores_common_permutation((a, b) in paired_generic(4..24), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..a.rows()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(score(&a, &b, 2), score(&a.select_rows(&perm), &b.select_rows(&perm), 2));
    }

    #[test]
    fn full_neighborhoods_align_perfectly((a, b) in paired(3..16)) {
        prop_assert_eq!(score(&a, &b, a.rows() - 1), 1.0);
    }

    #[test]
    fn overlap_mean_is_alignment((a, b) in paired(4..24), k in 1usize..4) {
        let na = topk_neighbors(&cosine_kernel(&a).unwrap(), k).unwrap();
        let nb = topk_neighbors(&cosine_kernel(&b).unwrap(), k).unwrap();
        let overlaps = overlap_per_item(&na, &nb).unwrap();
        let s = mutual_knn_alignment(&na, &nb).unwrap();
        prop_assert_eq!(mean_overlap_fraction(&overlaps, k).to_bits(), s.value.to_bits());
        prop_assert!(overlaps.iter().all(|&o| o <= k));
    }

    #[test]
    fn cka_invariant_to_rotation_and_scale(x in matrix(5..20, 2..6), seed in any::<u64>(), c in 0.1f64..10.0) {
        let rows = rows_f64(&x);
        let q = random_orthogonal(&mut ChaCha8Rng::seed_from_u64(seed), x.cols());
        prop_assume!(linear_cka(&x, &x).is_ok());
        let rotated = matrix_from_f64(&matmul(&rows, &q));
        let scaled = matrix_from_f64(&rows.iter().map(|r| r.iter().map(|v| v * c).collect()).collect::<Vec<_>>());
        let v = linear_cka(&x, &rotated).unwrap();
        prop_assert!((v - 1.0).abs() < 1e-6, "rotation {}", v);
        let v = linear_cka(&x, &scaled).unwrap();
        prop_assert!((v - 1.0).abs() < 1e-9, "scale {}", v);
    }

    #[test]
    fn cka_is_bounded((x, y) in paired(3..20)) {
        if let Ok(v) = linear_cka(&x, &y) {
            prop_assert!((0.0..=1.0 + 1e-9).contains(&v), "{}", v);
        }
    }

    #[test]
    fn cohens_d_antisymmetric_and_affine(
        a in prop::collection::vec(-100.0f64..100.0, 2..30),
        b in prop::collection::vec(-100.0f64..100.0, 2..30),
        shift in -50.0f64..50.0,
        scale in 0.01f64..20.0,
    ) {
        let Ok(d) = cohens_d(&a, &b) else { return Ok(()); };
        prop_assert_eq!(cohens_d(&b, &a).unwrap(), -d);
        let map = |xs: &[f64]| xs.iter().map(|x| scale * x + shift).collect::<Vec<_>>();
        let d2 = cohens_d(&map(&a), &map(&b)).unwrap();
        prop_assert!((d - d2).abs() <= 1e-9 * d.abs().max(1.0), "{} vs {}", d, d2);
    }

    #[test]
    fn auroc_complements_exactly(
        pos in prop::collection::vec(-5i32..5, 1..40),
        neg in prop::collection::vec(-5i32..5, 1..40),
    ) {
        let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
        let a = auroc(&pos, &neg).unwrap();
        prop_assert_eq!(a + auroc(&neg, &pos).unwrap(), 1.0);
        prop_assert_eq!(a, common::oracle_auroc(&pos, &neg));
    }

    #[test]
    fn kde_is_a_density(samples in prop::collection::vec(-50.0f64..50.0, 2..60), points in 200usize..600) {
        let Ok(curve) = kde(&samples, points, None) else { return Ok(()); };
        prop_assert!(curve.density.iter().all(|&v| v >= 0.0));
        prop_assert!((curve.integral() - 1.0).abs() < 1e-2, "{}", curve.integral());
    }

    #[test]
    fn projected_mean_gap_is_axis_norm(see in matrix(2..20, 1..8), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hear = common::gaussian_matrix(&mut rng, 15, see.cols());
        let Ok(axis) = fit_axis(&see, &hear) else { return Ok(()); };
        let gap = mean(&project(&see, &axis).unwrap()) - mean(&project(&hear, &axis).unwrap());
        prop_assert!((gap - axis.delta_norm).abs() < 1e-9, "{} vs {}", gap, axis.delta_norm);
        let unit: f64 = axis.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((unit - 1.0).abs() < 1e-9);
    }

    #[test]
    fn common_shift_leaves_separation_unchanged(
        see in prop::collection::vec(prop::collection::vec(-64i32..64, 4), 3..20),
        hear in prop::collection::vec(prop::collection::vec(-64i32..64, 4), 3..20),
        shift in prop::collection::vec(-8i32..8, 4),
    ) {
        // Multiples of 1/16 keep every shifted entry exact in f32.
        let build = |rows: &[Vec<i32>], s: &[i32]| {
            matrix_from_f64(&rows.iter().map(|r| r.iter().zip(s).map(|(&v, &c)| f64::from(v + 16 * c) / 16.0).collect()).collect::<Vec<_>>())
        };
        let zero = vec![0; 4];
        let Ok(base) = separation_report(&build(&see, &zero), &build(&hear, &zero), &BTreeMap::new(), 64) else { return Ok(()); };
        let moved = separation_report(&build(&see, &shift), &build(&hear, &shift), &BTreeMap::new(), 64).unwrap();
        prop_assert!((base.delta_mu - moved.delta_mu).abs() < 1e-9);
        prop_assert!((base.axis_norm - moved.axis_norm).abs() < 1e-12);
        prop_assert!((base.cohens_d - moved.cohens_d).abs() < 1e-9 * base.cohens_d.abs().max(1.0));
        prop_assert!((base.auroc - moved.auroc).abs() < 1e-12);
    }
}
