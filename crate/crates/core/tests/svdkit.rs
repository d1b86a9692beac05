use cecm::bench::{random_low_rank, random_partition, singular_value_difference, split_columns};
use cecm::linalg::mach_tol;
use cecm::svdkit::{
    read_block, read_block_header, rorth_inc, rsvd_inc, srorth, srsvd, svd_truncated, write_block, write_manifest,
    BlockSource, FileBlocks, IncrementBounds, MemoryBlocks,
};
use cecm::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;

/// `U·diag(s)·Vᵀ` with random orthonormal factors and a prescribed spectrum.
fn with_spectrum(n: usize, m: usize, s: &[f64], seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = |r: usize, c: usize, rng: &mut ChaCha8Rng| {
        DMatrix::<f64>::from_fn(r, c, |_, _| rng.sample(StandardNormal)).qr().q()
    };
    let u = q(n, s.len(), &mut rng);
    let v = q(m, s.len(), &mut rng);
    u * DMatrix::from_diagonal(&DVector::from_column_slice(s)) * v.transpose()
}


#[test]
fn constructed_spectrum_is_recovered() {
    let s: Vec<f64> = (0..12).map(|i| 10f64.powi(-i)).collect();
    let a = with_spectrum(80, 50, &s, 1);
    let f = svd_truncated(&a, 0.0, None).unwrap();
    assert_eq!(f.rank, 12);
    for i in 0..12 {
        assert!((f.singular[i] - s[i]).abs() <= 1e-14 * s[0], "s[{i}]");
    }
    assert!((f.reconstruct() - &a).amax() < 1e-14);
}

#[test]
fn tolerance_keeps_values_above_the_cut() {
    // 36 values above 1e-4 and a tail of 1e-7: the tail norm is far below the cut.
    let mut s: Vec<f64> = (0..36).map(|i| 1.0 - 0.02 * i as f64).collect();
    s.extend(std::iter::repeat_n(1e-7, 10));
    let a = with_spectrum(200, 90, &s, 2);
    let f = svd_truncated(&a, 1e-4 * a.norm(), None).unwrap();
    assert_eq!(f.rank, 36);
    let tail = (10.0f64).sqrt() * 1e-7;
    assert!((f.truncation_error - tail).abs() < 1e-12);
}

#[test]
fn equal_values_at_the_cut_are_dropped_together() {
    let s = [3.0, 2.0, 1.0, 1.0, 1.0];
    let a = with_spectrum(20, 10, &s, 3);
    // Dropping one unit value would satisfy the tolerance; its equal neighbours go too.
    let f = svd_truncated(&a, 1.01, None).unwrap();
    assert_eq!(f.rank, 2);
}

#[test]
fn wide_and_tall_give_transposed_factors() {
    let a = with_spectrum(30, 70, &[4.0, 2.0, 1.0, 0.5], 4);
    let f = svd_truncated(&a, 0.0, None).unwrap();
    let ft = svd_truncated(&a.transpose(), 0.0, None).unwrap();
    assert_eq!(f.rank, 4);
    assert!(singular_value_difference(&f.singular, &ft.singular) < 1e-14);
    assert!((f.reconstruct() - &a).amax() < 1e-13);
}

#[test]
fn sign_convention_largest_entry_positive() {
    let a = with_spectrum(25, 15, &[5.0, 3.0, 1.0], 5);
    let f = svd_truncated(&a, 0.0, None).unwrap();
    for j in 0..f.rank {
        let col = f.left.column(j);
        let big = col.iter().cloned().max_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap();
        assert!(big > 0.0);
    }
}

#[test]
fn zero_and_empty_matrices_have_rank_zero() {
    assert_eq!(svd_truncated(&DMatrix::zeros(5, 3), 0.0, None).unwrap().rank, 0);
    assert_eq!(svd_truncated(&DMatrix::zeros(0, 3), 0.0, None).unwrap().rank, 0);
}

#[test]
fn non_finite_input_is_rejected() {
    let mut a = DMatrix::identity(3, 3);
    a[(1, 2)] = f64::NAN;
    assert!(matches!(svd_truncated(&a, 0.0, None), Err(Error::Input(_))));
}

#[test]
fn range_finder_reaches_tolerance() {
    let s: Vec<f64> = (0..40).map(|i| 0.8f64.powi(i)).collect();
    let c = with_spectrum(300, 120, &s, 6);
    let mu = 1e-6 * c.norm();
    let rb = rorth_inc(&c, mu, 5, IncrementBounds::default(), 9).unwrap();
    let resid = (&c - &rb.h * (rb.h.transpose() * &c)).norm();
    assert!(resid <= mu * (1.0 + 1e-8), "{resid} > {mu}");
    let hth = rb.h.transpose() * &rb.h;
    assert!((hth - DMatrix::identity(rb.h.ncols(), rb.h.ncols())).amax() < 1e-12);
    assert!(rb.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn range_finder_is_seeded() {
    let c = with_spectrum(100, 60, &[3.0, 2.0, 1.0, 0.5, 0.1], 7);
    let a = rorth_inc(&c, 1e-10, 2, IncrementBounds::default(), 42).unwrap();
    let b = rorth_inc(&c, 1e-10, 2, IncrementBounds::default(), 42).unwrap();
    assert_eq!(a.h, b.h);
}

#[test]
fn incremental_rsvd_matches_dense() {
    let s: Vec<f64> = (0..25).map(|i| 2f64.powi(-i)).collect();
    let a = with_spectrum(400, 150, &s, 8);
    let mu = mach_tol(400, 150, a.norm());
    let (f, _) = rsvd_inc(&a, 0.0, mu, None, 3).unwrap();
    let d = svd_truncated(&a, 0.0, None).unwrap();
    assert_eq!(f.rank, d.rank);
    assert!(singular_value_difference(&d.singular, &f.singular) < 1e-12);
}

#[test]
fn sequential_matches_dense_on_random_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = random_low_rank(500, 240, 40, 1e6, &mut rng);
    let widths = random_partition(240, 5, &mut rng);
    let blocks = MemoryBlocks::new(split_columns(&a, &widths)).unwrap();
    let (f, stats) = srsvd(&blocks, 0.0, 0).unwrap();
    let d = svd_truncated(&a, 0.0, None).unwrap();
    assert_eq!(f.rank, d.rank);
    assert!(singular_value_difference(&d.singular, &f.singular) < 1e-10);
    assert!(stats.added.iter().sum::<usize>() >= f.rank);
    assert!((f.reconstruct() - &a).amax() < 1e-10);
}

#[test]
fn sequential_q_is_orthonormal_and_spans_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = random_low_rank(120, 90, 20, 1e3, &mut rng);
    let blocks = MemoryBlocks::split(&a, 4);
    let sf = srorth(&blocks, 5).unwrap();
    let k = sf.q.ncols();
    assert!((sf.q.transpose() * &sf.q - DMatrix::identity(k, k)).amax() < 1e-12);
    assert!((&sf.q * &sf.l - &a).amax() < 1e-12);
}

#[test]
fn repeated_blocks_add_no_basis_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a = random_low_rank(200, 60, 15, 1e4, &mut rng);
    let blocks = MemoryBlocks::new(vec![a.clone(), a.clone(), a]).unwrap();
    let (f, stats) = srsvd(&blocks, 0.0, 0).unwrap();
    assert_eq!(f.rank, 15);
    assert_eq!(stats.added, vec![15, 0, 0]);
}

#[test]
fn block_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = DMatrix::from_fn(7, 3, |i, j| i as f64 - 0.25 * j as f64);
    let p = dir.path().join("m.cubb");
    write_block(&p, &m).unwrap();
    assert_eq!(read_block_header(&p).unwrap(), (7, 3));
    assert_eq!(read_block(&p).unwrap(), m);
}

#[test]
fn manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = DMatrix::from_fn(6, 9, |i, j| (i * 9 + j) as f64);
    let man = dir.path().join("data.json");
    write_manifest(&man, &split_columns(&a, &[2, 3, 4])).unwrap();
    let fb = FileBlocks::open(&man).unwrap();
    assert_eq!(fb.block_count(), 3);
    assert_eq!(fb.assemble().unwrap(), a);
}

#[test]
fn corrupt_block_reports_offset() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.cubb");
    write_block(&p, &DMatrix::from_element(4, 2, 1.0)).unwrap();
    let mut bytes = std::fs::read(&p).unwrap();
    bytes[0] = b'X';
    std::fs::write(&p, &bytes).unwrap();
    assert!(matches!(read_block(&p), Err(Error::Format { offset: 0, .. })));

    write_block(&p, &DMatrix::from_element(4, 2, 1.0)).unwrap();
    let mut bytes = std::fs::read(&p).unwrap();
    bytes.truncate(bytes.len() - 5);
    std::fs::write(&p, &bytes).unwrap();
    match read_block(&p) {
        Err(Error::Format { offset, .. }) => assert!(offset >= 24),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn manifest_with_mismatched_rows_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_block(&dir.path().join("a.cubb"), &DMatrix::zeros(3, 2)).unwrap();
    write_block(&dir.path().join("b.cubb"), &DMatrix::zeros(4, 2)).unwrap();
    let man = dir.path().join("m.json");
    std::fs::write(&man, r#"{"n": 3, "blocks": ["a.cubb", "b.cubb"]}"#).unwrap();
    assert!(FileBlocks::open(&man).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn truncation_error_respects_tolerance(seed in 0u64..1000, n in 5usize..40, m in 5usize..40, frac in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let eps = frac * a.norm();
        let f = svd_truncated(&a, eps, None).unwrap();
        let err = (f.reconstruct() - &a).norm();
        prop_assert!(err <= eps + 1e-12 * a.norm());
        prop_assert!((err - f.truncation_error).abs() <= 1e-10 * a.norm());
        prop_assert!(f.singular.as_slice().windows(2).all(|w| w[0] >= w[1]));
        let k = f.rank;
        prop_assert!((f.left.transpose() * &f.left - DMatrix::identity(k, k)).amax() < 1e-12);
        prop_assert!((f.right.transpose() * &f.right - DMatrix::identity(k, k)).amax() < 1e-12);
    }

    #[test]
    fn sequential_equals_dense(seed in 0u64..1000, p in 1usize..6, rank in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_low_rank(80, 50, rank, 1e5, &mut rng);
        let widths = random_partition(50, p, &mut rng);
        let (f, _) = srsvd(&MemoryBlocks::new(split_columns(&a, &widths)).unwrap(), 0.0, seed).unwrap();
        let d = svd_truncated(&a, 0.0, None).unwrap();
        prop_assert_eq!(f.rank, d.rank);
        prop_assert!(singular_value_difference(&d.singular, &f.singular) < 1e-10);
    }
}
