use super::*;
use crate::error::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(m: &SparseRowMatrix) -> DMatrix<f64> {
    let rows = m.to_dense();
    DMatrix::from_fn(m.n_rows(), m.n_cols(), |i, j| rows[i][j])
}

fn dense_r(r: &SparseUpperTriangular) -> DMatrix<f64> {
    let rows = r.to_dense();
    DMatrix::from_fn(r.n(), r.n(), |i, j| rows[i][j])
}

fn rel_gram_error(r: &SparseUpperTriangular, lambda: &DMatrix<f64>) -> f64 {
    let rd = dense_r(r);
    (rd.transpose() * rd - lambda).norm() / lambda.norm()
}

/// Random sparse matrix with every column hit by its own diagonal-ish row,
/// which keeps it full column rank with probability one.
fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> SparseRowMatrix {
    let mut m = SparseRowMatrix::new(cols);
    for i in 0..rows {
        let mut row = Vec::new();
        for c in 0..cols {
            if c == i % cols || rng.random::<f64>() < density {
                row.push((c, rng.random_range(-1.0..1.0)));
            }
        }
        m.push_row(row);
    }
    m
}

fn random_rhs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn stack(a: &SparseRowMatrix, b: &SparseRowMatrix) -> SparseRowMatrix {
    let mut out = SparseRowMatrix::new(a.n_cols().max(b.n_cols()));
    for row in a.rows().iter().chain(b.rows()) {
        out.push_row(row.clone());
    }
    out
}

fn assert_rows_close(a: &SparseUpperTriangular, b: &SparseUpperTriangular, tol: f64) {
    let (da, db) = (dense_r(&a.sign_normalized()), dense_r(&b.sign_normalized()));
    let err = (da - db).amax();
    assert!(err < tol, "factors differ by {err}");
}

#[test]
fn identity_factorizes_to_itself() {
    let a = SparseRowMatrix::from_dense(
        &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        3,
    );
    let (r, d, flops) = qr_factorize(&a, &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(r, SparseUpperTriangular::identity(3));
    assert_eq!(d, vec![1.0, 2.0, 3.0]);
    assert_eq!(flops.rotations, 0);
}

#[test]
fn zero_row_is_eliminated() {
    let a = SparseRowMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 3.0], vec![0.0, 0.0]], 2);
    let (r, _, _) = qr_factorize(&a, &[0.0; 3]).unwrap();
    assert_eq!(r.sign_normalized(), SparseUpperTriangular::from_diagonal(&[2.0, 3.0]));
}

#[test]
fn random_gram_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_matrix(&mut rng, 20, 12, 0.3);
    let rhs = random_rhs(&mut rng, 20);
    let (r, d, _) = qr_factorize(&a, &rhs).unwrap();
    let ad = dense(&a);
    let lambda = ad.transpose() * &ad;
    assert!(rel_gram_error(&r, &lambda) < 1e-9);

    // R x = d reproduces the normal-equation solution.
    let (x, _) = back_substitute(&r, &d).unwrap();
    let expected = lambda.cholesky().unwrap().solve(&(ad.transpose() * DVector::from_vec(rhs)));
    for (a, b) in x.iter().zip(expected.iter()) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn rank_deficiency_is_reported() {
    let a = SparseRowMatrix::from_dense(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]], 3);
    match qr_factorize(&a, &[0.0, 0.0]) {
        Err(Error::RankDeficient { column }) => assert_eq!(column, 1),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn empty_update_is_noop() {
    let r = SparseUpperTriangular::from_diagonal(&[1.0, 2.0]);
    let (out, d, flops) =
        partial_refactor(&r, &[1.0, 1.0], &SparseRowMatrix::new(2), &[], 0).unwrap();
    assert_eq!(out, r);
    assert_eq!(d, vec![1.0, 1.0]);
    assert_eq!(flops, FlopCounter::default());
}

#[test]
fn unit_row_on_last_column_gives_sqrt_two() {
    let r = SparseUpperTriangular::identity(2);
    let mut rows = SparseRowMatrix::new(2);
    rows.push_row(vec![(1, 1.0)]);
    let (out, _, _) = partial_refactor(&r, &[0.0, 0.0], &rows, &[0.0], 1).unwrap();
    assert!((out.get(1, 1).abs() - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(out.row(0), r.row(0));
}

#[test]
fn update_before_j_is_rejected() {
    let r = SparseUpperTriangular::identity(3);
    let mut rows = SparseRowMatrix::new(3);
    rows.push_row(vec![(0, 1.0), (2, 1.0)]);
    assert!(matches!(
        partial_refactor(&r, &[0.0; 3], &rows, &[0.0], 1),
        Err(Error::InvolvedBeforeJ { column: 0, j: 1 })
    ));
}

#[test]
fn affected_block_only_recomputes_trailing_rows() {
    // six columns, update touching the fourth
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_matrix(&mut rng, 10, 6, 0.4);
    let rhs = random_rhs(&mut rng, 10);
    let (r, d, _) = qr_factorize(&a, &rhs).unwrap();
    let mut upd = SparseRowMatrix::new(6);
    upd.push_row(vec![(3, 0.7), (5, -1.1)]);
    let (r2, d2, _) = partial_refactor(&r, &d, &upd, &[0.4], 3).unwrap();
    for i in 0..3 {
        assert_eq!(r2.row(i), r.row(i));
        assert_eq!(d2[i], d[i]);
    }
    let (batch, _, _) = qr_factorize(&stack(&a, &upd), &[rhs, vec![0.4]].concat()).unwrap();
    assert_rows_close(&r2, &batch, 1e-9);
}

#[test]
fn back_substitution_examples() {
    let (x, _) = back_substitute(&SparseUpperTriangular::identity(2), &[5.0, 6.0]).unwrap();
    assert_eq!(x, vec![5.0, 6.0]);

    let r = SparseUpperTriangular::from_dense(&[vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap();
    let (x, flops) = back_substitute(&r, &[4.0, 3.0]).unwrap();
    assert_eq!(x, vec![1.5, 1.0]);
    assert_eq!(flops.fma, 3);
}

#[test]
fn back_substitution_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 30;
    let dense_rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j == i {
                        rng.random_range(1.0..3.0)
                    } else if j > i && rng.random::<f64>() < 0.3 {
                        rng.random_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let r = SparseUpperTriangular::from_dense(&dense_rows).unwrap();
    let d = random_rhs(&mut rng, n);
    let (x, _) = back_substitute(&r, &d).unwrap();
    let rd = dense_r(&r);
    let expected = rd.solve_upper_triangular(&DVector::from_vec(d.clone())).unwrap();
    let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in x.iter().zip(expected.iter()) {
        assert!((a - b).abs() < 1e-9 * dmax.max(1.0));
    }
}

#[test]
fn log_determinant_examples() {
    assert_eq!(log_abs_det(&SparseUpperTriangular::identity(7)).unwrap(), 0.0);
    let v = log_abs_det(&SparseUpperTriangular::from_diagonal(&[2.0, 3.0])).unwrap();
    assert!((v - 6f64.ln()).abs() < 1e-15);
    assert!((v - 1.791759).abs() < 1e-6);
}

#[test]
fn log_determinant_matches_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_matrix(&mut rng, 25, 15, 0.3);
    let (r, _, _) = qr_factorize(&a, &[0.0; 25]).unwrap();
    let ad = dense(&a);
    let eig = (ad.transpose() * ad).symmetric_eigen();
    let half_logdet: f64 = 0.5 * eig.eigenvalues.iter().map(|l| l.ln()).sum::<f64>();
    assert!((log_abs_det(&r).unwrap() - half_logdet).abs() < 1e-8);
}

#[test]
fn identity_permutation_is_free() {
    let r = SparseUpperTriangular::from_diagonal(&[1.0, 2.0, 3.0]);
    let (out, d, flops) = permute_and_refactor(&r, &[1.0, 2.0, 3.0], &Permutation::identity(3)).unwrap();
    assert_eq!(out, r);
    assert_eq!(d, vec![1.0, 2.0, 3.0]);
    assert_eq!(flops.rotations, 0);
}

#[test]
fn swapping_trailing_columns_recomputes_band_only() {
    let r = SparseUpperTriangular::from_diagonal(&[1.0, 2.0, 3.0]);
    let perm = Permutation::from_new_to_old(vec![0, 2, 1]).unwrap();
    assert_eq!(perm.moved_range(), Some((1, 2)));
    let (out, _, _) = permute_and_refactor(&r, &[0.0; 3], &perm).unwrap();
    assert_eq!(out.row(0), r.row(0));
    assert_eq!(out.sign_normalized(), SparseUpperTriangular::from_diagonal(&[1.0, 3.0, 2.0]));
}

#[test]
fn middle_permutation_keeps_outer_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let a = random_matrix(&mut rng, 14, 8, 0.35);
    let (r, d, _) = qr_factorize(&a, &random_rhs(&mut rng, 14)).unwrap();
    let perm = Permutation::from_new_to_old(vec![0, 1, 4, 2, 5, 3, 6, 7]).unwrap();
    let (out, d2, _) = permute_and_refactor(&r, &d, &perm).unwrap();

    // rows below the band untouched, rows above relabeled only
    for i in 6..8 {
        assert_eq!(out.row(i), r.row(i));
        assert_eq!(d2[i], d[i]);
    }
    let old_to_new = perm.old_to_new();
    for i in 0..2 {
        let mut relabeled: Vec<_> = r.row(i).iter().map(|&(c, v)| (old_to_new[c], v)).collect();
        relabeled.sort_by_key(|e| e.0);
        assert_eq!(out.row(i), &relabeled[..]);
    }

    let ad = dense(&a);
    let p = DMatrix::from_fn(8, 8, |old, new| if perm.new_to_old()[new] == old { 1.0 } else { 0.0 });
    let lambda = p.transpose() * ad.transpose() * &ad * &p;
    assert!(rel_gram_error(&out, &lambda) < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn incremental_matches_batch(seed in 0u64..10_000, cols in 3usize..14, j_frac in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, cols + 4, cols, 0.3);
        let rhs = random_rhs(&mut rng, cols + 4);
        let (r, d, _) = qr_factorize(&a, &rhs).unwrap();
        let j = ((cols as f64) * j_frac) as usize;
        let mut upd = SparseRowMatrix::new(cols);
        for _ in 0..3 {
            let mut row = Vec::new();
            for c in j..cols {
                if c == j || rng.random::<f64>() < 0.4 {
                    row.push((c, rng.random_range(-1.0..1.0)));
                }
            }
            upd.push_row(row);
        }
        let upd_rhs = random_rhs(&mut rng, 3);
        let (inc, inc_d, inc_flops) = partial_refactor(&r, &d, &upd, &upd_rhs, j).unwrap();
        let stacked = stack(&a, &upd);
        let (batch, batch_d, batch_flops) =
            qr_factorize(&stacked, &[rhs, upd_rhs].concat()).unwrap();

        for i in 0..j {
            prop_assert_eq!(inc.row(i), r.row(i));
        }
        assert_rows_close(&inc, &batch, 1e-9);
        let sd = dense(&stacked);
        prop_assert!(rel_gram_error(&inc, &(sd.transpose() * &sd)) < 1e-9);
        prop_assert!(inc_flops.fma <= batch_flops.fma);

        // same least-squares solution from either factor
        let (x1, _) = back_substitute(&inc, &inc_d).unwrap();
        let (x2, _) = back_substitute(&batch, &batch_d).unwrap();
        for (a, b) in x1.iter().zip(&x2) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn permutation_preserves_gram_and_determinant(
        seed in 0u64..10_000,
        perm in (2usize..12).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle()),
    ) {
        let n = perm.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, n + 3, n, 0.3);
        let (r, d, _) = qr_factorize(&a, &random_rhs(&mut rng, n + 3)).unwrap();
        let p = Permutation::from_new_to_old(perm).unwrap();
        let (out, _, _) = permute_and_refactor(&r, &d, &p).unwrap();
        prop_assert!((log_abs_det(&out).unwrap() - log_abs_det(&r).unwrap()).abs() < 1e-10);

        let ad = dense(&a);
        let pm = DMatrix::from_fn(n, n, |old, new| if p.new_to_old()[new] == old { 1.0 } else { 0.0 });
        let lambda = pm.transpose() * ad.transpose() * &ad * &pm;
        prop_assert!(rel_gram_error(&out, &lambda) < 1e-9);

        if let Some((_, last)) = p.moved_range() {
            for i in (last + 1)..n {
                prop_assert_eq!(out.row(i), r.row(i));
            }
        }
    }
}
