mod common;

use common::{brute_psd, random_matrix, random_symmetric, random_vector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realrad::numlin::{
    least_norm_update, orthonormal_complement, psd_project, rank_kernel, smat, subspace_contained,
    svec, LeastNormProjector, SubspaceBasis, ToleranceConfig,
};

const TOL: f64 = 1e-10;

fn orthonormal(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().qr().q()
}

#[test]
fn rank_examples() {
    let rk = rank_kernel(&DMatrix::identity(3, 3), TOL).unwrap();
    assert_eq!((rk.rank, rk.kernel.dim()), (3, 0));

    let a = DMatrix::from_row_slice(
        2,
        9,
        &[
            -2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, //
            2.0, 0.0, 0.0, 0.0, -3.0, 0.0, 0.0, 0.0, 1.0,
        ],
    );
    let rk = rank_kernel(&a, TOL).unwrap();
    assert_eq!((rk.rank, rk.kernel.dim()), (2, 7));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = random_vector(6, &mut rng);
    let v = random_vector(5, &mut rng);
    let noisy = &u * v.transpose() + random_matrix(6, 5, &mut rng) * 1e-14;
    assert_eq!(rank_kernel(&noisy, TOL).unwrap().rank, 1);

    let mut bad = DMatrix::identity(2, 2);
    bad[(0, 1)] = f64::NAN;
    assert!(rank_kernel(&bad, TOL).is_err());
}

#[test]
fn complement_examples() {
    let mut e1 = DMatrix::zeros(5, 1);
    e1[(0, 0)] = 1.0;
    let v = orthonormal_complement(&e1, TOL).unwrap();
    assert_eq!(v.shape(), (5, 4));
    assert!(v.row(0).norm() < 1e-12);

    let b = DMatrix::from_column_slice(5, 1, &[2.0, 0.0, 0.0, 0.0, -1.0]);
    let v = orthonormal_complement(&b, TOL).unwrap();
    assert_eq!(v.shape(), (5, 4));
    assert!((v.transpose() * &b).norm() < 1e-12);
    assert!((v.transpose() * &v - DMatrix::identity(4, 4)).norm() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = orthonormal(&random_matrix(10, 3, &mut rng));
    let v = orthonormal_complement(&q, TOL).unwrap();
    assert_eq!(v.shape(), (10, 7));
    let mut full = DMatrix::zeros(10, 10);
    full.columns_mut(0, 3).copy_from(&q);
    full.columns_mut(3, 7).copy_from(&v);
    assert!((full.transpose() * &full - DMatrix::identity(10, 10)).norm() < 1e-12);

    let dep = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
    assert!(orthonormal_complement(&dep, TOL).is_err());
}

#[test]
fn psd_examples() {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
    let p = psd_project(&d).unwrap();
    assert!((p - DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))).norm() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_matrix(6, 6, &mut rng);
    let psd = &a * a.transpose();
    assert!((psd_project(&psd).unwrap() - &psd).norm() < 1e-12);
}

#[test]
fn psd_matches_brute_force_and_is_nearest() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..100 {
        let s = random_symmetric(8, &mut rng);
        let p = psd_project(&s).unwrap();
        assert!((&p - brute_psd(&s)).amax() <= 1e-12, "trial {trial}");
        if trial < 3 {
            let dist = (&p - &s).norm();
            for _ in 0..1000 {
                let g = random_matrix(8, 8, &mut rng);
                let cand = &g * g.transpose() * rng.random_range(0.0..0.5);
                assert!((&cand - &s).norm() >= dist - 1e-12);
            }
        }
    }
}

#[test]
fn least_norm_examples() {
    let tol = ToleranceConfig::default();
    let l = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let b = DVector::from_vec(vec![1.0]);
    let up = least_norm_update(&l, &DVector::from_vec(vec![0.0, 5.0]), &b, &tol).unwrap();
    assert!((up.point - DVector::from_vec(vec![1.0, 5.0])).norm() < 1e-15);
    assert!(up.feasible);

    let fixed = DVector::from_vec(vec![1.0, -2.0]);
    let up = least_norm_update(&l, &fixed, &b, &tol).unwrap();
    assert_eq!(up.point, fixed);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let l = random_matrix(10, 30, &mut rng);
    let pstar = random_vector(30, &mut rng);
    let b = &l * &pstar;
    let pc = random_vector(30, &mut rng);
    let up = least_norm_update(&l, &pc, &b, &tol).unwrap();
    assert!((&l * &up.point - &b).norm() <= 1e-11);
    let best = (&up.point - &pc).norm();
    let kernel = rank_kernel(&l, TOL).unwrap().kernel;
    for _ in 0..1000 {
        let q = &pstar + kernel.matrix() * random_vector(20, &mut rng) * 3.0;
        assert!((&l * &q - &b).norm() < 1e-10);
        assert!(best <= (&q - &pc).norm() + 1e-12);
    }
}

#[test]
fn inconsistent_system_flagged() {
    let tol = ToleranceConfig::default();
    let l = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let b = DVector::from_vec(vec![1.0, -1.0]);
    let up = least_norm_update(&l, &DVector::zeros(2), &b, &tol).unwrap();
    assert!(!up.feasible);
    assert!(up.residual > 1.0);
    let proj = LeastNormProjector::new(&l, &b, TOL).unwrap();
    assert_eq!((proj.rank(), proj.dropped()), (1, 1));
    assert!(proj.inconsistency() > 1.0);
}

#[test]
fn svec_examples() {
    let v = svec(&DMatrix::identity(2, 2));
    assert_eq!(v.as_slice(), &[1.0, 0.0, 1.0]);
    let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    assert!((svec(&s)[1] - std::f64::consts::SQRT_2).abs() < 1e-15);
    assert!(smat(&DVector::zeros(4)).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = random_symmetric(7, &mut rng);
    assert!((smat(&svec(&s)).unwrap() - &s).amax() <= 1e-15 * s.amax());
}

#[test]
fn containment_examples() {
    let tol = 1e-8;
    let e = |i: usize, n: usize| {
        let mut v = DMatrix::zeros(n, 1);
        v[(i, 0)] = 1.0;
        v
    };
    let a = SubspaceBasis::from_orthonormal(e(0, 4));
    let mut e12 = DMatrix::zeros(4, 2);
    e12[(0, 0)] = 1.0;
    e12[(1, 1)] = 1.0;
    let b = SubspaceBasis::from_orthonormal(e12);
    assert!(subspace_contained(&a, &a, tol));
    assert!(subspace_contained(&a, &b, tol));
    assert!(!subspace_contained(&b, &a, tol));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let big = orthonormal(&random_matrix(9, 5, &mut rng));
    let small = orthonormal(&(&big * random_matrix(5, 3, &mut rng)));
    let sup = SubspaceBasis::from_orthonormal(big.clone());
    assert!(subspace_contained(&SubspaceBasis::from_orthonormal(small.clone()), &sup, tol));

    let c = orthonormal_complement(&big, TOL).unwrap();
    let mut grown = DMatrix::zeros(9, 4);
    grown.columns_mut(0, 3).copy_from(&small);
    grown.column_mut(3).copy_from(&c.column(0));
    assert!(!subspace_contained(&SubspaceBasis::from_orthonormal(grown), &sup, tol));
}

fn sym(side: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0f64..10.0, side * side).prop_map(move |v| {
        let a = DMatrix::from_vec(side, side, v);
        (&a + a.transpose()) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svec_is_an_isometry((a, b) in (1usize..8).prop_flat_map(|s| (sym(s), sym(s)))) {
        let (mut frob, mut mag) = (0.0, 0.0f64);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                frob += a[(i, j)] * b[(i, j)];
                mag += (a[(i, j)] * b[(i, j)]).abs();
            }
        }
        prop_assert!((svec(&a).dot(&svec(&b)) - frob).abs() <= 1e-13 * mag.max(1.0));
        prop_assert!((smat(&svec(&a)).unwrap() - &a).amax() <= 1e-15 * a.amax().max(1.0));
    }

    #[test]
    fn psd_projection_idempotent_and_lipschitz((a, b) in (1usize..8).prop_flat_map(|s| (sym(s), sym(s)))) {
        let pa = psd_project(&a).unwrap();
        let ppa = psd_project(&pa).unwrap();
        prop_assert!((&ppa - &pa).norm() <= 1e-12 * pa.norm().max(1.0));
        let pb = psd_project(&b).unwrap();
        prop_assert!((&pa - &pb).norm() <= (&a - &b).norm() + 1e-12);
    }

    #[test]
    fn rank_kernel_splits_columns(rows in 1usize..7, cols in 1usize..9, rank in 0usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = rank.min(rows).min(cols);
        let a = random_matrix(rows, r, &mut rng) * random_matrix(r, cols, &mut rng);
        let rk = rank_kernel(&a, TOL).unwrap();
        prop_assert_eq!(rk.rank, r);
        prop_assert_eq!(rk.rank + rk.kernel.dim(), cols);
        let cross = rk.rowspace.matrix().transpose() * rk.kernel.matrix();
        prop_assert!(cross.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn least_norm_idempotent(rows in 1usize..6, extra in 1usize..10, seed in any::<u64>()) {
        let tol = ToleranceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_matrix(rows, rows + extra, &mut rng);
        let b = random_vector(rows, &mut rng);
        let once = least_norm_update(&l, &random_vector(rows + extra, &mut rng), &b, &tol).unwrap();
        let twice = least_norm_update(&l, &once.point, &b, &tol).unwrap();
        prop_assert!((&twice.point - &once.point).norm() <= 1e-12 * once.point.norm().max(1.0));
    }
}
