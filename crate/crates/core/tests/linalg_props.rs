use nalgebra::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twr_precoding::linalg::{self, from_real_rows, identity, kron, mat, vec, ComplexMatrix};
use twr_precoding::Error;

type M = ComplexMatrix<f64>;

fn gaussian(rows: usize, cols: usize, seed: u64) -> M {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    linalg::complex_gaussian(rows, cols, &mut rng)
}

fn unitarity_error(u: &M) -> f64 {
    (u.adjoint() * u - identity::<f64>(u.ncols())).norm()
}

#[test]
fn svd_of_identity_and_diagonal() {
    let s = linalg::svd(&identity::<f64>(2)).unwrap();
    assert_eq!(s.singular_values, vec![1.0, 1.0]);
    assert!((s.reconstruct() - identity::<f64>(2)).norm() < 1e-14);
    let d = from_real_rows::<f64>(2, 2, &[3.0, 0.0, 0.0, 0.0]).unwrap();
    let s = linalg::svd(&d).unwrap();
    assert!((s.singular_values[0] - 3.0).abs() < 1e-14);
    assert!(s.singular_values[1].abs() < 1e-14);
}

#[test]
fn svd_reconstructs_tall_matrices() {
    for seed in 0..50 {
        let a = gaussian(4, 2, seed);
        let s = linalg::svd(&a).unwrap();
        assert!((s.reconstruct() - &a).norm() < 1e-10 * a.norm());
        assert!(unitarity_error(&s.u) < 1e-10);
        assert!(unitarity_error(&s.v) < 1e-10);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn gsvd_invariants_on_random_pairs() {
    let mut count = 0;
    for n in 2..=4 {
        for seed in 0..334u64 {
            let a = gaussian(n, n, 10_000 * n as u64 + 2 * seed);
            let b = gaussian(n, n, 10_000 * n as u64 + 2 * seed + 1);
            let g = linalg::gsvd(&a, &b).unwrap();
            let (ra, rb) = g.reconstruct();
            assert!((ra - &a).norm() <= 1e-9 * a.norm(), "n={n} seed={seed}");
            assert!((rb - &b).norm() <= 1e-9 * b.norm(), "n={n} seed={seed}");
            assert!(unitarity_error(&g.u1) < 1e-10);
            assert!(unitarity_error(&g.u2) < 1e-10);
            assert!(g.normalization_residual() < 1e-9);
            assert!(g.lambda1.iter().chain(&g.lambda2).all(|&x| x >= 0.0));
            count += 1;
        }
    }
    assert!(count >= 1000);
}

#[test]
fn gsvd_values_match_cs_reference() {
    // With a shared left factor, λ1/λ2 are the singular values of B⁻¹A.
    for seed in 0..20 {
        let a = gaussian(2, 2, 500 + 2 * seed);
        let b = gaussian(2, 2, 501 + 2 * seed);
        let g = linalg::gsvd(&a, &b).unwrap();
        let binv = b.clone().try_inverse().unwrap();
        let q = &binv * &a;
        let pencil = q.adjoint() * &q;
        let mut reference = linalg::hermitian_eigenvalues(&pencil).unwrap();
        reference.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut ours: Vec<f64> = g
            .lambda1
            .iter()
            .zip(&g.lambda2)
            .map(|(l1, l2)| (l1 / l2).powi(2))
            .collect();
        ours.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (o, r) in ours.iter().zip(&reference) {
            assert!((o - r).abs() <= 1e-8 * r.max(1.0), "{o} vs {r}");
        }
    }
}

#[test]
fn gsvd_identity_pair_and_rectangular_shapes() {
    let i2 = identity::<f64>(2);
    let g = linalg::gsvd(&i2, &i2).unwrap();
    let (ra, rb) = g.reconstruct();
    assert!((ra - &i2).norm() < 1e-9 && (rb - &i2).norm() < 1e-9);
    assert!(g.normalization_residual() < 1e-9);

    let a = gaussian(3, 2, 71);
    let b = gaussian(3, 2, 72);
    let g = linalg::gsvd(&a, &b).unwrap();
    let (ra, rb) = g.reconstruct();
    assert!((ra - &a).norm() < 1e-9 * a.norm());
    assert!((rb - &b).norm() < 1e-9 * b.norm());
    assert!(g.sigma1.row(0).iter().all(|z| z.norm() == 0.0));
    assert!(g.sigma2.row(2).iter().all(|z| z.norm() == 0.0));
}

#[test]
fn gsvd_rejects_degenerate_input() {
    let i2 = identity::<f64>(2);
    let z = linalg::zeros::<f64>(2, 2);
    assert!(matches!(linalg::gsvd(&i2, &z), Err(Error::IllConditioned(_))));
    let a = gaussian(5, 2, 1);
    assert!(matches!(linalg::gsvd(&a, &a), Err(Error::Dimension(_))));
}

#[test]
fn kron_examples() {
    let i2 = identity::<f64>(2);
    assert_eq!(kron(&i2, &i2), identity::<f64>(4));
    let a = from_real_rows::<f64>(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
    let b = from_real_rows::<f64>(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
    let k = kron(&a, &b);
    let block = k.view((0, 2), (2, 2)).into_owned();
    assert_eq!(block, from_real_rows::<f64>(2, 2, &[0.0, 2.0, 2.0, 0.0]).unwrap());
}

#[test]
fn vec_is_column_stacking() {
    let a = from_real_rows::<f64>(2, 2, &[1.0, 3.0, 2.0, 4.0]).unwrap();
    let v: Vec<f64> = vec(&a).iter().map(|z| z.re).collect();
    assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0]);
    let b = gaussian(3, 2, 9);
    assert_eq!(mat(&vec(&b), 3, 2).unwrap(), b);
    assert!(matches!(mat(&vec(&b), 4, 2), Err(Error::Dimension(_))));
}

#[test]
fn hermitian_solve_examples() {
    let b = gaussian(3, 2, 4);
    let x = linalg::solve_hermitian_psd(&identity::<f64>(3), &b).unwrap();
    assert!((x - &b).norm() < 1e-15);
    let a = from_real_rows::<f64>(2, 2, &[2.0, 0.0, 0.0, 4.0]).unwrap();
    let rhs = from_real_rows::<f64>(2, 1, &[2.0, 4.0]).unwrap();
    let x = linalg::solve_hermitian_psd(&a, &rhs).unwrap();
    assert!((x[(0, 0)].re - 1.0).abs() < 1e-15 && (x[(1, 0)].re - 1.0).abs() < 1e-15);
    let indefinite = from_real_rows::<f64>(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
    assert!(matches!(
        linalg::solve_hermitian_psd(&indefinite, &rhs),
        Err(Error::NotPositiveDefinite(_))
    ));
}

#[test]
fn psd_examples() {
    assert!(linalg::is_psd(&identity::<f64>(3), 1e-12).unwrap());
    let d = from_real_rows::<f64>(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
    assert!(!linalg::is_psd(&d, 1e-12).unwrap());
    assert!(linalg::is_psd(&gaussian(2, 3, 1), 1e-12).is_err());
}

fn cmatrix(rows: usize, cols: usize) -> impl Strategy<Value = M> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), rows * cols)
        .prop_map(move |v| M::from_iterator(rows, cols, v.into_iter().map(|(r, i)| Complex::new(r, i))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn vec_kron_identity(a in cmatrix(2, 3), x in cmatrix(3, 2), b in cmatrix(2, 2)) {
        let lhs = vec(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec(&x);
        let scale = a.norm() * x.norm() * b.norm() + 1.0;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
    }

    #[test]
    fn kron_of_psd_is_psd(p in cmatrix(2, 2), q in cmatrix(3, 3)) {
        let pp = &p * p.adjoint();
        let qq = &q * q.adjoint();
        let k = kron(&pp, &qq);
        let k = (&k + k.adjoint()) * Complex::new(0.5, 0.0);
        prop_assert!(linalg::is_psd(&k, 1e-9 * (1.0 + k.norm())).unwrap());
    }

    #[test]
    fn hermitian_solve_residual(m in cmatrix(3, 3), b in cmatrix(3, 2)) {
        let a = m.adjoint() * &m + identity::<f64>(3);
        let x = linalg::solve_hermitian_psd(&a, &b).unwrap();
        prop_assert!((&a * x - &b).norm() <= 1e-9 * (b.norm() + 1e-300));
    }

    #[test]
    fn mat_inverts_vec(a in cmatrix(3, 2)) {
        prop_assert_eq!(mat(&vec(&a), 3, 2).unwrap(), a);
    }
}
