mod common;

use common::*;
use gpca_core::graph::normalize;
use gpca_core::linalg::{sym_eig_topk, sym_eig_with, symmetrize, CsrMatrix, EigenMethod};
use gpca_core::par::Execution;
use gpca_core::DenseMatrix;
use proptest::prelude::*;
use rand::Rng;

fn random_symmetric(n: usize, r: &mut impl Rng) -> DenseMatrix {
    symmetrize(&random_matrix(n, n, r)).unwrap()
}

fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).unwrap().max_abs()
}

#[test]
fn two_by_two_closed_form() {
    // [[2, 1], [1, 2]] has eigenvalues 3 and 1 with vectors (1, 1)/√2 and (1, −1)/√2.
    let m = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
    let e = sym_eig_with(&m, EigenMethod::Jacobi).unwrap();
    assert!((e.values[0] - 3.0).abs() < 1e-14);
    assert!((e.values[1] - 1.0).abs() < 1e-14);
    let s = 0.5f64.sqrt();
    assert!((e.vectors.get(0, 0) - s).abs() < 1e-14);
    assert!((e.vectors.get(1, 0) - s).abs() < 1e-14);
    assert!((e.vectors.get(0, 1).abs() - s).abs() < 1e-14);
    assert!((e.vectors.get(0, 1) + e.vectors.get(1, 1)).abs() < 1e-14);
}

#[test]
fn three_by_three_roots_of_characteristic_polynomial() {
    // Tridiagonal [[2, −1, 0], [−1, 2, −1], [0, −1, 2]]: eigenvalues 2 − √2, 2, 2 + √2.
    let m = DenseMatrix::from_rows(&[[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]).unwrap();
    let want = [2.0 + 2f64.sqrt(), 2.0, 2.0 - 2f64.sqrt()];
    for method in [EigenMethod::Jacobi, EigenMethod::Tridiagonal] {
        let e = sym_eig_with(&m, method).unwrap();
        for (g, w) in e.values.iter().zip(want) {
            assert!((g - w).abs() < 1e-13, "{method:?}: {g} vs {w}");
        }
    }
}

#[test]
fn diagonal_input_is_sorted_descending() {
    let m = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, -2.0]]).unwrap();
    let e = sym_eig_topk(&m, 2).unwrap();
    assert_eq!(e.values, vec![5.0, 1.0]);
    assert_eq!(e.vectors.column(0), vec![0.0, 1.0, 0.0]);
}

#[test]
fn agrees_with_nalgebra_spectrum() {
    let mut r = rng(21);
    let m = random_symmetric(40, &mut r);
    let mut want: Vec<f64> = nalgebra::SymmetricEigen::new(to_na(&m)).eigenvalues.iter().copied().collect();
    want.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let got = sym_eig_with(&m, EigenMethod::Jacobi).unwrap().values;
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-11);
    }
}

#[test]
fn sparse_kernels_match_dense_products() {
    let mut r = rng(8);
    let mut x = random_matrix(30, 12, &mut r);
    for v in x.as_mut_slice() {
        if r.gen::<f64>() < 0.7 {
            *v = 0.0;
        }
    }
    let s = CsrMatrix::from_dense(&x);
    assert_eq!(s.to_dense(), x);
    let w = random_matrix(12, 5, &mut r);
    assert!(max_abs_diff(&s.matmul(&w).unwrap(), &x.matmul(&w).unwrap()) < 1e-13);
    let g = random_matrix(30, 4, &mut r);
    assert!(max_abs_diff(&s.t_matmul(&g).unwrap(), &x.t_matmul(&g).unwrap()) < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decomposition_reconstructs(seed in any::<u64>(), n in 1usize..24, tri in any::<bool>()) {
        let mut r = rng(seed);
        let m = random_symmetric(n, &mut r);
        let method = if tri { EigenMethod::Tridiagonal } else { EigenMethod::Jacobi };
        let e = sym_eig_with(&m, method).unwrap();
        let v = &e.vectors;
        let gram = v.t_matmul(v).unwrap();
        prop_assert!(max_abs_diff(&gram, &DenseMatrix::identity(n)) < 1e-12);
        let mut vl = v.clone();
        for j in 0..n {
            let col: Vec<f64> = v.column(j).iter().map(|x| x * e.values[j]).collect();
            vl.set_column(j, &col);
        }
        prop_assert!(max_abs_diff(&vl.matmul_t(v).unwrap(), &m) < 1e-11);
        let trace: f64 = e.values.iter().sum();
        prop_assert!((trace - m.trace()).abs() < 1e-11 * (1.0 + m.trace().abs()));
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn methods_span_the_same_top_space(seed in any::<u64>(), n in 2usize..20) {
        let mut r = rng(seed);
        let m = random_symmetric(n, &mut r);
        let a = sym_eig_with(&m, EigenMethod::Jacobi).unwrap();
        let b = sym_eig_with(&m, EigenMethod::Tridiagonal).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-11);
        }
        // a simple top eigenvalue fixes its signed eigenvector
        if a.values[0] - a.values[1] > 1e-6 {
            let (u, v) = (a.vectors.column(0), b.vectors.column(0));
            let diff = u.iter().zip(&v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(diff < 1e-8);
        }
    }

    #[test]
    fn normalized_adjacency_is_symmetric(seed in any::<u64>(), n in 1usize..40) {
        let g = random_graph(n, 0.2, &mut rng(seed));
        let a = normalize(&g).to_dense();
        prop_assert_eq!(a.transpose(), a.clone());
        let want = from_na(&dense_normalized(&g));
        prop_assert!(max_abs_diff(&a, &want) < 1e-15);
    }

    #[test]
    fn spmm_matches_dense_and_is_schedule_independent(seed in any::<u64>(), n in 1usize..120, d in 1usize..9) {
        let mut r = rng(seed);
        let g = random_graph(n, 0.1, &mut r);
        let x = random_matrix(n, d, &mut r);
        let adj = normalize(&g);
        let got = adj.spmm(&x).unwrap();
        prop_assert!(max_abs_diff(&got, &adj.to_dense().matmul(&x).unwrap()) < 1e-13);
        prop_assert_eq!(adj.spmm_with(Execution::Sequential, &x).unwrap(), got);
    }
}
