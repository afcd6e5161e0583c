//! Dense symmetric-matrix primitives shared by both solvers.

mod dense;
mod eigen;
pub mod io;
mod sym;

pub use dense::Dense;
pub use eigen::{
    eig_sym, floor_feasible, frob_norm, hadamard_div, min_eigenvalue, spec_norm, spectral_floor,
    EigenPair,
};
pub use sym::SymMat;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(d: usize, seed: u64) -> SymMat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymMat::from_upper(d, |_, _| rng.random_range(-1.0..1.0))
    }

    fn max_entry_gap(a: &SymMat<f64>, b: &SymMat<f64>) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_spectrum() {
        let eig = eig_sym(&SymMat::<f64>::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
        let vtv = eig.vectors.transpose().matmul(&eig.vectors).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vtv.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_spectrum_is_axis_permutation() {
        let m = SymMat::from_diag(&[3.0, -1.0]);
        let eig = eig_sym(&m).unwrap();
        assert_eq!(eig.values, vec![3.0, -1.0]);
        assert_eq!(eig.vectors, Dense::identity(2));

        let eig = eig_sym(&SymMat::from_diag(&[-1.0, 3.0])).unwrap();
        assert_eq!(eig.values, vec![3.0, -1.0]);
        assert_eq!(eig.vectors.get(1, 0), 1.0);
        assert_eq!(eig.vectors.get(0, 1), 1.0);
    }

    #[test]
    fn random_reconstruction() {
        for seed in 0..20 {
            let m = random_sym(5, seed);
            let eig = eig_sym(&m).unwrap();
            let back = eig.reconstruct();
            assert!(max_entry_gap(&m, &back) < 1e-8 * m.max_abs());
            let vtv = eig.vectors.transpose().matmul(&eig.vectors).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv.get(i, j) - want).abs() < 1e-10);
                }
            }
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigenvector_sign_convention() {
        let m = random_sym(7, 99);
        let eig = eig_sym(&m).unwrap();
        for k in 0..7 {
            let col: Vec<f64> = (0..7).map(|i| eig.vectors.get(i, k)).collect();
            let big = col.iter().cloned().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(big > 0.0);
        }
        assert_eq!(eig, eig_sym(&m).unwrap());
    }

    #[test]
    fn one_by_one() {
        let m = SymMat::<f64>::new(1, vec![-2.5]).unwrap();
        let eig = eig_sym(&m).unwrap();
        assert_eq!(eig.values, vec![-2.5]);
        assert!((spectral_floor(&m, 0.1).unwrap().get(0, 0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn nonfinite_rejected() {
        assert!(matches!(
            SymMat::new(2, vec![1.0, f64::NAN, 0.0, 1.0]),
            Err(crate::Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn construction_symmetrizes() {
        let m = SymMat::new(2, vec![1.0, 2.0, 4.0, 1.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn floor_examples() {
        let m = SymMat::<f64>::from_diag(&[3.0, -0.5]);
        let out = spectral_floor(&m, 0.1).unwrap();
        assert_eq!(out.get(0, 0), 3.0);
        assert_eq!(out.get(0, 1), 0.0);
        assert!((out.get(1, 1) - 0.1).abs() < 1e-15);
        let id = SymMat::<f64>::identity(4);
        assert_eq!(spectral_floor(&id, 0.5).unwrap(), id);
        for seed in 0..10 {
            let m = random_sym(6, seed + 100);
            let out = spectral_floor(&m, 1e-3).unwrap();
            assert!(min_eigenvalue(&out).unwrap() >= 1e-3 - 1e-10);
        }
        assert!(spectral_floor(&id, 0.0).is_err());
    }

    #[test]
    fn norms() {
        let z = SymMat::<f64>::zeros(3);
        assert_eq!(frob_norm(&z).unwrap(), 0.0);
        assert_eq!(spec_norm(&z).unwrap(), 0.0);
        let id = SymMat::<f64>::identity(3);
        assert!((frob_norm(&id).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!((spec_norm(&id).unwrap() - 1.0).abs() < 1e-15);
        let m = SymMat::from_diag(&[2.0, -5.0]);
        assert!((frob_norm(&m).unwrap() - 29f64.sqrt()).abs() < 1e-15);
        assert!((spec_norm(&m).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn hadamard_division() {
        let a = random_sym(3, 5);
        let ones = SymMat::from_upper(3, |_, _| 1.0);
        assert_eq!(hadamard_div(&a, &ones).unwrap(), a);
        let b = a.map(|v| v + 3.0);
        assert_eq!(hadamard_div(&b, &b).unwrap(), ones);
        let x = SymMat::from_rows(&[vec![2.0, 4.0], vec![4.0, 8.0]]).unwrap();
        let y = SymMat::from_upper(2, |_, _| 2.0);
        let want = SymMat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(hadamard_div(&x, &y).unwrap(), want);
        let mut z = y.clone();
        z.set_sym(0, 1, 0.0);
        assert!(matches!(hadamard_div(&x, &z), Err(crate::Error::DivByZero { row: 0, col: 1 })));
    }

    #[test]
    fn text_format_roundtrip_and_checks() {
        let m = random_sym(4, 8);
        let back: SymMat<f64> = io::parse_sym_matrix(&io::format_sym_matrix(&m)).unwrap();
        assert_eq!(back, m);
        let text = "2\n1 0.5\n0.5000000000001 1\n";
        let parsed: SymMat<f64> = io::parse_sym_matrix(text).unwrap();
        assert_eq!(parsed.get(0, 1), parsed.get(1, 0));
        assert!(matches!(
            io::parse_sym_matrix::<f64>("2\n1 0.5\n0.6 1\n"),
            Err(crate::Error::NotSymmetric { .. })
        ));
        assert!(io::parse_sym_matrix::<f64>("2\n1 0.5\n").is_err());
        let a = Dense::from_rows(&[vec![1.0, 2.0, 3.0], vec![-4.0, 0.5, 6.0]]).unwrap();
        assert_eq!(io::parse_dense_matrix::<f64>(&io::format_dense_matrix(&a)).unwrap(), a);
    }

    #[test]
    fn single_precision_floor() {
        let m = SymMat::<f32>::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let out = spectral_floor(&m, 0.01).unwrap();
        assert!(min_eigenvalue(&out).unwrap() >= 0.01 - 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn floor_is_idempotent_and_nearest(d in 1usize..8, seed in any::<u64>(), eps in 1e-3f64..0.5) {
            let m = random_sym(d, seed);
            let once = spectral_floor(&m, eps).unwrap();
            let twice = spectral_floor(&once, eps).unwrap();
            prop_assert!(max_entry_gap(&once, &twice) < 1e-10);
            prop_assert!(min_eigenvalue(&once).unwrap() >= eps - 1e-10);
            // any feasible X: a random matrix pushed above the floor
            let x = random_sym(d, seed ^ 0x5eed);
            let shift = (eps - min_eigenvalue(&x).unwrap()).max(0.0);
            let x = x.shift_diag(shift);
            let to_floor = m.frob_dist_sq(&once).unwrap().sqrt();
            let to_x = m.frob_dist_sq(&x).unwrap().sqrt();
            prop_assert!(to_floor <= to_x + 1e-8);
        }

        #[test]
        fn spectral_vs_frobenius_and_trace(d in 1usize..9, seed in any::<u64>()) {
            let m = random_sym(d, seed);
            prop_assert!(spec_norm(&m).unwrap() <= frob_norm(&m).unwrap() + 1e-12);
            let eig = eig_sym(&m).unwrap();
            let sum: f64 = eig.values.iter().sum();
            prop_assert!((sum - m.trace()).abs() <= 1e-8 * d as f64 * m.max_abs().max(1e-300));
        }
    }
}
