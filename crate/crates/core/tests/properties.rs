use proptest::prelude::*;

use pdcov::admm::{solve_correlation, theta_step, v1_step, v2_step, AdmConfig};
use pdcov::bench::sample_gaussian;
use pdcov::select::default_lambda_grid;
use pdcov::stats::{cov_to_corr, sample_cov};
use pdcov::{Family, PenaltySpec, SymMat};

fn correlation(d: usize, n: usize, seed: u64) -> SymMat {
    let cov = SymMat::from_upper(d, |i, j| if i == j { 1.0 } else { 0.6f64.powi((j - i) as i32) });
    cov_to_corr(&sample_cov(&sample_gaussian(&cov, n, seed).unwrap(), true)).unwrap()
}

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn estimate_is_feasible_and_tail_monotone(
        d in 2usize..7, n in 3usize..40, seed in 0u64..1000, fam in family(), lambda in 0.0f64..0.8,
    ) {
        let s = correlation(d, n, seed);
        let cfg = AdmConfig::default();
        let rep = solve_correlation(&s, &PenaltySpec::new(fam, lambda).unwrap(), &cfg, None).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(rep.theta_hat.diag().iter().all(|&v| v == 1.0));
        prop_assert!(rep.min_eig >= cfg.eps_floor - 1e-8);
        prop_assert!(rep.max_tail_increase() <= 1e-9);

        // one more cycle from the converged state barely moves it
        let st = &rep.state;
        let (c, dp) = cfg.prox_weights(st.rho);
        let v1 = v1_step(&st.theta, &st.v1, &PenaltySpec::new(fam, lambda).unwrap(), st.rho, c).unwrap();
        let v2 = v2_step(&st.theta, &st.v2, st.rho, dp, cfg.eps_floor).unwrap();
        let th = theta_step(&s, &v1, &v2, st.rho).unwrap();
        let moved = (th.frob_dist_sq(&st.theta).unwrap() + v1.frob_dist_sq(&st.v1).unwrap()
            + v2.frob_dist_sq(&st.v2).unwrap()).sqrt();
        prop_assert!(moved < 10.0 * cfg.tol, "moved {}", moved);
    }

    #[test]
    fn larger_lambda_is_not_denser_for_soft(d in 3usize..7, seed in 0u64..1000, l in 0.01f64..0.4) {
        let s = correlation(d, 30, seed);
        let cfg = AdmConfig::default();
        let a = solve_correlation(&s, &PenaltySpec::soft(l).unwrap(), &cfg, None).unwrap();
        let b = solve_correlation(&s, &PenaltySpec::soft(l * 2.0).unwrap(), &cfg, None).unwrap();
        prop_assert!(b.sparsity_offdiag >= a.sparsity_offdiag);
    }

    #[test]
    fn grid_is_ascending_and_capped(d in 2usize..8, seed in 0u64..1000, points in 2usize..12) {
        let s = correlation(d, 20, seed);
        let g = default_lambda_grid(&s, points).unwrap();
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(*g.last().unwrap(), s.max_abs_offdiag());
    }
}
