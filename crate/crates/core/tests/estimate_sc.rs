mod common;

use common::*;
use mpchan::channel::RfChain;
use mpchan::estimate_sc::{
    aa_estimate, aa_mse_matrices, ab_estimate, ab_mse_matrix, mismatch_constants, mismatched_mse, observe,
    stack_observations, AaEstimator, AbEstimator, PilotBlock,
};
use mpchan::matrixkit::{cholesky_lower, hermitian_eig, CMat, C64};
use mpchan::random::{complex_normal_matrix, stream};
use proptest::prelude::*;

#[test]
fn ab_approaches_least_squares() {
    let mut rng = stream(4);
    let pilots = PilotBlock::orthogonal(2, 2).unwrap();
    let y = complex_normal_matrix(&mut rng, 3, 2);
    let (y_tilde, a) = stack_observations(&y, &pilots).unwrap();
    let rho = 2.5;
    let est = ab_estimate(&y_tilde, &a, rho, 1e-12, 1.0).unwrap();
    let x = pilots.x();
    let gram_inv = na_inverse(&x.mul_adjoint(x));
    let ls = (&(&y * &x.adjoint()) * &gram_inv).scale_re(1.0 / rho.sqrt());
    let got = CMat::col_vec(&est.vec_h_eff_hat);
    assert!(got.max_abs_diff(&CMat::col_vec(&ls.vec())) < 1e-9);
}

#[test]
fn ab_matches_dense_formula() {
    let mut rng = stream(8);
    let pilots = PilotBlock::bpsk(&mut rng, 2, 4).unwrap();
    let y = complex_normal_matrix(&mut rng, 2, 4);
    let (y_tilde, a) = stack_observations(&y, &pilots).unwrap();
    let (rho, c1, c2) = (0.8, 0.3, 1.7);
    let est = ab_estimate(&y_tilde, &a, rho, c1, c2).unwrap();
    let sigma = &CMat::identity(8).scale_re(c1) + &(&a * &a.adjoint()).scale_re(rho * c2);
    let w = (&na_inverse(&sigma) * &a).scale_re(rho.sqrt() * c2);
    let oracle = w.adjoint().mul_vec(&y_tilde);
    assert!(sq_dist(&est.vec_h_eff_hat, &oracle).sqrt() < 1e-10 * sq_norm(&oracle).sqrt());
}

#[test]
fn aa_matches_joint_covariance_lmmse() {
    let link = coupled_link(2, 2, 0.7, 21);
    let mut rng = stream(9);
    let pilots = PilotBlock::bpsk(&mut rng, 2, 3).unwrap();
    let rho = rho_for_snr_db(5.0);
    let real = link.draw(&mut rng);
    let chol = cholesky_lower(&link.r_n).unwrap();
    let y = observe(&real.h_eff, &pilots, rho, &chol, &mut rng).unwrap();
    let out = aa_estimate(&y, &pilots, &link, rho).unwrap();

    let (y_tilde, a) = stack_observations(&y, &pilots).unwrap();
    let r_heff = link.covariances().r_heff;
    let r_yy = &(&(&a * &r_heff) * &a.adjoint()).scale_re(rho) + &CMat::identity(3).kron(&link.r_n);
    let r_xy = (&r_heff * &a.adjoint()).scale_re(rho.sqrt());
    let oracle = (&r_xy * &na_inverse(&r_yy)).mul_vec(&y_tilde);
    let err = sq_dist(&out.estimate.vec_h_eff_hat, &oracle).sqrt();
    assert!(err < 1e-10 * sq_norm(&oracle).sqrt(), "{err}");
}

#[test]
fn matched_arrays_collapse() {
    let link = matched_link(3, 2);
    let (c1, c2) = mismatch_constants(&link.covariances().r_heff, &RfChain::default());
    let chol = cholesky_lower(&link.r_n).unwrap();
    let mut rng = stream(12);
    for snr in [-5.0, 10.0, 25.0] {
        let rho = rho_for_snr_db(snr);
        let pilots = PilotBlock::bpsk(&mut rng, 3, 5).unwrap();
        let real = link.draw(&mut rng);
        let y = observe(&real.h_eff, &pilots, rho, &chol, &mut rng).unwrap();
        let (y_tilde, a) = stack_observations(&y, &pilots).unwrap();
        let ab = ab_estimate(&y_tilde, &a, rho, c1, c2).unwrap();
        let aa = aa_estimate(&y, &pilots, &link, rho).unwrap();
        let scale = sq_norm(&ab.vec_h_eff_hat).sqrt();
        assert!(sq_dist(&ab.vec_h_eff_hat, &aa.estimate.vec_h_eff_hat).sqrt() < 1e-10 * scale);
    }
}

#[test]
fn aa_is_consistent_at_high_power() {
    let link = coupled_link(2, 2, 0.8, 3);
    let pilots = PilotBlock::orthogonal(2, 4).unwrap();
    let chol = cholesky_lower(&link.r_n).unwrap();
    let mut last = f64::INFINITY;
    for snr in [10.0, 20.0, 30.0] {
        let rho = rho_for_snr_db(snr);
        let est = AaEstimator::new(&link, &pilots, rho).unwrap();
        let mut rng = stream(77);
        let (mut err, mut pow) = (0.0, 0.0);
        for _ in 0..2000 {
            let real = link.draw(&mut rng);
            let y = observe(&real.h_eff, &pilots, rho, &chol, &mut rng).unwrap();
            let out = est.apply(&y).unwrap();
            err += sq_dist(&out.estimate.vec_h_eff_hat, &real.h_eff.vec());
            pow += real.h_eff.fro_norm_sqr();
        }
        let nmse = err / pow;
        assert!(nmse < last * 0.5, "{nmse} vs {last}");
        last = nmse;
    }
    assert!(last < 1e-2);
}

fn monte_carlo_traces(snr_db: f64, trials: usize) -> (f64, f64, f64, f64) {
    let link = coupled_link(2, 2, 0.7, 5);
    let cov = link.covariances();
    let (c1, c2) = mismatch_constants(&cov.r_heff, &RfChain::default());
    let rho = rho_for_snr_db(snr_db);
    let pilots = PilotBlock::bpsk(&mut stream(1), 2, 8).unwrap();
    let chol = cholesky_lower(&link.r_n).unwrap();
    let (_, a) = stack_observations(&CMat::zeros(2, 8), &pilots).unwrap();
    let ab = AbEstimator::new(&a, rho, c1, c2).unwrap();
    let aa = AaEstimator::new(&link, &pilots, rho).unwrap();
    let mut rng = stream(2024);
    let (mut e_ab, mut e_aa) = (0.0, 0.0);
    for _ in 0..trials {
        let real = link.draw(&mut rng);
        let y = observe(&real.h_eff, &pilots, rho, &chol, &mut rng).unwrap();
        let truth = real.h_eff.vec();
        e_ab += sq_dist(&ab.apply(&y.vec()).unwrap().vec_h_eff_hat, &truth);
        e_aa += sq_dist(&aa.apply(&y).unwrap().estimate.vec_h_eff_hat, &truth);
    }
    let theory_ab = ab_mse_matrix(&a, rho, c1, c2, &cov.r_heff, &link.r_n).unwrap().trace().re;
    let theory_aa = aa.mse_matrices().unwrap().1.trace().re;
    (e_ab / trials as f64, theory_ab, e_aa / trials as f64, theory_aa)
}

#[test]
fn mse_traces_match_monte_carlo() {
    for snr in [0.0, 15.0] {
        let (emp_ab, th_ab, emp_aa, th_aa) = monte_carlo_traces(snr, 100_000);
        assert!((emp_ab / th_ab - 1.0).abs() < 0.03, "AB {emp_ab} vs {th_ab}");
        assert!((emp_aa / th_aa - 1.0).abs() < 0.03, "AA {emp_aa} vs {th_aa}");
    }
}

#[test]
fn zero_power_mse_is_prior() {
    let link = coupled_link(2, 3, 0.6, 2);
    let pilots = PilotBlock::orthogonal(2, 2).unwrap();
    let est = AaEstimator::new(&link, &pilots, 0.0).unwrap();
    let (e, e_eff) = est.mse_matrices().unwrap();
    let cov = link.covariances();
    assert!(e.max_abs_diff(&cov.r_h) < 1e-15);
    assert!(e_eff.rel_diff(&cov.r_heff) < 1e-14);
}

fn min_eig(a: &CMat) -> f64 {
    hermitian_eig(a).unwrap().values[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn aa_never_worse_than_ab(seed in any::<u64>(), n in 1usize..5, coupling in 0.0f64..0.95, snr in -10.0f64..40.0, n_p in 1usize..9) {
        let link = coupled_link(n, n, coupling, seed);
        let cov = link.covariances();
        let (c1, c2) = mismatch_constants(&cov.r_heff, &RfChain::default());
        let rho = rho_for_snr_db(snr);
        let pilots = PilotBlock::bpsk(&mut stream(seed), n, n_p).unwrap();
        let (_, a) = stack_observations(&CMat::zeros(n, n_p), &pilots).unwrap();
        let e_ab = ab_mse_matrix(&a, rho, c1, c2, &cov.r_heff, &link.r_n).unwrap();
        let est = AaEstimator::new(&link, &pilots, rho).unwrap();
        let (e_aa, e_aa_eff) = est.mse_matrices().unwrap();
        prop_assert!(e_aa_eff.trace().re <= e_ab.trace().re + 1e-12 * cov.r_heff.trace().re);
        let scale = cov.r_heff.max_abs();
        prop_assert!(e_ab.hermitian_defect() < 1e-9);
        prop_assert!(min_eig(&e_ab) > -1e-9 * scale);
        prop_assert!(min_eig(&e_aa_eff) > -1e-9 * scale);
        prop_assert!(min_eig(&(&cov.r_h - &e_aa)) > -1e-9);
    }

    #[test]
    fn true_covariances_reproduce_aa(seed in any::<u64>(), n in 1usize..4, coupling in 0.0f64..0.95, snr in -10.0f64..30.0) {
        let link = coupled_link(n, n, coupling, seed);
        let cov = link.covariances();
        let rho = rho_for_snr_db(snr);
        let pilots = PilotBlock::bpsk(&mut stream(seed ^ 1), n, 2 * n).unwrap();
        let (_, a) = stack_observations(&CMat::zeros(n, 2 * n), &pilots).unwrap();
        let n_true = CMat::identity(2 * n).kron(&link.r_n);
        let e_true = mismatched_mse(&a, rho, &cov.r_heff, &n_true, &cov.r_heff, &n_true).unwrap();
        let chol = cholesky_lower(&link.r_n).unwrap();
        let a_prime = mpchan::estimate_sc::whitened_sensing(&link, &pilots, &chol).unwrap();
        let (_, e_eff) = aa_mse_matrices(&a_prime, rho, &cov.r_h, &cov.t).unwrap();
        prop_assert!(e_true.max_abs_diff(&e_eff) < 1e-9 * cov.r_heff.max_abs());
    }
}

#[test]
fn observation_has_requested_statistics() {
    let h = CMat::from_diag(&[C64::new(0.0, 0.0)]);
    let pilots = PilotBlock::new(CMat::from_real(1, 1, &[1.0]).unwrap()).unwrap();
    let chol = CMat::from_real_diag(&[2.0]);
    let mut rng = stream(1);
    let n = 20_000;
    let p: f64 =
        (0..n).map(|_| observe(&h, &pilots, 1.0, &chol, &mut rng).unwrap()[(0, 0)].norm_sqr()).sum::<f64>() / n as f64;
    assert!((p - 4.0).abs() < 0.1);
}
