mod common;

use common::*;
use mpchan::channel::RfChain;
use mpchan::estimate_mc::{
    aa_mse_ofdm, ab_estimate_ofdm, ab_mse_ofdm, b_prime_matrix, build_stacking, c1_matrix, c2_matrix, draw_taps,
    expected_tap_spreading, freq_covariance_and_constants, observe_ofdm, ofdm_constants, sensing_matrix, stack_freq,
    subcarrier_grid, tap_spreading_energy, taps_to_freq, whiten_ofdm, AaOfdm, AbOfdm, OfdmLink, OfdmPilots,
};
use mpchan::estimate_sc::mismatched_mse;
use mpchan::matrixkit::{solve_lower, CMat, C64};
use mpchan::random::stream;
use proptest::prelude::*;

fn grid(k: usize) -> Vec<f64> {
    subcarrier_grid(1e9, 8e8, k).unwrap()
}

fn taps_vec(taps: &[CMat]) -> Vec<C64> {
    taps.iter().flat_map(CMat::vec).collect()
}

fn block_noise(link: &OfdmLink, slots: usize) -> CMat {
    let rk = CMat::block_diag(&link.r_n);
    CMat::identity(slots).kron(&rk)
}

#[test]
fn c1_identity_and_permutation_form() {
    let k = 8;
    let link = ofdm_link(2, 0.7, 2.0, 3, &grid(k));
    let pilots = OfdmPilots::bpsk(&mut stream(1), k, 2, 2).unwrap();
    let st = build_stacking(3, &pilots, &link).unwrap();
    assert!(st.c2.max_abs_diff(&c2_matrix(2, 2, 3, k)) < 1e-15);
    assert!(st.c1.max_abs_diff(&c1_matrix(&link.f, &link.q, 3)) < 1e-12);
    for seed in 0..5 {
        let taps = draw_taps(&mut stream(seed), 3, 2, 2);
        let direct = stack_freq(&link.effective_freq(&taps).unwrap());
        let mapped = st.c1.mul_vec(&taps_vec(&taps));
        assert!(sq_dist(&direct, &mapped).sqrt() < 1e-10 * sq_norm(&direct).sqrt());
    }
    for p in [&st.p_k, &st.p_l] {
        assert_eq!(p.adjoint_mul(p), CMat::identity(p.rows()));
        assert!((0..p.rows()).all(|i| p.row(i).iter().filter(|z| z.norm() == 1.0).count() == 1));
    }
}

#[test]
fn c2_one_hot_gives_dft_column() {
    let (n_r, n_t, l, k) = (2, 3, 3, 5);
    let c2 = c2_matrix(n_r, n_t, l, k);
    let idx = 1 + n_r * (2 + n_t * 2);
    let out = c2.column(idx);
    for kk in 0..k {
        for e in 0..n_r * n_t {
            let expected = if e == idx % (n_r * n_t) {
                C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (2 * kk) as f64 / k as f64)
            } else {
                C64::new(0.0, 0.0)
            };
            assert!((out[kk * n_r * n_t + e] - expected).norm() < 1e-14);
        }
    }
}

#[test]
fn rows_follow_the_substitution() {
    let k = 4;
    let link = ofdm_link(2, 0.6, 1.5, 9, &grid(k));
    let pilots = OfdmPilots::bpsk(&mut stream(2), k, 2, 2).unwrap();
    let st = build_stacking(2, &pilots, &link).unwrap();
    for t in 0..2 {
        for kk in 0..k {
            let u = CMat::from_fn(1, 2, |_, l| {
                C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (l * kk) as f64 / k as f64)
            });
            let x = CMat::col_vec(&pilots.symbol(kk, t));
            let p = solve_lower(&link.chol[kk], &link.q[kk]).unwrap();
            let b_row = u.kron(&x.transpose()).kron(&CMat::identity(2));
            let m_row = u.kron(&(&link.f[kk] * &x).transpose()).kron(&p);
            let r0 = (t * k + kk) * 2;
            assert!(st.b_mat.submatrix(r0, 0, 2, st.b_mat.cols()).max_abs_diff(&b_row) < 1e-15);
            assert!(st.m.submatrix(r0, 0, 2, st.m.cols()).max_abs_diff(&m_row) < 1e-13 * m_row.max_abs());
        }
    }
}

#[test]
fn true_sensing_equals_b_prime_c1() {
    let k = 4;
    let link = ofdm_link(2, 0.6, 1.5, 9, &grid(k));
    let pilots = OfdmPilots::bpsk(&mut stream(2), k, 2, 3).unwrap();
    let v = sensing_matrix(3, &pilots, Some(&link.f), Some(&link.q), 2).unwrap();
    let bc = &b_prime_matrix(&pilots, 2) * &c1_matrix(&link.f, &link.q, 3);
    assert!(v.max_abs_diff(&bc) < 1e-13);
    let taps = draw_taps(&mut stream(5), 3, 2, 2);
    let h_eff = link.effective_freq(&taps).unwrap();
    let zero = vec![CMat::zeros(2, 2); k];
    let y = observe_ofdm(&h_eff, &pilots, 4.0, &zero, &mut stream(0)).unwrap();
    let model: Vec<C64> = v.mul_vec(&taps_vec(&taps)).iter().map(|z| z * 2.0).collect();
    assert!(sq_dist(&y, &model).sqrt() < 1e-12 * sq_norm(&model).sqrt());
}

#[test]
fn constants_and_full_dft() {
    let k = 6;
    let zero = vec![CMat::zeros(2, 2); k];
    let chain = RfChain { noise_figure: 1.0, ..RfChain::default() };
    let link = OfdmLink::from_scattering(&grid(k), &zero, &zero, &chain).unwrap();
    let c2 = c2_matrix(2, 2, k, k);
    assert!(c2.adjoint_mul(&c2).max_abs_diff(&CMat::identity(24).scale_re(k as f64)) < 1e-12);
    let c1 = c1_matrix(&link.f, &link.q, k);
    let (r, c3, c4) = freq_covariance_and_constants(&c1, k, k, &chain);
    assert!((r.trace().re - c1.fro_norm_sqr()).abs() < 1e-9);
    assert!((c4 - 1.0).abs() < 1e-12);
    let expected = chain.bandwidth / k as f64 * mpchan::consts::BOLTZMANN * chain.temperature * 16.0 * 50.0;
    assert!((c3 - expected).abs() < 1e-12 * expected);
    // Half the taps assumed: the same power is spread over fewer taps.
    let (_, c4_half) = ofdm_constants(&c1_matrix(&link.f, &link.q, 2), k, 2, &chain);
    assert!((c4_half - 1.0).abs() < 1e-12);
}

struct Problem {
    link: OfdmLink,
    pilots: OfdmPilots,
    b: CMat,
    v: CMat,
    m: CMat,
    c1: CMat,
    c2: CMat,
    c3: f64,
    c4: f64,
}

fn problem(k: usize, l_ab: usize, l_true: usize, slots: usize, coupling: f64, selectivity: f64, seed: u64) -> Problem {
    let link = ofdm_link(2, coupling, selectivity, seed, &grid(k));
    let pilots = OfdmPilots::bpsk(&mut stream(seed ^ 0x55), k, 2, slots).unwrap();
    let b = sensing_matrix(l_ab, &pilots, None, None, 2).unwrap();
    let v = sensing_matrix(l_true, &pilots, Some(&link.f), Some(&link.q), 2).unwrap();
    let st = build_stacking(l_true, &pilots, &link).unwrap();
    let c1 = st.c1;
    let (c3, c4) = ofdm_constants(&c1, k, l_ab, &RfChain::default());
    Problem { c2: c2_matrix(2, 2, l_ab, k), link, pilots, b, v, m: st.m, c1, c3, c4 }
}

#[test]
fn ab_fast_matches_printed() {
    let pr = problem(4, 2, 3, 2, 0.7, 2.0, 11);
    let rho = ofdm_rho_for_snr_db(10.0, 4);
    let ab = AbOfdm::new(&pr.b, &pr.c2, rho, pr.c3, pr.c4).unwrap();
    let taps = draw_taps(&mut stream(3), 3, 2, 2);
    let h_eff = pr.link.effective_freq(&taps).unwrap();
    let y = observe_ofdm(&h_eff, &pr.pilots, rho, &pr.link.chol, &mut stream(4)).unwrap();
    let fast = ab.estimate_time(&y).unwrap();
    let printed = ab_estimate_ofdm(&y, &pr.b, rho, pr.c3, pr.c4).unwrap();
    assert!(sq_dist(&fast, &printed).sqrt() < 1e-10 * sq_norm(&printed).sqrt());
    let n = pr.b.rows();
    let sigma = &CMat::identity(n).scale_re(pr.c3) + &pr.b.mul_adjoint(&pr.b).scale_re(rho * pr.c4);
    let oracle = (&na_inverse(&sigma) * &pr.b).scale_re(rho.sqrt() * pr.c4).adjoint().mul_vec(&y);
    assert!(sq_dist(&fast, &oracle).sqrt() < 1e-10 * sq_norm(&oracle).sqrt());

    let r_true = pr.c1.mul_adjoint(&pr.c1);
    let noise = block_noise(&pr.link, 2);
    let e = ab_mse_ofdm(&pr.b, &b_prime_matrix(&pr.pilots, 2), &pr.c2, rho, pr.c3, pr.c4, &r_true, &noise).unwrap();
    let tr_fast = ab.mse_trace(&pr.b, &pr.v, &pr.c1, &pr.link.r_n).unwrap();
    assert!((e.trace().re / tr_fast - 1.0).abs() < 1e-9, "{} vs {tr_fast}", e.trace().re);
    let e0 = ab_mse_ofdm(&pr.b, &b_prime_matrix(&pr.pilots, 2), &pr.c2, 0.0, pr.c3, pr.c4, &r_true, &noise).unwrap();
    assert!(e0.max_abs_diff(&r_true) < 1e-12 * r_true.max_abs());
}

#[test]
fn aa_fast_matches_printed_and_joint_lmmse() {
    let pr = problem(4, 2, 2, 2, 0.7, 2.0, 13);
    let rho = ofdm_rho_for_snr_db(5.0, 4);
    let aa = AaOfdm::new(&pr.m, &pr.c1, rho).unwrap();
    let (e, e_eff) = aa_mse_ofdm(&pr.m, rho, &pr.c1).unwrap();
    assert!(aa.mse().max_abs_diff(&e) < 1e-10);
    assert!((aa.mse_trace() / e_eff.trace().re - 1.0).abs() < 1e-10);

    let taps = draw_taps(&mut stream(6), 2, 2, 2);
    let h_eff = pr.link.effective_freq(&taps).unwrap();
    let y = observe_ofdm(&h_eff, &pr.pilots, rho, &pr.link.chol, &mut stream(7)).unwrap();
    let est = aa.estimate_freq(&whiten_ofdm(&y, &pr.link.chol, 2).unwrap()).unwrap();
    let r_yy = &(&pr.v * &pr.v.adjoint()).scale_re(rho) + &block_noise(&pr.link, 2);
    let r_xy = (&pr.c1 * &pr.v.adjoint()).scale_re(rho.sqrt());
    let oracle = (&r_xy * &na_inverse(&r_yy)).mul_vec(&y);
    assert!(sq_dist(&est, &oracle).sqrt() < 1e-10 * sq_norm(&oracle).sqrt());

    let (e0, _) = aa_mse_ofdm(&pr.m, 0.0, &pr.c1).unwrap();
    assert!(e0.max_abs_diff(&CMat::identity(e0.rows())) < 1e-15);
}

#[test]
fn matched_flat_case_collapses() {
    let k = 8;
    let zero = vec![CMat::zeros(2, 2); k];
    let link = OfdmLink::from_scattering(&grid(k), &zero, &zero, &RfChain::default()).unwrap();
    let pilots = OfdmPilots::bpsk(&mut stream(8), k, 2, 2).unwrap();
    let st = build_stacking(2, &pilots, &link).unwrap();
    let (c3, c4) = ofdm_constants(&st.c1, k, 2, &RfChain::default());
    for snr in [0.0, 20.0] {
        let rho = ofdm_rho_for_snr_db(snr, k);
        let ab = AbOfdm::new(&st.b_mat, &st.c2, rho, c3, c4).unwrap();
        let aa = AaOfdm::new(&st.m, &st.c1, rho).unwrap();
        let taps = draw_taps(&mut stream(9), 2, 2, 2);
        let y = observe_ofdm(&link.effective_freq(&taps).unwrap(), &pilots, rho, &link.chol, &mut stream(1)).unwrap();
        let a = ab.estimate_freq(&y).unwrap();
        let b = aa.estimate_freq(&whiten_ofdm(&y, &link.chol, 2).unwrap()).unwrap();
        assert!(sq_dist(&a, &b).sqrt() < 1e-10 * sq_norm(&a).sqrt());
    }
}

#[test]
fn flat_coupled_fronts_make_truncation_exact() {
    let k = 4;
    let link = ofdm_link(2, 0.7, 0.0, 21, &grid(k));
    let pilots = OfdmPilots::bpsk(&mut stream(3), k, 2, 2).unwrap();
    let st = build_stacking(2, &pilots, &link).unwrap();
    let rho = ofdm_rho_for_snr_db(10.0, k);
    let d0 = link.f[0].transpose().kron(&link.q[0]);
    let r_time = CMat::identity(2).kron(&d0.mul_adjoint(&d0));
    let noise = block_noise(&link, 2);
    let e_time = mismatched_mse(&st.b_mat, rho, &r_time, &noise, &r_time, &noise).unwrap();
    let e_freq = (&st.c2 * &e_time).mul_adjoint(&st.c2);
    let (_, e_aa) = aa_mse_ofdm(&st.m, rho, &st.c1).unwrap();
    assert!(e_freq.max_abs_diff(&e_aa) < 1e-9 * e_aa.max_abs());
}

#[test]
fn aa_recovers_taps_at_high_power() {
    let k = 4;
    let link = ofdm_link(2, 0.5, 0.0, 2, &grid(k));
    let pilots = OfdmPilots::bpsk(&mut stream(4), k, 2, 2).unwrap();
    let st = build_stacking(k, &pilots, &link).unwrap();
    let taps = draw_taps(&mut stream(5), k, 2, 2);
    let truth = taps_vec(&taps);
    let h_eff = link.effective_freq(&taps).unwrap();
    let mut last = f64::INFINITY;
    for snr in [20.0, 40.0, 60.0] {
        let rho = ofdm_rho_for_snr_db(snr, k);
        let aa = AaOfdm::new(&st.m, &st.c1, rho).unwrap();
        let y = observe_ofdm(&h_eff, &pilots, rho, &link.chol, &mut stream(6)).unwrap();
        let est = aa.estimate_taps(&whiten_ofdm(&y, &link.chol, 2).unwrap()).unwrap();
        let err = sq_dist(&est, &truth) / sq_norm(&truth);
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-5, "{last}");
}

fn monte_carlo(pr: &Problem, rho: f64, l_true: usize, trials: usize) -> (f64, f64, f64, f64) {
    let ab = AbOfdm::new(&pr.b, &pr.c2, rho, pr.c3, pr.c4).unwrap();
    let aa = AaOfdm::new(&pr.m, &pr.c1, rho).unwrap();
    let slots = pr.pilots.slots();
    let mut rng = stream(99);
    let (mut e_ab, mut e_aa, mut pow) = (0.0, 0.0, 0.0);
    for _ in 0..trials {
        let taps = draw_taps(&mut rng, l_true, 2, 2);
        let h = pr.link.effective_freq(&taps).unwrap();
        let truth = stack_freq(&h);
        let y = observe_ofdm(&h, &pr.pilots, rho, &pr.link.chol, &mut rng).unwrap();
        e_ab += sq_dist(&ab.estimate_freq(&y).unwrap(), &truth);
        e_aa += sq_dist(&aa.estimate_freq(&whiten_ofdm(&y, &pr.link.chol, slots).unwrap()).unwrap(), &truth);
        pow += sq_norm(&truth);
    }
    let tr_r = pr.c1.fro_norm_sqr();
    let th_ab = ab.mse_trace(&pr.b, &pr.v, &pr.c1, &pr.link.r_n).unwrap() / tr_r;
    let th_aa = aa.mse_trace() / tr_r;
    (e_ab / pow, th_ab, e_aa / pow, th_aa)
}

#[test]
fn ofdm_traces_match_monte_carlo() {
    let pr = problem(8, 2, 2, 4, 0.7, 2.0, 17);
    let (emp_ab, th_ab, emp_aa, th_aa) = monte_carlo(&pr, ofdm_rho_for_snr_db(10.0, 8), 2, 10_000);
    assert!((emp_ab / th_ab - 1.0).abs() < 0.03, "AB {emp_ab} vs {th_ab}");
    assert!((emp_aa / th_aa - 1.0).abs() < 0.03, "AA {emp_aa} vs {th_aa}");
}

#[test]
fn tap_spreading_grows_with_selectivity() {
    let k = 16;
    let mut last = -1.0;
    for (i, sel) in [0.0, 1.0, 3.0].into_iter().enumerate() {
        let link = ofdm_link(3, 0.8, sel, 4, &grid(k));
        let frac = expected_tap_spreading(&link.f, &link.q, 2).unwrap();
        let taps = draw_taps(&mut stream(1), 2, 3, 3);
        let sample = tap_spreading_energy(&link.f, &link.q, &taps).unwrap();
        if i == 0 {
            assert!(frac < 1e-12 && sample < 1e-12);
        } else {
            assert!(frac > last && sample > 0.0, "{frac} after {last}");
        }
        last = frac;
    }
}

#[test]
fn more_assumed_taps_help_ab_at_high_power() {
    let k = 16;
    let rho = ofdm_rho_for_snr_db(40.0, k);
    let mut last = f64::INFINITY;
    for l in [2, 4, 8] {
        let pr = problem(k, l, 2, 20, 0.8, 2.0, 5);
        let ab = AbOfdm::new(&pr.b, &pr.c2, rho, pr.c3, pr.c4).unwrap();
        let nmse = ab.mse_trace(&pr.b, &pr.v, &pr.c1, &pr.link.r_n).unwrap() / pr.c1.fro_norm_sqr();
        assert!(nmse < last, "L = {l}: {nmse} vs {last}");
        last = nmse;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(seed in any::<u64>(), l in 1usize..5, extra in 0usize..6, n_r in 1usize..4, n_t in 1usize..4) {
        let k = l + extra;
        let taps = draw_taps(&mut stream(seed), l, n_r, n_t);
        let freq = taps_to_freq(&taps, k).unwrap();
        let pf: f64 = freq.iter().map(CMat::fro_norm_sqr).sum();
        let pt: f64 = taps.iter().map(CMat::fro_norm_sqr).sum();
        prop_assert!((pf - k as f64 * pt).abs() < 1e-9 * pf);
    }

    #[test]
    fn aa_below_ab(seed in any::<u64>(), snr in -10.0f64..40.0, l_ab in 1usize..5, sel in 0.0f64..3.0) {
        let pr = problem(8, l_ab, 2, 2, 0.7, sel, seed);
        let rho = ofdm_rho_for_snr_db(snr, 8);
        let ab = AbOfdm::new(&pr.b, &pr.c2, rho, pr.c3, pr.c4).unwrap();
        let aa = AaOfdm::new(&pr.m, &pr.c1, rho).unwrap();
        let t_ab = ab.mse_trace(&pr.b, &pr.v, &pr.c1, &pr.link.r_n).unwrap();
        prop_assert!(aa.mse_trace() <= t_ab + 1e-12 * pr.c1.fro_norm_sqr());
    }
}
