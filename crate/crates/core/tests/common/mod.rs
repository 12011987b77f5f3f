#![allow(dead_code)]

use mpchan::channel::{LinkModel, RfChain};
use mpchan::matrixkit::{CMat, C64};
use mpchan::netparams::SynthArray;
use nalgebra::{Complex, DMatrix};

pub fn to_na(m: &CMat) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<Complex<f64>>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Dense inverse through nalgebra's LU.
pub fn na_inverse(m: &CMat) -> CMat {
    from_na(&to_na(m).try_inverse().expect("invertible"))
}

pub fn synth_s(n: usize, coupling: f64, seed: u64) -> CMat {
    SynthArray::new(n, coupling, 1.0, seed).unwrap().s_at(1e9).unwrap()
}

pub fn coupled_link(n_t: usize, n_r: usize, coupling: f64, seed: u64) -> LinkModel {
    LinkModel::from_scattering(
        &synth_s(n_t, coupling, seed),
        &synth_s(n_r, coupling, seed.wrapping_add(1)),
        &RfChain::default(),
        1.0,
        1e9,
    )
    .unwrap()
}

pub fn matched_link(n_t: usize, n_r: usize) -> LinkModel {
    LinkModel::from_scattering(&CMat::zeros(n_t, n_t), &CMat::zeros(n_r, n_r), &RfChain::default(), 1.0, 1e9).unwrap()
}

/// Pilot gain giving the requested ratio of signal to matched noise power.
pub fn rho_for_snr_db(snr_db: f64) -> f64 {
    let chain = RfChain::default();
    chain.bandwidth * chain.matched_density() * 10f64.powf(snr_db / 10.0)
}

pub fn sq_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

pub fn sq_norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn ofdm_link(n: usize, coupling: f64, selectivity: f64, seed: u64, freqs: &[f64]) -> mpchan::estimate_mc::OfdmLink {
    let tx = SynthArray::new(n, coupling, selectivity, seed).unwrap();
    let rx = SynthArray::new(n, coupling, selectivity, seed.wrapping_add(1)).unwrap();
    let s_t: Vec<CMat> = freqs.iter().map(|&f| tx.s_at(f).unwrap()).collect();
    let s_r: Vec<CMat> = freqs.iter().map(|&f| rx.s_at(f).unwrap()).collect();
    mpchan::estimate_mc::OfdmLink::from_scattering(freqs, &s_t, &s_r, &RfChain::default()).unwrap()
}

/// Pilot gain relative to the matched per-subcarrier noise.
pub fn ofdm_rho_for_snr_db(snr_db: f64, subcarriers: usize) -> f64 {
    rho_for_snr_db(snr_db) / subcarriers as f64
}
