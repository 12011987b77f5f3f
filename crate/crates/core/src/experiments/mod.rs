//! Seeded Monte-Carlo sweeps behind the figure-style experiments.
//!
//! A sweep is described by an [`ExperimentConfig`] (TOML), evaluated point by
//! point with [`run_sweep`], and written with [`emit`]. Every trial owns a
//! random stream derived from the master seed, so results are reproducible
//! bit for bit regardless of the worker count.

mod config;
mod emit;
mod metrics;
mod runner;

use serde::{Deserialize, Serialize};

use crate::channel::{
    effective_channel_impedance, effective_channel_scattering, friis_los_channel, large_scale_rho, open_circuit_z_rt,
    terminated_from_open_circuit, ChannelError, LinkModel, RfChain,
};
use crate::consts::{dbm_to_watts, to_db};
use crate::estimate_mc::{
    build_stacking, c2_matrix, draw_taps, observe_ofdm, ofdm_constants, sensing_matrix, split_freq, stack_freq,
    whiten_ofdm, AaOfdm, AbOfdm, OfdmLink, OfdmPilots,
};
use crate::estimate_sc::{
    ab_mse_matrix, mismatch_constants, observe, stack_observations, AaEstimator, AbEstimator, EstimateError, PilotBlock,
};
use crate::matrixkit::{cholesky_lower, CMat, LinalgError, C64};
use crate::netparams::{
    dipole_pair_impedance, read_touchstone, s_to_z, z_to_s, NetParamsError, NetworkParams, ParamKind, SynthArray,
};
use crate::random::{derive_seed, stream};
use crate::rate::{ofdm_rate_lower_bound, sc_rate_lower_bound, RateError};

pub use config::{ArraySource, ExperimentConfig, Geometry, LinkConfig, OfdmConfig, SweepAxis, SweepKind};
pub use emit::{emit, render, round12, to_csv, to_json, Format};
pub use metrics::{empirical_snr, nmse, spearman, theoretical_nmse};
pub use runner::{ordered_sum, run_trials, try_run_trials};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("I/O error: {0}")]
    Io(String),
    #[error(transparent)]
    NetParams(#[from] NetParamsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl ExperimentError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        ExperimentError::Config { path: path.to_string(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// One named curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub kind: SweepKind,
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub series: Vec<Series>,
    pub unit: String,
    pub config_hash: String,
    pub trials: usize,
    pub seed: u64,
}

impl SweepResult {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }
}

/// Progress report for one finished axis point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub index: usize,
    pub total: usize,
    pub axis: f64,
    pub values: Vec<(String, f64)>,
}

impl std::fmt::Display for PointSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "point {}/{} axis={:.6e}", self.index + 1, self.total, self.axis)?;
        for (n, v) in &self.values {
            write!(f, " {n}={v:.4e}")?;
        }
        Ok(())
    }
}

/// Seed-path tag for the pilot book, kept apart from trial indices.
const PILOT_TAG: u64 = u64::MAX;

/// Transmit and receive arrays resolved from an [`ArraySource`].
#[derive(Debug, Clone)]
pub enum Arrays {
    Synthetic(SynthArray, SynthArray),
    Dipole { length: f64, spacing: f64, radius: Option<f64> },
    Touchstone(NetworkParams, NetworkParams),
}

impl Arrays {
    pub fn load(source: &ArraySource) -> Result<Self> {
        Ok(match source {
            ArraySource::Synthetic { ports, coupling, selectivity, seed } => Arrays::Synthetic(
                SynthArray::new(*ports, *coupling, *selectivity, *seed)?,
                SynthArray::new(*ports, *coupling, *selectivity, seed.wrapping_add(1))?,
            ),
            ArraySource::Dipole { length, spacing, radius } => {
                Arrays::Dipole { length: *length, spacing: *spacing, radius: *radius }
            }
            ArraySource::Touchstone { tx, rx } => {
                let t = read_touchstone(tx)?;
                let r = match rx {
                    Some(p) => read_touchstone(p)?,
                    None => t.clone(),
                };
                Arrays::Touchstone(t, r)
            }
        })
    }

    /// `(S_T, S_R)` at `f` referenced to `z_ref`.
    pub fn s_pair(&self, f: f64, z_ref: f64) -> Result<(CMat, CMat)> {
        match self {
            Arrays::Synthetic(t, r) => Ok((t.s_at(f)?, r.s_at(f)?)),
            Arrays::Touchstone(t, r)
                if [t, r].iter().all(|p| p.kind() == ParamKind::Scattering && p.z_ref() == z_ref) =>
            {
                Ok((t.at(f)?, r.at(f)?))
            }
            Arrays::Dipole { .. } | Arrays::Touchstone(..) => {
                let (z_t, z_r) = self.z_pair(f, z_ref)?;
                Ok((z_to_s(&z_t, z_ref)?, z_to_s(&z_r, z_ref)?))
            }
        }
    }

    /// `(Z_T, Z_R)` at `f` in ohms.
    pub fn z_pair(&self, f: f64, z_ref: f64) -> Result<(CMat, CMat)> {
        let z_of = |p: &NetworkParams| -> Result<CMat> {
            let m = p.at(f)?;
            Ok(match p.kind() {
                ParamKind::Impedance => m,
                ParamKind::Scattering => s_to_z(&m, p.z_ref())?,
            })
        };
        match self {
            Arrays::Synthetic(t, r) => Ok((s_to_z(&t.s_at(f)?, z_ref)?, s_to_z(&r.s_at(f)?, z_ref)?)),
            Arrays::Dipole { length, spacing, radius } => {
                let z = dipole_pair_impedance(f, *spacing, *length, *radius)?;
                Ok((z.clone(), z))
            }
            Arrays::Touchstone(t, r) => Ok((z_of(t)?, z_of(r)?)),
        }
    }
}

/// Everything a sweep needs besides the axis value.
struct Context<'a> {
    cfg: &'a ExperimentConfig,
    arrays: Arrays,
    trials: usize,
}

impl Context<'_> {
    fn rho_at(&self, f: f64) -> f64 {
        let g = &self.cfg.geometry;
        large_scale_rho(f, g.distance, g.reference_distance, g.pathloss_exponent)
    }

    fn sc_link(&self, f: f64) -> Result<LinkModel> {
        let (s_t, s_r) = self.arrays.s_pair(f, self.cfg.chain.z_ref)?;
        Ok(LinkModel::from_scattering(&s_t, &s_r, &self.cfg.chain, self.rho_at(f), f)?)
    }

    fn sc_pilots(&self, n_t: usize) -> Result<PilotBlock> {
        let mut rng = stream(derive_seed(self.cfg.seed, &[PILOT_TAG]));
        Ok(PilotBlock::bpsk(&mut rng, n_t, self.cfg.link.pilots)?)
    }

    fn ofdm(&self) -> Result<OfdmConfig> {
        self.cfg.ofdm.ok_or_else(|| ExperimentError::config("ofdm", "this sweep needs an [ofdm] section"))
    }

    /// OFDM chain: the noise bandwidth is the whole band.
    fn ofdm_chain(&self, o: &OfdmConfig) -> RfChain {
        RfChain { bandwidth: o.bandwidth(), ..self.cfg.chain }
    }

    fn ofdm_setup(&self, power_dbm: f64) -> Result<OfdmSetup> {
        let o = self.ofdm()?;
        let freqs = o.grid();
        let chain = self.ofdm_chain(&o);
        let mut s_t = Vec::with_capacity(freqs.len());
        let mut s_r = Vec::with_capacity(freqs.len());
        for &f in &freqs {
            let (t, r) = self.arrays.s_pair(f, chain.z_ref)?;
            s_t.push(t);
            s_r.push(r);
        }
        let link = OfdmLink::from_scattering(&freqs, &s_t, &s_r, &chain)?;
        let n_t = link.n_t();
        let rho_k: Vec<f64> = freqs.iter().map(|&f| self.rho_at(f)).collect();
        let rho_c = self.rho_at(o.centre());
        let gains: Vec<f64> = rho_k.iter().map(|r| (r / rho_c).sqrt()).collect();
        let mut rng = stream(derive_seed(self.cfg.seed, &[PILOT_TAG]));
        let pilots = OfdmPilots::bpsk(&mut rng, o.subcarriers, n_t, o.slots)?.scaled(&gains)?;
        let power = dbm_to_watts(power_dbm);
        Ok(OfdmSetup { link, pilots, rho: rho_c * power / n_t as f64, rho_k, power, chain, config: o })
    }
}

struct OfdmSetup {
    link: OfdmLink,
    /// Pilots carrying the per-subcarrier gains `√(ρ(f_k)/ρ(f_c))`.
    pilots: OfdmPilots,
    /// Common pilot gain `ρ(f_c)·P/N_t`.
    rho: f64,
    rho_k: Vec<f64>,
    power: f64,
    chain: RfChain,
    config: OfdmConfig,
}

struct OfdmEstimators {
    ab: AbOfdm,
    aa: AaOfdm,
    b: CMat,
    v: CMat,
    c1: CMat,
}

impl OfdmSetup {
    fn estimators(&self, assumed: usize) -> Result<OfdmEstimators> {
        let (k_n, n_r, n_t) = (self.link.subcarriers(), self.link.n_r(), self.link.n_t());
        let l_true = self.config.taps_true;
        let st = build_stacking(l_true, &self.pilots, &self.link)?;
        let b = sensing_matrix(assumed, &self.pilots, None, None, n_r)?;
        let v = sensing_matrix(l_true, &self.pilots, Some(&self.link.f), Some(&self.link.q), n_r)?;
        let c2 = c2_matrix(n_r, n_t, assumed, k_n);
        let (c3, c4) = ofdm_constants(&st.c1, k_n, assumed, &self.chain);
        let ab = AbOfdm::new(&b, &c2, self.rho, c3, c4)?;
        let aa = AaOfdm::new(&st.m, &st.c1, self.rho)?;
        Ok(OfdmEstimators { ab, aa, b, v, c1: st.c1 })
    }

    /// One trial: true per-subcarrier channels with AB and AA estimates.
    fn trial(&self, est: &OfdmEstimators, rng: &mut crate::random::Stream) -> Result<(Vec<CMat>, Vec<C64>, Vec<C64>)> {
        let (n_r, n_t) = (self.link.n_r(), self.link.n_t());
        let taps = draw_taps(rng, self.config.taps_true, n_r, n_t);
        let h = self.link.effective_freq(&taps)?;
        let y = observe_ofdm(&h, &self.pilots, self.rho, &self.link.chol, rng)?;
        let ab = est.ab.estimate_freq(&y)?;
        let aa = est.aa.estimate_freq(&whiten_ofdm(&y, &self.link.chol, self.pilots.slots())?)?;
        Ok((h, ab, aa))
    }
}

fn db(x: f64) -> f64 {
    to_db(x)
}

fn sq_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

fn sq_norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Single-carrier NMSE: `[AB theory, AA theory, AB empirical, AA empirical]`, linear.
pub fn sc_nmse_point(
    link: &LinkModel,
    pilots: &PilotBlock,
    rho: f64,
    chain: &RfChain,
    trials: usize,
    master: u64,
    point: u64,
) -> Result<[f64; 4]> {
    let cov = link.covariances();
    let (c1, c2) = mismatch_constants(&cov.r_heff, chain);
    let (_, a) = stack_observations(&CMat::zeros(link.n_r(), pilots.n_p()), pilots)?;
    let ab = AbEstimator::new(&a, rho, c1, c2)?;
    let aa = AaEstimator::new(link, pilots, rho)?;
    let e_ab = ab_mse_matrix(&a, rho, c1, c2, &cov.r_heff, &link.r_n)?;
    let (_, e_aa) = aa.mse_matrices()?;
    let chol = cholesky_lower(&link.r_n)?;
    let rows = try_run_trials(master, point, trials, |rng| -> Result<[f64; 3]> {
        let real = link.draw(rng);
        let y = observe(&real.h_eff, pilots, rho, &chol, rng)?;
        let truth = real.h_eff.vec();
        let e1 = sq_dist(&ab.apply(&y.vec())?.vec_h_eff_hat, &truth);
        let e2 = sq_dist(&aa.apply(&y)?.estimate.vec_h_eff_hat, &truth);
        Ok([e1, e2, sq_norm(&truth)])
    })?;
    let [s_ab, s_aa, pow] = ordered_sum(&rows);
    Ok([theoretical_nmse(&e_ab, &cov.r_heff), theoretical_nmse(&e_aa, &cov.r_heff), s_ab / pow, s_aa / pow])
}

/// Mean single-carrier rates `[perfect CSI, AA, AB]` with pilots and data at power `p` watts.
pub fn sc_rate_point(
    link: &LinkModel,
    pilots: &PilotBlock,
    power: f64,
    chain: &RfChain,
    trials: usize,
    master: u64,
    point: u64,
) -> Result<[f64; 3]> {
    let (n_r, n_t) = (link.n_r(), link.n_t());
    let rho = link.rho * power / n_t as f64;
    let cov = link.covariances();
    let (c1, c2) = mismatch_constants(&cov.r_heff, chain);
    let (_, a) = stack_observations(&CMat::zeros(n_r, pilots.n_p()), pilots)?;
    let ab = AbEstimator::new(&a, rho, c1, c2)?;
    let aa = AaEstimator::new(link, pilots, rho)?;
    let chol = cholesky_lower(&link.r_n)?;
    let rows = try_run_trials(master, point, trials, |rng| -> Result<[f64; 3]> {
        let h = link.draw(rng).h_eff;
        let y = observe(&h, pilots, rho, &chol, rng)?;
        let h_ab = CMat::unvec(&ab.apply(&y.vec())?.vec_h_eff_hat, n_r, n_t)?;
        let h_aa = CMat::unvec(&aa.apply(&y)?.estimate.vec_h_eff_hat, n_r, n_t)?;
        let rate = |g: &CMat| sc_rate_lower_bound(&h, g, &link.r_n, link.rho, power).map(|r| r.rate_bpcu);
        Ok([rate(&h)?, rate(&h_aa)?, rate(&h_ab)?])
    })?;
    Ok(ordered_sum(&rows).map(|s| s / trials as f64))
}

/// Runs `cfg` without progress reporting.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_with(cfg, &|_| {})
}

/// Runs `cfg`, calling `progress` after each axis point in axis order.
pub fn run_sweep_with(cfg: &ExperimentConfig, progress: &dyn Fn(&PointSummary)) -> Result<SweepResult> {
    cfg.validate()?;
    let ctx = Context { cfg, arrays: Arrays::load(&cfg.array)?, trials: cfg.trials() };
    let (axis, names, unit): (Vec<f64>, Vec<&str>, &str) = match cfg.kind {
        SweepKind::NmseVsPower | SweepKind::NmseVsFrequency | SweepKind::NmseVsTaps => {
            (Vec::new(), vec!["ab", "aa", "ab_mc", "aa_mc"], "dB")
        }
        SweepKind::SnrVsFrequency => (Vec::new(), vec!["snr", "snr_theory"], "dB"),
        SweepKind::RateVsPower | SweepKind::RateVsFrequency => (Vec::new(), vec!["perfect", "aa", "ab"], "bpcu"),
        SweepKind::PowerVsSubcarrier => (ctx.ofdm()?.grid(), vec!["snr", "perfect", "aa", "ab"], "linear"),
        SweepKind::ChannelEquivalence => (Vec::new(), vec!["impedance", "scattering"], "dB"),
    };
    let axis = if axis.is_empty() { cfg.sweep.resolve()? } else { axis };
    let columns: Vec<Vec<f64>> = if cfg.kind == SweepKind::PowerVsSubcarrier {
        let cols = power_profile(&ctx)?;
        for (i, &a) in axis.iter().enumerate() {
            progress(&summary(i, axis.len(), a, &names, &cols.iter().map(|c| c[i]).collect::<Vec<_>>()));
        }
        cols
    } else {
        let mut cols = vec![Vec::with_capacity(axis.len()); names.len()];
        for (i, &a) in axis.iter().enumerate() {
            let row = point(&ctx, i as u64, a)?;
            progress(&summary(i, axis.len(), a, &names, &row));
            for (c, v) in cols.iter_mut().zip(row) {
                c.push(v);
            }
        }
        cols
    };
    let series = names.iter().zip(columns).map(|(n, values)| Series { name: n.to_string(), values }).collect();
    Ok(SweepResult {
        name: cfg.name.clone(),
        kind: cfg.kind,
        axis_name: cfg.kind.axis_name().to_string(),
        axis,
        series,
        unit: unit.to_string(),
        config_hash: cfg.hash(),
        trials: ctx.trials,
        seed: cfg.seed,
    })
}

/// [`run_sweep_with`] on a dedicated pool of `threads` workers (all cores when `None`).
pub fn run_sweep_threads(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
    progress: &(dyn Fn(&PointSummary) + Sync),
) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| ExperimentError::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_sweep_with(cfg, progress))
}

fn summary(index: usize, total: usize, axis: f64, names: &[&str], row: &[f64]) -> PointSummary {
    PointSummary { index, total, axis, values: names.iter().zip(row).map(|(n, v)| (n.to_string(), *v)).collect() }
}

fn point(ctx: &Context<'_>, index: u64, a: f64) -> Result<Vec<f64>> {
    let cfg = ctx.cfg;
    let seed = cfg.seed;
    match cfg.kind {
        SweepKind::NmseVsPower if cfg.ofdm.is_some() => {
            let setup = ctx.ofdm_setup(a)?;
            ofdm_nmse_point(&setup, setup.config.taps_assumed, ctx.trials, seed, index)
        }
        SweepKind::NmseVsTaps => {
            let setup = ctx.ofdm_setup(cfg.link.power_dbm)?;
            ofdm_nmse_point(&setup, a as usize, ctx.trials, seed, index)
        }
        SweepKind::NmseVsPower | SweepKind::NmseVsFrequency => {
            let (f, p) =
                if cfg.kind == SweepKind::NmseVsPower { (cfg.link.carrier, a) } else { (a, cfg.link.power_dbm) };
            let link = ctx.sc_link(f)?;
            let pilots = ctx.sc_pilots(link.n_t())?;
            let rho = link.rho * dbm_to_watts(p) / link.n_t() as f64;
            let r = sc_nmse_point(&link, &pilots, rho, &cfg.chain, ctx.trials, seed, index)?;
            Ok(r.iter().map(|&x| db(x)).collect())
        }
        SweepKind::SnrVsFrequency => {
            let link = ctx.sc_link(a)?;
            let rho = link.rho * dbm_to_watts(cfg.link.power_dbm) / link.n_t() as f64;
            let snr =
                empirical_snr(|rng| link.draw(rng).h_eff, &link.r_n, rho, ctx.trials, derive_seed(seed, &[index]))?;
            let theory = rho * link.covariances().r_heff.trace().re / link.r_n.trace().re;
            Ok(vec![db(snr), db(theory)])
        }
        SweepKind::RateVsPower if cfg.ofdm.is_some() => {
            let setup = ctx.ofdm_setup(a)?;
            let (mean, _) = ofdm_rate_point(&setup, ctx.trials, seed, index)?;
            Ok(mean.to_vec())
        }
        SweepKind::RateVsPower | SweepKind::RateVsFrequency => {
            let (f, p) =
                if cfg.kind == SweepKind::RateVsPower { (cfg.link.carrier, a) } else { (a, cfg.link.power_dbm) };
            let link = ctx.sc_link(f)?;
            let pilots = ctx.sc_pilots(link.n_t())?;
            Ok(sc_rate_point(&link, &pilots, dbm_to_watts(p), &cfg.chain, ctx.trials, seed, index)?.to_vec())
        }
        SweepKind::ChannelEquivalence => {
            let (h_imp, h_sc) = equivalence_point(&ctx.arrays, &cfg.chain, cfg.geometry.distance, a)?;
            Ok(vec![20.0 * h_imp[(0, 0)].norm().log10(), 20.0 * h_sc[(0, 0)].norm().log10()])
        }
        SweepKind::PowerVsSubcarrier => unreachable!("handled by power_profile"),
    }
}

/// OFDM NMSE `[AB theory, AA theory, AB empirical, AA empirical]` in dB.
fn ofdm_nmse_point(setup: &OfdmSetup, assumed: usize, trials: usize, master: u64, point: u64) -> Result<Vec<f64>> {
    let est = setup.estimators(assumed)?;
    let tr_r = est.c1.fro_norm_sqr();
    let th_ab = est.ab.mse_trace(&est.b, &est.v, &est.c1, &setup.link.r_n)? / tr_r;
    let th_aa = est.aa.mse_trace() / tr_r;
    let rows = try_run_trials(master, point, trials, |rng| -> Result<[f64; 3]> {
        let (h, ab, aa) = setup.trial(&est, rng)?;
        let truth = stack_freq(&h);
        Ok([sq_dist(&ab, &truth), sq_dist(&aa, &truth), sq_norm(&truth)])
    })?;
    let [e_ab, e_aa, pow] = ordered_sum(&rows);
    Ok([th_ab, th_aa, e_ab / pow, e_aa / pow].iter().map(|&x| db(x)).collect())
}

/// Mean OFDM rates `[perfect, AA, AB]` and mean per-subcarrier powers for each.
fn ofdm_rate_point(setup: &OfdmSetup, trials: usize, master: u64, point: u64) -> Result<([f64; 3], [Vec<f64>; 3])> {
    let est = setup.estimators(setup.config.taps_assumed)?;
    let (n_r, n_t) = (setup.link.n_r(), setup.link.n_t());
    let rows = try_run_trials(master, point, trials, |rng| -> Result<[(f64, Vec<f64>); 3]> {
        let (h, ab, aa) = setup.trial(&est, rng)?;
        let h_ab = split_freq(&ab, n_r, n_t)?;
        let h_aa = split_freq(&aa, n_r, n_t)?;
        let rate = |g: &[CMat]| -> Result<(f64, Vec<f64>)> {
            let r = ofdm_rate_lower_bound(&h, g, &setup.link.r_n, &setup.rho_k, setup.power)?;
            Ok((r.rate_bpcu, r.per_subcarrier_power))
        };
        Ok([rate(&h)?, rate(&h_aa)?, rate(&h_ab)?])
    })?;
    let k_n = setup.link.subcarriers();
    let mut mean = [0.0; 3];
    let mut powers = [vec![0.0; k_n], vec![0.0; k_n], vec![0.0; k_n]];
    for row in &rows {
        for (m, (r, p)) in row.iter().enumerate() {
            mean[m] += r;
            for (acc, v) in powers[m].iter_mut().zip(p) {
                *acc += v;
            }
        }
    }
    let n = trials as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    powers.iter_mut().for_each(|p| p.iter_mut().for_each(|v| *v /= n));
    Ok((mean, powers))
}

/// Columns `[snr, perfect, aa, ab]` over the subcarriers.
fn power_profile(ctx: &Context<'_>) -> Result<Vec<Vec<f64>>> {
    let setup = ctx.ofdm_setup(ctx.cfg.link.power_dbm)?;
    let (_, [perfect, aa, ab]) = ofdm_rate_point(&setup, ctx.trials, ctx.cfg.seed, 0)?;
    let snr = subcarrier_snr(&setup, ctx.trials, ctx.cfg.seed)?;
    Ok(vec![snr, perfect, aa, ab])
}

/// Per-subcarrier `ρ_k·P·E‖𝗛_eff[k]‖²_F / (N_t·tr R_n[k])` averaged over draws.
fn subcarrier_snr(setup: &OfdmSetup, trials: usize, master: u64) -> Result<Vec<f64>> {
    let (n_r, n_t, k_n) = (setup.link.n_r(), setup.link.n_t(), setup.link.subcarriers());
    let rows = try_run_trials(derive_seed(master, &[1]), 0, trials, |rng| -> Result<Vec<f64>> {
        let taps = draw_taps(rng, setup.config.taps_true, n_r, n_t);
        Ok(setup.link.effective_freq(&taps)?.iter().map(CMat::fro_norm_sqr).collect())
    })?;
    Ok((0..k_n)
        .map(|k| {
            let p: f64 = rows.iter().map(|r| r[k]).sum::<f64>() / trials as f64;
            setup.rho_k[k] * setup.power * p / (n_t as f64 * setup.link.r_n[k].trace().re)
        })
        .collect())
}

/// `H_eff` at `f` from the impedance and from the scattering description of a
/// line-of-sight link over `distance` metres.
pub fn equivalence_point(arrays: &Arrays, chain: &RfChain, distance: f64, f: f64) -> Result<(CMat, CMat)> {
    let (z_t, z_r) = arrays.z_pair(f, chain.z_ref)?;
    let h_oc = friis_los_channel(f, distance, C64::new(1.0, 0.0), z_r.rows(), z_t.rows());
    let load_t = CMat::identity(z_t.rows()).scale_re(chain.z_ref);
    let load_r = CMat::identity(z_r.rows()).scale_re(chain.z_ref);
    let z_rt = open_circuit_z_rt(&z_t, &z_r, &h_oc)?;
    let h_imp = effective_channel_impedance(&load_t, &z_t, &z_r, &load_r, &z_rt, chain.beta)?;
    let s_t = z_to_s(&z_t, chain.z_ref)?;
    let s_r = z_to_s(&z_r, chain.z_ref)?;
    let h_term = terminated_from_open_circuit(&h_oc, &z_t, &z_r, chain.z_ref)?;
    let h_sc = effective_channel_scattering(&s_t, &s_r, &h_term, chain.beta)?;
    Ok((h_imp, h_sc))
}
