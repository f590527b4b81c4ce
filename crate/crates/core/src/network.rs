//! Network geometry, large-scale fading, spatial correlation and pilot
//! power control.
//!
//! Four channel cases are supported:
//!
//! * [`ChannelCase::CoCorrI`]: co-located ULA, Gaussian local scattering,
//!   identical large-scale gain on every antenna.
//! * [`ChannelCase::CoCorrD1`]: as above plus a log-normal per-antenna gain
//!   variation shared by all UEs.
//! * [`ChannelCase::CoCorrDK`]: per-antenna variation drawn independently for
//!   every (antenna, UE) pair.
//! * [`ChannelCase::CellFree`]: antennas scattered over the area, uncorrelated
//!   fading, pathloss and shadowing per (antenna, UE) pair.
//!
//! Every correlation matrix has the form `R_k = D_k^{1/2} R̄_k D_k^{1/2}` where
//! `D_k` holds the per-antenna gains and `R̄_k` has a unit diagonal.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::rng::{self, SimRng};

/// Eigenvalue floor (relative to the trace) below which a correlation matrix
/// is projected back onto the PSD cone.
pub const PSD_TOL: f64 = 1e-10;

/// Rejection-sampling budget per UE.
pub const MAX_DROP_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelCase {
    CoCorrI,
    CoCorrD1,
    CoCorrDK,
    CellFree,
}

impl ChannelCase {
    pub const ALL: [ChannelCase; 4] = [Self::CoCorrI, Self::CoCorrD1, Self::CoCorrDK, Self::CellFree];

    pub fn is_colocated(self) -> bool {
        !matches!(self, Self::CellFree)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::CoCorrI => "CoCorrI",
            Self::CoCorrD1 => "CoCorrD1",
            Self::CoCorrDK => "CoCorrDK",
            Self::CellFree => "CellFree",
        }
    }
}

/// Bandwidth used to convert the default dBm powers to per-symbol energies.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 20e6;

fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Scenario parameters. Energies are per symbol (J); distances in km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(alias = "M")]
    pub antennas: usize,
    #[serde(alias = "K")]
    pub users: usize,
    pub side_length_km: f64,
    pub min_dist_km: f64,
    pub alpha: f64,
    pub omega_db: f64,
    pub sigma_sh_db: f64,
    pub sigma_ang_deg: f64,
    pub sigma_lsf_db: f64,
    pub case: ChannelCase,
    /// ρ̄/σ², the SNR set by statistical channel inversion.
    pub qbar_over_sigma2: f64,
    pub rho_max: f64,
    pub sigma2: f64,
    pub tau_c: usize,
    /// Defaults to the number of UEs when absent.
    pub tau_p: Option<usize>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            antennas: 32,
            users: 5,
            side_length_km: 0.4,
            min_dist_km: 0.01,
            alpha: 3.76,
            omega_db: 148.1,
            sigma_sh_db: 10.0,
            sigma_ang_deg: 10.0,
            sigma_lsf_db: 4.0,
            case: ChannelCase::CoCorrI,
            qbar_over_sigma2: 1.0,
            rho_max: dbm_to_watt(20.0) / DEFAULT_BANDWIDTH_HZ,
            sigma2: dbm_to_watt(-94.0) / DEFAULT_BANDWIDTH_HZ,
            tau_c: 200,
            tau_p: None,
        }
    }
}

impl NetworkConfig {
    pub fn with_case(mut self, case: ChannelCase) -> Self {
        self.case = case;
        self
    }

    pub fn with_size(mut self, antennas: usize, users: usize) -> Self {
        self.antennas = antennas;
        self.users = users;
        self
    }

    pub fn tau_p(&self) -> usize {
        self.tau_p.unwrap_or(self.users)
    }

    /// ρ̄ in J/symbol.
    pub fn rho_bar(&self) -> f64 {
        self.qbar_over_sigma2 * self.sigma2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.antennas == 0 {
            return bad("M must be at least 1");
        }
        if self.users == 0 {
            return bad("K must be at least 1");
        }
        let tau_p = self.tau_p();
        if tau_p < self.users {
            return bad("tau_p must be at least K for orthogonal pilots");
        }
        if tau_p > self.tau_c {
            return bad("tau_p must not exceed tau_c");
        }
        let positive = [
            ("side_length_km", self.side_length_km),
            ("min_dist_km", self.min_dist_km),
            ("alpha", self.alpha),
            ("sigma_ang_deg", self.sigma_ang_deg),
            ("qbar_over_sigma2", self.qbar_over_sigma2),
            ("rho_max", self.rho_max),
            ("sigma2", self.sigma2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sigma_sh_db < 0.0 || self.sigma_lsf_db < 0.0 {
            return bad("shadowing standard deviations must be nonnegative");
        }
        Ok(())
    }

    /// Pathloss gain ω⁻¹ d^(−α) at distance `d_km`.
    pub fn pathloss_gain(&self, d_km: f64) -> f64 {
        10f64.powf(-self.omega_db / 10.0) * d_km.powf(-self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub ue_positions: Vec<[f64; 2]>,
    /// One entry per antenna; co-located antennas share the BS position.
    pub antenna_positions: Vec<[f64; 2]>,
}

impl Geometry {
    pub fn distance(&self, antenna: usize, ue: usize) -> f64 {
        let a = self.antenna_positions[antenna];
        let u = self.ue_positions[ue];
        (a[0] - u[0]).hypot(a[1] - u[1])
    }

    /// Azimuth of UE `ue` seen from antenna 0, measured from the array axis.
    pub fn azimuth(&self, ue: usize) -> f64 {
        let a = self.antenna_positions[0];
        let u = self.ue_positions[ue];
        (u[1] - a[1]).atan2(u[0] - a[0])
    }
}

/// Standard-normal large-scale fading draws scaled to dB. Both tables are
/// always M×K; each case reads the entries it needs so that every case
/// consumes the random stream identically.
#[derive(Debug, Clone, PartialEq)]
pub struct LsfDraws {
    pub shadow_db: DMatrix<f64>,
    pub variation_db: DMatrix<f64>,
}

impl LsfDraws {
    pub fn zeros(antennas: usize, users: usize) -> Self {
        Self {
            shadow_db: DMatrix::zeros(antennas, users),
            variation_db: DMatrix::zeros(antennas, users),
        }
    }

    pub fn draw(cfg: &NetworkConfig, rng: &mut SimRng) -> Self {
        let (m, k) = (cfg.antennas, cfg.users);
        let shadow_db = DMatrix::from_fn(m, k, |_, _| cfg.sigma_sh_db * rng::normal(rng));
        let variation_db = DMatrix::from_fn(m, k, |_, _| cfg.sigma_lsf_db * rng::normal(rng));
        Self { shadow_db, variation_db }
    }
}

/// Per-UE spatial correlation matrices with cached diagonals and average
/// gains.
#[derive(Debug, Clone)]
pub struct CorrelationSet {
    pub r: Vec<CMat>,
    pub diag_r: Vec<Vec<f64>>,
    /// β̄_k = tr(R_k)/M.
    pub beta_bar: Vec<f64>,
    /// Number of matrices that needed PSD repair.
    pub psd_repairs: usize,
}

impl CorrelationSet {
    /// Wraps caller-supplied matrices, symmetrizing and projecting each onto
    /// the PSD cone if needed.
    pub fn new(matrices: Vec<CMat>) -> Self {
        let mut repairs = 0;
        let r: Vec<CMat> = matrices
            .into_iter()
            .map(|mut m| {
                linalg::symmetrize(&mut m);
                let p = linalg::project_psd(&m, PSD_TOL);
                repairs += p.repaired as usize;
                p.matrix
            })
            .collect();
        let diag_r = r.iter().map(linalg::diag_re).collect();
        let beta_bar = r.iter().map(|m| linalg::trace_re(m) / m.nrows() as f64).collect();
        Self {
            r,
            diag_r,
            beta_bar,
            psd_repairs: repairs,
        }
    }

    pub fn antennas(&self) -> usize {
        self.r.first().map_or(0, |m| m.nrows())
    }

    pub fn users(&self) -> usize {
        self.r.len()
    }
}

/// Gaussian local scattering correlation for a half-wavelength ULA:
/// `[R̄]_{mm'} = exp(jπ(m−m')sinθ) · exp(−(σ π (m−m') cosθ)²/2)`.
pub fn local_scattering(antennas: usize, theta: f64, sigma_ang_rad: f64) -> CMat {
    CMat::from_fn(antennas, antennas, |m, mp| {
        let d = m as f64 - mp as f64;
        let phase = Complex64::from_polar(1.0, PI * d * theta.sin());
        let spread = (-(sigma_ang_rad * PI * d * theta.cos()).powi(2) / 2.0).exp();
        phase * spread
    })
}

/// Per-antenna large-scale gains β_mk (M×K) for the configured case.
pub fn large_scale_gains(cfg: &NetworkConfig, geometry: &Geometry, draws: &LsfDraws) -> DMatrix<f64> {
    let (m, k) = (cfg.antennas, cfg.users);
    let db = |v: f64| 10f64.powf(v / 10.0);
    DMatrix::from_fn(m, k, |a, u| match cfg.case {
        ChannelCase::CellFree => cfg.pathloss_gain(geometry.distance(a, u)) * db(draws.shadow_db[(a, u)]),
        colocated => {
            let mean = cfg.pathloss_gain(geometry.distance(0, u)) * db(draws.shadow_db[(0, u)]);
            match colocated {
                ChannelCase::CoCorrI => mean,
                ChannelCase::CoCorrD1 => mean * db(draws.variation_db[(a, 0)]),
                _ => mean * db(draws.variation_db[(a, u)]),
            }
        }
    })
}

/// Builds `R_k = D_k^{1/2} R̄_k D_k^{1/2}` for every UE.
pub fn build_correlation(cfg: &NetworkConfig, geometry: &Geometry, draws: &LsfDraws) -> CorrelationSet {
    let beta = large_scale_gains(cfg, geometry, draws);
    let sigma_ang = cfg.sigma_ang_deg.to_radians();
    let m = cfg.antennas;
    let mats = (0..cfg.users)
        .map(|u| {
            let sqrt_b: Vec<f64> = (0..m).map(|a| beta[(a, u)].sqrt()).collect();
            let rbar = if cfg.case.is_colocated() {
                local_scattering(m, geometry.azimuth(u), sigma_ang)
            } else {
                CMat::identity(m, m)
            };
            CMat::from_fn(m, m, |i, j| rbar[(i, j)] * (sqrt_b[i] * sqrt_b[j]))
        })
        .collect();
    CorrelationSet::new(mats)
}

/// Statistical channel inversion: `q_k = min(ρ_max, ρ̄/β̄_k)`.
pub fn channel_inversion(beta_bar: &[f64], rho_bar: f64, rho_max: f64) -> Vec<f64> {
    beta_bar.iter().map(|&b| rho_max.min(rho_bar / b)).collect()
}

#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub geometry: Geometry,
    pub correlation: CorrelationSet,
    /// Pilot energy per symbol q_k.
    pub pilot_energy: Vec<f64>,
    pub beta_bar: Vec<f64>,
}

fn uniform_point(rng: &mut SimRng, side: f64) -> [f64; 2] {
    let h = side / 2.0;
    [rng.random_range(-h..h), rng.random_range(-h..h)]
}

/// Drops antennas and UEs, draws large-scale fading and applies power
/// control. The same seed always produces the same realization.
pub fn drop_network(cfg: &NetworkConfig, seed: u64) -> Result<NetworkRealization> {
    cfg.validate()?;
    let mut rng = rng::rng_for(seed, &[0xD209]);
    let antenna_positions: Vec<[f64; 2]> = if cfg.case.is_colocated() {
        vec![[0.0, 0.0]; cfg.antennas]
    } else {
        (0..cfg.antennas).map(|_| uniform_point(&mut rng, cfg.side_length_km)).collect()
    };
    let mut ue_positions = Vec::with_capacity(cfg.users);
    for ue in 0..cfg.users {
        let mut placed = None;
        for _ in 0..MAX_DROP_ATTEMPTS {
            let p = uniform_point(&mut rng, cfg.side_length_km);
            let ok = antenna_positions
                .iter()
                .all(|a| (a[0] - p[0]).hypot(a[1] - p[1]) >= cfg.min_dist_km);
            if ok {
                placed = Some(p);
                break;
            }
        }
        match placed {
            Some(p) => ue_positions.push(p),
            None => {
                return Err(Error::DegenerateGeometry {
                    ue,
                    attempts: MAX_DROP_ATTEMPTS,
                })
            }
        }
    }
    let geometry = Geometry {
        ue_positions,
        antenna_positions,
    };
    let draws = LsfDraws::draw(cfg, &mut rng);
    let correlation = build_correlation(cfg, &geometry, &draws);
    let beta_bar = correlation.beta_bar.clone();
    let pilot_energy = channel_inversion(&beta_bar, cfg.rho_bar(), cfg.rho_max);
    Ok(NetworkRealization {
        geometry,
        correlation,
        pilot_energy,
        beta_bar,
    })
}

/// Draws `h_k ~ CN(0, R_k)` from precomputed eigen-factors.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    factors: Vec<CMat>,
}

impl ChannelSampler {
    pub fn new(corr: &CorrelationSet) -> Self {
        Self {
            factors: corr.r.iter().map(linalg::psd_factor).collect(),
        }
    }

    pub fn users(&self) -> usize {
        self.factors.len()
    }

    /// Fills `out[k]` with a fresh draw for every UE.
    pub fn draw_into(&self, rng: &mut SimRng, out: &mut [CVec]) {
        for (f, h) in self.factors.iter().zip(out.iter_mut()) {
            let m = f.nrows();
            let g = CVec::from_fn(m, |_, _| rng::cn(rng, 1.0));
            f.mul_to(&g, h);
        }
    }

    pub fn draw(&self, rng: &mut SimRng) -> Vec<CVec> {
        let mut out: Vec<CVec> = self.factors.iter().map(|f| CVec::zeros(f.nrows())).collect();
        self.draw_into(rng, &mut out);
        out
    }
}

/// `n_trials` independent draws of all UE channels.
pub fn sample_channels(corr: &CorrelationSet, n_trials: usize, seed: u64) -> Vec<Vec<CVec>> {
    let sampler = ChannelSampler::new(corr);
    let mut rng = rng::rng_for(seed, &[0xC4A7]);
    (0..n_trials).map(|_| sampler.draw(&mut rng)).collect()
}

/// Sample covariance of the draws of one UE.
pub fn sample_covariance(draws: &[Vec<CVec>], ue: usize) -> CMat {
    let m = draws[0][ue].len();
    let mut acc = CMat::zeros(m, m);
    for d in draws {
        let h = &d[ue];
        acc.ger(c(1.0), h, &h.conjugate(), c(1.0));
    }
    acc / c(draws.len() as f64)
}
