//! Achievable uplink SE under the use-and-then-forget bound.
//!
//! Two evaluation routes are provided for the additive distortion model:
//! the closed-form MR SINR ([`sinr_mr_closed_form`]) and a brute-force
//! Monte-Carlo estimate of the UatF moments for any combiner
//! ([`sinr_uatf_monte_carlo`]). The second is the oracle for the first.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, EstimatorState};
use crate::impairments::ImpairmentProfile;
use crate::linalg::{c, CMat, CVec, HermitianSolver};
use crate::network::{ChannelSampler, CorrelationSet};
use crate::rng::{self, SimRng};

/// Trials per independently seeded chunk. Fixed so that results do not
/// depend on the number of worker threads.
pub const TRIALS_PER_CHUNK: usize = 512;

/// Relative standard error above which a denominator estimate is flagged.
pub const MAX_REL_STD_ERR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CombinerKind {
    #[serde(alias = "mr")]
    MR,
    #[serde(alias = "rzf")]
    RZF,
}

impl CombinerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::MR => "MR",
            Self::RZF => "RZF",
        }
    }
}

/// Maps channel estimates to receive combining vectors.
pub trait Combiner: Sync {
    fn combine(&self, hhat: &[CVec], data_energy: &[f64], sigma2: f64) -> Vec<CVec>;
}

impl Combiner for CombinerKind {
    fn combine(&self, hhat: &[CVec], data_energy: &[f64], sigma2: f64) -> Vec<CVec> {
        match self {
            Self::MR => hhat.to_vec(),
            Self::RZF => rzf(hhat, data_energy, sigma2),
        }
    }
}

/// `v_k = (Σ_i p_i ĥ_i ĥ_i^H + σ² I)⁻¹ ĥ_k p_k`.
pub fn rzf(hhat: &[CVec], p: &[f64], sigma2: f64) -> Vec<CVec> {
    let m = hhat[0].len();
    let mut s = CMat::identity(m, m) * c(sigma2);
    for (h, &pi) in hhat.iter().zip(p) {
        s.gerc(c(pi), h, h, c(1.0));
    }
    let k = hhat.len();
    let mut rhs = CMat::zeros(m, k);
    for (j, (h, &pj)) in hhat.iter().zip(p).enumerate() {
        rhs.set_column(j, &(h * c(pj)));
    }
    let sol = match HermitianSolver::new(&s) {
        Some(solver) => solver.solve(&rhs),
        None => s.lu().solve(&rhs).expect("RZF system is singular"),
    };
    (0..k).map(|j| sol.column(j).into_owned()).collect()
}

/// Everything that defines one uplink operating point.
#[derive(Debug, Clone, Copy)]
pub struct UplinkSetup<'a> {
    pub corr: &'a CorrelationSet,
    pub profile: &'a ImpairmentProfile,
    /// Data energy per symbol p_k.
    pub data_energy: &'a [f64],
    /// Pilot energy per symbol q_k.
    pub pilot_energy: &'a [f64],
    pub sigma2: f64,
    pub tau_p: usize,
    pub tau_c: usize,
}

impl UplinkSetup<'_> {
    pub fn estimator(&self) -> Result<EstimatorState> {
        estimation::build_estimator(self.corr, self.profile, self.pilot_energy, self.sigma2, self.tau_p)
    }
}

/// Labeled SINR numerator and denominator terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SinrComponents {
    pub numerator: f64,
    pub self_distortion: f64,
    pub inter_user_distortion: f64,
    pub additional_distortion: f64,
    /// Σ_i p_i E{|v^H h_i|²} − p_k |E{v^H h_k}|²; includes channel-gain
    /// uncertainty and, for Monte-Carlo estimates, the pilot-distortion terms.
    pub interference: f64,
    pub noise: f64,
    pub data_distortion: f64,
}

impl SinrComponents {
    pub fn denominator(&self) -> f64 {
        self.self_distortion
            + self.inter_user_distortion
            + self.additional_distortion
            + self.interference
            + self.noise
            + self.data_distortion
    }

    pub fn all_nonnegative(&self) -> bool {
        [
            self.numerator,
            self.self_distortion,
            self.inter_user_distortion,
            self.additional_distortion,
            self.interference,
            self.noise,
            self.data_distortion,
        ]
        .iter()
        .all(|&v| v >= 0.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SinrReport {
    pub sinr: Vec<f64>,
    pub components: Vec<SinrComponents>,
    pub se: Vec<f64>,
    /// Delta-method standard error of each SINR (Monte-Carlo only).
    pub sinr_std_err: Option<Vec<f64>>,
    /// UEs whose denominator estimate has relative standard error > 5%.
    pub flagged: Vec<bool>,
}

impl SinrReport {
    fn from_components(components: Vec<SinrComponents>, tau_p: usize, tau_c: usize) -> Self {
        let sinr: Vec<f64> = components.iter().map(|c| c.numerator / c.denominator()).collect();
        let se = sinr.iter().map(|&s| se_from_sinr(s, tau_p, tau_c)).collect();
        let flagged = vec![false; sinr.len()];
        Self {
            sinr,
            components,
            se,
            sinr_std_err: None,
            flagged,
        }
    }

    pub fn sum_se(&self) -> f64 {
        self.se.iter().sum()
    }
}

/// `(1 − τ_p/τ_c) log₂(1 + SINR)`.
pub fn se_from_sinr(sinr: f64, tau_p: usize, tau_c: usize) -> f64 {
    (1.0 - tau_p as f64 / tau_c as f64) * (1.0 + sinr).log2()
}

/// Closed-form effective SINR with MR combining, term by term.
pub fn sinr_mr_closed_form(setup: &UplinkSetup<'_>, state: &EstimatorState) -> SinrReport {
    let corr = setup.corr;
    let (m, k_users) = (corr.antennas(), corr.users());
    let x = setup.profile.eps_sq();
    let p = setup.data_energy;
    let q = setup.pilot_energy;
    let tau_p = setup.tau_p as f64;

    let components = (0..k_users)
        .map(|k| {
            let a = &state.a[k];
            let b = &state.filter[k];
            let tr_a: f64 = (0..m).map(|l| a[(l, l)].re).sum();
            let a_diag: Vec<f64> = (0..m).map(|l| a[(l, l)].re).collect();
            let b_abs2 = b.map(|z| z.norm_sqr());

            let mut out = SinrComponents {
                numerator: p[k] * tr_a * tr_a,
                self_distortion: p[k] * (0..m).map(|l| x[l] * a_diag[l] * a_diag[l]).sum::<f64>(),
                noise: setup.sigma2 * tr_a,
                ..Default::default()
            };
            for i in 0..k_users {
                let r_i = &corr.r[i];
                let w = p[i] * q[i] / (tau_p * q[k]);
                // [R_i R_k Ψ_k⁻¹]_ll = Σ_n [R_i]_ln [B]_nl
                let mut cross = 0.0;
                for l in 0..m {
                    let mut s = Complex64::new(0.0, 0.0);
                    for n in 0..m {
                        s += r_i[(l, n)] * b[(n, l)];
                    }
                    cross += x[l] * s.norm_sqr();
                }
                out.inter_user_distortion += w * cross;

                let mut bil = 0.0;
                for l in 0..m {
                    let mut row = 0.0;
                    for n in 0..m {
                        row += b_abs2[(l, n)] * r_i[(l, n)].norm_sqr() * x[n];
                    }
                    bil += x[l] * row;
                }
                out.additional_distortion += w * bil;

                // tr(R_i A_k)
                let mut tr_ra = 0.0;
                for l in 0..m {
                    for n in 0..m {
                        tr_ra += (r_i[(l, n)] * a[(n, l)]).re;
                    }
                }
                out.interference += p[i] * tr_ra;
                out.data_distortion += p[i] * (0..m).map(|l| x[l] * corr.diag_r[i][l] * a_diag[l]).sum::<f64>();
            }
            out
        })
        .collect();
    SinrReport::from_components(components, setup.tau_p, setup.tau_c)
}

/// Streaming sums for one UE's UatF moments.
#[derive(Debug, Clone, Default)]
pub struct UatfAccumulator {
    pub n: f64,
    // a = v^H h_k, b = Σ_i p_i |v^H h_i|² + |v^H n|² + |v^H e|²
    s_re: f64,
    s_im: f64,
    s_b: f64,
    s_rr: f64,
    s_ii: f64,
    s_bb: f64,
    s_ri: f64,
    s_rb: f64,
    s_ib: f64,
    s_signal: f64,
    s_noise: f64,
    s_dist: f64,
}

/// Per-trial inner products for one UE.
#[derive(Debug, Clone, Copy)]
pub struct UatfSample {
    /// `v_k^H h_k`.
    pub gain: Complex64,
    /// `Σ_i p_i |v_k^H h_i|²`.
    pub received: f64,
    /// `|v_k^H n|²`.
    pub noise: f64,
    /// `|v_k^H e|²`.
    pub distortion: f64,
}

impl UatfAccumulator {
    pub fn push(&mut self, s: UatfSample) {
        let (re, im) = (s.gain.re, s.gain.im);
        let b = s.received + s.noise + s.distortion;
        self.n += 1.0;
        self.s_re += re;
        self.s_im += im;
        self.s_b += b;
        self.s_rr += re * re;
        self.s_ii += im * im;
        self.s_bb += b * b;
        self.s_ri += re * im;
        self.s_rb += re * b;
        self.s_ib += im * b;
        self.s_signal += s.received;
        self.s_noise += s.noise;
        self.s_dist += s.distortion;
    }

    pub fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.s_re += o.s_re;
        self.s_im += o.s_im;
        self.s_b += o.s_b;
        self.s_rr += o.s_rr;
        self.s_ii += o.s_ii;
        self.s_bb += o.s_bb;
        self.s_ri += o.s_ri;
        self.s_rb += o.s_rb;
        self.s_ib += o.s_ib;
        self.s_signal += o.s_signal;
        self.s_noise += o.s_noise;
        self.s_dist += o.s_dist;
    }

    /// Components, SINR standard error and the denominator's relative
    /// standard error for a UE with data energy `p_k`.
    pub fn finish(&self, p_k: f64) -> (SinrComponents, f64, f64) {
        let n = self.n;
        let (mr, mi, mb) = (self.s_re / n, self.s_im / n, self.s_b / n);
        let g = p_k * (mr * mr + mi * mi);
        let comps = SinrComponents {
            numerator: g,
            interference: (self.s_signal / n - g).max(0.0),
            noise: self.s_noise / n,
            data_distortion: self.s_dist / n,
            ..Default::default()
        };
        let d = mb - g;
        // Sample covariance of (Re a, Im a, b).
        let cov = |sxy: f64, mx: f64, my: f64| (sxy / n - mx * my) * n / (n - 1.0);
        let crr = cov(self.s_rr, mr, mr);
        let cii = cov(self.s_ii, mi, mi);
        let cbb = cov(self.s_bb, mb, mb);
        let cri = cov(self.s_ri, mr, mi);
        let crb = cov(self.s_rb, mr, mb);
        let cib = cov(self.s_ib, mi, mb);
        let quad = |gr: f64, gi: f64, gb: f64| {
            gr * gr * crr + gi * gi * cii + gb * gb * cbb + 2.0 * (gr * gi * cri + gr * gb * crb + gi * gb * cib)
        };
        // SINR = g / (β − g)
        let (gr, gi, gb) = (
            mb / (d * d) * 2.0 * p_k * mr,
            mb / (d * d) * 2.0 * p_k * mi,
            -g / (d * d),
        );
        let sinr_se = (quad(gr, gi, gb).max(0.0) / n).sqrt();
        let den_se = (quad(-2.0 * p_k * mr, -2.0 * p_k * mi, 1.0).max(0.0) / n).sqrt();
        (comps, sinr_se, den_se / d)
    }
}

/// Monte-Carlo estimate of the UatF SINR for an arbitrary combiner, with
/// channels, pilot noise, pilot distortion, data noise and data distortion
/// all drawn jointly. Pilot and data phases share each channel draw.
pub fn sinr_uatf_with<C: Combiner>(
    combiner: &C,
    setup: &UplinkSetup<'_>,
    n_trials: usize,
    seed: u64,
) -> Result<SinrReport> {
    if n_trials < 2 {
        return Err(Error::InvalidArgument("need at least two Monte-Carlo trials".into()));
    }
    let state = setup.estimator()?;
    let sampler = ChannelSampler::new(setup.corr);
    let k_users = setup.corr.users();
    let n_chunks = n_trials.div_ceil(TRIALS_PER_CHUNK);
    let partials: Vec<Vec<UatfAccumulator>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let count = TRIALS_PER_CHUNK.min(n_trials - chunk * TRIALS_PER_CHUNK);
            let mut rng = rng::rng_for(seed, &[0x5E, chunk as u64]);
            let mut acc = vec![UatfAccumulator::default(); k_users];
            let mut h: Vec<CVec> = (0..k_users).map(|_| CVec::zeros(setup.corr.antennas())).collect();
            for _ in 0..count {
                additive_trial(combiner, setup, &state, &sampler, &mut h, &mut rng, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![UatfAccumulator::default(); k_users];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(report_from_accumulators(&total, setup.data_energy, setup.tau_p, setup.tau_c))
}

pub(crate) fn report_from_accumulators(acc: &[UatfAccumulator], p: &[f64], tau_p: usize, tau_c: usize) -> SinrReport {
    let mut comps = Vec::with_capacity(acc.len());
    let mut errs = Vec::with_capacity(acc.len());
    let mut flags = Vec::with_capacity(acc.len());
    for (a, &pk) in acc.iter().zip(p) {
        let (c, se, rel) = a.finish(pk);
        comps.push(c);
        errs.push(se);
        flags.push(!(rel <= MAX_REL_STD_ERR));
    }
    let mut rep = SinrReport::from_components(comps, tau_p, tau_c);
    rep.sinr_std_err = Some(errs);
    rep.flagged = flags;
    rep
}

fn additive_trial<C: Combiner>(
    combiner: &C,
    setup: &UplinkSetup<'_>,
    state: &EstimatorState,
    sampler: &ChannelSampler,
    h: &mut [CVec],
    rng: &mut SimRng,
    acc: &mut [UatfAccumulator],
) {
    let m = setup.corr.antennas();
    let eps = &setup.profile.eps;
    sampler.draw_into(rng, h);
    let mut d_pilot = vec![0.0; m];
    let mut d_data = vec![0.0; m];
    for (i, hi) in h.iter().enumerate() {
        for (l, z) in hi.iter().enumerate() {
            let e = z.norm_sqr();
            d_pilot[l] += setup.pilot_energy[i] * e;
            d_data[l] += setup.data_energy[i] * e;
        }
    }
    let hhat: Vec<CVec> = h
        .iter()
        .enumerate()
        .map(|(k, hk)| {
            let z = estimation::observation_direct(hk, setup.pilot_energy[k], setup.tau_p, setup.sigma2, eps, &d_pilot, rng);
            estimation::estimate_channel(state, k, &z)
        })
        .collect();
    let v = combiner.combine(&hhat, setup.data_energy, setup.sigma2);
    let noise = CVec::from_fn(m, |_, _| rng::cn(rng, setup.sigma2));
    let dist = CVec::from_fn(m, |l, _| rng::cn(rng, 1.0) * (eps[l] * d_data[l].sqrt()));
    for (k, vk) in v.iter().enumerate() {
        let mut received = 0.0;
        for (i, hi) in h.iter().enumerate() {
            received += setup.data_energy[i] * vk.dotc(hi).norm_sqr();
        }
        acc[k].push(UatfSample {
            gain: vk.dotc(&h[k]),
            received,
            noise: vk.dotc(&noise).norm_sqr(),
            distortion: vk.dotc(&dist).norm_sqr(),
        });
    }
}

/// [`sinr_uatf_with`] for one of the built-in combiners.
pub fn sinr_uatf_monte_carlo(
    kind: CombinerKind,
    setup: &UplinkSetup<'_>,
    n_trials: usize,
    seed: u64,
) -> Result<SinrReport> {
    sinr_uatf_with(&kind, setup, n_trials, seed)
}
