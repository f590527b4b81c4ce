//! LMMSE channel estimation from de-spread pilots under additive hardware
//! distortion.
//!
//! With `z_k` the de-spread observation of UE k, the estimator is
//! `ĥ_k = R_k Ψ_k⁻¹ z_k` where
//! `Ψ_k = R_k + (σ² I + Σ_i q_i D_ε D_{R_i} D_ε) / (τ_p q_k)`
//! is the covariance of `z_k`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::impairments::ImpairmentProfile;
use crate::linalg::{self, c, CMat, CVec, HermitianSolver};
use crate::network::CorrelationSet;
use crate::rng::{self, SimRng};

/// Ψ_k with a condition number above this is treated as singular.
pub const MAX_CONDITION: f64 = 1e14;

/// Per-UE estimator matrices, immutable once built.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    pub psi: Vec<CMat>,
    /// LMMSE filter `R_k Ψ_k⁻¹`.
    pub filter: Vec<CMat>,
    /// `C̃_k = R_k − R_k Ψ_k⁻¹ R_k`.
    pub err_cov: Vec<CMat>,
    /// `A_k = R_k Ψ_k⁻¹ R_k`, the covariance of the estimate.
    pub a: Vec<CMat>,
    pub condition: Vec<f64>,
    pub pilot_energy: Vec<f64>,
    pub sigma2: f64,
    pub tau_p: usize,
}

impl EstimatorState {
    pub fn users(&self) -> usize {
        self.psi.len()
    }

    /// Diagonal noise-plus-pilot-distortion part `Ψ_k − R_k`.
    pub fn psi_offset(&self, corr: &CorrelationSet, ue: usize) -> Vec<f64> {
        (0..corr.antennas())
            .map(|m| self.psi[ue][(m, m)].re - corr.r[ue][(m, m)].re)
            .collect()
    }
}

/// Diagonal of `σ² I + Σ_i q_i D_ε² D_{R_i}`.
pub fn pilot_noise_diag(corr: &CorrelationSet, profile: &ImpairmentProfile, q: &[f64], sigma2: f64) -> Vec<f64> {
    let eps_sq = profile.eps_sq();
    (0..corr.antennas())
        .map(|m| {
            let pu: f64 = corr.diag_r.iter().zip(q).map(|(d, qi)| qi * d[m]).sum();
            sigma2 + eps_sq[m] * pu
        })
        .collect()
}

pub fn build_estimator(
    corr: &CorrelationSet,
    profile: &ImpairmentProfile,
    q: &[f64],
    sigma2: f64,
    tau_p: usize,
) -> Result<EstimatorState> {
    let k_users = corr.users();
    let m = corr.antennas();
    if q.len() != k_users || profile.antennas() != m {
        return Err(Error::InvalidArgument("dimension mismatch in build_estimator".into()));
    }
    if let Some(bad) = q.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!("pilot energy must be positive, got {bad}")));
    }
    let noise = pilot_noise_diag(corr, profile, q, sigma2);
    let mut state = EstimatorState {
        psi: Vec::with_capacity(k_users),
        filter: Vec::with_capacity(k_users),
        err_cov: Vec::with_capacity(k_users),
        a: Vec::with_capacity(k_users),
        condition: Vec::with_capacity(k_users),
        pilot_energy: q.to_vec(),
        sigma2,
        tau_p,
    };
    for ue in 0..k_users {
        let r = &corr.r[ue];
        let scale = 1.0 / (tau_p as f64 * q[ue]);
        let mut psi = r.clone();
        for i in 0..m {
            psi[(i, i)] += c(noise[i] * scale);
        }
        let condition = linalg::hermitian_condition(&psi);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularCovariance { ue, condition });
        }
        let solver = HermitianSolver::new(&psi).ok_or(Error::SingularCovariance { ue, condition })?;
        // Ψ⁻¹ R, whose adjoint is the filter R Ψ⁻¹.
        let psi_inv_r = solver.solve(r);
        let filter = psi_inv_r.adjoint();
        let mut a = r * &psi_inv_r;
        linalg::symmetrize(&mut a);
        let mut err = r - &a;
        linalg::symmetrize(&mut err);
        state.psi.push(psi);
        state.filter.push(filter);
        state.err_cov.push(err);
        state.a.push(a);
        state.condition.push(condition);
    }
    Ok(state)
}

/// `ĥ_k = R_k Ψ_k⁻¹ z_k`.
pub fn estimate_channel(state: &EstimatorState, ue: usize, z: &CVec) -> CVec {
    &state.filter[ue] * z
}

/// Mutually orthogonal unit-modulus pilots: the first `users` columns of the
/// τ_p-point DFT matrix.
pub fn pilot_book(users: usize, tau_p: usize) -> Vec<CVec> {
    (0..users)
        .map(|k| {
            CVec::from_fn(tau_p, |j, _| {
                Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / tau_p as f64)
            })
        })
        .collect()
}

/// Projects the pilot block onto `φ_k`: `z_k = Y_p φ_k* / (τ_p √q_k)`.
pub fn despread(y_p: &CMat, phi: &CVec, q_k: f64, tau_p: usize) -> Result<CVec> {
    if phi.len() != tau_p || y_p.ncols() != tau_p {
        return Err(Error::InvalidArgument("pilot length does not match τ_p".into()));
    }
    if let Some(z) = phi.iter().find(|z| (z.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidArgument(format!("pilot entry {z} is not unit modulus")));
    }
    let scale = 1.0 / (tau_p as f64 * q_k.sqrt());
    Ok((y_p * phi.conjugate()) * c(scale))
}

/// Received pilot block `Y_p = Σ_i √q_i h_i φ_i^T + N + Ξ`. Distortion is
/// drawn per pilot symbol when a profile is given.
pub fn pilot_block(
    channels: &[CVec],
    q: &[f64],
    pilots: &[CVec],
    sigma2: f64,
    profile: Option<&ImpairmentProfile>,
    rng: &mut SimRng,
) -> CMat {
    let m = channels[0].len();
    let tau_p = pilots[0].len();
    let mut y = CMat::zeros(m, tau_p);
    for ((h, &qi), phi) in channels.iter().zip(q).zip(pilots) {
        y.ger(c(qi.sqrt()), h, &phi.map(|z| z), c(1.0));
    }
    for v in y.iter_mut() {
        *v += rng::cn(rng, sigma2);
    }
    if let Some(p) = profile {
        let d_h = crate::impairments::DistortionDiag::new(channels, q).d_h;
        for j in 0..tau_p {
            let e = crate::impairments::distortion_from_diag(p, &d_h, rng);
            for i in 0..m {
                y[(i, j)] += e[i];
            }
        }
    }
    y
}

/// De-spread observation drawn directly in its statistically equivalent
/// form `z_k = h_k + (n̄ + D_ε D_h^{1/2} r̄)/√(τ_p q_k)`.
pub fn observation_direct(
    h_k: &CVec,
    q_k: f64,
    tau_p: usize,
    sigma2: f64,
    eps: &[f64],
    d_h_pilot: &[f64],
    rng: &mut SimRng,
) -> CVec {
    let s = 1.0 / (tau_p as f64 * q_k).sqrt();
    CVec::from_fn(h_k.len(), |m, _| {
        let n = rng::cn(rng, sigma2);
        let r = rng::cn(rng, 1.0) * (eps[m] * d_h_pilot[m].sqrt());
        h_k[m] + (n + r) * s
    })
}
