//! Additive hardware-distortion model and the ADC-bit ↔ impairment mapping
//! `ε_m = ζ_m 2^(−b_m)`.

use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::rng::{self, SimRng};

/// Per-antenna impairment levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentProfile {
    pub eps: Vec<f64>,
    pub zeta: Vec<f64>,
    pub bits: Option<Vec<f64>>,
}

impl ImpairmentProfile {
    /// Perfect hardware on `antennas` antennas.
    pub fn ideal(antennas: usize, zeta: f64) -> Self {
        Self {
            eps: vec![0.0; antennas],
            zeta: vec![zeta; antennas],
            bits: None,
        }
    }

    /// Profile from raw impairment levels; bits are derived where ε > 0.
    pub fn from_eps(eps: Vec<f64>, zeta: Vec<f64>) -> Self {
        Self {
            eps,
            zeta,
            bits: None,
        }
    }

    pub fn antennas(&self) -> usize {
        self.eps.len()
    }

    /// ε_m² for every antenna.
    pub fn eps_sq(&self) -> Vec<f64> {
        self.eps.iter().map(|e| e * e).collect()
    }
}

fn check_zeta(zeta: &[f64], allow_any_zeta: bool) -> Result<()> {
    for &z in zeta {
        let ok = if allow_any_zeta { z > 0.0 } else { z > 1.0 && z < 2.0 };
        if !ok {
            return Err(Error::InvalidArgument(format!("ADC constant ζ = {z} outside (1, 2)")));
        }
    }
    Ok(())
}

/// Maps bit resolutions to impairment levels. `allow_any_zeta` lifts the
/// `1 < ζ < 2` range check.
pub fn eps_from_bits(zeta: &[f64], bits: &[f64], allow_any_zeta: bool) -> Result<ImpairmentProfile> {
    if zeta.len() != bits.len() {
        return Err(Error::InvalidArgument("zeta and bits lengths differ".into()));
    }
    check_zeta(zeta, allow_any_zeta)?;
    if let Some(b) = bits.iter().find(|&&b| !(b > 0.0)) {
        return Err(Error::InvalidArgument(format!("bit resolution must be positive, got {b}")));
    }
    let eps = zeta.iter().zip(bits).map(|(z, b)| z * (-b).exp2()).collect();
    Ok(ImpairmentProfile {
        eps,
        zeta: zeta.to_vec(),
        bits: Some(bits.to_vec()),
    })
}

/// `b_m = log₂(ζ_m/ε_m)`; infinite for ε = 0.
pub fn bits_from_eps(zeta: &[f64], eps: &[f64]) -> Vec<f64> {
    zeta.iter().zip(eps).map(|(z, e)| (z / e).log2()).collect()
}

/// Diagonal of `D_h = Σ_i E{|x_i|²} diag(|[h_i]_m|²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionDiag {
    pub d_h: Vec<f64>,
}

impl DistortionDiag {
    pub fn new(channels: &[CVec], symbol_energies: &[f64]) -> Self {
        let m = channels.first().map_or(0, |h| h.len());
        let mut d_h = vec![0.0; m];
        for (h, &e) in channels.iter().zip(symbol_energies) {
            for (d, z) in d_h.iter_mut().zip(h.iter()) {
                *d += e * z.norm_sqr();
            }
        }
        Self { d_h }
    }
}

/// Draws `e = D_ε D_h^{1/2} r` with `r ~ CN(0, I)`.
pub fn distortion_sample(
    profile: &ImpairmentProfile,
    channels: &[CVec],
    symbol_energies: &[f64],
    rng: &mut SimRng,
) -> CVec {
    let diag = DistortionDiag::new(channels, symbol_energies);
    distortion_from_diag(profile, &diag.d_h, rng)
}

/// Same as [`distortion_sample`] with a precomputed `D_h` diagonal.
pub fn distortion_from_diag(profile: &ImpairmentProfile, d_h: &[f64], rng: &mut SimRng) -> CVec {
    CVec::from_fn(d_h.len(), |m, _| {
        let r = rng::cn(rng, 1.0);
        r * (profile.eps[m] * d_h[m].sqrt())
    })
}
