//! Power consumption and energy efficiency.
//!
//! Transmit quantities inside the simulator are energies per symbol (J);
//! multiplying by the bandwidth gives watts. Everything here is SI: W, J/bit,
//! Hz, bit/J.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::DEFAULT_BANDWIDTH_HZ;
use crate::optimize::PowerConstraintSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    /// Fixed circuit and baseband power (W).
    pub p_cst: f64,
    /// Circuit power per UE (W).
    pub p_ue: f64,
    /// Bit-resolution independent circuit power per BS antenna (W).
    pub p_bsa: f64,
    /// Coding, decoding and backhaul energy (J/bit).
    pub p_cd: f64,
    /// Power amplifier efficiency.
    pub eta: f64,
    /// ADC constant (W per conversion step).
    pub d1: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    pub zeta: f64,
    pub tau_p: usize,
    pub tau_c: usize,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_cst: 10.0,
            p_ue: 0.1,
            p_bsa: 0.05,
            // 1.15 J/Gbit
            p_cd: 1.15e-9,
            eta: 0.39,
            d1: 0.006,
            bandwidth: DEFAULT_BANDWIDTH_HZ,
            zeta: 1.6,
            tau_p: 5,
            tau_c: 200,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("p_cst", self.p_cst),
            ("p_ue", self.p_ue),
            ("p_bsa", self.p_bsa),
            ("p_cd", self.p_cd),
            ("eta", self.eta),
            ("d1", self.d1),
            ("bandwidth", self.bandwidth),
            ("zeta", self.zeta),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("power model: {name} must be positive, got {v}")));
            }
        }
        if self.tau_p == 0 || self.tau_p > self.tau_c {
            return Err(Error::InvalidArgument("power model: need 0 < τ_p ≤ τ_c".into()));
        }
        Ok(())
    }

    /// Budgeted constraint for the power-constrained allocation.
    pub fn constraint_spec(&self, gamma_pc: f64) -> PowerConstraintSpec {
        PowerConstraintSpec {
            gamma_pc,
            d1: self.d1,
            eta: self.eta,
            bandwidth: self.bandwidth,
            tau_p: self.tau_p,
            tau_c: self.tau_c,
        }
    }

    fn pilot_fraction(&self) -> f64 {
        self.tau_p as f64 / self.tau_c as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdcPower {
    /// `D₁ 2^{b_m}` for one converter (W).
    pub per_antenna: Vec<f64>,
    /// I and Q converters on every antenna (W).
    pub total: f64,
}

impl AdcPower {
    fn from_per_antenna(per_antenna: Vec<f64>) -> Self {
        let total = 2.0 * per_antenna.iter().sum::<f64>();
        Self { per_antenna, total }
    }
}

/// ADC power for real-valued resolutions (each ≥ 1 bit).
pub fn adc_power_bits(bits: &[f64], d1: f64) -> AdcPower {
    AdcPower::from_per_antenna(bits.iter().map(|b| d1 * b.exp2()).collect())
}

/// ADC power from impairment levels, `D₁ ζ_m / ε_m`.
pub fn adc_power_eps(eps: &[f64], zeta: &[f64], d1: f64) -> AdcPower {
    AdcPower::from_per_antenna(eps.iter().zip(zeta).map(|(e, z)| d1 * z / e).collect())
}

/// Data transmission plus ADC power (W).
pub fn total_tx_adc_power(p: &[f64], eps: &[f64], model: &PowerModel) -> f64 {
    let data = (1.0 - model.pilot_fraction()) * model.bandwidth / model.eta * p.iter().sum::<f64>();
    let adc = 2.0 * model.d1 * eps.iter().map(|e| model.zeta / e).sum::<f64>();
    data + adc
}

/// Pilot transmission power (W).
pub fn pilot_power(q: &[f64], model: &PowerModel) -> f64 {
    model.pilot_fraction() * model.bandwidth / model.eta * q.iter().sum::<f64>()
}

/// Every power term of the energy-efficiency denominator (W).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub circuit: f64,
    pub pilot: f64,
    pub tx_adc: f64,
    pub coding: f64,
}

impl PowerBreakdown {
    pub fn total(&self) -> f64 {
        self.circuit + self.pilot + self.tx_adc + self.coding
    }
}

pub fn power_breakdown(se_sum: f64, p: &[f64], q: &[f64], eps: &[f64], model: &PowerModel) -> PowerBreakdown {
    let (m, k) = (eps.len() as f64, p.len() as f64);
    PowerBreakdown {
        circuit: model.p_cst + model.p_ue * k + model.p_bsa * m,
        pilot: pilot_power(q, model),
        tx_adc: total_tx_adc_power(p, eps, model),
        coding: model.p_cd * model.bandwidth * se_sum,
    }
}

/// Energy efficiency in bit/J. The antenna and UE counts are taken from the
/// lengths of `eps` and `p`.
pub fn energy_efficiency(se_sum: f64, p: &[f64], q: &[f64], eps: &[f64], model: &PowerModel) -> f64 {
    let rate = model.bandwidth * se_sum;
    if rate == 0.0 {
        return 0.0;
    }
    rate / power_breakdown(se_sum, p, q, eps, model).total()
}
