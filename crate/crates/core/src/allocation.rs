//! Minimum-pilot-distortion bit allocation and integer rounding.
//!
//! The convex program
//!
//! ```text
//! minimize   Σ_m ε_m² p_m^u
//! subject to Σ_m log₂(ζ_m/ε_m) ≤ b_tot
//! ```
//!
//! has the closed-form optimum
//! `ε_m = (2^(−b_tot) Π_m' ζ_m' √(p_m'^u / p_m^u))^(1/M)`, with the budget
//! active. Products are evaluated as sums of logarithms.

use crate::error::{Error, Result};
use crate::network::CorrelationSet;

/// Average undistorted received pilot power per antenna,
/// `p_m^u = Σ_i q_i [R_i]_mm`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotPowerProfile {
    pub p_u: Vec<f64>,
}

impl PilotPowerProfile {
    pub fn new(p_u: Vec<f64>) -> Result<Self> {
        if let Some((m, v)) = p_u.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "received pilot power at antenna {m} must be positive, got {v}"
            )));
        }
        Ok(Self { p_u })
    }

    pub fn from_network(corr: &CorrelationSet, q: &[f64]) -> Result<Self> {
        let p_u = (0..corr.antennas())
            .map(|m| corr.diag_r.iter().zip(q).map(|(d, qi)| qi * d[m]).sum())
            .collect();
        Self::new(p_u)
    }

    pub fn antennas(&self) -> usize {
        self.p_u.len()
    }
}

/// Total ADC bit budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitBudget(pub i64);

impl BitBudget {
    pub fn checked(b_tot: i64, antennas: usize) -> Result<Self> {
        if b_tot < antennas as i64 {
            return Err(Error::BudgetTooSmall { b_tot, antennas });
        }
        Ok(Self(b_tot))
    }

    pub fn bits(self) -> f64 {
        self.0 as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealAllocation {
    pub bits: Vec<f64>,
    pub eps: Vec<f64>,
}

/// Pilot-distortion objective `Σ_m ε_m² p_m^u`.
pub fn pilot_distortion(eps: &[f64], p_u: &[f64]) -> f64 {
    eps.iter().zip(p_u).map(|(e, p)| e * e * p).sum()
}

/// Closed-form optimum of the minimum-pilot-distortion program.
pub fn allocate_min_pilot_distortion(p_u: &PilotPowerProfile, zeta: &[f64], b_tot: f64) -> Result<RealAllocation> {
    let m = p_u.antennas();
    if zeta.len() != m {
        return Err(Error::InvalidArgument("zeta length differs from antenna count".into()));
    }
    let mf = m as f64;
    let sum_log_zeta: f64 = zeta.iter().map(|z| z.log2()).sum();
    let log_p: Vec<f64> = p_u.p_u.iter().map(|p| p.log2()).collect();
    let sum_log_p: f64 = log_p.iter().sum();
    // log₂ ε_m = (−b_tot + Σ log₂ζ + ½ Σ log₂ p_m' − ½ M log₂ p_m) / M
    let mut bits = Vec::with_capacity(m);
    let mut eps = Vec::with_capacity(m);
    for (lp, z) in log_p.iter().zip(zeta) {
        let log_eps = (-b_tot + sum_log_zeta + 0.5 * sum_log_p - 0.5 * mf * lp) / mf;
        eps.push(log_eps.exp2());
        bits.push(z.log2() - log_eps);
    }
    Ok(RealAllocation { bits, eps })
}

/// KKT diagnostics for a candidate ε of the minimum-pilot-distortion program.
#[derive(Debug, Clone)]
pub struct KktReport {
    /// `Σ log₂(ζ_m/ε_m) − b_tot`; must be ≤ 0.
    pub budget_residual: f64,
    /// Multiplier implied by stationarity, averaged over antennas.
    pub lambda: f64,
    /// `(max λ_m − min λ_m) / mean λ_m` over per-antenna candidates.
    pub stationarity_spread: f64,
    /// `|λ · budget_residual|`.
    pub complementary_slackness: f64,
    pub passed: bool,
}

/// Checks primal feasibility, dual feasibility, stationarity
/// `2ε_m p_m^u = λ/(ln 2 · ε_m)` and complementary slackness.
pub fn verify_kkt(eps: &[f64], p_u: &[f64], zeta: &[f64], b_tot: f64, tol: f64) -> KktReport {
    let budget_residual: f64 = zeta.iter().zip(eps).map(|(z, e)| (z / e).log2()).sum::<f64>() - b_tot;
    let candidates: Vec<f64> = eps
        .iter()
        .zip(p_u)
        .map(|(e, p)| 2.0 * std::f64::consts::LN_2 * e * e * p)
        .collect();
    let mean = candidates.iter().sum::<f64>() / candidates.len() as f64;
    let (lo, hi) = candidates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let spread = if mean > 0.0 { (hi - lo) / mean } else { f64::INFINITY };
    // Slackness is measured relative to the multiplier scale so that the
    // check is invariant to the units of p^u.
    let slack = (mean * budget_residual).abs();
    let slack_rel = budget_residual.abs();
    let passed = budget_residual <= tol && mean >= 0.0 && spread <= tol && slack_rel <= tol;
    KktReport {
        budget_residual,
        lambda: mean,
        stationarity_spread: spread,
        complementary_slackness: slack,
        passed,
    }
}

/// Integer rounding of a real bit allocation.
///
/// Starts from the nearest integers (ties away from zero), lifts every entry
/// to at least one bit and then repeatedly adds one bit to the `N_diff`
/// lowest entries (or removes one from the `|N_diff|` highest) until the
/// budget is met exactly. Ties go to the lowest antenna index.
pub fn round_to_integer_bits(b_op: &[f64], b_tot: i64) -> Result<Vec<i64>> {
    let m = b_op.len();
    if b_tot < m as i64 {
        return Err(Error::BudgetTooSmall { b_tot, antennas: m });
    }
    let mut b: Vec<i64> = b_op.iter().map(|v| v.round() as i64).collect();
    loop {
        for v in b.iter_mut() {
            if *v < 1 {
                *v = 1;
            }
        }
        let n_diff = b_tot - b.iter().sum::<i64>();
        if n_diff == 0 {
            return Ok(b);
        }
        let mut order: Vec<usize> = (0..m).collect();
        if n_diff > 0 {
            order.sort_by_key(|&i| (b[i], i));
            for &i in order.iter().take(n_diff as usize) {
                b[i] += 1;
            }
        } else {
            order.sort_by_key(|&i| (std::cmp::Reverse(b[i]), i));
            for &i in order.iter().take((-n_diff) as usize) {
                b[i] -= 1;
            }
        }
    }
}
