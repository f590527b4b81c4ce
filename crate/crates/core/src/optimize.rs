//! SINR-driven impairment and power allocation as geometric programs.
//!
//! With `x_m = ε_m²` and the estimator covariance `Ψ_k` held fixed, the MR
//! SINR of UE k is `p_k w_k / f_k(x, p)` where `w_k = tr(A_k)²` and `f_k` is a
//! posynomial in `(x, p)`:
//!
//! ```text
//! f_k = σ² tr(A_k) + Σ_i p_i tr(R_i A_k)
//!     + p_k Σ_m x_m [A_k]_mm²
//!     + Σ_i p_i Σ_m x_m ( c_k q_i |[R_i R_kΨ_k⁻¹]_mm|² + [R_i]_mm [A_k]_mm )
//!     + Σ_i p_i Σ_{l,m} x_l x_m c_k q_i |[R_kΨ_k⁻¹]_lm|² |[R_i]_lm|²
//! ```
//!
//! with `c_k = 1/(τ_p q_k)`. [`iterate_psi`] alternates between solving the
//! GP and rebuilding `Ψ_k` from the new impairment levels.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, EstimatorState};
use crate::gp::{self, GpOptions, GpProblem, GpSolution, GpStatus, Monomial, Posynomial};
use crate::impairments::ImpairmentProfile;
use crate::network::CorrelationSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SinrObjective {
    MaxProd,
    MaxMin,
}

/// Coefficient tables of every `f_k` for a fixed estimator.
#[derive(Debug, Clone)]
pub struct SinrGpData {
    pub antennas: usize,
    pub users: usize,
    /// `tr(A_k)²`.
    pub w: Vec<f64>,
    /// `σ² tr(A_k)`.
    pub constant: Vec<f64>,
    /// `[k][i]`: coefficient of `p_i`.
    pub interference: Vec<Vec<f64>>,
    /// `[k][m]`: coefficient of `p_k x_m`.
    pub self_coef: Vec<Vec<f64>>,
    /// `[k][i][m]`: coefficient of `p_i x_m`.
    pub cross: Vec<Vec<Vec<f64>>>,
    /// `[k][i]`: symmetric matrix whose `(l, m)` entry multiplies
    /// `p_i x_l x_m`.
    pub bilinear: Vec<Vec<DMatrix<f64>>>,
}

impl SinrGpData {
    pub fn new(corr: &CorrelationSet, state: &EstimatorState) -> Result<Self> {
        let (m, k_users) = (corr.antennas(), corr.users());
        let q = &state.pilot_energy;
        let tau_p = state.tau_p as f64;
        let mut data = Self {
            antennas: m,
            users: k_users,
            w: Vec::with_capacity(k_users),
            constant: Vec::with_capacity(k_users),
            interference: Vec::with_capacity(k_users),
            self_coef: Vec::with_capacity(k_users),
            cross: Vec::with_capacity(k_users),
            bilinear: Vec::with_capacity(k_users),
        };
        for k in 0..k_users {
            let a = &state.a[k];
            let b = &state.filter[k];
            let a_diag: Vec<f64> = (0..m).map(|l| a[(l, l)].re).collect();
            let tr_a: f64 = a_diag.iter().sum();
            if !(tr_a > 0.0) {
                return Err(Error::DegenerateUe(k));
            }
            let c_k = 1.0 / (tau_p * q[k]);
            let b_abs2 = b.map(|z| z.norm_sqr());
            let mut interf = Vec::with_capacity(k_users);
            let mut cross = Vec::with_capacity(k_users);
            let mut bil = Vec::with_capacity(k_users);
            for i in 0..k_users {
                let r_i = &corr.r[i];
                let mut tr_ra = 0.0;
                for l in 0..m {
                    for n in 0..m {
                        tr_ra += (r_i[(l, n)] * a[(n, l)]).re;
                    }
                }
                interf.push(tr_ra.max(0.0));
                let row: Vec<f64> = (0..m)
                    .map(|l| {
                        let mut s = num_complex::Complex64::new(0.0, 0.0);
                        for n in 0..m {
                            s += r_i[(l, n)] * b[(n, l)];
                        }
                        c_k * q[i] * s.norm_sqr() + corr.diag_r[i][l] * a_diag[l]
                    })
                    .collect();
                cross.push(row);
                bil.push(DMatrix::from_fn(m, m, |l, n| {
                    c_k * q[i] * b_abs2[(l, n)] * r_i[(l, n)].norm_sqr()
                }));
            }
            data.w.push(tr_a * tr_a);
            data.constant.push(state.sigma2 * tr_a);
            data.interference.push(interf);
            data.self_coef.push(a_diag.iter().map(|v| v * v).collect());
            data.cross.push(cross);
            data.bilinear.push(bil);
        }
        for k in 0..k_users {
            assert!(data.constant[k] > 0.0, "f_k constant term must be positive");
            assert!(
                data.self_coef[k].iter().all(|&v| v >= 0.0)
                    && data.interference[k].iter().all(|&v| v >= 0.0)
                    && data.cross[k].iter().flatten().all(|&v| v >= 0.0)
                    && data.bilinear[k].iter().all(|mat| mat.iter().all(|&v| v >= 0.0)),
                "negative posynomial coefficient for UE {k}"
            );
        }
        Ok(data)
    }

    /// `f_k(x, p)`.
    pub fn denominator(&self, k: usize, x: &[f64], p: &[f64]) -> f64 {
        let m = self.antennas;
        let mut f = self.constant[k];
        for i in 0..self.users {
            f += p[i] * self.interference[k][i];
            let mut lin = 0.0;
            let mut quad = 0.0;
            let bil = &self.bilinear[k][i];
            for l in 0..m {
                lin += self.cross[k][i][l] * x[l];
                let mut row = 0.0;
                for n in 0..m {
                    row += bil[(l, n)] * x[n];
                }
                quad += x[l] * row;
            }
            f += p[i] * (lin + quad);
        }
        f + p[k] * (0..m).map(|l| self.self_coef[k][l] * x[l]).sum::<f64>()
    }

    /// MR SINR `p_k w_k / f_k(x, p)` for every UE.
    pub fn sinr(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        (0..self.users).map(|k| p[k] * self.w[k] / self.denominator(k, x, p)).collect()
    }
}

/// Maximum power-consumption constraint on data transmission plus ADCs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConstraintSpec {
    /// Budget γ_pc (W).
    pub gamma_pc: f64,
    /// ADC constant D₁ (W per conversion step).
    pub d1: f64,
    /// Power amplifier efficiency.
    pub eta: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    pub tau_p: usize,
    pub tau_c: usize,
}

impl PowerConstraintSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_pc > 0.0 && self.d1 > 0.0 && self.eta > 0.0 && self.bandwidth > 0.0) {
            return Err(Error::InvalidArgument("power constraint parameters must be positive".into()));
        }
        if self.tau_p == 0 || self.tau_p >= self.tau_c {
            return Err(Error::InvalidArgument("need 0 < τ_p < τ_c".into()));
        }
        Ok(())
    }

    /// Watts per unit of Σ p_k (J) spent on data.
    pub fn data_power_factor(&self) -> f64 {
        (1.0 - self.tau_p as f64 / self.tau_c as f64) * self.bandwidth / self.eta
    }

    /// `2 D₁ Σ ζ_m / ε_max`: ADC power with one bit everywhere.
    pub fn floor_power(&self, zeta: &[f64]) -> f64 {
        let eps_max: Vec<f64> = zeta.iter().map(|z| z / 2.0).collect();
        2.0 * self.d1 * zeta.iter().zip(&eps_max).map(|(z, e)| z / e).sum::<f64>()
    }
}

/// How GP variables map to `(x, p)` and auxiliaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub antennas: usize,
    pub users: usize,
    /// One shared x variable when false.
    pub mixed: bool,
    pub objective: SinrObjective,
}

impl VarLayout {
    pub fn n_x(&self) -> usize {
        if self.mixed {
            self.antennas
        } else {
            1
        }
    }

    pub fn x(&self, m: usize) -> usize {
        if self.mixed {
            m
        } else {
            0
        }
    }

    pub fn p(&self, k: usize) -> usize {
        self.n_x() + k
    }

    /// MaxProd epigraph variable `u_k ≥ f_k`.
    pub fn u(&self, k: usize) -> usize {
        self.n_x() + self.users + k
    }

    /// MaxMin level `t`.
    pub fn t(&self) -> usize {
        self.n_x() + self.users
    }

    pub fn n_vars(&self) -> usize {
        self.n_x()
            + self.users
            + match self.objective {
                SinrObjective::MaxProd => self.users,
                SinrObjective::MaxMin => 1,
            }
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.n_x()).map(|m| format!("x{m}")).collect();
        names.extend((0..self.users).map(|k| format!("p{k}")));
        match self.objective {
            SinrObjective::MaxProd => names.extend((0..self.users).map(|k| format!("u{k}"))),
            SinrObjective::MaxMin => names.push("t".into()),
        }
        names
    }

    /// Per-antenna x and per-UE p from a GP point.
    pub fn extract(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let x = (0..self.antennas).map(|m| v[self.x(m)]).collect();
        let p = (0..self.users).map(|k| v[self.p(k)]).collect();
        (x, p)
    }
}

#[derive(Debug, Clone)]
pub struct SinrGp {
    pub problem: GpProblem,
    pub layout: VarLayout,
}

impl SinrGp {
    /// Objective value from a solution: Π SINR_k for MaxProd, min SINR_k for
    /// MaxMin, both at the fixed Ψ.
    pub fn objective_value(&self, sol: &GpSolution) -> f64 {
        sol.objective
    }
}

/// `f_k` as a posynomial over the layout's variables.
fn denominator_posynomial(data: &SinrGpData, k: usize, lay: &VarLayout) -> Posynomial {
    let m = data.antennas;
    let mut f = Posynomial::default();
    f.push(Monomial::constant(data.constant[k]));
    for i in 0..data.users {
        let pi = lay.p(i);
        if data.interference[k][i] > 0.0 {
            f.push(Monomial::new(data.interference[k][i], &[(pi, 1.0)]));
        }
        for l in 0..m {
            let c = data.cross[k][i][l] + if i == k { data.self_coef[k][l] } else { 0.0 };
            if c > 0.0 {
                f.push(Monomial::new(c, &[(pi, 1.0), (lay.x(l), 1.0)]));
            }
        }
        let bil = &data.bilinear[k][i];
        for l in 0..m {
            if bil[(l, l)] > 0.0 {
                f.push(Monomial::new(bil[(l, l)], &[(pi, 1.0), (lay.x(l), 2.0)]));
            }
            for n in l + 1..m {
                let c = bil[(l, n)] + bil[(n, l)];
                if c > 0.0 {
                    f.push(Monomial::new(c, &[(pi, 1.0), (lay.x(l), 1.0), (lay.x(n), 1.0)]));
                }
            }
        }
    }
    f.simplify();
    f
}

fn sinr_problem(
    data: &SinrGpData,
    zeta: &[f64],
    rho_max: f64,
    objective: SinrObjective,
    mixed: bool,
) -> Result<SinrGp> {
    if zeta.len() != data.antennas {
        return Err(Error::InvalidArgument("zeta length differs from antenna count".into()));
    }
    if let Some(k) = data.w.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::DegenerateUe(k));
    }
    if !mixed && zeta.iter().any(|&z| z != zeta[0]) {
        return Err(Error::InvalidArgument("equal-ADC variant needs a common ζ".into()));
    }
    let lay = VarLayout {
        antennas: data.antennas,
        users: data.users,
        mixed,
        objective,
    };
    let n = lay.n_vars();
    let mut problem = match objective {
        SinrObjective::MaxProd => {
            // Π p_k w_k / u_k with f_k / u_k ≤ 1.
            let w_prod: f64 = data.w.iter().map(|w| w.ln()).sum::<f64>().exp();
            let exps: Vec<(usize, f64)> = (0..data.users)
                .flat_map(|k| [(lay.p(k), 1.0), (lay.u(k), -1.0)])
                .collect();
            let mut pr = GpProblem::new(lay.names(), Monomial::new(w_prod, &exps));
            for k in 0..data.users {
                let f = denominator_posynomial(data, k, &lay);
                pr.inequalities.push(f.scale(&Monomial::new(1.0, &[(lay.u(k), -1.0)])));
            }
            pr
        }
        SinrObjective::MaxMin => {
            let mut pr = GpProblem::new(lay.names(), Monomial::new(1.0, &[(lay.t(), 1.0)]));
            for k in 0..data.users {
                let f = denominator_posynomial(data, k, &lay);
                let scale = Monomial::new(1.0 / data.w[k], &[(lay.t(), 1.0), (lay.p(k), -1.0)]);
                pr.inequalities.push(f.scale(&scale));
            }
            pr
        }
    };
    debug_assert_eq!(problem.n_vars(), n);
    for m in 0..lay.n_x() {
        problem.upper_bounds[m] = Some((zeta[m] / 2.0).powi(2));
    }
    for k in 0..data.users {
        problem.upper_bounds[lay.p(k)] = Some(rho_max);
    }
    Ok(SinrGp { problem, layout: lay })
}

/// Interior starting point for `x` and `p`, completing the auxiliaries.
fn seed_initial(gp: &mut SinrGp, data: &SinrGpData, x: &[f64], p: &[f64]) {
    let lay = gp.layout;
    let mut v = vec![0.0; lay.n_vars()];
    for m in 0..lay.antennas {
        v[lay.x(m)] = x[m];
    }
    for k in 0..lay.users {
        v[lay.p(k)] = p[k];
    }
    match lay.objective {
        SinrObjective::MaxProd => {
            for k in 0..lay.users {
                v[lay.u(k)] = 2.0 * data.denominator(k, x, p);
            }
        }
        SinrObjective::MaxMin => {
            let s = data.sinr(x, p).into_iter().fold(f64::INFINITY, f64::min);
            v[lay.t()] = 0.5 * s;
        }
    }
    gp.problem.initial = Some(v);
}

/// SINR GP under the ADC bit budget `Σ_m log₂(ζ_m/ε_m) ≤ b_tot`.
pub fn build_sinr_gp(
    data: &SinrGpData,
    zeta: &[f64],
    rho_max: f64,
    objective: SinrObjective,
    b_tot: f64,
) -> Result<SinrGp> {
    let m = data.antennas;
    if b_tot < m as f64 {
        return Err(Error::BudgetTooSmall {
            b_tot: b_tot.floor() as i64,
            antennas: m,
        });
    }
    let mut gp = sinr_problem(data, zeta, rho_max, objective, true)?;
    // Π ζ_m² x_m⁻¹ · 2^(−2 b_tot) ≤ 1
    let log_coef = zeta.iter().map(|z| 2.0 * z.ln()).sum::<f64>() - 2.0 * b_tot * std::f64::consts::LN_2;
    let exps: Vec<(usize, f64)> = (0..m).map(|i| (i, -1.0)).collect();
    gp.problem.inequalities.push(Posynomial::new(vec![Monomial::new(log_coef.exp(), &exps)]));
    // Strictly interior start halfway (in log) between the equal split and ε_max.
    let x0: Vec<f64> = zeta
        .iter()
        .map(|z| {
            let eq = (z * (-b_tot / m as f64).exp2()).powi(2);
            (eq * (z / 2.0).powi(2)).sqrt()
        })
        .collect();
    let p0 = vec![0.5 * rho_max; data.users];
    seed_initial(&mut gp, data, &x0, &p0);
    Ok(gp)
}

/// MaxProd SINR GP under `P_txd-adc ≤ γ_pc`. With `mixed = false` all
/// antennas share one impairment level.
pub fn build_power_constrained_gp(
    data: &SinrGpData,
    zeta: &[f64],
    rho_max: f64,
    spec: &PowerConstraintSpec,
    mixed: bool,
) -> Result<SinrGp> {
    spec.validate()?;
    let floor = spec.floor_power(zeta);
    if spec.gamma_pc <= floor {
        return Err(Error::Infeasible(format!(
            "power budget {} W does not exceed the one-bit ADC floor {floor} W",
            spec.gamma_pc
        )));
    }
    let mut gp = sinr_problem(data, zeta, rho_max, SinrObjective::MaxProd, mixed)?;
    let lay = gp.layout;
    let g = spec.gamma_pc;
    let mut pc = Posynomial::default();
    for k in 0..data.users {
        pc.push(Monomial::new(spec.data_power_factor() / g, &[(lay.p(k), 1.0)]));
    }
    for (m, z) in zeta.iter().enumerate() {
        pc.push(Monomial::new(2.0 * spec.d1 * z / g, &[(lay.x(m), -0.5)]));
    }
    pc.simplify();
    gp.problem.inequalities.push(pc);
    // Spend a quarter of the slack above the floor on ADCs and a quarter on data.
    let adc_target = floor + 0.25 * (g - floor);
    let scale = (floor / adc_target).powi(2);
    let x0: Vec<f64> = zeta.iter().map(|z| (z / 2.0).powi(2) * scale).collect();
    let p_each = (0.25 * (g - floor) / spec.data_power_factor() / data.users as f64).min(0.5 * rho_max);
    let p0 = vec![p_each; data.users];
    seed_initial(&mut gp, data, &x0, &p0);
    Ok(gp)
}

/// Constraint set used by [`iterate_psi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AllocationConstraint {
    /// Total ADC bit budget.
    BitBudget(f64),
    /// Power-consumption budget; `mixed = false` forces equal ADCs.
    Power { spec: PowerConstraintSpec, mixed: bool },
}

#[derive(Debug, Clone, Copy)]
pub struct DriverConfig {
    pub objective: SinrObjective,
    pub constraint: AllocationConstraint,
    pub max_outer: usize,
    /// Relative objective change that ends the outer loop.
    pub rel_tol: f64,
    pub gp: GpOptions,
}

impl DriverConfig {
    pub fn new(objective: SinrObjective, constraint: AllocationConstraint) -> Self {
        Self {
            objective,
            constraint,
            max_outer: 10,
            rel_tol: 1e-6,
            gp: GpOptions::default(),
        }
    }
}

/// Fixed inputs of the allocation problem.
#[derive(Debug, Clone, Copy)]
pub struct AllocationInputs<'a> {
    pub corr: &'a CorrelationSet,
    pub pilot_energy: &'a [f64],
    pub sigma2: f64,
    pub tau_p: usize,
    pub zeta: &'a [f64],
    pub rho_max: f64,
}

#[derive(Debug, Clone)]
pub struct IterationResult {
    pub eps: Vec<f64>,
    /// Data energy per UE.
    pub p: Vec<f64>,
    /// Real-valued bits `log₂(ζ_m/ε_m)`.
    pub bits: Vec<f64>,
    /// GP optimum of every outer iteration.
    pub trajectory: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
    /// Final GP solve, for inspection.
    pub last: GpSolution,
    /// Layout of the final GP.
    pub layout: VarLayout,
}

impl IterationResult {
    pub fn iterations(&self) -> usize {
        self.trajectory.len()
    }

    /// Relative objective change between outer iterations `i − 1` and `i`
    /// (1-based).
    pub fn relative_change(&self, i: usize) -> Option<f64> {
        if i < 2 || i > self.trajectory.len() {
            return None;
        }
        let (a, b) = (self.trajectory[i - 2], self.trajectory[i - 1]);
        Some((b - a).abs() / a.abs())
    }
}

/// Starting impairment levels: equal bits `b_tot/M`, or for a power budget
/// the equal resolution that spends half of γ_pc on ADCs (at least one bit).
pub fn initial_eps(zeta: &[f64], constraint: &AllocationConstraint) -> Vec<f64> {
    let m = zeta.len() as f64;
    let bits = match constraint {
        AllocationConstraint::BitBudget(b_tot) => b_tot / m,
        // 2 D₁ M 2^b = γ_pc / 2
        AllocationConstraint::Power { spec, .. } => (spec.gamma_pc / (4.0 * spec.d1 * m)).log2().max(1.0),
    };
    zeta.iter().map(|z| z * (-bits).exp2()).collect()
}

/// Outer loop: solve the GP at fixed `Ψ_k`, rebuild `Ψ_k` from the new
/// impairment levels, and repeat until the relative objective change drops
/// below `rel_tol` or `max_outer` iterations have run.
pub fn iterate_psi(inp: &AllocationInputs<'_>, cfg: &DriverConfig) -> Result<IterationResult> {
    if let AllocationConstraint::Power { .. } = cfg.constraint {
        if cfg.objective != SinrObjective::MaxProd {
            return Err(Error::InvalidArgument("power-constrained allocation uses the MaxProd objective".into()));
        }
    }
    let mut eps = initial_eps(inp.zeta, &cfg.constraint);
    let mut trajectory: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut last: Option<(GpSolution, VarLayout, Vec<f64>)> = None;
    for it in 0..cfg.max_outer {
        let profile = ImpairmentProfile::from_eps(eps.clone(), inp.zeta.to_vec());
        let state = estimation::build_estimator(inp.corr, &profile, inp.pilot_energy, inp.sigma2, inp.tau_p)?;
        let data = SinrGpData::new(inp.corr, &state)?;
        let gp = match cfg.constraint {
            AllocationConstraint::BitBudget(b_tot) => build_sinr_gp(&data, inp.zeta, inp.rho_max, cfg.objective, b_tot)?,
            AllocationConstraint::Power { spec, mixed } => {
                build_power_constrained_gp(&data, inp.zeta, inp.rho_max, &spec, mixed)?
            }
        };
        let sol = gp::solve_gp(&gp.problem, &cfg.gp)?;
        match sol.status {
            GpStatus::Optimal => {}
            GpStatus::MaxIter => {
                let msg = format!("outer iteration {}: GP stopped at the iteration limit", it + 1);
                log::warn!("{msg}");
                warnings.push(msg);
            }
            GpStatus::Infeasible => {
                return Err(Error::Infeasible(format!("outer iteration {}: GP has no interior point", it + 1)));
            }
        }
        let obj = gp.objective_value(&sol);
        if let Some(&prev) = trajectory.last() {
            if obj < prev {
                let msg = format!("outer iteration {}: objective decreased from {prev:e} to {obj:e}", it + 1);
                log::debug!("{msg}");
                warnings.push(msg);
            }
        }
        let (x, p) = gp.layout.extract(&sol.x);
        eps = x.iter().map(|v| v.sqrt()).collect();
        trajectory.push(obj);
        let done = trajectory.len() >= 2 && {
            let n = trajectory.len();
            (trajectory[n - 1] - trajectory[n - 2]).abs() <= cfg.rel_tol * trajectory[n - 2].abs()
        };
        last = Some((sol, gp.layout, p));
        if done {
            converged = true;
            break;
        }
    }
    let (last, layout, p) = last.ok_or_else(|| Error::InvalidArgument("max_outer must be positive".into()))?;
    if !warnings.is_empty() {
        log::warn!("Ψ iteration: {} warning(s), first: {}", warnings.len(), warnings[0]);
    }
    // The barrier stops strictly inside the budget. SINR never decreases as
    // ε shrinks, so one common scaling of ε lands exactly on the boundary
    // without losing feasibility or equal-ADC structure.
    let scale = match cfg.constraint {
        AllocationConstraint::BitBudget(b_tot) => {
            let used: f64 = inp.zeta.iter().zip(&eps).map(|(z, e)| (z / e).log2()).sum();
            (-(b_tot - used).max(0.0) / eps.len() as f64).exp2()
        }
        AllocationConstraint::Power { spec, .. } => {
            let adc = 2.0 * spec.d1 * inp.zeta.iter().zip(&eps).map(|(z, e)| z / e).sum::<f64>();
            let slack = spec.gamma_pc - spec.data_power_factor() * p.iter().sum::<f64>() - adc;
            adc / (adc + slack.max(0.0))
        }
    };
    for e in eps.iter_mut() {
        *e *= scale;
    }
    let bits = inp.zeta.iter().zip(&eps).map(|(z, e)| (z / e).log2()).collect();
    Ok(IterationResult {
        eps,
        p,
        bits,
        trajectory,
        converged,
        warnings,
        last,
        layout,
    })
}
