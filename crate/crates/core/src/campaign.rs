//! Seeded Monte-Carlo campaigns: configuration, per-drop evaluation, CDF
//! aggregation and CSV output.
//!
//! Every drop seed is `derive_seed(master_seed, [drop])`, so scenarios that
//! share a channel case see the same networks and the same Monte-Carlo
//! streams. Outputs are assembled in drop order after the parallel phase,
//! which makes them byte-identical for any worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allocation::{self, PilotPowerProfile};
use crate::error::{Error, Result};
use crate::impairments::ImpairmentProfile;
use crate::network::{self, ChannelCase, NetworkConfig};
use crate::optimize::{self, AllocationConstraint, AllocationInputs, DriverConfig, SinrObjective};
use crate::power::{self, PowerModel};
use crate::quantizer::{self, ExactSetup};
use crate::rng::derive_seed;
use crate::se::{self, CombinerKind, SinrReport, UplinkSetup};

/// Largest tolerated fraction of failed drops per scenario.
pub const MAX_FAILURE_RATE: f64 = 0.05;

pub const SCHEMA: &str = "\
Every CSV has a header row. Floats use the shortest representation that
round-trips. gamma_pc is empty outside power-constrained scenarios.

<scenario>_se.csv       one row per (drop, gamma_pc, ue)
  drop, gamma_pc, ue, pilot_energy_j, data_energy_j, sinr, se_bpcu, sinr_std_err, flagged
  sinr_std_err is empty for closed-form evaluation; flagged=1 marks a
  Monte-Carlo denominator with relative standard error above 5%.

<scenario>_bits.csv     one row per (drop, gamma_pc, antenna)
  drop, gamma_pc, antenna, bits, bits_int
  bits is the real-valued allocation; bits_int the integer resolution used
  by exact quantization (empty in the additive model).

<scenario>_alloc.csv    one row per (drop, gamma_pc)
  drop, gamma_pc, outer_iterations, converged, objective, rel_change_3,
  warnings, sum_se_bpcu, p_txd_adc_w, power_residual_w, ee_bit_per_j
  Iteration columns are empty for closed-form allocations; power columns
  are empty outside power-constrained scenarios.

<scenario>_se_cdf.csv   empirical CDF of per-UE SE, one block per gamma_pc
<scenario>_bits_cdf.csv empirical CDF of per-antenna bits (integer bits in exact mode)
  gamma_pc, value, cdf, count
  cdf is the fraction of samples <= value.

<scenario>_ee.csv       power-constrained scenarios only, one row per gamma_pc
  gamma_pc, drops, mean_sum_se_bpcu, mean_ee_bit_per_j

manifest.txt            crate version, config sha256, master seed, drop
                        failures and the sha256 of every CSV.
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationMethod {
    Equal,
    MinPilotDist,
    MaxProdSinr,
    MaxMinFair,
    PowerConstrainedMaxProd,
}

impl AllocationMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Equal => "equal",
            Self::MinPilotDist => "min_pilot_dist",
            Self::MaxProdSinr => "max_prod_sinr",
            Self::MaxMinFair => "max_min_fair",
            Self::PowerConstrainedMaxProd => "power_constrained_max_prod",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizationMode {
    /// Additive distortion with real-valued bits.
    Additive,
    /// Per-antenna scalar quantizers with integer bits.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub case: ChannelCase,
    pub allocation: AllocationMethod,
    pub combiner: CombinerKind,
    #[serde(default = "default_quantization")]
    pub quantization: QuantizationMode,
    /// Per-antenna bits when true; one shared resolution otherwise. Only
    /// meaningful for power-constrained allocation.
    #[serde(default = "default_true")]
    pub mixed: bool,
}

fn default_quantization() -> QuantizationMode {
    QuantizationMode::Additive
}

fn default_true() -> bool {
    true
}

impl Scenario {
    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let q = match self.quantization {
            QuantizationMode::Additive => "additive",
            QuantizationMode::Exact => "exact",
        };
        let mut s = format!("{}-{}-{}-{q}", self.case.name(), self.allocation.name(), self.combiner.name());
        if self.allocation == AllocationMethod::PowerConstrainedMaxProd && !self.mixed {
            s.push_str("-equal_adc");
        }
        s
    }

    fn is_power(&self) -> bool {
        self.allocation == AllocationMethod::PowerConstrainedMaxProd
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    /// Power budgets γ_pc (W) for power-constrained scenarios.
    pub gamma_pc: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            gamma_pc: vec![2.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0, 50.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub master_seed: u64,
    pub n_drops: usize,
    /// Monte-Carlo trials per drop for UatF and exact-quantization SE.
    pub n_trials_per_drop: usize,
    /// Training realizations for the numeric LMMSE estimator.
    pub n_train: usize,
    /// Total bit budget; defaults to three bits per antenna.
    pub b_tot: Option<i64>,
    pub zeta: f64,
    pub output_dir: Option<PathBuf>,
    pub network: NetworkConfig,
    /// τ_p, τ_c and the bandwidth are taken from `network`.
    pub power: PowerModel,
    pub sweep: Sweep,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            n_drops: 200,
            n_trials_per_drop: 2000,
            n_train: quantizer::MIN_TRAINING_TRIALS,
            b_tot: None,
            zeta: 1.6,
            output_dir: None,
            network: NetworkConfig::default(),
            power: PowerModel::default(),
            sweep: Sweep::default(),
            scenarios: Vec::new(),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn b_tot(&self) -> i64 {
        self.b_tot.unwrap_or(3 * self.network.antennas as i64)
    }

    /// Power model with the network's pilot and block lengths.
    pub fn power_model(&self) -> PowerModel {
        PowerModel {
            tau_p: self.network.tau_p(),
            tau_c: self.network.tau_c,
            zeta: self.zeta,
            ..self.power
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.power_model().validate()?;
        if self.n_drops == 0 {
            return Err(Error::InvalidConfig("n_drops must be positive".into()));
        }
        if self.n_trials_per_drop < 2 {
            return Err(Error::InvalidConfig("n_trials_per_drop must be at least 2".into()));
        }
        if !(self.zeta > 1.0 && self.zeta < 2.0) {
            return Err(Error::InvalidConfig(format!("zeta must lie in (1, 2), got {}", self.zeta)));
        }
        allocation::BitBudget::checked(self.b_tot(), self.network.antennas)?;
        if self.scenarios.is_empty() {
            return Err(Error::InvalidConfig("no [[scenario]] entries".into()));
        }
        let needs_exact = self.scenarios.iter().any(|s| s.quantization == QuantizationMode::Exact);
        if needs_exact && self.n_train < 2 * self.network.antennas {
            return Err(Error::InvalidConfig("n_train is too small for the numeric LMMSE estimator".into()));
        }
        if self.scenarios.iter().any(Scenario::is_power) {
            if self.sweep.gamma_pc.is_empty() {
                return Err(Error::InvalidConfig("power-constrained scenarios need sweep.gamma_pc".into()));
            }
            if let Some(g) = self.sweep.gamma_pc.iter().find(|g| !(**g > 0.0)) {
                return Err(Error::InvalidConfig(format!("gamma_pc must be positive, got {g}")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.scenarios {
            let l = s.label();
            if !seen.insert(l.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate scenario name {l}")));
            }
            if !l.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(Error::InvalidConfig(format!("scenario name {l} is not file-name safe")));
            }
        }
        Ok(())
    }

    /// Canonical hash of the parsed configuration. The output directory is
    /// not part of the experiment and is left out.
    pub fn sha256(&self) -> String {
        let canonical = toml::to_string(&Self {
            output_dir: None,
            ..self.clone()
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Outcome of one (drop, γ_pc) evaluation.
#[derive(Debug, Clone)]
pub struct DropRecord {
    pub drop: usize,
    pub seed: u64,
    pub gamma_pc: Option<f64>,
    pub bits: Vec<f64>,
    pub bits_int: Option<Vec<i64>>,
    pub pilot_energy: Vec<f64>,
    pub data_energy: Vec<f64>,
    pub report: SinrReport,
    pub iteration: Option<IterationSummary>,
    pub power: Option<PowerSummary>,
}

#[derive(Debug, Clone)]
pub struct IterationSummary {
    pub outer_iterations: usize,
    pub converged: bool,
    pub trajectory: Vec<f64>,
    pub rel_change_3: Option<f64>,
    pub warnings: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PowerSummary {
    /// P_txd-adc at the allocation that was evaluated (W).
    pub p_txd_adc: f64,
    /// `γ_pc − P_txd-adc` of the real-valued optimum (W).
    pub residual: f64,
    pub ee: f64,
}

#[derive(Debug, Clone)]
pub struct DropFailure {
    pub drop: usize,
    pub seed: u64,
    pub gamma_pc: Option<f64>,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub scenario: Scenario,
    pub label: String,
    pub records: Vec<DropRecord>,
    pub failures: Vec<DropFailure>,
}

struct Allocated {
    bits: Vec<f64>,
    p: Vec<f64>,
    iteration: Option<IterationSummary>,
    residual: Option<f64>,
}

fn allocate(
    cfg: &CampaignConfig,
    scenario: &Scenario,
    net: &network::NetworkRealization,
    gamma_pc: Option<f64>,
) -> Result<Allocated> {
    let m = cfg.network.antennas;
    let b_tot = cfg.b_tot();
    let zeta = vec![cfg.zeta; m];
    let q = &net.pilot_energy;
    match scenario.allocation {
        AllocationMethod::Equal => Ok(Allocated {
            bits: vec![b_tot as f64 / m as f64; m],
            p: q.clone(),
            iteration: None,
            residual: None,
        }),
        AllocationMethod::MinPilotDist => {
            let p_u = PilotPowerProfile::from_network(&net.correlation, q)?;
            let a = allocation::allocate_min_pilot_distortion(&p_u, &zeta, b_tot as f64)?;
            Ok(Allocated {
                bits: a.bits,
                p: q.clone(),
                iteration: None,
                residual: None,
            })
        }
        method => {
            let inp = AllocationInputs {
                corr: &net.correlation,
                pilot_energy: q,
                sigma2: cfg.network.sigma2,
                tau_p: cfg.network.tau_p(),
                zeta: &zeta,
                rho_max: cfg.network.rho_max,
            };
            let (objective, constraint) = match method {
                AllocationMethod::MaxProdSinr => (SinrObjective::MaxProd, AllocationConstraint::BitBudget(b_tot as f64)),
                AllocationMethod::MaxMinFair => (SinrObjective::MaxMin, AllocationConstraint::BitBudget(b_tot as f64)),
                _ => {
                    let gamma = gamma_pc.expect("power scenarios carry γ_pc");
                    (
                        SinrObjective::MaxProd,
                        AllocationConstraint::Power {
                            spec: cfg.power_model().constraint_spec(gamma),
                            mixed: scenario.mixed,
                        },
                    )
                }
            };
            let r = optimize::iterate_psi(&inp, &DriverConfig::new(objective, constraint))?;
            let residual = gamma_pc.map(|g| g - power::total_tx_adc_power(&r.p, &r.eps, &cfg.power_model()));
            Ok(Allocated {
                iteration: Some(IterationSummary {
                    outer_iterations: r.iterations(),
                    converged: r.converged,
                    rel_change_3: r.relative_change(3),
                    warnings: r.warnings.len(),
                    trajectory: r.trajectory,
                }),
                bits: r.bits,
                p: r.p,
                residual,
            })
        }
    }
}

/// Integer budget for exact quantization. Under a power budget the total is
/// whatever the real-valued optimum spent, rounded to the nearest integer.
fn integer_budget(cfg: &CampaignConfig, scenario: &Scenario, bits: &[f64]) -> i64 {
    if scenario.is_power() {
        (bits.iter().sum::<f64>().round() as i64).max(bits.len() as i64)
    } else {
        cfg.b_tot()
    }
}

/// Evaluates one drop of `scenario`, optionally at a power budget.
pub fn run_drop(cfg: &CampaignConfig, scenario: &Scenario, drop: usize, gamma_pc: Option<f64>) -> Result<DropRecord> {
    let seed = derive_seed(cfg.master_seed, &[drop as u64]);
    let net_cfg = cfg.network.clone().with_case(scenario.case);
    let net = network::drop_network(&net_cfg, seed)?;
    let alloc = allocate(cfg, scenario, &net, gamma_pc)?;
    let m = net_cfg.antennas;
    let zeta = vec![cfg.zeta; m];
    let tau_p = net_cfg.tau_p();
    let mc_seed = derive_seed(seed, &[2, gamma_pc.map_or(0, f64::to_bits)]);

    let (report, bits_int, eps) = match scenario.quantization {
        QuantizationMode::Additive => {
            let eps: Vec<f64> = alloc.bits.iter().map(|b| cfg.zeta * (-b).exp2()).collect();
            let profile = ImpairmentProfile::from_eps(eps.clone(), zeta.clone());
            let setup = UplinkSetup {
                corr: &net.correlation,
                profile: &profile,
                data_energy: &alloc.p,
                pilot_energy: &net.pilot_energy,
                sigma2: net_cfg.sigma2,
                tau_p,
                tau_c: net_cfg.tau_c,
            };
            let report = match scenario.combiner {
                CombinerKind::MR => se::sinr_mr_closed_form(&setup, &setup.estimator()?),
                CombinerKind::RZF => se::sinr_uatf_monte_carlo(CombinerKind::RZF, &setup, cfg.n_trials_per_drop, mc_seed)?,
            };
            (report, None, eps)
        }
        QuantizationMode::Exact => {
            let b_int = allocation::round_to_integer_bits(&alloc.bits, integer_budget(cfg, scenario, &alloc.bits))?;
            let bits_u: Vec<u32> = b_int.iter().map(|&b| b as u32).collect();
            let setup = ExactSetup {
                corr: &net.correlation,
                pilot_energy: &net.pilot_energy,
                data_energy: &alloc.p,
                sigma2: net_cfg.sigma2,
                tau_p,
                tau_c: net_cfg.tau_c,
                bits: &bits_u,
            };
            let report =
                quantizer::se_exact_quantization(&setup, &scenario.combiner, cfg.n_train, cfg.n_trials_per_drop, mc_seed)?;
            let eps = b_int.iter().map(|&b| cfg.zeta * (-(b as f64)).exp2()).collect();
            (report, Some(b_int), eps)
        }
    };

    let power = gamma_pc.map(|_| {
        let model = cfg.power_model();
        PowerSummary {
            p_txd_adc: power::total_tx_adc_power(&alloc.p, &eps, &model),
            residual: alloc.residual.unwrap_or(f64::NAN),
            ee: power::energy_efficiency(report.sum_se(), &alloc.p, &net.pilot_energy, &eps, &model),
        }
    });

    Ok(DropRecord {
        drop,
        seed,
        gamma_pc,
        bits: alloc.bits,
        bits_int,
        pilot_energy: net.pilot_energy,
        data_energy: alloc.p,
        report,
        iteration: alloc.iteration,
        power,
    })
}

/// Runs every drop (and γ_pc point) of one scenario on the current rayon
/// pool. Fails when more than 5% of the evaluations fail.
pub fn run_scenario(cfg: &CampaignConfig, scenario: &Scenario) -> Result<ScenarioOutcome> {
    let gammas: Vec<Option<f64>> = if scenario.is_power() {
        cfg.sweep.gamma_pc.iter().map(|&g| Some(g)).collect()
    } else {
        vec![None]
    };
    let jobs: Vec<(Option<f64>, usize)> = gammas
        .iter()
        .flat_map(|&g| (0..cfg.n_drops).map(move |d| (g, d)))
        .collect();
    let results: Vec<Result<DropRecord>> = jobs
        .par_iter()
        .map(|&(g, d)| run_drop(cfg, scenario, d, g))
        .collect();
    let label = scenario.label();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((g, d), r) in jobs.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                let seed = derive_seed(cfg.master_seed, &[*d as u64]);
                log::warn!("{label}: drop {d} (seed {seed:#018x}) failed: {e}");
                failures.push(DropFailure {
                    drop: *d,
                    seed,
                    gamma_pc: *g,
                    error: e.to_string(),
                });
            }
        }
    }
    let rate = failures.len() as f64 / jobs.len() as f64;
    if rate > MAX_FAILURE_RATE {
        return Err(Error::Campaign(format!(
            "{label}: {} of {} drop evaluations failed (first: {})",
            failures.len(),
            jobs.len(),
            failures[0].error
        )));
    }
    Ok(ScenarioOutcome {
        scenario: scenario.clone(),
        label,
        records,
        failures,
    })
}

/// Empirical CDF over the distinct sample values.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    pub metric: String,
    pub units: String,
    /// Sorted distinct values.
    pub values: Vec<f64>,
    /// Number of samples equal to each value.
    pub counts: Vec<usize>,
}

impl CdfTable {
    pub fn n_samples(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Fraction of samples `<= values[i]`.
    pub fn cdf(&self) -> Vec<f64> {
        let n = self.n_samples() as f64;
        let mut acc = 0usize;
        self.counts
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / n
            })
            .collect()
    }

    pub fn with_meta(mut self, metric: &str, units: &str) -> Self {
        self.metric = metric.to_string();
        self.units = units.to_string();
        self
    }

    /// CDF of the union of both sample sets.
    pub fn merge(&self, other: &CdfTable) -> CdfTable {
        let mut map: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
        for t in [self, other] {
            for (&v, &c) in t.values.iter().zip(&t.counts) {
                map.entry(order_key(v)).or_insert((v, 0)).1 += c;
            }
        }
        let (values, counts) = map.into_values().unzip();
        CdfTable {
            metric: self.metric.clone(),
            units: self.units.clone(),
            values,
            counts,
        }
    }

    /// Value at which the CDF first reaches `prob`.
    pub fn quantile(&self, prob: f64) -> f64 {
        let cdf = self.cdf();
        let i = cdf.iter().position(|&f| f >= prob - 1e-12).unwrap_or(cdf.len() - 1);
        self.values[i]
    }
}

/// Total order on finite floats that maps −0.0 and 0.0 together.
fn order_key(v: f64) -> u64 {
    let v = if v == 0.0 { 0.0 } else { v };
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Empirical CDF with `F(x_(i)) = i/n`; ties collapse into one step.
pub fn aggregate_cdf(samples: &[f64]) -> Result<CdfTable> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("cannot build a CDF from no samples".into()));
    }
    if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite sample {v}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut values: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for v in sorted {
        match values.last() {
            Some(&last) if last == v => *counts.last_mut().unwrap() += 1,
            _ => {
                values.push(if v == 0.0 { 0.0 } else { v });
                counts.push(1);
            }
        }
    }
    Ok(CdfTable {
        metric: String::new(),
        units: String::new(),
        values,
        counts,
    })
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn group_by_gamma(records: &[DropRecord]) -> Vec<(Option<f64>, Vec<&DropRecord>)> {
    let mut out: Vec<(Option<f64>, Vec<&DropRecord>)> = Vec::new();
    for r in records {
        match out.iter_mut().find(|(g, _)| *g == r.gamma_pc) {
            Some((_, v)) => v.push(r),
            None => out.push((r.gamma_pc, vec![r])),
        }
    }
    out
}

fn cdf_csv(groups: &[(Option<f64>, CdfTable)]) -> String {
    let mut s = String::from("gamma_pc,value,cdf,count\n");
    for (g, t) in groups {
        for ((v, f), c) in t.values.iter().zip(t.cdf()).zip(&t.counts) {
            let _ = writeln!(s, "{},{v},{f},{c}", opt(*g));
        }
    }
    s
}

/// Renders the CSV files of one scenario as `(file name, contents)`.
pub fn scenario_files(out: &ScenarioOutcome) -> Result<Vec<(String, String)>> {
    let label = &out.label;
    let mut files = Vec::new();

    let mut se_csv =
        String::from("drop,gamma_pc,ue,pilot_energy_j,data_energy_j,sinr,se_bpcu,sinr_std_err,flagged\n");
    let mut bits_csv = String::from("drop,gamma_pc,antenna,bits,bits_int\n");
    let mut alloc_csv = String::from(
        "drop,gamma_pc,outer_iterations,converged,objective,rel_change_3,warnings,sum_se_bpcu,p_txd_adc_w,power_residual_w,ee_bit_per_j\n",
    );
    for r in &out.records {
        let g = opt(r.gamma_pc);
        let rep = &r.report;
        for k in 0..rep.sinr.len() {
            let err = rep.sinr_std_err.as_ref().map(|e| e[k]);
            let _ = writeln!(
                se_csv,
                "{},{g},{k},{},{},{},{},{},{}",
                r.drop,
                r.pilot_energy[k],
                r.data_energy[k],
                rep.sinr[k],
                rep.se[k],
                opt(err),
                u8::from(rep.flagged[k])
            );
        }
        for (m, b) in r.bits.iter().enumerate() {
            let bi = r.bits_int.as_ref().map(|v| v[m]);
            let _ = writeln!(bits_csv, "{},{g},{m},{b},{}", r.drop, opt(bi));
        }
        let it = r.iteration.as_ref();
        let _ = writeln!(
            alloc_csv,
            "{},{g},{},{},{},{},{},{},{},{},{}",
            r.drop,
            opt(it.map(|i| i.outer_iterations)),
            opt(it.map(|i| u8::from(i.converged))),
            opt(it.and_then(|i| i.trajectory.last().copied())),
            opt(it.and_then(|i| i.rel_change_3)),
            opt(it.map(|i| i.warnings)),
            rep.sum_se(),
            opt(r.power.map(|p| p.p_txd_adc)),
            opt(r.power.map(|p| p.residual)),
            opt(r.power.map(|p| p.ee)),
        );
    }
    files.push((format!("{label}_se.csv"), se_csv));
    files.push((format!("{label}_bits.csv"), bits_csv));
    files.push((format!("{label}_alloc.csv"), alloc_csv));

    if out.records.is_empty() {
        return Ok(files);
    }
    let groups = group_by_gamma(&out.records);
    let mut se_cdfs = Vec::new();
    let mut bit_cdfs = Vec::new();
    for (g, recs) in &groups {
        let se: Vec<f64> = recs.iter().flat_map(|r| r.report.se.iter().copied()).collect();
        let bits: Vec<f64> = recs
            .iter()
            .flat_map(|r| match &r.bits_int {
                Some(b) => b.iter().map(|&v| v as f64).collect::<Vec<_>>(),
                None => r.bits.clone(),
            })
            .collect();
        se_cdfs.push((*g, aggregate_cdf(&se)?.with_meta("se", "bit/s/Hz")));
        bit_cdfs.push((*g, aggregate_cdf(&bits)?.with_meta("bits", "bit")));
    }
    files.push((format!("{label}_se_cdf.csv"), cdf_csv(&se_cdfs)));
    files.push((format!("{label}_bits_cdf.csv"), cdf_csv(&bit_cdfs)));

    if out.scenario.is_power() {
        let mut ee = String::from("gamma_pc,drops,mean_sum_se_bpcu,mean_ee_bit_per_j\n");
        for (g, recs) in &groups {
            let n = recs.len() as f64;
            let se = recs.iter().map(|r| r.report.sum_se()).sum::<f64>() / n;
            let e = recs.iter().filter_map(|r| r.power.map(|p| p.ee)).sum::<f64>() / n;
            let _ = writeln!(ee, "{},{},{se},{e}", opt(*g), recs.len());
        }
        files.push((format!("{label}_ee.csv"), ee));
    }
    Ok(files)
}

/// Everything a campaign writes, in output order.
#[derive(Debug, Clone)]
pub struct CampaignOutput {
    pub files: Vec<(String, String)>,
    pub outcomes: Vec<ScenarioOutcome>,
}

/// Runs the selected scenarios with `workers` threads (0 = rayon default).
/// Scenario filters match label substrings; an empty filter keeps all.
pub fn run_campaign(cfg: &CampaignConfig, workers: usize, filter: &[String]) -> Result<CampaignOutput> {
    cfg.validate()?;
    let selected: Vec<&Scenario> = cfg
        .scenarios
        .iter()
        .filter(|s| filter.is_empty() || filter.iter().any(|f| s.label().contains(f.as_str())))
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidConfig(format!("no scenario matches {filter:?}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Campaign(format!("thread pool: {e}")))?;
    let mut outcomes = Vec::new();
    for s in selected {
        log::info!("running {}", s.label());
        outcomes.push(pool.install(|| run_scenario(cfg, s))?);
    }
    let mut files = Vec::new();
    for o in &outcomes {
        files.extend(scenario_files(o)?);
    }
    files.push(("SCHEMA.txt".to_string(), SCHEMA.to_string()));
    let manifest = manifest(cfg, &outcomes, &files);
    files.push(("manifest.txt".to_string(), manifest));
    Ok(CampaignOutput { files, outcomes })
}

fn manifest(cfg: &CampaignConfig, outcomes: &[ScenarioOutcome], files: &[(String, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "adcbits {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "config_sha256 {}", cfg.sha256());
    let _ = writeln!(s, "master_seed {}", cfg.master_seed);
    let _ = writeln!(s, "n_drops {}", cfg.n_drops);
    let _ = writeln!(s, "n_trials_per_drop {}", cfg.n_trials_per_drop);
    let _ = writeln!(s, "b_tot {}", cfg.b_tot());
    for o in outcomes {
        let _ = writeln!(s, "scenario {} records {} failures {}", o.label, o.records.len(), o.failures.len());
        for f in &o.failures {
            let _ = writeln!(
                s,
                "  failed drop {} seed {:#018x} gamma_pc {} : {}",
                f.drop,
                f.seed,
                opt(f.gamma_pc),
                f.error
            );
        }
    }
    for (name, body) in files {
        let _ = writeln!(s, "file {name} sha256 {}", hex::encode(Sha256::digest(body.as_bytes())));
    }
    s
}

/// Writes the campaign files into `dir`, creating it when needed.
pub fn write_output(output: &CampaignOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in &output.files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_of_three_points() {
        let t = aggregate_cdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.values, vec![1.0, 2.0, 3.0]);
        let f = t.cdf();
        assert!((f[0] - 1.0 / 3.0).abs() < 1e-15 && (f[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f[2], 1.0);
    }

    #[test]
    fn constant_samples_single_step() {
        let t = aggregate_cdf(&[3.0; 7]).unwrap();
        assert_eq!(t.values, vec![3.0]);
        assert_eq!(t.cdf(), vec![1.0]);
        assert_eq!(t.n_samples(), 7);
    }

    #[test]
    fn cdf_rejects_empty_and_nan() {
        assert!(aggregate_cdf(&[]).is_err());
        assert!(aggregate_cdf(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn merge_matches_concatenation() {
        let a = [0.5, -1.0, 2.0, 2.0];
        let b = [2.0, 0.0, -0.0, 7.5];
        let merged = aggregate_cdf(&a).unwrap().merge(&aggregate_cdf(&b).unwrap());
        let all: Vec<f64> = a.iter().chain(&b).copied().collect();
        assert_eq!(merged, aggregate_cdf(&all).unwrap());
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg = CampaignConfig::from_toml(
            r#"
            master_seed = 9
            n_drops = 3
            [network]
            M = 8
            K = 2
            case = "CellFree"
            [[scenario]]
            case = "CoCorrI"
            allocation = "min_pilot_dist"
            combiner = "mr"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.network.antennas, 8);
        assert_eq!(cfg.b_tot(), 24);
        assert_eq!(cfg.scenarios[0].label(), "CoCorrI-min_pilot_dist-MR-additive");
        assert_eq!(cfg.power_model().tau_p, 2);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(CampaignConfig::from_toml("n_drop = 3\n[[scenario]]\ncase='CoCorrI'\nallocation='equal'\ncombiner='MR'\n").is_err());
    }
}
