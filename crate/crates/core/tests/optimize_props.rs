mod common;

use adcbits::estimation::{self, EstimatorState};
use adcbits::gp::{self, GpOptions, GpStatus};
use adcbits::impairments::ImpairmentProfile;
use adcbits::network::{NetworkConfig, NetworkRealization};
use adcbits::optimize::{self, SinrGpData, SinrObjective};
use adcbits::power::PowerModel;
use adcbits::se::{self, UplinkSetup};
use rand::Rng;

struct Case {
    cfg: NetworkConfig,
    net: NetworkRealization,
    profile: ImpairmentProfile,
    state: EstimatorState,
    data: SinrGpData,
}

fn case(seed: u64, max_m: usize, max_k: usize) -> Case {
    let (cfg, net) = common::random_network(seed, max_m, max_k);
    let mut r = common::rng(seed ^ 0x0B);
    let profile = ImpairmentProfile::from_eps(
        (0..cfg.antennas).map(|_| 1.6 * (-r.random_range(1.0..5.0f64)).exp2()).collect(),
        vec![1.6; cfg.antennas],
    );
    let state =
        estimation::build_estimator(&net.correlation, &profile, &net.pilot_energy, cfg.sigma2, cfg.tau_p()).unwrap();
    let data = SinrGpData::new(&net.correlation, &state).unwrap();
    Case { cfg, net, profile, state, data }
}

fn solve(problem: &gp::GpProblem) -> gp::GpSolution {
    let sol = gp::solve_gp(problem, &GpOptions::default()).unwrap();
    assert_eq!(sol.status, GpStatus::Optimal, "kkt {:e}", sol.kkt_residual);
    sol
}

#[test]
fn coefficient_tables_nonnegative() {
    for seed in 0..30 {
        let c = case(seed, 10, 4);
        let d = &c.data;
        let all = d.w.iter().chain(&d.constant).chain(d.interference.iter().flatten()).chain(d.self_coef.iter().flatten());
        assert!(all.copied().all(|v| v >= 0.0));
        assert!(d.cross.iter().flatten().flatten().all(|&v| v >= 0.0));
        assert!(d.bilinear.iter().flatten().all(|b| b.iter().all(|&v| v >= 0.0)));
        assert!(d.constant.iter().all(|&v| v > 0.0));
    }
}

/// `f_k` at the GP optimum equals the closed-form SINR denominator computed
/// from scratch with the same estimator.
#[test]
fn denominator_at_optimum_matches_closed_form() {
    for seed in 0..12 {
        let c = case(seed, 8, 3);
        let m = c.cfg.antennas;
        let zeta = vec![1.6; m];
        let sgp = optimize::build_sinr_gp(&c.data, &zeta, c.cfg.rho_max, SinrObjective::MaxProd, 3.0 * m as f64).unwrap();
        let sol = solve(&sgp.problem);
        let (x, p) = sgp.layout.extract(&sol.x);
        let profile = ImpairmentProfile::from_eps(x.iter().map(|v| v.sqrt()).collect(), zeta.clone());
        let setup = UplinkSetup {
            corr: &c.net.correlation,
            profile: &profile,
            data_energy: &p,
            pilot_energy: &c.net.pilot_energy,
            sigma2: c.cfg.sigma2,
            tau_p: c.cfg.tau_p(),
            tau_c: c.cfg.tau_c,
        };
        // Ψ stays at the estimator the GP was built from.
        let rep = se::sinr_mr_closed_form(&setup, &c.state);
        for k in 0..c.cfg.users {
            let a = c.data.denominator(k, &x, &p);
            let b = rep.components[k].denominator();
            assert!((a - b).abs() <= 1e-10 * b, "seed {seed} ue {k}: {a} vs {b}");
            assert!((c.data.sinr(&x, &p)[k] - rep.sinr[k]).abs() <= 1e-10 * rep.sinr[k]);
        }
    }
}

#[test]
fn max_min_dominates_max_prod_on_worst_user() {
    for seed in 0..12 {
        let c = case(100 + seed, 8, 4);
        let m = c.cfg.antennas;
        let zeta = vec![1.6; m];
        let b_tot = 3.0 * m as f64;
        let build = |o| optimize::build_sinr_gp(&c.data, &zeta, c.cfg.rho_max, o, b_tot).unwrap();
        let (prod, minf) = (build(SinrObjective::MaxProd), build(SinrObjective::MaxMin));
        let (sp, sm) = (solve(&prod.problem), solve(&minf.problem));
        let worst = |g: &optimize::SinrGp, s: &gp::GpSolution| {
            let (x, p) = g.layout.extract(&s.x);
            c.data.sinr(&x, &p).into_iter().fold(f64::INFINITY, f64::min)
        };
        let (wp, wm) = (worst(&prod, &sp), worst(&minf, &sm));
        assert!(wm >= wp * (1.0 - 1e-7), "seed {seed}: max-min {wm} < max-prod {wp}");
    }
}

#[test]
fn single_user_objectives_coincide() {
    for seed in 0..8 {
        let c = case(200 + seed, 8, 1);
        let m = c.cfg.antennas;
        let zeta = vec![1.6; m];
        let b_tot = 2.5 * m as f64;
        let build = |o| optimize::build_sinr_gp(&c.data, &zeta, c.cfg.rho_max, o, b_tot).unwrap();
        let (prod, minf) = (build(SinrObjective::MaxProd), build(SinrObjective::MaxMin));
        let (sp, sm) = (solve(&prod.problem), solve(&minf.problem));
        let s = |g: &optimize::SinrGp, sol: &gp::GpSolution| {
            let (x, p) = g.layout.extract(&sol.x);
            c.data.sinr(&x, &p)[0]
        };
        let (a, b) = (s(&prod, &sp), s(&minf, &sm));
        assert!((a - b).abs() <= 1e-6 * a, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn equal_adc_never_beats_mixed_and_budget_is_met() {
    let model = PowerModel::default();
    for seed in 0..10 {
        let c = case(300 + seed, 8, 3);
        let m = c.cfg.antennas;
        let zeta = vec![1.6; m];
        let spec = PowerModel { tau_p: c.cfg.tau_p(), ..model }.constraint_spec(1.0 + 0.3 * seed as f64);
        let mixed = optimize::build_power_constrained_gp(&c.data, &zeta, c.cfg.rho_max, &spec, true).unwrap();
        let equal = optimize::build_power_constrained_gp(&c.data, &zeta, c.cfg.rho_max, &spec, false).unwrap();
        let (sm, se_) = (solve(&mixed.problem), solve(&equal.problem));
        assert!(se_.objective <= sm.objective * (1.0 + 1e-7), "seed {seed}: equal {} mixed {}", se_.objective, sm.objective);
        for (g, s) in [(&mixed, &sm), (&equal, &se_)] {
            let (x, p) = g.layout.extract(&s.x);
            let eps: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
            let used = spec.data_power_factor() * p.iter().sum::<f64>()
                + 2.0 * spec.d1 * eps.iter().zip(&zeta).map(|(e, z)| z / e).sum::<f64>();
            assert!(used <= spec.gamma_pc * (1.0 + 1e-8), "seed {seed}: {used} > {}", spec.gamma_pc);
            if !g.layout.mixed {
                assert!(eps.iter().all(|e| (e - eps[0]).abs() <= 1e-12 * eps[0]));
            }
        }
    }
}

#[test]
fn trajectory_reports_relative_changes() {
    let c = case(400, 8, 3);
    let m = c.cfg.antennas;
    let zeta = vec![1.6; m];
    let inp = optimize::AllocationInputs {
        corr: &c.net.correlation,
        pilot_energy: &c.net.pilot_energy,
        sigma2: c.cfg.sigma2,
        tau_p: c.cfg.tau_p(),
        zeta: &zeta,
        rho_max: c.cfg.rho_max,
    };
    let cfg = optimize::DriverConfig::new(SinrObjective::MaxProd, optimize::AllocationConstraint::BitBudget(3.0 * m as f64));
    let res = optimize::iterate_psi(&inp, &cfg).unwrap();
    assert!(res.iterations() >= 2 && res.iterations() <= 10);
    assert_eq!(res.relative_change(1), None);
    let (a, b) = (res.trajectory[0], res.trajectory[1]);
    assert_eq!(res.relative_change(2), Some((b - a).abs() / a.abs()));
    assert!((res.bits.iter().sum::<f64>() - 3.0 * m as f64).abs() < 1e-6);
    assert!(res.bits.iter().all(|&b| b >= 1.0 - 1e-9));
    assert_eq!(c.profile.antennas(), m);
}
