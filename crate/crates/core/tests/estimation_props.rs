mod common;

use adcbits::estimation::{self, EstimatorState};
use adcbits::impairments::ImpairmentProfile;
use adcbits::linalg::{self, c, CMat, CVec};
use adcbits::network::{self, ChannelCase, NetworkConfig, NetworkRealization};
use adcbits::rng;
use proptest::prelude::*;
use rand::Rng;

fn random_profile(seed: u64, m: usize) -> ImpairmentProfile {
    let mut r = common::rng(seed ^ 0xE5);
    ImpairmentProfile::from_eps((0..m).map(|_| r.random_range(0.01..0.8)).collect(), vec![1.6; m])
}

fn build(cfg: &NetworkConfig, net: &NetworkRealization, profile: &ImpairmentProfile) -> EstimatorState {
    estimation::build_estimator(&net.correlation, profile, &net.pilot_energy, cfg.sigma2, cfg.tau_p()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn psi_offset_diagonal_and_above_noise(seed in 0u64..1_000_000) {
        let (cfg, net) = common::random_network(seed, 12, 4);
        let st = build(&cfg, &net, &random_profile(seed, cfg.antennas));
        for k in 0..cfg.users {
            let off = &st.psi[k] - &net.correlation.r[k];
            let scale = linalg::trace_re(&st.psi[k]);
            for i in 0..cfg.antennas {
                for j in 0..cfg.antennas {
                    if i != j {
                        prop_assert!(off[(i, j)].norm() <= 1e-14 * scale);
                    }
                }
            }
            let floor = cfg.sigma2 / (cfg.tau_p() as f64 * net.pilot_energy[k]);
            for d in st.psi_offset(&net.correlation, k) {
                prop_assert!(d >= floor * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn error_covariance_psd_and_bounded(seed in 0u64..1_000_000) {
        let (cfg, net) = common::random_network(seed, 12, 4);
        let st = build(&cfg, &net, &random_profile(seed, cfg.antennas));
        for k in 0..cfg.users {
            let tr_r = linalg::trace_re(&net.correlation.r[k]);
            let ev = linalg::hermitian_eigenvalues(&st.err_cov[k]);
            prop_assert!(ev[0] >= -1e-10 * tr_r);
            prop_assert!(linalg::trace_re(&st.err_cov[k]) <= tr_r * (1.0 + 1e-12));
        }
    }

    #[test]
    fn error_trace_nondecreasing_in_each_eps(seed in 0u64..1_000_000, which in 0usize..12, bump in 1.01f64..3.0) {
        let (cfg, net) = common::random_network(seed, 12, 4);
        let base = random_profile(seed, cfg.antennas);
        let mut up = base.clone();
        let m = which % cfg.antennas;
        up.eps[m] *= bump;
        let a = build(&cfg, &net, &base);
        let b = build(&cfg, &net, &up);
        for k in 0..cfg.users {
            let ta = linalg::trace_re(&a.err_cov[k]);
            let tb = linalg::trace_re(&b.err_cov[k]);
            prop_assert!(tb >= ta * (1.0 - 1e-12), "ue {}: {} -> {}", k, ta, tb);
        }
    }
}

/// Full pilot phase with per-symbol distortion and de-spreading, checked
/// against the estimator statistics: the error is uncorrelated with the
/// estimate and its mean energy is tr C̃.
#[test]
fn per_symbol_pilot_route_matches_estimator_statistics() {
    let cfg = NetworkConfig::default().with_size(4, 2).with_case(ChannelCase::CoCorrDK);
    let net = network::drop_network(&cfg, 21).unwrap();
    let profile = ImpairmentProfile::from_eps(vec![0.4, 0.1, 0.6, 0.25], vec![1.6; 4]);
    let tau_p = cfg.tau_p();
    let st = build(&cfg, &net, &profile);
    let pilots = estimation::pilot_book(cfg.users, tau_p);
    let sampler = network::ChannelSampler::new(&net.correlation);
    let mut r = rng::rng_for(4, &[7]);
    let n = 40_000;
    let m = cfg.antennas;
    for k in 0..cfg.users {
        let mut cross = CMat::zeros(m, m);
        let mut mse = Vec::with_capacity(n);
        let mut norm_prod = 0.0;
        for _ in 0..n {
            let h = sampler.draw(&mut r);
            let y = estimation::pilot_block(&h, &net.pilot_energy, &pilots, cfg.sigma2, Some(&profile), &mut r);
            let z = estimation::despread(&y, &pilots[k], net.pilot_energy[k], tau_p).unwrap();
            let hhat = estimation::estimate_channel(&st, k, &z);
            let err: CVec = &h[k] - &hhat;
            cross.ger(c(1.0), &hhat, &err.conjugate(), c(1.0));
            mse.push(err.norm_squared());
            norm_prod += hhat.norm_squared() * err.norm_squared();
        }
        let nf = n as f64;
        let mean = mse.iter().sum::<f64>() / nf;
        let var = mse.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let want = linalg::trace_re(&st.err_cov[k]);
        assert!((mean - want).abs() < 3.0 * (var / nf).sqrt(), "ue {k}: mse {mean} vs {want}");
        // Each entry of the cross moment has standard error below
        // √(E‖ĥ‖²‖h̃‖²/n).
        let bound = 3.0 * (norm_prod / nf / nf).sqrt();
        let worst = (cross / c(nf)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < bound, "ue {k}: |E ĥh̃^H| {worst} vs {bound}");
    }
}
