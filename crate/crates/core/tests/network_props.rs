mod common;

use adcbits::linalg::{self, CMat};
use adcbits::network::{self, ChannelCase, LsfDraws, NetworkConfig};
use adcbits::rng;
use proptest::prelude::*;

fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn correlation_hermitian_psd(seed in 0u64..1_000_000) {
        let (_, net) = common::random_network(seed, 24, 6);
        for r in &net.correlation.r {
            let tr = linalg::trace_re(r);
            prop_assert!(linalg::hermitian_defect(r) <= 1e-12 * tr.max(1e-300));
            let ev = linalg::hermitian_eigenvalues(r);
            prop_assert!(ev[0] >= -1e-10 * tr);
        }
    }

    #[test]
    fn beta_bar_is_mean_diagonal(seed in 0u64..1_000_000) {
        let (cfg, net) = common::random_network(seed, 24, 6);
        for (k, r) in net.correlation.r.iter().enumerate() {
            let b = linalg::trace_re(r) / cfg.antennas as f64;
            prop_assert!((b - net.beta_bar[k]).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn channel_inversion_equalizes_received_pilot(seed in 0u64..1_000_000) {
        let (cfg, net) = common::random_network(seed, 16, 6);
        for (q, b) in net.pilot_energy.iter().zip(&net.beta_bar) {
            prop_assert!(*q <= cfg.rho_max);
            let want = cfg.rho_bar().min(cfg.rho_max * b);
            prop_assert!((q * b - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn drops_are_reproducible(seed in 0u64..1_000_000) {
        let cfg = NetworkConfig::default().with_size(6, 3).with_case(ChannelCase::CoCorrDK);
        let a = network::drop_network(&cfg, seed).unwrap();
        let b = network::drop_network(&cfg, seed).unwrap();
        prop_assert_eq!(&a.correlation.r, &b.correlation.r);
        prop_assert_eq!(&a.pilot_energy, &b.pilot_energy);
        prop_assert_eq!(&a.geometry.ue_positions, &b.geometry.ue_positions);
        let c = network::drop_network(&cfg, seed + 1).unwrap();
        prop_assert_ne!(&a.geometry.ue_positions, &c.geometry.ue_positions);
    }
}

#[test]
fn cocorr_i_trace_matches_pathloss() {
    let cfg = NetworkConfig::default().with_size(16, 4).with_case(ChannelCase::CoCorrI);
    for seed in 0..20 {
        let net = network::drop_network(&cfg, seed).unwrap();
        let mut r = rng::rng_for(seed, &[99]);
        let draws = LsfDraws::draw(&cfg, &mut r);
        let corr = network::build_correlation(&cfg, &net.geometry, &draws);
        for k in 0..cfg.users {
            let model = cfg.pathloss_gain(net.geometry.distance(0, k)) * 10f64.powf(draws.shadow_db[(0, k)] / 10.0);
            let got = linalg::trace_re(&corr.r[k]) / cfg.antennas as f64;
            assert!((got - model).abs() <= 1e-13 * model, "{got} vs {model}");
        }
    }
}

#[test]
fn sampled_channels_have_target_covariance() {
    let cfg = NetworkConfig::default().with_size(4, 2).with_case(ChannelCase::CoCorrDK);
    let net = network::drop_network(&cfg, 3).unwrap();
    let n = 40_000;
    let draws = network::sample_channels(&net.correlation, n, 11);
    for k in 0..2 {
        let r = &net.correlation.r[k];
        let s = network::sample_covariance(&draws, k);
        // Entry-wise standard error of a complex Gaussian sample covariance
        // is at most tr(R)/√n in Frobenius norm.
        let err = frob(&(&s - r)) / linalg::trace_re(r);
        assert!(err < 4.0 / (n as f64).sqrt(), "{err}");
    }
}
