use adcbits::impairments::{self, DistortionDiag, ImpairmentProfile};
use adcbits::linalg::{c, CVec};
use adcbits::rng;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn distortion_covariance_is_diagonal_eps_sq_dh() {
    let profile = ImpairmentProfile::from_eps(vec![0.3, 0.05, 0.8], vec![1.6; 3]);
    let channels = vec![
        CVec::from_vec(vec![c(1.0), Complex64::new(0.2, -0.7), c(0.1)]),
        CVec::from_vec(vec![Complex64::new(0.0, 0.5), c(2.0), Complex64::new(-0.3, 0.3)]),
    ];
    let energies = [0.7, 1.9];
    let d_h = DistortionDiag::new(&channels, &energies).d_h;
    let n = 200_000;
    let mut r = rng::rng_for(5, &[1]);
    let mut second = vec![vec![Complex64::new(0.0, 0.0); 3]; 3];
    let mut fourth = [0.0; 3];
    for _ in 0..n {
        let e = impairments::distortion_sample(&profile, &channels, &energies, &mut r);
        for i in 0..3 {
            for j in 0..3 {
                second[i][j] += e[i] * e[j].conj();
            }
            fourth[i] += e[i].norm_sqr().powi(2);
        }
    }
    for i in 0..3 {
        let want = profile.eps[i].powi(2) * d_h[i];
        let mean = second[i][i].re / n as f64;
        let var = fourth[i] / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!((mean - want).abs() < 3.0 * se, "antenna {i}: {mean} vs {want} (se {se})");
        for j in 0..3 {
            if i != j {
                // |e_i e_j*| has standard deviation √(v_i v_j).
                let sd = (profile.eps[i].powi(2) * d_h[i] * profile.eps[j].powi(2) * d_h[j]).sqrt();
                let off = (second[i][j] / n as f64).norm();
                assert!(off < 4.0 * sd / (n as f64).sqrt(), "({i},{j}) {off}");
            }
        }
    }
}

#[test]
fn distortion_energy_slope_is_eps_sq() {
    // Regress mean |e|² on the received energy at one antenna.
    let eps = 0.2;
    let profile = ImpairmentProfile::from_eps(vec![eps], vec![1.6]);
    let mut r = rng::rng_for(9, &[2]);
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for level in 1..=20 {
        let energy = level as f64 * 0.25;
        let h = vec![CVec::from_vec(vec![c(1.0)])];
        let n = 20_000;
        let mean = (0..n)
            .map(|_| impairments::distortion_sample(&profile, &h, &[energy], &mut r)[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        sx += energy;
        sy += mean;
        sxx += energy * energy;
        sxy += energy * mean;
        cnt += 1.0;
    }
    let slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    let intercept = (sy - slope * sx) / cnt;
    assert!((slope / (eps * eps) - 1.0).abs() < 0.01, "slope {slope}");
    assert!(intercept.abs() < 0.01 * eps * eps * 5.0, "intercept {intercept}");
}

proptest! {
    #[test]
    fn bits_round_trip(bits in prop::collection::vec(0.5f64..16.0, 1..10), zeta in 1.01f64..1.99) {
        let z = vec![zeta; bits.len()];
        let p = impairments::eps_from_bits(&z, &bits, false).unwrap();
        for ((e, b), back) in p.eps.iter().zip(&bits).zip(impairments::bits_from_eps(&z, &p.eps)) {
            prop_assert!(*e > 0.0);
            prop_assert!((e - zeta * (-b).exp2()).abs() <= 1e-15 * e);
            prop_assert!((back - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn distortion_diag_nonnegative(vals in prop::collection::vec(-3.0f64..3.0, 8), e in prop::collection::vec(0.0f64..2.0, 2)) {
        let h: Vec<CVec> = vals.chunks(4).map(|v| CVec::from_vec(vec![Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])])).collect();
        let d = DistortionDiag::new(&h, &e);
        prop_assert!(d.d_h.iter().all(|&x| x >= 0.0));
    }
}
