mod common;

use adcbits::linalg::CMat;
use adcbits::quantizer::{self, AntennaQuantizers, QuantizerCodebook};
use adcbits::rng;
use proptest::prelude::*;

fn simpson_mse(cb: &QuantizerCodebook) -> f64 {
    common::quantizer_mse_simpson(|x| cb.quantize(x), &cb.thresholds)
}

/// Gaussian-weighted centroid of `[a, b]` by Simpson integration.
fn simpson_centroid(a: f64, b: f64) -> f64 {
    let (a, b) = (a.max(-12.0), b.min(12.0));
    let num = common::simpson(|x| x * common::std_normal_pdf(x), a, b, 4000);
    let den = common::simpson(common::std_normal_pdf, a, b, 4000);
    num / den
}

#[test]
fn codebook_mse_matches_simpson() {
    for b in 1..=8 {
        let cb = quantizer::build_codebook(b).unwrap();
        let s = simpson_mse(&cb);
        assert!((cb.mse - s).abs() <= 1e-9 * s, "b={b}: {} vs {s}", cb.mse);
    }
}

#[test]
fn one_bit_mse_is_classical() {
    let cb = quantizer::build_codebook(1).unwrap();
    assert!((cb.mse - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-12);
    assert!((cb.levels[1] - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
}

#[test]
fn lloyd_conditions_hold_independently() {
    for b in 1..=quantizer::MAX_LLOYD_BITS {
        let cb = quantizer::build_codebook(b).unwrap();
        let (nn, cent) = cb.optimality_residuals();
        assert!(nn < 1e-10 && cent < 1e-10, "b={b}: {nn} {cent}");
        let mut edges = vec![f64::NEG_INFINITY];
        edges.extend(&cb.thresholds);
        edges.push(f64::INFINITY);
        for (i, y) in cb.levels.iter().enumerate() {
            let c = simpson_centroid(edges[i], edges[i + 1]);
            assert!((y - c).abs() < 1e-9, "b={b} cell {i}: {y} vs {c}");
        }
    }
}

#[test]
fn uniform_step_is_locally_optimal() {
    for b in (quantizer::MAX_LLOYD_BITS + 1)..=8 {
        let cb = quantizer::build_codebook(b).unwrap();
        let step = cb.step.expect("uniform codebook");
        let n = 1usize << b;
        let mse_at = |s: f64| {
            let levels: Vec<f64> = (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * s).collect();
            let thr: Vec<f64> = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            let q = |x: f64| {
                let idx = thr.partition_point(|&t| t < x);
                levels[idx]
            };
            common::quantizer_mse_simpson(q, &thr)
        };
        let here = mse_at(step);
        assert!((here - cb.mse).abs() < 1e-9 * here);
        for d in [1e-3, -1e-3] {
            assert!(mse_at(step * (1.0 + d)) > here, "b={b} step {step} not optimal ({d})");
        }
    }
}

#[test]
fn mse_decreases_with_bits() {
    let mut prev = f64::INFINITY;
    for b in 1..=12 {
        let cb = quantizer::build_codebook(b).unwrap();
        assert!(cb.mse < prev, "b={b}");
        assert!(cb.levels.windows(2).all(|w| w[1] > w[0]));
        prev = cb.mse;
    }
}

#[test]
fn effective_zeta_in_range_for_lloyd_codebooks() {
    for b in 1..=quantizer::MAX_LLOYD_BITS {
        let z = quantizer::build_codebook(b).unwrap().effective_zeta();
        assert!(z > 1.0 && z < 2.0, "b={b}: {z}");
    }
}

/// Complex Gaussian samples through `quantize_block` lose `mse · variance`
/// of energy on average, whatever the AGC variance.
#[test]
fn block_quantization_distortion_band() {
    let n = 20_000;
    let variance = [3.0e-12, 0.5, 40.0, 1.0, 7.0];
    let bits = [1u32, 2, 3, 4, 5];
    let q = AntennaQuantizers::new(&bits).unwrap();
    let mut r = rng::rng_for(12, &[3]);
    let block = CMat::from_fn(bits.len(), n, |m, _| rng::cn(&mut r, variance[m]));
    let out = quantizer::quantize_block(&block, &q, &variance);
    for m in 0..bits.len() {
        let d: Vec<f64> = (0..n).map(|j| (out.y_q[(m, j)] - block[(m, j)]).norm_sqr() / variance[m]).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let want = q.codebooks[m].mse;
        assert!((mean - want).abs() < 3.0 * sd / (n as f64).sqrt(), "b={}: {mean} vs {want}", bits[m]);
    }
}

proptest! {
    #[test]
    fn quantizer_idempotent_and_odd(b in 1u32..=10, x in -8.0f64..8.0) {
        let cb = quantizer::shared_codebook(b).unwrap();
        let y = cb.quantize(x);
        prop_assert_eq!(cb.quantize(y), y);
        if x != 0.0 {
            prop_assert_eq!(cb.quantize(-x), -y);
        }
        prop_assert!(cb.levels.contains(&y));
        // Nearest level.
        let best = cb.levels.iter().map(|l| (l - x).abs()).fold(f64::INFINITY, f64::min);
        prop_assert!((y - x).abs() <= best + 1e-12);
    }
}
