//! Scalar quantizers for a unit-variance real Gaussian input and the
//! exact-quantization uplink pipeline used to validate the additive
//! distortion model.
//!
//! Codebooks with `b ≤ 5` bits are Lloyd-Max optimal; wider ones are uniform
//! with a numerically optimized step. All cell integrals use the closed-form
//! truncated Gaussian moments.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use libm::erfc;

use crate::error::{Error, Result};
use crate::estimation;
use crate::linalg::{self, CMat, CVec, HermitianSolver};
use crate::network::{ChannelSampler, CorrelationSet};
use crate::rng::{self, SimRng};
use crate::se::{self, Combiner, SinrReport, UatfAccumulator, UatfSample};

/// Largest Lloyd-Max codebook.
pub const MAX_LLOYD_BITS: u32 = 5;
/// Largest supported resolution. Allocations above this are quantized at
/// this resolution, whose distortion is already below 1e-9 of the signal.
pub const MAX_QUANTIZER_BITS: u32 = 16;
/// Required Lloyd optimality residual.
pub const LLOYD_TOL: f64 = 1e-10;
const LLOYD_MAX_ITER: usize = 2_000_000;

/// Training trials used for the numeric LMMSE filter.
pub const MIN_TRAINING_TRIALS: usize = 10_000;
/// Trials per seeded chunk in the exact pipeline.
const CHUNK: usize = 256;
/// Data symbols per channel realization in the exact pipeline.
const DATA_SYMBOLS: usize = 4;

fn pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }
}

/// Upper tail `P(X > x)`.
fn tail(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `P(a < X < b)` evaluated on the tail side that avoids cancellation.
fn mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        tail(a) - tail(b)
    } else if b <= 0.0 {
        tail(-b) - tail(-a)
    } else {
        1.0 - tail(b) - tail(-a)
    }
}

fn xpdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x * pdf(x)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton on `P_n`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

static GL_RULE: std::sync::LazyLock<Vec<(f64, f64)>> = std::sync::LazyLock::new(|| gauss_legendre(24));

/// `∫_a^b (x − y)² φ(x) dx`.
///
/// Bounded cells are integrated directly so that narrow cells far from the
/// origin do not lose digits to cancellation between the raw moments. The
/// two unbounded cells use the exact moments.
fn cell_mse(a: f64, b: f64, y: f64) -> f64 {
    if a.is_finite() && b.is_finite() {
        let pieces = ((b - a) / 0.5).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        let mut total = 0.0;
        for p in 0..pieces {
            let mid = a + (p as f64 + 0.5) * h;
            total += GL_RULE
                .iter()
                .map(|&(t, w)| {
                    let x = mid + 0.5 * h * t;
                    w * (x - y) * (x - y) * pdf(x)
                })
                .sum::<f64>()
                * 0.5
                * h;
        }
        return total;
    }
    let m0 = mass(a, b);
    let m1 = pdf(a) - pdf(b);
    let m2 = m0 + xpdf(a) - xpdf(b);
    (m2 - 2.0 * y * m1 + y * y * m0).max(0.0)
}

fn centroid(a: f64, b: f64) -> f64 {
    (pdf(a) - pdf(b)) / mass(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerCodebook {
    pub bits: u32,
    /// `2^b − 1` increasing decision thresholds.
    pub thresholds: Vec<f64>,
    /// `2^b` increasing reconstruction levels.
    pub levels: Vec<f64>,
    /// Distortion power for a unit-variance input.
    pub mse: f64,
    /// Largest `|level − centroid|` at termination (Lloyd codebooks).
    pub lloyd_residual: Option<f64>,
    /// Step of a uniform codebook.
    pub step: Option<f64>,
}

impl QuantizerCodebook {
    fn from_levels(bits: u32, levels: Vec<f64>) -> Self {
        let thresholds: Vec<f64> = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mse = codebook_mse(&thresholds, &levels);
        Self {
            bits,
            thresholds,
            levels,
            mse,
            lloyd_residual: None,
            step: None,
        }
    }

    /// Odd-symmetric quantization: `Q(−x) = −Q(x)`, with the sign of zero
    /// selecting the innermost level.
    pub fn quantize(&self, x: f64) -> f64 {
        let half = self.levels.len() / 2;
        let pos_thr = &self.thresholds[half..];
        let idx = pos_thr.partition_point(|&t| t < x.abs());
        self.levels[half + idx].copysign(x)
    }

    /// Largest deviation from the nearest-neighbor and centroid conditions.
    pub fn optimality_residuals(&self) -> (f64, f64) {
        let nn = self
            .thresholds
            .iter()
            .enumerate()
            .map(|(i, t)| (t - 0.5 * (self.levels[i] + self.levels[i + 1])).abs())
            .fold(0.0, f64::max);
        let cent = cell_bounds(&self.thresholds)
            .zip(&self.levels)
            .map(|((a, b), y)| (y - centroid(a, b)).abs())
            .fold(0.0, f64::max);
        (nn, cent)
    }

    /// `ζ_eff = 2^b √MSE`.
    pub fn effective_zeta(&self) -> f64 {
        (self.bits as f64).exp2() * self.mse.sqrt()
    }
}

fn cell_bounds(thresholds: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    let n = thresholds.len() + 1;
    (0..n).map(move |i| {
        let a = if i == 0 { f64::NEG_INFINITY } else { thresholds[i - 1] };
        let b = if i + 1 == n { f64::INFINITY } else { thresholds[i] };
        (a, b)
    })
}

fn codebook_mse(thresholds: &[f64], levels: &[f64]) -> f64 {
    cell_bounds(thresholds).zip(levels).map(|((a, b), &y)| cell_mse(a, b, y)).sum()
}

fn uniform_levels(bits: u32, step: f64) -> Vec<f64> {
    let n = 1usize << bits;
    (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * step).collect()
}

/// MSE of the uniform codebook with the given step. Cells whose bounds both
/// lie beyond 40σ carry no mass and are skipped.
fn uniform_mse(bits: u32, step: f64) -> f64 {
    let n = 1usize << bits;
    let half = n / 2;
    let mut total = 0.0;
    // Positive half, doubled by symmetry.
    for j in 0..half {
        let y = (j as f64 + 0.5) * step;
        let a = j as f64 * step;
        if a > 40.0 {
            break;
        }
        let b = if j + 1 == half { f64::INFINITY } else { (j as f64 + 1.0) * step };
        total += cell_mse(a, b, y);
    }
    2.0 * total
}

fn lloyd_max(bits: u32) -> QuantizerCodebook {
    let n = 1usize << bits;
    let normal = Normal::standard();
    let mut levels: Vec<f64> = (0..n).map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
    let mut thresholds = vec![0.0; n - 1];
    for _ in 0..LLOYD_MAX_ITER {
        for i in 0..n - 1 {
            thresholds[i] = 0.5 * (levels[i] + levels[i + 1]);
        }
        let mut delta: f64 = 0.0;
        for (i, (a, b)) in cell_bounds(&thresholds).enumerate().collect::<Vec<_>>() {
            let y = centroid(a, b);
            delta = delta.max((y - levels[i]).abs());
            levels[i] = y;
        }
        // Symmetrize against drift from rounding.
        for i in 0..n / 2 {
            let v = 0.5 * (levels[n - 1 - i] - levels[i]);
            levels[i] = -v;
            levels[n - 1 - i] = v;
        }
        if delta < 1e-14 {
            break;
        }
    }
    let mut cb = QuantizerCodebook::from_levels(bits, levels);
    let (nn, cent) = cb.optimality_residuals();
    cb.lloyd_residual = Some(nn.max(cent));
    cb
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > rel_tol * (lo + hi) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn uniform_optimal(bits: u32) -> QuantizerCodebook {
    let n = (1u64 << bits) as f64;
    let step = golden_section(|s| uniform_mse(bits, s), 1.0 / n, 16.0 / n, 1e-10);
    let mut cb = QuantizerCodebook::from_levels(bits, uniform_levels(bits, step));
    cb.mse = uniform_mse(bits, step);
    cb.step = Some(step);
    cb
}

/// Builds the codebook for `bits` resolution.
pub fn build_codebook(bits: u32) -> Result<QuantizerCodebook> {
    if bits == 0 || bits > MAX_QUANTIZER_BITS {
        return Err(Error::InvalidArgument(format!(
            "quantizer resolution must be within 1..={MAX_QUANTIZER_BITS}, got {bits}"
        )));
    }
    Ok(if bits <= MAX_LLOYD_BITS {
        lloyd_max(bits)
    } else {
        uniform_optimal(bits)
    })
}

/// Process-wide codebook cache. Codebooks are immutable once built.
pub fn shared_codebook(bits: u32) -> Result<Arc<QuantizerCodebook>> {
    static CACHE: OnceLock<Mutex<BTreeMap<u32, Arc<QuantizerCodebook>>>> = OnceLock::new();
    let bits = bits.min(MAX_QUANTIZER_BITS);
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(cb) = cache.lock().expect("codebook cache poisoned").get(&bits) {
        return Ok(cb.clone());
    }
    let cb = Arc::new(build_codebook(bits)?);
    Ok(cache
        .lock()
        .expect("codebook cache poisoned")
        .entry(bits)
        .or_insert(cb)
        .clone())
}

/// CSV with columns `b,thresholds,levels,mse`; list entries separated by `;`.
pub fn codebooks_csv(books: &[QuantizerCodebook]) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(";");
    let mut out = String::from("b,thresholds,levels,mse\n");
    for cb in books {
        let _ = writeln!(out, "{},{},{},{:.17e}", cb.bits, join(&cb.thresholds), join(&cb.levels), cb.mse);
    }
    out
}

/// Per-antenna quantizers with statistical gain control.
#[derive(Debug, Clone)]
pub struct AntennaQuantizers {
    pub codebooks: Vec<Arc<QuantizerCodebook>>,
}

impl AntennaQuantizers {
    pub fn new(bits: &[u32]) -> Result<Self> {
        let codebooks = bits.iter().map(|&b| shared_codebook(b)).collect::<Result<_>>()?;
        Ok(Self { codebooks })
    }
}

/// Per-antenna complex variance `Σ_i E{|x_i|²}[R_i]_mm + σ²`.
pub fn agc_variance(corr: &CorrelationSet, energies: &[f64], sigma2: f64) -> Vec<f64> {
    (0..corr.antennas())
        .map(|m| sigma2 + corr.diag_r.iter().zip(energies).map(|(d, e)| e * d[m]).sum::<f64>())
        .collect()
}

#[derive(Debug, Clone)]
pub struct QuantizedRx {
    pub y_q: CMat,
    /// Per-antenna standard deviation of each real dimension before
    /// quantization.
    pub agc_scale: Vec<f64>,
}

/// Quantizes every row of `block` (antennas × symbols) independently on the
/// real and imaginary parts after scaling to unit variance per dimension.
pub fn quantize_block(block: &CMat, quantizers: &AntennaQuantizers, complex_variance: &[f64]) -> QuantizedRx {
    let agc_scale: Vec<f64> = complex_variance.iter().map(|v| (0.5 * v).sqrt()).collect();
    let mut y_q = block.clone();
    quantize_in_place(&mut y_q, quantizers, &agc_scale);
    QuantizedRx { y_q, agc_scale }
}

fn quantize_in_place(block: &mut CMat, quantizers: &AntennaQuantizers, agc_scale: &[f64]) {
    for m in 0..block.nrows() {
        let cb = &quantizers.codebooks[m];
        let s = agc_scale[m];
        for j in 0..block.ncols() {
            let z = block[(m, j)];
            block[(m, j)] = Complex64::new(s * cb.quantize(z.re / s), s * cb.quantize(z.im / s));
        }
    }
}

/// Sample second moments of (channel, observation) pairs for one UE.
#[derive(Debug, Clone)]
pub struct LmmseMoments {
    pub n: f64,
    pub c_hz: CMat,
    pub c_zz: CMat,
    pub c_hh: CMat,
}

impl LmmseMoments {
    pub fn new(m: usize) -> Self {
        Self {
            n: 0.0,
            c_hz: CMat::zeros(m, m),
            c_zz: CMat::zeros(m, m),
            c_hh: CMat::zeros(m, m),
        }
    }

    pub fn push(&mut self, h: &CVec, z: &CVec) {
        let one = Complex64::new(1.0, 0.0);
        self.c_hz.gerc(one, h, z, one);
        self.c_zz.gerc(one, z, z, one);
        self.c_hh.gerc(one, h, h, one);
        self.n += 1.0;
    }

    pub fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.c_hz += &o.c_hz;
        self.c_zz += &o.c_zz;
        self.c_hh += &o.c_hh;
    }
}

/// Numerically estimated LMMSE filter `Ê{h z^H} (Ê{z z^H})⁻¹`.
#[derive(Debug, Clone)]
pub struct NumericLmmse {
    pub filter: CMat,
    /// `tr(Ê{hh^H} − F Ê{z h^H})`, the estimated mean-square error.
    pub err_trace: f64,
    /// Diagonal loading applied to `Ê{zz^H}`.
    pub jitter: f64,
}

/// Condition number of `Ê{zz^H}` above which `1e-10·tr/M` jitter is added.
pub const LMMSE_MAX_CONDITION: f64 = 1e10;

pub fn lmmse_numeric(moments: &LmmseMoments) -> Result<NumericLmmse> {
    let m = moments.c_zz.nrows();
    let inv_n = Complex64::new(1.0 / moments.n, 0.0);
    let c_hz = &moments.c_hz * inv_n;
    let mut c_zz = &moments.c_zz * inv_n;
    linalg::symmetrize(&mut c_zz);
    let c_hh = &moments.c_hh * inv_n;
    let mut jitter = 0.0;
    if !(linalg::hermitian_condition(&c_zz) <= LMMSE_MAX_CONDITION) {
        jitter = 1e-10 * linalg::trace_re(&c_zz) / m as f64;
        for i in 0..m {
            c_zz[(i, i)] += jitter;
        }
    }
    let solver = HermitianSolver::new(&c_zz).ok_or(Error::SingularCovariance {
        ue: usize::MAX,
        condition: f64::INFINITY,
    })?;
    // F^H = C_zz⁻¹ C_zh
    let filter = solver.solve(&c_hz.adjoint()).adjoint();
    let err_trace = linalg::trace_re(&c_hh) - (&filter * c_hz.adjoint()).trace().re;
    Ok(NumericLmmse {
        filter,
        err_trace,
        jitter: jitter + solver.jitter,
    })
}

/// Fits a numeric LMMSE filter from `(h, z)` sample pairs.
pub fn lmmse_from_samples(h: &[CVec], z: &[CVec]) -> Result<NumericLmmse> {
    let mut mom = LmmseMoments::new(z[0].len());
    for (hi, zi) in h.iter().zip(z) {
        mom.push(hi, zi);
    }
    lmmse_numeric(&mom)
}

/// Inputs of the exact-quantization pipeline.
#[derive(Debug, Clone, Copy)]
pub struct ExactSetup<'a> {
    pub corr: &'a CorrelationSet,
    pub pilot_energy: &'a [f64],
    pub data_energy: &'a [f64],
    pub sigma2: f64,
    pub tau_p: usize,
    pub tau_c: usize,
    /// Integer ADC resolution per antenna.
    pub bits: &'a [u32],
}

struct Pipeline<'a> {
    setup: ExactSetup<'a>,
    sampler: ChannelSampler,
    pilots: Vec<CVec>,
    quantizers: AntennaQuantizers,
    pilot_scale: Vec<f64>,
    data_scale: Vec<f64>,
}

impl<'a> Pipeline<'a> {
    fn new(setup: ExactSetup<'a>) -> Result<Self> {
        let corr = setup.corr;
        let (m, k) = (corr.antennas(), corr.users());
        if setup.bits.len() != m || setup.pilot_energy.len() != k || setup.data_energy.len() != k {
            return Err(Error::InvalidArgument("dimension mismatch in exact-quantization setup".into()));
        }
        if setup.tau_p < k {
            return Err(Error::InvalidArgument("orthogonal pilots need τ_p ≥ K".into()));
        }
        let scale = |v: Vec<f64>| v.into_iter().map(|x| (0.5 * x).sqrt()).collect();
        Ok(Self {
            sampler: ChannelSampler::new(corr),
            pilots: estimation::pilot_book(k, setup.tau_p),
            quantizers: AntennaQuantizers::new(setup.bits)?,
            pilot_scale: scale(agc_variance(corr, setup.pilot_energy, setup.sigma2)),
            data_scale: scale(agc_variance(corr, setup.data_energy, setup.sigma2)),
            setup,
        })
    }

    /// Draws a channel realization and returns the de-spread quantized pilot
    /// observations of every UE.
    fn pilot_phase(&self, h: &mut [CVec], rng: &mut SimRng) -> Vec<CVec> {
        self.sampler.draw_into(rng, h);
        let s = &self.setup;
        let mut y = estimation::pilot_block(h, s.pilot_energy, &self.pilots, s.sigma2, None, rng);
        quantize_in_place(&mut y, &self.quantizers, &self.pilot_scale);
        (0..h.len())
            .map(|k| {
                estimation::despread(&y, &self.pilots[k], s.pilot_energy[k], s.tau_p)
                    .expect("pilot book is unit modulus")
            })
            .collect()
    }

    fn train(&self, n_trials: usize, seed: u64) -> Result<Vec<NumericLmmse>> {
        let (m, k) = (self.setup.corr.antennas(), self.setup.corr.users());
        let n_chunks = n_trials.div_ceil(CHUNK);
        let parts: Vec<Vec<LmmseMoments>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = rng::rng_for(seed, &[0x7A, c as u64]);
                let mut mom = vec![LmmseMoments::new(m); k];
                let mut h: Vec<CVec> = (0..k).map(|_| CVec::zeros(m)).collect();
                for _ in 0..CHUNK.min(n_trials - c * CHUNK) {
                    let z = self.pilot_phase(&mut h, &mut rng);
                    for u in 0..k {
                        mom[u].push(&h[u], &z[u]);
                    }
                }
                mom
            })
            .collect();
        let mut total = vec![LmmseMoments::new(m); k];
        for p in &parts {
            for (t, x) in total.iter_mut().zip(p) {
                t.merge(x);
            }
        }
        total.iter().map(lmmse_numeric).collect()
    }

    fn evaluate<C: Combiner>(
        &self,
        combiner: &C,
        filters: &[NumericLmmse],
        n_trials: usize,
        seed: u64,
    ) -> Vec<UatfAccumulator> {
        let s = &self.setup;
        let (m, k) = (s.corr.antennas(), s.corr.users());
        let n_chunks = n_trials.div_ceil(CHUNK);
        let parts: Vec<Vec<UatfAccumulator>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = rng::rng_for(seed, &[0xE7, c as u64]);
                let mut acc = vec![UatfAccumulator::default(); k];
                let mut h: Vec<CVec> = (0..k).map(|_| CVec::zeros(m)).collect();
                let sqrt_p: Vec<f64> = s.data_energy.iter().map(|p| p.sqrt()).collect();
                for _ in 0..CHUNK.min(n_trials - c * CHUNK) {
                    let z = self.pilot_phase(&mut h, &mut rng);
                    let hhat: Vec<CVec> = filters.iter().zip(&z).map(|(f, zk)| &f.filter * zk).collect();
                    let v = combiner.combine(&hhat, s.data_energy, s.sigma2);
                    let mut gain = vec![Complex64::new(0.0, 0.0); k];
                    let mut power = vec![0.0; k];
                    for _ in 0..DATA_SYMBOLS {
                        let sym: Vec<Complex64> = (0..k).map(|_| rng::cn(&mut rng, 1.0)).collect();
                        let mut y = CMat::from_fn(m, 1, |_, _| rng::cn(&mut rng, s.sigma2));
                        for (u, hu) in h.iter().enumerate() {
                            let x = sym[u] * sqrt_p[u];
                            for l in 0..m {
                                y[(l, 0)] += hu[l] * x;
                            }
                        }
                        quantize_in_place(&mut y, &self.quantizers, &self.data_scale);
                        let yq = y.column(0);
                        for u in 0..k {
                            let shat = v[u].dotc(&yq);
                            gain[u] += shat * sym[u].conj();
                            power[u] += shat.norm_sqr();
                        }
                    }
                    let inv = 1.0 / DATA_SYMBOLS as f64;
                    for u in 0..k {
                        // Normalized so that the accumulator's numerator p|μ|² is
                        // |E{ŝ s*}|².
                        acc[u].push(UatfSample {
                            gain: gain[u] * (inv / sqrt_p[u]),
                            received: power[u] * inv,
                            noise: 0.0,
                            distortion: 0.0,
                        });
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![UatfAccumulator::default(); k];
        for p in &parts {
            for (t, x) in total.iter_mut().zip(p) {
                t.merge(x);
            }
        }
        total
    }
}

/// Numeric LMMSE filters from quantized pilots; exposed for validation.
pub fn train_numeric_lmmse(setup: &ExactSetup<'_>, n_trials: usize, seed: u64) -> Result<Vec<NumericLmmse>> {
    Pipeline::new(*setup)?.train(n_trials, seed)
}

/// SE with true per-antenna quantization of pilots and data.
///
/// The estimator is trained on `n_train` independent realizations, then the
/// UatF moments `E{ŝ_k s_k*}` and `E{|ŝ_k|²}` of `ŝ_k = v_k^H Q(y)` are
/// estimated over `n_trials` fresh realizations. All received power beyond
/// the mean gain is reported under `interference`.
pub fn se_exact_quantization<C: Combiner>(
    setup: &ExactSetup<'_>,
    combiner: &C,
    n_train: usize,
    n_trials: usize,
    seed: u64,
) -> Result<SinrReport> {
    if n_trials < 2 {
        return Err(Error::InvalidArgument("need at least two evaluation trials".into()));
    }
    let pipe = Pipeline::new(*setup)?;
    let filters = pipe.train(n_train, rng::derive_seed(seed, &[1]))?;
    let acc = pipe.evaluate(combiner, &filters, n_trials, rng::derive_seed(seed, &[2]));
    Ok(se::report_from_accumulators(&acc, setup.data_energy, setup.tau_p, setup.tau_c))
}
