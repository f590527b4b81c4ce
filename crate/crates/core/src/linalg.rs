//! Dense complex linear algebra helpers shared by the estimation, SE and
//! quantization paths.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest absolute entry of `a - a^H`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Replaces `a` by `(a + a^H) / 2`.
pub fn symmetrize(a: &mut CMat) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = c(a[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
}

pub fn trace_re(a: &CMat) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].re).sum()
}

pub fn diag_re(a: &CMat) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, i)].re).collect()
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Outcome of projecting a Hermitian matrix onto the PSD cone.
#[derive(Debug, Clone)]
pub struct PsdProjection {
    pub matrix: CMat,
    /// Most negative eigenvalue seen before clipping (0 if none).
    pub min_eigenvalue: f64,
    pub repaired: bool,
}

/// Clips eigenvalues below `-tol * tr(a)` to zero and restores the original
/// trace. Matrices within tolerance are returned unchanged.
pub fn project_psd(a: &CMat, tol: f64) -> PsdProjection {
    let tr = trace_re(a);
    let eig = SymmetricEigen::new(a.clone());
    let min_ev = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_ev >= -tol * tr.abs() {
        return PsdProjection {
            matrix: a.clone(),
            min_eigenvalue: min_ev.min(0.0),
            repaired: false,
        };
    }
    let clipped: DVector<f64> = eig.eigenvalues.map(|v| v.max(0.0));
    let new_tr: f64 = clipped.sum();
    let scale = if new_tr > 0.0 { tr / new_tr } else { 0.0 };
    let u = &eig.eigenvectors;
    let d = DMatrix::<Complex64>::from_diagonal(&clipped.map(|v| c(v * scale)));
    let mut out = u * d * u.adjoint();
    symmetrize(&mut out);
    PsdProjection {
        matrix: out,
        min_eigenvalue: min_ev,
        repaired: true,
    }
}

/// Returns `L` with `L L^H = a` for a Hermitian PSD `a`, built from the
/// eigendecomposition so that rank-deficient matrices are handled.
pub fn psd_factor(a: &CMat) -> CMat {
    let eig = SymmetricEigen::new(a.clone());
    let mut u = eig.eigenvectors;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        u.column_mut(j).scale_mut(s);
    }
    u
}

/// Hermitian positive-definite factorization with a diagonal-jitter fallback.
pub struct HermitianSolver {
    chol: Cholesky<Complex64, Dyn>,
    pub jitter: f64,
}

impl HermitianSolver {
    pub fn new(a: &CMat) -> Option<Self> {
        if let Some(chol) = Cholesky::new(a.clone()) {
            return Some(Self { chol, jitter: 0.0 });
        }
        let scale = trace_re(a).abs() / a.nrows().max(1) as f64;
        let mut jitter = 1e-14 * scale.max(f64::MIN_POSITIVE);
        for _ in 0..8 {
            let mut b = a.clone();
            for i in 0..b.nrows() {
                b[(i, i)] += c(jitter);
            }
            if let Some(chol) = Cholesky::new(b) {
                return Some(Self { chol, jitter });
            }
            jitter *= 100.0;
        }
        None
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &CVec) -> CVec {
        self.chol.solve(b)
    }
}

/// 2-norm condition number of a Hermitian PD matrix.
pub fn hermitian_condition(a: &CMat) -> f64 {
    let ev = hermitian_eigenvalues(a);
    let lo = ev.first().copied().unwrap_or(0.0);
    let hi = ev.last().copied().unwrap_or(0.0);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a - b‖_F / ‖b‖_F`.
pub fn rel_frobenius(a: &CMat, b: &CMat) -> f64 {
    frobenius(&(a - b)) / frobenius(b)
}
