//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here calls the solvers under test.

#![allow(dead_code)]

use adcbits::gp::{GpProblem, Monomial, Posynomial};
use adcbits::network::{self, ChannelCase, NetworkConfig, NetworkRealization};
use nalgebra::{DMatrix, DVector};
use std::ops::AddAssign;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small random network: M in [2, max_m], K in [1, max_k], any case.
pub fn random_network(seed: u64, max_m: usize, max_k: usize) -> (NetworkConfig, NetworkRealization) {
    let mut r = rng(seed ^ 0xA11CE);
    let m = r.random_range(2..=max_m);
    let k = r.random_range(1..=max_k);
    let case = ChannelCase::ALL[r.random_range(0..4)];
    random_network_case(seed, m, k, case)
}

/// Network of a fixed size and case.
pub fn random_network_case(seed: u64, m: usize, k: usize, case: ChannelCase) -> (NetworkConfig, NetworkRealization) {
    let cfg = NetworkConfig::default().with_size(m, k).with_case(case);
    let net = network::drop_network(&cfg, seed).expect("drop");
    (cfg, net)
}

/// Log-barrier Newton solve of
/// `min Σ p_m ε_m²  s.t.  Σ log₂(ζ_m/ε_m) ≤ b_tot` in `u = ln ε`.
/// Returns ε.
pub fn pilot_distortion_barrier(p_u: &[f64], zeta: &[f64], b_tot: f64) -> Vec<f64> {
    let m = p_u.len();
    let scale = p_u.iter().cloned().fold(0.0, f64::max);
    let p: Vec<f64> = p_u.iter().map(|v| v / scale).collect();
    let c0 = b_tot * std::f64::consts::LN_2 - zeta.iter().map(|z| z.ln()).sum::<f64>();
    // Slack of the budget: s(u) = c0 + Σ u > 0.
    let slack = |u: &DVector<f64>| c0 + u.sum();
    let f = |u: &DVector<f64>| (0..m).map(|i| p[i] * (2.0 * u[i]).exp()).sum::<f64>();
    let mut u = DVector::from_element(m, (1.0 - c0) / m as f64);
    let mut t = 1.0;
    loop {
        for _ in 0..200 {
            let s = slack(&u);
            let g = DVector::from_fn(m, |i, _| t * 2.0 * p[i] * (2.0 * u[i]).exp() - 1.0 / s);
            let h = DMatrix::from_fn(m, m, |i, j| {
                let d = if i == j { t * 4.0 * p[i] * (2.0 * u[i]).exp() } else { 0.0 };
                d + 1.0 / (s * s)
            });
            let du = -h.cholesky().expect("barrier Hessian is PD").solve(&g);
            let dec = -g.dot(&du);
            if dec < 1e-22 {
                break;
            }
            let phi = |u: &DVector<f64>| t * f(u) - slack(u).ln();
            let f0 = phi(&u);
            let mut step = 1.0;
            loop {
                let cand = &u + &du * step;
                if slack(&cand) > 0.0 && phi(&cand) <= f0 - 0.25 * step * dec {
                    u = cand;
                    break;
                }
                step *= 0.5;
                if step < 1e-16 {
                    break;
                }
            }
            if step < 1e-16 {
                break;
            }
        }
        // One constraint: duality gap 1/t.
        if 1.0 / t < 1e-13 * f(&u) {
            break;
        }
        t *= 8.0;
    }
    u.iter().map(|v| v.exp()).collect()
}

/// Brute-force maximisation of a GP over a zooming log-grid (n ≤ 3).
/// Returns the best feasible objective found.
pub fn zoom_grid(problem: &GpProblem, center: &[f64], half_width: f64) -> f64 {
    let n = problem.n_vars();
    assert!(n <= 3, "grid oracle is for n ≤ 3");
    let pts = 41usize;
    let feasible = |x: &[f64]| {
        problem.inequalities.iter().all(|g| g.eval(x) <= 1.0)
            && problem
                .upper_bounds
                .iter()
                .zip(x)
                .all(|(u, v)| u.is_none_or(|u| *v <= u))
    };
    let mut c: Vec<f64> = center.iter().map(|v| v.ln()).collect();
    let mut w = half_width;
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; n];
    while w > 1e-11 {
        let mut best_y = c.clone();
        let total = pts.pow(n as u32);
        for flat in 0..total {
            let mut r = flat;
            for d in idx.iter_mut() {
                *d = r % pts;
                r /= pts;
            }
            let y: Vec<f64> = (0..n).map(|d| c[d] - w + 2.0 * w * idx[d] as f64 / (pts - 1) as f64).collect();
            let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
            if feasible(&x) {
                let v = problem.objective.eval(&x);
                if v > best {
                    best = v;
                    best_y = y;
                }
            }
        }
        // An incumbent that moved far may still be sliding along a ridge
        // towards an optimum outside the window; recentre at the same width.
        let on_edge = best_y.iter().zip(&c).any(|(a, b)| (a - b).abs() > 0.25 * w);
        c = best_y;
        if !on_edge {
            w *= 0.5;
        }
    }
    best
}

/// Random GP with a known optimum, built from the KKT conditions.
///
/// A point `y*` is drawn, `n + 1` posynomial constraints are scaled to be
/// active there, two more are made slack, and the objective exponent is set
/// to `Σ λ_i ∇ log g_i(y*)` with random `λ > 0`. For this convex problem
/// KKT is sufficient, so `exp(c·y*)` times the objective coefficient is the
/// optimum.
pub struct PlantedGp {
    pub problem: GpProblem,
    pub x_star: Vec<f64>,
    pub optimum: f64,
}

pub fn planted_gp(n: usize, seed: u64) -> PlantedGp {
    let mut r = rng(seed);
    let y_star: Vec<f64> = (0..n).map(|_| r.random_range(-1.5..1.5)).collect();
    let x_star: Vec<f64> = y_star.iter().map(|v| v.exp()).collect();
    // Active gradients are kept in the open half-space {d : d·w > 0}, so
    // moving along -w is strictly feasible and the interior is nonempty.
    let w: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let w_norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let mut ineq = Vec::new();
    let mut grad_sum = vec![0.0; n];
    let n_active = n + 1;
    let mut i = 0;
    while i < n_active + 2 {
        let n_terms = r.random_range(1..=3);
        let mut terms = Vec::new();
        for _ in 0..n_terms {
            let mut exps = Vec::new();
            for j in 0..n {
                if r.random_bool(0.6) {
                    exps.push((j, r.random_range(-2.0..2.0)));
                }
            }
            terms.push(Monomial::new(r.random_range(0.2..3.0), &exps));
        }
        let mut g = Posynomial::new(terms);
        let target = if i < n_active { 1.0 } else { 0.5 };
        let s = target / g.eval(&x_star);
        g = g.scale(&Monomial::constant(s));
        if i < n_active {
            // ∇_y log g = Σ_t w_t a_t with weights w_t = term_t / g.
            let total = g.eval(&x_star);
            let mut grad = vec![0.0; n];
            for t in &g.terms {
                let wt = t.eval(&x_star) / total;
                for &(j, a) in &t.exps {
                    grad[j] += wt * a;
                }
            }
            let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = grad.iter().zip(&w).map(|(a, b)| a * b).sum();
            if dot < 0.2 * norm * w_norm || norm < 1e-3 {
                continue;
            }
            let lambda = r.random_range(0.2..2.0);
            for j in 0..n {
                grad_sum[j] += lambda * grad[j];
            }
        }
        ineq.push(g);
        i += 1;
    }
    let exps: Vec<(usize, f64)> = grad_sum.iter().enumerate().map(|(j, &a)| (j, a)).collect();
    let objective = Monomial::new(1.0, &exps);
    let optimum = objective.eval(&x_star);
    let mut problem = GpProblem::new((0..n).map(|j| format!("x{j}")).collect(), objective);
    problem.inequalities = ineq;
    PlantedGp { problem, x_star, optimum }
}

/// Random feasible GP in ≤ 3 variables with bounded feasible set.
pub fn random_small_gp(n: usize, seed: u64) -> GpProblem {
    let mut r = rng(seed);
    let objective = Monomial::new(
        r.random_range(0.5..2.0),
        &(0..n).map(|j| (j, r.random_range(0.2..1.5))).collect::<Vec<_>>(),
    );
    let mut p = GpProblem::new((0..n).map(|j| format!("v{j}")).collect(), objective);
    for _ in 0..r.random_range(1..=3) {
        let terms = (0..r.random_range(1..=3))
            .map(|_| {
                let e: Vec<(usize, f64)> = (0..n).map(|j| (j, r.random_range(-1.0..2.0))).collect();
                Monomial::new(r.random_range(0.1..1.0), &e)
            })
            .collect();
        p.inequalities.push(Posynomial::new(terms));
    }
    // A sum of all variables keeps the problem bounded; x = 1 is interior.
    let g = 1.0 + p.inequalities.iter().map(|g| g.eval(&vec![1.0; n])).fold(0.0, f64::max);
    for q in p.inequalities.iter_mut() {
        *q = q.scale(&Monomial::constant(1.0 / g));
    }
    p.inequalities
        .push(Posynomial::new((0..n).map(|j| Monomial::new(1.0 / (4.0 * n as f64), &[(j, 1.0)])).collect()));
    p
}

/// Composite Simpson integral of `f` over `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gaussian MSE of a scalar quantizer by piecewise Simpson integration
/// between thresholds, tails cut at ±12.
pub fn quantizer_mse_simpson(q: impl Fn(f64) -> f64, thresholds: &[f64]) -> f64 {
    let mut edges = vec![-12.0];
    edges.extend(thresholds.iter().copied().filter(|t| t.abs() < 12.0));
    edges.push(12.0);
    edges
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let level = q(mid);
            let panels = ((w[1] - w[0]) * 20_000.0).ceil().max(200.0) as usize;
            simpson(|x| (x - level).powi(2) * std_normal_pdf(x), w[0], w[1], panels)
        })
        .sum()
}

/// Distribution-free 95% confidence half-width of a sample median, from the
/// binomial order-statistic ranks `n/2 ± 1.96·√n/2`.
pub fn median_band(samples: &[f64]) -> (f64, f64) {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    let med = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
    let half = 1.96 * (n as f64).sqrt() / 2.0;
    let lo = ((n as f64 / 2.0 - half).floor().max(0.0)) as usize;
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).min(n - 1);
    (med, 0.5 * (s[hi] - s[lo]))
}

/// `log g(y)` with gradient and Hessian for a posynomial `g`.
fn log_posy(g: &Posynomial, y: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = y.len();
    let logs: Vec<f64> = g
        .terms
        .iter()
        .map(|t| t.coef.ln() + t.exps.iter().map(|&(i, e)| e * y[i]).sum::<f64>())
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut grad = DVector::zeros(n);
    let mut second = DMatrix::zeros(n, n);
    for (t, wt) in g.terms.iter().zip(&w) {
        let mut a = DVector::zeros(n);
        for &(i, e) in &t.exps {
            a[i] += e;
        }
        grad += &a * (wt / total);
        second += &a * a.transpose() * (wt / total);
    }
    let hess = second - &grad * grad.transpose();
    (top + total.ln(), grad, hess)
}

/// Exact optimum of a small GP without equalities by active-set enumeration.
///
/// Every subset `S` of at most `n` inequality and bound constraints is tried
/// as the active set: the KKT system `c = Σ_S λ_i ∇h_i`, `h_i = 0` (with
/// `h = log g`) is solved by damped Newton from several starts, and the best
/// feasible solution with `λ ≥ 0` is kept. Returns `(objective, x)`.
pub fn active_set_oracle(problem: &GpProblem, seed: u64) -> (f64, Vec<f64>) {
    assert!(problem.equalities.is_empty());
    let n = problem.n_vars();
    let mut cons: Vec<Posynomial> = problem.inequalities.clone();
    for (i, u) in problem.upper_bounds.iter().enumerate() {
        if let Some(u) = u {
            cons.push(Posynomial::new(vec![Monomial::new(1.0 / u, &[(i, 1.0)])]));
        }
    }
    let m = cons.len();
    assert!(m <= 16);
    let mut c = DVector::zeros(n);
    for &(i, e) in &problem.objective.exps {
        c[i] += e;
    }
    let mut r = rng(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let set: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        if set.len() > n {
            continue;
        }
        let k = set.len();
        for _ in 0..12 {
            let mut y = DVector::from_fn(n, |_, _| r.random_range(-3.0..3.0));
            let mut lam = DVector::from_element(k, 1.0);
            let residual = |y: &DVector<f64>, lam: &DVector<f64>| {
                let mut f = DVector::zeros(n + k);
                let mut stat = c.clone();
                let mut jac = DMatrix::zeros(n + k, n + k);
                for (j, &i) in set.iter().enumerate() {
                    let (h, g, hh) = log_posy(&cons[i], y.as_slice());
                    stat -= &g * lam[j];
                    f[n + j] = h;
                    jac.view_mut((0, 0), (n, n)).add_assign(&(&hh * -lam[j]));
                    jac.view_mut((0, n + j), (n, 1)).copy_from(&(-&g));
                    jac.view_mut((n + j, 0), (1, n)).copy_from(&g.transpose());
                }
                f.rows_mut(0, n).copy_from(&stat);
                (f, jac)
            };
            let mut ok = false;
            for _ in 0..100 {
                let (f, jac) = residual(&y, &lam);
                let norm = f.norm();
                if !norm.is_finite() {
                    break;
                }
                if norm < 1e-13 {
                    ok = true;
                    break;
                }
                let Some(step) = jac.lu().solve(&(-&f)) else { break };
                let mut a = 1.0;
                let mut moved = false;
                while a > 1e-10 {
                    let y2 = &y + step.rows(0, n) * a;
                    let l2 = &lam + step.rows(n, k) * a;
                    if residual(&y2, &l2).0.norm() < (1.0 - 1e-4 * a) * norm {
                        y = y2;
                        lam = l2;
                        moved = true;
                        break;
                    }
                    a *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            if !ok || lam.iter().any(|&l| l < -1e-10) {
                continue;
            }
            let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
            if cons.iter().any(|g| g.eval(&x) > 1.0 + 1e-11) {
                continue;
            }
            let v = problem.objective.eval(&x);
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, x));
            }
            break;
        }
    }
    best.expect("no KKT point found")
}
