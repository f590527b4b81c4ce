//! Geometric programming in log variables.
//!
//! A problem maximizes a monomial subject to posynomial `≤ 1` constraints,
//! monomial `= 1` constraints and per-variable upper bounds. With `y = log x`
//! every posynomial constraint becomes a log-sum-exp function `≤ 0`, the
//! objective becomes linear and the equalities linear; the result is solved
//! with a log-barrier interior-point method.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// `c · Π_i x_i^{a_i}` with sparse exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    /// `(variable index, exponent)`, sorted by index, no zero exponents.
    pub exps: Vec<(usize, f64)>,
}

impl Monomial {
    pub fn new(coef: f64, exps: &[(usize, f64)]) -> Self {
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for &(i, e) in exps {
            *map.entry(i).or_insert(0.0) += e;
        }
        Self {
            coef,
            exps: map.into_iter().filter(|&(_, e)| e != 0.0).collect(),
        }
    }

    pub fn constant(coef: f64) -> Self {
        Self { coef, exps: Vec::new() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exps.iter().fold(self.coef, |acc, &(i, e)| acc * x[i].powf(e))
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        let mut all = self.exps.clone();
        all.extend_from_slice(&o.exps);
        Monomial::new(self.coef * o.coef, &all)
    }

    pub fn inv(&self) -> Monomial {
        Monomial {
            coef: 1.0 / self.coef,
            exps: self.exps.iter().map(|&(i, e)| (i, -e)).collect(),
        }
    }
}

/// Sum of monomials with positive coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Posynomial {
    pub terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn push(&mut self, m: Monomial) {
        self.terms.push(m);
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Multiplies every term by `m`.
    pub fn scale(&self, m: &Monomial) -> Posynomial {
        Posynomial::new(self.terms.iter().map(|t| t.mul(m)).collect())
    }

    /// Merges terms with identical exponent vectors and drops zero terms.
    pub fn simplify(&mut self) {
        let mut map: BTreeMap<Vec<(usize, u64)>, (f64, Vec<(usize, f64)>)> = BTreeMap::new();
        for t in self.terms.drain(..) {
            let key = t.exps.iter().map(|&(i, e)| (i, e.to_bits())).collect();
            map.entry(key).or_insert((0.0, t.exps)).0 += t.coef;
        }
        self.terms = map
            .into_values()
            .filter(|(c, _)| *c > 0.0)
            .map(|(coef, exps)| Monomial { coef, exps })
            .collect();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpProblem {
    pub names: Vec<String>,
    /// Monomial to maximize.
    pub objective: Monomial,
    /// Posynomial constraints `f(x) ≤ 1`.
    pub inequalities: Vec<Posynomial>,
    /// Monomial constraints `g(x) = 1`.
    pub equalities: Vec<Monomial>,
    /// Optional `x_i ≤ u_i`.
    pub upper_bounds: Vec<Option<f64>>,
    /// Optional starting point; used directly when strictly feasible.
    pub initial: Option<Vec<f64>>,
}

impl GpProblem {
    pub fn new(names: Vec<String>, objective: Monomial) -> Self {
        let n = names.len();
        Self {
            names,
            objective,
            inequalities: Vec::new(),
            equalities: Vec::new(),
            upper_bounds: vec![None; n],
            initial: None,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let check = |m: &Monomial, what: &str| -> Result<()> {
            if !(m.coef > 0.0 && m.coef.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what}: coefficient {} is not positive", m.coef)));
            }
            if let Some(&(i, e)) = m.exps.iter().find(|&&(i, e)| i >= n || !e.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what}: bad exponent {e} on variable {i}")));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (c, p) in self.inequalities.iter().enumerate() {
            if p.terms.is_empty() {
                return Err(Error::InvalidArgument(format!("inequality {c} has no terms")));
            }
            for t in &p.terms {
                check(t, &format!("inequality {c}"))?;
            }
        }
        for (c, m) in self.equalities.iter().enumerate() {
            check(m, &format!("equality {c}"))?;
        }
        if self.upper_bounds.len() != n {
            return Err(Error::InvalidArgument("upper_bounds length differs from variable count".into()));
        }
        if let Some(u) = self.upper_bounds.iter().flatten().find(|u| !(**u > 0.0)) {
            return Err(Error::InvalidArgument(format!("upper bound {u} is not positive")));
        }
        Ok(())
    }

    /// Largest value of any inequality or bound constraint at `x` (≤ 1 when
    /// feasible) and the largest `|log g(x)|` over equalities.
    pub fn max_violation(&self, x: &[f64]) -> (f64, f64) {
        let mut ineq = self.inequalities.iter().map(|p| p.eval(x)).fold(0.0, f64::max);
        for (i, u) in self.upper_bounds.iter().enumerate() {
            if let Some(u) = u {
                ineq = ineq.max(x[i] / u);
            }
        }
        let eq = self.equalities.iter().map(|m| m.eval(x).ln().abs()).fold(0.0, f64::max);
        (ineq, eq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct GpSolution {
    pub x: Vec<f64>,
    /// Objective monomial at `x`.
    pub objective: f64,
    pub kkt_residual: f64,
    /// Newton steps over both phases.
    pub iterations: usize,
    pub status: GpStatus,
    /// Log objective after every outer barrier iteration.
    pub history: Vec<f64>,
    /// Multiplier estimates for the inequalities, then the upper bounds.
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct GpOptions {
    /// Relative duality-gap target.
    pub tol: f64,
    /// Newton-step budget.
    pub max_iter: usize,
    /// Barrier growth factor.
    pub mu: f64,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 2000,
            mu: 10.0,
        }
    }
}

/// Log-sum-exp constraint `log Σ_j exp(b_j + a_j·y) ≤ 0`.
struct LseRow {
    log_coef: Vec<f64>,
    exps: Vec<Vec<(usize, f64)>>,
}

impl LseRow {
    fn from_posy(p: &Posynomial) -> Self {
        Self {
            log_coef: p.terms.iter().map(|t| t.coef.ln()).collect(),
            exps: p.terms.iter().map(|t| t.exps.clone()).collect(),
        }
    }

    fn value(&self, y: &[f64]) -> f64 {
        let mut vals: Vec<f64> = Vec::with_capacity(self.log_coef.len());
        for (b, a) in self.log_coef.iter().zip(&self.exps) {
            vals.push(b + a.iter().map(|&(i, e)| e * y[i]).sum::<f64>());
        }
        lse(&vals)
    }

    /// Value, gradient and Hessian in y, accumulated with weights into the
    /// barrier derivatives: adds `wg·∇g + wh·∇²g + wgg·∇g∇gᵀ`.
    fn value_grad(&self, y: &[f64], grad: &mut DVector<f64>) -> (f64, Vec<f64>) {
        let mut vals: Vec<f64> = self
            .log_coef
            .iter()
            .zip(&self.exps)
            .map(|(b, a)| b + a.iter().map(|&(i, e)| e * y[i]).sum::<f64>())
            .collect();
        let v = lse(&vals);
        for w in vals.iter_mut() {
            *w = (*w - v).exp();
        }
        grad.fill(0.0);
        for (w, a) in vals.iter().zip(&self.exps) {
            for &(i, e) in a {
                grad[i] += w * e;
            }
        }
        (v, vals)
    }

    fn add_hessian(&self, weights: &[f64], grad: &DVector<f64>, scale: f64, h: &mut DMatrix<f64>) {
        // Σ w_j a_j a_jᵀ − ∇g ∇gᵀ
        for (w, a) in weights.iter().zip(&self.exps) {
            let sw = scale * w;
            for &(i, ei) in a {
                for &(j, ej) in a {
                    h[(i, j)] += sw * ei * ej;
                }
            }
        }
        let nz: Vec<usize> = (0..grad.len()).filter(|&i| grad[i] != 0.0).collect();
        for &i in &nz {
            for &j in &nz {
                h[(i, j)] -= scale * grad[i] * grad[j];
            }
        }
    }
}

fn lse(vals: &[f64]) -> f64 {
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Problem in reduced coordinates `y = y0 + N z`.
struct Reduced {
    n: usize,
    rows: Vec<LseRow>,
    /// Objective to minimize is `−cᵀy`.
    c: DVector<f64>,
    y0: DVector<f64>,
    basis: Option<DMatrix<f64>>,
}

impl Reduced {
    fn dim(&self) -> usize {
        self.basis.as_ref().map_or(self.n, |b| b.ncols())
    }

    fn lift(&self, z: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(b) => &self.y0 + b * z,
            None => &self.y0 + z,
        }
    }

    fn project_vec(&self, g: DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(b) => b.transpose() * g,
            None => g,
        }
    }

    fn project_mat(&self, h: DMatrix<f64>) -> DMatrix<f64> {
        match &self.basis {
            Some(b) => b.transpose() * h * b,
            None => h,
        }
    }

    fn constraint_values(&self, y: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.value(y)).collect()
    }
}

struct Barrier<'a> {
    red: &'a Reduced,
    /// Phase-1 slack: constraints become `g_i(y) − s ≤ 0` plus `−1 − s ≤ 0`.
    phase1: bool,
    /// Phase-1 proximal anchor. Without it the barrier can be flat along
    /// recession directions of the feasible set and Newton walks off.
    anchor: Option<DVector<f64>>,
}

const PHASE1_PROX: f64 = 1e-3;

impl Barrier<'_> {
    fn split<'v>(&self, v: &'v DVector<f64>) -> (DVector<f64>, f64) {
        if self.phase1 {
            let d = self.red.dim();
            (v.rows(0, d).into_owned(), v[d])
        } else {
            (v.clone(), 0.0)
        }
    }

    fn objective(&self, v: &DVector<f64>) -> f64 {
        let (z, s) = self.split(v);
        if self.phase1 {
            s
        } else {
            -self.red.c.dot(&self.red.lift(&z))
        }
    }

    /// Slacks `−(g_i − s)`; all must be positive.
    fn slacks(&self, v: &DVector<f64>) -> Vec<f64> {
        let (z, s) = self.split(v);
        let y = self.red.lift(&z);
        let mut out: Vec<f64> = self.red.constraint_values(y.as_slice()).iter().map(|g| s - g).collect();
        if self.phase1 {
            out.push(1.0 + s);
        }
        out
    }

    fn value(&self, t: f64, v: &DVector<f64>) -> f64 {
        let sl = self.slacks(v);
        if sl.iter().any(|&x| !(x > 0.0)) {
            return f64::INFINITY;
        }
        let prox = match &self.anchor {
            Some(a) => 0.5 * PHASE1_PROX * (v.rows(0, a.len()) - a).norm_squared(),
            None => 0.0,
        };
        t * self.objective(v) - sl.iter().map(|x| x.ln()).sum::<f64>() + prox
    }

    fn grad_hess(&self, t: f64, v: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>, Vec<f64>) {
        let red = self.red;
        let n = red.n;
        let (z, s) = self.split(v);
        let y = red.lift(&z);
        let mut gy = if self.phase1 { DVector::zeros(n) } else { -&red.c * t };
        let mut hy = DMatrix::zeros(n, n);
        let mut gs = 0.0;
        let mut hs = 0.0;
        let mut hys = DVector::zeros(n);
        let mut row_grad = DVector::zeros(n);
        let mut slacks = Vec::with_capacity(red.rows.len() + 1);
        for row in &red.rows {
            let (g, w) = row.value_grad(y.as_slice(), &mut row_grad);
            let sl = s - g;
            slacks.push(sl);
            // −log(s − g): ∇_y = ∇g/sl, ∇_s = −1/sl
            gy += &row_grad / sl;
            row.add_hessian(&w, &row_grad, 1.0 / sl, &mut hy);
            hy.ger(1.0 / (sl * sl), &row_grad, &row_grad, 1.0);
            if self.phase1 {
                gs -= 1.0 / sl;
                hs += 1.0 / (sl * sl);
                hys -= &row_grad / (sl * sl);
            }
        }
        let mut gz = red.project_vec(gy);
        let mut hz = red.project_mat(hy);
        if !self.phase1 {
            return (gz, hz, slacks);
        }
        if let Some(a) = &self.anchor {
            gz += (&z - a) * PHASE1_PROX;
            for i in 0..a.len() {
                hz[(i, i)] += PHASE1_PROX;
            }
        }
        // Objective s and the floor barrier −log(1 + s).
        gs += t - 1.0 / (1.0 + s);
        hs += 1.0 / ((1.0 + s) * (1.0 + s));
        slacks.push(1.0 + s);
        let hzs = red.project_vec(hys);
        let d = red.dim();
        let mut g = DVector::zeros(d + 1);
        g.rows_mut(0, d).copy_from(&gz);
        g[d] = gs;
        let mut h = DMatrix::zeros(d + 1, d + 1);
        h.view_mut((0, 0), (d, d)).copy_from(&hz);
        h.view_mut((0, d), (d, 1)).copy_from(&hzs);
        h.view_mut((d, 0), (1, d)).copy_from(&hzs.transpose());
        h[(d, d)] = hs;
        (g, h, slacks)
    }
}

fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> DVector<f64> {
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += reg;
        }
        if let Some(ch) = hr.cholesky() {
            return -ch.solve(g);
        }
        reg = if reg == 0.0 { 1e-12 * scale } else { reg * 100.0 };
    }
    -g.clone()
}

struct CenterResult {
    steps: usize,
    converged: bool,
}

/// Damped Newton centering of `t·f0 + φ`.
const MAX_CENTERING_STEPS: usize = 200;

fn center(
    bar: &Barrier<'_>,
    t: f64,
    v: &mut DVector<f64>,
    budget: usize,
    stop_when_feasible: bool,
) -> CenterResult {
    let mut steps = 0;
    let mut prev_decrement = f64::INFINITY;
    while steps < budget.min(MAX_CENTERING_STEPS) {
        if stop_when_feasible && v[v.len() - 1] < 0.0 {
            return CenterResult { steps, converged: true };
        }
        let (g, h, _) = bar.grad_hess(t, v);
        let dv = newton_direction(&g, &h);
        let decrement = -g.dot(&dv);
        // Below ~1e-8 the decrement is dominated by rounding once it stops
        // shrinking quadratically.
        if decrement / 2.0 <= 1e-20 || (prev_decrement < 1e-8 && decrement >= 0.5 * prev_decrement) {
            return CenterResult { steps, converged: true };
        }
        prev_decrement = decrement;
        steps += 1;
        // In phase one a strictly feasible point is all that is needed. On an
        // unbounded feasible cone the slack has no minimum, so the step is cut
        // where it reaches -1 instead of running off towards infinity.
        let last = v.len() - 1;
        let max_step = if stop_when_feasible && dv[last] < 0.0 {
            ((v[last] + 1.0) / -dv[last]).min(1.0)
        } else {
            1.0
        };
        let dv = dv * max_step;
        // Close to the center the barrier value cannot resolve the remaining
        // decrease, so full Newton steps are taken while they stay interior.
        if decrement < 0.1 {
            let cand = &*v + &dv;
            if bar.value(t, &cand).is_finite() {
                *v = cand;
                continue;
            }
        }
        let f = bar.value(t, v);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..80 {
            let cand = &*v + &dv * step;
            let fc = bar.value(t, &cand);
            if fc.is_finite() && fc < f && fc <= f - 0.01 * step * decrement {
                *v = cand;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return CenterResult { steps, converged: true };
        }
    }
    CenterResult { steps, converged: false }
}

/// Null space of the equality system and a particular solution.
fn reduce(problem: &GpProblem) -> Result<Reduced> {
    let n = problem.n_vars();
    let mut rows: Vec<LseRow> = problem.inequalities.iter().map(LseRow::from_posy).collect();
    for (i, u) in problem.upper_bounds.iter().enumerate() {
        if let Some(u) = u {
            rows.push(LseRow::from_posy(&Posynomial::new(vec![Monomial::new(1.0 / u, &[(i, 1.0)])])));
        }
    }
    let mut c = DVector::zeros(n);
    for &(i, e) in &problem.objective.exps {
        c[i] = e;
    }
    if problem.equalities.is_empty() {
        return Ok(Reduced {
            n,
            rows,
            c,
            y0: DVector::zeros(n),
            basis: None,
        });
    }
    let p = problem.equalities.len();
    let mut a = DMatrix::zeros(p, n);
    let mut rhs = DVector::zeros(p);
    for (r, m) in problem.equalities.iter().enumerate() {
        for &(i, e) in &m.exps {
            a[(r, i)] = e;
        }
        rhs[r] = -m.coef.ln();
    }
    let gram = a.transpose() * &a;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let null: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= 1e-12 * top.max(1.0)).collect();
    let basis = DMatrix::from_fn(n, null.len(), |r, j| eig.eigenvectors[(r, null[j])]);
    let y0 = a
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("equality system: {e}")))?;
    if (&a * &y0 - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
        return Err(Error::Infeasible("monomial equalities are inconsistent".into()));
    }
    Ok(Reduced {
        n,
        rows,
        c,
        y0,
        basis: Some(basis),
    })
}

fn finish(
    problem: &GpProblem,
    red: &Reduced,
    z: &DVector<f64>,
    t: f64,
    iterations: usize,
    status: GpStatus,
    history: Vec<f64>,
) -> GpSolution {
    let y = red.lift(z);
    let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    let g = red.constraint_values(y.as_slice());
    let mut duals: Vec<f64> = g.iter().map(|gi| 1.0 / (t * -gi)).collect();
    let grads: Vec<DVector<f64>> = red
        .rows
        .iter()
        .map(|row| {
            let mut rg = DVector::zeros(red.n);
            row.value_grad(y.as_slice(), &mut rg);
            red.project_vec(rg)
        })
        .collect();
    let c_red = red.project_vec(red.c.clone());
    let stationarity_of = |lam: &[f64]| {
        let mut r = -&c_red;
        for (gr, l) in grads.iter().zip(lam) {
            r += gr * *l;
        }
        r.norm() / (1.0 + c_red.norm())
    };
    // Barrier multipliers lose precision as the slacks shrink; correct the
    // active ones by the smallest change that restores stationarity. With
    // more active constraints than dimensions the multipliers are not unique
    // and this keeps the one nearest the barrier estimate.
    let top = duals.iter().cloned().fold(0.0, f64::max);
    let active: Vec<usize> = (0..duals.len()).filter(|&i| duals[i] >= 1e-3 * top).collect();
    if !active.is_empty() && c_red.len() > 0 {
        let mut resid = c_red.clone();
        for (gr, l) in grads.iter().zip(&duals) {
            resid -= gr * *l;
        }
        let jac = DMatrix::from_fn(c_red.len(), active.len(), |r, j| grads[active[j]][r]);
        if let Ok(delta) = jac.svd(true, true).solve(&resid, 1e-14) {
            let mut refined = duals.clone();
            for (j, &i) in active.iter().enumerate() {
                refined[i] += delta[j];
            }
            let lam: Vec<f64> = active.iter().map(|&i| refined[i]).collect();
            if lam.iter().all(|&l| l >= 0.0) && stationarity_of(&refined) < stationarity_of(&duals) {
                duals = refined;
            }
        }
    }
    let stationarity = stationarity_of(&duals);
    let gap = duals.iter().zip(&g).map(|(l, gi)| l * -gi).sum::<f64>();
    GpSolution {
        objective: problem.objective.eval(&x),
        x,
        kkt_residual: stationarity.max(gap),
        iterations,
        status,
        history,
        duals,
    }
}

/// Solves `problem` with a log-barrier interior-point method.
pub fn solve_gp(problem: &GpProblem, opts: &GpOptions) -> Result<GpSolution> {
    problem.validate()?;
    let red = reduce(problem)?;
    let d = red.dim();
    let mut iterations = 0;

    // Starting point in reduced coordinates.
    let mut z = match (&problem.initial, &red.basis) {
        (Some(x0), basis) => {
            let y = DVector::from_iterator(red.n, x0.iter().map(|v| v.ln()));
            match basis {
                Some(b) => b.transpose() * (y - &red.y0),
                None => y,
            }
        }
        (None, _) => DVector::zeros(d),
    };
    let feasible = |z: &DVector<f64>| {
        let y = red.lift(z);
        red.constraint_values(y.as_slice()).iter().all(|&g| g < 0.0)
    };
    if !feasible(&z) {
        let bar = Barrier {
            red: &red,
            phase1: true,
            anchor: Some(z.clone()),
        };
        let y = red.lift(&z);
        let worst = red.constraint_values(y.as_slice()).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let mut v = DVector::zeros(d + 1);
        v.rows_mut(0, d).copy_from(&z);
        v[d] = worst.max(0.0) + 1.0;
        let mut t = 1.0;
        loop {
            let r = center(&bar, t, &mut v, opts.max_iter - iterations, true);
            iterations += r.steps;
            if v[d] < 0.0 {
                break;
            }
            let gap = (red.rows.len() + 1) as f64 / t;
            if iterations >= opts.max_iter || (r.converged && gap < 1e-10) {
                let zz = v.rows(0, d).into_owned();
                return Ok(finish(problem, &red, &zz, t, iterations, GpStatus::Infeasible, Vec::new()));
            }
            t *= opts.mu;
        }
        z = v.rows(0, d).into_owned();
        if !feasible(&z) {
            return Ok(finish(problem, &red, &z, 1.0, iterations, GpStatus::Infeasible, Vec::new()));
        }
    }

    let bar = Barrier {
        red: &red,
        phase1: false,
        anchor: None,
    };
    let m = red.rows.len().max(1) as f64;
    // Balance objective and barrier gradients for the first centering.
    let (g_bar, _, _) = bar.grad_hess(0.0, &z);
    let g_obj = red.project_vec(red.c.clone()).norm();
    let mut t = if g_obj > 0.0 {
        (g_bar.norm() / g_obj).clamp(1e-3, 1e6)
    } else {
        1.0
    };
    let mut history = Vec::new();
    loop {
        let r = center(&bar, t, &mut z, opts.max_iter.saturating_sub(iterations), false);
        iterations += r.steps;
        history.push(red.c.dot(&red.lift(&z)) + problem.objective.coef.ln());
        if !r.converged || iterations >= opts.max_iter {
            break;
        }
        if m / t < opts.tol {
            break;
        }
        // The last increase only needs to reach the target gap; overshooting
        // pushes the centering past what f64 can resolve.
        t = (t * opts.mu).min(1.01 * m / opts.tol);
    }
    let sol = finish(problem, &red, &z, t, iterations, GpStatus::Optimal, history);
    let status = if sol.kkt_residual < opts.tol {
        GpStatus::Optimal
    } else {
        GpStatus::MaxIter
    };
    Ok(GpSolution { status, ..sol })
}

/// Plain-text term-list format:
///
/// ```text
/// vars x y
/// max 1 x^1 y^1
/// le 0.5 x^2 + 0.5 y^2
/// eq 2 x^1 y^-1
/// ub x 2.5
/// init 1 1
/// ```
impl fmt::Display for GpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mono = |m: &Monomial| {
            let mut s = format!("{:?}", m.coef);
            for &(i, e) in &m.exps {
                let _ = write!(s, " {}^{:?}", self.names[i], e);
            }
            s
        };
        writeln!(f, "vars {}", self.names.join(" "))?;
        writeln!(f, "max {}", mono(&self.objective))?;
        for p in &self.inequalities {
            let terms: Vec<String> = p.terms.iter().map(mono).collect();
            writeln!(f, "le {}", terms.join(" + "))?;
        }
        for m in &self.equalities {
            writeln!(f, "eq {}", mono(m))?;
        }
        for (i, u) in self.upper_bounds.iter().enumerate() {
            if let Some(u) = u {
                writeln!(f, "ub {} {:?}", self.names[i], u)?;
            }
        }
        if let Some(x0) = &self.initial {
            let vals: Vec<String> = x0.iter().map(|v| format!("{v:?}")).collect();
            writeln!(f, "init {}", vals.join(" "))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for GpProblem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut names: Option<Vec<String>> = None;
        let mut problem: Option<GpProblem> = None;
        let index = |names: &[String], tok: &str, line: usize| -> Result<usize> {
            names
                .iter()
                .position(|n| n == tok)
                .ok_or_else(|| perr(line, format!("unknown variable `{tok}`")))
        };
        let parse_f = |tok: &str, line: usize| -> Result<f64> {
            tok.parse::<f64>()
                .map_err(|_| perr(line, format!("bad number `{tok}`")))
        };
        let parse_mono = |names: &[String], toks: &[&str], line: usize| -> Result<Monomial> {
            let (first, rest) = toks
                .split_first()
                .ok_or_else(|| perr(line, "empty term".into()))?;
            let coef = parse_f(first, line)?;
            let mut exps = Vec::new();
            for t in rest {
                let (v, e) = t
                    .split_once('^')
                    .ok_or_else(|| perr(line, format!("expected name^exp, got `{t}`")))?;
                exps.push((index(names, v, line)?, parse_f(e, line)?));
            }
            Ok(Monomial::new(coef, &exps))
        };
        for (ln, raw) in s.lines().enumerate() {
            let line = ln + 1;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            let Some((&kw, rest)) = toks.split_first() else {
                continue;
            };
            if kw.starts_with('#') {
                continue;
            }
            if kw == "vars" {
                if names.is_some() {
                    return Err(perr(line, "duplicate vars line".into()));
                }
                names = Some(rest.iter().map(|s| s.to_string()).collect());
                continue;
            }
            let nm = names
                .as_ref()
                .ok_or_else(|| perr(line, "vars line must come first".into()))?;
            match kw {
                "max" => {
                    if problem.is_some() {
                        return Err(perr(line, "duplicate max line".into()));
                    }
                    problem = Some(GpProblem::new(nm.clone(), parse_mono(nm, rest, line)?));
                }
                "le" | "eq" | "ub" | "init" => {
                    let p = problem
                        .as_mut()
                        .ok_or_else(|| perr(line, "max line must precede constraints".into()))?;
                    match kw {
                        "le" => {
                            let terms = rest
                                .split(|t| *t == "+")
                                .map(|tt| parse_mono(nm, tt, line))
                                .collect::<Result<Vec<_>>>()?;
                            p.inequalities.push(Posynomial::new(terms));
                        }
                        "eq" => p.equalities.push(parse_mono(nm, rest, line)?),
                        "ub" => {
                            if rest.len() != 2 {
                                return Err(perr(line, "ub takes a name and a value".into()));
                            }
                            let i = index(nm, rest[0], line)?;
                            p.upper_bounds[i] = Some(parse_f(rest[1], line)?);
                        }
                        _ => {
                            let vals = rest.iter().map(|t| parse_f(t, line)).collect::<Result<Vec<_>>>()?;
                            if vals.len() != nm.len() {
                                return Err(perr(line, "init needs one value per variable".into()));
                            }
                            p.initial = Some(vals);
                        }
                    }
                }
                other => return Err(perr(line, format!("unknown keyword `{other}`"))),
            }
        }
        problem.ok_or_else(|| perr(0, "missing max line".into()))
    }
}
