//! Linear solutions `v = A(t) x` of the Euler equations: the matrix Riccati
//! flow `Ȧ + A² = (1/n) tr(A²) I`, its invariants in three dimensions,
//! blow-up detection, equivalence shifts and residual checks of closed-form
//! linear solutions.

use crate::error::{invalid, Error, Result};
use crate::fields::{CompositeField, PolynomialField};
use nalgebra::DMatrix;
use std::fmt::Write as _;

fn trace_tol(a: &DMatrix<f64>) -> f64 {
    1e-9 * (1.0 + a.norm())
}

/// `(1/n) tr(A²) I - A²`.
pub fn riccati_rhs(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if a.trace().abs() > trace_tol(a) {
        return Err(Error::NotTraceFree(a.trace()));
    }
    Ok(rhs_unchecked(a))
}

fn rhs_unchecked(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let a2 = a * a;
    DMatrix::identity(n, n) * (a2.trace() / n as f64) - a2
}

/// Parses `"1,0,0;0,2,0;0,0,-3"` (rows separated by `;`).
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|r| {
            r.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| invalid(format!("bad matrix entry {v:?}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(invalid("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Blow-up is declared once `|A|_F` exceeds this.
    pub blowup_norm: f64,
    /// Smallest admissible step; reaching it also ends the run as a blow-up.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, blowup_norm: 1e8, min_step: 1e-12, max_steps: 2_000_000 }
    }
}

impl RiccatiOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol * 1e-2, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct RiccatiSample {
    pub t: f64,
    pub a: DMatrix<f64>,
}

/// Evidence for a finite-time singularity.
#[derive(Debug, Clone)]
pub struct BlowUp {
    /// Singularity time from the least-squares fit `1/|A| ≈ (T* - t)/C`.
    pub t_star: f64,
    pub fit_constant: f64,
    /// Largest relative misfit of the `1/|A|` line over the fitted samples.
    pub fit_residual: f64,
    pub fit_points: usize,
    pub last_t: f64,
    pub last_norm: f64,
    pub last_step: f64,
}

#[derive(Debug, Clone)]
pub struct RiccatiTrajectory {
    pub samples: Vec<RiccatiSample>,
    pub blowup: Option<BlowUp>,
    pub rejected_steps: usize,
}

// Dormand–Prince 5(4).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One embedded step: returns the fifth-order solution and the error estimate.
fn dp_step(y: &DMatrix<f64>, h: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut ys = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[s][j] != 0.0 {
                ys += kj * (h * A[s][j]);
            }
        }
        k.push(rhs_unchecked(&ys));
    }
    let mut y5 = y.clone();
    let mut err = DMatrix::zeros(y.nrows(), y.ncols());
    for s in 0..7 {
        if B5[s] != 0.0 {
            y5 += &k[s] * (h * B5[s]);
        }
        err += &k[s] * (h * (B5[s] - B4[s]));
    }
    (y5, err)
}

/// Integrates the Riccati flow from `A(0) = a0` up to `t_end` with an
/// adaptive Dormand–Prince 5(4) pair. The last sample lands on `t_end`
/// unless a blow-up is detected first.
pub fn integrate_riccati(a0: &DMatrix<f64>, t_end: f64, opts: &RiccatiOptions) -> Result<RiccatiTrajectory> {
    riccati_rhs(a0)?;
    if !(t_end >= 0.0) {
        return Err(invalid("final time must be non-negative"));
    }
    let mut y = a0.clone();
    let mut t = 0.0;
    let mut h = (1e-3 / (1.0 + a0.norm())).min(t_end.max(1e-12));
    let mut samples = vec![RiccatiSample { t, a: y.clone() }];
    let mut rejected = 0;
    let mut steps = 0;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::NoConvergence { iterations: steps, ratio: h });
        }
        let last = t + h >= t_end;
        let hh = if last { t_end - t } else { h };
        let (y5, e) = dp_step(&y, hh);
        let mut acc = 0.0;
        for (i, ev) in e.iter().enumerate() {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            acc += (ev / sc).powi(2);
        }
        let err = (acc / e.len() as f64).sqrt();
        if !err.is_finite() || err > 1.0 {
            rejected += 1;
            h = hh * if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
            if h < opts.min_step {
                let blowup = fit_blowup(&samples, h);
                return Ok(RiccatiTrajectory { samples, blowup, rejected_steps: rejected });
            }
            continue;
        }
        t = if last { t_end } else { t + hh };
        y = y5;
        samples.push(RiccatiSample { t, a: y.clone() });
        if y.norm() > opts.blowup_norm {
            let blowup = fit_blowup(&samples, hh);
            return Ok(RiccatiTrajectory { samples, blowup, rejected_steps: rejected });
        }
        let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = hh * grow;
    }
    Ok(RiccatiTrajectory { samples, blowup: None, rejected_steps: rejected })
}

pub(crate) fn fit_blowup(samples: &[RiccatiSample], last_step: f64) -> Option<BlowUp> {
    let last = samples.last()?;
    let pts: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.a.norm() > 1e3).map(|s| (s.t, 1.0 / s.a.norm())).collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / k, sy / k);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (t, y) in &pts {
        sxx += (t - mt) * (t - mt);
        sxy += (t - mt) * (y - my);
    }
    let slope = sxy / sxx;
    let t_star = mt - my / slope;
    let fit_constant = -1.0 / slope;
    let fit_residual = pts
        .iter()
        .map(|(t, y)| ((t_star - t) / fit_constant - y).abs() / y)
        .fold(0.0, f64::max);
    Some(BlowUp {
        t_star,
        fit_constant,
        fit_residual,
        fit_points: pts.len(),
        last_t: last.t,
        last_norm: last.a.norm(),
        last_step,
    })
}

impl RiccatiTrajectory {
    pub fn last(&self) -> &RiccatiSample {
        self.samples.last().expect("trajectory has its initial sample")
    }

    /// `max_t |tr A(t)|`.
    pub fn trace_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.a.trace().abs()).fold(0.0, f64::max)
    }

    /// `max_t |A(t) - A(0)|_F`.
    pub fn stationarity_defect(&self) -> f64 {
        let a0 = &self.samples[0].a;
        self.samples.iter().map(|s| (&s.a - a0).norm()).fold(0.0, f64::max)
    }

    /// CSV with `t`, the entries of `A` row by row, `tr A` and `|A|_F`.
    pub fn to_csv(&self) -> String {
        let n = self.samples[0].a.nrows();
        let mut out = String::from("t");
        for i in 0..n {
            for j in 0..n {
                let _ = write!(out, ",a{}{}", i + 1, j + 1);
            }
        }
        out.push_str(",trace,norm\n");
        for s in &self.samples {
            let _ = write!(out, "{:.17e}", s.t);
            for i in 0..n {
                for j in 0..n {
                    let _ = write!(out, ",{:.17e}", s.a[(i, j)]);
                }
            }
            let _ = writeln!(out, ",{:.17e},{:.17e}", s.a.trace(), s.a.norm());
        }
        out
    }
}

/// Relations among eigenvalue differences `μ_1 = λ_2 - λ_3`,
/// `μ_2 = λ_3 - λ_1`, `μ_3 = λ_1 - λ_2` of a three-dimensional trajectory.
#[derive(Debug, Clone)]
pub struct Invariants3d {
    /// False when eigenvalues coincide or turn complex.
    pub applicable: bool,
    pub note: String,
    pub trace_drift: f64,
    /// `max_t |∏μ_i(t) - ∏μ_i(0)|`.
    pub mu_product_drift: f64,
    pub mu_product_relative_drift: f64,
    /// `max_t |β² - α² - 4 c0 / α| / max(β², 1)` with `α = -μ_3`, `β = μ_1 - μ_2`.
    pub beta_relation_residual: f64,
    /// Same for `β² = α(0) e^{-2β/3} + 4 c0 α(0)^{-1} e^{β/3}` as printed in
    /// the source derivation; reported, not asserted.
    pub printed_relation_residual: f64,
    /// Whether every `μ_i` kept its initial sign.
    pub signs_preserved: bool,
    /// Last time included. Evaluation stops once `|A| / min|μ_i|` exceeds
    /// `1e3`: past that point the smallest difference is below the
    /// integrator's absolute accuracy and the relations carry no information.
    pub evaluated_until: f64,
    /// Tracked eigenvalues `(t, λ_1, λ_2, λ_3)`.
    pub eigenvalues: Vec<(f64, [f64; 3])>,
}

fn real_eigenvalues(a: &DMatrix<f64>) -> Option<[f64; 3]> {
    let sym = (a - a.transpose()).norm() <= 1e-12 * (1.0 + a.norm());
    if sym {
        let e = a.clone().symmetric_eigen().eigenvalues;
        return Some([e[0], e[1], e[2]]);
    }
    let ev = a.complex_eigenvalues();
    let scale = 1.0 + a.norm();
    if ev.iter().any(|z| z.im.abs() > 1e-9 * scale) {
        return None;
    }
    Some([ev[0].re, ev[1].re, ev[2].re])
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Evaluates the eigenvalue relations along `traj`, tracking eigenvalues by
/// continuity (nearest permutation between consecutive samples).
pub fn invariants_3d(traj: &RiccatiTrajectory) -> Result<Invariants3d> {
    let n = traj.samples[0].a.nrows();
    if n != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: n });
    }
    let mut rep = Invariants3d {
        applicable: true,
        note: String::new(),
        trace_drift: 0.0,
        mu_product_drift: 0.0,
        mu_product_relative_drift: 0.0,
        beta_relation_residual: 0.0,
        printed_relation_residual: 0.0,
        signs_preserved: true,
        evaluated_until: 0.0,
        eigenvalues: Vec::with_capacity(traj.samples.len()),
    };
    let mut prev: Option<[f64; 3]> = None;
    for s in &traj.samples {
        let Some(mut lam) = real_eigenvalues(&s.a) else {
            rep.applicable = false;
            rep.note = format!("complex eigenvalues at t = {}", s.t);
            return Ok(rep);
        };
        match prev {
            None => lam.sort_by(|a, b| b.total_cmp(a)),
            Some(p) => {
                let best = PERMS
                    .iter()
                    .min_by(|x, y| {
                        let d = |q: &[usize; 3]| (0..3).map(|i| (lam[q[i]] - p[i]).powi(2)).sum::<f64>();
                        d(x).total_cmp(&d(y))
                    })
                    .expect("six permutations");
                lam = [lam[best[0]], lam[best[1]], lam[best[2]]];
            }
        }
        prev = Some(lam);
        let gap = [lam[1] - lam[2], lam[2] - lam[0], lam[0] - lam[1]].iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        if !rep.eigenvalues.is_empty() && s.a.norm() > 1e3 * gap {
            break;
        }
        rep.evaluated_until = s.t;
        rep.trace_drift = rep.trace_drift.max(s.a.trace().abs());
        rep.eigenvalues.push((s.t, lam));
    }
    let mu = |l: &[f64; 3]| [l[1] - l[2], l[2] - l[0], l[0] - l[1]];
    let l0 = rep.eigenvalues[0].1;
    let mu0 = mu(&l0);
    let scale = 1.0 + l0.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if mu0.iter().any(|m| m.abs() <= 1e-8 * scale) {
        rep.applicable = false;
        rep.note = "repeated eigenvalues".into();
        return Ok(rep);
    }
    let c0: f64 = mu0.iter().product();
    let alpha0 = -mu0[2];
    for (_, l) in &rep.eigenvalues {
        let m = mu(l);
        let prod: f64 = m.iter().product();
        rep.mu_product_drift = rep.mu_product_drift.max((prod - c0).abs());
        if m.iter().zip(&mu0).any(|(a, b)| a.signum() != b.signum()) {
            rep.signs_preserved = false;
        }
        let alpha = -m[2];
        let beta = m[0] - m[1];
        let norm = (beta * beta).max(1.0);
        let derived = beta * beta - alpha * alpha - 4.0 * c0 / alpha;
        rep.beta_relation_residual = rep.beta_relation_residual.max(derived.abs() / norm);
        let printed =
            beta * beta - alpha0 * (-2.0 * beta / 3.0).exp() - 4.0 * c0 / alpha0 * (beta / 3.0).exp();
        rep.printed_relation_residual = rep.printed_relation_residual.max(printed.abs() / norm);
    }
    rep.mu_product_relative_drift = rep.mu_product_drift / c0.abs();
    Ok(rep)
}

/// Space–time snapshot of a solution candidate.
#[derive(Debug, Clone)]
pub struct SolutionSample {
    pub t: f64,
    pub v: CompositeField,
    /// `∂_t v`.
    pub v_t: CompositeField,
    pub pgrad: CompositeField,
}

/// Closed-form path with polynomial velocity, its time derivative and the
/// pressure gradient.
pub struct PolyPath {
    pub n: usize,
    pub v: Box<dyn Fn(f64) -> PolynomialField>,
    pub v_t: Box<dyn Fn(f64) -> PolynomialField>,
    pub pgrad: Box<dyn Fn(f64) -> PolynomialField>,
}

fn linear(a: [f64; 4]) -> PolynomialField {
    PolynomialField::affine(2, &a, &[0.0, 0.0]).expect("2x2 matrix")
}

impl PolyPath {
    /// `v = T*/(T* - t) (x_1, -x_2)` with pressure
    /// `p = -(1/2) T*/(T* - t)² (x_1² - x_2² + T*(x_1² + x_2²))`.
    pub fn hyperbolic_blowup(t_star: f64) -> Self {
        Self {
            n: 2,
            v: Box::new(move |t| {
                let c = t_star / (t_star - t);
                linear([c, 0.0, 0.0, -c])
            }),
            v_t: Box::new(move |t| {
                let d = t_star / (t_star - t).powi(2);
                linear([d, 0.0, 0.0, -d])
            }),
            pgrad: Box::new(move |t| {
                let k = -t_star / (t_star - t).powi(2);
                linear([k * (1.0 + t_star), 0.0, 0.0, k * (t_star - 1.0)])
            }),
        }
    }

    /// `v = (x_1 + x_2, x_1 - x_2)`, `-∇p = (2x_1, 2x_2)`.
    pub fn steady_pair() -> Self {
        Self {
            n: 2,
            v: Box::new(|_| linear([1.0, 1.0, 1.0, -1.0])),
            v_t: Box::new(|_| linear([0.0; 4])),
            pgrad: Box::new(|_| linear([-2.0, 0.0, 0.0, -2.0])),
        }
    }

    /// `u = (x_1 + e^t x_2, e^t x_1 - x_2)` with
    /// `-∇q = ((e^{2t} + 1) x_1 + e^t x_2, (e^{2t} + sign) x_2 + e^t x_1)`;
    /// `sign = +1` solves the equations, `sign = -1` is the printed variant.
    pub fn unsteady_pair(sign: f64) -> Self {
        Self {
            n: 2,
            v: Box::new(|t| {
                let e = t.exp();
                linear([1.0, e, e, -1.0])
            }),
            v_t: Box::new(|t| {
                let e = t.exp();
                linear([0.0, e, e, 0.0])
            }),
            pgrad: Box::new(move |t| {
                let e = t.exp();
                linear([-(e * e + 1.0), -e, -e, -(e * e + sign)])
            }),
        }
    }

    /// Linear solution `v = A(t) x` sampled from a Riccati trajectory, with
    /// `∇p = -(1/n) tr(A²) x`.
    pub fn riccati_samples(traj: &RiccatiTrajectory) -> Vec<SolutionSample> {
        traj.samples
            .iter()
            .map(|s| {
                let n = s.a.nrows();
                let flat = |m: &DMatrix<f64>| -> PolynomialField {
                    let e: Vec<f64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
                    PolynomialField::affine(n, &e, &vec![0.0; n]).expect("square matrix")
                };
                let a2 = (&s.a * &s.a).trace() / n as f64;
                SolutionSample {
                    t: s.t,
                    v: CompositeField::from_poly(flat(&s.a)),
                    v_t: CompositeField::from_poly(flat(&rhs_unchecked(&s.a))),
                    pgrad: CompositeField::from_poly(flat(&(DMatrix::identity(n, n) * -a2))),
                }
            })
            .collect()
    }

    pub fn sample(&self, times: &[f64]) -> Vec<SolutionSample> {
        times
            .iter()
            .map(|&t| SolutionSample {
                t,
                v: CompositeField::from_poly((self.v)(t)),
                v_t: CompositeField::from_poly((self.v_t)(t)),
                pgrad: CompositeField::from_poly((self.pgrad)(t)),
            })
            .collect()
    }

    /// Residual polynomial `∂_t v + (v·∇)v + ∇p` at time `t`.
    pub fn residual(&self, t: f64) -> Result<PolynomialField> {
        let v = (self.v)(t);
        let mut r = (self.v_t)(t).add(&(self.pgrad)(t))?;
        let grad = v.gradient();
        let n = self.n;
        let mut conv = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = PolynomialField::zeros(n, 1);
            for k in 0..n {
                acc = acc.add(&v.product_component(k, &grad, i * n + k)?)?;
            }
            conv.push(acc);
        }
        r = r.add(&PolynomialField::stack(&conv)?)?;
        Ok(r)
    }
}

/// Largest Euler residual per component over `[-1, 1]^n` lattice points and
/// the given times; the polynomial residual is also returned coefficientwise.
#[derive(Debug, Clone)]
pub struct LinearResidual {
    pub max_abs: f64,
    pub per_component: Vec<f64>,
}

pub fn verify_linear_solution(path: &PolyPath, times: &[f64]) -> Result<LinearResidual> {
    let n = path.n;
    let mut per_component = vec![0.0f64; n];
    let pts = box_points(n, 5);
    for &t in times {
        let r = path.residual(t)?;
        for x in &pts {
            for (c, v) in r.eval(&x[..n]).iter().enumerate() {
                per_component[c] = per_component[c].max(v.abs());
            }
        }
    }
    let max_abs = per_component.iter().copied().fold(0.0, f64::max);
    Ok(LinearResidual { max_abs, per_component })
}

fn box_points(n: usize, k: usize) -> Vec<[f64; 3]> {
    let mut pts = Vec::new();
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / (k - 1) as f64;
    for i in 0..k {
        for j in 0..k {
            if n == 2 {
                pts.push([coord(i), coord(j), 0.0]);
            } else {
                for l in 0..k {
                    pts.push([coord(i), coord(j), coord(l)]);
                }
            }
        }
    }
    pts
}

/// `sup |∂_t v + (∇v) v + ∇p|` over the sample times and `points`.
pub fn euler_residual(samples: &[SolutionSample], points: &[[f64; 3]]) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in samples {
        let n = s.v.n();
        let grad = s.v.gradient();
        for x in points {
            let v = s.v.eval(&x[..n]);
            let g = grad.eval(&x[..n]);
            let vt = s.v_t.eval(&x[..n]);
            let p = s.pgrad.eval(&x[..n]);
            for i in 0..n {
                let conv: f64 = (0..n).map(|k| v[k] * g[i * n + k]).sum();
                worst = worst.max((vt[i] + conv + p[i]).abs());
            }
        }
    }
    Ok(worst)
}

/// Sampled shift path `ξ` with `ξ̇` and `ξ̈`.
#[derive(Debug, Clone)]
pub struct EquivalenceShift {
    pub times: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    pub xi_dot: Vec<Vec<f64>>,
    pub xi_ddot: Vec<Vec<f64>>,
}

impl EquivalenceShift {
    pub fn zero(n: usize, times: &[f64]) -> Self {
        let z = vec![vec![0.0; n]; times.len()];
        Self { times: times.to_vec(), xi: z.clone(), xi_dot: z.clone(), xi_ddot: z }
    }

    /// Shift given in closed form.
    pub fn from_fn(times: &[f64], f: impl Fn(f64) -> (Vec<f64>, Vec<f64>, Vec<f64>)) -> Self {
        let mut s = Self { times: times.to_vec(), xi: vec![], xi_dot: vec![], xi_ddot: vec![] };
        for &t in times {
            let (a, b, c) = f(t);
            s.xi.push(a);
            s.xi_dot.push(b);
            s.xi_ddot.push(c);
        }
        s
    }

    /// Particle path `ξ̇ = v(ξ, t)` from `ξ(t_0) = xi0`, integrated with
    /// classical Runge–Kutta on `substeps` steps between sample times, so
    /// that the shifted solution is centred.
    pub fn centering(path: &PolyPath, times: &[f64], xi0: &[f64], substeps: usize) -> Result<Self> {
        let n = path.n;
        if xi0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: xi0.len() });
        }
        let vel = |x: &[f64], t: f64| (path.v)(t).eval(x);
        let mut s = Self { times: times.to_vec(), xi: vec![], xi_dot: vec![], xi_ddot: vec![] };
        let mut x = xi0.to_vec();
        let mut t = times.first().copied().unwrap_or(0.0);
        for &tn in times {
            let h = (tn - t) / substeps.max(1) as f64;
            for _ in 0..substeps.max(1) {
                if h == 0.0 {
                    break;
                }
                let k1 = vel(&x, t);
                let y: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k1[i]).collect();
                let k2 = vel(&y, t + 0.5 * h);
                let y: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k2[i]).collect();
                let k3 = vel(&y, t + 0.5 * h);
                let y: Vec<f64> = (0..n).map(|i| x[i] + h * k3[i]).collect();
                let k4 = vel(&y, t + h);
                for i in 0..n {
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                t += h;
            }
            t = tn;
            let xd = vel(&x, tn);
            let vt = (path.v_t)(tn).eval(&x);
            let g = (path.v)(tn).gradient().eval(&x);
            let xdd: Vec<f64> = (0..n).map(|i| vt[i] + (0..n).map(|k| g[i * n + k] * xd[k]).sum::<f64>()).collect();
            s.xi.push(x.clone());
            s.xi_dot.push(xd);
            s.xi_ddot.push(xdd);
        }
        Ok(s)
    }
}

/// `v_2(x, t) = v_1(x + ξ, t) - ξ̇`, `∂_t v_2 = ∂_t v_1(x + ξ) + (∇v_1)(x + ξ) ξ̇ - ξ̈`
/// and `∇p_2(x, t) = ∇p_1(x + ξ, t) + ξ̈`. The sign of `ξ̈` is the one for
/// which the shifted pair solves the equations whenever the original does.
pub fn equivalence_transform(path: &[SolutionSample], shift: &EquivalenceShift) -> Result<Vec<SolutionSample>> {
    if path.len() != shift.times.len()
        || path.iter().zip(&shift.times).any(|(s, t)| (s.t - t).abs() > 1e-12 * (1.0 + t.abs()))
    {
        return Err(Error::TimeGridMismatch);
    }
    let mut out = Vec::with_capacity(path.len());
    for (k, s) in path.iter().enumerate() {
        let n = s.v.n();
        let neg: Vec<f64> = shift.xi[k].iter().map(|v| -v).collect();
        let constant = |c: &[f64], sign: f64| {
            let c: Vec<f64> = c.iter().map(|v| v * sign).collect();
            CompositeField::from_poly(PolynomialField::constant(n, &c))
        };
        let v = s.v.translate(&neg).add(&constant(&shift.xi_dot[k], -1.0))?;
        let mut v_t = s.v_t.translate(&neg).add(&constant(&shift.xi_ddot[k], -1.0))?;
        for a in 0..n {
            v_t = v_t.axpy(shift.xi_dot[k][a], &s.v.derivative(a).translate(&neg))?;
        }
        let pgrad = s.pgrad.translate(&neg).add(&constant(&shift.xi_ddot[k], 1.0))?;
        out.push(SolutionSample { t: s.t, v, v_t, pgrad });
    }
    Ok(out)
}

/// Points of the `[-1, 1]^n` lattice used by residual checks.
pub fn residual_points(n: usize) -> Vec<[f64; 3]> {
    box_points(n, 5)
}
