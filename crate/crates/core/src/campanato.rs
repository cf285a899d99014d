//! Mollified moments, mean polynomials, oscillations and generalized
//! Campanato seminorms
//! `|f|_{s,q,p,N} = sup_{x0} (Σ_j (2^{-sj} osc_{p,N}(f; x0, 2^j))^q)^{1/q}`.
//!
//! Moments of the polynomial part are exact. Moments of the grid part use a
//! cell-aligned Gauss rule that is exact on the interpolant; `L^p` averages
//! use the polar ball rule of [`crate::quadrature`]. The supremum
//! over centres runs over a finite probe set and the scale sum over a finite
//! window; reports carry explicit bounds for the omitted scales.

use crate::error::{invalid, Error, Result};
use crate::fields::{monomial_count, monomial_degree, monomials, CompositeField, GridSpec, PolynomialField};
use crate::mollifier;
use crate::quadrature::{ball_rule_for, cell_integrals, unit_ball_volume, BallRule};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::rc::Rc;

/// How `inf_Q ‖f - Q‖` is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscMode {
    /// Exact `L²` best approximation (requires `p = 2`).
    Exact2,
    /// `‖f - P^N_{x0,r}(f)‖_{L^p}` with the mollifier mean polynomial.
    Proxy,
}

fn to3(x: &[f64]) -> [f64; 3] {
    let mut y = [0.0; 3];
    y[..x.len().min(3)].copy_from_slice(&x[..x.len().min(3)]);
    y
}

fn multi_indices(n: usize, max_deg: usize) -> Vec<[u8; 3]> {
    monomials(n).iter().copied().filter(|e| monomial_degree(e) <= max_deg).collect()
}

fn jet_derivative(jet: &mollifier::Jet, alpha: &[u8; 3]) -> f64 {
    match monomial_degree(alpha) {
        0 => jet.value,
        1 => {
            let i = alpha.iter().position(|&a| a == 1).unwrap();
            jet.grad[i]
        }
        _ => {
            let mut ix = Vec::new();
            for (k, &a) in alpha.iter().enumerate() {
                for _ in 0..a {
                    ix.push(k);
                }
            }
            jet.hess[mollifier::sym_index(ix[0], ix[1])]
        }
    }
}

/// Grid-part samples of `f` on the ball rule scaled to `B(x0, r)`, node-major.
struct BallSamples {
    rule: Rc<BallRule>,
    x0: [f64; 3],
    r: f64,
    out: usize,
    grid: Option<Vec<f64>>,
    /// Cell-rule moments of the grid part, `[component][multi-index ≤ 2]`.
    grid_moments: Option<Vec<Vec<f64>>>,
}

impl BallSamples {
    fn check(f: &CompositeField, x0: &[f64], r: f64) -> Result<()> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(format!("ball radius must be positive (got {r})")));
        }
        if x0.len() < f.n() {
            return Err(Error::DimensionMismatch { expected: f.n(), got: x0.len() });
        }
        Ok(())
    }

    fn unresolvable(r: f64, h: f64) -> Error {
        Error::Unresolvable(format!("radius {r} below four grid cells ({}) where the grid part is active", 4.0 * h))
    }

    fn new(f: &CompositeField, x0: &[f64], r: f64) -> Result<Self> {
        Self::check(f, x0, r)?;
        let n = f.n();
        let rule = ball_rule_for(n, r, f.h());
        let x0 = to3(x0);
        let out = f.out_dim();
        let grid = match f.grid() {
            None => None,
            Some(g) => {
                let mut vals = vec![0.0; rule.len() * out];
                let mut y = [0.0; 3];
                for (k, z) in rule.nodes.iter().enumerate() {
                    for ax in 0..n {
                        y[ax] = x0[ax] + r * z[ax];
                    }
                    g.eval_into(&y, &mut vals[k * out..(k + 1) * out]);
                }
                let h = g.spec().h();
                if r < 4.0 * h && vals.iter().any(|v| *v != 0.0) {
                    return Err(Self::unresolvable(r, h));
                }
                Some(vals)
            }
        };
        Ok(Self { rule, x0, r, out, grid, grid_moments: None })
    }

    /// Moments only; the grid part goes through the cell-aligned rule, which
    /// is exact on the interpolant.
    fn for_moments(f: &CompositeField, x0: &[f64], r: f64) -> Result<Self> {
        Self::check(f, x0, r)?;
        let n = f.n();
        let x0 = to3(x0);
        let grid_moments = match f.grid() {
            None => None,
            Some(g) => {
                let alphas = multi_indices(n, 2);
                let kernels: Vec<Box<dyn Fn(&mollifier::Jet) -> f64>> = alphas
                    .iter()
                    .map(|a| {
                        let a = *a;
                        Box::new(move |j: &mollifier::Jet| jet_derivative(j, &a)) as Box<dyn Fn(&mollifier::Jet) -> f64>
                    })
                    .collect();
                let refs: Vec<&dyn Fn(&mollifier::Jet) -> f64> = kernels.iter().map(|k| k.as_ref()).collect();
                let (vals, vmax) = cell_integrals(g, &x0, r, &refs);
                let h = g.spec().h();
                if r < 4.0 * h && vmax != 0.0 {
                    return Err(Self::unresolvable(r, h));
                }
                Some(vals)
            }
        };
        let rule = ball_rule_for(n, r, None);
        Ok(Self { rule, x0, r, out: f.out_dim(), grid: None, grid_moments })
    }

    /// Full values `f(x0 + r z_k)` including the polynomial part.
    fn full_values(&self, f: &CompositeField) -> Vec<f64> {
        let n = f.n();
        let out = self.out;
        let mut vals = self.grid.clone().unwrap_or_else(|| vec![0.0; self.rule.len() * out]);
        let mut y = [0.0; 3];
        let mut buf = vec![0.0; out];
        for (k, z) in self.rule.nodes.iter().enumerate() {
            for ax in 0..n {
                y[ax] = self.x0[ax] + self.r * z[ax];
            }
            f.poly().eval_into(&y, &mut buf);
            for c in 0..out {
                vals[k * out + c] += buf[c];
            }
        }
        vals
    }

    /// Scaled moments `r^{|α|} [f]^α_{x0,r}` for component `c`.
    fn scaled_moments(&self, f: &CompositeField, c: usize, alphas: &[[u8; 3]]) -> Vec<f64> {
        let n = f.n();
        let m2 = mollifier::second_moment(n);
        let pc = f.poly().component(c);
        alphas
            .iter()
            .map(|alpha| {
                let deg = monomial_degree(alpha);
                let d = pc.partial(alpha);
                let mut lap = 0.0;
                for k in 0..n {
                    let mut e = [0u8; 3];
                    e[k] = 2;
                    lap += d.coeff(0, &e);
                }
                let poly_part = d.eval(&self.x0)[0] + self.r * self.r * m2 * lap;
                let mut val = poly_part * self.r.powi(deg as i32);
                if let Some(gm) = &self.grid_moments {
                    let sign = if deg % 2 == 0 { 1.0 } else { -1.0 };
                    let i = monomials(n).iter().position(|e| e == alpha).expect("multi-index of degree ≤ 2");
                    val += sign * gm[c][i];
                } else if let Some(g) = &self.grid {
                    let sign = if deg % 2 == 0 { 1.0 } else { -1.0 };
                    let mut acc = 0.0;
                    for (k, (w, jet)) in self.rule.weights.iter().zip(&self.rule.jets).enumerate() {
                        acc += w * g[k * self.out + c] * jet_derivative(jet, alpha);
                    }
                    val += sign * acc;
                }
                val
            })
            .collect()
    }
}

/// Mollified moment `[f]^α_{x0,r} = (f * D^α φ_r)(x0)` of every component.
pub fn moment(f: &CompositeField, alpha: &[u8; 3], x0: &[f64], r: f64) -> Result<Vec<f64>> {
    if monomial_degree(alpha) > 2 {
        return Err(invalid("moments are available for |α| ≤ 2"));
    }
    let s = BallSamples::for_moments(f, x0, r)?;
    let scale = r.powi(monomial_degree(alpha) as i32);
    Ok((0..f.out_dim()).map(|c| s.scaled_moments(f, c, &[*alpha])[0] / scale).collect())
}

/// `r^{|α|} [((· - x0)/r)^β]^α_{x0,r}`, which does not depend on `x0` or `r`.
fn moment_matrix(n: usize, deg: usize) -> DMatrix<f64> {
    let idx = multi_indices(n, deg);
    let m2 = mollifier::second_moment(n);
    let k = idx.len();
    DMatrix::from_fn(k, k, |i, j| {
        let (a, b) = (idx[i], idx[j]);
        if (0..3).any(|t| a[t] > b[t]) {
            return 0.0;
        }
        let g = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let mut coef = 1.0;
        for t in 0..3 {
            for v in (g[t] + 1)..=b[t] {
                coef *= v as f64;
            }
        }
        match monomial_degree(&g) {
            0 => coef,
            2 if g.contains(&2) => coef * m2,
            _ => 0.0,
        }
    })
}

/// Polynomial in the scaled centred variable `z = (x - x0)/r`, rewritten in
/// global coordinates.
fn from_scaled(n: usize, coeffs: &[Vec<f64>], deg: usize, x0: &[f64; 3], r: f64) -> PolynomialField {
    let idx = multi_indices(n, deg);
    let mut p = PolynomialField::zeros(n, coeffs.len());
    for (c, cs) in coeffs.iter().enumerate() {
        for (e, v) in idx.iter().zip(cs) {
            p.set(c, e, *v);
        }
    }
    let mut m = vec![0.0; n * n];
    let mut d = vec![0.0; n];
    for k in 0..n {
        m[k * n + k] = 1.0 / r;
        d[k] = -x0[k] / r;
    }
    p.compose_affine(&m, &d).expect("affine change of variables")
}

/// Mean polynomial `P^N_{x0,r}(f)`: the unique polynomial of degree ≤ N with
/// `[f - P]^α_{x0,r} = 0` for all `|α| ≤ N`.
pub fn mean_polynomial(f: &CompositeField, degree: usize, x0: &[f64], r: f64) -> Result<PolynomialField> {
    let s = BallSamples::for_moments(f, x0, r)?;
    mean_polynomial_from(&s, f, degree)
}

fn mean_polynomial_from(s: &BallSamples, f: &CompositeField, degree: usize) -> Result<PolynomialField> {
    if degree > 2 {
        return Err(invalid("mean polynomials are available for N ≤ 2"));
    }
    let n = f.n();
    let alphas = multi_indices(n, degree);
    let lu = moment_matrix(n, degree).lu();
    let mut coeffs = Vec::with_capacity(f.out_dim());
    for c in 0..f.out_dim() {
        let rhs = DVector::from_vec(s.scaled_moments(f, c, &alphas));
        let sol = lu.solve(&rhs).ok_or(Error::SingularMoments)?;
        coeffs.push(sol.iter().copied().collect::<Vec<f64>>());
    }
    Ok(from_scaled(n, &coeffs, degree, &s.x0, s.r))
}

/// `osc_{p,N}(f; x0, r) = |B(r)|^{-1/p} inf_{Q ∈ P_N} ‖f - Q‖_{L^p(B(x0,r))}`
/// (Euclidean norm across components).
pub fn oscillation(f: &CompositeField, p: f64, degree: usize, x0: &[f64], r: f64, mode: OscMode) -> Result<f64> {
    check_p(p, mode)?;
    if degree > 2 {
        return Err(invalid("oscillations are available for N ≤ 2"));
    }
    if f.grid().is_none() && f.poly().degree() <= degree {
        return Ok(0.0);
    }
    let s = BallSamples::new(f, x0, r)?;
    oscillation_from(&s, f, p, degree, mode)
}

fn check_p(p: f64, mode: OscMode) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if mode == OscMode::Exact2 && p != 2.0 {
        return Err(invalid("exact oscillation requires p = 2"));
    }
    Ok(())
}

fn oscillation_from(s: &BallSamples, f: &CompositeField, p: f64, degree: usize, mode: OscMode) -> Result<f64> {
    let n = f.n();
    let out = s.out;
    let vals = s.full_values(f);
    let rule = &s.rule;
    let vol = unit_ball_volume(n);
    match mode {
        OscMode::Exact2 => {
            let idx = multi_indices(n, degree);
            let k = idx.len();
            let basis: Vec<f64> = rule
                .nodes
                .iter()
                .flat_map(|z| idx.iter().map(move |e| crate::fields::monomial_value(e, &z[..n])))
                .collect();
            let mut gram = DMatrix::<f64>::zeros(k, k);
            for (node, w) in rule.weights.iter().enumerate() {
                let b = &basis[node * k..(node + 1) * k];
                for i in 0..k {
                    for j in 0..k {
                        gram[(i, j)] += w * b[i] * b[j];
                    }
                }
            }
            let chol = gram.cholesky().ok_or(Error::SingularMoments)?;
            let mut total = 0.0;
            for c in 0..out {
                let mut rhs = DVector::<f64>::zeros(k);
                for (node, w) in rule.weights.iter().enumerate() {
                    let v = vals[node * out + c];
                    for i in 0..k {
                        rhs[i] += w * basis[node * k + i] * v;
                    }
                }
                let coef = chol.solve(&rhs);
                for (node, w) in rule.weights.iter().enumerate() {
                    let b = &basis[node * k..(node + 1) * k];
                    let fit: f64 = (0..k).map(|i| coef[i] * b[i]).sum();
                    let e = vals[node * out + c] - fit;
                    total += w * e * e;
                }
            }
            Ok((total / vol).sqrt())
        }
        OscMode::Proxy => {
            let mp = if f.grid().is_some() {
                mean_polynomial_from(&BallSamples::for_moments(f, &s.x0[..n], s.r)?, f, degree)?
            } else {
                mean_polynomial_from(s, f, degree)?
            };
            let mut y = [0.0; 3];
            let mut buf = vec![0.0; out];
            let mut acc: f64 = 0.0;
            for (node, z) in rule.nodes.iter().enumerate() {
                for ax in 0..n {
                    y[ax] = s.x0[ax] + s.r * z[ax];
                }
                mp.eval_into(&y, &mut buf);
                let e2: f64 = (0..out).map(|c| (vals[node * out + c] - buf[c]).powi(2)).sum();
                let e = e2.sqrt();
                if p.is_infinite() {
                    acc = acc.max(e);
                } else {
                    acc += rule.weights[node] * e.powf(p);
                }
            }
            Ok(if p.is_infinite() { acc } else { (acc / vol).powf(1.0 / p) })
        }
    }
}

/// Both oscillations of one ball; `exact2 ≤ proxy` up to quadrature error.
pub fn oscillation_pair(f: &CompositeField, degree: usize, x0: &[f64], r: f64) -> Result<(f64, f64)> {
    let s = BallSamples::new(f, x0, r)?;
    Ok((
        oscillation_from(&s, f, 2.0, degree, OscMode::Exact2)?,
        oscillation_from(&s, f, 2.0, degree, OscMode::Proxy)?,
    ))
}

/// `‖f‖_{L^p(B(x0, r))}` (not normalized).
pub fn ball_lp_norm(f: &CompositeField, p: f64, x0: &[f64], r: f64) -> Result<f64> {
    let s = BallSamples::new(f, x0, r)?;
    let vals = s.full_values(f);
    let out = s.out;
    let n = f.n();
    let mut acc: f64 = 0.0;
    for (node, w) in s.rule.weights.iter().enumerate() {
        let e = (0..out).map(|c| vals[node * out + c].powi(2)).sum::<f64>().sqrt();
        if p.is_infinite() {
            acc = acc.max(e);
        } else {
            acc += w * e.powf(p);
        }
    }
    Ok(if p.is_infinite() { acc } else { (acc * r.powi(n as i32)).powf(1.0 / p) })
}

/// Parameters of a Campanato seminorm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormParams {
    pub s: f64,
    pub q: f64,
    pub p: f64,
    pub degree: usize,
    pub mode: OscMode,
    /// Add `‖f‖_{L^p(B(1))}` to obtain the inhomogeneous norm.
    pub local_norm: bool,
}

impl SeminormParams {
    pub fn new(s: f64, q: f64, p: f64, degree: usize) -> Self {
        let mode = if p == 2.0 { OscMode::Exact2 } else { OscMode::Proxy };
        Self { s, q, p, degree, mode, local_norm: false }
    }

    pub fn with_mode(mut self, mode: OscMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_local_norm(mut self, on: bool) -> Self {
        self.local_norm = on;
        self
    }
}

/// Evenly spaced probe centres on `[-extent, extent]^n` (`per_axis` per axis)
/// plus the origin.
pub fn lattice_probes(n: usize, extent: f64, per_axis: usize) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]];
    if per_axis == 0 {
        return out;
    }
    let coords: Vec<f64> = if per_axis == 1 {
        vec![0.0]
    } else {
        (0..per_axis).map(|i| -extent + 2.0 * extent * i as f64 / (per_axis - 1) as f64).collect()
    };
    let total = per_axis.pow(n as u32);
    for k in 0..total {
        let mut p = [0.0; 3];
        let mut r = k;
        for ax in (0..n).rev() {
            p[ax] = coords[r % per_axis];
            r /= per_axis;
        }
        if p != [0.0; 3] {
            out.push(p);
        }
    }
    out
}

/// Result of [`seminorm`].
#[derive(Debug, Clone)]
pub struct SeminormReport {
    pub params: SeminormParams,
    /// Supremum over probes of the windowed sum, plus the local norm if requested.
    pub value: f64,
    pub local_norm: Option<f64>,
    pub per_probe: Vec<f64>,
    pub argsup: usize,
    pub probes: Vec<[f64; 3]>,
    pub j_min: i32,
    pub j_max: i32,
    /// `osc[probe][j - j_min]`.
    pub profile: Vec<Vec<f64>>,
    /// Bound on the contribution of scales below the window.
    pub lower_tail: f64,
    /// Bound on the contribution of scales above the window (sup over probes).
    pub upper_tail: f64,
}

impl SeminormReport {
    /// `value ≤ true seminorm over the probes ≤ upper_bound`.
    pub fn upper_bound(&self) -> f64 {
        let q = self.params.q;
        let windowed = self.value - self.local_norm.unwrap_or(0.0);
        let all = if q.is_infinite() {
            windowed.max(self.lower_tail).max(self.upper_tail)
        } else {
            (windowed.powf(q) + self.lower_tail.powf(q) + self.upper_tail.powf(q)).powf(1.0 / q)
        };
        all + self.local_norm.unwrap_or(0.0)
    }

    pub fn to_kv(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "s = {}", p.s);
        let _ = writeln!(s, "q = {}", p.q);
        let _ = writeln!(s, "p = {}", p.p);
        let _ = writeln!(s, "degree = {}", p.degree);
        let _ = writeln!(s, "mode = {:?}", p.mode);
        let _ = writeln!(s, "j_min = {}", self.j_min);
        let _ = writeln!(s, "j_max = {}", self.j_max);
        let _ = writeln!(s, "probes = {}", self.probes.len());
        let _ = writeln!(s, "value = {:.12e}", self.value);
        if let Some(l) = self.local_norm {
            let _ = writeln!(s, "local_norm = {l:.12e}");
        }
        let _ = writeln!(s, "argsup = {}", self.argsup);
        let _ = writeln!(s, "lower_tail = {:.6e}", self.lower_tail);
        let _ = writeln!(s, "upper_tail = {:.6e}", self.upper_tail);
        let _ = writeln!(s, "upper_bound = {:.6e}", self.upper_bound());
        s
    }

    /// Probe × scale matrix of oscillations.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("probe,x1,x2,x3");
        for j in self.j_min..=self.j_max {
            let _ = write!(s, ",j{j}");
        }
        s.push_str(",sum\n");
        for (k, (x, row)) in self.probes.iter().zip(&self.profile).enumerate() {
            let _ = write!(s, "{k},{:.6},{:.6},{:.6}", x[0], x[1], x[2]);
            for v in row {
                let _ = write!(s, ",{v:.10e}");
            }
            let _ = writeln!(s, ",{:.10e}", self.per_probe[k]);
        }
        s
    }
}

fn weighted_sum(terms: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Generalized Campanato seminorm over a probe set and scale window.
pub fn seminorm(
    f: &CompositeField,
    params: SeminormParams,
    probes: &[[f64; 3]],
    j_range: RangeInclusive<i32>,
) -> Result<SeminormReport> {
    let SeminormParams { s, q, p, degree, mode, local_norm } = params;
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidExponent(q));
    }
    check_p(p, mode)?;
    if probes.is_empty() {
        return Err(invalid("empty probe set"));
    }
    let (j_min, j_max) = (*j_range.start(), *j_range.end());
    if j_min > j_max {
        return Err(invalid("empty scale window"));
    }
    if let Some(spec) = f.spec() {
        if (j_max as f64).exp2() > spec.period() {
            return Err(Error::Unresolvable(format!(
                "largest scale 2^{j_max} exceeds the box width {}",
                spec.period()
            )));
        }
    }
    let mut profile = Vec::with_capacity(probes.len());
    let mut per_probe = Vec::with_capacity(probes.len());
    for x0 in probes {
        let mut row = Vec::with_capacity((j_max - j_min + 1) as usize);
        for j in j_min..=j_max {
            row.push(oscillation(f, p, degree, &x0[..f.n()], (j as f64).exp2(), mode)?);
        }
        let total = weighted_sum(
            row.iter().enumerate().map(|(k, o)| (-(s * (j_min + k as i32) as f64)).exp2() * o),
            q,
        );
        per_probe.push(total);
        profile.push(row);
    }
    let (argsup, windowed) = per_probe
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if *v > acc.1 { (k, *v) } else { acc });
    let lower_tail = lower_tail_bound(f, params, j_min)?;
    let upper_tail = upper_tail_bound(f, params, probes, j_max)?;
    let local = if local_norm {
        Some(ball_lp_norm(f, p, &[0.0; 3][..f.n()], 1.0)?)
    } else {
        None
    };
    Ok(SeminormReport {
        params,
        value: windowed + local.unwrap_or(0.0),
        local_norm: local,
        per_probe,
        argsup,
        probes: probes.to_vec(),
        j_min,
        j_max,
        profile,
        lower_tail,
        upper_tail,
    })
}

/// Taylor bound `osc ≤ M (√n r)^{N+1} / (N+1)!` with `M = max_{|α|=N+1} sup |D^α f|`,
/// summed over `j < j_min`.
fn lower_tail_bound(f: &CompositeField, params: SeminormParams, j_min: i32) -> Result<f64> {
    let n = f.n();
    let order = params.degree + 1;
    let mut m: f64 = 0.0;
    for alpha in all_multi_indices(n, order) {
        let d = f.partial(&alpha);
        let sup = match (d.grid(), f.spec()) {
            (Some(_), Some(spec)) => d.sup_on(spec),
            _ => {
                // Derivatives of order ≥ 1 of a degree-two polynomial are affine;
                // order ≥ 3 vanishes and order 2 is constant.
                if d.poly().degree() == 0 {
                    d.poly().constant_part().iter().map(|v| v * v).sum::<f64>().sqrt()
                } else {
                    f64::INFINITY
                }
            }
        };
        m = m.max(sup);
    }
    if m == 0.0 {
        return Ok(0.0);
    }
    let fact: f64 = (1..=order).map(|k| k as f64).product();
    let c = m * (n as f64).sqrt().powi(order as i32) / fact;
    let a = order as f64 - params.s;
    if a <= 0.0 || !c.is_finite() {
        return Ok(f64::INFINITY);
    }
    let q = params.q;
    let lead = c * (a * (j_min - 1) as f64).exp2();
    Ok(if q.is_infinite() {
        lead
    } else {
        lead * (1.0 / (1.0 - (-a * q).exp2())).powf(1.0 / q)
    })
}

fn all_multi_indices(n: usize, order: usize) -> Vec<[u8; 3]> {
    let mut out = Vec::new();
    let max = order as u8;
    for a in 0..=max {
        for b in 0..=max {
            for c in 0..=(if n == 3 { max } else { 0 }) {
                if (a + b + c) as usize == order {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// Bound for `j > j_max`: the polynomial part is evaluated exactly and the grid
/// part is bounded by its sup norm or its averaged `L^p` mass.
fn upper_tail_bound(f: &CompositeField, params: SeminormParams, probes: &[[f64; 3]], j_max: i32) -> Result<f64> {
    let SeminormParams { s, q, p, degree, mode, .. } = params;
    let n = f.n();
    let poly = CompositeField::from_poly(f.poly().clone());
    let grid_bound = |r: f64| -> f64 {
        match (f.grid(), f.spec()) {
            (Some(g), Some(spec)) => {
                let sup = g.sup_pointwise_norm();
                match spec.mode {
                    crate::fields::BoundaryMode::Periodic => sup,
                    crate::fields::BoundaryMode::Compact => {
                        if p.is_infinite() {
                            sup
                        } else {
                            let vol = unit_ball_volume(n) * r.powi(n as i32);
                            sup.min(g.lp_norm(p) / vol.powf(1.0 / p))
                        }
                    }
                }
            }
            _ => 0.0,
        }
    };
    let rough = poly.poly().degree() > degree;
    // With N ≥ 1 only the quadratic part survives and its oscillation scales as r².
    let unit_quadratic = if rough && degree >= 1 {
        Some(oscillation(&poly, p, degree, &[0.0; 3][..n], 1.0, mode)?)
    } else {
        None
    };
    let mut worst: f64 = 0.0;
    for x0 in probes {
        let mut terms = Vec::new();
        for k in 1..=60 {
            let j = j_max + k;
            let r = (j as f64).exp2();
            let op = match (rough, unit_quadratic) {
                (false, _) => 0.0,
                (true, Some(o)) => o * r * r,
                (true, None) => oscillation(&poly, p, degree, &x0[..n], r, mode)?,
            };
            terms.push((-(s * j as f64)).exp2() * (op + grid_bound(r)));
        }
        let last = terms[terms.len() - 1];
        let prev = terms[terms.len() - 2];
        let tail = if last == 0.0 {
            weighted_sum(terms.iter().copied(), q)
        } else if last >= prev * (1.0 - 1e-9) {
            f64::INFINITY
        } else if q.is_infinite() {
            terms.iter().copied().fold(0.0, f64::max)
        } else {
            let rho = (last / prev).powf(q);
            let rest = last.powf(q) * rho / (1.0 - rho);
            (terms.iter().map(|t| t.powf(q)).sum::<f64>() + rest).powf(1.0 / q)
        };
        worst = worst.max(tail);
    }
    Ok(worst)
}

/// Seminorm of the zero-mean oscillation with `s = 0, q = ∞, N = 0, p = 2`.
pub fn bmo_seminorm(f: &CompositeField, probes: &[[f64; 3]], j_range: RangeInclusive<i32>) -> Result<SeminormReport> {
    seminorm(f, SeminormParams::new(0.0, f64::INFINITY, 2.0, 0), probes, j_range)
}

/// Homogeneous norm `‖u‖ = |u|_{1,1,2,1} + |P⁰_∞(∇u)|` of a centred field.
#[derive(Debug, Clone)]
pub struct HomogeneousNorm {
    pub value: f64,
    pub seminorm: SeminormReport,
    /// Frobenius norm of the asymptotic gradient.
    pub gradient_at_infinity: f64,
}

pub fn homogeneous_norm(u: &CompositeField, probes: &[[f64; 3]], j_range: RangeInclusive<i32>) -> Result<HomogeneousNorm> {
    let u0 = u.value_at_origin();
    let size = u0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = 1.0 + u.poly().max_abs_coeff() + u.grid().map_or(0.0, |g| g.sup_norm());
    if size > 1e-9 * scale {
        return Err(Error::NotCentered(size));
    }
    homogeneous_norm_unchecked(u, probes, j_range)
}

/// [`homogeneous_norm`] without the centring check (used for differences).
pub fn homogeneous_norm_unchecked(
    u: &CompositeField,
    probes: &[[f64; 3]],
    j_range: RangeInclusive<i32>,
) -> Result<HomogeneousNorm> {
    let seminorm = seminorm(u, SeminormParams::new(1.0, 1.0, 2.0, 1), probes, j_range)?;
    let a = u.poly().linear_matrix();
    let gradient_at_infinity = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(HomogeneousNorm { value: seminorm.value + gradient_at_infinity, seminorm, gradient_at_infinity })
}

/// Homogeneous degree-`N` part of the polynomial component; the grid part has
/// no polynomial asymptotics.
pub fn asymptotic_polynomial(f: &CompositeField, degree: usize) -> Result<PolynomialField> {
    if degree > 2 {
        return Err(invalid("asymptotic polynomials are available for N ≤ 2"));
    }
    Ok(f.poly().homogeneous_part(degree))
}

/// `Ṗ^N_{0,2^m}(f) = Σ_{|α|=N} [f]^α_{0,2^m} x^α / α!`, whose limit as `m → ∞`
/// is [`asymptotic_polynomial`].
pub fn asymptotic_polynomial_at_scale(f: &CompositeField, degree: usize, m: i32) -> Result<PolynomialField> {
    let n = f.n();
    let r = (m as f64).exp2();
    let s = BallSamples::for_moments(f, &[0.0; 3][..n], r)?;
    let alphas: Vec<[u8; 3]> = monomials(n).iter().copied().filter(|e| monomial_degree(e) == degree).collect();
    let mut p = PolynomialField::zeros(n, f.out_dim());
    for c in 0..f.out_dim() {
        let mom = s.scaled_moments(f, c, &alphas);
        for (e, v) in alphas.iter().zip(mom) {
            let fact: f64 = e.iter().map(|&k| if k == 2 { 2.0 } else { 1.0 }).product();
            p.set(c, e, v / r.powi(degree as i32) / fact);
        }
    }
    Ok(p)
}

/// Result of [`growth_check`].
#[derive(Debug, Clone)]
pub struct GrowthReport {
    /// Smallest `c` with `|f(x)| ≤ c ‖f‖ envelope(|x|)` over the sampled points.
    pub c_emp: f64,
    pub norm: f64,
    /// Fitted power of `max_{|x|=R} |f|` at the largest radii.
    pub growth_exponent: f64,
    pub allowed_exponent: f64,
    pub holds: bool,
    /// `(R, max |f|)` along the sampled rays.
    pub samples: Vec<(f64, f64)>,
}

fn ray_directions(n: usize) -> Vec<[f64; 3]> {
    let mut dirs = Vec::new();
    for ax in 0..n {
        for sgn in [-1.0, 1.0] {
            let mut d = [0.0; 3];
            d[ax] = sgn;
            dirs.push(d);
        }
    }
    let corners = 1usize << n;
    for k in 0..corners {
        let mut d = [0.0; 3];
        for ax in 0..n {
            d[ax] = if k >> ax & 1 == 1 { 1.0 } else { -1.0 } / (n as f64).sqrt();
        }
        dirs.push(d);
    }
    dirs
}

/// Checks pointwise growth `|f(x)| ≲ ‖f‖ (1 + |x|^s)` for `N < s < N+1`, or
/// `‖f‖ (1 + log(1+|x|)^{1/q'} |x|^N)` for `s = N`.
pub fn growth_check(
    f: &CompositeField,
    params: SeminormParams,
    probes: &[[f64; 3]],
    j_range: RangeInclusive<i32>,
) -> Result<GrowthReport> {
    let n = f.n();
    let rep = seminorm(f, params.with_local_norm(true), probes, j_range)?;
    let norm = rep.value;
    let nn = params.degree as f64;
    let log_case = (params.s - nn).abs() < 1e-12;
    let inv_qprime = if params.q.is_infinite() { 1.0 } else { 1.0 - 1.0 / params.q };
    let envelope = |r: f64| {
        if log_case {
            1.0 + (1.0 + r).ln().powf(inv_qprime) * r.powf(nn)
        } else {
            1.0 + r.powf(params.s)
        }
    };
    let dirs = ray_directions(n);
    let mut samples = Vec::new();
    let mut c_emp: f64 = 0.0;
    for k in 0..=12 {
        let r = (k as f64).exp2();
        let mut best: f64 = 0.0;
        for d in &dirs {
            let x: Vec<f64> = d[..n].iter().map(|v| v * r).collect();
            let v = f.eval(&x);
            best = best.max(v.iter().map(|a| a * a).sum::<f64>().sqrt());
        }
        samples.push((r, best));
        c_emp = c_emp.max(best / (norm.max(f64::MIN_POSITIVE) * envelope(r)));
    }
    let len = samples.len();
    let (r1, v1) = samples[len - 3];
    let (r2, v2) = samples[len - 1];
    let growth_exponent = if v1 > 0.0 && v2 > 0.0 { (v2 / v1).ln() / (r2 / r1).ln() } else { 0.0 };
    let allowed_exponent = if log_case { nn } else { params.s };
    Ok(GrowthReport {
        c_emp,
        norm,
        growth_exponent,
        allowed_exponent,
        holds: growth_exponent <= allowed_exponent + 0.1,
        samples,
    })
}

/// Result of [`lipschitz_embedding_check`].
#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    /// `sup |∇u|` (Frobenius).
    pub lhs: f64,
    /// `|u|_{1,1,2,1} + ‖u‖_{L²(B(1))}`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Compares `‖∇u‖_∞` with the inhomogeneous `(s, q, p, N) = (1, 1, 2, 1)` norm.
pub fn lipschitz_embedding_check(
    u: &CompositeField,
    probes: &[[f64; 3]],
    j_range: RangeInclusive<i32>,
) -> Result<EmbeddingReport> {
    let grad = u.gradient();
    let lhs = if u.poly().degree() > 1 {
        f64::INFINITY
    } else {
        match u.spec() {
            Some(spec) => grad.sup_on(spec),
            None => grad.poly().constant_part().iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    };
    let rep = seminorm(u, SeminormParams::new(1.0, 1.0, 2.0, 1).with_local_norm(true), probes, j_range)?;
    Ok(EmbeddingReport { lhs, rhs: rep.value, ratio: lhs / rep.value })
}

/// Coarse probe lattice suited to a grid: `per_axis` centres spanning half the box.
pub fn grid_probes(spec: &GridSpec, per_axis: usize) -> Vec<[f64; 3]> {
    lattice_probes(spec.n, 0.5 * spec.half_width, per_axis)
}

/// Number of coefficients of a degree-`N` polynomial (exposed for reports).
pub fn polynomial_dimension(n: usize, degree: usize) -> usize {
    monomial_count(n, degree)
}
