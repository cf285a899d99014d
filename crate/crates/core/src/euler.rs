//! Constructive Euler solver: backward characteristics, semi-Lagrangian
//! transport with nonlocal pressure forcing, the fixed-point map on short
//! windows, and the continuation monitor.
//!
//! A window of length `T0 / 4` with `T0 = 1 / (c ‖v‖)` is solved by Picard
//! iteration of the map `u ↦ v`, where `v` solves
//! `∂_t v + (ℙu · ∇) v = -∇Π(ℙu, u)` with the window's initial value. The
//! polynomial part of every field is advanced exactly along the affine flow
//! of the advector's polynomial part; only the localized remainder is
//! interpolated.

use crate::campanato::{self, SeminormParams};
use crate::error::{invalid, Error, Result};
use crate::fields::{BoundaryMode, CompositeField, GridField, GridSpec, PolynomialField};
use crate::linearflows::{fit_blowup, BlowUp, EquivalenceShift, RiccatiSample};
use crate::potential::{divergence_sup, helmholtz_project, pressure_gradient_at};
use nalgebra::DMatrix;
use std::borrow::Cow;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

/// Velocity given pointwise in space and time.
pub trait VelocityPath {
    fn dim(&self) -> usize;
    fn velocity(&self, x: &[f64], t: f64, out: &mut [f64]);
}

impl VelocityPath for CompositeField {
    fn dim(&self) -> usize {
        self.n()
    }

    fn velocity(&self, x: &[f64], _t: f64, out: &mut [f64]) {
        self.eval_into(x, out);
    }
}

/// Closure-backed velocity.
pub struct FnPath<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], f64, &mut [f64])> VelocityPath for FnPath<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn velocity(&self, x: &[f64], t: f64, out: &mut [f64]) {
        (self.f)(x, t, out)
    }
}

/// Fields sampled at increasing times, interpolated by cubic Lagrange
/// polynomials through the four nearest samples.
#[derive(Debug, Clone)]
pub struct FieldPath {
    pub times: Vec<f64>,
    pub fields: Vec<CompositeField>,
}

fn field_size(f: &CompositeField) -> f64 {
    f.poly().max_abs_coeff() + f.grid().map_or(0.0, |g| g.sup_norm())
}

/// Largest polynomial coefficient plus grid sup-norm of the difference.
pub fn field_distance(a: &CompositeField, b: &CompositeField) -> Result<f64> {
    Ok(field_size(&a.sub(b)?))
}

impl FieldPath {
    pub fn new(times: Vec<f64>, fields: Vec<CompositeField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::TimeGridMismatch);
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("path times must increase"));
        }
        Ok(Self { times, fields })
    }

    pub fn constant(v: &CompositeField, times: &[f64]) -> Self {
        Self { times: times.to_vec(), fields: vec![v.clone(); times.len()] }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &CompositeField {
        self.fields.last().expect("nonempty path")
    }

    fn stencil(&self, t: f64) -> Vec<(usize, f64)> {
        let len = self.times.len();
        let tol = 1e-12 * (1.0 + t.abs());
        if let Some(i) = self.times.iter().position(|s| (s - t).abs() <= tol) {
            return vec![(i, 1.0)];
        }
        let width = len.min(4);
        let i = self.times.partition_point(|s| *s <= t);
        let start = i.saturating_sub(width / 2).min(len - width);
        let nodes = &self.times[start..start + width];
        (0..width)
            .map(|a| {
                let mut w = 1.0;
                for b in 0..width {
                    if b != a {
                        w *= (t - nodes[b]) / (nodes[a] - nodes[b]);
                    }
                }
                (start + a, w)
            })
            .collect()
    }

    /// Interpolated field at time `t`.
    pub fn at(&self, t: f64) -> Result<CompositeField> {
        let st = self.stencil(t);
        if st.len() == 1 {
            return Ok(self.fields[st[0].0].clone());
        }
        let refs: Vec<&CompositeField> = st.iter().map(|(i, _)| &self.fields[*i]).collect();
        let ws: Vec<f64> = st.iter().map(|(_, w)| *w).collect();
        CompositeField::combine(&refs, &ws)
    }

    /// Max over samples of [`field_distance`].
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(Error::TimeGridMismatch);
        }
        let mut d: f64 = 0.0;
        for (a, b) in self.fields.iter().zip(&other.fields) {
            d = d.max(field_distance(a, b)?);
        }
        Ok(d)
    }

    pub fn size(&self) -> f64 {
        self.fields.iter().map(field_size).fold(0.0, f64::max)
    }
}

impl VelocityPath for FieldPath {
    fn dim(&self) -> usize {
        self.fields[0].n()
    }

    fn velocity(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let mut buf = vec![0.0; out.len()];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, w) in self.stencil(t) {
            self.fields[i].eval_into(x, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
    }
}

/// Which end of the interval carries `ξ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceAnchor {
    /// `ξ(t0) = 0`, integrated forward.
    Start,
    /// `ξ(t1) = 0`, integrated backward.
    End,
}

/// Solves `ξ̇ = v(x0 + ξ, τ)` on `[t0, t1]` with classical Runge–Kutta on
/// `steps` equal steps. `ξ̈` is the second-order finite difference of `ξ̇`.
pub fn characteristic_trace(
    v: &dyn VelocityPath,
    x0: &[f64],
    t0: f64,
    t1: f64,
    steps: usize,
    anchor: TraceAnchor,
) -> Result<EquivalenceShift> {
    let n = v.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if steps == 0 || !(t1 > t0) {
        return Err(invalid("characteristic trace needs t1 > t0 and at least one step"));
    }
    let h = (t1 - t0) / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|k| t0 + k as f64 * h).collect();
    let vel = |xi: &[f64], t: f64| {
        let x: Vec<f64> = x0.iter().zip(xi).map(|(a, b)| a + b).collect();
        let mut out = vec![0.0; n];
        v.velocity(&x, t, &mut out);
        out
    };
    let add = |a: &[f64], k: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + k * y).collect() };
    let mut xi = vec![vec![0.0; n]; steps + 1];
    let order: Vec<usize> = match anchor {
        TraceAnchor::Start => (0..steps).collect(),
        TraceAnchor::End => (1..=steps).rev().collect(),
    };
    let dir = if anchor == TraceAnchor::Start { 1.0 } else { -1.0 };
    for k in order {
        let (from, to) = if dir > 0.0 { (k, k + 1) } else { (k, k - 1) };
        let (t, hh) = (times[from], dir * h);
        let y = &xi[from];
        let k1 = vel(y, t);
        let k2 = vel(&add(y, 0.5 * hh, &k1), t + 0.5 * hh);
        let k3 = vel(&add(y, 0.5 * hh, &k2), t + 0.5 * hh);
        let k4 = vel(&add(y, hh, &k3), t + hh);
        let next: Vec<f64> = (0..n).map(|i| y[i] + hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        xi[to] = next;
    }
    let xi_dot: Vec<Vec<f64>> = xi.iter().zip(&times).map(|(y, t)| vel(y, *t)).collect();
    let mut xi_ddot = vec![vec![0.0; n]; steps + 1];
    if steps >= 2 {
        for k in 0..=steps {
            for i in 0..n {
                xi_ddot[k][i] = if k == 0 {
                    (-3.0 * xi_dot[0][i] + 4.0 * xi_dot[1][i] - xi_dot[2][i]) / (2.0 * h)
                } else if k == steps {
                    (3.0 * xi_dot[k][i] - 4.0 * xi_dot[k - 1][i] + xi_dot[k - 2][i]) / (2.0 * h)
                } else {
                    (xi_dot[k + 1][i] - xi_dot[k - 1][i]) / (2.0 * h)
                };
            }
        }
    }
    Ok(EquivalenceShift { times, xi, xi_dot, xi_ddot })
}

/// Affine map `x ↦ M x + d`.
#[derive(Debug, Clone)]
struct Affine {
    m: Vec<f64>,
    d: Vec<f64>,
}

impl Affine {
    fn identity(n: usize) -> Self {
        let mut m = vec![0.0; n * n];
        for k in 0..n {
            m[k * n + k] = 1.0;
        }
        Self { m, d: vec![0.0; n] }
    }

    fn axpy(&self, k: f64, o: &Self) -> Self {
        Self {
            m: self.m.iter().zip(&o.m).map(|(a, b)| a + k * b).collect(),
            d: self.d.iter().zip(&o.d).map(|(a, b)| a + k * b).collect(),
        }
    }

    /// `x ↦ B (M x + d) + c`.
    fn apply_field(&self, b: &[f64], c: &[f64]) -> Self {
        let n = c.len();
        let mut m = vec![0.0; n * n];
        let mut d = c.to_vec();
        for i in 0..n {
            for k in 0..n {
                let bik = b[i * n + k];
                if bik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    m[i * n + j] += bik * self.m[k * n + j];
                }
                d[i] += bik * self.d[k];
            }
        }
        Self { m, d }
    }
}

/// One backward Runge–Kutta step of length `h` using velocity levels
/// `lv = [end, middle, start]`.
fn rk4_back<T>(x: &T, h: f64, lv: [usize; 3], vel: &impl Fn(usize, &T) -> T, axpy: &impl Fn(&T, f64, &T) -> T) -> T {
    let k1 = vel(lv[0], x);
    let k2 = vel(lv[1], &axpy(x, -0.5 * h, &k1));
    let k3 = vel(lv[1], &axpy(x, -0.5 * h, &k2));
    let k4 = vel(lv[2], &axpy(x, -h, &k3));
    let s = axpy(&axpy(&axpy(&k1, 2.0, &k2), 2.0, &k3), 1.0, &k4);
    axpy(x, -h / 6.0, &s)
}

fn common_spec(fields: &[&CompositeField]) -> Result<Option<GridSpec>> {
    let mut spec: Option<GridSpec> = None;
    for f in fields {
        if let Some(s) = f.spec() {
            match &spec {
                None => spec = Some(*s),
                Some(t) if !t.same_geometry(s) => return Err(invalid("grid geometries differ")),
                _ => {}
            }
        }
    }
    Ok(spec)
}

/// Advector or forcing as a function of the offset into the step.
type Level<'a> = &'a dyn Fn(f64) -> Result<Cow<'a, CompositeField>>;

/// Semi-Lagrangian step over `[t, t + dt]`; `u(τ)` and `g(τ)` give the
/// advector and the forcing at time `t + τ`.
///
/// The foot of the characteristic through each node comes from `2q` backward
/// Runge–Kutta substeps, with `q` the CFL number rounded up; the forcing is
/// integrated along it with Simpson's rule. The same substeps applied to the
/// affine part of the advector give an affine foot map, which carries the
/// polynomial part exactly.
fn transport_core(f: &CompositeField, u: Level<'_>, g: Level<'_>, dt: f64) -> Result<CompositeField> {
    let n = f.n();
    let g3 = [g(0.0)?, g(0.5 * dt)?, g(dt)?];
    let u3 = [u(0.0)?, u(0.5 * dt)?, u(dt)?];
    for w in &u3 {
        if w.n() != n || w.out_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w.out_dim() });
        }
    }
    for w in &g3 {
        if w.n() != n || w.out_dim() != f.out_dim() {
            return Err(Error::DimensionMismatch { expected: f.out_dim(), got: w.out_dim() });
        }
    }
    if u3.iter().chain(&g3).any(|w| w.poly().degree() > 1) {
        return Err(invalid("transport needs affine advector and forcing polynomials"));
    }
    let all: Vec<&CompositeField> = std::iter::once(f).chain(u3.iter().map(|c| c.as_ref())).chain(g3.iter().map(|c| c.as_ref())).collect();
    let spec = common_spec(&all)?;
    let mut q = 1usize;
    if let Some(s) = &spec {
        if s.mode == BoundaryMode::Periodic && all.iter().any(|w| w.poly().degree() > 0) {
            return Err(invalid("periodic transport needs constant polynomial parts"));
        }
        let mut sup: f64 = 0.0;
        for w in &u3 {
            sup = sup.max(w.sup_on(s));
        }
        let cfl = dt * sup / s.h();
        if cfl > 4.0 {
            return Err(Error::Cfl(cfl));
        }
        q = (cfl.ceil() as usize).max(1);
    }
    // Advector at t + j dt / (4q); levels 0, 2q and 4q are already known.
    let levels = 4 * q;
    let mut ul: Vec<Cow<'_, CompositeField>> = Vec::with_capacity(levels + 1);
    let [u_start, u_mid, u_end] = u3;
    let (mut u_start, mut u_mid, mut u_end) = (Some(u_start), Some(u_mid), Some(u_end));
    for j in 0..=levels {
        ul.push(if j == 0 {
            u_start.take().expect("start level")
        } else if j == 2 * q {
            u_mid.take().expect("middle level")
        } else if j == levels {
            u_end.take().expect("end level")
        } else {
            u(dt * j as f64 / levels as f64)?
        });
    }
    let sub = 0.5 * dt / q as f64;
    let march = |from: usize, to: usize, x: &Affine| {
        let mut y = x.clone();
        for i in from..to {
            let top = levels - 2 * i;
            y = rk4_back(&y, sub, [top, top - 1, top - 2], &|lvl: usize, x: &Affine| {
                x.apply_field(&ul[lvl].poly().linear_matrix(), &ul[lvl].poly().constant_part())
            }, &|a: &Affine, k: f64, b: &Affine| a.axpy(k, b));
        }
        y
    };
    let a_half = march(0, q, &Affine::identity(n));
    let a_zero = march(q, 2 * q, &a_half);

    let mut poly = f.poly().compose_affine(&a_zero.m, &a_zero.d)?;
    let forcing = g3[0]
        .poly()
        .compose_affine(&a_zero.m, &a_zero.d)?
        .axpy(4.0, &g3[1].poly().compose_affine(&a_half.m, &a_half.d)?)?
        .add(g3[2].poly())?;
    poly = poly.axpy(dt / 6.0, &forcing)?;

    let Some(spec) = spec else {
        return Ok(CompositeField::from_poly(poly));
    };

    let out = f.out_dim();
    let pvel = |lvl: usize, p: &[f64; 3]| {
        let mut o = [0.0; 3];
        ul[lvl].eval_into_order(&p[..n], &mut o[..n], 4);
        o
    };
    let paxpy = |a: &[f64; 3], k: f64, b: &[f64; 3]| [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]];
    let mut fv = vec![0.0; out];
    let mut gv = vec![0.0; out];
    let mut pv = vec![0.0; out];
    let grid = GridField::from_fn(spec, out, |x, res| {
        let mut y = *x;
        let mut xh = y;
        for i in 0..2 * q {
            let top = levels - 2 * i;
            y = rk4_back(&y, sub, [top, top - 1, top - 2], &pvel, &paxpy);
            if i + 1 == q {
                xh = y;
            }
        }
        let x0 = y;
        f.eval_into_order(&x0[..n], &mut fv, 6);
        for (pt, w, k) in [(&x0, 1.0, 0usize), (&xh, 4.0, 1), (x, 1.0, 2)] {
            g3[k].eval_into(&pt[..n], &mut gv);
            for c in 0..out {
                fv[c] += dt / 6.0 * w * gv[c];
            }
        }
        poly.eval_into(&x[..n], &mut pv);
        for c in 0..out {
            res[c] = fv[c] - pv[c];
        }
    });
    CompositeField::new(poly, Some(grid))
}

/// One step with a frozen advector `u` and forcing `g`.
pub fn transport_step(f: &CompositeField, u: &CompositeField, g: &CompositeField, dt: f64) -> Result<CompositeField> {
    transport_core(f, &|_| Ok(Cow::Borrowed(u)), &|_| Ok(Cow::Borrowed(g)), dt)
}

/// One step over `[t, t + dt]` with time-dependent advector and forcing.
pub fn transport_step_path(f: &CompositeField, u: &FieldPath, g: &FieldPath, t: f64, dt: f64) -> Result<CompositeField> {
    transport_core(f, &|tau| u.at(t + tau).map(Cow::Owned), &|tau| g.at(t + tau).map(Cow::Owned), dt)
}

/// The map `u ↦ v` with the pressure anchored at the origin.
pub fn fixed_point_map(u: &FieldPath, v0: &CompositeField) -> Result<FieldPath> {
    let n = v0.n();
    fixed_point_map_anchored(u, v0, &|_| vec![0.0; n])
}

/// The map `u ↦ v`: transport of `v0` by `ℙu` with forcing `-∇Π(ℙu, u)`,
/// the pressure gradient vanishing at `anchor(t)`. Every step is followed by
/// a Helmholtz projection.
pub fn fixed_point_map_anchored(u: &FieldPath, v0: &CompositeField, anchor: &dyn Fn(f64) -> Vec<f64>) -> Result<FieldPath> {
    let mut adv = Vec::with_capacity(u.len());
    let mut force = Vec::with_capacity(u.len());
    for (t, uk) in u.times.iter().zip(&u.fields) {
        let a = helmholtz_project(uk)?;
        force.push(pressure_gradient_at(&a, uk, &anchor(*t))?.scale(-1.0));
        adv.push(a);
    }
    let adv = FieldPath { times: u.times.clone(), fields: adv };
    let force = FieldPath { times: u.times.clone(), fields: force };
    let mut out = Vec::with_capacity(u.len());
    out.push(v0.clone());
    for k in 0..u.len() - 1 {
        let t = u.times[k];
        let dt = u.times[k + 1] - t;
        let next = transport_step_path(&out[k], &adv, &force, t, dt)?;
        out.push(helmholtz_project(&next)?);
    }
    Ok(FieldPath { times: u.times.clone(), fields: out })
}

/// `‖𝒯u₁ - 𝒯u₂‖ / ‖u₁ - u₂‖` in the path distance.
pub fn contraction_ratio(u1: &FieldPath, u2: &FieldPath, v0: &CompositeField) -> Result<f64> {
    let du = u1.distance(u2)?;
    if du == 0.0 {
        return Ok(0.0);
    }
    let t1 = fixed_point_map(u1, v0)?;
    let t2 = fixed_point_map(u2, v0)?;
    Ok(t1.distance(&t2)? / du)
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Picard stops when successive paths differ by less than this, relative.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Constant `c` in the window length `1 / (4 c ‖v‖)`.
    pub window_c: f64,
    pub min_steps_per_window: usize,
    /// Probes and scales for the window norm and the metrics; the scale
    /// window defaults to the resolvable range of the grid.
    pub probes: Vec<[f64; 3]>,
    pub j_range: Option<RangeInclusive<i32>>,
    /// Keep every `store_every`-th step as a full state.
    pub store_every: usize,
    /// Evaluate vorticity BMO and oscillation tails on stored states.
    pub metrics: bool,
    pub beta_ks: Vec<i32>,
    /// Stop once the Frobenius norm of the linear part exceeds this.
    pub blowup_threshold: f64,
    /// Solve uncentred data in the moving frame and shift back.
    pub galilean: bool,
    pub max_windows: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            horizon: 1.0,
            fp_tol: 1e-10,
            fp_max_iter: 60,
            window_c: DEFAULT_WINDOW_C,
            min_steps_per_window: 4,
            probes: vec![[0.0; 3]],
            j_range: None,
            store_every: 1,
            metrics: false,
            beta_ks: vec![0],
            blowup_threshold: 1e6,
            galilean: true,
            max_windows: 1_000_000,
        }
    }
}

/// Window constant fixed from [`calibrate_window_constant`] on the default
/// divergence-free corpus.
pub const DEFAULT_WINDOW_C: f64 = 1.0;

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.fp_tol > 0.0) {
            return Err(invalid("fixed-point tolerance must be positive"));
        }
        if !(self.horizon > 0.0) || !(self.window_c > 0.0) {
            return Err(invalid("horizon and window constant must be positive"));
        }
        if self.fp_max_iter == 0 || self.min_steps_per_window == 0 || self.store_every == 0 {
            return Err(invalid("iteration and step counts must be positive"));
        }
        if self.probes.is_empty() {
            return Err(invalid("empty probe set"));
        }
        Ok(())
    }

    /// Explicit scale window or the resolvable one for `v`.
    pub fn scales_for(&self, v: &CompositeField) -> RangeInclusive<i32> {
        if let Some(r) = &self.j_range {
            return r.clone();
        }
        match v.spec() {
            Some(s) => resolvable_scales(s),
            None => -2..=2,
        }
    }
}

/// Scales `2^j` from four grid cells up to half the box width.
pub fn resolvable_scales(spec: &GridSpec) -> RangeInclusive<i32> {
    let lo = (4.0 * spec.h()).log2().ceil() as i32;
    let hi = (0.5 * spec.period()).log2().floor() as i32;
    lo..=hi.max(lo)
}

/// Continuation diagnostics of one state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContinuationMetrics {
    /// `|ω|_BMO`; `None` when metrics are switched off for grid data.
    pub omega_bmo: Option<f64>,
    /// Frobenius norm of the asymptotic gradient.
    pub pinf_grad: f64,
    /// Trapezoid integral of `omega_bmo + pinf_grad` up to this state.
    pub integral: f64,
    /// `(k, sup_x0 Σ_{j ≥ k} 2^{-j} osc_{2,1}(v; x0, 2^j))`.
    pub beta_tails: Vec<(i32, f64)>,
}

/// Diagnostics of `v` with the running integral left at zero.
pub fn continuation_metrics(
    v: &CompositeField,
    probes: &[[f64; 3]],
    j_range: RangeInclusive<i32>,
    ks: &[i32],
) -> Result<ContinuationMetrics> {
    let a = v.poly().linear_matrix();
    let pinf_grad = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let affine = v.poly().degree() <= 1 && v.is_polynomial();
    let (j_min, j_max) = (*j_range.start(), *j_range.end());
    if affine {
        return Ok(ContinuationMetrics {
            omega_bmo: Some(0.0),
            pinf_grad,
            integral: 0.0,
            beta_tails: ks.iter().map(|&k| (k, 0.0)).collect(),
        });
    }
    let omega = campanato::bmo_seminorm(&v.vorticity()?, probes, j_range)?.value;
    let mut beta_tails = Vec::with_capacity(ks.len());
    for &k in ks {
        let lo = k.max(j_min);
        let b = if lo > j_max {
            0.0
        } else {
            campanato::seminorm(v, SeminormParams::new(1.0, 1.0, 2.0, 1), probes, lo..=j_max)?.value
        };
        beta_tails.push((k, b));
    }
    Ok(ContinuationMetrics { omega_bmo: Some(omega), pinf_grad, integral: 0.0, beta_tails })
}

/// Full solution state.
#[derive(Debug, Clone)]
pub struct EulerState {
    pub t: f64,
    pub v: CompositeField,
    /// `∇π = ∇Π(v, v)`.
    pub pgrad: CompositeField,
    pub metrics: ContinuationMetrics,
}

/// Lightweight per-step record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// Row-major linear part of `v`.
    pub linear: Vec<f64>,
    pub pinf_grad: f64,
    /// Trapezoid integral of `pinf_grad`.
    pub pinf_integral: f64,
    pub divergence: f64,
}

/// Per-window Picard statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub t_start: f64,
    pub length: f64,
    pub steps: usize,
    pub dt: f64,
    /// Homogeneous norm of the window's initial value.
    pub norm: f64,
    pub iterations: usize,
    /// Largest ratio of successive Picard differences (0 if not observed).
    pub ratio: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct EulerTrajectory {
    pub states: Vec<EulerState>,
    pub steps: Vec<StepRecord>,
    pub windows: Vec<WindowReport>,
    pub blowup: Option<BlowUp>,
    pub window_c: f64,
    /// Constant velocity of the moving frame when the data were uncentred.
    pub frame_velocity: Option<Vec<f64>>,
}

impl EulerTrajectory {
    pub fn last(&self) -> &EulerState {
        self.states.last().expect("trajectory has a state")
    }

    /// Linear part at the last step as an `n × n` matrix.
    pub fn final_linear_part(&self) -> DMatrix<f64> {
        let rec = self.steps.last().expect("trajectory has a step");
        let n = (rec.linear.len() as f64).sqrt().round() as usize;
        DMatrix::from_row_slice(n, n, &rec.linear)
    }

    pub fn metrics_csv(&self) -> String {
        let ks: Vec<i32> = self.states.first().map(|s| s.metrics.beta_tails.iter().map(|b| b.0).collect()).unwrap_or_default();
        let mut s = String::from("t,omega_bmo,pinf_grad,integral");
        for k in &ks {
            let _ = write!(s, ",beta_{k}");
        }
        s.push('\n');
        for st in &self.states {
            let m = &st.metrics;
            let om = m.omega_bmo.map_or(String::from("nan"), |v| format!("{v:.12e}"));
            let _ = write!(s, "{:.12e},{om},{:.12e},{:.12e}", st.t, m.pinf_grad, m.integral);
            for (_, b) in &m.beta_tails {
                let _ = write!(s, ",{b:.12e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn steps_csv(&self) -> String {
        let mut s = String::from("t,pinf_grad,pinf_integral,divergence\n");
        for r in &self.steps {
            let _ = writeln!(s, "{:.12e},{:.12e},{:.12e},{:.6e}", r.t, r.pinf_grad, r.pinf_integral, r.divergence);
        }
        s
    }
}

fn window_norm(v: &CompositeField, cfg: &SolverConfig) -> Result<f64> {
    let a = v.poly().linear_matrix();
    let lin = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if v.poly().degree() <= 1 && v.is_polynomial() {
        return Ok(lin);
    }
    Ok(campanato::homogeneous_norm_unchecked(v, &cfg.probes, cfg.scales_for(v))?.value)
}

/// Step count and step size of the next window.
fn plan_window(norm: f64, remaining: f64, cfg: &SolverConfig) -> (usize, f64) {
    let window = if norm > 0.0 { 0.25 / (cfg.window_c * norm) } else { f64::INFINITY };
    let k_min = cfg.min_steps_per_window;
    if window >= remaining {
        let by_dt = ((remaining / cfg.dt) - 1e-9).ceil().max(1.0);
        let by_window = (k_min as f64 * remaining / window - 1e-9).ceil();
        let k = by_dt.max(by_window) as usize;
        (k, remaining / k as f64)
    } else if window >= k_min as f64 * cfg.dt {
        ((window / cfg.dt).floor() as usize, cfg.dt)
    } else {
        (k_min, window / k_min as f64)
    }
}

/// Picard iteration on one window.
fn picard(
    v_start: &CompositeField,
    times: &[f64],
    anchor: &dyn Fn(f64) -> Vec<f64>,
    cfg: &SolverConfig,
) -> Result<(FieldPath, usize, f64, f64)> {
    let mut path = FieldPath::constant(v_start, times);
    let mut prev: Option<f64> = None;
    let mut worst: f64 = 0.0;
    let mut ratio = 0.0;
    for it in 1..=cfg.fp_max_iter {
        let next = fixed_point_map_anchored(&path, v_start, anchor)?;
        let diff = next.distance(&path)? / (1.0 + next.size());
        if let Some(p) = prev {
            if p > 0.0 {
                ratio = diff / p;
                worst = worst.max(ratio);
            }
        }
        path = next;
        if diff <= cfg.fp_tol {
            return Ok((path, it, worst, diff));
        }
        if it >= 4 && ratio >= 1.0 {
            return Err(Error::NoConvergence { iterations: it, ratio });
        }
        prev = Some(diff);
    }
    Err(Error::NoConvergence { iterations: cfg.fp_max_iter, ratio })
}

fn centred_size(v: &CompositeField) -> (Vec<f64>, f64) {
    let a = v.value_at_origin();
    let size = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    (a, size)
}

/// Solves the Euler equations from the divergence-free datum `v0` on
/// `[0, horizon]` (or until the linear part blows up).
pub fn solve(v0: &CompositeField, cfg: &SolverConfig) -> Result<EulerTrajectory> {
    cfg.validate()?;
    let n = v0.n();
    if v0.out_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v0.out_dim() });
    }
    let div = divergence_sup(v0)?;
    let scale = 1.0 + field_size(v0) / v0.h().unwrap_or(1.0);
    if div > 1e-6 * scale {
        return Err(Error::NotDivergenceFree(div));
    }
    let (a, size) = centred_size(v0);
    let uncentred = size > 1e-12 * (1.0 + field_size(v0));
    if uncentred && cfg.galilean {
        let w0 = v0.with_poly(v0.poly().sub(&PolynomialField::constant(n, &a))?)?;
        let mut traj = solve_anchored(&w0, cfg, &|_| vec![0.0; n])?;
        for st in &mut traj.states {
            let shift: Vec<f64> = a.iter().map(|x| x * st.t).collect();
            let moved = st.v.translate(&shift);
            st.v = moved.with_poly(moved.poly().add(&PolynomialField::constant(n, &a))?)?;
            st.pgrad = st.pgrad.translate(&shift);
        }
        traj.frame_velocity = Some(a);
        return Ok(traj);
    }
    let a2 = a.clone();
    let anchor = move |t: f64| -> Vec<f64> { a2.iter().map(|x| x * t).collect() };
    let mut traj = solve_anchored(v0, cfg, &anchor)?;
    if uncentred {
        traj.frame_velocity = None;
    }
    Ok(traj)
}

fn state_for(v: CompositeField, t: f64, anchor: &[f64], cfg: &SolverConfig) -> Result<EulerState> {
    let pgrad = pressure_gradient_at(&v, &v, anchor)?;
    let metrics = if cfg.metrics {
        continuation_metrics(&v, &cfg.probes, cfg.scales_for(&v), &cfg.beta_ks)?
    } else {
        let a = v.poly().linear_matrix();
        let pinf_grad = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let omega_bmo = if v.poly().degree() <= 1 && v.is_polynomial() { Some(0.0) } else { None };
        ContinuationMetrics { omega_bmo, pinf_grad, integral: 0.0, beta_tails: Vec::new() }
    };
    Ok(EulerState { t, v, pgrad, metrics })
}

fn step_record(v: &CompositeField, t: f64, prev: Option<&StepRecord>) -> Result<StepRecord> {
    let linear = v.poly().linear_matrix();
    let pinf_grad = linear.iter().map(|x| x * x).sum::<f64>().sqrt();
    let pinf_integral = prev.map_or(0.0, |p| p.pinf_integral + 0.5 * (t - p.t) * (p.pinf_grad + pinf_grad));
    Ok(StepRecord { t, linear, pinf_grad, pinf_integral, divergence: divergence_sup(v)? })
}

fn solve_anchored(v0: &CompositeField, cfg: &SolverConfig, anchor: &dyn Fn(f64) -> Vec<f64>) -> Result<EulerTrajectory> {
    let mut states = vec![state_for(v0.clone(), 0.0, &anchor(0.0), cfg)?];
    let mut steps = vec![step_record(v0, 0.0, None)?];
    let mut windows = Vec::new();
    let mut v = v0.clone();
    let mut t = 0.0;
    let mut count = 0usize;
    let mut blowup = None;
    while cfg.horizon - t > 1e-12 * cfg.horizon.max(1.0) {
        if windows.len() >= cfg.max_windows {
            return Err(invalid(format!("window budget {} exhausted at t = {t}", cfg.max_windows)));
        }
        let norm = window_norm(&v, cfg)?;
        let (k, dt) = plan_window(norm, cfg.horizon - t, cfg);
        let last_window = (t + k as f64 * dt - cfg.horizon).abs() <= 1e-12 * cfg.horizon.max(1.0);
        let times: Vec<f64> = (0..=k)
            .map(|i| if i == k && last_window { cfg.horizon } else { t + i as f64 * dt })
            .collect();
        let (path, iterations, ratio, residual) = picard(&v, &times, anchor, cfg)?;
        windows.push(WindowReport {
            t_start: t,
            length: times[k] - t,
            steps: k,
            dt,
            norm,
            iterations,
            ratio,
            residual,
        });
        for (i, (ti, vi)) in path.times.iter().zip(&path.fields).enumerate().skip(1) {
            count += 1;
            let rec = step_record(vi, *ti, steps.last())?;
            steps.push(rec);
            if count % cfg.store_every == 0 || (i == k && last_window) {
                states.push(state_for(vi.clone(), *ti, &anchor(*ti), cfg)?);
            }
        }
        t = times[k];
        v = path.last().clone();
        if steps.last().is_some_and(|r| r.pinf_grad > cfg.blowup_threshold) {
            let samples: Vec<RiccatiSample> = steps
                .iter()
                .map(|r| {
                    let n = v.n();
                    RiccatiSample { t: r.t, a: DMatrix::from_row_slice(n, n, &r.linear) }
                })
                .collect();
            blowup = fit_blowup(&samples, dt);
            if states.last().is_none_or(|s| s.t < t) {
                states.push(state_for(v.clone(), t, &anchor(t), cfg)?);
            }
            break;
        }
    }
    // Running integral of the continuation quantity over stored states.
    let mut acc = 0.0;
    for i in 0..states.len() {
        if i > 0 {
            let (p, q) = (&states[i - 1], &states[i]);
            let fp = p.metrics.omega_bmo.unwrap_or(0.0) + p.metrics.pinf_grad;
            let fq = q.metrics.omega_bmo.unwrap_or(0.0) + q.metrics.pinf_grad;
            acc += 0.5 * (q.t - p.t) * (fp + fq);
        }
        states[i].metrics.integral = acc;
    }
    Ok(EulerTrajectory { states, steps, windows, blowup, window_c: cfg.window_c, frame_velocity: None })
}

/// Kinetic energy `½ ∫ |v_loc|²` of the grid part (Riemann sum).
pub fn localized_energy(v: &CompositeField) -> f64 {
    v.grid().map_or(0.0, |g| 0.5 * g.lp_norm(2.0).powi(2))
}

/// One row of [`calibrate_window_constant`].
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub c: f64,
    pub worst_ratio: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    /// Smallest `c` of the schedule for which every datum contracts.
    pub c: Option<f64>,
    pub target: f64,
    pub rows: Vec<CalibrationRow>,
}

/// Runs the first window of every datum for each `c` of `schedule` (in
/// increasing order) and returns the smallest `c` whose Picard iterations all
/// converge with successive-difference ratio below `target`.
pub fn calibrate_window_constant(
    corpus: &[CompositeField],
    cfg: &SolverConfig,
    schedule: &[f64],
    target: f64,
) -> Result<CalibrationReport> {
    let mut sorted = schedule.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    for &c in &sorted {
        let mut run = cfg.clone();
        run.window_c = c;
        run.validate()?;
        let mut worst: f64 = 0.0;
        let mut converged = true;
        for v in corpus {
            let norm = window_norm(v, &run)?;
            let (k, dt) = plan_window(norm, f64::INFINITY, &run);
            let times: Vec<f64> = (0..=k).map(|i| i as f64 * dt).collect();
            let n = v.n();
            match picard(v, &times, &|_| vec![0.0; n], &run) {
                Ok((_, _, r, _)) => worst = worst.max(r),
                Err(Error::NoConvergence { ratio, .. }) => {
                    converged = false;
                    worst = worst.max(ratio);
                }
                Err(e) => return Err(e),
            }
        }
        rows.push(CalibrationRow { c, worst_ratio: worst, converged });
        if converged && worst < target {
            return Ok(CalibrationReport { c: Some(c), target, rows });
        }
    }
    Ok(CalibrationReport { c: None, target, rows })
}

/// Result of [`log_inequality_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogInequalityReport {
    pub delta: f64,
    /// `|u|` in the `(1 + δ, 1, 2, 1)` seminorm.
    pub norm_1_delta: f64,
    pub grad_bmo: f64,
    /// `(k, sup_x0 lhs, rhs)` with
    /// `rhs = 2^{δk} |u|_{1+δ} + |∇u|_BMO log(1 + |u|_{1+δ})`.
    pub rows: Vec<(i32, f64, f64)>,
    /// Smallest `c` with `lhs ≤ c · rhs` on every row.
    pub c_min: f64,
    pub holds: bool,
}

/// Logarithmic bound on the low-scale oscillation sum
/// `Σ_{j ≤ k} 2^{-j} osc_{2,1}(u; x0, 2^j)`. The first right-hand term keeps
/// the factor `|u|_{1+δ}` so that both sides scale alike. `holds` compares
/// `c_min` with `c` when given, else requires it to be finite.
pub fn log_inequality_check(
    u: &CompositeField,
    delta: f64,
    ks: &[i32],
    probes: &[[f64; 3]],
    j_range: RangeInclusive<i32>,
    c: Option<f64>,
) -> Result<LogInequalityReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1) (got {delta})")));
    }
    let (j_min, j_max) = (*j_range.start(), *j_range.end());
    let norm = campanato::seminorm(u, SeminormParams::new(1.0 + delta, 1.0, 2.0, 1), probes, j_range.clone())?.value;
    let grad_bmo = campanato::bmo_seminorm(&u.gradient(), probes, j_range)?.value;
    let mut rows = Vec::with_capacity(ks.len());
    let mut c_min: f64 = 0.0;
    for &k in ks {
        let hi = k.min(j_max);
        let lhs = if hi < j_min {
            0.0
        } else {
            campanato::seminorm(u, SeminormParams::new(1.0, 1.0, 2.0, 1), probes, j_min..=hi)?.value
        };
        let rhs = (delta * k as f64).exp2() * norm + grad_bmo * (1.0 + norm).ln();
        let ck = if lhs == 0.0 {
            0.0
        } else if rhs > 0.0 {
            lhs / rhs
        } else {
            f64::INFINITY
        };
        c_min = c_min.max(ck);
        rows.push((k, lhs, rhs));
    }
    let holds = match c {
        Some(c) => c_min <= c,
        None => c_min.is_finite(),
    };
    Ok(LogInequalityReport { delta, norm_1_delta: norm, grad_bmo, rows, c_min, holds })
}

/// Result of [`oscillation_propagation_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationReport {
    /// `(t, |v(t)| / |v0|, ∫_0^t ‖∇v‖_∞)`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Smallest `c ≥ 1` with `|v(t)| ≤ c |v0| exp(c ∫‖∇v‖_∞)` on every row.
    pub c_min: f64,
    pub holds: bool,
}

fn gradient_sup(v: &CompositeField) -> f64 {
    let g = v.gradient();
    match v.spec() {
        Some(s) => g.sup_on(s),
        None => g.poly().constant_part().iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

fn smallest_c(ratio: f64, g: f64) -> f64 {
    if ratio <= 1.0 {
        return 1.0;
    }
    let ok = |c: f64| c * (c * g).exp() >= ratio;
    let (mut lo, mut hi) = (1.0, 2.0);
    while !ok(hi) {
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Propagation of the `(1, 1, 2, 1)` seminorm along stored states against
/// the exponential of the integrated Lipschitz norm.
pub fn oscillation_propagation_check(
    traj: &EulerTrajectory,
    probes: &[[f64; 3]],
    j_range: RangeInclusive<i32>,
) -> Result<PropagationReport> {
    let params = SeminormParams::new(1.0, 1.0, 2.0, 1);
    let first = traj.states.first().ok_or_else(|| invalid("empty trajectory"))?;
    let base = campanato::seminorm(&first.v, params, probes, j_range.clone())?.value;
    let mut rows = Vec::with_capacity(traj.states.len());
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    let mut c_min: f64 = 1.0;
    for st in &traj.states {
        let gs = gradient_sup(&st.v);
        if let Some((pt, pg)) = prev {
            integral += 0.5 * (st.t - pt) * (pg + gs);
        }
        prev = Some((st.t, gs));
        let val = campanato::seminorm(&st.v, params, probes, j_range.clone())?.value;
        let ratio = if base > 0.0 {
            val / base
        } else if val == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        c_min = c_min.max(if ratio.is_finite() { smallest_c(ratio, integral) } else { f64::INFINITY });
        rows.push((st.t, ratio, integral));
    }
    Ok(PropagationReport { rows, c_min, holds: c_min.is_finite() })
}
