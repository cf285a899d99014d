//! Dyadic partition of unity, truncated Calderón–Zygmund operators, anchored
//! Poisson solvers, the Helmholtz–Leray projection and the pressure `∇Π`.
//!
//! Every operator splits its input into the polynomial part, handled in
//! closed form, and the grid part, handled spectrally. Grid solves invert the
//! Laplacian on the torus spanned by the box; for compact data this is the
//! periodic approximation of the free-space solve, and outputs keep the
//! input's boundary mode. Truncated kernels are applied with zero padding, so
//! compact inputs see the exact free-space truncated convolution.

mod kernel;
mod partition;

pub use kernel::{KernelKind, KernelSpec};
pub use partition::{chi, smooth_step, DyadicPartition};

use crate::campanato::mean_polynomial;
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::fields::{monomial_degree, monomials, BoundaryMode, CompositeField, GridField, PolynomialField};
use crate::mollifier::{self, Jet};
use crate::quadrature::{ball_rule_for, cell_integrals};
use rustfft::num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest padded grid size per axis for truncated convolutions.
fn max_padded(n: usize) -> usize {
    if n == 2 {
        4096
    } else {
        256
    }
}

/// Runs `op(k, inputs, outputs)` on every Fourier mode of the components of
/// `g`, where `k` is the derivative wavevector (Nyquist entries zeroed).
fn spectral_map(g: &GridField, outs: usize, op: impl Fn(&[f64; 3], &[Complex64], &mut [Complex64])) -> GridField {
    let spec = *g.spec();
    let sym = g.symbols();
    let ins: Vec<Vec<Complex64>> = (0..g.out_dim()).map(|c| g.spectrum(c)).collect();
    let mut res = vec![vec![ZERO; spec.len()]; outs];
    let mut a = vec![ZERO; ins.len()];
    let mut b = vec![ZERO; outs];
    fft::for_each_index(spec.m, spec.n, |flat, idx| {
        let mut k = [0.0; 3];
        for ax in 0..spec.n {
            k[ax] = sym[idx[ax]];
        }
        for (c, s) in ins.iter().enumerate() {
            a[c] = s[flat];
        }
        b.iter_mut().for_each(|v| *v = ZERO);
        op(&k, &a, &mut b);
        for (c, v) in b.iter().enumerate() {
            res[c][flat] = *v;
        }
    });
    GridField::from_spectra(spec, res)
}

fn require_dim(f: &CompositeField, n: usize, out: usize) -> Result<()> {
    if f.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.n() });
    }
    if f.out_dim() != out {
        return Err(Error::DimensionMismatch { expected: out, got: f.out_dim() });
    }
    Ok(())
}

fn factorial(e: &[u8; 3]) -> f64 {
    e.iter().map(|&k| if k == 2 { 2.0 } else { 1.0 }).product()
}

/// `T_m^k(h)(x) = Σ_{i=m}^{k} ∫ h(x - y) K(y) ψ_i(y) dy`, componentwise.
///
/// The grid part is convolved spectrally with the exact multiplier of the
/// truncated kernel (a Hankel transform tabulated in `|ξ|`), so the result
/// is the convolution of the band-limited interpolant and any `m < k` is
/// admissible. Compact data are zero padded until the kernel support fits;
/// `Unresolvable` is returned when that would exceed the padding limit.
/// Polynomial parts use the moments `∫ y^γ K ψ_i dy`.
pub fn cz_apply(kernel: &KernelSpec, h: &CompositeField, m: i32, k: i32) -> Result<CompositeField> {
    if m >= k {
        return Err(invalid(format!("truncation needs m < k (got m = {m}, k = {k})")));
    }
    if m < -60 || k > 60 {
        return Err(Error::Unresolvable(format!("dyadic range {m}..={k} out of bounds")));
    }
    if kernel.n != h.n() {
        return Err(Error::DimensionMismatch { expected: kernel.n, got: h.n() });
    }
    let n = h.n();
    let part = DyadicPartition::new(m, k);
    let mut poly = PolynomialField::zeros(n, h.out_dim());
    let deg = h.poly().degree();
    if !h.poly().is_zero() {
        for gamma in monomials(n).iter().filter(|e| monomial_degree(e) <= deg) {
            let mu = kernel.moment(&part, gamma);
            if mu != 0.0 {
                let sign = if monomial_degree(gamma) % 2 == 1 { -1.0 } else { 1.0 };
                poly = poly.axpy(sign * mu / factorial(gamma), &h.poly().partial(gamma))?;
            }
        }
    }
    let grid = match h.grid() {
        None => None,
        Some(g) => Some(truncated_convolution(kernel, &part, g)?),
    };
    CompositeField::new(poly, grid)
}

fn truncated_convolution(kernel: &KernelSpec, part: &DyadicPartition, g: &GridField) -> Result<GridField> {
    let spec = *g.spec();
    let (n, m, h) = (spec.n, spec.m, spec.h());
    let radius = ((part.i_max + 1) as f64).exp2();
    let size = match spec.mode {
        BoundaryMode::Periodic => m,
        BoundaryMode::Compact => {
            let need = m + (radius / h).ceil() as usize;
            let p = need.next_power_of_two();
            if p > max_padded(n) {
                return Err(Error::Unresolvable(format!(
                    "kernel radius {radius} needs a {p}-point padded grid (limit {})",
                    max_padded(n)
                )));
            }
            p
        }
    };
    let period = size as f64 * h;
    let rho_max = (n as f64).sqrt() * std::f64::consts::PI / h * 1.001;
    let table = kernel.multiplier_table(part, rho_max);
    let kw = fft::wavenumbers(size, period);
    let ks = fft::derivative_symbol(size, period);
    let mut mult = vec![ZERO; size.pow(n as u32)];
    fft::for_each_index(size, n, |flat, idx| {
        let (mut xi, mut xo) = ([0.0; 3], [0.0; 3]);
        for ax in 0..n {
            xi[ax] = kw[idx[ax]];
            xo[ax] = ks[idx[ax]];
        }
        mult[flat] = table.at(&xi, &xo);
    });
    let mut comps = Vec::with_capacity(g.out_dim());
    for c in 0..g.out_dim() {
        let mut buf = vec![ZERO; size.pow(n as u32)];
        let src = g.comp(c);
        fft::for_each_index(m, n, |flat, idx| {
            let mut pf = 0;
            for ax in 0..n {
                pf = pf * size + idx[ax];
            }
            buf[pf] = Complex64::new(src[flat], 0.0);
        });
        fft::forward(&mut buf, size, n);
        buf.iter_mut().zip(&mult).for_each(|(v, k)| *v *= k);
        fft::inverse(&mut buf, size, n);
        let mut out = vec![0.0; spec.len()];
        fft::for_each_index(m, n, |flat, idx| {
            let mut pf = 0;
            for ax in 0..n {
                pf = pf * size + idx[ax];
            }
            out[flat] = buf[pf].re;
        });
        comps.push(out);
    }
    GridField::from_parts(spec, comps)
}

/// Very weak solution of `-Δf = Σ ∂_α∂_β H_{αβ}` normalized by
/// `P^N_{0,1}(f) = 0`. `H` is stored row-major (`n²` components).
///
/// The polynomial part of `H` contributes the constant `c = Σ ∂_α∂_β H_{αβ}`
/// and hence `-(c/2n)|x|²`; the grid part is inverted on the torus, with the
/// isotropic choice `-(1/n) tr Ĥ` on modes where the symbol vanishes.
pub fn poisson_solve_hessian(hm: &CompositeField, degree: usize) -> Result<CompositeField> {
    let n = hm.n();
    if hm.out_dim() != n * n {
        return Err(invalid(format!("matrix field needs {} components (got {})", n * n, hm.out_dim())));
    }
    if degree > 1 {
        return Err(invalid("normalization degree must be 0 or 1"));
    }
    let mut c = 0.0;
    for a in 0..n {
        for b in 0..n {
            let mut e = [0u8; 3];
            e[a] += 1;
            e[b] += 1;
            c += hm.poly().component(a * n + b).partial(&e).constant_part()[0];
        }
    }
    let mut poly = PolynomialField::zeros(n, 1);
    for a in 0..n {
        let mut e = [0u8; 3];
        e[a] = 2;
        poly.set(0, &e, -c / (2.0 * n as f64));
    }
    let grid = hm.grid().map(|g| {
        spectral_map(g, 1, |k, h, out| {
            let kk: f64 = k[..n].iter().map(|v| v * v).sum();
            if kk == 0.0 {
                out[0] = -(0..n).map(|a| h[a * n + a]).sum::<Complex64>() / n as f64;
                return;
            }
            let mut acc = ZERO;
            for a in 0..n {
                for b in 0..n {
                    acc += h[a * n + b] * (k[a] * k[b]);
                }
            }
            out[0] = -acc / kk;
        })
    });
    let f = CompositeField::new(poly, grid)?;
    let p = mean_polynomial(&f, degree, &[0.0; 3][..n], 1.0)?;
    f.with_poly(f.poly().sub(&p)?)
}

/// `f = g - g(0) + a0 - Ṗ¹_∞(g) + Q_∞` with `g` the degree-one normalized
/// solution and `Q_∞(x) = q · x`, so that `f(0) = a0` and the asymptotic
/// linear part of `f` is `Q_∞`.
pub fn poisson_solve_anchored(hm: &CompositeField, a0: f64, q: &[f64]) -> Result<CompositeField> {
    let n = hm.n();
    if q.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: q.len() });
    }
    let g = poisson_solve_hessian(hm, 1)?;
    let g0 = g.value_at_origin()[0];
    let mut poly = g.poly().sub(&g.poly().homogeneous_part(1))?;
    let mut e0 = [0u8; 3];
    poly.set(0, &e0, poly.coeff(0, &e0) - g0 + a0);
    for (a, qa) in q.iter().enumerate() {
        e0 = [0; 3];
        e0[a] = 1;
        poly.set(0, &e0, poly.coeff(0, &e0) + qa);
    }
    g.with_poly(poly)
}

/// Outcome of [`very_weak_residual`].
#[derive(Debug, Clone, Copy)]
pub struct WeakResidual {
    /// `max_φ |∫ f Δφ + ∫ H : ∇²φ|`.
    pub max_abs: f64,
    /// `max_φ sup_{supp φ} |H| ∫ |∇²φ|`.
    pub scale: f64,
    pub relative: f64,
}

/// `r^{-n} ∫ f(y) k((y - c)/r) dy` for every component of `f` and kernel.
fn test_integrals(f: &CompositeField, c: &[f64; 3], r: f64, kernels: &[&dyn Fn(&Jet) -> f64]) -> Vec<Vec<f64>> {
    let n = f.n();
    let rule = ball_rule_for(n, r, None);
    let mut acc = vec![vec![0.0; kernels.len()]; f.out_dim()];
    if !f.poly().is_zero() {
        let mut val = vec![0.0; f.out_dim()];
        let mut x = [0.0; 3];
        for ((z, w), jet) in rule.nodes.iter().zip(&rule.weights).zip(&rule.jets) {
            for a in 0..n {
                x[a] = c[a] + r * z[a];
            }
            f.poly().eval_into(&x[..n], &mut val);
            for (kk, kern) in kernels.iter().enumerate() {
                let kv = w * kern(jet);
                for (comp, v) in val.iter().enumerate() {
                    acc[comp][kk] += kv * v;
                }
            }
        }
    }
    if let Some(g) = f.grid() {
        let (gi, _) = cell_integrals(g, c, r, kernels);
        for (a, b) in acc.iter_mut().zip(gi) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
    acc
}

/// Residual of the very weak formulation `-∫ f Δφ = ∫ H : ∇²φ` against the
/// bumps `φ(x) = φ_mollifier((x - c)/r)` centred at `centers`.
pub fn very_weak_residual(f: &CompositeField, hm: &CompositeField, centers: &[[f64; 3]], r: f64) -> Result<WeakResidual> {
    let n = f.n();
    require_dim(f, n, 1)?;
    require_dim(hm, n, n * n)?;
    let hess: Vec<Box<dyn Fn(&Jet) -> f64>> = (0..n * n)
        .map(|ab| {
            let s = mollifier::sym_index(ab / n, ab % n);
            Box::new(move |j: &Jet| j.hess[s]) as Box<dyn Fn(&Jet) -> f64>
        })
        .collect();
    let hess_refs: Vec<&dyn Fn(&Jet) -> f64> = hess.iter().map(|b| b.as_ref()).collect();
    let lap = move |j: &Jet| (0..n).map(|a| j.hess[mollifier::sym_index(a, a)]).sum::<f64>();
    let rule = ball_rule_for(n, r, None);
    let hess_l1: f64 = rule
        .weights
        .iter()
        .zip(&rule.jets)
        .map(|(w, j)| {
            let s: f64 = (0..n * n).map(|ab| j.hess[mollifier::sym_index(ab / n, ab % n)].powi(2)).sum();
            w * s.sqrt()
        })
        .sum();
    let (mut max_abs, mut scale) = (0.0f64, 0.0f64);
    let mut val = vec![0.0; n * n];
    for c in centers {
        let lhs = -test_integrals(f, c, r, &[&lap])[0][0];
        let hi = test_integrals(hm, c, r, &hess_refs);
        let rhs: f64 = (0..n * n).map(|ab| hi[ab][ab]).sum();
        max_abs = max_abs.max((lhs - rhs).abs());
        let mut hsup = 0.0f64;
        let mut x = [0.0; 3];
        for z in &rule.nodes {
            for a in 0..n {
                x[a] = c[a] + r * z[a];
            }
            hm.eval_into(&x[..n], &mut val);
            hsup = hsup.max(val.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        scale = scale.max(hsup * hess_l1);
    }
    let relative = if scale > 0.0 { max_abs / scale } else { max_abs };
    Ok(WeakResidual { max_abs, scale, relative })
}

/// Helmholtz–Leray projection `ℙu = u - w` with `-Δw = -∇(∇·u)` and
/// `w(0) = 0`. The polynomial part must be affine: `u = Bx + b` contributes
/// `w = (1/n) tr(B) x`. Gradients of bounded potentials project to zero up
/// to their value at the origin.
pub fn helmholtz_project(u: &CompositeField) -> Result<CompositeField> {
    let n = u.n();
    require_dim(u, n, n)?;
    if u.poly().degree() > 1 {
        return Err(invalid("projection needs an affine polynomial part"));
    }
    let b = u.poly().linear_matrix();
    let tr: f64 = (0..n).map(|a| b[a * n + a]).sum();
    let mut wp = PolynomialField::zeros(n, n);
    for a in 0..n {
        let mut e = [0u8; 3];
        e[a] = 1;
        wp.set(a, &e, tr / n as f64);
    }
    let wg = u.grid().map(|g| {
        spectral_map(g, n, |k, uh, out| {
            let kk: f64 = k[..n].iter().map(|v| v * v).sum();
            if kk == 0.0 {
                return;
            }
            let div: Complex64 = (0..n).map(|a| uh[a] * k[a]).sum();
            for a in 0..n {
                out[a] = div * (k[a] / kk);
            }
        })
    });
    let w = CompositeField::new(wp, wg)?;
    let w0 = w.value_at_origin();
    let w = w.with_poly(w.poly().sub(&PolynomialField::constant(n, &w0))?)?;
    u.sub(&w)
}

/// Sup over the grid nodes of `|∇·u|` plus the polynomial divergence.
pub fn divergence_sup(u: &CompositeField) -> Result<f64> {
    let d = u.divergence()?;
    let mut s = d.poly().max_abs_coeff();
    if let Some(g) = d.grid() {
        s += g.sup_norm();
    }
    Ok(s)
}

fn gradient_scale(u: &CompositeField) -> f64 {
    let mut s = u.poly().max_abs_coeff();
    if let Some(g) = u.grid() {
        let h = g.spec().h();
        s = s.max(g.sup_norm() / h);
    }
    s.max(1.0)
}

/// `∇Π(u, v) = ∇π` with `-Δπ = ∇·∇·(u ⊗ v)`, `∇π(0) = 0` and asymptotic
/// linear part `-(1/n) tr(∇u_∞ ∇v_∞) x`.
pub fn pressure_gradient(u: &CompositeField, v: &CompositeField) -> Result<CompositeField> {
    let n = u.n();
    pressure_gradient_at(u, v, &[0.0; 3][..n])
}

/// [`pressure_gradient`] anchored so that `∇π(anchor) = 0`.
pub fn pressure_gradient_at(u: &CompositeField, v: &CompositeField, anchor: &[f64]) -> Result<CompositeField> {
    let n = u.n();
    require_dim(u, n, n)?;
    require_dim(v, n, n)?;
    if u.poly().degree() > 1 || v.poly().degree() > 1 {
        return Err(invalid("pressure needs affine polynomial parts"));
    }
    let div = divergence_sup(u)?;
    if div > 1e-6 * gradient_scale(u) {
        return Err(Error::NotDivergenceFree(div));
    }
    let (a, b) = (u.poly().linear_matrix(), v.poly().linear_matrix());
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            tr += a[i * n + j] * b[j * n + i];
        }
    }
    let mut poly = PolynomialField::zeros(n, n);
    for l in 0..n {
        let mut e = [0u8; 3];
        e[l] = 1;
        poly.set(l, &e, -tr / n as f64);
    }
    let grid = if u.grid().is_some() || v.grid().is_some() {
        let mut prods = Vec::with_capacity(n * n);
        for al in 0..n {
            for be in 0..n {
                let p = u.product_component(al, v, be)?;
                prods.push(p.grid().expect("product with a grid factor").clone());
            }
        }
        let s = GridField::stack(&prods)?;
        Some(spectral_map(&s, n, |k, sh, out| {
            let kk: f64 = k[..n].iter().map(|v| v * v).sum();
            if kk == 0.0 {
                return;
            }
            let mut acc = ZERO;
            for al in 0..n {
                for be in 0..n {
                    acc += sh[al * n + be] * (k[al] * k[be]);
                }
            }
            let pi = -acc / kk;
            for l in 0..n {
                out[l] = pi * Complex64::new(0.0, k[l]);
            }
        }))
    } else {
        None
    };
    let g = CompositeField::new(poly, grid)?;
    let at = if anchor.iter().all(|&x| x == 0.0) { g.value_at_origin() } else { g.eval(anchor) };
    g.with_poly(g.poly().sub(&PolynomialField::constant(n, &at))?)
}

/// Pressure `π` with `-Δπ = ∇·∇·(v ⊗ v)` and `P⁰_{0,1}(π) = 0` for a field
/// without linear part.
pub fn bmo_pressure(v: &CompositeField) -> Result<CompositeField> {
    let n = v.n();
    require_dim(v, n, n)?;
    let a = v.poly().linear_matrix();
    let lin = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if lin > 0.0 || v.poly().degree() > 1 {
        return Err(Error::HasLinearPart(lin.max(v.poly().max_abs_coeff())));
    }
    let Some(vg) = v.grid() else {
        return Ok(CompositeField::from_poly(PolynomialField::zeros(n, 1)));
    };
    let mut prods = Vec::with_capacity(n * n);
    for al in 0..n {
        for be in 0..n {
            prods.push(v.product_component(al, v, be)?.grid().expect("grid factor").clone());
        }
    }
    let s = GridField::stack(&prods)?;
    let pg = spectral_map(&s, 1, |k, sh, out| {
        let kk: f64 = k[..n].iter().map(|v| v * v).sum();
        if kk == 0.0 {
            return;
        }
        let mut acc = ZERO;
        for al in 0..n {
            for be in 0..n {
                acc += sh[al * n + be] * (k[al] * k[be]);
            }
        }
        out[0] = -acc / kk;
    });
    debug_assert_eq!(pg.spec().mode, vg.spec().mode);
    let pi = CompositeField::from_grid(pg);
    let p = mean_polynomial(&pi, 0, &[0.0; 3][..n], 1.0)?;
    pi.with_poly(p.scale(-1.0))
}

/// Spectral sup-norm of the curl of a vector field on its grid, plus the
/// antisymmetric part of its polynomial gradient.
pub fn curl_sup(f: &CompositeField) -> Result<f64> {
    let w = f.vorticity()?;
    let mut s = w.poly().max_abs_coeff();
    if let Some(g) = w.grid() {
        s += g.sup_norm();
    }
    Ok(s)
}
