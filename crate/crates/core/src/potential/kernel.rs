use super::partition::DyadicPartition;
use crate::bessel::{bessel_j012, spherical_j012};
use crate::error::{invalid, Result};
use crate::fields::monomial_value;
use crate::quadrature::gauss_legendre;
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

/// Which derivative of the fundamental solution `Γ` of `-Δ` is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `Γ` itself.
    Newtonian,
    /// `∂_β Γ`.
    FirstDerivative { beta: usize },
    /// `∂_α ∂_β Γ` away from the origin (principal value).
    SecondDerivative { alpha: usize, beta: usize },
}

/// Kernel built from `Γ(y) = -(2π)^{-1} log|y|` (n = 2) or `(4π|y|)^{-1}` (n = 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub n: usize,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, n: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(invalid(format!("kernel dimension must be 2 or 3 (got {n})")));
        }
        let ok = match kind {
            KernelKind::Newtonian => true,
            KernelKind::FirstDerivative { beta } => beta < n,
            KernelKind::SecondDerivative { alpha, beta } => alpha < n && beta < n,
        };
        if !ok {
            return Err(invalid("kernel index out of range"));
        }
        Ok(Self { kind, n })
    }

    pub fn newtonian(n: usize) -> Result<Self> {
        Self::new(KernelKind::Newtonian, n)
    }

    pub fn first(n: usize, beta: usize) -> Result<Self> {
        Self::new(KernelKind::FirstDerivative { beta }, n)
    }

    pub fn second(n: usize, alpha: usize, beta: usize) -> Result<Self> {
        Self::new(KernelKind::SecondDerivative { alpha, beta }, n)
    }

    /// Spherical harmonic degree of the angular factor.
    pub(crate) fn degree(&self) -> usize {
        match self.kind {
            KernelKind::Newtonian => 0,
            KernelKind::FirstDerivative { .. } => 1,
            KernelKind::SecondDerivative { .. } => 2,
        }
    }

    /// Angular factor at the unit vector `w`.
    pub(crate) fn angular(&self, w: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Newtonian => 1.0,
            KernelKind::FirstDerivative { beta } => w[beta],
            KernelKind::SecondDerivative { alpha, beta } => {
                let d = if alpha == beta { 1.0 } else { 0.0 };
                self.n as f64 * w[alpha] * w[beta] - d
            }
        }
    }

    /// Radial factor: `K(y) = radial(|y|) · angular(y/|y|)`.
    pub(crate) fn radial(&self, r: f64) -> f64 {
        let two = self.n == 2;
        match (self.kind, two) {
            (KernelKind::Newtonian, true) => -r.ln() / (2.0 * PI),
            (KernelKind::Newtonian, false) => 1.0 / (4.0 * PI * r),
            (KernelKind::FirstDerivative { .. }, true) => -1.0 / (2.0 * PI * r),
            (KernelKind::FirstDerivative { .. }, false) => -1.0 / (4.0 * PI * r * r),
            (KernelKind::SecondDerivative { .. }, true) => 1.0 / (2.0 * PI * r * r),
            (KernelKind::SecondDerivative { .. }, false) => 1.0 / (4.0 * PI * r * r * r),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let r = y[..self.n].iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return f64::INFINITY;
        }
        let w: Vec<f64> = y[..self.n].iter().map(|v| v / r).collect();
        self.radial(r) * self.angular(&w)
    }

    /// Mean of `K` over the unit sphere (zero for the derivative kinds).
    pub fn spherical_mean(&self) -> f64 {
        let (pts, wts) = sphere_rule(self.n, 64);
        let total: f64 = pts.iter().zip(&wts).map(|(p, w)| w * self.eval(p)).sum();
        total / wts.iter().sum::<f64>()
    }

    /// `max |λ^n K(λ y) - K(y)|` over sample points on the unit sphere and
    /// `λ ∈ {1/4, 1/2, 2, 8}`; zero when `K` is homogeneous of degree `-n`.
    pub fn homogeneity_defect(&self) -> f64 {
        let (pts, _) = sphere_rule(self.n, 16);
        let mut worst = 0.0f64;
        for p in &pts {
            let k1 = self.eval(p);
            for lam in [0.25, 0.5, 2.0, 8.0] {
                let q: Vec<f64> = p.iter().map(|v| v * lam).collect();
                worst = worst.max((lam.powi(self.n as i32) * self.eval(&q) - k1).abs());
            }
        }
        worst
    }

    /// `∫ R(r) W(r) B_ℓ(ρ r) r^{n-1} dr` over `2^{i_min - 1} ≤ r ≤ 2^{i_max + 1}`
    /// with `W = Σ ψ_i`, `B_ℓ = J_ℓ` (n = 2) or `j_ℓ` (n = 3).
    fn radial_transform(&self, part: &DyadicPartition, rho: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
        let ell = self.degree();
        let mut total = 0.0;
        for j in (part.i_min - 1)..=part.i_max {
            let (a, b) = ((j as f64).exp2(), ((j + 1) as f64).exp2());
            let panels = ((rho * a / PI).ceil() as usize + 1).max(4);
            let w = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * w;
                for (x, wx) in nodes.0.iter().zip(&nodes.1) {
                    let r = lo + 0.5 * w * (1.0 + x);
                    let wt = part.weight(r);
                    if wt == 0.0 {
                        continue;
                    }
                    let bes = if self.n == 2 { bessel_j012(rho * r)[ell] } else { spherical_j012(rho * r)[ell] };
                    total += 0.5 * w * wx * wt * self.radial(r) * bes * r.powi(self.n as i32 - 1);
                }
            }
        }
        total
    }

    /// Fourier multiplier `∫ K(y) W(|y|) e^{-i ξ·y} dy` of the truncated kernel
    /// `T_m^k`, tabulated in `|ξ|` up to `rho_max`.
    pub(crate) fn multiplier_table(&self, part: &DyadicPartition, rho_max: f64) -> MultiplierTable {
        let radius = ((part.i_max + 1) as f64).exp2();
        let count = (rho_max * radius * 8.0).ceil() as usize + 64;
        let step = rho_max / (count - 3) as f64;
        let nodes = gauss_legendre(10);
        let c = if self.n == 2 { 2.0 * PI } else { 4.0 * PI };
        let values = (0..count).map(|i| c * self.radial_transform(part, i as f64 * step, &nodes)).collect();
        MultiplierTable { kernel: *self, step, values }
    }

    /// `∫ y^γ K(y) W(|y|) dy` for a multi-index `γ`.
    pub(crate) fn moment(&self, part: &DyadicPartition, gamma: &[u8; 3]) -> f64 {
        let g = gamma.iter().map(|&v| v as i32).sum::<i32>();
        let (pts, wts) = sphere_rule(self.n, 64);
        let ang: f64 = pts.iter().zip(&wts).map(|(p, w)| w * monomial_value(gamma, p) * self.angular(p)).sum();
        if ang.abs() < 1e-14 {
            return 0.0;
        }
        let nodes = gauss_legendre(16);
        let mut rad = 0.0;
        for j in (part.i_min - 1)..=part.i_max {
            let (a, b) = ((j as f64).exp2(), ((j + 1) as f64).exp2());
            for p in 0..4 {
                let lo = a + p as f64 * (b - a) / 4.0;
                let w = (b - a) / 4.0;
                for (x, wx) in nodes.0.iter().zip(&nodes.1) {
                    let r = lo + 0.5 * w * (1.0 + x);
                    rad += 0.5 * w * wx * part.weight(r) * self.radial(r) * r.powi(g + self.n as i32 - 1);
                }
            }
        }
        ang * rad
    }
}

/// Points and weights on the unit sphere: `k` equispaced angles in two
/// dimensions, Gauss–Legendre in `cos θ` times `2k` azimuths in three.
fn sphere_rule(n: usize, k: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    if n == 2 {
        for a in 0..k {
            let t = 2.0 * PI * (a as f64 + 0.5) / k as f64;
            pts.push([t.cos(), t.sin(), 0.0]);
            wts.push(2.0 * PI / k as f64);
        }
    } else {
        let (cx, cw) = gauss_legendre(k);
        for (c, w) in cx.iter().zip(&cw) {
            let s = (1.0 - c * c).sqrt();
            for a in 0..2 * k {
                let t = 2.0 * PI * (a as f64 + 0.5) / (2 * k) as f64;
                pts.push([s * t.cos(), s * t.sin(), *c]);
                wts.push(w * PI / k as f64);
            }
        }
    }
    (pts, wts)
}

/// Radial part of a truncated-kernel multiplier on a uniform `|ξ|` grid.
pub(crate) struct MultiplierTable {
    kernel: KernelSpec,
    step: f64,
    values: Vec<f64>,
}

impl MultiplierTable {
    fn radial_at(&self, rho: f64) -> f64 {
        let t = rho / self.step;
        let i = (t.floor() as usize).clamp(1, self.values.len() - 3);
        let f = t - i as f64;
        let v = &self.values[i - 1..i + 3];
        // Cubic Lagrange on nodes -1, 0, 1, 2.
        -f * (f - 1.0) * (f - 2.0) / 6.0 * v[0] + (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0 * v[1]
            - (f + 1.0) * f * (f - 2.0) / 2.0 * v[2]
            + (f + 1.0) * f * (f - 1.0) / 6.0 * v[3]
    }

    /// Multiplier at wavevector `xi`; `xi_odd` is the same vector with the
    /// Nyquist entries zeroed, used for odd angular factors.
    pub(crate) fn at(&self, xi: &[f64; 3], xi_odd: &[f64; 3]) -> Complex64 {
        let n = self.kernel.n;
        let rho = xi[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        let ell = self.kernel.degree();
        if rho == 0.0 {
            return if ell == 0 { Complex64::new(self.values[0], 0.0) } else { Complex64::new(0.0, 0.0) };
        }
        let src = if ell == 1 { xi_odd } else { xi };
        let w: Vec<f64> = src[..n].iter().map(|v| v / rho).collect();
        let a = self.kernel.angular(&w) * self.radial_at(rho);
        match ell {
            0 => Complex64::new(a, 0.0),
            1 => Complex64::new(0.0, -a),
            _ => Complex64::new(-a, 0.0),
        }
    }
}
