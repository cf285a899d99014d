//! Seeded test data: dyadic sequences, Gaussian bumps and divergence-free
//! fields built from Gaussian stream functions.

use crate::dyadic::DyadicSequence;
use crate::error::{invalid, Result};
use crate::fields::{BoundaryMode, CompositeField, GridField, GridSpec, PolynomialField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonnegative sequence on `[j_min, j_min + len)` whose entries span six
/// decades, with roughly one entry in eight set to zero.
pub fn random_sequence(rng: &mut impl Rng, j_min: i32, len: usize) -> DyadicSequence {
    let values = (0..len)
        .map(|_| {
            if rng.random_bool(0.125) {
                0.0
            } else {
                10f64.powf(rng.random_range(-3.0..3.0))
            }
        })
        .collect();
    DyadicSequence::new(j_min, values).expect("finite nonnegative values")
}

/// One Gaussian `a exp(-|x - c|² / w²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
}

impl Gaussian {
    pub fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
        self.amplitude * (-r2 / (self.width * self.width)).exp()
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64; 3]) {
        let g = self.value(x);
        let w2 = self.width * self.width;
        for (k, o) in out.iter_mut().enumerate().take(x.len()) {
            *o = -2.0 * (x[k] - self.center[k]) / w2 * g;
        }
    }
}

/// Random Gaussians whose centres lie in `[-spread, spread]^n` with widths in
/// `[w_lo, w_hi]` and amplitudes in `[-1, 1]`.
pub fn random_gaussians(rng: &mut impl Rng, n: usize, count: usize, spread: f64, widths: (f64, f64)) -> Vec<Gaussian> {
    (0..count)
        .map(|_| {
            let mut center = [0.0; 3];
            for c in center.iter_mut().take(n) {
                *c = rng.random_range(-spread..=spread);
            }
            Gaussian {
                amplitude: rng.random_range(-1.0..=1.0),
                center,
                width: rng.random_range(widths.0..=widths.1),
            }
        })
        .collect()
}

fn require_compact(spec: &GridSpec) -> Result<()> {
    if spec.mode != BoundaryMode::Compact {
        return Err(invalid("bump data need a compact grid"));
    }
    Ok(())
}

/// Scalar sum of Gaussians sampled on a compact grid.
pub fn bump_field(spec: GridSpec, bumps: &[Gaussian]) -> Result<CompositeField> {
    require_compact(&spec)?;
    let g = GridField::from_fn(spec, 1, |x, out| {
        out[0] = bumps.iter().map(|b| b.value(&x[..spec.n])).sum();
    });
    Ok(CompositeField::from_grid(g))
}

/// Divergence-free field from Gaussian potentials: `∇^⊥ψ` in two dimensions
/// and `∇ × (Σ g_k e_k)` in three, with `e_k` the coordinate axes in turn.
pub fn divergence_free_field(spec: GridSpec, bumps: &[Gaussian]) -> Result<CompositeField> {
    require_compact(&spec)?;
    let n = spec.n;
    let g = GridField::from_fn(spec, n, |x, out| {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut d = [0.0; 3];
        for (k, b) in bumps.iter().enumerate() {
            b.gradient(&x[..n], &mut d);
            if n == 2 {
                out[0] += d[1];
                out[1] -= d[0];
            } else {
                // ∇g × e_a
                let a = k % 3;
                let (b1, b2) = ((a + 1) % 3, (a + 2) % 3);
                out[b1] += d[b2];
                out[b2] -= d[b1];
            }
        }
    });
    Ok(CompositeField::from_grid(g))
}

/// Seeded corpus of `count` divergence-free fields, each built from three
/// Gaussians of width in `[0.6, 1.2]` centred within a quarter of the box.
pub fn divergence_free_corpus(spec: GridSpec, count: usize, seed: u64) -> Result<Vec<CompositeField>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let bumps = random_gaussians(&mut r, spec.n, 3, 0.25 * spec.half_width, (0.6, 1.2));
            divergence_free_field(spec, &bumps)
        })
        .collect()
}

/// Seeded corpus of scalar bump fields.
pub fn bump_corpus(spec: GridSpec, count: usize, seed: u64) -> Result<Vec<CompositeField>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let bumps = random_gaussians(&mut r, spec.n, 3, 0.25 * spec.half_width, (0.5, 1.5));
            bump_field(spec, &bumps)
        })
        .collect()
}

/// Elliptic vortex `∇^⊥ exp(-(x²/a² + y²/b²))` on a compact planar grid.
pub fn elliptic_vortex(spec: GridSpec, a: f64, b: f64) -> Result<CompositeField> {
    require_compact(&spec)?;
    if spec.n != 2 {
        return Err(invalid("the elliptic vortex is planar"));
    }
    let g = GridField::from_fn(spec, 2, |x, out| {
        let psi = (-(x[0] * x[0] / (a * a) + x[1] * x[1] / (b * b))).exp();
        out[0] = -2.0 * x[1] / (b * b) * psi;
        out[1] = 2.0 * x[0] / (a * a) * psi;
    });
    Ok(CompositeField::from_grid(g))
}

/// Planar Taylor–Green cell `(sin x cos y, -cos x sin y)` on the periodic box
/// `[-π, π)²` with `m` nodes per axis.
pub fn taylor_green(m: usize) -> Result<CompositeField> {
    let spec = GridSpec::new(2, std::f64::consts::PI, m, BoundaryMode::Periodic)?;
    let g = GridField::from_fn(spec, 2, |x, out| {
        out[0] = x[0].sin() * x[1].cos();
        out[1] = -x[0].cos() * x[1].sin();
    });
    Ok(CompositeField::from_grid(g))
}

/// Linear field `x ↦ A x` (row-major `A`).
pub fn linear_field(n: usize, a: &[f64]) -> Result<CompositeField> {
    Ok(CompositeField::from_poly(PolynomialField::affine(n, a, &vec![0.0; n])?))
}
