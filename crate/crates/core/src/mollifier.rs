//! The standard mollifier `φ(z) = c_n exp(-1/(1-|z|²))` on the unit ball and
//! its derivatives up to order two.

use crate::quadrature::gauss_legendre;
use std::sync::OnceLock;

/// Profile `e(s) = exp(-1/(1-s))` for `s = |z|² < 1`, zero otherwise.
fn profile(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s)).exp()
    }
}

struct Constants {
    norm: [f64; 2],
    second_moment: [f64; 2],
}

fn constants() -> &'static Constants {
    static C: OnceLock<Constants> = OnceLock::new();
    C.get_or_init(|| {
        // Composite Gauss–Legendre on [0, 1] with many panels; the profile is
        // flat at r = 1 so the panels concentrate nothing special there.
        let (x, w) = gauss_legendre(20);
        let panels = 400;
        let mut m = [[0.0f64; 2]; 2];
        for p in 0..panels {
            let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
            for (xi, wi) in x.iter().zip(&w) {
                let r = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                let wr = 0.5 * (b - a) * wi;
                let e = profile(r * r);
                for (d, slot) in m.iter_mut().enumerate() {
                    let dim = d + 2;
                    slot[0] += wr * e * r.powi(dim as i32 - 1);
                    slot[1] += wr * e * r.powi(dim as i32 + 1);
                }
            }
        }
        let area = [2.0 * std::f64::consts::PI, 4.0 * std::f64::consts::PI];
        let mut norm = [0.0; 2];
        let mut second_moment = [0.0; 2];
        for d in 0..2 {
            let mass = area[d] * m[d][0];
            norm[d] = 1.0 / mass;
            second_moment[d] = area[d] * m[d][1] / mass / (d + 2) as f64;
        }
        Constants { norm, second_moment }
    })
}

/// Normalization constant `c_n` making `∫ φ = 1`.
pub fn norm_constant(n: usize) -> f64 {
    constants().norm[n - 2]
}

/// `∫ z_1² φ(z) dz`.
pub fn second_moment(n: usize) -> f64 {
    constants().second_moment[n - 2]
}

/// Values of `φ`, `∇φ` and the Hessian (upper triangle `11,12,13,22,23,33`) at `z`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [f64; 6],
}

/// Index of the pair `(i, j)` in the packed symmetric layout.
pub fn sym_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

pub fn jet(n: usize, z: &[f64; 3]) -> Jet {
    let s: f64 = z[..n].iter().map(|v| v * v).sum();
    if s >= 1.0 {
        return Jet::default();
    }
    let c = norm_constant(n);
    let g = profile(s);
    let t = 1.0 - s;
    let g1 = -g / (t * t);
    let g2 = g / (t * t * t * t) - 2.0 * g / (t * t * t);
    let mut out = Jet { value: c * g, ..Default::default() };
    for i in 0..n {
        out.grad[i] = c * g1 * 2.0 * z[i];
        for j in i..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            out.hess[sym_index(i, j)] = c * (4.0 * g2 * z[i] * z[j] + 2.0 * g1 * delta);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_matches_finite_differences() {
        let z = [0.3, -0.2, 0.1];
        let n = 3;
        let base = jet(n, &z);
        let h = 1e-5;
        for i in 0..n {
            let mut zp = z;
            let mut zm = z;
            zp[i] += h;
            zm[i] -= h;
            let fd = (jet(n, &zp).value - jet(n, &zm).value) / (2.0 * h);
            assert!((fd - base.grad[i]).abs() < 1e-7);
            for j in 0..n {
                let fdh = (jet(n, &zp).grad[j] - jet(n, &zm).grad[j]) / (2.0 * h);
                assert!((fdh - base.hess[sym_index(i, j)]).abs() < 1e-6);
            }
        }
    }
}
