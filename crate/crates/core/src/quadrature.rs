//! Gauss–Legendre rules and product rules on balls.

use crate::fields::{BoundaryMode, GridField};
use crate::mollifier::{self, Jet};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

/// Nodes and weights of the `k`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    for i in 0..(k + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if k == 1 { z } else { p1 };
            let pm = if k == 1 { 1.0 } else { p0 };
            dp = k as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[k - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[k - 1 - i] = w[i];
    }
    (x, w)
}

/// Product rule on the unit ball with the mollifier jet tabulated at every
/// node.
#[derive(Debug)]
pub struct BallRule {
    pub n: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub jets: Vec<Jet>,
}

impl BallRule {
    /// Radial Gauss–Legendre with `nr` nodes times an angular rule with
    /// `na` azimuthal nodes (plus `na / 2` polar Gauss nodes in three dimensions).
    pub fn new(n: usize, nr: usize, na: usize) -> Self {
        let (rx, rw) = gauss_legendre(nr);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let radial: Vec<(f64, f64)> = rx
            .iter()
            .zip(&rw)
            .map(|(x, w)| {
                let r = 0.5 * (1.0 + x);
                (r, 0.5 * w * r.powi(n as i32 - 1))
            })
            .collect();
        let dphi = 2.0 * PI / na as f64;
        if n == 2 {
            for &(r, wr) in &radial {
                for a in 0..na {
                    let th = (a as f64 + 0.5) * dphi;
                    nodes.push([r * th.cos(), r * th.sin(), 0.0]);
                    weights.push(wr * dphi);
                }
            }
        } else {
            let (px, pw) = gauss_legendre((na / 2).max(2));
            for &(r, wr) in &radial {
                for (ct, wp) in px.iter().zip(&pw) {
                    let st = (1.0 - ct * ct).sqrt();
                    for a in 0..na {
                        let ph = (a as f64 + 0.5) * dphi;
                        nodes.push([r * st * ph.cos(), r * st * ph.sin(), r * ct]);
                        weights.push(wr * wp * dphi);
                    }
                }
            }
        }
        let jets = nodes.iter().map(|z| mollifier::jet(n, z)).collect();
        Self { n, nodes, weights, jets }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

thread_local! {
    static RULES: RefCell<HashMap<(usize, usize, usize), Rc<BallRule>>> = RefCell::new(HashMap::new());
}

/// Cached rule for the given resolution.
pub fn ball_rule(n: usize, nr: usize, na: usize) -> Rc<BallRule> {
    RULES.with(|c| {
        c.borrow_mut()
            .entry((n, nr, na))
            .or_insert_with(|| Rc::new(BallRule::new(n, nr, na)))
            .clone()
    })
}

/// Rule adequate for a ball of radius `r` over data with grid spacing `h`
/// (`None` for purely polynomial data).
pub fn ball_rule_for(n: usize, r: f64, h: Option<f64>) -> Rc<BallRule> {
    let cells = h.map(|h| (r / h).ceil() as usize).unwrap_or(0);
    if n == 2 {
        let nr = (cells + 16).clamp(48, 128);
        let na = (3 * nr).max((2.0 * PI * cells as f64).ceil() as usize).min(512);
        ball_rule(2, nr, na)
    } else {
        // The mollifier is flat at the boundary; 48 radial nodes resolve it to 1e-11.
        let nr = (cells + 8).clamp(48, 64);
        let na = (2 * cells + 16).clamp(32, 96);
        ball_rule(3, nr, na)
    }
}

/// Gauss points per axis and cell for a kernel of support radius `r`: about
/// 128 points per radius, which resolves the mollifier Hessian near its edge.
fn cell_order(n: usize, r: f64, h: f64) -> usize {
    let k = (128.0 * h / r).ceil() as usize + 2;
    k.clamp(4, if n == 2 { 32 } else { 12 })
}

/// `r^{-n} ∫ g(y) k((y - x0)/r) dy` for every grid component and every kernel
/// in `kernels`, where `g` is the cubic interpolant of `grid`. Tensor Gauss
/// rules on the grid cells meeting the ball integrate the piecewise cubic
/// exactly, so only the (smooth, compactly supported) kernel limits accuracy.
///
/// Returns `[component][kernel]` and the largest interpolant magnitude seen.
pub fn cell_integrals(
    grid: &GridField,
    x0: &[f64; 3],
    r: f64,
    kernels: &[&dyn Fn(&Jet) -> f64],
) -> (Vec<Vec<f64>>, f64) {
    let spec = grid.spec();
    let (n, m, h, l) = (spec.n, spec.m as i64, spec.h(), spec.half_width);
    let k = cell_order(n, r, h);
    let (gx, gw) = gauss_legendre(k);
    let frac: Vec<f64> = gx.iter().map(|x| 0.5 * (1.0 + x)).collect();
    let wq: Vec<f64> = gw.iter().map(|w| 0.5 * w * h).collect();
    // Cubic Lagrange weights on nodes -1..=2 at each in-cell offset.
    let lag: Vec<[f64; 4]> = frac
        .iter()
        .map(|&t| {
            let mut w = [1.0; 4];
            for (a, wa) in w.iter_mut().enumerate() {
                for b in 0..4 {
                    if b != a {
                        *wa *= (t - (b as f64 - 1.0)) / (a as f64 - b as f64);
                    }
                }
            }
            w
        })
        .collect();
    let out = grid.out_dim();
    let mut acc = vec![vec![0.0; kernels.len()]; out];
    let mut vmax = 0.0f64;
    let lo: Vec<i64> = (0..n).map(|a| ((x0[a] - r + l) / h).floor() as i64).collect();
    let hi: Vec<i64> = (0..n).map(|a| ((x0[a] + r + l) / h).floor() as i64).collect();
    let fetch = |c: usize, idx: &[i64]| -> f64 {
        let mut flat = 0usize;
        for &i in idx {
            let j = match spec.mode {
                BoundaryMode::Periodic => i.rem_euclid(m),
                BoundaryMode::Compact => {
                    if !(0..m).contains(&i) {
                        return 0.0;
                    }
                    i
                }
            };
            flat = flat * spec.m + j as usize;
        }
        grid.comp(c)[flat]
    };
    let dims = if n == 2 { [k, k, 1] } else { [k, k, k] };
    let npts = dims[0] * dims[1] * dims[2];
    let mut vals = vec![0.0; npts * out];
    let mut cell = [0i64; 3];
    let ncell: Vec<i64> = (0..n).map(|a| hi[a] - lo[a] + 1).collect();
    let total: i64 = ncell.iter().product();
    let rr = r * r;
    for flat_cell in 0..total {
        let mut rem = flat_cell;
        for a in (0..n).rev() {
            cell[a] = lo[a] + rem % ncell[a];
            rem /= ncell[a];
        }
        // Skip cells that miss the ball.
        let mut d2 = 0.0;
        for a in 0..n {
            let c0 = -l + cell[a] as f64 * h;
            let q = (x0[a] - c0).clamp(0.0, h);
            d2 += (x0[a] - c0 - q).powi(2);
        }
        if d2 >= rr {
            continue;
        }
        // Interpolant values at the tensor nodes, one 4^n patch per component.
        vals.iter_mut().for_each(|v| *v = 0.0);
        let mut idx = [0i64; 3];
        let patch = if n == 2 { 16 } else { 64 };
        let mut any = false;
        for c in 0..out {
            for p in 0..patch {
                let off = if n == 2 { [p / 4, p % 4, 0] } else { [p / 16, (p / 4) % 4, p % 4] };
                for a in 0..n {
                    idx[a] = cell[a] - 1 + off[a] as i64;
                }
                let g = fetch(c, &idx[..n]);
                if g == 0.0 {
                    continue;
                }
                any = true;
                for i0 in 0..dims[0] {
                    let w0 = lag[i0][off[0]] * g;
                    for i1 in 0..dims[1] {
                        let w01 = w0 * lag[i1][off[1]];
                        if n == 2 {
                            vals[(i0 * dims[1] + i1) * out + c] += w01;
                        } else {
                            for i2 in 0..dims[2] {
                                vals[((i0 * dims[1] + i1) * dims[2] + i2) * out + c] += w01 * lag[i2][off[2]];
                            }
                        }
                    }
                }
            }
        }
        if !any {
            continue;
        }
        for i0 in 0..dims[0] {
            for i1 in 0..dims[1] {
                for i2 in 0..dims[2] {
                    let ii = [i0, i1, i2];
                    let mut z = [0.0; 3];
                    let mut w = 1.0;
                    for a in 0..n {
                        let y = -l + (cell[a] as f64 + frac[ii[a]]) * h;
                        z[a] = (y - x0[a]) / r;
                        w *= wq[ii[a]] / r;
                    }
                    if z.iter().map(|v| v * v).sum::<f64>() >= 1.0 {
                        continue;
                    }
                    let pt = (i0 * dims[1] + i1) * dims[2] + i2;
                    for c in 0..out {
                        vmax = vmax.max(vals[pt * out + c].abs());
                    }
                    let jet = mollifier::jet(n, &z);
                    for (kk, kern) in kernels.iter().enumerate() {
                        let kv = w * kern(&jet);
                        for c in 0..out {
                            acc[c][kk] += kv * vals[pt * out + c];
                        }
                    }
                }
            }
        }
    }
    (acc, vmax)
}

/// Volume of the unit ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    if n == 2 {
        PI
    } else {
        4.0 * PI / 3.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(7);
        for deg in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn ball_rule_normalizes_mollifier() {
        for n in [2, 3] {
            let rule = ball_rule_for(n, 1.0, None);
            let total: f64 = rule.weights.iter().zip(&rule.jets).map(|(w, j)| w * j.value).sum();
            assert!((total - 1.0).abs() < 1e-10, "n={n} total={total}");
            let vol: f64 = rule.weights.iter().sum();
            assert!((vol - unit_ball_volume(n)).abs() < 1e-12);
        }
    }
}
