/// `exp(-1/t)` for `t > 0`, zero otherwise.
fn flat(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step from 0 at `t ≤ 0` to 1 at `t ≥ 1` with `S(t) + S(1 - t) = 1`.
pub fn smooth_step(t: f64) -> f64 {
    let a = flat(t);
    let b = flat(1.0 - t);
    if a + b == 0.0 {
        return if t > 0.5 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

/// Bump on `[-1, 1]` whose integer translates sum to one.
pub fn chi(t: f64) -> f64 {
    smooth_step(1.0 - t.abs())
}

/// Radial dyadic partition `ψ_i(y) = χ(log₂|y| - i)` for `i_min ≤ i ≤ i_max`.
///
/// `ψ_i` is supported in `2^{i-1} < |y| < 2^{i+1}` and the family sums to one
/// on `2^{i_min} ≤ |y| ≤ 2^{i_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicPartition {
    pub i_min: i32,
    pub i_max: i32,
}

impl DyadicPartition {
    pub fn new(i_min: i32, i_max: i32) -> Self {
        Self { i_min, i_max }
    }

    /// `ψ_i` as a function of the radius.
    pub fn psi_radial(i: i32, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        chi(r.log2() - i as f64)
    }

    pub fn psi(i: i32, y: &[f64]) -> f64 {
        Self::psi_radial(i, y.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `Σ_{i_min ≤ i ≤ i_max} ψ_i` at radius `r`.
    pub fn weight(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let t = r.log2();
        let i0 = t.floor() as i32;
        (i0..=i0 + 1)
            .filter(|i| (self.i_min..=self.i_max).contains(i))
            .map(|i| chi(t - i as f64))
            .sum()
    }

    pub fn sum(&self, y: &[f64]) -> f64 {
        self.weight(y.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Empirical `c_k = sup |D^k ψ_i| 2^{k i}` for `k = 1, 2`, from central
    /// differences of the radial profile on a fine radius grid. The Hessian
    /// of a radial function has eigenvalues `ψ''` and `ψ'/r`.
    pub fn derivative_constants(i: i32) -> [f64; 2] {
        let scale = (i as f64).exp2();
        let (lo, hi) = (0.5 * scale, 2.0 * scale);
        let steps = 4000;
        let d = 1e-4 * scale;
        let mut c = [0.0f64; 2];
        for s in 0..=steps {
            let r = lo + (hi - lo) * s as f64 / steps as f64;
            let (p0, pp, pm) = (Self::psi_radial(i, r), Self::psi_radial(i, r + d), Self::psi_radial(i, r - d));
            let d1 = (pp - pm) / (2.0 * d);
            let d2 = (pp - 2.0 * p0 + pm) / (d * d);
            c[0] = c[0].max(d1.abs() * scale);
            c[1] = c[1].max(d2.abs().max((d1 / r).abs()) * scale * scale);
        }
        c
    }
}
