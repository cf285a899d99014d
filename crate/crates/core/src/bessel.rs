//! Bessel functions of the first kind of orders 0, 1, 2 and the spherical
//! Bessel functions `j_0, j_1, j_2`, accurate to roughly `1e-14` absolute.

use std::f64::consts::PI;

/// `J_0(x), J_1(x), J_2(x)` for real `x`.
pub fn bessel_j012(x: f64) -> [f64; 3] {
    let ax = x.abs();
    let mut out = if ax < 1.0 {
        series(ax)
    } else if ax <= 25.0 {
        miller(ax)
    } else {
        [hankel(0, ax), hankel(1, ax), hankel(2, ax)]
    };
    if x < 0.0 {
        out[1] = -out[1];
    }
    out
}

pub fn j0(x: f64) -> f64 {
    bessel_j012(x)[0]
}

pub fn j1(x: f64) -> f64 {
    bessel_j012(x)[1]
}

pub fn j2(x: f64) -> f64 {
    bessel_j012(x)[2]
}

fn series(x: f64) -> [f64; 3] {
    let y = -0.25 * x * x;
    let mut out = [0.0; 3];
    for (nu, slot) in out.iter_mut().enumerate() {
        let mut term = (0.5 * x).powi(nu as i32) / (1..=nu).product::<usize>() as f64;
        let mut sum = term;
        for k in 1..30 {
            term *= y / (k as f64 * (k + nu) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        *slot = sum;
    }
    out
}

/// Miller's backward recurrence normalized with `J_0 + 2 Σ J_{2k} = 1`.
fn miller(x: f64) -> [f64; 3] {
    let start = (x as usize + 40) & !1;
    let (mut jp, mut j) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    let mut keep = [0.0; 3];
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        let order = k - 1;
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * j;
        }
        if order <= 2 {
            keep[order] = j;
        }
        if j.abs() > 1e200 {
            j *= 1e-200;
            jp *= 1e-200;
            norm *= 1e-200;
            keep.iter_mut().for_each(|v| *v *= 1e-200);
        }
    }
    norm += keep[0];
    [keep[0] / norm, keep[1] / norm, keep[2] / norm]
}

/// Hankel asymptotic expansion, used for `x > 25`.
fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let (mut p, mut q) = (0.0, 0.0);
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        let term = a / x.powi(k);
        if term.abs() > last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        let odd = (2 * k + 1) as f64;
        a *= (mu - odd * odd) / ((k + 1) as f64 * 8.0);
    }
    let chi = x - (0.5 * nu as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Spherical Bessel functions `j_0, j_1, j_2`.
pub fn spherical_j012(x: f64) -> [f64; 3] {
    if x.abs() < 0.5 {
        let x2 = x * x;
        let s0 = 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)));
        let s1 = x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0 * (1.0 - x2 / 88.0))));
        let s2 = x2 / 15.0 * (1.0 - x2 / 14.0 * (1.0 - x2 / 36.0 * (1.0 - x2 / 66.0 * (1.0 - x2 / 104.0))));
        return [s0, s1, s2];
    }
    let (s, c) = x.sin_cos();
    let a0 = s / x;
    let a1 = s / (x * x) - c / x;
    let a2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
    [a0, a1, a2]
}
