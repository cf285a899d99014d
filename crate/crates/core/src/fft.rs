//! Multidimensional complex FFTs on cubic grids and the spectral symbols used
//! by every grid operator.
//!
//! Arrays are row-major with axis 0 slowest. Plans are cached per thread.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        p.borrow_mut()
            .entry((len, forward))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if forward {
                    planner.plan_fft_forward(len)
                } else {
                    planner.plan_fft_inverse(len)
                }
            })
            .clone()
    })
}

fn transform(data: &mut [Complex64], m: usize, n: usize, forward: bool) {
    debug_assert_eq!(data.len(), m.pow(n as u32));
    let fft = plan(m, forward);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // Last axis is contiguous.
    fft.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..n - 1 {
        let stride = m.pow((n - 1 - axis) as u32);
        let block = stride * m;
        for base in (0..data.len()).step_by(block) {
            for off in 0..stride {
                for k in 0..m {
                    line[k] = data[base + off + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for k in 0..m {
                    data[base + off + k * stride] = line[k];
                }
            }
        }
    }
    if !forward {
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Forward transform of an `m^n` array in place.
pub fn forward(data: &mut [Complex64], m: usize, n: usize) {
    transform(data, m, n, true);
}

/// Normalized inverse transform of an `m^n` array in place.
pub fn inverse(data: &mut [Complex64], m: usize, n: usize) {
    transform(data, m, n, false);
}

pub fn to_complex(real: &[f64]) -> Vec<Complex64> {
    real.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub fn real_part(data: &[Complex64]) -> Vec<f64> {
    data.iter().map(|c| c.re).collect()
}

/// Angular wavenumbers of one axis for `m` samples over a period `period`.
pub fn wavenumbers(m: usize, period: f64) -> Vec<f64> {
    let base = 2.0 * PI / period;
    (0..m)
        .map(|j| {
            let k = if j < m / 2 { j as i64 } else { j as i64 - m as i64 };
            base * k as f64
        })
        .collect()
}

/// First-derivative symbol per axis: `k` with the Nyquist entry zeroed, so
/// that derivatives of real data stay real and `div ∘ grad` is consistent
/// with every projector built from the same symbol.
pub fn derivative_symbol(m: usize, period: f64) -> Vec<f64> {
    let mut k = wavenumbers(m, period);
    k[m / 2] = 0.0;
    k
}

/// Iterates over all multi-indices of an `m^n` grid in storage order,
/// calling `f(flat_index, multi_index)`.
pub fn for_each_index(m: usize, n: usize, mut f: impl FnMut(usize, &[usize; 3])) {
    let mut idx = [0usize; 3];
    let total = m.pow(n as u32);
    for flat in 0..total {
        f(flat, &idx);
        for ax in (0..n).rev() {
            idx[ax] += 1;
            if idx[ax] < m {
                break;
            }
            idx[ax] = 0;
        }
    }
}
