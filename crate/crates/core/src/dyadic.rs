//! Finite windows of dyadically indexed sequences and the smoothing
//! transform `S_{α,q}`.
//!
//! A sequence `X = (X_j)` with `j ∈ [j_min, j_max]` stands for a sequence on
//! all of `ℤ` that vanishes outside the window. Exponents `q` are `f64` with
//! `f64::INFINITY` for the supremum.

use crate::error::{Error, Result};

/// Nonnegative sequence indexed by consecutive integers starting at `j_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSequence {
    j_min: i32,
    values: Vec<f64>,
}

impl DyadicSequence {
    pub fn new(j_min: i32, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(crate::error::invalid("empty dyadic sequence"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(crate::error::invalid(format!(
                "dyadic sequence entries must be finite and nonnegative (found {v})"
            )));
        }
        Ok(Self { j_min, values })
    }

    pub fn zeros(j_min: i32, j_max: i32) -> Self {
        let len = (j_max - j_min + 1).max(1) as usize;
        Self { j_min, values: vec![0.0; len] }
    }

    pub fn constant(j_min: i32, j_max: i32, c: f64) -> Self {
        let mut s = Self::zeros(j_min, j_max);
        s.values.iter_mut().for_each(|v| *v = c);
        s
    }

    /// Kronecker delta at `j0`.
    pub fn delta(j_min: i32, j_max: i32, j0: i32) -> Self {
        let mut s = Self::zeros(j_min, j_max);
        if (j_min..=j_max).contains(&j0) {
            s.values[(j0 - j_min) as usize] = 1.0;
        }
        s
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_min + self.values.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry at index `j`; zero outside the window.
    pub fn get(&self, j: i32) -> f64 {
        if j < self.j_min || j > self.j_max() {
            0.0
        } else {
            self.values[(j - self.j_min) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, v)| (self.j_min + k as i32, *v))
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

fn check_q(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        Err(Error::InvalidExponent(q))
    } else {
        Ok(())
    }
}

/// `S_{α,q}(X)_j = 2^{jα} (Σ_{i≥j} (2^{-iα} X_i)^q)^{1/q}` on the window of `x`.
///
/// Computed with the backward recurrence `T_j = X_j^q + 2^{-αq} T_{j+1}`, which
/// never forms the individual (possibly huge) weights `2^{±iα}`.
pub fn s_transform(x: &DyadicSequence, alpha: f64, q: f64) -> Result<DyadicSequence> {
    check_q(q)?;
    if !alpha.is_finite() {
        return Err(crate::error::invalid("alpha must be finite"));
    }
    let n = x.len();
    let mut out = vec![0.0; n];
    if q.is_infinite() {
        let decay = (-alpha).exp2();
        let mut acc: f64 = 0.0;
        for k in (0..n).rev() {
            acc = x.values[k].max(decay * acc);
            out[k] = acc;
        }
    } else {
        let decay = (-alpha * q).exp2();
        let mut acc = 0.0;
        for k in (0..n).rev() {
            acc = x.values[k].powf(q) + decay * acc;
            out[k] = acc.powf(1.0 / q);
        }
    }
    Ok(DyadicSequence { j_min: x.j_min, values: out })
}

/// Weighted `ℓ^q` norm `(Σ_j (2^{-sj} X_j)^q)^{1/q}` over the window.
pub fn lq_norm(x: &DyadicSequence, q: f64, s: f64) -> Result<f64> {
    check_q(q)?;
    let weighted = x.iter().map(|(j, v)| (-s * j as f64).exp2() * v);
    if q.is_infinite() {
        Ok(weighted.fold(0.0, f64::max))
    } else {
        Ok(weighted.map(|w| w.powf(q)).sum::<f64>().powf(1.0 / q))
    }
}

/// Outcome of [`check_composition_bound`].
#[derive(Debug, Clone)]
pub struct CompositionReport {
    /// `S_{β,q}(S_{α,p} X)`.
    pub lhs: DyadicSequence,
    /// `(1 - 2^{-(α-β)})^{-1} S_{β,q} X`.
    pub rhs: DyadicSequence,
    /// `max_j (lhs_j - rhs_j) / max_j rhs_j`; nonpositive when the bound holds.
    pub max_excess: f64,
    pub holds: bool,
}

/// Checks `S_{β,q}(S_{α,p} X) ≤ (1 - 2^{-(α-β)})^{-1} S_{β,q} X` entrywise,
/// with absolute tolerance `1e-9` relative to the largest right-hand entry.
pub fn check_composition_bound(
    x: &DyadicSequence,
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
) -> Result<CompositionReport> {
    check_q(p)?;
    check_q(q)?;
    if p > q {
        return Err(crate::error::invalid(format!("composition bound needs p <= q (p = {p}, q = {q})")));
    }
    if !(alpha > beta) {
        return Err(crate::error::invalid(format!(
            "composition bound needs alpha > beta (alpha = {alpha}, beta = {beta})"
        )));
    }
    let lhs = s_transform(&s_transform(x, alpha, p)?, beta, q)?;
    let factor = 1.0 / (1.0 - (beta - alpha).exp2());
    let mut rhs = s_transform(x, beta, q)?;
    rhs.values.iter_mut().for_each(|v| *v *= factor);
    let scale = rhs.sup().max(f64::MIN_POSITIVE);
    let max_excess = lhs
        .values
        .iter()
        .zip(&rhs.values)
        .map(|(l, r)| (l - r) / scale)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CompositionReport { holds: max_excess <= 1e-9, lhs, rhs, max_excess })
}

/// Smallest index `j` such that truncating a sequence bounded by `tail_sup`
/// above `j_max` changes `S_{α,q}(X)_j` by less than `tol`.
///
/// The omitted tail contributes at most `tail_sup · 2^{-α(j_max+1-j)} / (1-2^{-αq})^{1/q}`,
/// so entries far below `j_max` are insensitive to the truncation.
pub fn truncation_safe_window(
    j_max: i32,
    alpha: f64,
    q: f64,
    tail_sup: f64,
    tol: f64,
) -> Result<i32> {
    check_q(q)?;
    if !(alpha > 0.0) || !(tol > 0.0) {
        return Err(crate::error::invalid("truncation window needs alpha > 0 and tol > 0"));
    }
    if tail_sup <= 0.0 {
        return Ok(j_max);
    }
    let geom = if q.is_infinite() {
        1.0
    } else {
        (1.0 - (-alpha * q).exp2()).powf(-1.0 / q)
    };
    let need = ((tail_sup * geom) / tol).log2() / alpha;
    let gap = need.ceil().max(0.0) as i32;
    Ok(j_max + 1 - gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_s(x: &DyadicSequence, alpha: f64, q: f64) -> Vec<f64> {
        x.iter()
            .map(|(j, _)| {
                let terms: Vec<f64> = x
                    .iter()
                    .filter(|(i, _)| *i >= j)
                    .map(|(i, v)| (-(i as f64) * alpha).exp2() * v)
                    .collect();
                let inner = if q.is_infinite() {
                    terms.iter().cloned().fold(0.0, f64::max)
                } else {
                    terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
                };
                (j as f64 * alpha).exp2() * inner
            })
            .collect()
    }

    #[test]
    fn delta_profile() {
        let x = DyadicSequence::delta(-2, 5, 3);
        let y = s_transform(&x, 1.0, 2.0).unwrap();
        for (j, v) in y.iter() {
            let expect = if j <= 3 { (-(3 - j) as f64).exp2() } else { 0.0 };
            assert!((v - expect).abs() < 1e-15, "j={j} v={v}");
        }
    }

    #[test]
    fn recurrence_matches_definition() {
        let x = DyadicSequence::new(-3, vec![0.5, 2.0, 0.0, 1.5, 3.0, 0.25]).unwrap();
        for &(a, q) in &[(0.5, 1.0), (1.5, 2.0), (-0.7, 3.0), (2.0, f64::INFINITY)] {
            let fast = s_transform(&x, a, q).unwrap();
            let slow = brute_s(&x, a, q);
            for (f, s) in fast.values().iter().zip(&slow) {
                assert!((f - s).abs() <= 1e-12 * s.max(1.0));
            }
        }
    }

    #[test]
    fn invalid_exponent() {
        let x = DyadicSequence::constant(0, 3, 1.0);
        assert!(matches!(s_transform(&x, 1.0, 0.5), Err(Error::InvalidExponent(_))));
        assert!(matches!(lq_norm(&x, 0.0, 0.0), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn constant_sequence_window() {
        // X ≡ 1 on [j, J] with α = 1, β = 0, p = q = 1.
        let (j0, j1) = (0, 9);
        let x = DyadicSequence::constant(j0, j1, 1.0);
        let r = check_composition_bound(&x, 1.0, 0.0, 1.0, 1.0).unwrap();
        let n = (j1 - j0 + 1) as f64;
        let lhs0 = 2.0 * n - 2.0 * (1.0 - (-n).exp2());
        assert!((r.lhs.get(j0) - lhs0).abs() < 1e-12);
        assert!((r.rhs.get(j0) - 2.0 * n).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn safe_window_is_below_top() {
        let w = truncation_safe_window(10, 1.0, 2.0, 1.0, 1e-6).unwrap();
        assert!(w < 10);
        assert!((-(10 + 1 - w) as f64).exp2() * (1.0 - 0.25f64).powf(-0.5) <= 1e-6);
    }
}
