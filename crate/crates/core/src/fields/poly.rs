use crate::error::{invalid, Error, Result};

/// Exponent vectors of all monomials of degree at most two, ordered by degree:
/// `1, x_1..x_n, x_i x_j (i ≤ j)`.
pub fn monomials(n: usize) -> &'static [[u8; 3]] {
    const M2: [[u8; 3]; 6] = [
        [0, 0, 0],
        [1, 0, 0],
        [0, 1, 0],
        [2, 0, 0],
        [1, 1, 0],
        [0, 2, 0],
    ];
    const M3: [[u8; 3]; 10] = [
        [0, 0, 0],
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [2, 0, 0],
        [1, 1, 0],
        [1, 0, 1],
        [0, 2, 0],
        [0, 1, 1],
        [0, 0, 2],
    ];
    if n == 2 {
        &M2
    } else {
        &M3
    }
}

/// Number of monomials of degree at most `deg`.
pub fn monomial_count(n: usize, deg: usize) -> usize {
    match deg {
        0 => 1,
        1 => 1 + n,
        _ => 1 + n + n * (n + 1) / 2,
    }
}

pub fn monomial_index(n: usize, e: &[u8; 3]) -> Option<usize> {
    monomials(n).iter().position(|m| m == e)
}

pub fn monomial_degree(e: &[u8; 3]) -> usize {
    e.iter().map(|&v| v as usize).sum()
}

pub fn monomial_value(e: &[u8; 3], x: &[f64]) -> f64 {
    let mut v = 1.0;
    for (k, &p) in e.iter().enumerate() {
        for _ in 0..p {
            v *= x[k];
        }
    }
    v
}

fn factorial(e: &[u8; 3]) -> f64 {
    e.iter().map(|&p| if p == 2 { 2.0 } else { 1.0 }).product()
}

/// Vector-valued polynomial of degree at most two.
///
/// Coefficients are stored for every monomial of degree ≤ 2 (zeros explicit),
/// component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialField {
    n: usize,
    out_dim: usize,
    coeffs: Vec<f64>,
}

impl PolynomialField {
    pub fn zeros(n: usize, out_dim: usize) -> Self {
        assert!(n == 2 || n == 3, "dimension must be 2 or 3");
        Self { n, out_dim, coeffs: vec![0.0; out_dim * monomial_count(n, 2)] }
    }

    pub fn from_coeffs(n: usize, out_dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(invalid(format!("dimension {n} not supported")));
        }
        let need = out_dim * monomial_count(n, 2);
        if coeffs.len() != need {
            return Err(Error::DimensionMismatch { expected: need, got: coeffs.len() });
        }
        Ok(Self { n, out_dim, coeffs })
    }

    pub fn constant(n: usize, value: &[f64]) -> Self {
        let mut p = Self::zeros(n, value.len());
        for (c, v) in value.iter().enumerate() {
            p.set(c, &[0, 0, 0], *v);
        }
        p
    }

    /// `x ↦ A x + b` with `A` row-major `out_dim × n`.
    pub fn affine(n: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        let out = b.len();
        if a.len() != out * n {
            return Err(Error::DimensionMismatch { expected: out * n, got: a.len() });
        }
        let mut p = Self::constant(n, b);
        let s = p.stride();
        for c in 0..out {
            for k in 0..n {
                p.coeffs[c * s + 1 + k] = a[c * n + k];
            }
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn stride(&self) -> usize {
        monomial_count(self.n, 2)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn component_coeffs(&self, c: usize) -> &[f64] {
        &self.coeffs[c * self.stride()..(c + 1) * self.stride()]
    }

    pub fn coeff(&self, c: usize, e: &[u8; 3]) -> f64 {
        monomial_index(self.n, e).map(|i| self.coeffs[c * self.stride() + i]).unwrap_or(0.0)
    }

    pub fn set(&mut self, c: usize, e: &[u8; 3], v: f64) {
        let i = monomial_index(self.n, e).expect("monomial of degree at most two");
        let s = self.stride();
        self.coeffs[c * s + i] = v;
    }

    /// Highest degree with a nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        let mons = monomials(self.n);
        let s = self.stride();
        let mut d = 0;
        for c in 0..self.out_dim {
            for (i, e) in mons.iter().enumerate() {
                if self.coeffs[c * s + i] != 0.0 {
                    d = d.max(monomial_degree(e));
                }
            }
        }
        d
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|v| *v == 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let s = self.stride();
        let mut basis = [0.0; 10];
        basis[0] = 1.0;
        basis[1..=n].copy_from_slice(&x[..n]);
        let mut k = n + 1;
        for i in 0..n {
            for j in i..n {
                basis[k] = x[i] * x[j];
                k += 1;
            }
        }
        for (c, o) in out.iter_mut().enumerate().take(self.out_dim) {
            let row = &self.coeffs[c * s..(c + 1) * s];
            *o = row.iter().zip(&basis[..s]).map(|(a, b)| a * b).sum();
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Partial derivative along `axis` of every component.
    pub fn derivative(&self, axis: usize) -> Self {
        let mut d = Self::zeros(self.n, self.out_dim);
        let s = self.stride();
        for c in 0..self.out_dim {
            for (i, e) in monomials(self.n).iter().enumerate() {
                let v = self.coeffs[c * s + i];
                if v == 0.0 || e[axis] == 0 {
                    continue;
                }
                let mut lower = *e;
                lower[axis] -= 1;
                let j = monomial_index(self.n, &lower).unwrap();
                d.coeffs[c * s + j] += v * e[axis] as f64;
            }
        }
        d
    }

    /// `D^α` of every component for a multi-index of order ≤ 2.
    pub fn partial(&self, alpha: &[u8; 3]) -> Self {
        let mut p = self.clone();
        for ax in 0..self.n {
            for _ in 0..alpha[ax] {
                p = p.derivative(ax);
            }
        }
        p
    }

    /// Gradient with component `c * n + k` holding `∂_k f_c`.
    pub fn gradient(&self) -> Self {
        let n = self.n;
        let s = self.stride();
        let mut g = Self::zeros(n, self.out_dim * n);
        for k in 0..n {
            let d = self.derivative(k);
            for c in 0..self.out_dim {
                g.coeffs[(c * n + k) * s..(c * n + k + 1) * s]
                    .copy_from_slice(&d.coeffs[c * s..(c + 1) * s]);
            }
        }
        g
    }

    /// Homogeneous part of degree `d`.
    pub fn homogeneous_part(&self, d: usize) -> Self {
        let mut p = self.clone();
        let s = self.stride();
        for (i, e) in monomials(self.n).iter().enumerate() {
            if monomial_degree(e) != d {
                for c in 0..self.out_dim {
                    p.coeffs[c * s + i] = 0.0;
                }
            }
        }
        p
    }

    /// Truncation to degree at most `d`.
    pub fn truncate(&self, d: usize) -> Self {
        let mut p = self.clone();
        let s = self.stride();
        for (i, e) in monomials(self.n).iter().enumerate() {
            if monomial_degree(e) > d {
                for c in 0..self.out_dim {
                    p.coeffs[c * s + i] = 0.0;
                }
            }
        }
        p
    }

    /// Linear coefficient matrix, row-major `out_dim × n` (`A[c][k] = ∂_k f_c` at 0).
    pub fn linear_matrix(&self) -> Vec<f64> {
        let s = self.stride();
        let mut a = vec![0.0; self.out_dim * self.n];
        for c in 0..self.out_dim {
            for k in 0..self.n {
                a[c * self.n + k] = self.coeffs[c * s + 1 + k];
            }
        }
        a
    }

    pub fn constant_part(&self) -> Vec<f64> {
        (0..self.out_dim).map(|c| self.coeffs[c * self.stride()]).collect()
    }

    pub fn component(&self, c: usize) -> Self {
        let s = self.stride();
        Self { n: self.n, out_dim: 1, coeffs: self.coeffs[c * s..(c + 1) * s].to_vec() }
    }

    pub fn stack(parts: &[Self]) -> Result<Self> {
        let n = parts.first().ok_or_else(|| invalid("empty stack"))?.n;
        let mut coeffs = Vec::new();
        let mut out = 0;
        for p in parts {
            if p.n != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.n });
            }
            coeffs.extend_from_slice(&p.coeffs);
            out += p.out_dim;
        }
        Self::from_coeffs(n, out, coeffs)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        if self.out_dim != other.out_dim {
            return Err(Error::DimensionMismatch { expected: self.out_dim, got: other.out_dim });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { coeffs, ..*self })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { coeffs, ..*self })
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * k).collect(), ..*self }
    }

    /// `self + k * other`.
    pub fn axpy(&self, k: f64, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + k * b).collect();
        Ok(Self { coeffs, ..*self })
    }

    /// Product of component `a` of `self` with component `b` of `other`.
    pub fn product_component(&self, a: usize, other: &Self, b: usize) -> Result<Self> {
        let s = self.stride();
        let prod = mul_scalar(
            self.n,
            &self.coeffs[a * s..(a + 1) * s],
            &other.coeffs[b * s..(b + 1) * s],
        )
        .ok_or_else(|| invalid("polynomial product exceeds degree two"))?;
        Ok(Self { n: self.n, out_dim: 1, coeffs: prod })
    }

    /// `x ↦ P(M x + d)` with `M` row-major `n × n`.
    pub fn compose_affine(&self, m: &[f64], d: &[f64]) -> Result<Self> {
        let n = self.n;
        let s = self.stride();
        let ys: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let mut y = vec![0.0; s];
                y[0] = d[k];
                y[1..=n].copy_from_slice(&m[k * n..(k + 1) * n]);
                y
            })
            .collect();
        let mut out = Self::zeros(n, self.out_dim);
        for (i, e) in monomials(n).iter().enumerate() {
            let mut term = vec![0.0; s];
            term[0] = 1.0;
            for ax in 0..n {
                for _ in 0..e[ax] {
                    term = mul_scalar(n, &term, &ys[ax])
                        .ok_or_else(|| invalid("affine composition exceeds degree two"))?;
                }
            }
            for c in 0..self.out_dim {
                let v = self.coeffs[c * s + i];
                if v != 0.0 {
                    for (o, t) in out.coeffs[c * s..(c + 1) * s].iter_mut().zip(&term) {
                        *o += v * t;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `x ↦ P(x + a)`.
    pub fn shift(&self, a: &[f64]) -> Self {
        let n = self.n;
        let mut id = vec![0.0; n * n];
        for k in 0..n {
            id[k * n + k] = 1.0;
        }
        self.compose_affine(&id, a).expect("translation preserves degree")
    }

    /// Exact mollification `P * φ_ε`: adds `ε² m₂ Σ_i ∂_ii P / 2` to the constant term.
    pub fn mollify(&self, eps: f64) -> Self {
        let m2 = crate::mollifier::second_moment(self.n);
        let mut p = self.clone();
        let s = self.stride();
        for c in 0..self.out_dim {
            let mut lap_half = 0.0;
            for k in 0..self.n {
                let mut e = [0u8; 3];
                e[k] = 2;
                lap_half += self.coeff(c, &e);
            }
            p.coeffs[c * s] += eps * eps * m2 * lap_half;
        }
        p
    }

    /// Taylor coefficient weight `1/α!` times `D^α` evaluated at 0 equals the coefficient;
    /// returns `D^α P(0)` for component `c`.
    pub fn derivative_at_zero(&self, c: usize, e: &[u8; 3]) -> f64 {
        self.coeff(c, e) * factorial(e)
    }
}

/// Product of two scalar coefficient rows; `None` when the degree exceeds two.
fn mul_scalar(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mons = monomials(n);
    let mut out = vec![0.0; mons.len()];
    for (i, ea) in mons.iter().enumerate() {
        if a[i] == 0.0 {
            continue;
        }
        for (j, eb) in mons.iter().enumerate() {
            if b[j] == 0.0 {
                continue;
            }
            let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
            let k = monomial_index(n, &e)?;
            out[k] += a[i] * b[j];
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_matches_pointwise() {
        let mut p = PolynomialField::zeros(3, 2);
        for (k, v) in p.coeffs.iter_mut().enumerate() {
            *v = (k as f64 * 0.7).sin();
        }
        let m = [1.0, 0.2, -0.3, 0.1, 0.9, 0.4, -0.5, 0.0, 1.1];
        let d = [0.3, -0.2, 0.5];
        let q = p.compose_affine(&m, &d).unwrap();
        let x = [0.4, -1.3, 0.8];
        let y: Vec<f64> = (0..3).map(|k| (0..3).map(|j| m[k * 3 + j] * x[j]).sum::<f64>() + d[k]).collect();
        let (a, b) = (q.eval(&x), p.eval(&y));
        for c in 0..2 {
            assert!((a[c] - b[c]).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_layout() {
        let p = PolynomialField::affine(2, &[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0]).unwrap();
        let g = p.gradient();
        assert_eq!(g.constant_part(), vec![1.0, 2.0, 3.0, 4.0]);
    }
}
