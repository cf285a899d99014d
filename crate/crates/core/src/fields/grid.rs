use crate::error::{invalid, Error, Result};
use crate::fft;
use rustfft::num_complex::Complex64;

/// How grid samples extend beyond the box `[-L, L)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Zero outside the box; data carry a zero margin of two cells.
    Compact,
    /// Periodic with period `2L` along every axis.
    Periodic,
}

/// Uniform grid `x_i = -L + i h`, `h = 2L/m`, `i = 0..m` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
    pub m: usize,
    pub mode: BoundaryMode,
}

/// Width of the zero margin required of compact data, in cells.
pub const MARGIN: usize = 2;

impl GridSpec {
    pub fn new(n: usize, half_width: f64, m: usize, mode: BoundaryMode) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(invalid(format!("grid dimension must be 2 or 3 (got {n})")));
        }
        if m < 8 || !m.is_power_of_two() {
            return Err(invalid(format!("grid size must be a power of two >= 8 (got {m})")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(invalid("box half-width must be positive"));
        }
        Ok(Self { n, half_width, m, mode })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.m as f64
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn node(&self, idx: &[usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for ax in 0..self.n {
            x[ax] = self.coord(idx[ax]);
        }
        x
    }

    /// Calls `f(flat, x)` at every node.
    pub fn for_each_node(&self, mut f: impl FnMut(usize, &[f64; 3])) {
        fft::for_each_index(self.m, self.n, |flat, idx| f(flat, &self.node(idx)));
    }

    pub fn in_margin(&self, idx: &[usize; 3]) -> bool {
        idx[..self.n].iter().any(|&i| i < MARGIN || i >= self.m - MARGIN)
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.n == other.n
            && self.m == other.m
            && self.mode == other.mode
            && (self.half_width - other.half_width).abs() <= 1e-14 * self.half_width
    }
}

/// Samples of a vector field at the nodes of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    comps: Vec<Vec<f64>>,
}

impl GridField {
    pub fn zeros(spec: GridSpec, out_dim: usize) -> Self {
        Self { spec, comps: vec![vec![0.0; spec.len()]; out_dim] }
    }

    /// Samples `f` at the nodes; compact grids get their margin zeroed.
    pub fn from_fn(spec: GridSpec, out_dim: usize, mut f: impl FnMut(&[f64; 3], &mut [f64])) -> Self {
        let mut g = Self::zeros(spec, out_dim);
        let mut buf = vec![0.0; out_dim];
        fft::for_each_index(spec.m, spec.n, |flat, idx| {
            if spec.mode == BoundaryMode::Compact && spec.in_margin(idx) {
                return;
            }
            f(&spec.node(idx), &mut buf);
            for (c, v) in buf.iter().enumerate() {
                g.comps[c][flat] = *v;
            }
        });
        g
    }

    /// Validated constructor: compact data must vanish on the margin.
    pub fn new(spec: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        let g = Self::from_parts(spec, comps)?;
        if spec.mode == BoundaryMode::Compact {
            let leak = g.margin_leak();
            let scale = g.sup_norm().max(1.0);
            if leak > 1e-12 * scale {
                return Err(invalid(format!("compact data leak into the boundary margin ({leak:e})")));
            }
        }
        Ok(g)
    }

    /// Constructor without the margin check, used for operator outputs.
    pub fn from_parts(spec: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        for c in &comps {
            if c.len() != spec.len() {
                return Err(Error::DimensionMismatch { expected: spec.len(), got: c.len() });
            }
        }
        Ok(Self { spec, comps })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn out_dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_comps(self) -> Vec<Vec<f64>> {
        self.comps
    }

    pub fn component(&self, c: usize) -> Self {
        Self { spec: self.spec, comps: vec![self.comps[c].clone()] }
    }

    pub fn stack(parts: &[Self]) -> Result<Self> {
        let spec = parts.first().ok_or_else(|| invalid("empty stack"))?.spec;
        let mut comps = Vec::new();
        for p in parts {
            if !p.spec.same_geometry(&spec) {
                return Err(invalid("grid geometries differ"));
            }
            comps.extend(p.comps.iter().cloned());
        }
        Ok(Self { spec, comps })
    }

    /// Largest absolute sample inside the compact margin.
    pub fn margin_leak(&self) -> f64 {
        let mut leak: f64 = 0.0;
        fft::for_each_index(self.spec.m, self.spec.n, |flat, idx| {
            if self.spec.in_margin(idx) {
                for c in &self.comps {
                    leak = leak.max(c[flat].abs());
                }
            }
        });
        leak
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup over nodes of the Euclidean norm across components.
    pub fn sup_pointwise_norm(&self) -> f64 {
        (0..self.spec.len())
            .map(|k| self.comps.iter().map(|c| c[k] * c[k]).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Riemann sum of `|f|^p` over the box, to the power `1/p` (Euclidean across components).
    pub fn lp_norm(&self, p: f64) -> f64 {
        let vol = self.spec.h().powi(self.spec.n as i32);
        let mut acc = 0.0;
        for k in 0..self.spec.len() {
            let e = self.comps.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt();
            acc += e.powf(p);
        }
        (acc * vol).powf(1.0 / p)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if !self.spec.same_geometry(&other.spec) {
            return Err(invalid("grid geometries differ"));
        }
        if self.out_dim() != other.out_dim() {
            return Err(Error::DimensionMismatch { expected: self.out_dim(), got: other.out_dim() });
        }
        Ok(())
    }

    /// `self + k * other`.
    pub fn axpy(&self, k: f64, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + k * y).collect())
            .collect();
        Ok(Self { spec: self.spec, comps })
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            spec: self.spec,
            comps: self.comps.iter().map(|c| c.iter().map(|v| v * k).collect()).collect(),
        }
    }

    /// Linear combination `Σ w_i f_i` of fields on one grid.
    pub fn combine(fields: &[&Self], weights: &[f64]) -> Result<Self> {
        let first = fields.first().ok_or_else(|| invalid("empty combination"))?;
        let mut out = Self::zeros(first.spec, first.out_dim());
        for (f, w) in fields.iter().zip(weights) {
            first.check_same(f)?;
            if *w == 0.0 {
                continue;
            }
            for (o, c) in out.comps.iter_mut().zip(&f.comps) {
                for (a, b) in o.iter_mut().zip(c) {
                    *a += w * b;
                }
            }
        }
        Ok(out)
    }

    /// Tensor Lagrange interpolation with `order` points per axis (4 or 6).
    pub fn eval_into_order(&self, x: &[f64], out: &mut [f64], order: usize) {
        let spec = &self.spec;
        let (n, m) = (spec.n, spec.m as i64);
        let h = spec.h();
        let half = (order / 2) as i64;
        let mut idx = [[0usize; 6]; 3];
        let mut wts = [[0.0f64; 6]; 3];
        let mut valid = [[true; 6]; 3];
        for ax in 0..n {
            let t = (x[ax] + spec.half_width) / h;
            let i0 = t.floor();
            let frac = t - i0;
            let i0 = i0 as i64;
            for a in 0..order {
                let off = a as i64 - (half - 1);
                let mut w = 1.0;
                for b in 0..order {
                    if b != a {
                        let ob = b as i64 - (half - 1);
                        w *= (frac - ob as f64) / ((off - ob) as f64);
                    }
                }
                wts[ax][a] = w;
                let j = i0 + off;
                match spec.mode {
                    BoundaryMode::Periodic => idx[ax][a] = j.rem_euclid(m) as usize,
                    BoundaryMode::Compact => {
                        valid[ax][a] = (0..m).contains(&j);
                        idx[ax][a] = j.clamp(0, m - 1) as usize;
                    }
                }
            }
        }
        out[..self.comps.len()].iter_mut().for_each(|v| *v = 0.0);
        let mu = spec.m;
        if n == 2 {
            for a in 0..order {
                if !valid[0][a] {
                    continue;
                }
                let row = idx[0][a] * mu;
                for b in 0..order {
                    if !valid[1][b] {
                        continue;
                    }
                    let w = wts[0][a] * wts[1][b];
                    let k = row + idx[1][b];
                    for (o, c) in out.iter_mut().zip(&self.comps) {
                        *o += w * c[k];
                    }
                }
            }
        } else {
            for a in 0..order {
                if !valid[0][a] {
                    continue;
                }
                for b in 0..order {
                    if !valid[1][b] {
                        continue;
                    }
                    let wab = wts[0][a] * wts[1][b];
                    let row = (idx[0][a] * mu + idx[1][b]) * mu;
                    for c3 in 0..order {
                        if !valid[2][c3] {
                            continue;
                        }
                        let w = wab * wts[2][c3];
                        let k = row + idx[2][c3];
                        for (o, c) in out.iter_mut().zip(&self.comps) {
                            *o += w * c[k];
                        }
                    }
                }
            }
        }
    }

    /// Tensor cubic interpolation.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.eval_into_order(x, out, 4);
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn spectrum(&self, c: usize) -> Vec<Complex64> {
        let mut d = fft::to_complex(&self.comps[c]);
        fft::forward(&mut d, self.spec.m, self.spec.n);
        d
    }

    pub fn from_spectra(spec: GridSpec, spectra: Vec<Vec<Complex64>>) -> Self {
        let comps = spectra
            .into_iter()
            .map(|mut s| {
                fft::inverse(&mut s, spec.m, spec.n);
                fft::real_part(&s)
            })
            .collect();
        Self { spec, comps }
    }

    /// Derivative symbols (`ik` with zero Nyquist) for each axis.
    pub fn symbols(&self) -> Vec<f64> {
        fft::derivative_symbol(self.spec.m, self.spec.period())
    }

    /// Applies the multiplier `mult(k)` (with `k` the derivative wavevector)
    /// to every component.
    pub fn apply_multiplier(&self, mult: impl Fn(&[f64; 3]) -> Complex64) -> Self {
        let spec = self.spec;
        let sym = self.symbols();
        let mut table = vec![Complex64::new(0.0, 0.0); spec.len()];
        fft::for_each_index(spec.m, spec.n, |flat, idx| {
            let mut k = [0.0; 3];
            for ax in 0..spec.n {
                k[ax] = sym[idx[ax]];
            }
            table[flat] = mult(&k);
        });
        let spectra = (0..self.out_dim())
            .map(|c| {
                let mut s = self.spectrum(c);
                s.iter_mut().zip(&table).for_each(|(v, t)| *v *= t);
                s
            })
            .collect();
        Self::from_spectra(spec, spectra)
    }

    /// Spectral partial derivative along `axis` of every component.
    pub fn derivative(&self, axis: usize) -> Self {
        self.apply_multiplier(|k| Complex64::new(0.0, k[axis]))
    }

    /// Spectral `D^α` of every component.
    pub fn partial(&self, alpha: &[u8; 3]) -> Self {
        self.apply_multiplier(|k| {
            let mut z = Complex64::new(1.0, 0.0);
            for ax in 0..3 {
                for _ in 0..alpha[ax] {
                    z *= Complex64::new(0.0, k[ax]);
                }
            }
            z
        })
    }

    /// Translation `x ↦ f(x - a)`: exact phase shift when periodic, sixth-order
    /// resampling with zero extension when compact.
    pub fn translate(&self, a: &[f64]) -> Self {
        match self.spec.mode {
            BoundaryMode::Periodic => {
                let spec = self.spec;
                let k = fft::wavenumbers(spec.m, spec.period());
                let mut table = vec![Complex64::new(0.0, 0.0); spec.len()];
                fft::for_each_index(spec.m, spec.n, |flat, idx| {
                    // The Nyquist mode keeps a real factor so that real data stay real
                    // and integer-cell shifts are exact.
                    let mut z = Complex64::new(1.0, 0.0);
                    for ax in 0..spec.n {
                        let ph = -k[idx[ax]] * a[ax];
                        z *= if idx[ax] == spec.m / 2 {
                            Complex64::new(ph.cos(), 0.0)
                        } else {
                            Complex64::new(ph.cos(), ph.sin())
                        };
                    }
                    table[flat] = z;
                });
                let spectra = (0..self.out_dim())
                    .map(|c| {
                        let mut s = self.spectrum(c);
                        s.iter_mut().zip(&table).for_each(|(v, t)| *v *= t);
                        s
                    })
                    .collect();
                Self::from_spectra(spec, spectra)
            }
            BoundaryMode::Compact => {
                let mut out = Self::zeros(self.spec, self.out_dim());
                let mut buf = vec![0.0; self.out_dim()];
                let spec = self.spec;
                spec.for_each_node(|flat, x| {
                    let mut y = *x;
                    for ax in 0..spec.n {
                        y[ax] -= a[ax];
                    }
                    self.eval_into_order(&y, &mut buf, 6);
                    for (c, v) in buf.iter().enumerate() {
                        out.comps[c][flat] = *v;
                    }
                });
                out
            }
        }
    }
}
