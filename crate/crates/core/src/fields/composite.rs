use super::grid::{BoundaryMode, GridField, GridSpec};
use super::poly::PolynomialField;
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::mollifier;
use rustfft::num_complex::Complex64;

/// Field `f = P + g` with `P` a polynomial of degree ≤ 2 and `g` a grid part
/// that is either compactly supported in the box or periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeField {
    poly: PolynomialField,
    grid: Option<GridField>,
}

impl CompositeField {
    pub fn new(poly: PolynomialField, grid: Option<GridField>) -> Result<Self> {
        if let Some(g) = &grid {
            if g.spec().n != poly.n() {
                return Err(Error::DimensionMismatch { expected: poly.n(), got: g.spec().n });
            }
            if g.out_dim() != poly.out_dim() {
                return Err(Error::DimensionMismatch { expected: poly.out_dim(), got: g.out_dim() });
            }
        }
        Ok(Self { poly, grid })
    }

    pub fn from_poly(poly: PolynomialField) -> Self {
        Self { poly, grid: None }
    }

    pub fn from_grid(grid: GridField) -> Self {
        let poly = PolynomialField::zeros(grid.spec().n, grid.out_dim());
        Self { poly, grid: Some(grid) }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            poly: PolynomialField::zeros(self.n(), self.out_dim()),
            grid: self.grid.as_ref().map(|g| GridField::zeros(*g.spec(), g.out_dim())),
        }
    }

    pub fn poly(&self) -> &PolynomialField {
        &self.poly
    }

    pub fn grid(&self) -> Option<&GridField> {
        self.grid.as_ref()
    }

    pub fn into_parts(self) -> (PolynomialField, Option<GridField>) {
        (self.poly, self.grid)
    }

    pub fn n(&self) -> usize {
        self.poly.n()
    }

    pub fn out_dim(&self) -> usize {
        self.poly.out_dim()
    }

    pub fn spec(&self) -> Option<&GridSpec> {
        self.grid.as_ref().map(|g| g.spec())
    }

    /// Grid spacing when a grid part is present.
    pub fn h(&self) -> Option<f64> {
        self.spec().map(|s| s.h())
    }

    pub fn eval_into_order(&self, x: &[f64], out: &mut [f64], order: usize) {
        match &self.grid {
            None => self.poly.eval_into(x, out),
            Some(g) => {
                let mut buf = [0.0; 16];
                let k = self.out_dim();
                g.eval_into_order(x, &mut buf[..k], order);
                self.poly.eval_into(x, out);
                for (o, b) in out.iter_mut().zip(&buf[..k]) {
                    *o += b;
                }
            }
        }
    }

    /// Value at `x` (tensor cubic interpolation of the grid part).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.eval_into_order(x, out, 4);
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Exact value at the origin (a grid node for every even `m`).
    pub fn value_at_origin(&self) -> Vec<f64> {
        let mut v = self.poly.constant_part();
        if let Some(g) = &self.grid {
            let s = g.spec();
            let mid = [s.m / 2; 3];
            let mut flat = 0;
            for ax in 0..s.n {
                flat = flat * s.m + mid[ax];
            }
            for (c, vc) in v.iter_mut().enumerate() {
                *vc += g.comp(c)[flat];
            }
        }
        v
    }

    pub fn is_polynomial(&self) -> bool {
        self.grid.as_ref().is_none_or(|g| g.sup_norm() == 0.0)
    }

    pub fn gradient(&self) -> Self {
        let n = self.n();
        let poly = self.poly.gradient();
        let grid = self.grid.as_ref().map(|g| {
            let parts: Vec<GridField> = (0..n).map(|k| g.derivative(k)).collect();
            let mut comps = Vec::with_capacity(g.out_dim() * n);
            for c in 0..g.out_dim() {
                for p in &parts {
                    comps.push(p.comp(c).to_vec());
                }
            }
            GridField::from_parts(*g.spec(), comps).expect("consistent layout")
        });
        Self { poly, grid }
    }

    pub fn derivative(&self, axis: usize) -> Self {
        Self {
            poly: self.poly.derivative(axis),
            grid: self.grid.as_ref().map(|g| g.derivative(axis)),
        }
    }

    pub fn partial(&self, alpha: &[u8; 3]) -> Self {
        Self {
            poly: self.poly.partial(alpha),
            grid: self.grid.as_ref().map(|g| g.partial(alpha)),
        }
    }

    fn require_vector(&self) -> Result<()> {
        if self.out_dim() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: self.out_dim() });
        }
        Ok(())
    }

    pub fn divergence(&self) -> Result<Self> {
        self.require_vector()?;
        let n = self.n();
        let mut poly = PolynomialField::zeros(n, 1);
        for k in 0..n {
            poly = poly.add(&self.poly.component(k).derivative(k))?;
        }
        let grid = match &self.grid {
            None => None,
            Some(g) => {
                let spec = *g.spec();
                let sym = g.symbols();
                let mut acc = vec![Complex64::new(0.0, 0.0); spec.len()];
                for k in 0..n {
                    let s = g.spectrum(k);
                    fft::for_each_index(spec.m, n, |flat, idx| {
                        acc[flat] += Complex64::new(0.0, sym[idx[k]]) * s[flat];
                    });
                }
                Some(GridField::from_spectra(spec, vec![acc]))
            }
        };
        Ok(Self { poly, grid })
    }

    /// Scalar `∂_1 u_2 - ∂_2 u_1` in two dimensions, the curl vector in three.
    pub fn vorticity(&self) -> Result<Self> {
        self.require_vector()?;
        let pairs: Vec<(usize, usize)> = if self.n() == 2 {
            vec![(0, 1)]
        } else {
            vec![(1, 2), (2, 0), (0, 1)]
        };
        let parts: Result<Vec<Self>> = pairs
            .iter()
            .map(|&(a, b)| {
                // ∂_a u_b - ∂_b u_a
                self.component(b).derivative(a).sub(&self.component(a).derivative(b))
            })
            .collect();
        Self::stack(&parts?)
    }

    pub fn component(&self, c: usize) -> Self {
        Self { poly: self.poly.component(c), grid: self.grid.as_ref().map(|g| g.component(c)) }
    }

    pub fn stack(parts: &[Self]) -> Result<Self> {
        let polys: Vec<PolynomialField> = parts.iter().map(|p| p.poly.clone()).collect();
        let poly = PolynomialField::stack(&polys)?;
        let spec = parts.iter().find_map(|p| p.spec().copied());
        let grid = match spec {
            None => None,
            Some(spec) => {
                let grids: Vec<GridField> = parts
                    .iter()
                    .map(|p| p.grid.clone().unwrap_or_else(|| GridField::zeros(spec, p.out_dim())))
                    .collect();
                Some(GridField::stack(&grids)?)
            }
        };
        Ok(Self { poly, grid })
    }

    fn merge_grids(a: Option<&GridField>, ka: f64, b: Option<&GridField>, kb: f64) -> Result<Option<GridField>> {
        Ok(match (a, b) {
            (None, None) => None,
            (Some(x), None) => Some(x.scale(ka)),
            (None, Some(y)) => Some(y.scale(kb)),
            (Some(x), Some(y)) => Some(GridField::combine(&[x, y], &[ka, kb])?),
        })
    }

    /// `self + k * other`.
    pub fn axpy(&self, k: f64, other: &Self) -> Result<Self> {
        Ok(Self {
            poly: self.poly.axpy(k, &other.poly)?,
            grid: Self::merge_grids(self.grid.as_ref(), 1.0, other.grid.as_ref(), k)?,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { poly: self.poly.scale(k), grid: self.grid.as_ref().map(|g| g.scale(k)) }
    }

    /// Linear combination `Σ w_i f_i`.
    pub fn combine(fields: &[&Self], weights: &[f64]) -> Result<Self> {
        let first = fields.first().ok_or_else(|| invalid("empty combination"))?;
        let mut poly = PolynomialField::zeros(first.n(), first.out_dim());
        for (f, w) in fields.iter().zip(weights) {
            poly = poly.axpy(*w, &f.poly)?;
        }
        let grids: Vec<(&GridField, f64)> = fields
            .iter()
            .zip(weights)
            .filter_map(|(f, w)| f.grid.as_ref().map(|g| (g, *w)))
            .collect();
        let grid = if grids.is_empty() {
            None
        } else {
            let refs: Vec<&GridField> = grids.iter().map(|(g, _)| *g).collect();
            let ws: Vec<f64> = grids.iter().map(|(_, w)| *w).collect();
            Some(GridField::combine(&refs, &ws)?)
        };
        Ok(Self { poly, grid })
    }

    pub fn with_poly(&self, poly: PolynomialField) -> Result<Self> {
        Self::new(poly, self.grid.clone())
    }

    /// Samples the whole field at the nodes of `spec`.
    pub fn sample(&self, spec: &GridSpec) -> GridField {
        if let Some(g) = &self.grid {
            if g.spec().same_geometry(spec) {
                let mut out = g.clone();
                let mut buf = vec![0.0; self.out_dim()];
                spec.for_each_node(|flat, x| {
                    self.poly.eval_into(x, &mut buf);
                    for (c, v) in buf.iter().enumerate() {
                        out.comp_mut(c)[flat] += v;
                    }
                });
                return out;
            }
        }
        let mut out = GridField::zeros(*spec, self.out_dim());
        let mut buf = vec![0.0; self.out_dim()];
        spec.for_each_node(|flat, x| {
            self.eval_into(x, &mut buf);
            for (c, v) in buf.iter().enumerate() {
                out.comp_mut(c)[flat] = *v;
            }
        });
        out
    }

    /// Sup over the nodes of `spec` of the pointwise Euclidean norm.
    pub fn sup_on(&self, spec: &GridSpec) -> f64 {
        self.sample(spec).sup_pointwise_norm()
    }

    /// Product `f_a g_b` of one component of each field.
    pub fn product_component(&self, a: usize, other: &Self, b: usize) -> Result<Self> {
        let pa = self.poly.component(a);
        let pb = other.poly.component(b);
        let poly = pa.product_component(0, &pb, 0)?;
        let spec = match (self.spec(), other.spec()) {
            (None, None) => return Ok(Self { poly, grid: None }),
            (Some(s), None) | (None, Some(s)) => *s,
            (Some(s), Some(t)) => {
                if !s.same_geometry(t) {
                    return Err(invalid("grid geometries differ"));
                }
                *s
            }
        };
        if spec.mode == BoundaryMode::Periodic {
            let linear = |p: &PolynomialField, g: Option<&GridField>| {
                g.is_some() || p.degree() == 0
            };
            if !(linear(&pa, other.grid()) && linear(&pb, self.grid())) {
                return Err(invalid("products of periodic grid parts with non-constant polynomials are not periodic"));
            }
        }
        let mut out = vec![0.0; spec.len()];
        let ga = self.grid.as_ref().map(|g| g.comp(a));
        let gb = other.grid.as_ref().map(|g| g.comp(b));
        let (mut va, mut vb) = ([0.0], [0.0]);
        spec.for_each_node(|flat, x| {
            pa.eval_into(x, &mut va);
            pb.eval_into(x, &mut vb);
            let xa = ga.map_or(0.0, |g| g[flat]);
            let xb = gb.map_or(0.0, |g| g[flat]);
            out[flat] = va[0] * xb + xa * vb[0] + xa * xb;
        });
        Ok(Self { poly, grid: Some(GridField::from_parts(spec, vec![out])?) })
    }

    /// `x ↦ f(x - a)`.
    pub fn translate(&self, a: &[f64]) -> Self {
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        Self { poly: self.poly.shift(&neg), grid: self.grid.as_ref().map(|g| g.translate(a)) }
    }

    /// `f * φ_ε`: exact on the polynomial part, FFT convolution with the
    /// sampled (sum-normalized) kernel on the grid part.
    pub fn mollify(&self, eps: f64) -> Result<Self> {
        let poly = self.poly.mollify(eps);
        let grid = match &self.grid {
            None => None,
            Some(g) => {
                let spec = *g.spec();
                if eps < 2.0 * spec.h() {
                    return Err(Error::Unresolvable(format!(
                        "mollifier radius {eps} below two grid cells ({})",
                        2.0 * spec.h()
                    )));
                }
                let mut kernel = vec![Complex64::new(0.0, 0.0); spec.len()];
                let mut total = 0.0;
                fft::for_each_index(spec.m, spec.n, |flat, idx| {
                    let mut z = [0.0; 3];
                    for ax in 0..spec.n {
                        let i = idx[ax] as f64;
                        let d = if idx[ax] < spec.m / 2 { i } else { i - spec.m as f64 };
                        z[ax] = d * spec.h() / eps;
                    }
                    let v = mollifier::jet(spec.n, &z).value;
                    kernel[flat] = Complex64::new(v, 0.0);
                    total += v;
                });
                kernel.iter_mut().for_each(|k| *k /= total);
                fft::forward(&mut kernel, spec.m, spec.n);
                let spectra = (0..g.out_dim())
                    .map(|c| {
                        let mut s = g.spectrum(c);
                        s.iter_mut().zip(&kernel).for_each(|(v, k)| *v *= k);
                        s
                    })
                    .collect();
                Some(GridField::from_spectra(spec, spectra))
            }
        };
        Ok(Self { poly, grid })
    }
}
