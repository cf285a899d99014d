use euler_campanato::campanato::{
    asymptotic_polynomial, asymptotic_polynomial_at_scale, bmo_seminorm, growth_check, homogeneous_norm,
    lattice_probes, lipschitz_embedding_check, mean_polynomial, moment, oscillation, oscillation_pair, seminorm,
    OscMode, SeminormParams,
};
use euler_campanato::fields::{BoundaryMode, CompositeField, GridField, GridSpec, PolynomialField};
use euler_campanato::mollifier;
use euler_campanato::quadrature::gauss_legendre;
use euler_campanato::Error;
use std::f64::consts::PI;

fn bump_field(spec: GridSpec, centre: [f64; 2], width: f64, amp: f64) -> GridField {
    GridField::from_fn(spec, 1, |x, o| {
        let d2 = (x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2);
        o[0] = amp * (-d2 / (width * width)).exp();
    })
}

/// Independent polar quadrature of `∫ g(y) D^α φ_r(x0 - y) dy` with composite
/// Gauss panels in the radius and a fine trapezoid in the angle.
fn reference_moment(f: &CompositeField, alpha: [u8; 3], x0: [f64; 2], r: f64) -> f64 {
    let (gx, gw) = gauss_legendre(12);
    let panels = 80;
    let nth = 2880;
    let mut acc = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        for (xi, wi) in gx.iter().zip(&gw) {
            let rho = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let wr = 0.5 * (b - a) * wi * rho;
            for t in 0..nth {
                let th = 2.0 * PI * t as f64 / nth as f64;
                let z = [rho * th.cos(), rho * th.sin(), 0.0];
                let jet = mollifier::jet(2, &[-z[0], -z[1], 0.0]);
                let deg = alpha.iter().sum::<u8>();
                let kern = match deg {
                    0 => jet.value,
                    1 => jet.grad[alpha.iter().position(|&v| v == 1).unwrap()],
                    _ => {
                        let mut ix = vec![];
                        for (k, &v) in alpha.iter().enumerate() {
                            for _ in 0..v {
                                ix.push(k);
                            }
                        }
                        jet.hess[mollifier::sym_index(ix[0], ix[1])]
                    }
                };
                let y = [x0[0] + r * z[0], x0[1] + r * z[1]];
                acc += wr * (2.0 * PI / nth as f64) * f.eval(&y)[0] * kern * r.powi(-(deg as i32));
            }
        }
    }
    acc
}

fn spec2(m: usize, l: f64) -> GridSpec {
    GridSpec::new(2, l, m, BoundaryMode::Compact).unwrap()
}

#[test]
fn moment_of_coordinate_is_one() {
    for k in 0..2 {
        let mut a = [0.0; 4];
        a[k * 2 + k] = 1.0;
        let f = CompositeField::from_poly(PolynomialField::affine(2, &a, &[0.0, 0.0]).unwrap());
        let mut alpha = [0u8; 3];
        alpha[k] = 1;
        let m = moment(&f, &alpha, &[0.3, -0.7], 2.5).unwrap();
        assert!((m[k] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn mean_polynomial_reproduces_polynomials() {
    let spec = spec2(64, 8.0);
    let mut q = PolynomialField::zeros(2, 1);
    q.set(0, &[0, 0, 0], 0.7);
    q.set(0, &[1, 0, 0], -1.3);
    q.set(0, &[0, 1, 0], 0.4);
    q.set(0, &[2, 0, 0], 0.25);
    q.set(0, &[1, 1, 0], -0.6);
    q.set(0, &[0, 2, 0], 1.1);
    let f = CompositeField::new(q.clone(), Some(GridField::zeros(spec, 1))).unwrap();
    for &(x0, r) in &[([0.0, 0.0], 1.0), ([1.5, -2.0], 0.5), ([-3.0, 1.0], 4.0)] {
        let p = mean_polynomial(&f, 2, &x0, r).unwrap();
        let d = p.sub(&q).unwrap();
        assert!(d.max_abs_coeff() < 1e-9, "{:?}", d);
        let affine = q.truncate(1);
        let p1 = mean_polynomial(&CompositeField::from_poly(affine.clone()), 1, &x0, r).unwrap();
        assert!(p1.sub(&affine).unwrap().max_abs_coeff() < 1e-9);
    }
}

#[test]
fn mean_polynomial_has_vanishing_moments() {
    let spec = spec2(128, 8.0);
    let grid = bump_field(spec, [0.4, -0.2], 0.8, 1.5);
    let poly = PolynomialField::affine(2, &[0.3, -0.5], &[0.2]).unwrap();
    let f = CompositeField::new(poly, Some(grid)).unwrap();
    for degree in [0, 1, 2] {
        for &(x0, r) in &[([0.0, 0.0], 1.0), ([0.5, 0.5], 2.0)] {
            let p = mean_polynomial(&f, degree, &x0, r).unwrap();
            let diff = f.sub(&CompositeField::from_poly(p)).unwrap();
            for alpha in [[0u8, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0], [1, 1, 0], [0, 2, 0]] {
                if alpha.iter().sum::<u8>() as usize > degree {
                    continue;
                }
                let internal = moment(&diff, &alpha, &x0, r).unwrap()[0];
                assert!(internal.abs() < 1e-11, "internal {internal}");
                let reference = reference_moment(&diff, alpha, x0, r);
                assert!(reference.abs() < 1e-8, "N={degree} α={alpha:?} reference {reference}");
            }
        }
    }
}

#[test]
fn exact_oscillation_of_square() {
    let mut q = PolynomialField::zeros(2, 1);
    q.set(0, &[2, 0, 0], 1.0);
    let f = CompositeField::from_poly(q);
    let o = oscillation(&f, 2.0, 1, &[0.0, 0.0], 1.0, OscMode::Exact2).unwrap();
    assert!((o - 0.25).abs() < 1e-12, "{o}");
    // Scaling: the quadratic part oscillates like r².
    let o2 = oscillation(&f, 2.0, 1, &[3.0, -1.0], 2.0, OscMode::Exact2).unwrap();
    assert!((o2 - 1.0).abs() < 1e-11);
}

#[test]
fn polynomials_of_low_degree_do_not_oscillate() {
    let spec = spec2(64, 8.0);
    let poly = PolynomialField::affine(2, &[1.0, 2.0, -0.5, 0.3], &[1.0, -1.0]).unwrap();
    let f = CompositeField::new(poly, Some(GridField::zeros(spec, 2))).unwrap();
    for mode in [OscMode::Exact2, OscMode::Proxy] {
        let o = oscillation(&f, 2.0, 1, &[0.5, 0.5], 1.0, mode).unwrap();
        assert!(o < 1e-12);
    }
}

#[test]
fn proxy_and_exact_are_comparable() {
    let spec = spec2(128, 8.0);
    let f = CompositeField::from_grid(bump_field(spec, [0.0, 0.0], 0.6, 1.0));
    let mut worst: f64 = 0.0;
    for degree in [0, 1, 2] {
        for &(x0, r) in &[([0.0, 0.0], 0.5), ([0.0, 0.0], 2.0), ([1.0, 0.0], 1.0), ([2.0, 2.0], 4.0)] {
            let (e, p) = oscillation_pair(&f, degree, &x0, r).unwrap();
            assert!(p >= e * (1.0 - 1e-9), "proxy below the exact minimum");
            worst = worst.max(p / e);
        }
    }
    assert!(worst < 5.0, "comparability constant {worst}");
}

#[test]
fn unresolvable_small_ball() {
    let spec = spec2(32, 8.0);
    let f = CompositeField::from_grid(bump_field(spec, [0.0, 0.0], 1.0, 1.0));
    let e = oscillation(&f, 2.0, 1, &[0.0, 0.0], 0.5, OscMode::Exact2).unwrap_err();
    assert!(matches!(e, Error::Unresolvable(_)));
}

#[test]
fn homogeneous_norm_of_linear_field() {
    let a = [1.0, 2.0, -3.0, -1.0];
    let u = CompositeField::from_poly(PolynomialField::affine(2, &a, &[0.0, 0.0]).unwrap());
    let probes = lattice_probes(2, 2.0, 3);
    let h = homogeneous_norm(&u, &probes, -1..=3).unwrap();
    assert!(h.seminorm.value < 1e-12);
    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((h.value - frob).abs() < 1e-12);

    let shifted = CompositeField::from_poly(PolynomialField::affine(2, &a, &[0.1, 0.0]).unwrap());
    assert!(matches!(homogeneous_norm(&shifted, &probes, -1..=3), Err(Error::NotCentered(_))));
}

#[test]
fn asymptotic_polynomial_limit() {
    let spec = spec2(64, 8.0);
    let grid = GridField::from_fn(spec, 2, |x, o| {
        let g = (-(x[0] * x[0] + x[1] * x[1])).exp();
        o[0] = g;
        o[1] = -x[0] * g;
    });
    let poly = PolynomialField::affine(2, &[0.0, 1.0, -1.0, 0.0], &[0.0, 0.0]).unwrap();
    let u = CompositeField::new(poly.clone(), Some(grid)).unwrap();
    let exact = asymptotic_polynomial(&u, 1).unwrap();
    assert_eq!(exact, poly.homogeneous_part(1));
    // The grid part's contribution decays like r^{-n-1}.
    let mut errs = vec![];
    for m in 1..=3 {
        let emp = asymptotic_polynomial_at_scale(&u, 1, m).unwrap();
        errs.push(emp.sub(&exact).unwrap().max_abs_coeff());
    }
    assert!(errs[2] < errs[0] && errs[2] < 2e-2, "{errs:?}");
}

#[test]
fn seminorm_tail_bounds_and_reports() {
    let spec = spec2(64, 8.0);
    let f = CompositeField::from_grid(bump_field(spec, [0.5, 0.0], 1.0, 1.0));
    let probes = lattice_probes(2, 2.0, 3);
    let rep = seminorm(&f, SeminormParams::new(0.5, 2.0, 2.0, 1), &probes, 0..=3).unwrap();
    assert!(rep.value > 0.0);
    assert!(rep.upper_bound() >= rep.value);
    assert!(rep.lower_tail.is_finite() && rep.upper_tail.is_finite());
    assert_eq!(rep.profile.len(), probes.len());
    assert!(rep.to_csv().lines().count() == probes.len() + 1);
    assert!(rep.to_kv().contains("value = "));
}

#[test]
fn bmo_of_constant_vorticity_is_zero() {
    let u = CompositeField::from_poly(PolynomialField::affine(2, &[0.0, -1.0, 1.0, 0.0], &[0.0, 0.0]).unwrap());
    let w = u.vorticity().unwrap();
    let rep = bmo_seminorm(&w, &lattice_probes(2, 1.0, 3), -2..=2).unwrap();
    assert!(rep.value < 1e-14);
}

#[test]
fn growth_of_quadratic_violates_linear_bound() {
    let mut q = PolynomialField::zeros(2, 1);
    q.set(0, &[2, 0, 0], 1.0);
    q.set(0, &[0, 2, 0], 1.0);
    let f = CompositeField::from_poly(q);
    let probes = lattice_probes(2, 1.0, 3);
    let rep = growth_check(&f, SeminormParams::new(1.5, 2.0, 2.0, 1), &probes, -1..=2).unwrap();
    assert!(!rep.holds, "exponent {}", rep.growth_exponent);

    let lin = CompositeField::from_poly(PolynomialField::affine(2, &[1.0, 0.5], &[0.2]).unwrap());
    let rep = growth_check(&lin, SeminormParams::new(1.5, 2.0, 2.0, 1), &probes, -1..=2).unwrap();
    assert!(rep.holds);
}

#[test]
fn lipschitz_embedding_of_affine_field() {
    let a = [0.5, -1.0, 2.0, -0.5];
    let u = CompositeField::from_poly(PolynomialField::affine(2, &a, &[0.0, 0.0]).unwrap());
    let rep = lipschitz_embedding_check(&u, &lattice_probes(2, 1.0, 3), -1..=2).unwrap();
    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((rep.lhs - frob).abs() < 1e-12);
    assert!(rep.ratio.is_finite() && rep.ratio > 0.0);
}
