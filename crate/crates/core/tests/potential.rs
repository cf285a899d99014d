use euler_campanato::campanato::mean_polynomial;
use euler_campanato::fields::{BoundaryMode, CompositeField, GridField, GridSpec, PolynomialField};
use euler_campanato::potential::{
    bmo_pressure, curl_sup, cz_apply, divergence_sup, helmholtz_project, poisson_solve_anchored,
    poisson_solve_hessian, pressure_gradient, very_weak_residual, DyadicPartition, KernelSpec,
};
use euler_campanato::Error;
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn compact(n: usize, l: f64, m: usize) -> GridSpec {
    GridSpec::new(n, l, m, BoundaryMode::Compact).unwrap()
}

fn gaussian(spec: GridSpec) -> CompositeField {
    CompositeField::from_grid(GridField::from_fn(spec, 1, |x, o| {
        o[0] = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
    }))
}

/// `Ein(z) = ∫_0^z (1 - e^{-t})/t dt` by its power series.
fn ein(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= -z / k as f64;
        sum -= term / k as f64;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

fn max_err_in_disc(f: &CompositeField, radius: f64, exact: impl Fn(&[f64; 3]) -> f64) -> (f64, f64) {
    let spec = *f.spec().unwrap();
    let (mut err, mut size) = (0.0f64, 0.0f64);
    spec.for_each_node(|_, x| {
        if x[0].hypot(x[1]) <= radius {
            let e = exact(x);
            err = err.max((f.eval(&x[..2])[0] - e).abs());
            size = size.max(e.abs());
        }
    });
    (err, size)
}

#[test]
fn partition_sums_to_one_on_covered_annuli() {
    let part = DyadicPartition::new(-3, 4);
    for s in 0..=2000 {
        let r = (-3.0 + 7.0 * s as f64 / 2000.0).exp2();
        assert!((part.weight(r) - 1.0).abs() < 1e-12, "r = {r}");
    }
    for i in -2..3 {
        for s in 0..200 {
            let r = (i as f64 - 2.0 + 4.0 * s as f64 / 200.0).exp2();
            let v = DyadicPartition::psi_radial(i, r);
            assert!((0.0..=1.0).contains(&v));
            let inside = r > (i as f64 - 1.0).exp2() && r < (i as f64 + 1.0).exp2();
            if !inside {
                assert_eq!(v, 0.0);
            }
        }
    }
}

#[test]
fn partition_derivatives_scale_dyadically() {
    let c0 = DyadicPartition::derivative_constants(0);
    for i in [-3, 2, 5] {
        let c = DyadicPartition::derivative_constants(i);
        for k in 0..2 {
            assert!((c[k] / c0[k] - 1.0).abs() < 1e-3, "i={i} k={k} {c:?} {c0:?}");
        }
    }
    assert!(c0[0].is_finite() && c0[1].is_finite());
}

#[test]
fn second_derivative_kernels_are_cz() {
    for n in [2, 3] {
        for a in 0..n {
            for b in 0..n {
                let k = KernelSpec::second(n, a, b).unwrap();
                assert!(k.spherical_mean().abs() < 1e-10, "n={n} {a}{b}");
                assert!(k.homogeneity_defect() < 1e-12);
            }
            assert!(KernelSpec::first(n, a).unwrap().spherical_mean().abs() < 1e-12);
        }
    }
    assert!(KernelSpec::second(2, 0, 2).is_err());
}

#[test]
fn cz_of_zero_is_zero() {
    let spec = compact(2, 4.0, 32);
    let h = CompositeField::from_grid(GridField::zeros(spec, 1));
    let k = KernelSpec::second(2, 0, 1).unwrap();
    let out = cz_apply(&k, &h, -3, 2).unwrap();
    assert_eq!(out.grid().unwrap().sup_norm(), 0.0);
    assert!(out.poly().is_zero());
}

#[test]
fn cz_rejects_bad_ranges() {
    let spec = compact(2, 4.0, 32);
    let h = gaussian(spec);
    let k = KernelSpec::second(2, 0, 1).unwrap();
    assert!(cz_apply(&k, &h, 2, 2).is_err());
    assert!(matches!(cz_apply(&k, &h, 0, 20), Err(Error::Unresolvable(_))));
}

// For h = exp(-|x|²) in the plane, u = Γ * h solves r⁻¹(r u')' = -h, so
// u' = (e^{-r²} - 1)/(2r), u(0) = γ/4 and u(r) = γ/4 - Ein(r²)/4.

#[test]
fn cz_second_derivative_matches_radial_solution() {
    let spec = compact(2, 8.0, 128);
    let h = gaussian(spec);
    let k = KernelSpec::second(2, 0, 1).unwrap();
    let out = cz_apply(&k, &h, -20, 3).unwrap();
    let (err, size) = max_err_in_disc(&out, 4.0, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == 0.0 {
            return 0.0;
        }
        x[0] * x[1] / r2 * (-(-r2).exp() + (1.0 - (-r2).exp()) / r2)
    });
    assert!(err / size < 1e-3, "rel err {}", err / size);
}

#[test]
fn cz_first_derivative_matches_radial_solution() {
    let spec = compact(2, 8.0, 128);
    let h = gaussian(spec);
    let k = KernelSpec::first(2, 0).unwrap();
    let out = cz_apply(&k, &h, -20, 3).unwrap();
    let (err, size) = max_err_in_disc(&out, 4.0, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == 0.0 {
            return 0.0;
        }
        x[0] * ((-r2).exp() - 1.0) / (2.0 * r2)
    });
    assert!(err / size < 1e-3, "rel err {}", err / size);
}

#[test]
fn cz_newtonian_matches_radial_solution() {
    let spec = compact(2, 8.0, 128);
    let h = gaussian(spec);
    let k = KernelSpec::newtonian(2).unwrap();
    let out = cz_apply(&k, &h, -20, 3).unwrap();
    let (err, size) = max_err_in_disc(&out, 3.0, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        EULER_GAMMA / 4.0 - ein(r2) / 4.0
    });
    assert!(err / size < 1e-3, "rel err {}", err / size);
}

#[test]
fn cz_polynomial_inputs_use_moments() {
    // T(x_1) for K = ∂_1 Γ equals (1/2) ∫ W(r) r dr, independent of x.
    let part = DyadicPartition::new(-1, 2);
    let steps = 200_000;
    let (a, b) = (0.25, 8.0);
    let dr = (b - a) / steps as f64;
    let integral: f64 = (0..steps)
        .map(|s| {
            let r = a + (s as f64 + 0.5) * dr;
            part.weight(r) * r * dr
        })
        .sum();
    let h = CompositeField::from_poly(PolynomialField::affine(2, &[1.0, 0.0], &[0.0]).unwrap());
    let out = cz_apply(&KernelSpec::first(2, 0).unwrap(), &h, -1, 2).unwrap();
    for x in [[0.0, 0.0], [1.5, -2.0]] {
        assert!((out.eval(&x)[0] - 0.5 * integral).abs() < 1e-8);
    }
    // Zero spherical mean kills constants.
    let c = CompositeField::from_poly(PolynomialField::constant(2, &[3.0]));
    let out = cz_apply(&KernelSpec::second(2, 1, 1).unwrap(), &c, -1, 2).unwrap();
    assert!(out.poly().max_abs_coeff() < 1e-12);
}

fn minus_f0_identity(f0: &CompositeField) -> CompositeField {
    let n = f0.n();
    let zero = f0.scale(0.0);
    let parts: Vec<CompositeField> =
        (0..n * n).map(|ab| if ab / n == ab % n { f0.scale(-1.0) } else { zero.clone() }).collect();
    CompositeField::stack(&parts).unwrap()
}

#[test]
fn manufactured_poisson_solution() {
    for mode in [BoundaryMode::Compact, BoundaryMode::Periodic] {
        let spec = GridSpec::new(2, 8.0, 128, mode).unwrap();
        let f0 = CompositeField::from_grid(GridField::from_fn(spec, 1, |x, o| {
            o[0] = (-(x[0] - 0.7).powi(2) - 2.0 * (x[1] + 0.3).powi(2)).exp();
        }));
        let hm = minus_f0_identity(&f0);
        for degree in [0, 1] {
            let f = poisson_solve_hessian(&hm, degree).unwrap();
            let p = mean_polynomial(&f0, degree, &[0.0, 0.0], 1.0).unwrap();
            let expect = f0.with_poly(p.scale(-1.0)).unwrap();
            let mut worst = 0.0f64;
            spec.for_each_node(|_, x| {
                worst = worst.max((f.eval(&x[..2])[0] - expect.eval(&x[..2])[0]).abs());
            });
            assert!(worst < 1e-9, "{mode:?} N={degree} err {worst}");
            let centers = [[0.0, 0.0, 0.0], [1.0, -0.5, 0.0], [-2.0, 1.0, 0.0]];
            let res = very_weak_residual(&f, &hm, &centers, 1.5).unwrap();
            assert!(res.relative < 1e-5, "residual {res:?}");
            let mp = mean_polynomial(&f, degree, &[0.0, 0.0], 1.0).unwrap();
            assert!(mp.max_abs_coeff() < 1e-10);
        }
    }
}

#[test]
fn constant_hessian_data_give_zero() {
    let hm = CompositeField::from_poly(PolynomialField::constant(2, &[1.0, 2.0, 2.0, -3.0]));
    let f = poisson_solve_hessian(&hm, 1).unwrap();
    assert!(f.poly().max_abs_coeff() < 1e-14);
    assert!(f.grid().is_none());
}

#[test]
fn quadratic_hessian_data_give_paraboloid() {
    // H = diag(x_1², 0): Σ∂∂H = 2, f = -(2/4)|x|² up to the normalization.
    let mut p = PolynomialField::zeros(2, 4);
    p.set(0, &[2, 0, 0], 1.0);
    let hm = CompositeField::from_poly(p);
    let f = poisson_solve_hessian(&hm, 1).unwrap();
    let lap = f.poly().coeff(0, &[2, 0, 0]) * 2.0 + f.poly().coeff(0, &[0, 2, 0]) * 2.0;
    assert!((lap + 2.0).abs() < 1e-13);
}

#[test]
fn anchored_poisson() {
    let hm = CompositeField::from_poly(PolynomialField::zeros(2, 4));
    let f = poisson_solve_anchored(&hm, 3.0, &[2.0, 0.0]).unwrap();
    for x in [[0.0, 0.0], [1.0, 2.0], [-3.0, 0.5]] {
        assert!((f.eval(&x)[0] - (3.0 + 2.0 * x[0])).abs() < 1e-13);
    }
    let spec = compact(2, 8.0, 64);
    let f0 = gaussian(spec);
    let hm = minus_f0_identity(&f0);
    let f = poisson_solve_anchored(&hm, -1.25, &[0.5, -2.0]).unwrap();
    assert!((f.value_at_origin()[0] + 1.25).abs() < 1e-9);
    let lin = f.poly().homogeneous_part(1);
    assert!((lin.coeff(0, &[1, 0, 0]) - 0.5).abs() < 1e-13);
    assert!((lin.coeff(0, &[0, 1, 0]) + 2.0).abs() < 1e-13);
}

fn taylor_green(m: usize) -> CompositeField {
    let spec = GridSpec::new(2, PI, m, BoundaryMode::Periodic).unwrap();
    CompositeField::from_grid(GridField::from_fn(spec, 2, |x, o| {
        o[0] = x[0].sin() * x[1].cos();
        o[1] = -x[0].cos() * x[1].sin();
    }))
}

fn swirl(spec: GridSpec) -> CompositeField {
    // u = ∇^⊥ e^{-|x|²}.
    CompositeField::from_grid(GridField::from_fn(spec, 2, |x, o| {
        let g = (-(x[0] * x[0] + x[1] * x[1])).exp();
        o[0] = 2.0 * x[1] * g;
        o[1] = -2.0 * x[0] * g;
    }))
}

fn max_diff(a: &CompositeField, b: &CompositeField, spec: &GridSpec) -> f64 {
    let mut worst = 0.0f64;
    spec.for_each_node(|_, x| {
        let (va, vb) = (a.eval(&x[..spec.n]), b.eval(&x[..spec.n]));
        for (p, q) in va.iter().zip(&vb) {
            worst = worst.max((p - q).abs());
        }
    });
    worst
}

#[test]
fn projection_fixes_divergence_free_fields() {
    let tg = taylor_green(32);
    let p = helmholtz_project(&tg).unwrap();
    assert!(max_diff(&p, &tg, tg.spec().unwrap()) < 1e-8);
    let a = CompositeField::from_poly(PolynomialField::affine(2, &[0.5, 2.0, -1.0, -0.5], &[0.0, 0.0]).unwrap());
    let pa = helmholtz_project(&a).unwrap();
    assert!(pa.sub(&a).unwrap().poly().max_abs_coeff() < 1e-14);
    let sw = swirl(compact(2, 6.0, 64));
    let ps = helmholtz_project(&sw).unwrap();
    assert!(max_diff(&ps, &sw, sw.spec().unwrap()) < 1e-8);
}

#[test]
fn projection_removes_gradients() {
    let spec = compact(2, 8.0, 128);
    let phi = CompositeField::from_grid(GridField::from_fn(spec, 1, |x, o| {
        o[0] = (-(x[0] - 1.0).powi(2) - (x[1] + 0.5).powi(2)).exp();
    }));
    let g = phi.gradient();
    let p = helmholtz_project(&g).unwrap();
    let g0 = g.value_at_origin();
    let mut worst = 0.0f64;
    spec.for_each_node(|_, x| {
        let v = p.eval(&x[..2]);
        worst = worst.max((v[0] - g0[0]).abs()).max((v[1] - g0[1]).abs());
    });
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn projection_of_linear_fields() {
    // u = x: w = (1/n) tr(I) x = x, so ℙu = 0.
    let id = CompositeField::from_poly(PolynomialField::affine(2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0]).unwrap());
    let p = helmholtz_project(&id).unwrap();
    assert!(p.poly().max_abs_coeff() < 1e-15);
    // u = Bx: ℙu = (B - (tr B / n) I) x.
    let b = [2.0, 1.0, 3.0, 4.0];
    let u = CompositeField::from_poly(PolynomialField::affine(2, &b, &[0.0, 0.0]).unwrap());
    let p = helmholtz_project(&u).unwrap();
    let lm = p.poly().linear_matrix();
    let expect = [2.0 - 3.0, 1.0, 3.0, 4.0 - 3.0];
    for (x, y) in lm.iter().zip(&expect) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn projection_is_idempotent() {
    let spec = compact(2, 8.0, 64);
    let u = CompositeField::new(
        PolynomialField::affine(2, &[1.0, 2.0, 0.0, 0.5], &[0.1, -0.2]).unwrap(),
        Some(GridField::from_fn(spec, 2, |x, o| {
            let g = (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp();
            o[0] = g * (1.0 + x[0]);
            o[1] = g * x[1] * x[0];
        })),
    )
    .unwrap();
    let p = helmholtz_project(&u).unwrap();
    let pp = helmholtz_project(&p).unwrap();
    assert!(max_diff(&p, &pp, &spec) < 1e-10);
    assert!(divergence_sup(&p).unwrap() < 1e-9);
}

#[test]
fn pressure_of_hyperbolic_flow() {
    let u = CompositeField::from_poly(PolynomialField::affine(2, &[1.0, 0.0, 0.0, -1.0], &[0.0, 0.0]).unwrap());
    let g = pressure_gradient(&u, &u).unwrap();
    let lm = g.poly().linear_matrix();
    assert_eq!(lm, vec![-1.0, 0.0, 0.0, -1.0]);
    assert!(g.poly().constant_part().iter().all(|&v| v == 0.0));
}

#[test]
fn pressure_of_swirl_is_centripetal() {
    // Steady swirl with V = 2 r e^{-r²}: ∇π = (V²/r) x/r = 4 e^{-2r²} x.
    let spec = compact(2, 6.0, 128);
    let u = swirl(spec);
    let g = pressure_gradient(&u, &u).unwrap();
    let mut worst = 0.0f64;
    spec.for_each_node(|_, x| {
        let e = 4.0 * (-2.0 * (x[0] * x[0] + x[1] * x[1])).exp();
        let v = g.eval(&x[..2]);
        worst = worst.max((v[0] - e * x[0]).abs()).max((v[1] - e * x[1]).abs());
    });
    assert!(worst < 1e-8, "{worst}");
    assert!(curl_sup(&g).unwrap() < 1e-6);
}

#[test]
fn pressure_is_bilinear_and_rejects_divergent_u() {
    let spec = compact(2, 6.0, 64);
    let u = swirl(spec);
    let v = CompositeField::new(
        PolynomialField::affine(2, &[0.3, 1.0, -0.2, -0.3], &[0.0, 0.0]).unwrap(),
        Some(GridField::from_fn(spec, 2, |x, o| {
            o[0] = (-(x[0] - 1.0).powi(2) - x[1] * x[1]).exp();
            o[1] = 0.0;
        })),
    )
    .unwrap();
    let g1 = pressure_gradient(&u, &v).unwrap();
    let g2 = pressure_gradient(&u, &v.scale(2.0)).unwrap();
    assert!(max_diff(&g2, &g1.scale(2.0), &spec) < 1e-12);
    let w = u.add(&u.scale(0.5)).unwrap();
    let g3 = pressure_gradient(&w, &v).unwrap();
    assert!(max_diff(&g3, &g1.scale(1.5), &spec) < 1e-12);
    let gu = pressure_gradient(&u, &u).unwrap();
    assert!(curl_sup(&gu).unwrap() < 1e-6);
    assert!(matches!(pressure_gradient(&v, &u), Err(Error::NotDivergenceFree(_))));
}

#[test]
fn taylor_green_bmo_pressure() {
    let tg = taylor_green(32);
    let pi = bmo_pressure(&tg).unwrap();
    let spec = *tg.spec().unwrap();
    let p0 = pi.value_at_origin()[0];
    let mut worst = 0.0f64;
    spec.for_each_node(|_, x| {
        let e = 0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) - 0.5;
        worst = worst.max((pi.eval(&x[..2])[0] - p0 - e).abs());
    });
    assert!(worst < 1e-8, "{worst}");
    assert!(mean_polynomial(&pi, 0, &[0.0, 0.0], 1.0).unwrap().max_abs_coeff() < 1e-10);
}

#[test]
fn bmo_pressure_of_constants_and_linear_fields() {
    let c = CompositeField::from_poly(PolynomialField::constant(2, &[1.0, -2.0]));
    let pi = bmo_pressure(&c).unwrap();
    assert!(pi.poly().is_zero());
    let a = CompositeField::from_poly(PolynomialField::affine(2, &[1.0, 0.0, 0.0, -1.0], &[0.0, 0.0]).unwrap());
    assert!(matches!(bmo_pressure(&a), Err(Error::HasLinearPart(_))));
}

#[test]
fn pressure_in_three_dimensions() {
    // diag(1, 2, -3): ∇Π = -(1/3) tr(A²) x = -(14/3) x.
    let u = CompositeField::from_poly(
        PolynomialField::affine(3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -3.0], &[0.0; 3]).unwrap(),
    );
    let g = pressure_gradient(&u, &u).unwrap();
    let lm = g.poly().linear_matrix();
    for i in 0..3 {
        assert!((lm[i * 4] + 14.0 / 3.0).abs() < 1e-14);
    }
    // In three dimensions r²u' = -∫_0^r s² e^{-s²} ds and u'' = -h - 2u'/r.
    let spec = compact(3, 4.0, 32);
    let k = KernelSpec::second(3, 0, 1).unwrap();
    let h = gaussian(spec);
    let out = cz_apply(&k, &h, -10, 2).unwrap();
    let mut worst = 0.0f64;
    let mut size = 0.0f64;
    for x in [[0.5f64, 0.75, 0.25], [-0.8, 0.5, 0.0], [0.3, -0.2, 0.9], [0.1, 0.6, -0.5]] {
        let r: f64 = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let du = -(PI.sqrt() / 4.0 * erf(r) - 0.5 * r * (-r * r).exp()) / (r * r);
        let e = x[0] * x[1] / (r * r) * (-(-r * r).exp() - 3.0 * du / r);
        worst = worst.max((out.eval(&x)[0] - e).abs());
        size = size.max(e.abs());
    }
    assert!(worst / size < 1e-3, "{}", worst / size);
}

fn erf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for k in 1..120 {
        term *= -x * x / k as f64;
        sum += term / (2 * k + 1) as f64;
    }
    2.0 / PI.sqrt() * sum
}
