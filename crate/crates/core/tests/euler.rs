use euler_campanato::corpus::{self, Gaussian};
use euler_campanato::euler::*;
use euler_campanato::fields::{BoundaryMode, CompositeField, GridField, GridSpec, PolynomialField};
use euler_campanato::linearflows::{integrate_riccati, RiccatiOptions};
use nalgebra::DMatrix;

fn compact(n: usize, l: f64, m: usize) -> GridSpec {
    GridSpec::new(n, l, m, BoundaryMode::Compact).unwrap()
}

fn constant(n: usize, c: &[f64]) -> CompositeField {
    CompositeField::from_poly(PolynomialField::constant(n, c))
}

fn linear(n: usize, a: &[f64]) -> CompositeField {
    corpus::linear_field(n, a).unwrap()
}

#[test]
fn constant_velocity_trace_is_linear_in_time() {
    let v = constant(2, &[0.5, -1.5]);
    let tr = characteristic_trace(&v, &[0.3, 0.2], 1.0, 3.0, 10, TraceAnchor::Start).unwrap();
    for (t, xi) in tr.times.iter().zip(&tr.xi) {
        assert!((xi[0] - 0.5 * (t - 1.0)).abs() < 1e-14);
        assert!((xi[1] + 1.5 * (t - 1.0)).abs() < 1e-14);
    }
    assert!(tr.xi_ddot.iter().flatten().all(|a| a.abs() < 1e-12));
}

#[test]
fn linear_trace_matches_matrix_exponential() {
    let a = [0.3, 1.0, -0.5, -0.3];
    let v = linear(2, &a);
    let x0 = [0.7, -0.4];
    let tr = characteristic_trace(&v, &x0, 0.0, 2.0, 400, TraceAnchor::Start).unwrap();
    let am = DMatrix::from_row_slice(2, 2, &a);
    let x = nalgebra::DVector::from_row_slice(&x0);
    for (t, xi) in tr.times.iter().zip(&tr.xi) {
        let exact = (&am * *t).exp() * &x - &x;
        assert!((xi[0] - exact[0]).abs() < 1e-8 && (xi[1] - exact[1]).abs() < 1e-8, "t = {t}");
    }
}

#[test]
fn backward_then_forward_trace_returns() {
    let v = FnPath { n: 2, f: |x: &[f64], t: f64, out: &mut [f64]| {
        out[0] = -x[1] * (1.0 + 0.3 * t.sin());
        out[1] = x[0] + 0.2 * x[1] * x[1];
    } };
    let x0 = [0.4, 0.1];
    let back = characteristic_trace(&v, &x0, 0.0, 1.0, 200, TraceAnchor::End).unwrap();
    assert!(back.xi[200].iter().all(|x| *x == 0.0));
    let start: Vec<f64> = x0.iter().zip(&back.xi[0]).map(|(a, b)| a + b).collect();
    let fwd = characteristic_trace(&v, &start, 0.0, 1.0, 200, TraceAnchor::Start).unwrap();
    for i in 0..2 {
        assert!((start[i] + fwd.xi[200][i] - x0[i]).abs() < 1e-8);
    }
}

fn gaussian_bump(spec: GridSpec, center: [f64; 3]) -> CompositeField {
    corpus::bump_field(spec, &[Gaussian { amplitude: 1.0, center, width: 1.0 }]).unwrap()
}

#[test]
fn zero_transport_is_identity() {
    let spec = compact(2, 8.0, 64);
    let f = gaussian_bump(spec, [0.5, -0.25, 0.0]);
    let zero = CompositeField::from_poly(PolynomialField::zeros(2, 2));
    let zero_g = CompositeField::from_poly(PolynomialField::zeros(2, 1));
    let out = transport_step(&f, &zero, &zero_g, 0.1).unwrap();
    let d = out.sub(&f).unwrap();
    assert!(d.grid().unwrap().sup_norm() < 1e-13);
    assert!(d.poly().max_abs_coeff() == 0.0);
}

fn translation_error(m: usize) -> f64 {
    let spec = compact(2, 8.0, m);
    let f = gaussian_bump(spec, [0.0; 3]);
    let u = constant(2, &[0.8, -0.6]);
    let zero_g = CompositeField::from_poly(PolynomialField::zeros(2, 1));
    let mut g = f.clone();
    for _ in 0..20 {
        g = transport_step(&g, &u, &zero_g, 0.05).unwrap();
    }
    let exact = corpus::bump_field(spec, &[Gaussian { amplitude: 1.0, center: [0.8, -0.6, 0.0], width: 1.0 }]).unwrap();
    g.sub(&exact).unwrap().grid().unwrap().sup_norm()
}

#[test]
fn constant_advection_translates_a_bump() {
    let (coarse, fine) = (translation_error(64), translation_error(128));
    assert!(fine < 1e-4, "translation error {fine:e}");
    assert!((coarse / fine).log2() > 4.0, "errors {coarse:e} {fine:e}");
}

#[test]
fn cfl_guard_rejects_long_steps() {
    let spec = compact(2, 8.0, 64);
    let f = gaussian_bump(spec, [0.0; 3]);
    let u = CompositeField::stack(&[f.clone(), f.scale(0.0)]).unwrap();
    let zero_g = CompositeField::from_poly(PolynomialField::zeros(2, 1));
    let h = spec.h();
    assert!(transport_step(&f, &u, &zero_g, 3.0 * h).is_ok());
    assert!(matches!(transport_step(&f, &u, &zero_g, 5.0 * h), Err(euler_campanato::Error::Cfl(_))));
}

fn axisymmetric(lambda: f64) -> Vec<f64> {
    vec![lambda, 0.0, 0.0, 0.0, lambda, 0.0, 0.0, 0.0, -2.0 * lambda]
}

fn riccati_at(a0: &[f64], t: f64) -> DMatrix<f64> {
    let n = (a0.len() as f64).sqrt() as usize;
    let a = DMatrix::from_row_slice(n, n, a0);
    integrate_riccati(&a, t, &RiccatiOptions::with_tol(1e-13)).unwrap().last().a.clone()
}

#[test]
fn polynomial_step_follows_the_riccati_flow() {
    let a0 = [0.2, 0.7, 0.1, 0.0, 0.5, -0.3, 0.4, 0.0, -0.7];
    let v0 = linear(3, &a0);
    let mut errs = Vec::new();
    for dt in [0.1, 0.05, 0.025] {
        let cfg = SolverConfig { dt, horizon: dt, fp_tol: 1e-14, min_steps_per_window: 1, ..Default::default() };
        let traj = solve(&v0, &cfg).unwrap();
        assert!(traj.last().v.grid().is_none());
        errs.push((traj.final_linear_part() - riccati_at(&a0, dt)).norm());
    }
    let order = (errs[0] / errs[2]).log2() / 2.0;
    assert!(order >= 2.0, "one-step errors {errs:?}");
}

#[test]
fn exact_linear_path_is_a_fixed_point() {
    let a0 = axisymmetric(0.5);
    let times: Vec<f64> = (0..=20).map(|k| 0.01 * k as f64).collect();
    let fields: Vec<CompositeField> = times
        .iter()
        .map(|t| {
            let a = riccati_at(&a0, *t);
            let rows: Vec<f64> = a.transpose().iter().copied().collect();
            linear(3, &rows)
        })
        .collect();
    let u = FieldPath::new(times, fields).unwrap();
    let v = fixed_point_map(&u, &u.fields[0]).unwrap();
    assert!(v.fields.iter().all(|f| f.grid().is_none()));
    let d = v.distance(&u).unwrap();
    assert!(d < 1e-8, "distance {d:e}");
}

#[test]
fn axisymmetric_blowup_time() {
    for lambda in [1.0, 2.0] {
        let cfg = SolverConfig { dt: 0.01, horizon: 10.0, ..Default::default() };
        let traj = solve(&linear(3, &axisymmetric(lambda)), &cfg).unwrap();
        let b = traj.blowup.expect("linear part blows up");
        let rel = (b.t_star * lambda - 1.0).abs();
        assert!(rel < 1e-2, "lambda {lambda}: T* = {}", b.t_star);
        // The asymptotic gradient is not integrable up to T*.
        let last = traj.steps.last().unwrap();
        assert!(last.pinf_integral > 5.0);
    }
}

#[test]
fn linear_part_converges_at_second_order_or_better() {
    let a0 = axisymmetric(0.5);
    let exact = riccati_at(&a0, 1.0);
    let mut errs = Vec::new();
    for dt in [0.02, 0.01, 0.005] {
        let cfg = SolverConfig { dt, horizon: 1.0, fp_tol: 1e-13, ..Default::default() };
        let traj = solve(&linear(3, &a0), &cfg).unwrap();
        errs.push((traj.final_linear_part() - &exact).norm());
    }
    let o1 = (errs[0] / errs[1]).log2();
    let o2 = (errs[1] / errs[2]).log2();
    assert!(o1.min(o2) >= 2.0, "errors {errs:?}");
}

#[test]
fn symmetric_linear_flow_has_no_vorticity() {
    let cfg = SolverConfig { dt: 0.02, horizon: 0.2, metrics: true, ..Default::default() };
    let traj = solve(&linear(3, &axisymmetric(0.5)), &cfg).unwrap();
    assert!(traj.states.iter().all(|s| s.metrics.omega_bmo == Some(0.0)));
    for w in traj.states.windows(2) {
        assert!(w[1].metrics.integral >= w[0].metrics.integral);
    }
}

#[test]
fn uncentred_data_are_rejected_when_not_divergence_free() {
    let spec = compact(2, 8.0, 32);
    let g = GridField::from_fn(spec, 2, |x, out| {
        out[0] = (-(x[0] * x[0] + x[1] * x[1])).exp();
        out[1] = 0.0;
    });
    let v = CompositeField::from_grid(g);
    assert!(matches!(solve(&v, &SolverConfig::default()), Err(euler_campanato::Error::NotDivergenceFree(_))));
    let bad = SolverConfig { dt: -1.0, ..Default::default() };
    assert!(solve(&linear(2, &[0.0, 1.0, 1.0, 0.0]), &bad).is_err());
}

#[test]
fn affine_fields_satisfy_the_log_inequality_trivially() {
    let u = linear(2, &[1.0, 2.0, -3.0, -1.0]);
    let probes = euler_campanato::campanato::lattice_probes(2, 2.0, 3);
    let rep = log_inequality_check(&u, 0.5, &[0, 2, 4], &probes, -2..=4, Some(1.0)).unwrap();
    assert!(rep.holds);
    assert!(rep.rows.iter().all(|r| r.1 < 1e-10));
}

fn sup_diff(a: &CompositeField, b: &CompositeField) -> f64 {
    let d = a.sub(b).unwrap();
    d.poly().max_abs_coeff() + d.grid().map_or(0.0, |g| g.sup_norm())
}

#[test]
fn taylor_green_is_steady() {
    let v0 = corpus::taylor_green(64).unwrap();
    let cfg = SolverConfig { dt: 0.01, horizon: 0.5, fp_tol: 1e-8, store_every: 10, metrics: true, ..Default::default() };
    let traj = solve(&v0, &cfg).unwrap();
    for st in &traj.states {
        assert!(sup_diff(&st.v, &v0) < 1e-6, "t = {}", st.t);
    }
    let om: Vec<f64> = traj.states.iter().map(|s| s.metrics.omega_bmo.unwrap()).collect();
    assert!(om[0] > 0.1);
    assert!(om.iter().all(|w| (w - om[0]).abs() < 1e-6 * om[0]));
    // Constant integrand: the running integral is linear in t.
    for st in &traj.states {
        assert!((st.metrics.integral - om[0] * st.t).abs() < 1e-6 * (1.0 + st.t));
    }
    let norm = traj.windows[0].norm;
    assert!(traj.steps.iter().all(|r| r.divergence < 1e-5 * norm));
}

#[test]
fn galilean_frame_matches_direct_solve() {
    let tg = corpus::taylor_green(128).unwrap();
    let a = [1.5, -1.0];
    let v0 = tg.with_poly(PolynomialField::constant(2, &a)).unwrap();
    let base = SolverConfig { dt: 0.01, horizon: 0.1, fp_tol: 1e-10, store_every: 5, ..Default::default() };
    let moving = solve(&v0, &base).unwrap();
    assert_eq!(moving.frame_velocity.as_deref(), Some(&a[..]));
    let direct = solve(&v0, &SolverConfig { galilean: false, ..base }).unwrap();
    assert_eq!(moving.states.len(), direct.states.len());
    for (p, q) in moving.states.iter().zip(&direct.states) {
        assert!((p.t - q.t).abs() < 1e-12);
        let d = sup_diff(&p.v, &q.v);
        assert!(d < 1e-6, "t = {}: {d:e}", p.t);
        assert!(sup_diff(&p.pgrad, &q.pgrad) < 1e-6);
        // The pressure gradient vanishes on the moving origin.
        let at = p.pgrad.eval(&[a[0] * p.t, a[1] * p.t]);
        assert!(at.iter().all(|x| x.abs() < 1e-6), "{at:?}");
    }
}

#[test]
fn vortex_energy_is_conserved() {
    let spec = compact(2, 8.0, 128);
    let v0 = corpus::elliptic_vortex(spec, 1.5, 1.0).unwrap();
    let e0 = localized_energy(&v0);
    let cfg = SolverConfig { dt: 0.05, horizon: 0.5, fp_tol: 1e-8, store_every: 5, ..Default::default() };
    let traj = solve(&v0, &cfg).unwrap();
    let last = &traj.last().v;
    // The vortex rotates; the energy of its localized part does not change.
    assert!(sup_diff(last, &v0) > 1e-2);
    for st in &traj.states {
        let drift = (localized_energy(&st.v) - e0).abs() / e0;
        assert!(drift < 1e-4, "t = {}: drift {drift:e}", st.t);
    }
    // Planar vorticity is transported: its extrema do not grow.
    let w0 = v0.vorticity().unwrap().grid().unwrap().sup_norm();
    let w1 = last.vorticity().unwrap().grid().unwrap().sup_norm();
    assert!(w1 <= w0 * (1.0 + 1e-3), "{w0} -> {w1}");
}

#[test]
fn picard_map_contracts_on_short_windows() {
    let spec = compact(2, 8.0, 64);
    let data = corpus::divergence_free_corpus(spec, 3, 7).unwrap();
    let v0 = &data[0];
    let cfg = SolverConfig::default();
    let probes = cfg.probes.clone();
    let norm = euler_campanato::campanato::homogeneous_norm_unchecked(v0, &probes, resolvable_scales(&spec)).unwrap().value;
    let window = 0.25 / (cfg.window_c * norm);
    let k = 8;
    let times: Vec<f64> = (0..=k).map(|i| window * i as f64 / k as f64).collect();
    for (i, w) in data[1..].iter().enumerate() {
        let eps = 0.05 * (i + 1) as f64;
        let u1 = FieldPath::constant(v0, &times);
        let u2 = FieldPath::constant(&v0.axpy(eps, w).unwrap(), &times);
        let rho = contraction_ratio(&u1, &u2, v0).unwrap();
        assert!(rho < 2.0 / 3.0, "ratio {rho}");
    }
}

#[test]
fn window_constant_calibration_finds_a_contracting_value() {
    let spec = compact(2, 8.0, 32);
    let data = corpus::divergence_free_corpus(spec, 2, 11).unwrap();
    let cfg = SolverConfig { dt: 0.05, fp_tol: 1e-9, ..Default::default() };
    let rep = calibrate_window_constant(&data, &cfg, &[0.25, 0.5, 1.0, 2.0], 2.0 / 3.0).unwrap();
    let c = rep.c.expect("some constant contracts");
    assert!(c <= DEFAULT_WINDOW_C);
    let last = rep.rows.last().unwrap();
    assert!(last.converged && last.worst_ratio < 2.0 / 3.0);
}

#[test]
fn log_inequality_holds_with_one_constant() {
    let spec = compact(2, 16.0, 128);
    let data = corpus::divergence_free_corpus(spec, 3, 3).unwrap();
    let probes = euler_campanato::campanato::lattice_probes(2, 2.0, 3);
    let scales = resolvable_scales(&spec);
    let mut c_all: f64 = 0.0;
    for u in &data {
        let rep = log_inequality_check(u, 0.5, &[0, 2, 4], &probes, scales.clone(), None).unwrap();
        assert!(rep.holds && rep.c_min > 0.0);
        c_all = c_all.max(rep.c_min);
        let scaled = log_inequality_check(&u.scale(10.0), 0.5, &[0, 2, 4], &probes, scales.clone(), Some(rep.c_min)).unwrap();
        assert!(scaled.holds, "{} > {}", scaled.c_min, rep.c_min);
    }
    assert!(c_all.is_finite());
}

#[test]
fn steady_flow_propagation_bound_holds_with_unit_constant() {
    let v0 = corpus::taylor_green(64).unwrap();
    let cfg = SolverConfig { dt: 0.02, horizon: 0.2, fp_tol: 1e-8, store_every: 5, ..Default::default() };
    let traj = solve(&v0, &cfg).unwrap();
    let rep = oscillation_propagation_check(&traj, &cfg.probes, resolvable_scales(v0.spec().unwrap())).unwrap();
    assert!(rep.holds);
    assert!((rep.c_min - 1.0).abs() < 1e-9);
    assert!(rep.rows.iter().all(|r| (r.1 - 1.0).abs() < 1e-5));
}

#[test]
fn passive_translation_preserves_the_seminorm() {
    let spec = compact(2, 8.0, 128);
    let f = gaussian_bump(spec, [0.0; 3]);
    let shift = [1.0, -0.5];
    let u = constant(2, &shift);
    let zero_g = CompositeField::from_poly(PolynomialField::zeros(2, 1));
    let mut g = f.clone();
    for _ in 0..10 {
        g = transport_step(&g, &u, &zero_g, 0.1).unwrap();
    }
    let params = euler_campanato::campanato::SeminormParams::new(1.0, 1.0, 2.0, 1);
    let probes = euler_campanato::campanato::lattice_probes(2, 1.0, 3);
    let moved: Vec<[f64; 3]> = probes.iter().map(|p| [p[0] + shift[0], p[1] + shift[1], 0.0]).collect();
    let a = euler_campanato::campanato::seminorm(&f, params, &probes, -1..=2).unwrap().value;
    let b = euler_campanato::campanato::seminorm(&g, params, &moved, -1..=2).unwrap().value;
    assert!((a - b).abs() < 1e-4 * a, "{a} vs {b}");
}

#[test]
fn grid_fields_are_unchanged_by_exact_node_shifts() {
    let spec = compact(2, 8.0, 64);
    let f = gaussian_bump(spec, [0.0; 3]);
    let h = spec.h();
    let u = constant(2, &[h, 0.0]);
    let zero_g = CompositeField::from_poly(PolynomialField::zeros(2, 1));
    let g = transport_step(&f, &u, &zero_g, 1.0).unwrap();
    let exact = f.translate(&[h, 0.0]);
    assert!(sup_diff(&g, &exact) < 1e-12);
}
