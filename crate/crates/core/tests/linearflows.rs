use euler_campanato::linearflows::{
    equivalence_transform, euler_residual, integrate_riccati, invariants_3d, parse_matrix, residual_points,
    riccati_rhs, verify_linear_solution, EquivalenceShift, PolyPath, RiccatiOptions,
};
use euler_campanato::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
}

/// Brute-force classical Runge–Kutta for `λ̇ = λ²` until `λ > cap`.
fn scalar_blowup_time(l0: f64) -> f64 {
    let (mut t, mut l) = (0.0, l0);
    let f = |x: f64| x * x;
    while l < 1e7 {
        let h = 1e-4 / l;
        let k1 = f(l);
        let k2 = f(l + 0.5 * h * k1);
        let k3 = f(l + 0.5 * h * k2);
        let k4 = f(l + h * k3);
        l += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    // λ ≈ 1/(T* - t) at the end.
    t + 1.0 / l
}

#[test]
fn rhs_examples() {
    assert_eq!(riccati_rhs(&DMatrix::zeros(3, 3)).unwrap(), DMatrix::zeros(3, 3));
    assert_eq!(riccati_rhs(&diag(&[1.5, -1.5])).unwrap(), DMatrix::zeros(2, 2));
    let l = 0.7;
    let r = riccati_rhs(&diag(&[l, l, -2.0 * l])).unwrap();
    let expect = diag(&[l * l, l * l, -2.0 * l * l]);
    assert!((r - expect).norm() < 1e-15);
    assert!(matches!(riccati_rhs(&diag(&[1.0, 1.0])), Err(Error::NotTraceFree(_))));
    assert!(riccati_rhs(&DMatrix::zeros(2, 3)).is_err());
}

#[test]
fn parse_matrix_rows() {
    let a = parse_matrix("1,0,0;0,2,0;0,0,-3").unwrap();
    assert_eq!(a, diag(&[1.0, 2.0, -3.0]));
    assert!(parse_matrix("1,2;3").is_err());
}

#[test]
fn planar_flow_is_stationary() {
    for a0 in [diag(&[2.0, -2.0]), DMatrix::from_row_slice(2, 2, &[0.3, 1.7, -0.9, -0.3])] {
        let traj = integrate_riccati(&a0, 100.0, &RiccatiOptions::default()).unwrap();
        assert!(traj.blowup.is_none());
        assert!(traj.stationarity_defect() < 1e-8);
        assert_eq!(traj.last().t, 100.0);
    }
}

/// Classical Runge–Kutta on the diagonal system `λ̇_i = -λ_i² + |λ|²/3`
/// until `max |λ_i| > 1e7`; returns the extrapolated singular time.
fn diagonal_blowup_time(l0: [f64; 3]) -> f64 {
    let f = |l: [f64; 3]| {
        let s = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]) / 3.0;
        [s - l[0] * l[0], s - l[1] * l[1], s - l[2] * l[2]]
    };
    let (mut t, mut l) = (0.0, l0);
    loop {
        let big = l.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if big > 1e7 {
            return t + 2.0 / big;
        }
        let h = 1e-4 / big;
        let add = |a: [f64; 3], k: [f64; 3], c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2]];
        let k1 = f(l);
        let k2 = f(add(l, k1, 0.5 * h));
        let k3 = f(add(l, k2, 0.5 * h));
        let k4 = f(add(l, k3, h));
        for i in 0..3 {
            l[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
}

#[test]
fn distinct_eigenvalues_can_still_blow_up() {
    // The two largest eigenvalues merge while the third runs to -∞.
    let traj = integrate_riccati(&diag(&[1.0, 2.0, -3.0]), 10.0, &RiccatiOptions::default()).unwrap();
    let b = traj.blowup.clone().expect("blow-up");
    let oracle = diagonal_blowup_time([1.0, 2.0, -3.0]);
    assert!((b.t_star - oracle).abs() < 1e-6, "{} vs {oracle}", b.t_star);
    let inv = invariants_3d(&traj).unwrap();
    assert!(inv.applicable);
    assert!(inv.evaluated_until > 0.5 && inv.evaluated_until < b.t_star);
    assert!(inv.trace_drift < 1e-7);
    assert!(inv.mu_product_drift < 1e-7, "{}", inv.mu_product_drift);
    assert!(inv.beta_relation_residual < 1e-7);
    assert!(inv.signs_preserved);
}

#[test]
fn axisymmetric_data_blow_up_at_inverse_lambda() {
    for l0 in [0.5, 1.0, 2.0, 4.0] {
        let traj = integrate_riccati(&diag(&[l0, l0, -2.0 * l0]), 10.0, &RiccatiOptions::default()).unwrap();
        let b = traj.blowup.clone().expect("blow-up");
        let oracle = scalar_blowup_time(l0);
        assert!((b.t_star * l0 - 1.0).abs() < 1e-3, "λ0={l0} T*={}", b.t_star);
        assert!((b.t_star - oracle).abs() < 1e-3 * oracle);
        let inv = invariants_3d(&traj).unwrap();
        assert!(!inv.applicable);
    }
}

#[test]
fn csv_has_header_and_rows() {
    let traj = integrate_riccati(&diag(&[1.0, -1.0]), 1.0, &RiccatiOptions::default()).unwrap();
    let csv = traj.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,a11,a12,a21,a22,trace,norm");
    assert_eq!(lines.count(), traj.samples.len());
}

#[test]
fn closed_form_solutions() {
    let times: Vec<f64> = (0..=90).map(|k| 0.01 * k as f64).collect();
    let r = verify_linear_solution(&PolyPath::hyperbolic_blowup(1.0), &times).unwrap();
    assert!(r.max_abs < 1e-9, "{}", r.max_abs);
    let r = verify_linear_solution(&PolyPath::steady_pair(), &times).unwrap();
    assert!(r.max_abs < 1e-12);
    let r = verify_linear_solution(&PolyPath::unsteady_pair(1.0), &times).unwrap();
    assert!(r.max_abs < 1e-12);
    // The printed variant misses 2 x_2 in the second component only.
    let r = verify_linear_solution(&PolyPath::unsteady_pair(-1.0), &times).unwrap();
    assert!(r.per_component[0] < 1e-12);
    assert!((r.per_component[1] - 2.0).abs() < 1e-12);
}

#[test]
fn shifts_preserve_solutions() {
    let times: Vec<f64> = (0..=20).map(|k| 0.04 * k as f64).collect();
    let path = PolyPath::hyperbolic_blowup(1.0);
    let samples = path.sample(&times);
    let pts = residual_points(2);
    let same = equivalence_transform(&samples, &EquivalenceShift::zero(2, &times)).unwrap();
    for (a, b) in same.iter().zip(&samples) {
        assert_eq!(a.v, b.v);
        assert_eq!(a.pgrad, b.pgrad);
    }
    // ξ(t) = (t, 0).
    let shift = EquivalenceShift::from_fn(&times, |t| (vec![t, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]));
    let moved = equivalence_transform(&samples, &shift).unwrap();
    assert!(euler_residual(&moved, &pts).unwrap() < 1e-8);
    // A curved shift exercises the ξ̈ term.
    let shift = EquivalenceShift::from_fn(&times, |t| {
        (vec![t * t, (2.0 * t).sin()], vec![2.0 * t, 2.0 * (2.0 * t).cos()], vec![2.0, -4.0 * (2.0 * t).sin()])
    });
    let moved = equivalence_transform(&samples, &shift).unwrap();
    assert!(euler_residual(&moved, &pts).unwrap() < 1e-8);
    assert!(matches!(equivalence_transform(&samples[1..], &shift), Err(Error::TimeGridMismatch)));
}

#[test]
fn centering_shift_centres_the_solution() {
    let times: Vec<f64> = (0..=10).map(|k| 0.05 * k as f64).collect();
    let path = PolyPath::unsteady_pair(1.0);
    let shift = EquivalenceShift::centering(&path, &times, &[0.3, -0.2], 200).unwrap();
    let moved = equivalence_transform(&path.sample(&times), &shift).unwrap();
    for s in &moved {
        let v0 = s.v.eval(&[0.0, 0.0]);
        assert!(v0[0].abs() < 1e-12 && v0[1].abs() < 1e-12);
    }
    assert!(euler_residual(&moved, &residual_points(2)).unwrap() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_is_preserved(a in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let mut m = DMatrix::from_row_slice(3, 3, &[a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], 0.0]);
        m[(2, 2)] = -(a[0] + a[4]);
        let traj = integrate_riccati(&m, 1.0, &RiccatiOptions::default()).unwrap();
        prop_assert!(traj.trace_drift() < 1e-9);
    }

    #[test]
    fn symmetric_data_satisfy_the_eigen_relations(a in proptest::collection::vec(-1.0f64..1.0, 5)) {
        let mut m = DMatrix::from_row_slice(3, 3, &[a[0], a[1], a[2], a[1], a[3], a[4], a[2], a[4], 0.0]);
        m[(2, 2)] = -(a[0] + a[3]);
        let traj = integrate_riccati(&m, 1.0, &RiccatiOptions::default()).unwrap();
        let inv = invariants_3d(&traj).unwrap();
        if inv.applicable && traj.blowup.is_none() {
            let tight = integrate_riccati(&m, 1.0, &RiccatiOptions::with_tol(1e-13)).unwrap();
            let d = (&traj.last().a - &tight.last().a).norm();
            prop_assert!(d < 1e-6 * (1.0 + tight.last().a.norm()));
            prop_assert!(inv.mu_product_relative_drift < 1e-6);
            prop_assert!(inv.signs_preserved);
        }
    }
}
