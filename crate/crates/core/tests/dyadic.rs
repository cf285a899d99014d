use euler_campanato::corpus;
use euler_campanato::dyadic::*;
use euler_campanato::Error;
use proptest::prelude::*;

const QS: [f64; 3] = [1.0, 2.0, f64::INFINITY];

/// Direct summation of the transform, one entry at a time.
fn s_direct(x: &DyadicSequence, alpha: f64, q: f64) -> Vec<f64> {
    x.iter()
        .map(|(j, _)| {
            let terms = x.iter().filter(|(i, _)| *i >= j).map(|(i, v)| ((j - i) as f64 * alpha).exp2() * v);
            if q.is_infinite() {
                terms.fold(0.0, f64::max)
            } else {
                terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
            }
        })
        .collect()
}

#[test]
fn delta_transform() {
    let x = DyadicSequence::delta(-5, 5, 0);
    let y = s_transform(&x, 1.0, 1.0).unwrap();
    for (j, v) in y.iter() {
        let expect = if j <= 0 { (j as f64).exp2() } else { 0.0 };
        assert!((v - expect).abs() < 1e-15);
    }
}

#[test]
fn constant_sequence_geometric_limit() {
    // Sixty terms past j = 0 leave a tail below 2^{-60}.
    let x = DyadicSequence::constant(-10, 60, 1.0);
    let y = s_transform(&x, 1.0, 2.0).unwrap();
    assert!((y.get(0) - 2.0 / 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn zero_alpha_sup_transform_and_norm_bound() {
    let mut rng = corpus::rng(1);
    for _ in 0..50 {
        let x = corpus::random_sequence(&mut rng, -8, 24);
        let y = s_transform(&x, 0.0, f64::INFINITY).unwrap();
        for (j, v) in y.iter() {
            let sup = x.iter().filter(|(i, _)| *i >= j).map(|(_, v)| v).fold(0.0, f64::max);
            assert_eq!(v, sup);
        }
        for q in QS {
            let yq = s_transform(&x, 0.0, q).unwrap();
            assert!(yq.sup() <= lq_norm(&x, q, 0.0).unwrap() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn lq_norm_examples() {
    let d = DyadicSequence::delta(-3, 3, 0);
    assert_eq!(lq_norm(&d, 1.0, 1.0).unwrap(), 1.0);
    let s = 0.5;
    let k = 7;
    let x = DyadicSequence::new(-3, (0..k).map(|i| ((i - 3) as f64 * s).exp2()).collect()).unwrap();
    for q in [1.0, 2.0, 3.5] {
        let v = lq_norm(&x, q, s).unwrap();
        assert!((v - (k as f64).powf(1.0 / q)).abs() < 1e-12);
    }
    assert!((lq_norm(&x, f64::INFINITY, s).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn lq_norm_matches_direct_sum() {
    let mut rng = corpus::rng(2);
    for _ in 0..100 {
        let x = corpus::random_sequence(&mut rng, -5, 16);
        let direct: f64 = x.iter().map(|(j, v)| (-0.75 * j as f64).exp2() * v).sum();
        let v = lq_norm(&x, 1.0, 0.75).unwrap();
        assert!((v - direct).abs() <= 1e-15 * direct.max(1e-300) * 16.0);
    }
}

#[test]
fn transform_matches_direct_sum() {
    let mut rng = corpus::rng(3);
    for _ in 0..50 {
        let x = corpus::random_sequence(&mut rng, -6, 20);
        for q in QS {
            let y = s_transform(&x, 1.5, q).unwrap();
            for (a, b) in y.values().iter().zip(s_direct(&x, 1.5, q)) {
                assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
            }
        }
    }
}

#[test]
fn invalid_arguments() {
    let x = DyadicSequence::delta(0, 3, 1);
    assert!(matches!(s_transform(&x, 1.0, 0.5), Err(Error::InvalidExponent(_))));
    assert!(s_transform(&x, f64::NAN, 1.0).is_err());
    assert!(matches!(lq_norm(&x, 0.9, 0.0), Err(Error::InvalidExponent(_))));
    assert!(check_composition_bound(&x, 1.0, 1.0, 1.0, 1.0).is_err());
    assert!(check_composition_bound(&x, 1.0, 0.0, 2.0, 1.0).is_err());
    assert!(DyadicSequence::new(0, vec![1.0, -1.0]).is_err());
    assert!(DyadicSequence::new(0, vec![]).is_err());
}

#[test]
fn composition_bound_on_delta() {
    let x = DyadicSequence::delta(-6, 6, 0);
    assert!(check_composition_bound(&x, 2.0, 1.0, 1.0, 1.0).unwrap().holds);
}

#[test]
fn composition_bound_closed_form_for_constants() {
    // X ≡ 1 on [0, K): S_{1,1}X_j = 2 - 2^{j-K+1}, and the outer sums are finite.
    let k = 12;
    let x = DyadicSequence::constant(0, k - 1, 1.0);
    let rep = check_composition_bound(&x, 1.0, 0.0, 1.0, 1.0).unwrap();
    for (j, v) in rep.lhs.iter() {
        let inner = |i: i32| 2.0 - ((i - k + 1) as f64).exp2();
        let expect: f64 = (j..k).map(inner).sum();
        assert!((v - expect).abs() < 1e-12 * expect);
        assert!((rep.rhs.get(j) - 2.0 * (k - j) as f64).abs() < 1e-12);
    }
    assert!(rep.holds);
}

#[test]
fn composition_bound_on_random_corpus() {
    let mut rng = corpus::rng(4);
    let mut count = 0;
    for _ in 0..1000 {
        let x = corpus::random_sequence(&mut rng, -10, 30);
        for alpha in [1.0, 2.0] {
            for beta in [0.0, 0.5] {
                for (ip, p) in QS.iter().enumerate() {
                    for q in &QS[ip..] {
                        let rep = check_composition_bound(&x, alpha, beta, *p, *q).unwrap();
                        assert!(rep.holds, "excess {}", rep.max_excess);
                        count += 1;
                    }
                }
            }
        }
    }
    assert_eq!(count, 24_000);
}

fn sequence() -> impl Strategy<Value = DyadicSequence> {
    (-8i32..4, prop::collection::vec(0.0f64..1e3, 1..24)).prop_map(|(j, v)| DyadicSequence::new(j, v).unwrap())
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY), 1.0f64..6.0]
}

proptest! {
    #[test]
    fn transform_is_monotone(x in sequence(), bump in prop::collection::vec(0.0f64..10.0, 24), alpha in -1.0f64..3.0, q in exponent()) {
        let bigger = DyadicSequence::new(x.j_min(), x.values().iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        let y = s_transform(&x, alpha, q).unwrap();
        let z = s_transform(&bigger, alpha, q).unwrap();
        for (a, b) in y.values().iter().zip(z.values()) {
            prop_assert!(*a <= b * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn transform_is_homogeneous(x in sequence(), c in 0.0f64..100.0, alpha in -1.0f64..3.0, q in exponent()) {
        let scaled = DyadicSequence::new(x.j_min(), x.values().iter().map(|v| c * v).collect()).unwrap();
        let y = s_transform(&x, alpha, q).unwrap();
        let z = s_transform(&scaled, alpha, q).unwrap();
        for (a, b) in y.values().iter().zip(z.values()) {
            prop_assert!((c * a - b).abs() <= 1e-12 * b.max(c * a).max(1e-300));
        }
    }

    #[test]
    fn sup_of_zero_transform_is_bounded_by_the_norm(x in sequence(), q in exponent()) {
        let y = s_transform(&x, 0.0, q).unwrap();
        prop_assert!(y.sup() <= lq_norm(&x, q, 0.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn composition_bound_holds(x in sequence(), alpha in 0.1f64..3.0, gap in 0.05f64..2.0, p in exponent(), extra in 0.0f64..3.0, inf in any::<bool>()) {
        let q = if inf || p.is_infinite() { f64::INFINITY } else { p + extra };
        let rep = check_composition_bound(&x, alpha, alpha - gap, p, q).unwrap();
        prop_assert!(rep.holds, "excess {}", rep.max_excess);
    }
}
