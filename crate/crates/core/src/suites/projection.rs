use super::{Check, CheckSpec, Rows, Settings, Table};
use crate::campanato::{mean_polynomial, moment, oscillation, oscillation_pair, OscMode};
use crate::corpus;
use crate::error::Result;
use crate::fields::{BoundaryMode, CompositeField, GridField, GridSpec, PolynomialField};
use std::fmt::Write as _;

pub(super) const CHECKS: &[CheckSpec] = &[
    CheckSpec {
        id: "mean-polynomial-reproduction",
        anchor: "campanato.mean-polynomial-reproduces-polynomials",
        summary: "the mean polynomial of a degree-2 polynomial is the polynomial itself",
    },
    CheckSpec {
        id: "vanishing-moments",
        anchor: "campanato.mean-polynomial-vanishing-moments",
        summary: "f - P has zero mollified moments up to the degree on every test ball",
    },
    CheckSpec {
        id: "proxy-dominates-exact",
        anchor: "campanato.proxy-exact-comparability",
        summary: "the mean-polynomial oscillation is never below the least-squares minimum",
    },
    CheckSpec {
        id: "proxy-exact-constant",
        anchor: "campanato.proxy-exact-comparability",
        summary: "one constant bounds proxy/exact over the whole bump corpus",
    },
    CheckSpec {
        id: "low-degree-oscillation",
        anchor: "campanato.polynomials-do-not-oscillate",
        summary: "affine fields have zero degree-1 oscillation in both modes",
    },
    CheckSpec {
        id: "square-oscillation",
        anchor: "campanato.exact-oscillation-of-square",
        summary: "x_1^2 has normalized L^2 oscillation 1/4 at r = 1 and scales like r^2",
    },
];

const ALPHAS: [[u8; 3]; 6] = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0], [1, 1, 0], [0, 2, 0]];

fn test_polynomial() -> PolynomialField {
    let mut q = PolynomialField::zeros(2, 1);
    q.set(0, &[0, 0, 0], 0.7);
    q.set(0, &[1, 0, 0], -1.3);
    q.set(0, &[0, 1, 0], 0.4);
    q.set(0, &[2, 0, 0], 0.25);
    q.set(0, &[1, 1, 0], -0.6);
    q.set(0, &[0, 2, 0], 1.1);
    q
}

pub(super) fn run(s: &Settings) -> Result<(Vec<Check>, Vec<Table>)> {
    let mut rows = Rows::new(CHECKS);
    let spec = GridSpec::new(2, 8.0, s.campanato_m, BoundaryMode::Compact)?;
    let h = spec.h();
    let centres = [[0.0, 0.0], [1.0, 0.0], [-1.0, 1.5]];
    let radii: Vec<f64> = [0.5, 1.0, 2.0, 4.0].into_iter().filter(|r| *r >= 4.0 * h).collect();

    let q = test_polynomial();
    let f = CompositeField::new(q.clone(), Some(GridField::zeros(spec, 1)))?;
    let mut err: f64 = 0.0;
    for x0 in &centres {
        for &r in &radii {
            for degree in 0..=2 {
                let p = mean_polynomial(&f, degree, x0, r)?;
                if degree == 2 {
                    err = err.max(p.sub(&q)?.max_abs_coeff());
                }
                let low = q.truncate(degree);
                let pl = mean_polynomial(&CompositeField::from_poly(low.clone()), degree, x0, r)?;
                err = err.max(pl.sub(&low)?.max_abs_coeff());
            }
        }
    }
    rows.at_most("mean-polynomial-reproduction", err, s.tol.mean_polynomial, "largest coefficient error");

    let bumps = corpus::bump_corpus(spec, s.corpus, s.seed)?;
    let affine = PolynomialField::affine(2, &[0.3, -0.5], &[0.2])?;
    let mut worst: f64 = 0.0;
    for b in &bumps {
        let f = b.with_poly(affine.clone())?;
        for x0 in &centres[..2] {
            for &r in &radii[..2.min(radii.len())] {
                for degree in 0..=2 {
                    let p = mean_polynomial(&f, degree, x0, r)?;
                    let diff = f.sub(&CompositeField::from_poly(p))?;
                    for alpha in ALPHAS.iter().filter(|a| a.iter().sum::<u8>() as usize <= degree) {
                        worst = worst.max(moment(&diff, alpha, x0, r)?[0].abs());
                    }
                }
            }
        }
    }
    rows.at_most("vanishing-moments", worst, s.tol.vanishing_moments, format!("{} bump fields plus affine part", bumps.len()));

    let mut table = String::from("field,degree,x0,y0,r,exact,proxy,ratio\n");
    let (mut lowest, mut constant): (f64, f64) = (f64::INFINITY, 0.0);
    for (i, b) in bumps.iter().enumerate() {
        for x0 in &centres {
            for &r in &radii {
                for degree in 0..=2 {
                    let (e, p) = oscillation_pair(b, degree, x0, r)?;
                    let ratio = p / e;
                    if e > 1e-12 {
                        lowest = lowest.min(ratio);
                        constant = constant.max(ratio);
                    }
                    let _ = writeln!(table, "{i},{degree},{},{},{r},{e:e},{p:e},{ratio:e}", x0[0], x0[1]);
                }
            }
        }
    }
    rows.at_least("proxy-dominates-exact", lowest, 1.0 - 1e-9, "smallest proxy/exact ratio");
    rows.at_most("proxy-exact-constant", constant, s.tol.comparability, "largest proxy/exact ratio");

    let lin = PolynomialField::affine(2, &[1.0, 2.0, -0.5, 0.3], &[1.0, -1.0])?;
    let f = CompositeField::new(lin, Some(GridField::zeros(spec, 2)))?;
    let mut o: f64 = 0.0;
    for mode in [OscMode::Exact2, OscMode::Proxy] {
        o = o.max(oscillation(&f, 2.0, 1, &[0.5, 0.5], 1.0, mode)?);
    }
    rows.at_most("low-degree-oscillation", o, 1e-12, "degree-1 oscillation of an affine field");

    let mut sq = PolynomialField::zeros(2, 1);
    sq.set(0, &[2, 0, 0], 1.0);
    let f = CompositeField::from_poly(sq);
    let o1 = oscillation(&f, 2.0, 1, &[0.0, 0.0], 1.0, OscMode::Exact2)?;
    let o2 = oscillation(&f, 2.0, 1, &[3.0, -1.0], 2.0, OscMode::Exact2)?;
    rows.at_most("square-oscillation", (o1 - 0.25).abs().max((o2 - 1.0).abs()), 1e-11, "r = 1 and r = 2");

    Ok((rows.checks, vec![Table { name: "oscillation_pairs.csv".into(), csv: table }]))
}
