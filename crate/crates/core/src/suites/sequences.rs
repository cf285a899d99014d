use super::{CheckSpec, Check, Rows, Settings, Table};
use crate::corpus;
use crate::dyadic::{check_composition_bound, lq_norm, s_transform, DyadicSequence};
use crate::error::Result;
use std::fmt::Write as _;

pub(super) const CHECKS: &[CheckSpec] = &[
    CheckSpec {
        id: "delta-transform",
        anchor: "dyadic.transform-of-delta",
        summary: "S_{1,1} of a unit spike at 0 equals 2^j below the spike and 0 above",
    },
    CheckSpec {
        id: "geometric-limit",
        anchor: "dyadic.transform-of-constant",
        summary: "S_{1,2} of the constant sequence 1 equals 2/sqrt(3) at j = 0",
    },
    CheckSpec {
        id: "sup-bound",
        anchor: "dyadic.sup-by-lq-norm",
        summary: "sup_j S_{0,q}X_j <= |X|_{l^q} on the random corpus, q in {1, 2, inf}",
    },
    CheckSpec {
        id: "composition-random",
        anchor: "dyadic.composition-bound",
        summary: "S_{b,q} S_{a,p} X <= (1 - 2^{b-a})^{-1} S_{b,q} X entrywise on the random corpus",
    },
    CheckSpec {
        id: "composition-constant",
        anchor: "dyadic.composition-bound",
        summary: "closed form of both sides for X = 1 on a finite window",
    },
];

const QS: [f64; 3] = [1.0, 2.0, f64::INFINITY];

pub(super) fn run(s: &Settings) -> Result<(Vec<Check>, Vec<Table>)> {
    let mut rows = Rows::new(CHECKS);

    let y = s_transform(&DyadicSequence::delta(-8, 8, 0), 1.0, 1.0)?;
    let err = y
        .iter()
        .map(|(j, v)| (v - if j <= 0 { (j as f64).exp2() } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    rows.at_most("delta-transform", err, 1e-15, "window [-8, 8]");

    let y = s_transform(&DyadicSequence::constant(-10, 60, 1.0), 1.0, 2.0)?;
    rows.at_most("geometric-limit", (y.get(0) - 2.0 / 3f64.sqrt()).abs(), 1e-12, "window [-10, 60]");

    let mut rng = corpus::rng(s.seed);
    let data: Vec<DyadicSequence> =
        (0..s.sequences).map(|_| corpus::random_sequence(&mut rng, -(s.sequence_len as i32) / 2, s.sequence_len)).collect();

    let mut worst_sup: f64 = 0.0;
    for x in &data {
        for q in QS {
            let norm = lq_norm(x, q, 0.0)?;
            if norm > 0.0 {
                worst_sup = worst_sup.max(s_transform(x, 0.0, q)?.sup() / norm);
            }
        }
    }
    rows.at_most("sup-bound", worst_sup, 1.0 + 1e-12, format!("{} sequences, largest ratio sup/norm", data.len()));

    let mut table = String::from("alpha,beta,p,q,cases,max_excess\n");
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut cases = 0usize;
    for alpha in [1.0, 2.0] {
        for beta in [0.0, 0.5] {
            for (ip, &p) in QS.iter().enumerate() {
                for &q in &QS[ip..] {
                    let mut w: f64 = f64::NEG_INFINITY;
                    for x in &data {
                        w = w.max(check_composition_bound(x, alpha, beta, p, q)?.max_excess);
                    }
                    cases += data.len();
                    worst = worst.max(w);
                    let _ = writeln!(table, "{alpha},{beta},{p},{q},{},{w:e}", data.len());
                }
            }
        }
    }
    rows.at_most(
        "composition-random",
        worst,
        1e-9,
        format!("{cases} cases over alpha in {{1, 2}}, beta in {{0, 0.5}}, p <= q in {{1, 2, inf}}; largest relative excess"),
    );

    // X = 1 on [0, K): S_{1,1}X_j = 2 - 2^{j-K+1}; the right side is 2(K - j).
    let k = 12;
    let rep = check_composition_bound(&DyadicSequence::constant(0, k - 1, 1.0), 1.0, 0.0, 1.0, 1.0)?;
    let mut err: f64 = 0.0;
    for (j, v) in rep.lhs.iter() {
        let expect: f64 = (j..k).map(|i| 2.0 - ((i - k + 1) as f64).exp2()).sum();
        err = err.max((v - expect).abs() / expect).max((rep.rhs.get(j) - 2.0 * (k - j) as f64).abs());
    }
    let ok = if rep.holds { err } else { f64::INFINITY };
    rows.at_most("composition-constant", ok, 1e-12, "alpha = 1, beta = 0, p = q = 1, window [0, 11]");

    Ok((rows.checks, vec![Table { name: "composition.csv".into(), csv: table }]))
}
