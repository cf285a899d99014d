use super::{Check, CheckSpec, Rows, Settings, Table};
use crate::corpus;
use crate::error::Result;
use crate::euler::{calibrate_window_constant, localized_energy, solve, SolverConfig, DEFAULT_WINDOW_C};
use crate::fields::{BoundaryMode, CompositeField, GridSpec, PolynomialField};
use crate::linearflows::{integrate_riccati, RiccatiOptions};
use nalgebra::DMatrix;
use std::fmt::Write as _;

pub(super) const CHECKS: &[CheckSpec] = &[
    CheckSpec {
        id: "taylor-green-steady",
        anchor: "euler.steady-taylor-green",
        summary: "the Taylor-Green cell stays fixed under the full solver",
    },
    CheckSpec {
        id: "taylor-green-divergence",
        anchor: "euler.divergence-free-iterates",
        summary: "every step of the Taylor-Green run is divergence free relative to its norm",
    },
    CheckSpec {
        id: "vortex-energy",
        anchor: "euler.localized-energy-conservation",
        summary: "energy of the localized part of a rotating elliptic vortex is conserved",
    },
    CheckSpec {
        id: "riccati-order",
        anchor: "euler.linear-part-follows-riccati",
        summary: "the solver's linear part converges to the Riccati flow at order >= 2 in dt",
    },
    CheckSpec {
        id: "galilean-shift",
        anchor: "euler.galilean-shift",
        summary: "solving in the moving frame and shifting back equals the direct solve",
    },
    CheckSpec {
        id: "axisymmetric-blowup",
        anchor: "euler.axisymmetric-blowup",
        summary: "full-solver blow-up time of diag(l, l, -2l) x matches the Riccati integrator",
    },
    CheckSpec {
        id: "window-calibration",
        anchor: "euler.window-constant",
        summary: "smallest window constant with Picard contraction ratio below 2/3 on the corpus",
    },
];

fn sup_diff(a: &CompositeField, b: &CompositeField) -> Result<f64> {
    let d = a.sub(b)?;
    Ok(d.poly().max_abs_coeff() + d.grid().map_or(0.0, |g| g.sup_norm()))
}

fn linear(n: usize, a: &[f64]) -> Result<CompositeField> {
    Ok(CompositeField::from_poly(PolynomialField::affine(n, a, &vec![0.0; n])?))
}

fn axisymmetric(l: f64) -> [f64; 9] {
    [l, 0.0, 0.0, 0.0, l, 0.0, 0.0, 0.0, -2.0 * l]
}

pub(super) fn run(s: &Settings) -> Result<(Vec<Check>, Vec<Table>)> {
    let mut rows = Rows::new(CHECKS);
    let mut tables = Vec::new();

    let v0 = corpus::taylor_green(s.euler_m)?;
    let steps = (s.euler_horizon / s.euler_dt).round().max(1.0) as usize;
    let cfg = SolverConfig {
        dt: s.euler_dt,
        horizon: s.euler_horizon,
        fp_tol: 1e-8,
        store_every: (steps / 10).max(1),
        ..Default::default()
    };
    let traj = solve(&v0, &cfg)?;
    let mut steady: f64 = 0.0;
    for st in &traj.states {
        steady = steady.max(sup_diff(&st.v, &v0)?);
    }
    rows.at_most(
        "taylor-green-steady",
        steady,
        s.tol.steady,
        format!("m = {}, dt = {}, t in [0, {}]", s.euler_m, s.euler_dt, s.euler_horizon),
    );
    let norm = traj.windows.first().map_or(1.0, |w| w.norm);
    let div = traj.steps.iter().map(|r| r.divergence).fold(0.0, f64::max) / norm;
    rows.at_most("taylor-green-divergence", div, 1e-5, "largest sup |div v| over the norm");
    tables.push(Table { name: "taylor_green_steps.csv".into(), csv: traj.steps_csv() });

    let spec = GridSpec::new(2, 8.0, s.euler_m, BoundaryMode::Compact)?;
    let vortex = corpus::elliptic_vortex(spec, 1.5, 1.0)?;
    let e0 = localized_energy(&vortex);
    let cfg = SolverConfig { dt: 0.02, horizon: s.euler_horizon, fp_tol: 1e-8, store_every: 5, ..Default::default() };
    let traj = solve(&vortex, &cfg)?;
    let mut drift: f64 = 0.0;
    let mut energy = String::from("t,energy,relative_drift\n");
    for st in &traj.states {
        let e = localized_energy(&st.v);
        drift = drift.max((e - e0).abs() / e0);
        let _ = writeln!(energy, "{:e},{e:e},{:e}", st.t, (e - e0).abs() / e0);
    }
    tables.push(Table { name: "vortex_energy.csv".into(), csv: energy });
    rows.at_most("vortex-energy", drift, s.tol.energy, format!("semi-axes 1.5 and 1, m = {}, dt = 0.02", s.euler_m));

    let a0 = axisymmetric(0.5);
    let exact = integrate_riccati(&DMatrix::from_row_slice(3, 3, &a0), 1.0, &RiccatiOptions::with_tol(1e-13))?
        .last()
        .a
        .clone();
    let mut errs = Vec::new();
    for dt in [0.02, 0.01, 0.005] {
        let cfg = SolverConfig { dt, horizon: 1.0, fp_tol: 1e-13, ..Default::default() };
        errs.push((solve(&linear(3, &a0)?, &cfg)?.final_linear_part() - &exact).norm());
    }
    let order = (errs[0] / errs[1]).log2().min((errs[1] / errs[2]).log2());
    rows.at_least(
        "riccati-order",
        order,
        s.tol.riccati_order,
        format!("errors {:.3e}, {:.3e}, {:.3e} at dt = 0.02, 0.01, 0.005", errs[0], errs[1], errs[2]),
    );

    let a = [1.5, -1.0];
    let shifted = corpus::taylor_green(s.euler_m)?.with_poly(PolynomialField::constant(2, &a))?;
    let base = SolverConfig { dt: 0.01, horizon: s.euler_horizon.min(0.5), fp_tol: 1e-10, store_every: 5, ..Default::default() };
    let moving = solve(&shifted, &base)?;
    let direct = solve(&shifted, &SolverConfig { galilean: false, ..base })?;
    let mut gap: f64 = 0.0;
    for (p, q) in moving.states.iter().zip(&direct.states) {
        gap = gap.max(sup_diff(&p.v, &q.v)?).max(sup_diff(&p.pgrad, &q.pgrad)?);
        let at = p.pgrad.eval(&[a[0] * p.t, a[1] * p.t]);
        gap = gap.max(at.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    if moving.states.len() != direct.states.len() {
        gap = f64::INFINITY;
    }
    rows.at_most("galilean-shift", gap, s.tol.galilean, format!("frame velocity (1.5, -1), m = {}", s.euler_m));

    let mut worst: f64 = 0.0;
    let mut note = String::new();
    for l in [1.0, 2.0] {
        let cfg = SolverConfig { dt: 0.01, horizon: 10.0, ..Default::default() };
        let traj = solve(&linear(3, &axisymmetric(l))?, &cfg)?;
        let oracle = integrate_riccati(&DMatrix::from_row_slice(3, 3, &axisymmetric(l)), 10.0, &RiccatiOptions::default())?
            .blowup
            .map_or(f64::NAN, |b| b.t_star);
        let t_star = traj.blowup.as_ref().map_or(f64::INFINITY, |b| b.t_star);
        worst = worst.max((t_star - oracle).abs() / oracle);
        let _ = write!(note, "lambda {l}: T* = {t_star:.5} vs {oracle:.5}; ");
        if l == 1.0 {
            tables.push(Table { name: "axisymmetric_steps.csv".into(), csv: traj.steps_csv() });
        }
    }
    rows.at_most("axisymmetric-blowup", worst, s.tol.euler_blowup, note.trim_end_matches("; ").to_string());

    let cspec = GridSpec::new(2, 8.0, 32, BoundaryMode::Compact)?;
    let data = corpus::divergence_free_corpus(cspec, s.corpus, s.seed)?;
    let cfg = SolverConfig { dt: 0.05, fp_tol: 1e-9, ..Default::default() };
    let rep = calibrate_window_constant(&data, &cfg, &[0.25, 0.5, 1.0, 2.0], 2.0 / 3.0)?;
    let mut cal = String::from("c,worst_ratio,converged\n");
    for r in &rep.rows {
        let _ = writeln!(cal, "{},{:e},{}", r.c, r.worst_ratio, r.converged);
    }
    tables.push(Table { name: "window_calibration.csv".into(), csv: cal });
    rows.at_most(
        "window-calibration",
        rep.c.unwrap_or(f64::INFINITY),
        DEFAULT_WINDOW_C,
        format!("{} corpus fields, target ratio 2/3", data.len()),
    );

    Ok((rows.checks, tables))
}
