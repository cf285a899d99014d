use super::{Check, CheckSpec, Rows, Settings, Table};
use crate::campanato::{bmo_seminorm, lattice_probes, mean_polynomial};
use crate::corpus;
use crate::error::Result;
use crate::euler::resolvable_scales;
use crate::fields::{BoundaryMode, CompositeField, GridField, GridSpec, PolynomialField};
use crate::potential::{
    bmo_pressure, curl_sup, cz_apply, helmholtz_project, poisson_solve_hessian, pressure_gradient, very_weak_residual,
    KernelSpec,
};
use std::fmt::Write as _;
use std::ops::RangeInclusive;

pub(super) const CHECKS: &[CheckSpec] = &[
    CheckSpec {
        id: "poisson-very-weak",
        anchor: "potential.poisson-very-weak-solution",
        summary: "manufactured Hessian data H = -f0 I: relative very weak residual of the solution",
    },
    CheckSpec {
        id: "poisson-exact",
        anchor: "potential.poisson-very-weak-solution",
        summary: "the solution equals f0 minus its mean polynomial at the unit ball",
    },
    CheckSpec {
        id: "helmholtz-fixes-divergence-free",
        anchor: "potential.helmholtz-projection",
        summary: "P u = u on the divergence-free corpus and the Taylor-Green cell",
    },
    CheckSpec {
        id: "helmholtz-idempotent",
        anchor: "potential.helmholtz-projection",
        summary: "P P u = P u on fields with gradient and affine parts",
    },
    CheckSpec {
        id: "pressure-hyperbolic",
        anchor: "potential.pressure-operator-linear-part",
        summary: "u = v = diag(1, -1) x gives grad Pi(u, v) = -x exactly",
    },
    CheckSpec {
        id: "pressure-curl-free",
        anchor: "potential.pressure-operator-is-a-gradient",
        summary: "curl of grad Pi(u, u) vanishes on the divergence-free corpus",
    },
    CheckSpec {
        id: "bound-cz",
        anchor: "potential.cz-boundedness",
        summary: "|T h|_BMO / |h|_BMO for the kernel d1 d2 Gamma, stable under refinement",
    },
    CheckSpec {
        id: "bound-poisson",
        anchor: "potential.poisson-boundedness",
        summary: "|d1 d2 f|_BMO / |f0|_BMO for the manufactured Poisson solution, stable under refinement",
    },
    CheckSpec {
        id: "bound-pressure",
        anchor: "potential.pressure-boundedness",
        summary: "|grad grad Pi(u, u)|_BMO / (|grad u|_inf |grad u|_BMO), stable under refinement",
    },
    CheckSpec {
        id: "bound-bmo-pressure",
        anchor: "potential.bmo-pressure-boundedness",
        summary: "|Pi(v)|_BMO / |v|_inf^2 for bounded v, stable under refinement",
    },
];

fn sup_diff(a: &CompositeField, b: &CompositeField) -> Result<f64> {
    let d = a.sub(b)?;
    Ok(d.poly().max_abs_coeff() + d.grid().map_or(0.0, |g| g.sup_norm()))
}

fn minus_f0_identity(f0: &CompositeField) -> Result<CompositeField> {
    let n = f0.n();
    let zero = f0.scale(0.0);
    let parts: Vec<CompositeField> =
        (0..n * n).map(|ab| if ab / n == ab % n { f0.scale(-1.0) } else { zero.clone() }).collect();
    CompositeField::stack(&parts)
}

struct Constants {
    cz: f64,
    poisson: f64,
    pressure: f64,
    bmo_pressure: f64,
}

fn constants(m: usize, s: &Settings, j: RangeInclusive<i32>) -> Result<Constants> {
    let spec = GridSpec::new(2, 8.0, m, BoundaryMode::Compact)?;
    let probes = lattice_probes(2, 2.0, s.probes_per_axis);
    let bmo = |f: &CompositeField| -> Result<f64> { Ok(bmo_seminorm(f, &probes, j.clone())?.value) };
    let mut c = Constants { cz: 0.0, poisson: 0.0, pressure: 0.0, bmo_pressure: 0.0 };
    let kernel = KernelSpec::second(2, 0, 1)?;
    for h in corpus::bump_corpus(spec, s.corpus, s.seed)? {
        let base = bmo(&h)?;
        c.cz = c.cz.max(bmo(&cz_apply(&kernel, &h, -20, 3)?)? / base);
        let f = poisson_solve_hessian(&minus_f0_identity(&h)?, 1)?;
        c.poisson = c.poisson.max(bmo(&f.partial(&[1, 1, 0]))? / base);
    }
    for u in corpus::divergence_free_corpus(spec, s.corpus, s.seed)? {
        let du = u.gradient();
        let g = pressure_gradient(&u, &u)?;
        c.pressure = c.pressure.max(bmo(&g.gradient())? / (du.sup_on(&spec) * bmo(&du)?));
        let pi = bmo_pressure(&u)?;
        c.bmo_pressure = c.bmo_pressure.max(bmo(&pi)? / u.sup_on(&spec).powi(2));
    }
    Ok(c)
}

pub(super) fn run(s: &Settings) -> Result<(Vec<Check>, Vec<Table>)> {
    let mut rows = Rows::new(CHECKS);
    let m = s.potential_m.1;

    let (mut residual, mut exact): (f64, f64) = (0.0, 0.0);
    for mode in [BoundaryMode::Compact, BoundaryMode::Periodic] {
        let spec = GridSpec::new(2, 8.0, m, mode)?;
        let f0 = CompositeField::from_grid(GridField::from_fn(spec, 1, |x, o| {
            o[0] = (-(x[0] - 0.7).powi(2) - 2.0 * (x[1] + 0.3).powi(2)).exp();
        }));
        let hm = minus_f0_identity(&f0)?;
        for degree in [0, 1] {
            let f = poisson_solve_hessian(&hm, degree)?;
            let p = mean_polynomial(&f0, degree, &[0.0, 0.0], 1.0)?;
            exact = exact.max(sup_diff(&f, &f0.with_poly(p.scale(-1.0))?)?);
            let centres = [[0.0, 0.0, 0.0], [1.0, -0.5, 0.0], [-2.0, 1.0, 0.0]];
            residual = residual.max(very_weak_residual(&f, &hm, &centres, 1.5)?.relative);
        }
    }
    rows.at_most("poisson-very-weak", residual, s.tol.poisson_residual, "compact and periodic grids, degrees 0 and 1");
    rows.at_most("poisson-exact", exact, 1e-9, "largest nodal error");

    let spec = GridSpec::new(2, 8.0, m, BoundaryMode::Compact)?;
    let free = corpus::divergence_free_corpus(spec, s.corpus, s.seed)?;
    let mut fix: f64 = 0.0;
    for u in free.iter().cloned().chain([corpus::taylor_green(m.min(64))?]) {
        fix = fix.max(sup_diff(&helmholtz_project(&u)?, &u)?);
    }
    rows.at_most("helmholtz-fixes-divergence-free", fix, s.tol.projection, format!("{} corpus fields", free.len()));

    let mut idem: f64 = 0.0;
    for (i, b) in corpus::bump_corpus(spec, s.corpus, s.seed ^ 0x5eed)?.iter().enumerate() {
        let g = b.gradient();
        let u = g.add(&free[i % free.len()])?.with_poly(PolynomialField::affine(2, &[1.0, 2.0, 0.0, 0.5], &[0.1, -0.2])?)?;
        let p = helmholtz_project(&u)?;
        idem = idem.max(sup_diff(&helmholtz_project(&p)?, &p)?);
    }
    rows.at_most("helmholtz-idempotent", idem, s.tol.projection, "gradient plus divergence-free plus affine fields");

    let u = CompositeField::from_poly(PolynomialField::affine(2, &[1.0, 0.0, 0.0, -1.0], &[0.0, 0.0])?);
    let g = pressure_gradient(&u, &u)?;
    let lin = g.poly().linear_matrix();
    let err = lin.iter().zip([-1.0, 0.0, 0.0, -1.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let err = err + g.poly().constant_part().iter().map(|v| v.abs()).sum::<f64>();
    rows.at_most("pressure-hyperbolic", err, 0.0, "exact arithmetic on the polynomial part");

    let mut curl: f64 = 0.0;
    for u in &free {
        curl = curl.max(curl_sup(&pressure_gradient(u, u)?)?);
    }
    rows.at_most("pressure-curl-free", curl, s.tol.curl, "sup of the curl over the grid");

    let coarse_spec = GridSpec::new(2, 8.0, s.potential_m.0, BoundaryMode::Compact)?;
    let lo = *resolvable_scales(&coarse_spec).start();
    let j = match s.j_range {
        Some((a, b)) => a.max(lo)..=b.max(lo),
        None => lo..=2.max(lo),
    };
    let c0 = constants(s.potential_m.0, s, j.clone())?;
    let c1 = constants(s.potential_m.1, s, j.clone())?;
    let mut table = String::from("constant,m,value\n");
    let pairs = [
        ("bound-cz", "cz", c0.cz, c1.cz),
        ("bound-poisson", "poisson", c0.poisson, c1.poisson),
        ("bound-pressure", "pressure", c0.pressure, c1.pressure),
        ("bound-bmo-pressure", "bmo_pressure", c0.bmo_pressure, c1.bmo_pressure),
    ];
    for (id, name, a, b) in pairs {
        let _ = writeln!(table, "{name},{},{a:e}", s.potential_m.0);
        let _ = writeln!(table, "{name},{},{b:e}", s.potential_m.1);
        let change = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        let note = format!(
            "constant {a:.4} at m = {} and {b:.4} at m = {}; scales 2^{}..2^{}",
            s.potential_m.0,
            s.potential_m.1,
            j.start(),
            j.end()
        );
        if a.is_finite() && b.is_finite() && b > 0.0 {
            rows.at_most(id, change, s.tol.refinement, note);
        } else {
            rows.at_most(id, f64::INFINITY, s.tol.refinement, note);
        }
    }

    Ok((rows.checks, vec![Table { name: "boundedness.csv".into(), csv: table }]))
}
