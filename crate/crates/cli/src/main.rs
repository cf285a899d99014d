//! `ecv`: runs the verification suites and the individual solvers.

mod config;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use euler_campanato::campanato::{grid_probes, lattice_probes, seminorm, SeminormParams};
use euler_campanato::euler::{resolvable_scales, solve, SolverConfig};
use euler_campanato::fields::{io, write_atomic};
use euler_campanato::linearflows::{integrate_riccati, invariants_3d, parse_matrix, RiccatiOptions};
use euler_campanato::suites::{self, SuiteReport};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: euler_campanato::Error },
    #[error(transparent)]
    Toolkit(#[from] euler_campanato::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Toolkit(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "ecv", version, about = "Numerical checks for Euler flows with linear growth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite (or `all`) and write its reports.
    Run {
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List a suite's checks with their anchors.
    Describe { suite: String },
    /// Campanato seminorm of a stored field.
    Norms {
        field: PathBuf,
        #[arg(long)]
        s: f64,
        /// Summation exponent; `inf` for the supremum.
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Polynomial degree.
        #[arg(long = "N", default_value_t = 1)]
        degree: usize,
        #[arg(long, default_value_t = 3)]
        probes: usize,
        #[arg(long, allow_hyphen_values = true)]
        j_min: Option<i32>,
        #[arg(long, allow_hyphen_values = true)]
        j_max: Option<i32>,
        /// Probe-by-scale oscillation matrix.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Integrate the Riccati flow of a trace-free matrix.
    Riccati {
        /// Rows separated by `;`, entries by `,` or spaces.
        #[arg(long, allow_hyphen_values = true)]
        a0: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Trajectory CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the Euler equations from a stored divergence-free field.
    Euler {
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-2)]
        dt: f64,
        /// Directory for the step CSV and the final field.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ecv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn usage(e: euler_campanato::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn dispatch(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Run { suite, config, out, seed } => run(&suite, config.as_deref(), out, seed),
        Command::Describe { suite } => {
            print!("{}", describe(&suite)?);
            Ok(0)
        }
        Command::Norms { field, s, q, p, degree, probes, j_min, j_max, csv } => {
            let f = io::load(&field).map_err(usage)?;
            let (probe_set, window) = match f.spec() {
                Some(spec) => (grid_probes(spec, probes), resolvable_scales(spec)),
                None => (lattice_probes(f.n(), 2.0, probes), -2..=2),
            };
            let j = j_min.unwrap_or(*window.start())..=j_max.unwrap_or(*window.end());
            let rep = seminorm(&f, SeminormParams::new(s, q, p, degree), &probe_set, j)?;
            print!("{}", rep.to_kv());
            if let Some(path) = csv {
                write(&path, rep.to_csv().as_bytes())?;
            }
            Ok(0)
        }
        Command::Riccati { a0, t, tol, out } => {
            let a = parse_matrix(&a0).map_err(usage)?;
            let traj = integrate_riccati(&a, t, &RiccatiOptions::with_tol(tol)).map_err(usage)?;
            let mut s = String::new();
            let last = traj.last();
            let _ = writeln!(s, "n = {}", a.nrows());
            let _ = writeln!(s, "samples = {}", traj.samples.len());
            let _ = writeln!(s, "t_last = {:e}", last.t);
            let _ = writeln!(s, "trace_drift = {:e}", traj.trace_drift());
            match &traj.blowup {
                Some(b) => {
                    let _ = writeln!(s, "blowup = true\nt_star = {:.10e}\nfit_residual = {:e}", b.t_star, b.fit_residual);
                }
                None => {
                    let _ = writeln!(s, "blowup = false\nstationarity_defect = {:e}", traj.stationarity_defect());
                }
            }
            if a.nrows() == 3 {
                if let Ok(inv) = invariants_3d(&traj) {
                    let _ = writeln!(s, "invariants_until = {:e}", inv.evaluated_until);
                    let _ = writeln!(s, "mu_product_drift = {:e}", inv.mu_product_drift);
                }
            }
            let row: Vec<String> = last.a.transpose().iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "a_last = [{}]", row.join(", "));
            print!("{s}");
            if let Some(path) = out {
                write(&path, traj.to_csv().as_bytes())?;
            }
            Ok(0)
        }
        Command::Euler { init, t, dt, out } => {
            let v0 = io::load(&init).map_err(usage)?;
            let cfg = SolverConfig { dt, horizon: t, store_every: usize::MAX, ..Default::default() };
            let traj = solve(&v0, &cfg)?;
            let last = traj.steps.last().expect("solver records the first step");
            println!("steps = {}", traj.steps.len());
            println!("windows = {}", traj.windows.len());
            println!("t_last = {:e}", last.t);
            println!("pinf_integral = {:e}", last.pinf_integral);
            match &traj.blowup {
                Some(b) => println!("blowup = true\nt_star = {:.10e}", b.t_star),
                None => println!("blowup = false"),
            }
            if let Some(dir) = out {
                make_dir(&dir)?;
                write(&dir.join("steps.csv"), traj.steps_csv().as_bytes())?;
                let path = dir.join("final.ecf");
                io::save(&traj.last().v, &path).map_err(|source| CliError::Output { path, source })?;
            }
            Ok(0)
        }
    }
}

fn describe(suite: &str) -> Result<String, CliError> {
    let mut s = String::new();
    for (name, specs) in suites::catalogue(suite).map_err(usage)? {
        let _ = writeln!(s, "{name}");
        for c in specs {
            let _ = writeln!(s, "  {:<40} {}\n  {:<40} {}", c.id, c.anchor, "", c.summary);
        }
    }
    Ok(s)
}

fn run(suite: &str, config: Option<&Path>, out: Option<PathBuf>, seed: Option<u64>) -> Result<u8, CliError> {
    suites::catalogue(suite).map_err(usage)?;
    let cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut settings = cfg.settings();
    if let Some(s) = seed {
        settings.seed = s;
    }
    settings.validate().map_err(usage)?;
    let out = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("reports"));
    // Fail on an unwritable directory before spending time on the suite.
    make_dir(&out)?;
    let probe = out.join(".ecv-write-test");
    write(&probe, b"")?;
    let _ = std::fs::remove_file(&probe);

    let reports = suites::run(suite, &settings)?;
    let mut failed = 0;
    for r in &reports {
        emit(&out, r)?;
        println!(
            "{:<13} {:>4}  {} checks, {} failed, {} flagged",
            r.suite,
            if r.passed() { "PASS" } else { "FAIL" },
            r.checks.len(),
            r.failed(),
            r.flagged()
        );
        failed += r.failed();
    }
    Ok(u8::from(failed > 0))
}

fn emit(out: &Path, r: &SuiteReport) -> Result<(), CliError> {
    let dir = out.join(&r.suite);
    make_dir(&dir)?;
    write(&dir.join("summary.toml"), r.to_kv().as_bytes())?;
    write(&dir.join("checks.csv"), r.checks_csv().as_bytes())?;
    for t in &r.tables {
        write(&dir.join(&t.name), t.csv.as_bytes())?;
    }
    Ok(())
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output { path: dir.to_path_buf(), source: e.into() })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}
