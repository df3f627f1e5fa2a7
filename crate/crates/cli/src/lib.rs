//! Commands behind the `grating` binary.
//!
//! Exit codes: 0 success, 1 I/O or other runtime failure, 2 GMRES did not
//! converge (or broke down), 3 invalid input (configuration, geometry,
//! Rayleigh anomaly).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use grating_core::analysis::diagnose;
use grating_core::config::{Format, LoadedConfig, RunConfig};
use grating_core::oracle::{validate, Level};
use grating_core::postprocess::{efficiency_report, EfficiencyTable, EnergyBalance};
use grating_core::solver::{solve, Solution};
use grating_core::{Error, KernelParams, KernelTable, Problem};
use rayon::prelude::*;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

/// Environment variable capping the worker-thread count.
pub const THREADS_VAR: &str = "GRATING_THREADS";

/// Sizes the global rayon pool from `GRATING_THREADS`, if set.
pub fn init_threads() -> Result<(), String> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got {v:?}"))?;
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged(_) | Error::Breakdown(_) => EXIT_NOT_CONVERGED,
        e if e.is_validation() => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

/// Run parameters echoed into every result file.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub k: f64,
    pub theta_deg: f64,
    pub alpha: f64,
    pub contrast: String,
    pub n1: usize,
    pub n2: usize,
    pub rho_box: f64,
    pub rho_ref: f64,
    pub rel_tol: f64,
    pub dealias: bool,
}

impl RunSummary {
    fn new(cfg: &RunConfig, problem: &Problem) -> Self {
        let grid = problem.grid();
        RunSummary {
            k: problem.wave().k(),
            theta_deg: cfg.problem.theta,
            alpha: problem.alpha(),
            contrast: problem.contrast().label().to_string(),
            n1: grid.n1(),
            n2: grid.n2(),
            rho_box: grid.rho_box(),
            rho_ref: problem.rho_ref(),
            rel_tol: cfg.numerics.rel_tol,
            dealias: cfg.numerics.dealias,
        }
    }
}

/// Contents of `<prefix>_result.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub run: RunSummary,
    pub converged: bool,
    pub iterations: usize,
    pub relative_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_balance: Option<EnergyBalance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiencies: Option<EfficiencyTable>,
    pub residual_history: Vec<f64>,
}

fn output_dir(loaded: &LoadedConfig, out: Option<&Path>) -> std::io::Result<PathBuf> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| loaded.output_dir());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> grating_core::Result<()>) -> grating_core::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> grating_core::Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn write_residuals(path: &Path, history: &[f64]) -> grating_core::Result<()> {
    write_file(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["iteration", "relative_residual"]).map_err(csv_err)?;
        for (i, r) in history.iter().enumerate() {
            wtr.write_record([i.to_string(), r.to_string()]).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Builds, solves and post-processes one configuration.
pub fn run_solve(cfg: &RunConfig, problem: &Problem) -> grating_core::Result<SolveReport> {
    let table = KernelTable::new(problem.grid(), KernelParams::from_wave(problem.wave()))?;
    let s = solve(problem, &table, &cfg.solve_options())?;
    let (efficiencies, balance) = efficiency_report(&s, problem)?;
    Ok(SolveReport {
        energy_balance: Some(balance),
        efficiencies: Some(efficiencies),
        ..unconverged_report(cfg, problem, &s)
    })
}

fn unconverged_report(cfg: &RunConfig, problem: &Problem, s: &Solution) -> SolveReport {
    SolveReport {
        run: RunSummary::new(cfg, problem),
        converged: s.converged,
        iterations: s.iterations,
        relative_residual: s.true_residual,
        energy_balance: None,
        efficiencies: None,
        residual_history: s.residual_history.clone(),
    }
}

/// `grating solve <cfg>`.
pub fn cmd_solve(cfg_path: &Path, out: Option<&Path>) -> i32 {
    let loaded = match RunConfig::load(cfg_path) {
        Ok(l) => l,
        Err(e) => return report(&e),
    };
    let problem = match loaded.build() {
        Ok(p) => p,
        Err(e) => return report(&e),
    };
    let dir = match output_dir(&loaded, out) {
        Ok(d) => d,
        Err(e) => return report(&e.into()),
    };
    let prefix = loaded.prefix().to_string();
    let (result, code) = match run_solve(&loaded.config, &problem) {
        Ok(r) => (r, EXIT_OK),
        Err(e @ (Error::NotConverged(_) | Error::Breakdown(_))) => {
            eprintln!("error: {e}");
            let (Error::NotConverged(s) | Error::Breakdown(s)) = e else { unreachable!() };
            (unconverged_report(&loaded.config, &problem, &s), EXIT_NOT_CONVERGED)
        }
        Err(e) => return report(&e),
    };
    let written = (|| -> grating_core::Result<()> {
        if loaded.wants(Format::Json) {
            write_json(&dir.join(format!("{prefix}_result.json")), &result)?;
        }
        if loaded.wants(Format::Csv) {
            if let Some(t) = &result.efficiencies {
                write_file(&dir.join(format!("{prefix}_efficiencies.csv")), |w| t.write_csv(w))?;
            }
            write_residuals(&dir.join(format!("{prefix}_residuals.csv")), &result.residual_history)?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        return report(&e);
    }
    if let (Some(b), Some(t)) = (&result.energy_balance, &result.efficiencies) {
        eprintln!(
            "converged in {} iterations; R = {:.10}, T = {:.10}, {}",
            result.iterations,
            t.total_reflected,
            t.total_transmitted,
            match b {
                EnergyBalance::Lossless { defect } => format!("energy defect {defect:e}"),
                EnergyBalance::Lossy { absorbed, .. } => format!("absorbed {absorbed:e}"),
            }
        );
    }
    code
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    K,
    Theta,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::K => "k",
            SweepParam::Theta => "theta",
        }
    }
}

/// Evenly spaced sweep values, endpoints included.
pub fn sweep_values(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![from],
        n => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
    }
}

enum PointOutcome {
    Solved(SolveReport),
    Skipped,
    Unconverged,
    Failed(Error),
}

/// `grating sweep <cfg> --param k|theta --from A --to B --steps N`.
pub fn cmd_sweep(cfg_path: &Path, param: SweepParam, from: f64, to: f64, steps: usize, out: Option<&Path>) -> i32 {
    let loaded = match RunConfig::load(cfg_path) {
        Ok(l) => l,
        Err(e) => return report(&e),
    };
    if steps == 0 || !from.is_finite() || !to.is_finite() {
        return report(&Error::Config(format!("sweep needs finite bounds and at least one step (steps = {steps})")));
    }
    let values = sweep_values(from, to, steps);
    let outcomes: Vec<(f64, PointOutcome)> = values
        .par_iter()
        .map(|&v| {
            let mut cfg = loaded.config.clone();
            match param {
                SweepParam::K => cfg.problem.k = v,
                SweepParam::Theta => cfg.problem.theta = v,
            }
            let outcome = match cfg.validate().and_then(|_| cfg.build(&loaded.base_dir)) {
                Err(Error::RayleighAnomaly { order, .. }) => {
                    eprintln!("warning: skipping {} = {v}: Rayleigh anomaly at order {order}", param.name());
                    PointOutcome::Skipped
                }
                Err(e) => PointOutcome::Failed(e),
                Ok(problem) => match run_solve(&cfg, &problem) {
                    Ok(r) => PointOutcome::Solved(r),
                    Err(Error::NotConverged(s)) | Err(Error::Breakdown(s)) => {
                        eprintln!("warning: {} = {v} did not converge (relative residual {:e})", param.name(), s.true_residual);
                        PointOutcome::Unconverged
                    }
                    Err(e) => PointOutcome::Failed(e),
                },
            };
            (v, outcome)
        })
        .collect();
    let mut code = EXIT_OK;
    let mut rows = Vec::new();
    for (v, o) in outcomes {
        match o {
            PointOutcome::Solved(r) => rows.push((v, r)),
            PointOutcome::Skipped => {}
            PointOutcome::Unconverged => code = code.max(EXIT_NOT_CONVERGED),
            PointOutcome::Failed(e) => {
                eprintln!("error: {} = {v}: {e}", param.name());
                code = code.max(exit_code(&e));
            }
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let dir = match output_dir(&loaded, out) {
        Ok(d) => d,
        Err(e) => return report(&e.into()),
    };
    let path = dir.join(format!("{}_sweep_{}.csv", loaded.prefix(), param.name()));
    let written = write_file(&path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            param.name(),
            "j",
            "alpha_j",
            "beta_j_re",
            "beta_j_im",
            "e_refl",
            "e_trans",
            "absorbed",
            "iterations",
            "relative_residual",
        ])
        .map_err(csv_err)?;
        for (v, r) in &rows {
            let t = r.efficiencies.as_ref().expect("solved points carry efficiencies");
            for row in &t.rows {
                wtr.write_record([
                    v.to_string(),
                    row.j.to_string(),
                    row.alpha_j.to_string(),
                    row.beta_j_re.to_string(),
                    row.beta_j_im.to_string(),
                    row.e_refl.to_string(),
                    row.e_trans.to_string(),
                    t.absorbed.to_string(),
                    r.iterations.to_string(),
                    r.relative_residual.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        wtr.flush()?;
        Ok(())
    });
    if let Err(e) = written {
        return report(&e);
    }
    eprintln!("{} of {} sweep points solved", rows.len(), values.len());
    code
}

/// `grating diagnose <cfg>`: writes the Gårding report; verdicts live in the file.
pub fn cmd_diagnose(cfg_path: &Path, out: Option<&Path>) -> i32 {
    let loaded = match RunConfig::load(cfg_path) {
        Ok(l) => l,
        Err(e) => return report(&e),
    };
    let problem = match loaded.build() {
        Ok(p) => p,
        Err(e) => return report(&e),
    };
    let result = diagnose(&problem, loaded.config.analysis.smoothness_asserted).and_then(|r| {
        let dir = output_dir(&loaded, out)?;
        write_json(&dir.join(format!("{}_diagnose.json", loaded.prefix())), &r)?;
        Ok(r)
    });
    match result {
        Ok(r) => {
            eprintln!("{}", r.interpretation);
            EXIT_OK
        }
        Err(e) => {
            // Singular or sign-indefinite contrasts still exit 0: the verdict is "no certificate".
            eprintln!("diagnostics unavailable: {e}");
            if e.is_validation() {
                EXIT_INVALID
            } else if matches!(e, Error::Io(_)) {
                EXIT_FAILURE
            } else {
                EXIT_OK
            }
        }
    }
}

/// `grating validate --level quick|full`: runs the oracle gates.
pub fn cmd_validate(level: Level, out: Option<&Path>) -> i32 {
    let rep = validate(level);
    for g in &rep.gates {
        println!(
            "{:<22} {}  value = {:.3e}  threshold = {:.1e}  {}",
            g.name,
            if g.passed { "PASS" } else { "FAIL" },
            g.value,
            g.threshold,
            g.detail
        );
    }
    if let Some(dir) = out {
        let written = fs::create_dir_all(dir).map_err(Error::from).and_then(|_| write_json(&dir.join("validate.json"), &rep));
        if let Err(e) = written {
            return report(&e);
        }
    }
    if rep.passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
