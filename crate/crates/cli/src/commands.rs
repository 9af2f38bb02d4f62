//! The four subcommands and their on-disk outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use nqs_bell::bell::brute_force_classical_min;
use nqs_bell::ed::{min_eigenpair, MAX_ED_DIM};
use nqs_bell::estimator::exact_expectation;
use nqs_bell::sampler::MAX_EXACT_DIM;
use nqs_bell::sr::{CurveRecord, Trainer};
use nqs_bell::{Basis, Checkpoint, Error, Rbm};
use serde::Serialize;

use crate::args::{ScanArgs, ScanAxis};
use crate::config::{resolve, InequalitySpec, RunConfig};
use crate::CliError;

/// Agreement required between the formula bound and the brute-force minimum.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// An exact eigenvalue counts as a violation only below `bound − ED_TOLERANCE`, so rounding
/// at a tight bound (e.g. i3 at θ = π/2) is not reported.
pub const ED_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainSummary {
    pub qv_final: f64,
    pub stderr_final: f64,
    pub var_final: f64,
    /// Exact ⟨op⟩ of the final network, when the basis is small enough to enumerate.
    pub qv_exact: Option<f64>,
    pub classical_bound: f64,
    /// `qv_final + 3·stderr_final < classical_bound`.
    pub violated: bool,
    /// `classical_bound − (qv_final + 3·stderr_final)`; positive when violated.
    pub margin: f64,
    pub iterations: usize,
    pub n_free: usize,
    pub acceptance_rates: Vec<f64>,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdReport {
    pub min_eigenvalue: f64,
    pub residual: f64,
    pub dim: usize,
    pub sector: Option<i32>,
    pub matvecs: usize,
    pub classical_bound: f64,
    pub violated: bool,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub formula: f64,
    pub brute_force: Option<f64>,
    pub formula_only: bool,
    pub mismatch: bool,
    pub config: RunConfig,
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: String,
    iteration: usize,
    last_record: Option<&'a CurveRecord>,
    config: &'a RunConfig,
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn checkpoint(cfg: &RunConfig, params: &Rbm) -> Result<(), CliError> {
    write_json(
        &cfg.out.join("checkpoint.json"),
        &Checkpoint::from_params(params, cfg.sr.seed),
    )
}

/// Trains, streaming `curve.jsonl`, then writes `checkpoint.json` and `summary.json`.
/// A numerical abort leaves the last good parameters in `checkpoint.json` next to `diagnostic.json`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary, CliError> {
    let op = cfg.operator()?;
    let bound = cfg.classical_bound()?;
    let scheme = cfg.tying_scheme()?;
    let n_free = scheme.n_free();
    fs::create_dir_all(&cfg.out)?;
    let mut trainer = Trainer::new(&op, scheme, cfg.sr.clone(), cfg.sampler.clone())?;
    let mut curve = BufWriter::new(File::create(cfg.out.join("curve.jsonl"))?);

    let outcome = (|| -> Result<_, Error> {
        while !trainer.is_done() {
            let r = trainer.step()?;
            writeln!(curve, "{}", serde_json::to_string(&r)?)?;
        }
        let est = trainer.batch()?.estimate()?;
        if !est.mean.is_finite() || !est.stderr.is_finite() {
            return Err(Error::Numeric("non-finite final estimate".into()));
        }
        Ok(est)
    })();
    curve.flush()?;
    checkpoint(cfg, trainer.params())?;
    let est = match outcome {
        Ok(e) => e,
        Err(e) => {
            let err = CliError::from(e);
            write_json(
                &cfg.out.join("diagnostic.json"),
                &Diagnostic {
                    error: err.to_string(),
                    iteration: trainer.iteration(),
                    last_record: trainer.curve().last(),
                    config: cfg,
                },
            )?;
            return Err(err);
        }
    };

    let basis = Basis::new(cfg.n, cfg.sampler.sector)?;
    let qv_exact = if basis.dim() <= MAX_EXACT_DIM {
        Some(exact_expectation(&op, trainer.params(), &basis)?.0)
    } else {
        None
    };
    let upper = est.mean + 3.0 * est.stderr;
    let summary = TrainSummary {
        qv_final: est.mean,
        stderr_final: est.stderr,
        var_final: est.reported_variance(),
        qv_exact,
        classical_bound: bound,
        violated: upper < bound,
        margin: bound - upper,
        iterations: trainer.iteration(),
        n_free,
        acceptance_rates: trainer.acceptance_rates(),
        config: cfg.clone(),
    };
    write_json(&cfg.out.join("summary.json"), &summary)?;
    println!(
        "qv_final {:.6} ± {:.6}  bound {}  violated {}",
        summary.qv_final, summary.stderr_final, bound, summary.violated
    );
    Ok(summary)
}

/// Minimum eigenvalue of the operator in the sampler's sector; writes `ed.json`,
/// `eigenvector.bin` and `eigenvector.json`.
pub fn cmd_ed(cfg: &RunConfig) -> Result<EdReport, CliError> {
    let op = cfg.operator()?;
    let bound = cfg.classical_bound()?;
    let ed = min_eigenpair(&op, cfg.sampler.sector)?;
    fs::create_dir_all(&cfg.out)?;
    ed.write_eigenvector(
        &cfg.out.join("eigenvector.bin"),
        &cfg.out.join("eigenvector.json"),
    )?;
    let s = ed.summary();
    let report = EdReport {
        min_eigenvalue: s.min_eigenvalue,
        residual: s.residual,
        dim: s.dim,
        sector: s.sector,
        matvecs: ed.matvecs,
        classical_bound: bound,
        violated: s.min_eigenvalue < bound - ED_TOLERANCE,
        config: cfg.clone(),
    };
    write_json(&cfg.out.join("ed.json"), &report)?;
    println!(
        "min_eigenvalue {:.12}  bound {}  violated {}",
        report.min_eigenvalue, bound, report.violated
    );
    Ok(report)
}

/// Formula bound against exhaustive enumeration of deterministic strategies; writes `bound.json`.
pub fn cmd_bound(cfg: &RunConfig) -> Result<BoundReport, CliError> {
    let formula = cfg.classical_bound()?;
    let brute_force = match cfg.inequality.correlator_form(cfg.n) {
        None => None,
        Some(form) => Some(brute_force_classical_min(&form?.0)?),
    };
    let mismatch = brute_force.is_some_and(|b| (b - formula).abs() > BOUND_TOLERANCE);
    let report = BoundReport {
        formula,
        brute_force,
        formula_only: brute_force.is_none(),
        mismatch,
        config: cfg.clone(),
    };
    fs::create_dir_all(&cfg.out)?;
    write_json(&cfg.out.join("bound.json"), &report)?;
    match brute_force {
        None => println!("formula {formula}  (formula-only)"),
        Some(b) => println!("formula {formula}  brute_force {b}"),
    }
    if mismatch {
        return Err(CliError::Numeric(format!(
            "bound mismatch: formula {formula}, brute force {}",
            brute_force.unwrap_or(f64::NAN)
        )));
    }
    Ok(report)
}

/// One row of `scan.csv`; missing values become empty fields.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub axis: f64,
    pub qv: Option<f64>,
    pub stderr: Option<f64>,
    pub ed: Option<f64>,
    pub bound: Option<f64>,
    pub violated: Option<bool>,
}

fn point_args(scan: &ScanArgs, value: f64) -> Result<crate::CommonArgs, CliError> {
    let mut a = scan.common.clone();
    match scan.axis {
        ScanAxis::Delta => a.big_delta = Some(value),
        ScanAxis::Theta => a.theta = Some(value),
        ScanAxis::N => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(CliError::Usage(format!(
                    "N grid values must be positive integers, got {value}"
                )));
            }
            a.n = Some(value as usize);
        }
    }
    Ok(a)
}

fn scan_point(scan: &ScanArgs, value: f64, dir: &Path, row: &mut ScanRow) -> Result<(), CliError> {
    let mut cfg = resolve(&point_args(scan, value)?)?;
    cfg.out = dir.to_path_buf();
    row.bound = Some(cfg.classical_bound()?);
    let dim = Basis::new(cfg.n, cfg.sampler.sector)?.dim();
    if dim <= MAX_ED_DIM {
        let ed = cmd_ed(&cfg)?;
        row.ed = Some(ed.min_eigenvalue);
        if scan.ed_only {
            row.violated = Some(ed.violated);
        }
    } else if scan.ed_only {
        return Err(CliError::Capacity(format!(
            "capacity exceeded: ED dimension {dim} > {MAX_ED_DIM}"
        )));
    }
    if !scan.ed_only {
        let s = cmd_train(&cfg)?;
        row.qv = Some(s.qv_final);
        row.stderr = Some(s.stderr_final);
        row.violated = Some(s.violated);
    }
    Ok(())
}

/// Runs every grid point into `out/point_NNN/` and tabulates them in `out/scan.csv`.
/// Failed points leave empty cells; the exit status is that of the first failure.
pub fn cmd_scan(scan: &ScanArgs) -> Result<Vec<ScanRow>, CliError> {
    let base = resolve(&scan.common)?;
    if matches!(
        (scan.axis, &base.inequality),
        (
            ScanAxis::Delta,
            InequalitySpec::I2 { .. } | InequalitySpec::I3 { .. }
        ) | (ScanAxis::Theta, InequalitySpec::I1 { .. })
    ) {
        return Err(CliError::Usage(format!(
            "axis {} does not apply to this inequality",
            scan.axis.name()
        )));
    }
    fs::create_dir_all(&base.out)?;
    let mut rows = Vec::with_capacity(scan.grid.0.len());
    let mut first_error = None;
    for (i, &value) in scan.grid.0.iter().enumerate() {
        let dir = base.out.join(format!("point_{i:03}"));
        let mut row = ScanRow {
            axis: value,
            qv: None,
            stderr: None,
            ed: None,
            bound: None,
            violated: None,
        };
        if let Err(e) = scan_point(scan, value, &dir, &mut row) {
            eprintln!("nqs-bell: {}={value}: {e}", scan.axis.name());
            first_error.get_or_insert(e);
        }
        rows.push(row);
    }
    let mut w = csv::Writer::from_path(base.out.join("scan.csv"))?;
    w.write_record(["axis", "qv", "stderr", "ed", "bound", "violated"])?;
    for r in &rows {
        w.serialize((r.axis, r.qv, r.stderr, r.ed, r.bound, r.violated))?;
    }
    w.flush()?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}
