//! Command orchestration: load configs, run, write artifacts, pick an exit code.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{parse_config, RunConfig};
use super::output::{self, write};
use crate::analysis::suites::{self, SuiteReport};
use crate::analysis::{
    self, apriori_monitor, convergence_study, dependence_experiment, energy_identity_residual,
    epsilon_sweep, mean_law_check, realized_norms, uniformity_violations, ConvergenceKind,
    ConvergenceRow, ConvergenceSetup, DiagnosticsRecord, NormInventory, RealizedNorms,
};
use crate::error::{Error, Result};
use crate::galerkin::simulate;
use crate::potentials::PotentialSpec;
use crate::spectral::SpectralBasis;

/// Exit status when the run completed but a check failed.
pub const EXIT_VIOLATIONS: i32 = 1;
/// The scheme reproduces its own scalar mean recursion to this accuracy.
pub const DISCRETE_MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyTarget {
    Potentials,
    Spectral,
    Elliptic,
    Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Simulate { config: PathBuf },
    Verify { target: VerifyTarget, config: PathBuf, trajectory: Option<PathBuf> },
    Converge { kind: ConvergenceKind, config: PathBuf },
    Depend { config1: PathBuf, config2: PathBuf },
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub quiet: bool,
    pub seed: u64,
}

/// Process-level result of a command.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// Human-readable report lines.
    pub lines: Vec<String>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub violations: Vec<String>,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_config: Option<RunConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realized_norms: Option<RealizedNorms>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_norms: Option<NormInventory>,
    /// Named scalar results (errors, residuals, constants).
    pub empirical: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl Summary {
    fn new(command: &str, config: RunConfig) -> Self {
        Self {
            command: command.into(),
            status: "ok".into(),
            error: None,
            warnings: config.warnings(),
            violations: Vec::new(),
            config,
            second_config: None,
            realized_norms: None,
            final_norms: None,
            empirical: BTreeMap::new(),
            details: serde_json::Value::Null,
        }
    }

    fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            3
        } else if self.violations.is_empty() {
            0
        } else {
            EXIT_VIOLATIONS
        }
    }
}

pub fn execute(cmd: &Command, opts: &RunOptions) -> RunOutcome {
    let started = Instant::now();
    match dispatch(cmd, opts) {
        Ok((dir, summary, lines)) => {
            let code = summary.exit_code();
            let timing = format!("{{\n  \"wall_seconds\": {}\n}}\n", started.elapsed().as_secs_f64());
            if let Err(e) = write(&dir, output::TIMING_FILE, &timing) {
                return failure(e, Some(dir));
            }
            let mut lines = lines;
            lines.extend(summary.violations.iter().map(|v| format!("violation: {v}")));
            if let Some(e) = &summary.error {
                lines.push(format!("error: {e}"));
            }
            RunOutcome {
                exit_code: code,
                lines,
                output_dir: Some(dir),
            }
        }
        Err(e) => failure(e, None),
    }
}

fn failure(e: Error, dir: Option<PathBuf>) -> RunOutcome {
    RunOutcome {
        exit_code: e.exit_code(),
        lines: vec![format!("error: {e}")],
        output_dir: dir,
    }
}

fn out_dir(cfg: &RunConfig, opts: &RunOptions) -> PathBuf {
    opts.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory))
}

type Dispatched = (PathBuf, Summary, Vec<String>);

fn dispatch(cmd: &Command, opts: &RunOptions) -> Result<Dispatched> {
    match cmd {
        Command::Simulate { config } => {
            let cfg = parse_config(config)?;
            let dir = out_dir(&cfg, opts);
            let (summary, records) = run_simulation(cfg)?;
            if summary.config.output.wants("csv") {
                write(&dir, output::TRAJECTORY_FILE, &output::trajectory_csv(&records))?;
            }
            finish(dir, summary, Vec::new())
        }
        Command::Verify { target, config, trajectory } => {
            let cfg = parse_config(config)?;
            let dir = out_dir(&cfg, opts);
            let summary = run_verify(*target, cfg, trajectory.as_deref(), opts.seed)?;
            finish(dir, summary, Vec::new())
        }
        Command::Converge { kind, config } => {
            let cfg = parse_config(config)?;
            let dir = out_dir(&cfg, opts);
            let (summary, rows) = run_converge(*kind, cfg)?;
            if summary.config.output.wants("csv") {
                write(&dir, output::CONVERGENCE_FILE, &output::convergence_csv(&rows))?;
            }
            let lines = rows
                .iter()
                .map(|r| format!("{:>12.4e} {:>12.4e} {}", r.parameter, r.error, r.rate.map(|x| format!("{x:.3}")).unwrap_or_default()))
                .collect();
            finish(dir, summary, lines)
        }
        Command::Depend { config1, config2 } => {
            let c1 = parse_config(config1)?;
            let c2 = parse_config(config2)?;
            let dir = out_dir(&c1, opts);
            let (summary, report) = run_depend(c1, c2)?;
            if summary.config.output.wants("csv") {
                write(&dir, output::DEPENDENCE_FILE, &output::dependence_csv(std::slice::from_ref(&report)))?;
            }
            finish(dir, summary, Vec::new())
        }
    }
}

fn finish(dir: PathBuf, summary: Summary, mut lines: Vec<String>) -> Result<Dispatched> {
    if summary.config.output.wants("json") {
        write(&dir, output::SUMMARY_FILE, &output::to_json(&summary)?)?;
    }
    lines.insert(0, format!("{}: {}", summary.command, summary.status));
    for (k, v) in &summary.empirical {
        lines.push(format!("  {k} = {v:e}"));
    }
    Ok((dir, summary, lines))
}

fn trajectory_checks(summary: &mut Summary, records: &[DiagnosticsRecord], cfg: &RunConfig) -> Result<()> {
    let data = cfg.problem()?;
    let domain = cfg.box_domain()?;
    let band = data.mean_band(&domain);
    summary.empirical.insert("rho".into(), data.rho(&domain));
    summary.empirical.insert("mean_band_lo".into(), band.0);
    summary.empirical.insert("mean_band_hi".into(), band.1);
    summary.empirical.insert("records".into(), records.len() as f64);
    summary
        .violations
        .extend(apriori_monitor(records, band).iter().map(|v| v.to_string()));
    if records.is_empty() {
        return Ok(());
    }
    let ml = mean_law_check(records, &data, &domain);
    summary.empirical.insert("mean_law_continuum_error".into(), ml.continuum_error);
    summary.empirical.insert("mean_law_discrete_error".into(), ml.discrete_error);
    if ml.discrete_error > DISCRETE_MEAN_TOL {
        summary.violations.push(format!(
            "mean-value law: recorded mean departs from the scheme's scalar recursion by {:e}",
            ml.discrete_error
        ));
    }
    summary
        .empirical
        .insert("energy_identity_residual".into(), energy_identity_residual(records));
    summary
        .empirical
        .insert("max_energy_increase".into(), analysis::max_energy_increase(records));
    summary.realized_norms = Some(realized_norms(records));
    summary.final_norms = records.last().map(|r| r.norms);
    Ok(())
}

/// Runs the configured simulation; a failed run still yields the accepted
/// prefix of the trajectory.
pub fn run_simulation(cfg: RunConfig) -> Result<(Summary, Vec<DiagnosticsRecord>)> {
    let data = cfg.problem()?;
    let basis = cfg.basis()?;
    let mut summary = Summary::new("simulate", cfg);
    let (records, err) = match simulate(&data, &basis, summary.config.time.dt, summary.config.time.scheme, &mut []) {
        Ok(t) => (t.records, None),
        Err(f) => (f.partial.records, Some(f.error)),
    };
    if let Some(Error::Validation(_)) = &err {
        return Err(err.expect("matched"));
    }
    let cfg = summary.config.clone();
    trajectory_checks(&mut summary, &records, &cfg)?;
    if let Some(e) = err {
        summary.status = "failed".into();
        summary.error = Some(e.to_string());
    } else if !summary.violations.is_empty() {
        summary.status = "violations".into();
    }
    Ok((summary, records))
}

fn potentials_for(cfg: &RunConfig) -> Vec<(String, PotentialSpec)> {
    let c1 = cfg.potential.c1.unwrap_or(1.5);
    let c2 = cfg.potential.c2.unwrap_or(1.0);
    vec![
        ("regular".into(), PotentialSpec::Regular),
        ("logarithmic".into(), PotentialSpec::Logarithmic { c1 }),
        ("double_obstacle".into(), PotentialSpec::DoubleObstacle { c2 }),
    ]
}

fn suite_into_summary(summary: &mut Summary, report: SuiteReport) -> Result<()> {
    for c in &report.checks {
        summary.empirical.insert(c.name.clone(), c.value);
    }
    summary.violations.extend(
        report
            .failures()
            .map(|c| format!("{}: {:e} exceeds {:e}", c.name, c.value, c.tolerance)),
    );
    summary.details = serde_json::to_value(&report).map_err(|e| Error::Config(e.to_string()))?;
    Ok(())
}

pub fn run_verify(target: VerifyTarget, cfg: RunConfig, trajectory: Option<&Path>, seed: u64) -> Result<Summary> {
    let label = match target {
        VerifyTarget::Potentials => "verify potentials",
        VerifyTarget::Spectral => "verify spectral",
        VerifyTarget::Elliptic => "verify elliptic",
        VerifyTarget::Trajectory => "verify trajectory",
    };
    let mut summary = Summary::new(label, cfg);
    let cfg = summary.config.clone();
    let ex = &cfg.experiment;
    match target {
        VerifyTarget::Potentials => {
            let report = suites::potentials_suite(&potentials_for(&cfg), &ex.eps_values, ex.samples, seed)?;
            suite_into_summary(&mut summary, report)?;
        }
        VerifyTarget::Spectral => {
            let domain = cfg.box_domain()?;
            let bases = ex
                .spectral_modes
                .iter()
                .map(|&n| SpectralBasis::build(&domain, n))
                .collect::<Result<Vec<_>>>()?;
            suite_into_summary(&mut summary, suites::spectral_suite(&bases, ex.trials, seed)?)?;
        }
        VerifyTarget::Elliptic => {
            let report = suites::elliptic_suite(
                &cfg.box_domain()?,
                cfg.domain.n_modes,
                &cfg.potential_spec()?,
                cfg.yosida()?,
                ex.trials,
                seed,
            )?;
            suite_into_summary(&mut summary, report)?;
        }
        VerifyTarget::Trajectory => {
            let path = trajectory.ok_or_else(|| {
                Error::Usage("verify trajectory needs --trajectory <csv>".into())
            })?;
            let records = output::parse_trajectory_csv(&std::fs::read_to_string(path)?)?;
            trajectory_checks(&mut summary, &records, &cfg)?;
        }
    }
    if !summary.violations.is_empty() {
        summary.status = "violations".into();
    }
    Ok(summary)
}

fn setup(cfg: &RunConfig) -> Result<ConvergenceSetup> {
    Ok(ConvergenceSetup {
        data: cfg.problem()?,
        domain: cfg.box_domain()?,
        n_modes: cfg.domain.n_modes,
        dt: cfg.time.dt,
        scheme: cfg.time.scheme,
    })
}

pub fn run_converge(kind: ConvergenceKind, cfg: RunConfig) -> Result<(Summary, Vec<ConvergenceRow>)> {
    let label = match kind {
        ConvergenceKind::ModeCount => "converge modes",
        ConvergenceKind::Epsilon => "converge eps",
        ConvergenceKind::TimeStep => "converge dt",
    };
    let mut summary = Summary::new(label, cfg);
    let cfg = summary.config.clone();
    let s = setup(&cfg)?;
    let rows = match kind {
        ConvergenceKind::ModeCount => {
            let sched: Vec<f64> = cfg.experiment.modes.iter().map(|&n| n as f64).collect();
            convergence_study(kind, &sched, &s)?
        }
        ConvergenceKind::TimeStep => convergence_study(kind, &cfg.experiment.dt, &s)?,
        ConvergenceKind::Epsilon => {
            let sweep = epsilon_sweep(&cfg.experiment.eps, &s)?;
            let xi_l1: Vec<f64> = sweep.realized.iter().map(|r| r.xi_l1_q).collect();
            let xi_l6: Vec<f64> = sweep.realized.iter().map(|r| r.xi_l2_l6).collect();
            for v in uniformity_violations("xi L1(Q)", &xi_l1)
                .into_iter()
                .chain(uniformity_violations("xi L2(L6)", &xi_l6))
            {
                summary.violations.push(v.to_string());
            }
            if !sweep.rows.windows(2).all(|w| w[1].error < w[0].error) {
                summary
                    .violations
                    .push("eps sweep: successive differences are not strictly decreasing".into());
            }
            summary.details = serde_json::to_value(&sweep.realized).map_err(|e| Error::Config(e.to_string()))?;
            sweep.rows
        }
    };
    for (i, r) in rows.iter().enumerate() {
        summary.empirical.insert(format!("row{i}_error"), r.error);
        if let Some(rate) = r.rate {
            summary.empirical.insert(format!("row{i}_rate"), rate);
        }
    }
    if !summary.violations.is_empty() {
        summary.status = "violations".into();
    }
    Ok((summary, rows))
}

pub fn run_depend(c1: RunConfig, c2: RunConfig) -> Result<(Summary, analysis::DependenceReport)> {
    if c1.domain != c2.domain || c1.time != c2.time {
        return Err(Error::Config("dependence configs must share the domain and time sections".into()));
    }
    let d1 = c1.problem()?;
    let d2 = c2.problem()?;
    let basis = c1.basis()?;
    let mut summary = Summary::new("depend", c1);
    summary.second_config = Some(c2);
    let t = &summary.config.time;
    let report = dependence_experiment(&d1, &d2, &basis, t.dt, t.scheme)?;
    summary.empirical.insert("lhs".into(), report.lhs);
    summary.empirical.insert("rhs".into(), report.rhs_components.total());
    if let Some(k) = report.empirical_k2 {
        summary.empirical.insert("empirical_k2".into(), k);
    }
    summary.details = serde_json::to_value(&report).map_err(|e| Error::Config(e.to_string()))?;
    Ok((summary, report))
}
