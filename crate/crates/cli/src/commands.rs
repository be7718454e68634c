//! Subcommand implementations. Each returns its report; files are written
//! only when an output directory is given.

use std::path::{Path, PathBuf};

use mannlab_core::iteration::{
    anchor_limit, anchor_solve, diagnostics_with, mainge_tau, run, AnchorLimit, AnchorPath, CaseLabel, Diagnostics,
    IterationTrace, RunOptions, TauOutcome,
};
use mannlab_core::operators::{certify_with, Certificate, FixedSet};
use mannlab_core::schedules::{validate_legacy, validate_theorem31, validate_theorem32, Legacy, VerdictReport};
use mannlab_core::space::{NormKind, SmoothConstantReport};
use mannlab_core::{Operator, ScheduleSet, Space, Vector};
use serde::Serialize;

use crate::config::{vector, RunConfig};
use crate::error::CliError;
use crate::output::{ensure_dir, fmt17, write_json, write_trace_file};

/// Residual level used for the "iterations to converge" column of a sweep.
pub const SWEEP_RESIDUAL_LEVEL: f64 = 1e-6;

/// Where human-readable progress lines go.
pub struct Log {
    quiet: bool,
}

impl Log {
    pub fn new(quiet: bool) -> Self {
        Self { quiet }
    }

    pub fn line(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

fn check(id: &str, pass: bool, detail: String) -> Check {
    Check {
        id: id.into(),
        pass,
        detail,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorSummary {
    pub z: Vector,
    pub t_min: f64,
    pub extrapolation_gap: f64,
    pub final_increment: Option<f64>,
}

/// The run summary. Wall time is kept out so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub trace: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub final_dist_to_z: f64,
    pub case: CaseLabel,
    pub anchor: AnchorSummary,
    /// The point of `F(T)` used for the boundedness check.
    pub fixed_point: Vector,
    /// `‖z − P_F u‖` when the projection oracle applies.
    pub projection_gap: Option<f64>,
    pub tail_max_anchor_pairing: f64,
    pub min_bound_slack: f64,
    pub min_ineq35_slack: f64,
    pub min_key_ineq_slack: f64,
    pub smooth_constant: Option<SmoothConstantReport>,
    pub checks: Vec<Check>,
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub verdicts: VerdictReport,
    pub certificate: Certificate,
    pub trace: IterationTrace,
    pub diagnostics: Diagnostics,
    pub anchor: AnchorLimit,
}

fn is_euclidean(space: &Space) -> bool {
    match space.kind() {
        NormKind::Euclidean => true,
        NormKind::Lp { p } => p == 2.0,
    }
}

/// Nearest point of `F(T)` to `u`, available for euclidean spaces and
/// operators with a closed-form fixed set.
pub fn projection_oracle(op: &Operator, u: &Vector) -> Option<Vector> {
    if !is_euclidean(op.space()) {
        return None;
    }
    let fixed: FixedSet = op.fixed_points_oracle().ok()?;
    fixed.project_euclidean(u).ok()
}

/// Operator, certificate and smoothness check shared by `run` and every
/// sweep cell.
pub struct Prepared {
    pub space: Space,
    pub op: Operator,
    pub lambda: f64,
    pub certificate: Certificate,
    pub smooth: Option<SmoothConstantReport>,
}

pub fn prepare(cfg: &RunConfig, log: &Log) -> Result<Prepared, CliError> {
    let space = cfg.space.build()?;
    let lambda = cfg.operator.lambda()?;
    let seed = cfg.seed()?;
    let op = cfg.operator.build(&space)?;
    let smooth = if is_euclidean(&space) {
        None
    } else {
        let r = space.validate_smooth_constant_with(cfg.smooth_check.n_samples, seed, &cfg.tolerances)?;
        if r.violations > 0 {
            log.line(format!(
                "warning: K2 = {} violated on {} of {} samples (largest excess {:e}); continuing",
                r.k2, r.violations, r.n_samples, r.max_violation
            ));
        }
        Some(r)
    };
    let certificate = certify_with(
        &op,
        lambda,
        cfg.certify.n_pairs,
        seed,
        cfg.certify.sampling_box,
        &cfg.tolerances,
    )?;
    Ok(Prepared {
        space,
        op,
        lambda,
        certificate,
        smooth,
    })
}

struct Simulation {
    trace: IterationTrace,
    diagnostics: Diagnostics,
    anchor: AnchorLimit,
    fixed_point: Vector,
    projection_gap: Option<f64>,
}

fn simulate(cfg: &RunConfig, prep: &Prepared, s: &ScheduleSet, u: &Vector, x0: &Vector) -> Result<Simulation, CliError> {
    let anchor = anchor_limit(&prep.op, u, &cfg.anchor.t_grid, cfg.anchor.tol)?;
    let projection = projection_oracle(&prep.op, u);
    let projection_gap = projection.as_ref().map(|p| p.sub(&anchor.z).dot(&p.sub(&anchor.z)).sqrt());
    let fixed_point = projection.unwrap_or_else(|| anchor.z.clone());
    let opts = RunOptions::new(cfg.max_iter)
        .with_residual_tol(cfg.residual_tol)
        .with_fixed_point(fixed_point.clone());
    let trace = run(&prep.op, s, u, x0, &opts)?;
    let diagnostics = diagnostics_with(&prep.op, &trace, &anchor.z, &fixed_point, &cfg.tolerances)?;
    Ok(Simulation {
        trace,
        diagnostics,
        anchor,
        fixed_point,
        projection_gap,
    })
}

fn summarize(cfg: &RunConfig, prep: &Prepared, verdicts: &VerdictReport, sim: &Simulation, trace_name: Option<String>) -> RunSummary {
    let d = &sim.diagnostics;
    let last = d.rows.last().expect("trace holds x_0");
    let mut checks = vec![
        check(
            "schedule_theorem31",
            verdicts.all_pass(),
            verdicts
                .failed()
                .map(|c| c.condition.clone())
                .collect::<Vec<_>>()
                .join(","),
        ),
        check(
            "certificate",
            prep.certificate.is_certified(),
            format!("max_violation {:e}", prep.certificate.max_violation),
        ),
        check(
            "boundedness",
            d.bound_violations == 0,
            format!("{} violations, min slack {:e}", d.bound_violations, d.min_bound_slack),
        ),
        check(
            "one_step_recursion",
            d.ineq35_violations == 0,
            format!("{} violations, min slack {:e}", d.ineq35_violations, d.min_ineq35_slack),
        ),
        check(
            "key_inequality",
            d.key_ineq_violations == 0,
            format!("{} violations, min slack {:e}", d.key_ineq_violations, d.min_key_ineq_slack),
        ),
    ];
    if let Some(gap) = sim.projection_gap {
        checks.push(check("projection_oracle", gap <= 1e-3, format!("|z - P_F u| = {gap:e}")));
    }
    RunSummary {
        config: cfg.clone(),
        trace: trace_name,
        iterations: sim.trace.iterations(),
        converged: sim.trace.converged,
        final_residual: sim.trace.final_residual,
        final_dist_to_z: last.dist_to_z,
        case: d.case,
        anchor: AnchorSummary {
            z: sim.anchor.z.clone(),
            t_min: sim.anchor.t_min,
            extrapolation_gap: sim.anchor.extrapolation_gap,
            final_increment: sim.anchor.increments.last().copied(),
        },
        fixed_point: sim.fixed_point.clone(),
        projection_gap: sim.projection_gap,
        tail_max_anchor_pairing: d.tail_max_anchor_pairing,
        min_bound_slack: d.min_bound_slack,
        min_ineq35_slack: d.min_ineq35_slack,
        min_key_ineq_slack: d.min_key_ineq_slack,
        smooth_constant: prep.smooth.clone(),
        checks,
    }
}

/// `run`: validate the schedule, certify the operator, compute the anchor
/// limit, iterate, and persist `verdicts.json`, `certificate.json`,
/// `trace.csv` and `summary.json`.
pub fn cmd_run(cfg: &RunConfig, out: Option<&Path>, log: &Log) -> Result<RunOutcome, CliError> {
    let space = cfg.space.build()?;
    let lambda = cfg.operator.lambda()?;
    let s = cfg.schedules()?;
    let verdicts = validate_theorem31(s, lambda, space.k2(), cfg.max_iter.max(1))?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&verdicts, &dir.join("verdicts.json"))?;
    }
    if !verdicts.all_pass() {
        let failed: Vec<String> = verdicts
            .failed()
            .map(|c| format!("{} ({})", c.condition, c.note))
            .collect();
        return Err(CliError::Validation(format!(
            "schedule fails the convergence conditions: {}",
            failed.join("; ")
        )));
    }
    let prep = prepare(cfg, log)?;
    if let Some(dir) = out {
        write_json(&prep.certificate, &dir.join("certificate.json"))?;
    }
    if !prep.certificate.is_certified() {
        return Err(CliError::Validation(format!(
            "operator `{}` is not a {}-strict pseudocontraction: {:?}",
            prep.op.name(),
            lambda,
            prep.certificate.verdict
        )));
    }
    let (u, x0) = (cfg.u()?, cfg.x0()?);
    let sim = simulate(cfg, &prep, s, &u, &x0)?;
    let trace_name = out.map(|_| "trace.csv".to_string());
    let summary = summarize(cfg, &prep, &verdicts, &sim, trace_name);
    if let Some(dir) = out {
        write_trace_file(&sim.diagnostics.rows, &dir.join("trace.csv"))?;
        write_json(&summary, &dir.join("summary.json"))?;
    }
    log.line(format!(
        "{} iterations, residual {}, dist_to_z {}, {:?}",
        summary.iterations,
        fmt17(summary.final_residual),
        fmt17(summary.final_dist_to_z),
        summary.case
    ));
    for c in summary.checks.iter().filter(|c| !c.pass) {
        log.line(format!("check {} failed: {}", c.id, c.detail));
    }
    Ok(RunOutcome {
        summary,
        verdicts,
        certificate: prep.certificate,
        trace: sim.trace,
        diagnostics: sim.diagnostics,
        anchor: sim.anchor,
    })
}

fn pass_fail(r: &VerdictReport) -> &'static str {
    if r.all_pass() {
        "pass"
    } else {
        "fail"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub id: String,
    pub theorem31: String,
    pub zhou: String,
    pub chai_song: String,
    /// First `n` with `‖x_n − T x_n‖ ≤ 1e-6`.
    pub iterations_to_residual: Option<usize>,
    pub final_dist_to_z: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCellReport {
    pub row: SweepRow,
    pub verdicts: Vec<VerdictReport>,
    pub summary: Option<RunSummary>,
}

fn cell_dir_name(index: usize, id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{index:03}_{safe}")
}

fn sweep_cell(
    cfg: &RunConfig,
    prep: &Prepared,
    index: usize,
    cell: &crate::config::SweepCell,
    out: Option<&Path>,
) -> SweepCellReport {
    let k2 = prep.space.k2();
    let horizon = cfg.max_iter.max(2);
    let mut row = SweepRow {
        index,
        id: cell.id.clone(),
        theorem31: "error".into(),
        zhou: "error".into(),
        chai_song: "error".into(),
        iterations_to_residual: None,
        final_dist_to_z: None,
        status: "ok".into(),
    };
    let verdicts: Result<Vec<VerdictReport>, CliError> = (|| {
        Ok(vec![
            validate_theorem31(&cell.schedules, prep.lambda, k2, horizon)?,
            validate_legacy(&cell.schedules, Legacy::Zhou, prep.lambda, k2, horizon)?,
            validate_legacy(&cell.schedules, Legacy::ChaiSong, prep.lambda, k2, horizon)?,
        ])
    })();
    let verdicts = match verdicts {
        Ok(v) => v,
        Err(e) => {
            row.status = format!("error: {e}");
            return SweepCellReport {
                row,
                verdicts: Vec::new(),
                summary: None,
            };
        }
    };
    row.theorem31 = pass_fail(&verdicts[0]).into();
    row.zhou = pass_fail(&verdicts[1]).into();
    row.chai_song = pass_fail(&verdicts[2]).into();

    let mut cell_cfg = cfg.clone();
    cell_cfg.sweep = None;
    cell_cfg.schedules = Some(cell.schedules.clone());
    if let Some(u) = &cell.u {
        cell_cfg.u = Some(u.clone());
    }
    if let Some(x0) = &cell.x0 {
        cell_cfg.x0 = Some(x0.clone());
    }
    let dir = out.map(|d| d.join("cells").join(cell_dir_name(index, &cell.id)));
    let result = (|| {
        let u = vector(cell_cfg.u.as_deref(), "u")?;
        let x0 = vector(cell_cfg.x0.as_deref(), "x0")?;
        let sim = simulate(&cell_cfg, prep, &cell.schedules, &u, &x0)?;
        let summary = summarize(&cell_cfg, prep, &verdicts[0], &sim, dir.as_ref().map(|_| "trace.csv".into()));
        if let Some(dir) = &dir {
            ensure_dir(dir)?;
            write_json(&verdicts, &dir.join("verdicts.json"))?;
            write_trace_file(&sim.diagnostics.rows, &dir.join("trace.csv"))?;
            write_json(&summary, &dir.join("summary.json"))?;
        }
        let first = sim
            .diagnostics
            .rows
            .iter()
            .find(|r| r.residual <= SWEEP_RESIDUAL_LEVEL)
            .map(|r| r.n);
        Ok::<_, CliError>((summary, first))
    })();
    match result {
        Ok((summary, first)) => {
            row.iterations_to_residual = first;
            row.final_dist_to_z = Some(summary.final_dist_to_z);
            SweepCellReport {
                row,
                verdicts,
                summary: Some(summary),
            }
        }
        Err(e) => {
            row.status = format!("error: {e}");
            SweepCellReport {
                row,
                verdicts,
                summary: None,
            }
        }
    }
}

pub const COMPARISON_HEADER: &str =
    "schedule_id,theorem31,zhou,chai_song,iterations_to_residual_1e-6,final_dist_to_z,status";

pub fn comparison_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(COMPARISON_HEADER);
    s.push('\n');
    for r in rows {
        let status = r.status.replace([',', '\n'], ";");
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.id,
            r.theorem31,
            r.zhou,
            r.chai_song,
            r.iterations_to_residual.map(|n| n.to_string()).unwrap_or_default(),
            r.final_dist_to_z.map(fmt17).unwrap_or_default(),
            status
        ));
    }
    s
}

/// `sweep`: one run per grid cell, independent of whether the cell passes
/// the validators. Cells run on worker threads and are merged by index.
pub fn cmd_sweep(cfg: &RunConfig, out: Option<&Path>, log: &Log) -> Result<Vec<SweepCellReport>, CliError> {
    let cells = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweep needs a `sweep` array in the config".into()))?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
    }
    let reports = if cells.is_empty() {
        Vec::new()
    } else {
        let prep = prepare(cfg, log)?;
        if let Some(dir) = out {
            write_json(&prep.certificate, &dir.join("certificate.json"))?;
        }
        if !prep.certificate.is_certified() {
            return Err(CliError::Validation(format!(
                "operator `{}` is not certified at lambda {}",
                prep.op.name(),
                prep.lambda
            )));
        }
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cells.len());
        let mut slots: Vec<Option<SweepCellReport>> = vec![None; cells.len()];
        std::thread::scope(|scope| {
            for (w, chunk) in slots.chunks_mut(cells.len().div_ceil(workers)).enumerate() {
                let prep = &prep;
                let base = w * cells.len().div_ceil(workers);
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        let i = base + k;
                        *slot = Some(sweep_cell(cfg, prep, i, &cells[i], out));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every cell ran")).collect()
    };
    let rows: Vec<SweepRow> = reports.iter().map(|r| r.row.clone()).collect();
    if let Some(dir) = out {
        std::fs::write(dir.join("comparison.csv"), comparison_csv(&rows))?;
        write_json(&rows, &dir.join("sweep.json"))?;
    }
    for r in &rows {
        log.line(format!(
            "{}: theorem31={} zhou={} chai_song={} dist_to_z={} {}",
            r.id,
            r.theorem31,
            r.zhou,
            r.chai_song,
            r.final_dist_to_z.map(fmt17).unwrap_or_else(|| "-".into()),
            r.status
        ));
    }
    Ok(reports)
}

/// `certify`: samples the strict-pseudocontraction inequality at `lambda`.
/// The operator is built without a claim so closed-form refutations still
/// produce a sampled witness.
pub fn cmd_certify(cfg: &RunConfig, lambda: Option<f64>, log: &Log) -> Result<Certificate, CliError> {
    let space = cfg.space.build()?;
    let lambda = match lambda {
        Some(l) => l,
        None => cfg.operator.lambda()?,
    };
    let op = Operator::gallery(&cfg.operator.name, &space, &cfg.operator.params, None)?;
    let cert = certify_with(
        &op,
        lambda,
        cfg.certify.n_pairs,
        cfg.seed()?,
        cfg.certify.sampling_box,
        &cfg.tolerances,
    )?;
    match &cert.verdict {
        mannlab_core::operators::Verdict::Certified => log.line(format!(
            "{} certified at lambda {} over {} pairs",
            cert.operator, lambda, cert.n_pairs
        )),
        mannlab_core::operators::Verdict::Refuted { x, y, slack } => log.line(format!(
            "{} refuted at lambda {}: x = {:?}, y = {:?}, slack {:e}",
            cert.operator,
            lambda,
            x.as_slice(),
            y.as_slice(),
            slack
        )),
    }
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremChoice {
    Theorem31,
    Theorem32,
    Zhou,
    ChaiSong,
    All,
}

impl std::str::FromStr for TheoremChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "theorem31" => TheoremChoice::Theorem31,
            "theorem32" => TheoremChoice::Theorem32,
            "zhou" => TheoremChoice::Zhou,
            "chai_song" => TheoremChoice::ChaiSong,
            "all" => TheoremChoice::All,
            other => return Err(format!("unknown condition set `{other}`")),
        })
    }
}

/// `validate-schedule`: condition-by-condition verdicts.
pub fn cmd_validate(
    cfg: &RunConfig,
    which: TheoremChoice,
    horizon: Option<usize>,
) -> Result<Vec<VerdictReport>, CliError> {
    let space = cfg.space.build()?;
    let lambda = cfg.operator.lambda()?;
    let s = cfg.schedules()?;
    let h = horizon.unwrap_or(cfg.max_iter).max(2);
    let k2 = space.k2();
    let t31 = || validate_theorem31(s, lambda, k2, h);
    let t32 = || validate_theorem32(s, lambda, space.q(), space.cq(), h);
    let zhou = || validate_legacy(s, Legacy::Zhou, lambda, k2, h);
    let cs = || validate_legacy(s, Legacy::ChaiSong, lambda, k2, h);
    Ok(match which {
        TheoremChoice::Theorem31 => vec![t31()?],
        TheoremChoice::Theorem32 => vec![t32()?],
        TheoremChoice::Zhou => vec![zhou()?],
        TheoremChoice::ChaiSong => vec![cs()?],
        TheoremChoice::All => vec![t31()?, t32()?, zhou()?, cs()?],
    })
}

/// Reads a sequence as a JSON array or as numbers separated by commas or
/// whitespace.
pub fn parse_sequence(text: &str) -> Result<Vec<f64>, CliError> {
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    trimmed
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad number `{t}`: {e}")))
        })
        .collect()
}

pub fn cmd_tau(path: &Path) -> Result<TauOutcome, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(mainge_tau(&parse_sequence(&text)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AnchorReport {
    Point(AnchorPath),
    Limit {
        limit: AnchorLimit,
        projection: Option<Vector>,
        projection_gap: Option<f64>,
    },
}

/// `anchor`: one anchor point at `t`, or the limit along the configured grid.
pub fn cmd_anchor(cfg: &RunConfig, t: Option<f64>) -> Result<AnchorReport, CliError> {
    let space = cfg.space.build()?;
    let op = cfg.operator.build(&space)?;
    let u = cfg.u()?;
    if let Some(t) = t {
        return Ok(AnchorReport::Point(anchor_solve(&op, &u, t, cfg.anchor.tol)?));
    }
    let limit = anchor_limit(&op, &u, &cfg.anchor.t_grid, cfg.anchor.tol)?;
    let projection = projection_oracle(&op, &u);
    let projection_gap = projection.as_ref().map(|p| p.sub(&limit.z).dot(&p.sub(&limit.z)).sqrt());
    Ok(AnchorReport::Limit {
        limit,
        projection,
        projection_gap,
    })
}

/// Output directory: the flag, then the config, then the environment.
pub fn resolve_out(flag: Option<PathBuf>, cfg: Option<&RunConfig>, env: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| cfg.and_then(|c| c.output.as_ref()).map(|o| o.dir.clone()))
        .or(env)
}
