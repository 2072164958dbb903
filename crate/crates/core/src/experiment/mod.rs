//! Scenario runs, policy sweeps, diagnostics reports and plot data.
//!
//! A run writes one directory `<out>/<name>-<hash8>-<timestamp>/` holding
//! `manifest.json`, `aggregate.csv`, `diagnostics.json` and
//! `trajectories/seed_NNNNNN.csv`. A sweep writes `sweep_manifest.json` and one
//! `policy_<i>_<kind>.csv` per payoff.

pub mod config;
pub mod csvio;
pub mod manifest;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::diagnostics::{
    azuma_check, base_drift_extremes, classify_convergence, clt_probe, doob_decompose,
    empirical_policy_range, epsilon_threshold, escape_threshold, increment_bound, martingale_rows,
    mean_path_slope, variance_bound, Label,
};
use crate::dynamics::{drift, run_ensemble, Trajectory};
use crate::error::{Error, Result};
use crate::optimizer::{policy_table, policy_table_lambda, PolicyTable};
use crate::payoff::growth_compare;

pub use config::{PayoffConfig, ScenarioFile};
pub use manifest::*;

/// Options shared by the CLI subcommands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    pub out: PathBuf,
    pub seed_offset: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            out: PathBuf::from("runs"),
            seed_offset: 0,
        }
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Hex SHA-256 of the config's JSON form.
pub fn config_hash(file: &ScenarioFile) -> String {
    let json = serde_json::to_vec(file).expect("scenario files serialize to JSON");
    Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn now_utc() -> (String, String) {
    let t = chrono::Utc::now();
    (t.format("%Y%m%dT%H%M%SZ").to_string(), t.to_rfc3339())
}

fn fresh_dir(out: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut dir = out.join(stem);
    let mut k = 1;
    while dir.exists() {
        k += 1;
        dir = out.join(format!("{stem}-{k}"));
    }
    fs::create_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn aggregate(ensemble: &[Trajectory], labels: &[Label]) -> AggregateStats {
    let n = ensemble.len();
    let count = |l: Label| labels.iter().filter(|&&x| x == l).count();
    let steps: usize = ensemble.iter().map(|t| t.steps()).sum();
    let drift_sum: f64 = ensemble
        .iter()
        .map(|tr| (0..tr.steps()).map(|t| tr.drift_total(t)).sum::<f64>())
        .sum();
    AggregateStats {
        trajectories: n,
        learned: count(Label::Learned),
        failed: count(Label::Failed),
        undecided: count(Label::Undecided),
        learned_fraction: count(Label::Learned) as f64 / n.max(1) as f64,
        mean_lambda_final: ensemble.iter().map(|t| t.lambda_final()).sum::<f64>() / n.max(1) as f64,
        mean_drift: if steps == 0 { 0.0 } else { drift_sum / steps as f64 },
    }
}

/// Full diagnostics for an ensemble simulated from `file`.
pub fn analyze(file: &ScenarioFile, ensemble: &[Trajectory]) -> Result<DiagnosticsReport> {
    let cfg = file.scenario()?;
    let d = &file.diagnostics;
    let window = file.window();
    let labels: Vec<Label> = ensemble
        .iter()
        .map(|t| classify_convergence(t, d.learned_cut, window).label)
        .collect();
    let agg = aggregate(ensemble, &labels);
    let mut errors = Vec::new();
    let mut notes = vec![
        "learned label: lambda_T below learned_cut and final-window maximum below learned_cut/2".to_string(),
        "KS target 0.08 for 400 trajectories is a sanity bound, not a theoretical constant".to_string(),
        "policy range is the union of the hulls of l* below and above 1 over the diagnostics lambda grid".to_string(),
    ];

    let range = match empirical_policy_range(
        &cfg.ps,
        &cfg.sm,
        d.policy_lambda_min,
        d.policy_lambda_max,
        d.policy_lambda_step,
    ) {
        Ok((r, _)) => Some(r),
        Err(e) => {
            errors.push(format!("policy range: {e}"));
            None
        }
    };
    let extremes = range
        .as_ref()
        .and_then(|r| base_drift_extremes(&cfg.sm, cfg.p, r, 2000).ok());
    let delta = d.delta.or(extremes.map(|(_, hi)| hi.abs() / 2.0));
    let eps_bar = match (&range, delta) {
        (Some(r), Some(delta)) => epsilon_threshold(&cfg.sm, cfg.p, r, delta)
            .map_err(|e| errors.push(format!("epsilon threshold: {e}")))
            .ok(),
        _ => None,
    };
    let inc_bound = range
        .as_ref()
        .and_then(|r| increment_bound(&cfg.sm, cfg.p, r, 2000).ok());
    let recorded_s = ensemble
        .iter()
        .flat_map(|t| t.sigma_sq.iter().copied())
        .fold(0.0, f64::max);
    let var_bound = range
        .as_ref()
        .and_then(|r| variance_bound(&cfg.sm, cfg.p, cfg.eps, r, 2000).ok())
        .map(|s| s.max(recorded_s));

    let escape_delta = (cfg.eps > 0.0).then(|| cfg.eps * cfg.p / 4.0);
    let (escape, escape_error) = match escape_delta {
        Some(ed) => match escape_threshold(&cfg.ps, &cfg.sm, cfg.p, cfg.eps, ed) {
            Ok(e) => (Some(e), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, Some("eps = 0: the distortion term vanishes, no escape threshold".into())),
    };
    if escape.is_some() {
        notes.push("escape threshold uses delta = eps p / 4; the failure-branch correction is bounded on a grid".into());
    }

    let mut decomps = Vec::with_capacity(ensemble.len());
    for tr in ensemble {
        match doob_decompose(tr) {
            Ok(dd) => decomps.push(dd),
            Err(e) => errors.push(format!("doob: {e}")),
        }
    }
    let doob = DoobSummary {
        max_reconstruction_error: decomps.iter().map(|x| x.reconstruction_error).fold(0.0, f64::max),
        errors: errors.iter().filter(|e| e.starts_with("doob")).cloned().collect(),
    };
    let martingale = martingale_rows(&decomps, &d.martingale_times);
    let azuma = match (delta, inc_bound) {
        (Some(delta), Some(dd)) => Some(azuma_check(ensemble, delta, dd, &d.azuma_times)),
        _ => None,
    };
    let clt = var_bound
        .map(|s| clt_probe(&decomps, &d.nu, s))
        .unwrap_or_default();
    let slope = mean_path_slope(ensemble);
    let linear_drift = LinearDrift {
        slope,
        mean_drift: agg.mean_drift,
        relative_gap: slope
            .filter(|_| agg.mean_drift != 0.0)
            .map(|s| (s - agg.mean_drift).abs() / agg.mean_drift.abs()),
    };
    Ok(DiagnosticsReport {
        config: file.clone(),
        notes,
        aggregate: agg,
        learned_cut: d.learned_cut,
        window,
        policy_range: range,
        base_drift_min: extremes.map(|e| e.0),
        base_drift_max: extremes.map(|e| e.1),
        delta,
        epsilon_threshold: eps_bar,
        escape_delta,
        escape_threshold: escape,
        escape_error,
        increment_bound: inc_bound,
        variance_bound: var_bound,
        doob,
        martingale,
        azuma,
        clt,
        linear_drift,
        errors,
    })
}

fn acceptance(file: &ScenarioFile, agg: &AggregateStats) -> Vec<AcceptanceCheck> {
    let mut out = Vec::new();
    if let Some(b) = file.acceptance.min_learned_fraction {
        out.push(AcceptanceCheck {
            name: "min_learned_fraction".into(),
            value: agg.learned_fraction,
            bound: b,
            pass: agg.learned_fraction >= b,
        });
    }
    if let Some(b) = file.acceptance.max_learned_fraction {
        out.push(AcceptanceCheck {
            name: "max_learned_fraction".into(),
            value: agg.learned_fraction,
            bound: b,
            pass: agg.learned_fraction <= b,
        });
    }
    out
}

/// Result of [`run_scenario`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub report: DiagnosticsReport,
}

/// Simulate the scenario, write all outputs and return the manifest.
pub fn run_scenario(config_path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let file = ScenarioFile::load(config_path)?;
    run_scenario_file(&file, opts)
}

pub fn run_scenario_file(file: &ScenarioFile, opts: &RunOptions) -> Result<RunOutcome> {
    let cfg = file.scenario()?;
    let started = Instant::now();
    let hash = config_hash(file);
    let (stamp, created) = now_utc();
    let dir = fresh_dir(&opts.out, &format!("{}-{}-{}", file.name, &hash[..8], stamp))?;

    let first = opts.seed_offset;
    let last = first + file.dynamics.trajectories;
    let ensemble = run_ensemble(&cfg, first..last, opts.workers)?;

    let traj_dir = dir.join("trajectories");
    let mut digests = Vec::with_capacity(ensemble.len());
    if file.output.write_trajectories {
        fs::create_dir(&traj_dir).map_err(|e| Error::io(&traj_dir, e))?;
    }
    for tr in &ensemble {
        let bytes = csvio::trajectory_bytes(tr);
        digests.push(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect());
        if file.output.write_trajectories {
            let path = traj_dir.join(csvio::trajectory_file_name(tr.index));
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        }
    }

    let agg_path = dir.join("aggregate.csv");
    let f = fs::File::create(&agg_path).map_err(|e| Error::io(&agg_path, e))?;
    csvio::write_aggregate(BufWriter::new(f), &ensemble, file.diagnostics.learned_cut)?;

    let report = analyze(file, &ensemble)?;
    write_json(&dir.join("diagnostics.json"), &report)?;

    let window = file.window();
    let summaries = ensemble
        .iter()
        .map(|tr| {
            let mut s = tr.summary();
            s.label = Some(
                classify_convergence(tr, file.diagnostics.learned_cut, window)
                    .label
                    .as_str()
                    .to_string(),
            );
            s
        })
        .collect();
    let failures = ensemble
        .iter()
        .filter_map(|tr| {
            tr.terminated.as_ref().map(|t| SeedFailure {
                index: tr.index,
                period: t.period,
                reason: t.reason.clone(),
            })
        })
        .collect();
    let checks = acceptance(file, &report.aggregate);
    let manifest = RunManifest {
        kind: "run".into(),
        artifact_version: ARTIFACT_VERSION.into(),
        name: file.name.clone(),
        config: file.clone(),
        config_hash: hash,
        created_utc: created,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        workers: opts.workers,
        seed: file.dynamics.seed,
        trajectory_indices: (first..last).collect(),
        total_steps: ensemble.iter().map(|t| t.steps() as u64).sum(),
        summaries,
        aggregate: report.aggregate.clone(),
        failures,
        acceptance_passed: checks.iter().all(|c| c.pass),
        acceptance: checks,
        trajectory_digests: digests,
        files: RunFiles {
            trajectories: file.output.write_trajectories.then(|| "trajectories".to_string()),
            aggregate: "aggregate.csv".into(),
            diagnostics: "diagnostics.json".into(),
        },
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome {
        dir,
        manifest,
        report,
    })
}

type SweepTable = (PayoffConfig, PolicyTable, Vec<(i32, f64)>);

fn sweep_tables(file: &ScenarioFile) -> Result<Vec<SweepTable>> {
    let sweep = file.sweep.clone().unwrap_or(config::SweepConfig {
        u: Vec::new(),
        near_one_k: (2..=8).collect(),
        lambda: Some(config::LambdaGrid {
            min: -40.0,
            max: 40.0,
            step: 0.25,
        }),
        payoffs: Vec::new(),
    });
    let payoffs = if sweep.payoffs.is_empty() {
        vec![file.payoff.clone()]
    } else {
        sweep.payoffs.clone()
    };
    let mut out = Vec::new();
    for pc in payoffs {
        let ps = pc.to_spec(file.model)?;
        let mut rows = Vec::new();
        if let Some(g) = &sweep.lambda {
            let n = ((g.max - g.min) / g.step).round() as usize;
            let grid: Vec<f64> = (0..=n).map(|k| g.min + g.step * k as f64).collect();
            rows.extend(policy_table_lambda(&ps, &file.model, &grid).rows);
        }
        if !sweep.u.is_empty() {
            rows.extend(policy_table(&ps, &file.model, &sweep.u).rows);
        }
        let near_u: Vec<f64> = sweep.near_one_k.iter().map(|&k| 1.0 - 10f64.powi(-k)).collect();
        let near = policy_table(&ps, &file.model, &near_u);
        let near_one = sweep
            .near_one_k
            .iter()
            .zip(&near.rows)
            .filter_map(|(&k, r)| r.point.map(|p| (k, p.l_star)))
            .collect();
        rows.extend(near.rows);
        let table = PolicyTable {
            l_min: rows.iter().filter_map(|r| r.point.map(|p| p.l_star)).reduce(f64::min),
            l_max: rows.iter().filter_map(|r| r.point.map(|p| p.l_star)).reduce(f64::max),
            failures: rows.iter().filter(|r| r.error.is_some()).count(),
            rows,
        };
        out.push((pc, table, near_one));
    }
    Ok(out)
}

/// Policy tables for every payoff in the sweep section.
pub fn run_policy_sweep(config_path: &Path, opts: &RunOptions) -> Result<(PathBuf, SweepManifest)> {
    let file = ScenarioFile::load(config_path)?;
    run_policy_sweep_file(&file, opts)
}

pub fn run_policy_sweep_file(file: &ScenarioFile, opts: &RunOptions) -> Result<(PathBuf, SweepManifest)> {
    let started = Instant::now();
    let hash = config_hash(file);
    let (stamp, created) = now_utc();
    let dir = fresh_dir(&opts.out, &format!("{}-sweep-{}-{}", file.name, &hash[..8], stamp))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let tables = pool.install(|| sweep_tables(file))?;
    let mut entries = Vec::new();
    for (i, (pc, table, near_one)) in tables.iter().enumerate() {
        let name = format!("policy_{i}_{}.csv", pc.label());
        let path = dir.join(&name);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        csvio::write_policy(BufWriter::new(f), table)?;
        entries.push(SweepEntry {
            index: i,
            payoff: pc.clone(),
            file: name,
            rows: table.rows.len(),
            failures: table.failures,
            min_l_star: table.l_min,
            max_l_star: table.l_max,
            near_one: near_one.clone(),
            near_one_increasing: (near_one.len() >= 2)
                .then(|| near_one.windows(2).all(|w| w[1].1 > w[0].1)),
        });
    }
    let mut growth = Vec::new();
    for a in 0..tables.len() {
        for b in 0..tables.len() {
            if a != b {
                let pa = tables[a].0.to_spec(file.model)?;
                let pb = tables[b].0.to_spec(file.model)?;
                growth.push(GrowthEntry {
                    a,
                    b,
                    order: growth_compare(&pa, &pb),
                });
            }
        }
    }
    let manifest = SweepManifest {
        kind: "sweep".into(),
        artifact_version: ARTIFACT_VERSION.into(),
        name: file.name.clone(),
        config: file.clone(),
        config_hash: hash,
        created_utc: created,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        payoffs: entries,
        growth,
    };
    write_json(&dir.join("sweep_manifest.json"), &manifest)?;
    Ok((dir, manifest))
}

/// Kinds of plot data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LambdaPaths,
    DriftProfile,
    PolicyCurve,
    AzumaTable,
}

impl FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda_paths" => Ok(PlotKind::LambdaPaths),
            "drift_profile" => Ok(PlotKind::DriftProfile),
            "policy_curve" => Ok(PlotKind::PolicyCurve),
            "azuma_table" => Ok(PlotKind::AzumaTable),
            other => Err(Error::Config(format!(
                "unknown plot kind {other:?}; expected lambda_paths, drift_profile, policy_curve or azuma_table"
            ))),
        }
    }
}

impl PlotKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlotKind::LambdaPaths => "lambda_paths",
            PlotKind::DriftProfile => "drift_profile",
            PlotKind::PolicyCurve => "policy_curve",
            PlotKind::AzumaTable => "azuma_table",
        }
    }
}

/// A manifest of either kind.
#[derive(Debug, Clone)]
pub enum AnyManifest {
    Run(Box<RunManifest>),
    Sweep(Box<SweepManifest>),
}

pub fn load_manifest(path: &Path) -> Result<AnyManifest> {
    let v: serde_json::Value = read_json(path)?;
    match v.get("kind").and_then(|k| k.as_str()) {
        Some("run") => Ok(AnyManifest::Run(Box::new(serde_json::from_value(v)?))),
        Some("sweep") => Ok(AnyManifest::Sweep(Box::new(serde_json::from_value(v)?))),
        _ => Err(Error::Config(format!("{}: not a run or sweep manifest", path.display()))),
    }
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}

/// Read the trajectory CSVs a run manifest points at.
pub fn load_trajectories(manifest_path: &Path, m: &RunManifest) -> Result<Vec<Trajectory>> {
    let dir = match &m.files.trajectories {
        Some(d) => manifest_dir(manifest_path).join(d),
        None => {
            return Err(Error::Config(
                "run was made with output.write_trajectories = false; no trajectory files to read".into(),
            ))
        }
    };
    let cfg = m.config.scenario()?;
    m.trajectory_indices
        .iter()
        .map(|&i| {
            let ctx = csvio::TrajectoryContext {
                index: i,
                seed: cfg.seed,
                p: cfg.p,
                eps: cfg.eps,
                sm: cfg.sm,
                true_state: cfg.true_state,
                horizon: cfg.horizon,
            };
            csvio::read_trajectory(&dir.join(csvio::trajectory_file_name(i)), &ctx)
        })
        .collect()
}

/// Recompute diagnostics from a run's trajectory files and write
/// `diagnostics_recomputed.json` next to the manifest.
pub fn diagnose(manifest_path: &Path) -> Result<(PathBuf, DiagnosticsReport)> {
    let m = match load_manifest(manifest_path)? {
        AnyManifest::Run(m) => m,
        AnyManifest::Sweep(_) => {
            return Err(Error::Config("diagnose needs a run manifest, got a sweep manifest".into()))
        }
    };
    let ensemble = load_trajectories(manifest_path, &m)?;
    let report = analyze(&m.config, &ensemble)?;
    let out = manifest_dir(manifest_path).join("diagnostics_recomputed.json");
    write_json(&out, &report)?;
    Ok((out, report))
}

/// Write tidy plot data for `kind` and return its path. The first line is a
/// `#` comment naming the columns.
pub fn emit_plotdata(manifest_path: &Path, kind: PlotKind, out_dir: Option<&Path>) -> Result<PathBuf> {
    let manifest = load_manifest(manifest_path)?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| manifest_dir(manifest_path));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join(format!("plot_{}.csv", kind.as_str()));
    let mut buf: Vec<u8> = Vec::new();
    let fmt = csvio::fmt_f64;
    let (comment, header, rows): (&str, Vec<&str>, Vec<Vec<String>>) = match (kind, &manifest) {
        (PlotKind::LambdaPaths, AnyManifest::Run(m)) => {
            let ens = load_trajectories(manifest_path, m)?;
            let mut rows = Vec::new();
            for tr in &ens {
                for (t, l) in tr.lambda.iter().enumerate() {
                    rows.push(vec![tr.index.to_string(), t.to_string(), fmt(*l)]);
                }
            }
            ("seed: trajectory index; t: period; lambda: log-odds of B over A", vec!["seed", "t", "lambda"], rows)
        }
        (PlotKind::DriftProfile, AnyManifest::Run(m)) => {
            let cfg = m.config.scenario()?;
            let mut rows = Vec::new();
            for k in 0..=400 {
                let l = (-3.0 * std::f64::consts::LN_10 + 6.0 * std::f64::consts::LN_10 * k as f64 / 400.0).exp();
                let d = drift(&cfg.sm, cfg.p, cfg.eps, l)?;
                rows.push(vec![fmt(l), fmt(d.base), fmt(d.distortion), fmt(d.total)]);
            }
            (
                "l: project; base, distortion, total: one-period expected change of lambda",
                vec!["l", "base", "distortion", "total"],
                rows,
            )
        }
        (PlotKind::PolicyCurve, AnyManifest::Sweep(m)) => {
            let mut rows = Vec::new();
            for e in &m.payoffs {
                for (u, lam, l) in csvio::read_policy(&manifest_dir(manifest_path).join(&e.file))? {
                    rows.push(vec![e.index.to_string(), fmt(u), fmt(lam), fmt(l)]);
                }
            }
            (
                "payoff: index into the sweep manifest; u: weight on A; lambda: log-odds; l_star: optimal project",
                vec!["payoff", "u", "lambda", "l_star"],
                rows,
            )
        }
        (PlotKind::PolicyCurve, AnyManifest::Run(m)) => {
            let cfg = m.config.scenario()?;
            let d = &m.config.diagnostics;
            let (_, table) = empirical_policy_range(
                &cfg.ps,
                &cfg.sm,
                d.policy_lambda_min,
                d.policy_lambda_max,
                d.policy_lambda_step,
            )?;
            let rows = table
                .rows
                .iter()
                .filter_map(|r| r.point.map(|p| vec!["0".to_string(), fmt(r.u), fmt(r.lambda), fmt(p.l_star)]))
                .collect();
            (
                "payoff: scenario payoff; u: weight on A; lambda: log-odds; l_star: optimal project",
                vec!["payoff", "u", "lambda", "l_star"],
                rows,
            )
        }
        (PlotKind::AzumaTable, AnyManifest::Run(m)) => {
            let report: DiagnosticsReport = read_json(&manifest_dir(manifest_path).join(&m.files.diagnostics))?;
            let rows = report
                .azuma
                .map(|a| {
                    a.rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.t.to_string(),
                                r.n.to_string(),
                                fmt(r.frequency),
                                fmt(r.bound),
                                fmt(r.std_error),
                                r.pass.to_string(),
                            ]
                        })
                        .collect()
                })
                .unwrap_or_default();
            (
                "t: period; frequency: share with lambda_t >= lambda_0 - delta t/4; bound: Azuma bound; std_error: binomial SE at the bound",
                vec!["t", "n", "frequency", "bound", "std_error", "pass"],
                rows,
            )
        }
        (k, _) => {
            return Err(Error::Config(format!(
                "plot kind {} is not available for this manifest",
                k.as_str()
            )))
        }
    };
    buf.extend_from_slice(format!("# {comment}\n").as_bytes());
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
