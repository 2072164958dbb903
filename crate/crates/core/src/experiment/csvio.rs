//! CSV layouts for trajectories, ensemble aggregates and policy tables.
//!
//! Floats are written with 17 significant digits so they read back exactly.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::dynamics::{u_of, Termination, Trajectory, TrueState};
use crate::error::{Error, Result};
use crate::optimizer::PolicyTable;
use crate::success::SuccessModel;

pub const TRAJECTORY_HEADER: [&str; 8] = [
    "t",
    "lambda",
    "u",
    "l_star",
    "outcome",
    "drift_base",
    "drift_distortion",
    "sigma_sq",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render a trajectory: one row per period plus a final row holding only the
/// terminal belief.
pub fn write_trajectory<W: Write>(w: W, tr: &Trajectory) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for t in 0..tr.steps() {
        out.write_record([
            t.to_string(),
            fmt_f64(tr.lambda[t]),
            fmt_f64(u_of(tr.lambda[t])),
            fmt_f64(tr.l_star[t]),
            if tr.success[t] { "success" } else { "no-success" }.to_string(),
            fmt_f64(tr.drift_base[t]),
            fmt_f64(tr.drift_distortion[t]),
            fmt_f64(tr.sigma_sq[t]),
        ])?;
    }
    let n = tr.steps();
    out.write_record([
        n.to_string(),
        fmt_f64(tr.lambda[n]),
        fmt_f64(u_of(tr.lambda[n])),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
    ])?;
    out.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn trajectory_bytes(tr: &Trajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trajectory(&mut buf, tr).expect("writing to memory cannot fail");
    buf
}

/// Hex SHA-256 of the rendered trajectory CSV.
pub fn trajectory_digest(tr: &Trajectory) -> String {
    let d = Sha256::digest(trajectory_bytes(tr));
    d.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn trajectory_file_name(index: u64) -> String {
    format!("seed_{index:06}.csv")
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, path: &Path) -> Result<&'a str> {
    rec.get(i)
        .ok_or_else(|| Error::MissingDrift(format!("{}: short row {:?}", path.display(), rec)))
}

fn num(s: &str, path: &Path) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Domain(format!("{}: bad number {s:?}", path.display())))
}

/// Parameters that a trajectory file does not carry itself.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryContext {
    pub index: u64,
    pub seed: u64,
    pub p: f64,
    pub eps: f64,
    pub sm: SuccessModel,
    pub true_state: TrueState,
    pub horizon: u64,
}

/// Read a trajectory file written by [`write_trajectory`].
pub fn read_trajectory(path: &Path, ctx: &TrajectoryContext) -> Result<Trajectory> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Domain(format!("{}: {other:?}", path.display())),
    })?;
    let header = rd.headers()?.clone();
    if header.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(Error::Domain(format!("{}: unexpected header {:?}", path.display(), header)));
    }
    let mut tr = Trajectory {
        index: ctx.index,
        seed: ctx.seed,
        p: ctx.p,
        eps: ctx.eps,
        sm: ctx.sm,
        true_state: ctx.true_state,
        lambda: Vec::new(),
        l_star: Vec::new(),
        success: Vec::new(),
        drift_base: Vec::new(),
        drift_distortion: Vec::new(),
        sigma_sq: Vec::new(),
        terminated: None,
    };
    let mut done = false;
    for rec in rd.records() {
        let rec = rec?;
        if done {
            return Err(Error::Domain(format!("{}: rows after the terminal row", path.display())));
        }
        tr.lambda.push(num(field(&rec, 1, path)?, path)?);
        let l = field(&rec, 3, path)?;
        if l.is_empty() {
            done = true;
            continue;
        }
        tr.l_star.push(num(l, path)?);
        tr.success.push(match field(&rec, 4, path)? {
            "success" => true,
            "no-success" => false,
            o => return Err(Error::Domain(format!("{}: bad outcome {o:?}", path.display()))),
        });
        tr.drift_base.push(num(field(&rec, 5, path)?, path)?);
        tr.drift_distortion.push(num(field(&rec, 6, path)?, path)?);
        tr.sigma_sq.push(num(field(&rec, 7, path)?, path)?);
    }
    if !done {
        return Err(Error::MissingDrift(format!("{}: no terminal row", path.display())));
    }
    if (tr.steps() as u64) < ctx.horizon {
        tr.terminated = Some(Termination {
            period: tr.steps() as u64,
            reason: "stopped before the horizon".into(),
        });
    }
    Ok(tr)
}

/// Per-period ensemble statistics.
pub fn write_aggregate<W: Write>(w: W, ensemble: &[Trajectory], learned_cut: f64) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "t",
        "n",
        "mean_lambda",
        "sd_lambda",
        "mean_drift_total",
        "mean_sigma_sq",
        "frac_below_cut",
    ])?;
    let horizon = ensemble.iter().map(|t| t.lambda.len()).max().unwrap_or(0);
    for t in 0..horizon {
        let alive: Vec<&Trajectory> = ensemble.iter().filter(|tr| tr.lambda.len() > t).collect();
        let n = alive.len() as f64;
        let mean = alive.iter().map(|tr| tr.lambda[t]).sum::<f64>() / n;
        let var = alive.iter().map(|tr| (tr.lambda[t] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let stepping: Vec<&&Trajectory> = alive.iter().filter(|tr| tr.steps() > t).collect();
        let (md, ms) = if stepping.is_empty() {
            (String::new(), String::new())
        } else {
            let k = stepping.len() as f64;
            (
                fmt_f64(stepping.iter().map(|tr| tr.drift_total(t)).sum::<f64>() / k),
                fmt_f64(stepping.iter().map(|tr| tr.sigma_sq[t]).sum::<f64>() / k),
            )
        };
        let below = alive.iter().filter(|tr| tr.lambda[t] < learned_cut).count() as f64 / n;
        out.write_record([
            t.to_string(),
            alive.len().to_string(),
            fmt_f64(mean),
            fmt_f64(var.sqrt()),
            md,
            ms,
            fmt_f64(below),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub const POLICY_HEADER: [&str; 5] = ["u", "lambda", "l_star", "ep_star", "foc_residual"];

/// Policy table rows; failed rows keep their belief and leave the rest empty.
pub fn write_policy<W: Write>(w: W, table: &PolicyTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(POLICY_HEADER)?;
    for r in &table.rows {
        let (l, ep, foc) = match &r.point {
            Some(p) => (fmt_f64(p.l_star), fmt_f64(p.ep_star), fmt_f64(p.foc)),
            None => (String::new(), String::new(), String::new()),
        };
        out.write_record([fmt_f64(r.u), fmt_f64(r.lambda), l, ep, foc])?;
    }
    out.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// `(u, lambda, l_star)` rows of a policy CSV, skipping failed rows.
pub fn read_policy(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Domain(format!("{}: {other:?}", path.display())),
    })?;
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let l = field(&rec, 2, path)?;
        if l.is_empty() {
            continue;
        }
        rows.push((
            num(field(&rec, 0, path)?, path)?,
            num(field(&rec, 1, path)?, path)?,
            num(l, path)?,
        ));
    }
    Ok(rows)
}
