//! Post-hoc analysis of simulated trajectories and threshold computations.

pub mod ks;

use serde::{Deserialize, Serialize};

use crate::dynamics::{branch_values, drift, sigma_sq, Trajectory};
use crate::error::{Error, Result};
use crate::optimizer::{policy_table_lambda, PolicyTable};
use crate::payoff::PayoffSpec;
use crate::success::SuccessModel;

pub use ks::ks_standard_normal;

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Split of `lambda_t - lambda_0` into a martingale `m` and a predictable part `a`.
/// All vectors have length `steps + 1` and start at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoobDecomposition {
    pub m: Vec<f64>,
    pub a: Vec<f64>,
    pub sigma_cum: Vec<f64>,
    /// `max_t |lambda_0 + M_t + A_t - lambda_t|`.
    pub reconstruction_error: f64,
}

/// Decompose a trajectory using its recorded drift and the two branch values.
///
/// Every recorded transition is checked against the closed-form increment for
/// the recorded project and outcome; a mismatch is an error. The martingale
/// part accumulates the recorded increments, so rounding in the stored path
/// does not show up as reconstruction error.
pub fn doob_decompose(traj: &Trajectory) -> Result<DoobDecomposition> {
    let n = traj.steps();
    let lens = [
        traj.drift_base.len(),
        traj.drift_distortion.len(),
        traj.sigma_sq.len(),
        traj.success.len(),
    ];
    if lens.iter().any(|&k| k != n) || traj.lambda.len() != n + 1 {
        return Err(Error::MissingDrift(format!(
            "trajectory {} has {} projects, {} beliefs and record lengths {:?}",
            traj.index,
            n,
            traj.lambda.len(),
            lens
        )));
    }
    let mut m = Vec::with_capacity(n + 1);
    let mut a = Vec::with_capacity(n + 1);
    let mut s = Vec::with_capacity(n + 1);
    m.push(0.0);
    a.push(0.0);
    s.push(0.0);
    let (mut ms, mut as_, mut ss) = (Neumaier::default(), Neumaier::default(), Neumaier::default());
    let lambda0 = traj.lambda[0];
    let mut err: f64 = 0.0;
    for t in 0..n {
        let (up, down) = branch_values(&traj.sm, traj.p, traj.l_star[t])?;
        let inc = if traj.success[t] { up } else { down };
        let observed = traj.lambda[t + 1] - traj.lambda[t];
        if (observed - inc).abs() > 1e-9 * (1.0 + traj.lambda[t].abs()) {
            return Err(Error::Domain(format!(
                "trajectory {} period {t}: increment {observed} is neither branch value ({up}, {down})",
                traj.index
            )));
        }
        let total = traj.drift_total(t);
        ms.add(observed - total);
        as_.add(total);
        ss.add(traj.sigma_sq[t]);
        m.push(ms.value());
        a.push(as_.value());
        s.push(ss.value());
        err = err.max((lambda0 + ms.value() + as_.value() - traj.lambda[t + 1]).abs());
    }
    Ok(DoobDecomposition {
        m,
        a,
        sigma_cum: s,
        reconstruction_error: err,
    })
}

/// Ensemble mean of `M_t` at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRow {
    pub t: usize,
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    /// `mean / std_error`.
    pub z: f64,
    /// `|z| <= 4`.
    pub pass: bool,
}

/// `M_t` at each requested `t` for trajectories that reached it.
pub fn martingale_rows(decomps: &[DoobDecomposition], times: &[usize]) -> Vec<MartingaleRow> {
    times
        .iter()
        .map(|&t| {
            let xs: Vec<f64> = decomps.iter().filter_map(|d| d.m.get(t).copied()).collect();
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n.max(1) as f64;
            let var = if n > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            let se = (var / n.max(1) as f64).sqrt();
            let z = if se > 0.0 { mean / se } else { 0.0 };
            MartingaleRow {
                t,
                n,
                mean,
                std_error: se,
                z,
                pass: n > 1 && z.abs() <= 4.0,
            }
        })
        .collect()
}

/// Union of closed intervals of projects, kept apart at `l = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRange {
    pub intervals: Vec<(f64, f64)>,
}

impl PolicyRange {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Domain("policy range is empty".into()));
        }
        for &(a, b) in &intervals {
            if !(a > 0.0 && b >= a && b.is_finite()) {
                return Err(Error::Domain(format!("bad policy interval [{a}, {b}]")));
            }
        }
        Ok(Self { intervals })
    }

    /// Hulls of the chosen projects below 1, at 1, and above 1.
    pub fn from_projects(ls: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut parts: [Option<(f64, f64)>; 3] = [None; 3];
        for l in ls {
            let k = if l < 1.0 {
                0
            } else if l == 1.0 {
                1
            } else {
                2
            };
            parts[k] = Some(match parts[k] {
                None => (l, l),
                Some((a, b)) => (a.min(l), b.max(l)),
            });
        }
        Self::new(parts.into_iter().flatten().collect())
    }

    pub fn from_table(table: &PolicyTable) -> Result<Self> {
        Self::from_projects(table.points().map(|p| p.l_star))
    }

    pub fn min(&self) -> f64 {
        self.intervals.iter().map(|p| p.0).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.intervals.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// About `n` points, geometric within each interval and shared in
    /// proportion to each interval's log-width. Endpoints are always included.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let widths: Vec<f64> = self.intervals.iter().map(|&(a, b)| (b / a).ln()).collect();
        let total: f64 = widths.iter().sum();
        let mut out = Vec::with_capacity(n + 2 * self.intervals.len());
        for (&(a, b), &w) in self.intervals.iter().zip(&widths) {
            if w == 0.0 {
                out.push(a);
                continue;
            }
            let k = ((n as f64 * w / total).round() as usize).max(2);
            let (la, lb) = (a.ln(), b.ln());
            for i in 0..k {
                let x = la + (lb - la) * i as f64 / (k - 1) as f64;
                out.push(if i == 0 { a } else if i == k - 1 { b } else { x.exp() });
            }
        }
        out
    }
}

/// Empirical policy range from the exact optimizer over a log-odds grid.
pub fn empirical_policy_range(
    ps: &PayoffSpec,
    sm: &SuccessModel,
    lambda_lo: f64,
    lambda_hi: f64,
    step: f64,
) -> Result<(PolicyRange, PolicyTable)> {
    let n = ((lambda_hi - lambda_lo) / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| lambda_lo + step * k as f64).collect();
    let table = policy_table_lambda(ps, sm, &grid);
    Ok((PolicyRange::from_table(&table)?, table))
}

/// `(min, max)` of the base drift over the range grid.
pub fn base_drift_extremes(sm: &SuccessModel, p: f64, range: &PolicyRange, n: usize) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for l in range.grid(n) {
        let b = drift(sm, p, 0.0, l)?.base;
        lo = lo.min(b);
        hi = hi.max(b);
    }
    Ok((lo, hi))
}

/// Largest one-period move of the log-odds for projects in the range.
pub fn increment_bound(sm: &SuccessModel, p: f64, range: &PolicyRange, n: usize) -> Result<f64> {
    let mut d: f64 = 0.0;
    for l in range.grid(n) {
        let (up, down) = branch_values(sm, p, l)?;
        d = d.max(up.abs()).max(down.abs());
    }
    Ok(d)
}

/// Largest one-period conditional variance for projects in the range.
pub fn variance_bound(sm: &SuccessModel, p: f64, eps: f64, range: &PolicyRange, n: usize) -> Result<f64> {
    let mut s: f64 = 0.0;
    for l in range.grid(n) {
        s = s.max(sigma_sq(sm, p, eps, l)?);
    }
    Ok(s)
}

/// Azuma comparison at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AzumaRow {
    pub t: usize,
    pub n: usize,
    /// Fraction of trajectories with `lambda_t >= lambda_0 - delta t / 4`.
    pub frequency: f64,
    pub bound: f64,
    /// Binomial standard error at the bound.
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AzumaReport {
    pub delta: f64,
    pub d: f64,
    pub applicable: bool,
    pub reason: Option<String>,
    pub rows: Vec<AzumaRow>,
}

/// `exp(-delta^2 t / (32 (d + delta/2)^2))`.
pub fn azuma_bound(delta: f64, d: f64, t: usize) -> f64 {
    (-(delta * delta) * t as f64 / (32.0 * (d + 0.5 * delta).powi(2))).exp()
}

/// Compare exceedance frequencies of `B_t = lambda_t + delta t / 2` with the
/// Azuma bound. The report is inapplicable unless every recorded drift is at
/// most `-delta`.
pub fn azuma_check(ensemble: &[Trajectory], delta: f64, d: f64, times: &[usize]) -> AzumaReport {
    let worst = ensemble
        .iter()
        .flat_map(|tr| (0..tr.steps()).map(move |t| tr.drift_total(t)))
        .fold(f64::NEG_INFINITY, f64::max);
    if !(delta > 0.0) || worst > -delta {
        return AzumaReport {
            delta,
            d,
            applicable: false,
            reason: Some(format!(
                "largest recorded drift {worst:.6e} exceeds -delta = {:.6e}",
                -delta
            )),
            rows: Vec::new(),
        };
    }
    let rows = times
        .iter()
        .map(|&t| {
            let reached: Vec<&Trajectory> = ensemble.iter().filter(|tr| tr.lambda.len() > t).collect();
            let n = reached.len();
            let hits = reached
                .iter()
                .filter(|tr| tr.lambda[t] >= tr.lambda[0] - delta * t as f64 / 4.0)
                .count();
            let frequency = hits as f64 / n.max(1) as f64;
            let bound = azuma_bound(delta, d, t);
            let std_error = (bound * (1.0 - bound) / n.max(1) as f64).sqrt();
            AzumaRow {
                t,
                n,
                frequency,
                bound,
                std_error,
                pass: frequency <= bound + 3.0 * std_error,
            }
        })
        .collect();
    AzumaReport {
        delta,
        d,
        applicable: true,
        reason: None,
        rows,
    }
}

/// Variance stopping time `tau_nu = inf{k : sum_{t<=k} sigma_t^2 >= nu}`.
pub fn variance_stopping_time(decomp: &DoobDecomposition, nu: f64) -> Option<usize> {
    // sigma_cum[k + 1] = sum_{t<=k} sigma_t^2
    (0..decomp.sigma_cum.len() - 1).find(|&k| decomp.sigma_cum[k + 1] >= nu)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub nu: f64,
    pub reached: usize,
    pub excluded: usize,
    pub degenerate: bool,
    /// KS distance of `M_tau / sqrt(nu)` to the standard normal.
    pub ks: Option<f64>,
    pub tau_min: Option<usize>,
    /// `nu / S - 1`.
    pub tau_lower_bound: f64,
    pub tau_bound_holds: bool,
}

/// CLT probe at variance stopping times; `s_bound` bounds every one-period variance.
pub fn clt_probe(decomps: &[DoobDecomposition], nu_list: &[f64], s_bound: f64) -> Vec<CltRow> {
    nu_list
        .iter()
        .map(|&nu| {
            let taus: Vec<Option<usize>> = if nu <= 0.0 {
                decomps.iter().map(|_| Some(0)).collect()
            } else {
                decomps.iter().map(|d| variance_stopping_time(d, nu)).collect()
            };
            let stats: Vec<f64> = decomps
                .iter()
                .zip(&taus)
                .filter_map(|(d, t)| t.map(|t| d.m[t] / nu.sqrt()))
                .collect();
            let reached = stats.len();
            let tau_min = taus.iter().flatten().copied().min();
            let tau_lower_bound = nu / s_bound - 1.0;
            let degenerate = nu <= 0.0;
            CltRow {
                nu,
                reached,
                excluded: decomps.len() - reached,
                degenerate,
                ks: if degenerate { None } else { ks_standard_normal(&stats) },
                tau_min,
                tau_lower_bound,
                tau_bound_holds: taus.iter().flatten().all(|&t| t as f64 >= tau_lower_bound),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Learned,
    Failed,
    Undecided,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Learned => "learned",
            Label::Failed => "failed",
            Label::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLabel {
    pub label: Label,
    pub lambda_final: f64,
    pub window_max: f64,
    /// Times the path crossed `learned_cut / 2` from above.
    pub dips: usize,
    /// Times the path crossed 0 from below after first dipping.
    pub recrossings: usize,
    pub learned_cut: f64,
    pub window: usize,
}

/// Finite-horizon stand-in for `lambda_t -> -inf`.
pub fn classify_convergence(traj: &Trajectory, learned_cut: f64, window: usize) -> ConvergenceLabel {
    let lam = &traj.lambda;
    let lambda_final = *lam.last().expect("trajectory holds its initial state");
    let start = lam.len().saturating_sub(window.max(1));
    let window_max = lam[start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = learned_cut / 2.0;
    let mut dips = 0;
    let mut recrossings = 0;
    let mut dipped = false;
    for w in lam.windows(2) {
        if w[0] >= half && w[1] < half {
            dips += 1;
        }
        dipped |= w[0] < half;
        if dipped && w[0] <= 0.0 && w[1] > 0.0 {
            recrossings += 1;
        }
    }
    let label = if lambda_final < learned_cut && window_max < half {
        Label::Learned
    } else if recrossings > 0 {
        Label::Failed
    } else {
        Label::Undecided
    };
    ConvergenceLabel {
        label,
        lambda_final,
        window_max,
        dips,
        recrossings,
        learned_cut,
        window,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonThreshold {
    pub eps_bar: f64,
    pub delta: f64,
    pub grid_points: usize,
    pub diagnostic: Option<String>,
}

/// Largest `eps` (to 1e-6) with total drift `<= -delta` everywhere on a
/// 2000-point grid over `range`.
pub fn epsilon_threshold(sm: &SuccessModel, p: f64, range: &PolicyRange, delta: f64) -> Result<EpsilonThreshold> {
    let grid = range.grid(2000);
    // drift is affine in eps: base + eps * slope
    let mut rows = Vec::with_capacity(grid.len());
    for &l in &grid {
        let d0 = drift(sm, p, 0.0, l)?;
        let d1 = drift(sm, p, 1.0, l)?;
        rows.push((l, d0.base, d1.distortion));
    }
    let ok = |eps: f64| rows.iter().all(|&(_, b, s)| b + eps * s <= -delta);
    if !ok(0.0) {
        let (l, b, _) = rows
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("grid is nonempty");
        return Ok(EpsilonThreshold {
            eps_bar: 0.0,
            delta,
            grid_points: grid.len(),
            diagnostic: Some(format!(
                "base drift {b:.6e} at l = {l:.6} is above -delta = {:.6e}; delta too large for this range",
                -delta
            )),
        });
    }
    let (sup_a, _) = sm.sups();
    let mut hi = 1.0 - sup_a;
    if ok(hi) {
        return Ok(EpsilonThreshold {
            eps_bar: hi,
            delta,
            grid_points: grid.len(),
            diagnostic: Some("condition holds up to the largest admissible eps".into()),
        });
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EpsilonThreshold {
        eps_bar: lo,
        delta,
        grid_points: grid.len(),
        diagnostic: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeThreshold {
    pub lambda_bar: f64,
    pub l_bar: f64,
    /// Smallest total drift at sampled beliefs below `lambda_bar`.
    pub min_drift_below: f64,
    /// Smallest drift of the capped process at sampled beliefs below `lambda_bar`.
    pub min_capped_drift_below: f64,
    pub sampled: usize,
    pub note: String,
}

/// Log-odds grid spacing and depth of the escape-threshold policy scan.
pub const ESCAPE_LAMBDA_STEP: f64 = 0.25;
pub const ESCAPE_LAMBDA_MIN: f64 = -40.0;

/// Find `l_bar > 1` beyond which the drift of the process whose upward moves are
/// capped at `ln l_bar` is at least `eps p ln l_bar - delta > 0`, then the
/// belief `lambda_bar` below which the optimal project stays above `l_bar`.
pub fn escape_threshold(
    ps: &PayoffSpec,
    sm: &SuccessModel,
    p: f64,
    eps: f64,
    delta: f64,
) -> Result<EscapeThreshold> {
    let n = 2000;
    let ls: Vec<f64> = (1..=n).map(|k| (15.0 * std::f64::consts::LN_10 * k as f64 / n as f64).exp()).collect();
    let mut q = Vec::with_capacity(n);
    let mut ln_r = Vec::with_capacity(n);
    for &l in &ls {
        let (pa, _) = sm.success_probs(l)?;
        q.push(p * (pa + eps));
        ln_r.push(branch_values(sm, p, l)?.1);
    }
    let capped = |lbar_ln: f64, j: usize| q[j] * lbar_ln + (1.0 - q[j]) * ln_r[j];
    let l_bar_idx = (0..n).find(|&i| {
        let a = eps * p * ls[i].ln() - delta;
        a > 0.0 && (i..n).all(|j| capped(ls[i].ln(), j) >= a)
    });
    let Some(i_bar) = l_bar_idx else {
        return Err(Error::Threshold(format!(
            "no l_bar up to 1e15 has eps p ln l_bar - delta > 0 with capped drift above it (eps = {eps}, delta = {delta})"
        )));
    };
    let l_bar = ls[i_bar];
    let a_bar = eps * p * l_bar.ln() - delta;

    let k = ((-ESCAPE_LAMBDA_MIN) / ESCAPE_LAMBDA_STEP).round() as usize;
    let grid: Vec<f64> = (0..=k).map(|j| -ESCAPE_LAMBDA_STEP * j as f64).collect();
    let table = policy_table_lambda(ps, sm, &grid);
    let mut ls_star = Vec::with_capacity(grid.len());
    for r in &table.rows {
        match &r.point {
            Some(pt) => ls_star.push(pt.l_star),
            None => {
                return Err(Error::NotDivergent(format!(
                    "optimizer failed at lambda = {}: {}",
                    r.lambda,
                    r.error.clone().unwrap_or_default()
                )))
            }
        }
    }
    let tail = &ls_star[ls_star.len() - 10..];
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    let deepest = *ls_star.last().expect("grid is nonempty");
    if !(deepest > l_bar && increasing) {
        return Err(Error::NotDivergent(format!(
            "l* = {deepest:.6} at lambda = {ESCAPE_LAMBDA_MIN} (l_bar = {l_bar:.6}, increasing toward the boundary: {increasing})"
        )));
    }
    // walk up from the deepest belief while l* stays above l_bar
    let mut j = grid.len() - 1;
    while j > 0 && ls_star[j - 1] > l_bar {
        j -= 1;
    }
    let lambda_bar = grid[j].min(0.0);
    let mut min_drift = f64::INFINITY;
    let mut min_capped = f64::INFINITY;
    for &l in &ls_star[j..] {
        let d = drift(sm, p, eps, l)?.total;
        let (pa, _) = sm.success_probs(l)?;
        let qq = p * (pa + eps);
        let c = qq * l_bar.ln() + (1.0 - qq) * branch_values(sm, p, l)?.1;
        min_drift = min_drift.min(d);
        min_capped = min_capped.min(c);
    }
    Ok(EscapeThreshold {
        lambda_bar,
        l_bar,
        min_drift_below: min_drift,
        min_capped_drift_below: min_capped,
        sampled: grid.len() - j,
        note: format!(
            "correction term bounded on a 2000-point grid over l in (1, 1e15]; eps p ln l_bar - delta = {a_bar:.6e}"
        ),
    })
}

/// Least-squares slope of the ensemble mean of `lambda_t` against `t`.
pub fn mean_path_slope(ensemble: &[Trajectory]) -> Option<f64> {
    let n = ensemble.iter().map(|t| t.lambda.len()).min()?;
    if n < 2 {
        return None;
    }
    let k = ensemble.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..n {
        let y = ensemble.iter().map(|tr| tr.lambda[t]).sum::<f64>() / k;
        let x = t as f64;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let m = n as f64;
    Some((m * sxy - sx * sy) / (m * sxx - sx * sx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_ensemble, ScenarioConfig, TrueState};

    fn toy() -> Trajectory {
        let sm = SuccessModel::default();
        let p = 0.5;
        let eps = 0.02;
        let ls = [2.0, 0.5, 3.0];
        let outcome = [true, false, false];
        let mut lambda = vec![0.1];
        let mut tr = Trajectory {
            index: 0,
            seed: 0,
            p,
            eps,
            sm,
            true_state: TrueState::A,
            lambda: Vec::new(),
            l_star: ls.to_vec(),
            success: outcome.to_vec(),
            drift_base: Vec::new(),
            drift_distortion: Vec::new(),
            sigma_sq: Vec::new(),
            terminated: None,
        };
        for (k, &l) in ls.iter().enumerate() {
            let d = drift(&sm, p, eps, l).unwrap();
            tr.drift_base.push(d.base);
            tr.drift_distortion.push(d.distortion);
            tr.sigma_sq.push(sigma_sq(&sm, p, eps, l).unwrap());
            let (up, down) = branch_values(&sm, p, l).unwrap();
            let last = *lambda.last().unwrap();
            lambda.push(last + if outcome[k] { up } else { down });
        }
        tr.lambda = lambda;
        tr
    }

    #[test]
    fn three_step_hand_enumeration() {
        let tr = toy();
        let d = doob_decompose(&tr).unwrap();
        // by hand: A_t sums drift totals, M_t sums (increment - drift)
        let pa = |l: f64| 8.0 * l * l / (1.0 + l).powi(5);
        let r = |l: f64| ((1.0 - 0.5 * l * pa(l)) / (1.0 - 0.5 * pa(l))).ln();
        let tot = |l: f64| {
            let q = 0.5 * (pa(l) + 0.02);
            q * l.ln() + (1.0 - q) * r(l)
        };
        let a = [0.0, tot(2.0), tot(2.0) + tot(0.5), tot(2.0) + tot(0.5) + tot(3.0)];
        let incs = [2f64.ln(), r(0.5), r(3.0)];
        let mut m = [0.0; 4];
        for k in 0..3 {
            m[k + 1] = m[k] + incs[k] - (a[k + 1] - a[k]);
        }
        for k in 0..4 {
            assert!((d.a[k] - a[k]).abs() < 1e-14);
            assert!((d.m[k] - m[k]).abs() < 1e-14);
        }
        assert!(d.reconstruction_error < 1e-14);
    }

    #[test]
    fn martingale_increment_variance_is_sigma_sq() {
        let sm = SuccessModel::default();
        let (p, eps, l) = (0.5, 0.02, 1.8);
        let (up, down) = branch_values(&sm, p, l).unwrap();
        let tot = drift(&sm, p, eps, l).unwrap().total;
        let q = p * (sm.success_probs(l).unwrap().0 + eps);
        let var = q * (up - tot).powi(2) + (1.0 - q) * (down - tot).powi(2);
        assert!((var - sigma_sq(&sm, p, eps, l).unwrap()).abs() < 1e-14);
        let mean = q * (up - tot) + (1.0 - q) * (down - tot);
        assert!(mean.abs() < 1e-15);
    }

    #[test]
    fn missing_drift_is_an_error() {
        let mut tr = toy();
        tr.drift_base.pop();
        assert!(matches!(doob_decompose(&tr), Err(Error::MissingDrift(_))));
        let mut tr = toy();
        tr.lambda[2] += 0.1;
        assert!(doob_decompose(&tr).is_err());
    }

    fn path(values: Vec<f64>) -> Trajectory {
        let n = values.len() - 1;
        Trajectory {
            index: 0,
            seed: 0,
            p: 0.5,
            eps: 0.0,
            sm: SuccessModel::default(),
            true_state: TrueState::A,
            lambda: values,
            l_star: vec![1.0; n],
            success: vec![false; n],
            drift_base: vec![0.0; n],
            drift_distortion: vec![0.0; n],
            sigma_sq: vec![0.0; n],
            terminated: None,
        }
    }

    #[test]
    fn classification_examples() {
        let down = path((0..=60).map(|k| -(k as f64)).collect());
        assert_eq!(classify_convergence(&down, -30.0, 6).label, Label::Learned);
        let mut v: Vec<f64> = (0..=20).map(|k| -(k as f64)).collect();
        v.extend((0..=25).map(|k| -20.0 + k as f64));
        assert_eq!(classify_convergence(&path(v), -30.0, 5).label, Label::Failed);
        let flat = path((0..100).map(|k| 0.1 * ((k % 3) as f64 - 1.0)).collect());
        assert_eq!(classify_convergence(&flat, -30.0, 10).label, Label::Undecided);
    }

    #[test]
    fn policy_range_splits_at_one() {
        let r = PolicyRange::from_projects([0.5, 0.7, 1.6, 2.2, 0.6]).unwrap();
        assert_eq!(r.intervals, vec![(0.5, 0.7), (1.6, 2.2)]);
        let g = r.grid(100);
        assert!(g.iter().all(|&l| (0.5..=0.7).contains(&l) || (1.6..=2.2).contains(&l)));
        assert!(g.len() >= 98 && g.len() <= 102);
        assert!(PolicyRange::from_projects(std::iter::empty()).is_err());
    }

    #[test]
    fn epsilon_threshold_properties() {
        let sm = SuccessModel::default();
        let r = PolicyRange::new(vec![(0.4, 0.7), (1.5, 2.4)]).unwrap();
        let (_, sup) = base_drift_extremes(&sm, 0.5, &r, 2000).unwrap();
        let mut prev = f64::INFINITY;
        for f in [0.5, 0.25, 0.1, 0.01] {
            let e = epsilon_threshold(&sm, 0.5, &r, f * sup.abs()).unwrap();
            assert!(e.eps_bar > 0.0);
            if prev.is_finite() {
                assert!(e.eps_bar >= prev);
            }
            prev = e.eps_bar;
        }
        let at_one = PolicyRange::new(vec![(1.0, 1.0)]).unwrap();
        let e = epsilon_threshold(&sm, 0.5, &at_one, 1e-3).unwrap();
        assert_eq!(e.eps_bar, 0.0);
        assert!(e.diagnostic.is_some());
    }

    #[test]
    fn escape_threshold_cases() {
        let sm = SuccessModel::default();
        let fast = PayoffSpec::fast_reciprocal(1.0, 2.0, sm).unwrap();
        let e = escape_threshold(&fast, &sm, 0.5, 0.05, 0.05 * 0.5 / 4.0).unwrap();
        assert!(e.lambda_bar < 0.0 && e.l_bar > 1.0);
        assert!(e.min_drift_below > 0.0);
        assert!(matches!(
            escape_threshold(&fast, &sm, 0.5, 0.0, 0.001),
            Err(Error::Threshold(_))
        ));
        let bounded = PayoffSpec::bounded_exp(1.0, 8.0).unwrap();
        assert!(matches!(
            escape_threshold(&bounded, &sm, 0.5, 0.05, 0.00625),
            Err(Error::NotDivergent(_))
        ));
    }

    #[test]
    fn azuma_inapplicable_when_delta_too_large() {
        let cfg = ScenarioConfig {
            p: 0.5,
            eps: 0.01,
            sm: SuccessModel::default(),
            ps: PayoffSpec::bounded_exp(1.0, 8.0).unwrap(),
            lambda0: 0.0,
            horizon: 50,
            seed: 3,
            true_state: TrueState::A,
        };
        let ens = run_ensemble(&cfg, 0..4, 1).unwrap();
        let r = azuma_check(&ens, 1.0, 1.0, &[1, 10]);
        assert!(!r.applicable);
        let r = azuma_check(&ens, 1e-3, 1.0, &[1]);
        assert!(r.applicable);
        assert!(r.rows[0].bound > 0.99 && r.rows[0].pass);
    }

    #[test]
    fn clt_probe_degenerate_at_zero() {
        let d = doob_decompose(&toy()).unwrap();
        let rows = clt_probe(&[d], &[0.0], 1.0);
        assert!(rows[0].degenerate);
        assert_eq!(rows[0].tau_min, Some(0));
        assert!(rows[0].ks.is_none());
    }
}
