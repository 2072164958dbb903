//! The distorted learning process.
//!
//! Each period a researcher picks `l*` for the public belief, the project
//! succeeds with probability `p (p_A(l*) + eps)`, and observers update as if
//! there were no p-hacking. The log-odds move by `ln l*` after a success and
//! by `ln[(1 - p p_B)/(1 - p p_A)]` otherwise.

pub mod rng;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{failure_log_shift, BeliefState};
use crate::optimizer::PolicySolver;
use crate::payoff::PayoffSpec;
use crate::success::{SuccessModel, Violation};

pub use rng::{uniform_at, StreamRng};

/// State of the world generating outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TrueState {
    #[default]
    A,
    B,
}

/// Everything needed to simulate one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub p: f64,
    pub eps: f64,
    pub sm: SuccessModel,
    pub ps: PayoffSpec,
    pub lambda0: f64,
    pub horizon: u64,
    pub seed: u64,
    #[serde(default)]
    pub true_state: TrueState,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = self.sm.validate(self.p, self.eps).violations;
        if self.true_state == TrueState::B {
            let (_, sup_b) = self.sm.sups();
            if sup_b + self.eps > 1.0 {
                v.push(Violation::ProbabilityExceedsOne {
                    curve: 'B',
                    sup: sup_b,
                    eps: self.eps,
                });
            }
        }
        if !v.is_empty() {
            return Err(Error::Validation(v));
        }
        self.ps.validate()?;
        BeliefState::from_log_ratio(self.lambda0)?;
        Ok(())
    }
}

/// Conditional expected change of the log-odds, split into the no-hacking
/// part and the part proportional to `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub base: f64,
    pub distortion: f64,
    pub total: f64,
}

/// `(ln l, ln[(1 - p p_B)/(1 - p p_A)], p_A, p_B)`.
fn branches(sm: &SuccessModel, p: f64, l: f64) -> Result<(f64, f64, f64, f64)> {
    let (pa, pb) = sm.success_probs(l)?;
    let ln_r = failure_log_shift(l, p, sm)?;
    Ok((l.ln(), ln_r, pa, pb))
}

/// Log-odds increments after a success and after a failure of project `l`.
pub fn branch_values(sm: &SuccessModel, p: f64, l: f64) -> Result<(f64, f64)> {
    let (s, f, _, _) = branches(sm, p, l)?;
    Ok((s, f))
}

/// Drift under state A.
pub fn drift(sm: &SuccessModel, p: f64, eps: f64, l: f64) -> Result<Drift> {
    drift_in(TrueState::A, sm, p, eps, l)
}

pub fn drift_in(state: TrueState, sm: &SuccessModel, p: f64, eps: f64, l: f64) -> Result<Drift> {
    let (ln_l, ln_r, pa, pb) = branches(sm, p, l)?;
    let ps = p * match state {
        TrueState::A => pa,
        TrueState::B => pb,
    };
    let base = ps * ln_l + (1.0 - ps) * ln_r;
    let distortion = eps * p * (ln_l - ln_r);
    Ok(Drift {
        base,
        distortion,
        total: base + distortion,
    })
}

/// Drift under state A as one expectation over the two outcomes.
pub fn drift_direct(sm: &SuccessModel, p: f64, eps: f64, l: f64) -> Result<f64> {
    let (ln_l, ln_r, pa, _) = branches(sm, p, l)?;
    let q = p * (pa + eps);
    Ok(q * ln_l + (1.0 - q) * ln_r)
}

/// Conditional variance of the log-odds increment under state A.
pub fn sigma_sq(sm: &SuccessModel, p: f64, eps: f64, l: f64) -> Result<f64> {
    sigma_sq_in(TrueState::A, sm, p, eps, l)
}

pub fn sigma_sq_in(state: TrueState, sm: &SuccessModel, p: f64, eps: f64, l: f64) -> Result<f64> {
    let (ln_l, ln_r, pa, pb) = branches(sm, p, l)?;
    let q = p * (eps
        + match state {
            TrueState::A => pa,
            TrueState::B => pb,
        });
    let gap = ln_l - ln_r;
    Ok(q * (1.0 - q) * gap * gap)
}

/// One period of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub lambda: f64,
    pub u: f64,
    pub l_star: f64,
    pub success: bool,
    pub drift_base: f64,
    pub drift_distortion: f64,
    pub sigma_sq: f64,
}

/// Why a trajectory stopped before its horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub period: u64,
    pub reason: String,
}

/// A simulated path, stored column-wise.
///
/// `lambda` has one more entry than the per-step columns: `lambda[t]` is the
/// belief at the start of period `t` and `lambda[steps]` the final belief.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub index: u64,
    pub seed: u64,
    pub p: f64,
    pub eps: f64,
    pub sm: SuccessModel,
    pub true_state: TrueState,
    pub lambda: Vec<f64>,
    pub l_star: Vec<f64>,
    pub success: Vec<bool>,
    pub drift_base: Vec<f64>,
    pub drift_distortion: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub terminated: Option<Termination>,
}

/// Terminal summary of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: u64,
    pub steps: u64,
    pub lambda_final: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub successes: u64,
    pub mean_drift: f64,
    pub terminated: Option<Termination>,
    /// Filled in by convergence classification.
    pub label: Option<String>,
}

#[inline]
pub(crate) fn u_of(lambda: f64) -> f64 {
    if lambda >= 0.0 {
        let e = (-lambda).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + lambda.exp())
    }
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.l_star.len()
    }

    pub fn lambda_final(&self) -> f64 {
        *self.lambda.last().expect("trajectory holds its initial state")
    }

    pub fn drift_total(&self, t: usize) -> f64 {
        self.drift_base[t] + self.drift_distortion[t]
    }

    pub fn record(&self, t: usize) -> StepRecord {
        StepRecord {
            t: t as u64,
            lambda: self.lambda[t],
            u: u_of(self.lambda[t]),
            l_star: self.l_star[t],
            success: self.success[t],
            drift_base: self.drift_base[t],
            drift_distortion: self.drift_distortion[t],
            sigma_sq: self.sigma_sq[t],
        }
    }

    pub fn summary(&self) -> TrajectorySummary {
        let n = self.steps();
        let mean_drift = if n == 0 {
            0.0
        } else {
            (0..n).map(|t| self.drift_total(t)).sum::<f64>() / n as f64
        };
        TrajectorySummary {
            index: self.index,
            steps: n as u64,
            lambda_final: self.lambda_final(),
            lambda_min: self.lambda.iter().copied().fold(f64::INFINITY, f64::min),
            lambda_max: self.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            successes: self.success.iter().filter(|&&s| s).count() as u64,
            mean_drift,
            terminated: self.terminated.clone(),
            label: None,
        }
    }
}

/// One period: choose `l*` for belief `b`, draw the outcome from `uniform`,
/// and apply the undistorted update.
pub fn step(
    cfg: &ScenarioConfig,
    solver: &PolicySolver,
    b: &BeliefState,
    uniform: f64,
) -> Result<(BeliefState, StepRecord, f64)> {
    let (l, _) = solver.solve(b)?;
    let (ln_l, ln_r, pa, pb) = branches(&cfg.sm, cfg.p, l)?;
    let p_true = match cfg.true_state {
        TrueState::A => pa,
        TrueState::B => pb,
    };
    let success = uniform < cfg.p * (p_true + cfg.eps);
    let d = drift_in(cfg.true_state, &cfg.sm, cfg.p, cfg.eps, l)?;
    let s2 = sigma_sq_in(cfg.true_state, &cfg.sm, cfg.p, cfg.eps, l)?;
    let inc = if success { ln_l } else { ln_r };
    let record = StepRecord {
        t: 0,
        lambda: b.lambda(),
        u: b.u(),
        l_star: l,
        success,
        drift_base: d.base,
        drift_distortion: d.distortion,
        sigma_sq: s2,
    };
    let next = b.lambda() + inc;
    let nb = BeliefState::from_log_ratio(next)?;
    Ok((nb, record, next))
}

/// Simulate trajectory 0 of the configured seed.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let solver = PolicySolver::new(cfg.ps, cfg.sm);
    Ok(simulate_with(cfg, &solver, 0))
}

/// Simulate trajectory `index` with a shared solver. Saturation or a solver
/// failure ends the path early and is recorded in `terminated`.
pub fn simulate_with(cfg: &ScenarioConfig, solver: &PolicySolver, index: u64) -> Trajectory {
    let n = cfg.horizon as usize;
    let mut tr = Trajectory {
        index,
        seed: cfg.seed,
        p: cfg.p,
        eps: cfg.eps,
        sm: cfg.sm,
        true_state: cfg.true_state,
        lambda: Vec::with_capacity(n + 1),
        l_star: Vec::with_capacity(n),
        success: Vec::with_capacity(n),
        drift_base: Vec::with_capacity(n),
        drift_distortion: Vec::with_capacity(n),
        sigma_sq: Vec::with_capacity(n),
        terminated: None,
    };
    tr.lambda.push(cfg.lambda0);
    let mut b = match BeliefState::from_log_ratio(cfg.lambda0) {
        Ok(b) => b,
        Err(e) => {
            tr.terminated = Some(Termination {
                period: 0,
                reason: e.to_string(),
            });
            return tr;
        }
    };
    let mut rng = StreamRng::new(cfg.seed, index);
    for t in 0..n {
        let uniform = rng.uniform();
        match step(cfg, solver, &b, uniform) {
            Ok((nb, rec, next)) => {
                tr.l_star.push(rec.l_star);
                tr.success.push(rec.success);
                tr.drift_base.push(rec.drift_base);
                tr.drift_distortion.push(rec.drift_distortion);
                tr.sigma_sq.push(rec.sigma_sq);
                tr.lambda.push(next);
                b = nb;
            }
            Err(e) => {
                tr.terminated = Some(Termination {
                    period: t as u64,
                    reason: e.to_string(),
                });
                break;
            }
        }
    }
    tr
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Simulate trajectories `indices` on `workers` threads and map each through
/// `f` as soon as it finishes. Results come back in index order.
pub fn map_ensemble<R, F>(
    cfg: &ScenarioConfig,
    indices: std::ops::Range<u64>,
    workers: usize,
    f: F,
) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(Trajectory) -> R + Sync,
{
    cfg.validate()?;
    let solver = PolicySolver::new(cfg.ps, cfg.sm);
    let pool = pool(workers)?;
    Ok(pool.install(|| {
        indices
            .into_par_iter()
            .map(|i| f(simulate_with(cfg, &solver, i)))
            .collect()
    }))
}

/// Simulate and keep trajectories `indices`.
pub fn run_ensemble(
    cfg: &ScenarioConfig,
    indices: std::ops::Range<u64>,
    workers: usize,
) -> Result<Vec<Trajectory>> {
    map_ensemble(cfg, indices, workers, |t| t)
}
