//! The researcher's per-period problem `max_l P(I(u,l)) [u p_A(l) + (1-u) p_B(l)]`.
//!
//! Search happens in `x = ln l`. A compact bracket `[l_lo, l_hi]` outside of which
//! no project can be optimal is built first; the bracket is scanned on a
//! geometric grid and the best local maxima are refined by golden section.

mod cache;
pub mod golden;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::PolicySolver;

use crate::error::{Error, Result};
use crate::model::{info_uw, BeliefState};
use crate::payoff::PayoffSpec;
use crate::success::SuccessModel;

/// Grid size of the bracket scan.
pub const SCAN_POINTS: usize = 2048;
/// Golden-section tolerance in `ln l`.
pub const REFINE_TOL: f64 = 1e-8;
/// Optima whose `ln EP` differ by at most this are ties; the smaller `l` wins.
pub const TIE_TOL: f64 = 1e-12;

const BRACKET_TOL: f64 = 1e-10;
const X_START: f64 = 69.077_552_789_821_37; // ln 1e30
const X_LIMIT: f64 = 700.0;

/// Compact set `[l_lo, l_hi]` containing every optimal project.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleBracket {
    pub l_lo: f64,
    pub l_hi: f64,
    /// Upper anchor, `2 max(l_B, 1)`.
    pub l1: f64,
    /// Lower anchor, `min(1, l_A) / 2`.
    pub l2: f64,
}

/// Optimal project at one belief.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyPoint {
    pub u: f64,
    pub lambda: f64,
    pub l_star: f64,
    pub ep_star: f64,
    /// FOC expression at `l_star`.
    pub foc: f64,
    /// `|foc| l_star / ep_star`, the residual relative to the local derivative scale.
    pub foc_scaled: f64,
    /// Gap in `ln EP` to the runner-up local maximum, if there is one.
    pub tie_gap: Option<f64>,
    pub bracket: FeasibleBracket,
}

pub(crate) fn anchors(sm: &SuccessModel) -> (f64, f64) {
    let (l_a, l_b) = sm.peaks();
    (2.0 * l_b.max(1.0), 0.5 * l_a.min(1.0))
}

/// Bisection for the sign change of a monotone `g` on `[a, b]` in `x`.
fn bisect<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    while (b - a).abs() > BRACKET_TOL {
        let mid = 0.5 * (a + b);
        let gm = g(mid);
        if (gm > 0.0) == (ga > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Construct the feasible bracket at belief `u`.
pub fn feasible_bracket(ps: &PayoffSpec, sm: &SuccessModel, u: f64) -> Result<FeasibleBracket> {
    feasible_bracket_belief(ps, sm, &BeliefState::from_prob(u)?)
}

pub fn feasible_bracket_belief(
    ps: &PayoffSpec,
    sm: &SuccessModel,
    b: &BeliefState,
) -> Result<FeasibleBracket> {
    let (l1, l2) = anchors(sm);
    let (x1, x2) = (l1.ln(), l2.ln());
    let ln_pm = ps.ln_eval(b.information_sup().m);
    if !ln_pm.is_finite() {
        return Err(Error::Bracket(format!("P(m(u)) not finite at lambda = {}", b.lambda())));
    }

    let target_hi = ps.ln_expected_payoff_x(sm, b, x1);
    let g_hi = |x: f64| ln_pm + sm.ln_pb_x(x) - target_hi;
    let mut top = X_START.max(x1 + 1.0);
    while g_hi(top) >= 0.0 {
        if top >= X_LIMIT {
            return Err(Error::Bracket(format!(
                "upper root not found below l = e^{X_LIMIT} at lambda = {}",
                b.lambda()
            )));
        }
        top = (2.0 * top).min(X_LIMIT);
    }
    let x_hi = bisect(g_hi, x1, top);

    let target_lo = ps.ln_expected_payoff_x(sm, b, x2);
    let g_lo = |x: f64| ln_pm + sm.ln_pa_x(x) - target_lo;
    let mut bottom = (-X_START).min(x2 - 1.0);
    while g_lo(bottom) >= 0.0 {
        if bottom <= -X_LIMIT {
            return Err(Error::Bracket(format!(
                "lower root not found above l = e^-{X_LIMIT} at lambda = {}",
                b.lambda()
            )));
        }
        bottom = (2.0 * bottom).max(-X_LIMIT);
    }
    let x_lo = bisect(g_lo, bottom, x2);

    Ok(FeasibleBracket {
        l_lo: x_lo.exp(),
        l_hi: x_hi.exp(),
        l1,
        l2,
    })
}

/// Refined local maxima of `ln EP` over the bracket, best first.
pub(crate) struct Scan {
    pub bracket: FeasibleBracket,
    /// `(x, ln EP)` pairs.
    pub maxima: Vec<(f64, f64)>,
    /// Grid spacing in `x`.
    pub dx: f64,
}

pub(crate) fn scan(
    ps: &PayoffSpec,
    sm: &SuccessModel,
    b: &BeliefState,
    margin: f64,
    max_candidates: usize,
) -> Result<Scan> {
    let bracket = feasible_bracket_belief(ps, sm, b)?;
    let (x_lo, x_hi) = (bracket.l_lo.ln(), bracket.l_hi.ln());
    let n = SCAN_POINTS;
    let dx = (x_hi - x_lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| x_lo + dx * i as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| ps.ln_expected_payoff_x(sm, b, x)).collect();
    let best = fs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(Error::Domain(format!(
            "expected payoff not finite on the bracket at lambda = {}",
            b.lambda()
        )));
    }
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            (i == 0 || fs[i] >= fs[i - 1])
                && (i == n - 1 || fs[i] >= fs[i + 1])
                && fs[i] >= best - margin
        })
        .collect();
    peaks.sort_by(|&a, &b| fs[b].total_cmp(&fs[a]).then(a.cmp(&b)));
    peaks.truncate(max_candidates);

    let mut maxima: Vec<(f64, f64)> = Vec::with_capacity(peaks.len());
    for i in peaks {
        let a = xs[i.saturating_sub(1)];
        let z = xs[(i + 1).min(n - 1)];
        let (x, f) = golden::maximize(|x| ps.ln_expected_payoff_x(sm, b, x), a, z, REFINE_TOL);
        let (x, f) = if fs[i] > f { (xs[i], fs[i]) } else { (x, f) };
        if !maxima.iter().any(|&(y, _)| (y - x).abs() <= 10.0 * REFINE_TOL) {
            maxima.push((x, f));
        }
    }
    sort_best_first(&mut maxima);
    Ok(Scan {
        bracket,
        maxima,
        dx,
    })
}

/// Order `(x, f)` pairs best first, ties (within [`TIE_TOL`]) by smaller `x`.
pub(crate) fn sort_best_first(v: &mut [(f64, f64)]) {
    v.sort_by(|a, b| b.1.total_cmp(&a.1));
    if let Some(&(_, top)) = v.first() {
        let tied = v.iter().take_while(|p| top - p.1 <= TIE_TOL).count();
        v[..tied].sort_by(|a, b| a.0.total_cmp(&b.0));
    }
}

/// Optimal project at weight `u` on state A.
pub fn optimal_project(ps: &PayoffSpec, sm: &SuccessModel, u: f64) -> Result<PolicyPoint> {
    optimal_project_belief(ps, sm, &BeliefState::from_prob(u)?)
}

pub fn optimal_project_belief(
    ps: &PayoffSpec,
    sm: &SuccessModel,
    b: &BeliefState,
) -> Result<PolicyPoint> {
    let sc = scan(ps, sm, b, 1e-3, 4)?;
    let (x, f) = sc.maxima[0];
    let tie_gap = sc.maxima.get(1).map(|&(_, g)| f - g);
    let l_star = x.exp();
    let ep_star = f.exp();
    let foc = foc_residual_belief(ps, sm, b, l_star)?;
    Ok(PolicyPoint {
        u: b.u(),
        lambda: b.lambda(),
        l_star,
        ep_star,
        foc,
        foc_scaled: foc.abs() * l_star / ep_star,
        tie_gap,
        bracket: sc.bracket,
    })
}

/// First-order condition `dEP/dl` with `P'` and `p_A'` from central differences.
pub fn foc_residual(ps: &PayoffSpec, sm: &SuccessModel, u: f64, l: f64) -> Result<f64> {
    foc_residual_belief(ps, sm, &BeliefState::from_prob(u)?, l)
}

pub fn foc_residual_belief(
    ps: &PayoffSpec,
    sm: &SuccessModel,
    b: &BeliefState,
    l: f64,
) -> Result<f64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Domain(format!("project l must be positive and finite, got {l}")));
    }
    let (u, w) = (b.u(), b.one_minus_u());
    let s = u + w * l;
    let ln_l = l.ln();
    let i = info_uw(u, w, l, ln_l);
    let hi = 1e-6 * i.abs().max(1.0);
    let dp = (ps.eval_unchecked(i + hi) - ps.eval_unchecked(i - hi)) / (2.0 * hi);
    let p = ps.eval_unchecked(i);
    let hl = (1e-6 * l.max(1.0)).min(0.5 * l);
    let pa = sm.pa_unchecked(l);
    let dpa = (sm.pa_unchecked(l + hl) - sm.pa_unchecked(l - hl)) / (2.0 * hl);
    Ok(dp * (u * w * ln_l / s) * pa + p * (s * dpa + w * pa))
}

/// One row of a policy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub u: f64,
    pub lambda: f64,
    pub point: Option<PolicyPoint>,
    pub error: Option<String>,
}

/// `l*` over a belief grid, with per-row failures kept in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub rows: Vec<PolicyRow>,
    pub l_min: Option<f64>,
    pub l_max: Option<f64>,
    pub failures: usize,
}

impl PolicyTable {
    fn from_rows(rows: Vec<PolicyRow>) -> Self {
        let ls = rows.iter().filter_map(|r| r.point.map(|p| p.l_star));
        let l_min = ls.clone().reduce(f64::min);
        let l_max = ls.reduce(f64::max);
        let failures = rows.iter().filter(|r| r.error.is_some()).count();
        Self {
            rows,
            l_min,
            l_max,
            failures,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = &PolicyPoint> {
        self.rows.iter().filter_map(|r| r.point.as_ref())
    }
}

fn row(ps: &PayoffSpec, sm: &SuccessModel, b: Result<BeliefState>, u: f64, lambda: f64) -> PolicyRow {
    match b.and_then(|b| optimal_project_belief(ps, sm, &b)) {
        Ok(p) => PolicyRow {
            u: p.u,
            lambda: p.lambda,
            point: Some(p),
            error: None,
        },
        Err(e) => PolicyRow {
            u,
            lambda,
            point: None,
            error: Some(e.to_string()),
        },
    }
}

/// Policy table over a grid of weights `u`. Rows are computed in parallel on the
/// current rayon pool and returned in grid order.
pub fn policy_table(ps: &PayoffSpec, sm: &SuccessModel, u_grid: &[f64]) -> PolicyTable {
    let rows = u_grid
        .par_iter()
        .map(|&u| {
            let lambda = ((1.0 - u) / u).ln();
            row(ps, sm, BeliefState::from_prob(u), u, lambda)
        })
        .collect();
    PolicyTable::from_rows(rows)
}

/// Policy table over a grid of log-odds, for beliefs too close to 0 or 1 to
/// write as `u`.
pub fn policy_table_lambda(ps: &PayoffSpec, sm: &SuccessModel, lambda_grid: &[f64]) -> PolicyTable {
    let rows = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let u = 1.0 / (1.0 + lambda.exp());
            row(ps, sm, BeliefState::from_log_ratio(lambda), u, lambda)
        })
        .collect();
    PolicyTable::from_rows(rows)
}
