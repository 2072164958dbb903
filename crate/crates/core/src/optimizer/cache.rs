//! Policy solver for simulation: full scans are done once per log-odds cell and
//! only their local maxima are refined at the exact belief.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use super::{golden, scan, sort_best_first, REFINE_TOL};
use crate::error::Result;
use crate::model::BeliefState;
use crate::payoff::PayoffSpec;
use crate::success::SuccessModel;

/// Cells per unit of log-odds.
const CELLS_PER_UNIT: f64 = 64.0;
/// Local maxima within this `ln EP` margin of the best are kept per cell.
const KEEP_MARGIN: f64 = 0.25;
const MAX_KEEP: usize = 6;
const MAX_RECENTER: usize = 64;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    x: f64,
    radius: f64,
}

/// Memoizing wrapper around the exact optimizer, safe to share across threads.
///
/// The answer for a belief depends only on that belief and the cell it falls
/// in, so results do not depend on query order or thread count.
#[derive(Debug)]
pub struct PolicySolver {
    ps: PayoffSpec,
    sm: SuccessModel,
    cells: RwLock<HashMap<i64, Arc<[Candidate]>>>,
}

impl PolicySolver {
    pub fn new(ps: PayoffSpec, sm: SuccessModel) -> Self {
        Self {
            ps,
            sm,
            cells: RwLock::new(HashMap::new()),
        }
    }

    pub fn payoff(&self) -> &PayoffSpec {
        &self.ps
    }

    pub fn success_model(&self) -> &SuccessModel {
        &self.sm
    }

    pub fn cached_cells(&self) -> usize {
        self.cells.read().expect("policy cache poisoned").len()
    }

    fn cell(&self, key: i64) -> Result<Arc<[Candidate]>> {
        if let Some(c) = self.cells.read().expect("policy cache poisoned").get(&key) {
            return Ok(c.clone());
        }
        let center = BeliefState::from_log_ratio(key as f64 / CELLS_PER_UNIT)?;
        let sc = scan(&self.ps, &self.sm, &center, KEEP_MARGIN, MAX_KEEP)?;
        let radius = 4.0 * sc.dx + 0.05;
        let cands: Arc<[Candidate]> = sc
            .maxima
            .iter()
            .map(|&(x, _)| Candidate { x, radius })
            .collect();
        let mut w = self.cells.write().expect("policy cache poisoned");
        Ok(w.entry(key).or_insert(cands).clone())
    }

    /// `(l*, ln EP(l*))` at belief `b`.
    pub fn solve(&self, b: &BeliefState) -> Result<(f64, f64)> {
        let key = (b.lambda() * CELLS_PER_UNIT).round() as i64;
        let cands = self.cell(key)?;
        let f = |x: f64| self.ps.ln_expected_payoff_x(&self.sm, b, x);
        let mut found: Vec<(f64, f64)> = Vec::with_capacity(cands.len());
        for c in cands.iter() {
            let mut center = c.x;
            let mut best = (center, f(center));
            for _ in 0..MAX_RECENTER {
                let (a, z) = (center - c.radius, center + c.radius);
                best = golden::maximize(f, a, z, REFINE_TOL);
                let edge = 0.01 * c.radius;
                if best.0 - a > edge && z - best.0 > edge {
                    break;
                }
                center = best.0;
            }
            if !found.iter().any(|&(y, _)| (y - best.0).abs() <= 10.0 * REFINE_TOL) {
                found.push(best);
            }
        }
        sort_best_first(&mut found);
        let (x, v) = found[0];
        Ok((x.exp(), v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::optimal_project_belief;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check(ps: PayoffSpec, lo: f64, hi: f64, n: usize) {
        let sm = SuccessModel::default();
        let solver = PolicySolver::new(ps, sm);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..n {
            let r = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            let lambda = lo + (hi - lo) * r;
            let b = BeliefState::from_log_ratio(lambda).unwrap();
            let exact = optimal_project_belief(&ps, &sm, &b).unwrap();
            let (l, v) = solver.solve(&b).unwrap();
            assert!(
                (l / exact.l_star - 1.0).abs() < 1e-6,
                "lambda={lambda}: cached {l} exact {}",
                exact.l_star
            );
            assert!((v - exact.ep_star.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_exact_optimizer_bounded() {
        check(PayoffSpec::bounded_exp(1.0, 8.0).unwrap(), -60.0, 20.0, 150);
    }

    #[test]
    fn matches_exact_optimizer_fast() {
        check(
            PayoffSpec::fast_reciprocal(1.0, 2.0, SuccessModel::default()).unwrap(),
            -20.0,
            20.0,
            150,
        );
    }

    #[test]
    fn tie_at_zero_matches_exact() {
        let sm = SuccessModel::default();
        let ps = PayoffSpec::bounded_exp(1.0, 8.0).unwrap();
        let solver = PolicySolver::new(ps, sm);
        let b = BeliefState::from_log_ratio(0.0).unwrap();
        let exact = optimal_project_belief(&ps, &sm, &b).unwrap();
        assert_eq!(solver.solve(&b).unwrap().0.to_bits(), solver.solve(&b).unwrap().0.to_bits());
        assert!((solver.solve(&b).unwrap().0 / exact.l_star - 1.0).abs() < 1e-6);
        assert_eq!(solver.cached_cells(), 1);
    }
}
