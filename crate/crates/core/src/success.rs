//! Bell-shaped success probabilities `p_A(l) = kappa l^alpha / (1+l)^(alpha+beta)`
//! and `p_B(l) = l p_A(l)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rational success-probability family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessModel {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for SuccessModel {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 3.0,
            kappa: 8.0,
        }
    }
}

/// A named reason a model or scenario is rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// alpha, beta or kappa not positive and finite.
    NonPositiveParameter { name: String, value: f64 },
    /// beta <= 1: `p_B` does not vanish as `l -> inf`.
    TailCondition { beta: f64 },
    /// Peaks not on opposite sides of 1.
    PeakOrder { l_a: f64, l_b: f64 },
    /// `sup p + eps > 1` for the named curve.
    ProbabilityExceedsOne { curve: char, sup: f64, eps: f64 },
    /// `p sup p_B >= 1`: the failure update is undefined.
    ArrivalScaledExceedsOne { p: f64, sup_pb: f64 },
    ArrivalOutOfRange { p: f64 },
    NegativeEpsilon { eps: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveParameter { name, value } => {
                write!(f, "{name} must be positive and finite, got {value}")
            }
            Violation::TailCondition { beta } => {
                write!(f, "tail condition: beta must exceed 1 so p_B vanishes at infinity, got {beta}")
            }
            Violation::PeakOrder { l_a, l_b } => {
                write!(f, "peak order: need l_A < 1 < l_B, got l_A = {l_a}, l_B = {l_b}")
            }
            Violation::ProbabilityExceedsOne { curve, sup, eps } => write!(
                f,
                "probability exceeds 1: sup p_{curve} = {sup} plus eps = {eps} is above 1"
            ),
            Violation::ArrivalScaledExceedsOne { p, sup_pb } => {
                write!(f, "p * sup p_B = {} is not below 1 (p = {p})", p * sup_pb)
            }
            Violation::ArrivalOutOfRange { p } => {
                write!(f, "arrival probability must lie in (0,1), got {p}")
            }
            Violation::NegativeEpsilon { eps } => {
                write!(f, "p-hacking intensity must be nonnegative and finite, got {eps}")
            }
        }
    }
}

impl SuccessModel {
    pub fn new(alpha: f64, beta: f64, kappa: f64) -> Self {
        Self { alpha, beta, kappa }
    }

    /// `ln p_A` at `x = ln l`. Valid for any finite `x`.
    #[inline]
    pub fn ln_pa_x(&self, x: f64) -> f64 {
        // ln(1 + e^x) without overflow
        let softplus = if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        };
        self.kappa.ln() + self.alpha * x - (self.alpha + self.beta) * softplus
    }

    /// `ln p_B` at `x = ln l`.
    #[inline]
    pub fn ln_pb_x(&self, x: f64) -> f64 {
        self.ln_pa_x(x) + x
    }

    #[inline]
    pub(crate) fn pa_unchecked(&self, l: f64) -> f64 {
        self.kappa * (self.alpha * l.ln() - (self.alpha + self.beta) * l.ln_1p()).exp()
    }

    /// `(p_A(l), p_B(l))` with `p_B = l p_A` exactly.
    pub fn success_probs(&self, l: f64) -> Result<(f64, f64)> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Domain(format!("project l must be positive and finite, got {l}")));
        }
        let pa = self.pa_unchecked(l);
        Ok((pa, l * pa))
    }

    /// Stationary points `(l_A, l_B)` of `p_A` and `p_B`.
    pub fn peaks(&self) -> (f64, f64) {
        (self.alpha / self.beta, (self.alpha + 1.0) / (self.beta - 1.0))
    }

    /// `(sup p_A, sup p_B)`, attained at the peaks.
    pub fn sups(&self) -> (f64, f64) {
        let (la, lb) = self.peaks();
        let sup_a = self.pa_unchecked(la);
        let sup_b = if lb.is_finite() && lb > 0.0 {
            lb * self.pa_unchecked(lb)
        } else {
            f64::INFINITY
        };
        (sup_a, sup_b)
    }

    /// Check the model together with arrival probability `p` and intensity `eps`.
    pub fn validate(&self, p: f64, eps: f64) -> ValidationReport {
        let mut violations = Vec::new();
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta), ("kappa", self.kappa)] {
            if !(value > 0.0 && value.is_finite()) {
                violations.push(Violation::NonPositiveParameter {
                    name: name.to_string(),
                    value,
                });
            }
        }
        if !violations.is_empty() {
            return ValidationReport { violations };
        }
        if self.beta <= 1.0 {
            violations.push(Violation::TailCondition { beta: self.beta });
        }
        let (l_a, l_b) = self.peaks();
        if !(l_a < 1.0 && l_b > 1.0 && self.beta > 1.0) {
            violations.push(Violation::PeakOrder { l_a, l_b });
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            violations.push(Violation::NegativeEpsilon { eps });
        }
        if !(p > 0.0 && p < 1.0) {
            violations.push(Violation::ArrivalOutOfRange { p });
        }
        let (sup_a, sup_b) = self.sups();
        let eps_c = if eps.is_finite() { eps.max(0.0) } else { 0.0 };
        if sup_a + eps_c > 1.0 {
            violations.push(Violation::ProbabilityExceedsOne {
                curve: 'A',
                sup: sup_a,
                eps: eps_c,
            });
        }
        if sup_b >= 1.0 {
            violations.push(Violation::ProbabilityExceedsOne {
                curve: 'B',
                sup: sup_b,
                eps: 0.0,
            });
        } else if p > 0.0 && p < 1.0 && p * sup_b >= 1.0 {
            violations.push(Violation::ArrivalScaledExceedsOne { p, sup_pb: sup_b });
        }
        ValidationReport { violations }
    }
}

/// Outcome of [`SuccessModel::validate`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self.violations))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_probabilities() {
        let sm = SuccessModel::default();
        let (pa, pb) = sm.success_probs(1.0).unwrap();
        assert!((pa - 0.25).abs() < 1e-15);
        assert_eq!(pa, pb);
        let (pa, pb) = sm.success_probs(4.0).unwrap();
        assert!((pa - 8.0 * 16.0 / 3125.0).abs() < 1e-15);
        assert!((pa - 0.04096).abs() < 1e-15);
        assert_eq!(pb, 4.0 * pa);
        assert!(sm.success_probs(0.0).is_err());
        assert!(sm.success_probs(-1.0).is_err());
    }

    #[test]
    fn log_form_matches_direct() {
        let sm = SuccessModel::default();
        for &l in &[1e-6f64, 0.01, 0.5, 1.0, 3.0, 1e3, 1e6] {
            let direct = 8.0 * l * l / (1.0 + l).powi(5);
            let (pa, _) = sm.success_probs(l).unwrap();
            assert!((pa / direct - 1.0).abs() < 1e-12, "l={l}");
            assert!((sm.ln_pa_x(f64::ln(l)) - direct.ln()).abs() < 1e-12);
        }
        // far tails stay finite in log form
        assert!((sm.ln_pa_x(500.0) - (8f64.ln() - 3.0 * 500.0)).abs() < 1e-9);
        assert!((sm.ln_pa_x(-500.0) - (8f64.ln() - 2.0 * 500.0)).abs() < 1e-9);
    }

    #[test]
    fn peaks_examples() {
        let (la, lb) = SuccessModel::default().peaks();
        assert!((la - 2.0 / 3.0).abs() < 1e-15);
        assert!((lb - 1.5).abs() < 1e-15);
        let (la, lb) = SuccessModel::new(4.0, 5.0, 8.0).peaks();
        assert!((la - 0.8).abs() < 1e-15);
        assert!((lb - 1.25).abs() < 1e-15);
    }

    #[test]
    fn peaks_match_grid_argmax() {
        for sm in [SuccessModel::default(), SuccessModel::new(4.0, 5.0, 8.0)] {
            let n = 20001;
            let grid: Vec<f64> = (0..n).map(|i| (-3.0 + 6.0 * i as f64 / (n - 1) as f64).exp()).collect();
            let step = 6.0 / (n - 1) as f64;
            let arg_a = grid
                .iter()
                .copied()
                .max_by(|a, b| sm.success_probs(*a).unwrap().0.total_cmp(&sm.success_probs(*b).unwrap().0))
                .unwrap();
            let arg_b = grid
                .iter()
                .copied()
                .max_by(|a, b| sm.success_probs(*a).unwrap().1.total_cmp(&sm.success_probs(*b).unwrap().1))
                .unwrap();
            let (la, lb) = sm.peaks();
            assert!((arg_a.ln() - la.ln()).abs() <= step);
            assert!((arg_b.ln() - lb.ln()).abs() <= step);
        }
    }

    #[test]
    fn validate_examples() {
        let sm = SuccessModel::default();
        let r = sm.validate(0.5, 0.05);
        assert!(r.is_valid(), "{r:?}");
        let (sup_a, _) = sm.sups();
        assert!((sup_a - 0.2765).abs() < 1e-4);

        let r = SuccessModel::new(2.0, 0.5, 8.0).validate(0.5, 0.0);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::TailCondition { .. })));

        let r = SuccessModel::new(2.0, 3.0, 40.0).validate(0.5, 0.0);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ProbabilityExceedsOne { curve: 'A', .. })));
        assert!(r.into_result().is_err());

        let r = SuccessModel::new(-1.0, 3.0, 8.0).validate(0.5, 0.0);
        assert!(matches!(r.violations[0], Violation::NonPositiveParameter { .. }));
        let r = sm.validate(1.5, -0.1);
        assert_eq!(r.violations.len(), 2);
        let r = sm.validate(0.5, 0.8);
        assert!(!r.is_valid());
    }

    #[test]
    fn vanishing_tails() {
        let sm = SuccessModel::default();
        for &l in &[1e-8, 1e8] {
            let (pa, pb) = sm.success_probs(l).unwrap();
            assert!(pa < 1e-6 && pb < 1e-6);
        }
    }

    #[test]
    fn unimodal_on_grid() {
        let sm = SuccessModel::default();
        let (la, lb) = sm.peaks();
        let grid: Vec<f64> = (0..1000).map(|i| (-8.0 + 16.0 * i as f64 / 999.0).exp()).collect();
        for w in grid.windows(2) {
            let (a0, b0) = sm.success_probs(w[0]).unwrap();
            let (a1, b1) = sm.success_probs(w[1]).unwrap();
            if w[1] <= la {
                assert!(a1 > a0);
            } else if w[0] >= la {
                assert!(a1 < a0);
            }
            if w[1] <= lb {
                assert!(b1 > b0);
            } else if w[0] >= lb {
                assert!(b1 < b0);
            }
        }
    }

    #[test]
    fn power_law_tail() {
        let sm = SuccessModel::default();
        let l: f64 = 1e6;
        let (pa, _) = sm.success_probs(l).unwrap();
        assert!((pa * l.powf(sm.beta) / sm.kappa - 1.0).abs() < 1e-3);
    }
}
