//! Payoff families `P(I)` paid to a researcher whose project succeeds.
//!
//! * `BoundedExp`: `P(I) = c + gamma (1 - e^-I)`, bounded by `c + gamma`.
//! * `FastReciprocal`: `P(I) = c + d (1/p_A(4 e^(2I)) - 1/p_A(4))`, which grows fast
//!   enough that `p_A(4 e^(2I)) P(I) -> d > c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{info_uw, ln_mix, BeliefState};
use crate::success::SuccessModel;

/// A member of one of the shipped payoff families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PayoffSpec {
    BoundedExp {
        c: f64,
        gamma: f64,
    },
    FastReciprocal {
        c: f64,
        d: f64,
        /// The success model whose `p_A` is inverted.
        sm: SuccessModel,
    },
}

/// Result of comparing the growth of two payoff functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthOrder {
    Slower,
    Equivalent,
    Faster,
    Indeterminate,
}

const LN_4: f64 = std::f64::consts::LN_2 * 2.0;

impl PayoffSpec {
    pub fn bounded_exp(c: f64, gamma: f64) -> Result<Self> {
        let ps = PayoffSpec::BoundedExp { c, gamma };
        ps.validate()?;
        Ok(ps)
    }

    pub fn fast_reciprocal(c: f64, d: f64, sm: SuccessModel) -> Result<Self> {
        let ps = PayoffSpec::FastReciprocal { c, d, sm };
        ps.validate()?;
        Ok(ps)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PayoffSpec::BoundedExp { c, gamma } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::Domain(format!("base salary c must be positive, got {c}")));
                }
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
                }
            }
            PayoffSpec::FastReciprocal { c, d, sm } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::Domain(format!("base salary c must be positive, got {c}")));
                }
                if !(d > c && d.is_finite()) {
                    return Err(Error::Domain(format!("scale d must exceed c = {c}, got {d}")));
                }
                let (l_a, _) = sm.peaks();
                if !(l_a <= 4.0) {
                    return Err(Error::Domain(format!(
                        "p_A must be decreasing beyond 4 for P to increase, but l_A = {l_a}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Base salary `P(0)`.
    pub fn base_salary(&self) -> f64 {
        match *self {
            PayoffSpec::BoundedExp { c, .. } | PayoffSpec::FastReciprocal { c, .. } => c,
        }
    }

    /// `ln(1/p_A(4 e^(2i)))` for the fast family.
    #[inline]
    fn ln_inv(sm: &SuccessModel, i: f64) -> f64 {
        -sm.ln_pa_x(LN_4 + 2.0 * i)
    }

    /// `P(i)` without the `i >= 0` check. Used for finite differences at `i = 0`.
    pub(crate) fn eval_unchecked(&self, i: f64) -> f64 {
        match *self {
            PayoffSpec::BoundedExp { c, gamma } => c + gamma * (-(-i).exp_m1()),
            PayoffSpec::FastReciprocal { c, d, sm } => {
                let inv = Self::ln_inv(&sm, i).exp();
                let inv4 = Self::ln_inv(&sm, 0.0).exp();
                c + d * (inv - inv4)
            }
        }
    }

    /// `P(i)` for `i >= 0`.
    pub fn eval(&self, i: f64) -> Result<f64> {
        if !(i >= 0.0) {
            return Err(Error::Domain(format!("information must be nonnegative, got {i}")));
        }
        let v = self.eval_unchecked(i);
        if !v.is_finite() {
            return Err(Error::PayoffOverflow {
                information: i,
                detail: format!(
                    "1/p_A(4 e^(2I)) has logarithm {:.3e}; use ln_eval for large information",
                    match self {
                        PayoffSpec::FastReciprocal { sm, .. } => Self::ln_inv(sm, i),
                        _ => f64::NAN,
                    }
                ),
            });
        }
        Ok(v)
    }

    /// `ln P(i)`, finite for every finite `i >= 0`.
    pub fn ln_eval(&self, i: f64) -> f64 {
        match *self {
            PayoffSpec::BoundedExp { .. } => self.eval_unchecked(i).ln(),
            PayoffSpec::FastReciprocal { c, d, sm } => {
                let li = Self::ln_inv(&sm, i);
                if li < 600.0 {
                    self.eval_unchecked(i).ln()
                } else {
                    // P = d inv (1 + (c/d - inv4)/inv)
                    let inv4 = Self::ln_inv(&sm, 0.0).exp();
                    d.ln() + li + ((c / d - inv4) * (-li).exp()).ln_1p()
                }
            }
        }
    }

    /// `ln EP` at belief `b` and `x = ln l`.
    #[inline]
    pub(crate) fn ln_expected_payoff_x(&self, sm: &SuccessModel, b: &BeliefState, x: f64) -> f64 {
        let l = x.exp();
        let (u, w) = (b.u(), b.one_minus_u());
        let i = info_uw(u, w, l, x);
        self.ln_eval(i) + sm.ln_pa_x(x) + ln_mix(u, w, l)
    }

    /// `EP(u, l) = P(I(u,l)) [u p_A(l) + (1-u) p_B(l)]`.
    pub fn expected_payoff(&self, sm: &SuccessModel, u: f64, l: f64) -> Result<f64> {
        let b = BeliefState::from_prob(u)?;
        self.expected_payoff_belief(sm, &b, l)
    }

    pub fn expected_payoff_belief(&self, sm: &SuccessModel, b: &BeliefState, l: f64) -> Result<f64> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Domain(format!("project l must be positive and finite, got {l}")));
        }
        Ok(self.ln_expected_payoff_x(sm, b, l.ln()).exp())
    }
}

/// Compare the growth of `a` against `b` from `ln(P_a/P_b)` at `I = 20, 40, 80`.
///
/// The log ratio either settles (classified by its limit), keeps moving with
/// non-shrinking steps (classified by direction), or shrinks geometrically, in
/// which case an Aitken extrapolation of the limit decides. Anything else is
/// `Indeterminate`.
pub fn growth_compare(a: &PayoffSpec, b: &PayoffSpec) -> GrowthOrder {
    let rho = |i: f64| a.ln_eval(i) - b.ln_eval(i);
    let (r1, r2, r3) = (rho(20.0), rho(40.0), rho(80.0));
    if !(r1.is_finite() && r2.is_finite() && r3.is_finite()) {
        return GrowthOrder::Indeterminate;
    }
    let classify = |limit: f64, tol: f64| {
        if limit.abs() <= tol {
            GrowthOrder::Equivalent
        } else if limit < 0.0 {
            GrowthOrder::Slower
        } else {
            GrowthOrder::Faster
        }
    };
    let (d1, d2) = (r2 - r1, r3 - r2);
    if d2.abs() <= 1e-9 {
        return classify(r3, 1e-9);
    }
    if d1.signum() == d2.signum() && d2.abs() >= 0.9 * d1.abs() {
        return if d2 < 0.0 {
            GrowthOrder::Slower
        } else {
            GrowthOrder::Faster
        };
    }
    let denom = d2 - d1;
    if d1.signum() == d2.signum() && denom != 0.0 {
        let limit = r3 - d2 * d2 / denom;
        if limit.abs() > 1e-3 && limit.signum() == r3.signum() {
            return classify(limit, 1e-3);
        }
    }
    GrowthOrder::Indeterminate
}
