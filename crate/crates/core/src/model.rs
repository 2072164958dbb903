//! Two-state public belief and the information measure of a successful project.
//!
//! The belief is carried as the log-likelihood ratio `lambda = ln((1-u)/u)` of
//! state B over state A. Both `u` and `1-u` are derived from `lambda` so that
//! neither loses precision when the other is close to 1; learning trajectories
//! routinely reach `lambda < -300`, where `u` rounds to exactly 1.0.
//!
//! Information is the KL divergence (in nats) between the posterior after a
//! success of project `l` and the prior:
//!
//! ```text
//! I(u, l) = (1-u) l ln l / (u + (1-u) l) - ln(u + (1-u) l)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::success::SuccessModel;

/// Public belief: weight `u` on state A and log-odds `lambda` of B over A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    lambda: f64,
    u: f64,
    w: f64,
}

impl BeliefState {
    /// Belief from log-odds: `u = 1/(1+e^lambda)`.
    pub fn from_log_ratio(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be finite, got {lambda}")));
        }
        let (u, w) = if lambda >= 0.0 {
            let e = (-lambda).exp();
            (e / (1.0 + e), 1.0 / (1.0 + e))
        } else {
            let e = lambda.exp();
            (1.0 / (1.0 + e), e / (1.0 + e))
        };
        if u <= 0.0 || w <= 0.0 {
            return Err(Error::Saturation { lambda });
        }
        Ok(Self { lambda, u, w })
    }

    /// Belief from the weight on state A; boundary beliefs are rejected.
    pub fn from_prob(u: f64) -> Result<Self> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("u must lie in (0,1), got {u}")));
        }
        let w = 1.0 - u;
        Ok(Self {
            lambda: w.ln() - u.ln(),
            u,
            w,
        })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Weight on state A.
    #[inline]
    pub fn u(&self) -> f64 {
        self.u
    }

    /// Weight on state B, `1 - u`, accurate even when `u` rounds to 1.
    #[inline]
    pub fn one_minus_u(&self) -> f64 {
        self.w
    }

    /// Belief after shifting the log-odds by `delta`.
    pub fn shifted(&self, delta: f64) -> Result<Self> {
        Self::from_log_ratio(self.lambda + delta)
    }

    /// `I(u, l)` evaluated with the separately carried `u` and `1-u`.
    pub fn information(&self, l: f64) -> Result<InformationValue> {
        check_l(l)?;
        Ok(InformationValue(info_uw(self.u, self.w, l, l.ln())))
    }

    /// `(sup_low, sup_high, m)` with `sup_low = -ln u`, `sup_high = -ln(1-u)`.
    pub fn information_sup(&self) -> InformationSup {
        let low = if self.u >= 0.5 {
            -(-self.w).ln_1p()
        } else {
            -self.u.ln()
        };
        let high = if self.w >= 0.5 {
            -(-self.u).ln_1p()
        } else {
            -self.w.ln()
        };
        InformationSup {
            sup_low: low,
            sup_high: high,
            m: low.max(high),
        }
    }
}

/// KL divergence of beliefs generated by a successful project, in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct InformationValue(pub f64);

impl InformationValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Limits of `I(u, l)` as `l -> 0` and `l -> inf`, and their maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationSup {
    pub sup_low: f64,
    pub sup_high: f64,
    pub m: f64,
}

fn check_l(l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("project l must be positive and finite, got {l}")))
    }
}

/// `ln(u + w l)` without cancellation in either regime.
#[inline]
pub(crate) fn ln_mix(u: f64, w: f64, l: f64) -> f64 {
    if u >= w {
        (w * (l - 1.0)).ln_1p()
    } else {
        w.ln() + (l + u / w).ln()
    }
}

#[inline]
pub(crate) fn info_uw(u: f64, w: f64, l: f64, ln_l: f64) -> f64 {
    if l == 1.0 {
        return 0.0;
    }
    let wl = w * l;
    let value = wl * ln_l / (u + wl) - ln_mix(u, w, l);
    value.max(0.0)
}

/// `I(u, l)` for a weight `u` on state A.
pub fn information(u: f64, l: f64) -> Result<InformationValue> {
    BeliefState::from_prob(u)?.information(l)
}

/// `dI/dl = u(1-u) ln l / (u + (1-u) l)^2`.
pub fn information_derivative(u: f64, l: f64) -> Result<f64> {
    let b = BeliefState::from_prob(u)?;
    check_l(l)?;
    let s = b.u + b.w * l;
    Ok(b.u * b.w * l.ln() / (s * s))
}

/// Suprema of the information measure at belief `u`.
pub fn information_sup(u: f64) -> Result<InformationSup> {
    Ok(BeliefState::from_prob(u)?.information_sup())
}

/// Bayesian update after a success of project `l`: `lambda' = lambda + ln l`.
pub fn update_on_success(b: &BeliefState, l: f64) -> Result<BeliefState> {
    check_l(l)?;
    b.shifted(l.ln())
}

/// Log-odds shift applied after a failure, `ln[(1 - p p_B(l)) / (1 - p p_A(l))]`.
pub fn failure_log_shift(l: f64, p: f64, sm: &SuccessModel) -> Result<f64> {
    check_l(l)?;
    let (pa, pb) = sm.success_probs(l)?;
    let (qa, qb) = (p * pa, p * pb);
    if qa >= 1.0 || qb >= 1.0 {
        return Err(Error::Validation(vec![
            crate::success::Violation::ArrivalScaledExceedsOne {
                p,
                sup_pb: pa.max(pb),
            },
        ]));
    }
    Ok((-qb).ln_1p() - (-qa).ln_1p())
}

/// Update after a failure, read as if there were no p-hacking.
pub fn update_on_failure(
    b: &BeliefState,
    l: f64,
    p: f64,
    sm: &SuccessModel,
) -> Result<BeliefState> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("arrival probability must lie in (0,1), got {p}")));
    }
    b.shifted(failure_log_shift(l, p, sm)?)
}
