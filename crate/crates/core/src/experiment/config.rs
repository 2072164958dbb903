//! Scenario files (TOML). Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ScenarioConfig, TrueState};
use crate::error::{Error, Result};
use crate::payoff::PayoffSpec;
use crate::success::SuccessModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffConfig {
    BoundedExp { c: f64, gamma: f64 },
    FastReciprocal { c: f64, d: f64 },
}

impl PayoffConfig {
    pub fn to_spec(&self, sm: SuccessModel) -> Result<PayoffSpec> {
        match *self {
            PayoffConfig::BoundedExp { c, gamma } => PayoffSpec::bounded_exp(c, gamma),
            PayoffConfig::FastReciprocal { c, d } => PayoffSpec::fast_reciprocal(c, d, sm),
        }
        .map_err(|e| Error::Config(format!("payoff: {e}")))
    }

    pub fn label(&self) -> &'static str {
        match self {
            PayoffConfig::BoundedExp { .. } => "bounded_exp",
            PayoffConfig::FastReciprocal { .. } => "fast_reciprocal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub p: f64,
    pub eps: f64,
    #[serde(default)]
    pub lambda0: f64,
    pub horizon: u64,
    pub seed: u64,
    pub trajectories: u64,
    #[serde(default)]
    pub true_state: TrueState,
}

fn default_cut() -> f64 {
    -30.0
}
fn default_martingale_times() -> Vec<usize> {
    vec![100, 1000, 10000]
}
fn default_azuma_times() -> Vec<usize> {
    vec![1000, 5000]
}
fn default_nu() -> Vec<f64> {
    vec![50.0, 100.0, 200.0]
}
fn default_policy_lambda_min() -> f64 {
    -40.0
}
fn default_policy_lambda_max() -> f64 {
    40.0
}
fn default_policy_lambda_step() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_cut")]
    pub learned_cut: f64,
    /// Final window for the learned label; defaults to a tenth of the horizon.
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default = "default_martingale_times")]
    pub martingale_times: Vec<usize>,
    #[serde(default = "default_azuma_times")]
    pub azuma_times: Vec<usize>,
    #[serde(default = "default_nu")]
    pub nu: Vec<f64>,
    /// Drift margin; defaults to half the magnitude of the largest base drift
    /// over the policy range.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_policy_lambda_min")]
    pub policy_lambda_min: f64,
    #[serde(default = "default_policy_lambda_max")]
    pub policy_lambda_max: f64,
    #[serde(default = "default_policy_lambda_step")]
    pub policy_lambda_step: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            learned_cut: default_cut(),
            window: None,
            martingale_times: default_martingale_times(),
            azuma_times: default_azuma_times(),
            nu: default_nu(),
            delta: None,
            policy_lambda_min: default_policy_lambda_min(),
            policy_lambda_max: default_policy_lambda_max(),
            policy_lambda_step: default_policy_lambda_step(),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_true")]
    pub write_trajectories: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            write_trajectories: true,
        }
    }
}

/// Bounds on the learned fraction checked after a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceConfig {
    #[serde(default)]
    pub min_learned_fraction: Option<f64>,
    #[serde(default)]
    pub max_learned_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

/// Belief grid and payoff list for a policy sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Explicit weights on state A.
    #[serde(default)]
    pub u: Vec<f64>,
    /// Adds `u = 1 - 10^-k` for each listed `k`.
    #[serde(default)]
    pub near_one_k: Vec<i32>,
    #[serde(default)]
    pub lambda: Option<LambdaGrid>,
    /// Payoffs to sweep; the scenario payoff is used when empty.
    #[serde(default)]
    pub payoffs: Vec<PayoffConfig>,
}

/// A complete scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub model: SuccessModel,
    pub payoff: PayoffConfig,
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub acceptance: AcceptanceConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        f.check()?;
        Ok(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files serialize to TOML")
    }

    /// Field-level validation beyond what parsing enforces.
    pub fn check(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            errs.push(format!("name: must be nonempty [A-Za-z0-9_-], got {:?}", self.name));
        }
        if let Err(e) = self.scenario() {
            errs.push(e.to_string());
        }
        if self.dynamics.trajectories == 0 {
            errs.push("dynamics.trajectories: must be at least 1".into());
        }
        let d = &self.diagnostics;
        if !(d.policy_lambda_step > 0.0 && d.policy_lambda_min < d.policy_lambda_max) {
            errs.push("diagnostics: policy lambda grid must have min < max and step > 0".into());
        }
        if let Some(delta) = d.delta {
            if !(delta > 0.0) {
                errs.push(format!("diagnostics.delta: must be positive, got {delta}"));
            }
        }
        if !(d.learned_cut < 0.0) {
            errs.push(format!("diagnostics.learned_cut: must be negative, got {}", d.learned_cut));
        }
        for (k, v) in [
            ("min_learned_fraction", self.acceptance.min_learned_fraction),
            ("max_learned_fraction", self.acceptance.max_learned_fraction),
        ] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    errs.push(format!("acceptance.{k}: must lie in [0,1], got {v}"));
                }
            }
        }
        if let Some(s) = &self.sweep {
            for &u in &s.u {
                if !(u > 0.0 && u < 1.0) {
                    errs.push(format!("sweep.u: {u} is outside (0,1)"));
                }
            }
            for &k in &s.near_one_k {
                if !(1..=15).contains(&k) {
                    errs.push(format!("sweep.near_one_k: {k} is outside 1..=15"));
                }
            }
            if let Some(g) = &s.lambda {
                if !(g.step > 0.0 && g.min <= g.max) {
                    errs.push("sweep.lambda: need min <= max and step > 0".into());
                }
            }
            for (i, p) in s.payoffs.iter().enumerate() {
                if let Err(e) = p.to_spec(self.model) {
                    errs.push(format!("sweep.payoffs[{i}]: {e}"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    /// The simulation parameters of this scenario.
    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let ps = self.payoff.to_spec(self.model)?;
        let cfg = ScenarioConfig {
            p: self.dynamics.p,
            eps: self.dynamics.eps,
            sm: self.model,
            ps,
            lambda0: self.dynamics.lambda0,
            horizon: self.dynamics.horizon,
            seed: self.dynamics.seed,
            true_state: self.dynamics.true_state,
        };
        cfg.validate().map_err(|e| Error::Config(format!("dynamics: {e}")))?;
        Ok(cfg)
    }

    pub fn window(&self) -> usize {
        self.diagnostics
            .window
            .unwrap_or((self.dynamics.horizon / 10) as usize)
            .max(1)
    }
}
