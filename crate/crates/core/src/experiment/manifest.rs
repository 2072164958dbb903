//! JSON documents written next to run and sweep outputs.

use serde::{Deserialize, Serialize};

use super::config::{PayoffConfig, ScenarioFile};
use crate::diagnostics::{
    AzumaReport, CltRow, EpsilonThreshold, EscapeThreshold, MartingaleRow, PolicyRange,
};
use crate::dynamics::TrajectorySummary;
use crate::payoff::GrowthOrder;

pub const ARTIFACT_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub trajectories: usize,
    pub learned: usize,
    pub failed: usize,
    pub undecided: usize,
    pub learned_fraction: f64,
    pub mean_lambda_final: f64,
    /// Mean over trajectories and periods of the recorded total drift.
    pub mean_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub index: u64,
    pub period: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFiles {
    /// Directory of per-trajectory CSVs, relative to the run directory.
    pub trajectories: Option<String>,
    pub aggregate: String,
    pub diagnostics: String,
}

/// Record of one `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub artifact_version: String,
    pub name: String,
    pub config: ScenarioFile,
    pub config_hash: String,
    pub created_utc: String,
    pub wall_clock_seconds: f64,
    pub workers: usize,
    pub seed: u64,
    pub trajectory_indices: Vec<u64>,
    pub total_steps: u64,
    pub summaries: Vec<TrajectorySummary>,
    pub aggregate: AggregateStats,
    pub failures: Vec<SeedFailure>,
    pub acceptance: Vec<AcceptanceCheck>,
    pub acceptance_passed: bool,
    /// SHA-256 of each trajectory CSV, in index order.
    pub trajectory_digests: Vec<String>,
    pub files: RunFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoobSummary {
    pub max_reconstruction_error: f64,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearDrift {
    /// Least-squares slope of the ensemble mean of lambda against t.
    pub slope: Option<f64>,
    pub mean_drift: f64,
    /// `|slope - mean_drift| / |mean_drift|`.
    pub relative_gap: Option<f64>,
}

/// Everything the diagnostics layer reports for an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub config: ScenarioFile,
    pub notes: Vec<String>,
    pub aggregate: AggregateStats,
    pub learned_cut: f64,
    pub window: usize,
    pub policy_range: Option<PolicyRange>,
    pub base_drift_min: Option<f64>,
    pub base_drift_max: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon_threshold: Option<EpsilonThreshold>,
    pub escape_delta: Option<f64>,
    pub escape_threshold: Option<EscapeThreshold>,
    pub escape_error: Option<String>,
    pub increment_bound: Option<f64>,
    pub variance_bound: Option<f64>,
    pub doob: DoobSummary,
    pub martingale: Vec<MartingaleRow>,
    pub azuma: Option<AzumaReport>,
    pub clt: Vec<CltRow>,
    pub linear_drift: LinearDrift,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub index: usize,
    pub payoff: PayoffConfig,
    pub file: String,
    pub rows: usize,
    pub failures: usize,
    pub min_l_star: Option<f64>,
    pub max_l_star: Option<f64>,
    /// `(k, l*)` at `u = 1 - 10^-k`.
    pub near_one: Vec<(i32, f64)>,
    /// Whether `l*` strictly increases with `k`.
    pub near_one_increasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEntry {
    pub a: usize,
    pub b: usize,
    pub order: GrowthOrder,
}

/// Record of one `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub kind: String,
    pub artifact_version: String,
    pub name: String,
    pub config: ScenarioFile,
    pub config_hash: String,
    pub created_utc: String,
    pub wall_clock_seconds: f64,
    pub payoffs: Vec<SweepEntry>,
    pub growth: Vec<GrowthEntry>,
}
