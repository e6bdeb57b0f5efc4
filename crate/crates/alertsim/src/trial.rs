//! Simulated deployment trials: a control arm and one or more live alert
//! policies, each run on its own cohort.
//!
//! In `paired` mode (the default) every arm draws the same patients — the
//! same seeds, hence the same wind — so arm differences are exact
//! counterfactual contrasts with zero sampling noise between arms. In
//! unpaired mode each arm draws an independent cohort, which is what a real
//! randomized deployment would see; prevented-outcome differences then
//! carry between-arm sampling noise.

use serde::{Deserialize, Serialize};

use crate::domain::Mode;
use crate::error::{Error, Result};
use crate::risk::AlertPolicy;
use crate::simulator::{generate_cohort, mix, DynamicsConfig, InterventionSpec};

/// One trial arm: a label and the policy it deploys. The control arm —
/// exactly one per trial — has no policy and runs silently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialArm {
    pub label: String,
    pub policy: Option<AlertPolicy>,
}

impl TrialArm {
    pub fn control(label: impl Into<String>) -> Self {
        Self { label: label.into(), policy: None }
    }

    pub fn treatment(label: impl Into<String>, policy: AlertPolicy) -> Self {
        Self { label: label.into(), policy: Some(policy) }
    }

    pub fn is_control(&self) -> bool {
        self.policy.is_none()
    }
}

/// Full description of a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub arms: Vec<TrialArm>,
    pub n_per_arm: u64,
    pub base_seed: u64,
    pub dynamics: DynamicsConfig,
    /// What an alert does in the treatment arms.
    pub intervention: InterventionSpec,
    /// Same patients in every arm (true) or independent draws per arm.
    pub paired: bool,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let n_controls = self.arms.iter().filter(|a| a.is_control()).count();
        if n_controls != 1 {
            return Err(Error::InvalidTrialConfig(format!(
                "need exactly one control arm, found {n_controls}"
            )));
        }
        let mut labels: Vec<&str> = self.arms.iter().map(|a| a.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.arms.len() {
            return Err(Error::InvalidTrialConfig("arm labels must be unique".into()));
        }
        if self.n_per_arm == 0 {
            return Err(Error::InvalidTrialConfig("n_per_arm must be at least 1".into()));
        }
        self.dynamics.validate()?;
        self.intervention.validate()?;
        Ok(())
    }
}

/// Aggregates for one completed arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub label: String,
    pub is_control: bool,
    pub total_outcomes: u64,
    pub total_alerts: u64,
    /// Control outcomes minus this arm's outcomes; negative means the arm
    /// caused more outcomes than doing nothing. `None` on the control arm.
    pub prevented_outcomes: Option<i64>,
    pub outcome_rate: f64,
    pub alert_rate: f64,
}

/// All arms of a completed trial, in configuration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub arms: Vec<ArmResult>,
    pub n_per_arm: u64,
    pub paired: bool,
    pub base_seed: u64,
}

impl TrialResult {
    pub fn control(&self) -> &ArmResult {
        self.arms
            .iter()
            .find(|a| a.is_control)
            .expect("validated trial always has a control arm")
    }
}

/// One treatment arm's headline numbers against the control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmComparison {
    pub label: String,
    pub prevented_outcomes: i64,
    pub alerts: u64,
}

/// Runs every arm and tallies outcomes and alerts.
///
/// Paired trials run each arm from the trial's base seed, so patient `i` in
/// every arm shares wind; unpaired trials give each arm its own seed stream
/// derived from the base seed and the arm's position.
pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    config.validate()?;
    let mut raw = Vec::with_capacity(config.arms.len());
    for (idx, arm) in config.arms.iter().enumerate() {
        let arm_seed = if config.paired {
            config.base_seed
        } else {
            mix(config.base_seed, 1 + idx as u64)
        };
        let cohort = generate_cohort(
            config.n_per_arm,
            arm_seed,
            &config.dynamics,
            arm.policy.as_ref(),
            &config.intervention,
        )?;
        debug_assert!(
            !arm.is_control() || cohort.mode() == Mode::Silent,
            "a control arm is a silent cohort"
        );
        raw.push((arm, cohort.outcome_count(), cohort.alert_count()));
    }
    let control_outcomes = raw
        .iter()
        .find(|(arm, _, _)| arm.is_control())
        .map(|&(_, outcomes, _)| outcomes)
        .expect("validated");
    let n = config.n_per_arm as f64;
    let arms = raw
        .into_iter()
        .map(|(arm, outcomes, alerts)| ArmResult {
            label: arm.label.clone(),
            is_control: arm.is_control(),
            total_outcomes: outcomes,
            total_alerts: alerts,
            prevented_outcomes: (!arm.is_control())
                .then(|| control_outcomes as i64 - outcomes as i64),
            outcome_rate: outcomes as f64 / n,
            alert_rate: alerts as f64 / n,
        })
        .collect();
    Ok(TrialResult {
        arms,
        n_per_arm: config.n_per_arm,
        paired: config.paired,
        base_seed: config.base_seed,
    })
}

/// Treatment arms versus control, sorted by label for stable reporting.
pub fn compare_arms(result: &TrialResult) -> Vec<ArmComparison> {
    let mut rows: Vec<ArmComparison> = result
        .arms
        .iter()
        .filter(|a| !a.is_control)
        .map(|a| ArmComparison {
            label: a.label.clone(),
            prevented_outcomes: a
                .prevented_outcomes
                .expect("treatment arms always have a prevented count"),
            alerts: a.total_alerts,
        })
        .collect();
    rows.sort_by(|a, b| a.label.cmp(&b.label));
    rows
}
