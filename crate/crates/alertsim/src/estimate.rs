//! Deployment-impact estimators built on patient-level confusion counts.
//!
//! The quantity connecting retrospective evaluation to deployed effect is
//! the number of true positives: patients who would have been alerted and
//! would have had the outcome. If responding to an alert multiplies an
//! alerted patient's outcome risk by `rho`, deploying the model turns an
//! expected `(1 - rho)` of those true positives into non-events:
//!
//! ```text
//! expected outcomes under deployment = n_outcomes - (1 - rho) · tp
//! ```
//!
//! Setting `rho = 0` (a perfectly effective response) gives the upper
//! bound: at most `tp` outcomes can be prevented.
//!
//! These formulas need `tp` counted in **patients**. Aggregated-time counts
//! are patient-timepoints — one prevented outcome would be counted once per
//! alerted window row — so every estimator here rejects them.

use serde::{Deserialize, Serialize};

use crate::domain::{ConfusionCounts, Strategy};
use crate::error::{Error, Result};

/// Multiplier on an alerted patient's outcome risk: 0 means the response
/// always works, 1 means alerts change nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RiskRatio(f64);

impl RiskRatio {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidRiskRatio(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RiskRatio {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<RiskRatio> for f64 {
    fn from(r: RiskRatio) -> f64 {
        r.value()
    }
}

/// Rejects counts whose unit cannot feed a patient-level estimator.
fn require_patient_unit(counts: &ConfusionCounts, operation: &'static str) -> Result<()> {
    if counts.strategy == Strategy::AggregatedTime {
        return Err(Error::AggregatedTimeRejected { operation });
    }
    Ok(())
}

/// Expected number of outcomes if the model were deployed and responding to
/// an alert multiplied outcome risk by `rho`: `n_outcomes - (1 - rho) · tp`.
///
/// `n_outcomes` is the silent cohort's outcome total and `tp` its true
/// positives, so `tp <= n_outcomes` must hold.
pub fn outcome_estimate(n_outcomes: u64, tp: u64, rho: RiskRatio) -> Result<f64> {
    if tp > n_outcomes {
        return Err(Error::TpExceedsOutcomes { tp, n_outcomes });
    }
    Ok(n_outcomes as f64 - (1.0 - rho.value()) * tp as f64)
}

/// Upper bound on preventable outcomes: the true-positive count, i.e. the
/// `rho = 0` case of [`outcome_estimate`]. Patient-level counts only.
pub fn prevented_upper_bound(counts: &ConfusionCounts) -> Result<u64> {
    require_patient_unit(counts, "prevented_upper_bound")?;
    Ok(counts.tp)
}

/// Difference in expected deployed outcomes between model `f` and model `g`
/// evaluated on the same cohort: `(rho - 1) · (tp_f - tp_g)`.
///
/// Negative favors `f` (fewer expected outcomes). The shared terms —
/// the cohort's outcome total — cancel, so only the true-positive counts
/// matter.
pub fn model_comparison(tp_f: u64, tp_g: u64, rho: RiskRatio) -> f64 {
    (rho.value() - 1.0) * (tp_f as f64 - tp_g as f64)
}

/// Expected alert workload under deployment: every positive (true or false)
/// is an alert someone must answer. Patient-level counts only.
pub fn workload_estimate(counts: &ConfusionCounts) -> Result<u64> {
    require_patient_unit(counts, "workload_estimate")?;
    Ok(counts.positives())
}

/// One point on a response-effectiveness curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub rho: f64,
    pub prevented: f64,
}

/// Prevented-outcome estimates `(1 - rho) · tp` across a grid of risk
/// ratios, for reporting how conclusions move with response effectiveness.
///
/// First-alert counts only: the grid is about per-patient deployment
/// effects, and first-alert is the strategy whose units are deployments.
pub fn rho_sensitivity(counts: &ConfusionCounts, rhos: &[f64]) -> Result<Vec<SensitivityPoint>> {
    if counts.strategy != Strategy::FirstAlert {
        return Err(Error::SensitivityRequiresFirstAlert(format!(
            "counts use the {} strategy",
            counts.strategy
        )));
    }
    let mut points = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let rho = RiskRatio::new(rho)?;
        points.push(SensitivityPoint {
            rho: rho.value(),
            prevented: (1.0 - rho.value()) * counts.tp as f64,
        });
    }
    Ok(points)
}
