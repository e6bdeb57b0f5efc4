//! Shared domain types: timepoints, trajectories, cohorts, confusion counts,
//! and derived metrics.
//!
//! All types here are immutable after construction and safe to share across
//! threads. [`Trajectory`] and [`Cohort`] validate their structural
//! invariants in their constructors (and therefore also on deserialization),
//! so every instance in the program is well-formed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One patient-timepoint: kinematic covariates plus alert/outcome flags.
///
/// `acceleration` is the force applied in the transition that *produced*
/// this state (zero at `t = 0`). A policy reading a timepoint therefore only
/// ever sees information available before the next step's force is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    /// 0-based time index (one simulation step or one ingested record interval).
    pub t: u64,
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    /// Risk score in [0, 1], present where a policy was queried or a score
    /// was ingested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub alert: bool,
    /// True at the step the outcome occurs (at most once per trajectory).
    pub outcome: bool,
}

/// Serialization mirror of [`Trajectory`]: cached fields are recomputed and
/// invariants re-checked when deserializing.
#[derive(Serialize, Deserialize)]
struct RawTrajectory {
    patient_id: String,
    timepoints: Vec<TimePoint>,
}

/// One patient-encounter's time series.
///
/// Invariants enforced by [`Trajectory::new`]:
/// - at least one timepoint, times strictly increasing (gaps permitted:
///   ingested data may skip intervals; simulated data never does);
/// - scores, where present, lie in [0, 1]; kinematics are finite;
/// - at most one timepoint has `outcome = true`;
/// - no alert at or after the outcome time (an alert tied with the outcome
///   is discarded at generation time — the outcome takes precedence).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory", into = "RawTrajectory")]
pub struct Trajectory {
    patient_id: String,
    timepoints: Vec<TimePoint>,
    first_alert_time: Option<u64>,
    outcome_time: Option<u64>,
}

impl Trajectory {
    /// Validates the timepoint stream and caches first-alert/outcome times.
    pub fn new(patient_id: impl Into<String>, timepoints: Vec<TimePoint>) -> Result<Self> {
        let patient_id = patient_id.into();
        let invalid = |message: String| Error::InvalidTrajectory {
            patient_id: patient_id.clone(),
            message,
        };

        if timepoints.is_empty() {
            return Err(invalid("no timepoints".into()));
        }
        let mut outcome_time = None;
        let mut first_alert_time = None;
        let mut prev_t = None;
        for tp in &timepoints {
            if let Some(prev) = prev_t {
                if tp.t <= prev {
                    return Err(invalid(format!(
                        "times must be strictly increasing, got {} after {}",
                        tp.t, prev
                    )));
                }
            }
            prev_t = Some(tp.t);

            if !(tp.position.is_finite() && tp.velocity.is_finite() && tp.acceleration.is_finite())
            {
                return Err(invalid(format!("non-finite kinematics at t={}", tp.t)));
            }
            if let Some(s) = tp.score {
                if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                    return Err(invalid(format!("score {s} at t={} is outside [0, 1]", tp.t)));
                }
            }
            if tp.outcome {
                if outcome_time.is_some() {
                    return Err(invalid(format!(
                        "second outcome at t={} (at most one outcome per encounter)",
                        tp.t
                    )));
                }
                outcome_time = Some(tp.t);
            }
            if tp.alert {
                if let Some(ot) = outcome_time {
                    return Err(invalid(format!(
                        "alert at t={} is at or after the outcome at t={ot}",
                        tp.t
                    )));
                }
                if first_alert_time.is_none() {
                    first_alert_time = Some(tp.t);
                }
            }
        }
        Ok(Self {
            patient_id,
            timepoints,
            first_alert_time,
            outcome_time,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn timepoints(&self) -> &[TimePoint] {
        &self.timepoints
    }

    /// Earliest `t` with `alert = true`, if any.
    pub fn first_alert_time(&self) -> Option<u64> {
        self.first_alert_time
    }

    /// The `t` of the outcome, if one occurred.
    pub fn outcome_time(&self) -> Option<u64> {
        self.outcome_time
    }

    pub fn has_outcome(&self) -> bool {
        self.outcome_time.is_some()
    }

    pub fn has_alert(&self) -> bool {
        self.first_alert_time.is_some()
    }

    /// Total number of alert flags set (at most 1 under snooze semantics).
    pub fn alert_count(&self) -> usize {
        self.timepoints.iter().filter(|tp| tp.alert).count()
    }

    /// Timepoints strictly before the outcome (all of them if no outcome):
    /// the rows on which predictions are meaningful. The outcome row itself
    /// and any frozen rows after it are excluded.
    pub fn live_timepoints(&self) -> impl Iterator<Item = &TimePoint> {
        let cutoff = self.outcome_time;
        self.timepoints
            .iter()
            .filter(move |tp| cutoff.map_or(true, |ot| tp.t < ot))
    }

    /// The timepoint recorded at exactly `t`, if any.
    pub fn timepoint_at(&self, t: u64) -> Option<&TimePoint> {
        self.timepoints.iter().find(|tp| tp.t == t)
    }

    /// Largest recorded time index.
    pub fn max_time(&self) -> u64 {
        self.timepoints.last().map(|tp| tp.t).unwrap_or(0)
    }
}

impl From<Trajectory> for RawTrajectory {
    fn from(tr: Trajectory) -> Self {
        RawTrajectory {
            patient_id: tr.patient_id,
            timepoints: tr.timepoints,
        }
    }
}

impl TryFrom<RawTrajectory> for Trajectory {
    type Error = Error;

    fn try_from(raw: RawTrajectory) -> Result<Self> {
        Trajectory::new(raw.patient_id, raw.timepoints)
    }
}

/// How a cohort was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// No intervention ever changed the physics: trajectories are samples of
    /// the no-treatment potential outcomes. Any alert flags are virtual.
    Silent,
    /// A live policy triggered interventions that shaped the trajectories.
    Active,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Silent => "silent",
            Mode::Active => "active",
        })
    }
}

/// Serialization mirror of [`Cohort`].
#[derive(Serialize, Deserialize)]
struct RawCohort {
    trajectories: Vec<Trajectory>,
    mode: Mode,
    base_seed: u64,
    config_digest: String,
}

/// A collection of trajectories plus generation provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCohort", into = "RawCohort")]
pub struct Cohort {
    trajectories: Vec<Trajectory>,
    mode: Mode,
    base_seed: u64,
    config_digest: String,
}

impl Cohort {
    /// Validates that patient ids are unique. An empty trajectory list is
    /// permitted (an ingested file may hold only a header); generation
    /// entry points enforce `n >= 1` themselves.
    pub fn new(
        trajectories: Vec<Trajectory>,
        mode: Mode,
        base_seed: u64,
        config_digest: impl Into<String>,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for tr in &trajectories {
            if !seen.insert(tr.patient_id()) {
                return Err(Error::DuplicatePatientId(tr.patient_id().to_string()));
            }
        }
        Ok(Self {
            trajectories,
            mode,
            base_seed,
            config_digest: config_digest.into(),
        })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn config_digest(&self) -> &str {
        &self.config_digest
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Number of patients with an outcome.
    pub fn outcome_count(&self) -> u64 {
        self.trajectories.iter().filter(|t| t.has_outcome()).count() as u64
    }

    /// Total alert flags across all trajectories.
    pub fn alert_count(&self) -> u64 {
        self.trajectories.iter().map(|t| t.alert_count() as u64).sum()
    }

    /// Largest recorded time index across the cohort, if non-empty.
    pub fn max_time(&self) -> Option<u64> {
        self.trajectories.iter().map(|t| t.max_time()).max()
    }
}

impl From<Cohort> for RawCohort {
    fn from(c: Cohort) -> Self {
        RawCohort {
            trajectories: c.trajectories,
            mode: c.mode,
            base_seed: c.base_seed,
            config_digest: c.config_digest,
        }
    }
}

impl TryFrom<RawCohort> for Cohort {
    type Error = Error;

    fn try_from(raw: RawCohort) -> Result<Self> {
        Cohort::new(raw.trajectories, raw.mode, raw.base_seed, raw.config_digest)
    }
}

/// The three retrospective evaluation strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Per patient-timepoint with a lookahead window.
    AggregatedTime,
    /// Per patient, policy queried once at `t*`.
    FixedTime,
    /// Per patient, alerts snoozed after the first.
    FirstAlert,
}

impl Strategy {
    /// Machine-friendly token used in CSV and JSON output.
    pub fn token(&self) -> &'static str {
        match self {
            Strategy::AggregatedTime => "aggregated_time",
            Strategy::FixedTime => "fixed_time",
            Strategy::FirstAlert => "first_alert",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::AggregatedTime => "Aggregated Time",
            Strategy::FixedTime => "Fixed Time",
            Strategy::FirstAlert => "First Alert",
        })
    }
}

/// What one confusion-matrix cell counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    PatientTimepoint,
    Patient,
}

impl std::fmt::Display for Unit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Unit::PatientTimepoint => "patient-timepoint",
            Unit::Patient => "patient",
        })
    }
}

/// The evaluation parameters that produced a set of counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookahead: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

/// TP/FP/FN/TN tallies plus the strategy and parameters that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    /// False negatives (`fn` is a Rust keyword; serialized as "fn").
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub strategy: Strategy,
    pub unit: Unit,
    pub config: EvalParams,
}

impl ConfusionCounts {
    /// Total predicted positives, `tp + fp`: the evaluation's alert count.
    pub fn positives(&self) -> u64 {
        self.tp + self.fp
    }

    /// Total evaluated units (patients or patient-timepoints).
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Number of evaluated units with a positive truth label.
    pub fn outcomes(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Stamps the alert threshold that produced the counts, for reporting.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.config.threshold = Some(threshold);
        self
    }
}

/// Ratios derived from confusion counts. A `None` means the denominator was
/// zero: "no positives to be sensitive to" is distinct from "0% sensitive".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub positives: u64,
}

/// Derives sensitivity, specificity, and precision from counts.
/// Division-by-zero cells come back absent, never 0 or NaN.
pub fn confusion_metrics(counts: &ConfusionCounts) -> Metrics {
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    Metrics {
        sensitivity: ratio(counts.tp, counts.tp + counts.fn_),
        specificity: ratio(counts.tn, counts.tn + counts.fp),
        ppv: ratio(counts.tp, counts.tp + counts.fp),
        positives: counts.positives(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(t: u64, alert: bool, outcome: bool) -> TimePoint {
        TimePoint {
            t,
            position: 0.0,
            velocity: 0.0,
            acceleration: 0.0,
            score: None,
            alert,
            outcome,
        }
    }

    fn counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionCounts {
        ConfusionCounts {
            tp,
            fp,
            fn_,
            tn,
            strategy: Strategy::AggregatedTime,
            unit: Unit::PatientTimepoint,
            config: EvalParams::default(),
        }
    }

    #[test]
    fn metrics_mixed_cells() {
        let m = confusion_metrics(&counts(1, 2, 1, 4));
        assert_eq!(m.sensitivity, Some(0.5));
        assert_eq!(m.ppv, Some(1.0 / 3.0));
        assert_eq!(m.specificity, Some(4.0 / 6.0));
        assert_eq!(m.positives, 3);
    }

    #[test]
    fn metrics_no_positives() {
        let m = confusion_metrics(&counts(0, 0, 0, 10));
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.specificity, Some(1.0));
        assert_eq!(m.ppv, None);
        assert_eq!(m.positives, 0);
    }

    #[test]
    fn metrics_symmetric() {
        let m = confusion_metrics(&counts(5, 5, 5, 5));
        assert_eq!(m.sensitivity, Some(0.5));
        assert_eq!(m.specificity, Some(0.5));
        assert_eq!(m.ppv, Some(0.5));
        assert_eq!(m.positives, 10);
    }

    #[test]
    fn trajectory_caches_first_alert_and_outcome() {
        let tr = Trajectory::new(
            "p1",
            vec![tp(0, false, false), tp(1, true, false), tp(2, true, false), tp(3, false, true)],
        )
        .unwrap();
        assert_eq!(tr.first_alert_time(), Some(1));
        assert_eq!(tr.outcome_time(), Some(3));
        assert_eq!(tr.alert_count(), 2);
        let live: Vec<u64> = tr.live_timepoints().map(|p| p.t).collect();
        assert_eq!(live, vec![0, 1, 2]);
    }

    #[test]
    fn trajectory_rejects_structural_violations() {
        // Unordered times.
        let err = Trajectory::new("p", vec![tp(1, false, false), tp(1, false, false)]).unwrap_err();
        assert!(matches!(err, Error::InvalidTrajectory { .. }));

        // Two outcomes.
        let err = Trajectory::new("p", vec![tp(0, false, true), tp(1, false, true)]).unwrap_err();
        assert!(err.to_string().contains("second outcome"));

        // Alert at the outcome step: the outcome takes precedence.
        let err = Trajectory::new("p", vec![tp(0, false, false), tp(1, true, true)]).unwrap_err();
        assert!(err.to_string().contains("at or after the outcome"));

        // Alert after the outcome.
        let err = Trajectory::new("p", vec![tp(0, false, true), tp(1, true, false)]).unwrap_err();
        assert!(err.to_string().contains("at or after the outcome"));

        // Score out of range.
        let bad = TimePoint { score: Some(1.2), ..tp(0, false, false) };
        let err = Trajectory::new("p", vec![bad]).unwrap_err();
        assert!(err.to_string().contains("outside [0, 1]"));

        // Empty.
        assert!(Trajectory::new("p", vec![]).is_err());
    }

    #[test]
    fn trajectory_allows_gaps_and_frozen_tails() {
        // Gapped times (ingested data may skip intervals).
        let tr = Trajectory::new("p", vec![tp(0, false, false), tp(5, false, false)]).unwrap();
        assert_eq!(tr.max_time(), 5);
        // Rows after an outcome are tolerated as long as they carry no
        // alerts or outcomes; they are not live.
        let tr = Trajectory::new("p", vec![tp(0, false, true), tp(1, false, false)]).unwrap();
        assert_eq!(tr.live_timepoints().count(), 0);
    }

    #[test]
    fn cohort_rejects_duplicate_ids() {
        let a = Trajectory::new("p1", vec![tp(0, false, false)]).unwrap();
        let b = Trajectory::new("p1", vec![tp(0, false, false)]).unwrap();
        let err = Cohort::new(vec![a, b], Mode::Silent, 0, "d").unwrap_err();
        assert!(matches!(err, Error::DuplicatePatientId(id) if id == "p1"));
    }

    #[test]
    fn serde_round_trips_are_identity() {
        let tr = Trajectory::new(
            "p9",
            vec![
                TimePoint { score: Some(0.25), ..tp(0, false, false) },
                TimePoint { score: Some(0.75), ..tp(3, true, false) },
                tp(4, false, true),
            ],
        )
        .unwrap();
        let cohort = Cohort::new(vec![tr], Mode::Silent, 17, "digest").unwrap();
        let json = serde_json::to_string(&cohort).unwrap();
        let back: Cohort = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cohort);

        let c = counts(1, 2, 3, 4).with_threshold(0.4);
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"fn\":3"), "fn field serializes under its short name: {json}");
        let back: ConfusionCounts = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);

        let m = confusion_metrics(&c);
        let back: Metrics = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn deserialization_enforces_invariants() {
        // An alert after the outcome must be rejected even via serde.
        let json = r#"{
            "patient_id": "p",
            "timepoints": [
                {"t": 0, "position": 0.0, "velocity": 0.0, "acceleration": 0.0, "alert": false, "outcome": true},
                {"t": 1, "position": 0.0, "velocity": 0.0, "acceleration": 0.0, "alert": true, "outcome": false}
            ]
        }"#;
        assert!(serde_json::from_str::<Trajectory>(json).is_err());
    }
}
