//! Retrospective evaluation of alert models on silent cohorts.
//!
//! Three strategies, differing in what counts as one classification:
//!
//! * **Aggregated-time** — every live patient-timepoint is a unit. The
//!   prediction is the stored alert flag; the truth is whether the outcome
//!   falls inside the lookahead window `(t, t + lookahead]`.
//! * **Fixed-time** — every patient still at risk at a landmark `t*` is a
//!   unit. The policy is re-queried on the recorded state at `t*` (stored
//!   alert flags are ignored); the truth is an outcome after `t*`, windowed
//!   by the lookahead when one is given.
//! * **First-alert** — every patient is a unit. The prediction is whether
//!   the patient was ever alerted, the truth whether they ever had the
//!   outcome. Requires snoozed alerts (at most one per patient).
//!
//! All three reject active cohorts: evaluating trajectories that were bent
//! by live interventions would credit the model with its own effects.

use serde::{Deserialize, Serialize};

use crate::domain::{ConfusionCounts, Cohort, EvalParams, Mode, Strategy, Unit};
use crate::error::{Error, Result};
use crate::risk::AlertPolicy;

/// Who counts as evaluable at the fixed-time landmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtRiskRule {
    /// Exclude patients whose outcome occurred at or before the landmark.
    #[default]
    ExcludePriorOutcome,
}

/// A validated evaluation request: strategy plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub strategy: Strategy,
    pub lookahead: Option<u64>,
    pub t_star: Option<u64>,
    pub at_risk_rule: AtRiskRule,
}

impl EvalConfig {
    pub fn aggregated(lookahead: u64) -> Self {
        Self {
            strategy: Strategy::AggregatedTime,
            lookahead: Some(lookahead),
            t_star: None,
            at_risk_rule: AtRiskRule::default(),
        }
    }

    pub fn fixed(t_star: u64, lookahead: Option<u64>) -> Self {
        Self {
            strategy: Strategy::FixedTime,
            lookahead,
            t_star: Some(t_star),
            at_risk_rule: AtRiskRule::default(),
        }
    }

    pub fn first_alert() -> Self {
        Self {
            strategy: Strategy::FirstAlert,
            lookahead: None,
            t_star: None,
            at_risk_rule: AtRiskRule::default(),
        }
    }

    /// Checks that the parameters present match the strategy chosen.
    pub fn validate(&self) -> Result<()> {
        match self.strategy {
            Strategy::AggregatedTime => {
                if self.lookahead.is_none() {
                    return Err(Error::MissingLookahead);
                }
            }
            Strategy::FixedTime => {
                if self.t_star.is_none() {
                    return Err(Error::MissingTStar);
                }
            }
            Strategy::FirstAlert => {
                if self.lookahead.is_some() {
                    return Err(Error::LookaheadForbidden);
                }
            }
        }
        if self.lookahead == Some(0) {
            return Err(Error::InvalidLookahead);
        }
        Ok(())
    }
}

/// Dispatches to the evaluator named by `config.strategy`.
///
/// Fixed-time needs a policy to re-query; the other strategies read stored
/// alert flags and ignore `policy`.
pub fn evaluate(
    cohort: &Cohort,
    config: &EvalConfig,
    policy: Option<&AlertPolicy>,
) -> Result<ConfusionCounts> {
    config.validate()?;
    match config.strategy {
        Strategy::AggregatedTime => aggregated_time(
            cohort,
            config.lookahead.expect("validated"),
        ),
        Strategy::FixedTime => {
            let policy = policy.ok_or(Error::MissingPolicy)?;
            fixed_time(cohort, policy, config.t_star.expect("validated"), config.lookahead)
        }
        Strategy::FirstAlert => first_alert(cohort),
    }
}

/// Aggregated-time evaluation: one unit per live patient-timepoint.
///
/// Prediction is the stored alert flag; truth is an outcome in
/// `(t, t + lookahead]`. Patients contribute as many units as they have
/// live timepoints, so frequent-alert patients dominate these counts —
/// which is exactly why the impact estimators refuse them.
pub fn aggregated_time(cohort: &Cohort, lookahead: u64) -> Result<ConfusionCounts> {
    if cohort.mode() == Mode::Active {
        return Err(Error::ActiveCohort { operation: "aggregated_time" });
    }
    if lookahead == 0 {
        return Err(Error::InvalidLookahead);
    }
    let mut counts = ConfusionCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
        strategy: Strategy::AggregatedTime,
        unit: Unit::PatientTimepoint,
        config: EvalParams { lookahead: Some(lookahead), t_star: None, threshold: None },
    };
    for tr in cohort.trajectories() {
        let outcome_time = tr.outcome_time();
        for tp in tr.live_timepoints() {
            let predicted = tp.alert;
            let actual = outcome_time.map_or(false, |ot| ot > tp.t && ot <= tp.t + lookahead);
            tally(&mut counts, predicted, actual);
        }
    }
    Ok(counts)
}

/// Fixed-time evaluation: one unit per patient at risk at the landmark.
///
/// Patients whose outcome occurred at or before `t_star` are excluded;
/// patients with no recorded state at `t_star` are skipped. The policy is
/// applied afresh to the state at `t_star` — stored alert flags play no
/// part — so one silent cohort can be evaluated under many thresholds.
/// Truth is an outcome in `(t_star, t_star + lookahead]`, or any outcome
/// after `t_star` when no lookahead is given.
pub fn fixed_time(
    cohort: &Cohort,
    policy: &AlertPolicy,
    t_star: u64,
    lookahead: Option<u64>,
) -> Result<ConfusionCounts> {
    if cohort.mode() == Mode::Active {
        return Err(Error::ActiveCohort { operation: "fixed_time" });
    }
    if lookahead == Some(0) {
        return Err(Error::InvalidLookahead);
    }
    let max_t = cohort.max_time().unwrap_or(0);
    if cohort.is_empty() || t_star > max_t {
        return Err(Error::TStarOutOfRange { t_star, max_t });
    }
    let mut counts = ConfusionCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
        strategy: Strategy::FixedTime,
        unit: Unit::Patient,
        config: EvalParams {
            lookahead,
            t_star: Some(t_star),
            threshold: Some(policy.threshold),
        },
    };
    for tr in cohort.trajectories() {
        // At-risk rule: an outcome at or before the landmark removes the
        // patient from the question entirely.
        if tr.outcome_time().map_or(false, |ot| ot <= t_star) {
            continue;
        }
        // No recorded state at the landmark (short or gappy trajectory):
        // nothing to score.
        let Some(tp) = tr.timepoint_at(t_star) else {
            continue;
        };
        let score = policy.score_timepoint(tr.patient_id(), tp)?;
        let predicted = score >= policy.threshold;
        let actual = match (tr.outcome_time(), lookahead) {
            (Some(ot), Some(window)) => ot > t_star && ot <= t_star + window,
            (Some(ot), None) => ot > t_star,
            (None, _) => false,
        };
        tally(&mut counts, predicted, actual);
    }
    Ok(counts)
}

/// First-alert evaluation: one unit per patient.
///
/// Prediction is "ever alerted", truth is "ever had the outcome". This is
/// the unit structure of a deployed alerting system — each patient either
/// triggered a response or did not — and the only strategy whose true
/// positives feed the impact estimators directly. Requires snoozed cohorts;
/// a patient with two alerts is an error, not a louder prediction.
pub fn first_alert(cohort: &Cohort) -> Result<ConfusionCounts> {
    if cohort.mode() == Mode::Active {
        return Err(Error::ActiveCohort { operation: "first_alert" });
    }
    let mut counts = ConfusionCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
        strategy: Strategy::FirstAlert,
        unit: Unit::Patient,
        config: EvalParams::default(),
    };
    for tr in cohort.trajectories() {
        let alerts = tr.alert_count();
        if alerts > 1 {
            return Err(Error::SnoozeViolation {
                patient_id: tr.patient_id().to_string(),
                message: format!("{alerts} alerts; first-alert evaluation needs at most one"),
            });
        }
        tally(&mut counts, tr.has_alert(), tr.has_outcome());
    }
    Ok(counts)
}

fn tally(counts: &mut ConfusionCounts, predicted: bool, actual: bool) {
    match (predicted, actual) {
        (true, true) => counts.tp += 1,
        (true, false) => counts.fp += 1,
        (false, true) => counts.fn_ += 1,
        (false, false) => counts.tn += 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{TimePoint, Trajectory};
    use crate::risk::AlertPolicy;

    fn tp(t: u64) -> TimePoint {
        TimePoint {
            t,
            position: 0.0,
            velocity: 0.0,
            acceleration: 0.0,
            score: None,
            alert: false,
            outcome: false,
        }
    }

    /// Builds a trajectory from (time, alert, outcome, score) tuples.
    fn traj(id: &str, rows: &[(u64, bool, bool, Option<f64>)]) -> Trajectory {
        let pts = rows
            .iter()
            .map(|&(t, alert, outcome, score)| TimePoint { alert, outcome, score, ..tp(t) })
            .collect();
        Trajectory::new(id, pts).unwrap()
    }

    fn silent(trajectories: Vec<Trajectory>) -> Cohort {
        Cohort::new(trajectories, Mode::Silent, 0, "test").unwrap()
    }

    /// Two-patient aggregated-time worked example with lookahead 2.
    ///
    /// Patient A runs t = 0..5 with alerts at t = 2 and t = 4 and the
    /// outcome at t = 5; the five live rows classify as TN, TN, FP, FN, TP.
    /// Patient B runs t = 0..2 with one alert at t = 2 and no outcome,
    /// classifying as TN, TN, FP.
    #[test]
    fn aggregated_time_worked_example() {
        let a = traj(
            "A",
            &[
                (0, false, false, None),
                (1, false, false, None),
                (2, true, false, None),
                (3, false, false, None),
                (4, true, false, None),
                (5, false, true, None),
            ],
        );
        let b = traj(
            "B",
            &[(0, false, false, None), (1, false, false, None), (2, true, false, None)],
        );
        let counts = aggregated_time(&silent(vec![a, b]), 2).unwrap();
        assert_eq!((counts.tp, counts.fp, counts.fn_, counts.tn), (1, 2, 1, 4));
        assert_eq!(counts.positives(), 3);
        assert_eq!(counts.unit, Unit::PatientTimepoint);
        assert_eq!(counts.config.lookahead, Some(2));
    }

    #[test]
    fn aggregated_window_is_half_open_on_the_left() {
        // Alert on the outcome row's predecessor: outcome at t+1 is inside
        // (t, t+1], so lookahead 1 already captures the next step.
        let a = traj("A", &[(0, true, false, None), (1, false, true, None)]);
        let counts = aggregated_time(&silent(vec![a]), 1).unwrap();
        assert_eq!((counts.tp, counts.fp, counts.fn_, counts.tn), (1, 0, 0, 0));

        // The outcome row itself is never a unit: a one-live-row patient
        // contributes exactly one classification.
        let b = traj("B", &[(0, false, false, None), (1, false, true, None)]);
        let counts = aggregated_time(&silent(vec![b]), 5).unwrap();
        assert_eq!(counts.total(), 1);
        assert_eq!(counts.fn_, 1);
    }

    /// Four-patient fixed-time worked example at t* = 5 with recorded
    /// scores and threshold 0.5: high-score/no-outcome (FP),
    /// high-score/outcome (TP), low-score/no-outcome (TN),
    /// low-score/outcome (FN) — one of each.
    #[test]
    fn fixed_time_worked_example() {
        let rows_no_outcome = |score: f64, alert_at_2: bool| {
            vec![
                (0, false, false, Some(0.2)),
                (1, false, false, Some(0.2)),
                (2, alert_at_2, false, Some(0.2)),
                (3, false, false, Some(0.2)),
                (4, false, false, Some(0.2)),
                (5, false, false, Some(score)),
                (6, false, false, Some(0.2)),
            ]
        };
        let rows_outcome_8 = |score: f64| {
            vec![
                (0, false, false, Some(0.2)),
                (1, false, false, Some(0.2)),
                (2, false, false, Some(0.2)),
                (3, false, false, Some(0.2)),
                (4, false, false, Some(0.2)),
                (5, false, false, Some(score)),
                (6, false, false, Some(0.2)),
                (7, false, false, Some(0.2)),
                (8, false, true, None),
            ]
        };
        let p1 = traj("P1", &rows_no_outcome(0.9, false));
        let p2 = traj("P2", &rows_outcome_8(0.9));
        // P3 carries a stored alert at t = 2; re-querying at t* must ignore it.
        let p3 = traj("P3", &rows_no_outcome(0.1, true));
        let p4 = traj("P4", &rows_outcome_8(0.1));
        let cohort = silent(vec![p1, p2, p3, p4]);
        let policy = AlertPolicy::recorded(0.5).unwrap();
        let counts = fixed_time(&cohort, &policy, 5, None).unwrap();
        assert_eq!((counts.tp, counts.fp, counts.fn_, counts.tn), (1, 1, 1, 1));
        assert_eq!(counts.unit, Unit::Patient);
        assert_eq!(counts.config.t_star, Some(5));
        assert_eq!(counts.config.threshold, Some(0.5));

        // A window that ends before the outcomes flips TP->FP and FN->TN.
        let windowed = fixed_time(&cohort, &policy, 5, Some(2)).unwrap();
        assert_eq!((windowed.tp, windowed.fp, windowed.fn_, windowed.tn), (0, 2, 0, 2));
        // A window that reaches them (8 is inside (5, 8]) restores the counts.
        let windowed = fixed_time(&cohort, &policy, 5, Some(3)).unwrap();
        assert_eq!((windowed.tp, windowed.fp, windowed.fn_, windowed.tn), (1, 1, 1, 1));
    }

    #[test]
    fn fixed_time_excludes_and_skips() {
        // Outcome at the landmark or before: excluded. No row at the
        // landmark: skipped. Neither contributes a unit.
        let early_outcome = traj(
            "E",
            &[(0, false, false, Some(0.9)), (1, false, true, None)],
        );
        let at_landmark = traj(
            "L",
            &[
                (0, false, false, Some(0.9)),
                (1, false, false, Some(0.9)),
                (2, false, true, None),
            ],
        );
        let short = traj("S", &[(0, false, false, Some(0.9))]);
        let gap = traj(
            "G",
            &[(0, false, false, Some(0.9)), (1, false, false, Some(0.9)), (3, false, false, Some(0.9))],
        );
        let evaluable = traj(
            "V",
            &[
                (0, false, false, Some(0.1)),
                (1, false, false, Some(0.1)),
                (2, false, false, Some(0.9)),
                (3, false, false, Some(0.1)),
            ],
        );
        let cohort = silent(vec![early_outcome, at_landmark, short, gap, evaluable]);
        let policy = AlertPolicy::recorded(0.5).unwrap();
        let counts = fixed_time(&cohort, &policy, 2, None).unwrap();
        assert_eq!(counts.total(), 1, "only V has an at-risk state at t*=2");
        assert_eq!(counts.fp, 1);
    }

    #[test]
    fn fixed_time_t_star_out_of_range() {
        let cohort = silent(vec![traj("A", &[(0, false, false, Some(0.5)), (1, false, false, Some(0.5))])]);
        let policy = AlertPolicy::recorded(0.5).unwrap();
        assert!(matches!(
            fixed_time(&cohort, &policy, 9, None),
            Err(Error::TStarOutOfRange { t_star: 9, max_t: 1 })
        ));
        let empty = silent(vec![]);
        assert!(matches!(
            fixed_time(&empty, &policy, 0, None),
            Err(Error::TStarOutOfRange { .. })
        ));
    }

    /// Four-patient first-alert worked example: never-alerted/no-outcome
    /// (TN), alerted/no-outcome (FP), never-alerted/outcome (FN),
    /// alerted/outcome (TP) — one of each.
    #[test]
    fn first_alert_worked_example() {
        let p1 = traj("P1", &[(0, false, false, None), (1, false, false, None)]);
        let p2 = traj("P2", &[(0, false, false, None), (1, false, false, None), (2, true, false, None)]);
        let p3 = traj("P3", &[(0, false, false, None), (1, false, false, None), (4, false, true, None)]);
        let p4 = traj("P4", &[(0, false, false, None), (1, true, false, None), (3, false, true, None)]);
        let counts = first_alert(&silent(vec![p1, p2, p3, p4])).unwrap();
        assert_eq!((counts.tp, counts.fp, counts.fn_, counts.tn), (1, 1, 1, 1));
        assert_eq!(counts.unit, Unit::Patient);
        assert_eq!(counts.strategy, Strategy::FirstAlert);
    }

    #[test]
    fn first_alert_rejects_unsnoozed_patients() {
        let p = traj(
            "P",
            &[(0, true, false, None), (1, true, false, None)],
        );
        match first_alert(&silent(vec![p])) {
            Err(Error::SnoozeViolation { patient_id, .. }) => assert_eq!(patient_id, "P"),
            other => panic!("expected SnoozeViolation, got {other:?}"),
        }
    }

    #[test]
    fn evaluators_reject_active_cohorts() {
        let tr = traj("A", &[(0, false, false, Some(0.5))]);
        let active = Cohort::new(vec![tr], Mode::Active, 0, "test").unwrap();
        let policy = AlertPolicy::recorded(0.5).unwrap();
        assert!(matches!(
            aggregated_time(&active, 5),
            Err(Error::ActiveCohort { operation: "aggregated_time" })
        ));
        assert!(matches!(
            fixed_time(&active, &policy, 0, None),
            Err(Error::ActiveCohort { operation: "fixed_time" })
        ));
        assert!(matches!(
            first_alert(&active),
            Err(Error::ActiveCohort { operation: "first_alert" })
        ));
    }

    #[test]
    fn counts_are_invariant_to_patient_order() {
        let build = |ids: [&str; 3]| {
            let a = traj(ids[0], &[(0, true, false, None), (1, false, true, None)]);
            let b = traj(ids[1], &[(0, false, false, None), (1, false, false, None)]);
            let c = traj(ids[2], &[(0, true, false, None)]);
            silent(vec![a, b, c])
        };
        // Same three patients in different insertion orders: identical
        // tallies (ids differ, but each id keeps its row pattern).
        let fwd = aggregated_time(&build(["A", "B", "C"]), 1).unwrap();
        let c1 = {
            let c = traj("C", &[(0, true, false, None)]);
            let a = traj("A", &[(0, true, false, None), (1, false, true, None)]);
            let b = traj("B", &[(0, false, false, None), (1, false, false, None)]);
            aggregated_time(&silent(vec![c, a, b]), 1).unwrap()
        };
        assert_eq!((fwd.tp, fwd.fp, fwd.fn_, fwd.tn), (c1.tp, c1.fp, c1.fn_, c1.tn));

        let first_fwd = first_alert(&build(["A", "B", "C"])).unwrap();
        let first_rev = {
            let c = traj("C", &[(0, true, false, None)]);
            let b = traj("B", &[(0, false, false, None), (1, false, false, None)]);
            let a = traj("A", &[(0, true, false, None), (1, false, true, None)]);
            first_alert(&silent(vec![c, b, a])).unwrap()
        };
        assert_eq!(
            (first_fwd.tp, first_fwd.fp, first_fwd.fn_, first_fwd.tn),
            (first_rev.tp, first_rev.fp, first_rev.fn_, first_rev.tn)
        );
    }

    #[test]
    fn dispatcher_validates_and_routes() {
        let a = traj("A", &[(0, true, false, Some(0.9)), (1, false, true, None)]);
        let cohort = silent(vec![a]);

        let agg = evaluate(&cohort, &EvalConfig::aggregated(2), None).unwrap();
        assert_eq!(agg.strategy, Strategy::AggregatedTime);
        assert_eq!(agg.tp, 1);

        let policy = AlertPolicy::recorded(0.5).unwrap();
        let fixed = evaluate(&cohort, &EvalConfig::fixed(0, None), Some(&policy)).unwrap();
        assert_eq!(fixed.strategy, Strategy::FixedTime);
        assert_eq!(fixed.tp, 1, "score 0.9 at t*=0 and outcome at t=1");

        let first = evaluate(&cohort, &EvalConfig::first_alert(), None).unwrap();
        assert_eq!(first.tp, 1);

        // Parameter/strategy mismatches fail loudly.
        let mut config = EvalConfig::aggregated(2);
        config.lookahead = None;
        assert!(matches!(evaluate(&cohort, &config, None), Err(Error::MissingLookahead)));

        let mut config = EvalConfig::fixed(0, None);
        config.t_star = None;
        assert!(matches!(
            evaluate(&cohort, &config, Some(&policy)),
            Err(Error::MissingTStar)
        ));

        let mut config = EvalConfig::first_alert();
        config.lookahead = Some(3);
        assert!(matches!(evaluate(&cohort, &config, None), Err(Error::LookaheadForbidden)));

        assert!(matches!(
            evaluate(&cohort, &EvalConfig::fixed(0, None), None),
            Err(Error::MissingPolicy)
        ));

        assert!(matches!(
            evaluate(&cohort, &EvalConfig::aggregated(0), None),
            Err(Error::InvalidLookahead)
        ));
    }
}
