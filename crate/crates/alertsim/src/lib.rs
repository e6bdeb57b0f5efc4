//! Counterfactual simulation and evaluation for repeated-prediction alert models.
//!
//! Clinical early-warning systems score a patient repeatedly over time and
//! raise an alert when the score crosses a threshold. Evaluating such a system
//! retrospectively is subtle: the historical data contain no alerts, so every
//! "alert" in a retrospective evaluation is a *virtual* one that never had a
//! chance to change the patient's course. This crate makes that distinction
//! executable:
//!
//! - [`simulator`] generates **silent** cohorts (no interventions; what
//!   retrospective data look like) and **active** cohorts (a live policy
//!   triggers interventions) from the same point-mass dynamics. Noise is a
//!   pure function of `(patient_seed, t)`, so a silent run and an active run
//!   with the same seed agree exactly until the first alert — common random
//!   numbers turn counterfactual claims into machine-checkable identities.
//! - [`risk`] builds lookahead labels from silent cohorts, fits a logistic
//!   risk model by gradient descent, and wraps it with a threshold and a
//!   snooze rule into an [`risk::AlertPolicy`].
//! - [`evaluate`] implements the three retrospective evaluation strategies —
//!   aggregated time (per patient-timepoint with a lookahead window), fixed
//!   time (per patient at a single `t*`), and first alert (per patient,
//!   alerts snoozed after the first) — each producing
//!   [`domain::ConfusionCounts`].
//! - [`estimate`] turns those counts into deployment-relevant quantities
//!   (expected outcomes under a risk ratio, prevented-outcome upper bounds,
//!   alert workload, sensitivity analysis). Aggregated-time counts are
//!   rejected by these estimators: per-timepoint tallies from silent data do
//!   not correspond to anything a deployed system would do.
//! - [`trial`] runs a simulated multi-arm randomized trial (one control arm,
//!   optional common random numbers across arms) so every retrospective
//!   estimate can be checked against live prospective ground truth.
//! - [`io`] ingests external score streams from CSV, persists models and
//!   cohorts, and renders counts/trial/sensitivity reports as CSV, JSON, or
//!   aligned text tables.
//! - [`study`] chains all of the above into the end-to-end reference study
//!   behind the `reproduce-paper` CLI subcommand.
//!
//! # Quick start
//!
//! ```
//! use alertsim::domain::confusion_metrics;
//! use alertsim::evaluate::first_alert;
//! use alertsim::estimate::prevented_upper_bound;
//! use alertsim::risk::{apply_policy_silent, build_labels, fit_logistic, AlertPolicy, FitConfig};
//! use alertsim::simulator::{generate_cohort, DynamicsConfig, InterventionSpec};
//!
//! # fn main() -> alertsim::Result<()> {
//! let dynamics = DynamicsConfig::default();
//! let silent = InterventionSpec::none();
//!
//! // Retrospective data: 200 patients, no interventions.
//! let train = generate_cohort(200, 7, &dynamics, None, &silent)?;
//! let test = generate_cohort(200, 8, &dynamics, None, &silent)?;
//!
//! // Fit a 5-step-lookahead risk model and apply it silently at threshold 0.4.
//! let model = fit_logistic(&build_labels(&train, 5)?, 5, &FitConfig::default())?;
//! let policy = AlertPolicy::logistic(model, 0.4)?;
//! let scored = apply_policy_silent(&policy, &test)?;
//!
//! // First-alert evaluation: its true-positive count bounds what any
//! // alert-triggered intervention could prevent.
//! let counts = first_alert(&scored)?;
//! let bound = prevented_upper_bound(&counts)?;
//! assert!(bound <= counts.tp + counts.fn_);
//! println!("{:?}", confusion_metrics(&counts));
//! # Ok(())
//! # }
//! ```
//!
//! # Runnable examples
//!
//! Each major capability has a self-contained example under `examples/`:
//!
//! | Example | Shows |
//! |---|---|
//! | `simulate_cohort` | Point-mass dynamics, outcome freezing, cohort generation |
//! | `counterfactual_pairing` | Silent/active runs diverging only after the first alert |
//! | `train_risk_model` | Lookahead labels, gradient-descent fit, gradient check |
//! | `evaluate_three_ways` | All three evaluation strategies on one cohort |
//! | `estimate_impact` | Bounds, workload, risk-ratio sensitivity, model comparison |
//! | `run_trial` | Multi-arm trial vs. retrospective predictions, paired and not |
//! | `ingest_scores` | Score-stream CSV ingestion, validation errors, threshold policies |
//! | `reproduce_study` | The full reference study end-to-end |
//!
//! Run one with `cargo run --example evaluate_three_ways`.

pub mod cli;
pub mod domain;
pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod io;
pub mod risk;
pub mod simulator;
pub mod study;
pub mod trial;

pub use error::{Error, Result};
