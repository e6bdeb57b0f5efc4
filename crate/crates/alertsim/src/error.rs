//! Crate-wide error type.
//!
//! Every fallible operation in the crate returns [`Result`]. Ingestion errors
//! carry 1-based file line numbers (the header is line 1, the first data row
//! is line 2) so a malformed record can be located directly in an editor.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    // ---- configuration and domain validation ----
    /// Dynamics configuration failed validation.
    #[error("invalid dynamics config: {0}")]
    InvalidDynamics(String),

    /// Intervention specification failed validation.
    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),

    /// A simulation step saw or produced a non-finite value.
    #[error("non-finite value in simulation: {0}")]
    NonFinite(String),

    /// A trajectory violated a structural invariant.
    #[error("invalid trajectory for patient {patient_id}: {message}")]
    InvalidTrajectory { patient_id: String, message: String },

    /// Two trajectories in one cohort share a patient id.
    #[error("duplicate patient id {0} in cohort")]
    DuplicatePatientId(String),

    /// A cohort must contain at least one patient for this operation.
    #[error("cohort size must be at least 1")]
    InvalidCohortSize,

    // ---- risk model ----
    /// The operation is defined on silent cohorts only.
    #[error(
        "{operation} requires a silent cohort; this cohort is active \
         (interventions shaped its trajectories)"
    )]
    ActiveCohort { operation: &'static str },

    /// No training examples were supplied.
    #[error("training set is empty")]
    EmptyTrainingSet,

    /// Single-class data make the unpenalized optimum infinite.
    #[error(
        "all training labels are one class; set l2_penalty > 0 so the \
         optimum is finite"
    )]
    SingleClassWithoutPenalty,

    /// The optimizer hit its iteration cap before reaching the tolerance.
    #[error(
        "optimizer did not converge after {iters} iterations \
         (gradient norm {gradient_norm:.3e}, tolerance {tolerance:.3e})"
    )]
    DidNotConverge {
        iters: usize,
        gradient_norm: f64,
        tolerance: f64,
    },

    /// Covariate vector length does not match the model.
    #[error("covariate dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Alert thresholds must lie strictly between 0 and 1.
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),

    /// Lookahead windows must cover at least one step.
    #[error("lookahead must be at least 1")]
    InvalidLookahead,

    /// Fit configuration failed validation.
    #[error("invalid fit config: {0}")]
    InvalidFitConfig(String),

    /// Model construction failed validation.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    // ---- scoring ----
    /// Recorded-score policies replay stored scores and cannot run live.
    #[error(
        "a recorded-score policy cannot drive a live simulation: stored \
         scores exist only in ingested or previously scored data"
    )]
    RecordedScorerInSimulation,

    /// A recorded-score policy found no score where it needed one.
    #[error(
        "patient {patient_id} has no recorded score at t={t}, required by a \
         recorded-score policy"
    )]
    MissingScore { patient_id: String, t: u64 },

    // ---- evaluation ----
    /// The aggregated-time strategy needs a lookahead window.
    #[error("aggregated-time evaluation requires a lookahead window")]
    MissingLookahead,

    /// The fixed-time strategy needs an evaluation timepoint.
    #[error("fixed-time evaluation requires t_star")]
    MissingTStar,

    /// The fixed-time strategy needs a policy to query at `t_star`.
    #[error("fixed-time evaluation requires an alert policy to query at t_star")]
    MissingPolicy,

    /// First-alert evaluation rejects lookahead windows: there is no place
    /// to put a window for a patient who never alerted.
    #[error(
        "first-alert evaluation does not take a lookahead window: a window \
         cannot be placed for patients who never alerted"
    )]
    LookaheadForbidden,

    /// `t_star` lies beyond every recorded timepoint.
    #[error("t_star={t_star} is beyond the last recorded time ({max_t}) in the cohort")]
    TStarOutOfRange { t_star: u64, max_t: u64 },

    /// An alert stream handed to the first-alert evaluator was not snoozed.
    #[error("patient {patient_id} violates snooze semantics: {message}")]
    SnoozeViolation { patient_id: String, message: String },

    // ---- estimators ----
    /// Deployment estimators refuse aggregated-time counts.
    #[error(
        "{operation} rejects aggregated-time counts: per-timepoint tallies \
         from silent data do not correspond to the alerts a deployed system \
         would raise or the outcomes it could prevent; use fixed-time or \
         first-alert counts instead (the CLI flag \
         --force-aggregated-estimates computes them anyway, for demonstration)"
    )]
    AggregatedTimeRejected { operation: &'static str },

    /// Risk-ratio sensitivity analysis is defined for first-alert counts.
    #[error("rho sensitivity is defined for first-alert counts only, got {0}")]
    SensitivityRequiresFirstAlert(String),

    /// Risk ratios live in [0, 1]: 0 is a perfect intervention, 1 no effect.
    #[error("risk ratio must lie in [0, 1], got {0}")]
    InvalidRiskRatio(f64),

    /// True positives are a subset of outcomes.
    #[error("true positives ({tp}) cannot exceed total outcomes ({n_outcomes})")]
    TpExceedsOutcomes { tp: u64, n_outcomes: u64 },

    // ---- trial ----
    /// Trial configuration failed validation.
    #[error("invalid trial config: {0}")]
    InvalidTrialConfig(String),

    // ---- ingestion and reports ----
    /// The CSV header must match the documented schema exactly
    /// (`patient_id,time,score,outcome` for score streams, the full
    /// eight-column layout for cohort exports).
    #[error(
        "unrecognized CSV header `{found}`: score streams start with \
         `patient_id,time,score,outcome`, cohort exports with \
         `patient_id,time,position,velocity,acceleration,score,alert,outcome`"
    )]
    CsvHeader { found: String },

    /// A score fell outside [0, 1].
    #[error("row {row}: score {value} is outside [0, 1]")]
    ScoreOutOfRange { row: usize, value: f64 },

    /// A patient's times decreased.
    #[error(
        "row {row}: time {t} for patient {patient_id} is not greater than \
         the patient's previous time {prev}"
    )]
    UnsortedTimes {
        row: usize,
        patient_id: String,
        t: u64,
        prev: u64,
    },

    /// The same (patient, time) pair appeared twice.
    #[error("row {row}: duplicate record for patient {patient_id} at time {t}")]
    DuplicateTime {
        row: usize,
        patient_id: String,
        t: u64,
    },

    /// A record followed a patient's outcome.
    #[error(
        "row {row}: patient {patient_id} has a record after their outcome \
         (the outcome must be the patient's final record)"
    )]
    OutcomeNotFinal { row: usize, patient_id: String },

    /// A row failed to parse (bad field count, non-numeric value, or an
    /// outcome flag other than 0/1).
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    /// A config file line failed to parse.
    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// A persisted model file was structurally invalid.
    #[error("model file: {0}")]
    ModelFile(String),

    /// A command-line invocation that cannot be carried out as asked.
    #[error("{0}")]
    Usage(String),

    // ---- passthrough ----
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
