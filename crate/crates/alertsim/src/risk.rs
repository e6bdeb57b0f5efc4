//! Risk modeling: lookahead labels, logistic regression fit by gradient
//! descent, and threshold/snooze alert policies.
//!
//! The label for a patient-timepoint `t` is whether the outcome occurs in the
//! window `(t, t + lookahead]`. Labels are built from silent cohorts only —
//! trajectories shaped by interventions would contaminate them — and exclude
//! the outcome row and anything after it.
//!
//! The fit minimizes the mean negative log-likelihood plus an L2 penalty
//! `(l2/2)·(‖w‖² + b²)` with full-batch gradient descent and a backtracking
//! line search. Penalizing the intercept too keeps the optimum finite even
//! when every label is the same class.

use serde::{Deserialize, Serialize};

use crate::domain::{Cohort, Mode, TimePoint, Trajectory};
use crate::error::{Error, Result};

/// Feature names for simulator-generated covariates.
pub const SIMULATOR_FEATURES: [&str; 3] = ["position", "velocity", "acceleration"];

/// One training example: covariates paired with a lookahead-outcome label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub covariates: Vec<f64>,
    pub label: bool,
}

/// A fitted logistic risk model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct LogisticModel {
    feature_names: Vec<String>,
    weights: Vec<f64>,
    intercept: f64,
    lookahead: u64,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    feature_names: Vec<String>,
    weights: Vec<f64>,
    intercept: f64,
    lookahead: u64,
}

impl LogisticModel {
    pub fn new(
        feature_names: Vec<String>,
        weights: Vec<f64>,
        intercept: f64,
        lookahead: u64,
    ) -> Result<Self> {
        if feature_names.len() != weights.len() {
            return Err(Error::InvalidModel(format!(
                "{} feature names for {} weights",
                feature_names.len(),
                weights.len()
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidModel("no features".into()));
        }
        if !intercept.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidModel("non-finite coefficients".into()));
        }
        if lookahead == 0 {
            return Err(Error::InvalidLookahead);
        }
        Ok(Self {
            feature_names,
            weights,
            intercept,
            lookahead,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// The label window length the model was trained for.
    pub fn lookahead(&self) -> u64 {
        self.lookahead
    }
}

impl TryFrom<RawModel> for LogisticModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        LogisticModel::new(raw.feature_names, raw.weights, raw.intercept, raw.lookahead)
    }
}

impl From<LogisticModel> for RawModel {
    fn from(m: LogisticModel) -> Self {
        RawModel {
            feature_names: m.feature_names,
            weights: m.weights,
            intercept: m.intercept,
            lookahead: m.lookahead,
        }
    }
}

/// Where a policy's scores come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    /// Score covariates with a fitted model.
    Logistic(LogisticModel),
    /// Replay scores already stored on the timepoints (ingested streams).
    Recorded,
}

/// A risk scorer plus threshold and snooze rule: maps timepoints to alerts.
///
/// The threshold comparison is `score >= threshold` — an alert fires at
/// exactly the cutoff. With `snooze = true` (the default) a patient's alerts
/// stop after their first; alerts never occur at or after an outcome in
/// either mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertPolicy {
    pub scorer: Scorer,
    pub threshold: f64,
    pub snooze: bool,
}

impl AlertPolicy {
    /// Model-backed policy with snooze on.
    pub fn logistic(model: LogisticModel, threshold: f64) -> Result<Self> {
        Self::validate_threshold(threshold)?;
        Ok(Self {
            scorer: Scorer::Logistic(model),
            threshold,
            snooze: true,
        })
    }

    /// Recorded-score policy with snooze on: alerts wherever a stored score
    /// meets the threshold. Cannot drive live simulations.
    pub fn recorded(threshold: f64) -> Result<Self> {
        Self::validate_threshold(threshold)?;
        Ok(Self {
            scorer: Scorer::Recorded,
            threshold,
            snooze: true,
        })
    }

    pub fn with_snooze(mut self, snooze: bool) -> Self {
        self.snooze = snooze;
        self
    }

    fn validate_threshold(threshold: f64) -> Result<()> {
        if !threshold.is_finite() || threshold <= 0.0 || threshold >= 1.0 {
            return Err(Error::InvalidThreshold(threshold));
        }
        Ok(())
    }

    /// Scores raw covariates. Recorded-score policies have no way to do
    /// this, which is what makes them unusable in live simulation.
    pub fn score_covariates(&self, covariates: &[f64]) -> Result<f64> {
        match &self.scorer {
            Scorer::Logistic(model) => predict(model, covariates),
            Scorer::Recorded => Err(Error::RecordedScorerInSimulation),
        }
    }

    /// Scores a recorded timepoint: the model on its covariates, or the
    /// stored score for recorded-score policies.
    pub fn score_timepoint(&self, patient_id: &str, tp: &TimePoint) -> Result<f64> {
        match &self.scorer {
            Scorer::Logistic(model) => {
                predict(model, &[tp.position, tp.velocity, tp.acceleration])
            }
            Scorer::Recorded => tp.score.ok_or_else(|| Error::MissingScore {
                patient_id: patient_id.to_string(),
                t: tp.t,
            }),
        }
    }
}

/// Builds lookahead labels from a silent cohort: one example per live
/// patient-timepoint, labeled true iff the outcome falls in
/// `(t, t + lookahead]`.
pub fn build_labels(cohort: &Cohort, lookahead: u64) -> Result<Vec<LabeledExample>> {
    if cohort.mode() == Mode::Active {
        return Err(Error::ActiveCohort { operation: "build_labels" });
    }
    if lookahead == 0 {
        return Err(Error::InvalidLookahead);
    }
    let mut examples = Vec::new();
    for tr in cohort.trajectories() {
        let outcome_time = tr.outcome_time();
        for tp in tr.live_timepoints() {
            let label = outcome_time.map_or(false, |ot| ot > tp.t && ot <= tp.t + lookahead);
            examples.push(LabeledExample {
                covariates: vec![tp.position, tp.velocity, tp.acceleration],
                label,
            });
        }
    }
    Ok(examples)
}

/// Optimizer settings for [`fit_logistic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iters: usize,
    pub l2_penalty: f64,
    /// Convergence tolerance on the L2 norm of the full gradient.
    pub tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            l2_penalty: 1e-4,
            tolerance: 1e-7,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidFitConfig("max_iters must be at least 1".into()));
        }
        if !self.l2_penalty.is_finite() || self.l2_penalty < 0.0 {
            return Err(Error::InvalidFitConfig("l2_penalty must be finite and >= 0".into()));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::InvalidFitConfig("tolerance must be finite and > 0".into()));
        }
        Ok(())
    }
}

/// Numerically stable `log(1 + exp(x))`.
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable logistic sigmoid.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Penalized mean negative log-likelihood and its analytic gradient at
/// `(weights, intercept)`. Returns `(loss, d_weights, d_intercept)`.
///
/// Exposed as a diagnostics hook: tests compare this gradient against
/// central finite differences of the loss.
pub fn loss_and_gradient(
    examples: &[LabeledExample],
    weights: &[f64],
    intercept: f64,
    l2_penalty: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    if examples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let dim = weights.len();
    let n = examples.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; dim];
    let mut grad_b = 0.0;
    for ex in examples {
        if ex.covariates.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: ex.covariates.len() });
        }
        let z = intercept
            + ex.covariates
                .iter()
                .zip(weights)
                .map(|(x, w)| x * w)
                .sum::<f64>();
        let y = if ex.label { 1.0 } else { 0.0 };
        // -log p(y | z) = log(1 + e^z) - y·z
        loss += log1p_exp(z) - y * z;
        let residual = sigmoid(z) - y;
        for (g, x) in grad_w.iter_mut().zip(&ex.covariates) {
            *g += residual * x;
        }
        grad_b += residual;
    }
    loss /= n;
    for g in grad_w.iter_mut() {
        *g /= n;
    }
    grad_b /= n;

    // Ridge term (intercept included: keeps single-class fits finite).
    let sq = weights.iter().map(|w| w * w).sum::<f64>() + intercept * intercept;
    loss += 0.5 * l2_penalty * sq;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g += l2_penalty * w;
    }
    grad_b += l2_penalty * intercept;

    Ok((loss, grad_w, grad_b))
}

/// Fits a logistic model by full-batch gradient descent with a backtracking
/// (Armijo) line search. Deterministic given identical inputs.
///
/// `lookahead` records the label window the examples were built with; it is
/// stamped into the returned model.
pub fn fit_logistic(
    examples: &[LabeledExample],
    lookahead: u64,
    config: &FitConfig,
) -> Result<LogisticModel> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let dim = examples[0].covariates.len();
    if dim == 0 {
        return Err(Error::InvalidFitConfig("examples have no covariates".into()));
    }
    for ex in examples {
        if ex.covariates.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: ex.covariates.len() });
        }
        if ex.covariates.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidFitConfig("non-finite covariate".into()));
        }
    }
    let has_pos = examples.iter().any(|e| e.label);
    let has_neg = examples.iter().any(|e| !e.label);
    if config.l2_penalty == 0.0 && !(has_pos && has_neg) {
        return Err(Error::SingleClassWithoutPenalty);
    }

    let mut weights = vec![0.0; dim];
    let mut intercept = 0.0;
    let (mut loss, mut grad_w, mut grad_b) =
        loss_and_gradient(examples, &weights, intercept, config.l2_penalty)?;

    const ARMIJO_C: f64 = 1e-4;
    const SHRINK: f64 = 0.5;
    const MIN_STEP: f64 = 1e-18;

    let mut grad_norm = f64::INFINITY;
    for _ in 0..config.max_iters {
        let grad_sq = grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b;
        grad_norm = grad_sq.sqrt();
        if grad_norm <= config.tolerance {
            let names = default_feature_names(dim);
            return LogisticModel::new(names, weights, intercept, lookahead);
        }

        // Backtrack along the negative gradient until the Armijo condition
        // holds: f(x - s·g) <= f(x) - c·s·‖g‖².
        let mut step = 1.0;
        loop {
            let cand_w: Vec<f64> = weights.iter().zip(&grad_w).map(|(w, g)| w - step * g).collect();
            let cand_b = intercept - step * grad_b;
            let (cand_loss, cand_gw, cand_gb) =
                loss_and_gradient(examples, &cand_w, cand_b, config.l2_penalty)?;
            if cand_loss <= loss - ARMIJO_C * step * grad_sq {
                weights = cand_w;
                intercept = cand_b;
                loss = cand_loss;
                grad_w = cand_gw;
                grad_b = cand_gb;
                break;
            }
            step *= SHRINK;
            if step < MIN_STEP {
                // No descent possible at floating-point resolution.
                return Err(Error::DidNotConverge {
                    iters: config.max_iters,
                    gradient_norm: grad_norm,
                    tolerance: config.tolerance,
                });
            }
        }
    }
    let grad_sq = grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b;
    grad_norm = grad_norm.min(grad_sq.sqrt());
    Err(Error::DidNotConverge {
        iters: config.max_iters,
        gradient_norm: grad_norm,
        tolerance: config.tolerance,
    })
}

fn default_feature_names(dim: usize) -> Vec<String> {
    if dim == SIMULATOR_FEATURES.len() {
        SIMULATOR_FEATURES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..dim).map(|i| format!("x{i}")).collect()
    }
}

/// Predicted outcome probability, `sigmoid(intercept + weights·covariates)`,
/// clamped into the open interval (0, 1).
pub fn predict(model: &LogisticModel, covariates: &[f64]) -> Result<f64> {
    if covariates.len() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            got: covariates.len(),
        });
    }
    let z = model.intercept
        + covariates
            .iter()
            .zip(&model.weights)
            .map(|(x, w)| x * w)
            .sum::<f64>();
    Ok(sigmoid(z).clamp(1e-15, 1.0 - 1e-15))
}

/// Applies a policy to a silent cohort, filling in virtual alerts (and, for
/// model-backed policies, scores) without touching the physics.
///
/// Every live timepoint gets a score; alerts obey the threshold and snooze
/// rule. Alerts are never placed at or after an outcome. The result is still
/// a silent cohort: these alerts never happened.
pub fn apply_policy_silent(policy: &AlertPolicy, cohort: &Cohort) -> Result<Cohort> {
    if cohort.mode() == Mode::Active {
        return Err(Error::ActiveCohort { operation: "apply_policy_silent" });
    }
    let mut scored = Vec::with_capacity(cohort.len());
    for tr in cohort.trajectories() {
        scored.push(score_trajectory(policy, tr)?);
    }
    Cohort::new(
        scored,
        Mode::Silent,
        cohort.base_seed(),
        cohort.config_digest(),
    )
}

fn score_trajectory(policy: &AlertPolicy, tr: &Trajectory) -> Result<Trajectory> {
    let outcome_time = tr.outcome_time();
    let mut alerted = false;
    let mut timepoints = Vec::with_capacity(tr.timepoints().len());
    for tp in tr.timepoints() {
        let live = outcome_time.map_or(true, |ot| tp.t < ot);
        if !live {
            // Outcome row and anything after it: never alerted, never scored
            // by the policy (a stored score is preserved).
            timepoints.push(TimePoint { alert: false, ..tp.clone() });
            continue;
        }
        let score = policy.score_timepoint(tr.patient_id(), tp)?;
        let snoozed = policy.snooze && alerted;
        let alert = !snoozed && score >= policy.threshold;
        if alert {
            alerted = true;
        }
        timepoints.push(TimePoint {
            score: Some(score),
            alert,
            ..tp.clone()
        });
    }
    Trajectory::new(tr.patient_id(), timepoints)
}
