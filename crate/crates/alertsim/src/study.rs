//! The packaged reference study: train a model on one silent cohort,
//! evaluate it three ways on another, run deployment trials, and check the
//! identities that tie retrospective counts to deployed effect.
//!
//! [`run_study`] is pure — it returns file contents instead of writing them
//! — and fully deterministic in the seed, so two runs with the same seed
//! must agree byte for byte. The CLI owns the directory writing.

use serde::{Deserialize, Serialize};

use crate::domain::ConfusionCounts;
use crate::error::Result;
use crate::evaluate::{aggregated_time, first_alert, fixed_time};
use crate::io::{
    save_model, write_cohort_csv, write_report, Report, ReportFormat,
};
use crate::risk::{apply_policy_silent, build_labels, fit_logistic, AlertPolicy, FitConfig};
use crate::simulator::{generate_cohort, mix, DynamicsConfig, InterventionSpec};
use crate::trial::{run_trial, TrialArm, TrialConfig, TrialResult};

/// Parameters of the reference study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub seed: u64,
    pub n_train: u64,
    pub n_test: u64,
    /// Patients per arm in the unpaired (independent-draws) trial.
    pub n_trial_per_arm: u64,
    /// Patients per arm in the paired trials and identity checks.
    pub n_paired: u64,
    pub thresholds: Vec<f64>,
    pub lookahead: u64,
    pub t_star: u64,
    pub dynamics: DynamicsConfig,
    /// Leftward-force strength in the deployment trials.
    pub magnitude: f64,
}

impl StudyConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            n_train: 500,
            n_test: 500,
            n_trial_per_arm: 1000,
            n_paired: 500,
            thresholds: vec![0.2, 0.4, 0.6, 0.8],
            lookahead: 5,
            t_star: 10,
            dynamics: DynamicsConfig::default(),
            magnitude: 1.0,
        }
    }
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self::with_seed(42)
    }
}

/// Everything a study run produces: named file contents in a fixed order,
/// the identity-check lines, and how many of them failed.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub files: Vec<(String, String)>,
    pub invariant_lines: Vec<String>,
    pub violations: usize,
}

/// Runs the whole study. See the module docs for the pipeline; every
/// sub-seed is derived from `config.seed`, so the output is a pure function
/// of the config.
pub fn run_study(config: &StudyConfig) -> Result<StudyOutput> {
    let intervention = InterventionSpec::none();
    let train_seed = mix(config.seed, 1);
    let test_seed = mix(config.seed, 2);
    let unpaired_seed = mix(config.seed, 3);
    let paired_seed = mix(config.seed, 4);

    // Train on one silent cohort, hold out another.
    let train = generate_cohort(config.n_train, train_seed, &config.dynamics, None, &intervention)?;
    let test = generate_cohort(config.n_test, test_seed, &config.dynamics, None, &intervention)?;
    let labels = build_labels(&train, config.lookahead)?;
    let model = fit_logistic(&labels, config.lookahead, &FitConfig::default())?;

    // Retrospective evaluation on the held-out cohort, three ways per threshold.
    let mut counts: Vec<ConfusionCounts> = Vec::new();
    for &threshold in &config.thresholds {
        let policy = AlertPolicy::logistic(model.clone(), threshold)?;
        let replay = apply_policy_silent(&policy, &test)?;
        counts.push(aggregated_time(&replay, config.lookahead)?.with_threshold(threshold));
        counts.push(fixed_time(&test, &policy, config.t_star, None)?);
        counts.push(first_alert(&replay)?.with_threshold(threshold));
    }

    // Deployment trials: a realistic unpaired one for the reports, and
    // paired ones (same patients in every arm) for the identity checks.
    let arms = |for_perfect: bool| -> Result<Vec<TrialArm>> {
        let mut arms = vec![TrialArm::control("control")];
        for &threshold in &config.thresholds {
            let policy = AlertPolicy::logistic(model.clone(), threshold)?;
            let label = if for_perfect {
                format!("perfect_{threshold}")
            } else {
                format!("threshold_{threshold}")
            };
            arms.push(TrialArm::treatment(label, policy));
        }
        Ok(arms)
    };
    let unpaired_trial = run_trial(&TrialConfig {
        arms: arms(false)?,
        n_per_arm: config.n_trial_per_arm,
        base_seed: unpaired_seed,
        dynamics: config.dynamics.clone(),
        intervention: InterventionSpec::leftward_force(config.magnitude),
        paired: false,
    })?;
    let paired_force = run_trial(&TrialConfig {
        arms: arms(false)?,
        n_per_arm: config.n_paired,
        base_seed: paired_seed,
        dynamics: config.dynamics.clone(),
        intervention: InterventionSpec::leftward_force(config.magnitude),
        paired: true,
    })?;
    let paired_perfect = run_trial(&TrialConfig {
        arms: arms(true)?,
        n_per_arm: config.n_paired,
        base_seed: paired_seed,
        dynamics: config.dynamics.clone(),
        intervention: InterventionSpec::perfect(),
        paired: true,
    })?;
    let paired_inert = run_trial(&TrialConfig {
        arms: arms(false)?,
        n_per_arm: config.n_paired,
        base_seed: paired_seed,
        dynamics: config.dynamics.clone(),
        intervention: InterventionSpec::none(),
        paired: true,
    })?;

    let invariant_lines = check_invariants(
        config,
        &model,
        paired_seed,
        &paired_force,
        &paired_perfect,
        &paired_inert,
    )?;
    let violations = invariant_lines.iter().filter(|l| l.starts_with("FAIL")).count();

    let mut invariants_text = String::new();
    for line in &invariant_lines {
        invariants_text.push_str(line);
        invariants_text.push('\n');
    }

    let files = vec![
        ("params.txt".to_string(), params_text(config)),
        ("train_cohort.csv".to_string(), write_cohort_csv(&train)?),
        ("test_cohort.csv".to_string(), write_cohort_csv(&test)?),
        ("model.json".to_string(), save_model(&model, None)?),
        (
            "evaluation.csv".to_string(),
            write_report(&Report::Counts(&counts), ReportFormat::Csv)?,
        ),
        (
            "evaluation.txt".to_string(),
            write_report(&Report::Counts(&counts), ReportFormat::Pretty)?,
        ),
        (
            "trial.csv".to_string(),
            write_report(&Report::Trial(&unpaired_trial), ReportFormat::Csv)?,
        ),
        (
            "trial.txt".to_string(),
            write_report(&Report::Trial(&unpaired_trial), ReportFormat::Pretty)?,
        ),
        (
            "trial_paired.csv".to_string(),
            write_report(&Report::Trial(&paired_force), ReportFormat::Csv)?,
        ),
        ("invariants.txt".to_string(), invariants_text),
    ];

    Ok(StudyOutput { files, invariant_lines, violations })
}

/// The identities that make the counterfactual accounting trustworthy,
/// checked on the paired trials and reported as PASS/FAIL lines.
fn check_invariants(
    config: &StudyConfig,
    model: &crate::risk::LogisticModel,
    paired_seed: u64,
    paired_force: &TrialResult,
    paired_perfect: &TrialResult,
    paired_inert: &TrialResult,
) -> Result<Vec<String>> {
    let silent = generate_cohort(
        config.n_paired,
        paired_seed,
        &config.dynamics,
        None,
        &InterventionSpec::none(),
    )?;
    let mut lines = Vec::new();
    let mut check = |ok: bool, description: String| {
        lines.push(format!("{} {description}", if ok { "PASS" } else { "FAIL" }));
    };
    for (idx, &threshold) in config.thresholds.iter().enumerate() {
        let policy = AlertPolicy::logistic(model.clone(), threshold)?;
        let replay = apply_policy_silent(&policy, &silent)?;
        let counts = first_alert(&replay)?;
        let alerts = replay.alert_count();
        check(
            alerts == counts.positives(),
            format!(
                "snooze identity at threshold {threshold}: {alerts} alerts across {} alerted patients",
                counts.positives()
            ),
        );

        let force_arm = &paired_force.arms[idx + 1];
        check(
            force_arm.total_alerts == counts.positives(),
            format!(
                "workload identity at threshold {threshold}: live arm paged {} vs silent replay {}",
                force_arm.total_alerts,
                counts.positives()
            ),
        );

        let perfect_arm = &paired_perfect.arms[idx + 1];
        let perfect_prevented = perfect_arm.prevented_outcomes.unwrap_or(0);
        check(
            perfect_prevented == counts.tp as i64,
            format!(
                "perfect response attains the bound at threshold {threshold}: prevented {perfect_prevented} vs true positives {}",
                counts.tp
            ),
        );

        let force_prevented = force_arm.prevented_outcomes.unwrap_or(0);
        check(
            force_prevented <= counts.tp as i64,
            format!(
                "prevention bound at threshold {threshold}: leftward force prevented {force_prevented} <= true positives {}",
                counts.tp
            ),
        );

        let inert_arm = &paired_inert.arms[idx + 1];
        let inert_prevented = inert_arm.prevented_outcomes.unwrap_or(0);
        check(
            inert_prevented == 0,
            format!(
                "inert alerts prevent nothing at threshold {threshold}: prevented {inert_prevented}"
            ),
        );
    }
    Ok(lines)
}

fn params_text(config: &StudyConfig) -> String {
    let thresholds = config
        .thresholds
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "seed = {}\n\
         train patients = {}\n\
         test patients = {}\n\
         trial patients per arm (independent draws) = {}\n\
         trial patients per arm (paired) = {}\n\
         thresholds = {}\n\
         lookahead = {}\n\
         landmark t* = {}\n\
         propulsion = {}\n\
         wind sd = {}\n\
         outcome boundary = {}\n\
         horizon = {}\n\
         dt = {}\n\
         leftward force magnitude = {}\n",
        config.seed,
        config.n_train,
        config.n_test,
        config.n_trial_per_arm,
        config.n_paired,
        thresholds,
        config.lookahead,
        config.t_star,
        config.dynamics.propulsion,
        config.dynamics.wind_sd,
        config.dynamics.outcome_boundary,
        config.dynamics.horizon,
        config.dynamics.dt,
        config.magnitude,
    )
}
