//! Deployment trials, and how they line up with retrospective predictions.
//!
//! A trial runs a control arm (no alerts) against live policies. With
//! paired draws every arm sees the same patients and wind, so arm
//! differences are exact counterfactual effects; with independent draws the
//! trial behaves like a real randomized rollout.
//!
//! ```text
//! cargo run --example run_trial
//! ```

use alertsim::evaluate::first_alert;
use alertsim::io::{write_report, Report, ReportFormat};
use alertsim::risk::{apply_policy_silent, build_labels, fit_logistic, AlertPolicy, FitConfig};
use alertsim::simulator::{generate_cohort, DynamicsConfig, InterventionSpec};
use alertsim::trial::{compare_arms, run_trial, TrialArm, TrialConfig, TrialResult};

fn main() -> alertsim::Result<()> {
    let dynamics = DynamicsConfig::default();
    let lookahead = 5;
    let trial_seed = 77;
    let n_per_arm = 500;

    let train = generate_cohort(500, 1, &dynamics, None, &InterventionSpec::none())?;
    let model = fit_logistic(&build_labels(&train, lookahead)?, lookahead, &FitConfig::default())?;

    let arms = |tag: &str| -> alertsim::Result<Vec<TrialArm>> {
        let mut arms = vec![TrialArm::control("control")];
        for threshold in [0.4, 0.6, 0.8] {
            arms.push(TrialArm::treatment(
                format!("{tag}_{threshold}"),
                AlertPolicy::logistic(model.clone(), threshold)?,
            ));
        }
        Ok(arms)
    };
    let config = |arms: Vec<TrialArm>, intervention, paired| TrialConfig {
        arms,
        n_per_arm,
        base_seed: trial_seed,
        dynamics: dynamics.clone(),
        intervention,
        paired,
    };

    // Retrospective prediction: score the same patients silently and count
    // first-alert true positives — the ceiling on preventable outcomes.
    let silent = generate_cohort(n_per_arm, trial_seed, &dynamics, None, &InterventionSpec::none())?;
    println!("retrospective ceiling per threshold (first-alert true positives):");
    let mut ceilings = Vec::new();
    for threshold in [0.4, 0.6, 0.8] {
        let policy = AlertPolicy::logistic(model.clone(), threshold)?;
        let counts = first_alert(&apply_policy_silent(&policy, &silent)?)?;
        println!("  threshold {threshold}: at most {} preventable, {} alerts", counts.tp, counts.positives());
        ceilings.push(counts);
    }

    // A paired trial where answering an alert always works ("perfect")
    // attains that ceiling exactly.
    let perfect: TrialResult =
        run_trial(&config(arms("perfect")?, InterventionSpec::perfect(), true))?;
    println!("\npaired trial, perfect response:");
    for (row, counts) in compare_arms(&perfect).iter().zip(&ceilings) {
        println!(
            "  {}: prevented {} == ceiling {}",
            row.label, row.prevented_outcomes, counts.tp
        );
        assert_eq!(row.prevented_outcomes, counts.tp as i64);
        assert_eq!(row.alerts, counts.positives());
    }

    // A partial response (a finite leftward push) lands somewhere below.
    let force = run_trial(&config(arms("force")?, InterventionSpec::leftward_force(1.0), true))?;
    println!("\npaired trial, leftward-force response:");
    print!("{}", write_report(&Report::Trial(&force), ReportFormat::Pretty)?);
    for (row, counts) in compare_arms(&force).iter().zip(&ceilings) {
        assert!(row.prevented_outcomes <= counts.tp as i64);
    }

    // The same trial with independent draws per arm: the point estimates
    // wobble with sampling noise, like a real rollout would.
    let unpaired =
        run_trial(&config(arms("force")?, InterventionSpec::leftward_force(1.0), false))?;
    println!("\nunpaired trial, same policies (sampling noise now included):");
    print!("{}", write_report(&Report::Trial(&unpaired), ReportFormat::Pretty)?);
    Ok(())
}
