//! One model, one held-out cohort, three evaluation strategies.
//!
//! The three strategies answer different questions because they count
//! different units:
//!
//! * aggregated-time: "how good is each windowed prediction?" (units:
//!   patient-timepoints)
//! * fixed-time: "how good is the model at landmark t*?" (units: patients
//!   at risk at t*)
//! * first-alert: "which patients would the deployed system flag?" (units:
//!   patients)
//!
//! ```text
//! cargo run --example evaluate_three_ways
//! ```

use alertsim::evaluate::{aggregated_time, first_alert, fixed_time};
use alertsim::io::{write_report, Report, ReportFormat};
use alertsim::risk::{apply_policy_silent, build_labels, fit_logistic, AlertPolicy, FitConfig};
use alertsim::simulator::{generate_cohort, DynamicsConfig, InterventionSpec};

fn main() -> alertsim::Result<()> {
    let dynamics = DynamicsConfig::default();
    let nothing = InterventionSpec::none();
    let lookahead = 5;

    // Train on one silent cohort, evaluate on a fresh one.
    let train = generate_cohort(500, 1, &dynamics, None, &nothing)?;
    let test = generate_cohort(500, 2, &dynamics, None, &nothing)?;
    let model = fit_logistic(&build_labels(&train, lookahead)?, lookahead, &FitConfig::default())?;

    let mut all_counts = Vec::new();
    for threshold in [0.4, 0.6] {
        let policy = AlertPolicy::logistic(model.clone(), threshold)?;
        // Stamp virtual alerts onto the silent cohort. Nothing happens to
        // the physics — these are the alerts that *would* have fired.
        let replay = apply_policy_silent(&policy, &test)?;

        let aggregated = aggregated_time(&replay, lookahead)?.with_threshold(threshold);
        let fixed = fixed_time(&test, &policy, 10, None)?;
        let first = first_alert(&replay)?.with_threshold(threshold);

        // Same model, same cohort, same threshold — yet the counts differ
        // wildly, because the units differ.
        println!(
            "threshold {threshold}: positives = {} windows (aggregated) vs {} patients at t*=10 (fixed) vs {} patients (first-alert)",
            aggregated.positives(),
            fixed.positives(),
            first.positives()
        );
        all_counts.extend([aggregated, fixed, first]);
    }

    println!();
    print!("{}", write_report(&Report::Counts(&all_counts), ReportFormat::Pretty)?);
    println!();
    print!("{}", write_report(&Report::Metrics(&all_counts), ReportFormat::Pretty)?);

    // The same rows serialize as machine-readable CSV and JSON too.
    println!();
    print!("{}", write_report(&Report::Counts(&all_counts), ReportFormat::Csv)?);
    Ok(())
}
