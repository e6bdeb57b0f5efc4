//! From confusion counts to deployment impact: bounds, workload, response
//! sensitivity, and model comparison.
//!
//! The bridge from retrospective evaluation to deployed effect is the
//! true-positive count in *patients*: alerted patients who would have had
//! the outcome. If answering an alert multiplies a patient's outcome risk
//! by rho, deployment is expected to prevent (1 - rho) x tp outcomes.
//!
//! ```text
//! cargo run --example estimate_impact
//! ```

use alertsim::estimate::{
    model_comparison, outcome_estimate, prevented_upper_bound, rho_sensitivity,
    workload_estimate, RiskRatio,
};
use alertsim::evaluate::{aggregated_time, first_alert};
use alertsim::io::{write_report, Report, ReportFormat};
use alertsim::risk::{apply_policy_silent, build_labels, fit_logistic, AlertPolicy, FitConfig};
use alertsim::simulator::{generate_cohort, DynamicsConfig, InterventionSpec};

fn main() -> alertsim::Result<()> {
    let dynamics = DynamicsConfig::default();
    let nothing = InterventionSpec::none();
    let lookahead = 5;
    let threshold = 0.6;

    let train = generate_cohort(500, 1, &dynamics, None, &nothing)?;
    let test = generate_cohort(500, 2, &dynamics, None, &nothing)?;
    let model = fit_logistic(&build_labels(&train, lookahead)?, lookahead, &FitConfig::default())?;
    let policy = AlertPolicy::logistic(model.clone(), threshold)?;
    let replay = apply_policy_silent(&policy, &test)?;

    let counts = first_alert(&replay)?.with_threshold(threshold);
    let n_outcomes = counts.outcomes();
    println!(
        "first-alert counts at threshold {threshold}: tp {} fp {} fn {} tn {} ({} outcomes total)",
        counts.tp, counts.fp, counts.fn_, counts.tn, n_outcomes
    );

    // The two numbers a deployment decision hangs on.
    println!("\nupper bound on preventable outcomes: {}", prevented_upper_bound(&counts)?);
    println!("alert workload (alerts someone must answer): {}", workload_estimate(&counts)?);

    // Expected outcomes under deployment, as the response gets worse.
    println!("\nexpected outcomes under deployment:");
    for rho in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let expected = outcome_estimate(n_outcomes, counts.tp, RiskRatio::new(rho)?)?;
        println!("  rho {rho:>4}: {expected:>6.1}  (silently: {n_outcomes})");
    }

    // The same sweep as a reusable report.
    let grid = rho_sensitivity(&counts, &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0])?;
    println!();
    print!("{}", write_report(&Report::Sensitivity(&grid), ReportFormat::Pretty)?);

    // Comparing two models on the same cohort needs only their tp counts:
    // the shared terms cancel. Here the challenger ignores velocity.
    let crippled = fit_logistic(
        &build_labels(&train, lookahead)?
            .into_iter()
            .map(|mut ex| {
                ex.covariates[1] = 0.0;
                ex
            })
            .collect::<Vec<_>>(),
        lookahead,
        &FitConfig::default(),
    )?;
    let crippled_policy = AlertPolicy::logistic(crippled, threshold)?;
    let crippled_counts = first_alert(&apply_policy_silent(&crippled_policy, &test)?)?;
    let diff = model_comparison(counts.tp, crippled_counts.tp, RiskRatio::new(0.5)?);
    println!(
        "\nfull model tp {} vs velocity-blind tp {}: difference in expected deployed outcomes {diff:+.1} (negative favors the full model)",
        counts.tp, crippled_counts.tp
    );

    // Aggregated-time counts cannot feed these estimators: their units are
    // patient-timepoints, and one prevented outcome would be counted once
    // per alerted window.
    let aggregated = aggregated_time(&replay, lookahead)?;
    match prevented_upper_bound(&aggregated) {
        Err(e) => println!("\naggregated counts are refused, as they must be:\n  {e}"),
        Ok(_) => unreachable!("the estimator gate rejects aggregated counts"),
    }
    Ok(())
}
