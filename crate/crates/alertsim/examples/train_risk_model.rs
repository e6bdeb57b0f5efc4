//! Lookahead labels, the gradient-descent fit, and checking the optimizer.
//!
//! ```text
//! cargo run --example train_risk_model
//! ```

use alertsim::io::{load_model, save_model};
use alertsim::risk::{
    build_labels, fit_logistic, loss_and_gradient, predict, FitConfig,
};
use alertsim::simulator::{generate_cohort, DynamicsConfig, InterventionSpec};

fn main() -> alertsim::Result<()> {
    // Labels come from a silent cohort: each live patient-timepoint is one
    // example, positive when the outcome lands within the next `lookahead`
    // steps.
    let cohort = generate_cohort(
        500,
        42,
        &DynamicsConfig::default(),
        None,
        &InterventionSpec::none(),
    )?;
    let lookahead = 5;
    let labels = build_labels(&cohort, lookahead)?;
    let positives = labels.iter().filter(|ex| ex.label).count();
    println!(
        "{} examples from {} patients, {} positive ({:.1}%)",
        labels.len(),
        cohort.len(),
        positives,
        100.0 * positives as f64 / labels.len() as f64
    );

    // Full-batch gradient descent with a backtracking line search; the fit
    // is deterministic, so retraining reproduces the exact coefficients.
    let config = FitConfig::default();
    let model = fit_logistic(&labels, lookahead, &config)?;
    println!("\nfitted coefficients:");
    for (name, w) in model.feature_names().iter().zip(model.weights()) {
        println!("  {name:>12}  {w:>8.4}");
    }
    println!("  {:>12}  {:>8.4}", "intercept", model.intercept());

    // Sanity-check the optimum: the analytic gradient there should be tiny,
    // and it should agree with a finite-difference estimate.
    let (loss, grad_w, grad_b) =
        loss_and_gradient(&labels, model.weights(), model.intercept(), config.l2_penalty)?;
    let grad_norm = (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
    println!("\nloss at the optimum: {loss:.6}, gradient norm {grad_norm:.2e}");
    assert!(grad_norm <= config.tolerance * 10.0);

    let h = 1e-6;
    let mut bumped = model.weights().to_vec();
    bumped[0] += h;
    let (loss_up, _, _) = loss_and_gradient(&labels, &bumped, model.intercept(), config.l2_penalty)?;
    bumped[0] -= 2.0 * h;
    let (loss_dn, _, _) = loss_and_gradient(&labels, &bumped, model.intercept(), config.l2_penalty)?;
    let fd = (loss_up - loss_dn) / (2.0 * h);
    println!("d(loss)/d(position weight): analytic {:.3e}, finite difference {fd:.3e}", grad_w[0]);

    // Scores are probabilities in (0, 1); risk grows with position here.
    println!("\npredicted risk along a path from the origin:");
    for i in 0..5 {
        let x = i as f64 * 0.25;
        let p = predict(&model, &[x, 0.05, 0.0])?;
        println!("  position {x:>5.2}  ->  {p:.3}");
    }

    // Round-trip through the on-disk JSON format.
    let text = save_model(&model, Some(0.4))?;
    let (back, threshold) = load_model(&text)?;
    assert_eq!(back, model);
    println!("\nmodel JSON round-trips (stored threshold {threshold:?}):\n{text}");
    Ok(())
}
