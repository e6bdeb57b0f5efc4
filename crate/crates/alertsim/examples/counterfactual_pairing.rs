//! Exact counterfactual pairing through common random numbers.
//!
//! The wind acting on a patient at time t is a pure function of the patient
//! seed and t — not of anything that happened during the run. Rerunning the
//! same patient under an alert-triggered intervention therefore replays
//! identical wind, and the two trajectories agree exactly until the first
//! alert: everything after that is the intervention's causal effect.
//!
//! ```text
//! cargo run --example counterfactual_pairing
//! ```

use alertsim::risk::{AlertPolicy, LogisticModel};
use alertsim::simulator::{simulate_encounter, DynamicsConfig, InterventionSpec};

fn main() -> alertsim::Result<()> {
    // A hand-built policy: risk rises with position, alert at 0.5.
    let model = LogisticModel::new(
        vec!["position".into(), "velocity".into(), "acceleration".into()],
        vec![8.0, 0.0, 0.0],
        -3.0,
        5,
    )?;
    let policy = AlertPolicy::logistic(model, 0.5)?;

    let dynamics = DynamicsConfig { propulsion: 0.03, ..DynamicsConfig::default() };
    let seed = 80;

    // Factual: nothing intervenes. Counterfactual: alerts push leftward.
    let silent = simulate_encounter("P0", seed, &dynamics, None, &InterventionSpec::none())?;
    let treated = simulate_encounter(
        "P0",
        seed,
        &dynamics,
        Some(&policy),
        &InterventionSpec::leftward_force(1.0),
    )?;

    let first_alert = treated.first_alert_time().expect("this seed alerts");
    println!("first alert in the treated run at t = {first_alert}\n");
    println!("  {:>3}  {:>10}  {:>10}  {:>10}", "t", "silent", "treated", "difference");
    let horizon = silent.max_time().max(treated.max_time());
    for t in 0..=horizon {
        let s = silent.timepoint_at(t).map(|p| p.position);
        let a = treated.timepoint_at(t).map(|p| p.position);
        match (s, a) {
            (Some(s), Some(a)) => {
                let marker = if t == first_alert { "  <- alert" } else { "" };
                println!("  {:>3}  {:>10.4}  {:>10.4}  {:>10.4}{marker}", t, s, a, a - s);
                if t <= first_alert {
                    assert_eq!(s, a, "identical until the first alert");
                }
            }
            (Some(s), None) => println!("  {:>3}  {:>10.4}  {:>10}", t, s, "-"),
            (None, Some(a)) => println!("  {:>3}  {:>10}  {:>10.4}", t, "-", a),
            (None, None) => {}
        }
    }

    println!(
        "\nsilent outcome: {:?}   treated outcome: {:?}",
        silent.outcome_time(),
        treated.outcome_time()
    );

    // A "perfect" intervention leaves the physics alone entirely; it just
    // makes the alerted patient immune. That turns the silent run's
    // alerted-and-outcome patients into exactly the prevented ones.
    let immune = simulate_encounter(
        "P0",
        seed,
        &dynamics,
        Some(&policy),
        &InterventionSpec::perfect(),
    )?;
    println!(
        "perfect intervention: outcome {:?} (positions still match the silent run)",
        immune.outcome_time()
    );
    for tp in silent.timepoints().iter().filter(|tp| !tp.outcome) {
        assert_eq!(tp.position, immune.timepoint_at(tp.t).unwrap().position);
    }

    // And an intervention of kind "none" records the alerts without
    // touching anything — the silent-deployment arm of a rollout.
    let shadowed =
        simulate_encounter("P0", seed, &dynamics, Some(&policy), &InterventionSpec::none())?;
    assert_eq!(shadowed.outcome_time(), silent.outcome_time());
    assert!(shadowed.has_alert());
    println!("inert intervention: alerts recorded, outcome unchanged");
    Ok(())
}
