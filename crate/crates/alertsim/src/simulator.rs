//! Point-mass encounter simulator with common random numbers.
//!
//! Each patient is a particle on a line pushed rightward by a constant
//! propulsion force plus Gaussian wind; crossing the outcome boundary is the
//! adverse event. Integration is semi-implicit Euler with the acceleration
//! equal to the applied force (unit mass):
//!
//! ```text
//! v' = v + f·dt        x' = x + v'·dt
//! ```
//!
//! The wind at time `t` for a given patient is a pure function of
//! `(patient_seed, t)` — it does not depend on anything that happened during
//! the encounter. That is what makes counterfactuals exact: rerunning the
//! same patient under a different alert policy or intervention replays
//! *identical* wind, so any divergence between the runs is caused by the
//! intervention alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{Cohort, Mode, TimePoint, Trajectory};
use crate::error::{Error, Result};
use crate::risk::AlertPolicy;

/// Physics and horizon parameters for an encounter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// Constant rightward force applied at every step.
    pub propulsion: f64,
    /// Standard deviation of the Gaussian wind force.
    pub wind_sd: f64,
    /// Positions strictly beyond this are outcomes.
    pub outcome_boundary: f64,
    /// Number of timepoints recorded (t = 0 .. horizon-1) absent an outcome.
    pub horizon: u64,
    /// Integration step.
    pub dt: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            propulsion: 0.002,
            wind_sd: 0.35,
            outcome_boundary: 1.0,
            horizon: 20,
            dt: 1.0,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.propulsion.is_finite() {
            return Err(Error::InvalidDynamics("propulsion must be finite".into()));
        }
        if !self.wind_sd.is_finite() || self.wind_sd < 0.0 {
            return Err(Error::InvalidDynamics("wind_sd must be finite and >= 0".into()));
        }
        if !self.outcome_boundary.is_finite() || self.outcome_boundary <= 0.0 {
            return Err(Error::InvalidDynamics(
                "outcome_boundary must be finite and > 0".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidDynamics("horizon must be at least 1".into()));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidDynamics("dt must be finite and > 0".into()));
        }
        Ok(())
    }
}

/// What an alert triggers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    /// Alerts are recorded but change nothing — the silent-deployment arm.
    None,
    /// Every alerted timepoint adds a constant leftward force.
    LeftwardForce,
    /// The first alert makes the patient immune to the outcome.
    Perfect,
}

/// An intervention kind plus its strength (used by [`InterventionKind::LeftwardForce`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub kind: InterventionKind,
    pub magnitude: f64,
}

impl Default for InterventionSpec {
    fn default() -> Self {
        Self { kind: InterventionKind::None, magnitude: 1.0 }
    }
}

impl InterventionSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn leftward_force(magnitude: f64) -> Self {
        Self { kind: InterventionKind::LeftwardForce, magnitude }
    }

    pub fn perfect() -> Self {
        Self { kind: InterventionKind::Perfect, magnitude: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.magnitude.is_finite() || self.magnitude < 0.0 {
            return Err(Error::InvalidIntervention(
                "magnitude must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// splitmix64 finalizer: a fast, well-mixed 64-bit hash.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a base seed and an index.
///
/// Used everywhere a stream of seeds is needed — patient seeds from a cohort
/// seed, per-timepoint wind seeds from a patient seed — so that seed reuse
/// across different purposes never aliases.
pub fn mix(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(splitmix64(index)))
}

/// The wind force acting on a patient at time `t`.
///
/// Pure in `(patient_seed, t)`: the draw comes from a fresh generator seeded
/// by `mix(patient_seed, t)`, so it is independent of simulation order and
/// of whatever forces acted earlier. This is the common-random-numbers
/// device that pairs factual and counterfactual runs exactly.
pub fn wind(patient_seed: u64, t: u64, wind_sd: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(patient_seed, t));
    let z: f64 = StandardNormal.sample(&mut rng);
    z * wind_sd
}

/// One semi-implicit Euler step under `applied_force` (unit mass), returning
/// `(position, velocity, acceleration)` after the step.
pub fn step(position: f64, velocity: f64, applied_force: f64, dt: f64) -> Result<(f64, f64, f64)> {
    if !position.is_finite() || !velocity.is_finite() {
        return Err(Error::NonFinite("step input state".into()));
    }
    if !applied_force.is_finite() {
        return Err(Error::NonFinite("applied force".into()));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidDynamics("dt must be finite and > 0".into()));
    }
    let acceleration = applied_force;
    let new_velocity = velocity + acceleration * dt;
    let new_position = position + new_velocity * dt;
    if !new_position.is_finite() || !new_velocity.is_finite() {
        return Err(Error::NonFinite("step output state".into()));
    }
    Ok((new_position, new_velocity, acceleration))
}

/// Simulates one patient encounter from rest at the origin.
///
/// At each timepoint, in order: the outcome check (position beyond the
/// boundary ends the trajectory with an outcome row, unless a perfect
/// intervention has made the patient immune), then the policy query (skipped
/// for snoozed patients), then the recorded row, then the transition to the
/// next state. The force for the transition out of time `t` is
///
/// ```text
/// propulsion + wind(seed, t) - magnitude·[alert at t under LeftwardForce]
/// ```
///
/// With no policy, or an intervention of kind `None`, the physics are
/// untouched by alerts and the trajectory is a silent-cohort record.
pub fn simulate_encounter(
    patient_id: &str,
    patient_seed: u64,
    dynamics: &DynamicsConfig,
    policy: Option<&AlertPolicy>,
    intervention: &InterventionSpec,
) -> Result<Trajectory> {
    dynamics.validate()?;
    intervention.validate()?;

    let mut position = 0.0_f64;
    let mut velocity = 0.0_f64;
    let mut acceleration = 0.0_f64;
    let mut alerted = false;
    let mut immune = false;
    let mut timepoints = Vec::new();

    for t in 0..dynamics.horizon {
        if position > dynamics.outcome_boundary && !immune {
            timepoints.push(TimePoint {
                t,
                position,
                velocity,
                acceleration,
                score: None,
                alert: false,
                outcome: true,
            });
            break;
        }

        let (score, alert) = match policy {
            Some(policy) if !(policy.snooze && alerted) => {
                let s = policy.score_covariates(&[position, velocity, acceleration])?;
                (Some(s), s >= policy.threshold)
            }
            _ => (None, false),
        };
        if alert {
            alerted = true;
            if intervention.kind == InterventionKind::Perfect {
                immune = true;
            }
        }

        timepoints.push(TimePoint {
            t,
            position,
            velocity,
            acceleration,
            score,
            alert,
            outcome: false,
        });

        let mut force = dynamics.propulsion + wind(patient_seed, t, dynamics.wind_sd);
        if alert && intervention.kind == InterventionKind::LeftwardForce {
            force -= intervention.magnitude;
        }
        let (p, v, a) = step(position, velocity, force, dynamics.dt)?;
        position = p;
        velocity = v;
        acceleration = a;
    }

    Trajectory::new(patient_id, timepoints)
}

/// Simulates a cohort of `n` patients with ids `P00000`, `P00001`, …
///
/// Patient seeds are `mix(base_seed, i)`, so two cohorts generated from the
/// same base seed pair patients one-to-one regardless of policy or
/// intervention. The cohort is silent when nothing can touch the physics
/// (no policy, or intervention kind `None`) and active otherwise.
pub fn generate_cohort(
    n: u64,
    base_seed: u64,
    dynamics: &DynamicsConfig,
    policy: Option<&AlertPolicy>,
    intervention: &InterventionSpec,
) -> Result<Cohort> {
    if n == 0 {
        return Err(Error::InvalidCohortSize);
    }
    dynamics.validate()?;
    intervention.validate()?;

    let mut trajectories = Vec::with_capacity(n as usize);
    for i in 0..n {
        let patient_id = format!("P{i:05}");
        let patient_seed = mix(base_seed, i);
        trajectories.push(simulate_encounter(
            &patient_id,
            patient_seed,
            dynamics,
            policy,
            intervention,
        )?);
    }
    let mode = match (policy, intervention.kind) {
        (None, _) | (_, InterventionKind::None) => Mode::Silent,
        _ => Mode::Active,
    };
    let digest = config_digest(dynamics, policy.is_some(), intervention);
    Cohort::new(trajectories, mode, base_seed, digest)
}

/// FNV-1a hash of the generation parameters, hex-encoded. Stamped on
/// cohorts so downstream files can be checked for mixed provenance.
fn config_digest(
    dynamics: &DynamicsConfig,
    has_policy: bool,
    intervention: &InterventionSpec,
) -> String {
    let text = format!(
        "propulsion={};wind_sd={};boundary={};horizon={};dt={};policy={};kind={:?};magnitude={}",
        dynamics.propulsion,
        dynamics.wind_sd,
        dynamics.outcome_boundary,
        dynamics.horizon,
        dynamics.dt,
        has_policy,
        intervention.kind,
        intervention.magnitude,
    );
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
