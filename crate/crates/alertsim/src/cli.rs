//! Command-line interface: a thin shell over the library.
//!
//! Five operations — `simulate`, `train`, `evaluate`, `trial`, and
//! `reproduce-paper` — each of which reads/writes the formats in
//! [`crate::io`] and calls the library for everything else. Flag precedence
//! everywhere is: built-in defaults, then a `--config` file, then explicit
//! flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::domain::Strategy;
use crate::error::{Error, Result};
use crate::estimate::{prevented_upper_bound, workload_estimate};
use crate::evaluate::{evaluate, AtRiskRule, EvalConfig};
use crate::io::{
    load_model, parse_config, read_cohort_csv, read_score_csv, save_model, write_cohort_csv,
    write_report, FileConfig, Report, ReportFormat, COHORT_HEADER, SCORE_HEADER,
};
use crate::risk::{apply_policy_silent, build_labels, fit_logistic, AlertPolicy, FitConfig};
use crate::simulator::{generate_cohort, DynamicsConfig, InterventionSpec};
use crate::study::{run_study, StudyConfig};
use crate::trial::{run_trial, TrialArm, TrialConfig};

/// Counterfactual simulation and evaluation for repeated-prediction alert
/// models.
#[derive(Debug, Parser)]
#[command(name = "alertsim", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a silent cohort and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit a logistic risk model to a simulated cohort.
    Train(TrainArgs),
    /// Evaluate alerts retrospectively on a cohort or score stream.
    Evaluate(EvaluateArgs),
    /// Run a simulated deployment trial of one model at several thresholds.
    Trial(TrialArgs),
    /// Regenerate the packaged reference study into a directory.
    ReproducePaper(ReproduceArgs),
}

/// Physics overrides shared by the simulating commands.
#[derive(Debug, Args)]
pub struct DynamicsArgs {
    /// Constant rightward force per step.
    #[arg(long)]
    pub propulsion: Option<f64>,
    /// Standard deviation of the Gaussian wind force.
    #[arg(long)]
    pub wind_sd: Option<f64>,
    /// Positions strictly beyond this are outcomes.
    #[arg(long)]
    pub boundary: Option<f64>,
    /// Integration step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Timepoints per encounter absent an outcome.
    #[arg(long)]
    pub horizon: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of patients.
    #[arg(long)]
    pub patients: Option<u64>,
    /// Cohort seed: same seed, same cohort.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Flat key=value config file (flags override it).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Cohort CSV to train on (a full export with kinematics).
    #[arg(long)]
    pub data: PathBuf,
    /// Label window: an example at time t is positive when the outcome
    /// falls in (t, t+lookahead]. Default 5.
    #[arg(long)]
    pub lookahead: Option<u64>,
    /// L2 penalty strength. Default 1e-4.
    #[arg(long)]
    pub l2: Option<f64>,
    /// Maximum optimizer iterations. Default 20000.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Convergence tolerance on the gradient norm. Default 1e-7.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Deployment threshold to record in the model file (informational).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output model JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Every live patient-timepoint is a classification unit.
    Aggregated,
    /// Every patient at risk at the landmark --t-star is a unit.
    Fixed,
    /// Every patient is a unit: ever-alerted versus ever-outcome.
    First,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Pretty,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Pretty => ReportFormat::Pretty,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Cohort CSV or score-stream CSV (recognized by header).
    #[arg(long)]
    pub data: PathBuf,
    /// Evaluation strategy.
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Alert threshold in (0, 1): a score at or above it alerts.
    #[arg(long)]
    pub threshold: f64,
    /// Model JSON for scoring cohort data. Score streams must not have one.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Lookahead window (required by aggregated, optional for fixed,
    /// forbidden for first).
    #[arg(long)]
    pub lookahead: Option<u64>,
    /// Landmark time for the fixed method.
    #[arg(long)]
    pub t_star: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Pretty)]
    pub format: FormatArg,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append impact numbers to pretty aggregated output despite the unit
    /// mismatch (patient-timepoints, not patients). Off by default because
    /// those numbers are not deployment estimates.
    #[arg(long)]
    pub force_aggregated_estimates: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterventionArg {
    /// Record alerts but change nothing.
    None,
    /// Alerts push the patient leftward with --magnitude.
    Force,
    /// The first alert prevents the outcome outright.
    Perfect,
}

#[derive(Debug, Args)]
pub struct TrialArgs {
    /// Model JSON to deploy in the treatment arms.
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated thresholds, one treatment arm each.
    /// Default "0.2,0.4,0.6,0.8".
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Patients per arm. Default 1000.
    #[arg(long)]
    pub n_per_arm: Option<u64>,
    /// Trial seed. Default 42.
    #[arg(long)]
    pub seed: Option<u64>,
    /// What an alert triggers. Default force.
    #[arg(long, value_enum)]
    pub intervention: Option<InterventionArg>,
    /// Strength of the leftward-force intervention. Default 1.0.
    #[arg(long)]
    pub magnitude: Option<f64>,
    /// Same patients in every arm (exact counterfactual pairing). Pass
    /// `--paired false` for independent draws per arm. Default true.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub paired: Option<bool>,
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Flat key=value config file (flags override it).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Pretty)]
    pub format: FormatArg,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Study seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Directory to write the study files into (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

/// Executes a parsed command. Returns the process exit code; errors are
/// left to the caller to print.
pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Train(args) => run_train(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Trial(args) => run_trial_command(args),
        Command::ReproducePaper(args) => run_reproduce(args),
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        Some(path) => parse_config(&fs::read_to_string(path)?),
        None => Ok(FileConfig::default()),
    }
}

fn resolve_dynamics(args: &DynamicsArgs, file: &FileConfig) -> DynamicsConfig {
    let defaults = DynamicsConfig::default();
    DynamicsConfig {
        propulsion: args.propulsion.or(file.propulsion).unwrap_or(defaults.propulsion),
        wind_sd: args.wind_sd.or(file.wind_sd).unwrap_or(defaults.wind_sd),
        outcome_boundary: args.boundary.or(file.boundary).unwrap_or(defaults.outcome_boundary),
        horizon: args.horizon.or(file.horizon).unwrap_or(defaults.horizon),
        dt: args.dt.or(file.dt).unwrap_or(defaults.dt),
    }
}

fn run_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let file = load_file_config(args.config.as_deref())?;
    let dynamics = resolve_dynamics(&args.dynamics, &file);
    let patients = args.patients.or(file.patients).unwrap_or(500);
    let seed = args.seed.or(file.seed).unwrap_or(42);
    let cohort =
        generate_cohort(patients, seed, &dynamics, None, &InterventionSpec::none())?;
    fs::write(&args.out, write_cohort_csv(&cohort)?)?;
    println!(
        "simulated {} patients ({} outcomes, seed {}) -> {}",
        cohort.len(),
        cohort.outcome_count(),
        seed,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// Distinguishes the two ingestible CSV shapes by their header line.
enum DataKind {
    Cohort,
    Scores,
}

fn sniff_header(text: &str) -> Result<DataKind> {
    let first = text.lines().next().unwrap_or("").trim_end_matches('\r');
    if first == COHORT_HEADER {
        Ok(DataKind::Cohort)
    } else if first == SCORE_HEADER {
        Ok(DataKind::Scores)
    } else {
        Err(Error::CsvHeader { found: first.to_string() })
    }
}

fn run_train(args: TrainArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.data)?;
    match sniff_header(&text)? {
        DataKind::Cohort => {}
        DataKind::Scores => {
            return Err(Error::Usage(
                "training needs covariates; score streams carry only scores \
                 (pass a full cohort CSV)"
                    .into(),
            ))
        }
    }
    let cohort = read_cohort_csv(text.as_bytes())?;
    let lookahead = args.lookahead.unwrap_or(5);
    let defaults = FitConfig::default();
    let fit = FitConfig {
        max_iters: args.max_iters.unwrap_or(defaults.max_iters),
        l2_penalty: args.l2.unwrap_or(defaults.l2_penalty),
        tolerance: args.tolerance.unwrap_or(defaults.tolerance),
    };
    let labels = build_labels(&cohort, lookahead)?;
    let positives = labels.iter().filter(|ex| ex.label).count();
    let model = fit_logistic(&labels, lookahead, &fit)?;
    fs::write(&args.out, save_model(&model, args.threshold)?)?;
    let coefficients = model
        .feature_names()
        .iter()
        .zip(model.weights())
        .map(|(name, w)| format!("{name} {w:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    println!(
        "trained on {} examples ({} positive): {}, intercept {:.4} -> {}",
        labels.len(),
        positives,
        coefficients,
        model.intercept(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.data)?;
    let (cohort, policy) = match sniff_header(&text)? {
        DataKind::Scores => {
            if args.model.is_some() {
                return Err(Error::Usage(
                    "score streams already carry their scores; drop --model \
                     or pass a full cohort CSV instead"
                        .into(),
                ));
            }
            (read_score_csv(text.as_bytes())?, AlertPolicy::recorded(args.threshold)?)
        }
        DataKind::Cohort => {
            let Some(model_path) = &args.model else {
                return Err(Error::Usage(
                    "cohort data carries covariates, not scores; pass --model \
                     to score it (or evaluate a score stream)"
                        .into(),
                ));
            };
            let (model, _) = load_model(&fs::read_to_string(model_path)?)?;
            (read_cohort_csv(text.as_bytes())?, AlertPolicy::logistic(model, args.threshold)?)
        }
    };

    let strategy = match args.method {
        MethodArg::Aggregated => Strategy::AggregatedTime,
        MethodArg::Fixed => Strategy::FixedTime,
        MethodArg::First => Strategy::FirstAlert,
    };
    let config = EvalConfig {
        strategy,
        lookahead: args.lookahead,
        t_star: args.t_star,
        at_risk_rule: AtRiskRule::default(),
    };
    config.validate()?;
    let counts = match strategy {
        // Alert flags are a function of the policy: stamp them onto a
        // silent replay, then count.
        Strategy::AggregatedTime | Strategy::FirstAlert => {
            let replay = apply_policy_silent(&policy, &cohort)?;
            evaluate(&replay, &config, Some(&policy))?.with_threshold(args.threshold)
        }
        // Fixed-time re-queries the policy itself.
        Strategy::FixedTime => evaluate(&cohort, &config, Some(&policy))?,
    };

    let mut rendered = write_report(&Report::Counts(&[counts.clone()]), args.format.into())?;
    if args.format == FormatArg::Pretty {
        match strategy {
            Strategy::FixedTime | Strategy::FirstAlert => {
                rendered.push_str(&format!(
                    "\nMax preventable outcomes (upper bound): {}\nAlert workload: {}\n",
                    prevented_upper_bound(&counts)?,
                    workload_estimate(&counts)?,
                ));
            }
            Strategy::AggregatedTime if args.force_aggregated_estimates => {
                rendered.push_str(&format!(
                    "\nWarning: aggregated-time counts classify patient-timepoints, not \
                     patients. A patient alerted in ten windows counts ten times, so the \
                     numbers below overstate what a deployed system could do.\n\
                     Max preventable outcomes (upper bound, forced): {}\n\
                     Alert workload (forced): {}\n",
                    counts.tp,
                    counts.positives(),
                ));
            }
            _ => {}
        }
    }
    emit(&rendered, args.out.as_deref())
}

fn run_trial_command(args: TrialArgs) -> Result<ExitCode> {
    let file = load_file_config(args.config.as_deref())?;
    let dynamics = resolve_dynamics(&args.dynamics, &file);
    let thresholds = match &args.thresholds {
        Some(raw) => parse_thresholds(raw)?,
        None => file.thresholds.clone().unwrap_or_else(|| vec![0.2, 0.4, 0.6, 0.8]),
    };
    if thresholds.is_empty() {
        return Err(Error::Usage("at least one threshold is required".into()));
    }
    let seed = args.seed.or(file.seed).unwrap_or(42);
    let n_per_arm = args.n_per_arm.or(file.n_per_arm).unwrap_or(1000);
    let magnitude = args.magnitude.or(file.magnitude).unwrap_or(1.0);
    let paired = args.paired.or(file.paired).unwrap_or(true);
    let intervention = match args.intervention {
        Some(InterventionArg::None) => InterventionSpec::none(),
        Some(InterventionArg::Force) => InterventionSpec::leftward_force(magnitude),
        Some(InterventionArg::Perfect) => InterventionSpec::perfect(),
        None => match file.intervention.as_deref() {
            Some("none") => InterventionSpec::none(),
            Some("force") | None => InterventionSpec::leftward_force(magnitude),
            Some("perfect") => InterventionSpec::perfect(),
            Some(other) => {
                return Err(Error::Usage(format!(
                    "unknown intervention '{other}' in config (expected none, force, or perfect)"
                )))
            }
        },
    };

    let (model, _) = load_model(&fs::read_to_string(&args.model)?)?;
    let mut arms = vec![TrialArm::control("control")];
    for &threshold in &thresholds {
        arms.push(TrialArm::treatment(
            format!("threshold_{threshold}"),
            AlertPolicy::logistic(model.clone(), threshold)?,
        ));
    }
    let result = run_trial(&TrialConfig {
        arms,
        n_per_arm,
        base_seed: seed,
        dynamics,
        intervention,
        paired,
    })?;
    let rendered = write_report(&Report::Trial(&result), args.format.into())?;
    emit(&rendered, args.out.as_deref())
}

fn run_reproduce(args: ReproduceArgs) -> Result<ExitCode> {
    let output = run_study(&StudyConfig::with_seed(args.seed))?;
    fs::create_dir_all(&args.out)?;
    for (name, content) in &output.files {
        fs::write(args.out.join(name), content)?;
    }
    for line in &output.invariant_lines {
        println!("{line}");
    }
    println!("{} files -> {}", output.files.len(), args.out.display());
    if output.violations > 0 {
        eprintln!(
            "error: {} identity check(s) failed; see invariants.txt",
            output.violations
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_thresholds(raw: &str) -> Result<Vec<f64>> {
    let mut thresholds = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        thresholds.push(part.parse::<f64>().map_err(|_| {
            Error::Usage(format!("threshold '{part}' is not a number"))
        })?);
    }
    Ok(thresholds)
}

fn emit(rendered: &str, out: Option<&Path>) -> Result<ExitCode> {
    match out {
        Some(path) => {
            fs::write(path, rendered)?;
            println!("wrote {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn subcommands_parse() {
        let cli = Cli::try_parse_from([
            "alertsim", "simulate", "--patients", "10", "--seed", "7", "--out", "c.csv",
        ])
        .unwrap();
        match cli.command {
            Command::Simulate(args) => {
                assert_eq!(args.patients, Some(10));
                assert_eq!(args.seed, Some(7));
                assert_eq!(args.dynamics.propulsion, None);
            }
            _ => panic!("wrong subcommand"),
        }

        let cli = Cli::try_parse_from([
            "alertsim",
            "evaluate",
            "--data",
            "scores.csv",
            "--method",
            "first",
            "--threshold",
            "0.4",
        ])
        .unwrap();
        match cli.command {
            Command::Evaluate(args) => {
                assert_eq!(args.method, MethodArg::First);
                assert_eq!(args.threshold, 0.4);
                assert_eq!(args.format, FormatArg::Pretty);
                assert!(!args.force_aggregated_estimates);
            }
            _ => panic!("wrong subcommand"),
        }

        // The study command uses kebab-case on the command line.
        let cli =
            Cli::try_parse_from(["alertsim", "reproduce-paper", "--out", "study"]).unwrap();
        match cli.command {
            Command::ReproducePaper(args) => assert_eq!(args.seed, 42),
            _ => panic!("wrong subcommand"),
        }

        assert!(Cli::try_parse_from(["alertsim", "evaluate", "--data", "x.csv"]).is_err());
    }

    #[test]
    fn paired_flag_forms() {
        let parse = |extra: &[&str]| {
            let mut argv = vec!["alertsim", "trial", "--model", "m.json"];
            argv.extend_from_slice(extra);
            match Cli::try_parse_from(argv).unwrap().command {
                Command::Trial(args) => args.paired,
                _ => panic!("wrong subcommand"),
            }
        };
        assert_eq!(parse(&[]), None, "absent: defer to config/default");
        assert_eq!(parse(&["--paired"]), Some(true));
        assert_eq!(parse(&["--paired", "true"]), Some(true));
        assert_eq!(parse(&["--paired", "false"]), Some(false));
    }

    #[test]
    fn threshold_lists_parse() {
        assert_eq!(parse_thresholds("0.2,0.4").unwrap(), vec![0.2, 0.4]);
        assert_eq!(parse_thresholds(" 0.5 ").unwrap(), vec![0.5]);
        assert!(matches!(parse_thresholds("0.2,x"), Err(Error::Usage(_))));
        assert!(matches!(parse_thresholds(""), Err(Error::Usage(_))));
    }

    #[test]
    fn dynamics_precedence_defaults_config_flags() {
        let file = FileConfig {
            propulsion: Some(0.01),
            horizon: Some(30),
            ..FileConfig::default()
        };
        let args = DynamicsArgs {
            propulsion: Some(0.05),
            wind_sd: None,
            boundary: None,
            dt: None,
            horizon: None,
        };
        let dynamics = resolve_dynamics(&args, &file);
        assert_eq!(dynamics.propulsion, 0.05, "flag beats config");
        assert_eq!(dynamics.horizon, 30, "config beats default");
        assert_eq!(dynamics.wind_sd, DynamicsConfig::default().wind_sd, "default otherwise");
    }

    #[test]
    fn header_sniffing() {
        assert!(matches!(sniff_header(COHORT_HEADER), Ok(DataKind::Cohort)));
        assert!(matches!(
            sniff_header("patient_id,time,score,outcome\nA,0,0.5,0\n"),
            Ok(DataKind::Scores)
        ));
        assert!(matches!(
            sniff_header("patient_id,time,score,outcome\r\nA,0,0.5,0\r\n"),
            Ok(DataKind::Scores)
        ));
        assert!(matches!(sniff_header("id,x\n"), Err(Error::CsvHeader { .. })));
        assert!(matches!(sniff_header(""), Err(Error::CsvHeader { .. })));
    }
}
