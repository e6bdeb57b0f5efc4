//! File formats: cohort and score CSVs, model JSON, report rendering, and
//! flat key=value run configs.
//!
//! Everything here is string/reader based — no filesystem access — so the
//! formats are easy to test and the CLI owns all path handling.
//!
//! Row numbers in ingestion errors are 1-based file lines with the header
//! as line 1: "row 4" is the third data row.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::domain::{Cohort, ConfusionCounts, Metrics, Mode, TimePoint, Trajectory};
use crate::error::{Error, Result};
use crate::estimate::SensitivityPoint;
use crate::risk::{AlertPolicy, LogisticModel};
use crate::trial::{compare_arms, TrialResult};

/// Header of a full cohort CSV.
pub const COHORT_HEADER: &str = "patient_id,time,position,velocity,acceleration,score,alert,outcome";
/// Header of a score-stream CSV.
pub const SCORE_HEADER: &str = "patient_id,time,score,outcome";

const SCHEMA_VERSION: u64 = 1;

// ---------------------------------------------------------------------------
// Cohort CSV
// ---------------------------------------------------------------------------

/// Renders a cohort as CSV, one row per recorded timepoint.
///
/// Scores are empty when absent; `alert` and `outcome` are `0`/`1`. The
/// cohort's mode, seed, and digest are not carried by the format: a CSV
/// read back in is treated as an ingested silent record.
pub fn write_cohort_csv(cohort: &Cohort) -> Result<String> {
    let mut out = String::with_capacity(64 * cohort.len().max(1));
    out.push_str(COHORT_HEADER);
    out.push('\n');
    for tr in cohort.trajectories() {
        for tp in tr.timepoints() {
            let score = tp.score.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                escape_csv_field(tr.patient_id()),
                tp.t,
                tp.position,
                tp.velocity,
                tp.acceleration,
                score,
                u8::from(tp.alert),
                u8::from(tp.outcome),
            ));
        }
    }
    Ok(out)
}

/// Parses a cohort CSV produced by [`write_cohort_csv`] (or hand-written to
/// the same shape). Patients may interleave; within a patient, times must
/// strictly increase and an outcome row must be the last.
pub fn read_cohort_csv<R: Read>(reader: R) -> Result<Cohort> {
    let rows = read_rows(reader, COHORT_HEADER, 8)?;
    let mut builder = CohortBuilder::default();
    for row in rows {
        let line = row.line;
        let fields = &row.fields;
        let patient_id = parse_patient_id(line, &fields[0])?;
        let t = parse_u64(line, "time", &fields[1])?;
        let position = parse_f64(line, "position", &fields[2])?;
        let velocity = parse_f64(line, "velocity", &fields[3])?;
        let acceleration = parse_f64(line, "acceleration", &fields[4])?;
        let score = parse_score(line, &fields[5])?;
        let alert = parse_flag(line, "alert", &fields[6])?;
        let outcome = parse_flag(line, "outcome", &fields[7])?;
        builder.push(
            line,
            patient_id,
            TimePoint { t, position, velocity, acceleration, score, alert, outcome },
        )?;
    }
    builder.finish()
}

// ---------------------------------------------------------------------------
// Score CSV
// ---------------------------------------------------------------------------

/// Renders a cohort as a score stream: `patient_id,time,score,outcome`.
///
/// This is the interchange format for scores produced by an external model:
/// kinematics are dropped, alert flags are dropped (they are a function of
/// threshold, reapplied at evaluation time).
pub fn write_score_csv(cohort: &Cohort) -> Result<String> {
    let mut out = String::with_capacity(24 * cohort.len().max(1));
    out.push_str(SCORE_HEADER);
    out.push('\n');
    for tr in cohort.trajectories() {
        for tp in tr.timepoints() {
            let score = tp.score.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                escape_csv_field(tr.patient_id()),
                tp.t,
                score,
                u8::from(tp.outcome),
            ));
        }
    }
    Ok(out)
}

/// Parses an external score stream into a silent cohort whose timepoints
/// carry only scores and outcome flags (kinematics zeroed, no alerts).
///
/// Validation failures name the offending row: scores outside [0, 1],
/// non-increasing or duplicate times within a patient, rows after a
/// patient's outcome row, and malformed fields each raise a distinct error.
pub fn read_score_csv<R: Read>(reader: R) -> Result<Cohort> {
    let rows = read_rows(reader, SCORE_HEADER, 4)?;
    let mut builder = CohortBuilder::default();
    for row in rows {
        let line = row.line;
        let fields = &row.fields;
        let patient_id = parse_patient_id(line, &fields[0])?;
        let t = parse_u64(line, "time", &fields[1])?;
        let score = parse_score(line, &fields[2])?;
        let outcome = parse_flag(line, "outcome", &fields[3])?;
        builder.push(
            line,
            patient_id,
            TimePoint {
                t,
                position: 0.0,
                velocity: 0.0,
                acceleration: 0.0,
                score,
                alert: false,
                outcome,
            },
        )?;
    }
    builder.finish()
}

/// A recorded-score policy at the given threshold — the scorer to pair with
/// an ingested score stream.
pub fn threshold_policy(threshold: f64) -> Result<AlertPolicy> {
    AlertPolicy::recorded(threshold)
}

// ---------------------------------------------------------------------------
// Shared CSV machinery
// ---------------------------------------------------------------------------

struct Row {
    /// 1-based file line (header is line 1).
    line: usize,
    fields: Vec<String>,
}

fn read_rows<R: Read>(reader: R, expected_header: &str, arity: usize) -> Result<Vec<Row>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, record) in csv_reader.records().enumerate() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(idx + 1);
        let fields: Vec<String> = record.iter().map(|f| f.to_string()).collect();
        if idx == 0 {
            let found = fields.join(",");
            if found != expected_header {
                return Err(Error::CsvHeader { found });
            }
            saw_header = true;
            continue;
        }
        if fields.len() != arity {
            return Err(Error::MalformedRow {
                row: line,
                message: format!("expected {arity} fields, found {}", fields.len()),
            });
        }
        rows.push(Row { line, fields });
    }
    if !saw_header {
        return Err(Error::CsvHeader { found: String::new() });
    }
    Ok(rows)
}

fn escape_csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn parse_patient_id(line: usize, raw: &str) -> Result<String> {
    if raw.is_empty() {
        return Err(Error::MalformedRow { row: line, message: "empty patient_id".into() });
    }
    Ok(raw.to_string())
}

fn parse_u64(line: usize, name: &str, raw: &str) -> Result<u64> {
    raw.parse::<u64>().map_err(|_| Error::MalformedRow {
        row: line,
        message: format!("{name} '{raw}' is not a non-negative integer"),
    })
}

fn parse_f64(line: usize, name: &str, raw: &str) -> Result<f64> {
    let value: f64 = raw.parse().map_err(|_| Error::MalformedRow {
        row: line,
        message: format!("{name} '{raw}' is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::MalformedRow {
            row: line,
            message: format!("{name} '{raw}' is not finite"),
        });
    }
    Ok(value)
}

fn parse_score(line: usize, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    let value = parse_f64(line, "score", raw)?;
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ScoreOutOfRange { row: line, value });
    }
    Ok(Some(value))
}

fn parse_flag(line: usize, name: &str, raw: &str) -> Result<bool> {
    match raw {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::MalformedRow {
            row: line,
            message: format!("{name} '{raw}' is not 0 or 1"),
        }),
    }
}

/// Accumulates rows into per-patient trajectories, preserving first-seen
/// patient order and enforcing the per-row ordering rules with line numbers.
#[derive(Default)]
struct CohortBuilder {
    order: Vec<String>,
    rows: HashMap<String, Vec<TimePoint>>,
    last_time: HashMap<String, u64>,
    finished: HashMap<String, bool>,
}

impl CohortBuilder {
    fn push(&mut self, line: usize, patient_id: String, tp: TimePoint) -> Result<()> {
        if *self.finished.get(&patient_id).unwrap_or(&false) {
            return Err(Error::OutcomeNotFinal { row: line, patient_id });
        }
        if let Some(&prev) = self.last_time.get(&patient_id) {
            if tp.t == prev {
                return Err(Error::DuplicateTime { row: line, patient_id, t: tp.t });
            }
            if tp.t < prev {
                return Err(Error::UnsortedTimes { row: line, patient_id, t: tp.t, prev });
            }
        }
        self.last_time.insert(patient_id.clone(), tp.t);
        if tp.outcome {
            self.finished.insert(patient_id.clone(), true);
        }
        match self.rows.get_mut(&patient_id) {
            Some(list) => list.push(tp),
            None => {
                self.order.push(patient_id.clone());
                self.rows.insert(patient_id, vec![tp]);
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Cohort> {
        let mut trajectories = Vec::with_capacity(self.order.len());
        for id in &self.order {
            let pts = self.rows.remove(id).expect("tracked");
            trajectories.push(Trajectory::new(id, pts)?);
        }
        Cohort::new(trajectories, Mode::Silent, 0, "ingested")
    }
}

// ---------------------------------------------------------------------------
// Model JSON
// ---------------------------------------------------------------------------

/// On-disk model format: coefficients plus the label window they were
/// trained for, and optionally a deployment threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lookahead: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

/// Serializes a model (and an optional default threshold) as pretty JSON
/// with a trailing newline.
pub fn save_model(model: &LogisticModel, threshold: Option<f64>) -> Result<String> {
    if let Some(th) = threshold {
        if !th.is_finite() || th <= 0.0 || th >= 1.0 {
            return Err(Error::InvalidThreshold(th));
        }
    }
    let file = ModelFile {
        feature_names: model.feature_names().to_vec(),
        weights: model.weights().to_vec(),
        intercept: model.intercept(),
        lookahead: model.lookahead(),
        threshold,
    };
    Ok(format!("{}\n", serde_json::to_string_pretty(&file)?))
}

/// Parses model JSON back into a validated model and its stored threshold.
pub fn load_model(text: &str) -> Result<(LogisticModel, Option<f64>)> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))?;
    if let Some(th) = file.threshold {
        if !th.is_finite() || th <= 0.0 || th >= 1.0 {
            return Err(Error::InvalidThreshold(th));
        }
    }
    let model =
        LogisticModel::new(file.feature_names, file.weights, file.intercept, file.lookahead)?;
    Ok((model, file.threshold))
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// What to render.
#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    /// Raw confusion counts, one row per evaluation.
    Counts(&'a [ConfusionCounts]),
    /// Derived classification metrics, one row per evaluation.
    Metrics(&'a [ConfusionCounts]),
    /// Trial arms versus control.
    Trial(&'a TrialResult),
    /// Prevented outcomes across a response-effectiveness grid.
    Sensitivity(&'a [SensitivityPoint]),
}

/// Output encodings for [`write_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Pretty,
}

/// Renders a report in the requested format. All formats are deterministic:
/// same inputs, same bytes.
pub fn write_report(report: &Report, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => report_csv(report),
        ReportFormat::Json => report_json(report),
        ReportFormat::Pretty => Ok(report_pretty(report)),
    }
}

fn threshold_cell(counts: &ConfusionCounts) -> String {
    counts.config.threshold.map(|t| t.to_string()).unwrap_or_default()
}

fn option_cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn report_csv(report: &Report) -> Result<String> {
    let mut out = String::new();
    match report {
        Report::Counts(rows) => {
            out.push_str("strategy,threshold,tp,fp,fn,tn,positives\n");
            for c in *rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.strategy.token(),
                    threshold_cell(c),
                    c.tp,
                    c.fp,
                    c.fn_,
                    c.tn,
                    c.positives(),
                ));
            }
        }
        Report::Metrics(rows) => {
            out.push_str("strategy,threshold,sensitivity,specificity,ppv,positives\n");
            for c in *rows {
                let m = crate::domain::confusion_metrics(c);
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.strategy.token(),
                    threshold_cell(c),
                    option_cell(m.sensitivity),
                    option_cell(m.specificity),
                    option_cell(m.ppv),
                    m.positives,
                ));
            }
        }
        Report::Trial(result) => {
            out.push_str("label,prevented_outcomes,alerts\n");
            for row in compare_arms(result) {
                out.push_str(&format!(
                    "{},{},{}\n",
                    escape_csv_field(&row.label),
                    row.prevented_outcomes,
                    row.alerts
                ));
            }
        }
        Report::Sensitivity(points) => {
            out.push_str("rho,prevented\n");
            for p in *points {
                out.push_str(&format!("{},{}\n", p.rho, p.prevented));
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    strategy: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(flatten)]
    metrics: Metrics,
}

fn report_json(report: &Report) -> Result<String> {
    let value = match report {
        Report::Counts(rows) => serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "confusion_counts",
            "results": rows,
        }),
        Report::Metrics(rows) => {
            let rendered: Vec<MetricsRow> = rows
                .iter()
                .map(|c| MetricsRow {
                    strategy: c.strategy.token(),
                    threshold: c.config.threshold,
                    metrics: crate::domain::confusion_metrics(c),
                })
                .collect();
            serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "kind": "metrics",
                "results": rendered,
            })
        }
        Report::Trial(result) => serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "trial",
            "trial": result,
        }),
        Report::Sensitivity(points) => serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "sensitivity",
            "points": points,
        }),
    };
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}

/// Renders rows as a space-padded table with left-aligned columns.
fn pretty_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let render = |cells: Vec<String>| -> String {
        let mut line = String::new();
        let last = cells.len().saturating_sub(1);
        for (i, (cell, width)) in cells.into_iter().zip(&widths).enumerate() {
            if i == last {
                line.push_str(&cell);
            } else {
                line.push_str(&format!("{cell:<width$}  "));
            }
        }
        line.trim_end().to_string()
    };
    let mut out = render(header.iter().map(|h| h.to_string()).collect());
    out.push('\n');
    for row in rows {
        out.push_str(&render(row.clone()));
        out.push('\n');
    }
    out
}

fn pretty_metric(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

fn pretty_threshold(counts: &ConfusionCounts) -> String {
    counts
        .config
        .threshold
        .map(|t| format!("{t:.2}"))
        .unwrap_or_else(|| "-".into())
}

fn report_pretty(report: &Report) -> String {
    match report {
        Report::Counts(rows) => {
            let table_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|c| {
                    vec![
                        c.strategy.to_string(),
                        pretty_threshold(c),
                        c.tp.to_string(),
                        c.fp.to_string(),
                        c.fn_.to_string(),
                        c.tn.to_string(),
                        c.positives().to_string(),
                    ]
                })
                .collect();
            let mut out = pretty_table(
                &[
                    "Evaluation",
                    "Threshold",
                    "True Positives",
                    "False Positives",
                    "False Negatives",
                    "True Negatives",
                    "Positives",
                ],
                &table_rows,
            );
            out.push_str(
                "\nUnits: aggregated time counts patient-timepoints; fixed time and first alert count patients.\n",
            );
            out
        }
        Report::Metrics(rows) => {
            let table_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|c| {
                    let m = crate::domain::confusion_metrics(c);
                    vec![
                        c.strategy.to_string(),
                        pretty_threshold(c),
                        pretty_metric(m.sensitivity),
                        pretty_metric(m.specificity),
                        pretty_metric(m.ppv),
                        m.positives.to_string(),
                    ]
                })
                .collect();
            let mut out = pretty_table(
                &["Evaluation", "Threshold", "Sensitivity", "Specificity", "PPV", "Positives"],
                &table_rows,
            );
            out.push_str("\nUndefined metrics (zero denominator) shown as -.\n");
            out
        }
        Report::Trial(result) => {
            let rows: Vec<Vec<String>> = compare_arms(result)
                .into_iter()
                .map(|row| {
                    vec![row.label, row.prevented_outcomes.to_string(), row.alerts.to_string()]
                })
                .collect();
            let mut out = pretty_table(&["Arm", "Prevented Outcomes", "Alerts"], &rows);
            let control = result.control();
            out.push_str(&format!(
                "\nControl arm \"{}\": {} outcomes. {} patients per arm, {} draws.\n",
                control.label,
                control.total_outcomes,
                result.n_per_arm,
                if result.paired { "paired" } else { "independent" },
            ));
            out
        }
        Report::Sensitivity(points) => {
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| vec![format!("{:.2}", p.rho), format!("{:.1}", p.prevented)])
                .collect();
            let mut out = pretty_table(&["Rho", "Prevented Outcomes"], &rows);
            out.push_str("\nRho is the outcome risk multiplier when an alert is answered: 0 always works, 1 never does.\n");
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Run configuration files
// ---------------------------------------------------------------------------

/// A parsed flat `key = value` configuration file. Every field is optional;
/// the caller layers these over its own defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub patients: Option<u64>,
    pub horizon: Option<u64>,
    pub seed: Option<u64>,
    pub propulsion: Option<f64>,
    pub wind_sd: Option<f64>,
    pub boundary: Option<f64>,
    pub dt: Option<f64>,
    pub lookahead: Option<u64>,
    pub t_star: Option<u64>,
    pub thresholds: Option<Vec<f64>>,
    pub n_per_arm: Option<u64>,
    pub intervention: Option<String>,
    pub magnitude: Option<f64>,
    pub paired: Option<bool>,
}

/// Parses a flat config: one `key = value` per line, `#` comments, blank
/// lines ignored. Unknown keys, duplicate keys, and unparseable values are
/// errors naming the line.
pub fn parse_config(text: &str) -> Result<FileConfig> {
    let mut config = FileConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigParse {
                line: line_no,
                message: format!("expected key = value, found '{line}'"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(Error::ConfigParse {
                line: line_no,
                message: format!("duplicate key '{key}'"),
            });
        }
        seen.push(key.to_string());
        match key {
            "patients" => config.patients = Some(config_u64(line_no, key, value)?),
            "horizon" => config.horizon = Some(config_u64(line_no, key, value)?),
            "seed" => config.seed = Some(config_u64(line_no, key, value)?),
            "propulsion" => config.propulsion = Some(config_f64(line_no, key, value)?),
            "wind_sd" => config.wind_sd = Some(config_f64(line_no, key, value)?),
            "boundary" => config.boundary = Some(config_f64(line_no, key, value)?),
            "dt" => config.dt = Some(config_f64(line_no, key, value)?),
            "lookahead" => config.lookahead = Some(config_u64(line_no, key, value)?),
            "t_star" => config.t_star = Some(config_u64(line_no, key, value)?),
            "thresholds" => {
                let mut values = Vec::new();
                for part in value.split(',') {
                    values.push(config_f64(line_no, key, part.trim())?);
                }
                config.thresholds = Some(values);
            }
            "n_per_arm" => config.n_per_arm = Some(config_u64(line_no, key, value)?),
            "intervention" => config.intervention = Some(value.to_string()),
            "magnitude" => config.magnitude = Some(config_f64(line_no, key, value)?),
            "paired" => {
                config.paired = Some(match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(Error::ConfigParse {
                            line: line_no,
                            message: format!("paired must be true or false, found '{other}'"),
                        })
                    }
                })
            }
            other => {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
    }
    Ok(config)
}

fn config_u64(line: usize, key: &str, value: &str) -> Result<u64> {
    value.parse().map_err(|_| Error::ConfigParse {
        line,
        message: format!("{key} '{value}' is not a non-negative integer"),
    })
}

fn config_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    let parsed: f64 = value.parse().map_err(|_| Error::ConfigParse {
        line,
        message: format!("{key} '{value}' is not a number"),
    })?;
    if !parsed.is_finite() {
        return Err(Error::ConfigParse {
            line,
            message: format!("{key} '{value}' is not finite"),
        });
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{EvalParams, Strategy, Unit};
    use crate::simulator::{generate_cohort, DynamicsConfig, InterventionSpec};
    use crate::trial::{ArmResult, TrialResult};

    fn sample_cohort() -> Cohort {
        generate_cohort(5, 7, &DynamicsConfig::default(), None, &InterventionSpec::none())
            .unwrap()
    }

    #[test]
    fn cohort_csv_round_trips() {
        let cohort = sample_cohort();
        let csv = write_cohort_csv(&cohort).unwrap();
        assert!(csv.starts_with(COHORT_HEADER));
        let back = read_cohort_csv(csv.as_bytes()).unwrap();
        assert_eq!(back.len(), cohort.len());
        for (a, b) in cohort.trajectories().iter().zip(back.trajectories()) {
            assert_eq!(a.patient_id(), b.patient_id());
            assert_eq!(a.timepoints(), b.timepoints());
        }
        // Regenerating the CSV from the parse gives identical bytes.
        assert_eq!(write_cohort_csv(&back).unwrap(), csv);
    }

    #[test]
    fn score_csv_round_trips() {
        let text = "\
patient_id,time,score,outcome
A,0,0.25,0
A,1,0.75,0
A,2,,1
B,0,0.5,0
";
        let cohort = read_score_csv(text.as_bytes()).unwrap();
        assert_eq!(cohort.len(), 2);
        assert_eq!(cohort.trajectories()[0].outcome_time(), Some(2));
        assert_eq!(cohort.trajectories()[0].timepoints()[1].score, Some(0.75));
        assert_eq!(write_score_csv(&cohort).unwrap(), text);
    }

    #[test]
    fn interleaved_patients_are_accepted() {
        let text = "\
patient_id,time,score,outcome
A,0,0.1,0
B,0,0.2,0
A,1,0.3,0
B,1,0.4,1
A,2,0.5,0
";
        let cohort = read_score_csv(text.as_bytes()).unwrap();
        assert_eq!(cohort.len(), 2);
        // First-seen order is preserved.
        assert_eq!(cohort.trajectories()[0].patient_id(), "A");
        assert_eq!(cohort.trajectories()[0].timepoints().len(), 3);
        assert_eq!(cohort.trajectories()[1].outcome_time(), Some(1));
    }

    #[test]
    fn wrong_header_is_rejected_with_what_was_found() {
        let text = "id,time,score,outcome\nA,0,0.5,0\n";
        match read_score_csv(text.as_bytes()) {
            Err(Error::CsvHeader { found }) => assert_eq!(found, "id,time,score,outcome"),
            other => panic!("expected CsvHeader, got {other:?}"),
        }
        // Empty input has no header at all.
        assert!(matches!(
            read_score_csv("".as_bytes()),
            Err(Error::CsvHeader { found }) if found.is_empty()
        ));
        // Header-only input is an empty cohort, not an error.
        let cohort = read_score_csv(SCORE_HEADER.as_bytes()).unwrap();
        assert!(cohort.is_empty());
    }

    #[test]
    fn out_of_range_score_names_its_row() {
        // Third data row = file line 4.
        let text = "\
patient_id,time,score,outcome
A,0,0.5,0
A,1,0.5,0
A,2,1.2,0
";
        match read_score_csv(text.as_bytes()) {
            Err(Error::ScoreOutOfRange { row, value }) => {
                assert_eq!(row, 4);
                assert_eq!(value, 1.2);
            }
            other => panic!("expected ScoreOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn unsorted_and_duplicate_times_name_their_rows() {
        let unsorted = "\
patient_id,time,score,outcome
A,0,0.5,0
A,2,0.5,0
A,1,0.5,0
";
        match read_score_csv(unsorted.as_bytes()) {
            Err(Error::UnsortedTimes { row, patient_id, t, prev }) => {
                assert_eq!((row, t, prev), (4, 1, 2));
                assert_eq!(patient_id, "A");
            }
            other => panic!("expected UnsortedTimes, got {other:?}"),
        }
        let duplicate = "\
patient_id,time,score,outcome
A,0,0.5,0
A,0,0.5,0
";
        match read_score_csv(duplicate.as_bytes()) {
            Err(Error::DuplicateTime { row, patient_id, t }) => {
                assert_eq!((row, t), (3, 0));
                assert_eq!(patient_id, "A");
            }
            other => panic!("expected DuplicateTime, got {other:?}"),
        }
    }

    #[test]
    fn rows_after_an_outcome_are_rejected() {
        let text = "\
patient_id,time,score,outcome
A,0,0.5,1
A,1,0.5,0
";
        match read_score_csv(text.as_bytes()) {
            Err(Error::OutcomeNotFinal { row, patient_id }) => {
                assert_eq!(row, 3);
                assert_eq!(patient_id, "A");
            }
            other => panic!("expected OutcomeNotFinal, got {other:?}"),
        }
        // Interleaving does not reset the rule.
        let interleaved = "\
patient_id,time,score,outcome
A,0,0.5,1
B,0,0.5,0
A,1,0.5,0
";
        assert!(matches!(
            read_score_csv(interleaved.as_bytes()),
            Err(Error::OutcomeNotFinal { row: 4, .. })
        ));
    }

    #[test]
    fn malformed_rows_name_their_rows() {
        let bad_arity = "\
patient_id,time,score,outcome
A,0,0.5
";
        assert!(matches!(
            read_score_csv(bad_arity.as_bytes()),
            Err(Error::MalformedRow { row: 2, .. })
        ));
        let bad_time = "\
patient_id,time,score,outcome
A,zero,0.5,0
";
        match read_score_csv(bad_time.as_bytes()) {
            Err(Error::MalformedRow { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains("time"), "{message}");
            }
            other => panic!("expected MalformedRow, got {other:?}"),
        }
        let bad_flag = "\
patient_id,time,score,outcome
A,0,0.5,yes
";
        assert!(matches!(
            read_score_csv(bad_flag.as_bytes()),
            Err(Error::MalformedRow { row: 2, .. })
        ));
        let empty_id = "\
patient_id,time,score,outcome
,0,0.5,0
";
        assert!(matches!(
            read_score_csv(empty_id.as_bytes()),
            Err(Error::MalformedRow { row: 2, .. })
        ));
    }

    #[test]
    fn cohort_csv_rejects_bad_kinematics_and_flags() {
        let bad_alert = "\
patient_id,time,position,velocity,acceleration,score,alert,outcome
A,0,0.0,0.0,0.0,,2,0
";
        assert!(matches!(
            read_cohort_csv(bad_alert.as_bytes()),
            Err(Error::MalformedRow { row: 2, .. })
        ));
        let bad_position = "\
patient_id,time,position,velocity,acceleration,score,alert,outcome
A,0,abc,0.0,0.0,,0,0
";
        assert!(matches!(
            read_cohort_csv(bad_position.as_bytes()),
            Err(Error::MalformedRow { row: 2, .. })
        ));
        let inf_position = "\
patient_id,time,position,velocity,acceleration,score,alert,outcome
A,0,inf,0.0,0.0,,0,0
";
        assert!(matches!(
            read_cohort_csv(inf_position.as_bytes()),
            Err(Error::MalformedRow { row: 2, .. })
        ));
        // Structural violations caught at trajectory assembly: an alert on
        // an outcome row.
        let alert_on_outcome = "\
patient_id,time,position,velocity,acceleration,score,alert,outcome
A,0,0.0,0.0,0.0,,1,1
";
        assert!(matches!(
            read_cohort_csv(alert_on_outcome.as_bytes()),
            Err(Error::InvalidTrajectory { .. })
        ));
    }

    #[test]
    fn model_json_round_trips_and_rejects_unknown_fields() {
        let model = LogisticModel::new(
            vec!["position".into(), "velocity".into(), "acceleration".into()],
            vec![1.25, -0.5, 0.125],
            -3.5,
            5,
        )
        .unwrap();
        let text = save_model(&model, Some(0.4)).unwrap();
        assert!(text.ends_with('\n'));
        let (back, threshold) = load_model(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(threshold, Some(0.4));

        let no_threshold = save_model(&model, None).unwrap();
        assert!(!no_threshold.contains("threshold"));
        let (_, th) = load_model(&no_threshold).unwrap();
        assert_eq!(th, None);

        let with_extra = text.replace("\"intercept\"", "\"surprise\": 1,\n  \"intercept\"");
        assert!(matches!(load_model(&with_extra), Err(Error::ModelFile(_))));

        let mismatched = r#"{"feature_names":["a"],"weights":[1.0,2.0],"intercept":0.0,"lookahead":5}"#;
        assert!(matches!(load_model(mismatched), Err(Error::InvalidModel(_))));

        let bad_threshold = save_model(&model, Some(0.4)).unwrap().replace("0.4", "1.4");
        assert!(matches!(load_model(&bad_threshold), Err(Error::InvalidThreshold(_))));
        assert!(matches!(save_model(&model, Some(0.0)), Err(Error::InvalidThreshold(_))));
    }

    fn counts(strategy: Strategy, threshold: Option<f64>) -> ConfusionCounts {
        ConfusionCounts {
            tp: 10,
            fp: 5,
            fn_: 3,
            tn: 82,
            strategy,
            unit: if strategy == Strategy::AggregatedTime {
                Unit::PatientTimepoint
            } else {
                Unit::Patient
            },
            config: EvalParams { lookahead: Some(5), t_star: None, threshold },
        }
    }

    #[test]
    fn counts_csv_layout() {
        let rows = vec![
            counts(Strategy::AggregatedTime, Some(0.2)),
            counts(Strategy::FirstAlert, None),
        ];
        let text = write_report(&Report::Counts(&rows), ReportFormat::Csv).unwrap();
        let expected = "\
strategy,threshold,tp,fp,fn,tn,positives
aggregated_time,0.2,10,5,3,82,15
first_alert,,10,5,3,82,15
";
        assert_eq!(text, expected);
    }

    #[test]
    fn metrics_csv_layout() {
        let rows = vec![counts(Strategy::FixedTime, Some(0.4))];
        let text = write_report(&Report::Metrics(&rows), ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "strategy,threshold,sensitivity,specificity,ppv,positives");
        // sens = 10/13, spec = 82/87, ppv = 10/15.
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[0], "fixed_time");
        assert_eq!(fields[1], "0.4");
        assert!((fields[2].parse::<f64>().unwrap() - 10.0 / 13.0).abs() < 1e-12);
        assert!((fields[3].parse::<f64>().unwrap() - 82.0 / 87.0).abs() < 1e-12);
        assert!((fields[4].parse::<f64>().unwrap() - 10.0 / 15.0).abs() < 1e-12);
        assert_eq!(fields[5], "15");

        // Zero denominators render as empty cells, not NaN.
        let empty = ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 4,
            strategy: Strategy::FirstAlert,
            unit: Unit::Patient,
            config: EvalParams::default(),
        };
        let text = write_report(&Report::Metrics(&[empty]), ReportFormat::Csv).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("first_alert,,,"));
    }

    #[test]
    fn json_reports_carry_schema_version_and_kind() {
        let rows = vec![counts(Strategy::AggregatedTime, Some(0.2))];
        let text = write_report(&Report::Counts(&rows), ReportFormat::Json).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["schema_version"], 1);
        assert_eq!(value["kind"], "confusion_counts");
        assert_eq!(value["results"][0]["tp"], 10);
        assert_eq!(value["results"][0]["fn"], 3, "field name is fn, not fn_");

        let trial = trial_fixture();
        let text = write_report(&Report::Trial(&trial), ReportFormat::Json).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["kind"], "trial");
        assert_eq!(value["trial"]["arms"][1]["prevented_outcomes"], 20);

        let points = [SensitivityPoint { rho: 0.5, prevented: 50.0 }];
        let text = write_report(&Report::Sensitivity(&points), ReportFormat::Json).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["kind"], "sensitivity");
        assert_eq!(value["points"][0]["rho"], 0.5);
    }

    fn trial_fixture() -> TrialResult {
        TrialResult {
            arms: vec![
                ArmResult {
                    label: "control".into(),
                    is_control: true,
                    total_outcomes: 120,
                    total_alerts: 0,
                    prevented_outcomes: None,
                    outcome_rate: 0.6,
                    alert_rate: 0.0,
                },
                ArmResult {
                    label: "threshold_0.4".into(),
                    is_control: false,
                    total_outcomes: 100,
                    total_alerts: 150,
                    prevented_outcomes: Some(20),
                    outcome_rate: 0.5,
                    alert_rate: 0.75,
                },
            ],
            n_per_arm: 200,
            paired: true,
            base_seed: 42,
        }
    }

    #[test]
    fn trial_csv_and_pretty_layouts() {
        let trial = trial_fixture();
        let text = write_report(&Report::Trial(&trial), ReportFormat::Csv).unwrap();
        assert_eq!(text, "label,prevented_outcomes,alerts\nthreshold_0.4,20,150\n");

        let pretty = write_report(&Report::Trial(&trial), ReportFormat::Pretty).unwrap();
        assert!(pretty.starts_with("Arm  "), "{pretty}");
        assert!(pretty.contains("Prevented Outcomes"));
        assert!(pretty.contains("threshold_0.4"));
        assert!(pretty.contains("Control arm \"control\": 120 outcomes"));
        assert!(pretty.contains("paired draws"));
    }

    #[test]
    fn pretty_counts_layout() {
        let rows = vec![
            counts(Strategy::AggregatedTime, Some(0.2)),
            counts(Strategy::FirstAlert, None),
        ];
        let text = write_report(&Report::Counts(&rows), ReportFormat::Pretty).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("Evaluation"));
        assert!(first.contains("Threshold"));
        assert!(first.contains("True Positives"));
        assert!(first.contains("Positives"));
        assert!(text.contains("Aggregated Time  0.20"));
        assert!(text.contains("First Alert      -"));
        assert!(text.contains("patient-timepoints"));
    }

    #[test]
    fn reports_are_deterministic() {
        let rows = vec![counts(Strategy::FixedTime, Some(0.6))];
        for format in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Pretty] {
            let a = write_report(&Report::Counts(&rows), format).unwrap();
            let b = write_report(&Report::Counts(&rows), format).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn config_files_parse_with_comments_and_defaults() {
        let text = "\
# run parameters
patients = 500
horizon = 20
seed = 42

propulsion = 0.002
wind_sd = 0.35   # gusty
thresholds = 0.2, 0.4, 0.6, 0.8
paired = true
intervention = force
";
        let config = parse_config(text).unwrap();
        assert_eq!(config.patients, Some(500));
        assert_eq!(config.horizon, Some(20));
        assert_eq!(config.seed, Some(42));
        assert_eq!(config.propulsion, Some(0.002));
        assert_eq!(config.wind_sd, Some(0.35));
        assert_eq!(config.thresholds, Some(vec![0.2, 0.4, 0.6, 0.8]));
        assert_eq!(config.paired, Some(true));
        assert_eq!(config.intervention.as_deref(), Some("force"));
        assert_eq!(config.t_star, None, "unset keys stay None");

        assert_eq!(parse_config("").unwrap(), FileConfig::default());
        assert_eq!(parse_config("# only comments\n\n").unwrap(), FileConfig::default());
    }

    #[test]
    fn config_errors_name_their_lines() {
        match parse_config("patients = 500\nwindspeed = 3\n") {
            Err(Error::ConfigParse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("windspeed"), "{message}");
            }
            other => panic!("expected ConfigParse, got {other:?}"),
        }
        assert!(matches!(
            parse_config("patients = many\n"),
            Err(Error::ConfigParse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("seed = 1\nseed = 2\n"),
            Err(Error::ConfigParse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("just some words\n"),
            Err(Error::ConfigParse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("paired = maybe\n"),
            Err(Error::ConfigParse { line: 1, .. })
        ));
    }
}
