//! Per-run reports, multi-seed summaries, and their CSV / JSON / text forms.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::selectors::{ClientId, SelectorKind};

/// What happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: usize,
    pub start_s: f64,
    pub duration_s: f64,
    pub selected: Vec<ClientId>,
    pub failed: Vec<ClientId>,
    pub skipped: bool,
    /// Test accuracy in `[0, 1]`, present on evaluation rounds.
    pub accuracy: Option<f64>,
}

impl RoundOutcome {
    pub fn succeeded(&self) -> impl Iterator<Item = ClientId> + '_ {
        self.selected.iter().copied().filter(|c| !self.failed.contains(c))
    }
}

/// Metrics of a single experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub selector: SelectorKind,
    pub run_seed: u64,
    /// Sum of round durations; evaluation time is not simulated.
    pub training_time_s: f64,
    pub failed_rounds: usize,
    pub skipped_rounds: usize,
    /// Final test accuracy in percent.
    pub final_accuracy: f64,
    pub avg_failed_clients: f64,
    pub unique_participants: usize,
    pub total_participants: usize,
    pub rounds: Vec<RoundOutcome>,
}

impl ExperimentReport {
    /// Build the metrics from a round log.
    pub fn from_rounds(
        selector: SelectorKind,
        run_seed: u64,
        final_accuracy: f64,
        rounds: Vec<RoundOutcome>,
    ) -> Self {
        let training_time_s = rounds.iter().map(|r| r.duration_s).sum();
        let failed_rounds = rounds.iter().filter(|r| !r.failed.is_empty()).count();
        let skipped_rounds = rounds.iter().filter(|r| r.skipped).count();
        let failed_clients: usize = rounds.iter().map(|r| r.failed.len()).sum();
        let avg_failed_clients = if rounds.is_empty() {
            0.0
        } else {
            failed_clients as f64 / rounds.len() as f64
        };
        let total_participants = rounds.iter().map(|r| r.succeeded().count()).sum();
        let unique_participants = rounds
            .iter()
            .flat_map(RoundOutcome::succeeded)
            .collect::<BTreeSet<_>>()
            .len();
        Self {
            selector,
            run_seed,
            training_time_s,
            failed_rounds,
            skipped_rounds,
            final_accuracy,
            avg_failed_clients,
            unique_participants,
            total_participants,
            rounds,
        }
    }

    /// `(time_s, accuracy)` at the end of every evaluation round.
    pub fn accuracy_series(&self) -> Vec<(f64, f64)> {
        self.rounds
            .iter()
            .filter_map(|r| r.accuracy.map(|a| (r.start_s + r.duration_s, a)))
            .collect()
    }
}

/// Row labels of the summary table, in display order.
pub const METRIC_LABELS: [&str; 7] = [
    "Training time(s)",
    "Failed rounds",
    "Accuracy mean",
    "Accuracy std",
    "Average failed clients",
    "Unique participants",
    "Total participants",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub value: f64,
    /// Standard deviation across runs; absent for the accuracy rows, which
    /// already are the mean and the spread of the final accuracy.
    pub std: Option<f64>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Metric table over repeated runs of one selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn from_reports(reports: &[ExperimentReport]) -> Self {
        let col = |f: fn(&ExperimentReport) -> f64| -> (f64, f64) {
            mean_std(&reports.iter().map(f).collect::<Vec<_>>())
        };
        let time = col(|r| r.training_time_s);
        let failed = col(|r| r.failed_rounds as f64);
        let acc = col(|r| r.final_accuracy);
        let avg_failed = col(|r| r.avg_failed_clients);
        let unique = col(|r| r.unique_participants as f64);
        let total = col(|r| r.total_participants as f64);
        let spread = |label: &str, (value, std): (f64, f64)| SummaryRow {
            label: label.into(),
            value,
            std: Some(std),
        };
        let plain = |label: &str, value: f64| SummaryRow {
            label: label.into(),
            value,
            std: None,
        };
        Self {
            runs: reports.len(),
            rows: vec![
                spread(METRIC_LABELS[0], time),
                spread(METRIC_LABELS[1], failed),
                plain(METRIC_LABELS[2], acc.0),
                plain(METRIC_LABELS[3], acc.1),
                spread(METRIC_LABELS[4], avg_failed),
                spread(METRIC_LABELS[5], unique),
                spread(METRIC_LABELS[6], total),
            ],
        }
    }

    pub fn get(&self, label: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn training_time(&self) -> f64 {
        self.rows[0].value
    }
}

fn format_value(row: &SummaryRow) -> String {
    match row.std {
        Some(std) if std > 0.0 => format!("{:.2} ± {:.2}", row.value, std),
        _ => format!("{:.2}", row.value),
    }
}

/// Plain-text table of one or more summaries side by side. A `*` marks the
/// column given by `highlight`.
pub fn render_table(columns: &[(String, &Summary)], highlight: Option<usize>) -> String {
    let headers: Vec<String> = columns
        .iter()
        .enumerate()
        .map(|(i, (name, _))| {
            if Some(i) == highlight {
                format!("{name}*")
            } else {
                name.clone()
            }
        })
        .collect();
    let cells: Vec<Vec<String>> = columns
        .iter()
        .map(|(_, s)| s.rows.iter().map(format_value).collect())
        .collect();
    let label_w = METRIC_LABELS.iter().map(|l| l.len()).max().unwrap_or(0);
    let widths: Vec<usize> = headers
        .iter()
        .zip(&cells)
        .map(|(h, c)| c.iter().map(|s| s.chars().count()).chain([h.len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    write!(out, "{:label_w$}", "").unwrap();
    for (h, w) in headers.iter().zip(&widths) {
        write!(out, "  {h:>w$}").unwrap();
    }
    out.push('\n');
    for (row, label) in METRIC_LABELS.iter().enumerate() {
        write!(out, "{label:label_w$}").unwrap();
        for (col, w) in cells.iter().zip(&widths) {
            write!(out, "  {:>w$}", col[row]).unwrap();
        }
        out.push('\n');
    }
    if highlight.is_some() {
        out.push_str("* fastest (lowest mean training time)\n");
    }
    out
}

/// Round log as CSV: `round,start_s,duration_s,selected,failed,skipped,accuracy`.
pub fn round_log_csv(report: &ExperimentReport) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "round",
        "start_s",
        "duration_s",
        "selected",
        "failed",
        "skipped",
        "accuracy",
    ])?;
    let join = |ids: &[ClientId]| ids.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
    for r in &report.rounds {
        w.write_record([
            r.round.to_string(),
            r.start_s.to_string(),
            r.duration_s.to_string(),
            join(&r.selected),
            join(&r.failed),
            r.skipped.to_string(),
            r.accuracy.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

/// Comparison CSV: one metric column plus one column per selector.
pub fn comparison_csv(columns: &[(String, &Summary)], fastest: Option<usize>) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["metric".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.clone()));
    w.write_record(&header)?;
    for (row, label) in METRIC_LABELS.iter().enumerate() {
        let mut rec = vec![label.to_string()];
        for (_, s) in columns {
            let r = &s.rows[row];
            rec.push(match r.std {
                Some(std) => format!("{} ± {}", r.value, std),
                None => r.value.to_string(),
            });
        }
        w.write_record(&rec)?;
    }
    let mut rec = vec!["Fastest".to_string()];
    rec.extend((0..columns.len()).map(|i| if Some(i) == fastest { "yes" } else { "" }.to_string()));
    w.write_record(&rec)?;
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(round: usize, duration: f64, selected: &[usize], failed: &[usize]) -> RoundOutcome {
        RoundOutcome {
            round,
            start_s: round as f64 * 10.0,
            duration_s: duration,
            selected: selected.to_vec(),
            failed: failed.to_vec(),
            skipped: selected.is_empty(),
            accuracy: None,
        }
    }

    #[test]
    fn participant_counts_exclude_failures() {
        let rounds = vec![
            round(0, 5.0, &[1, 2, 3], &[2]),
            round(1, 8.0, &[1, 4], &[]),
            round(2, 60.0, &[], &[]),
        ];
        let rep = ExperimentReport::from_rounds(SelectorKind::Random, 1, 50.0, rounds);
        assert_eq!(rep.training_time_s, 73.0);
        assert_eq!(rep.failed_rounds, 1);
        assert_eq!(rep.skipped_rounds, 1);
        assert_eq!(rep.total_participants, 4);
        assert_eq!(rep.unique_participants, 3);
        assert!((rep.avg_failed_clients - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_log_is_all_zero() {
        let rep = ExperimentReport::from_rounds(SelectorKind::Mda, 1, 0.0, vec![]);
        assert_eq!(rep.training_time_s, 0.0);
        assert_eq!(rep.avg_failed_clients, 0.0);
    }

    #[test]
    fn summary_rows_follow_table_order() {
        let a = ExperimentReport::from_rounds(SelectorKind::Random, 1, 70.0, vec![round(0, 4.0, &[1], &[])]);
        let b = ExperimentReport::from_rounds(SelectorKind::Random, 2, 80.0, vec![round(0, 6.0, &[1], &[1])]);
        let s = Summary::from_reports(&[a, b]);
        let labels: Vec<&str> = s.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, METRIC_LABELS);
        assert_eq!(s.training_time(), 5.0);
        assert_eq!(s.get("Accuracy mean").unwrap().value, 75.0);
        assert!((s.get("Accuracy std").unwrap().value - 50f64.sqrt()).abs() < 1e-12);
        let table = render_table(&[("random".into(), &s)], Some(0));
        for l in METRIC_LABELS {
            assert!(table.contains(l));
        }
    }

    #[test]
    fn csv_outputs() {
        let mut r = round(0, 4.0, &[1, 3], &[3]);
        r.accuracy = Some(0.25);
        let rep = ExperimentReport::from_rounds(SelectorKind::Random, 1, 25.0, vec![r, round(1, 2.0, &[2], &[])]);
        let csv = round_log_csv(&rep).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "round,start_s,duration_s,selected,failed,skipped,accuracy");
        assert_eq!(lines[1], "0,0,4,1;3,3,false,0.25");
        assert_eq!(lines[2], "1,10,2,2,,false,");

        let s = Summary::from_reports(&[rep]);
        let cmp = comparison_csv(&[("random".into(), &s), ("mda".into(), &s)], Some(1)).unwrap();
        for line in cmp.lines() {
            assert_eq!(line.split(',').count(), 3, "{line}");
        }
        assert!(cmp.lines().last().unwrap().ends_with(",,yes"));
    }
}
