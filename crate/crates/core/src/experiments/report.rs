//! Reproduction report: our means beside the published numbers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ExperimentResult;
use crate::corpus::Domain;
use crate::metrics::{round_percent, ScoreReport};
use crate::prompting::{SubtaskKind, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
    Accuracy,
}

impl Metric {
    fn of(self, r: &ScoreReport) -> Option<f64> {
        match self {
            Metric::Precision => Some(r.precision),
            Metric::Recall => Some(r.recall),
            Metric::F1 => Some(r.f1),
            Metric::Accuracy => r.accuracy,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Accuracy => "accuracy",
        }
    }
}

use Domain::{Laptops as L, Restaurants as R};
use Metric::*;
use SubtaskKind::{Ate, Atsc, Joint};
use Variant::{V1, V2};

type Reference = (&'static str, SubtaskKind, Variant, &'static [Domain], Domain, Metric, f64);

/// Published means, in percent.
#[rustfmt::skip]
const REFERENCE: &[Reference] = &[
    ("table1", Ate, V1, &[L], L, F1, 91.40), ("table1", Ate, V1, &[R], R, F1, 92.76),
    ("table1", Ate, V2, &[L], L, F1, 92.30), ("table1", Ate, V2, &[R], R, F1, 92.10),
    ("table2", Atsc, V1, &[L], L, Accuracy, 88.37), ("table2", Atsc, V1, &[R], R, Accuracy, 87.42),
    ("table2", Atsc, V2, &[L], L, Accuracy, 85.85), ("table2", Atsc, V2, &[R], R, Accuracy, 89.76),
    ("table3", Joint, V1, &[L], L, F1, 78.89), ("table3", Joint, V1, &[R], R, F1, 76.16),
    ("table3", Joint, V2, &[L], L, F1, 79.34), ("table3", Joint, V2, &[R], R, F1, 79.47),

    ("table4", Ate, V1, &[R], L, F1, 71.98), ("table4", Atsc, V1, &[R], L, Accuracy, 87.20), ("table4", Joint, V1, &[R], L, F1, 64.30),
    ("table4", Ate, V2, &[R], L, F1, 71.83), ("table4", Atsc, V2, &[R], L, Accuracy, 82.75), ("table4", Joint, V2, &[R], L, F1, 65.30),
    ("table4", Ate, V1, &[L], R, F1, 62.85), ("table4", Atsc, V1, &[L], R, Accuracy, 85.91), ("table4", Joint, V1, &[L], R, F1, 55.06),
    ("table4", Ate, V2, &[L], R, F1, 76.85), ("table4", Atsc, V2, &[L], R, Accuracy, 83.05), ("table4", Joint, V2, &[L], R, F1, 62.95),

    ("table5", Ate, V1, &[L, R], L, F1, 90.35), ("table5", Atsc, V1, &[L, R], L, Accuracy, 88.47), ("table5", Joint, V1, &[L, R], L, F1, 80.07),
    ("table5", Ate, V2, &[L, R], L, F1, 93.28), ("table5", Atsc, V2, &[L, R], L, Accuracy, 87.30), ("table5", Joint, V2, &[L, R], L, F1, 80.47),
    ("table5", Ate, V1, &[L, R], R, F1, 88.88), ("table5", Atsc, V1, &[L, R], R, Accuracy, 88.30), ("table5", Joint, V1, &[L, R], R, F1, 80.81),
    ("table5", Ate, V2, &[L, R], R, F1, 93.55), ("table5", Atsc, V2, &[L, R], R, Accuracy, 88.62), ("table5", Joint, V2, &[L, R], R, F1, 79.70),

    ("ate-detail", Ate, V1, &[L], L, Precision, 93.92), ("ate-detail", Ate, V1, &[L], L, Recall, 92.82), ("ate-detail", Ate, V1, &[L], L, F1, 93.37),
    ("ate-detail", Ate, V1, &[R], R, Precision, 94.60), ("ate-detail", Ate, V1, &[R], R, Recall, 90.98), ("ate-detail", Ate, V1, &[R], R, F1, 92.76),
    ("ate-detail", Ate, V2, &[L], L, Precision, 92.84), ("ate-detail", Ate, V2, &[L], L, Recall, 91.76), ("ate-detail", Ate, V2, &[L], L, F1, 92.30),
    ("ate-detail", Ate, V2, &[R], R, Precision, 93.49), ("ate-detail", Ate, V2, &[R], R, Recall, 90.75), ("ate-detail", Ate, V2, &[R], R, F1, 92.10),

    ("atsc-detail", Atsc, V1, &[L], L, Accuracy, 88.37), ("atsc-detail", Atsc, V1, &[L], L, F1, 87.71),
    ("atsc-detail", Atsc, V1, &[R], R, Accuracy, 87.42), ("atsc-detail", Atsc, V1, &[R], R, F1, 86.05),
    ("atsc-detail", Atsc, V2, &[L], L, Accuracy, 85.85), ("atsc-detail", Atsc, V2, &[L], L, F1, 84.84),
    ("atsc-detail", Atsc, V2, &[R], R, Accuracy, 89.73), ("atsc-detail", Atsc, V2, &[R], R, F1, 88.34),

    ("joint-detail", Joint, V1, &[L], L, Precision, 80.11), ("joint-detail", Joint, V1, &[L], L, Recall, 77.71), ("joint-detail", Joint, V1, &[L], L, F1, 78.89),
    ("joint-detail", Joint, V1, &[R], R, Precision, 77.86), ("joint-detail", Joint, V1, &[R], R, Recall, 74.53), ("joint-detail", Joint, V1, &[R], R, F1, 76.16),
    ("joint-detail", Joint, V2, &[L], L, Precision, 80.42), ("joint-detail", Joint, V2, &[L], L, Recall, 78.29), ("joint-detail", Joint, V2, &[L], L, F1, 79.34),
    ("joint-detail", Joint, V2, &[R], R, Precision, 82.45), ("joint-detail", Joint, V2, &[R], R, Recall, 76.70), ("joint-detail", Joint, V2, &[R], R, F1, 79.47),
];

/// Published value (percent) for a cell of one of the reference tables.
pub fn published_reference(
    table: &str,
    subtask: SubtaskKind,
    variant: Variant,
    train: &[Domain],
    test: Domain,
    metric: Metric,
) -> Option<f64> {
    REFERENCE
        .iter()
        .find(|r| r.0 == table && r.1 == subtask && r.2 == variant && r.3 == train && r.4 == test && r.5 == metric)
        .map(|r| r.6)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDocument {
    /// Plain-text tables.
    pub text: String,
    /// One row per table cell.
    pub csv: String,
}

#[derive(Clone, Copy)]
struct CellKey {
    subtask: SubtaskKind,
    variant: Variant,
    train: &'static [Domain],
    test: Domain,
    metric: Metric,
}

struct TableDef {
    id: &'static str,
    title: &'static str,
    header: Vec<String>,
    rows: Vec<(Vec<String>, Vec<CellKey>)>,
}

fn in_domain_table(
    id: &'static str,
    title: &'static str,
    subtask: SubtaskKind,
    metrics: &[(Metric, &'static str)],
) -> TableDef {
    let mut header = vec!["Model".to_string()];
    for d in ["Lapt14", "Rest14"] {
        for (_, name) in metrics {
            header.push(if metrics.len() == 1 { d.to_string() } else { format!("{d} {name}") });
        }
    }
    let rows = Variant::ALL
        .iter()
        .map(|&variant| {
            let mut keys = Vec::new();
            for (train, test) in [(&[L][..], L), (&[R][..], R)] {
                for &(metric, _) in metrics {
                    keys.push(CellKey {
                        subtask,
                        variant,
                        train,
                        test,
                        metric,
                    });
                }
            }
            (vec![variant.as_str().to_uppercase()], keys)
        })
        .collect();
    TableDef { id, title, header, rows }
}

fn headline_metric(subtask: SubtaskKind) -> Metric {
    match subtask {
        Atsc => Accuracy,
        Ate | Joint => F1,
    }
}

fn transfer_row(variant: Variant, train: &'static [Domain], test: Domain) -> Vec<CellKey> {
    SubtaskKind::ALL
        .iter()
        .map(|&subtask| CellKey {
            subtask,
            variant,
            train,
            test,
            metric: headline_metric(subtask),
        })
        .collect()
}

fn tables() -> Vec<TableDef> {
    let cross = [(&[R][..], L), (&[L][..], R)]
        .into_iter()
        .flat_map(|(train, test)| {
            Variant::ALL.into_iter().map(move |v| {
                (
                    vec![train[0].short_name().to_string(), test.short_name().to_string(), v.as_str().to_uppercase()],
                    transfer_row(v, train, test),
                )
            })
        })
        .collect();
    let joint_domain = [L, R]
        .into_iter()
        .flat_map(|test| {
            Variant::ALL.into_iter().map(move |v| {
                (
                    vec![test.short_name().to_string(), v.as_str().to_uppercase()],
                    transfer_row(v, &[L, R], test),
                )
            })
        })
        .collect();
    vec![
        in_domain_table("table1", "Table 1. ATE, F1 (in-domain)", Ate, &[(F1, "F1")]),
        in_domain_table("table2", "Table 2. ATSC, accuracy (in-domain)", Atsc, &[(Accuracy, "Acc")]),
        in_domain_table("table3", "Table 3. Joint, F1 (in-domain)", Joint, &[(F1, "F1")]),
        TableDef {
            id: "table4",
            title: "Table 4. Cross-domain (ATE and Joint F1, ATSC accuracy)",
            header: ["Train", "Test", "Model", "ATE", "ATSC", "Joint"].map(String::from).to_vec(),
            rows: cross,
        },
        TableDef {
            id: "table5",
            title: "Table 5. Joint-domain training (ATE and Joint F1, ATSC accuracy)",
            header: ["Test", "Model", "ATE", "ATSC", "Joint"].map(String::from).to_vec(),
            rows: joint_domain,
        },
        in_domain_table(
            "ate-detail",
            "ATE detail (in-domain)",
            Ate,
            &[(Precision, "P"), (Recall, "R"), (F1, "F1")],
        ),
        in_domain_table("atsc-detail", "ATSC detail (in-domain)", Atsc, &[(Accuracy, "Acc"), (F1, "F1")]),
        in_domain_table(
            "joint-detail",
            "Joint detail (in-domain)",
            Joint,
            &[(Precision, "P"), (Recall, "R"), (F1, "F1")],
        ),
    ]
}

fn find<'a>(results: &'a [ExperimentResult], key: &CellKey) -> Option<&'a ExperimentResult> {
    results.iter().find(|r| {
        r.spec.subtask == key.subtask
            && r.spec.variant == key.variant
            && r.spec.train_domains == key.train
            && r.spec.test_domain == key.test
    })
}

fn signed(delta: f64) -> String {
    let delta = if delta.abs() < 0.005 { 0.0 } else { delta };
    format!("{delta:+.2}")
}

fn render_rows(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Lays out `results` like the published tables, each cell showing our mean,
/// the published value and the difference. Tables without any result are
/// left out; missing cells inside a table are marked `missing`.
pub fn reproduce_tables(results: &[ExperimentResult]) -> ReportDocument {
    let mut csv = String::from("table,subtask,variant,train,test,metric,ours,reference,delta,runs\n");
    if results.is_empty() {
        return ReportDocument {
            text: "No experiment results.\n".into(),
            csv,
        };
    }
    let mut text = String::from("Cells: our mean over seeds / published value / difference, in percent.\n");
    for table in tables() {
        let present = table
            .rows
            .iter()
            .flat_map(|(_, keys)| keys)
            .any(|k| find(results, k).is_some());
        if !present {
            continue;
        }
        let mut grid = vec![table.header.clone()];
        for (labels, keys) in &table.rows {
            let mut line = labels.clone();
            for key in keys {
                let reference = published_reference(table.id, key.subtask, key.variant, key.train, key.test, key.metric);
                let ours = find(results, key).and_then(|r| key.metric.of(&r.aggregate.mean).map(|v| (r, round_percent(v))));
                let reference_text = reference.map_or("n/a".to_string(), |p| format!("{p:.2}"));
                line.push(match (ours, reference) {
                    (Some((_, o)), Some(p)) => format!("{o:.2} / {p:.2} / {}", signed(o - p)),
                    (Some((_, o)), None) => format!("{o:.2} / n/a"),
                    (None, _) => format!("missing / {reference_text}"),
                });
                let train: Vec<&str> = key.train.iter().map(|d| d.as_str()).collect();
                let (ours_text, delta_text, runs) = match (ours, reference) {
                    (Some((r, o)), Some(p)) => (format!("{o:.2}"), signed(o - p), r.aggregate.n_runs.to_string()),
                    (Some((r, o)), None) => (format!("{o:.2}"), String::new(), r.aggregate.n_runs.to_string()),
                    (None, _) => (String::new(), String::new(), String::new()),
                };
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{}",
                    table.id,
                    key.subtask,
                    key.variant,
                    train.join("+"),
                    key.test,
                    key.metric.as_str(),
                    ours_text,
                    reference.map_or(String::new(), |p| format!("{p:.2}")),
                    delta_text,
                    runs
                );
            }
            grid.push(line);
        }
        let _ = write!(text, "\n{}\n{}", table.title, render_rows(&grid));
    }
    ReportDocument { text, csv }
}
