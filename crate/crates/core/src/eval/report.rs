use std::fmt::Write;

use super::{CvEntry, CvReport, Metric};
use crate::classifiers::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `feature_set,metric,statistic,<families...>`, mean and std rows.
    Csv,
    /// Aligned table of means, one block per feature set.
    Text,
}

/// A fraction as a percentage with one decimal, e.g. `0.857142` → `85.7`.
pub fn format_percent(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn layout(report: &CvReport) -> (Vec<&str>, Vec<Family>) {
    let mut sets: Vec<&str> = Vec::new();
    for e in &report.entries {
        if !sets.contains(&e.feature_set.as_str()) {
            sets.push(&e.feature_set);
        }
    }
    let families = Family::ALL
        .into_iter()
        .filter(|f| report.entries.iter().any(|e| e.family == *f))
        .collect();
    (sets, families)
}

fn cell(entry: Option<&CvEntry>, metric: Metric, std: bool) -> String {
    entry
        .map(|e| format_percent(if std { e.std.get(metric) } else { e.mean.get(metric) }))
        .unwrap_or_default()
}

pub fn render_report(report: &CvReport, format: ReportFormat) -> String {
    let (sets, families) = layout(report);
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("feature_set,metric,statistic");
            for f in &families {
                write!(out, ",{}", f.short_name()).unwrap();
            }
            out.push('\n');
            for set in &sets {
                for metric in Metric::ALL {
                    for (stat, std) in [("mean", false), ("std", true)] {
                        write!(out, "{set},{metric},{stat}").unwrap();
                        for &f in &families {
                            write!(out, ",{}", cell(report.entry(set, f), metric, std)).unwrap();
                        }
                        out.push('\n');
                    }
                }
            }
        }
        ReportFormat::Text => {
            let label_w = Metric::ALL.iter().map(|m| m.title().len()).max().unwrap_or(0);
            for (i, set) in sets.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let e0 = report.entries.iter().find(|e| e.feature_set == *set).expect("set from entries");
                writeln!(out, "Features: {set} ({}-fold x {} repeats, % mean)", e0.k, e0.repeats).unwrap();
                let cells: Vec<Vec<String>> = Metric::ALL
                    .iter()
                    .map(|&m| families.iter().map(|&f| cell(report.entry(set, f), m, false)).collect())
                    .collect();
                let widths: Vec<usize> = families
                    .iter()
                    .enumerate()
                    .map(|(j, f)| cells.iter().map(|r| r[j].len()).chain([f.short_name().len(), 5]).max().unwrap())
                    .collect();
                write!(out, "{:<label_w$}", "Metric").unwrap();
                for (f, w) in families.iter().zip(&widths) {
                    write!(out, "  {:>w$}", f.short_name()).unwrap();
                }
                out.push('\n');
                for (m, row) in Metric::ALL.iter().zip(&cells) {
                    write!(out, "{:<label_w$}", m.title()).unwrap();
                    for (v, w) in row.iter().zip(&widths) {
                        write!(out, "  {v:>w$}").unwrap();
                    }
                    out.push('\n');
                }
            }
        }
    }
    out
}
