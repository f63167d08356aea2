//! Plain-text renderings of command results.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use curalens_core::campaign::{Campaign, CampaignStatus, CompletenessReport, Rater, Round};
use curalens_core::report::{ElementTable, Exclusion, IccStats, IrrSeries, RoundDisagreementSeries};
use curalens_core::resolution::{DisagreementRecord, ResolutionSummary};
use curalens_core::rubric::{RubricRef, RubricSpec, ValidationReport};

pub fn validation(report: &ValidationReport) -> String {
    if report.is_clean() {
        return "rubric is valid\n".into();
    }
    report.findings.iter().map(|f| format!("{f}\n")).collect()
}

pub fn rubric(spec: &RubricSpec) -> String {
    let mut out = format!(
        "{}@{}: {} elements in {} groups\n",
        spec.id,
        spec.version,
        spec.element_count(),
        spec.groups.len()
    );
    for group in &spec.groups {
        let _ = writeln!(out, "\n{}", group.title);
        for element in &group.elements {
            let _ = writeln!(out, "  {:<36} {}", element.id, element.title);
        }
    }
    out
}

pub fn tokens(tokens: &BTreeMap<String, String>) -> String {
    tokens
        .iter()
        .map(|(subject, token)| format!("{subject:<16} {token}\n"))
        .collect()
}

/// A campaign without its ratings.
#[derive(Serialize)]
pub struct CampaignSummary {
    id: String,
    rubric: RubricRef,
    raters: Vec<Rater>,
    blind: bool,
    status: CampaignStatus,
    rounds: Vec<Round>,
    sequence: u64,
}

impl From<&Campaign> for CampaignSummary {
    fn from(c: &Campaign) -> Self {
        CampaignSummary {
            id: c.id.clone(),
            rubric: c.rubric.clone(),
            raters: c.raters.clone(),
            blind: c.blind,
            status: c.status,
            rounds: c.rounds.clone(),
            sequence: c.last_sequence,
        }
    }
}

pub fn campaign(c: &CampaignSummary) -> String {
    let raters: Vec<&str> = c.raters.iter().map(|r| r.id.as_str()).collect();
    let mut out = format!(
        "campaign {} on {} ({:?}, blind: {})\nraters: {}\n",
        c.id,
        c.rubric,
        c.status,
        c.blind,
        raters.join(", ")
    );
    for r in &c.rounds {
        let ids: Vec<&str> = r.datasets.iter().map(|d| d.id.as_str()).collect();
        let _ = writeln!(
            out,
            "round {} {:<12} {:<10} {}",
            r.index,
            r.label,
            r.status,
            ids.join(" ")
        );
    }
    out
}

fn exclusions(out: &mut String, excluded: &[Exclusion]) {
    const MAX_REASON: usize = 96;
    for e in excluded {
        let reason = match e.reason.char_indices().nth(MAX_REASON) {
            Some((cut, _)) => format!("{}...", &e.reason[..cut]),
            None => e.reason.clone(),
        };
        let _ = writeln!(out, "excluded {} ({}): {}", e.dataset, e.round, reason);
    }
}

fn notes(out: &mut String, notes: &[String]) {
    for n in notes {
        let _ = writeln!(out, "note: {n}");
    }
}

pub fn icc(stats: &IccStats) -> String {
    let mut out = String::new();
    for r in &stats.datasets {
        let _ = writeln!(out, "{:<12} icc {:.4}  {}", r.dataset, r.icc, r.band);
    }
    exclusions(&mut out, &stats.excluded);
    out
}

pub fn irr(series: &IrrSeries) -> String {
    let mut out = String::new();
    for s in &series.rounds {
        let _ = writeln!(
            out,
            "{:<12} {} datasets  min {:.2}  median {:.2}  max {:.2}",
            s.round, s.count, s.min, s.median, s.max
        );
    }
    for p in &series.points {
        let _ = writeln!(out, "  {:<12} {:<12} {:.4}  {}", p.round, p.dataset, p.icc, p.band);
    }
    exclusions(&mut out, &series.excluded);
    notes(&mut out, &series.notes);
    out
}

pub fn rounds(series: &RoundDisagreementSeries) -> String {
    let mut out = String::new();
    for r in &series.rounds {
        let _ = writeln!(
            out,
            "{:<12} {:>5}/{:<5} cells disagree  {:>5.1}%  ({} datasets)",
            r.round, r.disagreements, r.cells, r.percent, r.datasets
        );
    }
    notes(&mut out, &series.notes);
    out
}

pub fn elements(table: &ElementTable) -> String {
    let mut out = String::new();
    for row in &table.elements {
        let _ = writeln!(
            out,
            "{:<36} {:>3}/{:<3} datasets  {:>5.1}%",
            row.element, row.datasets_with_disagreement, row.datasets, row.percent
        );
    }
    notes(&mut out, &table.notes);
    out
}

pub fn completeness(reports: &[CompletenessReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "round {}: {}/{} cells recorded, {} missing",
            r.round,
            r.recorded_cells,
            r.expected_cells,
            r.missing_count()
        );
        for (rater, cells) in &r.missing {
            for key in cells {
                let _ = writeln!(out, "  {rater}: {key}");
            }
        }
    }
    out
}

pub fn record(r: &DisagreementRecord) -> String {
    let ratings: Vec<String> = r
        .ratings
        .iter()
        .map(|(rater, rating)| format!("{rater}={rating}"))
        .collect();
    let tags: Vec<&str> = r.tags.iter().map(|t| t.kind.as_str()).collect();
    let mut line = format!("{}  {}  [{}]", r.key, r.status, ratings.join(" "));
    if !tags.is_empty() {
        let _ = write!(line, "  tags: {}", tags.join(","));
    }
    line.push('\n');
    line
}

pub fn records(records: &[DisagreementRecord]) -> String {
    if records.is_empty() {
        return "no disagreement records\n".into();
    }
    records.iter().map(record).collect()
}

pub fn summary(s: &ResolutionSummary) -> String {
    let mut out = format!(
        "round {}: {} records, {} open, {} converged, {} standing\n",
        s.round, s.total, s.open, s.converged, s.standing
    );
    for (kind, n) in &s.tags {
        let _ = writeln!(out, "  {kind}: {n}");
    }
    out
}
