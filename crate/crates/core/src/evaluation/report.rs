use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Counts, ScoreReport};
use crate::taskgen::{Difficulty, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKey {
    Model,
    Task,
    Difficulty,
}

impl GroupKey {
    fn header(self) -> &'static str {
        match self {
            GroupKey::Model => "Model",
            GroupKey::Task => "Task",
            GroupKey::Difficulty => "Difficulty",
        }
    }

    fn value(self, r: &ScoreReport) -> String {
        match self {
            GroupKey::Model => r.model.clone(),
            GroupKey::Task => match r.kind {
                TaskKind::Tte => "tte".into(),
                TaskKind::Tce => "tce".into(),
            },
            GroupKey::Difficulty => match r.difficulty {
                Difficulty::Normal => "normal".into(),
                Difficulty::Hard => "hard".into(),
            },
        }
    }
}

/// Metrics of one group, computed once from its summed counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SummaryRow {
    /// Group key values, in the order of the requested keys.
    pub group: Vec<String>,
    pub f1_ap: f64,
    pub f1_ts: f64,
    pub precision_ap: f64,
    pub recall_ap: f64,
    pub precision_ts: f64,
    pub recall_ts: f64,
    pub ap_counts: Counts,
    pub ts_counts: Counts,
    pub n: usize,
    pub parse_failures: usize,
}

/// Micro-averaged summary: counts are summed within each group (groups in
/// ascending key order) before precision, recall and F1 are taken.
pub fn aggregate(reports: &[ScoreReport], group_by: &[GroupKey]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&ScoreReport> = reports.iter().collect();
    sorted.sort_by(|a, b| (&a.model, &a.task_id).cmp(&(&b.model, &b.task_id)));
    let mut groups: BTreeMap<Vec<String>, (Counts, Counts, usize, usize)> = BTreeMap::new();
    for r in sorted {
        let key = group_by.iter().map(|k| k.value(r)).collect();
        let g = groups.entry(key).or_default();
        g.0 += r.ap_counts;
        g.1 += r.ts_counts;
        g.2 += 1;
        g.3 += usize::from(r.parse_failed);
    }
    groups
        .into_iter()
        .map(|(group, (ap, ts, n, parse_failures))| {
            let (ap_m, ts_m) = (ap.metrics(), ts.metrics());
            SummaryRow {
                group,
                f1_ap: ap_m.f1,
                f1_ts: ts_m.f1,
                precision_ap: ap_m.precision,
                recall_ap: ap_m.recall,
                precision_ts: ts_m.precision,
                recall_ts: ts_m.recall,
                ap_counts: ap,
                ts_counts: ts,
                n,
                parse_failures,
            }
        })
        .collect()
}

/// Comma-separated summary with a header line; ratios to four decimals.
pub fn summary_csv(rows: &[SummaryRow], group_by: &[GroupKey]) -> String {
    let mut out = String::new();
    for k in group_by {
        let _ = write!(out, "{},", k.header());
    }
    out.push_str("F1(AP),F1(TS),P(AP),R(AP),P(TS),R(TS),n,parse_failures\n");
    for r in rows {
        for g in &r.group {
            let _ = write!(out, "{g},");
        }
        let _ = writeln!(
            out,
            "{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{},{}",
            r.f1_ap, r.f1_ts, r.precision_ap, r.recall_ap, r.precision_ts, r.recall_ts, r.n, r.parse_failures
        );
    }
    out
}
