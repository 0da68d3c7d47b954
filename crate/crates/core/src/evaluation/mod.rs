//! Answer extraction and scoring.
//!
//! Scores are counts of true positives, false positives and false negatives
//! at two granularities: single literals or fields ("AP" level) and whole
//! time steps ("TS" level). Counts are summed before any ratio is taken.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::causality::{CausalLabel, NO_CONSTRAINTS};
use crate::execution::TransitionRecord;
use crate::taskgen::{Difficulty, Task, TaskBody, TaskKind, TteAnswer};

pub use report::{aggregate, summary_csv, GroupKey, SummaryRow};

/// Marker text preceding the answer, matched with or without the colon.
const MARKER: &str = "### JSON Ground Truth ###";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Counts { tp, fp, fn_ }
    }

    pub fn metrics(self) -> Metrics {
        Metrics::from(self)
    }
}

impl Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl From<Counts> for Metrics {
    fn from(c: Counts) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        // 2PR/(P+R) written on counts so that exact cases stay exact.
        let f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
        Metrics { precision, recall, f1 }
    }
}

/// The JSON object after the last marker, if any parses.
pub fn extract_answer(completion: &str) -> Option<Value> {
    let start = completion.rfind(MARKER)? + MARKER.len();
    let rest = &completion[start..];
    let open = rest.find('{')?;
    let mut values = serde_json::Deserializer::from_str(&rest[open..]).into_iter::<Value>();
    match values.next() {
        Some(Ok(v @ Value::Object(_))) => Some(v),
        _ => None,
    }
}

/// Literal multisets per step, per effect: `"no constraints"` is the empty
/// set, literals are trimmed and lowercased, inner blanks dropped.
pub type CanonicalTce = BTreeMap<String, BTreeMap<u32, Vec<String>>>;

fn canonical_effect(effect: &str) -> String {
    effect.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn canonical_literals<'a>(constraints: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut literals: Vec<String> = constraints
        .into_iter()
        .map(|c| c.trim().to_lowercase())
        .filter(|c| !c.is_empty() && c != NO_CONSTRAINTS)
        .flat_map(|c| {
            c.split(" and ")
                .map(|lit| lit.chars().filter(|ch| !ch.is_whitespace()).collect::<String>())
                .filter(|lit| !lit.is_empty())
                .collect::<Vec<_>>()
        })
        .collect();
    literals.sort();
    literals
}

pub fn canonicalize_label(label: &CausalLabel) -> CanonicalTce {
    label
        .0
        .iter()
        .map(|(effect, steps)| {
            let steps = steps.iter().map(|(k, v)| (*k, canonical_literals(v.iter().map(String::as_str)))).collect();
            (canonical_effect(effect), steps)
        })
        .collect()
}

/// Reads a causal answer. Step lists may also be given as a bare string.
pub fn parse_tce_answer(v: &Value) -> Option<CanonicalTce> {
    let mut out = CanonicalTce::new();
    for (effect, steps) in v.as_object()? {
        let mut per_step = BTreeMap::new();
        for (key, constraints) in steps.as_object()? {
            let step: u32 = key.trim().parse().ok()?;
            let strings: Vec<&str> = match constraints {
                Value::String(s) => vec![s.as_str()],
                Value::Array(items) => items.iter().map(Value::as_str).collect::<Option<_>>()?,
                _ => return None,
            };
            per_step.insert(step, canonical_literals(strings));
        }
        out.insert(canonical_effect(effect), per_step);
    }
    Some(out)
}

/// Size of the intersection of two sorted multisets.
fn common(a: &[String], b: &[String]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Pairs up steps of both sides, effect by effect.
fn zip_steps<'a>(
    pred: &'a CanonicalTce,
    gt: &'a CanonicalTce,
) -> impl Iterator<Item = (Option<&'a Vec<String>>, Option<&'a Vec<String>>)> {
    let effects: BTreeSet<&String> = pred.keys().chain(gt.keys()).collect();
    let mut pairs = Vec::new();
    for effect in effects {
        let (p, g) = (pred.get(effect), gt.get(effect));
        let steps: BTreeSet<&u32> = p.into_iter().chain(g).flat_map(|m| m.keys()).collect();
        for step in steps {
            pairs.push((p.and_then(|m| m.get(step)), g.and_then(|m| m.get(step))));
        }
    }
    pairs.into_iter()
}

/// Literal-level counts. Steps where both sides are empty count one true
/// positive; a missing or extra step counts its literals (at least one).
pub fn score_tce_ap(pred: &CanonicalTce, gt: &CanonicalTce) -> Counts {
    zip_steps(pred, gt)
        .map(|pair| match pair {
            (Some(p), Some(g)) if p.is_empty() && g.is_empty() => Counts::new(1, 0, 0),
            (Some(p), Some(g)) => {
                let tp = common(p, g);
                Counts::new(tp, p.len() as u64 - tp, g.len() as u64 - tp)
            }
            (None, Some(g)) => Counts::new(0, 0, g.len().max(1) as u64),
            (Some(p), None) => Counts::new(0, p.len().max(1) as u64, 0),
            (None, None) => Counts::default(),
        })
        .sum()
}

/// Step-level counts: a step is right only if its literal set matches exactly.
pub fn score_tce_ts(pred: &CanonicalTce, gt: &CanonicalTce) -> Counts {
    zip_steps(pred, gt)
        .map(|pair| match pair {
            (Some(p), Some(g)) if p == g => Counts::new(1, 0, 0),
            (Some(p), Some(_)) if p.is_empty() => Counts::new(0, 0, 1),
            (Some(_), Some(_)) => Counts::new(0, 1, 1),
            (None, Some(_)) => Counts::new(0, 0, 1),
            (Some(_), None) => Counts::new(0, 1, 0),
            (None, None) => Counts::default(),
        })
        .sum()
}

#[derive(Debug, Deserialize)]
struct PredictedStep {
    step: usize,
    #[serde(alias = "source_state", default)]
    #[serde(rename = "sourceState")]
    source_state: Option<usize>,
    #[serde(alias = "next_state", default)]
    #[serde(rename = "nextState")]
    next_state: Option<usize>,
    #[serde(default)]
    legal: Option<bool>,
}

/// Predicted `(source, next, legal)` of one step.
pub type StepFields = (Option<usize>, Option<usize>, Option<bool>);

/// A trace-acceptance answer; step fields the model left out stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TtePrediction {
    pub accepted: Option<bool>,
    pub steps: BTreeMap<usize, StepFields>,
}

pub fn parse_tte_answer(v: &Value) -> Option<TtePrediction> {
    let obj = v.as_object()?;
    let accepted = obj.get("accepted").and_then(Value::as_bool);
    let steps: Vec<PredictedStep> = serde_json::from_value(obj.get("steps")?.clone()).ok()?;
    Some(TtePrediction {
        accepted,
        steps: steps.into_iter().map(|s| (s.step, (s.source_state, s.next_state, s.legal))).collect(),
    })
}

impl From<&TteAnswer> for TtePrediction {
    fn from(a: &TteAnswer) -> Self {
        TtePrediction {
            accepted: Some(a.accepted),
            steps: a.steps.iter().map(|s| (s.step, (Some(s.source_state), s.next_state, Some(s.legal)))).collect(),
        }
    }
}

/// Trace-acceptance counts `(ap, ts)`. The AP level scores the three fields
/// of each step separately; the TS level wants all three right.
pub fn score_tte(pred: &TtePrediction, gt: &[TransitionRecord]) -> (Counts, Counts) {
    let mut ap = Counts::default();
    let mut ts = Counts::default();
    for r in gt {
        match pred.steps.get(&r.step) {
            Some(&(source, next, legal)) => {
                let hits = [source == Some(r.source_state), next == r.next_state, legal == Some(r.legal)];
                let right = hits.iter().filter(|h| **h).count() as u64;
                ap += Counts::new(right, 3 - right, 3 - right);
                ts += if right == 3 { Counts::new(1, 0, 0) } else { Counts::new(0, 1, 1) };
            }
            None => {
                ap += Counts::new(0, 0, 3);
                ts += Counts::new(0, 0, 1);
            }
        }
    }
    let extra = pred.steps.keys().filter(|k| !gt.iter().any(|r| r.step == **k)).count() as u64;
    ap += Counts::new(0, 3 * extra, 0);
    ts += Counts::new(0, extra, 0);
    (ap, ts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoreReport {
    pub task_id: String,
    #[serde(default)]
    pub model: String,
    pub kind: TaskKind,
    pub difficulty: Difficulty,
    pub ap_counts: Counts,
    pub ts_counts: Counts,
    pub ap_metrics: Metrics,
    pub ts_metrics: Metrics,
    pub parse_failed: bool,
}

/// Scores a raw completion against a task's ground truth. Unparseable
/// answers score as an empty prediction.
pub fn score_completion(task: &Task, model: &str, completion: &str) -> ScoreReport {
    let answer = extract_answer(completion);
    let (ap, ts, parse_failed) = match &task.body {
        TaskBody::Tce { ground_truth, .. } => {
            let gt = canonicalize_label(ground_truth);
            let pred = answer.as_ref().and_then(parse_tce_answer);
            let failed = pred.is_none();
            let pred = pred.unwrap_or_default();
            (score_tce_ap(&pred, &gt), score_tce_ts(&pred, &gt), failed)
        }
        TaskBody::Tte { ground_truth, .. } => {
            let pred = answer.as_ref().and_then(parse_tte_answer);
            let failed = pred.is_none();
            let (ap, ts) = score_tte(&pred.unwrap_or_default(), &ground_truth.steps);
            (ap, ts, failed)
        }
    };
    ScoreReport {
        task_id: task.id.clone(),
        model: model.to_string(),
        kind: task.kind(),
        difficulty: task.difficulty,
        ap_counts: ap,
        ts_counts: ts,
        ap_metrics: ap.metrics(),
        ts_metrics: ts.metrics(),
        parse_failed,
    }
}

/// A completion that states the task's ground truth verbatim.
pub fn reference_completion(task: &Task) -> String {
    format!("{MARKER}:\n{}\n", task.ground_truth_json())
}
