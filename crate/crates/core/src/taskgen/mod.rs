//! Benchmark tasks: records, difficulty features, hard/normal split,
//! task construction, prompts and whole datasets.

mod build;
mod dataset;
mod prompt;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::automata::{ApKind, Automaton, HoaError, LabelError};
use crate::causality::{CausalError, CausalLabel};
use crate::execution::{ExecError, Trace, TraceFormatError, TransitionRecord};

pub use build::{build_tce_task, build_tte_task, recompute_ground_truth, EffectPolicy, TCE_QUESTION_PREFIX, TTE_QUESTION};
pub use dataset::{generate_dataset, load_corpus, Corpus, Dataset, GenConfig};
pub use prompt::{build_prompt, default_shot, GRADING_MARKER};

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("no output is true at any step up to depth {max_depth}")]
    NoEligibleEffect { max_depth: usize },
    #[error("automaton has no outputs to reason about")]
    NoOutputs,
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Hoa(#[from] HoaError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    TraceFormat(#[from] TraceFormatError),
    #[error("task {id}: no valid instance after {attempts} attempts: {last}")]
    Exhausted { id: String, attempts: usize, last: Box<TaskError> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DifficultyFeatures {
    pub effect_depth: usize,
    pub hoa_states: usize,
    pub transition_count: usize,
    pub causal_inputs_count: usize,
    pub unique_inputs_in_trace: usize,
}

/// One of the five difficulty features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Feature {
    EffectDepth,
    HoaStates,
    TransitionCount,
    CausalInputsCount,
    UniqueInputsInTrace,
}

impl Feature {
    pub const ALL: [Feature; 5] = [
        Feature::EffectDepth,
        Feature::HoaStates,
        Feature::TransitionCount,
        Feature::CausalInputsCount,
        Feature::UniqueInputsInTrace,
    ];

    /// Features that vary across trace-acceptance tasks (the other two are always 0 there).
    pub const TRACE: [Feature; 3] = [Feature::HoaStates, Feature::TransitionCount, Feature::UniqueInputsInTrace];
}

impl DifficultyFeatures {
    pub fn get(&self, f: Feature) -> usize {
        match f {
            Feature::EffectDepth => self.effect_depth,
            Feature::HoaStates => self.hoa_states,
            Feature::TransitionCount => self.transition_count,
            Feature::CausalInputsCount => self.causal_inputs_count,
            Feature::UniqueInputsInTrace => self.unique_inputs_in_trace,
        }
    }
}

/// Features of a task. `gt` is the causal label of a causality task, `None`
/// for trace acceptance; the effect depth is the deepest effect in the label.
pub fn compute_features(a: &Automaton, t: &Trace, gt: Option<&CausalLabel>) -> DifficultyFeatures {
    let inputs: BTreeSet<usize> = t
        .steps
        .iter()
        .flat_map(|s| s.assignment.true_indices())
        .filter(|&i| a.aps.get(i).is_some_and(|ap| ap.kind == ApKind::Input))
        .collect();
    let (effect_depth, causal_inputs_count) = match gt {
        Some(label) => {
            let depth = label.0.values().filter_map(|steps| steps.keys().max()).max().map_or(0, |&d| d as usize);
            (depth, label.literal_count())
        }
        None => (0, 0),
    };
    DifficultyFeatures {
        effect_depth,
        hoa_states: a.state_count(),
        transition_count: a.transition_count(),
        causal_inputs_count,
        unique_inputs_in_trace: inputs.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Tte,
    Tce,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    #[default]
    Normal,
    Hard,
}

/// Expected answer of a trace-acceptance task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TteAnswer {
    pub accepted: bool,
    pub steps: Vec<TransitionRecord>,
}

/// Kind-specific part of a task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaskBody {
    Tte {
        question: String,
        #[serde(rename = "groundTruth")]
        ground_truth: TteAnswer,
    },
    Tce {
        /// Effect strings such as `XXX g`.
        question: Vec<String>,
        #[serde(rename = "groundTruth")]
        ground_truth: CausalLabel,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Task {
    pub id: String,
    /// Name of the automaton the task was drawn from.
    pub source: String,
    pub automaton_text: String,
    pub trace_text: String,
    #[serde(flatten)]
    pub body: TaskBody,
    pub features: DifficultyFeatures,
    #[serde(default)]
    pub difficulty: Difficulty,
    pub seed: u64,
}

impl Task {
    pub fn kind(&self) -> TaskKind {
        match self.body {
            TaskBody::Tte { .. } => TaskKind::Tte,
            TaskBody::Tce { .. } => TaskKind::Tce,
        }
    }

    /// The expected answer as compact JSON.
    pub fn ground_truth_json(&self) -> String {
        match &self.body {
            TaskBody::Tte { ground_truth, .. } => serde_json::to_string(ground_truth),
            TaskBody::Tce { ground_truth, .. } => serde_json::to_string(ground_truth),
        }
        .expect("ground truth always serializes")
    }
}

/// Marks as hard every task ranked in the top `n` of at least one feature
/// (descending value, ties by ascending id); the rest are normal.
/// Returns `(normal, hard)`, each in input order.
pub fn split_difficulty(tasks: &[Task], n: usize) -> (Vec<Task>, Vec<Task>) {
    split_difficulty_by(tasks, n, &Feature::ALL)
}

pub fn split_difficulty_by(tasks: &[Task], n: usize, features: &[Feature]) -> (Vec<Task>, Vec<Task>) {
    let hard = hard_ids(tasks.iter().map(|t| (t.id.as_str(), &t.features)), n, features);
    let (mut hard_tasks, mut normal) = (Vec::new(), Vec::new());
    for t in tasks {
        let mut t = t.clone();
        if hard.contains(t.id.as_str()) {
            t.difficulty = Difficulty::Hard;
            hard_tasks.push(t);
        } else {
            t.difficulty = Difficulty::Normal;
            normal.push(t);
        }
    }
    (normal, hard_tasks)
}

/// Ids ranked in the top `n` of any of `features`.
pub fn hard_ids<'a>(
    items: impl Iterator<Item = (&'a str, &'a DifficultyFeatures)>,
    n: usize,
    features: &[Feature],
) -> BTreeSet<&'a str> {
    let mut items: Vec<_> = items.collect();
    let n = if n > items.len() {
        log::warn!("top-n of {n} exceeds the {} tasks available, using all of them", items.len());
        items.len()
    } else {
        n
    };
    items.sort_by(|a, b| a.0.cmp(b.0));
    let mut hard = BTreeSet::new();
    for &f in features {
        // Stable sort keeps ascending ids among equal values.
        let mut ranked = items.clone();
        ranked.sort_by_key(|item| std::cmp::Reverse(item.1.get(f)));
        hard.extend(ranked.iter().take(n).map(|(id, _)| *id));
    }
    hard
}
