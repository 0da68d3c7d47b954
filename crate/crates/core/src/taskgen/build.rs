use serde::{Deserialize, Serialize};

use crate::automata::{parse_hoa, render_hoa_with, ApKind, Automaton, LeafStyle};
use crate::causality::{but_for_constraints, parse_effect, CausalLabel, EffectSpec};
use crate::execution::{
    check_trace, format_trace, mutate_trace, parse_trace_string, random_trace, transition_records, Trace, TraceStyle,
};
use crate::rng;

use super::{compute_features, Difficulty, Task, TaskBody, TaskError, TteAnswer};

pub const TTE_QUESTION: &str = "For each step, starting from the recorded source state, decide which state the \
automaton moves to under the step's assignment and whether the step is legal, i.e. some transition of the \
source state accepts the assignment and leads to the recorded next state. Also say whether the whole trace is \
accepted.";

/// Leading text of the causality question; the effect list follows.
pub const TCE_QUESTION_PREFIX: &str = "Effects:";

/// How a causality task picks its effect among the true outputs of the trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectPolicy {
    /// The latest step with a true output; the lowest such output.
    #[default]
    LatestOutput,
    /// A uniformly drawn (step, true output) pair.
    RandomOutputStep,
    /// The lowest true output at the given step.
    FixedDepth(usize),
}

fn source_name(a: &Automaton) -> String {
    a.name.clone().unwrap_or_default()
}

fn choose_effect(
    a: &Automaton,
    t: &Trace,
    policy: EffectPolicy,
    max_depth: usize,
    rng: &mut rng::Rng,
) -> Result<EffectSpec, TaskError> {
    let outputs: Vec<_> = a.aps.iter().filter(|ap| ap.kind == ApKind::Output).collect();
    if outputs.is_empty() {
        return Err(TaskError::NoOutputs);
    }
    let candidates: Vec<(usize, usize)> = t
        .steps
        .iter()
        .enumerate()
        .take(max_depth + 1)
        .flat_map(|(k, s)| outputs.iter().filter(move |o| s.assignment.get(o.index) == Some(true)).map(move |o| (k, o.index)))
        .collect();
    let chosen = match policy {
        EffectPolicy::LatestOutput => {
            let latest = candidates.iter().map(|c| c.0).max();
            candidates.iter().find(|c| Some(c.0) == latest).copied()
        }
        EffectPolicy::RandomOutputStep if candidates.is_empty() => None,
        EffectPolicy::RandomOutputStep => Some(candidates[rng::below(rng, candidates.len())]),
        EffectPolicy::FixedDepth(k) => candidates.iter().find(|c| c.0 == k).copied(),
    };
    let (depth, output) = chosen.ok_or(TaskError::NoEligibleEffect { max_depth })?;
    Ok(EffectSpec { output, name: a.aps[output].name.clone(), depth, polarity: true })
}

/// A temporal-causality task: a random run of `trace_length` steps and one
/// true output chosen per `policy` (no deeper than `max_depth`).
pub fn build_tce_task(
    a: &Automaton,
    seed: u64,
    trace_length: usize,
    policy: EffectPolicy,
    max_depth: usize,
) -> Result<Task, TaskError> {
    let mut rng = rng::seeded(seed);
    let trace = random_trace(a, trace_length, rng::next_seed(&mut rng))?.without_states();
    let effect = choose_effect(a, &trace, policy, max_depth, &mut rng)?;
    let gt = but_for_constraints(a, &trace, &effect)?;
    let label = CausalLabel::from(&gt);
    Ok(Task {
        id: String::new(),
        source: source_name(a),
        automaton_text: render_hoa_with(a, LeafStyle::Name),
        trace_text: format_trace(&trace, &a.aps, TraceStyle::Semicolon)?,
        features: compute_features(a, &trace, Some(&label)),
        body: TaskBody::Tce { question: vec![effect.to_string()], ground_truth: label },
        difficulty: Difficulty::Normal,
        seed,
    })
}

fn tte_answer(a: &Automaton, t: &Trace) -> TteAnswer {
    TteAnswer { accepted: check_trace(a, t).accepted(), steps: transition_records(a, t) }
}

/// A trace-acceptance task: a random state-annotated run, replaced with
/// probability `negative_rate` by a single-step mutant that is rejected.
pub fn build_tte_task(a: &Automaton, seed: u64, trace_length: usize, negative_rate: f64) -> Result<Task, TaskError> {
    let mut rng = rng::seeded(seed);
    let negative = rng::unit(&mut rng) < negative_rate;
    let mut trace = random_trace(a, trace_length, rng::next_seed(&mut rng))?;
    if negative {
        trace = mutate_trace(a, &trace, rng::next_seed(&mut rng))?;
    }
    Ok(Task {
        id: String::new(),
        source: source_name(a),
        automaton_text: render_hoa_with(a, LeafStyle::Name),
        trace_text: format_trace(&trace, &a.aps, TraceStyle::Tuples)?,
        features: compute_features(a, &trace, None),
        body: TaskBody::Tte { question: TTE_QUESTION.to_string(), ground_truth: tte_answer(a, &trace) },
        difficulty: Difficulty::Normal,
        seed,
    })
}

/// Recomputes the task body from its serialized automaton, trace and question.
pub fn recompute_ground_truth(task: &Task) -> Result<TaskBody, TaskError> {
    let a = parse_hoa(&task.automaton_text)?;
    let trace = parse_trace_string(&task.trace_text, &a.aps)?;
    Ok(match &task.body {
        TaskBody::Tte { question, .. } => {
            TaskBody::Tte { question: question.clone(), ground_truth: tte_answer(&a, &trace) }
        }
        TaskBody::Tce { question, .. } => {
            let mut label = CausalLabel::default();
            for effect in question {
                let e = parse_effect(effect, &a.aps)?;
                label.insert(&but_for_constraints(&a, &trace, &e)?);
            }
            TaskBody::Tce { question: question.clone(), ground_truth: label }
        }
    })
}
