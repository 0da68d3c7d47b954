use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::automata::{parse_hoa, render_hoa_with, LeafStyle};
use crate::causality::{but_for_constraints, parse_effect, CausalLabel};
use crate::execution::{check_trace, format_trace, parse_semicolon, TraceStyle};
use crate::fixtures;

use super::{compute_features, Difficulty, Task, TaskBody, TaskKind, TteAnswer, TCE_QUESTION_PREFIX, TTE_QUESTION};

/// Line after which graders look for the JSON answer.
pub const GRADING_MARKER: &str = "### JSON Ground Truth ###:";

const TCE_INTRO: &str = "You are given a controller as an automaton in HOA format. Its controllable APs are \
outputs, every other AP is an input chosen by the environment. The trace below lists one assignment per step, \
starting at step 0. An effect such as `XXX g` means output `g` is true at step 3 (one `X` per step). For each \
effect, find the input literals that cause it: a literal of step t is a cause when flipping only that input at \
step t, keeping every other input, makes the controller no longer produce the effect. Answer with a JSON object \
mapping each effect to an object from step number (0 up to the effect step) to a list holding one string: the \
causes of that step joined with \" and \" (for example \"r\" or \"!a and b\"), or \"no constraints\" when the \
step has none.";

const TTE_INTRO: &str = "You are given an automaton in HOA format and a trace. Each trace line is a tuple \
(source state, set of true APs, next state); APs missing from the set are false. Answer with a JSON object of \
the form {\"accepted\": bool, \"steps\": [{\"step\": n, \"sourceState\": s, \"nextState\": d, \"legal\": bool}]}, \
one entry per trace step. `nextState` is the state the automaton moves to from the recorded source under the \
step's assignment, or null when no transition accepts it.";

fn question_text(task: &Task) -> String {
    match &task.body {
        TaskBody::Tte { question, .. } => question.clone(),
        TaskBody::Tce { question, .. } => format!("{TCE_QUESTION_PREFIX} {}", question.join(", ")),
    }
}

fn answer_text(task: &Task) -> String {
    match &task.body {
        TaskBody::Tte { ground_truth, .. } => serde_json::to_string_pretty(ground_truth),
        TaskBody::Tce { ground_truth, .. } => Ok(ground_truth.to_json_pretty()),
    }
    .expect("ground truth always serializes")
}

fn task_block(task: &Task) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Automaton:\n{}", task.automaton_text.trim_end());
    let _ = writeln!(out, "Trace:\n{}", task.trace_text.trim_end());
    let _ = writeln!(out, "{}", question_text(task));
    out
}

/// A worked example: the task followed by the marker line and its answer.
pub fn example_text(task: &Task) -> String {
    format!("{}{GRADING_MARKER}\n{}\n", task_block(task), answer_text(task))
}

fn grant_tce_example() -> Task {
    let a = parse_hoa(fixtures::GRANT_CONTROLLER).expect("fixture parses");
    let trace = parse_semicolon(fixtures::GRANT_TRACE, &a.aps).expect("fixture trace parses");
    let effect = parse_effect("XXX g", &a.aps).expect("g is an output");
    let label = CausalLabel::from(&but_for_constraints(&a, &trace, &effect).expect("effect holds"));
    Task {
        id: "example".into(),
        source: "grant_controller".into(),
        automaton_text: render_hoa_with(&a, LeafStyle::Name),
        trace_text: fixtures::GRANT_TRACE.into(),
        features: compute_features(&a, &trace, Some(&label)),
        body: TaskBody::Tce { question: vec![effect.to_string()], ground_truth: label },
        difficulty: Difficulty::Normal,
        seed: 0,
    }
}

fn grant_tte_example() -> Task {
    let a = parse_hoa(fixtures::GRANT_CONTROLLER).expect("fixture parses");
    let mut trace = parse_semicolon("!g&!r;!g&r;!g&!r;g&r;g&r;!g&!r", &a.aps).expect("fixture trace parses");
    let walk = check_trace(&a, &trace);
    for (s, r) in trace.steps.iter_mut().zip(&walk.resolved) {
        s.source = Some(r.source);
        s.next = Some(r.next);
    }
    // One wrong destination so the example shows an illegal step.
    trace.steps[4].next = Some(0);
    let ground_truth = TteAnswer { accepted: check_trace(&a, &trace).accepted(), steps: crate::execution::transition_records(&a, &trace) };
    Task {
        id: "example".into(),
        source: "grant_controller".into(),
        automaton_text: render_hoa_with(&a, LeafStyle::Name),
        trace_text: format_trace(&trace, &a.aps, TraceStyle::Tuples).expect("states recorded"),
        features: compute_features(&a, &trace, None),
        body: TaskBody::Tte { question: TTE_QUESTION.into(), ground_truth },
        difficulty: Difficulty::Normal,
        seed: 0,
    }
}

/// The built-in worked example for a task family, drawn from the grant controller.
pub fn default_shot(kind: TaskKind) -> &'static str {
    static TCE: OnceLock<String> = OnceLock::new();
    static TTE: OnceLock<String> = OnceLock::new();
    match kind {
        TaskKind::Tce => TCE.get_or_init(|| example_text(&grant_tce_example())),
        TaskKind::Tte => TTE.get_or_init(|| example_text(&grant_tte_example())),
    }
}

/// One-shot prompt: instructions, the worked example `shot`, then the task.
pub fn build_prompt(task: &Task, shot: &str) -> String {
    let intro = match task.kind() {
        TaskKind::Tce => TCE_INTRO,
        TaskKind::Tte => TTE_INTRO,
    };
    let mut out = String::new();
    let _ = writeln!(out, "{intro}");
    let _ = writeln!(out, "Finish your reply with the line `{GRADING_MARKER}` followed by the JSON object.\n");
    let _ = writeln!(out, "Example:\n{}", shot.trim_end());
    let _ = writeln!(out, "\nNow solve this one.\n{}", task_block(task));
    out
}
