//! Finite-trace simulation of HOA controllers: stepping, seeded random walks,
//! per-step acceptance checking and single-step trace corruption.
//!
//! A finite trace is *accepted* when every step resolves to a legal
//! transition from the current state and agrees with any recorded states.
//! Acceptance sets are not consulted.

mod format;

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::automata::{Assignment, Automaton, Label, LabelError, ENUMERATION_LIMIT};
use crate::rng;

pub use format::{format_trace, parse_semicolon, parse_trace_string, parse_tuples, TraceFormatError, TraceStyle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeStep {
    pub assignment: Assignment,
    pub source: Option<usize>,
    pub next: Option<usize>,
}

impl TimeStep {
    pub fn new(assignment: Assignment) -> Self {
        TimeStep { assignment, source: None, next: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Trace {
    pub steps: Vec<TimeStep>,
    /// Length of the repeated suffix, from `cycle{n}` notation.
    pub cycle: Option<u32>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn has_states(&self) -> bool {
        self.steps.iter().all(|s| s.source.is_some() && s.next.is_some())
    }

    pub fn without_states(&self) -> Trace {
        Trace { steps: self.steps.iter().map(|s| TimeStep::new(s.assignment)).collect(), cycle: self.cycle }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("state {state} does not exist")]
    NoSuchState { state: usize },
    #[error("assignment covers {got} APs, automaton has {expected}")]
    AssignmentWidth { got: usize, expected: usize },
    #[error("state {state} is declared deterministic but edges {edges:?} are all satisfied")]
    Nondeterministic { state: usize, edges: Vec<usize> },
    #[error("dead end at step {step}: state {state} has no satisfiable outgoing edge")]
    DeadEnd { state: usize, step: usize },
    #[error("trace length must be positive")]
    EmptyTrace,
    #[error("trace is not accepted (first violation at step {0})")]
    NotAccepted(usize),
    #[error("no single-step change makes the trace illegal")]
    Incorrigible,
    #[error(transparent)]
    Label(#[from] LabelError),
}

fn check_width(a: &Automaton, assignment: Assignment) -> Result<(), ExecError> {
    if assignment.width() != a.ap_count() {
        return Err(ExecError::AssignmentWidth { got: assignment.width(), expected: a.ap_count() });
    }
    Ok(())
}

fn satisfied_edges(a: &Automaton, state: usize, assignment: Assignment) -> Vec<usize> {
    a.edges(state)
        .iter()
        .enumerate()
        .filter(|(_, e)| e.label.holds(assignment.bits()))
        .map(|(i, _)| i)
        .collect()
}

/// The satisfied outgoing transition of `state` under `assignment`, if any.
/// With several satisfied edges the first is returned, unless the automaton
/// declares itself deterministic, which makes that an error.
pub fn step(a: &Automaton, state: usize, assignment: Assignment) -> Result<Option<(usize, &Label)>, ExecError> {
    if state >= a.state_count() {
        return Err(ExecError::NoSuchState { state });
    }
    check_width(a, assignment)?;
    let edges = satisfied_edges(a, state, assignment);
    if edges.len() > 1 && a.claims_deterministic() {
        return Err(ExecError::Nondeterministic { state, edges });
    }
    Ok(edges.first().map(|&i| {
        let edge = &a.edges(state)[i];
        (edge.dest, &edge.label)
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// No outgoing label is satisfied.
    NoTransition,
    /// Several satisfied labels and nothing to choose between them.
    Ambiguous { edges: Vec<usize> },
    /// Assignment outside the automaton's alphabet.
    NotInAlphabet,
    /// Recorded source state differs from the state actually reached.
    WrongSource { recorded: usize, expected: usize },
    /// Recorded next state differs from the resolved destination.
    WrongNext { recorded: usize, resolved: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedTransition {
    pub source: usize,
    pub edge: usize,
    pub label: Label,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceVerdict {
    pub first_violation: Option<(usize, Violation)>,
    /// One entry per step up to (excluding) the first violation.
    pub resolved: Vec<ResolvedTransition>,
}

impl TraceVerdict {
    pub fn accepted(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn violation_step(&self) -> Option<usize> {
        self.first_violation.as_ref().map(|(i, _)| *i)
    }
}

/// Resolves one step from `state`; `recorded_next` breaks ties between
/// satisfied edges of automata that do not claim determinism.
fn resolve(
    a: &Automaton,
    state: usize,
    assignment: Assignment,
    recorded_next: Option<usize>,
) -> Result<usize, Violation> {
    if !a.admits(assignment) {
        return Err(Violation::NotInAlphabet);
    }
    let edges = satisfied_edges(a, state, assignment);
    let dest = |i: usize| a.edges(state)[i].dest;
    match edges.as_slice() {
        [] => Err(Violation::NoTransition),
        [only] => Ok(*only),
        _ if a.claims_deterministic() => Err(Violation::Ambiguous { edges }),
        _ => {
            if let Some(next) = recorded_next {
                if let Some(&i) = edges.iter().find(|&&i| dest(i) == next) {
                    return Ok(i);
                }
            }
            if edges.iter().all(|&i| dest(i) == dest(edges[0])) {
                Ok(edges[0])
            } else {
                Err(Violation::Ambiguous { edges })
            }
        }
    }
}

/// Walks `t` from the start state, checking legality of every step and
/// agreement with recorded states. Violations are reported in the verdict.
pub fn check_trace(a: &Automaton, t: &Trace) -> TraceVerdict {
    let mut state = a.start;
    let mut resolved = Vec::with_capacity(t.len());
    for (i, s) in t.steps.iter().enumerate() {
        let fail = |v| TraceVerdict { first_violation: Some((i, v)), resolved: resolved.clone() };
        if s.assignment.width() != a.ap_count() {
            return fail(Violation::NotInAlphabet);
        }
        if let Some(recorded) = s.source {
            if recorded != state {
                return fail(Violation::WrongSource { recorded, expected: state });
            }
        }
        let edge = match resolve(a, state, s.assignment, s.next) {
            Ok(edge) => edge,
            Err(v) => return fail(v),
        };
        let e = &a.edges(state)[edge];
        if let Some(recorded) = s.next {
            if recorded != e.dest {
                return fail(Violation::WrongNext { recorded, resolved: e.dest });
            }
        }
        resolved.push(ResolvedTransition { source: state, edge, label: e.label.clone(), next: e.dest });
        state = e.dest;
    }
    TraceVerdict { first_violation: None, resolved }
}

/// Per-step transition judgement used as the trace-acceptance answer schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransitionRecord {
    pub step: usize,
    pub source_state: usize,
    /// Destination the automaton takes from `source_state`; `None` when no
    /// transition is enabled.
    pub next_state: Option<usize>,
    pub legal: bool,
}

/// Judges every step of a state-annotated trace on its own: the step is
/// legal iff its assignment enables a transition from the recorded source
/// that leads to the recorded next state. Traces without recorded states are
/// annotated along the walk first.
pub fn transition_records(a: &Automaton, t: &Trace) -> Vec<TransitionRecord> {
    let mut walked = a.start;
    t.steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let source = s.source.unwrap_or(walked);
            let next_state = if source < a.state_count() && s.assignment.width() == a.ap_count() {
                resolve(a, source, s.assignment, s.next).ok().map(|e| a.edges(source)[e].dest)
            } else {
                None
            };
            let legal = next_state.is_some() && s.next.is_none_or(|n| Some(n) == next_state);
            walked = s.next.or(next_state).unwrap_or(source);
            TransitionRecord { step: i, source_state: source, next_state, legal }
        })
        .collect()
}

/// Random walk of `length` steps from the start state. Each step picks one
/// satisfiable outgoing edge uniformly, then one admissible assignment of its
/// label uniformly. A pure function of `(a, length, seed)`.
pub fn random_trace(a: &Automaton, length: usize, seed: u64) -> Result<Trace, ExecError> {
    if length == 0 {
        return Err(ExecError::EmptyTrace);
    }
    if a.ap_count() > ENUMERATION_LIMIT {
        return Err(LabelError::TooManyAps(a.ap_count()).into());
    }
    let mut rng = rng::seeded(seed);
    let mut legal: HashMap<(usize, usize), Vec<Assignment>> = HashMap::new();
    let mut state = a.start;
    let mut steps = Vec::with_capacity(length);
    for step in 0..length {
        let mut options = Vec::new();
        for (i, edge) in a.edges(state).iter().enumerate() {
            if let Entry::Vacant(slot) = legal.entry((state, i)) {
                slot.insert(a.legal_assignments(&edge.label)?);
            }
            if !legal[&(state, i)].is_empty() {
                options.push(i);
            }
        }
        if options.is_empty() {
            return Err(ExecError::DeadEnd { state, step });
        }
        let edge = options[rng::below(&mut rng, options.len())];
        let assignments = &legal[&(state, edge)];
        let assignment = assignments[rng::below(&mut rng, assignments.len())];
        let dest = a.edges(state)[edge].dest;
        steps.push(TimeStep { assignment, source: Some(state), next: Some(dest) });
        state = dest;
    }
    Ok(Trace { steps, cycle: None })
}

#[derive(Debug, Clone, Copy)]
enum Mutation {
    Assignment(usize, Assignment),
    Next(usize, usize),
}

/// Changes exactly one step of an accepted trace, either its assignment or
/// its recorded next state, so that the result is rejected. The change is
/// drawn uniformly (seeded) from all rejecting single-step changes.
pub fn mutate_trace(a: &Automaton, t: &Trace, seed: u64) -> Result<Trace, ExecError> {
    if t.is_empty() {
        return Err(ExecError::EmptyTrace);
    }
    if let Some(step) = check_trace(a, t).violation_step() {
        return Err(ExecError::NotAccepted(step));
    }
    let alphabet = a.alphabet_assignments()?;
    let mut candidates = Vec::new();
    for (i, s) in t.steps.iter().enumerate() {
        candidates.extend(alphabet.iter().filter(|&&x| x != s.assignment).map(|&x| Mutation::Assignment(i, x)));
        if let Some(next) = s.next {
            candidates.extend((0..a.state_count()).filter(|&d| d != next).map(|d| Mutation::Next(i, d)));
        }
    }
    let mut rng = rng::seeded(seed);
    rng::shuffle(&mut rng, &mut candidates);
    for mutation in candidates {
        let mut mutated = t.clone();
        match mutation {
            Mutation::Assignment(i, x) => mutated.steps[i].assignment = x,
            Mutation::Next(i, d) => mutated.steps[i].next = Some(d),
        }
        if !check_trace(a, &mutated).accepted() {
            return Ok(mutated);
        }
    }
    Err(ExecError::Incorrigible)
}
