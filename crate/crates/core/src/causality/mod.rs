//! Counterfactual causes of output effects on finite traces.
//!
//! An effect is "output `o` has value `v` at step `k`". A literal (input `p`
//! at step `u <= k`, with the value it has on the trace) is a cause when
//! flipping that one input, all other inputs held fixed, and re-running the
//! controller changes `o` at step `k`. Two routes compute the causes:
//! [`but_for_constraints`] re-simulates each flip directly, while
//! [`minimal_causes`] reads the answers off an exhaustive [`CauseTable`].

mod controller;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::automata::{ApKind, Assignment, AtomicProposition, Automaton, LabelError};
use crate::execution::Trace;

pub use controller::Resolution;
use controller::{resolve_inputs, Controller};

/// Sentinel for a step without causal literals.
pub const NO_CONSTRAINTS: &str = "no constraints";

/// Largest cause table, in index bits (inputs times steps).
pub const TABLE_LIMIT_BITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CausalError {
    #[error("malformed effect `{0}`")]
    MalformedEffect(String),
    #[error("unknown atomic proposition `{0}`")]
    UnknownAp(String),
    #[error("`{0}` is an input, effects must name an output")]
    NotAnOutput(String),
    #[error("effect at step {depth} lies beyond the {len}-step input sequence")]
    TooShort { depth: usize, len: usize },
    #[error("step {step}: state {state} has no transition for the given inputs")]
    DeadEnd { state: usize, step: usize },
    #[error("step {step}: state {state} admits several output/successor choices for the given inputs")]
    Ambiguous { state: usize, step: usize },
    #[error("effect `{0}` does not hold on the trace")]
    EffectNotSatisfied(String),
    #[error("cause table needs 2^{0} rows, limit is 2^{TABLE_LIMIT_BITS}")]
    TableTooLarge(usize),
    #[error(transparent)]
    Label(#[from] LabelError),
}

/// An output value at a fixed depth, written `XXX g` (depth 3) or `XX !g`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EffectSpec {
    pub output: usize,
    pub name: String,
    pub depth: usize,
    pub polarity: bool,
}

impl fmt::Display for EffectSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.polarity { "" } else { "!" };
        if self.depth == 0 {
            write!(f, "{sign}{}", self.name)
        } else {
            write!(f, "{} {sign}{}", "X".repeat(self.depth), self.name)
        }
    }
}

/// Parses `X* name`, with an optional `!` before the name. The `X`s may be
/// run together (`XXX g`) or separated (`X X X g`).
pub fn parse_effect(s: &str, aps: &[AtomicProposition]) -> Result<EffectSpec, CausalError> {
    let malformed = || CausalError::MalformedEffect(s.to_string());
    let mut text = s.trim();
    let mut polarity = true;
    if let Some(rest) = text.strip_prefix('!') {
        polarity = false;
        text = rest.trim_start();
    }
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let (name, prefix) = tokens.split_last().ok_or_else(malformed)?;
    let mut depth = 0;
    for token in prefix {
        if !token.chars().all(|c| c == 'X') {
            return Err(malformed());
        }
        depth += token.len();
    }
    let name = match name.strip_prefix('!') {
        Some(rest) if polarity => {
            polarity = false;
            rest
        }
        Some(_) => return Err(malformed()),
        None => name,
    };
    let ap = aps.iter().find(|ap| ap.name == name).ok_or_else(|| CausalError::UnknownAp(name.to_string()))?;
    if ap.kind != ApKind::Output {
        return Err(CausalError::NotAnOutput(name.to_string()));
    }
    Ok(EffectSpec { output: ap.index, name: ap.name.clone(), depth, polarity })
}

/// Causal literals for one effect, one entry per step `0..=depth`. Each entry
/// is either `["no constraints"]` or a single conjunction such as `"r"` or
/// `"a and !b"`, literals in AP index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGroundTruth {
    pub effect: EffectSpec,
    pub steps: Vec<Vec<String>>,
}

impl CausalGroundTruth {
    fn from_literals(effect: EffectSpec, literals: Vec<Vec<String>>) -> Self {
        let steps = literals
            .into_iter()
            .map(|lits| if lits.is_empty() { vec![NO_CONSTRAINTS.to_string()] } else { vec![lits.join(" and ")] })
            .collect();
        CausalGroundTruth { effect, steps }
    }

    /// Number of literal occurrences across all steps.
    pub fn literal_count(&self) -> usize {
        self.steps
            .iter()
            .flatten()
            .filter(|c| c.as_str() != NO_CONSTRAINTS)
            .map(|c| c.split(" and ").count())
            .sum()
    }

    pub fn step_map(&self) -> StepMap {
        self.steps.iter().enumerate().map(|(i, c)| (i as u32, c.clone())).collect()
    }
}

/// Step index to constraint strings; serializes with decimal string keys.
pub type StepMap = BTreeMap<u32, Vec<String>>;

/// Serialized causal answer: effect string to per-step constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CausalLabel(pub BTreeMap<String, StepMap>);

// Step keys are read as strings first: integer keys do not survive serde's
// buffering when the label sits inside a flattened enum.
impl<'de> Deserialize<'de> for CausalLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, BTreeMap<String, Vec<String>>>::deserialize(d)?;
        raw.into_iter()
            .map(|(effect, steps)| {
                let steps = steps
                    .into_iter()
                    .map(|(k, v)| k.parse::<u32>().map(|k| (k, v)).map_err(serde::de::Error::custom))
                    .collect::<Result<StepMap, _>>()?;
                Ok((effect, steps))
            })
            .collect::<Result<_, _>>()
            .map(CausalLabel)
    }
}

impl CausalLabel {
    pub fn insert(&mut self, gt: &CausalGroundTruth) {
        self.0.insert(gt.effect.to_string(), gt.step_map());
    }

    pub fn literal_count(&self) -> usize {
        self.0
            .values()
            .flat_map(|steps| steps.values().flatten())
            .filter(|c| c.as_str() != NO_CONSTRAINTS)
            .map(|c| c.split(" and ").count())
            .sum()
    }

    /// Two-space indented JSON.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("string maps always serialize")
    }
}

impl From<&CausalGroundTruth> for CausalLabel {
    fn from(gt: &CausalGroundTruth) -> Self {
        let mut label = CausalLabel::default();
        label.insert(gt);
        label
    }
}

/// One resolved controller step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunStep {
    /// Inputs as given, outputs as chosen by the controller.
    pub assignment: Assignment,
    pub source: usize,
    pub next: usize,
}

fn input_mask(a: &Automaton) -> u64 {
    a.inputs().fold(0, |m, ap| m | 1 << ap.index)
}

/// Runs the controller on a sequence of input assignments (output bits are
/// ignored). At each step the environment fixes the inputs and exactly one
/// (output assignment, successor) pair must be enabled.
pub fn run_inputs(a: &Automaton, inputs: &[Assignment]) -> Result<Vec<RunStep>, CausalError> {
    let mask = input_mask(a);
    let outputs: Vec<usize> = a.outputs().map(|ap| ap.index).collect();
    let mut state = a.start;
    let mut run = Vec::with_capacity(inputs.len());
    for (step, x) in inputs.iter().enumerate() {
        match resolve_inputs(a, state, x.bits() & mask, &outputs)? {
            Resolution::Move { bits, next } => {
                run.push(RunStep { assignment: Assignment::new(bits, a.ap_count()), source: state, next });
                state = next;
            }
            Resolution::DeadEnd => return Err(CausalError::DeadEnd { state, step }),
            Resolution::Ambiguous => return Err(CausalError::Ambiguous { state, step }),
        }
    }
    Ok(run)
}

/// Whether the effect's output has the effect's value at its depth.
pub fn effect_holds(a: &Automaton, inputs: &[Assignment], e: &EffectSpec) -> Result<bool, CausalError> {
    if inputs.len() <= e.depth {
        return Err(CausalError::TooShort { depth: e.depth, len: inputs.len() });
    }
    let run = run_inputs(a, &inputs[..=e.depth])?;
    Ok(run[e.depth].assignment.get(e.output) == Some(e.polarity))
}

fn literal(ap: &AtomicProposition, value: bool) -> String {
    if value {
        ap.name.clone()
    } else {
        format!("!{}", ap.name)
    }
}

/// Causes of `e` on trace `t`, by direct re-simulation of every single-input
/// flip at steps `0..=depth`. A flip that drives the controller into a state
/// without a transition counts as falsifying the effect.
pub fn but_for_constraints(a: &Automaton, t: &Trace, e: &EffectSpec) -> Result<CausalGroundTruth, CausalError> {
    if t.len() <= e.depth {
        return Err(CausalError::TooShort { depth: e.depth, len: t.len() });
    }
    let controller = Controller::compile(a)?;
    let actual: Vec<u64> = controller.pack_all(t.steps[..=e.depth].iter().map(|s| s.assignment));
    if !controller.effect_outcome(&actual, e)? {
        return Err(CausalError::EffectNotSatisfied(e.to_string()));
    }
    let mut literals = vec![Vec::new(); e.depth + 1];
    let mut flipped = actual.clone();
    for (u, lits) in literals.iter_mut().enumerate() {
        for (j, &ap) in controller.inputs().iter().enumerate() {
            flipped[u] ^= 1 << j;
            if !controller.effect_outcome(&flipped, e)? {
                lits.push(literal(&a.aps[ap], actual[u] >> j & 1 == 1));
            }
            flipped[u] ^= 1 << j;
        }
    }
    Ok(CausalGroundTruth::from_literals(e.clone(), literals))
}

/// Truth value of an effect for every input sequence of length `depth + 1`.
/// Row `r` encodes the sequence with the inputs of step `u` in bits
/// `u*m .. (u+1)*m` (input `j`, in AP order, at bit `u*m + j`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CauseTable {
    effect: EffectSpec,
    inputs: Vec<AtomicProposition>,
    rows: Vec<bool>,
}

impl CauseTable {
    pub fn effect(&self) -> &EffectSpec {
        &self.effect
    }

    pub fn inputs(&self) -> &[AtomicProposition] {
        &self.inputs
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[bool] {
        &self.rows
    }

    pub fn true_rows(&self) -> usize {
        self.rows.iter().filter(|r| **r).count()
    }

    /// Row index of an input sequence (full-width assignments, first `depth + 1` used).
    pub fn row_of(&self, inputs: &[Assignment]) -> usize {
        let m = self.inputs.len();
        inputs[..=self.effect.depth].iter().enumerate().fold(0, |row, (u, x)| {
            let packed = self.inputs.iter().enumerate().fold(0usize, |p, (j, ap)| {
                p | usize::from(x.get(ap.index).unwrap_or(false)) << j
            });
            row | packed << (u * m)
        })
    }

    pub fn holds(&self, inputs: &[Assignment]) -> bool {
        self.rows[self.row_of(inputs)]
    }

    /// A table built from explicit rows, e.g. for hand-made dependencies.
    pub fn from_rows(effect: EffectSpec, inputs: Vec<AtomicProposition>, rows: Vec<bool>) -> Self {
        assert_eq!(rows.len(), 1 << (inputs.len() * (effect.depth + 1)), "row count must match the domain");
        CauseTable { effect, inputs, rows }
    }
}

/// Evaluates the effect on every input sequence up to its depth.
pub fn build_cause_table(a: &Automaton, e: &EffectSpec) -> Result<CauseTable, CausalError> {
    let inputs: Vec<AtomicProposition> = a.inputs().cloned().collect();
    let m = inputs.len();
    let bits = m * (e.depth + 1);
    if bits > TABLE_LIMIT_BITS {
        return Err(CausalError::TableTooLarge(bits));
    }
    let controller = Controller::compile(a)?;
    let mut rows = vec![false; 1 << bits];
    // Depth-first over prefixes; rows under a dead prefix stay false.
    let mut stack = vec![(0usize, a.start, 0usize)];
    while let Some((u, state, prefix)) = stack.pop() {
        for x in 0..1usize << m {
            let row = prefix | x << (u * m);
            match controller.resolution(state, x as u64) {
                Resolution::Move { bits, next } => {
                    if u == e.depth {
                        rows[row] = (bits >> e.output & 1 == 1) == e.polarity;
                    } else {
                        stack.push((u + 1, next, row));
                    }
                }
                Resolution::DeadEnd => {}
                Resolution::Ambiguous => return Err(CausalError::Ambiguous { state, step: u }),
            }
        }
    }
    Ok(CauseTable { effect: e.clone(), inputs, rows })
}

/// Reads the causes off a cause table: every literal of the actual inputs
/// whose single flip lands on a row where the effect fails.
pub fn minimal_causes(ct: &CauseTable, actual_inputs: &[Assignment]) -> Result<CausalGroundTruth, CausalError> {
    let e = &ct.effect;
    if actual_inputs.len() <= e.depth {
        return Err(CausalError::TooShort { depth: e.depth, len: actual_inputs.len() });
    }
    let row = ct.row_of(actual_inputs);
    if !ct.rows[row] {
        return Err(CausalError::EffectNotSatisfied(e.to_string()));
    }
    let m = ct.inputs.len();
    let literals = (0..=e.depth)
        .map(|u| {
            ct.inputs
                .iter()
                .enumerate()
                .filter(|(j, _)| !ct.rows[row ^ 1 << (u * m + j)])
                .map(|(j, ap)| literal(ap, row >> (u * m + j) & 1 == 1))
                .collect()
        })
        .collect();
    Ok(CausalGroundTruth::from_literals(e.clone(), literals))
}
