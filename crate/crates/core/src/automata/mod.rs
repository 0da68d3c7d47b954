//! HOA controllers: atomic propositions, labeled transitions, parsing and rendering.

mod hoa;
mod label;
mod random;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use hoa::{parse_hoa, render_hoa, render_hoa_with, HoaError};
pub use label::{
    is_plain_name, parse_label, parse_label_with_aps, satisfying_assignments, Label, LabelError, LeafStyle,
    ENUMERATION_LIMIT,
};
pub use random::{random_controller, ControllerShape};
pub use validate::{validate_deterministic, DeterminismReport, StateAssignment};

/// Maximum number of APs an automaton may declare (assignments are `u64` bit vectors).
pub const MAX_APS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApKind {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomicProposition {
    pub index: usize,
    pub name: String,
    pub kind: ApKind,
}

/// A full truth assignment over the first `width` APs; AP `i` is bit `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Assignment {
    bits: u64,
    width: usize,
}

impl Assignment {
    pub fn new(bits: u64, width: usize) -> Self {
        assert!(width <= MAX_APS, "assignment width {width} exceeds {MAX_APS}");
        let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        Assignment { bits: bits & mask, width }
    }

    /// Assignment where exactly the named APs are true.
    pub fn from_true_names<'a>(
        aps: &[AtomicProposition],
        names: impl IntoIterator<Item = &'a str>,
    ) -> Option<Self> {
        let mut bits = 0;
        for name in names {
            let ap = aps.iter().find(|ap| ap.name == name)?;
            bits |= 1 << ap.index;
        }
        Some(Assignment::new(bits, aps.len()))
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn width(self) -> usize {
        self.width
    }

    pub fn get(self, index: usize) -> Option<bool> {
        (index < self.width).then(|| self.bits >> index & 1 == 1)
    }

    pub fn with(self, index: usize, value: bool) -> Self {
        debug_assert!(index < self.width);
        let bits = if value { self.bits | 1 << index } else { self.bits & !(1 << index) };
        Assignment { bits, width: self.width }
    }

    pub fn flipped(self, index: usize) -> Self {
        self.with(index, !self.get(index).unwrap_or(false))
    }

    /// Indices of the true APs, ascending.
    pub fn true_indices(self) -> impl Iterator<Item = usize> {
        (0..self.width).filter(move |i| self.bits >> i & 1 == 1)
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Assignment({:0width$b})", self.bits, width = self.width.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub label: Label,
    pub dest: usize,
    /// Transition-based acceptance marks, stored but not interpreted.
    pub acc_sets: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct State {
    pub name: Option<String>,
    /// State-based acceptance marks such as `{0}`.
    pub acc_sets: Vec<u32>,
    pub edges: Vec<Edge>,
}

/// Acceptance condition. Only the trivial condition is interpreted; finite
/// traces never certify anything richer, so other conditions are kept as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Acceptance {
    /// `Acceptance: 0 t`
    All,
    NotTracked { sets: u32, condition: String },
}

/// Which assignments may occur at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alphabet {
    /// Every one of the 2^n assignments.
    Full,
    /// Exactly one AP true per step. Inferred for symbol automata (no
    /// controllable APs, every label a single positive AP), where each AP
    /// stands for one letter of the input alphabet.
    Letters,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    pub name: Option<String>,
    pub start: usize,
    pub aps: Vec<AtomicProposition>,
    pub acc_name: Option<String>,
    pub acceptance: Acceptance,
    pub properties: Vec<String>,
    /// Unrecognized header lines, kept verbatim.
    pub extra_headers: Vec<String>,
    pub states: Vec<State>,
}

impl Automaton {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.states.iter().map(|s| s.edges.len()).sum()
    }

    pub fn ap_count(&self) -> usize {
        self.aps.len()
    }

    pub fn edges(&self, state: usize) -> &[Edge] {
        &self.states[state].edges
    }

    pub fn ap_by_name(&self, name: &str) -> Option<&AtomicProposition> {
        self.aps.iter().find(|ap| ap.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &AtomicProposition> {
        self.aps.iter().filter(|ap| ap.kind == ApKind::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &AtomicProposition> {
        self.aps.iter().filter(|ap| ap.kind == ApKind::Output)
    }

    pub fn claims_deterministic(&self) -> bool {
        self.properties.iter().any(|p| p == "deterministic")
    }

    pub fn alphabet(&self) -> Alphabet {
        let symbolic = self.outputs().next().is_none()
            && self.transition_count() > 0
            && self.states.iter().flat_map(|s| &s.edges).all(|e| matches!(e.label, Label::Ap(_)));
        if symbolic {
            Alphabet::Letters
        } else {
            Alphabet::Full
        }
    }

    /// Whether `assignment` belongs to this automaton's alphabet.
    pub fn admits(&self, assignment: Assignment) -> bool {
        match self.alphabet() {
            Alphabet::Full => true,
            Alphabet::Letters => assignment.bits().count_ones() == 1,
        }
    }

    /// All admissible assignments satisfying `label`, ascending.
    pub fn legal_assignments(&self, label: &Label) -> Result<Vec<Assignment>, LabelError> {
        let n = self.ap_count();
        if n > ENUMERATION_LIMIT {
            return Err(LabelError::TooManyAps(n));
        }
        Ok(match self.alphabet() {
            Alphabet::Full => satisfying_assignments(label, n)?,
            Alphabet::Letters => (0..n)
                .map(|i| Assignment::new(1 << i, n))
                .filter(|a| label.holds(a.bits()))
                .collect(),
        })
    }

    /// Every admissible assignment, ascending.
    pub fn alphabet_assignments(&self) -> Result<Vec<Assignment>, LabelError> {
        self.legal_assignments(&Label::True)
    }

    /// Names of the true APs, in index order.
    pub fn true_names(&self, assignment: Assignment) -> Vec<&str> {
        assignment.true_indices().map(|i| self.aps[i].name.as_str()).collect()
    }
}

impl fmt::Display for Automaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_hoa(self))
    }
}
