use serde::Serialize;

use super::{Automaton, LabelError};

/// Enumeration bound for determinism checking.
pub const VALIDATION_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateAssignment {
    pub state: usize,
    /// Assignment bit vector, AP `i` is bit `i`.
    pub assignment: u64,
    /// Indices of the satisfied outgoing edges.
    pub edges: Vec<usize>,
}

/// Per-state outcome of enumerating every admissible assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DeterminismReport {
    /// Two or more outgoing labels satisfied.
    pub conflicts: Vec<StateAssignment>,
    /// No outgoing label satisfied.
    pub holes: Vec<StateAssignment>,
}

impl DeterminismReport {
    pub fn is_deterministic(&self) -> bool {
        self.conflicts.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.holes.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.conflicts.is_empty() && self.holes.is_empty()
    }
}

/// Lists every (state, assignment) pair with zero or several satisfied
/// outgoing labels, over the automaton's alphabet.
pub fn validate_deterministic(a: &Automaton) -> Result<DeterminismReport, LabelError> {
    if a.ap_count() > VALIDATION_LIMIT {
        return Err(LabelError::TooManyAps(a.ap_count()));
    }
    let alphabet = a.alphabet_assignments()?;
    let mut report = DeterminismReport::default();
    for (state, s) in a.states.iter().enumerate() {
        for assignment in &alphabet {
            let edges: Vec<usize> = s
                .edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.label.holds(assignment.bits()))
                .map(|(i, _)| i)
                .collect();
            let entry = StateAssignment { state, assignment: assignment.bits(), edges };
            match entry.edges.len() {
                0 => report.holes.push(entry),
                1 => {}
                _ => report.conflicts.push(entry),
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::parse_hoa;
    use crate::fixtures;

    #[test]
    fn mod3_dfa_is_clean() {
        let report = validate_deterministic(&parse_hoa(fixtures::MOD3_DFA).unwrap()).unwrap();
        assert!(report.is_empty(), "{report:?}");
    }

    #[test]
    fn overlapping_edges_conflict() {
        let a = parse_hoa("HOA: v1\nStates: 1\nStart: 0\nAP: 1 \"g\"\n--BODY--\nState: 0\n[g] 0\n[t] 0\n--END--\n").unwrap();
        let report = validate_deterministic(&a).unwrap();
        assert_eq!(report.conflicts, vec![StateAssignment { state: 0, assignment: 0b1, edges: vec![0, 1] }]);
        assert!(report.holes.is_empty());
    }

    #[test]
    fn grant_controller_holes() {
        let a = parse_hoa(fixtures::GRANT_CONTROLLER).unwrap();
        let report = validate_deterministic(&a).unwrap();
        assert!(report.is_deterministic());
        // g is bit 0, r is bit 1: {g=1, r=0} satisfies neither [!g&!r] nor [g&r].
        assert!(report.holes.contains(&StateAssignment { state: 3, assignment: 0b01, edges: vec![] }));
        assert!(!report.holes.iter().any(|h| h.state == 3 && (h.assignment == 0b00 || h.assignment == 0b11)));
    }

    #[test]
    fn too_many_aps() {
        let names: Vec<String> = (0..17).map(|i| format!("\"p{i}\"")).collect();
        let text = format!("HOA: v1\nStart: 0\nAP: 17 {}\n--BODY--\nState: 0\n[t] 0\n--END--\n", names.join(" "));
        assert_eq!(validate_deterministic(&parse_hoa(&text).unwrap()), Err(LabelError::TooManyAps(17)));
    }
}
