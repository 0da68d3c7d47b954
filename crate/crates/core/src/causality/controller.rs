//! Controller view of an automaton: the environment fixes the inputs, the
//! automaton must then pick exactly one output assignment and successor.

use crate::automata::{Alphabet, Automaton, LabelError, ENUMERATION_LIMIT};

use super::{CausalError, EffectSpec};

/// What the controller does in a state for one input assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// `bits` is the full assignment (inputs and chosen outputs).
    Move { bits: u64, next: usize },
    DeadEnd,
    Ambiguous,
}

fn spread(packed: u64, positions: &[usize]) -> u64 {
    positions.iter().enumerate().fold(0, |bits, (j, &ap)| bits | (packed >> j & 1) << ap)
}

/// Resolves one step by enumerating output assignments against the labels.
/// `inputs` holds full-width bits with every output bit clear.
pub(super) fn resolve_inputs(
    a: &Automaton,
    state: usize,
    inputs: u64,
    outputs: &[usize],
) -> Result<Resolution, CausalError> {
    if a.ap_count() > ENUMERATION_LIMIT {
        return Err(LabelError::TooManyAps(a.ap_count()).into());
    }
    Ok(resolve(a, a.alphabet() == Alphabet::Letters, state, inputs, outputs))
}

fn resolve(a: &Automaton, letters: bool, state: usize, inputs: u64, outputs: &[usize]) -> Resolution {
    let mut found: Option<(u64, usize)> = None;
    for y in 0..1u64 << outputs.len() {
        let bits = inputs | spread(y, outputs);
        if letters && bits.count_ones() != 1 {
            continue;
        }
        for edge in a.edges(state) {
            if !edge.label.holds(bits) {
                continue;
            }
            match found {
                None => found = Some((bits, edge.dest)),
                Some(choice) if choice == (bits, edge.dest) => {}
                Some(_) => return Resolution::Ambiguous,
            }
        }
    }
    match found {
        Some((bits, next)) => Resolution::Move { bits, next },
        None => Resolution::DeadEnd,
    }
}

/// Every (state, packed input) resolution, precomputed.
pub(super) struct Controller {
    start: usize,
    inputs: Vec<usize>,
    table: Vec<Resolution>,
}

impl Controller {
    pub fn compile(a: &Automaton) -> Result<Self, CausalError> {
        let inputs: Vec<usize> = a.inputs().map(|ap| ap.index).collect();
        let outputs: Vec<usize> = a.outputs().map(|ap| ap.index).collect();
        if a.ap_count() > ENUMERATION_LIMIT || inputs.len() > 16 {
            return Err(LabelError::TooManyAps(a.ap_count()).into());
        }
        let letters = a.alphabet() == Alphabet::Letters;
        let m = inputs.len();
        let mut table = Vec::with_capacity(a.state_count() << m);
        for state in 0..a.state_count() {
            for x in 0..1u64 << m {
                table.push(resolve(a, letters, state, spread(x, &inputs), &outputs));
            }
        }
        Ok(Controller { start: a.start, inputs, table })
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn resolution(&self, state: usize, packed: u64) -> Resolution {
        self.table[state << self.inputs.len() | packed as usize]
    }

    /// Input bits of each assignment, input `j` at bit `j`.
    pub fn pack_all(&self, steps: impl Iterator<Item = crate::automata::Assignment>) -> Vec<u64> {
        steps
            .map(|x| {
                self.inputs.iter().enumerate().fold(0, |p, (j, &ap)| p | (x.bits() >> ap & 1) << j)
            })
            .collect()
    }

    /// Runs a packed input sequence; a dead end falsifies the effect.
    pub fn effect_outcome(&self, packed: &[u64], e: &EffectSpec) -> Result<bool, CausalError> {
        let mut state = self.start;
        for (step, &x) in packed[..=e.depth].iter().enumerate() {
            match self.resolution(state, x) {
                Resolution::Move { bits, next } => {
                    if step == e.depth {
                        return Ok((bits >> e.output & 1 == 1) == e.polarity);
                    }
                    state = next;
                }
                Resolution::DeadEnd => return Ok(false),
                Resolution::Ambiguous => return Err(CausalError::Ambiguous { state, step }),
            }
        }
        unreachable!("the loop returns at the effect depth")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::parse_hoa;
    use crate::fixtures;

    #[test]
    fn grant_table() {
        let a = parse_hoa(fixtures::GRANT_CONTROLLER).unwrap();
        let c = Controller::compile(&a).unwrap();
        assert_eq!(c.inputs(), &[1]);
        assert_eq!(c.resolution(0, 0), Resolution::Move { bits: 0, next: 1 });
        assert_eq!(c.resolution(3, 1), Resolution::Move { bits: 0b11, next: 5 });
        assert_eq!(c.resolution(3, 0), Resolution::Move { bits: 0, next: 4 });
    }

    #[test]
    fn spread_places_bits() {
        assert_eq!(spread(0b101, &[1, 3, 4]), 0b10010);
    }
}
