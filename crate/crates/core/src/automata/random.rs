//! Random Mealy controllers, used as fixtures when hand-written HOA files
//! are too few.

use crate::rng::{self, Rng};

use super::{Acceptance, ApKind, AtomicProposition, Automaton, Edge, Label, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControllerShape {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
}

fn cube(bits: usize, aps: impl Iterator<Item = usize>) -> Label {
    Label::and(aps.enumerate().map(|(pos, ap)| Label::literal(ap, bits >> pos & 1 == 1)))
}

/// A complete, input-deterministic controller: from every state, each input
/// assignment fixes exactly one output assignment and successor, both drawn
/// uniformly. Edges sharing (outputs, successor) are merged into one label.
pub fn random_controller(shape: ControllerShape, seed: u64) -> Automaton {
    assert!(shape.states > 0, "a controller needs at least one state");
    assert!(shape.inputs + shape.outputs <= 16, "random controllers are limited to 16 APs");
    let mut rng: Rng = rng::seeded(seed);
    let mut aps: Vec<AtomicProposition> = (0..shape.inputs)
        .map(|i| AtomicProposition { index: i, name: format!("i{i}"), kind: ApKind::Input })
        .collect();
    aps.extend((0..shape.outputs).map(|o| AtomicProposition {
        index: shape.inputs + o,
        name: format!("o{o}"),
        kind: ApKind::Output,
    }));

    let input_count = 1usize << shape.inputs;
    let states = (0..shape.states)
        .map(|_| {
            let mut groups: Vec<((usize, usize), Vec<usize>)> = Vec::new();
            for x in 0..input_count {
                let y = rng::below(&mut rng, 1 << shape.outputs);
                let dest = rng::below(&mut rng, shape.states);
                match groups.iter_mut().find(|(key, _)| *key == (y, dest)) {
                    Some((_, xs)) => xs.push(x),
                    None => groups.push(((y, dest), vec![x])),
                }
            }
            let edges = groups
                .into_iter()
                .map(|((y, dest), xs)| {
                    let input_part = if xs.len() == input_count {
                        Label::True
                    } else {
                        Label::or(xs.iter().map(|&x| cube(x, 0..shape.inputs)))
                    };
                    let output_part = cube(y, shape.inputs..shape.inputs + shape.outputs);
                    let label = match input_part {
                        Label::True => output_part,
                        other => Label::and([other, output_part]),
                    };
                    Edge { label, dest, acc_sets: Vec::new() }
                })
                .collect();
            State { name: None, acc_sets: Vec::new(), edges }
        })
        .collect();

    Automaton {
        name: Some(format!("random controller {seed}")),
        start: 0,
        aps,
        acc_name: Some("all".into()),
        acceptance: Acceptance::All,
        properties: ["trans-labels", "explicit-labels", "state-acc", "deterministic"].map(String::from).to_vec(),
        extra_headers: Vec::new(),
        states,
    }
}
