//! Brute-force reference implementations kept apart from the library code.

#![allow(dead_code)]

use chronotask_core::automata::{random_controller, ApKind, Assignment, Automaton, ControllerShape};
use chronotask_core::causality::EffectSpec;
use chronotask_core::execution::{random_trace, Trace};
use chronotask_core::rng;

/// Outcome of running a controller on input bits with plain label evaluation.
pub enum Run {
    Outputs(Vec<u64>),
    Dead,
}

/// Runs `inputs` (full-width bits, outputs ignored) by trying every output
/// assignment against every edge of the current state.
pub fn naive_run(a: &Automaton, inputs: &[u64]) -> Run {
    let width = a.ap_count();
    let in_mask: u64 = a.aps.iter().filter(|p| p.kind == ApKind::Input).map(|p| 1u64 << p.index).sum();
    let letters = a.alphabet() == chronotask_core::automata::Alphabet::Letters;
    let mut state = a.start;
    let mut out = Vec::new();
    for &x in inputs {
        let mut moves: Vec<(u64, usize)> = Vec::new();
        for bits in 0..1u64 << width {
            if bits & in_mask != x & in_mask || (letters && bits.count_ones() != 1) {
                continue;
            }
            for e in a.edges(state) {
                if e.label.eval(Assignment::new(bits, width)).unwrap() && !moves.contains(&(bits, e.dest)) {
                    moves.push((bits, e.dest));
                }
            }
        }
        match moves.as_slice() {
            [] => return Run::Dead,
            [(bits, dest)] => {
                out.push(*bits);
                state = *dest;
            }
            _ => panic!("controller is ambiguous in state {state}"),
        }
    }
    Run::Outputs(out)
}

fn holds(a: &Automaton, inputs: &[u64], e: &EffectSpec) -> bool {
    match naive_run(a, &inputs[..=e.depth]) {
        Run::Outputs(bits) => (bits[e.depth] >> e.output & 1 == 1) == e.polarity,
        Run::Dead => false,
    }
}

/// Constraint strings per step, by flipping each input literal in turn.
pub fn naive_causes(a: &Automaton, t: &Trace, e: &EffectSpec) -> Vec<Vec<String>> {
    let inputs: Vec<u64> = t.steps.iter().map(|s| s.assignment.bits()).collect();
    assert!(holds(a, &inputs, e), "effect must hold on the trace");
    (0..=e.depth)
        .map(|u| {
            let lits: Vec<String> = a
                .aps
                .iter()
                .filter(|p| p.kind == ApKind::Input)
                .filter(|p| {
                    let mut flipped = inputs.clone();
                    flipped[u] ^= 1 << p.index;
                    !holds(a, &flipped, e)
                })
                .map(|p| if inputs[u] >> p.index & 1 == 1 { p.name.clone() } else { format!("!{}", p.name) })
                .collect();
            if lits.is_empty() {
                vec!["no constraints".to_string()]
            } else {
                vec![lits.join(" and ")]
            }
        })
        .collect()
}

/// A random controller instance with an effect that holds on its trace.
/// Some instances lose an edge so that counterfactual runs can dead-end.
pub struct Instance {
    pub automaton: Automaton,
    pub trace: Trace,
    pub effect: EffectSpec,
}

pub fn random_instance(seed: u64, max_states: usize, max_inputs: usize, max_depth: usize) -> Option<Instance> {
    let mut r = rng::seeded(seed);
    let shape = ControllerShape {
        states: 1 + rng::below(&mut r, max_states),
        inputs: 1 + rng::below(&mut r, max_inputs),
        outputs: 1 + rng::below(&mut r, 2),
    };
    let mut a = random_controller(shape, rng::next_seed(&mut r));
    if rng::below(&mut r, 3) == 0 {
        let s = rng::below(&mut r, a.state_count());
        if a.states[s].edges.len() > 1 {
            let e = rng::below(&mut r, a.states[s].edges.len());
            a.states[s].edges.remove(e);
        }
    }
    let depth = rng::below(&mut r, max_depth + 1);
    let trace = random_trace(&a, depth + 1, rng::next_seed(&mut r)).ok()?.without_states();
    let outputs: Vec<_> = a.outputs().cloned().collect();
    let o = &outputs[rng::below(&mut r, outputs.len())];
    let polarity = trace.steps[depth].assignment.get(o.index).unwrap();
    let effect = EffectSpec { output: o.index, name: o.name.clone(), depth, polarity };
    Some(Instance { automaton: a, trace, effect })
}
