//! HOA controllers shipped with the crate, used by tests, the default
//! one-shot example and the sample corpus.

/// Six-state grant controller over output `g` and input `r`.
pub const GRANT_CONTROLLER: &str = include_str!("../fixtures/grant_controller.hoa");
/// Symbol automaton computing a binary number modulo 3.
pub const MOD3_DFA: &str = include_str!("../fixtures/mod3_dfa.hoa");
/// Sixteen-state arbiter over four request inputs, four grants and `upd`.
pub const LATCHED_ARBITER: &str = include_str!("../fixtures/latched_arbiter.hoa");
/// Tuple-style trace of the latched arbiter ending in state 15.
pub const LATCHED_ARBITER_TRACE: &str = include_str!("../fixtures/listing_trace.txt");
pub const ROUND_ROBIN_ARBITER: &str = include_str!("../fixtures/round_robin_arbiter.hoa");
pub const TICK_COUNTER: &str = include_str!("../fixtures/tick_counter.hoa");

/// Trace prefix of the grant controller used by the one-shot example.
pub const GRANT_TRACE: &str = "!g&!r;!g&r;!g&!r;g&r;g&r;!g&!r;g&r;g&r;g&r;g&r;cycle{1}";

pub const ALL: [(&str, &str); 5] = [
    ("grant_controller", GRANT_CONTROLLER),
    ("mod3_dfa", MOD3_DFA),
    ("latched_arbiter", LATCHED_ARBITER),
    ("round_robin_arbiter", ROUND_ROBIN_ARBITER),
    ("tick_counter", TICK_COUNTER),
];
