//! The two textual trace formats.
//!
//! Semicolon style lists one conjunction of literals per step, every AP
//! mentioned explicitly, e.g. `!g&!r;!g&r;cycle{1}`. Tuple style lists one
//! `(source, {"true", "aps"}, next)` line per step; APs not listed are false.

use std::fmt::Write as _;

use crate::automata::{Assignment, AtomicProposition};

use super::{TimeStep, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStyle {
    Semicolon,
    Tuples,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceFormatError {
    #[error("step {step}: unknown atomic proposition `{name}`")]
    UnknownAp { step: usize, name: String },
    #[error("step {step}: malformed literal `{text}`")]
    MalformedLiteral { step: usize, text: String },
    #[error("step {step}: `{name}` must appear as a literal")]
    MissingAp { step: usize, name: String },
    #[error("line {line}: malformed tuple `{text}`")]
    MalformedTuple { line: usize, text: String },
    #[error("malformed cycle marker `{0}`")]
    MalformedCycle(String),
    #[error("tuple style needs recorded source and next states at step {0}")]
    MissingStates(usize),
}

fn parse_cycle(token: &str) -> Option<Result<u32, TraceFormatError>> {
    let inner = token.strip_prefix("cycle{")?.strip_suffix('}')?;
    Some(match inner.trim().parse::<u32>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(TraceFormatError::MalformedCycle(token.to_string())),
    })
}

fn find_ap<'a>(aps: &'a [AtomicProposition], name: &str, step: usize) -> Result<&'a AtomicProposition, TraceFormatError> {
    aps.iter()
        .find(|ap| ap.name == name)
        .ok_or_else(|| TraceFormatError::UnknownAp { step, name: name.to_string() })
}

/// Parses either style, chosen by the first non-blank character.
pub fn parse_trace_string(s: &str, aps: &[AtomicProposition]) -> Result<Trace, TraceFormatError> {
    match s.trim_start().chars().next() {
        Some('(') | Some('#') => parse_tuples(s, aps),
        _ => parse_semicolon(s, aps),
    }
}

pub fn parse_semicolon(s: &str, aps: &[AtomicProposition]) -> Result<Trace, TraceFormatError> {
    let mut trace = Trace::default();
    let tokens: Vec<&str> = s.trim().split(';').map(str::trim).filter(|t| !t.is_empty()).collect();
    for (n, token) in tokens.iter().enumerate() {
        if let Some(cycle) = parse_cycle(token) {
            if n + 1 != tokens.len() {
                return Err(TraceFormatError::MalformedCycle(token.to_string()));
            }
            trace.cycle = Some(cycle?);
            continue;
        }
        let step = trace.steps.len();
        let mut seen = vec![false; aps.len()];
        let mut bits = 0u64;
        if *token != "t" {
            for literal in token.split('&').map(str::trim) {
                let (positive, name) = match literal.strip_prefix('!') {
                    Some(rest) => (false, rest.trim()),
                    None => (true, literal),
                };
                if name.is_empty() || name.contains(|c: char| c.is_whitespace() || "!()|".contains(c)) {
                    return Err(TraceFormatError::MalformedLiteral { step, text: literal.to_string() });
                }
                let ap = find_ap(aps, name, step)?;
                if seen[ap.index] {
                    return Err(TraceFormatError::MalformedLiteral { step, text: literal.to_string() });
                }
                seen[ap.index] = true;
                if positive {
                    bits |= 1 << ap.index;
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(TraceFormatError::MissingAp { step, name: aps[missing].name.clone() });
        }
        trace.steps.push(TimeStep::new(Assignment::new(bits, aps.len())));
    }
    Ok(trace)
}

pub fn parse_tuples(s: &str, aps: &[AtomicProposition]) -> Result<Trace, TraceFormatError> {
    let mut trace = Trace::default();
    for (n, raw) in s.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if trace.cycle.is_some() {
            return Err(TraceFormatError::MalformedTuple { line: n + 1, text: line.to_string() });
        }
        if let Some(cycle) = parse_cycle(line) {
            trace.cycle = Some(cycle?);
            continue;
        }
        let malformed = || TraceFormatError::MalformedTuple { line: n + 1, text: line.to_string() };
        let inner = line.strip_prefix('(').and_then(|l| l.strip_suffix(')')).ok_or_else(malformed)?;
        let open = inner.find('{').ok_or_else(malformed)?;
        let close = inner.rfind('}').ok_or_else(malformed)?;
        let source = inner[..open].trim().strip_suffix(',').ok_or_else(malformed)?.trim();
        let next = inner[close + 1..].trim().strip_prefix(',').ok_or_else(malformed)?.trim();
        let source: usize = source.parse().map_err(|_| malformed())?;
        let next: usize = next.parse().map_err(|_| malformed())?;
        let step = trace.steps.len();
        let mut bits = 0u64;
        for item in inner[open + 1..close].split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let name = item
                .strip_prefix('"')
                .and_then(|i| i.strip_suffix('"'))
                .or_else(|| item.strip_prefix('\'').and_then(|i| i.strip_suffix('\'')))
                .ok_or_else(|| TraceFormatError::MalformedLiteral { step, text: item.to_string() })?;
            bits |= 1 << find_ap(aps, name, step)?.index;
        }
        trace.steps.push(TimeStep { assignment: Assignment::new(bits, aps.len()), source: Some(source), next: Some(next) });
    }
    Ok(trace)
}

pub fn format_trace(t: &Trace, aps: &[AtomicProposition], style: TraceStyle) -> Result<String, TraceFormatError> {
    let mut out = String::new();
    match style {
        TraceStyle::Semicolon => {
            let mut tokens: Vec<String> = t
                .steps
                .iter()
                .map(|s| {
                    if aps.is_empty() {
                        return "t".to_string();
                    }
                    let literals: Vec<String> = aps
                        .iter()
                        .map(|ap| {
                            let value = s.assignment.get(ap.index).unwrap_or(false);
                            format!("{}{}", if value { "" } else { "!" }, ap.name)
                        })
                        .collect();
                    literals.join("&")
                })
                .collect();
            if let Some(cycle) = t.cycle {
                tokens.push(format!("cycle{{{cycle}}}"));
            }
            out = tokens.join(";");
        }
        TraceStyle::Tuples => {
            for (i, s) in t.steps.iter().enumerate() {
                let (Some(source), Some(next)) = (s.source, s.next) else {
                    return Err(TraceFormatError::MissingStates(i));
                };
                let names: Vec<String> = s.assignment.true_indices().map(|i| format!("\"{}\"", aps[i].name)).collect();
                let _ = writeln!(out, "({source}, {{{}}}, {next})", names.join(", "));
            }
            if let Some(cycle) = t.cycle {
                let _ = writeln!(out, "cycle{{{cycle}}}");
            }
        }
    }
    Ok(out)
}
