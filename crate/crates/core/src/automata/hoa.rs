//! Reader and writer for the HOA v1 subset emitted by reactive synthesis
//! tools for deterministic controllers.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::label::{parse_label, Label, LabelError, LeafStyle};
use super::{Acceptance, ApKind, AtomicProposition, Automaton, Edge, State, MAX_APS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HoaError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: state {state} out of range (automaton has {states} states)")]
    StateOutOfRange { line: usize, state: usize, states: usize },
    #[error("line {line}: AP header declares {declared} propositions but lists {listed}")]
    ApCountMismatch { line: usize, declared: usize, listed: usize },
    #[error("missing `{0}`")]
    MissingDelimiter(&'static str),
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> HoaError {
    HoaError::Syntax { line, column, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(usize),
    Str(String),
    Word(String),
}

/// Splits a header value into integers, quoted strings and bare words,
/// returning each token with its 1-based column.
fn tokenize(value: &str, line: usize, offset: usize) -> Result<Vec<(usize, Token)>, HoaError> {
    let chars: Vec<char> = value.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = offset + i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut text = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(syntax(line, column, "unterminated string")),
                    Some('"') => break,
                    Some('\\') => {
                        let escaped = chars.get(i + 1).ok_or_else(|| syntax(line, column, "unterminated string"))?;
                        text.push(*escaped);
                        i += 2;
                    }
                    Some(other) => {
                        text.push(*other);
                        i += 1;
                    }
                }
            }
            i += 1;
            tokens.push((column, Token::Str(text)));
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '"' {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let token = if word.bytes().all(|b| b.is_ascii_digit()) {
                Token::Int(word.parse().map_err(|_| syntax(line, column, "integer overflow"))?)
            } else {
                Token::Word(word)
            };
            tokens.push((column, token));
        }
    }
    Ok(tokens)
}

fn expect_int(tokens: &[(usize, Token)], at: usize, line: usize, what: &str) -> Result<usize, HoaError> {
    match tokens.get(at) {
        Some((_, Token::Int(n))) => Ok(*n),
        Some((column, _)) => Err(syntax(line, *column, format!("expected {what}"))),
        None => Err(syntax(line, 1, format!("missing {what}"))),
    }
}

/// Parses acceptance marks such as `{0 1}` starting at `chars[i] == '{'`.
fn parse_acc_sets(text: &str, line: usize, column: usize) -> Result<Vec<u32>, HoaError> {
    let inner = text
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| syntax(line, column, "malformed acceptance set"))?;
    inner
        .split_whitespace()
        .map(|n| n.parse().map_err(|_| syntax(line, column, format!("bad acceptance mark `{n}`"))))
        .collect()
}

fn label_error(err: LabelError, line: usize, offset: usize) -> HoaError {
    match err {
        LabelError::Syntax { column, message } => syntax(line, offset + column, message),
        other => syntax(line, offset + 1, other.to_string()),
    }
}

#[derive(Default)]
struct Header {
    name: Option<String>,
    states: Option<usize>,
    start: Option<(usize, usize)>,
    aps: Option<Vec<String>>,
    acc_name: Option<String>,
    acceptance: Option<Acceptance>,
    properties: Vec<String>,
    controllable: Vec<(usize, usize)>,
    aliases: HashMap<String, Label>,
    extra: Vec<String>,
}

/// Parses one automaton in the supported HOA v1 subset.
pub fn parse_hoa(text: &str) -> Result<Automaton, HoaError> {
    let lines: Vec<&str> = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    let mut cursor = lines.iter().enumerate().skip_while(|(_, l)| l.trim().is_empty());

    match cursor.next() {
        Some((_, l)) if l.trim() == "HOA: v1" => {}
        Some((n, _)) => return Err(syntax(n + 1, 1, "expected `HOA: v1`")),
        None => return Err(HoaError::MissingDelimiter("HOA: v1")),
    }

    let mut header = Header::default();
    let mut body_start = None;
    for (n, raw) in cursor.by_ref() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "--BODY--" {
            body_start = Some(n + 1);
            break;
        }
        parse_header_line(raw, line, &mut header)?;
    }
    let body_start = body_start.ok_or(HoaError::MissingDelimiter("--BODY--"))?;

    let aps: Vec<String> = header.aps.clone().unwrap_or_default();
    let mut kinds = vec![ApKind::Input; aps.len()];
    for &(line, index) in &header.controllable {
        *kinds
            .get_mut(index)
            .ok_or_else(|| syntax(line, 1, format!("controllable AP {index} is not declared")))? = ApKind::Output;
    }
    let aps: Vec<AtomicProposition> = aps
        .into_iter()
        .enumerate()
        .map(|(index, name)| AtomicProposition { index, name, kind: kinds[index] })
        .collect();

    let mut states: Vec<Option<State>> = Vec::new();
    let mut current: Option<usize> = None;
    let mut ended = false;
    let mut edge_lines: Vec<(usize, usize)> = Vec::new();
    for (n, raw) in lines.iter().enumerate().skip(body_start) {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "--END--" {
            ended = true;
            break;
        }
        let indent = raw.len() - raw.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix("State:") {
            let offset = indent + "State:".len();
            let id = parse_state_line(rest, line, offset, &mut states)?;
            if let Some(limit) = header.states {
                if id >= limit {
                    return Err(HoaError::StateOutOfRange { line, state: id, states: limit });
                }
            }
            current = Some(id);
        } else if trimmed.starts_with('[') {
            let state = current.ok_or_else(|| syntax(line, indent + 1, "edge before any `State:` line"))?;
            let edge = parse_edge_line(trimmed, line, indent, &aps, &header.aliases)?;
            edge_lines.push((line, edge.dest));
            states[state].as_mut().unwrap().edges.push(edge);
        } else {
            return Err(syntax(line, indent + 1, "expected `State:` or a labeled edge (implicit labels are not supported)"));
        }
    }
    if !ended {
        return Err(HoaError::MissingDelimiter("--END--"));
    }

    let state_count = header.states.unwrap_or(states.len()).max(states.len());
    states.resize(state_count, None);
    for (line, dest) in edge_lines {
        if dest >= state_count {
            return Err(HoaError::StateOutOfRange { line, state: dest, states: state_count });
        }
    }
    let (start_line, start) = header.start.ok_or_else(|| syntax(1, 1, "missing `Start:` header"))?;
    if start >= state_count {
        return Err(HoaError::StateOutOfRange { line: start_line, state: start, states: state_count });
    }

    Ok(Automaton {
        name: header.name,
        start,
        aps,
        acc_name: header.acc_name,
        acceptance: header.acceptance.unwrap_or(Acceptance::All),
        properties: header.properties,
        extra_headers: header.extra,
        states: states.into_iter().map(Option::unwrap_or_default).collect(),
    })
}

fn parse_header_line(raw: &str, line: usize, header: &mut Header) -> Result<(), HoaError> {
    let indent = raw.len() - raw.trim_start().len();
    let trimmed = raw.trim();
    let Some(colon) = trimmed.find(':') else {
        return Err(syntax(line, indent + 1, "expected `name: value` header"));
    };
    let key = &trimmed[..colon];
    let value = &trimmed[colon + 1..];
    let offset = indent + colon + 1;
    let tokens = tokenize(value, line, offset)?;
    match key {
        "name" => match tokens.as_slice() {
            [(_, Token::Str(name))] => header.name = Some(name.clone()),
            _ => return Err(syntax(line, offset + 1, "expected a quoted name")),
        },
        "States" => header.states = Some(expect_int(&tokens, 0, line, "state count")?),
        "Start" => {
            if tokens.len() != 1 {
                return Err(syntax(line, offset + 1, "only a single initial state is supported"));
            }
            if header.start.is_some() {
                return Err(syntax(line, 1, "multiple initial states are not supported"));
            }
            header.start = Some((line, expect_int(&tokens, 0, line, "initial state")?));
        }
        "AP" => {
            let declared = expect_int(&tokens, 0, line, "AP count")?;
            let mut names = Vec::new();
            for (column, token) in &tokens[1..] {
                match token {
                    Token::Str(name) => names.push(name.clone()),
                    _ => return Err(syntax(line, *column, "expected a quoted AP name")),
                }
            }
            if names.len() != declared {
                return Err(HoaError::ApCountMismatch { line, declared, listed: names.len() });
            }
            if declared > MAX_APS {
                return Err(syntax(line, offset + 1, format!("at most {MAX_APS} APs are supported")));
            }
            for (i, name) in names.iter().enumerate() {
                if names[..i].contains(name) {
                    return Err(syntax(line, offset + 1, format!("duplicate AP name `{name}`")));
                }
            }
            header.aps = Some(names);
        }
        "acc-name" => header.acc_name = Some(value.trim().to_string()),
        "Acceptance" => {
            let sets = expect_int(&tokens, 0, line, "acceptance set count")?;
            let count_len = value.trim_start().find(char::is_whitespace).unwrap_or(value.trim_start().len());
            let condition = value.trim_start()[count_len..].trim().to_string();
            header.acceptance = Some(if sets == 0 && condition == "t" {
                Acceptance::All
            } else {
                Acceptance::NotTracked { sets: sets as u32, condition }
            });
        }
        "properties" => {
            for word in value.split_whitespace() {
                if !header.properties.iter().any(|p| p == word) {
                    header.properties.push(word.to_string());
                }
            }
        }
        "controllable-AP" => {
            for (column, token) in &tokens {
                match token {
                    Token::Int(i) => header.controllable.push((line, *i)),
                    _ => return Err(syntax(line, *column, "expected an AP index")),
                }
            }
        }
        "Alias" => {
            let mut parts = value.trim().splitn(2, char::is_whitespace);
            let alias = parts.next().unwrap_or_default();
            if !alias.starts_with('@') {
                return Err(syntax(line, offset + 1, "alias names start with `@`"));
            }
            let definition = parts.next().unwrap_or_default();
            let ap_names = header.aps.clone().unwrap_or_default();
            let aliases = header.aliases.clone();
            let label = parse_label(definition, &|word| resolve_leaf(word, &ap_names, &aliases))
                .map_err(|e| label_error(e, line, offset + 1 + alias.len()))?;
            header.aliases.insert(alias.to_string(), label);
            header.extra.push(trimmed.to_string());
        }
        "HOA" => return Err(syntax(line, 1, "duplicate `HOA:` header")),
        _ => header.extra.push(trimmed.to_string()),
    }
    Ok(())
}

fn resolve_leaf(word: &str, ap_names: &[String], aliases: &HashMap<String, Label>) -> Option<Label> {
    if word.starts_with('@') {
        aliases.get(word).cloned()
    } else {
        ap_names.iter().position(|n| n == word).map(Label::Ap)
    }
}

fn parse_state_line(
    rest: &str,
    line: usize,
    offset: usize,
    states: &mut Vec<Option<State>>,
) -> Result<usize, HoaError> {
    if rest.trim_start().starts_with('[') {
        return Err(syntax(line, offset + 2, "state labels are not supported"));
    }
    let tokens = tokenize(rest, line, offset)?;
    let id = expect_int(&tokens, 0, line, "state id")?;
    let mut state = State::default();
    let mut acc_text = String::new();
    for (column, token) in &tokens[1..] {
        match token {
            Token::Str(name) if state.name.is_none() && acc_text.is_empty() => state.name = Some(name.clone()),
            Token::Word(w) if w.starts_with('{') || !acc_text.is_empty() => {
                acc_text.push_str(w);
                acc_text.push(' ');
            }
            Token::Int(n) if !acc_text.is_empty() => {
                acc_text.push_str(&n.to_string());
                acc_text.push(' ');
            }
            _ => return Err(syntax(line, *column, "unexpected token in state declaration")),
        }
    }
    if !acc_text.is_empty() {
        let compact = acc_text.split_whitespace().collect::<Vec<_>>().join(" ");
        state.acc_sets = parse_acc_sets(&compact.replace("{ ", "{").replace(" }", "}"), line, offset + 1)?;
    }
    if id >= states.len() {
        states.resize(id + 1, None);
    }
    if states[id].is_some() {
        return Err(syntax(line, offset + 1, format!("state {id} declared twice")));
    }
    states[id] = Some(state);
    Ok(id)
}

fn parse_edge_line(
    trimmed: &str,
    line: usize,
    indent: usize,
    aps: &[AtomicProposition],
    aliases: &HashMap<String, Label>,
) -> Result<Edge, HoaError> {
    let close = trimmed.find(']').ok_or_else(|| syntax(line, indent + 1, "unterminated label"))?;
    let names: Vec<String> = aps.iter().map(|ap| ap.name.clone()).collect();
    let label = parse_label(&trimmed[1..close], &|word| resolve_leaf(word, &names, aliases))
        .map_err(|e| label_error(e, line, indent + 1))?;
    if let Some(max) = label.max_ap() {
        if max >= aps.len() {
            return Err(syntax(line, indent + 2, format!("label references AP {max}, but only {} are declared", aps.len())));
        }
    }
    let rest = &trimmed[close + 1..];
    let rest_offset = indent + close + 1;
    let (dest_text, acc_text) = match rest.find('{') {
        Some(brace) => (&rest[..brace], Some(&rest[brace..])),
        None => (rest, None),
    };
    if dest_text.contains('&') {
        return Err(syntax(line, rest_offset + 1, "universal branching is not supported"));
    }
    let tokens = tokenize(dest_text, line, rest_offset)?;
    if tokens.len() != 1 {
        return Err(syntax(line, rest_offset + 1, "expected exactly one destination state"));
    }
    let dest = expect_int(&tokens, 0, line, "destination state")?;
    let acc_sets = match acc_text {
        Some(text) => parse_acc_sets(text.trim(), line, rest_offset + dest_text.len() + 1)?,
        None => Vec::new(),
    };
    Ok(Edge { label, dest, acc_sets })
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn acc_suffix(sets: &[u32]) -> String {
    if sets.is_empty() {
        String::new()
    } else {
        let marks: Vec<String> = sets.iter().map(u32::to_string).collect();
        format!(" {{{}}}", marks.join(" "))
    }
}

/// Canonical rendering: one edge per line, AP-index leaves.
pub fn render_hoa(a: &Automaton) -> String {
    render_hoa_with(a, LeafStyle::Index)
}

/// Renders `a` as HOA v1 text with the chosen label leaf style. Header order
/// is fixed; output uses LF line endings and ends with a newline.
pub fn render_hoa_with(a: &Automaton, style: LeafStyle) -> String {
    let mut out = String::from("HOA: v1\n");
    if let Some(name) = &a.name {
        let _ = writeln!(out, "name: {}", quote(name));
    }
    let _ = writeln!(out, "States: {}", a.state_count());
    let _ = writeln!(out, "Start: {}", a.start);
    let _ = write!(out, "AP: {}", a.aps.len());
    for ap in &a.aps {
        let _ = write!(out, " {}", quote(&ap.name));
    }
    out.push('\n');
    if let Some(acc_name) = &a.acc_name {
        let _ = writeln!(out, "acc-name: {acc_name}");
    }
    match &a.acceptance {
        Acceptance::All => out.push_str("Acceptance: 0 t\n"),
        Acceptance::NotTracked { sets, condition } => {
            let _ = writeln!(out, "Acceptance: {sets} {condition}");
        }
    }
    if !a.properties.is_empty() {
        let _ = writeln!(out, "properties: {}", a.properties.join(" "));
    }
    let controllable: Vec<String> = a.outputs().map(|ap| ap.index.to_string()).collect();
    if !controllable.is_empty() {
        let _ = writeln!(out, "controllable-AP: {}", controllable.join(" "));
    }
    for extra in &a.extra_headers {
        out.push_str(extra);
        out.push('\n');
    }
    out.push_str("--BODY--\n");
    for (id, state) in a.states.iter().enumerate() {
        let _ = write!(out, "State: {id}");
        if let Some(name) = &state.name {
            let _ = write!(out, " {}", quote(name));
        }
        out.push_str(&acc_suffix(&state.acc_sets));
        out.push('\n');
        for edge in &state.edges {
            let _ = writeln!(out, "[{}] {}{}", edge.label.render(style, &a.aps), edge.dest, acc_suffix(&edge.acc_sets));
        }
    }
    out.push_str("--END--\n");
    out
}
