//! Boolean edge labels over atomic propositions.
//!
//! Grammar (Spot style): `!` binds tighter than `&`, which binds tighter
//! than `|`. Leaves are `t`, `f`, AP indices, AP names, or `@alias`.
//! Chains of the same binary operator are flattened on construction, so a
//! label printed with minimal parentheses parses back to the same tree.

use std::fmt;

use super::{Assignment, AtomicProposition};

/// Upper bound on the number of APs for assignment enumeration.
pub const ENUMERATION_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    True,
    False,
    Ap(usize),
    Not(Box<Label>),
    And(Vec<Label>),
    Or(Vec<Label>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("label syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("AP {0} is not covered by the assignment")]
    MissingAp(usize),
    #[error("enumeration over {0} APs exceeds the limit of {ENUMERATION_LIMIT}")]
    TooManyAps(usize),
}

/// How leaves are printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeafStyle {
    /// AP indices, e.g. `!0&1`.
    #[default]
    Index,
    /// AP names where the name is a plain identifier, indices otherwise.
    Name,
}

impl Label {
    pub fn negate(inner: Label) -> Label {
        Label::Not(Box::new(inner))
    }

    /// Conjunction with nested conjunctions spliced in.
    pub fn and(parts: impl IntoIterator<Item = Label>) -> Label {
        let mut flat = Vec::new();
        for part in parts {
            match part {
                Label::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Label::True,
            1 => flat.pop().unwrap(),
            _ => Label::And(flat),
        }
    }

    /// Disjunction with nested disjunctions spliced in.
    pub fn or(parts: impl IntoIterator<Item = Label>) -> Label {
        let mut flat = Vec::new();
        for part in parts {
            match part {
                Label::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Label::False,
            1 => flat.pop().unwrap(),
            _ => Label::Or(flat),
        }
    }

    /// A literal: `Ap(index)` or its negation.
    pub fn literal(index: usize, positive: bool) -> Label {
        if positive {
            Label::Ap(index)
        } else {
            Label::negate(Label::Ap(index))
        }
    }

    /// Largest AP index referenced, if any.
    pub fn max_ap(&self) -> Option<usize> {
        match self {
            Label::True | Label::False => None,
            Label::Ap(i) => Some(*i),
            Label::Not(inner) => inner.max_ap(),
            Label::And(parts) | Label::Or(parts) => parts.iter().filter_map(Label::max_ap).max(),
        }
    }

    /// Standard Boolean semantics; fails if a leaf lies outside the assignment.
    pub fn eval(&self, assignment: Assignment) -> Result<bool, LabelError> {
        match self.max_ap() {
            Some(max) if max >= assignment.width() => Err(LabelError::MissingAp(max)),
            _ => Ok(self.holds(assignment.bits())),
        }
    }

    /// Evaluation on a raw bit vector, assuming every leaf is in range.
    pub(crate) fn holds(&self, bits: u64) -> bool {
        match self {
            Label::True => true,
            Label::False => false,
            Label::Ap(i) => bits >> i & 1 == 1,
            Label::Not(inner) => !inner.holds(bits),
            Label::And(parts) => parts.iter().all(|p| p.holds(bits)),
            Label::Or(parts) => parts.iter().any(|p| p.holds(bits)),
        }
    }

    pub fn render(&self, style: LeafStyle, aps: &[AtomicProposition]) -> String {
        let mut out = String::new();
        self.write(&mut out, style, aps, 0);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Label::Or(_) => 1,
            Label::And(_) => 2,
            _ => 3,
        }
    }

    fn write(&self, out: &mut String, style: LeafStyle, aps: &[AtomicProposition], min_prec: u8) {
        let paren = self.precedence() < min_prec;
        if paren {
            out.push('(');
        }
        match self {
            Label::True => out.push('t'),
            Label::False => out.push('f'),
            Label::Ap(i) => match (style, aps.get(*i)) {
                (LeafStyle::Name, Some(ap)) if is_plain_name(&ap.name) => out.push_str(&ap.name),
                _ => out.push_str(&i.to_string()),
            },
            Label::Not(inner) => {
                out.push('!');
                inner.write(out, style, aps, 3);
            }
            Label::And(parts) | Label::Or(parts) => {
                let (sep, prec) = if matches!(self, Label::And(_)) { ('&', 2) } else { ('|', 1) };
                for (n, part) in parts.iter().enumerate() {
                    if n > 0 {
                        out.push(sep);
                    }
                    // Same-operator children only occur unflattened when built by
                    // hand; parenthesize them so the printed tree stays faithful.
                    part.write(out, style, aps, prec + u8::from(part.precedence() == prec));
                }
            }
        }
        if paren {
            out.push(')');
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(LeafStyle::Index, &[]))
    }
}

/// Whether `name` can be printed as a bare label leaf.
pub fn is_plain_name(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    head_ok && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && name != "t" && name != "f"
}

/// Parses a label. `resolve` maps a bare identifier or `@alias` to a label.
pub fn parse_label(
    text: &str,
    resolve: &dyn Fn(&str) -> Option<Label>,
) -> Result<Label, LabelError> {
    let mut parser = Parser { src: text.as_bytes(), pos: 0, resolve };
    let label = parser.or_expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(label)
}

/// Parses a label whose leaves are indices or names from `aps`.
pub fn parse_label_with_aps(text: &str, aps: &[AtomicProposition]) -> Result<Label, LabelError> {
    parse_label(text, &|name| aps.iter().find(|ap| ap.name == name).map(|ap| Label::Ap(ap.index)))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    resolve: &'a dyn Fn(&str) -> Option<Label>,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> LabelError {
        LabelError::Syntax { column: self.pos + 1, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn or_expr(&mut self) -> Result<Label, LabelError> {
        let mut parts = vec![self.and_expr()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            parts.push(self.and_expr()?);
        }
        Ok(Label::or(parts))
    }

    fn and_expr(&mut self) -> Result<Label, LabelError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(b'&') {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(Label::and(parts))
    }

    fn unary(&mut self) -> Result<Label, LabelError> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Label::negate(self.unary()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.or_expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                digits
                    .parse()
                    .map(Label::Ap)
                    .map_err(|_| LabelError::Syntax { column: start + 1, message: "AP index overflow".into() })
            }
            Some(c) if c == b'@' || c == b'_' || c.is_ascii_alphabetic() => {
                let start = self.pos;
                self.pos += 1;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_' || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match word {
                    "t" => Ok(Label::True),
                    "f" => Ok(Label::False),
                    _ => (self.resolve)(word).ok_or(LabelError::Syntax {
                        column: start + 1,
                        message: format!("unknown atomic proposition `{word}`"),
                    }),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of label")),
        }
    }
}

/// Every assignment over `ap_count` APs satisfying `label`, in ascending
/// order of the bit vector (AP `i` is bit `i`).
pub fn satisfying_assignments(label: &Label, ap_count: usize) -> Result<Vec<Assignment>, LabelError> {
    if ap_count > ENUMERATION_LIMIT {
        return Err(LabelError::TooManyAps(ap_count));
    }
    if let Some(max) = label.max_ap() {
        if max >= ap_count {
            return Err(LabelError::MissingAp(max));
        }
    }
    Ok((0..1u64 << ap_count)
        .filter(|bits| label.holds(*bits))
        .map(|bits| Assignment::new(bits, ap_count))
        .collect())
}
