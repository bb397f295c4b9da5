//! Line-oriented filtering rule language.
//!
//! ```text
//! [<id>:] WHEN <field> <op> <literal> [AND <field> <op> <literal>]* THEN <action>
//! ```
//!
//! Fields: `category`, `location`, `value`, `zscore`, `rate`, `hour`, `gap`,
//! `cross`. Comparators: `=`, `<`, `>`, `<=`, `>=`. Actions: `transmit`,
//! `drop`, `aggregate(<n>)`, `escalate`. Numeric literals may carry a unit in
//! brackets, e.g. `value>30[degC]` or `rate>2[degC/step]`. Blank lines and
//! lines starting with `#` are ignored.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensorgen::{CategorySet, Family, SensorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Eq => lhs == rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NumericField {
    Location,
    Value,
    ZScore,
    Rate,
    Hour,
    Cross,
}

impl NumericField {
    pub fn name(self) -> &'static str {
        match self {
            NumericField::Location => "location",
            NumericField::Value => "value",
            NumericField::ZScore => "zscore",
            NumericField::Rate => "rate",
            NumericField::Hour => "hour",
            NumericField::Cross => "cross",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Condition {
    /// `category=<name>`; the name is a category or a family.
    Category { name: String, set: CategorySet },
    Numeric {
        field: NumericField,
        cmp: Comparator,
        literal: f64,
        unit: Option<String>,
    },
    /// `gap=1`: the previous reading of the stream was missing.
    Gap(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Transmit,
    Drop,
    Aggregate(u32),
    Escalate,
}

impl Action {
    pub fn transmits(self) -> bool {
        matches!(self, Action::Transmit | Action::Escalate)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Transmit => f.write_str("transmit"),
            Action::Drop => f.write_str("drop"),
            Action::Aggregate(n) => write!(f, "aggregate({n})"),
            Action::Escalate => f.write_str("escalate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub provider: String,
    pub context_hash: String,
}

/// Steps a generated rule stays valid (one day at five-minute steps).
pub const DEFAULT_TTL: u64 = 288;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub conditions: Vec<Condition>,
    pub action: Action,
    pub ttl: u64,
    pub provenance: Provenance,
}

/// Per-reading inputs a rule condition can refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features {
    pub kind: SensorKind,
    pub location: u32,
    pub value: Option<f64>,
    /// |value − μ̂| / σ̂.
    pub zscore: Option<f64>,
    /// Change per step since the stream's previous non-null value.
    pub rate: Option<f64>,
    pub hour: f64,
    pub gap: bool,
    /// Other readings at the same location and step with an elevated zscore.
    pub cross: u32,
}

impl Rule {
    pub fn categories(&self) -> CategorySet {
        self.conditions.iter().fold(CategorySet::ALL, |acc, c| match c {
            Condition::Category { set, .. } => acc.intersect(*set),
            _ => acc,
        })
    }

    pub fn specificity(&self) -> usize {
        self.conditions.len()
    }

    /// Matches `f`, counting the conditions checked.
    pub fn matches_counted(&self, f: &Features, checked: &mut u64) -> bool {
        for c in &self.conditions {
            *checked += 1;
            let ok = match c {
                Condition::Category { set, .. } => set.contains(f.kind),
                Condition::Gap(g) => f.gap == *g,
                Condition::Numeric {
                    field, cmp, literal, ..
                } => {
                    let lhs = match field {
                        NumericField::Location => Some(f64::from(f.location)),
                        NumericField::Value => f.value,
                        NumericField::ZScore => f.zscore,
                        NumericField::Rate => f.rate,
                        NumericField::Hour => Some(f.hour),
                        NumericField::Cross => Some(f64::from(f.cross)),
                    };
                    lhs.is_some_and(|v| cmp.holds(v, *literal))
                }
            };
            if !ok {
                return false;
            }
        }
        true
    }

    pub fn matches(&self, f: &Features) -> bool {
        self.matches_counted(f, &mut 0)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Category { name, .. } => write!(f, "category={name}"),
            Condition::Gap(g) => write!(f, "gap={}", u8::from(*g)),
            Condition::Numeric {
                field,
                cmp,
                literal,
                unit,
            } => {
                write!(f, "{}{}{}", field.name(), cmp.symbol(), literal)?;
                if let Some(u) = unit {
                    write!(f, "[{u}]")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: WHEN ", self.id)?;
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, " THEN {}", self.action)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("no rules in input")]
    Empty,
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unit mismatch for `{field}`: expected {expected}, found `{found}`")]
    UnitMismatch {
        field: String,
        expected: String,
        found: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    /// 1-based.
    pub line: usize,
    /// 1-based.
    pub column: usize,
    /// Byte offset into the whole input.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

/// Every error found in one input, in line order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Unit(String),
    Op(Comparator),
    LParen,
    RParen,
    Colon,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

type Spanned = (usize, Tok);

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<Spanned>, (usize, ParseErrorKind)> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(t) = lx.next()? {
            out.push(t);
        }
        Ok(out)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<Option<Spanned>, (usize, ParseErrorKind)> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else { return Ok(None) };
        let tok = match c {
            '(' => {
                self.pos += 1;
                Tok::LParen
            }
            ')' => {
                self.pos += 1;
                Tok::RParen
            }
            ':' => {
                self.pos += 1;
                Tok::Colon
            }
            '=' => {
                self.pos += 1;
                Tok::Op(Comparator::Eq)
            }
            '<' | '>' => {
                self.pos += 1;
                let eq = self.peek() == Some('=');
                if eq {
                    self.pos += 1;
                }
                Tok::Op(match (c, eq) {
                    ('<', false) => Comparator::Lt,
                    ('<', true) => Comparator::Le,
                    ('>', false) => Comparator::Gt,
                    _ => Comparator::Ge,
                })
            }
            '[' => {
                let end = self.src[start..].find(']').ok_or((
                    start,
                    ParseErrorKind::Syntax("unterminated unit, expected `]`".into()),
                ))?;
                self.pos = start + end + 1;
                Tok::Unit(self.src[start + 1..start + end].trim().to_string())
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                self.pos += 1;
                while self.peek().is_some_and(|c| {
                    c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E'
                }) {
                    // Allow a sign right after an exponent marker.
                    self.pos += 1;
                    if matches!(self.src.as_bytes().get(self.pos - 1), Some(b'e' | b'E'))
                        && matches!(self.peek(), Some('-' | '+'))
                    {
                        self.pos += 1;
                    }
                }
                let text = &self.src[start..self.pos];
                let v = text.parse::<f64>().map_err(|_| {
                    (start, ParseErrorKind::Syntax(format!("bad number `{text}`")))
                })?;
                Tok::Number(v)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            other => {
                return Err((start, ParseErrorKind::Syntax(format!("unexpected character `{other}`"))))
            }
        };
        Ok(Some((start, tok)))
    }
}

struct LineParser {
    toks: Vec<Spanned>,
    i: usize,
    end: usize,
}

type PResult<T> = Result<T, (usize, ParseErrorKind)>;

impl LineParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.i).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.i).cloned();
        self.i += 1;
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err((self.here(), ParseErrorKind::Syntax(msg.into())))
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw) => {
                self.i += 1;
                Ok(())
            }
            _ => self.syntax(format!("expected `{kw}`")),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn rule(&mut self, default_id: String) -> PResult<(Rule, Vec<(usize, usize)>)> {
        let mut id = default_id;
        if let (Some(Tok::Ident(name)), Some((_, Tok::Colon))) =
            (self.peek().cloned(), self.toks.get(self.i + 1))
        {
            id = name;
            self.i += 2;
        }
        self.keyword("WHEN")?;
        let mut conditions = Vec::new();
        let mut spans = Vec::new();
        loop {
            let at = self.here();
            let (cond, lit_at) = self.condition()?;
            conditions.push(cond);
            spans.push((at, lit_at));
            if self.at_keyword("AND") {
                self.i += 1;
                continue;
            }
            break;
        }
        self.keyword("THEN")?;
        let action = self.action()?;
        if self.peek().is_some() {
            return self.syntax("unexpected input after action");
        }
        Ok((
            Rule {
                id,
                conditions,
                action,
                ttl: DEFAULT_TTL,
                provenance: Provenance::default(),
            },
            spans,
        ))
    }

    fn condition(&mut self) -> PResult<(Condition, usize)> {
        let field_at = self.here();
        let field = match self.bump() {
            Some((_, Tok::Ident(s))) => s,
            _ => {
                self.i -= 1;
                return self.syntax("expected a field name");
            }
        };
        let cmp = match self.bump() {
            Some((_, Tok::Op(c))) => c,
            _ => {
                self.i -= 1;
                return self.syntax("expected a comparator");
            }
        };
        let lit_at = self.here();
        let numeric = |f: NumericField, p: &mut Self| -> PResult<(Condition, usize)> {
            let literal = match p.bump() {
                Some((_, Tok::Number(v))) => v,
                _ => {
                    p.i -= 1;
                    return p.syntax(format!("`{}` expects a number", f.name()));
                }
            };
            let unit = match p.peek() {
                Some(Tok::Unit(_)) => match p.bump() {
                    Some((_, Tok::Unit(u))) => Some(u),
                    _ => unreachable!(),
                },
                _ => None,
            };
            Ok((
                Condition::Numeric {
                    field: f,
                    cmp,
                    literal,
                    unit,
                },
                lit_at,
            ))
        };
        match field.as_str() {
            "category" => {
                if cmp != Comparator::Eq {
                    return Err((lit_at, ParseErrorKind::Syntax("`category` only supports `=`".into())));
                }
                let name = match self.bump() {
                    Some((_, Tok::Ident(s))) => s,
                    _ => {
                        self.i -= 1;
                        return self.syntax("`category` expects a category or family name");
                    }
                };
                let set = if let Some(k) = SensorKind::from_name(&name) {
                    CategorySet::single(k)
                } else if let Some(f) = Family::from_name(&name) {
                    CategorySet::family(f)
                } else if name == "cctv" {
                    CategorySet::family(Family::CctvMetadata)
                } else {
                    return Err((lit_at, ParseErrorKind::UnknownIdentifier(name)));
                };
                Ok((Condition::Category { name, set }, lit_at))
            }
            "gap" => {
                if cmp != Comparator::Eq {
                    return Err((lit_at, ParseErrorKind::Syntax("`gap` only supports `=`".into())));
                }
                match self.bump() {
                    Some((_, Tok::Number(v))) if v == 0.0 || v == 1.0 => {
                        Ok((Condition::Gap(v == 1.0), lit_at))
                    }
                    Some((_, Tok::Ident(s))) if s == "true" || s == "false" => {
                        Ok((Condition::Gap(s == "true"), lit_at))
                    }
                    _ => Err((lit_at, ParseErrorKind::Syntax("`gap` expects 0 or 1".into()))),
                }
            }
            "location" => {
                let (c, at) = numeric(NumericField::Location, self)?;
                if let Condition::Numeric { literal, .. } = &c {
                    if literal.fract() != 0.0 || *literal < 0.0 {
                        return Err((at, ParseErrorKind::Syntax("`location` expects a nonnegative integer".into())));
                    }
                }
                Ok((c, at))
            }
            "value" => numeric(NumericField::Value, self),
            "zscore" => numeric(NumericField::ZScore, self),
            "rate" => numeric(NumericField::Rate, self),
            "hour" => numeric(NumericField::Hour, self),
            "cross" => numeric(NumericField::Cross, self),
            _ => Err((field_at, ParseErrorKind::UnknownIdentifier(field))),
        }
    }

    fn action(&mut self) -> PResult<Action> {
        let at = self.here();
        let name = match self.bump() {
            Some((_, Tok::Ident(s))) => s,
            _ => {
                self.i -= 1;
                return self.syntax("expected an action");
            }
        };
        match name.as_str() {
            "transmit" => Ok(Action::Transmit),
            "drop" => Ok(Action::Drop),
            "escalate" => Ok(Action::Escalate),
            "aggregate" => {
                if !matches!(self.bump(), Some((_, Tok::LParen))) {
                    self.i -= 1;
                    return self.syntax("expected `(` after aggregate");
                }
                let n = match self.bump() {
                    Some((_, Tok::Number(v))) if v.fract() == 0.0 && v >= 1.0 && v <= u32::MAX as f64 => v as u32,
                    _ => {
                        self.i -= 1;
                        return self.syntax("aggregate expects a positive integer");
                    }
                };
                if !matches!(self.bump(), Some((_, Tok::RParen))) {
                    self.i -= 1;
                    return self.syntax("expected `)`");
                }
                Ok(Action::Aggregate(n))
            }
            _ => Err((at, ParseErrorKind::UnknownIdentifier(name))),
        }
    }
}

fn check_units(rule: &Rule, spans: &[(usize, usize)]) -> PResult<()> {
    let scope = rule.categories();
    for (c, (_, lit_at)) in rule.conditions.iter().zip(spans) {
        let Condition::Numeric {
            field,
            unit: Some(unit),
            ..
        } = c
        else {
            continue;
        };
        let mismatch = |expected: String| {
            Err((
                *lit_at,
                ParseErrorKind::UnitMismatch {
                    field: field.name().to_string(),
                    expected,
                    found: unit.clone(),
                },
            ))
        };
        match field {
            NumericField::Value | NumericField::Rate => {
                let suffix = if *field == NumericField::Rate { "/step" } else { "" };
                let mut units: Vec<String> =
                    scope.iter().map(|k| format!("{}{suffix}", k.unit())).collect();
                units.sort();
                units.dedup();
                if units.len() != 1 {
                    return mismatch("a single category scope to attach units to".into());
                }
                if units[0] != *unit {
                    return mismatch(format!("`{}`", units[0]));
                }
            }
            NumericField::ZScore if unit == "sigma" => {}
            NumericField::ZScore => return mismatch("`sigma` or no unit".into()),
            NumericField::Hour if unit == "h" => {}
            NumericField::Hour => return mismatch("`h` or no unit".into()),
            NumericField::Location | NumericField::Cross => return mismatch("no unit".into()),
        }
    }
    Ok(())
}

/// Parses all rule lines, ids default to `<source>-<line>`.
pub fn parse_rules_from(text: &str, source: &str) -> Result<Vec<Rule>, ParseErrors> {
    let mut rules = Vec::new();
    let mut errors = Vec::new();
    let mut offset = 0;
    for (lineno, line) in text.split_inclusive('\n').enumerate() {
        let line_start = offset;
        offset += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        let trimmed = body.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let to_error = |(at, kind): (usize, ParseErrorKind)| ParseError {
            line: lineno + 1,
            column: body[..at.min(body.len())].chars().count() + 1,
            offset: line_start + at,
            kind,
        };
        let toks = match Lexer::tokens(body) {
            Ok(t) => t,
            Err(e) => {
                errors.push(to_error(e));
                continue;
            }
        };
        let mut p = LineParser {
            toks,
            i: 0,
            end: body.len(),
        };
        match p.rule(format!("{source}-{}", lineno + 1)) {
            Ok((rule, spans)) => match check_units(&rule, &spans) {
                Ok(()) => rules.push(rule),
                Err(e) => errors.push(to_error(e)),
            },
            Err(e) => errors.push(to_error(e)),
        }
    }
    if !errors.is_empty() {
        return Err(ParseErrors(errors));
    }
    if rules.is_empty() {
        return Err(ParseErrors(vec![ParseError {
            line: 1,
            column: 1,
            offset: 0,
            kind: ParseErrorKind::Empty,
        }]));
    }
    Ok(rules)
}

pub fn parse_rules(text: &str) -> Result<Vec<Rule>, ParseErrors> {
    parse_rules_from(text, "rule")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(kind: SensorKind, value: f64, z: f64) -> Features {
        Features {
            kind,
            location: 0,
            value: Some(value),
            zscore: Some(z),
            rate: Some(0.0),
            hour: 12.0,
            gap: false,
            cross: 0,
        }
    }

    #[test]
    fn grammar_exemplar() {
        let rules = parse_rules("WHEN category=traffic AND zscore>4.0 THEN transmit").unwrap();
        assert_eq!(rules.len(), 1);
        let r = &rules[0];
        assert_eq!(r.action, Action::Transmit);
        assert_eq!(r.categories(), CategorySet::family(Family::Traffic));
        assert_eq!(
            r.conditions[1],
            Condition::Numeric {
                field: NumericField::ZScore,
                cmp: Comparator::Gt,
                literal: 4.0,
                unit: None
            }
        );
        assert!(r.matches(&features(SensorKind::VehicleCount, 10.0, 4.5)));
        assert!(!r.matches(&features(SensorKind::VehicleCount, 10.0, 4.0)));
        assert!(!r.matches(&features(SensorKind::Temperature, 10.0, 9.0)));
    }

    #[test]
    fn empty_input_is_error_at_zero() {
        let e = parse_rules("").unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].offset, 0);
        assert_eq!(e.0[0].kind, ParseErrorKind::Empty);
        assert!(parse_rules("# only a comment\n\n").is_err());
    }

    #[test]
    fn unknown_field_is_named() {
        let e = parse_rules("WHEN velocity>3 THEN transmit").unwrap_err();
        assert_eq!(e.0[0].kind, ParseErrorKind::UnknownIdentifier("velocity".into()));
        assert_eq!((e.0[0].line, e.0[0].column), (1, 6));
    }

    #[test]
    fn unknown_category_and_action() {
        let e = parse_rules("WHEN category=lava THEN drop").unwrap_err();
        assert_eq!(e.0[0].kind, ParseErrorKind::UnknownIdentifier("lava".into()));
        let e = parse_rules("WHEN value>1 THEN explode").unwrap_err();
        assert_eq!(e.0[0].kind, ParseErrorKind::UnknownIdentifier("explode".into()));
    }

    #[test]
    fn units_are_checked() {
        parse_rules("WHEN category=temperature AND value>30[degC] THEN transmit").unwrap();
        parse_rules("WHEN category=temperature AND rate>2[degC/step] THEN transmit").unwrap();
        let e = parse_rules("WHEN category=temperature AND value>30[bar] THEN transmit").unwrap_err();
        assert!(matches!(e.0[0].kind, ParseErrorKind::UnitMismatch { .. }));
        let e = parse_rules("WHEN zscore>3[degC] THEN transmit").unwrap_err();
        assert!(matches!(e.0[0].kind, ParseErrorKind::UnitMismatch { .. }));
        let e = parse_rules("WHEN category=environmental AND value>3[degC] THEN transmit").unwrap_err();
        assert!(matches!(e.0[0].kind, ParseErrorKind::UnitMismatch { .. }));
    }

    #[test]
    fn errors_are_itemized_with_positions() {
        let text = "WHEN value>1 THEN transmit\nWHEN value THEN drop\n# ok\nWHEN hour>=3 THEN aggregate(0)\n";
        let e = parse_rules(text).unwrap_err();
        assert_eq!(e.0.len(), 2);
        assert_eq!(e.0[0].line, 2);
        assert_eq!(e.0[0].column, 12);
        assert_eq!(e.0[1].line, 4);
        assert_eq!(&text[e.0[0].offset..e.0[0].offset + 4], "THEN");
    }

    #[test]
    fn labels_actions_and_display_round_trip() {
        let text = "floor: WHEN category=emergency_alert THEN transmit\n\
                    agg: WHEN category=humidity AND zscore<1 AND gap=0 THEN aggregate(8)\n\
                    WHEN location>=3 AND hour<6.5[h] AND cross>=2 THEN escalate\n";
        let rules = parse_rules_from(text, "x").unwrap();
        assert_eq!(rules[0].id, "floor");
        assert_eq!(rules[1].action, Action::Aggregate(8));
        assert_eq!(rules[2].id, "x-3");
        let rendered: String = rules.iter().map(|r| format!("{r}\n")).collect();
        let again = parse_rules_from(&rendered, "x").unwrap();
        assert_eq!(rules, again);
    }

    #[test]
    fn negative_and_exponent_literals() {
        let r = parse_rules("WHEN category=temperature AND value<-2.5 AND rate>1e-3 THEN transmit").unwrap();
        let lits: Vec<f64> = r[0].conditions.iter().filter_map(|c| match c {
            Condition::Numeric { literal, .. } => Some(*literal),
            _ => None,
        }).collect();
        assert_eq!(lits, vec![-2.5, 1e-3]);
    }

    #[test]
    fn null_value_never_matches_numeric() {
        let r = &parse_rules("WHEN value<100 THEN transmit").unwrap()[0];
        let mut f = features(SensorKind::Temperature, 1.0, 0.0);
        f.value = None;
        assert!(!r.matches(&f));
    }
}
