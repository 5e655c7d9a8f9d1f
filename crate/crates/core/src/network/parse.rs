//! Line-oriented text format for reaction networks.
//!
//! ```text
//! # comment
//! param k1=0.5
//! species S1 discrete init=1
//! species S3 continuous init=1000
//! reaction r3: S1 -> S1 + 5 S3 rate=k1 group=jump
//! reaction r5: S4 -> 0 rate=0.01
//! ```

use std::collections::HashMap;
use std::fmt;

use super::{GroupHint, NetworkError, Rate, Reaction, ReactionNetwork, Species, SpeciesKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Arrow,
    Plus,
    Colon,
    Eq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "'{s}'"),
            Tok::Arrow => f.write_str("'->'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Colon => f.write_str("':'"),
            Tok::Eq => f.write_str("'='"),
        }
    }
}

struct Lexed {
    toks: Vec<(Tok, usize)>,
    /// Column just past the last character, for end-of-line errors.
    end: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(line_no: usize, text: &str) -> Result<Lexed, NetworkError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push((Tok::Arrow, col));
            i += 2;
            continue;
        }
        match c {
            '+' => {
                toks.push((Tok::Plus, col));
                i += 1;
            }
            ':' => {
                toks.push((Tok::Colon, col));
                i += 1;
            }
            '=' => {
                toks.push((Tok::Eq, col));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let start = i;
                if c == '-' {
                    i += 1;
                }
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // Exponent only if digits follow, so "2e" stays "2" + ident "e".
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let s: String = chars[start..i].iter().collect();
                if s == "-" {
                    return Err(syntax(line_no, col, "unexpected '-'"));
                }
                toks.push((Tok::Number(s), col));
            }
            other => return Err(syntax(line_no, col, format!("unexpected character '{other}'"))),
        }
    }
    Ok(Lexed {
        toks,
        end: chars.len() + 1,
    })
}

struct Cursor<'a> {
    line: usize,
    lexed: &'a Lexed,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.lexed.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.lexed.toks.get(self.pos).map_or(self.lexed.end, |&(_, c)| c)
    }

    fn err(&self, message: impl Into<String>) -> NetworkError {
        syntax(self.line, self.col(), message)
    }

    fn next(&mut self, expected: &str) -> Result<&'a Tok, NetworkError> {
        match self.lexed.toks.get(self.pos) {
            Some((t, _)) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(self.err(format!("expected {expected}, found end of line"))),
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, NetworkError> {
        let col = self.col();
        match self.next(expected)? {
            Tok::Ident(s) => Ok(s.clone()),
            t => Err(syntax(self.line, col, format!("expected {expected}, found {t}"))),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), NetworkError> {
        let col = self.col();
        let found = self.next(&tok.to_string())?;
        if *found == tok {
            Ok(())
        } else {
            Err(syntax(self.line, col, format!("expected {tok}, found {found}")))
        }
    }

    fn number(&mut self, expected: &str) -> Result<f64, NetworkError> {
        let col = self.col();
        match self.next(expected)? {
            Tok::Number(s) => {
                parse_float(s).ok_or_else(|| syntax(self.line, col, format!("invalid number '{s}'")))
            }
            t => Err(syntax(self.line, col, format!("expected {expected}, found {t}"))),
        }
    }

    /// `key=` prefix.
    fn key(&mut self, key: &str) -> Result<(), NetworkError> {
        let col = self.col();
        let name = self.ident(&format!("'{key}='"))?;
        if name != key {
            return Err(syntax(
                self.line,
                col,
                format!("expected '{key}=', found '{name}'"),
            ));
        }
        self.expect(Tok::Eq)
    }

    fn finish(&self) -> Result<(), NetworkError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(format!("unexpected {t}"))),
        }
    }
}

fn parse_float(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

enum RateSrc {
    Value(f64),
    Param(String),
}

struct RawReaction {
    line: usize,
    id: String,
    reactants: Vec<(String, u32)>,
    products: Vec<(String, u32)>,
    rate: RateSrc,
    group: GroupHint,
}

/// One side of a reaction: `0` or `[n ]name {+ [n ]name}`.
fn parse_side(cur: &mut Cursor<'_>) -> Result<Vec<(String, u32)>, NetworkError> {
    if let Some(Tok::Number(n)) = cur.peek() {
        if n == "0" {
            cur.pos += 1;
            return Ok(Vec::new());
        }
    }
    let mut terms: Vec<(String, u32)> = Vec::new();
    loop {
        let coeff = match cur.peek() {
            Some(Tok::Number(n)) => {
                let col = cur.col();
                cur.pos += 1;
                match n.parse::<u32>() {
                    Ok(c) if c > 0 => c,
                    _ => {
                        return Err(syntax(
                            cur.line,
                            col,
                            format!("stoichiometric coefficient must be a positive integer, found '{n}'"),
                        ))
                    }
                }
            }
            _ => 1,
        };
        let name = cur.ident("species name")?;
        match terms.iter_mut().find(|(s, _)| *s == name) {
            Some(t) => t.1 += coeff,
            None => terms.push((name, coeff)),
        }
        if cur.peek() == Some(&Tok::Plus) {
            cur.pos += 1;
        } else {
            return Ok(terms);
        }
    }
}

fn parse_reaction(cur: &mut Cursor<'_>) -> Result<RawReaction, NetworkError> {
    let id = cur.ident("reaction id")?;
    cur.expect(Tok::Colon)?;
    let reactants = parse_side(cur)?;
    cur.expect(Tok::Arrow)?;
    let products = parse_side(cur)?;
    cur.key("rate")?;
    let col = cur.col();
    let rate = match cur.next("rate value or parameter name")? {
        Tok::Number(s) => RateSrc::Value(
            parse_float(s).ok_or_else(|| syntax(cur.line, col, format!("invalid number '{s}'")))?,
        ),
        Tok::Ident(s) => RateSrc::Param(s.clone()),
        t => return Err(syntax(cur.line, col, format!("expected rate, found {t}"))),
    };
    let mut group = GroupHint::Auto;
    if cur.peek().is_some() {
        cur.key("group")?;
        let col = cur.col();
        group = match cur.ident("group")?.as_str() {
            "auto" => GroupHint::Auto,
            "diffusion" => GroupHint::Diffusion,
            "jump" => GroupHint::Jump,
            other => {
                return Err(syntax(
                    cur.line,
                    col,
                    format!("group must be auto, diffusion or jump, found '{other}'"),
                ))
            }
        };
    }
    cur.finish()?;
    Ok(RawReaction {
        line: cur.line,
        id,
        reactants,
        products,
        rate,
        group,
    })
}

fn at_line(line: usize, e: NetworkError) -> NetworkError {
    NetworkError::AtLine {
        line,
        source: Box::new(e),
    }
}

/// Parses and validates a network description. Rate parameters are
/// substituted into the reactions; declarations may appear in any order.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, NetworkError> {
    let mut params: Vec<(String, f64)> = Vec::new();
    let mut species: Vec<Species> = Vec::new();
    let mut raw: Vec<RawReaction> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let lexed = lex(line_no, line)?;
        let mut cur = Cursor {
            line: line_no,
            lexed: &lexed,
            pos: 0,
        };
        let Some(first) = cur.peek() else { continue };
        let keyword = match first {
            Tok::Ident(k) => k.clone(),
            t => return Err(cur.err(format!("expected a declaration, found {t}"))),
        };
        let kw_col = cur.col();
        cur.pos += 1;
        match keyword.as_str() {
            "param" => {
                let name = cur.ident("parameter name")?;
                cur.expect(Tok::Eq)?;
                let value = cur.number("parameter value")?;
                cur.finish()?;
                params.push((name, value));
            }
            "species" => {
                let name = cur.ident("species name")?;
                let col = cur.col();
                let kind = match cur.ident("'discrete' or 'continuous'")?.as_str() {
                    "discrete" => SpeciesKind::Discrete,
                    "continuous" => SpeciesKind::Continuous,
                    other => {
                        return Err(syntax(
                            line_no,
                            col,
                            format!("expected 'discrete' or 'continuous', found '{other}'"),
                        ))
                    }
                };
                cur.key("init")?;
                let init = cur.number("initial value")?;
                cur.finish()?;
                if species.iter().any(|s| s.name == name) {
                    return Err(at_line(line_no, NetworkError::DuplicateSpecies(name)));
                }
                if init < 0.0 {
                    let e = NetworkError::Negative {
                        what: "init",
                        name,
                        value: init,
                    };
                    return Err(at_line(line_no, e));
                }
                if kind == SpeciesKind::Discrete && init.fract() != 0.0 {
                    let e = NetworkError::NonIntegerInit { name, value: init };
                    return Err(at_line(line_no, e));
                }
                species.push(Species { name, kind, init });
            }
            "reaction" => {
                let r = parse_reaction(&mut cur)?;
                if raw.iter().any(|q| q.id == r.id) {
                    return Err(at_line(line_no, NetworkError::DuplicateReaction(r.id)));
                }
                raw.push(r);
            }
            other => return Err(syntax(line_no, kw_col, format!("unknown declaration '{other}'"))),
        }
    }

    let param_map: HashMap<&str, f64> = params.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let index: HashMap<&str, usize> = species
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    let resolve = |line: usize, side: &[(String, u32)]| -> Result<Vec<(usize, u32)>, NetworkError> {
        side.iter()
            .map(|(name, c)| {
                index
                    .get(name.as_str())
                    .map(|&i| (i, *c))
                    .ok_or_else(|| at_line(line, NetworkError::UndeclaredSpecies { name: name.clone() }))
            })
            .collect()
    };

    let mut reactions = Vec::with_capacity(raw.len());
    for r in &raw {
        let rate = match &r.rate {
            RateSrc::Value(v) => Rate::literal(*v),
            RateSrc::Param(p) => Rate {
                value: *param_map
                    .get(p.as_str())
                    .ok_or_else(|| at_line(r.line, NetworkError::UnknownParam { name: p.clone() }))?,
                param: Some(p.clone()),
            },
        };
        if rate.value < 0.0 {
            let e = NetworkError::Negative {
                what: "rate",
                name: r.id.clone(),
                value: rate.value,
            };
            return Err(at_line(r.line, e));
        }
        reactions.push(Reaction {
            id: r.id.clone(),
            reactants: resolve(r.line, &r.reactants)?,
            products: resolve(r.line, &r.products)?,
            rate,
            group: r.group,
        });
    }

    ReactionNetwork::new(species, reactions, params)
}

fn write_side(f: &mut fmt::Formatter<'_>, net: &ReactionNetwork, side: &[(usize, u32)]) -> fmt::Result {
    if side.is_empty() {
        return f.write_str("0");
    }
    for (i, &(s, c)) in side.iter().enumerate() {
        if i > 0 {
            f.write_str(" + ")?;
        }
        if c != 1 {
            write!(f, "{c} ")?;
        }
        f.write_str(&net.species()[s].name)?;
    }
    Ok(())
}

impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in self.params() {
            writeln!(f, "param {name}={value:?}")?;
        }
        for sp in self.species() {
            writeln!(f, "species {} {} init={:?}", sp.name, sp.kind, sp.init)?;
        }
        for r in self.reactions() {
            write!(f, "reaction {}: ", r.id)?;
            write_side(f, self, &r.reactants)?;
            f.write_str(" -> ")?;
            write_side(f, self, &r.products)?;
            match &r.rate.param {
                Some(p) => write!(f, " rate={p}")?,
                None => write!(f, " rate={:?}", r.rate.value)?,
            }
            if r.group != GroupHint::Auto {
                write!(f, " group={}", r.group)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
