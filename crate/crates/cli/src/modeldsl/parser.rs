//! Line-oriented recursive-descent parser for `.fcm` model files.

use std::collections::HashMap;
use std::fmt;

use super::ast::{BinOp, Expr, Func};
use super::ModelDocument;

#[derive(Debug, Clone, PartialEq)]
pub enum ErrorKind {
    Syntax(String),
    InvalidNumber(String),
    UnknownIdentifier(String),
    UnknownFunction(String),
    WrongArity { function: &'static str, expected: usize, got: usize },
    ReservedName(String),
    DuplicateDefinition(String),
    DuplicateEquation(String),
    UnknownState(String),
    MissingEquation(String),
    InvalidBound { lo: f64, hi: f64 },
    DuplicateBound(String),
    NoStates,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ErrorKind::InvalidNumber(s) => write!(f, "invalid number '{s}'"),
            ErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier '{s}'"),
            ErrorKind::UnknownFunction(s) => write!(f, "unknown function '{s}'"),
            ErrorKind::WrongArity { function, expected, got } => {
                write!(f, "function '{function}' takes {expected} argument(s), got {got}")
            }
            ErrorKind::ReservedName(s) => write!(f, "'{s}' is a reserved function name"),
            ErrorKind::DuplicateDefinition(s) => write!(f, "'{s}' is already defined"),
            ErrorKind::DuplicateEquation(s) => write!(f, "duplicate equation for state '{s}'"),
            ErrorKind::UnknownState(s) => write!(f, "'{s}' is not a declared state"),
            ErrorKind::MissingEquation(s) => write!(f, "state '{s}' has no equation"),
            ErrorKind::InvalidBound { lo, hi } => write!(f, "bound requires lo < hi, got [{lo}, {hi}]"),
            ErrorKind::DuplicateBound(s) => write!(f, "duplicate bound for state '{s}'"),
            ErrorKind::NoStates => write!(f, "model declares no states"),
        }
    }
}

/// A diagnostic at a 1-based line and column (columns count characters).
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.kind)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    Prime,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Op(c) => write!(f, "'{c}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Equals => f.write_str("'='"),
            Tok::Prime => f.write_str("'''"),
        }
    }
}

fn lex(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, kind| ParseError { line: lineno, column: col, kind };
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push((Tok::Num(v), col)),
                    _ => return Err(err(col, ErrorKind::InvalidNumber(text))),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push((Tok::Op(c), col));
                i += 1;
            }
            '(' | ')' | '[' | ']' | ',' | '=' | '\'' => {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    '=' => Tok::Equals,
                    _ => Tok::Prime,
                };
                out.push((t, col));
                i += 1;
            }
            other => return Err(err(col, ErrorKind::Syntax(format!("unexpected character '{other}'")))),
        }
    }
    Ok(out)
}

/// An identifier use awaiting resolution.
struct Reference {
    name: String,
    line: usize,
    column: usize,
}

struct LineParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    end_column: usize,
    refs: Vec<Reference>,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |(_, c)| *c)
    }

    /// Column of the last consumed token, used for errors at end of line.
    fn last_column(&self) -> usize {
        self.pos.checked_sub(1).and_then(|p| self.toks.get(p)).map_or(1, |(_, c)| *c)
    }

    fn error(&self, kind: ErrorKind) -> ParseError {
        ParseError { line: self.line, column: self.column(), kind }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(ErrorKind::Syntax(format!("expected {wanted}, found {t}"))),
            None => ParseError {
                line: self.line,
                column: self.last_column(),
                kind: ErrorKind::Syntax(format!("expected {wanted} after this token, found end of line")),
            },
        }
    }

    fn expect(&mut self, tok: &Tok, wanted: &str) -> Result<(), ParseError> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn name(&mut self) -> Result<(String, usize), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let col = self.column();
                if Func::from_name(s).is_some() {
                    return Err(self.error(ErrorKind::ReservedName(s.clone())));
                }
                self.pos += 1;
                Ok((s.clone(), col))
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let negative = self.peek() == Some(&Tok::Op('-'));
        if negative {
            self.pos += 1;
        }
        match self.peek() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(if negative { -v } else { *v })
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error(ErrorKind::Syntax(format!("unexpected {t}")))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            lhs = Expr::binary(op, lhs, self.term()?);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            lhs = Expr::binary(op, lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Op('-')) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Op('^')) {
            self.pos += 1;
            return Ok(Expr::binary(BinOp::Pow, base, self.unary()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let col = self.column();
        match self.peek() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(*v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    let func = Func::from_name(name).ok_or_else(|| ParseError {
                        line: self.line,
                        column: col,
                        kind: ErrorKind::UnknownFunction(name.clone()),
                    })?;
                    self.pos += 1;
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        args.push(self.expr()?);
                        while self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                            args.push(self.expr()?);
                        }
                    }
                    self.expect(&Tok::RParen, "')' or ','")?;
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            line: self.line,
                            column: col,
                            kind: ErrorKind::WrongArity { function: func.name(), expected: func.arity(), got: args.len() },
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                if Func::from_name(name).is_some() {
                    return Err(ParseError {
                        line: self.line,
                        column: col,
                        kind: ErrorKind::Syntax(format!("function '{name}' must be called with arguments")),
                    });
                }
                self.refs.push(Reference { name: name.clone(), line: self.line, column: col });
                Ok(Expr::Var(name.clone()))
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Defined {
    State,
    Param,
    /// Let binding with its statement index.
    Let(usize),
}

/// Parses a model document. Line endings may be LF or CRLF.
pub fn parse_model(text: &str) -> Result<ModelDocument, ParseError> {
    let mut doc = ModelDocument::default();
    let mut names: HashMap<String, Defined> = HashMap::new();
    let mut state_cols: HashMap<String, (usize, usize)> = HashMap::new();
    // (statement index, references) awaiting resolution
    let mut pending: Vec<(usize, Vec<Reference>)> = Vec::new();
    let mut statement = 0usize;

    for (idx, raw) in text.split('\n').enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let toks = lex(line, lineno)?;
        let Some((Tok::Ident(keyword), _)) = toks.first() else {
            if let Some((t, col)) = toks.first() {
                return Err(ParseError {
                    line: lineno,
                    column: *col,
                    kind: ErrorKind::Syntax(format!("expected a declaration keyword, found {t}")),
                });
            }
            continue;
        };
        statement += 1;
        let mut p = LineParser { toks: &toks, pos: 1, line: lineno, end_column: line.chars().count() + 1, refs: Vec::new() };
        let define = |names: &mut HashMap<String, Defined>, name: &str, col: usize, what: Defined| {
            if names.contains_key(name) {
                return Err(ParseError { line: lineno, column: col, kind: ErrorKind::DuplicateDefinition(name.into()) });
            }
            names.insert(name.into(), what);
            Ok(())
        };
        match keyword.as_str() {
            "state" => {
                if p.peek().is_none() {
                    return Err(p.unexpected("state names"));
                }
                while p.peek().is_some() {
                    let (name, col) = p.name()?;
                    define(&mut names, &name, col, Defined::State)?;
                    state_cols.insert(name.clone(), (lineno, col));
                    doc.states.push(name);
                }
            }
            "param" => {
                let (name, col) = p.name()?;
                p.expect(&Tok::Equals, "'='")?;
                let value = p.number()?;
                p.finish()?;
                define(&mut names, &name, col, Defined::Param)?;
                doc.params.push((name, value));
            }
            "let" => {
                let (name, col) = p.name()?;
                p.expect(&Tok::Equals, "'='")?;
                let e = p.expr()?;
                p.finish()?;
                pending.push((statement, std::mem::take(&mut p.refs)));
                define(&mut names, &name, col, Defined::Let(statement))?;
                doc.lets.push((name, e));
            }
            "eq" => {
                let (name, col) = p.name()?;
                p.expect(&Tok::Prime, "''' after the state name")?;
                p.expect(&Tok::Equals, "'='")?;
                let e = p.expr()?;
                p.finish()?;
                if doc.equations.iter().any(|(n, _)| *n == name) {
                    return Err(ParseError { line: lineno, column: col, kind: ErrorKind::DuplicateEquation(name) });
                }
                pending.push((statement, std::mem::take(&mut p.refs)));
                doc.equations.push((name, e));
                // state membership is checked once all declarations are known
                p.refs.push(Reference { name: doc.equations.last().unwrap().0.clone(), line: lineno, column: col });
                pending.push((usize::MAX, std::mem::take(&mut p.refs)));
            }
            "bound" => {
                let (name, col) = p.name()?;
                p.expect(&Tok::Equals, "'='")?;
                p.expect(&Tok::LBracket, "'['")?;
                let lo_col = p.column();
                let lo = p.number()?;
                p.expect(&Tok::Comma, "','")?;
                let hi = p.number()?;
                p.expect(&Tok::RBracket, "']'")?;
                p.finish()?;
                if lo >= hi {
                    return Err(ParseError { line: lineno, column: lo_col, kind: ErrorKind::InvalidBound { lo, hi } });
                }
                if doc.bounds.iter().any(|(n, _)| *n == name) {
                    return Err(ParseError { line: lineno, column: col, kind: ErrorKind::DuplicateBound(name) });
                }
                p.refs.push(Reference { name: name.clone(), line: lineno, column: col });
                pending.push((usize::MAX, std::mem::take(&mut p.refs)));
                doc.bounds.push((name, (lo, hi)));
            }
            other => {
                return Err(ParseError {
                    line: lineno,
                    column: toks[0].1,
                    kind: ErrorKind::Syntax(format!("unknown declaration '{other}'")),
                })
            }
        }
    }

    for (at, refs) in &pending {
        for r in refs {
            let ok = match names.get(&r.name) {
                // usize::MAX marks references that must name a state
                _ if *at == usize::MAX => names.get(&r.name) == Some(&Defined::State),
                Some(Defined::State | Defined::Param) => true,
                Some(Defined::Let(defined_at)) => defined_at < at,
                None => false,
            };
            if !ok {
                let kind = if *at == usize::MAX {
                    ErrorKind::UnknownState(r.name.clone())
                } else {
                    ErrorKind::UnknownIdentifier(r.name.clone())
                };
                return Err(ParseError { line: r.line, column: r.column, kind });
            }
        }
    }
    if doc.states.is_empty() {
        return Err(ParseError { line: 1, column: 1, kind: ErrorKind::NoStates });
    }
    for s in &doc.states {
        if !doc.equations.iter().any(|(n, _)| n == s) {
            let (line, column) = state_cols[s];
            return Err(ParseError { line, column, kind: ErrorKind::MissingEquation(s.clone()) });
        }
    }
    Ok(doc)
}
