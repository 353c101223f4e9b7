//! Arithmetic expressions over state variables and coefficient symbols.
//!
//! Precedence from loosest to tightest: `+ -`, `* /`, unary `-`, `^`.
//! Binary operators associate left except `^`, which associates right.
//! A unary minus applied directly to a numeric literal folds into a
//! negative constant.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VariableMeta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const UNARY_PREC: u8 = 3;
const ATOM_PREC: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Exp,
    Log,
    Log2,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Abs,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Exp,
        Func::Log,
        Func::Log2,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Abs,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Log2 => "log2",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn apply(self, args: &[f64]) -> Result<f64> {
        let x = args[0];
        let domain = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::NonEvaluableExpression(format!("{what}({x})")))
            }
        };
        Ok(match self {
            Func::Exp => x.exp(),
            Func::Log => {
                domain(x > 0.0, "log")?;
                x.ln()
            }
            Func::Log2 => {
                domain(x > 0.0, "log2")?;
                x.log2()
            }
            Func::Sqrt => {
                domain(x >= 0.0, "sqrt")?;
                x.sqrt()
            }
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Abs => x.abs(),
            Func::Min => x.min(args[1]),
            Func::Max => x.max(args[1]),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "=")]
    Eq,
}

/// Relative tolerance of the `=` comparator.
pub const EQ_REL_TOL: f64 = 1e-9;

pub fn approx_eq(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= EQ_REL_TOL * a.abs().max(b.abs())
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Eq => "=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<=" => Comparator::Le,
            ">=" => Comparator::Ge,
            "<" => Comparator::Lt,
            ">" => Comparator::Gt,
            "=" => Comparator::Eq,
            _ => return None,
        })
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Le => lhs <= rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Eq => approx_eq(lhs, rhs),
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// A name not yet resolved to a variable or coefficient.
    Ident(String),
    /// A state variable resolved to its column.
    Var {
        name: String,
        index: usize,
    },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if v.is_sign_negative() => UNARY_PREC,
            Expr::Neg(_) => UNARY_PREC,
            Expr::Binary(op, ..) => op.precedence(),
            _ => ATOM_PREC,
        }
    }

    pub fn eval(&self, state: &[f64]) -> Result<f64> {
        let value = match self {
            Expr::Num(v) => *v,
            Expr::Ident(name) => {
                return Err(Error::NonEvaluableExpression(format!(
                    "unbound name `{name}`"
                )))
            }
            Expr::Var { index, name } => *state.get(*index).ok_or_else(|| {
                Error::NonEvaluableExpression(format!("state has no column for `{name}`"))
            })?,
            Expr::Neg(e) => -e.eval(state)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval(state)?;
                let b = r.eval(state)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::NonEvaluableExpression(format!("{a} / 0")));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, args) => {
                let vals = args
                    .iter()
                    .map(|a| a.eval(state))
                    .collect::<Result<Vec<f64>>>()?;
                func.apply(&vals)?
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonEvaluableExpression(format!(
                "{self} is not finite"
            )))
        }
    }

    /// Names that are neither resolved variables nor constants.
    pub fn identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Ident(n) = e {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Column indices of resolved variables.
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var { index, .. } = e {
                out.insert(*index);
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(e) => e.visit(f),
            Expr::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }

    /// Replaces identifiers: coefficients first, then variables by name or
    /// positional `x_<i>`. Categorical variables cannot appear in arithmetic.
    pub fn bind(
        &self,
        variables: &[VariableMeta],
        coefficient: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<Expr> {
        Ok(match self {
            Expr::Ident(name) => {
                if let Some(v) = coefficient(name) {
                    Expr::Num(v)
                } else {
                    let index = resolve_variable(variables, name).ok_or_else(|| {
                        Error::InvalidPredicate(format!("unknown identifier `{name}`"))
                    })?;
                    let var = &variables[index];
                    if var.is_categorical() {
                        return Err(Error::InvalidPredicate(format!(
                            "categorical variable `{}` used in arithmetic",
                            var.name
                        )));
                    }
                    Expr::Var {
                        name: var.name.clone(),
                        index,
                    }
                }
            }
            Expr::Num(_) | Expr::Var { .. } => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.bind(variables, coefficient)?)),
            Expr::Binary(op, l, r) => Expr::binary(
                *op,
                l.bind(variables, coefficient)?,
                r.bind(variables, coefficient)?,
            ),
            Expr::Call(func, args) => Expr::Call(
                *func,
                args.iter()
                    .map(|a| a.bind(variables, coefficient))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    /// Substitutes only the given names, leaving other identifiers alone.
    pub fn substitute(&self, value: &dyn Fn(&str) -> Option<f64>) -> Expr {
        match self {
            Expr::Ident(name) => value(name).map_or_else(|| self.clone(), Expr::Num),
            Expr::Num(_) | Expr::Var { .. } => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(value))),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.substitute(value), r.substitute(value)),
            Expr::Call(func, args) => {
                Expr::Call(*func, args.iter().map(|a| a.substitute(value)).collect())
            }
        }
    }

    /// Number of occurrences of an identifier.
    pub fn occurrences(&self, name: &str) -> usize {
        let mut n = 0;
        self.visit(&mut |e| {
            if matches!(e, Expr::Ident(m) if m == name) {
                n += 1;
            }
        });
        n
    }

    /// If `name` occurs exactly once and only under `+`, `-` and unary
    /// negation from the root, returns its sign (+1 or -1).
    pub fn additive_sign_of(&self, name: &str) -> Option<f64> {
        if self.occurrences(name) != 1 {
            return None;
        }
        fn walk(e: &Expr, name: &str, sign: f64) -> Option<f64> {
            match e {
                Expr::Ident(n) if n == name => Some(sign),
                Expr::Neg(inner) => walk(inner, name, -sign),
                Expr::Binary(BinOp::Add, l, r) => {
                    walk(l, name, sign).or_else(|| walk(r, name, sign))
                }
                Expr::Binary(BinOp::Sub, l, r) => {
                    walk(l, name, sign).or_else(|| walk(r, name, -sign))
                }
                _ => None,
            }
        }
        walk(self, name, 1.0)
    }
}

pub fn resolve_variable(variables: &[VariableMeta], name: &str) -> Option<usize> {
    if let Some(i) = variables.iter().position(|v| v.name == name) {
        return Some(i);
    }
    let i: usize = name.strip_prefix("x_")?.parse().ok()?;
    (i < variables.len()).then_some(i)
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Ident(n) | Expr::Var { name: n, .. } => f.write_str(n),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_operand(
                    f,
                    e,
                    e.precedence() < UNARY_PREC || matches!(**e, Expr::Num(_)),
                )
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let (left_parens, right_parens) = if *op == BinOp::Pow {
                    (l.precedence() <= p, r.precedence() < UNARY_PREC)
                } else {
                    (l.precedence() < p, r.precedence() <= p)
                };
                write_operand(f, l, left_parens)?;
                if *op == BinOp::Pow {
                    f.write_str("^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                write_operand(f, r, right_parens)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    Cmp(Comparator),
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Scans a decimal literal with optional exponent; returns its byte length.
pub(crate) fn scan_number(s: &str) -> Option<usize> {
    let b = s.as_bytes();
    let mut i = 0;
    let digits = |i: &mut usize| {
        let start = *i;
        while *i < b.len() && b[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - start
    };
    let int = digits(&mut i);
    let mut frac = 0;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        frac = digits(&mut i);
    }
    if int + frac == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if digits(&mut j) > 0 {
            i = j;
        }
    }
    Some(i)
}

/// Parses a plain decimal number (optional sign, optional exponent).
pub fn parse_number(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    match scan_number(body) {
        Some(n) if n == body.len() => s.parse::<f64>().ok().filter(|v| v.is_finite()),
        _ => None,
    }
}

pub(crate) fn tokenize(text: &str, line: usize, col_offset: usize) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some(&(i, c)) = iter.peek() {
        let column = col_offset + text[..i].chars().count() + 1;
        if c.is_whitespace() {
            iter.next();
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let len = scan_number(&text[i..])
                .ok_or_else(|| Error::parse(line, column, "malformed number"))?;
            let value: f64 = text[i..i + len]
                .parse()
                .map_err(|_| Error::parse(line, column, "malformed number"))?;
            if !value.is_finite() {
                return Err(Error::parse(line, column, "number out of range"));
            }
            out.push(Token {
                tok: Tok::Num(value),
                column,
            });
            while iter.peek().is_some_and(|(j, _)| *j < i + len) {
                iter.next();
            }
            continue;
        }
        if is_ident_start(c) {
            let mut end = i;
            while let Some(&(j, ch)) = iter.peek() {
                if is_ident_char(ch) {
                    end = j + ch.len_utf8();
                    iter.next();
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(text[i..end].to_string()),
                column,
            });
            continue;
        }
        iter.next();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '<' | '>' => {
                if iter.peek().is_some_and(|(_, n)| *n == '=') {
                    iter.next();
                    Tok::Cmp(if c == '<' {
                        Comparator::Le
                    } else {
                        Comparator::Ge
                    })
                } else {
                    Tok::Cmp(if c == '<' {
                        Comparator::Lt
                    } else {
                        Comparator::Gt
                    })
                }
            }
            '=' => {
                if iter.peek().is_some_and(|(_, n)| *n == '=') {
                    iter.next();
                }
                Tok::Cmp(Comparator::Eq)
            }
            other => {
                return Err(Error::parse(
                    line,
                    column,
                    format!("unexpected character `{other}`"),
                ))
            }
        };
        out.push(Token { tok, column });
    }
    Ok(out)
}

pub(crate) struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
    end_column: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(tokens: &'a [Token], line: usize, end_column: usize) -> Self {
        Parser {
            tokens,
            pos: 0,
            line,
            end_column,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.end_column, |t| t.column)
    }

    fn error(&self, reason: impl Into<String>) -> Error {
        Error::parse(self.line, self.column(), reason)
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub(crate) fn comparator(&mut self) -> Result<Comparator> {
        match self.peek() {
            Some(Tok::Cmp(c)) => {
                let c = *c;
                self.pos += 1;
                Ok(c)
            }
            _ => Err(self.error("expected comparator (<=, >=, <, >, =)")),
        }
    }

    pub(crate) fn expect_end(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    pub(crate) fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            let operand = self.unary()?;
            return Ok(match operand {
                Expr::Num(v) if !v.is_sign_negative() && self.last_was_literal() => Expr::Num(-v),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn last_was_literal(&self) -> bool {
        matches!(
            self.tokens.get(self.pos.wrapping_sub(1)).map(|t| &t.tok),
            Some(Tok::Num(_))
        )
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(Tok::LParen) = self.peek() {
                    let func = Func::from_name(&name).ok_or_else(|| {
                        Error::parse(
                            self.line,
                            self.tokens[self.pos - 1].column,
                            format!("unknown function `{name}`"),
                        )
                    })?;
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while let Some(Tok::Comma) = self.peek() {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.close_paren()?;
                    if args.len() != func.arity() {
                        return Err(self.error(format!(
                            "`{}` takes {} argument(s), got {}",
                            func.name(),
                            func.arity(),
                            args.len()
                        )));
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            Some(_) => Err(self.error("expected a number, name or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn close_paren(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error("expected `)`")),
        }
    }
}

/// Parses an arithmetic expression. Names stay unresolved until [`Expr::bind`].
pub fn parse_expression(text: &str) -> Result<Expr> {
    let tokens = tokenize(text, 1, 0)?;
    let mut parser = Parser::new(&tokens, 1, text.chars().count() + 1);
    let e = parser.expr()?;
    parser.expect_end()?;
    Ok(e)
}

/// Parses `lhs CMP rhs`.
pub fn parse_comparison(text: &str) -> Result<(Expr, Comparator, Expr)> {
    parse_comparison_at(text, 1, 0)
}

pub(crate) fn parse_comparison_at(
    text: &str,
    line: usize,
    col_offset: usize,
) -> Result<(Expr, Comparator, Expr)> {
    let tokens = tokenize(text, line, col_offset)?;
    let mut parser = Parser::new(&tokens, line, col_offset + text.chars().count() + 1);
    let lhs = parser.expr()?;
    let cmp = parser.comparator()?;
    let rhs = parser.expr()?;
    parser.expect_end()?;
    Ok((lhs, cmp, rhs))
}
