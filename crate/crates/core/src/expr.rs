//! Arithmetic expressions over chart coordinates.
//!
//! Grammar (usual precedence, `^` right-associative and binding tighter than
//! unary minus):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'pi' | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos tan exp log sqrt abs`, plus `bump(x, a, b)` (plateau
//! equal to 1 on `|x| <= a` and 0 on `|x| >= b`), `flog(t, eps)` (smoothed
//! `log|t|`) and `flogd(t, eps)` (its derivative). Parameters after the first
//! argument of the three profile functions must be constant.

use std::fmt;

use thiserror::Error;

use crate::profiles;
use crate::real::{Dual, Real};

const MAX_DEPTH: usize = 128;
const MAX_LEN: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Bump,
    Flog,
    Flogd,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "bump" => Func::Bump,
            "flog" => Func::Flog,
            "flogd" => Func::Flogd,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Bump => "bump",
            Func::Flog => "flog",
            Func::Flogd => "flogd",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Bump => 3,
            Func::Flog | Func::Flogd => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Parse `src`, resolving identifiers against `vars` (coordinate names).
    pub fn parse(src: &str, vars: &[impl AsRef<str>]) -> Result<Expr, ParseError> {
        if src.len() > MAX_LEN {
            return Err(ParseError {
                pos: 0,
                message: format!("expression longer than {MAX_LEN} bytes"),
            });
        }
        let tokens = lex(src)?;
        let names: Vec<&str> = vars.iter().map(|v| v.as_ref()).collect();
        let mut p = Parser {
            tokens,
            pos: 0,
            vars: &names,
            depth: 0,
            src_len: src.len(),
        };
        let e = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(ParseError {
                pos: t.pos,
                message: format!("unexpected {}", t.kind.describe()),
            });
        }
        Ok(e)
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) => a.is_constant(),
            Expr::Bin(_, a, b) | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
            Expr::Call(_, args) => args.iter().all(Expr::is_constant),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) => a.max_var(),
            Expr::Bin(_, a, b) | Expr::Pow(a, b) => a.max_var().max(b.max_var()),
            Expr::Call(_, args) => args.iter().filter_map(Expr::max_var).max(),
        }
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        match self {
            Expr::Num(v) => T::cst(*v),
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Pow(base, exp) => {
                let b = base.eval(x);
                if exp.is_constant() {
                    let e = exp.eval::<f64>(&[]);
                    if e.fract() == 0.0 && e.abs() <= 64.0 {
                        return b.powi(e as i32);
                    }
                    return b.powf(T::cst(e));
                }
                b.powf(exp.eval(x))
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(x);
                let param = |k: usize| args[k].eval::<f64>(&[]);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                    Func::Bump => {
                        let (v, d) = profiles::bump(a.value(), param(1), param(2));
                        a.chain(v, d)
                    }
                    Func::Flog => {
                        let (v, d) = profiles::flog(a.value(), param(1));
                        a.chain(v, d)
                    }
                    Func::Flogd => {
                        let (v, d) = profiles::flog_derivative(a.value(), param(1));
                        a.chain(v, d)
                    }
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    /// Exact gradient by forward-mode differentiation.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let seeded = Dual::seed(x);
        let d = self.eval(&seeded);
        d.d[..x.len()].to_vec()
    }

    /// Replace every `Var(i)` by `map[i]`.
    pub fn substitute(&self, map: &[Expr]) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(i) => map[*i].clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(map))),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Box::new(a.substitute(map)), Box::new(b.substitute(map)))
            }
            Expr::Pow(a, b) => Expr::Pow(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.substitute(map)).collect()),
        }
    }

    /// Render with the given coordinate names; the output parses back to an
    /// expression with identical values.
    pub fn render(&self, vars: &[impl AsRef<str>]) -> String {
        let names: Vec<&str> = vars.iter().map(|v| v.as_ref()).collect();
        let mut s = String::new();
        self.write(&mut s, &names);
        s
    }

    /// Binding strength: sums 1, products 2, negation 3, powers 4, atoms 5.
    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if v.is_sign_negative() && !v.is_nan() => 3,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
        }
    }

    /// Write `self`, parenthesized when it binds looser than `min`.
    fn write_at(&self, out: &mut String, vars: &[&str], min: u8) {
        if self.precedence() < min {
            out.push('(');
            self.write(out, vars);
            out.push(')');
        } else {
            self.write(out, vars);
        }
    }

    fn write(&self, out: &mut String, vars: &[&str]) {
        use std::fmt::Write;
        match self {
            Expr::Num(v) => {
                let mag = v.abs();
                if v.is_sign_negative() && !v.is_nan() {
                    out.push('-');
                }
                if mag.is_nan() {
                    out.push_str("(0/0)");
                } else if mag.is_infinite() {
                    out.push_str("1e999");
                } else {
                    let _ = write!(out, "{mag:?}");
                }
            }
            Expr::Var(i) => out.push_str(vars.get(*i).copied().unwrap_or("?")),
            Expr::Neg(a) => {
                out.push('-');
                a.write_at(out, vars, 3);
            }
            Expr::Bin(op, a, b) => {
                let p = self.precedence();
                a.write_at(out, vars, p);
                out.push_str(match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                });
                b.write_at(out, vars, p + 1);
            }
            Expr::Pow(a, b) => {
                a.write_at(out, vars, 5);
                out.push('^');
                b.write_at(out, vars, 3);
            }
            Expr::Call(f, args) => {
                out.push_str(f.name());
                out.push('(');
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    a.write(out, vars);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..=self.max_var().unwrap_or(0)).map(|i| format!("x{i}")).collect();
        f.write_str(&self.render(&names))
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::Bin(BinOp::Add, Box::new(self), Box::new(o))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        Expr::Bin(BinOp::Sub, Box::new(self), Box::new(o))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::Bin(BinOp::Mul, Box::new(self), Box::new(o))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier `{s}`"),
            TokKind::Plus => "`+`".into(),
            TokKind::Minus => "`-`".into(),
            TokKind::Star => "`*`".into(),
            TokKind::Slash => "`/`".into(),
            TokKind::Caret => "`^`".into(),
            TokKind::LParen => "`(`".into(),
            TokKind::RParen => "`)`".into(),
            TokKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            b'+' => TokKind::Plus,
            b'-' => TokKind::Minus,
            b'*' => {
                // `**` is accepted as a synonym for `^`.
                if bytes.get(i + 1) == Some(&b'*') {
                    i += 1;
                    TokKind::Caret
                } else {
                    TokKind::Star
                }
            }
            b'/' => TokKind::Slash,
            b'^' => TokKind::Caret,
            b'(' => TokKind::LParen,
            b')' => TokKind::RParen,
            b',' => TokKind::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError {
                    pos: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push(Token {
                    kind: TokKind::Num(v),
                    pos: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokKind::Ident(src[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    pos: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        out.push(Token { kind, pos: start });
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
    depth: usize,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let pos = self.peek().map(|t| t.pos).unwrap_or(self.src_len);
        Err(ParseError {
            pos,
            message: message.into(),
        })
    }

    fn eat(&mut self, k: &TokKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.err("expression nested too deeply");
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&TokKind::Plus) {
                BinOp::Add
            } else if self.eat(&TokKind::Minus) {
                BinOp::Sub
            } else {
                break;
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(&TokKind::Star) {
                BinOp::Mul
            } else if self.eat(&TokKind::Slash) {
                BinOp::Div
            } else {
                break;
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let e = if self.eat(&TokKind::Minus) {
            Expr::Neg(Box::new(self.unary()?))
        } else if self.eat(&TokKind::Plus) {
            self.unary()?
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(e)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(&TokKind::Caret) {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        self.pos += 1;
        match tok.kind {
            TokKind::Num(v) => Ok(Expr::Num(v)),
            TokKind::LParen => {
                let e = self.expr()?;
                if !self.eat(&TokKind::RParen) {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            TokKind::Ident(name) => {
                if self.peek().map(|t| &t.kind) == Some(&TokKind::LParen) {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ParseError {
                            pos: tok.pos,
                            message: format!("unknown function `{name}`"),
                        });
                    };
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.eat(&TokKind::Comma) {
                        args.push(self.expr()?);
                    }
                    if !self.eat(&TokKind::RParen) {
                        return self.err("expected `)` after arguments");
                    }
                    if args.len() != f.arity() {
                        return Err(ParseError {
                            pos: tok.pos,
                            message: format!(
                                "`{name}` takes {} argument(s), got {}",
                                f.arity(),
                                args.len()
                            ),
                        });
                    }
                    if args[1..].iter().any(|a| !a.is_constant()) {
                        return Err(ParseError {
                            pos: tok.pos,
                            message: format!("parameters of `{name}` must be constant"),
                        });
                    }
                    if f == Func::Bump {
                        let (a, b) = (args[1].value(&[]), args[2].value(&[]));
                        if !(a >= 0.0 && b > a && b.is_finite()) {
                            return Err(ParseError {
                                pos: tok.pos,
                                message: "bump needs 0 <= inner < outer".into(),
                            });
                        }
                    }
                    if matches!(f, Func::Flog | Func::Flogd) {
                        let eps = args[1].value(&[]);
                        if !(eps > 0.0 && eps.is_finite()) {
                            return Err(ParseError {
                                pos: tok.pos,
                                message: format!("`{name}` needs a positive collar width"),
                            });
                        }
                    }
                    return Ok(Expr::Call(f, args));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                if name == "pi" {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                Err(ParseError {
                    pos: tok.pos,
                    message: format!("unknown identifier `{name}`"),
                })
            }
            other => Err(ParseError {
                pos: tok.pos,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const V: [&str; 4] = ["t", "q", "x2", "y2"];

    fn ev(src: &str, p: &[f64]) -> f64 {
        Expr::parse(src, &V).unwrap().value(p)
    }

    #[test]
    fn precedence() {
        let p = [2.0, 3.0, 0.0, 0.0];
        assert_eq!(ev("t + q * 2", &p), 8.0);
        assert_eq!(ev("-t^2", &p), -4.0);
        assert_eq!(ev("t^q^0", &p), 2.0);
        assert_eq!(ev("2^-1", &p), 0.5);
        assert_eq!(ev("(t + q) / 5", &p), 1.0);
        assert_eq!(ev("t**2/2", &p), 2.0);
    }

    #[test]
    fn functions_and_constants() {
        let p = [0.0, 0.5, 0.0, 0.0];
        assert!((ev("cos(2*pi*q)", &p) + 1.0).abs() < 1e-15);
        assert_eq!(ev("bump(t, 0.1, 0.2)", &p), 1.0);
        assert_eq!(ev("flog(q, 0.25)", &p), 0.5f64.ln());
    }

    #[test]
    fn exact_gradient() {
        let e = Expr::parse("cos(t)*q^2", &V).unwrap();
        let g = e.gradient(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(g, vec![0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn negative_base_integer_power() {
        assert_eq!(ev("t^3", &[-2.0, 0.0, 0.0, 0.0]), -8.0);
    }

    #[test]
    fn errors_are_reported() {
        assert!(Expr::parse("t +", &V).is_err());
        assert!(Expr::parse("foo(t)", &V).is_err());
        assert!(Expr::parse("z", &V).is_err());
        assert!(Expr::parse("sin(t, q)", &V).is_err());
        assert!(Expr::parse("bump(t, q, 1)", &V).is_err());
        assert!(Expr::parse("(t", &V).is_err());
        assert!(Expr::parse("t $ q", &V).is_err());
        assert!(Expr::parse("flog(t, 0)", &V).is_err());
        let deep = "(".repeat(500) + "t" + &")".repeat(500);
        assert!(Expr::parse(&deep, &V).is_err());
    }

    #[test]
    fn render_round_trip() {
        let src = "-t^2/2 + 3*cos(2*pi*q) - (-1.5e-3)*x2*y2 + flogd(t, 0.5)";
        let e = Expr::parse(src, &V).unwrap();
        let back = Expr::parse(&e.render(&V), &V).unwrap();
        let p = [0.3, 0.7, -1.1, 2.0];
        assert_eq!(e.value(&p), back.value(&p));
    }

    #[test]
    fn render_uses_minimal_parentheses() {
        for (src, want) in [
            ("t - (q - x2)", "t - (q - x2)"),
            ("(t - q) - x2", "t - q - x2"),
            ("-(t*q)", "-(t*q)"),
            ("-t^2", "-t^2.0"),
            ("(-t)^2", "(-t)^2.0"),
            ("t^-q", "t^-q"),
            ("t/(q*x2)", "t/(q*x2)"),
        ] {
            assert_eq!(Expr::parse(src, &V).unwrap().render(&V), want);
        }
        assert_eq!(Expr::Num(f64::NEG_INFINITY).render(&V), "-1e999");
        let chain = "-".repeat(120) + "t";
        assert_eq!(Expr::parse(&chain, &V).unwrap().render(&V), chain);
    }

    #[test]
    fn substitution_composes() {
        let e = Expr::parse("t + q^2", &V).unwrap();
        let map = vec![
            Expr::parse("q", &V).unwrap(),
            Expr::parse("t + 1", &V).unwrap(),
            Expr::Var(2),
            Expr::Var(3),
        ];
        let s = e.substitute(&map);
        assert_eq!(s.value(&[2.0, 5.0, 0.0, 0.0]), 5.0 + 9.0);
    }
}
