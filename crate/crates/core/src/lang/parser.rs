//! Recursive-descent parser.
//!
//! ```text
//! program ::= item*
//! item    ::= "input" IDENT ":" shape [";"] | IDENT "=" expr [";"]
//! shape   ::= "int" | INT ".." INT | "{" INT ("," INT)* "}"
//! expr    ::= sum ["fby" expr]
//! sum     ::= prod (("+" | "-") prod)*
//! prod    ::= unary ("*" unary)*
//! unary   ::= "-" unary | atom
//! atom    ::= INT | IDENT | IDENT "(" expr ("," expr)* ")"
//!           | "wait" "(" expr ")"
//!           | "unif" "(" int "," int ")" | "unif" "(" int ".." int ")"
//!           | "unif" "{" int ("," int)* "}"
//!           | "(" expr ")" | "(" expr ("," expr)+ ")"
//! int     ::= ["-"] INT
//! ```
//!
//! `--` starts a comment running to the end of the line.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::ast::{BinOp, Def, Expr, ExprKind, InputDecl, Pos, Program, Unif};
use crate::shape::BaseShape;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("`{n}`"),
            Tok::Ident(x) => format!("`{x}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

const SYMBOLS: &[&str] = &["..", "+", "-", "*", "(", ")", ",", ";", "=", ":", "{", "}"];
const KEYWORDS: &[&str] = &["fby", "wait", "unif", "input"];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Int(text.parse().expect("digits")), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Ident(text), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                out.push((Tok::Sym(s), pos));
                i += s.len();
                col += s.len();
            }
            None => {
                return Err(SyntaxError {
                    pos,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Parses a whole program.
pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    let mut prog = Program::default();
    while p.peek() != &Tok::Eof {
        if p.eat_sym(";") {
            continue;
        }
        let pos = p.pos();
        let name = p.ident("a definition")?;
        if name == "input" {
            let pos = p.pos();
            let name = p.ident("an input name")?;
            p.expect(":")?;
            let shape = p.shape()?;
            prog.inputs.push(InputDecl { name, shape, pos });
            continue;
        }
        if KEYWORDS.contains(&name.as_str()) {
            return Err(SyntaxError {
                pos,
                message: format!("`{name}` is reserved"),
            });
        }
        p.expect("=")?;
        let expr = p.expr()?;
        prog.defs.push(Def { name, expr, pos });
    }
    Ok(prog)
}

/// Parses a single expression.
pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> SyntaxError {
        SyntaxError {
            pos: self.pos(),
            message: format!("expected {wanted}, found {}", self.peek().describe()),
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(t) if *t == s) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(x) if x == kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.at += 1;
                Ok(x)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn small_int(&mut self) -> Result<i64, SyntaxError> {
        let neg = self.eat_sym("-");
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => {
                let n = if neg { -n } else { n };
                n.to_i64().ok_or(SyntaxError {
                    pos,
                    message: "integer literal too large here".into(),
                })
            }
            _ => {
                self.at -= 1;
                Err(self.unexpected("an integer"))
            }
        }
    }

    fn int_list(&mut self, close: &str) -> Result<Vec<i64>, SyntaxError> {
        let mut vs = vec![self.small_int()?];
        while self.eat_sym(",") {
            vs.push(self.small_int()?);
        }
        self.expect(close)?;
        Ok(vs)
    }

    fn shape(&mut self) -> Result<BaseShape, SyntaxError> {
        let pos = self.pos();
        let bad = |e: crate::shape::ShapeError| SyntaxError {
            pos,
            message: e.to_string(),
        };
        if self.eat_kw("int") {
            return Ok(BaseShape::Int);
        }
        if self.eat_sym("{") {
            let vs = self.int_list("}")?;
            return BaseShape::fin_set(vs.into_iter().map(Value::int)).map_err(bad);
        }
        let lo = self.small_int()?;
        self.expect("..")?;
        let hi = self.small_int()?;
        BaseShape::int_range(lo, hi).map_err(bad)
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.sum()?;
        let pos = self.pos();
        if self.eat_kw("fby") {
            let rhs = self.expr()?;
            return Ok(Expr::new(
                ExprKind::Binary(BinOp::Fby, Box::new(lhs), Box::new(rhs)),
                pos,
            ));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.prod()?;
        loop {
            let pos = self.pos();
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.prod()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
    }

    fn prod(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let pos = self.pos();
            if !self.eat_sym("*") {
                return Ok(lhs);
            }
            let rhs = self.unary()?;
            lhs = Expr::new(ExprKind::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs)), pos);
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        let pos = self.pos();
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(e)), pos));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.at += 1;
                Ok(Expr::new(ExprKind::Int(n), pos))
            }
            Tok::Sym("(") => {
                self.at += 1;
                let first = self.expr()?;
                if self.eat_sym(")") {
                    return Ok(Expr::new(ExprKind::Paren(Box::new(first)), pos));
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect(")")?;
                Ok(Expr::new(ExprKind::Tuple(items), pos))
            }
            Tok::Ident(x) if x == "wait" => {
                self.at += 1;
                self.expect("(")?;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(Expr::new(ExprKind::Wait(Box::new(e)), pos))
            }
            Tok::Ident(x) if x == "unif" => {
                self.at += 1;
                let u = if self.eat_sym("{") {
                    Unif::Set(self.int_list("}")?)
                } else {
                    self.expect("(")?;
                    let a = self.small_int()?;
                    if self.eat_sym("..") {
                        let b = self.small_int()?;
                        self.expect(")")?;
                        if a > b {
                            return Err(SyntaxError {
                                pos,
                                message: format!("empty range {a}..{b}"),
                            });
                        }
                        Unif::Range(a, b)
                    } else {
                        self.expect(",")?;
                        let b = self.small_int()?;
                        self.expect(")")?;
                        Unif::Pair(a, b)
                    }
                };
                Ok(Expr::new(ExprKind::Unif(u), pos))
            }
            Tok::Ident(x) if KEYWORDS.contains(&x.as_str()) => Err(self.unexpected("an expression")),
            Tok::Ident(x) => {
                self.at += 1;
                if self.eat_sym("(") {
                    let mut args = vec![self.expr()?];
                    while self.eat_sym(",") {
                        args.push(self.expr()?);
                    }
                    self.expect(")")?;
                    return Ok(Expr::new(ExprKind::Call(x, args), pos));
                }
                Ok(Expr::new(ExprKind::Ident(x), pos))
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}
