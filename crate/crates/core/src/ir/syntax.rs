//! Text form of terms.
//!
//! ```text
//! term  ::= par (";" par)*                 sequential, loosest
//! par   ::= atom ("*" atom)*                parallel
//! atom  ::= "(" term ")"
//!         | "id" ["(" wires ")"]
//!         | "const(" value ":" base ")"
//!         | "sym(" wires "|" wires ")"
//!         | ("copy" | "discard" | "fby" | "wait" | "register") "(" wire ")"
//!         | "fbk(" wires "|" term ")"
//!         | "delay(" term ")"
//!         | generator name, e.g. plus, unif{-1,1}, tuple<int,int>
//! wire  ::= base ["@" nat]
//! base  ::= "unit" | "bool" | "int" | int ".." int
//!         | "{" value ("," value)* "}" | "<" base ("," base)* ">"
//! ```
//!
//! Both operators are left associative; the printer inserts parentheses only
//! where needed, so `read_term(pretty(t)) == t`.

use super::{Term, WireType};
use crate::shape::BaseShape;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("term syntax error at byte {at}: {message}")]
pub struct ReadError {
    pub at: usize,
    pub message: String,
}

const KEYWORDS: &[&str] = &[
    "id", "const", "sym", "copy", "discard", "fby", "wait", "register", "fbk", "delay",
];

fn wires(ws: &[WireType]) -> String {
    ws.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Canonical text of a term.
pub fn pretty(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, 0, &mut out);
    out
}

fn write_term(t: &Term, prec: u8, out: &mut String) {
    let (mine, open) = match t {
        Term::Seq(..) => (0, prec > 0),
        Term::Par(..) => (1, prec > 1),
        _ => (2, false),
    };
    if open {
        out.push('(');
    }
    match t {
        Term::Seq(a, b) | Term::Par(a, b) => {
            write_term(a, mine, out);
            out.push_str(if mine == 0 { " ; " } else { " * " });
            write_term(b, mine + 1, out);
        }
        Term::Id(ws) if ws.is_empty() => out.push_str("id"),
        Term::Id(ws) => out.push_str(&format!("id({})", wires(ws))),
        Term::Gen(name) => out.push_str(name),
        Term::Const(v, b) => out.push_str(&format!("const({v}:{b})")),
        Term::Sym(a, b) => out.push_str(&format!("sym({}|{})", wires(a), wires(b))),
        Term::Copy(w) => out.push_str(&format!("copy({w})")),
        Term::Discard(w) => out.push_str(&format!("discard({w})")),
        Term::FbyBox(w) => out.push_str(&format!("fby({w})")),
        Term::Wait(w) => out.push_str(&format!("wait({w})")),
        Term::Register(w) => out.push_str(&format!("register({w})")),
        Term::Fbk(s, body) => {
            out.push_str(&format!("fbk({}|", wires(s)));
            write_term(body, 0, out);
            out.push(')');
        }
        Term::DelayTerm(body) => {
            out.push_str("delay(");
            write_term(body, 0, out);
            out.push(')');
        }
    }
    if open {
        out.push(')');
    }
}

/// Parses the text produced by [`pretty`]. Whitespace is insignificant.
pub fn read_term(src: &str) -> Result<Term, ReadError> {
    let mut r = Reader { src, pos: 0 };
    let t = r.term()?;
    r.ws();
    if r.pos < src.len() {
        return Err(r.err("unexpected trailing input"));
    }
    Ok(t)
}

/// Parses a base shape such as `bool`, `0..3`, `{-1,1}` or `<int,bool>`.
pub fn parse_base(src: &str) -> Result<BaseShape, ReadError> {
    let mut r = Reader { src, pos: 0 };
    let b = r.base()?;
    r.ws();
    if r.pos < src.len() {
        return Err(r.err("unexpected trailing input"));
    }
    Ok(b)
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl Reader<'_> {
    fn err(&self, message: impl Into<String>) -> ReadError {
        ReadError {
            at: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ReadError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{token}`")))
        }
    }

    fn term(&mut self) -> Result<Term, ReadError> {
        let mut t = self.par()?;
        while self.eat(";") {
            t = Term::seq(t, self.par()?);
        }
        Ok(t)
    }

    fn par(&mut self) -> Result<Term, ReadError> {
        let mut t = self.atom()?;
        while self.eat("*") {
            t = Term::par(t, self.atom()?);
        }
        Ok(t)
    }

    fn ident(&mut self) -> &str {
        self.ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        self.pos += len;
        &self.src[start..self.pos]
    }

    /// Skips a bracketed group starting at the current position.
    fn balanced(&mut self, open: char, close: char) -> Result<(), ReadError> {
        let mut depth = 0usize;
        for (i, c) in self.rest().char_indices() {
            if c == open {
                depth += 1;
            } else if c == close {
                depth -= 1;
                if depth == 0 {
                    self.pos += i + c.len_utf8();
                    return Ok(());
                }
            }
        }
        Err(self.err(format!("unclosed `{open}`")))
    }

    fn atom(&mut self) -> Result<Term, ReadError> {
        if self.eat("(") {
            let t = self.term()?;
            self.expect(")")?;
            return Ok(t);
        }
        let start = self.pos;
        let name = self.ident().to_owned();
        if name.is_empty() {
            return Err(self.err("expected a term"));
        }
        if !KEYWORDS.contains(&name.as_str()) {
            match self.peek() {
                Some('{') => self.balanced('{', '}')?,
                Some('<') => self.balanced('<', '>')?,
                _ => {}
            }
            let full = self.src[start..self.pos].trim_start();
            return Ok(Term::Gen(full.to_owned()));
        }
        if name == "id" {
            if self.eat("(") {
                let ws = self.wires()?;
                self.expect(")")?;
                return Ok(Term::Id(ws));
            }
            return Ok(Term::Id(Vec::new()));
        }
        self.expect("(")?;
        let t = match name.as_str() {
            "const" => {
                let v = self.value_until(&[':'])?;
                self.expect(":")?;
                Term::Const(v, self.base()?)
            }
            "sym" => {
                let a = self.wires()?;
                self.expect("|")?;
                Term::Sym(a, self.wires()?)
            }
            "fbk" => {
                let s = self.wires()?;
                self.expect("|")?;
                Term::fbk(s, self.term()?)
            }
            "delay" => Term::delay(self.term()?),
            _ => {
                let w = self.wire()?;
                match name.as_str() {
                    "copy" => Term::Copy(w),
                    "discard" => Term::Discard(w),
                    "fby" => Term::FbyBox(w),
                    "wait" => Term::Wait(w),
                    _ => Term::Register(w),
                }
            }
        };
        self.expect(")")?;
        Ok(t)
    }

    fn wires(&mut self) -> Result<Vec<WireType>, ReadError> {
        self.ws();
        let mut out = Vec::new();
        if matches!(self.peek(), Some(')' | '|')) {
            return Ok(out);
        }
        loop {
            out.push(self.wire()?);
            if !self.eat(",") {
                return Ok(out);
            }
        }
    }

    fn wire(&mut self) -> Result<WireType, ReadError> {
        let base = self.base()?;
        let delay = if self.eat("@") {
            self.nat()?
        } else {
            0
        };
        Ok(WireType { base, delay })
    }

    fn nat(&mut self) -> Result<usize, ReadError> {
        self.ws();
        let len = self.rest().find(|c: char| !c.is_ascii_digit()).unwrap_or(self.rest().len());
        let n = self.rest()[..len].parse().map_err(|_| self.err("expected a number"))?;
        self.pos += len;
        Ok(n)
    }

    fn int(&mut self) -> Result<i64, ReadError> {
        self.ws();
        let neg = self.rest().starts_with('-');
        if neg {
            self.pos += 1;
        }
        let n = self.nat()? as i64;
        Ok(if neg { -n } else { n })
    }

    /// A value extending up to (not including) one of `stops` at bracket
    /// depth zero.
    fn value_until(&mut self, stops: &[char]) -> Result<Value, ReadError> {
        self.ws();
        let mut depth = 0i32;
        let mut end = self.rest().len();
        for (i, c) in self.rest().char_indices() {
            match c {
                '(' => depth += 1,
                ')' if depth == 0 => {
                    end = i;
                    break;
                }
                ')' => depth -= 1,
                _ if depth == 0 && stops.contains(&c) => {
                    end = i;
                    break;
                }
                _ => {}
            }
        }
        let text = &self.rest()[..end];
        let v = Value::parse(text.trim()).map_err(|e| ReadError {
            at: self.pos + e.at,
            message: "malformed value".into(),
        })?;
        self.pos += end;
        Ok(v)
    }

    fn base(&mut self) -> Result<BaseShape, ReadError> {
        self.ws();
        if self.eat("{") {
            let mut vs = Vec::new();
            loop {
                vs.push(self.value_until(&[',', '}'])?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("}")?;
            return BaseShape::fin_set(vs).map_err(|e| self.err(e.to_string()));
        }
        if self.eat("<") {
            let mut parts = vec![self.base()?];
            while self.eat(",") {
                parts.push(self.base()?);
            }
            self.expect(">")?;
            return Ok(BaseShape::Product(parts));
        }
        if matches!(self.peek(), Some(c) if c == '-' || c.is_ascii_digit()) {
            let lo = self.int()?;
            self.expect("..")?;
            let hi = self.int()?;
            return BaseShape::int_range(lo, hi).map_err(|e| self.err(e.to_string()));
        }
        let at = self.pos;
        match self.ident() {
            "unit" => Ok(BaseShape::Unit),
            "bool" => Ok(BaseShape::Bool),
            "int" => Ok(BaseShape::Int),
            _ => {
                self.pos = at;
                Err(self.err("expected a wire shape"))
            }
        }
    }
}
