use std::fmt;

use num_bigint::BigInt;

use crate::shape::BaseShape;

/// 1-based line and column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Fby,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Fby => "fby",
        }
    }

    fn prec(self) -> u8 {
        match self {
            BinOp::Fby => 0,
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul => 2,
        }
    }
}

/// Arguments of `unif`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Unif {
    /// `unif(a, b)`: the two-point set `{a, b}`.
    Pair(i64, i64),
    /// `unif(lo..hi)`.
    Range(i64, i64),
    /// `unif{v, ..}`.
    Set(Vec<i64>),
}

impl Unif {
    pub fn support(&self) -> Vec<i64> {
        let mut vs = match self {
            Unif::Pair(a, b) => vec![*a, *b],
            Unif::Range(lo, hi) => (*lo..=*hi).collect(),
            Unif::Set(vs) => vs.clone(),
        };
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Int(BigInt),
    Ident(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Wait(Box<Expr>),
    Unif(Unif),
    /// Builtin function call such as `move(b, s)` or `count(s)`.
    Call(String, Vec<Expr>),
    Tuple(Vec<Expr>),
    Paren(Box<Expr>),
}

/// An expression with its source position. Equality ignores positions.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    /// Calls `f` on every identifier occurrence with whether it sits under a
    /// delay: inside `wait(·)` or in the second argument of `fby`.
    pub fn visit_idents(&self, f: &mut impl FnMut(&str, Pos, bool)) {
        self.visit_inner(false, f);
    }

    fn visit_inner(&self, guarded: bool, f: &mut impl FnMut(&str, Pos, bool)) {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Unif(_) => {}
            ExprKind::Ident(x) => f(x, self.pos, guarded),
            ExprKind::Neg(e) | ExprKind::Paren(e) => e.visit_inner(guarded, f),
            ExprKind::Wait(e) => e.visit_inner(true, f),
            ExprKind::Binary(BinOp::Fby, a, b) => {
                a.visit_inner(guarded, f);
                b.visit_inner(true, f);
            }
            ExprKind::Binary(_, a, b) => {
                a.visit_inner(guarded, f);
                b.visit_inner(guarded, f);
            }
            ExprKind::Call(_, args) | ExprKind::Tuple(args) => {
                for a in args {
                    a.visit_inner(guarded, f);
                }
            }
        }
    }

    pub fn mentions(&self, names: &dyn Fn(&str) -> bool) -> bool {
        let mut hit = false;
        self.visit_idents(&mut |x, _, _| hit |= names(x));
        hit
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        match &self.kind {
            ExprKind::Binary(op, a, b) => {
                let p = op.prec();
                let open = ctx > p;
                if open {
                    f.write_str("(")?;
                }
                // fby associates to the right, the arithmetic operators to the left.
                let (lp, rp) = if *op == BinOp::Fby { (p + 1, p) } else { (p, p + 1) };
                a.write(f, lp)?;
                write!(f, " {} ", op.symbol())?;
                b.write(f, rp)?;
                if open {
                    f.write_str(")")?;
                }
                Ok(())
            }
            ExprKind::Neg(e) => {
                // A space keeps `- -x` from reading as a comment.
                f.write_str(if matches!(e.kind, ExprKind::Neg(_)) { "- " } else { "-" })?;
                e.write(f, 3)
            }
            ExprKind::Int(n) if n.sign() == num_bigint::Sign::Minus && ctx >= 3 => write!(f, "({n})"),
            ExprKind::Int(n) => write!(f, "{n}"),
            ExprKind::Ident(x) => f.write_str(x),
            ExprKind::Wait(e) => {
                f.write_str("wait(")?;
                e.write(f, 0)?;
                f.write_str(")")
            }
            ExprKind::Unif(Unif::Pair(a, b)) => write!(f, "unif({a}, {b})"),
            ExprKind::Unif(Unif::Range(lo, hi)) => write!(f, "unif({lo}..{hi})"),
            ExprKind::Unif(Unif::Set(vs)) => {
                let items: Vec<String> = vs.iter().map(ToString::to_string).collect();
                write!(f, "unif{{{}}}", items.join(", "))
            }
            ExprKind::Call(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
            ExprKind::Tuple(items) => {
                f.write_str("(")?;
                write_list(f, items)?;
                f.write_str(")")
            }
            ExprKind::Paren(e) => {
                f.write_str("(")?;
                e.write(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Expr]) -> fmt::Result {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        e.write(f, 0)?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

/// Equality ignores positions.
#[derive(Clone, Debug)]
pub struct Def {
    pub name: String,
    pub expr: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct InputDecl {
    pub name: String,
    pub shape: BaseShape,
    pub pos: Pos,
}

impl PartialEq for Def {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.expr == other.expr
    }
}

impl Eq for Def {}

impl PartialEq for InputDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.shape == other.shape
    }
}

impl Eq for InputDecl {}

/// A parsed program: input declarations and definitions in source order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Program {
    pub inputs: Vec<InputDecl>,
    pub defs: Vec<Def>,
}

impl Program {
    pub fn def(&self, name: &str) -> Option<&Def> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn input(&self, name: &str) -> Option<&InputDecl> {
        self.inputs.iter().find(|d| d.name == name)
    }

    /// The definition named `main`, else the last one.
    pub fn default_main(&self) -> Option<&str> {
        self.def("main")
            .or(self.defs.last())
            .map(|d| d.name.as_str())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.inputs {
            let shape = match &i.shape {
                BaseShape::FinSet(vs) => {
                    let items: Vec<String> = vs.iter().map(ToString::to_string).collect();
                    format!("{{{}}}", items.join(", "))
                }
                s => s.to_string(),
            };
            writeln!(f, "input {} : {}", i.name, shape)?;
        }
        for d in &self.defs {
            writeln!(f, "{} = {}", d.name, d.expr)?;
        }
        Ok(())
    }
}
