//! Signal flow graphs: typed terms of the free feedback monoidal category
//! over a generator [`Signature`], compiled to [`Stream`]s.
//!
//! Objects are flat lists of [`WireType`]s. A wire `b@d` carries nothing on
//! ticks `0..d` and a value of shape `b` from tick `d` on, so the delay functor
//! just increments every delay counter.

mod random;
mod signature;
mod syntax;
mod wiring;

use std::fmt;

pub use random::{random_term, TermGen};
pub use signature::{Generator, Signature, SignatureError};
pub use syntax::{parse_base, pretty, read_term, ReadError};
pub use wiring::{constant_at, wiring};

use crate::kernel::Kernel;
use crate::shape::{BaseShape, WireShape};
use crate::stream::{self, ShapeSeq, Stream};
use crate::value::Value;

/// One wire: a base shape and the tick from which it carries values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WireType {
    pub base: BaseShape,
    pub delay: usize,
}

impl WireType {
    pub fn new(base: BaseShape, delay: usize) -> Self {
        WireType { base, delay }
    }

    pub fn now(base: BaseShape) -> Self {
        WireType { base, delay: 0 }
    }

    pub fn delayed(&self, by: usize) -> Self {
        WireType {
            base: self.base.clone(),
            delay: self.delay + by,
        }
    }
}

impl fmt::Display for WireType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        if self.delay > 0 {
            write!(f, "@{}", self.delay)?;
        }
        Ok(())
    }
}

/// `∂^by` applied to a wire list.
pub fn shift(ws: &[WireType], by: usize) -> Vec<WireType> {
    ws.iter().map(|w| w.delayed(by)).collect()
}

/// The shape sequence of a wire list: stage `t` holds the wires with delay `≤ t`.
pub fn seq_of(ws: &[WireType]) -> ShapeSeq {
    let horizon = ws.iter().map(|w| w.delay).max().unwrap_or(0);
    let stage = |t: usize| {
        WireShape::of(
            ws.iter()
                .filter(|w| w.delay <= t)
                .map(|w| w.base.clone())
                .collect::<Vec<_>>(),
        )
    };
    ShapeSeq::new((0..horizon).map(stage).collect(), stage(horizon))
}

fn fmt_wires(ws: &[WireType]) -> String {
    let parts: Vec<String> = ws.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Id(Vec<WireType>),
    /// A generator of the signature, at delay 0 on every wire.
    Gen(String),
    /// `I → b`: the constant stream of a value.
    Const(Value, BaseShape),
    Seq(Box<Term>, Box<Term>),
    Par(Box<Term>, Box<Term>),
    Sym(Vec<WireType>, Vec<WireType>),
    Copy(WireType),
    Discard(WireType),
    /// `[w, w+1] → [w]`: first value from the left wire, then the right wire.
    FbyBox(WireType),
    /// `[w] → [w+1]`.
    Wait(WireType),
    /// `[w, w] → [w]`: Lucid `a fby b` with `b` read one tick late.
    Register(WireType),
    /// Feedback over `S`: the body maps `∂S ++ X → S ++ Y`.
    Fbk(Vec<WireType>, Box<Term>),
    DelayTerm(Box<Term>),
}

impl Term {
    pub fn seq(a: Term, b: Term) -> Term {
        Term::Seq(Box::new(a), Box::new(b))
    }

    pub fn par(a: Term, b: Term) -> Term {
        Term::Par(Box::new(a), Box::new(b))
    }

    pub fn fbk(s: Vec<WireType>, body: Term) -> Term {
        Term::Fbk(s, Box::new(body))
    }

    pub fn delay(t: Term) -> Term {
        Term::DelayTerm(Box::new(t))
    }

    pub fn gen(name: impl Into<String>) -> Term {
        Term::Gen(name.into())
    }

    /// Left-nested parallel composition, skipping empty identities.
    pub fn pars(terms: impl IntoIterator<Item = Term>) -> Term {
        terms
            .into_iter()
            .filter(|t| !matches!(t, Term::Id(ws) if ws.is_empty()))
            .reduce(Term::par)
            .unwrap_or(Term::Id(Vec::new()))
    }

    /// Left-nested sequential composition; `id` on `fallback` when empty.
    pub fn seqs(terms: impl IntoIterator<Item = Term>, fallback: &[WireType]) -> Term {
        terms
            .into_iter()
            .reduce(Term::seq)
            .unwrap_or_else(|| Term::Id(fallback.to_vec()))
    }

    /// Number of constructors.
    pub fn size(&self) -> usize {
        1 + match self {
            Term::Seq(a, b) | Term::Par(a, b) => a.size() + b.size(),
            Term::Fbk(_, t) | Term::DelayTerm(t) => t.size(),
            _ => 0,
        }
    }

    pub fn contains_fbk(&self) -> bool {
        match self {
            Term::Fbk(..) => true,
            Term::Seq(a, b) | Term::Par(a, b) => a.contains_fbk() || b.contains_fbk(),
            Term::DelayTerm(t) => t.contains_fbk(),
            _ => false,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("type error at {path}: {message}")]
pub struct TypeError {
    /// Slash-separated route from the root, e.g. `seq.1/fbk/par.0`.
    pub path: String,
    pub message: String,
}

struct Path(Vec<String>);

impl Path {
    fn err(&self, message: impl Into<String>) -> TypeError {
        TypeError {
            path: if self.0.is_empty() {
                "root".into()
            } else {
                self.0.join("/")
            },
            message: message.into(),
        }
    }

    fn with<T>(&mut self, seg: &str, f: impl FnOnce(&mut Path) -> T) -> T {
        self.0.push(seg.to_owned());
        let out = f(self);
        self.0.pop();
        out
    }
}

type Arity = (Vec<WireType>, Vec<WireType>);

/// The input and output wire lists of a term.
pub fn infer_type(t: &Term, sig: &Signature) -> Result<Arity, TypeError> {
    infer(t, sig, &mut Path(Vec::new()))
}

fn infer(t: &Term, sig: &Signature, path: &mut Path) -> Result<Arity, TypeError> {
    use Term::*;
    Ok(match t {
        Id(ws) => (ws.clone(), ws.clone()),
        Gen(name) => {
            let g = sig
                .get(name)
                .ok_or_else(|| path.err(format!("unknown generator `{name}`")))?;
            let now = |bs: &[BaseShape]| bs.iter().cloned().map(WireType::now).collect();
            (now(&g.inputs), now(&g.outputs))
        }
        Const(v, b) => {
            if !b.contains(v) {
                return Err(path.err(format!("constant {v} does not inhabit {b}")));
            }
            (Vec::new(), vec![WireType::now(b.clone())])
        }
        Seq(a, b) => {
            let (ai, ao) = path.with("seq.0", |p| infer(a, sig, p))?;
            let (bi, bo) = path.with("seq.1", |p| infer(b, sig, p))?;
            if ao != bi {
                return Err(path.err(format!(
                    "cannot compose {} with {}",
                    fmt_wires(&ao),
                    fmt_wires(&bi)
                )));
            }
            (ai, bo)
        }
        Par(a, b) => {
            let (mut ai, mut ao) = path.with("par.0", |p| infer(a, sig, p))?;
            let (bi, bo) = path.with("par.1", |p| infer(b, sig, p))?;
            ai.extend(bi);
            ao.extend(bo);
            (ai, ao)
        }
        Sym(a, b) => {
            let mut i = a.clone();
            i.extend(b.iter().cloned());
            let mut o = b.clone();
            o.extend(a.iter().cloned());
            (i, o)
        }
        Copy(w) => (vec![w.clone()], vec![w.clone(), w.clone()]),
        Discard(w) => (vec![w.clone()], Vec::new()),
        FbyBox(w) => (vec![w.clone(), w.delayed(1)], vec![w.clone()]),
        Wait(w) => (vec![w.clone()], vec![w.delayed(1)]),
        Register(w) => (vec![w.clone(), w.clone()], vec![w.clone()]),
        Fbk(s, body) => {
            let (bi, bo) = path.with("fbk", |p| infer(body, sig, p))?;
            let ds = shift(s, 1);
            if !bi.starts_with(&ds) {
                return Err(path.err(format!(
                    "feedback body input {} must start with the delayed state {}",
                    fmt_wires(&bi),
                    fmt_wires(&ds)
                )));
            }
            if !bo.starts_with(s) {
                return Err(path.err(format!(
                    "feedback body output {} must start with the state {}",
                    fmt_wires(&bo),
                    fmt_wires(s)
                )));
            }
            (bi[s.len()..].to_vec(), bo[s.len()..].to_vec())
        }
        DelayTerm(t) => {
            let (i, o) = path.with("delay", |p| infer(t, sig, p))?;
            (shift(&i, 1), shift(&o, 1))
        }
    })
}

fn delay_n(mut s: Stream, n: usize) -> Stream {
    for _ in 0..n {
        s = stream::delay(&s);
    }
    s
}

/// A memoryless stream applying `k` from tick `d` on and nothing before.
fn from_tick(d: usize, k: Kernel) -> Stream {
    let idle = vec![Kernel::identity(&WireShape::unit()); d];
    stream::lift_seq(idle, k).expect("unit kernels line up")
}

/// The semantics functor into streams. Typechecks first.
pub fn compile(t: &Term, sig: &Signature) -> Result<Stream, TypeError> {
    infer_type(t, sig)?;
    let mut path = Path(Vec::new());
    build(t, sig, &mut path)
}

fn build(t: &Term, sig: &Signature, path: &mut Path) -> Result<Stream, TypeError> {
    use Term::*;
    let one = |b: &BaseShape| WireShape::of(vec![b.clone()]);
    let stream_err = |path: &Path, e: stream::StreamError| path.err(e.to_string());
    Ok(match t {
        Id(ws) => stream::identity(&seq_of(ws)),
        Gen(name) => {
            let g = sig.get(name).expect("typechecked");
            stream::lift_const(g.kernel)
        }
        Const(v, b) => stream::lift_const(
            Kernel::constant(one(b), vec![v.clone()]).map_err(|e| path.err(e.to_string()))?,
        ),
        Seq(a, b) => {
            let fa = path.with("seq.0", |p| build(a, sig, p))?;
            let fb = path.with("seq.1", |p| build(b, sig, p))?;
            stream::seq_comp(&fa, &fb).map_err(|e| stream_err(path, e))?
        }
        Par(a, b) => {
            let fa = path.with("par.0", |p| build(a, sig, p))?;
            let fb = path.with("par.1", |p| build(b, sig, p))?;
            stream::par_comp(&fa, &fb)
        }
        Sym(a, b) => stream::sym(&seq_of(a), &seq_of(b)),
        Copy(w) => from_tick(w.delay, Kernel::copy(&one(&w.base))),
        Discard(w) => from_tick(w.delay, Kernel::discard(&one(&w.base))),
        Wait(w) => delay_n(stream::wait(&ShapeSeq::constant(one(&w.base))), w.delay),
        FbyBox(w) => {
            let x = ShapeSeq::constant(one(&w.base));
            let ports = stream::par_comp(&stream::first_only(&x), &stream::identity(&x.delay()));
            let boxed = stream::seq_comp(&ports, &stream::fby_box(&x)).map_err(|e| stream_err(path, e))?;
            delay_n(boxed, w.delay)
        }
        Register(w) => delay_n(stream::register(&one(&w.base)), w.delay),
        Fbk(s, body) => {
            let f = path.with("fbk", |p| build(body, sig, p))?;
            stream::fbk(&f, &seq_of(s)).map_err(|e| stream_err(path, e))?
        }
        DelayTerm(inner) => stream::delay(&path.with("delay", |p| build(inner, sig, p))?),
    })
}
