//! Elaboration of checked programs into signal flow graph terms.
//!
//! Every expression has a *delay*: the first tick at which it carries a
//! value. `wait` adds one; arithmetic needs equal delays. Literals and `unif`
//! are time-invariant and can be produced at any delay.
//!
//! `elab(e, ℓ, d)` emits a wire carrying `∂^ℓ⟦e⟧`, where `d` is the delay
//! chosen for `e`; the wire's type is `b@(ℓ+d)`. Inside a recursive group
//! the fed-back wire of a member `m` is exactly `∂m`, so an occurrence of `m`
//! reached at level `ℓ ≥ 1` becomes `wait^(ℓ-1)` of that wire. The
//! delay consumed by the feedback is the outermost guard of the occurrence.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{BinOp, Expr, ExprKind, Pos};
use super::causality::Checked;
use super::LangError;
use crate::ir::{constant_at, wiring, Term, WireType};
use crate::shape::BaseShape;
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Delay {
    Fixed(usize),
    /// Time-invariant: available from any tick `≥ k`.
    AtLeast(usize),
}

impl Delay {
    fn accepts(self, d: usize) -> bool {
        match self {
            Delay::Fixed(n) => n == d,
            Delay::AtLeast(k) => d >= k,
        }
    }

    fn join(self, other: Delay) -> Option<Delay> {
        use Delay::*;
        match (self, other) {
            (Fixed(a), Fixed(b)) => (a == b).then_some(Fixed(a)),
            (Fixed(a), AtLeast(k)) | (AtLeast(k), Fixed(a)) => (a >= k).then_some(Fixed(a)),
            (AtLeast(a), AtLeast(b)) => Some(AtLeast(a.max(b))),
        }
    }

    fn later(self) -> Delay {
        match self {
            Delay::Fixed(n) => Delay::Fixed(n + 1),
            Delay::AtLeast(k) => Delay::AtLeast(k + 1),
        }
    }

    fn least(self) -> usize {
        match self {
            Delay::Fixed(n) | Delay::AtLeast(n) => n,
        }
    }

    fn describe(self) -> String {
        match self {
            Delay::Fixed(n) => format!("from tick {n}"),
            Delay::AtLeast(k) => format!("from any tick ≥ {k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Ty {
    base: BaseShape,
    delay: Delay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FbyMode {
    /// The second argument is already one tick late: the `fby` box itself.
    Box,
    /// Lucid `fby` whose second argument refers to the recursive group: read
    /// it one level deeper.
    Deeper,
    /// Lucid `fby` on an independent stream: a register.
    Register,
}

/// Chooses how to realise `a fby b`; returns the mode and the delay of `a`
/// (which is also the delay of the result).
fn fby_plan(ta: Delay, tb: Delay, recursive: bool) -> Option<(FbyMode, usize)> {
    let boxed = match (ta, tb) {
        (Delay::Fixed(n), _) => tb.accepts(n + 1).then_some(n),
        (Delay::AtLeast(k), Delay::Fixed(m)) => (m >= 1 && m - 1 >= k).then(|| m - 1),
        (Delay::AtLeast(k), Delay::AtLeast(k2)) => Some(k.max(k2.saturating_sub(1))),
    };
    if let Some(d) = boxed {
        return Some((FbyMode::Box, d));
    }
    let d = ta.join(tb)?.least();
    Some((if recursive { FbyMode::Deeper } else { FbyMode::Register }, d))
}

fn type_err(pos: Pos, message: impl Into<String>) -> LangError {
    LangError::Type {
        pos,
        message: message.into(),
    }
}

/// The result of elaboration.
#[derive(Clone, Debug)]
pub struct Elaborated {
    pub term: Term,
    /// Input wires in declaration order (all at delay 0).
    pub inputs: Vec<WireType>,
    pub output: WireType,
    pub main: String,
}

fn delayed(t: Term, by: usize) -> Term {
    (0..by).fold(t, |t, _| Term::delay(t))
}

/// Straight-line construction of a term: the bundle only grows, each
/// operation copies its arguments to the end and appends its outputs.
struct Builder {
    start: Vec<WireType>,
    wires: Vec<WireType>,
    steps: Vec<Term>,
}

impl Builder {
    fn new(start: Vec<WireType>) -> Self {
        Builder {
            wires: start.clone(),
            start,
            steps: Vec::new(),
        }
    }

    fn apply(&mut self, args: &[usize], op: Term, outs: Vec<WireType>) -> Vec<usize> {
        let n = self.wires.len();
        if !args.is_empty() {
            let sel: Vec<usize> = (0..n).chain(args.iter().copied()).collect();
            self.steps.push(wiring(&self.wires, &sel));
        }
        self.steps.push(Term::pars([Term::Id(self.wires.clone()), op]));
        self.wires.extend(outs);
        (n..self.wires.len()).collect()
    }

    fn apply1(&mut self, args: &[usize], op: Term, out: WireType) -> usize {
        self.apply(args, op, vec![out])[0]
    }

    fn finish(mut self, sel: &[usize]) -> Term {
        self.steps.push(wiring(&self.wires, sel));
        Term::seqs(self.steps, &self.start)
    }
}

struct Group {
    members: BTreeSet<String>,
    /// Index of each member's fed-back wire.
    fed: BTreeMap<String, usize>,
    in_progress: BTreeSet<String>,
}

struct Elab<'a> {
    checked: &'a Checked,
    types: BTreeMap<String, Ty>,
    b: Builder,
    env: BTreeMap<String, usize>,
    waited: BTreeMap<(String, usize), usize>,
    group: Option<Group>,
}

impl Elab<'_> {
    fn type_of(&self, e: &Expr) -> Result<Ty, LangError> {
        let int = |delay| Ty {
            base: BaseShape::Int,
            delay,
        };
        Ok(match &e.kind {
            ExprKind::Int(_) | ExprKind::Unif(_) => int(Delay::AtLeast(0)),
            ExprKind::Ident(x) => self.types.get(x).cloned().ok_or_else(|| LangError::Unbound {
                name: x.clone(),
                pos: e.pos,
            })?,
            ExprKind::Paren(inner) => self.type_of(inner)?,
            ExprKind::Wait(inner) => {
                let t = self.type_of(inner)?;
                Ty {
                    base: t.base,
                    delay: t.delay.later(),
                }
            }
            ExprKind::Neg(inner) => int(self.int_operands(e.pos, "-", &[inner])?),
            ExprKind::Binary(BinOp::Fby, a, b) => {
                let (ta, tb) = (self.type_of(a)?, self.type_of(b)?);
                if ta.base != tb.base {
                    return Err(type_err(e.pos, format!("fby joins {} with {}", ta.base, tb.base)));
                }
                let (_, d) = fby_plan(ta.delay, tb.delay, false).ok_or_else(|| {
                    type_err(
                        e.pos,
                        format!(
                            "fby arguments have incompatible delays ({} and {})",
                            ta.delay.describe(),
                            tb.delay.describe()
                        ),
                    )
                })?;
                Ty {
                    base: ta.base,
                    delay: Delay::Fixed(d),
                }
            }
            ExprKind::Binary(op, a, b) => {
                let name = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    _ => "*",
                };
                int(self.int_operands(e.pos, name, &[a, b])?)
            }
            ExprKind::Call(f, args) => {
                let arity = match f.as_str() {
                    "move" => 2,
                    "count" => 1,
                    _ => return Err(type_err(e.pos, format!("unknown function `{f}`"))),
                };
                if args.len() != arity {
                    return Err(type_err(e.pos, format!("`{f}` takes {arity} argument(s)")));
                }
                let refs: Vec<&Expr> = args.iter().collect();
                int(self.int_operands(e.pos, f, &refs)?)
            }
            ExprKind::Tuple(items) => {
                let mut bases = Vec::new();
                let mut delay = Delay::AtLeast(0);
                for it in items {
                    let t = self.type_of(it)?;
                    bases.push(t.base);
                    delay = delay.join(t.delay).ok_or_else(|| {
                        type_err(it.pos, "tuple components have different delays")
                    })?;
                }
                Ty {
                    base: BaseShape::Product(bases),
                    delay,
                }
            }
        })
    }

    fn int_operands(&self, pos: Pos, op: &str, args: &[&Expr]) -> Result<Delay, LangError> {
        let mut delay = Delay::AtLeast(0);
        for a in args {
            let t = self.type_of(a)?;
            if t.base != BaseShape::Int {
                return Err(type_err(a.pos, format!("`{op}` expects integers, found {}", t.base)));
            }
            delay = delay.join(t.delay).ok_or_else(|| {
                type_err(
                    pos,
                    format!(
                        "operands of `{op}` are available at different ticks ({} vs {})",
                        delay.describe(),
                        t.delay.describe()
                    ),
                )
            })?;
        }
        Ok(delay)
    }

    fn is_member(&self, x: &str) -> bool {
        self.group.as_ref().is_some_and(|g| g.members.contains(x))
    }

    fn waited(&mut self, x: &str, shared: usize, lvl: usize) -> usize {
        let mut cur = shared;
        for k in 1..=lvl {
            cur = match self.waited.get(&(x.to_owned(), k)) {
                Some(&w) => w,
                None => {
                    let w = self.b.wires[cur].clone();
                    let out = self.b.apply1(&[cur], Term::Wait(w.clone()), w.delayed(1));
                    self.waited.insert((x.to_owned(), k), out);
                    out
                }
            };
        }
        cur
    }

    fn ident(&mut self, x: &str, pos: Pos, lvl: usize) -> Result<usize, LangError> {
        if self.is_member(x) {
            if lvl == 0 {
                if let Some(&w) = self.env.get(x) {
                    return Ok(w);
                }
                return self.member(x, pos);
            }
            let fed = self.group.as_ref().expect("member").fed[x];
            // The fed-back wire is already ∂x; the chain is cached at lvl - 1.
            let key = format!("∂{x}");
            return Ok(self.waited(&key, fed, lvl - 1));
        }
        let shared = *self.env.get(x).ok_or_else(|| LangError::Unbound {
            name: x.to_owned(),
            pos,
        })?;
        Ok(self.waited(x, shared, lvl))
    }

    /// Computes a group member at level 0, on demand.
    fn member(&mut self, x: &str, pos: Pos) -> Result<usize, LangError> {
        let g = self.group.as_mut().expect("member");
        if !g.in_progress.insert(x.to_owned()) {
            return Err(LangError::Causality {
                name: x.to_owned(),
                def: x.to_owned(),
                pos,
            });
        }
        let def = self.checked.program.def(x).expect("member is a definition");
        let d = match self.types[x].delay {
            Delay::Fixed(n) => n,
            Delay::AtLeast(k) => k,
        };
        let w = self.elab(&def.expr, 0, d)?;
        self.env.insert(x.to_owned(), w);
        Ok(w)
    }

    fn op(&mut self, gen: String, args: &[usize], abs: usize, base: BaseShape) -> usize {
        self.b.apply1(args, delayed(Term::Gen(gen), abs), WireType::new(base, abs))
    }

    fn elab(&mut self, e: &Expr, lvl: usize, d: usize) -> Result<usize, LangError> {
        let abs = lvl + d;
        Ok(match &e.kind {
            ExprKind::Int(n) => self.b.apply1(
                &[],
                constant_at(Value::Int(n.clone()), BaseShape::Int, abs),
                WireType::new(BaseShape::Int, abs),
            ),
            ExprKind::Unif(u) => {
                let support: Vec<String> = u.support().iter().map(ToString::to_string).collect();
                self.op(format!("unif{{{}}}", support.join(",")), &[], abs, BaseShape::Int)
            }
            ExprKind::Ident(x) => self.ident(x, e.pos, lvl)?,
            ExprKind::Paren(inner) => self.elab(inner, lvl, d)?,
            ExprKind::Wait(inner) => {
                if d == 0 {
                    return Err(LangError::Internal(format!("wait at delay 0 at {}", e.pos)));
                }
                self.elab(inner, lvl + 1, d - 1)?
            }
            ExprKind::Neg(inner) => {
                let x = self.elab(inner, lvl, d)?;
                self.op("neg".into(), &[x], abs, BaseShape::Int)
            }
            ExprKind::Binary(BinOp::Fby, a, b) => {
                let (ta, tb) = (self.type_of(a)?, self.type_of(b)?);
                let recursive = b.mentions(&|x| self.is_member(x));
                let (mode, da) = fby_plan(ta.delay, tb.delay, recursive)
                    .ok_or_else(|| LangError::Internal(format!("fby plan at {}", e.pos)))?;
                if da != d {
                    return Err(type_err(
                        e.pos,
                        format!("fby result starts at tick {da} but is needed from tick {d}"),
                    ));
                }
                let xa = self.elab(a, lvl, d)?;
                let w = WireType::new(ta.base.clone(), abs);
                let (xb, op) = match mode {
                    FbyMode::Box => (self.elab(b, lvl, d + 1)?, Term::FbyBox(w.clone())),
                    FbyMode::Deeper => (self.elab(b, lvl + 1, d)?, Term::FbyBox(w.clone())),
                    FbyMode::Register => (self.elab(b, lvl, d)?, Term::Register(w.clone())),
                };
                self.b.apply1(&[xa, xb], op, w)
            }
            ExprKind::Binary(op, a, b) => {
                let xa = self.elab(a, lvl, d)?;
                let xb = self.elab(b, lvl, d)?;
                let name = match op {
                    BinOp::Add => "plus",
                    BinOp::Sub => "minus",
                    _ => "times",
                };
                self.op(name.into(), &[xa, xb], abs, BaseShape::Int)
            }
            ExprKind::Call(f, args) => {
                let xs = args
                    .iter()
                    .map(|a| self.elab(a, lvl, d))
                    .collect::<Result<Vec<_>, _>>()?;
                self.op(f.clone(), &xs, abs, BaseShape::Int)
            }
            ExprKind::Tuple(items) => {
                let mut xs = Vec::new();
                let mut bases = Vec::new();
                for it in items {
                    bases.push(self.type_of(it)?.base);
                    xs.push(self.elab(it, lvl, d)?);
                }
                let product = BaseShape::Product(bases);
                self.op(format!("tuple{product}"), &xs, abs, product)
            }
        })
    }

    /// Assigns delays and shapes to a recursive group by fixed-point iteration.
    fn infer_group(&mut self, members: &[String]) -> Result<(), LangError> {
        for m in members {
            self.types.insert(
                m.clone(),
                Ty {
                    base: BaseShape::Int,
                    delay: Delay::Fixed(0),
                },
            );
        }
        for _ in 0..16 {
            let mut changed = false;
            for m in members {
                let def = self.checked.program.def(m).expect("member");
                let t = self.type_of(&def.expr)?;
                let t = Ty {
                    delay: Delay::Fixed(t.delay.least()),
                    base: t.base,
                };
                if self.types[m] != t {
                    self.types.insert(m.clone(), t);
                    changed = true;
                }
            }
            if !changed {
                return Ok(());
            }
        }
        let pos = self.checked.program.def(&members[0]).expect("member").pos;
        Err(type_err(pos, "cannot assign consistent delays to this recursive group"))
    }

    fn wire_of(&self, name: &str) -> WireType {
        let t = &self.types[name];
        WireType::new(t.base.clone(), t.delay.least())
    }

    fn group(&mut self, members: &[String]) -> Result<(), LangError> {
        self.infer_group(members)?;
        let s: Vec<WireType> = members.iter().map(|m| self.wire_of(m)).collect();
        let k = s.len();
        let outer_wires = self.b.wires.clone();
        let mut start: Vec<WireType> = s.iter().map(|w| w.delayed(1)).collect();
        start.extend(outer_wires.iter().cloned());

        let outer_b = std::mem::replace(&mut self.b, Builder::new(start));
        let outer_env = self.env.clone();
        let outer_waited = std::mem::take(&mut self.waited);
        self.env = outer_env.iter().map(|(x, &i)| (x.clone(), i + k)).collect();
        self.waited = outer_waited.iter().map(|(key, &i)| (key.clone(), i + k)).collect();
        self.group = Some(Group {
            members: members.iter().cloned().collect(),
            fed: members.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect(),
            in_progress: BTreeSet::new(),
        });

        let result: Result<Vec<usize>, LangError> = (|| {
            for m in members {
                if !self.env.contains_key(m) {
                    let pos = self.checked.program.def(m).expect("member").pos;
                    self.member(m, pos)?;
                }
            }
            Ok(members.iter().map(|m| self.env[m]).collect::<Vec<usize>>())
        })();
        self.group = None;
        let inner_b = std::mem::replace(&mut self.b, outer_b);
        self.env = outer_env;
        self.waited = outer_waited;
        let outs = result?;

        let mut sel = outs.clone();
        sel.extend(k..k + outer_wires.len());
        sel.extend(outs.iter().copied());
        let body = inner_b.finish(&sel);
        // Feedback consumes the whole bundle and hands it back with the members.
        self.b.steps.push(Term::fbk(s.clone(), body));
        let first = self.b.wires.len();
        self.b.wires.extend(s);
        for (i, m) in members.iter().enumerate() {
            self.env.insert(m.clone(), first + i);
        }
        Ok(())
    }
}

/// Elaborates the definition `main` (or the program's default main) and
/// everything it depends on.
pub fn elaborate(checked: &Checked, main: Option<&str>) -> Result<Elaborated, LangError> {
    let p = &checked.program;
    let main = match main {
        Some(m) => p
            .def(m)
            .map(|d| d.name.clone())
            .ok_or_else(|| LangError::UnknownMain(m.to_owned()))?,
        None => p.default_main().ok_or(LangError::NoMain)?.to_owned(),
    };

    // Definitions reachable from main.
    let mut needed = BTreeSet::from([main.clone()]);
    let mut stack = vec![main.clone()];
    while let Some(x) = stack.pop() {
        for o in checked.occurrences.iter().filter(|o| o.def == x) {
            if needed.insert(o.name.clone()) {
                stack.push(o.name.clone());
            }
        }
    }

    let inputs: Vec<WireType> = p.inputs.iter().map(|i| WireType::now(i.shape.clone())).collect();
    let mut el = Elab {
        checked,
        types: BTreeMap::new(),
        b: Builder::new(inputs.clone()),
        env: BTreeMap::new(),
        waited: BTreeMap::new(),
        group: None,
    };
    for (i, decl) in p.inputs.iter().enumerate() {
        let w = if decl.shape == BaseShape::Int {
            i
        } else {
            el.b.apply1(&[i], Term::Gen(format!("widen{{{}}}", decl.shape)), WireType::now(BaseShape::Int))
        };
        el.env.insert(decl.name.clone(), w);
        el.types.insert(
            decl.name.clone(),
            Ty {
                base: BaseShape::Int,
                delay: Delay::Fixed(0),
            },
        );
    }

    for comp in &checked.components {
        if !comp.members.iter().any(|m| needed.contains(m)) {
            continue;
        }
        if comp.recursive {
            el.group(&comp.members)?;
        } else {
            let name = &comp.members[0];
            let def = p.def(name).expect("definition");
            let t = el.type_of(&def.expr)?;
            let d = t.delay.least();
            el.types.insert(
                name.clone(),
                Ty {
                    base: t.base,
                    delay: Delay::Fixed(d),
                },
            );
            let w = el.elab(&def.expr, 0, d)?;
            el.env.insert(name.clone(), w);
        }
    }

    let out = el.env[&main];
    let output = el.b.wires[out].clone();
    let term = el.b.finish(&[out]);
    Ok(Elaborated {
        term,
        inputs,
        output,
        main,
    })
}
