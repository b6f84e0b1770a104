//! Seeded generation of well-typed random terms over small finite shapes.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{constant_at, infer_type, shift, wiring, Signature, Term, WireType};
use crate::shape::BaseShape;

/// Random term builder. Terms only use `bool` and `0..2` wires and the
/// fixed generators of the signature that live on enumerable shapes.
pub struct TermGen<'a> {
    rng: ChaCha8Rng,
    sig: &'a Signature,
    gens: Vec<String>,
    /// Forbid `wait`, `register` and `fbk`.
    pub memoryless: bool,
    /// Outputs wider than this are trimmed with discards.
    pub max_width: usize,
}

impl<'a> TermGen<'a> {
    pub fn new(sig: &'a Signature, seed: u64) -> Self {
        let gens = sig
            .names()
            .filter(|n| {
                let g = sig.get(n).expect("listed generator");
                g.inputs.iter().chain(&g.outputs).all(BaseShape::is_enumerable)
            })
            .map(str::to_owned)
            .collect();
        TermGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            sig,
            gens,
            memoryless: false,
            max_width: 3,
        }
    }

    /// Restricts generators to deterministic ones.
    pub fn deterministic_only(mut self) -> Self {
        let sig = self.sig;
        self.gens.retain(|n| sig.get(n).expect("listed").kernel.is_deterministic());
        self
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn base(&mut self) -> BaseShape {
        if self.rng.random_bool(0.5) {
            BaseShape::Bool
        } else {
            BaseShape::IntRange(0, 2)
        }
    }

    pub fn wire(&mut self) -> WireType {
        WireType::now(self.base())
    }

    /// Between `0` and `max` random delay-0 wires.
    pub fn wires(&mut self, max: usize) -> Vec<WireType> {
        let n = self.rng.random_range(0..=max);
        (0..n).map(|_| self.wire()).collect()
    }

    fn arity(&self, t: &Term) -> (Vec<WireType>, Vec<WireType>) {
        infer_type(t, self.sig).expect("generated terms typecheck")
    }

    /// A random term with the given inputs, and its outputs.
    pub fn gen_from(&mut self, inputs: &[WireType], size: usize) -> (Term, Vec<WireType>) {
        let (t, out) = if size <= 1 {
            self.leaf(inputs)
        } else {
            let can_delay = inputs.iter().all(|w| w.delay > 0);
            let roll = self.rng.random_range(0..10);
            match roll {
                0..=3 => {
                    let k = self.rng.random_range(1..size);
                    let (a, mid) = self.gen_from(inputs, k);
                    let (b, out) = self.gen_from(&mid, size - k);
                    (Term::seq(a, b), out)
                }
                4..=6 => {
                    let p = self.rng.random_range(0..=inputs.len());
                    let k = self.rng.random_range(1..size);
                    let (a, mut oa) = self.gen_from(&inputs[..p], k);
                    let (b, ob) = self.gen_from(&inputs[p..], size - k);
                    oa.extend(ob);
                    (Term::par(a, b), oa)
                }
                7 | 8 if !self.memoryless => {
                    let s = if self.rng.random_range(0..5) == 0 {
                        vec![self.wire(), self.wire()]
                    } else {
                        vec![self.wire()]
                    };
                    let mut body_in = shift(&s, 1);
                    body_in.extend(inputs.iter().cloned());
                    let (body, out) = self.gen_body(&body_in, &s, size - 1);
                    (Term::fbk(s, body), out)
                }
                9 if can_delay => {
                    let lowered: Vec<WireType> = inputs
                        .iter()
                        .map(|w| WireType::new(w.base.clone(), w.delay - 1))
                        .collect();
                    let (t, out) = self.gen_from(&lowered, size - 1);
                    (Term::delay(t), shift(&out, 1))
                }
                _ => self.leaf(inputs),
            }
        };
        self.trim(t, out)
    }

    fn trim(&mut self, t: Term, out: Vec<WireType>) -> (Term, Vec<WireType>) {
        if out.len() <= self.max_width {
            return (t, out);
        }
        let mut keep: Vec<usize> = (0..out.len()).collect();
        while keep.len() > self.max_width {
            let i = self.rng.random_range(0..keep.len());
            keep.remove(i);
        }
        let kept = keep.iter().map(|&i| out[i].clone()).collect();
        (Term::seq(t, wiring(&out, &keep)), kept)
    }

    /// A body for feedback over `target`: a term from `inputs` whose outputs
    /// start with `target`.
    pub fn gen_body(
        &mut self,
        inputs: &[WireType],
        target: &[WireType],
        size: usize,
    ) -> (Term, Vec<WireType>) {
        let (g, out) = self.gen_from(inputs, size.max(1));
        let (adapter, rest) = self.adapter(&out, target);
        (Term::seq(g, adapter), rest)
    }

    /// `out → target ++ rest`, reusing wires of `out` where possible, closing
    /// a loop through `fby` when a one-tick-later wire of the right shape is
    /// available, and falling back to constants.
    fn adapter(&mut self, out: &[WireType], target: &[WireType]) -> (Term, Vec<WireType>) {
        let mut ext = out.to_vec();
        let mut extras = Vec::new();
        let mut sel = Vec::new();
        let mut finish = Vec::new();
        let mut used = vec![false; out.len()];
        for t in target {
            let direct: Vec<usize> = (0..out.len()).filter(|&j| out[j] == *t).collect();
            let later: Vec<usize> = (0..out.len()).filter(|&j| out[j] == t.delayed(1)).collect();
            let roll: f64 = self.rng.random();
            if !later.is_empty() && roll < 0.6 {
                let j = *later.choose(&mut self.rng).expect("nonempty");
                sel.push(self.push_const(t, &mut ext, &mut extras));
                sel.push(j);
                used[j] = true;
                finish.push(Term::FbyBox(t.clone()));
            } else if !direct.is_empty() && roll < 0.9 {
                let j = *direct.choose(&mut self.rng).expect("nonempty");
                sel.push(j);
                used[j] = true;
                finish.push(Term::Id(vec![t.clone()]));
            } else {
                sel.push(self.push_const(t, &mut ext, &mut extras));
                finish.push(Term::Id(vec![t.clone()]));
            }
        }
        let mut rest = Vec::new();
        for j in 0..out.len() {
            if rest.len() < self.max_width && (!used[j] || self.rng.random_bool(0.2)) && self.rng.random_bool(0.75) {
                sel.push(j);
                rest.push(out[j].clone());
            }
        }
        finish.push(Term::Id(rest.clone()));
        let mut steps = Vec::new();
        if !extras.is_empty() {
            steps.push(Term::par(Term::Id(out.to_vec()), Term::pars(extras)));
        }
        steps.push(wiring(&ext, &sel));
        if finish.iter().any(|t| !matches!(t, Term::Id(_))) {
            steps.push(Term::pars(finish));
        }
        (Term::seqs(steps, out), rest)
    }

    fn push_const(&mut self, t: &WireType, ext: &mut Vec<WireType>, extras: &mut Vec<Term>) -> usize {
        let elems = t.base.elements(64).expect("small shapes");
        let v = elems.choose(&mut self.rng).expect("nonempty shape").clone();
        extras.push(constant_at(v, t.base.clone(), t.delay));
        ext.push(t.clone());
        ext.len() - 1
    }

    /// One atomic operation applied somewhere in the bundle.
    fn leaf(&mut self, inputs: &[WireType]) -> (Term, Vec<WireType>) {
        let n = inputs.len();
        let mut cands: Vec<(usize, usize, Term)> = vec![];
        for p in 0..=n {
            for g in &self.gens {
                let gen = self.sig.get(g).expect("listed");
                if gen.inputs.is_empty() {
                    cands.push((p, 0, Term::Gen(g.clone())));
                }
            }
        }
        if n == 0 {
            let b = self.base();
            let v = b.min_element().expect("bounded");
            cands.push((0, 0, Term::Const(v, b)));
        }
        for p in 0..n {
            let w = &inputs[p];
            cands.push((p, 1, Term::Copy(w.clone())));
            cands.push((p, 1, Term::Discard(w.clone())));
            if !self.memoryless {
                cands.push((p, 1, Term::Wait(w.clone())));
            }
            for len in 1..=2 {
                if p + len > n {
                    continue;
                }
                let window = &inputs[p..p + len];
                if window.iter().any(|x| x.delay != w.delay) {
                    continue;
                }
                let bases: Vec<BaseShape> = window.iter().map(|x| x.base.clone()).collect();
                for g in &self.gens {
                    let gen = self.sig.get(g).expect("listed");
                    if gen.inputs == bases {
                        let t = (0..w.delay).fold(Term::Gen(g.clone()), |t, _| Term::delay(t));
                        cands.push((p, len, t));
                    }
                }
            }
            if p + 1 < n {
                let v = &inputs[p + 1];
                cands.push((p, 2, Term::Sym(vec![w.clone()], vec![v.clone()])));
                if v == w && !self.memoryless {
                    cands.push((p, 2, Term::Register(w.clone())));
                }
                if *v == w.delayed(1) {
                    cands.push((p, 2, Term::FbyBox(w.clone())));
                }
            }
        }
        if cands.is_empty() || self.rng.random_range(0..12) == 0 {
            return (Term::Id(inputs.to_vec()), inputs.to_vec());
        }
        let (p, len, atom) = cands.swap_remove(self.rng.random_range(0..cands.len()));
        let (_, atom_out) = self.arity(&atom);
        let mut out = inputs[..p].to_vec();
        out.extend(atom_out);
        out.extend(inputs[p + len..].iter().cloned());
        let t = Term::pars([
            Term::Id(inputs[..p].to_vec()),
            atom,
            Term::Id(inputs[p + len..].to_vec()),
        ]);
        (t, out)
    }
}

/// A seed-determined well-typed term with at most `size` constructors, on an
/// empty or single-wire input.
pub fn random_term(sig: &Signature, size: usize, seed: u64) -> Term {
    let mut g = TermGen::new(sig, seed);
    let inputs = if g.rng().random_bool(0.5) {
        Vec::new()
    } else {
        vec![g.wire()]
    };
    let mut budget = size.max(1);
    for _ in 0..64 {
        let (t, _) = g.gen_from(&inputs, budget);
        if t.size() <= size.max(1) {
            return t;
        }
        budget = (budget * 2 / 3).max(1);
    }
    Term::Id(inputs)
}
