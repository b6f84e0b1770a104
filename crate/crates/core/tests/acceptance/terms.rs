//! Property suites over seeded random well-typed terms.

use std::sync::OnceLock;

use mstream::ir::{compile, pretty, shift, Signature, Term, TermGen, WireType};
use mstream::stream::{obs_diff, observe, observe_all, run_det, sample_traces};
use mstream::{Dist, KernelError, ShapeError, Stream, StreamError, Value};
use rand::seq::IndexedRandom;
use rayon::prelude::*;

use crate::examples::compile_program;
use crate::{ensure, Outcome};

const HORIZON: usize = 5;
/// Exact observation budget per check; larger cases are skipped and replaced.
const CAP: usize = 5_000;
const PART: usize = 5;

fn sig() -> &'static Signature {
    static SIG: OnceLock<Signature> = OnceLock::new();
    SIG.get_or_init(Signature::standard)
}

enum Verdict {
    Equal,
    TooLarge,
    Differ(String),
}

fn too_large(e: &StreamError) -> bool {
    matches!(
        e,
        StreamError::StateCapExceeded { .. } | StreamError::Kernel(KernelError::Shape(ShapeError::TooLarge { .. }))
    )
}

fn build(t: &Term) -> Result<Stream, String> {
    compile(t, sig()).map_err(|e| format!("{e} in {}", pretty(t)))
}

fn compare(lhs: &Term, rhs: &Term) -> Verdict {
    let (f, g) = match (build(lhs), build(rhs)) {
        (Ok(f), Ok(g)) => (f, g),
        (Err(e), _) | (_, Err(e)) => return Verdict::Differ(e),
    };
    match obs_diff(&f, &g, HORIZON, CAP) {
        Ok(None) => Verdict::Equal,
        Ok(Some(d)) => Verdict::Differ(format!(
            "differ at horizon {}:\n  {}\n  {}",
            d.horizon,
            pretty(lhs),
            pretty(rhs)
        )),
        Err(e) if too_large(&e) => Verdict::TooLarge,
        Err(e) => Verdict::Differ(format!("{e}:\n  {}\n  {}", pretty(lhs), pretty(rhs))),
    }
}

/// Checks `needed` seeded cases, replacing the ones too large to observe
/// exactly. Returns `(checked, skipped)`.
fn suite<F>(name: &str, needed: usize, check: F) -> Result<(usize, usize), String>
where
    F: Fn(u64) -> Verdict + Sync,
{
    let (mut checked, mut skipped, mut next) = (0, 0, 0u64);
    while checked < needed {
        if next > 10 * needed as u64 + 64 {
            return Err(format!("{name}: only {checked} of {needed} cases fit the cap"));
        }
        let batch: Vec<u64> = (next..next + 32).collect();
        next += 32;
        let verdicts: Vec<(u64, Verdict)> = batch.par_iter().map(|&s| (s, check(s))).collect();
        for (seed, v) in verdicts {
            match v {
                Verdict::Equal => checked += 1,
                Verdict::TooLarge => skipped += 1,
                Verdict::Differ(why) => return Err(format!("{name} (seed {seed}) {why}")),
            }
        }
    }
    Ok((checked, skipped))
}

/// Narrow terms keep exact tables small enough to compare at horizon 5.
fn gen(seed: u64) -> TermGen<'static> {
    let mut g = TermGen::new(sig(), seed);
    g.max_width = 2;
    g
}

fn feedback_wires(g: &mut TermGen) -> Vec<WireType> {
    (0..g.wires(2).len().max(1)).map(|_| g.wire()).collect()
}

fn ids(ws: &[WireType]) -> Term {
    Term::Id(ws.to_vec())
}

fn tightening(seed: u64) -> (Term, Term) {
    let mut g = gen(seed);
    let s = feedback_wires(&mut g);
    let x0 = g.wires(1);
    let (u, x) = g.gen_from(&x0, PART);
    let (f, y) = g.gen_body(&[shift(&s, 1), x].concat(), &s, PART);
    let (v, _) = g.gen_from(&y, PART);
    let lhs = Term::fbk(
        s.clone(),
        Term::seq(Term::seq(Term::par(ids(&shift(&s, 1)), u.clone()), f.clone()), Term::par(ids(&s), v.clone())),
    );
    let rhs = Term::seq(Term::seq(u, Term::fbk(s, f)), v);
    (lhs, rhs)
}

fn vanishing(seed: u64) -> (Term, Term) {
    let mut g = gen(seed);
    let x = g.wires(2);
    let (f, _) = g.gen_from(&x, PART + 2);
    (Term::fbk(Vec::new(), f.clone()), f)
}

fn joining(seed: u64) -> (Term, Term) {
    let mut g = gen(seed);
    let (s, t) = (vec![g.wire()], vec![g.wire()]);
    let x = g.wires(1);
    let st = [s.clone(), t.clone()].concat();
    let (f, _) = g.gen_body(&[shift(&st, 1), x].concat(), &st, PART + 2);
    (Term::fbk(t, Term::fbk(s, f.clone())), Term::fbk(st, f))
}

fn strength(seed: u64) -> (Term, Term) {
    let mut g = gen(seed);
    let s = feedback_wires(&mut g);
    let x = g.wires(1);
    let (f, _) = g.gen_body(&[shift(&s, 1), x].concat(), &s, PART);
    let x2 = g.wires(1);
    let (h, _) = g.gen_from(&x2, PART);
    (Term::par(Term::fbk(s.clone(), f.clone()), h.clone()), Term::fbk(s, Term::par(f, h)))
}

fn sliding(seed: u64) -> (Term, Term) {
    let mut g = gen(seed);
    let s = feedback_wires(&mut g);
    let (h, t) = g.gen_from(&s, PART);
    let x = g.wires(1);
    let (f, y) = g.gen_body(&[shift(&t, 1), x.clone()].concat(), &s, PART);
    let lhs = Term::fbk(t, Term::seq(f.clone(), Term::par(h.clone(), ids(&y))));
    let rhs = Term::fbk(s, Term::seq(Term::par(Term::delay(h), ids(&x)), f));
    (lhs, rhs)
}

pub fn feedback_axioms() -> Outcome {
    let axioms: [(&str, fn(u64) -> (Term, Term)); 5] = [
        ("A1 tightening", tightening),
        ("A2 vanishing", vanishing),
        ("A3 joining", joining),
        ("A4 strength", strength),
        ("A5 sliding", sliding),
    ];
    let mut report = Vec::new();
    for (name, law) in axioms {
        let (checked, skipped) = suite(name, 200, |seed| {
            let (l, r) = law(seed);
            compare(&l, &r)
        })?;
        report.push(format!("{} {checked}/{skipped}", &name[..2]));
    }
    Ok(format!("checked/skipped per axiom: {}", report.join(", ")))
}

/// Three composable terms `X → Y → Z → W`.
fn chain(g: &mut TermGen) -> (Vec<WireType>, [Term; 3]) {
    let x = g.wires(1);
    let (f, y) = g.gen_from(&x, PART);
    let (h1, z) = g.gen_from(&y, PART);
    let (h2, _) = g.gen_from(&z, PART);
    (x, [f, h1, h2])
}

fn monoidal_law(law: usize, seed: u64) -> (Term, Term) {
    let mut g = gen(seed);
    let (x, [f, h, k]) = chain(&mut g);
    match law {
        0 => (
            Term::seq(Term::seq(f.clone(), h.clone()), k.clone()),
            Term::seq(f, Term::seq(h, k)),
        ),
        1 => (Term::seq(ids(&x), f.clone()), f),
        2 => {
            let (_, y) = mstream::ir::infer_type(&f, sig()).unwrap();
            (Term::seq(f.clone(), ids(&y)), f)
        }
        3 => {
            let x2 = g.wires(1);
            let (f2, y2) = g.gen_from(&x2, PART);
            let (h2, _) = g.gen_from(&y2, PART);
            (
                Term::seq(Term::par(f.clone(), f2.clone()), Term::par(h.clone(), h2.clone())),
                Term::par(Term::seq(f, h), Term::seq(f2, h2)),
            )
        }
        4 => (
            Term::delay(Term::seq(f.clone(), h.clone())),
            Term::seq(Term::delay(f), Term::delay(h)),
        ),
        5 => (
            Term::delay(Term::par(f.clone(), k.clone())),
            Term::par(Term::delay(f), Term::delay(k)),
        ),
        _ => (Term::delay(ids(&x)), ids(&shift(&x, 1))),
    }
}

pub fn monoidal_laws() -> Outcome {
    let names = [
        "associativity",
        "left unit",
        "right unit",
        "interchange",
        "∂ preserves ⨾",
        "∂ preserves ⊗",
        "∂ preserves id",
    ];
    let mut total = 0;
    for (law, name) in names.iter().enumerate() {
        let (checked, _) = suite(name, 30, |seed| {
            let (l, r) = monoidal_law(law, seed);
            compare(&l, &r)
        })?;
        total += checked;
    }
    Ok(format!("{total} term pairs over {} laws", names.len()))
}

pub fn marginalization() -> Outcome {
    let (checked, skipped) = suite("marginalization", 100, |seed| {
        let mut g = gen(seed);
        let (t, _) = g.gen_from(&[], 8);
        let f = match build(&t) {
            Ok(f) => f,
            Err(e) => return Verdict::Differ(e),
        };
        let stages = match observe_all(&f, 4, CAP) {
            Ok(stages) => stages,
            Err(e) if too_large(&e) => return Verdict::TooLarge,
            Err(e) => return Verdict::Differ(e.to_string()),
        };
        for n in 0..=3 {
            if stages[n + 1].truncate(n).as_ref() != Some(&stages[n]) {
                return Verdict::Differ(format!("horizon {n} is not the marginal of {}: {}", n + 1, pretty(&t)));
            }
        }
        Verdict::Equal
    })?;
    Ok(format!("{checked} closed programs, n = 0..3 ({skipped} skipped over cap)"))
}

fn det_vs_exact(seed: u64) -> Verdict {
    let mut g = gen(seed).deterministic_only();
    let x = g.wires(2);
    let (t, _) = g.gen_from(&x, 8);
    let f = match build(&t) {
        Ok(f) => f,
        Err(e) => return Verdict::Differ(e),
    };
    let history: Vec<Vec<Value>> = (0..=HORIZON)
        .map(|i| {
            let choices = f.input().at(i).enumerate(CAP).expect("small shapes");
            choices.choose(g.rng()).expect("inhabited").clone()
        })
        .collect();
    let trace = match run_det(&f, &history, HORIZON) {
        Ok(trace) => trace,
        Err(e) => return Verdict::Differ(format!("run_det: {e} on {}", pretty(&t))),
    };
    let process = match observe(&f, HORIZON, CAP) {
        Ok(p) => p,
        Err(e) if too_large(&e) => return Verdict::TooLarge,
        Err(e) => return Verdict::Differ(e.to_string()),
    };
    let want = Dist::dirac(Value::Tuple(trace.into_iter().map(Value::Tuple).collect()));
    if process.apply(&history) == Some(&want) {
        Verdict::Equal
    } else {
        Verdict::Differ(format!("run_det disagrees with observe on {}", pretty(&t)))
    }
}

pub fn evaluator_oracles() -> Outcome {
    let (checked, skipped) = suite("run_det vs observe", 100, det_vs_exact)?;

    // Sampling against exact marginals of the walk.
    let walk = compile_program("walk");
    let n = 3;
    let trials = 10_000;
    let closed = vec![Vec::new(); n + 1];
    let traces = sample_traces(&walk.stream, &closed, n, 2024, trials).map_err(|e| e.to_string())?;
    let exact = observe(&walk.stream, n, CAP).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for t in 0..=n {
        let marginal = &exact.tick_marginal(t)[&closed];
        for (v, p) in marginal.iter() {
            let hits = traces.iter().filter(|tr| Value::Tuple(tr[t].clone()) == *v).count();
            let p: f64 = num_traits::ToPrimitive::to_f64(p).unwrap();
            let freq = hits as f64 / trials as f64;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let z = if sigma == 0.0 { 0.0 } else { (freq - p).abs() / sigma };
            ensure(sigma > 0.0 || freq == p, || format!("t{t} {v}: point mass violated"))?;
            ensure(z <= 5.0, || format!("t{t} {v}: frequency {freq} vs {p} ({z:.1}σ)"))?;
            worst = worst.max(z);
        }
    }
    Ok(format!(
        "{checked} deterministic terms agree ({skipped} skipped); walk sampling within {worst:.2}σ over {trials} trials"
    ))
}
