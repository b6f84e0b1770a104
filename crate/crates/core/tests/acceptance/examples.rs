use std::collections::BTreeMap;

use mstream::ir::Signature;
use mstream::lang::{compile_source, parse, Compiled, LangError};
use mstream::rng::Draws;
use mstream::stream::{observe, run_det, sample_trace};
use mstream::{rat, Rat, Value, DEFAULT_STATE_CAP};
use num_traits::{One, Zero};

use crate::{ensure, Outcome};

pub fn program_source(name: &str) -> String {
    let path = format!("{}/../../programs/{name}.ms", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn compile_program(name: &str) -> Compiled {
    compile_source(&program_source(name), None, &Signature::standard()).expect("corpus program compiles")
}

fn closed(n: usize) -> Vec<Vec<Value>> {
    vec![Vec::new(); n + 1]
}

/// Exact distribution of the single output at tick `t`, as integers.
fn int_marginal(c: &Compiled, n: usize, t: usize, project: impl Fn(&Value) -> i64) -> BTreeMap<i64, Rat> {
    let process = observe(&c.stream, n, DEFAULT_STATE_CAP).expect("exact observation");
    let marginal = process.tick_marginal(t);
    let dist = &marginal[&closed(n)];
    let mut out = BTreeMap::new();
    for (v, p) in dist.iter() {
        let y = &v.as_tuple().expect("tick tuple")[0];
        *out.entry(project(y)).or_insert_with(Rat::zero) += p;
    }
    out
}

pub fn fibonacci() -> Outcome {
    let c = compile_program("fib");
    let trace = run_det(&c.stream, &closed(9), 9).map_err(|e| e.to_string())?;
    let got: Vec<i64> = trace.iter().map(|y| y[0].as_i64().unwrap()).collect();
    let want = [0, 1, 1, 2, 3, 5, 8, 13, 21, 34];
    ensure(got == want, || format!("got {got:?}"))?;
    Ok(format!("{got:?}"))
}

/// Brute force over all ±1 step sequences.
fn walk_oracle(t: usize) -> BTreeMap<i64, Rat> {
    let mut out = BTreeMap::new();
    for bits in 0..(1u32 << t) {
        let pos: i64 = (0..t).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).sum();
        *out.entry(pos).or_insert_with(Rat::zero) += rat(1, 1 << t);
    }
    out
}

pub fn random_walk() -> Outcome {
    let c = compile_program("walk");
    for t in 1..=3 {
        let got = int_marginal(&c, 3, t, |v| v.as_i64().unwrap());
        let want = walk_oracle(t);
        ensure(got == want, || format!("t{t}: got {got:?}, want {want:?}"))?;
    }
    let t2 = BTreeMap::from([(-2, rat(1, 4)), (0, rat(1, 2)), (2, rat(1, 4))]);
    ensure(walk_oracle(2) == t2, || "oracle disagrees with the hand-computed t2".into())?;
    Ok("t1..t3 match the binomial oracle".into())
}

/// Urn-1 occupancy after `k` steps from 4 balls in urn 1: `e₄ · Pᵏ` with
/// `P[i][i-1] = i/4`, `P[i][i+1] = (4-i)/4`.
fn ehrenfest_oracle(k: usize) -> BTreeMap<i64, Rat> {
    let mut p = vec![vec![Rat::zero(); 5]; 5];
    for (i, row) in p.iter_mut().enumerate() {
        if i > 0 {
            row[i - 1] = rat(i as i64, 4);
        }
        if i < 4 {
            row[i + 1] = rat(4 - i as i64, 4);
        }
    }
    let mut power: Vec<Vec<Rat>> = (0..5)
        .map(|i| (0..5).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect();
    for _ in 0..k {
        power = (0..5)
            .map(|i| (0..5).map(|j| (0..5).map(|m| &power[i][m] * &p[m][j]).sum()).collect())
            .collect();
    }
    power[4]
        .iter()
        .enumerate()
        .filter(|(_, q)| !q.is_zero())
        .map(|(j, q)| (j as i64, q.clone()))
        .collect()
}

pub fn ehrenfest() -> Outcome {
    let c = compile_program("ehrenfest");
    let first = |v: &Value| v.as_tuple().unwrap()[0].as_i64().unwrap();
    for k in 1..=6 {
        let got = int_marginal(&c, 6, k, first);
        let want = ehrenfest_oracle(k);
        ensure(got == want, || format!("k={k}: got {got:?}, want {want:?}"))?;
    }
    Ok(format!("k=1..6 match; k=6 is {:?}", ehrenfest_oracle(6).values().map(ToString::to_string).collect::<Vec<_>>()))
}

pub fn front_end() -> Outcome {
    for name in ["fib", "walk", "ehrenfest"] {
        let c = compile_program(name);
        let trace = sample_trace(&c.stream, &closed(5), 5, &mut Draws::new(1)).map_err(|e| e.to_string())?;
        ensure(trace.len() == 6, || format!("{name}: short trace"))?;
    }
    match compile_source("x = x + 1\n", None, &Signature::standard()) {
        Err(LangError::Causality { name, .. }) if name == "x" => {}
        other => return Err(format!("`x = x + 1` gave {:?}", other.map(|_| "a stream"))),
    }
    let dir = format!("{}/../../programs", env!("CARGO_MANIFEST_DIR"));
    let mut count = 0;
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_none_or(|e| e != "ms") {
            continue;
        }
        let p = parse(&std::fs::read_to_string(&path).unwrap()).map_err(|e| e.to_string())?;
        let again = parse(&p.to_string()).map_err(|e| format!("{}: reprint fails: {e}", path.display()))?;
        ensure(again == p, || format!("{} does not round-trip", path.display()))?;
        count += 1;
    }
    Ok(format!("3 example programs run, causality rejected, {count} corpus files round-trip"))
}
