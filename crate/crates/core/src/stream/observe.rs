//! Finite observation of streams: n-stage processes, deterministic and sampled
//! execution, and horizon-bounded observational equality.

use std::collections::{BTreeMap, HashMap};

use num_traits::One;
use rayon::prelude::*;

use super::{Stream, StreamError};
use crate::dist::{Dist, Rat};
use crate::kernel::Tuple;
use crate::rng::Draws;
use crate::shape::WireShape;
use crate::value::Value;

/// The joint behaviour of a stream over ticks `0..=horizon`, with the final
/// memory discarded: for every input history `(x₀, …, xₙ)` a distribution over
/// output histories `(y₀, …, yₙ)`.
///
/// Output histories are stored as `Value::Tuple` of per-tick tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NStageProcess {
    horizon: usize,
    inputs: Vec<WireShape>,
    outputs: Vec<WireShape>,
    table: BTreeMap<Vec<Tuple>, Dist>,
}

impl NStageProcess {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn input_shapes(&self) -> &[WireShape] {
        &self.inputs
    }

    pub fn output_shapes(&self) -> &[WireShape] {
        &self.outputs
    }

    pub fn table(&self) -> &BTreeMap<Vec<Tuple>, Dist> {
        &self.table
    }

    /// The output distribution for one input history.
    pub fn apply(&self, inputs: &[Tuple]) -> Option<&Dist> {
        self.table.get(inputs)
    }

    /// Distribution of the outputs at tick `t` alone, per input history.
    pub fn tick_marginal(&self, t: usize) -> BTreeMap<Vec<Tuple>, Dist> {
        self.table
            .iter()
            .map(|(k, d)| {
                let m = d.map(|hist| hist.as_tuple().expect("history")[t].clone());
                (k.clone(), m)
            })
            .collect()
    }

    /// Restricts to the first `k + 1` ticks. Fails (returns `None`) when two
    /// input histories that agree up to `k` induce different marginals, i.e.
    /// when the process is not causal.
    pub fn truncate(&self, k: usize) -> Option<NStageProcess> {
        assert!(k <= self.horizon);
        let mut table: BTreeMap<Vec<Tuple>, Dist> = BTreeMap::new();
        for (inputs, d) in &self.table {
            let m = d.map(|hist| Value::Tuple(hist.as_tuple().expect("history")[..=k].to_vec()));
            let key = inputs[..=k].to_vec();
            match table.get(&key) {
                Some(existing) if *existing != m => return None,
                Some(_) => {}
                None => {
                    table.insert(key, m);
                }
            }
        }
        Some(NStageProcess {
            horizon: k,
            inputs: self.inputs[..=k].to_vec(),
            outputs: self.outputs[..=k].to_vec(),
            table,
        })
    }

    /// `{ "<input history>": { "<output history>": "num/den" } }`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.table
                .iter()
                .map(|(k, d)| {
                    let key = Value::Tuple(k.iter().cloned().map(Value::Tuple).collect());
                    (key.to_string(), d.to_json())
                })
                .collect(),
        )
    }
}

/// Output histories shared by prefix: node `i` is `(parent, y)` and the root
/// (index 0) is the empty history. Equal histories get equal indices.
struct Histories {
    nodes: Vec<(u32, Tuple)>,
    index: HashMap<(u32, Tuple), u32>,
}

impl Histories {
    fn new() -> Self {
        Histories { nodes: vec![(0, Vec::new())], index: HashMap::new() }
    }

    fn push(&mut self, parent: u32, y: &[Value]) -> u32 {
        if let Some(&i) = self.index.get(&(parent, y.to_vec())) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push((parent, y.to_vec()));
        self.index.insert((parent, y.to_vec()), i);
        i
    }

    fn value(&self, mut i: u32) -> Value {
        let mut ys = Vec::new();
        while i != 0 {
            let (parent, y) = &self.nodes[i as usize];
            ys.push(Value::Tuple(y.clone()));
            i = *parent;
        }
        ys.reverse();
        Value::Tuple(ys)
    }
}

type Frontier = BTreeMap<Vec<Tuple>, HashMap<(Tuple, u32), Rat>>;

/// The n-stage truncations of `f` for every horizon `0..=n`, computed in one
/// forward pass over all input histories.
pub fn observe_all(f: &Stream, n: usize, cap: usize) -> Result<Vec<NStageProcess>, StreamError> {
    let mut histories = Histories::new();
    let mut frontier: Frontier = BTreeMap::new();
    frontier.insert(Vec::new(), HashMap::from([((Vec::new(), 0), Rat::one())]));
    let mut stage = f.clone();
    let mut out = Vec::with_capacity(n + 1);
    for t in 0..=n {
        let step = stage.unroll()?;
        let xs = f
            .input()
            .at(t)
            .enumerate(cap)
            .map_err(|e| StreamError::Kernel(e.into()))?;
        let mem_len = step.memory.len();
        // Many histories share a memory state; evaluate each argument once.
        let mut cache: HashMap<Tuple, Dist> = HashMap::new();
        let mut next: Frontier = BTreeMap::new();
        let mut entries = 0usize;
        for (history, states) in &frontier {
            for x in &xs {
                let mut acc: HashMap<(Tuple, u32), Rat> = HashMap::new();
                for ((mem, ys), p) in states {
                    let mut arg = mem.clone();
                    arg.extend_from_slice(x);
                    let d = match cache.get(&arg) {
                        Some(d) => d,
                        None => {
                            let d = step.now.eval(&arg)?;
                            cache.entry(arg).or_insert(d)
                        }
                    };
                    for (v, q) in d.iter() {
                        let items = v.as_tuple().expect("kernel outputs are tuples");
                        let (m, y) = items.split_at(mem_len);
                        let ys = histories.push(*ys, y);
                        *acc.entry((m.to_vec(), ys)).or_default() += p * q;
                    }
                    if entries + acc.len() > cap {
                        return Err(StreamError::StateCapExceeded { size: entries + acc.len(), cap });
                    }
                }
                entries += acc.len();
                let mut h = history.clone();
                h.push(x.clone());
                next.insert(h, acc);
            }
        }
        frontier = next;
        let table = frontier
            .iter()
            .map(|(h, states)| {
                let d = Dist::from_entries(states.iter().map(|((_, ys), p)| (histories.value(*ys), p.clone())))
                    .expect("observation preserves mass");
                (h.clone(), d)
            })
            .collect();
        out.push(NStageProcess {
            horizon: t,
            inputs: (0..=t).map(|i| f.input().at(i).clone()).collect(),
            outputs: (0..=t).map(|i| f.output().at(i).clone()).collect(),
            table,
        });
        stage = step.later.clone();
    }
    Ok(out)
}

/// The n-stage truncation of `f`: unroll `n + 1` ticks, thread the memory
/// through the per-tick kernels and discard it at the end.
pub fn observe(f: &Stream, n: usize, cap: usize) -> Result<NStageProcess, StreamError> {
    Ok(observe_all(f, n, cap)?.pop().expect("horizon 0 is always observed"))
}

fn check_inputs(f: &Stream, inputs: &[Tuple], n: usize) -> Result<(), StreamError> {
    if inputs.len() <= n {
        return Err(StreamError::MissingInputs {
            expected: n + 1,
            found: inputs.len(),
        });
    }
    for (t, x) in inputs.iter().take(n + 1).enumerate() {
        if !f.input().at(t).contains(x) {
            return Err(StreamError::Kernel(crate::kernel::KernelError::OutOfShape {
                value: Value::tuple(x.clone()).to_string(),
                shape: f.input().at(t).clone(),
            }));
        }
    }
    Ok(())
}

/// Tick-by-tick evaluation of a deterministic stream on concrete inputs.
pub fn run_det(f: &Stream, inputs: &[Tuple], n: usize) -> Result<Vec<Tuple>, StreamError> {
    check_inputs(f, inputs, n)?;
    let mut stage = f.clone();
    let mut mem: Tuple = Vec::new();
    let mut trace = Vec::with_capacity(n + 1);
    for (t, x) in inputs.iter().take(n + 1).enumerate() {
        let step = stage.unroll()?;
        if !step.now.is_deterministic() {
            return Err(StreamError::Nondeterministic { tick: t });
        }
        mem.extend_from_slice(x);
        let d = step.now.eval(&mem)?;
        let v = d.as_dirac().ok_or(StreamError::Nondeterministic { tick: t })?;
        let items = v.as_tuple().expect("kernel outputs are tuples");
        let (m, y) = items.split_at(step.memory.len());
        mem = m.to_vec();
        trace.push(y.to_vec());
        stage = step.later.clone();
    }
    Ok(trace)
}

/// One sampled execution. Point masses consume no randomness.
pub fn sample_trace(
    f: &Stream,
    inputs: &[Tuple],
    n: usize,
    draws: &mut Draws,
) -> Result<Vec<Tuple>, StreamError> {
    check_inputs(f, inputs, n)?;
    let mut stage = f.clone();
    let mut mem: Tuple = Vec::new();
    let mut trace = Vec::with_capacity(n + 1);
    for x in inputs.iter().take(n + 1) {
        let step = stage.unroll()?;
        mem.extend_from_slice(x);
        let d = step.now.eval(&mem)?;
        let v = if d.is_dirac() {
            d.min_value()
        } else {
            d.sample(draws.next_word())
        };
        let items = v.as_tuple().expect("kernel outputs are tuples");
        let (m, y) = items.split_at(step.memory.len());
        mem = m.to_vec();
        trace.push(y.to_vec());
        stage = step.later.clone();
    }
    Ok(trace)
}

/// `trials` independent sampled executions; trial `i` draws from
/// `mix(seed, i)`. Results come back in trial order.
pub fn sample_traces(
    f: &Stream,
    inputs: &[Tuple],
    n: usize,
    seed: u64,
    trials: usize,
) -> Result<Vec<Vec<Tuple>>, StreamError> {
    // Unroll once up front so worker threads only read memoised steps.
    f.later_n(n + 1)?;
    (0..trials)
        .into_par_iter()
        .map(|i| sample_trace(f, inputs, n, &mut Draws::for_trial(seed, i as u64)))
        .collect()
}

/// First horizon at which two streams' truncations differ.
#[derive(Clone, Debug)]
pub struct ObsDiff {
    pub horizon: usize,
    pub left: NStageProcess,
    pub right: NStageProcess,
}

/// `None` when `observe(f, k) = observe(g, k)` for every `k ≤ n`.
pub fn obs_diff(f: &Stream, g: &Stream, n: usize, cap: usize) -> Result<Option<ObsDiff>, StreamError> {
    for (what, a, b) in [("inputs", f.input(), g.input()), ("outputs", f.output(), g.output())] {
        if !a.agrees_until(b, n) {
            return Err(StreamError::ShapeMismatch {
                context: if what == "inputs" { "observational equality (inputs)" } else { "observational equality (outputs)" },
                expected: a.to_string(),
                found: b.to_string(),
            });
        }
    }
    let left = observe_all(f, n, cap)?;
    let right = observe_all(g, n, cap)?;
    Ok(left
        .into_iter()
        .zip(right)
        .enumerate()
        .find(|(_, (a, b))| a != b)
        .map(|(horizon, (left, right))| ObsDiff {
            horizon,
            left,
            right,
        }))
}

/// Horizon-bounded observational equality.
pub fn obs_equal(f: &Stream, g: &Stream, n: usize, cap: usize) -> Result<bool, StreamError> {
    Ok(obs_diff(f, g, n, cap)?.is_none())
}
