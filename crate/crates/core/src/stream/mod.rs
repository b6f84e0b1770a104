//! Monoidal streams.
//!
//! A stream is given coinductively by a memory bundle `M`, a first-tick
//! kernel `now: X₀ → M ⊗ Y₀` and a remaining stream `later: M·X⁺ → Y⁺`.
//! Here the coinduction is a memoised deferred unrolling: asking a [`Stream`]
//! for its [`Step`] computes it once and caches it.
//!
//! Bundles are flat wire lists, so associators and unitors are identities and
//! "`M · X`" just prepends the memory wires to the first stage of `X`. A stream
//! "with memory `A`" is therefore an ordinary stream whose first input stage
//! starts with the `A` wires.

mod observe;
mod seq;

use std::fmt;
use std::sync::{Arc, OnceLock};

pub use observe::{
    obs_diff, obs_equal, observe, observe_all, run_det, sample_trace, sample_traces,
    NStageProcess, ObsDiff,
};
pub use seq::ShapeSeq;

use crate::kernel::{Kernel, KernelError};
use crate::shape::WireShape;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StreamError {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("state cap exceeded: exact observation needs {size} entries (cap {cap})")]
    StateCapExceeded { size: usize, cap: usize },
    #[error("stream is not deterministic at tick {tick}")]
    Nondeterministic { tick: usize },
    #[error("expected {expected} input stages, got {found}")]
    MissingInputs { expected: usize, found: usize },
}

fn mismatch(context: &'static str, expected: impl fmt::Display, found: impl fmt::Display) -> StreamError {
    StreamError::ShapeMismatch {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// One unrolled stage of a stream.
#[derive(Clone, Debug)]
pub struct Step {
    pub memory: WireShape,
    /// `X₀ → memory ⊗ Y₀`, memory wires first.
    pub now: Kernel,
    pub later: Stream,
}

type Thunk = dyn Fn() -> Result<Step, StreamError> + Send + Sync;

struct Node {
    input: ShapeSeq,
    output: ShapeSeq,
    cell: OnceLock<Result<Step, StreamError>>,
    thunk: Box<Thunk>,
}

/// A monoidal stream from `input` to `output`.
#[derive(Clone)]
pub struct Stream(Arc<Node>);

impl Stream {
    /// A stream defined by its unrolling. The thunk runs at most once.
    pub fn from_fn<F>(input: ShapeSeq, output: ShapeSeq, thunk: F) -> Self
    where
        F: Fn() -> Result<Step, StreamError> + Send + Sync + 'static,
    {
        Stream(Arc::new(Node {
            input,
            output,
            cell: OnceLock::new(),
            thunk: Box::new(thunk),
        }))
    }

    pub fn input(&self) -> &ShapeSeq {
        &self.0.input
    }

    pub fn output(&self) -> &ShapeSeq {
        &self.0.output
    }

    /// Memoised unrolling; checks that the step matches the declared shapes.
    pub fn unroll(&self) -> Result<&Step, StreamError> {
        self.0
            .cell
            .get_or_init(|| {
                let mut step = (self.0.thunk)()?;
                self.check_step(&step)?;
                step.now = step.now.pruned();
                Ok(step)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn check_step(&self, step: &Step) -> Result<(), StreamError> {
        if step.now.input() != self.input().head() {
            return Err(mismatch("now input", self.input().head(), step.now.input()));
        }
        let out = step.memory.concat(self.output().head());
        if step.now.output() != &out {
            return Err(mismatch("now output", out, step.now.output()));
        }
        let later_in = self.input().tail().act(&step.memory);
        if step.later.input() != &later_in {
            return Err(mismatch("later input", later_in, step.later.input()));
        }
        if step.later.output() != &self.output().tail() {
            return Err(mismatch("later output", self.output().tail(), step.later.output()));
        }
        Ok(())
    }

    /// Unrolls `n` times and returns the `n`-th remainder.
    pub fn later_n(&self, n: usize) -> Result<Stream, StreamError> {
        let mut s = self.clone();
        for _ in 0..n {
            s = s.unroll()?.later.clone();
        }
        Ok(s)
    }
}

impl fmt::Debug for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Stream({} → {})", self.input(), self.output())
    }
}

/// `M(id) = I`, `now(id) = id`, `later(id) = id`.
pub fn identity(seq: &ShapeSeq) -> Stream {
    let seq = seq.clone();
    Stream::from_fn(seq.clone(), seq.clone(), move || {
        Ok(Step {
            memory: WireShape::unit(),
            now: Kernel::identity(seq.head()),
            later: identity(&seq.tail()),
        })
    })
}

/// The memoryless stream running `kernels[t]` at tick `t` and `tail` from
/// then on.
pub fn lift_seq(kernels: Vec<Kernel>, tail: Kernel) -> Result<Stream, StreamError> {
    let input = ShapeSeq::new(
        kernels.iter().map(|k| k.input().clone()).collect(),
        tail.input().clone(),
    );
    let output = ShapeSeq::new(
        kernels.iter().map(|k| k.output().clone()).collect(),
        tail.output().clone(),
    );
    Ok(lift_unchecked(Arc::from(kernels), tail, input, output))
}

fn lift_unchecked(kernels: Arc<[Kernel]>, tail: Kernel, input: ShapeSeq, output: ShapeSeq) -> Stream {
    Stream::from_fn(input.clone(), output.clone(), move || {
        let (now, rest): (Kernel, Arc<[Kernel]>) = match kernels.split_first() {
            Some((first, rest)) => (first.clone(), Arc::from(rest)),
            None => (tail.clone(), kernels.clone()),
        };
        Ok(Step {
            memory: WireShape::unit(),
            now,
            later: lift_unchecked(rest, tail.clone(), input.tail(), output.tail()),
        })
    })
}

/// The constant memoryless stream of a single kernel.
pub fn lift_const(kernel: Kernel) -> Stream {
    let input = ShapeSeq::constant(kernel.input().clone());
    let output = ShapeSeq::constant(kernel.output().clone());
    lift_unchecked(Arc::from(Vec::new()), kernel, input, output)
}

/// Sequential composition `f ⨾ g`.
pub fn seq_comp(f: &Stream, g: &Stream) -> Result<Stream, StreamError> {
    if f.output() != g.input() {
        return Err(mismatch("sequential composition", f.output(), g.input()));
    }
    Ok(seq_with_memories(f.clone(), 0, g.clone(), 0))
}

/// Sequential composition with memories: `f: A·X → Y` and `g: B·Y → Z`
/// give `(A⊗B)·X → Z`, with `M = M(f) ⊗ M(g)`.
fn seq_with_memories(f: Stream, a: usize, g: Stream, b: usize) -> Stream {
    let f_head = f.input().head().clone();
    let mem_a = f_head.slice(0..a);
    let x0 = f_head.slice(a..f_head.len());
    let mem_b = g.input().head().slice(0..b);
    let input = ShapeSeq::cons(mem_a.concat(&mem_b).concat(&x0), &f.input().tail());
    let output = g.output().clone();
    Stream::from_fn(input, output, move || {
        let sf = f.unroll()?;
        let sg = g.unroll()?;
        let (nx, mf, mg) = (x0.len(), sf.memory.len(), sg.memory.len());
        let y0 = f.output().head().clone();
        let z0 = g.output().head().clone();
        // [A, B, X₀] → [A, X₀, B]
        let front = Kernel::wiring(
            &mem_a.concat(&mem_b).concat(&x0),
            (0..a).chain(a + b..a + b + nx).chain(a..a + b).collect(),
        );
        let run_f = sf.now.tensor(&Kernel::identity(&mem_b));
        // [M_f, Y₀, B] → [B, Y₀, M_f]
        let ny = y0.len();
        let mid_shape = sf.memory.concat(&y0).concat(&mem_b);
        let middle = Kernel::wiring(
            &mid_shape,
            (mf + ny..mf + ny + b).chain(mf..mf + ny).chain(0..mf).collect(),
        );
        let run_g = sg.now.tensor(&Kernel::identity(&sf.memory));
        // [M_g, Z₀, M_f] → [M_f, M_g, Z₀]
        let nz = z0.len();
        let back_shape = sg.memory.concat(&z0).concat(&sf.memory);
        let back = Kernel::wiring(
            &back_shape,
            (mg + nz..mg + nz + mf).chain(0..mg).chain(mg..mg + nz).collect(),
        );
        let now = front
            .compose(&run_f)?
            .compose(&middle)?
            .compose(&run_g)?
            .compose(&back)?;
        Ok(Step {
            memory: sf.memory.concat(&sg.memory),
            now,
            later: seq_with_memories(sf.later.clone(), mf, sg.later.clone(), mg),
        })
    })
}

/// Parallel composition `f ⊗ g`.
pub fn par_comp(f: &Stream, g: &Stream) -> Stream {
    par_with_memories(f.clone(), 0, g.clone(), 0)
}

/// Parallel composition with memories: `f: A·X → Y`, `g: B·X' → Y'` give
/// `(A⊗B)·(X⊗X') → Y⊗Y'`.
fn par_with_memories(f: Stream, a: usize, g: Stream, b: usize) -> Stream {
    let fh = f.input().head().clone();
    let gh = g.input().head().clone();
    let (mem_a, x0) = (fh.slice(0..a), fh.slice(a..fh.len()));
    let (mem_b, x0p) = (gh.slice(0..b), gh.slice(b..gh.len()));
    let head = mem_a.concat(&mem_b).concat(&x0).concat(&x0p);
    let input = ShapeSeq::cons(head.clone(), &f.input().concat(g.input()).tail());
    let output = f.output().concat(g.output());
    Stream::from_fn(input, output, move || {
        let sf = f.unroll()?;
        let sg = g.unroll()?;
        let (nx, nxp) = (x0.len(), x0p.len());
        // [A, B, X₀, X₀'] → [A, X₀, B, X₀']
        let front = Kernel::wiring(
            &head,
            (0..a)
                .chain(a + b..a + b + nx)
                .chain(a..a + b)
                .chain(a + b + nx..a + b + nx + nxp)
                .collect(),
        );
        let both = sf.now.tensor(&sg.now);
        // [M_f, Y₀, M_g, Y₀'] → [M_f, M_g, Y₀, Y₀']
        let (mf, mg) = (sf.memory.len(), sg.memory.len());
        let ny = f.output().head().len();
        let nyp = g.output().head().len();
        let back = Kernel::wiring(
            both.output(),
            (0..mf)
                .chain(mf + ny..mf + ny + mg)
                .chain(mf..mf + ny)
                .chain(mf + ny + mg..mf + ny + mg + nyp)
                .collect(),
        );
        Ok(Step {
            memory: sf.memory.concat(&sg.memory),
            now: front.compose(&both)?.compose(&back)?,
            later: par_with_memories(sf.later.clone(), mf, sg.later.clone(), mg),
        })
    })
}

/// The delay functor: `M(∂f) = I`, `now(∂f) = id_I`, `later(∂f) = f`.
pub fn delay(f: &Stream) -> Stream {
    let f = f.clone();
    Stream::from_fn(f.input().delay(), f.output().delay(), move || {
        Ok(Step {
            memory: WireShape::unit(),
            now: Kernel::identity(&WireShape::unit()),
            later: f.clone(),
        })
    })
}

/// Delayed feedback. `f: ∂S ⊗ X → S ⊗ Y` becomes `X → Y`; the `S` output of
/// each tick is kept as memory and enters the `∂S` input on the next tick.
pub fn fbk(f: &Stream, s: &ShapeSeq) -> Result<Stream, StreamError> {
    let input = f
        .input()
        .strip_front(&s.delay())
        .ok_or_else(|| mismatch("feedback input", s.delay(), f.input()))?;
    let output = f
        .output()
        .strip_front(s)
        .ok_or_else(|| mismatch("feedback output", s, f.output()))?;
    Ok(fbk_unchecked(f.clone(), s.clone(), input, output))
}

fn fbk_unchecked(f: Stream, s: ShapeSeq, input: ShapeSeq, output: ShapeSeq) -> Stream {
    Stream::from_fn(input.clone(), output.clone(), move || {
        let sf = f.unroll()?;
        let memory = sf.memory.concat(s.head());
        let later_input = input.tail().act(&memory);
        Ok(Step {
            memory,
            now: sf.now.clone(),
            later: fbk_unchecked(sf.later.clone(), s.tail(), later_input, output.tail()),
        })
    })
}

/// The symmetry `σ: X ⊗ Y → Y ⊗ X` as a memoryless stream.
pub fn sym(x: &ShapeSeq, y: &ShapeSeq) -> Stream {
    let n = x.settles_after().max(y.settles_after());
    let kernels = (0..n).map(|t| Kernel::swap(x.at(t), y.at(t))).collect();
    lift_seq(kernels, Kernel::swap(x.at(n), y.at(n))).expect("swap kernels line up")
}

/// `wait = fbk(σ_{∂X, X})`: emits nothing at tick 0 and then the previous
/// input.
pub fn wait(x: &ShapeSeq) -> Stream {
    fbk(&sym(&x.delay(), x), x).expect("wait is well typed")
}

/// The two ports of the "followed by" isomorphism `X₀ · ∂(tail X) → X`:
/// the first carries only `X₀`, the second carries `X₁, X₂, …` one tick late.
pub fn fby_ports(x: &ShapeSeq) -> (ShapeSeq, ShapeSeq) {
    (
        ShapeSeq::new(vec![x.head().clone()], WireShape::unit()),
        x.tail().delay(),
    )
}

/// The "followed by" box. Memoryless: tick 0 passes the first port, later
/// ticks pass the second.
pub fn fby_box(x: &ShapeSeq) -> Stream {
    let (first, rest) = fby_ports(x);
    let input = first.concat(&rest);
    let n = input.settles_after().max(1);
    let kernels = (0..n).map(|t| Kernel::identity(input.at(t))).collect();
    lift_seq(kernels, Kernel::identity(input.at(n))).expect("identity kernels line up")
}

/// Keeps only the first stage of a sequence: identity at tick 0, discard
/// afterwards. Feeds the first port of [`fby_box`] from a full stream.
pub fn first_only(x: &ShapeSeq) -> Stream {
    let n = x.settles_after().max(1);
    let mut kernels = vec![Kernel::identity(x.head())];
    kernels.extend((1..n).map(|t| Kernel::discard(x.at(t))));
    lift_seq(kernels, Kernel::discard(x.at(n))).expect("discard kernels line up")
}

/// The one-place buffer `register = fby ∘ (id ⊗ wait)` on a constant bundle:
/// tick 0 stores `b₀` and emits `a₀`; tick `t` stores `bₜ` and emits the
/// stored value.
pub fn register(x: &WireShape) -> Stream {
    let seq = ShapeSeq::constant(x.clone());
    let x = x.clone();
    Stream::from_fn(seq.concat(&seq), seq, move || {
        // [a, b] → [b, a]
        Ok(Step {
            memory: x.clone(),
            now: Kernel::swap(&x, &x),
            later: register_running(&x),
        })
    })
}

fn register_running(x: &WireShape) -> Stream {
    let n = x.len();
    let seq = ShapeSeq::constant(x.clone());
    let input = seq.concat(&seq).act(x);
    let x = x.clone();
    Stream::from_fn(input, seq, move || {
        // [m, a, b] → [b, m]
        let shape = x.concat(&x).concat(&x);
        Ok(Step {
            memory: x.clone(),
            now: Kernel::wiring(&shape, (2 * n..3 * n).chain(0..n).collect()),
            later: register_running(&x),
        })
    })
}
