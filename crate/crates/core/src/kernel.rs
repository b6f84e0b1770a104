//! One-tick stochastic kernels: the morphisms of the base category.
//!
//! A [`Kernel`] maps every input tuple of its input [`WireShape`] to an exact
//! [`Dist`] over output tuples. Kernels are immutable and cheap to clone;
//! composites are evaluated on demand and can be materialised into a table
//! whenever the input shape is enumerable.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::dist::{Dist, DistError};
use crate::shape::{ShapeError, WireShape};
use crate::value::Value;

/// Default bound on the number of entries any exact computation may touch.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: WireShape, found: WireShape },
    #[error("tuple {value} does not inhabit {shape}")]
    OutOfShape { value: String, shape: WireShape },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("{0}")]
    Rule(String),
}

pub type Tuple = Vec<Value>;

type RuleFn = dyn Fn(&[Value]) -> Result<Dist, String> + Send + Sync;

enum Body {
    /// Dirac kernel copying input wire `map[i]` to output wire `i`.
    Wiring(Vec<usize>),
    Table(BTreeMap<Tuple, Dist>),
    Rule(Box<RuleFn>),
    Compose(Kernel, Kernel),
    Tensor(Kernel, Kernel),
    Triangle(Kernel, Kernel),
}

#[derive(Clone)]
pub struct Kernel {
    input: WireShape,
    output: WireShape,
    deterministic: bool,
    body: Arc<Body>,
}

fn tuple_of(v: &Value) -> &[Value] {
    v.as_tuple().expect("kernel outputs are tuples")
}

impl Kernel {
    fn new(input: WireShape, output: WireShape, deterministic: bool, body: Body) -> Self {
        Kernel {
            input,
            output,
            deterministic,
            body: Arc::new(body),
        }
    }

    pub fn input(&self) -> &WireShape {
        &self.input
    }

    pub fn output(&self) -> &WireShape {
        &self.output
    }

    /// True when the kernel is known to be Dirac on every input.
    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    /// A Dirac kernel that rewires its inputs: output `i` is input `map[i]`.
    /// Identities, copies, discards, symmetries and projections are all wirings.
    pub fn wiring(input: &WireShape, map: Vec<usize>) -> Self {
        assert!(map.iter().all(|&i| i < input.len()), "wiring index out of range");
        let output = input.select(&map);
        Kernel::new(input.clone(), output, true, Body::Wiring(map))
    }

    pub fn identity(shape: &WireShape) -> Self {
        Kernel::wiring(shape, (0..shape.len()).collect())
    }

    pub fn copy(shape: &WireShape) -> Self {
        let n = shape.len();
        Kernel::wiring(shape, (0..n).chain(0..n).collect())
    }

    pub fn discard(shape: &WireShape) -> Self {
        Kernel::wiring(shape, Vec::new())
    }

    /// `a ⊗ b → b ⊗ a`.
    pub fn swap(a: &WireShape, b: &WireShape) -> Self {
        let (n, m) = (a.len(), b.len());
        Kernel::wiring(&a.concat(b), (n..n + m).chain(0..n).collect())
    }

    /// The kernel from the unit bundle that always emits `values`.
    pub fn constant(output: WireShape, values: Tuple) -> Result<Self, KernelError> {
        if !output.contains(&values) {
            return Err(KernelError::OutOfShape {
                value: Value::Tuple(values).to_string(),
                shape: output,
            });
        }
        let out = Dist::dirac(Value::Tuple(values));
        Ok(Kernel::new(
            WireShape::unit(),
            output,
            true,
            Body::Rule(Box::new(move |_| Ok(out.clone()))),
        ))
    }

    /// A deterministic kernel given by a function on tuples.
    pub fn function<F>(input: WireShape, output: WireShape, f: F) -> Self
    where
        F: Fn(&[Value]) -> Result<Tuple, String> + Send + Sync + 'static,
    {
        Kernel::new(
            input,
            output,
            true,
            Body::Rule(Box::new(move |x| f(x).map(|y| Dist::dirac(Value::Tuple(y))))),
        )
    }

    /// A stochastic kernel given by a function returning distributions over
    /// output tuples (as `Value::Tuple`s).
    pub fn stochastic<F>(input: WireShape, output: WireShape, f: F) -> Self
    where
        F: Fn(&[Value]) -> Result<Dist, String> + Send + Sync + 'static,
    {
        Kernel::new(input, output, false, Body::Rule(Box::new(f)))
    }

    /// A kernel given by an explicit table, which must be total over the
    /// enumeration of `input`.
    pub fn from_table(
        input: WireShape,
        output: WireShape,
        table: BTreeMap<Tuple, Dist>,
    ) -> Result<Self, KernelError> {
        let rows = input.enumerate(DEFAULT_STATE_CAP)?;
        if rows.len() != table.len() || rows.iter().any(|r| !table.contains_key(r)) {
            return Err(KernelError::Rule(format!(
                "table is not total over {input}"
            )));
        }
        for dist in table.values() {
            for y in dist.values() {
                let ok = y.as_tuple().is_some_and(|t| output.contains(t));
                if !ok {
                    return Err(KernelError::OutOfShape {
                        value: y.to_string(),
                        shape: output,
                    });
                }
            }
        }
        let deterministic = table.values().all(Dist::is_dirac);
        Ok(Kernel::new(input, output, deterministic, Body::Table(table)))
    }

    /// Sequential composition `self ⨾ next`:
    /// `(f ⨾ g)(z|x) = Σ_y g(z|y) f(y|x)`.
    pub fn compose(&self, next: &Kernel) -> Result<Kernel, KernelError> {
        if self.output != next.input {
            return Err(KernelError::ShapeMismatch {
                expected: self.output.clone(),
                found: next.input.clone(),
            });
        }
        Ok(self.compose_unchecked(next))
    }

    fn compose_unchecked(&self, next: &Kernel) -> Kernel {
        // Collapse adjacent wirings so permutation-heavy composites stay shallow.
        if let (Body::Wiring(a), Body::Wiring(b)) = (&*self.body, &*next.body) {
            let map = b.iter().map(|&i| a[i]).collect();
            return Kernel::wiring(&self.input, map);
        }
        if let Body::Wiring(b) = &*next.body {
            if b.len() == self.output.len() && b.iter().enumerate().all(|(i, &j)| i == j) {
                return self.clone();
            }
        }
        if let Body::Wiring(a) = &*self.body {
            if a.len() == self.input.len() && a.iter().enumerate().all(|(i, &j)| i == j) {
                return next.clone();
            }
        }
        Kernel::new(
            self.input.clone(),
            next.output.clone(),
            self.deterministic && next.deterministic,
            Body::Compose(self.clone(), next.clone()),
        )
    }

    /// Monoidal product on disjoint wires:
    /// `(f⊗g)((y,y')|(x,x')) = f(y|x) · g(y'|x')`.
    pub fn tensor(&self, other: &Kernel) -> Kernel {
        if let (Body::Wiring(a), Body::Wiring(b)) = (&*self.body, &*other.body) {
            let n = self.input.len();
            let map = a.iter().copied().chain(b.iter().map(|&i| i + n)).collect();
            return Kernel::wiring(&self.input.concat(&other.input), map);
        }
        Kernel::new(
            self.input.concat(&other.input),
            self.output.concat(&other.output),
            self.deterministic && other.deterministic,
            Body::Tensor(self.clone(), other.clone()),
        )
    }

    /// The triangle composite `f ◁ g` for `f: A → X` and `g: X ⊗ A → Y`:
    /// copy `A`, run `f`, copy its output and feed `(X, A)` to `g`;
    /// the result is `A → X ⊗ Y`.
    pub fn triangle(&self, g: &Kernel) -> Result<Kernel, KernelError> {
        let expected = self.output.concat(&self.input);
        if g.input != expected {
            return Err(KernelError::ShapeMismatch {
                expected,
                found: g.input.clone(),
            });
        }
        Ok(Kernel::new(
            self.input.clone(),
            self.output.concat(&g.output),
            self.deterministic && g.deterministic,
            Body::Triangle(self.clone(), g.clone()),
        ))
    }

    /// Evaluates the kernel on a tuple, checking that it inhabits the input
    /// shape.
    pub fn apply(&self, x: &[Value]) -> Result<Dist, KernelError> {
        if !self.input.contains(x) {
            return Err(KernelError::OutOfShape {
                value: Value::tuple(x.to_vec()).to_string(),
                shape: self.input.clone(),
            });
        }
        self.eval(x)
    }

    /// Evaluates without the input membership check.
    pub(crate) fn eval(&self, x: &[Value]) -> Result<Dist, KernelError> {
        match &*self.body {
            Body::Wiring(map) => Ok(Dist::dirac(Value::Tuple(
                map.iter().map(|&i| x[i].clone()).collect(),
            ))),
            Body::Table(table) => table.get(x).cloned().ok_or_else(|| KernelError::OutOfShape {
                value: Value::tuple(x.to_vec()).to_string(),
                shape: self.input.clone(),
            }),
            Body::Rule(f) => {
                let d = f(x).map_err(KernelError::Rule)?;
                for y in d.values() {
                    if !y.as_tuple().is_some_and(|t| self.output.contains(t)) {
                        return Err(KernelError::OutOfShape {
                            value: y.to_string(),
                            shape: self.output.clone(),
                        });
                    }
                }
                Ok(d)
            }
            Body::Compose(..) => {
                // Push forward stage by stage so equal intermediate tuples
                // merge before the next kernel runs.
                let mut stages = Vec::new();
                self.compose_chain(&mut stages);
                let (first, rest) = stages.split_first().expect("a composite has stages");
                let mut d = first.eval(x)?;
                for k in rest {
                    d = d.bind(|y| k.eval(tuple_of(y)))?;
                }
                Ok(d)
            }
            Body::Tensor(f, g) => {
                let (left, right) = x.split_at(f.input.len());
                let a = f.eval(left)?;
                let b = g.eval(right)?;
                if let (Some(a), Some(b)) = (a.as_dirac(), b.as_dirac()) {
                    let mut joined = tuple_of(a).to_vec();
                    joined.extend_from_slice(tuple_of(b));
                    return Ok(Dist::dirac(Value::Tuple(joined)));
                }
                Ok(a.product_tuples(&b)?)
            }
            Body::Triangle(f, g) => f.eval(x)?.bind(|xv| {
                let xs = tuple_of(xv);
                let mut arg = xs.to_vec();
                arg.extend_from_slice(x);
                let ys = g.eval(&arg)?;
                Ok(ys.map(|y| {
                    let mut out = xs.to_vec();
                    out.extend_from_slice(tuple_of(y));
                    Value::Tuple(out)
                }))
            }),
        }
    }

    /// An equivalent kernel that skips work whose results are discarded.
    ///
    /// Discarding is natural for total kernels, so any sub-kernel whose
    /// outputs are never read can be dropped, and tensors and composites
    /// only compute the wires that reach the output.
    pub fn pruned(&self) -> Kernel {
        let all: Vec<usize> = (0..self.output.len()).collect();
        let (reads, k) = self.prune(&all);
        if reads.len() == self.input.len() {
            return k;
        }
        Kernel::wiring(&self.input, reads).compose_unchecked(&k)
    }

    /// Restricts to the sorted output indices `needed`. Returns the sorted
    /// input indices actually read and a kernel from exactly those inputs.
    fn prune(&self, needed: &[usize]) -> (Vec<usize>, Kernel) {
        let unit = WireShape::unit();
        if needed.is_empty() {
            return (Vec::new(), Kernel::identity(&unit));
        }
        let everything = needed.len() == self.output.len();
        match &*self.body {
            Body::Wiring(map) => {
                let mut reads: Vec<usize> = needed.iter().map(|&i| map[i]).collect();
                reads.sort_unstable();
                reads.dedup();
                let local = needed
                    .iter()
                    .map(|&i| reads.binary_search(&map[i]).expect("read"))
                    .collect();
                let k = Kernel::wiring(&self.input.select(&reads), local);
                (reads, k)
            }
            Body::Tensor(f, g) => {
                let nf = f.output.len();
                let (left, right): (Vec<usize>, Vec<usize>) = needed.iter().partition(|&&i| i < nf);
                let right: Vec<usize> = right.iter().map(|i| i - nf).collect();
                let (rf, kf) = f.prune(&left);
                let (rg, kg) = g.prune(&right);
                let offset = f.input.len();
                let reads = rf.into_iter().chain(rg.into_iter().map(|i| i + offset)).collect();
                (reads, kf.tensor(&kg))
            }
            Body::Compose(f, g) => {
                let (rg, kg) = g.prune(needed);
                let (rf, kf) = f.prune(&rg);
                (rf, kf.compose_unchecked(&kg))
            }
            _ if everything => ((0..self.input.len()).collect(), self.clone()),
            _ => {
                let project = Kernel::wiring(&self.output, needed.to_vec());
                ((0..self.input.len()).collect(), self.compose_unchecked(&project))
            }
        }
    }

    fn compose_chain<'k>(&'k self, out: &mut Vec<&'k Kernel>) {
        match &*self.body {
            Body::Compose(f, g) => {
                f.compose_chain(out);
                g.compose_chain(out);
            }
            _ => out.push(self),
        }
    }

    /// Materialises the kernel as a total table over its input shape.
    pub fn table(&self, cap: usize) -> Result<BTreeMap<Tuple, Dist>, KernelError> {
        let rows = self.input.enumerate(cap)?;
        let mut table = BTreeMap::new();
        let mut entries = 0usize;
        for row in rows {
            let d = self.eval(&row)?;
            entries += d.len();
            if entries > cap {
                return Err(ShapeError::TooLarge {
                    shape: format!("table of {} → {}", self.input, self.output),
                    cap,
                }
                .into());
            }
            table.insert(row, d);
        }
        Ok(table)
    }

    /// Exact table equality (shapes included).
    pub fn same_as(&self, other: &Kernel) -> Result<bool, KernelError> {
        if self.input != other.input || self.output != other.output {
            return Ok(false);
        }
        Ok(self.table(DEFAULT_STATE_CAP)? == other.table(DEFAULT_STATE_CAP)?)
    }

    /// Whether every row of the table is a point mass (checked exhaustively).
    pub fn is_dirac_everywhere(&self) -> Result<bool, KernelError> {
        Ok(self.table(DEFAULT_STATE_CAP)?.values().all(Dist::is_dirac))
    }

    /// Splits `f: A → X ⊗ Y` (with `x_len` wires in `X`) into its `X`-marginal
    /// `f_Y: A → X` and a conditional `c_f: X ⊗ A → Y` with
    /// `f = f_Y ◁ c_f`.
    ///
    /// `c_f(y|x,a) = f(x,y|a) / Σ_y f(x,y|a)` when the denominator is positive,
    /// otherwise the point mass at the canonically smallest `y`.
    pub fn conditional(&self, x_len: usize) -> Result<(Kernel, Kernel), KernelError> {
        if x_len > self.output.len() {
            return Err(KernelError::Dist(DistError::BadIndex {
                index: x_len,
                arity: self.output.len(),
            }));
        }
        let x_shape = self.output.slice(0..x_len);
        let y_shape = self.output.slice(x_len..self.output.len());
        let marginal = self.compose_unchecked(&Kernel::wiring(&self.output, (0..x_len).collect()));
        let fallback = y_shape
            .0
            .iter()
            .map(|b| b.min_element())
            .collect::<Option<Vec<_>>>();
        let f = self.clone();
        let a_len = self.input.len();
        let rule = move |xa: &[Value]| -> Result<Dist, String> {
            let (x, a) = xa.split_at(xa.len() - a_len);
            let joint = f.eval(a).map_err(|e| e.to_string())?;
            let slice: Vec<_> = joint
                .iter()
                .filter_map(|(v, p)| {
                    let t = tuple_of(v);
                    (t[..x_len] == *x).then(|| (Value::Tuple(t[x_len..].to_vec()), p.clone()))
                })
                .collect();
            if slice.is_empty() {
                let y0 = fallback
                    .clone()
                    .ok_or_else(|| "conditional needs a smallest element of Y".to_string())?;
                return Ok(Dist::dirac(Value::Tuple(y0)));
            }
            Dist::normalized(slice).map_err(|e| e.to_string())
        };
        let cond = Kernel::new(
            x_shape.concat(&self.input),
            y_shape,
            self.deterministic,
            Body::Rule(Box::new(rule)),
        );
        Ok((marginal, cond))
    }

    /// The deterministic range `r_f: A ⊗ B → A ⊗ B` of `f: A → B`: keeps
    /// `(a, b)` when `f(b|a) > 0` and otherwise replaces `b` by the
    /// canonically smallest `b` in the support of `f(·|a)`.
    pub fn range(&self) -> Kernel {
        let f = self.clone();
        let a_len = self.input.len();
        let shape = self.input.concat(&self.output);
        Kernel::function(shape.clone(), shape, move |ab| {
            let (a, b) = ab.split_at(a_len);
            let d = f.eval(a).map_err(|e| e.to_string())?;
            let b = Value::Tuple(b.to_vec());
            let kept = if d.prob(&b).is_zero() {
                d.min_value().clone()
            } else {
                b
            };
            let mut out = a.to_vec();
            out.extend_from_slice(tuple_of(&kept));
            Ok(out)
        })
    }

    /// `{ "<input tuple>": { "<output tuple>": "num/den" } }`.
    pub fn to_json(&self, cap: usize) -> Result<serde_json::Value, KernelError> {
        let table = self.table(cap)?;
        Ok(serde_json::Value::Object(
            table
                .into_iter()
                .map(|(k, d)| (Value::Tuple(k).to_string(), d.to_json()))
                .collect(),
        ))
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &*self.body {
            Body::Wiring(map) => format!("wiring{map:?}"),
            Body::Table(_) => "table".into(),
            Body::Rule(_) => "rule".into(),
            Body::Compose(..) => "compose".into(),
            Body::Tensor(..) => "tensor".into(),
            Body::Triangle(..) => "triangle".into(),
        };
        write!(f, "Kernel({} → {}, {kind})", self.input, self.output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::rat;
    use crate::shape::BaseShape;

    fn bits() -> WireShape {
        WireShape::of(vec![BaseShape::IntRange(0, 1)])
    }

    fn coin() -> Kernel {
        let d = Dist::uniform(vec![Value::tuple(vec![Value::int(0)]), Value::tuple(vec![Value::int(1)])])
            .unwrap();
        Kernel::stochastic(WireShape::unit(), bits(), move |_| Ok(d.clone()))
    }

    fn succ() -> Kernel {
        Kernel::function(bits(), WireShape::of(vec![BaseShape::IntRange(1, 2)]), |x| {
            Ok(vec![Value::Int(x[0].as_int().unwrap() + 1)])
        })
    }

    fn single(n: i64) -> Value {
        Value::tuple(vec![Value::int(n)])
    }

    #[test]
    fn compose_sums_over_middle() {
        let k = coin().compose(&succ()).unwrap();
        let d = k.apply(&[]).unwrap();
        assert_eq!(d.prob(&single(1)), rat(1, 2));
        assert_eq!(d.prob(&single(2)), rat(1, 2));
        assert!(!k.is_deterministic());
        assert!(matches!(
            succ().compose(&succ()),
            Err(KernelError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn coin_then_discard_is_dirac_unit() {
        let k = coin().compose(&Kernel::discard(&bits())).unwrap();
        assert_eq!(k.apply(&[]).unwrap(), Dist::dirac(Value::tuple(vec![])));
    }

    #[test]
    fn tensor_of_coins_is_uniform_on_pairs() {
        let k = coin().tensor(&coin());
        let d = k.apply(&[]).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.iter().all(|(_, p)| *p == rat(1, 4)));
    }

    #[test]
    fn wiring_collapses() {
        let s = WireShape::of(vec![BaseShape::Bool, BaseShape::Unit]);
        let sw = Kernel::swap(&s.slice(0..1), &s.slice(1..2));
        let back = Kernel::swap(&s.slice(1..2), &s.slice(0..1));
        let k = sw.compose(&back).unwrap();
        assert!(k.same_as(&Kernel::identity(&s)).unwrap());
        assert!(matches!(&*k.body, Body::Wiring(_)));
    }

    #[test]
    fn copy_on_bool() {
        let b = WireShape::of(vec![BaseShape::Bool]);
        let d = Kernel::copy(&b).apply(&[Value::Bool(true)]).unwrap();
        assert_eq!(d, Dist::dirac(Value::tuple(vec![Value::Bool(true), Value::Bool(true)])));
    }

    #[test]
    fn apply_rejects_foreign_tuples() {
        assert!(matches!(
            succ().apply(&[Value::int(5)]),
            Err(KernelError::OutOfShape { .. })
        ));
    }

    #[test]
    fn dirac_pair_conditional() {
        // a ↦ (a, a+1)
        let f = Kernel::function(
            bits(),
            WireShape::of(vec![BaseShape::IntRange(0, 1), BaseShape::IntRange(1, 2)]),
            |a| Ok(vec![a[0].clone(), Value::Int(a[0].as_int().unwrap() + 1)]),
        );
        let (marginal, cond) = f.conditional(1).unwrap();
        assert!(marginal.same_as(&Kernel::identity(&bits())).unwrap());
        for a in 0..2 {
            let d = cond.apply(&[Value::int(a), Value::int(a)]).unwrap();
            assert_eq!(d, Dist::dirac(single(a + 1)));
        }
        // off-support x falls back to the smallest y
        let d = cond.apply(&[Value::int(1), Value::int(0)]).unwrap();
        assert_eq!(d, Dist::dirac(single(1)));
        assert!(marginal.triangle(&cond).unwrap().same_as(&f).unwrap());
    }

    #[test]
    fn range_of_dirac() {
        let g = succ();
        let r = g.range();
        assert!(r.is_deterministic());
        for a in 0..2 {
            for b in 1..3 {
                let d = r.apply(&[Value::int(a), Value::int(b)]).unwrap();
                let expected = if b == a + 1 { b } else { a + 1 };
                assert_eq!(d, Dist::dirac(Value::tuple(vec![Value::int(a), Value::int(expected)])));
            }
        }
    }
}
