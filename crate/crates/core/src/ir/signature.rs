use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::syntax::parse_base;
use crate::dist::{rat, Dist};
use crate::kernel::Kernel;
use crate::shape::{BaseShape, WireShape};
use crate::value::Value;

/// A named generating morphism.
#[derive(Clone, Debug)]
pub struct Generator {
    pub inputs: Vec<BaseShape>,
    pub outputs: Vec<BaseShape>,
    pub kernel: Kernel,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("generator `{0}` does not match its kernel's shapes")]
    ShapeMismatch(String),
    #[error("generator `{0}` is already defined")]
    Duplicate(String),
}

/// Named generators, plus (for the standard signature) a few parametric
/// families whose parameters are spelled inside the name:
///
/// * `unif{lo..hi}` / `unif{v,..}`: `I → int`, uniform on the listed integers;
/// * `tuple<a,b,..>`: packs wires of shapes `a, b, ..` into one product wire;
/// * `widen{lo..hi}` / `widen{{v,..}}`: views a bounded integer wire as `int`.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    gens: BTreeMap<String, Generator>,
    families: bool,
}

fn one(b: BaseShape) -> WireShape {
    WireShape::of(vec![b])
}

fn int_of(v: &Value) -> Result<&BigInt, String> {
    v.as_int().ok_or_else(|| format!("expected an integer, got {v}"))
}

fn bool_of(v: &Value) -> Result<bool, String> {
    v.as_bool().ok_or_else(|| format!("expected a boolean, got {v}"))
}

fn small(v: &Value) -> Result<i64, String> {
    v.as_i64().ok_or_else(|| format!("expected a small integer, got {v}"))
}

fn tup(items: Vec<Value>) -> Value {
    Value::Tuple(items)
}

impl Signature {
    pub fn empty() -> Self {
        Signature::default()
    }

    pub fn insert(
        &mut self,
        name: &str,
        inputs: Vec<BaseShape>,
        outputs: Vec<BaseShape>,
        kernel: Kernel,
    ) -> Result<(), SignatureError> {
        if kernel.input().0 != inputs || kernel.output().0 != outputs {
            return Err(SignatureError::ShapeMismatch(name.to_owned()));
        }
        if self.gens.contains_key(name) {
            return Err(SignatureError::Duplicate(name.to_owned()));
        }
        self.gens.insert(
            name.to_owned(),
            Generator {
                inputs,
                outputs,
                kernel,
            },
        );
        Ok(())
    }

    fn add_fn<F>(&mut self, name: &str, inputs: Vec<BaseShape>, outputs: Vec<BaseShape>, f: F)
    where
        F: Fn(&[Value]) -> Result<Vec<Value>, String> + Send + Sync + 'static,
    {
        let k = Kernel::function(WireShape::of(inputs.clone()), WireShape::of(outputs.clone()), f);
        self.insert(name, inputs, outputs, k).expect("builtin generator");
    }

    fn add_stoch<F>(&mut self, name: &str, inputs: Vec<BaseShape>, outputs: Vec<BaseShape>, f: F)
    where
        F: Fn(&[Value]) -> Result<Dist, String> + Send + Sync + 'static,
    {
        let k = Kernel::stochastic(WireShape::of(inputs.clone()), WireShape::of(outputs.clone()), f);
        self.insert(name, inputs, outputs, k).expect("builtin generator");
    }

    /// Integer arithmetic used by the surface language, plus small generators
    /// on finite shapes used by the law suites.
    pub fn standard() -> Self {
        use BaseShape::{Bool, Int};
        let mut s = Signature {
            gens: BTreeMap::new(),
            families: true,
        };
        let b3 = BaseShape::IntRange(0, 2);

        s.add_fn("plus", vec![Int, Int], vec![Int], |x| Ok(vec![Value::Int(int_of(&x[0])? + int_of(&x[1])?)]));
        s.add_fn("minus", vec![Int, Int], vec![Int], |x| Ok(vec![Value::Int(int_of(&x[0])? - int_of(&x[1])?)]));
        s.add_fn("times", vec![Int, Int], vec![Int], |x| Ok(vec![Value::Int(int_of(&x[0])? * int_of(&x[1])?)]));
        s.add_fn("neg", vec![Int], vec![Int], |x| Ok(vec![Value::Int(-int_of(&x[0])?.clone())]));
        // move(k, set): toggles ball k (1-based) in a bitmask.
        s.add_fn("move", vec![Int, Int], vec![Int], |x| {
            let k = small(&x[0])?;
            if !(1..=62).contains(&k) {
                return Err(format!("move: ball index {k} out of range"));
            }
            let set = int_of(&x[1])?;
            Ok(vec![Value::Int(set ^ (BigInt::one() << (k - 1)))])
        });
        s.add_fn("count", vec![Int], vec![Int], |x| {
            let n = int_of(&x[0])?;
            if n.is_negative() {
                return Err("count: negative bitmask".into());
            }
            Ok(vec![Value::int(n.magnitude().count_ones() as i64)])
        });

        let fair = |a: Value, b: Value| {
            Dist::uniform([tup(vec![a]), tup(vec![b])]).map_err(|e| e.to_string())
        };
        s.add_stoch("coin", vec![], vec![Bool], move |_| fair(Value::Bool(false), Value::Bool(true)));
        s.add_fn("not", vec![Bool], vec![Bool], |x| Ok(vec![Value::Bool(!bool_of(&x[0])?)]));
        s.add_fn("and", vec![Bool, Bool], vec![Bool], |x| {
            Ok(vec![Value::Bool(bool_of(&x[0])? && bool_of(&x[1])?)])
        });
        s.add_fn("xor", vec![Bool, Bool], vec![Bool], |x| {
            Ok(vec![Value::Bool(bool_of(&x[0])? ^ bool_of(&x[1])?)])
        });
        s.add_stoch("flip", vec![Bool], vec![Bool], |x| {
            let b = bool_of(&x[0])?;
            Dist::from_entries([
                (tup(vec![Value::Bool(b)]), rat(2, 3)),
                (tup(vec![Value::Bool(!b)]), rat(1, 3)),
            ])
            .map_err(|e| e.to_string())
        });
        s.add_stoch("die3", vec![], vec![b3.clone()], |_| {
            Dist::uniform((0..3).map(|i| tup(vec![Value::int(i)]))).map_err(|e| e.to_string())
        });
        s.add_fn("inc3", vec![b3.clone()], vec![b3.clone()], |x| Ok(vec![Value::int((small(&x[0])? + 1) % 3)]));
        s.add_fn("add3", vec![b3.clone(), b3.clone()], vec![b3.clone()], |x| {
            Ok(vec![Value::int((small(&x[0])? + small(&x[1])?) % 3)])
        });
        s.add_fn("bool3", vec![b3.clone()], vec![Bool], |x| Ok(vec![Value::Bool(small(&x[0])? == 0)]));
        s.add_fn("zero3", vec![Bool], vec![b3.clone()], |x| Ok(vec![Value::int(bool_of(&x[0])? as i64)]));
        s.add_stoch("bias", vec![Bool], vec![b3.clone()], |x| {
            let entries = if bool_of(&x[0])? {
                vec![(0, rat(1, 2)), (2, rat(1, 2))]
            } else {
                vec![(0, rat(1, 4)), (1, rat(3, 4))]
            };
            Dist::from_entries(entries.into_iter().map(|(v, p)| (tup(vec![Value::int(v)]), p)))
                .map_err(|e| e.to_string())
        });
        s
    }

    /// Names of the fixed (non-parametric) generators.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.gens.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<Generator> {
        if let Some(g) = self.gens.get(name) {
            return Some(g.clone());
        }
        if !self.families {
            return None;
        }
        family(name)
    }
}

fn int_elements(b: &BaseShape) -> Option<Vec<BigInt>> {
    let elems = b.elements(1 << 16).ok()?;
    elems.into_iter().map(|v| v.as_int().cloned()).collect()
}

fn family(name: &str) -> Option<Generator> {
    if let Some(inner) = name.strip_prefix("unif{").and_then(|r| r.strip_suffix('}')) {
        let support = if inner.contains("..") && !inner.contains(',') {
            parse_base(inner).ok()?
        } else {
            parse_base(&format!("{{{inner}}}")).ok()?
        };
        let values = int_elements(&support)?;
        let d = Dist::uniform(values.into_iter().map(|n| Value::Tuple(vec![Value::Int(n)]))).ok()?;
        let kernel = Kernel::stochastic(WireShape::unit(), one(BaseShape::Int), move |_| Ok(d.clone()));
        return Some(Generator {
            inputs: vec![],
            outputs: vec![BaseShape::Int],
            kernel,
        });
    }
    if let Some(inner) = name.strip_prefix("widen{").and_then(|r| r.strip_suffix('}')) {
        let from = parse_base(inner).ok()?;
        int_elements(&from)?;
        let kernel = Kernel::function(one(from.clone()), one(BaseShape::Int), |x| Ok(x.to_vec()));
        return Some(Generator {
            inputs: vec![from],
            outputs: vec![BaseShape::Int],
            kernel,
        });
    }
    if name.starts_with("tuple<") {
        let product = parse_base(&name["tuple".len()..]).ok()?;
        let BaseShape::Product(parts) = product.clone() else {
            return None;
        };
        let kernel = Kernel::function(WireShape::of(parts.clone()), one(product.clone()), |x| {
            Ok(vec![Value::Tuple(x.to_vec())])
        });
        return Some(Generator {
            inputs: parts,
            outputs: vec![product],
            kernel,
        });
    }
    None
}
