//! Wire shapes: finite descriptions of what may travel on a bundle of wires.

use std::fmt;

use num_bigint::BigInt;

use crate::value::Value;

/// The type of a single wire.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseShape {
    Unit,
    Bool,
    /// Unbounded integers. Never enumerable.
    Int,
    /// Integers in `lo..=hi`.
    IntRange(i64, i64),
    /// An explicit, duplicate-free, nonempty value set kept in canonical order.
    FinSet(Vec<Value>),
    /// Tuples whose components have the given shapes.
    Product(Vec<BaseShape>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("empty integer range {0}..{1}")]
    EmptyRange(i64, i64),
    #[error("finite set must be nonempty and duplicate-free")]
    BadFinSet,
    #[error("shape {0} cannot be enumerated")]
    NotEnumerable(String),
    #[error("enumerating {shape} needs more than {cap} elements")]
    TooLarge { shape: String, cap: usize },
}

impl BaseShape {
    pub fn int_range(lo: i64, hi: i64) -> Result<Self, ShapeError> {
        if lo > hi {
            return Err(ShapeError::EmptyRange(lo, hi));
        }
        Ok(BaseShape::IntRange(lo, hi))
    }

    pub fn fin_set(values: impl IntoIterator<Item = Value>) -> Result<Self, ShapeError> {
        let mut values: Vec<Value> = values.into_iter().collect();
        let n = values.len();
        values.sort();
        values.dedup();
        if values.is_empty() || values.len() != n {
            return Err(ShapeError::BadFinSet);
        }
        Ok(BaseShape::FinSet(values))
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (BaseShape::Unit, Value::Unit) => true,
            (BaseShape::Bool, Value::Bool(_)) => true,
            (BaseShape::Int, Value::Int(_)) => true,
            (BaseShape::IntRange(lo, hi), Value::Int(n)) => {
                *n >= BigInt::from(*lo) && *n <= BigInt::from(*hi)
            }
            (BaseShape::FinSet(vs), v) => vs.binary_search(v).is_ok(),
            (BaseShape::Product(parts), Value::Tuple(items)) => {
                parts.len() == items.len() && parts.iter().zip(items).all(|(s, x)| s.contains(x))
            }
            _ => false,
        }
    }

    pub fn is_enumerable(&self) -> bool {
        match self {
            BaseShape::Int => false,
            BaseShape::Product(parts) => parts.iter().all(BaseShape::is_enumerable),
            _ => true,
        }
    }

    /// Number of elements, if enumerable.
    pub fn size(&self) -> Option<u128> {
        match self {
            BaseShape::Unit => Some(1),
            BaseShape::Bool => Some(2),
            BaseShape::Int => None,
            BaseShape::IntRange(lo, hi) => Some((*hi as i128 - *lo as i128 + 1) as u128),
            BaseShape::FinSet(vs) => Some(vs.len() as u128),
            BaseShape::Product(parts) => parts
                .iter()
                .try_fold(1u128, |acc, p| p.size().and_then(|s| acc.checked_mul(s))),
        }
    }

    /// All elements in canonical order.
    pub fn elements(&self, cap: usize) -> Result<Vec<Value>, ShapeError> {
        match self.size() {
            None => return Err(ShapeError::NotEnumerable(self.to_string())),
            Some(n) if n > cap as u128 => {
                return Err(ShapeError::TooLarge {
                    shape: self.to_string(),
                    cap,
                })
            }
            Some(_) => {}
        }
        Ok(match self {
            BaseShape::Unit => vec![Value::Unit],
            BaseShape::Bool => vec![Value::Bool(false), Value::Bool(true)],
            BaseShape::Int => unreachable!(),
            BaseShape::IntRange(lo, hi) => (*lo..=*hi).map(Value::int).collect(),
            BaseShape::FinSet(vs) => vs.clone(),
            BaseShape::Product(parts) => {
                let mut out = vec![Vec::new()];
                for part in parts {
                    let elems = part.elements(cap)?;
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            elems.iter().map(move |e| {
                                let mut next = prefix.clone();
                                next.push(e.clone());
                                next
                            })
                        })
                        .collect();
                }
                out.into_iter().map(Value::Tuple).collect()
            }
        })
    }

    /// Canonically smallest element, when it exists.
    pub fn min_element(&self) -> Option<Value> {
        match self {
            BaseShape::Unit => Some(Value::Unit),
            BaseShape::Bool => Some(Value::Bool(false)),
            BaseShape::Int => None,
            BaseShape::IntRange(lo, _) => Some(Value::int(*lo)),
            BaseShape::FinSet(vs) => vs.first().cloned(),
            BaseShape::Product(parts) => parts
                .iter()
                .map(BaseShape::min_element)
                .collect::<Option<Vec<_>>>()
                .map(Value::Tuple),
        }
    }
}

impl fmt::Display for BaseShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseShape::Unit => f.write_str("unit"),
            BaseShape::Bool => f.write_str("bool"),
            BaseShape::Int => f.write_str("int"),
            BaseShape::IntRange(lo, hi) => write!(f, "{lo}..{hi}"),
            BaseShape::FinSet(vs) => {
                f.write_str("{")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
            BaseShape::Product(parts) => {
                f.write_str("<")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(">")
            }
        }
    }
}

/// A bundle of wires. The empty bundle is the monoidal unit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WireShape(pub Vec<BaseShape>);

impl WireShape {
    pub fn unit() -> Self {
        WireShape(Vec::new())
    }

    pub fn of(bases: impl Into<Vec<BaseShape>>) -> Self {
        WireShape(bases.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &WireShape) -> WireShape {
        let mut wires = self.0.clone();
        wires.extend(other.0.iter().cloned());
        WireShape(wires)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> WireShape {
        WireShape(self.0[range].to_vec())
    }

    pub fn select(&self, indices: &[usize]) -> WireShape {
        WireShape(indices.iter().map(|&i| self.0[i].clone()).collect())
    }

    pub fn contains(&self, tuple: &[Value]) -> bool {
        tuple.len() == self.0.len() && self.0.iter().zip(tuple).all(|(s, v)| s.contains(v))
    }

    pub fn is_enumerable(&self) -> bool {
        self.0.iter().all(BaseShape::is_enumerable)
    }

    pub fn size(&self) -> Option<u128> {
        self.0
            .iter()
            .try_fold(1u128, |acc, s| s.size().and_then(|n| acc.checked_mul(n)))
    }

    /// Every tuple of the bundle, in canonical (lexicographic) order.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<Vec<Value>>, ShapeError> {
        match self.size() {
            None => return Err(ShapeError::NotEnumerable(self.to_string())),
            Some(n) if n > cap as u128 => {
                return Err(ShapeError::TooLarge {
                    shape: self.to_string(),
                    cap,
                })
            }
            Some(_) => {}
        }
        let mut out = vec![Vec::new()];
        for base in &self.0 {
            let elems = base.elements(cap)?;
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    elems.iter().map(move |e| {
                        let mut next = prefix.clone();
                        next.push(e.clone());
                        next
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

impl fmt::Display for WireShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}
