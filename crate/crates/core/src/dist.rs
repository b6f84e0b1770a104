//! Exact finite-support probability distributions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::value::Value;

/// Exact probability. Always kept in lowest terms with a positive denominator.
pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Renders a probability as `"num/den"`, including `"1/1"`.
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rat(src: &str) -> Option<Rat> {
    let (n, d) = src.split_once('/').unwrap_or((src, "1"));
    let n: BigInt = n.trim().parse().ok()?;
    let d: BigInt = d.trim().parse().ok()?;
    (!d.is_zero()).then(|| Rat::new(n, d))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistError {
    #[error("distribution needs a nonempty support")]
    EmptySupport,
    #[error("duplicate support value {0}")]
    DuplicateValue(Value),
    #[error("masses must be positive and sum to 1 (sum was {0})")]
    NotNormalized(String),
    #[error("marginal index {index} out of range for tuples of arity {arity}")]
    BadIndex { index: usize, arity: usize },
    #[error("value {0} is not a tuple")]
    NotATuple(Value),
}

/// A finitely supported distribution over [`Value`]s with exact masses.
///
/// Zero-mass entries never appear and masses sum to exactly one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dist {
    support: BTreeMap<Value, Rat>,
}

impl Dist {
    pub fn dirac(v: Value) -> Self {
        let mut support = BTreeMap::new();
        support.insert(v, Rat::one());
        Dist { support }
    }

    pub fn uniform(vs: impl IntoIterator<Item = Value>) -> Result<Self, DistError> {
        let mut support = BTreeMap::new();
        for v in vs {
            if support.insert(v.clone(), Rat::one()).is_some() {
                return Err(DistError::DuplicateValue(v));
            }
        }
        if support.is_empty() {
            return Err(DistError::EmptySupport);
        }
        let mass = Rat::new(BigInt::one(), BigInt::from(support.len()));
        for p in support.values_mut() {
            *p = mass.clone();
        }
        Ok(Dist { support })
    }

    /// Builds a distribution from weighted entries; duplicates are merged and
    /// zero masses dropped. The total must be exactly one.
    pub fn from_entries(entries: impl IntoIterator<Item = (Value, Rat)>) -> Result<Self, DistError> {
        let mut acc = Accumulator::default();
        for (v, p) in entries {
            if p < Rat::zero() {
                return Err(DistError::NotNormalized(format_rat(&p)));
            }
            acc.add(v, p);
        }
        acc.finish()
    }

    /// Like `from_entries` but rescales positive weights to sum to one.
    pub fn normalized(entries: impl IntoIterator<Item = (Value, Rat)>) -> Result<Self, DistError> {
        let mut acc = Accumulator::default();
        for (v, p) in entries {
            if p < Rat::zero() {
                return Err(DistError::NotNormalized(format_rat(&p)));
            }
            acc.add(v, p);
        }
        let total: Rat = acc.support.values().sum();
        if total.is_zero() {
            return Err(DistError::EmptySupport);
        }
        for p in acc.support.values_mut() {
            *p /= &total;
        }
        acc.finish()
    }

    pub fn prob(&self, v: &Value) -> Rat {
        self.support.get(v).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Value, &Rat)> {
        self.support.iter()
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.support.keys()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_dirac(&self) -> bool {
        self.support.len() == 1
    }

    /// The single support point of a point mass.
    pub fn as_dirac(&self) -> Option<&Value> {
        if self.is_dirac() {
            self.support.keys().next()
        } else {
            None
        }
    }

    /// Smallest support value in canonical order.
    pub fn min_value(&self) -> &Value {
        self.support.keys().next().expect("distributions are never empty")
    }

    pub fn map(&self, mut f: impl FnMut(&Value) -> Value) -> Dist {
        let mut acc = Accumulator::default();
        for (v, p) in &self.support {
            acc.add(f(v), p.clone());
        }
        acc.finish().expect("pushforward preserves mass")
    }

    /// Monadic bind: `Σ_v p(v) · k(v)`.
    pub fn bind<E>(&self, mut k: impl FnMut(&Value) -> Result<Dist, E>) -> Result<Dist, E> {
        if let Some(v) = self.as_dirac() {
            return k(v);
        }
        let mut acc = Accumulator::default();
        for (v, p) in &self.support {
            let next = k(v)?;
            for (w, q) in next.support {
                acc.add(w, q * p);
            }
        }
        Ok(acc.finish().expect("bind preserves mass"))
    }

    /// Product distribution on pairs `(a, b)` as concatenated tuples.
    pub fn product_tuples(&self, other: &Dist) -> Result<Dist, DistError> {
        let mut acc = Accumulator::default();
        for (a, p) in &self.support {
            let a = a.as_tuple().ok_or_else(|| DistError::NotATuple(a.clone()))?;
            for (b, q) in &other.support {
                let b = b.as_tuple().ok_or_else(|| DistError::NotATuple(b.clone()))?;
                let mut joined = a.to_vec();
                joined.extend_from_slice(b);
                acc.add(Value::Tuple(joined), p * q);
            }
        }
        acc.finish()
    }

    /// Pushforward along the projection onto `keep` (indices into each tuple).
    pub fn marginalize(&self, keep: &[usize]) -> Result<Dist, DistError> {
        let mut acc = Accumulator::default();
        for (v, p) in &self.support {
            let items = v.as_tuple().ok_or_else(|| DistError::NotATuple(v.clone()))?;
            let mut projected = Vec::with_capacity(keep.len());
            for &i in keep {
                let item = items.get(i).ok_or(DistError::BadIndex {
                    index: i,
                    arity: items.len(),
                })?;
                projected.push(item.clone());
            }
            acc.add(Value::Tuple(projected), p.clone());
        }
        acc.finish()
    }

    /// Inverse-CDF sampling over the support in canonical order. `draw` is
    /// read as the exact fraction `draw / 2^64`.
    pub fn sample(&self, draw: u64) -> &Value {
        if let Some(v) = self.as_dirac() {
            return v;
        }
        let threshold = Rat::new(BigInt::from(draw), BigInt::one() << 64);
        let mut cumulative = Rat::zero();
        let mut last = None;
        for (v, p) in &self.support {
            cumulative += p;
            if threshold < cumulative {
                return v;
            }
            last = Some(v);
        }
        last.expect("distributions are never empty")
    }

    /// JSON object `{ "<value>": "num/den", ... }` in canonical key order.
    pub fn to_json(&self) -> serde_json::Value {
        let map = self
            .support
            .iter()
            .map(|(v, p)| (v.to_string(), serde_json::Value::String(format_rat(p))))
            .collect();
        serde_json::Value::Object(map)
    }
}

impl std::fmt::Display for Dist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("{")?;
        for (i, (v, p)) in self.support.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}: {p}")?;
        }
        f.write_str("}")
    }
}

/// Sums masses by value; used to assemble results of exact computations.
#[derive(Default, Debug, Clone)]
pub(crate) struct Accumulator {
    support: BTreeMap<Value, Rat>,
}

impl Accumulator {
    pub(crate) fn add(&mut self, v: Value, p: Rat) {
        if p.is_zero() {
            return;
        }
        match self.support.entry(v) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(p);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += p;
            }
        }
    }

    pub(crate) fn finish(mut self) -> Result<Dist, DistError> {
        self.support.retain(|_, p| !p.is_zero());
        let total: Rat = self.support.values().sum();
        if self.support.is_empty() {
            return Err(DistError::EmptySupport);
        }
        if !total.is_one() {
            return Err(DistError::NotNormalized(format_rat(&total)));
        }
        Ok(Dist {
            support: self.support,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|&x| Value::int(x)).collect()
    }

    #[test]
    fn dirac_examples() {
        for v in [
            Value::int(3),
            Value::Unit,
            Value::tuple(vec![Value::int(1), Value::Bool(true)]),
        ] {
            let d = Dist::dirac(v.clone());
            assert_eq!(d.len(), 1);
            assert_eq!(d.prob(&v), Rat::one());
        }
    }

    #[test]
    fn uniform_examples() {
        let d = Dist::uniform(ints(&[-1, 1])).unwrap();
        assert_eq!(d.prob(&Value::int(-1)), rat(1, 2));
        assert_eq!(d.prob(&Value::int(1)), rat(1, 2));
        assert_eq!(Dist::uniform(ints(&[7])).unwrap(), Dist::dirac(Value::int(7)));
        let d = Dist::uniform(ints(&[1, 2, 3, 4])).unwrap();
        assert!(d.iter().all(|(_, p)| *p == rat(1, 4)));
        assert_eq!(Dist::uniform(vec![]), Err(DistError::EmptySupport));
        assert!(matches!(
            Dist::uniform(ints(&[2, 2])),
            Err(DistError::DuplicateValue(_))
        ));
    }

    #[test]
    fn marginal_sums_table() {
        let pair = |a, b| Value::tuple(ints(&[a, b]));
        let d = Dist::from_entries([(pair(0, 0), rat(1, 2)), (pair(1, 1), rat(1, 2))]).unwrap();
        let m = d.marginalize(&[0]).unwrap();
        assert_eq!(m.prob(&Value::tuple(ints(&[0]))), rat(1, 2));
        assert_eq!(m.prob(&Value::tuple(ints(&[1]))), rat(1, 2));
        assert_eq!(d.marginalize(&[0, 1]).unwrap(), d);
        assert!(matches!(d.marginalize(&[2]), Err(DistError::BadIndex { .. })));
    }

    #[test]
    fn sampling_is_inverse_cdf() {
        assert_eq!(*Dist::dirac(Value::int(5)).sample(u64::MAX), Value::int(5));
        let coin = Dist::uniform(ints(&[-1, 1])).unwrap();
        assert_eq!(*coin.sample(0), Value::int(-1));
        assert_eq!(*coin.sample((1 << 63) - 1), Value::int(-1));
        assert_eq!(*coin.sample(1 << 63), Value::int(1));
        assert_eq!(*coin.sample(u64::MAX), Value::int(1));
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(Dist::from_entries([(Value::Unit, rat(1, 2))]).is_err());
        let d = Dist::normalized([(Value::int(0), rat(1, 3)), (Value::int(1), rat(1, 3))]).unwrap();
        assert_eq!(d.prob(&Value::int(0)), rat(1, 2));
    }

    #[test]
    fn json_keys_follow_value_order() {
        let d = Dist::uniform(ints(&[10, -2, 3])).unwrap();
        assert_eq!(
            d.to_json().to_string(),
            r#"{"-2":"1/3","3":"1/3","10":"1/3"}"#
        );
        assert_eq!(parse_rat("3/6"), Some(rat(1, 2)));
    }
}
