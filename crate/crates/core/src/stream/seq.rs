use std::fmt;

use crate::shape::WireShape;

/// An eventually-constant sequence of wire bundles `(X₀, X₁, …)`: an explicit
/// finite prefix followed by a shape repeated forever.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShapeSeq {
    prefix: Vec<WireShape>,
    tail: WireShape,
}

impl ShapeSeq {
    pub fn new(prefix: Vec<WireShape>, tail: WireShape) -> Self {
        let mut seq = ShapeSeq { prefix, tail };
        seq.normalize();
        seq
    }

    pub fn constant(shape: WireShape) -> Self {
        ShapeSeq {
            prefix: Vec::new(),
            tail: shape,
        }
    }

    pub fn unit() -> Self {
        ShapeSeq::constant(WireShape::unit())
    }

    fn normalize(&mut self) {
        while self.prefix.last() == Some(&self.tail) {
            self.prefix.pop();
        }
    }

    /// `X_t`.
    pub fn at(&self, t: usize) -> &WireShape {
        self.prefix.get(t).unwrap_or(&self.tail)
    }

    pub fn head(&self) -> &WireShape {
        self.at(0)
    }

    /// Number of ticks after which the sequence is constant.
    pub fn settles_after(&self) -> usize {
        self.prefix.len()
    }

    /// `(X₁, X₂, …)`.
    pub fn tail(&self) -> ShapeSeq {
        if self.prefix.is_empty() {
            self.clone()
        } else {
            ShapeSeq::new(self.prefix[1..].to_vec(), self.tail.clone())
        }
    }

    /// `(head, R₀, R₁, …)`.
    pub fn cons(head: WireShape, rest: &ShapeSeq) -> ShapeSeq {
        let mut prefix = vec![head];
        prefix.extend(rest.prefix.iter().cloned());
        ShapeSeq::new(prefix, rest.tail.clone())
    }

    /// `∂X = (I, X₀, X₁, …)`.
    pub fn delay(&self) -> ShapeSeq {
        ShapeSeq::cons(WireShape::unit(), self)
    }

    /// `M · X = (M ⊗ X₀, X₁, …)`.
    pub fn act(&self, memory: &WireShape) -> ShapeSeq {
        if memory.is_empty() {
            return self.clone();
        }
        let len = self.prefix.len().max(1);
        let mut prefix: Vec<_> = (0..len).map(|t| self.at(t).clone()).collect();
        prefix[0] = memory.concat(&prefix[0]);
        ShapeSeq::new(prefix, self.tail.clone())
    }

    /// Pointwise tensor `X ⊗ Y`.
    pub fn concat(&self, other: &ShapeSeq) -> ShapeSeq {
        let len = self.prefix.len().max(other.prefix.len());
        let prefix = (0..len).map(|t| self.at(t).concat(other.at(t))).collect();
        ShapeSeq::new(prefix, self.tail.concat(&other.tail))
    }

    /// Removes `front` from the front of every stage; `None` if some stage does
    /// not start with the corresponding stage of `front`.
    pub fn strip_front(&self, front: &ShapeSeq) -> Option<ShapeSeq> {
        let len = self.prefix.len().max(front.prefix.len());
        let strip = |whole: &WireShape, part: &WireShape| {
            (whole.len() >= part.len() && whole.0[..part.len()] == part.0[..])
                .then(|| whole.slice(part.len()..whole.len()))
        };
        let prefix = (0..len)
            .map(|t| strip(self.at(t), front.at(t)))
            .collect::<Option<Vec<_>>>()?;
        let tail = strip(&self.tail, &front.tail)?;
        Some(ShapeSeq::new(prefix, tail))
    }

    /// Agreement on stages `0..=n`.
    pub fn agrees_until(&self, other: &ShapeSeq, n: usize) -> bool {
        (0..=n).all(|t| self.at(t) == other.at(t))
    }
}

impl fmt::Display for ShapeSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for s in &self.prefix {
            write!(f, "{s}, ")?;
        }
        write!(f, "{}…)", self.tail)
    }
}
