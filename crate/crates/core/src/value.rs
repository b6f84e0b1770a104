//! Runtime values carried on wires.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

/// A dynamic value.
///
/// The derived ordering is the canonical one used everywhere a deterministic
/// choice has to be made: unit < booleans < integers < tuples, lexicographic
/// inside each class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(BigInt),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Int(BigInt::from(n))
    }

    pub fn tuple(items: impl Into<Vec<Value>>) -> Self {
        Value::Tuple(items.into())
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_int().and_then(|n| n.to_i64())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Value]> {
        match self {
            Value::Tuple(items) => Some(items),
            _ => None,
        }
    }

    /// JSON rendering used in traces: unit is `null`, tuples are arrays.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Unit => serde_json::Value::Null,
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Int(n) => match n.to_i64() {
                Some(small) => serde_json::Value::from(small),
                None => serde_json::Value::String(n.to_string()),
            },
            Value::Tuple(items) => {
                serde_json::Value::Array(items.iter().map(Value::to_json).collect())
            }
        }
    }

    /// Parses the canonical text form produced by `Display`.
    pub fn parse(src: &str) -> Result<Value, ValueParseError> {
        let mut reader = ValueReader {
            chars: src.char_indices().peekable(),
            src,
        };
        let value = reader.value()?;
        reader.skip_ws();
        match reader.chars.peek() {
            None => Ok(value),
            Some(&(at, _)) => Err(ValueParseError { at }),
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::int(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                if items.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed value at byte {at}")]
pub struct ValueParseError {
    pub at: usize,
}

struct ValueReader<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
}

impl ValueReader<'_> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn pos(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn value(&mut self) -> Result<Value, ValueParseError> {
        self.skip_ws();
        let at = self.pos();
        match self.chars.peek().map(|&(_, c)| c) {
            Some('(') => {
                self.chars.next();
                let mut items = Vec::new();
                let mut trailing_comma = false;
                loop {
                    self.skip_ws();
                    if let Some(&(_, ')')) = self.chars.peek() {
                        self.chars.next();
                        break;
                    }
                    items.push(self.value()?);
                    self.skip_ws();
                    match self.chars.next() {
                        Some((_, ',')) => trailing_comma = true,
                        Some((_, ')')) => {
                            trailing_comma = false;
                            break;
                        }
                        Some((i, _)) => return Err(ValueParseError { at: i }),
                        None => return Err(ValueParseError { at: self.src.len() }),
                    }
                }
                Ok(match items.len() {
                    0 => Value::Unit,
                    1 if !trailing_comma => items.pop().unwrap(),
                    _ => Value::Tuple(items),
                })
            }
            Some(c) if c == '-' || c.is_ascii_digit() => {
                let start = at;
                self.chars.next();
                while matches!(self.chars.peek(), Some((_, c)) if c.is_ascii_digit()) {
                    self.chars.next();
                }
                let end = self.pos();
                self.src[start..end]
                    .parse::<BigInt>()
                    .map(Value::Int)
                    .map_err(|_| ValueParseError { at })
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = at;
                while matches!(self.chars.peek(), Some((_, c)) if c.is_ascii_alphanumeric()) {
                    self.chars.next();
                }
                match &self.src[start..self.pos()] {
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    "unit" => Ok(Value::Unit),
                    _ => Err(ValueParseError { at }),
                }
            }
            _ => Err(ValueParseError { at }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_by_class() {
        let mut vs = vec![
            Value::tuple(vec![Value::int(0)]),
            Value::int(-3),
            Value::Bool(true),
            Value::Unit,
            Value::Bool(false),
            Value::int(2),
        ];
        vs.sort();
        assert_eq!(
            vs,
            vec![
                Value::Unit,
                Value::Bool(false),
                Value::Bool(true),
                Value::int(-3),
                Value::int(2),
                Value::tuple(vec![Value::int(0)]),
            ]
        );
    }

    #[test]
    fn text_round_trip() {
        for src in ["()", "true", "-17", "(1,true)", "((1,2),(),false)", "(5,)"] {
            let v = Value::parse(src).unwrap();
            assert_eq!(v.to_string(), src);
        }
        assert_eq!(Value::parse(" ( 1 , 2 ) ").unwrap().to_string(), "(1,2)");
        assert!(Value::parse("(1,").is_err());
        assert!(Value::parse("maybe").is_err());
    }

    #[test]
    fn json_rendering() {
        let v = Value::tuple(vec![Value::Unit, Value::int(3), Value::Bool(true)]);
        assert_eq!(v.to_json().to_string(), "[null,3,true]");
    }
}
