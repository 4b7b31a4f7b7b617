use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::syntax::ast::VdmType;

/// Runtime values. The derived ordering (variant rank, then contents) is
/// the canonical order used for deterministic choice.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Set(BTreeSet<Value>),
    Map(BTreeMap<Value, Value>),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn int(v: impl Into<BigInt>) -> Self {
        Value::Int(v.into())
    }

    pub fn set(items: impl IntoIterator<Item = Value>) -> Self {
        Value::Set(items.into_iter().collect())
    }

    pub fn map(pairs: impl IntoIterator<Item = (Value, Value)>) -> Self {
        Value::Map(pairs.into_iter().collect())
    }

    pub fn pair(a: Value, b: Value) -> Self {
        Value::Tuple(vec![a, b])
    }

    /// Packs an argument list: a single argument stands for itself,
    /// several form a tuple.
    pub fn pack(mut args: Vec<Value>) -> Self {
        if args.len() == 1 {
            args.pop().unwrap()
        } else {
            Value::Tuple(args)
        }
    }

    /// Inverse of [`Value::pack`] for a function of `arity` parameters.
    pub fn unpack(&self, arity: usize) -> Vec<Value> {
        match (arity, self) {
            (1, v) => vec![v.clone()],
            (_, Value::Tuple(items)) if items.len() == arity => items.clone(),
            (_, v) => vec![v.clone()],
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_int().and_then(|v| v.to_i64())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    /// Whether the value inhabits `ty` (the VDM type invariant).
    pub fn has_type(&self, ty: &VdmType) -> bool {
        match (ty, self) {
            (VdmType::Nat, Value::Int(v)) => !v.is_negative(),
            (VdmType::Int, Value::Int(_)) => true,
            (VdmType::Bool, Value::Bool(_)) => true,
            (VdmType::SetOf(t), Value::Set(s)) => s.iter().all(|v| v.has_type(t)),
            // An empty set literal is accepted where a map is expected.
            (VdmType::MapOf(..), Value::Set(s)) => s.is_empty(),
            (VdmType::MapOf(d, r), Value::Map(m)) => m.iter().all(|(k, v)| k.has_type(d) && v.has_type(r)),
            (VdmType::Product(ts), Value::Tuple(vs)) => {
                ts.len() == vs.len() && ts.iter().zip(vs).all(|(t, v)| v.has_type(t))
            }
            (VdmType::TypeVar(_) | VdmType::Unknown, _) => true,
            _ => false,
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v.into())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

fn join<T>(f: &mut fmt::Formatter<'_>, items: impl IntoIterator<Item = T>, mut each: impl FnMut(&mut fmt::Formatter<'_>, T) -> fmt::Result) -> fmt::Result {
    for (i, x) in items.into_iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        each(f, x)?;
    }
    Ok(())
}

/// VDM literal syntax, e.g. `{1 |-> 2}` or `mk_(1, {})`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Set(s) => {
                f.write_str("{")?;
                join(f, s, |f, v| write!(f, "{v}"))?;
                f.write_str("}")
            }
            Value::Map(m) if m.is_empty() => f.write_str("{|->}"),
            Value::Map(m) => {
                f.write_str("{")?;
                join(f, m, |f, (k, v)| write!(f, "{k} |-> {v}"))?;
                f.write_str("}")
            }
            Value::Tuple(items) => {
                f.write_str("mk_(")?;
                join(f, items, |f, v| write!(f, "{v}"))?;
                f.write_str(")")
            }
        }
    }
}

impl serde::Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
