//! Finite carriers for bounded enumeration of typed binders.

use num_bigint::BigInt;
use thiserror::Error;

use crate::interp::value::Value;
use crate::syntax::ast::VdmType;

/// Default cap on enumerated assignments.
pub const DEFAULT_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UniverseError {
    #[error("universe too large: {count} assignments exceed the cap of {cap}")]
    TooLarge { count: u128, cap: u64 },
    #[error("type {0} cannot be enumerated")]
    NotEnumerable(String),
}

/// Bounds used to turn types into finite value sets. Numbers range over
/// `int_lo..=int_hi` (the non-negative part for `nat`); sets are all
/// subsets of `base_set`; maps are all partial maps from `base_set` to
/// `map_values`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Universe {
    pub int_lo: i64,
    pub int_hi: i64,
    pub base_set: Vec<Value>,
    pub map_values: Vec<Value>,
    pub cap: u64,
}

impl Default for Universe {
    fn default() -> Self {
        Universe::ints(-3, 10)
    }
}

impl Universe {
    /// Numbers in `lo..=hi`, base set `{0, 1, 2}`, map values `{0, 1}`.
    pub fn ints(lo: i64, hi: i64) -> Self {
        Universe {
            int_lo: lo,
            int_hi: hi,
            base_set: (0..3).map(Value::from).collect(),
            map_values: (0..2).map(Value::from).collect(),
            cap: DEFAULT_CAP,
        }
    }

    pub fn with_base_set(mut self, base: impl IntoIterator<Item = Value>) -> Self {
        self.base_set = base.into_iter().collect();
        self
    }

    pub fn with_map_values(mut self, vals: impl IntoIterator<Item = Value>) -> Self {
        self.map_values = vals.into_iter().collect();
        self
    }

    /// All values of `ty` within the bounds, in canonical order.
    pub fn values_of(&self, ty: &VdmType) -> Result<Vec<Value>, UniverseError> {
        let count = self.count_of(ty)?;
        if count > self.cap as u128 {
            return Err(UniverseError::TooLarge { count, cap: self.cap });
        }
        Ok(match ty {
            VdmType::Nat => (self.int_lo.max(0)..=self.int_hi).map(Value::from).collect(),
            VdmType::Int => (self.int_lo..=self.int_hi).map(Value::from).collect(),
            VdmType::Bool => vec![Value::Bool(false), Value::Bool(true)],
            VdmType::SetOf(t) => {
                let base: Vec<Value> = self.base_set.iter().filter(|v| v.has_type(t)).cloned().collect();
                let mut out: Vec<Value> = (0u64..(1u64 << base.len()))
                    .map(|mask| Value::set(base.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v.clone())))
                    .collect();
                out.sort();
                out
            }
            VdmType::MapOf(d, r) => {
                let keys: Vec<Value> = self.base_set.iter().filter(|v| v.has_type(d)).cloned().collect();
                let vals: Vec<Value> = self.map_values.iter().filter(|v| v.has_type(r)).cloned().collect();
                let mut maps = vec![Vec::new()];
                for k in &keys {
                    let mut next = Vec::new();
                    for m in &maps {
                        next.push(m.clone());
                        for v in &vals {
                            let mut m2 = m.clone();
                            m2.push((k.clone(), v.clone()));
                            next.push(m2);
                        }
                    }
                    maps = next;
                }
                let mut out: Vec<Value> = maps.into_iter().map(Value::map).collect();
                out.sort();
                out
            }
            VdmType::Product(ts) => {
                let parts = ts.iter().map(|t| self.values_of(t)).collect::<Result<Vec<_>, _>>()?;
                cartesian(&parts).into_iter().map(Value::Tuple).collect()
            }
            VdmType::TypeVar(_) | VdmType::Unknown => return Err(UniverseError::NotEnumerable(ty.to_string())),
        })
    }

    /// Number of values of `ty`, without building them.
    pub fn count_of(&self, ty: &VdmType) -> Result<u128, UniverseError> {
        let span = |lo: i64, hi: i64| if hi < lo { 0 } else { (hi - lo) as u128 + 1 };
        Ok(match ty {
            VdmType::Nat => span(self.int_lo.max(0), self.int_hi),
            VdmType::Int => span(self.int_lo, self.int_hi),
            VdmType::Bool => 2,
            VdmType::SetOf(t) => {
                let n = self.base_set.iter().filter(|v| v.has_type(t)).count() as u32;
                2u128.checked_pow(n).unwrap_or(u128::MAX)
            }
            VdmType::MapOf(d, r) => {
                let k = self.base_set.iter().filter(|v| v.has_type(d)).count() as u32;
                let v = self.map_values.iter().filter(|x| x.has_type(r)).count() as u128;
                (v + 1).checked_pow(k).unwrap_or(u128::MAX)
            }
            VdmType::Product(ts) => {
                let mut n: u128 = 1;
                for t in ts {
                    n = n.saturating_mul(self.count_of(t)?);
                }
                n
            }
            VdmType::TypeVar(_) | VdmType::Unknown => return Err(UniverseError::NotEnumerable(ty.to_string())),
        })
    }

    /// Number of joint assignments for a list of binder types.
    pub fn assignments(&self, tys: &[VdmType]) -> Result<u128, UniverseError> {
        let mut n: u128 = 1;
        for t in tys {
            n = n.saturating_mul(self.count_of(t)?);
        }
        if n > self.cap as u128 {
            return Err(UniverseError::TooLarge { count: n, cap: self.cap });
        }
        Ok(n)
    }

    pub fn contains_int(&self, v: &BigInt) -> bool {
        *v >= BigInt::from(self.int_lo) && *v <= BigInt::from(self.int_hi)
    }
}

/// Cartesian product of value lists, first component varying slowest.
pub fn cartesian(parts: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = vec![Vec::new()];
    for part in parts {
        let mut next = Vec::with_capacity(out.len() * part.len());
        for prefix in &out {
            for v in part {
                let mut row = prefix.clone();
                row.push(v.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}
