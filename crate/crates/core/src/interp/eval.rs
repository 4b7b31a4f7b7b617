//! Strict evaluator for the function subset.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::Serialize;
use thiserror::Error;

use crate::diag::Pos;
use crate::interp::universe::{cartesian, Universe, UniverseError};
use crate::interp::value::Value;
use crate::measure::relation::{self, FiniteRelation};
use crate::syntax::ast::*;

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{function} is undefined at {args}: precondition violated")]
    Undefined { function: String, args: Value },
    #[error("fuel exhausted after {fuel} applications (possible non-termination)")]
    FuelExhausted { fuel: u64 },
    #[error("{pos}: map application outside the domain (key {key})")]
    MapApplicationOutsideDomain { key: Value, pos: Pos },
    #[error("{pos}: choice from an empty set")]
    ChoiceFromEmptySet { pos: Pos },
    #[error("{pos}: {function} of an empty set")]
    EmptySetAggregate { function: String, pos: Pos },
    #[error("{pos}: unbound variable {name}")]
    Unbound { name: String, pos: Pos },
    #[error("{pos}: unknown function {name}")]
    UnknownFunction { name: String, pos: Pos },
    #[error("{function} has no measure")]
    NoMeasure { function: String },
    #[error("{pos}: quantification over a type needs a bounded universe")]
    UnboundedQuantifier { pos: Pos },
    #[error("{pos}: {message}")]
    Type { message: String, pos: Pos },
    #[error(transparent)]
    Universe(#[from] UniverseError),
}

/// Which element `let x in set s` picks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChoiceStrategy {
    #[default]
    Min,
    Max,
}

impl FromStr for ChoiceStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(ChoiceStrategy::Min),
            "max" => Ok(ChoiceStrategy::Max),
            _ => Err(format!("unknown choice strategy `{s}` (expected min or max)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Maximum number of module-function applications.
    pub fuel: u64,
    pub choice: ChoiceStrategy,
    /// Cache results of module-function applications. Cached hits cost
    /// no fuel. Ignored while recording traces.
    pub memoize: bool,
    /// Carrier for quantifiers and comprehensions over types, and for the
    /// relation constants.
    pub universe: Option<Universe>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { fuel: DEFAULT_FUEL, choice: ChoiceStrategy::Min, memoize: false, universe: None }
    }
}

/// One call between members of the traced recursion group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub caller: String,
    pub callee: String,
    pub caller_args: Value,
    pub callee_args: Value,
    pub caller_measure: Option<Value>,
    pub callee_measure: Option<Value>,
    pub site: Pos,
}

struct Recorder {
    group: BTreeSet<String>,
    events: Vec<TraceEvent>,
}

type Env = Vec<(String, Value)>;

pub struct Interpreter<'m> {
    functions: BTreeMap<&'m str, &'m FunctionDef>,
    config: EvalConfig,
    used: u64,
    memo: HashMap<(&'m str, Value), Value>,
    frames: Vec<(&'m str, Value)>,
    recorder: Option<Recorder>,
}

fn type_err(message: impl Into<String>, pos: Pos) -> EvalError {
    EvalError::Type { message: message.into(), pos }
}

/// Equality with the empty set and the empty map identified.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Set(s), Value::Map(m)) | (Value::Map(m), Value::Set(s)) => s.is_empty() && m.is_empty(),
        (Value::Tuple(xs), Value::Tuple(ys)) => xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| values_equal(x, y)),
        _ => a == b,
    }
}

/// Brings a value into the representation its declared type expects.
fn conform(v: Value, ty: &VdmType) -> Value {
    match (ty, v) {
        (VdmType::MapOf(..), Value::Set(s)) if s.is_empty() => Value::Map(BTreeMap::new()),
        (VdmType::Product(ts), Value::Tuple(vs)) if ts.len() == vs.len() => {
            Value::Tuple(vs.into_iter().zip(ts).map(|(v, t)| conform(v, t)).collect())
        }
        (_, v) => v,
    }
}

fn as_map(v: Value, pos: Pos) -> Result<BTreeMap<Value, Value>, EvalError> {
    match v {
        Value::Map(m) => Ok(m),
        Value::Set(s) if s.is_empty() => Ok(BTreeMap::new()),
        other => Err(type_err(format!("expected a map, found {other}"), pos)),
    }
}

fn as_set(v: Value, pos: Pos) -> Result<BTreeSet<Value>, EvalError> {
    match v {
        Value::Set(s) => Ok(s),
        Value::Map(m) if m.is_empty() => Ok(BTreeSet::new()),
        other => Err(type_err(format!("expected a set, found {other}"), pos)),
    }
}

fn as_int(v: Value, pos: Pos) -> Result<BigInt, EvalError> {
    match v {
        Value::Int(i) => Ok(i),
        other => Err(type_err(format!("expected a number, found {other}"), pos)),
    }
}

fn as_bool(v: Value, pos: Pos) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(type_err(format!("expected a boolean, found {other}"), pos)),
    }
}

fn aggregate(name: &str, v: Value, pos: Pos) -> Result<Value, EvalError> {
    let set = as_set(v, pos)?;
    let ints = set.into_iter().map(|x| as_int(x, pos)).collect::<Result<Vec<_>, _>>()?;
    let pick = if name == "maxs" { ints.into_iter().max() } else { ints.into_iter().min() };
    pick.map(Value::Int).ok_or_else(|| EvalError::EmptySetAggregate { function: name.to_string(), pos })
}

fn relation_arg(v: &Value, pos: Pos) -> Result<FiniteRelation, EvalError> {
    FiniteRelation::from_value(v).ok_or_else(|| type_err(format!("expected a set of pairs, found {v}"), pos))
}

impl<'m> Interpreter<'m> {
    pub fn new(module: &'m SourceModule, config: EvalConfig) -> Self {
        Interpreter {
            functions: module.functions.iter().map(|f| (f.name.as_str(), f)).collect(),
            config,
            used: 0,
            memo: HashMap::new(),
            frames: Vec::new(),
            recorder: None,
        }
    }

    pub fn config(&self) -> &EvalConfig {
        &self.config
    }

    /// Applications performed so far.
    pub fn fuel_used(&self) -> u64 {
        self.used
    }

    /// Starts logging calls between members of `group`.
    pub fn record(&mut self, group: impl IntoIterator<Item = String>) {
        self.recorder = Some(Recorder { group: group.into_iter().collect(), events: Vec::new() });
    }

    /// Stops logging and returns the events in call order.
    pub fn take_events(&mut self) -> Vec<TraceEvent> {
        self.recorder.take().map(|r| r.events).unwrap_or_default()
    }

    fn def(&self, name: &str, pos: Pos) -> Result<&'m FunctionDef, EvalError> {
        self.functions.get(name).copied().ok_or_else(|| EvalError::UnknownFunction { name: name.to_string(), pos })
    }

    /// Applies a module function to already evaluated arguments.
    pub fn call(&mut self, name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
        let def = self.def(name, Pos::default())?;
        self.apply_def(def, args, Pos::default())
    }

    /// Evaluates a closed expression.
    pub fn eval_closed(&mut self, e: &Expr) -> Result<Value, EvalError> {
        self.eval(e, &mut Vec::new())
    }

    /// Evaluates `e` with `bindings` in scope.
    pub fn eval_with(&mut self, e: &Expr, bindings: &[(String, Value)]) -> Result<Value, EvalError> {
        let mut env = bindings.to_vec();
        self.eval(e, &mut env)
    }

    /// Type invariants of the parameters and the user precondition.
    pub fn pre_holds(&mut self, def: &'m FunctionDef, args: &[Value]) -> Result<bool, EvalError> {
        if args.len() != def.params.len() || !args.iter().zip(&def.params).all(|(v, (_, t))| v.has_type(t)) {
            return Ok(false);
        }
        match &def.pre {
            None => Ok(true),
            Some(p) => {
                let mut env: Env = def.params.iter().map(|(n, _)| n.clone()).zip(args.iter().cloned()).collect();
                let v = self.eval(p, &mut env)?;
                as_bool(v, p.pos)
            }
        }
    }

    /// Value of `def`'s measure at `args`.
    pub fn measure_of(&mut self, def: &'m FunctionDef, args: &[Value]) -> Result<Value, EvalError> {
        let m = def.measure.expr().ok_or_else(|| EvalError::NoMeasure { function: def.name.clone() })?;
        let mut env: Env = def.params.iter().map(|(n, _)| n.clone()).zip(args.iter().cloned()).collect();
        self.eval(m, &mut env)
    }

    fn apply_def(&mut self, def: &'m FunctionDef, args: Vec<Value>, pos: Pos) -> Result<Value, EvalError> {
        if args.len() != def.params.len() {
            return Err(type_err(format!("{} expects {} arguments, got {}", def.name, def.params.len(), args.len()), pos));
        }
        let args: Vec<Value> = args.into_iter().zip(&def.params).map(|(v, (_, t))| conform(v, t)).collect();
        if !self.pre_holds(def, &args)? {
            return Err(EvalError::Undefined { function: def.name.clone(), args: Value::pack(args) });
        }
        let packed = Value::pack(args.clone());
        self.log_call(def, &packed, pos);
        let use_memo = self.config.memoize && self.recorder.is_none();
        if use_memo {
            if let Some(v) = self.memo.get(&(def.name.as_str(), packed.clone())) {
                return Ok(v.clone());
            }
        }
        if self.used >= self.config.fuel {
            return Err(EvalError::FuelExhausted { fuel: self.config.fuel });
        }
        self.used += 1;
        let mut env: Env = def.params.iter().map(|(n, _)| n.clone()).zip(args).collect();
        self.frames.push((def.name.as_str(), packed.clone()));
        let result = stacker::maybe_grow(256 * 1024, 16 * 1024 * 1024, || self.eval(&def.body, &mut env));
        self.frames.pop();
        let v = conform(result?, &def.result);
        if use_memo {
            self.memo.insert((def.name.as_str(), packed), v.clone());
        }
        Ok(v)
    }

    fn log_call(&mut self, callee: &'m FunctionDef, callee_args: &Value, pos: Pos) {
        let Some(rec) = &self.recorder else { return };
        let Some(&(caller_name, ref caller_args)) = self.frames.last() else { return };
        if !rec.group.contains(caller_name) || !rec.group.contains(&callee.name) {
            return;
        }
        let caller_args = caller_args.clone();
        let caller = self.functions[caller_name];
        // measures are evaluated with logging suspended
        let rec = self.recorder.take();
        let caller_measure = self.measure_of(caller, &caller_args.unpack(caller.params.len())).ok();
        let callee_measure = self.measure_of(callee, &callee_args.unpack(callee.params.len())).ok();
        self.recorder = rec;
        if let Some(rec) = &mut self.recorder {
            rec.events.push(TraceEvent {
                caller: caller_name.to_string(),
                callee: callee.name.clone(),
                caller_args,
                callee_args: callee_args.clone(),
                caller_measure,
                callee_measure,
                site: pos,
            });
        }
    }

    fn universe(&self, pos: Pos) -> Result<&Universe, EvalError> {
        self.config.universe.as_ref().ok_or(EvalError::UnboundedQuantifier { pos })
    }

    /// All assignments for a binder list, in canonical order.
    fn assignments(&mut self, binds: &[Bind], env: &mut Env, pos: Pos) -> Result<Vec<Vec<Value>>, EvalError> {
        let mut domains = Vec::with_capacity(binds.len());
        for b in binds {
            domains.push(match &b.domain {
                BindDomain::Type(t) => self.universe(pos)?.values_of(t)?,
                BindDomain::InSet(s) => {
                    let v = self.eval(s, env)?;
                    as_set(v, s.pos)?.into_iter().collect()
                }
            });
        }
        let count: u128 = domains.iter().map(|d| d.len() as u128).product();
        let cap = self.config.universe.as_ref().map_or(crate::interp::universe::DEFAULT_CAP, |u| u.cap);
        if count > cap as u128 {
            return Err(UniverseError::TooLarge { count, cap }.into());
        }
        Ok(cartesian(&domains))
    }

    pub fn eval(&mut self, e: &Expr, env: &mut Env) -> Result<Value, EvalError> {
        let pos = e.pos;
        Ok(match &e.kind {
            ExprKind::Int(v) => Value::Int(v.clone()),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Var(name) => env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| EvalError::Unbound { name: name.clone(), pos })?,
            ExprKind::Tuple(items) => Value::Tuple(items.iter().map(|x| self.eval(x, env)).collect::<Result<_, _>>()?),
            ExprKind::Unary(op, x) => {
                let v = self.eval(x, env)?;
                match op {
                    UnaryOp::Neg => Value::Int(-as_int(v, pos)?),
                    UnaryOp::Not => Value::Bool(!as_bool(v, pos)?),
                    UnaryOp::Card => Value::int(as_set(v, pos)?.len()),
                    UnaryOp::Dom => Value::Set(as_map(v, pos)?.into_keys().collect()),
                }
            }
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r, env)?,
            ExprKind::If { cond, then_branch, else_branch } => {
                let c = self.eval(cond, env)?;
                if as_bool(c, cond.pos)? {
                    self.eval(then_branch, env)?
                } else {
                    self.eval(else_branch, env)?
                }
            }
            ExprKind::Let { name, value, body } => {
                let v = self.eval(value, env)?;
                env.push((name.clone(), v));
                let r = self.eval(body, env);
                env.pop();
                r?
            }
            ExprKind::LetInSet { name, set, body } => {
                let s = self.eval(set, env)?;
                let s = as_set(s, set.pos)?;
                let pick = match self.config.choice {
                    ChoiceStrategy::Min => s.into_iter().next(),
                    ChoiceStrategy::Max => s.into_iter().next_back(),
                };
                let v = pick.ok_or(EvalError::ChoiceFromEmptySet { pos })?;
                env.push((name.clone(), v));
                let r = self.eval(body, env);
                env.pop();
                r?
            }
            ExprKind::SetEnum(items) => Value::Set(items.iter().map(|x| self.eval(x, env)).collect::<Result<_, _>>()?),
            ExprKind::SetComp { elem, binds, filter } => {
                let mut out = BTreeSet::new();
                for row in self.assignments(binds, env, pos)? {
                    let depth = env.len();
                    env.extend(binds.iter().map(|b| b.name.clone()).zip(row));
                    let r = (|| -> Result<(), EvalError> {
                        let keep = match filter {
                            Some(f) => {
                                let v = self.eval(f, env)?;
                                as_bool(v, f.pos)?
                            }
                            None => true,
                        };
                        if keep {
                            out.insert(self.eval(elem, env)?);
                        }
                        Ok(())
                    })();
                    env.truncate(depth);
                    r?;
                }
                Value::Set(out)
            }
            ExprKind::Forall { binds, body } => {
                let mut all = true;
                for row in self.assignments(binds, env, pos)? {
                    let depth = env.len();
                    env.extend(binds.iter().map(|b| b.name.clone()).zip(row));
                    let r = self.eval(body, env);
                    env.truncate(depth);
                    if !as_bool(r?, body.pos)? {
                        all = false;
                        break;
                    }
                }
                Value::Bool(all)
            }
            ExprKind::MapEnum(pairs) => {
                let mut m = BTreeMap::new();
                for (k, v) in pairs {
                    let k = self.eval(k, env)?;
                    let v = self.eval(v, env)?;
                    if let Some(old) = m.insert(k.clone(), v.clone()) {
                        if old != v {
                            return Err(type_err(format!("map enumeration binds {k} to two values"), pos));
                        }
                    }
                }
                Value::Map(m)
            }
            ExprKind::MapApply { map, key } => {
                let m = self.eval(map, env)?;
                let k = self.eval(key, env)?;
                let m = as_map(m, map.pos)?;
                m.get(&k).cloned().ok_or(EvalError::MapApplicationOutsideDomain { key: k, pos })?
            }
            // unresolved `m(k)` on a bound map
            ExprKind::Apply { func, args, .. } if args.len() == 1 && env.iter().any(|(n, _)| n == func) => {
                let m = env.iter().rev().find(|(n, _)| n == func).map(|(_, v)| v.clone()).unwrap();
                let k = self.eval(&args[0], env)?;
                as_map(m, pos)?.get(&k).cloned().ok_or(EvalError::MapApplicationOutsideDomain { key: k, pos })?
            }
            ExprKind::Apply { func, args, .. } => {
                let vals = args.iter().map(|a| self.eval(a, env)).collect::<Result<Vec<_>, _>>()?;
                self.apply(func, vals, pos)?
            }
            ExprKind::IsType { expr, ty } => Value::Bool(self.eval(expr, env)?.has_type(ty)),
        })
    }

    fn apply(&mut self, func: &str, args: Vec<Value>, pos: Pos) -> Result<Value, EvalError> {
        if let Some(&def) = self.functions.get(func) {
            return self.apply_def(def, args, pos);
        }
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(type_err(format!("{func} expects {n} arguments, got {}", args.len()), pos))
            }
        };
        match func {
            "maxs" | "mins" => {
                arity(1)?;
                aggregate(func, args.into_iter().next().unwrap(), pos)
            }
            "less_than_VDMNat" | "pair_less_VDMNat" => {
                arity(0)?;
                let u = self.universe(pos)?;
                let bound = u.int_hi.max(0) as u64;
                Ok(if func == "less_than_VDMNat" {
                    relation::less_than_vdmnat(bound)
                } else {
                    relation::pair_less_vdmnat(bound)
                }
                .to_value())
            }
            "trans_closure" => {
                arity(1)?;
                Ok(relation::trans_closure(&relation_arg(&args[0], pos)?).to_value())
            }
            "lex_prod" => {
                arity(2)?;
                Ok(relation::lex_prod(&relation_arg(&args[0], pos)?, &relation_arg(&args[1], pos)?).to_value())
            }
            _ => {
                if let Some(f) = func.strip_prefix("pre_") {
                    if let Some(&def) = self.functions.get(f) {
                        let args: Vec<Value> = args.into_iter().zip(&def.params).map(|(v, (_, t))| conform(v, t)).collect();
                        return Ok(Value::Bool(self.pre_holds(def, &args)?));
                    }
                }
                if let Some(f) = func.strip_prefix("measure_") {
                    if let Some(&def) = self.functions.get(f) {
                        return self.measure_of(def, &args);
                    }
                }
                Err(EvalError::UnknownFunction { name: func.to_string(), pos })
            }
        }
    }

    fn binary(&mut self, op: BinaryOp, l: &Expr, r: &Expr, env: &mut Env) -> Result<Value, EvalError> {
        use BinaryOp::*;
        // connectives short-circuit
        match op {
            And | Or | Implies => {
                let a = self.eval(l, env)?;
                let a = as_bool(a, l.pos)?;
                let decided = match op {
                    And if !a => Some(false),
                    Or if a => Some(true),
                    Implies if !a => Some(true),
                    _ => None,
                };
                if let Some(b) = decided {
                    return Ok(Value::Bool(b));
                }
                let b = self.eval(r, env)?;
                return Ok(Value::Bool(as_bool(b, r.pos)?));
            }
            _ => {}
        }
        let a = self.eval(l, env)?;
        let b = self.eval(r, env)?;
        Ok(match op {
            Eq => Value::Bool(values_equal(&a, &b)),
            Ne => Value::Bool(!values_equal(&a, &b)),
            Sub if !matches!(a, Value::Int(_)) => {
                let s = as_set(a, l.pos)?;
                let t = as_set(b, r.pos)?;
                Value::Set(s.difference(&t).cloned().collect())
            }
            Add | Sub | Mul | Lt | Le | Gt | Ge => {
                let x = as_int(a, l.pos)?;
                let y = as_int(b, r.pos)?;
                match op {
                    Add => Value::Int(x + y),
                    Sub => Value::Int(x - y),
                    Mul => Value::Int(x * y),
                    Lt => Value::Bool(x < y),
                    Le => Value::Bool(x <= y),
                    Gt => Value::Bool(x > y),
                    _ => Value::Bool(x >= y),
                }
            }
            Union => {
                let mut s = as_set(a, l.pos)?;
                s.extend(as_set(b, r.pos)?);
                Value::Set(s)
            }
            Difference => {
                let s = as_set(a, l.pos)?;
                let t = as_set(b, r.pos)?;
                Value::Set(s.difference(&t).cloned().collect())
            }
            InSet => Value::Bool(as_set(b, r.pos)?.iter().any(|x| values_equal(x, &a))),
            DomAntiRestrict => {
                let keys = as_set(a, l.pos)?;
                let mut m = as_map(b, r.pos)?;
                m.retain(|k, _| !keys.contains(k));
                Value::Map(m)
            }
            And | Or | Implies => unreachable!(),
        })
    }
}

/// Evaluates `f(args)` in a fresh interpreter.
pub fn eval_call(module: &SourceModule, f: &str, args: Vec<Value>, config: EvalConfig) -> Result<Value, EvalError> {
    Interpreter::new(module, config).call(f, args)
}

/// A `nat` view of an integer measure value, or `None` if negative.
pub fn as_nat(v: &Value) -> Option<&BigInt> {
    v.as_int().filter(|i| !i.is_negative())
}
