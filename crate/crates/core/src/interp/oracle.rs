//! Dynamic termination evidence: traces, measure checks and relation
//! coverage.

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{build_call_graph, recursion_groups};
use crate::interp::eval::{as_nat, EvalConfig, EvalError, Interpreter, TraceEvent};
use crate::interp::universe::{cartesian, Universe, UniverseError};
use crate::interp::value::Value;
use crate::measure::relation::Relation;
use crate::syntax::ast::{FunctionDef, SourceModule};

/// Result of one traced evaluation. Events recorded before an error are
/// kept.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    #[serde(serialize_with = "ser_result")]
    pub result: Result<Value, EvalError>,
    pub events: Vec<TraceEvent>,
}

fn ser_result<S: serde::Serializer>(r: &Result<Value, EvalError>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(1))?;
    match r {
        Ok(v) => m.serialize_entry("value", v)?,
        Err(e) => m.serialize_entry("error", &e.to_string())?,
    }
    m.end()
}

/// Members of the recursion group containing `f` (just `f` if none).
pub fn group_of(module: &SourceModule, f: &str) -> Vec<String> {
    let g = build_call_graph(module);
    let (groups, _) = recursion_groups(&g, module);
    groups
        .into_iter()
        .find(|gr| gr.contains(f))
        .map(|gr| gr.members)
        .unwrap_or_else(|| vec![f.to_string()])
}

/// Evaluates `f(args)`, logging every call between members of `f`'s
/// recursion group.
pub fn record_trace(module: &SourceModule, f: &str, args: Vec<Value>, config: EvalConfig) -> Trace {
    let mut it = Interpreter::new(module, config);
    it.record(group_of(module, f));
    let result = it.call(f, args);
    Trace { result, events: it.take_events() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MeasureViolationKind {
    /// The measure at the caller is not a natural number.
    NotNat,
    /// The measure did not strictly decrease across the call.
    NoDecrease,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureViolation {
    pub sample: Value,
    pub kind: MeasureViolationKind,
    /// Events up to and including the offending one.
    pub prefix: Vec<TraceEvent>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MeasureReport {
    pub samples: usize,
    pub events_checked: usize,
    pub violations: Vec<MeasureViolation>,
    /// Samples whose evaluation failed, with the error text.
    pub errors: Vec<(Value, String)>,
}

impl MeasureReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn nat_of(v: &Option<Value>) -> Option<&BigInt> {
    v.as_ref().and_then(as_nat)
}

/// Replays each sample and checks at every event that the caller's measure
/// is a natural number and exceeds the callee's. Only the first violation
/// of each sample is reported.
pub fn check_measure_dynamic(module: &SourceModule, f: &str, samples: &[Vec<Value>], config: &EvalConfig) -> MeasureReport {
    let mut report = MeasureReport::default();
    for sample in samples {
        report.samples += 1;
        let trace = record_trace(module, f, sample.clone(), config.clone());
        if let Err(e) = &trace.result {
            report.errors.push((Value::pack(sample.clone()), e.to_string()));
        }
        for (i, ev) in trace.events.iter().enumerate() {
            if ev.caller_measure.is_none() {
                continue;
            }
            report.events_checked += 1;
            let kind = match (nat_of(&ev.caller_measure), &ev.callee_measure) {
                (None, _) => Some(MeasureViolationKind::NotNat),
                // callee without a measure
                (Some(_), None) => None,
                (Some(a), Some(b)) => match as_nat(b) {
                    Some(b) if a > b => None,
                    _ => Some(MeasureViolationKind::NoDecrease),
                },
            };
            if let Some(kind) = kind {
                report.violations.push(MeasureViolation {
                    sample: Value::pack(sample.clone()),
                    kind,
                    prefix: trace.events[..=i].to_vec(),
                });
                break;
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace value {value} lies outside the relation's universe")]
pub struct UniverseMismatch {
    pub value: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CoverageReport {
    pub checked: usize,
    /// Events whose `(callee args, caller args)` pair is not in the relation.
    pub misses: Vec<(usize, TraceEvent)>,
}

impl CoverageReport {
    pub fn is_full(&self) -> bool {
        self.misses.is_empty()
    }
}

/// Checks that every event's `(callee args, caller args)` pair belongs to
/// `rel`.
pub fn check_relation_covers_trace(events: &[TraceEvent], rel: &dyn Relation) -> Result<CoverageReport, UniverseMismatch> {
    let mut report = CoverageReport::default();
    for (i, ev) in events.iter().enumerate() {
        for v in [&ev.caller_args, &ev.callee_args] {
            if !rel.in_universe(v) {
                return Err(UniverseMismatch { value: v.clone() });
            }
        }
        report.checked += 1;
        if !rel.contains(&ev.callee_args, &ev.caller_args) {
            report.misses.push((i, ev.clone()));
        }
    }
    Ok(report)
}

/// All parameter tuples of `def` over `universe` that satisfy its
/// precondition, in canonical order.
pub fn pre_satisfying_samples(module: &SourceModule, def: &FunctionDef, universe: &Universe) -> Result<Vec<Vec<Value>>, UniverseError> {
    universe.assignments(&def.param_types())?;
    let domains = def.param_types().iter().map(|t| universe.values_of(t)).collect::<Result<Vec<_>, _>>()?;
    let config = EvalConfig { universe: Some(universe.clone()), ..EvalConfig::default() };
    let mut it = Interpreter::new(module, config);
    let def = module.function(&def.name).expect("def belongs to module");
    Ok(cartesian(&domains).into_iter().filter(|args| it.pre_holds(def, args).unwrap_or(false)).collect())
}

/// A measure usable in relation combinators.
pub type MeasureFn = fn(&Value) -> Result<Value, EvalError>;

fn triple(v: &Value) -> Result<[BigInt; 3], EvalError> {
    let err = || EvalError::Type { message: format!("expected a triple of numbers, found {v}"), pos: Default::default() };
    match v {
        Value::Tuple(xs) if xs.len() == 3 => {
            let n = |i: usize| xs[i].as_int().cloned().ok_or_else(err);
            Ok([n(0)?, n(1)?, n(2)?])
        }
        _ => Err(err()),
    }
}

fn ints(v: &Value, name: &str) -> Result<Vec<BigInt>, EvalError> {
    let set = v.as_set().ok_or_else(|| EvalError::Type { message: format!("{name} expects a set, found {v}"), pos: Default::default() })?;
    let out: Vec<BigInt> = set.iter().filter_map(|x| x.as_int().cloned()).collect();
    if out.is_empty() {
        return Err(EvalError::EmptySetAggregate { function: name.to_string(), pos: Default::default() });
    }
    Ok(out)
}

fn clamp_nat(v: BigInt) -> Value {
    Value::Int(v.max(BigInt::from(0)))
}

/// 0 when `x ≤ y`, else 1.
pub fn tak_m1(v: &Value) -> Result<Value, EvalError> {
    let [x, y, _] = triple(v)?;
    Ok(Value::from(if x <= y { 0 } else { 1 }))
}

/// `Max {x, y, z} - Min {x, y, z}`, clamped to a natural.
pub fn tak_m2(v: &Value) -> Result<Value, EvalError> {
    let t = triple(v)?;
    let hi = t.iter().max().unwrap().clone();
    let lo = t.iter().min().unwrap().clone();
    Ok(clamp_nat(hi - lo))
}

/// `x - Min {x, y, z}`, clamped to a natural.
pub fn tak_m3(v: &Value) -> Result<Value, EvalError> {
    let t = triple(v)?;
    let lo = t.iter().min().unwrap().clone();
    Ok(clamp_nat(t[0].clone() - lo))
}

pub fn max_of(v: &Value) -> Result<Value, EvalError> {
    Ok(Value::Int(ints(v, "Max")?.into_iter().max().unwrap()))
}

pub fn min_of(v: &Value) -> Result<Value, EvalError> {
    Ok(Value::Int(ints(v, "Min")?.into_iter().min().unwrap()))
}

pub fn maxs(v: &Value) -> Result<Value, EvalError> {
    Ok(Value::Int(ints(v, "maxs")?.into_iter().max().unwrap()))
}

/// Named measures and aggregates available to combinator chains.
pub fn builtin_measures() -> Vec<(&'static str, MeasureFn)> {
    vec![("tak_m1", tak_m1), ("tak_m2", tak_m2), ("tak_m3", tak_m3), ("maxs", maxs), ("Max", max_of), ("Min", min_of)]
}
