mod common;

use std::collections::HashMap;

use common::*;
use vdmrec::interp::oracle::{record_trace, tak_m1, tak_m2, tak_m3};
use vdmrec::interp::{eval_call, ChoiceStrategy, EvalConfig, EvalError, Value};

fn memo() -> EvalConfig {
    EvalConfig { memoize: true, ..EvalConfig::default() }
}

#[test]
fn corpus_examples_evaluate() {
    assert_eq!(eval_call(&module("fact"), "fact", vec![int(0)], memo()), Ok(int(1)));
    assert_eq!(eval_call(&module("fact"), "fact", vec![int(5)], memo()), Ok(int(120)));
    assert_eq!(eval_call(&module("sumset"), "sumset", vec![nat_set([1, 2, 3])], memo()), Ok(int(6)));
    assert_eq!(eval_call(&module("ack"), "ack", vec![int(2), int(1)], memo()), Ok(int(5)));
    let m = Value::map([(int(1), int(1))]);
    assert_eq!(eval_call(&module("sum_elems"), "sum_elems", vec![m], memo()), Ok(int(1)));
    assert_eq!(eval_call(&module("evenodd"), "even", vec![int(7)], memo()), Ok(Value::Bool(false)));
    assert_eq!(eval_call(&module("perm"), "perm", vec![int(1), int(2), int(3)], memo()), Ok(int(1)));
}

#[test]
fn large_factorial_is_exact() {
    let v = eval_call(&module("fact"), "fact", vec![int(30)], memo()).unwrap();
    assert_eq!(v.to_string(), "265252859812191058636308480000000");
}

#[test]
fn fact_trace_measures_decrease() {
    let t = record_trace(&module("fact"), "fact", vec![int(3)], EvalConfig::default());
    assert_eq!(t.result, Ok(int(6)));
    let ms: Vec<Value> = t.events.iter().map(|e| e.caller_measure.clone().unwrap()).collect();
    assert_eq!(ms, vec![int(3), int(2), int(1)]);
    assert!(t.events.iter().all(|e| e.caller == "fact" && e.callee == "fact"));
}

#[test]
fn mutual_trace_alternates() {
    let t = record_trace(&module("evenodd"), "even", vec![int(2)], EvalConfig::default());
    assert_eq!(t.result, Ok(Value::Bool(true)));
    let steps: Vec<(&str, &str)> = t.events.iter().map(|e| (e.caller.as_str(), e.callee.as_str())).collect();
    assert_eq!(steps, vec![("even", "odd"), ("odd", "even")]);
}

#[test]
fn precondition_violation_is_undefined() {
    let r = eval_call(&module("perm"), "perm", vec![int(-3), int(1), int(1)], memo());
    assert!(matches!(r, Err(EvalError::Undefined { .. })), "{r:?}");
    let r = eval_call(&module("fact"), "fact", vec![int(-1)], memo());
    assert!(r.is_err());
}

#[test]
fn fuel_bounds_evaluation() {
    let cfg = EvalConfig { fuel: 100, ..EvalConfig::default() };
    let r = eval_call(&module("ack"), "ack", vec![int(3), int(3)], cfg);
    assert!(matches!(r, Err(EvalError::FuelExhausted { fuel: 100 })), "{r:?}");
}

fn tak_closed(x: i64, y: i64, z: i64) -> i64 {
    if x <= y {
        y
    } else if y <= z {
        z
    } else {
        x
    }
}

#[test]
fn tak_matches_closed_form() {
    let m = module("tak");
    assert_eq!(eval_call(&m, "tak", vec![int(2), int(1), int(0)], memo()), Ok(int(2)));
    for x in -3..=6 {
        for y in -3..=6 {
            for z in -3..=6 {
                let got = eval_call(&m, "tak", vec![int(x), int(y), int(z)], memo());
                assert_eq!(got, Ok(int(tak_closed(x, y, z))), "tak({x},{y},{z})");
            }
        }
    }
}

fn ack_ref(m: u64, n: u64, memo: &mut HashMap<(u64, u64), u64>) -> u64 {
    if let Some(v) = memo.get(&(m, n)) {
        return *v;
    }
    let v = if m == 0 {
        n + 1
    } else if n == 0 {
        ack_ref(m - 1, 1, memo)
    } else {
        let inner = ack_ref(m, n - 1, memo);
        ack_ref(m - 1, inner, memo)
    };
    memo.insert((m, n), v);
    v
}

#[test]
fn ack_matches_reference() {
    let module = module("ack");
    let mut table = HashMap::new();
    for m in 0..=3 {
        for n in 0..=8 {
            let want = ack_ref(m, n, &mut table) as i64;
            assert_eq!(eval_call(&module, "ack", vec![int(m as i64), int(n as i64)], memo()), Ok(int(want)), "ack({m},{n})");
        }
    }
}

#[test]
fn tak_measures() {
    let t = |x, y, z| Value::Tuple(vec![int(x), int(y), int(z)]);
    assert_eq!(tak_m1(&t(1, 2, 0)), Ok(int(0)));
    assert_eq!(tak_m1(&t(3, 2, 0)), Ok(int(1)));
    assert_eq!(tak_m2(&t(3, -1, 0)), Ok(int(4)));
    assert_eq!(tak_m3(&t(3, -1, 0)), Ok(int(4)));
    assert_eq!(tak_m3(&t(-1, 3, 0)), Ok(int(0)));
}

#[test]
fn choice_strategy_changes_the_picked_element() {
    let src = "functions\npick: set of nat -> nat\npick(s) == let e in set s in e\npre s <> {};\n";
    let m = vdmrec::syntax::parse_source(src, "Pick");
    let run = |choice| eval_call(&m, "pick", vec![nat_set([3, 1, 2])], EvalConfig { choice, ..EvalConfig::default() });
    assert_eq!(run(ChoiceStrategy::Min), Ok(int(1)));
    assert_eq!(run(ChoiceStrategy::Max), Ok(int(3)));
}
