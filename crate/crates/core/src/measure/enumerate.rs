//! Bounded enumeration of symbolic measure relations.

use thiserror::Error;

use crate::interp::universe::{cartesian, Universe, UniverseError};
use crate::interp::{EvalConfig, EvalError, Interpreter, Value};
use crate::measure::relation::{less_than_vdmnat, pair_less_vdmnat, FiniteRelation};
use crate::measure::synthesis::MeasureRelation;
use crate::syntax::ast::{FunctionDef, SourceModule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerateError {
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error("while enumerating: {0}")]
    Eval(#[from] EvalError),
    #[error("unknown relation constant {0}")]
    UnknownConstant(String),
}

/// All `(dst, src)` pairs over binder assignments drawn from `universe`
/// that satisfy the branch filter. The resulting universe is the carrier
/// of `def`'s parameter tuple plus every pair component.
pub fn enumerate_relation(rel: &MeasureRelation, def: &FunctionDef, module: &SourceModule, universe: &Universe) -> Result<FiniteRelation, EnumerateError> {
    let bound = universe.int_hi.max(0) as u64;
    let branches = match rel {
        MeasureRelation::Named(n) if n == "less_than_VDMNat" => return Ok(less_than_vdmnat(bound)),
        MeasureRelation::Named(n) if n == "pair_less_VDMNat" => return Ok(pair_less_vdmnat(bound)),
        MeasureRelation::Named(n) => return Err(EnumerateError::UnknownConstant(n.clone())),
        MeasureRelation::Branches(b) => b,
    };
    let carrier = universe.values_of(&def.signature_type())?;
    let config = EvalConfig { universe: Some(universe.clone()), ..EvalConfig::default() };
    let mut it = Interpreter::new(module, config);
    let mut pairs = Vec::new();
    for b in branches {
        let tys: Vec<_> = b.binders.iter().map(|(_, t)| t.clone()).collect();
        universe.assignments(&tys)?;
        let domains = tys.iter().map(|t| universe.values_of(t)).collect::<Result<Vec<_>, _>>()?;
        for row in cartesian(&domains) {
            let env: Vec<(String, Value)> = b.binders.iter().map(|(n, _)| n.clone()).zip(row).collect();
            if it.eval_with(&b.filter, &env)? != Value::Bool(true) {
                continue;
            }
            let dst = it.eval_with(&b.dst, &env)?;
            let src = it.eval_with(&b.src, &env)?;
            pairs.push((dst, src));
        }
    }
    Ok(FiniteRelation::new(carrier, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;
    use crate::typecheck::TypeEnv;

    fn fact_relation(filter_false: bool) -> FiniteRelation {
        let ann = if filter_false { "{ (n - 1, n) | n : nat & false }" } else { "{ (n - 1, n) | n : nat & n <> 0 }" };
        let src = format!("functions\nfact: nat -> nat\nfact(n) == if n = 0 then 1 else n * fact(n - 1)\n--@IsaMeasure({ann})\nmeasure n;\n");
        let m = parse_source(&src, "Fact");
        let def = m.function("fact").unwrap();
        let rel = crate::measure::synthesis::relation_from_annotation(def, def.annotations.isa_measure.as_ref().unwrap(), &TypeEnv::for_module(&m)).unwrap();
        enumerate_relation(&rel, def, &m, &Universe::ints(0, 3)).unwrap()
    }

    #[test]
    fn fact_small() {
        let r = fact_relation(false);
        let want: Vec<(Value, Value)> = (0..3).map(|i| (Value::from(i), Value::from(i + 1))).collect();
        assert_eq!(r.pairs.into_iter().collect::<Vec<_>>(), want);
    }

    #[test]
    fn false_filter_is_empty() {
        assert!(fact_relation(true).is_empty());
    }

    #[test]
    fn cap_applies() {
        let m = parse_source("functions\nf: nat * nat -> nat\nf(a, b) == if a = 0 then 0 else f(a - 1, b)\nmeasure a;\n", "F");
        let def = m.function("f").unwrap();
        let rel = MeasureRelation::Branches(vec![crate::measure::synthesis::Branch {
            binders: def.params.clone(),
            dst: def.param_tuple(),
            src: def.param_tuple(),
            filter: crate::syntax::ast::Expr::bool(true),
        }]);
        let mut u = Universe::ints(0, 100);
        u.cap = 100;
        assert!(matches!(enumerate_relation(&rel, def, &m, &u), Err(EnumerateError::Universe(UniverseError::TooLarge { .. }))));
    }
}
