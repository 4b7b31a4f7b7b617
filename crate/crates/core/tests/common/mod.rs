#![allow(dead_code)]

use std::path::PathBuf;

use vdmrec::interp::Value;
use vdmrec::syntax::{module_name_from_stem, parse_source};
use vdmrec::syntax::ast::SourceModule;
use vdmrec::{analyze_source, ModuleAnalysis, Options};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn source(stem: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(format!("{stem}.vdmsl"))).expect("corpus file")
}

pub fn module(stem: &str) -> SourceModule {
    let m = parse_source(&source(stem), &module_name_from_stem(stem));
    assert!(m.diagnostics.iter().all(|d| !d.is_error()), "{stem}: {:?}", m.diagnostics);
    m
}

pub fn analysis(stem: &str) -> ModuleAnalysis {
    analyze_source(&source(stem), &module_name_from_stem(stem), &Options::default())
}

pub fn int(v: i64) -> Value {
    Value::int(v)
}

pub fn nat_set(xs: impl IntoIterator<Item = i64>) -> Value {
    Value::set(xs.into_iter().map(Value::int))
}

/// All subsets of `base`.
pub fn subsets(base: &[i64]) -> Vec<Value> {
    (0u32..1 << base.len())
        .map(|mask| nat_set(base.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, v)| *v)))
        .collect()
}

/// All partial maps from `keys` to `vals`.
pub fn maps(keys: &[i64], vals: &[i64]) -> Vec<Value> {
    let mut out = vec![Vec::new()];
    for k in keys {
        let mut next = Vec::new();
        for m in &out {
            next.push(m.clone());
            for v in vals {
                let mut m2 = m.clone();
                m2.push((int(*k), int(*v)));
                next.push(m2);
            }
        }
        out = next;
    }
    out.into_iter().map(Value::map).collect()
}
