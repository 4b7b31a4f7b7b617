//! Reference interpreter and dynamic oracles.

pub mod eval;
pub mod oracle;
pub mod universe;
pub mod value;

pub use eval::{eval_call, values_equal, ChoiceStrategy, EvalConfig, EvalError, Interpreter, TraceEvent, DEFAULT_FUEL};
pub use oracle::{
    builtin_measures, check_measure_dynamic, check_relation_covers_trace, group_of, pre_satisfying_samples, record_trace, CoverageReport,
    MeasureReport, MeasureViolation, MeasureViolationKind, Trace, UniverseMismatch,
};
pub use universe::{Universe, UniverseError, DEFAULT_CAP};
pub use value::Value;
