//! Measure relations: symbolic synthesis, finite semantics of the order
//! combinators, and bounded enumeration.

pub mod enumerate;
pub mod relation;
pub mod synthesis;

pub use enumerate::{enumerate_relation, EnumerateError};
pub use relation::{
    finite_wf_check, gen_set_term, gen_vdmnat_term, inv_image, less_than_vdmnat, lex_prod, measure_rel, mlex, pair_less_vdmnat, trans_closure,
    FiniteRelation, LessThanNat, PairLessNat, Relation, WfResult,
};
pub use synthesis::{
    choose_wrapper, has_pre_definition, measure_for, relation_from_annotation, synthesize_relation, Branch, FailureKind, MeasureOutcome,
    MeasureRelation, RelationSource, SynthesisFailure, WrapperChoice,
};
