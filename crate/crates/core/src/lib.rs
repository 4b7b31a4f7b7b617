//! Translation of recursive VDM-SL functions to Isabelle/HOL, with
//! termination evidence: call-graph analysis, measure-relation synthesis,
//! proof obligations, and a reference interpreter with finite-relation
//! oracles.

pub mod analysis;
pub mod diag;
pub mod interp;
pub mod isabelle;
pub mod measure;
pub mod pipeline;
pub mod po;
pub mod syntax;
pub mod typecheck;

pub use diag::{Code, Diagnostic, Pos, Severity};
pub use isabelle::{render_theory, translate, TheoryDoc};
pub use pipeline::{analyze, analyze_source, ModuleAnalysis, Options};
pub use po::{check_pos_bounded, generate_pos, render_pos, PoKind, PoSet, ProofObligation};
