//! Whole-module analysis: parse, type check, recursion groups, call sites
//! and measure relations, with the diagnostics of every stage.

use crate::analysis::{build_call_graph, extract_call_sites, recursion_groups, CallGraph, CallSite, GroupKind, RecursionGroup};
use crate::diag::{Code, Diagnostic};
use crate::measure::{measure_for, MeasureOutcome};
use crate::po::{generate_pos, PoSet};
use crate::syntax::ast::{FunctionDef, SourceModule};
use crate::syntax::parse_source;
use crate::typecheck::{check_function, check_isa_measure, FunctionCheck, TypeEnv};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    /// Synthesis failures become errors.
    pub strict: bool,
}

#[derive(Clone, Debug)]
pub struct FunctionAnalysis {
    pub name: String,
    /// Index into `ModuleAnalysis::groups`.
    pub group: usize,
    pub sites: Vec<CallSite>,
    pub check: FunctionCheck,
    /// Only for members of simple recursive groups.
    pub measure: Option<MeasureOutcome>,
}

#[derive(Clone, Debug)]
pub struct ModuleAnalysis {
    pub module: SourceModule,
    pub env: TypeEnv,
    pub graph: CallGraph,
    /// Callee groups first.
    pub groups: Vec<RecursionGroup>,
    pub functions: Vec<FunctionAnalysis>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ModuleAnalysis {
    pub fn function(&self, name: &str) -> Option<&FunctionAnalysis> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn def(&self, name: &str) -> Option<&FunctionDef> {
        self.module.function(name)
    }

    pub fn group_of(&self, name: &str) -> Option<&RecursionGroup> {
        self.function(name).map(|f| &self.groups[f.group])
    }

    pub fn has_errors(&self) -> bool {
        crate::diag::has_errors(&self.diagnostics)
    }

    /// Proof obligations of every recursive function, in group order.
    pub fn proof_obligations(&self) -> Vec<(String, PoSet)> {
        let mut out = Vec::new();
        for g in self.groups.iter().filter(|g| g.is_recursive()) {
            for name in &g.members {
                let (Some(def), Some(fa)) = (self.def(name), self.function(name)) else { continue };
                if def.is_generic() || fa.check.has_errors() {
                    continue;
                }
                out.push((name.clone(), generate_pos(def, &fa.sites, &fa.check.coercions, &self.module)));
            }
        }
        out
    }
}

pub fn analyze(module: SourceModule, opts: &Options) -> ModuleAnalysis {
    let mut diagnostics = module.diagnostics.clone();
    let env = TypeEnv::for_module(&module);
    let graph = build_call_graph(&module);
    let (groups, group_diags) = recursion_groups(&graph, &module);
    diagnostics.extend(group_diags);
    let mut functions = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        for name in &g.members {
            let Some(def) = module.function(name) else { continue };
            let check = check_function(def, &env);
            diagnostics.extend(check.diagnostics.iter().cloned());
            diagnostics.extend(check_isa_measure(def, &env));
            let sites = if g.is_recursive() { extract_call_sites(def, g) } else { Vec::new() };
            let mut measure = None;
            if g.kind == GroupKind::Simple && !def.is_generic() && !check.has_errors() {
                let outcome = measure_for(def, &sites, &env);
                if let Err(fail) = &outcome.relation {
                    diagnostics.push(fail.to_diagnostic(opts.strict));
                }
                measure = Some(outcome);
            } else if g.kind == GroupKind::Mutual && def.annotations.isa_measure.is_some() {
                diagnostics.push(Diagnostic::warning(
                    Code::UncheckedGroupMeasure,
                    def.pos,
                    format!("@IsaMeasure on `{name}` is not checked for mutually recursive groups"),
                ));
            }
            functions.push(FunctionAnalysis { name: name.clone(), group: gi, sites, check, measure });
        }
    }
    diagnostics.sort_by_key(|d| d.pos);
    diagnostics.dedup();
    ModuleAnalysis { module, env, graph, groups, functions, diagnostics }
}

/// Parses `text` as module `name` and analyzes it.
pub fn analyze_source(text: &str, name: &str, opts: &Options) -> ModuleAnalysis {
    analyze(parse_source(text, name), opts)
}
