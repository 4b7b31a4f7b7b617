//! `analyze` report. The JSON layout is described by
//! `schema/analyze.schema.json`.

use std::fmt::Write as _;

use serde::Serialize;

use vdmrec::analysis::GroupKind;
use vdmrec::measure::{RelationSource, WrapperChoice};
use vdmrec::syntax::ast::BindDomain;
use vdmrec::syntax::render_expr;
use vdmrec::typecheck::Ctx;
use vdmrec::{Diagnostic, ModuleAnalysis, Pos};

#[derive(Serialize)]
pub struct ModuleReport {
    pub file: String,
    pub module: String,
    /// Members of each recursive group, callee groups first.
    pub groups: Vec<Vec<String>>,
    pub functions: Vec<FunctionReport>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Serialize)]
pub struct FunctionReport {
    pub name: String,
    pub kind: GroupKind,
    pub call_sites: Vec<SiteReport>,
    pub measure: Option<MeasureReport>,
}

#[derive(Serialize)]
pub struct SiteReport {
    pub call: String,
    pub pos: Pos,
    pub guards: Vec<GuardReport>,
    pub binders: Vec<String>,
    pub nested: bool,
    pub opaque: bool,
}

#[derive(Serialize)]
pub struct GuardReport {
    pub cond: String,
    pub positive: bool,
}

#[derive(Serialize)]
pub struct MeasureReport {
    pub source: RelationSource,
    pub relation: Option<String>,
    pub wrapper: Option<WrapperChoice>,
    pub failure: Option<String>,
}

fn binder(c: &Ctx) -> Option<String> {
    match c {
        Ctx::Let { name, value } => Some(format!("let {name} = {}", render_expr(value))),
        Ctx::LetInSet { name, set } => Some(format!("let {name} in set {}", render_expr(set))),
        Ctx::Bound(b) => Some(match &b.domain {
            BindDomain::Type(t) => format!("{}:{t}", b.name),
            BindDomain::InSet(s) => format!("{} in set {}", b.name, render_expr(s)),
        }),
        Ctx::Guard { .. } => None,
    }
}

impl ModuleReport {
    pub fn new(a: &ModuleAnalysis, file: &str) -> Self {
        let functions = a
            .functions
            .iter()
            .map(|f| FunctionReport {
                name: f.name.clone(),
                kind: a.groups[f.group].kind,
                call_sites: f
                    .sites
                    .iter()
                    .map(|s| SiteReport {
                        call: s.display(),
                        pos: s.pos,
                        guards: s.guards().into_iter().map(|(c, p)| GuardReport { cond: render_expr(c), positive: p }).collect(),
                        binders: s.context.iter().filter_map(binder).collect(),
                        nested: s.nested,
                        opaque: s.opaque,
                    })
                    .collect(),
                measure: f.measure.as_ref().map(|m| MeasureReport {
                    source: m.source,
                    relation: m.relation.as_ref().ok().map(|r| r.render()),
                    wrapper: m.wrapper,
                    failure: m.relation.as_ref().err().map(|e| e.to_string()),
                }),
            })
            .collect();
        ModuleReport {
            file: file.to_string(),
            module: a.module.name.clone(),
            groups: a.groups.iter().filter(|g| g.is_recursive()).map(|g| g.members.clone()).collect(),
            functions,
            diagnostics: a.diagnostics.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("module {} ({})\n", self.module, self.file);
        for g in &self.groups {
            let _ = writeln!(out, "  group {{{}}}", g.join(", "));
        }
        for f in self.functions.iter().filter(|f| f.kind != GroupKind::NonRecursive) {
            let _ = writeln!(out, "  {} ({:?})", f.name, f.kind);
            for s in &f.call_sites {
                let mut flags = String::new();
                if s.nested {
                    flags.push_str(" [nested]");
                }
                if s.opaque {
                    flags.push_str(" [opaque]");
                }
                let _ = writeln!(out, "    call {} at {}{flags}", s.call, s.pos);
                for g in &s.guards {
                    let _ = writeln!(out, "      {} {}", if g.positive { "if" } else { "unless" }, g.cond);
                }
                for b in &s.binders {
                    let _ = writeln!(out, "      with {b}");
                }
            }
            if let Some(m) = &f.measure {
                match (&m.relation, &m.failure) {
                    (Some(r), _) => {
                        let _ = writeln!(out, "    relation ({:?}, wrapper {:?}): {r}", m.source, m.wrapper.unwrap_or(WrapperChoice::None));
                    }
                    (None, Some(e)) => {
                        let _ = writeln!(out, "    relation unavailable: {e}");
                    }
                    (None, None) => {}
                }
            }
        }
        out
    }
}
