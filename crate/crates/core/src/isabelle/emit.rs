//! Block emitters: preconditions, function definitions, measure relations
//! and termination scripts with proof holes.

use std::collections::BTreeSet;

use super::expr::{invariant_defs, invariant_term, isa_signature, isa_type_atom, relation_type, IsaPrinter, Unsupported};
use super::{render_theory, Block, BlockKind, TheoryDoc};
use crate::analysis::{CallSite, GroupKind, RecursionGroup};
use crate::diag::{Code, Diagnostic};
use crate::measure::{has_pre_definition, Branch, MeasureRelation, WrapperChoice};
use crate::measure::synthesis::has_invariant;
use crate::pipeline::ModuleAnalysis;
use crate::syntax::ast::*;
use crate::typecheck::Ctx;

type R<T> = Result<T, Unsupported>;

fn cart(s: &str) -> String {
    format!("\\<open>{s}\\<close>")
}

/// Shared state for emitting one module.
pub struct Emitter<'a> {
    pub analysis: &'a ModuleAnalysis,
    fns: BTreeSet<String>,
}

impl<'a> Emitter<'a> {
    pub fn new(analysis: &'a ModuleAnalysis) -> Self {
        let fns = analysis.module.functions.iter().map(|f| f.name.clone()).collect();
        Emitter { analysis, fns }
    }

    fn printer(&self, def: &FunctionDef) -> IsaPrinter<'_> {
        IsaPrinter::new(self.analysis.env.with_params(def), &self.fns)
    }

    fn module_printer(&self) -> IsaPrinter<'_> {
        IsaPrinter::new(self.analysis.env.clone(), &self.fns)
    }
}

fn lhs(def: &FunctionDef) -> String {
    std::iter::once(def.name.clone()).chain(def.params.iter().map(|(n, _)| n.clone())).collect::<Vec<_>>().join(" ")
}

fn pre_lhs(def: &FunctionDef) -> String {
    format!("pre_{}", lhs(def))
}

/// `pre_<f>` definition and its `lemmas pre_<f>_defs` bundle; nothing when
/// the function has neither a precondition nor invariant-carrying types.
pub fn emit_pre_definition(em: &Emitter, def: &FunctionDef, mutual: bool) -> R<Vec<Block>> {
    if !has_pre_definition(def) {
        return Ok(Vec::new());
    }
    let mut conj: Vec<String> = def
        .params
        .iter()
        .filter(|(_, t)| has_invariant(t))
        .filter_map(|(n, t)| invariant_term(t).map(|inv| format!("{inv} {n}")))
        .collect();
    if let Some(pre) = &def.pre {
        let need = if conj.is_empty() { 0 } else { 36 };
        conj.push(em.printer(def).at(pre, need)?);
    }
    let mut sig: Vec<String> = def.params.iter().map(|(_, t)| isa_type_atom(t)).collect();
    sig.push("bool".into());
    let name = format!("pre_{}", def.name);
    let attr = if mutual { " [termination_simp]:" } else { "" };
    let definition = Block::new(
        BlockKind::Definition,
        Some(name.clone()),
        vec![
            format!("definition {name} :: {} where{attr}", cart(&sig.join(" \\<Rightarrow> "))),
            format!("  {}", cart(&format!("{} \\<equiv> {}", pre_lhs(def), conj.join(" \\<and> ")))),
        ],
    );
    let mut defs = vec![format!("{name}_def")];
    for (_, t) in &def.params {
        invariant_defs(t, &mut defs);
    }
    let bundle = Block::new(BlockKind::LemmasBundle, Some(format!("{name}_defs")), vec![format!("lemmas {name}_defs = {}", defs.join(" "))]);
    Ok(vec![definition, bundle])
}

/// Right-hand side of the defining equation, guarded by `pre_<f>` when
/// one is defined.
fn equation(em: &Emitter, def: &FunctionDef, sep: &str) -> R<String> {
    let mut p = em.printer(def);
    let rhs = if has_pre_definition(def) {
        format!("(if {} then {} else undefined)", pre_lhs(def), p.at(&def.body, 1)?)
    } else {
        p.at(&def.body, 51)?
    };
    Ok(cart(&format!("{} {sep} {rhs}", lhs(def))))
}

/// `definition` for non-recursive functions, `function` for simple
/// recursion and one `fun ... and ...` block for a mutual group.
pub fn emit_function(em: &Emitter, group: &RecursionGroup) -> R<Block> {
    let defs: Vec<&FunctionDef> = group.members.iter().filter_map(|n| em.analysis.def(n)).collect();
    match group.kind {
        GroupKind::NonRecursive => {
            let def = defs[0];
            Ok(Block::new(
                BlockKind::Definition,
                Some(def.name.clone()),
                vec![format!("definition {} :: {} where", def.name, cart(&isa_signature(def))), format!("  {}", equation(em, def, "\\<equiv>")?)],
            ))
        }
        GroupKind::Simple => {
            let def = defs[0];
            Ok(Block::new(
                BlockKind::Function,
                Some(def.name.clone()),
                vec![
                    format!("function (domintros) {} :: {} where", def.name, cart(&isa_signature(def))),
                    format!("  {}", equation(em, def, "=")?),
                    "  by (pat_completeness, auto)".into(),
                ],
            ))
        }
        GroupKind::Mutual => {
            let heads: Vec<String> = defs.iter().map(|d| format!("{} :: {}", d.name, cart(&isa_signature(d)))).collect();
            let mut lines = vec![format!("fun (domintros) {} where", heads.join(" and "))];
            for (i, d) in defs.iter().enumerate() {
                let lead = if i == 0 { "  " } else { "| " };
                lines.push(format!("{lead}{}", equation(em, d, "=")?));
            }
            Ok(Block::new(BlockKind::Fun, Some(group.members.join("_")), lines))
        }
    }
}

/// `<f>_wf_rel` for unions and set recursion, `<f>_wf` otherwise.
pub fn relation_name(def: &FunctionDef, rel: &MeasureRelation, wrapper: WrapperChoice) -> String {
    if rel.branches().len() > 1 || wrapper == WrapperChoice::GenSetTerm {
        format!("{}_wf_rel", def.name)
    } else {
        format!("{}_wf", def.name)
    }
}

/// The relation handed to `termination`, inside its wrapper.
pub fn wrapped_relation(name: &str, wrapper: WrapperChoice) -> String {
    match wrapper {
        WrapperChoice::GenVDMNatTerm => format!("gen_VDMNat_term {name}"),
        WrapperChoice::GenSetTerm => format!("gen_set_term {name}"),
        WrapperChoice::None => name.to_string(),
    }
}

fn branch(em: &Emitter, def: &FunctionDef, b: &Branch) -> R<String> {
    let mut p = em.printer(def).with_bindings(b.binders.clone());
    let names: Vec<&str> = b.binders.iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("{{ ({}, {}) | {} . {} }}", p.at(&b.dst, 0)?, p.at(&b.src, 0)?, names.join(" "), p.at(&b.filter, 0)?))
}

/// Context-free form of a call site: guards as premises and the argument
/// tuple with let-bound names replaced by their values or choice terms.
fn decomposed(def: &FunctionDef, site: &CallSite) -> (Vec<Expr>, Expr) {
    let mut premises = Vec::new();
    if has_pre_definition(def) {
        premises.push(crate::measure::synthesis::pre_call(def));
    }
    let mut subst: Vec<(String, Expr)> = Vec::new();
    let apply = |e: &Expr, subst: &[(String, Expr)]| subst.iter().rev().fold(e.clone(), |acc, (n, v)| acc.substitute(n, v));
    for ctx in &site.context {
        match ctx {
            Ctx::Guard { cond, positive } => {
                let c = apply(cond, &subst);
                premises.push(if *positive { c } else { c.negate() });
            }
            Ctx::Let { name, value } => {
                let v = apply(value, &subst);
                subst.push((name.clone(), v));
            }
            Ctx::LetInSet { name, set } => {
                let choice = Expr::synth(ExprKind::LetInSet {
                    name: name.clone(),
                    set: Box::new(apply(set, &subst)),
                    body: Box::new(Expr::var(name.clone())),
                });
                subst.push((name.clone(), choice));
            }
            Ctx::Bound(_) => {}
        }
    }
    let dst = Expr::tuple(site.args.iter().map(|a| apply(a, &subst)).collect());
    (premises, dst)
}

/// Relation definition, well-foundedness lemma and the decomposition
/// lemma with one statement per recursive call.
pub fn emit_wf_relation(em: &Emitter, def: &FunctionDef, rel: &MeasureRelation, wrapper: WrapperChoice) -> R<Vec<Block>> {
    let name = relation_name(def, rel, wrapper);
    let body = match rel {
        MeasureRelation::Named(n) => n.clone(),
        MeasureRelation::Branches(bs) => {
            let parts = bs.iter().map(|b| branch(em, def, b)).collect::<R<Vec<_>>>()?;
            parts.join(" \\<union>\n    ")
        }
    };
    let kind = if rel.branches().len() > 1 { BlockKind::Definition } else { BlockKind::Abbreviation };
    let keyword = if kind == BlockKind::Definition { "definition" } else { "abbreviation" };
    let relation = Block::new(
        kind,
        Some(name.clone()),
        vec![format!("{keyword} {name} :: {} where", cart(&relation_type(def))), format!("  {}", cart(&format!("{name} \\<equiv> {body}")))],
    );
    let wrapped = wrapped_relation(&name, wrapper);
    let wf_target = if wrapper == WrapperChoice::None { wrapped.clone() } else { format!("({wrapped})") };
    let wf_name = format!("l_{}_term_wf", def.name);
    let wf = Block::new(BlockKind::Lemma, Some(wf_name.clone()), vec![format!("lemma {wf_name}: {}", cart(&format!("wf {wf_target}"))), "  sorry".into()]);

    let dec_name = format!("l_pre_{}_{}_wf_rel", def.name, def.name);
    let mut lines = vec![format!("lemma {dec_name}:")];
    let fa = em.analysis.function(&def.name);
    let src = def.param_tuple();
    for site in fa.map(|f| f.sites.as_slice()).unwrap_or(&[]) {
        let (premises, dst) = decomposed(def, site);
        let mut p = em.printer(def);
        let prem = premises.iter().map(|e| p.at(e, 0)).collect::<R<Vec<_>>>()?;
        let concl = format!("({}, {}) \\<in> {wrapped}", p.at(&dst, 0)?, p.at(&src, 0)?);
        let stmt = match prem.len() {
            0 => concl,
            1 => format!("{} \\<Longrightarrow> {concl}", prem[0]),
            _ => format!("\\<lbrakk>{}\\<rbrakk> \\<Longrightarrow> {concl}", prem.join("; ")),
        };
        lines.push(format!("  {}", cart(&stmt)));
    }
    lines.push("  sorry".into());
    Ok(vec![relation, wf, Block::new(BlockKind::Lemma, Some(dec_name), lines)])
}

/// Termination script with one proof hole per subgoal, then the relation
/// validity lemma and the lemmas requested by `@Witness` and `@Lemma`.
pub fn emit_termination(em: &Emitter, def: &FunctionDef, rel: &MeasureRelation, wrapper: WrapperChoice) -> R<Vec<Block>> {
    let name = relation_name(def, rel, wrapper);
    let wrapped = wrapped_relation(&name, wrapper);
    let arg = if wrapper == WrapperChoice::None { wrapped.clone() } else { cart(&wrapped) };
    let dec_name = format!("l_pre_{}_{}_wf_rel", def.name, def.name);
    let mut lines = vec!["termination".to_string(), format!("  apply (relation {arg})"), format!("  subgoal (* wf: l_{}_term_wf *) sorry", def.name)];
    for site in em.analysis.function(&def.name).map(|f| f.sites.as_slice()).unwrap_or(&[]) {
        lines.push(format!("  subgoal (* call {}: {dec_name} *) sorry", site.display()));
    }
    lines.push("  done".into());
    let mut blocks = vec![Block::new(BlockKind::Termination, Some(def.name.clone()), lines)];

    let mut p = em.printer(def);
    match witness_args(def) {
        Some(args) => {
            let tuple = Expr::tuple(args.clone());
            let valid = format!("l_{}_term_valid", def.name);
            blocks.push(Block::new(
                BlockKind::Lemma,
                Some(valid.clone()),
                vec![format!("lemma {valid}: {}", cart(&format!("\\<exists>y. (y, {}) \\<in> {wrapped}", p.at(&tuple, 0)?))), "  sorry".into()],
            ));
            if has_pre_definition(def) {
                let call = Expr::apply(format!("pre_{}", def.name), args);
                blocks.push(Block::new(BlockKind::Lemma, None, vec![format!("lemma {}", cart(&p.at(&call, 0)?)), "  sorry".into()]));
            }
        }
        None => blocks.push(Block::comment(format!("no @Witness given for {}: relation non-emptiness is not stated", def.name))),
    }
    blocks.extend(emit_lemmas(em, def)?);
    Ok(blocks)
}

fn emit_lemmas(em: &Emitter, def: &FunctionDef) -> R<Vec<Block>> {
    let mut p = em.module_printer();
    def.annotations
        .lemmas
        .iter()
        .map(|l| Ok(Block::new(BlockKind::Lemma, None, vec![format!("lemma {}", cart(&p.at(l, 0)?)), "  sorry".into()])))
        .collect()
}

/// Arguments of `@Witness(f(args))` when it applies `def`.
fn witness_args(def: &FunctionDef) -> Option<Vec<Expr>> {
    match &def.annotations.witness.as_ref()?.kind {
        ExprKind::Apply { func, args, .. } if *func == def.name => Some(args.clone()),
        _ => None,
    }
}

/// Result of translating one module.
#[derive(Clone, Debug)]
pub struct Translation {
    pub theory: TheoryDoc,
    pub text: String,
    pub diagnostics: Vec<Diagnostic>,
}

fn emit_group(em: &Emitter, g: &RecursionGroup, diags: &mut Vec<Diagnostic>) -> R<Vec<Block>> {
    let mutual = g.kind == GroupKind::Mutual;
    let mut blocks = Vec::new();
    for n in &g.members {
        if let Some(def) = em.analysis.def(n) {
            blocks.extend(emit_pre_definition(em, def, mutual)?);
        }
    }
    blocks.push(emit_function(em, g)?);
    if g.kind != GroupKind::Simple {
        return Ok(blocks);
    }
    let def = em.analysis.def(&g.members[0]).expect("group member is defined");
    let Some(outcome) = em.analysis.function(&def.name).and_then(|f| f.measure.as_ref()) else {
        return Ok(blocks);
    };
    match (&outcome.relation, outcome.wrapper) {
        (Ok(rel), Some(w)) => {
            blocks.extend(emit_wf_relation(em, def, rel, w)?);
            blocks.extend(emit_termination(em, def, rel, w)?);
            if witness_args(def).is_none() {
                diags.push(Diagnostic::warning(
                    Code::MissingWitness,
                    def.pos,
                    format!("no @Witness for `{}`; the relation validity lemma is omitted", def.name),
                ));
            }
        }
        (Err(fail), _) => {
            blocks.push(Block::comment(format!(
                "termination of {} is left to the user: no measure relation ({:?} at {}); {}",
                def.name,
                fail.kind,
                fail.site,
                fail.hint()
            )));
            blocks.extend(emit_lemmas(em, def)?);
        }
        (Ok(_), None) => {}
    }
    Ok(blocks)
}

/// Translates every function of an analyzed module. Functions with errors
/// are replaced by a comment; the rest of the module is still emitted.
pub fn translate(analysis: &ModuleAnalysis, toolkit: &str) -> Translation {
    let em = Emitter::new(analysis);
    let mut doc = TheoryDoc::new(analysis.module.name.clone(), toolkit);
    let mut diagnostics = Vec::new();
    for g in &analysis.groups {
        let defs: Vec<&FunctionDef> = g.members.iter().filter_map(|n| analysis.def(n)).collect();
        let names = g.members.join(", ");
        if let Some(d) = defs.iter().find(|d| d.is_generic()) {
            doc.blocks.push(Block::comment(format!("{} is generic and is not translated", d.name)));
            continue;
        }
        if defs.iter().any(|d| analysis.function(&d.name).is_some_and(|f| f.check.has_errors())) {
            doc.blocks.push(Block::comment(format!("{names} not translated: type errors")));
            continue;
        }
        match emit_group(&em, g, &mut diagnostics) {
            Ok(blocks) => doc.blocks.extend(blocks),
            Err(u) => {
                doc.blocks.push(Block::comment(format!("{names} not translated: {}", u.what)));
                diagnostics.push(u.to_diagnostic());
            }
        }
    }
    let text = render_theory(&doc);
    Translation { theory: doc, text, diagnostics }
}
