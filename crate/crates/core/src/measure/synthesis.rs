//! Symbolic measure relations: from `@IsaMeasure`, or synthesized from
//! the call sites of a recursive definition.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::CallSite;
use crate::diag::{Code, Diagnostic, Pos};
use crate::syntax::ast::*;
use crate::syntax::render_expr;
use crate::typecheck::{combinator_type, infer_type, Ctx, TypeEnv};

/// One comprehension `{ (dst, src) | binders & filter }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub binders: Vec<(String, VdmType)>,
    pub dst: Expr,
    pub src: Expr,
    pub filter: Expr,
}

impl Branch {
    /// VDM comprehension text of this branch.
    pub fn render(&self) -> String {
        let binds: Vec<String> = self.binders.iter().map(|(n, t)| format!("{n}:{t}")).collect();
        let pair = Expr::synth(ExprKind::Tuple(vec![self.dst.clone(), self.src.clone()]));
        format!("{{{} | {} & {}}}", render_expr(&pair), binds.join(", "), render_expr(&self.filter))
    }

    /// Whether the filter has `pre_<f>(params)` among its conjuncts.
    pub fn has_pre_conjunct(&self, def: &FunctionDef) -> bool {
        let want = pre_call(def);
        self.filter.conjuncts().into_iter().any(|c| *c == want)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureRelation {
    /// Union of comprehensions.
    Branches(Vec<Branch>),
    /// A named relation constant such as `pair_less_VDMNat`.
    Named(String),
}

impl MeasureRelation {
    pub fn branches(&self) -> &[Branch] {
        match self {
            MeasureRelation::Branches(b) => b,
            MeasureRelation::Named(_) => &[],
        }
    }

    pub fn render(&self) -> String {
        match self {
            MeasureRelation::Branches(bs) => bs.iter().map(Branch::render).collect::<Vec<_>>().join(" union "),
            MeasureRelation::Named(n) => n.clone(),
        }
    }
}

impl Serialize for MeasureRelation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RelationSource {
    Annotated,
    Synthesized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WrapperChoice {
    GenVDMNatTerm,
    GenSetTerm,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FailureKind {
    NestedCall,
    Opaque,
    AnnotationShape,
}

#[derive(Clone, Debug, PartialEq, Error, Serialize)]
#[error("{pos}: cannot synthesize a measure relation for {function} ({kind:?} at {site}); provide @IsaMeasure")]
pub struct SynthesisFailure {
    pub function: String,
    pub kind: FailureKind,
    pub site: String,
    pub pos: Pos,
}

impl SynthesisFailure {
    pub fn hint(&self) -> &'static str {
        "provide @IsaMeasure"
    }

    pub fn to_diagnostic(&self, strict: bool) -> Diagnostic {
        let msg = format!("cannot synthesize a measure relation for {} ({:?} at {}); {}", self.function, self.kind, self.site, self.hint());
        if strict {
            Diagnostic::error(Code::SynthesisFailure, self.pos, msg)
        } else {
            Diagnostic::warning(Code::SynthesisFailure, self.pos, msg)
        }
    }
}

/// Whether values of `ty` carry a non-trivial VDM invariant.
pub fn has_invariant(ty: &VdmType) -> bool {
    match ty {
        VdmType::Nat | VdmType::SetOf(_) | VdmType::MapOf(..) => true,
        VdmType::Product(ts) => ts.iter().any(has_invariant),
        VdmType::Int | VdmType::Bool | VdmType::TypeVar(_) | VdmType::Unknown => false,
    }
}

/// A `pre_<f>` definition is emitted when there is a user precondition or
/// a parameter type with an invariant.
pub fn has_pre_definition(def: &FunctionDef) -> bool {
    def.pre.is_some() || def.params.iter().any(|(_, t)| has_invariant(t))
}

/// `pre_<f>(params)`.
pub fn pre_call(def: &FunctionDef) -> Expr {
    Expr::apply(format!("pre_{}", def.name), def.params.iter().map(|(n, _)| Expr::var(n.clone())).collect())
}

fn element_type(t: &VdmType) -> VdmType {
    match t {
        VdmType::SetOf(e) => (**e).clone(),
        _ => VdmType::Unknown,
    }
}

/// One branch per call site. Plain lets are substituted away; each
/// let-in-set becomes a binder constrained by membership.
pub fn synthesize_relation(def: &FunctionDef, sites: &[CallSite], env: &TypeEnv) -> Result<MeasureRelation, SynthesisFailure> {
    let fail = |site: &CallSite, kind| SynthesisFailure { function: def.name.clone(), kind, site: site.display(), pos: site.pos };
    if let Some(s) = sites.iter().find(|s| s.nested) {
        return Err(fail(s, FailureKind::NestedCall));
    }
    if let Some(s) = sites.iter().find(|s| s.opaque) {
        return Err(fail(s, FailureKind::Opaque));
    }
    let mut branches = Vec::new();
    for site in sites {
        let mut binders = def.params.clone();
        let mut conjuncts = Vec::new();
        if has_pre_definition(def) {
            conjuncts.push(pre_call(def));
        }
        // innermost binding last; applied innermost first
        let mut subst: Vec<(String, Expr)> = Vec::new();
        let apply = |e: &Expr, subst: &[(String, Expr)]| {
            subst.iter().rev().fold(e.clone(), |acc, (n, v)| acc.substitute(n, v))
        };
        for ctx in &site.context {
            match ctx {
                Ctx::Guard { cond, positive } => {
                    let c = apply(cond, &subst);
                    conjuncts.push(if *positive { c } else { c.negate() });
                }
                Ctx::Let { name, value } => {
                    let v = apply(value, &subst);
                    subst.push((name.clone(), v));
                }
                Ctx::LetInSet { name, set } => {
                    let set = apply(set, &subst);
                    let taken: BTreeSet<String> = binders.iter().map(|(n, _)| n.clone()).collect();
                    let mut fresh = name.clone();
                    while taken.contains(&fresh) {
                        fresh.push('\'');
                    }
                    let mut scope = env.clone();
                    scope.bindings = binders.clone();
                    let ty = infer_type(&set, &scope).map(|t| element_type(&t)).unwrap_or(VdmType::Unknown);
                    conjuncts.push(Expr::binary(BinaryOp::InSet, Expr::var(fresh.clone()), set));
                    if fresh != *name {
                        subst.push((name.clone(), Expr::var(fresh.clone())));
                    }
                    binders.push((fresh, ty));
                }
                Ctx::Bound(_) => {}
            }
        }
        let dst = Expr::tuple(site.args.iter().map(|a| apply(a, &subst)).collect());
        branches.push(Branch { binders, dst, src: def.param_tuple(), filter: Expr::conjunction(conjuncts) });
    }
    Ok(MeasureRelation::Branches(branches))
}

/// Reads an `@IsaMeasure` expression: a relation name, a comprehension of
/// `mk_(dst, src)` pairs, or a union of comprehensions. Binders are renamed
/// to the parameter names when `src` is a tuple of binders, and the
/// precondition conjunct is added when missing.
pub fn relation_from_annotation(def: &FunctionDef, ann: &Expr, env: &TypeEnv) -> Result<MeasureRelation, SynthesisFailure> {
    let shape = |e: &Expr| SynthesisFailure {
        function: def.name.clone(),
        kind: FailureKind::AnnotationShape,
        site: render_expr(e),
        pos: e.pos,
    };
    if let ExprKind::Var(name) = &ann.kind {
        if combinator_type(name).is_some() {
            return Ok(MeasureRelation::Named(name.clone()));
        }
        return Err(shape(ann));
    }
    let mut comps = Vec::new();
    let mut stack = vec![ann];
    while let Some(e) = stack.pop() {
        match &e.kind {
            ExprKind::Binary(BinaryOp::Union, l, r) => {
                stack.push(r);
                stack.push(l);
            }
            ExprKind::SetComp { .. } => comps.push(e),
            _ => return Err(shape(e)),
        }
    }
    let mut branches = Vec::new();
    for comp in comps {
        let ExprKind::SetComp { elem, binds, filter } = &comp.kind else { unreachable!() };
        let ExprKind::Tuple(pair) = &elem.kind else { return Err(shape(elem)) };
        if pair.len() != 2 {
            return Err(shape(elem));
        }
        let mut binders = Vec::new();
        let mut conjuncts = Vec::new();
        for b in binds {
            match &b.domain {
                BindDomain::Type(t) => binders.push((b.name.clone(), t.clone())),
                BindDomain::InSet(s) => {
                    let mut scope = env.clone();
                    scope.bindings = binders.clone();
                    let ty = infer_type(s, &scope).map(|t| element_type(&t)).unwrap_or(VdmType::Unknown);
                    binders.push((b.name.clone(), ty));
                    conjuncts.push(Expr::binary(BinaryOp::InSet, Expr::var(b.name.clone()), s.clone()));
                }
            }
        }
        if let Some(f) = filter {
            conjuncts.extend(f.conjuncts().into_iter().cloned());
        }
        let mut branch = Branch { binders, dst: pair[0].clone(), src: pair[1].clone(), filter: Expr::conjunction(conjuncts) };
        rename_to_params(&mut branch, def);
        if has_pre_definition(def) && !branch.has_pre_conjunct(def) {
            let mut cs: Vec<Expr> = vec![pre_call(def)];
            cs.extend(branch.filter.conjuncts().into_iter().filter(|c| !matches!(c.kind, ExprKind::Bool(true))).cloned());
            branch.filter = Expr::conjunction(cs);
        }
        branches.push(branch);
    }
    Ok(MeasureRelation::Branches(branches))
}

/// Renames binders so that `src` reads as the parameter tuple.
fn rename_to_params(b: &mut Branch, def: &FunctionDef) {
    let src_vars: Vec<&str> = match &b.src.kind {
        ExprKind::Var(v) => vec![v.as_str()],
        ExprKind::Tuple(items) => match items.iter().map(|e| e.as_var()).collect::<Option<Vec<_>>>() {
            Some(vs) => vs,
            None => return,
        },
        _ => return,
    };
    let names = def.param_names();
    let distinct: BTreeSet<&str> = src_vars.iter().copied().collect();
    if src_vars.len() != names.len() || distinct.len() != names.len() {
        return;
    }
    if !src_vars.iter().all(|v| b.binders.iter().any(|(n, _)| n == v)) {
        return;
    }
    // other binders must not collide with parameter names
    let others: Vec<String> =
        b.binders.iter().map(|(n, _)| n.clone()).filter(|n| !src_vars.contains(&n.as_str())).collect();
    let mut renames: Vec<(String, String)> = src_vars.iter().zip(&names).map(|(v, p)| (v.to_string(), p.clone())).collect();
    let mut taken: BTreeSet<String> = names.iter().cloned().collect();
    for o in others {
        let mut fresh = o.clone();
        while taken.contains(&fresh) {
            fresh.push('\'');
        }
        taken.insert(fresh.clone());
        renames.push((o, fresh));
    }
    renames.retain(|(a, b)| a != b);
    if renames.is_empty() {
        return;
    }
    // two phases so that swaps do not interfere
    let tmp: Vec<(String, String)> = renames.iter().enumerate().map(|(i, (a, _))| (a.clone(), format!("{a}#{i}"))).collect();
    let fin: Vec<(String, String)> = renames.iter().enumerate().map(|(i, (a, b))| (format!("{a}#{i}"), b.clone())).collect();
    let both = |e: &Expr| e.rename_free(&tmp).rename_free(&fin);
    b.dst = both(&b.dst);
    b.src = both(&b.src);
    b.filter = both(&b.filter);
    for (n, _) in b.binders.iter_mut() {
        if let Some((_, to)) = renames.iter().find(|(from, _)| from == n) {
            *n = to.clone();
        }
    }
}

/// Picks the Isabelle wrapper for the relation of `def`.
pub fn choose_wrapper(def: &FunctionDef, rel: &MeasureRelation) -> WrapperChoice {
    if matches!(rel, MeasureRelation::Named(_)) || def.params.len() != 1 {
        return WrapperChoice::None;
    }
    match &def.params[0].1 {
        VdmType::Nat => WrapperChoice::GenVDMNatTerm,
        VdmType::SetOf(_) => WrapperChoice::GenSetTerm,
        _ => WrapperChoice::None,
    }
}

/// Relation, provenance and wrapper for one recursive definition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureOutcome {
    pub function: String,
    pub source: RelationSource,
    pub relation: Result<MeasureRelation, SynthesisFailure>,
    pub wrapper: Option<WrapperChoice>,
}

/// Annotation when present, synthesis otherwise.
pub fn measure_for(def: &FunctionDef, sites: &[CallSite], env: &TypeEnv) -> MeasureOutcome {
    let (source, relation) = match &def.annotations.isa_measure {
        Some(ann) => (RelationSource::Annotated, relation_from_annotation(def, ann, env)),
        None => (RelationSource::Synthesized, synthesize_relation(def, sites, env)),
    };
    let wrapper = relation.as_ref().ok().map(|r| choose_wrapper(def, r));
    MeasureOutcome { function: def.name.clone(), source, relation, wrapper }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{build_call_graph, extract_call_sites, recursion_groups};
    use crate::syntax::parse_source;

    fn outcome(src: &str, f: &str) -> MeasureOutcome {
        let m = parse_source(src, "T");
        assert!(m.diagnostics.iter().all(|d| !d.is_error()), "{:?}", m.diagnostics);
        let (groups, _) = recursion_groups(&build_call_graph(&m), &m);
        let g = groups.iter().find(|g| g.contains(f)).unwrap();
        let def = m.function(f).unwrap();
        measure_for(def, &extract_call_sites(def, g), &TypeEnv::for_module(&m))
    }

    const FACT: &str = "functions\nfact: nat -> nat\nfact(n) == if n = 0 then 1 else n * fact(n - 1)\nmeasure n;\n";

    #[test]
    fn fact_synthesized() {
        let o = outcome(FACT, "fact");
        assert_eq!(o.source, RelationSource::Synthesized);
        let r = o.relation.unwrap();
        assert_eq!(r.render(), "{mk_((n - 1), n) | n:nat & pre_fact(n) and (n <> 0)}");
        assert_eq!(o.wrapper, Some(WrapperChoice::GenVDMNatTerm));
    }

    #[test]
    fn let_in_set_becomes_binder() {
        let src = "functions\nsum_elems: map nat to nat -> nat\nsum_elems(m) == if m = {|->} then 0 else let d in set dom m in m(d) + sum_elems({d} <-: m)\nmeasure card dom m;\n";
        let o = outcome(src, "sum_elems");
        let r = o.relation.unwrap();
        let b = &r.branches()[0];
        assert_eq!(b.binders, vec![("m".into(), VdmType::map_of(VdmType::Nat, VdmType::Nat)), ("d".into(), VdmType::Nat)]);
        assert_eq!(render_expr(&b.filter), "pre_sum_elems(m) and ((m <> {|->}) and (d in set dom m))");
        assert_eq!(o.wrapper, Some(WrapperChoice::None));
    }

    #[test]
    fn plain_let_is_substituted() {
        let src = "functions\nf: nat -> nat\nf(n) == let k = n - 1 in if n = 0 then 0 else f(k)\nmeasure n;\n";
        let r = outcome(src, "f").relation.unwrap();
        assert_eq!(render_expr(&r.branches()[0].dst), "n - 1");
    }

    #[test]
    fn nested_call_fails() {
        let src = "functions\nack: nat * nat -> nat\nack(m, n) == if m = 0 then n + 1 else if n = 0 then ack(m - 1, 1) else ack(m - 1, ack(m, n - 1))\nmeasure is not yet specified;\n";
        let err = outcome(src, "ack").relation.unwrap_err();
        assert_eq!(err.kind, FailureKind::NestedCall);
        assert!(err.to_string().contains("provide @IsaMeasure"));
        assert_eq!(err.site, "ack((m - 1), ack(m, (n - 1)))");
    }

    #[test]
    fn annotation_binders_renamed_and_pre_added() {
        let src = "functions\nsumset: set of nat -> nat\nsumset(s) == if s = {} then 0 else let e in set s in sumset(s - {e}) + e\n--@IsaMeasure({(x - {e}, x) | x : set of nat, e : nat & x <> {} and e in set x})\nmeasure card s;\n";
        let o = outcome(src, "sumset");
        assert_eq!(o.source, RelationSource::Annotated);
        let r = o.relation.unwrap();
        assert_eq!(r.render(), "{mk_((s - {e}), s) | s:set of nat, e:nat & pre_sumset(s) and ((s <> {}) and (e in set s))}");
        assert_eq!(o.wrapper, Some(WrapperChoice::GenSetTerm));
    }

    #[test]
    fn named_annotation() {
        let src = "functions\nack: nat * nat -> nat\nack(m, n) == if m = 0 then n + 1 else if n = 0 then ack(m - 1, 1) else ack(m - 1, ack(m, n - 1))\n--@IsaMeasure(pair_less_VDMNat)\nmeasure is not yet specified;\n";
        let o = outcome(src, "ack");
        assert_eq!(o.relation.unwrap(), MeasureRelation::Named("pair_less_VDMNat".into()));
        assert_eq!(o.wrapper, Some(WrapperChoice::None));
    }

    #[test]
    fn every_filter_implies_pre() {
        let o = outcome(FACT, "fact");
        let m = parse_source(FACT, "T");
        let def = m.function("fact").unwrap();
        assert!(o.relation.unwrap().branches().iter().all(|b| b.has_pre_conjunct(def)));
    }
}
