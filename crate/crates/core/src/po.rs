//! VDM proof obligations for recursive definitions: measure totality,
//! subtype narrowing and recursive decrease, rendered in VDMJ's layout.

use std::fmt;

use serde::Serialize;

use crate::analysis::CallSite;
use crate::diag::{Code, Diagnostic};
use crate::interp::universe::{cartesian, Universe, UniverseError};
use crate::interp::{EvalConfig, Interpreter, Value};
use crate::syntax::ast::*;
use crate::syntax::render_expr;
use crate::typecheck::{Coercion, Ctx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PoKind {
    TotalMeasure,
    Subtype,
    RecursiveDecrease,
}

impl PoKind {
    fn title(self) -> &'static str {
        match self {
            PoKind::TotalMeasure => "total function obligation",
            PoKind::Subtype => "subtype obligation",
            PoKind::RecursiveDecrease => "recursive function obligation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProofObligation {
    pub index: usize,
    pub kind: PoKind,
    pub function: String,
    #[serde(skip)]
    pub expr: Expr,
    pub rendered: String,
    /// Set when a measure the obligation refers to does not exist.
    pub skeleton: bool,
}

impl ProofObligation {
    /// VDMJ header line, e.g. `Proof Obligation 1: (Unproved) fact; measure_fact: total function obligation`.
    pub fn header(&self) -> String {
        let subject = match self.kind {
            PoKind::TotalMeasure => format!("{}; measure_{}", self.function, self.function),
            _ => self.function.clone(),
        };
        format!("Proof Obligation {}: (Unproved) {subject}: {}", self.index, self.kind.title())
    }
}

impl fmt::Display for ProofObligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\n  {}", self.header(), self.rendered)
    }
}

/// Obligations of one function plus the diagnostics raised on the way.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PoSet {
    pub obligations: Vec<ProofObligation>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Blocks separated by blank lines.
pub fn render_pos(pos: &[ProofObligation]) -> String {
    let blocks: Vec<String> = pos.iter().map(|p| p.to_string()).collect();
    let mut out = blocks.join("\n\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

fn params_of(def: &FunctionDef) -> Vec<Expr> {
    def.params.iter().map(|(n, _)| Expr::var(n.clone())).collect()
}

/// Wraps `body` in the site context, innermost binder nearest the body.
fn in_context(context: &[Ctx], body: Expr) -> Expr {
    context.iter().rev().fold(body, |acc, ctx| match ctx {
        Ctx::Guard { cond, positive: true } => Expr::binary(BinaryOp::Implies, cond.clone(), acc),
        Ctx::Guard { cond, positive: false } => Expr::binary(BinaryOp::Implies, Expr::unary(UnaryOp::Not, cond.clone()), acc),
        Ctx::Let { name, value } => {
            Expr::synth(ExprKind::Let { name: name.clone(), value: Box::new(value.clone()), body: Box::new(acc) })
        }
        Ctx::LetInSet { name, set } => Expr::synth(ExprKind::Forall {
            binds: vec![Bind { name: name.clone(), domain: BindDomain::InSet(set.clone()) }],
            body: Box::new(acc),
        }),
        Ctx::Bound(b) => Expr::synth(ExprKind::Forall { binds: vec![b.clone()], body: Box::new(acc) }),
    })
}

/// `forall params & [pre =>] body`.
fn close(def: &FunctionDef, body: Expr) -> Expr {
    let body = match &def.pre {
        Some(_) => Expr::binary(BinaryOp::Implies, Expr::apply(format!("pre_{}", def.name), params_of(def)), body),
        None => body,
    };
    if def.params.is_empty() {
        return body;
    }
    let binds = def.params.iter().map(|(n, t)| Bind { name: n.clone(), domain: BindDomain::Type(t.clone()) }).collect();
    Expr::synth(ExprKind::Forall { binds, body: Box::new(body) })
}

fn narrowing(c: &Coercion) -> Expr {
    match c.target {
        VdmType::Nat => Expr::binary(BinaryOp::Ge, c.expr.clone(), Expr::int(0)),
        _ => Expr::synth(ExprKind::IsType { expr: Box::new(c.expr.clone()), ty: c.target.clone() }),
    }
}

/// The three obligation classes for `def`. Nested call sites get no
/// decrease obligation since their argument is itself a recursive result.
pub fn generate_pos(def: &FunctionDef, sites: &[CallSite], coercions: &[Coercion], module: &SourceModule) -> PoSet {
    let mut set = PoSet::default();
    let has_measure = |name: &str| module.function(name).is_some_and(|f| f.measure.expr().is_some());
    let mut push = |kind, expr: Expr, skeleton| {
        let index = set.obligations.len() + 1;
        let rendered = render_expr(&expr);
        set.obligations.push(ProofObligation { index, kind, function: def.name.clone(), expr, rendered, skeleton });
    };
    let measured = def.measure.expr().is_some();
    if measured {
        let m = Expr::apply(format!("measure_{}", def.name), params_of(def));
        push(PoKind::TotalMeasure, close(def, Expr::synth(ExprKind::IsType { expr: Box::new(m), ty: VdmType::Nat })), false);
    }
    for c in coercions {
        push(PoKind::Subtype, close(def, in_context(&c.context, narrowing(c))), false);
    }
    for site in sites.iter().filter(|s| !s.nested) {
        let here = Expr::apply(format!("measure_{}", def.name), params_of(def));
        let there = Expr::apply(format!("measure_{}", site.callee), site.args.clone());
        let skeleton = !measured || !has_measure(&site.callee);
        push(PoKind::RecursiveDecrease, close(def, in_context(&site.context, Expr::binary(BinaryOp::Gt, here, there))), skeleton);
    }
    if !measured {
        let what = match def.measure {
            MeasureClause::NotYetSpecified => "is not yet specified",
            _ => "is missing",
        };
        set.diagnostics.push(Diagnostic::warning(
            Code::NoMeasure,
            def.pos,
            format!("measure of recursive function `{}` {what}; decrease obligations are skeletons", def.name),
        ));
    }
    set
}

/// One failing assignment of a bounded check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub bindings: Vec<(String, Value)>,
    /// Evaluation error, when the obligation could not be evaluated.
    pub error: Option<String>,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.bindings.iter().map(|(n, v)| format!("{n}={v}")).collect();
        f.write_str(&parts.join(", "))?;
        if let Some(e) = &self.error {
            write!(f, " ({e})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoCheck {
    pub index: usize,
    pub function: String,
    pub kind: PoKind,
    pub assignments: usize,
    pub counterexamples: Vec<Counterexample>,
    /// Skeletons are not evaluated.
    pub skipped: bool,
}

impl PoCheck {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PoReport {
    pub checks: Vec<PoCheck>,
}

impl PoReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(PoCheck::holds)
    }
}

/// Evaluates each obligation over every assignment of its leading
/// quantifier drawn from `universe`, collecting the failing ones.
pub fn check_pos_bounded(pos: &[ProofObligation], module: &SourceModule, universe: &Universe) -> Result<PoReport, UniverseError> {
    let config = EvalConfig { universe: Some(universe.clone()), memoize: true, ..EvalConfig::default() };
    let mut report = PoReport::default();
    for po in pos {
        let mut check = PoCheck {
            index: po.index,
            function: po.function.clone(),
            kind: po.kind,
            assignments: 0,
            counterexamples: Vec::new(),
            skipped: po.skeleton,
        };
        if po.skeleton {
            report.checks.push(check);
            continue;
        }
        let (binds, body) = match &po.expr.kind {
            ExprKind::Forall { binds, body } if binds.iter().all(|b| matches!(b.domain, BindDomain::Type(_))) => (binds.as_slice(), &**body),
            _ => (&[][..], &po.expr),
        };
        let tys: Vec<VdmType> = binds
            .iter()
            .map(|b| match &b.domain {
                BindDomain::Type(t) => t.clone(),
                BindDomain::InSet(_) => unreachable!(),
            })
            .collect();
        universe.assignments(&tys)?;
        let domains = tys.iter().map(|t| universe.values_of(t)).collect::<Result<Vec<_>, _>>()?;
        let mut it = Interpreter::new(module, config.clone());
        for row in cartesian(&domains) {
            check.assignments += 1;
            let bindings: Vec<(String, Value)> = binds.iter().map(|b| b.name.clone()).zip(row).collect();
            match it.eval_with(body, &bindings) {
                Ok(Value::Bool(true)) => {}
                Ok(Value::Bool(false)) => check.counterexamples.push(Counterexample { bindings, error: None }),
                Ok(v) => check.counterexamples.push(Counterexample { bindings, error: Some(format!("not a boolean: {v}")) }),
                Err(e) => check.counterexamples.push(Counterexample { bindings, error: Some(e.to_string()) }),
            }
        }
        report.checks.push(check);
    }
    Ok(report)
}
