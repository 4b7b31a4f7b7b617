//! Isabelle/HOL rendering of VDM types and expressions.
//!
//! Symbols are written in their ASCII `\<name>` encoding. Parentheses
//! follow HOL operator priorities, with a few additions kept for
//! readability: module-function applications under arithmetic operators
//! and `if` in a `then` branch are always wrapped.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::diag::{Code, Diagnostic, Pos};
use crate::syntax::ast::*;
use crate::typecheck::{infer_type, TypeEnv};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {what} has no Isabelle translation")]
pub struct Unsupported {
    pub what: String,
    pub pos: Pos,
}

impl Unsupported {
    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(Code::UnsupportedConstruct, self.pos, format!("{} has no Isabelle translation", self.what))
    }
}

type R = Result<String, Unsupported>;

/// Bound names, their scope entries, and membership conjuncts.
type Binders = (Vec<String>, Vec<(String, VdmType)>, Vec<String>);

/// Type in argument position: compound types parenthesized.
pub fn isa_type_atom(t: &VdmType) -> String {
    match t {
        VdmType::Product(_) => format!("({})", isa_type(t)),
        _ => isa_type(t),
    }
}

pub fn isa_type(t: &VdmType) -> String {
    match t {
        VdmType::Nat => "VDMNat".into(),
        VdmType::Int => "VDMInt".into(),
        VdmType::Bool => "bool".into(),
        VdmType::SetOf(e) => format!("{} VDMSet", isa_type_atom(e)),
        VdmType::MapOf(d, r) => format!("({} \\<rightharpoonup> {})", isa_type_atom(d), isa_type_atom(r)),
        VdmType::Product(ts) => ts.iter().map(isa_type_atom).collect::<Vec<_>>().join(" \\<times> "),
        VdmType::TypeVar(v) => format!("'{}", v.to_lowercase()),
        VdmType::Unknown => "'a".into(),
    }
}

/// Curried signature `T1 \<Rightarrow> ... \<Rightarrow> R`.
pub fn isa_signature(def: &FunctionDef) -> String {
    let mut parts: Vec<String> = def.params.iter().map(|(_, t)| isa_type_atom(t)).collect();
    parts.push(isa_type(&def.result));
    parts.join(" \\<Rightarrow> ")
}

/// `(Sig \<times> Sig) set` for a relation over the parameter signature.
pub fn relation_type(def: &FunctionDef) -> String {
    let sig = isa_type_atom(&def.signature_type());
    format!("({sig} \\<times> {sig}) set")
}

/// Invariant predicate for values of `t`, if it has one worth stating.
pub fn invariant_term(t: &VdmType) -> Option<String> {
    Some(match t {
        VdmType::Nat => "inv_VDMNat".into(),
        VdmType::Int => "inv_VDMInt".into(),
        VdmType::Bool | VdmType::TypeVar(_) | VdmType::Unknown => "inv_True".into(),
        VdmType::SetOf(e) => format!("inv_VDMSet' {}", inv_atom(e)),
        VdmType::MapOf(d, r) => format!("inv_VDMMap {} {}", inv_atom(d), inv_atom(r)),
        VdmType::Product(ts) => {
            let names: Vec<String> = (1..=ts.len()).map(|i| format!("x{i}")).collect();
            let parts: Vec<String> = ts
                .iter()
                .zip(&names)
                .map(|(t, n)| format!("{} {n}", inv_atom(t)))
                .collect();
            format!("(\\<lambda> ({}) . {})", names.join(", "), parts.join(" \\<and> "))
        }
    })
}

fn inv_atom(t: &VdmType) -> String {
    let s = invariant_term(t).unwrap_or_else(|| "inv_True".into());
    if s.contains(' ') && !s.starts_with('(') {
        format!("({s})")
    } else {
        s
    }
}

/// Definition bundles that unfold the invariants of `t`.
pub fn invariant_defs(t: &VdmType, out: &mut Vec<String>) {
    let mut add = |s: &str| {
        if !out.iter().any(|x| x == s) {
            out.push(s.to_string());
        }
    };
    match t {
        VdmType::Int => {
            add("inv_VDMInt_def");
            add("inv_True_def");
        }
        VdmType::SetOf(e) => {
            add("inv_VDMSet'_defs");
            invariant_defs(e, out);
        }
        VdmType::MapOf(d, r) => {
            add("inv_VDMMap_defs");
            invariant_defs(d, out);
            invariant_defs(r, out);
        }
        VdmType::Product(ts) => ts.iter().for_each(|t| invariant_defs(t, out)),
        _ => {}
    }
}

const TOP: u32 = 0;
const APP: u32 = 1000;
const ARG: u32 = 1001;

fn binop(op: BinaryOp) -> (&'static str, u32, Assoc) {
    use BinaryOp::*;
    match op {
        Implies => ("\\<longrightarrow>", 25, Assoc::Right),
        Or => ("\\<or>", 30, Assoc::Right),
        And => ("\\<and>", 35, Assoc::Right),
        Eq => ("=", 50, Assoc::Non),
        Ne => ("\\<noteq>", 50, Assoc::Non),
        Lt => ("<", 50, Assoc::Non),
        Le => ("\\<le>", 50, Assoc::Non),
        Gt => (">", 50, Assoc::Non),
        Ge => ("\\<ge>", 50, Assoc::Non),
        InSet => ("\\<in>", 50, Assoc::Non),
        Add => ("+", 65, Assoc::Left),
        Sub | Difference => ("-", 65, Assoc::Left),
        Union => ("\\<union>", 65, Assoc::Left),
        DomAntiRestrict => ("-\\<triangleleft>", 65, Assoc::Left),
        Mul => ("*", 70, Assoc::Left),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Assoc {
    Left,
    Right,
    Non,
}

fn wrap(s: String, own: u32, need: u32) -> String {
    if own < need {
        format!("({s})")
    } else {
        s
    }
}

/// Expression printer. `env` types the variables in scope, which decides
/// whether an empty `{}` compared with a map prints as `Map.empty`.
pub struct IsaPrinter<'a> {
    env: TypeEnv,
    module_fns: &'a BTreeSet<String>,
}

impl<'a> IsaPrinter<'a> {
    pub fn new(env: TypeEnv, module_fns: &'a BTreeSet<String>) -> Self {
        IsaPrinter { env, module_fns }
    }

    pub fn with_bindings(&self, bindings: Vec<(String, VdmType)>) -> IsaPrinter<'a> {
        let mut env = self.env.clone();
        env.bindings = bindings;
        IsaPrinter { env, module_fns: self.module_fns }
    }

    pub fn expr(&mut self, e: &Expr) -> R {
        self.at(e, TOP)
    }

    /// Prints `e` where an operator of priority `need` is required.
    pub fn at(&mut self, e: &Expr, need: u32) -> R {
        Ok(match &e.kind {
            ExprKind::Int(v) if v.sign() == num_bigint::Sign::Minus => wrap(v.to_string(), 80, need),
            ExprKind::Int(v) => v.to_string(),
            ExprKind::Bool(b) => (if *b { "True" } else { "False" }).into(),
            ExprKind::Var(v) => v.clone(),
            ExprKind::Tuple(items) => format!("({})", self.list(items)?),
            ExprKind::SetEnum(items) => format!("{{{}}}", self.list(items)?),
            ExprKind::MapEnum(pairs) if pairs.is_empty() => "Map.empty".into(),
            ExprKind::MapEnum(pairs) => {
                let mut parts = Vec::new();
                for (k, v) in pairs {
                    parts.push(format!("{} \\<mapsto> {}", self.at(k, TOP)?, self.at(v, TOP)?));
                }
                format!("[{}]", parts.join(", "))
            }
            ExprKind::Unary(op, x) => {
                let (s, own) = match op {
                    UnaryOp::Not => (format!("\\<not> {}", self.at(x, 40)?), 40),
                    UnaryOp::Neg => (format!("- {}", self.at(x, 81)?), 80),
                    UnaryOp::Card => (format!("card {}", self.at(x, ARG)?), APP),
                    UnaryOp::Dom => (format!("dom {}", self.at(x, ARG)?), APP),
                };
                wrap(s, own, need)
            }
            ExprKind::Binary(op, l, r) => {
                let (sym, p, assoc) = binop(*op);
                let (lp, rp) = match assoc {
                    _ if *op == BinaryOp::Implies => (31, 31),
                    Assoc::Left => (p, p + 1),
                    Assoc::Right => (p + 1, p),
                    Assoc::Non => (p + 1, p + 1),
                };
                let arith = matches!(op, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul);
                let ls = self.operand(l, lp, arith)?;
                let rs = self.operand(r, rp, arith)?;
                let (ls, rs) = self.map_empty(*op, l, r, ls, rs);
                wrap(format!("{ls} {sym} {rs}"), p, need)
            }
            ExprKind::If { cond, then_branch, else_branch } => {
                let c = self.at(cond, TOP)?;
                let t = self.at(then_branch, 1)?;
                let f = self.at(else_branch, TOP)?;
                wrap(format!("if {c} then {t} else {f}"), TOP, need)
            }
            ExprKind::Let { name, value, body } => {
                let v = self.at(value, TOP)?;
                let ty = infer_type(value, &self.env).unwrap_or(VdmType::Unknown);
                let b = self.scoped(vec![(name.clone(), ty)], |p| p.at(body, TOP))?;
                wrap(format!("let {name} = {v} in {b}"), TOP, need)
            }
            ExprKind::LetInSet { name, set, body } => {
                let elem = self.element_type(set);
                if body.as_var() == Some(name.as_str()) {
                    let s = self.at(set, 51)?;
                    return Ok(format!("(SOME {name} . {name} \\<in> {s})"));
                }
                let choice = self.choice(set)?;
                let b = self.scoped(vec![(name.clone(), elem)], |p| p.at(body, TOP))?;
                wrap(format!("let {name} = {choice} in {b}"), TOP, need)
            }
            ExprKind::SetComp { elem, binds, filter } => {
                let (names, scope, mut conj) = self.binders(binds)?;
                self.scoped(scope, |p| {
                    let el = p.at(elem, TOP)?;
                    if let Some(f) = filter {
                        conj.push(p.at(f, 36)?);
                    }
                    let cond = if conj.is_empty() { "True".to_string() } else { conj.join(" \\<and> ") };
                    Ok(format!("{{ {el} | {} . {cond} }}", names.join(" ")))
                })?
            }
            ExprKind::Forall { binds, body } => {
                let (names, scope, conj) = self.binders(binds)?;
                self.scoped(scope, |p| {
                    let b = p.at(body, 26)?;
                    let lhs = if conj.is_empty() { b } else { format!("{} \\<longrightarrow> {b}", conj.join(" \\<and> ")) };
                    Ok(format!("(\\<forall> {} . {lhs})", names.join(" ")))
                })?
            }
            ExprKind::MapApply { map, key } => {
                wrap(format!("the ({} {})", self.at(map, ARG)?, self.at(key, ARG)?), APP, need)
            }
            ExprKind::Apply { func, args, .. } if args.len() == 1 && self.env.lookup_var(func).is_some() => {
                wrap(format!("the ({func} {})", self.at(&args[0], ARG)?), APP, need)
            }
            ExprKind::Apply { func, args, .. } => {
                let name = match func.as_str() {
                    "maxs" => "Max",
                    "mins" => "Min",
                    f => f,
                };
                if args.is_empty() {
                    return Ok(name.to_string());
                }
                let mut s = name.to_string();
                for a in args {
                    s.push(' ');
                    s.push_str(&self.at(a, ARG)?);
                }
                wrap(s, APP, need)
            }
            ExprKind::IsType { .. } => {
                return Err(Unsupported { what: "type test `is_`".into(), pos: e.pos });
            }
        })
    }

    fn operand(&mut self, e: &Expr, need: u32, arith: bool) -> R {
        match &e.kind {
            ExprKind::Apply { func, .. } if arith && self.module_fns.contains(func) => Ok(format!("({})", self.at(e, TOP)?)),
            _ => self.at(e, need),
        }
    }

    /// `{}` compared against a map means the empty map.
    fn map_empty(&mut self, op: BinaryOp, l: &Expr, r: &Expr, ls: String, rs: String) -> (String, String) {
        if !matches!(op, BinaryOp::Eq | BinaryOp::Ne) {
            return (ls, rs);
        }
        let empty = |e: &Expr| matches!(&e.kind, ExprKind::SetEnum(xs) if xs.is_empty());
        let is_map = |p: &Self, e: &Expr| matches!(infer_type(e, &p.env), Ok(VdmType::MapOf(..)));
        if empty(r) && is_map(self, l) {
            (ls, "Map.empty".into())
        } else if empty(l) && is_map(self, r) {
            ("Map.empty".into(), rs)
        } else {
            (ls, rs)
        }
    }

    fn list(&mut self, items: &[Expr]) -> R {
        let mut parts = Vec::with_capacity(items.len());
        for x in items {
            parts.push(self.at(x, TOP)?);
        }
        Ok(parts.join(", "))
    }

    fn element_type(&self, set: &Expr) -> VdmType {
        match infer_type(set, &self.env) {
            Ok(VdmType::SetOf(t)) => *t,
            _ => VdmType::Unknown,
        }
    }

    /// `(SOME x . x \<in> s)` with a choice variable that does not clash.
    fn choice(&mut self, set: &Expr) -> R {
        let free = set.free_vars();
        let v = ["x", "y", "v", "w"]
            .into_iter()
            .map(String::from)
            .find(|c| !free.contains(c))
            .unwrap_or_else(|| "x'".into());
        Ok(format!("(SOME {v} . {v} \\<in> {})", self.at(set, 51)?))
    }

    fn binders(&mut self, binds: &[Bind]) -> Result<Binders, Unsupported> {
        let mut names = Vec::new();
        let mut scope = Vec::new();
        let mut conj = Vec::new();
        for b in binds {
            names.push(b.name.clone());
            match &b.domain {
                BindDomain::Type(t) => scope.push((b.name.clone(), t.clone())),
                BindDomain::InSet(s) => {
                    let ty = self.element_type(s);
                    conj.push(format!("{} \\<in> {}", b.name, self.at(s, 51)?));
                    scope.push((b.name.clone(), ty));
                }
            }
        }
        Ok((names, scope, conj))
    }

    fn scoped<T>(&mut self, extra: Vec<(String, VdmType)>, f: impl FnOnce(&mut Self) -> T) -> T {
        let depth = self.env.bindings.len();
        self.env.bindings.extend(extra);
        let out = f(self);
        self.env.bindings.truncate(depth);
        out
    }
}
