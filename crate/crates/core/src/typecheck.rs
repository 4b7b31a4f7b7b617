//! Type inference with VDM numeric widening.
//!
//! `nat` widens implicitly to `int`. The opposite direction is accepted but
//! recorded as a [`Coercion`], the source of subtype proof obligations.

use std::collections::BTreeMap;

use crate::diag::{Code, Diagnostic, Pos};
use crate::syntax::ast::*;

/// Signature of a module function or builtin.
#[derive(Clone, Debug, PartialEq)]
pub struct FnSig {
    pub type_params: Vec<String>,
    pub params: Vec<VdmType>,
    pub result: VdmType,
}

impl FnSig {
    fn mono(params: Vec<VdmType>, result: VdmType) -> Self {
        FnSig { type_params: Vec::new(), params, result }
    }
}

fn rel(t: VdmType) -> VdmType {
    VdmType::set_of(VdmType::Product(vec![t.clone(), t]))
}

fn pair(a: VdmType, b: VdmType) -> VdmType {
    VdmType::Product(vec![a, b])
}

/// Relation constants usable by name in `@IsaMeasure`.
pub fn combinator_type(name: &str) -> Option<VdmType> {
    match name {
        "less_than_VDMNat" => Some(rel(VdmType::Nat)),
        "pair_less_VDMNat" => Some(rel(pair(VdmType::Nat, VdmType::Nat))),
        _ => None,
    }
}

fn tv(name: &str) -> VdmType {
    VdmType::TypeVar(name.to_string())
}

/// Builtin functions that are not derived from a module definition.
fn builtin_sig(name: &str) -> Option<FnSig> {
    Some(match name {
        "less_than_VDMNat" | "pair_less_VDMNat" => FnSig::mono(vec![], combinator_type(name)?),
        "trans_closure" => FnSig { type_params: vec!["A".into()], params: vec![rel(tv("A"))], result: rel(tv("A")) },
        "lex_prod" => FnSig {
            type_params: vec!["A".into(), "B".into()],
            params: vec![rel(tv("A")), rel(tv("B"))],
            result: rel(pair(tv("A"), tv("B"))),
        },
        _ => return None,
    })
}

/// Whether `name` is one of the non-module builtins (including the
/// numeric aggregates, whose typing is special-cased).
pub fn is_builtin(name: &str) -> bool {
    builtin_sig(name).is_some() || matches!(name, "maxs" | "mins")
}

/// Function signatures visible to a module.
#[derive(Clone, Debug, Default)]
pub struct TypeEnv {
    pub functions: BTreeMap<String, FnSig>,
    /// Functions with a `measure` expression, for `measure_<f>`.
    measured: BTreeMap<String, FnSig>,
    pub bindings: Vec<(String, VdmType)>,
}

impl TypeEnv {
    pub fn for_module(m: &SourceModule) -> Self {
        let mut env = TypeEnv::default();
        for f in &m.functions {
            let sig = FnSig { type_params: f.type_params.clone(), params: f.param_types(), result: f.result.clone() };
            if matches!(f.measure, MeasureClause::Expr(_)) {
                env.measured.insert(f.name.clone(), sig.clone());
            }
            env.functions.insert(f.name.clone(), sig);
        }
        env
    }

    /// The environment with `def`'s parameters bound.
    pub fn with_params(&self, def: &FunctionDef) -> Self {
        let mut env = self.clone();
        env.bindings = def.params.clone();
        env
    }

    pub fn lookup_var(&self, name: &str) -> Option<&VdmType> {
        self.bindings.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Resolves a function name, including derived `pre_f`/`measure_f`.
    pub fn lookup_fn(&self, name: &str) -> Option<FnSig> {
        if let Some(sig) = self.functions.get(name) {
            return Some(sig.clone());
        }
        if let Some(f) = name.strip_prefix("pre_") {
            if let Some(sig) = self.functions.get(f) {
                return Some(FnSig { type_params: sig.type_params.clone(), params: sig.params.clone(), result: VdmType::Bool });
            }
        }
        if let Some(f) = name.strip_prefix("measure_") {
            if let Some(sig) = self.measured.get(f) {
                return Some(FnSig { type_params: sig.type_params.clone(), params: sig.params.clone(), result: VdmType::Nat });
            }
        }
        builtin_sig(name)
    }
}

/// How a value of one type may flow into a slot of another.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compat {
    /// Always fine (identity or widening).
    Widen,
    /// Fine only when a subtype obligation holds (e.g. `int` into `nat`).
    Narrow,
    Mismatch,
}

pub fn compat(from: &VdmType, to: &VdmType) -> Compat {
    use VdmType::*;
    match (from, to) {
        (Unknown, _) | (_, Unknown) | (TypeVar(_), _) | (_, TypeVar(_)) => Compat::Widen,
        (Nat, Nat) | (Int, Int) | (Bool, Bool) | (Nat, Int) => Compat::Widen,
        (Int, Nat) => Compat::Narrow,
        (SetOf(a), SetOf(b)) => compat(a, b),
        (MapOf(d1, r1), MapOf(d2, r2)) => worst(compat(d1, d2), compat(r1, r2)),
        (Product(xs), Product(ys)) if xs.len() == ys.len() => {
            xs.iter().zip(ys).fold(Compat::Widen, |acc, (x, y)| worst(acc, compat(x, y)))
        }
        _ => Compat::Mismatch,
    }
}

fn worst(a: Compat, b: Compat) -> Compat {
    match (a, b) {
        (Compat::Mismatch, _) | (_, Compat::Mismatch) => Compat::Mismatch,
        (Compat::Narrow, _) | (_, Compat::Narrow) => Compat::Narrow,
        _ => Compat::Widen,
    }
}

/// Least common supertype, if one exists.
pub fn join(a: &VdmType, b: &VdmType) -> Option<VdmType> {
    use VdmType::*;
    Some(match (a, b) {
        (Unknown, t) | (t, Unknown) => t.clone(),
        (TypeVar(_), t) | (t, TypeVar(_)) => t.clone(),
        (Nat, Nat) => Nat,
        (Nat | Int, Nat | Int) => Int,
        (Bool, Bool) => Bool,
        (SetOf(x), SetOf(y)) => VdmType::set_of(join(x, y)?),
        (MapOf(d1, r1), MapOf(d2, r2)) => VdmType::map_of(join(d1, d2)?, join(r1, r2)?),
        (Product(xs), Product(ys)) if xs.len() == ys.len() => {
            Product(xs.iter().zip(ys).map(|(x, y)| join(x, y)).collect::<Option<Vec<_>>>()?)
        }
        _ => return None,
    })
}

/// Context entries enclosing an expression, outermost first.
#[derive(Clone, Debug, PartialEq)]
pub enum Ctx {
    Guard { cond: Expr, positive: bool },
    Let { name: String, value: Expr },
    LetInSet { name: String, set: Expr },
    Bound(Bind),
}

/// A place where an `int`-typed expression flows into a `nat` slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Coercion {
    pub pos: Pos,
    pub expr: Expr,
    pub target: VdmType,
    pub context: Vec<Ctx>,
}

/// Result of checking one function.
#[derive(Clone, Debug, Default)]
pub struct FunctionCheck {
    pub diagnostics: Vec<Diagnostic>,
    pub coercions: Vec<Coercion>,
}

impl FunctionCheck {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

struct Checker<'a> {
    env: &'a TypeEnv,
    scope: Vec<(String, VdmType)>,
    ctx: Vec<Ctx>,
    diags: Vec<Diagnostic>,
    coercions: Vec<Coercion>,
    /// Record coercion sites (off inside annotations).
    record: bool,
}

impl<'a> Checker<'a> {
    fn new(env: &'a TypeEnv) -> Self {
        Checker { env, scope: env.bindings.clone(), ctx: Vec::new(), diags: Vec::new(), coercions: Vec::new(), record: true }
    }

    fn lookup(&self, name: &str) -> Option<VdmType> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t.clone())
    }

    fn mismatch(&mut self, pos: Pos, expected: impl std::fmt::Display, found: &VdmType) {
        self.diags.push(Diagnostic::error(
            Code::TypeMismatch,
            pos,
            format!("type mismatch: expected {expected}, found {found}"),
        ));
    }

    /// Checks `e` against an expected type, pushing the expectation into
    /// conditional branches and let bodies.
    fn check(&mut self, e: &Expr, expected: &VdmType) {
        match &e.kind {
            ExprKind::If { cond, then_branch, else_branch } => {
                self.check(cond, &VdmType::Bool);
                self.ctx.push(Ctx::Guard { cond: (**cond).clone(), positive: true });
                self.check(then_branch, expected);
                self.ctx.pop();
                self.ctx.push(Ctx::Guard { cond: (**cond).clone(), positive: false });
                self.check(else_branch, expected);
                self.ctx.pop();
            }
            ExprKind::Let { name, value, body } => {
                let t = self.infer(value);
                self.scope.push((name.clone(), t));
                self.ctx.push(Ctx::Let { name: name.clone(), value: (**value).clone() });
                self.check(body, expected);
                self.ctx.pop();
                self.scope.pop();
            }
            ExprKind::LetInSet { name, set, body } => {
                let elem = self.element_of(set);
                self.scope.push((name.clone(), elem));
                self.ctx.push(Ctx::LetInSet { name: name.clone(), set: (**set).clone() });
                self.check(body, expected);
                self.ctx.pop();
                self.scope.pop();
            }
            _ => {
                let found = self.infer(e);
                self.flow(e, &found, expected);
            }
        }
    }

    /// Records what happens when a value of type `found` produced by `e`
    /// fills a slot of type `expected`.
    fn flow(&mut self, e: &Expr, found: &VdmType, expected: &VdmType) {
        match compat(found, expected) {
            Compat::Widen => {}
            Compat::Narrow => {
                if self.record {
                    self.coercions.push(Coercion {
                        pos: e.pos,
                        expr: e.clone(),
                        target: expected.clone(),
                        context: self.ctx.clone(),
                    });
                }
            }
            Compat::Mismatch => self.mismatch(e.pos, expected, found),
        }
    }

    fn element_of(&mut self, set: &Expr) -> VdmType {
        match self.infer(set) {
            VdmType::SetOf(t) => *t,
            VdmType::Unknown => VdmType::Unknown,
            other => {
                self.mismatch(set.pos, "a set", &other);
                VdmType::Unknown
            }
        }
    }

    fn numeric(&mut self, e: &Expr) -> VdmType {
        let t = self.infer(e);
        match t {
            VdmType::Nat | VdmType::Int | VdmType::Unknown | VdmType::TypeVar(_) => t,
            other => {
                self.mismatch(e.pos, "a number", &other);
                VdmType::Int
            }
        }
    }

    fn boolean(&mut self, e: &Expr) {
        self.check(e, &VdmType::Bool);
    }

    fn bind(&mut self, binds: &[Bind]) {
        for b in binds {
            let t = match &b.domain {
                BindDomain::Type(t) => t.clone(),
                BindDomain::InSet(s) => self.element_of(s),
            };
            self.scope.push((b.name.clone(), t));
            self.ctx.push(Ctx::Bound(b.clone()));
        }
    }

    fn unbind(&mut self, binds: &[Bind]) {
        for _ in binds {
            self.scope.pop();
            self.ctx.pop();
        }
    }

    fn infer(&mut self, e: &Expr) -> VdmType {
        use VdmType::*;
        match &e.kind {
            ExprKind::Int(v) => {
                if v.sign() == num_bigint::Sign::Minus {
                    Int
                } else {
                    Nat
                }
            }
            ExprKind::Bool(_) => Bool,
            ExprKind::Var(name) => match self.lookup(name) {
                Some(t) => t,
                None => {
                    self.diags.push(Diagnostic::error(
                        Code::UnboundVariable,
                        e.pos,
                        format!("unbound variable `{name}`"),
                    ));
                    Unknown
                }
            },
            ExprKind::Tuple(items) => Product(items.iter().map(|x| self.infer(x)).collect()),
            ExprKind::Unary(op, x) => match op {
                UnaryOp::Neg => {
                    self.numeric(x);
                    Int
                }
                UnaryOp::Not => {
                    self.boolean(x);
                    Bool
                }
                UnaryOp::Card => {
                    self.element_of(x);
                    Nat
                }
                UnaryOp::Dom => match self.infer(x) {
                    MapOf(d, _) => SetOf(d),
                    Unknown => VdmType::set_of(Unknown),
                    other => {
                        self.mismatch(x.pos, "a map", &other);
                        VdmType::set_of(Unknown)
                    }
                },
            },
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r, e.pos),
            ExprKind::If { cond, then_branch, else_branch } => {
                self.boolean(cond);
                self.ctx.push(Ctx::Guard { cond: (**cond).clone(), positive: true });
                let a = self.infer(then_branch);
                self.ctx.pop();
                self.ctx.push(Ctx::Guard { cond: (**cond).clone(), positive: false });
                let b = self.infer(else_branch);
                self.ctx.pop();
                match join(&a, &b) {
                    Some(t) => t,
                    None => {
                        self.mismatch(else_branch.pos, &a, &b);
                        Unknown
                    }
                }
            }
            ExprKind::Let { name, value, body } => {
                let t = self.infer(value);
                self.scope.push((name.clone(), t));
                self.ctx.push(Ctx::Let { name: name.clone(), value: (**value).clone() });
                let out = self.infer(body);
                self.ctx.pop();
                self.scope.pop();
                out
            }
            ExprKind::LetInSet { name, set, body } => {
                let elem = self.element_of(set);
                self.scope.push((name.clone(), elem));
                self.ctx.push(Ctx::LetInSet { name: name.clone(), set: (**set).clone() });
                let out = self.infer(body);
                self.ctx.pop();
                self.scope.pop();
                out
            }
            ExprKind::SetEnum(items) => {
                let mut t = Unknown;
                for x in items {
                    let xt = self.infer(x);
                    t = match join(&t, &xt) {
                        Some(j) => j,
                        None => {
                            self.mismatch(x.pos, &t, &xt);
                            t
                        }
                    };
                }
                VdmType::set_of(t)
            }
            ExprKind::SetComp { elem, binds, filter } => {
                self.bind(binds);
                if let Some(f) = filter {
                    self.ctx.push(Ctx::Guard { cond: (**f).clone(), positive: true });
                    self.boolean(f);
                }
                let t = self.infer(elem);
                if filter.is_some() {
                    self.ctx.pop();
                }
                self.unbind(binds);
                VdmType::set_of(t)
            }
            ExprKind::MapEnum(pairs) => {
                let (mut d, mut r) = (Unknown, Unknown);
                for (k, v) in pairs {
                    let kt = self.infer(k);
                    let vt = self.infer(v);
                    d = join(&d, &kt).unwrap_or_else(|| {
                        self.mismatch(k.pos, &d, &kt);
                        d.clone()
                    });
                    r = join(&r, &vt).unwrap_or_else(|| {
                        self.mismatch(v.pos, &r, &vt);
                        r.clone()
                    });
                }
                VdmType::map_of(d, r)
            }
            ExprKind::MapApply { map, key } => match self.infer(map) {
                MapOf(d, r) => {
                    self.check(key, &d);
                    *r
                }
                Unknown => Unknown,
                other => {
                    self.mismatch(map.pos, "a map", &other);
                    Unknown
                }
            },
            // unresolved `m(k)` on a map-typed variable
            ExprKind::Apply { func, type_args, args }
                if args.len() == 1 && type_args.is_empty() && matches!(self.lookup(func), Some(MapOf(..))) =>
            {
                let Some(MapOf(d, r)) = self.lookup(func) else { unreachable!() };
                self.check(&args[0], &d);
                *r
            }
            ExprKind::Apply { func, type_args, args } => self.apply(func, type_args, args, e.pos),
            ExprKind::Forall { binds, body } => {
                self.bind(binds);
                self.boolean(body);
                self.unbind(binds);
                Bool
            }
            ExprKind::IsType { expr, .. } => {
                self.infer(expr);
                Bool
            }
        }
    }

    fn binary(&mut self, op: BinaryOp, l: &Expr, r: &Expr, pos: Pos) -> VdmType {
        use VdmType::*;
        match op {
            BinaryOp::Add | BinaryOp::Mul => {
                let a = self.numeric(l);
                let b = self.numeric(r);
                if a == Nat && b == Nat {
                    Nat
                } else {
                    Int
                }
            }
            BinaryOp::Sub => {
                let a = self.infer(l);
                if let SetOf(_) = a {
                    let b = self.infer(r);
                    return self.set_join(&a, &b, r.pos);
                }
                if !matches!(a, Nat | Int | Unknown | TypeVar(_)) {
                    self.mismatch(l.pos, "a number or a set", &a);
                }
                self.numeric(r);
                Int
            }
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                self.numeric(l);
                self.numeric(r);
                Bool
            }
            BinaryOp::Eq | BinaryOp::Ne => {
                self.infer(l);
                self.infer(r);
                Bool
            }
            BinaryOp::And | BinaryOp::Or => {
                self.boolean(l);
                self.boolean(r);
                Bool
            }
            BinaryOp::Implies => {
                self.boolean(l);
                self.ctx.push(Ctx::Guard { cond: l.clone(), positive: true });
                self.boolean(r);
                self.ctx.pop();
                Bool
            }
            BinaryOp::Union | BinaryOp::Difference => {
                let a = self.infer(l);
                let b = self.infer(r);
                if !matches!(a, SetOf(_) | Unknown) {
                    self.mismatch(l.pos, "a set", &a);
                    return VdmType::set_of(Unknown);
                }
                self.set_join(&a, &b, pos)
            }
            BinaryOp::InSet => {
                let elem = self.element_of(r);
                let t = self.infer(l);
                if compat(&t, &elem) == Compat::Mismatch && compat(&elem, &t) == Compat::Mismatch {
                    self.mismatch(l.pos, &elem, &t);
                }
                Bool
            }
            BinaryOp::DomAntiRestrict => {
                let s = self.infer(l);
                let m = self.infer(r);
                match (&s, &m) {
                    (SetOf(_) | Unknown, MapOf(..) | Unknown) => m,
                    (SetOf(_) | Unknown, _) => {
                        self.mismatch(r.pos, "a map", &m);
                        Unknown
                    }
                    _ => {
                        self.mismatch(l.pos, "a set", &s);
                        Unknown
                    }
                }
            }
        }
    }

    fn set_join(&mut self, a: &VdmType, b: &VdmType, pos: Pos) -> VdmType {
        match join(a, b) {
            Some(t @ VdmType::SetOf(_)) => t,
            _ => {
                self.mismatch(pos, a, b);
                VdmType::set_of(VdmType::Unknown)
            }
        }
    }

    fn apply(&mut self, func: &str, type_args: &[VdmType], args: &[Expr], pos: Pos) -> VdmType {
        if func == "maxs" || func == "mins" {
            if args.len() != 1 {
                self.arity(func, 1, args.len(), pos);
                return VdmType::Int;
            }
            return match self.element_of(&args[0]) {
                VdmType::Nat => VdmType::Nat,
                VdmType::Int | VdmType::Unknown => VdmType::Int,
                other => {
                    self.mismatch(args[0].pos, "a set of numbers", &VdmType::set_of(other));
                    VdmType::Int
                }
            };
        }
        let Some(sig) = self.env.lookup_fn(func) else {
            self.diags.push(Diagnostic::error(Code::UnknownFunction, pos, format!("unknown function `{func}`")));
            for a in args {
                self.infer(a);
            }
            return VdmType::Unknown;
        };
        if sig.params.len() != args.len() {
            self.arity(func, sig.params.len(), args.len(), pos);
            return sig.result;
        }
        let subst: Vec<(String, VdmType)> = if !type_args.is_empty() {
            if type_args.len() != sig.type_params.len() {
                self.arity(&format!("{func} type arguments"), sig.type_params.len(), type_args.len(), pos);
            }
            sig.type_params.iter().cloned().zip(type_args.iter().cloned()).collect()
        } else {
            Vec::new()
        };
        for (a, p) in args.iter().zip(&sig.params) {
            let p = p.instantiate(&subst);
            self.check(a, &p);
        }
        sig.result.instantiate(&subst)
    }

    fn arity(&mut self, func: &str, expected: usize, found: usize, pos: Pos) {
        self.diags.push(Diagnostic::error(
            Code::ArityMismatch,
            pos,
            format!("`{func}` expects {expected} argument(s), found {found}"),
        ));
    }
}

/// Infers the type of `e` under `env`'s variable bindings.
pub fn infer_type(e: &Expr, env: &TypeEnv) -> Result<VdmType, Vec<Diagnostic>> {
    let mut c = Checker::new(env);
    let t = c.infer(e);
    if c.diags.iter().any(Diagnostic::is_error) {
        Err(c.diags)
    } else {
        Ok(t)
    }
}

/// Checks a definition: body against the result type, precondition,
/// measure, witness and lemma annotations. `@IsaMeasure` is checked by
/// [`check_isa_measure`].
pub fn check_function(def: &FunctionDef, env: &TypeEnv) -> FunctionCheck {
    let penv = env.with_params(def);
    let mut c = Checker::new(&penv);
    if def.is_generic() {
        c.diags.push(Diagnostic::warning(
            Code::GenericFunction,
            def.pos,
            format!("generic function `{}` is only available to the interpreter and is not translated", def.name),
        ));
    }
    if let Some(pre) = &def.pre {
        c.check(pre, &VdmType::Bool);
    }
    c.check(&def.body, &def.result);
    c.record = false;
    if let MeasureClause::Expr(m) = &def.measure {
        let t = c.infer(m);
        if compat(&t, &VdmType::Nat) == Compat::Mismatch {
            c.mismatch(m.pos, "nat", &t);
        }
    }
    if let Some(w) = &def.annotations.witness {
        let mut wc = Checker::new(env);
        wc.record = false;
        wc.infer(w);
        c.diags.append(&mut wc.diags);
    }
    for l in &def.annotations.lemmas {
        c.check(l, &VdmType::Bool);
    }
    let mut diagnostics = c.diags;
    diagnostics.sort_by_key(|d| d.pos);
    FunctionCheck { diagnostics, coercions: c.coercions }
}

/// Checks that an `@IsaMeasure` annotation is a relation over the
/// function's parameter signature.
pub fn check_isa_measure(def: &FunctionDef, env: &TypeEnv) -> Vec<Diagnostic> {
    let Some(ann) = &def.annotations.isa_measure else {
        return Vec::new();
    };
    let sig = def.signature_type();
    let expected = VdmType::set_of(VdmType::Product(vec![sig.clone(), sig]));
    let found = match &ann.kind {
        ExprKind::Var(name) => match combinator_type(name) {
            Some(t) => t,
            None => {
                return vec![Diagnostic::error(
                    Code::MeasureRelationTypeMismatch,
                    ann.pos,
                    format!("`{name}` is not a known relation"),
                )]
            }
        },
        _ => {
            let mut c = Checker::new(env);
            c.record = false;
            let t = c.infer(ann);
            if c.diags.iter().any(Diagnostic::is_error) {
                return c.diags;
            }
            t
        }
    };
    if compat(&found, &expected) == Compat::Mismatch {
        return vec![Diagnostic::error(
            Code::MeasureRelationTypeMismatch,
            ann.pos,
            format!("@IsaMeasure relation has type {found}, expected {expected}"),
        )];
    }
    Vec::new()
}
