//! Abstract syntax for the supported VDM-SL subset.
//!
//! Every [`Expr`] carries the position of its first token. Positions are
//! ignored by equality so that re-parsed text compares equal to the original.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;

use crate::diag::{Diagnostic, Pos};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VdmType {
    Nat,
    Int,
    Bool,
    SetOf(Box<VdmType>),
    MapOf(Box<VdmType>, Box<VdmType>),
    Product(Vec<VdmType>),
    /// `@A` in a polymorphic signature.
    TypeVar(String),
    /// Element type of an empty collection literal; compatible with anything.
    Unknown,
}

impl VdmType {
    pub fn set_of(t: VdmType) -> Self {
        VdmType::SetOf(Box::new(t))
    }

    pub fn map_of(d: VdmType, r: VdmType) -> Self {
        VdmType::MapOf(Box::new(d), Box::new(r))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, VdmType::Nat | VdmType::Int)
    }

    /// Substitutes type variables by name.
    pub fn instantiate(&self, subst: &[(String, VdmType)]) -> VdmType {
        match self {
            VdmType::TypeVar(v) => subst
                .iter()
                .find(|(n, _)| n == v)
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| self.clone()),
            VdmType::SetOf(t) => VdmType::set_of(t.instantiate(subst)),
            VdmType::MapOf(d, r) => VdmType::map_of(d.instantiate(subst), r.instantiate(subst)),
            VdmType::Product(ts) => VdmType::Product(ts.iter().map(|t| t.instantiate(subst)).collect()),
            _ => self.clone(),
        }
    }
}

impl fmt::Display for VdmType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VdmType::Nat => f.write_str("nat"),
            VdmType::Int => f.write_str("int"),
            VdmType::Bool => f.write_str("bool"),
            VdmType::SetOf(t) => match **t {
                VdmType::MapOf(..) => write!(f, "set of ({t})"),
                _ => write!(f, "set of {t}"),
            },
            VdmType::MapOf(d, r) => {
                let wrap = |t: &VdmType| matches!(t, VdmType::MapOf(..) | VdmType::SetOf(..));
                if wrap(d) {
                    write!(f, "map ({d}) to ")?;
                } else {
                    write!(f, "map {d} to ")?;
                }
                if wrap(r) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            VdmType::Product(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" * ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            VdmType::TypeVar(v) => write!(f, "@{v}"),
            VdmType::Unknown => f.write_str("?"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
    Card,
    Dom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    /// Integer subtraction, or set difference when both operands are sets.
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    Union,
    /// Explicit set difference `\`.
    Difference,
    InSet,
    DomAntiRestrict,
}

impl BinaryOp {
    pub fn vdm_symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
            BinaryOp::Implies => "=>",
            BinaryOp::Union => "union",
            BinaryOp::Difference => "\\",
            BinaryOp::InSet => "in set",
            BinaryOp::DomAntiRestrict => "<-:",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq
                | BinaryOp::Ne
                | BinaryOp::Lt
                | BinaryOp::Le
                | BinaryOp::Gt
                | BinaryOp::Ge
                | BinaryOp::InSet
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BindDomain {
    Type(VdmType),
    InSet(Expr),
}

/// One bound name in a comprehension or quantifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Bind {
    pub name: String,
    pub domain: BindDomain,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(BigInt),
    Bool(bool),
    Var(String),
    Tuple(Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    If { cond: Box<Expr>, then_branch: Box<Expr>, else_branch: Box<Expr> },
    Let { name: String, value: Box<Expr>, body: Box<Expr> },
    LetInSet { name: String, set: Box<Expr>, body: Box<Expr> },
    SetEnum(Vec<Expr>),
    SetComp { elem: Box<Expr>, binds: Vec<Bind>, filter: Option<Box<Expr>> },
    MapEnum(Vec<(Expr, Expr)>),
    MapApply { map: Box<Expr>, key: Box<Expr> },
    /// Application of a module function or builtin, optionally instantiated
    /// with type arguments (`f[nat](x)`).
    Apply { func: String, type_args: Vec<VdmType>, args: Vec<Expr> },
    Forall { binds: Vec<Bind>, body: Box<Expr> },
    IsType { expr: Box<Expr>, ty: VdmType },
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    /// An expression with no meaningful source position (synthesized terms).
    pub fn synth(kind: ExprKind) -> Self {
        Expr { kind, pos: Pos::default() }
    }

    pub fn int(v: impl Into<BigInt>) -> Self {
        Expr::synth(ExprKind::Int(v.into()))
    }

    pub fn bool(b: bool) -> Self {
        Expr::synth(ExprKind::Bool(b))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::synth(ExprKind::Var(name.into()))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Self {
        let pos = l.pos;
        Expr::new(ExprKind::Binary(op, Box::new(l), Box::new(r)), pos)
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        let pos = e.pos;
        Expr::new(ExprKind::Unary(op, Box::new(e)), pos)
    }

    pub fn apply(func: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::synth(ExprKind::Apply { func: func.into(), type_args: Vec::new(), args })
    }

    pub fn tuple(mut items: Vec<Expr>) -> Self {
        if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::synth(ExprKind::Tuple(items))
        }
    }

    /// Right-nested conjunction; `true` for an empty list.
    pub fn conjunction(conjuncts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut items: Vec<Expr> = conjuncts.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Expr::bool(true);
        };
        while let Some(e) = items.pop() {
            acc = Expr::binary(BinaryOp::And, e, acc);
        }
        acc
    }

    /// Flattens nested `and` into its conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Binary(BinaryOp::And, l, r) => {
                let mut out = l.conjuncts();
                out.extend(r.conjuncts());
                out
            }
            _ => vec![self],
        }
    }

    /// Logical negation that turns `=` into `<>` (and back) instead of
    /// wrapping; everything else becomes `not e`.
    pub fn negate(&self) -> Expr {
        match &self.kind {
            ExprKind::Binary(BinaryOp::Eq, l, r) => Expr::new(
                ExprKind::Binary(BinaryOp::Ne, l.clone(), r.clone()),
                self.pos,
            ),
            ExprKind::Binary(BinaryOp::Ne, l, r) => Expr::new(
                ExprKind::Binary(BinaryOp::Eq, l.clone(), r.clone()),
                self.pos,
            ),
            _ => Expr::new(ExprKind::Unary(UnaryOp::Not, Box::new(self.clone())), self.pos),
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Immediate subexpressions, in source order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => vec![],
            ExprKind::Tuple(items) | ExprKind::SetEnum(items) => items.iter().collect(),
            ExprKind::Apply { args, .. } => args.iter().collect(),
            ExprKind::Unary(_, e) => vec![e],
            ExprKind::Binary(_, l, r) => vec![l, r],
            ExprKind::If { cond, then_branch, else_branch } => vec![cond, then_branch, else_branch],
            ExprKind::Let { value, body, .. } => vec![value, body],
            ExprKind::LetInSet { set, body, .. } => vec![set, body],
            ExprKind::SetComp { elem, binds, filter } => {
                let mut out: Vec<&Expr> = binds
                    .iter()
                    .filter_map(|b| match &b.domain {
                        BindDomain::InSet(s) => Some(s),
                        BindDomain::Type(_) => None,
                    })
                    .collect();
                out.push(elem);
                out.extend(filter.as_deref());
                out
            }
            ExprKind::MapEnum(pairs) => pairs.iter().flat_map(|(d, r)| [d, r]).collect(),
            ExprKind::MapApply { map, key } => vec![map, key],
            ExprKind::Forall { binds, body } => {
                let mut out: Vec<&Expr> = binds
                    .iter()
                    .filter_map(|b| match &b.domain {
                        BindDomain::InSet(s) => Some(s),
                        BindDomain::Type(_) => None,
                    })
                    .collect();
                out.push(body);
                out
            }
            ExprKind::IsType { expr, .. } => vec![expr],
        }
    }

    /// Free variables (names not bound inside the expression).
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        free_vars_into(self, &mut Vec::new(), &mut out);
        out
    }

    /// Names of all functions applied anywhere inside the expression.
    pub fn applied_functions(&self, out: &mut Vec<(String, Pos)>) {
        if let ExprKind::Apply { func, .. } = &self.kind {
            out.push((func.clone(), self.pos));
        }
        for c in self.children() {
            c.applied_functions(out);
        }
    }

    /// Capture-avoiding substitution of free occurrences of `name`.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        let repl_free = replacement.free_vars();
        subst(self, name, replacement, &repl_free)
    }

    /// Applies `f` to every variable occurrence that is free in `self`.
    pub fn rename_free(&self, renames: &[(String, String)]) -> Expr {
        let mut out = self.clone();
        for (from, to) in renames {
            out = out.substitute(from, &Expr::var(to.clone()));
        }
        out
    }
}

fn free_vars_into(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Var(v) => {
            if !bound.iter().any(|b| b == v) {
                out.insert(v.clone());
            }
        }
        ExprKind::Let { name, value, body } | ExprKind::LetInSet { name, set: value, body } => {
            free_vars_into(value, bound, out);
            bound.push(name.clone());
            free_vars_into(body, bound, out);
            bound.pop();
        }
        ExprKind::SetComp { elem, binds, filter } => {
            let depth = bound.len();
            for b in binds {
                if let BindDomain::InSet(s) = &b.domain {
                    free_vars_into(s, bound, out);
                }
            }
            bound.extend(binds.iter().map(|b| b.name.clone()));
            free_vars_into(elem, bound, out);
            if let Some(f) = filter {
                free_vars_into(f, bound, out);
            }
            bound.truncate(depth);
        }
        ExprKind::Forall { binds, body } => {
            let depth = bound.len();
            for b in binds {
                if let BindDomain::InSet(s) = &b.domain {
                    free_vars_into(s, bound, out);
                }
            }
            bound.extend(binds.iter().map(|b| b.name.clone()));
            free_vars_into(body, bound, out);
            bound.truncate(depth);
        }
        _ => {
            for c in e.children() {
                free_vars_into(c, bound, out);
            }
        }
    }
}

fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut candidate = format!("{base}'");
    while avoid.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}

fn subst(e: &Expr, name: &str, repl: &Expr, repl_free: &BTreeSet<String>) -> Expr {
    let go = |x: &Expr| subst(x, name, repl, repl_free);
    let boxed = |x: &Expr| Box::new(subst(x, name, repl, repl_free));
    let kind = match &e.kind {
        ExprKind::Var(v) if v == name => return Expr::new(repl.kind.clone(), e.pos),
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => return e.clone(),
        ExprKind::Tuple(items) => ExprKind::Tuple(items.iter().map(go).collect()),
        ExprKind::SetEnum(items) => ExprKind::SetEnum(items.iter().map(go).collect()),
        ExprKind::Apply { func, type_args, args } => ExprKind::Apply {
            func: func.clone(),
            type_args: type_args.clone(),
            args: args.iter().map(go).collect(),
        },
        ExprKind::Unary(op, x) => ExprKind::Unary(*op, boxed(x)),
        ExprKind::Binary(op, l, r) => ExprKind::Binary(*op, boxed(l), boxed(r)),
        ExprKind::If { cond, then_branch, else_branch } => ExprKind::If {
            cond: boxed(cond),
            then_branch: boxed(then_branch),
            else_branch: boxed(else_branch),
        },
        ExprKind::Let { name: bound, value, body } | ExprKind::LetInSet { name: bound, set: value, body } => {
            let new_value = boxed(value);
            let (bound_name, new_body) = if bound == name {
                (bound.clone(), body.clone())
            } else if repl_free.contains(bound) {
                let mut avoid = repl_free.clone();
                avoid.extend(body.free_vars());
                avoid.insert(name.to_string());
                let fresh = fresh_name(bound, &avoid);
                let renamed = body.substitute(bound, &Expr::var(fresh.clone()));
                (fresh, boxed(&renamed))
            } else {
                (bound.clone(), boxed(body))
            };
            match &e.kind {
                ExprKind::Let { .. } => ExprKind::Let { name: bound_name, value: new_value, body: new_body },
                _ => ExprKind::LetInSet { name: bound_name, set: new_value, body: new_body },
            }
        }
        ExprKind::SetComp { elem, binds, filter } => {
            let (binds, mut inner) = subst_binds(binds, vec![(**elem).clone()].into_iter().chain(filter.as_deref().cloned()).collect(), name, repl, repl_free);
            let filter = if filter.is_some() { Some(Box::new(inner.pop().unwrap())) } else { None };
            ExprKind::SetComp { elem: Box::new(inner.pop().unwrap()), binds, filter }
        }
        ExprKind::Forall { binds, body } => {
            let (binds, mut inner) = subst_binds(binds, vec![(**body).clone()], name, repl, repl_free);
            ExprKind::Forall { binds, body: Box::new(inner.pop().unwrap()) }
        }
        ExprKind::MapEnum(pairs) => ExprKind::MapEnum(pairs.iter().map(|(d, r)| (go(d), go(r))).collect()),
        ExprKind::MapApply { map, key } => ExprKind::MapApply { map: boxed(map), key: boxed(key) },
        ExprKind::IsType { expr, ty } => ExprKind::IsType { expr: boxed(expr), ty: ty.clone() },
    };
    Expr::new(kind, e.pos)
}

/// Substitution under a binder list: set domains see the outer scope, the
/// scoped expressions see the binders.
fn subst_binds(
    binds: &[Bind],
    scoped: Vec<Expr>,
    name: &str,
    repl: &Expr,
    repl_free: &BTreeSet<String>,
) -> (Vec<Bind>, Vec<Expr>) {
    let mut new_binds: Vec<Bind> = binds
        .iter()
        .map(|b| Bind {
            name: b.name.clone(),
            domain: match &b.domain {
                BindDomain::InSet(s) => BindDomain::InSet(subst(s, name, repl, repl_free)),
                BindDomain::Type(t) => BindDomain::Type(t.clone()),
            },
        })
        .collect();
    if binds.iter().any(|b| b.name == name) {
        return (new_binds, scoped);
    }
    let mut scoped = scoped;
    let mut avoid: BTreeSet<String> = repl_free.clone();
    for e in &scoped {
        avoid.extend(e.free_vars());
    }
    avoid.insert(name.to_string());
    for b in new_binds.iter_mut() {
        if repl_free.contains(&b.name) {
            let fresh = fresh_name(&b.name, &avoid);
            avoid.insert(fresh.clone());
            let v = Expr::var(fresh.clone());
            scoped = scoped.iter().map(|e| e.substitute(&b.name, &v)).collect();
            b.name = fresh;
        }
    }
    let scoped = scoped.iter().map(|e| subst(e, name, repl, repl_free)).collect();
    (new_binds, scoped)
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureClause {
    Expr(Expr),
    NotYetSpecified,
    Absent,
}

impl MeasureClause {
    pub fn expr(&self) -> Option<&Expr> {
        match self {
            MeasureClause::Expr(e) => Some(e),
            _ => None,
        }
    }
}

/// The `--@` annotations attached to one definition.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnnotationSet {
    pub isa_measure: Option<Expr>,
    pub witness: Option<Expr>,
    pub isa_mutual_rec: Option<Vec<String>>,
    pub lemmas: Vec<Expr>,
    /// Position of the `@IsaMutualRec` annotation, for diagnostics.
    pub mutual_rec_pos: Option<Pos>,
}

impl AnnotationSet {
    pub fn is_empty(&self) -> bool {
        self.isa_measure.is_none()
            && self.witness.is_none()
            && self.isa_mutual_rec.is_none()
            && self.lemmas.is_empty()
    }
}

/// One parsed `--@Name(...)` annotation.
#[derive(Clone, Debug, PartialEq)]
pub enum Annotation {
    IsaMeasure(Expr),
    Witness(Expr),
    IsaMutualRec(Vec<String>),
    Lemma(Expr),
}

#[derive(Clone, Debug)]
pub struct FunctionDef {
    pub name: String,
    pub type_params: Vec<String>,
    pub params: Vec<(String, VdmType)>,
    pub result: VdmType,
    pub pre: Option<Expr>,
    pub body: Expr,
    pub measure: MeasureClause,
    pub annotations: AnnotationSet,
    pub pos: Pos,
}

impl PartialEq for FunctionDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.type_params == other.type_params
            && self.params == other.params
            && self.result == other.result
            && self.pre == other.pre
            && self.body == other.body
            && self.measure == other.measure
            && self.annotations.isa_measure == other.annotations.isa_measure
            && self.annotations.witness == other.annotations.witness
            && self.annotations.isa_mutual_rec == other.annotations.isa_mutual_rec
            && self.annotations.lemmas == other.annotations.lemmas
    }
}

impl FunctionDef {
    pub fn is_generic(&self) -> bool {
        !self.type_params.is_empty()
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn param_types(&self) -> Vec<VdmType> {
        self.params.iter().map(|(_, t)| t.clone()).collect()
    }

    /// The parameters as an expression: the single variable for unary
    /// functions, a tuple otherwise.
    pub fn param_tuple(&self) -> Expr {
        Expr::tuple(self.params.iter().map(|(n, _)| Expr::var(n.clone())).collect())
    }

    /// The parameter signature as one type (single type for unary functions).
    pub fn signature_type(&self) -> VdmType {
        match self.params.len() {
            1 => self.params[0].1.clone(),
            _ => VdmType::Product(self.param_types()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SourceModule {
    pub name: String,
    pub functions: Vec<FunctionDef>,
    pub diagnostics: Vec<Diagnostic>,
}

impl PartialEq for SourceModule {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.functions == other.functions
    }
}

impl SourceModule {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut FunctionDef> {
        self.functions.iter_mut().find(|f| f.name == name)
    }
}
