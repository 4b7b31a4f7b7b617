//! Recursive-descent parser for modules, definitions, and annotations.

use std::collections::BTreeSet;

use crate::diag::{Code, Diagnostic, Pos};
use crate::syntax::ast::*;
use crate::syntax::token::{tokenize, Tok, Token};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

impl SyntaxError {
    fn message(&self) -> String {
        match self.expected.as_slice() {
            [] => format!("unexpected {}", self.found),
            [one] => format!("expected {one}, found {}", self.found),
            many => format!("expected one of {}, found {}", many.join(", "), self.found),
        }
    }

    pub fn into_diagnostic(self, code: Code) -> Diagnostic {
        let msg = self.message();
        Diagnostic::error(code, self.pos, msg)
    }
}

type PResult<T> = Result<T, SyntaxError>;

/// A `--@Name(...)` annotation lifted out of the token stream.
#[derive(Debug, Clone)]
struct AnnGroup {
    head: Token,
    body: Vec<Token>,
    /// Index of the first ordinary token after the annotation.
    anchor: usize,
}

/// Separates annotation groups from ordinary tokens. An annotation owns its
/// name token and, if one follows, a balanced parenthesized argument.
fn split_annotations(tokens: Vec<Token>) -> (Vec<Token>, Vec<AnnGroup>) {
    let mut plain = Vec::with_capacity(tokens.len());
    let mut groups = Vec::new();
    let mut it = tokens.into_iter().peekable();
    while let Some(t) = it.next() {
        if !t.tok.is_annotation_start() {
            plain.push(t);
            continue;
        }
        let mut body = Vec::new();
        if it.peek().is_some_and(|n| n.tok == Tok::LParen && n.pos.line == t.pos.line) {
            let mut depth = 0i64;
            for n in it.by_ref() {
                match n.tok {
                    Tok::LParen => depth += 1,
                    Tok::RParen => depth -= 1,
                    _ => {}
                }
                body.push(n);
                if depth == 0 {
                    break;
                }
            }
        }
        groups.push(AnnGroup { head: t, body, anchor: plain.len() });
    }
    (plain, groups)
}

/// Converts a file stem into a theory/module name: first letter upper-cased.
pub fn module_name_from_stem(stem: &str) -> String {
    let mut chars = stem.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Lexes and parses a source file. Lexical and syntax errors are reported
/// as diagnostics on the returned module.
pub fn parse_source(text: &str, module_name: &str) -> SourceModule {
    match tokenize(text) {
        Ok(tokens) => parse_module(tokens, module_name),
        Err(e) => SourceModule {
            name: module_name.to_string(),
            functions: Vec::new(),
            diagnostics: vec![Diagnostic::error(Code::IllegalCharacter, e.pos(), e.to_string())],
        },
    }
}

/// Parses a token stream into a module.
pub fn parse_module(tokens: Vec<Token>, module_name: &str) -> SourceModule {
    let (plain, groups) = split_annotations(tokens);
    let mut p = Parser::new(plain);
    let mut diagnostics = Vec::new();
    // (definition, start token index, end token index exclusive)
    let mut defs: Vec<(FunctionDef, usize, usize)> = Vec::new();

    if p.peek() == &Tok::KwFunctions {
        p.bump();
    }
    while !p.at_end() {
        let start = p.i;
        match p.definition() {
            Ok(def) => defs.push((def, start, p.i)),
            Err(e) => {
                diagnostics.push(e.into_diagnostic(Code::Syntax));
                p.recover(start);
            }
        }
        while !p.at_end() && p.peek() == &Tok::Semi {
            p.bump();
        }
        if p.peek() == &Tok::KwFunctions {
            p.bump();
        }
    }
    diagnostics.append(&mut p.diags);

    for group in groups {
        let owner = defs
            .iter()
            .position(|(_, s, e)| *s < group.anchor && group.anchor < *e)
            .or_else(|| defs.iter().position(|(_, s, _)| *s >= group.anchor));
        let Some(owner) = owner else {
            diagnostics.push(Diagnostic::error(
                Code::OrphanAnnotation,
                group.head.pos,
                format!("annotation {} precedes no definition", group.head.tok),
            ));
            continue;
        };
        let def = &mut defs[owner].0;
        match parse_annotation(&group.head, &group.body) {
            Ok(Some(ann)) => attach(def, ann, group.head.pos, &mut diagnostics),
            Ok(None) => {
                let name = match &group.head.tok {
                    Tok::AnnOther(n) => n.clone(),
                    other => other.to_string(),
                };
                diagnostics.push(Diagnostic::warning(
                    Code::UnknownAnnotation,
                    group.head.pos,
                    format!("unknown annotation `@{name}` ignored"),
                ));
            }
            Err(e) => diagnostics.push(e.into_diagnostic(Code::AnnotationSyntax)),
        }
    }

    let mut functions: Vec<FunctionDef> = Vec::new();
    let mut seen = BTreeSet::new();
    for (def, _, _) in defs {
        if !seen.insert(def.name.clone()) {
            diagnostics.push(Diagnostic::error(
                Code::DuplicateFunction,
                def.pos,
                format!("function `{}` is defined more than once", def.name),
            ));
            continue;
        }
        functions.push(def);
    }
    diagnostics.sort_by_key(|d| d.pos);
    SourceModule { name: module_name.to_string(), functions, diagnostics }
}

fn attach(def: &mut FunctionDef, ann: Annotation, pos: Pos, diags: &mut Vec<Diagnostic>) {
    let dup = |kind: &str, diags: &mut Vec<Diagnostic>| {
        diags.push(Diagnostic::error(
            Code::DuplicateAnnotation,
            pos,
            format!("`{}` already has a @{kind} annotation", def.name),
        ))
    };
    match ann {
        Annotation::IsaMeasure(e) => {
            if def.annotations.isa_measure.is_some() {
                dup("IsaMeasure", diags);
            } else {
                def.annotations.isa_measure = Some(e);
            }
        }
        Annotation::Witness(e) => {
            let ok = matches!(&e.kind, ExprKind::Apply { func, .. } if *func == def.name);
            if !ok {
                diags.push(Diagnostic::error(
                    Code::AnnotationSyntax,
                    pos,
                    format!("@Witness must be an application of `{}`", def.name),
                ));
            } else if def.annotations.witness.is_some() {
                dup("Witness", diags);
            } else {
                def.annotations.witness = Some(e);
            }
        }
        Annotation::IsaMutualRec(names) => {
            if def.annotations.isa_mutual_rec.is_some() {
                dup("IsaMutualRec", diags);
            } else {
                def.annotations.isa_mutual_rec = Some(names);
                def.annotations.mutual_rec_pos = Some(pos);
            }
        }
        Annotation::Lemma(e) => def.annotations.lemmas.push(e),
    }
}

/// Parses one annotation from its name token and argument tokens.
/// Returns `Ok(None)` for annotation names this tool does not know.
fn parse_annotation(head: &Token, body: &[Token]) -> PResult<Option<Annotation>> {
    if matches!(head.tok, Tok::AnnOther(_)) {
        return Ok(None);
    }
    let mut p = Parser::new(body.to_vec());
    p.end_pos = head.pos;
    p.expect(Tok::LParen)?;
    let ann = match head.tok {
        Tok::AnnIsaMeasure => Annotation::IsaMeasure(p.expr()?),
        Tok::AnnWitness => Annotation::Witness(p.expr()?),
        Tok::AnnLemma => Annotation::Lemma(p.expr()?),
        Tok::AnnIsaMutualRec => {
            p.expect(Tok::LBrace)?;
            let mut names = Vec::new();
            if p.peek() != &Tok::RBrace {
                loop {
                    names.push(p.ident()?.0);
                    if !p.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            p.expect(Tok::RBrace)?;
            Annotation::IsaMutualRec(names)
        }
        _ => unreachable!("unknown annotations handled above"),
    };
    p.expect(Tok::RParen)?;
    if !p.at_end() {
        return Err(p.error(&["end of annotation"]));
    }
    let ann = match ann {
        Annotation::IsaMeasure(e) => Annotation::IsaMeasure(resolve_applications(e, &BTreeSet::new())),
        Annotation::Lemma(e) => Annotation::Lemma(resolve_applications(e, &BTreeSet::new())),
        other => other,
    };
    Ok(Some(ann))
}

/// Parses a standalone expression (used by tests and for re-parsing
/// rendered proof obligations).
pub fn parse_expr(text: &str) -> Result<Expr, Diagnostic> {
    let tokens = tokenize(text)
        .map_err(|e| Diagnostic::error(Code::IllegalCharacter, e.pos(), e.to_string()))?;
    let mut p = Parser::new(tokens);
    let e = p.expr().map_err(|e| e.into_diagnostic(Code::Syntax))?;
    if !p.at_end() {
        return Err(p.error(&["end of input"]).into_diagnostic(Code::Syntax));
    }
    if let Some(d) = p.diags.into_iter().next() {
        return Err(d);
    }
    Ok(resolve_applications(e, &BTreeSet::new()))
}

/// Parses a type expression such as `map nat to set of int`.
pub fn parse_type(text: &str) -> Result<VdmType, Diagnostic> {
    let tokens = tokenize(text)
        .map_err(|e| Diagnostic::error(Code::IllegalCharacter, e.pos(), e.to_string()))?;
    let mut p = Parser::new(tokens);
    let t = p.ty().map_err(|e| e.into_diagnostic(Code::Syntax))?;
    if !p.at_end() {
        return Err(p.error(&["end of input"]).into_diagnostic(Code::Syntax));
    }
    if let Some(d) = p.diags.into_iter().next() {
        return Err(d);
    }
    Ok(t)
}

/// Rewrites `x(k)` into a map application when `x` is a bound variable
/// rather than a function name.
fn resolve_applications(e: Expr, bound: &BTreeSet<String>) -> Expr {
    let pos = e.pos;
    let go = |x: Expr| resolve_applications(x, bound);
    let goes = |xs: Vec<Expr>| xs.into_iter().map(|x| resolve_applications(x, bound)).collect();
    let with = |names: &[&str]| {
        let mut b = bound.clone();
        b.extend(names.iter().map(|s| s.to_string()));
        b
    };
    let kind = match e.kind {
        ExprKind::Apply { func, type_args, mut args } if bound.contains(&func) && args.len() == 1 && type_args.is_empty() => {
            ExprKind::MapApply {
                map: Box::new(Expr::new(ExprKind::Var(func), pos)),
                key: Box::new(go(args.pop().unwrap())),
            }
        }
        ExprKind::Apply { func, type_args, args } => ExprKind::Apply { func, type_args, args: goes(args) },
        ExprKind::Tuple(xs) => ExprKind::Tuple(goes(xs)),
        ExprKind::SetEnum(xs) => ExprKind::SetEnum(goes(xs)),
        ExprKind::Unary(op, x) => ExprKind::Unary(op, Box::new(go(*x))),
        ExprKind::Binary(op, l, r) => ExprKind::Binary(op, Box::new(go(*l)), Box::new(go(*r))),
        ExprKind::If { cond, then_branch, else_branch } => ExprKind::If {
            cond: Box::new(go(*cond)),
            then_branch: Box::new(go(*then_branch)),
            else_branch: Box::new(go(*else_branch)),
        },
        ExprKind::Let { name, value, body } => {
            let inner = with(&[&name]);
            ExprKind::Let { value: Box::new(go(*value)), body: Box::new(resolve_applications(*body, &inner)), name }
        }
        ExprKind::LetInSet { name, set, body } => {
            let inner = with(&[&name]);
            ExprKind::LetInSet { set: Box::new(go(*set)), body: Box::new(resolve_applications(*body, &inner)), name }
        }
        ExprKind::SetComp { elem, binds, filter } => {
            let names: Vec<&str> = binds.iter().map(|b| b.name.as_str()).collect();
            let inner = with(&names);
            let binds = resolve_binds(binds, bound);
            ExprKind::SetComp {
                elem: Box::new(resolve_applications(*elem, &inner)),
                filter: filter.map(|f| Box::new(resolve_applications(*f, &inner))),
                binds,
            }
        }
        ExprKind::Forall { binds, body } => {
            let names: Vec<&str> = binds.iter().map(|b| b.name.as_str()).collect();
            let inner = with(&names);
            let binds = resolve_binds(binds, bound);
            ExprKind::Forall { body: Box::new(resolve_applications(*body, &inner)), binds }
        }
        ExprKind::MapEnum(pairs) => ExprKind::MapEnum(pairs.into_iter().map(|(d, r)| (go(d), go(r))).collect()),
        ExprKind::MapApply { map, key } => ExprKind::MapApply { map: Box::new(go(*map)), key: Box::new(go(*key)) },
        ExprKind::IsType { expr, ty } => ExprKind::IsType { expr: Box::new(go(*expr)), ty },
        k @ (ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_)) => k,
    };
    Expr::new(kind, pos)
}

fn resolve_binds(binds: Vec<Bind>, bound: &BTreeSet<String>) -> Vec<Bind> {
    binds
        .into_iter()
        .map(|b| Bind {
            name: b.name,
            domain: match b.domain {
                BindDomain::InSet(s) => BindDomain::InSet(resolve_applications(s, bound)),
                t => t,
            },
        })
        .collect()
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    diags: Vec<Diagnostic>,
    /// Position reported for errors at end of input.
    end_pos: Pos,
    eof: Tok,
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        let end_pos = toks.last().map(|t| t.pos).unwrap_or(Pos::new(1, 1));
        Parser { toks, i: 0, diags: Vec::new(), end_pos, eof: Tok::Semi }
    }

    fn at_end(&self) -> bool {
        self.i >= self.toks.len()
    }

    fn peek(&self) -> &Tok {
        self.peek_at(0)
    }

    fn peek_at(&self, k: usize) -> &Tok {
        // A synthetic `;` past the end keeps lookahead total; callers check
        // `at_end` where it matters.
        self.toks.get(self.i + k).map(|t| &t.tok).unwrap_or(&self.eof)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|t| t.pos).unwrap_or(self.end_pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.i).cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if !self.at_end() && self.peek() == tok {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let found = if self.at_end() { "end of input".to_string() } else { self.peek().to_string() };
        SyntaxError { pos: self.pos(), expected: expected.iter().map(|s| s.to_string()).collect(), found }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        let pos = self.pos();
        if self.eat(&tok) {
            Ok(pos)
        } else {
            Err(self.error(&[&tok.to_string()]))
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) if !self.at_end() => {
                self.i += 1;
                Ok((name, pos))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    /// Skips to the next token that plausibly starts a definition: an
    /// identifier that begins its line and is followed by `:`.
    fn recover(&mut self, start: usize) {
        self.i = start + 1;
        while !self.at_end() {
            let t = &self.toks[self.i];
            let line_start = self.i == 0 || self.toks[self.i - 1].pos.line < t.pos.line;
            if line_start && matches!(t.tok, Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Colon | Tok::LBracket) {
                return;
            }
            self.i += 1;
        }
    }

    // ---- definitions ----

    fn definition(&mut self) -> PResult<FunctionDef> {
        let (name, pos) = self.ident()?;
        let mut type_params = Vec::new();
        if self.eat(&Tok::LBracket) {
            loop {
                match self.peek().clone() {
                    Tok::TypeVar(v) => {
                        self.bump();
                        type_params.push(v);
                    }
                    _ => return Err(self.error(&["type variable"])),
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket)?;
        }
        self.expect(Tok::Colon)?;
        let param_types = self.param_types()?;
        self.expect(Tok::Arrow)?;
        let result = self.ty()?;
        self.eat(&Tok::Semi);

        let (def_name, def_pos) = self.ident()?;
        if def_name != name {
            return Err(SyntaxError {
                pos: def_pos,
                expected: vec![format!("definition of `{name}`")],
                found: format!("identifier `{def_name}`"),
            });
        }
        self.expect(Tok::LParen)?;
        let mut names: Vec<(String, Pos)> = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                names.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::DefEq)?;

        let params: Vec<(String, VdmType)> = match (names.len(), param_types.len()) {
            (n, k) if n == k => names.iter().map(|(n, _)| n.clone()).zip(param_types).collect(),
            (1, k) if k > 1 => vec![(names[0].0.clone(), VdmType::Product(param_types))],
            (n, k) => {
                return Err(SyntaxError {
                    pos: def_pos,
                    expected: vec![format!("{k} parameter(s) as declared in the signature")],
                    found: format!("{n}"),
                })
            }
        };
        let mut seen = BTreeSet::new();
        for (n, p) in &names {
            if !seen.insert(n) {
                return Err(SyntaxError {
                    pos: *p,
                    expected: vec!["distinct parameter names".into()],
                    found: format!("repeated `{n}`"),
                });
            }
        }

        let body = self.expr()?;
        let mut pre = None;
        if self.eat(&Tok::KwPre) {
            pre = Some(self.expr()?);
        }
        let mut measure = MeasureClause::Absent;
        if self.eat(&Tok::KwMeasure) {
            if self.peek() == &Tok::KwIs && self.peek_at(1) == &Tok::KwNot {
                self.bump();
                self.bump();
                self.expect(Tok::KwYet)?;
                self.expect(Tok::KwSpecified)?;
                measure = MeasureClause::NotYetSpecified;
            } else {
                measure = MeasureClause::Expr(self.expr()?);
            }
        }
        let bound: BTreeSet<String> = params.iter().map(|(n, _)| n.clone()).collect();
        let body = resolve_applications(body, &bound);
        let pre = pre.map(|e| resolve_applications(e, &bound));
        let measure = match measure {
            MeasureClause::Expr(e) => MeasureClause::Expr(resolve_applications(e, &bound)),
            m => m,
        };
        if !self.at_end() && !matches!(self.peek(), Tok::Semi | Tok::Ident(_) | Tok::KwFunctions) {
            return Err(self.error(&["`;`", "`pre`", "`measure`", "operator"]));
        }
        if !self.at_end() && matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) != &Tok::Colon && self.peek_at(1) != &Tok::LBracket {
            return Err(self.error(&["`;`", "`pre`", "`measure`", "operator"]));
        }
        Ok(FunctionDef {
            name,
            type_params,
            params,
            result,
            pre,
            body,
            measure,
            annotations: AnnotationSet::default(),
            pos,
        })
    }

    /// The parameter part of a signature: `()` or a `*`-separated list.
    fn param_types(&mut self) -> PResult<Vec<VdmType>> {
        if self.peek() == &Tok::LParen && self.peek_at(1) == &Tok::RParen {
            self.bump();
            self.bump();
            return Ok(Vec::new());
        }
        let mut out = vec![self.ty_atom()?];
        while self.eat(&Tok::Star) {
            out.push(self.ty_atom()?);
        }
        Ok(out)
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<VdmType> {
        let mut items = vec![self.ty_atom()?];
        while self.eat(&Tok::Star) {
            items.push(self.ty_atom()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { VdmType::Product(items) })
    }

    fn ty_atom(&mut self) -> PResult<VdmType> {
        let pos = self.pos();
        let t = match self.peek().clone() {
            Tok::KwNat => {
                self.bump();
                VdmType::Nat
            }
            Tok::KwInt => {
                self.bump();
                VdmType::Int
            }
            Tok::KwBool => {
                self.bump();
                VdmType::Bool
            }
            Tok::KwNat1 => {
                self.bump();
                self.diags.push(Diagnostic::error(
                    Code::UnsupportedType,
                    pos,
                    "type `nat1` is not supported; use `nat` with a precondition",
                ));
                VdmType::Nat
            }
            Tok::KwSeq => {
                self.bump();
                self.expect(Tok::KwOf)?;
                let elem = self.ty_atom()?;
                self.diags.push(Diagnostic::error(Code::UnsupportedType, pos, "sequence types are not supported"));
                VdmType::set_of(elem)
            }
            Tok::KwSet => {
                self.bump();
                self.expect(Tok::KwOf)?;
                VdmType::set_of(self.ty_atom()?)
            }
            Tok::KwMap => {
                self.bump();
                let d = self.ty_atom()?;
                self.expect(Tok::KwTo)?;
                let r = self.ty_atom()?;
                VdmType::map_of(d, r)
            }
            Tok::TypeVar(v) => {
                self.bump();
                VdmType::TypeVar(v)
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                t
            }
            Tok::Ident(name) => {
                self.bump();
                self.diags.push(Diagnostic::error(
                    Code::UnsupportedType,
                    pos,
                    format!("named type `{name}` is not supported"),
                ));
                VdmType::Unknown
            }
            _ => return Err(self.error(&["type"])),
        };
        Ok(t)
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        self.implies()
    }

    fn implies(&mut self) -> PResult<Expr> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(Expr::binary(BinaryOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::KwOr) {
            let rhs = self.and()?;
            lhs = Expr::binary(BinaryOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut lhs = self.not()?;
        while self.eat(&Tok::KwAnd) {
            let rhs = self.not()?;
            lhs = Expr::binary(BinaryOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        if self.eat(&Tok::KwNot) {
            let e = self.not()?;
            return Ok(Expr::new(ExprKind::Unary(UnaryOp::Not, Box::new(e)), pos));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Eq => BinaryOp::Eq,
            Tok::Ne => BinaryOp::Ne,
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::KwIn if self.peek_at(1) == &Tok::KwSet => {
                self.bump();
                BinaryOp::InSet
            }
            _ => return Ok(lhs),
        };
        if self.at_end() {
            return Ok(lhs);
        }
        self.bump();
        let rhs = self.additive()?;
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            if self.at_end() {
                break;
            }
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                Tok::KwUnion => BinaryOp::Union,
                Tok::Backslash => BinaryOp::Difference,
                _ => break,
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.map_op()?;
        while self.eat(&Tok::Star) {
            let rhs = self.map_op()?;
            lhs = Expr::binary(BinaryOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn map_op(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::DomAntiRestrict) {
            let rhs = self.unary()?;
            lhs = Expr::binary(BinaryOp::DomAntiRestrict, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Minus => UnaryOp::Neg,
            Tok::KwCard => UnaryOp::Card,
            Tok::KwDom => UnaryOp::Dom,
            _ => return self.primary(),
        };
        if self.at_end() {
            return self.primary();
        }
        self.bump();
        let e = self.unary()?;
        Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), pos))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                out.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn primary(&mut self) -> PResult<Expr> {
        if self.at_end() {
            return Err(self.error(&["expression"]));
        }
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            Tok::KwTrue => {
                self.bump();
                ExprKind::Bool(true)
            }
            Tok::KwFalse => {
                self.bump();
                ExprKind::Bool(false)
            }
            Tok::Ident(name) => {
                self.bump();
                let mut type_args = Vec::new();
                if self.peek() == &Tok::LBracket && !self.at_end() {
                    self.bump();
                    loop {
                        type_args.push(self.ty()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBracket)?;
                    if self.peek() != &Tok::LParen {
                        return Err(self.error(&["`(`"]));
                    }
                }
                if self.peek() == &Tok::LParen && !self.at_end() {
                    let args = self.args()?;
                    ExprKind::Apply { func: name, type_args, args }
                } else {
                    ExprKind::Var(name)
                }
            }
            Tok::KwMkTuple => {
                self.bump();
                let args = self.args()?;
                if args.len() < 2 {
                    return Err(SyntaxError {
                        pos,
                        expected: vec!["at least two tuple components".into()],
                        found: format!("{}", args.len()),
                    });
                }
                ExprKind::Tuple(args)
            }
            Tok::KwIsType => {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::Comma)?;
                let ty = self.ty()?;
                self.expect(Tok::RParen)?;
                ExprKind::IsType { expr: Box::new(e), ty }
            }
            Tok::LParen => {
                self.bump();
                let first = self.expr()?;
                if self.eat(&Tok::Comma) {
                    let mut items = vec![first];
                    loop {
                        items.push(self.expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                    ExprKind::Tuple(items)
                } else {
                    self.expect(Tok::RParen)?;
                    return Ok(first);
                }
            }
            Tok::EmptyMap => {
                self.bump();
                ExprKind::MapEnum(Vec::new())
            }
            Tok::LBrace => return self.brace(),
            Tok::KwIf => {
                self.bump();
                return self.if_rest(pos);
            }
            Tok::KwLet => return self.let_expr(),
            Tok::KwForall => {
                self.bump();
                let binds = self.binds()?;
                self.expect(Tok::Amp)?;
                let body = self.expr()?;
                ExprKind::Forall { binds, body: Box::new(body) }
            }
            _ => return Err(self.error(&["expression"])),
        };
        Ok(Expr::new(kind, pos))
    }

    fn if_rest(&mut self, pos: Pos) -> PResult<Expr> {
        let cond = self.expr()?;
        self.expect(Tok::KwThen)?;
        let then_branch = self.expr()?;
        let else_pos = self.pos();
        let else_branch = if self.eat(&Tok::KwElseif) {
            self.if_rest(else_pos)?
        } else {
            self.expect(Tok::KwElse)?;
            self.expr()?
        };
        Ok(Expr::new(
            ExprKind::If {
                cond: Box::new(cond),
                then_branch: Box::new(then_branch),
                else_branch: Box::new(else_branch),
            },
            pos,
        ))
    }

    fn let_expr(&mut self) -> PResult<Expr> {
        let pos = self.expect(Tok::KwLet)?;
        let (name, _) = self.ident()?;
        if self.eat(&Tok::Eq) {
            let value = self.expr()?;
            self.expect(Tok::KwIn)?;
            let body = self.expr()?;
            return Ok(Expr::new(ExprKind::Let { name, value: Box::new(value), body: Box::new(body) }, pos));
        }
        if self.peek() == &Tok::KwIn && self.peek_at(1) == &Tok::KwSet {
            self.bump();
            self.bump();
            let set = self.additive()?;
            self.expect(Tok::KwIn)?;
            let body = self.expr()?;
            return Ok(Expr::new(ExprKind::LetInSet { name, set: Box::new(set), body: Box::new(body) }, pos));
        }
        Err(self.error(&["`=`", "`in set`"]))
    }

    /// Binders for comprehensions and quantifiers: groups of names sharing
    /// a type (`a, b : nat`) or a set (`e in set s`), separated by commas.
    fn binds(&mut self) -> PResult<Vec<Bind>> {
        let mut out = Vec::new();
        loop {
            let mut names = vec![self.ident()?.0];
            while self.eat(&Tok::Comma) {
                names.push(self.ident()?.0);
            }
            let domain = if self.eat(&Tok::Colon) {
                BindDomain::Type(self.ty()?)
            } else if self.peek() == &Tok::KwIn && self.peek_at(1) == &Tok::KwSet {
                self.bump();
                self.bump();
                BindDomain::InSet(self.additive()?)
            } else {
                return Err(self.error(&["`:`", "`in set`"]));
            };
            out.extend(names.into_iter().map(|name| Bind { name, domain: domain.clone() }));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    fn brace(&mut self) -> PResult<Expr> {
        let pos = self.expect(Tok::LBrace)?;
        if self.eat(&Tok::RBrace) {
            return Ok(Expr::new(ExprKind::SetEnum(Vec::new()), pos));
        }
        let first = self.expr()?;
        if self.eat(&Tok::Bar) {
            let binds = self.binds()?;
            let filter = if self.eat(&Tok::Amp) { Some(Box::new(self.expr()?)) } else { None };
            self.expect(Tok::RBrace)?;
            return Ok(Expr::new(ExprKind::SetComp { elem: Box::new(first), binds, filter }, pos));
        }
        if self.eat(&Tok::MapsTo) {
            let mut pairs = vec![(first, self.expr()?)];
            while self.eat(&Tok::Comma) {
                let d = self.expr()?;
                self.expect(Tok::MapsTo)?;
                pairs.push((d, self.expr()?));
            }
            self.expect(Tok::RBrace)?;
            return Ok(Expr::new(ExprKind::MapEnum(pairs), pos));
        }
        let mut items = vec![first];
        while self.eat(&Tok::Comma) {
            items.push(self.expr()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(Expr::new(ExprKind::SetEnum(items), pos))
    }
}
