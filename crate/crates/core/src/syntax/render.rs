//! VDM-SL text rendering.
//!
//! Output is in the layout VDMJ uses for proof obligations: compound
//! operands and non-atomic function arguments are parenthesized, quantifiers
//! and implications are always wrapped. The result always re-parses to the
//! same tree.

use crate::syntax::ast::*;

fn is_atom(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Int(_)
            | ExprKind::Bool(_)
            | ExprKind::Var(_)
            | ExprKind::Tuple(_)
            | ExprKind::SetEnum(_)
            | ExprKind::SetComp { .. }
            | ExprKind::MapEnum(_)
            | ExprKind::MapApply { .. }
            | ExprKind::Apply { .. }
            | ExprKind::IsType { .. }
            | ExprKind::Forall { .. }
    ) && !matches!(&e.kind, ExprKind::Int(v) if v.sign() == num_bigint::Sign::Minus)
}

/// Renders an expression at top level.
pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    top(e, &mut out);
    out
}

/// Top position: binary operators and `not` print bare.
fn top(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Binary(BinaryOp::Implies, l, r) => {
            out.push('(');
            implies_operand(l, out);
            out.push_str(" => ");
            implies_operand(r, out);
            out.push(')');
        }
        ExprKind::Binary(op, l, r) => {
            let side = if matches!(op, BinaryOp::And | BinaryOp::Or) { logic_operand } else { operand };
            side(l, out);
            out.push(' ');
            out.push_str(op.vdm_symbol());
            out.push(' ');
            side(r, out);
        }
        ExprKind::Unary(UnaryOp::Not, x) => {
            out.push_str("not ");
            paren_unless_atom(x, out);
        }
        _ => operand(e, out),
    }
}

/// `not` binds looser than comparisons, so it prints bare only here.
fn logic_operand(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Unary(UnaryOp::Not, _) => top(e, out),
        _ => operand(e, out),
    }
}

fn implies_operand(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Binary(..) | ExprKind::Unary(..) => top(e, out),
        _ => operand(e, out),
    }
}

/// Operand position: anything that is not an atom is parenthesized.
fn operand(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Unary(UnaryOp::Not, _) => {
            out.push('(');
            top(e, out);
            out.push(')');
        }
        ExprKind::Unary(op, x) => {
            let word = match op {
                UnaryOp::Neg => "-",
                UnaryOp::Not => unreachable!(),
                UnaryOp::Card => "card ",
                UnaryOp::Dom => "dom ",
            };
            out.push_str(word);
            paren_unless_atom(x, out);
        }
        ExprKind::Binary(BinaryOp::Implies, ..) => top(e, out),
        _ if is_atom(e) => atom(e, out),
        _ => {
            out.push('(');
            inner(e, out);
            out.push(')');
        }
    }
}

fn paren_unless_atom(e: &Expr, out: &mut String) {
    if matches!(e.kind, ExprKind::Binary(BinaryOp::Implies, ..)) {
        top(e, out);
    } else if is_atom(e) {
        atom(e, out);
    } else {
        out.push('(');
        inner(e, out);
        out.push(')');
    }
}

/// Contents of a parenthesized compound expression.
fn inner(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::If { cond, then_branch, else_branch } => {
            out.push_str("if ");
            top(cond, out);
            out.push_str(" then ");
            top(then_branch, out);
            out.push_str(" else ");
            top(else_branch, out);
        }
        ExprKind::Let { name, value, body } => {
            out.push_str("let ");
            out.push_str(name);
            out.push_str(" = ");
            top(value, out);
            out.push_str(" in ");
            top(body, out);
        }
        ExprKind::LetInSet { name, set, body } => {
            out.push_str("let ");
            out.push_str(name);
            out.push_str(" in set ");
            operand(set, out);
            out.push_str(" in ");
            top(body, out);
        }
        ExprKind::Int(v) => out.push_str(&v.to_string()),
        _ => top(e, out),
    }
}

fn list(items: &[Expr], out: &mut String) {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        paren_unless_atom(x, out);
    }
}

fn binds(bs: &[Bind], out: &mut String) {
    for (i, b) in bs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&b.name);
        match &b.domain {
            BindDomain::Type(t) => {
                out.push(':');
                out.push_str(&t.to_string());
            }
            BindDomain::InSet(s) => {
                out.push_str(" in set ");
                operand(s, out);
            }
        }
    }
}

fn atom(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Int(v) => out.push_str(&v.to_string()),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Tuple(items) => {
            out.push_str("mk_(");
            list(items, out);
            out.push(')');
        }
        ExprKind::SetEnum(items) => {
            out.push('{');
            list(items, out);
            out.push('}');
        }
        ExprKind::SetComp { elem, binds: bs, filter } => {
            out.push('{');
            top(elem, out);
            out.push_str(" | ");
            binds(bs, out);
            if let Some(f) = filter {
                out.push_str(" & ");
                top(f, out);
            }
            out.push('}');
        }
        ExprKind::MapEnum(pairs) if pairs.is_empty() => out.push_str("{|->}"),
        ExprKind::MapEnum(pairs) => {
            out.push('{');
            for (i, (d, r)) in pairs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                paren_unless_atom(d, out);
                out.push_str(" |-> ");
                paren_unless_atom(r, out);
            }
            out.push('}');
        }
        ExprKind::MapApply { map, key } => {
            paren_unless_atom(map, out);
            out.push('(');
            top(key, out);
            out.push(')');
        }
        ExprKind::Apply { func, type_args, args } => {
            out.push_str(func);
            if !type_args.is_empty() {
                out.push('[');
                let ts: Vec<String> = type_args.iter().map(|t| t.to_string()).collect();
                out.push_str(&ts.join(", "));
                out.push(']');
            }
            out.push('(');
            list(args, out);
            out.push(')');
        }
        ExprKind::IsType { expr, ty } => {
            out.push_str("is_(");
            top(expr, out);
            out.push_str(", ");
            out.push_str(&ty.to_string());
            out.push(')');
        }
        ExprKind::Forall { binds: bs, body } => {
            out.push_str("(forall ");
            binds(bs, out);
            out.push_str(" & ");
            top(body, out);
            out.push(')');
        }
        _ => unreachable!("not an atom"),
    }
}

fn signature(f: &FunctionDef) -> String {
    let params = if f.params.is_empty() {
        "()".to_string()
    } else {
        f.params
            .iter()
            .map(|(_, t)| match t {
                VdmType::Product(_) => t.to_string(),
                VdmType::SetOf(_) | VdmType::MapOf(..) if f.params.len() > 1 => format!("({t})"),
                _ => t.to_string(),
            })
            .collect::<Vec<_>>()
            .join(" * ")
    };
    let result = match &f.result {
        VdmType::Product(ts) => ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" * "),
        t => t.to_string(),
    };
    let tparams = if f.type_params.is_empty() {
        String::new()
    } else {
        format!("[{}]", f.type_params.iter().map(|v| format!("@{v}")).collect::<Vec<_>>().join(", "))
    };
    format!("{}{tparams}: {params} -> {result}", f.name)
}

/// Renders one definition with its annotations, one annotation per line.
pub fn render_function(f: &FunctionDef) -> String {
    let mut out = String::new();
    if let Some(names) = &f.annotations.isa_mutual_rec {
        out.push_str(&format!("--@IsaMutualRec({{{}}})\n", names.join(", ")));
    }
    out.push_str(&signature(f));
    out.push('\n');
    out.push_str(&format!(
        "{}({}) ==\n  {}\n",
        f.name,
        f.param_names().join(", "),
        render_expr(&f.body)
    ));
    if let Some(e) = &f.annotations.isa_measure {
        out.push_str(&format!("  --@IsaMeasure({})\n", render_expr(e)));
    }
    if let Some(e) = &f.annotations.witness {
        out.push_str(&format!("  --@Witness({})\n", render_expr(e)));
    }
    for e in &f.annotations.lemmas {
        out.push_str(&format!("  --@Lemma({})\n", render_expr(e)));
    }
    if let Some(p) = &f.pre {
        out.push_str(&format!("  pre {}\n", render_expr(p)));
    }
    match &f.measure {
        MeasureClause::Expr(e) => out.push_str(&format!("  measure {}\n", render_expr(e))),
        MeasureClause::NotYetSpecified => out.push_str("  measure is not yet specified\n"),
        MeasureClause::Absent => {}
    }
    out.push_str(";\n");
    out
}

/// Renders a module as a `functions` section.
pub fn render_module(m: &SourceModule) -> String {
    let mut out = String::from("functions\n\n");
    for f in &m.functions {
        out.push_str(&render_function(f));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse_expr;

    fn rt(src: &str) -> String {
        let e = parse_expr(src).unwrap();
        let text = render_expr(&e);
        assert_eq!(parse_expr(&text).unwrap(), e, "re-parse of {text}");
        text
    }

    #[test]
    fn vdmj_layout() {
        assert_eq!(rt("is_(measure_fact(n), nat)"), "is_(measure_fact(n), nat)");
        assert_eq!(rt("not (n = 0) => n - 1 >= 0"), "(not (n = 0) => (n - 1) >= 0)");
        assert_eq!(
            rt("not (n = 0) => measure_fact(n) > measure_fact(n - 1)"),
            "(not (n = 0) => measure_fact(n) > measure_fact((n - 1)))"
        );
        assert_eq!(rt("forall n:nat & is_(f(n), nat)"), "(forall n:nat & is_(f(n), nat))");
    }

    #[test]
    fn round_trips() {
        for src in [
            "if n = 0 then 1 else n * fact(n - 1)",
            "if s = {} then 0 else let e in set s in sumset(s - {e}) + e",
            "if m = {|->} then 0 else let d in set dom m in m(d) + sum_elems({d} <-: m)",
            "{ mk_(mk_(m, r-1, n), mk_(m,n,r)) | m, r, n : int & pre_perm(m, n, r) and 0 < r } union {}",
            "(a => b) => c",
            "a => (if x then y else z)",
            "-(a + b) * card (s union t)",
            "let x = 1 in let y = x + 1 in y",
            "{ 1 |-> 2, 3 |-> 4 }",
            "lex_prod[nat, nat](a, b)",
            "maxs({m+n+r, 0})",
            "not not a",
            "0 + (not 0) = (not b)",
            "not a and not (b or c)",
            "x in set {1, 2} and s \\ t = {}",
            "(forall e in set s & e > 0) or false",
        ] {
            rt(src);
        }
    }
}
