mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use vdmrec::analysis::{build_call_graph, recursion_groups, GroupKind};
use vdmrec::interp::{eval_call, ChoiceStrategy, EvalConfig, Universe, Value};
use vdmrec::measure::relation::{finite_wf_check, lex_prod, measure_rel, mlex, trans_closure, FiniteRelation, Relation};
use vdmrec::measure::{enumerate_relation, MeasureOutcome};
use vdmrec::syntax::ast::{BinaryOp, Expr, ExprKind, MeasureClause, UnaryOp};
use vdmrec::syntax::{parse_expr, parse_source, render_expr};
use vdmrec::{analyze, check_pos_bounded, Options, PoKind};

fn edges(n: usize) -> impl Strategy<Value = BTreeSet<(usize, usize)>> {
    proptest::collection::btree_set((0..n, 0..n), 0..=n * 2)
}

fn call_module(n: usize, edges: &BTreeSet<(usize, usize)>) -> String {
    let mut src = String::from("functions\n");
    for i in 0..n {
        let calls: Vec<String> = edges.iter().filter(|(a, _)| *a == i).map(|(_, b)| format!("f{b}(n - 1)")).collect();
        let body = if calls.is_empty() { "0".to_string() } else { format!("if n = 0 then 0 else {}", calls.join(" + ")) };
        src.push_str(&format!("f{i}: nat -> nat\nf{i}(n) == {body}\nmeasure n;\n\n"));
    }
    src
}

fn reaches(n: usize, e: &BTreeSet<(usize, usize)>) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in e {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

fn pairs_on(n: i64) -> impl Strategy<Value = BTreeSet<(i64, i64)>> {
    proptest::collection::btree_set((0..n, 0..n), 0..=6)
}

fn rel(ps: &BTreeSet<(i64, i64)>, n: i64) -> FiniteRelation {
    FiniteRelation::new((0..n).map(Value::from), ps.iter().map(|(a, b)| (int(*a), int(*b))))
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..20).prop_map(Expr::int),
        any::<bool>().prop_map(Expr::bool),
        prop::sample::select(vec!["a", "b", "n", "s"]).prop_map(Expr::var),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let ops = vec![
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Lt,
        BinaryOp::Ge,
        BinaryOp::And,
        BinaryOp::Or,
        BinaryOp::Implies,
        BinaryOp::Union,
        BinaryOp::Difference,
        BinaryOp::InSet,
    ];
    leaf().prop_recursive(4, 24, 3, move |inner| {
        prop_oneof![
            (prop::sample::select(ops.clone()), inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (prop::sample::select(vec![UnaryOp::Not, UnaryOp::Card, UnaryOp::Dom]), inner.clone()).prop_map(|(op, e)| Expr::unary(op, e)),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| Expr::synth(ExprKind::If {
                cond: Box::new(c),
                then_branch: Box::new(t),
                else_branch: Box::new(e)
            })),
            proptest::collection::vec(inner.clone(), 1..3).prop_map(|args| Expr::apply("f", args)),
            proptest::collection::vec(inner.clone(), 0..3).prop_map(|xs| Expr::synth(ExprKind::SetEnum(xs))),
            (inner.clone(), inner.clone()).prop_map(|(v, b)| Expr::synth(ExprKind::Let { name: "x".into(), value: Box::new(v), body: Box::new(b) })),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn groups_are_mutual_reachability_classes(n in 1usize..7, e in edges(7)) {
        let e: BTreeSet<(usize, usize)> = e.into_iter().filter(|(a, b)| *a < n && *b < n).collect();
        let m = parse_source(&call_module(n, &e), "G");
        prop_assert!(m.diagnostics.is_empty(), "{:?}", m.diagnostics);
        let (groups, _) = recursion_groups(&build_call_graph(&m), &m);
        let r = reaches(n, &e);
        let idx = |s: &str| s[1..].parse::<usize>().unwrap();
        let mut seen = BTreeSet::new();
        for g in &groups {
            let ms: Vec<usize> = g.members.iter().map(|s| idx(s)).collect();
            for &a in &ms {
                prop_assert!(seen.insert(a));
                for &b in &ms {
                    prop_assert!(a == b || (r[a][b] && r[b][a]));
                }
                for (b, rb) in r.iter().enumerate().take(n) {
                    if !ms.contains(&b) {
                        prop_assert!(!(r[a][b] && rb[a]));
                    }
                }
            }
            let expect = match ms.len() {
                1 if r[ms[0]][ms[0]] => GroupKind::Simple,
                1 => GroupKind::NonRecursive,
                _ => GroupKind::Mutual,
            };
            prop_assert_eq!(g.kind, expect);
        }
        prop_assert_eq!(seen.len(), n);
        // callee groups come first
        let pos = |f: usize| groups.iter().position(|g| g.members.iter().any(|s| idx(s) == f)).unwrap();
        for &(a, b) in &e {
            prop_assert!(pos(b) <= pos(a));
        }
    }

    #[test]
    fn lex_prod_preserves_acyclicity(a in pairs_on(4), b in pairs_on(4)) {
        let up = |s: BTreeSet<(i64, i64)>| s.into_iter().filter(|(x, y)| x < y).collect::<BTreeSet<_>>();
        let (ra, rb) = (rel(&up(a), 4), rel(&up(b), 4));
        prop_assert!(finite_wf_check(&ra).is_acyclic() && finite_wf_check(&rb).is_acyclic());
        prop_assert!(finite_wf_check(&lex_prod(&ra, &rb)).is_acyclic());
    }

    #[test]
    fn trans_closure_is_least_transitive_superset(a in pairs_on(5)) {
        let r = rel(&a, 5);
        let t = trans_closure(&r);
        prop_assert!(r.pairs.is_subset(&t.pairs));
        prop_assert_eq!(&trans_closure(&t), &t);
        for (x, y) in &t.pairs {
            for (y2, z) in &t.pairs {
                if y == y2 {
                    prop_assert!(t.pairs.contains(&(x.clone(), z.clone())));
                }
            }
        }
        // each closure pair is witnessed by a path of r
        let cyclic = !finite_wf_check(&r).is_acyclic();
        prop_assert_eq!(cyclic, !finite_wf_check(&t).is_acyclic());
    }

    #[test]
    fn mlex_matches_its_definition(a in pairs_on(4), k in proptest::collection::vec(0i64..3, 4)) {
        let r = rel(&a, 4);
        let u: Vec<Value> = (0..4).map(Value::from).collect();
        let key = |v: &Value| num_bigint::BigInt::from(k[v.as_i64().unwrap() as usize]);
        let m = mlex(key, &r, &u);
        for x in 0..4i64 {
            for y in 0..4i64 {
                let (fx, fy) = (k[x as usize], k[y as usize]);
                let want = fx < fy || (fx == fy && a.contains(&(x, y)));
                prop_assert_eq!(m.contains(&int(x), &int(y)), want);
            }
        }
    }

    #[test]
    fn render_then_parse_is_identity(e in expr()) {
        let text = render_expr(&e);
        let back = parse_expr(&text);
        prop_assert!(back.is_ok(), "{}: {:?}", text, back);
        prop_assert_eq!(back.unwrap(), e, "{}", text);
    }

    #[test]
    fn sumset_ignores_choice(xs in proptest::collection::btree_set(0i64..5, 0..=5)) {
        let m = module("sumset");
        let s = nat_set(xs.iter().copied());
        let run = |choice| eval_call(&m, "sumset", vec![s.clone()], EvalConfig { choice, ..EvalConfig::default() });
        prop_assert_eq!(run(ChoiceStrategy::Min), Ok(int(xs.iter().sum())));
        prop_assert_eq!(run(ChoiceStrategy::Max), Ok(int(xs.iter().sum())));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Decrease obligations hold on a bounded universe exactly when the
    /// synthesized relation lies inside `measure_rel` of the measure.
    #[test]
    fn decrease_obligation_agrees_with_measure_relation(a in 0i64..3, b in 0i64..4) {
        let mut m = module("fact");
        let measure = parse_expr(&format!("{a} * n + {b}")).unwrap();
        m.function_mut("fact").unwrap().measure = MeasureClause::Expr(measure.clone());
        let an = analyze(m, &Options::default());
        let u = Universe::ints(0, 12);
        let (_, set) = &an.proof_obligations()[0];
        let report = check_pos_bounded(&set.obligations, &an.module, &u).unwrap();
        let po3 = report.checks.iter().find(|c| c.kind == PoKind::RecursiveDecrease).unwrap().holds();

        let def = an.def("fact").unwrap();
        let MeasureOutcome { relation, .. } = an.function("fact").unwrap().measure.clone().unwrap();
        let r = enumerate_relation(&relation.unwrap(), def, &an.module, &u).unwrap();
        let carrier: Vec<Value> = r.universe.iter().cloned().collect();
        let f = |v: &Value| int(a * v.as_i64().unwrap() + b);
        let mr = measure_rel(f, &carrier);
        prop_assert_eq!(po3, r.pairs.is_subset(&mr.pairs));
        prop_assert_eq!(po3, a > 0);
    }
}
