mod common;

use common::*;
use vdmrec::analysis::GroupKind;
use vdmrec::measure::{RelationSource, WrapperChoice};
use vdmrec::syntax::render_expr;
use vdmrec::Code;

#[test]
fn even_and_odd_form_one_group() {
    for stem in ["evenodd", "evenodd_noann"] {
        let a = analysis(stem);
        assert_eq!(a.groups.len(), 1, "{stem}");
        assert_eq!(a.groups[0].kind, GroupKind::Mutual);
        assert_eq!(a.groups[0].members, vec!["even".to_string(), "odd".to_string()]);
        assert!(!a.has_errors(), "{:?}", a.diagnostics);
        assert!(a.function("even").unwrap().measure.is_none());
    }
}

#[test]
fn corpus_group_kinds() {
    for (stem, kind) in [("fact", GroupKind::Simple), ("ack", GroupKind::Simple), ("tak", GroupKind::Simple)] {
        let a = analysis(stem);
        assert_eq!(a.groups[0].kind, kind, "{stem}");
    }
    let a = analysis("nonrec");
    assert!(a.groups.iter().all(|g| g.kind == GroupKind::NonRecursive));
    let order: Vec<&str> = a.groups.iter().map(|g| g.members[0].as_str()).collect();
    let pos = |f: &str| order.iter().position(|g| *g == f).unwrap();
    assert!(pos("double") < pos("quad"));
}

#[test]
fn call_sites_carry_guards() {
    let a = analysis("perm");
    let sites = &a.function("perm").unwrap().sites;
    assert_eq!(sites.len(), 2);
    let guards = |i: usize| -> Vec<(String, bool)> { sites[i].guards().into_iter().map(|(e, p)| (render_expr(e), p)).collect() };
    assert_eq!(guards(0), vec![("0 < r".to_string(), true)]);
    assert_eq!(guards(1), vec![("0 < r".to_string(), false), ("0 < n".to_string(), true)]);

    let a = analysis("ack");
    let sites = &a.function("ack").unwrap().sites;
    assert_eq!(sites.len(), 3);
    assert_eq!(sites.iter().filter(|s| s.nested).count(), 1);
}

#[test]
fn measure_outcomes_for_corpus() {
    let cases = [
        ("fact", RelationSource::Synthesized, WrapperChoice::GenVDMNatTerm),
        ("sumset", RelationSource::Annotated, WrapperChoice::GenSetTerm),
        ("sum_elems", RelationSource::Annotated, WrapperChoice::None),
        ("ack", RelationSource::Annotated, WrapperChoice::None),
        ("perm", RelationSource::Annotated, WrapperChoice::None),
    ];
    for (stem, source, wrapper) in cases {
        let a = analysis(stem);
        let o = a.function(stem).unwrap().measure.clone().unwrap();
        assert_eq!(o.source, source, "{stem}");
        assert_eq!(o.wrapper, Some(wrapper), "{stem}");
        assert!(o.relation.is_ok(), "{stem}");
    }
    let tak = analysis("tak");
    assert!(tak.function("tak").unwrap().measure.as_ref().unwrap().relation.is_err());
    assert!(tak.diagnostics.iter().any(|d| d.code == Code::SynthesisFailure && !d.is_error()));
}

#[test]
fn corpus_is_clean() {
    for stem in ["fact", "sumset", "sum_elems", "ack", "perm", "tak", "evenodd", "evenodd_noann", "nonrec", "relations"] {
        let a = analysis(stem);
        assert!(!a.has_errors(), "{stem}: {:?}", a.diagnostics);
    }
}
