//! Call graph, recursion groups, and recursive call sites.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::diag::{Code, Diagnostic, Pos};
use crate::syntax::ast::*;
use crate::typecheck::Ctx;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CallEdge {
    pub caller: String,
    pub callee: String,
    pub pos: Pos,
}

/// Syntactic call graph of a module. Calls to builtins and to derived
/// `pre_`/`measure_` functions are kept apart from module edges.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CallGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<CallEdge>,
    pub builtin_edges: Vec<CallEdge>,
}

impl CallGraph {
    pub fn edge_set(&self) -> BTreeSet<(String, String)> {
        self.edges.iter().map(|e| (e.caller.clone(), e.callee.clone())).collect()
    }

    pub fn has_edge(&self, caller: &str, callee: &str) -> bool {
        self.edges.iter().any(|e| e.caller == caller && e.callee == callee)
    }
}

/// Builds the call graph from function bodies and preconditions.
/// Annotations and measure clauses do not contribute edges.
pub fn build_call_graph(m: &SourceModule) -> CallGraph {
    let names: BTreeSet<&str> = m.functions.iter().map(|f| f.name.as_str()).collect();
    let mut g = CallGraph { nodes: m.functions.iter().map(|f| f.name.clone()).collect(), ..Default::default() };
    for f in &m.functions {
        let mut calls = Vec::new();
        f.body.applied_functions(&mut calls);
        if let Some(pre) = &f.pre {
            pre.applied_functions(&mut calls);
        }
        for (callee, pos) in calls {
            let edge = CallEdge { caller: f.name.clone(), callee: callee.clone(), pos };
            if names.contains(callee.as_str()) {
                g.edges.push(edge);
            } else {
                g.builtin_edges.push(edge);
            }
        }
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GroupKind {
    Simple,
    Mutual,
    NonRecursive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecursionGroup {
    /// Members in module order.
    pub members: Vec<String>,
    pub kind: GroupKind,
}

impl RecursionGroup {
    pub fn is_recursive(&self) -> bool {
        self.kind != GroupKind::NonRecursive
    }

    pub fn contains(&self, name: &str) -> bool {
        self.members.iter().any(|m| m == name)
    }
}

/// Partitions the module's functions into strongly connected components.
/// `@IsaMutualRec` annotations add edges in both directions between the
/// annotated function and each listed name. Groups come callee-first; ties
/// are broken by module order.
pub fn recursion_groups(g: &CallGraph, m: &SourceModule) -> (Vec<RecursionGroup>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let mut graph: DiGraph<usize, ()> = DiGraph::new();
    let idx: BTreeMap<&str, NodeIndex> =
        g.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), graph.add_node(i))).collect();
    let mut edges: BTreeSet<(NodeIndex, NodeIndex)> = BTreeSet::new();
    for e in &g.edges {
        edges.insert((idx[e.caller.as_str()], idx[e.callee.as_str()]));
    }
    for f in &m.functions {
        let Some(listed) = &f.annotations.isa_mutual_rec else { continue };
        let Some(&me) = idx.get(f.name.as_str()) else { continue };
        for other in listed {
            match idx.get(other.as_str()) {
                Some(&o) => {
                    edges.insert((me, o));
                    edges.insert((o, me));
                }
                None => diags.push(Diagnostic::error(
                    Code::UnknownFunctionInAnnotation,
                    f.annotations.mutual_rec_pos.unwrap_or(f.pos),
                    format!("@IsaMutualRec of `{}` names unknown function `{other}`", f.name),
                )),
            }
        }
    }
    for &(a, b) in &edges {
        graph.add_edge(a, b, ());
    }

    let sccs = tarjan_scc(&graph);
    let mut comp_of = vec![0usize; g.nodes.len()];
    for (c, scc) in sccs.iter().enumerate() {
        for n in scc {
            comp_of[graph[*n]] = c;
        }
    }
    // Kahn's algorithm on the condensation, callees before callers.
    let k = sccs.len();
    let mut pending_callees = vec![BTreeSet::new(); k];
    let mut callers = vec![BTreeSet::new(); k];
    for &(a, b) in &edges {
        let (ca, cb) = (comp_of[graph[a]], comp_of[graph[b]]);
        if ca != cb {
            pending_callees[ca].insert(cb);
            callers[cb].insert(ca);
        }
    }
    let min_index = |c: usize| sccs[c].iter().map(|n| graph[*n]).min().unwrap_or(usize::MAX);
    let mut ready: BTreeSet<(usize, usize)> =
        (0..k).filter(|c| pending_callees[*c].is_empty()).map(|c| (min_index(c), c)).collect();
    let mut groups = Vec::with_capacity(k);
    while let Some(&(mi, c)) = ready.iter().next() {
        ready.remove(&(mi, c));
        let mut members: Vec<usize> = sccs[c].iter().map(|n| graph[*n]).collect();
        members.sort_unstable();
        let kind = if members.len() > 1 {
            GroupKind::Mutual
        } else {
            let n = idx[g.nodes[members[0]].as_str()];
            if edges.contains(&(n, n)) {
                GroupKind::Simple
            } else {
                GroupKind::NonRecursive
            }
        };
        groups.push(RecursionGroup { members: members.iter().map(|i| g.nodes[*i].clone()).collect(), kind });
        for &caller in &callers[c] {
            pending_callees[caller].remove(&c);
            if pending_callees[caller].is_empty() {
                ready.insert((min_index(caller), caller));
            }
        }
    }
    (groups, diags)
}

/// One call to a member of the caller's recursion group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CallSite {
    pub caller: String,
    pub callee: String,
    #[serde(serialize_with = "ser_exprs")]
    pub args: Vec<Expr>,
    /// Enclosing if-tests, lets and let-in-set binders, outermost first.
    #[serde(skip)]
    pub context: Vec<Ctx>,
    /// Set on a call whose arguments contain another group call.
    pub nested: bool,
    /// Set on calls inside comprehension or quantifier bodies.
    pub opaque: bool,
    pub pos: Pos,
}

fn ser_exprs<S: serde::Serializer>(es: &[Expr], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(es.len()))?;
    for e in es {
        seq.serialize_element(&crate::syntax::render_expr(e))?;
    }
    seq.end()
}

impl CallSite {
    /// Enclosing if-tests with their polarity, outermost first.
    pub fn guards(&self) -> Vec<(&Expr, bool)> {
        self.context
            .iter()
            .filter_map(|c| match c {
                Ctx::Guard { cond, positive } => Some((cond, *positive)),
                _ => None,
            })
            .collect()
    }

    /// Let and let-in-set bindings in scope, outermost first.
    pub fn binders(&self) -> Vec<&Ctx> {
        self.context.iter().filter(|c| matches!(c, Ctx::Let { .. } | Ctx::LetInSet { .. })).collect()
    }

    /// Short display form such as `fact(n - 1)`.
    pub fn display(&self) -> String {
        crate::syntax::render_expr(&Expr::apply(self.callee.clone(), self.args.clone()))
    }
}

struct SiteCollector<'a> {
    caller: &'a str,
    group: &'a BTreeSet<String>,
    ctx: Vec<Ctx>,
    opaque_depth: usize,
    sites: Vec<CallSite>,
}

impl SiteCollector<'_> {
    /// Walks `e`; returns whether it contains a group call.
    fn walk(&mut self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Apply { func, args, .. } => {
                let mut inner = false;
                for a in args {
                    inner |= self.walk(a);
                }
                if self.group.contains(func) {
                    self.sites.push(CallSite {
                        caller: self.caller.to_string(),
                        callee: func.clone(),
                        args: args.clone(),
                        context: self.ctx.clone(),
                        nested: inner && self.opaque_depth == 0,
                        opaque: self.opaque_depth > 0,
                        pos: e.pos,
                    });
                    return true;
                }
                inner
            }
            ExprKind::If { cond, then_branch, else_branch } => {
                let mut found = self.walk(cond);
                self.ctx.push(Ctx::Guard { cond: (**cond).clone(), positive: true });
                found |= self.walk(then_branch);
                self.ctx.pop();
                self.ctx.push(Ctx::Guard { cond: (**cond).clone(), positive: false });
                found |= self.walk(else_branch);
                self.ctx.pop();
                found
            }
            ExprKind::Let { name, value, body } => {
                let mut found = self.walk(value);
                self.ctx.push(Ctx::Let { name: name.clone(), value: (**value).clone() });
                found |= self.walk(body);
                self.ctx.pop();
                found
            }
            ExprKind::LetInSet { name, set, body } => {
                let mut found = self.walk(set);
                self.ctx.push(Ctx::LetInSet { name: name.clone(), set: (**set).clone() });
                found |= self.walk(body);
                self.ctx.pop();
                found
            }
            ExprKind::SetComp { .. } | ExprKind::Forall { .. } => {
                self.opaque_depth += 1;
                let mut found = false;
                for c in e.children() {
                    found |= self.walk(c);
                }
                self.opaque_depth -= 1;
                found
            }
            _ => {
                let mut found = false;
                for c in e.children() {
                    found |= self.walk(c);
                }
                found
            }
        }
    }
}

/// Collects the calls `def` makes to members of its group, innermost
/// calls first (evaluation order).
pub fn extract_call_sites(def: &FunctionDef, group: &RecursionGroup) -> Vec<CallSite> {
    let members: BTreeSet<String> = group.members.iter().cloned().collect();
    let mut c = SiteCollector { caller: &def.name, group: &members, ctx: Vec::new(), opaque_depth: 0, sites: Vec::new() };
    c.walk(&def.body);
    c.sites
}
