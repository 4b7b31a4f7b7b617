//! Finite relations and the order combinators used in measure relations.
//!
//! Pairs are read as `(smaller, larger)`: `(y, x) ∈ r` means `y` is below
//! `x`, matching the `(callee args, caller args)` orientation of measure
//! relations.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Signed;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::interp::value::Value;

/// Membership view of a (possibly infinite) relation.
pub trait Relation {
    fn contains(&self, below: &Value, above: &Value) -> bool;
    /// Whether `v` belongs to the carrier the relation is defined over.
    fn in_universe(&self, v: &Value) -> bool;
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FiniteRelation {
    pub pairs: BTreeSet<(Value, Value)>,
    pub universe: BTreeSet<Value>,
}

impl FiniteRelation {
    /// Builds a relation; components of `pairs` are added to the universe.
    pub fn new(universe: impl IntoIterator<Item = Value>, pairs: impl IntoIterator<Item = (Value, Value)>) -> Self {
        let mut universe: BTreeSet<Value> = universe.into_iter().collect();
        let pairs: BTreeSet<(Value, Value)> = pairs.into_iter().collect();
        for (a, b) in &pairs {
            universe.insert(a.clone());
            universe.insert(b.clone());
        }
        FiniteRelation { pairs, universe }
    }

    /// A relation whose universe is its field.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Value, Value)>) -> Self {
        Self::new([], pairs)
    }

    pub fn empty(universe: impl IntoIterator<Item = Value>) -> Self {
        Self::new(universe, [])
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs as a VDM set of 2-tuples.
    pub fn to_value(&self) -> Value {
        Value::set(self.pairs.iter().map(|(a, b)| Value::pair(a.clone(), b.clone())))
    }

    /// Reads a VDM set of 2-tuples; `None` if `v` has another shape.
    pub fn from_value(v: &Value) -> Option<Self> {
        let set = v.as_set()?;
        let mut pairs = Vec::with_capacity(set.len());
        for item in set {
            match item {
                Value::Tuple(xs) if xs.len() == 2 => pairs.push((xs[0].clone(), xs[1].clone())),
                _ => return None,
            }
        }
        Some(Self::from_pairs(pairs))
    }

    /// Keeps the pairs satisfying `keep`, same universe.
    pub fn restrict(&self, keep: impl Fn(&Value, &Value) -> bool) -> Self {
        FiniteRelation {
            pairs: self.pairs.iter().filter(|(a, b)| keep(a, b)).cloned().collect(),
            universe: self.universe.clone(),
        }
    }
}

impl Relation for FiniteRelation {
    fn contains(&self, below: &Value, above: &Value) -> bool {
        self.pairs.contains(&(below.clone(), above.clone()))
    }

    fn in_universe(&self, v: &Value) -> bool {
        self.universe.contains(v)
    }
}

fn nat(v: &Value, bound: Option<u64>) -> Option<&BigInt> {
    let n = v.as_int()?;
    if n.is_negative() || bound.is_some_and(|b| *n > BigInt::from(b)) {
        None
    } else {
        Some(n)
    }
}

/// `<` on naturals, optionally bounded, without materializing pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LessThanNat {
    pub bound: Option<u64>,
}

impl Relation for LessThanNat {
    fn contains(&self, below: &Value, above: &Value) -> bool {
        matches!((nat(below, self.bound), nat(above, self.bound)), (Some(a), Some(b)) if a < b)
    }

    fn in_universe(&self, v: &Value) -> bool {
        nat(v, self.bound).is_some()
    }
}

/// Lexicographic `<` on pairs of naturals, as a membership view.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairLessNat {
    pub bound: Option<u64>,
}

impl Relation for PairLessNat {
    fn contains(&self, below: &Value, above: &Value) -> bool {
        let lt = LessThanNat { bound: self.bound };
        match (below, above) {
            (Value::Tuple(x), Value::Tuple(y)) if x.len() == 2 && y.len() == 2 => {
                self.in_universe(below)
                    && self.in_universe(above)
                    && (lt.contains(&x[0], &y[0]) || (x[0] == y[0] && lt.contains(&x[1], &y[1])))
            }
            _ => false,
        }
    }

    fn in_universe(&self, v: &Value) -> bool {
        let lt = LessThanNat { bound: self.bound };
        matches!(v, Value::Tuple(x) if x.len() == 2 && lt.in_universe(&x[0]) && lt.in_universe(&x[1]))
    }
}

/// Least transitive superset, by Warshall's algorithm over bit rows.
pub fn trans_closure(r: &FiniteRelation) -> FiniteRelation {
    let elems: Vec<&Value> = r.universe.iter().collect();
    let index: BTreeMap<&Value, usize> = elems.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = elems.len();
    let words = n.div_ceil(64);
    let mut rows = vec![vec![0u64; words]; n];
    for (a, b) in &r.pairs {
        let (i, j) = (index[a], index[b]);
        rows[i][j / 64] |= 1 << (j % 64);
    }
    for k in 0..n {
        let row_k = rows[k].clone();
        for row in rows.iter_mut() {
            if row[k / 64] >> (k % 64) & 1 == 1 {
                for (w, kw) in row.iter_mut().zip(&row_k) {
                    *w |= kw;
                }
            }
        }
    }
    let mut pairs = BTreeSet::new();
    for (i, row) in rows.iter().enumerate() {
        for j in 0..n {
            if row[j / 64] >> (j % 64) & 1 == 1 {
                pairs.insert((elems[i].clone(), elems[j].clone()));
            }
        }
    }
    FiniteRelation { pairs, universe: r.universe.clone() }
}

/// `<` on `0..=bound`, built as the closure of the successor generator.
pub fn less_than_vdmnat(bound: u64) -> FiniteRelation {
    let universe = (0..=bound as i64).map(Value::from);
    let succ = (0..bound as i64).map(|z| (Value::from(z), Value::from(z + 1)));
    trans_closure(&FiniteRelation::new(universe, succ))
}

/// `lex_prod(less_than_vdmnat(bound), less_than_vdmnat(bound))`.
pub fn pair_less_vdmnat(bound: u64) -> FiniteRelation {
    let lt = less_than_vdmnat(bound);
    lex_prod(&lt, &lt)
}

/// Lexicographic product over `ra.universe × rb.universe`.
pub fn lex_prod(ra: &FiniteRelation, rb: &FiniteRelation) -> FiniteRelation {
    let universe: BTreeSet<Value> = ra
        .universe
        .iter()
        .flat_map(|a| rb.universe.iter().map(move |b| Value::pair(a.clone(), b.clone())))
        .collect();
    let mut pairs = BTreeSet::new();
    for (a, a2) in &ra.pairs {
        for b in &rb.universe {
            for b2 in &rb.universe {
                pairs.insert((Value::pair(a.clone(), b.clone()), Value::pair(a2.clone(), b2.clone())));
            }
        }
    }
    for a in &ra.universe {
        for (b, b2) in &rb.pairs {
            pairs.insert((Value::pair(a.clone(), b.clone()), Value::pair(a.clone(), b2.clone())));
        }
    }
    FiniteRelation { pairs, universe }
}

/// `{(x, y) | (f x, f y) ∈ r}` over `universe`.
pub fn inv_image(r: &dyn Relation, f: impl Fn(&Value) -> Value, universe: &[Value]) -> FiniteRelation {
    let images: Vec<Value> = universe.iter().map(&f).collect();
    let mut pairs = BTreeSet::new();
    for (x, fx) in universe.iter().zip(&images) {
        for (y, fy) in universe.iter().zip(&images) {
            if r.contains(fx, fy) {
                pairs.insert((x.clone(), y.clone()));
            }
        }
    }
    FiniteRelation { pairs, universe: universe.iter().cloned().collect() }
}

/// The relation induced by a natural-valued measure: `inv_image less_than f`.
pub fn measure_rel(f: impl Fn(&Value) -> Value, universe: &[Value]) -> FiniteRelation {
    inv_image(&LessThanNat { bound: None }, f, universe)
}

/// `f <*mlex*> r`: decrease of `f`, or equal `f` and decrease in `r`.
pub fn mlex(f: impl Fn(&Value) -> BigInt, r: &dyn Relation, universe: &[Value]) -> FiniteRelation {
    let keys: Vec<BigInt> = universe.iter().map(&f).collect();
    let mut pairs = BTreeSet::new();
    for (x, fx) in universe.iter().zip(&keys) {
        for (y, fy) in universe.iter().zip(&keys) {
            if fx < fy || (fx == fy && r.contains(x, y)) {
                pairs.insert((x.clone(), y.clone()));
            }
        }
    }
    FiniteRelation { pairs, universe: universe.iter().cloned().collect() }
}

/// `gen_VDMNat_term r`: the part of `r` that is also a decrease of naturals.
pub fn gen_vdmnat_term(r: &FiniteRelation) -> FiniteRelation {
    let lt = LessThanNat { bound: None };
    r.restrict(|a, b| lt.contains(a, b))
}

/// `gen_set_term r`: the part of `r` that is a strict subset step.
pub fn gen_set_term(r: &FiniteRelation) -> FiniteRelation {
    r.restrict(|a, b| match (a, b) {
        (Value::Set(x), Value::Set(y)) => x.len() < y.len() && x.is_subset(y),
        _ => false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum WfResult {
    Acyclic,
    /// A closed path `v0, v1, …, v0` with each step a pair of the relation.
    CycleFound(Vec<Value>),
}

impl WfResult {
    pub fn is_acyclic(&self) -> bool {
        matches!(self, WfResult::Acyclic)
    }
}

/// On a finite carrier, well-founded induction holds iff the pair graph has
/// no cycle. Returns the first cycle met by a DFS in canonical order.
pub fn finite_wf_check(r: &FiniteRelation) -> WfResult {
    let mut g: DiGraph<&Value, ()> = DiGraph::new();
    let mut nodes: BTreeMap<&Value, NodeIndex> = BTreeMap::new();
    for v in &r.universe {
        nodes.insert(v, g.add_node(v));
    }
    for (a, b) in &r.pairs {
        g.add_edge(nodes[a], nodes[b], ());
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; g.node_count()];
    for &root in nodes.values() {
        if mark[root.index()] != Mark::New {
            continue;
        }
        // explicit stack of (node, sorted successors, next successor)
        let succ = |n: NodeIndex| {
            let mut s: Vec<NodeIndex> = g.neighbors(n).collect();
            s.sort_by_key(|i| g[*i]);
            s
        };
        let mut stack = vec![(root, succ(root), 0usize)];
        mark[root.index()] = Mark::Open;
        while let Some((node, next, i)) = stack.last_mut() {
            if *i == next.len() {
                mark[node.index()] = Mark::Done;
                stack.pop();
                continue;
            }
            let m = next[*i];
            *i += 1;
            match mark[m.index()] {
                Mark::Open => {
                    let start = stack.iter().position(|(n, _, _)| *n == m).unwrap();
                    let mut path: Vec<Value> = stack[start..].iter().map(|(n, _, _)| g[*n].clone()).collect();
                    path.push(g[m].clone());
                    return WfResult::CycleFound(path);
                }
                Mark::New => {
                    mark[m.index()] = Mark::Open;
                    let s = succ(m);
                    stack.push((m, s, 0));
                }
                Mark::Done => {}
            }
        }
    }
    WfResult::Acyclic
}
