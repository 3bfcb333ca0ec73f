//! Evaluation maps, winning strategies, and fixpoint labelings of cyclic
//! presentations.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::codes::{Address, BorelCode, ChildCount, CodeGraph, Label, Point};

/// A partial map from node addresses to truth values.
pub type Witness = BTreeMap<Address, bool>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnknownReason {
    FuelExhausted,
    UndeterminedCycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    In,
    Out,
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::In
        } else {
            Verdict::Out
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Verdict::In => Some(true),
            Verdict::Out => Some(false),
            Verdict::Unknown(_) => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::In => write!(f, "IN"),
            Verdict::Out => write!(f, "OUT"),
            Verdict::Unknown(UnknownReason::FuelExhausted) => write!(f, "UNKNOWN fuel-exhausted"),
            Verdict::Unknown(UnknownReason::UndeterminedCycle) => {
                write!(f, "UNKNOWN undetermined-cycle")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOutcome {
    pub verdict: Verdict,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("code is not a graph presentation")]
    NotAGraph,
}

type Tri = Result<bool, UnknownReason>;

fn leaf_value(label: &Label, x: &Point) -> Option<bool> {
    match label {
        Label::Leaf(c) => Some(c.contains(x)),
        _ => None,
    }
}

/// Number of children to examine at a node, and whether that covers all of
/// them.
fn child_budget(t: &BorelCode, fuel: usize) -> (usize, bool) {
    match t.child_count() {
        ChildCount::Finite(n) => (n, true),
        ChildCount::Infinite => (fuel, false),
    }
}

fn child_at(t: &BorelCode, n: usize) -> BorelCode {
    t.child(n).expect("index within the child budget")
}

/// Evaluates `t` at `x`. Finite codes get a total evaluation map; declared
/// infinite nodes are examined up to `fuel` children; graph presentations
/// are decided by their fixpoint labelings.
pub fn evaluate(t: &BorelCode, x: &Point, fuel: usize) -> EvalOutcome {
    let mut witness = Witness::new();
    let v = eval_node(t, &Address::root(), x, fuel, &mut witness);
    EvalOutcome {
        verdict: match v {
            Ok(b) => Verdict::from_bool(b),
            Err(r) => Verdict::Unknown(r),
        },
        witness,
    }
}

fn eval_node(t: &BorelCode, addr: &Address, x: &Point, fuel: usize, w: &mut Witness) -> Tri {
    if let Some((g, id)) = t.graph_ref() {
        return graph_strategy(g, id, addr, x, w);
    }
    if let Some(b) = leaf_value(t.label(), x) {
        w.insert(addr.clone(), b);
        return Ok(b);
    }
    // value that settles the node: 1 for unions, 0 for intersections
    let decisive = matches!(t.label(), Label::Union);
    let (budget, complete) = child_budget(t, fuel);
    let mut unknown = None;
    let mut settled = false;
    for n in 0..budget {
        match eval_node(&child_at(t, n), &addr.child(n), x, fuel, w) {
            Ok(b) if b == decisive => {
                settled = true;
                if !complete {
                    break;
                }
            }
            Ok(_) => {}
            Err(r) => {
                unknown.get_or_insert(r);
            }
        }
    }
    let v = if settled {
        Ok(decisive)
    } else if let Some(r) = unknown {
        Err(r)
    } else if complete {
        Ok(!decisive)
    } else {
        Err(UnknownReason::FuelExhausted)
    };
    if let Ok(b) = v {
        w.insert(addr.clone(), b);
    }
    v
}

/// Least and greatest fixpoints of the one-step evaluation operator on a
/// node table, with the round at which each node settled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixpoints {
    pub root: usize,
    pub least: Vec<bool>,
    pub greatest: Vec<bool>,
    /// Round at which a node became 1 in the least iteration.
    pub least_stage: Vec<Option<usize>>,
    /// Round at which a node became 0 in the greatest iteration.
    pub greatest_stage: Vec<Option<usize>>,
}

impl Fixpoints {
    pub fn compute(g: &CodeGraph, root: usize, x: &Point) -> Self {
        let (least, least_stage) = iterate(g, x, false);
        let (greatest, greatest_stage) = iterate(g, x, true);
        Fixpoints {
            root,
            least,
            greatest,
            least_stage,
            greatest_stage,
        }
    }

    pub fn determined(&self, id: usize) -> Option<bool> {
        (self.least[id] == self.greatest[id]).then_some(self.least[id])
    }
}

/// Jacobi iteration from the all-`start` labeling. Returns the fixpoint and,
/// per node, the round at which it took the value opposite to `start`.
fn iterate(g: &CodeGraph, x: &Point, start: bool) -> (Vec<bool>, Vec<Option<usize>>) {
    let nodes = g.nodes();
    let mut cur: Vec<bool> = nodes
        .iter()
        .map(|n| leaf_value(&n.label, x).unwrap_or(start))
        .collect();
    let mut stage: Vec<Option<usize>> = cur
        .iter()
        .map(|&v| (v != start).then_some(0))
        .collect();
    for round in 1.. {
        let next: Vec<bool> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| match n.label {
                Label::Leaf(_) => cur[i],
                Label::Union => n.children.iter().any(|&c| cur[c]),
                Label::Intersection => n.children.iter().all(|&c| cur[c]),
            })
            .collect();
        if next == cur {
            break;
        }
        for (i, (&a, &b)) in cur.iter().zip(&next).enumerate() {
            if a != b {
                stage[i] = Some(round);
            }
        }
        cur = next;
    }
    (cur, stage)
}

/// Fixpoint labelings of a graph-presented code at `x`.
pub fn fixpoint_labelings(t: &BorelCode, x: &Point) -> Result<Fixpoints, EvalError> {
    let (g, id) = t.graph_ref().ok_or(EvalError::NotAGraph)?;
    Ok(Fixpoints::compute(g, id, x))
}

fn graph_strategy(g: &CodeGraph, id: usize, addr: &Address, x: &Point, w: &mut Witness) -> Tri {
    let fp = Fixpoints::compute(g, id, x);
    match fp.determined(id) {
        Some(b) => {
            unfold_strategy(g, &fp, id, b, addr, w);
            Ok(b)
        }
        None => Err(UnknownReason::UndeterminedCycle),
    }
}

/// Writes a finite strategy for value `b` at node `id`. Obligations are
/// discharged by children of strictly smaller stage, so the unfolding ends.
fn unfold_strategy(g: &CodeGraph, fp: &Fixpoints, id: usize, b: bool, addr: &Address, w: &mut Witness) {
    w.insert(addr.clone(), b);
    let node = &g.nodes()[id];
    let (stages, values) = if b {
        (&fp.least_stage, &fp.least)
    } else {
        (&fp.greatest_stage, &fp.greatest)
    };
    let here = stages[id].expect("settled node has a stage");
    let below = |c: usize| values[c] == b && stages[c].is_some_and(|s| s < here);
    let existential = matches!(
        (&node.label, b),
        (Label::Union, true) | (Label::Intersection, false)
    );
    match node.label {
        Label::Leaf(_) => {}
        _ if existential => {
            let n = (0..node.children.len())
                .find(|&n| below(node.children[n]))
                .expect("a lower-stage child justifies the node");
            unfold_strategy(g, fp, node.children[n], b, &addr.child(n), w);
        }
        _ => {
            for (n, &c) in node.children.iter().enumerate() {
                debug_assert!(below(c));
                unfold_strategy(g, fp, c, b, &addr.child(n), w);
            }
        }
    }
}

/// Finds a winning strategy: children are tried in order and the search
/// stops at the first child that settles the node, so subtrees after it are
/// never visited.
pub fn solve_strategy(t: &BorelCode, x: &Point, fuel: usize) -> EvalOutcome {
    let mut witness = Witness::new();
    let v = solve_node(t, &Address::root(), x, fuel, &mut witness);
    EvalOutcome {
        verdict: match v {
            Ok(b) => Verdict::from_bool(b),
            Err(r) => {
                witness.clear();
                Verdict::Unknown(r)
            }
        },
        witness,
    }
}

fn solve_node(t: &BorelCode, addr: &Address, x: &Point, fuel: usize, w: &mut Witness) -> Tri {
    if let Some((g, id)) = t.graph_ref() {
        return graph_strategy(g, id, addr, x, w);
    }
    if let Some(b) = leaf_value(t.label(), x) {
        w.insert(addr.clone(), b);
        return Ok(b);
    }
    let decisive = matches!(t.label(), Label::Union);
    let (budget, complete) = child_budget(t, fuel);
    let mut local = Witness::new();
    let mut unknown = None;
    for n in 0..budget {
        let mut sub = Witness::new();
        match solve_node(&child_at(t, n), &addr.child(n), x, fuel, &mut sub) {
            Ok(b) if b == decisive => {
                w.extend(sub);
                w.insert(addr.clone(), decisive);
                return Ok(decisive);
            }
            Ok(_) => local.extend(sub),
            Err(r) => {
                unknown.get_or_insert(r);
            }
        }
    }
    match unknown {
        Some(r) => Err(r),
        None if complete => {
            w.extend(local);
            w.insert(addr.clone(), !decisive);
            Ok(!decisive)
        }
        None => Err(UnknownReason::FuelExhausted),
    }
}

fn defined_children(f: &Witness, addr: &Address) -> Vec<(usize, bool)> {
    let lo = addr.child(0);
    f.range(lo..)
        .take_while(|(a, _)| a.0.len() > addr.0.len() && a.0.starts_with(&addr.0))
        .filter(|(a, _)| a.depth() == addr.depth() + 1)
        .map(|(a, &v)| (*a.0.last().expect("child address"), v))
        .collect()
}

/// Checks the local clauses at every defined address. A value that settles
/// its node (1 at a union, 0 at an intersection) needs a defined child with
/// that value; the other value needs every child defined with it. Leaves are
/// checked first so a corrupted leaf is reported at its own address.
pub fn check_evaluation_map(t: &BorelCode, x: &Point, f: &Witness) -> Result<(), Address> {
    let mut interior = Vec::new();
    for (addr, &v) in f {
        let node = t.at(addr).map_err(|_| addr.clone())?;
        match leaf_value(node.label(), x) {
            Some(b) if b != v => return Err(addr.clone()),
            Some(_) => {}
            None => interior.push((addr, v, node)),
        }
    }
    for (addr, v, node) in interior {
        let decisive = matches!(node.label(), Label::Union);
        let kids = defined_children(f, addr);
        let ok = if v == decisive {
            kids.iter().any(|&(_, b)| b == decisive)
        } else {
            match node.child_count() {
                ChildCount::Finite(n) => kids.len() == n && kids.iter().all(|&(_, b)| b == v),
                ChildCount::Infinite => false,
            }
        };
        if !ok {
            return Err(addr.clone());
        }
    }
    Ok(())
}

/// Checks the winning-strategy clauses: the local clauses plus a defined
/// root.
pub fn check_strategy(t: &BorelCode, x: &Point, f: &Witness) -> Result<(), Address> {
    if !f.contains_key(&Address::root()) {
        return Err(Address::root());
    }
    check_evaluation_map(t, x, f)
}

/// Whether `f` is defined at every node of a fully expandable code.
pub fn is_total(t: &BorelCode, f: &Witness) -> bool {
    match t.addresses() {
        Ok(all) => all.len() == f.len() && all.iter().all(|a| f.contains_key(a)),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::ClopenCode;
    use crate::syntax::parse_code_file;

    fn pt(s: &str) -> Point {
        s.parse().unwrap()
    }

    fn cl(s: &str) -> ClopenCode {
        s.parse().unwrap()
    }

    fn zero_run(n: usize) -> ClopenCode {
        ClopenCode::cylinder(vec![false; n])
    }

    #[test]
    fn full_leaf_is_in() {
        let t = BorelCode::leaf(ClopenCode::full());
        assert_eq!(evaluate(&t, &pt(";1"), 0).verdict, Verdict::In);
    }

    #[test]
    fn union_witness() {
        let t = BorelCode::union(vec![BorelCode::leaf(cl("{[1]}")), BorelCode::leaf(cl("{[0]}"))]);
        let out = evaluate(&t, &pt(";0"), 1);
        assert_eq!(out.verdict, Verdict::In);
        assert_eq!(out.witness[&Address(vec![1])], true);
        assert_eq!(out.witness[&Address(vec![0])], false);
        assert!(is_total(&t, &out.witness));
        assert_eq!(check_evaluation_map(&t, &pt(";0"), &out.witness), Ok(()));
    }

    #[test]
    fn lazy_intersection_needs_refutation() {
        let t = BorelCode::lazy(Label::Intersection, ChildCount::Infinite, |n| {
            BorelCode::leaf(zero_run(n + 1))
        });
        for fuel in [0, 1, 5, 40] {
            assert_eq!(
                evaluate(&t, &pt(";0"), fuel).verdict,
                Verdict::Unknown(UnknownReason::FuelExhausted)
            );
        }
        assert!(evaluate(&t, &pt("001;1"), 2).verdict.as_bool().is_none());
        for fuel in 3..8 {
            let out = evaluate(&t, &pt("001;1"), fuel);
            assert_eq!(out.verdict, Verdict::Out);
            assert_eq!(check_evaluation_map(&t, &pt("001;1"), &out.witness), Ok(()));
        }
    }

    #[test]
    fn flipped_leaf_is_reported() {
        let t = parse_code_file("(inter (union (leaf {[0]}) (leaf {[1]})) (leaf full))").unwrap();
        let x = pt(";0");
        let mut w = evaluate(&t, &x, 0).witness;
        assert_eq!(check_evaluation_map(&t, &x, &w), Ok(()));
        let leaf = Address(vec![0, 1]);
        *w.get_mut(&leaf).unwrap() ^= true;
        assert_eq!(check_evaluation_map(&t, &x, &w), Err(leaf));
    }

    #[test]
    fn self_loops_are_undetermined() {
        for src in [
            "(def u (union (leaf empty) (ref u))) (ref u)",
            "(def u (inter (leaf full) (ref u))) (ref u)",
        ] {
            let t = parse_code_file(src).unwrap();
            let fp = fixpoint_labelings(&t, &pt(";0")).unwrap();
            assert!(!fp.least[fp.root]);
            assert!(fp.greatest[fp.root]);
            assert_eq!(
                evaluate(&t, &pt(";0"), 8).verdict,
                Verdict::Unknown(UnknownReason::UndeterminedCycle)
            );
        }
    }

    #[test]
    fn determined_but_not_completely_determined() {
        let t = parse_code_file(
            "(def u (union (leaf empty) (ref u)))\n(inter (leaf empty) (ref u))",
        )
        .unwrap();
        let x = pt(";1");
        let out = solve_strategy(&t, &x, 4);
        assert_eq!(out.verdict, Verdict::Out);
        let expected: Witness = [(Address::root(), false), (Address(vec![0]), false)]
            .into_iter()
            .collect();
        assert_eq!(out.witness, expected);
        assert_eq!(check_strategy(&t, &x, &out.witness), Ok(()));

        // same shape with an explicit root over a cyclic child
        let u = parse_code_file("(def u (union (leaf empty) (ref u))) (ref u)").unwrap();
        let t2 = BorelCode::intersection(vec![BorelCode::leaf(ClopenCode::empty()), u]);
        assert_eq!(solve_strategy(&t2, &x, 4).witness, expected);
    }

    #[test]
    fn acyclic_graph_fixpoints_agree() {
        let t = parse_code_file(
            "(def a (union (leaf {[0]}) (ref b)))\n(def b (inter (leaf {[1]}) (leaf full)))\n(inter (ref a) (ref b))",
        )
        .unwrap();
        for x in Point::enumerate(2) {
            let fp = fixpoint_labelings(&t, &x).unwrap();
            assert_eq!(fp.least, fp.greatest);
            let tree = evaluate(&t.to_explicit().unwrap(), &x, 0);
            let graph = evaluate(&t, &x, 0);
            assert_eq!(graph.verdict, tree.verdict);
            assert_eq!(check_strategy(&t, &x, &graph.witness), Ok(()));
        }
    }

    #[test]
    fn graph_strategies_descend() {
        // v is 0 in both fixpoints through a cycle that has an exit
        let t = parse_code_file(
            "(def v (union (leaf empty) (ref w)))\n(def w (inter (ref v) (leaf empty)))\n(ref v)",
        )
        .unwrap();
        let x = pt(";0");
        let out = solve_strategy(&t, &x, 0);
        assert_eq!(out.verdict, Verdict::Out);
        assert_eq!(check_strategy(&t, &x, &out.witness), Ok(()));
        assert!(out.witness.contains_key(&Address(vec![1, 1])));
    }

    #[test]
    fn strategy_checker_rejects_missing_root() {
        let t = BorelCode::leaf(ClopenCode::full());
        assert_eq!(check_strategy(&t, &pt(";0"), &Witness::new()), Err(Address::root()));
    }
}
