//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use borel_core::codes::{Address, BorelCode, Label, Point};
use borel_core::graphs::{EdgeColoring, FinGraph};
use rand::Rng;

/// Top-down memoized membership for explicit finite codes. Every node is
/// asked once; the table is the evaluation map.
pub fn memo_eval(t: &BorelCode, x: &Point) -> BTreeMap<Address, bool> {
    fn ask(t: &BorelCode, a: Address, x: &Point, memo: &mut HashMap<Address, bool>) -> bool {
        if let Some(&v) = memo.get(&a) {
            return v;
        }
        let kids = t.children().expect("explicit");
        let v = match t.label() {
            Label::Leaf(c) => c.contains(x),
            Label::Union => kids
                .iter()
                .enumerate()
                .map(|(i, c)| ask(c, a.child(i), x, memo))
                .fold(false, |acc, b| acc | b),
            Label::Intersection => kids
                .iter()
                .enumerate()
                .map(|(i, c)| ask(c, a.child(i), x, memo))
                .fold(true, |acc, b| acc & b),
        };
        memo.insert(a, v);
        v
    }
    let mut memo = HashMap::new();
    ask(t, Address::root(), x, &mut memo);
    memo.into_iter().collect()
}

pub fn member(t: &BorelCode, x: &Point) -> bool {
    memo_eval(t, x)[&Address::root()]
}

pub fn petersen() -> FinGraph {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    FinGraph::from_edges(10, &edges).unwrap()
}

/// Whether some proper edge coloring with `colors` colors extends `fixed`.
/// Plain backtracking over the unfixed edges.
pub fn edge_colorable_extending(g: &FinGraph, colors: usize, fixed: &EdgeColoring) -> bool {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let norm = |(u, v): (usize, usize)| (u.min(v), u.max(v));
    let fixed: HashMap<(usize, usize), usize> = fixed.iter().map(|(&e, &c)| (norm(e), c)).collect();
    let mut assign: Vec<Option<usize>> = edges.iter().map(|&e| fixed.get(&norm(e)).copied()).collect();
    let ok = |assign: &[Option<usize>]| {
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                let share = a == c || a == d || b == c || b == d;
                if share && assign[i].is_some() && assign[i] == assign[j] {
                    return false;
                }
            }
        }
        true
    };
    fn go(
        i: usize,
        assign: &mut Vec<Option<usize>>,
        fixed_mask: &[bool],
        colors: usize,
        ok: &dyn Fn(&[Option<usize>]) -> bool,
    ) -> bool {
        if !ok(assign) {
            return false;
        }
        if i == assign.len() {
            return true;
        }
        if fixed_mask[i] {
            return go(i + 1, assign, fixed_mask, colors, ok);
        }
        for c in 0..colors {
            assign[i] = Some(c);
            if go(i + 1, assign, fixed_mask, colors, ok) {
                return true;
            }
        }
        assign[i] = None;
        false
    }
    let fixed_mask: Vec<bool> = assign.iter().map(Option::is_some).collect();
    go(0, &mut assign, &fixed_mask, colors, &ok)
}

/// Whether a proper 2-coloring of the vertices agrees with `fixed`.
pub fn two_colorable_extending(g: &FinGraph, fixed: &[(usize, u8)]) -> bool {
    let n = g.vertex_count();
    (0..1u32 << n).any(|mask| {
        let c = |v: usize| ((mask >> v) & 1) as u8;
        fixed.iter().all(|&(v, col)| c(v) == col) && g.edges().all(|(u, v)| c(u) != c(v))
    })
}

/// Random bipartite graph with every degree at most `d`.
pub fn random_bipartite(rng: &mut impl Rng, d: usize, max_side: usize) -> FinGraph {
    let a = rng.gen_range(1..=max_side);
    let b = rng.gen_range(1..=max_side);
    let mut g = FinGraph::with_vertices(a + b);
    let tries = rng.gen_range(0..=a * b);
    for _ in 0..tries {
        let u = rng.gen_range(0..a);
        let v = a + rng.gen_range(0..b);
        if !g.has_edge(u, v) && g.degree(u) < d && g.degree(v) < d {
            g.add_edge(u, v).unwrap();
        }
    }
    g
}

pub fn random_graph(rng: &mut impl Rng, max_n: usize) -> FinGraph {
    let n = rng.gen_range(1..=max_n);
    let mut g = FinGraph::with_vertices(n);
    let p: f64 = rng.gen_range(0.1..0.9);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}
