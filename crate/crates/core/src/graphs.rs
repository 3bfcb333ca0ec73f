//! Finite graphs: bipartite 2-coloring, regular bipartite supergraphs,
//! perfect matchings, edge colorings, and leftmost selection.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at {0}")]
    SelfLoop(String),
    #[error("duplicate edge {0} {1}")]
    DuplicateEdge(String, String),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("graph is not bipartite: odd cycle {0:?}")]
    NotBipartite(Vec<usize>),
    #[error("vertex {vertex} has degree {degree} > {d}")]
    DegreeTooHigh {
        vertex: String,
        degree: usize,
        d: usize,
    },
    #[error("no candidates to select from")]
    EmptyCandidates,
    #[error("two candidates have the same encoding")]
    TiedEncodings,
    #[error("graph file line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// An undirected simple graph on vertices `0..n`, with names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FinGraph {
    names: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

impl FinGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Vertices named `0..n`.
    pub fn with_vertices(n: usize) -> Self {
        FinGraph {
            names: (0..n).map(|i| i.to_string()).collect(),
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::with_vertices(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Reads `v <name>` and `e <name> <name>` lines.
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut g = FinGraph::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["v", name] => {
                    if index.contains_key(*name) {
                        return Err(GraphError::DuplicateVertex(name.to_string()));
                    }
                    index.insert(name.to_string(), g.add_vertex(name));
                }
                ["e", a, b] => {
                    let look = |n: &str| {
                        index
                            .get(n)
                            .copied()
                            .ok_or_else(|| GraphError::UnknownVertex(n.to_string()))
                    };
                    g.add_edge(look(a)?, look(b)?)?;
                }
                _ => {
                    return Err(GraphError::Syntax {
                        line: i + 1,
                        msg: format!("cannot read '{line}'"),
                    })
                }
            }
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, name: &str) -> usize {
        self.names.push(name.to_string());
        self.names.len() - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(self.names[u].clone()));
        }
        if !self.edges.insert(ordered(u, v)) {
            return Err(GraphError::DuplicateEdge(
                self.names[u].clone(),
                self.names[v].clone(),
            ));
        }
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        self.edges.remove(&ordered(u, v))
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&ordered(u, v))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertex_count()];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn is_regular(&self, d: usize) -> bool {
        self.degrees().iter().all(|&x| x == d)
    }

    /// Whether `self` is the subgraph of `big` induced on `self`'s vertex
    /// ids, which `big` must keep as its first ids.
    pub fn is_induced_subgraph_of(&self, big: &FinGraph) -> bool {
        let n = self.vertex_count();
        n <= big.vertex_count()
            && big
                .edges
                .iter()
                .filter(|&&(u, v)| u < n && v < n)
                .copied()
                .eq(self.edges.iter().copied())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.names {
            out.push_str(&format!("v {n}\n"));
        }
        for &(u, v) in &self.edges {
            out.push_str(&format!("e {} {}\n", self.names[u], self.names[v]));
        }
        out
    }

    fn fresh_name(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.names.contains(&name) {
            name.insert(0, '~');
        }
        name
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TwoColoring {
    Coloring(Vec<u8>),
    OddCycle(Vec<usize>),
}

/// BFS parity from the least vertex of each component. A conflicting edge
/// yields the odd cycle through it and the lowest common BFS ancestor.
pub fn two_color(g: &FinGraph) -> TwoColoring {
    let adj = g.adjacency();
    let n = g.vertex_count();
    let mut color: Vec<Option<u8>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut depth = vec![0usize; n];
    for root in 0..n {
        if color[root].is_some() {
            continue;
        }
        color[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                match color[v] {
                    None => {
                        color[v] = Some(1 - color[u].expect("colored"));
                        parent[v] = Some(u);
                        depth[v] = depth[u] + 1;
                        queue.push_back(v);
                    }
                    Some(c) if Some(c) == color[u] => {
                        return TwoColoring::OddCycle(cycle_through(u, v, &parent, &depth));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    TwoColoring::Coloring(color.into_iter().map(|c| c.expect("all visited")).collect())
}

fn cycle_through(u: usize, v: usize, parent: &[Option<usize>], depth: &[usize]) -> Vec<usize> {
    let (mut a, mut b) = (u, v);
    let mut left = vec![a];
    let mut right = vec![b];
    while a != b {
        if depth[a] >= depth[b] {
            a = parent[a].expect("not the root");
            left.push(a);
        } else {
            b = parent[b].expect("not the root");
            right.push(b);
        }
    }
    right.pop();
    right.reverse();
    left.extend(right);
    left
}

pub fn is_proper_two_coloring(g: &FinGraph, c: &[u8]) -> bool {
    g.edges().all(|(u, v)| c[u] != c[v])
}

pub fn is_odd_cycle(g: &FinGraph, cycle: &[usize]) -> bool {
    let k = cycle.len();
    k % 2 == 1
        && k >= 3
        && cycle.iter().collect::<BTreeSet<_>>().len() == k
        && (0..k).all(|i| g.has_edge(cycle[i], cycle[(i + 1) % k]))
}

fn sides(g: &FinGraph) -> Result<Vec<u8>, GraphError> {
    match two_color(g) {
        TwoColoring::Coloring(c) => Ok(c),
        TwoColoring::OddCycle(c) => Err(GraphError::NotBipartite(c)),
    }
}

/// A `d`-regular bipartite graph containing `g` as the induced subgraph on
/// its first `g.vertex_count()` vertices. Sides are padded to equal size,
/// fresh sides of size `k = max(d|A0| - |E|, d)` absorb the missing degrees,
/// leftover fresh vertices are paired, and a circulant completes the fresh
/// part.
pub fn embed_into_regular(g: &FinGraph, d: usize) -> Result<FinGraph, GraphError> {
    let colors = sides(g)?;
    for (v, deg) in g.degrees().into_iter().enumerate() {
        if deg > d {
            return Err(GraphError::DegreeTooHigh {
                vertex: g.name(v).to_string(),
                degree: deg,
                d,
            });
        }
    }
    if g.is_regular(d) {
        return Ok(g.clone());
    }
    let mut h = g.clone();
    let mut a0: Vec<usize> = (0..g.vertex_count()).filter(|&v| colors[v] == 0).collect();
    let mut b0: Vec<usize> = (0..g.vertex_count()).filter(|&v| colors[v] == 1).collect();
    let mut pad = 0;
    while a0.len() != b0.len() {
        let name = h.fresh_name(&format!("pad{pad}"));
        let v = h.add_vertex(&name);
        pad += 1;
        if a0.len() < b0.len() {
            a0.push(v);
        } else {
            b0.push(v);
        }
    }
    let m = a0.len();
    let deficit = d * m - g.edge_count();
    let k = deficit.max(d);
    let a1: Vec<usize> = (0..k)
        .map(|i| {
            let name = h.fresh_name(&format!("a{i}"));
            h.add_vertex(&name)
        })
        .collect();
    let b1: Vec<usize> = (0..k)
        .map(|i| {
            let name = h.fresh_name(&format!("b{i}"));
            h.add_vertex(&name)
        })
        .collect();
    let degrees = h.degrees();
    let mut next = 0;
    for &v in &a0 {
        for _ in degrees[v]..d {
            h.add_edge(v, b1[next]).expect("fresh vertex");
            next += 1;
        }
    }
    debug_assert_eq!(next, deficit);
    next = 0;
    for &v in &b0 {
        for _ in degrees[v]..d {
            h.add_edge(v, a1[next]).expect("fresh vertex");
            next += 1;
        }
    }
    debug_assert_eq!(next, deficit);
    for j in deficit..k {
        h.add_edge(a1[j], b1[j]).expect("fresh pair");
    }
    // shift 0 is the pairing above; shifts 1..d cannot collide with it
    for s in 1..d {
        for j in 0..k {
            h.add_edge(a1[j], b1[(j + s) % k]).expect("distinct shifts");
        }
    }
    debug_assert!(h.is_regular(d));
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchingResult {
    Perfect(Vec<(usize, usize)>),
    /// A vertex set on one side with fewer neighbors than members.
    NoMatching { violator: BTreeSet<usize> },
}

/// Maximum matching by augmenting paths; `mate[v]` is v's partner.
fn kuhn(adj: &[Vec<usize>], left: &[usize], n: usize) -> Vec<Option<usize>> {
    let mut mate = vec![None; n];
    fn augment(
        u: usize,
        adj: &[Vec<usize>],
        mate: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if mate[v].is_none_or(|w| augment(w, adj, mate, seen)) {
                mate[v] = Some(u);
                mate[u] = Some(v);
                return true;
            }
        }
        false
    }
    for &u in left {
        let mut seen = vec![false; n];
        augment(u, adj, &mut mate, &mut seen);
    }
    mate
}

fn has_perfect_matching(adj: &[Vec<usize>], left: &[usize], alive: &[bool]) -> bool {
    let n = adj.len();
    let live_left: Vec<usize> = left.iter().copied().filter(|&v| alive[v]).collect();
    let mate = kuhn(adj, &live_left, n);
    (0..n).all(|v| !alive[v] || mate[v].is_some())
}

/// A perfect matching, refined to the leftmost one in the canonical
/// encoding, or a Hall violator when none exists.
pub fn perfect_matching(g: &FinGraph) -> Result<MatchingResult, GraphError> {
    let colors = sides(g)?;
    let n = g.vertex_count();
    let left: Vec<usize> = (0..n).filter(|&v| colors[v] == 0).collect();
    let mut adj = g.adjacency();
    let mate = kuhn(&adj, &left, n);
    let unmatched = |side: u8| {
        (0..n)
            .filter(|&v| colors[v] == side && mate[v].is_none())
            .count()
    };
    let (u0, u1) = (unmatched(0), unmatched(1));
    if u0 + u1 > 0 {
        let side = if u0 >= u1 { 0 } else { 1 };
        // alternating reachability from the unmatched vertices of `side`
        let mut reached: BTreeSet<usize> = (0..n)
            .filter(|&v| colors[v] == side && mate[v].is_none())
            .collect();
        let mut queue: VecDeque<usize> = reached.iter().copied().collect();
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if let Some(w) = mate[v] {
                    if reached.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
        return Ok(MatchingResult::NoMatching { violator: reached });
    }
    // greedily drop each edge, in encoding order, that some perfect
    // matching avoids; keep the ones every remaining matching needs
    let mut alive = vec![true; n];
    let mut chosen = Vec::new();
    for (u, v) in g.edges() {
        if !alive[u] || !alive[v] {
            continue;
        }
        adj[u].retain(|&x| x != v);
        adj[v].retain(|&x| x != u);
        if !has_perfect_matching(&adj, &left, &alive) {
            chosen.push((u, v));
            alive[u] = false;
            alive[v] = false;
            for x in [u, v] {
                for y in std::mem::take(&mut adj[x]) {
                    adj[y].retain(|&z| z != x);
                }
            }
        }
    }
    Ok(MatchingResult::Perfect(chosen))
}

pub fn is_perfect_matching(g: &FinGraph, m: &[(usize, usize)]) -> bool {
    let mut hit = vec![0; g.vertex_count()];
    for &(u, v) in m {
        if !g.has_edge(u, v) {
            return false;
        }
        hit[u] += 1;
        hit[v] += 1;
    }
    hit.iter().all(|&h| h == 1)
}

/// Edges such that every vertex meets at most one of them and every vertex
/// of degree `d` meets exactly one.
pub fn partial_matching_degree_d(
    g: &FinGraph,
    d: usize,
) -> Result<Vec<(usize, usize)>, GraphError> {
    if g.edge_count() == 0 {
        sides(g)?;
        return Ok(Vec::new());
    }
    let h = embed_into_regular(g, d)?;
    let n = g.vertex_count();
    match perfect_matching(&h)? {
        MatchingResult::Perfect(m) => Ok(m.into_iter().filter(|&(u, v)| u < n && v < n).collect()),
        MatchingResult::NoMatching { .. } => unreachable!("regular bipartite graphs have perfect matchings"),
    }
}

pub fn satisfies_partial_matching_clauses(g: &FinGraph, d: usize, m: &[(usize, usize)]) -> bool {
    let mut hit = vec![0; g.vertex_count()];
    for &(u, v) in m {
        if !g.has_edge(u, v) {
            return false;
        }
        hit[u] += 1;
        hit[v] += 1;
    }
    let deg = g.degrees();
    (0..g.vertex_count()).all(|v| hit[v] <= 1 && (deg[v] != d || hit[v] == 1))
}

/// Colors keyed by edge `(u, v)` with `u < v`.
pub type EdgeColoring = BTreeMap<(usize, usize), usize>;

pub fn is_proper_edge_coloring(g: &FinGraph, c: &EdgeColoring) -> bool {
    if c.len() != g.edge_count() || !g.edges().all(|e| c.contains_key(&e)) {
        return false;
    }
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    c.iter()
        .all(|(&(u, v), &col)| seen.insert((u, col)) && seen.insert((v, col)))
}

pub fn color_count(c: &EdgeColoring) -> usize {
    c.values().collect::<BTreeSet<_>>().len()
}

struct Vizing {
    /// `at[x][c]`: the neighbor joined to x by an edge of color c.
    at: Vec<Vec<Option<usize>>>,
    colors: usize,
}

impl Vizing {
    fn color(&self, u: usize, v: usize) -> Option<usize> {
        (0..self.colors).find(|&c| self.at[u][c] == Some(v))
    }

    fn is_free(&self, x: usize, c: usize) -> bool {
        self.at[x][c].is_none()
    }

    fn free(&self, x: usize) -> usize {
        (0..self.colors)
            .find(|&c| self.is_free(x, c))
            .expect("a vertex sees at most Δ colors")
    }

    fn set(&mut self, u: usize, v: usize, c: usize) {
        debug_assert!(self.is_free(u, c) && self.is_free(v, c));
        self.at[u][c] = Some(v);
        self.at[v][c] = Some(u);
    }

    fn unset(&mut self, u: usize, v: usize) {
        if let Some(c) = self.color(u, v) {
            self.at[u][c] = None;
            self.at[v][c] = None;
        }
    }

    fn is_fan(&self, u: usize, fan: &[usize]) -> bool {
        fan.windows(2).all(|w| {
            self.color(u, w[1])
                .is_some_and(|c| self.is_free(w[0], c))
        })
    }

    fn color_edge(&mut self, adj: &[Vec<usize>], u: usize, v: usize) {
        let mut fan = vec![v];
        loop {
            let last = *fan.last().expect("nonempty");
            let next = adj[u].iter().copied().find(|&w| {
                !fan.contains(&w) && self.color(u, w).is_some_and(|c| self.is_free(last, c))
            });
            match next {
                Some(w) => fan.push(w),
                None => break,
            }
        }
        let c = self.free(u);
        let d = self.free(*fan.last().expect("nonempty"));
        // swap c and d along the d/c path from u
        let mut path = Vec::new();
        let (mut x, mut cur) = (u, d);
        while let Some(y) = self.at[x][cur] {
            path.push((x, y, cur));
            x = y;
            cur = if cur == d { c } else { d };
            if path.len() > self.at.len() {
                break;
            }
        }
        for &(x, y, _) in &path {
            self.unset(x, y);
        }
        for &(x, y, col) in &path {
            self.set(x, y, if col == d { c } else { d });
        }
        let i = (0..fan.len())
            .find(|&i| self.is_free(fan[i], d) && self.is_fan(u, &fan[..=i]))
            .expect("a fan vertex with d free exists after the swap");
        for j in 0..i {
            let cc = self.color(u, fan[j + 1]).expect("fan edge colored");
            self.unset(u, fan[j + 1]);
            self.set(u, fan[j], cc);
        }
        self.set(u, fan[i], d);
    }
}

/// A proper edge coloring with at most `Δ + 1` colors (fans and
/// alternating-path swaps).
pub fn vizing_color(g: &FinGraph) -> EdgeColoring {
    let n = g.vertex_count();
    let colors = g.max_degree() + 1;
    let adj = g.adjacency();
    let mut st = Vizing {
        at: vec![vec![None; colors]; n],
        colors,
    };
    for (u, v) in g.edges() {
        st.color_edge(&adj, u, v);
    }
    g.edges()
        .map(|(u, v)| ((u, v), st.color(u, v).expect("every edge colored")))
        .collect()
}

/// A proper edge coloring of a bipartite graph with at most `Δ` colors, one
/// perfect matching of a `Δ`-regular supergraph per color.
pub fn konig_color(g: &FinGraph) -> Result<EdgeColoring, GraphError> {
    let delta = g.max_degree();
    if delta == 0 {
        sides(g)?;
        return Ok(EdgeColoring::new());
    }
    let mut h = embed_into_regular(g, delta)?;
    let colors = sides(&h)?;
    let n = g.vertex_count();
    let mut out = EdgeColoring::new();
    for color in 0..delta {
        let left: Vec<usize> = (0..h.vertex_count()).filter(|&v| colors[v] == 0).collect();
        let mate = kuhn(&h.adjacency(), &left, h.vertex_count());
        for &u in &left {
            let v = mate[u].expect("regular bipartite graphs have perfect matchings");
            h.remove_edge(u, v);
            if u < n && v < n {
                out.insert(ordered(u, v), color);
            }
        }
    }
    Ok(out)
}

/// Canonical encoding of an edge set: one bit per vertex pair `u < v`, in
/// sorted order.
pub fn encode_edges(n: usize, edges: &[(usize, usize)]) -> Vec<bool> {
    let set: BTreeSet<(usize, usize)> = edges.iter().map(|&(u, v)| ordered(u, v)).collect();
    (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .map(|e| set.contains(&e))
        .collect()
}

/// The candidate whose encoding is lexicographically least.
pub fn leftmost<'a, T>(
    candidates: &'a [T],
    key: impl Fn(&T) -> Vec<bool>,
) -> Result<&'a T, GraphError> {
    let mut keyed: Vec<(Vec<bool>, &T)> = candidates.iter().map(|c| (key(c), c)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    match keyed.as_slice() {
        [] => Err(GraphError::EmptyCandidates),
        [(k0, _), (k1, _), ..] if k0 == k1 => Err(GraphError::TiedEncodings),
        [(_, best), ..] => Ok(best),
    }
}
