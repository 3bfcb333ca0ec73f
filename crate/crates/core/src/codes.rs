//! Labeled Borel codes over Cantor space.
//!
//! A [`BorelCode`] is a rooted tree whose interior nodes are countable unions
//! or intersections and whose leaves are clopen sets ([`ClopenCode`]). Children
//! come in one of three presentations: an explicit list, a memoized lazy
//! generator (possibly infinite), or a node of a finite [`CodeGraph`], which
//! may contain cycles and so present an ill-founded unfolding.
//!
//! Points of Cantor space are eventually periodic sequences ([`Point`]).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::ordinals::Ordinal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("child {index} does not exist (node has {count} children)")]
    NoSuchChild { index: usize, count: usize },
    #[error("leaf nodes have no children")]
    LeafHasNoChildren,
    #[error("code is not fully expandable (infinite generator or cyclic presentation)")]
    Unbounded,
    #[error("no node at address {0}")]
    BadAddress(Address),
    #[error("a point needs a nonempty period")]
    EmptyPeriod,
    #[error("bad bit string {0:?}")]
    BadBits(String),
    #[error("bad point syntax {0:?}")]
    BadPoint(String),
    #[error("bad clopen syntax {0:?}")]
    BadClopen(String),
    #[error("bad address syntax {0:?}")]
    BadAddressSyntax(String),
    #[error("graph node {0} refers to a missing node")]
    DanglingGraphRef(usize),
    #[error("graph node {0} is a leaf with children")]
    LeafWithChildren(usize),
}

fn parse_bits(s: &str) -> Result<Vec<bool>, CodeError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CodeError::BadBits(s.to_string())),
        })
        .collect()
}

pub(crate) fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

/// An eventually periodic point `prefix . period . period . ...` of `2^w`,
/// always held in canonical form (primitive period, shortest prefix).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    prefix: Vec<bool>,
    period: Vec<bool>,
}

impl Point {
    pub fn new(prefix: Vec<bool>, period: Vec<bool>) -> Result<Self, CodeError> {
        if period.is_empty() {
            return Err(CodeError::EmptyPeriod);
        }
        let mut p = Point { prefix, period };
        p.canonicalize();
        Ok(p)
    }

    pub fn constant(bit: bool) -> Self {
        Point {
            prefix: Vec::new(),
            period: vec![bit],
        }
    }

    /// `bits` followed by zeros forever.
    pub fn finite_support(bits: &[bool]) -> Self {
        Point::new(bits.to_vec(), vec![false]).expect("nonempty period")
    }

    fn canonicalize(&mut self) {
        let n = self.period.len();
        if let Some(d) = (1..=n)
            .filter(|d| n % d == 0)
            .find(|&d| (0..n).all(|i| self.period[i] == self.period[i % d]))
        {
            self.period.truncate(d);
        }
        while let Some(&last) = self.prefix.last() {
            if last != *self.period.last().expect("nonempty period") {
                break;
            }
            self.prefix.pop();
            self.period.rotate_right(1);
        }
    }

    pub fn prefix(&self) -> &[bool] {
        &self.prefix
    }

    pub fn period(&self) -> &[bool] {
        &self.period
    }

    pub fn bit(&self, n: usize) -> bool {
        if n < self.prefix.len() {
            self.prefix[n]
        } else {
            self.period[(n - self.prefix.len()) % self.period.len()]
        }
    }

    /// The first `n` bits.
    pub fn bits(&self, n: usize) -> Vec<bool> {
        (0..n).map(|i| self.bit(i)).collect()
    }

    /// The sequence with the first `k` bits removed.
    pub fn shift(&self, k: usize) -> Point {
        if k <= self.prefix.len() {
            return Point::new(self.prefix[k..].to_vec(), self.period.clone())
                .expect("nonempty period");
        }
        let mut period = self.period.clone();
        period.rotate_left((k - self.prefix.len()) % self.period.len());
        Point::new(Vec::new(), period).expect("nonempty period")
    }

    /// The purely periodic sequence that agrees with `self` on its periodic
    /// part, with the same phase: bit `i` is `period[(i - |prefix|) mod |period|]`
    /// for every `i`. It differs from `self` in finitely many places.
    pub fn periodic_representative(&self) -> Point {
        let len = self.period.len();
        let offset = self.prefix.len() % len;
        let mut period = self.period.clone();
        period.rotate_right(offset);
        Point::new(Vec::new(), period).expect("nonempty period")
    }

    /// Every distinct point whose canonical prefix and period together use at
    /// most `max_bits` bits.
    pub fn enumerate(max_bits: usize) -> Vec<Point> {
        let mut seen = BTreeSet::new();
        for period_len in 1..=max_bits {
            for prefix_len in 0..=(max_bits - period_len) {
                for pre in 0u32..(1 << prefix_len) {
                    for per in 0u32..(1 << period_len) {
                        let prefix = (0..prefix_len).map(|i| pre >> i & 1 == 1).collect();
                        let period = (0..period_len).map(|i| per >> i & 1 == 1).collect();
                        seen.insert(Point::new(prefix, period).expect("nonempty period"));
                    }
                }
            }
        }
        seen.into_iter().collect()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{};{}",
            bits_to_string(&self.prefix),
            bits_to_string(&self.period)
        )
    }
}

impl FromStr for Point {
    type Err = CodeError;

    /// `prefix;period`, e.g. `010;1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (pre, per) = s
            .split_once(';')
            .ok_or_else(|| CodeError::BadPoint(s.to_string()))?;
        let prefix = parse_bits(pre.trim()).map_err(|_| CodeError::BadPoint(s.to_string()))?;
        let period = parse_bits(per.trim()).map_err(|_| CodeError::BadPoint(s.to_string()))?;
        Point::new(prefix, period)
    }
}

// ---------------------------------------------------------------------------
// Clopen sets
// ---------------------------------------------------------------------------

/// A clopen subset of `2^w` as a finite union of cylinders.
///
/// The stored cylinders are exactly the maximal cylinders contained in the set,
/// which forms a prefix antichain and makes structural equality coincide with
/// equality of the denoted sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClopenCode {
    cylinders: BTreeSet<Vec<bool>>,
}

impl ClopenCode {
    pub fn empty() -> Self {
        ClopenCode {
            cylinders: BTreeSet::new(),
        }
    }

    pub fn full() -> Self {
        Self::cylinder(Vec::new())
    }

    pub fn cylinder(sigma: Vec<bool>) -> Self {
        ClopenCode {
            cylinders: BTreeSet::from([sigma]),
        }
    }

    pub fn from_cylinders(cylinders: impl IntoIterator<Item = Vec<bool>>) -> Self {
        let raw: Vec<Vec<bool>> = cylinders.into_iter().collect();
        let refs: Vec<&[bool]> = raw.iter().map(Vec::as_slice).collect();
        let mut out = BTreeSet::new();
        canonical(&refs, &mut Vec::new(), &mut out);
        ClopenCode { cylinders: out }
    }

    /// The set of sequences whose `n`-th bit is `bit`. Needs `2^n` cylinders.
    pub fn bit_equals(n: usize, bit: bool) -> Self {
        assert!(n < 24, "bit_equals({n}) would need 2^{n} cylinders");
        let cylinders = (0u32..(1 << n)).map(|m| {
            let mut s: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
            s.push(bit);
            s
        });
        Self::from_cylinders(cylinders)
    }

    pub fn cylinders(&self) -> impl Iterator<Item = &[bool]> {
        self.cylinders.iter().map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.cylinders.len() == 1 && self.cylinders.iter().next().is_some_and(Vec::is_empty)
    }

    pub fn max_len(&self) -> usize {
        self.cylinders.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn contains(&self, x: &Point) -> bool {
        let bits = x.bits(self.max_len());
        self.cylinders.iter().any(|c| bits.starts_with(c))
    }

    pub fn complement(&self) -> Self {
        let refs: Vec<&[bool]> = self.cylinders().collect();
        let mut raw = Vec::new();
        complement_into(&refs, &mut Vec::new(), &mut raw);
        Self::from_cylinders(raw)
    }
}

// Collects the maximal cylinders below `prefix` covered by `strings`, where
// each string is taken relative to `prefix`.
fn canonical(strings: &[&[bool]], prefix: &mut Vec<bool>, out: &mut BTreeSet<Vec<bool>>) {
    if strings.is_empty() {
        return;
    }
    if strings.iter().any(|s| s.is_empty()) {
        out.insert(prefix.clone());
        return;
    }
    let mut halves = [BTreeSet::new(), BTreeSet::new()];
    for bit in [false, true] {
        let sub: Vec<&[bool]> = strings
            .iter()
            .filter(|s| s[0] == bit)
            .map(|s| &s[1..])
            .collect();
        prefix.push(bit);
        canonical(&sub, prefix, &mut halves[bit as usize]);
        prefix.pop();
    }
    let whole = |bit: bool, half: &BTreeSet<Vec<bool>>| {
        half.len() == 1 && half.iter().next().is_some_and(|s| s.len() == prefix.len() + 1 && s[prefix.len()] == bit)
    };
    if whole(false, &halves[0]) && whole(true, &halves[1]) {
        out.insert(prefix.clone());
    } else {
        let [lo, hi] = halves;
        out.extend(lo);
        out.extend(hi);
    }
}

fn complement_into(strings: &[&[bool]], prefix: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
    if strings.iter().any(|s| s.is_empty()) {
        return;
    }
    if strings.is_empty() {
        out.push(prefix.clone());
        return;
    }
    for bit in [false, true] {
        let sub: Vec<&[bool]> = strings
            .iter()
            .filter(|s| s[0] == bit)
            .map(|s| &s[1..])
            .collect();
        prefix.push(bit);
        complement_into(&sub, prefix, out);
        prefix.pop();
    }
}

impl fmt::Display for ClopenCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("empty");
        }
        if self.is_full() {
            return f.write_str("full");
        }
        f.write_str("{")?;
        for (i, c) in self.cylinders.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "[{}]", bits_to_string(c))?;
        }
        f.write_str("}")
    }
}

impl FromStr for ClopenCode {
    type Err = CodeError;

    /// `empty`, `full`, or `{[bits], [bits], ...}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "empty" => return Ok(Self::empty()),
            "full" => return Ok(Self::full()),
            _ => {}
        }
        let bad = || CodeError::BadClopen(s.to_string());
        let inner = t
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(bad)?;
        if inner.trim().is_empty() {
            return Ok(Self::empty());
        }
        let cylinders = inner
            .split(',')
            .map(|c| {
                let c = c.trim();
                let bits = c
                    .strip_prefix('[')
                    .and_then(|r| r.strip_suffix(']'))
                    .ok_or_else(bad)?;
                parse_bits(bits.trim()).map_err(|_| bad())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_cylinders(cylinders))
    }
}

// ---------------------------------------------------------------------------
// Addresses
// ---------------------------------------------------------------------------

/// A node address: the sequence of child indices leading from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Address(pub Vec<usize>);

impl Address {
    pub fn root() -> Self {
        Address(Vec::new())
    }

    pub fn child(&self, n: usize) -> Self {
        let mut v = self.0.clone();
        v.push(n);
        Address(v)
    }

    pub fn parent(&self) -> Option<Self> {
        let (_, init) = self.0.split_last()?;
        Some(Address(init.to_vec()))
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_proper_prefix_of(&self, other: &Address) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str(">")
    }
}

impl FromStr for Address {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CodeError::BadAddressSyntax(s.to_string());
        let inner = s
            .trim()
            .strip_prefix('<')
            .and_then(|r| r.strip_suffix('>'))
            .ok_or_else(bad)?;
        if inner.trim().is_empty() {
            return Ok(Address::root());
        }
        inner
            .split(',')
            .map(|n| n.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()
            .map(Address)
    }
}

// ---------------------------------------------------------------------------
// Borel codes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    Union,
    Intersection,
    Leaf(ClopenCode),
}

impl Label {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Label::Leaf(_))
    }

    /// Union and intersection swapped, leaf sets complemented.
    pub fn dual(&self) -> Label {
        match self {
            Label::Union => Label::Intersection,
            Label::Intersection => Label::Union,
            Label::Leaf(c) => Label::Leaf(c.complement()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChildCount {
    Finite(usize),
    Infinite,
}

/// How a node's children are presented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Presentation {
    Explicit,
    Lazy,
    Graph,
}

type Generator = Arc<dyn Fn(usize) -> BorelCode + Send + Sync>;

#[derive(Clone)]
pub enum LazySource {
    /// Child `n` is `items[n % items.len()]`.
    Cycle(Vec<BorelCode>),
    Generator(Generator),
}

pub struct LazyChildren {
    source: LazySource,
    count: ChildCount,
    cache: Mutex<HashMap<usize, BorelCode>>,
    forced: AtomicUsize,
}

impl LazyChildren {
    fn force(&self, n: usize) -> BorelCode {
        let mut cache = self.cache.lock().expect("generator cache poisoned");
        if let Some(c) = cache.get(&n) {
            return c.clone();
        }
        let child = match &self.source {
            LazySource::Cycle(items) => items[n % items.len()].clone(),
            LazySource::Generator(g) => g(n),
        };
        self.forced.fetch_add(1, AtomicOrdering::SeqCst);
        cache.insert(n, child.clone());
        child
    }
}

/// One node of a finite, possibly cyclic, code presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub name: Option<String>,
    pub label: Label,
    pub rank: Option<Ordinal>,
    pub children: Vec<usize>,
}

/// A finite node table whose edges may form cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeGraph {
    nodes: Vec<GraphNode>,
}

impl CodeGraph {
    pub fn new(nodes: Vec<GraphNode>) -> Result<Self, CodeError> {
        for (i, n) in nodes.iter().enumerate() {
            if n.label.is_leaf() && !n.children.is_empty() {
                return Err(CodeError::LeafWithChildren(i));
            }
            if n.children.iter().any(|&c| c >= nodes.len()) {
                return Err(CodeError::DanglingGraphRef(i));
            }
        }
        Ok(CodeGraph { nodes })
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids reachable from `root`, in discovery order.
    pub fn reachable(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            order.push(v);
            stack.extend(self.nodes[v].children.iter().rev());
        }
        order
    }

    /// Whether a cycle is reachable from `root`.
    pub fn has_cycle_from(&self, root: usize) -> bool {
        // 0 = unvisited, 1 = on stack, 2 = done
        fn visit(g: &CodeGraph, v: usize, state: &mut [u8]) -> bool {
            match state[v] {
                1 => return true,
                2 => return false,
                _ => {}
            }
            state[v] = 1;
            for &c in &g.nodes[v].children {
                if visit(g, c, state) {
                    return true;
                }
            }
            state[v] = 2;
            false
        }
        visit(self, root, &mut vec![0; self.nodes.len()])
    }

    fn negate(&self) -> CodeGraph {
        CodeGraph {
            nodes: self
                .nodes
                .iter()
                .map(|n| GraphNode {
                    name: n.name.clone(),
                    label: n.label.dual(),
                    rank: n.rank.clone(),
                    children: n.children.clone(),
                })
                .collect(),
        }
    }
}

enum Node {
    Tree {
        label: Label,
        rank: Option<Ordinal>,
        children: Vec<BorelCode>,
    },
    Lazy {
        label: Label,
        rank: Option<Ordinal>,
        lazy: LazyChildren,
    },
    Graph {
        graph: Arc<CodeGraph>,
        id: usize,
    },
}

/// A labeled Borel code. Cloning is cheap; subtrees are shared.
#[derive(Clone)]
pub struct BorelCode(Arc<Node>);

/// Outcome of [`BorelCode::check_ranked`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RankCheck {
    Ranked,
    /// The first node (in preorder) whose annotation fails: either the root
    /// exceeds the bound or a child's rank is not strictly below its parent's.
    Violation(Address),
}

impl RankCheck {
    pub fn is_ranked(&self) -> bool {
        matches!(self, RankCheck::Ranked)
    }
}

impl BorelCode {
    pub fn leaf(c: ClopenCode) -> Self {
        Self::tree(Label::Leaf(c), Vec::new())
    }

    pub fn union(children: Vec<BorelCode>) -> Self {
        Self::tree(Label::Union, children)
    }

    pub fn intersection(children: Vec<BorelCode>) -> Self {
        Self::tree(Label::Intersection, children)
    }

    /// An explicit node. Panics if a leaf label is given children.
    pub fn tree(label: Label, children: Vec<BorelCode>) -> Self {
        assert!(
            !label.is_leaf() || children.is_empty(),
            "leaf nodes have no children"
        );
        BorelCode(Arc::new(Node::Tree {
            label,
            rank: None,
            children,
        }))
    }

    /// A node whose children are produced on demand by `generator` and cached.
    pub fn lazy(
        label: Label,
        count: ChildCount,
        generator: impl Fn(usize) -> BorelCode + Send + Sync + 'static,
    ) -> Self {
        Self::lazy_from(label, count, LazySource::Generator(Arc::new(generator)))
    }

    /// A node with infinitely many children cycling through `items`.
    pub fn lazy_cycle(label: Label, items: Vec<BorelCode>) -> Self {
        assert!(!items.is_empty(), "a cycle needs at least one child");
        Self::lazy_from(label, ChildCount::Infinite, LazySource::Cycle(items))
    }

    fn lazy_from(label: Label, count: ChildCount, source: LazySource) -> Self {
        assert!(!label.is_leaf(), "leaf nodes have no children");
        BorelCode(Arc::new(Node::Lazy {
            label,
            rank: None,
            lazy: LazyChildren {
                source,
                count,
                cache: Mutex::new(HashMap::new()),
                forced: AtomicUsize::new(0),
            },
        }))
    }

    /// The code presented by node `id` of `graph`.
    pub fn from_graph(graph: Arc<CodeGraph>, id: usize) -> Result<Self, CodeError> {
        if id >= graph.len() {
            return Err(CodeError::DanglingGraphRef(id));
        }
        Ok(BorelCode(Arc::new(Node::Graph { graph, id })))
    }

    /// The same node with its rank annotation replaced.
    ///
    /// Graph-presented nodes carry their rank in the node table and are
    /// returned unchanged.
    pub fn ranked(self, rank: Ordinal) -> Self {
        let rank = Some(rank);
        match &*self.0 {
            Node::Tree {
                label, children, ..
            } => BorelCode(Arc::new(Node::Tree {
                label: label.clone(),
                rank,
                children: children.clone(),
            })),
            Node::Lazy { label, lazy, .. } => BorelCode(Arc::new(Node::Lazy {
                label: label.clone(),
                rank,
                lazy: LazyChildren {
                    source: lazy.source.clone(),
                    count: lazy.count,
                    cache: Mutex::new(lazy.cache.lock().expect("cache").clone()),
                    forced: AtomicUsize::new(lazy.forced.load(AtomicOrdering::SeqCst)),
                },
            })),
            Node::Graph { .. } => self,
        }
    }

    pub fn label(&self) -> &Label {
        match &*self.0 {
            Node::Tree { label, .. } | Node::Lazy { label, .. } => label,
            Node::Graph { graph, id } => &graph.nodes[*id].label,
        }
    }

    pub fn rank(&self) -> Option<&Ordinal> {
        match &*self.0 {
            Node::Tree { rank, .. } | Node::Lazy { rank, .. } => rank.as_ref(),
            Node::Graph { graph, id } => graph.nodes[*id].rank.as_ref(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.label().is_leaf()
    }

    pub fn presentation(&self) -> Presentation {
        match &*self.0 {
            Node::Tree { .. } => Presentation::Explicit,
            Node::Lazy { .. } => Presentation::Lazy,
            Node::Graph { .. } => Presentation::Graph,
        }
    }

    pub fn child_count(&self) -> ChildCount {
        match &*self.0 {
            Node::Tree { children, .. } => ChildCount::Finite(children.len()),
            Node::Lazy { lazy, .. } => lazy.count,
            Node::Graph { graph, id } => ChildCount::Finite(graph.nodes[*id].children.len()),
        }
    }

    /// The number of children, or `None` for an infinite generator.
    pub fn finite_child_count(&self) -> Option<usize> {
        match self.child_count() {
            ChildCount::Finite(n) => Some(n),
            ChildCount::Infinite => None,
        }
    }

    /// The `n`-th child (`T_n`). Forces at most one lazy child.
    pub fn child(&self, n: usize) -> Result<BorelCode, CodeError> {
        if self.is_leaf() {
            return Err(CodeError::LeafHasNoChildren);
        }
        if let ChildCount::Finite(count) = self.child_count() {
            if n >= count {
                return Err(CodeError::NoSuchChild { index: n, count });
            }
        }
        Ok(match &*self.0 {
            Node::Tree { children, .. } => children[n].clone(),
            Node::Lazy { lazy, .. } => lazy.force(n),
            Node::Graph { graph, id } => BorelCode(Arc::new(Node::Graph {
                graph: graph.clone(),
                id: graph.nodes[*id].children[n],
            })),
        })
    }

    /// All children of a node with finitely many, forcing lazy ones.
    pub fn children(&self) -> Result<Vec<BorelCode>, CodeError> {
        if self.is_leaf() {
            return Ok(Vec::new());
        }
        let n = self.finite_child_count().ok_or(CodeError::Unbounded)?;
        (0..n).map(|i| self.child(i)).collect()
    }

    /// How many children a lazy node has generated so far.
    pub fn forced_children(&self) -> Option<usize> {
        match &*self.0 {
            Node::Lazy { lazy, .. } => Some(lazy.forced.load(AtomicOrdering::SeqCst)),
            _ => None,
        }
    }

    /// The graph and node id behind a graph-presented node.
    pub fn graph_ref(&self) -> Option<(&Arc<CodeGraph>, usize)> {
        match &*self.0 {
            Node::Graph { graph, id } => Some((graph, *id)),
            _ => None,
        }
    }

    pub(crate) fn lazy_source(&self) -> Option<&LazySource> {
        match &*self.0 {
            Node::Lazy { lazy, .. } => Some(&lazy.source),
            _ => None,
        }
    }

    /// The subcode at `addr`.
    pub fn at(&self, addr: &Address) -> Result<BorelCode, CodeError> {
        let mut node = self.clone();
        for &n in &addr.0 {
            node = node
                .child(n)
                .map_err(|_| CodeError::BadAddress(addr.clone()))?;
        }
        Ok(node)
    }

    /// Checks that the whole tree can be materialized: no infinite generators
    /// and no reachable cycles in graph presentations.
    pub fn ensure_expandable(&self) -> Result<(), CodeError> {
        match &*self.0 {
            Node::Graph { graph, id } => {
                if graph.has_cycle_from(*id) {
                    Err(CodeError::Unbounded)
                } else {
                    Ok(())
                }
            }
            _ if self.is_leaf() => Ok(()),
            _ => {
                for c in self.children()? {
                    c.ensure_expandable()?;
                }
                Ok(())
            }
        }
    }

    /// All addresses of an expandable code, in preorder.
    pub fn addresses(&self) -> Result<Vec<Address>, CodeError> {
        self.ensure_expandable()?;
        let mut out = Vec::new();
        fn walk(t: &BorelCode, addr: Address, out: &mut Vec<Address>) {
            let kids = t.children().expect("expandable");
            out.push(addr.clone());
            for (i, c) in kids.iter().enumerate() {
                walk(c, addr.child(i), out);
            }
        }
        walk(self, Address::root(), &mut out);
        Ok(out)
    }

    pub fn node_count(&self) -> Result<usize, CodeError> {
        Ok(self.addresses()?.len())
    }

    /// Height of an expandable code; a leaf has height 0.
    pub fn height(&self) -> Result<usize, CodeError> {
        self.ensure_expandable()?;
        fn h(t: &BorelCode) -> usize {
            t.children()
                .expect("expandable")
                .iter()
                .map(|c| 1 + h(c))
                .max()
                .unwrap_or(0)
        }
        Ok(h(self))
    }

    /// The code for the complement: same shape and ranks, union and
    /// intersection swapped, leaves complemented.
    pub fn negate(&self) -> BorelCode {
        match &*self.0 {
            Node::Tree {
                label,
                rank,
                children,
            } => BorelCode(Arc::new(Node::Tree {
                label: label.dual(),
                rank: rank.clone(),
                children: children.iter().map(BorelCode::negate).collect(),
            })),
            Node::Lazy { label, rank, lazy } => {
                let source = match &lazy.source {
                    LazySource::Cycle(items) => {
                        LazySource::Cycle(items.iter().map(BorelCode::negate).collect())
                    }
                    LazySource::Generator(_) => {
                        let original = self.clone();
                        LazySource::Generator(Arc::new(move |n| {
                            original.child(n).expect("generator child").negate()
                        }))
                    }
                };
                let out = Self::lazy_from(label.dual(), lazy.count, source);
                match rank {
                    Some(r) => out.ranked(r.clone()),
                    None => out,
                }
            }
            Node::Graph { graph, id } => BorelCode(Arc::new(Node::Graph {
                graph: Arc::new(graph.negate()),
                id: *id,
            })),
        }
    }

    /// Checks the rank annotations: the root's rank is at most `bound` and
    /// every annotated child sits strictly below its annotated parent.
    /// Unannotated nodes impose no constraint.
    pub fn check_ranked(&self, bound: &Ordinal) -> Result<RankCheck, CodeError> {
        self.ensure_expandable()?;
        if self.rank().is_some_and(|r| r > bound) {
            return Ok(RankCheck::Violation(Address::root()));
        }
        fn walk(t: &BorelCode, addr: &Address) -> Option<Address> {
            let kids = t.children().expect("expandable");
            for (i, c) in kids.iter().enumerate() {
                let ca = addr.child(i);
                if let (Some(r), Some(rc)) = (t.rank(), c.rank()) {
                    if rc >= r {
                        return Some(ca);
                    }
                }
                if let Some(bad) = walk(c, &ca) {
                    return Some(bad);
                }
            }
            None
        }
        Ok(match walk(self, &Address::root()) {
            Some(a) => RankCheck::Violation(a),
            None => RankCheck::Ranked,
        })
    }

    /// Whether every node carries a rank annotation.
    pub fn fully_annotated(&self) -> Result<bool, CodeError> {
        self.ensure_expandable()?;
        fn walk(t: &BorelCode) -> bool {
            t.rank().is_some() && t.children().expect("expandable").iter().all(walk)
        }
        Ok(walk(self))
    }

    /// A copy with the least rank function: leaves get 0 and interior nodes
    /// one more than the largest child rank. The result is explicit.
    pub fn with_canonical_ranks(&self) -> Result<BorelCode, CodeError> {
        self.ensure_expandable()?;
        fn walk(t: &BorelCode) -> BorelCode {
            let kids: Vec<BorelCode> = t
                .children()
                .expect("expandable")
                .iter()
                .map(walk)
                .collect();
            let rank = kids
                .iter()
                .map(|c| c.rank().expect("annotated").successor())
                .max()
                .unwrap_or_else(Ordinal::zero);
            BorelCode::tree(t.label().clone(), kids).ranked(rank)
        }
        Ok(walk(self))
    }

    /// Materializes an expandable code as explicit nodes.
    pub fn to_explicit(&self) -> Result<BorelCode, CodeError> {
        self.ensure_expandable()?;
        fn walk(t: &BorelCode) -> BorelCode {
            let kids = t
                .children()
                .expect("expandable")
                .iter()
                .map(walk)
                .collect();
            let out = BorelCode::tree(t.label().clone(), kids);
            match t.rank() {
                Some(r) => out.ranked(r.clone()),
                None => out,
            }
        }
        Ok(walk(self))
    }

    pub fn ptr_eq(&self, other: &BorelCode) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl PartialEq for BorelCode {
    /// Structural equality of explicit trees. Lazy nodes compare by identity,
    /// graph nodes by table identity and node id.
    fn eq(&self, other: &Self) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        match (&*self.0, &*other.0) {
            (
                Node::Tree {
                    label: l1,
                    rank: r1,
                    children: c1,
                },
                Node::Tree {
                    label: l2,
                    rank: r2,
                    children: c2,
                },
            ) => l1 == l2 && r1 == r2 && c1 == c2,
            (Node::Graph { graph: g1, id: i1 }, Node::Graph { graph: g2, id: i2 }) => {
                Arc::ptr_eq(g1, g2) && i1 == i2
            }
            _ => false,
        }
    }
}

impl fmt::Debug for BorelCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match crate::syntax::print_code(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "<{:?} code>", self.presentation()),
        }
    }
}
