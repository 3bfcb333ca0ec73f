//! Stage bookkeeping standing in for jump degrees, and the constructions
//! that only look at an object's stage: the well-order, the hat strategy,
//! the adversarial gadgets, and stage-anchored 2-coloring.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::codes::Point;
use crate::graphs::{two_color, EdgeColoring, FinGraph, GraphError, TwoColoring};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StageError {
    #[error("{0} is not registered")]
    Unregistered(String),
    #[error("{0} is already registered")]
    AlreadyRegistered(String),
    #[error("stage {stage}, index {index} already belongs to {owner}")]
    Collision {
        stage: u64,
        index: u64,
        owner: String,
    },
    #[error("expected {expected} color pairs, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("color pair ({0}, {1}) must be two distinct colors from 0..=k")]
    InvalidColorPair(usize, usize),
    #[error("k must be at least 3")]
    KTooSmall,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Assigns each object a pair `(stage, index)`; pairs are unique and never
/// reassigned.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageRegistry {
    entries: BTreeMap<String, (u64, u64)>,
    owners: BTreeMap<(u64, u64), String>,
    stage: u64,
    next_index: u64,
}

impl StageRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, id: &str, stage: u64, index: u64) -> Result<(), StageError> {
        if self.entries.contains_key(id) {
            return Err(StageError::AlreadyRegistered(id.to_string()));
        }
        if let Some(owner) = self.owners.get(&(stage, index)) {
            return Err(StageError::Collision {
                stage,
                index,
                owner: owner.clone(),
            });
        }
        self.entries.insert(id.to_string(), (stage, index));
        self.owners.insert((stage, index), id.to_string());
        self.stage = self.stage.max(stage);
        Ok(())
    }

    /// Registers at the current stage with the next free index.
    pub fn register_next(&mut self, id: &str) -> Result<(u64, u64), StageError> {
        while self.owners.contains_key(&(self.stage, self.next_index)) {
            self.next_index += 1;
        }
        let o = (self.stage, self.next_index);
        self.register(id, o.0, o.1)?;
        Ok(o)
    }

    pub fn advance_stage(&mut self) -> u64 {
        self.stage += 1;
        self.next_index = 0;
        self.stage
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn get(&self, id: &str) -> Option<(u64, u64)> {
        self.entries.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

pub fn wellorder_compare(r: &StageRegistry, x: &str, y: &str) -> Result<Ordering, StageError> {
    let o = |id: &str| r.get(id).ok_or_else(|| StageError::Unregistered(id.to_string()));
    Ok(o(x)?.cmp(&o(y)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HatOutcome {
    pub guesses: Vec<bool>,
    pub errors: Vec<usize>,
}

/// The purely periodic point every prisoner agrees on, rebuilt from what
/// prisoner `i` knows: the guesses heard so far, a placeholder for its own
/// hat, and the hats it sees.
fn reference(heard: &[bool], seen: &Point) -> Point {
    let mut prefix = heard.to_vec();
    prefix.push(false);
    prefix.extend_from_slice(seen.prefix());
    Point::new(prefix, seen.period().to_vec())
        .expect("period is nonempty")
        .periodic_representative()
}

/// Positions `j >= 1`, other than `skip`, where `hats` and `r` differ. Both
/// agree from the end of the prefix on, so the count is finite.
fn mismatch_parity(hats_from: impl Fn(usize) -> bool, r: &Point, end: usize, skip: usize) -> bool {
    (1..end)
        .filter(|&j| j != skip && hats_from(j) != r.bit(j))
        .count()
        % 2
        == 1
}

/// Plays the hat game for the first `n_prisoners` prisoners. Prisoner 0
/// announces the parity of mismatches against the shared reference point;
/// everyone after deduces their own hat from it.
pub fn hat_strategy(hats: &Point, n_prisoners: usize) -> HatOutcome {
    // beyond this position hats and the reference agree
    let end = hats.prefix().len() + hats.period().len() + 1;
    let mut guesses: Vec<bool> = Vec::with_capacity(n_prisoners);
    for i in 0..n_prisoners {
        let seen = hats.shift(i + 1);
        let r = reference(&guesses, &seen);
        let horizon = end.max(i + 1);
        let guess = if i == 0 {
            mismatch_parity(|j| hats.bit(j), &r, horizon, usize::MAX)
        } else {
            // hats before i are known from the (correct) guesses heard
            let known = |j: usize| if j < i { guesses[j] } else { hats.bit(j) };
            let others = mismatch_parity(known, &r, horizon, i);
            let mine_differs = others != guesses[0];
            r.bit(i) ^ mine_differs
        };
        guesses.push(guess);
    }
    let errors = (0..n_prisoners).filter(|&i| guesses[i] != hats.bit(i)).collect();
    HatOutcome { guesses, errors }
}

fn all_two_colorings_extending(g: &FinGraph, fixed: &[(usize, u8)]) -> usize {
    let n = g.vertex_count();
    (0..1u64 << n)
        .filter(|mask| {
            let c = |v: usize| ((mask >> v) & 1) as u8;
            fixed.iter().all(|&(v, col)| c(v) == col) && g.edges().all(|(u, v)| c(u) != c(v))
        })
        .count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WoGadget {
    /// Vertices 0 and 1 are the challenged endpoints.
    pub fragment: FinGraph,
    pub path_length: usize,
    /// Whether some proper 2-coloring of the fragment gives the endpoints
    /// the challenged colors.
    pub extendable: bool,
}

/// Joins two colored endpoints by a path whose parity contradicts their
/// colors: length 3 for equal colors, length 2 for different ones.
pub fn wo_gadget(colors: (u8, u8), endpoints: (&str, &str)) -> WoGadget {
    let mut g = FinGraph::new();
    let a = g.add_vertex(endpoints.0);
    let b = g.add_vertex(endpoints.1);
    let path_length = if colors.0 == colors.1 { 3 } else { 2 };
    let mut prev = a;
    for i in 0..path_length - 1 {
        let mut name = format!("w{i}");
        while g.lookup(&name).is_some() {
            name.insert(0, '~');
        }
        let w = g.add_vertex(&name);
        g.add_edge(prev, w).expect("fresh vertex");
        prev = w;
    }
    g.add_edge(prev, b).expect("fresh vertex");
    let extendable = all_two_colorings_extending(&g, &[(a, colors.0), (b, colors.1)]) > 0;
    WoGadget {
        fragment: g,
        path_length,
        extendable,
    }
}

/// `C(k+1, 2) * (k - 1) + 1`, enough paths that some color pair repeats k
/// times.
pub fn edge1_path_count(k: usize) -> usize {
    (k + 1) * k / 2 * (k - 1) + 1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge1Gadget {
    pub n: usize,
    /// The color pair shared by the chosen paths.
    pub category: (usize, usize),
    /// Indices of the k chosen paths.
    pub chosen: Vec<usize>,
    /// Path i is `v{i} - c{i} - w{i}`; the last vertex is the fresh hub.
    pub fragment: FinGraph,
    pub hub: usize,
    pub fixed_colors: EdgeColoring,
    /// Whether some proper (k+1)-edge-coloring extends the fixed colors.
    pub extendable: bool,
}

/// Takes N two-edge paths colored by the opponent, finds k whose color
/// pairs agree, and joins their centers to a fresh hub.
pub fn edge1_gadget(k: usize, path_colors: &[(usize, usize)]) -> Result<Edge1Gadget, StageError> {
    if k < 3 {
        return Err(StageError::KTooSmall);
    }
    let n = edge1_path_count(k);
    if path_colors.len() != n {
        return Err(StageError::WrongLength {
            expected: n,
            got: path_colors.len(),
        });
    }
    for &(a, b) in path_colors {
        if a == b || a > k || b > k {
            return Err(StageError::InvalidColorPair(a, b));
        }
    }
    let mut g = FinGraph::new();
    let mut fixed = EdgeColoring::new();
    let mut centers = Vec::with_capacity(n);
    let mut by_category: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, &(a, b)) in path_colors.iter().enumerate() {
        let v = g.add_vertex(&format!("v{i}"));
        let c = g.add_vertex(&format!("c{i}"));
        let w = g.add_vertex(&format!("w{i}"));
        g.add_edge(v, c).expect("fresh");
        g.add_edge(c, w).expect("fresh");
        fixed.insert((v, c), a);
        fixed.insert((c, w), b);
        centers.push(c);
        by_category.entry((a.min(b), a.max(b))).or_default().push(i);
    }
    let (category, members) = by_category
        .into_iter()
        .find(|(_, m)| m.len() >= k)
        .expect("pigeonhole: N paths over C(k+1,2) categories");
    let chosen: Vec<usize> = members.into_iter().take(k).collect();
    let hub = g.add_vertex("x");
    for &i in &chosen {
        g.add_edge(centers[i], hub).expect("fresh hub");
    }
    let extendable = hub_colorings(k, category, chosen.len()) > 0;
    Ok(Edge1Gadget {
        n,
        category,
        chosen,
        fragment: g,
        hub,
        fixed_colors: fixed,
        extendable,
    })
}

/// Counts colorings of the hub's edges from `0..=k` that are distinct at
/// the hub and avoid both fixed colors at each center.
fn hub_colorings(k: usize, category: (usize, usize), edges: usize) -> usize {
    let colors = k + 1;
    let total = colors.pow(edges as u32);
    (0..total)
        .filter(|&code| {
            let mut used = BTreeSet::new();
            let mut c = code;
            (0..edges).all(|_| {
                let col = c % colors;
                c /= colors;
                col != category.0 && col != category.1 && used.insert(col)
            })
        })
        .count()
}

/// Colors each component by distance parity from its vertex of least
/// stage. Vertex names are registry ids.
pub fn stage_two_coloring(g: &FinGraph, r: &StageRegistry) -> Result<Vec<u8>, StageError> {
    if let TwoColoring::OddCycle(c) = two_color(g) {
        return Err(GraphError::NotBipartite(c).into());
    }
    let n = g.vertex_count();
    let o: Vec<(u64, u64)> = (0..n)
        .map(|v| r.get(g.name(v)).ok_or_else(|| StageError::Unregistered(g.name(v).to_string())))
        .collect::<Result<_, _>>()?;
    let adj = g.adjacency();
    let mut color: Vec<Option<u8>> = vec![None; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| o[v]);
    for anchor in order {
        if color[anchor].is_some() {
            continue;
        }
        color[anchor] = Some(0);
        let mut queue = VecDeque::from([anchor]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if color[v].is_none() {
                    color[v] = Some(1 - color[u].expect("colored"));
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(color.into_iter().map(|c| c.expect("all visited")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(s: &str) -> Point {
        s.parse().unwrap()
    }

    #[test]
    fn registry_order() {
        let mut r = StageRegistry::new();
        r.register("x", 0, 3).unwrap();
        r.register("y", 1, 0).unwrap();
        assert_eq!(wellorder_compare(&r, "x", "y"), Ok(Ordering::Less));
        assert_eq!(wellorder_compare(&r, "x", "x"), Ok(Ordering::Equal));
        assert_eq!(wellorder_compare(&r, "y", "x"), Ok(Ordering::Greater));
        assert!(matches!(
            wellorder_compare(&r, "x", "z"),
            Err(StageError::Unregistered(_))
        ));
        assert!(matches!(r.register("z", 1, 0), Err(StageError::Collision { .. })));
        assert!(matches!(r.register("x", 5, 5), Err(StageError::AlreadyRegistered(_))));
        assert_eq!(r.register_next("z").unwrap(), (1, 1));
        r.advance_stage();
        assert_eq!(r.register_next("w").unwrap(), (2, 0));
    }

    #[test]
    fn hats_examples() {
        assert!(hat_strategy(&pt(";0"), 20).errors.is_empty());
        let one = hat_strategy(&pt("1;0"), 20);
        assert!(one.errors.iter().all(|&i| i == 0));
        for s in ["010;1", "1101;01", ";10", "0;011"] {
            let out = hat_strategy(&pt(s), 25);
            assert!(out.errors.len() <= 1, "{s}: {out:?}");
            assert!(out.errors.iter().all(|&i| i == 0), "{s}: {out:?}");
        }
    }

    #[test]
    fn wo_gadgets_defeat_the_challenge() {
        let same = wo_gadget((0, 0), ("x", "y"));
        assert_eq!(same.path_length, 3);
        assert_eq!(same.fragment.edge_count(), 3);
        assert!(!same.extendable);
        let diff = wo_gadget((0, 1), ("x", "y"));
        assert_eq!(diff.path_length, 2);
        assert!(!diff.extendable);
        assert_eq!(diff.fragment.max_degree(), 2);
    }

    #[test]
    fn edge1_counts() {
        assert_eq!(edge1_path_count(3), 13);
        let g = edge1_gadget(3, &[(0, 1); 13]).unwrap();
        assert_eq!(g.category, (0, 1));
        assert_eq!(g.fragment.degree(g.hub), 3);
        assert!(!g.extendable);
        assert_eq!(
            edge1_gadget(3, &[(0, 1); 12]),
            Err(StageError::WrongLength {
                expected: 13,
                got: 12
            })
        );
        let mut bad = vec![(0, 1); 13];
        bad[4] = (2, 2);
        assert_eq!(edge1_gadget(3, &bad), Err(StageError::InvalidColorPair(2, 2)));
        bad[4] = (0, 4);
        assert_eq!(edge1_gadget(3, &bad), Err(StageError::InvalidColorPair(0, 4)));
    }

    #[test]
    fn stage_anchors() {
        let mut g = FinGraph::new();
        for name in ["a", "b", "c"] {
            g.add_vertex(name);
        }
        g.add_edge(0, 1).unwrap();
        g.add_edge(1, 2).unwrap();
        let mut r = StageRegistry::new();
        r.register("a", 0, 0).unwrap();
        r.register("b", 0, 1).unwrap();
        r.register("c", 0, 2).unwrap();
        assert_eq!(stage_two_coloring(&g, &r).unwrap(), vec![0, 1, 0]);
        let mut r2 = StageRegistry::new();
        r2.register("a", 1, 0).unwrap();
        r2.register("b", 2, 0).unwrap();
        r2.register("c", 0, 0).unwrap();
        assert_eq!(stage_two_coloring(&g, &r2).unwrap(), vec![0, 1, 0]);
        // anchoring at b swaps the colors
        let mut r3 = StageRegistry::new();
        r3.register("a", 1, 0).unwrap();
        r3.register("b", 0, 0).unwrap();
        r3.register("c", 2, 0).unwrap();
        assert_eq!(stage_two_coloring(&g, &r3).unwrap(), vec![1, 0, 1]);
    }
}
