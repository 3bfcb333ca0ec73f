mod common;

use std::cmp::Ordering;

use borel_core::codes::Point;
use borel_core::graphs::{is_proper_two_coloring, two_color, FinGraph, TwoColoring};
use borel_core::stagecraft::{
    edge1_gadget, edge1_path_count, hat_strategy, stage_two_coloring, wellorder_compare,
    wo_gadget, StageError, StageRegistry,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{edge_colorable_extending, random_bipartite, two_colorable_extending};

fn is_forest(g: &FinGraph) -> bool {
    // a graph is a forest iff edges = vertices - components
    let n = g.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], v: usize) -> usize {
        if p[v] != v {
            let r = find(p, p[v]);
            p[v] = r;
        }
        p[v]
    }
    g.edges().all(|(u, v)| {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a] = b;
        a != b
    })
}

fn registry(stages: &[(u64, u64)]) -> StageRegistry {
    let mut r = StageRegistry::new();
    for (i, &(s, k)) in stages.iter().enumerate() {
        r.register(&i.to_string(), s, k * 100 + i as u64).unwrap();
    }
    r
}

proptest! {
    #[test]
    fn wellorder_is_total_and_lexicographic(stages in prop::collection::vec((0u64..4, 0u64..4), 1..8)) {
        let r = registry(&stages);
        let n = stages.len();
        for a in 0..n {
            for b in 0..n {
                let ab = wellorder_compare(&r, &a.to_string(), &b.to_string()).unwrap();
                let ba = wellorder_compare(&r, &b.to_string(), &a.to_string()).unwrap();
                prop_assert_eq!(ab, ba.reverse());
                prop_assert_eq!(ab == Ordering::Equal, a == b);
                let oa = r.get(&a.to_string()).unwrap();
                let ob = r.get(&b.to_string()).unwrap();
                prop_assert_eq!(ab, oa.cmp(&ob));
            }
        }
    }

    #[test]
    fn hats_cost_at_most_the_first_prisoner(
        pre in prop::collection::vec(any::<bool>(), 0..12),
        per in prop::collection::vec(any::<bool>(), 1..5),
        n in 1usize..30,
    ) {
        let x = Point::new(pre, per).unwrap();
        let out = hat_strategy(&x, n);
        prop_assert_eq!(out.guesses.len(), n);
        prop_assert!(out.errors.is_empty() || out.errors == [0]);
    }

    #[test]
    fn edge1_gadget_defeats_every_vector(seed in any::<u64>()) {
        use rand::Rng;
        let k = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let colors: Vec<(usize, usize)> = (0..edge1_path_count(k))
            .map(|_| {
                let a = rng.gen_range(0..=k);
                let b = (a + rng.gen_range(1..=k)) % (k + 1);
                (a, b)
            })
            .collect();
        let g = edge1_gadget(k, &colors).unwrap();
        prop_assert_eq!(g.fragment.degree(g.hub), k);
        prop_assert!(is_forest(&g.fragment));
        prop_assert!(g.fragment.max_degree() <= k);
        prop_assert!(!g.extendable);
        prop_assert!(!edge_colorable_extending(&g.fragment, k + 1, &g.fixed_colors));
        let (a, b) = g.category;
        for &i in &g.chosen {
            let (x, y) = colors[i];
            prop_assert_eq!((x.min(y), x.max(y)), (a, b));
        }
    }

    #[test]
    fn stage_colorings_are_proper(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_bipartite(&mut rng, 3, 5);
        let order: Vec<(u64, u64)> = (0..g.vertex_count()).map(|v| ((v as u64 * 7 + seed) % 3, 0)).collect();
        let r = registry(&order);
        let c = stage_two_coloring(&g, &r).unwrap();
        prop_assert!(is_proper_two_coloring(&g, &c));
    }
}

#[test]
fn wo_gadget_cases() {
    for (a, b, len) in [(0, 0, 3), (1, 1, 3), (0, 1, 2), (1, 0, 2)] {
        let g = wo_gadget((a, b), ("a", "b"));
        assert_eq!(g.path_length, len);
        assert!(is_forest(&g.fragment));
        assert!(g.fragment.max_degree() <= 2);
        assert!(!g.extendable);
        assert!(!two_colorable_extending(&g.fragment, &[(0, a), (1, b)]));
        assert!(two_colorable_extending(&g.fragment, &[(0, a)]));
    }
}

#[test]
fn gadget_argument_errors() {
    assert_eq!(edge1_path_count(3), 13);
    assert!(matches!(edge1_gadget(2, &[]), Err(StageError::KTooSmall)));
    assert!(matches!(
        edge1_gadget(3, &[(0, 1)]),
        Err(StageError::WrongLength { expected: 13, got: 1 })
    ));
    assert!(matches!(
        edge1_gadget(3, &[(2, 2); 13]),
        Err(StageError::InvalidColorPair(2, 2))
    ));
}

#[test]
fn odd_cycles_have_no_stage_coloring() {
    let tri = FinGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    assert!(matches!(two_color(&tri), TwoColoring::OddCycle(_)));
    let r = registry(&[(0, 0), (0, 1), (1, 0)]);
    assert!(stage_two_coloring(&tri, &r).is_err());
}
