//! Exhaustive small-code corpus used by the property suites and the CLI.

use crate::codes::{BorelCode, ClopenCode, Label, Point};

/// The four 1-bit clopen leaves: empty, full, `[0]`, `[1]`.
pub fn one_bit_leaves() -> Vec<ClopenCode> {
    vec![
        ClopenCode::empty(),
        ClopenCode::full(),
        ClopenCode::cylinder(vec![false]),
        ClopenCode::cylinder(vec![true]),
    ]
}

/// Every explicit code with at most `levels` levels of nodes (a lone leaf
/// is one level), 1 to `branching` ordered children per interior node, and
/// 1-bit leaves. Ranks are canonical.
pub fn small_codes(levels: usize, branching: usize) -> Vec<BorelCode> {
    let leaves: Vec<BorelCode> = one_bit_leaves().into_iter().map(BorelCode::leaf).collect();
    let mut all = if levels == 0 { Vec::new() } else { leaves.clone() };
    for _ in 1..levels {
        let below = all.clone();
        let mut next = leaves.clone();
        for label in [Label::Union, Label::Intersection] {
            for k in 1..=branching {
                for kids in tuples(&below, k) {
                    next.push(BorelCode::tree(label.clone(), kids));
                }
            }
        }
        all = next;
    }
    all.into_iter()
        .map(|t| t.with_canonical_ranks().expect("explicit"))
        .collect()
}

fn tuples(items: &[BorelCode], k: usize) -> Vec<Vec<BorelCode>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                items.iter().map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c.clone());
                    v
                })
            })
            .collect();
    }
    out
}

/// The default corpus: 3 levels, branching 2.
pub fn default_codes() -> Vec<BorelCode> {
    small_codes(3, 2)
}

/// Points whose prefix and period use at most 2 bits.
pub fn default_points() -> Vec<Point> {
    Point::enumerate(2)
}
