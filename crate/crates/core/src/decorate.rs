//! The decoration combinator and the evaluation-map extension that comes
//! with it.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::codes::{Address, BorelCode, ClopenCode, CodeError, Label, Point, RankCheck};
use crate::eval::{check_evaluation_map, is_total, Witness};
use crate::ordinals::Ordinal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecorateError {
    #[error("code is missing rank annotations")]
    UnrankedInput,
    #[error("rank violation at {0}")]
    RankViolation(Address),
    #[error("base tree needs a positive rank")]
    ZeroRank,
    #[error("no node at {0}")]
    BadAddress(Address),
    #[error("partial map is not a valid evaluation map up to the given rank (at {0})")]
    InvalidPartialMap(Address),
    #[error("extended map fails the evaluation-map clauses at {0}")]
    HypothesisViolation(Address),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrontierMode {
    /// Passes through intersections, stops at unions and leaves.
    IntersectionFrontier,
    /// Passes through unions, stops at intersections and leaves.
    UnionFrontier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Positive,
    Negative,
}

fn require_ranked(t: &BorelCode, bound: &Ordinal) -> Result<(), DecorateError> {
    if !t.fully_annotated()? {
        return Err(DecorateError::UnrankedInput);
    }
    match t.check_ranked(bound)? {
        RankCheck::Ranked => Ok(()),
        RankCheck::Violation(a) => Err(DecorateError::RankViolation(a)),
    }
}

fn rank_of(t: &BorelCode) -> Result<&Ordinal, DecorateError> {
    t.rank().ok_or(DecorateError::UnrankedInput)
}

#[derive(Debug, Clone)]
pub struct DecorationFamily {
    positives: Vec<BorelCode>,
    negatives: Vec<BorelCode>,
    bound: Ordinal,
}

impl DecorationFamily {
    pub fn new(
        positives: Vec<BorelCode>,
        negatives: Vec<BorelCode>,
        bound: Ordinal,
    ) -> Result<Self, DecorateError> {
        for q in positives.iter().chain(&negatives) {
            require_ranked(q, &bound)?;
        }
        Ok(DecorationFamily {
            positives,
            negatives,
            bound,
        })
    }

    pub fn positives(&self) -> &[BorelCode] {
        &self.positives
    }

    pub fn negatives(&self) -> &[BorelCode] {
        &self.negatives
    }

    pub fn bound(&self) -> &Ordinal {
        &self.bound
    }

    /// Puts an intersection root above every positive and raises the bound
    /// by one.
    pub fn normalized(&self) -> Self {
        DecorationFamily {
            positives: self
                .positives
                .iter()
                .map(|p| normalize_root_intersection(p).expect("members are ranked"))
                .collect(),
            negatives: self.negatives.clone(),
            bound: self.bound.successor(),
        }
    }
}

/// Decorates `t`: original children first, then at union nodes every
/// positive of rank below the node, and at intersection nodes the negation
/// of every negative of rank below the node.
pub fn decorate(t: &BorelCode, fam: &DecorationFamily) -> Result<BorelCode, DecorateError> {
    require_ranked(t, &fam.bound)?;
    decorate_rec(t, fam)
}

fn decorate_rec(t: &BorelCode, fam: &DecorationFamily) -> Result<BorelCode, DecorateError> {
    if t.is_leaf() {
        return Ok(t.clone());
    }
    let rho = rank_of(t)?;
    let mut kids = t
        .children()?
        .iter()
        .map(|c| decorate_rec(c, fam))
        .collect::<Result<Vec<_>, _>>()?;
    let extra: Vec<BorelCode> = match t.label() {
        Label::Union => fam
            .positives
            .iter()
            .filter(|p| p.rank().is_some_and(|r| r < rho))
            .cloned()
            .collect(),
        _ => fam
            .negatives
            .iter()
            .filter(|n| n.rank().is_some_and(|r| r < rho))
            .map(BorelCode::negate)
            .collect(),
    };
    for q in &extra {
        kids.push(decorate_rec(q, fam)?);
    }
    Ok(BorelCode::tree(t.label().clone(), kids).ranked(rho.clone()))
}

pub fn normalize_root_intersection(p: &BorelCode) -> Result<BorelCode, DecorateError> {
    let r = rank_of(p)?.successor();
    Ok(BorelCode::intersection(vec![p.clone()]).ranked(r))
}

/// A union of rank `alpha` over a single empty leaf.
pub fn base_tree(alpha: &Ordinal) -> Result<BorelCode, DecorateError> {
    if alpha.is_zero() {
        return Err(DecorateError::ZeroRank);
    }
    let leaf = BorelCode::leaf(ClopenCode::empty()).ranked(Ordinal::zero());
    Ok(BorelCode::union(vec![leaf]).ranked(alpha.clone()))
}

fn stops(label: &Label, mode: FrontierMode) -> bool {
    match (label, mode) {
        (Label::Leaf(_), _) => true,
        (Label::Union, FrontierMode::IntersectionFrontier) => true,
        (Label::Intersection, FrontierMode::UnionFrontier) => true,
        _ => false,
    }
}

/// Minimal proper descendants of `sigma` at which `mode` stops, reached
/// through nodes where it does not.
pub fn frontier(
    t: &BorelCode,
    sigma: &Address,
    mode: FrontierMode,
) -> Result<BTreeSet<Address>, DecorateError> {
    let node = t
        .at(sigma)
        .map_err(|_| DecorateError::BadAddress(sigma.clone()))?;
    node.ensure_expandable()?;
    let mut out = BTreeSet::new();
    let mut stack = vec![(node, sigma.clone())];
    while let Some((n, a)) = stack.pop() {
        for (i, c) in n.children()?.into_iter().enumerate() {
            let ca = a.child(i);
            if stops(c.label(), mode) {
                out.insert(ca);
            } else {
                stack.push((c, ca));
            }
        }
    }
    Ok(out)
}

fn nodes_with_addresses(t: &BorelCode) -> Result<Vec<(Address, BorelCode)>, DecorateError> {
    t.ensure_expandable()?;
    let mut out = Vec::new();
    let mut stack = vec![(Address::root(), t.clone())];
    while let Some((a, n)) = stack.pop() {
        let kids = n.children()?;
        for (i, c) in kids.into_iter().enumerate().rev() {
            stack.push((a.child(i), c));
        }
        out.push((a, n));
    }
    Ok(out)
}

/// Restricts `f` to the nodes of rank at most `gamma`.
pub fn restrict_to_rank(
    t: &BorelCode,
    f: &Witness,
    gamma: &Ordinal,
) -> Result<Witness, DecorateError> {
    let mut out = Witness::new();
    for (a, n) in nodes_with_addresses(t)? {
        if rank_of(&n)? <= gamma {
            if let Some(&v) = f.get(&a) {
                out.insert(a, v);
            }
        }
    }
    Ok(out)
}

/// Extends an evaluation map known on all nodes of rank at most `gamma` to
/// the whole tree. On the positive side unions above `gamma` get 1 and
/// intersections are read off their frontier; the negative side is dual.
/// The result is checked before it is returned.
pub fn extend_evaluation(
    t: &BorelCode,
    x: &Point,
    gamma: &Ordinal,
    side: Side,
    g0: &Witness,
) -> Result<Witness, DecorateError> {
    let nodes = nodes_with_addresses(t)?;
    for (a, n) in &nodes {
        if rank_of(n)? <= gamma && !g0.contains_key(a) {
            return Err(DecorateError::InvalidPartialMap(a.clone()));
        }
    }
    check_evaluation_map(t, x, g0).map_err(DecorateError::InvalidPartialMap)?;

    let (default_label, frontier_label, mode) = match side {
        Side::Positive => (
            Label::Union,
            Label::Intersection,
            FrontierMode::IntersectionFrontier,
        ),
        Side::Negative => (
            Label::Intersection,
            Label::Union,
            FrontierMode::UnionFrontier,
        ),
    };
    // the value forced at high-rank nodes of the default kind
    let forced = side == Side::Positive;

    let mut g = g0.clone();
    for (a, n) in &nodes {
        if g.contains_key(a) {
            continue;
        }
        let v = match n.label() {
            Label::Leaf(c) => c.contains(x),
            l if *l == default_label => forced,
            l if *l == frontier_label => {
                let mut low = Vec::new();
                for tau in frontier(t, a, mode)? {
                    let node = t.at(&tau)?;
                    if let Label::Leaf(c) = node.label() {
                        if rank_of(&node)? > gamma {
                            low.push(c.contains(x));
                            continue;
                        }
                    }
                    if rank_of(&node)? <= gamma {
                        low.push(g0[&tau]);
                    }
                }
                if forced {
                    low.iter().all(|&b| b)
                } else {
                    low.iter().any(|&b| b)
                }
            }
            _ => unreachable!("labels are union, intersection, or leaf"),
        };
        g.insert(a.clone(), v);
    }
    check_evaluation_map(t, x, &g).map_err(DecorateError::HypothesisViolation)?;
    if !is_total(t, &g) {
        return Err(DecorateError::HypothesisViolation(Address::root()));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate, Verdict};
    use crate::syntax::parse_code_file;

    fn code(s: &str) -> BorelCode {
        parse_code_file(s).unwrap()
    }

    fn nat(n: u64) -> Ordinal {
        Ordinal::natural(n)
    }

    fn pt(s: &str) -> Point {
        s.parse().unwrap()
    }

    #[test]
    fn leaves_are_unchanged() {
        let p = code("(inter :rank 1 (leaf :rank 0 {[0]}))");
        let fam = DecorationFamily::new(vec![p], vec![], nat(3)).unwrap();
        let leaf = code("(leaf :rank 0 {[1]})");
        assert_eq!(decorate(&leaf, &fam).unwrap(), leaf);
    }

    #[test]
    fn rank_gate_is_strict() {
        let p = code("(inter :rank 1 (leaf :rank 0 {[0]}))");
        let fam = DecorationFamily::new(vec![p.clone()], vec![], nat(3)).unwrap();
        let t = code("(union :rank 1 (leaf :rank 0 full))");
        assert_eq!(decorate(&t, &fam).unwrap(), t);
        let t2 = code("(union :rank 2 (leaf :rank 0 full))");
        let expected = BorelCode::union(vec![t2.child(0).unwrap(), p]).ranked(nat(2));
        assert_eq!(decorate(&t2, &fam).unwrap(), expected);
    }

    #[test]
    fn negatives_are_negated_at_intersections() {
        let n = code("(union :rank 1 (leaf :rank 0 {[0]}))");
        let fam = DecorationFamily::new(vec![], vec![n], nat(3)).unwrap();
        let t = code("(inter :rank 2 (leaf :rank 0 full))");
        let d = decorate(&t, &fam).unwrap();
        assert_eq!(
            d,
            code("(inter :rank 2 (leaf :rank 0 full) (inter :rank 1 (leaf :rank 0 {[1]})))")
        );
    }

    #[test]
    fn unranked_input_rejected() {
        let fam = DecorationFamily::new(vec![], vec![], nat(3)).unwrap();
        assert_eq!(
            decorate(&code("(union (leaf full))"), &fam),
            Err(DecorateError::UnrankedInput)
        );
        assert!(matches!(
            DecorationFamily::new(vec![code("(leaf :rank 5 full)")], vec![], nat(3)),
            Err(DecorateError::RankViolation(_))
        ));
    }

    #[test]
    fn normalization_adds_a_layer() {
        let p = code("(leaf :rank 0 full)");
        let n1 = normalize_root_intersection(&p).unwrap();
        assert_eq!(n1, code("(inter :rank 1 (leaf :rank 0 full))"));
        let n2 = normalize_root_intersection(&n1).unwrap();
        assert_eq!(n2.rank(), Some(&nat(2)));
        assert_eq!(n2.height().unwrap(), 2);
    }

    #[test]
    fn base_tree_shape() {
        let b = base_tree(&Ordinal::omega()).unwrap();
        assert_eq!(b, code("(union :rank w (leaf :rank 0 empty))"));
        assert_eq!(base_tree(&Ordinal::zero()), Err(DecorateError::ZeroRank));
        for x in Point::enumerate(2) {
            assert_eq!(evaluate(&b, &x, 1).verdict, Verdict::Out);
        }
    }

    #[test]
    fn frontier_skips_through_same_kind() {
        let t = code("(inter (leaf {[0]}) (inter (union (leaf {[1]})) (leaf full)) (union (leaf empty)))");
        let f = frontier(&t, &Address::root(), FrontierMode::IntersectionFrontier).unwrap();
        let expected: BTreeSet<Address> = [vec![0], vec![1, 0], vec![1, 1], vec![2]]
            .into_iter()
            .map(Address)
            .collect();
        assert_eq!(f, expected);
        assert!(matches!(
            frontier(&t, &Address(vec![7]), FrontierMode::UnionFrontier),
            Err(DecorateError::BadAddress(_))
        ));
    }

    #[test]
    fn decorated_base_root_frontier_is_children() {
        let p = code("(leaf :rank 0 {[0]})");
        let fam = DecorationFamily::new(vec![p.clone(), p], vec![], nat(2))
            .unwrap()
            .normalized();
        let d = decorate(&base_tree(fam.bound()).unwrap(), &fam).unwrap();
        assert_eq!(d.finite_child_count(), Some(3));
        let f = frontier(&d, &Address::root(), FrontierMode::UnionFrontier).unwrap();
        let kids: BTreeSet<Address> = (0..3).map(|i| Address(vec![i])).collect();
        assert_eq!(f, kids);
    }

    fn theorem_setup(
        positives: Vec<BorelCode>,
        negatives: Vec<BorelCode>,
    ) -> (BorelCode, DecorationFamily) {
        let fam = DecorationFamily::new(positives, negatives, nat(3))
            .unwrap()
            .normalized();
        let d = decorate(&base_tree(fam.bound()).unwrap(), &fam).unwrap();
        (d, fam)
    }

    #[test]
    fn extension_positive_and_negative() {
        let pos = code("(union :rank 1 (leaf :rank 0 {[0]}))");
        let neg = code("(union :rank 1 (leaf :rank 0 {[1]}))");
        let (d, _) = theorem_setup(vec![pos], vec![neg]);
        for (x, side, gamma) in [
            (pt(";0"), Side::Positive, nat(2)),
            (pt(";1"), Side::Negative, nat(1)),
        ] {
            let full = evaluate(&d, &x, 0);
            let g0 = restrict_to_rank(&d, &full.witness, &gamma).unwrap();
            let g = extend_evaluation(&d, &x, &gamma, side, &g0).unwrap();
            assert_eq!(g, full.witness);
            assert_eq!(g[&Address::root()], side == Side::Positive);
            assert_eq!(extend_evaluation(&d, &x, &gamma, side, &g).unwrap(), g);
        }
    }

    #[test]
    fn extension_rejects_bad_partial_maps() {
        let pos = code("(union :rank 1 (leaf :rank 0 {[0]}))");
        let (d, _) = theorem_setup(vec![pos], vec![]);
        let x = pt(";0");
        assert!(matches!(
            extend_evaluation(&d, &x, &nat(2), Side::Positive, &Witness::new()),
            Err(DecorateError::InvalidPartialMap(_))
        ));
    }

    #[test]
    fn extension_reports_false_hypotheses() {
        // x lies in no positive, yet the positive side is claimed
        let pos = code("(union :rank 1 (leaf :rank 0 {[0]}))");
        let (d, _) = theorem_setup(vec![pos], vec![]);
        let x = pt(";1");
        let full = evaluate(&d, &x, 0);
        let g0 = restrict_to_rank(&d, &full.witness, &nat(2)).unwrap();
        assert!(matches!(
            extend_evaluation(&d, &x, &nat(2), Side::Positive, &g0),
            Err(DecorateError::HypothesisViolation(_))
        ));
    }
}
