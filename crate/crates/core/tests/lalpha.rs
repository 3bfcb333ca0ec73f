use std::collections::{BTreeSet, HashMap};

use borel_core::codes::Point;
use borel_core::lalpha::{
    build_hierarchy, code_of_definable, def_step, eval_formula, layered_difference, parse_formula,
    FinStructure, Formula, LalphaError, DEFAULT_CAP,
};
use proptest::prelude::*;

fn levels(n: usize) -> Vec<FinStructure> {
    build_hierarchy(n, DEFAULT_CAP).unwrap()
}

#[test]
fn def_step_is_extensional_and_grows_by_initial_segments() {
    let h = levels(4);
    for w in h.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        assert!(a.is_initial_segment_of(b));
        assert_eq!(&def_step(a), b);
        let sets: BTreeSet<_> = (0..b.len()).map(|e| b.members(e).clone()).collect();
        assert_eq!(sets.len(), b.len());
        // rebuilding through the validating constructor rejects cycles and duplicates
        let pairs: Vec<(usize, usize)> = (0..b.len())
            .flat_map(|e| b.members(e).iter().map(move |&m| (m, e)))
            .collect();
        let names = (0..b.len()).map(|e| b.name(e).to_string()).collect();
        assert!(FinStructure::new(names, &pairs).is_ok());
    }
    assert_eq!(h.iter().map(FinStructure::len).collect::<Vec<_>>(), [0, 1, 2, 4, 16]);
    assert!(matches!(build_hierarchy(5, DEFAULT_CAP), Err(LalphaError::TooLarge { .. })));
}

#[test]
fn layered_codes_partition_the_represented_reals() {
    let top = levels(4).pop().unwrap();
    let h = top.numbering();
    assert_eq!(h.len(), 4);
    let phis: Vec<Formula> = ["!exists y. in(y,x)", "exists y. in(y,x)", "forall y. !in(y,x) | exists z. in(z,y)", "true"]
        .iter()
        .map(|s| parse_formula(s).unwrap())
        .collect();
    let codes: Vec<_> = phis
        .iter()
        .map(|phi| code_of_definable(&top, phi, "x", &HashMap::new(), &h, h.len()).unwrap())
        .collect();
    let layers = layered_difference(&codes);
    for bits in 0u32..1 << h.len() {
        let prefix: Vec<bool> = (0..h.len()).map(|n| bits >> n & 1 == 1).collect();
        let x = Point::finite_support(&prefix);
        let represented_by = |e: usize| (0..h.len()).all(|n| prefix[n] == top.contains(h[n], e));
        let satisfies = |phi: &Formula, e: usize| {
            eval_formula(&top, phi, &HashMap::from([("x".to_string(), e)])).unwrap()
        };
        let in_some = (0..top.len()).any(|e| represented_by(e) && phis.iter().any(|p| satisfies(p, e)));
        let hits = layers
            .iter()
            .filter(|c| borel_core::eval::evaluate(c, &x, 0).verdict.as_bool() == Some(true))
            .count();
        assert!(hits <= 1, "{x} lies in {hits} layers");
        assert_eq!(hits == 1, in_some, "{x}");
    }
}

fn rename(phi: &Formula, from: &str, to: &str) -> Formula {
    let r = |v: &String| if v == from { to.to_string() } else { v.clone() };
    let b = |f: &Formula| Box::new(rename(f, from, to));
    match phi {
        Formula::True | Formula::False => phi.clone(),
        Formula::In(a, c) => Formula::In(r(a), r(c)),
        Formula::Eq(a, c) => Formula::Eq(r(a), r(c)),
        Formula::Not(f) => Formula::Not(b(f)),
        Formula::And(f, g) => Formula::And(b(f), b(g)),
        Formula::Or(f, g) => Formula::Or(b(f), b(g)),
        Formula::Exists(v, f) => Formula::Exists(r(v), b(f)),
        Formula::Forall(v, f) => Formula::Forall(r(v), b(f)),
    }
}

/// Formulas with free variables among x, z and bound variable `b`.
fn formula() -> impl Strategy<Value = Formula> {
    let var = prop_oneof![Just("x"), Just("z"), Just("b")].prop_map(String::from);
    let atom = prop_oneof![
        Just(Formula::True),
        (var.clone(), var.clone()).prop_map(|(a, b)| Formula::In(a, b)),
        (var.clone(), var).prop_map(|(a, b)| Formula::Eq(a, b)),
    ];
    atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| Formula::And(Box::new(f), Box::new(g))),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| Formula::Or(Box::new(f), Box::new(g))),
            inner.clone().prop_map(|f| Formula::Exists("b".into(), Box::new(f))),
            inner.prop_map(|f| Formula::Forall("b".into(), Box::new(f))),
        ]
    })
}

proptest! {
    #[test]
    fn bound_variables_can_be_renamed(phi in formula(), x in 0usize..4, z in 0usize..4) {
        let phi = Formula::Exists("b".into(), Box::new(phi));
        let renamed = rename(&phi, "b", "fresh");
        let s = &levels(3)[3];
        let env = HashMap::from([("x".to_string(), x), ("z".to_string(), z)]);
        prop_assert_eq!(eval_formula(s, &phi, &env).unwrap(), eval_formula(s, &renamed, &env).unwrap());
    }

    #[test]
    fn formula_text_round_trips(phi in formula()) {
        prop_assert_eq!(phi.to_string().parse::<Formula>().unwrap(), phi);
    }
}
