//! Unit tests for ω-sequents, hypersequents, orders, and the ω-function.

use std::collections::BTreeSet;

use hyperprove::hyperseq::{
    is_bad_extension, is_omega_extension, leq_s, leq_womega, omega_fn, omega_kappa,
    parse_hypersequent, strictly_below, Hypersequent, OmegaSequent, RinHypersequent,
};
use hyperprove::syntax::{parse, SubformulaTable};

fn seq(b: usize, omega: &[usize], x: &[u32]) -> OmegaSequent {
    OmegaSequent {
        b,
        omega: omega.iter().copied().collect(),
        x: x.to_vec(),
    }
}

/// The reference ω-function value, frozen from an independent hand
/// computation: the coordinates of the second argument that strictly grew
/// over the first (here coordinate 2, 0→3... with coordinate 4 moving into
/// the ω-set) are promoted, every ω-coordinate reads 0 in the vector.
#[test]
fn omega_fn_reference_example() {
    let s = seq(2, &[1, 3], &[0, 2, 0, 4]);
    let t = seq(2, &[1, 3, 4], &[0, 3, 0, 0]);
    let r = omega_fn(&s, &t).unwrap();
    assert_eq!(r, seq(2, &[1, 2, 3, 4], &[0, 0, 0, 0]));
    assert_eq!(omega_kappa(&s, &t), [2usize].into_iter().collect::<BTreeSet<_>>());
}

#[test]
fn omega_fn_requires_strictly_below() {
    let s = seq(1, &[], &[2, 0]);
    let t = seq(1, &[], &[1, 0]);
    assert!(omega_fn(&s, &t).is_err());
    // Equal sequents are not strictly below either.
    assert!(omega_fn(&s, &s).is_err());
}

#[test]
fn omega_fn_output_is_disjoint_and_omega_extension() {
    let s = seq(3, &[], &[1, 1, 0]);
    let t = seq(3, &[], &[2, 1, 0]);
    let r = omega_fn(&s, &t).unwrap();
    assert!(r.is_disjoint());
    assert_eq!(r, seq(3, &[1], &[0, 1, 0]));
    assert!(is_omega_extension(&t, &r));
}

#[test]
fn leq_s_is_stoup_sensitive_componentwise() {
    assert!(leq_s(&seq(1, &[], &[0, 1]), &seq(1, &[], &[2, 1])));
    assert!(!leq_s(&seq(1, &[], &[0, 1]), &seq(2, &[], &[2, 1])));
    assert!(!leq_s(&seq(1, &[], &[3, 1]), &seq(1, &[], &[2, 1])));
    // Reflexive.
    let a = seq(1, &[], &[1, 2]);
    assert!(leq_s(&a, &a));
}

#[test]
fn strictly_below_omega_dominance() {
    // ω dominates any finite value on its coordinate.
    let s = seq(1, &[], &[5, 0]);
    let t = seq(1, &[1], &[0, 1]);
    assert!(strictly_below(&s, &t));
    // ...but growth must be strict somewhere outside the ω-set.
    let u = seq(1, &[1], &[0, 0]);
    assert!(!strictly_below(&seq(1, &[], &[5, 0]), &u));
    // ω-sets must be ⊆.
    assert!(!strictly_below(&seq(1, &[2], &[0, 0]), &seq(1, &[1], &[0, 5])));
    // Irreflexive.
    assert!(!strictly_below(&t, &t));
}

#[test]
fn leq_womega_requires_equal_omega_sets() {
    assert!(leq_womega(&seq(1, &[2], &[1, 0]), &seq(1, &[2], &[2, 0])));
    assert!(!leq_womega(&seq(1, &[], &[1, 0]), &seq(1, &[2], &[2, 0])));
}

#[test]
fn add_formula_respects_omega() {
    let s = seq(1, &[2], &[1, 0, 0]);
    // Adding an ω-member is a no-op; adding elsewhere increments.
    assert_eq!(s.add_formula(2).unwrap(), s);
    assert_eq!(s.add_formula(3).unwrap(), seq(1, &[2], &[1, 0, 1]));
    assert!(s.add_formula(4).is_err());
    assert!(s.add_formula(0).is_err());
}

#[test]
fn assign_k_fills_omega_coordinates() {
    let s = seq(1, &[1, 3], &[0, 2, 0]);
    assert_eq!(s.assign_k(7), seq(1, &[], &[7, 2, 7]));
    // ω-free sequents are fixed points.
    let t = seq(1, &[], &[1, 2, 3]);
    assert_eq!(t.assign_k(9), t);
}

#[test]
fn norm_is_max_antecedent_multiplicity() {
    assert_eq!(seq(0, &[], &[0, 0]).norm(), 0);
    assert_eq!(seq(2, &[], &[3, 1]).norm(), 3);
    // The ω-set does not contribute.
    assert_eq!(seq(2, &[1], &[0, 2]).norm(), 2);
}

#[test]
fn hypersequent_canonical_multiset() {
    let a = seq(1, &[], &[1, 0]);
    let b = seq(2, &[], &[0, 1]);
    let h1 = Hypersequent::new(vec![a.clone(), b.clone()]);
    let h2 = Hypersequent::new(vec![b.clone(), a.clone()]);
    assert_eq!(h1, h2);
    assert!(h1.is_irredundant());
    let h3 = Hypersequent::new(vec![a.clone(), a.clone()]);
    assert!(!h3.is_irredundant());
    assert!(h1.contains(&a));
    assert_eq!(h1.extend_with(&[a.clone()]).len(), 3);
}

#[test]
fn bad_extension_all_or_nothing() {
    let hist = vec![seq(1, &[], &[1, 0]), seq(2, &[], &[0, 1])];
    // Dominating an earlier element is not bad.
    assert!(!is_bad_extension(&hist, &seq(1, &[], &[2, 0]), leq_s));
    // Equal to an earlier element is not bad.
    assert!(!is_bad_extension(&hist, &seq(2, &[], &[0, 1]), leq_s));
    // Incomparable is bad.
    assert!(is_bad_extension(&hist, &seq(1, &[], &[0, 0]), leq_s));
    assert!(is_bad_extension(&hist, &seq(3, &[], &[5, 5]), leq_s));
}

#[test]
fn rin_root_and_tree_shape() {
    let h = Hypersequent::new(vec![seq(1, &[], &[1, 0]), seq(2, &[], &[0, 1])]);
    let rin = RinHypersequent::root(&h);
    assert_eq!(rin.components.len(), 2);
    assert!(rin.rel.is_empty());
    assert!(rin.is_tree());
    assert_eq!(rin.support(), h);
    assert_eq!(rin.max_index(), 1);
    assert!(rin.ancestors(1).is_empty());
}

#[test]
fn rin_ancestors_nearest_first() {
    let h = Hypersequent::new(vec![seq(1, &[], &[1, 0])]);
    let mut rin = RinHypersequent::root(&h);
    rin.components.push(hyperseq_comp(1, seq(1, &[], &[0, 1])));
    rin.rel.insert(1, 0);
    rin.components.push(hyperseq_comp(2, seq(2, &[], &[0, 1])));
    rin.rel.insert(2, 1);
    assert_eq!(rin.ancestors(2), vec![1, 0]);
    assert_eq!(rin.path_to(2), vec![0, 1, 2]);
    assert!(rin.is_tree());
}

fn hyperseq_comp(index: usize, seq: OmegaSequent) -> hyperprove::hyperseq::IndexedComponent {
    hyperprove::hyperseq::IndexedComponent { index, seq }
}

#[test]
fn parse_hypersequent_components() {
    let f = parse("p -> q").unwrap();
    let tbl = SubformulaTable::new(&f);
    let comps = parse_hypersequent("p => q | {p}; q => p -> q | =>").unwrap();
    assert_eq!(comps.len(), 3);
    let seqs: Vec<OmegaSequent> = comps.iter().map(|c| c.resolve(&tbl)).collect();
    assert_eq!(seqs[0], seq(2, &[], &[1, 0, 0]));
    assert_eq!(seqs[1], seq(3, &[1], &[0, 1, 0]));
    assert_eq!(seqs[2], seq(0, &[], &[0, 0, 0]));
}

#[test]
fn display_round_trips_through_parser() {
    let f = parse("p -> q").unwrap();
    let tbl = SubformulaTable::new(&f);
    let original = Hypersequent::new(vec![
        seq(2, &[], &[2, 0, 0]),
        seq(3, &[1], &[0, 1, 0]),
        seq(0, &[], &[0, 0, 0]),
    ]);
    let text = original.display(&tbl);
    let comps = parse_hypersequent(&text).unwrap();
    let back = Hypersequent::new(comps.iter().map(|c| c.resolve(&tbl)).collect());
    assert_eq!(back, original);
}
