use proptest::prelude::*;

use nucheck_core::{decide, verify_certificate, verify_nuf, Budgets, Relation, Structure, Verdict};

fn relation(k: usize, arity: usize) -> impl Strategy<Value = Relation> {
    proptest::collection::vec(any::<bool>(), k.pow(arity as u32))
        .prop_map(move |bits| Relation::from_fn(k, arity, |t| bits[t.iter().fold(0, |a, &b| a * k + b as usize)]).unwrap())
}

fn structure_parts() -> impl Strategy<Value = Vec<Relation>> {
    proptest::collection::vec((1usize..=3).prop_flat_map(|a| relation(2, a)), 1..=3)
}

fn build(rels: &[Relation]) -> Structure {
    Structure::with_relations(2, rels.iter().enumerate().map(|(i, r)| (format!("r{i}"), r.clone()))).unwrap()
}

fn budgets() -> Budgets {
    let mut b = Budgets::for_domain(2);
    b.nodes = 200_000;
    b.pool.max_atoms = 2;
    b.max_chain_len = 8;
    b
}

/// Yes arity, or 0 for No and 1 for Unknown.
fn summary(v: &Verdict) -> usize {
    match v {
        Verdict::Yes { arity, .. } => *arity,
        Verdict::No { .. } => 0,
        Verdict::Unknown { .. } => 1,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn payloads_verify(rels in structure_parts()) {
        let g = build(&rels);
        match decide(&g, &budgets()).unwrap() {
            Verdict::Yes { table, .. } => prop_assert!(verify_nuf(&table, &g).unwrap()),
            Verdict::No { certificate } => prop_assert!(verify_certificate(&g, &certificate)),
            Verdict::Unknown { .. } => {}
        }
    }

    #[test]
    fn reordering_and_duplicates_do_not_matter(rels in structure_parts(), dup in 0usize..3) {
        let base = summary(&decide(&build(&rels), &budgets()).unwrap());
        let mut shuffled: Vec<Relation> = rels.iter().rev().cloned().collect();
        shuffled.push(rels[dup % rels.len()].clone());
        let other = summary(&decide(&build(&shuffled), &budgets()).unwrap());
        prop_assert_eq!(base, other);
    }

    #[test]
    fn yes_tables_have_the_claimed_arity(rels in structure_parts()) {
        let g = build(&rels);
        if let Verdict::Yes { arity, table } = decide(&g, &budgets()).unwrap() {
            prop_assert_eq!(table.n, arity);
            prop_assert!(arity >= 3);
            prop_assert!(table.satisfies_identities());
        }
    }
}
