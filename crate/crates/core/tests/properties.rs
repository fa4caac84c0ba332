mod common;

use proptest::prelude::*;

use common::*;
use structsec::index::{all_indices_with, IndexOptions};
use structsec::io::{emit_system, parse_system};
use structsec::linking::DisjointPathNetwork;
use structsec::{
    build_attack_graph, find_max_linking, is_generically_left_invertible, security_index,
    validate_assumptions, LinkingSolver, SecurityIndex, VertexId,
};

fn subsets(attack: &[VertexId]) -> impl Iterator<Item = Vec<VertexId>> + '_ {
    (0..1u64 << attack.len()).map(move |mask| {
        (0..attack.len())
            .filter(|&k| mask >> k & 1 == 1)
            .map(|k| attack[k])
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn linking_bounds_and_single_removal(sys in structure(6, 3, 4)) {
        let g = build_attack_graph(&sys);
        let mut solver = LinkingSolver::new(&g);
        let y = g.targets().to_vec();
        for s in subsets(g.attack_set()) {
            let size = solver.max_linking_size(&s, &y).unwrap();
            prop_assert!(size <= s.len().min(y.len()));
            for &v in &s {
                let rest: Vec<_> = s.iter().copied().filter(|&w| w != v).collect();
                let smaller = solver.max_linking_size(&rest, &y).unwrap();
                prop_assert!(smaller + 1 == size || smaller == size);
            }
        }
    }

    #[test]
    fn linking_grows_with_sources(sys in structure(6, 3, 4)) {
        let g = build_attack_graph(&sys);
        let mut solver = LinkingSolver::new(&g);
        let attack = g.attack_set().to_vec();
        let all: Vec<Vec<VertexId>> = subsets(&attack).collect();
        for small in &all {
            let base = solver.max_linking_size(small, g.targets()).unwrap();
            for big in all.iter().filter(|b| small.iter().all(|v| b.contains(v))) {
                prop_assert!(base <= solver.max_linking_size(big, g.targets()).unwrap());
            }
        }
    }

    #[test]
    fn protecting_a_sensor_never_lowers_an_index(sys in structure(6, 3, 4)) {
        let g = build_attack_graph(&sys);
        let before = structsec::all_indices(&g);
        for sensor in sys.sensors().iter().filter(|s| !s.protected) {
            let next = sys.with_protected(&sensor.name).unwrap();
            let h = build_attack_graph(&next);
            let after = structsec::all_indices(&h);
            for &v in h.attack_set() {
                let name = h.name(v).unwrap();
                let old = before.index_of(g.lookup(name).unwrap()).unwrap();
                prop_assert!(after.index_of(v).unwrap() >= old);
            }
        }
    }

    #[test]
    fn witness_linking_is_valid_and_maximum(sys in structure(6, 3, 4)) {
        let g = build_attack_graph(&sys);
        for s in subsets(g.attack_set()) {
            let linking = find_max_linking(&g, &s, g.targets()).unwrap();
            linking.validate(&g, &s, g.targets()).unwrap();
            let brute = brute_linking_size(
                g.adjacency(),
                &s.iter().map(|&v| g.position(v).unwrap()).collect::<Vec<_>>(),
                &g.targets().iter().map(|&v| g.position(v).unwrap()).collect::<Vec<_>>(),
            );
            prop_assert_eq!(linking.size(), brute);
        }
    }

    #[test]
    fn index_matches_exhaustive_enumeration(sys in structure(5, 3, 3)) {
        let g = build_attack_graph(&sys);
        for &i in g.attack_set() {
            let got = security_index(&g, i).unwrap();
            prop_assert_eq!(got.index, brute_security_index(&g, i));
            if let Some(w) = &got.witness {
                prop_assert!(w.contains(&i));
                prop_assert_eq!(Some(w.len()), got.index.finite());
                prop_assert!(brute_some_max_linking_misses(&g, w, i));
            }
        }
    }

    #[test]
    fn smaller_subsets_are_all_saturated(sys in structure(5, 3, 3)) {
        let g = build_attack_graph(&sys);
        let attack = g.attack_set().to_vec();
        for &i in &attack {
            let p = security_index(&g, i).unwrap().index.finite().unwrap_or(attack.len() + 1);
            for s in subsets(&attack).filter(|s| s.contains(&i) && s.len() < p) {
                prop_assert!(!brute_some_max_linking_misses(&g, &s, i));
            }
        }
    }

    #[test]
    fn left_invertible_implies_all_infinite(sys in structure(5, 3, 3)) {
        let g = build_attack_graph(&sys);
        if is_generically_left_invertible(&g) {
            for &i in g.attack_set() {
                prop_assert_eq!(security_index(&g, i).unwrap().index, SecurityIndex::Infinite);
            }
        }
    }

    #[test]
    fn parallel_and_sequential_reports_agree(sys in structure(6, 3, 4)) {
        let g = build_attack_graph(&sys);
        let seq = IndexOptions { parallel: false, ..Default::default() };
        prop_assert_eq!(all_indices_with(&g, &seq), all_indices_with(&g, &IndexOptions::default()));
    }

    #[test]
    fn system_document_round_trip(sys in structure(6, 3, 4)) {
        prop_assert_eq!(parse_system(&emit_system(&sys)).unwrap(), sys);
    }

    #[test]
    fn edge_count_matches_free_parameters(sys in structure(6, 3, 4)) {
        let g = build_attack_graph(&sys);
        prop_assert_eq!(g.edge_count(), sys.free_parameter_count());
        prop_assert_eq!(g.attack_set().len(), sys.actuator_count() + sys.unprotected_count());
    }

    #[test]
    fn repaired_structures_have_index_at_least_two(sys in structure(6, 3, 4)) {
        let sys = repair_assumptions(&sys);
        let g = build_attack_graph(&sys);
        prop_assert!(validate_assumptions(&g).is_empty());
        for &i in g.attack_set() {
            prop_assert!(security_index(&g, i).unwrap().index >= SecurityIndex::Finite(2));
        }
    }

    #[test]
    fn flow_matches_exhaustive_on_random_digraphs(seed in any::<u64>()) {
        let (adj, s, t) = random_digraph(&mut rng(seed), 9, 4);
        let mut net = DisjointPathNetwork::new(&adj);
        prop_assert_eq!(net.max_disjoint_paths(&s, &t), brute_linking_size(&adj, &s, &t));
    }
}

#[test]
fn g2_u2_index_from_enumeration() {
    let g = build_attack_graph(&g2());
    let u2 = g.lookup("u2").unwrap();
    assert_eq!(brute_security_index(&g, u2), SecurityIndex::Finite(2));
    let r = security_index(&g, u2).unwrap();
    assert_eq!(r.index, SecurityIndex::Finite(2));
    assert_eq!(r.witness, Some(ids(&g, &["u2", "u3"])));
}

#[test]
fn g1_values_from_enumeration() {
    let g = build_attack_graph(&g1());
    let expect = [
        ("u1", SecurityIndex::Finite(2)),
        ("u2", SecurityIndex::Infinite),
        ("a_y1", SecurityIndex::Finite(2)),
    ];
    for (name, value) in expect {
        assert_eq!(
            brute_security_index(&g, g.lookup(name).unwrap()),
            value,
            "{name}"
        );
    }
}
