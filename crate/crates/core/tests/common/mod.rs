//! Shared generators and brute-force oracles for integration tests.
//!
//! The oracles here never touch the flow engine: linkings are found by
//! enumerating simple paths and searching for disjoint families directly.

#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use structsec::{
    build_attack_graph, validate_assumptions, AttackGraph, SecurityIndex, Sensor, StructuredSystem,
    VertexId,
};

pub const G1: &str = include_str!("../../fixtures/g1.json");
pub const G2: &str = include_str!("../../fixtures/g2.json");

pub fn g1() -> StructuredSystem {
    structsec::io::parse_system(G1).unwrap()
}

pub fn g2() -> StructuredSystem {
    structsec::io::parse_system(G2).unwrap()
}

pub fn ids(graph: &AttackGraph, names: &[&str]) -> Vec<VertexId> {
    names.iter().map(|n| graph.lookup(n).unwrap()).collect()
}

/// Builds a structure from edge-presence masks; names are x1.., u1.., y1...
pub fn assemble(
    n: usize,
    q: usize,
    m: usize,
    w: &[bool],
    b: &[bool],
    c: &[bool],
    protected: &[bool],
) -> StructuredSystem {
    let states: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let actuators: Vec<String> = (1..=q).map(|i| format!("u{i}")).collect();
    let sensors: Vec<Sensor> = (0..m)
        .map(|j| Sensor::new(format!("y{}", j + 1), protected[j]))
        .collect();
    let mut w_edges = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if w[from * n + to] {
                w_edges.push((states[from].clone(), states[to].clone()));
            }
        }
    }
    let mut b_edges = Vec::new();
    for a in 0..q {
        for x in 0..n {
            if b[a * n + x] {
                b_edges.push((actuators[a].clone(), states[x].clone()));
            }
        }
    }
    let mut c_edges = Vec::new();
    for x in 0..n {
        for y in 0..m {
            if c[x * m + y] {
                c_edges.push((states[x].clone(), sensors[y].name.clone()));
            }
        }
    }
    StructuredSystem::new(states, actuators, sensors, &w_edges, &b_edges, &c_edges).unwrap()
}

/// Adds the fewest obvious edges so that every actuator drives a state and
/// every state reaches a sensor.
pub fn repair_assumptions(system: &StructuredSystem) -> StructuredSystem {
    let n = system.state_count();
    let m = system.sensor_count();
    let mut b: Vec<(String, String)> = system
        .b_edges()
        .iter()
        .map(|&(a, x)| (system.actuators()[a].clone(), system.states()[x].clone()))
        .collect();
    let mut c: Vec<(String, String)> = system
        .c_edges()
        .iter()
        .map(|&(x, y)| (system.states()[x].clone(), system.sensors()[y].name.clone()))
        .collect();
    let w: Vec<(String, String)> = system
        .w_edges()
        .iter()
        .map(|&(f, t)| (system.states()[f].clone(), system.states()[t].clone()))
        .collect();
    let graph = build_attack_graph(system);
    for v in validate_assumptions(&graph) {
        match v.vertex.kind {
            structsec::VertexKind::Actuator => b.push((
                system.actuators()[v.vertex.ordinal].clone(),
                system.states()[v.vertex.ordinal % n].clone(),
            )),
            _ => c.push((
                system.states()[v.vertex.ordinal].clone(),
                system.sensors()[v.vertex.ordinal % m].name.clone(),
            )),
        }
    }
    StructuredSystem::new(
        system.states().to_vec(),
        system.actuators().to_vec(),
        system.sensors().to_vec(),
        &w,
        &b,
        &c,
    )
    .unwrap()
}

/// Proptest strategy over small structured systems.
pub fn structure(
    max_n: usize,
    max_q: usize,
    max_m: usize,
) -> impl Strategy<Value = StructuredSystem> {
    (1..=max_n, 0..=max_q, 1..=max_m)
        .prop_flat_map(|(n, q, m)| {
            (
                Just((n, q, m)),
                prop::collection::vec(prop::bool::weighted(0.25), n * n),
                prop::collection::vec(prop::bool::weighted(0.4), q * n),
                prop::collection::vec(prop::bool::weighted(0.35), n * m),
                prop::collection::vec(any::<bool>(), m),
            )
        })
        .prop_map(|((n, q, m), w, b, c, p)| assemble(n, q, m, &w, &b, &c, &p))
}

/// Seeded random structure with at most `max_n` states and an attack set of
/// at most `max_attack` components.
pub fn random_structure(rng: &mut ChaCha8Rng, max_n: usize, max_attack: usize) -> StructuredSystem {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=4usize);
    let q = rng.random_range(0..=max_attack.min(4));
    let budget = max_attack - q;
    let mut protected = vec![true; m];
    let mut open = 0;
    for p in protected.iter_mut() {
        if open < budget && rng.random_bool(0.5) {
            *p = false;
            open += 1;
        }
    }
    let density = rng.random_range(0.15..0.45);
    let w: Vec<bool> = (0..n * n).map(|_| rng.random_bool(density * 0.8)).collect();
    let b: Vec<bool> = (0..q * n).map(|_| rng.random_bool(density)).collect();
    let c: Vec<bool> = (0..n * m).map(|_| rng.random_bool(density)).collect();
    assemble(n, q, m, &w, &b, &c, &protected)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All simple paths that start in `sources` and stop at the first target
/// reached, as vertex bit masks. Restricting to such minimal paths keeps
/// both the maximum family size and the existence of a maximum family that
/// avoids a given vertex unchanged.
pub fn minimal_paths(adjacency: &[Vec<usize>], sources: &[usize], targets: &[usize]) -> Vec<u64> {
    assert!(adjacency.len() <= 64);
    let is_target = |v: usize| targets.contains(&v);
    let mut out = Vec::new();
    fn walk(
        adjacency: &[Vec<usize>],
        v: usize,
        mask: u64,
        is_target: &dyn Fn(usize) -> bool,
        out: &mut Vec<u64>,
    ) {
        if is_target(v) {
            out.push(mask);
            return;
        }
        for &w in &adjacency[v] {
            if mask >> w & 1 == 0 {
                walk(adjacency, w, mask | 1 << w, is_target, out);
            }
        }
    }
    let mut seen = Vec::new();
    for &s in sources {
        if !seen.contains(&s) {
            seen.push(s);
            walk(adjacency, s, 1 << s, &is_target, &mut out);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Largest number of pairwise disjoint masks, by exhaustive search.
pub fn max_disjoint(paths: &[u64]) -> usize {
    fn go(paths: &[u64], used: u64, best: &mut usize, depth: usize) {
        if depth + paths.len() <= *best {
            return;
        }
        match paths.split_first() {
            None => *best = (*best).max(depth),
            Some((&p, rest)) => {
                if p & used == 0 {
                    go(rest, used | p, best, depth + 1);
                }
                go(rest, used, best, depth);
            }
        }
    }
    let mut best = 0;
    go(paths, 0, &mut best, 0);
    best
}

pub fn brute_linking_size(adjacency: &[Vec<usize>], sources: &[usize], targets: &[usize]) -> usize {
    max_disjoint(&minimal_paths(adjacency, sources, targets))
}

fn positions(graph: &AttackGraph, set: &[VertexId]) -> Vec<usize> {
    set.iter().map(|&v| graph.position(v).unwrap()).collect()
}

/// Whether some maximum linking from `subset` to the sensors misses
/// `component`, decided by enumeration.
pub fn brute_some_max_linking_misses(
    graph: &AttackGraph,
    subset: &[VertexId],
    component: VertexId,
) -> bool {
    let paths = minimal_paths(
        graph.adjacency(),
        &positions(graph, subset),
        &positions(graph, graph.targets()),
    );
    let bit = 1u64 << graph.position(component).unwrap();
    let avoiding: Vec<u64> = paths.iter().copied().filter(|p| p & bit == 0).collect();
    max_disjoint(&avoiding) == max_disjoint(&paths)
}

/// Security index by exhaustive enumeration over subsets and linkings.
pub fn brute_security_index(graph: &AttackGraph, component: VertexId) -> SecurityIndex {
    let attack = graph.attack_set();
    let size = attack.len();
    let me = attack.iter().position(|&v| v == component).unwrap();
    let mut by_size: Vec<Vec<u64>> = vec![Vec::new(); size + 1];
    for mask in 0..1u64 << size {
        if mask >> me & 1 == 1 {
            by_size[mask.count_ones() as usize].push(mask);
        }
    }
    for (p, masks) in by_size.iter().enumerate().skip(1) {
        for &mask in masks {
            let subset: Vec<VertexId> = (0..size)
                .filter(|&k| mask >> k & 1 == 1)
                .map(|k| attack[k])
                .collect();
            if brute_some_max_linking_misses(graph, &subset, component) {
                return SecurityIndex::Finite(p);
            }
        }
    }
    SecurityIndex::Infinite
}

/// Random digraph on at most `max_vertices` vertices with random source and
/// target sets of at most `max_terminals` each.
pub fn random_digraph(
    rng: &mut ChaCha8Rng,
    max_vertices: usize,
    max_terminals: usize,
) -> (Vec<Vec<usize>>, Vec<usize>, Vec<usize>) {
    let n = rng.random_range(1..=max_vertices);
    let density = rng.random_range(0.1..0.5);
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            (0..n)
                .filter(|&w| w != v && rng.random_bool(density))
                .collect()
        })
        .collect();
    let pick = |rng: &mut ChaCha8Rng| {
        let k = rng.random_range(0..=max_terminals.min(n));
        rand::seq::index::sample(rng, n, k).into_vec()
    };
    let sources = pick(rng);
    let targets = pick(rng);
    (adjacency, sources, targets)
}
