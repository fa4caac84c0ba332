//! Structural security index by subset enumeration.
//!
//! For a component `i`, subsets of the attack set that contain `i` are
//! scanned by increasing size `p`, lexicographically within each size. The
//! index is the first `p` for which some maximum linking from the subset to
//! the sensors misses `i`. When no subset qualifies the index is infinite:
//! the component cannot be used in a perfectly undetectable attack for
//! almost all realizations.

use std::fmt;

use itertools::Itertools;
use rayon::prelude::*;
use thiserror::Error;

use crate::linking::{LinkingError, LinkingSolver};
use crate::model::{validate_assumptions, AssumptionViolation, AttackGraph, VertexId};

pub const DEFAULT_ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("{0} is not an attackable component")]
    NotAttackable(VertexId),
    #[error(
        "attack set has {size} components, above the enumeration cap of {cap}; \
         raise the cap to proceed (cost grows as 2^size)"
    )]
    CapExceeded { size: usize, cap: usize },
    #[error(transparent)]
    Linking(#[from] LinkingError),
}

/// Security index value; `Infinite` is a distinct state, never a sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SecurityIndex {
    Finite(usize),
    Infinite,
}

impl SecurityIndex {
    pub fn is_infinite(self) -> bool {
        matches!(self, SecurityIndex::Infinite)
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            SecurityIndex::Finite(p) => Some(p),
            SecurityIndex::Infinite => None,
        }
    }
}

impl PartialOrd for SecurityIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SecurityIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use SecurityIndex::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinite) => std::cmp::Ordering::Less,
            (Infinite, Finite(_)) => std::cmp::Ordering::Greater,
            (Infinite, Infinite) => std::cmp::Ordering::Equal,
        }
    }
}

impl fmt::Display for SecurityIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SecurityIndex::Finite(p) => write!(f, "{p}"),
            SecurityIndex::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityIndexResult {
    pub component: VertexId,
    pub index: SecurityIndex,
    /// Lexicographically smallest minimum-size subset containing the
    /// component for which some maximum linking misses it.
    pub witness: Option<Vec<VertexId>>,
    /// Subsets scanned in lexicographic order up to and including the
    /// witness (all candidates when the index is infinite).
    pub subsets_examined: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexOptions {
    pub cap: usize,
    pub parallel: bool,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
            parallel: true,
        }
    }
}

/// Candidate subsets of size `p` that contain `attack[position]`, in
/// lexicographic order of attack-set ordinals.
pub(crate) fn candidate_subsets(
    attack: &[VertexId],
    position: usize,
    p: usize,
) -> impl Iterator<Item = Vec<VertexId>> + '_ {
    let others: Vec<usize> = (0..attack.len()).filter(|&k| k != position).collect();
    others
        .into_iter()
        .combinations(p - 1)
        .map(move |mut combo| {
            let at = combo.partition_point(|&k| k < position);
            combo.insert(at, position);
            combo.into_iter().map(|k| attack[k]).collect()
        })
}

pub(crate) fn check_cap(graph: &AttackGraph, cap: usize) -> Result<(), IndexError> {
    let size = graph.attack_set().len();
    if size > cap {
        return Err(IndexError::CapExceeded { size, cap });
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, j| acc * (n - j) as u64 / (j + 1) as u64)
}

pub fn security_index(
    graph: &AttackGraph,
    component: VertexId,
) -> Result<SecurityIndexResult, IndexError> {
    security_index_with(graph, component, &IndexOptions::default())
}

pub fn security_index_with(
    graph: &AttackGraph,
    component: VertexId,
    options: &IndexOptions,
) -> Result<SecurityIndexResult, IndexError> {
    let attack = graph.attack_set();
    let position = attack
        .iter()
        .position(|&v| v == component)
        .ok_or(IndexError::NotAttackable(component))?;
    check_cap(graph, options.cap)?;

    let total = attack.len();
    let mut examined = 0u64;
    let mut solver = LinkingSolver::new(graph);
    for p in 1..=total {
        let found = if options.parallel {
            let candidates: Vec<Vec<VertexId>> = candidate_subsets(attack, position, p).collect();
            candidates
                .into_par_iter()
                .enumerate()
                .map_init(
                    || LinkingSolver::new(graph),
                    |solver, (k, subset)| {
                        solver
                            .saturated_by_all_max_linkings(&subset, component)
                            .map(|saturated| (!saturated).then_some((k, subset)))
                    },
                )
                .find_first(|r| !matches!(r, Ok(None)))
                .transpose()?
                .flatten()
        } else {
            let mut hit = None;
            for (k, subset) in candidate_subsets(attack, position, p).enumerate() {
                if !solver.saturated_by_all_max_linkings(&subset, component)? {
                    hit = Some((k, subset));
                    break;
                }
            }
            hit
        };
        match found {
            Some((k, witness)) => {
                return Ok(SecurityIndexResult {
                    component,
                    index: SecurityIndex::Finite(p),
                    witness: Some(witness),
                    subsets_examined: examined + k as u64 + 1,
                })
            }
            None => examined += binomial(total - 1, p - 1),
        }
    }
    Ok(SecurityIndexResult {
        component,
        index: SecurityIndex::Infinite,
        witness: None,
        subsets_examined: examined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphSummary {
    pub vertices: usize,
    pub edges: usize,
    pub states: usize,
    pub actuators: usize,
    pub sensors: usize,
    pub sensor_attacks: usize,
}

impl GraphSummary {
    pub fn of(graph: &AttackGraph) -> Self {
        use crate::model::VertexKind::*;
        let count = |kind| graph.vertices().iter().filter(|v| v.kind == kind).count();
        Self {
            vertices: graph.vertex_count(),
            edges: graph.edge_count(),
            states: count(State),
            actuators: count(Actuator),
            sensors: count(Sensor),
            sensor_attacks: count(SensorAttack),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentOutcome {
    pub component: VertexId,
    pub outcome: Result<SecurityIndexResult, IndexError>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexReport {
    pub results: Vec<ComponentOutcome>,
    pub graph_summary: GraphSummary,
    pub assumption_violations: Vec<AssumptionViolation>,
}

impl IndexReport {
    /// Index of `component`, if it was computed successfully.
    pub fn index_of(&self, component: VertexId) -> Option<SecurityIndex> {
        self.results
            .iter()
            .find(|r| r.component == component)
            .and_then(|r| r.outcome.as_ref().ok())
            .map(|r| r.index)
    }
}

pub fn all_indices(graph: &AttackGraph) -> IndexReport {
    all_indices_with(graph, &IndexOptions::default())
}

pub fn all_indices_with(graph: &AttackGraph, options: &IndexOptions) -> IndexReport {
    report_for(graph, graph.attack_set(), options)
}

/// Report restricted to `components`, in the given order. Per-component
/// failures are recorded in the report instead of aborting it.
pub fn report_for(
    graph: &AttackGraph,
    components: &[VertexId],
    options: &IndexOptions,
) -> IndexReport {
    let compute = |&component: &VertexId| ComponentOutcome {
        component,
        outcome: security_index_with(graph, component, options),
    };
    let results = if options.parallel {
        components.par_iter().map(compute).collect()
    } else {
        components.iter().map(compute).collect()
    };
    IndexReport {
        results,
        graph_summary: GraphSummary::of(graph),
        assumption_violations: validate_assumptions(graph),
    }
}

/// Full-size linking from the whole attack set to the sensors.
pub fn is_generically_left_invertible(graph: &AttackGraph) -> bool {
    let attack = graph.attack_set();
    LinkingSolver::new(graph)
        .max_linking_size(attack, graph.targets())
        .map(|size| size == attack.len())
        .unwrap_or(false)
}
