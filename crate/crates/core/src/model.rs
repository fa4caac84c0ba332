//! Structured systems and the attack graph built from their sparsity pattern.
//!
//! A [`StructuredSystem`] records which entries of `W`, `B` and `C` are free
//! parameters, together with the set of protected sensors. The attack graph
//! adds one dedicated attack vertex `a_<sensor>` per unprotected sensor and
//! fixes the ordered set of attackable components: all actuators, then all
//! sensor-attack vertices.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Prefix used to derive the name of a dedicated sensor-attack vertex.
pub const ATTACK_PREFIX: &str = "a_";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("system must declare at least one state")]
    NoStates,
    #[error("system must declare at least one sensor")]
    NoSensors,
    #[error("duplicate vertex name `{0}`")]
    DuplicateName(String),
    #[error(
        "derived attack vertex `{attack}` for sensor `{sensor}` collides with a declared name"
    )]
    AttackNameCollision { sensor: String, attack: String },
    #[error("{field}: unknown {expected} `{name}`")]
    DanglingEndpoint {
        field: &'static str,
        expected: &'static str,
        name: String,
    },
    #[error("{field}: duplicate edge `{from}` -> `{to}`")]
    DuplicateEdge {
        field: &'static str,
        from: String,
        to: String,
    },
    #[error("unknown sensor `{0}`")]
    UnknownSensor(String),
}

/// Vertex classes of the attack graph, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKind {
    State,
    Actuator,
    Sensor,
    SensorAttack,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::State => "state",
            VertexKind::Actuator => "actuator",
            VertexKind::Sensor => "sensor",
            VertexKind::SensorAttack => "sensor-attack",
        }
    }
}

/// Identity of a vertex: its class and its position within that class.
///
/// For [`VertexKind::SensorAttack`] the ordinal counts unprotected sensors
/// only, in sensor declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId {
    pub kind: VertexKind,
    pub ordinal: usize,
}

impl VertexId {
    pub const fn new(kind: VertexKind, ordinal: usize) -> Self {
        Self { kind, ordinal }
    }
    pub const fn state(ordinal: usize) -> Self {
        Self::new(VertexKind::State, ordinal)
    }
    pub const fn actuator(ordinal: usize) -> Self {
        Self::new(VertexKind::Actuator, ordinal)
    }
    pub const fn sensor(ordinal: usize) -> Self {
        Self::new(VertexKind::Sensor, ordinal)
    }
    pub const fn sensor_attack(ordinal: usize) -> Self {
        Self::new(VertexKind::SensorAttack, ordinal)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind.as_str(), self.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sensor {
    pub name: String,
    pub protected: bool,
}

impl Sensor {
    pub fn new(name: impl Into<String>, protected: bool) -> Self {
        Self {
            name: name.into(),
            protected,
        }
    }
}

/// Sparsity pattern of `(W, B, C)` with named vertices.
///
/// Edges are stored as ordinal pairs in declaration order:
/// `w_edges` as (from-state, to-state), `b_edges` as (actuator, state) and
/// `c_edges` as (state, sensor). A W edge `x_j -> x_i` is the free entry
/// `W[i][j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredSystem {
    states: Vec<String>,
    actuators: Vec<String>,
    sensors: Vec<Sensor>,
    w_edges: Vec<(usize, usize)>,
    b_edges: Vec<(usize, usize)>,
    c_edges: Vec<(usize, usize)>,
}

impl StructuredSystem {
    /// Validates names and edge endpoints and builds the system.
    pub fn new<S: AsRef<str>>(
        states: Vec<String>,
        actuators: Vec<String>,
        sensors: Vec<Sensor>,
        w_edges: &[(S, S)],
        b_edges: &[(S, S)],
        c_edges: &[(S, S)],
    ) -> Result<Self, ModelError> {
        if states.is_empty() {
            return Err(ModelError::NoStates);
        }
        if sensors.is_empty() {
            return Err(ModelError::NoSensors);
        }

        let mut seen = HashSet::new();
        let all_names = states
            .iter()
            .chain(actuators.iter())
            .chain(sensors.iter().map(|s| &s.name));
        for name in all_names {
            if !seen.insert(name.as_str()) {
                return Err(ModelError::DuplicateName(name.clone()));
            }
        }
        for sensor in sensors.iter().filter(|s| !s.protected) {
            let attack = format!("{ATTACK_PREFIX}{}", sensor.name);
            if seen.contains(attack.as_str()) {
                return Err(ModelError::AttackNameCollision {
                    sensor: sensor.name.clone(),
                    attack,
                });
            }
        }

        let index = |names: &[String]| -> HashMap<String, usize> {
            names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), i))
                .collect()
        };
        let state_ix = index(&states);
        let actuator_ix = index(&actuators);
        let sensor_names: Vec<String> = sensors.iter().map(|s| s.name.clone()).collect();
        let sensor_ix = index(&sensor_names);

        let w = resolve_edges(
            "w_edges",
            w_edges,
            (&state_ix, "state"),
            (&state_ix, "state"),
        )?;
        let b = resolve_edges(
            "b_edges",
            b_edges,
            (&actuator_ix, "actuator"),
            (&state_ix, "state"),
        )?;
        let c = resolve_edges(
            "c_edges",
            c_edges,
            (&state_ix, "state"),
            (&sensor_ix, "sensor"),
        )?;

        Ok(Self {
            states,
            actuators,
            sensors,
            w_edges: w,
            b_edges: b,
            c_edges: c,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn actuators(&self) -> &[String] {
        &self.actuators
    }
    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }
    pub fn w_edges(&self) -> &[(usize, usize)] {
        &self.w_edges
    }
    pub fn b_edges(&self) -> &[(usize, usize)] {
        &self.b_edges
    }
    pub fn c_edges(&self) -> &[(usize, usize)] {
        &self.c_edges
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }
    pub fn actuator_count(&self) -> usize {
        self.actuators.len()
    }
    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }
    pub fn unprotected_count(&self) -> usize {
        self.sensors.iter().filter(|s| !s.protected).count()
    }

    /// Number of free parameters in `(W, B, C, D)`; equals the edge count of
    /// the attack graph.
    pub fn free_parameter_count(&self) -> usize {
        self.w_edges.len() + self.b_edges.len() + self.c_edges.len() + self.unprotected_count()
    }

    /// Returns a copy with the named sensor marked as protected.
    pub fn with_protected(&self, sensor: &str) -> Result<Self, ModelError> {
        let mut next = self.clone();
        let entry = next
            .sensors
            .iter_mut()
            .find(|s| s.name == sensor)
            .ok_or_else(|| ModelError::UnknownSensor(sensor.to_string()))?;
        entry.protected = true;
        Ok(next)
    }
}

fn resolve_edges<S: AsRef<str>>(
    field: &'static str,
    edges: &[(S, S)],
    from: (&HashMap<String, usize>, &'static str),
    to: (&HashMap<String, usize>, &'static str),
) -> Result<Vec<(usize, usize)>, ModelError> {
    let lookup = |(table, expected): (&HashMap<String, usize>, &'static str), name: &str| {
        table
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::DanglingEndpoint {
                field,
                expected,
                name: name.to_string(),
            })
    };
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        let (a, b) = (a.as_ref(), b.as_ref());
        let pair = (lookup(from, a)?, lookup(to, b)?);
        if !seen.insert(pair) {
            return Err(ModelError::DuplicateEdge {
                field,
                from: a.to_string(),
                to: b.to_string(),
            });
        }
        out.push(pair);
    }
    Ok(out)
}

/// The directed graph `G_F` over states, actuators, sensors and dedicated
/// sensor-attack vertices.
///
/// Vertices are stored densely in canonical `(kind, ordinal)` order and
/// adjacency lists are sorted, so every traversal is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackGraph {
    vertices: Vec<VertexId>,
    names: Vec<String>,
    successors: Vec<Vec<usize>>,
    attack_set: Vec<VertexId>,
    targets: Vec<VertexId>,
    /// sensor-attack ordinal -> sensor ordinal
    attacked_sensor: Vec<usize>,
    offsets: [usize; 4],
    edge_count: usize,
}

pub fn build_attack_graph(system: &StructuredSystem) -> AttackGraph {
    let n = system.state_count();
    let q = system.actuator_count();
    let m = system.sensor_count();
    let attacked_sensor: Vec<usize> = system
        .sensors
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.protected)
        .map(|(j, _)| j)
        .collect();
    let p = attacked_sensor.len();
    let offsets = [0, n, n + q, n + q + m];

    let mut vertices = Vec::with_capacity(n + q + m + p);
    let mut names = Vec::with_capacity(vertices.capacity());
    vertices.extend((0..n).map(VertexId::state));
    names.extend(system.states.iter().cloned());
    vertices.extend((0..q).map(VertexId::actuator));
    names.extend(system.actuators.iter().cloned());
    vertices.extend((0..m).map(VertexId::sensor));
    names.extend(system.sensors.iter().map(|s| s.name.clone()));
    vertices.extend((0..p).map(VertexId::sensor_attack));
    names.extend(
        attacked_sensor
            .iter()
            .map(|&j| format!("{ATTACK_PREFIX}{}", system.sensors[j].name)),
    );

    let mut successors = vec![Vec::new(); vertices.len()];
    for &(from, to) in &system.w_edges {
        successors[offsets[0] + from].push(offsets[0] + to);
    }
    for &(from, to) in &system.b_edges {
        successors[offsets[1] + from].push(offsets[0] + to);
    }
    for &(from, to) in &system.c_edges {
        successors[offsets[0] + from].push(offsets[2] + to);
    }
    for (k, &j) in attacked_sensor.iter().enumerate() {
        successors[offsets[3] + k].push(offsets[2] + j);
    }
    for list in &mut successors {
        list.sort_unstable();
    }
    let edge_count = successors.iter().map(Vec::len).sum();

    let attack_set = (0..q)
        .map(VertexId::actuator)
        .chain((0..p).map(VertexId::sensor_attack))
        .collect();
    let targets = (0..m).map(VertexId::sensor).collect();

    AttackGraph {
        vertices,
        names,
        successors,
        attack_set,
        targets,
        attacked_sensor,
        offsets,
        edge_count,
    }
}

impl AttackGraph {
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }
    /// Attackable components: actuators, then sensor-attack vertices.
    pub fn attack_set(&self) -> &[VertexId] {
        &self.attack_set
    }
    /// All sensors, protected or not.
    pub fn targets(&self) -> &[VertexId] {
        &self.targets
    }

    fn class_len(&self, kind: VertexKind) -> usize {
        let k = kind as usize;
        let end = self
            .offsets
            .get(k + 1)
            .copied()
            .unwrap_or(self.vertices.len());
        end - self.offsets[k]
    }

    /// Dense position of `v` in [`Self::vertices`], if it belongs to the graph.
    pub fn position(&self, v: VertexId) -> Option<usize> {
        (v.ordinal < self.class_len(v.kind)).then(|| self.offsets[v.kind as usize] + v.ordinal)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.position(v).is_some()
    }

    pub fn name(&self, v: VertexId) -> Option<&str> {
        self.position(v).map(|i| self.names[i].as_str())
    }

    pub fn lookup(&self, name: &str) -> Option<VertexId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.vertices[i])
    }

    /// Successors of `v` in canonical order.
    pub fn successors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        let list = match self.position(v) {
            Some(i) => self.successors[i].as_slice(),
            None => &[],
        };
        list.iter().map(|&j| self.vertices[j])
    }

    /// All edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.successors
            .iter()
            .enumerate()
            .flat_map(move |(i, list)| {
                list.iter()
                    .map(move |&j| (self.vertices[i], self.vertices[j]))
            })
    }

    pub fn has_edge(&self, from: VertexId, to: VertexId) -> bool {
        match (self.position(from), self.position(to)) {
            (Some(i), Some(j)) => self.successors[i].binary_search(&j).is_ok(),
            _ => false,
        }
    }

    /// Sensor ordinal attacked by a sensor-attack vertex.
    pub fn attacked_sensor(&self, attack: VertexId) -> Option<VertexId> {
        (attack.kind == VertexKind::SensorAttack)
            .then(|| self.attacked_sensor.get(attack.ordinal))
            .flatten()
            .map(|&j| VertexId::sensor(j))
    }

    /// Dense adjacency lists indexed by [`Self::position`].
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.successors
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    /// An actuator with no outgoing edge.
    ActuatorDangling,
    /// A state with no directed path to any sensor.
    StateUnobserved,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::ActuatorDangling => "actuator-dangling",
            ViolationKind::StateUnobserved => "state-unobserved",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssumptionViolation {
    pub vertex: VertexId,
    pub kind: ViolationKind,
}

/// Checks the non-degeneracy conditions: every actuator drives some state
/// and every state reaches some sensor. Violations are reported in
/// canonical vertex order; they never block further analysis.
pub fn validate_assumptions(graph: &AttackGraph) -> Vec<AssumptionViolation> {
    let count = graph.vertex_count();
    let mut predecessors = vec![Vec::new(); count];
    for (i, list) in graph.successors.iter().enumerate() {
        for &j in list {
            predecessors[j].push(i);
        }
    }
    let mut observed = vec![false; count];
    let mut queue: VecDeque<usize> = graph
        .targets
        .iter()
        .filter_map(|&t| graph.position(t))
        .collect();
    for &t in &queue {
        observed[t] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &u in &predecessors[v] {
            if !observed[u] {
                observed[u] = true;
                queue.push_back(u);
            }
        }
    }

    let mut violations = Vec::new();
    for (i, &v) in graph.vertices.iter().enumerate() {
        match v.kind {
            VertexKind::State if !observed[i] => violations.push(AssumptionViolation {
                vertex: v,
                kind: ViolationKind::StateUnobserved,
            }),
            VertexKind::Actuator if graph.successors[i].is_empty() => {
                violations.push(AssumptionViolation {
                    vertex: v,
                    kind: ViolationKind::ActuatorDangling,
                })
            }
            _ => {}
        }
    }
    violations
}
