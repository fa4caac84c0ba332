//! Structural actuator security index for discrete-time LTI network systems.
//!
//! The index of an attackable component (an actuator or a dedicated sensor
//! attack) is the smallest number of components an attacker must control to
//! use it in a perfectly undetectable attack. For structured systems it is
//! determined by the sparsity pattern alone: it is the smallest size of an
//! attack subset containing the component for which some maximum linking to
//! the sensors avoids the component.
//!
//! - [`model`]: structured systems and their attack graph.
//! - [`linking`]: maximum vertex-disjoint paths via unit max-flow.
//! - [`index`]: the subset-enumeration index computation.
//! - [`oracle`]: numerical realizations and rank-based ground truth.
//! - [`verify`]: agreement statistics between the two.
//! - [`io`]: JSON documents and DOT export.
//! - [`cli`]: the `structsec` command-line tool.

pub mod cli;
pub mod index;
pub mod io;
pub mod linking;
pub mod model;
pub mod oracle;
pub mod verify;

pub use index::{
    all_indices, is_generically_left_invertible, security_index, IndexReport, SecurityIndex,
    SecurityIndexResult,
};
pub use linking::{
    find_max_linking, max_linking_size, saturated_by_all_max_linkings, Linking, LinkingSolver,
};
pub use model::{
    build_attack_graph, validate_assumptions, AttackGraph, Sensor, StructuredSystem, VertexId,
    VertexKind,
};
