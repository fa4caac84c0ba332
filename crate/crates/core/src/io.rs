//! System documents, index reports and DOT export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::index::{IndexReport, SecurityIndex};
use crate::linking::{Linking, LinkingError};
use crate::model::{AttackGraph, ModelError, Sensor, StructuredSystem, VertexId, VertexKind};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown field `{field}` at line {line}, column {column}")]
    UnknownField {
        field: String,
        line: usize,
        column: usize,
    },
    #[error("invalid document at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version `{0}` (expected \"1\")")]
    UnsupportedVersion(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("highlight is not a linking of this graph: {0}")]
    ForeignHighlight(LinkingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownField,
    Schema,
    Version,
    DanglingEndpoint,
    DuplicateName,
    DuplicateEdge,
    Invalid,
}

impl IoError {
    pub fn kind(&self) -> ParseErrorKind {
        match self {
            IoError::Syntax { .. } => ParseErrorKind::Syntax,
            IoError::UnknownField { .. } => ParseErrorKind::UnknownField,
            IoError::Schema { .. } => ParseErrorKind::Schema,
            IoError::UnsupportedVersion(_) => ParseErrorKind::Version,
            IoError::Model(ModelError::DanglingEndpoint { .. }) => ParseErrorKind::DanglingEndpoint,
            IoError::Model(ModelError::DuplicateName(_))
            | IoError::Model(ModelError::AttackNameCollision { .. }) => {
                ParseErrorKind::DuplicateName
            }
            IoError::Model(ModelError::DuplicateEdge { .. }) => ParseErrorKind::DuplicateEdge,
            IoError::Model(_) | IoError::ForeignHighlight(_) => ParseErrorKind::Invalid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorEntry {
    pub name: String,
    #[serde(default)]
    pub protected: bool,
}

/// On-disk form of a [`StructuredSystem`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub states: Vec<String>,
    #[serde(default)]
    pub actuators: Vec<String>,
    pub sensors: Vec<SensorEntry>,
    #[serde(default)]
    pub w_edges: Vec<(String, String)>,
    #[serde(default)]
    pub b_edges: Vec<(String, String)>,
    #[serde(default)]
    pub c_edges: Vec<(String, String)>,
}

impl SystemDocument {
    pub fn from_system(system: &StructuredSystem) -> Self {
        let pairs = |edges: &[(usize, usize)],
                     from: &dyn Fn(usize) -> String,
                     to: &dyn Fn(usize) -> String| {
            edges.iter().map(|&(a, b)| (from(a), to(b))).collect()
        };
        let state = |i: usize| system.states()[i].clone();
        let actuator = |i: usize| system.actuators()[i].clone();
        let sensor = |i: usize| system.sensors()[i].name.clone();
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            description: None,
            states: system.states().to_vec(),
            actuators: system.actuators().to_vec(),
            sensors: system
                .sensors()
                .iter()
                .map(|s| SensorEntry {
                    name: s.name.clone(),
                    protected: s.protected,
                })
                .collect(),
            w_edges: pairs(system.w_edges(), &state, &state),
            b_edges: pairs(system.b_edges(), &actuator, &state),
            c_edges: pairs(system.c_edges(), &state, &sensor),
        }
    }

    pub fn into_system(self) -> Result<StructuredSystem, IoError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(IoError::UnsupportedVersion(self.schema_version));
        }
        let sensors = self
            .sensors
            .into_iter()
            .map(|s| Sensor::new(s.name, s.protected))
            .collect();
        Ok(StructuredSystem::new(
            self.states,
            self.actuators,
            sensors,
            &self.w_edges,
            &self.b_edges,
            &self.c_edges,
        )?)
    }
}

fn classify(err: serde_json::Error) -> IoError {
    use serde_json::error::Category;
    let (line, column) = (err.line(), err.column());
    let message = err.to_string();
    match err.classify() {
        Category::Syntax | Category::Eof | Category::Io => IoError::Syntax {
            line,
            column,
            message,
        },
        Category::Data => match message.strip_prefix("unknown field `") {
            Some(rest) => IoError::UnknownField {
                field: rest.split('`').next().unwrap_or_default().to_string(),
                line,
                column,
            },
            None => IoError::Schema {
                line,
                column,
                message,
            },
        },
    }
}

pub fn parse_system(text: &str) -> Result<StructuredSystem, IoError> {
    let doc: SystemDocument = serde_json::from_str(text).map_err(classify)?;
    doc.into_system()
}

pub fn emit_system(system: &StructuredSystem) -> String {
    let mut out = serde_json::to_string_pretty(&SystemDocument::from_system(system))
        .expect("system documents always serialize");
    out.push('\n');
    out
}

fn serialize_index<S: Serializer>(index: &SecurityIndex, s: S) -> Result<S::Ok, S::Error> {
    match index {
        SecurityIndex::Finite(p) => s.serialize_u64(*p as u64),
        SecurityIndex::Infinite => s.serialize_str("inf"),
    }
}

#[derive(Debug, Serialize)]
struct GraphSummaryDoc {
    vertices: usize,
    edges: usize,
    states: usize,
    actuators: usize,
    sensors: usize,
    sensor_attacks: usize,
}

#[derive(Debug, Serialize)]
struct ResultDoc {
    name: String,
    kind: &'static str,
    #[serde(
        serialize_with = "serialize_opt_index",
        skip_serializing_if = "Option::is_none"
    )]
    index: Option<SecurityIndex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subsets_examined: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn serialize_opt_index<S: Serializer>(
    index: &Option<SecurityIndex>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match index {
        Some(i) => serialize_index(i, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Serialize)]
struct ViolationDoc {
    vertex: String,
    kind: &'static str,
}

#[derive(Debug, Serialize)]
struct ReportDoc {
    graph: GraphSummaryDoc,
    results: Vec<ResultDoc>,
    assumption_violations: Vec<ViolationDoc>,
}

fn name_of(graph: &AttackGraph, v: VertexId) -> String {
    graph
        .name(v)
        .map(str::to_string)
        .unwrap_or_else(|| v.to_string())
}

/// Renders a report as pretty JSON with a fixed key order.
pub fn emit_report(graph: &AttackGraph, report: &IndexReport) -> String {
    let s = &report.graph_summary;
    let doc = ReportDoc {
        graph: GraphSummaryDoc {
            vertices: s.vertices,
            edges: s.edges,
            states: s.states,
            actuators: s.actuators,
            sensors: s.sensors,
            sensor_attacks: s.sensor_attacks,
        },
        results: report
            .results
            .iter()
            .map(|entry| {
                let name = name_of(graph, entry.component);
                let kind = entry.component.kind.as_str();
                match &entry.outcome {
                    Ok(r) => ResultDoc {
                        name,
                        kind,
                        index: Some(r.index),
                        witness: r
                            .witness
                            .as_ref()
                            .map(|w| w.iter().map(|&v| name_of(graph, v)).collect()),
                        subsets_examined: Some(r.subsets_examined),
                        error: None,
                    },
                    Err(e) => ResultDoc {
                        name,
                        kind,
                        index: None,
                        witness: None,
                        subsets_examined: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect(),
        assumption_violations: report
            .assumption_violations
            .iter()
            .map(|v| ViolationDoc {
                vertex: name_of(graph, v.vertex),
                kind: v.kind.as_str(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("reports always serialize");
    out.push('\n');
    out
}

fn quoted(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

fn node_style(kind: VertexKind) -> &'static str {
    match kind {
        VertexKind::State => "shape=circle, style=filled, fillcolor=\"#dbe9f6\"",
        VertexKind::Actuator => "shape=box, style=filled, fillcolor=\"#fde0c5\"",
        VertexKind::Sensor => "shape=doublecircle, style=filled, fillcolor=\"#d5f0d5\"",
        VertexKind::SensorAttack => "shape=diamond, style=filled, fillcolor=\"#f6c6c6\"",
    }
}

fn write_dot(nodes: &[(String, VertexKind)], edges: &[(String, String, bool)]) -> String {
    let mut out = String::from("digraph attack_graph {\n");
    if !nodes.is_empty() {
        out.push_str("  rankdir=LR;\n");
    }
    for (name, kind) in nodes {
        let _ = writeln!(out, "  {} [{}];", quoted(name), node_style(*kind));
    }
    for (from, to, marked) in edges {
        let style = if *marked {
            " [color=\"#c0392b\", penwidth=2.5]"
        } else {
            ""
        };
        let _ = writeln!(out, "  {} -> {}{};", quoted(from), quoted(to), style);
    }
    out.push_str("}\n");
    out
}

/// DOT rendering of the attack graph; edges of `highlight` are drawn bold.
pub fn export_dot(graph: &AttackGraph, highlight: Option<&Linking>) -> Result<String, IoError> {
    let marked: Vec<(VertexId, VertexId)> = match highlight {
        Some(linking) => {
            linking
                .validate(graph, graph.vertices(), graph.vertices())
                .map_err(IoError::ForeignHighlight)?;
            linking.edges().collect()
        }
        None => Vec::new(),
    };
    let nodes: Vec<(String, VertexKind)> = graph
        .vertices()
        .iter()
        .map(|&v| (name_of(graph, v), v.kind))
        .collect();
    let edges: Vec<(String, String, bool)> = graph
        .edges()
        .map(|(a, b)| {
            (
                name_of(graph, a),
                name_of(graph, b),
                marked.contains(&(a, b)),
            )
        })
        .collect();
    Ok(write_dot(&nodes, &edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::all_indices;
    use crate::linking::find_max_linking;
    use crate::model::build_attack_graph;
    use crate::model::fixtures::{g1, g2, ids};

    const G1: &str = include_str!("../fixtures/g1.json");

    #[test]
    fn g1_fixture_parses() {
        let sys = parse_system(G1).unwrap();
        assert_eq!(sys.state_count(), 4);
        assert_eq!(sys.actuator_count(), 2);
        assert_eq!(sys.sensor_count(), 3);
        assert_eq!(sys.unprotected_count(), 1);
        assert_eq!(sys, g1());
    }

    #[test]
    fn minimal_document() {
        let sys = parse_system(
            r#"{"schema_version": "1", "states": ["x1"], "sensors": [{"name": "y1", "protected": true}]}"#,
        )
        .unwrap();
        assert_eq!(build_attack_graph(&sys).edge_count(), 0);
    }

    #[test]
    fn error_kinds_are_distinct() {
        let dangling = r#"{"schema_version": "1", "states": ["x1"],
            "sensors": [{"name": "y1"}], "c_edges": [["x9", "y1"]]}"#;
        let err = parse_system(dangling).unwrap_err();
        assert_eq!(err.kind(), ParseErrorKind::DanglingEndpoint);
        assert!(err.to_string().contains("x9"));

        let err = parse_system("{\"schema_version\": \"1\",\n \"states\": [").unwrap_err();
        assert_eq!(err.kind(), ParseErrorKind::Syntax);
        assert!(matches!(err, IoError::Syntax { line: 2, .. }));

        let err = parse_system(
            r#"{"schema_version": "1", "states": ["x1"], "sensors": [], "matrix": 1}"#,
        )
        .unwrap_err();
        assert_eq!(
            err,
            IoError::UnknownField {
                field: "matrix".into(),
                line: 1,
                column: 65
            }
        );

        let err = parse_system(
            r#"{"schema_version": "1", "states": ["x1", "x1"], "sensors": [{"name": "y1"}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.kind(), ParseErrorKind::DuplicateName);

        let err = parse_system(r#"{"schema_version": "2", "states": ["x1"], "sensors": []}"#)
            .unwrap_err();
        assert_eq!(err.kind(), ParseErrorKind::Version);

        let err =
            parse_system(r#"{"schema_version": "1", "states": 3, "sensors": []}"#).unwrap_err();
        assert_eq!(err.kind(), ParseErrorKind::Schema);
    }

    #[test]
    fn system_round_trip() {
        for sys in [g1(), g2()] {
            assert_eq!(parse_system(&emit_system(&sys)).unwrap(), sys);
        }
    }

    #[test]
    fn g1_report_document() {
        let g = build_attack_graph(&g1());
        let text = emit_report(&g, &all_indices(&g));
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let results = value["results"].as_array().unwrap();
        assert_eq!(results[0]["name"], "u1");
        assert_eq!(results[0]["index"], 2);
        assert_eq!(results[0]["witness"], serde_json::json!(["u1", "a_y1"]));
        assert_eq!(results[1]["index"], "inf");
        assert!(results[1].get("witness").is_none());
        assert_eq!(results[2]["name"], "a_y1");
        assert_eq!(results[2]["index"], 2);
        assert_eq!(value["graph"]["vertices"], 10);
        assert_eq!(text, emit_report(&g, &all_indices(&g)));
    }

    #[test]
    fn g2_report_document() {
        let g = build_attack_graph(&g2());
        let value: serde_json::Value =
            serde_json::from_str(&emit_report(&g, &all_indices(&g))).unwrap();
        let idx: Vec<_> = value["results"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["index"].clone())
            .collect();
        assert_eq!(idx, vec![serde_json::json!("inf"), 2.into(), 2.into()]);
    }

    #[test]
    fn dot_counts_and_highlight() {
        let g = build_attack_graph(&g1());
        let dot = export_dot(&g, None).unwrap();
        assert_eq!(dot.lines().filter(|l| l.contains("shape=")).count(), 10);
        assert_eq!(dot.lines().filter(|l| l.contains("->")).count(), 9);
        assert!(!dot.contains("penwidth"));

        let linking = find_max_linking(&g, &ids(&g, &["a_y1"]), g.targets()).unwrap();
        let dot = export_dot(&g, Some(&linking)).unwrap();
        let marked: Vec<_> = dot.lines().filter(|l| l.contains("penwidth")).collect();
        assert_eq!(
            marked,
            vec!["  \"a_y1\" -> \"y1\" [color=\"#c0392b\", penwidth=2.5];"]
        );
    }

    #[test]
    fn empty_dot_body() {
        assert_eq!(write_dot(&[], &[]), "digraph attack_graph {\n}\n");
    }

    #[test]
    fn foreign_highlight_is_rejected() {
        let g = build_attack_graph(&g2());
        let bogus = Linking {
            paths: vec![vec![VertexId::sensor_attack(0), VertexId::sensor(0)]],
        };
        assert!(matches!(
            export_dot(&g, Some(&bogus)),
            Err(IoError::ForeignHighlight(_))
        ));
    }
}
