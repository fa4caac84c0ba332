//! Numerical cross-checks of the structural computations on one system.
//!
//! Two agreements are measured:
//! - rank/linking: the empirical generic rank of every attack-column subset
//!   equals the maximum linking size from that subset to the sensors;
//! - index genericity: the realization-level index of every component
//!   equals the structural index, over many seeded realizations.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::index::{all_indices_with, IndexError, IndexOptions, SecurityIndex};
use crate::linking::{LinkingError, LinkingSolver};
use crate::model::{build_attack_graph, AttackGraph, StructuredSystem, VertexId};
use crate::oracle::{derive_seed, GenericRankEstimator, NumericIndexer, OracleError, RankProbe};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Linking(#[from] LinkingError),
    #[error("threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Realizations for the genericity check.
    pub trials: usize,
    /// Realizations per generic-rank estimate.
    pub rank_trials: usize,
    pub frequencies: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub cap: usize,
    /// Subsets checked for rank/linking agreement; all subsets when the
    /// attack set admits no more than this many.
    pub max_rank_subsets: usize,
    pub rank_threshold: f64,
    pub index_threshold: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 50,
            rank_trials: 3,
            frequencies: 3,
            tolerance: 1e-9,
            seed: 0,
            cap: crate::index::DEFAULT_ENUMERATION_CAP,
            max_rank_subsets: 4096,
            rank_threshold: 1.0,
            index_threshold: 0.98,
        }
    }
}

impl VerifyConfig {
    fn probe(&self, trials: usize, stream: u64) -> RankProbe {
        RankProbe {
            frequencies: self.frequencies,
            tolerance: self.tolerance,
            trials,
            seed: derive_seed(self.seed, stream),
            ..RankProbe::default()
        }
    }

    /// Probe whose realizations drive the rank/linking check.
    pub fn rank_probe(&self) -> RankProbe {
        self.probe(self.rank_trials, 0)
    }

    /// Probe whose realizations drive the genericity check.
    pub fn index_probe(&self) -> RankProbe {
        self.probe(self.trials, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentAgreement {
    pub component: VertexId,
    pub structural: SecurityIndex,
    pub agreed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub vertices: usize,
    pub edges: usize,
    pub rank_checked: usize,
    pub rank_agreed: usize,
    pub rank_mismatches: Vec<(Vec<VertexId>, usize, usize)>,
    pub index_pairs: usize,
    pub index_agreed: usize,
    pub realizations: usize,
    pub identical_vectors: usize,
    pub components: Vec<ComponentAgreement>,
    pub rank_threshold: f64,
    pub index_threshold: f64,
}

fn rate(agreed: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        agreed as f64 / total as f64
    }
}

impl VerifySummary {
    pub fn rank_rate(&self) -> f64 {
        rate(self.rank_agreed, self.rank_checked)
    }

    pub fn index_rate(&self) -> f64 {
        rate(self.index_agreed, self.index_pairs)
    }

    pub fn passed(&self) -> bool {
        self.rank_rate() >= self.rank_threshold && self.index_rate() >= self.index_threshold
    }

    pub fn render(&self, graph: &AttackGraph) -> String {
        let name = |v: VertexId| graph.name(v).unwrap_or("?").to_string();
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "structure: {} vertices, {} edges, {} attackable components",
            self.vertices,
            self.edges,
            self.components.len()
        );
        let _ = writeln!(
            out,
            "rank/linking agreement: {}/{} subsets ({:.2}%) threshold {:.2}% {}",
            self.rank_agreed,
            self.rank_checked,
            100.0 * self.rank_rate(),
            100.0 * self.rank_threshold,
            verdict(self.rank_rate() >= self.rank_threshold)
        );
        for (subset, numeric, structural) in &self.rank_mismatches {
            let names: Vec<String> = subset.iter().map(|&v| name(v)).collect();
            let _ = writeln!(
                out,
                "  mismatch {{{}}}: numeric rank {numeric}, linking size {structural}",
                names.join(", ")
            );
        }
        let _ = writeln!(
            out,
            "index agreement: {}/{} pairs ({:.2}%) threshold {:.2}% {}",
            self.index_agreed,
            self.index_pairs,
            100.0 * self.index_rate(),
            100.0 * self.index_threshold,
            verdict(self.index_rate() >= self.index_threshold)
        );
        let _ = writeln!(
            out,
            "identical index vectors: {}/{} realizations",
            self.identical_vectors, self.realizations
        );
        for c in &self.components {
            let _ = writeln!(
                out,
                "  {}: structural {}, agreement {}/{}",
                name(c.component),
                c.structural,
                c.agreed,
                c.total
            );
        }
        let _ = writeln!(out, "verdict: {}", verdict(self.passed()));
        out
    }
}

/// Attack-set subsets (as bit masks) for the rank check, in increasing
/// order: all of them, or a seeded sample when there are too many.
fn rank_subsets(size: usize, limit: usize, seed: u64) -> Vec<u64> {
    if size < 63 && (1u64 << size) as usize <= limit {
        return (0..1u64 << size).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let mut masks: Vec<u64> = (0..limit)
        .map(|_| {
            sample(&mut rng, size, size / 2 + 1)
                .into_iter()
                .fold(0u64, |m, k| m | 1 << k)
        })
        .collect();
    masks.sort_unstable();
    masks.dedup();
    masks
}

pub fn verify_structure(
    system: &StructuredSystem,
    config: &VerifyConfig,
) -> Result<VerifySummary, VerifyError> {
    for t in [config.rank_threshold, config.index_threshold] {
        if !(0.0..=1.0).contains(&t) {
            return Err(VerifyError::InvalidThreshold(t));
        }
    }
    let graph = build_attack_graph(system);
    let attack = graph.attack_set();
    let options = IndexOptions {
        cap: config.cap,
        parallel: true,
    };

    // rank/linking agreement
    let estimator = GenericRankEstimator::new(system, &config.rank_probe())?;
    let mut solver = LinkingSolver::new(&graph);
    let mut rank_checked = 0;
    let mut rank_agreed = 0;
    let mut rank_mismatches = Vec::new();
    for mask in rank_subsets(attack.len(), config.max_rank_subsets, config.seed) {
        let subset: Vec<VertexId> = (0..attack.len())
            .filter(|&k| mask >> k & 1 == 1)
            .map(|k| attack[k])
            .collect();
        let numeric = estimator.rank(&subset)?;
        let structural = solver.max_linking_size(&subset, graph.targets())?;
        rank_checked += 1;
        if numeric == structural {
            rank_agreed += 1;
        } else {
            rank_mismatches.push((subset, numeric, structural));
        }
    }

    // index genericity
    let report = all_indices_with(&graph, &options);
    let structural: Vec<SecurityIndex> = report
        .results
        .into_iter()
        .map(|r| r.outcome.map(|o| o.index))
        .collect::<Result<_, _>>()?;
    let probe = config.index_probe();
    probe.validate()?;
    let vectors: Vec<Vec<SecurityIndex>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let r = probe.realization(system, trial)?;
            NumericIndexer::new(&r, &probe, config.cap)?.all()
        })
        .collect::<Result<_, OracleError>>()?;

    let mut components: Vec<ComponentAgreement> = attack
        .iter()
        .zip(&structural)
        .map(|(&component, &index)| ComponentAgreement {
            component,
            structural: index,
            agreed: 0,
            total: 0,
        })
        .collect();
    let mut identical_vectors = 0;
    for vector in &vectors {
        if *vector == structural {
            identical_vectors += 1;
        }
        for (c, numeric) in components.iter_mut().zip(vector) {
            c.total += 1;
            if *numeric == c.structural {
                c.agreed += 1;
            }
        }
    }

    Ok(VerifySummary {
        vertices: graph.vertex_count(),
        edges: graph.edge_count(),
        rank_checked,
        rank_agreed,
        rank_mismatches,
        index_pairs: components.iter().map(|c| c.total).sum(),
        index_agreed: components.iter().map(|c| c.agreed).sum(),
        realizations: vectors.len(),
        identical_vectors,
        components,
        rank_threshold: config.rank_threshold,
        index_threshold: config.index_threshold,
    })
}
