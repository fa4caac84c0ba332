//! Numerical ground truth for the structural results.
//!
//! Free parameters are drawn at random, the transfer matrix
//! `G(z) = C (zI - W)^{-1} B_a + D_a` is evaluated at random complex
//! frequencies, and ranks are read off singular values. Generic normal rank
//! is the maximum over realizations and frequencies.

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::index::{candidate_subsets, SecurityIndex, DEFAULT_ENUMERATION_CAP};
use crate::model::{build_attack_graph, StructuredSystem, VertexId};

pub type C64 = Complex<f64>;

/// Smallest accepted singular value of `zI - W` when sampling frequencies.
const EIGEN_MARGIN: f64 = 0.05;
const MAX_FREQUENCY_ATTEMPTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("parameter range requires 0 < low < high, got [{low}, {high}]")]
    InvalidRange { low: f64, high: f64 },
    #[error("invalid rank probe: {0}")]
    InvalidProbe(String),
    #[error("zI - W is numerically singular at z = {0}; resample the frequency")]
    SingularPencil(C64),
    #[error("{0} is not a column of the realization")]
    UnknownColumn(VertexId),
    #[error("attack set has {size} components, above the enumeration cap of {cap}")]
    CapExceeded { size: usize, cap: usize },
}

/// SplitMix64 step; derives independent per-task seeds from a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Numerical system `(W, B_a, C, D_a)`; columns of `B_a` and `D_a` follow
/// the attack-set order.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub w: DMatrix<f64>,
    pub b_a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d_a: DMatrix<f64>,
    pub seed: u64,
    attack_set: Vec<VertexId>,
}

impl Realization {
    pub fn attack_set(&self) -> &[VertexId] {
        &self.attack_set
    }

    pub fn column_of(&self, component: VertexId) -> Result<usize, OracleError> {
        self.attack_set
            .iter()
            .position(|&v| v == component)
            .ok_or(OracleError::UnknownColumn(component))
    }

    fn columns_of(&self, components: &[VertexId]) -> Result<Vec<usize>, OracleError> {
        let mut cols = components
            .iter()
            .map(|&v| self.column_of(v))
            .collect::<Result<Vec<_>, _>>()?;
        cols.sort_unstable();
        cols.dedup();
        Ok(cols)
    }
}

/// Draws every free parameter uniformly from `±[low, high]`; dedicated
/// sensor-attack entries of `D_a` are fixed to one and every other entry is
/// exactly zero.
pub fn sample_realization(
    system: &StructuredSystem,
    seed: u64,
    low: f64,
    high: f64,
) -> Result<Realization, OracleError> {
    if !(low > 0.0 && low < high && high.is_finite()) {
        return Err(OracleError::InvalidRange { low, high });
    }
    let graph = build_attack_graph(system);
    let n = system.state_count();
    let m = system.sensor_count();
    let q = system.actuator_count();
    let p = graph.attack_set().len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let magnitude = rng.random_range(low..=high);
        if rng.random_bool(0.5) {
            magnitude
        } else {
            -magnitude
        }
    };

    let mut w = DMatrix::zeros(n, n);
    for &(from, to) in system.w_edges() {
        w[(to, from)] = draw();
    }
    let mut b_a = DMatrix::zeros(n, p);
    for &(actuator, state) in system.b_edges() {
        b_a[(state, actuator)] = draw();
    }
    let mut c = DMatrix::zeros(m, n);
    for &(state, sensor) in system.c_edges() {
        c[(sensor, state)] = draw();
    }
    let mut d_a = DMatrix::zeros(m, p);
    for (k, &attack) in graph.attack_set()[q..].iter().enumerate() {
        let sensor = graph.attacked_sensor(attack).expect("sensor-attack vertex");
        d_a[(sensor.ordinal, q + k)] = 1.0;
    }

    Ok(Realization {
        w,
        b_a,
        c,
        d_a,
        seed,
        attack_set: graph.attack_set().to_vec(),
    })
}

/// Evaluation protocol for numerical ranks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankProbe {
    /// Number of frequencies per realization.
    pub frequencies: usize,
    /// Relative singular-value cutoff.
    pub tolerance: f64,
    /// Number of realizations for generic-rank estimates.
    pub trials: usize,
    pub seed: u64,
    /// Inner and outer radius of the frequency annulus.
    pub annulus: (f64, f64),
    /// Magnitude range of free parameters.
    pub parameters: (f64, f64),
}

impl Default for RankProbe {
    fn default() -> Self {
        Self {
            frequencies: 3,
            tolerance: 1e-9,
            trials: 3,
            seed: 0,
            annulus: (1.5, 2.5),
            parameters: (0.5, 1.5),
        }
    }
}

impl RankProbe {
    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(OracleError::InvalidProbe(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.trials == 0 {
            return Err(OracleError::InvalidProbe(
                "trials must be at least 1".into(),
            ));
        }
        if self.frequencies == 0 {
            return Err(OracleError::InvalidProbe(
                "at least one frequency is required".into(),
            ));
        }
        let (inner, outer) = self.annulus;
        if !(inner > 0.0 && inner <= outer && outer.is_finite()) {
            return Err(OracleError::InvalidProbe(format!(
                "annulus must satisfy 0 < inner <= outer, got ({inner}, {outer})"
            )));
        }
        let (low, high) = self.parameters;
        if !(low > 0.0 && low < high && high.is_finite()) {
            return Err(OracleError::InvalidRange { low, high });
        }
        Ok(())
    }

    /// Realization used for trial `trial`.
    pub fn realization(
        &self,
        system: &StructuredSystem,
        trial: u64,
    ) -> Result<Realization, OracleError> {
        let (low, high) = self.parameters;
        sample_realization(system, derive_seed(self.seed, trial), low, high)
    }
}

fn shifted(w: &DMatrix<f64>, z: C64) -> DMatrix<C64> {
    let n = w.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let entry = C64::new(-w[(i, j)], 0.0);
        if i == j {
            entry + z
        } else {
            entry
        }
    })
}

fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

fn numerical_rank(m: &DMatrix<C64>, reference: f64, tolerance: f64) -> usize {
    if reference <= 0.0 {
        return 0;
    }
    singular_values(m)
        .into_iter()
        .filter(|&s| s > tolerance * reference)
        .count()
}

/// Frequencies on the probe annulus kept away from the spectrum of `W`.
/// Deterministic in the realization seed and the probe seed.
pub fn sample_frequencies(r: &Realization, probe: &RankProbe) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(r.seed, probe.seed ^ 0xF00D));
    let (inner, outer) = probe.annulus;
    let n = r.w.nrows();
    (0..probe.frequencies)
        .map(|_| {
            let mut best = (f64::NEG_INFINITY, C64::new(inner, 0.0));
            for _ in 0..MAX_FREQUENCY_ATTEMPTS {
                let radius = rng.random_range(inner * inner..=outer * outer).sqrt();
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let z = C64::from_polar(radius, angle);
                let margin = if n == 0 {
                    f64::INFINITY
                } else {
                    singular_values(&shifted(&r.w, z))
                        .into_iter()
                        .fold(f64::INFINITY, f64::min)
                };
                if margin > best.0 {
                    best = (margin, z);
                }
                if margin >= EIGEN_MARGIN {
                    break;
                }
            }
            best.1
        })
        .collect()
}

/// `G(z)` for all attack columns at a single frequency.
#[derive(Debug, Clone)]
pub struct TransferEvaluation {
    pub z: C64,
    pub matrix: DMatrix<C64>,
    /// Largest singular value of the full matrix; the rank cutoff is taken
    /// relative to it so that structurally zero column blocks stay rank 0.
    pub scale: f64,
}

impl TransferEvaluation {
    pub fn new(r: &Realization, z: C64) -> Result<Self, OracleError> {
        let n = r.w.nrows();
        let a = shifted(&r.w, z);
        let sv = singular_values(&a);
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
        if n > 0 && (lo.is_nan() || lo <= 1e-12 * hi.max(1.0)) {
            return Err(OracleError::SingularPencil(z));
        }
        let b = r.b_a.map(|x| C64::new(x, 0.0));
        let c = r.c.map(|x| C64::new(x, 0.0));
        let d = r.d_a.map(|x| C64::new(x, 0.0));
        let x = if n > 0 {
            a.lu().solve(&b).ok_or(OracleError::SingularPencil(z))?
        } else {
            b
        };
        let matrix = c * x + d;
        let scale = singular_values(&matrix).into_iter().fold(0.0, f64::max);
        Ok(Self { z, matrix, scale })
    }

    /// Rank of the sub-matrix made of the given column positions.
    pub fn rank_of(&self, columns: &[usize], tolerance: f64) -> usize {
        if columns.is_empty() {
            return 0;
        }
        let sub = self.matrix.select_columns(columns);
        numerical_rank(&sub, self.scale, tolerance)
    }
}

/// Numerical rank of `G(z)` restricted to `columns`.
pub fn transfer_rank(
    r: &Realization,
    columns: &[VertexId],
    z: C64,
    tolerance: f64,
) -> Result<usize, OracleError> {
    let cols = r.columns_of(columns)?;
    if cols.is_empty() {
        return Ok(0);
    }
    Ok(TransferEvaluation::new(r, z)?.rank_of(&cols, tolerance))
}

/// Numerical rank of the pencil `[W - zI, B_a; C, D_a]` restricted to the
/// given attack columns. Equals `N + rank G(z)` whenever `zI - W` is
/// invertible.
pub fn pencil_rank(
    r: &Realization,
    columns: &[VertexId],
    z: C64,
    tolerance: f64,
) -> Result<usize, OracleError> {
    let cols = r.columns_of(columns)?;
    let n = r.w.nrows();
    let m = r.c.nrows();
    let k = cols.len();
    let a = shifted(&r.w, z);
    let pencil = DMatrix::from_fn(n + m, n + k, |i, j| match (i < n, j < n) {
        (true, true) => -a[(i, j)],
        (true, false) => C64::new(r.b_a[(i, cols[j - n])], 0.0),
        (false, true) => C64::new(r.c[(i - n, j)], 0.0),
        (false, false) => C64::new(r.d_a[(i - n, cols[j - n])], 0.0),
    });
    let reference = singular_values(&pencil).into_iter().fold(0.0, f64::max);
    Ok(numerical_rank(&pencil, reference, tolerance))
}

/// Transfer matrices of one realization at every probe frequency.
pub fn evaluate_probe(
    r: &Realization,
    probe: &RankProbe,
) -> Result<Vec<TransferEvaluation>, OracleError> {
    sample_frequencies(r, probe)
        .into_iter()
        .map(|z| TransferEvaluation::new(r, z))
        .collect()
}

/// Transfer evaluations for `probe.trials` realizations of one structure,
/// reusable across many column subsets.
#[derive(Debug)]
pub struct GenericRankEstimator {
    attack_set: Vec<VertexId>,
    evaluations: Vec<TransferEvaluation>,
    tolerance: f64,
}

impl GenericRankEstimator {
    pub fn new(system: &StructuredSystem, probe: &RankProbe) -> Result<Self, OracleError> {
        probe.validate()?;
        let mut evaluations = Vec::with_capacity(probe.trials * probe.frequencies);
        let mut attack_set = Vec::new();
        for trial in 0..probe.trials as u64 {
            let r = probe.realization(system, trial)?;
            evaluations.extend(evaluate_probe(&r, probe)?);
            attack_set = r.attack_set;
        }
        Ok(Self {
            attack_set,
            evaluations,
            tolerance: probe.tolerance,
        })
    }

    /// Maximum rank of the selected columns over all evaluations.
    pub fn rank(&self, columns: &[VertexId]) -> Result<usize, OracleError> {
        let mut cols = columns
            .iter()
            .map(|&v| {
                self.attack_set
                    .iter()
                    .position(|&a| a == v)
                    .ok_or(OracleError::UnknownColumn(v))
            })
            .collect::<Result<Vec<_>, _>>()?;
        cols.sort_unstable();
        cols.dedup();
        Ok(self
            .evaluations
            .iter()
            .map(|e| e.rank_of(&cols, self.tolerance))
            .max()
            .unwrap_or(0))
    }
}

/// Empirical generic normal rank: the maximum of the transfer rank over
/// `probe.trials` realizations and `probe.frequencies` frequencies each.
pub fn generic_normal_rank(
    system: &StructuredSystem,
    columns: &[VertexId],
    probe: &RankProbe,
) -> Result<usize, OracleError> {
    GenericRankEstimator::new(system, probe)?.rank(columns)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericIndexResult {
    pub component: VertexId,
    pub index: SecurityIndex,
    pub witness: Option<Vec<VertexId>>,
}

/// Realization-level security index of every attack column, sharing
/// frequency evaluations and rank computations across components.
#[derive(Debug)]
pub struct NumericIndexer<'r> {
    realization: &'r Realization,
    evaluations: Vec<TransferEvaluation>,
    tolerance: f64,
    ranks: HashMap<u64, Vec<usize>>,
}

impl<'r> NumericIndexer<'r> {
    pub fn new(
        realization: &'r Realization,
        probe: &RankProbe,
        cap: usize,
    ) -> Result<Self, OracleError> {
        probe.validate()?;
        let size = realization.attack_set.len();
        if size > cap || size >= 64 {
            return Err(OracleError::CapExceeded { size, cap });
        }
        Ok(Self {
            realization,
            evaluations: evaluate_probe(realization, probe)?,
            tolerance: probe.tolerance,
            ranks: HashMap::new(),
        })
    }

    fn ranks(&mut self, mask: u64) -> &[usize] {
        let (evaluations, tolerance) = (&self.evaluations, self.tolerance);
        self.ranks.entry(mask).or_insert_with(|| {
            let cols: Vec<usize> = (0..64).filter(|&k| mask >> k & 1 == 1).collect();
            evaluations
                .iter()
                .map(|e| e.rank_of(&cols, tolerance))
                .collect()
        })
    }

    /// Smallest `p` such that some subset of size `p` containing the
    /// component has a column set whose rank does not drop when the
    /// component's column is removed, at every probe frequency.
    pub fn index_of(&mut self, component: VertexId) -> Result<NumericIndexResult, OracleError> {
        let position = self.realization.column_of(component)?;
        let attack = self.realization.attack_set.clone();
        for p in 1..=attack.len() {
            for subset in candidate_subsets(&attack, position, p) {
                let mask = subset
                    .iter()
                    .map(|&v| 1u64 << self.realization.column_of(v).expect("member"))
                    .fold(0, |acc, bit| acc | bit);
                let with = self.ranks(mask).to_vec();
                let without = self.ranks(mask & !(1u64 << position));
                if with.iter().zip(without).all(|(a, b)| a == b) {
                    return Ok(NumericIndexResult {
                        component,
                        index: SecurityIndex::Finite(p),
                        witness: Some(subset),
                    });
                }
            }
        }
        Ok(NumericIndexResult {
            component,
            index: SecurityIndex::Infinite,
            witness: None,
        })
    }

    pub fn all(&mut self) -> Result<Vec<SecurityIndex>, OracleError> {
        let attack = self.realization.attack_set.clone();
        attack
            .into_iter()
            .map(|v| self.index_of(v).map(|r| r.index))
            .collect()
    }
}

pub fn numeric_security_index(
    r: &Realization,
    component: VertexId,
    probe: &RankProbe,
) -> Result<NumericIndexResult, OracleError> {
    NumericIndexer::new(r, probe, DEFAULT_ENUMERATION_CAP)?.index_of(component)
}
