//! Random degree-k skill clusters and error sets.
//!
//! A cluster is a bipartite multigraph: every text-piece holds exactly k
//! skill endpoints drawn iid (with replacement) from the skill measure.
//! Duplicate endpoints are kept and counted with multiplicity; at realistic
//! skill counts they occur with probability O(1/N2). Construction is
//! single-writer; afterwards a cluster is immutable and safely shared
//! across threads.

mod bound;
mod profile;
mod recombine;

pub use bound::{enumerate_worst_y, expected_bad_pairs_log_bound, WorstCase, ENUMERATION_BUDGET};
pub use profile::{
    linearity_counterexample, linearity_gap, skill_error_profile, verify_mixing_guarantee,
    GuaranteeCheck, LinearityGap, SkillErrorRecord,
};
pub use recombine::{
    measure_classes, recombine, tuple_competence, MeasureClass, MeasureClasses, Recombination,
};

use std::sync::OnceLock;

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::{Distribution, EntropyError};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cluster needs at least one skill")]
    NoSkills,
    #[error("cluster needs at least one piece")]
    NoPieces,
    #[error("k must be at least 1")]
    KZero,
    #[error("{what} has {got} entries, cluster has {expected}")]
    MeasureLength {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("skill {skill} has zero measure but full coverage was requested")]
    ZeroMeasureSkill { skill: usize },
    #[error("theta must lie strictly inside (0, 1), got {0}")]
    Theta(f64),
    #[error("alpha must lie strictly inside (0, 1), got {0}")]
    Alpha(f64),
    #[error("(alpha, beta) must satisfy beta > 1 and alpha*beta < 1, got ({alpha}, {beta})")]
    AlphaBeta { alpha: f64, beta: f64 },
    #[error(
        "piece {piece}: selection probability theta*mu2*n1 = {probability} exceeds 1 \
         (piece measure too large relative to theta)"
    )]
    PieceTooHeavy { piece: usize, probability: f64 },
    #[error("enumeration budget exceeded: C({pieces}, {flagged}) > {budget}")]
    EnumerationBudget {
        pieces: usize,
        flagged: usize,
        budget: u64,
    },
    #[error("rounded count {count} exceeds its ceiling {ceiling} ({what})")]
    CountNotRepresentable {
        what: &'static str,
        count: u64,
        ceiling: u64,
    },
    #[error("kprime must be at least 1")]
    KPrimeZero,
    #[error("recombination needs at least one complete group: kprime {kprime} > pieces {pieces}")]
    RecombineTooFew { kprime: usize, pieces: usize },
    #[error("tuple must hold 1..=k distinct skill indices below {num_skills}")]
    BadTuple { num_skills: usize },
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("no skill has a non-empty piece neighborhood")]
    NoTargetNeighborhood,
    #[error("invalid measure: {0}")]
    Measure(#[from] EntropyError),
    #[error("piece {piece} has {got} endpoints, cluster k is {expected}")]
    EdgeCountMismatch {
        piece: usize,
        got: usize,
        expected: usize,
    },
    #[error("piece {piece} references skill {skill}, cluster has {num_skills} skills")]
    SkillIndexOutOfRange {
        piece: usize,
        skill: u32,
        num_skills: usize,
    },
    #[error("error set: {0}")]
    BadErrorSet(String),
}

/// Round half away from zero ("ties up") — the one rounding rule used for
/// every fractional count in this module.
pub fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

/// Generation parameters for a cluster. `None` measures mean uniform.
#[derive(Debug, Clone)]
pub struct ClusterConfig {
    pub num_skills: usize,
    pub num_pieces: usize,
    pub k: usize,
    pub skill_measure: Option<Distribution>,
    pub piece_measure: Option<Distribution>,
    /// When set, generation fails on zero-measure skills, which could never
    /// be covered by any number of pieces.
    pub require_full_coverage: bool,
    pub seed: u64,
}

impl ClusterConfig {
    pub fn uniform(num_skills: usize, num_pieces: usize, k: usize, seed: u64) -> Self {
        Self {
            num_skills,
            num_pieces,
            k,
            skill_measure: None,
            piece_measure: None,
            require_full_coverage: false,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
struct SkillIndex {
    /// Per skill: incident pieces, one entry per edge (multiplicity kept),
    /// ascending.
    edge_pieces: Vec<Vec<u32>>,
    /// Per skill: distinct incident pieces, ascending.
    pieces: Vec<Vec<u32>>,
}

/// Immutable degree-k skill cluster.
#[derive(Debug)]
pub struct SkillCluster {
    num_skills: usize,
    num_pieces: usize,
    k: usize,
    skill_measure: Distribution,
    piece_measure: Distribution,
    /// Piece-major endpoint list, exactly k entries per piece.
    endpoints: Vec<u32>,
    seed: u64,
    index: OnceLock<SkillIndex>,
}

impl Clone for SkillCluster {
    fn clone(&self) -> Self {
        Self {
            num_skills: self.num_skills,
            num_pieces: self.num_pieces,
            k: self.k,
            skill_measure: self.skill_measure.clone(),
            piece_measure: self.piece_measure.clone(),
            endpoints: self.endpoints.clone(),
            seed: self.seed,
            index: OnceLock::new(),
        }
    }
}

impl PartialEq for SkillCluster {
    fn eq(&self, other: &Self) -> bool {
        self.num_skills == other.num_skills
            && self.num_pieces == other.num_pieces
            && self.k == other.k
            && self.skill_measure == other.skill_measure
            && self.piece_measure == other.piece_measure
            && self.endpoints == other.endpoints
            && self.seed == other.seed
    }
}

impl SkillCluster {
    /// Draws a cluster: for each piece, k iid endpoints from the skill
    /// measure. Deterministic in the seed.
    pub fn generate(config: &ClusterConfig) -> Result<Self, GraphError> {
        if config.num_skills == 0 {
            return Err(GraphError::NoSkills);
        }
        if config.num_pieces == 0 {
            return Err(GraphError::NoPieces);
        }
        if config.k == 0 {
            return Err(GraphError::KZero);
        }
        let skill_measure = match &config.skill_measure {
            Some(m) => {
                if m.len() != config.num_skills {
                    return Err(GraphError::MeasureLength {
                        what: "skill measure",
                        got: m.len(),
                        expected: config.num_skills,
                    });
                }
                m.clone()
            }
            None => Distribution::uniform(config.num_skills),
        };
        let piece_measure = match &config.piece_measure {
            Some(m) => {
                if m.len() != config.num_pieces {
                    return Err(GraphError::MeasureLength {
                        what: "piece measure",
                        got: m.len(),
                        expected: config.num_pieces,
                    });
                }
                m.clone()
            }
            None => Distribution::uniform(config.num_pieces),
        };
        if config.require_full_coverage {
            if let Some(skill) = skill_measure.as_slice().iter().position(|&w| w == 0.0) {
                return Err(GraphError::ZeroMeasureSkill { skill });
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut endpoints = Vec::with_capacity(config.num_pieces * config.k);
        if skill_measure.is_uniform() {
            let n2 = config.num_skills as u32;
            for _ in 0..config.num_pieces * config.k {
                endpoints.push(rng.gen_range(0..n2));
            }
        } else {
            // WeightedIndex rejects all-zero weights; Distribution already
            // guarantees total mass one.
            let sampler = WeightedIndex::new(skill_measure.as_slice())
                .expect("validated measure is a valid weight vector");
            for _ in 0..config.num_pieces * config.k {
                endpoints.push(sampler.sample(&mut rng) as u32);
            }
        }

        Ok(Self {
            num_skills: config.num_skills,
            num_pieces: config.num_pieces,
            k: config.k,
            skill_measure,
            piece_measure,
            endpoints,
            seed: config.seed,
            index: OnceLock::new(),
        })
    }

    /// Uniform-measure convenience constructor.
    pub fn uniform(
        num_skills: usize,
        num_pieces: usize,
        k: usize,
        seed: u64,
    ) -> Result<Self, GraphError> {
        Self::generate(&ClusterConfig::uniform(num_skills, num_pieces, k, seed))
    }

    /// Rebuilds a cluster from explicit parts, validating every structural
    /// invariant. Used by deserialization and by recombination.
    pub fn from_parts(
        k: usize,
        skill_measure: Distribution,
        piece_measure: Distribution,
        edges: &[Vec<u32>],
        seed: u64,
    ) -> Result<Self, GraphError> {
        let num_skills = skill_measure.len();
        let num_pieces = piece_measure.len();
        if num_skills == 0 {
            return Err(GraphError::NoSkills);
        }
        if num_pieces == 0 || edges.is_empty() {
            return Err(GraphError::NoPieces);
        }
        if k == 0 {
            return Err(GraphError::KZero);
        }
        if edges.len() != num_pieces {
            return Err(GraphError::MeasureLength {
                what: "piece measure",
                got: num_pieces,
                expected: edges.len(),
            });
        }
        let mut endpoints = Vec::with_capacity(num_pieces * k);
        for (piece, list) in edges.iter().enumerate() {
            if list.len() != k {
                return Err(GraphError::EdgeCountMismatch {
                    piece,
                    got: list.len(),
                    expected: k,
                });
            }
            for &skill in list {
                if skill as usize >= num_skills {
                    return Err(GraphError::SkillIndexOutOfRange {
                        piece,
                        skill,
                        num_skills,
                    });
                }
                endpoints.push(skill);
            }
        }
        Ok(Self {
            num_skills,
            num_pieces,
            k,
            skill_measure,
            piece_measure,
            endpoints,
            seed,
            index: OnceLock::new(),
        })
    }

    pub fn num_skills(&self) -> usize {
        self.num_skills
    }

    pub fn num_pieces(&self) -> usize {
        self.num_pieces
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn skill_measure(&self) -> &Distribution {
        &self.skill_measure
    }

    pub fn piece_measure(&self) -> &Distribution {
        &self.piece_measure
    }

    /// The k endpoints of one piece (duplicates kept).
    pub fn piece_endpoints(&self, piece: usize) -> &[u32] {
        &self.endpoints[piece * self.k..(piece + 1) * self.k]
    }

    /// Pieces-to-skills ratio; the guarantees are asymptotic in this.
    pub fn piece_skill_ratio(&self) -> f64 {
        self.num_pieces as f64 / self.num_skills as f64
    }

    fn index(&self) -> &SkillIndex {
        self.index.get_or_init(|| {
            let mut edge_pieces = vec![Vec::new(); self.num_skills];
            for piece in 0..self.num_pieces {
                for &s in self.piece_endpoints(piece) {
                    edge_pieces[s as usize].push(piece as u32);
                }
            }
            let pieces = edge_pieces
                .iter()
                .map(|v| {
                    let mut d = v.clone();
                    d.dedup();
                    d
                })
                .collect();
            SkillIndex {
                edge_pieces,
                pieces,
            }
        })
    }

    /// Incident pieces of a skill, one entry per edge, ascending.
    pub fn skill_edge_pieces(&self, skill: usize) -> &[u32] {
        &self.index().edge_pieces[skill]
    }

    /// Distinct incident pieces of a skill, ascending.
    pub fn skill_pieces(&self, skill: usize) -> &[u32] {
        &self.index().pieces[skill]
    }

    /// Skill with the largest distinct piece neighborhood, ties to the
    /// lowest index; `None` when every neighborhood is empty.
    pub fn largest_neighborhood_skill(&self) -> Option<u32> {
        let index = self.index();
        let best = (0..self.num_skills).max_by(|&a, &b| {
            index.pieces[a]
                .len()
                .cmp(&index.pieces[b].len())
                .then(b.cmp(&a))
        })?;
        if index.pieces[best].is_empty() {
            None
        } else {
            Some(best as u32)
        }
    }

    /// Per-skill gap between the piece-measure of the skill's neighborhood
    /// and the skill's own measure. Finite iid sampling cannot make these
    /// marginals match exactly; they are reported, not enforced.
    pub fn marginal_discrepancies(&self) -> Vec<f64> {
        (0..self.num_skills)
            .map(|s| {
                let neighborhood: f64 = self
                    .skill_pieces(s)
                    .iter()
                    .map(|&t| self.piece_measure.get(t as usize))
                    .sum();
                neighborhood - self.skill_measure.get(s)
            })
            .collect()
    }
}

/// JSON container format for clusters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterFile {
    pub num_skills: usize,
    pub num_pieces: usize,
    pub k: usize,
    pub seed: u64,
    pub skill_measure: Vec<f64>,
    pub piece_measure: Vec<f64>,
    /// Skill indices per piece, exactly k entries each.
    pub edges: Vec<Vec<u32>>,
}

impl From<&SkillCluster> for ClusterFile {
    fn from(cluster: &SkillCluster) -> Self {
        ClusterFile {
            num_skills: cluster.num_skills,
            num_pieces: cluster.num_pieces,
            k: cluster.k,
            seed: cluster.seed,
            skill_measure: cluster.skill_measure.as_slice().to_vec(),
            piece_measure: cluster.piece_measure.as_slice().to_vec(),
            edges: (0..cluster.num_pieces)
                .map(|p| cluster.piece_endpoints(p).to_vec())
                .collect(),
        }
    }
}

impl Serialize for SkillCluster {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ClusterFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SkillCluster {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = ClusterFile::deserialize(deserializer)?;
        SkillCluster::try_from(file).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<ClusterFile> for SkillCluster {
    type Error = GraphError;

    fn try_from(file: ClusterFile) -> Result<Self, GraphError> {
        if file.skill_measure.len() != file.num_skills {
            return Err(GraphError::MeasureLength {
                what: "skill measure",
                got: file.skill_measure.len(),
                expected: file.num_skills,
            });
        }
        if file.piece_measure.len() != file.num_pieces {
            return Err(GraphError::MeasureLength {
                what: "piece measure",
                got: file.piece_measure.len(),
                expected: file.num_pieces,
            });
        }
        let skill_measure = Distribution::new(file.skill_measure)?;
        let piece_measure = Distribution::new(file.piece_measure)?;
        SkillCluster::from_parts(file.k, skill_measure, piece_measure, &file.edges, file.seed)
    }
}

/// How an error set is placed on a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// Exactly round(θ·N1) pieces, uniformly without replacement.
    #[default]
    UniformRandom,
    /// Each piece independently with probability θ·μ2(t)·N1 (the sampler
    /// from the general-measure argument); the flagged count concentrates
    /// at θ·N1.
    MeasureWeighted,
    /// Deterministic worst-case stress: flood the most-connected skill's
    /// neighborhood first, preferring pieces that touch few distinct skills.
    AdversarialGreedy,
}

/// A subset Y of pieces together with its piece-measure θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ErrorSetFile", into = "ErrorSetFile")]
pub struct ErrorSet {
    flags: Vec<bool>,
    measure: f64,
}

impl ErrorSet {
    pub fn from_flags(cluster: &SkillCluster, flags: Vec<bool>) -> Result<Self, GraphError> {
        if flags.len() != cluster.num_pieces() {
            return Err(GraphError::BadErrorSet(format!(
                "flag vector has {} entries, cluster has {} pieces",
                flags.len(),
                cluster.num_pieces()
            )));
        }
        let measure = flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(t, _)| cluster.piece_measure().get(t))
            .sum();
        Ok(Self { flags, measure })
    }

    pub fn from_pieces(cluster: &SkillCluster, pieces: &[u32]) -> Result<Self, GraphError> {
        let mut flags = vec![false; cluster.num_pieces()];
        for &t in pieces {
            if t as usize >= flags.len() {
                return Err(GraphError::BadErrorSet(format!(
                    "piece index {t} out of range ({} pieces)",
                    flags.len()
                )));
            }
            flags[t as usize] = true;
        }
        Self::from_flags(cluster, flags)
    }

    pub fn empty(cluster: &SkillCluster) -> Self {
        Self {
            flags: vec![false; cluster.num_pieces()],
            measure: 0.0,
        }
    }

    /// Total piece-measure of the flagged set.
    pub fn theta(&self) -> f64 {
        self.measure
    }

    pub fn contains(&self, piece: usize) -> bool {
        self.flags[piece]
    }

    pub fn num_pieces(&self) -> usize {
        self.flags.len()
    }

    /// Number of flagged pieces.
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Flagged piece indices, ascending.
    pub fn pieces(&self) -> Vec<u32> {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(t, _)| t as u32)
            .collect()
    }

    /// Checks the stored measure against a cluster's piece measure.
    pub fn validate_against(&self, cluster: &SkillCluster) -> Result<(), GraphError> {
        if self.flags.len() != cluster.num_pieces() {
            return Err(GraphError::BadErrorSet(format!(
                "error set covers {} pieces, cluster has {}",
                self.flags.len(),
                cluster.num_pieces()
            )));
        }
        let expected: f64 = self
            .flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(t, _)| cluster.piece_measure().get(t))
            .sum();
        if (expected - self.measure).abs() > 1e-12 {
            return Err(GraphError::BadErrorSet(format!(
                "stored theta {} differs from flagged measure {}",
                self.measure, expected
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ErrorSetFile {
    num_pieces: usize,
    theta: f64,
    pieces: Vec<u32>,
}

impl From<ErrorSet> for ErrorSetFile {
    fn from(set: ErrorSet) -> Self {
        ErrorSetFile {
            num_pieces: set.num_pieces(),
            theta: set.theta(),
            pieces: set.pieces(),
        }
    }
}

impl TryFrom<ErrorSetFile> for ErrorSet {
    type Error = GraphError;

    fn try_from(file: ErrorSetFile) -> Result<Self, GraphError> {
        let mut flags = vec![false; file.num_pieces];
        let mut prev: Option<u32> = None;
        for &t in &file.pieces {
            if prev.is_some_and(|p| t <= p) {
                return Err(GraphError::BadErrorSet(
                    "piece indices must be strictly ascending".to_string(),
                ));
            }
            if t as usize >= file.num_pieces {
                return Err(GraphError::BadErrorSet(format!(
                    "piece index {t} out of range ({} pieces)",
                    file.num_pieces
                )));
            }
            flags[t as usize] = true;
            prev = Some(t);
        }
        Ok(ErrorSet {
            flags,
            measure: file.theta,
        })
    }
}

/// Distinct-skill count of one piece; small k, so sort in place.
fn distinct_skills(endpoints: &[u32]) -> usize {
    let mut v = endpoints.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Places an error set of target measure θ on a cluster.
pub fn sample_error_set(
    cluster: &SkillCluster,
    theta: f64,
    mode: ErrorMode,
    seed: u64,
) -> Result<ErrorSet, GraphError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(GraphError::Theta(theta));
    }
    let n1 = cluster.num_pieces();
    match mode {
        ErrorMode::UniformRandom => {
            let m = round_half_up(theta * n1 as f64) as usize;
            let m = m.min(n1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chosen = index_sample(&mut rng, n1, m);
            let mut flags = vec![false; n1];
            for t in chosen {
                flags[t] = true;
            }
            ErrorSet::from_flags(cluster, flags)
        }
        ErrorMode::MeasureWeighted => {
            let mu2 = cluster.piece_measure();
            let scale = theta * n1 as f64;
            let mut probabilities = Vec::with_capacity(n1);
            for t in 0..n1 {
                let p = scale * mu2.get(t);
                if p > 1.0 + 1e-9 {
                    return Err(GraphError::PieceTooHeavy {
                        piece: t,
                        probability: p,
                    });
                }
                probabilities.push(p.min(1.0));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let flags = probabilities.iter().map(|&p| rng.gen_bool(p)).collect();
            ErrorSet::from_flags(cluster, flags)
        }
        ErrorMode::AdversarialGreedy => {
            let m = (round_half_up(theta * n1 as f64) as usize).min(n1);
            let target = cluster
                .largest_neighborhood_skill()
                .ok_or(GraphError::NoTargetNeighborhood)?;
            let neighborhood = cluster.skill_pieces(target as usize);
            let sort_key = |&t: &u32| (distinct_skills(cluster.piece_endpoints(t as usize)), t);
            let mut order: Vec<u32> = neighborhood.to_vec();
            order.sort_by_cached_key(sort_key);
            order.truncate(m);
            if order.len() < m {
                let need = m - order.len();
                let in_neighborhood: Vec<bool> = {
                    let mut v = vec![false; n1];
                    for &t in neighborhood {
                        v[t as usize] = true;
                    }
                    v
                };
                let mut rest: Vec<(usize, u32)> = (0..n1 as u32)
                    .filter(|&t| !in_neighborhood[t as usize])
                    .map(|t| (distinct_skills(cluster.piece_endpoints(t as usize)), t))
                    .collect();
                // Only the `need` smallest keys matter; select then sort those.
                if need < rest.len() {
                    rest.select_nth_unstable(need - 1);
                    rest.truncate(need);
                }
                rest.sort_unstable();
                order.extend(rest.into_iter().map(|(_, t)| t));
            }
            ErrorSet::from_pieces(cluster, &order)
        }
    }
}
