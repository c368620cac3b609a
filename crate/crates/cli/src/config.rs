//! Run configuration: one JSON document shared by every subcommand.
//!
//! Every field has a default; the manifest records the fully materialized
//! configuration so outputs are self-describing. Unknown fields are
//! rejected rather than silently ignored.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use emergence_core::curves::{
    log_spaced_grid, CurveParams, DEFAULT_ALPHA_MAX, DEFAULT_ALPHA_MIN, DEFAULT_ALPHA_POINTS,
    MAJORITY_BETA_THETA,
};
use emergence_core::entropy::Distribution;
use emergence_core::graph::{ClusterConfig, ErrorMode};
use emergence_core::scaling::ScalingLaw;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scaling_law: ScalingLaw,
    /// Scale points a trajectory walks through, largest loss first by
    /// convention (not enforced).
    pub schedule: Vec<ScalePoint>,
    pub cluster: ClusterSettings,
    /// Tuple sizes to simulate; 1 means plain skills.
    pub tuple_sizes: Vec<u32>,
    /// Seeded simulation repetitions per scale point.
    pub trials: u32,
    /// Tuples sampled per (trial, tuple size).
    pub tuple_samples: u32,
    pub error_mode: ErrorMode,
    pub alpha_grid: AlphaGridSettings,
    pub curve_filter: CurveFilter,
    /// Curves exported by the `curve` subcommand.
    pub curves: Vec<CurveParams>,
    pub paucity: PaucitySettings,
    pub verify: VerifyBudgets,
    /// Optional cluster JSON to validate during `verify`.
    pub cluster_file: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scaling_law: ScalingLaw::default(),
            schedule: vec![
                ScalePoint::new(1e12, 1e11),
                ScalePoint::new(1e12, 1e12),
                ScalePoint::new(1e12, 1e13),
            ],
            cluster: ClusterSettings::default(),
            tuple_sizes: vec![1, 2, 4],
            trials: 8,
            tuple_samples: 200,
            error_mode: ErrorMode::default(),
            alpha_grid: AlphaGridSettings::default(),
            curve_filter: CurveFilter::default(),
            curves: vec![
                CurveParams { theta: 0.1, k: 2, kprime: 1 },
                CurveParams { theta: 0.1, k: 4, kprime: 1 },
                CurveParams { theta: 0.1, k: 8, kprime: 1 },
                CurveParams { theta: 0.1, k: 16, kprime: 1 },
                CurveParams { theta: 0.05, k: 8, kprime: 1 },
                CurveParams { theta: 0.2, k: 8, kprime: 1 },
            ],
            paucity: PaucitySettings::default(),
            verify: VerifyBudgets::default(),
            cluster_file: None,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalePoint {
    pub params: f64,
    pub tokens: f64,
    /// Overrides the scaling-law excess as the per-piece loss δ; an
    /// experiment control for pinning exact loss levels.
    #[serde(default)]
    pub delta_override: Option<f64>,
}

impl ScalePoint {
    pub fn new(params: f64, tokens: f64) -> Self {
        Self {
            params,
            tokens,
            delta_override: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub num_skills: usize,
    pub num_pieces: usize,
    pub k: usize,
    /// Explicit skill measure; omitted means uniform.
    pub skill_measure: Option<Vec<f64>>,
    pub piece_measure: Option<Vec<f64>>,
    pub require_full_coverage: bool,
    /// Warn when pieces/skills falls below this.
    pub min_piece_skill_ratio: f64,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self {
            num_skills: 1_000,
            num_pieces: 100_000,
            k: 8,
            skill_measure: None,
            piece_measure: None,
            require_full_coverage: false,
            min_piece_skill_ratio: 10.0,
        }
    }
}

impl ClusterSettings {
    pub fn to_cluster_config(&self, seed: u64) -> Result<ClusterConfig, CliError> {
        let skill_measure = self
            .skill_measure
            .clone()
            .map(Distribution::new)
            .transpose()
            .map_err(|e| CliError::Validation(format!("cluster.skill_measure: {e}")))?;
        let piece_measure = self
            .piece_measure
            .clone()
            .map(Distribution::new)
            .transpose()
            .map_err(|e| CliError::Validation(format!("cluster.piece_measure: {e}")))?;
        Ok(ClusterConfig {
            num_skills: self.num_skills,
            num_pieces: self.num_pieces,
            k: self.k,
            skill_measure,
            piece_measure,
            require_full_coverage: self.require_full_coverage,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaGridSettings {
    pub points: usize,
    pub min: f64,
    pub max: f64,
}

impl Default for AlphaGridSettings {
    fn default() -> Self {
        Self {
            points: DEFAULT_ALPHA_POINTS,
            min: DEFAULT_ALPHA_MIN,
            max: DEFAULT_ALPHA_MAX,
        }
    }
}

impl AlphaGridSettings {
    pub fn to_grid(&self) -> Result<Vec<f64>, CliError> {
        if self.points < 2 || !(self.min > 0.0) || !(self.max > self.min) || !(self.max < 1.0) {
            return Err(CliError::Validation(format!(
                "alpha_grid: needs points >= 2 and 0 < min < max < 1, got {self:?}"
            )));
        }
        Ok(log_spaced_grid(self.min, self.max, self.points))
    }
}

/// Which boundary points count as part of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFilter {
    /// βθ < 1/2: the certified bound leaves majority competence.
    #[default]
    Majority,
    /// βθ < 1: drops only fully vacuous bounds.
    SubVacuous,
    /// Whole boundary, however weak the bound.
    Unfiltered,
}

impl CurveFilter {
    pub fn max_beta_theta(self) -> Option<f64> {
        match self {
            CurveFilter::Majority => Some(MAJORITY_BETA_THETA),
            CurveFilter::SubVacuous => Some(1.0),
            CurveFilter::Unfiltered => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaucitySettings {
    pub tokens: f64,
    pub per_decade_multiplier: f64,
    pub skill_count: f64,
    pub tuple_size: u32,
    pub margin_decades: f64,
}

impl Default for PaucitySettings {
    fn default() -> Self {
        Self {
            tokens: 1e10,
            per_decade_multiplier: 10.0,
            skill_count: 1e4,
            tuple_size: 8,
            margin_decades: 1.0,
        }
    }
}

/// Per-check budgets for the verification suite; zero skips a check and
/// the report says so.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBudgets {
    pub identity_samples: u64,
    pub pinsker_samples: u64,
    pub bisection_triples: u64,
    pub guarantee_trials: u64,
    pub universality_graphs: u64,
}

impl Default for VerifyBudgets {
    fn default() -> Self {
        Self {
            identity_samples: 10_000,
            pinsker_samples: 10_000,
            bisection_triples: 25,
            guarantee_trials: 40,
            universality_graphs: 100,
        }
    }
}

impl RunConfig {
    /// Loads a config file, or the built-in defaults when no path is given,
    /// then applies command-line overrides.
    pub fn load(
        path: Option<&Path>,
        seed_override: Option<u64>,
        trials_override: Option<u32>,
    ) -> Result<Self, CliError> {
        let mut config: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::Validation(format!("{}: {e}", p.display()))
                })?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = seed_override {
            config.seed = seed;
        }
        if let Some(trials) = trials_override {
            config.trials = trials;
        }
        config.validate()?;
        Ok(config)
    }

    /// Field-level validation beyond what types enforce.
    pub fn validate(&self) -> Result<(), CliError> {
        self.scaling_law
            .validate()
            .map_err(|e| CliError::Validation(format!("scaling_law: {e}")))?;
        if self.schedule.is_empty() {
            return Err(CliError::Validation(
                "schedule: needs at least one (params, tokens) point".into(),
            ));
        }
        for (i, point) in self.schedule.iter().enumerate() {
            if !(point.params > 0.0) || !(point.tokens > 0.0) {
                return Err(CliError::Validation(format!(
                    "schedule[{i}]: params and tokens must be positive"
                )));
            }
            if let Some(delta) = point.delta_override {
                if !(delta > 0.0) {
                    return Err(CliError::Validation(format!(
                        "schedule[{i}].delta_override: must be positive"
                    )));
                }
            }
        }
        if self.cluster.num_skills == 0 || self.cluster.num_pieces == 0 || self.cluster.k == 0 {
            return Err(CliError::Validation(
                "cluster: num_skills, num_pieces and k must all be at least 1".into(),
            ));
        }
        if self.tuple_sizes.is_empty() || self.tuple_sizes.iter().any(|&k| k == 0) {
            return Err(CliError::Validation(
                "tuple_sizes: needs at least one size, all of them >= 1".into(),
            ));
        }
        if self.trials == 0 {
            return Err(CliError::Validation("trials: must be at least 1".into()));
        }
        for (i, c) in self.curves.iter().enumerate() {
            if !(c.theta > 0.0 && c.theta < 1.0) || c.k == 0 || c.kprime == 0 {
                return Err(CliError::Validation(format!(
                    "curves[{i}]: needs 0 < theta < 1, k >= 1, kprime >= 1"
                )));
            }
        }
        self.alpha_grid.to_grid()?;
        Ok(())
    }

    /// Ratio warning for the simulated cluster, if any.
    pub fn ratio_warning(&self) -> Option<String> {
        let ratio = self.cluster.num_pieces as f64 / self.cluster.num_skills as f64;
        (ratio < self.cluster.min_piece_skill_ratio).then(|| {
            format!(
                "cluster has only {ratio:.1} pieces per skill (recommended at least {}); \
                 the asymptotic guarantees may be loose",
                self.cluster.min_piece_skill_ratio
            )
        })
    }
}
