//! Seeded experiment trajectories: each scale point turns excess entropy
//! into an error fraction, plants error sets on fresh clusters, and records
//! competence distributions for skills and skill-tuples next to the
//! theoretical curve overlays.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use emergence_core::curves::{points_to_csv, tuple_curve_from_loss_filtered, CurveError};
use emergence_core::graph::{
    recombine, sample_error_set, skill_error_profile, tuple_competence, SkillCluster,
};
use emergence_core::scaling::theta_from_loss;
use emergence_core::seeding::derive_seed;

use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::CliError;

const STREAM_CLUSTER: u64 = 0;
const STREAM_ERROR: u64 = 1;
const STREAM_RECOMBINE: u64 = 2;
const STREAM_TUPLES: u64 = 3;

fn stream_id(point: usize, purpose: u64, slot: usize) -> u64 {
    ((point as u64) << 16) | (purpose << 8) | slot as u64
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompetenceStats {
    pub samples: u64,
    /// Zero-degree skills or unsupported tuples, reported rather than
    /// counted as zeros.
    pub undefined: u64,
    pub mean: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

impl CompetenceStats {
    fn from_values(mut values: Vec<f64>, undefined: u64) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        let samples = values.len() as u64;
        if values.is_empty() {
            return Self {
                samples,
                undefined,
                mean: 0.0,
                p10: 0.0,
                p50: 0.0,
                p90: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let quantile = |q: f64| {
            let idx = ((values.len() - 1) as f64 * q).round() as usize;
            values[idx]
        };
        Self {
            samples,
            undefined,
            mean,
            p10: quantile(0.1),
            p50: quantile(0.5),
            p90: quantile(0.9),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KprimeReport {
    pub kprime: u32,
    /// Whether the theory applies at this tuple size (2δk' < 1).
    pub applicable: bool,
    pub effective_theta: f64,
    pub curve_file: Option<String>,
    pub curve_points: usize,
    /// Pooled competence over every trial.
    pub pooled: CompetenceStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub index: usize,
    pub params: f64,
    pub tokens: f64,
    pub loss: f64,
    pub excess_entropy: f64,
    /// Per-piece loss fed to the error-fraction map (scaling-law excess
    /// unless the schedule overrides it).
    pub delta: f64,
    pub theta: f64,
    /// False once θ reaches 1: the analysis has nothing to certify.
    pub applicable: bool,
    pub competence_file: Option<String>,
    pub kprime_reports: Vec<KprimeReport>,
}

#[derive(Debug, Serialize)]
pub struct TrajectoryReport {
    pub points: Vec<PointReport>,
}

struct TrialOutcome {
    rows: Vec<(u32, CompetenceStats)>,
    values: Vec<(u32, Vec<f64>)>,
}

fn run_trial(
    config: &RunConfig,
    point: usize,
    theta: f64,
    trial: u32,
) -> Result<TrialOutcome, CliError> {
    let master = config.seed;
    let cluster_seed = derive_seed(master, stream_id(point, STREAM_CLUSTER, 0), trial as u64);
    let cluster = SkillCluster::generate(&config.cluster.to_cluster_config(cluster_seed)?)?;
    let error_seed = derive_seed(master, stream_id(point, STREAM_ERROR, 0), trial as u64);
    let y = sample_error_set(&cluster, theta, config.error_mode, error_seed)?;

    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (slot, &kprime) in config.tuple_sizes.iter().enumerate() {
        let (competences, undefined) = if kprime == 1 {
            let profile = skill_error_profile(&cluster, &y);
            let undefined = profile.iter().filter(|r| r.zero_degree).count() as u64;
            let competences: Vec<f64> = profile
                .iter()
                .filter(|r| !r.zero_degree)
                .map(|r| 1.0 - r.fraction)
                .collect();
            (competences, undefined)
        } else {
            if (kprime as usize) > cluster.num_pieces() {
                rows.push((kprime, CompetenceStats::from_values(Vec::new(), 0)));
                continue;
            }
            let rec_seed =
                derive_seed(master, stream_id(point, STREAM_RECOMBINE, slot), trial as u64);
            let rec = recombine(&cluster, kprime as usize, rec_seed)?;
            let lifted = rec.lift_error_set(&y)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                master,
                stream_id(point, STREAM_TUPLES, slot),
                trial as u64,
            ));
            let mut competences = Vec::with_capacity(config.tuple_samples as usize);
            let mut undefined = 0u64;
            for _ in 0..config.tuple_samples {
                // Sample a tuple that actually occurs: take k' distinct
                // skills off a random recombined piece.
                let piece = rng.gen_range(0..rec.cluster.num_pieces());
                let mut skills = rec.cluster.piece_endpoints(piece).to_vec();
                skills.sort_unstable();
                skills.dedup();
                if skills.len() < kprime as usize {
                    undefined += 1;
                    continue;
                }
                let tuple: Vec<u32> = skills
                    .choose_multiple(&mut rng, kprime as usize)
                    .copied()
                    .collect();
                match tuple_competence(&rec.cluster, &lifted, &tuple)? {
                    Some(c) => competences.push(c),
                    None => undefined += 1,
                }
            }
            (competences, undefined)
        };
        rows.push((kprime, CompetenceStats::from_values(competences.clone(), undefined)));
        values.push((kprime, competences));
    }
    Ok(TrialOutcome { rows, values })
}

/// Runs the configured schedule and writes one competence CSV per scale
/// point, one curve CSV per (point, tuple size), and a summary JSON.
pub fn run_trajectory(
    config: &RunConfig,
    out_dir: &Path,
) -> Result<(RunManifest, TrajectoryReport), CliError> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("simulate", config);
    if let Some(warning) = config.ratio_warning() {
        manifest.warnings.push(warning);
    }
    let grid = config.alpha_grid.to_grid()?;
    let cutoff = config.curve_filter.max_beta_theta();
    let mut points = Vec::new();

    for (i, scale) in config.schedule.iter().enumerate() {
        let loss = config.scaling_law.loss(scale.params, scale.tokens)?;
        let excess = config.scaling_law.excess_entropy(scale.params, scale.tokens)?;
        let delta = scale.delta_override.unwrap_or(excess);
        let theta = theta_from_loss(delta)?;
        let applicable = theta < 1.0;

        let mut kprime_reports = Vec::new();
        for &kprime in &config.tuple_sizes {
            let effective_theta = 2.0 * delta * kprime as f64;
            if !applicable {
                kprime_reports.push(KprimeReport {
                    kprime,
                    applicable: false,
                    effective_theta,
                    curve_file: None,
                    curve_points: 0,
                    pooled: CompetenceStats::from_values(Vec::new(), 0),
                });
                continue;
            }
            match tuple_curve_from_loss_filtered(delta, config.cluster.k as u32, kprime, &grid, cutoff)
            {
                Ok(curve) => {
                    let name = format!("point{i}_curve_kprime{kprime}.csv");
                    manifest.write_output(out_dir, &name, points_to_csv(&curve).as_bytes())?;
                    kprime_reports.push(KprimeReport {
                        kprime,
                        applicable: true,
                        effective_theta,
                        curve_file: Some(name),
                        curve_points: curve.len(),
                        pooled: CompetenceStats::from_values(Vec::new(), 0),
                    });
                }
                Err(CurveError::TupleLoss(t)) => {
                    kprime_reports.push(KprimeReport {
                        kprime,
                        applicable: false,
                        effective_theta: t,
                        curve_file: None,
                        curve_points: 0,
                        pooled: CompetenceStats::from_values(Vec::new(), 0),
                    });
                }
                Err(e) => return Err(e.into()),
            }
        }

        let mut competence_file = None;
        if applicable {
            let outcomes: Vec<TrialOutcome> = (0..config.trials)
                .into_par_iter()
                .map(|trial| run_trial(config, i, theta, trial))
                .collect::<Result<_, _>>()?;

            let mut csv = String::from("kind,kprime,trial,samples,undefined,mean,p10,p50,p90\n");
            for (trial, outcome) in outcomes.iter().enumerate() {
                for (kprime, stats) in &outcome.rows {
                    let kind = if *kprime == 1 { "skill" } else { "tuple" };
                    csv.push_str(&format!(
                        "{kind},{kprime},{trial},{},{},{},{},{},{}\n",
                        stats.samples,
                        stats.undefined,
                        stats.mean,
                        stats.p10,
                        stats.p50,
                        stats.p90
                    ));
                }
            }
            let name = format!("point{i}_competence.csv");
            manifest.write_output(out_dir, &name, csv.as_bytes())?;
            competence_file = Some(name);

            // Pool competence values across trials per tuple size.
            for report in kprime_reports.iter_mut() {
                let mut pooled = Vec::new();
                let mut undefined = 0;
                for outcome in &outcomes {
                    for (kprime, values) in &outcome.values {
                        if *kprime == report.kprime {
                            pooled.extend_from_slice(values);
                        }
                    }
                    for (kprime, stats) in &outcome.rows {
                        if *kprime == report.kprime {
                            undefined += stats.undefined;
                        }
                    }
                }
                report.pooled = CompetenceStats::from_values(pooled, undefined);
            }
            manifest
                .trial_counts
                .insert(format!("point{i}_trials"), config.trials as u64);
        } else {
            manifest.warnings.push(format!(
                "point {i}: theta = {theta} reaches 1, theory inapplicable; no curves emitted"
            ));
        }

        points.push(PointReport {
            index: i,
            params: scale.params,
            tokens: scale.tokens,
            loss,
            excess_entropy: excess,
            delta,
            theta,
            applicable,
            competence_file,
            kprime_reports,
        });
    }

    let report = TrajectoryReport { points };
    let summary = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Validation(format!("summary serialization: {e}")))?;
    manifest.write_output(out_dir, "trajectory_summary.json", summary.as_bytes())?;
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(out_dir)?;
    Ok((manifest, report))
}
